//! Left-invariant metrics on ℝⁿ⋊so(3) with nontrivial curvature nullity.
//!
//! Pipeline: irrep → filtration 𝕍₀ ⊂ 𝕍₁ ⊂ … ⊂ 𝕍_d = ℝⁿ → frame (w, v, z, v′, λ)
//! → metric with cross terms ⟨v′,w⟩ = a, ⟨v′,z⟩ = b → genericity → structure.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{min_eigenvalue, HomogeneousModel};
use crate::nullity::{self, NullityReport, NullityStructure, REPORT_TOL};
use crate::representation::{semidirect, so3_irrep, Representation};
use crate::subspace::{Subspace, DEFAULT_TOL};

pub const DEFAULT_A: f64 = 0.1;
pub const DEFAULT_B: f64 = 0.05;
pub const GENERICITY_IDENTITY_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct ConstructionFrame {
    /// 𝕍₀ ⊂ … ⊂ 𝕍_d = ℝⁿ.
    pub filtration: Vec<Subspace>,
    pub d: usize,
    /// 𝔨-coordinates.
    pub w: DVector<f64>,
    pub w_index: usize,
    /// ℝⁿ-coordinates, a basis vector of 𝕍_{d−1}.
    pub v: DVector<f64>,
    pub v_index: usize,
    /// 𝔨-coordinates, ⟨z,z⟩′ = 1, ⟨z,w⟩′ = 0.
    pub z: DVector<f64>,
    /// Component of [w,v] orthogonal to 𝕍_{d−1} (not normalized).
    pub v_prime: DVector<f64>,
    /// [v,z] = λv′ + u with u ⊥ v′ (canonical inner product on ℝⁿ).
    pub lambda: f64,
    pub a: f64,
    pub b: f64,
}

impl ConstructionFrame {
    pub fn filtration_dims(&self) -> Vec<usize> {
        self.filtration.iter().map(|s| s.dim()).collect()
    }

    /// Frame vectors embedded in 𝔤 = ℝⁿ ⊕ 𝔨.
    pub fn embed_k(&self, n: usize, x: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(n + x.len());
        out.rows_mut(n, x.len()).copy_from(x);
        out
    }

    pub fn embed_p(&self, m: usize, x: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(x.len() + m);
        out.rows_mut(0, x.len()).copy_from(x);
        out
    }
}

/// 𝕍_{i+1} = 𝕍ᵢ + [𝔨, 𝕍ᵢ] until ℝⁿ; returns the chain and the minimal depth d.
pub fn filtration(rep: &Representation, v0: &Subspace) -> Result<(Vec<Subspace>, usize)> {
    let n = rep.n();
    if v0.ambient_dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: v0.ambient_dim() });
    }
    if v0.is_zero() {
        return Err(Error::Precondition("𝕍₀ must be nonzero".into()));
    }
    let mut chain = vec![v0.clone()];
    while !chain.last().unwrap().is_full() {
        let cur = chain.last().unwrap();
        let mut vs = cur.basis_vectors();
        for g in rep.generators() {
            for b in cur.basis_vectors() {
                vs.push(g * b);
            }
        }
        let next = Subspace::span_of(n, &vs, cur.tol())?;
        if next.dim() == cur.dim() {
            return Err(Error::NotIrreducible { stalled_at: cur.dim(), n });
        }
        chain.push(next);
    }
    let d = chain.len() - 1;
    Ok((chain, d))
}

fn k_inner_product(k: &DMatrix<f64>, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
    (x.transpose() * k * y)[(0, 0)]
}

/// Deterministic frame: largest ‖proj_{𝕍_{d−1}^⊥}[w,v]‖ over 𝔨-basis × 𝕍_{d−1}-basis
/// (first in index order on ties); z = first ⟨,⟩′-orthonormalized basis vector ⊥ w.
pub fn choose_frame(
    rep: &Representation,
    filtration: &[Subspace],
    d: usize,
    k_inner: &DMatrix<f64>,
) -> Result<ConstructionFrame> {
    let n = rep.n();
    let m = rep.k_algebra().dim();
    if d < 2 || filtration.len() != d + 1 {
        return Err(Error::ConstructionImpossible(format!("frame needs depth d ≥ 2 (got d = {d})")));
    }
    if m < 2 {
        return Err(Error::ConstructionImpossible("dim 𝔨 < 2: no z orthogonal to w".into()));
    }
    let vd1 = &filtration[d - 1];
    let perp = DMatrix::identity(n, n) - vd1.projector();
    let mut best: Option<(f64, usize, usize, DVector<f64>)> = None;
    for (a, g) in rep.generators().iter().enumerate() {
        for (i, v) in vd1.basis_vectors().iter().enumerate() {
            let p = &perp * (g * v);
            let nrm = p.norm();
            if best.as_ref().map_or(true, |(b, ..)| nrm > b + 1e-12) {
                best = Some((nrm, a, i, p));
            }
        }
    }
    let (nrm, w_index, v_index, v_prime) = best.ok_or_else(|| Error::ConstructionImpossible("empty search".into()))?;
    if nrm <= DEFAULT_TOL {
        return Err(Error::ConstructionImpossible(format!(
            "no (w, v) with [w, v] ∉ 𝕍_{} (max projection {nrm:e})",
            d - 1
        )));
    }
    let mut w = DVector::zeros(m);
    w[w_index] = 1.0;
    let v = vd1.basis().column(v_index).into_owned();

    let ww = k_inner_product(k_inner, &w, &w);
    let mut z = None;
    for j in 0..m {
        let mut c = DVector::zeros(m);
        c[j] = 1.0;
        let c = &c - &w * (k_inner_product(k_inner, &c, &w) / ww);
        let cc = k_inner_product(k_inner, &c, &c);
        if cc > 1e-12 {
            z = Some(c / cc.sqrt());
            break;
        }
    }
    let z = z.ok_or_else(|| Error::ConstructionImpossible("no z orthogonal to w".into()))?;

    // [v, z] = −ρ(z) v
    let vz = -(rep.action(z.as_slice()) * &v);
    let lambda = vz.dot(&v_prime) / v_prime.dot(&v_prime);
    Ok(ConstructionFrame {
        filtration: filtration.to_vec(),
        d,
        w,
        w_index,
        v,
        v_index,
        z,
        v_prime,
        lambda,
        a: 0.0,
        b: 0.0,
    })
}

/// Metric: identity on ℝⁿ, `k_inner` on 𝔨, and cross terms
/// `g(p, k) = (p·v′)/(v′·v′) · φ(k)` with φ(w) = a, φ(z) = b, φ = 0 on the ⟨,⟩′-complement.
pub fn build_metric(
    rep: &Representation,
    frame: &ConstructionFrame,
    a: f64,
    b: f64,
    k_inner: &DMatrix<f64>,
) -> Result<HomogeneousModel> {
    let n = rep.n();
    let m = rep.k_algebra().dim();
    if k_inner.nrows() != m || k_inner.ncols() != m {
        return Err(Error::InvalidMetric(format!("k_inner must be {m}×{m}")));
    }
    if (k_inner - k_inner.transpose()).amax() > 1e-12 || !(min_eigenvalue(k_inner) > 0.0) {
        return Err(Error::InvalidMetric("k_inner must be symmetric positive definite".into()));
    }
    let wn = k_inner_product(k_inner, &frame.w, &frame.w).sqrt();
    // φ(k) = ⟨k, (a/|w|′²) w + b z⟩′
    let f = k_inner * (&frame.w * (a / (wn * wn)) + &frame.z * b);
    let cross = &frame.v_prime * f.transpose() / frame.v_prime.dot(&frame.v_prime);
    let mut g = DMatrix::identity(n + m, n + m);
    g.view_mut((n, n), (m, m)).copy_from(k_inner);
    g.view_mut((0, n), (n, m)).copy_from(&cross);
    g.view_mut((n, 0), (m, n)).copy_from(&cross.transpose());
    let min_eig = min_eigenvalue(&g);
    if !(min_eig > 0.0) {
        return Err(Error::ParametersTooLarge { min_eigenvalue: min_eig });
    }
    HomogeneousModel::new(semidirect(rep)?, g)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Genericity {
    pub lambda: f64,
    pub b_plus_lambda_a: f64,
    /// −2g(Λ(w, v), z): the pairing in the structure-bracket sign convention.
    pub nabla_pairing: f64,
    pub identity_residual: f64,
    pub pass: bool,
}

pub fn genericity_certificate(model: &HomogeneousModel, frame: &ConstructionFrame) -> Genericity {
    let m = frame.w.len();
    let n = model.dim() - m;
    let w = frame.embed_k(n, &frame.w);
    let v = frame.embed_p(m, &frame.v);
    let z = frame.embed_k(n, &frame.z);
    let pairing = -2.0 * model.inner(&model.lambda(&w, &v), &z);
    let bla = frame.b + frame.lambda * frame.a;
    Genericity {
        lambda: frame.lambda,
        b_plus_lambda_a: bla,
        nabla_pairing: pairing,
        identity_residual: (pairing - bla).abs(),
        pass: bla.abs() > 1e-6 * frame.a.abs().max(frame.b.abs()).max(1.0),
    }
}

/// b as a literal value, or forced onto the degenerate line b = −λa.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum BChoice {
    Value(f64),
    Degenerate,
}

#[derive(Clone, Debug)]
pub struct ConstructionParams {
    pub n: usize,
    pub v0_dim: usize,
    pub a: f64,
    pub b: BChoice,
    /// Inner product on 𝔨; identity when `None`.
    pub k_inner: Option<DMatrix<f64>>,
}

impl ConstructionParams {
    pub fn new(n: usize, v0_dim: usize, a: f64, b: f64) -> Self {
        ConstructionParams { n, v0_dim, a, b: BChoice::Value(b), k_inner: None }
    }
}

/// Dimension hypothesis dim 𝕍₀ · (1 + dim 𝔨) < n with dim 𝔨 = 3.
pub fn check_hypothesis(n: usize, v0_dim: usize) -> Result<()> {
    if v0_dim == 0 {
        return Err(Error::Hypothesis("v0_dim must be at least 1".into()));
    }
    if v0_dim * 4 >= n {
        return Err(Error::Hypothesis(format!(
            "requires dim V0 · (1 + dim K) < n, but {v0_dim} · 4 = {} ≥ {n}",
            v0_dim * 4
        )));
    }
    Ok(())
}

/// Construction-level guarantees, checked on the built model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Postcondition {
    /// 𝕍₀ ⊂ ν.
    pub v0_in_nu: f64,
    /// 𝕍_{d−3} ⊂ ν (d ≥ 3 only).
    pub v_d3_in_nu: Option<f64>,
    /// 𝕍_{d−2} ⊂ ν: recorded, not gating (fails in general, see README).
    pub v_d2_in_nu: f64,
    /// Largest ‖B_x‖ for x ∈ 𝕍_{d−2}: these are transvections at e.
    pub v_d2_transvection: f64,
    /// ‖B_v‖ for the frame's v ∈ 𝕍_{d−1}: nonzero certifies a non-transvection.
    pub frame_v_op_norm: f64,
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct Example {
    pub params: ConstructionParams,
    pub rep: Representation,
    pub model: HomogeneousModel,
    pub frame: ConstructionFrame,
    pub genericity: Genericity,
    pub structure: NullityStructure,
    pub report: NullityReport,
    pub postcondition: Postcondition,
}

impl Example {
    /// Everything the construction promises: postcondition, genericity, structure flags.
    pub fn pass(&self) -> bool {
        self.postcondition.pass && self.genericity.pass && self.report.pass
    }
}

pub fn construct_example(n: usize, v0_dim: usize, a: f64, b: f64) -> Result<Example> {
    construct(&ConstructionParams::new(n, v0_dim, a, b))
}

fn embed_rows(sub: &Subspace, d: usize) -> Subspace {
    let mut m = DMatrix::zeros(d, sub.dim());
    m.view_mut((0, 0), (sub.ambient_dim(), sub.dim())).copy_from(sub.basis());
    Subspace::from_columns(&m, sub.tol())
}

pub fn construct(params: &ConstructionParams) -> Result<Example> {
    check_hypothesis(params.n, params.v0_dim)?;
    let rep = so3_irrep(params.n).map_err(|e| e.at("representation"))?;
    let m = rep.k_algebra().dim();
    let k_inner = params.k_inner.clone().unwrap_or_else(|| DMatrix::identity(m, m));
    let v0 = Subspace::span_of(
        params.n,
        &(0..params.v0_dim)
            .map(|i| {
                let mut e = DVector::zeros(params.n);
                e[i] = 1.0;
                e
            })
            .collect::<Vec<_>>(),
        DEFAULT_TOL,
    )?;
    let (chain, d) = filtration(&rep, &v0).map_err(|e| e.at("filtration"))?;
    let mut frame = choose_frame(&rep, &chain, d, &k_inner).map_err(|e| e.at("frame"))?;
    let b = match params.b {
        BChoice::Value(b) => b,
        BChoice::Degenerate => -frame.lambda * params.a,
    };
    frame.a = params.a;
    frame.b = b;
    let model = build_metric(&rep, &frame, params.a, b, &k_inner).map_err(|e| e.at("metric"))?;
    let model = match std::env::var(crate::TOL_ENV).ok().and_then(|s| s.parse::<f64>().ok()) {
        Some(t) => model.with_tol(t),
        None => model,
    };
    let genericity = genericity_certificate(&model, &frame);
    let structure = nullity::analyze(&model);
    let report = nullity::report_for(&model, &structure);

    let dim = model.dim();
    let nu = &structure.nu;
    let v0_in_nu = nu.containment_residual(&embed_rows(&chain[0], dim))?;
    let v_d3_in_nu = if d >= 3 { Some(nu.containment_residual(&embed_rows(&chain[d - 3], dim))?) } else { None };
    let vd2 = embed_rows(&chain[d - 2], dim);
    let v_d2_in_nu = nu.containment_residual(&vd2)?;
    let scale = nullity::connection_scale(&model).max(1.0);
    let v_d2_transvection =
        vd2.basis_vectors().iter().map(|x| model.op(x).amax()).fold(0.0, f64::max) / scale;
    let frame_v_op_norm = model.op(&frame.embed_p(m, &frame.v)).amax();
    let pass = v0_in_nu <= REPORT_TOL
        && v_d3_in_nu.map_or(true, |r| r <= REPORT_TOL)
        && v_d2_transvection <= REPORT_TOL
        && frame_v_op_norm > REPORT_TOL;
    let postcondition = Postcondition { v0_in_nu, v_d3_in_nu, v_d2_in_nu, v_d2_transvection, frame_v_op_norm, pass };
    Ok(Example { params: params.clone(), rep, model, frame, genericity, structure, report, postcondition })
}

#[derive(Clone, Debug)]
pub struct SweepGrid {
    pub n: Vec<usize>,
    pub v0_dim: Vec<usize>,
    pub a: Vec<f64>,
    pub b: Vec<BChoice>,
}

impl Default for SweepGrid {
    fn default() -> Self {
        SweepGrid {
            n: vec![5, 7, 9],
            v0_dim: vec![1, 2],
            a: vec![DEFAULT_A, 0.2],
            b: vec![BChoice::Value(DEFAULT_B), BChoice::Value(-0.1)],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub v0_dim: usize,
    pub a: f64,
    pub b: f64,
    pub admissible: bool,
    pub note: Option<String>,
    pub d: Option<usize>,
    pub lambda: Option<f64>,
    pub dim_nu: Option<usize>,
    pub dim_nu1: Option<usize>,
    pub dim_nu2: Option<usize>,
    #[serde(rename = "dim_U")]
    pub dim_u: Option<usize>,
    pub genericity: Option<bool>,
    /// Postcondition and every structure flag (nontrivial branch required).
    pub structure_pass: Option<bool>,
}

impl SweepRow {
    /// Inadmissible rows never fail; admissible rows need genericity and structure.
    pub fn pass(&self) -> bool {
        !self.admissible || (self.genericity == Some(true) && self.structure_pass == Some(true))
    }
}

pub fn sweep_row(params: &ConstructionParams) -> SweepRow {
    let mut row = SweepRow {
        n: params.n,
        v0_dim: params.v0_dim,
        a: params.a,
        b: match params.b {
            BChoice::Value(b) => b,
            BChoice::Degenerate => f64::NAN,
        },
        admissible: true,
        note: None,
        d: None,
        lambda: None,
        dim_nu: None,
        dim_nu1: None,
        dim_nu2: None,
        dim_u: None,
        genericity: None,
        structure_pass: None,
    };
    if let Err(e) = check_hypothesis(params.n, params.v0_dim) {
        row.admissible = false;
        row.note = Some(e.to_string());
        return row;
    }
    match construct(params) {
        Ok(ex) => {
            let dims = ex.report.dims.clone();
            row.b = ex.frame.b;
            row.d = Some(ex.frame.d);
            row.lambda = Some(ex.frame.lambda);
            row.dim_nu = Some(dims.dim_nu);
            row.dim_nu1 = Some(dims.dim_nu1);
            row.dim_nu2 = Some(dims.dim_nu2);
            row.dim_u = Some(dims.dim_u);
            row.genericity = Some(ex.genericity.pass);
            let nontrivial = !ex.report.branch.is_trivial();
            row.structure_pass = Some(nontrivial && ex.report.pass && ex.postcondition.pass);
            if !ex.postcondition.pass {
                row.note = Some(format!("V0 not contained in nullity (residual {:.3e})", ex.postcondition.v0_in_nu));
            } else if !nontrivial {
                row.note = Some(format!("trivial nullity branch: {:?}", ex.report.branch));
            }
        }
        Err(e) => {
            if let BChoice::Degenerate = params.b {
                row.b = f64::NAN;
            }
            row.note = Some(e.to_string());
            row.genericity = Some(false);
            row.structure_pass = Some(false);
        }
    }
    row
}

/// One row per grid cell, in grid order (n, v0_dim, a, b); cells run in parallel.
pub fn sweep(grid: &SweepGrid) -> Vec<SweepRow> {
    let mut cells = Vec::new();
    for &n in &grid.n {
        for &v in &grid.v0_dim {
            for &a in &grid.a {
                for &b in &grid.b {
                    cells.push(ConstructionParams { n, v0_dim: v, a, b, k_inner: None });
                }
            }
        }
    }
    cells.par_iter().map(sweep_row).collect()
}
