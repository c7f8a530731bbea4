//! Geodesics, parallel transport and Killing fields in left trivialization.
//!
//! A curve g(t) is tracked through its body velocity ξ = g⁻¹ġ. With
//! N(x, y) = ∇_x y on left-invariant fields (= Λ(x, y) + [x, y]):
//! geodesics solve ξ′ = −N(ξ, ξ), transported vectors u′ = −N(ξ, u), and the
//! Killing field of z reads Ad_{g(t)⁻¹} z.

use std::io::Write;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::{expm, HomogeneousModel};
use crate::lie::LieAlgebra;
use crate::nullity::{self, REPORT_TOL};

/// Block structure used to realize group elements: a leading abelian ideal
/// 𝔭 = span(e_0..e_{n−1}) and a complementary subalgebra 𝔨 acting on it.
/// n = 0 always qualifies (then the rotation part is the full adjoint group).
#[derive(Clone, Debug)]
pub struct GroupChart {
    pub n_block: usize,
    /// ad(𝔨) skew-symmetric in coordinates: rotation parts are orthogonal.
    pub skew: bool,
}

impl GroupChart {
    pub fn detect(alg: &LieAlgebra) -> Self {
        let d = alg.dim();
        let n_block = (0..=d).rev().find(|&n| block_ok(alg, n)).unwrap_or(0);
        let skew = (n_block..d).all(|x| {
            let ad = alg.ad(&alg.basis_vector(x));
            (&ad + ad.transpose()).amax() <= 1e-12
        });
        GroupChart { n_block, skew }
    }
}

fn block_ok(alg: &LieAlgebra, n: usize) -> bool {
    let d = alg.dim();
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                let c = alg.c(i, j, k);
                if c == 0.0 {
                    continue;
                }
                let (pi, pj, pk) = (i < n, j < n, k < n);
                let bad = (pi && pj) // 𝔭 abelian
                    || ((pi ^ pj) && !pk) // [𝔨, 𝔭] ⊂ 𝔭
                    || (!pi && !pj && pk); // [𝔨, 𝔨] ⊂ 𝔨
                if bad {
                    return false;
                }
            }
        }
    }
    true
}

/// g = (p, k): `translation` = p ∈ 𝔭, `rotation` = Ad_k on all of 𝔤
/// (block-diagonal: ρ(k) on 𝔭, Ad_k on 𝔨).
#[derive(Clone, Debug, PartialEq)]
pub struct GroupElement {
    pub translation: DVector<f64>,
    pub rotation: DMatrix<f64>,
}

impl GroupElement {
    pub fn identity(chart: &GroupChart, d: usize) -> Self {
        GroupElement { translation: DVector::zeros(chart.n_block), rotation: DMatrix::identity(d, d) }
    }

    /// Ad_{g⁻¹} x = Ad_k⁻¹ (x + [x, p]).
    pub fn ad_inverse(&self, alg: &LieAlgebra, x: &DVector<f64>) -> DVector<f64> {
        let d = alg.dim();
        let mut p = DVector::zeros(d);
        p.rows_mut(0, self.translation.len()).copy_from(&self.translation);
        let y = x + alg.bracket_unchecked(x, &p);
        let inv = self.rotation.clone().try_inverse().expect("adjoint matrices are invertible");
        inv * y
    }

    pub fn orthogonality_defect(&self) -> f64 {
        let d = self.rotation.nrows();
        (self.rotation.transpose() * &self.rotation - DMatrix::identity(d, d)).amax()
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub elements: Vec<GroupElement>,
    pub body_velocity: Vec<DVector<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Left-trivialized connection operators.
struct LeftOps<'a> {
    model: &'a HomogeneousModel,
}

impl LeftOps<'_> {
    /// N(x, y) = Λ(x, y) + [x, y].
    fn n(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        self.model.lambda(x, y) + self.model.algebra().bracket_unchecked(x, y)
    }

    /// Matrix of y ↦ N(x, y).
    fn n_op(&self, x: &DVector<f64>) -> DMatrix<f64> {
        self.model.connection().op_first(x) + self.model.algebra().ad(x)
    }
}

fn polar(q: &DMatrix<f64>) -> DMatrix<f64> {
    // Newton iteration for the orthogonal polar factor; q is already close.
    let mut x = q.clone();
    for _ in 0..3 {
        let inv_t = match x.clone().try_inverse() {
            Some(i) => i.transpose(),
            None => return x,
        };
        x = (&x + inv_t) * 0.5;
    }
    x
}

fn k_ad(alg: &LieAlgebra, chart: &GroupChart, xi: &DVector<f64>) -> DMatrix<f64> {
    let mut k = xi.clone();
    k.rows_mut(0, chart.n_block).fill(0.0);
    alg.ad(&k)
}

/// Fixed-step RK4 geodesic from e with initial body velocity v0.
pub fn geodesic(model: &HomogeneousModel, v0: &DVector<f64>, t_end: f64, h: f64) -> Result<Trajectory> {
    let d = model.dim();
    if v0.len() != d {
        return Err(Error::DimensionMismatch { expected: d, found: v0.len() });
    }
    if !(h > 0.0) || !(t_end >= 0.0) {
        return Err(Error::Precondition(format!("need h > 0 and T ≥ 0 (h = {h}, T = {t_end})")));
    }
    let alg = model.algebra();
    let chart = GroupChart::detect(alg);
    let ops = LeftOps { model };
    let n = chart.n_block;
    let steps = (t_end / h).round() as usize;

    let rhs = |xi: &DVector<f64>, q: &DMatrix<f64>| -> (DVector<f64>, DVector<f64>, DMatrix<f64>) {
        let dxi = -ops.n(xi, xi);
        let dp = q.view((0, 0), (n, n)) * xi.rows(0, n);
        let dq = q * k_ad(alg, &chart, xi);
        (dxi, dp, dq)
    };

    let mut xi = v0.clone();
    let mut g = GroupElement::identity(&chart, d);
    let mut traj = Trajectory { times: vec![0.0], elements: vec![g.clone()], body_velocity: vec![xi.clone()] };
    for s in 0..steps {
        let (k1x, k1p, k1q) = rhs(&xi, &g.rotation);
        let (k2x, k2p, k2q) = rhs(&(&xi + &k1x * (h / 2.0)), &(&g.rotation + &k1q * (h / 2.0)));
        let (k3x, k3p, k3q) = rhs(&(&xi + &k2x * (h / 2.0)), &(&g.rotation + &k2q * (h / 2.0)));
        let (k4x, k4p, k4q) = rhs(&(&xi + &k3x * h), &(&g.rotation + &k3q * h));
        xi += (k1x + &k2x * 2.0 + &k3x * 2.0 + k4x) * (h / 6.0);
        g.translation += (k1p + &k2p * 2.0 + &k3p * 2.0 + k4p) * (h / 6.0);
        g.rotation += (k1q + &k2q * 2.0 + &k3q * 2.0 + k4q) * (h / 6.0);
        if chart.skew {
            g.rotation = polar(&g.rotation);
        }
        let t = (s + 1) as f64 * h;
        if xi.iter().chain(g.translation.iter()).chain(g.rotation.iter()).any(|x| !x.is_finite()) {
            return Err(Error::Numerical(format!("non-finite state at t = {t} (step {})", s + 1)));
        }
        traj.times.push(t);
        traj.elements.push(g.clone());
        traj.body_velocity.push(xi.clone());
    }
    Ok(traj)
}

/// Body velocity at the midpoint of step i by cubic Hermite interpolation
/// (slopes from the geodesic equation), so transport stays 4th order.
fn midpoint_velocity(ops: &LeftOps, traj: &Trajectory, i: usize) -> DVector<f64> {
    let h = traj.times[i + 1] - traj.times[i];
    let (a, b) = (&traj.body_velocity[i], &traj.body_velocity[i + 1]);
    let (da, db) = (-ops.n(a, a), -ops.n(b, b));
    (a + b) * 0.5 + (da - db) * (h / 8.0)
}

/// Integrate X′ = −N(ξ(t)) X along the trajectory (any number of columns).
fn transport_columns(model: &HomogeneousModel, traj: &Trajectory, x0: &DMatrix<f64>) -> Result<Vec<DMatrix<f64>>> {
    let d = model.dim();
    if x0.nrows() != d {
        return Err(Error::DimensionMismatch { expected: d, found: x0.nrows() });
    }
    if traj.is_empty() || traj.body_velocity.len() != traj.len() || traj.body_velocity[0].len() != d {
        return Err(Error::Precondition("trajectory grid does not match the model".into()));
    }
    let ops = LeftOps { model };
    let mut out = Vec::with_capacity(traj.len());
    let mut x = x0.clone();
    out.push(x.clone());
    for i in 0..traj.len() - 1 {
        let h = traj.times[i + 1] - traj.times[i];
        let a0 = ops.n_op(&traj.body_velocity[i]);
        let am = ops.n_op(&midpoint_velocity(&ops, traj, i));
        let a1 = ops.n_op(&traj.body_velocity[i + 1]);
        let k1 = -(&a0 * &x);
        let k2 = -(&am * (&x + &k1 * (h / 2.0)));
        let k3 = -(&am * (&x + &k2 * (h / 2.0)));
        let k4 = -(&a1 * (&x + &k3 * h));
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        out.push(x.clone());
    }
    Ok(out)
}

pub fn parallel_transport(model: &HomogeneousModel, traj: &Trajectory, u0: &DVector<f64>) -> Result<Vec<DVector<f64>>> {
    let cols = transport_columns(model, traj, &DMatrix::from_column_slice(u0.len(), 1, u0.as_slice()))?;
    Ok(cols.into_iter().map(|m| m.column(0).into_owned()).collect())
}

/// τ_t as matrices on 𝔤 (left-trivialized).
pub fn transport_matrices(model: &HomogeneousModel, traj: &Trajectory) -> Result<Vec<DMatrix<f64>>> {
    let d = model.dim();
    transport_columns(model, traj, &DMatrix::identity(d, d))
}

/// Transport u from the end of the trajectory back to its start.
pub fn parallel_transport_back(model: &HomogeneousModel, traj: &Trajectory, u_end: &DVector<f64>) -> Result<DVector<f64>> {
    let rev = Trajectory {
        times: traj.times.iter().rev().copied().collect(),
        elements: traj.elements.iter().rev().cloned().collect(),
        body_velocity: traj.body_velocity.iter().rev().cloned().collect(),
    };
    Ok(parallel_transport(model, &rev, u_end)?.pop().expect("nonempty"))
}

/// Killing field of x along the curve: Ad_{g(t)⁻¹} x from the group elements.
pub fn killing_along(model: &HomogeneousModel, x: &DVector<f64>, traj: &Trajectory) -> Vec<DVector<f64>> {
    traj.elements.iter().map(|g| g.ad_inverse(model.algebra(), x)).collect()
}

/// Same field from the algebra alone: A′ = −ad_ξ A, A(0) = x.
pub fn killing_along_algebraic(model: &HomogeneousModel, x: &DVector<f64>, traj: &Trajectory) -> Vec<DVector<f64>> {
    let alg = model.algebra();
    let ops = LeftOps { model };
    let mut a = x.clone();
    let mut out = vec![a.clone()];
    for i in 0..traj.len().saturating_sub(1) {
        let h = traj.times[i + 1] - traj.times[i];
        let m0 = alg.ad(&traj.body_velocity[i]);
        let mm = alg.ad(&midpoint_velocity(&ops, traj, i));
        let m1 = alg.ad(&traj.body_velocity[i + 1]);
        let k1 = -(&m0 * &a);
        let k2 = -(&mm * (&a + &k1 * (h / 2.0)));
        let k3 = -(&mm * (&a + &k2 * (h / 2.0)));
        let k4 = -(&m1 * (&a + &k3 * h));
        a += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        out.push(a.clone());
    }
    out
}

/// Conservation diagnostics of a geodesic and its transport.
#[derive(Clone, Debug, Default)]
pub struct Drift {
    /// max |‖ξ(t)‖_g − ‖ξ(0)‖_g|.
    pub energy: f64,
    /// max ‖τ_tᵀ g τ_t − g‖∞.
    pub isometry: f64,
    /// max ‖QᵀQ − I‖∞ of rotation parts (0 when not skew).
    pub orthogonality: f64,
}

fn drift(model: &HomogeneousModel, traj: &Trajectory, p: &[DMatrix<f64>]) -> Drift {
    let g = model.metric();
    let e0 = model.norm(&traj.body_velocity[0]);
    let chart = GroupChart::detect(model.algebra());
    Drift {
        energy: traj.body_velocity.iter().map(|x| (model.norm(x) - e0).abs()).fold(0.0, f64::max),
        isometry: p.iter().map(|m| (m.transpose() * g * m - g).amax()).fold(0.0, f64::max),
        orthogonality: if chart.skew {
            traj.elements.iter().map(|e| e.orthogonality_defect()).fold(0.0, f64::max)
        } else {
            0.0
        },
    }
}

#[derive(Clone, Debug)]
pub struct GrowthReport {
    /// max ‖Z(t) − τ_t z − t τ_t Λ(v, z)‖.
    pub residual_i: f64,
    /// max ‖(∇Z)_{γ(t)} − τ_t (∇Z)_e τ_t⁻¹‖.
    pub residual_ii: f64,
    /// max distance of ξ(t)/‖ξ‖ from ν (ν is autoparallel).
    pub autoparallel: f64,
    /// max ‖N(ξ, ξ)‖ along the curve.
    pub acceleration: f64,
    pub drift: Drift,
    pub series_i: Vec<f64>,
    pub series_ii: Vec<f64>,
    pub trajectory: Trajectory,
}

/// Killing field growth along a nullity geodesic: Z(t) = τ_t z + t τ_t ∇_v Z and ∇Z parallel.
pub fn check_lemma_growth(
    model: &HomogeneousModel,
    v: &DVector<f64>,
    z: &DVector<f64>,
    t_end: f64,
    h: f64,
) -> Result<GrowthReport> {
    let d = model.dim();
    for x in [v, z] {
        if x.len() != d {
            return Err(Error::DimensionMismatch { expected: d, found: x.len() });
        }
    }
    let vn = v.norm();
    let nu = nullity::nullity(model);
    let res = if vn > 0.0 { nu.residual(v)? / vn } else { 1.0 };
    if vn == 0.0 || res > REPORT_TOL {
        return Err(Error::Precondition(format!(
            "v is not a nonzero vector in the nullity (dim ν = {}, residual {res:.3e})",
            nu.dim()
        )));
    }
    let traj = geodesic(model, v, t_end, h)?;
    let p = transport_matrices(model, &traj)?;
    let zs = killing_along(model, z, &traj);
    let lvz = model.lambda(v, z);
    let bz = model.op(z);
    let ops = LeftOps { model };
    let mut series_i = Vec::with_capacity(traj.len());
    let mut series_ii = Vec::with_capacity(traj.len());
    let (mut autop, mut acc) = (0.0f64, 0.0f64);
    for (i, t) in traj.times.iter().enumerate() {
        let pt = &p[i];
        series_i.push((&zs[i] - pt * z - pt * &lvz * *t).norm());
        let pinv = pt.clone().try_inverse().ok_or_else(|| Error::Numerical("singular transport".into()))?;
        series_ii.push((model.op(&zs[i]) - pt * &bz * pinv).amax());
        let xi = &traj.body_velocity[i];
        autop = autop.max(nu.residual(xi)? / xi.norm().max(f64::MIN_POSITIVE));
        acc = acc.max(ops.n(xi, xi).norm());
    }
    Ok(GrowthReport {
        residual_i: series_i.iter().copied().fold(0.0, f64::max),
        residual_ii: series_ii.iter().copied().fold(0.0, f64::max),
        autoparallel: autop,
        acceleration: acc,
        drift: drift(model, &traj, &p),
        series_i,
        series_ii,
        trajectory: traj,
    })
}

#[derive(Clone, Debug)]
pub struct FlowReport {
    /// max ‖τ_t − e^{−tB}‖∞.
    pub residual: f64,
    /// ‖Λ(x, x)‖.
    pub geodesic_defect: f64,
    pub op_norm: f64,
    pub drift: Drift,
    pub series: Vec<f64>,
    pub trajectory: Trajectory,
}

/// Along a homogeneous geodesic t ↦ exp(tx), transport equals e^{−tB_x}.
pub fn check_flow_identity(model: &HomogeneousModel, x: &DVector<f64>, t_end: f64, h: f64) -> Result<FlowReport> {
    let d = model.dim();
    if x.len() != d {
        return Err(Error::DimensionMismatch { expected: d, found: x.len() });
    }
    let defect = model.lambda(x, x).norm();
    let scale = nullity::connection_scale(model).max(1.0) * x.norm_squared();
    if defect > 1e-10 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::Precondition(format!(
            "integral curve of x is not a geodesic: ‖Λ(x,x)‖ = {defect:.3e}"
        )));
    }
    let b = model.op(x);
    let traj = geodesic(model, x, t_end, h)?;
    let p = transport_matrices(model, &traj)?;
    let series: Vec<f64> =
        traj.times.iter().zip(&p).map(|(t, pt)| (pt - expm(&(&b * -*t))).amax()).collect();
    Ok(FlowReport {
        residual: series.iter().copied().fold(0.0, f64::max),
        geodesic_defect: defect,
        op_norm: b.amax(),
        drift: drift(model, &traj, &p),
        series,
        trajectory: traj,
    })
}

/// CSV: t, ξ components, then one column per named series.
pub fn write_trajectory_csv<W: Write>(w: W, traj: &Trajectory, series: &[(&str, &[f64])]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let d = traj.body_velocity.first().map_or(0, |x| x.len());
    let mut header = vec!["t".to_string()];
    header.extend((0..d).map(|i| format!("xi{i}")));
    header.extend(series.iter().map(|(n, _)| n.to_string()));
    let io = |e: csv::Error| Error::Numerical(format!("csv: {e}"));
    out.write_record(&header).map_err(io)?;
    for (i, t) in traj.times.iter().enumerate() {
        let mut rec = vec![format!("{t}")];
        rec.extend(traj.body_velocity[i].iter().map(|x| format!("{x:e}")));
        rec.extend(series.iter().map(|(_, s)| s.get(i).map_or(String::new(), |x| format!("{x:e}"))));
        out.write_record(&rec).map_err(io)?;
    }
    out.flush().map_err(|e| Error::Numerical(format!("csv: {e}")))?;
    Ok(())
}

/// Basis directions whose one-parameter subgroup is a geodesic (‖Λ(x,x)‖ ≤ tol·scale)
/// with nonzero Killing operator, strongest ‖B_x‖ first.
pub fn homogeneous_directions(model: &HomogeneousModel, tol: f64) -> Vec<(usize, f64)> {
    let scale = nullity::connection_scale(model).max(1.0);
    let mut out: Vec<(usize, f64)> = (0..model.dim())
        .filter_map(|i| {
            let x = model.algebra().basis_vector(i);
            let b = model.op(&x).amax();
            (model.lambda(&x, &x).norm() <= tol * scale && b > tol * scale).then_some((i, b))
        })
        .collect();
    out.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    out
}
