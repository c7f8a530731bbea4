//! Nullity hierarchy at e: ν ⊂ ν¹ ⊂ ν² ⊂ 𝒰_e, bounded algebras, transvection
//! spaces, the enlarged germ algebra 𝔤′ and its abelian ideal 𝔞.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::geometry::{germ_bracket, germ_dim, killing_germ, nabla_curvature, HomogeneousModel, KillingGerm};
use crate::subspace::Subspace;

/// Pass/fail threshold for every residual in a report (relative).
pub const REPORT_TOL: f64 = 1e-8;

/// Largest |Λ| entry: the natural size of everything built from the connection.
pub fn connection_scale(model: &HomogeneousModel) -> f64 {
    model.connection().raw().iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn nullity(model: &HomogeneousModel) -> Subspace {
    let s = connection_scale(model);
    Subspace::kernel_scaled(&model.curvature().first_slot_matrix(), model.tol(), s * s)
}

/// Matrix of Z ↦ Λ(v, Z).
fn lam_first(model: &HomogeneousModel, v: &DVector<f64>) -> DMatrix<f64> {
    model.connection().op_first(v)
}

/// ν̂ = span{Λ(v, e_j) : v ∈ ν, j}.
pub fn adapted_nullity(model: &HomogeneousModel, nu: &Subspace) -> Subspace {
    span_images(model, nu)
}

fn span_images(model: &HomogeneousModel, src: &Subspace) -> Subspace {
    let d = model.dim();
    let mut vs = Vec::new();
    for v in src.basis_vectors() {
        let m = lam_first(model, &v);
        vs.extend((0..d).map(|j| m.column(j).into_owned()));
    }
    Subspace::span_scaled(d, &vs, model.tol(), connection_scale(model)).expect("dimensions agree")
}

/// (ν¹, ν²) = (ν + ν̂, ν¹ + span{Λ(r, e_j) : r ∈ ν̂}).
pub fn osculating(model: &HomogeneousModel, nu: &Subspace) -> (Subspace, Subspace) {
    let hat = adapted_nullity(model, nu);
    let nu1 = nu.sum(&hat).expect("dimensions agree");
    let nu2 = nu1.sum(&span_images(model, &hat)).expect("dimensions agree");
    (nu1, nu2)
}

fn stacked_kernel(model: &HomogeneousModel, blocks: Vec<DMatrix<f64>>) -> Subspace {
    let d = model.dim();
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut m = DMatrix::zeros(rows, d);
    let mut r = 0;
    for b in blocks {
        m.view_mut((r, 0), (b.nrows(), d)).copy_from(&b);
        r += b.nrows();
    }
    Subspace::kernel_scaled(&m, model.tol(), connection_scale(model).max(1.0))
}

/// u = {Z : Λ(ν, Z) ⊂ ν}, u₀ = {Z : Λ(ν, Z) = 0}, u₀₀ = {Z : Λ(ν¹, Z) = 0}.
pub fn bounded_algebras(model: &HomogeneousModel, nu: &Subspace, nu_hat: &Subspace) -> (Subspace, Subspace, Subspace) {
    let d = model.dim();
    let q = DMatrix::identity(d, d) - nu.projector();
    let nu1 = nu.sum(nu_hat).expect("dimensions agree");
    let u = stacked_kernel(model, nu.basis_vectors().iter().map(|v| &q * lam_first(model, v)).collect());
    let u0 = stacked_kernel(model, nu.basis_vectors().iter().map(|v| lam_first(model, v)).collect());
    let u00 = stacked_kernel(model, nu1.basis_vectors().iter().map(|v| lam_first(model, v)).collect());
    (u, u0, u00)
}

/// tr₀ = {x ∈ ν : B_x = 0}, tr = {x ∈ ν¹ : B_x = 0}.
pub fn transvection_spaces(model: &HomogeneousModel, nu: &Subspace, nu1: &Subspace) -> (Subspace, Subspace) {
    let d = model.dim();
    let alg = model.algebra();
    // column j = vec(B_{e_j})
    let mut ops = DMatrix::zeros(d * d, d);
    for j in 0..d {
        ops.column_mut(j).copy_from_slice(model.op(&alg.basis_vector(j)).as_slice());
    }
    let id = DMatrix::<f64>::identity(d, d);
    let tr0 = stacked_kernel(model, vec![ops.clone(), &id - nu.projector()]);
    let tr = stacked_kernel(model, vec![ops, &id - nu1.projector()]);
    (tr0, tr)
}

/// span{(x, B_x) : x ∈ 𝔤} in the flattened germ space.
pub fn g_germ_subspace(model: &HomogeneousModel) -> Subspace {
    let d = model.dim();
    let vs: Vec<DVector<f64>> =
        (0..d).map(|i| killing_germ(model, &model.algebra().basis_vector(i)).flatten()).collect();
    Subspace::span_of(germ_dim(d), &vs, model.tol()).expect("dimensions agree")
}

fn germs_of(space: &Subspace, d: usize) -> Vec<KillingGerm> {
    space.basis_vectors().iter().map(|v| KillingGerm::from_flat(d, v)).collect()
}

#[derive(Clone, Debug)]
pub struct EnlargedAlgebra {
    pub space: Subspace,
    /// Largest relative residual of brackets of basis germs against the space.
    pub closure_residual: f64,
    /// Largest operator part of [𝔤-germ, (v,0)].
    pub adapted_residual: f64,
}

/// 𝔤′ = 𝔤-germs + {(v, 0) : v ∈ ν}.
pub fn enlarged_algebra(model: &HomogeneousModel, nu: &Subspace) -> EnlargedAlgebra {
    let d = model.dim();
    let r = model.curvature();
    let mut vs: Vec<DVector<f64>> =
        (0..d).map(|i| killing_germ(model, &model.algebra().basis_vector(i)).flatten()).collect();
    let transv: Vec<KillingGerm> = nu.basis_vectors().into_iter().map(KillingGerm::transvection).collect();
    vs.extend(transv.iter().map(|g| g.flatten()));
    let space = Subspace::span_of(germ_dim(d), &vs, model.tol()).expect("dimensions agree");

    let basis = germs_of(&space, d);
    let (mut worst, mut scale) = (0.0f64, 1.0f64);
    for a in &basis {
        for b in &basis {
            let c = germ_bracket(model, a, b, r).flatten();
            scale = scale.max(c.norm());
            worst = worst.max(space.residual(&c).expect("dimensions agree"));
        }
    }
    let mut adapted = 0.0f64;
    let mut ascale = 1.0f64;
    for i in 0..d {
        let g = killing_germ(model, &model.algebra().basis_vector(i));
        ascale = ascale.max(g.norm());
        for t in &transv {
            adapted = adapted.max(germ_bracket(model, &g, t, r).op.amax());
        }
    }
    EnlargedAlgebra { space, closure_residual: worst / scale, adapted_residual: adapted / ascale }
}

#[derive(Clone, Debug)]
pub struct AbelianIdeal {
    pub space: Subspace,
    pub abelian_residual: f64,
    pub ideal_residual: f64,
    /// Value parts of 𝔞.
    pub values: Subspace,
}

/// 𝔞 = smallest subspace of 𝔤′ containing {(v,0) : v ∈ ν} and stable under [𝔤′, ·].
pub fn abelian_ideal(model: &HomogeneousModel, g_prime: &Subspace, nu: &Subspace) -> AbelianIdeal {
    let d = model.dim();
    let n = germ_dim(d);
    let r = model.curvature();
    let gp = germs_of(g_prime, d);
    let seed: Vec<DVector<f64>> =
        nu.basis_vectors().into_iter().map(|v| KillingGerm::transvection(v).flatten()).collect();
    let mut cur = Subspace::span_of(n, &seed, model.tol()).expect("dimensions agree");
    let scale = 1.0f64.max(connection_scale(model));
    for _ in 0..=n {
        let mut vs = cur.basis_vectors();
        for a in germs_of(&cur, d) {
            for g in &gp {
                vs.push(germ_bracket(model, g, &a, r).flatten());
            }
        }
        let next = Subspace::span_scaled(n, &vs, model.tol(), scale).expect("dimensions agree");
        let grew = next.dim() > cur.dim();
        cur = next;
        if !grew {
            break;
        }
    }
    let basis = germs_of(&cur, d);
    let (mut ab, mut id, mut s) = (0.0f64, 0.0f64, 1.0f64);
    for a in &basis {
        for b in &basis {
            ab = ab.max(germ_bracket(model, a, b, r).norm());
        }
        for g in &gp {
            let c = germ_bracket(model, g, a, r).flatten();
            s = s.max(c.norm());
            id = id.max(cur.residual(&c).expect("dimensions agree"));
        }
    }
    let vals: Vec<DVector<f64>> = basis.iter().map(|g| g.value.clone()).collect();
    let values = Subspace::span_of(d, &vals, model.tol()).expect("dimensions agree");
    AbelianIdeal { space: cur, abelian_residual: ab / s, ideal_residual: id / s, values }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// ν = 0.
    ZeroNullity,
    /// ν = T_eM.
    Flat,
    /// ν̂ ⊂ ν: ν is parallel (local flat factor).
    Parallel,
    Nontrivial,
}

impl Branch {
    pub fn is_trivial(self) -> bool {
        self != Branch::Nontrivial
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flag {
    Pass,
    Fail,
    #[serde(rename = "n/a")]
    NotApplicable,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Dims {
    pub dim_m: usize,
    pub dim_nu: usize,
    pub dim_nu_hat: usize,
    pub dim_nu1: usize,
    pub dim_nu2: usize,
    #[serde(rename = "dim_U")]
    pub dim_u: usize,
    pub dim_u0: usize,
    pub dim_u00: usize,
    pub dim_tr0: usize,
    pub dim_tr: usize,
    pub dim_a: usize,
    pub dim_g_prime: usize,
}

/// All subspaces of the hierarchy.
#[derive(Clone, Debug)]
pub struct NullityStructure {
    pub nu: Subspace,
    pub nu_hat: Subspace,
    pub nu1: Subspace,
    pub nu2: Subspace,
    pub u: Subspace,
    pub u0: Subspace,
    pub u00: Subspace,
    pub tr0: Subspace,
    pub tr: Subspace,
    pub g_prime: EnlargedAlgebra,
    pub a: AbelianIdeal,
    pub branch: Branch,
}

pub fn analyze(model: &HomogeneousModel) -> NullityStructure {
    let nu = nullity(model);
    let nu_hat = adapted_nullity(model, &nu);
    let (nu1, nu2) = osculating(model, &nu);
    let (u, u0, u00) = bounded_algebras(model, &nu, &nu_hat);
    let (tr0, tr) = transvection_spaces(model, &nu, &nu1);
    let g_prime = enlarged_algebra(model, &nu);
    let a = abelian_ideal(model, &g_prime.space, &nu);
    let branch = if nu.is_zero() {
        Branch::ZeroNullity
    } else if nu.is_full() {
        Branch::Flat
    } else if nu.containment_residual(&nu_hat).expect("dimensions agree") <= REPORT_TOL {
        Branch::Parallel
    } else {
        Branch::Nontrivial
    };
    NullityStructure { nu, nu_hat, nu1, nu2, u, u0, u00, tr0, tr, g_prime, a, branch }
}

impl NullityStructure {
    pub fn dims(&self) -> Dims {
        Dims {
            dim_m: self.nu.ambient_dim(),
            dim_nu: self.nu.dim(),
            dim_nu_hat: self.nu_hat.dim(),
            dim_nu1: self.nu1.dim(),
            dim_nu2: self.nu2.dim(),
            dim_u: self.u.dim(),
            dim_u0: self.u0.dim(),
            dim_u00: self.u00.dim(),
            dim_tr0: self.tr0.dim(),
            dim_tr: self.tr.dim(),
            dim_a: self.a.space.dim(),
            dim_g_prime: self.g_prime.space.dim(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NullityReport {
    pub branch: Branch,
    pub dims: Dims,
    pub flags: BTreeMap<String, Flag>,
    /// One entry per flag; `None` where the flag does not apply.
    pub residuals: BTreeMap<String, Option<f64>>,
    pub pass: bool,
}

impl NullityReport {
    pub fn flag(&self, id: &str) -> Option<Flag> {
        self.flags.get(id).copied()
    }

    pub fn residual(&self, id: &str) -> Option<f64> {
        self.residuals.get(id).copied().flatten()
    }

    pub fn failed(&self) -> Vec<&str> {
        self.flags.iter().filter(|(_, f)| **f == Flag::Fail).map(|(k, _)| k.as_str()).collect()
    }
}

/// Identifiers of the structure checks, in report order.
pub const CHECK_IDS: &[&str] = &[
    "osculating_chain",
    "osculating_in_bounded",
    "bounded_chain",
    "u00_ideal",
    "transvections_central_in_u00",
    "u0_preserves_adapted",
    "curvature_tr_u",
    "curvature_adapted_adapted",
    "curvature_tr_tr",
    "jacobi_operator_adapted",
    "nabla_curvature_nullity",
    "stabilizer_nullity",
    "enlarged_algebra_closed",
    "enlarged_algebra_dim",
    "adapted_transvection_brackets",
    "abelian_ideal_abelian",
    "abelian_ideal_ideal",
    "abelian_ideal_contains_nu2",
];

/// max |R(x, y, e_k, e_l)| over x ∈ xs, y ∈ ys, relative to ‖R‖∞.
fn curvature_block(model: &HomogeneousModel, xs: &Subspace, ys: &Subspace) -> f64 {
    let r = model.curvature();
    let scale = r.max_abs();
    if scale == 0.0 {
        return 0.0;
    }
    let mut worst = 0.0f64;
    for x in xs.basis_vectors() {
        for y in ys.basis_vectors() {
            worst = worst.max(r.lowered_block(&x, &y).amax());
        }
    }
    worst / scale
}

fn structure_residuals(model: &HomogeneousModel, s: &NullityStructure) -> Vec<(&'static str, f64)> {
    let d = model.dim();
    let alg = model.algebra();
    let r = model.curvature();
    let rmax = r.max_abs();
    let rel_r = |x: f64| if rmax > 0.0 { x / rmax } else { x };
    let dims = s.dims();
    let mut out = Vec::new();

    let chain = [
        dims.dim_nu < dims.dim_nu1,
        dims.dim_nu1 < dims.dim_nu2,
        dims.dim_nu2 <= dims.dim_u,
        dims.dim_u < d,
        d >= dims.dim_nu + 3,
    ];
    out.push(("osculating_chain", chain.iter().filter(|ok| !**ok).count() as f64));
    out.push(("osculating_in_bounded", s.u.containment_residual(&s.nu2).unwrap()));
    out.push((
        "bounded_chain",
        s.u.containment_residual(&s.u0).unwrap().max(s.u0.containment_residual(&s.u00).unwrap()),
    ));

    let (mut ideal, mut iscale) = (0.0f64, 0.0f64);
    for i in 0..d {
        for b in s.u00.basis_vectors() {
            let c = alg.bracket_unchecked(&alg.basis_vector(i), &b);
            iscale = iscale.max(c.norm());
            ideal = ideal.max(s.u00.residual(&c).unwrap());
        }
    }
    out.push(("u00_ideal", if iscale > 0.0 { ideal / iscale.max(1.0) } else { 0.0 }));

    let (mut central, mut cscale) = (0.0f64, 1.0f64);
    for x in s.tr.basis_vectors() {
        let gx = killing_germ(model, &x);
        for y in s.u00.basis_vectors() {
            let gy = killing_germ(model, &y);
            cscale = cscale.max(gx.norm() * gy.norm());
            central = central.max(germ_bracket(model, &gx, &gy, r).norm());
        }
    }
    out.push(("transvections_central_in_u00", central / cscale));

    let lscale = connection_scale(model).max(1.0);
    let mut pres = 0.0f64;
    for uu in s.u0.basis_vectors() {
        for h in s.nu_hat.basis_vectors() {
            pres = pres.max(s.nu_hat.residual(&model.lambda(&h, &uu)).unwrap());
        }
    }
    out.push(("u0_preserves_adapted", pres / lscale));

    out.push(("curvature_tr_u", curvature_block(model, &s.tr, &s.u)));
    out.push(("curvature_adapted_adapted", curvature_block(model, &s.nu_hat, &s.nu_hat)));

    // R(e_i, x, y, e_l) for x, y ∈ tr, and R(e_i, h, h, e_l) for h ∈ ν̂
    let mut trtr = 0.0f64;
    let mut jac = 0.0f64;
    let tr = s.tr.basis_vectors();
    let hats = s.nu_hat.basis_vectors();
    for i in 0..d {
        let e = alg.basis_vector(i);
        for l in 0..d {
            let f = alg.basis_vector(l);
            for x in &tr {
                for y in &tr {
                    trtr = trtr.max(r.eval(&e, x, y, &f).abs());
                }
            }
            for h in &hats {
                jac = jac.max(r.eval(&e, h, h, &f).abs());
            }
        }
    }
    out.push(("curvature_tr_tr", rel_r(trtr)));
    out.push(("jacobi_operator_adapted", rel_r(jac)));

    let nabla = nabla_curvature(model);
    let mut nab = 0.0f64;
    let mut stab = 0.0f64;
    for v in s.nu.basis_vectors() {
        nab = nab.max(nabla.along(&v).max_abs());
        stab = stab.max(crate::geometry::curvature_stabilizer_check(r, &model.op(&v)));
    }
    out.push(("nabla_curvature_nullity", rel_r(nab)));
    out.push(("stabilizer_nullity", rel_r(stab)));

    out.push(("enlarged_algebra_closed", s.g_prime.closure_residual));
    let expected = d + dims.dim_nu - dims.dim_tr0;
    out.push(("enlarged_algebra_dim", (dims.dim_g_prime as f64 - expected as f64).abs()));
    out.push(("adapted_transvection_brackets", s.g_prime.adapted_residual));
    out.push(("abelian_ideal_abelian", s.a.abelian_residual));
    out.push(("abelian_ideal_ideal", s.a.ideal_residual));
    out.push(("abelian_ideal_contains_nu2", s.a.values.containment_residual(&s.nu2).unwrap()));
    out
}

/// Run every structure check; trivial nullity routes to a branch with all flags n/a.
pub fn verify_structure(model: &HomogeneousModel) -> NullityReport {
    report_for(model, &analyze(model))
}

pub fn report_for(model: &HomogeneousModel, s: &NullityStructure) -> NullityReport {
    let mut flags = BTreeMap::new();
    let mut residuals = BTreeMap::new();
    if s.branch.is_trivial() {
        for id in CHECK_IDS {
            flags.insert(id.to_string(), Flag::NotApplicable);
            residuals.insert(id.to_string(), None);
        }
        return NullityReport { branch: s.branch, dims: s.dims(), flags, residuals, pass: true };
    }
    let mut pass = true;
    for (id, res) in structure_residuals(model, s) {
        let ok = res <= REPORT_TOL;
        pass &= ok;
        flags.insert(id.to_string(), if ok { Flag::Pass } else { Flag::Fail });
        residuals.insert(id.to_string(), Some(res));
    }
    NullityReport { branch: s.branch, dims: s.dims(), flags, residuals, pass }
}
