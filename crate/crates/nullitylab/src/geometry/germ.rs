use nalgebra::{DMatrix, DVector};

use super::{expm, CurvatureTensor, HomogeneousModel};
use crate::error::{Error, Result};
use crate::nullity;
use crate::subspace::Subspace;

pub const H_T_TOL: f64 = 1e-8;

/// Initial conditions (X_e, (∇X)_e) of a Killing field.
#[derive(Clone, Debug, PartialEq)]
pub struct KillingGerm {
    pub value: DVector<f64>,
    pub op: DMatrix<f64>,
}

/// Length of a flattened germ: value then operator (column-major).
pub fn germ_dim(d: usize) -> usize {
    d + d * d
}

impl KillingGerm {
    pub fn zero(d: usize) -> Self {
        KillingGerm { value: DVector::zeros(d), op: DMatrix::zeros(d, d) }
    }

    /// Transvection germ (v, 0).
    pub fn transvection(v: DVector<f64>) -> Self {
        let d = v.len();
        KillingGerm { value: v, op: DMatrix::zeros(d, d) }
    }

    pub fn dim(&self) -> usize {
        self.value.len()
    }

    pub fn flatten(&self) -> DVector<f64> {
        let d = self.dim();
        let mut out = DVector::zeros(germ_dim(d));
        out.rows_mut(0, d).copy_from(&self.value);
        out.rows_mut(d, d * d).copy_from_slice(self.op.as_slice());
        out
    }

    pub fn from_flat(d: usize, x: &DVector<f64>) -> Self {
        assert_eq!(x.len(), germ_dim(d));
        KillingGerm {
            value: x.rows(0, d).into_owned(),
            op: DMatrix::from_column_slice(d, d, &x.as_slice()[d..]),
        }
    }

    pub fn norm(&self) -> f64 {
        (self.value.norm_squared() + self.op.norm_squared()).sqrt()
    }
}

/// Germ of the Killing field induced by x: (x, Λ(·, x)).
pub fn killing_germ(model: &HomogeneousModel, x: &DVector<f64>) -> KillingGerm {
    KillingGerm { value: x.clone(), op: model.op(x) }
}

/// `((v,B),(v',B')) ↦ (B'v − Bv', R_{v,v'} − [B,B'])`.
pub fn germ_bracket(model: &HomogeneousModel, g1: &KillingGerm, g2: &KillingGerm, r: &CurvatureTensor) -> KillingGerm {
    let value = &g2.op * &g1.value - &g1.op * &g2.value;
    let op = r.operator(&g1.value, &g2.value, model.metric_inv()) - (&g1.op * &g2.op - &g2.op * &g1.op);
    KillingGerm { value, op }
}

/// `h_t(u, C) = (e^{−tB}u, e^{−tB} C e^{tB})`, B = op of the germ of x.
#[derive(Clone, Debug)]
pub struct HtMap {
    pub t: f64,
    pub b: DMatrix<f64>,
    e_minus: DMatrix<f64>,
    e_plus: DMatrix<f64>,
}

impl HtMap {
    pub fn apply(&self, g: &KillingGerm) -> KillingGerm {
        KillingGerm { value: &self.e_minus * &g.value, op: &self.e_minus * &g.op * &self.e_plus }
    }

    /// The map as a matrix on flattened germs.
    pub fn matrix(&self) -> DMatrix<f64> {
        let d = self.b.nrows();
        let n = germ_dim(d);
        let mut m = DMatrix::zeros(n, n);
        for j in 0..n {
            let mut e = DVector::zeros(n);
            e[j] = 1.0;
            m.set_column(j, &self.apply(&KillingGerm::from_flat(d, &e)).flatten());
        }
        m
    }
}

pub fn h_t_map(model: &HomogeneousModel, x: &DVector<f64>, t: f64) -> HtMap {
    let b = model.op(x);
    let e_minus = expm(&(&b * -t));
    let e_plus = expm(&(&b * t));
    HtMap { t, b, e_minus, e_plus }
}

#[derive(Clone, Debug)]
pub struct HtSample {
    pub t: f64,
    /// h_t(𝔤-germs) ⊂ 𝔤-germs.
    pub preserves_g: f64,
    /// ‖[h_t a, h_t b] − h_t[a, b]‖, relative, over a basis of 𝔤′.
    pub equivariance: f64,
    /// Isotropy germs of 𝔤′ map to isotropy germs of 𝔤′.
    pub isotropy: f64,
}

#[derive(Clone, Debug)]
pub struct HtReport {
    pub geodesic_residual: f64,
    pub nullity_residual: f64,
    pub op_norm: f64,
    pub samples: Vec<HtSample>,
    pub pass: bool,
}

/// Check that h_t is an automorphism of the germ algebra for x ∈ ν with Λ(x,x) = 0.
pub fn verify_h_t_automorphism(model: &HomogeneousModel, x: &DVector<f64>, t_samples: &[f64]) -> Result<HtReport> {
    let d = model.dim();
    if x.len() != d {
        return Err(Error::DimensionMismatch { expected: d, found: x.len() });
    }
    let xn = x.norm();
    if xn == 0.0 {
        return Err(Error::Precondition("h_t needs a nonzero direction".into()));
    }
    let geo = model.lambda(x, x).norm() / (xn * xn);
    if geo > model.tol().max(1e-12) * 10.0 {
        return Err(Error::Precondition(format!(
            "integral curve of x is not a geodesic: ‖Λ(x,x)‖/‖x‖² = {geo:e}"
        )));
    }
    let nu = nullity::nullity(model);
    let nres = nu.residual(x)? / xn;
    if nres > model.tol() {
        return Err(Error::Precondition(format!("x is not in the nullity (residual {nres:e})")));
    }

    let r = model.curvature();
    let g_germs = nullity::g_germ_subspace(model);
    let gp = nullity::enlarged_algebra(model, &nu).space;
    // isotropy of 𝔤′ at e: germs (0, B_v), v ∈ ν
    let iso = value_zero_part(&gp, d)?;
    let gp_basis: Vec<KillingGerm> = gp.basis_vectors().iter().map(|v| KillingGerm::from_flat(d, v)).collect();

    let mut samples = Vec::with_capacity(t_samples.len());
    let mut pass = true;
    for &t in t_samples {
        let h = h_t_map(model, x, t);
        let hm = h.matrix();
        let preserves_g = g_germs.containment_residual(&g_germs.image(&hm)?)?;
        let img_iso = iso.image(&hm)?;
        let isotropy = gp.containment_residual(&img_iso)?.max(
            // value parts of the image must vanish
            img_iso.basis_vectors().iter().map(|v| v.rows(0, d).norm()).fold(0.0, f64::max),
        );
        let mut eq = 0.0f64;
        let mut scale = 1.0f64;
        for a in &gp_basis {
            for b in &gp_basis {
                let lhs = germ_bracket(model, &h.apply(a), &h.apply(b), r);
                let rhs = h.apply(&germ_bracket(model, a, b, r));
                scale = scale.max(rhs.norm());
                eq = eq.max((lhs.flatten() - rhs.flatten()).norm());
            }
        }
        let equivariance = eq / scale;
        pass &= preserves_g <= H_T_TOL && equivariance <= H_T_TOL && isotropy <= H_T_TOL;
        samples.push(HtSample { t, preserves_g, equivariance, isotropy });
    }
    Ok(HtReport { geodesic_residual: geo, nullity_residual: nres, op_norm: h_t_map(model, x, 0.0).b.amax(), samples, pass })
}

/// Value-zero germs within a germ subspace.
pub(crate) fn value_zero_part(space: &Subspace, d: usize) -> Result<Subspace> {
    let n = germ_dim(d);
    let mut vals = DMatrix::zeros(d, n);
    for i in 0..d {
        vals[(i, i)] = 1.0;
    }
    let kernel = Subspace::kernel_of(&vals, space.tol());
    space.intersect(&kernel)
}
