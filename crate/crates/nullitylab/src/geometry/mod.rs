//! Metric geometry of a Lie group with a left-invariant metric, evaluated at e.
//!
//! Sign ledger. Induced Killing fields x̃ are right-invariant and satisfy
//! `[x̃, ỹ] = −[x, y]~`. Everything named `Λ`/`killing_*` uses that bracket;
//! everything named `left_*` uses left-invariant fields and the structure
//! bracket. The two connections are related by `Λ(x, y) = N(x, y) − [x, y]`.

mod connection;
mod curvature;
mod germ;

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lie::LieAlgebra;
use crate::subspace::DEFAULT_TOL;

pub use connection::{killing_connection, left_connection, ConnectionMap};
pub use curvature::{
    curvature, curvature_oracle, curvature_stabilizer_check, derivation_action, nabla_curvature, CurvatureTensor,
    NablaCurvature,
};
pub use germ::{
    germ_bracket, germ_dim, h_t_map, killing_germ, verify_h_t_automorphism, HtMap, HtReport, HtSample, KillingGerm,
};

pub const METRIC_SYMMETRY_TOL: f64 = 1e-12;
pub const SKEW_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct HomogeneousModel {
    algebra: LieAlgebra,
    metric: DMatrix<f64>,
    metric_inv: DMatrix<f64>,
    tol: f64,
    connection: OnceLock<ConnectionMap>,
    left: OnceLock<ConnectionMap>,
    curvature: OnceLock<CurvatureTensor>,
}

impl HomogeneousModel {
    pub fn new(algebra: LieAlgebra, metric: DMatrix<f64>) -> Result<Self> {
        let d = algebra.dim();
        if metric.nrows() != d || metric.ncols() != d {
            return Err(Error::InvalidMetric(format!(
                "metric is {}×{}, algebra has dimension {d}",
                metric.nrows(),
                metric.ncols()
            )));
        }
        if metric.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidMetric("metric has non-finite entries".into()));
        }
        let scale = metric.amax().max(1.0);
        let asym = (&metric - metric.transpose()).amax();
        if asym > METRIC_SYMMETRY_TOL * scale {
            return Err(Error::InvalidMetric(format!("metric not symmetric (residual {asym:e})")));
        }
        let min_eig = min_eigenvalue(&metric);
        if !(min_eig > 0.0) {
            return Err(Error::InvalidMetric(format!(
                "metric not positive definite (smallest eigenvalue {min_eig:e})"
            )));
        }
        let metric_inv = metric
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::InvalidMetric("metric not invertible".into()))?;
        Ok(HomogeneousModel {
            algebra,
            metric,
            metric_inv,
            tol: DEFAULT_TOL,
            connection: OnceLock::new(),
            left: OnceLock::new(),
            curvature: OnceLock::new(),
        })
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    /// Flat abelian model with the identity metric.
    pub fn flat(dim: usize) -> Self {
        Self::new(LieAlgebra::abelian(dim), DMatrix::identity(dim, dim)).expect("identity metric is valid")
    }

    /// so(3) with the bi-invariant metric (identity in the standard basis).
    pub fn so3_biinvariant() -> Self {
        Self::new(LieAlgebra::so3(), DMatrix::identity(3, 3)).expect("identity metric is valid")
    }

    pub fn algebra(&self) -> &LieAlgebra {
        &self.algebra
    }

    pub fn dim(&self) -> usize {
        self.algebra.dim()
    }

    pub fn metric(&self) -> &DMatrix<f64> {
        &self.metric
    }

    pub fn metric_inv(&self) -> &DMatrix<f64> {
        &self.metric_inv
    }

    /// Rank tolerance for every subspace computed from this model.
    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn inner(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        (x.transpose() * &self.metric * y)[(0, 0)]
    }

    pub fn norm(&self, x: &DVector<f64>) -> f64 {
        self.inner(x, x).max(0.0).sqrt()
    }

    pub fn connection(&self) -> &ConnectionMap {
        self.connection.get_or_init(|| killing_connection(self))
    }

    pub fn left_connection(&self) -> &ConnectionMap {
        self.left.get_or_init(|| left_connection(self))
    }

    pub fn curvature(&self) -> &CurvatureTensor {
        self.curvature.get_or_init(|| curvature(self))
    }

    /// Λ(x, y) = ∇_x ỹ at e.
    pub fn lambda(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        self.connection().apply(x, y)
    }

    /// B_y = (∇ỹ)_e = Λ(·, y).
    pub fn op(&self, y: &DVector<f64>) -> DMatrix<f64> {
        self.connection().op_second(y)
    }

    /// ‖g·B + Bᵀ·g‖∞.
    pub fn skew_residual(&self, b: &DMatrix<f64>) -> f64 {
        (&self.metric * b + b.transpose() * &self.metric).amax()
    }

    pub fn min_metric_eigenvalue(&self) -> f64 {
        min_eigenvalue(&self.metric)
    }
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    crate::subspace::sym_eigen(m).0.min()
}

/// Matrix exponential (nalgebra: Padé approximant with scaling and squaring).
pub fn expm(m: &DMatrix<f64>) -> DMatrix<f64> {
    if m.nrows() == 0 {
        return m.clone();
    }
    m.clone().exp()
}
