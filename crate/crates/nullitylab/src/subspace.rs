//! Tolerance-aware subspaces of ℝᵐ held as orthonormal column bases.
//!
//! Every rank decision goes through one rule: singular values below
//! `tol × σ_max` are treated as zero (optionally `tol × max(σ_max, scale)`
//! when the caller knows the natural size of the data).

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};

use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct Subspace {
    ambient_dim: usize,
    /// ambient_dim × dim, orthonormal columns.
    basis: DMatrix<f64>,
    tol: f64,
}

/// Left singular vectors and singular values of `m` (rows ≥ 1, cols ≥ 1).
///
/// nalgebra's bidiagonal SVD can stop early with its default threshold and
/// silently return a wrong factorization, so every result is checked by
/// reconstruction; on failure we retry tighter, then fall back to one-sided Jacobi.
pub fn left_svd(m: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>) {
    let scale = m.amax().max(f64::MIN_POSITIVE);
    let ok = |u: &DMatrix<f64>, s: &DVector<f64>, vt: &DMatrix<f64>| {
        let rec = u * DMatrix::from_diagonal(s) * vt;
        (rec - m).amax() <= 1e-13 * scale * (m.nrows().max(m.ncols()) as f64)
    };
    for eps in [f64::EPSILON, 1e-17, 1e-18] {
        if let Some(svd) = SVD::try_new(m.clone(), true, true, eps, 5000) {
            let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
            if ok(&u, &svd.singular_values, &vt) {
                return (u, svd.singular_values);
            }
        }
    }
    jacobi_left_svd(m)
}

/// Eigen-decomposition of a symmetric matrix, validated by reconstruction
/// (retried with tighter convergence thresholds; Jacobi SVD of a shifted
/// matrix as the last resort).
pub fn sym_eigen(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let sym = (m + m.transpose()) * 0.5;
    let scale = sym.amax().max(f64::MIN_POSITIVE);
    for eps in [f64::EPSILON, 1e-17, 1e-18] {
        if let Some(e) = SymmetricEigen::try_new(sym.clone(), eps, 5000) {
            let rec = &e.eigenvectors * DMatrix::from_diagonal(&e.eigenvalues) * e.eigenvectors.transpose();
            if (rec - &sym).amax() <= 1e-13 * scale * sym.nrows() as f64 {
                return (e.eigenvalues, e.eigenvectors);
            }
        }
    }
    // shift to SPD, then singular values are eigenvalues
    let n = sym.nrows();
    let shift = 2.0 * scale * n as f64;
    let (u, s, _) = jacobi_core(&sym + DMatrix::identity(n, n) * shift);
    (s.map(|x| x - shift), u)
}

/// One-sided Jacobi fallback. For wide m, factor mᵀ = U′ΣV′ᵀ; then m's left vectors are V′.
fn jacobi_left_svd(m: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>) {
    if m.ncols() > m.nrows() {
        let (_, s, v) = jacobi_core(m.transpose());
        (v, s)
    } else {
        let (u, s, _) = jacobi_core(m.clone());
        (u, s)
    }
}

/// Returns (U, σ, V) with A = U diag(σ) Vᵀ, A with rows ≥ cols.
fn jacobi_core(mut a: DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>, DMatrix<f64>) {
    let n = a.ncols();
    let mut v = DMatrix::<f64>::identity(n, n);
    for _sweep in 0..100 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = a.column(p).norm_squared();
                let beta = a.column(q).norm_squared();
                let gamma = a.column(p).dot(&a.column(q));
                if gamma == 0.0 || gamma.abs() <= 1e-17 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for mat in [&mut a, &mut v] {
                    for r in 0..mat.nrows() {
                        let (x, y) = (mat[(r, p)], mat[(r, q)]);
                        mat[(r, p)] = c * x - s * y;
                        mat[(r, q)] = s * x + c * y;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let sig = DVector::from_iterator(n, (0..n).map(|j| a.column(j).norm()));
    let mut u = DMatrix::zeros(a.nrows(), n);
    for j in 0..n {
        if sig[j] > 0.0 {
            u.set_column(j, &(a.column(j) / sig[j]));
        }
    }
    (u, sig, v)
}

/// Orthonormal basis of the column space of `m`: keep σ ≥ tol·max(σ_max, floor).
fn column_space(m: &DMatrix<f64>, tol: f64, floor: f64) -> DMatrix<f64> {
    let rows = m.nrows();
    if m.ncols() == 0 || rows == 0 {
        return DMatrix::zeros(rows, 0);
    }
    let (u, sv) = left_svd(m);
    let smax = sv.max();
    if !(smax > 0.0) {
        return DMatrix::zeros(rows, 0);
    }
    let cut = tol * smax.max(floor);
    let keep: Vec<usize> = (0..sv.len()).filter(|&i| sv[i] >= cut).collect();
    let mut q = DMatrix::zeros(rows, keep.len());
    for (c, &i) in keep.iter().enumerate() {
        q.set_column(c, &u.column(i));
    }
    q
}

impl Subspace {
    pub fn zero(ambient_dim: usize, tol: f64) -> Self {
        Subspace { ambient_dim, basis: DMatrix::zeros(ambient_dim, 0), tol }
    }

    pub fn full(ambient_dim: usize, tol: f64) -> Self {
        Subspace { ambient_dim, basis: DMatrix::identity(ambient_dim, ambient_dim), tol }
    }

    /// Span of a list of vectors. An empty list gives the zero subspace.
    pub fn span_of(ambient_dim: usize, vectors: &[DVector<f64>], tol: f64) -> Result<Self> {
        Self::span_scaled(ambient_dim, vectors, tol, 0.0)
    }

    /// Span of the columns of `m`.
    pub fn from_columns(m: &DMatrix<f64>, tol: f64) -> Self {
        Self::from_columns_scaled(m, tol, 0.0)
    }

    /// Like `from_columns`, but singular values are judged against
    /// `max(σ_max, scale)`, so data that is pure rounding noise relative to
    /// a known natural scale collapses to the zero subspace.
    pub fn from_columns_scaled(m: &DMatrix<f64>, tol: f64, scale: f64) -> Self {
        Subspace { ambient_dim: m.nrows(), basis: column_space(m, tol, scale), tol }
    }

    pub fn span_scaled(ambient_dim: usize, vectors: &[DVector<f64>], tol: f64, scale: f64) -> Result<Self> {
        for v in vectors {
            if v.len() != ambient_dim {
                return Err(Error::DimensionMismatch { expected: ambient_dim, found: v.len() });
            }
        }
        let mut m = DMatrix::zeros(ambient_dim, vectors.len());
        for (j, v) in vectors.iter().enumerate() {
            m.set_column(j, v);
        }
        Ok(Self::from_columns_scaled(&m, tol, scale))
    }

    /// Null space of an m×n operator: the complement of its row space.
    pub fn kernel_of(op: &DMatrix<f64>, tol: f64) -> Self {
        Self::kernel_scaled(op, tol, 0.0)
    }

    pub fn kernel_scaled(op: &DMatrix<f64>, tol: f64, scale: f64) -> Self {
        let n = op.ncols();
        if op.nrows() == 0 {
            return Self::full(n, tol);
        }
        Self::from_columns_scaled(&op.transpose(), tol, scale).complement()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn is_zero(&self) -> bool {
        self.dim() == 0
    }

    pub fn is_full(&self) -> bool {
        self.dim() == self.ambient_dim
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn basis_vectors(&self) -> Vec<DVector<f64>> {
        (0..self.dim()).map(|j| self.basis.column(j).into_owned()).collect()
    }

    pub fn projector(&self) -> DMatrix<f64> {
        &self.basis * self.basis.transpose()
    }

    fn check(&self, found: usize) -> Result<()> {
        if found != self.ambient_dim {
            return Err(Error::DimensionMismatch { expected: self.ambient_dim, found });
        }
        Ok(())
    }

    pub fn project(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check(x.len())?;
        Ok(&self.basis * (self.basis.transpose() * x))
    }

    /// ‖x − Px‖, absolute.
    pub fn residual(&self, x: &DVector<f64>) -> Result<f64> {
        Ok((x - self.project(x)?).norm())
    }

    pub fn contains_with(&self, x: &DVector<f64>, tol: f64) -> Result<bool> {
        Ok(self.residual(x)? <= tol * x.norm())
    }

    pub fn contains(&self, x: &DVector<f64>) -> Result<bool> {
        self.contains_with(x, self.tol)
    }

    /// Largest residual of `other`'s basis vectors against `self` (0 when contained).
    pub fn containment_residual(&self, other: &Subspace) -> Result<f64> {
        self.check(other.ambient_dim)?;
        if other.is_zero() {
            return Ok(0.0);
        }
        let r = &other.basis - &self.basis * (self.basis.transpose() * &other.basis);
        Ok((0..r.ncols()).map(|j| r.column(j).norm()).fold(0.0, f64::max))
    }

    pub fn contains_subspace(&self, other: &Subspace) -> Result<bool> {
        Ok(self.containment_residual(other)? <= self.tol)
    }

    pub fn complement(&self) -> Self {
        let m = self.ambient_dim;
        let k = self.dim();
        if k == 0 {
            return Self::full(m, self.tol);
        }
        if k == m {
            return Self::zero(m, self.tol);
        }
        // Singular values of I − QQᵀ are 1 on the complement and 0 on span Q.
        let (u, sv) = left_svd(&(DMatrix::identity(m, m) - self.projector()));
        let cols: Vec<usize> = (0..sv.len()).filter(|&i| sv[i] > 0.5).collect();
        let mut b = DMatrix::zeros(m, cols.len());
        for (c, &i) in cols.iter().enumerate() {
            b.set_column(c, &u.column(i));
        }
        Subspace { ambient_dim: m, basis: b, tol: self.tol }
    }

    pub fn sum(&self, other: &Subspace) -> Result<Self> {
        self.check(other.ambient_dim)?;
        let mut m = DMatrix::zeros(self.ambient_dim, self.dim() + other.dim());
        m.columns_mut(0, self.dim()).copy_from(&self.basis);
        m.columns_mut(self.dim(), other.dim()).copy_from(&other.basis);
        Ok(Self::from_columns(&m, self.tol))
    }

    /// A ∩ B as (A^⊥ + B^⊥)^⊥.
    pub fn intersect(&self, other: &Subspace) -> Result<Self> {
        self.check(other.ambient_dim)?;
        Ok(self.complement().sum(&other.complement())?.complement())
    }

    /// Image of the subspace under a linear map, as a subspace of the target.
    pub fn image(&self, map: &DMatrix<f64>) -> Result<Self> {
        self.check(map.ncols())?;
        Ok(Self::from_columns(&(map * &self.basis), self.tol))
    }

    /// Largest principal-angle sine between equal-dimensional subspaces.
    pub fn distance(&self, other: &Subspace) -> Result<f64> {
        if self.dim() != other.dim() {
            return Ok(1.0);
        }
        Ok(self.containment_residual(other)?.max(other.containment_residual(self)?))
    }
}
