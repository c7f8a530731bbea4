//! Finite-dimensional real Lie algebras given by structure constants.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::subspace::Subspace;

pub const JACOBI_TOL: f64 = 1e-12;

/// `[e_i, e_j] = Σ_k c[i][j][k] e_k`, stored flat at `(i*dim + j)*dim + k`.
#[derive(Clone, Debug, PartialEq)]
pub struct LieAlgebra {
    dim: usize,
    c: Vec<f64>,
    labels: Vec<String>,
}

/// Max over basis triples of ‖[[eᵢ,eⱼ],eₖ] + cyclic‖∞ for a raw tensor.
pub fn jacobi_residual(dim: usize, c: &[f64]) -> f64 {
    let at = |i: usize, j: usize, k: usize| c[(i * dim + j) * dim + k];
    // [[e_i,e_j],e_k] = Σ_m c_ij^m c_mk^l
    let dbl = |i: usize, j: usize, k: usize, l: usize| -> f64 {
        (0..dim).map(|m| at(i, j, m) * at(m, k, l)).sum()
    };
    let mut worst = 0.0f64;
    for i in 0..dim {
        for j in 0..dim {
            for k in 0..dim {
                for l in 0..dim {
                    let s = dbl(i, j, k, l) + dbl(j, k, i, l) + dbl(k, i, j, l);
                    worst = worst.max(s.abs());
                }
            }
        }
    }
    worst
}

impl LieAlgebra {
    /// Validated constructor: exact antisymmetry and Jacobi to `JACOBI_TOL`.
    pub fn new(dim: usize, c: Vec<f64>, labels: Vec<String>) -> Result<Self> {
        let alg = Self::unchecked(dim, c, labels)?;
        alg.validate()?;
        Ok(alg)
    }

    /// Shape checks only; used for diagnostics on deliberately broken tensors.
    pub fn unchecked(dim: usize, c: Vec<f64>, labels: Vec<String>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidAlgebra("dimension must be positive".into()));
        }
        if c.len() != dim * dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim * dim, found: c.len() });
        }
        if labels.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: labels.len() });
        }
        Ok(LieAlgebra { dim, c, labels })
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim;
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    if self.c(i, j, k) != -self.c(j, i, k) {
                        return Err(Error::InvalidAlgebra(format!(
                            "structure_constants[{i}][{j}][{k}] = {} is not the negative of [{j}][{i}][{k}] = {}",
                            self.c(i, j, k),
                            self.c(j, i, k)
                        )));
                    }
                }
            }
        }
        let r = self.check_jacobi();
        if !(r <= JACOBI_TOL) {
            return Err(Error::InvalidAlgebra(format!("Jacobi residual {r:e} exceeds {JACOBI_TOL:e}")));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn structure_constants(&self) -> &[f64] {
        &self.c
    }

    #[inline]
    pub fn c(&self, i: usize, j: usize, k: usize) -> f64 {
        self.c[(i * self.dim + j) * self.dim + k]
    }

    pub fn check_jacobi(&self) -> f64 {
        jacobi_residual(self.dim, &self.c)
    }

    pub fn bracket(&self, x: &DVector<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
        for v in [x, y] {
            if v.len() != self.dim {
                return Err(Error::DimensionMismatch { expected: self.dim, found: v.len() });
            }
        }
        Ok(self.bracket_unchecked(x, y))
    }

    pub(crate) fn bracket_unchecked(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        let d = self.dim;
        let mut out = DVector::zeros(d);
        for i in 0..d {
            if x[i] == 0.0 {
                continue;
            }
            for j in 0..d {
                let s = x[i] * y[j];
                if s == 0.0 {
                    continue;
                }
                let base = (i * d + j) * d;
                for k in 0..d {
                    out[k] += s * self.c[base + k];
                }
            }
        }
        out
    }

    /// Matrix of `ad_x = [x, ·]`.
    pub fn ad(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let d = self.dim;
        let mut m = DMatrix::zeros(d, d);
        for i in 0..d {
            if x[i] == 0.0 {
                continue;
            }
            for j in 0..d {
                for k in 0..d {
                    m[(k, j)] += x[i] * self.c(i, j, k);
                }
            }
        }
        m
    }

    pub fn basis_vector(&self, i: usize) -> DVector<f64> {
        let mut e = DVector::zeros(self.dim);
        e[i] = 1.0;
        e
    }

    pub fn is_abelian(&self) -> bool {
        self.c.iter().all(|&x| x == 0.0)
    }

    pub fn abelian(dim: usize) -> Self {
        let labels = (1..=dim).map(|i| format!("e{i}")).collect();
        LieAlgebra { dim, c: vec![0.0; dim * dim * dim], labels }
    }

    /// so(3) with `[X_i, X_j] = ε_ijk X_k`.
    pub fn so3() -> Self {
        let mut c = vec![0.0; 27];
        for (i, j, k) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
            c[(i * 3 + j) * 3 + k] = 1.0;
            c[(j * 3 + i) * 3 + k] = -1.0;
        }
        LieAlgebra { dim: 3, c, labels: vec!["X1".into(), "X2".into(), "X3".into()] }
    }

    /// Restriction to the coordinate block `[start, start+len)`; errors if the block is not closed.
    pub fn restrict(&self, start: usize, len: usize) -> Result<Self> {
        let end = start + len;
        if end > self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: end });
        }
        let mut c = vec![0.0; len * len * len];
        for i in start..end {
            for j in start..end {
                for k in 0..self.dim {
                    let v = self.c(i, j, k);
                    if !(start..end).contains(&k) {
                        if v != 0.0 {
                            return Err(Error::InvalidAlgebra(format!(
                                "block [{start},{end}) is not a subalgebra: [e{i},e{j}] has component {v} on e{k}"
                            )));
                        }
                        continue;
                    }
                    c[((i - start) * len + (j - start)) * len + (k - start)] = v;
                }
            }
        }
        Self::new(len, c, self.labels[start..end].to_vec())
    }
}

/// Smallest ideal containing `seed`: iterate `S ← S + [𝔤, S]` to a fixed point.
pub fn bracket_closure(alg: &LieAlgebra, seed: &Subspace) -> Result<Subspace> {
    let d = alg.dim();
    if seed.ambient_dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: seed.ambient_dim() });
    }
    let mut cur = seed.clone();
    for _ in 0..=d {
        let mut vs = cur.basis_vectors();
        for b in cur.basis_vectors() {
            for i in 0..d {
                vs.push(alg.bracket_unchecked(&alg.basis_vector(i), &b));
            }
        }
        let next = Subspace::span_of(d, &vs, seed.tol())?;
        if next.dim() == cur.dim() {
            return Ok(next);
        }
        cur = next;
    }
    Ok(cur)
}
