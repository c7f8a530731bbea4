use nalgebra::{DMatrix, DVector};

use super::HomogeneousModel;

/// `R[i][j][k][l] = g(R(e_i, e_j) e_k, e_l)` with `R(X,Y) = ∇_X∇_Y − ∇_Y∇_X − ∇_[X,Y]`.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureTensor {
    dim: usize,
    data: Vec<f64>,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct SymmetryResiduals {
    pub skew_ij: f64,
    pub skew_kl: f64,
    pub pair: f64,
    pub bianchi: f64,
}

impl SymmetryResiduals {
    pub fn max(&self) -> f64 {
        self.skew_ij.max(self.skew_kl).max(self.pair).max(self.bianchi)
    }
}

impl CurvatureTensor {
    pub fn from_raw(dim: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), dim.pow(4));
        CurvatureTensor { dim, data }
    }

    pub fn zero(dim: usize) -> Self {
        Self::from_raw(dim, vec![0.0; dim.pow(4)])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn raw(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    fn idx(&self, i: usize, j: usize, k: usize, l: usize) -> usize {
        ((i * self.dim + j) * self.dim + k) * self.dim + l
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.data[self.idx(i, j, k, l)]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn max_abs_diff(&self, other: &CurvatureTensor) -> f64 {
        self.data.iter().zip(&other.data).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Multilinear evaluation R(x, y, z, w).
    pub fn eval(&self, x: &DVector<f64>, y: &DVector<f64>, z: &DVector<f64>, w: &DVector<f64>) -> f64 {
        let d = self.dim;
        let mut s = 0.0;
        for i in 0..d {
            if x[i] == 0.0 {
                continue;
            }
            for j in 0..d {
                if y[j] == 0.0 {
                    continue;
                }
                for k in 0..d {
                    if z[k] == 0.0 {
                        continue;
                    }
                    for l in 0..d {
                        s += x[i] * y[j] * z[k] * w[l] * self.get(i, j, k, l);
                    }
                }
            }
        }
        s
    }

    /// Lowered block R(x, y, ·, ·) as a d×d matrix `[k][l]`.
    pub fn lowered_block(&self, x: &DVector<f64>, y: &DVector<f64>) -> DMatrix<f64> {
        let d = self.dim;
        let mut m = DMatrix::zeros(d, d);
        for i in 0..d {
            if x[i] == 0.0 {
                continue;
            }
            for j in 0..d {
                let s = x[i] * y[j];
                if s == 0.0 {
                    continue;
                }
                for k in 0..d {
                    for l in 0..d {
                        m[(k, l)] += s * self.get(i, j, k, l);
                    }
                }
            }
        }
        m
    }

    /// The endomorphism R_{x,y} (index raised with `metric_inv`).
    pub fn operator(&self, x: &DVector<f64>, y: &DVector<f64>, metric_inv: &DMatrix<f64>) -> DMatrix<f64> {
        // column k of R_{x,y} is g⁻¹ (R(x,y,e_k,e_l))_l
        metric_inv * self.lowered_block(x, y).transpose()
    }

    /// The map v ↦ (R(v, e_j, e_k, e_l))_{jkl} as a d³×d matrix; its kernel is the nullity.
    pub fn first_slot_matrix(&self) -> DMatrix<f64> {
        let d = self.dim;
        let d3 = d * d * d;
        let mut m = DMatrix::zeros(d3, d);
        for v in 0..d {
            m.column_mut(v).copy_from_slice(&self.data[v * d3..(v + 1) * d3]);
        }
        m
    }

    pub fn sectional(&self, metric: &DMatrix<f64>, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        let gxx = (x.transpose() * metric * x)[(0, 0)];
        let gyy = (y.transpose() * metric * y)[(0, 0)];
        let gxy = (x.transpose() * metric * y)[(0, 0)];
        self.eval(x, y, y, x) / (gxx * gyy - gxy * gxy)
    }

    /// Symmetry defects relative to ‖R‖∞ (zero tensor ⇒ zeros).
    pub fn symmetry_residuals(&self) -> SymmetryResiduals {
        let d = self.dim;
        let mut r = SymmetryResiduals::default();
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    for l in 0..d {
                        let v = self.get(i, j, k, l);
                        r.skew_ij = r.skew_ij.max((v + self.get(j, i, k, l)).abs());
                        r.skew_kl = r.skew_kl.max((v + self.get(i, j, l, k)).abs());
                        r.pair = r.pair.max((v - self.get(k, l, i, j)).abs());
                        r.bianchi = r.bianchi.max((v + self.get(j, k, i, l) + self.get(k, i, j, l)).abs());
                    }
                }
            }
        }
        let scale = self.max_abs();
        if scale > 0.0 {
            r.skew_ij /= scale;
            r.skew_kl /= scale;
            r.pair /= scale;
            r.bianchi /= scale;
        }
        r
    }
}

fn lower(model: &HomogeneousModel, ops: impl Fn(usize, usize) -> DMatrix<f64>) -> CurvatureTensor {
    let d = model.dim();
    let g = model.metric();
    let mut data = vec![0.0; d.pow(4)];
    for i in 0..d {
        for j in 0..d {
            let low = ops(i, j).transpose() * g;
            for k in 0..d {
                for l in 0..d {
                    data[((i * d + j) * d + k) * d + l] = low[(k, l)];
                }
            }
        }
    }
    CurvatureTensor { dim: d, data }
}

/// Curvature from Killing germs: `R_{e_i,e_j} = B_{−[e_i,e_j]} + [B_i, B_j]`.
pub fn curvature(model: &HomogeneousModel) -> CurvatureTensor {
    let d = model.dim();
    let alg = model.algebra();
    let conn = model.connection();
    let b: Vec<DMatrix<f64>> = (0..d).map(|i| conn.op_second(&alg.basis_vector(i))).collect();
    lower(model, |i, j| {
        let mut m = &b[i] * &b[j] - &b[j] * &b[i];
        for k in 0..d {
            let c = alg.c(i, j, k);
            if c != 0.0 {
                m -= &b[k] * c;
            }
        }
        m
    })
}

/// Second path: left-invariant fields, `R(X,Y) = [N_X, N_Y] − N_[X,Y]`.
pub fn curvature_oracle(model: &HomogeneousModel) -> CurvatureTensor {
    let d = model.dim();
    let alg = model.algebra();
    let left = model.left_connection();
    let n: Vec<DMatrix<f64>> = (0..d).map(|i| left.op_first(&alg.basis_vector(i))).collect();
    lower(model, |i, j| {
        let xy = alg.bracket_unchecked(&alg.basis_vector(i), &alg.basis_vector(j));
        &n[i] * &n[j] - &n[j] * &n[i] - left.op_first(&xy)
    })
}

/// `(B.R)(a,b,c,d) = −R(Ba,b,c,d) − R(a,Bb,c,d) − R(a,b,Bc,d) − R(a,b,c,Bd)`.
pub fn derivation_action(r: &CurvatureTensor, b: &DMatrix<f64>) -> CurvatureTensor {
    let d = r.dim;
    let mut out = vec![0.0; d.pow(4)];
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                for l in 0..d {
                    let mut s = 0.0;
                    for m in 0..d {
                        s += b[(m, i)] * r.get(m, j, k, l)
                            + b[(m, j)] * r.get(i, m, k, l)
                            + b[(m, k)] * r.get(i, j, m, l)
                            + b[(m, l)] * r.get(i, j, k, m);
                    }
                    out[((i * d + j) * d + k) * d + l] = -s;
                }
            }
        }
    }
    CurvatureTensor { dim: d, data: out }
}

/// ‖B.R‖∞.
pub fn curvature_stabilizer_check(r: &CurvatureTensor, b: &DMatrix<f64>) -> f64 {
    derivation_action(r, b).max_abs()
}

/// ∇R at e: `(∇_{e_m} R) = N_m . R` with N_m u = ∇_{e_m} u on left-invariant fields
/// (the derivative term vanishes by invariance).
#[derive(Clone, Debug)]
pub struct NablaCurvature {
    dim: usize,
    slots: Vec<CurvatureTensor>,
}

impl NablaCurvature {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn slot(&self, m: usize) -> &CurvatureTensor {
        &self.slots[m]
    }

    #[inline]
    pub fn get(&self, m: usize, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.slots[m].get(i, j, k, l)
    }

    /// ∇_v R.
    pub fn along(&self, v: &DVector<f64>) -> CurvatureTensor {
        let d = self.dim;
        let mut data = vec![0.0; d.pow(4)];
        for (m, s) in self.slots.iter().enumerate() {
            if v[m] == 0.0 {
                continue;
            }
            for (o, x) in data.iter_mut().zip(&s.data) {
                *o += v[m] * x;
            }
        }
        CurvatureTensor { dim: d, data }
    }

    pub fn max_abs(&self) -> f64 {
        self.slots.iter().fold(0.0, |m, s| m.max(s.max_abs()))
    }
}

pub fn nabla_curvature(model: &HomogeneousModel) -> NablaCurvature {
    let d = model.dim();
    let r = model.curvature();
    let conn = model.connection();
    let alg = model.algebra();
    // N(x,u) = Λ(x,u) + [x,u]
    let slots = (0..d)
        .map(|m| {
            let e = alg.basis_vector(m);
            let n_m = conn.op_first(&e) + alg.ad(&e);
            derivation_action(r, &n_m)
        })
        .collect();
    NablaCurvature { dim: d, slots }
}
