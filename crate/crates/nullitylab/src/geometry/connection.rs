use nalgebra::{DMatrix, DVector};

use super::HomogeneousModel;

/// Bilinear map on 𝔤 stored as `data[(x*d + y)*d + k] = Λ(e_x, e_y)_k`.
#[derive(Clone, Debug)]
pub struct ConnectionMap {
    dim: usize,
    data: Vec<f64>,
}

impl ConnectionMap {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn raw(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, k: usize) -> f64 {
        self.data[(x * self.dim + y) * self.dim + k]
    }

    pub fn apply(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
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
                for k in 0..d {
                    out[k] += s * self.get(i, j, k);
                }
            }
        }
        out
    }

    /// Operator u ↦ Λ(u, y).
    pub fn op_second(&self, y: &DVector<f64>) -> DMatrix<f64> {
        let d = self.dim;
        let mut m = DMatrix::zeros(d, d);
        for u in 0..d {
            for j in 0..d {
                if y[j] == 0.0 {
                    continue;
                }
                for k in 0..d {
                    m[(k, u)] += y[j] * self.get(u, j, k);
                }
            }
        }
        m
    }

    /// Operator u ↦ Λ(x, u).
    pub fn op_first(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let d = self.dim;
        let mut m = DMatrix::zeros(d, d);
        for i in 0..d {
            if x[i] == 0.0 {
                continue;
            }
            for u in 0..d {
                for k in 0..d {
                    m[(k, u)] += x[i] * self.get(i, u, k);
                }
            }
        }
        m
    }
}

/// Killing-field connection from the Koszul identity with vector-field brackets:
/// `2g(Λ(x,y), z) = −g([x,y],z) − g([x,z],y) − g([y,z],x)`
/// (structure brackets; the minus signs are the right-invariant identification).
pub fn killing_connection(model: &HomogeneousModel) -> ConnectionMap {
    let d = model.dim();
    let alg = model.algebra();
    let g = model.metric();
    // t[(x*d+y)*d+z] = g([e_x, e_y], e_z)
    let mut t = vec![0.0; d * d * d];
    for x in 0..d {
        for y in 0..d {
            for z in 0..d {
                t[(x * d + y) * d + z] = (0..d).map(|k| alg.c(x, y, k) * g[(k, z)]).sum();
            }
        }
    }
    let tt = |x: usize, y: usize, z: usize| t[(x * d + y) * d + z];
    let ginv = model.metric_inv();
    let mut data = vec![0.0; d * d * d];
    let mut rhs = DVector::zeros(d);
    for x in 0..d {
        for y in 0..d {
            for z in 0..d {
                rhs[z] = -0.5 * (tt(x, y, z) + tt(x, z, y) + tt(y, z, x));
            }
            let v = ginv * &rhs;
            data[(x * d + y) * d..(x * d + y + 1) * d].copy_from_slice(v.as_slice());
        }
    }
    ConnectionMap { dim: d, data }
}

/// Levi-Civita connection on left-invariant fields (textbook Koszul):
/// `2g(N(x,y), z) = g([x,y],z) − g([y,z],x) + g([z,x],y)`.
pub fn left_connection(model: &HomogeneousModel) -> ConnectionMap {
    let d = model.dim();
    let alg = model.algebra();
    let mut data = vec![0.0; d * d * d];
    let e: Vec<DVector<f64>> = (0..d).map(|i| alg.basis_vector(i)).collect();
    for x in 0..d {
        for y in 0..d {
            let xy = alg.bracket_unchecked(&e[x], &e[y]);
            let rhs = DVector::from_iterator(
                d,
                (0..d).map(|z| {
                    let yz = alg.bracket_unchecked(&e[y], &e[z]);
                    let zx = alg.bracket_unchecked(&e[z], &e[x]);
                    0.5 * (model.inner(&xy, &e[z]) - model.inner(&yz, &e[x]) + model.inner(&zx, &e[y]))
                }),
            );
            let v = model.metric_inv() * rhs;
            data[(x * d + y) * d..(x * d + y + 1) * d].copy_from_slice(v.as_slice());
        }
    }
    ConnectionMap { dim: d, data }
}
