//! Orthogonal representations of so(3) and the semidirect products ℝⁿ⋊𝔨.

use std::collections::HashMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::lie::LieAlgebra;
use crate::subspace::{Subspace, DEFAULT_TOL};

pub const SKEW_TOL: f64 = 1e-12;
pub const BRACKET_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct Representation {
    k_algebra: LieAlgebra,
    n: usize,
    generators: Vec<DMatrix<f64>>,
}

impl Representation {
    /// Validated: generators skew and bracket-compatible. Irreducibility is
    /// checked separately (`commutant_dim`), since reducible reps are legal values.
    pub fn new(k_algebra: LieAlgebra, generators: Vec<DMatrix<f64>>) -> Result<Self> {
        if generators.len() != k_algebra.dim() {
            return Err(Error::InvalidRepresentation(format!(
                "{} generators for a {}-dimensional algebra",
                generators.len(),
                k_algebra.dim()
            )));
        }
        let n = generators.first().map_or(0, |g| g.nrows());
        if n == 0 {
            return Err(Error::InvalidRepresentation("empty representation space".into()));
        }
        for (a, g) in generators.iter().enumerate() {
            if g.nrows() != n || g.ncols() != n {
                return Err(Error::InvalidRepresentation(format!("generator {a} is not {n}×{n}")));
            }
            let skew = (g + g.transpose()).amax();
            if skew > SKEW_TOL {
                return Err(Error::InvalidRepresentation(format!(
                    "generator {a} not skew-symmetric (residual {skew:e})"
                )));
            }
        }
        let rep = Representation { k_algebra, n, generators };
        let r = rep.bracket_residual();
        if r > BRACKET_TOL {
            return Err(Error::InvalidRepresentation(format!(
                "generators do not realize the bracket (residual {r:e})"
            )));
        }
        Ok(rep)
    }

    pub fn k_algebra(&self) -> &LieAlgebra {
        &self.k_algebra
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn generators(&self) -> &[DMatrix<f64>] {
        &self.generators
    }

    /// Action matrix of a 𝔨-vector.
    pub fn action(&self, x: &[f64]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for (xa, g) in x.iter().zip(&self.generators) {
            m += g * *xa;
        }
        m
    }

    /// max ‖[Gᵢ,Gⱼ] − Σ c_ij^k G_k‖∞.
    pub fn bracket_residual(&self) -> f64 {
        let m = self.k_algebra.dim();
        let mut worst = 0.0f64;
        for i in 0..m {
            for j in 0..m {
                let comm = &self.generators[i] * &self.generators[j] - &self.generators[j] * &self.generators[i];
                let coeffs: Vec<f64> = (0..m).map(|k| self.k_algebra.c(i, j, k)).collect();
                worst = worst.max((comm - self.action(&coeffs)).amax());
            }
        }
        worst
    }

    pub fn casimir(&self) -> DMatrix<f64> {
        self.generators.iter().fold(DMatrix::zeros(self.n, self.n), |acc, g| acc + g * g)
    }

    /// Dimension of {A : A Gₐ = Gₐ A ∀a}.
    pub fn commutant_dim(&self) -> usize {
        let n = self.n;
        let id = DMatrix::<f64>::identity(n, n);
        let mut stacked = DMatrix::zeros(n * n * self.generators.len(), n * n);
        for (a, g) in self.generators.iter().enumerate() {
            // vec(AG − GA) = (Gᵀ ⊗ I − I ⊗ G) vec(A), column-major vec.
            let blk = g.transpose().kronecker(&id) - id.kronecker(g);
            stacked.view_mut((a * n * n, 0), (n * n, n * n)).copy_from(&blk);
        }
        Subspace::kernel_of(&stacked, DEFAULT_TOL).dim()
    }

    pub fn is_irreducible(&self) -> bool {
        self.commutant_dim() == 1
    }
}

type Mono = (usize, usize, usize);

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Degree-ℓ monomials x^a y^b z^c in the fixed order a = ℓ..0, b = ℓ−a..0.
pub fn monomials(l: usize) -> Vec<Mono> {
    let mut out = Vec::new();
    for a in (0..=l).rev() {
        for b in (0..=l - a).rev() {
            out.push((a, b, l - a - b));
        }
    }
    out
}

/// Harmonic completion of a seed monomial of z-degree ≤ 1: add z-powers so Δp = 0.
pub fn harmonic_from_seed(seed: Mono) -> HashMap<Mono, f64> {
    let mut h: HashMap<Mono, f64> = HashMap::new();
    h.insert(seed, 1.0);
    let mut cur = h.clone();
    let mut k = seed.2;
    loop {
        let mut lap: HashMap<Mono, f64> = HashMap::new();
        for (&(x, y, z), &co) in &cur {
            if x >= 2 {
                *lap.entry((x - 2, y, z)).or_default() += co * (x * (x - 1)) as f64;
            }
            if y >= 2 {
                *lap.entry((x, y - 2, z)).or_default() += co * (y * (y - 1)) as f64;
            }
        }
        if lap.is_empty() {
            break;
        }
        let scale = -1.0 / ((k + 1) * (k + 2)) as f64;
        let next: HashMap<Mono, f64> = lap.into_iter().map(|((x, y, z), co)| ((x, y, z + 2), co * scale)).collect();
        k += 2;
        for (m, co) in &next {
            *h.entry(*m).or_default() += co;
        }
        cur = next;
    }
    h
}

/// Seeds (a, ℓ−a, 0) for a = ℓ..0, then (a, ℓ−1−a, 1) for a = ℓ−1..0.
pub fn harmonic_seeds(l: usize) -> Vec<Mono> {
    let mut s: Vec<Mono> = (0..=l).rev().map(|a| (a, l - a, 0)).collect();
    if l >= 1 {
        s.extend((0..l).rev().map(|a| (a, l - 1 - a, 1)));
    }
    s
}

/// Standard so(3) generators on ℝ³: `E_i x = e_i × x`.
pub fn so3_defining() -> Vec<DMatrix<f64>> {
    let mut e = vec![DMatrix::zeros(3, 3); 3];
    for (i, j, k) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
        e[i][(k, j)] = 1.0;
        e[i][(j, k)] = -1.0;
    }
    e
}

/// Real spin-ℓ representation of so(3) on harmonic polynomials of degree ℓ,
/// orthonormalized in the Fischer inner product (weight a!b!c!); n = 2ℓ+1.
/// For ℓ = 1 this reproduces the defining representation exactly.
pub fn so3_irrep(n: usize) -> Result<Representation> {
    if n < 3 || n % 2 == 0 {
        return Err(Error::UnsupportedRepresentation(format!(
            "so(3) irreps are built for odd n ≥ 3, got n = {n}"
        )));
    }
    let l = (n - 1) / 2;
    let monos = monomials(l);
    let idx: HashMap<Mono, usize> = monos.iter().enumerate().map(|(i, m)| (*m, i)).collect();
    let m = monos.len();
    let w: Vec<f64> = monos.iter().map(|&(a, b, c)| factorial(a) * factorial(b) * factorial(c)).collect();
    let wdot = |u: &[f64], v: &[f64]| -> f64 { (0..m).map(|i| u[i] * w[i] * v[i]).sum() };

    let mut q: Vec<Vec<f64>> = Vec::with_capacity(n);
    for seed in harmonic_seeds(l) {
        let mut v = vec![0.0; m];
        for (mono, co) in harmonic_from_seed(seed) {
            v[idx[&mono]] += co;
        }
        for qi in &q {
            let p = wdot(qi, &v);
            for t in 0..m {
                v[t] -= p * qi[t];
            }
        }
        let nrm = wdot(&v, &v).sqrt();
        q.push(v.into_iter().map(|x| x / nrm).collect());
    }

    let defining = so3_defining();
    let mut gens = Vec::with_capacity(3);
    for e in &defining {
        // ρ(E)p = −∇p · (E x), on monomial coordinates.
        let mut act = DMatrix::<f64>::zeros(m, m);
        for (j, &(a, b, c)) in monos.iter().enumerate() {
            let ex = [a, b, c];
            for r in 0..3 {
                if ex[r] == 0 {
                    continue;
                }
                for s in 0..3 {
                    if e[(r, s)] == 0.0 {
                        continue;
                    }
                    let mut f = ex;
                    f[r] -= 1;
                    f[s] += 1;
                    act[(idx[&(f[0], f[1], f[2])], j)] -= e[(r, s)] * ex[r] as f64;
                }
            }
        }
        let mut g = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let aqj: Vec<f64> = (0..m).map(|t| (0..m).map(|s| act[(t, s)] * q[j][s]).sum()).collect();
                g[(i, j)] = wdot(&q[i], &aqj);
            }
        }
        // Exact skew-symmetry: average away the rounding in the two triangles.
        let g = (&g - g.transpose()) * 0.5;
        gens.push(g);
    }
    Representation::new(LieAlgebra::so3(), gens)
}

/// ℝⁿ ⋊ 𝔨 with the ℝⁿ block first: [X, v] = ρ(X)v, [v, w] = 0.
pub fn semidirect(rep: &Representation) -> Result<LieAlgebra> {
    let n = rep.n();
    let k = rep.k_algebra();
    let m = k.dim();
    let d = n + m;
    let mut c = vec![0.0; d * d * d];
    let at = |i: usize, j: usize, l: usize| (i * d + j) * d + l;
    for a in 0..m {
        for b in 0..m {
            for l in 0..m {
                c[at(n + a, n + b, n + l)] = k.c(a, b, l);
            }
        }
        let g = &rep.generators()[a];
        for j in 0..n {
            for i in 0..n {
                c[at(n + a, j, i)] = g[(i, j)];
                c[at(j, n + a, i)] = -g[(i, j)];
            }
        }
    }
    let mut labels: Vec<String> = (1..=n).map(|i| format!("v{i}")).collect();
    labels.extend(k.labels().iter().cloned());
    LieAlgebra::new(d, c, labels)
}
