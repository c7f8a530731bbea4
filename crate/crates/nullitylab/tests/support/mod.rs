//! Exact rational-arithmetic oracles, independent of the library's floating
//! point code paths.
#![allow(dead_code)]

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

pub type Q = BigRational;
pub type QMat = Vec<Vec<Q>>;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn qf(x: f64) -> Q {
    Q::from_float(x).expect("finite")
}

pub fn to_f64(x: &Q) -> f64 {
    x.to_f64().expect("representable")
}

pub fn zeros(r: usize, c: usize) -> QMat {
    vec![vec![Q::zero(); c]; r]
}

pub fn matmul(a: &QMat, b: &QMat) -> QMat {
    let (r, k, c) = (a.len(), b.len(), b[0].len());
    let mut out = zeros(r, c);
    for i in 0..r {
        for j in 0..c {
            let mut s = Q::zero();
            for t in 0..k {
                s += &a[i][t] * &b[t][j];
            }
            out[i][j] = s;
        }
    }
    out
}

/// Row-reduction rank.
pub fn rank(m: &QMat) -> usize {
    if m.is_empty() {
        return 0;
    }
    let mut a = m.clone();
    let (rows, cols) = (a.len(), a[0].len());
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else { continue };
        a.swap(r, p);
        let piv = a[r][c].clone();
        for i in 0..rows {
            if i != r && !a[i][c].is_zero() {
                let f = &a[i][c] / &piv;
                for j in c..cols {
                    let t = &f * &a[r][j];
                    a[i][j] -= t;
                }
            }
        }
        r += 1;
        if r == rows {
            break;
        }
    }
    r
}

type Mono = (usize, usize, usize);

fn fact(k: usize) -> Q {
    (1..=k).fold(q(1), |acc, i| acc * q(i as i64))
}

fn monomials(l: usize) -> Vec<Mono> {
    let mut out = Vec::new();
    for a in (0..=l).rev() {
        for b in (0..=l - a).rev() {
            out.push((a, b, l - a - b));
        }
    }
    out
}

/// Harmonic polynomial with leading monomial `seed` (z-degree ≤ 1), found by
/// solving Δp = 0 for the coefficients of higher z-powers.
fn harmonic(seed: Mono, l: usize) -> BTreeMap<Mono, Q> {
    let mut p = BTreeMap::new();
    p.insert(seed, q(1));
    // p = Σ_k z^k f_k(x,y) with f_{k+2} = −Δ_xy f_k / ((k+1)(k+2)).
    let mut cur: BTreeMap<Mono, Q> = p.clone();
    let mut k = seed.2;
    while k + 2 <= l {
        let mut next: BTreeMap<Mono, Q> = BTreeMap::new();
        for ((x, y, z), c) in &cur {
            let den = q(((k + 1) * (k + 2)) as i64);
            if *x >= 2 {
                *next.entry((x - 2, *y, z + 2)).or_insert_with(Q::zero) -= c * q((x * (x - 1)) as i64) / &den;
            }
            if *y >= 2 {
                *next.entry((*x, y - 2, z + 2)).or_insert_with(Q::zero) -= c * q((y * (y - 1)) as i64) / &den;
            }
        }
        next.retain(|_, c| !c.is_zero());
        if next.is_empty() {
            break;
        }
        for (m, c) in &next {
            *p.entry(*m).or_insert_with(Q::zero) += c;
        }
        cur = next;
        k += 2;
    }
    p
}

/// Exact data for the spin-ℓ module: an orthogonal (unnormalized) basis u_i of
/// harmonic polynomials, its squared Fischer norms N_i, and the raw pairings
/// P^a_ij = ⟨u_i, ρ(E_a) u_j⟩. The orthonormal generators are
/// G^a_ij = P^a_ij / √(N_i N_j); the rational representation matrices are
/// M^a_ij = P^a_ij / N_i.
pub struct ExactIrrep {
    pub n: usize,
    pub norms: Vec<Q>,
    pub pairings: Vec<QMat>,
}

impl ExactIrrep {
    pub fn new(n: usize) -> Self {
        assert!(n % 2 == 1 && n >= 3);
        let l = (n - 1) / 2;
        let monos = monomials(l);
        let m = monos.len();
        let idx: BTreeMap<Mono, usize> = monos.iter().enumerate().map(|(i, mo)| (*mo, i)).collect();
        let w: Vec<Q> = monos.iter().map(|&(a, b, c)| fact(a) * fact(b) * fact(c)).collect();
        let dot = |u: &[Q], v: &[Q]| -> Q { (0..m).fold(Q::zero(), |s, i| s + &u[i] * &w[i] * &v[i]) };

        let mut seeds: Vec<Mono> = (0..=l).rev().map(|a| (a, l - a, 0)).collect();
        seeds.extend((0..l).rev().map(|a| (a, l - 1 - a, 1)));
        let mut basis: Vec<Vec<Q>> = Vec::new();
        let mut norms = Vec::new();
        for s in seeds {
            let mut v = vec![Q::zero(); m];
            for (mo, c) in harmonic(s, l) {
                v[idx[&mo]] += c;
            }
            for (u, nu) in basis.iter().zip(&norms) {
                let f = dot(u, &v) / nu;
                for t in 0..m {
                    let d = &f * &u[t];
                    v[t] -= d;
                }
            }
            norms.push(dot(&v, &v));
            basis.push(v);
        }

        // E_a x = e_a × x; ρ(E)p = −∇p·(E x).
        let cross: [[(usize, usize, i64); 2]; 3] = [[(2, 1, 1), (1, 2, -1)], [(0, 2, 1), (2, 0, -1)], [(1, 0, 1), (0, 1, -1)]];
        let mut pairings = Vec::new();
        for e in cross {
            let mut act = zeros(m, m);
            for (j, &(a, b, c)) in monos.iter().enumerate() {
                let ex = [a, b, c];
                for &(row, col, val) in &e {
                    if ex[row] == 0 {
                        continue;
                    }
                    let mut f = ex;
                    f[row] -= 1;
                    f[col] += 1;
                    act[idx[&(f[0], f[1], f[2])]][j] -= q(val * ex[row] as i64);
                }
            }
            let mut p = zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    let au: Vec<Q> =
                        (0..m).map(|t| (0..m).fold(Q::zero(), |s, r| s + &act[t][r] * &basis[j][r])).collect();
                    p[i][j] = dot(&basis[i], &au);
                }
            }
            pairings.push(p);
        }
        ExactIrrep { n, norms, pairings }
    }

    /// Rational representation matrices M^a (similar to the orthonormal ones).
    pub fn rational_generators(&self) -> Vec<QMat> {
        self.pairings
            .iter()
            .map(|p| (0..self.n).map(|i| (0..self.n).map(|j| &p[i][j] / &self.norms[i]).collect()).collect())
            .collect()
    }

    /// Exact value of G^a_ij as (sign, square).
    pub fn entry_squared(&self, a: usize, i: usize, j: usize) -> (i32, Q) {
        let p = &self.pairings[a][i][j];
        let sign = if p.is_zero() {
            0
        } else if p.is_positive() {
            1
        } else {
            -1
        };
        (sign, p * p / (&self.norms[i] * &self.norms[j]))
    }

    /// Casimir Σ M_a², exactly.
    pub fn casimir(&self) -> QMat {
        let gs = self.rational_generators();
        let mut out = zeros(self.n, self.n);
        for g in &gs {
            let g2 = matmul(g, g);
            for i in 0..self.n {
                for j in 0..self.n {
                    out[i][j] += &g2[i][j];
                }
            }
        }
        out
    }

    /// Dimensions of 𝕍₀ = span(e_0..e_{v0−1}) ⊂ 𝕍₁ ⊂ … up to ℝⁿ. Coordinate
    /// subspaces are invariant under the diagonal rescaling between the rational
    /// and orthonormal bases, so these are the dims for the orthonormal generators too.
    pub fn filtration_dims(&self, v0: usize) -> Vec<usize> {
        let gs = self.rational_generators();
        let n = self.n;
        let mut cur: Vec<Vec<Q>> = (0..v0).map(|i| (0..n).map(|j| if i == j { q(1) } else { q(0) }).collect()).collect();
        let mut dims = vec![rank(&cur)];
        for _ in 0..n {
            if *dims.last().unwrap() == n {
                break;
            }
            let mut next = cur.clone();
            for g in &gs {
                for v in &cur {
                    next.push((0..n).map(|i| (0..n).fold(Q::zero(), |s, j| s + &g[i][j] * &v[j])).collect());
                }
            }
            let r = rank(&next);
            if r == *dims.last().unwrap() {
                break;
            }
            dims.push(r);
            cur = next;
        }
        dims
    }
}

/// Structure constants of ℝⁿ⋊so(3) built from rational generators, flat (i·d+j)·d+k.
pub fn semidirect_exact(gens: &[QMat]) -> (usize, Vec<Q>) {
    let n = gens[0].len();
    let d = n + 3;
    let mut c = vec![Q::zero(); d * d * d];
    let at = |i: usize, j: usize, k: usize| (i * d + j) * d + k;
    for (i, j, k) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
        c[at(n + i, n + j, n + k)] = q(1);
        c[at(n + j, n + i, n + k)] = q(-1);
    }
    for (a, g) in gens.iter().enumerate() {
        for j in 0..n {
            for i in 0..n {
                c[at(n + a, j, i)] = g[i][j].clone();
                c[at(j, n + a, i)] = -g[i][j].clone();
            }
        }
    }
    (d, c)
}

/// max |Jacobi cyclic sum| over basis triples, exactly.
pub fn jacobi_exact(d: usize, c: &[Q]) -> Q {
    let at = |i: usize, j: usize, k: usize| (i * d + j) * d + k;
    let mut worst = Q::zero();
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                for m in 0..d {
                    let mut s = Q::zero();
                    for l in 0..d {
                        s += &c[at(i, j, l)] * &c[at(l, k, m)];
                        s += &c[at(j, k, l)] * &c[at(l, i, m)];
                        s += &c[at(k, i, l)] * &c[at(l, j, m)];
                    }
                    let s = s.abs();
                    if s > worst {
                        worst = s;
                    }
                }
            }
        }
    }
    worst
}

/// Curvature of a left-invariant metric from the textbook left-invariant
/// Koszul formula, exactly: returns ⟨R(e_i,e_j)e_k, e_l⟩ with
/// R(X,Y) = ∇_X∇_Y − ∇_Y∇_X − ∇_{[X,Y]}.
pub fn curvature_exact(d: usize, c: &[Q], g: &QMat) -> Vec<Q> {
    let at = |i: usize, j: usize, k: usize| (i * d + j) * d + k;
    let ginv = invert(g);
    // gb[i][j][z] = ⟨[e_i,e_j], e_z⟩
    let gb = |i: usize, j: usize, z: usize| (0..d).fold(Q::zero(), |s, k| s + &c[at(i, j, k)] * &g[k][z]);
    // ∇_{e_i} e_j = Σ_k nabla[i][j][k] e_k
    let mut nabla = vec![Q::zero(); d * d * d];
    for i in 0..d {
        for j in 0..d {
            let low: Vec<Q> =
                (0..d).map(|z| (gb(i, j, z) - gb(j, z, i) + gb(z, i, j)) / q(2)).collect();
            for k in 0..d {
                nabla[at(i, j, k)] = (0..d).fold(Q::zero(), |s, z| s + &ginv[k][z] * &low[z]);
            }
        }
    }
    let nab_vec = |i: usize, v: &[Q]| -> Vec<Q> {
        (0..d).map(|k| (0..d).fold(Q::zero(), |s, j| s + &v[j] * &nabla[at(i, j, k)])).collect()
    };
    let mut r = vec![Q::zero(); d * d * d * d];
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                let ek: Vec<Q> = (0..d).map(|t| if t == k { q(1) } else { q(0) }).collect();
                let a = nab_vec(i, &nab_vec(j, &ek));
                let b = nab_vec(j, &nab_vec(i, &ek));
                let mut cterm = vec![Q::zero(); d];
                for m in 0..d {
                    let cm = &c[at(i, j, m)];
                    if cm.is_zero() {
                        continue;
                    }
                    for t in 0..d {
                        cterm[t] += cm * &nabla[at(m, k, t)];
                    }
                }
                let vec: Vec<Q> = (0..d).map(|t| &a[t] - &b[t] - &cterm[t]).collect();
                for l in 0..d {
                    r[((i * d + j) * d + k) * d + l] = (0..d).fold(Q::zero(), |s, t| s + &vec[t] * &g[t][l]);
                }
            }
        }
    }
    r
}

pub fn invert(m: &QMat) -> QMat {
    let n = m.len();
    let mut a: QMat = m.iter().enumerate().map(|(i, row)| {
        let mut r = row.clone();
        r.extend((0..n).map(|j| if i == j { q(1) } else { q(0) }));
        r
    }).collect();
    for c in 0..n {
        let p = (c..n).find(|&i| !a[i][c].is_zero()).expect("invertible");
        a.swap(c, p);
        let piv = a[c][c].clone();
        for j in 0..2 * n {
            a[c][j] = &a[c][j] / &piv;
        }
        for i in 0..n {
            if i != c && !a[i][c].is_zero() {
                let f = a[i][c].clone();
                for j in 0..2 * n {
                    let t = &f * &a[c][j];
                    a[i][j] -= t;
                }
            }
        }
    }
    a.into_iter().map(|r| r[n..].to_vec()).collect()
}

pub fn so3_exact() -> (usize, Vec<Q>) {
    let d = 3;
    let mut c = vec![Q::zero(); 27];
    for (i, j, k) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
        c[(i * d + j) * d + k] = q(1);
        c[(j * d + i) * d + k] = q(-1);
    }
    (d, c)
}

pub fn identity(n: usize) -> QMat {
    (0..n).map(|i| (0..n).map(|j| if i == j { q(1) } else { q(0) }).collect()).collect()
}
