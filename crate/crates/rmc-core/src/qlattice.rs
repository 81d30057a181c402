//! Integral quadratic lattices, vector enumeration and the concrete models.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::linalg::{integer_kernel, ColumnEchelon};
use crate::nt;

/// (V, q) with an integral even Gram matrix: ⟨v, v⟩ = 2q(v).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuadLattice {
    gram: Vec<Vec<i64>>,
    p: u64,
    labels: Vec<String>,
    signature: (usize, usize),
}

/// v = p^pexp · coords.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LatticeVec {
    pub coords: Vec<i64>,
    pub pexp: i32,
    /// q(coords)
    pub q: i128,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathConstraint {
    pub w_minus: Vec<i64>,
    pub w_plus: Vec<i64>,
}

/// Intersection weights attached to path vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weighting {
    /// the intersection sign
    Sign,
    /// sign · χ₄(coord[idx] of the primitive part) · χ₄(p)^ord
    Chi4Coord(usize),
}

impl QuadLattice {
    pub fn new(gram: Vec<Vec<i64>>, p: u64, labels: Vec<String>) -> Result<Self> {
        let n = gram.len();
        for i in 0..n {
            if gram[i].len() != n || gram[i][i] % 2 != 0 {
                return Err(Error::Invalid(
                    "Gram matrix must be square with even diagonal".into(),
                ));
            }
            for j in 0..n {
                if gram[i][j] != gram[j][i] {
                    return Err(Error::Invalid("Gram matrix must be symmetric".into()));
                }
            }
        }
        let big: Vec<Vec<BigInt>> = gram
            .iter()
            .map(|r| r.iter().map(|&x| BigInt::from(x)).collect())
            .collect();
        let det = crate::linalg::det(&big);
        if det.is_zero() || (&det % BigInt::from(p)).is_zero() {
            return Err(Error::Invalid(format!(
                "Gram determinant {det} is not a {p}-adic unit"
            )));
        }
        let signature = signature_of(&gram);
        Ok(QuadLattice {
            gram,
            p,
            labels,
            signature,
        })
    }

    /// q = x₁² + … + x_n².
    pub fn sum_of_squares(n: usize, p: u64) -> Self {
        let gram = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 2 } else { 0 }).collect())
            .collect();
        let labels = (0..n).map(|i| format!("x{i}")).collect();
        QuadLattice::new(gram, p, labels).unwrap()
    }

    /// v = (a, b, c), q = b² − ac.
    pub fn sig21(p: u64) -> Self {
        let gram = vec![vec![0, 0, -1], vec![0, 2, 0], vec![-1, 0, 0]];
        QuadLattice::new(gram, p, vec!["a".into(), "b".into(), "c".into()]).unwrap()
    }

    /// v = (r, s, b, c) = [r + si; b, c], q = r² + s² − bc.
    pub fn bianchi(p: u64) -> Self {
        let gram = vec![
            vec![2, 0, 0, 0],
            vec![0, 2, 0, 0],
            vec![0, 0, 0, -1],
            vec![0, 0, -1, 0],
        ];
        QuadLattice::new(
            gram,
            p,
            vec!["r".into(), "s".into(), "b".into(), "c".into()],
        )
        .unwrap()
    }

    pub fn rank(&self) -> usize {
        self.gram.len()
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn gram(&self) -> &[Vec<i64>] {
        &self.gram
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn signature(&self) -> (usize, usize) {
        self.signature
    }

    pub fn pair(&self, v: &[i64], w: &[i64]) -> i128 {
        let mut s = 0i128;
        for (i, &vi) in v.iter().enumerate() {
            if vi == 0 {
                continue;
            }
            for (j, &wj) in w.iter().enumerate() {
                s += vi as i128 * self.gram[i][j] as i128 * wj as i128;
            }
        }
        s
    }

    pub fn q(&self, v: &[i64]) -> i128 {
        self.pair(v, v) / 2
    }

    pub fn vector(&self, coords: Vec<i64>) -> LatticeVec {
        let q = self.q(&coords);
        LatticeVec { coords, pexp: 0, q }
    }

    /// Isotropic vector of the cusp P/Q, with P/0 = ∞.
    pub fn cusp_vector(&self, p_num: i64, q_den: i64) -> Vec<i64> {
        match self.rank() {
            3 => vec![q_den * q_den, -p_num * q_den, p_num * p_num],
            4 => vec![p_num * q_den, 0, p_num * p_num, q_den * q_den],
            _ => panic!("cusps exist only in the hyperbolic models"),
        }
    }

    /// The geodesic from 0 to ∞.
    pub fn path_zero_infinity(&self) -> PathConstraint {
        PathConstraint {
            w_minus: self.cusp_vector(0, 1),
            w_plus: self.cusp_vector(1, 0),
        }
    }

    /// (ord, iso) with v = p^ord·v₀, v₀ primitive; iso = ord_p q(v₀), None when q = 0.
    pub fn order_iso(&self, v: &LatticeVec) -> (i64, Option<u32>) {
        let g = v.coords.iter().fold(0i64, |g, &x| nt::gcd(g, x));
        assert!(g != 0, "order_iso: zero vector");
        let k = nt::val_p(g as i128, self.p);
        let ord = v.pexp as i64 + k as i64;
        let pk = (self.p as i128).pow(k);
        let q0 = v.q / (pk * pk);
        let iso = if q0 == 0 {
            None
        } else {
            Some(nt::val_p(q0, self.p))
        };
        (ord, iso)
    }

    /// All v with q(v) = m, in lexicographic order.
    pub fn enumerate_definite(&self, m: i128) -> Vec<LatticeVec> {
        assert_eq!(
            self.signature.1, 0,
            "enumerate_definite: form is not positive definite"
        );
        let n = self.rank();
        let qf: Vec<Vec<f64>> = self
            .gram
            .iter()
            .map(|r| r.iter().map(|&x| x as f64 / 2.0).collect())
            .collect();
        let mut out = Vec::new();
        fincke_pohst(&qf, &vec![0.0; n], m as f64, true, |y| {
            if self.q(y) == m {
                out.push(self.vector(y.to_vec()));
            }
        });
        out.sort();
        out
    }

    /// All v with q(v) = m and ⟨v,w₋⟩·⟨v,w₊⟩ < 0, with sign ⟨v,w₋⟩.
    pub fn enumerate_path(&self, m: i128, path: &PathConstraint) -> Result<Vec<(LatticeVec, i8)>> {
        let split = PathSplit::new(self, path)?;
        let n = split.n_abs;
        let mut out = Vec::new();
        // Vectors orthogonal to an endpoint make the intersection improper.
        for (fix_minus, r) in [(true, 0..n), (false, 0..n)] {
            for a in r {
                let (am, ap) = if fix_minus { (0, a) } else { (a, 0) };
                let mut hit = false;
                split.for_each(self, am, ap, m, |_| hit = true);
                if hit {
                    return Err(Error::ImproperIntersection(format!(
                        "q = {m} is attained on an endpoint's orthogonal complement"
                    )));
                }
            }
        }
        let bound = m * n;
        for am in -bound..=bound {
            if am == 0 {
                continue;
            }
            let lim = bound / am.abs();
            let range = if am > 0 { -lim..=-1 } else { 1..=lim };
            for ap in range {
                split.for_each(self, am, ap, m, |v| {
                    out.push((self.vector(v.to_vec()), am.signum() as i8))
                });
            }
        }
        out.sort();
        Ok(out)
    }

    /// Σ weights over the path vectors of norm m·p^{2j}.
    pub fn weighted_degree(
        &self,
        w: Weighting,
        m: i128,
        j: u32,
        path: &PathConstraint,
    ) -> Result<i64> {
        let pj = (self.p as i128).pow(2 * j);
        let vs = self.enumerate_path(m * pj, path)?;
        Ok(vs.iter().map(|(v, s)| self.weight(w, v, *s)).sum())
    }

    pub fn weight(&self, w: Weighting, v: &LatticeVec, sign: i8) -> i64 {
        match w {
            Weighting::Sign => sign as i64,
            Weighting::Chi4Coord(idx) => {
                let (ord, _) = self.order_iso(v);
                let k = ord - v.pexp as i64;
                let x0 = v.coords[idx] / (self.p as i64).pow(k as u32);
                let tw = if nt::chi4(self.p as i64) == -1 && ord % 2 != 0 {
                    -1
                } else {
                    1
                };
                sign as i64 * nt::chi4(x0) * tw
            }
        }
    }

    /// v ↦ v/p from the order ≥ 1 part of level j+1 onto level j, weights included.
    pub fn ordinarity_bijection(
        &self,
        w: Weighting,
        m: i128,
        j: u32,
        path: &PathConstraint,
    ) -> Result<bool> {
        let pp = self.p as i64;
        let pj = (self.p as i128).pow(2 * j);
        let lower = self.enumerate_path(m * pj, path)?;
        let upper = self.enumerate_path(m * pj * (self.p as i128).pow(2), path)?;
        let mut mapped: Vec<(LatticeVec, i64)> = upper
            .iter()
            .filter(|(v, _)| self.order_iso(v).0 >= 1)
            .map(|(v, s)| {
                let c: Vec<i64> = v.coords.iter().map(|x| x / pp).collect();
                (self.vector(c), self.weight(w, v, *s))
            })
            .collect();
        mapped.sort();
        let mut base: Vec<(LatticeVec, i64)> = lower
            .iter()
            .map(|(v, s)| (v.clone(), self.weight(w, v, *s)))
            .collect();
        base.sort();
        Ok(mapped == base)
    }
}

/// ℤ-points of {⟨v,w₋⟩ = a₋, ⟨v,w₊⟩ = a₊} as v₀ + M with M = L ∩ ⟨w₋,w₊⟩^⊥ definite.
struct PathSplit {
    // A·U = H lower echelon with pivot columns 0, 1
    h: [[i64; 2]; 2],
    u: Vec<Vec<i64>>,
    basis: Vec<Vec<i64>>,
    qm: Vec<Vec<f64>>,
    gram_m_inv: Vec<Vec<f64>>,
    n_abs: i128,
}

impl PathSplit {
    fn new(l: &QuadLattice, path: &PathConstraint) -> Result<Self> {
        if l.q(&path.w_minus) != 0 || l.q(&path.w_plus) != 0 {
            return Err(Error::Invalid("path endpoints must be isotropic".into()));
        }
        let n = l.pair(&path.w_minus, &path.w_plus);
        if n >= 0 {
            return Err(Error::Invalid("path endpoints must pair negatively".into()));
        }
        let r = l.rank();
        let row = |w: &[i64]| -> Vec<BigInt> {
            (0..r)
                .map(|i| BigInt::from((0..r).map(|j| l.gram[i][j] * w[j]).sum::<i64>()))
                .collect()
        };
        let a = vec![row(&path.w_minus), row(&path.w_plus)];
        let e = ColumnEchelon::new(&a, r);
        let small = |x: &BigInt| x.to_i64().unwrap();
        let h = [
            [small(&e.h[0][0]), small(&e.h[0][1])],
            [small(&e.h[1][0]), small(&e.h[1][1])],
        ];
        let u: Vec<Vec<i64>> =
            e.u.iter()
                .map(|row| row.iter().map(small).collect())
                .collect();
        let basis: Vec<Vec<i64>> = integer_kernel(&a, r)
            .iter()
            .map(|v| v.iter().map(small).collect())
            .collect();
        let k = basis.len();
        let gram_m: Vec<Vec<f64>> = (0..k)
            .map(|x| {
                (0..k)
                    .map(|y| l.pair(&basis[x], &basis[y]) as f64)
                    .collect()
            })
            .collect();
        let gram_m_inv = invert(&gram_m);
        let qm = gram_m
            .iter()
            .map(|r| r.iter().map(|x| x / 2.0).collect())
            .collect();
        Ok(PathSplit {
            h,
            u,
            basis,
            qm,
            gram_m_inv,
            n_abs: -n,
        })
    }

    fn particular(&self, am: i128, ap: i128) -> Option<Vec<i64>> {
        let [[h00, _], [h10, h11]] = self.h;
        if am % h00 as i128 != 0 {
            return None;
        }
        let y0 = am / h00 as i128;
        let rest = ap - h10 as i128 * y0;
        if rest % h11 as i128 != 0 {
            return None;
        }
        let y1 = rest / h11 as i128;
        Some(
            self.u
                .iter()
                .map(|row| (row[0] as i128 * y0 + row[1] as i128 * y1) as i64)
                .collect(),
        )
    }

    fn for_each(&self, l: &QuadLattice, am: i128, ap: i128, m: i128, mut f: impl FnMut(&[i64])) {
        let Some(v0) = self.particular(am, ap) else {
            return;
        };
        let k = self.basis.len();
        // q(v₀ + By) = q(v₀) + ℓ·y + ½yᵀG_M y, centred at y* = −G_M⁻¹ℓ.
        let mut ell = [0f64; 8];
        for (t, b) in self.basis.iter().enumerate() {
            ell[t] = l.pair(&v0, b) as f64;
        }
        let mut ystar = [0f64; 8];
        for i in 0..k {
            ystar[i] = -(0..k).map(|j| self.gram_m_inv[i][j] * ell[j]).sum::<f64>();
        }
        let quad: f64 = (0..k)
            .map(|i| {
                (0..k)
                    .map(|j| ystar[i] * self.qm[i][j] * ystar[j])
                    .sum::<f64>()
            })
            .sum::<f64>();
        let radius = m as f64 - (l.q(&v0) as f64 - quad);
        if radius < -1e-6 {
            return;
        }
        let mut v = vec![0i64; l.rank()];
        fincke_pohst(&self.qm, &ystar[..k], radius.max(0.0), true, |y| {
            for (i, vi) in v.iter_mut().enumerate() {
                *vi = v0[i] + (0..k).map(|t| y[t] * self.basis[t][i]).sum::<i64>();
            }
            if l.q(&v) == m {
                f(&v);
            }
        });
    }
}

fn invert(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            row
        })
        .collect();
    for c in 0..n {
        let piv = (c..n)
            .max_by(|&x, &y| m[x][c].abs().partial_cmp(&m[y][c].abs()).unwrap())
            .unwrap();
        m.swap(c, piv);
        let d = m[c][c];
        for x in m[c].iter_mut() {
            *x /= d;
        }
        for r in 0..n {
            if r != c {
                let f = m[r][c];
                for j in 0..2 * n {
                    m[r][j] -= f * m[c][j];
                }
            }
        }
    }
    m.into_iter().map(|r| r[n..].to_vec()).collect()
}

/// Integer y with Σ q_ij (y−c)_i (y−c)_j ≤ radius, with slack; callers filter exactly.
/// With `shell`, only candidates near the boundary (value ≈ radius) are visited.
pub fn fincke_pohst(
    q: &[Vec<f64>],
    center: &[f64],
    radius: f64,
    shell: bool,
    mut visit: impl FnMut(&[i64]),
) {
    let n = q.len();
    if n == 0 {
        if radius >= -1e-9 {
            visit(&[]);
        }
        return;
    }
    let mut d = vec![0.0; n];
    let mut mu = vec![vec![0.0; n]; n];
    for i in 0..n {
        d[i] = q[i][i] - (0..i).map(|k| mu[k][i] * mu[k][i] * d[k]).sum::<f64>();
        for j in i + 1..n {
            mu[i][j] = (q[i][j] - (0..i).map(|k| mu[k][i] * mu[k][j] * d[k]).sum::<f64>()) / d[i];
        }
    }
    let slack = 1e-7 * (1.0 + radius.abs());
    let mut y = vec![0i64; n];
    fp_rec(
        n - 1,
        radius + slack,
        &d,
        &mu,
        center,
        &mut y,
        slack,
        shell,
        &mut visit,
    );
}

#[allow(clippy::too_many_arguments)]
fn fp_rec(
    i: usize,
    budget: f64,
    d: &[f64],
    mu: &[Vec<f64>],
    c: &[f64],
    y: &mut [i64],
    slack: f64,
    shell: bool,
    visit: &mut impl FnMut(&[i64]),
) {
    let n = y.len();
    let s: f64 = (i + 1..n).map(|j| mu[i][j] * (y[j] as f64 - c[j])).sum();
    let mid = c[i] - s;
    let r = libm::sqrt(budget.max(0.0) / d[i]) + 1e-9;
    let lo = libm::ceil(mid - r) as i64;
    let hi = libm::floor(mid + r) as i64;
    if i == 0 && shell {
        // Only points next to the ellipsoid's boundary can lie on the shell.
        let mut last = i64::MIN;
        for yi in [lo, lo + 1, hi - 1, hi] {
            if yi < lo || yi > hi || yi <= last {
                continue;
            }
            last = yi;
            y[0] = yi;
            visit(y);
        }
        return;
    }
    for yi in lo..=hi {
        y[i] = yi;
        let t = yi as f64 - mid;
        let rest = budget - d[i] * t * t;
        if rest < -slack {
            continue;
        }
        if i == 0 {
            visit(y);
        } else {
            fp_rec(i - 1, rest, d, mu, c, y, slack, shell, visit);
        }
    }
}

fn signature_of(g: &[Vec<i64>]) -> (usize, usize) {
    // Sylvester via symmetric Gaussian elimination over f64.
    let n = g.len();
    let mut m: Vec<Vec<f64>> = g
        .iter()
        .map(|r| r.iter().map(|&x| x as f64).collect())
        .collect();
    let (mut pos, mut neg) = (0, 0);
    let mut alive: Vec<usize> = (0..n).collect();
    while !alive.is_empty() {
        let piv = alive.iter().copied().find(|&i| m[i][i].abs() > 1e-12);
        let i = match piv {
            Some(i) => i,
            None => {
                // Make a diagonal entry nonzero using an off-diagonal one.
                let Some((a, b)) = alive
                    .iter()
                    .flat_map(|&a| alive.iter().map(move |&b| (a, b)))
                    .find(|&(a, b)| a != b && m[a][b].abs() > 1e-12)
                else {
                    break;
                };
                for k in 0..n {
                    m[a][k] += m[b][k];
                }
                for k in 0..n {
                    m[k][a] += m[k][b];
                }
                a
            }
        };
        let p = m[i][i];
        if p > 0.0 {
            pos += 1;
        } else {
            neg += 1;
        }
        alive.retain(|&x| x != i);
        for &r in &alive {
            let f = m[r][i] / p;
            for &c in &alive {
                m[r][c] -= f * m[i][c];
            }
        }
    }
    (pos, neg)
}

/// σ(n) = Σ_{4∤t|n} t.
pub fn sigma(n: u64) -> u64 {
    nt::sigma_4nmid(n)
}

impl LatticeVec {
    pub fn abs_max(&self) -> i64 {
        self.coords.iter().map(|x| x.abs()).max().unwrap_or(0)
    }
}

impl PathConstraint {
    pub fn bound_holds(&self, l: &QuadLattice, v: &LatticeVec) -> bool {
        let am = l.pair(&v.coords, &self.w_minus);
        let ap = l.pair(&v.coords, &self.w_plus);
        let n = l.pair(&self.w_minus, &self.w_plus);
        (am * ap).abs() <= v.q * n.abs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_count(l: &QuadLattice, m: i128, b: i64) -> usize {
        let n = l.rank();
        let mut c = 0;
        let mut v = vec![-b; n];
        loop {
            if l.q(&v) == m {
                c += 1;
            }
            let mut i = 0;
            while i < n {
                v[i] += 1;
                if v[i] <= b {
                    break;
                }
                v[i] = -b;
                i += 1;
            }
            if i == n {
                return c;
            }
        }
    }

    #[test]
    fn definite_counts() {
        let l = QuadLattice::sum_of_squares(4, 5);
        assert_eq!(l.enumerate_definite(1).len(), 8);
        assert_eq!(l.enumerate_definite(2).len(), 24);
        assert_eq!(l.enumerate_definite(3).len(), 32);
        for m in 1..=20u64 {
            assert_eq!(l.enumerate_definite(m as i128).len() as u64, 8 * sigma(m));
        }
        assert_eq!(brute_count(&l, 2, 2), 24);
    }

    #[test]
    fn order_and_iso() {
        let l = QuadLattice::sum_of_squares(3, 5);
        let v = l.vector(vec![5, 5, 0]);
        assert_eq!(l.order_iso(&v), (1, Some(0)));
        let v = l.vector(vec![7, 1, 0]);
        assert_eq!(l.order_iso(&v), (0, Some(2)));
        let h = QuadLattice::sig21(3);
        assert_eq!(h.order_iso(&h.vector(vec![1, 0, 0])), (0, None));
    }

    #[test]
    fn signatures() {
        assert_eq!(QuadLattice::sig21(3).signature(), (2, 1));
        assert_eq!(QuadLattice::bianchi(5).signature(), (3, 1));
        assert_eq!(QuadLattice::sum_of_squares(3, 5).signature(), (3, 0));
    }

    #[test]
    fn path_enumeration_small() {
        let b = QuadLattice::bianchi(5);
        let path = b.path_zero_infinity();
        let vs = b.enumerate_path(3, &path).unwrap();
        assert_eq!(vs.len(), 28);
        assert!(vs.iter().all(|(v, _)| v.coords[2] * v.coords[3] < 0));
        assert!(matches!(
            b.enumerate_path(1, &path),
            Err(Error::ImproperIntersection(_))
        ));
        let h = QuadLattice::sig21(3);
        let path = h.path_zero_infinity();
        let vs = h.enumerate_path(2, &path).unwrap();
        let w = Weighting::Chi4Coord(0);
        let nonzero = vs.iter().filter(|(v, s)| h.weight(w, v, *s) != 0).count();
        assert_eq!(nonzero, 6);
        assert_eq!(h.weighted_degree(w, 2, 0, &path).unwrap(), 6);
        assert_eq!(h.weighted_degree(w, 5, 0, &path).unwrap(), 12);
    }
}

#[cfg(test)]
mod degree_tests {
    use super::*;

    #[test]
    fn bianchi_degree_over_sigma() {
        let b = QuadLattice::bianchi(5);
        let path = b.path_zero_infinity();
        let w = Weighting::Chi4Coord(3);
        for (d, j) in [(3, 0), (6, 0), (7, 0), (11, 0), (3, 1), (7, 1)] {
            let deg = b.weighted_degree(w, d, j, &path).unwrap();
            let s = sigma(d as u64 * 25u64.pow(j));
            assert_eq!(deg, 4 * s as i64, "d={d} j={j}");
        }
        for (d, j) in [(3, 0), (7, 0), (3, 1), (7, 1)] {
            assert!(b.ordinarity_bijection(w, d, j, &path).unwrap());
        }
    }
}
