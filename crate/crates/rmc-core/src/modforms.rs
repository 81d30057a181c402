//! Truncated q-expansions, obstruction kernels, U_{p²} and Weil representations.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::linalg::integer_kernel;
use crate::nt;
use crate::qlattice::QuadLattice;
use crate::recognize::lll_reduce;

/// a(0) + a(1)q + … + a(M)q^M.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QSeries {
    coeffs: Vec<BigRational>,
}

impl QSeries {
    pub fn new(coeffs: Vec<BigRational>) -> Self {
        assert!(
            !coeffs.is_empty(),
            "QSeries needs at least the constant term"
        );
        QSeries { coeffs }
    }

    pub fn from_ints(order: usize, f: impl Fn(usize) -> i64) -> Self {
        QSeries::new(
            (0..=order)
                .map(|n| BigRational::from_integer(f(n).into()))
                .collect(),
        )
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, n: usize) -> &BigRational {
        &self.coeffs[n]
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn add(&self, o: &Self) -> Self {
        let m = self.order().min(o.order());
        QSeries::new((0..=m).map(|n| &self.coeffs[n] + &o.coeffs[n]).collect())
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        QSeries::new(self.coeffs.iter().map(|x| x * c).collect())
    }

    pub fn mul(&self, o: &Self) -> Self {
        let m = self.order().min(o.order());
        let mut out = vec![BigRational::zero(); m + 1];
        for (i, a) in self.coeffs.iter().enumerate().take(m + 1) {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.coeffs.iter().enumerate().take(m + 1 - i) {
                if !b.is_zero() {
                    out[i + j] += a * b;
                }
            }
        }
        QSeries::new(out)
    }

    /// f(q^k), truncated at the same order.
    pub fn dilate(&self, k: usize) -> Self {
        let m = self.order();
        QSeries::new(
            (0..=m)
                .map(|n| {
                    if n % k == 0 {
                        self.coeffs[n / k].clone()
                    } else {
                        BigRational::zero()
                    }
                })
                .collect(),
        )
    }
}

/// Θ_Λ = Σ_v q^{q(v)}.
pub fn theta_series(l: &QuadLattice, order: usize) -> QSeries {
    let mut c = vec![BigRational::zero(); order + 1];
    c[0] = BigRational::one();
    for (m, cm) in c.iter_mut().enumerate().skip(1) {
        *cm = BigRational::from_integer(l.enumerate_definite(m as i128).len().into());
    }
    QSeries::new(c)
}

/// θ(q) = Σ_{n∈ℤ} q^{n²}.
pub fn unary_theta(order: usize) -> QSeries {
    QSeries::from_ints(order, |n| {
        if n == 0 {
            1
        } else if nt::is_square(n as i64) {
            2
        } else {
            0
        }
    })
}

/// 1/4 + Σ_n (Σ_{t|n} χ₄(t)) qⁿ.
pub fn eisenstein_e1_chi4(order: usize) -> QSeries {
    let mut s = QSeries::from_ints(order, |n| if n == 0 { 0 } else { nt::r2_quarter(n as u64) });
    s.coeffs[0] = BigRational::new(1.into(), 4.into());
    s
}

/// g = θ·E₁(χ₄), with b(2) = 3.
pub fn weight_three_halves_g(order: usize) -> QSeries {
    unary_theta(order).mul(&eisenstein_e1_chi4(order))
}

/// Σ_{4∤t|n} t.
pub fn four_squares_b(n: u64) -> u64 {
    nt::sigma_4nmid(n)
}

/// 1/8 + Σ b(n) qⁿ.
pub fn four_squares_series(order: usize) -> QSeries {
    let mut s = QSeries::from_ints(order, |n| {
        if n == 0 {
            0
        } else {
            four_squares_b(n as u64) as i64
        }
    });
    s.coeffs[0] = BigRational::new(1.into(), 8.into());
    s
}

/// q·Π(1 − q^{2n})²(1 − q^{10n})².
pub fn eta_product_g20(order: usize) -> QSeries {
    let mut prod: Vec<BigInt> = vec![BigInt::zero(); order + 1];
    prod[0] = BigInt::one();
    for step in [2usize, 10] {
        for n in (step..=order).step_by(step) {
            for _ in 0..2 {
                for i in (n..=order).rev() {
                    let t = prod[i - n].clone();
                    prod[i] -= t;
                }
            }
        }
    }
    let mut c = vec![BigRational::zero(); order + 1];
    for i in 1..=order {
        c[i] = BigRational::from_integer(prod[i - 1].clone());
    }
    QSeries::new(c)
}

/// Coefficient functionals f ↦ (a_f(m_i)) and the integer kernel of the system.
#[derive(Debug, Clone, PartialEq)]
pub struct ObstructionSystem {
    pub indices: Vec<usize>,
    pub rows: Vec<Vec<BigRational>>,
    pub kernel: Vec<Vec<BigInt>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub form: usize,
    pub value: BigRational,
}

impl ObstructionSystem {
    /// The first basis form whose functional does not vanish on `weights`.
    pub fn check(&self, weights: &[i64]) -> core::result::Result<(), Violation> {
        for (form, row) in self.rows.iter().enumerate() {
            let value: BigRational = row
                .iter()
                .zip(weights)
                .map(|(a, &c)| a * BigRational::from_integer(c.into()))
                .sum();
            if !value.is_zero() {
                return Err(Violation { form, value });
            }
        }
        Ok(())
    }
}

/// LLL-reduced ℤ-basis of {c : Σ c_i a_f(m_i) = 0 for all f in the basis}.
pub fn obstruction_kernel(basis: &[QSeries], indices: &[usize]) -> ObstructionSystem {
    let rows: Vec<Vec<BigRational>> = basis
        .iter()
        .map(|f| indices.iter().map(|&m| f.coeff(m).clone()).collect())
        .collect();
    let int_rows: Vec<Vec<BigInt>> = rows
        .iter()
        .map(|r| {
            let l = r.iter().fold(BigInt::one(), |l, x| l.lcm(x.denom()));
            r.iter()
                .map(|x| (x * BigRational::from_integer(l.clone())).to_integer())
                .collect()
        })
        .collect();
    let k = indices.len();
    let raw = if int_rows.is_empty() {
        (0..k)
            .map(|i| (0..k).map(|j| BigInt::from((i == j) as i64)).collect())
            .collect()
    } else {
        integer_kernel(&int_rows, k)
    };
    let mut kernel = if raw.is_empty() {
        raw
    } else {
        lll_reduce(&raw)
    };
    for v in kernel.iter_mut() {
        if v.iter()
            .find(|x| !x.is_zero())
            .is_some_and(|x| x.is_positive())
        {
            continue;
        }
        for x in v.iter_mut() {
            *x = -&*x;
        }
    }
    ObstructionSystem {
        indices: indices.to_vec(),
        rows,
        kernel,
    }
}

/// Finite quadratic module ⊕ ℤ/n_i with q(x) = Σ_i q_i x_i² + Σ_{i<j} q_ij x_i x_j mod 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteQuadModule {
    pub orders: Vec<u64>,
    pub diag: Vec<Ratio<i64>>,
    pub cross: Vec<(usize, usize, Ratio<i64>)>,
}

fn frac(x: Ratio<i64>) -> Ratio<i64> {
    x - x.floor()
}

impl FiniteQuadModule {
    pub fn trivial() -> Self {
        FiniteQuadModule {
            orders: vec![],
            diag: vec![],
            cross: vec![],
        }
    }

    /// ℤ/n with q(x) = a x²/n (n odd) or a x²/(2n) (n even, a odd).
    pub fn cyclic(n: u64, a: i64) -> Result<Self> {
        let q = if n % 2 == 1 {
            Ratio::new(a, n as i64)
        } else {
            Ratio::new(a, 2 * n as i64)
        };
        let m = FiniteQuadModule {
            orders: vec![n],
            diag: vec![q],
            cross: vec![],
        };
        m.validate()?;
        Ok(m)
    }

    pub fn direct_sum(&self, o: &Self) -> Self {
        let off = self.orders.len();
        let mut r = self.clone();
        r.orders.extend(&o.orders);
        r.diag.extend(&o.diag);
        r.cross
            .extend(o.cross.iter().map(|&(i, j, c)| (i + off, j + off, c)));
        r
    }

    pub fn order(&self) -> u64 {
        self.orders.iter().product()
    }

    /// Elements in mixed-radix order.
    pub fn elements(&self) -> Vec<Vec<i64>> {
        let mut out = vec![vec![]];
        for &n in &self.orders {
            out = out
                .into_iter()
                .flat_map(|x: Vec<i64>| {
                    (0..n as i64).map(move |t| {
                        let mut y = x.clone();
                        y.push(t);
                        y
                    })
                })
                .collect();
        }
        out
    }

    pub fn q(&self, x: &[i64]) -> Ratio<i64> {
        let mut s = Ratio::from_integer(0);
        for (i, &xi) in x.iter().enumerate() {
            s += self.diag[i] * Ratio::from_integer(xi * xi);
        }
        for &(i, j, c) in &self.cross {
            s += c * Ratio::from_integer(x[i] * x[j]);
        }
        frac(s)
    }

    pub fn b(&self, x: &[i64], y: &[i64]) -> Ratio<i64> {
        let xy: Vec<i64> = x.iter().zip(y).map(|(a, b)| a + b).collect();
        frac(self.q(&xy) - self.q(x) - self.q(y))
    }

    /// Least N with N·q ≡ 0 on the module.
    pub fn level(&self) -> i64 {
        self.elements()
            .iter()
            .fold(1i64, |l, x| l.lcm(self.q(x).denom()))
    }

    /// Well-defined q and a perfect pairing.
    pub fn validate(&self) -> Result<()> {
        let els = self.elements();
        for (i, &n) in self.orders.iter().enumerate() {
            for x in &els {
                let mut y = x.clone();
                y[i] += n as i64;
                if self.q(&y) != self.q(x) {
                    return Err(Error::Invalid("quadratic form is not well defined".into()));
                }
            }
        }
        for x in &els {
            if x.iter().any(|&t| t != 0) && els.iter().all(|y| self.b(x, y).is_zero()) {
                return Err(Error::Invalid(format!(
                    "bilinear form is degenerate at {x:?}"
                )));
            }
        }
        Ok(())
    }

    pub fn gauss_sum(&self) -> Complex64 {
        self.elements().iter().map(|x| e(self.q(x))).sum()
    }
}

fn e(x: Ratio<i64>) -> Complex64 {
    let t = 2.0 * core::f64::consts::PI * (*x.numer() as f64 / *x.denom() as f64);
    Complex64::new(libm::cos(t), libm::sin(t))
}

/// sign(D) mod 8 from Σ e(q(x)) = √|D|·e(sign/8).
pub fn milgram_signature(d: &FiniteQuadModule) -> Result<u8> {
    let g = d.gauss_sum() / libm::sqrt(d.order() as f64);
    if (g.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::NonUnitGaussSum(format!("|G|/√|D| = {}", g.norm())));
    }
    let k = libm::round(g.arg() / (core::f64::consts::PI / 4.0)) as i64;
    let snapped = Complex64::new(
        libm::cos(k as f64 * core::f64::consts::PI / 4.0),
        libm::sin(k as f64 * core::f64::consts::PI / 4.0),
    );
    if (g - snapped).norm() > 1e-9 {
        return Err(Error::NonUnitGaussSum(format!(
            "argument {} is not a multiple of π/4",
            g.arg()
        )));
    }
    Ok(k.rem_euclid(8) as u8)
}

pub type CMatrix = Vec<Vec<Complex64>>;

/// ρ(T) = diag e(q(x)); ρ(S)_{y,x} = e(−sign/8)/√|D| · e(−B(x,y)).
pub fn weil_rep(d: &FiniteQuadModule) -> Result<(CMatrix, CMatrix)> {
    let els = d.elements();
    let n = els.len();
    let sig = milgram_signature(d)? as i64;
    let mut t = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    let mut s = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    let c = e(Ratio::new(-sig, 8)) / libm::sqrt(n as f64);
    for (i, x) in els.iter().enumerate() {
        t[i][i] = e(d.q(x));
        for (j, y) in els.iter().enumerate() {
            s[j][i] = c * e(-d.b(x, y));
        }
    }
    Ok((t, s))
}

pub fn cmat_mul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let n = a.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..n).map(|k| a[i][k] * b[k][j]).sum())
                .collect()
        })
        .collect()
}

pub fn cmat_dist(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(r, s)| r.iter().zip(s).map(|(x, y)| (x - y).norm()))
        .fold(0.0, f64::max)
}

pub fn cmat_adjoint(a: &CMatrix) -> CMatrix {
    let n = a.len();
    (0..n)
        .map(|i| (0..n).map(|j| a[j][i].conj()).collect())
        .collect()
}

pub fn cmat_identity(n: usize) -> CMatrix {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| Complex64::new((i == j) as u8 as f64, 0.0))
                .collect()
        })
        .collect()
}

/// Coefficients a(m, x) of a vector-valued form, m ∈ ℚ and x ∈ D.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct VVSeries {
    pub orders: Vec<u64>,
    pub coeffs: BTreeMap<(Ratio<i64>, Vec<i64>), BigRational>,
}

impl VVSeries {
    pub fn new(orders: Vec<u64>) -> Self {
        VVSeries {
            orders,
            coeffs: BTreeMap::new(),
        }
    }

    fn reduce(&self, x: &[i64]) -> Vec<i64> {
        x.iter()
            .zip(&self.orders)
            .map(|(a, &n)| a.rem_euclid(n as i64))
            .collect()
    }

    pub fn set(&mut self, m: Ratio<i64>, x: &[i64], c: BigRational) {
        let x = self.reduce(x);
        if c.is_zero() {
            self.coeffs.remove(&(m, x));
        } else {
            self.coeffs.insert((m, x), c);
        }
    }

    pub fn get(&self, m: Ratio<i64>, x: &[i64]) -> BigRational {
        self.coeffs
            .get(&(m, self.reduce(x)))
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    /// Coefficient vanishes unless m ≡ q(x) mod 1.
    pub fn respects_support(&self, d: &FiniteQuadModule) -> bool {
        self.coeffs.keys().all(|(m, x)| frac(*m) == d.q(x))
    }
}

/// a_{U f}(m, x) = a_f(p²m, p·x).
pub fn u_p2(f: &VVSeries, p: u64) -> VVSeries {
    let pp = p as i64;
    let mut out = VVSeries::new(f.orders.clone());
    // p is invertible on D, so x ↦ p·x is a bijection.
    for ((m, x), c) in &f.coeffs {
        let m0 = *m / Ratio::from_integer(pp * pp);
        if m0.denom() % pp == 0 {
            continue;
        }
        let inv: Vec<i64> = x
            .iter()
            .zip(&f.orders)
            .map(|(&a, &n)| {
                let pinv =
                    nt::inv_mod(pp as i128, n as i128).expect("p must not divide the level") as i64;
                (a * pinv).rem_euclid(n as i64)
            })
            .collect();
        out.set(m0, &inv, c.clone());
    }
    out
}

/// A scalar series as a vector-valued one on the trivial module.
pub fn scalar_to_vv(f: &QSeries) -> VVSeries {
    let mut out = VVSeries::new(vec![]);
    for (n, c) in f.coeffs().iter().enumerate() {
        out.set(Ratio::from_integer(n as i64), &[], c.clone());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    #[test]
    fn series_tables() {
        let g = weight_three_halves_g(20);
        let want = [(2, 3), (5, 6), (8, 3), (11, 6), (14, 12), (17, 12)];
        for (d, b) in want {
            assert_eq!(g.coeff(d), &r(b), "b({d})");
        }
        assert_eq!(g.coeff(1), &BigRational::new(3.into(), 2.into()));
        let e1 = eisenstein_e1_chi4(6);
        assert_eq!(
            [
                e1.coeff(1),
                e1.coeff(2),
                e1.coeff(3),
                e1.coeff(4),
                e1.coeff(5)
            ],
            [&r(1), &r(1), &r(0), &r(1), &r(2)]
        );
        assert_eq!(
            [
                four_squares_b(3),
                four_squares_b(6),
                four_squares_b(7),
                four_squares_b(4)
            ],
            [4, 12, 8, 3]
        );
        let eta = eta_product_g20(10);
        assert_eq!(
            [
                eta.coeff(1),
                eta.coeff(3),
                eta.coeff(5),
                eta.coeff(7),
                eta.coeff(9)
            ],
            [&r(1), &r(-2), &r(-1), &r(2), &r(1)]
        );
        let t = unary_theta(9);
        assert_eq!(
            t.coeffs(),
            QSeries::from_ints(9, |n| [1, 2, 0, 0, 2, 0, 0, 0, 0, 2][n]).coeffs()
        );
    }

    #[test]
    fn kernels() {
        let g = weight_three_halves_g(60);
        let sys = obstruction_kernel(&[g.clone(), g.dilate(3)], &[2, 5, 8, 11, 14, 17]);
        for v in [
            [-2, 1, 0, 0, 0, 0],
            [-1, 0, 1, 0, 0, 0],
            [0, -1, 0, 1, 0, 0],
            [0, 0, 0, 0, 1, -1],
        ] {
            assert!(sys.check(&v).is_ok());
            let bv: Vec<BigInt> = v.iter().map(|&x| x.into()).collect();
            assert!(crate::linalg::in_integer_span(&sys.kernel, &bv));
        }
        let sys = obstruction_kernel(&[four_squares_series(10), eta_product_g20(10)], &[3, 6, 7]);
        assert_eq!(
            sys.kernel,
            vec![vec![BigInt::from(1), BigInt::from(-1), BigInt::from(1)]]
        );
        let bad = sys.check(&[2, 0, -1]).unwrap_err();
        assert_eq!((bad.form, bad.value), (1, r(-6)));
        let sys = obstruction_kernel(&[], &[2]);
        assert_eq!(sys.kernel, vec![vec![BigInt::from(1)]]);
    }

    #[test]
    fn weil_small() {
        let d = FiniteQuadModule::trivial();
        assert_eq!(milgram_signature(&d).unwrap(), 0);
        let (t, s) = weil_rep(&d).unwrap();
        assert!(
            cmat_dist(&t, &cmat_identity(1)) < 1e-12 && cmat_dist(&s, &cmat_identity(1)) < 1e-12
        );
        let d3 = FiniteQuadModule::cyclic(3, 1).unwrap();
        let (t, _) = weil_rep(&d3).unwrap();
        let z3 = e(Ratio::new(1, 3));
        assert!((t[1][1] - z3).norm() < 1e-12 && (t[2][2] - z3).norm() < 1e-12);
        let d5 = FiniteQuadModule::cyclic(5, 1).unwrap();
        assert_eq!(milgram_signature(&d5).unwrap(), 0);
        let degenerate = FiniteQuadModule {
            orders: vec![3],
            diag: vec![Ratio::from_integer(0)],
            cross: vec![],
        };
        assert!(matches!(
            milgram_signature(&degenerate),
            Err(Error::NonUnitGaussSum(_))
        ));
    }

    #[test]
    fn up2_shift() {
        let mut f = VVSeries::new(vec![3]);
        f.set(Ratio::new(25 * 7, 3), &[5], r(4));
        f.set(Ratio::new(7, 3), &[1], r(9));
        let u = u_p2(&f, 5);
        assert_eq!(u.get(Ratio::new(7, 3), &[1]), r(4));
        assert_eq!(u.coeffs.len(), 1);
    }
}
