//! LLL reduction and recognition of p-adic values as algebraic numbers.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::linalg::{self, dot, integer_kernel};
use crate::nt;
use crate::padic::{hensel_sqrt, pow_big, ExtKind, PadicApprox, QuadExtApprox};

/// Integral LLL with δ = 3/4 on the rows of `b`, which must be independent.
pub fn lll_reduce(b: &[Vec<BigInt>]) -> Vec<Vec<BigInt>> {
    let n = b.len();
    let mut b: Vec<Vec<BigInt>> = b.to_vec();
    if n <= 1 {
        return b;
    }
    // 1-based bookkeeping as in the textbook integral algorithm.
    let mut d = vec![BigInt::zero(); n + 1];
    let mut lam = vec![vec![BigInt::zero(); n + 1]; n + 1];
    d[0] = BigInt::one();
    d[1] = dot(&b[0], &b[0]);
    let mut k = 2usize;
    let mut kmax = 1usize;
    while k <= n {
        if k > kmax {
            kmax = k;
            for j in 1..=k {
                let mut u = dot(&b[k - 1], &b[j - 1]);
                for i in 1..j {
                    u = (&d[i] * &u - &lam[k][i] * &lam[j][i]) / &d[i - 1];
                }
                if j < k {
                    lam[k][j] = u;
                } else {
                    d[k] = u;
                }
            }
            assert!(!d[k].is_zero(), "lll_reduce: dependent rows");
        }
        loop {
            red(&mut b, &mut lam, &d, k, k - 1);
            let lhs = BigInt::from(4) * &d[k] * &d[k - 2];
            let rhs = BigInt::from(3) * &d[k - 1] * &d[k - 1]
                - BigInt::from(4) * &lam[k][k - 1] * &lam[k][k - 1];
            if lhs < rhs {
                swap(&mut b, &mut lam, &mut d, k, kmax);
                k = core::cmp::max(2, k - 1);
            } else {
                break;
            }
        }
        for l in (1..k - 1).rev() {
            red(&mut b, &mut lam, &d, k, l);
        }
        k += 1;
    }
    b
}

fn red(b: &mut [Vec<BigInt>], lam: &mut [Vec<BigInt>], d: &[BigInt], k: usize, l: usize) {
    let two_lam: BigInt = &lam[k][l] * BigInt::from(2);
    if two_lam.abs() > d[l] {
        // q = round(λ/d)
        let q = (two_lam + &d[l]).div_floor(&(&d[l] * 2));
        let bl = b[l - 1].clone();
        for (x, y) in b[k - 1].iter_mut().zip(&bl) {
            *x -= &q * y;
        }
        lam[k][l] = &lam[k][l] - &q * &d[l];
        for i in 1..l {
            let t = &q * &lam[l][i];
            lam[k][i] -= t;
        }
    }
}

fn swap(b: &mut [Vec<BigInt>], lam: &mut [Vec<BigInt>], d: &mut [BigInt], k: usize, kmax: usize) {
    b.swap(k - 1, k - 2);
    for j in 1..k - 1 {
        let t = lam[k][j].clone();
        lam[k][j] = lam[k - 1][j].clone();
        lam[k - 1][j] = t;
    }
    let l = lam[k][k - 1].clone();
    let bb = (&d[k - 2] * &d[k] + &l * &l) / &d[k - 1];
    for i in k + 1..=kmax {
        let t = lam[i][k].clone();
        lam[i][k] = (&d[k] * &lam[i][k - 1] - &l * &t) / &d[k - 1];
        lam[i][k - 1] = (&bb * &t + &l * &lam[i][k]) / &d[k];
    }
    d[k - 1] = bb;
}

/// Gram determinants d_0 = 1, d_j = det(⟨b_a, b_b⟩)_{a,b<j}.
pub fn gram_dets(b: &[Vec<BigInt>]) -> Vec<BigInt> {
    let mut out = vec![BigInt::one()];
    for j in 1..=b.len() {
        let g: Vec<Vec<BigInt>> = (0..j)
            .map(|x| (0..j).map(|y| dot(&b[x], &b[y])).collect())
            .collect();
        out.push(linalg::det(&g));
    }
    out
}

/// Checks size reduction and the δ = 3/4 Lovász condition exactly.
pub fn is_lll_reduced(b: &[Vec<BigInt>]) -> bool {
    let n = b.len();
    let d = gram_dets(b);
    // μ_{k,j} = λ_{k,j}/d_j with λ from exact Gram–Schmidt over ℚ.
    let mut bstar: Vec<Vec<BigRational>> = Vec::new();
    let mut mu = vec![vec![BigRational::zero(); n]; n];
    for k in 0..n {
        let mut v: Vec<BigRational> = b[k]
            .iter()
            .map(|x| BigRational::from_integer(x.clone()))
            .collect();
        for j in 0..k {
            let num: BigRational = b[k]
                .iter()
                .zip(&bstar[j])
                .map(|(x, y)| BigRational::from_integer(x.clone()) * y)
                .sum();
            let den: BigRational = bstar[j].iter().map(|y| y * y).sum();
            mu[k][j] = num / den;
            for (vi, bj) in v.iter_mut().zip(&bstar[j]) {
                *vi = &*vi - &mu[k][j] * bj;
            }
        }
        bstar.push(v);
    }
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    for k in 0..n {
        for j in 0..k {
            if mu[k][j].abs() > half {
                return false;
            }
        }
    }
    for k in 1..n {
        // d_{k+1} d_{k−1} ≥ (3/4 − μ²) d_k²
        let lhs = BigRational::from_integer(&d[k + 1] * &d[k - 1]);
        let rhs = (BigRational::new(BigInt::from(3), BigInt::from(4))
            - &mu[k][k - 1] * &mu[k][k - 1])
            * BigRational::from_integer(&d[k] * &d[k]);
        if lhs < rhs {
            return false;
        }
    }
    true
}

/// Candidate number fields with their ℚ-bases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FieldTag {
    Q,
    /// basis (1, i)
    Qi,
    /// basis (1, √D)
    QSqrtD(i64),
    /// basis (1, i, √D, √−D)
    QiSqrtD(i64),
}

impl FieldTag {
    pub fn degree(&self) -> usize {
        match self {
            FieldTag::Q => 1,
            FieldTag::Qi | FieldTag::QSqrtD(_) => 2,
            FieldTag::QiSqrtD(_) => 4,
        }
    }

    pub fn label(&self) -> String {
        match self {
            FieldTag::Q => "Q".into(),
            FieldTag::Qi => "Q(i)".into(),
            FieldTag::QSqrtD(d) => format!("Q(sqrt({d}))"),
            FieldTag::QiSqrtD(d) => format!("Q(i,sqrt({d}))"),
        }
    }
}

/// √n embedded in ℚ_{p²}: in ℤ_p when n is a square mod p, otherwise ω·√(n/u);
/// the canonical Hensel branch in both cases.
pub fn sqrt_embedding(n: i64, p: u64, prec: u32) -> Result<QuadExtApprox> {
    if n.rem_euclid(p as i64) == 0 {
        return Err(Error::Invalid(format!("{n} is ramified at {p}")));
    }
    let x = PadicApprox::from_i64(p, prec, n);
    if nt::legendre(n, p) == 1 {
        Ok(QuadExtApprox::from_base(
            ExtKind::Unramified,
            hensel_sqrt(&x)?,
        ))
    } else {
        let u = nt::smallest_nonresidue(p) as i64;
        let y = x.div(&PadicApprox::from_i64(p, prec, u))?;
        let r = hensel_sqrt(&y)?;
        Ok(QuadExtApprox::new(
            ExtKind::Unramified,
            PadicApprox::zero(p, prec),
            r,
        ))
    }
}

/// A field tag together with p-adic embeddings of i and √D.
#[derive(Debug, Clone)]
pub struct FieldEmbedding {
    pub tag: FieldTag,
    pub i: QuadExtApprox,
    pub sqrt_d: QuadExtApprox,
}

impl FieldEmbedding {
    /// Canonical embeddings; `i_sign` = −1 selects the other square root of −1.
    pub fn new(tag: FieldTag, p: u64, prec: u32, i_sign: i64) -> Result<Self> {
        let i = sqrt_embedding(-1, p, prec)?;
        let i = if i_sign < 0 { i.neg() } else { i };
        let sqrt_d = match tag {
            FieldTag::QSqrtD(d) | FieldTag::QiSqrtD(d) => sqrt_embedding(d, p, prec)?,
            _ => QuadExtApprox::from_i64(ExtKind::Unramified, p, prec, 0, 0),
        };
        Ok(FieldEmbedding { tag, i, sqrt_d })
    }

    pub fn basis(&self) -> Vec<QuadExtApprox> {
        let one = QuadExtApprox::from_i64(ExtKind::Unramified, self.i.p(), self.i.prec(), 1, 0);
        match self.tag {
            FieldTag::Q => vec![one],
            FieldTag::Qi => vec![one, self.i.clone()],
            FieldTag::QSqrtD(_) => vec![one, self.sqrt_d.clone()],
            FieldTag::QiSqrtD(_) => vec![
                one,
                self.i.clone(),
                self.sqrt_d.clone(),
                self.i.mul(&self.sqrt_d),
            ],
        }
    }

    /// Embeds Σ coeffs_j·basis_j / den.
    pub fn embed(&self, coeffs: &[BigInt], den: &BigInt) -> Result<QuadExtApprox> {
        let p = self.i.p();
        let prec = self.i.prec();
        let mut acc = QuadExtApprox::from_i64(ExtKind::Unramified, p, prec, 0, 0);
        for (c, b) in coeffs.iter().zip(self.basis()) {
            acc = acc.add(&b.scale(&PadicApprox::from_bigint(p, prec + 8, c)));
        }
        let d = PadicApprox::from_bigint(p, prec + 8, den);
        Ok(acc.scale(&d.inv()?))
    }
}

#[derive(Debug, Clone)]
pub struct RecognitionTarget {
    pub value: QuadExtApprox,
    /// Digits of the unit part that are guaranteed.
    pub digits: u32,
    pub field: FieldEmbedding,
    pub height: BigInt,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecognitionResult {
    pub coeffs: Vec<BigInt>,
    pub den: BigInt,
    pub field: FieldTag,
    pub height: BigInt,
    /// log_p of the gap between the relation and every independent lattice vector.
    pub residual_margin: i64,
}

/// Digits needed to certify heights up to H with denominator bound `den`.
pub fn required_digits(p: u64, height: f64, den: f64) -> u32 {
    let l = libm::log(height * height * den) / libm::log(p as f64);
    libm::ceil(2.0 * l) as u32 + 10
}

pub fn recognize_algebraic(t: &RecognitionTarget) -> Result<RecognitionResult> {
    let x = &t.value;
    let p = x.p();
    let m = t.digits;
    if x.is_zero() {
        return Ok(RecognitionResult {
            coeffs: vec![BigInt::zero(); t.field.tag.degree()],
            den: BigInt::one(),
            field: t.field.tag,
            height: BigInt::zero(),
            residual_margin: m as i64,
        });
    }
    let v = x.val2().unwrap() / 2;
    let y = x.scale(&PadicApprox::from_parts(p, m + 8, -v, 1u32.into()));
    let basis = t.field.basis();
    let k = basis.len();
    // Relation lattice {z : Σ z_j b_j − z_k y ≡ 0 mod p^m} via an integer kernel.
    let pm = BigInt::from(pow_big(p, m));
    let comp = |e: &QuadExtApprox, c: usize| -> Result<BigInt> {
        let part = if c == 0 { e.a() } else { e.b() };
        Ok(BigInt::from(part.residue(m)?))
    };
    let mut rows = vec![Vec::new(), Vec::new()];
    for (c, row) in rows.iter_mut().enumerate() {
        for b in &basis {
            row.push(comp(b, c)?);
        }
        row.push(-comp(&y, c)?);
        row.push(if c == 0 { pm.clone() } else { BigInt::zero() });
        row.push(if c == 1 { pm.clone() } else { BigInt::zero() });
    }
    let kern = integer_kernel(&rows, k + 3);
    let lat: Vec<Vec<BigInt>> = kern.iter().map(|z| z[..k + 1].to_vec()).collect();
    let red = lll_reduce(&lat);
    let d = gram_dets(&red);
    let b1 = &red[0];
    let n1 = dot(b1, b1);
    // Every vector independent of b1 is at least min_{j≥2} |b_j*| long.
    let mut margin = i64::MAX;
    for j in 2..=red.len() {
        let num = &d[j];
        let den = &d[j - 1] * &n1;
        margin = margin.min(log_p_ratio_sq(num, &den, p) / 2);
    }
    // Independent vectors must leave the box |z| ≤ √(k+1)·H.
    let box_sq = &t.height * &t.height * BigInt::from(k as u64 + 1);
    let unique = (2..=red.len()).all(|j| d[j] > &d[j - 1] * &box_sq);
    let dprime = b1[k].clone();
    if dprime.is_zero() || margin < 1 || !unique {
        return Err(Error::NoRelation(format!(
            "{} (margin {margin}, relation not unique below the height bound)",
            t.height
        )));
    }
    let mut coeffs: Vec<BigInt> = b1[..k].to_vec();
    let mut den = dprime;
    if v > 0 {
        let s = BigInt::from(pow_big(p, v as u32));
        for c in coeffs.iter_mut() {
            *c *= &s;
        }
    } else if v < 0 {
        den *= BigInt::from(pow_big(p, (-v) as u32));
    }
    let mut g = den.abs();
    for c in &coeffs {
        g = g.gcd(c);
    }
    if den.sign() == Sign::Minus {
        g = -g;
    }
    for c in coeffs.iter_mut() {
        *c /= &g;
    }
    den /= &g;
    let height = coeffs
        .iter()
        .map(|c| c.abs())
        .chain(core::iter::once(den.abs()))
        .max()
        .unwrap();
    if height > t.height {
        return Err(Error::NoRelation(format!(
            "{} (shortest relation has height {height})",
            t.height
        )));
    }
    Ok(RecognitionResult {
        coeffs,
        den,
        field: t.field.tag,
        height,
        residual_margin: margin,
    })
}

// floor(log_p(num/den)) for positive integers.
fn log_p_ratio_sq(num: &BigInt, den: &BigInt, p: u64) -> i64 {
    if num.is_zero() {
        return i64::MIN / 4;
    }
    let (ln, ld) = (bits_log(num), bits_log(den));
    libm::floor((ln - ld) / libm::log(p as f64)) as i64
}

fn bits_log(x: &BigInt) -> f64 {
    let bits = x.bits();
    if bits < 1000 {
        libm::log(x.to_f64().unwrap_or(f64::MAX).abs())
    } else {
        let shift = bits - 64;
        libm::log((x >> shift).to_f64().unwrap().abs()) + shift as f64 * core::f64::consts::LN_2
    }
}

/// Exact element Σ c_j basis_j of ℚ(i, √D) with basis (1, i, √D, i√D).
#[derive(Debug, Clone, PartialEq)]
pub struct Biquad {
    pub d: i64,
    pub c: [BigRational; 4],
}

impl Biquad {
    pub fn from_result(r: &RecognitionResult) -> Self {
        let den = BigRational::from_integer(r.den.clone());
        let q = |j: usize| {
            BigRational::from_integer(r.coeffs.get(j).cloned().unwrap_or_default()) / &den
        };
        let z = BigRational::zero();
        match r.field {
            FieldTag::Q => Biquad {
                d: 1,
                c: [q(0), z.clone(), z.clone(), z],
            },
            FieldTag::Qi => Biquad {
                d: 1,
                c: [q(0), q(1), z.clone(), z],
            },
            FieldTag::QSqrtD(d) => Biquad {
                d,
                c: [q(0), z.clone(), q(1), z],
            },
            FieldTag::QiSqrtD(d) => Biquad {
                d,
                c: [q(0), q(1), q(2), q(3)],
            },
        }
    }

    pub fn mul(&self, o: &Self) -> Self {
        let d = BigRational::from_integer(BigInt::from(self.d));
        let [a0, a1, a2, a3] = &self.c;
        let [b0, b1, b2, b3] = &o.c;
        // i² = −1, s² = D, (is)² = −D.
        let c0 = a0 * b0 - a1 * b1 + &d * (a2 * b2) - &d * (a3 * b3);
        let c1 = a0 * b1 + a1 * b0 + &d * (a2 * b3) + &d * (a3 * b2);
        let c2 = a0 * b2 + a2 * b0 - a1 * b3 - a3 * b1;
        let c3 = a0 * b3 + a3 * b0 + a1 * b2 + a2 * b1;
        Biquad {
            d: self.d,
            c: [c0, c1, c2, c3],
        }
    }

    /// Image under i ↦ ε_i·i, √D ↦ ε_s·√D.
    pub fn galois(&self, ei: i64, es: i64) -> Self {
        let [a0, a1, a2, a3] = self.c.clone();
        let f = |x: BigRational, s: i64| if s < 0 { -x } else { x };
        Biquad {
            d: self.d,
            c: [a0, f(a1, ei), f(a2, es), f(a3, ei * es)],
        }
    }

    fn has_i(&self) -> bool {
        !self.c[1].is_zero() || !self.c[3].is_zero()
    }

    fn has_s(&self) -> bool {
        !self.c[2].is_zero() || !self.c[3].is_zero()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Splitting {
    Split,
    Inert,
    Ramified,
    Unknown,
}

impl Splitting {
    pub fn label(&self) -> &'static str {
        match self {
            Splitting::Split => "split",
            Splitting::Inert => "inert",
            Splitting::Ramified => "ramified",
            Splitting::Unknown => "unknown",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrimeFactor {
    pub prime: BigInt,
    pub exponent: i64,
    pub splitting: Splitting,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormReport {
    pub norm: BigRational,
    /// Relative norm to the reflex field, as coordinates in (1, i, √D, i√D).
    pub reflex_norm: [BigRational; 4],
    pub reflex_disc: i64,
    pub factors: Vec<PrimeFactor>,
    pub den_factors: Vec<PrimeFactor>,
}

/// Fundamental discriminant of ℚ(√n).
pub fn fundamental_disc(n: i64) -> i64 {
    let mut core = n.signum();
    for (q, e) in nt::factor(n.unsigned_abs()) {
        if e % 2 == 1 {
            core *= q as i64;
        }
    }
    if core.rem_euclid(4) == 1 {
        core
    } else {
        4 * core
    }
}

pub fn splitting_in(disc: i64, prime: &BigInt) -> Splitting {
    let Some(l) = prime.to_u64() else {
        return Splitting::Unknown;
    };
    if disc % l as i64 == 0 {
        Splitting::Ramified
    } else if nt::kronecker(disc, l) == 1 {
        Splitting::Split
    } else {
        Splitting::Inert
    }
}

const TRIAL_BOUND: u64 = 1_000_000;

/// Trial division up to a fixed bound; an unfactored cofactor is reported as is.
pub fn factor_big(n: &BigInt) -> Vec<(BigInt, i64)> {
    let mut n = n.abs();
    let mut out = Vec::new();
    let mut d = 2u64;
    while d <= TRIAL_BOUND {
        let db = BigInt::from(d);
        if &db * &db > n {
            break;
        }
        let mut e = 0;
        while (&n % &db).is_zero() {
            n /= &db;
            e += 1;
        }
        if e > 0 {
            out.push((db, e));
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > BigInt::one() {
        out.push((n, 1));
    }
    out
}

/// Norm to ℚ, relative norm to the reflex field ℚ(√reflex), and splitting labels.
pub fn norm_and_splitting(res: &RecognitionResult, reflex: i64) -> NormReport {
    let x = Biquad::from_result(res);
    let d = x.d;
    // Norm to ℚ over the smallest field containing x.
    let full = if x.has_i() && x.has_s() {
        let y = x
            .mul(&x.galois(-1, 1))
            .mul(&x.galois(1, -1))
            .mul(&x.galois(-1, -1));
        y.c[0].clone()
    } else if x.has_i() {
        x.mul(&x.galois(-1, 1)).c[0].clone()
    } else if x.has_s() {
        x.mul(&x.galois(1, -1)).c[0].clone()
    } else {
        x.c[0].clone()
    };
    let refl = if reflex == d || d == 1 && reflex > 0 {
        // Fixed field of i ↦ −i.
        x.mul(&x.galois(-1, 1))
    } else if reflex == -d || d == 1 && reflex < 0 {
        x.mul(&x.galois(-1, -1))
    } else {
        x.clone()
    };
    let disc = fundamental_disc(reflex);
    let label = |fs: Vec<(BigInt, i64)>, sign: i64| -> Vec<PrimeFactor> {
        fs.into_iter()
            .map(|(q, e)| PrimeFactor {
                splitting: splitting_in(disc, &q),
                prime: q,
                exponent: sign * e,
            })
            .collect()
    };
    let mut factors = label(factor_big(full.numer()), 1);
    factors.extend(label(factor_big(full.denom()), -1));
    factors.sort_by(|a, b| a.prime.cmp(&b.prime));
    NormReport {
        norm: full,
        reflex_norm: refl.c,
        reflex_disc: disc,
        factors,
        den_factors: label(factor_big(&res.den), -1),
    }
}

impl NormReport {
    pub fn norm_string(&self) -> String {
        if self.norm.is_integer() {
            self.norm.numer().to_string()
        } else {
            format!("{}/{}", self.norm.numer(), self.norm.denom())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bi(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn lll_identity_and_skew() {
        let id: Vec<Vec<BigInt>> = (0..4)
            .map(|i| {
                bi(&[
                    (i == 0) as i64,
                    (i == 1) as i64,
                    (i == 2) as i64,
                    (i == 3) as i64,
                ])
            })
            .collect();
        assert_eq!(lll_reduce(&id), id);
        let b = vec![bi(&[1, 1_000_000]), bi(&[0, 1])];
        let r = lll_reduce(&b);
        assert!(is_lll_reduced(&r));
        // Hermite bound in dimension 2: |b1|² ≤ (4/3)^{1/2}·det.
        assert!(dot(&r[0], &r[0]) <= BigInt::from(2));
        assert_eq!(linalg::det(&r).abs(), BigInt::one());
    }

    #[test]
    fn recognize_one_and_gaussian() {
        let f = FieldEmbedding::new(FieldTag::Qi, 5, 40, 1).unwrap();
        let one = f.embed(&bi(&[1, 0]), &BigInt::one()).unwrap();
        let r = recognize_algebraic(&RecognitionTarget {
            value: one,
            digits: 40,
            field: f.clone(),
            height: BigInt::from(10),
        })
        .unwrap();
        assert_eq!(r.coeffs, bi(&[1, 0]));
        assert_eq!(r.den, BigInt::one());
        let x = f.embed(&bi(&[32, 60]), &BigInt::from(125)).unwrap();
        let r = recognize_algebraic(&RecognitionTarget {
            value: x,
            digits: 40,
            field: f,
            height: BigInt::from(1000),
        })
        .unwrap();
        assert_eq!((r.coeffs, r.den), (bi(&[32, 60]), BigInt::from(125)));
    }

    #[test]
    fn splitting_labels() {
        assert_eq!(fundamental_disc(11), 44);
        assert_eq!(fundamental_disc(-37), -148);
        assert_eq!(fundamental_disc(17), 17);
        for q in [17, 29, 73] {
            assert_eq!(splitting_in(44, &BigInt::from(q)), Splitting::Inert);
        }
        assert_eq!(splitting_in(-148, &BigInt::from(37)), Splitting::Ramified);
    }
}
