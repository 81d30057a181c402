//! Truncated arithmetic in ℚ_p and its quadratic extensions.
//!
//! A nonzero element is stored as `p^val · unit` with the unit known modulo
//! `p^prec`. Zero is an explicit flag, never an encoded valuation.

use alloc::format;
use core::cmp::min;
use core::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::nt;

pub fn pow_big(p: u64, e: u32) -> BigUint {
    num_traits::pow(BigUint::from(p), e as usize)
}

/// An element of ℚ_p known to `prec` significant digits.
#[derive(Clone)]
pub struct PadicApprox {
    p: u64,
    prec: u32,
    val: i64,
    unit: BigUint,
    zero: bool,
}

impl fmt::Debug for PadicApprox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.zero {
            write!(f, "0 (p={}, N={})", self.p, self.prec)
        } else {
            write!(f, "{}^{}·{} (N={})", self.p, self.val, self.unit, self.prec)
        }
    }
}

impl PartialEq for PadicApprox {
    fn eq(&self, other: &Self) -> bool {
        if self.zero || other.zero {
            return self.zero == other.zero;
        }
        if self.val != other.val {
            return false;
        }
        let m = pow_big(self.p, min(self.prec, other.prec));
        (&self.unit % &m) == (&other.unit % &m)
    }
}

impl PadicApprox {
    /// Zero known modulo p^prec.
    pub fn zero(p: u64, prec: u32) -> Self {
        PadicApprox {
            p,
            prec,
            val: prec as i64,
            unit: BigUint::zero(),
            zero: true,
        }
    }

    fn zero_abs(p: u64, prec: u32, abs: i64) -> Self {
        PadicApprox {
            p,
            prec,
            val: abs,
            unit: BigUint::zero(),
            zero: true,
        }
    }

    pub fn one(p: u64, prec: u32) -> Self {
        Self::from_i64(p, prec, 1)
    }

    /// Builds `p^val · unit`; `unit` must be prime to p.
    pub fn from_parts(p: u64, prec: u32, val: i64, unit: BigUint) -> Self {
        let m = pow_big(p, prec);
        let unit = unit % m;
        debug_assert!(!(&unit % p).is_zero());
        PadicApprox {
            p,
            prec,
            val,
            unit,
            zero: false,
        }
    }

    pub fn from_bigint(p: u64, prec: u32, n: &BigInt) -> Self {
        if n.is_zero() {
            return Self::zero(p, prec);
        }
        let mut v = 0i64;
        let mut m = n.clone();
        let pb = BigInt::from(p);
        loop {
            let (q, r) = m.div_rem(&pb);
            if !r.is_zero() {
                break;
            }
            m = q;
            v += 1;
        }
        let modulus = BigInt::from(pow_big(p, prec));
        let unit = m.mod_floor(&modulus).to_biguint().unwrap();
        PadicApprox {
            p,
            prec,
            val: v,
            unit,
            zero: false,
        }
    }

    pub fn from_i64(p: u64, prec: u32, n: i64) -> Self {
        Self::from_bigint(p, prec, &BigInt::from(n))
    }

    pub fn from_ratio(p: u64, prec: u32, num: &BigInt, den: &BigInt) -> Result<Self> {
        let d = Self::from_bigint(p, prec, den);
        Self::from_bigint(p, prec, num).div(&d)
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    pub fn is_zero(&self) -> bool {
        self.zero
    }

    pub fn valuation(&self) -> Option<i64> {
        (!self.zero).then_some(self.val)
    }

    pub fn unit(&self) -> &BigUint {
        &self.unit
    }

    /// Absolute precision: the value is known modulo p^(val + prec).
    pub fn abs_prec(&self) -> i64 {
        if self.zero {
            self.val
        } else {
            self.val + self.prec as i64
        }
    }

    pub fn with_prec(&self, prec: u32) -> Self {
        if self.zero {
            return Self::zero_abs(self.p, prec, self.val);
        }
        let prec = min(prec, self.prec);
        PadicApprox {
            p: self.p,
            prec,
            val: self.val,
            unit: &self.unit % pow_big(self.p, prec),
            zero: false,
        }
    }

    /// Value modulo p^k as a residue in [0, p^k); requires a p-adic integer.
    pub fn residue(&self, k: u32) -> Result<BigUint> {
        if self.zero {
            return Ok(BigUint::zero());
        }
        if self.val < 0 {
            return Err(Error::Invalid(format!(
                "residue of non-integral element (val {})",
                self.val
            )));
        }
        if self.val >= k as i64 {
            return Ok(BigUint::zero());
        }
        if self.abs_prec() < k as i64 {
            return Err(Error::PrecisionLoss(format!(
                "need {} digits, have {}",
                k,
                self.abs_prec()
            )));
        }
        Ok((&self.unit * pow_big(self.p, self.val as u32)) % pow_big(self.p, k))
    }

    /// Residue in the symmetric range (−p^k/2, p^k/2].
    pub fn residue_signed(&self, k: u32) -> Result<BigInt> {
        let m = BigInt::from(pow_big(self.p, k));
        let r = BigInt::from(self.residue(k)?);
        Ok(if &r * 2 > m { r - m } else { r })
    }

    pub fn neg(&self) -> Self {
        if self.zero {
            return self.clone();
        }
        let m = pow_big(self.p, self.prec);
        PadicApprox {
            unit: &m - &self.unit,
            ..self.clone()
        }
    }

    pub fn mul(&self, o: &Self) -> Self {
        let prec = min(self.prec, o.prec);
        if self.zero || o.zero {
            // For zero, `val` holds the known absolute precision.
            return Self::zero_abs(self.p, prec, self.val + o.val);
        }
        let m = pow_big(self.p, prec);
        PadicApprox {
            p: self.p,
            prec,
            val: self.val + o.val,
            unit: (&self.unit * &o.unit) % m,
            zero: false,
        }
    }

    pub fn inv(&self) -> Result<Self> {
        if self.zero {
            return Err(Error::PrecisionLoss("inverse of zero".into()));
        }
        if self.prec == 0 {
            return Err(Error::PrecisionLoss("no significant digits".into()));
        }
        let m = pow_big(self.p, self.prec);
        let inv = BigInt::from(self.unit.clone())
            .extended_gcd(&BigInt::from(m.clone()))
            .x
            .mod_floor(&BigInt::from(m));
        Ok(PadicApprox {
            p: self.p,
            prec: self.prec,
            val: -self.val,
            unit: inv.to_biguint().unwrap(),
            zero: false,
        })
    }

    pub fn div(&self, o: &Self) -> Result<Self> {
        Ok(self.mul(&o.inv()?))
    }

    pub fn add(&self, o: &Self) -> Self {
        if o.zero {
            return self.clone();
        }
        if self.zero {
            return o.clone();
        }
        let v = min(self.val, o.val);
        let abs = min(self.abs_prec(), o.abs_prec());
        let r = (abs - v) as u32;
        let m = pow_big(self.p, r);
        let s = (&self.unit * pow_big(self.p, (self.val - v) as u32)
            + &o.unit * pow_big(self.p, (o.val - v) as u32))
            % &m;
        if s.is_zero() {
            return Self::zero_abs(self.p, r, abs);
        }
        let mut e = 0u32;
        let mut s = s;
        let pb = BigUint::from(self.p);
        loop {
            let (q, rem) = s.div_rem(&pb);
            if !rem.is_zero() {
                break;
            }
            s = q;
            e += 1;
        }
        PadicApprox {
            p: self.p,
            prec: r - e,
            val: v + e as i64,
            unit: s,
            zero: false,
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn pow(&self, e: i64) -> Result<Self> {
        let base = if e < 0 { self.inv()? } else { self.clone() };
        let mut e = e.unsigned_abs();
        let mut r = Self::one(self.p, self.prec);
        let mut b = base;
        while e > 0 {
            if e & 1 == 1 {
                r = r.mul(&b);
            }
            b = b.mul(&b);
            e >>= 1;
        }
        Ok(r)
    }

    /// First nonzero p-adic digit (the unit residue mod p), or 0 for zero.
    pub fn leading_digit(&self) -> u64 {
        if self.zero {
            0
        } else {
            (&self.unit % self.p).iter_u64_digits().next().unwrap_or(0)
        }
    }

    /// Rational reconstruction helper: the unit as a signed integer in (−p^N/2, p^N/2].
    pub fn unit_signed(&self) -> BigInt {
        let m = BigInt::from(pow_big(self.p, self.prec));
        let u = BigInt::from(self.unit.clone());
        if &u * 2 > m {
            u - m
        } else {
            u
        }
    }
}

/// Square root with the canonical branch: the root whose residue mod p is the
/// smaller of the two.
pub fn hensel_sqrt(a: &PadicApprox) -> Result<PadicApprox> {
    let v = a
        .valuation()
        .ok_or_else(|| Error::Invalid("square root of zero".into()))?;
    if v % 2 != 0 {
        return Err(Error::OddValuation(v));
    }
    let p = a.p;
    let u0 = (&a.unit % p).iter_u64_digits().next().unwrap_or(0);
    let r0 = (1..p).find(|&x| x * x % p == u0).ok_or(Error::NonResidue)?;
    let r0 = min(r0, p - r0);
    // Newton: r ← r − (r² − u)/(2r), doubling the correct digits each round.
    let n = a.prec;
    let mut r = BigInt::from(r0);
    let u = BigInt::from(a.unit.clone());
    let mut k = 1u32;
    while k < n {
        k = min(2 * k, n);
        let m = BigInt::from(pow_big(p, k));
        let two_r_inv = (&r * BigInt::from(2)).extended_gcd(&m).x.mod_floor(&m);
        r = (&r - (&r * &r - &u) * two_r_inv).mod_floor(&m);
    }
    Ok(PadicApprox {
        p,
        prec: n,
        val: v / 2,
        unit: (r.to_biguint().unwrap()) % pow_big(p, n),
        zero: false,
    })
}

/// Unramified: ω² = u; ramified: ω² = p·u, with u the least non-residue.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExtKind {
    Unramified,
    Ramified,
}

/// `a + b·ω` in a quadratic extension of ℚ_p.
#[derive(Clone, Debug)]
pub struct QuadExtApprox {
    kind: ExtKind,
    u: u64,
    a: PadicApprox,
    b: PadicApprox,
}

impl PartialEq for QuadExtApprox {
    fn eq(&self, o: &Self) -> bool {
        self.kind == o.kind && self.a == o.a && self.b == o.b
    }
}

impl QuadExtApprox {
    pub fn new(kind: ExtKind, a: PadicApprox, b: PadicApprox) -> Self {
        let u = nt::smallest_nonresidue(a.p);
        QuadExtApprox { kind, u, a, b }
    }

    pub fn from_base(kind: ExtKind, a: PadicApprox) -> Self {
        let b = PadicApprox::zero(a.p, a.prec);
        Self::new(kind, a, b)
    }

    pub fn from_i64(kind: ExtKind, p: u64, prec: u32, a: i64, b: i64) -> Self {
        Self::new(
            kind,
            PadicApprox::from_i64(p, prec, a),
            PadicApprox::from_i64(p, prec, b),
        )
    }

    pub fn omega(kind: ExtKind, p: u64, prec: u32) -> Self {
        Self::from_i64(kind, p, prec, 0, 1)
    }

    pub fn kind(&self) -> ExtKind {
        self.kind
    }

    pub fn p(&self) -> u64 {
        self.a.p
    }

    pub fn nonresidue(&self) -> u64 {
        self.u
    }

    pub fn a(&self) -> &PadicApprox {
        &self.a
    }

    pub fn b(&self) -> &PadicApprox {
        &self.b
    }

    pub fn prec(&self) -> u32 {
        min(self.a.prec, self.b.prec)
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn omega_sq(&self) -> PadicApprox {
        let p = self.p();
        let w = match self.kind {
            ExtKind::Unramified => self.u,
            ExtKind::Ramified => self.u * p,
        };
        PadicApprox::from_i64(p, self.a.prec.max(self.b.prec) + 1, w as i64)
    }

    /// Twice the valuation (ramified elements have half-integral valuation).
    pub fn val2(&self) -> Option<i64> {
        let va = self.a.valuation().map(|v| 2 * v);
        let vb = self
            .b
            .valuation()
            .map(|v| 2 * v + if self.kind == ExtKind::Ramified { 1 } else { 0 });
        match (va, vb) {
            (None, None) => None,
            (Some(x), None) | (None, Some(x)) => Some(x),
            (Some(x), Some(y)) => Some(min(x, y)),
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        QuadExtApprox {
            a: self.a.add(&o.a),
            b: self.b.add(&o.b),
            ..self.clone()
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        QuadExtApprox {
            a: self.a.sub(&o.a),
            b: self.b.sub(&o.b),
            ..self.clone()
        }
    }

    pub fn neg(&self) -> Self {
        QuadExtApprox {
            a: self.a.neg(),
            b: self.b.neg(),
            ..self.clone()
        }
    }

    pub fn conj(&self) -> Self {
        QuadExtApprox {
            b: self.b.neg(),
            ..self.clone()
        }
    }

    pub fn scale(&self, s: &PadicApprox) -> Self {
        QuadExtApprox {
            a: self.a.mul(s),
            b: self.b.mul(s),
            ..self.clone()
        }
    }

    pub fn mul(&self, o: &Self) -> Self {
        let w2 = self.omega_sq();
        let a = self.a.mul(&o.a).add(&self.b.mul(&o.b).mul(&w2));
        let b = self.a.mul(&o.b).add(&self.b.mul(&o.a));
        QuadExtApprox {
            a,
            b,
            ..self.clone()
        }
    }

    pub fn norm(&self) -> PadicApprox {
        self.a
            .mul(&self.a)
            .sub(&self.b.mul(&self.b).mul(&self.omega_sq()))
    }

    pub fn inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::PrecisionLoss("inverse of zero".into()));
        }
        let n = self.norm();
        if n.is_zero() || n.prec() == 0 {
            return Err(Error::PrecisionLoss(
                "norm has no significant digits".into(),
            ));
        }
        let ni = n.inv()?;
        Ok(self.conj().scale(&ni))
    }

    pub fn div(&self, o: &Self) -> Result<Self> {
        Ok(self.mul(&o.inv()?))
    }

    pub fn pow(&self, e: i64) -> Result<Self> {
        let base = if e < 0 { self.inv()? } else { self.clone() };
        let mut e = e.unsigned_abs();
        let mut r = Self::from_base(self.kind, PadicApprox::one(self.p(), self.prec()));
        let mut b = base;
        while e > 0 {
            if e & 1 == 1 {
                r = r.mul(&b);
            }
            b = b.mul(&b);
            e >>= 1;
        }
        Ok(r)
    }

    pub fn with_prec(&self, prec: u32) -> Self {
        QuadExtApprox {
            a: self.a.with_prec(prec),
            b: self.b.with_prec(prec),
            ..self.clone()
        }
    }

    /// Number of leading p-adic digits on which x/y agrees with 1, i.e.
    /// val(x − y) − val(y), capped by the available precision.
    pub fn agreement(&self, o: &Self) -> i64 {
        let d = self.sub(o);
        let vy = o.val2().unwrap_or(0) / 2;
        match d.val2() {
            Some(v) => v / 2 - vy,
            None => min(d.a.abs_prec(), d.b.abs_prec()) - vy,
        }
    }

    /// Whether x ≡ y mod p^k in the absolute sense (both integral).
    pub fn congruent(&self, o: &Self, k: u32) -> bool {
        let d = self.sub(o);
        match d.val2() {
            None => min(d.a.abs_prec(), d.b.abs_prec()) >= k as i64,
            Some(v) => v / 2 >= k as i64,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn q5(a: i64, b: i64, n: u32) -> QuadExtApprox {
        QuadExtApprox::from_i64(ExtKind::Unramified, 5, n, a, b)
    }

    #[test]
    fn hensel_examples() {
        let r = hensel_sqrt(&PadicApprox::from_i64(5, 3, 4)).unwrap();
        assert_eq!(r, PadicApprox::from_i64(5, 3, 2));
        let r = hensel_sqrt(&PadicApprox::from_i64(5, 3, -1)).unwrap();
        assert_eq!(r.residue(3).unwrap(), BigUint::from(57u32));
        assert_eq!(
            hensel_sqrt(&PadicApprox::from_i64(5, 3, 2)),
            Err(Error::NonResidue)
        );
        assert_eq!(
            hensel_sqrt(&PadicApprox::from_i64(5, 3, 10)),
            Err(Error::OddValuation(1))
        );
        let r = hensel_sqrt(&PadicApprox::from_i64(5, 6, -25)).unwrap();
        assert_eq!(r.valuation(), Some(1));
    }

    #[test]
    fn quadext_examples() {
        let w = q5(0, 1, 4);
        assert_eq!(w.norm(), PadicApprox::from_i64(5, 4, -2));
        assert_eq!(q5(1, 0, 4).inv().unwrap(), q5(1, 0, 4));
        assert_eq!(q5(2, 1, 2).norm(), PadicApprox::from_i64(5, 2, 2));
        let r = QuadExtApprox::from_i64(ExtKind::Ramified, 5, 4, 0, 1);
        assert_eq!(r.val2(), Some(1));
        assert_eq!(
            r.mul(&r),
            QuadExtApprox::from_i64(ExtKind::Ramified, 5, 4, 10, 0)
        );
    }

    #[test]
    fn addition_tracks_cancellation() {
        let x = PadicApprox::from_i64(5, 6, 26);
        let y = PadicApprox::from_i64(5, 6, 1);
        let d = x.sub(&y);
        assert_eq!(d.valuation(), Some(2));
        assert_eq!(d.prec(), 4);
        assert_eq!(d, PadicApprox::from_i64(5, 4, 25));
    }

    #[test]
    fn ratio_and_residue() {
        let x = PadicApprox::from_ratio(3, 8, &BigInt::from(7), &BigInt::from(9)).unwrap();
        assert_eq!(x.valuation(), Some(-2));
        let back = x.mul(&PadicApprox::from_i64(3, 8, 9));
        assert_eq!(back, PadicApprox::from_i64(3, 8, 7));
    }

    fn unit_elem(p: u64, n: u32) -> impl Strategy<Value = QuadExtApprox> {
        (any::<i32>(), any::<i32>(), 0i64..3, 0i64..3).prop_map(move |(a, b, va, vb)| {
            let a = if a == 0 { 1 } else { a } as i64 * (p as i64).pow(va as u32);
            let b = b as i64 * (p as i64).pow(vb as u32);
            QuadExtApprox::from_i64(ExtKind::Unramified, p, n, a, b)
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn field_axioms(x in unit_elem(5, 20), y in unit_elem(5, 20), z in unit_elem(5, 20)) {
            prop_assert_eq!(x.mul(&y).mul(&z), x.mul(&y.mul(&z)));
            prop_assert_eq!(x.conj().conj(), x.clone());
            let one = q5(1, 0, 20);
            let xi = x.inv().unwrap();
            let prod = x.mul(&xi);
            prop_assert!(prod.agreement(&one) >= 20 - 2 * 3);
            prop_assert_eq!(x.mul(&y).norm(), x.norm().mul(&y.norm()));
            prop_assert_eq!(x.mul(&y).val2(), Some(x.val2().unwrap() + y.val2().unwrap()));
        }

        #[test]
        fn sqrt_of_square(a in 1i64..1_000_000, p in prop::sample::select(vec![3u64, 5, 7, 11])) {
            prop_assume!(a % p as i64 != 0);
            let x = PadicApprox::from_i64(p, 30, a);
            let r = hensel_sqrt(&x.mul(&x)).unwrap();
            prop_assert!(r == x || r == x.neg());
        }

        #[test]
        fn valuation_additive(a in 1i64..100_000, b in 1i64..100_000) {
            let x = PadicApprox::from_i64(3, 12, a);
            let y = PadicApprox::from_i64(3, 12, b);
            prop_assert_eq!(x.mul(&y).valuation().unwrap(), x.valuation().unwrap() + y.valuation().unwrap());
        }
    }
}
