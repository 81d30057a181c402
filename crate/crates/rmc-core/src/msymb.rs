//! Gaussian integers, SL₂ elements, cusps, path decomposition, automorphs and special values.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::fastmod::Zpw;
use crate::nt;
use crate::padic::{ExtKind, PadicApprox, QuadExtApprox};
use crate::rigidprod::{
    eval_path_with, truncation_level, DivisorSpec, Executor, LevelOptions, Model, PeriodValue,
    PointX, Sequential,
};

/// x + yi ∈ ℤ[i]; ℤ is the subring y = 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Gauss {
    pub re: i64,
    pub im: i64,
}

impl Gauss {
    pub const ZERO: Gauss = Gauss { re: 0, im: 0 };
    pub const ONE: Gauss = Gauss { re: 1, im: 0 };
    pub const I: Gauss = Gauss { re: 0, im: 1 };

    pub const fn new(re: i64, im: i64) -> Self {
        Gauss { re, im }
    }

    pub const fn int(re: i64) -> Self {
        Gauss { re, im: 0 }
    }

    pub fn conj(self) -> Self {
        Gauss {
            re: self.re,
            im: -self.im,
        }
    }

    pub fn norm(self) -> i64 {
        self.re * self.re + self.im * self.im
    }

    pub fn is_zero(self) -> bool {
        self.re == 0 && self.im == 0
    }

    pub fn is_unit(self) -> bool {
        self.norm() == 1
    }

    pub fn is_real(self) -> bool {
        self.im == 0
    }

    /// Inverse of a unit.
    pub fn unit_inv(self) -> Self {
        debug_assert!(self.is_unit());
        self.conj()
    }

    /// Nearest-integer quotient: self = q·d + r with N(r) ≤ N(d)/2.
    pub fn div_round(self, d: Gauss) -> Gauss {
        let num = self * d.conj();
        let n = d.norm();
        let round = |x: i64| (2 * x + n).div_euclid(2 * n);
        Gauss {
            re: round(num.re),
            im: round(num.im),
        }
    }

    pub fn gcd(mut a: Gauss, mut b: Gauss) -> Gauss {
        while !b.is_zero() {
            let r = a - a.div_round(b) * b;
            a = b;
            b = r;
        }
        a
    }

    /// Embedding in ℚ_{p²} given the image of i.
    pub fn embed(self, i: &QuadExtApprox) -> QuadExtApprox {
        let p = i.p();
        let prec = i.prec();
        let re = QuadExtApprox::from_i64(ExtKind::Unramified, p, prec, self.re, 0);
        re.add(&i.scale(&PadicApprox::from_i64(p, prec, self.im)))
    }
}

impl Add for Gauss {
    type Output = Gauss;
    fn add(self, o: Gauss) -> Gauss {
        Gauss {
            re: self.re + o.re,
            im: self.im + o.im,
        }
    }
}

impl Sub for Gauss {
    type Output = Gauss;
    fn sub(self, o: Gauss) -> Gauss {
        Gauss {
            re: self.re - o.re,
            im: self.im - o.im,
        }
    }
}

impl Neg for Gauss {
    type Output = Gauss;
    fn neg(self) -> Gauss {
        Gauss {
            re: -self.re,
            im: -self.im,
        }
    }
}

impl Mul for Gauss {
    type Output = Gauss;
    fn mul(self, o: Gauss) -> Gauss {
        Gauss {
            re: self.re * o.re - self.im * o.im,
            im: self.re * o.im + self.im * o.re,
        }
    }
}

impl core::fmt::Display for Gauss {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match (self.re, self.im) {
            (r, 0) => write!(f, "{r}"),
            (0, s) => write!(f, "{s}i"),
            (r, s) if s < 0 => write!(f, "{r}{s}i"),
            (r, s) => write!(f, "{r}+{s}i"),
        }
    }
}

/// [[a, b], [c, d]] over ℤ[i].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GammaElement {
    pub a: Gauss,
    pub b: Gauss,
    pub c: Gauss,
    pub d: Gauss,
}

impl GammaElement {
    pub fn new(a: Gauss, b: Gauss, c: Gauss, d: Gauss) -> Self {
        GammaElement { a, b, c, d }
    }

    pub fn int(a: i64, b: i64, c: i64, d: i64) -> Self {
        GammaElement::new(Gauss::int(a), Gauss::int(b), Gauss::int(c), Gauss::int(d))
    }

    pub fn identity() -> Self {
        GammaElement::int(1, 0, 0, 1)
    }

    pub fn det(&self) -> Gauss {
        self.a * self.d - self.b * self.c
    }

    pub fn is_real(&self) -> bool {
        [self.a, self.b, self.c, self.d].iter().all(|x| x.is_real())
    }

    pub fn mul(&self, o: &Self) -> Self {
        GammaElement {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }

    /// Inverse when det is a unit.
    pub fn inv(&self) -> Self {
        let e = self.det().unit_inv();
        GammaElement {
            a: self.d * e,
            b: -self.b * e,
            c: -self.c * e,
            d: self.a * e,
        }
    }

    pub fn conj(&self) -> Self {
        GammaElement {
            a: self.a.conj(),
            b: self.b.conj(),
            c: self.c.conj(),
            d: self.d.conj(),
        }
    }

    pub fn pow(&self, n: i64) -> Self {
        let base = if n < 0 { self.inv() } else { *self };
        let mut r = GammaElement::identity();
        for _ in 0..n.unsigned_abs() {
            r = r.mul(&base);
        }
        r
    }

    pub fn scale(&self, s: Gauss) -> Self {
        GammaElement {
            a: self.a * s,
            b: self.b * s,
            c: self.c * s,
            d: self.d * s,
        }
    }

    pub fn act_cusp(&self, x: &Cusp) -> Cusp {
        Cusp::new(
            self.a * x.num + self.b * x.den,
            self.c * x.num + self.d * x.den,
        )
    }

    /// Möbius action on τ ∈ ℚ_{p²} with i embedded as given.
    pub fn act_point(&self, tau: &QuadExtApprox, i: &QuadExtApprox) -> Result<QuadExtApprox> {
        let num = self.a.embed(i).mul(tau).add(&self.b.embed(i));
        let den = self.c.embed(i).mul(tau).add(&self.d.embed(i));
        num.div(&den)
    }

    /// g·v for lattice vectors v, as an integer matrix acting on coordinates.
    pub fn transport(&self, model: Model) -> Vec<Vec<i64>> {
        match model {
            Model::Sig21 => {
                assert!(self.is_real(), "(2,1) transport needs a rational matrix");
                let g = [[self.a.re, self.b.re], [self.c.re, self.d.re]];
                let gi = [[self.d.re, -self.b.re], [-self.c.re, self.a.re]];
                let det = self.det().re;
                let mut t = vec![vec![0i64; 3]; 3];
                for k in 0..3 {
                    let mut v = [0i64; 3];
                    v[k] = 1;
                    let m = [[-v[1], -v[2]], [v[0], v[1]]];
                    let y = mat_mul(&mat_mul(&g, &m), &gi);
                    let img = [y[1][0] / det, y[1][1] / det, -y[0][1] / det];
                    for r in 0..3 {
                        t[r][k] = img[r];
                    }
                }
                t
            }
            Model::Bianchi => {
                // M ↦ γ M γ̄⁻¹
                let g = *self;
                let gbar_inv = self.conj().inv();
                let mut t = vec![vec![0i64; 4]; 4];
                let basis = [
                    (Gauss::ONE, 0, 0),
                    (Gauss::I, 0, 0),
                    (Gauss::ZERO, 1, 0),
                    (Gauss::ZERO, 0, 1),
                ];
                for (k, &(alpha, b, c)) in basis.iter().enumerate() {
                    let m = GammaElement::new(alpha, Gauss::int(-b), Gauss::int(c), -alpha.conj());
                    let y = g.mul(&m).mul(&gbar_inv);
                    assert!(
                        y.b.is_real() && y.c.is_real(),
                        "transport left the Hermitian lattice"
                    );
                    let img = [y.a.re, y.a.im, -y.b.re, y.c.re];
                    for r in 0..4 {
                        t[r][k] = img[r];
                    }
                }
                t
            }
            Model::Definite3 => panic!("no SL₂ transport in the definite model"),
        }
    }
}

fn mat_mul(a: &[[i64; 2]; 2], b: &[[i64; 2]; 2]) -> [[i64; 2]; 2] {
    let mut r = [[0i64; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            r[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    r
}

/// num/den ∈ ℙ¹(K), den = 0 being ∞; normalized to a coprime pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Cusp {
    pub num: Gauss,
    pub den: Gauss,
}

impl Cusp {
    pub fn new(num: Gauss, den: Gauss) -> Self {
        assert!(!(num.is_zero() && den.is_zero()), "0/0 is not a cusp");
        let g = Gauss::gcd(num, den);
        let mut c = Cusp {
            num: num.div_round(g),
            den: den.div_round(g),
        };
        // Canonical unit: den in the first quadrant (or num when den = 0).
        let lead = if c.den.is_zero() { c.num } else { c.den };
        for u in [Gauss::ONE, Gauss::I, -Gauss::ONE, -Gauss::I] {
            let x = lead * u;
            if x.re > 0 && x.im >= 0 {
                c = Cusp {
                    num: c.num * u,
                    den: c.den * u,
                };
                break;
            }
        }
        c
    }

    pub fn rational(p: i64, q: i64) -> Self {
        Cusp::new(Gauss::int(p), Gauss::int(q))
    }

    pub fn infinity() -> Self {
        Cusp::rational(1, 0)
    }

    pub fn zero() -> Self {
        Cusp::rational(0, 1)
    }

    pub fn is_rational(&self) -> bool {
        self.num.is_real() && self.den.is_real()
    }
}

/// Convergents from ∞ to x (nearest-integer continued fraction over ℤ[i]; ordinary over ℤ).
pub fn convergents(x: &Cusp) -> Vec<(Gauss, Gauss)> {
    let mut out = vec![(Gauss::ONE, Gauss::ZERO)];
    if x.den.is_zero() {
        return out;
    }
    let (mut n, mut d) = (x.num, x.den);
    let (mut p0, mut q0) = (Gauss::ONE, Gauss::ZERO);
    let (mut p1, mut q1) = (Gauss::ZERO, Gauss::ONE);
    let rational = x.is_rational();
    loop {
        let a = if rational {
            Gauss::int(n.re.div_euclid(d.re))
        } else {
            n.div_round(d)
        };
        let (p2, q2) = (a * p0 + p1, a * q0 + q1);
        out.push((p2, q2));
        let r = n - a * d;
        if r.is_zero() {
            break;
        }
        n = d;
        d = r;
        p1 = p0;
        q1 = q0;
        p0 = p2;
        q0 = q2;
    }
    out
}

/// g with g·0 = P1/Q1, g·∞ = P2/Q2 and det g = 1.
fn segment(c1: (Gauss, Gauss), c2: (Gauss, Gauss)) -> GammaElement {
    let (p1, q1) = c1;
    let (p2, q2) = c2;
    let e = (p2 * q1 - p1 * q2).unit_inv();
    GammaElement::new(p2, e * p1, q2, e * q1)
}

/// Elements g_i with Σ g_i·(0,∞) = (r → s) as a chain of unimodular segments.
pub fn decompose_path(r: &Cusp, s: &Cusp) -> Vec<GammaElement> {
    if r == s {
        return vec![];
    }
    if *r == Cusp::zero() && *s == Cusp::infinity() {
        return vec![GammaElement::identity()];
    }
    let cr = convergents(r);
    let cs = convergents(s);
    // Drop the common prefix of the two chains from ∞.
    let mut k = 0;
    while k + 1 < cr.len().min(cs.len()) && same_cusp(cr[k + 1], cs[k + 1]) {
        k += 1;
    }
    let flip = GammaElement::int(0, -1, 1, 0);
    let mut out = Vec::new();
    // r back to the branch point: reversed segments.
    for w in (k..cr.len() - 1).rev() {
        out.push(segment(cr[w], cr[w + 1]).mul(&flip));
    }
    for w in k..cs.len() - 1 {
        out.push(segment(cs[w], cs[w + 1]));
    }
    out
}

fn same_cusp(a: (Gauss, Gauss), b: (Gauss, Gauss)) -> bool {
    Cusp::new(a.0, a.1) == Cusp::new(b.0, b.1)
}

/// Endpoints g·0 → g·∞ of each segment.
pub fn segment_endpoints(g: &GammaElement) -> (Cusp, Cusp) {
    (g.act_cusp(&Cusp::zero()), g.act_cusp(&Cusp::infinity()))
}

/// Binary quadratic form (A, B, C) with discriminant D = B² − 4AC > 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct QuadForm {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

impl QuadForm {
    pub fn disc(&self) -> i64 {
        self.b * self.b - 4 * self.a * self.c
    }

    /// A form of discriminant D, e.g. the principal one.
    pub fn principal(d: i64) -> Self {
        if d % 4 == 0 {
            QuadForm {
                a: 1,
                b: 0,
                c: -d / 4,
            }
        } else {
            QuadForm {
                a: 1,
                b: 1,
                c: (1 - d) / 4,
            }
        }
    }
}

/// Smallest (t, u) with t² − Du² = ±4, the sign chosen by `norm`.
pub fn pell(d: i64, norm: i64) -> Option<(i64, i64)> {
    if d <= 0 || nt::is_square(d) {
        return None;
    }
    for u in 1..2_000_000i64 {
        let t2 = d as i128 * (u as i128) * (u as i128) + norm as i128;
        if t2 <= 0 {
            continue;
        }
        let t = nt::isqrt(t2 as u64) as i128;
        if t * t == t2 {
            return Some((t as i64, u));
        }
    }
    None
}

/// Level conditions on automorphs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LevelCondition {
    None,
    /// c ≡ 0 mod n
    Gamma0(i64),
}

impl LevelCondition {
    pub fn holds(&self, g: &GammaElement) -> bool {
        match self {
            LevelCondition::None => true,
            LevelCondition::Gamma0(n) => g.c.re % n == 0 && g.c.im % n == 0,
        }
    }
}

/// The automorph [[(t−Bu)/2, −Cu], [Au, (t+Bu)/2]] of f from t² − Du² = 4,
/// raised to the least power satisfying the level condition.
pub fn automorph(f: &QuadForm, level: LevelCondition) -> Result<GammaElement> {
    let d = f.disc();
    let (t, u) = pell(d, 4).ok_or(Error::NoFundamentalSolution(d))?;
    let g = GammaElement::int((t - f.b * u) / 2, -f.c * u, f.a * u, (t + f.b * u) / 2);
    let mut h = g;
    for _ in 0..64 {
        if level.holds(&h) {
            return Ok(h);
        }
        h = h.mul(&g);
    }
    Err(Error::Invalid(format!(
        "no power of the automorph of {f:?} meets the level condition"
    )))
}

/// The minimal orientation in SL₂(ℤ[i]): i·A with det A = −1 when t² − Du² = −4 is solvable.
pub fn automorph_gaussian(f: &QuadForm) -> Result<GammaElement> {
    let d = f.disc();
    match pell(d, -4) {
        Some((t, u)) => {
            let a = GammaElement::int((t - f.b * u) / 2, -f.c * u, f.a * u, (t + f.b * u) / 2);
            Ok(a.scale(Gauss::I))
        }
        None => automorph(f, LevelCondition::None),
    }
}

/// Roots (−B ± √D)/(2A) of f embedded in ℚ_{p²}.
pub fn form_roots(f: &QuadForm, p: u64, prec: u32) -> Result<(QuadExtApprox, QuadExtApprox)> {
    let s = crate::recognize::sqrt_embedding(f.disc(), p, prec + 2)?;
    let b = QuadExtApprox::from_i64(ExtKind::Unramified, p, prec + 2, -f.b, 0);
    let den = PadicApprox::from_i64(p, prec + 2, 2 * f.a).inv()?;
    Ok((
        b.add(&s).scale(&den).with_prec(prec),
        b.sub(&s).scale(&den).with_prec(prec),
    ))
}

/// An oriented special point: the roots of f, optionally Galois-flipped in the second
/// coordinate, with orientation automorph(f)ⁿ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SpecialPoint {
    pub model: Model,
    pub form: QuadForm,
    pub flip: bool,
    pub orient: i64,
}

impl SpecialPoint {
    /// Small RM/CM point of discriminant D: (1, 0, −D/4), or (2, −1, −(D−1)/8) when D ≡ 1 mod 8,
    /// or (1, 1, (1 − D)/4), or (2, 0, −D/8) for D = 8.
    pub fn small(model: Model, disc: i64, flip: bool, orient: i64) -> Result<Self> {
        if disc <= 0 || nt::is_square(disc) || !matches!(disc.rem_euclid(4), 0 | 1) {
            return Err(Error::Invalid(format!(
                "disc = {disc} is not a positive nonsquare discriminant (≡ 0, 1 mod 4)"
            )));
        }
        let form = if disc == 8 {
            QuadForm { a: 2, b: 0, c: -1 }
        } else if disc % 8 == 1 {
            QuadForm {
                a: 2,
                b: -1,
                c: -(disc - 1) / 8,
            }
        } else if disc % 4 == 0 && disc % 8 == 4 && model == Model::Sig21 {
            // τ = (1 + √(D/4))/2
            QuadForm {
                a: 2,
                b: -2,
                c: -(disc / 4 - 1) / 2,
            }
        } else {
            QuadForm::principal(disc)
        };
        Ok(SpecialPoint {
            model,
            form,
            flip,
            orient,
        })
    }

    /// The orientation γ with γ fixing both roots.
    pub fn gamma(&self) -> Result<GammaElement> {
        let g = match self.model {
            Model::Sig21 => automorph(&self.form, LevelCondition::Gamma0(2))?,
            Model::Bianchi => automorph_gaussian(&self.form)?,
            Model::Definite3 => {
                return Err(Error::Invalid(
                    "special points live in the hyperbolic models".into(),
                ))
            }
        };
        Ok(g.pow(self.orient))
    }

    /// The point of X_p, with i ↦ the root ≡ 3 mod 5 branch discipline of `i_embedding`.
    pub fn point(&self, p: u64, prec: u32) -> Result<PointX> {
        let (t, tc) = form_roots(&self.form, p, prec)?;
        match self.model {
            Model::Sig21 => PointX::sig21(t),
            Model::Bianchi => {
                let i = i_embedding(p, prec)?;
                PointX::bianchi(t.clone(), if self.flip { tc } else { t }, i)
            }
            Model::Definite3 => Err(Error::Invalid(
                "special points live in the hyperbolic models".into(),
            )),
        }
    }
}

/// √−1 in ℚ_{p²}: the negated canonical square root (≡ 3 mod 5 at p = 5).
pub fn i_embedding(p: u64, prec: u32) -> Result<QuadExtApprox> {
    Ok(crate::recognize::sqrt_embedding(-1, p, prec)?.neg())
}

/// A value of ℚ_{p²}ˣ as p^valuation · unit, the unit known to `digits` digits.
#[derive(Debug, Clone, PartialEq)]
pub struct SpecialValue {
    pub unit: QuadExtApprox,
    pub valuation: i64,
    pub digits: u32,
    pub affinoid_level: u32,
    pub levels: u32,
    pub gamma: GammaElement,
    pub segments: Vec<GammaElement>,
}

impl SpecialValue {
    pub fn full_value(&self) -> QuadExtApprox {
        let p = self.unit.p();
        self.unit.scale(&PadicApprox::from_parts(
            p,
            self.digits,
            self.valuation,
            1u32.into(),
        ))
    }
}

/// The representative of ±x whose first nonzero digit (of a, else b) lies in 1..=(p−1)/2.
pub fn normalize_sign(x: &QuadExtApprox) -> QuadExtApprox {
    let p = x.p();
    let lead = if !x.a().is_zero() { x.a() } else { x.b() };
    if lead.is_zero() || lead.leading_digit() <= (p - 1) / 2 {
        x.clone()
    } else {
        x.neg()
    }
}

/// Π over decompose_path(r, s) of the period function along each segment, at `pt`.
pub fn cocycle_symbol_with(
    exec: &dyn Executor,
    spec: &DivisorSpec,
    r: &Cusp,
    s: &Cusp,
    pt: &PointX,
    levels: u32,
    opts: LevelOptions,
) -> Result<PeriodValue> {
    eval_path_with(exec, spec, &decompose_path(r, s), pt, levels, opts)
}

pub fn cocycle_symbol(
    spec: &DivisorSpec,
    r: &Cusp,
    s: &Cusp,
    pt: &PointX,
    levels: u32,
    opts: LevelOptions,
) -> Result<PeriodValue> {
    cocycle_symbol_with(&Sequential, spec, r, s, pt, levels, opts)
}

/// J(0, γ⁻¹·0)(x) up to sign, with γ = automorph(f)ⁿ.
pub fn eval_special_with(
    exec: &dyn Executor,
    spec: &DivisorSpec,
    sp: &SpecialPoint,
    digits: u32,
    levels: Option<u32>,
) -> Result<SpecialValue> {
    if sp.model != spec.model {
        return Err(Error::Invalid(
            "special point and divisor use different models".into(),
        ));
    }
    let p = spec.p;
    let w = (digits + 4).min(Zpw::max_digits(p));
    let pt = sp.point(p, w + 6)?;
    let k = pt.affinoid_level()?;
    let levels = levels.unwrap_or_else(|| truncation_level(digits, k));
    let gamma = sp.gamma()?;
    let target = gamma.inv().act_cusp(&Cusp::zero());
    let segments = decompose_path(&Cusp::zero(), &target);
    let opts = LevelOptions::new(w);
    let acc = eval_path_with(exec, spec, &segments, &pt, levels, opts)?;
    let converged = (2 * (levels + 1)).saturating_sub(k);
    let digits = acc.digits.min(converged).min(w);
    Ok(SpecialValue {
        unit: normalize_sign(&acc.value.with_prec(digits.max(1))),
        valuation: acc.valuation,
        digits,
        affinoid_level: k,
        levels,
        gamma,
        segments,
    })
}

pub fn eval_special(
    spec: &DivisorSpec,
    sp: &SpecialPoint,
    digits: u32,
    levels: Option<u32>,
) -> Result<SpecialValue> {
    eval_special_with(&Sequential, spec, sp, digits, levels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_arith() {
        let a = Gauss::new(3, 4);
        assert_eq!(a * a.conj(), Gauss::int(25));
        assert_eq!(Gauss::gcd(Gauss::new(5, 0), Gauss::new(2, 1)).norm(), 5);
    }

    #[test]
    fn paths() {
        assert_eq!(
            decompose_path(&Cusp::zero(), &Cusp::infinity()),
            vec![GammaElement::identity()]
        );
        let back = decompose_path(&Cusp::infinity(), &Cusp::zero());
        assert_eq!(back.len(), 1);
        assert_eq!(
            segment_endpoints(&back[0]),
            (Cusp::infinity(), Cusp::zero())
        );
        let segs = decompose_path(&Cusp::zero(), &Cusp::rational(3, 7));
        let ends: Vec<(Cusp, Cusp)> = segs.iter().map(segment_endpoints).collect();
        assert_eq!(ends.first().unwrap().0, Cusp::zero());
        assert_eq!(ends.last().unwrap().1, Cusp::rational(3, 7));
        for w in ends.windows(2) {
            assert_eq!(w[0].1, w[1].0);
        }
        assert!(ends
            .iter()
            .any(|e| e.1 == Cusp::rational(1, 2) || e.0 == Cusp::rational(1, 2)));
        for g in &segs {
            assert_eq!(g.det(), Gauss::ONE);
        }
        let x = Cusp::new(Gauss::new(3, 5), Gauss::new(7, -2));
        let segs = decompose_path(&Cusp::zero(), &x);
        let ends: Vec<(Cusp, Cusp)> = segs.iter().map(segment_endpoints).collect();
        assert_eq!(ends.last().unwrap().1, x);
        for w in ends.windows(2) {
            assert_eq!(w[0].1, w[1].0);
        }
        for g in &segs {
            assert_eq!(g.det(), Gauss::ONE);
        }
    }

    #[test]
    fn automorphs() {
        let g = automorph(&QuadForm { a: 1, b: 0, c: -3 }, LevelCondition::None).unwrap();
        assert_eq!(g, GammaElement::int(2, 3, 1, 2));
        let g = automorph(&QuadForm { a: 2, b: -2, c: -5 }, LevelCondition::Gamma0(2)).unwrap();
        assert_eq!(g, GammaElement::int(13, 15, 6, 7));
        let g = automorph_gaussian(&QuadForm { a: 2, b: -1, c: -2 }).unwrap();
        assert_eq!(g.det(), Gauss::ONE);
        assert_eq!(g, GammaElement::int(5, 4, 4, 3).scale(Gauss::I));
    }
}
