//! Factor functions, level products, period functions and the definite invariant.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use hashbrown::HashMap;
use num_bigint::BigInt;
use num_traits::ToPrimitive;

use crate::error::{Error, Result};
use crate::fastmod::{Fp2, E2};
use crate::modforms::{self, ObstructionSystem, QSeries};
use crate::msymb::GammaElement;
use crate::nt::{self, SpfSieve};
use crate::padic::{ExtKind, PadicApprox, QuadExtApprox};
use crate::qlattice::{QuadLattice, Weighting};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Model {
    /// x² + y² + z²
    Definite3,
    /// b² − ac
    Sig21,
    /// r² + s² − bc
    Bianchi,
}

impl Model {
    pub fn tag(self) -> &'static str {
        match self {
            Model::Definite3 => "definite3",
            Model::Sig21 => "sig21",
            Model::Bianchi => "sig31-bianchi",
        }
    }

    pub fn from_tag(s: &str) -> Option<Model> {
        match s {
            "definite3" => Some(Model::Definite3),
            "sig21" => Some(Model::Sig21),
            "sig31-bianchi" | "bianchi" => Some(Model::Bianchi),
            _ => None,
        }
    }

    pub fn rank(self) -> usize {
        match self {
            Model::Definite3 | Model::Sig21 => 3,
            Model::Bianchi => 4,
        }
    }

    pub fn lattice(self, p: u64) -> QuadLattice {
        match self {
            Model::Definite3 => QuadLattice::sum_of_squares(3, p),
            Model::Sig21 => QuadLattice::sig21(p),
            Model::Bianchi => QuadLattice::bianchi(p),
        }
    }

    /// Coordinate carrying both the intersection sign and the character.
    pub fn weight_coord(self) -> usize {
        match self {
            Model::Sig21 => 0,
            Model::Bianchi => 3,
            Model::Definite3 => 0,
        }
    }

    pub fn weighting(self) -> Weighting {
        match self {
            Model::Definite3 => Weighting::Sign,
            _ => Weighting::Chi4Coord(self.weight_coord()),
        }
    }
}

/// Σ c_d·Δ_d for a model and prime.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DivisorSpec {
    pub model: Model,
    pub p: u64,
    pub terms: Vec<(u64, i64)>,
}

impl DivisorSpec {
    pub fn new(model: Model, p: u64, terms: Vec<(u64, i64)>) -> Result<Self> {
        if p < 3 || !nt::is_prime(p) {
            return Err(Error::Invalid(format!("p = {p} must be an odd prime")));
        }
        for &(d, _) in &terms {
            if d == 0 || d % p == 0 {
                return Err(Error::Invalid(format!(
                    "m = {d} must be positive and prime to p"
                )));
            }
        }
        Ok(DivisorSpec { model, p, terms })
    }

    /// "3:1,6:-1,7:1"
    pub fn parse(model: Model, p: u64, s: &str) -> Result<Self> {
        let mut terms = Vec::new();
        for part in s.split(',').map(str::trim).filter(|x| !x.is_empty()) {
            let (d, c) = part
                .split_once(':')
                .ok_or_else(|| Error::Invalid(format!("bad divisor term {part:?}")))?;
            let d: u64 = d
                .trim()
                .parse()
                .map_err(|_| Error::Invalid(format!("bad norm {d:?}")))?;
            let c: i64 = c
                .trim()
                .parse()
                .map_err(|_| Error::Invalid(format!("bad weight {c:?}")))?;
            terms.push((d, c));
        }
        DivisorSpec::new(model, p, terms)
    }

    pub fn spec_string(&self) -> String {
        let parts: Vec<String> = self.terms.iter().map(|(d, c)| format!("{d}:{c}")).collect();
        parts.join(",")
    }

    /// FNV-1a of the canonical description.
    pub fn hash(&self) -> u64 {
        fnv1a(format!("{}|{}|{}", self.model.tag(), self.p, self.spec_string()).as_bytes())
    }

    pub fn indices(&self) -> Vec<usize> {
        self.terms.iter().map(|&(d, _)| d as usize).collect()
    }

    pub fn weights(&self) -> Vec<i64> {
        self.terms.iter().map(|&(_, c)| c).collect()
    }

    /// Basis of the obstruction space for the model, with names.
    pub fn obstruction_basis(&self) -> Result<Vec<(String, QSeries)>> {
        let order = self
            .terms
            .iter()
            .map(|&(d, _)| d as usize)
            .max()
            .unwrap_or(1)
            * self.p as usize
            + 1;
        match self.model {
            Model::Sig21 => {
                let g = modforms::weight_three_halves_g(order);
                Ok(vec![
                    ("g(q)".into(), g.clone()),
                    (format!("g(q^{})", self.p), g.dilate(self.p as usize)),
                ])
            }
            Model::Bianchi if self.p == 5 => Ok(vec![
                ("E".into(), modforms::four_squares_series(order)),
                ("g".into(), modforms::eta_product_g20(order)),
            ]),
            Model::Bianchi => Err(Error::Invalid(format!(
                "no obstruction basis configured for the Bianchi model at p = {}",
                self.p
            ))),
            Model::Definite3 => {
                let t = modforms::unary_theta(order);
                Ok(vec![("theta^3".into(), t.mul(&t).mul(&t))])
            }
        }
    }

    pub fn obstruction(&self) -> Result<ObstructionSystem> {
        let basis: Vec<QSeries> = self
            .obstruction_basis()?
            .into_iter()
            .map(|(_, f)| f)
            .collect();
        Ok(modforms::obstruction_kernel(&basis, &self.indices()))
    }

    /// Σ c_d·a_f(d) = 0 for every basis form, or the first violation.
    pub fn certify(&self) -> Result<()> {
        let names = self.obstruction_basis()?;
        let sys = self.obstruction()?;
        match sys.check(&self.weights()) {
            Ok(()) => Ok(()),
            Err(v) => Err(Error::WeightNotZero {
                level: 0,
                sum: v.value.to_integer().to_i64().unwrap_or(i64::MAX),
                scope: format!(
                    "{} = {}",
                    functional_string(&names[v.form].0, &self.terms),
                    v.value.to_string().replace('-', "−")
                ),
            }),
        }
    }
}

/// "2a₃(g) − a₇(g)"
pub fn functional_string(form: &str, terms: &[(u64, i64)]) -> String {
    let mut s = String::new();
    for (k, &(d, c)) in terms.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let sign = if c < 0 { "−" } else { "+" };
        if k == 0 || s.is_empty() {
            if c < 0 {
                s.push('−');
            }
        } else {
            s.push_str(&format!(" {sign} "));
        }
        if c.abs() != 1 {
            s.push_str(&c.abs().to_string());
        }
        s.push_str(&format!("a{}({form})", subscript(d)));
    }
    s
}

fn subscript(n: u64) -> String {
    n.to_string()
        .chars()
        .map(|c| char::from_u32(0x2080 + c.to_digit(10).unwrap()).unwrap())
        .collect()
}

pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// A point of X_p through its linear functional: factor(v) = Σ v_i ℓ_i.
#[derive(Debug, Clone, PartialEq)]
pub struct PointX {
    pub model: Model,
    pub p: u64,
    /// τ, (τ₁, τ₂), or v_ξ
    pub coords: Vec<QuadExtApprox>,
    /// primitive functional
    pub ell: Vec<QuadExtApprox>,
    /// ℓ = p^shift · (unnormalized functional)
    pub shift: i64,
    /// image of i (unused for the (2,1) model)
    pub i: Option<QuadExtApprox>,
}

impl PointX {
    fn build(
        model: Model,
        p: u64,
        coords: Vec<QuadExtApprox>,
        raw: Vec<QuadExtApprox>,
        i: Option<QuadExtApprox>,
    ) -> Result<Self> {
        let v = raw
            .iter()
            .filter_map(|x| x.val2())
            .map(|v| v.div_euclid(2))
            .min()
            .ok_or(Error::NotInXp(0))?;
        let s = PadicApprox::from_parts(p, raw[0].prec() + 4, -v, 1u32.into());
        let ell = raw.iter().map(|x| x.scale(&s)).collect();
        Ok(PointX {
            model,
            p,
            coords,
            ell,
            shift: -v,
            i,
        })
    }

    /// τ ↦ (τ², 2τ, 1).
    pub fn sig21(tau: QuadExtApprox) -> Result<Self> {
        let p = tau.p();
        let raw = vec![
            tau.mul(&tau),
            tau.add(&tau),
            QuadExtApprox::from_i64(ExtKind::Unramified, p, tau.prec(), 1, 0),
        ];
        PointX::build(Model::Sig21, p, vec![tau], raw, None)
    }

    /// (τ₁, τ₂) ↦ (−τ₁−τ₂, i(τ₂−τ₁), 1, τ₁τ₂).
    pub fn bianchi(t1: QuadExtApprox, t2: QuadExtApprox, i: QuadExtApprox) -> Result<Self> {
        let p = t1.p();
        let raw = vec![
            t1.add(&t2).neg(),
            i.mul(&t2.sub(&t1)),
            QuadExtApprox::from_i64(ExtKind::Unramified, p, t1.prec(), 1, 0),
            t1.mul(&t2),
        ];
        PointX::build(Model::Bianchi, p, vec![t1, t2], raw, Some(i))
    }

    /// v_ξ = (1 − τ², i(1 + τ²), 2τ) on x² + y² + z² = 0; ℓ = 2v_ξ.
    pub fn definite(tau: QuadExtApprox, i: QuadExtApprox) -> Result<Self> {
        let p = tau.p();
        let one = QuadExtApprox::from_i64(ExtKind::Unramified, p, tau.prec(), 1, 0);
        let t2 = tau.mul(&tau);
        let v = vec![one.sub(&t2), i.mul(&one.add(&t2)), tau.add(&tau)];
        PointX::definite_vector(v, i)
    }

    pub fn definite_vector(v: Vec<QuadExtApprox>, i: QuadExtApprox) -> Result<Self> {
        let p = v[0].p();
        let two = PadicApprox::from_i64(p, v[0].prec(), 2);
        let raw = v.iter().map(|x| x.scale(&two)).collect();
        PointX::build(Model::Definite3, p, v, raw, Some(i))
    }

    pub fn prec(&self) -> u32 {
        self.ell.iter().map(|x| x.prec()).min().unwrap()
    }

    /// γ·τ, or (γ̄τ₁, γτ₂) in the Bianchi model.
    pub fn act(&self, g: &GammaElement) -> Result<Self> {
        match self.model {
            Model::Sig21 => {
                let one = QuadExtApprox::from_i64(ExtKind::Unramified, self.p, self.prec(), 0, 1);
                let i = self.i.clone().unwrap_or(one);
                PointX::sig21(g.act_point(&self.coords[0], &i)?)
            }
            Model::Bianchi => {
                let i = self.i.clone().unwrap();
                let t1 = g.conj().act_point(&self.coords[0], &i)?;
                let t2 = g.act_point(&self.coords[1], &i)?;
                PointX::bianchi(t1, t2, i)
            }
            Model::Definite3 => Err(Error::Invalid(
                "use act_rational in the definite model".into(),
            )),
        }
    }

    /// v_ξ ↦ R·v_ξ for R = num/den with den a power of p (or a unit).
    pub fn act_rational(&self, num: &[Vec<i64>], den: i64) -> Result<Self> {
        let p = self.p;
        let prec = self.prec();
        let d = PadicApprox::from_i64(p, prec + 4, den).inv()?;
        let v: Vec<QuadExtApprox> = (0..3)
            .map(|r| {
                let mut acc = QuadExtApprox::from_i64(ExtKind::Unramified, p, prec, 0, 0);
                for (k, x) in self.coords.iter().enumerate() {
                    acc = acc.add(&x.scale(&PadicApprox::from_i64(p, prec, num[r][k])));
                }
                acc.scale(&d)
            })
            .collect();
        PointX::definite_vector(v, self.i.clone().unwrap())
    }

    /// Σ v_i ℓ_i.
    pub fn factor_value(&self, v: &[i64]) -> QuadExtApprox {
        let prec = self.prec();
        let mut acc = QuadExtApprox::from_i64(ExtKind::Unramified, self.p, prec, 0, 0);
        for (x, l) in v.iter().zip(&self.ell) {
            if *x != 0 {
                acc = acc.add(&l.scale(&PadicApprox::from_i64(self.p, prec, *x)));
            }
        }
        acc
    }

    /// ⟨v, ξ⟩/⟨ṽ, ξ⟩ with ṽ = v + t·e_i the isotropic Hensel lift along the first
    /// coordinate where ⟨v, e_i⟩ is a unit.
    pub fn factor_value_normalized(&self, l: &QuadLattice, v: &[i64]) -> Result<QuadExtApprox> {
        let f = self.factor_value(v);
        let q = l.q(v);
        if q == 0 {
            return Ok(QuadExtApprox::from_i64(
                ExtKind::Unramified,
                self.p,
                self.prec(),
                1,
                0,
            ));
        }
        let prec = self.prec() + 4;
        let t = isotropic_shift(l, v, prec)?;
        let Some((i, t)) = t else {
            return Ok(QuadExtApprox::from_i64(
                ExtKind::Unramified,
                self.p,
                self.prec(),
                1,
                0,
            ));
        };
        let ft = f.add(&self.ell[i].scale(&t));
        if ft.is_zero() {
            return Err(Error::ZeroDenominator);
        }
        f.div(&ft).map_err(|_| Error::ZeroDenominator)
    }

    /// Minimal k with ord_p ℓ(w) ≤ k for all primitive isotropic w.
    pub fn affinoid_level(&self) -> Result<u32> {
        affinoid_level(&self.model.lattice(self.p), &self.ell, self.prec())
    }

    /// Canonical bytes of ℓ mod p^digits for cache keys.
    pub fn fingerprint(&self, digits: u32) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(self.model.tag().as_bytes());
        for x in &self.ell {
            for c in [x.a(), x.b()] {
                let r = BigInt::from(c.residue(digits).unwrap_or_default());
                out.extend_from_slice(&r.to_signed_bytes_le());
                out.push(0xff);
            }
        }
        out
    }
}

/// (i, t) with q(v + t e_i) = 0, t ≡ 0 mod p^{ord q(v)}; None when no coordinate pairs to a unit.
fn isotropic_shift(l: &QuadLattice, v: &[i64], prec: u32) -> Result<Option<(usize, PadicApprox)>> {
    let p = l.p();
    let n = l.rank();
    let g = l.gram();
    let Some(i) = (0..n).find(|&i| {
        let s: i64 = (0..n).map(|j| g[i][j] * v[j]).sum();
        s % p as i64 != 0
    }) else {
        return Ok(None);
    };
    let gv: i64 = (0..n).map(|j| g[i][j] * v[j]).sum();
    let qe = g[i][i] / 2;
    let q = PadicApprox::from_bigint(p, prec, &BigInt::from(l.q(v)));
    let inv = PadicApprox::from_i64(p, prec, gv).inv()?;
    let qe = PadicApprox::from_i64(p, prec, qe);
    let mut t = q.mul(&inv).neg();
    for _ in 0..=prec {
        let next = q.add(&qe.mul(&t).mul(&t)).mul(&inv).neg();
        if next == t {
            break;
        }
        t = next;
    }
    Ok(Some((i, t)))
}

/// Depth of the deepest isotropic w (mod p^j, primitive) with ℓ(w) ≡ 0 mod p^j.
pub fn affinoid_level(l: &QuadLattice, ell: &[QuadExtApprox], prec: u32) -> Result<u32> {
    let p = l.p();
    let n = l.rank();
    let pb = BigInt::from(p);
    let residues = |j: u32| -> Result<Vec<(BigInt, BigInt)>> {
        ell.iter()
            .map(|x| {
                let c = |y: &PadicApprox| -> Result<BigInt> { Ok(BigInt::from(y.residue(j)?)) };
                Ok((c(x.a())?, c(x.b())?))
            })
            .collect()
    };
    let ok = |w: &[BigInt], j: u32, res: &[(BigInt, BigInt)]| -> bool {
        let m = pb.pow(j);
        let wi: Vec<i64> = w.iter().map(|x| x.to_i64().unwrap_or(0)).collect();
        let qv = BigInt::from(l.q(&wi));
        if (qv % &m) != BigInt::from(0) {
            return false;
        }
        let mut a = BigInt::from(0);
        let mut b = BigInt::from(0);
        for (x, (ra, rb)) in w.iter().zip(res) {
            a += x * ra;
            b += x * rb;
        }
        (a % &m) == BigInt::from(0) && (b % &m) == BigInt::from(0)
    };
    // Depth 1: normalized representatives of ℙ^{n−1}(𝔽_p).
    let res1 = residues(1)?;
    let mut layer: Vec<Vec<BigInt>> = Vec::new();
    for lead in 0..n {
        let free = n - 1 - lead;
        for k in 0..(p as usize).pow(free as u32) {
            let mut w = vec![BigInt::from(0); n];
            w[lead] = BigInt::from(1);
            let mut x = k;
            for slot in w.iter_mut().skip(lead + 1) {
                *slot = BigInt::from(x % p as usize);
                x /= p as usize;
            }
            if ok(&w, 1, &res1) {
                layer.push(w);
            }
        }
    }
    let mut depth = 0u32;
    while !layer.is_empty() {
        depth += 1;
        if depth + 1 >= prec {
            return Err(Error::NotInXp(depth));
        }
        let j = depth + 1;
        let res = residues(j)?;
        let step = pb.pow(depth);
        let mut next = Vec::new();
        for w in &layer {
            let lead = w.iter().position(|x| (x % &pb) != BigInt::from(0)).unwrap();
            let free: Vec<usize> = (0..n).filter(|&i| i != lead).collect();
            for k in 0..(p as usize).pow(free.len() as u32) {
                let mut c = w.clone();
                let mut x = k;
                for &i in &free {
                    c[i] += &step * BigInt::from(x % p as usize);
                    x /= p as usize;
                }
                if ok(&c, j, &res) {
                    next.push(c);
                }
            }
        }
        layer = next;
    }
    Ok(depth)
}

/// Options for one level of the product.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LevelOptions {
    /// only vectors of intersection sign +1
    pub half: bool,
    /// assert vanishing exponent sums on isotropic lines
    pub certify: bool,
    /// divide each factor by its isotropic lift's factor
    pub normalized: bool,
    /// working digits W
    pub digits: u32,
}

impl LevelOptions {
    pub fn new(digits: u32) -> Self {
        LevelOptions {
            half: true,
            certify: false,
            normalized: false,
            digits,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelProduct {
    /// unit part
    pub value: QuadExtApprox,
    /// Σ e_v·ord_p factor(v)
    pub valuation: i64,
    pub weight: i64,
    /// guaranteed digits of the unit part
    pub digits: u32,
    pub count: u64,
}

/// Partial product over a chunk of the outer loop.
#[derive(Debug, Clone)]
pub struct LevelPartial {
    pub num: E2,
    pub den: E2,
    pub valuation: i64,
    pub weight: i64,
    pub lost: u32,
    pub count: u64,
    pub zero: bool,
    pub lines: HashMap<[u64; 4], i64>,
}

/// One level t of a hyperbolic product along a segment g·(0, ∞).
#[derive(Debug, Clone)]
pub struct LevelPlan {
    pub model: Model,
    pub p: u64,
    pub level: u32,
    pub opts: LevelOptions,
    terms: Vec<(u64, i64)>,
    f: Fp2,
    t: Vec<Vec<i64>>,
    /// Tᵀℓ
    ell_t: Vec<E2>,
    /// ℓ in the original coordinates
    ell: Vec<E2>,
    sieve: SpfSieve,
    outer: i64,
    twist: i64,
    lattice: QuadLattice,
    key: Vec<u8>,
}

impl LevelPlan {
    pub fn new(
        spec: &DivisorSpec,
        seg: &GammaElement,
        pt: &PointX,
        level: u32,
        opts: LevelOptions,
    ) -> Result<Self> {
        if spec.model == Model::Definite3 || pt.model != spec.model || pt.p != spec.p {
            return Err(Error::Invalid(
                "level plans need a hyperbolic spec and a matching point".into(),
            ));
        }
        let p = spec.p;
        let f = Fp2::new(p, opts.digits, nt::smallest_nonresidue(p))?;
        let t = seg.transport(spec.model);
        let n = spec.model.rank();
        let ell: Vec<E2> = pt
            .ell
            .iter()
            .map(|x| f.from_quad(x))
            .collect::<Result<_>>()?;
        let mut ell_t = vec![E2 { a: 0, b: 0 }; n];
        for (k, slot) in ell_t.iter_mut().enumerate() {
            for (r, l) in ell.iter().enumerate() {
                let c = t[r][k];
                if c != 0 {
                    *slot = f.add(*slot, f.scale(*l, f.z.from_i64(c)));
                }
            }
        }
        let pp = p.checked_pow(2 * level).unwrap_or(u64::MAX);
        let nmax = spec
            .terms
            .iter()
            .map(|&(d, _)| d.saturating_mul(pp))
            .max()
            .unwrap_or(1);
        if nmax > MAX_LEVEL_NORM {
            return Err(Error::TooLarge {
                level,
                norm: nmax,
                limit: MAX_LEVEL_NORM,
            });
        }
        let sieve = SpfSieve::new(nmax + 1);
        let outer = nt::isqrt(nmax) as i64;
        let twist = if nt::chi4(p as i64) == -1 && level % 2 == 1 {
            -1
        } else {
            1
        };
        let mut key = Vec::new();
        key.extend_from_slice(
            format!(
                "{}|{}|{}|{}|{:?}|",
                spec.model.tag(),
                p,
                spec.spec_string(),
                level,
                opts
            )
            .as_bytes(),
        );
        for row in &t {
            for x in row {
                key.extend_from_slice(&x.to_le_bytes());
            }
        }
        key.extend(pt.fingerprint(opts.digits));
        Ok(LevelPlan {
            model: spec.model,
            p,
            level,
            opts,
            terms: spec.terms.clone(),
            f,
            t,
            ell_t,
            ell,
            sieve,
            outer,
            twist,
            lattice: spec.model.lattice(p),
            key,
        })
    }

    /// Canonical description for caches.
    pub fn cache_key(&self) -> &[u8] {
        &self.key
    }

    /// Outer-loop range split into at most `n` chunks.
    pub fn chunks(&self, n: usize) -> Vec<(i64, i64)> {
        let lo = -self.outer;
        let hi = self.outer;
        let total = (hi - lo + 1) as usize;
        let n = n.clamp(1, total);
        (0..n)
            .map(|k| {
                (
                    lo + (total * k / n) as i64,
                    lo + (total * (k + 1) / n) as i64 - 1,
                )
            })
            .filter(|(a, b)| a <= b)
            .collect()
    }

    pub fn full_range(&self) -> (i64, i64) {
        (-self.outer, self.outer)
    }

    fn empty(&self) -> LevelPartial {
        LevelPartial {
            num: self.f.one(),
            den: self.f.one(),
            valuation: 0,
            weight: 0,
            lost: 0,
            count: 0,
            zero: false,
            lines: HashMap::new(),
        }
    }

    pub fn run(&self, range: (i64, i64)) -> LevelPartial {
        let mut acc = self.empty();
        let pp = self.p.pow(2 * self.level);
        let mut divs = Vec::new();
        for &(d, cd) in &self.terms {
            let n = (d * pp) as i64;
            match self.model {
                Model::Bianchi => {
                    for r in range.0..=range.1 {
                        let rem = n - r * r;
                        if rem <= 0 {
                            continue;
                        }
                        let smax = nt::isqrt(rem as u64) as i64;
                        for s in -smax..=smax {
                            let m = rem - s * s;
                            if m <= 0 {
                                continue;
                            }
                            self.sieve.divisors_into(m as u64, &mut divs);
                            for &c in &divs {
                                let c = c as i64;
                                self.visit(&mut acc, &[r, s, -m / c, c], cd);
                            }
                        }
                    }
                }
                Model::Sig21 => {
                    for b in range.0..=range.1 {
                        let m = n - b * b;
                        if m <= 0 {
                            continue;
                        }
                        self.sieve.divisors_into(m as u64, &mut divs);
                        for &a in &divs {
                            let a = a as i64;
                            self.visit(&mut acc, &[a, b, -m / a], cd);
                        }
                    }
                }
                Model::Definite3 => unreachable!(),
            }
        }
        acc
    }

    #[inline]
    fn visit(&self, acc: &mut LevelPartial, u: &[i64], cd: i64) {
        let p = self.p as i64;
        if u.iter().all(|x| x % p == 0) {
            return;
        }
        let wc = self.model.weight_coord();
        let n = u.len();
        let v_w: i64 = (0..n).map(|k| self.t[wc][k] * u[k]).sum();
        let w = cd * nt::chi4(v_w) * self.twist;
        if w == 0 {
            return;
        }
        for sign in [1i64, -1] {
            if sign == -1 && self.opts.half {
                break;
            }
            let mut x = E2 { a: 0, b: 0 };
            for k in 0..n {
                if u[k] != 0 {
                    x = self.f.add(
                        x,
                        self.f.scale(self.ell_t[k], self.f.z.from_i64(sign * u[k])),
                    );
                }
            }
            if x.a == 0 && x.b == 0 {
                acc.zero = true;
                continue;
            }
            let (x, e) = self.strip(x);
            acc.valuation += e as i64 * w;
            acc.lost = acc.lost.max(e);
            let mut num = x;
            let mut den = self.f.one();
            if self.opts.normalized && self.level > 0 {
                let v: Vec<i64> = (0..n)
                    .map(|r| sign * (0..n).map(|k| self.t[r][k] * u[k]).sum::<i64>())
                    .collect();
                if let Some(xt) = self.lift_factor(&v) {
                    let (xt, et) = self.strip(xt);
                    acc.valuation -= et as i64 * w;
                    acc.lost = acc.lost.max(et);
                    den = xt;
                }
            }
            if w < 0 {
                core::mem::swap(&mut num, &mut den);
            }
            for _ in 0..w.unsigned_abs() {
                acc.num = self.f.mul(acc.num, num);
                acc.den = self.f.mul(acc.den, den);
            }
            acc.weight += w;
            acc.count += 1;
            if self.opts.certify && self.level > 0 {
                let v: Vec<i64> = (0..n)
                    .map(|r| sign * (0..n).map(|k| self.t[r][k] * u[k]).sum::<i64>())
                    .collect();
                *acc.lines
                    .entry(line_key(&v, self.p, self.level))
                    .or_insert(0) += w;
            }
        }
    }

    #[inline]
    fn strip(&self, mut x: E2) -> (E2, u32) {
        let mut e = 0;
        while self.f.divisible_by_p(x) {
            if x.a == 0 && x.b == 0 {
                break;
            }
            x = self.f.div_p(x);
            e += 1;
        }
        (x, e)
    }

    // ⟨ṽ, ξ⟩ for the isotropic lift ṽ = v + t e_i.
    fn lift_factor(&self, v: &[i64]) -> Option<E2> {
        let z = &self.f.z;
        let g = self.lattice.gram();
        let n = v.len();
        let p = self.p as i64;
        let i = (0..n).find(|&i| (0..n).map(|j| g[i][j] * v[j]).sum::<i64>() % p != 0)?;
        let gv: i64 = (0..n).map(|j| g[i][j] * v[j]).sum();
        let qe = z.from_i64(g[i][i] / 2);
        let q = z.from_i64((self.lattice.q(v) % z.m as i128) as i64);
        let inv = z.inv(z.from_i64(gv));
        let mut t = z.neg(z.mul(q, inv));
        for _ in 0..self.opts.digits {
            let next = z.neg(z.mul(z.add(q, z.mul(qe, z.mul(t, t))), inv));
            if next == t {
                break;
            }
            t = next;
        }
        let mut x = E2 { a: 0, b: 0 };
        for k in 0..n {
            if v[k] != 0 {
                x = self.f.add(x, self.f.scale(self.ell[k], z.from_i64(v[k])));
            }
        }
        Some(self.f.add(x, self.f.scale(self.ell[i], t)))
    }

    /// Order-independent merge of partial products.
    pub fn merge(&self, parts: Vec<LevelPartial>) -> LevelPartial {
        let mut acc = self.empty();
        for part in parts {
            acc.num = self.f.mul(acc.num, part.num);
            acc.den = self.f.mul(acc.den, part.den);
            acc.valuation += part.valuation;
            acc.weight += part.weight;
            acc.lost = acc.lost.max(part.lost);
            acc.count += part.count;
            acc.zero |= part.zero;
            for (k, v) in part.lines {
                *acc.lines.entry(k).or_insert(0) += v;
            }
        }
        acc
    }

    pub fn finish(&self, parts: Vec<LevelPartial>) -> Result<LevelProduct> {
        let acc = self.merge(parts);
        if acc.zero {
            return Err(Error::NotRegular(format!(
                "a factor vanishes mod p^{} at level {}",
                self.opts.digits, self.level
            )));
        }
        if acc.weight != 0 {
            return Err(Error::WeightNotZero {
                level: self.level,
                sum: acc.weight,
                scope: "total".into(),
            });
        }
        if self.opts.certify {
            let mut bad: Vec<(&[u64; 4], &i64)> =
                acc.lines.iter().filter(|(_, v)| **v != 0).collect();
            bad.sort();
            if let Some((k, v)) = bad.first() {
                return Err(Error::WeightNotZero {
                    level: self.level,
                    sum: **v,
                    scope: format!("line {:?}", &k[..self.model.rank()]),
                });
            }
        }
        let value = self.f.mul(acc.num, self.f.inv(acc.den));
        let digits = self.opts.digits.saturating_sub(acc.lost);
        Ok(LevelProduct {
            value: self.f.to_quad(value, digits.max(1)),
            valuation: acc.valuation,
            weight: acc.weight,
            digits,
            count: acc.count,
        })
    }
}

/// v mod p^t scaled so that its first unit coordinate is 1.
pub fn line_key(v: &[i64], p: u64, t: u32) -> [u64; 4] {
    let m = (p as i128).pow(t);
    let lead = v.iter().find(|&&x| x % p as i64 != 0).copied().unwrap_or(1);
    let inv = nt::inv_mod(lead as i128, m).unwrap_or(1);
    let mut k = [0u64; 4];
    for (slot, &x) in k.iter_mut().zip(v) {
        *slot = ((x as i128 * inv).rem_euclid(m)) as u64;
    }
    k
}

/// Runs level plans, possibly in parallel or from a cache.
pub trait Executor {
    fn run_plan(&self, plan: &LevelPlan) -> LevelPartial;
}

pub struct Sequential;

impl Executor for Sequential {
    fn run_plan(&self, plan: &LevelPlan) -> LevelPartial {
        plan.run(plan.full_range())
    }
}

pub fn level_product(
    spec: &DivisorSpec,
    seg: &GammaElement,
    level: u32,
    pt: &PointX,
    opts: LevelOptions,
) -> Result<LevelProduct> {
    path_level_product(
        &Sequential,
        spec,
        core::slice::from_ref(seg),
        pt,
        level,
        opts,
    )
}

/// Level t of the product along a chain of segments; weights are certified on the whole chain.
pub fn path_level_product(
    exec: &dyn Executor,
    spec: &DivisorSpec,
    segs: &[GammaElement],
    pt: &PointX,
    level: u32,
    opts: LevelOptions,
) -> Result<LevelProduct> {
    let mut parts = Vec::with_capacity(segs.len());
    let mut first = None;
    for g in segs {
        let plan = LevelPlan::new(spec, g, pt, level, opts)?;
        parts.push(exec.run_plan(&plan));
        first.get_or_insert(plan);
    }
    match first {
        Some(plan) => plan.finish(parts),
        None => {
            let f = Fp2::new(spec.p, opts.digits, nt::smallest_nonresidue(spec.p))?;
            Ok(LevelProduct {
                value: f.to_quad(f.one(), opts.digits),
                valuation: 0,
                weight: 0,
                digits: opts.digits,
                count: 0,
            })
        }
    }
}

/// Product of the levels 0..=J.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodValue {
    pub value: QuadExtApprox,
    pub valuation: i64,
    pub digits: u32,
    pub levels: Vec<LevelProduct>,
}

impl PeriodValue {
    pub fn one(p: u64, digits: u32) -> Self {
        PeriodValue {
            value: QuadExtApprox::from_i64(ExtKind::Unramified, p, digits, 1, 0),
            valuation: 0,
            digits,
            levels: vec![],
        }
    }

    pub fn mul(&self, o: &Self) -> Self {
        let digits = self.digits.min(o.digits);
        PeriodValue {
            value: self.value.mul(&o.value).with_prec(digits),
            valuation: self.valuation + o.valuation,
            digits,
            levels: vec![],
        }
    }

    pub fn inv(&self) -> Result<Self> {
        Ok(PeriodValue {
            value: self.value.inv()?,
            valuation: -self.valuation,
            digits: self.digits,
            levels: vec![],
        })
    }

    pub fn pow(&self, n: i64) -> Result<Self> {
        Ok(PeriodValue {
            value: self.value.pow(n)?,
            valuation: self.valuation * n,
            digits: self.digits,
            levels: vec![],
        })
    }

    /// p^valuation · unit as one element.
    pub fn full_value(&self) -> QuadExtApprox {
        let p = self.value.p();
        self.value.scale(&PadicApprox::from_parts(
            p,
            self.digits,
            self.valuation,
            1u32.into(),
        ))
    }
}

/// J = ⌈(N + k)/2⌉ + 1: two digits per level from the iso level 2t.
/// Largest norm d·p^{2t} a level plan will sieve.
pub const MAX_LEVEL_NORM: u64 = 1 << 26;

pub fn truncation_level(digits: u32, k: u32) -> u32 {
    (digits + k).div_ceil(2) + 1
}

pub fn eval_path_with(
    exec: &dyn Executor,
    spec: &DivisorSpec,
    segs: &[GammaElement],
    pt: &PointX,
    levels: u32,
    opts: LevelOptions,
) -> Result<PeriodValue> {
    let mut out = PeriodValue::one(spec.p, opts.digits);
    for t in 0..=levels {
        let lp = path_level_product(exec, spec, segs, pt, t, opts)?;
        out.value = out.value.mul(&lp.value);
        out.valuation += lp.valuation;
        out.digits = out.digits.min(lp.digits);
        out.levels.push(lp);
    }
    out.value = out.value.with_prec(out.digits.max(1));
    Ok(out)
}

pub fn eval_period_with(
    exec: &dyn Executor,
    spec: &DivisorSpec,
    seg: &GammaElement,
    pt: &PointX,
    levels: u32,
    opts: LevelOptions,
) -> Result<PeriodValue> {
    eval_path_with(exec, spec, core::slice::from_ref(seg), pt, levels, opts)
}

/// Φ(pt) = Π_{t ≤ J} level_product(t) along (0, ∞).
pub fn eval_period(
    spec: &DivisorSpec,
    pt: &PointX,
    levels: u32,
    opts: LevelOptions,
) -> Result<PeriodValue> {
    eval_period_with(
        &Sequential,
        spec,
        &GammaElement::identity(),
        pt,
        levels,
        opts,
    )
}

/// A ℤ_p-lattice Λ = ⊕ p^{s_i}ℤ_p b_i given by the rows of B⁻¹ (mod p^W) and shifts s_i.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PadicLattice {
    pub p: u64,
    pub digits: u32,
    /// rows of B⁻¹ as residues mod p^digits
    pub coord_rows: Vec<Vec<u64>>,
    pub shifts: Vec<i32>,
}

impl PadicLattice {
    pub fn standard(p: u64, n: usize, digits: u32) -> Self {
        let coord_rows = (0..n)
            .map(|i| (0..n).map(|j| (i == j) as u64).collect())
            .collect();
        PadicLattice {
            p,
            digits,
            coord_rows,
            shifts: vec![0; n],
        }
    }

    /// The neighbour ℤ_p·w/p + ℤ_p·p·w' + ℤ_p·e₃ of ℤ_p³ for x² + y² + z², with
    /// w = (1, i, 0), w' = (1, −i, 0)/4, i² = −1 in ℤ_p.
    pub fn neighbour_sum_of_squares(p: u64, digits: u32, i_residue: u64) -> Self {
        let m = (p as u128).pow(digits);
        let red = |x: i128| (x.rem_euclid(m as i128)) as u64;
        let inv2 = nt::inv_mod(2, m as i128).unwrap();
        let i = i_residue as i128;
        // coefficient of w is ⟨v, w'⟩ = v·(1, −i, 0)/2; of w' is ⟨v, w⟩ = 2v·(1, i, 0).
        let row0 = vec![red(inv2), red(-i * inv2), 0];
        let row1 = vec![2, red(2 * i), 0];
        let row2 = vec![0, 0, 1];
        PadicLattice {
            p,
            digits,
            coord_rows: vec![row0, row1, row2],
            shifts: vec![-1, 1, 0],
        }
    }

    fn val(&self, x: u128) -> i64 {
        if x == 0 {
            return self.digits as i64;
        }
        let mut v = 0;
        let mut y = x;
        while y % self.p as u128 == 0 {
            y /= self.p as u128;
            v += 1;
        }
        v
    }

    fn coords(&self, x: &[i64]) -> Vec<u128> {
        let m = (self.p as u128).pow(self.digits);
        self.coord_rows
            .iter()
            .map(|row| {
                let mut s: u128 = 0;
                for (&a, &b) in row.iter().zip(x) {
                    s = (s + a as u128 * (b.rem_euclid(m as i64) as u128 % m)) % m;
                }
                s
            })
            .collect()
    }

    /// ord_Λ(x/p^s) = min_i(val(B⁻¹x)_i − s_i) − s.
    pub fn order(&self, x: &[i64], s: i32) -> i64 {
        let c = self.coords(x);
        c.iter()
            .zip(&self.shifts)
            .map(|(&y, &sh)| self.val(y) - sh as i64)
            .min()
            .unwrap()
            - s as i64
    }

    /// Λ-coordinates of p^t·x/p^s mod p^t, normalized projectively.
    fn line_key(&self, x: &[i64], s: i32, t: u32) -> [u64; 4] {
        let c = self.coords(x);
        let p = self.p as i128;
        let mut y = [0i64; 4];
        for (k, (&ck, &sh)) in c.iter().zip(&self.shifts).enumerate() {
            let e = t as i64 - s as i64 - sh as i64;
            let mut v = ck as i128;
            if e >= 0 {
                v *= p.pow(e as u32);
            } else {
                v /= p.pow((-e) as u32);
            }
            y[k] = (v % p.pow(t.max(1))) as i64;
        }
        line_key(&y[..c.len()], self.p, t)
    }

    pub fn max_shift(&self) -> i32 {
        self.shifts.iter().map(|s| s.abs()).max().unwrap_or(0)
    }
}

/// Level t of the definite product: Π over v with q(v) = m, ord_Λ(v) = −t, of ⟨p^t v, ξ⟩^{c_m}.
pub fn definite_level_product(
    spec: &DivisorSpec,
    pt: &PointX,
    lam: &PadicLattice,
    level: u32,
    digits: u32,
    certify: bool,
) -> Result<LevelProduct> {
    if spec.model != Model::Definite3 || pt.model != Model::Definite3 {
        return Err(Error::Invalid(
            "definite evaluation needs the definite model".into(),
        ));
    }
    let p = spec.p;
    let f = Fp2::new(p, digits, nt::smallest_nonresidue(p))?;
    let ell: Vec<E2> = pt
        .ell
        .iter()
        .map(|x| f.from_quad(x))
        .collect::<Result<_>>()?;
    let l = spec.model.lattice(p);
    let t = level as i32;
    let delta = lam.max_shift();
    let (mut num, mut den) = (f.one(), f.one());
    let (mut weight, mut valuation, mut lost, mut count) = (0i64, 0i64, 0u32, 0u64);
    let mut lines: HashMap<[u64; 4], i64> = HashMap::new();
    for &(m, c) in &spec.terms {
        for s in (t - delta).max(0)..=t + delta {
            let n = m as i128 * (p as i128).pow(2 * s as u32);
            for v in l.enumerate_definite(n) {
                let x = &v.coords;
                if s > 0 && x.iter().all(|y| y % p as i64 == 0) {
                    continue;
                }
                if lam.order(x, s) != -(t as i64) {
                    continue;
                }
                let mut y = E2 { a: 0, b: 0 };
                for (k, &xk) in x.iter().enumerate() {
                    if xk != 0 {
                        y = f.add(y, f.scale(ell[k], f.z.from_i64(xk)));
                    }
                }
                if y.a == 0 && y.b == 0 {
                    return Err(Error::NotRegular(format!(
                        "⟨{x:?}, ξ⟩ vanishes mod p^{digits}"
                    )));
                }
                let mut e = 0u32;
                while f.divisible_by_p(y) {
                    y = f.div_p(y);
                    e += 1;
                }
                lost = lost.max(e);
                valuation += c * (e as i64 + (t - s) as i64);
                let slot = if c > 0 { &mut num } else { &mut den };
                for _ in 0..c.unsigned_abs() {
                    *slot = f.mul(*slot, y);
                }
                weight += c;
                count += 1;
                if certify && t > 0 {
                    *lines.entry(lam.line_key(x, s, level)).or_insert(0) += c;
                }
            }
        }
    }
    if weight != 0 {
        return Err(Error::WeightNotZero {
            level,
            sum: weight,
            scope: "total".into(),
        });
    }
    let mut bad: Vec<_> = lines.iter().filter(|(_, v)| **v != 0).collect();
    bad.sort();
    if let Some((k, v)) = bad.first() {
        return Err(Error::WeightNotZero {
            level,
            sum: **v,
            scope: format!("line {:?}", &k[..3]),
        });
    }
    let digits = digits.saturating_sub(lost);
    Ok(LevelProduct {
        value: f.to_quad(f.mul(num, f.inv(den)), digits.max(1)),
        valuation,
        weight,
        digits,
        count,
    })
}

/// Digits of Ĵ_Λ fixed by the levels 0..=J: level t changes the product by O(p^{4t−3}).
pub fn definite_truncation_digits(levels: u32) -> u32 {
    4 * levels + 1
}

/// Ĵ_Λ(ξ) truncated at level J, defined up to a unit shared by all points.
pub fn definite_invariant_eval(
    spec: &DivisorSpec,
    pt: &PointX,
    lam: &PadicLattice,
    levels: u32,
    digits: u32,
    certify: bool,
) -> Result<PeriodValue> {
    let mut out = PeriodValue::one(spec.p, digits.min(definite_truncation_digits(levels)));
    for t in 0..=levels {
        let lp = definite_level_product(spec, pt, lam, t, digits, certify)?;
        out.value = out.value.mul(&lp.value);
        out.valuation += lp.valuation;
        out.digits = out.digits.min(lp.digits);
        out.levels.push(lp);
    }
    out.value = out.value.with_prec(out.digits.max(1));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::recognize::sqrt_embedding;

    fn tau11() -> QuadExtApprox {
        // (1 + √11)/2 at p = 3
        let s = sqrt_embedding(11, 3, 30).unwrap();
        let one = QuadExtApprox::from_i64(ExtKind::Unramified, 3, 30, 1, 0);
        one.add(&s)
            .scale(&PadicApprox::from_i64(3, 30, 2).inv().unwrap())
    }

    #[test]
    fn parse_and_hash() {
        let d = DivisorSpec::parse(Model::Bianchi, 5, "3:1,6:-1,7:1").unwrap();
        assert_eq!(d.spec_string(), "3:1,6:-1,7:1");
        assert!(d.certify().is_ok());
        let bad = DivisorSpec::parse(Model::Bianchi, 5, "3:2,7:-1").unwrap();
        match bad.certify() {
            Err(Error::WeightNotZero { sum, scope, .. }) => {
                assert_eq!(sum, -6);
                assert_eq!(scope, "2a₃(g) − a₇(g) = −6");
            }
            other => panic!("{other:?}"),
        }
        assert!(DivisorSpec::parse(Model::Bianchi, 5, "5:1").is_err());
    }

    #[test]
    fn bianchi_factor_substitution() {
        let i = sqrt_embedding(-1, 5, 20).unwrap().neg();
        let t1 = QuadExtApprox::from_i64(ExtKind::Unramified, 5, 20, 2, 1);
        let t2 = QuadExtApprox::from_i64(ExtKind::Unramified, 5, 20, 3, 1);
        let pt = PointX::bianchi(t1.clone(), t2.clone(), i).unwrap();
        // [0; 1, −1] ↦ −τ₁τ₂ + 1
        let want = QuadExtApprox::from_i64(ExtKind::Unramified, 5, 20, 1, 0).sub(&t1.mul(&t2));
        assert!(pt.factor_value(&[0, 0, 1, -1]).congruent(&want, 18));
    }

    #[test]
    fn levels_of_points() {
        let pt = PointX::sig21(tau11()).unwrap();
        assert_eq!(pt.affinoid_level().unwrap(), 0);
        let pw = QuadExtApprox::from_i64(ExtKind::Unramified, 3, 30, 0, 3);
        assert_eq!(PointX::sig21(pw).unwrap().affinoid_level().unwrap(), 2);
    }

    #[test]
    fn sig21_normalized_levels_converge() {
        let spec = DivisorSpec::parse(Model::Sig21, 3, "5:1,2:-2").unwrap();
        let pt = PointX::sig21(tau11()).unwrap();
        for t in 1..=3u32 {
            let mut o = LevelOptions::new(20);
            o.normalized = true;
            o.certify = true;
            let lp = level_product(&spec, &GammaElement::identity(), t, &pt, o).unwrap();
            let one = QuadExtApprox::from_i64(ExtKind::Unramified, 3, 20, 1, 0);
            assert!(lp.value.congruent(&one, 2 * t), "t={t} {:?}", lp.value);
        }
    }
}
