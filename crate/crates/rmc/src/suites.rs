//! Invariant suites shared by `rmc verify` and the acceptance tests.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rmc_core::modforms::{
    self, cmat_adjoint, cmat_dist, cmat_identity, cmat_mul, FiniteQuadModule, VVSeries,
};
use rmc_core::msymb::{
    cocycle_symbol_with, eval_special_with, i_embedding, normalize_sign, Cusp, GammaElement, Gauss,
    SpecialPoint,
};
use rmc_core::padic::{ExtKind, PadicApprox, QuadExtApprox};
use rmc_core::qlattice::{sigma, QuadLattice};
use rmc_core::recognize::{self, FieldEmbedding, FieldTag, RecognitionTarget, Splitting};
use rmc_core::rigidprod::{
    definite_invariant_eval, path_level_product, DivisorSpec, Executor, LevelOptions, Model,
    PadicLattice, PeriodValue, PointX,
};
use rmc_core::Error;
use serde::Serialize;

use crate::report::combination_string;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub label: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub name: String,
    pub pass: bool,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn new(name: &str) -> Self {
        SuiteReport {
            name: name.into(),
            pass: true,
            checks: vec![],
        }
    }

    pub fn check(&mut self, label: impl Into<String>, pass: bool, detail: impl Into<String>) {
        self.pass &= pass;
        self.checks.push(Check {
            label: label.into(),
            pass,
            detail: detail.into(),
        });
    }

    /// Records an error as a failed check.
    pub fn fail(&mut self, label: impl Into<String>, e: &Error) {
        self.check(label, false, format!("error: {e}"));
    }

    pub fn summary(&self) -> String {
        let failed: Vec<&str> = self
            .checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| c.label.as_str())
            .collect();
        if failed.is_empty() {
            format!("{} checks", self.checks.len())
        } else {
            format!(
                "{}/{} failed: {}",
                failed.len(),
                self.checks.len(),
                failed.join("; ")
            )
        }
    }
}

fn q2(p: u64, prec: u32, a: i64, b: i64) -> QuadExtApprox {
    QuadExtApprox::from_i64(ExtKind::Unramified, p, prec, a, b)
}

/// Digits on which x and ±y agree.
pub fn agreement_up_to_sign(x: &QuadExtApprox, y: &QuadExtApprox) -> i64 {
    x.agreement(y).max(x.agreement(&y.neg()))
}

fn period_agreement(x: &PeriodValue, y: &PeriodValue) -> i64 {
    if x.valuation != y.valuation {
        return -1;
    }
    agreement_up_to_sign(&x.value, &y.value)
}

fn ints(v: &[i64]) -> Vec<BigInt> {
    v.iter().map(|&x| BigInt::from(x)).collect()
}

// ---------------------------------------------------------------------------------------------
// Generating series and obstruction kernels

pub fn series_fixtures() -> SuiteReport {
    let mut r = SuiteReport::new("series fixtures");
    let g = modforms::weight_three_halves_g(20);
    let got: Vec<String> = [2, 5, 8, 11, 14, 17]
        .iter()
        .map(|&n| g.coeff(n).to_string())
        .collect();
    r.check(
        "g: b(2,5,8,11,14,17)",
        got == ["3", "6", "3", "6", "12", "12"],
        format!("{got:?}"),
    );
    let eta = modforms::eta_product_g20(22);
    let want: [i64; 22] = [
        0, 1, 0, -2, 0, -1, 0, 2, 0, 1, 0, 0, 0, 2, 0, 2, 0, -6, 0, -4, 0, -4,
    ];
    let got: Vec<BigRational> = (0..22).map(|n| eta.coeff(n).clone()).collect();
    let ok = got
        .iter()
        .zip(want)
        .all(|(a, b)| *a == BigRational::from_integer(b.into()));
    r.check(
        "eta(2z)^2 eta(10z)^2 through q^21",
        ok,
        got.iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join(" "),
    );
    let b: Vec<u64> = [3, 6, 7]
        .iter()
        .map(|&n| modforms::four_squares_b(n))
        .collect();
    r.check("four_squares_b(3,6,7)", b == [4, 12, 8], format!("{b:?}"));
    r
}

/// Kernel membership for the p = 3 and Bianchi combinations, and the 2Δ₃ − Δ₇ rejection.
pub fn obstruction_kernels() -> SuiteReport {
    let mut r = SuiteReport::new("obstruction kernels");
    let run = |r: &mut SuiteReport,
               model: Model,
               p: u64,
               idx: &str,
               combos: &[Vec<i64>]|
     -> Result<(), Error> {
        let spec = DivisorSpec::parse(model, p, idx)?;
        let sys = spec.obstruction()?;
        let kern: Vec<String> = sys
            .kernel
            .iter()
            .map(|v| combination_string(&sys.indices, v))
            .collect();
        let closed = sys.kernel.iter().all(|v| {
            sys.check(&v.iter().map(|x| x.to_i64().unwrap()).collect::<Vec<_>>())
                .is_ok()
        });
        r.check(
            format!("{} p={p} kernel annihilated", model.tag()),
            closed,
            kern.join(", "),
        );
        for c in combos {
            let ok = sys.check(c).is_ok();
            r.check(
                format!("{} in kernel", combination_string(&sys.indices, &ints(c))),
                ok,
                String::new(),
            );
        }
        Ok(())
    };
    // indices 2, 5, 8, 11, 14, 17
    let p3 = vec![
        vec![-2, 1, 0, 0, 0, 0],
        vec![-1, 0, 1, 0, 0, 0],
        vec![0, -1, 0, 1, 0, 0],
        vec![0, 0, 0, 0, 1, -1],
    ];
    if let Err(e) = run(&mut r, Model::Sig21, 3, "2:0,5:0,8:0,11:0,14:0,17:0", &p3) {
        r.fail("sig21 kernel", &e);
    }
    if let Err(e) = run(&mut r, Model::Bianchi, 5, "3:0,6:0,7:0", &[vec![1, -1, 1]]) {
        r.fail("bianchi kernel", &e);
    }
    match DivisorSpec::parse(Model::Bianchi, 5, "3:2,7:-1").and_then(|s| s.certify()) {
        Err(Error::WeightNotZero { sum, scope, .. }) => {
            r.check(
                "2Δ₃ − Δ₇ rejected with −6",
                sum == -6 && scope.ends_with("= −6"),
                scope,
            );
        }
        other => r.check("2Δ₃ − Δ₇ rejected with −6", false, format!("{other:?}")),
    }
    r
}

// ---------------------------------------------------------------------------------------------
// Convergence

pub fn generic_point(model: Model, p: u64, prec: u32, coords: [i64; 4]) -> Result<PointX, Error> {
    let t1 = q2(p, prec, coords[0], coords[1]);
    match model {
        Model::Sig21 => PointX::sig21(t1),
        Model::Bianchi => {
            PointX::bianchi(t1, q2(p, prec, coords[2], coords[3]), i_embedding(p, prec)?)
        }
        Model::Definite3 => PointX::definite(t1, i_embedding(p, prec)?),
    }
}

/// Level products j = 1..=levels along (0, ∞) at a level-0 point are ≡ 1 mod p^j, and each
/// truncation J → J+1 changes the product by a unit ≡ 1 mod p^{J+1}.
pub fn convergence(
    exec: &dyn Executor,
    spec: &DivisorSpec,
    levels: u32,
    digits: u32,
) -> SuiteReport {
    let mut r = SuiteReport::new(&format!("convergence ({})", spec.model.tag()));
    let p = spec.p;
    let w = digits.max(levels + 2);
    let pt = match generic_point(spec.model, p, w + 6, [1234567, 7654321, 2345678, 8765433]) {
        Ok(x) => x,
        Err(e) => {
            r.fail("test point", &e);
            return r;
        }
    };
    let k = pt.affinoid_level().unwrap_or(u32::MAX);
    r.check(
        "test point has affinoid level 0",
        k == 0,
        format!("k = {k}"),
    );
    let mut opts = LevelOptions::new(w);
    opts.normalized = spec.model == Model::Sig21;
    let seg = [GammaElement::identity()];
    let one = q2(p, w, 1, 0);
    let mut acc: Option<PeriodValue> = None;
    for j in 0..=levels {
        match path_level_product(exec, spec, &seg, &pt, j, opts) {
            Ok(lp) => {
                if j > 0 {
                    let a = lp.value.agreement(&one);
                    r.check(
                        format!("level {j} ≡ 1 mod {p}^{j}"),
                        lp.valuation == 0 && a >= j as i64,
                        format!("valuation {}, ≡ 1 mod {p}^{a}", lp.valuation),
                    );
                }
                let next = match &acc {
                    None => PeriodValue {
                        value: lp.value.clone(),
                        valuation: lp.valuation,
                        digits: lp.digits,
                        levels: vec![],
                    },
                    Some(prev) => {
                        let step = PeriodValue {
                            value: lp.value.clone(),
                            valuation: lp.valuation,
                            digits: lp.digits,
                            levels: vec![],
                        };
                        let next = prev.mul(&step);
                        let ratio = next
                            .value
                            .div(&prev.value)
                            .map(|q| q.agreement(&one))
                            .unwrap_or(-1);
                        r.check(
                            format!("J = {} vs {j}", j - 1),
                            next.valuation == prev.valuation && ratio >= j as i64,
                            format!("ratio ≡ 1 mod {p}^{ratio}"),
                        );
                        next
                    }
                };
                acc = Some(next);
            }
            Err(e) => {
                r.fail(format!("level {j}"), &e);
                break;
            }
        }
    }
    r
}

// ---------------------------------------------------------------------------------------------
// Degrees and U_{p²}

/// weighted_degree(d, j) / σ(d·p^{2j}) for the Bianchi lattice; returns the suite and the constant.
pub fn degree_proportionality(p: u64, cases: &[(i128, u32)]) -> (SuiteReport, Option<Ratio<i64>>) {
    let mut r = SuiteReport::new("degree proportionality");
    let l = QuadLattice::bianchi(p);
    let w = Model::Bianchi.weighting();
    let path = l.path_zero_infinity();
    let mut constant: Option<Ratio<i64>> = None;
    for &(d, j) in cases {
        match l.weighted_degree(w, d, j, &path) {
            Ok(deg) => {
                let s = sigma(d as u64 * p.pow(2 * j)) as i64;
                let c = Ratio::new(deg, s);
                let ok = *constant.get_or_insert(c) == c && !c.is_zero();
                r.check(
                    format!("d = {d}, j = {j}"),
                    ok,
                    format!("degree {deg} = {c}·σ({})", d as u64 * p.pow(2 * j)),
                );
            }
            Err(e) => r.fail(format!("d = {d}, j = {j}"), &e),
        }
    }
    if let Some(c) = constant {
        r.check("constant", true, c.to_string());
    }
    (r, constant)
}

/// #{n ∈ x/2 + ℤ : n² = m} for the lattice ⟨2⟩ (q(n) = n²), by direct search.
fn count_half_shift(m: Ratio<i64>, x: i64) -> i64 {
    let mut c = 0;
    for t in -60i64..=60 {
        let n = Ratio::new(2 * t + x.rem_euclid(2), 2);
        if n * n == m {
            c += 1;
        }
    }
    c
}

/// U_{p²} reindexing on the theta series of ⟨2⟩ and of ℤ⁴, and the enumeration bijection on
/// the Bianchi lattice.
pub fn up2_suite(p: u64, cases: &[(i128, u32)]) -> SuiteReport {
    let mut r = SuiteReport::new("U_{p^2}");
    // vector-valued theta of ⟨2⟩: D = ℤ/2 with q(x) = x²/4
    let mut f = VVSeries::new(vec![2]);
    let pp = (p * p) as i64;
    for t in -40i64..=40 {
        for x in 0..2 {
            let n = Ratio::new(2 * t + x, 2);
            let m = n * n;
            if m <= Ratio::from_integer(pp * 6) {
                let c = f.get(m, &[x]) + BigRational::one();
                f.set(m, &[x], c);
            }
        }
    }
    let d = FiniteQuadModule::cyclic(2, 1).unwrap();
    let u = modforms::u_p2(&f, p);
    let mut ok = u.respects_support(&d);
    let mut compared = 0;
    for num in 0..=24i64 {
        let m = Ratio::new(num, 4);
        for x in 0..2 {
            let want = count_half_shift(m * Ratio::from_integer(pp), (p as i64 * x).rem_euclid(2));
            if u.get(m, &[x]) != BigRational::from_integer(want.into()) {
                ok = false;
            }
            compared += 1;
        }
    }
    r.check(
        "a_U(m, x) = a(p²m, p·x) on θ_<2>",
        ok,
        format!("{compared} coefficients"),
    );
    let order = 12usize;
    let t4 = modforms::theta_series(
        &QuadLattice::sum_of_squares(4, p),
        order * (p * p) as usize + 1,
    );
    let dil = modforms::QSeries::new(
        (0..=order * (p * p) as usize)
            .map(|n| {
                if n % (p * p) as usize == 0 {
                    t4.coeff(n / (p * p) as usize).clone()
                } else {
                    BigRational::zero()
                }
            })
            .collect(),
    );
    let back = modforms::u_p2(&modforms::scalar_to_vv(&dil), p);
    let ok = (0..=order).all(|n| back.get(Ratio::from_integer(n as i64), &[]) == *t4.coeff(n));
    r.check(
        "U_{p²} undoes q ↦ q^{p²} on θ_{ℤ⁴}",
        ok,
        format!("through q^{order}"),
    );
    let l = QuadLattice::bianchi(p);
    let path = l.path_zero_infinity();
    for &(dd, j) in cases {
        match l.ordinarity_bijection(Model::Bianchi.weighting(), dd, j, &path) {
            Ok(b) => r.check(format!("bijection d = {dd}, j = {j}"), b, String::new()),
            Err(e) => r.fail(format!("bijection d = {dd}, j = {j}"), &e),
        }
    }
    r
}

// ---------------------------------------------------------------------------------------------
// Weil representation

/// Small even Gram matrices with cyclic discriminant group.
const GRAMS: &[&[i64]] = &[
    &[2],
    &[4],
    &[6],
    &[8],
    &[10],
    &[12],
    &[2, 1, 1, 2],
    &[2, 1, 1, 4],
    &[2, 1, 1, -2],
    &[2, 1, 1, -4],
    &[4, 1, 1, 4],
    &[2, 1, 1, -6],
];

struct Block {
    module: FiniteQuadModule,
    signature: i64,
}

/// Discriminant form of an even Gram matrix (1×1 or 2×2) with cyclic L'/L, and its signature.
fn block(g: &[i64], neg: bool) -> Block {
    let s = if neg { -1 } else { 1 };
    let g: Vec<i64> = g.iter().map(|x| s * x).collect();
    let (det, inv_diag, signature) = if g.len() == 1 {
        (g[0], vec![Ratio::new(1, g[0])], g[0].signum())
    } else {
        let det = g[0] * g[3] - g[1] * g[2];
        let sig = if det < 0 { 0 } else { 2 * g[0].signum() };
        (det, vec![Ratio::new(g[3], det), Ratio::new(g[0], det)], sig)
    };
    let n = det.unsigned_abs();
    // a generator is the dual basis vector whose diagonal entry has full denominator
    let q = inv_diag
        .iter()
        .map(|&c| c / 2)
        .find(|c| {
            (*c * Ratio::from_integer(2 * n as i64)).is_integer() && c.denom().unsigned_abs() >= n
        })
        .unwrap_or(inv_diag[0] / 2);
    let q = q - q.floor();
    Block {
        module: FiniteQuadModule {
            orders: vec![n],
            diag: vec![q],
            cross: vec![],
        },
        signature,
    }
}

pub fn weil_suite(seed: u64, count: usize, max_order: u64) -> SuiteReport {
    let mut r = SuiteReport::new("Weil representation");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut made = 0;
    let mut tries = 0;
    while made < count && tries < 10_000 {
        tries += 1;
        let mut b = block(GRAMS[rng.gen_range(0..GRAMS.len())], rng.gen_bool(0.5));
        if b.module.order() > max_order {
            continue;
        }
        while rng.gen_bool(0.4) {
            let c = block(GRAMS[rng.gen_range(0..GRAMS.len())], rng.gen_bool(0.5));
            if b.module.order() * c.module.order() > max_order {
                break;
            }
            b = Block {
                module: b.module.direct_sum(&c.module),
                signature: b.signature + c.signature,
            };
        }
        made += 1;
        let d = &b.module;
        let label = format!(
            "D = {:?} q = {:?}",
            d.orders,
            d.diag.iter().map(|x| x.to_string()).collect::<Vec<_>>()
        );
        if let Err(e) = d.validate() {
            r.fail(label, &e);
            continue;
        }
        let sig = match modforms::milgram_signature(d) {
            Ok(s) => s as i64,
            Err(e) => {
                r.fail(label, &e);
                continue;
            }
        };
        let want = b.signature.rem_euclid(8);
        let (t, s) = modforms::weil_rep(d).unwrap();
        let n = d.order() as usize;
        let id = cmat_identity(n);
        let st = cmat_mul(&s, &t);
        let s2 = cmat_mul(&s, &s);
        let s4 = cmat_mul(&s2, &s2);
        let sign = if sig % 2 == 0 { 1.0 } else { -1.0 };
        let minus_id: Vec<Vec<Complex64>> = id
            .iter()
            .map(|row| row.iter().map(|z| z * sign).collect())
            .collect();
        let errs = [
            cmat_dist(&cmat_mul(&s, &cmat_adjoint(&s)), &id),
            cmat_dist(&cmat_mul(&t, &cmat_adjoint(&t)), &id),
            cmat_dist(&cmat_mul(&st, &cmat_mul(&st, &st)), &s2),
            cmat_dist(&s4, &minus_id),
        ];
        let worst = errs.iter().cloned().fold(0.0, f64::max);
        r.check(
            label,
            sig == want && worst < 1e-10,
            format!("Milgram {sig}, lattice signature {want} mod 8; unitarity/(ST)³=S²/S⁴ errors {:.1e} {:.1e} {:.1e} {:.1e}", errs[0], errs[1], errs[2], errs[3]),
        );
    }
    r
}

// ---------------------------------------------------------------------------------------------
// Special values

/// p^v·x for a reference value: (unit part, valuation).
fn embed_reference(
    tag: FieldTag,
    p: u64,
    prec: u32,
    coeffs: &[i64],
    den: i64,
) -> Result<(QuadExtApprox, i64), Error> {
    let e = FieldEmbedding::new(tag, p, prec + 10, -1)?;
    let x = e.embed(&ints(coeffs), &BigInt::from(den))?;
    let v = x.val2().unwrap_or(0) / 2;
    let u = x.scale(&PadicApprox::from_parts(p, prec + 10, -v, 1u32.into()));
    Ok((normalize_sign(&u.with_prec(prec)), v))
}

/// Compares eval_special at `sp` with a reference value, up to sign, mod p^want.
#[allow(clippy::too_many_arguments)]
pub fn compare_special(
    r: &mut SuiteReport,
    exec: &dyn Executor,
    label: &str,
    spec: &DivisorSpec,
    sp: &SpecialPoint,
    digits: u32,
    levels: Option<u32>,
    reference: (&[i64], i64),
    want: u32,
) {
    let res = eval_special_with(exec, spec, sp, digits, levels);
    let v = match res {
        Ok(v) => v,
        Err(e) => return r.fail(label, &e),
    };
    let (u, val) = match embed_reference(FieldTag::Qi, spec.p, 40, reference.0, reference.1) {
        Ok(x) => x,
        Err(e) => return r.fail(label, &e),
    };
    let a = agreement_up_to_sign(&v.unit, &u).min(v.digits as i64);
    r.check(
        label,
        v.valuation == val && a >= want as i64,
        format!(
            "valuation {} (reference {val}), agreement mod {}^{a}, levels {}, k = {}, {} segments",
            v.valuation,
            spec.p,
            v.levels,
            v.affinoid_level,
            v.segments.len()
        ),
    );
}

pub fn sig21_values(exec: &dyn Executor, levels: u32, want: u32) -> SuiteReport {
    let mut r = SuiteReport::new("(2,1) values at τ₁₁");
    let sp = SpecialPoint::small(Model::Sig21, 44, false, 1).unwrap();
    for (name, div, coeffs, den) in [
        (
            "J₁: Δ₅ − 2Δ₂",
            "5:1,2:-2",
            [992481i64, 322880],
            17 * 29 * 29 * 73,
        ),
        (
            "J₂: Δ₈ − Δ₂",
            "8:1,2:-1",
            [-19245079, -2983200],
            29 * 61 * 101 * 109,
        ),
    ] {
        let spec = DivisorSpec::parse(Model::Sig21, 3, div).unwrap();
        compare_special(
            &mut r,
            exec,
            name,
            &spec,
            &sp,
            want + 2,
            Some(levels),
            (&coeffs, den),
            want,
        );
    }
    r
}

pub fn bianchi_values(exec: &dyn Executor, d8_levels: u32, d17_levels: u32) -> SuiteReport {
    let mut r = SuiteReport::new("(3,1) values at small CM points");
    let spec = DivisorSpec::parse(Model::Bianchi, 5, "3:1,6:-1,7:1").unwrap();
    let d8 = SpecialPoint::small(Model::Bianchi, 8, true, 1).unwrap();
    compare_special(
        &mut r,
        exec,
        "disc 8: 1",
        &spec,
        &d8,
        6,
        Some(d8_levels),
        (&[1, 0], 1),
        4,
    );
    let d17 = SpecialPoint::small(Model::Bianchi, 17, true, 1).unwrap();
    // 2²(4 − i)²·i/5³ = (32 + 60i)/125
    compare_special(
        &mut r,
        exec,
        "disc 17: 2²(4−i)²i/5³",
        &spec,
        &d17,
        5,
        Some(d17_levels),
        (&[32, 60], 125),
        3,
    );
    r
}

// ---------------------------------------------------------------------------------------------
// Cocycle laws

fn gamma0_2_generators(model: Model) -> Vec<GammaElement> {
    match model {
        Model::Sig21 => vec![GammaElement::int(1, 1, 0, 1), GammaElement::int(1, 0, 2, 1)],
        _ => vec![
            GammaElement::int(1, 1, 0, 1),
            GammaElement::new(Gauss::ONE, Gauss::I, Gauss::ZERO, Gauss::ONE),
            GammaElement::int(1, 0, 2, 1),
            GammaElement::new(Gauss::ONE, Gauss::ZERO, Gauss::new(0, 2), Gauss::ONE),
        ],
    }
}

/// A word of length 2..=3 in the Γ₀(2) generators and their inverses.
pub fn random_gamma0_2(model: Model, rng: &mut ChaCha8Rng) -> GammaElement {
    let gens = gamma0_2_generators(model);
    let len = rng.gen_range(2..=3);
    let mut g = GammaElement::identity();
    for _ in 0..len {
        let h = &gens[rng.gen_range(0..gens.len())];
        let h = if rng.gen_bool(0.5) { *h } else { h.inv() };
        g = g.mul(&h);
    }
    g
}

/// A level-0 point with large random coordinates.
pub fn random_point(
    model: Model,
    p: u64,
    prec: u32,
    rng: &mut ChaCha8Rng,
) -> Result<PointX, Error> {
    let mut c = [0i64; 4];
    for (k, x) in c.iter_mut().enumerate() {
        *x = rng.gen_range(1_000_000..1_000_000_000);
        if k % 2 == 1 && *x % p as i64 == 0 {
            *x += 1;
        }
    }
    generic_point(model, p, prec, c)
}

pub struct LawParams {
    pub digits: u32,
    pub points: usize,
    pub elements: usize,
    pub seed: u64,
}

/// J(r, m)·J(m, s) = J(r, s) and J(γr, γs)(γx) = J(r, s)(x) for γ ∈ Γ₀(2), up to sign,
/// mod p^{N−k}.
pub fn cocycle_laws(exec: &dyn Executor, spec: &DivisorSpec, lp: &LawParams) -> SuiteReport {
    let mut r = SuiteReport::new(&format!("cocycle laws ({})", spec.model.tag()));
    let model = spec.model;
    let p = spec.p;
    let mut rng = ChaCha8Rng::seed_from_u64(lp.seed);
    let n = lp.digits;
    let w = (n + 4).min(rmc_core::fastmod::Zpw::max_digits(p));
    let opts = LevelOptions::new(w);
    let gammas: Vec<GammaElement> = (0..lp.elements)
        .map(|_| random_gamma0_2(model, &mut rng))
        .collect();
    let zero = Cusp::zero();
    let inf = Cusp::infinity();
    for k in 0..lp.points {
        let x = match random_point(model, p, w + 6, &mut rng) {
            Ok(x) => x,
            Err(e) => {
                r.fail(format!("point {k}"), &e);
                continue;
            }
        };
        let lvl = x.affinoid_level().unwrap_or(0);
        let levels = rmc_core::rigidprod::truncation_level(n, lvl);
        let target = n.saturating_sub(lvl) as i64;
        let base = match cocycle_symbol_with(exec, spec, &zero, &inf, &x, levels, opts) {
            Ok(v) => v,
            Err(e) => {
                r.fail(format!("point {k}: J(0, ∞)"), &e);
                continue;
            }
        };
        let m = if model == Model::Sig21 {
            Cusp::rational(rng.gen_range(1..7), rng.gen_range(2..9))
        } else {
            Cusp::new(
                Gauss::new(rng.gen_range(1..4), rng.gen_range(-2..3)),
                Gauss::int(rng.gen_range(2..5)),
            )
        };
        let concat = cocycle_symbol_with(exec, spec, &zero, &m, &x, levels, opts).and_then(|a| {
            Ok(a.mul(&cocycle_symbol_with(
                exec, spec, &m, &inf, &x, levels, opts,
            )?))
        });
        match concat {
            Ok(c) => {
                let a = period_agreement(&c, &base);
                r.check(
                    format!(
                        "point {k}: J(0,m)J(m,∞) = J(0,∞), m = {:?}/{:?}",
                        m.num, m.den
                    ),
                    a >= target,
                    format!("agreement {a} ≥ {target}"),
                );
            }
            Err(e) => r.fail(format!("point {k}: concatenation"), &e),
        }
        for (j, g) in gammas.iter().enumerate() {
            let res = x.act(g).and_then(|gx| {
                cocycle_symbol_with(
                    exec,
                    spec,
                    &g.act_cusp(&zero),
                    &g.act_cusp(&inf),
                    &gx,
                    levels,
                    opts,
                )
            });
            match res {
                Ok(v) => {
                    let a = period_agreement(&v, &base);
                    r.check(
                        format!("point {k}: γ{j} equivariance"),
                        a >= target,
                        format!("γ = {:?}, agreement {a} ≥ {target}", [g.a, g.b, g.c, g.d]),
                    );
                }
                Err(e) => r.fail(format!("point {k}: γ{j}"), &e),
            }
        }
    }
    r
}

/// J[n·x] = J[x]ⁿ up to sign for n ∈ `powers`.
pub fn orientation_law(
    exec: &dyn Executor,
    spec: &DivisorSpec,
    disc: i64,
    digits: u32,
    powers: &[i64],
) -> SuiteReport {
    let mut r = SuiteReport::new(&format!("orientation law ({})", spec.model.tag()));
    let sp = |n: i64| SpecialPoint::small(spec.model, disc, false, n);
    let base = match sp(1).and_then(|s| eval_special_with(exec, spec, &s, digits, None)) {
        Ok(v) => v,
        Err(e) => {
            r.fail(format!("J[x], disc {disc}"), &e);
            return r;
        }
    };
    let target = digits.saturating_sub(base.affinoid_level) as i64;
    for &n in powers {
        let res = sp(n).and_then(|s| eval_special_with(exec, spec, &s, digits, None));
        match (res, base.unit.pow(n)) {
            (Ok(v), Ok(pw)) => {
                let a = agreement_up_to_sign(&v.unit, &pw).min(v.digits as i64);
                r.check(
                    format!("disc {disc}: J[{n}·x] = J[x]^{n}"),
                    v.valuation == n * base.valuation && a >= target,
                    format!(
                        "valuation {} vs {}·{}, agreement {a} ≥ {target}, {} segments",
                        v.valuation,
                        n,
                        base.valuation,
                        v.segments.len()
                    ),
                );
            }
            (Err(e), _) | (_, Err(e)) => r.fail(format!("disc {disc}: n = {n}"), &e),
        }
    }
    r
}

// ---------------------------------------------------------------------------------------------
// Definite case

/// Ĵ(γx)/Ĵ(x) = 1 for two elements of SO₃(ℤ[1/5]), and Ĵ_Λ/Ĵ_Λ′ constant over the points.
pub fn definite_suite(p: u64, digits: u32, levels: u32, seed: u64, points: usize) -> SuiteReport {
    let mut r = SuiteReport::new("definite invariance");
    let spec = match DivisorSpec::parse(Model::Definite3, p, "6:1,11:-1") {
        Ok(s) => s,
        Err(e) => {
            r.fail("divisor", &e);
            return r;
        }
    };
    let i = i_embedding(p, digits + 14).unwrap();
    let ires: u64 = i.a().residue(digits).unwrap().to_u64().unwrap();
    let l0 = PadicLattice::standard(p, 3, digits);
    let l2 = PadicLattice::neighbour_sum_of_squares(p, digits, ires);
    let rots: [(&str, Vec<Vec<i64>>); 2] = [
        ("R_x", vec![vec![5, 0, 0], vec![0, -3, -4], vec![0, 4, -3]]),
        ("R_z", vec![vec![3, 4, 0], vec![-4, 3, 0], vec![0, 0, 5]]),
    ];
    let one = q2(p, digits, 1, 0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut first: Option<(u32, QuadExtApprox)> = None;
    for k in 0..points {
        let (a, b) = (
            rng.gen_range(2..1_000_000i64),
            rng.gen_range(1..1_000_000i64),
        );
        let b = if b % p as i64 == 0 { b + 1 } else { b };
        let x = match PointX::definite(q2(p, digits + 14, a, b), i.clone()) {
            Ok(x) => x,
            Err(e) => {
                r.fail(format!("point {k}"), &e);
                continue;
            }
        };
        let j0 = match definite_invariant_eval(&spec, &x, &l0, levels, digits, true) {
            Ok(v) => v,
            Err(e) => {
                r.fail(format!("point {k}: Ĵ_Λ"), &e);
                continue;
            }
        };
        for (name, m) in &rots {
            let res = x
                .act_rational(m, 5)
                .and_then(|rx| definite_invariant_eval(&spec, &rx, &l0, levels, digits, true));
            match res.and_then(|jr| {
                Ok((
                    jr.valuation,
                    jr.digits.min(j0.digits) as i64,
                    jr.value.div(&j0.value)?,
                ))
            }) {
                Ok((v, target, q)) => {
                    let agree = q.agreement(&one);
                    r.check(
                        format!("point {k} ({a}+{b}ω): Ĵ({name}x)/Ĵ(x) = 1"),
                        v == j0.valuation && agree >= target,
                        format!("≡ 1 mod {p}^{agree}, want {target}"),
                    );
                }
                Err(e) => r.fail(format!("point {k}: {name}"), &e),
            }
        }
        match definite_invariant_eval(&spec, &x, &l2, levels, digits, true)
            .and_then(|j2| Ok((j2.digits.min(j0.digits), j0.value.div(&j2.value)?)))
        {
            Ok((d, q)) => match &first {
                None => {
                    r.check(
                        format!("point {k}: neighbour ratio recorded"),
                        true,
                        format!("{d} digits"),
                    );
                    first = Some((d, q));
                }
                Some((d0, f)) => {
                    let target = d.min(*d0) as i64;
                    let agree = q.agreement(f);
                    r.check(
                        format!("point {k}: neighbour ratio constant"),
                        agree >= target,
                        format!("agrees with point 0 mod {p}^{agree}, want {target}"),
                    );
                }
            },
            Err(e) => r.fail(format!("point {k}: Ĵ_Λ′"), &e),
        }
    }
    r
}

// ---------------------------------------------------------------------------------------------
// Recognition

fn gmul(x: (BigInt, BigInt), y: (BigInt, BigInt)) -> (BigInt, BigInt) {
    (&x.0 * &y.0 - &x.1 * &y.1, &x.0 * &y.1 + &x.1 * &y.0)
}

/// Π (a + bi)^e as (re, im, den) in lowest terms.
pub fn gaussian_product(factors: &[((i64, i64), i64)]) -> (BigInt, BigInt, BigInt) {
    let mut num = (BigInt::one(), BigInt::zero());
    let mut den = (BigInt::one(), BigInt::zero());
    for &((a, b), e) in factors {
        let z = (BigInt::from(a), BigInt::from(b));
        for _ in 0..e.abs() {
            if e > 0 {
                num = gmul(num, z.clone());
            } else {
                den = gmul(den, z.clone());
            }
        }
    }
    // num/den = num·conj(den)/|den|²
    let conj = (den.0.clone(), -den.1.clone());
    let n = gmul(num, conj);
    let d = &den.0 * &den.0 + &den.1 * &den.1;
    reduce(vec![n.0, n.1], d)
}

fn reduce(mut c: Vec<BigInt>, mut d: BigInt) -> (BigInt, BigInt, BigInt) {
    use num_integer::Integer;
    let mut g = d.clone();
    for x in &c {
        g = g.gcd(x);
    }
    if d.is_negative() {
        g = -g;
    }
    for x in c.iter_mut() {
        *x /= &g;
    }
    d /= &g;
    (c[0].clone(), c[1].clone(), d)
}

/// A reference algebraic value: field, prime, coefficients in the field basis, denominator.
pub struct Reference {
    pub name: &'static str,
    pub field: FieldTag,
    pub p: u64,
    pub coeffs: Vec<BigInt>,
    pub den: BigInt,
}

fn reference(name: &'static str, field: FieldTag, p: u64, coeffs: &[i64], den: i64) -> Reference {
    Reference {
        name,
        field,
        p,
        coeffs: ints(coeffs),
        den: BigInt::from(den),
    }
}

pub fn reference_values() -> Vec<Reference> {
    let big = |s: &str| s.parse::<BigInt>().unwrap();
    let j917 = gaussian_product(&[
        ((19, 0), 2),
        ((1, 1), 8),
        ((1, -4), 5),
        ((5, 2), 3),
        ((5, 4), 1),
        ((5, 6), 2),
        ((1, 2), -5),
        ((1, -2), -6),
        ((1, -6), -2),
        ((9, -4), -2),
        ((7, -8), -2),
        ((2, -13), -2),
    ]);
    let j37 = gaussian_product(&[
        ((2, -1), 4),
        ((3, -2), 1),
        ((2, 5), 2),
        ((1, 6), 1),
        ((5, 8), 2),
        ((8, 7), 1),
        ((12, 7), 1),
        ((3, 0), -5),
        ((7, 0), -4),
        ((2, 1), -2),
        ((5, 6), -1),
        ((3, 10), -1),
    ]);
    vec![
        reference(
            "J₁[τ₁₁]",
            FieldTag::Qi,
            3,
            &[992481, 322880],
            17 * 29 * 29 * 73,
        ),
        reference(
            "J₂[τ₁₁]",
            FieldTag::Qi,
            3,
            &[-19245079, -2983200],
            29 * 61 * 101 * 109,
        ),
        Reference {
            name: "J₃[τ₁₁]",
            field: FieldTag::Qi,
            p: 3,
            coeffs: vec![big("19229239383465"), big("7867810272448")],
            den: BigInt::from(13i64.pow(4) * 17 * 17 * 29 * 29 * 41 * 73),
        },
        Reference {
            name: "J₄[τ₁₁]",
            field: FieldTag::Qi,
            p: 3,
            coeffs: vec![
                big("4967915642907602238905"),
                big("-13926798659822783142912"),
            ],
            den: BigInt::from(17i64.pow(3) * 29 * 41 * 73)
                * BigInt::from(109i64 * 149 * 193 * 197 * 233 * 241),
        },
        reference(
            "J[1/√2]",
            FieldTag::QiSqrtD(2),
            5,
            &[-289, 480, -204, 340],
            33,
        ),
        reference(
            "J[(1+√3)/2]",
            FieldTag::QiSqrtD(3),
            5,
            &[-329, 96, 188, -56],
            49,
        ),
        reference(
            "J[(1+√17)/4]",
            FieldTag::QiSqrtD(17),
            5,
            &[8561065121, -13089950772, -2076362976, 3174779132],
            3 * 125 * 49 * 17 * 23,
        ),
        reference("J[(1+√17)/4, (1−√17)/4]", FieldTag::Qi, 5, &[32, 60], 125),
        Reference {
            name: "J_{9·17}",
            field: FieldTag::Qi,
            p: 5,
            coeffs: vec![j917.0, j917.1],
            den: j917.2,
        },
        Reference {
            name: "J₃₇",
            field: FieldTag::Qi,
            p: 5,
            coeffs: vec![j37.0, j37.1],
            den: j37.2,
        },
    ]
}

fn height_of(v: &Reference) -> BigInt {
    v.coeffs
        .iter()
        .map(|c| c.abs())
        .chain([v.den.abs()])
        .max()
        .unwrap()
}

fn same_value(r: &recognize::RecognitionResult, v: &Reference) -> bool {
    r.coeffs
        .iter()
        .zip(&v.coeffs)
        .all(|(a, b)| a * &v.den == b * &r.den)
        && r.coeffs.len() == v.coeffs.len()
}

/// Round trip of each reference value through its p-adic embedding at `digits` digits, plus
/// norm and splitting reports for J₁ and J₃₇.
pub fn recognition_suite(digits: u32) -> SuiteReport {
    let mut r = SuiteReport::new("recognition");
    let mut j1 = None;
    let mut j37 = None;
    for v in reference_values() {
        let h = height_of(&v);
        let res = FieldEmbedding::new(v.field, v.p, digits + 10, -1).and_then(|e| {
            let x = e.embed(&v.coeffs, &v.den)?.with_prec(digits);
            recognize::recognize_algebraic(&RecognitionTarget {
                value: x,
                digits,
                field: e,
                height: h.clone() * 10,
            })
        });
        match res {
            Ok(res) => {
                let ok = same_value(&res, &v);
                r.check(
                    format!("{} at {} {}-adic digits", v.name, digits, v.p),
                    ok,
                    format!("height {}, margin {}", res.height, res.residual_margin),
                );
                if v.name.starts_with("J₁") {
                    j1 = Some(res);
                } else if v.name == "J₃₇" {
                    j37 = Some(res);
                }
            }
            Err(e) => r.fail(format!("{} at {} {}-adic digits", v.name, digits, v.p), &e),
        }
    }
    if let Some(res) = j1 {
        let n = recognize::norm_and_splitting(&res, 11);
        let want = [17u32, 29, 73];
        let labels: Vec<String> = n
            .den_factors
            .iter()
            .map(|f| format!("{}^{} {}", f.prime, -f.exponent, f.splitting.label()))
            .collect();
        let ok = n.norm.is_one()
            && n.den_factors.len() == 3
            && n.den_factors.iter().all(|f| {
                want.iter().any(|&q| f.prime == BigInt::from(q)) && f.splitting == Splitting::Inert
            });
        r.check(
            "J₁: norm 1, denominator primes 17, 29, 73 inert in Q(√11)",
            ok,
            format!("norm {}; {}", n.norm_string(), labels.join(", ")),
        );
    }
    if let Some(res) = j37 {
        let n = recognize::norm_and_splitting(&res, -37);
        let want = BigRational::new(
            BigInt::from(25u64 * 13 * 29 * 29 * 37 * 89 * 89 * 113 * 193),
            BigInt::from(3u64.pow(10)) * BigInt::from(7u64.pow(8)) * BigInt::from(61 * 109),
        );
        r.check("Norm(J₃₇)", n.norm == want, n.norm_string());
        let labels: Vec<String> = n
            .factors
            .iter()
            .map(|f| format!("{}^{} {}", f.prime, f.exponent, f.splitting.label()))
            .collect();
        let ok = n
            .factors
            .iter()
            .all(|f| matches!(f.splitting, Splitting::Inert | Splitting::Ramified));
        r.check(
            "Norm(J₃₇) primes inert or ramified in Q(√−37)",
            ok,
            labels.join(", "),
        );
    }
    r
}

/// The default invariant suites for one model, as run by `rmc verify`.
pub fn default_suites(
    exec: &dyn Executor,
    model: Model,
    p: u64,
    digits: u32,
    levels: Option<u32>,
    seed: u64,
) -> Vec<SuiteReport> {
    let mut out = vec![series_fixtures(), obstruction_kernels()];
    out.push(degree_proportionality(5, &[(3, 0), (6, 0), (7, 0), (11, 0), (3, 1)]).0);
    out.push(weil_suite(seed, 10, 25));
    out.push(up2_suite(5, &[(3, 0), (7, 0), (3, 1), (7, 1)]));
    match model {
        Model::Sig21 => {
            let spec = DivisorSpec::parse(model, p, "5:1,2:-2").unwrap();
            let n = digits.min(8);
            out.push(convergence(exec, &spec, levels.unwrap_or(4), n + 4));
            out.push(cocycle_laws(
                exec,
                &spec,
                &LawParams {
                    digits: n,
                    points: 3,
                    elements: 3,
                    seed,
                },
            ));
            out.push(orientation_law(exec, &spec, 44, n, &[2, 3]));
        }
        Model::Bianchi => {
            let spec = DivisorSpec::parse(model, p, "3:1,6:-1,7:1").unwrap();
            let n = digits.min(4);
            out.push(convergence(exec, &spec, levels.unwrap_or(2), 8));
            out.push(cocycle_laws(
                exec,
                &spec,
                &LawParams {
                    digits: n,
                    points: 2,
                    elements: 2,
                    seed,
                },
            ));
        }
        Model::Definite3 => out.push(definite_suite(
            p,
            digits.clamp(8, 16),
            levels.unwrap_or(2),
            seed,
            3,
        )),
    }
    out.push(recognition_suite(60));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_products() {
        // 2²(4 − i)²·i = (32 + 60i)
        let (a, b, d) = gaussian_product(&[((2, 0), 2), ((4, -1), 2), ((0, 1), 1), ((5, 0), -3)]);
        assert_eq!(
            (a, b, d),
            (BigInt::from(32), BigInt::from(60), BigInt::from(125))
        );
        let (a, b, d) = gaussian_product(&[((1, 0), 1), ((1, 1), -1)]);
        assert_eq!(
            (a, b, d),
            (BigInt::from(1), BigInt::from(-1), BigInt::from(2))
        );
    }

    #[test]
    fn weil_blocks() {
        let b = block(&[2, 1, 1, 2], false);
        assert_eq!((b.module.orders.clone(), b.signature), (vec![3], 2));
        assert_eq!(modforms::milgram_signature(&b.module).unwrap(), 2);
        let b = block(&[4], true);
        assert_eq!(modforms::milgram_signature(&b.module).unwrap(), 7);
    }

    #[test]
    fn random_words_lie_in_gamma0_2() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for model in [Model::Sig21, Model::Bianchi] {
            for _ in 0..20 {
                let g = random_gamma0_2(model, &mut rng);
                assert_eq!(g.det(), Gauss::ONE);
                assert!(g.c.re % 2 == 0 && g.c.im % 2 == 0, "{g:?}");
            }
        }
    }
}
