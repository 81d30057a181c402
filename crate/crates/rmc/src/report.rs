//! JSON records of schema "rmc-result/1". Nothing here depends on time, paths or thread count.

use num_bigint::BigInt;
use rmc_core::modforms::QSeries;
use rmc_core::msymb::{GammaElement, Gauss, SpecialValue};
use rmc_core::padic::{PadicApprox, QuadExtApprox};
use rmc_core::recognize::{NormReport, RecognitionResult};
use serde::Serialize;

use crate::config::JobConfig;
use crate::SCHEMA;

#[derive(Debug, Serialize)]
pub struct Envelope<T: Serialize> {
    pub schema: &'static str,
    pub command: &'static str,
    pub config: ConfigEcho,
    pub result: T,
}

impl<T: Serialize> Envelope<T> {
    pub fn new(command: &'static str, cfg: &JobConfig, result: T) -> Self {
        Envelope {
            schema: SCHEMA,
            command,
            config: ConfigEcho::from(cfg),
            result,
        }
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

/// The inputs that determine the output; cache and output paths are left out.
#[derive(Debug, Serialize)]
pub struct ConfigEcho {
    pub model: &'static str,
    pub p: u64,
    pub digits: u32,
    pub divisor: String,
    pub divisor_hash: String,
    pub points: Vec<String>,
    pub recognize: Option<String>,
    pub levels: Option<u32>,
    pub seed: u64,
}

impl From<&JobConfig> for ConfigEcho {
    fn from(c: &JobConfig) -> Self {
        ConfigEcho {
            model: c.model.tag(),
            p: c.p,
            digits: c.digits,
            divisor: c.divisor.spec_string(),
            divisor_hash: format!("{:016x}", c.divisor.hash()),
            points: c.point_strings.clone(),
            recognize: c.recognize_string.clone(),
            levels: c.levels,
            seed: c.seed,
        }
    }
}

/// Rational series as [numerator, denominator] string pairs.
pub fn series_json(f: &QSeries) -> Vec<[String; 2]> {
    f.coeffs()
        .iter()
        .map(|c| [c.numer().to_string(), c.denom().to_string()])
        .collect()
}

/// "Δ₅ − 2Δ₂"
pub fn combination_string(indices: &[usize], coeffs: &[BigInt]) -> String {
    let mut s = String::new();
    for (&m, c) in indices.iter().zip(coeffs) {
        if c.sign() == num_bigint::Sign::NoSign {
            continue;
        }
        let neg = c.sign() == num_bigint::Sign::Minus;
        if s.is_empty() {
            if neg {
                s.push('−');
            }
        } else {
            s.push_str(if neg { " − " } else { " + " });
        }
        let a = c.magnitude().to_string();
        if a != "1" {
            s.push_str(&a);
        }
        s.push('Δ');
        s.extend(
            m.to_string()
                .chars()
                .map(|d| char::from_u32(0x2080 + d.to_digit(10).unwrap()).unwrap()),
        );
    }
    if s.is_empty() {
        s.push('0');
    }
    s
}

/// An element of ℚ_{p²} = ℚ_p(ω) as p^valuation·(a + bω), a and b residues mod p^digits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PadicJson {
    pub p: u64,
    pub omega_sq: u64,
    pub valuation: i64,
    pub digits: u32,
    pub a: String,
    pub b: String,
}

impl PadicJson {
    pub fn unit(x: &QuadExtApprox, valuation: i64, digits: u32) -> Self {
        let r = |c: &PadicApprox| {
            c.residue(digits)
                .map(|v| v.to_string())
                .unwrap_or_else(|_| "?".into())
        };
        PadicJson {
            p: x.p(),
            omega_sq: x.nonresidue(),
            valuation,
            digits,
            a: r(x.a()),
            b: r(x.b()),
        }
    }

    /// Splits off p^val2/2 from a nonzero element.
    pub fn element(x: &QuadExtApprox) -> Self {
        let v = x.val2().map(|v| v / 2).unwrap_or(0);
        let u = x.scale(&PadicApprox::from_parts(
            x.p(),
            x.prec() + 2,
            -v,
            1u32.into(),
        ));
        let digits = u.prec().min(x.prec());
        Self::unit(&u, v, digits)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FactorJson {
    pub prime: String,
    pub exponent: i64,
    pub splitting: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct RecognitionJson {
    pub coeffs: Vec<String>,
    pub den: String,
    pub field: String,
    pub height: String,
    pub residual_margin: i64,
    pub norm: String,
    pub reflex_disc: i64,
    pub factors: Vec<FactorJson>,
}

impl RecognitionJson {
    pub fn new(r: &RecognitionResult, n: &NormReport) -> Self {
        RecognitionJson {
            coeffs: r.coeffs.iter().map(|c| c.to_string()).collect(),
            den: r.den.to_string(),
            field: r.field.label(),
            height: r.height.to_string(),
            residual_margin: r.residual_margin,
            norm: n.norm_string(),
            reflex_disc: n.reflex_disc,
            factors: n
                .factors
                .iter()
                .map(|f| FactorJson {
                    prime: f.prime.to_string(),
                    exponent: f.exponent,
                    splitting: f.splitting.label(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorJson {
    pub kind: &'static str,
    pub message: String,
}

impl ErrorJson {
    pub fn new(e: &rmc_core::Error) -> Self {
        use rmc_core::Error::*;
        let kind = match e {
            NonResidue => "NonResidue",
            OddValuation(_) => "OddValuation",
            PrecisionLoss(_) => "PrecisionLoss",
            ImproperIntersection(_) => "ImproperIntersection",
            WeightNotZero { .. } => "WeightNotZero",
            NotInXp(_) => "NotInXp",
            ZeroDenominator => "ZeroDenominator",
            NotRegular(_) => "NotRegular",
            NoFundamentalSolution(_) => "NoFundamentalSolution",
            NoRelation(_) => "NoRelation",
            NonUnitGaussSum(_) => "NonUnitGaussSum",
            Invalid(_) => "Invalid",
            TooLarge { .. } => "TooLarge",
        };
        ErrorJson {
            kind,
            message: e.to_string(),
        }
    }
}

fn gauss_string(z: Gauss) -> String {
    match (z.re, z.im) {
        (a, 0) => a.to_string(),
        (0, 1) => "i".into(),
        (0, -1) => "-i".into(),
        (0, b) => format!("{b}i"),
        (a, 1) => format!("{a}+i"),
        (a, -1) => format!("{a}-i"),
        (a, b) if b < 0 => format!("{a}{b}i"),
        (a, b) => format!("{a}+{b}i"),
    }
}

pub fn matrix_json(g: &GammaElement) -> [[String; 2]; 2] {
    [
        [gauss_string(g.a), gauss_string(g.b)],
        [gauss_string(g.c), gauss_string(g.d)],
    ]
}

#[derive(Debug, Clone, Serialize)]
pub struct PointRecord {
    pub input: String,
    pub form: Option<[i64; 3]>,
    pub disc: Option<i64>,
    pub flip: bool,
    pub orient: i64,
    pub coordinates: Vec<PadicJson>,
    pub gamma: Option<[[String; 2]; 2]>,
    pub segments: Option<usize>,
    pub affinoid_level: Option<u32>,
    pub levels: Option<u32>,
    pub guaranteed_digits: Option<u32>,
    pub value: Option<PadicJson>,
    pub recognition: Option<RecognitionJson>,
    pub recognition_error: Option<ErrorJson>,
    pub error: Option<ErrorJson>,
}

impl PointRecord {
    pub fn value_of(v: &SpecialValue) -> PadicJson {
        PadicJson::unit(&v.unit, v.valuation, v.digits)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rmc_core::padic::ExtKind;

    #[test]
    fn combinations() {
        let b = |v: &[i64]| v.iter().map(|&x| BigInt::from(x)).collect::<Vec<_>>();
        assert_eq!(combination_string(&[2, 5], &b(&[-2, 1])), "−2Δ₂ + Δ₅");
        assert_eq!(
            combination_string(&[3, 6, 7], &b(&[1, -1, 1])),
            "Δ₃ − Δ₆ + Δ₇"
        );
        assert_eq!(combination_string(&[3], &b(&[0])), "0");
    }

    #[test]
    fn padic_split() {
        let x = QuadExtApprox::from_i64(ExtKind::Unramified, 5, 10, 50, 25);
        let j = PadicJson::element(&x);
        assert_eq!((j.valuation, j.a.as_str(), j.b.as_str()), (2, "2", "1"));
    }

    #[test]
    fn gaussian_entries() {
        let g = GammaElement::new(
            Gauss::new(1, 2),
            Gauss::new(0, -1),
            Gauss::new(2, 0),
            Gauss::new(1, -2),
        );
        assert_eq!(
            matrix_json(&g),
            [
                ["1+2i".to_string(), "-i".into()],
                ["2".into(), "1-2i".into()]
            ]
        );
    }
}
