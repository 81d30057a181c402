//! Job configuration parsed from command-line strings.

use std::path::PathBuf;

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use rmc_core::msymb::{QuadForm, SpecialPoint};
use rmc_core::nt;
use rmc_core::recognize::FieldTag;
use rmc_core::rigidprod::{DivisorSpec, Model};

use crate::CliError;

pub fn parse_model(s: &str) -> Result<Model, CliError> {
    Model::from_tag(s).ok_or_else(|| {
        CliError::Usage(format!(
            "unknown model {s:?} (definite3 | sig21 | sig31-bianchi)"
        ))
    })
}

pub fn default_prime(model: Model) -> u64 {
    match model {
        Model::Sig21 => 3,
        Model::Bianchi | Model::Definite3 => 5,
    }
}

pub fn default_divisor(model: Model) -> &'static str {
    match model {
        Model::Sig21 => "5:1,2:-2",
        Model::Bianchi => "3:1,6:-1,7:1",
        Model::Definite3 => "6:1,11:-1",
    }
}

/// "disc=8,flip=cm,orient=1" or "form=2:-2:-5,orient=2".
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointSpec {
    pub disc: Option<i64>,
    pub form: Option<QuadForm>,
    pub flip: bool,
    pub orient: i64,
}

impl PointSpec {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        let mut out = PointSpec {
            disc: None,
            form: None,
            flip: false,
            orient: 1,
        };
        for part in s.split(',').map(str::trim).filter(|x| !x.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("bad point field {part:?}")))?;
            let int = |v: &str| {
                v.trim()
                    .parse::<i64>()
                    .map_err(|_| CliError::Usage(format!("bad integer {v:?} in {part:?}")))
            };
            match k.trim() {
                "disc" => out.disc = Some(int(v)?),
                "form" => {
                    let c: Vec<i64> = v.split(':').map(int).collect::<Result<_, _>>()?;
                    let [a, b, c] = c[..] else {
                        return Err(CliError::Usage(format!("form needs A:B:C, got {v:?}")));
                    };
                    out.form = Some(QuadForm { a, b, c });
                }
                "flip" => {
                    out.flip = match v.trim() {
                        "cm" | "on" | "true" | "1" => true,
                        "rm" | "none" | "off" | "false" | "0" => false,
                        other => {
                            return Err(CliError::Usage(format!(
                                "flip must be cm or rm, got {other:?}"
                            )))
                        }
                    }
                }
                "orient" => out.orient = int(v)?,
                other => return Err(CliError::Usage(format!("unknown point field {other:?}"))),
            }
        }
        if out.disc.is_none() && out.form.is_none() {
            return Err(CliError::Usage(format!("point {s:?} needs disc= or form=")));
        }
        Ok(out)
    }

    pub fn special(&self, model: Model) -> Result<SpecialPoint, CliError> {
        let mut sp = match (self.form, self.disc) {
            (Some(form), _) => SpecialPoint {
                model,
                form,
                flip: self.flip,
                orient: self.orient,
            },
            (None, Some(d)) => SpecialPoint::small(model, d, self.flip, self.orient)?,
            (None, None) => unreachable!(),
        };
        sp.orient = self.orient;
        Ok(sp)
    }
}

/// Square-free part of a discriminant: 44 ↦ 11, 8 ↦ 2.
pub fn squarefree_part(d: i64) -> i64 {
    let mut out = d.signum();
    for (q, e) in nt::factor(d.unsigned_abs()) {
        if e % 2 == 1 {
            out *= q as i64;
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldChoice {
    Q,
    Qi,
    QSqrt(Option<i64>),
    QiSqrt(Option<i64>),
}

impl FieldChoice {
    /// Resolves "D" to the square-free part of the point discriminant.
    pub fn resolve(&self, disc: i64) -> FieldTag {
        let d = |x: Option<i64>| x.unwrap_or_else(|| squarefree_part(disc));
        match *self {
            FieldChoice::Q => FieldTag::Q,
            FieldChoice::Qi => FieldTag::Qi,
            FieldChoice::QSqrt(x) => FieldTag::QSqrtD(d(x)),
            FieldChoice::QiSqrt(x) => FieldTag::QiSqrtD(d(x)),
        }
    }
}

/// "field=Qi_sqrtD,H=1e9"
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecognizeSpec {
    pub field: FieldChoice,
    pub height: BigInt,
}

impl RecognizeSpec {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        let mut field = FieldChoice::Qi;
        let mut height = BigInt::from(1_000_000_000u64);
        for part in s.split(',').map(str::trim).filter(|x| !x.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("bad recognition field {part:?}")))?;
            match k.trim() {
                "field" => field = parse_field(v.trim())?,
                "H" | "height" => height = parse_height(v.trim())?,
                other => {
                    return Err(CliError::Usage(format!(
                        "unknown recognition field {other:?}"
                    )))
                }
            }
        }
        Ok(RecognizeSpec { field, height })
    }
}

fn parse_field(v: &str) -> Result<FieldChoice, CliError> {
    let explicit = |rest: &str| -> Result<Option<i64>, CliError> {
        if rest == "D" {
            return Ok(None);
        }
        let inner = rest.trim_start_matches('(').trim_end_matches(')');
        inner
            .parse()
            .map(Some)
            .map_err(|_| CliError::Usage(format!("bad field {v:?}")))
    };
    match v {
        "Q" => Ok(FieldChoice::Q),
        "Qi" => Ok(FieldChoice::Qi),
        _ => {
            if let Some(rest) = v.strip_prefix("Qi_sqrt") {
                Ok(FieldChoice::QiSqrt(explicit(rest)?))
            } else if let Some(rest) = v.strip_prefix("Q_sqrt") {
                Ok(FieldChoice::QSqrt(explicit(rest)?))
            } else {
                Err(CliError::Usage(format!(
                    "unknown field {v:?} (Q | Qi | Q_sqrtD | Qi_sqrtD | Qi_sqrt17)"
                )))
            }
        }
    }
}

/// "1e9", "1000000000" or "10^12".
fn parse_height(v: &str) -> Result<BigInt, CliError> {
    let bad = || CliError::Usage(format!("bad height {v:?}"));
    if let Some((m, e)) = v.split_once(['e', 'E']) {
        let m: u64 = m.parse().map_err(|_| bad())?;
        let e: u32 = e.parse().map_err(|_| bad())?;
        return Ok(BigInt::from(m) * BigInt::from(10u32).pow(e));
    }
    if let Some((b, e)) = v.split_once('^') {
        let b: u64 = b.parse().map_err(|_| bad())?;
        let e: u32 = e.parse().map_err(|_| bad())?;
        return Ok(BigInt::from(b).pow(e));
    }
    v.parse().map_err(|_| bad())
}

/// Everything one run needs.
#[derive(Debug, Clone)]
pub struct JobConfig {
    pub model: Model,
    pub p: u64,
    pub digits: u32,
    pub divisor: DivisorSpec,
    pub points: Vec<PointSpec>,
    pub point_strings: Vec<String>,
    pub recognize: Option<RecognizeSpec>,
    pub recognize_string: Option<String>,
    pub levels: Option<u32>,
    pub cache: Option<PathBuf>,
    pub json: Option<PathBuf>,
    pub seed: u64,
}

impl JobConfig {
    #[allow(clippy::too_many_arguments)]
    pub fn build(
        model: &str,
        p: Option<u64>,
        digits: u32,
        divisor: Option<&str>,
        points_in: &[String],
        recognize_in: Option<&str>,
        levels: Option<u32>,
        cache: Option<PathBuf>,
        json: Option<PathBuf>,
        seed: u64,
    ) -> Result<Self, CliError> {
        let model = parse_model(model)?;
        let p = p.unwrap_or_else(|| default_prime(model));
        let divisor =
            DivisorSpec::parse(model, p, divisor.unwrap_or_else(|| default_divisor(model)))?;
        let points = points_in
            .iter()
            .map(|s| PointSpec::parse(s))
            .collect::<Result<_, _>>()?;
        let recognize = recognize_in.map(RecognizeSpec::parse).transpose()?;
        Ok(JobConfig {
            model,
            p,
            digits,
            divisor,
            points,
            point_strings: points_in.to_vec(),
            recognize,
            recognize_string: recognize_in.map(String::from),
            levels,
            cache,
            json,
            seed,
        })
    }
}

pub fn height_f64(h: &BigInt) -> f64 {
    h.to_f64().unwrap_or(f64::MAX)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_strings() {
        let p = PointSpec::parse("disc=8,flip=cm,orient=1").unwrap();
        assert_eq!((p.disc, p.flip, p.orient), (Some(8), true, 1));
        let p = PointSpec::parse("form=2:-2:-5,orient=3").unwrap();
        assert_eq!(p.form, Some(QuadForm { a: 2, b: -2, c: -5 }));
        assert!(PointSpec::parse("flip=cm").is_err());
        assert!(PointSpec::parse("disc=8,colour=red").is_err());
    }

    #[test]
    fn recognition_strings() {
        let r = RecognizeSpec::parse("field=Qi_sqrtD,H=1e9").unwrap();
        assert_eq!(r.field, FieldChoice::QiSqrt(None));
        assert_eq!(r.height, BigInt::from(1_000_000_000u64));
        assert_eq!(r.field.resolve(44), FieldTag::QiSqrtD(11));
        assert_eq!(
            RecognizeSpec::parse("field=Qi_sqrt17,H=10^3")
                .unwrap()
                .field
                .resolve(8),
            FieldTag::QiSqrtD(17)
        );
        assert!(RecognizeSpec::parse("field=R").is_err());
    }

    #[test]
    fn squarefree() {
        assert_eq!(
            [
                squarefree_part(44),
                squarefree_part(8),
                squarefree_part(17),
                squarefree_part(12)
            ],
            [11, 2, 17, 3]
        );
    }
}
