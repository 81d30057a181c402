//! The obstruct, eval and verify commands. Each returns its JSON document and exit code.

use std::sync::Arc;

use rayon::prelude::*;
use rmc_core::fastmod::Zpw;
use rmc_core::msymb::eval_special_with;
use rmc_core::recognize::{self, FieldEmbedding, RecognitionTarget};
use rmc_core::rigidprod::Executor;
use rmc_core::Error;
use serde::Serialize;

use crate::cache::{CacheHeader, LevelCache};
use crate::config::{squarefree_part, JobConfig, PointSpec};
use crate::exec::Parallel;
use crate::report::{
    combination_string, matrix_json, series_json, Envelope, ErrorJson, PadicJson, PointRecord,
    RecognitionJson,
};
use crate::suites::{default_suites, SuiteReport};
use crate::CliError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_REJECTED: i32 = 2;

#[derive(Debug)]
pub struct Outcome {
    pub json: String,
    pub exit_code: i32,
    /// human-readable lines for stderr
    pub messages: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct BasisForm {
    pub name: String,
    pub coefficients: Vec<[String; 2]>,
}

#[derive(Debug, Serialize)]
pub struct KernelVector {
    pub coeffs: Vec<String>,
    pub combination: String,
}

#[derive(Debug, Serialize)]
pub struct ViolationJson {
    pub form: String,
    pub value: i64,
    pub functional: String,
}

#[derive(Debug, Serialize)]
pub struct ObstructResult {
    pub basis: Vec<BasisForm>,
    pub indices: Vec<usize>,
    pub weights: Vec<i64>,
    pub kernel: Vec<KernelVector>,
    pub certified: bool,
    pub violation: Option<ViolationJson>,
}

fn obstruct_result(cfg: &JobConfig) -> Result<ObstructResult, CliError> {
    let spec = &cfg.divisor;
    let basis = spec.obstruction_basis()?;
    let sys = spec.obstruction()?;
    let top = spec.indices().into_iter().max().unwrap_or(0) + 1;
    let violation = match spec.certify() {
        Ok(()) => None,
        Err(Error::WeightNotZero { sum, scope, .. }) => {
            let form = basis
                .iter()
                .map(|(n, _)| n.clone())
                .find(|n| scope.contains(&format!("({n})")))
                .unwrap_or_default();
            Some(ViolationJson {
                form,
                value: sum,
                functional: scope,
            })
        }
        Err(e) => return Err(e.into()),
    };
    Ok(ObstructResult {
        basis: basis
            .iter()
            .map(|(name, f)| BasisForm {
                name: name.clone(),
                coefficients: series_json(f).into_iter().take(top).collect(),
            })
            .collect(),
        indices: sys.indices.clone(),
        weights: spec.weights(),
        kernel: sys
            .kernel
            .iter()
            .map(|v| KernelVector {
                coeffs: v.iter().map(|x| x.to_string()).collect(),
                combination: combination_string(&sys.indices, v),
            })
            .collect(),
        certified: violation.is_none(),
        violation,
    })
}

fn rejection_message(v: &ViolationJson) -> String {
    format!("divisor rejected: {}", v.functional)
}

pub fn cmd_obstruct(cfg: &JobConfig) -> Result<Outcome, CliError> {
    let res = obstruct_result(cfg)?;
    let mut messages: Vec<String> = res
        .kernel
        .iter()
        .map(|k| format!("kernel: {}", k.combination))
        .collect();
    let exit_code = match &res.violation {
        Some(v) => {
            messages.push(rejection_message(v));
            EXIT_REJECTED
        }
        None => {
            messages.push("divisor certified".into());
            EXIT_OK
        }
    };
    Ok(Outcome {
        json: Envelope::new("obstruct", cfg, res).to_json()?,
        exit_code,
        messages,
    })
}

#[derive(Debug, Serialize)]
pub struct EvalResult {
    pub working_digits: u32,
    pub points: Vec<PointRecord>,
    pub errors: usize,
}

/// Working digits of the fast kernel for a job.
pub fn working_digits(cfg: &JobConfig) -> u32 {
    (cfg.digits + 4).min(Zpw::max_digits(cfg.p))
}

fn eval_point(cfg: &JobConfig, exec: &dyn Executor, input: &str, ps: &PointSpec) -> PointRecord {
    let mut rec = PointRecord {
        input: input.into(),
        form: ps.form.map(|f| [f.a, f.b, f.c]),
        disc: ps.disc,
        flip: ps.flip,
        orient: ps.orient,
        coordinates: vec![],
        gamma: None,
        segments: None,
        affinoid_level: None,
        levels: None,
        guaranteed_digits: None,
        value: None,
        recognition: None,
        recognition_error: None,
        error: None,
    };
    let sp = match ps.special(cfg.model) {
        Ok(sp) => sp,
        Err(CliError::Core(e)) => {
            rec.error = Some(ErrorJson::new(&e));
            return rec;
        }
        Err(e) => {
            rec.error = Some(ErrorJson {
                kind: "Invalid",
                message: e.to_string(),
            });
            return rec;
        }
    };
    let disc = sp.form.disc();
    rec.form = Some([sp.form.a, sp.form.b, sp.form.c]);
    rec.disc = Some(disc);
    if let Ok(pt) = sp.point(cfg.p, working_digits(cfg)) {
        rec.coordinates = pt.coords.iter().map(PadicJson::element).collect();
    }
    let v = match eval_special_with(exec, &cfg.divisor, &sp, cfg.digits, cfg.levels) {
        Ok(v) => v,
        Err(e) => {
            rec.error = Some(ErrorJson::new(&e));
            return rec;
        }
    };
    rec.gamma = Some(matrix_json(&v.gamma));
    rec.segments = Some(v.segments.len());
    rec.affinoid_level = Some(v.affinoid_level);
    rec.levels = Some(v.levels);
    rec.guaranteed_digits = Some(v.digits);
    rec.value = Some(PointRecord::value_of(&v));
    if let Some(rs) = &cfg.recognize {
        let tag = rs.field.resolve(disc);
        let reflex = if ps.flip {
            -squarefree_part(disc)
        } else {
            squarefree_part(disc)
        };
        let res = FieldEmbedding::new(tag, cfg.p, v.digits + 10, -1).and_then(|field| {
            recognize::recognize_algebraic(&RecognitionTarget {
                value: v.full_value(),
                digits: v.digits,
                field,
                height: rs.height.clone(),
            })
        });
        match res {
            Ok(r) => {
                rec.recognition = Some(RecognitionJson::new(
                    &r,
                    &recognize::norm_and_splitting(&r, reflex),
                ))
            }
            Err(e) => rec.recognition_error = Some(ErrorJson::new(&e)),
        }
    }
    rec
}

fn rejected_outcome(cfg: &JobConfig, command: &'static str) -> Result<Option<Outcome>, CliError> {
    let res = obstruct_result(cfg)?;
    match res.violation {
        None => Ok(None),
        Some(ref v) => {
            let messages = vec![rejection_message(v)];
            Ok(Some(Outcome {
                json: Envelope::new(command, cfg, res).to_json()?,
                exit_code: EXIT_REJECTED,
                messages,
            }))
        }
    }
}

pub fn cmd_eval(cfg: &JobConfig) -> Result<Outcome, CliError> {
    if cfg.points.is_empty() {
        return Err(CliError::Usage("eval needs at least one --point".into()));
    }
    if let Some(out) = rejected_outcome(cfg, "eval")? {
        return Ok(out);
    }
    let w = working_digits(cfg);
    let cache = match &cfg.cache {
        Some(path) => Some(Arc::new(LevelCache::open(
            path,
            CacheHeader::for_job(&cfg.divisor, w),
        )?)),
        None => None,
    };
    let exec = Parallel::from_env(cache.clone())?;
    let jobs: Vec<(&String, &PointSpec)> = cfg.point_strings.iter().zip(&cfg.points).collect();
    let points: Vec<PointRecord> = exec.pool().install(|| {
        jobs.par_iter()
            .map(|(s, ps)| eval_point(cfg, &exec, s, ps))
            .collect()
    });
    let mut messages = Vec::new();
    if let (Some(c), Some(path)) = (&cache, &cfg.cache) {
        if c.reset {
            messages.push(format!(
                "cache {}: header mismatch, rebuilt",
                path.display()
            ));
        }
        c.save(path)?;
        messages.push(format!(
            "cache {}: {} entries, {} hits, {} misses",
            path.display(),
            c.len(),
            c.hits(),
            c.misses()
        ));
    }
    let errors = points.iter().filter(|p| p.error.is_some()).count();
    for p in &points {
        match (&p.value, &p.error) {
            (Some(v), _) => messages.push(format!(
                "{}: p^{}·({} + {}ω) mod {}^{}",
                p.input, v.valuation, v.a, v.b, v.p, v.digits
            )),
            (None, Some(e)) => messages.push(format!("{}: {}: {}", p.input, e.kind, e.message)),
            _ => {}
        }
    }
    let res = EvalResult {
        working_digits: w,
        points,
        errors,
    };
    Ok(Outcome {
        json: Envelope::new("eval", cfg, res).to_json()?,
        exit_code: EXIT_OK,
        messages,
    })
}

#[derive(Debug, Serialize)]
pub struct VerifyResult {
    pub pass: bool,
    pub suites: Vec<SuiteReport>,
}

pub fn cmd_verify(cfg: &JobConfig) -> Result<Outcome, CliError> {
    let exec = Parallel::from_env(None)?;
    let suites = default_suites(&exec, cfg.model, cfg.p, cfg.digits, cfg.levels, cfg.seed);
    let pass = suites.iter().all(|s| s.pass);
    let messages = suites
        .iter()
        .map(|s| {
            format!(
                "{} {}: {}",
                if s.pass { "PASS" } else { "FAIL" },
                s.name,
                s.summary()
            )
        })
        .collect();
    let res = VerifyResult { pass, suites };
    Ok(Outcome {
        json: Envelope::new("verify", cfg, res).to_json()?,
        exit_code: if pass { EXIT_OK } else { EXIT_FAILURE },
        messages,
    })
}
