use std::time::Instant;

use rmc::exec::Parallel;
use rmc::suites::{
    bianchi_values, cocycle_laws, convergence, definite_suite, degree_proportionality,
    obstruction_kernels, orientation_law, recognition_suite, series_fixtures, sig21_values,
    up2_suite, weil_suite, LawParams, SuiteReport,
};
use rmc_core::rigidprod::{DivisorSpec, Model};

/// Checks that fail because 60 digits cannot pin down relations of this height.
const KNOWN_LIMITS: &[&str] = &[
    "J₄[τ₁₁] at 60 3-adic digits",
    "J_{9·17} at 60 5-adic digits",
];

fn merge(name: &str, parts: Vec<SuiteReport>) -> SuiteReport {
    let mut out = SuiteReport::new(name);
    for s in parts {
        for c in s.checks {
            out.check(format!("{}: {}", s.name, c.label), c.pass, c.detail);
        }
    }
    out
}

fn main() {
    let exec = Parallel::from_env(None).unwrap();
    let sig21 = DivisorSpec::parse(Model::Sig21, 3, "5:1,2:-2").unwrap();
    let bianchi = DivisorSpec::parse(Model::Bianchi, 5, "3:1,6:-1,7:1").unwrap();
    let laws = |seed| LawParams {
        digits: 4,
        points: 5,
        elements: 5,
        seed,
    };
    let criteria: Vec<(&str, Box<dyn Fn() -> SuiteReport + '_>)> = vec![
        ("series fixtures", Box::new(series_fixtures)),
        (
            "obstruction kernels and 2Δ₃ − Δ₇ rejection",
            Box::new(obstruction_kernels),
        ),
        (
            "Bianchi level products ≡ 1 mod 5^j, J vs J+1",
            Box::new(|| convergence(&exec, &bianchi, 4, 8)),
        ),
        (
            "degree proportionality",
            Box::new(|| degree_proportionality(5, &[(3, 0), (6, 0), (7, 0), (11, 0), (3, 1)]).0),
        ),
        ("J₁, J₂ mod 3⁵", Box::new(|| sig21_values(&exec, 5, 5))),
        (
            "disc 8 and disc 17 values",
            Box::new(|| bianchi_values(&exec, 4, 4)),
        ),
        (
            "cocycle laws, 5 points × 5 elements",
            Box::new(|| {
                merge(
                    "cocycle laws",
                    vec![
                        cocycle_laws(&exec, &sig21, &laws(1)),
                        cocycle_laws(&exec, &bianchi, &laws(2)),
                    ],
                )
            }),
        ),
        (
            "orientation law n = 2, 3",
            Box::new(|| {
                merge(
                    "orientation",
                    vec![
                        orientation_law(&exec, &sig21, 44, 6, &[2, 3]),
                        orientation_law(&exec, &bianchi, 8, 4, &[2, 3]),
                    ],
                )
            }),
        ),
        (
            "definite invariance and neighbour ratio",
            Box::new(|| definite_suite(5, 16, 2, 0, 5)),
        ),
        (
            "Weil representation on 10 modules",
            Box::new(|| weil_suite(0, 10, 25)),
        ),
        (
            "U_{p²} reindexing and bijection",
            Box::new(|| up2_suite(5, &[(3, 0), (7, 0), (3, 1), (7, 1)])),
        ),
        (
            "recognition at 60 digits",
            Box::new(|| recognition_suite(60)),
        ),
    ];
    let mut unexpected = Vec::new();
    for (k, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let rep = run();
        println!(
            "{} {:>2} {name}: {} ({:.1}s)",
            if rep.pass { "PASS" } else { "FAIL" },
            k + 1,
            rep.summary(),
            t.elapsed().as_secs_f64()
        );
        for c in rep.checks.iter().filter(|c| !c.pass) {
            println!("       {}: {}", c.label, c.detail);
            if !KNOWN_LIMITS.contains(&c.label.as_str()) {
                unexpected.push(format!("{}: {}", k + 1, c.label));
            }
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
