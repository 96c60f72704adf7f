//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Each criterion also has a wall-clock budget.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use soficlab::report::{CheckResult, Parameters, RunReport};
use soficlab::suites::{self, SuiteOptions, TREND_PRIMES};
use soficlab::Result;

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Duration,
    run: fn() -> Result<Vec<CheckResult>>,
}

fn opts(seed: u64) -> SuiteOptions {
    SuiteOptions { seed, ..SuiteOptions::default() }
}

fn determinism() -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    for suite in ["soficity", "covers", "partition"] {
        let render = || -> Result<String> {
            let params = Parameters { p: Some(7), m: 5, k: 3, r_p: Some(11), seed: 9, samples: None, mode: "exact".into(), primes: vec![] };
            RunReport::new(suite, params, suites::run_suite(suite, &opts(9))?).to_json()
        };
        let (a, b) = (render()?, render()?);
        out.push(CheckResult::holds(&format!("{suite} report repeats bit for bit"), "determinism", a == b));
    }
    Ok(out)
}

fn criteria() -> Vec<Criterion> {
    let secs = Duration::from_secs;
    vec![
        Criterion { id: 1, name: "exact S_p bounds", budget: secs(5), run: || suites::sp_bounds(&TREND_PRIMES) },
        Criterion { id: 2, name: "boundary decay", budget: secs(10), run: || suites::boundary_decay(&TREND_PRIMES) },
        Criterion { id: 3, name: "translate disjointness", budget: secs(1), run: || suites::disjointness(7) },
        Criterion { id: 4, name: "four conditions at p=7", budget: secs(120), run: || suites::run_suite("lemma36", &opts(0)) },
        Criterion { id: 5, name: "soficity at p=7", budget: secs(120), run: || suites::run_suite("soficity", &opts(1)) },
        Criterion { id: 6, name: "irreducible module", budget: secs(10), run: || suites::run_suite("monolith", &opts(0)) },
        Criterion { id: 7, name: "surjectivity at p=7", budget: secs(60), run: || suites::run_suite("surjectivity", &opts(0)) },
        Criterion { id: 8, name: "spectral dichotomy", budget: secs(300), run: || suites::spectral(0, &[7, 13]) },
        Criterion { id: 9, name: "branched covers", budget: secs(60), run: || suites::covers(42) },
        Criterion { id: 10, name: "induction", budget: secs(60), run: || suites::induction(0) },
        Criterion { id: 11, name: "partition recovery", budget: secs(180), run: || suites::run_suite("partition", &opts(0)) },
        Criterion { id: 12, name: "determinism", budget: secs(60), run: determinism },
    ]
}

fn main() -> ExitCode {
    let only: Option<u32> = std::env::args().skip(1).find_map(|a| a.parse().ok());
    let mut failed = 0;
    for c in criteria().into_iter().filter(|c| only.is_none_or(|o| o == c.id)) {
        let start = Instant::now();
        let result = (c.run)();
        let elapsed = start.elapsed();
        let within = elapsed <= c.budget;
        let (ok, note) = match &result {
            Ok(checks) => {
                let bad: Vec<String> = checks.iter().filter(|x| !x.pass).map(|x| x.line()).collect();
                (bad.is_empty(), if bad.is_empty() { format!("{} checks", checks.len()) } else { bad.join("; ") })
            }
            Err(e) => (false, format!("error: {e}")),
        };
        let pass = ok && within;
        if !pass {
            failed += 1;
        }
        println!(
            "{} criterion {:>2} {}: {} ({:.1} s of {} s)",
            if pass { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            note,
            elapsed.as_secs_f64(),
            c.budget.as_secs()
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
