//! The `soficlab` command line.
//!
//! Exit codes: 0 when every check passes, 1 on a failed check or a failed
//! construction, 2 on a usage error, 3 when a request exceeds the resource
//! budget.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::algebra::next_prime;
use crate::error::{Error, Result};
use crate::groups::{build_hom_specs, FiniteGroup, ReducedWord};
use crate::partition::{classify_candidates, rank_subgroups, Candidate, GtildeShape, LabeledPartition};
use crate::report::{Artifact, CheckResult, Parameters, RunReport};
use crate::sofic::{
    build_tilde_sigma, hom_defect, induce_approximation, sidecar_path, AsymptoticHom, CosetAction, HammingMode, PermutationRep,
    SchreierData,
};
use crate::suites::{self, Mode, SuiteOptions};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "soficlab", version, about = "Sofic approximations through A_p ⋊ PSL2(F_p): construction, checks and measurements")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(clap::Args, Debug, Clone)]
pub struct Common {
    #[arg(long, default_value_t = 7)]
    pub p: u32,
    #[arg(long, default_value_t = 5)]
    pub m: u32,
    #[arg(long, default_value_t = 3)]
    pub k: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 20_000)]
    pub samples: u64,
    #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
    pub mode: ModeArg,
    /// Output file (or directory for `build`); stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ModeArg {
    Exact,
    Sampled,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Exact => Mode::Exact,
            ModeArg::Sampled => Mode::Sampled,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Table {
    Boundary,
    Defect,
    Spectra,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write the homomorphisms and the generator permutations of σ_p and σ̃_p.
    Build {
        #[command(flatten)]
        common: Common,
    },
    /// Run a verification suite and emit a JSON report.
    Verify {
        /// One of: sets, monolith, surjectivity, lemma36, soficity, covers,
        /// induction, partition, spectral-small, spectral.
        suite: String,
        #[command(flatten)]
        common: Common,
    },
    /// Emit a trend table as CSV.
    Measure {
        #[arg(value_enum)]
        table: Table,
        /// Comma-separated primes.
        #[arg(long, value_delimiter = ',')]
        primes: Option<Vec<u32>>,
        /// Also write the checks as a JSON report.
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Classify a partition by the coset partitions it is closest to.
    Partition {
        /// Plant the coset partition of a candidate subgroup of G~_p:
        /// trivial, ek, ak, whole, ge or ae.
        #[arg(long, conflicts_with = "input")]
        planted: Option<String>,
        /// Labels in SPRT format.
        #[arg(long, requires = "group")]
        input: Option<PathBuf>,
        /// Group of the input partition: z<N> or s<k>.
        #[arg(long)]
        group: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Induce an approximation of a finite-index subgroup of F_2 up to F_2.
    Induce {
        /// JSON list of the two generator permutations on the cosets;
        /// defaults to an index-4 subgroup.
        #[arg(long)]
        action: Option<PathBuf>,
        /// Size of the random base approximation.
        #[arg(long, default_value_t = 24)]
        n: usize,
        #[command(flatten)]
        common: Common,
    },
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Build { common }
            | Command::Verify { common, .. }
            | Command::Measure { common, .. }
            | Command::Partition { common, .. }
            | Command::Induce { common, .. } => common,
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidArgument(_) | Error::ModulusMismatch { .. } | Error::OutOfRange { .. } => EXIT_USAGE,
        Error::Resource(_) | Error::Unsupported(_) => EXIT_RESOURCE,
        _ => EXIT_FAIL,
    }
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("SOFICLAB_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::InvalidArgument(format!("SOFICLAB_THREADS = {v:?} is not a positive integer")))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| Error::Resource(e.to_string()))?;
    }
    Ok(())
}

/// Parses the process arguments, runs the command and returns the exit code.
pub fn run() -> i32 {
    run_from(std::env::args_os())
}

pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return exit_code(&e);
    }
    let start = Instant::now();
    let result = execute(&cli.command);
    eprintln!("wall time: {:.2} s", start.elapsed().as_secs_f64());
    match result {
        Ok(report) => {
            if report.all_pass {
                EXIT_PASS
            } else {
                EXIT_FAIL
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn parameters(c: &Common, primes: Vec<u32>, with_p: bool) -> Parameters {
    let mode = match c.mode {
        ModeArg::Exact => "exact",
        ModeArg::Sampled => "sampled",
    };
    Parameters {
        p: with_p.then_some(c.p),
        m: c.m,
        k: c.k,
        r_p: with_p.then(|| next_prime(c.p as u64) as u32),
        seed: c.seed,
        samples: matches!(c.mode, ModeArg::Sampled).then_some(c.samples),
        mode: mode.into(),
        primes,
    }
}

fn options(c: &Common) -> SuiteOptions {
    SuiteOptions { p: c.p, m: c.m, k: c.k, seed: c.seed, samples: c.samples, mode: c.mode.into() }
}

fn print_checks(checks: &[CheckResult]) {
    for c in checks {
        eprintln!("{}", c.line());
    }
}

fn emit(report: &RunReport, out: Option<&Path>) -> Result<()> {
    let json = report.to_json()?;
    match out {
        Some(path) => std::fs::write(path, json + "\n")?,
        None => {
            let mut stdout = std::io::stdout().lock();
            writeln!(stdout, "{json}")?;
        }
    }
    Ok(())
}

pub fn execute(cmd: &Command) -> Result<RunReport> {
    let c = cmd.common();
    match cmd {
        Command::Build { .. } => {
            let dir = c.out.clone().unwrap_or_else(|| PathBuf::from("."));
            let report = build(c, &dir)?;
            print_checks(&report.checks);
            emit(&report, Some(&dir.join("report.json")))?;
            Ok(report)
        }
        Command::Verify { suite, .. } => {
            let checks = suites::run_suite(suite, &options(c))?;
            print_checks(&checks);
            let report = RunReport::new(&format!("verify {suite}"), parameters(c, vec![], true), checks);
            emit(&report, c.out.as_deref())?;
            Ok(report)
        }
        Command::Measure { table, primes, report, .. } => {
            let primes = primes.clone().unwrap_or_else(|| match table {
                Table::Boundary => suites::TREND_PRIMES.to_vec(),
                Table::Defect => vec![7],
                Table::Spectra => vec![7, 13],
            });
            let mut buf = Vec::new();
            let (name, checks) = match table {
                Table::Boundary => {
                    let (rows, checks) = suites::boundary_table(&primes)?;
                    suites::write_csv(&rows, &mut buf)?;
                    ("boundary", checks)
                }
                Table::Defect => {
                    let (rows, checks) = suites::defect_table(&primes, c.mode.into(), c.samples, c.seed)?;
                    suites::write_csv(&rows, &mut buf)?;
                    ("defect", checks)
                }
                Table::Spectra => {
                    let (rows, checks) = suites::spectra_table(&primes, c.seed)?;
                    crate::spectral::write_spectra_csv(&rows, &mut buf)?;
                    ("spectra", checks)
                }
            };
            match &c.out {
                Some(path) => std::fs::write(path, &buf)?,
                None => std::io::stdout().lock().write_all(&buf)?,
            }
            print_checks(&checks);
            let r = RunReport::new(&format!("measure {name}"), parameters(c, primes, false), checks);
            if let Some(path) = report {
                emit(&r, Some(path))?;
            }
            Ok(r)
        }
        Command::Partition { planted, input, group, .. } => {
            let checks = match (planted, input) {
                (Some(name), None) => partition_planted(c.p, name)?,
                (None, Some(path)) => partition_input(path, group.as_deref().unwrap_or_default())?,
                _ => return Err(Error::InvalidArgument("give either --planted <candidate> or --input <file> --group <group>".into())),
            };
            print_checks(&checks);
            let report = RunReport::new("partition", parameters(c, vec![], planted.is_some()), checks);
            emit(&report, c.out.as_deref())?;
            Ok(report)
        }
        Command::Induce { action, n, .. } => {
            let checks = induce(action.as_deref(), *n, c.seed, c.out.as_deref())?;
            print_checks(&checks);
            let report = RunReport::new("induce", parameters(c, vec![], false), checks);
            match &c.out {
                Some(dir) => emit(&report, Some(&dir.join("report.json")))?,
                None => emit(&report, None)?,
            }
            Ok(report)
        }
    }
}

fn write_generators(
    dir: &Path,
    prefix: &str,
    names: &[String],
    perms: &[&PermutationRep],
    meta: &serde_json::Value,
) -> Result<Vec<Artifact>> {
    let mut out = Vec::new();
    for (name, perm) in names.iter().zip(perms) {
        let path = dir.join(format!("{prefix}_{name}.sprm"));
        let mut sidecar = meta.clone();
        sidecar["generator"] = json!(name);
        perm.write_sprm(&path, &sidecar)?;
        out.push(Artifact::of(&path)?);
        out.push(Artifact::of(&sidecar_path(&path))?);
    }
    Ok(out)
}

fn build(c: &Common, dir: &Path) -> Result<RunReport> {
    let specs = build_hom_specs(c.p, c.m, c.k)?;
    std::fs::create_dir_all(dir)?;
    let mut artifacts = Vec::new();
    for spec in [
        &specs.phi,
        &specs.rho,
        &specs.psi,
        &specs.zeta,
        &specs.eta,
        &specs.phi_tilde,
        &specs.rho_tilde,
        &specs.xi,
        &specs.xi_lambda,
        &specs.psi_lambda,
    ] {
        let path = dir.join(format!("{}.json", spec.name));
        std::fs::write(&path, spec.to_json()? + "\n")?;
        artifacts.push(Artifact::of(&path)?);
    }
    let checks: Vec<CheckResult> =
        specs.checks.iter().map(|g| CheckResult::holds(&g.name, "generation hypotheses", g.passed).with_detail(g.detail.clone())).collect();

    let tilde = build_tilde_sigma(c.p, c.m, c.k)?;
    let sigma = &tilde.sigma;
    let left = &crate::groups::Source::Sigma.generator_names(c.m, c.k)[..];
    let right = &specs.rho.generator_names()[..];
    let meta = json!({ "p": c.p, "m": c.m, "k": c.k, "r_p": specs.r });
    let descriptor = if sigma.is_exact() {
        let hom = &sigma.hom;
        let lp: Vec<&PermutationRep> = (0..hom.left_rank()).map(|i| hom.left_image(i)).collect();
        let rp: Vec<&PermutationRep> = (0..hom.right_rank()).map(|j| hom.right_image(j)).collect();
        artifacts.extend(write_generators(dir, "sigma", left, &lp, &json!({ "domain": "G_p", "side": "left", "params": meta }))?);
        artifacts.extend(write_generators(dir, "sigma", right, &rp, &json!({ "domain": "G_p", "side": "right", "params": meta }))?);
        let kf = &tilde.approx.second;
        let lk: Vec<&PermutationRep> = (0..kf.left_rank()).map(|i| kf.left_image(i)).collect();
        let rk: Vec<&PermutationRep> = (0..kf.right_rank()).map(|j| kf.right_image(j)).collect();
        artifacts.extend(write_generators(dir, "sigma_tilde_k", left, &lk, &json!({ "domain": "K_p", "side": "left", "params": meta }))?);
        artifacts.extend(write_generators(dir, "sigma_tilde_k", right, &rk, &json!({ "domain": "K_p", "side": "right", "params": meta }))?);
        json!({
            "mode": "exact",
            "sigma": { "domain": "G_p", "size": crate::sofic::Approximation::domain_size(&sigma.hom).to_string(), "files": "sigma_<generator>.sprm" },
            "sigma_tilde": {
                "domain": "G_p x K_p",
                "index": "x * |K_p| + y",
                "first": "sigma_<generator>.sprm",
                "second": "sigma_tilde_k_<generator>.sprm",
            },
            "params": meta,
        })
    } else {
        json!({
            "mode": "implicit",
            "sigma": {
                "domain": "G_p",
                "size": crate::sofic::Approximation::domain_size(&sigma.hom).to_string(),
                "action": "left by phi(g), right by rho(h)^-1",
                "homspecs": ["phi.json", "rho.json"],
            },
            "sigma_tilde": {
                "domain": "G_p x K_p",
                "index": "x * |K_p| + y",
                "homspecs": ["phi_tilde.json", "rho_tilde.json"],
            },
            "params": meta,
        })
    };
    let path = dir.join("sigma.json");
    std::fs::write(&path, serde_json::to_string_pretty(&descriptor)? + "\n")?;
    artifacts.push(Artifact::of(&path)?);

    let mut report = RunReport::new("build", parameters(c, vec![], true), checks);
    report.artifacts = artifacts;
    Ok(report)
}

fn parse_candidate(name: &str) -> Result<Candidate> {
    let c = match name.to_ascii_lowercase().as_str() {
        "trivial" | "e" => Candidate::Trivial,
        "ek" => Candidate::EK,
        "ak" => Candidate::AK,
        "whole" | "g~" => Candidate::Whole,
        "ge" => Candidate::GE,
        "ae" => Candidate::AE,
        _ => return Err(Error::InvalidArgument(format!("unknown candidate {name:?}; expected trivial, ek, ak, whole, ge or ae"))),
    };
    Ok(c)
}

fn partition_planted(p: u32, name: &str) -> Result<Vec<CheckResult>> {
    let planted = parse_candidate(name)?;
    let shape = GtildeShape::new(p)?;
    let ranked = classify_candidates(&shape, &shape.coset_partition(planted)?)?;
    let mut out = vec![CheckResult::holds(
        &format!("best fit is {}", planted.name()),
        "candidate classification",
        ranked[0].subgroup == planted.name(),
    )];
    for h in &ranked {
        out.push(
            CheckResult::custom(&format!("residual of {}", h.subgroup), "candidate classification", h.residual, "rank", 0.0, true)
                .with_detail(format!("{} residual points; moreover {:.6}", h.residual_count, h.moreover)),
        );
    }
    Ok(out)
}

pub fn parse_group(spec: &str) -> Result<FiniteGroup> {
    let bad = || Error::InvalidArgument(format!("group {spec:?}: expected z<N> or s<k>"));
    let (kind, n) = spec.split_at(1.min(spec.len()));
    let n: usize = n.parse().map_err(|_| bad())?;
    match kind {
        "z" | "Z" if (1..=crate::groups::finite::MAX_TABLE_ORDER).contains(&n) => Ok(FiniteGroup::cyclic(n)),
        "s" | "S" => FiniteGroup::symmetric(n),
        _ => Err(bad()),
    }
}

fn partition_input(path: &Path, group: &str) -> Result<Vec<CheckResult>> {
    let g = parse_group(group)?;
    let part = LabeledPartition::read_sprt(path)?;
    if part.len() != g.order() as usize {
        return Err(Error::InvalidArgument(format!("partition has {} points but {group} has order {}", part.len(), g.order())));
    }
    let cands: Vec<(String, Vec<u64>, u64)> = g
        .all_subgroups()?
        .iter()
        .map(|s| {
            let name = format!("<{}>", s.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","));
            (name, g.left_coset_labels(s).into_iter().map(u64::from).collect(), s.len() as u64)
        })
        .collect();
    let ranked = rank_subgroups(&part, &cands)?;
    Ok(ranked
        .iter()
        .map(|h| {
            CheckResult::custom(
                &format!("residual of {} (order {})", h.subgroup, h.subgroup_order),
                "coset recovery",
                h.residual,
                "rank",
                0.0,
                true,
            )
            .with_detail(format!("{} residual points; moreover {:.6}", h.residual_count, h.moreover))
        })
        .collect())
}

fn induce(action: Option<&Path>, n: usize, seed: u64, out: Option<&Path>) -> Result<Vec<CheckResult>> {
    let perms: Vec<Vec<u32>> = match action {
        Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?)?,
        None => vec![vec![1, 2, 3, 0], vec![1, 0, 2, 3]],
    };
    let data = SchreierData::new(CosetAction::new(perms)?)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base: Vec<PermutationRep> = (0..data.subgroup_rank()).map(|_| PermutationRep::random(n, &mut rng)).collect();
    let basis: Vec<String> = data.basis().iter().map(|w| w.render(&["a".into(), "b".into()])).collect();
    let ind = induce_approximation(AsymptoticHom::new(base, vec![])?, data)?;

    let mut worst = 0.0f64;
    for _ in 0..100 {
        let g = ReducedWord::random(2, 8, &mut rng);
        let h = ReducedWord::random(2, 8, &mut rng);
        worst = worst.max(hom_defect(&ind, &g, &h, &HammingMode::Exact)?.value);
    }
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        for (gen, name) in ["a", "b"].iter().enumerate() {
            let w = ReducedWord::generator(gen as u16);
            let images = (0..crate::sofic::Approximation::domain_size(&ind))
                .map(|x| crate::sofic::Approximation::apply(&ind, &w, x) as u32)
                .collect();
            let perm = PermutationRep::from_images(images)?;
            perm.write_sprm(&dir.join(format!("induced_{name}.sprm")), &json!({ "generator": name, "basis": basis, "seed": seed }))?;
        }
    }
    Ok(vec![CheckResult::equals("defect of the induced homomorphism", "induced homomorphism", worst, 0.0).with_detail(format!(
        "index {}, fiber {n}, Schreier basis {}",
        ind.data.action().index(),
        basis.join(" ")
    ))])
}
