use std::process::{Command, Output};

use soficlab::partition::LabeledPartition;
use soficlab::report::RunReport;

fn soficlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_soficlab")).args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn build_writes_specs_permutations_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = soficlab(&["build", "--p", "7", "--m", "5", "--k", "3", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    for f in ["phi.json", "rho.json", "eta.json", "sigma.json", "sigma_t.sprm", "sigma_b3.sprm", "sigma_tilde_k_a1.sprm"] {
        assert!(dir.path().join(f).exists(), "missing {f}");
    }
    let report = RunReport::from_json(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert!(report.all_pass);
    assert!(report.artifacts.iter().any(|a| a.file == "sigma_t.sprm" && a.sha256.len() == 64));
}

#[test]
fn build_rejects_bad_parameters() {
    let bad_p = soficlab(&["build", "--p", "4"]);
    assert_eq!(bad_p.status.code(), Some(2));
    assert!(stderr(&bad_p).contains("p not prime ≡ 1 mod 3"));
    let bad_m = soficlab(&["build", "--p", "7", "--m", "4"]);
    assert_eq!(bad_m.status.code(), Some(2));
    assert!(stderr(&bad_m).contains("m ≥ 5"));
}

#[test]
fn verify_covers_passes_and_reports_json() {
    let out = soficlab(&["verify", "covers", "--seed", "42"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report = RunReport::from_json(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(report.command, "verify covers");
    assert!(report.all_pass && !report.checks.is_empty());
}

#[test]
fn verify_is_deterministic() {
    let a = soficlab(&["verify", "induction", "--seed", "3"]);
    let b = soficlab(&["verify", "induction", "--seed", "3"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn usage_and_resource_exit_codes() {
    assert_eq!(soficlab(&["verify", "nonsense"]).status.code(), Some(2));
    assert_eq!(soficlab(&["frobnicate"]).status.code(), Some(2));
    let refused = soficlab(&["verify", "lemma36", "--p", "13"]);
    assert_eq!(refused.status.code(), Some(3));
    assert!(stderr(&refused).contains("--mode sampled"));
    let threads = Command::new(env!("CARGO_BIN_EXE_soficlab")).args(["verify", "sets"]).env("SOFICLAB_THREADS", "zero").output().unwrap();
    assert_eq!(threads.status.code(), Some(2));
}

#[test]
fn measure_boundary_emits_csv() {
    let out = soficlab(&["measure", "boundary", "--primes", "7,13,19"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("p,symmetric_difference,ratio"));
    assert_eq!(lines.count(), 3);
}

#[test]
fn measure_defect_cross_checks_modes() {
    let out = soficlab(&["measure", "defect", "--primes", "7", "--mode", "sampled", "--samples", "4000", "--seed", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stderr(&out).contains("PASS exact vs sampled at p=7"));
    assert_eq!(soficlab(&["measure", "defect", "--primes", "13"]).status.code(), Some(3));
}

#[test]
fn partition_reads_sprt_input() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("z12.sprt");
    LabeledPartition::new((0..12).map(|x| x % 4).collect()).unwrap().write_sprt(&path, &serde_json::json!({})).unwrap();
    let out = soficlab(&["partition", "--input", path.to_str().unwrap(), "--group", "z12"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report = RunReport::from_json(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(report.checks[0].value, 0.0);
    assert!(report.checks[0].name.contains("order 3"));
    assert!(report.checks[1].value > 0.0);
}

#[test]
fn partition_planted_and_induce() {
    let out = soficlab(&["partition", "--planted", "ge"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let dir = tempfile::tempdir().unwrap();
    let out = soficlab(&["induce", "--n", "10", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(dir.path().join("induced_a.sprm").exists());
}
