mod common;

use std::process::Command;

use corrbelief::dataset::pearson;
use corrbelief::metrics::KlDirection;
use corrbelief::CorrelationDataset;
use corrbelief_cli::commands::{cmd_densities, cmd_generate, cmd_score, cmd_simulate, read_bundle};
use corrbelief_cli::manifest::RunManifest;
use corrbelief_cli::CliError;
use serde_json::json;

use common::*;

#[test]
fn generate_default_batch() {
    let dir = tempfile::tempdir().unwrap();
    let m = cmd_generate(None, 4, dir.path()).unwrap();
    assert_eq!(m.outputs.len(), 10);
    assert!(m.complete);
    assert_eq!(RunManifest::read(dir.path()).unwrap(), m);
    for name in m.outputs.iter().filter(|n| n.ends_with(".json")) {
        let d: CorrelationDataset = serde_json::from_slice(&std::fs::read(dir.path().join(name)).unwrap()).unwrap();
        assert_eq!(pearson(d.points()).unwrap(), d.r_sample());
        assert_eq!(d.n(), 100);
        let csv = std::fs::read_to_string(dir.path().join(name.replace(".json", ".csv"))).unwrap();
        assert_eq!(csv, d.to_csv());
    }
    let again = tempfile::tempdir().unwrap();
    cmd_generate(None, 4, again.path()).unwrap();
    // Manifests name their own output dir; every other file must match exactly.
    let strip = |v: Vec<(String, Vec<u8>)>| v.into_iter().filter(|(n, _)| n != "manifest.json").collect::<Vec<_>>();
    assert_eq!(strip(read_dir_bytes(dir.path())), strip(read_dir_bytes(again.path())));
}

#[test]
fn generate_from_config_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_json(dir.path(), "gen.json", &json!({"datasets":[{"id":"strong","rho_pop":0.9,"n":100}]}));
    let out = dir.path().join("out");
    let m = cmd_generate(Some(&cfg), 1, &out).unwrap();
    assert_eq!(m.outputs, vec!["strong.csv", "strong.json"]);
    let d: CorrelationDataset = serde_json::from_slice(&std::fs::read(out.join("strong.json")).unwrap()).unwrap();
    assert!((d.r_sample() - 0.9).abs() < 0.06);

    let bad = write_json(dir.path(), "bad.json", &json!({"datasets":[{"id":"x","rho_pop":1.5,"n":100}]}));
    assert!(matches!(cmd_generate(Some(&bad), 1, &dir.path().join("o2")), Err(CliError::Config(_))));
    assert!(!dir.path().join("o2").exists());
    // A regular file where the output directory should go.
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    assert!(matches!(cmd_generate(None, 1, &blocker), Err(CliError::Runtime(_))));
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_corrbelief");
    let run = |args: &[&str]| Command::new(bin).args(args).output().unwrap().status.code().unwrap();
    let out = dir.path().join("ok");
    assert_eq!(run(&["generate", "--out", out.to_str().unwrap(), "--seed", "2"]), 0);
    assert_eq!(run(&["generate"]), 2);
    assert_eq!(run(&["frobnicate"]), 2);
    let bad = write_json(dir.path(), "bad.json", &json!({"datasets": 5}));
    assert_eq!(run(&["generate", "--config", bad.to_str().unwrap(), "--out", out.to_str().unwrap()]), 3);
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    assert_eq!(run(&["generate", "--out", blocker.to_str().unwrap()]), 1);
    let empty = write_json(dir.path(), "empty.json", &congruence_sim(0, json!({"kind":"BayesianAgent"})));
    assert_eq!(run(&["simulate", "--config", empty.to_str().unwrap(), "--out", dir.path().join("e").to_str().unwrap()]), 3);
}

#[test]
fn empty_fleet_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = congruence_sim(3, json!({"kind":"BayesianAgent"}));
    cfg["fleet"]["agents"] = json!([]);
    let p = write_json(dir.path(), "sim.json", &cfg);
    let out = dir.path().join("out");
    assert!(matches!(cmd_simulate(&p, 1, &out, 2), Err(CliError::Config(_))));
    assert!(!out.exists());
    let luce = write_json(dir.path(), "luce.json", &congruence_sim(3, json!({"kind":"LuceResponder"})));
    assert!(matches!(cmd_simulate(&luce, 1, &out, 2), Err(CliError::Config(_))));
}

#[test]
fn simulate_is_reproducible_across_job_counts() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_json(dir.path(), "sim.json", &fixed_sim(6, json!({"kind":"StubbornAgent","weight":0.5})));
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let m = cmd_simulate(&p, 9, &a, 1).unwrap();
    cmd_simulate(&p, 9, &b, 4).unwrap();
    let strip = |v: Vec<(String, Vec<u8>)>| v.into_iter().filter(|(n, _)| n != "manifest.json").collect::<Vec<_>>();
    assert_eq!(strip(read_dir_bytes(&a)), strip(read_dir_bytes(&b)));
    let s = m.summary.unwrap();
    assert_eq!((s.sessions, s.trials, s.excluded_sessions), (6, 60, 0));
    for f in ["bundle.json", "trials.csv", "scores.csv", "sessions.jsonl"] {
        assert!(m.outputs.contains(&f.to_string()));
    }
    let c = dir.path().join("c");
    cmd_simulate(&p, 10, &c, 1).unwrap();
    assert_ne!(std::fs::read(a.join("trials.csv")).unwrap(), std::fs::read(c.join("trials.csv")).unwrap());
}

#[test]
fn score_reproduces_sealed_scores() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_json(dir.path(), "sim.json", &congruence_sim(3, json!({"kind":"BayesianAgent"})));
    let sim = dir.path().join("sim");
    cmd_simulate(&p, 2, &sim, 2).unwrap();
    let out = dir.path().join("score");
    cmd_score(&sim, 2, &out, KlDirection::ElicitedPredicted, 2).unwrap();
    assert_eq!(std::fs::read(sim.join("scores.csv")).unwrap(), std::fs::read(out.join("scores.csv")).unwrap());
    let rev = dir.path().join("rev");
    cmd_score(&sim.join("bundle.json"), 2, &rev, KlDirection::PredictedElicited, 1).unwrap();
    assert_ne!(std::fs::read(out.join("scores.csv")).unwrap(), std::fs::read(rev.join("scores.csv")).unwrap());
}

#[test]
fn densities_shape_and_sealing() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_json(dir.path(), "sim.json", &fixed_sim(1, json!({"kind":"BayesianAgent"})));
    let sim = dir.path().join("sim");
    cmd_simulate(&p, 1, &sim, 1).unwrap();
    let out = dir.path().join("dens");
    let m = cmd_densities(&sim, 1, &out, false).unwrap();
    assert_eq!(m.outputs.len(), 2 * 10);
    let text = std::fs::read_to_string(out.join("p3_means.csv")).unwrap();
    assert!(text.starts_with("rho,pre_density,post_density\n"));
    assert_eq!(text.lines().count(), 202);
    let again = dir.path().join("dens2");
    cmd_densities(&sim, 1, &again, false).unwrap();
    assert_eq!(std::fs::read(out.join("p3_cis.csv")).unwrap(), std::fs::read(again.join("p3_cis.csv")).unwrap());

    // An export taken while a session is still open is refused.
    let mut bundle = read_bundle(&sim).unwrap();
    bundle.sealed = false;
    let open = dir.path().join("open.json");
    std::fs::write(&open, serde_json::to_string(&bundle).unwrap()).unwrap();
    assert!(matches!(cmd_densities(&open, 1, &dir.path().join("d3"), false), Err(CliError::Config(_))));
}

#[test]
fn strong_pair_posterior_density_peaks_at_the_sample_correlation() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_json(dir.path(), "sim.json", &fixed_sim(40, json!({"kind":"BayesianAgent"})));
    let sim = dir.path().join("sim");
    cmd_simulate(&p, 7, &sim, 2).unwrap();
    let out = dir.path().join("dens");
    cmd_densities(&sim, 7, &out, false).unwrap();
    let rows = read_bundle(&sim).unwrap().rows().unwrap();
    for pair in ["p4", "p9"] {
        let r = rows.iter().find(|r| r.pair_id == pair).unwrap().r_sample.unwrap();
        assert!(r > 0.85);
        let mut rdr = csv::Reader::from_path(out.join(format!("{pair}_means.csv"))).unwrap();
        let (mode, _) = rdr
            .records()
            .map(|rec| {
                let rec = rec.unwrap();
                (rec[0].parse::<f64>().unwrap(), rec[2].parse::<f64>().unwrap())
            })
            .fold((0.0, f64::MIN), |best, x| if x.1 > best.1 { x } else { best });
        assert!((mode - r).abs() <= 0.05, "{pair}: mode {mode} vs r {r}");
    }
}

#[test]
fn luce_fleet_runs_the_comparison_study() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_json(dir.path(), "sim.json", &comparison_sim(4));
    let sim = dir.path().join("sim");
    let m = cmd_simulate(&p, 3, &sim, 2).unwrap();
    assert_eq!(m.summary.unwrap().excluded_sessions, 0);
    let rows = read_bundle(&sim).unwrap().rows().unwrap();
    let chains: Vec<_> = rows.iter().filter(|r| r.kind == "choice").collect();
    assert_eq!(chains.len(), 12);
    assert!(chains.iter().all(|r| r.chain_mean.is_some() && r.chain_ci_lower < r.chain_ci_upper));
}
