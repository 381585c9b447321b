//! Run directories, resumption, reproducibility and the command line.

use std::path::{Path, PathBuf};
use std::process::Command;

use kaclab_lab::config::{parse_config, validate_config};
use kaclab_lab::experiment::run_to_dir;
use kaclab_lab::manifest::{RunManifest, RunStatus};

const SMALL: &str = r#"
kind = "equilibration"
name = "small"
seed = 99
n = [8, 12]
replicas = 16
dim = 3
grid = [0.0, 0.5, 1.0]

[init]
kind = "conditioned"
density = "bimodal"
burn_per_particle = 20

[metrics]
j = 1
rounds = 2
"#;

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/configs")
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_kaclab"))
}

fn result_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let m = RunManifest::read(dir).unwrap();
    m.results.iter().map(|f| (f.clone(), std::fs::read(dir.join(f)).unwrap())).collect()
}

#[test]
fn every_sample_config_is_valid() {
    let mut kinds = Vec::new();
    for entry in std::fs::read_dir(configs_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let cfg = validate_config(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            kinds.push(cfg.kind);
        }
    }
    for k in kaclab_lab::ExperimentKind::ALL {
        assert!(kinds.contains(&k), "no sample config for {}", k.name());
    }
}

#[test]
fn validation_errors_name_the_field() {
    let e = parse_config(&SMALL.replace("seed = 99\n", "")).unwrap_err();
    assert!(e.0.iter().any(|e| e.field == "seed"), "{e}");

    let hs = SMALL
        .replace("kind = \"equilibration\"", "kind = \"chaos_propagation\"")
        .replace("[init]", "[kernel]\nkind = \"hard_spheres\"\n\n[init]")
        .replace("density = \"bimodal\"", "density = \"gaussian\"\nmean = [0.3, 0.0, 0.0]")
        .replace("kind = \"conditioned\"", "kind = \"product\"");
    let e = parse_config(&hs).unwrap_err();
    assert!(e.0.iter().any(|e| e.field == "init.mean" && e.message.contains("centered")), "{e}");
}

#[test]
fn reruns_are_byte_identical() {
    let cfg = parse_config(SMALL).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    run_to_dir(&cfg, SMALL, &a).unwrap();
    run_to_dir(&cfg, SMALL, &b).unwrap();
    let (ra, rb) = (result_bytes(&a), result_bytes(&b));
    assert!(ra.len() >= 6);
    assert_eq!(ra, rb);
    assert_eq!(std::fs::read(a.join("manifest.json")).unwrap(), std::fs::read(b.join("manifest.json")).unwrap());
}

#[test]
fn interrupted_runs_resume_to_the_same_results() {
    let cfg = parse_config(SMALL).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let (full, partial) = (tmp.path().join("full"), tmp.path().join("partial"));
    run_to_dir(&cfg, SMALL, &full).unwrap();
    run_to_dir(&cfg, SMALL, &partial).unwrap();

    // Simulate a crash: half the replicas of one N lost, a torn record,
    // no outputs for the other N, and an unfinished manifest.
    let reps = partial.join("replicas/n00008");
    for r in (0..16).step_by(2) {
        std::fs::remove_file(reps.join(format!("r{r:05}.json"))).unwrap();
    }
    std::fs::write(reps.join("r00001.bin"), b"torn").unwrap();
    std::fs::remove_dir_all(partial.join("replicas/n00012")).unwrap();
    std::fs::remove_file(partial.join("summary.json")).unwrap();
    let mut m = RunManifest::read(&partial).unwrap();
    m.status = RunStatus::Running;
    m.write(&partial).unwrap();

    let (m, _) = run_to_dir(&cfg, SMALL, &partial).unwrap();
    assert_eq!(m.status, RunStatus::Complete);
    assert_eq!(result_bytes(&full), result_bytes(&partial));
}

#[test]
fn results_reference_the_manifest() {
    let cfg = parse_config(SMALL).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let (m, _) = run_to_dir(&cfg, SMALL, tmp.path()).unwrap();
    assert_eq!(m.seeds.len(), 2);
    assert_eq!(m.seeds[0].replica_seeds.len(), 16);
    assert_eq!(m.config, SMALL);
    for f in &m.results {
        let text = std::fs::read_to_string(tmp.path().join(f)).unwrap();
        if f.ends_with(".csv") || f.ends_with(".json") {
            assert!(text.contains(&m.config_sha256), "{f} does not reference the manifest");
        }
    }
}

#[test]
fn different_config_in_same_directory_is_refused() {
    let cfg = parse_config(SMALL).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    run_to_dir(&cfg, SMALL, tmp.path()).unwrap();
    let other = SMALL.replace("seed = 99", "seed = 100");
    let e = run_to_dir(&parse_config(&other).unwrap(), &other, tmp.path()).unwrap_err();
    assert_eq!(e.exit_code(), 2);
}

#[test]
fn cli_exit_codes_and_worker_independence() {
    let tmp = tempfile::tempdir().unwrap();
    let good = tmp.path().join("good.toml");
    std::fs::write(&good, SMALL).unwrap();
    let bad = tmp.path().join("bad.toml");
    std::fs::write(&bad, SMALL.replace("replicas = 16", "replicas = 1")).unwrap();

    assert_eq!(bin().arg("validate").arg(&good).status().unwrap().code(), Some(0));
    let out = bin().arg("validate").arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("replicas"));
    assert_eq!(bin().args(["report", "/nonexistent/run"]).status().unwrap().code(), Some(2));

    let (one, two) = (tmp.path().join("w1"), tmp.path().join("w2"));
    for (dir, workers) in [(&one, "1"), (&two, "2")] {
        let st = bin().env("KACLAB_WORKERS", workers).arg("run").arg(&good).arg("--out").arg(dir).status().unwrap();
        assert_eq!(st.code(), Some(0));
    }
    assert_eq!(result_bytes(&one), result_bytes(&two));
    let replay = bin().arg("replay").arg(one.join("manifest.json")).output().unwrap();
    assert_eq!(replay.status.code(), Some(0), "{}", String::from_utf8_lossy(&replay.stderr));
    assert_eq!(bin().arg("report").arg(&one).status().unwrap().code(), Some(0));
}
