//! Pipeline and CLI contract tests: stage sequencing, manifest-based skips,
//! seed propagation, the output-root environment override and process exit
//! codes. CLI behavior is exercised through the compiled binary so the
//! contracts hold for real invocations, not just library calls.

use std::path::Path;
use std::process::Command;

use revunc::fixture::{generate, FixtureOptions};
use revunc::pipeline::{run_stage, RunConfig, Stage, OUTPUT_ROOT_ENV};

fn binary() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_revunc"));
    // Never let the test runner's environment leak into spawned runs.
    cmd.env_remove(OUTPUT_ROOT_ENV);
    cmd.env("RUST_LOG", "warn");
    cmd
}

fn small_fixture(dir: &Path) {
    let opts = FixtureOptions {
        n_quarters: 52,
        iterations: 400,
        burn_in: 150,
        ..Default::default()
    };
    generate(dir, &opts).unwrap();
}

fn exit_code(cmd: &mut Command) -> i32 {
    let out = cmd.output().expect("binary runs");
    out.status.code().expect("exit code present")
}

#[test]
fn missing_config_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let code = exit_code(
        binary().args(["run", "--config"]).arg(dir.path().join("does-not-exist.toml")),
    );
    assert_eq!(code, 4, "a missing config file is a missing artifact");
}

#[test]
fn unknown_stage_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    small_fixture(dir.path());
    let code = exit_code(
        binary()
            .args(["run", "--stage", "frobnicate", "--config"])
            .arg(dir.path().join("revunc.toml")),
    );
    assert_eq!(code, 2, "an unknown stage name is an input error");
}

#[test]
fn usage_error_exits_2() {
    let code = exit_code(binary().args(["run", "--config"]));
    assert_eq!(code, 2, "clap usage errors map onto the input-error code");
}

#[test]
fn invalid_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    small_fixture(dir.path());
    let path = dir.path().join("revunc.toml");
    let toml = std::fs::read_to_string(&path).unwrap();
    assert!(toml.contains("burn_in = 150"), "fixture config changed shape");
    std::fs::write(&path, toml.replace("burn_in = 150", "burn_in = 900")).unwrap();
    let code = exit_code(binary().args(["ingest", "--config"]).arg(&path));
    assert_eq!(code, 2, "burn-in beyond the chain length must be rejected");
}

#[test]
fn missing_upstream_artifact_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    small_fixture(dir.path());
    let code = exit_code(binary().args(["index", "--config"]).arg(dir.path().join("revunc.toml")));
    assert_eq!(code, 4, "index before estimate must report the missing draws");
}

#[test]
fn output_root_env_redirects_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    small_fixture(dir.path());
    let redirect = dir.path().join("elsewhere");
    let code = exit_code(
        binary()
            .args(["ingest", "--config"])
            .arg(dir.path().join("revunc.toml"))
            .env(OUTPUT_ROOT_ENV, &redirect),
    );
    assert_eq!(code, 0);
    assert!(
        redirect.join("ingest").join("manifest.json").exists(),
        "artifacts must land under the override root"
    );
    assert!(
        !dir.path().join("out").exists(),
        "the configured root must stay untouched when the override is set"
    );
}

#[test]
fn rerun_skips_completed_stage_until_forced() {
    let dir = tempfile::tempdir().unwrap();
    small_fixture(dir.path());
    let mut cfg = RunConfig::load(&dir.path().join("revunc.toml")).unwrap();
    cfg.run.output_root = dir.path().join("out").to_string_lossy().into_owned();
    run_stage(&cfg, Stage::Ingest, false).unwrap();

    // Tamper with one output; an up-to-date stage must not rewrite it.
    let panel = dir.path().join("out").join("ingest").join("ALP_panel.csv");
    let original = std::fs::read(&panel).unwrap();
    let mut tampered = original.clone();
    tampered.extend_from_slice(b"#sentinel\n");
    std::fs::write(&panel, &tampered).unwrap();

    run_stage(&cfg, Stage::Ingest, false).unwrap();
    assert_eq!(
        std::fs::read(&panel).unwrap(),
        tampered,
        "a manifest-complete stage must be skipped on rerun"
    );

    run_stage(&cfg, Stage::Ingest, true).unwrap();
    assert_eq!(
        std::fs::read(&panel).unwrap(),
        original,
        "a forced rerun must rebuild the canonical artifact"
    );
}

#[test]
fn config_change_invalidates_stage_and_seed_reaches_draws() {
    let dir = tempfile::tempdir().unwrap();
    small_fixture(dir.path());
    let mut cfg = RunConfig::load(&dir.path().join("revunc.toml")).unwrap();
    cfg.run.output_root = dir.path().join("out").to_string_lossy().into_owned();
    cfg.data.countries = vec!["ALP".to_string()];
    run_stage(&cfg, Stage::Ingest, false).unwrap();
    run_stage(&cfg, Stage::Estimate, false).unwrap();
    let truth = dir.path().join("out").join("estimate").join("ALP").join("draws").join("truth.csv");
    let first = std::fs::read(&truth).unwrap();

    // A different seed must invalidate the manifest hash (no --force needed)
    // and must actually change the posterior draws.
    cfg.run.seed += 1;
    run_stage(&cfg, Stage::Estimate, false).unwrap();
    let second = std::fs::read(&truth).unwrap();
    assert_ne!(first, second, "the base seed must propagate into the sampler");
}

#[test]
fn full_cli_run_produces_report_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let code = exit_code(
        binary()
            .args(["fixture", "--quarters", "48", "--seed", "7", "--dir"])
            .arg(dir.path()),
    );
    assert_eq!(code, 0);
    let code =
        exit_code(binary().args(["run", "--config"]).arg(dir.path().join("revunc.toml")));
    assert_eq!(code, 0);
    for rel in [
        "ingest/ALP_panel.csv",
        "ingest/ALP_revision_stats.csv",
        "estimate/BOR/draws/truth.csv",
        "index/CIM_index.csv",
        "var/panel_irf.csv",
        "global/global_index.csv",
        "report/global_index.svg",
        "report/revisions.svg",
    ] {
        assert!(
            dir.path().join("out").join(rel).exists(),
            "expected artifact {rel} after a full run"
        );
    }

    // A second invocation must skip every stage yet still exit cleanly.
    let code =
        exit_code(binary().args(["run", "--config"]).arg(dir.path().join("revunc.toml")));
    assert_eq!(code, 0);
}
