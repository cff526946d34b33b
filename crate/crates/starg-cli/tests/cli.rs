//! End-to-end tests of the `starg` binary: exit codes, report artifacts,
//! determinism, and the file-based algebra operations.

use serde_json::Value;
use starg::{build_group, identity_tensor, GTensor, GroupSpec};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::Arc;

/// Scratch directory removed on drop.
struct Scratch(PathBuf);

impl Scratch {
    fn new(tag: &str) -> Scratch {
        let dir = std::env::temp_dir().join(format!(
            "starg-cli-{tag}-{}-{:?}",
            std::process::id(),
            std::thread::current().id()
        ));
        std::fs::create_dir_all(&dir).expect("create scratch dir");
        Scratch(dir)
    }

    fn path(&self, name: &str) -> PathBuf {
        self.0.join(name)
    }
}

impl Drop for Scratch {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.0);
    }
}

fn starg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_starg"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn random_tensor(rows: usize, cols: usize, spec: &GroupSpec, seed: u64) -> GTensor {
    use rand::{Rng, SeedableRng};
    let group = Arc::new(build_group(spec).unwrap());
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    GTensor::from_fn(rows, cols, group, |_, _, _| rng.gen_range(-1.0..1.0))
}

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../starg/testdata")
        .join(name)
        .display()
        .to_string()
}

#[test]
fn verify_reports_the_octahedral_dimension_formula() {
    let out = starg(&["verify", "--group", "O"]);
    assert_eq!(exit_code(&out), 0);
    let report = stdout_json(&out);
    assert_eq!(report["schema"], 1);
    assert_eq!(report["order"], 24);
    assert_eq!(report["irreps"]["dim_sum_sq"], 24);
    assert_eq!(report["pass"], true);

    let dumped = starg(&["verify", "--group", "O", "--dump-irreps"]);
    assert_eq!(exit_code(&dumped), 0);
    let full = stdout_json(&dumped);
    assert!(full["irrep_table"].is_object(), "dump includes the table");
}

#[test]
fn multiplying_by_the_identity_preserves_the_operand() {
    let scratch = Scratch::new("mulid");
    let spec: GroupSpec = "Z6".parse().unwrap();
    let x = random_tensor(3, 3, &spec, 5);
    let id = identity_tensor(3, &x.group);
    id.write_json_file(&scratch.path("id.json")).unwrap();
    x.write_json_file(&scratch.path("x.json")).unwrap();

    let out = starg(&[
        "multiply",
        "--a",
        scratch.path("id.json").to_str().unwrap(),
        "--b",
        scratch.path("x.json").to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0);
    let product = GTensor::from_json_str(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(product.data.len(), x.data.len());
    for (a, b) in product.data.iter().zip(x.data.iter()) {
        assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
    }
}

#[test]
fn multiplying_tensors_over_different_groups_is_rejected() {
    let scratch = Scratch::new("mulbad");
    random_tensor(2, 2, &"Z4".parse().unwrap(), 1)
        .write_json_file(&scratch.path("a.json"))
        .unwrap();
    random_tensor(2, 2, &"Z6".parse().unwrap(), 2)
        .write_json_file(&scratch.path("b.json"))
        .unwrap();
    let out = starg(&[
        "multiply",
        "--a",
        scratch.path("a.json").to_str().unwrap(),
        "--b",
        scratch.path("b.json").to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 1);
}

#[test]
fn transposing_twice_round_trips_bitwise() {
    let scratch = Scratch::new("transp");
    let x = random_tensor(2, 4, &"D4".parse().unwrap(), 9);
    x.write_json_file(&scratch.path("x.json")).unwrap();
    let first = starg(&[
        "transpose",
        "--input",
        scratch.path("x.json").to_str().unwrap(),
        "--output",
        scratch.path("xt.json").to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&first), 0);
    let second = starg(&[
        "transpose",
        "--input",
        scratch.path("xt.json").to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&second), 0);
    let xt = GTensor::read_json_file(&scratch.path("xt.json")).unwrap();
    assert_eq!(xt.rows, 4, "single transpose swaps the dims");
    assert_eq!(xt.cols, 2);
    // The transpose only permutes entries, so a double application is exact.
    let back = GTensor::from_json_str(&String::from_utf8(second.stdout).unwrap()).unwrap();
    assert_eq!(back.rows, 2);
    assert_eq!(back.cols, 4);
    assert_eq!(back.data, x.data);
}

#[test]
fn svd_reports_a_consistent_spectrum_and_truncation() {
    let scratch = Scratch::new("svd");
    let x = random_tensor(3, 3, &"Z4".parse().unwrap(), 31);
    x.write_json_file(&scratch.path("x.json")).unwrap();
    let out = starg(&[
        "svd",
        "--input",
        scratch.path("x.json").to_str().unwrap(),
        "--rank",
        "1",
        "--out",
        scratch.path("out").to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0);
    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(scratch.path("out/svd_report.json")).unwrap())
            .unwrap();
    let norms: Vec<f64> = report["tube_norms"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert_eq!(norms.len(), 3);
    assert!(norms.windows(2).all(|w| w[0] >= w[1]), "tube norms ordered");
    let closed_form = norms[1..].iter().map(|s| s * s).sum::<f64>().sqrt();
    let reported = report["truncation_error"].as_f64().unwrap();
    assert!((reported - closed_form).abs() <= 1e-9 * closed_form.max(1.0));

    let spectra = std::fs::read_to_string(scratch.path("out/svd_spectra.csv")).unwrap();
    assert!(spectra.starts_with("irrep,index,sigma\n"));
    let truncated = GTensor::read_json_file(&scratch.path("out/svd_rank1.json")).unwrap();
    assert_eq!(truncated.rows, 3);
    assert_eq!(truncated.cols, 3);
}

#[test]
fn synth_reports_are_deterministic_apart_from_wall_clock() {
    let scratch = Scratch::new("synthdet");
    for dir in ["a", "b"] {
        let out = starg(&[
            "synth",
            "--samples",
            "60",
            "--group",
            "Z5",
            "--seeds",
            "1,2",
            "--out",
            scratch.path(dir).to_str().unwrap(),
        ]);
        assert_eq!(exit_code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    }
    let csv_a = std::fs::read(scratch.path("a/synth_seeds.csv")).unwrap();
    let csv_b = std::fs::read(scratch.path("b/synth_seeds.csv")).unwrap();
    assert_eq!(csv_a, csv_b, "CSV artifacts are byte-identical");

    let strip = |dir: &str| -> Value {
        let text = std::fs::read_to_string(scratch.path(&format!("{dir}/synth_report.json"))).unwrap();
        let mut v: Value = serde_json::from_str(&text).unwrap();
        v.as_object_mut().unwrap().remove("wall_ms");
        v
    };
    assert_eq!(strip("a"), strip("b"), "reports identical modulo wall clock");
}

#[test]
fn synth_accepts_a_config_file_and_flags_override_it() {
    let scratch = Scratch::new("synthcfg");
    let cfg = scratch.path("cfg.json");
    std::fs::write(
        &cfg,
        format!(
            r#"{{"group": "Z5", "seeds": [1], "samples": 60, "out": {:?}}}"#,
            scratch.path("from-config").to_str().unwrap()
        ),
    )
    .unwrap();
    let out = starg(&["synth", "--config", cfg.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(scratch.path("from-config/synth_report.json").exists());

    // An explicit flag wins over the config value.
    let out = starg(&[
        "synth",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        scratch.path("from-flag").to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0);
    assert!(scratch.path("from-flag/synth_report.json").exists());
}

#[test]
fn unknown_config_keys_are_rejected() {
    let scratch = Scratch::new("badcfg");
    let cfg = scratch.path("cfg.json");
    std::fs::write(&cfg, r#"{"samples": 60, "typo_key": 1}"#).unwrap();
    let out = starg(&["synth", "--config", cfg.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("typo_key"));
}

#[test]
fn synth_requires_a_cyclic_group() {
    let out = starg(&["synth", "--samples", "60", "--group", "D4"]);
    assert_eq!(exit_code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("cyclic"));
}

#[test]
fn usage_errors_exit_sixty_four() {
    assert_eq!(exit_code(&starg(&["bogus-command"])), 64);
    assert_eq!(exit_code(&starg(&["synth", "--samples", "not-a-number"])), 64);
    assert_eq!(exit_code(&starg(&["svd"])), 64, "missing required flag");
    assert_eq!(exit_code(&starg(&["--help"])), 0, "help is not an error");
}

#[test]
fn thread_cap_env_var_is_validated() {
    let bad = Command::new(env!("CARGO_BIN_EXE_starg"))
        .args(["verify", "--group", "Z4"])
        .env("STARG_THREADS", "zero?")
        .output()
        .unwrap();
    assert_eq!(bad.status.code().unwrap(), 1);
    let good = Command::new(env!("CARGO_BIN_EXE_starg"))
        .args(["verify", "--group", "Z4"])
        .env("STARG_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(good.status.code().unwrap(), 0);
}

#[test]
fn product_emits_all_four_readings_and_the_frequency_map() {
    let scratch = Scratch::new("product");
    let out = starg(&[
        "product",
        "--samples",
        "60",
        "--seeds",
        "1",
        "--out",
        scratch.path("out").to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(scratch.path("out/product_report.json")).unwrap())
            .unwrap();
    let readings: Vec<&str> = report["readings"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["reading"].as_str().unwrap())
        .collect();
    assert_eq!(readings, ["Z6xZ4", "Z24", "Z6", "Z4"]);
    let map = std::fs::read_to_string(scratch.path("out/product_frequency_map.csv")).unwrap();
    assert_eq!(map.lines().count(), 1 + 24, "header plus one row per cell");
    assert!(map.starts_with("f1,f2,mean_power,corr_target\n"));
}

#[test]
fn discover_ranks_explicit_candidates() {
    let scratch = Scratch::new("discover");
    let out = starg(&[
        "discover",
        "--samples",
        "60",
        "--seeds",
        "1",
        "--candidates",
        "Z24,Z3xZ8",
        "--out",
        scratch.path("out").to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(scratch.path("out/discover_ranked.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3, "header plus two candidates");
    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(scratch.path("out/discover_report.json")).unwrap())
            .unwrap();
    assert_eq!(report["candidates"].as_array().unwrap().len(), 2);
}

#[test]
fn irrep_emits_the_heatmap_and_channel_ratios() {
    let scratch = Scratch::new("irrep");
    let out = starg(&[
        "irrep",
        "--samples",
        "40",
        "--seeds",
        "1",
        "--out",
        scratch.path("out").to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let heatmap = std::fs::read_to_string(scratch.path("out/irrep_heatmap.csv")).unwrap();
    assert!(heatmap.starts_with("target,A1,A2,E,T1,T2\n"));
    assert_eq!(heatmap.lines().count(), 1 + 5, "header plus five targets");
    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(scratch.path("out/irrep_report.json")).unwrap())
            .unwrap();
    for target in ["scalar", "v_x", "v_y", "v_z", "v_norm"] {
        assert!(report["argmax"][target].is_string(), "argmax for {target}");
    }
}

#[test]
fn parse_xyz_reports_atoms_and_dipole() {
    let out = starg(&["parse-xyz", &fixture("gdb_000001.xyz"), &fixture("plain_benzene.xyz")]);
    assert_eq!(exit_code(&out), 0);
    let report = stdout_json(&out);
    let mols = report["molecules"].as_array().unwrap();
    assert_eq!(mols.len(), 2);
    assert_eq!(mols[0]["atoms"], 5);
    assert_eq!(mols[0]["has_charges"], true);
    assert!(mols[0]["dipole"].is_array());
    assert!(mols[0]["properties"]["values"]["gap"].is_number());
    assert_eq!(mols[1]["has_charges"], false);
    assert!(mols[1]["dipole"].is_null());

    let missing = starg(&["parse-xyz", "/nonexistent/file.xyz"]);
    assert_eq!(exit_code(&missing), 1);
}
