//! End-to-end CLI behavior: exit codes, report columns, cross-variant
//! output invariance.

use std::path::Path;
use std::process::{Command, Output};

use convsim_core::FeatureMap;

fn convsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_convsim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(path: &Path, contents: &str) {
    std::fs::write(path, contents).unwrap();
}

const LAYER_CONFIG: &str = r#"
[input]
channels = 3
height = 9
width = 9

[layer]
kernels = 4
kernel_size = 3
stride = 1
"#;

#[test]
fn stride_zero_is_a_validation_error_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("layer.toml");
    write(&cfg, &LAYER_CONFIG.replace("stride = 1", "stride = 0"));
    let out = convsim(&["layer", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("layer.stride"), "stderr: {stderr}");
}

#[test]
fn malformed_toml_reports_line_and_column() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    write(&cfg, "clock_mhz = [1,\n");
    let out = convsim(&["network", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("line 1"), "stderr: {stderr}");
}

#[test]
fn missing_config_file_is_an_io_error() {
    let out = convsim(&["network", "--config", "/nonexistent/cfg.toml"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn missing_weights_tensor_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("layer.toml");
    write(
        &cfg,
        r#"
[input]
channels = 1
height = 5
width = 5

[layer]
kernels = 2
kernel_size = 3
[layer.weights]
kind = "file"
path = "missing.ct16"
"#,
    );
    let out = convsim(&["layer", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn kernel_larger_than_input_is_a_named_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("layer.toml");
    write(&cfg, &LAYER_CONFIG.replace("height = 9", "height = 2"));
    let out = convsim(&["layer", "--config", cfg.to_str().unwrap()]);
    // Geometry is checked while chaining shapes, so the field is named.
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("does not fit"), "stderr: {stderr}");
    assert!(stderr.contains("layer"), "stderr: {stderr}");
}

#[test]
fn tree_compare_emits_known_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = convsim(&[
        "tree",
        "--eta-min",
        "2",
        "--eta-max",
        "16",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let costs = std::fs::read_to_string(out_dir.join("tree_costs.csv")).unwrap();
    assert_eq!(
        costs.lines().next().unwrap(),
        "eta,variant,adders,registers,cycles"
    );
    assert!(costs.contains("9,classic,15,31,4"));
    assert!(costs.contains("9,improved,8,20,4"));
    let compare = std::fs::read_to_string(out_dir.join("tree_compare.csv")).unwrap();
    assert!(compare.contains("2,1,3,1,1,3,1,0.00,0.00"));
    assert!(compare.contains("9,15,31,4,8,20,4,46.67,35.48"));
}

#[test]
fn tree_dump_writes_the_schedule() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = convsim(&[
        "tree",
        "--dump",
        "--eta",
        "9",
        "--variant",
        "improved",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("layer 1: add(0,1) add(2,3) add(4,5) add(6,7) pass(8)"));
    let file = std::fs::read_to_string(out_dir.join("schedule_improved_9.txt")).unwrap();
    assert_eq!(file, stdout);
}

#[test]
fn trace_csv_matches_the_timing_contract() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = convsim(&[
        "trace",
        "--height",
        "5",
        "--width",
        "5",
        "--kernel",
        "3",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(out_dir.join("trace.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "cycle,window_ordinal,valid,anchor_row,anchor_col");
    assert_eq!(lines.len(), 26); // header + 25 cycles
    assert_eq!(lines[13], "13,1,1,1,1"); // first valid window
    assert_eq!(lines[25], "25,9,1,3,3"); // last window at cycle H*W
    let valid = lines[1..]
        .iter()
        .filter(|l| l.split(',').nth(2) == Some("1"))
        .count();
    assert_eq!(valid, 9);
}

#[test]
fn layer_outputs_are_invariant_across_engine_configs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("layer.toml");
    write(&cfg, LAYER_CONFIG);
    let mut tensors: Vec<Vec<u8>> = Vec::new();
    let mut reports: Vec<String> = Vec::new();
    for (label, extra) in [
        ("classic", vec!["--variant", "classic"]),
        ("improved", vec!["--variant", "improved"]),
        ("serial", vec!["--pn", "1", "--pm", "1"]),
    ] {
        let out_dir = dir.path().join(label);
        let mut args = vec![
            "layer",
            "--config",
            cfg.to_str().unwrap(),
            "--seed",
            "11",
            "--out",
            out_dir.to_str().unwrap(),
        ];
        args.extend(extra);
        let out = convsim(&args);
        assert!(out.status.success(), "{label}: {:?}", out);
        tensors.push(std::fs::read(out_dir.join("output.ct16")).unwrap());
        reports.push(std::fs::read_to_string(out_dir.join("layer_report.csv")).unwrap());
    }
    // Same seed, same tensor bytes under every engine configuration.
    assert_eq!(tensors[0], tensors[1]);
    assert_eq!(tensors[0], tensors[2]);
    // But the resource/timing columns differ between configurations.
    assert_ne!(reports[0], reports[1]);
    assert_ne!(reports[1], reports[2]);
}

#[test]
fn layer_accepts_weights_from_tensor_files() {
    let dir = tempfile::tempdir().unwrap();
    // Identity 1x1 kernel: output equals input.
    let ks = convsim_core::KernelSet::new(
        1,
        1,
        1,
        1,
        vec![convsim_core::Fixed16::ONE],
        vec![convsim_core::Fixed16::ZERO],
    )
    .unwrap();
    ks.save(dir.path().join("identity.ct16")).unwrap();
    let cfg = dir.path().join("layer.toml");
    write(
        &cfg,
        r#"
[input]
channels = 1
height = 4
width = 4

[layer]
kernels = 1
kernel_size = 1
[layer.weights]
kind = "file"
path = "identity.ct16"
"#,
    );
    let out_dir = dir.path().join("out");
    let out = convsim(&[
        "layer",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "3",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let fm = FeatureMap::load(out_dir.join("output.ct16")).unwrap();
    assert_eq!((fm.channels(), fm.height(), fm.width()), (1, 4, 4));
}

#[test]
fn network_reports_have_stable_columns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("net.toml");
    write(
        &cfg,
        r#"
[input]
channels = 1
height = 8
width = 8

[[layers]]
kind = "conv"
kernels = 2
kernel_size = 3

[[layers]]
kind = "activation"

[[layers]]
kind = "fully_connected"
outputs = 4
"#,
    );
    let out_dir = dir.path().join("out");
    let out = convsim(&[
        "network",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let report = std::fs::read_to_string(out_dir.join("network_report.csv")).unwrap();
    let lines: Vec<&str> = report.lines().collect();
    assert_eq!(
        lines[0],
        "layer,kind,out_channels,out_height,out_width,params,macs,ops,cycles,multipliers,adders,registers"
    );
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("0,conv,2,6,6,"));
    assert!(lines[3].starts_with("2,fully_connected,4,1,1,"));
    let scores = std::fs::read_to_string(out_dir.join("scores.csv")).unwrap();
    assert_eq!(scores.lines().count(), 5);
    assert_eq!(scores.lines().next().unwrap(), "class,raw,value");
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("net.toml");
    write(&cfg, "unknown_key = 1\n");
    let out = convsim(&["network", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}
