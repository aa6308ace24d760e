use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

use modeloss::channel::{ChannelSpectrum, ModeLayout};
use modeloss::linalg::CMat;

const SMALL: &str = r#"
schema_version = 1
placements = [{ kind = "tx-side" }, { kind = "in-span", section = 1 }]
ratio_grid_db = [0.0, 4.0]
snr_grid_db = [8.0, 16.0]
seeds = 2
training_length = 2048

[link]
sections = 3
bins = 8
"#;

fn modeloss(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_modeloss"))
        .args(args)
        .output()
        .unwrap()
}

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect()
}

fn small_config(dir: &Path) -> String {
    let path = dir.join("small.toml");
    std::fs::write(&path, SMALL).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn print_config_is_a_loadable_config() {
    let out = modeloss(&["print-config", "--seed", "9"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("schema_version = 1"));
    assert!(text.contains("seed = 9"));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("printed.toml");
    std::fs::write(&path, &text).unwrap();
    let again = modeloss(&[
        "print-config",
        "--config",
        path.to_str().unwrap(),
        "--seed",
        "9",
    ]);
    assert_eq!(String::from_utf8(again.stdout).unwrap(), text);
}

#[test]
fn sweep_is_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let mut outputs = Vec::new();
    for threads in ["1", "4"] {
        let out_dir = dir.path().join(format!("t{threads}"));
        let out = modeloss(&[
            "sweep",
            "--config",
            &cfg,
            "--threads",
            threads,
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        outputs.push(files(&out_dir));
    }
    assert_eq!(outputs[0], outputs[1]);
    let names: Vec<&String> = outputs[0].keys().collect();
    for want in [
        "sweep_rows.csv",
        "sweep_summary.csv",
        "manifest.json",
        "heatmap_tx-side_corrected.svg",
        "heatmap_in-span-1_uncorrected.svg",
        "mdl_vs_ratio.csv",
        "mdl_vs_ratio.svg",
    ] {
        assert!(names.iter().any(|n| *n == want), "missing {want}");
    }
    // 2 placements × 2 ratios × (reference + 2 SNRs) × 2 seeds, plus header
    let rows = String::from_utf8(outputs[0]["sweep_rows.csv"].clone()).unwrap();
    assert_eq!(rows.lines().count(), 1 + 2 * 2 * 3 * 2);
}

#[test]
fn seed_override_changes_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(modeloss(&[
        "mdl-vs-ratio",
        "--config",
        &cfg,
        "--out",
        a.to_str().unwrap()
    ])
    .status
    .success());
    assert!(modeloss(&[
        "mdl-vs-ratio",
        "--config",
        &cfg,
        "--seed",
        "5",
        "--out",
        b.to_str().unwrap()
    ])
    .status
    .success());
    let (fa, fb) = (files(&a), files(&b));
    assert_ne!(fa["mdl_vs_ratio.csv"], fb["mdl_vs_ratio.csv"]);
    assert!(
        !fa.contains_key("sweep_summary.csv") || fa["sweep_summary.csv"] != fb["sweep_summary.csv"]
    );
    assert!(!fa.keys().any(|k| k.starts_with("heatmap")));
}

#[test]
fn synthesize_then_analyze() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let file = dir.path().join("channel.json");
    let out = modeloss(&[
        "synthesize",
        file.to_str().unwrap(),
        "--config",
        &cfg,
        "--ratio-db",
        "6",
        "--in-span",
        "1",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let out = modeloss(&["analyze", file.to_str().unwrap()]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("kind: channel-spectrum"));
    assert!(text.contains("mdl_db[mean-gram]"));
    assert!(text.contains("mdl_db[worst-bin]"));
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "schema_version = 1\nseeds = 0\n").unwrap();
    assert_eq!(
        modeloss(&["sweep", "--config", bad.to_str().unwrap()])
            .status
            .code(),
        Some(1)
    );
    let missing = dir.path().join("missing.toml");
    assert_eq!(
        modeloss(&["print-config", "--config", missing.to_str().unwrap()])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(modeloss(&["no-such-command"]).status.code(), Some(1));
    let junk = dir.path().join("junk.json");
    std::fs::write(&junk, "{}").unwrap();
    assert_eq!(
        modeloss(&["analyze", junk.to_str().unwrap()]).status.code(),
        Some(1)
    );
    assert_eq!(
        modeloss(&[
            "synthesize",
            dir.path().join("x.json").to_str().unwrap(),
            "--in-span",
            "40",
            "--ratio-db",
            "2"
        ])
        .status
        .code(),
        Some(1)
    );
}

#[test]
fn numerical_failures_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let layout = ModeLayout {
        spatial_modes: vec!["A".into(), "B".into()],
        polarizations: 1,
    };
    let ch = ChannelSpectrum::flat(layout, CMat::zeros(2, 2), 2, 1.0).unwrap();
    let file = dir.path().join("dead.json");
    modeloss::container::save(&ch, &file).unwrap();
    assert_eq!(
        modeloss(&["analyze", file.to_str().unwrap()]).status.code(),
        Some(2)
    );
}

#[test]
fn help_succeeds() {
    let out = modeloss(&["--help"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for cmd in ["sweep", "mdl-vs-ratio", "analyze", "print-config"] {
        assert!(text.contains(cmd));
    }
}
