//! End-to-end checks of the file-based interface: subcommand behaviour,
//! output schemas, seeded byte-level determinism and exit codes.

use std::path::{Path, PathBuf};
use wavecancoh::cli::main_entry;
use wavecancoh::io;

fn run(args: &[&str]) -> i32 {
    let mut full = vec!["wavecancoh"];
    full.extend_from_slice(args);
    main_entry(full)
}

fn run_ok(args: &[&str]) {
    let code = run(args);
    assert_eq!(code, 0, "command failed: {args:?}");
}

fn read_lines(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|s| s.to_string())
        .collect()
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    files
        .into_iter()
        .map(|p| {
            (
                p.file_name().unwrap().to_str().unwrap().to_string(),
                std::fs::read(&p).unwrap(),
            )
        })
        .collect()
}

#[test]
fn simulate_mvlsw_writes_ten_channel_panels() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c1");
    run_ok(&[
        "simulate", "mvlsw", "--builtin", "c1", "--T", "256", "--reps", "3", "--seed", "7",
        "--out", out.to_str().unwrap(),
    ]);
    let manifest: io::PanelManifest = io::read_json(&out.join("manifest.json")).unwrap();
    assert_eq!((manifest.p, manifest.q), (6, 4));
    assert_eq!(manifest.replicates.len(), 3);
    assert_eq!(manifest.change_points, vec![0.5]);
    for entry in &manifest.replicates {
        let lines = read_lines(&out.join(&entry.file));
        assert_eq!(lines[0], "t,ch_1,ch_2,ch_3,ch_4,ch_5,ch_6,ch_7,ch_8,ch_9,ch_10");
        assert_eq!(lines.len(), 257);
    }
}

#[test]
fn simulate_ar2_group_sizes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ar2");
    run_ok(&[
        "simulate", "ar2mix", "--T", "128", "--seed", "1", "--out", out.to_str().unwrap(),
    ]);
    let manifest: io::PanelManifest = io::read_json(&out.join("manifest.json")).unwrap();
    assert_eq!((manifest.p, manifest.q), (4, 3));
    assert_eq!(manifest.fs, 100.0);
    let lines = read_lines(&out.join("panel_0000.csv"));
    assert_eq!(lines[0], "t,ch_1,ch_2,ch_3,ch_4,ch_5,ch_6,ch_7");
}

#[test]
fn repeated_command_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        run_ok(&[
            "simulate", "mvlsw", "--builtin", "c1", "--T", "128", "--reps", "2", "--seed",
            "99", "--out", out.to_str().unwrap(),
        ]);
    }
    let fa = dir_bytes(&a);
    let fb = dir_bytes(&b);
    assert_eq!(fa.len(), fb.len());
    for ((na, ba), (nb, bb)) in fa.iter().zip(&fb) {
        assert_eq!(na, nb);
        assert_eq!(ba, bb, "file {na} differs between identical runs");
    }
}

fn simulate_small_panel(dir: &Path) -> (PathBuf, PathBuf) {
    let out = dir.join("panels");
    run_ok(&[
        "simulate", "mvlsw", "--builtin", "c1", "--T", "1024", "--reps", "1", "--seed", "5",
        "--out", out.to_str().unwrap(),
    ]);
    (out.join("panel_0000.csv"), out.join("manifest.json"))
}

#[test]
fn estimate_covers_the_full_grid() {
    let dir = tempfile::tempdir().unwrap();
    let (panel, manifest) = simulate_small_panel(dir.path());
    let out = dir.path().join("field.csv");
    run_ok(&[
        "estimate", "--input", panel.to_str().unwrap(), "--manifest",
        manifest.to_str().unwrap(), "--scales", "2", "--out", out.to_str().unwrap(),
    ]);
    let lines = read_lines(&out);
    assert!(lines[0].starts_with("scale,k,u,rho,rho_raw,degenerate,a_1"));
    assert_eq!(lines.len(), 1 + 1024);
    // k column enumerates every shift
    for (i, line) in lines.iter().skip(1).enumerate() {
        let k: usize = line.split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(k, i);
    }
    // reading and re-writing reproduces the bytes
    let field = io::read_cancoh_field(&out).unwrap();
    let again = dir.path().join("again.csv");
    io::write_cancoh_field(&again, &field).unwrap();
    assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn zero_lag_flag_matches_default() {
    let dir = tempfile::tempdir().unwrap();
    let (panel, manifest) = simulate_small_panel(dir.path());
    let without = dir.path().join("without.csv");
    let with = dir.path().join("with.csv");
    run_ok(&[
        "estimate", "--input", panel.to_str().unwrap(), "--manifest",
        manifest.to_str().unwrap(), "--scales", "2", "--out", without.to_str().unwrap(),
    ]);
    run_ok(&[
        "estimate", "--input", panel.to_str().unwrap(), "--manifest",
        manifest.to_str().unwrap(), "--scales", "2", "--lag", "0", "--out",
        with.to_str().unwrap(),
    ]);
    assert_eq!(
        std::fs::read(&without).unwrap(),
        std::fs::read(&with).unwrap()
    );
    assert_eq!(
        std::fs::read(io::meta_path_for(&without)).unwrap(),
        std::fs::read(io::meta_path_for(&with)).unwrap()
    );
}

#[test]
fn lsp_method_emits_band_schema() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ar2");
    run_ok(&[
        "simulate", "ar2mix", "--T", "512", "--seed", "3", "--out", out.to_str().unwrap(),
    ]);
    let curve = dir.path().join("lsp.csv");
    run_ok(&[
        "estimate", "--input", out.join("panel_0000.csv").to_str().unwrap(), "--manifest",
        out.join("manifest.json").to_str().unwrap(), "--method", "lsp", "--band", "25:50",
        "--out", curve.to_str().unwrap(),
    ]);
    let lines = read_lines(&curve);
    assert!(lines[0].starts_with("band_lo_hz,band_hi_hz,k,u,rho,rho_raw,degenerate,a_1"));
    assert!(lines.len() > 2);
    let first: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(first[0], "25");
    assert_eq!(first[1], "50");
}

#[test]
fn permtest_identical_conditions_and_seeding() {
    let dir = tempfile::tempdir().unwrap();
    let panels = dir.path().join("panels");
    run_ok(&[
        "simulate", "mvlsw", "--builtin", "c1", "--T", "256", "--reps", "3", "--seed", "21",
        "--out", panels.to_str().unwrap(),
    ]);
    let tr_a = dir.path().join("cond_a");
    let tr_b = dir.path().join("cond_b");
    std::fs::create_dir_all(&tr_a).unwrap();
    std::fs::create_dir_all(&tr_b).unwrap();
    for i in 0..3 {
        let panel = panels.join(format!("panel_000{i}.csv"));
        for cond in [&tr_a, &tr_b] {
            run_ok(&[
                "estimate", "--input", panel.to_str().unwrap(), "--manifest",
                panels.join("manifest.json").to_str().unwrap(), "--scales", "2", "--out",
                cond.join(format!("trial_{i}.csv")).to_str().unwrap(),
            ]);
        }
    }
    let report_dir = dir.path().join("reports");
    run_ok(&[
        "permtest", "--group-a", tr_a.to_str().unwrap(), "--group-b", tr_b.to_str().unwrap(),
        "--probes", "100,180", "--window", "40", "--n-perm", "50", "--seed", "6", "--out",
        report_dir.to_str().unwrap(), "--full-dist",
    ]);
    let summary = read_lines(&report_dir.join("summary.csv"));
    assert_eq!(summary[0], "scale,t_100,t_180");
    assert_eq!(summary[1], "2,0.000 (1.000),0.000 (1.000)");

    let r1: wavecancoh::inference::PermTestReport =
        io::read_json(&report_dir.join("report_s2_t100.json")).unwrap();
    assert_eq!(r1.p_value, 1.0);
    assert_eq!(r1.t_obs, 0.0);
    assert_eq!(r1.perm_stats.len(), 50);

    // a different master seed changes the permutations but not T_obs
    let report_dir2 = dir.path().join("reports2");
    run_ok(&[
        "permtest", "--group-a", tr_a.to_str().unwrap(), "--group-b", tr_b.to_str().unwrap(),
        "--probes", "100", "--window", "40", "--n-perm", "50", "--seed", "7", "--out",
        report_dir2.to_str().unwrap(), "--full-dist",
    ]);
    let r2: wavecancoh::inference::PermTestReport =
        io::read_json(&report_dir2.join("report_s2_t100.json")).unwrap();
    assert_eq!(r1.t_obs, r2.t_obs);
    assert_ne!(r1.seed, r2.seed);
}

#[test]
fn replicate_experiments_smoke() {
    let dir = tempfile::tempdir().unwrap();
    let left = dir.path().join("left");
    run_ok(&[
        "replicate", "fig2-left", "--reps", "3", "--T", "256", "--seed", "11", "--out",
        left.to_str().unwrap(),
    ]);
    let band = read_lines(&left.join("mean_band.csv"));
    assert_eq!(band[0], "k,u,mean,lo,hi");
    assert_eq!(band.len(), 1 + 256);
    let meta: serde_json::Value = io::read_json(&left.join("experiment.json")).unwrap();
    assert_eq!(meta["experiment"], "fig2-left");
    assert_eq!(meta["reps"], 3);

    let right = dir.path().join("right");
    run_ok(&[
        "replicate", "fig2-right", "--reps", "2", "--T", "512", "--seed", "4", "--out",
        right.to_str().unwrap(),
    ]);
    assert!(right.join("wavecancoh_scale1.csv").exists());
    assert!(right.join("lsp_25_50hz.csv").exists());

    let sweep = dir.path().join("sweep");
    run_ok(&[
        "replicate", "causal-sweep", "--reps", "1", "--lags", "0,10", "--T", "256", "--seed",
        "2", "--out", sweep.to_str().unwrap(),
    ]);
    let rows = read_lines(&sweep.join("lag_sweep.csv"));
    assert_eq!(rows[0], "direction,scale,lag,mean_rho");
    assert_eq!(rows.len(), 1 + 2 * 3 * 2);
}

#[test]
fn exit_codes_by_failure_class() {
    let dir = tempfile::tempdir().unwrap();
    // usage
    assert_eq!(run(&["bogus-subcommand"]), 2);
    // parse: malformed CSV
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "t,ch_1,ch_2\n0,1.0\n").unwrap();
    assert_eq!(
        run(&[
            "estimate", "--input", bad.to_str().unwrap(), "--split", "1", "--out",
            dir.path().join("x.csv").to_str().unwrap(),
        ]),
        3
    );
    // validation: missing split
    let ok_panel = dir.path().join("ok.csv");
    std::fs::write(&ok_panel, "t,ch_1,ch_2\n0,1.0,2.0\n1,0.5,0.25\n").unwrap();
    assert_eq!(
        run(&[
            "estimate", "--input", ok_panel.to_str().unwrap(), "--out",
            dir.path().join("y.csv").to_str().unwrap(),
        ]),
        4
    );
    // validation: unknown experiment name
    assert_eq!(
        run(&[
            "replicate", "fig3-left", "--out", dir.path().join("z").to_str().unwrap(),
        ]),
        4
    );
    // i/o: missing input
    assert_eq!(
        run(&[
            "estimate", "--input", dir.path().join("missing.csv").to_str().unwrap(),
            "--split", "1", "--out", dir.path().join("w.csv").to_str().unwrap(),
        ]),
        6
    );
}

#[test]
fn spawned_binary_reports_version_and_runs() {
    let bin = env!("CARGO_BIN_EXE_wavecancoh");
    let out = std::process::Command::new(bin)
        .arg("--version")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("wavecancoh"));

    let dir = tempfile::tempdir().unwrap();
    let status = std::process::Command::new(bin)
        .args([
            "simulate", "mvlsw", "--T", "64", "--reps", "1", "--seed", "1", "--out",
            dir.path().join("p").to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
}

#[test]
fn user_spec_files_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    // two-channel spec with one active scale
    let spec = io::LwsSpecFile {
        p: 1,
        q: 1,
        scales: vec![io::ScaleSpecFile {
            pieces: vec![
                io::PieceFile {
                    start: 0.0,
                    matrix: vec![vec![2.0, 0.5], vec![0.5, 2.0]],
                },
                io::PieceFile {
                    start: 0.5,
                    matrix: vec![vec![2.0, 1.5], vec![1.5, 2.0]],
                },
            ],
        }],
    };
    let spec_path = dir.path().join("spec.json");
    io::write_json(&spec_path, &spec).unwrap();
    let out = dir.path().join("sim");
    run_ok(&[
        "simulate", "mvlsw", "--spec", spec_path.to_str().unwrap(), "--T", "64", "--reps",
        "1", "--seed", "8", "--out", out.to_str().unwrap(),
    ]);
    let manifest: io::PanelManifest = io::read_json(&out.join("manifest.json")).unwrap();
    assert_eq!((manifest.p, manifest.q), (1, 1));
    assert!(manifest.spec.starts_with("file:"));

    // an indefinite spec matrix is rejected with a numerical error
    let bad = io::LwsSpecFile {
        p: 1,
        q: 1,
        scales: vec![io::ScaleSpecFile {
            pieces: vec![io::PieceFile {
                start: 0.0,
                matrix: vec![vec![1.0, 2.0], vec![2.0, 1.0]],
            }],
        }],
    };
    let bad_path = dir.path().join("bad.json");
    io::write_json(&bad_path, &bad).unwrap();
    assert_eq!(
        run(&[
            "simulate", "mvlsw", "--spec", bad_path.to_str().unwrap(), "--T", "64", "--reps",
            "1", "--seed", "8", "--out", dir.path().join("simbad").to_str().unwrap(),
        ]),
        5
    );
}
