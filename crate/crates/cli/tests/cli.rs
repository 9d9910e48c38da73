use std::process::Command;

use fdmimo_cli::{parse_args, RawConfig};

fn fdmimo(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_fdmimo")).args(args).output().unwrap()
}

fn manifest_map(text: &str) -> std::collections::BTreeMap<String, String> {
    text.lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

#[test]
fn default_manifest_lists_reference_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let out = fdmimo(&[
        "power_sweep",
        "--out",
        dir.path().to_str().unwrap(),
        "--sim.scenarios=3",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = manifest_map(&std::fs::read_to_string(dir.path().join("power_sweep.manifest")).unwrap());
    for (k, v) in [
        ("system.bandwidth_hz", "20000000"),
        ("system.pathloss_exponent", "3.5"),
        ("system.shadowing_db", "5"),
        ("system.p_dl_w", "40"),
        ("system.p_ul_w", "0.25"),
        ("system.p_si_w", "40"),
        ("system.mu_si2_db", "10"),
        ("system.noise_dbm_per_hz", "-174"),
        ("system.antennas", "100"),
        ("experiment", "power_sweep"),
        ("sim.scenarios", "3"),
    ] {
        assert_eq!(m.get(k).map(String::as_str), Some(v), "{k}");
    }
    let csv = std::fs::read_to_string(dir.path().join("power_sweep.csv")).unwrap();
    assert!(csv.starts_with("scenario,b,N_a,power_W,ee_bits_per_J\n"));
    assert_eq!(csv.lines().count(), 1 + 3 * 12);
}

#[test]
fn bad_input_exits_nonzero_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    for (args, field) in [
        (vec!["warp_drive", "--out", d], "experiment"),
        (
            vec!["se_vs_bits", "--out", d, "--system.antennas=-3"],
            "system.antennas",
        ),
        (
            vec!["se_vs_bits", "--out", d, "--system.pathloss_exponent=2"],
            "system.pathloss_exponent",
        ),
        (vec!["se_vs_bits", "--out", d, "--layout.colour=red"], "layout.colour"),
        (
            vec!["se_vs_bits", "--out", d, "--outage.alpha_low=1.5"],
            "outage.alpha_low",
        ),
    ] {
        let out = fdmimo(&args);
        assert!(!out.status.success());
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains(field), "{field}: {err}");
    }
    let out = fdmimo(&["se_vs_bits"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--out"));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("run.cfg");
    std::fs::write(&file, "experiment=se_vs_bits\nseed=5\nsystem.antennas=32\n").unwrap();
    let inv = parse_args([
        "--config",
        file.to_str().unwrap(),
        "--seed",
        "9",
        "--out=x",
        "--layout.kind=ppp",
    ])
    .unwrap()
    .unwrap();
    assert_eq!(inv.config.get("seed"), Some("9"));
    assert_eq!(inv.config.get("system.antennas"), Some("32"));
    assert_eq!(inv.config.get("layout.kind"), Some("ppp"));
    assert_eq!(inv.config.get("experiment"), Some("se_vs_bits"));
    assert_eq!(inv.out, std::path::PathBuf::from("x"));
    assert!(parse_args(["--help"]).unwrap().is_none());
}

#[test]
fn se_vs_bits_rises_to_the_ceiling() {
    let dir = tempfile::tempdir().unwrap();
    let mut raw = RawConfig::default();
    raw.merge_text("experiment=se_vs_bits\nsim.scenarios=40\nsweep.p_si_w=0\nsweep.bits=1..12\n")
        .unwrap();
    let out = fdmimo_cli::run(&raw, dir.path()).unwrap();
    let csv = std::fs::read_to_string(out.csv).unwrap();
    let rows: Vec<Vec<f64>> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 12);
    for w in rows.windows(2) {
        assert!(w[1][2] >= w[0][2] && w[1][3] >= w[0][3]);
    }
    let last = rows.last().unwrap();
    assert!((last[2] - last[4]).abs() / last[4] < 1e-3);
    assert!((last[3] - last[5]).abs() / last[5] < 1e-3);
}

#[test]
fn outage_cdf_has_four_monotone_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out = fdmimo(&[
        "outage_cdf",
        "--out",
        dir.path().to_str().unwrap(),
        "--sim.scenarios=25",
        "--outage.points=11",
    ]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("outage_cdf.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("prob,hex_low,hex_full,ppp_low,ppp_full"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 11);
    assert_eq!(rows[10][0], 1.0);
    for c in 1..5 {
        assert!(rows.windows(2).all(|w| w[1][c] >= w[0][c]));
    }
}

#[test]
fn manifest_rerun_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let run = |args: &[&str]| assert!(fdmimo(args).status.success());
    run(&[
        "se_vs_antennas",
        "--out",
        a.to_str().unwrap(),
        "--sim.scenarios=8",
        "--seed=3",
    ]);
    let manifest = a.join("se_vs_antennas.manifest");
    run(&["--config", manifest.to_str().unwrap(), "--out", b.to_str().unwrap()]);
    for f in ["se_vs_antennas.csv", "se_vs_antennas.manifest"] {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
}
