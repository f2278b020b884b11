use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_basin-metric-lab"))
}

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn cfg_arg(name: &str) -> String {
    scenario(name).to_str().unwrap().to_string()
}

#[test]
fn fixed_points_table() {
    let out = run(&["fixed-points", "--config", &cfg_arg("zsq.cfg")]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 4, "{text}");
    assert_eq!(text.matches("Superattracting").count(), 2);
    assert_eq!(text.matches("Repelling").count(), 1);

    let csv = run(&["fixed-points", "--config", &cfg_arg("newton.cfg"), "--out", "-"]);
    assert_eq!(csv.status.code(), Some(0));
    let text = String::from_utf8(csv.stdout).unwrap();
    assert!(text.starts_with("# basin-metric-lab v1\nre,im,chart,"));
    assert_eq!(text.lines().count(), 6);
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&[]).status.code(), Some(1));
    assert_eq!(run(&["basin"]).status.code(), Some(1));
    assert_eq!(run(&["basin", "--config", "/nonexistent.cfg"]).status.code(), Some(1));
    let bad = run(&["basin", "--config", &cfg_arg("zsq.cfg"), "--samples", "0"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8(bad.stderr).unwrap().contains("sample_count"));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn numerical_failure_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rep.cfg");
    // 1 is a repelling fixed point of z^2
    std::fs::write(&path, "# basin-metric-lab v1\nnumerator = 0;0;1\nattracting_point = 1\n").unwrap();
    let out = run(&["basin", "--config", path.to_str().unwrap(), "--resolution", "64"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("not attracting"));
}

#[test]
fn coverage_check_passes_and_fails_by_depth() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    let cfg = cfg_arg("z2plus1.cfg");
    let ok = run(&["verify-lemma", "--config", &cfg, "--resolution", "256", "--depth", "10", "--out", out_dir]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(dir.path().join("coverage.csv").exists());
    let short = run(&["verify-lemma", "--config", &cfg, "--resolution", "256", "--depth", "1", "--out", "-"]);
    assert_eq!(short.status.code(), Some(3));
    assert!(String::from_utf8(short.stdout).unwrap().starts_with("# basin-metric-lab v1\nlevel,component"));
}

#[test]
fn experiment_writes_deterministic_files() {
    let dirs: Vec<_> = (0..2).map(|_| tempfile::tempdir().unwrap()).collect();
    for (k, d) in dirs.iter().enumerate() {
        let threads = (k + 1).to_string();
        let out = run(&[
            "experiment",
            "--config",
            &cfg_arg("zsq.cfg"),
            "--resolution",
            "128",
            "--depth",
            "6",
            "--samples",
            "30",
            "--threads",
            &threads,
            "--out",
            d.path().to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for name in ["samples.csv", "components.csv", "series.csv", "tree.csv", "basin.ppm", "heat.ppm", "report.txt"] {
        let a = std::fs::read(dirs[0].path().join(name)).unwrap();
        assert_eq!(a, std::fs::read(dirs[1].path().join(name)).unwrap(), "{name}");
    }
    let samples = std::fs::read_to_string(dirs[0].path().join("samples.csv")).unwrap();
    assert_eq!(samples.lines().count(), 32);
}

#[test]
fn stdout_modes() {
    let cfg = cfg_arg("zsq.cfg");
    let tree = run(&["tree", "--config", &cfg, "--resolution", "64", "--depth", "3", "--out", "-"]);
    assert_eq!(tree.status.code(), Some(0));
    assert_eq!(String::from_utf8(tree.stdout).unwrap().lines().count(), 2 + 15);

    let ppm = run(&["render", "--config", &cfg, "--resolution", "64", "--out", "-"]);
    assert_eq!(ppm.status.code(), Some(0));
    assert!(ppm.stdout.starts_with(b"P6\n# basin-metric-lab v1\n128 64\n255\n"));

    let basin = run(&["basin", "--config", &cfg, "--resolution", "64", "--out", "-"]);
    let text = String::from_utf8(basin.stdout).unwrap();
    assert_eq!(text.lines().nth(2).map(|l| l.starts_with("1,")), Some(true));
    assert_eq!(text.lines().count(), 3);
}
