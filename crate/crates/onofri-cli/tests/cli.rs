//! End-to-end checks of the binary: exit codes, output artifacts,
//! deterministic reruns, and the fault-injection path.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_onofri"))
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("missing {name}: {e}"))
}

#[test]
fn identities_pass_and_write_artifacts() {
    let dir = tempdir("identities");
    let status = bin()
        .args([
            "identities",
            "--n",
            "2",
            "--radius",
            "1",
            "--resolution",
            "64",
        ])
        .arg("--out")
        .arg(&dir)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let csv = read(&dir, "identities.csv");
    assert!(csv.starts_with("# command=identities"));
    assert!(csv.contains("identity_name,n,R,lhs,rhs,abs_error"));
    // every data row closes below 1e-8
    for line in csv
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("identity_name"))
    {
        let err: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!(err < 1e-8, "row {line}");
    }
    let jsonl = read(&dir, "identities.jsonl");
    assert!(jsonl.lines().next().unwrap().contains("\"config\""));
}

#[test]
fn fault_injection_flips_the_exit_code() {
    let dir = tempdir("fault");
    let status = bin()
        .args([
            "identities",
            "--n",
            "2",
            "--radius",
            "1",
            "--resolution",
            "64",
        ])
        .arg("--inject-fault")
        .arg("--out")
        .arg(&dir)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn unknown_flags_are_usage_errors() {
    let status = bin()
        .args(["identities", "--no-such-flag"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
    // and unknown subcommands as well
    let status = bin().arg("frobnicate").status().unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn invalid_configuration_is_a_usage_error() {
    let dir = tempdir("badcfg");
    let status = bin()
        .args(["identities", "--n", "1"])
        .arg("--out")
        .arg(&dir)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
    let status = bin()
        .args(["identities", "--resolution", "8"])
        .arg("--out")
        .arg(&dir)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn unwritable_output_dir_is_an_io_error() {
    let dir = tempdir("blocked");
    let file = dir.join("not-a-dir");
    std::fs::write(&file, "x").unwrap();
    let status = bin()
        .args(["identities", "--n", "2", "--resolution", "64"])
        .arg("--out")
        .arg(&file)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempdir("det-a");
    let b = tempdir("det-b");
    for dir in [&a, &b] {
        let status = bin()
            .args([
                "duality",
                "--n",
                "2",
                "--radius",
                "1",
                "--trials",
                "4",
                "--resolution",
                "48",
                "--seed",
                "11",
            ])
            .arg("--out")
            .arg(dir)
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(0));
    }
    for name in ["duality.csv", "duality.jsonl"] {
        let left = std::fs::read(a.join(name)).unwrap();
        let right = std::fs::read(b.join(name)).unwrap();
        assert_eq!(left, right, "{name} differs between reruns");
    }
}

#[test]
fn config_file_is_read_and_flags_win() {
    let dir = tempdir("cfgfile");
    let cfg = dir.join("run.conf");
    std::fs::write(&cfg, "n=2\nradius=1\ntrials=3\nresolution=48\nseed=5\n").unwrap();
    let status = bin()
        .arg("lemma1")
        .arg("--config")
        .arg(&cfg)
        .args(["--trials", "2"]) // flag overrides the file
        .arg("--out")
        .arg(&dir)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let csv = read(&dir, "lemma1.csv");
    assert!(csv.contains("# trials=2"));
    let rows = csv
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("n,"))
        .count();
    assert_eq!(rows, 2);
}

#[test]
fn epsilon_emits_a_marked_svg() {
    let dir = tempdir("epsilon");
    let status = bin()
        .args(["epsilon", "--n", "2", "--resolution", "96"])
        .arg("--out")
        .arg(&dir)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let svg = read(&dir, "epsilon_R1.svg");
    assert!(svg.starts_with("<svg"));
    assert!(svg.contains("eps_max = 7.089815"), "marker missing");
}

#[test]
fn out_dir_falls_back_to_the_environment() {
    let dir = tempdir("envout");
    let status = bin()
        .args(["identities", "--n", "2", "--resolution", "64"])
        .env("ONOFRI_OUT", &dir)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert!(dir.join("identities.csv").exists());
}

#[test]
fn sphere_and_deficit_pass_with_small_budgets() {
    let dir = tempdir("quick");
    let status = bin()
        .args(["sphere", "--trials", "5", "--resolution", "64"])
        .arg("--out")
        .arg(&dir)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let status = bin()
        .args(["deficit", "--n", "3", "--trials", "5", "--resolution", "96"])
        .arg("--out")
        .arg(&dir)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
}

fn tempdir(tag: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("onofri-cli-test-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
