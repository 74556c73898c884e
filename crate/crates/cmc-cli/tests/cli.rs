//! End-to-end tests of the `cmc` binary: every subcommand, the file formats
//! it emits, deterministic output, and the exit-code contract.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn cmc() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cmc"))
}

fn run(args: &[&str]) -> Output {
    cmc().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

struct TempDir(PathBuf);

impl TempDir {
    fn new(tag: &str) -> Self {
        let dir = std::env::temp_dir().join(format!("cmc-cli-test-{tag}-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        TempDir(dir)
    }

    fn path(&self, name: &str) -> PathBuf {
        self.0.join(name)
    }
}

impl Drop for TempDir {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.0);
    }
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn delaunay_cylinder_branch() {
    let out = run(&[
        "delaunay",
        "--h",
        "1",
        "--tau",
        "0.2679491924311228",
        "--periods",
        "1",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("period = CYLINDER"), "{text}");
    // rho_min = rho_max = artanh(1/2)
    assert!(text.contains("rho_min = 5.4930614433405"), "{text}");
    assert!(text.contains("rho_max = 5.4930614433405"), "{text}");
}

#[test]
fn delaunay_emits_profile_and_surfaces() {
    let tmp = TempDir::new("delaunay");
    let profile = tmp.path("profile.csv");
    let rot = tmp.path("rot.json");
    let sliced = tmp.path("sliced.json");
    let out = run(&[
        "delaunay",
        "--h",
        "1",
        "--tau",
        "0.2",
        "--periods",
        "1",
        "--out",
        profile.to_str().unwrap(),
        "--surface-out",
        rot.to_str().unwrap(),
        "--sliced-out",
        sliced.to_str().unwrap(),
        "--slices",
        "40",
        "--points",
        "64",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("rho_min = 2.70105"), "{text}");
    assert!(text.contains("rho_max = 8.28507"), "{text}");
    assert!(text.contains("period = 3.40348"), "{text}");
    // flux = 2 pi 0.2
    assert!(text.contains("flux = 1.2566370614359"), "{text}");
    assert!(read(&profile).starts_with("t,z,rho,sigma\n"));
    assert!(read(&rot).starts_with("{\"type\":\"rotational\""));
    assert!(read(&sliced).starts_with("{\"type\":\"sliced\""));
}

#[test]
fn delaunay_rejects_bad_parameters() {
    let out = run(&["delaunay", "--h", "0.4", "--tau", "0.1"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["delaunay", "--h", "1", "--tau", "0.5"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn solve_flux_and_determinism() {
    let tmp = TempDir::new("solve");
    let domain = tmp.path("domain.json");
    std::fs::write(
        &domain,
        r#"{
            "bounds": {"r": [-0.7, 0.7], "z": [0.0, 1.7]},
            "grid": [33, 33],
            "mask": {"type": "delaunay_shadow", "H": 1.0, "tau": 0.2, "shrink": 0.8},
            "bc": {"type": "delaunay_f0", "H": 1.0, "tau": 0.2}
        }"#,
    )
    .unwrap();
    let sol1 = tmp.path("sol1.csv");
    let sol2 = tmp.path("sol2.csv");
    for sol in [&sol1, &sol2] {
        let out = run(&[
            "solve",
            "--domain",
            domain.to_str().unwrap(),
            "--h0",
            "1.0",
            "--tol",
            "1e-10",
            "--out",
            sol.to_str().unwrap(),
        ]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        assert!(stdout(&out).contains("converged"));
    }
    // identical inputs, byte-identical outputs
    assert_eq!(read(&sol1), read(&sol2));
    assert!(read(&sol1).starts_with("r,z,u\n"));
}

#[test]
fn flux_json_report() {
    let tmp = TempDir::new("flux");
    let rot = tmp.path("rot.json");
    let out = run(&[
        "delaunay",
        "--h",
        "1",
        "--tau",
        "0.2",
        "--periods",
        "1",
        "--surface-out",
        rot.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let out = run(&[
        "flux",
        "--surface",
        rot.to_str().unwrap(),
        "--dir",
        "z",
        "--height",
        "1.0",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    // JSON report with the decomposed terms; value = 2 pi tau
    assert!(text.contains("\"height\":"), "{text}");
    assert!(text.contains("\"direction\":\"z\""), "{text}");
    assert!(text.contains("\"boundary_term\":"), "{text}");
    assert!(text.contains("\"cap_term\":"), "{text}");
    assert!(text.contains("\"value\":1.256637061"), "{text}");
    // horizontal direction vanishes identically on rotational surfaces
    let out = run(&[
        "flux",
        "--surface",
        rot.to_str().unwrap(),
        "--dir",
        "s",
        "--height",
        "1.0",
    ]);
    assert!(stdout(&out).contains("\"value\":0"), "{}", stdout(&out));
}

#[test]
fn alexandrov_trace_and_reports() {
    let tmp = TempDir::new("alexandrov");
    let sliced = tmp.path("sliced.json");
    let out = run(&[
        "delaunay",
        "--h",
        "1",
        "--tau",
        "0.2",
        "--periods",
        "1",
        "--sliced-out",
        sliced.to_str().unwrap(),
        "--slices",
        "60",
        "--points",
        "128",
    ]);
    assert!(out.status.success());
    let trace = tmp.path("trace.csv");
    let out = run(&[
        "alexandrov",
        "--surface",
        sliced.to_str().unwrap(),
        "--tol",
        "1e-3",
        "--out",
        trace.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = stdout(&out);
    assert!(text.contains("usc: pass"), "{text}");
    assert!(text.contains("structure: MONOTONE"), "{text}");
    assert!(text.contains("symmetry plane: s ="), "{text}");
    let csv = read(&trace);
    assert!(csv.starts_with("z,alpha,provenance\n"));
    assert_eq!(csv.lines().count(), 61);

    // foliation descriptor shifts the sweep but reports original coordinates
    let fol = tmp.path("fol.json");
    std::fs::write(&fol, r#"{"type":"translation","isometry":{"shift_s":0.4}}"#).unwrap();
    let out = run(&[
        "alexandrov",
        "--surface",
        sliced.to_str().unwrap(),
        "--tol",
        "1e-3",
        "--foliation",
        fol.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("symmetry plane: s ="));

    // rotational input is rejected with guidance
    let rot = tmp.path("rot.json");
    run(&[
        "delaunay",
        "--h",
        "1",
        "--tau",
        "0.2",
        "--periods",
        "1",
        "--surface-out",
        rot.to_str().unwrap(),
    ]);
    let out = run(&[
        "alexandrov",
        "--surface",
        rot.to_str().unwrap(),
        "--tol",
        "1e-3",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn grad_bound_values() {
    let out = run(&[
        "grad-bound",
        "--rp",
        "0",
        "--zp",
        "0",
        "--radius",
        "1",
        "--h0cmc",
        "1",
        "--height",
        "0",
    ]);
    assert!(out.status.success());
    assert!(stdout(&out).starts_with("2.0000000000000000e0"));
    let out = run(&[
        "grad-bound",
        "--rp",
        "0",
        "--zp",
        "0",
        "--radius",
        "1",
        "--h0cmc",
        "1",
        "--height",
        "0.1",
    ]);
    assert!(
        stdout(&out).starts_with("4.104681738218"),
        "{}",
        stdout(&out)
    );
    let out = run(&[
        "grad-bound",
        "--rp",
        "0",
        "--zp",
        "0",
        "--radius",
        "-1",
        "--h0cmc",
        "1",
        "--height",
        "0.1",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn area_between_heights() {
    let tmp = TempDir::new("area");
    let rot = tmp.path("rot.json");
    run(&[
        "delaunay",
        "--h",
        "1",
        "--tau",
        "0.2679491924311228",
        "--periods",
        "2",
        "--surface-out",
        rot.to_str().unwrap(),
    ]);
    let out = run(&[
        "area",
        "--surface",
        rot.to_str().unwrap(),
        "--from",
        "0.25",
        "--to",
        "1.75",
    ]);
    assert!(out.status.success());
    // cylinder: 2 pi sinh(artanh(1/2)) * 1.5, frozen closed form
    let got: f64 = stdout(&out).trim().parse().unwrap();
    let expect = 3.6275987284684352_f64 * 1.5;
    assert!((got - expect).abs() < 1e-9, "area {got} vs {expect}");
    // empty interval is a validation error
    let out = run(&[
        "area",
        "--surface",
        rot.to_str().unwrap(),
        "--from",
        "1.0",
        "--to",
        "1.0",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn help_lists_defaults() {
    let out = run(&["solve", "--help"]);
    let text = stdout(&out);
    assert!(text.contains("0.0000000001"), "{text}"); // default tolerance printed
    let out = run(&["alexandrov", "--help"]);
    assert!(stdout(&out).contains("0.001"), "{}", stdout(&out));
}
