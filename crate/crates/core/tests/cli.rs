use std::fs;
use std::path::Path;

use rsde::cli::config::{CoefficientConfig, DomainConfig, DriverConfig};
use rsde::cli::{run, ExperimentConfig, EXIT_CONFIG, EXIT_RUNTIME};
use rsde::schemes::SchemeKind;
use tempfile::TempDir;

struct Outcome {
    code: i32,
    stdout: String,
    stderr: String,
}

fn rsde(args: &[&str]) -> Outcome {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(std::iter::once("rsde").chain(args.iter().copied()), &mut out, &mut err);
    Outcome { code, stdout: String::from_utf8(out).unwrap(), stderr: String::from_utf8(err).unwrap() }
}

fn small_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.n_paths = 3;
    cfg.mesh_ladder = vec![1.0 / 8.0, 1.0 / 16.0];
    cfg.driver = DriverConfig::Brownian { steps: 256 };
    cfg.scheme.substeps_bar = 8;
    cfg.reference = rsde::cli::config::ReferenceConfig::Numerical { refine: 64 };
    cfg
}

fn write_config(dir: &Path, cfg: &ExperimentConfig) -> String {
    let p = dir.join("config.toml");
    fs::write(&p, cfg.to_toml()).unwrap();
    p.to_str().unwrap().to_string()
}

fn read_dir(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

fn error_kind(stderr: &str) -> String {
    let v: serde_json::Value = serde_json::from_str(stderr.trim()).unwrap();
    v["error"].as_str().unwrap().to_string()
}

#[test]
fn zero_coefficient_path_is_constant() {
    let tmp = TempDir::new().unwrap();
    let mut cfg = small_config();
    cfg.coefficient = CoefficientConfig::Zero;
    let config = write_config(tmp.path(), &cfg);
    let out = tmp.path().join("out");
    let r = rsde(&["simulate", "--config", &config, "--out", out.to_str().unwrap()]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let text = fs::read_to_string(out.join("path_0000.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,x1,x2,k1,k2,kvar");
    for l in lines {
        let f: Vec<&str> = l.split(',').collect();
        assert_eq!(&f[1..], ["0.5", "0", "0", "0", "0"], "{l}");
    }
    assert!(out.join("driver_0002.csv").exists() && out.join("simulate.json").exists());
}

#[test]
fn simulate_is_reproducible() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(tmp.path(), &small_config());
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert_eq!(rsde(&["simulate", "--config", &config, "--out", a.to_str().unwrap(), "--jobs", "1"]).code, 0);
    assert_eq!(rsde(&["simulate", "--config", &config, "--out", b.to_str().unwrap(), "--jobs", "3"]).code, 0);
    assert_eq!(read_dir(&a), read_dir(&b));
    let c = tmp.path().join("c");
    assert_eq!(rsde(&["simulate", "--config", &config, "--out", c.to_str().unwrap(), "--seed", "9"]).code, 0);
    assert_ne!(fs::read(a.join("path_0000.csv")).unwrap(), fs::read(c.join("path_0000.csv")).unwrap());
}

#[test]
fn oversized_jump_exits_with_runtime_error() {
    let tmp = TempDir::new().unwrap();
    let mut cfg = small_config();
    cfg.domain = DomainConfig::ExteriorBall { center: vec![0.0, 0.0], radius: 1.0 };
    cfg.scheme.x0 = vec![1.5, 0.0];
    cfg.scheme.kind = SchemeKind::Projection;
    cfg.driver = DriverConfig::Jump { steps: 256, jump_rate: 20.0, jump_radius: 0.0, jump_vector: Some(vec![2.0, 0.0]), diffusion_scale: 0.1 };
    let config = write_config(tmp.path(), &cfg);
    let out = tmp.path().join("out");
    let r = rsde(&["simulate", "--config", &config, "--out", out.to_str().unwrap()]);
    assert_eq!(r.code, EXIT_RUNTIME);
    assert_eq!(error_kind(&r.stderr), "JumpTooLarge");
    assert!(!out.join("simulate.json").exists());
}

#[test]
fn skorokhod_matches_one_dimensional_oracle() {
    let tmp = TempDir::new().unwrap();
    let input = tmp.path().join("z.csv");
    fs::write(&input, "t,z1,is_jump\n0,0,0\n1,-1,1\n2,-0.5,0\n3,-2,1\n").unwrap();
    let config = tmp.path().join("d.toml");
    fs::write(&config, "[domain]\nkind = \"half-space\"\nnormal = [1.0]\noffset = 0.0\n").unwrap();
    let out = tmp.path().join("out");
    let r = rsde(&["skorokhod", "--input", input.to_str().unwrap(), "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let xs: Vec<f64> = fs::read_to_string(out.join("solution.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(xs, vec![0.0, 0.0, 0.5, 0.0]);
    let lemma: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("lemma1.json")).unwrap()).unwrap();
    assert_eq!(lemma["k_total"].as_f64(), Some(2.0));
}

#[test]
fn skorokhod_inside_the_domain_has_no_push() {
    let tmp = TempDir::new().unwrap();
    let input = tmp.path().join("z.csv");
    fs::write(&input, "t,z1,z2,is_jump\n0,0,0,0\n0.5,0.2,0.1,0\n1,-0.3,0.4,1\n").unwrap();
    let config = tmp.path().join("d.toml");
    fs::write(&config, "[domain]\nkind = \"ball\"\ncenter = [0.0, 0.0]\nradius = 1.0\n").unwrap();
    let out = tmp.path().join("out");
    let r = rsde(&["skorokhod", "--input", input.to_str().unwrap(), "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.stdout.contains("0 pushes"));
    for l in fs::read_to_string(out.join("solution.csv")).unwrap().lines().skip(1) {
        let f: Vec<f64> = l.split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(&f[3..], [0.0, 0.0, 0.0]);
    }
}

#[test]
fn malformed_input_exits_with_config_error() {
    let tmp = TempDir::new().unwrap();
    let input = tmp.path().join("z.csv");
    fs::write(&input, "time,z1,is_jump\n0,0,0\n").unwrap();
    let config = tmp.path().join("d.toml");
    fs::write(&config, "[domain]\nkind = \"half-space\"\nnormal = [1.0]\noffset = 0.0\n").unwrap();
    let r = rsde(&["skorokhod", "--input", input.to_str().unwrap(), "--config", config.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(r.code, EXIT_CONFIG);
    assert_eq!(error_kind(&r.stderr), "Parse");

    fs::write(&config, "[domain]\nkind = \"sphere\"\n").unwrap();
    let r = rsde(&["simulate", "--config", config.to_str().unwrap()]);
    assert_eq!(r.code, EXIT_CONFIG);
    assert_eq!(rsde(&["frobnicate"]).code, EXIT_CONFIG);
    assert_eq!(rsde(&["--help"]).code, 0);
}

#[test]
fn converge_writes_tables() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(tmp.path(), &small_config());
    let out = tmp.path().join("out");
    let r = rsde(&["converge", "--config", &config, "--out", out.to_str().unwrap(), "--jobs", "2"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let csv = fs::read_to_string(out.join("rate_table.csv")).unwrap();
    assert_eq!(csv.trim_end(), r.stdout.trim_end());
    assert!(csv.starts_with("mesh,err_unif_med,err_unif_p90,err_grid_med,k_err_med,slope_partial"));
    assert_eq!(csv.lines().count(), 3);
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("rate_table.json")).unwrap()).unwrap();
    assert_eq!(json["provenance"]["config_hash"].as_str().unwrap(), small_config().hash());
}

#[test]
fn print_config_round_trips() {
    let r = rsde(&["simulate", "--print-config", "--seed", "42"]);
    assert_eq!(r.code, 0);
    let cfg = ExperimentConfig::from_toml(&r.stdout).unwrap();
    let mut expected = ExperimentConfig::default();
    expected.seed = 42;
    assert_eq!(cfg, expected);
}
