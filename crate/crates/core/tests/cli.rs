//! Command-line behaviour: files written, exit codes, determinism.

use std::path::Path;
use std::process::Command as Process;

use clap::Parser;
use tempfile::TempDir;

use momtomo::cli::{read_fields, run, sinogram_file, Cli, GridFile, ReportFile, RunConfig};
use momtomo::forward::MomentSinogram;

const SMALL: &str = r#"
[grid]
resolution = 32
n_angles = 64
n_boundary = 64
order = 16
"#;

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn cli(args: &[&str]) -> Cli {
    Cli::try_parse_from(std::iter::once("momtomo").chain(args.iter().copied())).unwrap()
}

fn out_arg(dir: &TempDir, sub: &str) -> String {
    dir.path().join(sub).to_string_lossy().into_owned()
}

#[test]
fn phantom_is_deterministic_and_seeded() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "run.toml", SMALL);
    let (a, b, c) = (out_arg(&dir, "a"), out_arg(&dir, "b"), out_arg(&dir, "c"));
    run(&cli(&["--config", &cfg, "--out", &a, "phantom"])).unwrap();
    run(&cli(&["--config", &cfg, "--out", &b, "phantom"])).unwrap();
    run(&cli(&["--config", &cfg, "--out", &c, "--seed", "7", "phantom"])).unwrap();
    // headers record the output directory, so compare the sampled arrays
    let arrays = |d: &str| GridFile::read(&Path::new(d).join("fields.grid")).unwrap().arrays;
    assert_eq!(arrays(&a), arrays(&b));
    assert_ne!(arrays(&a), arrays(&c));
    let g = GridFile::read(&Path::new(&c).join("fields.grid")).unwrap();
    assert_eq!(g.header.kind, "fields");
    assert_eq!(g.header.resolution, 32);
    assert_eq!(g.header.config.phantom.seed, 7);
    assert!(Path::new(&a).join("attenuation.grid").exists());
}

#[test]
fn empty_explicit_phantom_gives_zero_fields() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "run.toml", &format!("{SMALL}\n[phantom]\nkind = \"explicit\"\n"));
    let out = out_arg(&dir, "o");
    let outcome = run(&cli(&["--config", &cfg, "--out", &out, "phantom"])).unwrap();
    let g = GridFile::read(&Path::new(&out).join("fields.grid")).unwrap();
    let fp = read_fields(&g, &outcome.config.mesh().unwrap()).unwrap();
    assert!(fp.grids().iter().all(|a| a.iter().all(|&v| v == 0.0)));
}

#[test]
fn bump_outside_support_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let text = format!(
        "{SMALL}\n[phantom]\nkind = \"explicit\"\nsupport_radius = 0.5\n\n[[phantom.bumps]]\ncomponent = \"f11\"\namplitude = 1.0\ncenter = [0.8, 0.0]\nwidth = 0.1\n"
    );
    let cfg = write_config(dir.path(), "run.toml", &text);
    let out = out_arg(&dir, "o");
    let err = run(&cli(&["--config", &cfg, "--out", &out, "phantom"])).unwrap_err();
    assert_eq!(err.exit_code(), 2, "{err}");
}

#[test]
fn mismatched_grid_is_rejected() {
    let dir = TempDir::new().unwrap();
    let small = write_config(dir.path(), "small.toml", SMALL);
    let big = write_config(dir.path(), "big.toml", &SMALL.replace("resolution = 32", "resolution = 64"));
    let out = out_arg(&dir, "o");
    run(&cli(&["--config", &small, "--out", &out, "phantom"])).unwrap();
    let fields = Path::new(&out).join("fields.grid").to_string_lossy().into_owned();
    let err = run(&cli(&["--config", &big, "--out", &out, "forward", "--fields", &fields])).unwrap_err();
    assert_eq!(err.exit_code(), 2, "{err}");
}

#[test]
fn attenuated_reconstruction_needs_an_attenuation_file() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "run.toml", SMALL);
    let out = out_arg(&dir, "o");
    run(&cli(&["--config", &cfg, "--out", &out, "--mode", "attenuated", "phantom"])).unwrap();
    run(&cli(&["--config", &cfg, "--out", &out, "--mode", "attenuated", "forward"])).unwrap();
    let err = run(&cli(&["--config", &cfg, "--out", &out, "--mode", "attenuated", "reconstruct"])).unwrap_err();
    assert_eq!(err.exit_code(), 2, "{err}");
    let att = Path::new(&out).join("attenuation.grid").to_string_lossy().into_owned();
    let fields = Path::new(&out).join("fields.grid").to_string_lossy().into_owned();
    let outcome = run(&cli(&[
        "--config", &cfg, "--out", &out, "--mode", "attenuated", "reconstruct", "--attenuation", &att, "--truth", &fields,
    ]))
    .unwrap();
    let report = ReportFile::read(&Path::new(&out).join("report.toml")).unwrap();
    let r = &report.report;
    assert!(r.rel_l2_f.is_some_and(f64::is_finite) && r.rel_l2_tensor.is_some_and(f64::is_finite));
    assert_eq!(Some(report.report), outcome.report);
}

#[test]
fn sinogram_metadata_survives_the_file() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "run.toml", SMALL);
    let out = out_arg(&dir, "o");
    run(&cli(&["--config", &cfg, "--out", &out, "phantom"])).unwrap();
    run(&cli(&["--config", &cfg, "--out", &out, "--noise", "0.01", "forward"])).unwrap();
    let g = GridFile::read(&Path::new(&out).join("sinogram.grid")).unwrap();
    assert_eq!(g.header.kind, "sinogram");
    assert_eq!(g.header.meta.get("noise").and_then(|v| v.as_float()), Some(0.01));
    assert_eq!(g.header.meta.get("attenuated").and_then(|v| v.as_bool()), Some(false));
    assert_eq!(g.header.meta.get("n_angles").and_then(|v| v.as_integer()), Some(64));
    assert_eq!(g.header.config.noise, 0.01);
}

#[test]
fn zero_sinogram_reconstructs_zero_fields() {
    let dir = TempDir::new().unwrap();
    let text = SMALL.to_string();
    let cfg = write_config(dir.path(), "run.toml", &text);
    let config = RunConfig::from_toml(&text).unwrap();
    let mesh = config.mesh().unwrap();
    let ms = MomentSinogram::zeros(mesh.domain, 64, 64);
    let sino = dir.path().join("zero.grid");
    sinogram_file(&ms, &mesh, &config, toml::Table::new()).write(&sino).unwrap();
    let out = out_arg(&dir, "o");
    run(&cli(&["--config", &cfg, "--out", &out, "reconstruct", "--sinogram", &sino.to_string_lossy()])).unwrap();
    let fp = read_fields(&GridFile::read(&Path::new(&out).join("recon.grid")).unwrap(), &mesh).unwrap();
    assert!(fp.grids().iter().all(|a| a.iter().all(|&v| v == 0.0)));
}

#[test]
fn binary_reports_success_and_config_errors() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "run.toml", SMALL);
    let out = out_arg(&dir, "o");
    let status = Process::new(env!("CARGO_BIN_EXE_momtomo"))
        .args(["--config", &cfg, "--out", &out, "--threads", "2", "roundtrip"])
        .env("RUST_LOG", "warn")
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let stdout = String::from_utf8_lossy(&status.stdout);
    assert!(stdout.contains("relative L2 error"), "{stdout}");
    let report = ReportFile::read(&Path::new(&out).join("report.toml")).unwrap();
    assert!(report.report.ratio.is_some_and(|r| r.is_finite() && r > 0.0));

    let bad = write_config(dir.path(), "bad.toml", "[grid]\nresolution = 100\n");
    let status = Process::new(env!("CARGO_BIN_EXE_momtomo")).args(["--config", &bad, "--out", &out, "phantom"]).output().unwrap();
    assert_eq!(status.status.code(), Some(2));
    let unknown = write_config(dir.path(), "unknown.toml", "[grid]\nresoluton = 64\n");
    let status = Process::new(env!("CARGO_BIN_EXE_momtomo")).args(["--config", &unknown, "--out", &out, "phantom"]).output().unwrap();
    assert_eq!(status.status.code(), Some(2));
}
