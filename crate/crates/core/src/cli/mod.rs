//! Command-line front end: phantom, forward, reconstruct, roundtrip and
//! convergence commands over grid files and TOML configs.

mod config;
mod grid;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use log::info;
use serde::{Deserialize, Serialize};

pub use config::{DomainConfig, GridConfig, PhantomConfig, PhantomKind, RunConfig};
pub use grid::{
    attenuation_file, fields_file, read_attenuation, read_fields, read_sinogram, sinogram_file, ArrayEntry, GridFile,
    Header,
};

use crate::fields::FieldPair;
use crate::forward::{forward_all, Attenuation, MomentSinogram};
use crate::geometry::Mesh;
use crate::pipeline::{compare, reconstruct, stability_ratio, Mode, ReconstructionReport};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    NonAttenuated,
    Attenuated,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::NonAttenuated => Mode::NonAttenuated,
            ModeArg::Attenuated => Mode::Attenuated,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "momtomo", version, about = "Moment ray transforms and A-analytic tensor tomography")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML run configuration; defaults apply to missing keys.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides `out_dir`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Phantom seed (overrides `phantom.seed`).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Cap on worker threads.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Relative noise level added to simulated data.
    #[arg(long, global = true)]
    pub noise: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub mode: Option<ModeArg>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample the phantom and attenuation on the mesh.
    Phantom,
    /// Simulate the moment sinogram of a fields file.
    Forward {
        /// Fields grid; defaults to `<out>/fields.grid`.
        #[arg(long)]
        fields: Option<PathBuf>,
        /// Attenuation grid; without it the config's attenuation is used in attenuated mode.
        #[arg(long)]
        attenuation: Option<PathBuf>,
    },
    /// Invert a sinogram file.
    Reconstruct {
        /// Sinogram grid; defaults to `<out>/sinogram.grid`.
        #[arg(long)]
        sinogram: Option<PathBuf>,
        /// Attenuation grid, required in attenuated mode.
        #[arg(long)]
        attenuation: Option<PathBuf>,
        /// Fields grid to compare against.
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Phantom, forward, reconstruct and compare in one go.
    Roundtrip,
    /// Round trips at successively doubled resolutions.
    Convergence {
        /// Number of resolutions, ending at the configured one.
        #[arg(long, default_value_t = 3)]
        levels: usize,
    },
}

/// Report file written by `reconstruct` and `roundtrip`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub config: RunConfig,
    pub report: ReconstructionReport,
}

impl ReportFile {
    pub fn read(path: &Path) -> Result<Self> {
        toml::from_str(&std::fs::read_to_string(path)?).map_err(|e| Error::Format(e.to_string()))
    }

    fn write(&self, path: &Path) -> Result<()> {
        let text = toml::to_string(self).map_err(|e| Error::Format(e.to_string()))?;
        Ok(std::fs::write(path, text)?)
    }
}

/// One resolution of a convergence study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceLevel {
    pub resolution: usize,
    pub rel_l2_f: f64,
    pub rel_l2_tensor: f64,
    pub rel_l2_total: f64,
    pub transport_residual: [f64; 3],
    /// log₂ of the total-error ratio to the previous level.
    pub error_order: Option<f64>,
    /// log₂ of the worst transport-residual ratio to the previous level.
    pub residual_order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceFile {
    pub config: RunConfig,
    pub levels: Vec<ConvergenceLevel>,
}

/// Resolved settings and the files a command wrote.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub config: RunConfig,
    pub written: Vec<PathBuf>,
    pub report: Option<ReconstructionReport>,
}

/// Reads the config file and applies the command-line overrides.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::from_toml(&std::fs::read_to_string(p)?)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.out_dir = out.to_string_lossy().into_owned();
    }
    if let Some(s) = cli.seed {
        cfg.phantom.seed = s;
    }
    if let Some(n) = cli.noise {
        cfg.noise = n;
    }
    if let Some(m) = cli.mode {
        cfg.mode = m.into();
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Error::config("--threads must be positive"));
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            log::warn!("thread pool already initialised: {e}");
        }
    }
    let cfg = resolve_config(cli)?;
    let out = PathBuf::from(&cfg.out_dir);
    std::fs::create_dir_all(&out)?;
    let mut outcome = Outcome { config: cfg.clone(), written: Vec::new(), report: None };
    match &cli.command {
        Command::Phantom => cmd_phantom(&cfg, &out, &mut outcome)?,
        Command::Forward { fields, attenuation } => {
            let fields = fields.clone().unwrap_or_else(|| out.join("fields.grid"));
            cmd_forward(&cfg, &fields, attenuation.as_deref(), &out, &mut outcome)?
        }
        Command::Reconstruct { sinogram, attenuation, truth } => {
            let sinogram = sinogram.clone().unwrap_or_else(|| out.join("sinogram.grid"));
            cmd_reconstruct(&cfg, &sinogram, attenuation.as_deref(), truth.as_deref(), &out, &mut outcome)?
        }
        Command::Roundtrip => cmd_roundtrip(&cfg, &out, &mut outcome)?,
        Command::Convergence { levels } => cmd_convergence(&cfg, *levels, &out, &mut outcome)?,
    }
    Ok(outcome)
}

fn cmd_phantom(cfg: &RunConfig, out: &Path, outcome: &mut Outcome) -> Result<()> {
    let mesh = cfg.mesh()?;
    let fp = cfg.phantom.build(&mesh)?;
    let att = cfg.attenuation_on(&mesh)?;
    let p = out.join("fields.grid");
    fields_file(&fp, &mesh, cfg).write(&p)?;
    outcome.written.push(p);
    let p = out.join("attenuation.grid");
    attenuation_file(&att, &mesh, cfg).write(&p)?;
    outcome.written.push(p);
    Ok(())
}

fn simulate(cfg: &RunConfig, mesh: &Mesh, fp: &FieldPair, att: &Attenuation) -> Result<(MomentSinogram, toml::Table)> {
    let fc = cfg.forward_config(mesh);
    let t = Instant::now();
    let mut ms = forward_all(mesh, fp, att, &fc)?;
    info!("forward transform took {:.2?}", t.elapsed());
    if cfg.noise > 0.0 {
        ms.add_noise(cfg.noise, cfg.noise_seed)?;
    }
    let mut meta = toml::Table::try_from(fc).map_err(|e| Error::Format(e.to_string()))?;
    meta.insert("quadrature".into(), "composite Simpson along rays".into());
    meta.insert("attenuated".into(), (!att.is_zero()).into());
    meta.insert("noise".into(), cfg.noise.into());
    Ok((ms, meta))
}

fn cmd_forward(cfg: &RunConfig, fields: &Path, att_path: Option<&Path>, out: &Path, outcome: &mut Outcome) -> Result<()> {
    let mesh = cfg.mesh()?;
    let fp = read_fields(&GridFile::read(fields)?, &mesh)?;
    let att = match (att_path, cfg.mode) {
        (Some(p), _) => read_attenuation(&GridFile::read(p)?, &mesh)?,
        (None, Mode::Attenuated) => cfg.attenuation_on(&mesh)?,
        (None, Mode::NonAttenuated) => Attenuation::zero(mesh.n),
    };
    let (ms, meta) = simulate(cfg, &mesh, &fp, &att)?;
    let p = out.join("sinogram.grid");
    sinogram_file(&ms, &mesh, cfg, meta).write(&p)?;
    outcome.written.push(p);
    Ok(())
}

fn cmd_reconstruct(
    cfg: &RunConfig,
    sinogram: &Path,
    att_path: Option<&Path>,
    truth: Option<&Path>,
    out: &Path,
    outcome: &mut Outcome,
) -> Result<()> {
    let mesh = cfg.mesh()?;
    let att = match (cfg.mode, att_path) {
        (Mode::Attenuated, None) => {
            return Err(Error::config("attenuated mode needs --attenuation"));
        }
        (Mode::Attenuated, Some(p)) => Some(read_attenuation(&GridFile::read(p)?, &mesh)?),
        (Mode::NonAttenuated, _) => None,
    };
    let ms = read_sinogram(&GridFile::read(sinogram)?, &mesh)?;
    let truth = truth.map(|p| GridFile::read(p).and_then(|g| read_fields(&g, &mesh))).transpose()?;
    let t = Instant::now();
    let mut r = reconstruct(&ms, &mesh, att.as_ref(), &cfg.recon_config())?;
    info!("reconstruction took {:.2?}", t.elapsed());
    if let Some(fp) = &truth {
        r.report.set_errors(&compare(&r.fields, fp, &mesh));
    }
    write_results(cfg, &mesh, &r.fields, r.report, out, outcome)
}

fn write_results(
    cfg: &RunConfig,
    mesh: &Mesh,
    fields: &FieldPair,
    report: ReconstructionReport,
    out: &Path,
    outcome: &mut Outcome,
) -> Result<()> {
    let p = out.join("recon.grid");
    fields_file(fields, mesh, cfg).write(&p)?;
    outcome.written.push(p);
    let p = out.join("report.toml");
    ReportFile { config: cfg.clone(), report: report.clone() }.write(&p)?;
    outcome.written.push(p);
    outcome.report = Some(report);
    Ok(())
}

/// Full round trip at `resolution`, returning the reconstruction and the truth.
fn round_trip_at(cfg: &RunConfig, mesh: &Mesh) -> Result<(FieldPair, FieldPair, MomentSinogram, ReconstructionReport)> {
    let fp = cfg.phantom.build(mesh)?;
    let att = match cfg.mode {
        Mode::Attenuated => cfg.attenuation_on(mesh)?,
        Mode::NonAttenuated => Attenuation::zero(mesh.n),
    };
    let (ms, _) = simulate(cfg, mesh, &fp, &att)?;
    let a = (cfg.mode == Mode::Attenuated).then_some(&att);
    let mut r = reconstruct(&ms, mesh, a, &cfg.recon_config())?;
    r.report.set_errors(&compare(&r.fields, &fp, mesh));
    Ok((r.fields, fp, ms, r.report))
}

fn cmd_roundtrip(cfg: &RunConfig, out: &Path, outcome: &mut Outcome) -> Result<()> {
    let mesh = cfg.mesh()?;
    let t = Instant::now();
    let (recon, fp, ms, mut report) = round_trip_at(cfg, &mesh)?;
    let s = stability_ratio(&fp, &ms, &mesh, cfg.grid.order).map_err(|e| e.in_stage("stability"))?;
    report.set_stability(&s);
    info!("round trip took {:.2?}", t.elapsed());
    for (name, g) in [
        ("fields.grid", fields_file(&fp, &mesh, cfg)),
        ("sinogram.grid", sinogram_file(&ms, &mesh, cfg, toml::Table::new())),
    ] {
        let p = out.join(name);
        g.write(&p)?;
        outcome.written.push(p);
    }
    write_results(cfg, &mesh, &recon, report, out, outcome)
}

fn cmd_convergence(cfg: &RunConfig, levels: usize, out: &Path, outcome: &mut Outcome) -> Result<()> {
    if levels == 0 || cfg.grid.resolution >> (levels - 1) < 8 {
        return Err(Error::config(format!(
            "{levels} levels ending at {} would go below resolution 8",
            cfg.grid.resolution
        )));
    }
    let mut rows: Vec<ConvergenceLevel> = Vec::new();
    for l in (0..levels).rev() {
        let res = cfg.grid.resolution >> l;
        let mesh = cfg.mesh_at(res)?;
        let (_, _, _, report) = round_trip_at(cfg, &mesh)?;
        let order = |now: f64, before: Option<f64>| before.map(|b| (b / now).log2());
        let prev = rows.last();
        let worst = report.transport_residual.iter().cloned().fold(0.0, f64::max);
        let total = report.rel_l2_total.unwrap_or(f64::NAN);
        let row = ConvergenceLevel {
            resolution: res,
            rel_l2_f: report.rel_l2_f.unwrap_or(f64::NAN),
            rel_l2_tensor: report.rel_l2_tensor.unwrap_or(f64::NAN),
            rel_l2_total: total,
            transport_residual: report.transport_residual,
            error_order: order(total, prev.map(|p| p.rel_l2_total)),
            residual_order: order(worst, prev.map(|p| p.transport_residual.iter().cloned().fold(0.0, f64::max))),
        };
        info!("resolution {res}: total error {total:.3e}, transport residual {worst:.3e}");
        rows.push(row);
    }
    let p = out.join("convergence.toml");
    let text = toml::to_string(&ConvergenceFile { config: cfg.clone(), levels: rows })
        .map_err(|e| Error::Format(e.to_string()))?;
    std::fs::write(&p, text)?;
    outcome.written.push(p);
    Ok(())
}
