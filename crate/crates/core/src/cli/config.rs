use serde::{Deserialize, Serialize};

use crate::fields::{make_gradient_field, make_phantom, Bump, FieldPair, PhantomSpec, RandomPhantom, ScalarSpec};
use crate::forward::{Attenuation, AttenuationSpec, ForwardConfig};
use crate::geometry::{Domain, DomainKind, Mesh};
use crate::pipeline::{Mode, ReconConfig};
use crate::{Error, Result};

/// Shape of the domain as written in config files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DomainConfig {
    Disk { radius: f64 },
    Ellipse { a: f64, b: f64 },
}

impl Default for DomainConfig {
    fn default() -> Self {
        DomainConfig::Disk { radius: 1.0 }
    }
}

impl DomainConfig {
    pub fn build(&self) -> Result<Domain> {
        match *self {
            DomainConfig::Disk { radius } => Domain::disk(radius),
            DomainConfig::Ellipse { a, b } => Domain::ellipse(a, b),
        }
    }

    pub fn of(domain: &Domain) -> Self {
        match domain.kind {
            DomainKind::Disk { radius } => DomainConfig::Disk { radius },
            DomainKind::Ellipse { a, b } => DomainConfig::Ellipse { a, b },
        }
    }
}

/// Discretisation sizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    /// Mesh nodes per axis.
    pub resolution: usize,
    pub n_angles: usize,
    pub n_boundary: usize,
    /// Truncation N of the angular sequences.
    pub order: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { resolution: 128, n_angles: 256, n_boundary: 256, order: 32 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum PhantomKind {
    /// Seeded sum of Gaussian bumps in every component.
    #[default]
    Random,
    /// f = ∇ψ for a seeded random potential ψ, F = 0.
    Gradient,
    /// The bumps listed in the config.
    Explicit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhantomConfig {
    pub kind: PhantomKind,
    pub seed: u64,
    pub support_radius: f64,
    pub taper: f64,
    pub bumps_per_component: usize,
    pub center_spread: f64,
    pub width_min: f64,
    pub width_max: f64,
    pub amplitude: f64,
    pub bumps: Vec<Bump>,
}

impl Default for PhantomConfig {
    fn default() -> Self {
        let r = RandomPhantom::default();
        PhantomConfig {
            kind: PhantomKind::Random,
            seed: 1,
            support_radius: 0.7,
            taper: 0.0,
            bumps_per_component: r.bumps_per_component,
            center_spread: r.center_spread,
            width_min: r.width_min,
            width_max: r.width_max,
            amplitude: r.amplitude,
            bumps: Vec::new(),
        }
    }
}

impl PhantomConfig {
    fn random_params(&self) -> RandomPhantom {
        RandomPhantom {
            support_radius: self.support_radius,
            bumps_per_component: self.bumps_per_component,
            center_spread: self.center_spread,
            width_min: self.width_min,
            width_max: self.width_max,
            amplitude: self.amplitude,
        }
    }

    /// The field pair sampled on `mesh`.
    pub fn build(&self, mesh: &Mesh) -> Result<FieldPair> {
        match self.kind {
            PhantomKind::Random => {
                let mut spec = PhantomSpec::random(self.seed, &self.random_params());
                spec.taper = self.taper;
                make_phantom(&spec, mesh)
            }
            PhantomKind::Gradient => {
                let mut psi = ScalarSpec::random(self.seed, &self.random_params());
                psi.taper = self.taper;
                make_gradient_field(&psi, mesh)
            }
            PhantomKind::Explicit => {
                let spec = PhantomSpec { support_radius: self.support_radius, taper: self.taper, bumps: self.bumps.clone() };
                make_phantom(&spec, mesh)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        if self.kind != PhantomKind::Explicit
            && !(self.width_min > 0.0 && self.width_min <= self.width_max && self.center_spread >= 0.0)
        {
            return Err(Error::config("random phantom needs 0 < width_min ≤ width_max and center_spread ≥ 0"));
        }
        Ok(())
    }
}

/// Everything a command needs, read from a TOML file and command-line overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    pub out_dir: String,
    /// Relative Gaussian noise added to the sinogram, 0 for clean data.
    pub noise: f64,
    /// Seed of the noise generator.
    pub noise_seed: u64,
    pub mask_to_support: bool,
    pub domain: DomainConfig,
    pub grid: GridConfig,
    pub phantom: PhantomConfig,
    pub attenuation: AttenuationSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mode: Mode::NonAttenuated,
            out_dir: "out".into(),
            noise: 0.0,
            noise_seed: 0,
            mask_to_support: true,
            domain: DomainConfig::default(),
            grid: GridConfig::default(),
            phantom: PhantomConfig::default(),
            attenuation: AttenuationSpec::bump(0.3, [0.1, -0.05], 0.3),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let domain = self.domain.build()?;
        let g = &self.grid;
        if g.resolution < 8 || !g.resolution.is_power_of_two() {
            return Err(Error::config(format!("resolution {} must be a power of two ≥ 8", g.resolution)));
        }
        if g.order < 2 {
            return Err(Error::config("truncation order must be at least 2"));
        }
        if g.n_angles < 2 * g.order + 2 {
            return Err(Error::Aliasing { n_angles: g.n_angles, order: g.order });
        }
        if g.n_boundary < 8 {
            return Err(Error::config("need at least 8 boundary nodes"));
        }
        let rs = self.phantom.support_radius;
        if !(rs > 0.0 && rs < domain.inner_radius()) {
            return Err(Error::config(format!(
                "support radius {rs} must lie in (0, {})",
                domain.inner_radius()
            )));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(Error::config("noise level must be a finite non-negative number"));
        }
        self.phantom.validate()?;
        self.attenuation.validate()
    }

    pub fn mesh(&self) -> Result<Mesh> {
        Mesh::new(self.domain.build()?, self.grid.resolution)
    }

    pub fn mesh_at(&self, resolution: usize) -> Result<Mesh> {
        Mesh::new(self.domain.build()?, resolution)
    }

    pub fn attenuation_on(&self, mesh: &Mesh) -> Result<Attenuation> {
        Attenuation::from_spec(&self.attenuation, mesh)
    }

    pub fn forward_config(&self, mesh: &Mesh) -> ForwardConfig {
        ForwardConfig::for_mesh(mesh, self.grid.n_angles, self.grid.n_boundary)
    }

    pub fn recon_config(&self) -> ReconConfig {
        ReconConfig { mask_to_support: self.mask_to_support, ..ReconConfig::new(self.grid.order, self.phantom.support_radius) }
    }
}
