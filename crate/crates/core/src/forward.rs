//! Attenuated moment ray transforms of orders 0, 1 and 2 sampled on Γ₊.

use std::f64::consts::PI;

use ndarray::{Array2, Array3, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::fields::{pairing, FieldPair, Gaussian};
use crate::geometry::{
    classify_boundary, direction, dot, BoundaryClass, BoundaryNodes, Domain, Mesh, Ray,
};
pub use crate::interp::Interpolation;
use crate::interp::Sampler;
use crate::{Error, Point, Result};

/// Attenuation coefficient as a sum of non-negative Gaussians.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AttenuationSpec {
    #[serde(default)]
    pub bumps: Vec<Gaussian>,
}

impl AttenuationSpec {
    pub fn zero() -> Self {
        AttenuationSpec::default()
    }

    /// Single bump of the given peak value.
    pub fn bump(peak: f64, center: Point, width: f64) -> Self {
        AttenuationSpec { bumps: vec![Gaussian { amplitude: peak, center, width }] }
    }

    pub fn eval(&self, x: Point) -> f64 {
        self.bumps.iter().map(|g| g.eval(x)).sum()
    }

    pub fn validate(&self) -> Result<()> {
        for g in &self.bumps {
            if !(g.amplitude >= 0.0 && g.width > 0.0) {
                return Err(Error::config("attenuation bumps need amplitude ≥ 0 and width > 0"));
            }
        }
        Ok(())
    }
}

/// Attenuation sampled on the mesh. Line integrals only see the part inside Ω.
#[derive(Debug, Clone, PartialEq)]
pub struct Attenuation {
    pub values: Array2<f64>,
}

impl Attenuation {
    pub fn zero(n: usize) -> Self {
        Attenuation { values: Array2::zeros((n, n)) }
    }

    pub fn from_spec(spec: &AttenuationSpec, mesh: &Mesh) -> Result<Self> {
        spec.validate()?;
        let n = mesh.n;
        Ok(Attenuation {
            values: Array2::from_shape_fn((n, n), |(iy, ix)| spec.eval(mesh.node(ix, iy))),
        })
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// Checks a ≥ 0 everywhere and, when `strict`, a > 0 at every inside node.
    pub fn validate(&self, mesh: &Mesh, strict: bool) -> Result<()> {
        if self.values.dim() != (mesh.n, mesh.n) {
            return Err(Error::arg("attenuation grid does not match the mesh"));
        }
        if self.values.iter().any(|&v| !(v >= 0.0)) {
            return Err(Error::config("attenuation must be non-negative"));
        }
        if strict && self.values.iter().zip(&mesh.inside).any(|(&v, &ins)| ins && v <= 0.0) {
            return Err(Error::config("attenuated mode needs a > 0 inside the domain"));
        }
        Ok(())
    }
}

/// Sampling and quadrature settings for the forward transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForwardConfig {
    pub n_angles: usize,
    pub n_boundary: usize,
    /// Step of the composite Simpson rule along rays.
    pub ray_step: f64,
    pub interpolation: Interpolation,
}

impl ForwardConfig {
    /// Defaults tied to a mesh: ray step h/2 and spectral interpolation.
    pub fn for_mesh(mesh: &Mesh, n_angles: usize, n_boundary: usize) -> Self {
        ForwardConfig {
            n_angles,
            n_boundary,
            ray_step: 0.5 * mesh.h,
            interpolation: Interpolation::default(),
        }
    }
}

/// M_a^(k) for k = 0, 1, 2 on the (boundary node × direction) grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSinogram {
    pub domain: Domain,
    /// `data[[k, i, j]]` for boundary node i and direction j.
    pub data: Array3<f64>,
    /// True where (x_i, φ_j) belongs to Γ₊.
    pub outgoing: Array2<bool>,
}

impl MomentSinogram {
    pub fn zeros(domain: Domain, n_boundary: usize, n_angles: usize) -> Self {
        let nodes = BoundaryNodes::new(&domain, n_boundary);
        let outgoing = Array2::from_shape_fn((n_boundary, n_angles), |(i, j)| {
            classify_boundary(&domain, nodes.points[i], angle(j, n_angles)) == BoundaryClass::Outgoing
        });
        MomentSinogram { domain, data: Array3::zeros((3, n_boundary, n_angles)), outgoing }
    }

    pub fn n_boundary(&self) -> usize {
        self.data.len_of(Axis(1))
    }

    pub fn n_angles(&self) -> usize {
        self.data.len_of(Axis(2))
    }

    pub fn angle(&self, j: usize) -> f64 {
        angle(j, self.n_angles())
    }

    pub fn boundary(&self) -> BoundaryNodes {
        BoundaryNodes::new(&self.domain, self.n_boundary())
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0.0)
    }

    /// Adds `other` scaled by `b` to `a·self`.
    pub fn combine(&self, a: f64, other: &MomentSinogram, b: f64) -> Result<MomentSinogram> {
        if self.data.dim() != other.data.dim() {
            return Err(Error::arg("sinogram shapes differ"));
        }
        let mut out = self.clone();
        out.data.zip_mut_with(&other.data, |x, &y| *x = a * *x + b * y);
        Ok(out)
    }

    /// Additive Gaussian noise with standard deviation `level` times each layer's peak magnitude.
    pub fn add_noise(&mut self, level: f64, seed: u64) -> Result<()> {
        if level == 0.0 {
            return Ok(());
        }
        if !(level > 0.0 && level.is_finite()) {
            return Err(Error::config(format!("noise level {level} must be non-negative")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for k in 0..3 {
            let peak = self.data.index_axis(Axis(0), k).fold(0.0f64, |m, v| m.max(v.abs()));
            let dist = Normal::new(0.0, level * peak.max(f64::MIN_POSITIVE))
                .map_err(|e| Error::config(e.to_string()))?;
            let mut layer = self.data.index_axis_mut(Axis(0), k);
            for ((i, j), v) in layer.indexed_iter_mut() {
                if self.outgoing[[i, j]] {
                    *v += dist.sample(&mut rng);
                }
            }
        }
        Ok(())
    }
}

/// Direction angle of sample j out of `n` uniform directions.
#[inline]
pub fn angle(j: usize, n: usize) -> f64 {
    2.0 * PI * j as f64 / n as f64
}

/// Evaluates ray integrals of a field pair and an attenuation sampled on a mesh.
pub struct Projector {
    domain: Domain,
    fields: [Sampler; 5],
    active: [bool; 5],
    att: Sampler,
    attenuated: bool,
    /// Field samples beyond this radius are known to vanish.
    reach: f64,
    step: f64,
}

impl Projector {
    pub fn new(mesh: &Mesh, fp: &FieldPair, att: &Attenuation, cfg: &ForwardConfig) -> Result<Self> {
        if fp.n() != mesh.n || att.values.nrows() != mesh.n {
            return Err(Error::arg("field or attenuation grid does not match the mesh"));
        }
        if !(cfg.ray_step > 0.0) {
            return Err(Error::config("ray step must be positive"));
        }
        let mk = |g: &Array2<f64>| Sampler::new(g, mesh, cfg.interpolation);
        let fields = [mk(&fp.f1), mk(&fp.f2), mk(&fp.f11), mk(&fp.f12), mk(&fp.f22)];
        let active = [0, 1, 2, 3, 4].map(|c| !fields[c].is_zero());
        Ok(Projector {
            domain: mesh.domain,
            fields,
            active,
            att: mk(&att.values),
            attenuated: !att.is_zero(),
            reach: fp.support_radius + 4.0 * mesh.h,
            step: cfg.ray_step,
        })
    }

    fn integrand(&self, x: Point, phi: f64) -> f64 {
        if x[0].hypot(x[1]) > self.reach {
            return 0.0;
        }
        let mut v = [0.0; 5];
        for c in 0..5 {
            if self.active[c] {
                v[c] = self.fields[c].eval(x);
            }
        }
        pairing(v, phi)
    }

    /// ∫_s^∞ a(Π_φ(x) + t u_φ) dt, truncated to the chord inside Ω.
    pub fn tail(&self, ray: &Ray, s: f64) -> f64 {
        if !self.attenuated {
            return 0.0;
        }
        let foot = ray.foot();
        let Some((lo, hi)) = self.domain.line_span(foot, ray.angle) else {
            return 0.0;
        };
        let a = s.max(lo);
        if a >= hi {
            return 0.0;
        }
        let u = ray.direction();
        let m = simpson_intervals(hi - a, self.step);
        let d = (hi - a) / m as f64;
        let mut acc = 0.0;
        for i in 0..=m {
            let t = a + i as f64 * d;
            let w = simpson_weight(i, m);
            acc += w * self.att.eval([foot[0] + t * u[0], foot[1] + t * u[1]]);
        }
        acc * d / 3.0
    }

    /// All three moments along the line of `ray`, integrated over its chord.
    pub fn moments(&self, ray: &Ray) -> [f64; 3] {
        let foot = ray.foot();
        let Some((lo, hi)) = self.domain.line_span(foot, ray.angle) else {
            return [0.0; 3];
        };
        if hi - lo <= 0.0 {
            return [0.0; 3];
        }
        let u = ray.direction();
        let m = simpson_intervals(hi - lo, self.step);
        let d = (hi - lo) / m as f64;
        let pts: Vec<Point> = (0..=m)
            .map(|i| {
                let s = lo + i as f64 * d;
                [foot[0] + s * u[0], foot[1] + s * u[1]]
            })
            .collect();
        let decay = if self.attenuated {
            let a: Vec<f64> = pts.iter().map(|&x| self.att.eval(x)).collect();
            cumulative_tail(&a, d).into_iter().map(|t| (-t).exp()).collect()
        } else {
            vec![1.0; m + 1]
        };
        let mut acc = [0.0; 3];
        for (i, &x) in pts.iter().enumerate() {
            let f = self.integrand(x, ray.angle);
            if f == 0.0 {
                continue;
            }
            let s = lo + i as f64 * d;
            let v = simpson_weight(i, m) * f * decay[i];
            acc[0] += v;
            acc[1] += v * s;
            acc[2] += v * s * s;
        }
        acc.map(|v| v * d / 3.0)
    }

    /// Samples all outgoing boundary pairs.
    pub fn sinogram(&self, n_boundary: usize, n_angles: usize) -> MomentSinogram {
        let mut ms = MomentSinogram::zeros(self.domain, n_boundary, n_angles);
        let nodes = BoundaryNodes::new(&self.domain, n_boundary);
        let rows: Vec<Vec<[f64; 3]>> = (0..n_boundary)
            .into_par_iter()
            .map(|i| {
                (0..n_angles)
                    .map(|j| {
                        if ms.outgoing[[i, j]] {
                            self.moments(&Ray::new(nodes.points[i], angle(j, n_angles)))
                        } else {
                            [0.0; 3]
                        }
                    })
                    .collect()
            })
            .collect();
        for (i, row) in rows.iter().enumerate() {
            for (j, m) in row.iter().enumerate() {
                for k in 0..3 {
                    ms.data[[k, i, j]] = m[k];
                }
            }
        }
        ms
    }
}

pub(crate) fn simpson_intervals(len: f64, step: f64) -> usize {
    let m = (len / step).ceil() as usize;
    (m + m % 2).max(2)
}

#[inline]
pub(crate) fn simpson_weight(i: usize, m: usize) -> f64 {
    if i == 0 || i == m {
        1.0
    } else if i % 2 == 1 {
        4.0
    } else {
        2.0
    }
}

/// Tail integrals T_i = ∫_{x_i}^{x_last} a for uniform samples with spacing `d`,
/// using fourth-order interval rules.
pub(crate) fn cumulative_tail(a: &[f64], d: f64) -> Vec<f64> {
    let n = a.len();
    let mut out = vec![0.0; n];
    if n < 2 {
        return out;
    }
    if n < 4 {
        for i in (0..n - 1).rev() {
            out[i] = out[i + 1] + 0.5 * d * (a[i] + a[i + 1]);
        }
        return out;
    }
    let c = d / 24.0;
    for i in (0..n - 1).rev() {
        let piece = if i == 0 {
            c * (9.0 * a[0] + 19.0 * a[1] - 5.0 * a[2] + a[3])
        } else if i == n - 2 {
            c * (9.0 * a[n - 1] + 19.0 * a[n - 2] - 5.0 * a[n - 3] + a[n - 4])
        } else {
            c * (-a[i - 1] + 13.0 * a[i] + 13.0 * a[i + 1] - a[i + 2])
        };
        out[i] = out[i + 1] + piece;
    }
    out
}

/// One layer M_a^(k) of the sinogram.
pub fn moment_transform(
    mesh: &Mesh,
    fp: &FieldPair,
    att: &Attenuation,
    k: usize,
    cfg: &ForwardConfig,
) -> Result<Array2<f64>> {
    if k > 2 {
        return Err(Error::arg(format!("moment order {k} is not in 0..=2")));
    }
    let ms = forward_all(mesh, fp, att, cfg)?;
    Ok(ms.data.index_axis(Axis(0), k).to_owned())
}

/// All three moment layers.
pub fn forward_all(
    mesh: &Mesh,
    fp: &FieldPair,
    att: &Attenuation,
    cfg: &ForwardConfig,
) -> Result<MomentSinogram> {
    if cfg.n_angles < 4 || cfg.n_boundary < 4 {
        return Err(Error::config("need at least 4 angles and 4 boundary nodes"));
    }
    let p = Projector::new(mesh, fp, att, cfg)?;
    Ok(p.sinogram(cfg.n_boundary, cfg.n_angles))
}

/// ∫_s^∞ a along the line of `ray`, truncated at the chord exit.
pub fn attenuation_tail(mesh: &Mesh, att: &Attenuation, ray: &Ray, s: f64) -> Result<f64> {
    let fp = FieldPair::zeros(mesh.n, 0.0);
    let cfg = ForwardConfig::for_mesh(mesh, 4, 4);
    Ok(Projector::new(mesh, &fp, att, &cfg)?.tail(ray, s))
}

/// Signed foot-point offset x·u_φ of a boundary pair.
#[inline]
pub fn exit_offset(x: Point, phi: f64) -> f64 {
    dot(x, direction(phi))
}
