//! The integrating factor 𝓗 of an attenuation and the sequence maps e^{±G}
//! relating attenuated and non-attenuated transport problems.
//!
//! With u = u_φ and u⊥ = (−sin φ, cos φ),
//! 𝓗(z, φ) = ∫₀^∞ a(z + t u) dt − ½ (Ra − i H Ra)(z·u⊥, φ),
//! where Ra(s, φ) = ∫ a(s u⊥ + t u) dt and H is the Hilbert transform in s.
//! Then e^{∓𝓗} has only non-negative angular modes.

use std::f64::consts::PI;

use ndarray::Array2;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::aanalytic::SeqField;
use crate::forward::{angle, cumulative_tail, simpson_intervals, simpson_weight, Attenuation};
use crate::geometry::{direction, dot, normal_direction, BoundaryNodes, Domain, Mesh};
use crate::interp::{cubic_1d, cubic_weights, Interpolation, Sampler};
use crate::trace::BoundarySeq;
use crate::{Error, Point, Result, C64};

/// Tolerance on the negative-index coefficients of e^{∓𝓗}.
pub const SPEC_TOL: f64 = 1e-3;
/// Tolerance on the truncated convolution α∗β − δ.
pub const CONV_TOL: f64 = 1e-6;

/// Sampling used to build the integrating factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FactorConfig {
    pub n_angles: usize,
    /// Truncation N of the coefficient sequences.
    pub order: usize,
    /// Quadrature step along lines.
    pub ray_step: f64,
    /// Samples of the Radon profile in s before zero padding.
    pub hilbert_samples: usize,
    /// Length of the s window in domain diameters.
    pub window_diameters: f64,
    pub interpolation: Interpolation,
}

impl FactorConfig {
    pub fn for_mesh(mesh: &Mesh, n_angles: usize, order: usize) -> Self {
        FactorConfig {
            n_angles,
            order,
            ray_step: 0.5 * mesh.h,
            hilbert_samples: 4096,
            window_diameters: 4.0,
            interpolation: Interpolation::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_angles < 2 * self.order + 2 {
            return Err(Error::Aliasing { n_angles: self.n_angles, order: self.order });
        }
        if !(self.ray_step > 0.0) || self.hilbert_samples < 16 || !(self.window_diameters >= 1.0) {
            return Err(Error::config("invalid integrating-factor sampling"));
        }
        Ok(())
    }
}

/// Ra(s, φⱼ) on a uniform s grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RadonTable {
    pub s0: f64,
    pub ds: f64,
    /// `values[[j, i]]` at s = s0 + i·ds and direction j.
    pub values: Array2<f64>,
}

impl RadonTable {
    pub fn n_angles(&self) -> usize {
        self.values.nrows()
    }

    pub fn offset(&self, i: usize) -> f64 {
        self.s0 + i as f64 * self.ds
    }

    /// Cubic interpolation in s of row `j`.
    pub fn eval(&self, j: usize, s: f64) -> f64 {
        let row = self.values.row(j);
        cubic_1d(row.as_slice().expect("contiguous row"), self.s0, self.ds, s)
    }

    /// Row-wise Hilbert transform in s.
    pub fn hilbert(&self) -> RadonTable {
        let rows: Vec<Vec<f64>> = (0..self.n_angles())
            .into_par_iter()
            .map(|j| hilbert_transform(self.values.row(j).as_slice().expect("contiguous row")))
            .collect();
        let mut values = Array2::zeros(self.values.raw_dim());
        for (j, r) in rows.into_iter().enumerate() {
            values.row_mut(j).iter_mut().zip(r).for_each(|(d, v)| *d = v);
        }
        RadonTable { s0: self.s0, ds: self.ds, values }
    }
}

fn chord_integral(sampler: &Sampler, base: Point, u: Point, lo: f64, hi: f64, step: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let m = simpson_intervals(hi - lo, step);
    let d = (hi - lo) / m as f64;
    let mut acc = 0.0;
    for i in 0..=m {
        let t = lo + i as f64 * d;
        acc += simpson_weight(i, m) * sampler.eval([base[0] + t * u[0], base[1] + t * u[1]]);
    }
    acc * d / 3.0
}

/// Line integrals of the attenuation over chords of Ω, sampled on an s window
/// `window_diameters` domain diameters long.
pub fn radon_of_a(att: &Attenuation, mesh: &Mesh, cfg: &FactorConfig) -> Result<RadonTable> {
    cfg.validate()?;
    if att.values.dim() != (mesh.n, mesh.n) {
        return Err(Error::arg("attenuation grid does not match the mesh"));
    }
    let r = mesh.domain.outer_radius();
    let half = cfg.window_diameters * r;
    let ns = cfg.hilbert_samples;
    let ds = 2.0 * half / ns as f64;
    let s0 = -half;
    let mut values = Array2::zeros((cfg.n_angles, ns));
    if att.is_zero() {
        return Ok(RadonTable { s0, ds, values });
    }
    let sampler = Sampler::new(&att.values, mesh, cfg.interpolation);
    let rows: Vec<Vec<f64>> = (0..cfg.n_angles)
        .into_par_iter()
        .map(|j| {
            let phi = angle(j, cfg.n_angles);
            let (u, w) = (direction(phi), normal_direction(phi));
            (0..ns)
                .map(|i| {
                    let s = s0 + i as f64 * ds;
                    if s.abs() >= r {
                        return 0.0;
                    }
                    let foot = [s * w[0], s * w[1]];
                    match mesh.domain.line_span(foot, phi) {
                        Some((lo, hi)) => chord_integral(&sampler, foot, u, lo, hi, cfg.ray_step),
                        None => 0.0,
                    }
                })
                .collect()
        })
        .collect();
    for (j, row) in rows.into_iter().enumerate() {
        values.row_mut(j).iter_mut().zip(row).for_each(|(d, v)| *d = v);
    }
    Ok(RadonTable { s0, ds, values })
}

/// Hilbert transform (1/π) p.v.∫ f(t)/(s−t) dt of uniform samples.
///
/// Applies the band-limited form of the multiplier −i·sign(ξ), whose lattice
/// kernel is 2/(πm) at odd offsets m, as an aperiodic convolution through a
/// twice zero-padded FFT. Unlike the periodic multiplier this carries no
/// bias from the periodic images of the input.
pub fn hilbert_transform(samples: &[f64]) -> Vec<f64> {
    let n = samples.len();
    if n == 0 {
        return Vec::new();
    }
    let peak = samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let ends = samples[0].abs().max(samples[n - 1].abs());
    if peak > 0.0 && ends > 1e-3 * peak {
        log::warn!("hilbert transform input does not decay at the window ends ({ends:.2e}); expect truncation error");
    }
    let pad = 2 * n;
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(pad);
    let mut buf: Vec<C64> = samples.iter().map(|&v| C64::new(v, 0.0)).collect();
    buf.resize(pad, C64::new(0.0, 0.0));
    let mut kern = vec![C64::new(0.0, 0.0); pad];
    for m in (1..n).step_by(2) {
        let k = 2.0 / (PI * m as f64);
        kern[m] = C64::new(k, 0.0);
        kern[pad - m] = C64::new(-k, 0.0);
    }
    fwd.process(&mut buf);
    fwd.process(&mut kern);
    buf.iter_mut().zip(&kern).for_each(|(b, k)| *b *= k);
    planner.plan_fft_inverse(pad).process(&mut buf);
    let s = 1.0 / pad as f64;
    buf[..n].iter().map(|v| v.re * s).collect()
}

/// Cubic interpolation of uniform samples with constant extension past both ends.
fn cubic_clamped(values: &[f64], origin: f64, step: f64, x: f64) -> f64 {
    let n = values.len();
    let t = ((x - origin) / step).clamp(0.0, (n - 1) as f64);
    let i = t.floor();
    let w = cubic_weights(t - i);
    let i = i as isize;
    let mut acc = 0.0;
    for (k, wk) in w.iter().enumerate() {
        let j = (i - 1 + k as isize).clamp(0, n as isize - 1) as usize;
        acc += wk * values[j];
    }
    acc
}

/// Remaining integrals ∫_t^{exit} a along the chords of one direction.
struct TailTable {
    s0: f64,
    ds: f64,
    /// Per line: chord start, sample spacing and tail values.
    lines: Vec<Option<(f64, f64, Vec<f64>)>>,
}

impl TailTable {
    fn new(sampler: &Sampler, domain: &Domain, phi: f64, step: f64) -> Self {
        let r = domain.outer_radius();
        let count = (2.0 * r / step).ceil() as usize;
        let ds = 2.0 * r / count as f64;
        let s0 = -r;
        let (u, w) = (direction(phi), normal_direction(phi));
        let lines = (0..=count)
            .map(|i| {
                let s = s0 + i as f64 * ds;
                let foot = [s * w[0], s * w[1]];
                let (lo, hi) = domain.line_span(foot, phi)?;
                if hi - lo < 1e-12 {
                    return None;
                }
                let m = simpson_intervals(hi - lo, step);
                let d = (hi - lo) / m as f64;
                let a: Vec<f64> = (0..=m)
                    .map(|k| {
                        let t = lo + k as f64 * d;
                        sampler.eval([foot[0] + t * u[0], foot[1] + t * u[1]])
                    })
                    .collect();
                Some((lo, d, cumulative_tail(&a, d)))
            })
            .collect();
        TailTable { s0, ds, lines }
    }

    fn eval(&self, s: f64, t: f64) -> f64 {
        let x = (s - self.s0) / self.ds;
        let i = x.floor();
        let w = cubic_weights(x - i);
        let mut acc = 0.0;
        for (k, wk) in w.iter().enumerate() {
            let j = i as isize - 1 + k as isize;
            if j < 0 || j as usize >= self.lines.len() {
                continue;
            }
            if let Some((lo, d, tails)) = &self.lines[j as usize] {
                acc += wk * cubic_clamped(tails, *lo, *d, t);
            }
        }
        acc
    }
}

/// Samples of 𝓗(z, φⱼ) at arbitrary `points` (rows) and at boundary nodes.
///
/// Boundary values use the exact chord: the ray part vanishes on outgoing
/// directions and equals the full chord integral on incoming ones.
pub fn factor_samples(
    att: &Attenuation,
    mesh: &Mesh,
    cfg: &FactorConfig,
    points: &[Point],
    boundary: &BoundaryNodes,
) -> Result<(Array2<C64>, Array2<C64>)> {
    let radon = radon_of_a(att, mesh, cfg)?;
    let hilbert = radon.hilbert();
    let sampler = Sampler::new(&att.values, mesh, cfg.interpolation);
    let na = cfg.n_angles;
    let cols: Vec<(Vec<C64>, Vec<C64>)> = (0..na)
        .into_par_iter()
        .map(|j| {
            let phi = angle(j, na);
            let (u, w) = (direction(phi), normal_direction(phi));
            let table = TailTable::new(&sampler, &mesh.domain, phi, cfg.ray_step);
            let side = |s: f64| C64::new(-0.5 * radon.eval(j, s), 0.5 * hilbert.eval(j, s));
            let inner = points
                .iter()
                .map(|&z| {
                    let s = dot(z, w);
                    side(s) + table.eval(s, dot(z, u))
                })
                .collect();
            let outer = boundary
                .points
                .iter()
                .zip(&boundary.normals)
                .map(|(&z, nu)| {
                    let s = dot(z, w);
                    let ray = if dot(*nu, u) >= 0.0 {
                        0.0
                    } else {
                        match mesh.domain.line_span(z, phi) {
                            Some((lo, hi)) => chord_integral(&sampler, z, u, lo.max(0.0), hi, cfg.ray_step),
                            None => 0.0,
                        }
                    };
                    side(s) + ray
                })
                .collect();
            (inner, outer)
        })
        .collect();
    let mut inner = Array2::zeros((points.len(), na));
    let mut outer = Array2::zeros((boundary.len(), na));
    for (j, (a, b)) in cols.into_iter().enumerate() {
        inner.column_mut(j).iter_mut().zip(a).for_each(|(d, v)| *d = v);
        outer.column_mut(j).iter_mut().zip(b).for_each(|(d, v)| *d = v);
    }
    Ok((inner, outer))
}

/// Which of the two maps to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    /// e^{−G}, convolution with α.
    Minus,
    /// e^{+G}, convolution with β.
    Plus,
}

/// Coefficients αₙ, βₙ (n = 0..N) of e^{−𝓗} and e^{+𝓗} at the mesh and boundary nodes.
#[derive(Debug, Clone)]
pub struct IntegratingFactor {
    pub order: usize,
    pub n_angles: usize,
    pub alpha: SeqField,
    pub beta: SeqField,
    pub alpha_boundary: BoundarySeq,
    pub beta_boundary: BoundarySeq,
    /// Largest negative-index coefficient magnitude of e^{∓𝓗}.
    pub defect: f64,
    /// Per mesh node defect, zero at inactive nodes.
    pub node_defect: Array2<f64>,
    /// Largest defect over the boundary nodes.
    pub boundary_defect: f64,
    /// Largest entry of the truncated α∗β − δ.
    pub conv_error: f64,
    /// Largest |α₀β₀ − 1|.
    pub zeroth_error: f64,
}

impl IntegratingFactor {
    /// α = β = δ, the factor of a vanishing attenuation.
    pub fn identity(n: usize, n_boundary: usize, order: usize, n_angles: usize) -> Self {
        let mut alpha = SeqField::zeros(order + 1, n);
        alpha.entry_mut(0).fill(C64::new(1.0, 0.0));
        let mut ab = BoundarySeq::zeros(order + 1, n_boundary);
        ab.data.row_mut(0).fill(C64::new(1.0, 0.0));
        IntegratingFactor {
            order,
            n_angles,
            beta: alpha.clone(),
            alpha,
            beta_boundary: ab.clone(),
            alpha_boundary: ab,
            defect: 0.0,
            node_defect: Array2::zeros((n, n)),
            boundary_defect: 0.0,
            conv_error: 0.0,
            zeroth_error: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.order + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// True when the one-sidedness defect is within [`SPEC_TOL`].
    pub fn one_sided(&self) -> bool {
        self.defect <= SPEC_TOL
    }

    fn coeffs(&self, sign: Sign) -> (&SeqField, &BoundarySeq) {
        match sign {
            Sign::Minus => (&self.alpha, &self.alpha_boundary),
            Sign::Plus => (&self.beta, &self.beta_boundary),
        }
    }

    /// (e^{∓G}v)₋ₖ = Σₘ cₘ v₋ₖ₋ₘ at every mesh node.
    pub fn apply(&self, v: &SeqField, sign: Sign) -> Result<SeqField> {
        let (c, _) = self.coeffs(sign);
        if v.len() > c.len() {
            return Err(Error::Truncation { expected: c.len(), found: v.len() });
        }
        if v.n() != c.n() {
            return Err(Error::arg("sequence field does not match the integrating factor mesh"));
        }
        let len = v.len();
        let entries: Vec<Array2<C64>> = (0..len)
            .into_par_iter()
            .map(|k| {
                let mut out = Array2::zeros((v.n(), v.n()));
                for m in 0..len - k {
                    ndarray::Zip::from(&mut out)
                        .and(&c.entry(m))
                        .and(&v.entry(k + m))
                        .for_each(|o, &cm, &vk| *o += cm * vk);
                }
                out
            })
            .collect();
        Ok(SeqField::from_entries(entries))
    }

    /// The same convolution for boundary coefficients.
    pub fn apply_boundary(&self, v: &BoundarySeq, sign: Sign) -> Result<BoundarySeq> {
        let (_, c) = self.coeffs(sign);
        if v.len() > c.len() {
            return Err(Error::Truncation { expected: c.len(), found: v.len() });
        }
        if v.n_boundary() != c.n_boundary() {
            return Err(Error::arg("boundary data does not match the integrating factor sampling"));
        }
        let len = v.len();
        let mut out = BoundarySeq::zeros(len, v.n_boundary());
        for k in 0..len {
            for m in 0..len - k {
                for i in 0..v.n_boundary() {
                    out.data[[k, i]] += c.data[[m, i]] * v.data[[k + m, i]];
                }
            }
        }
        Ok(out)
    }
}

/// Per-node analysis of e^{∓𝓗}: (α, β, defect, conv error, zeroth error).
fn analyse(rows: &Array2<C64>, order: usize) -> Vec<(Vec<C64>, Vec<C64>, f64, f64, f64)> {
    let na = rows.ncols();
    let fft = FftPlanner::new().plan_fft_forward(na);
    let s = 1.0 / na as f64;
    (0..rows.nrows())
        .into_par_iter()
        .map(|i| {
            let r = rows.row(i);
            let mut em: Vec<C64> = r.iter().map(|h| (-h).exp()).collect();
            let mut ep: Vec<C64> = r.iter().map(|h| h.exp()).collect();
            fft.process(&mut em);
            fft.process(&mut ep);
            let defect = (1..=order)
                .map(|k| (em[na - k] * s).norm().max((ep[na - k] * s).norm()))
                .fold(0.0, f64::max);
            let alpha: Vec<C64> = em[..=order].iter().map(|v| v * s).collect();
            let beta: Vec<C64> = ep[..=order].iter().map(|v| v * s).collect();
            let mut conv: f64 = 0.0;
            for n in 0..=order {
                let mut acc: C64 = (0..=n).map(|m| alpha[m] * beta[n - m]).sum();
                if n == 0 {
                    acc -= 1.0;
                }
                conv = conv.max(acc.norm());
            }
            let zeroth = (alpha[0] * beta[0] - 1.0).norm();
            (alpha, beta, defect, conv, zeroth)
        })
        .collect()
}

/// Builds α and β at every active mesh node and at the boundary nodes.
///
/// A defect above [`SPEC_TOL`] is logged; the coefficients are still the
/// projection onto non-negative indices.
pub fn integrating_factor(
    att: &Attenuation,
    mesh: &Mesh,
    boundary: &BoundaryNodes,
    cfg: &FactorConfig,
) -> Result<IntegratingFactor> {
    cfg.validate()?;
    if att.values.dim() != (mesh.n, mesh.n) {
        return Err(Error::arg("attenuation grid does not match the mesh"));
    }
    if att.is_zero() {
        return Ok(IntegratingFactor::identity(mesh.n, boundary.len(), cfg.order, cfg.n_angles));
    }
    let nodes = mesh.active_nodes();
    let points: Vec<Point> = nodes.iter().map(|&(ix, iy)| mesh.node(ix, iy)).collect();
    let (inner, outer) = factor_samples(att, mesh, cfg, &points, boundary)?;
    let len = cfg.order + 1;
    let mut f = IntegratingFactor {
        order: cfg.order,
        n_angles: cfg.n_angles,
        alpha: SeqField::zeros(len, mesh.n),
        beta: SeqField::zeros(len, mesh.n),
        alpha_boundary: BoundarySeq::zeros(len, boundary.len()),
        beta_boundary: BoundarySeq::zeros(len, boundary.len()),
        defect: 0.0,
        node_defect: Array2::zeros((mesh.n, mesh.n)),
        boundary_defect: 0.0,
        conv_error: 0.0,
        zeroth_error: 0.0,
    };
    let mut track = |d: f64, c: f64, z: f64| {
        f.defect = f.defect.max(d);
        f.conv_error = f.conv_error.max(c);
        f.zeroth_error = f.zeroth_error.max(z);
    };
    let inner = analyse(&inner, cfg.order);
    let outer = analyse(&outer, cfg.order);
    let mut stats = Vec::with_capacity(inner.len() + outer.len());
    for (&(ix, iy), (a, b, d, c, z)) in nodes.iter().zip(inner) {
        for n in 0..len {
            f.alpha.data[[n, iy, ix]] = a[n];
            f.beta.data[[n, iy, ix]] = b[n];
        }
        f.node_defect[[iy, ix]] = d;
        stats.push((d, c, z));
    }
    for (i, (a, b, d, c, z)) in outer.into_iter().enumerate() {
        for n in 0..len {
            f.alpha_boundary.data[[n, i]] = a[n];
            f.beta_boundary.data[[n, i]] = b[n];
        }
        f.boundary_defect = f.boundary_defect.max(d);
        stats.push((d, c, z));
    }
    for (d, c, z) in stats {
        track(d, c, z);
    }
    if f.defect > SPEC_TOL {
        log::warn!(
            "integrating factor: negative-index defect {:.3e} exceeds {SPEC_TOL:.0e}",
            f.defect
        );
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::AttenuationSpec;

    #[test]
    fn hilbert_of_cauchy_profile() {
        let n = 4096;
        let ds = 80.0 / n as f64;
        let s: Vec<f64> = (0..n).map(|i| -40.0 + i as f64 * ds).collect();
        let f: Vec<f64> = s.iter().map(|t| 1.0 / (1.0 + t * t)).collect();
        let h = hilbert_transform(&f);
        let err = |lim: f64| {
            s.iter()
                .zip(&h)
                .filter(|(t, _)| t.abs() <= lim)
                .map(|(t, v)| (v - t / (1.0 + t * t)).abs())
                .fold(0.0, f64::max)
        };
        // the last samples feel the missing tails beyond the window
        assert!(err(39.5) < 1e-3, "{}", err(39.5));
    }

    #[test]
    fn hilbert_maps_even_to_odd() {
        // odd length so the profile is symmetric about a sample
        let m = 513;
        let f: Vec<f64> = (0..m).map(|i| (-((i as f64 - 256.0) / 20.0).powi(2)).exp()).collect();
        let h = hilbert_transform(&f);
        for i in 0..m {
            assert!((h[i] + h[m - 1 - i]).abs() < 1e-10);
        }
        assert!(hilbert_transform(&[0.0; 64]).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_attenuation_gives_identity() {
        let mesh = Mesh::new(Domain::unit_disk(), 16).unwrap();
        let nodes = BoundaryNodes::new(&mesh.domain, 32);
        let cfg = FactorConfig::for_mesh(&mesh, 32, 6);
        let f = integrating_factor(&Attenuation::zero(16), &mesh, &nodes, &cfg).unwrap();
        assert_eq!(f.alpha.entry(0)[[3, 5]], C64::new(1.0, 0.0));
        assert_eq!(f.beta.entry(2)[[3, 5]], C64::new(0.0, 0.0));
        let mut v = SeqField::zeros(7, 16);
        v.data.iter_mut().enumerate().for_each(|(i, x)| *x = C64::new(i as f64, 1.0));
        assert_eq!(f.apply(&v, Sign::Minus).unwrap(), v);
    }

    #[test]
    fn disk_profile_and_radial_symmetry() {
        let mesh = Mesh::new(Domain::unit_disk(), 64).unwrap();
        // narrow enough to vanish at the edges of the sampling box
        let spec = AttenuationSpec::bump(0.5, [0.0, 0.0], 0.2);
        let att = Attenuation::from_spec(&spec, &mesh).unwrap();
        let cfg = FactorConfig { hilbert_samples: 1024, ..FactorConfig::for_mesh(&mesh, 16, 4) };
        let r = radon_of_a(&att, &mesh, &cfg).unwrap();
        let i = cfg.hilbert_samples / 2 + 20;
        let s = r.offset(i);
        // Gaussian line integral, the chord ends are far in the tails
        let exact = 0.5 * 0.2 * PI.sqrt() * (-(s / 0.2).powi(2)).exp();
        for j in 0..16 {
            assert!((r.values[[j, i]] - exact).abs() < 1e-5, "{} {exact}", r.values[[j, i]]);
            assert!((r.values[[j, i]] - r.values[[0, i]]).abs() < 1e-8);
        }
    }

    #[test]
    fn bump_factor_is_one_sided() {
        let mesh = Mesh::new(Domain::unit_disk(), 64).unwrap();
        let spec = AttenuationSpec::bump(0.3, [0.1, -0.05], 0.25);
        let att = Attenuation::from_spec(&spec, &mesh).unwrap();
        let nodes = BoundaryNodes::new(&mesh.domain, 64);
        let cfg = FactorConfig::for_mesh(&mesh, 128, 8);
        let f = integrating_factor(&att, &mesh, &nodes, &cfg).unwrap();
        assert!(f.defect < SPEC_TOL, "{}", f.defect);
        assert!(f.conv_error < CONV_TOL, "{}", f.conv_error);
        assert!(f.zeroth_error < 1e-8, "{}", f.zeroth_error);
    }
}
