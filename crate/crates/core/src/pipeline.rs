//! Full reconstructions from moment sinograms, error metrics and the
//! empirical stability ratio.

use std::time::Instant;

use ndarray::{Array2, Zip};
use serde::{Deserialize, Serialize};

use crate::aanalytic::{beltrami_residual, cr_derivatives_masked, recover_components, recover_low_modes, SeqField, Solver};
use crate::attenuation::{integrating_factor, FactorConfig, IntegratingFactor, Sign};
use crate::fields::{fields_from_components, ComplexComponents, FieldPair};
use crate::forward::{Attenuation, MomentSinogram};
use crate::geometry::{BoundaryNodes, Mesh};
use crate::trace::{angular_coeffs, sinogram_coeffs, traces_from_moments, BoundarySeq};
use crate::{Error, Result, C64};

/// Which transport model the data follow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    NonAttenuated,
    Attenuated,
}

/// Settings of a reconstruction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReconConfig {
    /// Truncation N of the angular sequences.
    pub order: usize,
    /// Radius of the disk known to contain the support of the fields.
    pub support_radius: f64,
    /// Zero the reconstruction outside the support disk.
    pub mask_to_support: bool,
}

impl ReconConfig {
    pub fn new(order: usize, support_radius: f64) -> Self {
        ReconConfig { order, support_radius, mask_to_support: true }
    }
}

/// Wall time and residual of one pipeline stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub name: String,
    pub seconds: f64,
    /// Relative discrete residual of the equation solved by the stage, if any.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
}

/// Diagnostics of the integrating factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FactorReport {
    pub defect: f64,
    pub boundary_defect: f64,
    pub conv_error: f64,
    pub zeroth_error: f64,
    pub one_sided: bool,
}

/// Relative L² errors over the support disk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorMetrics {
    pub rel_l2_f: f64,
    /// Relative to ‖F‖, or to the norm of the whole pair when the true F vanishes.
    #[serde(rename = "rel_l2_F")]
    pub rel_l2_tensor: f64,
    pub rel_l2_total: f64,
}

/// Summary of a reconstruction, serialized as TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionReport {
    pub mode: Mode,
    pub grid: usize,
    pub n_angles: usize,
    pub n_boundary: usize,
    pub order: usize,
    pub support_radius: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rel_l2_f: Option<f64>,
    #[serde(rename = "rel_l2_F", skip_serializing_if = "Option::is_none")]
    pub rel_l2_tensor: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rel_l2_total: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stability_lhs: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stability_rhs: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
    /// How the boundary Sobolev norms of the stability estimate are approximated.
    pub sobolev_surrogate: String,
    /// Relative residual of the transport system per level, over the support disk.
    pub transport_residual: [f64; 3],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub factor: Option<FactorReport>,
    pub stages: Vec<StageReport>,
}

impl ReconstructionReport {
    pub fn set_errors(&mut self, m: &ErrorMetrics) {
        self.rel_l2_f = Some(m.rel_l2_f);
        self.rel_l2_tensor = Some(m.rel_l2_tensor);
        self.rel_l2_total = Some(m.rel_l2_total);
    }

    pub fn set_stability(&mut self, s: &Stability) {
        self.stability_lhs = Some(s.lhs);
        self.stability_rhs = Some(s.rhs);
        self.ratio = Some(s.ratio);
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Format(e.to_string()))
    }
}

const SURROGATE: &str = "half-integer boundary orders k+1/2 replaced by the integer order k; \
H^q(Γ) norm taken as the sum of L² norms of central-difference θ-derivatives of order 0..=q";

/// Everything a reconstruction produces.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub fields: FieldPair,
    pub components: ComplexComponents,
    /// Transport solutions v⁰, v¹, v² as sequences of non-positive modes.
    pub transport: [SeqField; 3],
    pub report: ReconstructionReport,
}

struct Timer {
    stages: Vec<StageReport>,
    t: Instant,
}

impl Timer {
    fn new() -> Self {
        Timer { stages: Vec::new(), t: Instant::now() }
    }

    fn lap(&mut self, name: &str, residual: Option<f64>) {
        let now = Instant::now();
        self.stages.push(StageReport {
            name: name.to_string(),
            seconds: (now - self.t).as_secs_f64(),
            residual,
        });
        self.t = now;
    }
}

fn check_inputs(ms: &MomentSinogram, mesh: &Mesh, cfg: &ReconConfig) -> Result<()> {
    if ms.domain != mesh.domain {
        return Err(Error::arg("sinogram and mesh use different domains"));
    }
    if cfg.order < 3 {
        return Err(Error::config("truncation order must be at least 3"));
    }
    if ms.n_angles() < 2 * cfg.order + 2 {
        return Err(Error::Aliasing { n_angles: ms.n_angles(), order: cfg.order });
    }
    if !(cfg.support_radius > 0.0 && cfg.support_radius < mesh.domain.inner_radius()) {
        return Err(Error::config("support radius must lie inside the domain"));
    }
    Ok(())
}

/// Inversion of data produced without attenuation.
pub fn reconstruct_nonattenuated(
    ms: &MomentSinogram,
    mesh: &Mesh,
    cfg: &ReconConfig,
) -> Result<(FieldPair, ReconstructionReport)> {
    let r = reconstruct(ms, mesh, None, cfg)?;
    Ok((r.fields, r.report))
}

/// Inversion of data produced with the attenuation `att`.
pub fn reconstruct_attenuated(
    ms: &MomentSinogram,
    mesh: &Mesh,
    att: &Attenuation,
    cfg: &ReconConfig,
) -> Result<(FieldPair, ReconstructionReport)> {
    let r = reconstruct(ms, mesh, Some(att), cfg)?;
    Ok((r.fields, r.report))
}

/// Runs the inversion. With `att`, boundary data are converted by e^{−G},
/// the non-attenuated staged problems are solved, the stage outputs are
/// converted back by e^{G}, and the attenuated low-mode and component
/// relations finish the recovery.
pub fn reconstruct(
    ms: &MomentSinogram,
    mesh: &Mesh,
    att: Option<&Attenuation>,
    cfg: &ReconConfig,
) -> Result<Reconstruction> {
    check_inputs(ms, mesh, cfg)?;
    if let Some(a) = att {
        a.validate(mesh, false)?;
    }
    let n = cfg.order;
    let nb = ms.n_boundary();
    let mut timer = Timer::new();

    let bt = traces_from_moments(ms).map_err(|e| e.in_stage("traces"))?;
    let g = angular_coeffs(&bt, n).map_err(|e| e.in_stage("coefficients"))?;
    timer.lap("traces", None);

    let solver = Solver::new(mesh, nb, n + 1);
    timer.lap("setup", None);

    let factor = match att {
        Some(a) => {
            let fc = FactorConfig::for_mesh(mesh, ms.n_angles(), n);
            let f = integrating_factor(a, mesh, &solver.nodes, &fc).map_err(|e| e.in_stage("integrating factor"))?;
            timer.lap("integrating factor", None);
            Some(f)
        }
        None => None,
    };
    let convert_boundary = |s: &BoundarySeq| -> Result<BoundarySeq> {
        match &factor {
            Some(f) => f.apply_boundary(s, Sign::Minus),
            None => Ok(s.clone()),
        }
    };
    let g = [convert_boundary(&g[0])?, convert_boundary(&g[1])?, convert_boundary(&g[2])?];

    let audit = mesh.disk_mask(cfg.support_radius);
    let c = solver.cascade(&g).map_err(|e| e.in_stage("cascade"))?;
    let res = [
        relative_residual(&beltrami_residual(&c.l2w0, None, mesh), &c.l2w0, &audit, mesh.h),
        relative_residual(&beltrami_residual(&c.lw1, Some(&c.l2w0), mesh), &c.lw1, &audit, mesh.h),
        relative_residual(&beltrami_residual(&c.w2, Some(&c.lw1), mesh), &c.w2, &audit, mesh.h),
    ];
    timer.lap("cascade", Some(res.iter().cloned().fold(0.0, f64::max)));

    let back = |s: SeqField| -> Result<SeqField> {
        match &factor {
            Some(f) => f.apply(&s, Sign::Plus),
            None => Ok(s),
        }
    };
    let (l2v0, lv1, v2) = (back(c.l2w0)?, back(c.lw1)?, back(c.w2)?);
    if factor.is_some() {
        timer.lap("gauge", None);
    }

    let a = att.map(|a| &a.values);
    let low = recover_low_modes(&lv1, &v2, a, mesh).map_err(|e| e.in_stage("low modes"))?;
    let v0 = l2v0.prepend(&[low.w0_0, low.w0_m1]);
    let v1 = lv1.prepend(&[low.w1_0]);
    timer.lap("low modes", None);

    let mut comps = recover_components(&v0, a, mesh).map_err(|e| e.in_stage("components"))?;
    let keep = if cfg.mask_to_support { audit.clone() } else { mesh.active_mask() };
    mask_components(&mut comps, &keep);
    let fields = fields_from_components(&comps, cfg.support_radius);
    timer.lap("components", None);

    let transport = [v0, v1, v2];
    let tr = transport_residual(&transport, &comps, a, mesh, &audit);
    timer.lap("audit", None);

    let report = ReconstructionReport {
        mode: if att.is_some() { Mode::Attenuated } else { Mode::NonAttenuated },
        grid: mesh.n,
        n_angles: ms.n_angles(),
        n_boundary: nb,
        order: n,
        support_radius: cfg.support_radius,
        rel_l2_f: None,
        rel_l2_tensor: None,
        rel_l2_total: None,
        stability_lhs: None,
        stability_rhs: None,
        ratio: None,
        sobolev_surrogate: SURROGATE.to_string(),
        transport_residual: tr,
        factor: factor.as_ref().map(factor_report),
        stages: timer.stages,
    };
    Ok(Reconstruction { fields, components: comps, transport, report })
}

fn factor_report(f: &IntegratingFactor) -> FactorReport {
    FactorReport {
        defect: f.defect,
        boundary_defect: f.boundary_defect,
        conv_error: f.conv_error,
        zeroth_error: f.zeroth_error,
        one_sided: f.one_sided(),
    }
}

fn mask_components(c: &mut ComplexComponents, keep: &Array2<bool>) {
    Zip::from(&mut c.c0).and(keep).for_each(|v, &k| if !k { *v = 0.0 });
    Zip::from(&mut c.c1).and(keep).for_each(|v, &k| if !k { *v = C64::new(0.0, 0.0) });
    Zip::from(&mut c.c2).and(keep).for_each(|v, &k| if !k { *v = C64::new(0.0, 0.0) });
}

fn masked_norm_sq<'a, I: IntoIterator<Item = (&'a C64, &'a bool)>>(it: I) -> f64 {
    it.into_iter().filter(|(_, &m)| m).map(|(v, _)| v.norm_sqr()).sum()
}

/// Discrete L² norm of all entries of a sequence field over `mask`.
pub fn seq_l2(w: &SeqField, mask: &Array2<bool>, h: f64) -> f64 {
    let mut acc = 0.0;
    for k in 0..w.len() {
        acc += masked_norm_sq(w.entry(k).iter().zip(mask.iter()));
    }
    (acc * h * h).sqrt()
}

fn relative_residual(r: &SeqField, w: &SeqField, mask: &Array2<bool>, h: f64) -> f64 {
    let den = seq_l2(w, mask, h);
    if den == 0.0 {
        seq_l2(r, mask, h)
    } else {
        seq_l2(r, mask, h) / den
    }
}

/// Right-hand side modes 0, −1, −2 of the level-0 transport equation.
fn component_modes(c: &ComplexComponents) -> [Array2<C64>; 3] {
    [c.c0.mapv(|v| C64::new(v, 0.0)), c.c1.clone(), c.c2.clone()]
}

/// Relative residual per level of the transport system in sequence form,
/// ∂̄v₋ₙ + ∂v₋ₙ₋₂ + a v₋ₙ₋₁ = rhs₋ₙ₋₁ and 2Re ∂v₋₁ + a v₀ = rhs₀, over `mask`.
/// The right-hand side is 𝓕 at level 0 and v^{k−1} above.
pub fn transport_residual(
    v: &[SeqField; 3],
    comps: &ComplexComponents,
    att: Option<&Array2<f64>>,
    mesh: &Mesh,
    mask: &Array2<bool>,
) -> [f64; 3] {
    let active = mesh.active_mask();
    let zero = Array2::<C64>::zeros((mesh.n, mesh.n));
    let modes = component_modes(comps);
    let mut out = [0.0; 3];
    for (k, vk) in v.iter().enumerate() {
        let len = vk.len();
        let rhs = |m: usize| -> Array2<C64> {
            if k == 0 {
                modes.get(m).cloned().unwrap_or_else(|| zero.clone())
            } else if m < v[k - 1].len() {
                v[k - 1].entry(m).to_owned()
            } else {
                zero.clone()
            }
        };
        let entry = |m: usize| -> Array2<C64> {
            if m < len {
                vk.entry(m).to_owned()
            } else {
                zero.clone()
            }
        };
        let av = |m: usize| -> Array2<C64> {
            match att {
                Some(a) => Zip::from(&entry(m)).and(a).map_collect(|&x, &ai| x * ai),
                None => zero.clone(),
            }
        };
        let d: Vec<(Array2<C64>, Array2<C64>)> =
            (0..len).map(|m| cr_derivatives_masked(&entry(m), &active, mesh.h)).collect();
        let mut num = 0.0;
        let mut den = 0.0;
        // mode 0
        let r0 = d.get(1).map_or(zero.clone(), |x| x.1.mapv(|c| C64::new(2.0 * c.re, 0.0))) + av(0) - rhs(0);
        num += masked_norm_sq(r0.iter().zip(mask.iter()));
        for n in 0..len.saturating_sub(1) {
            let mut r = d[n].0.clone();
            if n + 2 < len {
                r += &d[n + 2].1;
            }
            r += &av(n + 1);
            r -= &rhs(n + 1);
            num += masked_norm_sq(r.iter().zip(mask.iter()));
        }
        for m in 0..len.max(3) {
            den += masked_norm_sq(rhs(m).iter().zip(mask.iter()));
        }
        out[k] = if den > 0.0 { (num / den).sqrt() } else { num.sqrt() };
    }
    out
}

/// Relative L² errors of `recon` against `truth` over the disk of radius
/// `truth.support_radius`.
pub fn compare(recon: &FieldPair, truth: &FieldPair, mesh: &Mesh) -> ErrorMetrics {
    let mask = mesh.disk_mask(truth.support_radius);
    let sum = |a: &Array2<f64>, b: Option<&Array2<f64>>, w: f64| -> f64 {
        let mut s = 0.0;
        for ((iy, ix), &x) in a.indexed_iter() {
            if mask[[iy, ix]] {
                let d = x - b.map_or(0.0, |b| b[[iy, ix]]);
                s += w * d * d;
            }
        }
        s
    };
    let ef = sum(&recon.f1, Some(&truth.f1), 1.0) + sum(&recon.f2, Some(&truth.f2), 1.0);
    let nf = sum(&truth.f1, None, 1.0) + sum(&truth.f2, None, 1.0);
    let et = sum(&recon.f11, Some(&truth.f11), 1.0)
        + sum(&recon.f12, Some(&truth.f12), 2.0)
        + sum(&recon.f22, Some(&truth.f22), 1.0);
    let nt = sum(&truth.f11, None, 1.0) + sum(&truth.f12, None, 2.0) + sum(&truth.f22, None, 1.0);
    let rel = |e: f64, n: f64| if n > 0.0 { (e / n).sqrt() } else { e.sqrt() };
    let total = rel(ef + et, nf + nt);
    ErrorMetrics {
        rel_l2_f: if nf > 0.0 { rel(ef, nf) } else { rel(ef, nt) },
        rel_l2_tensor: if nt > 0.0 { rel(et, nt) } else { rel(et, nf) },
        rel_l2_total: total,
    }
}

/// Central θ-difference of order 1, 2 or 3 on a periodic boundary sampling.
fn periodic_derivative(v: &[C64], order: usize, dth: f64) -> Vec<C64> {
    let n = v.len() as isize;
    let at = |i: isize| v[i.rem_euclid(n) as usize];
    (0..n)
        .map(|i| match order {
            0 => at(i),
            1 => (at(i + 1) - at(i - 1)) / (2.0 * dth),
            2 => (at(i + 1) - 2.0 * at(i) + at(i - 1)) / (dth * dth),
            _ => (at(i + 2) - 2.0 * at(i + 1) + 2.0 * at(i - 1) - at(i - 2)) / (2.0 * dth.powi(3)),
        })
        .collect()
}

/// Discrete H^q(Γ) norm: the sum over r ≤ q of the L²(Γ) norms of the r-th θ-derivative.
pub fn boundary_sobolev(v: &[C64], nodes: &BoundaryNodes, q: usize) -> f64 {
    let dth = 2.0 * std::f64::consts::PI / v.len() as f64;
    (0..=q)
        .map(|r| {
            let d = periodic_derivative(v, r, dth);
            d.iter().zip(&nodes.arclength).map(|(x, w)| x.norm_sqr() * w).sum::<f64>().sqrt()
        })
        .sum()
}

/// ‖v‖²_{p,q} = Σₖ (1+k)^{2p} ‖v₋ₖ‖²_{H^q(Γ)} for boundary sequences, q ≤ 3.
pub fn weighted_seq_norm(v: &BoundarySeq, nodes: &BoundaryNodes, p: f64, q: usize) -> Result<f64> {
    if q > 3 {
        return Err(Error::arg(format!("Sobolev order {q} is not supported (0..=3)")));
    }
    if v.n_boundary() != nodes.len() {
        return Err(Error::arg("sequence and boundary sampling differ in size"));
    }
    let mut acc = 0.0;
    for k in 0..v.len() {
        let e: Vec<C64> = v.entry(k).to_vec();
        let s = boundary_sobolev(&e, nodes, q);
        acc += (1.0 + k as f64).powf(2.0 * p) * s * s;
    }
    Ok(acc.sqrt())
}

/// Both sides of the stability estimate and their ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stability {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

/// (‖f‖ + ‖F‖) / Σₖ ‖M^(k)‖_{7/2,k}, with field norms over Ω and the sinogram
/// coefficients truncated at `order`.
pub fn stability_ratio(fp: &FieldPair, ms: &MomentSinogram, mesh: &Mesh, order: usize) -> Result<Stability> {
    let norm = |grids: &[(&Array2<f64>, f64)]| -> f64 {
        let mut s = 0.0;
        for &(g, w) in grids {
            Zip::from(g).and(&mesh.cell_area).for_each(|&v, &a| s += w * v * v * a);
        }
        s.sqrt()
    };
    let lhs = norm(&[(&fp.f1, 1.0), (&fp.f2, 1.0)]) + norm(&[(&fp.f11, 1.0), (&fp.f12, 2.0), (&fp.f22, 1.0)]);
    let coeffs = sinogram_coeffs(ms, order)?;
    let nodes = ms.boundary();
    let mut rhs = 0.0;
    for (k, c) in coeffs.iter().enumerate() {
        rhs += weighted_seq_norm(c, &nodes, 3.5, k)?;
    }
    let ratio = if lhs == 0.0 {
        0.0
    } else if rhs == 0.0 {
        f64::INFINITY
    } else {
        lhs / rhs
    };
    Ok(Stability { lhs, rhs, ratio })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Domain;

    #[test]
    fn weighted_norm_examples() {
        let nodes = BoundaryNodes::new(&Domain::unit_disk(), 64);
        let mut v = BoundarySeq::zeros(3, 64);
        for i in 0..64 {
            v.data[[0, i]] = C64::new(nodes.theta[i].cos(), 0.0);
        }
        // one-term sum
        let single = weighted_seq_norm(&v, &nodes, 2.5, 1).unwrap();
        let h1 = boundary_sobolev(&v.entry(0).to_vec(), &nodes, 1);
        assert!((single - h1).abs() < 1e-14);
        // ‖cos‖ = √π, ‖sin‖ ≈ √π up to the difference quotient factor
        let dth = 2.0 * std::f64::consts::PI / 64.0;
        let want = std::f64::consts::PI.sqrt() * (1.0 + dth.sin() / dth);
        assert!((h1 - want).abs() < 1e-12, "{h1} {want}");
        // homogeneity
        let mut w = v.clone();
        w.data.mapv_inplace(|x| x * C64::new(0.0, -3.0));
        assert!((weighted_seq_norm(&w, &nodes, 2.5, 1).unwrap() - 3.0 * single).abs() < 1e-12);
        // two entries: (1+0)^{2p}‖v0‖² + (1+2)^{2p}‖v2‖² with v2 = 2·v0, q = 0
        let mut t = v.clone();
        for i in 0..64 {
            t.data[[2, i]] = 2.0 * t.data[[0, i]];
        }
        let got = weighted_seq_norm(&t, &nodes, 1.0, 0).unwrap();
        let want = (std::f64::consts::PI * (1.0 + 9.0 * 4.0)).sqrt();
        assert!((got - want).abs() < 1e-12, "{got} {want}");
        assert!(weighted_seq_norm(&v, &nodes, 1.0, 4).is_err());
    }

    #[test]
    fn zero_phantom_has_zero_ratio() {
        let mesh = Mesh::new(Domain::unit_disk(), 16).unwrap();
        let ms = MomentSinogram::zeros(mesh.domain, 32, 32);
        let s = stability_ratio(&FieldPair::zeros(16, 0.5), &ms, &mesh, 8).unwrap();
        assert_eq!(s.ratio, 0.0);
    }

    #[test]
    fn zero_sinogram_gives_zero_fields() {
        let mesh = Mesh::new(Domain::unit_disk(), 32).unwrap();
        let ms = MomentSinogram::zeros(mesh.domain, 64, 64);
        let (fp, report) = reconstruct_nonattenuated(&ms, &mesh, &ReconConfig::new(8, 0.6)).unwrap();
        assert!(fp.is_zero());
        assert!(report.to_toml().unwrap().contains("[[stages]]"));
    }
}
