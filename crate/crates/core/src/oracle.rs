//! Brute-force reference computations for tests.
//!
//! Nothing here calls the quadrature, interpolation or differencing code of
//! the main pipeline: phantoms are evaluated from their analytic formulas,
//! integrals use adaptive Gauss-Kronrod rules and derivatives use a separate
//! central-difference stencil.

use std::f64::consts::PI;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::aanalytic::SeqField;
use crate::fields::{Component, ComplexComponents, PhantomSpec};
use crate::forward::AttenuationSpec;
use crate::geometry::{Domain, DomainKind, Mesh, Ray};
use crate::{Error, Point, Result, C64};

/// Accuracy controls of the oracles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    /// Initial subdivision relative to the pipeline; at least 2.
    pub refinement: usize,
    /// Half-width of the interval treated by subtraction in principal values.
    pub pv_exclusion: f64,
    /// Absolute tolerance of the adaptive rules.
    pub tolerance: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { refinement: 8, pv_exclusion: 1e-2, tolerance: 1e-13 }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.refinement < 2 {
            return Err(Error::config("oracle refinement must be at least 2"));
        }
        if !(self.pv_exclusion > 0.0 && self.tolerance > 0.0) {
            return Err(Error::config("oracle tolerances must be positive"));
        }
        Ok(())
    }
}

const XK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Kronrod-15 estimate and its difference from the embedded Gauss-7 rule.
fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let d = h * XK[i];
        let s = f(c - d) + f(c + d);
        k += WK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, (k - g).abs() * h)
}

fn adapt<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let (k, err) = kronrod(f, a, b);
    if err <= tol || depth == 0 || (b - a).abs() < 1e-14 {
        return k;
    }
    let m = 0.5 * (a + b);
    adapt(f, a, m, 0.5 * tol, depth - 1) + adapt(f, m, b, 0.5 * tol, depth - 1)
}

/// Adaptive integral over `[a, b]` split first into `panels` pieces.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize, tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let panels = panels.max(1);
    let w = (b - a) / panels as f64;
    (0..panels)
        .map(|i| adapt(&f, a + i as f64 * w, a + (i + 1) as f64 * w, tol / panels as f64, 40))
        .sum()
}

/// Parameter interval of `base + t·(cos φ, sin φ)` inside the domain.
fn span(domain: &Domain, base: Point, phi: f64) -> Option<(f64, f64)> {
    let (a, b) = match domain.kind {
        DomainKind::Disk { radius } => (radius, radius),
        DomainKind::Ellipse { a, b } => (a, b),
    };
    let (c, s) = (phi.cos(), phi.sin());
    let qa = c * c / (a * a) + s * s / (b * b);
    let qb = 2.0 * (base[0] * c / (a * a) + base[1] * s / (b * b));
    let qc = base[0] * base[0] / (a * a) + base[1] * base[1] / (b * b) - 1.0;
    let disc = qb * qb - 4.0 * qa * qc;
    if disc < 0.0 {
        return None;
    }
    let r = disc.sqrt();
    Some(((-qb - r) / (2.0 * qa), (-qb + r) / (2.0 * qa)))
}

fn phantom_value(spec: &PhantomSpec, x: Point) -> [f64; 5] {
    let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
    let rs = spec.support_radius;
    let r0 = spec.taper * rs;
    let cut = if r >= rs {
        0.0
    } else if r <= r0 {
        1.0
    } else {
        let t = (r - r0) / (rs - r0);
        (1.0 - 1.0 / (1.0 - t * t)).exp()
    };
    let mut v = [0.0; 5];
    if cut == 0.0 {
        return v;
    }
    for b in &spec.bumps {
        let g = b.shape;
        let d2 = (x[0] - g.center[0]).powi(2) + (x[1] - g.center[1]).powi(2);
        let idx = match b.component {
            Component::F1 => 0,
            Component::F2 => 1,
            Component::F11 => 2,
            Component::F12 => 3,
            Component::F22 => 4,
        };
        v[idx] += g.amplitude * (-d2 / (g.width * g.width)).exp() * cut;
    }
    v
}

fn attenuation_value(att: &AttenuationSpec, x: Point) -> f64 {
    att.bumps
        .iter()
        .map(|g| g.amplitude * (-((x[0] - g.center[0]).powi(2) + (x[1] - g.center[1]).powi(2)) / (g.width * g.width)).exp())
        .sum()
}

/// M_a^(k) along the line of `ray`, by nested adaptive quadrature of the
/// analytic phantom and attenuation, with the foot-point parameter as the
/// moment variable and the attenuation integrated up to the chord exit.
pub fn oracle_moment(
    spec: &PhantomSpec,
    att: &AttenuationSpec,
    k: usize,
    ray: &Ray,
    domain: &Domain,
    cfg: &OracleConfig,
) -> Result<f64> {
    cfg.validate()?;
    if k > 2 {
        return Err(Error::arg(format!("moment order {k} is not in 0..=2")));
    }
    let (c, s) = (ray.angle.cos(), ray.angle.sin());
    let p = ray.base[0] * c + ray.base[1] * s;
    let foot = [ray.base[0] - p * c, ray.base[1] - p * s];
    let Some((lo, hi)) = span(domain, foot, ray.angle) else {
        return Ok(0.0);
    };
    let at = |t: f64| [foot[0] + t * c, foot[1] + t * s];
    // the fields vanish outside the support disk
    let d2 = foot[0] * foot[0] + foot[1] * foot[1];
    let rs = spec.support_radius;
    if d2 >= rs * rs {
        return Ok(0.0);
    }
    let half = (rs * rs - d2).sqrt();
    let (a, b) = (lo.max(-half), hi.min(half));
    let panels = 4 * cfg.refinement;
    let attenuated = att.bumps.iter().any(|g| g.amplitude != 0.0);
    let integrand = |t: f64| {
        let v = phantom_value(spec, at(t));
        let pair = v[0] * c + v[1] * s + c * c * v[2] + 2.0 * c * s * v[3] + s * s * v[4];
        if pair == 0.0 {
            return 0.0;
        }
        let decay = if attenuated {
            (-integrate(|q| attenuation_value(att, at(q)), t, hi, cfg.refinement, cfg.tolerance)).exp()
        } else {
            1.0
        };
        t.powi(k as i32) * pair * decay
    };
    Ok(integrate(integrand, a, b, panels, cfg.tolerance))
}

/// −(1/π) ∬_Ω h(ζ) (ζ̄−z̄)ʲ/(ζ−z)ʲ⁺¹ dA in polar coordinates about z,
/// −(1/π) ∫₀^{2π} ∫₀^{ρ(θ)} h(z + r e^{iθ}) e^{−i(2j+1)θ} dr dθ, with the
/// trapezoid rule in θ and adaptive rules in r.
pub fn oracle_area_integral<F: Fn(Point) -> C64>(
    h: F,
    z: Point,
    j: usize,
    domain: &Domain,
    cfg: &OracleConfig,
) -> Result<C64> {
    cfg.validate()?;
    let m = 64 * cfg.refinement;
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..m {
        let th = 2.0 * PI * i as f64 / m as f64;
        let Some((_, rho)) = span(domain, z, th) else {
            continue;
        };
        if rho <= 0.0 {
            continue;
        }
        let (c, s) = (th.cos(), th.sin());
        let re = integrate(|r| h([z[0] + r * c, z[1] + r * s]).re, 0.0, rho, cfg.refinement, cfg.tolerance);
        let im = integrate(|r| h([z[0] + r * c, z[1] + r * s]).im, 0.0, rho, cfg.refinement, cfg.tolerance);
        acc += C64::new(re, im) * C64::from_polar(1.0, -((2 * j + 1) as f64) * th);
    }
    Ok(-acc * (2.0 * PI / m as f64) / PI)
}

/// (1/π) p.v.∫_lo^hi f(t)/(s−t) dt, subtracting f(s) within the exclusion interval.
pub fn oracle_hilbert<F: Fn(f64) -> f64>(f: F, s: f64, lo: f64, hi: f64, cfg: &OracleConfig) -> Result<f64> {
    cfg.validate()?;
    if !(lo <= s && s <= hi) {
        return Err(Error::arg("evaluation point outside the interval"));
    }
    let eps = cfg.pv_exclusion.min(s - lo).min(hi - s);
    let panels = 16 * cfg.refinement;
    let tol = cfg.tolerance;
    let outer = |t: f64| f(t) / (s - t);
    let mut acc = integrate(outer, lo, s - eps, panels, tol) + integrate(outer, s + eps, hi, panels, tol);
    if eps > 0.0 {
        let fs = f(s);
        let near = |t: f64| if t == s { 0.0 } else { (f(t) - fs) / (s - t) };
        // the subtracted constant has zero principal value on the symmetric window
        acc += integrate(near, s - eps, s + eps, cfg.refinement, tol);
    }
    Ok(acc / PI)
}

/// Absolute and relative discrete L² residuals of the transport system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualNorms {
    pub absolute: [f64; 3],
    pub relative: [f64; 3],
}

/// Residual of ∂̄v₋ₙ + ∂v₋ₙ₋₂ + a v₋ₙ₋₁ − rhs₋ₙ₋₁ (n ≥ 0) and 2Re ∂v₋₁ + a v₀ − rhs₀
/// for the three levels, with rhs = 𝓕 at level 0 and v^{k−1} above.
///
/// Derivatives are plain central differences; only nodes in `mask` whose four
/// lattice neighbours are active contribute.
pub fn transport_residual(
    v: &[SeqField; 3],
    comps: &ComplexComponents,
    att: Option<&Array2<f64>>,
    mesh: &Mesh,
    mask: &Array2<bool>,
) -> ResidualNorms {
    let n = mesh.n;
    let h = mesh.h;
    let zero = C64::new(0.0, 0.0);
    let ok = |ix: usize, iy: usize| {
        mask[[iy, ix]]
            && ix > 0
            && iy > 0
            && ix + 1 < n
            && iy + 1 < n
            && [(ix - 1, iy), (ix + 1, iy), (ix, iy - 1), (ix, iy + 1)]
                .iter()
                .all(|&(x, y)| mesh.cell_area[[y, x]] > 0.0)
    };
    let mut out = ResidualNorms { absolute: [0.0; 3], relative: [0.0; 3] };
    for k in 0..3 {
        let vk = &v[k];
        let len = vk.len();
        let val = |m: usize, ix: usize, iy: usize| if m < len { vk.data[[m, iy, ix]] } else { zero };
        let rhs = |m: usize, ix: usize, iy: usize| -> C64 {
            if k == 0 {
                match m {
                    0 => C64::new(comps.c0[[iy, ix]], 0.0),
                    1 => comps.c1[[iy, ix]],
                    2 => comps.c2[[iy, ix]],
                    _ => zero,
                }
            } else if m < v[k - 1].len() {
                v[k - 1].data[[m, iy, ix]]
            } else {
                zero
            }
        };
        let a = |ix: usize, iy: usize| att.map_or(0.0, |a| a[[iy, ix]]);
        let (mut num, mut den) = (0.0, 0.0);
        for iy in 0..n {
            for ix in 0..n {
                if !ok(ix, iy) {
                    continue;
                }
                let dx = |m: usize| (val(m, ix + 1, iy) - val(m, ix - 1, iy)) / (2.0 * h);
                let dy = |m: usize| (val(m, ix, iy + 1) - val(m, ix, iy - 1)) / (2.0 * h);
                let d = |m: usize| 0.5 * (dx(m) - C64::i() * dy(m));
                let db = |m: usize| 0.5 * (dx(m) + C64::i() * dy(m));
                let r0 = 2.0 * d(1).re + a(ix, iy) * val(0, ix, iy) - rhs(0, ix, iy);
                num += r0.norm_sqr();
                for m in 0..len.saturating_sub(1) {
                    let r = db(m) + d(m + 2) + a(ix, iy) * val(m + 1, ix, iy) - rhs(m + 1, ix, iy);
                    num += r.norm_sqr();
                }
                for m in 0..len.max(3) {
                    den += rhs(m, ix, iy).norm_sqr();
                }
            }
        }
        out.absolute[k] = (num * h * h).sqrt();
        out.relative[k] = if den > 0.0 { (num / den).sqrt() } else { out.absolute[k] };
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{Bump, Gaussian};

    #[test]
    fn kronrod_integrates_smooth_functions() {
        let v = integrate(|x: f64| x.exp(), 0.0, 1.0, 1, 1e-14);
        assert!((v - (1f64.exp() - 1.0)).abs() < 1e-14);
        let v = integrate(|x: f64| (-x * x).exp(), -8.0, 8.0, 4, 1e-14);
        assert!((v - PI.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn zero_and_odd_moments_vanish() {
        let d = Domain::unit_disk();
        let cfg = OracleConfig::default();
        let ray = Ray::new([0.6, 0.8], 0.3);
        let empty = PhantomSpec::empty(0.6);
        assert_eq!(oracle_moment(&empty, &AttenuationSpec::zero(), 0, &ray, &d, &cfg).unwrap(), 0.0);
        // radial F11 bump seen along a line through the centre: odd first moment
        let mut spec = PhantomSpec::empty(0.6);
        spec.bumps.push(Bump {
            component: Component::F11,
            shape: Gaussian { amplitude: 1.0, center: [0.0, 0.0], width: 0.3 },
        });
        let through = Ray::new([1.0, 0.0], 0.0);
        let m1 = oracle_moment(&spec, &AttenuationSpec::zero(), 1, &through, &d, &cfg).unwrap();
        assert!(m1.abs() < 1e-14, "{m1}");
        let m0 = oracle_moment(&spec, &AttenuationSpec::zero(), 0, &through, &d, &cfg).unwrap();
        assert!(m0 > 0.1);
    }

    #[test]
    fn constant_area_integral_is_conjugate() {
        let d = Domain::unit_disk();
        let cfg = OracleConfig { refinement: 2, ..Default::default() };
        for z in [[0.3, -0.2], [-0.5, 0.4], [0.0, 0.0]] {
            let v = oracle_area_integral(|_| C64::new(1.0, 0.0), z, 0, &d, &cfg).unwrap();
            assert!((v - C64::new(z[0], -z[1])).norm() < 1e-4, "{v}");
        }
        let v = oracle_area_integral(|_| C64::new(0.0, 0.0), [0.1, 0.1], 1, &d, &cfg).unwrap();
        assert_eq!(v, C64::new(0.0, 0.0));
    }

    #[test]
    fn area_integral_self_converges() {
        let d = Domain::unit_disk();
        let h = |x: Point| C64::new((x[0] * x[1]).cos(), x[0]);
        let z = [0.2, 0.35];
        let v: Vec<C64> = [2, 4, 8]
            .iter()
            .map(|&r| oracle_area_integral(h, z, 1, &d, &OracleConfig { refinement: r, ..Default::default() }).unwrap())
            .collect();
        let (e1, e2) = ((v[0] - v[2]).norm(), (v[1] - v[2]).norm());
        assert!(e2 <= e1 + 1e-13, "{e1} {e2}");
        assert!(e2 < 1e-8);
    }

    #[test]
    fn principal_value_of_cauchy_profile() {
        let cfg = OracleConfig::default();
        for s in [-3.0, 0.0, 0.7, 5.0] {
            let lim = 1e4;
            let got = oracle_hilbert(|t| 1.0 / (1.0 + t * t), s, -lim, lim, &cfg).unwrap();
            assert!((got - s / (1.0 + s * s)).abs() < 1e-4, "{s} {got}");
        }
    }

    #[test]
    fn residual_of_zero_is_zero() {
        let mesh = Mesh::new(Domain::unit_disk(), 16).unwrap();
        let v = [SeqField::zeros(5, 16), SeqField::zeros(5, 16), SeqField::zeros(5, 16)];
        let r = transport_residual(&v, &ComplexComponents::zeros(16), None, &mesh, &mesh.inside);
        assert_eq!(r.absolute, [0.0; 3]);
    }

    #[test]
    fn refinement_is_validated() {
        let cfg = OracleConfig { refinement: 1, ..Default::default() };
        assert!(cfg.validate().is_err());
    }
}
