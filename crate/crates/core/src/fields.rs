//! The unknown vector field plus symmetric 2-tensor field, its complex
//! components, and smooth compactly supported phantoms.

use ndarray::{Array2, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::fft::Fft2;
use crate::geometry::Mesh;
use crate::{Error, Point, Result, C64};

/// Real field components on the mesh: f = (f1, f2) and F = [[F11, F12], [F12, F22]].
#[derive(Debug, Clone, PartialEq)]
pub struct FieldPair {
    pub f1: Array2<f64>,
    pub f2: Array2<f64>,
    pub f11: Array2<f64>,
    pub f12: Array2<f64>,
    pub f22: Array2<f64>,
    pub support_radius: f64,
}

impl FieldPair {
    pub fn zeros(n: usize, support_radius: f64) -> Self {
        let z = Array2::zeros((n, n));
        FieldPair {
            f1: z.clone(),
            f2: z.clone(),
            f11: z.clone(),
            f12: z.clone(),
            f22: z,
            support_radius,
        }
    }

    pub fn n(&self) -> usize {
        self.f1.nrows()
    }

    pub fn grids(&self) -> [&Array2<f64>; 5] {
        [&self.f1, &self.f2, &self.f11, &self.f12, &self.f22]
    }

    pub fn grids_mut(&mut self) -> [&mut Array2<f64>; 5] {
        [&mut self.f1, &mut self.f2, &mut self.f11, &mut self.f12, &mut self.f22]
    }

    pub fn component(&self, c: Component) -> &Array2<f64> {
        self.grids()[c as usize]
    }

    /// `a·self + b·other`, keeping the larger support radius.
    pub fn combine(&self, a: f64, other: &FieldPair, b: f64) -> FieldPair {
        let mut out = self.clone();
        for (o, g) in out.grids_mut().into_iter().zip(other.grids()) {
            Zip::from(o).and(g).for_each(|x, &y| *x = a * *x + b * y);
        }
        out.support_radius = self.support_radius.max(other.support_radius);
        out
    }

    pub fn is_zero(&self) -> bool {
        self.grids().iter().all(|g| g.iter().all(|&v| v == 0.0))
    }
}

/// The complex triple (𝓕₀, 𝓕₁, 𝓕₂) equivalent to a [`FieldPair`].
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexComponents {
    pub c0: Array2<f64>,
    pub c1: Array2<C64>,
    pub c2: Array2<C64>,
}

impl ComplexComponents {
    pub fn zeros(n: usize) -> Self {
        ComplexComponents {
            c0: Array2::zeros((n, n)),
            c1: Array2::zeros((n, n)),
            c2: Array2::zeros((n, n)),
        }
    }
}

pub fn components_from_fields(fp: &FieldPair) -> ComplexComponents {
    let c0 = Zip::from(&fp.f11).and(&fp.f22).map_collect(|&a, &b| 0.5 * (a + b));
    let c1 = Zip::from(&fp.f1).and(&fp.f2).map_collect(|&a, &b| C64::new(0.5 * a, 0.5 * b));
    let c2 = Zip::from(&fp.f11)
        .and(&fp.f22)
        .and(&fp.f12)
        .map_collect(|&a, &b, &c| C64::new(0.25 * (a - b), 0.5 * c));
    ComplexComponents { c0, c1, c2 }
}

/// Inverse of [`components_from_fields`]; `support_radius` is carried through.
pub fn fields_from_components(cc: &ComplexComponents, support_radius: f64) -> FieldPair {
    FieldPair {
        f1: cc.c1.mapv(|c| 2.0 * c.re),
        f2: cc.c1.mapv(|c| 2.0 * c.im),
        f11: Zip::from(&cc.c0).and(&cc.c2).map_collect(|&a, &c| a + 2.0 * c.re),
        f12: cc.c2.mapv(|c| 2.0 * c.im),
        f22: Zip::from(&cc.c0).and(&cc.c2).map_collect(|&a, &c| a - 2.0 * c.re),
        support_radius,
    }
}

/// f·u + ⟨F, u⊗u⟩ for component values `[f1, f2, F11, F12, F22]`.
#[inline]
pub fn pairing(v: [f64; 5], phi: f64) -> f64 {
    let (s, c) = phi.sin_cos();
    v[0] * c + v[1] * s + c * c * v[2] + 2.0 * c * s * v[3] + s * s * v[4]
}

/// The integrand f·u_φ + ⟨F, u_φ²⟩ on the whole grid.
pub fn direction_pairing(fp: &FieldPair, phi: f64) -> Array2<f64> {
    let mut out = Array2::zeros(fp.f1.raw_dim());
    Zip::from(&mut out)
        .and(&fp.f1)
        .and(&fp.f2)
        .and(&fp.f11)
        .and(&fp.f12)
        .and(&fp.f22)
        .for_each(|o, &a, &b, &c, &d, &e| *o = pairing([a, b, c, d, e], phi));
    out
}

/// The same integrand through its angular expansion
/// 𝓕₀ + 2Re(conj(𝓕₂)e^{2iφ}) + 2Re(conj(𝓕₁)e^{iφ}).
pub fn direction_pairing_expansion(cc: &ComplexComponents, phi: f64) -> Array2<f64> {
    let e1 = C64::from_polar(1.0, phi);
    let e2 = e1 * e1;
    Zip::from(&cc.c0)
        .and(&cc.c1)
        .and(&cc.c2)
        .map_collect(|&c0, &c1, &c2| c0 + 2.0 * (c2.conj() * e2).re + 2.0 * (c1.conj() * e1).re)
}

/// Field component addressed by a bump.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Component {
    F1 = 0,
    F2 = 1,
    F11 = 2,
    F12 = 3,
    F22 = 4,
}

impl Component {
    pub const ALL: [Component; 5] =
        [Component::F1, Component::F2, Component::F11, Component::F12, Component::F22];

    pub fn name(self) -> &'static str {
        match self {
            Component::F1 => "f1",
            Component::F2 => "f2",
            Component::F11 => "F11",
            Component::F12 => "F12",
            Component::F22 => "F22",
        }
    }
}

/// Isotropic Gaussian `amplitude·exp(−|x−c|²/width²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gaussian {
    pub amplitude: f64,
    pub center: Point,
    pub width: f64,
}

impl Gaussian {
    #[inline]
    pub fn eval(&self, x: Point) -> f64 {
        let dx = x[0] - self.center[0];
        let dy = x[1] - self.center[1];
        self.amplitude * (-(dx * dx + dy * dy) / (self.width * self.width)).exp()
    }

    /// Analytic gradient.
    pub fn gradient(&self, x: Point) -> Point {
        let v = self.eval(x);
        let s = -2.0 / (self.width * self.width);
        [s * (x[0] - self.center[0]) * v, s * (x[1] - self.center[1]) * v]
    }
}

/// A Gaussian bump attached to one field component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub component: Component,
    #[serde(flatten)]
    pub shape: Gaussian,
}

/// Smooth radial cutoff: 1 inside `taper·radius`, then the C^∞ bump profile
/// exp(1 − 1/(1 − t²)) in the rescaled radius t, vanishing beyond `radius`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cutoff {
    pub radius: f64,
    pub taper: f64,
}

impl Cutoff {
    pub fn eval(&self, x: Point) -> f64 {
        let r = x[0].hypot(x[1]);
        let r0 = self.taper * self.radius;
        if r <= r0 {
            1.0
        } else if r >= self.radius {
            0.0
        } else {
            let t = (r - r0) / (self.radius - r0);
            (1.0 - 1.0 / (1.0 - t * t)).exp()
        }
    }
}

/// Default fraction of the support radius over which a phantom is untapered.
pub const DEFAULT_TAPER: f64 = 0.0;

/// Sum of Gaussian bumps per component, multiplied by a smooth cutoff.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    pub support_radius: f64,
    #[serde(default = "default_taper")]
    pub taper: f64,
    #[serde(default)]
    pub bumps: Vec<Bump>,
}

fn default_taper() -> f64 {
    DEFAULT_TAPER
}

/// Parameters for seeded random phantoms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomPhantom {
    pub support_radius: f64,
    pub bumps_per_component: usize,
    /// Bump centres are drawn uniformly from the square `[-c, c]²`.
    pub center_spread: f64,
    pub width_min: f64,
    pub width_max: f64,
    pub amplitude: f64,
}

impl Default for RandomPhantom {
    fn default() -> Self {
        RandomPhantom {
            support_radius: 0.6,
            bumps_per_component: 2,
            center_spread: 0.15,
            width_min: 0.2,
            width_max: 0.3,
            amplitude: 1.0,
        }
    }
}

impl PhantomSpec {
    pub fn empty(support_radius: f64) -> Self {
        PhantomSpec { support_radius, taper: DEFAULT_TAPER, bumps: Vec::new() }
    }

    pub fn random(seed: u64, params: &RandomPhantom) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut bumps = Vec::new();
        for component in Component::ALL {
            for _ in 0..params.bumps_per_component {
                let c = params.center_spread;
                let center = [rng.random_range(-c..=c), rng.random_range(-c..=c)];
                let width = rng.random_range(params.width_min..=params.width_max);
                let amplitude = params.amplitude * rng.random_range(-1.0..=1.0);
                bumps.push(Bump { component, shape: Gaussian { amplitude, center, width } });
            }
        }
        PhantomSpec { support_radius: params.support_radius, taper: DEFAULT_TAPER, bumps }
    }

    pub fn cutoff(&self) -> Cutoff {
        Cutoff { radius: self.support_radius, taper: self.taper }
    }

    pub fn validate(&self, domain_inner_radius: f64) -> Result<()> {
        if !(self.support_radius > 0.0 && self.support_radius < domain_inner_radius) {
            return Err(Error::config(format!(
                "support radius {} must lie in (0, {domain_inner_radius})",
                self.support_radius
            )));
        }
        if !(0.0..1.0).contains(&self.taper) {
            return Err(Error::config(format!("taper {} must lie in [0, 1)", self.taper)));
        }
        for b in &self.bumps {
            let g = &b.shape;
            if g.center[0].hypot(g.center[1]) >= self.support_radius {
                return Err(Error::config(format!(
                    "bump at ({}, {}) lies outside the support radius {}",
                    g.center[0], g.center[1], self.support_radius
                )));
            }
            if !(g.width > 0.0) || !g.amplitude.is_finite() {
                return Err(Error::config("bump width must be positive and amplitude finite"));
            }
        }
        Ok(())
    }

    /// Exact value of one component at a point.
    pub fn eval(&self, component: Component, x: Point) -> f64 {
        let chi = self.cutoff().eval(x);
        if chi == 0.0 {
            return 0.0;
        }
        chi * self
            .bumps
            .iter()
            .filter(|b| b.component == component)
            .map(|b| b.shape.eval(x))
            .sum::<f64>()
    }

    /// All five component values at a point.
    pub fn eval_all(&self, x: Point) -> [f64; 5] {
        let mut v = [0.0; 5];
        let chi = self.cutoff().eval(x);
        if chi == 0.0 {
            return v;
        }
        for b in &self.bumps {
            v[b.component as usize] += b.shape.eval(x);
        }
        v.map(|s| s * chi)
    }
}

/// Samples a phantom on the mesh.
pub fn make_phantom(spec: &PhantomSpec, mesh: &Mesh) -> Result<FieldPair> {
    spec.validate(mesh.domain.inner_radius())?;
    let n = mesh.n;
    let mut fp = FieldPair::zeros(n, spec.support_radius);
    for iy in 0..n {
        for ix in 0..n {
            let v = spec.eval_all(mesh.node(ix, iy));
            for (g, val) in fp.grids_mut().into_iter().zip(v) {
                g[[iy, ix]] = val;
            }
        }
    }
    Ok(fp)
}

/// Compactly supported scalar potential ψ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarSpec {
    pub support_radius: f64,
    #[serde(default = "default_taper")]
    pub taper: f64,
    #[serde(default)]
    pub bumps: Vec<Gaussian>,
}

impl ScalarSpec {
    pub fn random(seed: u64, params: &RandomPhantom) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let count = (params.bumps_per_component * 2).max(1);
        let bumps = (0..count)
            .map(|_| {
                let c = params.center_spread;
                Gaussian {
                    amplitude: params.amplitude * rng.random_range(-1.0..=1.0),
                    center: [rng.random_range(-c..=c), rng.random_range(-c..=c)],
                    width: rng.random_range(params.width_min..=params.width_max),
                }
            })
            .collect();
        ScalarSpec { support_radius: params.support_radius, taper: DEFAULT_TAPER, bumps }
    }

    pub fn eval(&self, x: Point) -> f64 {
        let chi = Cutoff { radius: self.support_radius, taper: self.taper }.eval(x);
        if chi == 0.0 {
            return 0.0;
        }
        chi * self.bumps.iter().map(|g| g.eval(x)).sum::<f64>()
    }

    fn as_phantom(&self) -> PhantomSpec {
        PhantomSpec {
            support_radius: self.support_radius,
            taper: self.taper,
            bumps: self.bumps.iter().map(|&shape| Bump { component: Component::F11, shape }).collect(),
        }
    }
}

/// f = ∇ψ by spectral differentiation of the sampled potential, F = 0.
///
/// The samples are treated as one period of a trigonometric polynomial, which
/// is exactly what the spectral ray sampler reconstructs, so line integrals of
/// the result see the gradient of one smooth function.
pub fn make_gradient_field(psi: &ScalarSpec, mesh: &Mesh) -> Result<FieldPair> {
    psi.as_phantom().validate(mesh.domain.inner_radius())?;
    let n = mesh.n;
    let plan = Fft2::new(n, n);
    let mut spec: Vec<C64> =
        (0..n * n).map(|i| C64::new(psi.eval(mesh.node(i % n, i / n)), 0.0)).collect();
    plan.forward(&mut spec);
    let period = n as f64 * mesh.h;
    // angular wavenumber of bin m; the unpaired Nyquist bin has no real derivative
    let wave = |m: usize| -> f64 {
        let m = m as i64;
        let n = n as i64;
        if 2 * m == n {
            0.0
        } else {
            let signed = if 2 * m < n { m } else { m - n };
            2.0 * std::f64::consts::PI * signed as f64 / period
        }
    };
    let mut fp = FieldPair::zeros(n, psi.support_radius);
    for (axis, out) in [(0usize, &mut fp.f1), (1, &mut fp.f2)] {
        let mut d: Vec<C64> = spec
            .iter()
            .enumerate()
            .map(|(i, &v)| v * C64::new(0.0, wave(if axis == 0 { i % n } else { i / n })))
            .collect();
        plan.inverse(&mut d);
        for (o, v) in out.iter_mut().zip(&d) {
            *o = v.re;
        }
    }
    Ok(fp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Domain;

    fn uniform(n: usize, v: [f64; 5]) -> FieldPair {
        let mut fp = FieldPair::zeros(n, 0.5);
        for (g, x) in fp.grids_mut().into_iter().zip(v) {
            g.fill(x);
        }
        fp
    }

    #[test]
    fn component_examples() {
        let cc = components_from_fields(&uniform(2, [2.0, 0.0, 0.0, 0.0, 0.0]));
        assert_eq!((cc.c0[[0, 0]], cc.c1[[0, 0]], cc.c2[[0, 0]]), (0.0, C64::new(1.0, 0.0), C64::new(0.0, 0.0)));
        let cc = components_from_fields(&uniform(2, [0.0, 0.0, 1.0, 0.0, 1.0]));
        assert_eq!((cc.c0[[0, 0]], cc.c1[[0, 0]], cc.c2[[0, 0]]), (1.0, C64::new(0.0, 0.0), C64::new(0.0, 0.0)));
        let cc = components_from_fields(&uniform(2, [0.0, 0.0, 1.0, 2.0, -1.0]));
        assert_eq!(cc.c2[[1, 1]], C64::new(0.5, 1.0));
        assert_eq!(cc.c0[[1, 1]], 0.0);
    }

    #[test]
    fn recovery_examples() {
        let mut cc = ComplexComponents::zeros(1);
        cc.c1[[0, 0]] = C64::new(1.0, 0.0);
        let fp = fields_from_components(&cc, 0.5);
        assert_eq!([fp.f1[[0, 0]], fp.f2[[0, 0]], fp.f11[[0, 0]], fp.f12[[0, 0]], fp.f22[[0, 0]]], [2.0, 0.0, 0.0, 0.0, 0.0]);
        let mut cc = ComplexComponents::zeros(1);
        cc.c0[[0, 0]] = 1.0;
        let fp = fields_from_components(&cc, 0.5);
        assert_eq!([fp.f11[[0, 0]], fp.f12[[0, 0]], fp.f22[[0, 0]]], [1.0, 0.0, 1.0]);
    }

    #[test]
    fn identity_pairs_to_one() {
        let fp = uniform(3, [0.0, 0.0, 1.0, 0.0, 1.0]);
        for phi in [0.0, 0.3, 2.2] {
            assert!(direction_pairing(&fp, phi).iter().all(|v| (v - 1.0).abs() < 1e-15));
        }
        let fp = uniform(3, [1.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(direction_pairing(&fp, std::f64::consts::FRAC_PI_2).iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn phantom_examples() {
        let mesh = Mesh::new(Domain::unit_disk(), 32).unwrap();
        let fp = make_phantom(&PhantomSpec::empty(0.5), &mesh).unwrap();
        assert!(fp.is_zero());

        let mut spec = PhantomSpec::empty(0.5);
        spec.bumps.push(Bump {
            component: Component::F11,
            shape: Gaussian { amplitude: 1.0, center: [0.0, 0.0], width: 0.1 },
        });
        assert_eq!(spec.eval(Component::F11, [0.0, 0.0]), 1.0);
        assert_eq!(spec.eval(Component::F22, [0.0, 0.0]), 0.0);

        spec.bumps[0].shape.center = [0.6, 0.0];
        assert!(matches!(make_phantom(&spec, &mesh), Err(Error::Config(_))));
    }

    #[test]
    fn seeded_phantoms_are_reproducible() {
        let mesh = Mesh::new(Domain::unit_disk(), 32).unwrap();
        let p = RandomPhantom::default();
        let a = make_phantom(&PhantomSpec::random(7, &p), &mesh).unwrap();
        let b = make_phantom(&PhantomSpec::random(7, &p), &mesh).unwrap();
        assert_eq!(a, b);
        let c = make_phantom(&PhantomSpec::random(8, &p), &mesh).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn cutoff_vanishes_outside_support() {
        let spec = PhantomSpec::random(3, &RandomPhantom::default());
        for x in [[0.61, 0.0], [0.0, -0.7], [0.5, 0.5]] {
            assert_eq!(spec.eval_all(x), [0.0; 5]);
        }
    }

    #[test]
    fn radial_potential_gives_radial_gradient() {
        let mesh = Mesh::new(Domain::unit_disk(), 33).unwrap();
        let psi = ScalarSpec {
            support_radius: 0.6,
            taper: DEFAULT_TAPER,
            bumps: vec![Gaussian { amplitude: 1.0, center: [0.0, 0.0], width: 0.2 }],
        };
        let fp = make_gradient_field(&psi, &mesh).unwrap();
        // node 16 sits at the origin for an odd lattice
        assert!(fp.f1[[16, 16]].abs() < 1e-14 && fp.f2[[16, 16]].abs() < 1e-14);
        let x = mesh.node(20, 16);
        assert!(fp.f1[[16, 20]] * x[0] < 0.0 && fp.f2[[16, 20]].abs() < 1e-14);
        assert!(fp.f11.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gradient_matches_pointwise_derivative() {
        let mesh = Mesh::new(Domain::unit_disk(), 64).unwrap();
        let g = Gaussian { amplitude: 0.8, center: [0.1, -0.05], width: 0.2 };
        let psi = ScalarSpec { support_radius: 0.7, taper: DEFAULT_TAPER, bumps: vec![g] };
        let fp = make_gradient_field(&psi, &mesh).unwrap();
        let e = 1e-5;
        let mut worst: f64 = 0.0;
        for iy in 0..64 {
            for ix in 0..64 {
                let [x, y] = mesh.node(ix, iy);
                let dx = (psi.eval([x + e, y]) - psi.eval([x - e, y])) / (2.0 * e);
                let dy = (psi.eval([x, y + e]) - psi.eval([x, y - e])) / (2.0 * e);
                worst = worst.max((fp.f1[[iy, ix]] - dx).abs()).max((fp.f2[[iy, ix]] - dy).abs());
            }
        }
        assert!(worst < 5e-5, "{worst:e}");
    }
}
