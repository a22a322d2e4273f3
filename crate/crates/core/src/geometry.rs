//! Convex domain, boundary sampling, chords and the Cartesian lattice.

use std::f64::consts::PI;

use ndarray::Array2;

use crate::{Error, Point, Result, C64};

/// Tolerance used to classify boundary directions as tangent.
pub const TOL_TAN: f64 = 1e-9;

/// Shape of the centred convex domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DomainKind {
    Disk { radius: f64 },
    Ellipse { a: f64, b: f64 },
}

/// A strictly convex domain centred at the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    pub kind: DomainKind,
}

impl Domain {
    pub fn unit_disk() -> Self {
        Domain { kind: DomainKind::Disk { radius: 1.0 } }
    }

    pub fn disk(radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::config(format!("disk radius must be positive, got {radius}")));
        }
        Ok(Domain { kind: DomainKind::Disk { radius } })
    }

    pub fn ellipse(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(Error::config(format!("ellipse semi-axes must be positive, got ({a}, {b})")));
        }
        Ok(Domain { kind: DomainKind::Ellipse { a, b } })
    }

    /// Semi-axes along x and y.
    pub fn semi_axes(&self) -> (f64, f64) {
        match self.kind {
            DomainKind::Disk { radius } => (radius, radius),
            DomainKind::Ellipse { a, b } => (a, b),
        }
    }

    /// Radius of the smallest centred disk containing the domain.
    pub fn outer_radius(&self) -> f64 {
        let (a, b) = self.semi_axes();
        a.max(b)
    }

    /// Radius of the largest centred disk inside the domain.
    pub fn inner_radius(&self) -> f64 {
        let (a, b) = self.semi_axes();
        a.min(b)
    }

    /// Implicit level function, negative inside and zero on the boundary.
    pub fn level(&self, x: Point) -> f64 {
        let (a, b) = self.semi_axes();
        (x[0] / a).powi(2) + (x[1] / b).powi(2) - 1.0
    }

    pub fn contains(&self, x: Point) -> bool {
        self.level(x) <= 1e-12
    }

    /// Boundary curve γ(θ).
    pub fn boundary_point(&self, theta: f64) -> Point {
        let (a, b) = self.semi_axes();
        [a * theta.cos(), b * theta.sin()]
    }

    /// Derivative γ′(θ).
    pub fn boundary_tangent(&self, theta: f64) -> Point {
        let (a, b) = self.semi_axes();
        [-a * theta.sin(), b * theta.cos()]
    }

    /// Outward unit normal at parameter θ.
    pub fn normal(&self, theta: f64) -> Point {
        let (a, b) = self.semi_axes();
        let n = [b * theta.cos(), a * theta.sin()];
        let len = n[0].hypot(n[1]);
        [n[0] / len, n[1] / len]
    }

    /// Outward unit normal at a point on (or near) the boundary.
    pub fn normal_at(&self, x: Point) -> Point {
        let (a, b) = self.semi_axes();
        let g = [x[0] / (a * a), x[1] / (b * b)];
        let len = g[0].hypot(g[1]);
        [g[0] / len, g[1] / len]
    }

    /// Distance from the centre to the boundary along the direction of angle `psi`.
    pub fn radius_along(&self, psi: f64) -> f64 {
        let (a, b) = self.semi_axes();
        1.0 / ((psi.cos() / a).powi(2) + (psi.sin() / b).powi(2)).sqrt()
    }

    /// Signed radial distance to the boundary, positive inside.
    ///
    /// Exact distance for the disk; for the ellipse it is measured along the
    /// ray from the centre and bounds the true distance from above.
    pub fn radial_gap(&self, x: Point) -> f64 {
        let r = x[0].hypot(x[1]);
        self.radius_along(x[1].atan2(x[0])) - r
    }

    /// Parameter interval `[t_lo, t_hi]` where `base + t·u_φ` lies in the closed domain.
    pub fn line_span(&self, base: Point, phi: f64) -> Option<(f64, f64)> {
        let (a, b) = self.semi_axes();
        let u = [phi.cos(), phi.sin()];
        let qa = (u[0] / a).powi(2) + (u[1] / b).powi(2);
        let qb = 2.0 * (base[0] * u[0] / (a * a) + base[1] * u[1] / (b * b));
        let qc = self.level(base);
        let disc = qb * qb - 4.0 * qa * qc;
        if disc < 0.0 {
            return None;
        }
        let sq = disc.sqrt();
        // numerically stable pair of roots
        let q = -0.5 * (qb + qb.signum() * sq);
        let (r1, r2) = if q == 0.0 { (0.0, 0.0) } else { (q / qa, qc / q) };
        Some((r1.min(r2), r1.max(r2)))
    }

    /// Sanity checks on a boundary sampling: convexity by chord midpoints,
    /// non-degenerate parametrization and unit normals.
    pub fn validate(&self, samples: usize) -> Result<()> {
        let th = |i: usize| 2.0 * PI * i as f64 / samples as f64;
        for i in 0..samples {
            let t = self.boundary_tangent(th(i));
            if t[0].hypot(t[1]) <= 0.0 {
                return Err(Error::config("degenerate boundary parametrization"));
            }
            let nu = self.normal(th(i));
            if (nu[0].hypot(nu[1]) - 1.0).abs() > 1e-12 {
                return Err(Error::config("boundary normal is not unit length"));
            }
            for j in (i + 1..samples).step_by(7) {
                let p = self.boundary_point(th(i));
                let q = self.boundary_point(th(j));
                let mid = [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])];
                if self.level(mid) >= 0.0 {
                    return Err(Error::config("domain is not strictly convex"));
                }
            }
        }
        Ok(())
    }
}

/// Direction vector u_φ.
#[inline]
pub fn direction(phi: f64) -> Point {
    [phi.cos(), phi.sin()]
}

/// Rotated direction u_φ^⊥ = (−sin φ, cos φ).
#[inline]
pub fn normal_direction(phi: f64) -> Point {
    [-phi.sin(), phi.cos()]
}

#[inline]
pub fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Foot point Π_φ(x) = x − (x·u_φ)u_φ.
pub fn project(x: Point, phi: f64) -> Point {
    let u = direction(phi);
    let p = dot(x, u);
    [x[0] - p * u[0], x[1] - p * u[1]]
}

/// An oriented line given by a base point and a direction angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub base: Point,
    pub angle: f64,
}

impl Ray {
    pub fn new(base: Point, angle: f64) -> Self {
        Ray { base, angle }
    }

    pub fn direction(&self) -> Point {
        direction(self.angle)
    }

    pub fn foot(&self) -> Point {
        project(self.base, self.angle)
    }

    /// Signed position of the base point along the line, x·u_φ.
    pub fn offset(&self) -> f64 {
        dot(self.base, self.direction())
    }

    /// Point at parameter `s` measured from the foot point.
    pub fn at(&self, s: f64) -> Point {
        let f = self.foot();
        let u = self.direction();
        [f[0] + s * u[0], f[1] + s * u[1]]
    }
}

/// Entry and exit parameters of the chord through a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Chord {
    pub tau_minus: f64,
    pub tau_plus: f64,
}

impl Chord {
    pub fn length(&self) -> f64 {
        self.tau_minus + self.tau_plus
    }
}

/// Distances from `x` to the boundary backwards and forwards along u_φ.
pub fn chord_times(domain: &Domain, x: Point, phi: f64) -> Result<Chord> {
    if domain.level(x) > 1e-10 {
        return Err(Error::OutsideDomain { x: x[0], y: x[1] });
    }
    let (lo, hi) = domain.line_span(x, phi).unwrap_or((0.0, 0.0));
    Ok(Chord { tau_minus: (-lo).max(0.0), tau_plus: hi.max(0.0) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryClass {
    Incoming,
    Outgoing,
    Tangent,
}

/// Splits boundary directions into Γ₊ (outgoing), Γ₋ (incoming) and tangent pairs.
pub fn classify_boundary(domain: &Domain, x: Point, phi: f64) -> BoundaryClass {
    let c = dot(direction(phi), domain.normal_at(x));
    if c > TOL_TAN {
        BoundaryClass::Outgoing
    } else if c < -TOL_TAN {
        BoundaryClass::Incoming
    } else {
        BoundaryClass::Tangent
    }
}

/// Uniform θ-sampling of the boundary with trapezoid weights.
#[derive(Debug, Clone)]
pub struct BoundaryNodes {
    pub theta: Vec<f64>,
    pub points: Vec<Point>,
    /// Complex measure dζ = γ′(θ)·Δθ.
    pub dzeta: Vec<C64>,
    /// Arclength weights |γ′(θ)|·Δθ.
    pub arclength: Vec<f64>,
    pub normals: Vec<Point>,
}

impl BoundaryNodes {
    pub fn new(domain: &Domain, count: usize) -> Self {
        let dth = 2.0 * PI / count as f64;
        let theta: Vec<f64> = (0..count).map(|i| i as f64 * dth).collect();
        let points = theta.iter().map(|&t| domain.boundary_point(t)).collect();
        let tangents: Vec<Point> = theta.iter().map(|&t| domain.boundary_tangent(t)).collect();
        let dzeta = tangents.iter().map(|t| C64::new(t[0], t[1]) * dth).collect();
        let arclength = tangents.iter().map(|t| t[0].hypot(t[1]) * dth).collect();
        let normals = theta.iter().map(|&t| domain.normal(t)).collect();
        BoundaryNodes { theta, points, dzeta, arclength, normals }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Cell-centred Cartesian lattice over the bounding square of a domain,
/// with inside/near-boundary flags and fractional cell areas.
#[derive(Debug, Clone)]
pub struct Mesh {
    pub domain: Domain,
    pub n: usize,
    pub h: f64,
    /// Coordinate of the first node along each axis.
    pub origin: f64,
    pub inside: Array2<bool>,
    pub near_boundary: Array2<bool>,
    /// Area of each cell lying inside the domain.
    pub cell_area: Array2<f64>,
}

const AREA_SUBSAMPLES: usize = 16;

impl Mesh {
    pub fn new(domain: Domain, n: usize) -> Result<Self> {
        if n < 4 {
            return Err(Error::config(format!("grid resolution {n} is too small")));
        }
        let half = domain.outer_radius();
        let h = 2.0 * half / n as f64;
        let origin = -half + 0.5 * h;
        let coord = |i: usize| origin + i as f64 * h;

        let mut inside = Array2::from_elem((n, n), false);
        let mut near = Array2::from_elem((n, n), false);
        let mut area = Array2::zeros((n, n));
        for iy in 0..n {
            for ix in 0..n {
                let x = [coord(ix), coord(iy)];
                let gap = domain.radial_gap(x);
                let ins = domain.contains(x);
                inside[[iy, ix]] = ins;
                near[[iy, ix]] = ins && gap < h;
                area[[iy, ix]] = if gap > 1.5 * h {
                    h * h
                } else if gap < -1.5 * h {
                    0.0
                } else {
                    cell_fraction(&domain, x, h) * h * h
                };
            }
        }
        Ok(Mesh { domain, n, h, origin, inside, near_boundary: near, cell_area: area })
    }

    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        self.origin + i as f64 * self.h
    }

    #[inline]
    pub fn node(&self, ix: usize, iy: usize) -> Point {
        [self.coord(ix), self.coord(iy)]
    }

    #[inline]
    pub fn node_z(&self, ix: usize, iy: usize) -> C64 {
        C64::new(self.coord(ix), self.coord(iy))
    }

    /// Nodes whose cell overlaps the domain; sequence fields are defined there.
    #[inline]
    pub fn is_active(&self, ix: usize, iy: usize) -> bool {
        self.cell_area[[iy, ix]] > 0.0
    }

    pub fn active_mask(&self) -> Array2<bool> {
        self.cell_area.mapv(|a| a > 0.0)
    }

    /// `(ix, iy)` of every active node in row-major order.
    pub fn active_nodes(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for iy in 0..self.n {
            for ix in 0..self.n {
                if self.is_active(ix, iy) {
                    out.push((ix, iy));
                }
            }
        }
        out
    }

    /// Mask of nodes inside the disk of the given radius.
    pub fn disk_mask(&self, radius: f64) -> Array2<bool> {
        Array2::from_shape_fn((self.n, self.n), |(iy, ix)| {
            let x = self.node(ix, iy);
            x[0].hypot(x[1]) <= radius
        })
    }

    /// Mask of inside nodes at radial distance at least `gap` from the boundary.
    pub fn interior_mask(&self, gap: f64) -> Array2<bool> {
        Array2::from_shape_fn((self.n, self.n), |(iy, ix)| {
            self.inside[[iy, ix]] && self.domain.radial_gap(self.node(ix, iy)) >= gap
        })
    }
}

fn cell_fraction(domain: &Domain, centre: Point, h: f64) -> f64 {
    let m = AREA_SUBSAMPLES;
    let mut hits = 0usize;
    for j in 0..m {
        for i in 0..m {
            let x = [
                centre[0] + ((i as f64 + 0.5) / m as f64 - 0.5) * h,
                centre[1] + ((j as f64 + 0.5) / m as f64 - 0.5) * h,
            ];
            if domain.level(x) < 0.0 {
                hits += 1;
            }
        }
    }
    hits as f64 / (m * m) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn project_examples() {
        let p = project([3.0, 4.0], 0.0);
        assert!(close(p[0], 0.0, 1e-15) && close(p[1], 4.0, 1e-15));
        let p = project([1.0, 1.0], PI / 2.0);
        assert!(close(p[0], 1.0, 1e-15) && close(p[1], 0.0, 1e-15));
    }

    #[test]
    fn chord_examples() {
        let d = Domain::unit_disk();
        for phi in [0.0, 0.4, 2.0, 5.5] {
            let c = chord_times(&d, [0.0, 0.0], phi).unwrap();
            assert!(close(c.tau_minus, 1.0, 1e-14) && close(c.tau_plus, 1.0, 1e-14));
        }
        let c = chord_times(&d, [0.5, 0.0], 0.0).unwrap();
        assert!(close(c.tau_plus, 0.5, 1e-14) && close(c.tau_minus, 1.5, 1e-14));
        let c = chord_times(&d, [1.0, 0.0], PI / 2.0).unwrap();
        assert!(close(c.tau_plus, 0.0, 1e-12) && close(c.tau_minus, 0.0, 1e-12));
        assert!(matches!(chord_times(&d, [1.5, 0.0], 0.0), Err(Error::OutsideDomain { .. })));
    }

    #[test]
    fn classify_examples() {
        let d = Domain::unit_disk();
        assert_eq!(classify_boundary(&d, [1.0, 0.0], 0.0), BoundaryClass::Outgoing);
        assert_eq!(classify_boundary(&d, [1.0, 0.0], PI), BoundaryClass::Incoming);
        assert_eq!(classify_boundary(&d, [1.0, 0.0], PI / 2.0), BoundaryClass::Tangent);
    }

    #[test]
    fn ellipse_chord_endpoints_on_boundary() {
        let d = Domain::ellipse(1.3, 0.8).unwrap();
        let x = [0.2, -0.3];
        let c = chord_times(&d, x, 0.9).unwrap();
        let u = direction(0.9);
        let exit = [x[0] + c.tau_plus * u[0], x[1] + c.tau_plus * u[1]];
        let entry = [x[0] - c.tau_minus * u[0], x[1] - c.tau_minus * u[1]];
        assert!(d.level(exit).abs() < 1e-12 && d.level(entry).abs() < 1e-12);
    }

    #[test]
    fn domains_validate() {
        Domain::unit_disk().validate(256).unwrap();
        Domain::ellipse(1.5, 0.7).unwrap().validate(256).unwrap();
    }

    #[test]
    fn cell_areas_sum_to_domain_area() {
        let mesh = Mesh::new(Domain::unit_disk(), 64).unwrap();
        let total: f64 = mesh.cell_area.sum();
        assert!(close(total, PI, 2e-3), "{total}");
        assert!(mesh.near_boundary.iter().zip(mesh.inside.iter()).all(|(n, i)| !n || *i));
    }
}
