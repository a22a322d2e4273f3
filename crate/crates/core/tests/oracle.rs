//! Independent-oracle checks: a manufactured transport solution, area
//! integrals against the FFT operator, and forward data under refinement.

use std::f64::consts::PI;

use momtomo::aanalytic::{PompeiuPlan, SeqField};
use momtomo::fields::{make_phantom, ComplexComponents, PhantomSpec, RandomPhantom};
use momtomo::forward::{angle, forward_all, Attenuation, AttenuationSpec, ForwardConfig};
use momtomo::geometry::{Domain, Mesh, Ray};
use momtomo::oracle::{oracle_area_integral, oracle_moment, transport_residual, OracleConfig};
use momtomo::C64;

const W: f64 = 0.4;
const MODES: usize = 40;
const SAMPLES: usize = 128;

/// ψ and the two iterated backward line integrals of ψ, in closed form.
/// With p the signed distance to the line and s the position along it,
/// v¹ = e^{−p²/w²}(w√π/2) erfc(−s/w) and
/// v² = e^{−p²/w²}[(w²/2)e^{−s²/w²} + s (w√π/2) erfc(−s/w)].
fn exact(level: usize, x: [f64; 2], phi: f64) -> f64 {
    let (c, s) = (phi.cos(), phi.sin());
    let along = x[0] * c + x[1] * s;
    let p = -x[0] * s + x[1] * c;
    let g = (-(p * p) / (W * W)).exp();
    let half = 0.5 * W * PI.sqrt() * libm::erfc(-along / W);
    match level {
        0 => g * (-(along * along) / (W * W)).exp(),
        1 => g * half,
        _ => g * (0.5 * W * W * (-(along * along) / (W * W)).exp() + along * half),
    }
}

/// Modes v₋ₙ = (1/2π)∫ v e^{inφ} dφ, n = 0..MODES.
fn modes(mesh: &Mesh, level: usize) -> SeqField {
    let mut out = SeqField::zeros(MODES, mesh.n);
    for (ix, iy) in mesh.active_nodes() {
        let x = mesh.node(ix, iy);
        let samples: Vec<f64> = (0..SAMPLES).map(|j| exact(level, x, angle(j, SAMPLES))).collect();
        for n in 0..MODES {
            let c: C64 = samples.iter().enumerate().map(|(j, &v)| v * C64::from_polar(1.0, n as f64 * angle(j, SAMPLES))).sum();
            out.data[[n, iy, ix]] = c / SAMPLES as f64;
        }
    }
    out
}

#[test]
fn manufactured_transport_solution_has_second_order_residual() {
    let mut errs = Vec::new();
    for n in [32usize, 64, 128] {
        let mesh = Mesh::new(Domain::unit_disk(), n).unwrap();
        let v = [modes(&mesh, 0), modes(&mesh, 1), modes(&mesh, 2)];
        // f = ∇ψ, so c1 = ∂̄ψ and the even components vanish
        let mut comps = ComplexComponents::zeros(n);
        for (ix, iy) in mesh.active_nodes() {
            let x = mesh.node(ix, iy);
            let psi = exact(0, x, 0.0);
            let s = -2.0 / (W * W) * psi;
            comps.c1[[iy, ix]] = 0.5 * C64::new(s * x[0], s * x[1]);
        }
        let r = transport_residual(&v, &comps, None, &mesh, &mesh.disk_mask(0.7));
        errs.push(r.relative);
    }
    for k in 0..3 {
        let o1 = (errs[0][k] / errs[1][k]).log2();
        let o2 = (errs[1][k] / errs[2][k]).log2();
        assert!(o1 > 1.8 && o2 > 1.8, "level {k}: residuals {:?}, orders {o1:.2} {o2:.2}", errs.iter().map(|e| e[k]).collect::<Vec<_>>());
        assert!(errs[2][k] < 1e-3, "level {k}: {:e}", errs[2][k]);
    }
}

#[test]
fn manufactured_solution_fails_with_wrong_source() {
    // the same residual must notice a source that does not match
    let mesh = Mesh::new(Domain::unit_disk(), 64).unwrap();
    let v = [modes(&mesh, 0), modes(&mesh, 1), modes(&mesh, 2)];
    let comps = ComplexComponents::zeros(64);
    let r = transport_residual(&v, &comps, None, &mesh, &mesh.disk_mask(0.7));
    assert!(r.absolute[0] > 1e-2, "{:?}", r.absolute);
}

fn smooth(x: [f64; 2]) -> C64 {
    let z = C64::new(x[0], x[1]);
    (0.7 * z).exp() * (1.0 + 0.3 * z.conj())
}

#[test]
fn area_operator_matches_polar_quadrature() {
    let cfg = OracleConfig { refinement: 4, ..Default::default() };
    let targets = [[0.0, 0.0], [0.3, -0.2], [-0.45, 0.1], [0.1, 0.55]];
    let mut errors = Vec::new();
    for n in [64usize, 128] {
        let mesh = Mesh::new(Domain::unit_disk(), n).unwrap();
        let plan = PompeiuPlan::new(&mesh, 3);
        let mut worst: f64 = 0.0;
        for j in 0..2 {
            // a single nonzero entry h₋₂ⱼ feeds entry 0 through the kernel of index j
            let mut h = SeqField::zeros(3, n);
            for (ix, iy) in mesh.active_nodes() {
                h.data[[2 * j, iy, ix]] = smooth(mesh.node(ix, iy));
            }
            let t = plan.apply(&h).unwrap();
            for x in targets {
                let idx = |c: f64| ((c - mesh.origin) / mesh.h).round() as usize;
                let (ix, iy) = (idx(x[0]), idx(x[1]));
                let z = mesh.node(ix, iy);
                let reference = oracle_area_integral(smooth, z, j, &mesh.domain, &cfg).unwrap();
                worst = worst.max((t.data[[0, iy, ix]] - reference).norm() / reference.norm().max(1.0));
            }
        }
        errors.push(worst);
    }
    assert!(errors[1] < 5e-3 && errors[1] < 0.6 * errors[0], "{errors:?}");
}

#[test]
fn forward_data_approach_the_oracle_under_refinement() {
    let spec = PhantomSpec::random(21, &RandomPhantom::default());
    let aspec = AttenuationSpec::bump(0.3, [0.1, -0.05], 0.3);
    let cfg = OracleConfig::default();
    let (nb, na) = (16, 16);
    let mut errors = Vec::new();
    let mut rays = Vec::new();
    for n in [32usize, 64, 128] {
        let mesh = Mesh::new(Domain::unit_disk(), n).unwrap();
        let fp = make_phantom(&spec, &mesh).unwrap();
        let att = Attenuation::from_spec(&aspec, &mesh).unwrap();
        let ms = forward_all(&mesh, &fp, &att, &ForwardConfig::for_mesh(&mesh, na, nb)).unwrap();
        let nodes = ms.boundary();
        if rays.is_empty() {
            for i in (0..nb).step_by(3) {
                for j in (0..na).step_by(5) {
                    if ms.outgoing[[i, j]] {
                        let ray = Ray::new(nodes.points[i], angle(j, na));
                        let exact: Vec<f64> =
                            (0..3).map(|k| oracle_moment(&spec, &aspec, k, &ray, &mesh.domain, &cfg).unwrap()).collect();
                        rays.push((i, j, exact));
                    }
                }
            }
        }
        let e = rays
            .iter()
            .flat_map(|(i, j, exact)| (0..3).map(move |k| (k, *i, *j, exact[k])))
            .map(|(k, i, j, v)| (ms.data[[k, i, j]] - v).abs())
            .fold(0.0, f64::max);
        errors.push(e);
    }
    assert!(!rays.is_empty());
    assert!(errors.windows(2).all(|w| w[1] < 0.5 * w[0]), "{errors:?}");
    assert!(errors[2] < 1e-4, "{errors:?}");
}
