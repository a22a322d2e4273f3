//! The Bukhgeim-Cauchy boundary integral operator.

use std::f64::consts::PI;

use ndarray::Array2;
use rayon::prelude::*;

use crate::geometry::{BoundaryNodes, Mesh};
use crate::trace::BoundarySeq;
use crate::{Error, Result, C64};

use super::SeqField;

/// Evaluates (𝔅w)₋ₙ(z), 0 ≤ n ≤ N, at arbitrary interior points.
///
/// Returns a `targets × (N+1)` array. The series over j is summed by the
/// backward recursion Pₙ = q (w₋ₙ₋₂ + Pₙ₊₂) with q = (ζ̄−z̄)/(ζ−z), so each
/// target/boundary pair costs O(N).
pub fn bukhgeim_at(boundary: &BoundarySeq, nodes: &BoundaryNodes, targets: &[C64]) -> Result<Array2<C64>> {
    if boundary.n_boundary() != nodes.len() {
        return Err(Error::arg(format!(
            "boundary data has {} nodes, sampling has {}",
            boundary.n_boundary(),
            nodes.len()
        )));
    }
    let len = boundary.len();
    let zeta: Vec<C64> = nodes.points.iter().map(|p| C64::new(p[0], p[1])).collect();
    // node-major copy for locality in the inner loop
    let w: Vec<C64> = boundary.data.t().iter().copied().collect();
    let scale = C64::new(0.0, -0.5 / PI);

    let rows: Vec<Vec<C64>> = targets
        .par_iter()
        .map(|&z| {
            let mut out = vec![C64::new(0.0, 0.0); len];
            for (b, (&zb, &dz)) in zeta.iter().zip(&nodes.dzeta).enumerate() {
                let d = zb - z;
                let a = dz / d;
                let amb = C64::new(0.0, 2.0 * a.im);
                let q = d.conj() / d;
                let wb = &w[b * len..(b + 1) * len];
                let mut chain = [C64::new(0.0, 0.0); 2];
                for n in (0..len).rev() {
                    let next = if n + 2 < len { wb[n + 2] } else { C64::new(0.0, 0.0) };
                    let p = &mut chain[n & 1];
                    *p = q * (next + *p);
                    out[n] += wb[n] * a + *p * amb;
                }
            }
            out.iter_mut().for_each(|v| *v *= scale);
            out
        })
        .collect();

    let mut arr = Array2::zeros((targets.len(), len));
    for (t, row) in rows.into_iter().enumerate() {
        for (n, v) in row.into_iter().enumerate() {
            arr[[t, n]] = v;
        }
    }
    Ok(arr)
}

/// Default distance, in grid steps, below which 𝔅 is extrapolated instead of evaluated.
pub const NEAR_STEPS: f64 = 2.0;

/// 𝔅 on all active nodes of the mesh. Nodes closer than `near_dist` to Γ, and
/// active nodes outside Ω, take values extrapolated quadratically along the
/// radial direction from three evaluation points at distances
/// `near_dist`, `near_dist + h`, `near_dist + 2h`.
pub fn bukhgeim_cauchy(
    boundary: &BoundarySeq,
    nodes: &BoundaryNodes,
    mesh: &Mesh,
    near_dist: f64,
) -> Result<SeqField> {
    let len = boundary.len();
    let h = mesh.h;
    let mut targets = Vec::new();
    // (ix, iy, first target index, extrapolation parameter or None)
    let mut plan: Vec<(usize, usize, usize, Option<f64>)> = Vec::new();
    for (ix, iy) in mesh.active_nodes() {
        let x = mesh.node(ix, iy);
        let gap = mesh.domain.radial_gap(x);
        if gap >= near_dist {
            plan.push((ix, iy, targets.len(), None));
            targets.push(C64::new(x[0], x[1]));
        } else {
            let psi = x[1].atan2(x[0]);
            let r = x[0].hypot(x[1]);
            let r0 = mesh.domain.radius_along(psi) - near_dist;
            plan.push((ix, iy, targets.len(), Some((r - r0) / h)));
            for k in 0..3 {
                targets.push(C64::from_polar(r0 - k as f64 * h, psi));
            }
        }
    }
    let vals = bukhgeim_at(boundary, nodes, &targets)?;
    let mut out = SeqField::zeros(len, mesh.n);
    for (ix, iy, t, extra) in plan {
        match extra {
            None => {
                for n in 0..len {
                    out.data[[n, iy, ix]] = vals[[t, n]];
                }
            }
            Some(s) => {
                // Lagrange weights for nodes at s = 0, −1, −2
                let w = [0.5 * (s + 1.0) * (s + 2.0), -s * (s + 2.0), 0.5 * s * (s + 1.0)];
                for n in 0..len {
                    out.data[[n, iy, ix]] =
                        w[0] * vals[[t, n]] + w[1] * vals[[t + 1, n]] + w[2] * vals[[t + 2, n]];
                }
            }
        }
    }
    Ok(out)
}
