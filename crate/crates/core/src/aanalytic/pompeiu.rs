//! The Pompeiu-like area integral operator
//! (𝒯h)₋ₙ(z) = −(1/π) Σⱼ ∬_Ω h₋ₙ₋₂ⱼ(ζ) (ζ̄−z̄)ʲ/(ζ−z)ʲ⁺¹ dA(ζ).

use std::f64::consts::PI;

use ndarray::Array2;
use rayon::prelude::*;

use crate::fft::Fft2;
use crate::geometry::Mesh;
use crate::{Error, Result, C64};

use super::SeqField;

/// Kernel Kⱼ(d) = −(1/π) d̄ʲ / dʲ⁺¹ for a lattice offset `(ox, oy)` in steps of `h`.
///
/// The self cell contributes zero by symmetry. The eight neighbouring cells
/// use the mean of the kernel over a 2×2 subdivision.
pub fn lattice_kernel(j: usize, ox: i64, oy: i64, h: f64) -> C64 {
    if ox == 0 && oy == 0 {
        return C64::new(0.0, 0.0);
    }
    let k = |dx: f64, dy: f64| {
        let d = C64::new(dx * h, dy * h);
        -(d.conj().powu(j as u32)) / (d.powu(j as u32 + 1) * PI)
    };
    if ox.abs() <= 1 && oy.abs() <= 1 {
        let (x, y) = (ox as f64, oy as f64);
        0.25 * (k(x - 0.25, y - 0.25) + k(x + 0.25, y - 0.25) + k(x - 0.25, y + 0.25) + k(x + 0.25, y + 0.25))
    } else {
        k(ox as f64, oy as f64)
    }
}

/// Precomputed kernel spectra for repeated application of 𝒯 on one mesh.
pub struct PompeiuPlan {
    n: usize,
    pad: usize,
    fft: Fft2,
    /// Spectra of −Kⱼ on the padded lattice, j = 0..kernels.len().
    kernels: Vec<Vec<C64>>,
    weights: Array2<f64>,
}

impl PompeiuPlan {
    /// Plan able to handle sequences with up to `max_len` entries.
    pub fn new(mesh: &Mesh, max_len: usize) -> Self {
        let n = mesh.n;
        let pad = 2 * n;
        let fft = Fft2::new(pad, pad);
        let jmax = max_len.saturating_sub(1) / 2;
        let kernels = (0..=jmax)
            .into_par_iter()
            .map(|j| {
                let mut buf = vec![C64::new(0.0, 0.0); pad * pad];
                let span = n as i64 - 1;
                for oy in -span..=span {
                    for ox in -span..=span {
                        let r = oy.rem_euclid(pad as i64) as usize;
                        let c = ox.rem_euclid(pad as i64) as usize;
                        // correlation with K equals convolution with K(−d) = −K(d)
                        buf[r * pad + c] = -lattice_kernel(j, ox, oy, mesh.h);
                    }
                }
                fft.forward(&mut buf);
                buf
            })
            .collect();
        PompeiuPlan { n, pad, fft, kernels, weights: mesh.cell_area.clone() }
    }

    /// Longest sequence the plan can handle.
    pub fn max_len(&self) -> usize {
        2 * self.kernels.len()
    }

    /// Applies 𝒯 to `h`, whose values are used with the fractional cell areas as weights.
    pub fn apply(&self, h: &SeqField) -> Result<SeqField> {
        let len = h.len();
        if len > self.max_len() {
            return Err(Error::Truncation { expected: self.max_len(), found: len });
        }
        if h.n() != self.n {
            return Err(Error::arg("sequence field does not match the planned mesh"));
        }
        let (n, pad) = (self.n, self.pad);
        let spectra: Vec<Vec<C64>> = (0..len)
            .into_par_iter()
            .map(|m| {
                let mut buf = vec![C64::new(0.0, 0.0); pad * pad];
                let e = h.entry(m);
                for iy in 0..n {
                    for ix in 0..n {
                        let w = self.weights[[iy, ix]];
                        if w > 0.0 {
                            buf[iy * pad + ix] = e[[iy, ix]] * w;
                        }
                    }
                }
                self.fft.forward(&mut buf);
                buf
            })
            .collect();
        let entries: Vec<Array2<C64>> = (0..len)
            .into_par_iter()
            .map(|m| {
                let mut acc = vec![C64::new(0.0, 0.0); pad * pad];
                for (j, kern) in self.kernels.iter().enumerate() {
                    let src = m + 2 * j;
                    if src >= len {
                        break;
                    }
                    for ((a, &s), &k) in acc.iter_mut().zip(&spectra[src]).zip(kern) {
                        *a += s * k;
                    }
                }
                self.fft.inverse(&mut acc);
                Array2::from_shape_fn((n, n), |(iy, ix)| {
                    if self.weights[[iy, ix]] > 0.0 {
                        acc[iy * pad + ix]
                    } else {
                        C64::new(0.0, 0.0)
                    }
                })
            })
            .collect();
        Ok(SeqField::from_entries(entries))
    }
}

/// Direct summation of the same quadrature at selected nodes, for verification.
pub fn pompeiu_direct(h: &SeqField, mesh: &Mesh, targets: &[(usize, usize)]) -> Vec<Vec<C64>> {
    let len = h.len();
    let sources = mesh.active_nodes();
    targets
        .par_iter()
        .map(|&(tx, ty)| {
            let mut out = vec![C64::new(0.0, 0.0); len];
            for &(sx, sy) in &sources {
                let w = mesh.cell_area[[sy, sx]];
                let (ox, oy) = (sx as i64 - tx as i64, sy as i64 - ty as i64);
                for (j, _) in (0..len).step_by(2).enumerate() {
                    let k = lattice_kernel(j, ox, oy, mesh.h) * w;
                    for (m, o) in out.iter_mut().enumerate() {
                        if m + 2 * j < len {
                            *o += k * h.data[[m + 2 * j, sy, sx]];
                        }
                    }
                }
            }
            out
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Domain;

    #[test]
    fn fft_matches_direct_summation() {
        let mesh = Mesh::new(Domain::unit_disk(), 16).unwrap();
        let len = 5;
        let mut h = SeqField::zeros(len, 16);
        for (ix, iy) in mesh.active_nodes() {
            let z = mesh.node_z(ix, iy);
            for m in 0..len {
                h.data[[m, iy, ix]] = (z * (m as f64 + 1.0)).exp() * C64::new(1.0, 0.3 * m as f64);
            }
        }
        let plan = PompeiuPlan::new(&mesh, len);
        let fast = plan.apply(&h).unwrap();
        let targets = [(3, 7), (8, 8), (12, 4), (0, 8)];
        let slow = pompeiu_direct(&h, &mesh, &targets);
        for (t, &(ix, iy)) in targets.iter().enumerate() {
            if !mesh.is_active(ix, iy) {
                continue;
            }
            for m in 0..len {
                let d = (fast.data[[m, iy, ix]] - slow[t][m]).norm();
                assert!(d < 1e-10 * (1.0 + slow[t][m].norm()), "{m} {d}");
            }
        }
    }

    #[test]
    fn zero_input_gives_zero() {
        let mesh = Mesh::new(Domain::unit_disk(), 16).unwrap();
        let plan = PompeiuPlan::new(&mesh, 4);
        let out = plan.apply(&SeqField::zeros(4, 16)).unwrap();
        assert!(out.data.iter().all(|v| v.norm() < 1e-300));
    }
}
