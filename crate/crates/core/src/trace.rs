//! Boundary traces of the transport solutions and their angular Fourier coefficients.

use ndarray::{Array2, Array3, ArrayView1, Axis};
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::forward::{exit_offset, MomentSinogram};
use crate::geometry::{BoundaryNodes, Domain};
use crate::{Error, Result, C64};

/// Traces g^k of v^k on Γ × S¹, zero on the incoming set.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryTrace {
    pub domain: Domain,
    /// `g[[k, i, j]]` at boundary node i and direction j.
    pub g: Array3<f64>,
    pub outgoing: Array2<bool>,
}

impl BoundaryTrace {
    pub fn n_boundary(&self) -> usize {
        self.g.len_of(Axis(1))
    }

    pub fn n_angles(&self) -> usize {
        self.g.len_of(Axis(2))
    }
}

/// Truncated non-positive angular coefficients `(w₀, w₋₁, …, w₋N)` per boundary node.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySeq {
    /// `data[[n, i]]` holds w₋ₙ at boundary node i.
    pub data: Array2<C64>,
}

impl BoundarySeq {
    pub fn zeros(len: usize, n_boundary: usize) -> Self {
        BoundarySeq { data: Array2::zeros((len, n_boundary)) }
    }

    /// Number of stored entries, N + 1.
    pub fn len(&self) -> usize {
        self.data.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.data.nrows() == 0
    }

    pub fn n_boundary(&self) -> usize {
        self.data.ncols()
    }

    pub fn entry(&self, n: usize) -> ArrayView1<'_, C64> {
        self.data.row(n)
    }

    /// Drops the first `times` entries.
    pub fn left_shift(&self, times: usize) -> Result<BoundarySeq> {
        if times > self.len() {
            return Err(Error::arg(format!("cannot shift {times} entries out of {}", self.len())));
        }
        Ok(BoundarySeq { data: self.data.slice(ndarray::s![times.., ..]).to_owned() })
    }
}

fn check_layers(data: &Array3<f64>) -> Result<()> {
    if data.len_of(Axis(0)) != 3 {
        return Err(Error::arg(format!("expected 3 moment layers, found {}", data.len_of(Axis(0)))));
    }
    Ok(())
}

/// v⁰ = M⁰, v¹ = p v⁰ − M¹, v² = p v¹ − (p²/2) v⁰ + M²/2 with p = x·u_φ, on Γ₊.
pub fn traces_from_moments(ms: &MomentSinogram) -> Result<BoundaryTrace> {
    check_layers(&ms.data)?;
    let nodes = ms.boundary();
    let (nb, na) = (ms.n_boundary(), ms.n_angles());
    let mut g = Array3::zeros((3, nb, na));
    for i in 0..nb {
        for j in 0..na {
            if !ms.outgoing[[i, j]] {
                continue;
            }
            let p = exit_offset(nodes.points[i], ms.angle(j));
            let m = [ms.data[[0, i, j]], ms.data[[1, i, j]], ms.data[[2, i, j]]];
            let v0 = m[0];
            let v1 = p * v0 - m[1];
            let v2 = p * v1 - 0.5 * p * p * v0 + 0.5 * m[2];
            g[[0, i, j]] = v0;
            g[[1, i, j]] = v1;
            g[[2, i, j]] = v2;
        }
    }
    Ok(BoundaryTrace { domain: ms.domain, g, outgoing: ms.outgoing.clone() })
}

/// Exact inverse of [`traces_from_moments`] on Γ₊.
pub fn moments_from_traces(bt: &BoundaryTrace) -> Result<MomentSinogram> {
    check_layers(&bt.g)?;
    let (nb, na) = (bt.n_boundary(), bt.n_angles());
    let mut ms = MomentSinogram::zeros(bt.domain, nb, na);
    let nodes = BoundaryNodes::new(&bt.domain, nb);
    for i in 0..nb {
        for j in 0..na {
            if !ms.outgoing[[i, j]] {
                continue;
            }
            let p = exit_offset(nodes.points[i], ms.angle(j));
            let v = [bt.g[[0, i, j]], bt.g[[1, i, j]], bt.g[[2, i, j]]];
            ms.data[[0, i, j]] = v[0];
            ms.data[[1, i, j]] = p * v[0] - v[1];
            ms.data[[2, i, j]] = 2.0 * (v[2] - p * v[1] + 0.5 * p * p * v[0]);
        }
    }
    Ok(ms)
}

/// Coefficients g₋ₙ = (1/n_angles) Σ_j g(φ_j) e^{inφ_j} for 0 ≤ n ≤ order.
pub fn angular_coefficients(samples: &[C64], order: usize) -> Result<Vec<C64>> {
    let na = samples.len();
    if na < 2 * order + 2 {
        return Err(Error::Aliasing { n_angles: na, order });
    }
    let mut buf = samples.to_vec();
    FftPlanner::new().plan_fft_inverse(na).process(&mut buf);
    let s = 1.0 / na as f64;
    Ok(buf[..=order].iter().map(|v| v * s).collect())
}

/// Angular coefficients of the three traces at every boundary node.
pub fn angular_coeffs(bt: &BoundaryTrace, order: usize) -> Result<[BoundarySeq; 3]> {
    let out = layer_coeffs(&bt.g, order)?;
    let tail = out
        .iter()
        .flat_map(|s| s.entry(order).iter().map(|v| v.norm()).collect::<Vec<_>>())
        .fold(0.0, f64::max);
    if tail > TAIL_TOL {
        log::warn!("angular tail |g_-N| = {tail:.3e} exceeds {TAIL_TOL:.0e}; truncation error may dominate");
    }
    Ok(out)
}

/// Angular coefficients of the three moment layers of a sinogram.
pub fn sinogram_coeffs(ms: &MomentSinogram, order: usize) -> Result<[BoundarySeq; 3]> {
    layer_coeffs(&ms.data, order)
}

fn layer_coeffs(data: &Array3<f64>, order: usize) -> Result<[BoundarySeq; 3]> {
    check_layers(data)?;
    let (nb, na) = (data.len_of(Axis(1)), data.len_of(Axis(2)));
    if na < 2 * order + 2 {
        return Err(Error::Aliasing { n_angles: na, order });
    }
    let fft = FftPlanner::new().plan_fft_inverse(na);
    let s = 1.0 / na as f64;
    let mut out = [
        BoundarySeq::zeros(order + 1, nb),
        BoundarySeq::zeros(order + 1, nb),
        BoundarySeq::zeros(order + 1, nb),
    ];
    for (k, seq) in out.iter_mut().enumerate() {
        let cols: Vec<Vec<C64>> = (0..nb)
            .into_par_iter()
            .map(|i| {
                let mut buf: Vec<C64> = (0..na).map(|j| C64::new(data[[k, i, j]], 0.0)).collect();
                fft.process(&mut buf);
                buf.truncate(order + 1);
                buf.iter_mut().for_each(|v| *v *= s);
                buf
            })
            .collect();
        for (i, c) in cols.into_iter().enumerate() {
            for (n, v) in c.into_iter().enumerate() {
                seq.data[[n, i]] = v;
            }
        }
    }
    Ok(out)
}

/// Diagnostic threshold for the last retained coefficient.
pub const TAIL_TOL: f64 = 1e-6;

/// Real angular function with coefficients `c[n] = g₋ₙ`, adding the conjugate mirror.
/// When `c` reaches the Nyquist index of `n_angles` samples, that term is counted once.
pub fn synthesize_real(c: &[C64], phi: f64, n_angles: usize) -> f64 {
    let mut v = c.first().map_or(0.0, |c0| c0.re);
    for (n, cn) in c.iter().enumerate().skip(1) {
        let term = (cn * C64::from_polar(1.0, -(n as f64) * phi)).re;
        v += if 2 * n == n_angles { term } else { 2.0 * term };
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn samples(na: usize, f: impl Fn(f64) -> C64) -> Vec<C64> {
        (0..na).map(|j| f(2.0 * PI * j as f64 / na as f64)).collect()
    }

    #[test]
    fn coefficient_examples() {
        let c = angular_coefficients(&samples(16, |_| C64::new(1.0, 0.0)), 4).unwrap();
        assert!((c[0] - 1.0).norm() < 1e-15 && c[1..].iter().all(|v| v.norm() < 1e-15));
        let c = angular_coefficients(&samples(16, |p| C64::new(p.cos(), 0.0)), 4).unwrap();
        assert!((c[1] - 0.5).norm() < 1e-15);
        let c = angular_coefficients(&samples(16, |p| C64::from_polar(1.0, -2.0 * p)), 4).unwrap();
        for (n, v) in c.iter().enumerate() {
            let want = if n == 2 { 1.0 } else { 0.0 };
            assert!((v - want).norm() <= 1e-12);
        }
        assert!(matches!(
            angular_coefficients(&samples(8, |_| C64::new(1.0, 0.0)), 4),
            Err(Error::Aliasing { .. })
        ));
    }

    #[test]
    fn substitution_examples() {
        // one node, one outgoing direction with x·u = 0.5
        let domain = Domain::unit_disk();
        let mut ms = MomentSinogram::zeros(domain, 4, 8);
        // node 0 is (1, 0); direction index 1 is φ = π/4 with x·u = cos(π/4)
        let p = (PI / 4.0).cos();
        ms.data[[0, 0, 1]] = 2.0;
        ms.data[[1, 0, 1]] = 1.0;
        ms.data[[2, 0, 1]] = 4.0;
        let bt = traces_from_moments(&ms).unwrap();
        let v1 = p * 2.0 - 1.0;
        assert!((bt.g[[1, 0, 1]] - v1).abs() < 1e-15);
        assert!((bt.g[[2, 0, 1]] - (p * v1 - 0.5 * p * p * 2.0 + 2.0)).abs() < 1e-15);
        // incoming direction stays zero
        ms.data[[0, 0, 4]] = 5.0;
        assert!(!ms.outgoing[[0, 4]]);
        assert_eq!(traces_from_moments(&ms).unwrap().g[[0, 0, 4]], 0.0);
    }

    #[test]
    fn zero_traces_give_zero_moments() {
        let ms = MomentSinogram::zeros(Domain::unit_disk(), 8, 16);
        let bt = traces_from_moments(&ms).unwrap();
        assert!(moments_from_traces(&bt).unwrap().is_zero());
    }

    #[test]
    fn left_shift_of_boundary_sequences() {
        let mut s = BoundarySeq::zeros(3, 2);
        s.data[[2, 1]] = C64::new(1.0, 2.0);
        let t = s.left_shift(2).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.data[[0, 1]], C64::new(1.0, 2.0));
        assert!(s.left_shift(4).is_err());
    }
}
