//! Thin two-dimensional FFT and periodic upsampling helpers over rustfft.

use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::C64;

/// Unnormalized 2-D transform of a row-major `rows × cols` buffer.
pub(crate) struct Fft2 {
    rows: usize,
    cols: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub(crate) fn new(rows: usize, cols: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft2 {
            rows,
            cols,
            row_fwd: planner.plan_fft_forward(cols),
            row_inv: planner.plan_fft_inverse(cols),
            col_fwd: planner.plan_fft_forward(rows),
            col_inv: planner.plan_fft_inverse(rows),
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub(crate) fn forward(&self, data: &mut [C64]) {
        self.run(data, &self.row_fwd, &self.col_fwd);
    }

    /// Inverse transform including the 1/(rows·cols) normalization.
    pub(crate) fn inverse(&self, data: &mut [C64]) {
        self.run(data, &self.row_inv, &self.col_inv);
        let s = 1.0 / self.len() as f64;
        data.iter_mut().for_each(|v| *v *= s);
    }

    fn run(&self, data: &mut [C64], row: &Arc<dyn Fft<f64>>, col: &Arc<dyn Fft<f64>>) {
        assert_eq!(data.len(), self.len());
        row.process(data);
        let mut t = transpose(data, self.rows, self.cols);
        col.process(&mut t);
        let back = transpose(&t, self.cols, self.rows);
        data.copy_from_slice(&back);
    }
}

fn transpose(data: &[C64], rows: usize, cols: usize) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); data.len()];
    const B: usize = 32;
    for r0 in (0..rows).step_by(B) {
        for c0 in (0..cols).step_by(B) {
            for r in r0..(r0 + B).min(rows) {
                for c in c0..(c0 + B).min(cols) {
                    out[c * rows + r] = data[r * cols + c];
                }
            }
        }
    }
    out
}

/// Trigonometric interpolation of periodic samples onto a grid `factor` times finer.
/// Both grids start at the same first sample.
pub(crate) fn upsample_periodic(
    input: &[C64],
    factor: usize,
    fwd: &Arc<dyn Fft<f64>>,
    inv: &Arc<dyn Fft<f64>>,
) -> Vec<C64> {
    let n = input.len();
    let m = n * factor;
    let mut spec = input.to_vec();
    fwd.process(&mut spec);
    let mut out = vec![C64::new(0.0, 0.0); m];
    let half = n / 2;
    let even = n % 2 == 0;
    // non-negative frequencies below Nyquist
    let pos = if even { half } else { half + 1 };
    out[..pos].copy_from_slice(&spec[..pos]);
    for k in 1..=(n - pos) {
        if !(even && k == half) {
            out[m - k] = spec[n - k];
        }
    }
    if even && n > 1 {
        // split the Nyquist bin symmetrically
        out[half] = 0.5 * spec[half];
        out[m - half] = 0.5 * spec[half];
    }
    inv.process(&mut out);
    let s = 1.0 / n as f64;
    out.iter_mut().for_each(|v| *v *= s);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_2d() {
        let f = Fft2::new(4, 8);
        let orig: Vec<C64> = (0..32).map(|i| C64::new(i as f64, (i * i) as f64 * 0.1)).collect();
        let mut d = orig.clone();
        f.forward(&mut d);
        f.inverse(&mut d);
        for (a, b) in d.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn upsampling_reproduces_trig_polynomial() {
        let n = 16;
        let mut p = FftPlanner::new();
        let (fw, iv) = (p.plan_fft_forward(n), p.plan_fft_inverse(4 * n));
        let g = |x: f64| (3.0 * x).cos() + 0.5 * (5.0 * x).sin();
        let h = 2.0 * std::f64::consts::PI / n as f64;
        let samples: Vec<C64> = (0..n).map(|i| C64::new(g(i as f64 * h), 0.0)).collect();
        let fine = upsample_periodic(&samples, 4, &fw, &iv);
        for (i, v) in fine.iter().enumerate() {
            assert!((v.re - g(i as f64 * h / 4.0)).abs() < 1e-12);
            assert!(v.im.abs() < 1e-12);
        }
    }
}
