//! Point evaluation of lattice fields along rays.

use ndarray::Array2;
use rustfft::FftPlanner;

use crate::fft::upsample_periodic;
use crate::geometry::Mesh;
use crate::{Point, C64};

/// How sampled fields are evaluated off the lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Interpolation {
    /// Bilinear interpolation of the lattice values.
    Bilinear,
    /// Trigonometric upsampling by the given factor followed by cubic Lagrange interpolation.
    Spectral { factor: usize },
}

impl Default for Interpolation {
    fn default() -> Self {
        Interpolation::Spectral { factor: 8 }
    }
}

/// A scalar field that can be evaluated anywhere; zero off the sampled box.
pub(crate) struct Sampler {
    values: Array2<f64>,
    origin: f64,
    step: f64,
    cubic: bool,
}

impl Sampler {
    pub(crate) fn new(grid: &Array2<f64>, mesh: &Mesh, mode: Interpolation) -> Self {
        match mode {
            Interpolation::Bilinear => Sampler {
                values: grid.clone(),
                origin: mesh.origin,
                step: mesh.h,
                cubic: false,
            },
            Interpolation::Spectral { factor } => {
                let factor = factor.max(1);
                Sampler {
                    values: upsample_2d(grid, factor),
                    origin: mesh.origin,
                    step: mesh.h / factor as f64,
                    cubic: true,
                }
            }
        }
    }

    /// True when every value vanishes, so the field can be skipped.
    pub(crate) fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    #[inline]
    fn at(&self, ix: isize, iy: isize) -> f64 {
        let n = self.values.nrows() as isize;
        if ix < 0 || iy < 0 || ix >= n || iy >= n {
            0.0
        } else {
            self.values[[iy as usize, ix as usize]]
        }
    }

    #[inline]
    pub(crate) fn eval(&self, x: Point) -> f64 {
        let tx = (x[0] - self.origin) / self.step;
        let ty = (x[1] - self.origin) / self.step;
        let ix = tx.floor();
        let iy = ty.floor();
        let (fx, fy) = (tx - ix, ty - iy);
        let (ix, iy) = (ix as isize, iy as isize);
        if self.cubic {
            let wx = cubic_weights(fx);
            let wy = cubic_weights(fy);
            let mut acc = 0.0;
            for (j, wyj) in wy.iter().enumerate() {
                let row = iy - 1 + j as isize;
                let mut r = 0.0;
                for (i, wxi) in wx.iter().enumerate() {
                    r += wxi * self.at(ix - 1 + i as isize, row);
                }
                acc += wyj * r;
            }
            acc
        } else {
            let v00 = self.at(ix, iy);
            let v10 = self.at(ix + 1, iy);
            let v01 = self.at(ix, iy + 1);
            let v11 = self.at(ix + 1, iy + 1);
            (1.0 - fy) * ((1.0 - fx) * v00 + fx * v10) + fy * ((1.0 - fx) * v01 + fx * v11)
        }
    }
}

/// Lagrange weights for nodes −1, 0, 1, 2 at fractional position `f`.
#[inline]
pub(crate) fn cubic_weights(f: f64) -> [f64; 4] {
    let fm1 = f - 1.0;
    let fm2 = f - 2.0;
    let fp1 = f + 1.0;
    [
        -f * fm1 * fm2 / 6.0,
        fp1 * fm1 * fm2 / 2.0,
        -fp1 * f * fm2 / 2.0,
        fp1 * f * fm1 / 6.0,
    ]
}

/// Cubic Lagrange interpolation of uniform 1-D samples; zero outside the table.
#[inline]
pub(crate) fn cubic_1d(values: &[f64], origin: f64, step: f64, x: f64) -> f64 {
    let t = (x - origin) / step;
    let i = t.floor();
    let w = cubic_weights(t - i);
    let i = i as isize;
    let n = values.len() as isize;
    let mut acc = 0.0;
    for (k, wk) in w.iter().enumerate() {
        let j = i - 1 + k as isize;
        if j >= 0 && j < n {
            acc += wk * values[j as usize];
        }
    }
    acc
}

fn upsample_2d(grid: &Array2<f64>, factor: usize) -> Array2<f64> {
    let (ny, nx) = grid.dim();
    let (mx, my) = (nx * factor, ny * factor);
    if grid.iter().all(|&v| v == 0.0) {
        return Array2::zeros((my, mx));
    }
    let mut planner = FftPlanner::new();
    let fx = planner.plan_fft_forward(nx);
    let ix = planner.plan_fft_inverse(mx);
    let fy = planner.plan_fft_forward(ny);
    let iy = planner.plan_fft_inverse(my);

    // Real lines go through the complex transforms two at a time, one in the
    // real part and one in the imaginary part; the upsampling keeps them apart.
    let mut rows = Array2::<f64>::zeros((ny, mx));
    for r in (0..ny).step_by(2) {
        let other = (r + 1 < ny).then(|| grid.row(r + 1));
        if grid.row(r).iter().all(|&v| v == 0.0) && other.is_none_or(|o| o.iter().all(|&v| v == 0.0)) {
            continue;
        }
        let line: Vec<C64> =
            (0..nx).map(|c| C64::new(grid[[r, c]], other.map_or(0.0, |o| o[c]))).collect();
        let up = upsample_periodic(&line, factor, &fx, &ix);
        for (c, v) in up.iter().enumerate() {
            rows[[r, c]] = v.re;
            if other.is_some() {
                rows[[r + 1, c]] = v.im;
            }
        }
    }
    let mut out = Array2::<f64>::zeros((my, mx));
    for c in (0..mx).step_by(2) {
        let pair = c + 1 < mx;
        let line: Vec<C64> =
            (0..ny).map(|r| C64::new(rows[[r, c]], if pair { rows[[r, c + 1]] } else { 0.0 })).collect();
        let up = upsample_periodic(&line, factor, &fy, &iy);
        for (r, v) in up.iter().enumerate() {
            out[[r, c]] = v.re;
            if pair {
                out[[r, c + 1]] = v.im;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Domain;

    #[test]
    fn cubic_weights_partition_unity_and_reproduce_cubics() {
        for f in [0.0, 0.25, 0.5, 0.9] {
            let w = cubic_weights(f);
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            let p = |x: f64| x * x * x - 2.0 * x + 1.0;
            let v: f64 = (0..4).map(|k| w[k] * p(k as f64 - 1.0)).sum();
            assert!((v - p(f)).abs() < 1e-12);
        }
    }

    #[test]
    fn spectral_sampler_is_accurate_for_smooth_fields() {
        let mesh = Mesh::new(Domain::unit_disk(), 64).unwrap();
        let g = |x: Point| (-(x[0] * x[0] + (x[1] - 0.1).powi(2)) / 0.04).exp();
        let grid = Array2::from_shape_fn((64, 64), |(iy, ix)| g(mesh.node(ix, iy)));
        let s = Sampler::new(&grid, &mesh, Interpolation::Spectral { factor: 8 });
        let b = Sampler::new(&grid, &mesh, Interpolation::Bilinear);
        let mut es: f64 = 0.0;
        let mut eb: f64 = 0.0;
        for k in 0..50 {
            let x = [0.013 * k as f64 - 0.3, 0.3 - 0.011 * k as f64];
            es = es.max((s.eval(x) - g(x)).abs());
            eb = eb.max((b.eval(x) - g(x)).abs());
        }
        assert!(es < 1e-6, "{es}");
        assert!(eb > es);
    }
}
