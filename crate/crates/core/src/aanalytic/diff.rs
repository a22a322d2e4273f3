//! Cauchy-Riemann derivatives on masked lattices.

use ndarray::Array2;

use crate::geometry::Mesh;
use crate::C64;

/// One-dimensional derivative at position `i` of a masked line.
/// Central when both neighbours exist, otherwise second-order one-sided,
/// falling back to first order next to isolated nodes.
#[inline]
fn line_derivative<F, M>(val: F, ok: M, i: isize, h: f64) -> C64
where
    F: Fn(isize) -> C64,
    M: Fn(isize) -> bool,
{
    let (l, r) = (ok(i - 1), ok(i + 1));
    if l && r {
        (val(i + 1) - val(i - 1)) / (2.0 * h)
    } else if r && ok(i + 2) {
        (-3.0 * val(i) + 4.0 * val(i + 1) - val(i + 2)) / (2.0 * h)
    } else if l && ok(i - 2) {
        (3.0 * val(i) - 4.0 * val(i - 1) + val(i - 2)) / (2.0 * h)
    } else if r {
        (val(i + 1) - val(i)) / h
    } else if l {
        (val(i) - val(i - 1)) / h
    } else {
        C64::new(0.0, 0.0)
    }
}

/// ∂ₓ and ∂ᵧ of a grid restricted to `mask`; zero off the mask.
pub fn gradient(grid: &Array2<C64>, mask: &Array2<bool>, h: f64) -> (Array2<C64>, Array2<C64>) {
    let (ny, nx) = grid.dim();
    let mut gx = Array2::zeros((ny, nx));
    let mut gy = Array2::zeros((ny, nx));
    let inside = |x: isize, y: isize| {
        x >= 0 && y >= 0 && (x as usize) < nx && (y as usize) < ny && mask[[y as usize, x as usize]]
    };
    for iy in 0..ny {
        for ix in 0..nx {
            if !mask[[iy, ix]] {
                continue;
            }
            let (x, y) = (ix as isize, iy as isize);
            gx[[iy, ix]] = line_derivative(|k| grid[[iy, k as usize]], |k| inside(k, y), x, h);
            gy[[iy, ix]] = line_derivative(|k| grid[[k as usize, ix]], |k| inside(x, k), y, h);
        }
    }
    (gx, gy)
}

/// Returns (∂̄g, ∂g) with ∂̄ = (∂ₓ + i∂ᵧ)/2 and ∂ = (∂ₓ − i∂ᵧ)/2.
pub fn cr_derivatives_masked(
    grid: &Array2<C64>,
    mask: &Array2<bool>,
    h: f64,
) -> (Array2<C64>, Array2<C64>) {
    let (gx, gy) = gradient(grid, mask, h);
    let i = C64::new(0.0, 1.0);
    let dbar = ndarray::Zip::from(&gx).and(&gy).map_collect(|&a, &b| 0.5 * (a + i * b));
    let d = ndarray::Zip::from(&gx).and(&gy).map_collect(|&a, &b| 0.5 * (a - i * b));
    (dbar, d)
}

/// (∂̄g, ∂g) over the active nodes of the mesh.
pub fn cr_derivatives(grid: &Array2<C64>, mesh: &Mesh) -> (Array2<C64>, Array2<C64>) {
    cr_derivatives_masked(grid, &mesh.active_mask(), mesh.h)
}
