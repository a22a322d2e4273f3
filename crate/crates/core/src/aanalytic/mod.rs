//! Bukhgeim's A-analytic machinery: sequence-valued fields, the operators
//! 𝔅 and 𝒯, and the staged boundary value problems of the inversion.

mod bukhgeim;
mod diff;
mod pompeiu;

use ndarray::{s, Array2, Array3, ArrayView2, ArrayViewMut2, Zip};

pub use bukhgeim::{bukhgeim_at, bukhgeim_cauchy, NEAR_STEPS};
pub use diff::{cr_derivatives, cr_derivatives_masked, gradient};
pub use pompeiu::{lattice_kernel, pompeiu_direct, PompeiuPlan};

use crate::fields::ComplexComponents;
use crate::geometry::{BoundaryNodes, Mesh};
use crate::trace::BoundarySeq;
use crate::{Error, Result, C64};

/// Per-node truncated sequences `(w₀, w₋₁, …, w₋N)` on the mesh lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct SeqField {
    /// `data[[n, iy, ix]]` holds w₋ₙ at the node.
    pub data: Array3<C64>,
}

impl SeqField {
    pub fn zeros(len: usize, n: usize) -> Self {
        SeqField { data: Array3::zeros((len, n, n)) }
    }

    pub fn from_entries(entries: Vec<Array2<C64>>) -> Self {
        let n = entries.first().map_or(0, |e| e.nrows());
        let mut data = Array3::zeros((entries.len(), n, n));
        for (k, e) in entries.into_iter().enumerate() {
            data.slice_mut(s![k, .., ..]).assign(&e);
        }
        SeqField { data }
    }

    /// Number of entries, N + 1.
    pub fn len(&self) -> usize {
        self.data.dim().0
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Lattice size.
    pub fn n(&self) -> usize {
        self.data.dim().1
    }

    pub fn entry(&self, k: usize) -> ArrayView2<'_, C64> {
        self.data.slice(s![k, .., ..])
    }

    pub fn entry_mut(&mut self, k: usize) -> ArrayViewMut2<'_, C64> {
        self.data.slice_mut(s![k, .., ..])
    }

    /// Drops the first `times` entries at every node.
    pub fn left_shift(&self, times: usize) -> Result<SeqField> {
        if times > self.len() {
            return Err(Error::arg(format!("cannot shift {times} entries out of {}", self.len())));
        }
        Ok(SeqField { data: self.data.slice(s![times.., .., ..]).to_owned() })
    }

    /// Adds `other` entry by entry; the shorter sequence is zero padded.
    pub fn add_padded(&mut self, other: &SeqField) {
        let k = self.len().min(other.len());
        let mut dst = self.data.slice_mut(s![..k, .., ..]);
        dst += &other.data.slice(s![..k, .., ..]);
    }

    /// Prepends entries, producing `(first..., self...)`.
    pub fn prepend(&self, first: &[Array2<C64>]) -> SeqField {
        let mut entries: Vec<Array2<C64>> = first.to_vec();
        entries.extend((0..self.len()).map(|k| self.entry(k).to_owned()));
        SeqField::from_entries(entries)
    }
}

/// Shared state for the boundary and area operators on one mesh.
pub struct Solver {
    pub mesh: Mesh,
    pub nodes: BoundaryNodes,
    pub near_dist: f64,
    pompeiu: PompeiuPlan,
}

impl Solver {
    /// Solver for sequences of up to `max_len` entries sampled at `n_boundary` boundary nodes.
    pub fn new(mesh: &Mesh, n_boundary: usize, max_len: usize) -> Self {
        Solver {
            nodes: BoundaryNodes::new(&mesh.domain, n_boundary),
            near_dist: NEAR_STEPS * mesh.h,
            pompeiu: PompeiuPlan::new(mesh, max_len),
            mesh: mesh.clone(),
        }
    }

    /// 𝔅 applied to boundary coefficients.
    pub fn bukhgeim(&self, boundary: &BoundarySeq) -> Result<SeqField> {
        bukhgeim_cauchy(boundary, &self.nodes, &self.mesh, self.near_dist)
    }

    /// 𝒯 applied to an interior sequence field.
    pub fn pompeiu(&self, h: &SeqField) -> Result<SeqField> {
        self.pompeiu.apply(h)
    }

    /// Solution of ∂̄w + 𝓛²∂w = 0 with the given boundary values.
    pub fn solve_homogeneous(&self, boundary: &BoundarySeq) -> Result<SeqField> {
        self.bukhgeim(boundary)
    }

    /// Solution w = 𝔅[w|_Γ] + 𝒯h of ∂̄w + 𝓛²∂w = h.
    pub fn solve_inhomogeneous(&self, boundary: &BoundarySeq, h: &SeqField) -> Result<SeqField> {
        let mut w = self.bukhgeim(boundary)?;
        if h.len() > w.len() {
            return Err(Error::Truncation { expected: w.len(), found: h.len() });
        }
        w.add_padded(&self.pompeiu(h)?);
        Ok(w)
    }

    /// The three staged problems for 𝓛²w⁰, 𝓛w¹ and w² from the trace
    /// coefficients `g = [g⁰, g¹, g²]`.
    pub fn cascade(&self, g: &[BoundarySeq; 3]) -> Result<Cascade> {
        let len = g[0].len();
        if g.iter().any(|s| s.len() != len) {
            return Err(Error::arg("trace coefficient sequences differ in length"));
        }
        if len < 4 {
            return Err(Error::arg("truncation order must be at least 3"));
        }
        let l2w0 = self.solve_homogeneous(&g[0].left_shift(2)?)?;
        let lw1 = self.solve_inhomogeneous(&g[1].left_shift(1)?, &l2w0)?;
        let w2 = self.solve_inhomogeneous(&g[2], &lw1)?;
        Ok(Cascade { l2w0, lw1, w2 })
    }
}

/// Stage outputs of the staged solve.
#[derive(Debug, Clone)]
pub struct Cascade {
    /// (w⁰₋₂, w⁰₋₃, …)
    pub l2w0: SeqField,
    /// (w¹₋₁, w¹₋₂, …)
    pub lw1: SeqField,
    /// (w²₀, w²₋₁, …)
    pub w2: SeqField,
}

/// The modes not produced by the staged solve.
#[derive(Debug, Clone)]
pub struct LowModes {
    pub w0_0: Array2<C64>,
    pub w0_m1: Array2<C64>,
    pub w1_0: Array2<C64>,
}

fn two_re(z: &Array2<C64>) -> Array2<C64> {
    z.mapv(|v| C64::new(2.0 * v.re, 0.0))
}

fn add_scaled(dst: &mut Array2<C64>, a: Option<&Array2<f64>>, v: ArrayView2<'_, C64>) {
    if let Some(a) = a {
        Zip::from(dst).and(a).and(&v).for_each(|d, &ai, &vi| *d += vi * ai);
    }
}

/// Completes the low modes from stage outputs:
/// w¹₀ = 2Re ∂w²₋₁ + a w²₀, w⁰₋₁ = ∂̄w¹₀ + ∂w¹₋₂ + a w¹₋₁, w⁰₀ = 2Re ∂w¹₋₁ + a w¹₀.
///
/// With `att = None` these are the non-attenuated relations; with an
/// attenuation they hold for the sequences of the attenuated transport solutions.
pub fn recover_low_modes(
    lw1: &SeqField,
    w2: &SeqField,
    att: Option<&Array2<f64>>,
    mesh: &Mesh,
) -> Result<LowModes> {
    if lw1.len() < 2 || w2.len() < 2 {
        return Err(Error::arg("low-mode recovery needs w¹₋₁, w¹₋₂, w²₀ and w²₋₁"));
    }
    let mask = mesh.active_mask();
    let h = mesh.h;

    let (_, d_w2m1) = cr_derivatives_masked(&w2.entry(1).to_owned(), &mask, h);
    let mut w1_0 = two_re(&d_w2m1);
    // w²₀ is the mean over directions of a real function, so its imaginary part is discretisation error
    let w2_0 = w2.entry(0).mapv(|v| C64::new(v.re, 0.0));
    add_scaled(&mut w1_0, att, w2_0.view());

    let (db_w10, _) = cr_derivatives_masked(&w1_0, &mask, h);
    let (_, d_w1m2) = cr_derivatives_masked(&lw1.entry(1).to_owned(), &mask, h);
    let mut w0_m1 = &db_w10 + &d_w1m2;
    add_scaled(&mut w0_m1, att, lw1.entry(0));

    let (_, d_w1m1) = cr_derivatives_masked(&lw1.entry(0).to_owned(), &mask, h);
    let mut w0_0 = two_re(&d_w1m1);
    add_scaled(&mut w0_0, att, w1_0.view());

    Ok(LowModes { w0_0, w0_m1, w1_0 })
}

/// 𝓕₀ = 2Re ∂w⁰₋₁ + a w⁰₀, 𝓕₁ = ∂̄w⁰₀ + ∂w⁰₋₂ + a w⁰₋₁, 𝓕₂ = ∂̄w⁰₋₁ + ∂w⁰₋₃ + a w⁰₋₂.
pub fn recover_components(w0: &SeqField, att: Option<&Array2<f64>>, mesh: &Mesh) -> Result<ComplexComponents> {
    if w0.len() < 4 {
        return Err(Error::arg("component recovery needs w⁰ entries 0 through −3"));
    }
    let mask = mesh.active_mask();
    let h = mesh.h;
    let e = |k: usize| w0.entry(k).to_owned();

    let (_, d1) = cr_derivatives_masked(&e(1), &mask, h);
    let mut c0 = two_re(&d1);
    add_scaled(&mut c0, att, w0.entry(0));

    let (db0, _) = cr_derivatives_masked(&e(0), &mask, h);
    let (_, d2) = cr_derivatives_masked(&e(2), &mask, h);
    let mut c1 = &db0 + &d2;
    add_scaled(&mut c1, att, w0.entry(1));

    let (db1, _) = cr_derivatives_masked(&e(1), &mask, h);
    let (_, d3) = cr_derivatives_masked(&e(3), &mask, h);
    let mut c2 = &db1 + &d3;
    add_scaled(&mut c2, att, w0.entry(2));

    Ok(ComplexComponents { c0: c0.mapv(|v| v.re), c1, c2 })
}

/// Residual ∂̄w₋ₙ + ∂w₋ₙ₋₂ − h₋ₙ for 0 ≤ n ≤ len−3 (h may be omitted for zero).
pub fn beltrami_residual(w: &SeqField, h: Option<&SeqField>, mesh: &Mesh) -> SeqField {
    let mask = mesh.active_mask();
    let len = w.len().saturating_sub(2);
    let mut entries = Vec::with_capacity(len);
    for n in 0..len {
        let (db, _) = cr_derivatives_masked(&w.entry(n).to_owned(), &mask, mesh.h);
        let (_, d) = cr_derivatives_masked(&w.entry(n + 2).to_owned(), &mask, mesh.h);
        let mut r = &db + &d;
        if let Some(h) = h {
            if n < h.len() {
                r -= &h.entry(n);
            }
        }
        entries.push(r);
    }
    SeqField::from_entries(entries)
}
