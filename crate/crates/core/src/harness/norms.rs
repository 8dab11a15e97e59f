//! Error norms between DG fields on nested meshes.
//!
//! Integrals use a 10-point Gauss rule on every cell of the common
//! refinement. The max norm is taken over those points plus both cell
//! endpoints, so it is a sampled maximum rather than the true one.

use crate::dg::{DgBasis, Mesh1D, ParityField, ScalarDgField};
use crate::error::{ApdgError, Result};
use crate::quadrature::gauss_legendre;

const SAMPLE_POINTS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    L1,
    L2,
    Linf,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ErrorNorms {
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
}

impl ErrorNorms {
    pub fn get(&self, norm: Norm) -> f64 {
        match norm {
            Norm::L1 => self.l1,
            Norm::L2 => self.l2,
            Norm::Linf => self.linf,
        }
    }
}

/// A scalar DG field together with its discretization.
#[derive(Debug, Clone, Copy)]
pub struct ScalarView<'a> {
    pub mesh: &'a Mesh1D,
    pub basis: &'a DgBasis,
    pub field: &'a ScalarDgField,
}

/// A nodal-in-velocity DG field together with its discretization.
#[derive(Debug, Clone, Copy)]
pub struct DistributionView<'a> {
    pub mesh: &'a Mesh1D,
    pub basis: &'a DgBasis,
    pub field: &'a ParityField,
}

/// Maps a point of fine cell `i` to the containing coarse cell.
fn to_coarse(i: usize, xi: f64, ratio: usize) -> (usize, f64) {
    let s = (i % ratio) as f64;
    (i / ratio, (2.0 * s + 1.0 + xi) / ratio as f64 - 1.0)
}

/// Finest mesh of a nested pair and the two refinement ratios.
fn common_refinement(a: &Mesh1D, b: &Mesh1D) -> Result<(Mesh1D, usize, usize)> {
    let tol = 1e-12 * (a.length().abs() + 1.0);
    if (a.x_left() - b.x_left()).abs() > tol || (a.x_right() - b.x_right()).abs() > tol {
        return Err(ApdgError::IncompatibleMeshes("domains differ".into()));
    }
    let (na, nb) = (a.n_cells(), b.n_cells());
    let fine = na.max(nb);
    if fine % na != 0 || fine % nb != 0 {
        return Err(ApdgError::IncompatibleMeshes(format!("{na} and {nb} cells are not nested")));
    }
    let mesh = if na >= nb { a.clone() } else { b.clone() };
    Ok((mesh, fine / na, fine / nb))
}

/// Norms of a non-negative pointwise error `e(i, xi)` on `mesh`.
fn sample_norms(mesh: &Mesh1D, e: impl Fn(usize, f64) -> f64) -> ErrorNorms {
    let (xs, ws) = gauss_legendre(SAMPLE_POINTS);
    let half = 0.5 * mesh.h();
    let mut out = ErrorNorms::default();
    let mut l2 = 0.0;
    for i in 0..mesh.n_cells() {
        for (&xi, &w) in xs.iter().zip(&ws) {
            let v = e(i, xi);
            out.l1 += half * w * v;
            l2 += half * w * v * v;
            out.linf = out.linf.max(v);
        }
        out.linf = out.linf.max(e(i, -1.0)).max(e(i, 1.0));
    }
    out.l2 = l2.sqrt();
    out
}

/// All three norms of `a - b`.
pub fn scalar_error_norms(a: ScalarView<'_>, b: ScalarView<'_>) -> Result<ErrorNorms> {
    let (fine, ra, rb) = common_refinement(a.mesh, b.mesh)?;
    Ok(sample_norms(&fine, |i, xi| {
        let (ia, xa) = to_coarse(i, xi, ra);
        let (ib, xb) = to_coarse(i, xi, rb);
        (a.field.eval_ref(a.mesh, a.basis, ia, xa) - b.field.eval_ref(b.mesh, b.basis, ib, xb)).abs()
    }))
}

/// `||a - b||` in the requested norm over the common refinement.
pub fn compute_error_norms(a: ScalarView<'_>, b: ScalarView<'_>, norm: Norm) -> Result<f64> {
    Ok(scalar_error_norms(a, b)?.get(norm))
}

/// Norms of `a - g` for a function `g(x)`.
pub fn scalar_error_vs(a: ScalarView<'_>, g: impl Fn(f64) -> f64) -> ErrorNorms {
    sample_norms(a.mesh, |i, xi| (a.field.eval_ref(a.mesh, a.basis, i, xi) - g(a.mesh.map(i, xi))).abs())
}

fn weighted(a: &[f64], b: impl Fn(usize) -> f64, weights: &[f64]) -> f64 {
    a.iter()
        .zip(weights)
        .enumerate()
        .map(|(l, (x, w))| {
            let d = x - b(l);
            w * d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Norms in `x` of the velocity-weighted error `e(x) = (sum_l w_l (a_l - b_l)^2)^(1/2)`.
/// With the phase weights the `L2` value is the phase-space norm `|||a - b|||`.
pub fn distribution_error_norms(a: DistributionView<'_>, b: DistributionView<'_>, weights: &[f64]) -> Result<ErrorNorms> {
    if a.field.n_v() != b.field.n_v() || weights.len() != a.field.n_v() {
        return Err(ApdgError::LengthMismatch {
            expected: a.field.n_v(),
            actual: b.field.n_v().min(weights.len()),
        });
    }
    let (fine, ra, rb) = common_refinement(a.mesh, b.mesh)?;
    Ok(sample_norms(&fine, |i, xi| {
        let (ia, xa) = to_coarse(i, xi, ra);
        let (ib, xb) = to_coarse(i, xi, rb);
        let va = a.field.eval_ref(a.mesh, a.basis, ia, xa);
        let vb = b.field.eval_ref(b.mesh, b.basis, ib, xb);
        weighted(&va, |l| vb[l], weights)
    }))
}

/// Like [`distribution_error_norms`] against a function `g(x, l)`.
pub fn distribution_error_vs(a: DistributionView<'_>, weights: &[f64], g: impl Fn(f64, usize) -> f64) -> Result<ErrorNorms> {
    crate::error::check_len(a.field.n_v(), weights.len())?;
    Ok(sample_norms(a.mesh, |i, xi| {
        let va = a.field.eval_ref(a.mesh, a.basis, i, xi);
        let x = a.mesh.map(i, xi);
        weighted(&va, |l| g(x, l), weights)
    }))
}
