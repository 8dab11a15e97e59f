//! One-dimensional discontinuous Galerkin infrastructure.
//!
//! Each cell carries the orthonormal scaled-Legendre modes
//! `phi_m(x) = sqrt((2m + 1) / h) P_m(xi)`, so the DG mass matrix is the
//! identity and every Galerkin update is an explicit coefficient update.
//! Interfaces are numbered `p = 0..=N`, with interface `p` at
//! `x_left + p h`, between cell `p - 1` (the `-` trace) and cell `p`
//! (the `+` trace).

use std::io::Write;

use crate::error::{ApdgError, Result};
use crate::hermite::{CollisionKernel, VelocityGrid};
use crate::quadrature::{gauss_legendre, gauss_lobatto, legendre};

/// Uniform partition of `[x_left, x_right]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mesh1D {
    x_left: f64,
    x_right: f64,
    n_cells: usize,
    h: f64,
}

impl Mesh1D {
    pub fn new(x_left: f64, x_right: f64, n_cells: usize) -> Result<Self> {
        if n_cells == 0 {
            return Err(ApdgError::InvalidParameter {
                name: "n_cells",
                reason: "must be positive".into(),
            });
        }
        if !(x_right > x_left) {
            return Err(ApdgError::InvalidParameter {
                name: "domain",
                reason: format!("x_right ({x_right}) must exceed x_left ({x_left})"),
            });
        }
        Ok(Self {
            x_left,
            x_right,
            n_cells,
            h: (x_right - x_left) / n_cells as f64,
        })
    }

    pub fn unit(n_cells: usize) -> Result<Self> {
        Self::new(0.0, 1.0, n_cells)
    }

    pub fn x_left(&self) -> f64 {
        self.x_left
    }

    pub fn x_right(&self) -> f64 {
        self.x_right
    }

    pub fn length(&self) -> f64 {
        self.x_right - self.x_left
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Coordinate of interface `p`.
    pub fn interface(&self, p: usize) -> f64 {
        self.x_left + p as f64 * self.h
    }

    pub fn center(&self, i: usize) -> f64 {
        self.x_left + (i as f64 + 0.5) * self.h
    }

    /// Physical coordinate of reference point `xi` in cell `i`.
    pub fn map(&self, i: usize, xi: f64) -> f64 {
        self.center(i) + 0.5 * self.h * xi
    }

    /// Cell containing `x` and the reference coordinate inside it.
    pub fn locate(&self, x: f64) -> (usize, f64) {
        let s = ((x - self.x_left) / self.h).floor();
        let i = (s.max(0.0) as usize).min(self.n_cells - 1);
        let xi = 2.0 * (x - self.center(i)) / self.h;
        (i, xi.clamp(-1.0, 1.0))
    }
}

/// Reference-cell tables for the orthonormal modal basis of degree `k`.
#[derive(Debug, Clone)]
pub struct DgBasis {
    degree: usize,
    quad_points: Vec<f64>,
    quad_weights: Vec<f64>,
    /// `vals_quad[m * nq + q] = sqrt(2m+1) P_m(xi_q)`
    vals_quad: Vec<f64>,
    left: Vec<f64>,
    right: Vec<f64>,
    center: Vec<f64>,
    /// `stiff[n * nb + m] = int_{-1}^{1} P^_n P^_m' dxi`
    stiff: Vec<f64>,
    lobatto_points: Vec<f64>,
    vals_lobatto: Vec<f64>,
}

impl DgBasis {
    pub fn new(degree: usize) -> Self {
        let nb = degree + 1;
        let (quad_points, quad_weights) = gauss_legendre(nb);
        let nq = quad_points.len();
        let mut vals_quad = vec![0.0; nb * nq];
        let mut dvals_quad = vec![0.0; nb * nq];
        for m in 0..nb {
            let s = ((2 * m + 1) as f64).sqrt();
            for q in 0..nq {
                let (p, dp) = legendre(m, quad_points[q]);
                vals_quad[m * nq + q] = s * p;
                dvals_quad[m * nq + q] = s * dp;
            }
        }
        let mut stiff = vec![0.0; nb * nb];
        for n in 0..nb {
            for m in 0..nb {
                stiff[n * nb + m] = (0..nq)
                    .map(|q| quad_weights[q] * vals_quad[n * nq + q] * dvals_quad[m * nq + q])
                    .sum();
            }
        }
        let ref_value = |m: usize, xi: f64| ((2 * m + 1) as f64).sqrt() * legendre(m, xi).0;
        let left = (0..nb).map(|m| ref_value(m, -1.0)).collect();
        let right = (0..nb).map(|m| ref_value(m, 1.0)).collect();
        let center = (0..nb).map(|m| ref_value(m, 0.0)).collect();
        let (lobatto_points, _) = gauss_lobatto(degree + 2);
        let nl = lobatto_points.len();
        let mut vals_lobatto = vec![0.0; nb * nl];
        for m in 0..nb {
            for (s, &xi) in lobatto_points.iter().enumerate() {
                vals_lobatto[m * nl + s] = ref_value(m, xi);
            }
        }
        Self {
            degree,
            quad_points,
            quad_weights,
            vals_quad,
            left,
            right,
            center,
            stiff,
            lobatto_points,
            vals_lobatto,
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn n_basis(&self) -> usize {
        self.degree + 1
    }

    pub fn n_quad(&self) -> usize {
        self.quad_points.len()
    }

    pub fn quad_points(&self) -> &[f64] {
        &self.quad_points
    }

    pub fn quad_weights(&self) -> &[f64] {
        &self.quad_weights
    }

    /// Reference mode `m` at quadrature point `q` (without the `1/sqrt(h)` factor).
    pub fn value_at_quad(&self, m: usize, q: usize) -> f64 {
        self.vals_quad[m * self.n_quad() + q]
    }

    pub fn left_values(&self) -> &[f64] {
        &self.left
    }

    pub fn right_values(&self) -> &[f64] {
        &self.right
    }

    pub fn center_values(&self) -> &[f64] {
        &self.center
    }

    pub fn lobatto_points(&self) -> &[f64] {
        &self.lobatto_points
    }

    pub fn value_at_lobatto(&self, m: usize, s: usize) -> f64 {
        self.vals_lobatto[m * self.lobatto_points.len() + s]
    }

    /// Reference mode `m` at arbitrary `xi`.
    pub fn value(&self, m: usize, xi: f64) -> f64 {
        ((2 * m + 1) as f64).sqrt() * legendre(m, xi).0
    }

    pub fn stiffness(&self, n: usize, m: usize) -> f64 {
        self.stiff[n * self.n_basis() + m]
    }
}

/// Which one-sided trace an operator reads at the interfaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// Limit from the left cell, `u^-`.
    Left,
    /// Limit from the right cell, `u^+`.
    Right,
}

/// Variant of the discrete operator `L^+-`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LVariant {
    Plus,
    Minus,
}

/// One scalar member of `V_h^k`, stored as modal coefficients per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarDgField {
    n_cells: usize,
    n_basis: usize,
    coeffs: Vec<f64>,
}

impl ScalarDgField {
    pub fn zeros(n_cells: usize, n_basis: usize) -> Self {
        Self {
            n_cells,
            n_basis,
            coeffs: vec![0.0; n_cells * n_basis],
        }
    }

    pub fn from_coeffs(n_cells: usize, n_basis: usize, coeffs: Vec<f64>) -> Result<Self> {
        crate::error::check_len(n_cells * n_basis, coeffs.len())?;
        Ok(Self {
            n_cells,
            n_basis,
            coeffs,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn n_basis(&self) -> usize {
        self.n_basis
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn coeff(&self, i: usize, m: usize) -> f64 {
        self.coeffs[i * self.n_basis + m]
    }

    pub fn set_coeff(&mut self, i: usize, m: usize, value: f64) {
        self.coeffs[i * self.n_basis + m] = value;
    }

    /// Value at reference coordinate `xi` of cell `i`.
    pub fn eval_ref(&self, mesh: &Mesh1D, basis: &DgBasis, i: usize, xi: f64) -> f64 {
        let s: f64 = (0..self.n_basis).map(|m| self.coeff(i, m) * basis.value(m, xi)).sum();
        s / mesh.h().sqrt()
    }

    /// Value at `x`; at an interior interface the right-cell value is returned.
    pub fn eval(&self, mesh: &Mesh1D, basis: &DgBasis, x: f64) -> f64 {
        let (i, xi) = mesh.locate(x);
        self.eval_ref(mesh, basis, i, xi)
    }

    pub fn cell_average(&self, mesh: &Mesh1D, i: usize) -> f64 {
        self.coeff(i, 0) / mesh.h().sqrt()
    }

    /// `u^-` or `u^+` at interface `p`.
    pub fn trace(&self, mesh: &Mesh1D, basis: &DgBasis, p: usize, side: Side, periodic: bool) -> Result<f64> {
        let n = self.n_cells;
        let cell = match side {
            Side::Left => {
                if p == 0 {
                    if !periodic {
                        return Err(ApdgError::InterfaceOutOfRange { index: p, n_cells: n });
                    }
                    n - 1
                } else if p <= n {
                    p - 1
                } else {
                    return Err(ApdgError::InterfaceOutOfRange { index: p, n_cells: n });
                }
            }
            Side::Right => {
                if p < n {
                    p
                } else if p == n && periodic {
                    0
                } else {
                    return Err(ApdgError::InterfaceOutOfRange { index: p, n_cells: n });
                }
            }
        };
        let table = match side {
            Side::Left => basis.right_values(),
            Side::Right => basis.left_values(),
        };
        let s: f64 = (0..self.n_basis).map(|m| self.coeff(cell, m) * table[m]).sum();
        Ok(s / mesh.h().sqrt())
    }

    /// `[u] = u^+ - u^-` at interface `p`.
    pub fn jump(&self, mesh: &Mesh1D, basis: &DgBasis, p: usize, periodic: bool) -> Result<f64> {
        Ok(self.trace(mesh, basis, p, Side::Right, periodic)? - self.trace(mesh, basis, p, Side::Left, periodic)?)
    }

    /// `{u} = (u^+ + u^-) / 2` at interface `p`.
    pub fn average(&self, mesh: &Mesh1D, basis: &DgBasis, p: usize, periodic: bool) -> Result<f64> {
        Ok(0.5 * (self.trace(mesh, basis, p, Side::Right, periodic)? + self.trace(mesh, basis, p, Side::Left, periodic)?))
    }

    pub fn axpy(&mut self, a: f64, other: &ScalarDgField) {
        for (x, y) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *x += a * y;
        }
    }
}

/// Jump and average from explicit traces.
pub fn jump_average(minus: f64, plus: f64) -> (f64, f64) {
    (plus - minus, 0.5 * (plus + minus))
}

/// `L^2` projection of `f` onto `V_h^k` with the basis quadrature.
pub fn project(mesh: &Mesh1D, basis: &DgBasis, f: impl Fn(f64) -> f64) -> ScalarDgField {
    let nb = basis.n_basis();
    let mut out = ScalarDgField::zeros(mesh.n_cells(), nb);
    let scale = mesh.h().sqrt() / 2.0;
    for i in 0..mesh.n_cells() {
        for q in 0..basis.n_quad() {
            let fx = f(mesh.map(i, basis.quad_points()[q]));
            let wq = basis.quad_weights()[q] * scale * fx;
            for m in 0..nb {
                out.coeffs[i * nb + m] += wq * basis.value_at_quad(m, q);
            }
        }
    }
    out
}

/// Coefficients of `v -> L(psi, v)` tested against every basis function:
/// `out[i, m] = -(psi, d_x phi_{i,m}) - flux_i phi_{i,m}(x_i^+) + flux_{i+1} phi_{i,m}(x_{i+1}^-)`.
///
/// `data` and `out` are laid out `[cell][mode][component]` with `nv`
/// contiguous components; `flux` is `[interface][component]`.
pub(crate) fn weak_derivative_raw(
    basis: &DgBasis,
    h: f64,
    n_cells: usize,
    nv: usize,
    data: &[f64],
    flux: &[f64],
    out: &mut [f64],
) {
    let nb = basis.n_basis();
    let inv_h = 1.0 / h;
    let inv_sqrt_h = 1.0 / h.sqrt();
    for i in 0..n_cells {
        for m in 0..nb {
            let o = &mut out[(i * nb + m) * nv..(i * nb + m + 1) * nv];
            let fl = &flux[i * nv..(i + 1) * nv];
            let fr = &flux[(i + 1) * nv..(i + 2) * nv];
            let cl = basis.left[m] * inv_sqrt_h;
            let cr = basis.right[m] * inv_sqrt_h;
            for l in 0..nv {
                o[l] = cr * fr[l] - cl * fl[l];
            }
            for n in 0..nb {
                let k = basis.stiff[n * nb + m] * inv_h;
                if k == 0.0 {
                    continue;
                }
                let d = &data[(i * nb + n) * nv..(i * nb + n + 1) * nv];
                for l in 0..nv {
                    o[l] -= k * d[l];
                }
            }
        }
    }
}

/// One-sided traces of a `[cell][mode][component]` array at every interface,
/// periodic closure. Output layout `[interface][component]`, `N + 1` interfaces.
pub(crate) fn traces_raw(basis: &DgBasis, h: f64, n_cells: usize, nv: usize, data: &[f64], side: Side, out: &mut [f64]) {
    let nb = basis.n_basis();
    let inv_sqrt_h = 1.0 / h.sqrt();
    for p in 0..=n_cells {
        let (cell, table) = match side {
            Side::Left => (if p == 0 { n_cells - 1 } else { p - 1 }, &basis.right),
            Side::Right => (if p == n_cells { 0 } else { p }, &basis.left),
        };
        let o = &mut out[p * nv..(p + 1) * nv];
        o.iter_mut().for_each(|x| *x = 0.0);
        for m in 0..nb {
            let c = table[m] * inv_sqrt_h;
            let d = &data[(cell * nb + m) * nv..(cell * nb + m + 1) * nv];
            for l in 0..nv {
                o[l] += c * d[l];
            }
        }
    }
}

/// Tested values of `L^+-(psi, .)` under periodic closure.
pub fn apply_l(mesh: &Mesh1D, basis: &DgBasis, psi: &ScalarDgField, variant: LVariant) -> ScalarDgField {
    let n = mesh.n_cells();
    let side = match variant {
        LVariant::Plus => Side::Right,
        LVariant::Minus => Side::Left,
    };
    let mut flux = vec![0.0; n + 1];
    traces_raw(basis, mesh.h(), n, 1, &psi.coeffs, side, &mut flux);
    let mut out = ScalarDgField::zeros(n, basis.n_basis());
    weak_derivative_raw(basis, mesh.h(), n, 1, &psi.coeffs, &flux, &mut out.coeffs);
    out
}

/// Bilinear form `L^+-(psi, u)`.
pub fn l_form(mesh: &Mesh1D, basis: &DgBasis, psi: &ScalarDgField, u: &ScalarDgField, variant: LVariant) -> f64 {
    inner(&apply_l(mesh, basis, psi, variant), u)
}

/// `(u, w)` over the domain; exact by orthonormality.
pub fn inner(u: &ScalarDgField, w: &ScalarDgField) -> f64 {
    u.coeffs.iter().zip(&w.coeffs).map(|(a, b)| a * b).sum()
}

/// `int u dx`.
pub fn integrate_x(mesh: &Mesh1D, u: &ScalarDgField) -> f64 {
    let sh = mesh.h().sqrt();
    (0..u.n_cells).map(|i| u.coeff(i, 0) * sh).sum()
}

/// `int g(x, u(x)) dx` by the basis quadrature.
pub fn integrate_with(mesh: &Mesh1D, basis: &DgBasis, u: &ScalarDgField, g: impl Fn(f64, f64) -> f64) -> f64 {
    let mut total = 0.0;
    for i in 0..mesh.n_cells() {
        for (q, &xi) in basis.quad_points().iter().enumerate() {
            let x = mesh.map(i, xi);
            total += 0.5 * mesh.h() * basis.quad_weights()[q] * g(x, u.eval_ref(mesh, basis, i, xi));
        }
    }
    total
}

pub fn l2_norm_x(u: &ScalarDgField) -> f64 {
    inner(u, u).sqrt()
}

/// DG coefficient tensor for one parity variable: a [`ScalarDgField`] per
/// velocity node, stored `[cell][mode][node]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParityField {
    n_cells: usize,
    n_basis: usize,
    n_v: usize,
    data: Vec<f64>,
}

impl ParityField {
    pub fn zeros(n_cells: usize, n_basis: usize, n_v: usize) -> Self {
        Self {
            n_cells,
            n_basis,
            n_v,
            data: vec![0.0; n_cells * n_basis * n_v],
        }
    }

    /// Projects `f(x, l)` for every node `l`.
    pub fn project(mesh: &Mesh1D, basis: &DgBasis, n_v: usize, f: impl Fn(f64, usize) -> f64) -> Self {
        let mut out = Self::zeros(mesh.n_cells(), basis.n_basis(), n_v);
        for l in 0..n_v {
            let slice = project(mesh, basis, |x| f(x, l));
            out.set_slice(l, &slice);
        }
        out
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn n_basis(&self) -> usize {
        self.n_basis
    }

    pub fn n_v(&self) -> usize {
        self.n_v
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn index(&self, i: usize, m: usize, l: usize) -> usize {
        (i * self.n_basis + m) * self.n_v + l
    }

    pub fn get(&self, i: usize, m: usize, l: usize) -> f64 {
        self.data[self.index(i, m, l)]
    }

    pub fn set(&mut self, i: usize, m: usize, l: usize, value: f64) {
        let k = self.index(i, m, l);
        self.data[k] = value;
    }

    /// Coefficient vector over velocity nodes for cell `i`, mode `m`.
    pub fn modes(&self, i: usize, m: usize) -> &[f64] {
        let k = self.index(i, m, 0);
        &self.data[k..k + self.n_v]
    }

    pub fn slice(&self, l: usize) -> ScalarDgField {
        let mut out = ScalarDgField::zeros(self.n_cells, self.n_basis);
        for i in 0..self.n_cells {
            for m in 0..self.n_basis {
                out.coeffs[i * self.n_basis + m] = self.get(i, m, l);
            }
        }
        out
    }

    pub fn set_slice(&mut self, l: usize, field: &ScalarDgField) {
        for i in 0..self.n_cells {
            for m in 0..self.n_basis {
                self.set(i, m, l, field.coeff(i, m));
            }
        }
    }

    /// Nodal values at reference point with basis values `phi` (length `n_basis`), into `out`.
    pub(crate) fn eval_cell_into(&self, i: usize, phi: &[f64], inv_sqrt_h: f64, out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        for (m, &p) in phi.iter().enumerate() {
            let c = p * inv_sqrt_h;
            for (o, d) in out.iter_mut().zip(self.modes(i, m)) {
                *o += c * d;
            }
        }
    }

    /// Nodal values at `xi` in cell `i`.
    pub fn eval_ref(&self, mesh: &Mesh1D, basis: &DgBasis, i: usize, xi: f64) -> Vec<f64> {
        let phi: Vec<f64> = (0..self.n_basis).map(|m| basis.value(m, xi)).collect();
        let mut out = vec![0.0; self.n_v];
        self.eval_cell_into(i, &phi, 1.0 / mesh.h().sqrt(), &mut out);
        out
    }

    pub fn axpy(&mut self, a: f64, other: &ParityField) {
        for (x, y) in self.data.iter_mut().zip(&other.data) {
            *x += a * y;
        }
    }

    pub fn scale(&mut self, a: f64) {
        self.data.iter_mut().for_each(|x| *x *= a);
    }

    /// `a * x + b * y`.
    pub fn lincomb(a: f64, x: &ParityField, b: f64, y: &ParityField) -> ParityField {
        let data = x.data.iter().zip(&y.data).map(|(p, q)| a * p + b * q).collect();
        ParityField { data, ..*x }
    }

    pub fn max_abs_diff(&self, other: &ParityField) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Density field `rho = int g dv` as a scalar DG field.
    pub fn density(&self, grid: &VelocityGrid) -> ScalarDgField {
        let mut out = ScalarDgField::zeros(self.n_cells, self.n_basis);
        for i in 0..self.n_cells {
            for m in 0..self.n_basis {
                out.coeffs[i * self.n_basis + m] = grid.density(self.modes(i, m));
            }
        }
        out
    }
}

/// Phase-space norm `|||g||| = (int int g^2 lambda / M dv dx)^(1/2)`.
pub fn phase_norm(g: &ParityField, grid: &VelocityGrid, kernel: &CollisionKernel) -> f64 {
    phase_norm_sq(g, grid, kernel).sqrt()
}

pub(crate) fn phase_weights(grid: &VelocityGrid, kernel: &CollisionKernel) -> Vec<f64> {
    let s = (2.0 * std::f64::consts::PI).sqrt();
    (0..grid.len())
        .map(|l| grid.weights()[l] / s * kernel.lambda()[l] / grid.maxwellian()[l].powi(2))
        .collect()
}

pub fn phase_norm_sq(g: &ParityField, grid: &VelocityGrid, kernel: &CollisionKernel) -> f64 {
    let pw = phase_weights(grid, kernel);
    let mut per_node = vec![0.0; g.n_v];
    for chunk in g.data.chunks_exact(g.n_v) {
        for (acc, x) in per_node.iter_mut().zip(chunk) {
            *acc += x * x;
        }
    }
    per_node.iter().zip(&pw).map(|(a, w)| a * w).sum()
}

/// `int weight(x) int g^2 lambda / M dv dx` with `weight` sampled at the basis quadrature.
pub fn phase_norm_sq_weighted(
    g: &ParityField,
    mesh: &Mesh1D,
    basis: &DgBasis,
    grid: &VelocityGrid,
    kernel: &CollisionKernel,
    weight: impl Fn(f64) -> f64,
) -> f64 {
    let pw = phase_weights(grid, kernel);
    let nq = basis.n_quad();
    let inv_sqrt_h = 1.0 / mesh.h().sqrt();
    let mut vals = vec![0.0; g.n_v];
    let mut phi = vec![0.0; g.n_basis];
    let mut total = 0.0;
    for i in 0..g.n_cells {
        for q in 0..nq {
            for (m, p) in phi.iter_mut().enumerate() {
                *p = basis.value_at_quad(m, q);
            }
            g.eval_cell_into(i, &phi, inv_sqrt_h, &mut vals);
            let wx = 0.5 * mesh.h() * basis.quad_weights()[q] * weight(mesh.map(i, basis.quad_points()[q]));
            let s: f64 = vals.iter().zip(&pw).map(|(v, w)| v * v * w).sum();
            total += wx * s;
        }
    }
    total
}

/// CSV of pointwise values at the quadrature nodes: `cell,x,value`.
pub fn write_field_points_csv<W: Write>(out: W, mesh: &Mesh1D, basis: &DgBasis, field: &ScalarDgField) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["cell", "x", "value"])?;
    for i in 0..mesh.n_cells() {
        for &xi in basis.quad_points() {
            w.write_record(&[
                i.to_string(),
                format!("{:.12e}", mesh.map(i, xi)),
                format!("{:.12e}", field.eval_ref(mesh, basis, i, xi)),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// CSV of cell averages: `cell,x_center,average`.
pub fn write_cell_averages_csv<W: Write>(out: W, mesh: &Mesh1D, field: &ScalarDgField) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["cell", "x_center", "average"])?;
    for i in 0..mesh.n_cells() {
        w.write_record(&[
            i.to_string(),
            format!("{:.12e}", mesh.center(i)),
            format!("{:.12e}", field.cell_average(mesh, i)),
        ])?;
    }
    w.flush()?;
    Ok(())
}
