//! Velocity discretization with renormalized Hermite polynomials.
//!
//! Distributions are stored as nodal samples `g(v_l)` at the Gauss-Hermite
//! nodes of the weight `exp(-v^2/2)`. Writing `g = psi * M` with the
//! normalized Maxwellian `M`, the polynomial part `psi` is expanded in the
//! orthonormal family `H~_i` and recovered by quadrature.
//!
//! Normalization: the discrete collision frequency and the gain term of the
//! collision operator both carry the factor `1/sqrt(2 pi)`, so that a unit
//! cross-section yields `lambda = 1` at every node.

use nalgebra::{DMatrix, SymmetricEigen};
use std::f64::consts::PI;

use crate::error::{check_len, ApdgError, Result};

const SQRT_2PI: f64 = 2.506_628_274_631_000_7;

/// Normalized Maxwellian `exp(-v^2/2) / sqrt(2 pi)`.
pub fn maxwellian(v: f64) -> f64 {
    (-0.5 * v * v).exp() / SQRT_2PI
}

/// Gauss-Hermite velocity grid with precomputed Hermite tables.
#[derive(Debug, Clone)]
pub struct VelocityGrid {
    n_modes: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    maxwellian: Vec<f64>,
    /// `hermite[i * n + l] = H~_i(v_l)`
    hermite: Vec<f64>,
    /// `deriv[i * n + m] = C_{im}`
    deriv: Vec<f64>,
    /// Derivative of a distribution sample vector: `(d_v g)(v_m) = sum_i g_i dist_deriv[i * n + m]`.
    dist_deriv: Vec<f64>,
    /// `w_l exp(v_l^2 / 2)`: discrete `int g dv = sum_l mass_weights[l] g(v_l)`.
    mass_weights: Vec<f64>,
}

impl VelocityGrid {
    /// Builds the grid with `n_modes + 1` nodes; `n_modes` must be odd so the
    /// nodes pair up as `+-v` with no node at zero.
    pub fn new(n_modes: usize) -> Result<Self> {
        if n_modes == 0 || n_modes % 2 == 0 {
            return Err(ApdgError::InvalidModeCount(n_modes));
        }
        let n = n_modes + 1;

        // Golub-Welsch: eigenvalues of the Jacobi matrix of the probabilists'
        // Hermite family are the roots of He_n.
        let jacobi = DMatrix::from_fn(n, n, |i, j| {
            if i + 1 == j {
                (j as f64).sqrt()
            } else if j + 1 == i {
                (i as f64).sqrt()
            } else {
                0.0
            }
        });
        let mut roots: Vec<f64> = SymmetricEigen::new(jacobi).eigenvalues.iter().copied().collect();
        roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for x in roots.iter_mut() {
            *x = newton_polish(n, *x);
        }
        // Exact mirror symmetry.
        let mut nodes = vec![0.0; n];
        for l in 0..n / 2 {
            let v = 0.5 * (roots[n - 1 - l] - roots[l]);
            nodes[l] = -v;
            nodes[n - 1 - l] = v;
        }

        let mut hermite = vec![0.0; n * n];
        for (l, &v) in nodes.iter().enumerate() {
            let column = hermite_values(n_modes, v);
            for (i, h) in column.iter().enumerate() {
                hermite[i * n + l] = *h;
            }
        }
        // Christoffel numbers of the orthonormal family.
        let mut weights = vec![0.0; n];
        for l in 0..n {
            let s: f64 = (0..n).map(|i| hermite[i * n + l].powi(2)).sum();
            weights[l] = 1.0 / s;
        }
        for l in 0..n / 2 {
            let w = 0.5 * (weights[l] + weights[n - 1 - l]);
            weights[l] = w;
            weights[n - 1 - l] = w;
        }

        let maxwellian: Vec<f64> = nodes.iter().map(|&v| maxwellian(v)).collect();
        let mass_weights: Vec<f64> = nodes
            .iter()
            .zip(&weights)
            .map(|(&v, &w)| w * (0.5 * v * v).exp())
            .collect();

        let mut deriv = vec![0.0; n * n];
        for i in 0..n {
            for m in 0..n {
                let mut s = 0.0;
                for ell in 1..n {
                    s += (ell as f64).sqrt() * hermite[ell * n + i] * hermite[(ell - 1) * n + m];
                }
                deriv[i * n + m] = s * weights[i];
            }
        }
        let mut dist_deriv = vec![0.0; n * n];
        for i in 0..n {
            for m in 0..n {
                let mut c = deriv[i * n + m] * maxwellian[m] / maxwellian[i];
                if i == m {
                    c -= nodes[m];
                }
                dist_deriv[i * n + m] = c;
            }
        }

        Ok(Self {
            n_modes,
            nodes,
            weights,
            maxwellian,
            hermite,
            deriv,
            dist_deriv,
            mass_weights,
        })
    }

    /// Highest Hermite index `N_v`.
    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    /// Number of velocity nodes, `N_v + 1`.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `M(v_l)` at every node.
    pub fn maxwellian(&self) -> &[f64] {
        &self.maxwellian
    }

    pub fn mass_weights(&self) -> &[f64] {
        &self.mass_weights
    }

    /// `H~_i(v_l)`.
    pub fn hermite(&self, i: usize, l: usize) -> f64 {
        self.hermite[i * self.len() + l]
    }

    /// Entry `C_{im}` of the differentiation matrix acting on `psi` samples.
    pub fn deriv_entry(&self, i: usize, m: usize) -> f64 {
        self.deriv[i * self.len() + m]
    }

    /// Index of the node at `-v_l`.
    pub fn mirror(&self, l: usize) -> usize {
        self.len() - 1 - l
    }

    pub fn max_speed(&self) -> f64 {
        self.nodes.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }

    /// Hermite coefficients `psi_i = sum_l psi(v_l) H~_i(v_l) w_l`.
    pub fn hermite_transform(&self, samples: &[f64]) -> Result<Vec<f64>> {
        let n = self.len();
        check_len(n, samples.len())?;
        Ok((0..n)
            .map(|i| {
                (0..n)
                    .map(|l| samples[l] * self.hermite[i * n + l] * self.weights[l])
                    .sum()
            })
            .collect())
    }

    /// Synthesizes nodal values of `psi = sum_i coeffs[i] H~_i`.
    pub fn hermite_synthesize(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        let n = self.len();
        check_len(n, coeffs.len())?;
        Ok((0..n)
            .map(|l| (0..n).map(|i| coeffs[i] * self.hermite[i * n + l]).sum())
            .collect())
    }

    /// `d_v psi` at the nodes from the nodal values of `psi`.
    pub fn velocity_derivative(&self, samples: &[f64]) -> Result<Vec<f64>> {
        let n = self.len();
        check_len(n, samples.len())?;
        let mut out = vec![0.0; n];
        for (i, &s) in samples.iter().enumerate() {
            let row = &self.deriv[i * n..(i + 1) * n];
            for (o, c) in out.iter_mut().zip(row) {
                *o += s * c;
            }
        }
        Ok(out)
    }

    /// `d_v g` at the nodes for a distribution sample vector `g = psi M`.
    pub fn distribution_derivative(&self, g: &[f64]) -> Result<Vec<f64>> {
        check_len(self.len(), g.len())?;
        let mut out = vec![0.0; self.len()];
        self.distribution_derivative_into(g, &mut out);
        Ok(out)
    }

    pub(crate) fn distribution_derivative_into(&self, g: &[f64], out: &mut [f64]) {
        let n = self.len();
        out.iter_mut().for_each(|o| *o = 0.0);
        for (i, &s) in g.iter().enumerate() {
            let row = &self.dist_deriv[i * n..(i + 1) * n];
            for (o, c) in out.iter_mut().zip(row) {
                *o += s * c;
            }
        }
    }

    /// Discrete density `int g dv`.
    pub fn moment_density(&self, g: &[f64]) -> Result<f64> {
        check_len(self.len(), g.len())?;
        Ok(self.density(g))
    }

    pub(crate) fn density(&self, g: &[f64]) -> f64 {
        g.iter().zip(&self.mass_weights).map(|(a, b)| a * b).sum()
    }

    /// Discrete `int v^p M dv`.
    pub fn maxwellian_moment(&self, p: i32) -> f64 {
        self.weights
            .iter()
            .zip(&self.nodes)
            .map(|(w, v)| w * v.powi(p))
            .sum::<f64>()
            / SQRT_2PI
    }
}

/// `H~_0..=H~_{n_modes}` at `v` by the three-term recurrence.
pub fn hermite_values(n_modes: usize, v: f64) -> Vec<f64> {
    let mut h = Vec::with_capacity(n_modes + 1);
    let mut prev = 0.0;
    let mut cur = (2.0 * PI).powf(-0.25);
    h.push(cur);
    for ell in 0..n_modes {
        let l = ell as f64;
        let next = v * cur / (l + 1.0).sqrt() - prev * (l / (l + 1.0)).sqrt();
        prev = cur;
        cur = next;
        h.push(cur);
    }
    h
}

fn newton_polish(n: usize, mut x: f64) -> f64 {
    // Root of H~_n; derivative via H~_n' = sqrt(n) H~_{n-1}.
    for _ in 0..8 {
        let h = hermite_values(n, x);
        let f = h[n];
        let df = (n as f64).sqrt() * h[n - 1];
        let dx = f / df;
        x -= dx;
        if dx.abs() < 1e-16 * x.abs().max(1.0) {
            break;
        }
    }
    x
}

/// Discrete collision operator with a tabulated cross-section.
#[derive(Debug, Clone)]
pub struct CollisionKernel {
    n: usize,
    sigma: Vec<f64>,
    lambda: Vec<f64>,
    mu: f64,
    /// `sigma_{il} w_l / (sqrt(2 pi) M_l)` folded for the gain term on `g` samples.
    gain: Vec<f64>,
}

impl CollisionKernel {
    /// Cross-section `sigma(v, w) = value` everywhere.
    pub fn constant(grid: &VelocityGrid, value: f64, mu: f64) -> Result<Self> {
        let n = grid.len();
        Self::from_matrix(grid, vec![value; n * n], mu)
    }

    pub fn from_fn(grid: &VelocityGrid, sigma: impl Fn(f64, f64) -> f64, mu: f64) -> Result<Self> {
        let n = grid.len();
        let v = grid.nodes();
        let mut table = vec![0.0; n * n];
        for i in 0..n {
            for l in 0..n {
                table[i * n + l] = sigma(v[i], v[l]);
            }
        }
        Self::from_matrix(grid, table, mu)
    }

    /// Row-major `sigma(v_i, v_l)` table.
    pub fn from_matrix(grid: &VelocityGrid, sigma: Vec<f64>, mu: f64) -> Result<Self> {
        let n = grid.len();
        check_len(n * n, sigma.len())?;
        for i in 0..n {
            for l in 0..n {
                let s = sigma[i * n + l];
                if !(s > 0.0) || !s.is_finite() {
                    return Err(ApdgError::InvalidKernel(format!(
                        "sigma({i},{l}) = {s} is not strictly positive"
                    )));
                }
                if s != sigma[l * n + i] {
                    return Err(ApdgError::InvalidKernel(format!(
                        "sigma is not symmetric at ({i},{l})"
                    )));
                }
            }
        }
        let w = grid.weights();
        let m = grid.maxwellian();
        let lambda: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|l| sigma[i * n + l] * w[l]).sum::<f64>() / SQRT_2PI)
            .collect();
        let max_lambda = lambda.iter().cloned().fold(f64::MIN, f64::max);
        if mu < max_lambda {
            return Err(ApdgError::InvalidKernel(format!(
                "mu = {mu} is below max lambda = {max_lambda}"
            )));
        }
        let mut gain = vec![0.0; n * n];
        for i in 0..n {
            for l in 0..n {
                gain[i * n + l] = m[i] * sigma[i * n + l] * w[l] / (SQRT_2PI * m[l]);
            }
        }
        Ok(Self {
            n,
            sigma,
            lambda,
            mu,
            gain,
        })
    }

    pub fn sigma(&self, i: usize, l: usize) -> f64 {
        self.sigma[i * self.n + l]
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn max_lambda(&self) -> f64 {
        self.lambda.iter().cloned().fold(f64::MIN, f64::max)
    }

    /// Nodal values of `Q(f)` from nodal values of `f`.
    pub fn collision_apply(&self, f: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n, f.len())?;
        let mut out = vec![0.0; self.n];
        self.collision_into(f, &mut out);
        Ok(out)
    }

    /// `P(r) = Q(r) + mu r`.
    pub fn relaxed_operator(&self, r: &[f64]) -> Result<Vec<f64>> {
        let mut out = self.collision_apply(r)?;
        for (o, x) in out.iter_mut().zip(r) {
            *o += self.mu * x;
        }
        Ok(out)
    }

    pub(crate) fn collision_into(&self, f: &[f64], out: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let row = &self.gain[i * n..(i + 1) * n];
            let gain: f64 = row.iter().zip(f).map(|(a, b)| a * b).sum();
            out[i] = gain - self.lambda[i] * f[i];
        }
    }

    /// `D = int v^2 M / lambda dv` on the grid.
    pub fn diffusion_constant(&self, grid: &VelocityGrid) -> f64 {
        grid.weights()
            .iter()
            .zip(grid.nodes())
            .zip(&self.lambda)
            .map(|((w, v), lam)| w * v * v / lam)
            .sum::<f64>()
            / SQRT_2PI
    }
}
