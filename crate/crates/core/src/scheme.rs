//! The asymptotic-preserving time integrator for the parity system.
//!
//! A full step limits `f = r + eps j`, relaxes `(r, j)` with the
//! time-relaxed collision update and a backward-Euler `j` update, then
//! advances the transport part with SSPRK3 (or a single forward-Euler
//! stage). All arrays use the `[cell][mode][node]` layout of
//! [`ParityField`].

use std::fmt;
use std::sync::Arc;

use crate::dg::{project, traces_raw, weak_derivative_raw, DgBasis, Mesh1D, ParityField, ScalarDgField, Side};
use crate::dg::{integrate_x, phase_norm_sq, phase_norm_sq_weighted};
use crate::error::{ApdgError, Result};
use crate::field::{solve_poisson, FieldSpec, FieldState, ScalarFn};
use crate::hermite::{CollisionKernel, VelocityGrid};

/// Knudsen number, constant or varying in space.
#[derive(Clone)]
pub enum Epsilon {
    Constant(f64),
    Profile(ScalarFn),
}

impl Epsilon {
    pub fn at(&self, x: f64) -> f64 {
        match self {
            Epsilon::Constant(e) => *e,
            Epsilon::Profile(f) => f(x),
        }
    }

    pub fn constant(&self) -> Option<f64> {
        match self {
            Epsilon::Constant(e) => Some(*e),
            Epsilon::Profile(_) => None,
        }
    }

    /// `eps(x) = 1e-3 + (tanh(1 - 11x) + tanh(1 + 11x)) / 2`.
    pub fn mixed_regime() -> Self {
        Epsilon::Profile(Arc::new(mixed_regime_epsilon))
    }
}

impl fmt::Debug for Epsilon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Epsilon::Constant(e) => write!(f, "Constant({e})"),
            Epsilon::Profile(_) => write!(f, "Profile(..)"),
        }
    }
}

pub fn mixed_regime_epsilon(x: f64) -> f64 {
    1e-3 + 0.5 * ((1.0 - 11.0 * x).tanh() + (1.0 + 11.0 * x).tanh())
}

/// `phi = min(1, 1 / eps^2)`.
pub fn phi_of(eps: f64) -> f64 {
    (1.0 / (eps * eps)).min(1.0)
}

/// `tau = 1 - exp(-mu dt / eps^2)`.
pub fn tau_of(mu: f64, dt: f64, eps: f64) -> f64 {
    -(-mu * dt / (eps * eps)).exp_m1()
}

/// `alpha = eps^2 / (eps^2 + lambda dt)`.
pub fn alpha_of(eps: f64, lambda: f64, dt: f64) -> f64 {
    eps * eps / (eps * eps + lambda * dt)
}

/// `beta = dt (1 - eps^2 phi) / (eps^2 + lambda dt)`.
pub fn beta_of(eps: f64, lambda: f64, dt: f64) -> f64 {
    dt * (1.0 - eps * eps * phi_of(eps)) / (eps * eps + lambda * dt)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeStep {
    Fixed(f64),
    /// `dt = min(parabolic h^2 / (2 N_v + 1), hyperbolic h / max|v|)` with
    /// `N_v` the number of velocity modes.
    Cfl { parabolic: f64, hyperbolic: f64 },
}

impl Default for TimeStep {
    fn default() -> Self {
        TimeStep::Cfl {
            parabolic: 0.05,
            hyperbolic: 0.3,
        }
    }
}

/// Treatment of the boundary fluxes at negative velocity nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NegativeVelocityMode {
    /// `r^(-v) = r^(v)` and `j^(-v) = -j^(v)`, from the positive mirror node.
    #[default]
    Mirror,
    /// The same formulas with the node's own (negative) velocity.
    Literal,
}

/// Inflow data `F_L`, `F_R` and their velocity derivatives at the nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct InflowData {
    pub f_left: Vec<f64>,
    pub df_left: Vec<f64>,
    pub f_right: Vec<f64>,
    pub df_right: Vec<f64>,
    pub mode: NegativeVelocityMode,
}

impl InflowData {
    /// `F_L = F_R = M`, `d_v M = -v M`.
    pub fn maxwellian(grid: &VelocityGrid, mode: NegativeVelocityMode) -> Self {
        let f = grid.maxwellian().to_vec();
        let df: Vec<f64> = grid.nodes().iter().zip(&f).map(|(v, m)| -v * m).collect();
        Self {
            f_left: f.clone(),
            df_left: df.clone(),
            f_right: f,
            df_right: df,
            mode,
        }
    }

    /// Tables from samples of `F_L`, `F_R`; derivatives from the Hermite
    /// differentiation of the samples.
    pub fn from_samples(grid: &VelocityGrid, f_left: Vec<f64>, f_right: Vec<f64>, mode: NegativeVelocityMode) -> Result<Self> {
        let df_left = grid.distribution_derivative(&f_left)?;
        let df_right = grid.distribution_derivative(&f_right)?;
        Ok(Self {
            f_left,
            df_left,
            f_right,
            df_right,
            mode,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub enum Boundary {
    #[default]
    Periodic,
    Inflow(InflowData),
}

impl Boundary {
    pub fn is_periodic(&self) -> bool {
        matches!(self, Boundary::Periodic)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TransportIntegrator {
    #[default]
    Ssprk3,
    ForwardEuler,
}

#[derive(Debug, Clone)]
pub struct SchemeParams {
    pub epsilon: Epsilon,
    pub time_step: TimeStep,
    pub boundary: Boundary,
    pub field: FieldSpec,
    /// Limit `f` at the start of every step.
    pub limiter: bool,
    /// Also limit after every transport stage.
    pub limit_stages: bool,
    pub integrator: TransportIntegrator,
}

impl SchemeParams {
    pub fn new(epsilon: Epsilon, time_step: TimeStep) -> Self {
        Self {
            epsilon,
            time_step,
            boundary: Boundary::Periodic,
            field: FieldSpec::Zero,
            limiter: false,
            limit_stages: false,
            integrator: TransportIntegrator::Ssprk3,
        }
    }
}

/// The evolving state: parity variables and time.
#[derive(Debug, Clone, PartialEq)]
pub struct ParityState {
    pub r: ParityField,
    pub j: ParityField,
    pub t: f64,
    pub step: usize,
}

/// Electric field sampled where the scheme needs it.
#[derive(Debug, Clone)]
pub struct FieldSample {
    /// `E` at the quadrature points, `[cell * n_quad + q]`.
    pub quad: Vec<f64>,
    pub left: f64,
    pub right: f64,
    pub zero: bool,
    /// Present for the Poisson field.
    pub poisson: Option<FieldState>,
}

/// Boundary fluxes per velocity node.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryFluxes {
    pub r_left: Vec<f64>,
    pub r_right: Vec<f64>,
    pub j_left: Vec<f64>,
    pub j_right: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LimiterReport {
    /// Number of (cell, node) polynomials that were squeezed.
    pub activations: usize,
    /// Number of (cell, node) polynomials with a negative average (flattened).
    pub negative_averages: usize,
    /// Largest change of a cell average of `f`.
    pub average_error: f64,
    /// Smallest sampled `f` after limiting.
    pub min_after: f64,
}

impl LimiterReport {
    fn merge(&mut self, other: &LimiterReport) {
        self.activations += other.activations;
        self.negative_averages += other.negative_averages;
        self.average_error = self.average_error.max(other.average_error);
        self.min_after = self.min_after.min(other.min_after);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyNorms {
    /// `|||r|||^2 + int eps^2 |||j|||^2`.
    pub theorem: f64,
    /// `|||r|||^2 + ||eps||_{L2} |||j|||`.
    pub example: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDiagnostics {
    pub step: usize,
    pub t: f64,
    pub mass: f64,
    pub theorem_energy: f64,
    pub example_energy: f64,
    pub limiter_activations: usize,
    pub negative_averages: usize,
    /// Smallest sampled `f` of the limited state that was advanced
    /// (`+inf` when the limiter is off).
    pub min_f_sampled: f64,
    pub limiter_average_error: f64,
}

/// Fully assembled scheme with all step-independent tables.
#[derive(Debug, Clone)]
pub struct ApScheme {
    mesh: Mesh1D,
    basis: DgBasis,
    grid: VelocityGrid,
    kernel: CollisionKernel,
    params: SchemeParams,
    dt: f64,
    /// `phi_m(xi_q)` including `1/sqrt(h)`, `[m * nq + q]`.
    eval_tab: Vec<f64>,
    /// `(sqrt(h)/2) w_q P^_m(xi_q)`, `[m * nq + q]`.
    proj_tab: Vec<f64>,
    eps_q: Vec<f64>,
    tau_q: Vec<f64>,
    phi_q: Vec<f64>,
    phi_const: Option<f64>,
    /// `[(cell * nq + q) * nv + l]`
    alpha_q: Vec<f64>,
    beta_q: Vec<f64>,
    eps_bar: Vec<f64>,
    eps_left: f64,
    eps_right: f64,
    eps_l2: f64,
    prescribed: Option<FieldSample>,
}

impl ApScheme {
    pub fn new(mesh: Mesh1D, degree: usize, grid: VelocityGrid, kernel: CollisionKernel, params: SchemeParams) -> Result<Self> {
        let basis = DgBasis::new(degree);
        let n = mesh.n_cells();
        let nb = basis.n_basis();
        let nq = basis.n_quad();
        let nv = grid.len();
        if kernel.lambda().len() != nv {
            return Err(ApdgError::LengthMismatch {
                expected: nv,
                actual: kernel.lambda().len(),
            });
        }
        let h = mesh.h();
        let dt = match params.time_step {
            TimeStep::Fixed(dt) => dt,
            TimeStep::Cfl { parabolic, hyperbolic } => {
                let modes = (2 * grid.n_modes() + 1) as f64;
                (parabolic * h * h / modes).min(hyperbolic * h / grid.max_speed())
            }
        };
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(ApdgError::InvalidParameter {
                name: "dt",
                reason: format!("must be positive and finite, got {dt}"),
            });
        }

        let sh = h.sqrt();
        let mut eval_tab = vec![0.0; nb * nq];
        let mut proj_tab = vec![0.0; nb * nq];
        for m in 0..nb {
            for q in 0..nq {
                let p = basis.value_at_quad(m, q);
                eval_tab[m * nq + q] = p / sh;
                proj_tab[m * nq + q] = 0.5 * sh * basis.quad_weights()[q] * p;
            }
        }

        let check_eps = |e: f64, x: f64| -> Result<f64> {
            if e > 0.0 && e.is_finite() {
                Ok(e)
            } else {
                Err(ApdgError::InvalidParameter {
                    name: "epsilon",
                    reason: format!("must be positive and finite, got {e} at x = {x}"),
                })
            }
        };
        let mut eps_q = vec![0.0; n * nq];
        for i in 0..n {
            for q in 0..nq {
                let x = mesh.map(i, basis.quad_points()[q]);
                eps_q[i * nq + q] = check_eps(params.epsilon.at(x), x)?;
            }
        }
        let eps_left = check_eps(params.epsilon.at(mesh.x_left()), mesh.x_left())?;
        let eps_right = check_eps(params.epsilon.at(mesh.x_right()), mesh.x_right())?;
        let eps_bar: Vec<f64> = (0..n)
            .map(|i| {
                (0..nq)
                    .map(|q| 0.5 * basis.quad_weights()[q] * eps_q[i * nq + q])
                    .sum()
            })
            .collect();
        let eps_l2 = (0..n)
            .flat_map(|i| (0..nq).map(move |q| (i, q)))
            .map(|(i, q)| 0.5 * h * basis.quad_weights()[q] * eps_q[i * nq + q].powi(2))
            .sum::<f64>()
            .sqrt();

        let mu = kernel.mu();
        let lambda = kernel.lambda();
        let tau_q: Vec<f64> = eps_q.iter().map(|&e| tau_of(mu, dt, e)).collect();
        let phi_q: Vec<f64> = eps_q.iter().map(|&e| phi_of(e)).collect();
        let phi_const = if phi_q.iter().all(|&p| p == phi_q[0]) {
            Some(phi_q[0])
        } else {
            None
        };
        let mut alpha_q = vec![0.0; n * nq * nv];
        let mut beta_q = vec![0.0; n * nq * nv];
        for (k, &e) in eps_q.iter().enumerate() {
            for l in 0..nv {
                alpha_q[k * nv + l] = alpha_of(e, lambda[l], dt);
                beta_q[k * nv + l] = beta_of(e, lambda[l], dt);
            }
        }

        let mut scheme = Self {
            mesh,
            basis,
            grid,
            kernel,
            params,
            dt,
            eval_tab,
            proj_tab,
            eps_q,
            tau_q,
            phi_q,
            phi_const,
            alpha_q,
            beta_q,
            eps_bar,
            eps_left,
            eps_right,
            eps_l2,
            prescribed: None,
        };
        scheme.prescribed = match &scheme.params.field {
            FieldSpec::Zero => Some(scheme.zero_field()),
            FieldSpec::Prescribed(e) => {
                let e = e.clone();
                let mut quad = vec![0.0; n * nq];
                for i in 0..n {
                    for q in 0..nq {
                        quad[i * nq + q] = e(scheme.mesh.map(i, scheme.basis.quad_points()[q]));
                    }
                }
                Some(FieldSample {
                    quad,
                    left: e(scheme.mesh.x_left()),
                    right: e(scheme.mesh.x_right()),
                    zero: false,
                    poisson: None,
                })
            }
            FieldSpec::Poisson(_) => None,
        };
        Ok(scheme)
    }

    pub fn mesh(&self) -> &Mesh1D {
        &self.mesh
    }

    pub fn basis(&self) -> &DgBasis {
        &self.basis
    }

    pub fn grid(&self) -> &VelocityGrid {
        &self.grid
    }

    pub fn kernel(&self) -> &CollisionKernel {
        &self.kernel
    }

    pub fn params(&self) -> &SchemeParams {
        &self.params
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Cell-averaged Knudsen number used by the limiter.
    pub fn eps_bar(&self) -> &[f64] {
        &self.eps_bar
    }

    fn n(&self) -> usize {
        self.mesh.n_cells()
    }

    fn nb(&self) -> usize {
        self.basis.n_basis()
    }

    fn nq(&self) -> usize {
        self.basis.n_quad()
    }

    fn nv(&self) -> usize {
        self.grid.len()
    }

    fn empty_field(&self) -> ParityField {
        ParityField::zeros(self.n(), self.nb(), self.nv())
    }

    fn zero_field(&self) -> FieldSample {
        FieldSample {
            quad: vec![0.0; self.n() * self.nq()],
            left: 0.0,
            right: 0.0,
            zero: true,
            poisson: None,
        }
    }

    /// Projects `f(x, l)` onto the DG space for every velocity node.
    pub fn project_distribution(&self, f: impl Fn(f64, usize) -> f64) -> ParityField {
        ParityField::project(&self.mesh, &self.basis, self.nv(), f)
    }

    fn eval_quad(&self, data: &[f64]) -> Vec<f64> {
        let (n, nb, nq, nv) = (self.n(), self.nb(), self.nq(), self.nv());
        let mut out = vec![0.0; n * nq * nv];
        for i in 0..n {
            for q in 0..nq {
                let o = &mut out[(i * nq + q) * nv..(i * nq + q + 1) * nv];
                for m in 0..nb {
                    let c = self.eval_tab[m * nq + q];
                    let d = &data[(i * nb + m) * nv..(i * nb + m + 1) * nv];
                    for (x, y) in o.iter_mut().zip(d) {
                        *x += c * y;
                    }
                }
            }
        }
        out
    }

    fn project_quad(&self, vals: &[f64], out: &mut [f64]) {
        let (n, nb, nq, nv) = (self.n(), self.nb(), self.nq(), self.nv());
        for i in 0..n {
            for m in 0..nb {
                let o = &mut out[(i * nb + m) * nv..(i * nb + m + 1) * nv];
                o.iter_mut().for_each(|x| *x = 0.0);
                for q in 0..nq {
                    let c = self.proj_tab[m * nq + q];
                    let d = &vals[(i * nq + q) * nv..(i * nq + q + 1) * nv];
                    for (x, y) in o.iter_mut().zip(d) {
                        *x += c * y;
                    }
                }
            }
        }
    }

    /// `r = (f(v) + f(-v)) / 2`, `j = (f(v) - f(-v)) / (2 eps)`.
    pub fn even_odd_decompose(&self, f: &ParityField) -> Result<ParityState> {
        crate::error::check_len(self.empty_field().data().len(), f.data().len())?;
        let nv = self.nv();
        let mut r = self.empty_field();
        let mut j = self.empty_field();
        match self.params.epsilon.constant() {
            Some(eps) => {
                split_parity(f.data(), r.data_mut(), j.data_mut(), nv, |_| eps);
            }
            None => {
                let vals = self.eval_quad(f.data());
                let mut rv = vec![0.0; vals.len()];
                let mut jv = vec![0.0; vals.len()];
                split_parity(&vals, &mut rv, &mut jv, nv, |k| self.eps_q[k]);
                self.project_quad(&rv, r.data_mut());
                self.project_quad(&jv, j.data_mut());
            }
        }
        Ok(ParityState { r, j, t: 0.0, step: 0 })
    }

    /// `f = r + eps j`.
    pub fn reconstruct_f(&self, state: &ParityState) -> ParityField {
        match self.params.epsilon.constant() {
            Some(eps) => ParityField::lincomb(1.0, &state.r, eps, &state.j),
            None => {
                let nv = self.nv();
                let rv = self.eval_quad(state.r.data());
                let mut jv = self.eval_quad(state.j.data());
                for (k, chunk) in jv.chunks_exact_mut(nv).enumerate() {
                    let e = self.eps_q[k];
                    for (x, y) in chunk.iter_mut().zip(&rv[k * nv..(k + 1) * nv]) {
                        *x = y + e * *x;
                    }
                }
                let mut out = self.empty_field();
                self.project_quad(&jv, out.data_mut());
                out
            }
        }
    }

    /// Builds the initial state from samples of `f(x, v_l)`. With the
    /// limiter enabled the projection is limited as well, since an L2
    /// projection of nonnegative data can undershoot near its zeros.
    pub fn initial_state(&self, f: impl Fn(f64, usize) -> f64) -> Result<ParityState> {
        let fp = self.project_distribution(f);
        let mut state = self.even_odd_decompose(&fp)?;
        if self.params.limiter {
            self.positivity_limit(&mut state);
        }
        Ok(state)
    }

    /// Electric field for the current density.
    pub fn field_sample(&self, r: &ParityField) -> Result<FieldSample> {
        if let Some(s) = &self.prescribed {
            return Ok(s.clone());
        }
        let FieldSpec::Poisson(config) = &self.params.field else {
            return Ok(self.zero_field());
        };
        let rho = r.density(&self.grid);
        let state = solve_poisson(&rho, config, &self.mesh, &self.basis)?;
        let (n, nq) = (self.n(), self.nq());
        let mut quad = vec![0.0; n * nq];
        for i in 0..n {
            for q in 0..nq {
                quad[i * nq + q] = (0..self.nb())
                    .map(|m| state.e_field.coeff(i, m) * self.eval_tab[m * nq + q])
                    .sum();
            }
        }
        Ok(FieldSample {
            quad,
            left: state.e_points[0],
            right: state.e_points[n],
            zero: false,
            poisson: Some(state),
        })
    }

    /// Time-relaxed collision update of `r`, applied pointwise at the
    /// quadrature points and projected back.
    pub fn relaxation_step_r(&self, r: &ParityField) -> ParityField {
        let nv = self.nv();
        let mu = self.kernel.mu();
        let m = self.grid.maxwellian();
        let mut vals = self.eval_quad(r.data());
        let mut p = vec![0.0; nv];
        for (k, chunk) in vals.chunks_exact_mut(nv).enumerate() {
            let tau = self.tau_q[k];
            let rho = self.grid.density(chunk);
            self.kernel.collision_into(chunk, &mut p);
            let a = 1.0 - tau;
            let b = tau * (1.0 - tau) / mu;
            let c = tau * tau * rho;
            for l in 0..nv {
                let pl = p[l] + mu * chunk[l];
                chunk[l] = a * chunk[l] + b * pl + c * m[l];
            }
        }
        let mut out = self.empty_field();
        self.project_quad(&vals, out.data_mut());
        out
    }

    /// DG weak derivative `d_x u` with the given one-sided flux, the two
    /// boundary fluxes replaced when provided.
    fn weak_derivative(&self, data: &[f64], side: Side, left: Option<&[f64]>, right: Option<&[f64]>) -> Vec<f64> {
        let (n, nv) = (self.n(), self.nv());
        let mut flux = vec![0.0; (n + 1) * nv];
        traces_raw(&self.basis, self.mesh.h(), n, nv, data, side, &mut flux);
        if let Some(l) = left {
            flux[..nv].copy_from_slice(l);
        }
        if let Some(r) = right {
            flux[n * nv..].copy_from_slice(r);
        }
        let mut out = vec![0.0; data.len()];
        weak_derivative_raw(&self.basis, self.mesh.h(), n, nv, data, &flux, &mut out);
        out
    }

    /// Adds `E d_v g` at quadrature points to `vals`, scaled by `scale[k]`.
    fn add_field_term(&self, g: &[f64], field: &FieldSample, vals: &mut [f64], scale: impl Fn(usize) -> f64) {
        if field.zero {
            return;
        }
        let nv = self.nv();
        let gq = self.eval_quad(g);
        let mut d = vec![0.0; nv];
        for (k, chunk) in gq.chunks_exact(nv).enumerate() {
            let e = field.quad[k] * scale(k);
            if e == 0.0 {
                continue;
            }
            self.grid.distribution_derivative_into(chunk, &mut d);
            for (o, dv) in vals[k * nv..(k + 1) * nv].iter_mut().zip(&d) {
                *o += e * dv;
            }
        }
    }

    /// Boundary values of `r^` and `j^` from the inflow data and the
    /// one-sided traces of `r` at the two domain ends. `None` for periodic
    /// closure.
    ///
    /// The half-cell difference `(r_1 - r^)/(h/2)` is formed with the
    /// boundary trace of the first (last) cell. Cell-center values there
    /// leave the boundary term of the limiting LDG energy indefinite, and
    /// quadratic modes with opposite center and trace signs then grow at a
    /// rate of order `1/h^2`.
    pub fn inflow_boundary_fluxes(&self, r: &ParityField, field: &FieldSample) -> Result<Option<BoundaryFluxes>> {
        let Boundary::Inflow(data) = &self.params.boundary else {
            return Ok(None);
        };
        let (n, nv) = (self.n(), self.nv());
        let h = self.mesh.h();
        let inv_sqrt_h = 1.0 / h.sqrt();
        let mut r_first = vec![0.0; nv];
        let mut r_last = vec![0.0; nv];
        r.eval_cell_into(0, self.basis.left_values(), inv_sqrt_h, &mut r_first);
        r.eval_cell_into(n - 1, self.basis.right_values(), inv_sqrt_h, &mut r_last);
        let v = self.grid.nodes();
        let lambda = self.kernel.lambda();
        let (el, er) = (self.eps_left, self.eps_right);
        let (fl_e, fr_e) = (field.left, field.right);

        let left = |l: usize, vv: f64| -> Result<(f64, f64)> {
            let lam = lambda[l];
            let den = lam * h + 2.0 * el * vv;
            if !(den > 0.0) {
                return Err(ApdgError::DegenerateBoundaryFlux { node: l, velocity: vv });
            }
            let rh = (h * (lam * data.f_left[l] - el * fl_e * data.df_left[l]) + 2.0 * el * vv * r_first[l]) / den;
            let jh = (-vv * (r_first[l] - rh) / (0.5 * h) + fl_e * data.df_left[l]) / lam;
            Ok((rh, jh))
        };
        let right = |l: usize, vv: f64| -> Result<(f64, f64)> {
            let lam = lambda[l];
            let den = lam * h + 2.0 * er * vv;
            if !(den > 0.0) {
                return Err(ApdgError::DegenerateBoundaryFlux { node: l, velocity: vv });
            }
            let rh = (h * (lam * data.f_right[l] + er * fr_e * data.df_right[l]) + 2.0 * er * vv * r_last[l]) / den;
            let jh = (-vv * (rh - r_last[l]) / (0.5 * h) + fr_e * data.df_right[l]) / lam;
            Ok((rh, jh))
        };

        let mut out = BoundaryFluxes {
            r_left: vec![0.0; nv],
            r_right: vec![0.0; nv],
            j_left: vec![0.0; nv],
            j_right: vec![0.0; nv],
        };
        for l in 0..nv {
            if v[l] > 0.0 || data.mode == NegativeVelocityMode::Literal {
                let (a, b) = left(l, v[l])?;
                let (c, d) = right(l, v[l])?;
                out.r_left[l] = a;
                out.j_left[l] = b;
                out.r_right[l] = c;
                out.j_right[l] = d;
            }
        }
        if data.mode == NegativeVelocityMode::Mirror {
            for l in 0..nv {
                if v[l] < 0.0 {
                    let lm = self.grid.mirror(l);
                    out.r_left[l] = out.r_left[lm];
                    out.j_left[l] = -out.j_left[lm];
                    out.r_right[l] = out.r_right[lm];
                    out.j_right[l] = -out.j_right[lm];
                }
            }
        }
        Ok(Some(out))
    }

    /// Backward-Euler update `j* = alpha j + beta (-v d_x r* + E d_v r*)`
    /// with the `r*^+` flux.
    pub fn relaxation_step_j(&self, j: &ParityField, r_star: &ParityField, field: &FieldSample) -> Result<ParityField> {
        let nv = self.nv();
        let bf = self.inflow_boundary_fluxes(r_star, field)?;
        let wd = self.weak_derivative(
            r_star.data(),
            Side::Right,
            bf.as_ref().map(|b| b.r_left.as_slice()),
            bf.as_ref().map(|b| b.r_right.as_slice()),
        );
        let v = self.grid.nodes();
        let mut bracket = wd;
        for chunk in bracket.chunks_exact_mut(nv) {
            for (x, vv) in chunk.iter_mut().zip(v) {
                *x *= -vv;
            }
        }
        let mut b_vals = self.eval_quad(&bracket);
        self.add_field_term(r_star.data(), field, &mut b_vals, |_| 1.0);
        let j_vals = self.eval_quad(j.data());
        for (k, (b, jj)) in b_vals.iter_mut().zip(&j_vals).enumerate() {
            *b = self.alpha_q[k] * jj + self.beta_q[k] * *b;
        }
        let mut out = self.empty_field();
        self.project_quad(&b_vals, out.data_mut());
        Ok(out)
    }

    /// Right-hand sides of the transport step at the given stage.
    fn transport_rhs(&self, r: &ParityField, j: &ParityField, field: &FieldSample) -> Result<(Vec<f64>, Vec<f64>)> {
        let nv = self.nv();
        let v = self.grid.nodes();
        let bf = self.inflow_boundary_fluxes(r, field)?;
        // r_t = -v d_x j + E d_v j, flux j^-
        let mut rr = self.weak_derivative(
            j.data(),
            Side::Left,
            bf.as_ref().map(|b| b.j_left.as_slice()),
            bf.as_ref().map(|b| b.j_right.as_slice()),
        );
        for chunk in rr.chunks_exact_mut(nv) {
            for (x, vv) in chunk.iter_mut().zip(v) {
                *x *= -vv;
            }
        }
        if !field.zero {
            let mut vals = vec![0.0; self.n() * self.nq() * nv];
            self.add_field_term(j.data(), field, &mut vals, |_| 1.0);
            let mut extra = vec![0.0; rr.len()];
            self.project_quad(&vals, &mut extra);
            rr.iter_mut().zip(&extra).for_each(|(a, b)| *a += b);
        }
        // j_t = phi (-v d_x r + E d_v r), flux r^-
        let mut jr = self.weak_derivative(
            r.data(),
            Side::Left,
            bf.as_ref().map(|b| b.r_left.as_slice()),
            bf.as_ref().map(|b| b.r_right.as_slice()),
        );
        for chunk in jr.chunks_exact_mut(nv) {
            for (x, vv) in chunk.iter_mut().zip(v) {
                *x *= -vv;
            }
        }
        match self.phi_const {
            Some(phi) => {
                if phi != 1.0 {
                    jr.iter_mut().for_each(|x| *x *= phi);
                }
                if !field.zero {
                    let mut vals = vec![0.0; self.n() * self.nq() * nv];
                    self.add_field_term(r.data(), field, &mut vals, |_| phi);
                    let mut extra = vec![0.0; jr.len()];
                    self.project_quad(&vals, &mut extra);
                    jr.iter_mut().zip(&extra).for_each(|(a, b)| *a += b);
                }
            }
            None => {
                let mut vals = self.eval_quad(&jr);
                for (k, chunk) in vals.chunks_exact_mut(nv).enumerate() {
                    let phi = self.phi_q[k];
                    chunk.iter_mut().for_each(|x| *x *= phi);
                }
                self.add_field_term(r.data(), field, &mut vals, |k| self.phi_q[k]);
                self.project_quad(&vals, &mut jr);
            }
        }
        Ok((rr, jr))
    }

    /// One forward-Euler transport stage.
    pub fn transport_forward_euler(&self, r: &ParityField, j: &ParityField, field: &FieldSample) -> Result<(ParityField, ParityField)> {
        let (dr, dj) = self.transport_rhs(r, j, field)?;
        let mut rn = r.clone();
        let mut jn = j.clone();
        rn.data_mut().iter_mut().zip(&dr).for_each(|(a, b)| *a += self.dt * b);
        jn.data_mut().iter_mut().zip(&dj).for_each(|(a, b)| *a += self.dt * b);
        Ok((rn, jn))
    }

    /// Shu-Osher SSPRK3 built from [`Self::transport_forward_euler`].
    pub fn ssprk3_transport(&self, r: &ParityField, j: &ParityField, field: &FieldSample) -> Result<(ParityField, ParityField)> {
        let mut report = LimiterReport {
            min_after: f64::INFINITY,
            ..Default::default()
        };
        self.ssprk3_inner(r, j, field, &mut report)
    }

    fn ssprk3_inner(
        &self,
        r: &ParityField,
        j: &ParityField,
        field: &FieldSample,
        report: &mut LimiterReport,
    ) -> Result<(ParityField, ParityField)> {
        let stage_limit = self.params.limit_stages;
        let mut limit = |r: &mut ParityField, j: &mut ParityField| {
            if stage_limit {
                let rep = self.limit_fields(r, j);
                report.merge(&rep);
            }
        };
        let (mut r1, mut j1) = self.transport_forward_euler(r, j, field)?;
        limit(&mut r1, &mut j1);
        let (fr, fj) = self.transport_forward_euler(&r1, &j1, field)?;
        let mut r2 = ParityField::lincomb(0.75, r, 0.25, &fr);
        let mut j2 = ParityField::lincomb(0.75, j, 0.25, &fj);
        limit(&mut r2, &mut j2);
        let (fr, fj) = self.transport_forward_euler(&r2, &j2, field)?;
        let mut r3 = ParityField::lincomb(1.0 / 3.0, r, 2.0 / 3.0, &fr);
        let mut j3 = ParityField::lincomb(1.0 / 3.0, j, 2.0 / 3.0, &fj);
        limit(&mut r3, &mut j3);
        Ok((r3, j3))
    }

    /// Scaling limiter on `f = r + eps_bar j` per cell and velocity pair.
    pub fn positivity_limit(&self, state: &mut ParityState) -> LimiterReport {
        self.limit_fields(&mut state.r, &mut state.j)
    }

    fn limit_fields(&self, r: &mut ParityField, j: &mut ParityField) -> LimiterReport {
        let (n, nb, nv) = (self.n(), self.nb(), self.nv());
        let sampler = Sampler::new(&self.basis, self.mesh.h());
        let sh = self.mesh.h().sqrt();
        let mut report = LimiterReport {
            min_after: f64::INFINITY,
            ..Default::default()
        };
        let mut fa = vec![0.0; nb];
        let mut fb = vec![0.0; nb];
        for i in 0..n {
            let e = self.eps_bar[i];
            for l in 0..nv / 2 {
                let lm = self.grid.mirror(l);
                for m in 0..nb {
                    fa[m] = r.get(i, m, l) + e * j.get(i, m, l);
                    fb[m] = r.get(i, m, lm) + e * j.get(i, m, lm);
                }
                let avg_a = fa[0] / sh;
                let avg_b = fb[0] / sh;
                let ta = scaling_theta(avg_a, sampler.minimum(&fa), &mut report);
                let tb = scaling_theta(avg_b, sampler.minimum(&fb), &mut report);
                if ta < 1.0 || tb < 1.0 {
                    for m in 1..nb {
                        fa[m] *= ta;
                        fb[m] *= tb;
                    }
                    for m in 0..nb {
                        let rv = 0.5 * (fa[m] + fb[m]);
                        let jv = (fa[m] - fb[m]) / (2.0 * e);
                        r.set(i, m, l, rv);
                        r.set(i, m, lm, rv);
                        j.set(i, m, l, jv);
                        j.set(i, m, lm, -jv);
                    }
                    let new_a = (r.get(i, 0, l) + e * j.get(i, 0, l)) / sh;
                    let new_b = (r.get(i, 0, lm) + e * j.get(i, 0, lm)) / sh;
                    report.average_error = report.average_error.max((new_a - avg_a).abs()).max((new_b - avg_b).abs());
                    for m in 0..nb {
                        fa[m] = r.get(i, m, l) + e * j.get(i, m, l);
                        fb[m] = r.get(i, m, lm) + e * j.get(i, m, lm);
                    }
                }
                report.min_after = report.min_after.min(sampler.minimum(&fa)).min(sampler.minimum(&fb));
            }
        }
        report
    }

    /// Smallest sampled value of `f = r + eps_bar j` over all cells and nodes.
    pub fn min_f_sampled(&self, state: &ParityState) -> f64 {
        let (n, nb, nv) = (self.n(), self.nb(), self.nv());
        let sampler = Sampler::new(&self.basis, self.mesh.h());
        let mut f = vec![0.0; nb];
        let mut out = f64::INFINITY;
        for i in 0..n {
            let e = self.eps_bar[i];
            for l in 0..nv {
                for (m, slot) in f.iter_mut().enumerate() {
                    *slot = state.r.get(i, m, l) + e * state.j.get(i, m, l);
                }
                out = out.min(sampler.minimum(&f));
            }
        }
        out
    }

    pub fn density(&self, state: &ParityState) -> ScalarDgField {
        state.r.density(&self.grid)
    }

    /// `int rho dx`.
    pub fn mass(&self, state: &ParityState) -> f64 {
        integrate_x(&self.mesh, &self.density(state))
    }

    pub fn energy_norms(&self, state: &ParityState) -> EnergyNorms {
        let r2 = phase_norm_sq(&state.r, &self.grid, &self.kernel);
        let j2 = phase_norm_sq(&state.j, &self.grid, &self.kernel);
        let theorem_j = match self.params.epsilon.constant() {
            Some(e) => e * e * j2,
            None => {
                let eps = &self.params.epsilon;
                phase_norm_sq_weighted(&state.j, &self.mesh, &self.basis, &self.grid, &self.kernel, |x| eps.at(x).powi(2))
            }
        };
        EnergyNorms {
            theorem: r2 + theorem_j,
            example: r2 + self.eps_l2 * j2.sqrt(),
        }
    }

    /// Advances the state by one step.
    pub fn full_step(&self, state: &mut ParityState) -> Result<StepDiagnostics> {
        let field = self.field_sample(&state.r)?;
        self.step_with_field(state, &field)
    }

    /// Advances by one step with a precomputed field sample.
    pub fn step_with_field(&self, state: &mut ParityState, field: &FieldSample) -> Result<StepDiagnostics> {
        if !state.r.is_finite() || !state.j.is_finite() {
            return Err(ApdgError::NonFinite("state"));
        }
        let mut report = LimiterReport {
            min_after: f64::INFINITY,
            ..Default::default()
        };
        if self.params.limiter {
            let rep = self.positivity_limit(state);
            report.merge(&rep);
        }
        let r_star = self.relaxation_step_r(&state.r);
        let j_star = self.relaxation_step_j(&state.j, &r_star, field)?;
        let (r, j) = match self.params.integrator {
            TransportIntegrator::Ssprk3 => self.ssprk3_inner(&r_star, &j_star, field, &mut report)?,
            TransportIntegrator::ForwardEuler => self.transport_forward_euler(&r_star, &j_star, field)?,
        };
        if !r.is_finite() || !j.is_finite() {
            return Err(ApdgError::NonFinite("state after step"));
        }
        state.r = r;
        state.j = j;
        state.t += self.dt;
        state.step += 1;
        let energy = self.energy_norms(state);
        Ok(StepDiagnostics {
            step: state.step,
            t: state.t,
            mass: self.mass(state),
            theorem_energy: energy.theorem,
            example_energy: energy.example,
            limiter_activations: report.activations,
            negative_averages: report.negative_averages,
            min_f_sampled: report.min_after,
            limiter_average_error: report.average_error,
        })
    }

    /// `|||f - (int f dv) M|||`.
    pub fn distance_to_equilibrium(&self, state: &ParityState) -> f64 {
        let f = self.reconstruct_f(state);
        let rho = f.density(&self.grid);
        let m = self.grid.maxwellian();
        let mut diff = f;
        for i in 0..self.n() {
            for k in 0..self.nb() {
                let rk = rho.coeff(i, k);
                for (l, ml) in m.iter().enumerate() {
                    let idx = diff.index(i, k, l);
                    diff.data_mut()[idx] -= rk * ml;
                }
            }
        }
        phase_norm_sq(&diff, &self.grid, &self.kernel).sqrt()
    }

    /// Projects `E` for output.
    pub fn field_projection(&self, field: &FieldSample) -> ScalarDgField {
        if let Some(p) = &field.poisson {
            return p.e_field.clone();
        }
        match &self.params.field {
            FieldSpec::Prescribed(e) => project(&self.mesh, &self.basis, |x| e(x)),
            _ => ScalarDgField::zeros(self.n(), self.nb()),
        }
    }
}

fn split_parity(f: &[f64], r: &mut [f64], j: &mut [f64], nv: usize, eps: impl Fn(usize) -> f64) {
    for (k, ((fc, rc), jc)) in f
        .chunks_exact(nv)
        .zip(r.chunks_exact_mut(nv))
        .zip(j.chunks_exact_mut(nv))
        .enumerate()
    {
        let e = eps(k);
        for l in 0..nv {
            let lm = nv - 1 - l;
            rc[l] = 0.5 * (fc[l] + fc[lm]);
            jc[l] = (fc[l] - fc[lm]) / (2.0 * e);
        }
    }
}

fn scaling_theta(avg: f64, fmin: f64, report: &mut LimiterReport) -> f64 {
    if avg < 0.0 {
        report.negative_averages += 1;
        report.activations += 1;
        return 0.0;
    }
    if fmin >= 0.0 || avg <= fmin {
        return 1.0;
    }
    report.activations += 1;
    (avg / (avg - fmin)).min(1.0)
}

/// Minimum of a cell polynomial over the Gauss-Lobatto sample set, plus
/// the exact vertex for quadratics.
struct Sampler {
    degree: usize,
    lobatto: Vec<Vec<f64>>,
    inv_sqrt_h: f64,
}

impl Sampler {
    fn new(basis: &DgBasis, h: f64) -> Self {
        let nb = basis.n_basis();
        let lobatto = (0..basis.lobatto_points().len())
            .map(|s| (0..nb).map(|m| basis.value_at_lobatto(m, s)).collect())
            .collect();
        Self {
            degree: basis.degree(),
            lobatto,
            inv_sqrt_h: 1.0 / h.sqrt(),
        }
    }

    fn minimum(&self, c: &[f64]) -> f64 {
        let mut out = f64::INFINITY;
        for row in &self.lobatto {
            let v: f64 = row.iter().zip(c).map(|(a, b)| a * b).sum();
            out = out.min(v);
        }
        if self.degree == 2 {
            // c1 sqrt3 xi + c2 sqrt5 (3 xi^2 - 1) / 2
            let a = 1.5 * 5f64.sqrt() * c[2];
            let b = 3f64.sqrt() * c[1];
            if a > 0.0 {
                let xi = -b / (2.0 * a);
                if xi.abs() < 1.0 {
                    let v = c[0] + b * xi + 0.5 * 5f64.sqrt() * c[2] * (3.0 * xi * xi - 1.0);
                    out = out.min(v);
                }
            }
        }
        out * self.inv_sqrt_h
    }
}
