//! Building schemes from a configuration and stepping them to a final time.

use std::f64::consts::PI;
use std::sync::Arc;

use super::config::{BoundarySpec, DtSpec, EpsilonSpec, ExperimentConfig, FieldKind, InitialKind};
use crate::dg::Mesh1D;
use crate::error::Result;
use crate::field::{prescribed_field_example2, FieldSpec, PoissonConfig};
use crate::hermite::{CollisionKernel, VelocityGrid};
use crate::scheme::{ApScheme, Boundary, Epsilon, InflowData, ParityState, SchemeParams, StepDiagnostics, TimeStep};

/// Mean velocity of the double Maxwellian initial data.
const U0: f64 = 0.2;

impl EpsilonSpec {
    pub fn to_epsilon(&self) -> Epsilon {
        match self {
            EpsilonSpec::Constant(e) => Epsilon::Constant(*e),
            EpsilonSpec::MixedRegime => Epsilon::mixed_regime(),
        }
    }
}

impl ExperimentConfig {
    pub fn field_spec(&self) -> FieldSpec {
        match self.field {
            FieldKind::Zero => FieldSpec::Zero,
            FieldKind::Bump => FieldSpec::Prescribed(Arc::new(prescribed_field_example2)),
            FieldKind::Poisson => FieldSpec::Poisson(PoissonConfig::device()),
        }
    }

    pub fn mesh(&self, n_cells: usize) -> Result<Mesh1D> {
        Mesh1D::new(self.x_left, self.x_right, n_cells)
    }

    pub fn velocity_grid(&self) -> Result<VelocityGrid> {
        VelocityGrid::new(self.n_modes)
    }

    /// Initial distribution `f(x, v)`.
    pub fn initial_value(&self, x: f64, v: f64) -> f64 {
        let m = crate::hermite::maxwellian(v);
        match self.initial {
            InitialKind::CosinePerturbation => m * (1.0 + self.amplitude * (2.0 * PI * x).cos()),
            InitialKind::Maxwellian => m,
            InitialKind::DoubleMaxwellian => {
                let t0 = (5.0 - 2.0 * (2.0 * PI * x).cos()) / 20.0;
                let rho0 = (2.0 - (2.0 * PI * x).sin()) / 2.0;
                0.5 * rho0 * ((-(v - U0).powi(2) / t0).exp() + (-(v + U0).powi(2) / t0).exp())
            }
        }
    }

    /// Discrete density `sum_l w_l e^(v_l^2/2) f(x, v_l)` of the initial data.
    pub fn initial_density(&self, grid: &VelocityGrid, x: f64) -> f64 {
        grid.nodes()
            .iter()
            .zip(grid.mass_weights())
            .map(|(&v, w)| w * self.initial_value(x, v))
            .sum()
    }

    pub fn scheme(&self, n_cells: usize, epsilon: &EpsilonSpec) -> Result<ApScheme> {
        let mesh = self.mesh(n_cells)?;
        let grid = self.velocity_grid()?;
        let kernel = CollisionKernel::constant(&grid, self.sigma, self.mu)?;
        let time_step = match self.dt {
            DtSpec::Fixed(dt) => TimeStep::Fixed(dt),
            DtSpec::Cfl { parabolic, hyperbolic } => TimeStep::Cfl { parabolic, hyperbolic },
        };
        let mut params = SchemeParams::new(epsilon.to_epsilon(), time_step);
        params.boundary = match self.boundary {
            BoundarySpec::Periodic => Boundary::Periodic,
            BoundarySpec::InflowMaxwellian => Boundary::Inflow(InflowData::maxwellian(&grid, self.negative_velocity)),
        };
        params.field = self.field_spec();
        params.limiter = self.limiter;
        params.limit_stages = self.limit_stages;
        params.integrator = self.integrator;
        ApScheme::new(mesh, self.degree, grid, kernel, params)
    }

    pub fn initial_state(&self, scheme: &ApScheme) -> Result<ParityState> {
        let nodes = scheme.grid().nodes().to_vec();
        scheme.initial_state(|x, l| self.initial_value(x, nodes[l]))
    }
}

/// Number of steps of size `dt` that reach `t_end`: the nearest integer
/// when `t_end / dt` is one up to rounding, otherwise the next one up.
pub fn step_count(t_end: f64, dt: f64) -> usize {
    let ratio = t_end / dt;
    let nearest = ratio.round();
    if (ratio - nearest).abs() <= 1e-9 * ratio.max(1.0) {
        nearest as usize
    } else {
        ratio.ceil() as usize
    }
}

/// Advances `state` to `t_end`, calling `observe` after every step.
pub fn advance(
    scheme: &ApScheme,
    state: &mut ParityState,
    t_end: f64,
    mut observe: impl FnMut(&ParityState, &StepDiagnostics) -> Result<()>,
) -> Result<()> {
    let steps = step_count(t_end, scheme.dt());
    for _ in 0..steps {
        let diag = scheme.full_step(state)?;
        observe(state, &diag)?;
    }
    Ok(())
}
