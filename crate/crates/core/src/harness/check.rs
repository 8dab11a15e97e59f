//! Invariant suite behind the `check` subcommand.
//!
//! Each check draws its random data from a ChaCha generator seeded with the
//! user seed, so reruns are reproducible.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::output::{fmt_sci, write_rows};
use crate::dg::{l_form, phase_norm, DgBasis, LVariant, Mesh1D, ParityField, ScalarDgField};
use crate::error::Result;
use crate::hermite::{CollisionKernel, VelocityGrid};
use crate::limit::ldg_limit_step;
use crate::scheme::{ApScheme, Epsilon, ParityState, SchemeParams, TimeStep, TransportIntegrator};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    /// Worst observed violation measure.
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CheckOutcome {
    fn new(name: &'static str, value: f64, tolerance: f64) -> Self {
        Self {
            name,
            value,
            tolerance,
            passed: value <= tolerance,
        }
    }
}

const N_MODES: usize = 15;

fn scheme(n_cells: usize, degree: usize, eps: f64, dt: TimeStep, integrator: TransportIntegrator) -> Result<ApScheme> {
    let grid = VelocityGrid::new(N_MODES)?;
    let kernel = CollisionKernel::constant(&grid, 1.0, 2.0)?;
    let mut params = SchemeParams::new(Epsilon::Constant(eps), dt);
    params.integrator = integrator;
    ApScheme::new(Mesh1D::unit(n_cells)?, degree, grid, kernel, params)
}

/// Random parity field, even in velocity when `even` is set.
fn random_field(rng: &mut ChaCha8Rng, n: usize, nb: usize, nv: usize, even: bool) -> ParityField {
    let mut f = ParityField::zeros(n, nb, nv);
    for i in 0..n {
        for m in 0..nb {
            for l in 0..nv / 2 {
                let a = rng.random_range(-1.0..1.0) + if m == 0 { 2.0 } else { 0.0 };
                let b = if even { a } else { rng.random_range(-1.0..1.0) };
                f.set(i, m, l, a);
                f.set(i, m, nv - 1 - l, b);
            }
        }
    }
    f
}

fn random_scalar(rng: &mut ChaCha8Rng, n: usize, nb: usize) -> ScalarDgField {
    let coeffs = (0..n * nb).map(|_| rng.random_range(-1.0..1.0)).collect();
    ScalarDgField::from_coeffs(n, nb, coeffs).expect("sizes match")
}

/// Runs every invariant check with the given seed.
pub fn run_check_suite(seed: u64) -> Result<Vec<CheckOutcome>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();

    // Density is unchanged by the relaxation update of r.
    let mut worst = 0.0f64;
    for eps in [1.0, 0.1, 1e-3, 1e-8] {
        let s = scheme(8, 2, eps, TimeStep::Fixed(1e-4), TransportIntegrator::Ssprk3)?;
        let r = random_field(&mut rng, 8, 3, s.grid().len(), true);
        let before = r.density(s.grid());
        let after = s.relaxation_step_r(&r).density(s.grid());
        for (a, b) in before.coeffs().iter().zip(after.coeffs()) {
            worst = worst.max((a - b).abs());
        }
    }
    out.push(CheckOutcome::new("relaxation_density", worst, 1e-12));

    // Global mass over 1000 periodic steps.
    let s = scheme(8, 2, 0.5, TimeStep::default(), TransportIntegrator::Ssprk3)?;
    let nodes = s.grid().nodes().to_vec();
    let mut state = s.initial_state(|x, l| {
        crate::hermite::maxwellian(nodes[l]) * (1.0 + 0.5 * (2.0 * std::f64::consts::PI * x).sin()) * (1.0 + 0.1 * nodes[l])
    })?;
    let m0 = s.mass(&state);
    let mut drift = 0.0f64;
    for _ in 0..1000 {
        let d = s.full_step(&mut state)?;
        drift = drift.max((d.mass - m0).abs() / m0.abs());
    }
    out.push(CheckOutcome::new("mass_conservation", drift, 1e-12));

    // Discrete collision integral vanishes.
    let grid = VelocityGrid::new(N_MODES)?;
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let sigma: Vec<f64> = (0..grid.len() * grid.len()).map(|_| rng.random_range(0.5..2.0)).collect();
        let kernel = CollisionKernel::from_matrix(&grid, symmetric(&sigma, grid.len()), 4.0)?;
        let f: Vec<f64> = grid.maxwellian().iter().map(|m| m * rng.random_range(0.0..2.0)).collect();
        let q = kernel.collision_apply(&f)?;
        let total: f64 = q.iter().zip(grid.mass_weights()).map(|(a, w)| a * w).sum();
        worst = worst.max(total.abs());
    }
    out.push(CheckOutcome::new("collision_integral", worst, 1e-11));

    // L+(psi, u) + L-(u, psi) = 0 on periodic meshes.
    let mut worst = 0.0f64;
    for degree in 0..=3 {
        let mesh = Mesh1D::unit(7)?;
        let basis = DgBasis::new(degree);
        let psi = random_scalar(&mut rng, 7, degree + 1);
        let u = random_scalar(&mut rng, 7, degree + 1);
        let s = l_form(&mesh, &basis, &psi, &u, LVariant::Plus) + l_form(&mesh, &basis, &u, &psi, LVariant::Minus);
        worst = worst.max(s.abs());
    }
    out.push(CheckOutcome::new("skew_symmetry", worst, 1e-11));

    // |||r*||| <= |||r||| for random states.
    let mut worst = f64::NEG_INFINITY;
    for k in 0..100 {
        let eps = [1.0, 0.1, 1e-2, 1e-5][k % 4];
        let s = scheme(6, 2, eps, TimeStep::Fixed(1e-3), TransportIntegrator::Ssprk3)?;
        let r = random_field(&mut rng, 6, 3, s.grid().len(), true);
        let before = phase_norm(&r, s.grid(), s.kernel());
        let after = phase_norm(&s.relaxation_step_r(&r), s.grid(), s.kernel());
        worst = worst.max((after - before) / before);
    }
    out.push(CheckOutcome::new("relaxation_contraction", worst.max(0.0), 1e-14));

    // Limiter restores non-negative samples and keeps cell averages.
    let mut min_after = f64::INFINITY;
    let mut avg_error = 0.0f64;
    for eps in [0.5, 1e-3] {
        for degree in [1, 2, 3] {
            let s = scheme(10, degree, eps, TimeStep::Fixed(1e-4), TransportIntegrator::Ssprk3)?;
            let nv = s.grid().len();
            let m = s.grid().maxwellian().to_vec();
            let mut f = ParityField::zeros(10, degree + 1, nv);
            for i in 0..10 {
                for l in 0..nv {
                    f.set(i, 0, l, m[l] * rng.random_range(0.05..1.0));
                    for k in 1..=degree {
                        f.set(i, k, l, m[l] * rng.random_range(-1.5..1.5));
                    }
                }
            }
            let mut state: ParityState = s.even_odd_decompose(&f)?;
            let report = s.positivity_limit(&mut state);
            min_after = min_after.min(s.min_f_sampled(&state));
            avg_error = avg_error.max(report.average_error);
        }
    }
    out.push(CheckOutcome::new("limiter_positivity", (-min_after).max(0.0), 1e-13));
    out.push(CheckOutcome::new("limiter_average", avg_error, 1e-14));

    // Density update equals the LDG diffusion step as eps -> 0.
    let s = scheme(16, 2, 1e-8, TimeStep::Fixed(1e-5), TransportIntegrator::ForwardEuler)?;
    let nodes = s.grid().nodes().to_vec();
    let mut state = s.initial_state(|x, l| crate::hermite::maxwellian(nodes[l]) * (1.0 + (2.0 * std::f64::consts::PI * x).cos()))?;
    let d = s.kernel().diffusion_constant(s.grid());
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let rho = s.density(&state);
        let expect = ldg_limit_step(s.mesh(), s.basis(), &rho, d, s.dt());
        s.full_step(&mut state)?;
        let got = s.density(&state);
        for (a, b) in got.coeffs().iter().zip(expect.coeffs()) {
            worst = worst.max((a - b).abs());
        }
    }
    out.push(CheckOutcome::new("ap_limit_step", worst, 1e-10));

    Ok(out)
}

fn symmetric(a: &[f64], n: usize) -> Vec<f64> {
    let mut s = vec![0.0; n * n];
    for i in 0..n {
        for l in 0..n {
            s[i * n + l] = 0.5 * (a[i * n + l] + a[l * n + i]);
        }
    }
    s
}

/// Writes `name,value,tolerance,passed` rows.
pub fn write_check_csv(dir: &Path, outcomes: &[CheckOutcome]) -> Result<PathBuf> {
    let path = dir.join("check_invariants.csv");
    let rows = outcomes.iter().map(|o| {
        vec![o.name.to_string(), fmt_sci(o.value), fmt_sci(o.tolerance), o.passed.to_string()]
    });
    write_rows(&path, &["check", "value", "tolerance", "passed"], rows)?;
    Ok(path)
}
