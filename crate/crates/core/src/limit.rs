//! Reference solvers for the diffusive limit: the LDG diffusion step the
//! kinetic scheme collapses to, a Crank-Nicolson drift-diffusion solver,
//! and the closed-form heat-equation solution used by the accuracy study.

use std::f64::consts::PI;
use std::io::Write;

use crate::dg::{apply_l, DgBasis, LVariant, Mesh1D, ScalarDgField};
use crate::error::{ApdgError, Result};
use crate::field::{field_from_potential, solve_poisson_points, FieldSpec};
use crate::tridiag::{solve_cyclic_tridiagonal, solve_tridiagonal};

/// `rho(x, t) = exp(-4 pi^2 t) cos(2 pi x) + 1`.
pub fn exact_solution_example1(x: f64, t: f64) -> f64 {
    (-4.0 * PI * PI * t).exp() * (2.0 * PI * x).cos() + 1.0
}

/// One forward-Euler LDG step for `rho_t = D rho_xx` with periodic closure:
/// `g = L+(rho)`, `rho_new = rho + dt D L-(g)`.
pub fn ldg_limit_step(mesh: &Mesh1D, basis: &DgBasis, rho: &ScalarDgField, d: f64, dt: f64) -> ScalarDgField {
    let g = apply_l(mesh, basis, rho, LVariant::Plus);
    let lap = apply_l(mesh, basis, &g, LVariant::Minus);
    let mut out = rho.clone();
    out.axpy(dt * d, &lap);
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DdBoundary {
    /// Unknowns at cell centers, cyclic closure.
    Periodic,
    /// Unknowns at the interface points, both ends pinned.
    Dirichlet { left: f64, right: f64 },
}

/// Finite-difference solution of the drift-diffusion equation.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftDiffusionState {
    pub x: Vec<f64>,
    pub rho: Vec<f64>,
    pub t: f64,
    /// Electric field at the points, when one was used.
    pub e: Vec<f64>,
    /// Potential at the points for the Poisson-coupled case.
    pub phi: Option<Vec<f64>>,
    /// Cell-centered periodic data rather than interface-point data.
    pub periodic: bool,
}

impl DriftDiffusionState {
    /// Piecewise-linear interpolation of `rho`.
    pub fn eval(&self, x: f64) -> f64 {
        interpolate(&self.x, &self.rho, x)
    }

    /// `int rho dx` by the trapezoid rule on the points (midpoint rule for
    /// cell-centered data).
    pub fn mass(&self, h: f64) -> f64 {
        if self.periodic {
            self.rho.iter().sum::<f64>() * h
        } else {
            let n = self.rho.len();
            h * (self.rho.iter().sum::<f64>() - 0.5 * (self.rho[0] + self.rho[n - 1]))
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "rho", "e", "phi"])?;
        for p in 0..self.x.len() {
            let phi = self.phi.as_ref().map(|v| format!("{:.12e}", v[p])).unwrap_or_default();
            w.write_record(&[
                format!("{:.12e}", self.x[p]),
                format!("{:.12e}", self.rho[p]),
                format!("{:.12e}", self.e.get(p).copied().unwrap_or(0.0)),
                phi,
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    let k = xs.partition_point(|&p| p <= x).clamp(1, n - 1);
    let t = (x - xs[k - 1]) / (xs[k] - xs[k - 1]);
    (1.0 - t) * ys[k - 1] + t * ys[k]
}

/// Crank-Nicolson solution of `rho_t = d_x(D (d_x rho + E rho))` up to `t_end`.
///
/// The drift flux at each midpoint uses the average of the two neighbouring
/// values, so the update is conservative. For the Poisson field the potential
/// is re-solved from the current density before each step and the field is
/// frozen during the step.
pub fn drift_diffusion_solve(
    rho0: impl Fn(f64) -> f64,
    mesh: &Mesh1D,
    field: &FieldSpec,
    boundary: DdBoundary,
    d: f64,
    t_end: f64,
    dt: f64,
) -> Result<DriftDiffusionState> {
    if !(dt > 0.0) || !(t_end >= 0.0) {
        return Err(ApdgError::InvalidParameter {
            name: "dt",
            reason: format!("dt = {dt} and t_end = {t_end} must be positive"),
        });
    }
    let n = mesh.n_cells();
    let h = mesh.h();
    let periodic = matches!(boundary, DdBoundary::Periodic);
    if periodic && matches!(field, FieldSpec::Poisson(_)) {
        return Err(ApdgError::InvalidParameter {
            name: "boundary",
            reason: "the Poisson field needs Dirichlet potential data".into(),
        });
    }
    if periodic && n < 3 {
        return Err(ApdgError::InvalidParameter {
            name: "n_cells",
            reason: "periodic drift-diffusion needs at least three cells".into(),
        });
    }
    let x: Vec<f64> = if periodic {
        (0..n).map(|i| mesh.center(i)).collect()
    } else {
        (0..=n).map(|p| mesh.interface(p)).collect()
    };
    let np = x.len();
    let mut rho: Vec<f64> = x.iter().map(|&xx| rho0(xx)).collect();
    if let DdBoundary::Dirichlet { left, right } = boundary {
        rho[0] = left;
        rho[np - 1] = right;
    }
    // Number of midpoints carrying a flux.
    let n_mid = if periodic { np } else { np - 1 };
    let mid = |k: usize| if periodic { x[k] + 0.5 * h } else { 0.5 * (x[k] + x[k + 1]) };

    let steps = (t_end / dt).ceil() as usize;
    let dt = if steps > 0 { t_end / steps as f64 } else { dt };
    let mut e_mid = vec![0.0; n_mid];
    let mut phi_out = None;
    let refresh = |rho: &[f64], e_mid: &mut Vec<f64>| -> Result<Option<Vec<f64>>> {
        match field {
            FieldSpec::Zero => Ok(None),
            FieldSpec::Prescribed(e) => {
                for (k, slot) in e_mid.iter_mut().enumerate() {
                    *slot = e(mid(k));
                }
                Ok(None)
            }
            FieldSpec::Poisson(config) => {
                let (phi, _) = solve_poisson_points(rho, mesh, config)?;
                for (k, slot) in e_mid.iter_mut().enumerate() {
                    *slot = -(phi[k + 1] - phi[k]) / h;
                }
                Ok(Some(phi))
            }
        }
    };

    let mut t = 0.0;
    for _ in 0..steps {
        phi_out = refresh(&rho, &mut e_mid)?;
        // Flux at midpoint k between point k and k+1 (cyclic):
        // F_k = D [(rho_{k+1} - rho_k)/h + E_k (rho_k + rho_{k+1})/2]
        // (A rho)_p = (F_p - F_{p-1}) / h
        let c = d / h;
        let mut lower = vec![0.0; np];
        let mut diag = vec![0.0; np];
        let mut upper = vec![0.0; np];
        for p in 0..np {
            let right_k = if periodic || p < np - 1 { Some(p) } else { None };
            let left_k = if periodic {
                Some((p + np - 1) % np)
            } else if p > 0 {
                Some(p - 1)
            } else {
                None
            };
            if let Some(k) = right_k {
                // +F_k / h: coefficients on rho_p and rho_{p+1}
                diag[p] += c * (-1.0 / h + 0.5 * e_mid[k]);
                upper[p] += c * (1.0 / h + 0.5 * e_mid[k]);
            }
            if let Some(k) = left_k {
                // -F_{k} / h with k = p-1: rho_{p-1} and rho_p
                lower[p] -= c * (-1.0 / h + 0.5 * e_mid[k]);
                diag[p] -= c * (1.0 / h + 0.5 * e_mid[k]);
            }
        }
        let apply = |v: &[f64], p: usize| -> f64 {
            let prev = if p == 0 { v[np - 1] } else { v[p - 1] };
            let next = if p == np - 1 { v[0] } else { v[p + 1] };
            lower[p] * prev + diag[p] * v[p] + upper[p] * next
        };
        let half = 0.5 * dt;
        if periodic {
            let rhs: Vec<f64> = (0..np).map(|p| rho[p] + half * apply(&rho, p)).collect();
            let lo: Vec<f64> = lower.iter().map(|a| -half * a).collect();
            let di: Vec<f64> = diag.iter().map(|a| 1.0 - half * a).collect();
            let up: Vec<f64> = upper.iter().map(|a| -half * a).collect();
            rho = solve_cyclic_tridiagonal(&lo, &di, &up, &rhs);
        } else {
            let m = np - 2;
            if m > 0 {
                let mut rhs: Vec<f64> = (1..np - 1).map(|p| rho[p] + half * apply(&rho, p)).collect();
                let lo: Vec<f64> = (1..np - 1).map(|p| -half * lower[p]).collect();
                let di: Vec<f64> = (1..np - 1).map(|p| 1.0 - half * diag[p]).collect();
                let up: Vec<f64> = (1..np - 1).map(|p| -half * upper[p]).collect();
                rhs[0] -= lo[0] * rho[0];
                rhs[m - 1] -= up[m - 1] * rho[np - 1];
                let inner = solve_tridiagonal(&lo, &di, &up, &rhs);
                rho[1..np - 1].copy_from_slice(&inner);
            }
        }
        if rho.iter().any(|v| !v.is_finite()) {
            return Err(ApdgError::NonFinite("drift-diffusion density"));
        }
        t += dt;
    }

    // Report the field at the points for output.
    phi_out = match field {
        FieldSpec::Poisson(_) => refresh(&rho, &mut e_mid)?,
        _ => phi_out,
    };
    let e: Vec<f64> = match (field, &phi_out) {
        (FieldSpec::Poisson(_), Some(phi)) => field_from_potential(phi, h),
        (FieldSpec::Prescribed(f), _) => x.iter().map(|&xx| f(xx)).collect(),
        _ => vec![0.0; np],
    };
    Ok(DriftDiffusionState {
        x,
        rho,
        t,
        e,
        phi: phi_out,
        periodic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dg::{inner, project};
    use crate::field::{doping_profile, PoissonConfig};
    use std::sync::Arc;

    #[test]
    fn exact_solution_values() {
        for x in [0.0, 0.3, 0.77] {
            assert!((exact_solution_example1(x, 0.0) - ((2.0 * PI * x).cos() + 1.0)).abs() < 1e-15);
        }
        for t in [0.0, 0.01, 1.0] {
            assert!((exact_solution_example1(0.25, t) - 1.0).abs() < 1e-15);
        }
        let expect = 1.0 + (-0.12 * PI * PI).exp();
        assert!((exact_solution_example1(0.0, 0.03) - expect).abs() < 1e-15);
    }

    #[test]
    fn ldg_step_examples() {
        let mesh = Mesh1D::unit(32).unwrap();
        let basis = DgBasis::new(2);
        let one = project(&mesh, &basis, |_| 1.0);
        let out = ldg_limit_step(&mesh, &basis, &one, 1.0, 1e-4);
        assert!(out.coeffs().iter().zip(one.coeffs()).all(|(a, b)| (a - b).abs() < 1e-13));

        let dt = 1e-5;
        let c = project(&mesh, &basis, |x| (2.0 * PI * x).cos());
        let rho = project(&mesh, &basis, |x| (2.0 * PI * x).cos() + 1.0);
        let out = ldg_limit_step(&mesh, &basis, &rho, 1.0, dt);
        let mut pert = out.clone();
        pert.axpy(-1.0, &one);
        let factor = inner(&pert, &c) / inner(&c, &c);
        let expect = 1.0 - 4.0 * PI * PI * dt;
        assert!((factor - expect).abs() < 1e-6, "factor {factor} expect {expect}");
    }

    #[test]
    fn heat_equation_matches_exact_solution() {
        let err = |n: usize| {
            let mesh = Mesh1D::unit(n).unwrap();
            let h = mesh.h();
            let s = drift_diffusion_solve(|x| exact_solution_example1(x, 0.0), &mesh, &FieldSpec::Zero, DdBoundary::Periodic, 1.0, 0.03, h / 8.0).unwrap();
            s.x.iter()
                .zip(&s.rho)
                .map(|(&x, &r)| (r - exact_solution_example1(x, 0.03)).abs())
                .fold(0.0f64, f64::max)
        };
        let order = (err(32) / err(64)).log2();
        assert!((order - 2.0).abs() < 0.15, "order {order}");
        assert!(err(64) < 1e-3);
    }

    #[test]
    fn constant_state_is_stationary() {
        let mesh = Mesh1D::unit(10).unwrap();
        let s = drift_diffusion_solve(|_| 1.0, &mesh, &FieldSpec::Zero, DdBoundary::Periodic, 1.0, 0.1, 1e-3).unwrap();
        assert!(s.rho.iter().all(|r| (r - 1.0).abs() < 1e-14));
        let s = drift_diffusion_solve(|_| 1.0, &mesh, &FieldSpec::Zero, DdBoundary::Dirichlet { left: 1.0, right: 1.0 }, 1.0, 0.1, 1e-3).unwrap();
        assert!(s.rho.iter().all(|r| (r - 1.0).abs() < 1e-14));
    }

    #[test]
    fn constant_field_conserves_mass() {
        let mesh = Mesh1D::unit(40).unwrap();
        let field = FieldSpec::Prescribed(Arc::new(|_| 3.0));
        let rho0 = |x: f64| 1.0 + 0.5 * (2.0 * PI * x).sin();
        let s0 = drift_diffusion_solve(rho0, &mesh, &FieldSpec::Zero, DdBoundary::Periodic, 1.0, 0.0, 1e-3).unwrap();
        let s = drift_diffusion_solve(rho0, &mesh, &field, DdBoundary::Periodic, 1.0, 0.2, 1e-3).unwrap();
        let m0 = s0.mass(mesh.h());
        assert!((s.mass(mesh.h()) - m0).abs() <= 1e-12 * m0);
        // the profile drifts, so it is no longer the initial one
        assert!(s.rho.iter().zip(&s0.rho).any(|(a, b)| (a - b).abs() > 1e-3));
    }

    #[test]
    fn drift_balances_diffusion_in_equilibrium() {
        // rho = exp(-E x) is steady for rho_t = (rho_x + E rho)_x
        let e0 = 2.0;
        let mesh = Mesh1D::unit(200).unwrap();
        let field = FieldSpec::Prescribed(Arc::new(move |_| e0));
        let s = drift_diffusion_solve(
            |x| (-e0 * x).exp(),
            &mesh,
            &field,
            DdBoundary::Dirichlet {
                left: 1.0,
                right: (-e0).exp(),
            },
            1.0,
            0.05,
            1e-4,
        )
        .unwrap();
        for (&x, &r) in s.x.iter().zip(&s.rho) {
            assert!((r - (-e0 * x).exp()).abs() < 1e-4);
        }
    }

    #[test]
    fn poisson_coupled_run_is_finite() {
        let mesh = Mesh1D::unit(40).unwrap();
        let field = FieldSpec::Poisson(PoissonConfig::device());
        let s = drift_diffusion_solve(doping_profile, &mesh, &field, DdBoundary::Dirichlet { left: 1.0, right: 1.0 }, 1.0, 0.01, 1e-5).unwrap();
        assert!(s.rho.iter().all(|r| r.is_finite()));
        let phi = s.phi.as_ref().unwrap();
        assert_eq!(phi[0], 0.0);
        assert_eq!(phi[40], 5.0);
        assert!((s.eval(0.0) - 1.0).abs() < 1e-14);
        let periodic = drift_diffusion_solve(doping_profile, &mesh, &field, DdBoundary::Periodic, 1.0, 0.01, 1e-5);
        assert!(periodic.is_err());
    }
}
