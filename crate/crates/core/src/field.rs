//! Electric field providers: zero, the prescribed bump field, and the
//! self-consistent Poisson field with Dirichlet potential data.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use crate::dg::{project, DgBasis, Mesh1D, ScalarDgField, Side};
use crate::error::{ApdgError, Result};
use crate::tridiag::solve_tridiagonal;

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Bump-shaped field `E(x) = -2c (1/4 - x) exp(-c (1/4 - x)^2)`, `c = 50 e`.
pub fn prescribed_field_example2(x: f64) -> f64 {
    let c = 50.0 * std::f64::consts::E;
    let d = 0.25 - x;
    -2.0 * c * d * (-c * d * d).exp()
}

/// n+ / n / n+ doping profile: 1 in the contacts, 0.001 in the channel
/// `0.3 < x < 0.7`, with transition width `s = 0.02`.
pub fn doping_profile(x: f64) -> f64 {
    let s = 0.02;
    let m = (1.0 - 0.001) / 2.0;
    1.0 - m * (((x - 0.3) / s).tanh() - ((x - 0.7) / s).tanh())
}

#[derive(Clone)]
pub struct PoissonConfig {
    /// Scaled Debye length.
    pub beta: f64,
    pub doping: ScalarFn,
    pub phi_left: f64,
    pub phi_right: f64,
}

impl fmt::Debug for PoissonConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PoissonConfig")
            .field("beta", &self.beta)
            .field("phi_left", &self.phi_left)
            .field("phi_right", &self.phi_right)
            .finish_non_exhaustive()
    }
}

impl PoissonConfig {
    pub fn new(beta: f64, doping: ScalarFn, phi_left: f64, phi_right: f64) -> Result<Self> {
        if !(beta > 0.0) {
            return Err(ApdgError::InvalidParameter {
                name: "beta",
                reason: format!("must be positive, got {beta}"),
            });
        }
        Ok(Self {
            beta,
            doping,
            phi_left,
            phi_right,
        })
    }

    /// `beta = 0.002`, the channel doping profile, `Phi(0) = 0`, `Phi(1) = 5`.
    pub fn device() -> Self {
        Self {
            beta: 0.002,
            doping: Arc::new(doping_profile),
            phi_left: 0.0,
            phi_right: 5.0,
        }
    }
}

/// Source of the electric field used by the kinetic scheme.
#[derive(Clone, Default)]
pub enum FieldSpec {
    #[default]
    Zero,
    Prescribed(ScalarFn),
    Poisson(PoissonConfig),
}

impl fmt::Debug for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldSpec::Zero => write!(f, "Zero"),
            FieldSpec::Prescribed(_) => write!(f, "Prescribed(..)"),
            FieldSpec::Poisson(c) => write!(f, "Poisson({c:?})"),
        }
    }
}

/// Solution of the discrete Poisson problem.
#[derive(Debug, Clone)]
pub struct FieldState {
    /// Interface coordinates `x_p`, `p = 0..=N`.
    pub x: Vec<f64>,
    pub phi: Vec<f64>,
    /// `E = -d_x Phi` at the interface points.
    pub e_points: Vec<f64>,
    /// Piecewise-linear interpolant of `e_points` projected onto `V_h^k`.
    pub e_field: ScalarDgField,
    /// Max-norm residual of the finite-difference system.
    pub residual: f64,
}

impl FieldState {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "phi", "e"])?;
        for p in 0..self.x.len() {
            w.write_record(&[
                format!("{:.12e}", self.x[p]),
                format!("{:.12e}", self.phi[p]),
                format!("{:.12e}", self.e_points[p]),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Solves `beta (Phi_{p-1} - 2 Phi_p + Phi_{p+1}) / h^2 = rho_p - c(x_p)` on
/// the points `x_p = x_left + p h` with both ends pinned. `rho_points` has
/// one entry per point; the end values are unused.
/// Returns the potential and the max-norm residual.
pub fn solve_poisson_points(rho_points: &[f64], mesh: &Mesh1D, config: &PoissonConfig) -> Result<(Vec<f64>, f64)> {
    let n = mesh.n_cells();
    crate::error::check_len(n + 1, rho_points.len())?;
    if rho_points.iter().any(|x| !x.is_finite()) {
        return Err(ApdgError::NonFinite("poisson source"));
    }
    let h2 = mesh.h() * mesh.h();
    let mut phi = vec![0.0; n + 1];
    phi[0] = config.phi_left;
    phi[n] = config.phi_right;
    if n >= 2 {
        let m = n - 1;
        let lower = vec![1.0; m];
        let diag = vec![-2.0; m];
        let upper = vec![1.0; m];
        let mut rhs: Vec<f64> = (1..n)
            .map(|p| h2 / config.beta * (rho_points[p] - (config.doping)(mesh.interface(p))))
            .collect();
        rhs[0] -= config.phi_left;
        rhs[m - 1] -= config.phi_right;
        let interior = solve_tridiagonal(&lower, &diag, &upper, &rhs);
        phi[1..n].copy_from_slice(&interior);
    }
    let mut residual = 0.0f64;
    for p in 1..n {
        let lhs = config.beta * (phi[p - 1] - 2.0 * phi[p] + phi[p + 1]) / h2;
        let rhs = rho_points[p] - (config.doping)(mesh.interface(p));
        residual = residual.max((lhs - rhs).abs());
    }
    Ok((phi, residual))
}

/// `E = -d_x Phi` at the points: centered inside, one-sided second order at the ends.
pub fn field_from_potential(phi: &[f64], h: f64) -> Vec<f64> {
    let n = phi.len() - 1;
    let mut e = vec![0.0; n + 1];
    if n == 1 {
        let d = -(phi[1] - phi[0]) / h;
        return vec![d, d];
    }
    for p in 1..n {
        e[p] = -(phi[p + 1] - phi[p - 1]) / (2.0 * h);
    }
    e[0] = -(-3.0 * phi[0] + 4.0 * phi[1] - phi[2]) / (2.0 * h);
    e[n] = -(3.0 * phi[n] - 4.0 * phi[n - 1] + phi[n - 2]) / (2.0 * h);
    e
}

/// Self-consistent field for a DG density: `rho` at interior interfaces is
/// the average of its two one-sided traces.
pub fn solve_poisson(rho: &ScalarDgField, config: &PoissonConfig, mesh: &Mesh1D, basis: &DgBasis) -> Result<FieldState> {
    let n = mesh.n_cells();
    if rho.coeffs().iter().any(|x| !x.is_finite()) {
        return Err(ApdgError::NonFinite("density"));
    }
    let mut rho_points = vec![0.0; n + 1];
    for (p, slot) in rho_points.iter_mut().enumerate() {
        *slot = if p == 0 {
            rho.trace(mesh, basis, 0, Side::Right, false)?
        } else if p == n {
            rho.trace(mesh, basis, n, Side::Left, false)?
        } else {
            rho.average(mesh, basis, p, false)?
        };
    }
    let (phi, residual) = solve_poisson_points(&rho_points, mesh, config)?;
    let e_points = field_from_potential(&phi, mesh.h());
    let x: Vec<f64> = (0..=n).map(|p| mesh.interface(p)).collect();
    let e_field = project(mesh, basis, |xx| {
        let (i, xi) = mesh.locate(xx);
        let t = 0.5 * (xi + 1.0);
        (1.0 - t) * e_points[i] + t * e_points[i + 1]
    });
    Ok(FieldState {
        x,
        phi,
        e_points,
        e_field,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, PI};

    #[test]
    fn prescribed_field_values() {
        assert_eq!(prescribed_field_example2(0.25), 0.0);
        for d in [0.01, 0.05, 0.2, 0.6] {
            let a = prescribed_field_example2(0.25 + d);
            let b = prescribed_field_example2(0.25 - d);
            assert!((a + b).abs() < 1e-14);
        }
        let c = 50.0 * E;
        let expect = -2.0 * c * 0.25 * (-c / 16.0).exp();
        assert!((prescribed_field_example2(0.0) - expect).abs() < 1e-15);
    }

    #[test]
    fn doping_values() {
        assert!((doping_profile(0.5) - 0.001).abs() < 1e-6);
        assert!((doping_profile(0.0) - 1.0).abs() < 1e-6);
        for d in [0.01, 0.1, 0.2, 0.35] {
            assert!((doping_profile(0.5 - d) - doping_profile(0.5 + d)).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_bad_beta() {
        assert!(PoissonConfig::new(0.0, Arc::new(|_| 0.0), 0.0, 1.0).is_err());
    }

    #[test]
    fn neutral_density_gives_linear_potential() {
        let mesh = Mesh1D::unit(20).unwrap();
        let basis = DgBasis::new(2);
        let config = PoissonConfig::device();
        // rho = c(x) at the interface points exactly: use the point solver.
        let rho_points: Vec<f64> = (0..=20).map(|p| doping_profile(mesh.interface(p))).collect();
        let (phi, residual) = solve_poisson_points(&rho_points, &mesh, &config).unwrap();
        assert!(residual < 1e-12);
        for (p, v) in phi.iter().enumerate() {
            assert!((v - 5.0 * mesh.interface(p)).abs() < 1e-12);
        }
        let e = field_from_potential(&phi, mesh.h());
        assert!(e.iter().all(|x| (x + 5.0).abs() < 1e-10));

        let flat = PoissonConfig::new(0.002, Arc::new(|_| 1.0), 0.0, 5.0).unwrap();
        let rho = project(&mesh, &basis, |_| 1.0);
        let state = solve_poisson(&rho, &flat, &mesh, &basis).unwrap();
        assert!(state.residual < 1e-12);
        assert_eq!(state.phi[0], 0.0);
        assert_eq!(state.phi[20], 5.0);
        for x in [0.01, 0.33, 0.5, 0.99] {
            assert!((state.e_field.eval(&mesh, &basis, x) + 5.0).abs() < 1e-10);
        }
    }

    #[test]
    fn manufactured_solution_is_second_order() {
        let beta = 0.002;
        let config = PoissonConfig::new(beta, Arc::new(|_| 0.0), 0.0, 0.0).unwrap();
        let err = |n: usize| {
            let mesh = Mesh1D::unit(n).unwrap();
            let rho: Vec<f64> = (0..=n)
                .map(|p| -beta * PI * PI * (PI * mesh.interface(p)).sin())
                .collect();
            let (phi, _) = solve_poisson_points(&rho, &mesh, &config).unwrap();
            phi.iter()
                .enumerate()
                .map(|(p, v)| (v - (PI * mesh.interface(p)).sin()).abs())
                .fold(0.0f64, f64::max)
        };
        let order = (err(32) / err(64)).log2();
        assert!((order - 2.0).abs() < 0.05, "order {order}");
    }

    #[test]
    fn rejects_nan_density() {
        let mesh = Mesh1D::unit(4).unwrap();
        let basis = DgBasis::new(1);
        let mut rho = project(&mesh, &basis, |_| 1.0);
        rho.set_coeff(2, 0, f64::NAN);
        assert!(solve_poisson(&rho, &PoissonConfig::device(), &mesh, &basis).is_err());
    }
}
