//! Convergence tables and the asymptotic-preserving sweep.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::{BoundarySpec, DriftReference, EpsilonSpec, ExperimentConfig, ReferenceKind};
use super::norms::{distribution_error_norms, distribution_error_vs, scalar_error_vs, DistributionView, ErrorNorms, ScalarView};
use super::output::{fmt_opt, fmt_sci, write_rows};
use super::run::advance;
use crate::dg::{phase_weights, ParityField, ScalarDgField};
use crate::error::{ApdgError, Result};
use crate::limit::{drift_diffusion_solve, DdBoundary};
use crate::scheme::ApScheme;

#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyRow {
    pub n_cells: usize,
    pub errors: ErrorNorms,
    /// Observed orders against the previous row, for L1, L2 and L-infinity.
    pub orders: [Option<f64>; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyTable {
    pub epsilon: EpsilonSpec,
    pub degree: usize,
    pub reference: ReferenceKind,
    pub rows: Vec<AccuracyRow>,
    pub files: Vec<PathBuf>,
}

impl AccuracyTable {
    pub fn l2_orders(&self) -> Vec<Option<f64>> {
        self.rows.iter().map(|r| r.orders[1]).collect()
    }
}

/// `log(e_a / e_b) / log(N_b / N_a)` between consecutive entries.
pub fn convergence_orders(sizes: &[usize], errors: &[f64]) -> Vec<Option<f64>> {
    let mut out = vec![None; errors.len()];
    for k in 1..errors.len().min(sizes.len()) {
        let (ea, eb) = (errors[k - 1], errors[k]);
        if ea > 0.0 && eb > 0.0 && sizes[k] != sizes[k - 1] {
            out[k] = Some((ea / eb).ln() / (sizes[k] as f64 / sizes[k - 1] as f64).ln());
        }
    }
    out
}

struct Solved {
    scheme: ApScheme,
    f: ParityField,
}

fn solve_case(config: &ExperimentConfig, n_cells: usize, epsilon: &EpsilonSpec) -> Result<Solved> {
    let scheme = config.scheme(n_cells, epsilon)?;
    let mut state = config.initial_state(&scheme)?;
    advance(&scheme, &mut state, config.t_end, |_, _| Ok(()))?;
    let f = scheme.reconstruct_f(&state);
    Ok(Solved { scheme, f })
}

/// `rho_f M` on the same discretization as `f`.
fn equilibrium_of(f: &ParityField, scheme: &ApScheme) -> ParityField {
    let rho = f.density(scheme.grid());
    let m = scheme.grid().maxwellian();
    let mut out = ParityField::zeros(f.n_cells(), f.n_basis(), f.n_v());
    for i in 0..f.n_cells() {
        for k in 0..f.n_basis() {
            for (l, ml) in m.iter().enumerate() {
                out.set(i, k, l, rho.coeff(i, k) * ml);
            }
        }
    }
    out
}

/// Errors of the kinetic solution on each mesh of `config.mesh_sizes`,
/// against the closed-form diffusion solution (equilibrium part only) or a
/// run on twice as many cells (full distribution).
pub fn run_accuracy_study(config: &ExperimentConfig, out: Option<&Path>) -> Result<AccuracyTable> {
    if config.mesh_sizes.len() < 2 {
        return Err(ApdgError::Experiment("an accuracy study needs at least two mesh sizes".into()));
    }
    let mut needed: Vec<usize> = config.mesh_sizes.clone();
    if config.reference == ReferenceKind::SelfRefinement {
        needed.extend(config.mesh_sizes.iter().map(|n| 2 * n));
    }
    needed.sort_unstable();
    needed.dedup();
    let solved: BTreeMap<usize, Solved> = needed
        .par_iter()
        .map(|&n| solve_case(config, n, &config.epsilon).map(|s| (n, s)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .collect();

    let mut rows = Vec::new();
    for &n in &config.mesh_sizes {
        let a = &solved[&n];
        let weights = phase_weights(a.scheme.grid(), a.scheme.kernel());
        let view = DistributionView {
            mesh: a.scheme.mesh(),
            basis: a.scheme.basis(),
            field: &a.f,
        };
        let errors = match config.reference {
            ReferenceKind::Exact => {
                // Compare the equilibrium part rho_h M: the kinetic f also carries an
                // O(eps) odd part and an O(dt) non-equilibrium part of r that the
                // diffusion solution does not model.
                let m = a.scheme.grid().maxwellian().to_vec();
                let equilibrium = equilibrium_of(&a.f, &a.scheme);
                let eq_view = DistributionView { field: &equilibrium, ..view };
                let decay = config.amplitude * (-4.0 * PI * PI * config.t_end).exp();
                distribution_error_vs(eq_view, &weights, |x, l| (1.0 + decay * (2.0 * PI * x).cos()) * m[l])?
            }
            ReferenceKind::SelfRefinement => {
                let b = &solved[&(2 * n)];
                let other = DistributionView {
                    mesh: b.scheme.mesh(),
                    basis: b.scheme.basis(),
                    field: &b.f,
                };
                distribution_error_norms(view, other, &weights)?
            }
        };
        rows.push(AccuracyRow {
            n_cells: n,
            errors,
            orders: [None; 3],
        });
    }
    let sizes: Vec<usize> = rows.iter().map(|r| r.n_cells).collect();
    let cols = [
        convergence_orders(&sizes, &rows.iter().map(|r| r.errors.l1).collect::<Vec<_>>()),
        convergence_orders(&sizes, &rows.iter().map(|r| r.errors.l2).collect::<Vec<_>>()),
        convergence_orders(&sizes, &rows.iter().map(|r| r.errors.linf).collect::<Vec<_>>()),
    ];
    for (k, row) in rows.iter_mut().enumerate() {
        row.orders = [cols[0][k], cols[1][k], cols[2][k]];
    }

    let mut table = AccuracyTable {
        epsilon: config.epsilon,
        degree: config.degree,
        reference: config.reference,
        rows,
        files: Vec::new(),
    };
    if let Some(dir) = out {
        let first = table.rows.first().map_or(0, |r| r.n_cells);
        let last = table.rows.last().map_or(0, |r| r.n_cells);
        let path = dir.join(format!(
            "{}_eps{}_nx{}-{}_k{}_errors.csv",
            config.name,
            config.epsilon.tag(),
            first,
            last,
            config.degree
        ));
        let records = table.rows.iter().map(|r| {
            vec![
                r.n_cells.to_string(),
                fmt_sci(r.errors.l1),
                fmt_opt(r.orders[0]),
                fmt_sci(r.errors.l2),
                fmt_opt(r.orders[1]),
                fmt_sci(r.errors.linf),
                fmt_opt(r.orders[2]),
            ]
        });
        write_rows(&path, &["n_cells", "l1_error", "l1_order", "l2_error", "l2_order", "linf_error", "linf_order"], records)?;
        table.files.push(path);
    }
    Ok(table)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApSweepRow {
    pub epsilon: f64,
    pub errors: ErrorNorms,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApSweepResult {
    pub rows: Vec<ApSweepRow>,
    /// Least-squares slope of `log L2` against `log eps` inside the fit window.
    pub slope: Option<f64>,
    pub files: Vec<PathBuf>,
}

/// Least-squares slope of `log y` against `log x`; `None` for fewer than
/// two distinct abscissae or non-positive data.
pub fn least_squares_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.iter().any(|(x, y)| !(*x > 0.0) || !(*y > 0.0)) {
        return None;
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    if logs.len() < 2 {
        return None;
    }
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= 1e-300 {
        return None;
    }
    Some(sxy / sxx)
}

/// Density of the drift-diffusion reference on the kinetic mesh, or as a
/// function of `x` for the finite-difference solver.
enum DriftDensity {
    Dg(ApScheme, ScalarDgField),
    Points(crate::limit::DriftDiffusionState),
}

fn drift_reference(config: &ExperimentConfig, n_cells: usize) -> Result<DriftDensity> {
    match config.drift_reference {
        DriftReference::LimitScheme => {
            let eps = EpsilonSpec::Constant(config.limit_epsilon);
            let scheme = config.scheme(n_cells, &eps)?;
            let mut state = config.initial_state(&scheme)?;
            advance(&scheme, &mut state, config.t_end, |_, _| Ok(()))?;
            let rho = scheme.density(&state);
            Ok(DriftDensity::Dg(scheme, rho))
        }
        DriftReference::FiniteDifference => Ok(DriftDensity::Points(drift_diffusion_for(config, config.dd_points)?)),
    }
}

/// Crank-Nicolson drift-diffusion run matching the configuration's
/// boundary data, field and initial density.
pub fn drift_diffusion_for(config: &ExperimentConfig, points: usize) -> Result<crate::limit::DriftDiffusionState> {
    let grid = config.velocity_grid()?;
    let kernel = crate::hermite::CollisionKernel::constant(&grid, config.sigma, config.mu)?;
    let d = kernel.diffusion_constant(&grid);
    let boundary = match config.boundary {
        BoundarySpec::Periodic => DdBoundary::Periodic,
        // inflow data M carries unit density
        BoundarySpec::InflowMaxwellian => DdBoundary::Dirichlet { left: 1.0, right: 1.0 },
    };
    let mesh = config.mesh(points)?;
    drift_diffusion_solve(
        |x| config.initial_density(&grid, x),
        &mesh,
        &config.field_spec(),
        boundary,
        d,
        config.t_end,
        config.dd_dt,
    )
}

/// Distance between the kinetic density and the drift-diffusion density
/// at `t_end` for every `eps` of the sweep.
pub fn run_ap_sweep(config: &ExperimentConfig, out: Option<&Path>) -> Result<ApSweepResult> {
    let n_cells = config.mesh_sizes[0];
    let reference = drift_reference(config, n_cells)?;
    let rows = config
        .epsilons
        .par_iter()
        .map(|&eps| -> Result<ApSweepRow> {
            let spec = EpsilonSpec::Constant(eps);
            let scheme = config.scheme(n_cells, &spec)?;
            let mut state = config.initial_state(&scheme)?;
            advance(&scheme, &mut state, config.t_end, |_, _| Ok(()))?;
            let rho = scheme.density(&state);
            let view = ScalarView {
                mesh: scheme.mesh(),
                basis: scheme.basis(),
                field: &rho,
            };
            let errors = match &reference {
                DriftDensity::Dg(ref_scheme, ref_rho) => super::norms::scalar_error_norms(
                    view,
                    ScalarView {
                        mesh: ref_scheme.mesh(),
                        basis: ref_scheme.basis(),
                        field: ref_rho,
                    },
                )?,
                DriftDensity::Points(dd) => scalar_error_vs(view, |x| dd.eval(x)),
            };
            Ok(ApSweepRow { epsilon: eps, errors })
        })
        .collect::<Result<Vec<_>>>()?;
    let fit: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.epsilon >= config.fit_min * (1.0 - 1e-12) && r.epsilon <= config.fit_max * (1.0 + 1e-12))
        .map(|r| (r.epsilon, r.errors.l2))
        .collect();
    let slope = least_squares_slope(&fit);
    let mut result = ApSweepResult {
        rows,
        slope,
        files: Vec::new(),
    };
    if let Some(dir) = out {
        let path = dir.join(format!("{}_epsall_nx{}_k{}_errors.csv", config.name, n_cells, config.degree));
        let records = result.rows.iter().map(|r| {
            vec![fmt_sci(r.epsilon), fmt_sci(r.errors.l1), fmt_sci(r.errors.l2), fmt_sci(r.errors.linf)]
        });
        write_rows(&path, &["epsilon", "l1_error", "l2_error", "linf_error"], records)?;
        result.files.push(path);
        let path = dir.join(format!("{}_epsall_nx{}_k{}_slope.csv", config.name, n_cells, config.degree));
        write_rows(
            &path,
            &["fit_min", "fit_max", "slope"],
            std::iter::once(vec![fmt_sci(config.fit_min), fmt_sci(config.fit_max), fmt_opt(result.slope)]),
        )?;
        result.files.push(path);
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orders_from_errors() {
        let o = convergence_orders(&[4, 8, 16], &[1e-2, 1.25e-3, 1.5625e-4]);
        assert_eq!(o[0], None);
        assert!((o[1].unwrap() - 3.0).abs() < 1e-12);
        assert!((o[2].unwrap() - 3.0).abs() < 1e-12);
        assert_eq!(convergence_orders(&[4, 8], &[0.0, 0.0]), vec![None, None]);
    }

    #[test]
    fn slope_fitter() {
        let pts: Vec<(f64, f64)> = [1e-4, 3e-4, 1e-3].iter().map(|&e| (e, 5.0 * e)).collect();
        assert!((least_squares_slope(&pts).unwrap() - 1.0).abs() < 1e-12);
        let doubled: Vec<(f64, f64)> = pts.iter().map(|&(x, y)| (x, 2.0 * y)).collect();
        assert!((least_squares_slope(&doubled).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(least_squares_slope(&pts[..1]), None);
        assert_eq!(least_squares_slope(&[]), None);
        assert_eq!(least_squares_slope(&[(1e-3, 1.0), (1e-3, 2.0)]), None);
    }

    #[test]
    fn equilibrium_data_gives_zero_error() {
        let text = "kind = accuracy\nn_cells = 4, 8\nt_end = 1e-4\ndt = 1e-5\namplitude = 0\nn_modes = 7";
        let config: ExperimentConfig = text.parse().unwrap();
        let table = run_accuracy_study(&config, None).unwrap();
        for row in &table.rows {
            assert!(row.errors.linf < 1e-12, "{:?}", row.errors);
        }
        let config: ExperimentConfig = format!("{text}\nreference = self").parse().unwrap();
        let table = run_accuracy_study(&config, None).unwrap();
        assert!(table.rows.iter().all(|r| r.errors.linf < 1e-12));
    }

    #[test]
    fn short_sweep_reports_rows() {
        let text = "kind = ap_sweep\nepsilons = 1e-3\nt_end = 1e-3\nn_modes = 7\ndd_points = 100";
        let config: ExperimentConfig = text.parse().unwrap();
        let result = run_ap_sweep(&config, None).unwrap();
        assert_eq!(result.rows.len(), 1);
        assert_eq!(result.slope, None);
        assert!(result.rows[0].errors.l2.is_finite());
    }
}
