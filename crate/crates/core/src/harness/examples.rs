//! Time-dependent example runs with diagnostics, profiles and snapshots.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::{ExperimentConfig, ExperimentKind};
use super::norms::{scalar_error_vs, ScalarView};
use super::output::{create, fmt_sci, write_rows};
use super::run::step_count;
use super::studies::drift_diffusion_for;
use crate::dg::{write_cell_averages_csv, write_field_points_csv, ParityField};
use crate::error::Result;
use crate::limit::DriftDiffusionState;
use crate::scheme::{ApScheme, ParityState};

/// One row of the diagnostic time series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesRow {
    pub step: usize,
    pub t: f64,
    pub mass: f64,
    pub theorem_energy: f64,
    pub example_energy: f64,
    pub limiter_activations: usize,
    pub negative_averages: usize,
    pub min_f_sampled: f64,
    pub distance_to_equilibrium: f64,
}

#[derive(Debug, Clone)]
pub struct DriftComparison {
    pub state: DriftDiffusionState,
    /// `||rho_h - rho_dd||_2 / ||rho_dd||_2`.
    pub relative_l2: f64,
}

#[derive(Debug, Clone)]
pub struct ExampleReport {
    pub n_cells: usize,
    pub steps: usize,
    pub series: Vec<SeriesRow>,
    /// Smallest sampled `f` after limiting, over every step.
    pub min_f: f64,
    /// Largest change of a limited cell average.
    pub max_average_error: f64,
    pub negative_averages: usize,
    pub final_state: ParityState,
    pub drift: Option<DriftComparison>,
    pub files: Vec<PathBuf>,
}

fn series_row(scheme: &ApScheme, state: &ParityState, activations: usize, negatives: usize, min_f: f64) -> SeriesRow {
    let energy = scheme.energy_norms(state);
    SeriesRow {
        step: state.step,
        t: state.t,
        mass: scheme.mass(state),
        theorem_energy: energy.theorem,
        example_energy: energy.example,
        limiter_activations: activations,
        negative_averages: negatives,
        min_f_sampled: min_f,
        distance_to_equilibrium: scheme.distance_to_equilibrium(state),
    }
}

fn write_snapshot(path: &Path, scheme: &ApScheme, f: &ParityField) -> Result<()> {
    let mesh = scheme.mesh();
    let basis = scheme.basis();
    let nodes = scheme.grid().nodes();
    let mut rows = Vec::new();
    for i in 0..mesh.n_cells() {
        for &xi in basis.quad_points() {
            let vals = f.eval_ref(mesh, basis, i, xi);
            let x = mesh.map(i, xi);
            for (v, fv) in nodes.iter().zip(&vals) {
                rows.push(vec![i.to_string(), fmt_sci(x), fmt_sci(*v), fmt_sci(*fv)]);
            }
        }
    }
    write_rows(path, &["cell", "x", "v", "f"], rows)
}

fn run_one(config: &ExperimentConfig, n_cells: usize, out: Option<&Path>) -> Result<ExampleReport> {
    let scheme = config.scheme(n_cells, &config.epsilon)?;
    let mut state = config.initial_state(&scheme)?;
    let stem = config.file_stem(&config.epsilon, n_cells);
    let steps = step_count(config.t_end, scheme.dt());
    let mut files = Vec::new();
    let mut snapshots: Vec<f64> = config.snapshots.clone();
    snapshots.sort_by(f64::total_cmp);
    let mut next_snapshot = 0;

    let mut series = vec![series_row(&scheme, &state, 0, 0, scheme.min_f_sampled(&state))];
    let mut min_f = f64::INFINITY;
    let mut max_average_error = 0.0f64;
    let mut negative_averages = 0;
    for _ in 0..steps {
        let diag = scheme.full_step(&mut state)?;
        min_f = min_f.min(diag.min_f_sampled);
        max_average_error = max_average_error.max(diag.limiter_average_error);
        negative_averages += diag.negative_averages;
        let at_cadence = config.series_every > 0 && state.step % config.series_every == 0;
        if at_cadence || state.step == steps {
            series.push(series_row(
                &scheme,
                &state,
                diag.limiter_activations,
                diag.negative_averages,
                diag.min_f_sampled,
            ));
        }
        while let (Some(dir), Some(&ts)) = (out, snapshots.get(next_snapshot)) {
            if state.t + 0.5 * scheme.dt() < ts {
                break;
            }
            let path = dir.join(format!("{stem}_f_t{ts}.csv"));
            write_snapshot(&path, &scheme, &scheme.reconstruct_f(&state))?;
            files.push(path);
            next_snapshot += 1;
        }
    }

    let rho = scheme.density(&state);
    let drift = if config.compare_drift_diffusion {
        let dd = drift_diffusion_for(config, config.dd_points)?;
        let view = ScalarView {
            mesh: scheme.mesh(),
            basis: scheme.basis(),
            field: &rho,
        };
        let diff = scalar_error_vs(view, |x| dd.eval(x)).l2;
        let scale = (0..dd.x.len()).map(|p| dd.rho[p] * dd.rho[p]).sum::<f64>() / dd.x.len() as f64;
        let scale = (scale * scheme.mesh().length()).sqrt();
        Some(DriftComparison {
            state: dd,
            relative_l2: diff / scale,
        })
    } else {
        None
    };

    if let Some(dir) = out {
        let path = dir.join(format!("{stem}_series.csv"));
        let records = series.iter().map(|r| {
            vec![
                r.step.to_string(),
                fmt_sci(r.t),
                fmt_sci(r.mass),
                fmt_sci(r.theorem_energy),
                fmt_sci(r.example_energy),
                r.limiter_activations.to_string(),
                r.negative_averages.to_string(),
                fmt_sci(r.min_f_sampled),
                fmt_sci(r.distance_to_equilibrium),
            ]
        });
        write_rows(
            &path,
            &[
                "step",
                "t",
                "mass",
                "theorem_energy",
                "example_energy",
                "limiter_activations",
                "negative_averages",
                "min_f_sampled",
                "distance_to_equilibrium",
            ],
            records,
        )?;
        files.push(path);
        let path = dir.join(format!("{stem}_rho.csv"));
        write_field_points_csv(create(&path)?, scheme.mesh(), scheme.basis(), &rho)?;
        files.push(path);
        let path = dir.join(format!("{stem}_rho_avg.csv"));
        write_cell_averages_csv(create(&path)?, scheme.mesh(), &rho)?;
        files.push(path);
        let path = dir.join(format!("{stem}_f_final.csv"));
        write_snapshot(&path, &scheme, &scheme.reconstruct_f(&state))?;
        files.push(path);
        let field = scheme.field_sample(&state.r)?;
        if let Some(p) = &field.poisson {
            let path = dir.join(format!("{stem}_potential.csv"));
            p.write_csv(create(&path)?)?;
            files.push(path);
        }
        if !field.zero {
            let path = dir.join(format!("{stem}_efield.csv"));
            write_field_points_csv(create(&path)?, scheme.mesh(), scheme.basis(), &scheme.field_projection(&field))?;
            files.push(path);
        }
        if let Some(d) = &drift {
            let path = dir.join(format!("{stem}_drift_diffusion.csv"));
            d.state.write_csv(create(&path)?)?;
            files.push(path);
        }
    }

    Ok(ExampleReport {
        n_cells,
        steps,
        series,
        min_f,
        max_average_error,
        negative_averages,
        final_state: state,
        drift,
        files,
    })
}

/// Runs the configured example on every mesh size.
pub fn run_example(config: &ExperimentConfig, out: Option<&Path>) -> Result<Vec<ExampleReport>> {
    if config.kind == ExperimentKind::ApSweep {
        return Err(crate::error::ApdgError::Experiment(
            "an AP sweep has no single time series; use the sweep driver".into(),
        ));
    }
    config.mesh_sizes.par_iter().map(|&n| run_one(config, n, out)).collect()
}
