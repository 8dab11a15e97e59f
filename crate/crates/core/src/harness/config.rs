//! Flat `key = value` experiment configuration.
//!
//! Every experiment kind starts from its published parameter set; keys in
//! the file override those defaults. Lines starting with `#` and trailing
//! `# ...` comments are ignored.

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{ApdgError, Result};
use crate::scheme::{NegativeVelocityMode, TransportIntegrator};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Accuracy,
    PrescribedField,
    BoltzmannPoisson,
    MixedRegime,
    ApSweep,
    Custom,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::Accuracy => "accuracy",
            ExperimentKind::PrescribedField => "prescribed_field",
            ExperimentKind::BoltzmannPoisson => "boltzmann_poisson",
            ExperimentKind::MixedRegime => "mixed_regime",
            ExperimentKind::ApSweep => "ap_sweep",
            ExperimentKind::Custom => "custom",
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "accuracy" => ExperimentKind::Accuracy,
            "prescribed_field" => ExperimentKind::PrescribedField,
            "boltzmann_poisson" => ExperimentKind::BoltzmannPoisson,
            "mixed_regime" => ExperimentKind::MixedRegime,
            "ap_sweep" => ExperimentKind::ApSweep,
            "custom" => ExperimentKind::Custom,
            other => return Err(format!("unknown experiment kind `{other}`")),
        })
    }
}

/// Knudsen number choice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpsilonSpec {
    Constant(f64),
    /// `eps(x) = 1e-3 + (tanh(1 - 11x) + tanh(1 + 11x)) / 2`.
    MixedRegime,
}

impl EpsilonSpec {
    /// Tag used in output file names.
    pub fn tag(&self) -> String {
        match self {
            EpsilonSpec::Constant(e) => format!("{e:e}"),
            EpsilonSpec::MixedRegime => "mixed".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DtSpec {
    Fixed(f64),
    Cfl { parabolic: f64, hyperbolic: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundarySpec {
    Periodic,
    /// `F_L = F_R = M`.
    InflowMaxwellian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Zero,
    /// The bump field `E = -2c (1/4 - x) exp(-c (1/4 - x)^2)`.
    Bump,
    /// Self-consistent device field.
    Poisson,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialKind {
    /// `f = M(v) (1 + A cos(2 pi x))`.
    CosinePerturbation,
    /// `f = M(v)`.
    Maxwellian,
    /// Two shifted Maxwellians with `x`-dependent density and temperature.
    DoubleMaxwellian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceKind {
    /// Closed-form heat-equation solution times `M`.
    Exact,
    /// Run at `2 N_x` with the same step.
    SelfRefinement,
}

/// Source of the drift-diffusion solution in the AP sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DriftReference {
    /// Crank-Nicolson finite differences on a fine grid.
    FiniteDifference,
    /// The kinetic scheme itself at `eps = limit_epsilon` on the same mesh.
    LimitScheme,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub kind: ExperimentKind,
    pub mesh_sizes: Vec<usize>,
    pub degree: usize,
    pub n_modes: usize,
    pub epsilon: EpsilonSpec,
    /// Knudsen numbers of an AP sweep.
    pub epsilons: Vec<f64>,
    pub dt: DtSpec,
    pub t_end: f64,
    pub x_left: f64,
    pub x_right: f64,
    pub boundary: BoundarySpec,
    pub negative_velocity: NegativeVelocityMode,
    pub field: FieldKind,
    pub initial: InitialKind,
    /// Amplitude `A` of the cosine perturbation.
    pub amplitude: f64,
    pub reference: ReferenceKind,
    pub limiter: bool,
    pub limit_stages: bool,
    pub integrator: TransportIntegrator,
    /// Constant scattering cross-section.
    pub sigma: f64,
    /// Relaxation rate of the time-relaxed collision update.
    pub mu: f64,
    /// Times at which `f(x, v)` is written.
    pub snapshots: Vec<f64>,
    /// Diagnostic cadence in steps.
    pub series_every: usize,
    /// Solve the drift-diffusion problem alongside a kinetic run.
    pub compare_drift_diffusion: bool,
    pub drift_reference: DriftReference,
    pub limit_epsilon: f64,
    pub dd_points: usize,
    pub dd_dt: f64,
    /// Least-squares window of the AP sweep slope.
    pub fit_min: f64,
    pub fit_max: f64,
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Published parameters for each experiment kind.
    pub fn for_kind(kind: ExperimentKind) -> Self {
        let mut c = Self {
            name: kind.as_str().to_string(),
            kind,
            mesh_sizes: vec![20],
            degree: 2,
            n_modes: 15,
            epsilon: EpsilonSpec::Constant(1e-5),
            epsilons: Vec::new(),
            dt: DtSpec::Fixed(1e-5),
            t_end: 0.1,
            x_left: 0.0,
            x_right: 1.0,
            boundary: BoundarySpec::Periodic,
            negative_velocity: NegativeVelocityMode::Mirror,
            field: FieldKind::Zero,
            initial: InitialKind::Maxwellian,
            amplitude: 1.0,
            reference: ReferenceKind::Exact,
            limiter: true,
            limit_stages: false,
            integrator: TransportIntegrator::Ssprk3,
            sigma: 1.0,
            mu: 2.0,
            snapshots: Vec::new(),
            series_every: 1,
            compare_drift_diffusion: false,
            drift_reference: DriftReference::FiniteDifference,
            limit_epsilon: 1e-10,
            dd_points: 2000,
            dd_dt: 1e-5,
            fit_min: 1e-4,
            fit_max: 1e-3,
            seed: 0,
            out_dir: None,
        };
        match kind {
            ExperimentKind::Accuracy => {
                c.mesh_sizes = vec![4, 8, 16, 32, 64];
                c.dt = DtSpec::Fixed(2e-6);
                c.t_end = 0.03;
                c.initial = InitialKind::CosinePerturbation;
                c.limiter = false;
                c.series_every = 0;
            }
            ExperimentKind::PrescribedField | ExperimentKind::ApSweep => {
                c.mesh_sizes = vec![20];
                c.dt = DtSpec::Fixed(1e-5);
                c.t_end = 0.5;
                c.epsilon = EpsilonSpec::Constant(2e-3);
                c.boundary = BoundarySpec::InflowMaxwellian;
                c.field = FieldKind::Bump;
                c.series_every = 100;
                if kind == ExperimentKind::ApSweep {
                    c.epsilons = vec![1e-6, 1e-5, 1e-4, 2e-4, 5e-4, 1e-3];
                    c.series_every = 0;
                    c.drift_reference = DriftReference::LimitScheme;
                }
            }
            ExperimentKind::BoltzmannPoisson => {
                c.mesh_sizes = vec![20];
                c.dt = DtSpec::Fixed(2e-5);
                c.t_end = 0.05;
                c.epsilon = EpsilonSpec::Constant(1e-3);
                c.boundary = BoundarySpec::InflowMaxwellian;
                c.field = FieldKind::Poisson;
                c.compare_drift_diffusion = true;
                c.dd_points = 400;
                c.dd_dt = 2e-6;
                c.series_every = 10;
            }
            ExperimentKind::MixedRegime => {
                c.mesh_sizes = vec![50];
                c.dt = DtSpec::Fixed(5e-7);
                c.t_end = 0.1;
                c.epsilon = EpsilonSpec::MixedRegime;
                c.initial = InitialKind::DoubleMaxwellian;
                c.series_every = 100;
            }
            ExperimentKind::Custom => {}
        }
        c
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        text.parse()
    }

    fn validate(&self) -> Result<()> {
        let bad = |message: String| Err(ApdgError::Config { line: 0, message });
        if self.mesh_sizes.is_empty() || self.mesh_sizes.contains(&0) {
            return bad("n_cells must list positive cell counts".into());
        }
        if self.kind == ExperimentKind::Accuracy && self.mesh_sizes.len() < 2 {
            return bad("an accuracy study needs at least two mesh sizes".into());
        }
        if !(self.t_end > 0.0) {
            return bad(format!("t_end must be positive, got {}", self.t_end));
        }
        match self.dt {
            DtSpec::Fixed(dt) if !(dt > 0.0) => return bad(format!("dt must be positive, got {dt}")),
            DtSpec::Cfl { parabolic, hyperbolic } if !(parabolic > 0.0 && hyperbolic > 0.0) => {
                return bad("cfl numbers must be positive".into())
            }
            _ => {}
        }
        if let EpsilonSpec::Constant(e) = self.epsilon {
            if !(e > 0.0) {
                return bad(format!("epsilon must be positive, got {e}"));
            }
        }
        if self.epsilons.iter().any(|e| !(*e > 0.0)) {
            return bad("epsilons must be positive".into());
        }
        if self.kind == ExperimentKind::ApSweep && self.epsilons.is_empty() {
            return bad("an AP sweep needs an epsilons list".into());
        }
        if self.n_modes % 2 == 0 {
            return bad(format!("n_modes must be odd, got {}", self.n_modes));
        }
        if !(self.x_right > self.x_left) {
            return bad("x_right must exceed x_left".into());
        }
        if self.field == FieldKind::Poisson && self.boundary == BoundarySpec::Periodic {
            return bad("the Poisson field needs inflow boundaries".into());
        }
        if !(self.sigma > 0.0) || !(self.mu > 0.0) {
            return bad("sigma and mu must be positive".into());
        }
        if self.dd_points < 3 || !(self.dd_dt > 0.0) {
            return bad("dd_points must be at least 3 and dd_dt positive".into());
        }
        Ok(())
    }

    /// Prefix `experiment_eps<eps>_nx<N>_k<k>` for output files.
    pub fn file_stem(&self, eps: &EpsilonSpec, n_cells: usize) -> String {
        format!("{}_eps{}_nx{}_k{}", self.name, eps.tag(), n_cells, self.degree)
    }
}

fn parse_value<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value.parse::<T>().map_err(|e| ApdgError::Config {
        line,
        message: format!("bad value `{value}` for `{key}`: {e}"),
    })
}

fn parse_list<T: FromStr>(line: usize, key: &str, value: &str) -> Result<Vec<T>>
where
    T::Err: fmt::Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_value(line, key, s))
        .collect()
}

fn parse_bool(line: usize, key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "on" | "yes" => Ok(true),
        "false" | "off" | "no" => Ok(false),
        _ => Err(ApdgError::Config {
            line,
            message: format!("bad boolean `{value}` for `{key}`"),
        }),
    }
}

fn choice<T: Copy>(line: usize, key: &str, value: &str, options: &[(&str, T)]) -> Result<T> {
    options
        .iter()
        .find(|(name, _)| *name == value)
        .map(|(_, v)| *v)
        .ok_or_else(|| ApdgError::Config {
            line,
            message: format!(
                "bad value `{value}` for `{key}`; expected one of {}",
                options.iter().map(|(n, _)| *n).collect::<Vec<_>>().join(", ")
            ),
        })
}

impl FromStr for ExperimentConfig {
    type Err = ApdgError;

    fn from_str(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        let mut seen = HashSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| ApdgError::Config {
                line,
                message: format!("expected `key = value`, got `{content}`"),
            })?;
            let (key, value) = (key.trim().to_string(), value.trim().to_string());
            if !seen.insert(key.clone()) {
                return Err(ApdgError::Config {
                    line,
                    message: format!("duplicate key `{key}`"),
                });
            }
            entries.push((line, key, value));
        }
        let kind = match entries.iter().find(|(_, k, _)| k == "kind") {
            Some((line, _, v)) => v.parse::<ExperimentKind>().map_err(|message| ApdgError::Config { line: *line, message })?,
            None => {
                return Err(ApdgError::Config {
                    line: 0,
                    message: "missing `kind`".into(),
                })
            }
        };
        let mut c = ExperimentConfig::for_kind(kind);
        let mut cfl = (0.05, 0.3);
        let mut dt_cfl = false;
        for (line, key, value) in &entries {
            let (line, v) = (*line, value.as_str());
            match key.as_str() {
                "kind" => {}
                "name" => c.name = v.to_string(),
                "n_cells" => c.mesh_sizes = parse_list(line, key, v)?,
                "degree" => c.degree = parse_value(line, key, v)?,
                "n_modes" => c.n_modes = parse_value(line, key, v)?,
                "epsilon" => {
                    c.epsilon = if v == "mixed" {
                        EpsilonSpec::MixedRegime
                    } else {
                        EpsilonSpec::Constant(parse_value(line, key, v)?)
                    }
                }
                "epsilons" => c.epsilons = parse_list(line, key, v)?,
                "dt" => {
                    if v == "cfl" {
                        dt_cfl = true;
                    } else {
                        c.dt = DtSpec::Fixed(parse_value(line, key, v)?);
                    }
                }
                "cfl_parabolic" => cfl.0 = parse_value(line, key, v)?,
                "cfl_hyperbolic" => cfl.1 = parse_value(line, key, v)?,
                "t_end" => c.t_end = parse_value(line, key, v)?,
                "x_left" => c.x_left = parse_value(line, key, v)?,
                "x_right" => c.x_right = parse_value(line, key, v)?,
                "boundary" => {
                    c.boundary = choice(
                        line,
                        key,
                        v,
                        &[("periodic", BoundarySpec::Periodic), ("inflow_maxwellian", BoundarySpec::InflowMaxwellian)],
                    )?
                }
                "negative_velocity" => {
                    c.negative_velocity = choice(
                        line,
                        key,
                        v,
                        &[("mirror", NegativeVelocityMode::Mirror), ("literal", NegativeVelocityMode::Literal)],
                    )?
                }
                "field" => {
                    c.field = choice(
                        line,
                        key,
                        v,
                        &[("zero", FieldKind::Zero), ("bump", FieldKind::Bump), ("poisson", FieldKind::Poisson)],
                    )?
                }
                "initial" => {
                    c.initial = choice(
                        line,
                        key,
                        v,
                        &[
                            ("cosine", InitialKind::CosinePerturbation),
                            ("maxwellian", InitialKind::Maxwellian),
                            ("double_maxwellian", InitialKind::DoubleMaxwellian),
                        ],
                    )?
                }
                "amplitude" => c.amplitude = parse_value(line, key, v)?,
                "reference" => {
                    c.reference = choice(line, key, v, &[("exact", ReferenceKind::Exact), ("self", ReferenceKind::SelfRefinement)])?
                }
                "limiter" => c.limiter = parse_bool(line, key, v)?,
                "limit_stages" => c.limit_stages = parse_bool(line, key, v)?,
                "integrator" => {
                    c.integrator = choice(
                        line,
                        key,
                        v,
                        &[("ssprk3", TransportIntegrator::Ssprk3), ("forward_euler", TransportIntegrator::ForwardEuler)],
                    )?
                }
                "sigma" => c.sigma = parse_value(line, key, v)?,
                "mu" => c.mu = parse_value(line, key, v)?,
                "snapshots" => c.snapshots = parse_list(line, key, v)?,
                "series_every" => c.series_every = parse_value(line, key, v)?,
                "compare_drift_diffusion" => c.compare_drift_diffusion = parse_bool(line, key, v)?,
                "drift_reference" => {
                    c.drift_reference = choice(
                        line,
                        key,
                        v,
                        &[("finite_difference", DriftReference::FiniteDifference), ("limit_scheme", DriftReference::LimitScheme)],
                    )?
                }
                "limit_epsilon" => c.limit_epsilon = parse_value(line, key, v)?,
                "dd_points" => c.dd_points = parse_value(line, key, v)?,
                "dd_dt" => c.dd_dt = parse_value(line, key, v)?,
                "fit_min" => c.fit_min = parse_value(line, key, v)?,
                "fit_max" => c.fit_max = parse_value(line, key, v)?,
                "seed" => c.seed = parse_value(line, key, v)?,
                "out_dir" => c.out_dir = Some(PathBuf::from(v)),
                other => {
                    return Err(ApdgError::Config {
                        line,
                        message: format!("unknown key `{other}`"),
                    })
                }
            }
        }
        if dt_cfl {
            c.dt = DtSpec::Cfl {
                parabolic: cfl.0,
                hyperbolic: cfl.1,
            };
        }
        c.validate()?;
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_accuracy_config() {
        let text = "# table\nkind = accuracy\nn_cells = 4, 8 ,16 # coarse\nepsilon = 0.5\nreference = self\n";
        let c: ExperimentConfig = text.parse().unwrap();
        assert_eq!(c.kind, ExperimentKind::Accuracy);
        assert_eq!(c.mesh_sizes, vec![4, 8, 16]);
        assert_eq!(c.epsilon, EpsilonSpec::Constant(0.5));
        assert_eq!(c.reference, ReferenceKind::SelfRefinement);
        assert_eq!(c.dt, DtSpec::Fixed(2e-6));
        assert_eq!(c.t_end, 0.03);
        assert_eq!(c.file_stem(&c.epsilon, 8), "accuracy_eps5e-1_nx8_k2");
    }

    #[test]
    fn kind_defaults() {
        let c = ExperimentConfig::for_kind(ExperimentKind::BoltzmannPoisson);
        assert_eq!(c.field, FieldKind::Poisson);
        assert_eq!(c.dt, DtSpec::Fixed(2e-5));
        let m: ExperimentConfig = "kind = mixed_regime\nepsilon = mixed\ndt = cfl\ncfl_parabolic = 0.01".parse().unwrap();
        assert_eq!(m.epsilon, EpsilonSpec::MixedRegime);
        assert_eq!(m.dt, DtSpec::Cfl { parabolic: 0.01, hyperbolic: 0.3 });
        assert_eq!(m.file_stem(&m.epsilon, 50), "mixed_regime_epsmixed_nx50_k2");
    }

    #[test]
    fn rejects_bad_input() {
        let cases = [
            "n_cells = 4",
            "kind = nonsense",
            "kind = accuracy\nn_cells = 8",
            "kind = custom\nfoo = 1",
            "kind = custom\nt_end = 0",
            "kind = custom\ndt = -1",
            "kind = custom\nlimiter = maybe",
            "kind = custom\nkind = custom",
            "kind = custom\njust some words",
            "kind = custom\nfield = poisson",
            "kind = custom\nn_modes = 4",
        ];
        for text in cases {
            let err = text.parse::<ExperimentConfig>().unwrap_err();
            assert_eq!(err.kind(), "config", "{text}");
        }
    }

    #[test]
    fn reports_line_numbers() {
        match "kind = custom\n\n# c\nbogus = 3".parse::<ExperimentConfig>() {
            Err(ApdgError::Config { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
    }
}
