//! TOML run configuration.
//!
//! ```toml
//! output_dir = "out/example1"      # optional, default "out"
//!
//! [model]                          # required
//! lambda = 30.0
//! beta_a = 0.01
//! beta_i = 0.01
//! b = 0.2
//! mu = 2e-5
//! gamma = 0.5
//! delta_a = 0.2
//! delta_i = 0.2
//! alpha = 0.5
//! d = 0.0027
//! sigma = [0.05, 0.05, 0.05, 0.05] # default all zero
//!
//! [init]                           # required
//! s = 1500.0
//! a = 5.0
//! i = 6.0
//! r = 25.0
//!
//! [grid]
//! t_end = 500.0                    # required
//! t0 = 0.0
//! dt = 0.002
//!
//! [ensemble]
//! n_traj = 100
//! master_seed = 0
//! record_every = 250               # default: about 2000 recorded points
//!
//! [analysis]
//! burn_in = 100.0                  # default 20% of the horizon
//! n_bins = 50
//! fit_window = [250.0, 500.0]      # default: last half of the horizon
//! infected_tolerance = 1.0
//! component = "I"
//! second_seed = 1                  # default master_seed + 1
//!
//! [control]                        # needed by `control` only
//! p = [0.0, 1.0, 1.0]
//! q = [1e3, 1e5]
//! k = [0.0, 0.0, 0.0, 0.0]
//!
//! [control.sweep]
//! max_iter = 100
//! tol = 1e-4
//! relaxation = 0.5
//! mode = "hamiltonian"             # or "classic"
//! forward = "nominal"              # or "frozen"
//! ```

use std::path::PathBuf;

use serde::Deserialize;

use sairs_core::control::{ForwardPass, ObjectiveWeights, ProjectionMode, SweepConfig};
use sairs_core::ensemble::default_record_every;
use sairs_core::integrator::{TimeGrid, DEFAULT_DT};
use sairs_core::noise::NoiseStream;
use sairs_core::{Component, ModelParams, State};

use crate::error::{CliError, Result};

/// Recorded points per trajectory when `record_every` is not given.
pub const DEFAULT_RECORDED_POINTS: usize = 2000;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    output_dir: Option<PathBuf>,
    model: RawModel,
    init: RawInit,
    grid: RawGrid,
    #[serde(default)]
    ensemble: RawEnsemble,
    #[serde(default)]
    analysis: RawAnalysis,
    control: Option<RawControl>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    lambda: f64,
    beta_a: f64,
    beta_i: f64,
    b: f64,
    mu: f64,
    gamma: f64,
    delta_a: f64,
    delta_i: f64,
    alpha: f64,
    d: f64,
    #[serde(default)]
    sigma: [f64; 4],
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInit {
    s: f64,
    a: f64,
    i: f64,
    r: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    #[serde(default)]
    t0: f64,
    t_end: f64,
    dt: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEnsemble {
    #[serde(default = "default_n_traj")]
    n_traj: usize,
    #[serde(default)]
    master_seed: u64,
    record_every: Option<usize>,
}

fn default_n_traj() -> usize {
    100
}

impl Default for RawEnsemble {
    fn default() -> Self {
        Self {
            n_traj: default_n_traj(),
            master_seed: 0,
            record_every: None,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAnalysis {
    burn_in: Option<f64>,
    n_bins: Option<usize>,
    fit_window: Option<[f64; 2]>,
    infected_tolerance: Option<f64>,
    component: Option<String>,
    second_seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawControl {
    p: [f64; 3],
    q: [f64; 2],
    #[serde(default)]
    k: [f64; 4],
    #[serde(default)]
    sweep: RawSweep,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    max_iter: Option<usize>,
    tol: Option<f64>,
    relaxation: Option<f64>,
    mode: Option<String>,
    forward: Option<String>,
}

/// Command-line values that replace config keys.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trajectories: Option<usize>,
    pub t_end: Option<f64>,
    pub dt: Option<f64>,
    pub out: Option<PathBuf>,
    pub mode: Option<ProjectionMode>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleConfig {
    pub n_traj: usize,
    pub master_seed: u64,
    pub record_every: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisConfig {
    pub burn_in: f64,
    pub n_bins: usize,
    pub fit_window: (f64, f64),
    pub infected_tolerance: f64,
    pub component: Component,
    pub second_seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlConfig {
    pub weights: ObjectiveWeights,
    pub sweep: SweepConfig,
}

/// Fully validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ModelParams,
    pub init: State,
    pub grid: TimeGrid,
    pub ensemble: EnsembleConfig,
    pub analysis: AnalysisConfig,
    pub control: Option<ControlConfig>,
    pub output_dir: PathBuf,
}

impl RunConfig {
    pub fn control(&self) -> Result<&ControlConfig> {
        self.control
            .as_ref()
            .ok_or_else(|| CliError::config("control", "section is required by this command"))
    }
}

/// Parses and validates TOML text, applying `overrides` before defaults
/// that depend on other keys (burn-in and fit window follow `t_end`).
pub fn parse_config(text: &str, overrides: &Overrides) -> Result<RunConfig> {
    let de = toml::Deserializer::parse(text).map_err(|e| CliError::config("<document>", e))?;
    let raw: RawConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let key = e.path().to_string();
        CliError::config(if key == "." { "<document>".into() } else { key }, e.into_inner())
    })?;
    build(raw, overrides)
}

fn core_error(section: &str, err: sairs_core::Error) -> CliError {
    use sairs_core::Error;
    let what = match &err {
        Error::NonFinite { what } | Error::OutOfRange { what, .. } => *what,
        _ => return CliError::config(section, err),
    };
    let field = match what {
        "sigma1" => "sigma[0]".to_string(),
        "sigma2" => "sigma[1]".to_string(),
        "sigma3" => "sigma[2]".to_string(),
        "sigma4" => "sigma[3]".to_string(),
        "n_steps" => "dt".to_string(),
        other => other.to_lowercase(),
    };
    CliError::config(format!("{section}.{field}"), err)
}

fn check(key: &str, ok: bool, message: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(CliError::config(key, message))
    }
}

fn build(raw: RawConfig, ov: &Overrides) -> Result<RunConfig> {
    let m = raw.model;
    let model = ModelParams {
        lambda: m.lambda,
        beta_a: m.beta_a,
        beta_i: m.beta_i,
        b: m.b,
        mu: m.mu,
        gamma: m.gamma,
        delta_a: m.delta_a,
        delta_i: m.delta_i,
        alpha: m.alpha,
        d: m.d,
        sigma: m.sigma,
    };
    model.validate().map_err(|e| core_error("model", e))?;

    let init = State::new(raw.init.s, raw.init.a, raw.init.i, raw.init.r);
    init.validate().map_err(|e| core_error("init", e))?;

    let t_end = ov.t_end.unwrap_or(raw.grid.t_end);
    let dt = ov.dt.or(raw.grid.dt).unwrap_or(DEFAULT_DT);
    let grid = TimeGrid::new(raw.grid.t0, t_end, dt).map_err(|e| core_error("grid", e))?;
    let horizon = grid.horizon();

    let n_traj = ov.trajectories.unwrap_or(raw.ensemble.n_traj);
    check("ensemble.n_traj", n_traj >= 1, "must be at least 1")?;
    let master_seed = ov.seed.unwrap_or(raw.ensemble.master_seed);
    let record_every = raw
        .ensemble
        .record_every
        .unwrap_or_else(|| default_record_every(&grid, DEFAULT_RECORDED_POINTS));
    check("ensemble.record_every", record_every >= 1, "must be at least 1")?;

    let a = raw.analysis;
    let burn_in = a.burn_in.unwrap_or(0.2 * horizon);
    check(
        "analysis.burn_in",
        burn_in.is_finite() && burn_in >= 0.0 && burn_in < horizon,
        "must lie in [0, horizon)",
    )?;
    let n_bins = a.n_bins.unwrap_or(50);
    check("analysis.n_bins", n_bins >= 2, "must be at least 2")?;
    let fit_window = match a.fit_window {
        Some([lo, hi]) => (lo, hi),
        None => (grid.t0 + 0.5 * horizon, grid.t_end),
    };
    check(
        "analysis.fit_window",
        fit_window.0.is_finite() && fit_window.1.is_finite() && fit_window.0 < fit_window.1,
        "must be [t_a, t_b] with t_a < t_b",
    )?;
    let infected_tolerance = a.infected_tolerance.unwrap_or(1.0);
    check(
        "analysis.infected_tolerance",
        infected_tolerance.is_finite() && infected_tolerance > 0.0,
        "must be positive",
    )?;
    let component = match a.component.as_deref() {
        None => Component::I,
        Some(name) => Component::parse(name)
            .ok_or_else(|| CliError::config("analysis.component", "expected one of S, A, I, R"))?,
    };
    let second_seed = a.second_seed.unwrap_or(master_seed.wrapping_add(1));
    check(
        "analysis.second_seed",
        second_seed != master_seed,
        "must differ from ensemble.master_seed",
    )?;

    let control = match raw.control {
        None => None,
        Some(c) => {
            let weights = ObjectiveWeights {
                p: c.p,
                q: c.q,
                k: c.k,
            };
            weights.validate().map_err(|e| core_error("control", e))?;
            let defaults = SweepConfig::default();
            let mode = match (ov.mode, c.sweep.mode.as_deref()) {
                (Some(m), _) => m,
                (None, None) => defaults.mode,
                (None, Some(name)) => ProjectionMode::parse(name).ok_or_else(|| {
                    CliError::config("control.sweep.mode", "expected \"classic\" or \"hamiltonian\"")
                })?,
            };
            let forward = match c.sweep.forward.as_deref() {
                None | Some("nominal") => ForwardPass::Nominal,
                Some("frozen") => ForwardPass::FrozenNoise(NoiseStream::new(master_seed, 0)),
                Some(_) => {
                    return Err(CliError::config(
                        "control.sweep.forward",
                        "expected \"nominal\" or \"frozen\"",
                    ))
                }
            };
            let sweep = SweepConfig {
                max_iter: c.sweep.max_iter.unwrap_or(defaults.max_iter),
                tol: c.sweep.tol.unwrap_or(defaults.tol),
                relaxation: c.sweep.relaxation.unwrap_or(defaults.relaxation),
                mode,
                forward,
            };
            sweep.validate().map_err(|e| core_error("control.sweep", e))?;
            Some(ControlConfig { weights, sweep })
        }
    };

    Ok(RunConfig {
        model,
        init,
        grid,
        ensemble: EnsembleConfig {
            n_traj,
            master_seed,
            record_every,
        },
        analysis: AnalysisConfig {
            burn_in,
            n_bins,
            fit_window,
            infected_tolerance,
            component,
            second_seed,
        },
        control,
        output_dir: ov.out.clone().or(raw.output_dir).unwrap_or_else(|| "out".into()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[model]
lambda = 30.0
beta_a = 0.01
beta_i = 0.01
b = 0.2
mu = 2e-5
gamma = 0.5
delta_a = 0.2
delta_i = 0.2
alpha = 0.5
d = 0.0027

[init]
s = 1500.0
a = 5.0
i = 6.0
r = 25.0

[grid]
t_end = 100.0
"#;

    fn err_key(text: &str) -> String {
        match parse_config(text, &Overrides::default()) {
            Err(CliError::Config { key, .. }) => key,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(MINIMAL, &Overrides::default()).unwrap();
        assert_eq!(c.grid.dt, 0.002);
        assert_eq!(c.grid.n_steps, 50_000);
        assert_eq!(c.model.sigma, [0.0; 4]);
        assert_eq!(c.analysis.burn_in, 20.0);
        assert_eq!(c.analysis.fit_window, (50.0, 100.0));
        assert_eq!(c.analysis.n_bins, 50);
        assert_eq!(c.ensemble.record_every, 25);
        assert_eq!(c.analysis.second_seed, 1);
        assert!(c.control.is_none());
        assert_eq!(c.output_dir, PathBuf::from("out"));
    }

    #[test]
    fn overrides_apply_before_derived_defaults() {
        let ov = Overrides {
            t_end: Some(10.0),
            dt: Some(0.01),
            seed: Some(9),
            trajectories: Some(3),
            out: Some("x".into()),
            mode: None,
        };
        let c = parse_config(MINIMAL, &ov).unwrap();
        assert_eq!(c.grid.n_steps, 1000);
        assert_eq!(c.analysis.burn_in, 2.0);
        assert_eq!(c.ensemble.master_seed, 9);
        assert_eq!(c.ensemble.n_traj, 3);
        assert_eq!(c.output_dir, PathBuf::from("x"));
    }

    #[test]
    fn control_section_defaults() {
        let text = format!("{MINIMAL}\n[control]\np = [0.0, 1.0, 1.0]\nq = [1.0, 2.0]\n");
        let c = parse_config(&text, &Overrides::default()).unwrap();
        let ctl = c.control.unwrap();
        assert_eq!(ctl.weights.k, [0.0; 4]);
        assert_eq!(ctl.sweep, SweepConfig::default());
        let ov = Overrides {
            mode: Some(ProjectionMode::Classic),
            ..Overrides::default()
        };
        let c = parse_config(&text, &ov).unwrap();
        assert_eq!(c.control.unwrap().sweep.mode, ProjectionMode::Classic);
    }

    #[test]
    fn errors_name_the_key() {
        assert_eq!(err_key(&MINIMAL.replace("mu = 2e-5", "mu = 0.0")), "model.mu");
        assert_eq!(err_key(&MINIMAL.replace("gamma = 0.5", "gamma = -0.5")), "model.gamma");
        assert_eq!(err_key(&MINIMAL.replace("mu = 2e-5", "mu = \"fast\"")), "model.mu");
        assert_eq!(err_key(&MINIMAL.replace("mu = 2e-5\n", "")), "model");
        assert_eq!(err_key(&MINIMAL.replace("s = 1500.0", "s = -1.0")), "init.s");
        assert_eq!(err_key(&MINIMAL.replace("t_end = 100.0", "t_end = 100.0\nspeed = 1")), "grid.speed");
        assert_eq!(
            err_key(&MINIMAL.replace("d = 0.0027", "d = 0.0027\nsigma = [0.1, -0.1, 0.1, 0.1]")),
            "model.sigma[1]"
        );
        assert_eq!(err_key(&format!("{MINIMAL}\n[analysis]\nburn_in = 100.0\n")), "analysis.burn_in");
        assert_eq!(
            err_key(&format!("{MINIMAL}\n[control]\np = [0.0, 1.0, 1.0]\nq = [0.0, 2.0]\n")),
            "control.q1"
        );
        assert_eq!(
            err_key(&format!(
                "{MINIMAL}\n[control]\np = [0.0, 1.0, 1.0]\nq = [1.0, 2.0]\n[control.sweep]\nmode = \"best\"\n"
            )),
            "control.sweep.mode"
        );
        assert_eq!(err_key("not toml ["), "<document>");
    }
}
