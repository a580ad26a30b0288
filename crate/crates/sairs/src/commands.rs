//! The `sairs` subcommands.

use std::fmt;

use sairs_core::analysis::{
    extinction_check_samples, histogram_distance, persistence_check_ensemble, stationary_histogram,
    susceptible_approach, ExtinctionReport, Histogram, PersistenceReport, SusceptibleApproach,
};
use sairs_core::control::{
    forward_backward_sweep, stationarity_check, ControlGrid, SweepSolution,
};
use sairs_core::ensemble::{recorded_indices, EnsembleSummary};
use sairs_core::integrator::simulate_trajectory;
use sairs_core::noise::NoiseStream;
use sairs_core::thresholds::ThresholdReport;
use sairs_core::Component;

use crate::config::RunConfig;
use crate::error::Result;
use crate::output::{self, Outputs, Report};
use crate::run;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Thresholds,
    Simulate,
    Ensemble,
    Stationary,
    Control,
    Verify,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Command::Thresholds => "thresholds",
            Command::Simulate => "simulate",
            Command::Ensemble => "ensemble",
            Command::Stationary => "stationary",
            Command::Control => "control",
            Command::Verify => "verify",
        };
        f.write_str(name)
    }
}

/// Runs one of the config-driven commands, writing into
/// `cfg.output_dir`. On failure every file written so far is removed.
pub fn run_command(command: Command, cfg: &RunConfig) -> Result<Report> {
    let mut out = Outputs::create(&cfg.output_dir)?;
    let result = match command {
        Command::Thresholds => thresholds(cfg, &mut out),
        Command::Simulate => simulate(cfg, &mut out),
        Command::Ensemble => ensemble(cfg, &mut out),
        Command::Stationary => stationary(cfg, &mut out),
        Command::Control => control(cfg, &mut out),
        Command::Verify => unreachable!("verify does not take a run config"),
    };
    match result {
        Ok(mut report) => {
            for f in out.files() {
                report.push("file", f.display());
            }
            Ok(report)
        }
        Err(e) => {
            out.discard();
            Err(e)
        }
    }
}

pub fn threshold_report(t: &ThresholdReport) -> Report {
    let mut r = Report::default();
    r.push("m_const", t.m_const)
        .push("r0s", t.r0s)
        .push("beta_min", t.beta_min)
        .push("beta_max", t.beta_max)
        .push("h_const", t.h_const)
        .push("extinction_index", t.extinction_index)
        .push("predicts_persistence", t.predicts_persistence())
        .push("predicts_extinction", t.predicts_extinction());
    match t.persistence_bounds {
        Some(b) => r.push_list("persistence_bounds", &b),
        None => r.push("persistence_bounds", "absent"),
    };
    r
}

fn thresholds(cfg: &RunConfig, out: &mut Outputs) -> Result<Report> {
    let t = ThresholdReport::compute(&cfg.model)?;
    let r = threshold_report(&t);
    out.write("thresholds.txt", r.render().as_bytes())?;
    Ok(r)
}

/// Trajectory `0` of `master_seed`, thinned to every `record_every`-th
/// point, as CSV bytes.
pub fn simulate_csv(cfg: &RunConfig) -> Result<(Vec<u8>, u64)> {
    let noise = NoiseStream::new(cfg.ensemble.master_seed, 0);
    let traj = simulate_trajectory(&cfg.init, &cfg.model, &cfg.grid, &noise, None)?;
    let idx = recorded_indices(&cfg.grid, cfg.ensemble.record_every);
    let times: Vec<f64> = idx.iter().map(|&k| cfg.grid.time(k)).collect();
    let states: Vec<_> = idx.iter().map(|&k| traj.states[k]).collect();
    Ok((output::trajectory_csv(&times, &states, None), traj.truncation_events))
}

fn simulate(cfg: &RunConfig, out: &mut Outputs) -> Result<Report> {
    let (bytes, truncations) = simulate_csv(cfg)?;
    out.write("trajectory.csv", &bytes)?;
    let mut r = Report::default();
    r.push("master_seed", cfg.ensemble.master_seed)
        .push("n_steps", cfg.grid.n_steps)
        .push("truncation_events", truncations);
    Ok(r)
}

pub fn run_ensemble(cfg: &RunConfig, controls: Option<&ControlGrid>) -> Result<EnsembleSummary> {
    Ok(run::ensemble(
        &cfg.init,
        &cfg.model,
        &cfg.grid,
        cfg.ensemble.n_traj,
        cfg.ensemble.master_seed,
        controls,
        cfg.ensemble.record_every,
    )?)
}

/// Extinction diagnostics over every path of an ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtinctionSummary {
    pub paths: Vec<ExtinctionReport>,
    /// Paths whose `ln(A + I)` slope is non-positive.
    pub decaying: usize,
    /// Paths ending with `A + I` below the tolerance.
    pub extinct: usize,
    /// Ensemble-mean S over the last quarter of the horizon.
    pub approach: SusceptibleApproach,
}

pub fn extinction_summary(cfg: &RunConfig, e: &EnsembleSummary) -> Result<ExtinctionSummary> {
    let mut paths = Vec::with_capacity(e.n_traj());
    for p in &e.paths {
        let mut rep = extinction_check_samples(
            &e.times,
            &p.samples,
            &cfg.model,
            cfg.analysis.fit_window,
            cfg.analysis.infected_tolerance,
        )?;
        // The recorded samples may skip states; the terminal state is exact.
        rep.terminal_infected = p.terminal.a + p.terminal.i;
        rep.s_terminal = p.terminal.s;
        paths.push(rep);
    }
    let from = cfg.grid.t_end - 0.25 * cfg.grid.horizon();
    Ok(ExtinctionSummary {
        decaying: paths.iter().filter(|r| r.decaying()).count(),
        extinct: paths.iter().filter(|r| r.extinct()).count(),
        approach: susceptible_approach(e, &cfg.model, from),
        paths,
    })
}

fn persistence_lines(r: &mut Report, p: &PersistenceReport) {
    r.push_list("time_averages", &p.time_averages)
        .push_list("persistence_bounds", &p.bounds)
        .push(
            "persistence_satisfied",
            p.satisfied.map(|s| s.to_string()).join(","),
        );
}

fn ensemble(cfg: &RunConfig, out: &mut Outputs) -> Result<Report> {
    let t = ThresholdReport::compute(&cfg.model)?;
    let e = run_ensemble(cfg, None)?;
    out.write("ensemble.csv", &output::ensemble_csv(&e))?;
    let mut r = Report::default();
    r.push("n_traj", e.n_traj())
        .push("master_seed", cfg.ensemble.master_seed)
        .push("truncation_events", e.truncation_events())
        .push("r0s", t.r0s)
        .push("extinction_index", t.extinction_index);
    if t.predicts_persistence() {
        let p = persistence_check_ensemble(&e, &cfg.model)?;
        persistence_lines(&mut r, &p);
    }
    if t.predicts_extinction() {
        let x = extinction_summary(cfg, &e)?;
        let slopes: Vec<f64> = x.paths.iter().map(|p| p.log_slope.unwrap_or(f64::NEG_INFINITY)).collect();
        r.push("fit_window", format!("{},{}", cfg.analysis.fit_window.0, cfg.analysis.fit_window.1))
            .push("paths_decaying", x.decaying)
            .push("paths_extinct", x.extinct)
            .push("s_limit", x.approach.target)
            .push("s_trend_points", x.approach.times.len())
            .push("s_trend_toward", x.approach.toward)
            .push("s_mean_slope", x.approach.mean_slope.unwrap_or(f64::NAN))
            .push_list("log_slopes", &slopes);
    }
    out.write("ensemble.txt", r.render().as_bytes())?;
    Ok(r)
}

/// Histograms of trajectory 0 under `master_seed` and `second_seed`.
pub fn stationary_pair(cfg: &RunConfig) -> Result<(Histogram, Histogram, f64)> {
    let hist = |seed| -> Result<Histogram> {
        let traj = simulate_trajectory(&cfg.init, &cfg.model, &cfg.grid, &NoiseStream::new(seed, 0), None)?;
        Ok(stationary_histogram(
            &traj,
            cfg.analysis.burn_in,
            cfg.analysis.n_bins,
            cfg.analysis.component,
        )?)
    };
    let h1 = hist(cfg.ensemble.master_seed)?;
    let h2 = hist(cfg.analysis.second_seed)?;
    let d = histogram_distance(&h1, &h2)?;
    Ok((h1, h2, d))
}

fn stationary(cfg: &RunConfig, out: &mut Outputs) -> Result<Report> {
    let (h1, h2, d) = stationary_pair(cfg)?;
    let (s1, s2) = (cfg.ensemble.master_seed, cfg.analysis.second_seed);
    out.write(&format!("histogram_seed{s1}.csv"), &output::histogram_csv(&h1))?;
    out.write(&format!("histogram_seed{s2}.csv"), &output::histogram_csv(&h2))?;
    let mut r = Report::default();
    r.push("component", cfg.analysis.component.name())
        .push("burn_in", cfg.analysis.burn_in)
        .push("n_bins", cfg.analysis.n_bins)
        .push("seeds", format!("{s1},{s2}"))
        .push("samples", h1.n_samples)
        .push("total_variation", d);
    out.write("stationary.txt", r.render().as_bytes())?;
    Ok(r)
}

/// A sweep plus the stochastic comparison it is judged by.
#[derive(Debug, Clone)]
pub struct ControlRun {
    pub solution: SweepSolution,
    pub uncontrolled: EnsembleSummary,
    pub controlled: EnsembleSummary,
}

impl ControlRun {
    /// Controlled over uncontrolled ensemble mean at `t_end`.
    pub fn terminal_ratio(&self, c: Component) -> f64 {
        let j = c.index();
        self.controlled.mean.last().unwrap()[j] / self.uncontrolled.mean.last().unwrap()[j]
    }
}

pub fn control_run(cfg: &RunConfig) -> Result<ControlRun> {
    let ctl = cfg.control()?;
    let solution = forward_backward_sweep(&cfg.init, &cfg.model, &ctl.weights, &cfg.grid, &ctl.sweep)?;
    let uncontrolled = run_ensemble(cfg, None)?;
    let controlled = run_ensemble(cfg, Some(&solution.controls))?;
    Ok(ControlRun {
        solution,
        uncontrolled,
        controlled,
    })
}

fn control(cfg: &RunConfig, out: &mut Outputs) -> Result<Report> {
    let ctl = cfg.control()?;
    let run = control_run(cfg)?;
    let sol = &run.solution;
    out.write("controls.csv", &output::controls_csv(&sol.controls))?;
    out.write(
        "comparison.csv",
        &output::comparison_csv(&run.uncontrolled, &run.controlled),
    )?;
    let n = cfg.ensemble.n_traj;
    let seed = cfg.ensemble.master_seed;
    let j_ctl = run::objective(&cfg.init, &cfg.model, &ctl.weights, &sol.controls, n, seed)?;
    let zeros = ControlGrid::zeros(cfg.grid);
    let j_unc = run::objective(&cfg.init, &cfg.model, &ctl.weights, &zeros, n, seed)?;
    let st = stationarity_check(sol, &ctl.weights, &cfg.model);
    let rep = &sol.report;
    let mut r = Report::default();
    r.push("mode", ctl.sweep.mode.name())
        .push("relaxation", ctl.sweep.relaxation)
        .push("tol", ctl.sweep.tol)
        .push("converged", rep.converged)
        .push("iterations", rep.iterations)
        .push("final_objective", rep.final_objective)
        .push("stationarity_residual", st.max_residual)
        .push("unclamped_points", st.unclamped_points)
        .push("objective_mean_controlled", j_ctl.mean)
        .push("objective_se_controlled", j_ctl.std_error)
        .push("objective_mean_uncontrolled", j_unc.mean)
        .push("objective_se_uncontrolled", j_unc.std_error)
        .push("terminal_ratio_A", run.terminal_ratio(Component::A))
        .push("terminal_ratio_I", run.terminal_ratio(Component::I))
        .push_list("objective_history", &rep.objective_history)
        .push_list("control_change_history", &rep.control_change_history);
    out.write("sweep.txt", r.render().as_bytes())?;
    Ok(r)
}
