//! Ensembles of independent trajectories.
//!
//! Trajectory `j` always draws from substream `(master_seed, j)`, and the
//! reduction walks records in index order, so a summary does not depend on
//! how the trajectories were scheduled.

use alloc::vec::Vec;

use crate::control::ControlGrid;
use crate::integrator::{simulate_with, TimeGrid};
use crate::model::{ModelParams, State};
use crate::noise::NoiseStream;
use crate::{Error, Result};

/// What one trajectory contributes to an ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct PathRecord {
    pub index: u64,
    /// States at the recorded grid indices.
    pub samples: Vec<State>,
    /// Left-Riemann time averages of S, A, I, R over the full grid.
    pub time_average: [f64; 4],
    pub terminal: State,
    pub truncation_events: u64,
}

/// Grid indices kept in an ensemble: every `record_every`-th point plus the
/// last one.
pub fn recorded_indices(grid: &TimeGrid, record_every: usize) -> Vec<usize> {
    let step = record_every.max(1);
    let mut idx: Vec<usize> = (0..=grid.n_steps).step_by(step).collect();
    if idx.last() != Some(&grid.n_steps) {
        idx.push(grid.n_steps);
    }
    idx
}

/// Simulates trajectory `index` at full resolution and keeps the recorded
/// subset of its states.
pub fn record_path(
    init: &State,
    params: &ModelParams,
    grid: &TimeGrid,
    master_seed: u64,
    index: u64,
    controls: Option<&ControlGrid>,
    record_every: usize,
) -> Result<PathRecord> {
    let step = record_every.max(1);
    let n = grid.n_steps;
    let mut samples = Vec::with_capacity(n / step + 2);
    let mut sums = [0.0; 4];
    let mut terminal = *init;
    let mut source = NoiseStream::new(master_seed, index).gaussian();
    let truncation_events = simulate_with(init, params, grid, &mut source, controls, |k, x| {
        if k < n {
            let v = x.to_array();
            for j in 0..4 {
                sums[j] += v[j];
            }
        }
        if k % step == 0 || k == n {
            samples.push(*x);
        }
        if k == n {
            terminal = *x;
        }
    })
    .map_err(|e| match e {
        Error::NonFiniteStep { step } => Error::Trajectory { index, step },
        other => other,
    })?;
    let scale = grid.dt / grid.horizon();
    Ok(PathRecord {
        index,
        samples,
        time_average: sums.map(|s| s * scale),
        terminal,
        truncation_events,
    })
}

/// Per-time statistics over an ensemble plus the per-trajectory records.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSummary {
    pub grid: TimeGrid,
    pub record_every: usize,
    pub times: Vec<f64>,
    pub mean: Vec<[f64; 4]>,
    pub q05: Vec<[f64; 4]>,
    pub q50: Vec<[f64; 4]>,
    pub q95: Vec<[f64; 4]>,
    pub paths: Vec<PathRecord>,
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * q;
    let lo = libm::floor(h) as usize;
    if lo + 1 >= n {
        return sorted[n - 1];
    }
    let frac = h - lo as f64;
    if frac == 0.0 {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    }
}

/// Mean computed as a running average; identical inputs give back their
/// value exactly.
pub fn running_mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut mean = 0.0;
    for (k, v) in values.into_iter().enumerate() {
        mean += (v - mean) / (k as f64 + 1.0);
    }
    mean
}

impl EnsembleSummary {
    /// Reduces records, which must be sorted by index and share one grid.
    pub fn from_records(
        grid: TimeGrid,
        record_every: usize,
        mut paths: Vec<PathRecord>,
    ) -> Result<Self> {
        if paths.is_empty() {
            return Err(Error::Empty { what: "ensemble" });
        }
        paths.sort_by_key(|p| p.index);
        let indices = recorded_indices(&grid, record_every);
        if paths.iter().any(|p| p.samples.len() != indices.len()) {
            return Err(Error::GridMismatch);
        }
        let times = indices.iter().map(|&k| grid.time(k)).collect();
        let n_times = indices.len();
        let mut mean = Vec::with_capacity(n_times);
        let mut q05 = Vec::with_capacity(n_times);
        let mut q50 = Vec::with_capacity(n_times);
        let mut q95 = Vec::with_capacity(n_times);
        let mut column = Vec::with_capacity(paths.len());
        for t in 0..n_times {
            let mut m = [0.0; 4];
            let mut a = [0.0; 4];
            let mut b = [0.0; 4];
            let mut c = [0.0; 4];
            for j in 0..4 {
                column.clear();
                column.extend(paths.iter().map(|p| p.samples[t].to_array()[j]));
                m[j] = running_mean(column.iter().copied());
                column.sort_by(f64::total_cmp);
                a[j] = quantile_sorted(&column, 0.05);
                b[j] = quantile_sorted(&column, 0.50);
                c[j] = quantile_sorted(&column, 0.95);
            }
            mean.push(m);
            q05.push(a);
            q50.push(b);
            q95.push(c);
        }
        Ok(Self {
            grid,
            record_every: record_every.max(1),
            times,
            mean,
            q05,
            q50,
            q95,
            paths,
        })
    }

    pub fn n_traj(&self) -> usize {
        self.paths.len()
    }

    /// Per-trajectory time averages in index order.
    pub fn time_averages(&self) -> Vec<[f64; 4]> {
        self.paths.iter().map(|p| p.time_average).collect()
    }

    pub fn terminal_states(&self) -> Vec<State> {
        self.paths.iter().map(|p| p.terminal).collect()
    }

    pub fn truncation_events(&self) -> u64 {
        self.paths.iter().map(|p| p.truncation_events).sum()
    }
}

/// Default recording stride: about `target` recorded points per trajectory.
pub fn default_record_every(grid: &TimeGrid, target: usize) -> usize {
    (grid.n_steps / target.max(1)).max(1)
}

/// Sequential ensemble run; `sairs` offers a parallel equivalent.
#[allow(clippy::too_many_arguments)]
pub fn run_ensemble(
    init: &State,
    params: &ModelParams,
    grid: &TimeGrid,
    n_traj: usize,
    master_seed: u64,
    controls: Option<&ControlGrid>,
    record_every: usize,
) -> Result<EnsembleSummary> {
    if n_traj == 0 {
        return Err(Error::Empty { what: "ensemble" });
    }
    let paths = (0..n_traj as u64)
        .map(|j| record_path(init, params, grid, master_seed, j, controls, record_every))
        .collect::<Result<Vec<_>>>()?;
    EnsembleSummary::from_records(*grid, record_every, paths)
}
