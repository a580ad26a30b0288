//! Parallel ensembles. Results match the sequential versions in
//! `sairs_core` bit for bit, whatever the thread count.

use rayon::prelude::*;

use sairs_core::control::{trajectory_cost, ControlGrid, ObjectiveEstimate, ObjectiveWeights};
use sairs_core::ensemble::{record_path, EnsembleSummary};
use sairs_core::integrator::TimeGrid;
use sairs_core::noise::NoiseStream;
use sairs_core::{Error, ModelParams, State};

pub fn ensemble(
    init: &State,
    params: &ModelParams,
    grid: &TimeGrid,
    n_traj: usize,
    master_seed: u64,
    controls: Option<&ControlGrid>,
    record_every: usize,
) -> Result<EnsembleSummary, Error> {
    if n_traj == 0 {
        return Err(Error::Empty { what: "ensemble" });
    }
    let paths = (0..n_traj as u64)
        .into_par_iter()
        .map(|j| record_path(init, params, grid, master_seed, j, controls, record_every))
        .collect::<Result<Vec<_>, _>>()?;
    EnsembleSummary::from_records(*grid, record_every, paths)
}

pub fn objective(
    init: &State,
    params: &ModelParams,
    weights: &ObjectiveWeights,
    controls: &ControlGrid,
    n_traj: usize,
    master_seed: u64,
) -> Result<ObjectiveEstimate, Error> {
    let costs = (0..n_traj as u64)
        .into_par_iter()
        .map(|j| {
            trajectory_cost(init, params, weights, controls, &NoiseStream::new(master_seed, j))
                .map_err(|e| match e {
                    Error::NonFiniteStep { step } => Error::Trajectory { index: j, step },
                    other => other,
                })
        })
        .collect::<Result<Vec<_>, _>>()?;
    ObjectiveEstimate::from_samples(&costs)
}
