//! Fixed-step integration of the deterministic, stochastic and controlled
//! systems.
//!
//! The stochastic scheme is Milstein for diagonal linear noise:
//!
//! ```text
//! X' = X + f(X)Δt + σX√Δt ζ + ½σ²X(ζ² − 1)Δt
//! ```
//!
//! applied per compartment, followed by full truncation of negative
//! components to zero. The deterministic reference is classical RK4.

use alloc::vec::Vec;

use crate::control::ControlGrid;
use crate::model::{drift_controlled, Component, ControlValue, ModelParams, State};
use crate::noise::{NoiseStream, NormalSource};
use crate::{Error, Result};

/// Time step used throughout the examples.
pub const DEFAULT_DT: f64 = 0.002;

/// Uniform grid `t0, t0 + dt, …, t0 + n_steps·dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t0: f64,
    pub t_end: f64,
    pub dt: f64,
    pub n_steps: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, t_end: f64, dt: f64) -> Result<Self> {
        for (what, v) in [("t0", t0), ("t_end", t_end), ("dt", dt)] {
            if !v.is_finite() {
                return Err(Error::NonFinite { what });
            }
        }
        if !(dt > 0.0) {
            return Err(Error::OutOfRange {
                what: "dt",
                value: dt,
                expected: "> 0",
            });
        }
        if !(t_end > t0) {
            return Err(Error::OutOfRange {
                what: "t_end",
                value: t_end,
                expected: "> t0",
            });
        }
        let n = libm::round((t_end - t0) / dt);
        if n < 1.0 || n > usize::MAX as f64 {
            return Err(Error::OutOfRange {
                what: "n_steps",
                value: n,
                expected: ">= 1",
            });
        }
        Ok(Self {
            t0,
            t_end,
            dt,
            n_steps: n as usize,
        })
    }

    /// Grid on `[0, t_end]` with the default step.
    pub fn with_horizon(t_end: f64) -> Result<Self> {
        Self::new(0.0, t_end, DEFAULT_DT)
    }

    #[inline]
    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn horizon(&self) -> f64 {
        self.t_end - self.t0
    }

    pub fn n_points(&self) -> usize {
        self.n_steps + 1
    }

    /// First grid index whose time is at or after `t`.
    pub fn index_at_or_after(&self, t: f64) -> usize {
        if t <= self.t0 {
            return 0;
        }
        let k = libm::ceil((t - self.t0) / self.dt - 1e-9);
        (k as usize).min(self.n_steps)
    }
}

/// Result of one Milstein step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub state: State,
    /// Number of components that went negative and were set to zero.
    pub clamped: u32,
}

/// One explicit Euler step `x + f(x, u)·dt`, without truncation.
pub fn euler_step(state: &State, params: &ModelParams, u: Option<&ControlValue>, dt: f64) -> State {
    let f = drift_controlled(state, u.unwrap_or(&ControlValue::NONE), params);
    let x = state.to_array();
    State::from_array(core::array::from_fn(|k| x[k] + f[k] * dt))
}

/// One Milstein step driven by the standard normals `z`.
///
/// With every `σ_k = 0` the noise and correction terms are exactly `+0.0`,
/// so the result is bit-identical to [`euler_step`] (before truncation).
pub fn milstein_step(
    state: &State,
    params: &ModelParams,
    u: Option<&ControlValue>,
    dt: f64,
    z: [f64; 4],
) -> Result<Step> {
    let f = drift_controlled(state, u.unwrap_or(&ControlValue::NONE), params);
    let x = state.to_array();
    let sqrt_dt = libm::sqrt(dt);
    let mut out = [0.0; 4];
    let mut clamped = 0;
    for k in 0..4 {
        let sigma = params.sigma[k];
        let next = x[k] + f[k] * dt
            + sigma * x[k] * sqrt_dt * z[k]
            + 0.5 * sigma * sigma * x[k] * (z[k] * z[k] - 1.0) * dt;
        if !next.is_finite() {
            return Err(Error::NonFinite {
                what: "state after step",
            });
        }
        out[k] = if next < 0.0 {
            clamped += 1;
            0.0
        } else {
            next
        };
    }
    Ok(Step {
        state: State::from_array(out),
        clamped,
    })
}

/// Time series of states on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub grid: TimeGrid,
    /// `grid.n_steps + 1` states; the first is the initial state.
    pub states: Vec<State>,
    /// Control applied on each step interval, when the run was controlled.
    pub controls: Option<Vec<ControlValue>>,
    pub truncation_events: u64,
}

impl Trajectory {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.states.len()).map(|k| self.grid.time(k))
    }

    pub fn component(&self, c: Component) -> impl Iterator<Item = f64> + '_ {
        self.states.iter().map(move |x| x.get(c))
    }

    pub fn final_state(&self) -> State {
        *self.states.last().expect("trajectory always holds the initial state")
    }
}

fn check_controls(grid: &TimeGrid, controls: Option<&ControlGrid>) -> Result<()> {
    if let Some(c) = controls {
        if c.len() != grid.n_steps || c.grid.dt != grid.dt || c.grid.t0 != grid.t0 {
            return Err(Error::GridMismatch);
        }
    }
    Ok(())
}

/// Runs the Milstein scheme, reporting every grid state to `observe`
/// (index 0 is the initial state). Returns the number of truncation events.
///
/// Four normals are drawn per step even when the noise is switched off, so
/// controlled and uncontrolled runs on one stream see the same increments.
pub fn simulate_with<N, F>(
    init: &State,
    params: &ModelParams,
    grid: &TimeGrid,
    noise: &mut N,
    controls: Option<&ControlGrid>,
    mut observe: F,
) -> Result<u64>
where
    N: NormalSource + ?Sized,
    F: FnMut(usize, &State),
{
    init.validate()?;
    check_controls(grid, controls)?;
    let mut state = *init;
    let mut truncations = 0u64;
    observe(0, &state);
    for k in 0..grid.n_steps {
        let u = controls.map(|c| c.at(k));
        let z = noise.next4();
        let step = milstein_step(&state, params, u.as_ref(), grid.dt, z)
            .map_err(|_| Error::NonFiniteStep { step: k })?;
        truncations += u64::from(step.clamped);
        state = step.state;
        observe(k + 1, &state);
    }
    Ok(truncations)
}

/// One stochastic (optionally controlled) trajectory on its own substream.
pub fn simulate_trajectory(
    init: &State,
    params: &ModelParams,
    grid: &TimeGrid,
    noise: &NoiseStream,
    controls: Option<&ControlGrid>,
) -> Result<Trajectory> {
    let mut states = Vec::with_capacity(grid.n_points());
    let mut source = noise.gaussian();
    let truncation_events = simulate_with(init, params, grid, &mut source, controls, |_, x| {
        states.push(*x)
    })?;
    Ok(Trajectory {
        grid: *grid,
        states,
        controls: controls.map(|c| c.values().collect()),
        truncation_events,
    })
}

fn rk4_step(x: &State, u: &ControlValue, params: &ModelParams, dt: f64) -> State {
    let add = |x: &State, k: &[f64; 4], h: f64| {
        let a = x.to_array();
        State::from_array(core::array::from_fn(|j| a[j] + h * k[j]))
    };
    let k1 = drift_controlled(x, u, params);
    let k2 = drift_controlled(&add(x, &k1, 0.5 * dt), u, params);
    let k3 = drift_controlled(&add(x, &k2, 0.5 * dt), u, params);
    let k4 = drift_controlled(&add(x, &k3, dt), u, params);
    let a = x.to_array();
    State::from_array(core::array::from_fn(|j| {
        a[j] + dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
    }))
}

/// Noise-free reference solution by classical RK4.
pub fn simulate_deterministic(
    init: &State,
    params: &ModelParams,
    grid: &TimeGrid,
) -> Result<Trajectory> {
    simulate_deterministic_controlled(init, params, grid, None)
}

/// RK4 solution of the controlled drift with piecewise-constant controls.
pub fn simulate_deterministic_controlled(
    init: &State,
    params: &ModelParams,
    grid: &TimeGrid,
    controls: Option<&ControlGrid>,
) -> Result<Trajectory> {
    init.validate()?;
    check_controls(grid, controls)?;
    let mut states = Vec::with_capacity(grid.n_points());
    let mut truncation_events = 0;
    let mut x = *init;
    states.push(x);
    for k in 0..grid.n_steps {
        let u = controls.map_or(ControlValue::NONE, |c| c.at(k));
        let next = rk4_step(&x, &u, params, grid.dt).to_array();
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteStep { step: k });
        }
        let next = next.map(|v| {
            if v < 0.0 {
                truncation_events += 1;
                0.0
            } else {
                v
            }
        });
        x = State::from_array(next);
        states.push(x);
    }
    Ok(Trajectory {
        grid: *grid,
        states,
        controls: controls.map(|c| c.values().collect()),
        truncation_events,
    })
}
