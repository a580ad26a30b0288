//! Optimal vaccination (`u1`) and isolation (`u2`) policies.
//!
//! The objective is
//!
//! ```text
//! J(u) = E[ ∫₀ᵀ (P₁S + P₂A + P₃I + ½Q₁u₁² + ½Q₂u₂²) dt + ½(k₁S² + k₂A² + k₃I² + k₄R²)(T) ]
//! ```
//!
//! and the Hamiltonian is `H = ⟨f(x,u), m⟩ + l(x,u) + ⟨g(x), n⟩`, where `l`
//! carries the running cost plus the quadratic state terms `½Σk_iX_i²`.
//! Costates follow `dm/dt = −∂H/∂x` backward from `m(T) = −k∘x(T)`.
//!
//! [`forward_backward_sweep`] alternates a forward state pass, a backward
//! costate pass (with the diffusion costates `n ≡ 0`) and a relaxed update
//! towards the pointwise-projected control.

use alloc::vec::Vec;

use crate::integrator::{simulate_deterministic_controlled, simulate_with, TimeGrid, Trajectory};
use crate::model::{diffusion, drift_controlled, ControlValue, ModelParams, State};
use crate::noise::NoiseStream;
use crate::{Error, Result};

/// Cost weights: running `P`, control effort `Q`, terminal `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveWeights {
    /// Running cost per susceptible, asymptomatic and infected individual.
    pub p: [f64; 3],
    pub q: [f64; 2],
    pub k: [f64; 4],
}

impl ObjectiveWeights {
    pub const ZERO: ObjectiveWeights = ObjectiveWeights {
        p: [0.0; 3],
        q: [0.0; 2],
        k: [0.0; 4],
    };

    pub fn validate(&self) -> Result<()> {
        let all = self.p.iter().chain(&self.q).chain(&self.k);
        for &w in all {
            if !w.is_finite() {
                return Err(Error::NonFinite { what: "weight" });
            }
            if w < 0.0 {
                return Err(Error::OutOfRange {
                    what: "weight",
                    value: w,
                    expected: ">= 0",
                });
            }
        }
        for (what, q) in [("q1", self.q[0]), ("q2", self.q[1])] {
            if q <= 0.0 {
                return Err(Error::OutOfRange {
                    what,
                    value: q,
                    expected: "> 0",
                });
            }
        }
        Ok(())
    }

    /// Running cost `l(x, u)` including the quadratic state terms.
    pub fn running_cost(&self, x: &State, u: &ControlValue) -> f64 {
        self.state_cost(x) + self.control_cost(u) + self.terminal_cost(x)
    }

    fn state_cost(&self, x: &State) -> f64 {
        self.p[0] * x.s + self.p[1] * x.a + self.p[2] * x.i
    }

    fn control_cost(&self, u: &ControlValue) -> f64 {
        0.5 * self.q[0] * u.u1 * u.u1 + 0.5 * self.q[1] * u.u2 * u.u2
    }

    /// `½(k₁S² + k₂A² + k₃I² + k₄R²)`.
    pub fn terminal_cost(&self, x: &State) -> f64 {
        let v = x.to_array();
        0.5 * (0..4).map(|j| self.k[j] * v[j] * v[j]).sum::<f64>()
    }
}

/// Costates `m` and diffusion costates `n`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AdjointState {
    pub m: [f64; 4],
    pub n: [f64; 4],
}

impl AdjointState {
    pub const fn new(m: [f64; 4], n: [f64; 4]) -> Self {
        Self { m, n }
    }

    /// Drift-only costate with `n = 0`.
    pub const fn drift_only(m: [f64; 4]) -> Self {
        Self { m, n: [0.0; 4] }
    }

    /// Terminal condition `m_i(T) = −k_i X_i(T)`.
    pub fn terminal(x: &State, weights: &ObjectiveWeights) -> Self {
        let v = x.to_array();
        Self::drift_only(core::array::from_fn(|j| -weights.k[j] * v[j]))
    }
}

/// Piecewise-constant controls, one value per step interval.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlGrid {
    pub grid: TimeGrid,
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
}

impl ControlGrid {
    pub fn new(grid: TimeGrid, u1: Vec<f64>, u2: Vec<f64>) -> Result<Self> {
        if u1.len() != grid.n_steps || u2.len() != grid.n_steps {
            return Err(Error::GridMismatch);
        }
        for (&a, &b) in u1.iter().zip(&u2) {
            ControlValue::new(a, b).validate()?;
        }
        Ok(Self { grid, u1, u2 })
    }

    pub fn constant(grid: TimeGrid, u: ControlValue) -> Result<Self> {
        u.validate()?;
        Ok(Self {
            grid,
            u1: alloc::vec![u.u1; grid.n_steps],
            u2: alloc::vec![u.u2; grid.n_steps],
        })
    }

    pub fn zeros(grid: TimeGrid) -> Self {
        Self {
            grid,
            u1: alloc::vec![0.0; grid.n_steps],
            u2: alloc::vec![0.0; grid.n_steps],
        }
    }

    #[inline]
    pub fn at(&self, k: usize) -> ControlValue {
        ControlValue::new(self.u1[k], self.u2[k])
    }

    pub fn len(&self) -> usize {
        self.u1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u1.is_empty()
    }

    pub fn values(&self) -> impl Iterator<Item = ControlValue> + '_ {
        self.u1.iter().zip(&self.u2).map(|(&a, &b)| ControlValue::new(a, b))
    }

    /// Largest pointwise difference over both controls.
    pub fn sup_distance(&self, other: &ControlGrid) -> f64 {
        let d1 = self.u1.iter().zip(&other.u1).map(|(a, b)| libm::fabs(a - b));
        let d2 = self.u2.iter().zip(&other.u2).map(|(a, b)| libm::fabs(a - b));
        d1.chain(d2).fold(0.0, f64::max)
    }
}

/// `H(x, u, m, n) = ⟨f(x,u), m⟩ + l(x,u) + ⟨g(x), n⟩`.
pub fn hamiltonian(
    x: &State,
    u: &ControlValue,
    adj: &AdjointState,
    weights: &ObjectiveWeights,
    params: &ModelParams,
) -> f64 {
    let f = drift_controlled(x, u, params);
    let g = diffusion(x, params);
    let mut h = weights.running_cost(x, u);
    for j in 0..4 {
        h += f[j] * adj.m[j] + g[j] * adj.n[j];
    }
    h
}

/// `∂H/∂u` in closed form.
pub fn hamiltonian_control_gradient(
    x: &State,
    u: &ControlValue,
    adj: &AdjointState,
    weights: &ObjectiveWeights,
    params: &ModelParams,
) -> [f64; 2] {
    let m = &adj.m;
    let force = params.force_of_infection(x.a, x.i);
    [
        weights.q[0] * u.u1 - (m[0] - m[3]) * x.s,
        weights.q[1] * u.u2 - (m[1] - m[0]) * force * x.s,
    ]
}

/// Costate drift `−∂H/∂x`.
///
/// The `k_i X_i` terms are the gradients of the quadratic state part of `l`.
pub fn adjoint_rhs(
    x: &State,
    u: &ControlValue,
    adj: &AdjointState,
    weights: &ObjectiveWeights,
    params: &ModelParams,
) -> [f64; 4] {
    let p = params;
    let [m1, m2, m3, m4] = adj.m;
    let [n1, n2, n3, n4] = adj.n;
    let [p1, p2, p3] = weights.p;
    let [k1, k2, k3, k4] = weights.k;
    let State { s, a, i, r } = *x;
    let keep = 1.0 - u.u2;
    let force = p.force_of_infection(a, i);
    let dforce_da = p.beta_a / ((1.0 + p.b * a) * (1.0 + p.b * a));
    let dforce_di = p.beta_i / ((1.0 + p.b * i) * (1.0 + p.b * i));
    [
        -p1 - k1 * s + (m1 - m2) * force * keep + m1 * (p.mu + u.u1) - m4 * u.u1
            - p.sigma[0] * n1,
        -p2 - k2 * a + (m1 - m2) * dforce_da * s * keep + m2 * (p.delta_a + p.mu + p.alpha)
            - m3 * p.alpha
            - m4 * p.delta_a
            - p.sigma[1] * n2,
        -p3 - k3 * i + (m1 - m2) * dforce_di * s * keep + m3 * (p.delta_i + p.mu + p.d)
            - m4 * p.delta_i
            - p.sigma[2] * n3,
        -k4 * r - m1 * p.gamma + m4 * (p.gamma + p.mu) - p.sigma[3] * n4,
    ]
}

/// How `u2*` is derived from the costates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProjectionMode {
    /// `u2* = clamp(((m₂ − m₄)A + (m₃ − m₄)I)/Q₂)`, the classic closed form.
    Classic,
    /// `u2* = clamp((m₂ − m₁)·F(A, I)·S/Q₂)`, the root of `∂H/∂u₂ = 0`.
    #[default]
    Hamiltonian,
}

impl ProjectionMode {
    pub fn name(self) -> &'static str {
        match self {
            ProjectionMode::Classic => "classic",
            ProjectionMode::Hamiltonian => "hamiltonian",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "classic" => Some(ProjectionMode::Classic),
            "hamiltonian" => Some(ProjectionMode::Hamiltonian),
            _ => None,
        }
    }
}

#[inline]
fn clamp_unit(v: f64) -> f64 {
    v.min(1.0).max(0.0)
}

/// Pointwise minimiser of `H` over `[0, 1]²`, clamped.
pub fn control_projection(
    x: &State,
    m: &[f64; 4],
    weights: &ObjectiveWeights,
    params: &ModelParams,
    mode: ProjectionMode,
) -> ControlValue {
    let [m1, m2, m3, m4] = *m;
    let u1 = clamp_unit((m1 - m4) * x.s / weights.q[0]);
    let u2 = match mode {
        ProjectionMode::Classic => clamp_unit(((m2 - m4) * x.a + (m3 - m4) * x.i) / weights.q[1]),
        ProjectionMode::Hamiltonian => {
            clamp_unit((m2 - m1) * params.force_of_infection(x.a, x.i) * x.s / weights.q[1])
        }
    };
    ControlValue::new(u1, u2)
}

/// Path along which the sweep integrates state and costates.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum ForwardPass {
    /// Noise-free RK4 path.
    #[default]
    Nominal,
    /// One Milstein realisation whose noise is reused on every iteration.
    FrozenNoise(NoiseStream),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepConfig {
    pub max_iter: usize,
    /// Sup-norm control change below which the sweep stops.
    pub tol: f64,
    /// Relaxation `ω ∈ (0, 1]` of `u ← (1 − ω)u + ω·u_projected`.
    pub relaxation: f64,
    pub mode: ProjectionMode,
    pub forward: ForwardPass,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            max_iter: 100,
            tol: 1e-4,
            relaxation: 0.5,
            mode: ProjectionMode::Hamiltonian,
            forward: ForwardPass::Nominal,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.relaxation > 0.0 && self.relaxation <= 1.0) {
            return Err(Error::OutOfRange {
                what: "relaxation",
                value: self.relaxation,
                expected: "within (0, 1]",
            });
        }
        if !(self.tol > 0.0) {
            return Err(Error::OutOfRange {
                what: "tol",
                value: self.tol,
                expected: "> 0",
            });
        }
        if self.max_iter == 0 {
            return Err(Error::OutOfRange {
                what: "max_iter",
                value: 0.0,
                expected: ">= 1",
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub iterations: usize,
    pub converged: bool,
    /// Objective of the returned controls along the forward path.
    pub final_objective: f64,
    /// Sup-norm change of the controls at each iteration.
    pub control_change_history: Vec<f64>,
    /// Objective of the controls used in each iteration's forward pass.
    pub objective_history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSolution {
    /// Relaxed controls after the last update.
    pub controls: ControlGrid,
    /// Projected controls of the last iteration.
    pub projected: ControlGrid,
    /// Forward path of the last iteration (`n_steps + 1` states).
    pub states: Vec<State>,
    /// Costates along that path (`n_steps + 1` values).
    pub costates: Vec<[f64; 4]>,
    pub report: SweepReport,
}

/// Deterministic objective of `controls` along a given state path.
pub fn path_objective(
    states: &[State],
    controls: &ControlGrid,
    weights: &ObjectiveWeights,
) -> f64 {
    let dt = controls.grid.dt;
    let running: f64 = states
        .iter()
        .zip(controls.values())
        .map(|(x, u)| weights.state_cost(x) + weights.control_cost(&u))
        .sum();
    let terminal = states.last().map_or(0.0, |x| weights.terminal_cost(x));
    running * dt + terminal
}

/// Integrates `dm/dt = adjoint_rhs` backward from `m(T) = −k∘x(T)` with
/// RK4; midpoint states are linear interpolations of the grid states.
pub fn backward_costates(
    states: &[State],
    controls: &ControlGrid,
    weights: &ObjectiveWeights,
    params: &ModelParams,
) -> Result<Vec<[f64; 4]>> {
    let n = controls.len();
    if states.len() != n + 1 {
        return Err(Error::GridMismatch);
    }
    let dt = controls.grid.dt;
    let mut out = alloc::vec![[0.0; 4]; n + 1];
    out[n] = AdjointState::terminal(&states[n], weights).m;
    let rhs = |x: &State, u: &ControlValue, m: [f64; 4]| {
        adjoint_rhs(x, u, &AdjointState::drift_only(m), weights, params)
    };
    let shift = |m: &[f64; 4], k: &[f64; 4], h: f64| -> [f64; 4] {
        core::array::from_fn(|j| m[j] - h * k[j])
    };
    for k in (0..n).rev() {
        let u = controls.at(k);
        let hi = &states[k + 1];
        let lo = &states[k];
        let mid = State::from_array(core::array::from_fn(|j| {
            0.5 * (hi.to_array()[j] + lo.to_array()[j])
        }));
        let m = out[k + 1];
        let k1 = rhs(hi, &u, m);
        let k2 = rhs(&mid, &u, shift(&m, &k1, 0.5 * dt));
        let k3 = rhs(&mid, &u, shift(&m, &k2, 0.5 * dt));
        let k4 = rhs(lo, &u, shift(&m, &k3, dt));
        let next: [f64; 4] = core::array::from_fn(|j| {
            m[j] - dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
        });
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteStep { step: k });
        }
        out[k] = next;
    }
    Ok(out)
}

fn forward_path(
    init: &State,
    params: &ModelParams,
    grid: &TimeGrid,
    controls: &ControlGrid,
    forward: &ForwardPass,
) -> Result<Vec<State>> {
    match forward {
        ForwardPass::Nominal => {
            simulate_deterministic_controlled(init, params, grid, Some(controls))
                .map(|t: Trajectory| t.states)
        }
        ForwardPass::FrozenNoise(noise) => {
            let mut states = Vec::with_capacity(grid.n_points());
            let mut source = noise.gaussian();
            simulate_with(init, params, grid, &mut source, Some(controls), |_, x| {
                states.push(*x)
            })?;
            Ok(states)
        }
    }
}

/// Forward-backward sweep for the optimal controls.
///
/// Starts from `u ≡ 0`. Failing to converge within `max_iter` is reported
/// through `report.converged`, not as an error.
pub fn forward_backward_sweep(
    init: &State,
    params: &ModelParams,
    weights: &ObjectiveWeights,
    grid: &TimeGrid,
    config: &SweepConfig,
) -> Result<SweepSolution> {
    params.validate()?;
    weights.validate()?;
    config.validate()?;
    init.validate()?;

    let omega = config.relaxation;
    let mut controls = ControlGrid::zeros(*grid);
    let mut projected = ControlGrid::zeros(*grid);
    let mut changes = Vec::new();
    let mut objectives = Vec::new();
    let mut converged = false;
    let mut states = Vec::new();
    let mut costates = Vec::new();

    for _ in 0..config.max_iter {
        states = forward_path(init, params, grid, &controls, &config.forward)?;
        objectives.push(path_objective(&states, &controls, weights));
        costates = backward_costates(&states, &controls, weights, params)?;

        for k in 0..grid.n_steps {
            let u = control_projection(&states[k], &costates[k], weights, params, config.mode);
            projected.u1[k] = u.u1;
            projected.u2[k] = u.u2;
        }
        let mut change: f64 = 0.0;
        for k in 0..grid.n_steps {
            let u1 = (1.0 - omega) * controls.u1[k] + omega * projected.u1[k];
            let u2 = (1.0 - omega) * controls.u2[k] + omega * projected.u2[k];
            change = change
                .max(libm::fabs(u1 - controls.u1[k]))
                .max(libm::fabs(u2 - controls.u2[k]));
            controls.u1[k] = clamp_unit(u1);
            controls.u2[k] = clamp_unit(u2);
        }
        changes.push(change);
        if change < config.tol {
            converged = true;
            break;
        }
    }

    let final_states = forward_path(init, params, grid, &controls, &config.forward)?;
    let final_objective = path_objective(&final_states, &controls, weights);
    Ok(SweepSolution {
        controls,
        projected,
        states,
        costates,
        report: SweepReport {
            iterations: changes.len(),
            converged,
            final_objective,
            control_change_history: changes,
            objective_history: objectives,
        },
    })
}

/// Largest relative gap between [`adjoint_rhs`] and `−∂H/∂x` from central
/// differences of [`hamiltonian`] with `n = 0` and step `rel_step·max(|x_j|, 1)`.
pub fn adjoint_gradient_error(
    x: &State,
    u: &ControlValue,
    m: &[f64; 4],
    weights: &ObjectiveWeights,
    params: &ModelParams,
    rel_step: f64,
) -> f64 {
    let adj = AdjointState::drift_only(*m);
    let analytic = adjoint_rhs(x, u, &adj, weights, params);
    let base = x.to_array();
    let mut worst: f64 = 0.0;
    for j in 0..4 {
        let h = rel_step * libm::fmax(libm::fabs(base[j]), 1.0);
        let at = |d: f64| {
            let mut v = base;
            v[j] += d;
            hamiltonian(&State::from_array(v), u, &adj, weights, params)
        };
        let fd = -(at(h) - at(-h)) / (2.0 * h);
        let scale = libm::fmax(libm::fabs(analytic[j]), libm::fabs(fd));
        if scale > 0.0 {
            worst = worst.max(libm::fabs(analytic[j] - fd) / scale);
        }
    }
    worst
}

/// `∂H/∂u` at the unclamped projected controls of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationarityCheck {
    /// Largest `|∂H/∂u_j| / Q_j` over the unclamped points.
    pub max_residual: f64,
    pub unclamped_points: usize,
    pub total_points: usize,
}

/// Central differences (step `1e-3`; `H` is quadratic in `u`) of
/// [`hamiltonian`] at the projected controls with the final costates.
pub fn stationarity_check(
    solution: &SweepSolution,
    weights: &ObjectiveWeights,
    params: &ModelParams,
) -> StationarityCheck {
    let h = 1e-3;
    let mut worst: f64 = 0.0;
    let mut unclamped = 0;
    let n = solution.projected.len();
    for k in 0..n {
        let x = &solution.states[k];
        let adj = AdjointState::drift_only(solution.costates[k]);
        let u = solution.projected.at(k);
        let hh = |u1, u2| hamiltonian(x, &ControlValue::new(u1, u2), &adj, weights, params);
        for (j, v) in [u.u1, u.u2].into_iter().enumerate() {
            if v <= 0.0 || v >= 1.0 {
                continue;
            }
            unclamped += 1;
            let g = if j == 0 {
                (hh(v + h, u.u2) - hh(v - h, u.u2)) / (2.0 * h)
            } else {
                (hh(u.u1, v + h) - hh(u.u1, v - h)) / (2.0 * h)
            };
            worst = worst.max(libm::fabs(g) / weights.q[j]);
        }
    }
    StationarityCheck {
        max_residual: worst,
        unclamped_points: unclamped,
        total_points: 2 * n,
    }
}

/// Monte Carlo estimate of `J(u)` with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_traj: usize,
}

impl ObjectiveEstimate {
    /// Reduces per-trajectory costs in the given order.
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Empty { what: "cost samples" });
        }
        // Running mean: identical samples reproduce their value exactly.
        let mut mean = 0.0;
        for (k, &c) in samples.iter().enumerate() {
            mean += (c - mean) / (k as f64 + 1.0);
        }
        let n = samples.len();
        let std_error = if n > 1 {
            let ss: f64 = samples.iter().map(|c| (c - mean) * (c - mean)).sum();
            libm::sqrt(ss / (n as f64 - 1.0) / n as f64)
        } else {
            0.0
        };
        Ok(Self {
            mean,
            std_error,
            n_traj: n,
        })
    }
}

/// Realised cost of one controlled trajectory on `noise`.
pub fn trajectory_cost(
    init: &State,
    params: &ModelParams,
    weights: &ObjectiveWeights,
    controls: &ControlGrid,
    noise: &NoiseStream,
) -> Result<f64> {
    let n = controls.len();
    let mut running = 0.0;
    let mut terminal = 0.0;
    let mut source = noise.gaussian();
    simulate_with(init, params, &controls.grid, &mut source, Some(controls), |k, x| {
        if k < n {
            running += weights.state_cost(x) + weights.control_cost(&controls.at(k));
        } else {
            terminal = weights.terminal_cost(x);
        }
    })?;
    Ok(running * controls.grid.dt + terminal)
}

/// Sequential Monte Carlo estimate of the objective over `n_traj`
/// substreams `0..n_traj` of `master_seed`.
pub fn objective_estimate(
    init: &State,
    params: &ModelParams,
    weights: &ObjectiveWeights,
    controls: &ControlGrid,
    n_traj: usize,
    master_seed: u64,
) -> Result<ObjectiveEstimate> {
    let mut costs = Vec::with_capacity(n_traj);
    for j in 0..n_traj as u64 {
        let noise = NoiseStream::new(master_seed, j);
        let c = trajectory_cost(init, params, weights, controls, &noise).map_err(|e| match e {
            Error::NonFiniteStep { step } => Error::Trajectory { index: j, step },
            other => other,
        })?;
        costs.push(c);
    }
    ObjectiveEstimate::from_samples(&costs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::example1;

    fn weights() -> ObjectiveWeights {
        ObjectiveWeights {
            p: [1.0, 2.0, 3.0],
            q: [10.0, 20.0],
            k: [0.1, 0.2, 0.3, 0.4],
        }
    }

    fn x0() -> State {
        State::new(1500.0, 5.0, 6.0, 25.0)
    }

    #[test]
    fn hamiltonian_reductions() {
        let p = example1();
        let w = weights();
        let x = x0();
        let zero = AdjointState::default();
        assert_eq!(
            hamiltonian(&x, &ControlValue::NONE, &zero, &w, &p),
            w.running_cost(&x, &ControlValue::NONE)
        );

        let m = AdjointState::drift_only([1.5, -2.0, 0.5, 3.0]);
        let h = hamiltonian(&State::ORIGIN, &ControlValue::NONE, &m, &w, &p);
        assert_eq!(h, p.lambda * 1.5);

        let u = ControlValue::new(0.3, 0.6);
        let h = hamiltonian(&x, &u, &m, &ObjectiveWeights::ZERO, &p);
        let f = drift_controlled(&x, &u, &p);
        let dot: f64 = (0..4).map(|j| f[j] * m.m[j]).sum();
        assert!((h - dot).abs() <= 1e-12 * dot.abs());
    }

    #[test]
    fn adjoint_vanishes_without_weights_or_costates() {
        let r = adjoint_rhs(
            &x0(),
            &ControlValue::new(0.2, 0.4),
            &AdjointState::default(),
            &ObjectiveWeights::ZERO,
            &example1(),
        );
        assert_eq!(r, [0.0; 4]);
    }

    #[test]
    fn adjoint_recovered_line() {
        let p = example1();
        let adj = AdjointState::drift_only([0.0, 1.0, 2.0, 0.7]);
        let r = adjoint_rhs(&x0(), &ControlValue::NONE, &adj, &ObjectiveWeights::ZERO, &p);
        assert_eq!(r[3], 0.7 * (p.gamma + p.mu));
    }

    #[test]
    fn projection_zero_gradient() {
        let p = example1();
        let m = [2.0, 2.0, 2.0, 2.0];
        for mode in [ProjectionMode::Classic, ProjectionMode::Hamiltonian] {
            assert_eq!(
                control_projection(&x0(), &m, &weights(), &p, mode),
                ControlValue::NONE
            );
        }
    }

    #[test]
    fn projection_clamps() {
        let p = example1();
        let w = ObjectiveWeights {
            q: [300.0, 1.0],
            ..weights()
        };
        // (m1 - m4) S / Q1 = 1 * 1500 / 300 = 5
        let u = control_projection(&x0(), &[1.0, 0.0, 0.0, 0.0], &w, &p, ProjectionMode::Classic);
        assert_eq!(u.u1, 1.0);
        // -3
        let u = control_projection(&x0(), &[-0.6, 0.0, 0.0, 0.0], &w, &p, ProjectionMode::Classic);
        assert_eq!(u.u1, 0.0);
    }

    #[test]
    fn hamiltonian_projection_zeroes_gradient() {
        let p = example1();
        let w = ObjectiveWeights {
            q: [3000.0, 500.0],
            ..weights()
        };
        let m = [0.9, 1.2, 0.4, 0.2];
        let u = control_projection(&x0(), &m, &w, &p, ProjectionMode::Hamiltonian);
        assert!(u.u1 > 0.0 && u.u1 < 1.0 && u.u2 > 0.0 && u.u2 < 1.0, "{u:?}");
        let g = hamiltonian_control_gradient(&x0(), &u, &AdjointState::drift_only(m), &w, &p);
        assert!(g[0].abs() < 1e-10 * w.q[0] && g[1].abs() < 1e-10 * w.q[1], "{g:?}");
    }

    #[test]
    fn analytic_control_gradient_matches_differences() {
        let p = example1();
        let w = weights();
        let adj = AdjointState::new([0.3, -0.2, 0.5, 0.1], [0.01, 0.02, -0.03, 0.04]);
        let u = ControlValue::new(0.4, 0.3);
        let g = hamiltonian_control_gradient(&x0(), &u, &adj, &w, &p);
        let h = 1e-3;
        let hh = |u1, u2| hamiltonian(&x0(), &ControlValue::new(u1, u2), &adj, &w, &p);
        let d1 = (hh(u.u1 + h, u.u2) - hh(u.u1 - h, u.u2)) / (2.0 * h);
        let d2 = (hh(u.u1, u.u2 + h) - hh(u.u1, u.u2 - h)) / (2.0 * h);
        assert!((g[0] - d1).abs() < 1e-7 * (1.0 + d1.abs()));
        assert!((g[1] - d2).abs() < 1e-7 * (1.0 + d2.abs()));
    }

    #[test]
    fn terminal_condition_is_negative_weighted_state() {
        let adj = AdjointState::terminal(&x0(), &weights());
        assert_eq!(adj.m, [-150.0, -1.0, -1.7999999999999998, -10.0]);
        assert_eq!(adj.n, [0.0; 4]);
    }

    #[test]
    fn objective_with_zero_weights_is_zero() {
        let p = example1();
        let grid = TimeGrid::new(0.0, 1.0, 0.01).unwrap();
        let c = ControlGrid::constant(grid, ControlValue::new(0.5, 0.5)).unwrap();
        let est = objective_estimate(&x0(), &p, &ObjectiveWeights::ZERO, &c, 4, 1).unwrap();
        assert_eq!(est.mean, 0.0);
        assert_eq!(est.std_error, 0.0);
    }

    #[test]
    fn objective_control_only_cost() {
        let p = example1();
        let grid = TimeGrid::new(0.0, 2.0, 0.01).unwrap();
        let c = ControlGrid::constant(grid, ControlValue::new(0.3, 0.8)).unwrap();
        let w = ObjectiveWeights {
            p: [0.0; 3],
            q: [4.0, 6.0],
            k: [0.0; 4],
        };
        let est = objective_estimate(&x0(), &p, &w, &c, 3, 5).unwrap();
        let want = 2.0 * (4.0 * 0.09 + 6.0 * 0.64) / 2.0;
        assert!((est.mean - want).abs() < 1e-12 * want, "{} vs {want}", est.mean);
    }

    #[test]
    fn noise_free_objective_independent_of_ensemble_size() {
        let p = example1().noise_free();
        let grid = TimeGrid::new(0.0, 1.0, 0.01).unwrap();
        let c = ControlGrid::constant(grid, ControlValue::new(0.1, 0.2)).unwrap();
        let one = objective_estimate(&x0(), &p, &weights(), &c, 1, 9).unwrap();
        let many = objective_estimate(&x0(), &p, &weights(), &c, 100, 9).unwrap();
        assert_eq!(one.mean, many.mean);
        assert_eq!(many.std_error, 0.0);
    }

    #[test]
    fn sweep_without_incentive_stays_off() {
        let p = example1();
        let w = ObjectiveWeights {
            p: [0.0; 3],
            q: [1.0, 1.0],
            k: [0.0; 4],
        };
        let grid = TimeGrid::new(0.0, 5.0, 0.01).unwrap();
        let sol = forward_backward_sweep(&x0(), &p, &w, &grid, &SweepConfig::default()).unwrap();
        assert!(sol.report.converged);
        assert!(sol.report.iterations <= 2);
        assert!(sol.controls.u1.iter().chain(&sol.controls.u2).all(|&u| u == 0.0));
    }

    #[test]
    fn sweep_with_huge_tolerance_stops_at_once() {
        let p = example1();
        let grid = TimeGrid::new(0.0, 5.0, 0.01).unwrap();
        let cfg = SweepConfig {
            tol: 1e9,
            ..SweepConfig::default()
        };
        let sol = forward_backward_sweep(&x0(), &p, &weights(), &grid, &cfg).unwrap();
        assert!(sol.report.converged);
        assert_eq!(sol.report.iterations, 1);
        assert_eq!(sol.report.objective_history.len(), 1);
    }

    #[test]
    fn sweep_terminal_costate_matches_final_state() {
        let p = example1();
        let grid = TimeGrid::new(0.0, 2.0, 0.01).unwrap();
        let cfg = SweepConfig {
            max_iter: 3,
            ..SweepConfig::default()
        };
        let sol = forward_backward_sweep(&x0(), &p, &weights(), &grid, &cfg).unwrap();
        let last = sol.states.last().unwrap();
        assert_eq!(
            *sol.costates.last().unwrap(),
            AdjointState::terminal(last, &weights()).m
        );
        assert!(sol
            .controls
            .u1
            .iter()
            .chain(&sol.controls.u2)
            .all(|u| (0.0..=1.0).contains(u)));
    }

    #[test]
    fn sweep_config_validation() {
        let bad = SweepConfig {
            relaxation: 0.0,
            ..SweepConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = SweepConfig {
            tol: 0.0,
            ..SweepConfig::default()
        };
        assert!(bad.validate().is_err());
        let w = ObjectiveWeights {
            q: [0.0, 1.0],
            ..weights()
        };
        assert!(w.validate().is_err());
    }

    #[test]
    fn control_grid_rejects_out_of_range() {
        let grid = TimeGrid::new(0.0, 1.0, 0.5).unwrap();
        assert!(ControlGrid::new(grid, alloc::vec![0.0, 1.2], alloc::vec![0.0, 0.0]).is_err());
        assert_eq!(
            ControlGrid::new(grid, alloc::vec![0.0], alloc::vec![0.0]),
            Err(Error::GridMismatch)
        );
    }
}
