//! The acceptance suite run by `sairs verify`, built on the shipped
//! example configs.

use std::fmt;
use std::hint::black_box;
use std::time::Instant;

use sairs_core::analysis::persistence_check_ensemble;
use sairs_core::control::{adjoint_gradient_error, stationarity_check, ObjectiveWeights};
use sairs_core::integrator::{euler_step, milstein_step, simulate_deterministic, simulate_trajectory};
use sairs_core::noise::NoiseStream;
use sairs_core::thresholds::{compute_extinction_index, compute_r0s};
use sairs_core::{Component, ControlValue, State};

use crate::commands::{self, control_run, extinction_summary, run_ensemble, stationary_pair};
use crate::config::{parse_config, Overrides, RunConfig};
use crate::error::Result;
use crate::output;

pub const EXAMPLES: [&str; 6] = [
    include_str!("../../../configs/example1.toml"),
    include_str!("../../../configs/example2.toml"),
    include_str!("../../../configs/example3.toml"),
    include_str!("../../../configs/example4.toml"),
    include_str!("../../../configs/example5.toml"),
    include_str!("../../../configs/example6.toml"),
];

/// Shipped config `n` (1-based).
pub fn example(n: usize) -> RunConfig {
    example_with(n, &Overrides::default())
}

pub fn example_with(n: usize, overrides: &Overrides) -> RunConfig {
    parse_config(EXAMPLES[n - 1], overrides).expect("shipped configs are valid")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub id: usize,
    pub name: &'static str,
    pub measured: String,
    pub threshold: String,
    pub pass: bool,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "criterion {:>2} {} {}: {} (threshold: {})",
            self.id,
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.measured,
            self.threshold
        )
    }
}

pub fn threshold_reproduction() -> Result<Outcome> {
    let p = example(1).model;
    let r0s = compute_r0s(&p);
    let calls = 10_000;
    let start = Instant::now();
    for _ in 0..calls {
        black_box(compute_r0s(black_box(&p)));
    }
    let per_call = start.elapsed().as_secs_f64() / calls as f64;
    Ok(Outcome {
        id: 1,
        name: "threshold reproduction",
        measured: format!("r0s = {r0s:.6}, {:.3e} s per call", per_call),
        threshold: "|r0s - 1.132| <= 0.001, < 1 ms".into(),
        pass: (r0s - 1.132).abs() <= 0.001 && per_call < 1e-3,
    })
}

pub fn extinction_sign() -> Result<Outcome> {
    let idx = compute_extinction_index(&example(4).model)?;
    Ok(Outcome {
        id: 2,
        name: "threshold sign agreement",
        measured: format!("extinction index = {idx:.6}"),
        threshold: "< 0 and |index + 0.3281| <= 0.0005".into(),
        pass: idx < 0.0 && (idx + 0.3281).abs() <= 0.0005,
    })
}

pub fn persistence() -> Result<Outcome> {
    let cfg = example(1);
    let e = run_ensemble(&cfg, None)?;
    let rep = persistence_check_ensemble(&e, &cfg.model)?;
    let fmt4 = |v: [f64; 4]| v.map(|x| format!("{x:.4}")).join(", ");
    Ok(Outcome {
        id: 3,
        name: "persistence (n_traj=200, T=500)",
        measured: format!("time averages S,A,I,R = [{}]", fmt4(rep.time_averages)),
        threshold: format!("each > bound [{}]", fmt4(rep.bounds)),
        pass: rep.all_satisfied(),
    })
}

pub fn extinction() -> Result<Outcome> {
    let cfg = example(4);
    let e = run_ensemble(&cfg, None)?;
    let x = extinction_summary(&cfg, &e)?;
    let n = x.paths.len();
    let a = &x.approach;
    let pass = x.decaying * 100 >= 95 * n && x.extinct * 100 >= 95 * n && a.trends_toward();
    Ok(Outcome {
        id: 4,
        name: "extinction (100 seeds, T=200)",
        measured: format!(
            "slope <= 0 in {}/{n}, terminal A+I < 1 in {}/{n}; last quarter: mean S {:.1} -> {:.1}, fitted slope {:.3}, \
             mean drift toward {} at {}/{} points",
            x.decaying,
            x.extinct,
            a.mean_s.first().copied().unwrap_or(f64::NAN),
            a.mean_s.last().copied().unwrap_or(f64::NAN),
            a.mean_slope.unwrap_or(f64::NAN),
            a.target,
            a.toward,
            a.times.len()
        ),
        threshold: ">= 95/100, >= 95/100, mean S fitted slope and endpoint move toward target".into(),
        pass,
    })
}

pub fn ergodicity() -> Result<Outcome> {
    let cfg = example(5);
    let (h1, _, d) = stationary_pair(&cfg)?;
    Ok(Outcome {
        id: 5,
        name: "ergodicity proxy (T=2000, burn-in 500, 50 bins)",
        measured: format!(
            "TV(I histograms, seeds {} and {}) = {d:.4} over {} samples each",
            cfg.ensemble.master_seed, cfg.analysis.second_seed, h1.n_samples
        ),
        threshold: "< 0.1".into(),
        pass: d < 0.1,
    })
}

pub fn scheme_correctness() -> Result<Outcome> {
    let cfg = example(1);
    let p = cfg.model.noise_free();
    let mut g = NoiseStream::new(11, 0).gaussian();
    let mut bitwise = true;
    for _ in 0..1000 {
        let x = State::from_array([0; 4].map(|_| 2000.0 * g.next_normal().abs()));
        let u = ControlValue::new(unit(g.next_normal()), unit(g.next_normal()));
        let z = [0; 4].map(|_| g.next_normal());
        let e = euler_step(&x, &p, Some(&u), cfg.grid.dt);
        let m = milstein_step(&x, &p, Some(&u), cfg.grid.dt, z)?;
        let want = e.to_array().map(|v| v.max(0.0));
        bitwise &= m.state.to_array().iter().zip(want).all(|(a, b)| a.to_bits() == b.to_bits());
    }
    let sde = simulate_trajectory(&cfg.init, &p, &cfg.grid, &NoiseStream::new(0, 0), None)?;
    let ode = simulate_deterministic(&cfg.init, &p, &cfg.grid)?;
    let rel = max_relative_gap(&sde.states, &ode.states);
    let worst_component = max_component_gap(&sde.states, &ode.states);
    Ok(Outcome {
        id: 6,
        name: "scheme correctness",
        measured: format!(
            "sigma=0 step bitwise equal to Euler: {bitwise}; max relative gap to RK4 over T={} = {rel:.3e} \
             (worst single compartment {worst_component:.3e})",
            cfg.grid.t_end
        ),
        threshold: "bitwise, < 1e-3".into(),
        pass: bitwise && rel < 1e-3,
    })
}

/// `max_k ‖x_k − y_k‖∞ / ‖y_k‖∞`, the state-vector relative error.
pub fn max_relative_gap(x: &[State], y: &[State]) -> f64 {
    let mut worst: f64 = 0.0;
    for (a, b) in x.iter().zip(y) {
        let (a, b) = (a.to_array(), b.to_array());
        let num = (0..4).map(|j| (a[j] - b[j]).abs()).fold(0.0, f64::max);
        let den = b.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if den > 0.0 {
            worst = worst.max(num / den);
        }
    }
    worst
}

/// `max |x − y| / max(|y|, 1)` over all states and compartments.
pub fn max_component_gap(x: &[State], y: &[State]) -> f64 {
    let mut worst: f64 = 0.0;
    for (a, b) in x.iter().zip(y) {
        for (u, v) in a.to_array().iter().zip(b.to_array()) {
            worst = worst.max((u - v).abs() / v.abs().max(1.0));
        }
    }
    worst
}

fn unit(z: f64) -> f64 {
    0.5 + 0.5 * z.tanh()
}

pub fn adjoint_consistency() -> Result<Outcome> {
    let p = example(1).model;
    let w = ObjectiveWeights {
        p: [1.0, 2.0, 3.0],
        q: [10.0, 20.0],
        k: [0.01, 0.02, 0.03, 0.04],
    };
    let mut g = NoiseStream::new(7, 0).gaussian();
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let x = State::from_array([0; 4].map(|_| 1.0 + 1000.0 * g.next_normal().abs()));
        let m = [0; 4].map(|_| 5.0 * g.next_normal());
        let u = ControlValue::new(unit(g.next_normal()), unit(g.next_normal()));
        worst = worst.max(adjoint_gradient_error(&x, &u, &m, &w, &p, 1e-5));
    }
    Ok(Outcome {
        id: 7,
        name: "adjoint consistency (20 random points)",
        measured: format!("max relative error = {worst:.3e}"),
        threshold: "< 1e-5".into(),
        pass: worst < 1e-5,
    })
}

pub fn control_criteria() -> Result<[Outcome; 2]> {
    let cfg = example(6);
    let ctl = cfg.control()?;
    let run = control_run(&cfg)?;
    let sol = &run.solution;
    let st = stationarity_check(sol, &ctl.weights, &cfg.model);
    let rep = &sol.report;
    let ra = run.terminal_ratio(Component::A);
    let ri = run.terminal_ratio(Component::I);
    let projection = Outcome {
        id: 8,
        name: "projection consistency (hamiltonian mode)",
        measured: format!(
            "max |dH/du|/Q = {:.3e} over {} unclamped points; sweep converged: {}",
            st.max_residual, st.unclamped_points, rep.converged
        ),
        threshold: "< 1e-6 on a converged sweep".into(),
        pass: rep.converged && st.unclamped_points > 0 && st.max_residual < 1e-6,
    };
    let efficacy = Outcome {
        id: 9,
        name: "control efficacy",
        measured: format!(
            "A(T) ratio = {ra:.4}, I(T) ratio = {ri:.4}; converged in {} iterations (last change {:.2e})",
            rep.iterations,
            rep.control_change_history.last().copied().unwrap_or(f64::NAN)
        ),
        threshold: format!("both <= 0.5, change < {} within {}", ctl.sweep.tol, ctl.sweep.max_iter),
        pass: ra <= 0.5 && ri <= 0.5 && rep.converged && rep.iterations <= 100,
    };
    Ok([projection, efficacy])
}

pub fn determinism() -> Result<Outcome> {
    let ov = Overrides {
        t_end: Some(50.0),
        trajectories: Some(16),
        ..Overrides::default()
    };
    let cfg = example_with(1, &ov);
    let render = |threads: usize| -> Result<(Vec<u8>, Vec<u8>)> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .expect("thread pool");
        pool.install(|| {
            let (traj, _) = commands::simulate_csv(&cfg)?;
            let e = run_ensemble(&cfg, None)?;
            Ok((traj, output::ensemble_csv(&e)))
        })
    };
    let first = render(1)?;
    let again = render(1)?;
    let wide = render(4)?;
    let pass = first == again && first == wide;
    Ok(Outcome {
        id: 10,
        name: "determinism",
        measured: format!(
            "trajectory CSV {} bytes, ensemble CSV {} bytes; identical across runs and 1/4 threads: {pass}",
            first.0.len(),
            first.1.len()
        ),
        threshold: "byte-identical".into(),
        pass,
    })
}

/// Every criterion, in order.
pub fn run_all() -> Result<Vec<Outcome>> {
    let [c8, c9] = control_criteria()?;
    Ok(vec![
        threshold_reproduction()?,
        extinction_sign()?,
        persistence()?,
        extinction()?,
        ergodicity()?,
        scheme_correctness()?,
        adjoint_consistency()?,
        c8,
        c9,
        determinism()?,
    ])
}
