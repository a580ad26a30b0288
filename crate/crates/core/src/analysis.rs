//! Finite-horizon statistics for persistence, extinction and stationarity.

use alloc::vec::Vec;

use crate::ensemble::{running_mean, EnsembleSummary};
use crate::integrator::Trajectory;
use crate::model::{drift, Component, ModelParams, State};
use crate::thresholds::{compute_extinction_index, compute_persistence_bounds};
use crate::{Error, Result};

/// `(1/(t_end − t0))·Σ x_k·dt` over the left endpoints of the grid.
pub fn time_average(traj: &Trajectory, component: Component) -> Result<f64> {
    if traj.states.len() < 2 {
        return Err(Error::Empty { what: "trajectory" });
    }
    let n = traj.states.len() - 1;
    let sum: f64 = traj.states[..n].iter().map(|x| x.get(component)).sum();
    Ok(sum * traj.grid.dt / traj.grid.horizon())
}

/// Ensemble time averages against their persistence lower bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PersistenceReport {
    pub time_averages: [f64; 4],
    pub bounds: [f64; 4],
    pub satisfied: [bool; 4],
    pub horizon: f64,
    pub n_traj: usize,
}

impl PersistenceReport {
    pub fn all_satisfied(&self) -> bool {
        self.satisfied.iter().all(|&s| s)
    }
}

/// Averages per-trajectory time averages and compares each compartment with
/// its bound (strict inequality). Values are sorted before averaging so the
/// result does not depend on trajectory order.
pub fn persistence_check(
    time_averages: &[[f64; 4]],
    params: &ModelParams,
    horizon: f64,
) -> Result<PersistenceReport> {
    let bounds = compute_persistence_bounds(params)?;
    if time_averages.is_empty() {
        return Err(Error::Empty { what: "ensemble" });
    }
    let mut avg = [0.0; 4];
    let mut column: Vec<f64> = Vec::with_capacity(time_averages.len());
    for (j, slot) in avg.iter_mut().enumerate() {
        column.clear();
        column.extend(time_averages.iter().map(|t| t[j]));
        column.sort_by(f64::total_cmp);
        *slot = running_mean(column.iter().copied());
    }
    Ok(PersistenceReport {
        time_averages: avg,
        bounds,
        satisfied: core::array::from_fn(|j| avg[j] > bounds[j]),
        horizon,
        n_traj: time_averages.len(),
    })
}

pub fn persistence_check_ensemble(
    ensemble: &EnsembleSummary,
    params: &ModelParams,
) -> Result<PersistenceReport> {
    persistence_check(&ensemble.time_averages(), params, ensemble.grid.horizon())
}

/// Exponential decay of `A + I` on one trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtinctionReport {
    /// Least-squares slope of `ln(A + I)` over the fit window; `None` when
    /// fewer than two positive points are available.
    pub log_slope: Option<f64>,
    pub fit_points: usize,
    /// `A + I` reached zero inside the window and the fit stopped there.
    pub truncated: bool,
    pub terminal_infected: f64,
    pub s_terminal: f64,
    /// `Λ/μ`, the limit of S under extinction.
    pub s_limit: f64,
    /// Extinction index, the theoretical upper bound on the slope.
    pub predicted_bound: f64,
    pub infected_tolerance: f64,
}

impl ExtinctionReport {
    /// Slope is non-positive, or undefined because `A + I` hit zero.
    pub fn decaying(&self) -> bool {
        match self.log_slope {
            Some(s) => s <= 0.0,
            None => self.truncated,
        }
    }

    pub fn extinct(&self) -> bool {
        self.terminal_infected < self.infected_tolerance
    }
}

/// Ordinary least-squares slope of `y` against `t`.
pub fn least_squares_slope(t: &[f64], y: &[f64]) -> Option<f64> {
    let n = t.len().min(y.len());
    if n < 2 {
        return None;
    }
    let tm = t[..n].iter().sum::<f64>() / n as f64;
    let ym = y[..n].iter().sum::<f64>() / n as f64;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for k in 0..n {
        sxy += (t[k] - tm) * (y[k] - ym);
        sxx += (t[k] - tm) * (t[k] - tm);
    }
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Fits `ln(A + I)` over `window = (t_a, t_b)` and reports terminal values.
pub fn extinction_check(
    traj: &Trajectory,
    params: &ModelParams,
    window: (f64, f64),
    infected_tolerance: f64,
) -> Result<ExtinctionReport> {
    let times: Vec<f64> = traj.times().collect();
    extinction_check_samples(&times, &traj.states, params, window, infected_tolerance)
}

/// [`extinction_check`] on a (possibly thinned) series of states at `times`.
pub fn extinction_check_samples(
    times: &[f64],
    states: &[State],
    params: &ModelParams,
    window: (f64, f64),
    infected_tolerance: f64,
) -> Result<ExtinctionReport> {
    if states.is_empty() {
        return Err(Error::Empty { what: "trajectory" });
    }
    if times.len() != states.len() {
        return Err(Error::GridMismatch);
    }
    let eps = 1e-9 * libm::fmax(libm::fabs(window.1), 1.0);
    let mut t = Vec::new();
    let mut y = Vec::new();
    let mut truncated = false;
    for (&tk, x) in times.iter().zip(states) {
        if tk < window.0 - eps || tk > window.1 + eps {
            continue;
        }
        let infected = x.a + x.i;
        if infected <= 0.0 {
            truncated = true;
            break;
        }
        t.push(tk);
        y.push(libm::log(infected));
    }
    let terminal = states[states.len() - 1];
    Ok(ExtinctionReport {
        log_slope: least_squares_slope(&t, &y),
        fit_points: t.len(),
        truncated,
        terminal_infected: terminal.a + terminal.i,
        s_terminal: terminal.s,
        s_limit: params.lambda / params.mu,
        predicted_bound: compute_extinction_index(params)?,
        infected_tolerance,
    })
}

/// Direction of the ensemble-mean susceptible curve relative to `Λ/μ`.
///
/// `d/dt E[S] = E[f_S(X)]` because the noise term is a martingale, so the
/// ensemble-averaged drift estimates the slope of the mean curve with far
/// less Monte Carlo noise than differencing the noisy mean itself.
#[derive(Debug, Clone, PartialEq)]
pub struct SusceptibleApproach {
    pub target: f64,
    pub times: Vec<f64>,
    pub mean_s: Vec<f64>,
    /// Ensemble average of the S drift at each time.
    pub mean_drift: Vec<f64>,
    /// Points where the mean drift points towards `target`.
    pub toward: usize,
    /// Least-squares slope of the mean curve itself over the window.
    pub mean_slope: Option<f64>,
}

impl SusceptibleApproach {
    /// Mean drift points towards `target` at every recorded time.
    pub fn monotone(&self) -> bool {
        !self.times.is_empty() && self.toward == self.times.len()
    }

    /// The fitted slope of the mean curve points towards `target` and the
    /// window ends closer to it than it started.
    pub fn trends_toward(&self) -> bool {
        let (Some(slope), Some(first), Some(last)) =
            (self.mean_slope, self.mean_s.first(), self.mean_s.last())
        else {
            return false;
        };
        let gap = self.target - first;
        slope * gap > 0.0 && libm::fabs(self.target - last) < libm::fabs(gap)
    }
}

pub fn susceptible_approach(
    ensemble: &EnsembleSummary,
    params: &ModelParams,
    from_time: f64,
) -> SusceptibleApproach {
    let target = params.lambda / params.mu;
    let mut times = Vec::new();
    let mut mean_s = Vec::new();
    let mut mean_drift = Vec::new();
    let mut toward = 0;
    for (k, &t) in ensemble.times.iter().enumerate() {
        if t < from_time {
            continue;
        }
        let s = ensemble.mean[k][0];
        let f = running_mean(ensemble.paths.iter().map(|p| drift(&p.samples[k], params)[0]));
        let gap = target - s;
        if gap == 0.0 || (gap > 0.0) == (f > 0.0) && f != 0.0 {
            toward += 1;
        }
        times.push(t);
        mean_s.push(s);
        mean_drift.push(f);
    }
    let mean_slope = least_squares_slope(&times, &mean_s);
    SusceptibleApproach {
        target,
        times,
        mean_s,
        mean_drift,
        toward,
        mean_slope,
    }
}

/// Normalised equal-width histogram of one compartment.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub component: Component,
    /// `n_bins + 1` strictly increasing edges.
    pub edges: Vec<f64>,
    pub masses: Vec<f64>,
    pub burn_in: f64,
    pub n_samples: usize,
    /// Every retained sample was identical; one bin holds all the mass.
    pub degenerate: bool,
}

impl Histogram {
    /// Bins `samples` into `n_bins` equal-width bins over `[min, max]`.
    pub fn from_samples(
        component: Component,
        samples: &[f64],
        n_bins: usize,
        burn_in: f64,
    ) -> Result<Self> {
        if n_bins < 2 {
            return Err(Error::OutOfRange {
                what: "n_bins",
                value: n_bins as f64,
                expected: ">= 2",
            });
        }
        if samples.is_empty() {
            return Err(Error::Empty { what: "histogram samples" });
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "histogram sample" });
        }
        let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let n = samples.len();
        if lo == hi {
            let half = 0.5 * libm::fmax(libm::fabs(lo), 1.0) * 1e-9;
            return Ok(Self {
                component,
                edges: alloc::vec![lo - half, lo + half],
                masses: alloc::vec![1.0],
                burn_in,
                n_samples: n,
                degenerate: true,
            });
        }
        let width = (hi - lo) / n_bins as f64;
        let mut counts = alloc::vec![0u64; n_bins];
        for &v in samples {
            let k = ((v - lo) / width) as usize;
            counts[k.min(n_bins - 1)] += 1;
        }
        let mut edges: Vec<f64> = (0..n_bins).map(|k| lo + k as f64 * width).collect();
        edges.push(hi);
        Ok(Self {
            component,
            edges,
            masses: counts.iter().map(|&c| c as f64 / n as f64).collect(),
            burn_in,
            n_samples: n,
            degenerate: false,
        })
    }

    pub fn n_bins(&self) -> usize {
        self.masses.len()
    }

    /// Cumulative mass at `x`, linear inside each bin.
    fn cdf(&self, x: f64) -> f64 {
        let first = self.edges[0];
        let last = self.edges[self.edges.len() - 1];
        if x <= first {
            return 0.0;
        }
        if x >= last {
            return 1.0;
        }
        let mut acc = 0.0;
        for (k, &m) in self.masses.iter().enumerate() {
            let (a, b) = (self.edges[k], self.edges[k + 1]);
            if x >= b {
                acc += m;
            } else {
                acc += m * (x - a) / (b - a);
                break;
            }
        }
        acc
    }

    /// Masses redistributed onto `grid`, assuming uniform density per bin.
    pub fn rebin(&self, grid: &[f64]) -> Vec<f64> {
        let cdf: Vec<f64> = grid.iter().map(|&g| self.cdf(g)).collect();
        cdf.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

/// Histogram of the states after `burn_in` (measured from the grid start).
pub fn stationary_histogram(
    traj: &Trajectory,
    burn_in: f64,
    n_bins: usize,
    component: Component,
) -> Result<Histogram> {
    if !(traj.grid.horizon() - burn_in > 0.0) {
        return Err(Error::OutOfRange {
            what: "burn_in",
            value: burn_in,
            expected: "< horizon",
        });
    }
    let start = traj.grid.index_at_or_after(traj.grid.t0 + burn_in);
    let samples: Vec<f64> = traj.states[start..].iter().map(|x| x.get(component)).collect();
    Histogram::from_samples(component, &samples, n_bins, burn_in)
}

/// Total-variation distance `½Σ|p − q|` after rebinning both histograms onto
/// the union of their edges.
pub fn histogram_distance(h1: &Histogram, h2: &Histogram) -> Result<f64> {
    if h1.component != h2.component {
        return Err(Error::ComponentMismatch);
    }
    let mut grid: Vec<f64> = h1.edges.iter().chain(&h2.edges).copied().collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let p = h1.rebin(&grid);
    let q = h2.rebin(&grid);
    let tv = 0.5 * p.iter().zip(&q).map(|(a, b)| libm::fabs(a - b)).sum::<f64>();
    Ok(tv.min(1.0))
}

/// Samples of `component` from states at or after index `start`.
pub fn component_samples(states: &[State], start: usize, component: Component) -> Vec<f64> {
    states[start.min(states.len())..]
        .iter()
        .map(|x| x.get(component))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::TimeGrid;
    use crate::model::tests::example1;

    fn synthetic(grid: TimeGrid, f: impl Fn(f64) -> State) -> Trajectory {
        Trajectory {
            grid,
            states: (0..=grid.n_steps).map(|k| f(grid.time(k))).collect(),
            controls: None,
            truncation_events: 0,
        }
    }

    #[test]
    fn time_average_of_constant() {
        let g = TimeGrid::new(0.0, 10.0, 0.01).unwrap();
        let t = synthetic(g, |_| State::new(3.0, 4.0, 5.0, 6.0));
        for (c, want) in Component::ALL.iter().zip([3.0, 4.0, 5.0, 6.0]) {
            assert!((time_average(&t, *c).unwrap() - want).abs() < 1e-12);
        }
    }

    #[test]
    fn time_average_of_ramp() {
        let (big_t, c, dt) = (10.0, 8.0, 0.01);
        let g = TimeGrid::new(0.0, big_t, dt).unwrap();
        let t = synthetic(g, |s| State::new(0.0, 0.0, c * s / big_t, 0.0));
        let avg = time_average(&t, Component::I).unwrap();
        assert!((avg - c / 2.0).abs() <= dt * c / big_t, "{avg}");
    }

    #[test]
    fn time_average_is_affine() {
        let g = TimeGrid::new(0.0, 5.0, 0.01).unwrap();
        let base = synthetic(g, |s| State::new(libm::sin(s) + 2.0, 0.0, 0.0, 0.0));
        let scaled = synthetic(g, |s| State::new(3.0 * (libm::sin(s) + 2.0) + 7.0, 0.0, 0.0, 0.0));
        let a = time_average(&base, Component::S).unwrap();
        let b = time_average(&scaled, Component::S).unwrap();
        assert!((b - (3.0 * a + 7.0)).abs() < 1e-10);
    }

    #[test]
    fn persistence_boundaries() {
        let p = example1();
        let bounds = compute_persistence_bounds(&p).unwrap();
        let above: Vec<[f64; 4]> = (0..3).map(|_| bounds.map(|b| b * 1.5)).collect();
        let rep = persistence_check(&above, &p, 100.0).unwrap();
        assert!(rep.all_satisfied());
        let at: Vec<[f64; 4]> = (0..3).map(|_| bounds).collect();
        let rep = persistence_check(&at, &p, 100.0).unwrap();
        assert_eq!(rep.satisfied, [false; 4]);
    }

    #[test]
    fn persistence_needs_threshold() {
        let p = ModelParams {
            lambda: 1.0,
            ..example1()
        };
        assert!(matches!(
            persistence_check(&[[1.0; 4]], &p, 1.0),
            Err(Error::BelowThreshold { .. })
        ));
    }

    #[test]
    fn synthetic_exponential_slope() {
        let g = TimeGrid::new(0.0, 20.0, 0.01).unwrap();
        let t = synthetic(g, |s| {
            let v = libm::exp(-0.3 * s);
            State::new(100.0, 0.4 * v, 0.6 * v, 0.0)
        });
        let rep = extinction_check(&t, &example1(), (10.0, 20.0), 1.0).unwrap();
        assert!((rep.log_slope.unwrap() + 0.3).abs() < 1e-6);
        assert!(rep.decaying() && rep.extinct() && !rep.truncated);
        assert_eq!(rep.fit_points, 1001);
    }

    #[test]
    fn constant_infected_has_zero_slope() {
        let g = TimeGrid::new(0.0, 20.0, 0.01).unwrap();
        let t = synthetic(g, |_| State::new(100.0, 2.0, 3.0, 1.0));
        let rep = extinction_check(&t, &example1(), (10.0, 20.0), 1.0).unwrap();
        assert!(rep.log_slope.unwrap().abs() < 1e-12);
        assert!(!rep.extinct());
    }

    #[test]
    fn zero_infected_truncates_fit() {
        let g = TimeGrid::new(0.0, 10.0, 0.1).unwrap();
        let t = synthetic(g, |s| {
            let v = if s < 7.0 { libm::exp(-s) } else { 0.0 };
            State::new(1.0, v, 0.0, 0.0)
        });
        let rep = extinction_check(&t, &example1(), (5.0, 10.0), 1.0).unwrap();
        assert!(rep.truncated);
        assert!((rep.log_slope.unwrap() + 1.0).abs() < 1e-9);
        let rep = extinction_check(&t, &example1(), (8.0, 10.0), 1.0).unwrap();
        assert!(rep.truncated && rep.log_slope.is_none() && rep.decaying());
    }

    #[test]
    fn constant_samples_give_degenerate_histogram() {
        let h = Histogram::from_samples(Component::I, &[4.0; 100], 10, 0.0).unwrap();
        assert!(h.degenerate);
        assert_eq!(h.masses, [1.0]);
        assert!(h.edges[0] < h.edges[1]);
    }

    #[test]
    fn uniform_samples_fill_bins_evenly() {
        // splitmix64 as an independent uniform source
        let mut state = 0x9E37_79B9_7F4A_7C15u64;
        let mut next = || {
            state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
            let mut z = state;
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
            ((z ^ (z >> 31)) >> 11) as f64 / (1u64 << 53) as f64
        };
        let samples: Vec<f64> = (0..1_000_000).map(|_| next()).collect();
        let h = Histogram::from_samples(Component::S, &samples, 10, 0.0).unwrap();
        for m in &h.masses {
            assert!((m - 0.1).abs() < 0.002, "{m}");
        }
        assert!((h.masses.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn distance_examples() {
        let h = Histogram::from_samples(Component::I, &[0.0, 1.0, 2.0, 3.0], 4, 0.0).unwrap();
        assert_eq!(histogram_distance(&h, &h).unwrap(), 0.0);

        let far = Histogram::from_samples(Component::I, &[10.0, 11.0, 12.0], 3, 0.0).unwrap();
        assert!((histogram_distance(&h, &far).unwrap() - 1.0).abs() < 1e-12);

        let full = Histogram {
            component: Component::I,
            edges: alloc::vec![0.0, 1.0, 2.0, 3.0, 4.0],
            masses: alloc::vec![0.25; 4],
            burn_in: 0.0,
            n_samples: 4,
            degenerate: false,
        };
        let half = Histogram {
            masses: alloc::vec![0.5, 0.5, 0.0, 0.0],
            ..full.clone()
        };
        assert!((histogram_distance(&full, &half).unwrap() - 0.5).abs() < 1e-12);

        let other = Histogram {
            component: Component::A,
            ..full.clone()
        };
        assert_eq!(histogram_distance(&full, &other), Err(Error::ComponentMismatch));
    }

    #[test]
    fn stationary_histogram_skips_burn_in() {
        let g = TimeGrid::new(0.0, 10.0, 0.5).unwrap();
        let t = synthetic(g, |s| State::new(0.0, 0.0, if s < 5.0 { 100.0 } else { 1.0 }, 0.0));
        let h = stationary_histogram(&t, 5.0, 4, Component::I).unwrap();
        assert!(h.degenerate);
        assert_eq!(h.n_samples, 11);
        assert!(stationary_histogram(&t, 10.0, 4, Component::I).is_err());
        assert!(stationary_histogram(&t, 1.0, 1, Component::I).is_err());
    }
}
