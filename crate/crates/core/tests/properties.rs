use proptest::prelude::*;

use sairs_core::analysis::{histogram_distance, persistence_check, time_average, Histogram};
use sairs_core::control::{adjoint_gradient_error, control_projection, ObjectiveWeights, ProjectionMode};
use sairs_core::integrator::{euler_step, milstein_step, TimeGrid, Trajectory};
use sairs_core::model::{diffusion, drift, drift_controlled, saturated_incidence};
use sairs_core::thresholds::{compute_extinction_index, compute_persistence_bounds, compute_r0s};
use sairs_core::{Component, ControlValue, ModelParams, State};

fn params() -> impl Strategy<Value = ModelParams> {
    (
        (1.0..100.0f64, 0.001..0.05f64, 0.001..0.05f64, 0.0..0.5f64, 1e-5..0.1f64),
        (0.0..1.0f64, 0.0..0.5f64, 0.0..0.5f64, 0.0..1.0f64, 0.0..0.01f64),
        prop::array::uniform4(0.0..0.3f64),
    )
        .prop_map(|((lambda, beta_a, beta_i, b, mu), (gamma, delta_a, delta_i, alpha, d), sigma)| {
            ModelParams {
                lambda,
                beta_a,
                beta_i,
                b,
                mu,
                gamma,
                delta_a,
                delta_i,
                alpha,
                d,
                sigma,
            }
        })
}

fn state() -> impl Strategy<Value = State> {
    prop::array::uniform4(0.0..5000.0f64).prop_map(State::from_array)
}

fn control() -> impl Strategy<Value = ControlValue> {
    (0.0..=1.0f64, 0.0..=1.0f64).prop_map(|(a, b)| ControlValue::new(a, b))
}

fn weights() -> impl Strategy<Value = ObjectiveWeights> {
    (
        prop::array::uniform3(0.0..5.0f64),
        prop::array::uniform2(0.1..1e4f64),
        prop::array::uniform4(0.0..0.01f64),
    )
        .prop_map(|(p, q, k)| ObjectiveWeights { p, q, k })
}

fn example1() -> ModelParams {
    ModelParams {
        lambda: 30.0,
        beta_a: 0.01,
        beta_i: 0.01,
        b: 0.2,
        mu: 2e-5,
        gamma: 0.5,
        delta_a: 0.2,
        delta_i: 0.2,
        alpha: 0.5,
        d: 0.0027,
        sigma: [0.05; 4],
    }
}

proptest! {
    #[test]
    fn drift_sum_identity(p in params(), x in state(), u in control()) {
        let f = drift_controlled(&x, &u, &p);
        let sum: f64 = f.iter().sum();
        let want = p.lambda - p.mu * x.total() - p.d * x.i;
        let scale = p.lambda + p.mu * x.total() + x.total();
        prop_assert!((sum - want).abs() <= 1e-12 * scale, "{sum} vs {want}");
    }

    #[test]
    fn bilinear_reduction(p in params(), x in state()) {
        let p = ModelParams { b: 0.0, d: 0.0, ..p };
        let f = drift(&x, &p);
        let inc = (p.beta_a * x.a + p.beta_i * x.i) * x.s;
        let want = [
            p.lambda - inc - p.mu * x.s + p.gamma * x.r,
            inc - (p.alpha + p.delta_a + p.mu) * x.a,
            p.alpha * x.a - (p.delta_i + p.mu) * x.i,
            p.delta_a * x.a + p.delta_i * x.i - (p.gamma + p.mu) * x.r,
        ];
        for j in 0..4 {
            prop_assert!((f[j] - want[j]).abs() <= 1e-9 * (1.0 + want[j].abs() + inc));
        }
    }

    #[test]
    fn incidence_bounded_and_monotone(beta in 0.0..1.0f64, b in 0.01..2.0f64, x in 0.0..1e6f64, dx in 0.0..100.0f64) {
        let lo = saturated_incidence(beta, x, b).unwrap();
        let hi = saturated_incidence(beta, x + dx, b).unwrap();
        prop_assert!(lo <= beta / b);
        prop_assert!(lo <= hi);
    }

    #[test]
    fn isolation_reduces_inflow(p in params(), x in state(), u1 in 0.0..=1.0f64, a in 0.0..=1.0f64, c in 0.0..=1.0f64) {
        let (lo, hi) = if a <= c { (a, c) } else { (c, a) };
        let f_lo = drift_controlled(&x, &ControlValue::new(u1, lo), &p)[1];
        let f_hi = drift_controlled(&x, &ControlValue::new(u1, hi), &p)[1];
        prop_assert!(f_hi <= f_lo + 1e-12 * f_lo.abs().max(1.0));
    }

    #[test]
    fn diffusion_is_homogeneous(p in params(), x in state(), c in 0.0..100.0f64) {
        let g = diffusion(&x, &p);
        let scaled = State::from_array(x.to_array().map(|v| c * v));
        let gc = diffusion(&scaled, &p);
        for j in 0..4 {
            prop_assert!((gc[j] - c * g[j]).abs() <= 1e-12 * (c * g[j]).abs().max(1e-300));
        }
    }

    #[test]
    fn silent_milstein_is_euler(p in params(), x in state(), u in control(), z in prop::array::uniform4(-4.0..4.0f64), dt in 1e-4..0.01f64) {
        let p = p.noise_free();
        let e = euler_step(&x, &p, Some(&u), dt);
        let m = milstein_step(&x, &p, Some(&u), dt, z).unwrap();
        for j in 0..4 {
            let want = e.to_array()[j].max(0.0);
            prop_assert_eq!(m.state.to_array()[j].to_bits(), want.to_bits());
        }
    }

    #[test]
    fn r0s_decreases_with_losses(p in params(), j in 0usize..9, bump in 0.0..0.5f64) {
        let base = compute_r0s(&p);
        let mut q = p;
        match j {
            0..=3 => q.sigma[j] += bump,
            4 => q.mu += bump,
            5 => q.gamma += bump,
            6 => q.delta_a += bump,
            7 => q.delta_i += bump,
            _ => q.d += bump,
        }
        prop_assert!(compute_r0s(&q) <= base);
    }

    #[test]
    fn bound_ratio(p in params()) {
        let p = ModelParams { lambda: p.lambda * 1e4, ..p };
        prop_assume!(compute_r0s(&p) > 1.0 && p.alpha > 0.01);
        let bounds = compute_persistence_bounds(&p).unwrap();
        let ratio = bounds[1] / bounds[2];
        let want = (p.delta_i + p.mu + p.d) / p.alpha;
        prop_assert!((ratio - want).abs() <= 1e-12 * want);
    }

    #[test]
    fn extinction_index_falls_with_recovery(p in params(), da in 0.0..1.0f64, di in 0.0..1.0f64) {
        let p = ModelParams { sigma: [p.sigma[0], 0.0, 0.0, p.sigma[3]], ..p };
        let base = compute_extinction_index(&p).unwrap();
        let q = ModelParams { delta_a: p.delta_a + da, delta_i: p.delta_i + di, ..p };
        prop_assert!(compute_extinction_index(&q).unwrap() <= base);
    }

    #[test]
    fn time_average_affine(vals in prop::collection::vec(0.0..100.0f64, 2..200), a in 0.0..10.0f64, c in 0.0..10.0f64) {
        let grid = TimeGrid::new(0.0, (vals.len() - 1) as f64 * 0.1, 0.1).unwrap();
        prop_assume!(grid.n_steps + 1 == vals.len());
        let mk = |f: &dyn Fn(f64) -> f64| Trajectory {
            grid,
            states: vals.iter().map(|&v| State::new(0.0, 0.0, f(v), 0.0)).collect(),
            controls: None,
            truncation_events: 0,
        };
        let x = time_average(&mk(&|v| v), Component::I).unwrap();
        let y = time_average(&mk(&|v| a * v + c), Component::I).unwrap();
        prop_assert!((y - (a * x + c)).abs() <= 1e-9 * (1.0 + y.abs()));
    }

    #[test]
    fn histogram_ignores_order(mut vals in prop::collection::vec(-50.0..50.0f64, 1..300), bins in 2usize..40, seed in any::<u64>()) {
        let h = Histogram::from_samples(Component::A, &vals, bins, 0.0).unwrap();
        let n = vals.len();
        let mut s = seed;
        for k in (1..n).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            vals.swap(k, (s >> 33) as usize % (k + 1));
        }
        let g = Histogram::from_samples(Component::A, &vals, bins, 0.0).unwrap();
        prop_assert_eq!(&h, &g);
        prop_assert!((h.masses.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert_eq!(histogram_distance(&h, &g).unwrap(), 0.0);
    }

    #[test]
    fn distance_is_a_bounded_symmetric(a in prop::collection::vec(0.0..10.0f64, 1..100), b in prop::collection::vec(0.0..10.0f64, 1..100)) {
        let ha = Histogram::from_samples(Component::I, &a, 8, 0.0).unwrap();
        let hb = Histogram::from_samples(Component::I, &b, 8, 0.0).unwrap();
        let d1 = histogram_distance(&ha, &hb).unwrap();
        let d2 = histogram_distance(&hb, &ha).unwrap();
        prop_assert!((0.0..=1.0).contains(&d1));
        prop_assert!((d1 - d2).abs() < 1e-12);
    }

    #[test]
    fn persistence_verdicts_ignore_order(avgs in prop::collection::vec(prop::array::uniform4(0.0..20.0f64), 1..50)) {
        let p = example1();
        let a = persistence_check(&avgs, &p, 500.0).unwrap();
        let mut rev = avgs.clone();
        rev.reverse();
        let b = persistence_check(&rev, &p, 500.0).unwrap();
        prop_assert_eq!(a.satisfied, b.satisfied);
        prop_assert_eq!(a.time_averages, b.time_averages);
    }

    #[test]
    fn projection_is_admissible(p in params(), x in state(), m in prop::array::uniform4(-100.0..100.0f64), w in weights()) {
        for mode in [ProjectionMode::Classic, ProjectionMode::Hamiltonian] {
            let u = control_projection(&x, &m, &w, &p, mode);
            prop_assert!((0.0..=1.0).contains(&u.u1) && (0.0..=1.0).contains(&u.u2));
        }
    }

    #[test]
    fn adjoint_is_state_gradient(p in params(), x in prop::array::uniform4(0.1..5000.0f64), u in control(),
                                 m in prop::array::uniform4(-10.0..10.0f64), w in weights()) {
        let err = adjoint_gradient_error(&State::from_array(x), &u, &m, &w, &p, 1e-5);
        prop_assert!(err < 1e-5, "{err}");
    }
}
