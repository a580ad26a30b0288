//! Closed-form persistence and extinction thresholds.
//!
//! `m = 4μ + α + δ_A + δ_I + d + γ + ½Σσ_k²` and
//! `R₀ˢ = 3·∛(Λ α min(β_A, β_I)) / m`. When `R₀ˢ > 1` the long-run time
//! averages of all four compartments are bounded below by positive constants.
//! With `h = min(μ + δ_A + σ₂²/2, μ + δ_I + d + σ₃²/2)`, a negative extinction
//! index `max(β_A, β_I)·Λ/μ − h/2` forces A, I and R to zero almost surely.

use crate::{Error, ModelParams, Result};

/// Every closed-form quantity for one parameter set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdReport {
    pub m_const: f64,
    pub r0s: f64,
    /// `min(β_A, β_I)`, used by the persistence threshold.
    pub beta_min: f64,
    /// `max(β_A, β_I)`, used by the extinction index.
    pub beta_max: f64,
    pub h_const: f64,
    pub extinction_index: f64,
    /// Lower bounds for the time averages of S, A, I, R; present only when
    /// `r0s > 1`.
    pub persistence_bounds: Option<[f64; 4]>,
}

impl ThresholdReport {
    pub fn compute(params: &ModelParams) -> Result<Self> {
        params.validate()?;
        let r0s = compute_r0s(params);
        Ok(Self {
            m_const: m_const(params),
            r0s,
            beta_min: params.beta_a.min(params.beta_i),
            beta_max: params.beta_a.max(params.beta_i),
            h_const: h_const(params),
            extinction_index: compute_extinction_index(params)?,
            persistence_bounds: compute_persistence_bounds(params).ok(),
        })
    }

    pub fn predicts_persistence(&self) -> bool {
        self.r0s > 1.0
    }

    pub fn predicts_extinction(&self) -> bool {
        self.extinction_index < 0.0
    }
}

pub fn m_const(params: &ModelParams) -> f64 {
    let p = params;
    let noise: f64 = p.sigma.iter().map(|s| s * s).sum();
    4.0 * p.mu + p.alpha + p.delta_a + p.delta_i + p.d + p.gamma + 0.5 * noise
}

pub fn h_const(params: &ModelParams) -> f64 {
    let p = params;
    let asymptomatic = p.mu + p.delta_a + 0.5 * p.sigma[1] * p.sigma[1];
    let infected = p.mu + p.delta_i + p.d + 0.5 * p.sigma[2] * p.sigma[2];
    asymptomatic.min(infected)
}

/// Stochastic persistence threshold `R₀ˢ`.
pub fn compute_r0s(params: &ModelParams) -> f64 {
    let p = params;
    let beta = p.beta_a.min(p.beta_i);
    3.0 * libm::cbrt(p.lambda * p.alpha * beta) / m_const(p)
}

/// `max(β_A, β_I)·Λ/μ − h/2`; negative means almost-sure extinction.
pub fn compute_extinction_index(params: &ModelParams) -> Result<f64> {
    let p = params;
    if !p.mu.is_finite() {
        return Err(Error::NonFinite { what: "mu" });
    }
    if p.mu == 0.0 {
        return Err(Error::ZeroMortality);
    }
    let beta = p.beta_a.max(p.beta_i);
    Ok(beta * p.lambda / p.mu - 0.5 * h_const(p))
}

/// Lower bounds on the long-run time averages of S, A, I and R.
///
/// All four share the factor `m(R₀ˢ − 1) / (αβ_I + (β_A + bα)(δ_I + μ + d))`.
pub fn compute_persistence_bounds(params: &ModelParams) -> Result<[f64; 4]> {
    let p = params;
    let r0s = compute_r0s(p);
    if !(r0s > 1.0) {
        return Err(Error::BelowThreshold { r0s });
    }
    let i_out = p.delta_i + p.mu + p.d;
    let denom = p.alpha * p.beta_i + (p.beta_a + p.b * p.alpha) * i_out;
    let common = m_const(p) * (r0s - 1.0) / denom;

    let s = common * p.b * (p.mu + p.alpha + p.delta_a) * i_out / (p.beta_a + p.beta_i);
    let a = common * i_out;
    let i = common * p.alpha;
    let r = common * (p.delta_a * i_out + p.alpha * p.delta_i) / (p.gamma + p.mu);
    Ok([s, a, i, r])
}
