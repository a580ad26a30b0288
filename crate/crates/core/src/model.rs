//! Right-hand sides of the SAIRS systems.
//!
//! With `F(A, I) = β_I I/(1+bI) + β_A A/(1+bA)` the deterministic drift is
//!
//! ```text
//! dS = Λ − F·S − μS + γR
//! dA = F·S − (α + δ_A + μ)A
//! dI = αA − (δ_I + μ + d)I
//! dR = δ_A A + δ_I I − (γ + μ)R
//! ```
//!
//! The stochastic system adds diagonal multiplicative noise `σ_k X_k dB_k`.
//! The controlled system scales the incidence by `(1 − u₂)` and moves `u₁S`
//! from S to R.

use crate::{Error, Result};

/// Rate constants and noise intensities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Recruitment rate Λ.
    pub lambda: f64,
    pub beta_a: f64,
    pub beta_i: f64,
    /// Saturation coefficient of both incidences.
    pub b: f64,
    /// Natural death rate.
    pub mu: f64,
    /// Loss of immunity R → S.
    pub gamma: f64,
    pub delta_a: f64,
    pub delta_i: f64,
    /// Progression A → I.
    pub alpha: f64,
    /// Disease-induced death rate.
    pub d: f64,
    /// White-noise intensities for S, A, I, R.
    pub sigma: [f64; 4],
}

impl ModelParams {
    /// Checks finiteness and signs: `Λ > 0`, `μ > 0`, everything else `≥ 0`.
    pub fn validate(&self) -> Result<()> {
        let named = [
            ("lambda", self.lambda),
            ("beta_a", self.beta_a),
            ("beta_i", self.beta_i),
            ("b", self.b),
            ("mu", self.mu),
            ("gamma", self.gamma),
            ("delta_a", self.delta_a),
            ("delta_i", self.delta_i),
            ("alpha", self.alpha),
            ("d", self.d),
            ("sigma1", self.sigma[0]),
            ("sigma2", self.sigma[1]),
            ("sigma3", self.sigma[2]),
            ("sigma4", self.sigma[3]),
        ];
        for (what, value) in named {
            if !value.is_finite() {
                return Err(Error::NonFinite { what });
            }
            if value < 0.0 {
                return Err(Error::OutOfRange {
                    what,
                    value,
                    expected: ">= 0",
                });
            }
        }
        for (what, value) in [("lambda", self.lambda), ("mu", self.mu)] {
            if value <= 0.0 {
                return Err(Error::OutOfRange {
                    what,
                    value,
                    expected: "> 0",
                });
            }
        }
        Ok(())
    }

    /// Same parameters with every noise intensity set to zero.
    pub fn noise_free(&self) -> Self {
        Self {
            sigma: [0.0; 4],
            ..*self
        }
    }

    pub fn has_noise(&self) -> bool {
        self.sigma.iter().any(|&s| s != 0.0)
    }

    /// Total per-susceptible force of infection `F(A, I)`.
    #[inline]
    pub fn force_of_infection(&self, a: f64, i: f64) -> f64 {
        incidence(self.beta_i, i, self.b) + incidence(self.beta_a, a, self.b)
    }
}

/// One of the four compartments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Component {
    S,
    A,
    I,
    R,
}

impl Component {
    pub const ALL: [Component; 4] = [Component::S, Component::A, Component::I, Component::R];

    pub fn index(self) -> usize {
        match self {
            Component::S => 0,
            Component::A => 1,
            Component::I => 2,
            Component::R => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Component::S => "S",
            Component::A => "A",
            Component::I => "I",
            Component::R => "R",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "S" | "s" => Some(Component::S),
            "A" | "a" => Some(Component::A),
            "I" | "i" => Some(Component::I),
            "R" | "r" => Some(Component::R),
            _ => None,
        }
    }
}

/// Compartment sizes `(S, A, I, R)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct State {
    pub s: f64,
    pub a: f64,
    pub i: f64,
    pub r: f64,
}

impl State {
    pub const ORIGIN: State = State {
        s: 0.0,
        a: 0.0,
        i: 0.0,
        r: 0.0,
    };

    pub const fn new(s: f64, a: f64, i: f64, r: f64) -> Self {
        Self { s, a, i, r }
    }

    pub const fn from_array(x: [f64; 4]) -> Self {
        Self {
            s: x[0],
            a: x[1],
            i: x[2],
            r: x[3],
        }
    }

    pub const fn to_array(self) -> [f64; 4] {
        [self.s, self.a, self.i, self.r]
    }

    pub fn get(&self, component: Component) -> f64 {
        self.to_array()[component.index()]
    }

    pub fn total(&self) -> f64 {
        self.s + self.a + self.i + self.r
    }

    pub fn validate(&self) -> Result<()> {
        for (what, value) in [("S", self.s), ("A", self.a), ("I", self.i), ("R", self.r)] {
            if !value.is_finite() {
                return Err(Error::NonFinite { what });
            }
            if value < 0.0 {
                return Err(Error::OutOfRange {
                    what,
                    value,
                    expected: ">= 0",
                });
            }
        }
        Ok(())
    }
}

/// Vaccination `u1` and isolation `u2` efforts, each in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ControlValue {
    pub u1: f64,
    pub u2: f64,
}

impl ControlValue {
    pub const NONE: ControlValue = ControlValue { u1: 0.0, u2: 0.0 };

    pub const fn new(u1: f64, u2: f64) -> Self {
        Self { u1, u2 }
    }

    pub fn validate(&self) -> Result<()> {
        for (what, value) in [("u1", self.u1), ("u2", self.u2)] {
            if !value.is_finite() {
                return Err(Error::NonFinite { what });
            }
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::OutOfRange {
                    what,
                    value,
                    expected: "within [0, 1]",
                });
            }
        }
        Ok(())
    }
}

#[inline]
fn incidence(beta: f64, x: f64, b: f64) -> f64 {
    beta * x / (1.0 + b * x)
}

/// Saturated incidence `βx/(1 + bx)`.
pub fn saturated_incidence(beta: f64, x: f64, b: f64) -> Result<f64> {
    for (what, value) in [("beta", beta), ("x", x), ("b", b)] {
        if !value.is_finite() {
            return Err(Error::NonFinite { what });
        }
        if value < 0.0 {
            return Err(Error::OutOfRange {
                what,
                value,
                expected: ">= 0",
            });
        }
    }
    Ok(incidence(beta, x, b))
}

/// Drift of the uncontrolled system, `(dS, dA, dI, dR)/dt`.
#[inline]
pub fn drift(state: &State, params: &ModelParams) -> [f64; 4] {
    drift_controlled(state, &ControlValue::NONE, params)
}

/// Drift of the controlled system.
///
/// New infections `F·(1 − u₂)·S` leave S and enter A; vaccination `u₁S`
/// leaves S and enters R. Every transfer appears with opposite signs, so the
/// component sum is `Λ − μN − dI` for every control.
#[inline]
pub fn drift_controlled(state: &State, u: &ControlValue, params: &ModelParams) -> [f64; 4] {
    let p = params;
    let State { s, a, i, r } = *state;
    let infection = p.force_of_infection(a, i) * (1.0 - u.u2) * s;
    let vaccination = u.u1 * s;
    [
        p.lambda - infection - p.mu * s - vaccination + p.gamma * r,
        infection - (p.alpha + p.delta_a + p.mu) * a,
        p.alpha * a - (p.delta_i + p.mu + p.d) * i,
        p.delta_a * a + p.delta_i * i + vaccination - (p.gamma + p.mu) * r,
    ]
}

/// Noise amplitudes `(σ₁S, σ₂A, σ₃I, σ₄R)`.
#[inline]
pub fn diffusion(state: &State, params: &ModelParams) -> [f64; 4] {
    let x = state.to_array();
    core::array::from_fn(|k| params.sigma[k] * x[k])
}
