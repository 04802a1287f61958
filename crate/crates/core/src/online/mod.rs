//! Online allocation engines with live primal-dual accounting.
//!
//! Both policies process the query stream once, keeping per-bidder spend,
//! the dual prices `α_u`, and per-query duals `β_v` so that at the end of a run
//! `(α, β)` is (approximately) feasible for the offline dual and the ratio of
//! primal to dual objective certifies a competitive ratio.
//!
//! * **Greedy** matches each query to the available bidder with the largest
//!   bid; `β_v` is the winning bid and `α_u` jumps to 1 once `u` is out of budget.
//! * **MSVV** matches to the bidder maximising `k·w − Δ(x_u, w)`, i.e. the bid
//!   discounted by `1 − e^{x_u − 1}` where `x_u` is the spent fraction. Each
//!   match raises `α_u` by `Δ` and sets `β_v = k·w − Δ`, so the dual grows by
//!   exactly `k` times the primal.

mod certificate;
mod engine;
mod export;

use serde::{Deserialize, Serialize};

use crate::model::Violation;

pub use certificate::{check_alpha_consistency, certify, AlphaConsistency, Certificate};
pub(crate) use engine::beats;
pub use engine::{
    msvv_score, run, run_with_choices, scaled_bid, AlphaUpdate, Decision, EngineOptions,
    EngineState, RunTrace,
};
pub use export::{read_trace_jsonl, write_trace_jsonl, ExportedDecision, TraceFile, TraceSummary};

/// `k = 1 / (1 − 1/e) = e / (e − 1)`.
pub const K: f64 = std::f64::consts::E / (std::f64::consts::E - 1.0);

/// Tolerance for the per-step MSVV identity `Δdual = k·Δprimal`.
pub const ACCOUNTING_TOL: f64 = 1e-9;

#[derive(Debug, thiserror::Error)]
pub enum OnlineError {
    #[error("invalid instance: {0:?}")]
    Invalid(Vec<Violation>),
    #[error("{what} = {value} is outside its domain")]
    Domain { what: &'static str, value: f64 },
    #[error("trace does not match instance: {0}")]
    TraceMismatch(String),
    #[error("operation requires an MSVV trace")]
    NotMsvv,
    #[error(
        "alpha sandwich violated for bidder {bidder} at step {step}: \
         f(x) - alpha = {deviation:.3e}, bound {bound:.3e}"
    )]
    Sandwich { bidder: usize, step: usize, deviation: f64, bound: f64 },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed trace file: {0}")]
    Parse(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    Greedy,
    Msvv,
}

impl Policy {
    /// Competitive ratio the policy's analysis guarantees under small bids.
    pub fn theorem_bound(self) -> f64 {
        match self {
            Policy::Greedy => 0.5,
            Policy::Msvv => 1.0 / K,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Policy::Greedy => "greedy",
            Policy::Msvv => "msvv",
        }
    }
}

impl std::str::FromStr for Policy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "greedy" => Ok(Policy::Greedy),
            "msvv" => Ok(Policy::Msvv),
            other => Err(format!("unknown policy `{other}` (expected greedy or msvv)")),
        }
    }
}

fn check_fraction(what: &'static str, x: f64) -> Result<(), OnlineError> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(OnlineError::Domain { what, value: x })
    }
}

/// `f(x) = (eˣ − 1)/(e − 1)` on `[0, 1]`.
pub fn potential_f(x: f64) -> Result<f64, OnlineError> {
    check_fraction("x", x)?;
    Ok(x.exp_m1() / (std::f64::consts::E - 1.0))
}

/// `Δ(x, w) = f'(x)·w = k·e^{x−1}·w`.
pub fn delta(x: f64, w: f64) -> Result<f64, OnlineError> {
    check_fraction("x", x)?;
    if !(w >= 0.0 && w.is_finite()) {
        return Err(OnlineError::Domain { what: "w", value: w });
    }
    Ok(K * (x - 1.0).exp() * w)
}
