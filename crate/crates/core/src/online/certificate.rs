use serde::Serialize;

use super::{potential_f, OnlineError, Policy, RunTrace, ACCOUNTING_TOL, K};
use crate::model::AdwordsInstance;

/// End-of-run primal-dual certificate for one trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub policy: Policy,
    pub primal: f64,
    pub dual: f64,
    /// Largest `(w_uv − w_uv·α_u − β_v)/B_u` over pairs with a positive bid.
    pub max_dual_violation: f64,
    /// Violation tolerated for bid granularity (`k·small_bid_ratio` for MSVV).
    pub dual_slack_allowance: f64,
    pub dual_feasible: bool,
    /// `primal / dual`.
    pub ratio_bound: f64,
    pub theorem_bound: f64,
    /// Additive shortfall from the theorem bound attributable to leftover
    /// budget (greedy) or accumulated round-off (MSVV).
    pub slack_terms: f64,
    /// Largest per-arrival `|Δdual − k·Δprimal|` (MSVV only, else 0).
    pub max_step_accounting_error: f64,
    pub holds: bool,
}

pub fn certify(trace: &RunTrace, instance: &AdwordsInstance) -> Result<Certificate, OnlineError> {
    if trace.decisions.len() != instance.num_queries() {
        return Err(OnlineError::TraceMismatch(format!(
            "{} decisions for {} queries",
            trace.decisions.len(),
            instance.num_queries()
        )));
    }
    if let Some((v, d)) = trace.decisions.iter().enumerate().find(|(v, d)| d.query != *v) {
        return Err(OnlineError::TraceMismatch(format!("decision {v} is for query {}", d.query)));
    }
    trace.replay(instance)?;

    let state = &trace.state;
    let mut max_violation: f64 = 0.0;
    for (v, q) in instance.queries().iter().enumerate() {
        for bid in q.positive_bids() {
            let u = bid.bidder;
            let w = bid.amount;
            let gap = (w - w * state.alpha[u] - state.beta[v]) / state.budgets[u];
            max_violation = max_violation.max(gap);
        }
    }

    let primal = state.primal;
    let dual = state.dual;
    let ratio_bound = if dual > 0.0 { primal / dual } else { 1.0 };
    let theorem_bound = trace.policy.theorem_bound();
    let (allowance, slack_terms, step_error) = match trace.policy {
        Policy::Greedy => {
            let leftover: f64 = (0..state.budgets.len())
                .filter(|&u| state.alpha[u] > 0.0)
                .map(|u| (state.budgets[u] - state.spent[u]).max(0.0))
                .sum();
            let slack = if dual > 0.0 { leftover / (2.0 * dual) } else { 0.0 };
            (0.0, slack, 0.0)
        }
        Policy::Msvv => {
            let mut worst: f64 = 0.0;
            let (mut p0, mut d0) = (0.0, 0.0);
            for d in &trace.decisions {
                if d.bidder.is_some() {
                    worst = worst.max(((d.dual - d0) - K * (d.primal - p0)).abs());
                }
                p0 = d.primal;
                d0 = d.dual;
            }
            let slack = if dual > 0.0 { (dual - K * primal).abs() / (K * dual) } else { 0.0 };
            (K * instance.small_bid_ratio(), slack, worst)
        }
    };
    let dual_feasible = max_violation <= allowance + 1e-9;
    let accounting_ok = step_error <= ACCOUNTING_TOL;
    let holds = dual_feasible && accounting_ok && ratio_bound >= theorem_bound - slack_terms - 1e-12;
    Ok(Certificate {
        policy: trace.policy,
        primal,
        dual,
        max_dual_violation: max_violation,
        dual_slack_allowance: allowance,
        dual_feasible,
        ratio_bound,
        theorem_bound,
        slack_terms,
        max_step_accounting_error: step_error,
        holds,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaConsistency {
    /// Largest `f(x_u) − α_u` over bidders and steps.
    pub max_deviation: f64,
    /// Smallest `f(x_u) − α_u` seen (should be ≥ 0 up to round-off).
    pub min_deviation: f64,
}

/// Walks an MSVV trace and checks `0 ≤ f(x_u) − α_u ≤ k·b_u` at every step,
/// where `b_u` is the largest budget fraction bidder `u` has accepted so far.
pub fn check_alpha_consistency(trace: &RunTrace) -> Result<AlphaConsistency, OnlineError> {
    if trace.policy != Policy::Msvv {
        return Err(OnlineError::NotMsvv);
    }
    let budgets = &trace.state.budgets;
    let mut max_bid = vec![0.0_f64; budgets.len()];
    let mut max_deviation: f64 = 0.0;
    let mut min_deviation: f64 = 0.0;
    for (step, d) in trace.decisions.iter().enumerate() {
        let Some(u) = d.bidder else { continue };
        max_bid[u] = max_bid[u].max(d.earned / budgets[u]);
        for up in &d.alpha_updates {
            let deviation = potential_f(up.spent_fraction)? - up.alpha;
            let bound = K * max_bid[up.bidder];
            if deviation < -1e-12 || deviation > bound + 1e-12 {
                return Err(OnlineError::Sandwich { bidder: up.bidder, step, deviation, bound });
            }
            max_deviation = max_deviation.max(deviation);
            min_deviation = min_deviation.min(deviation);
        }
    }
    Ok(AlphaConsistency { max_deviation, min_deviation })
}
