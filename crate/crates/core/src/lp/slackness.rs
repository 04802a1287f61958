//! Complementary-slackness check for a primal/dual pair.
//!
//! For `max cᵀx, Ax ≤ b, x ≥ 0` an optimal pair satisfies
//!
//! * `x_k > 0  ⇒  A_kᵀy = c_k`. For the AdWords LP this reads
//!   `x_uv > 0 ⇒ w_uv(1 − α_u) = β_v`.
//! * `y_i > 0  ⇒  A_i x = b_i`. For budget rows: a positive `α_u` needs an
//!   exhausted budget, and an unexhausted budget forces `α_u = 0`.
//!
//! A pair is flagged when both sides of an implication exceed the tolerance;
//! its magnitude is the smaller of the two.

use serde::Serialize;

use super::{LpSolution, RowLabel, StandardLp, VarLabel};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairViolation {
    pub var: usize,
    pub label: VarLabel,
    pub primal: f64,
    /// `A_kᵀy − c_k`.
    pub reduced_cost: f64,
    pub magnitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RowKind {
    /// Budget or capacity row (`α`).
    Packing,
    /// Per-arrival assignment row (`β`).
    Assignment,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowViolation {
    pub row: usize,
    pub label: RowLabel,
    pub kind: RowKind,
    pub dual: f64,
    /// `b_i − A_i x`.
    pub slack: f64,
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlacknessReport {
    pub tolerance: f64,
    pub pair_violations: Vec<PairViolation>,
    pub row_violations: Vec<RowViolation>,
    /// Largest magnitude over every candidate pair, flagged or not.
    pub max_violation: f64,
    /// Packing rows with `α > tolerance` (the set `J_1`).
    pub positive_dual_set: Vec<usize>,
    pub primal_residual: f64,
    pub dual_residual: f64,
}

impl SlacknessReport {
    pub fn is_empty(&self) -> bool {
        self.pair_violations.is_empty() && self.row_violations.is_empty()
    }
}

pub fn check_slackness(lp: &StandardLp, sol: &LpSolution, tol: f64) -> SlacknessReport {
    let x = &sol.primal;
    let y = &sol.dual;
    let mut max_violation: f64 = 0.0;

    let mut pair_violations = Vec::new();
    for (k, &xk) in x.iter().enumerate() {
        let reduced_cost = lp.reduced_cost(k, y);
        let magnitude = xk.min(reduced_cost.abs()).max(0.0);
        max_violation = max_violation.max(magnitude);
        if magnitude > tol {
            pair_violations.push(PairViolation {
                var: k,
                label: lp.var_labels()[k],
                primal: xk,
                reduced_cost,
                magnitude,
            });
        }
    }

    let activity = lp.row_activity(x);
    let mut row_violations = Vec::new();
    let mut positive_dual_set = Vec::new();
    for (i, (&yi, (&act, &b))) in y.iter().zip(activity.iter().zip(lp.rhs())).enumerate() {
        let label = lp.row_labels()[i];
        if label.is_packing() && yi > tol {
            positive_dual_set.push(i);
        }
        let slack = b - act;
        let magnitude = yi.min(slack).max(0.0);
        max_violation = max_violation.max(magnitude);
        if magnitude > tol {
            let kind = if label.is_packing() { RowKind::Packing } else { RowKind::Assignment };
            row_violations.push(RowViolation { row: i, label, kind, dual: yi, slack, magnitude });
        }
    }

    SlacknessReport {
        tolerance: tol,
        pair_violations,
        row_violations,
        max_violation,
        positive_dual_set,
        primal_residual: lp.primal_residual(x),
        dual_residual: lp.dual_residual(y),
    }
}
