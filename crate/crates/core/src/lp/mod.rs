//! Offline LP oracle.
//!
//! Every LP here has the form `max cᵀx  s.t.  Ax ≤ b, x ≥ 0`. The matrix is
//! stored column-sparse with labels that tie each column and row back to the
//! instance entity it came from, and [`solve`] runs a dense tableau simplex that
//! returns a primal solution together with the dual read off the final basis.

mod build;
mod dump;
mod simplex;
mod slackness;

use std::fmt;

use serde::Serialize;

pub use build::{
    build_aggregated_adwords_lp, build_offline_adwords_lp, build_offline_plp, build_sampled_plp,
    solve_offline_adwords, solve_offline_plp, solve_sampled_plp, AdwordsOptimum, Grouping,
    PlpOptimum,
};
pub use dump::write_mps;
pub use simplex::{solve, solve_with, SimplexOptions};
pub use slackness::{check_slackness, PairViolation, RowKind, RowViolation, SlacknessReport};

/// Maximum number of structural variables accepted by the dense solver.
pub const MAX_VARIABLES: usize = 1_000_000;
/// Primal and dual feasibility tolerance for certified optima.
pub const FEASIBILITY_TOL: f64 = 1e-7;
/// Relative duality-gap tolerance for certified optima.
pub const GAP_TOL: f64 = 1e-6;

#[derive(Debug, thiserror::Error)]
pub enum LpError {
    #[error("inconsistent LP dimensions: {0}")]
    Dimension(String),
    #[error("LP too large for the dense solver ({vars} variables, {rows} rows)")]
    TooLarge { vars: usize, rows: usize },
    #[error("simplex exceeded its iteration limit of {limit}")]
    IterationLimit { limit: usize },
    #[error(
        "solution failed certification (primal residual {primal_residual:.3e}, \
         dual residual {dual_residual:.3e}, gap {gap:.3e})"
    )]
    Uncertified { primal_residual: f64, dual_residual: f64, gap: f64 },
    #[error("LP has no optimum: {0}")]
    NotOptimal(LpStatus),
}

/// What a column stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum VarLabel {
    /// `x_uv`: query `query` matched to bidder `bidder`.
    Pair { bidder: usize, query: usize },
    /// Total matching of a group of identical queries to `bidder`.
    PairGroup { bidder: usize, group: usize },
    /// `x_io`: agent `agent` takes option `option`.
    Option { agent: usize, option: usize },
    /// Total selection of `option` over a group of identical agents.
    OptionGroup { group: usize, option: usize },
    Index(usize),
}

/// What a row stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum RowLabel {
    Budget(usize),
    Matching(usize),
    MatchingGroup(usize),
    Resource(usize),
    Agent(usize),
    AgentGroup(usize),
    Index(usize),
}

impl RowLabel {
    /// Budget/capacity rows, whose duals are the `α` prices.
    pub fn is_packing(&self) -> bool {
        matches!(self, RowLabel::Budget(_) | RowLabel::Resource(_) | RowLabel::Index(_))
    }
}

impl fmt::Display for RowLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RowLabel::Budget(u) => write!(f, "budget_{u}"),
            RowLabel::Matching(v) => write!(f, "match_{v}"),
            RowLabel::MatchingGroup(g) => write!(f, "match_group_{g}"),
            RowLabel::Resource(j) => write!(f, "resource_{j}"),
            RowLabel::Agent(i) => write!(f, "agent_{i}"),
            RowLabel::AgentGroup(g) => write!(f, "agent_group_{g}"),
            RowLabel::Index(i) => write!(f, "r{i}"),
        }
    }
}

impl fmt::Display for VarLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VarLabel::Pair { bidder, query } => write!(f, "x_{bidder}_{query}"),
            VarLabel::PairGroup { bidder, group } => write!(f, "xg_{bidder}_{group}"),
            VarLabel::Option { agent, option } => write!(f, "x_{agent}_{option}"),
            VarLabel::OptionGroup { group, option } => write!(f, "xg_{group}_{option}"),
            VarLabel::Index(j) => write!(f, "x{j}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Unbounded,
    Infeasible,
}

impl fmt::Display for LpStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LpStatus::Optimal => "optimal",
            LpStatus::Unbounded => "unbounded",
            LpStatus::Infeasible => "infeasible",
        })
    }
}

/// `max cᵀx  s.t.  Ax ≤ b, x ≥ 0` with labelled rows and columns.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StandardLp {
    objective: Vec<f64>,
    columns: Vec<Vec<(usize, f64)>>,
    rhs: Vec<f64>,
    var_labels: Vec<VarLabel>,
    row_labels: Vec<RowLabel>,
}

impl StandardLp {
    pub fn new() -> Self {
        Self::default()
    }

    /// Dense constructor with [`VarLabel::Index`]/[`RowLabel::Index`] labels.
    pub fn from_dense(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> Result<Self, LpError> {
        if a.len() != b.len() {
            return Err(LpError::Dimension(format!("{} rows but {} rhs entries", a.len(), b.len())));
        }
        let mut lp = StandardLp::new();
        for (i, &bi) in b.iter().enumerate() {
            lp.add_row(RowLabel::Index(i), bi);
        }
        for (j, &cj) in c.iter().enumerate() {
            let mut entries = Vec::new();
            for (i, row) in a.iter().enumerate() {
                if row.len() != c.len() {
                    return Err(LpError::Dimension(format!(
                        "row {i} has {} entries, expected {}",
                        row.len(),
                        c.len()
                    )));
                }
                if row[j] != 0.0 {
                    entries.push((i, row[j]));
                }
            }
            lp.add_column(VarLabel::Index(j), cj, entries);
        }
        Ok(lp)
    }

    pub fn add_row(&mut self, label: RowLabel, rhs: f64) -> usize {
        self.rhs.push(rhs);
        self.row_labels.push(label);
        self.rhs.len() - 1
    }

    /// Adds a column; `entries` are `(row, coefficient)` pairs.
    pub fn add_column(&mut self, label: VarLabel, objective: f64, entries: Vec<(usize, f64)>) -> usize {
        self.objective.push(objective);
        self.columns.push(entries);
        self.var_labels.push(label);
        self.objective.len() - 1
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rhs.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn column(&self, j: usize) -> &[(usize, f64)] {
        &self.columns[j]
    }

    pub fn var_labels(&self) -> &[VarLabel] {
        &self.var_labels
    }

    pub fn row_labels(&self) -> &[RowLabel] {
        &self.row_labels
    }

    pub fn dense_matrix(&self) -> Vec<Vec<f64>> {
        let mut a = vec![vec![0.0; self.num_vars()]; self.num_rows()];
        for (j, col) in self.columns.iter().enumerate() {
            for &(i, v) in col {
                a[i][j] += v;
            }
        }
        a
    }

    pub fn check_dimensions(&self) -> Result<(), LpError> {
        let rows = self.num_rows();
        for (j, col) in self.columns.iter().enumerate() {
            if let Some(&(i, _)) = col.iter().find(|&&(i, _)| i >= rows) {
                return Err(LpError::Dimension(format!("column {j} references row {i} of {rows}")));
            }
        }
        Ok(())
    }

    /// `Ax`.
    pub fn row_activity(&self, x: &[f64]) -> Vec<f64> {
        let mut act = vec![0.0; self.num_rows()];
        for (col, &xj) in self.columns.iter().zip(x) {
            if xj != 0.0 {
                for &(i, v) in col {
                    act[i] += v * xj;
                }
            }
        }
        act
    }

    /// `A_jᵀ y − c_j`, the reduced cost of column `j` under duals `y`.
    pub fn reduced_cost(&self, j: usize, y: &[f64]) -> f64 {
        self.columns[j].iter().map(|&(i, v)| v * y[i]).sum::<f64>() - self.objective[j]
    }

    pub fn primal_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, x)| c * x).sum()
    }

    pub fn dual_value(&self, y: &[f64]) -> f64 {
        self.rhs.iter().zip(y).map(|(b, y)| b * y).sum()
    }

    /// Largest violation of `Ax ≤ b` or `x ≥ 0`.
    pub fn primal_residual(&self, x: &[f64]) -> f64 {
        let act = self.row_activity(x);
        let rows = act.iter().zip(&self.rhs).map(|(a, b)| a - b);
        rows.chain(x.iter().map(|v| -v)).fold(0.0, f64::max)
    }

    /// Largest violation of `Aᵀy ≥ c` or `y ≥ 0`.
    pub fn dual_residual(&self, y: &[f64]) -> f64 {
        let cols = (0..self.num_vars()).map(|j| -self.reduced_cost(j, y));
        cols.chain(y.iter().map(|v| -v)).fold(0.0, f64::max)
    }
}

/// Solver output. `primal`/`dual` are populated only for optimal solves.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LpSolution {
    pub status: LpStatus,
    pub primal: Vec<f64>,
    pub dual: Vec<f64>,
    pub objective: f64,
    pub dual_objective: f64,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    /// Improving ray when unbounded, Farkas multipliers when infeasible.
    pub certificate: Option<Vec<f64>>,
}

impl LpSolution {
    /// Builds an optimal-status solution from externally assembled values and
    /// measures its residuals against `lp`.
    pub fn from_values(lp: &StandardLp, primal: Vec<f64>, dual: Vec<f64>) -> Self {
        LpSolution {
            status: LpStatus::Optimal,
            objective: lp.primal_value(&primal),
            dual_objective: lp.dual_value(&dual),
            primal_residual: lp.primal_residual(&primal),
            dual_residual: lp.dual_residual(&dual),
            primal,
            dual,
            iterations: 0,
            certificate: None,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    pub fn duality_gap(&self) -> f64 {
        (self.objective - self.dual_objective).abs()
    }

    /// Duals of the packing rows (`α`), in row order.
    pub fn alpha(&self, lp: &StandardLp) -> Vec<f64> {
        self.duals_where(lp, |l| l.is_packing())
    }

    /// Duals of the assignment rows (`β`), in row order.
    pub fn beta(&self, lp: &StandardLp) -> Vec<f64> {
        self.duals_where(lp, |l| !l.is_packing())
    }

    fn duals_where(&self, lp: &StandardLp, keep: impl Fn(&RowLabel) -> bool) -> Vec<f64> {
        lp.row_labels().iter().zip(&self.dual).filter(|(l, _)| keep(l)).map(|(_, &y)| y).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_round_trip_and_residuals() {
        let lp = StandardLp::from_dense(&[1.0, 2.0], &[vec![1.0, 1.0], vec![0.0, 1.0]], &[4.0, 1.0])
            .unwrap();
        assert_eq!(lp.dense_matrix(), vec![vec![1.0, 1.0], vec![0.0, 1.0]]);
        assert_eq!(lp.primal_residual(&[3.0, 1.0]), 0.0);
        assert_eq!(lp.primal_residual(&[4.0, 1.0]), 1.0);
        // y = (1, 1) is dual feasible: 1 ≥ 1, 1 + 1 ≥ 2.
        assert_eq!(lp.dual_residual(&[1.0, 1.0]), 0.0);
        assert_eq!(lp.dual_value(&[1.0, 1.0]), 5.0);
    }

    #[test]
    fn ragged_dense_input_is_rejected() {
        assert!(matches!(
            StandardLp::from_dense(&[1.0, 2.0], &[vec![1.0]], &[1.0]),
            Err(LpError::Dimension(_))
        ));
    }

    #[test]
    fn out_of_range_row_is_a_dimension_error() {
        let mut lp = StandardLp::new();
        lp.add_row(RowLabel::Index(0), 1.0);
        lp.add_column(VarLabel::Index(0), 1.0, vec![(3, 1.0)]);
        assert!(matches!(lp.check_dimensions(), Err(LpError::Dimension(_))));
    }
}
