//! LP construction for AdWords and packing instances.
//!
//! Identical arrivals (same option set, bit for bit) can be merged into one
//! block of columns whose assignment row has right-hand side equal to the
//! group size. The merged LP has the same optimum, and an optimal solution of
//! it spreads evenly over the members to give one of the original LP.

use std::collections::HashMap;
use std::ops::Range;

use super::{solve, LpError, LpSolution, RowLabel, StandardLp, VarLabel, MAX_VARIABLES};
use crate::model::{AdwordsInstance, PlpInstance};

/// Partition of a run of arrivals into groups of identical ones.
#[derive(Debug, Clone, PartialEq)]
pub struct Grouping {
    /// Global index (query or agent) of each member, in arrival order.
    pub members: Vec<usize>,
    /// Group of each member, parallel to `members`.
    pub group_of: Vec<usize>,
    pub counts: Vec<usize>,
    /// First member of each group.
    pub representatives: Vec<usize>,
}

impl Grouping {
    fn build<K: std::hash::Hash + Eq>(members: Vec<usize>, mut key: impl FnMut(usize) -> K) -> Self {
        let mut index: HashMap<K, usize> = HashMap::new();
        let mut group_of = Vec::with_capacity(members.len());
        let mut counts = Vec::new();
        let mut representatives = Vec::new();
        for &m in &members {
            let next = counts.len();
            let g = *index.entry(key(m)).or_insert(next);
            if g == next {
                counts.push(0);
                representatives.push(m);
            }
            counts[g] += 1;
            group_of.push(g);
        }
        Grouping { members, group_of, counts, representatives }
    }

    fn singletons(members: Vec<usize>) -> Self {
        let k = members.len();
        Grouping {
            group_of: (0..k).collect(),
            counts: vec![1; k],
            representatives: members.clone(),
            members,
        }
    }

    pub fn num_groups(&self) -> usize {
        self.counts.len()
    }
}

fn guard(vars: usize, rows: usize) -> Result<(), LpError> {
    if vars > MAX_VARIABLES {
        Err(LpError::TooLarge { vars, rows })
    } else {
        Ok(())
    }
}

/// `max Σ w_uv x_uv` s.t. `Σ_v w_uv x_uv ≤ B_u`, `Σ_u x_uv ≤ 1`, over pairs with `w_uv > 0`.
pub fn build_offline_adwords_lp(instance: &AdwordsInstance) -> Result<StandardLp, LpError> {
    let vars: usize = instance.queries().iter().map(|q| q.positive_bids().count()).sum();
    guard(vars, instance.num_bidders() + instance.num_queries())?;
    let mut lp = StandardLp::new();
    for (u, b) in instance.bidders().iter().enumerate() {
        lp.add_row(RowLabel::Budget(u), b.budget);
    }
    for (v, q) in instance.queries().iter().enumerate() {
        if q.positive_bids().next().is_none() {
            continue;
        }
        let row = lp.add_row(RowLabel::Matching(v), 1.0);
        for bid in q.positive_bids() {
            lp.add_column(
                VarLabel::Pair { bidder: bid.bidder, query: v },
                bid.amount,
                vec![(bid.bidder, bid.amount), (row, 1.0)],
            );
        }
    }
    Ok(lp)
}

fn adwords_grouping(instance: &AdwordsInstance) -> Grouping {
    let members: Vec<usize> = instance.plp_agent_queries();
    Grouping::build(members, |v| {
        instance.queries()[v]
            .positive_bids()
            .map(|b| (b.bidder, b.amount.to_bits()))
            .collect::<Vec<_>>()
    })
}

/// Same LP with identical queries merged into count-bounded groups.
pub fn build_aggregated_adwords_lp(
    instance: &AdwordsInstance,
) -> Result<(StandardLp, Grouping), LpError> {
    let grouping = adwords_grouping(instance);
    let vars: usize = grouping
        .representatives
        .iter()
        .map(|&v| instance.queries()[v].positive_bids().count())
        .sum();
    guard(vars, instance.num_bidders() + grouping.num_groups())?;
    let mut lp = StandardLp::new();
    for (u, b) in instance.bidders().iter().enumerate() {
        lp.add_row(RowLabel::Budget(u), b.budget);
    }
    for (g, (&v, &count)) in grouping.representatives.iter().zip(&grouping.counts).enumerate() {
        let row = lp.add_row(RowLabel::MatchingGroup(g), count as f64);
        for bid in instance.queries()[v].positive_bids() {
            lp.add_column(
                VarLabel::PairGroup { bidder: bid.bidder, group: g },
                bid.amount,
                vec![(bid.bidder, bid.amount), (row, 1.0)],
            );
        }
    }
    Ok((lp, grouping))
}

/// Packing LP with consumption normalised by capacity, over the full stream.
pub fn build_offline_plp(instance: &PlpInstance) -> Result<StandardLp, LpError> {
    build_sampled_plp(instance, 0..instance.n(), 1.0, false).map(|(lp, _)| lp)
}

/// Packing LP over agents `agents` with every resource row's right-hand side
/// set to `resource_rhs` (1 for the full problem, `ε` for a sample).
pub fn build_sampled_plp(
    instance: &PlpInstance,
    agents: Range<usize>,
    resource_rhs: f64,
    aggregate: bool,
) -> Result<(StandardLp, Grouping), LpError> {
    let members: Vec<usize> = agents.collect();
    let grouping = if aggregate {
        Grouping::build(members, |i| {
            instance.agents()[i]
                .options
                .iter()
                .map(|o| {
                    let cons: Vec<_> =
                        o.consumption().iter().map(|&(j, a)| (j, a.to_bits())).collect();
                    (o.value.to_bits(), cons)
                })
                .collect::<Vec<_>>()
        })
    } else {
        Grouping::singletons(members)
    };
    let vars: usize =
        grouping.representatives.iter().map(|&i| instance.agents()[i].options.len()).sum();
    guard(vars, instance.m() + grouping.num_groups())?;
    let capacities = instance.capacities();
    let mut lp = StandardLp::new();
    for j in 0..instance.m() {
        lp.add_row(RowLabel::Resource(j), resource_rhs);
    }
    for (g, (&i, &count)) in grouping.representatives.iter().zip(&grouping.counts).enumerate() {
        let row = if aggregate {
            lp.add_row(RowLabel::AgentGroup(g), count as f64)
        } else {
            lp.add_row(RowLabel::Agent(i), 1.0)
        };
        for (o, opt) in instance.agents()[i].options.iter().enumerate() {
            let mut entries: Vec<(usize, f64)> =
                opt.consumption().iter().map(|&(j, a)| (j, a / capacities[j])).collect();
            entries.push((row, 1.0));
            let label = if aggregate {
                VarLabel::OptionGroup { group: g, option: o }
            } else {
                VarLabel::Option { agent: i, option: o }
            };
            lp.add_column(label, opt.value, entries);
        }
    }
    Ok((lp, grouping))
}

fn require_optimal(sol: &LpSolution) -> Result<(), LpError> {
    if sol.is_optimal() {
        Ok(())
    } else {
        Err(LpError::NotOptimal(sol.status))
    }
}

/// Fractional offline optimum of an AdWords instance, expanded back to
/// per-query values.
#[derive(Debug, Clone)]
pub struct AdwordsOptimum {
    pub objective: f64,
    /// Dual of each bidder's budget row.
    pub alpha: Vec<f64>,
    /// Dual of each query's matching row (0 for queries without positive bids).
    pub beta: Vec<f64>,
    /// `(bidder, x_uv)` for each query, positive entries only.
    pub allocation: Vec<Vec<(usize, f64)>>,
    pub aggregated_lp: StandardLp,
    pub aggregated: LpSolution,
    pub grouping: Grouping,
}

pub fn solve_offline_adwords(instance: &AdwordsInstance) -> Result<AdwordsOptimum, LpError> {
    let (lp, grouping) = build_aggregated_adwords_lp(instance)?;
    let sol = solve(&lp)?;
    require_optimal(&sol)?;
    let u_count = instance.num_bidders();
    let alpha = sol.dual[..u_count].to_vec();
    let mut beta = vec![0.0; instance.num_queries()];
    let mut allocation = vec![Vec::new(); instance.num_queries()];
    let mut group_alloc: Vec<Vec<(usize, f64)>> = vec![Vec::new(); grouping.num_groups()];
    for (k, label) in lp.var_labels().iter().enumerate() {
        if let VarLabel::PairGroup { bidder, group } = *label {
            if sol.primal[k] > 0.0 {
                group_alloc[group].push((bidder, sol.primal[k] / grouping.counts[group] as f64));
            }
        }
    }
    for (&v, &g) in grouping.members.iter().zip(&grouping.group_of) {
        beta[v] = sol.dual[u_count + g];
        allocation[v] = group_alloc[g].clone();
    }
    Ok(AdwordsOptimum {
        objective: sol.objective,
        alpha,
        beta,
        allocation,
        aggregated_lp: lp,
        aggregated: sol,
        grouping,
    })
}

impl AdwordsOptimum {
    /// The unaggregated LP together with this optimum written in its variables.
    pub fn expanded(&self, instance: &AdwordsInstance) -> Result<(StandardLp, LpSolution), LpError> {
        let lp = build_offline_adwords_lp(instance)?;
        let mut x = vec![0.0; lp.num_vars()];
        for (k, label) in lp.var_labels().iter().enumerate() {
            if let VarLabel::Pair { bidder, query } = *label {
                x[k] = self.allocation[query]
                    .iter()
                    .find(|&&(u, _)| u == bidder)
                    .map_or(0.0, |&(_, x)| x);
            }
        }
        let y = lp
            .row_labels()
            .iter()
            .map(|l| match *l {
                RowLabel::Budget(u) => self.alpha[u],
                RowLabel::Matching(v) => self.beta[v],
                _ => 0.0,
            })
            .collect();
        let sol = LpSolution::from_values(&lp, x, y);
        Ok((lp, sol))
    }
}

/// Fractional optimum of a (possibly sampled) packing LP.
#[derive(Debug, Clone)]
pub struct PlpOptimum {
    pub objective: f64,
    /// Dual of each normalised resource row.
    pub alpha: Vec<f64>,
    /// Dual of each member agent's assignment row, parallel to `grouping.members`.
    pub beta: Vec<f64>,
    pub lp: StandardLp,
    pub solution: LpSolution,
    pub grouping: Grouping,
}

pub fn solve_sampled_plp(
    instance: &PlpInstance,
    agents: Range<usize>,
    resource_rhs: f64,
    aggregate: bool,
) -> Result<PlpOptimum, LpError> {
    let (lp, grouping) = build_sampled_plp(instance, agents, resource_rhs, aggregate)?;
    let sol = solve(&lp)?;
    require_optimal(&sol)?;
    let m = instance.m();
    let alpha = sol.dual[..m].to_vec();
    let beta = grouping.group_of.iter().map(|&g| sol.dual[m + g]).collect();
    Ok(PlpOptimum { objective: sol.objective, alpha, beta, lp, solution: sol, grouping })
}

/// Offline optimum of the whole packing instance, using aggregation.
pub fn solve_offline_plp(instance: &PlpInstance) -> Result<PlpOptimum, LpError> {
    solve_sampled_plp(instance, 0..instance.n(), 1.0, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Agent, AgentOption, Bid, Bidder, Query, Resource};
    use approx::assert_abs_diff_eq;

    fn single(budget: f64, bids: &[f64]) -> AdwordsInstance {
        AdwordsInstance::new(
            vec![Bidder { id: "u".into(), budget }],
            bids.iter()
                .enumerate()
                .map(|(k, &w)| Query::new(format!("v{k}"), vec![Bid { bidder: 0, amount: w }]))
                .collect(),
        )
    }

    #[test]
    fn single_match() {
        let inst = single(1.0, &[0.4]);
        let lp = build_offline_adwords_lp(&inst).unwrap();
        assert_eq!((lp.num_vars(), lp.num_rows()), (1, 2));
        let sol = solve(&lp).unwrap();
        assert_abs_diff_eq!(sol.objective, 0.4, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.primal[0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn plp_image_keeps_optimum() {
        let inst = single(1.0, &[0.4]);
        let sol = solve(&build_offline_plp(&inst.to_plp()).unwrap()).unwrap();
        assert_abs_diff_eq!(sol.objective, 0.4, epsilon = 1e-12);
    }

    #[test]
    fn two_agents_sharing_one_resource() {
        let opt = AgentOption::new(1.0, vec![(0, 0.6)]);
        let inst = PlpInstance::new(
            vec![Resource { id: "r".into(), capacity: 1.0 }],
            vec![
                Agent { id: "a".into(), options: vec![opt.clone()] },
                Agent { id: "b".into(), options: vec![opt] },
            ],
        );
        let sol = solve(&build_offline_plp(&inst).unwrap()).unwrap();
        assert_abs_diff_eq!(sol.objective, 5.0 / 3.0, epsilon = 1e-12);
        let mut x = sol.primal.clone();
        x.sort_by(f64::total_cmp);
        assert_abs_diff_eq!(x[0], 2.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(x[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn empty_agent_list_has_zero_optimum() {
        let inst = PlpInstance::new(vec![Resource { id: "r".into(), capacity: 1.0 }], vec![]);
        assert_eq!(solve(&build_offline_plp(&inst).unwrap()).unwrap().objective, 0.0);
        assert_eq!(solve_offline_plp(&inst).unwrap().objective, 0.0);
    }

    #[test]
    fn aggregation_merges_identical_queries() {
        let inst = single(1.0, &[0.5, 0.5, 0.5]);
        let (lp, grouping) = build_aggregated_adwords_lp(&inst).unwrap();
        assert_eq!(grouping.counts, vec![3]);
        assert_eq!(lp.num_vars(), 1);
        let opt = solve_offline_adwords(&inst).unwrap();
        assert_abs_diff_eq!(opt.objective, 1.0, epsilon = 1e-12);
        let (full, sol) = opt.expanded(&inst).unwrap();
        assert_eq!(full.num_vars(), 3);
        assert!(sol.primal_residual < 1e-12 && sol.dual_residual < 1e-12);
        assert_abs_diff_eq!(sol.objective, sol.dual_objective, epsilon = 1e-12);
    }
}
