//! Instance generators.
//!
//! The two worst-case families are deterministic and have known offline
//! optima. The random families draw from ChaCha8 keyed by the seed (the seed's
//! little-endian bytes followed by zeros), and convert raw 64-bit outputs to
//! numbers explicitly so that a given seed yields the same instance in any
//! implementation of ChaCha8:
//!
//! * uniform `[0, 1)`: `(x >> 11) · 2⁻⁵³`
//! * uniform index below `k`: `(x · k) >> 64` in 128-bit arithmetic

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::model::{AdwordsInstance, Agent, AgentOption, Bid, Bidder, PlpInstance, Query, Resource};

#[derive(Debug, thiserror::Error)]
pub enum GenError {
    #[error("invalid generator parameter: {0}")]
    InvalidParameter(String),
}

fn invalid(msg: impl Into<String>) -> GenError {
    GenError::InvalidParameter(msg.into())
}

/// Seeded stream of uniform draws.
pub struct Stream(ChaCha8Rng);

impl Stream {
    pub fn new(seed: u64) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        Stream(ChaCha8Rng::from_seed(key))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    pub fn index(&mut self, k: usize) -> usize {
        ((self.next_u64() as u128 * k as u128) >> 64) as usize
    }
}

/// `1/granularity` as an integer, if it is one.
fn steps(granularity: f64) -> Result<usize, GenError> {
    if !(granularity > 0.0 && granularity <= 1.0) {
        return Err(invalid(format!("granularity {granularity} must lie in (0, 1]")));
    }
    let inv = 1.0 / granularity;
    let rounded = inv.round();
    if (inv - rounded).abs() > 1e-9 * inv {
        return Err(invalid(format!("1/{granularity} is not an integer")));
    }
    Ok(rounded as usize)
}

fn unit_bidders(ids: impl Iterator<Item = String>) -> Vec<Bidder> {
    ids.map(|id| Bidder { id, budget: 1.0 }).collect()
}

/// Two unit-budget bidders. Phase one: `1/ε_b` queries bidding `ε_b` on both.
/// Phase two: `1/ε_b` queries bidding `ε_b` on `u1` only. Lowest-index
/// tie-breaking sends all of phase one to `u1`, so greedy earns 1 against an
/// optimum of 2.
pub fn gen_greedy_worstcase(granularity: f64) -> Result<AdwordsInstance, GenError> {
    let k = steps(granularity)?;
    let bidders = unit_bidders(["u1", "u2"].into_iter().map(String::from));
    let mut queries = Vec::with_capacity(2 * k);
    for i in 0..k {
        queries.push(Query::new(
            format!("p1_{i}"),
            vec![Bid { bidder: 0, amount: granularity }, Bid { bidder: 1, amount: granularity }],
        ));
    }
    for i in 0..k {
        queries.push(Query::new(format!("p2_{i}"), vec![Bid { bidder: 0, amount: granularity }]));
    }
    Ok(AdwordsInstance::new(bidders, queries))
}

/// Upper-triangular family: `N` unit-budget bidders `u1..uN` and `N` phases;
/// phase `p` has `1/ε_b` queries bidding `ε_b` on `u_p..u_N`. Assigning phase
/// `p` to `u_p` earns `N`.
///
/// Bidders are listed from `u_N` down to `u1`, so the lowest index among a
/// phase's eligible bidders is always the one the optimum saves for last.
pub fn gen_msvv_worstcase(bidders: usize, granularity: f64) -> Result<AdwordsInstance, GenError> {
    if bidders < 2 {
        return Err(invalid(format!("need at least 2 bidders, got {bidders}")));
    }
    let k = steps(granularity)?;
    let list = unit_bidders((1..=bidders).rev().map(|p| format!("u{p}")));
    let index_of = |p: usize| bidders - p;
    let mut queries = Vec::with_capacity(bidders * k);
    for p in 1..=bidders {
        for i in 0..k {
            let bids =
                (p..=bidders).map(|r| Bid { bidder: index_of(r), amount: granularity }).collect();
            queries.push(Query::new(format!("p{p}_{i}"), bids));
        }
    }
    Ok(AdwordsInstance::new(list, queries))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IidParams {
    pub seed: u64,
    pub n: usize,
    pub m: usize,
    /// Size of the agent-type pool.
    pub types: usize,
    pub q: usize,
    pub capacity_scale: f64,
}

impl IidParams {
    /// Parameters of the standard stochastic acceptance run.
    pub fn acceptance(seed: u64) -> Self {
        IidParams { seed, n: 100_000, m: 2, types: 20, q: 5, capacity_scale: 0.4 }
    }
}

/// IID packing stream over a finite type pool.
///
/// Each of `types` agent types has `q` options with value `U[0.5, 1.5]` and a
/// consumption `U[0.5, 1.5]` of every resource. Agents draw a type uniformly.
/// Every capacity is `capacity_scale · n · μ / m`, where `μ` is the mean total
/// consumption of a pool option.
pub fn gen_iid(params: &IidParams) -> Result<PlpInstance, GenError> {
    let IidParams { seed, n, m, types, q, capacity_scale } = *params;
    if types < 1 {
        return Err(invalid("type pool must be nonempty"));
    }
    if q < 2 {
        return Err(invalid(format!("q = {q}, need at least 2 options per agent")));
    }
    if n < 10 {
        return Err(invalid(format!("n = {n}, need at least 10 agents")));
    }
    if m < 1 {
        return Err(invalid("need at least one resource"));
    }
    if !(capacity_scale > 0.0 && capacity_scale.is_finite()) {
        return Err(invalid(format!("capacity_scale {capacity_scale} must be positive")));
    }
    let mut rng = Stream::new(seed);
    let pool: Vec<Vec<AgentOption>> = (0..types)
        .map(|_| {
            (0..q)
                .map(|_| {
                    let value = rng.uniform(0.5, 1.5);
                    let consumption = (0..m).map(|j| (j, rng.uniform(0.5, 1.5))).collect();
                    AgentOption::new(value, consumption)
                })
                .collect()
        })
        .collect();
    let total: f64 = pool
        .iter()
        .flatten()
        .map(|o| o.consumption().iter().map(|&(_, a)| a).sum::<f64>())
        .sum();
    let mean = total / (types * q) as f64;
    let capacity = capacity_scale * n as f64 * mean / m as f64;
    let resources = (0..m).map(|j| Resource { id: format!("r{j}"), capacity }).collect();
    let agents = (0..n)
        .map(|i| Agent { id: format!("a{i}"), options: pool[rng.index(types)].clone() })
        .collect();
    Ok(PlpInstance::new(resources, agents))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomAdwordsParams {
    pub seed: u64,
    pub bidders: usize,
    /// Number of distinct bid vectors queries are drawn from.
    pub types: usize,
    pub queries: usize,
    /// Every bid is at most this fraction of its bidder's budget.
    pub max_bid_ratio: f64,
}

/// Random small-bid AdWords stream. Budgets are `U[0.5, 2]`; each query type
/// bids on every bidder with probability 1/2 (at least one), with amount
/// `U[0.1, 1]·max_bid_ratio·B_u`; queries draw a type uniformly.
pub fn gen_random_adwords(params: &RandomAdwordsParams) -> Result<AdwordsInstance, GenError> {
    let RandomAdwordsParams { seed, bidders, types, queries, max_bid_ratio } = *params;
    if bidders < 1 || types < 1 || queries < 1 {
        return Err(invalid("bidders, types and queries must all be positive"));
    }
    if !(max_bid_ratio > 0.0 && max_bid_ratio <= 1.0) {
        return Err(invalid(format!("max_bid_ratio {max_bid_ratio} must lie in (0, 1]")));
    }
    let mut rng = Stream::new(seed);
    let budgets: Vec<f64> = (0..bidders).map(|_| rng.uniform(0.5, 2.0)).collect();
    let pool: Vec<Vec<Bid>> = (0..types)
        .map(|_| {
            let mut chosen: Vec<usize> = (0..bidders).filter(|_| rng.unit() < 0.5).collect();
            if chosen.is_empty() {
                chosen.push(rng.index(bidders));
            }
            chosen
                .into_iter()
                .map(|u| Bid { bidder: u, amount: rng.uniform(0.1, 1.0) * max_bid_ratio * budgets[u] })
                .collect()
        })
        .collect();
    let bidder_list = budgets
        .iter()
        .enumerate()
        .map(|(u, &budget)| Bidder { id: format!("u{u}"), budget })
        .collect();
    let stream = (0..queries)
        .map(|v| Query::new(format!("v{v}"), pool[rng.index(types)].clone()))
        .collect();
    Ok(AdwordsInstance::new(bidder_list, stream))
}
