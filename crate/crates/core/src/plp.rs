//! Training-based primal-dual algorithm for online stochastic packing LPs.
//!
//! The first `⌊εn⌋` agents form a sample. The packing LP restricted to the
//! sample, with every capacity scaled by `ε`, is solved offline and its
//! resource duals `α*` become fixed prices. Each later agent takes the option
//! of largest gain `w − Σ_j α*_j·a_j/c_j` if that gain is nonnegative and the
//! remaining capacities admit it.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::lp::{solve_offline_plp, solve_sampled_plp, LpError, PlpOptimum};
use crate::model::{AdwordsInstance, AgentOption, PlpInstance, Violation};
use crate::online::beats;

/// Round-off allowance for nonnegative gains and capacity admission.
pub const GAIN_TOL: f64 = 1e-9;
/// Window around `ε` within which `C(j,S)` counts as equal to `ε`.
pub const LEMMA_WINDOW: f64 = 1e-6;

#[derive(Debug, thiserror::Error)]
pub enum PlpError {
    #[error("invalid instance: {0:?}")]
    Invalid(Vec<Violation>),
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("sample is empty: floor({epsilon} * {n}) < 1")]
    EmptySample { n: usize, epsilon: f64 },
    #[error(transparent)]
    Lp(#[from] LpError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Warmup {
    /// Sample agents stay unassigned.
    #[default]
    Skip,
    /// Sample agents take their highest-value option that fits.
    Greedy,
}

impl std::str::FromStr for Warmup {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "skip" => Ok(Warmup::Skip),
            "greedy" => Ok(Warmup::Greedy),
            other => Err(format!("unknown warmup `{other}` (expected skip or greedy)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub epsilon: f64,
    pub warmup: Warmup,
    pub seed: u64,
}

impl TrainingConfig {
    pub fn new(epsilon: f64) -> Self {
        TrainingConfig { epsilon, warmup: Warmup::Skip, seed: 0 }
    }

    pub fn validate(&self) -> Result<(), PlpError> {
        if self.epsilon > 0.0 && self.epsilon < 1.0 {
            Ok(())
        } else {
            Err(PlpError::Config(format!("epsilon = {} must lie in (0, 1)", self.epsilon)))
        }
    }
}

/// `⌊εn⌋`, immune to products like `0.29·100 = 28.999…`.
pub fn sample_size(n: usize, epsilon: f64) -> usize {
    (epsilon * n as f64 + 1e-9).floor() as usize
}

/// Sample and remainder as index ranges of the arrival order.
pub fn split_sample(
    instance: &PlpInstance,
    epsilon: f64,
) -> Result<(Range<usize>, Range<usize>), PlpError> {
    TrainingConfig::new(epsilon).validate()?;
    let n = instance.n();
    let s = sample_size(n, epsilon);
    if s < 1 {
        return Err(PlpError::EmptySample { n, epsilon });
    }
    Ok((0..s, s..n))
}

#[derive(Debug, Clone)]
pub struct SampledDual {
    pub alpha_star: Vec<f64>,
    pub optimum: PlpOptimum,
}

/// Resource duals of the sampled LP with capacities `ε·c_j`.
pub fn solve_sampled_dual(
    instance: &PlpInstance,
    sample: Range<usize>,
    epsilon: f64,
) -> Result<SampledDual, PlpError> {
    if sample.is_empty() {
        return Err(PlpError::EmptySample { n: instance.n(), epsilon });
    }
    let optimum = solve_sampled_plp(instance, sample, epsilon, true)?;
    let alpha_star = optimum.alpha.iter().map(|&a| a.max(0.0)).collect();
    Ok(SampledDual { alpha_star, optimum })
}

/// `w − Σ_j α_j·a_j/c_j`.
pub fn gain(option: &AgentOption, capacities: &[f64], alpha: &[f64]) -> f64 {
    option.value
        - option.consumption().iter().map(|&(j, a)| alpha[j] * a / capacities[j]).sum::<f64>()
}

/// Gain comparison with ties measured against the agent's largest value, so
/// gains that cancel to round-off around zero still tie.
fn gain_beats(candidate: f64, best: f64, scale: f64) -> bool {
    candidate > best + 1e-12 * scale.max(best.abs())
}

/// Option of largest gain (lowest index on ties) and that gain.
pub fn best_option(options: &[AgentOption], capacities: &[f64], alpha: &[f64]) -> Option<(usize, f64)> {
    let scale = options.iter().map(|o| o.value.abs()).fold(0.0, f64::max);
    let mut best: Option<(usize, f64)> = None;
    for (o, opt) in options.iter().enumerate() {
        let g = gain(opt, capacities, alpha);
        if best.is_none_or(|(_, b)| gain_beats(g, b, scale)) {
            best = Some((o, g));
        }
    }
    best
}

fn fits(option: &AgentOption, used: &[f64], capacities: &[f64]) -> bool {
    option
        .consumption()
        .iter()
        .all(|&(j, a)| used[j] + a <= capacities[j] * (1.0 + GAIN_TOL))
}

fn charge(option: &AgentOption, used: &mut [f64]) {
    for &(j, a) in option.consumption() {
        used[j] += a;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Sample,
    Online,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Accepted,
    WarmupSkipped,
    NegativeGain,
    CapacityExceeded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlpDecision {
    pub agent: usize,
    pub phase: Phase,
    pub outcome: Outcome,
    /// Argmax-gain option (online phase) or argmax-value option (greedy warmup).
    pub candidate: Option<usize>,
    pub option: Option<usize>,
    pub gain: Option<f64>,
    pub earned: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlpTrace {
    pub alpha_star: Vec<f64>,
    pub decisions: Vec<PlpDecision>,
    /// Raw consumption charged to each resource.
    pub used: Vec<f64>,
}

impl PlpTrace {
    pub fn selections(&self) -> Vec<Option<usize>> {
        self.decisions.iter().map(|d| d.option).collect()
    }

    pub fn value(&self, phase: Option<Phase>) -> f64 {
        self.decisions
            .iter()
            .filter(|d| phase.is_none_or(|p| d.phase == p))
            .map(|d| d.earned)
            .sum()
    }
}

/// Runs both phases with prices `alpha_star`.
pub fn run_with_prices(
    instance: &PlpInstance,
    alpha_star: &[f64],
    sample: Range<usize>,
    warmup: Warmup,
) -> PlpTrace {
    let capacities = instance.capacities();
    let mut used = vec![0.0; instance.m()];
    let mut decisions = Vec::with_capacity(instance.n());
    for (i, agent) in instance.agents().iter().enumerate() {
        let decision = if sample.contains(&i) {
            let mut pick: Option<usize> = None;
            if warmup == Warmup::Greedy {
                for (o, opt) in agent.options.iter().enumerate() {
                    if fits(opt, &used, &capacities)
                        && pick.is_none_or(|p| beats(opt.value, agent.options[p].value))
                    {
                        pick = Some(o);
                    }
                }
            }
            let earned = match pick {
                Some(o) => {
                    charge(&agent.options[o], &mut used);
                    agent.options[o].value
                }
                None => 0.0,
            };
            PlpDecision {
                agent: i,
                phase: Phase::Sample,
                outcome: if pick.is_some() { Outcome::Accepted } else { Outcome::WarmupSkipped },
                candidate: pick,
                option: pick,
                gain: None,
                earned,
                beta: 0.0,
            }
        } else {
            let best = best_option(&agent.options, &capacities, alpha_star);
            let (candidate, g) = match best {
                Some((o, g)) => (Some(o), g),
                None => (None, f64::NEG_INFINITY),
            };
            let (outcome, option) = match candidate {
                Some(o) if g >= -GAIN_TOL => {
                    if fits(&agent.options[o], &used, &capacities) {
                        (Outcome::Accepted, Some(o))
                    } else {
                        (Outcome::CapacityExceeded, None)
                    }
                }
                _ => (Outcome::NegativeGain, None),
            };
            let earned = match option {
                Some(o) => {
                    charge(&agent.options[o], &mut used);
                    agent.options[o].value
                }
                None => 0.0,
            };
            PlpDecision {
                agent: i,
                phase: Phase::Online,
                outcome,
                candidate,
                option,
                gain: best.map(|(_, g)| g),
                earned,
                beta: g.max(0.0),
            }
        };
        decisions.push(decision);
    }
    PlpTrace { alpha_star: alpha_star.to_vec(), decisions, used }
}

/// Largest `w_io − β_i − Σ_j α*_j·a_ioj/c_j` over online-phase agents and
/// all their options; nonpositive when `(α*, β)` is dual feasible.
pub fn max_dual_violation(instance: &PlpInstance, trace: &PlpTrace) -> f64 {
    let capacities = instance.capacities();
    let mut worst = f64::NEG_INFINITY;
    for d in trace.decisions.iter().filter(|d| d.phase == Phase::Online) {
        for opt in &instance.agents()[d.agent].options {
            worst = worst.max(gain(opt, &capacities, &trace.alpha_star) - d.beta);
        }
    }
    if worst == f64::NEG_INFINITY {
        0.0
    } else {
        worst
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionMargins {
    /// `(m+1)(ln n + ln q)`.
    pub log_factor: f64,
    pub condition1_lhs: f64,
    pub condition1_rhs: f64,
    pub condition1_margin: f64,
    pub condition1_holds: bool,
    /// `max_{i,o} a_ioj/c_j` per resource.
    pub condition2_lhs: Vec<f64>,
    pub condition2_rhs: f64,
    pub condition2_margin: Vec<f64>,
    pub condition2_holds: bool,
    pub holds: bool,
}

pub fn log_factor(n: usize, m: usize, q: usize) -> f64 {
    let ln = |x: usize| if x > 1 { (x as f64).ln() } else { 0.0 };
    (m as f64 + 1.0) * (ln(n) + ln(q))
}

/// Theorem 5 conditions: `w_max/OPT ≤ ε/L` and `a_ioj/c_j ≤ ε³/L` with
/// `L = (m+1)(ln n + ln q)`.
pub fn check_theorem5_conditions(instance: &PlpInstance, epsilon: f64, opt: f64) -> ConditionMargins {
    let l = log_factor(instance.n(), instance.m(), instance.q());
    let condition1_rhs = epsilon / l;
    let condition1_lhs = if opt > 0.0 { instance.max_value() / opt } else { f64::INFINITY };
    let condition1_margin = condition1_rhs - condition1_lhs;
    let condition2_rhs = epsilon.powi(3) / l;
    let mut condition2_lhs = vec![0.0_f64; instance.m()];
    for opt in instance.agents().iter().flat_map(|a| &a.options) {
        for &(j, a) in opt.consumption() {
            condition2_lhs[j] = condition2_lhs[j].max(a / instance.capacity(j));
        }
    }
    let condition2_margin: Vec<f64> = condition2_lhs.iter().map(|&x| condition2_rhs - x).collect();
    let condition1_holds = condition1_margin >= 0.0;
    let condition2_holds = condition2_margin.iter().all(|&x| x >= 0.0);
    ConditionMargins {
        log_factor: l,
        condition1_lhs,
        condition1_rhs,
        condition1_margin,
        condition1_holds,
        condition2_lhs,
        condition2_rhs,
        condition2_margin,
        condition2_holds,
        holds: condition1_holds && condition2_holds,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaCheck {
    pub resource: usize,
    /// `C(j,S)` within [`LEMMA_WINDOW`] of `ε` and the sample not `r_j`-bad.
    pub applicable: bool,
    pub lower: f64,
    pub upper: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BadnessStats {
    pub w_total: f64,
    pub w_sample: f64,
    pub c_total: Vec<f64>,
    pub c_sample: Vec<f64>,
    pub w_max: f64,
    pub a_max: f64,
    pub r: Vec<f64>,
    pub r_threshold: Vec<f64>,
    pub r_bad: Vec<bool>,
    pub t: f64,
    pub t_threshold: f64,
    pub t_bad: bool,
    pub is_bad: bool,
    pub lemma: Vec<LemmaCheck>,
}

/// Definition 3 statistics of the analysis set `O*`: every agent paired with
/// its argmax-gain option when that gain is nonnegative.
pub fn badness_stats(
    instance: &PlpInstance,
    alpha_star: &[f64],
    sample: Range<usize>,
    epsilon: f64,
) -> BadnessStats {
    let m = instance.m();
    let capacities = instance.capacities();
    let (mut w_total, mut w_sample) = (0.0, 0.0);
    let mut c_total = vec![0.0; m];
    let mut c_sample = vec![0.0; m];
    for (i, agent) in instance.agents().iter().enumerate() {
        let Some((o, g)) = best_option(&agent.options, &capacities, alpha_star) else { continue };
        if g < -GAIN_TOL {
            continue;
        }
        let opt = &agent.options[o];
        let in_sample = sample.contains(&i);
        w_total += opt.value;
        if in_sample {
            w_sample += opt.value;
        }
        for &(j, a) in opt.consumption() {
            c_total[j] += a / capacities[j];
            if in_sample {
                c_sample[j] += a / capacities[j];
            }
        }
    }
    let l = log_factor(instance.n(), m, instance.q());
    let w_max = instance.max_value();
    let a_max = instance.max_normalized_consumption();
    let threshold = |scale: f64, total: f64| {
        l * scale + total.max(0.0).sqrt() * 2.0 * (epsilon * l * scale).sqrt()
    };
    let bad = |dev: f64, thr: f64| dev > 0.0 && dev >= thr;
    let r: Vec<f64> = (0..m).map(|j| (c_sample[j] - epsilon * c_total[j]).abs()).collect();
    let r_threshold: Vec<f64> = c_total.iter().map(|&c| threshold(a_max, c)).collect();
    let r_bad: Vec<bool> = r.iter().zip(&r_threshold).map(|(&x, &t)| bad(x, t)).collect();
    let t = (w_sample - epsilon * w_total).abs();
    let t_threshold = threshold(w_max, w_total);
    let t_bad = bad(t, t_threshold);
    let lower = 1.0 - 2.0 * epsilon;
    let upper = 1.0 + 3.0 * (epsilon + epsilon * epsilon);
    let lemma = (0..m)
        .map(|j| {
            let applicable = (c_sample[j] - epsilon).abs() <= LEMMA_WINDOW && !r_bad[j];
            let inside = c_total[j] >= lower && c_total[j] <= upper;
            LemmaCheck { resource: j, applicable, lower, upper, holds: !applicable || inside }
        })
        .collect();
    BadnessStats {
        w_total,
        w_sample,
        c_total,
        c_sample,
        w_max,
        a_max,
        is_bad: t_bad || r_bad.iter().any(|&b| b),
        r,
        r_threshold,
        r_bad,
        t,
        t_threshold,
        t_bad,
        lemma,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    pub config: TrainingConfig,
    pub n: usize,
    pub m: usize,
    pub q: usize,
    pub sample_size: usize,
    pub alpha_star: Vec<f64>,
    pub sample_objective: f64,
    pub opt: f64,
    pub achieved_excluding_sample: f64,
    pub achieved_including_sample: f64,
    pub ratio_excluding_sample: f64,
    pub ratio_including_sample: f64,
    pub accepted: usize,
    pub skipped_negative_gain: usize,
    pub skipped_capacity: usize,
    pub max_dual_violation: f64,
    pub dual_feasible: bool,
    /// Consumption over capacity per resource.
    pub capacity_usage: Vec<f64>,
    pub capacity_safe: bool,
    pub conditions: ConditionMargins,
    pub badness: BadnessStats,
}

impl TrainingReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn ratio(value: f64, opt: f64) -> f64 {
    if opt > 0.0 {
        value / opt
    } else if value > 0.0 {
        f64::INFINITY
    } else {
        1.0
    }
}

pub fn run_training_based(
    instance: &PlpInstance,
    config: &TrainingConfig,
) -> Result<(PlpTrace, TrainingReport), PlpError> {
    config.validate()?;
    let violations = instance.validate();
    if !violations.is_empty() {
        return Err(PlpError::Invalid(violations));
    }
    let (sample, _) = split_sample(instance, config.epsilon)?;
    let sampled = solve_sampled_dual(instance, sample.clone(), config.epsilon)?;
    let trace = run_with_prices(instance, &sampled.alpha_star, sample.clone(), config.warmup);
    let opt = solve_offline_plp(instance)?.objective;

    let count = |o: Outcome| trace.decisions.iter().filter(|d| d.outcome == o).count();
    let excluding = trace.value(Some(Phase::Online));
    let including = trace.value(None);
    let violation = max_dual_violation(instance, &trace);
    let capacity_usage: Vec<f64> =
        trace.used.iter().zip(instance.capacities()).map(|(&u, c)| u / c).collect();
    let report = TrainingReport {
        config: *config,
        n: instance.n(),
        m: instance.m(),
        q: instance.q(),
        sample_size: sample.len(),
        alpha_star: sampled.alpha_star.clone(),
        sample_objective: sampled.optimum.objective,
        opt,
        achieved_excluding_sample: excluding,
        achieved_including_sample: including,
        ratio_excluding_sample: ratio(excluding, opt),
        ratio_including_sample: ratio(including, opt),
        accepted: count(Outcome::Accepted),
        skipped_negative_gain: count(Outcome::NegativeGain),
        skipped_capacity: count(Outcome::CapacityExceeded),
        max_dual_violation: violation,
        dual_feasible: violation <= GAIN_TOL,
        capacity_safe: capacity_usage.iter().all(|&u| u <= 1.0 + GAIN_TOL),
        capacity_usage,
        conditions: check_theorem5_conditions(instance, config.epsilon, opt),
        badness: badness_stats(instance, &sampled.alpha_star, sample, config.epsilon),
    };
    Ok((trace, report))
}

/// AdWords form of the online phase: bidder prices `α_u = α*_u / B_u`, each
/// query after the sample goes to the bidder maximising `w_uv·(1 − α_u)` if
/// that is nonnegative and the bid fits the remaining budget.
///
/// `sample` counts queries with at least one positive bid, matching the agent
/// order of [`AdwordsInstance::to_plp`]. Returns the chosen bidder per query.
pub fn adwords_gain_rule(
    instance: &AdwordsInstance,
    alpha_star: &[f64],
    sample: usize,
) -> Vec<Option<usize>> {
    let alpha: Vec<f64> =
        alpha_star.iter().enumerate().map(|(u, &a)| a / instance.budget(u)).collect();
    let mut spent = vec![0.0; instance.num_bidders()];
    let mut seen = 0;
    let mut out = Vec::with_capacity(instance.num_queries());
    for q in instance.queries() {
        let mut bids = q.positive_bids().peekable();
        if bids.peek().is_none() {
            out.push(None);
            continue;
        }
        seen += 1;
        if seen <= sample {
            out.push(None);
            continue;
        }
        let scale = q.positive_bids().map(|b| b.amount).fold(0.0, f64::max);
        let mut best: Option<(usize, f64, f64)> = None;
        for b in bids {
            let g = b.amount * (1.0 - alpha[b.bidder]);
            if best.is_none_or(|(_, bg, _)| gain_beats(g, bg, scale)) {
                best = Some((b.bidder, g, b.amount));
            }
        }
        let pick = best.and_then(|(u, g, w)| {
            let budget = instance.budget(u);
            (g >= -GAIN_TOL && spent[u] + w <= budget * (1.0 + GAIN_TOL)).then_some((u, w))
        });
        if let Some((u, w)) = pick {
            spent[u] += w;
        }
        out.push(pick.map(|(u, _)| u));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Agent, Resource};
    use approx::assert_abs_diff_eq;

    fn opt(value: f64, cons: &[(usize, f64)]) -> AgentOption {
        AgentOption::new(value, cons.to_vec())
    }

    fn identical(n: usize, capacity: f64, value: f64, cons: f64) -> PlpInstance {
        PlpInstance::new(
            vec![Resource { id: "r".into(), capacity }],
            (0..n)
                .map(|i| Agent { id: format!("a{i}"), options: vec![opt(value, &[(0, cons)])] })
                .collect(),
        )
    }

    #[test]
    fn split_sizes() {
        let inst = identical(10, 1.0, 1.0, 0.1);
        assert_eq!(split_sample(&inst, 0.3).unwrap(), (0..3, 3..10));
        assert!(matches!(split_sample(&inst, 0.05), Err(PlpError::EmptySample { .. })));
        let big = identical(2000, 1.0, 1.0, 0.1);
        assert_eq!(split_sample(&big, 0.1).unwrap(), (0..200, 200..2000));
        assert_eq!(sample_size(100, 0.29), 29);
        assert!(split_sample(&inst, 1.0).is_err());
    }

    #[test]
    fn binding_sample_has_positive_price() {
        let inst = identical(20, 2.0, 1.0, 1.0);
        let d = solve_sampled_dual(&inst, 0..10, 0.5).unwrap();
        assert!(d.alpha_star[0] > 0.0);
        let slack = identical(20, 100.0, 1.0, 1.0);
        let d = solve_sampled_dual(&slack, 0..10, 0.5).unwrap();
        assert_eq!(d.alpha_star[0], 0.0);
    }

    #[test]
    fn aggregated_and_plain_sample_duals_agree() {
        let agents = (0..12)
            .map(|i| {
                let options = if i % 2 == 0 {
                    vec![opt(1.0, &[(0, 1.0), (1, 0.5)]), opt(0.7, &[(1, 1.0)])]
                } else {
                    vec![opt(1.2, &[(0, 1.5)]), opt(0.4, &[(1, 0.2)])]
                };
                Agent { id: format!("a{i}"), options }
            })
            .collect();
        let inst = PlpInstance::new(
            vec![Resource { id: "x".into(), capacity: 6.0 }, Resource { id: "y".into(), capacity: 4.0 }],
            agents,
        );
        let agg = solve_sampled_plp(&inst, 0..12, 0.5, true).unwrap();
        let plain = solve_sampled_plp(&inst, 0..12, 0.5, false).unwrap();
        assert_abs_diff_eq!(agg.objective, plain.objective, epsilon = 1e-7);
        for (a, b) in agg.alpha.iter().zip(&plain.alpha) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-7);
        }
    }

    #[test]
    fn gain_values() {
        let o = opt(2.0, &[(0, 1.0), (1, 3.0)]);
        let caps = [2.0, 3.0];
        assert_eq!(gain(&o, &caps, &[0.0, 0.0]), 2.0);
        assert_abs_diff_eq!(gain(&o, &caps, &[1.0, 1.5]), 0.0, epsilon = 1e-15);
        let w = 0.3;
        let b = 2.0;
        let alpha = 0.8;
        assert_abs_diff_eq!(gain(&opt(w, &[(0, w)]), &[b], &[alpha]), w * (1.0 - alpha / b), epsilon = 1e-15);
    }

    #[test]
    fn ties_go_to_lowest_option() {
        let options = vec![opt(1.0, &[(0, 1.0)]), opt(1.0, &[(0, 1.0)])];
        assert_eq!(best_option(&options, &[1.0], &[0.5]).unwrap().0, 0);
    }

    #[test]
    fn negative_gains_skip_everyone() {
        let inst = identical(10, 5.0, 1.0, 1.0);
        let trace = run_with_prices(&inst, &[10.0], 0..2, Warmup::Skip);
        assert_eq!(trace.value(None), 0.0);
        assert!(trace.decisions[2..].iter().all(|d| d.outcome == Outcome::NegativeGain && d.beta == 0.0));
    }

    #[test]
    fn unconstrained_run_reaches_opt() {
        let inst = identical(20, 1000.0, 1.0, 1.0);
        let (trace, report) = run_training_based(&inst, &TrainingConfig::new(0.25)).unwrap();
        assert_eq!(report.alpha_star, vec![0.0]);
        assert_eq!(report.accepted, 15);
        assert_abs_diff_eq!(report.achieved_excluding_sample, 15.0);
        assert_abs_diff_eq!(report.opt, 20.0, epsilon = 1e-7);
        assert!(report.dual_feasible && report.capacity_safe);
        assert_eq!(trace.decisions.len(), 20);
        let greedy = TrainingConfig { warmup: Warmup::Greedy, ..TrainingConfig::new(0.25) };
        let (_, report) = run_training_based(&inst, &greedy).unwrap();
        assert_abs_diff_eq!(report.achieved_including_sample, report.opt, epsilon = 1e-7);
    }

    #[test]
    fn capacity_is_never_exceeded() {
        let inst = identical(30, 3.0, 1.0, 1.0);
        let trace = run_with_prices(&inst, &[0.0], 0..3, Warmup::Greedy);
        assert!(trace.used[0] <= 3.0);
        assert_eq!(trace.decisions.iter().filter(|d| d.outcome == Outcome::CapacityExceeded).count(), 27);
        assert!(max_dual_violation(&inst, &trace) <= 0.0);
    }

    #[test]
    fn raising_prices_never_raises_gains() {
        let o = opt(1.0, &[(0, 0.4), (1, 0.2)]);
        let caps = [1.0, 2.0];
        let mut prev = gain(&o, &caps, &[0.0, 0.0]);
        for k in 1..10 {
            let g = gain(&o, &caps, &[0.1 * k as f64, 0.05 * k as f64]);
            assert!(g <= prev);
            prev = g;
        }
    }

    #[test]
    fn conditions_match_reference_numbers() {
        let l = log_factor(100_000, 2, 5);
        assert_abs_diff_eq!(0.1 / l, 0.002540, epsilon = 1e-6);
        assert_abs_diff_eq!(0.001 / l, 2.540e-5, epsilon = 1e-8);
        let inst = PlpInstance::new(
            vec![Resource { id: "r".into(), capacity: 10.0 }],
            vec![
                Agent { id: "a".into(), options: vec![opt(5.0, &[(0, 1.0)]), opt(1.0, &[(0, 1.0)])] },
                Agent { id: "b".into(), options: vec![opt(5.0, &[(0, 1.0)]), opt(1.0, &[(0, 1.0)])] },
            ],
        );
        let c = check_theorem5_conditions(&inst, 0.1, 10.0);
        assert!(!c.condition1_holds && c.condition1_margin < 0.0);
        assert_abs_diff_eq!(c.condition1_lhs, 0.5);
    }

    #[test]
    fn exact_proportions_are_not_bad() {
        let inst = identical(10, 10.0, 1.0, 1.0);
        let b = badness_stats(&inst, &[0.0], 0..2, 0.2);
        assert_abs_diff_eq!(b.w_total, 10.0);
        assert_abs_diff_eq!(b.w_sample, 2.0);
        assert_abs_diff_eq!(b.t, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(b.r[0], 0.0, epsilon = 1e-12);
        assert!(!b.t_bad && !b.r_bad[0] && !b.is_bad);
        assert!(b.lemma[0].applicable && b.lemma[0].holds);
    }

    #[test]
    fn report_round_trips_as_json() {
        let inst = identical(20, 5.0, 1.0, 1.0);
        let (_, report) = run_training_based(&inst, &TrainingConfig::new(0.2)).unwrap();
        let back: TrainingReport = serde_json::from_str(&report.to_json()).unwrap();
        assert_eq!(back, report);
    }

    #[test]
    fn warmup_parses() {
        assert_eq!("greedy".parse::<Warmup>().unwrap(), Warmup::Greedy);
        assert!("lazy".parse::<Warmup>().is_err());
    }
}
