use serde::Serialize;

use super::{OnlineError, Policy, K};
use crate::model::{AdwordsInstance, TOLERANCE};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct EngineOptions {
    /// Earn `min(w, remaining)` instead of requiring `remaining ≥ w`.
    pub truncate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EngineState {
    pub budgets: Vec<f64>,
    pub spent: Vec<f64>,
    /// `x_u`, spent fraction of the budget.
    pub spent_fraction: Vec<f64>,
    /// `X_u`, spent fraction at the end of the stream.
    pub final_fraction: Vec<f64>,
    pub alpha: Vec<f64>,
    /// `β_v` per query.
    pub beta: Vec<f64>,
    pub exhausted: Vec<bool>,
    /// Largest accepted bid of each bidder, as a fraction of its budget.
    pub max_accepted_fraction: Vec<f64>,
    pub primal: f64,
    pub dual: f64,
}

impl EngineState {
    fn new(instance: &AdwordsInstance) -> Self {
        let n = instance.num_bidders();
        EngineState {
            budgets: instance.bidders().iter().map(|b| b.budget).collect(),
            spent: vec![0.0; n],
            spent_fraction: vec![0.0; n],
            final_fraction: vec![0.0; n],
            alpha: vec![0.0; n],
            beta: vec![0.0; instance.num_queries()],
            exhausted: vec![false; n],
            max_accepted_fraction: vec![0.0; n],
            primal: 0.0,
            dual: 0.0,
        }
    }

    fn remaining(&self, u: usize) -> f64 {
        self.budgets[u] - self.spent[u]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaUpdate {
    pub bidder: usize,
    pub alpha: f64,
    pub spent_fraction: f64,
}

/// One arrival: who won, what was earned, and the dual changes it caused.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Decision {
    pub query: usize,
    pub bidder: Option<usize>,
    pub earned: f64,
    pub beta: f64,
    pub alpha_updates: Vec<AlphaUpdate>,
    /// Running objectives after this arrival.
    pub primal: f64,
    pub dual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunTrace {
    pub policy: Policy,
    pub options: EngineOptions,
    pub decisions: Vec<Decision>,
    /// Dual updates applied after the last arrival.
    pub closing_updates: Vec<AlphaUpdate>,
    pub state: EngineState,
}

impl RunTrace {
    pub fn choices(&self) -> Vec<Option<usize>> {
        self.decisions.iter().map(|d| d.bidder).collect()
    }

    /// Re-applies the recorded choices to `instance` and checks that the
    /// rebuilt trace is identical to this one.
    pub fn replay(&self, instance: &AdwordsInstance) -> Result<EngineState, OnlineError> {
        let rebuilt = run_with_choices(instance, self.policy, self.options, &self.choices())?;
        if rebuilt != *self {
            return Err(OnlineError::TraceMismatch("replay diverges from recorded trace".into()));
        }
        Ok(rebuilt.state)
    }
}

/// MSVV selection score `k·w − Δ(x, w)`.
pub fn msvv_score(x: f64, w: f64) -> f64 {
    K * w - K * (x - 1.0).exp() * w
}

/// `w·(1 − e^{−(1 − x)})`, the scaled bid.
pub fn scaled_bid(x: f64, w: f64) -> f64 {
    w * (1.0 - (-(1.0 - x)).exp())
}

/// Strictly better beyond round-off; keeps ties on the earlier candidate.
pub(crate) fn beats(candidate: f64, best: f64) -> bool {
    candidate > best + 1e-12 * best.abs()
}

struct Engine<'a> {
    instance: &'a AdwordsInstance,
    policy: Policy,
    options: EngineOptions,
    state: EngineState,
}

impl<'a> Engine<'a> {
    fn new(instance: &'a AdwordsInstance, policy: Policy, options: EngineOptions) -> Self {
        Engine { instance, policy, options, state: EngineState::new(instance) }
    }

    fn tol(&self, u: usize) -> f64 {
        TOLERANCE * self.state.budgets[u]
    }

    /// What bidder `u` would pay for a bid `w`, or `None` if unavailable.
    fn offer(&self, u: usize, w: f64) -> Option<f64> {
        if w <= 0.0 {
            return None;
        }
        let remaining = self.state.remaining(u);
        if self.options.truncate {
            (remaining > self.tol(u)).then(|| w.min(remaining))
        } else {
            (w <= remaining + self.tol(u)).then_some(w)
        }
    }

    fn choose(&self, v: usize) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for bid in self.instance.queries()[v].bids() {
            let Some(amount) = self.offer(bid.bidder, bid.amount) else { continue };
            let score = match self.policy {
                Policy::Greedy => amount,
                Policy::Msvv => msvv_score(self.state.spent_fraction[bid.bidder], amount),
            };
            if score <= 0.0 {
                continue;
            }
            if best.is_none_or(|(_, s)| beats(score, s)) {
                best = Some((bid.bidder, score));
            }
        }
        best.map(|(u, _)| u)
    }

    fn set_alpha_one(&mut self, u: usize, updates: &mut Vec<AlphaUpdate>) {
        if self.state.alpha[u] == 0.0 {
            self.state.alpha[u] = 1.0;
            self.state.dual += self.state.budgets[u];
            updates.push(AlphaUpdate {
                bidder: u,
                alpha: 1.0,
                spent_fraction: self.state.spent_fraction[u],
            });
        }
    }

    fn apply(&mut self, v: usize, choice: Option<usize>) -> Result<Decision, OnlineError> {
        let query = &self.instance.queries()[v];
        let mut updates = Vec::new();

        if self.policy == Policy::Greedy {
            // A neighbour that cannot afford its bid has finished its budget.
            for bid in query.positive_bids() {
                if self.offer(bid.bidder, bid.amount).is_none() {
                    self.state.exhausted[bid.bidder] = true;
                    self.set_alpha_one(bid.bidder, &mut updates);
                }
            }
        }

        let mut earned = 0.0;
        let mut beta = 0.0;
        if let Some(u) = choice {
            let w = query.bid_for(u);
            let amount = self.offer(u, w).ok_or_else(|| {
                OnlineError::TraceMismatch(format!("query {v}: bidder {u} cannot take bid {w}"))
            })?;
            let budget = self.state.budgets[u];
            let x = self.state.spent_fraction[u];
            earned = amount;
            match self.policy {
                Policy::Greedy => {
                    beta = amount;
                    self.state.dual += beta;
                }
                Policy::Msvv => {
                    let step = K * (x - 1.0).exp() * (amount / budget);
                    beta = msvv_score(x, amount);
                    self.state.alpha[u] += step;
                    self.state.dual += budget * step + beta;
                }
            }
            self.state.spent[u] += amount;
            self.state.spent_fraction[u] = (self.state.spent[u] / budget).min(1.0);
            self.state.max_accepted_fraction[u] =
                self.state.max_accepted_fraction[u].max(amount / budget);
            self.state.primal += amount;
            if self.state.remaining(u) <= self.tol(u) {
                self.state.exhausted[u] = true;
                if self.policy == Policy::Greedy {
                    self.set_alpha_one(u, &mut updates);
                }
            }
            if self.policy == Policy::Msvv {
                updates.push(AlphaUpdate {
                    bidder: u,
                    alpha: self.state.alpha[u],
                    spent_fraction: self.state.spent_fraction[u],
                });
            }
        }
        self.state.beta[v] = beta;
        Ok(Decision {
            query: v,
            bidder: choice,
            earned,
            beta,
            alpha_updates: updates,
            primal: self.state.primal,
            dual: self.state.dual,
        })
    }

    fn finish(&mut self) -> Vec<AlphaUpdate> {
        let mut updates = Vec::new();
        if self.policy == Policy::Greedy {
            let ratio = self.instance.small_bid_ratio();
            for u in 0..self.state.budgets.len() {
                if self.state.remaining(u) < ratio * self.state.budgets[u] {
                    self.set_alpha_one(u, &mut updates);
                }
            }
        }
        self.state.final_fraction = self.state.spent_fraction.clone();
        updates
    }
}

fn ensure_valid(instance: &AdwordsInstance) -> Result<(), OnlineError> {
    let violations = instance.validate();
    if violations.is_empty() {
        Ok(())
    } else {
        Err(OnlineError::Invalid(violations))
    }
}

/// Runs `policy` over the whole query stream.
pub fn run(
    instance: &AdwordsInstance,
    policy: Policy,
    options: EngineOptions,
) -> Result<RunTrace, OnlineError> {
    ensure_valid(instance)?;
    let mut engine = Engine::new(instance, policy, options);
    let mut decisions = Vec::with_capacity(instance.num_queries());
    for v in 0..instance.num_queries() {
        let choice = engine.choose(v);
        decisions.push(engine.apply(v, choice)?);
    }
    let closing_updates = engine.finish();
    Ok(RunTrace { policy, options, decisions, closing_updates, state: engine.state })
}

/// Rebuilds a trace from externally recorded choices, one per query.
pub fn run_with_choices(
    instance: &AdwordsInstance,
    policy: Policy,
    options: EngineOptions,
    choices: &[Option<usize>],
) -> Result<RunTrace, OnlineError> {
    ensure_valid(instance)?;
    if choices.len() != instance.num_queries() {
        return Err(OnlineError::TraceMismatch(format!(
            "{} choices for {} queries",
            choices.len(),
            instance.num_queries()
        )));
    }
    let mut engine = Engine::new(instance, policy, options);
    let mut decisions = Vec::with_capacity(choices.len());
    for (v, &choice) in choices.iter().enumerate() {
        if let Some(u) = choice {
            if u >= instance.num_bidders() {
                return Err(OnlineError::TraceMismatch(format!("query {v}: unknown bidder {u}")));
            }
        }
        decisions.push(engine.apply(v, choice)?);
    }
    let closing_updates = engine.finish();
    Ok(RunTrace { policy, options, decisions, closing_updates, state: engine.state })
}
