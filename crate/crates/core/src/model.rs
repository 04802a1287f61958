//! Instance types for online budgeted allocation.
//!
//! Two problem classes live here:
//!
//! * [`AdwordsInstance`]: bidders with budgets `B_u` and an ordered stream of
//!   queries, each displaying a sparse bid vector `w_uv`.
//! * [`PlpInstance`]: the packing generalisation. Resources with capacities
//!   `c_j` and an ordered stream of agents, each offering options with a value
//!   `w_io` and a per-resource consumption `a_ioj`.
//!
//! Identifiers are strings in the JSON file format and dense indices in
//! memory. Instances are immutable once built; [`AdwordsInstance::validate`]
//! and [`PlpInstance::validate`] report problems as data.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

/// Comparison tolerance shared by every monetary and fractional quantity.
pub const TOLERANCE: f64 = 1e-9;

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("malformed instance document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid instance: {}", ViolationList(.0))]
    Invalid(Vec<Violation>),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

struct ViolationList<'a>(&'a [Violation]);

impl fmt::Display for ViolationList<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EntityKind {
    Bidder,
    Query,
    Resource,
    Agent,
}

impl fmt::Display for EntityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EntityKind::Bidder => "bidder",
            EntityKind::Query => "query",
            EntityKind::Resource => "resource",
            EntityKind::Agent => "agent",
        })
    }
}

/// One structural problem found in an instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    DuplicateId { entity: EntityKind, id: String },
    DanglingReference { from: String, to: String },
    NonpositiveBudget { entity: EntityKind, id: String, value: f64 },
    NegativeAmount { at: String, value: f64 },
    NonFinite { at: String },
    EmptyStream { entity: EntityKind },
    EmptyOptions { agent: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateId { entity, id } => write!(f, "duplicate {entity} id `{id}`"),
            Violation::DanglingReference { from, to } => {
                write!(f, "`{from}` references unknown id `{to}`")
            }
            Violation::NonpositiveBudget { entity, id, value } => {
                write!(f, "{entity} `{id}` has nonpositive capacity {value}")
            }
            Violation::NegativeAmount { at, value } => write!(f, "negative amount {value} at {at}"),
            Violation::NonFinite { at } => write!(f, "non-finite amount at {at}"),
            Violation::EmptyStream { entity } => write!(f, "no {entity}s in instance"),
            Violation::EmptyOptions { agent } => write!(f, "agent `{agent}` has no options"),
        }
    }
}

fn check_amount(out: &mut Vec<Violation>, at: impl FnOnce() -> String, value: f64) {
    if !value.is_finite() {
        out.push(Violation::NonFinite { at: at() });
    } else if value < 0.0 {
        out.push(Violation::NegativeAmount { at: at(), value });
    }
}

fn check_capacity(out: &mut Vec<Violation>, entity: EntityKind, id: &str, value: f64) {
    if !value.is_finite() {
        out.push(Violation::NonFinite { at: format!("{entity} `{id}`") });
    } else if value <= 0.0 {
        out.push(Violation::NonpositiveBudget { entity, id: id.to_string(), value });
    }
}

fn check_unique<'a>(
    out: &mut Vec<Violation>,
    entity: EntityKind,
    ids: impl Iterator<Item = &'a str>,
) {
    let mut seen = HashSet::new();
    for id in ids {
        if !seen.insert(id) {
            out.push(Violation::DuplicateId { entity, id: id.to_string() });
        }
    }
}

// ---------------------------------------------------------------------------
// AdWords
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct Bidder {
    pub id: String,
    pub budget: f64,
}

/// A single bid `w_uv` of bidder `bidder` (dense index) on a query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bid {
    pub bidder: usize,
    pub amount: f64,
}

/// An arriving query. Its arrival index is its position in the stream.
#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub id: String,
    bids: Vec<Bid>,
}

impl Query {
    /// Bids are kept sorted by bidder index; duplicates keep the last amount.
    pub fn new(id: impl Into<String>, mut bids: Vec<Bid>) -> Self {
        bids.sort_by_key(|b| b.bidder);
        bids.dedup_by(|later, earlier| {
            if later.bidder == earlier.bidder {
                earlier.amount = later.amount;
                true
            } else {
                false
            }
        });
        Query { id: id.into(), bids }
    }

    pub fn bids(&self) -> &[Bid] {
        &self.bids
    }

    pub fn positive_bids(&self) -> impl Iterator<Item = &Bid> + '_ {
        self.bids.iter().filter(|b| b.amount > 0.0)
    }

    pub fn bid_for(&self, bidder: usize) -> f64 {
        self.bids
            .binary_search_by_key(&bidder, |b| b.bidder)
            .map(|k| self.bids[k].amount)
            .unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdwordsInstance {
    bidders: Vec<Bidder>,
    queries: Vec<Query>,
    small_bid_ratio: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AdwordsDoc {
    bidders: Vec<BidderDoc>,
    queries: Vec<QueryDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BidderDoc {
    id: String,
    budget: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct QueryDoc {
    id: String,
    bids: BTreeMap<String, f64>,
}

impl AdwordsInstance {
    /// Builds an instance without validating it; call [`Self::validate`] when the
    /// input is untrusted.
    pub fn new(bidders: Vec<Bidder>, queries: Vec<Query>) -> Self {
        let small_bid_ratio = compute_small_bid_ratio(&bidders, &queries);
        AdwordsInstance { bidders, queries, small_bid_ratio }
    }

    pub fn bidders(&self) -> &[Bidder] {
        &self.bidders
    }

    pub fn queries(&self) -> &[Query] {
        &self.queries
    }

    pub fn num_bidders(&self) -> usize {
        self.bidders.len()
    }

    pub fn num_queries(&self) -> usize {
        self.queries.len()
    }

    pub fn budget(&self, bidder: usize) -> f64 {
        self.bidders[bidder].budget
    }

    /// Largest `w_uv / B_u` over positive bids, `0` when there are none.
    pub fn small_bid_ratio(&self) -> f64 {
        self.small_bid_ratio
    }

    pub fn bidder_index(&self, id: &str) -> Option<usize> {
        self.bidders.iter().position(|b| b.id == id)
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.bidders.is_empty() {
            out.push(Violation::EmptyStream { entity: EntityKind::Bidder });
        }
        if self.queries.is_empty() {
            out.push(Violation::EmptyStream { entity: EntityKind::Query });
        }
        check_unique(&mut out, EntityKind::Bidder, self.bidders.iter().map(|b| b.id.as_str()));
        check_unique(&mut out, EntityKind::Query, self.queries.iter().map(|q| q.id.as_str()));
        for b in &self.bidders {
            check_capacity(&mut out, EntityKind::Bidder, &b.id, b.budget);
        }
        for q in &self.queries {
            for bid in &q.bids {
                if bid.bidder >= self.bidders.len() {
                    out.push(Violation::DanglingReference {
                        from: q.id.clone(),
                        to: format!("#{}", bid.bidder),
                    });
                }
                check_amount(
                    &mut out,
                    || format!("query `{}` bidder #{}", q.id, bid.bidder),
                    bid.amount,
                );
            }
        }
        out
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let doc: AdwordsDoc = serde_json::from_str(text)?;
        let mut violations = Vec::new();
        check_unique(&mut violations, EntityKind::Bidder, doc.bidders.iter().map(|b| b.id.as_str()));
        let index: HashMap<&str, usize> =
            doc.bidders.iter().enumerate().map(|(i, b)| (b.id.as_str(), i)).collect();
        let mut queries = Vec::with_capacity(doc.queries.len());
        for q in &doc.queries {
            let mut bids = Vec::with_capacity(q.bids.len());
            for (bidder, &amount) in &q.bids {
                match index.get(bidder.as_str()) {
                    Some(&u) => bids.push(Bid { bidder: u, amount }),
                    None => violations.push(Violation::DanglingReference {
                        from: q.id.clone(),
                        to: bidder.clone(),
                    }),
                }
            }
            queries.push(Query::new(q.id.clone(), bids));
        }
        let bidders =
            doc.bidders.into_iter().map(|b| Bidder { id: b.id, budget: b.budget }).collect();
        let instance = AdwordsInstance::new(bidders, queries);
        for v in instance.validate() {
            if !violations.contains(&v) {
                violations.push(v);
            }
        }
        if violations.is_empty() {
            Ok(instance)
        } else {
            Err(ModelError::Invalid(violations))
        }
    }

    pub fn to_json(&self) -> String {
        let doc = AdwordsDoc {
            bidders: self
                .bidders
                .iter()
                .map(|b| BidderDoc { id: b.id.clone(), budget: b.budget })
                .collect(),
            queries: self
                .queries
                .iter()
                .map(|q| QueryDoc {
                    id: q.id.clone(),
                    bids: q
                        .bids
                        .iter()
                        .map(|b| (self.bidders[b.bidder].id.clone(), b.amount))
                        .collect(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("instance documents always serialize")
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), ModelError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    /// Packing-LP image: one resource per bidder with capacity `B_u`, one agent
    /// per query with at least one positive bid, one option per positive bid
    /// whose value and consumption both equal the bid.
    pub fn to_plp(&self) -> PlpInstance {
        let resources = self
            .bidders
            .iter()
            .map(|b| Resource { id: b.id.clone(), capacity: b.budget })
            .collect();
        let agents = self
            .queries
            .iter()
            .filter(|q| q.positive_bids().next().is_some())
            .map(|q| Agent {
                id: q.id.clone(),
                options: q
                    .positive_bids()
                    .map(|b| AgentOption::new(b.amount, vec![(b.bidder, b.amount)]))
                    .collect(),
            })
            .collect();
        PlpInstance::new(resources, agents)
    }

    /// Query index behind each agent of [`Self::to_plp`], in agent order.
    pub fn plp_agent_queries(&self) -> Vec<usize> {
        self.queries
            .iter()
            .enumerate()
            .filter(|(_, q)| q.positive_bids().next().is_some())
            .map(|(v, _)| v)
            .collect()
    }
}

fn compute_small_bid_ratio(bidders: &[Bidder], queries: &[Query]) -> f64 {
    queries
        .iter()
        .flat_map(|q| q.positive_bids())
        .filter_map(|b| bidders.get(b.bidder).map(|u| b.amount / u.budget))
        .fold(0.0, f64::max)
}

// ---------------------------------------------------------------------------
// Packing LP
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct Resource {
    pub id: String,
    pub capacity: f64,
}

/// An option `o` of an agent: value `w_io` and raw consumption `a_ioj`.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentOption {
    pub value: f64,
    consumption: Vec<(usize, f64)>,
}

impl AgentOption {
    pub fn new(value: f64, mut consumption: Vec<(usize, f64)>) -> Self {
        consumption.sort_by_key(|&(j, _)| j);
        AgentOption { value, consumption }
    }

    /// `(resource, amount)` pairs sorted by resource index.
    pub fn consumption(&self) -> &[(usize, f64)] {
        &self.consumption
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    pub id: String,
    pub options: Vec<AgentOption>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlpInstance {
    resources: Vec<Resource>,
    agents: Vec<Agent>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlpDoc {
    resources: Vec<ResourceDoc>,
    agents: Vec<AgentDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ResourceDoc {
    id: String,
    capacity: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AgentDoc {
    id: String,
    options: Vec<OptionDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OptionDoc {
    value: f64,
    consumption: BTreeMap<String, f64>,
}

impl PlpInstance {
    pub fn new(resources: Vec<Resource>, agents: Vec<Agent>) -> Self {
        PlpInstance { resources, agents }
    }

    pub fn resources(&self) -> &[Resource] {
        &self.resources
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    /// Number of agents.
    pub fn n(&self) -> usize {
        self.agents.len()
    }

    /// Number of resources.
    pub fn m(&self) -> usize {
        self.resources.len()
    }

    /// Largest option count of any agent (0 for an empty stream).
    pub fn q(&self) -> usize {
        self.agents.iter().map(|a| a.options.len()).max().unwrap_or(0)
    }

    pub fn capacity(&self, resource: usize) -> f64 {
        self.resources[resource].capacity
    }

    pub fn capacities(&self) -> Vec<f64> {
        self.resources.iter().map(|r| r.capacity).collect()
    }

    /// `max_{i,o} w_io`.
    pub fn max_value(&self) -> f64 {
        self.agents
            .iter()
            .flat_map(|a| a.options.iter())
            .map(|o| o.value)
            .fold(0.0, f64::max)
    }

    /// `max_{i,o,j} a_ioj / c_j`.
    pub fn max_normalized_consumption(&self) -> f64 {
        self.agents
            .iter()
            .flat_map(|a| a.options.iter())
            .flat_map(|o| o.consumption.iter())
            .map(|&(j, a)| a / self.resources[j].capacity)
            .fold(0.0, f64::max)
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.resources.is_empty() {
            out.push(Violation::EmptyStream { entity: EntityKind::Resource });
        }
        if self.agents.is_empty() {
            out.push(Violation::EmptyStream { entity: EntityKind::Agent });
        }
        check_unique(&mut out, EntityKind::Resource, self.resources.iter().map(|r| r.id.as_str()));
        check_unique(&mut out, EntityKind::Agent, self.agents.iter().map(|a| a.id.as_str()));
        for r in &self.resources {
            check_capacity(&mut out, EntityKind::Resource, &r.id, r.capacity);
        }
        for a in &self.agents {
            if a.options.is_empty() {
                out.push(Violation::EmptyOptions { agent: a.id.clone() });
            }
            for (o, opt) in a.options.iter().enumerate() {
                check_amount(&mut out, || format!("agent `{}` option {o} value", a.id), opt.value);
                for &(j, amount) in &opt.consumption {
                    if j >= self.resources.len() {
                        out.push(Violation::DanglingReference {
                            from: a.id.clone(),
                            to: format!("#{j}"),
                        });
                    }
                    check_amount(
                        &mut out,
                        || format!("agent `{}` option {o} resource #{j}", a.id),
                        amount,
                    );
                }
            }
        }
        out
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let doc: PlpDoc = serde_json::from_str(text)?;
        let mut violations = Vec::new();
        check_unique(
            &mut violations,
            EntityKind::Resource,
            doc.resources.iter().map(|r| r.id.as_str()),
        );
        let index: HashMap<&str, usize> =
            doc.resources.iter().enumerate().map(|(i, r)| (r.id.as_str(), i)).collect();
        let mut agents = Vec::with_capacity(doc.agents.len());
        for a in &doc.agents {
            let mut options = Vec::with_capacity(a.options.len());
            for opt in &a.options {
                let mut consumption = Vec::with_capacity(opt.consumption.len());
                for (rid, &amount) in &opt.consumption {
                    match index.get(rid.as_str()) {
                        Some(&j) => consumption.push((j, amount)),
                        None => violations.push(Violation::DanglingReference {
                            from: a.id.clone(),
                            to: rid.clone(),
                        }),
                    }
                }
                options.push(AgentOption::new(opt.value, consumption));
            }
            agents.push(Agent { id: a.id.clone(), options });
        }
        let resources = doc
            .resources
            .into_iter()
            .map(|r| Resource { id: r.id, capacity: r.capacity })
            .collect();
        let instance = PlpInstance::new(resources, agents);
        for v in instance.validate() {
            if !violations.contains(&v) {
                violations.push(v);
            }
        }
        if violations.is_empty() {
            Ok(instance)
        } else {
            Err(ModelError::Invalid(violations))
        }
    }

    pub fn to_json(&self) -> String {
        let doc = PlpDoc {
            resources: self
                .resources
                .iter()
                .map(|r| ResourceDoc { id: r.id.clone(), capacity: r.capacity })
                .collect(),
            agents: self
                .agents
                .iter()
                .map(|a| AgentDoc {
                    id: a.id.clone(),
                    options: a
                        .options
                        .iter()
                        .map(|o| OptionDoc {
                            value: o.value,
                            consumption: o
                                .consumption
                                .iter()
                                .map(|&(j, x)| (self.resources[j].id.clone(), x))
                                .collect(),
                        })
                        .collect(),
                })
                .collect(),
        };
        serde_json::to_string(&doc).expect("instance documents always serialize")
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), ModelError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }
}

/// Either kind of instance, as read from a file whose kind is not known up front.
#[derive(Debug, Clone)]
pub enum AnyInstance {
    Adwords(AdwordsInstance),
    Plp(PlpInstance),
}

impl AnyInstance {
    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        if value.get("bidders").is_some() {
            AdwordsInstance::from_json(text).map(AnyInstance::Adwords)
        } else {
            PlpInstance::from_json(text).map(AnyInstance::Plp)
        }
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Vec<Violation> {
        match self {
            AnyInstance::Adwords(a) => a.validate(),
            AnyInstance::Plp(p) => p.validate(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bidder(id: &str, budget: f64) -> Bidder {
        Bidder { id: id.into(), budget }
    }

    fn query(id: &str, bids: &[(usize, f64)]) -> Query {
        Query::new(id, bids.iter().map(|&(bidder, amount)| Bid { bidder, amount }).collect())
    }

    fn two_by_three() -> AdwordsInstance {
        AdwordsInstance::new(
            vec![bidder("a", 1.0), bidder("b", 2.0)],
            vec![
                query("q1", &[(0, 0.1), (1, 0.2)]),
                query("q2", &[(1, 0.3)]),
                query("q3", &[(0, 0.05)]),
            ],
        )
    }

    #[test]
    fn well_formed_instance_has_no_violations() {
        assert!(two_by_three().validate().is_empty());
    }

    #[test]
    fn unknown_bidder_is_one_dangling_reference() {
        let text = r#"{"bidders":[{"id":"a","budget":1}],
                       "queries":[{"id":"q","bids":{"a":0.1,"zz":0.2}}]}"#;
        match AdwordsInstance::from_json(text) {
            Err(ModelError::Invalid(v)) => {
                assert_eq!(v, vec![Violation::DanglingReference { from: "q".into(), to: "zz".into() }]);
            }
            other => panic!("expected violation, got {other:?}"),
        }
    }

    #[test]
    fn zero_budget_is_one_violation() {
        let inst = AdwordsInstance::new(
            vec![bidder("a", 0.0), bidder("b", 1.0)],
            vec![query("q", &[(1, 0.1)])],
        );
        let v = inst.validate();
        assert_eq!(v.len(), 1);
        assert!(matches!(v[0], Violation::NonpositiveBudget { .. }));
    }

    #[test]
    fn empty_stream_and_negative_bid_are_reported() {
        let inst = AdwordsInstance::new(vec![bidder("a", 1.0)], vec![]);
        assert_eq!(inst.validate(), vec![Violation::EmptyStream { entity: EntityKind::Query }]);
        let inst = AdwordsInstance::new(vec![bidder("a", 1.0)], vec![query("q", &[(0, -0.5)])]);
        assert!(matches!(inst.validate()[0], Violation::NegativeAmount { .. }));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = r#"{"bidders":[{"id":"a","budget":1,"color":"red"}],"queries":[]}"#;
        assert!(matches!(AdwordsInstance::from_json(text), Err(ModelError::Parse(_))));
    }

    #[test]
    fn small_bid_ratio_cases() {
        let one = AdwordsInstance::new(vec![bidder("a", 1.0)], vec![query("q", &[(0, 0.5)])]);
        assert_eq!(one.small_bid_ratio(), 0.5);
        let two = AdwordsInstance::new(
            vec![bidder("a", 1.0)],
            vec![query("q1", &[(0, 0.01)]), query("q2", &[(0, 0.02)])],
        );
        assert_eq!(two.small_bid_ratio(), 0.02);
        let none = AdwordsInstance::new(vec![bidder("a", 1.0)], vec![query("q", &[(0, 0.0)])]);
        assert_eq!(none.small_bid_ratio(), 0.0);
    }

    #[test]
    fn to_plp_single_bid() {
        let inst = AdwordsInstance::new(vec![bidder("u", 1.0)], vec![query("v", &[(0, 0.3)])]);
        let plp = inst.to_plp();
        assert_eq!((plp.m(), plp.n(), plp.q()), (1, 1, 1));
        let opt = &plp.agents()[0].options[0];
        assert_eq!(opt.value, 0.3);
        assert_eq!(opt.consumption(), &[(0, 0.3)]);
        assert_eq!(plp.capacity(0), 1.0);
    }

    #[test]
    fn to_plp_drops_zero_bid_queries() {
        let inst = AdwordsInstance::new(
            vec![bidder("u1", 1.0), bidder("u2", 1.0)],
            vec![query("empty", &[(0, 0.0)]), query("v", &[(0, 0.2), (1, 0.5)])],
        );
        let plp = inst.to_plp();
        assert_eq!(plp.n(), 1);
        assert_eq!(plp.agents()[0].options.len(), 2);
        assert_eq!(plp.q(), 2);
        assert_eq!(inst.plp_agent_queries(), vec![1]);
    }

    #[test]
    fn plp_json_round_trip() {
        let plp = two_by_three().to_plp();
        let back = PlpInstance::from_json(&plp.to_json()).unwrap();
        assert_eq!(back, plp);
    }

    #[test]
    fn plp_validation_flags_empty_options_and_bad_capacity() {
        let plp = PlpInstance::new(
            vec![Resource { id: "r".into(), capacity: -1.0 }],
            vec![Agent { id: "i".into(), options: vec![] }],
        );
        let v = plp.validate();
        assert!(v.iter().any(|x| matches!(x, Violation::EmptyOptions { .. })));
        assert!(v.iter().any(|x| matches!(x, Violation::NonpositiveBudget { .. })));
    }

    #[test]
    fn any_instance_dispatches_on_shape() {
        let text = two_by_three().to_json();
        assert!(matches!(AnyInstance::from_json(&text).unwrap(), AnyInstance::Adwords(_)));
        let text = two_by_three().to_plp().to_json();
        assert!(matches!(AnyInstance::from_json(&text).unwrap(), AnyInstance::Plp(_)));
    }
}
