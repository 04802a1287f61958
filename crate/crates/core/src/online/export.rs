//! JSON-lines trace files: one decision per line, then a summary record.
//!
//! ```text
//! {"query":"v0","bidder":"u1","earned":0.01,"beta":0.01}
//! {"query":"v1","bidder":null,"earned":0.0,"beta":0.0}
//! {"summary":{"policy":"greedy","truncate":false,"queries":2,"matched":1,"primal":0.01,"dual":0.01}}
//! ```

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{run_with_choices, EngineOptions, OnlineError, Policy, RunTrace};
use crate::model::AdwordsInstance;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExportedDecision {
    pub query: String,
    pub bidder: Option<String>,
    pub earned: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceSummary {
    pub policy: Policy,
    pub truncate: bool,
    pub queries: usize,
    pub matched: usize,
    pub primal: f64,
    pub dual: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SummaryLine {
    summary: TraceSummary,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Line {
    Summary(SummaryLine),
    Decision(ExportedDecision),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceFile {
    pub decisions: Vec<ExportedDecision>,
    pub summary: TraceSummary,
}

pub fn write_trace_jsonl(
    trace: &RunTrace,
    instance: &AdwordsInstance,
    mut out: impl Write,
) -> Result<(), OnlineError> {
    for d in &trace.decisions {
        let line = ExportedDecision {
            query: instance.queries()[d.query].id.clone(),
            bidder: d.bidder.map(|u| instance.bidders()[u].id.clone()),
            earned: d.earned,
            beta: d.beta,
        };
        serde_json::to_writer(&mut out, &line)?;
        out.write_all(b"\n")?;
    }
    let summary = TraceSummary {
        policy: trace.policy,
        truncate: trace.options.truncate,
        queries: trace.decisions.len(),
        matched: trace.decisions.iter().filter(|d| d.bidder.is_some()).count(),
        primal: trace.state.primal,
        dual: trace.state.dual,
    };
    serde_json::to_writer(&mut out, &SummaryLine { summary })?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn read_trace_jsonl(input: impl BufRead) -> Result<TraceFile, OnlineError> {
    let mut decisions = Vec::new();
    let mut summary = None;
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        if summary.is_some() {
            return Err(OnlineError::TraceMismatch("records after the summary line".into()));
        }
        match serde_json::from_str::<Line>(&line)? {
            Line::Summary(s) => summary = Some(s.summary),
            Line::Decision(d) => decisions.push(d),
        }
    }
    let summary =
        summary.ok_or_else(|| OnlineError::TraceMismatch("missing summary line".into()))?;
    Ok(TraceFile { decisions, summary })
}

impl TraceFile {
    /// Replays the recorded choices on `instance` and checks every recorded
    /// amount against the rebuilt trace.
    pub fn to_trace(&self, instance: &AdwordsInstance) -> Result<RunTrace, OnlineError> {
        if self.decisions.len() != instance.num_queries() {
            return Err(OnlineError::TraceMismatch(format!(
                "{} decisions for {} queries",
                self.decisions.len(),
                instance.num_queries()
            )));
        }
        let mut choices = Vec::with_capacity(self.decisions.len());
        for (q, d) in instance.queries().iter().zip(&self.decisions) {
            if q.id != d.query {
                return Err(OnlineError::TraceMismatch(format!(
                    "expected query `{}`, found `{}`",
                    q.id, d.query
                )));
            }
            let bidder = match &d.bidder {
                None => None,
                Some(id) => Some(instance.bidder_index(id).ok_or_else(|| {
                    OnlineError::TraceMismatch(format!("unknown bidder `{id}`"))
                })?),
            };
            choices.push(bidder);
        }
        let options = EngineOptions { truncate: self.summary.truncate };
        let trace = run_with_choices(instance, self.summary.policy, options, &choices)?;
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()));
        for (rec, got) in self.decisions.iter().zip(&trace.decisions) {
            if !close(rec.earned, got.earned) || !close(rec.beta, got.beta) {
                return Err(OnlineError::TraceMismatch(format!(
                    "query `{}`: recorded earned/beta differ from replay",
                    rec.query
                )));
            }
        }
        if !close(self.summary.primal, trace.state.primal)
            || !close(self.summary.dual, trace.state.dual)
        {
            return Err(OnlineError::TraceMismatch("summary objectives differ from replay".into()));
        }
        Ok(trace)
    }
}
