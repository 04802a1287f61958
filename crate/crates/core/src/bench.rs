//! Experiment harness: generate or load an instance, solve it offline, run an
//! algorithm, certify, and report per trial.
//!
//! Trial `i` uses seed `base_seed + i`. Failures are recorded on the trial's
//! row and the batch continues.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::gen::{self, GenError, IidParams, RandomAdwordsParams};
use crate::lp::solve_offline_adwords;
use crate::model::{AdwordsInstance, AnyInstance, ModelError};
use crate::online::{certify, check_alpha_consistency, run, Certificate, EngineOptions, Policy};
use crate::par::{map_trials, Execution};
use crate::plp::{run_training_based, TrainingConfig, TrainingReport, Warmup};

/// Largest ratio accepted as "not above OPT".
pub const RATIO_CEILING: f64 = 1.0 + 1e-6;

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unknown sweep parameter `{0}`")]
    UnknownParameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum GeneratorSpec {
    GreedyWorst { granularity: f64 },
    MsvvWorst { bidders: usize, granularity: f64 },
    Iid { n: usize, m: usize, types: usize, q: usize, capacity_scale: f64 },
    RandomAdwords { bidders: usize, types: usize, queries: usize, max_bid_ratio: f64 },
}

impl GeneratorSpec {
    pub fn generate(&self, seed: u64) -> Result<AnyInstance, GenError> {
        Ok(match *self {
            GeneratorSpec::GreedyWorst { granularity } => {
                AnyInstance::Adwords(gen::gen_greedy_worstcase(granularity)?)
            }
            GeneratorSpec::MsvvWorst { bidders, granularity } => {
                AnyInstance::Adwords(gen::gen_msvv_worstcase(bidders, granularity)?)
            }
            GeneratorSpec::Iid { n, m, types, q, capacity_scale } => {
                AnyInstance::Plp(gen::gen_iid(&IidParams { seed, n, m, types, q, capacity_scale })?)
            }
            GeneratorSpec::RandomAdwords { bidders, types, queries, max_bid_ratio } => {
                AnyInstance::Adwords(gen::gen_random_adwords(&RandomAdwordsParams {
                    seed,
                    bidders,
                    types,
                    queries,
                    max_bid_ratio,
                })?)
            }
        })
    }

    /// Copy with one named parameter replaced.
    pub fn with_param(&self, name: &str, value: f64) -> Result<Self, BenchError> {
        let mut out = *self;
        let unknown = || BenchError::UnknownParameter(name.to_string());
        let int = value.round() as usize;
        match (&mut out, name) {
            (GeneratorSpec::GreedyWorst { granularity }, "granularity")
            | (GeneratorSpec::MsvvWorst { granularity, .. }, "granularity") => *granularity = value,
            (GeneratorSpec::MsvvWorst { bidders, .. }, "bidders")
            | (GeneratorSpec::RandomAdwords { bidders, .. }, "bidders") => *bidders = int,
            (GeneratorSpec::Iid { n, .. }, "n") => *n = int,
            (GeneratorSpec::Iid { m, .. }, "m") => *m = int,
            (GeneratorSpec::Iid { types, .. }, "types")
            | (GeneratorSpec::RandomAdwords { types, .. }, "types") => *types = int,
            (GeneratorSpec::Iid { q, .. }, "q") => *q = int,
            (GeneratorSpec::Iid { capacity_scale, .. }, "capacity_scale") => *capacity_scale = value,
            (GeneratorSpec::RandomAdwords { queries, .. }, "queries") => *queries = int,
            (GeneratorSpec::RandomAdwords { max_bid_ratio, .. }, "max_bid_ratio") => {
                *max_bid_ratio = value
            }
            _ => return Err(unknown()),
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InstanceSource {
    File(PathBuf),
    Generator(GeneratorSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Algorithm {
    Online { policy: Policy, truncate: bool },
    Training { epsilon: f64, warmup: Warmup },
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Online { policy, .. } => policy.name(),
            Algorithm::Training { .. } => "training",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub source: InstanceSource,
    pub algorithm: Algorithm,
    pub trials: usize,
    pub base_seed: u64,
    pub execution: Execution,
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialStatus {
    Ok,
    Error,
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial: usize,
    pub seed: u64,
    pub algorithm: String,
    pub status: TrialStatus,
    pub opt: Option<f64>,
    pub value: Option<f64>,
    pub ratio: Option<f64>,
    pub ratio_including_sample: Option<f64>,
    pub small_bid_ratio: Option<f64>,
    /// Per-trial ratio floor (online) or mean-ratio floor (training).
    pub threshold: Option<f64>,
    pub certificate_holds: Option<bool>,
    pub dual_feasible: Option<bool>,
    pub capacity_safe: Option<bool>,
    pub conditions_hold: Option<bool>,
    pub bad_sample: Option<bool>,
    pub error: Option<String>,
}

impl TrialResult {
    fn failed(trial: usize, seed: u64, algorithm: &Algorithm, error: String) -> Self {
        TrialResult {
            trial,
            seed,
            algorithm: algorithm.name().to_string(),
            status: TrialStatus::Error,
            opt: None,
            value: None,
            ratio: None,
            ratio_including_sample: None,
            small_bid_ratio: None,
            threshold: None,
            certificate_holds: None,
            dual_feasible: None,
            capacity_safe: None,
            conditions_hold: None,
            bad_sample: None,
            error: Some(error),
        }
    }

    /// Whether this row alone breaks an acceptance threshold.
    pub fn violates(&self) -> bool {
        if self.status != TrialStatus::Ok {
            return false;
        }
        let above_opt = self.ratio.is_some_and(|r| r > RATIO_CEILING);
        let flag = |b: Option<bool>| b == Some(false);
        let below = self.algorithm != "training"
            && matches!((self.ratio, self.threshold), (Some(r), Some(t)) if r < t - 1e-9);
        above_opt
            || below
            || flag(self.certificate_holds)
            || flag(self.dual_feasible)
            || flag(self.capacity_safe)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub trials: usize,
    pub ok: usize,
    pub errors: usize,
    pub mean_ratio: Option<f64>,
    pub min_ratio: Option<f64>,
    pub max_ratio: Option<f64>,
    pub mean_ratio_including_sample: Option<f64>,
    pub bad_sample_frequency: Option<f64>,
    pub threshold_violations: usize,
    /// Mean ratio meets the training threshold (`None` for online runs).
    pub mean_meets_threshold: Option<bool>,
    pub assert_passed: bool,
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

pub fn summarize(rows: &[TrialResult]) -> ExperimentSummary {
    let ok: Vec<&TrialResult> = rows.iter().filter(|r| r.status == TrialStatus::Ok).collect();
    let ratios: Vec<f64> = ok.iter().filter_map(|r| r.ratio).collect();
    let including: Vec<f64> = ok.iter().filter_map(|r| r.ratio_including_sample).collect();
    let bad: Vec<f64> =
        ok.iter().filter_map(|r| r.bad_sample).map(|b| if b { 1.0 } else { 0.0 }).collect();
    let mean_ratio = mean(&ratios);
    let mean_meets_threshold = ok
        .iter()
        .find(|r| r.algorithm == "training")
        .and_then(|r| r.threshold)
        .map(|t| mean_ratio.is_some_and(|m| m >= t));
    let threshold_violations = rows.iter().filter(|r| r.violates()).count();
    let errors = rows.len() - ok.len();
    ExperimentSummary {
        trials: rows.len(),
        ok: ok.len(),
        errors,
        mean_ratio,
        min_ratio: ratios.iter().copied().reduce(f64::min),
        max_ratio: ratios.iter().copied().reduce(f64::max),
        mean_ratio_including_sample: mean(&including),
        bad_sample_frequency: mean(&bad),
        threshold_violations,
        mean_meets_threshold,
        assert_passed: errors == 0 && threshold_violations == 0 && mean_meets_threshold != Some(false),
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub rows: Vec<TrialResult>,
    pub certificates: Vec<Option<Certificate>>,
    pub training: Vec<Option<TrainingReport>>,
    pub summary: ExperimentSummary,
}

struct TrialOutput {
    row: TrialResult,
    certificate: Option<Certificate>,
    training: Option<TrainingReport>,
}

fn online_trial(
    instance: &AdwordsInstance,
    policy: Policy,
    truncate: bool,
    row: &mut TrialResult,
) -> Result<Certificate, String> {
    let violations = instance.validate();
    if !violations.is_empty() {
        return Err(format!("invalid instance: {violations:?}"));
    }
    let trace = run(instance, policy, EngineOptions { truncate }).map_err(|e| e.to_string())?;
    let cert = certify(&trace, instance).map_err(|e| e.to_string())?;
    let mut holds = cert.holds;
    if policy == Policy::Msvv {
        holds &= check_alpha_consistency(&trace).is_ok();
    }
    let opt = solve_offline_adwords(instance).map_err(|e| e.to_string())?.objective;
    let sbr = instance.small_bid_ratio();
    row.opt = Some(opt);
    row.value = Some(trace.state.primal);
    row.ratio = Some(if opt > 0.0 { trace.state.primal / opt } else { 1.0 });
    row.small_bid_ratio = Some(sbr);
    row.threshold = Some(policy.theorem_bound() - 10.0 * sbr);
    row.certificate_holds = Some(holds);
    row.dual_feasible = Some(cert.dual_feasible);
    Ok(cert)
}

fn run_trial(spec: &ExperimentSpec, shared: Option<&AnyInstance>, trial: usize) -> TrialOutput {
    let seed = spec.base_seed.wrapping_add(trial as u64);
    let fail = |e: String| TrialOutput {
        row: TrialResult::failed(trial, seed, &spec.algorithm, e),
        certificate: None,
        training: None,
    };
    let generated;
    let instance = match (&spec.source, shared) {
        (_, Some(inst)) => inst,
        (InstanceSource::Generator(g), None) => match g.generate(seed) {
            Ok(inst) => {
                generated = inst;
                &generated
            }
            Err(e) => return fail(e.to_string()),
        },
        (InstanceSource::File(p), None) => {
            return fail(format!("instance {} was not loaded", p.display()))
        }
    };
    let mut row = TrialResult::failed(trial, seed, &spec.algorithm, String::new());
    row.status = TrialStatus::Ok;
    row.error = None;
    match spec.algorithm {
        Algorithm::Online { policy, truncate } => {
            let AnyInstance::Adwords(inst) = instance else {
                return fail("online policies need an AdWords instance".into());
            };
            match online_trial(inst, policy, truncate, &mut row) {
                Ok(cert) => TrialOutput { row, certificate: Some(cert), training: None },
                Err(e) => fail(e),
            }
        }
        Algorithm::Training { epsilon, warmup } => {
            let converted;
            let plp = match instance {
                AnyInstance::Plp(p) => p,
                AnyInstance::Adwords(a) => {
                    converted = a.to_plp();
                    &converted
                }
            };
            let config = TrainingConfig { epsilon, warmup, seed };
            match run_training_based(plp, &config) {
                Ok((_, report)) => {
                    row.opt = Some(report.opt);
                    row.value = Some(report.achieved_excluding_sample);
                    row.ratio = Some(report.ratio_excluding_sample);
                    row.ratio_including_sample = Some(report.ratio_including_sample);
                    row.small_bid_ratio = Some(report.badness.a_max);
                    row.threshold = Some(1.0 - 4.0 * epsilon);
                    row.dual_feasible = Some(report.dual_feasible);
                    row.capacity_safe = Some(report.capacity_safe);
                    row.conditions_hold = Some(report.conditions.holds);
                    row.bad_sample = Some(report.badness.is_bad);
                    TrialOutput { row, certificate: None, training: Some(report) }
                }
                Err(e) => fail(e.to_string()),
            }
        }
    }
}

/// Runs every trial of `spec`. A file source that cannot be read is an
/// operational error; everything after loading is recorded per trial.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport, BenchError> {
    let shared = match &spec.source {
        InstanceSource::File(path) => Some(AnyInstance::read(path)?),
        InstanceSource::Generator(_) => None,
    };
    let outputs =
        map_trials(spec.trials, spec.execution, spec.jobs, |i| run_trial(spec, shared.as_ref(), i));
    let mut rows = Vec::with_capacity(outputs.len());
    let mut certificates = Vec::with_capacity(outputs.len());
    let mut training = Vec::with_capacity(outputs.len());
    for out in outputs {
        rows.push(out.row);
        certificates.push(out.certificate);
        training.push(out.training);
    }
    let summary = summarize(&rows);
    Ok(ExperimentReport { rows, certificates, training, summary })
}

pub fn write_csv(rows: &[TrialResult], out: impl Write) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(input: impl std::io::Read) -> Result<Vec<TrialResult>, BenchError> {
    let mut r = csv::Reader::from_reader(input);
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

/// Writes `trials.csv`, `summary.json`, and `training_reports.jsonl` (when any
/// trial produced a training report) into `dir`.
pub fn write_report(report: &ExperimentReport, dir: &Path) -> Result<(), BenchError> {
    std::fs::create_dir_all(dir)?;
    write_csv(&report.rows, std::fs::File::create(dir.join("trials.csv"))?)?;
    std::fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&report.summary)?)?;
    if report.training.iter().any(Option::is_some) {
        let mut f = std::io::BufWriter::new(std::fs::File::create(dir.join("training_reports.jsonl"))?);
        for t in report.training.iter().flatten() {
            serde_json::to_writer(&mut f, t)?;
            f.write_all(b"\n")?;
        }
        f.flush()?;
    }
    Ok(())
}

/// A two-column `x,y` data series.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub x: String,
    pub y: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    /// Mean ratio of each report against its parameter value; reports without
    /// a successful trial contribute no point.
    pub fn from_reports(name: &str, x: &str, reports: &[(f64, ExperimentReport)]) -> Self {
        let points = reports
            .iter()
            .filter_map(|(v, r)| r.summary.mean_ratio.map(|m| (*v, m)))
            .collect();
        Series { name: name.to_string(), x: x.to_string(), y: "ratio".to_string(), points }
    }
}

pub fn write_series(series: &Series, out: impl Write) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([&series.x, &series.y])?;
    for (x, y) in &series.points {
        w.write_record([x.to_string(), y.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes each series to `<dir>/<name>.csv`.
pub fn emit_plot_data(series: &[Series], dir: &Path) -> Result<Vec<PathBuf>, BenchError> {
    std::fs::create_dir_all(dir)?;
    let mut paths = Vec::with_capacity(series.len());
    for s in series {
        let path = dir.join(format!("{}.csv", s.name));
        write_series(s, std::fs::File::create(&path)?)?;
        paths.push(path);
    }
    Ok(paths)
}

/// Runs `base` once per value of `parameter`. `epsilon` sweeps the training
/// sample fraction; any other name is a generator parameter.
pub fn sweep(
    base: &ExperimentSpec,
    parameter: &str,
    values: &[f64],
) -> Result<Vec<(f64, ExperimentReport)>, BenchError> {
    let mut out = Vec::with_capacity(values.len());
    for &v in values {
        let mut spec = base.clone();
        match (parameter, &mut spec.algorithm, &spec.source) {
            ("epsilon", Algorithm::Training { epsilon, .. }, _) => *epsilon = v,
            (_, _, InstanceSource::Generator(g)) => {
                spec.source = InstanceSource::Generator(g.with_param(parameter, v)?)
            }
            _ => return Err(BenchError::UnknownParameter(parameter.to_string())),
        }
        out.push((v, run_experiment(&spec)?));
    }
    Ok(out)
}
