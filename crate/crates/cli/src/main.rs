use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use adwords_core::bench::{
    emit_plot_data, run_experiment, sweep, write_report, Algorithm, ExperimentSpec,
    GeneratorSpec, InstanceSource, Series,
};
use adwords_core::lp::{
    build_offline_adwords_lp, build_offline_plp, check_slackness, solve_offline_adwords,
    solve_offline_plp, write_mps,
};
use adwords_core::model::AnyInstance;
use adwords_core::online::{
    certify, check_alpha_consistency, read_trace_jsonl, run, write_trace_jsonl, EngineOptions,
    Policy,
};
use adwords_core::par::Execution;
use adwords_core::plp::{run_training_based, TrainingConfig, Warmup};
use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

const SLACKNESS_TOL: f64 = 1e-6;

#[derive(Parser)]
#[command(name = "adwords", version, about = "Online budgeted allocation experiments")]
struct Cli {
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Maximum concurrent trials (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// Exit with status 2 when an acceptance threshold is violated.
    #[arg(long = "assert", global = true)]
    check: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance file.
    Gen {
        #[command(flatten)]
        family: FamilyArgs,
        /// Output path (default: <out-dir>/<family>.json).
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Solve the offline LP and check complementary slackness.
    SolveOffline {
        instance: PathBuf,
        /// Write the unaggregated LP in free MPS format.
        #[arg(long)]
        dump_lp: Option<PathBuf>,
    },
    /// Run one algorithm on one instance.
    Run {
        instance: PathBuf,
        #[command(flatten)]
        algo: AlgoArgs,
        /// Trace output (default: <out-dir>/trace.jsonl).
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Rebuild a trace from a JSONL file and certify it.
    Certify { instance: PathBuf, trace: PathBuf },
    /// Run a batch of seeded trials.
    Bench {
        /// Instance file; otherwise --family generates one per trial.
        #[arg(long, conflicts_with = "family")]
        instance: Option<PathBuf>,
        #[command(flatten)]
        family: FamilyArgs,
        #[command(flatten)]
        algo: AlgoArgs,
        #[arg(long, default_value_t = 1)]
        trials: usize,
        /// Run trials one after another.
        #[arg(long)]
        sequential: bool,
        /// Parameter sweep, e.g. `bidders=2,5,10`; writes <out-dir>/series/<name>.csv.
        #[arg(long)]
        sweep: Option<String>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    GreedyWorst,
    MsvvWorst,
    Iid,
    RandomAdwords,
}

#[derive(Args)]
struct FamilyArgs {
    #[arg(long, value_enum)]
    family: Option<Family>,
    #[arg(long, default_value_t = 0.01)]
    granularity: f64,
    #[arg(long, default_value_t = 50)]
    bidders: usize,
    #[arg(long, default_value_t = 100_000)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    m: usize,
    #[arg(long, default_value_t = 20)]
    types: usize,
    #[arg(long, default_value_t = 5)]
    q: usize,
    #[arg(long, default_value_t = 0.4)]
    capacity_scale: f64,
    #[arg(long, default_value_t = 1000)]
    queries: usize,
    #[arg(long, default_value_t = 0.02)]
    max_bid_ratio: f64,
}

impl FamilyArgs {
    fn spec(&self) -> Option<GeneratorSpec> {
        Some(match self.family? {
            Family::GreedyWorst => GeneratorSpec::GreedyWorst { granularity: self.granularity },
            Family::MsvvWorst => {
                GeneratorSpec::MsvvWorst { bidders: self.bidders, granularity: self.granularity }
            }
            Family::Iid => GeneratorSpec::Iid {
                n: self.n,
                m: self.m,
                types: self.types,
                q: self.q,
                capacity_scale: self.capacity_scale,
            },
            Family::RandomAdwords => GeneratorSpec::RandomAdwords {
                bidders: self.bidders,
                types: self.types,
                queries: self.queries,
                max_bid_ratio: self.max_bid_ratio,
            },
        })
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgoName {
    Greedy,
    Msvv,
    Training,
}

#[derive(Args)]
struct AlgoArgs {
    #[arg(long, value_enum, default_value = "greedy")]
    policy: AlgoName,
    /// Earn min(bid, remaining budget) instead of rejecting oversized bids.
    #[arg(long)]
    truncate: bool,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    #[arg(long, default_value = "skip")]
    warmup: Warmup,
}

impl AlgoArgs {
    fn algorithm(&self) -> Algorithm {
        let online = |policy| Algorithm::Online { policy, truncate: self.truncate };
        match self.policy {
            AlgoName::Greedy => online(Policy::Greedy),
            AlgoName::Msvv => online(Policy::Msvv),
            AlgoName::Training => Algorithm::Training { epsilon: self.epsilon, warmup: self.warmup },
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn print_json(value: &serde_json::Value) {
    let text = serde_json::to_string_pretty(value).expect("json value serializes");
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn load(path: &Path) -> Result<AnyInstance> {
    let inst = AnyInstance::read(path).with_context(|| format!("reading {}", path.display()))?;
    let violations = inst.validate();
    if !violations.is_empty() {
        bail!("{} is invalid: {violations:?}", path.display());
    }
    Ok(inst)
}

fn out_path(cli: &Cli, given: &Option<PathBuf>, default: &str) -> Result<PathBuf> {
    let path = given.clone().unwrap_or_else(|| cli.out_dir.join(default));
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    Ok(path)
}

/// `Ok(false)` means an `--assert` check failed.
fn execute(cli: &Cli) -> Result<bool> {
    match &cli.command {
        Command::Gen { family, output } => {
            let Some(spec) = family.spec() else { bail!("--family is required") };
            let inst = spec.generate(cli.seed)?;
            let name = family.family.and_then(|f| f.to_possible_value()).expect("family is set");
            let path = out_path(cli, output, &format!("{}.json", name.get_name()))?;
            let text = match &inst {
                AnyInstance::Adwords(a) => a.to_json(),
                AnyInstance::Plp(p) => p.to_json(),
            };
            std::fs::write(&path, text)?;
            eprintln!("wrote {}", path.display());
            Ok(true)
        }
        Command::SolveOffline { instance, dump_lp } => {
            let inst = load(instance)?;
            if let Some(path) = dump_lp {
                let lp = match &inst {
                    AnyInstance::Adwords(a) => build_offline_adwords_lp(a)?,
                    AnyInstance::Plp(p) => build_offline_plp(p)?,
                };
                let mut w = BufWriter::new(File::create(path)?);
                write_mps(&lp, "offline", &mut w)?;
                w.flush()?;
            }
            let (value, report) = match &inst {
                AnyInstance::Adwords(a) => {
                    let opt = solve_offline_adwords(a)?;
                    let report = check_slackness(&opt.aggregated_lp, &opt.aggregated, SLACKNESS_TOL);
                    let value = json!({
                        "kind": "adwords",
                        "objective": opt.objective,
                        "alpha": opt.alpha,
                        "beta": opt.beta,
                        "iterations": opt.aggregated.iterations,
                        "slackness_violations": report.pair_violations.len() + report.row_violations.len(),
                        "max_slackness_violation": report.max_violation,
                    });
                    (value, report)
                }
                AnyInstance::Plp(p) => {
                    let opt = solve_offline_plp(p)?;
                    let report = check_slackness(&opt.lp, &opt.solution, SLACKNESS_TOL);
                    let value = json!({
                        "kind": "plp",
                        "objective": opt.objective,
                        "alpha": opt.alpha,
                        "iterations": opt.solution.iterations,
                        "slackness_violations": report.pair_violations.len() + report.row_violations.len(),
                        "max_slackness_violation": report.max_violation,
                    });
                    (value, report)
                }
            };
            print_json(&value);
            Ok(!cli.check || report.is_empty())
        }
        Command::Run { instance, algo, trace } => {
            let inst = load(instance)?;
            match (algo.algorithm(), &inst) {
                (Algorithm::Online { policy, truncate }, AnyInstance::Adwords(a)) => {
                    let t = run(a, policy, EngineOptions { truncate })?;
                    let path = out_path(cli, trace, "trace.jsonl")?;
                    let mut w = BufWriter::new(File::create(&path)?);
                    write_trace_jsonl(&t, a, &mut w)?;
                    w.flush()?;
                    let cert = certify(&t, a)?;
                    print_json(&serde_json::to_value(&cert)?);
                    Ok(!cli.check || cert.holds)
                }
                (Algorithm::Online { .. }, AnyInstance::Plp(_)) => {
                    bail!("greedy and msvv need an AdWords instance")
                }
                (Algorithm::Training { epsilon, warmup }, _) => {
                    let converted;
                    let plp = match &inst {
                        AnyInstance::Plp(p) => p,
                        AnyInstance::Adwords(a) => {
                            converted = a.to_plp();
                            &converted
                        }
                    };
                    let config = TrainingConfig { epsilon, warmup, seed: cli.seed };
                    let (_, report) = run_training_based(plp, &config)?;
                    let path = out_path(cli, &None, "training_report.json")?;
                    std::fs::write(&path, report.to_json())?;
                    print_json(&json!({
                        "opt": report.opt,
                        "achieved_excluding_sample": report.achieved_excluding_sample,
                        "ratio_excluding_sample": report.ratio_excluding_sample,
                        "ratio_including_sample": report.ratio_including_sample,
                        "alpha_star": report.alpha_star,
                        "report": path,
                    }));
                    Ok(!cli.check || (report.dual_feasible && report.capacity_safe))
                }
            }
        }
        Command::Certify { instance, trace } => {
            let AnyInstance::Adwords(inst) = load(instance)? else {
                bail!("certify needs an AdWords instance")
            };
            let file = read_trace_jsonl(BufReader::new(
                File::open(trace).with_context(|| format!("opening {}", trace.display()))?,
            ))?;
            let t = file.to_trace(&inst)?;
            let cert = certify(&t, &inst)?;
            let mut value = serde_json::to_value(&cert)?;
            let mut ok = cert.holds;
            if t.policy == Policy::Msvv {
                let sandwich = check_alpha_consistency(&t);
                ok &= sandwich.is_ok();
                value["alpha_consistency"] = match sandwich {
                    Ok(c) => serde_json::to_value(c)?,
                    Err(e) => json!({ "error": e.to_string() }),
                };
            }
            print_json(&value);
            Ok(!cli.check || ok)
        }
        Command::Bench { instance, family, algo, trials, sequential, sweep: sweep_arg } => {
            let source = match (instance, family.spec()) {
                (Some(p), _) => InstanceSource::File(p.clone()),
                (None, Some(g)) => InstanceSource::Generator(g),
                (None, None) => bail!("bench needs --instance or --family"),
            };
            let spec = ExperimentSpec {
                source,
                algorithm: algo.algorithm(),
                trials: *trials,
                base_seed: cli.seed,
                execution: if *sequential { Execution::Sequential } else { Execution::Parallel },
                jobs: cli.jobs,
            };
            if let Some(arg) = sweep_arg {
                let (name, values) = parse_sweep(arg)?;
                let reports = sweep(&spec, &name, &values)?;
                let series = Series::from_reports(&name, &name, &reports);
                emit_plot_data(&[series], &cli.out_dir.join("series"))?;
                let mut ok = true;
                let mut errors = 0;
                for (v, r) in &reports {
                    write_report(r, &cli.out_dir.join(format!("{name}={v}")))?;
                    ok &= r.summary.assert_passed;
                    errors += r.summary.errors;
                }
                let summaries: Vec<_> = reports
                    .iter()
                    .map(|(v, r)| json!({ "value": v, "summary": r.summary }))
                    .collect();
                print_json(&json!({ "parameter": name, "points": summaries }));
                if errors > 0 {
                    bail!("{errors} trial(s) failed");
                }
                return Ok(!cli.check || ok);
            }
            let report = run_experiment(&spec)?;
            write_report(&report, &cli.out_dir)?;
            print_json(&serde_json::to_value(&report.summary)?);
            if report.summary.errors > 0 {
                let first = report.rows.iter().find_map(|r| r.error.as_deref()).unwrap_or("");
                bail!("{} trial(s) failed; first error: {first}", report.summary.errors);
            }
            Ok(!cli.check || report.summary.assert_passed)
        }
    }
}

fn parse_sweep(arg: &str) -> Result<(String, Vec<f64>)> {
    let Some((name, list)) = arg.split_once('=') else {
        bail!("--sweep expects name=v1,v2,...")
    };
    let values = list
        .split(',')
        .map(|v| v.trim().parse::<f64>().with_context(|| format!("bad sweep value `{v}`")))
        .collect::<Result<Vec<_>>>()?;
    Ok((name.trim().to_string(), values))
}
