use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, ValueEnum};
use drxp::msmp::{explain, Algorithm, ExplanationKind, RunConfig, DEFAULT_FD_THRESHOLD};
use drxp::oracle::{Oracle, SyntheticOracle, SyntheticSpec};
use drxp::{FeatureSet, Norm};
use serde::{Deserialize, Serialize};

use crate::explain::{load_problem, make_oracle};
use crate::{read_file, CliError};

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Run the synthetic-latency oracle.
    #[arg(long, conflicts_with = "cases")]
    pub synthetic: bool,
    /// Synthetic: number of features.
    #[arg(long, default_value_t = 100)]
    pub features: usize,
    /// Synthetic: number of singleton breakers.
    #[arg(long, default_value_t = 10)]
    pub breakers: usize,
    /// Synthetic: latency of each oracle call, in milliseconds.
    #[arg(long, default_value_t = 50)]
    pub latency_ms: u64,
    /// Synthetic: breaker placement seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory of `*.case` files.
    #[arg(long)]
    pub cases: Option<PathBuf>,
    /// Algorithms to compare.
    #[arg(long, value_delimiter = ',', default_value = "deletion,swift")]
    pub algos: Vec<Algorithm>,
    /// Processor counts tried for swift.
    #[arg(short = 'q', long = "processors", value_delimiter = ',', default_value = "8")]
    pub processors: Vec<usize>,
    #[arg(long, default_value_t = DEFAULT_FD_THRESHOLD)]
    pub delta: f64,
    #[arg(long)]
    pub no_fd: bool,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Json,
}

/// One benchmark case, stored as JSON; `model` is relative to the file.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CaseFile {
    model: PathBuf,
    instance: String,
    epsilon: f64,
    norm: Norm,
    #[serde(default = "default_kind")]
    kind: ExplanationKind,
}

fn default_kind() -> ExplanationKind {
    ExplanationKind::Axp
}

struct Case {
    name: String,
    oracle: Box<dyn Oracle>,
    kind: ExplanationKind,
    epsilon: f64,
    norm: Norm,
}

#[derive(Debug, Serialize)]
struct Row {
    case: String,
    algorithm: Algorithm,
    processors: usize,
    oracle_calls: usize,
    parallel_rounds: usize,
    cancelled_calls: usize,
    wall_time_ms: f64,
    explanation_size: usize,
    /// Share of disjunction steps that confirmed a whole chunk.
    fd_success_rate: Option<f64>,
    result: FeatureSet,
}

fn load_cases(dir: &Path) -> Result<Vec<Case>, CliError> {
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", dir.display())))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "case"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|path| {
            let case: CaseFile = serde_json::from_str(&read_file(&path)?)
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            let model = path.parent().unwrap_or(Path::new(".")).join(&case.model);
            let problem = load_problem(&model, &case.instance)?;
            Ok(Case {
                name: path.file_stem().and_then(|s| s.to_str()).unwrap_or("case").to_string(),
                oracle: make_oracle(&problem, case.norm)?,
                kind: case.kind,
                epsilon: case.epsilon,
                norm: case.norm,
            })
        })
        .collect()
}

pub fn run(args: BenchArgs) -> Result<(), CliError> {
    let cases = match (&args.cases, args.synthetic) {
        (Some(dir), _) => load_cases(dir)?,
        (None, true) => {
            let spec = SyntheticSpec::random_singletons(
                args.features,
                args.breakers,
                Duration::from_millis(args.latency_ms),
                args.seed,
            )
            .map_err(|e| CliError::Usage(e.to_string()))?;
            vec![Case {
                name: format!("synthetic(m={},k={},L={}ms)", args.features, args.breakers, args.latency_ms),
                oracle: Box::new(SyntheticOracle::new(spec)),
                kind: ExplanationKind::Axp,
                epsilon: 1.0,
                norm: Norm::L1,
            }]
        }
        (None, false) => return Err(CliError::Usage("bench needs --synthetic or --cases DIR".into())),
    };
    if cases.is_empty() {
        return Err(CliError::Usage("the benchmark suite is empty".into()));
    }
    if args.algos.is_empty() || args.processors.is_empty() || args.processors.contains(&0) {
        return Err(CliError::Usage("need at least one algorithm and positive processor counts".into()));
    }

    let mut rows = Vec::new();
    let mut notes = Vec::new();
    for case in &cases {
        let mut results: Vec<FeatureSet> = Vec::new();
        for &algorithm in &args.algos {
            // Sequential algorithms ignore q; run them once.
            let qs: &[usize] = if algorithm == Algorithm::Swift { &args.processors } else { &[1] };
            for &q in qs {
                let config = RunConfig::new(case.kind, case.epsilon, case.norm)
                    .with_processors(q)
                    .with_fd(!args.no_fd)
                    .with_fd_threshold(args.delta);
                config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
                let r = explain(case.oracle.as_ref(), algorithm, &config)?;
                results.push(r.set.clone());
                rows.push(Row {
                    case: case.name.clone(),
                    algorithm,
                    processors: q,
                    oracle_calls: r.stats.oracle_calls,
                    parallel_rounds: r.stats.parallel_rounds,
                    cancelled_calls: r.stats.cancelled_calls,
                    wall_time_ms: r.stats.wall_time.as_secs_f64() * 1e3,
                    explanation_size: r.set.len(),
                    fd_success_rate: (r.stats.fd_invocations > 0)
                        .then(|| r.stats.fd_all_necessary as f64 / r.stats.fd_invocations as f64),
                    result: r.set,
                });
            }
        }
        if results.windows(2).any(|w| w[0] != w[1]) {
            notes.push(format!("{}: algorithms returned different explanations", case.name));
        }
    }

    match args.format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&rows).expect("rows serialize")),
        Format::Table => {
            println!(
                "{:<32} {:<10} {:>3} {:>7} {:>7} {:>9} {:>11} {:>5} {:>7}  result",
                "case", "algorithm", "q", "calls", "rounds", "cancelled", "wall_ms", "size", "fd_rate"
            );
            for r in &rows {
                let fd = r.fd_success_rate.map_or("-".to_string(), |x| format!("{:.2}", x));
                println!(
                    "{:<32} {:<10} {:>3} {:>7} {:>7} {:>9} {:>11.1} {:>5} {:>7}  {}",
                    r.case,
                    r.algorithm.to_string(),
                    r.processors,
                    r.oracle_calls,
                    r.parallel_rounds,
                    r.cancelled_calls,
                    r.wall_time_ms,
                    r.explanation_size,
                    fd,
                    r.result
                );
            }
            for note in &notes {
                println!("note: {note}");
            }
        }
    }
    Ok(())
}
