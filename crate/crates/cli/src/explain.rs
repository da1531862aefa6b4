use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Args;
use drxp::enumerate::{enumerate, EnumerationConfig, SeedPreference};
use drxp::format::{parse_instance, parse_model};
use drxp::msmp::{
    default_processors, explain, verify_minimal, Algorithm, ExplanationKind, FreedChoice, OrderingSpec, Predicate,
    RunConfig, DEFAULT_FD_THRESHOLD,
};
use drxp::oracle::{ExternalOracle, ExternalOracleConfig, GridOracle, Oracle};
use drxp::report::{InstanceEcho, RunReport};
use drxp::{Error, ExplanationProblem, FeatureOrder, Norm};

use crate::{read_file, CliError, ORACLE_ENV};

#[derive(Args, Debug)]
pub struct ExplainArgs {
    /// Model document (JSON).
    #[arg(long)]
    pub model: PathBuf,
    /// Instance as `v1,...,vm:c`, or a file holding that text.
    #[arg(long)]
    pub instance: String,
    /// Distance bound.
    #[arg(long)]
    pub epsilon: f64,
    /// One of l0, l1, l2, linf.
    #[arg(long)]
    pub norm: Norm,
    /// axp or cxp.
    #[arg(long, default_value = "axp")]
    pub kind: ExplanationKind,
    /// deletion, dichotomic or swift.
    #[arg(long = "algo", default_value = "swift")]
    pub algorithm: Algorithm,
    /// Concurrent oracle calls (default: available processors).
    #[arg(short = 'q', long = "processors")]
    pub processors: Option<usize>,
    /// Feature-disjunction threshold in [0, 1].
    #[arg(long, default_value_t = DEFAULT_FD_THRESHOLD)]
    pub delta: f64,
    /// Disable the feature-disjunction step.
    #[arg(long)]
    pub no_fd: bool,
    /// Feature order: `identity`, `seed:N` or a permutation like `3,1,2`.
    #[arg(long, default_value = "identity")]
    pub order: String,
    /// Redundant feature freed by disjunction: `last` or `seed:N`.
    #[arg(long, default_value = "last")]
    pub freed: String,
    /// Enumerate every AXp and CXp instead of computing one.
    #[arg(long)]
    pub enumerate: bool,
    /// Stop enumeration after this many explanations.
    #[arg(long, requires = "enumerate")]
    pub limit: Option<usize>,
    /// Enumeration seed preference: maximal, minimal or random:N.
    #[arg(long, default_value = "maximal", requires = "enumerate")]
    pub seeds: SeedPreference,
    /// List enumerated AXps then CXps instead of discovery order.
    #[arg(long, requires = "enumerate")]
    pub group: bool,
    /// Report path; `-` for standard output. Default: next to the model.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Skip the minimality check of results.
    #[arg(long)]
    pub no_verify: bool,
    /// Omit processor count, counters and timings from the report.
    #[arg(long)]
    pub stable: bool,
}

fn parse_ordering(text: &str) -> Result<OrderingSpec, CliError> {
    let bad = || CliError::Usage(format!("invalid --order `{text}`"));
    if text == "identity" {
        return Ok(OrderingSpec::Identity);
    }
    if let Some(seed) = text.strip_prefix("seed:") {
        return seed.parse().map(OrderingSpec::Seeded).map_err(|_| bad());
    }
    let order: Vec<usize> = text.split(',').map(|t| t.trim().parse()).collect::<Result<_, _>>().map_err(|_| bad())?;
    Ok(OrderingSpec::Explicit(FeatureOrder::new(order).map_err(|e| CliError::Usage(e.to_string()))?))
}

fn parse_freed(text: &str) -> Result<FreedChoice, CliError> {
    match text {
        "last" => Ok(FreedChoice::Last),
        _ => text
            .strip_prefix("seed:")
            .and_then(|s| s.parse().ok())
            .map(FreedChoice::Seeded)
            .ok_or_else(|| CliError::Usage(format!("invalid --freed `{text}`"))),
    }
}

pub fn load_problem(model: &Path, instance: &str) -> Result<ExplanationProblem, CliError> {
    let problem = parse_model(&read_file(model)?)?;
    let text = if Path::new(instance).is_file() { read_file(Path::new(instance))? } else { instance.to_string() };
    let instance = parse_instance(&text, &problem)?;
    Ok(ExplanationProblem::new(problem, instance)?)
}

/// The built-in grid oracle, or the external one named by the environment.
pub fn make_oracle(problem: &ExplanationProblem, norm: Norm) -> Result<Box<dyn Oracle>, CliError> {
    match std::env::var(ORACLE_ENV) {
        Ok(cmd) if !cmd.trim().is_empty() => {
            Ok(Box::new(ExternalOracle::spawn(&cmd, problem.clone(), norm, ExternalOracleConfig::default())?))
        }
        _ => Ok(Box::new(GridOracle::new(problem.clone()))),
    }
}

fn default_report_path(model: &Path, suffix: &str) -> PathBuf {
    let stem = model.file_stem().and_then(|s| s.to_str()).unwrap_or("model");
    model.with_file_name(format!("{stem}.{suffix}.report.json"))
}

fn verify(oracle: &dyn Oracle, kind: ExplanationKind, config: &RunConfig, set: &drxp::FeatureSet) -> Result<bool, CliError> {
    let pred = Predicate::new(oracle, kind, config.epsilon, config.norm)?;
    Ok(verify_minimal(&pred, set)?)
}

pub fn run(args: ExplainArgs) -> Result<(), CliError> {
    let problem = load_problem(&args.model, &args.instance)?;
    let config = RunConfig {
        kind: args.kind,
        epsilon: args.epsilon,
        norm: args.norm,
        ordering: parse_ordering(&args.order)?,
        processors: args.processors.unwrap_or_else(default_processors),
        fd_threshold: args.delta,
        fd_enabled: !args.no_fd,
        freed_choice: parse_freed(&args.freed)?,
    };
    config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let oracle = make_oracle(&problem, args.norm)?;
    let oracle = oracle.as_ref();
    let instance = Some(InstanceEcho::of(&problem));

    let mut summary = Vec::new();
    let mut failed_verification = false;
    let (report, suffix) = if args.enumerate {
        let mut econfig = EnumerationConfig::new(config.clone());
        econfig.algorithm = args.algorithm;
        econfig.limit = args.limit;
        econfig.preference = args.seeds;
        let found = enumerate(oracle, &econfig)?;
        let mut verified = Vec::with_capacity(found.discoveries.len());
        for d in &found.discoveries {
            let status = if args.no_verify { None } else { Some(verify(oracle, d.kind, &config, &d.set)?) };
            failed_verification |= status == Some(false);
            verified.push(status);
            summary.push(format!("{} {}", d.kind, d.set));
        }
        summary.push(format!(
            "{} AXps, {} CXps, {} (calls {}, rounds {})",
            found.axps.len(),
            found.cxps.len(),
            if found.axps.complete { "complete" } else { "incomplete" },
            found.stats.oracle_calls,
            found.stats.parallel_rounds
        ));
        let report = RunReport::for_enumeration(
            &config,
            args.algorithm,
            instance,
            oracle.capabilities(),
            &found,
            &verified,
            args.group,
        )?;
        (report, "enumerate")
    } else {
        let result = explain(oracle, args.algorithm, &config)?;
        let status = if args.no_verify { None } else { Some(verify(oracle, args.kind, &config, &result.set)?) };
        failed_verification = status == Some(false);
        summary.push(format!(
            "{} {} (calls {}, rounds {})",
            result.kind, result.set, result.stats.oracle_calls, result.stats.parallel_rounds
        ));
        let report = RunReport::for_explanation(&config, instance, oracle.capabilities(), &result, status)?;
        (report, if args.kind == ExplanationKind::Axp { "axp" } else { "cxp" })
    };

    let report = if args.stable { report.stable() } else { report };
    let text = report.to_json();
    let out = args.out.unwrap_or_else(|| default_report_path(&args.model, suffix));
    let mut stdout = std::io::stdout().lock();
    if out.as_os_str() == "-" {
        stdout.write_all(text.as_bytes()).map_err(|e| CliError::Usage(e.to_string()))?;
    } else {
        std::fs::write(&out, &text).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", out.display())))?;
        for line in &summary {
            let _ = writeln!(stdout, "{line}");
        }
        let _ = writeln!(stdout, "report: {}", out.display());
    }
    if failed_verification {
        return Err(Error::OracleInconsistency("a reported set failed the minimality check".into()).into());
    }
    Ok(())
}
