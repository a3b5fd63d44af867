use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{ArgGroup, Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ttg_core::eval::{render_report, run_eval, EvalCase, EvalParams};
use ttg_core::generator::{
    derive_seed, generate_dataset, ingest_flight_csv, perturb_request, read_dataset, write_dataset, DatasetSummary,
    GeneratorConfig, Pair, PerturbationSpec,
};
use ttg_core::model::{solve_request, ModelError, SolveError};
use ttg_core::schema::{parse_inventory, parse_request, request_from_value, ObjectiveKind};
use ttg_core::solver::{MilpStatus, SolverParams, Timing};
use ttg_core::Rules;

use crate::profile::PhaseProfile;
use crate::render::itinerary_table;
use crate::service::{serve, ServiceConfig};
use crate::{EXIT_INFEASIBLE, EXIT_RUNTIME};

#[derive(Debug, Parser)]
#[command(name = "ttg", version, about = "Generate, solve and evaluate symbolic travel requests")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a JSON-lines dataset of (request, inventory) pairs.
    Generate(GenerateArgs),
    /// Solve one request against an inventory.
    Solve(SolveArgs),
    /// Score estimated requests against a dataset's ground truth.
    Eval(EvalArgs),
    /// Fit a price model from a flight fare CSV.
    Ingest(IngestArgs),
    /// Time model loading and solving over a dataset.
    Profile(ProfileArgs),
    /// Run the HTTP service.
    Serve(ServeArgs),
}

fn objective(s: &str) -> Result<ObjectiveKind, String> {
    ObjectiveKind::parse(s).ok_or_else(|| "expected min_cost, better_hotel or better_flight".to_string())
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub n: u64,
    /// Overrides the config file's rng_seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Generator config JSON; omitted fields keep their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub jobs: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub request: PathBuf,
    #[arg(long)]
    pub inventory: PathBuf,
    #[arg(long, value_parser = objective, default_value = "min_cost")]
    pub objective: ObjectiveKind,
    /// Print the branch-and-bound node log to stderr.
    #[arg(long)]
    pub trace: bool,
    #[arg(long)]
    pub time_limit_ms: Option<u64>,
    #[arg(long)]
    pub slot_minutes: Option<u32>,
    /// Also write the itinerary as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("estimator").required(true).args(["perturb", "estimates"])))]
pub struct EvalArgs {
    /// Dataset written by `ttg generate`.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Perturbation spec JSON applied to each ground-truth request.
    #[arg(long)]
    pub perturb: Option<PathBuf>,
    /// One estimated request per line, in dataset order.
    #[arg(long)]
    pub estimates: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_parser = objective, default_value = "min_cost")]
    pub objective: ObjectiveKind,
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u64).range(1..))]
    pub subsets: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub jobs: Option<u64>,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub csv: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ProfileArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, value_parser = objective, default_value = "min_cost")]
    pub objective: ObjectiveKind,
    #[arg(long)]
    pub time_limit_ms: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Overrides TTG_PORT.
    #[arg(long)]
    pub port: Option<u16>,
}

/// Failure with the exit code it maps to.
#[derive(Debug)]
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(error: E) -> Self {
        Failure {
            code: EXIT_RUNTIME,
            error: error.into(),
        }
    }
}

pub fn run(cli: Cli) -> ExitCode {
    let result = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Solve(a) => solve(a),
        Command::Eval(a) => eval(a),
        Command::Ingest(a) => ingest(a),
        Command::Profile(a) => profile(a),
        Command::Serve(a) => serve_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn with_jobs<T: Send>(jobs: Option<u64>, f: impl FnOnce() -> T + Send) -> anyhow::Result<T> {
    match jobs {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n as usize).build()?;
            Ok(pool.install(f))
        }
    }
}

fn print_summary(s: &DatasetSummary) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "pairs                  {}", s.pairs);
    let _ = writeln!(out, "one-way                {}", s.one_way);
    let _ = writeln!(out, "three cities           {}", s.three_city);
    let _ = writeln!(out, "flights per segment    {:.2}", s.mean_flights_per_segment);
    let _ = writeln!(out, "hotels per pair        {:.2}", s.mean_hotels);
    for (title, hist) in [
        ("airline constraints", &s.airline_constraint_counts),
        ("hotel constraints", &s.hotel_constraint_counts),
    ] {
        let _ = writeln!(out, "\n# {title}     pairs");
        for (count, pairs) in hist {
            let _ = writeln!(out, "  {count:<22}{pairs}");
        }
    }
    let _ = writeln!(out, "\nfield                                         pairs");
    for (field, n) in &s.field_counts {
        let _ = writeln!(out, "  {field:<44}{n}");
    }
    out
}

fn generate(a: GenerateArgs) -> Result<(), Failure> {
    let mut config = match &a.config {
        Some(path) => serde_json::from_str::<GeneratorConfig>(&read(path)?)
            .with_context(|| format!("parsing {}", path.display()))?,
        None => GeneratorConfig::default(),
    };
    if let Some(seed) = a.seed {
        config.rng_seed = seed;
    }
    let pairs = with_jobs(a.jobs, || generate_dataset(&config, a.n as usize))??;
    write_dataset(&a.out, &pairs)?;
    print!("{}", print_summary(&DatasetSummary::of(&pairs)));
    Ok(())
}

fn solve(a: SolveArgs) -> Result<(), Failure> {
    let request = parse_request(&read(&a.request)?).with_context(|| format!("in {}", a.request.display()))?;
    let inventory =
        parse_inventory(&read(&a.inventory)?, &request).with_context(|| format!("in {}", a.inventory.display()))?;
    let mut params = SolverParams::default();
    if let Some(ms) = a.time_limit_ms {
        params.time_limit_ms = ms;
    }
    let mut rules = Rules::default();
    if let Some(s) = a.slot_minutes {
        rules = rules.with_slot_minutes(s);
    }
    let mut stderr = std::io::stderr();
    let trace: Option<&mut dyn std::io::Write> = if a.trace { Some(&mut stderr) } else { None };
    let solved = match solve_request(&request, &inventory, a.objective, &params, &rules, trace) {
        Ok(s) => s,
        Err(SolveError::Model(e @ ModelError::EmptySegment { .. })) => {
            return Err(Failure {
                code: EXIT_INFEASIBLE,
                error: anyhow!(e),
            })
        }
        Err(e) => return Err(anyhow!(e).into()),
    };
    let t = solved.result.timing;
    eprintln!(
        "load {:.3}s  solve {:.3}s  total {:.3}s  nodes {}",
        t.load_ms / 1000.0,
        t.solve_ms / 1000.0,
        t.total_ms / 1000.0,
        solved.result.nodes
    );
    match (solved.result.status, solved.itinerary) {
        (MilpStatus::Optimal, Some(it)) => {
            print!("{}", itinerary_table(&it, &request, &inventory));
            if let Some(out) = &a.out {
                let text = serde_json::to_string_pretty(&it)?;
                fs::write(out, text + "\n").with_context(|| format!("writing {}", out.display()))?;
            }
            Ok(())
        }
        (MilpStatus::Infeasible, _) => Err(Failure {
            code: EXIT_INFEASIBLE,
            error: anyhow!("no itinerary satisfies every constraint"),
        }),
        (status, _) => Err(anyhow!("solver stopped with status {status:?} after {} ms", params.time_limit_ms).into()),
    }
}

fn eval(a: EvalArgs) -> Result<(), Failure> {
    let pairs = read_dataset(&a.dataset)?;
    let cases: Vec<EvalCase> = if let Some(path) = &a.perturb {
        let spec: PerturbationSpec =
            serde_json::from_str(&read(path)?).with_context(|| format!("parsing {}", path.display()))?;
        pairs
            .into_iter()
            .enumerate()
            .map(|(i, Pair { request, inventory })| {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(a.seed, i as u64));
                let (estimate, changes) =
                    perturb_request(&mut rng, &request, &spec).with_context(|| format!("perturbing case {i}"))?;
                Ok(EvalCase {
                    request,
                    estimate,
                    inventory,
                    changes: Some(changes),
                })
            })
            .collect::<anyhow::Result<_>>()?
    } else {
        let path = a.estimates.as_ref().expect("clap requires one estimator");
        let text = read(path)?;
        let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
        if lines.len() != pairs.len() {
            return Err(anyhow!(
                "{} has {} estimates for {} dataset cases",
                path.display(),
                lines.len(),
                pairs.len()
            )
            .into());
        }
        pairs
            .into_iter()
            .zip(lines)
            .enumerate()
            .map(|(i, (Pair { request, inventory }, line))| {
                let value = serde_json::from_str(line).with_context(|| format!("estimate {i}"))?;
                let estimate = request_from_value(value).with_context(|| format!("estimate {i}"))?;
                Ok(EvalCase {
                    request,
                    estimate,
                    inventory,
                    changes: None,
                })
            })
            .collect::<anyhow::Result<_>>()?
    };
    let params = EvalParams {
        objective: a.objective,
        subsets: a.subsets as usize,
        ..EvalParams::default()
    };
    let report = with_jobs(a.jobs, || run_eval(&cases, &params))??;
    if let Some(out) = &a.out {
        let text = serde_json::to_string_pretty(&report)?;
        fs::write(out, text + "\n").with_context(|| format!("writing {}", out.display()))?;
    }
    print!("{}", render_report(&report));
    Ok(())
}

fn ingest(a: IngestArgs) -> Result<(), Failure> {
    let (model, summary) = ingest_flight_csv(&a.csv)?;
    let text = serde_json::to_string_pretty(&model)?;
    fs::write(&a.out, text + "\n").with_context(|| format!("writing {}", a.out.display()))?;
    println!(
        "rows read {}  used {}  skipped {}",
        summary.rows_read, summary.rows_used, summary.rows_skipped
    );
    println!("{:<10}{:<8}{:>8}{:>12}{:>10}", "cabin", "band", "rows", "median", "sigma");
    for b in &summary.buckets {
        println!(
            "{:<10}{:<8}{:>8}{:>12}{:>10.3}",
            b.cabin.as_str(),
            format!("{:?}", b.band).to_lowercase(),
            b.count,
            crate::render::dollars(b.log_mean.exp().round() as i64),
            b.log_std
        );
    }
    Ok(())
}

fn profile(a: ProfileArgs) -> Result<(), Failure> {
    let pairs = read_dataset(&a.dataset)?;
    if pairs.is_empty() {
        return Err(anyhow!("{} is empty", a.dataset.display()).into());
    }
    let mut params = SolverParams::default();
    if let Some(ms) = a.time_limit_ms {
        params.time_limit_ms = ms;
    }
    let rules = Rules::default();
    let mut timings: Vec<Timing> = Vec::with_capacity(pairs.len());
    let mut not_optimal = Vec::new();
    for (i, p) in pairs.iter().enumerate() {
        match solve_request(&p.request, &p.inventory, a.objective, &params, &rules, None) {
            Ok(s) => {
                if s.result.status != MilpStatus::Optimal {
                    not_optimal.push(i);
                }
                timings.push(s.result.timing);
            }
            Err(e) => {
                let _ = writeln!(std::io::stderr(), "case {i}: {e}");
                not_optimal.push(i);
            }
        }
    }
    print!("{}", PhaseProfile::of(&timings).render());
    if !not_optimal.is_empty() {
        return Err(anyhow!("cases without a proven optimum: {not_optimal:?}").into());
    }
    Ok(())
}

fn serve_cmd(a: ServeArgs) -> Result<(), Failure> {
    let _ = tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
        )
        .with_writer(std::io::stderr)
        .try_init();
    let mut config = ServiceConfig::from_env().map_err(|e| anyhow!(e))?;
    if let Some(port) = a.port {
        config.port = port;
    }
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(serve(config)).context("serving")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exactly_one_estimator_is_required() {
        let base = ["ttg", "eval", "--dataset", "d.jsonl"];
        assert!(Cli::try_parse_from(base).is_err());
        let both = [&base[..], &["--perturb", "p.json", "--estimates", "e.jsonl"]].concat();
        assert!(Cli::try_parse_from(both).is_err());
        let one = [&base[..], &["--perturb", "p.json"]].concat();
        assert!(Cli::try_parse_from(one).is_ok());
    }

    #[test]
    fn bad_flags_are_usage_errors() {
        for args in [
            &["ttg", "generate", "--n", "0", "--out", "x"][..],
            &["ttg", "generate", "--n", "5", "--out", "x", "--bogus"],
            &["ttg", "solve", "--request", "r", "--inventory", "i", "--objective", "cheapest"],
        ] {
            let err = Cli::try_parse_from(args).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{args:?}");
        }
    }
}
