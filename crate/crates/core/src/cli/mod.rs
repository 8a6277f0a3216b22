//! Command-line front end.
//!
//! Exit statuses: 0 success, 1 I/O failure, 2 usage or validation error,
//! 3 failed gradient check.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::data::{
    generate_synthetic, load_dataset, make_splits, write_dataset, MilDataset, Regime, SplitPlan,
    SynthSpec,
};
use crate::error::{Error, Result};
use crate::evaluation::{cross_validate, eer, grid_search, score_dataset, EvalConfig, Grid, ModelSpec};
use crate::gradcheck::{run_gradcheck, GradCheckOptions};
use crate::network::{init_network, ArchKind, Network, PoolKind};
use crate::training::{objective, read_kv_file, train, TrainConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CHECK_FAILED: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "milnet", version, about = "Multiple-instance learning networks with in-network pooling")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train one model and write it as JSON.
    Train(TrainArgs),
    /// Score a dataset with a saved model, writing `bag_id,score`.
    Predict(PredictArgs),
    /// Repeated stratified cross-validation with inner grid search.
    Eval(EvalArgs),
    /// Inner grid search on a whole dataset.
    Gridsearch(GridSearchArgs),
    /// Finite-difference check of analytic gradients.
    Gradcheck(GradCheckArgs),
    /// Generate a synthetic dataset CSV.
    Synth(SynthArgs),
}

/// Model and optimizer options. Unset flags fall back to `--config`, then defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct ModelArgs {
    /// Pooling: mean, max or smoothmax.
    #[arg(long)]
    pub pool: Option<String>,
    /// Architecture: proposed or prior-nn.
    #[arg(long)]
    pub arch: Option<String>,
    #[arg(long)]
    pub embed_dim: Option<usize>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub no_standardize: bool,
    /// Flat key=value file with training settings.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Clone, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Output CSV; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GridArgs {
    /// Comma-separated embedding sizes.
    #[arg(long, value_delimiter = ',')]
    pub grid_m: Option<Vec<usize>>,
    /// Comma-separated L1 strengths.
    #[arg(long, value_delimiter = ',')]
    pub grid_lambda: Option<Vec<f64>>,
    #[arg(long, default_value_t = 5)]
    pub inner_folds: usize,
    /// Concurrent training tasks.
    #[arg(long, env = "MILNET_JOBS", default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Split plan CSV (`repetition,fold,bag_id`).
    #[arg(long)]
    pub plan: Option<PathBuf>,
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long)]
    pub repeats: Option<usize>,
    /// Seed for generated split plans.
    #[arg(long)]
    pub split_seed: Option<u64>,
    /// Also write the generated split plan here.
    #[arg(long)]
    pub plan_out: Option<PathBuf>,
    /// Report CSV; a JSON copy is written next to it.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Clone, Args)]
pub struct GridSearchArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Per-cell results as JSON.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Clone, Args)]
pub struct GradCheckArgs {
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    /// Restrict to one pooling kind.
    #[arg(long)]
    pub pool: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, hide = true)]
    pub sabotage: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    /// witness or distribution-shift
    #[arg(long)]
    pub regime: String,
    /// Bags per class.
    #[arg(long)]
    pub bags: usize,
    #[arg(long)]
    pub dim: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 3.0)]
    pub separation: f64,
    #[arg(long)]
    pub min_instances: Option<usize>,
    #[arg(long)]
    pub max_instances: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{e}");
                return EXIT_USAGE;
            }
            let _ = write!(out, "{e}");
            return EXIT_OK;
        }
    };
    let result = match cli.command {
        Command::Train(a) => run_train(&a, out),
        Command::Predict(a) => run_predict(&a, out),
        Command::Eval(a) => run_eval(&a, out),
        Command::Gridsearch(a) => run_gridsearch(&a, out),
        Command::Gradcheck(a) => run_gradcheck_cmd(&a, out),
        Command::Synth(a) => run_synth(&a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_io() {
        EXIT_IO
    } else {
        EXIT_USAGE
    }
}

/// Resolved model/training options.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub model: ModelSpec,
    pub embed_dim: usize,
    pub train: TrainConfig,
}

pub const DEFAULT_EMBED_DIM: usize = 8;

impl ModelArgs {
    /// Config file first, command-line flags on top.
    pub fn resolve(&self) -> Result<Resolved> {
        let mut train = TrainConfig::default();
        let mut pool = PoolKind::Mean;
        let mut kind = ArchKind::Proposed;
        let mut embed_dim = DEFAULT_EMBED_DIM;
        if let Some(path) = &self.config {
            for (k, v) in read_kv_file(path)? {
                match k.as_str() {
                    "pool" => pool = v.parse()?,
                    "arch" => kind = v.parse()?,
                    "embed-dim" => {
                        embed_dim = v
                            .parse()
                            .map_err(|_| Error::config(format!("invalid embed-dim `{v}`")))?
                    }
                    _ => {
                        if !train.set(&k, &v)? {
                            return Err(Error::config(format!("unknown config key `{k}`")));
                        }
                    }
                }
            }
        }
        if let Some(p) = &self.pool {
            pool = p.parse()?;
        }
        if let Some(a) = &self.arch {
            kind = a.parse()?;
        }
        if let Some(m) = self.embed_dim {
            embed_dim = m;
        }
        if let Some(l) = self.lambda {
            train.lambda = l;
        }
        if let Some(b) = self.batch {
            train.batch_size = b;
        }
        if let Some(i) = self.iters {
            train.max_iterations = i;
        }
        if let Some(s) = self.seed {
            train.seed = s;
        }
        if self.no_standardize {
            train.standardize = false;
        }
        if kind == ArchKind::PriorNn && pool != PoolKind::Max {
            return Err(Error::config(format!(
                "prior-nn architecture requires --pool max, got {pool}"
            )));
        }
        if embed_dim == 0 {
            return Err(Error::config("--embed-dim must be positive"));
        }
        train.validate()?;
        Ok(Resolved {
            model: ModelSpec { kind, pool },
            embed_dim,
            train,
        })
    }
}

impl GridArgs {
    pub fn grid(&self) -> Result<Grid> {
        let defaults = Grid::default();
        let grid = Grid {
            m_values: self.grid_m.clone().unwrap_or(defaults.m_values),
            lambda_values: self.grid_lambda.clone().unwrap_or(defaults.lambda_values),
        };
        grid.validate()?;
        if self.inner_folds < 2 {
            return Err(Error::config("--inner-folds must be at least 2"));
        }
        Ok(grid)
    }
}

fn write_file(path: &PathBuf, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn say(out: &mut dyn Write, line: std::fmt::Arguments<'_>) -> Result<()> {
    writeln!(out, "{line}").map_err(|e| Error::io("<stdout>", e))
}

/// Freshly initialized network for `data`, seeded by the training seed.
pub fn initial_network(resolved: &Resolved, data: &MilDataset) -> Result<Network> {
    init_network(
        resolved.model.architecture(data.dim(), resolved.embed_dim),
        resolved.model.pool,
        resolved.train.seed,
    )
}

pub fn run_train(args: &TrainArgs, out: &mut dyn Write) -> Result<i32> {
    let resolved = args.model.resolve()?;
    let data = load_dataset(&args.data)?;
    let net = initial_network(&resolved, &data)?;
    let (trained, report) = train(&net, &data, &resolved.train)?;
    trained.save(&args.out)?;
    let train_eer = match eer(&score_dataset(&trained, &data)?) {
        Ok(v) => format!("{v}"),
        Err(Error::SingleClass(_)) => "n/a (single class)".into(),
        Err(e) => return Err(e),
    };
    let final_objective = objective(&trained, data.bags(), resolved.train.lambda)?;
    say(out, format_args!("iterations: {}", report.iterations))?;
    say(out, format_args!("final train objective: {final_objective}"))?;
    say(out, format_args!("train EER: {train_eer}"))?;
    Ok(EXIT_OK)
}

pub fn run_predict(args: &PredictArgs, out: &mut dyn Write) -> Result<i32> {
    let net = Network::load(&args.model)?;
    let data = load_dataset(&args.data)?;
    let mut text = String::from("bag_id,score\n");
    for bag in data.bags() {
        text.push_str(&format!("{},{}\n", bag.id(), net.score(bag)?));
    }
    match &args.out {
        Some(path) => write_file(path, &text)?,
        None => out
            .write_all(text.as_bytes())
            .map_err(|e| Error::io("<stdout>", e))?,
    }
    Ok(EXIT_OK)
}

fn eval_config(resolved: &Resolved, grid: &GridArgs) -> EvalConfig {
    EvalConfig {
        model: resolved.model,
        train: resolved.train.clone(),
        inner_folds: grid.inner_folds,
        seed: resolved.train.seed,
        jobs: grid.jobs.max(1),
    }
}

pub fn run_eval(args: &EvalArgs, out: &mut dyn Write) -> Result<i32> {
    let resolved = args.model.resolve()?;
    let grid = args.grid.grid()?;
    let data = load_dataset(&args.data)?;
    let plan = match (&args.plan, args.folds, args.repeats) {
        (Some(path), _, _) => SplitPlan::load(path)?,
        (None, Some(folds), Some(repeats)) => {
            make_splits(&data, folds, repeats, args.split_seed.unwrap_or(resolved.train.seed))?
        }
        _ => {
            return Err(Error::config(
                "eval needs --plan or both --folds and --repeats",
            ))
        }
    };
    if let Some(path) = &args.plan_out {
        plan.save(path)?;
    }
    let report = cross_validate(&data, &plan, &grid, &eval_config(&resolved, &args.grid))?;
    if let Some(path) = &args.report {
        report.save(path)?;
    }
    say(out, format_args!("folds evaluated: {}", report.records.len()))?;
    say(out, format_args!("mean train EER: {}", report.mean_train_eer))?;
    say(out, format_args!("mean test EER: {}", report.mean_test_eer))?;
    Ok(EXIT_OK)
}

pub fn run_gridsearch(args: &GridSearchArgs, out: &mut dyn Write) -> Result<i32> {
    let resolved = args.model.resolve()?;
    let grid = args.grid.grid()?;
    let data = load_dataset(&args.data)?;
    let config = eval_config(&resolved, &args.grid);
    let result = grid_search(&data, &grid, args.grid.inner_folds, &config, config.seed)?;
    if let Some(path) = &args.report {
        let mut json = serde_json::to_string_pretty(&result).expect("grid result serializes");
        json.push('\n');
        write_file(path, &json)?;
    }
    for cell in &result.cells {
        say(out, format_args!("m={} lambda={:e} mean EER={}", cell.m, cell.lambda, cell.mean_eer))?;
    }
    say(out, format_args!("selected m={} lambda={:e}", result.m, result.lambda))?;
    Ok(EXIT_OK)
}

pub fn run_gradcheck_cmd(args: &GradCheckArgs, out: &mut dyn Write) -> Result<i32> {
    let opts = GradCheckOptions {
        trials: args.trials,
        pool: args.pool.as_deref().map(str::parse).transpose()?,
        seed: args.seed,
        sabotage: args.sabotage,
        ..GradCheckOptions::default()
    };
    let summary = run_gradcheck(&opts)?;
    say(out, format_args!("cases: {}", summary.cases))?;
    say(out, format_args!("compared parameters: {}", summary.compared))?;
    say(out, format_args!("excluded (ReLU kink or max tie): {}", summary.excluded))?;
    say(out, format_args!("below threshold: {}", summary.negligible))?;
    say(out, format_args!("max relative error: {:e}", summary.max_rel_error))?;
    if summary.passed(opts.tolerance) {
        say(out, format_args!("gradient check passed"))?;
        Ok(EXIT_OK)
    } else {
        say(out, format_args!("gradient check FAILED ({} mismatches)", summary.failures))?;
        Ok(EXIT_CHECK_FAILED)
    }
}

pub fn run_synth(args: &SynthArgs, out: &mut dyn Write) -> Result<i32> {
    let regime: Regime = args.regime.parse()?;
    let defaults = match regime {
        Regime::Witness => SynthSpec::witness(args.dim, args.bags, args.seed),
        Regime::DistributionShift => SynthSpec::distribution_shift(args.dim, args.bags, args.seed),
    };
    let spec = SynthSpec {
        separation: args.separation,
        instances: (
            args.min_instances.unwrap_or(defaults.instances.0),
            args.max_instances.unwrap_or(defaults.instances.1),
        ),
        ..defaults
    };
    let data = generate_synthetic(&spec)?;
    write_dataset(&args.out, &data)?;
    say(
        out,
        format_args!("wrote {} bags ({} instances) to {}", data.len(), data.total_instances(), args.out.display()),
    )?;
    Ok(EXIT_OK)
}
