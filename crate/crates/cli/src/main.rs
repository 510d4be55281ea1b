//! `loc2vec` command-line driver.
//!
//! Exit codes: 0 success, 1 configuration error, 2 runtime failure.

use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use loc2vec::baselines::{read_factors, write_factors};
use loc2vec::corpus::{generate_fixture, write_checkins, Dataset};
use loc2vec::embedding::{read_model, write_loss_csv, write_model, write_text_vectors};
use loc2vec::eval::{aggregate, evaluate, write_summary_csv, write_summary_json, write_user_csv, GroundTruth, Timings};
use loc2vec::harness::{
    echo, factorize, load_dataset, read_pairs, run_experiment, run_sweep, runs_from_combined_csv, train_embedding,
    write_plot_data, DataSource, ExperimentConfig, Fitted, SweepAxis, SweepSpec,
};
use loc2vec::interactions::{InteractionMatrix, Weighting};
use loc2vec::parallel::Execution;
use loc2vec::recommend::{read_batch, recommend_batch, write_batch, Method};
use loc2vec::Error;

#[derive(Parser)]
#[command(name = "loc2vec", version, about = "Venue recommendation with check-in embeddings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic check-in file with planted communities.
    GenerateFixture(GenerateArgs),
    /// Train an embedding (KNI/NN/KIU) or factorize (SVD/CCD++) and save it.
    Train(TrainArgs),
    /// Recommend venues for users and write them in batch format.
    Recommend(RecommendArgs),
    /// Score a batch of recommendations against the test check-ins.
    Evaluate(EvaluateArgs),
    /// Train, recommend and evaluate in one go.
    Run(RunArgs),
    /// Repeat `run` over a grid of F, C or E values.
    Sweep(SweepArgs),
    /// Turn a combined sweep CSV into tidy per-method plot files.
    PlotData(PlotArgs),
}

/// Settings shared by every experiment command. Flags override the config file.
#[derive(Args, Default)]
struct ExperimentArgs {
    /// key=value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// KNI, NN, KIU, CF, Random, SVD or CCD++.
    #[arg(long)]
    method: Option<String>,
    /// skipgram or cbow.
    #[arg(long)]
    arch: Option<String>,
    /// Embedding size F.
    #[arg(long)]
    features: Option<usize>,
    /// Context size C, or `max`.
    #[arg(long)]
    window: Option<String>,
    /// Training epochs E.
    #[arg(long)]
    epochs: Option<usize>,
    /// Neighbour count N.
    #[arg(long)]
    neighbors: Option<usize>,
    /// List length k.
    #[arg(long)]
    topk: Option<usize>,
    /// Leave out venues the user already visited.
    #[arg(long)]
    filter_seen: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// Threads; 1 gives reproducible training.
    #[arg(long)]
    workers: Option<usize>,
    /// Check-in file split at --boundary.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Pre-split training file.
    #[arg(long)]
    train: Option<PathBuf>,
    /// Pre-split test file.
    #[arg(long)]
    test: Option<PathBuf>,
    /// Split timestamp in unix seconds.
    #[arg(long)]
    boundary: Option<u64>,
    /// Column order, e.g. user,_,venue,timestamp.
    #[arg(long)]
    layout: Option<String>,
    /// tab, comma, space or a single character.
    #[arg(long)]
    delimiter: Option<String>,
    /// Output directory.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Any other config key, as key=value (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl ExperimentArgs {
    fn pairs(&self) -> Result<Vec<(String, String)>, Error> {
        let mut pairs = match &self.config {
            Some(p) => read_pairs(p)?,
            None => Vec::new(),
        };
        let mut put = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                pairs.push((k.to_string(), v));
            }
        };
        let s = |v: &Option<PathBuf>| v.as_ref().map(|p| p.display().to_string());
        put("method", self.method.clone());
        put("arch", self.arch.clone());
        put("features", self.features.map(|v| v.to_string()));
        put("window", self.window.clone());
        put("epochs", self.epochs.map(|v| v.to_string()));
        put("neighbors", self.neighbors.map(|v| v.to_string()));
        put("topk", self.topk.map(|v| v.to_string()));
        put("filter_seen", self.filter_seen.then(|| "true".to_string()));
        put("seed", self.seed.map(|v| v.to_string()));
        put("workers", self.workers.map(|v| v.to_string()));
        put("data", s(&self.data));
        put("train", s(&self.train));
        put("test", s(&self.test));
        put("boundary", self.boundary.map(|v| v.to_string()));
        put("layout", self.layout.clone());
        put("delimiter", self.delimiter.clone());
        put("output", s(&self.output));
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--set expects key=value, got `{kv}`")))?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        Ok(pairs)
    }

    fn config(&self) -> Result<ExperimentConfig, Error> {
        ExperimentConfig::from_pairs(self.pairs()?)
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    exp: ExperimentArgs,
    /// Destination file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    exp: ExperimentArgs,
    /// Binary model (embedding) or factor file to write.
    #[arg(long)]
    model_out: PathBuf,
    /// Also write `token v1 v2 ...` text vectors.
    #[arg(long)]
    vectors_out: Option<PathBuf>,
    /// Also write the per-epoch loss CSV.
    #[arg(long)]
    loss_out: Option<PathBuf>,
}

#[derive(Args)]
struct RecommendArgs {
    #[command(flatten)]
    exp: ExperimentArgs,
    /// Model or factor file from `train`; not needed for CF and Random.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Target user (repeatable).
    #[arg(long = "user")]
    users: Vec<String>,
    /// File with one target user per line.
    #[arg(long)]
    users_file: Option<PathBuf>,
    /// Destination file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    exp: ExperimentArgs,
    /// Batch file written by `recommend`.
    #[arg(long)]
    recommendations: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    exp: ExperimentArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    exp: ExperimentArgs,
    /// F, C or E.
    #[arg(long)]
    axis: String,
    /// Comma-separated values; the default grid when omitted.
    #[arg(long, value_delimiter = ',')]
    values: Vec<String>,
}

#[derive(Args)]
struct PlotArgs {
    /// Combined CSV written by `sweep`.
    #[arg(long)]
    input: PathBuf,
    /// F, C or E.
    #[arg(long)]
    axis: String,
    /// Directory for the plot files.
    #[arg(long)]
    out: PathBuf,
}

fn writer(path: Option<&Path>) -> Result<Box<dyn Write>, Error> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn generate(args: &GenerateArgs) -> Result<(), Error> {
    let cfg = args.exp.config()?;
    let DataSource::Fixture(spec) = &cfg.data else {
        return Err(Error::Config("generate-fixture takes fixture.* settings, not input files".into()));
    };
    let fx = generate_fixture(spec)?;
    let mut w = writer(args.out.as_deref())?;
    write_checkins(&mut w, &fx.records)?;
    w.flush()?;
    eprintln!(
        "{} train and {} test check-ins, boundary {}",
        fx.train_count, fx.test_count, fx.boundary
    );
    Ok(())
}

fn train(args: &TrainArgs) -> Result<(), Error> {
    let cfg = args.exp.config()?;
    let data = load_dataset(&cfg.data)?;
    data.verify_split()?;
    let out = BufWriter::new(File::create(&args.model_out)?);
    match cfg.method {
        m if m.uses_embedding() => {
            let (model, report) = train_embedding(&cfg, &data.train)?;
            write_model(out, &model)?;
            if let Some(p) = &args.vectors_out {
                write_text_vectors(BufWriter::new(File::create(p)?), &model)?;
            }
            if let Some(p) = &args.loss_out {
                write_loss_csv(File::create(p)?, &report.epochs)?;
            }
            let last = report.epochs.last().map(|e| e.average_loss).unwrap_or(f64::NAN);
            eprintln!(
                "trained {} tokens, F={}, {} epochs in {:.2}s, final loss {last:.4}",
                model.vocab.len(),
                model.features(),
                report.epochs.len(),
                report.seconds
            );
        }
        Method::Svd | Method::Ccdpp => {
            let matrix = InteractionMatrix::from_records(&data.train, Weighting::Counts);
            let factors = factorize(&cfg, &matrix)?;
            write_factors(out, &factors)?;
            eprintln!("factorized {}x{} at rank {}", matrix.n_users(), matrix.n_venues(), factors.rank);
        }
        m => return Err(Error::Config(format!("{m} has nothing to train"))),
    }
    Ok(())
}

/// Loads a saved model or factor file, telling them apart by magic bytes.
fn load_fitted(path: &Path, method: Method, data: &Dataset) -> Result<Fitted, Error> {
    let mut magic = [0u8; 4];
    File::open(path)?.read_exact(&mut magic)?;
    let reader = BufReader::new(File::open(path)?);
    match &magic {
        b"L2VM" => {
            if !method.uses_embedding() {
                return Err(Error::Config(format!("{method} cannot use an embedding model")));
            }
            Ok(Fitted::from_model(read_model(reader)?, &data.train))
        }
        b"L2VF" => {
            if !matches!(method, Method::Svd | Method::Ccdpp) {
                return Err(Error::Config(format!("{method} cannot use a factor file")));
            }
            Fitted::from_factors(read_factors(reader)?, method, &data.train)
        }
        _ => Err(Error::Format(format!("{} is neither a model nor a factor file", path.display()))),
    }
}

fn recommend(args: &RecommendArgs) -> Result<(), Error> {
    let cfg = args.exp.config()?;
    let data = load_dataset(&cfg.data)?;
    let fitted = match (&args.model, cfg.method) {
        (Some(p), m) => load_fitted(p, m, &data)?,
        (None, Method::Cf | Method::Random) => Fitted::fit(&cfg, &data)?,
        (None, m) => return Err(Error::Config(format!("{m} needs --model from `train`"))),
    };
    let mut users = args.users.clone();
    if let Some(p) = &args.users_file {
        let text = fs::read_to_string(p)?;
        users.extend(text.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from));
    }
    if users.is_empty() {
        users = GroundTruth::from_dataset(&data).users().to_vec();
    }
    let rec = fitted.recommender(cfg.method, &cfg, cfg.seed)?;
    let lists = recommend_batch(rec.as_ref(), &users, Execution::from_workers(cfg.training.workers));
    let mut w = writer(args.out.as_deref())?;
    write_batch(&mut w, &lists)?;
    w.flush()?;
    Ok(())
}

fn evaluate_cmd(args: &EvaluateArgs) -> Result<(), Error> {
    let cfg = args.exp.config()?;
    let data = load_dataset(&cfg.data)?;
    let truth = GroundTruth::from_dataset(&data);
    let lists = read_batch(BufReader::new(File::open(&args.recommendations)?))?;
    if let Some(l) = lists.iter().find(|l| l.items.len() > cfg.recommend.k) {
        return Err(Error::Config(format!(
            "user {} has {} recommendations but k = {}",
            l.user,
            l.items.len(),
            cfg.recommend.k
        )));
    }
    let mut echo = echo(&cfg);
    if let Some(l) = lists.first() {
        echo.method = l.method.to_string();
    }
    let rows = evaluate(&lists, &truth, cfg.recommend.k, Execution::from_workers(cfg.training.workers))?;
    let report = aggregate(rows, Timings::default(), echo)?;
    if let Some(dir) = &cfg.output {
        fs::create_dir_all(dir)?;
        write_user_csv(File::create(dir.join("users.csv"))?, &report.users)?;
        write_summary_json(File::create(dir.join("report.json"))?, std::slice::from_ref(&report))?;
        write_summary_csv(File::create(dir.join("report.csv"))?, std::slice::from_ref(&report))?;
    }
    write_summary_csv(io::stdout().lock(), &[report])?;
    Ok(())
}

fn run(args: &RunArgs) -> Result<(), Error> {
    let cfg = args.exp.config()?;
    let outcome = run_experiment(&cfg)?;
    write_summary_csv(io::stdout().lock(), &[outcome.report])?;
    Ok(())
}

fn sweep(args: &SweepArgs) -> Result<(), Error> {
    let base = args.exp.config()?;
    let axis: SweepAxis = args.axis.parse()?;
    let spec = if args.values.is_empty() {
        SweepSpec::with_default_grid(axis)
    } else {
        SweepSpec {
            axis,
            values: args.values.clone(),
        }
    };
    let outcome = run_sweep(&spec, &base)?;
    print!("{}", outcome.combined_csv()?);
    for (value, err) in &outcome.failures {
        eprintln!("run {axis}={value} failed: {err}");
    }
    if outcome.runs.is_empty() {
        return Err(Error::Training("every sweep run failed".into()));
    }
    Ok(())
}

fn plot_data(args: &PlotArgs) -> Result<(), Error> {
    let axis: SweepAxis = args.axis.parse()?;
    let text = fs::read_to_string(&args.input)?;
    let runs = runs_from_combined_csv(&text, axis)?;
    for name in write_plot_data(&args.out, &runs)? {
        println!("{}", args.out.join(name).display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::GenerateFixture(a) => generate(a),
        Command::Train(a) => train(a),
        Command::Recommend(a) => recommend(a),
        Command::Evaluate(a) => evaluate_cmd(a),
        Command::Run(a) => run(a),
        Command::Sweep(a) => sweep(a),
        Command::PlotData(a) => plot_data(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 1 } else { 2 })
        }
    }
}
