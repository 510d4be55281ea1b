//! One end-to-end experiment: corpus, model, recommendations, metrics.

use std::collections::HashSet;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use super::config::{DataSource, ExperimentConfig};
use crate::baselines::{
    ccdpp_factorize, svd_factorize, CcdOptions, CfRecommender, FactorModel, LatentNeighborRecommender,
    RandomRecommender, SvdOptions,
};
use crate::corpus::{
    build_sentences, build_vocabulary, generate_fixture, read_checkins, split_train_test, CheckinRecord, Dataset, Vocabulary,
};
use crate::embedding::{init_model, train, write_loss_csv, EmbeddingModel, TrainReport};
use crate::eval::{
    aggregate, score_user, write_summary_csv, write_summary_json, write_user_csv, GroundTruth, MetricsReport,
    RunEcho, Timings, UserRow,
};
use crate::interactions::{InteractionMatrix, Weighting};
use crate::parallel::{map_slice, Execution};
use crate::recommend::{recommend_batch, write_batch, EmbeddingRecommender, Method, RecommendationList, Recommender};
use crate::{Error, Result};

/// Users recommended and scored per step; partial results survive a failure
/// at step granularity.
const CHUNK: usize = 512;

pub const ERROR_MARKER: &str = "ERROR";
pub const PARTIAL_USERS: &str = "users.partial.csv";

pub fn load_dataset(source: &DataSource) -> Result<Dataset> {
    match source {
        DataSource::Fixture(spec) => {
            let fx = generate_fixture(spec)?;
            Ok(split_train_test(&fx.records, fx.boundary))
        }
        DataSource::File { path, layout, boundary } => {
            let parsed = read_checkins(path, layout)?;
            Ok(split_train_test(&parsed.records, *boundary))
        }
        DataSource::Split { train, test, layout } => {
            let train = read_checkins(train, layout)?.records;
            let test = read_checkins(test, layout)?.records;
            let boundary = train.iter().map(|r| r.timestamp + 1).max().unwrap_or(0);
            let data = Dataset { boundary, train, test };
            if let Some(r) = data.test.iter().find(|r| r.timestamp < boundary) {
                return Err(Error::Format(format!(
                    "test record {r:?} is not later than every training record"
                )));
            }
            Ok(data)
        }
    }
}

/// Tokens of users and venues that occur only on the test side.
struct TestOnly {
    users: HashSet<String>,
    venues: HashSet<String>,
}

impl TestOnly {
    fn new(data: &Dataset) -> Self {
        let tu: HashSet<&str> = data.train.iter().map(|r| r.user.as_str()).collect();
        let tv: HashSet<&str> = data.train.iter().map(|r| r.venue.as_str()).collect();
        TestOnly {
            users: data
                .test
                .iter()
                .filter(|r| !tu.contains(r.user.as_str()))
                .map(|r| Vocabulary::user_token(&r.user))
                .collect(),
            venues: data
                .test
                .iter()
                .filter(|r| !tv.contains(r.venue.as_str()))
                .map(|r| Vocabulary::venue_token(&r.venue))
                .collect(),
        }
    }

    fn check<'a>(&self, stage: &str, tokens: impl IntoIterator<Item = &'a String>) -> Result<()> {
        for t in tokens {
            if self.users.contains(t) || self.venues.contains(t) {
                return Err(Error::Training(format!("test-only token `{t}` reached the {stage}")));
            }
        }
        Ok(())
    }
}

/// A fitted method, ready to recommend.
pub enum Fitted {
    Embedding {
        model: EmbeddingModel,
        matrix: InteractionMatrix,
        report: Option<TrainReport>,
    },
    Cf(InteractionMatrix),
    Random(Vec<String>),
    Factors {
        factors: FactorModel,
        matrix: InteractionMatrix,
        method: Method,
    },
}

pub fn train_embedding(cfg: &ExperimentConfig, train_records: &[CheckinRecord]) -> Result<(EmbeddingModel, TrainReport)> {
    let vocab = build_vocabulary(train_records, cfg.min_word_count)?;
    let sentences = build_sentences(train_records, &vocab);
    let mut model = init_model(vocab, cfg.training.clone())?;
    let report = train(&mut model, &sentences.sentences)?;
    Ok((model, report))
}

pub fn factorize(cfg: &ExperimentConfig, matrix: &InteractionMatrix) -> Result<FactorModel> {
    match cfg.method {
        Method::Svd => svd_factorize(
            matrix,
            cfg.rank,
            &SvdOptions {
                seed: cfg.seed,
                ..SvdOptions::default()
            },
        ),
        Method::Ccdpp => Ok(ccdpp_factorize(
            matrix,
            &CcdOptions {
                rank: cfg.rank,
                lambda: cfg.lambda,
                outer_iterations: cfg.ccd_iterations,
                seed: cfg.seed,
                execution: Execution::from_workers(cfg.training.workers),
                ..CcdOptions::default()
            },
        )?
        .factors),
        other => Err(Error::Config(format!("{other} is not a factorization method"))),
    }
}

impl Fitted {
    /// Fits `cfg.method` on the training side of `data` only.
    pub fn fit(cfg: &ExperimentConfig, data: &Dataset) -> Result<Fitted> {
        data.verify_split()?;
        let leaks = TestOnly::new(data);
        let fitted = match cfg.method {
            Method::Kni | Method::Nn | Method::Kiu => {
                let (model, report) = train_embedding(cfg, &data.train)?;
                leaks.check("vocabulary", model.vocab.tokens())?;
                let matrix = InteractionMatrix::from_records_in_vocab(&data.train, &model.vocab, Weighting::Counts);
                Fitted::Embedding {
                    model,
                    matrix,
                    report: Some(report),
                }
            }
            Method::Cf => Fitted::Cf(InteractionMatrix::from_records(&data.train, Weighting::Counts)),
            Method::Random => {
                let m = InteractionMatrix::from_records(&data.train, Weighting::Counts);
                Fitted::Random(m.venue_tokens().to_vec())
            }
            Method::Svd | Method::Ccdpp => {
                let matrix = InteractionMatrix::from_records(&data.train, Weighting::Counts);
                let factors = factorize(cfg, &matrix)?;
                if !factors.is_finite() {
                    return Err(Error::Training("factorization produced non-finite values".into()));
                }
                leaks.check("factorization", factors.users.iter().chain(&factors.venues))?;
                Fitted::Factors {
                    factors,
                    matrix,
                    method: cfg.method,
                }
            }
        };
        if let Some(m) = fitted.matrix() {
            leaks.check("interaction matrix", m.user_tokens().iter().chain(m.venue_tokens()))?;
        }
        if let Fitted::Random(catalog) = &fitted {
            leaks.check("random catalog", catalog)?;
        }
        Ok(fitted)
    }

    /// Wraps a saved embedding; interactions come from `train`.
    pub fn from_model(model: EmbeddingModel, train: &[CheckinRecord]) -> Fitted {
        let matrix = InteractionMatrix::from_records_in_vocab(train, &model.vocab, Weighting::Counts);
        Fitted::Embedding {
            model,
            matrix,
            report: None,
        }
    }

    /// Wraps saved factors; they must have been fitted on the same `train`.
    pub fn from_factors(factors: FactorModel, method: Method, train: &[CheckinRecord]) -> Result<Fitted> {
        let matrix = InteractionMatrix::from_records(train, Weighting::Counts);
        if factors.users != matrix.user_tokens() || factors.venues != matrix.venue_tokens() {
            return Err(Error::Format("factor file does not match the training check-ins".into()));
        }
        Ok(Fitted::Factors { factors, matrix, method })
    }

    pub fn matrix(&self) -> Option<&InteractionMatrix> {
        match self {
            Fitted::Embedding { matrix, .. } | Fitted::Cf(matrix) | Fitted::Factors { matrix, .. } => Some(matrix),
            Fitted::Random(_) => None,
        }
    }

    /// `seed` only matters for Random.
    pub fn recommender<'a>(&'a self, method: Method, cfg: &ExperimentConfig, seed: u64) -> Result<Box<dyn Recommender + 'a>> {
        let options = cfg.recommend.clone();
        Ok(match (self, method) {
            (Fitted::Embedding { model, matrix, .. }, Method::Kni | Method::Nn | Method::Kiu) => {
                Box::new(EmbeddingRecommender {
                    model,
                    interactions: matrix,
                    method,
                    options,
                })
            }
            (Fitted::Cf(matrix), Method::Cf) => Box::new(CfRecommender::new(matrix, options)),
            (Fitted::Random(catalog), Method::Random) => Box::new(RandomRecommender::new(catalog, options.k, seed)),
            (Fitted::Factors { factors, matrix, .. }, Method::Svd | Method::Ccdpp) => Box::new(LatentNeighborRecommender {
                factors,
                matrix,
                method,
                options,
            }),
            _ => return Err(Error::Config(format!("fitted model cannot serve {method}"))),
        })
    }
}

pub fn echo(cfg: &ExperimentConfig) -> RunEcho {
    let t = &cfg.training;
    let embedding = cfg.method.uses_embedding();
    RunEcho {
        method: cfg.method.to_string(),
        arch: if embedding { t.architecture.to_string() } else { String::new() },
        features: match cfg.method {
            m if m.uses_embedding() => t.features,
            Method::Svd | Method::Ccdpp => cfg.rank,
            _ => 0,
        },
        window: if embedding { t.window.to_string() } else { String::new() },
        epochs: if embedding { t.epochs } else { 0 },
        neighbors: cfg.recommend.neighbors,
        k: cfg.recommend.k,
        filter_seen: cfg.recommend.filter_seen,
        seed: cfg.seed,
    }
}

#[derive(Debug, Default)]
struct Progress {
    rows: Vec<UserRow>,
    lists: Vec<RecommendationList>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: MetricsReport,
    pub lists: Vec<RecommendationList>,
    pub train_report: Option<TrainReport>,
}

/// Recommends for every ground-truth user and scores the lists chunk by
/// chunk. Returns the recommendation wall time.
fn recommend_and_score(
    rec: &dyn Recommender,
    truth: &GroundTruth,
    k: usize,
    exec: Execution,
    progress: &mut Progress,
) -> Result<f64> {
    let mut seconds = 0.0;
    for users in truth.users().chunks(CHUNK) {
        let start = Instant::now();
        let lists = recommend_batch(rec, users, exec);
        seconds += start.elapsed().as_secs_f64();
        let rows = map_slice(exec, &lists, |l| {
            score_user(&l.user, Some(l), truth.relevant(&l.user).expect("ground-truth user"), k)
        });
        for row in rows {
            progress.rows.push(row?);
        }
        progress.lists.extend(lists);
    }
    Ok(seconds)
}

fn run_inner(cfg: &ExperimentConfig, progress: &mut Progress) -> Result<RunOutcome> {
    let data = load_dataset(&cfg.data)?;
    let truth = GroundTruth::from_dataset(&data);
    if truth.is_empty() {
        return Err(Error::Evaluation("no user has both train and test check-ins".into()));
    }
    let exec = Execution::from_workers(cfg.training.workers);

    let start = Instant::now();
    let mut fitted = Fitted::fit(cfg, &data)?;
    let train_s = start.elapsed().as_secs_f64();
    let train_report = match &mut fitted {
        Fitted::Embedding { report, .. } => report.take(),
        _ => None,
    };

    let runs = if cfg.method == Method::Random { cfg.random_runs } else { 1 };
    let mut rec_s = 0.0;
    for run in 0..runs {
        let seed = cfg.seed.wrapping_add(run as u64);
        let rec = fitted.recommender(cfg.method, cfg, seed)?;
        rec_s += recommend_and_score(rec.as_ref(), &truth, cfg.recommend.k, exec, progress)?;
    }
    rec_s /= runs as f64;

    let timings = Timings::new(train_s, rec_s, truth.len());
    let report = aggregate(std::mem::take(&mut progress.rows), timings, echo(cfg))?;
    Ok(RunOutcome {
        report,
        lists: std::mem::take(&mut progress.lists),
        train_report,
    })
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

pub fn write_outcome(dir: &Path, cfg: &ExperimentConfig, outcome: &RunOutcome) -> Result<()> {
    fs::create_dir_all(dir)?;
    let reports = std::slice::from_ref(&outcome.report);
    write_summary_csv(create(dir, "report.csv")?, reports)?;
    let mut json = create(dir, "report.json")?;
    write_summary_json(&mut json, reports)?;
    writeln!(json)?;
    write_user_csv(create(dir, "users.csv")?, &outcome.report.users)?;
    let mut recs = create(dir, "recommendations.tsv")?;
    write_batch(&mut recs, &outcome.lists)?;
    recs.flush()?;
    fs::write(dir.join("config.txt"), cfg.to_pairs_text())?;
    if let Some(t) = &outcome.train_report {
        write_loss_csv(create(dir, "loss.csv")?, &t.epochs)?;
    }
    for stale in [ERROR_MARKER, PARTIAL_USERS] {
        let p = dir.join(stale);
        if p.exists() {
            fs::remove_file(p)?;
        }
    }
    Ok(())
}

/// Runs one experiment. With `cfg.output` set, results go there; a failed run
/// leaves the per-user rows scored so far plus an `ERROR` marker instead.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let mut progress = Progress::default();
    let result = run_inner(cfg, &mut progress);
    if let Some(dir) = &cfg.output {
        match &result {
            Ok(outcome) => write_outcome(dir, cfg, outcome)?,
            Err(e) => {
                fs::create_dir_all(dir)?;
                write_user_csv(create(dir, PARTIAL_USERS)?, &progress.rows)?;
                fs::write(dir.join(ERROR_MARKER), format!("{e}\n"))?;
            }
        }
    }
    result
}
