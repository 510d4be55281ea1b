//! Experiment configuration as flat `key = value` pairs.
//!
//! A config file and command-line overrides are both lists of pairs; later
//! pairs win, so flags given after the file replace its values.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::corpus::{FieldLayout, FixtureSpec, FEB_2011};
use crate::embedding::{Architecture, TrainingConfig, Window};
use crate::interactions::Weighting;
use crate::recommend::{Combination, Method, RecommendOptions, TieBreak};
use crate::{Error, Result};

/// Where check-ins come from.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    /// Synthetic community corpus.
    Fixture(FixtureSpec),
    /// One file split at `boundary`.
    File { path: PathBuf, layout: FieldLayout, boundary: u64 },
    /// Pre-split files.
    Split { train: PathBuf, test: PathBuf, layout: FieldLayout },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub data: DataSource,
    pub method: Method,
    pub training: TrainingConfig,
    pub recommend: RecommendOptions,
    pub min_word_count: u64,
    /// Latent rank for SVD and CCD++; defaults to the feature count.
    pub rank: usize,
    pub lambda: f64,
    pub ccd_iterations: usize,
    /// Random is averaged over this many seeds.
    pub random_runs: usize,
    pub seed: u64,
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig::from_pairs(std::iter::empty::<(String, String)>()).expect("defaults are valid")
    }
}

/// Every recognised key with a one-line description.
pub const KEYS: &[(&str, &str)] = &[
    ("method", "KNI, NN, KIU, CF, Random, SVD or CCD++"),
    ("arch", "skipgram or cbow"),
    ("features", "embedding size F"),
    ("window", "context size C, or `max`"),
    ("epochs", "training epochs E"),
    ("negatives", "negative samples per pair"),
    ("learning_rate", "initial learning rate"),
    ("min_learning_rate", "final learning rate"),
    ("min_count", "minimum token frequency"),
    ("neighbors", "neighbour count N"),
    ("topk", "list length k"),
    ("filter_seen", "drop venues the user already visited"),
    ("vote", "neighbour vote: counts or binary"),
    ("combination", "KIU query: mean or weighted"),
    ("tie_break", "deterministic, or seeded"),
    ("rank", "latent rank for SVD and CCD++"),
    ("lambda", "CCD++ regularisation"),
    ("ccd_iterations", "CCD++ outer iterations"),
    ("random_runs", "seeds averaged for Random"),
    ("seed", "master seed"),
    ("workers", "threads; 1 is deterministic"),
    ("data", "check-in file split at `boundary`"),
    ("train", "pre-split training file"),
    ("test", "pre-split test file"),
    ("boundary", "split timestamp (unix seconds)"),
    ("layout", "column order, e.g. user,venue,timestamp"),
    ("delimiter", "field delimiter: tab, comma, space or one character"),
    ("output", "output directory"),
    ("fixture.seed", "fixture generator seed"),
    ("fixture.communities", "fixture communities"),
    ("fixture.users", "users per community"),
    ("fixture.venues", "venues per community"),
    ("fixture.noise", "cross-community visit rate"),
    ("fixture.train", "training check-ins per user"),
    ("fixture.test", "test check-ins per user"),
    ("fixture.skew", "Zipf exponent of venue popularity"),
    ("fixture.locality", "taste kernel width around each user's home venue"),
];

/// Reads `key = value` lines; blank lines and `#` comments are skipped.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key=value, got `{line}`", n + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

pub fn read_pairs(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
    parse_pairs(&text)
}

fn value<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("invalid value `{v}` for `{key}`")))
}

fn boolean(key: &str, v: &str) -> Result<bool> {
    match v.to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        _ => Err(Error::Config(format!("invalid boolean `{v}` for `{key}`"))),
    }
}

fn delimiter(v: &str) -> Result<char> {
    match v {
        "tab" | "\\t" => Ok('\t'),
        "comma" => Ok(','),
        "space" => Ok(' '),
        s if s.chars().count() == 1 => Ok(s.chars().next().unwrap()),
        _ => Err(Error::Config(format!("invalid delimiter `{v}`"))),
    }
}

impl ExperimentConfig {
    /// Builds a validated config; unknown keys are rejected.
    pub fn from_pairs<K, V>(pairs: impl IntoIterator<Item = (K, V)>) -> Result<Self>
    where
        K: Into<String>,
        V: Into<String>,
    {
        let mut map: BTreeMap<String, String> = BTreeMap::new();
        for (k, v) in pairs {
            let k: String = k.into();
            let k = k.replace('-', "_");
            if !KEYS.iter().any(|(name, _)| *name == k) {
                return Err(Error::Config(format!("unknown key `{k}`")));
            }
            map.insert(k, v.into());
        }
        let get = |k: &str| map.get(k).map(String::as_str);

        let arch: Architecture = get("arch").map(|v| value("arch", v)).transpose()?.unwrap_or(Architecture::SkipGram);
        let mut training = TrainingConfig::for_architecture(arch);
        if let Some(v) = get("features") {
            training.features = value("features", v)?;
        }
        if let Some(v) = get("window") {
            training.window = value::<Window>("window", v)?;
        }
        if let Some(v) = get("epochs") {
            training.epochs = value("epochs", v)?;
        }
        if let Some(v) = get("negatives") {
            training.negative_samples = value("negatives", v)?;
        }
        if let Some(v) = get("learning_rate") {
            training.initial_learning_rate = value("learning_rate", v)?;
        }
        if let Some(v) = get("min_learning_rate") {
            training.min_learning_rate = value("min_learning_rate", v)?;
        }
        if let Some(v) = get("workers") {
            training.workers = value("workers", v)?;
        }
        let seed: u64 = get("seed").map(|v| value("seed", v)).transpose()?.unwrap_or(1);
        training.seed = seed;

        let mut recommend = RecommendOptions::default();
        if let Some(v) = get("neighbors") {
            recommend.neighbors = value("neighbors", v)?;
        }
        if let Some(v) = get("topk") {
            recommend.k = value("topk", v)?;
        }
        if let Some(v) = get("filter_seen") {
            recommend.filter_seen = boolean("filter_seen", v)?;
        }
        if let Some(v) = get("vote") {
            recommend.vote = match v.to_ascii_lowercase().as_str() {
                "counts" | "count" => Weighting::Counts,
                "binary" => Weighting::Binary,
                _ => return Err(Error::Config(format!("invalid vote `{v}`"))),
            };
        }
        if let Some(v) = get("combination") {
            recommend.combination = match v.to_ascii_lowercase().as_str() {
                "mean" => Combination::Mean,
                "weighted" | "similarity" => Combination::SimilarityWeighted,
                _ => return Err(Error::Config(format!("invalid combination `{v}`"))),
            };
        }
        if let Some(v) = get("tie_break") {
            recommend.tie_break = match v.to_ascii_lowercase().as_str() {
                "deterministic" | "index" => TieBreak::Deterministic,
                "seeded" | "random" => TieBreak::Seeded(seed),
                _ => return Err(Error::Config(format!("invalid tie_break `{v}`"))),
            };
        }

        let layout = {
            let mut l: FieldLayout = get("layout").map(|v| value("layout", v)).transpose()?.unwrap_or_default();
            if let Some(d) = get("delimiter") {
                l = l.with_delimiter(delimiter(d)?);
            }
            l
        };
        let data = match (get("data"), get("train"), get("test")) {
            (Some(path), None, None) => DataSource::File {
                path: path.into(),
                layout,
                boundary: get("boundary").map(|v| value("boundary", v)).transpose()?.unwrap_or(FEB_2011),
            },
            (None, Some(train), Some(test)) => DataSource::Split {
                train: train.into(),
                test: test.into(),
                layout,
            },
            (None, None, None) => {
                let mut spec = FixtureSpec::default();
                let fx = |k: &str| get(k);
                if let Some(v) = fx("fixture.seed") {
                    spec.seed = value("fixture.seed", v)?;
                }
                if let Some(v) = fx("fixture.communities") {
                    spec.communities = value("fixture.communities", v)?;
                }
                if let Some(v) = fx("fixture.users") {
                    spec.users_per_community = value("fixture.users", v)?;
                }
                if let Some(v) = fx("fixture.venues") {
                    spec.venues_per_community = value("fixture.venues", v)?;
                }
                if let Some(v) = fx("fixture.noise") {
                    spec.noise_rate = value("fixture.noise", v)?;
                }
                if let Some(v) = fx("fixture.train") {
                    spec.train_per_user = value("fixture.train", v)?;
                }
                if let Some(v) = fx("fixture.test") {
                    spec.test_per_user = value("fixture.test", v)?;
                }
                if let Some(v) = fx("fixture.skew") {
                    spec.popularity_skew = value("fixture.skew", v)?;
                }
                if let Some(v) = fx("fixture.locality") {
                    spec.locality = value("fixture.locality", v)?;
                }
                DataSource::Fixture(spec)
            }
            _ => {
                return Err(Error::Config(
                    "give either `data`, or both `train` and `test`, or neither for the fixture".into(),
                ))
            }
        };

        let cfg = ExperimentConfig {
            data,
            method: get("method").map(|v| value::<Method>("method", v)).transpose()?.unwrap_or(Method::Kni),
            rank: get("rank").map(|v| value("rank", v)).transpose()?.unwrap_or(training.features),
            training,
            recommend,
            min_word_count: get("min_count").map(|v| value("min_count", v)).transpose()?.unwrap_or(1),
            lambda: get("lambda").map(|v| value("lambda", v)).transpose()?.unwrap_or(0.1),
            ccd_iterations: get("ccd_iterations").map(|v| value("ccd_iterations", v)).transpose()?.unwrap_or(15),
            random_runs: get("random_runs").map(|v| value("random_runs", v)).transpose()?.unwrap_or(10),
            seed,
            output: get("output").map(PathBuf::from),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.training.validate()?;
        self.recommend.validate()?;
        if let DataSource::Fixture(spec) = &self.data {
            spec.validate()?;
        }
        if self.min_word_count == 0 {
            return Err(Error::Config("min_count must be at least 1".into()));
        }
        if self.rank == 0 {
            return Err(Error::Config("rank must be at least 1".into()));
        }
        if !(self.lambda > 0.0) {
            return Err(Error::Config("lambda must be positive".into()));
        }
        if self.ccd_iterations == 0 || self.random_runs == 0 {
            return Err(Error::Config("ccd_iterations and random_runs must be at least 1".into()));
        }
        Ok(())
    }

    /// The config as `key = value` lines that parse back to an equal config.
    pub fn to_pairs_text(&self) -> String {
        let t = &self.training;
        let r = &self.recommend;
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("method", self.method.to_string());
        put("arch", t.architecture.to_string());
        put("features", t.features.to_string());
        put("window", t.window.to_string());
        put("epochs", t.epochs.to_string());
        put("negatives", t.negative_samples.to_string());
        put("learning_rate", t.initial_learning_rate.to_string());
        put("min_learning_rate", t.min_learning_rate.to_string());
        put("min_count", self.min_word_count.to_string());
        put("neighbors", r.neighbors.to_string());
        put("topk", r.k.to_string());
        put("filter_seen", r.filter_seen.to_string());
        put("vote", match r.vote {
            Weighting::Counts => "counts",
            Weighting::Binary => "binary",
        }.into());
        put("combination", match r.combination {
            Combination::Mean => "mean",
            Combination::SimilarityWeighted => "weighted",
        }.into());
        put("tie_break", match r.tie_break {
            TieBreak::Deterministic => "deterministic",
            TieBreak::Seeded(_) => "seeded",
        }.into());
        put("rank", self.rank.to_string());
        put("lambda", self.lambda.to_string());
        put("ccd_iterations", self.ccd_iterations.to_string());
        put("random_runs", self.random_runs.to_string());
        put("seed", self.seed.to_string());
        put("workers", t.workers.to_string());
        match &self.data {
            DataSource::Fixture(f) => {
                put("fixture.seed", f.seed.to_string());
                put("fixture.communities", f.communities.to_string());
                put("fixture.users", f.users_per_community.to_string());
                put("fixture.venues", f.venues_per_community.to_string());
                put("fixture.noise", f.noise_rate.to_string());
                put("fixture.train", f.train_per_user.to_string());
                put("fixture.test", f.test_per_user.to_string());
                put("fixture.skew", f.popularity_skew.to_string());
                put("fixture.locality", f.locality.to_string());
            }
            DataSource::File { path, layout, boundary } => {
                put("data", path.display().to_string());
                put("layout", layout.to_string());
                put("delimiter", delimiter_name(layout.delimiter));
                put("boundary", boundary.to_string());
            }
            DataSource::Split { train, test, layout } => {
                put("train", train.display().to_string());
                put("test", test.display().to_string());
                put("layout", layout.to_string());
                put("delimiter", delimiter_name(layout.delimiter));
            }
        }
        if let Some(o) = &self.output {
            put("output", o.display().to_string());
        }
        s
    }
}

fn delimiter_name(c: char) -> String {
    match c {
        '\t' => "tab".into(),
        ',' => "comma".into(),
        ' ' => "space".into(),
        c => c.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_the_reference_settings() {
        let c = ExperimentConfig::default();
        assert_eq!(c.method, Method::Kni);
        assert_eq!(c.training.features, 100);
        assert_eq!(c.training.epochs, 25);
        assert_eq!(c.training.window, Window::Fixed(20));
        assert_eq!((c.recommend.neighbors, c.recommend.k), (30, 10));
        assert_eq!(c.rank, 100);
        assert!(matches!(c.data, DataSource::Fixture(_)));
    }

    #[test]
    fn cbow_defaults_to_max_window_unless_given() {
        let c = ExperimentConfig::from_pairs([("arch", "cbow")]).unwrap();
        assert_eq!(c.training.window, Window::Max);
        let c = ExperimentConfig::from_pairs([("arch", "cbow"), ("window", "5")]).unwrap();
        assert_eq!(c.training.window, Window::Fixed(5));
    }

    #[test]
    fn later_pairs_win() {
        let mut pairs = parse_pairs("# base\nfeatures = 50\n\ntopk=5\n").unwrap();
        pairs.push(("features".into(), "20".into()));
        let c = ExperimentConfig::from_pairs(pairs).unwrap();
        assert_eq!(c.training.features, 20);
        assert_eq!(c.rank, 20);
        assert_eq!(c.recommend.k, 5);
    }

    #[test]
    fn bad_input_is_a_config_error() {
        for pairs in [
            vec![("bogus", "1")],
            vec![("features", "ten")],
            vec![("topk", "0")],
            vec![("method", "magic")],
            vec![("data", "a"), ("train", "b")],
            vec![("filter_seen", "maybe")],
            vec![("fixture.noise", "2")],
        ] {
            let e = ExperimentConfig::from_pairs(pairs.clone()).unwrap_err();
            assert!(e.is_config(), "{pairs:?}: {e}");
        }
        assert!(parse_pairs("no equals sign").unwrap_err().is_config());
    }

    #[test]
    fn text_round_trip() {
        let c = ExperimentConfig::from_pairs([
            ("method", "ccd++"),
            ("arch", "cbow"),
            ("data", "/tmp/x.tsv"),
            ("delimiter", "comma"),
            ("layout", "user,_,venue,timestamp"),
            ("tie_break", "seeded"),
            ("seed", "9"),
            ("output", "/tmp/out"),
        ])
        .unwrap();
        let back = ExperimentConfig::from_pairs(parse_pairs(&c.to_pairs_text()).unwrap()).unwrap();
        assert_eq!(back, c);
        let d = ExperimentConfig::default();
        assert_eq!(ExperimentConfig::from_pairs(parse_pairs(&d.to_pairs_text()).unwrap()).unwrap(), d);
    }

    #[test]
    fn dashes_are_accepted_in_keys() {
        let c = ExperimentConfig::from_pairs([("filter-seen", "true")]).unwrap();
        assert!(c.recommend.filter_seen);
    }
}
