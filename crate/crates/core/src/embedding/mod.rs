//! Skip-gram / CBOW embeddings trained with negative sampling.

mod persist;
mod sampling;
mod sgns;
mod similarity;
mod train;

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Vocabulary;
use crate::{Error, Result};

pub use persist::{read_model, write_loss_csv, write_model, write_text_vectors};
pub use sampling::NegativeSamplingTable;
pub use sgns::{negative_sampling_gradient, pair_coefficient, SgnsGradient, DOT_CLAMP};
pub use similarity::{cosine, top_k_similar, Candidates};
pub use train::{context_window, train, EpochStats, TrainReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Architecture {
    SkipGram,
    Cbow,
}

impl Architecture {
    pub fn flag(self) -> u8 {
        match self {
            Architecture::SkipGram => 0,
            Architecture::Cbow => 1,
        }
    }

    pub fn from_flag(flag: u8) -> Option<Self> {
        match flag {
            0 => Some(Architecture::SkipGram),
            1 => Some(Architecture::Cbow),
            _ => None,
        }
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Architecture::SkipGram => "skip-gram",
            Architecture::Cbow => "cbow",
        })
    }
}

impl FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "skip-gram" | "skipgram" | "sg" => Ok(Architecture::SkipGram),
            "cbow" => Ok(Architecture::Cbow),
            other => Err(Error::Config(format!("unknown architecture `{other}`"))),
        }
    }
}

/// Context window radius.
///
/// `Max` uses the whole sentence as context for every position, which is how
/// CBOW is run on check-in data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Window {
    Fixed(usize),
    Max,
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Window::Fixed(c) => write!(f, "{c}"),
            Window::Max => f.write_str("max"),
        }
    }
}

impl FromStr for Window {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("max") {
            return Ok(Window::Max);
        }
        s.parse::<usize>()
            .map(Window::Fixed)
            .map_err(|_| Error::Config(format!("window must be an integer or `max`, got `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub architecture: Architecture,
    pub features: usize,
    pub window: Window,
    pub epochs: usize,
    pub negative_samples: usize,
    pub initial_learning_rate: f32,
    pub min_learning_rate: f32,
    /// Exponent applied to token frequencies in the noise distribution.
    pub noise_exponent: f64,
    pub seed: u64,
    pub workers: usize,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            architecture: Architecture::SkipGram,
            features: 100,
            window: Window::Fixed(20),
            epochs: 25,
            negative_samples: 5,
            initial_learning_rate: 0.025,
            min_learning_rate: 1e-4,
            noise_exponent: 0.75,
            seed: 1,
            workers: 1,
        }
    }
}

impl TrainingConfig {
    /// Default settings for `arch`; CBOW gets the sentence-length window.
    pub fn for_architecture(arch: Architecture) -> Self {
        let window = match arch {
            Architecture::SkipGram => Window::Fixed(20),
            Architecture::Cbow => Window::Max,
        };
        TrainingConfig {
            architecture: arch,
            window,
            ..TrainingConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let err = |m: &str| Err(Error::Config(m.to_string()));
        if self.features == 0 {
            return err("feature count must be at least 1");
        }
        if self.window == Window::Fixed(0) {
            return err("context window must be at least 1");
        }
        if self.epochs == 0 {
            return err("epoch count must be at least 1");
        }
        if self.negative_samples == 0 {
            return err("negative_samples must be at least 1");
        }
        if !(self.min_learning_rate > 0.0 && self.initial_learning_rate > self.min_learning_rate) {
            return err("learning rates must satisfy initial > min > 0");
        }
        if self.workers == 0 {
            return err("workers must be at least 1");
        }
        Ok(())
    }
}

/// Trained (or freshly initialised) token vectors.
#[derive(Debug, Clone)]
pub struct EmbeddingModel {
    pub vocab: Vocabulary,
    pub config: TrainingConfig,
    pub(crate) input: Vec<f32>,
    pub(crate) output: Vec<f32>,
    norms: OnceLock<Vec<f64>>,
}

impl EmbeddingModel {
    /// Assembles a model from raw row-major matrices.
    pub fn from_parts(
        vocab: Vocabulary,
        config: TrainingConfig,
        input: Vec<f32>,
        output: Vec<f32>,
    ) -> Result<Self> {
        let expected = vocab.len() * config.features;
        if input.len() != expected || output.len() != expected {
            return Err(Error::Format(format!(
                "matrix size mismatch: expected {expected} values, got {} / {}",
                input.len(),
                output.len()
            )));
        }
        Ok(EmbeddingModel {
            vocab,
            config,
            input,
            output,
            norms: OnceLock::new(),
        })
    }

    pub fn features(&self) -> usize {
        self.config.features
    }

    pub fn input_row(&self, index: usize) -> &[f32] {
        let f = self.config.features;
        &self.input[index * f..(index + 1) * f]
    }

    pub fn output_row(&self, index: usize) -> &[f32] {
        let f = self.config.features;
        &self.output[index * f..(index + 1) * f]
    }

    pub fn input_matrix(&self) -> &[f32] {
        &self.input
    }

    pub fn output_matrix(&self) -> &[f32] {
        &self.output
    }

    /// Euclidean norms of the input rows, computed once.
    pub fn input_norms(&self) -> &[f64] {
        self.norms.get_or_init(|| {
            self.input
                .chunks_exact(self.config.features)
                .map(similarity::norm)
                .collect()
        })
    }

    pub(crate) fn invalidate_norms(&mut self) {
        self.norms = OnceLock::new();
    }

    pub fn is_finite(&self) -> bool {
        self.input.iter().chain(&self.output).all(|x| x.is_finite())
    }
}

/// Input rows uniform in `[-0.5/F, 0.5/F]` from the seeded generator, output rows zero.
pub fn init_model(vocab: Vocabulary, config: TrainingConfig) -> Result<EmbeddingModel> {
    config.validate()?;
    if vocab.is_empty() {
        return Err(Error::EmptyVocabulary("cannot initialise an empty vocabulary".into()));
    }
    let f = config.features;
    let half = 0.5 / f as f32;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let input = (0..vocab.len() * f)
        .map(|_| rng.random_range(-half..half))
        .collect();
    let output = vec![0.0; vocab.len() * f];
    EmbeddingModel::from_parts(vocab, config, input, output)
}

/// Input vector of `token` (a prefixed `U:`/`V:` token).
pub fn get_vector<'m>(model: &'m EmbeddingModel, token: &str) -> Result<&'m [f32]> {
    model
        .vocab
        .index(token)
        .map(|i| model.input_row(i))
        .ok_or_else(|| Error::Lookup(token.to_string()))
}
