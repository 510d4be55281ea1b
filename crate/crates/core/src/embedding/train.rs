//! SGD over sentences for both architectures.
//!
//! With `workers == 1` training is single-threaded and bit-reproducible. With
//! more workers the sentences are partitioned and every worker updates the
//! shared matrices without locks (Hogwild). Those updates go through relaxed
//! atomics so they are racy but not undefined behaviour; results then depend
//! on scheduling.

use std::ops::RangeInclusive;
use std::sync::atomic::{AtomicU32, AtomicU64, Ordering};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::sampling::NegativeSamplingTable;
use super::sgns::pair_coefficient;
use super::{Architecture, EmbeddingModel, TrainingConfig, Window};
use crate::corpus::Sentence;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub average_loss: f64,
    pub learning_rate_end: f32,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainReport {
    pub epochs: Vec<EpochStats>,
    /// Positive (center, context) examples seen over all epochs.
    pub examples: u64,
    /// Largest in-sentence distance between a center and one of its contexts.
    pub max_pair_distance: usize,
    pub seconds: f64,
}

/// Positions within `radius` of `center` in a sentence of length `len`,
/// excluding `center` itself.
pub fn context_window(len: usize, center: usize, radius: usize) -> impl Iterator<Item = usize> {
    let lo = center.saturating_sub(radius);
    let hi = (center + radius).min(len.saturating_sub(1));
    let range: RangeInclusive<usize> = lo..=hi;
    range.filter(move |&j| j != center)
}

trait Rows {
    fn dot(&self, row: usize, v: &[f32]) -> f32;
    fn add_scaled(&mut self, row: usize, a: f32, v: &[f32]);
    /// `acc += a * row`
    fn accumulate(&self, row: usize, a: f32, acc: &mut [f32]);
    fn copy_row(&self, row: usize, out: &mut [f32]);
}

struct Plain<'a> {
    data: &'a mut [f32],
    f: usize,
}

impl Rows for Plain<'_> {
    #[inline]
    fn dot(&self, row: usize, v: &[f32]) -> f32 {
        let r = &self.data[row * self.f..(row + 1) * self.f];
        r.iter().zip(v).map(|(a, b)| a * b).sum()
    }

    #[inline]
    fn add_scaled(&mut self, row: usize, a: f32, v: &[f32]) {
        let r = &mut self.data[row * self.f..(row + 1) * self.f];
        for (x, y) in r.iter_mut().zip(v) {
            *x += a * y;
        }
    }

    #[inline]
    fn accumulate(&self, row: usize, a: f32, acc: &mut [f32]) {
        let r = &self.data[row * self.f..(row + 1) * self.f];
        for (x, y) in acc.iter_mut().zip(r) {
            *x += a * y;
        }
    }

    #[inline]
    fn copy_row(&self, row: usize, out: &mut [f32]) {
        out.copy_from_slice(&self.data[row * self.f..(row + 1) * self.f]);
    }
}

#[derive(Clone, Copy)]
struct Shared<'a> {
    data: &'a [AtomicU32],
    f: usize,
}

impl<'a> Shared<'a> {
    fn new(data: &'a mut [f32], f: usize) -> Self {
        // SAFETY: AtomicU32 has the same size and alignment as f32, and the
        // exclusive borrow guarantees no non-atomic access while `Shared` lives.
        let data = unsafe { &*(data as *mut [f32] as *const [AtomicU32]) };
        Shared { data, f }
    }

    #[inline]
    fn load(&self, i: usize) -> f32 {
        f32::from_bits(self.data[i].load(Ordering::Relaxed))
    }
}

impl Rows for Shared<'_> {
    #[inline]
    fn dot(&self, row: usize, v: &[f32]) -> f32 {
        let base = row * self.f;
        v.iter().enumerate().map(|(k, b)| self.load(base + k) * b).sum()
    }

    #[inline]
    fn add_scaled(&mut self, row: usize, a: f32, v: &[f32]) {
        let base = row * self.f;
        for (k, y) in v.iter().enumerate() {
            let x = self.load(base + k) + a * y;
            self.data[base + k].store(x.to_bits(), Ordering::Relaxed);
        }
    }

    #[inline]
    fn accumulate(&self, row: usize, a: f32, acc: &mut [f32]) {
        let base = row * self.f;
        for (k, x) in acc.iter_mut().enumerate() {
            *x += a * self.load(base + k);
        }
    }

    #[inline]
    fn copy_row(&self, row: usize, out: &mut [f32]) {
        let base = row * self.f;
        for (k, x) in out.iter_mut().enumerate() {
            *x = self.load(base + k);
        }
    }
}

struct Schedule<'a> {
    initial: f32,
    min: f32,
    total: f64,
    processed: &'a AtomicU64,
}

impl Schedule<'_> {
    fn rate(&self) -> f32 {
        let done = self.processed.load(Ordering::Relaxed) as f64;
        let frac = (done / self.total).min(1.0) as f32;
        (self.initial - (self.initial - self.min) * frac).max(self.min)
    }
}

#[derive(Default)]
struct WorkerStats {
    loss: f64,
    examples: u64,
    max_distance: usize,
}

struct Worker<'t, I: Rows, O: Rows> {
    input: I,
    output: O,
    table: &'t NegativeSamplingTable,
    config: &'t TrainingConfig,
    rng: ChaCha8Rng,
    hidden: Vec<f32>,
    err: Vec<f32>,
    stats: WorkerStats,
}

impl<I: Rows, O: Rows> Worker<'_, I, O> {
    /// Positive target plus negatives against `self.hidden`; the input-side
    /// gradient (scaled by -lr) is left in `self.err`.
    fn contrast(&mut self, target: usize, lr: f32) {
        self.err.iter_mut().for_each(|x| *x = 0.0);
        let d = self.output.dot(target, &self.hidden);
        let (g, mut loss) = pair_coefficient(d, true);
        let step = -lr * g;
        self.output.accumulate(target, step, &mut self.err);
        self.output.add_scaled(target, step, &self.hidden);
        for _ in 0..self.config.negative_samples {
            let Some(neg) = self.table.sample_excluding(&mut self.rng, target) else {
                break;
            };
            let d = self.output.dot(neg, &self.hidden);
            let (g, l) = pair_coefficient(d, false);
            loss += l;
            let step = -lr * g;
            self.output.accumulate(neg, step, &mut self.err);
            self.output.add_scaled(neg, step, &self.hidden);
        }
        self.stats.loss += loss as f64;
        self.stats.examples += 1;
    }

    fn radius(&mut self, len: usize) -> usize {
        match self.config.window {
            Window::Fixed(c) => self.rng.random_range(1..=c),
            Window::Max => len,
        }
    }

    fn sentence(&mut self, sentence: &Sentence, schedule: &Schedule<'_>) {
        let toks = &sentence.tokens;
        let len = toks.len();
        for i in 0..len {
            let lr = schedule.rate();
            let radius = self.radius(len);
            match self.config.architecture {
                Architecture::SkipGram => {
                    for j in context_window(len, i, radius) {
                        self.stats.max_distance = self.stats.max_distance.max(i.abs_diff(j));
                        self.input.copy_row(toks[i], &mut self.hidden);
                        self.contrast(toks[j], lr);
                        self.input.add_scaled(toks[i], 1.0, &self.err);
                    }
                }
                Architecture::Cbow => {
                    self.hidden.iter_mut().for_each(|x| *x = 0.0);
                    let mut n = 0usize;
                    for j in context_window(len, i, radius) {
                        self.stats.max_distance = self.stats.max_distance.max(i.abs_diff(j));
                        self.input.accumulate(toks[j], 1.0, &mut self.hidden);
                        n += 1;
                    }
                    if n > 0 {
                        let inv = 1.0 / n as f32;
                        self.hidden.iter_mut().for_each(|x| *x *= inv);
                        self.contrast(toks[i], lr);
                        // Every context row receives the full hidden-layer
                        // error, as in the reference word2vec CBOW.
                        for j in context_window(len, i, radius) {
                            self.input.add_scaled(toks[j], 1.0, &self.err);
                        }
                    }
                }
            }
            schedule.processed.fetch_add(1, Ordering::Relaxed);
        }
    }
}

fn worker<'t, I: Rows, O: Rows>(
    input: I,
    output: O,
    table: &'t NegativeSamplingTable,
    config: &'t TrainingConfig,
    rng: ChaCha8Rng,
) -> Worker<'t, I, O> {
    Worker {
        input,
        output,
        table,
        config,
        rng,
        hidden: vec![0.0; config.features],
        err: vec![0.0; config.features],
        stats: WorkerStats::default(),
    }
}

fn worker_rng(seed: u64, worker: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(worker as u64 + 1);
    rng
}

/// Trains `model` in place for `config.epochs` passes over `sentences`.
///
/// The learning rate decays linearly from `initial_learning_rate` to
/// `min_learning_rate` over all center positions of all epochs. The report
/// carries the mean loss per positive example for every epoch.
pub fn train(model: &mut EmbeddingModel, sentences: &[Sentence]) -> Result<TrainReport> {
    model.config.validate()?;
    if sentences.is_empty() {
        return Err(Error::Training("no sentences to train on".into()));
    }
    let n = model.vocab.len();
    if let Some(bad) = sentences.iter().flat_map(|s| &s.tokens).find(|&&t| t >= n) {
        return Err(Error::Training(format!("token index {bad} outside vocabulary of {n}")));
    }

    let config = model.config.clone();
    let f = config.features;
    let table = NegativeSamplingTable::new(&model.vocab, config.noise_exponent);
    let total_tokens: usize = sentences.iter().map(Sentence::len).sum();
    let processed = AtomicU64::new(0);
    let schedule = Schedule {
        initial: config.initial_learning_rate,
        min: config.min_learning_rate,
        total: (total_tokens * config.epochs) as f64,
        processed: &processed,
    };
    let workers = config.workers.min(sentences.len()).max(1);
    let mut rngs: Vec<ChaCha8Rng> = (0..workers).map(|w| worker_rng(config.seed, w)).collect();

    let started = Instant::now();
    let mut report = TrainReport::default();
    let (input, output) = (&mut model.input, &mut model.output);
    for epoch in 1..=config.epochs {
        let t0 = Instant::now();
        let mut stats = Vec::with_capacity(workers);
        if workers == 1 {
            let mut w = worker(
                Plain { data: input, f },
                Plain { data: output, f },
                &table,
                &config,
                rngs[0].clone(),
            );
            for s in sentences {
                w.sentence(s, &schedule);
            }
            rngs[0] = w.rng;
            stats.push(w.stats);
        } else {
            let shared_in = Shared::new(input, f);
            let shared_out = Shared::new(output, f);
            let chunk = sentences.len().div_ceil(workers);
            let results: Vec<(ChaCha8Rng, WorkerStats)> = std::thread::scope(|scope| {
                let handles: Vec<_> = sentences
                    .chunks(chunk)
                    .zip(rngs.iter().cloned())
                    .map(|(part, rng)| {
                        let (table, config, schedule) = (&table, &config, &schedule);
                        scope.spawn(move || {
                            let mut w = worker(shared_in, shared_out, table, config, rng);
                            for s in part {
                                w.sentence(s, schedule);
                            }
                            (w.rng, w.stats)
                        })
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("training worker panicked"))
                    .collect()
            });
            for (slot, (rng, st)) in rngs.iter_mut().zip(results) {
                *slot = rng;
                stats.push(st);
            }
        }

        let loss: f64 = stats.iter().map(|s| s.loss).sum();
        let examples: u64 = stats.iter().map(|s| s.examples).sum();
        report.examples += examples;
        report.max_pair_distance = stats
            .iter()
            .map(|s| s.max_distance)
            .fold(report.max_pair_distance, usize::max);
        report.epochs.push(EpochStats {
            epoch,
            average_loss: if examples > 0 { loss / examples as f64 } else { 0.0 },
            learning_rate_end: schedule.rate(),
            seconds: t0.elapsed().as_secs_f64(),
        });
    }
    report.seconds = started.elapsed().as_secs_f64();
    model.invalidate_norms();
    if !model.is_finite() {
        return Err(Error::Training("non-finite weights after training".into()));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_sentences, build_vocabulary, CheckinRecord};
    use crate::embedding::init_model;

    #[test]
    fn window_positions() {
        assert_eq!(context_window(5, 0, 1).collect::<Vec<_>>(), vec![1]);
        assert_eq!(context_window(5, 2, 1).collect::<Vec<_>>(), vec![1, 3]);
        assert_eq!(context_window(5, 2, 10).collect::<Vec<_>>(), vec![0, 1, 3, 4]);
        assert_eq!(context_window(1, 0, 3).count(), 0);
    }

    fn corpus() -> (crate::corpus::Vocabulary, Vec<Sentence>) {
        let mut recs = Vec::new();
        for u in 0..6 {
            for t in 0..8 {
                recs.push(CheckinRecord::new(format!("u{u}"), format!("v{}", (u * 3 + t) % 11), t));
            }
        }
        let vocab = build_vocabulary(&recs, 1).unwrap();
        let s = build_sentences(&recs, &vocab).sentences;
        (vocab, s)
    }

    #[test]
    fn window_one_never_pairs_distant_tokens() {
        let (vocab, s) = corpus();
        let cfg = TrainingConfig {
            features: 8,
            window: Window::Fixed(1),
            epochs: 3,
            ..TrainingConfig::default()
        };
        let mut m = init_model(vocab, cfg).unwrap();
        let r = train(&mut m, &s).unwrap();
        assert_eq!(r.max_pair_distance, 1);
        // 6 sentences of 9 tokens: 2 ends with one neighbour + 7 inner with two.
        assert_eq!(r.examples, 3 * 6 * (2 + 7 * 2));
    }

    #[test]
    fn empty_sentences_rejected() {
        let (vocab, _) = corpus();
        let mut m = init_model(vocab, TrainingConfig::default()).unwrap();
        assert!(matches!(train(&mut m, &[]), Err(Error::Training(_))));
    }

    #[test]
    fn learning_rate_reaches_floor() {
        let (vocab, s) = corpus();
        let cfg = TrainingConfig {
            features: 4,
            epochs: 4,
            ..TrainingConfig::default()
        };
        let mut m = init_model(vocab, cfg).unwrap();
        let r = train(&mut m, &s).unwrap();
        assert_eq!(r.epochs.len(), 4);
        let last = r.epochs.last().unwrap().learning_rate_end;
        assert!((last - 1e-4).abs() < 1e-7, "{last}");
        let rates: Vec<f32> = r.epochs.iter().map(|e| e.learning_rate_end).collect();
        assert!(rates.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn cbow_max_window_spans_sentence() {
        let (vocab, s) = corpus();
        let cfg = TrainingConfig {
            architecture: Architecture::Cbow,
            features: 8,
            window: Window::Max,
            epochs: 2,
            ..TrainingConfig::default()
        };
        let mut m = init_model(vocab, cfg).unwrap();
        let r = train(&mut m, &s).unwrap();
        assert_eq!(r.max_pair_distance, 8);
        assert_eq!(r.examples, 2 * 6 * 9);
        assert!(m.is_finite());
    }

    #[test]
    fn hogwild_workers_produce_finite_model() {
        let (vocab, s) = corpus();
        let cfg = TrainingConfig {
            features: 8,
            epochs: 5,
            workers: 3,
            ..TrainingConfig::default()
        };
        let mut m = init_model(vocab, cfg).unwrap();
        let r = train(&mut m, &s).unwrap();
        assert!(m.is_finite());
        assert_eq!(r.epochs.len(), 5);
    }
}
