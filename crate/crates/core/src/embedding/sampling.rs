use rand::Rng;

use crate::corpus::Vocabulary;

/// Noise distribution over all tokens, proportional to `frequency^exponent`.
#[derive(Debug, Clone)]
pub struct NegativeSamplingTable {
    cumulative: Vec<f64>,
}

impl NegativeSamplingTable {
    pub fn new(vocab: &Vocabulary, exponent: f64) -> Self {
        Self::from_frequencies(vocab.frequencies(), exponent)
    }

    pub fn from_frequencies(freq: &[u64], exponent: f64) -> Self {
        let weights: Vec<f64> = freq.iter().map(|&f| (f as f64).powf(exponent)).collect();
        let total: f64 = weights.iter().sum();
        let mut acc = 0.0;
        let mut cumulative: Vec<f64> = weights
            .iter()
            .map(|w| {
                acc += w / total;
                acc
            })
            .collect();
        if let Some(last) = cumulative.last_mut() {
            *last = 1.0;
        }
        NegativeSamplingTable { cumulative }
    }

    pub fn len(&self) -> usize {
        self.cumulative.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cumulative.is_empty()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        let mut prev = 0.0;
        self.cumulative
            .iter()
            .map(|&c| {
                let p = c - prev;
                prev = c;
                p
            })
            .collect()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        self.cumulative
            .partition_point(|&c| c <= u)
            .min(self.cumulative.len() - 1)
    }

    /// Draws a token different from `positive`; `None` if no other token exists.
    pub fn sample_excluding<R: Rng + ?Sized>(&self, rng: &mut R, positive: usize) -> Option<usize> {
        if self.cumulative.len() < 2 {
            return None;
        }
        loop {
            let t = self.sample(rng);
            if t != positive {
                return Some(t);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn probabilities_sum_to_one() {
        let t = NegativeSamplingTable::from_frequencies(&[1, 5, 2, 100, 7, 3], 0.75);
        let s: f64 = t.probabilities().iter().sum();
        assert!((s - 1.0).abs() < 1e-9);
        let p = t.probabilities();
        let expect = 5f64.powf(0.75) / [1f64, 5., 2., 100., 7., 3.].iter().map(|f| f.powf(0.75)).sum::<f64>();
        assert!((p[1] - expect).abs() < 1e-12);
    }

    #[test]
    fn never_returns_positive() {
        let t = NegativeSamplingTable::from_frequencies(&[1000, 1], 0.75);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..2000 {
            assert_eq!(t.sample_excluding(&mut rng, 0), Some(1));
        }
        let single = NegativeSamplingTable::from_frequencies(&[4], 0.75);
        assert_eq!(single.sample_excluding(&mut rng, 0), None);
    }

    #[test]
    fn empirical_frequencies_follow_distribution() {
        let t = NegativeSamplingTable::from_frequencies(&[1, 16, 81], 0.75);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut counts = [0usize; 3];
        let n = 200_000;
        for _ in 0..n {
            counts[t.sample(&mut rng)] += 1;
        }
        for (c, p) in counts.iter().zip(t.probabilities()) {
            assert!((*c as f64 / n as f64 - p).abs() < 0.01);
        }
    }
}
