use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::TieBreak;
use crate::interactions::{InteractionMatrix, Weighting};
use crate::topk::top_k;

/// Sums `weight × entry` over the neighbours' rows (entry read as 1 under
/// binary weighting) and returns the best `k` venue columns with a positive
/// score.
///
/// `salt` decorrelates the seeded tie-break between target users.
pub(crate) fn vote(
    matrix: &InteractionMatrix,
    neighbors: &[(usize, f64)],
    weighting: Weighting,
    exclude: impl Fn(usize) -> bool,
    k: usize,
    tie_break: TieBreak,
    salt: u64,
) -> Vec<(usize, f64)> {
    let mut scores: HashMap<usize, f64> = HashMap::new();
    for &(row, weight) in neighbors {
        for (col, x) in matrix.row(row) {
            if !exclude(col) {
                let x = match weighting {
                    Weighting::Counts => x,
                    Weighting::Binary => 1.0,
                };
                *scores.entry(col).or_insert(0.0) += weight * x;
            }
        }
    }
    let mut cands: Vec<(usize, f64)> = scores.into_iter().filter(|&(_, s)| s > 0.0).collect();
    match tie_break {
        TieBreak::Deterministic => top_k(cands, k).into_iter().map(|s| (s.index, s.score)).collect(),
        TieBreak::Seeded(seed) => {
            cands.sort_by_key(|&(c, _)| c);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(salt);
            cands.shuffle(&mut rng);
            cands.sort_by(|a, b| b.1.total_cmp(&a.1));
            cands.truncate(k);
            cands
        }
    }
}
