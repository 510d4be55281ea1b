use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::recommend::{raw_id, Method, RecommendationList, Recommender, ScoredVenue};

/// `k` distinct venues drawn uniformly from `catalog`; if `k` exceeds the
/// catalog, the whole catalog in shuffled order. Scores are all zero.
pub fn recommend_random(catalog: &[String], k: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if k >= catalog.len() {
        let mut all = catalog.to_vec();
        all.shuffle(&mut rng);
        return all;
    }
    index::sample(&mut rng, catalog.len(), k)
        .into_iter()
        .map(|i| catalog[i].clone())
        .collect()
}

/// FNV-1a, used to derive a per-user stream from the run seed.
fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

pub struct RandomRecommender {
    catalog: Vec<String>,
    pub k: usize,
    pub seed: u64,
}

impl RandomRecommender {
    /// `catalog` holds venue tokens or raw ids; prefixes are stripped.
    pub fn new(catalog: &[String], k: usize, seed: u64) -> Self {
        RandomRecommender {
            catalog: catalog.iter().map(|t| raw_id(t).to_string()).collect(),
            k,
            seed,
        }
    }
}

impl Recommender for RandomRecommender {
    fn method(&self) -> Method {
        Method::Random
    }

    fn recommend(&self, user: &str) -> RecommendationList {
        let picks = recommend_random(&self.catalog, self.k, self.seed ^ fnv1a(user));
        RecommendationList::new(
            user,
            Method::Random,
            picks.into_iter().map(|venue| ScoredVenue { venue, score: 0.0 }).collect(),
        )
    }
}
