//! Latent-neighbour recommendation: neighbours by cosine over user factor
//! rows, venues by the same vote rule as NN.

use super::{cosine64, FactorModel};
use crate::corpus::Vocabulary;
use crate::interactions::InteractionMatrix;
use crate::recommend::vote::vote;
use crate::recommend::{
    raw_id, Method, NoPrediction, RecommendOptions, RecommendationList, Recommender, ScoredVenue,
};
use crate::topk::TopK;

pub struct LatentNeighborRecommender<'a> {
    pub factors: &'a FactorModel,
    pub matrix: &'a InteractionMatrix,
    pub method: Method,
    pub options: RecommendOptions,
}

impl LatentNeighborRecommender<'_> {
    fn recommend_row(&self, user: &str, row: usize) -> RecommendationList {
        let opts = &self.options;
        let target = self.factors.user_row(row);
        if target.iter().all(|&x| x == 0.0) {
            return RecommendationList::missing(user, self.method, NoPrediction::ZeroQuery);
        }
        let mut top = TopK::new(opts.neighbors);
        for other in 0..self.factors.users.len() {
            if other != row {
                let s = cosine64(target, self.factors.user_row(other)).unwrap_or(0.0);
                top.push(other, s);
            }
        }
        let neighbors: Vec<(usize, f64)> = top.into_sorted().into_iter().map(|s| (s.index, 1.0)).collect();
        let seen = self.matrix.row_cols(row);
        let voted = vote(
            self.matrix,
            &neighbors,
            opts.vote,
            |c| opts.filter_seen && seen.binary_search(&c).is_ok(),
            opts.k,
            opts.tie_break,
            row as u64,
        );
        RecommendationList::new(
            user,
            self.method,
            voted
                .into_iter()
                .map(|(c, score)| ScoredVenue {
                    venue: raw_id(self.matrix.venue_token(c)).to_string(),
                    score,
                })
                .collect(),
        )
    }
}

impl Recommender for LatentNeighborRecommender<'_> {
    fn method(&self) -> Method {
        self.method
    }

    fn recommend(&self, user: &str) -> RecommendationList {
        match self.matrix.user_row(&Vocabulary::user_token(user)) {
            Some(row) if row < self.factors.users.len() => self.recommend_row(user, row),
            _ => RecommendationList::missing(user, self.method, NoPrediction::UnknownUser),
        }
    }
}

pub fn recommend_latent_neighbors(
    factors: &FactorModel,
    matrix: &InteractionMatrix,
    user: &str,
    options: &RecommendOptions,
) -> RecommendationList {
    LatentNeighborRecommender {
        factors,
        matrix,
        method: Method::Svd,
        options: options.clone(),
    }
    .recommend(user)
}
