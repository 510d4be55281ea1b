//! KNI, NN and KIU on top of a trained embedding.

use std::collections::HashSet;

use super::vote::vote;
use super::{
    raw_id, Combination, Method, NoPrediction, RecommendOptions, RecommendationList,
    RecommendationRequest, Recommender, ScoredVenue,
};
use crate::corpus::Vocabulary;
use crate::embedding::{top_k_similar, Candidates, EmbeddingModel};
use crate::interactions::InteractionMatrix;
use crate::Error;

struct Target<'a> {
    index: usize,
    vector: &'a [f32],
    row: Option<usize>,
}

fn target<'a>(model: &'a EmbeddingModel, interactions: &InteractionMatrix, user: &str) -> Option<Target<'a>> {
    let token = Vocabulary::user_token(user);
    let index = model.vocab.index(&token)?;
    Some(Target {
        index,
        vector: model.input_row(index),
        row: interactions.user_row(&token),
    })
}

/// Vocabulary indices of the venues the target visited in training.
fn seen_venues(model: &EmbeddingModel, interactions: &InteractionMatrix, t: &Target<'_>) -> HashSet<usize> {
    t.row
        .map(|row| {
            interactions
                .row_cols(row)
                .iter()
                .filter_map(|&c| model.vocab.index(interactions.venue_token(c)))
                .collect()
        })
        .unwrap_or_default()
}

/// Top-N users by cosine over user vectors, excluding the target.
fn nearest_users(model: &EmbeddingModel, t: &Target<'_>, n: usize) -> Result<Vec<(usize, f64)>, Error> {
    top_k_similar(model, t.vector, Candidates::Users, n, |i| i != t.index)
}

fn ranked_by_query(
    model: &EmbeddingModel,
    query: &[f32],
    user: &str,
    method: Method,
    options: &RecommendOptions,
    seen: &HashSet<usize>,
) -> RecommendationList {
    match top_k_similar(model, query, Candidates::Venues, options.k, |i| !seen.contains(&i)) {
        Ok(hits) => RecommendationList::new(
            user,
            method,
            hits.into_iter()
                .map(|(i, score)| ScoredVenue {
                    venue: raw_id(model.vocab.token(i)).to_string(),
                    score,
                })
                .collect(),
        ),
        Err(_) => RecommendationList::missing(user, method, NoPrediction::ZeroQuery),
    }
}

fn empty_seen() -> HashSet<usize> {
    HashSet::new()
}

/// k nearest venues to the user vector.
pub fn recommend_kni(
    model: &EmbeddingModel,
    interactions: &InteractionMatrix,
    request: &RecommendationRequest,
) -> RecommendationList {
    let opts = &request.options;
    let Some(t) = target(model, interactions, &request.user) else {
        return RecommendationList::missing(&request.user, Method::Kni, NoPrediction::UnknownUser);
    };
    let seen = if opts.filter_seen {
        seen_venues(model, interactions, &t)
    } else {
        empty_seen()
    };
    ranked_by_query(model, t.vector, &request.user, Method::Kni, opts, &seen)
}

/// Venues voted for by the N nearest users, weighted by their visit counts
/// (or 1 per visited venue with binary voting).
pub fn recommend_nn(
    model: &EmbeddingModel,
    interactions: &InteractionMatrix,
    request: &RecommendationRequest,
) -> RecommendationList {
    let opts = &request.options;
    let Some(t) = target(model, interactions, &request.user) else {
        return RecommendationList::missing(&request.user, Method::Nn, NoPrediction::UnknownUser);
    };
    let neighbors = match nearest_users(model, &t, opts.neighbors) {
        Ok(n) => n,
        Err(_) => return RecommendationList::missing(&request.user, Method::Nn, NoPrediction::ZeroQuery),
    };
    let rows: Vec<(usize, f64)> = neighbors
        .iter()
        .filter_map(|&(i, _)| interactions.user_row(model.vocab.token(i)).map(|r| (r, 1.0)))
        .collect();
    let seen: HashSet<usize> = match (opts.filter_seen, t.row) {
        (true, Some(r)) => interactions.row_cols(r).iter().copied().collect(),
        _ => HashSet::new(),
    };
    let voted = vote(
        interactions,
        &rows,
        opts.vote,
        |c| seen.contains(&c),
        opts.k,
        opts.tie_break,
        t.index as u64,
    );
    RecommendationList::new(
        &request.user,
        Method::Nn,
        voted
            .into_iter()
            .map(|(c, score)| ScoredVenue {
                venue: raw_id(interactions.venue_token(c)).to_string(),
                score,
            })
            .collect(),
    )
}

/// k nearest venues to the combination of the user and its N nearest users.
pub fn recommend_kiu(
    model: &EmbeddingModel,
    interactions: &InteractionMatrix,
    request: &RecommendationRequest,
) -> RecommendationList {
    let opts = &request.options;
    let Some(t) = target(model, interactions, &request.user) else {
        return RecommendationList::missing(&request.user, Method::Kiu, NoPrediction::UnknownUser);
    };
    let neighbors = match nearest_users(model, &t, opts.neighbors) {
        Ok(n) => n,
        Err(_) => return RecommendationList::missing(&request.user, Method::Kiu, NoPrediction::ZeroQuery),
    };
    let f = model.features();
    let mut acc = vec![0f64; f];
    let mut total = 1.0;
    for (a, &x) in acc.iter_mut().zip(t.vector) {
        *a += x as f64;
    }
    for &(i, sim) in &neighbors {
        let w = match opts.combination {
            Combination::Mean => 1.0,
            Combination::SimilarityWeighted => sim,
        };
        total += w;
        for (a, &x) in acc.iter_mut().zip(model.input_row(i)) {
            *a += w * x as f64;
        }
    }
    let query: Vec<f32> = acc.iter().map(|&a| (a / total) as f32).collect();
    let seen = if opts.filter_seen {
        seen_venues(model, interactions, &t)
    } else {
        empty_seen()
    };
    ranked_by_query(model, &query, &request.user, Method::Kiu, opts, &seen)
}

/// Binds a model, its training interactions and options into a [`Recommender`].
pub struct EmbeddingRecommender<'a> {
    pub model: &'a EmbeddingModel,
    pub interactions: &'a InteractionMatrix,
    pub method: Method,
    pub options: RecommendOptions,
}

impl Recommender for EmbeddingRecommender<'_> {
    fn method(&self) -> Method {
        self.method
    }

    fn recommend(&self, user: &str) -> RecommendationList {
        let req = RecommendationRequest::new(user, self.options.clone());
        match self.method {
            Method::Kni => recommend_kni(self.model, self.interactions, &req),
            Method::Nn => recommend_nn(self.model, self.interactions, &req),
            Method::Kiu => recommend_kiu(self.model, self.interactions, &req),
            other => panic!("{other} is not an embedding method"),
        }
    }
}
