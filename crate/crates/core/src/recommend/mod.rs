//! Top-k venue recommendation.
//!
//! Every method produces a [`RecommendationList`]; a user the method cannot
//! serve gets an empty list with a [`NoPrediction`] reason, which the
//! evaluation counts against prediction coverage.

mod batch;
mod embedding;
pub(crate) mod vote;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::interactions::Weighting;
use crate::{Error, Result};

pub use batch::{read_batch, recommend_batch, write_batch};
pub use embedding::{recommend_kiu, recommend_kni, recommend_nn, EmbeddingRecommender};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "KNI")]
    Kni,
    #[serde(rename = "NN")]
    Nn,
    #[serde(rename = "KIU")]
    Kiu,
    #[serde(rename = "CF")]
    Cf,
    #[serde(rename = "Random")]
    Random,
    #[serde(rename = "SVD")]
    Svd,
    #[serde(rename = "CCD++")]
    Ccdpp,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Kni,
        Method::Nn,
        Method::Kiu,
        Method::Cf,
        Method::Random,
        Method::Svd,
        Method::Ccdpp,
    ];

    pub fn uses_embedding(self) -> bool {
        matches!(self, Method::Kni | Method::Nn | Method::Kiu)
    }

    pub fn uses_neighbors(self) -> bool {
        !matches!(self, Method::Kni | Method::Random)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Kni => "KNI",
            Method::Nn => "NN",
            Method::Kiu => "KIU",
            Method::Cf => "CF",
            Method::Random => "Random",
            Method::Svd => "SVD",
            Method::Ccdpp => "CCD++",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "kni" => Ok(Method::Kni),
            "nn" => Ok(Method::Nn),
            "kiu" => Ok(Method::Kiu),
            "cf" | "cf-c" => Ok(Method::Cf),
            "random" => Ok(Method::Random),
            "svd" => Ok(Method::Svd),
            "ccd++" | "ccdpp" | "ccd" => Ok(Method::Ccdpp),
            other => Err(Error::Config(format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum TieBreak {
    /// Lower venue index wins.
    #[default]
    Deterministic,
    /// Equal scores are ordered by a seeded shuffle.
    Seeded(u64),
}

/// How KIU merges the target and neighbour vectors into one query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Combination {
    #[default]
    Mean,
    /// Neighbours weighted by their cosine to the target, the target by 1.
    SimilarityWeighted,
}

/// Parameters shared by all recommenders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendOptions {
    pub k: usize,
    pub neighbors: usize,
    pub filter_seen: bool,
    pub tie_break: TieBreak,
    pub vote: Weighting,
    pub combination: Combination,
}

impl Default for RecommendOptions {
    fn default() -> Self {
        RecommendOptions {
            k: 10,
            neighbors: 30,
            filter_seen: false,
            tie_break: TieBreak::Deterministic,
            vote: Weighting::Counts,
            combination: Combination::Mean,
        }
    }
}

impl RecommendOptions {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if self.neighbors == 0 {
            return Err(Error::Config("N must be at least 1".into()));
        }
        Ok(())
    }
}

/// A target user (raw id, without the `U:` prefix) plus options.
#[derive(Debug, Clone, PartialEq)]
pub struct RecommendationRequest {
    pub user: String,
    pub options: RecommendOptions,
}

impl RecommendationRequest {
    pub fn new(user: impl Into<String>, options: RecommendOptions) -> Self {
        RecommendationRequest {
            user: user.into(),
            options,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NoPrediction {
    UnknownUser,
    /// KIU query vector cancelled out.
    ZeroQuery,
    /// No neighbour shares anything with the user, or every candidate was filtered.
    NoCandidates,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredVenue {
    pub venue: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendationList {
    pub user: String,
    pub method: Method,
    pub items: Vec<ScoredVenue>,
    pub no_prediction: Option<NoPrediction>,
}

impl RecommendationList {
    pub fn new(user: &str, method: Method, items: Vec<ScoredVenue>) -> Self {
        let no_prediction = items.is_empty().then_some(NoPrediction::NoCandidates);
        RecommendationList {
            user: user.to_string(),
            method,
            items,
            no_prediction,
        }
    }

    pub fn missing(user: &str, method: Method, reason: NoPrediction) -> Self {
        RecommendationList {
            user: user.to_string(),
            method,
            items: Vec::new(),
            no_prediction: Some(reason),
        }
    }

    pub fn is_prediction(&self) -> bool {
        !self.items.is_empty()
    }

    pub fn venues(&self) -> impl Iterator<Item = &str> {
        self.items.iter().map(|s| s.venue.as_str())
    }
}

/// Anything that turns a user id into a ranked venue list.
pub trait Recommender: Sync {
    fn method(&self) -> Method;
    fn recommend(&self, user: &str) -> RecommendationList;
}

/// Strips a `U:`/`V:` prefix if present.
pub(crate) fn raw_id(token: &str) -> &str {
    token
        .strip_prefix(crate::corpus::USER_PREFIX)
        .or_else(|| token.strip_prefix(crate::corpus::VENUE_PREFIX))
        .unwrap_or(token)
}

#[cfg(test)]
pub(crate) mod invariants {
    use super::*;
    use std::collections::HashSet;

    /// No duplicates, non-increasing scores, at most `k` items, no seen venue
    /// when `seen` is given.
    pub fn check(list: &RecommendationList, k: usize, seen: Option<&HashSet<String>>) {
        assert!(list.items.len() <= k);
        let uniq: HashSet<&str> = list.venues().collect();
        assert_eq!(uniq.len(), list.items.len(), "duplicate venues in {list:?}");
        assert!(list.items.windows(2).all(|w| w[0].score >= w[1].score), "{list:?}");
        if let Some(seen) = seen {
            assert!(list.venues().all(|v| !seen.contains(v)), "seen venue in {list:?}");
        }
        assert_eq!(list.is_prediction(), list.no_prediction.is_none());
    }
}
