//! Reference methods: user-based CF, random, and latent-neighbour
//! recommendation on top of truncated SVD or CCD++ factors.

mod ccdpp;
mod cf;
mod latent;
mod persist;
mod random;
mod svd;

use crate::interactions::InteractionMatrix;
use crate::{Error, Result};

pub use ccdpp::{ccdpp_factorize, ccdpp_factorize_from, ccdpp_objective, CcdOptions, CcdResult};
pub use cf::{recommend_cf, CfRecommender};
pub use latent::{recommend_latent_neighbors, LatentNeighborRecommender};
pub use persist::{read_factors, write_factors};
pub use random::{recommend_random, RandomRecommender};
pub use svd::{svd_factorize, truncated_svd, LinearOperator, SvdOptions, TruncatedSvd};

/// Low-rank factors `A ≈ U Vᵀ`, rows aligned with an [`InteractionMatrix`].
#[derive(Debug, Clone, PartialEq)]
pub struct FactorModel {
    pub users: Vec<String>,
    pub venues: Vec<String>,
    pub rank: usize,
    pub lambda: f64,
    /// `users × rank`, row-major.
    pub u: Vec<f64>,
    /// `venues × rank`, row-major.
    pub v: Vec<f64>,
}

impl FactorModel {
    pub fn new(matrix: &InteractionMatrix, rank: usize, lambda: f64, u: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if rank == 0 {
            return Err(Error::Config("latent rank must be at least 1".into()));
        }
        if u.len() != matrix.n_users() * rank || v.len() != matrix.n_venues() * rank {
            return Err(Error::Format("factor shapes do not match the interaction matrix".into()));
        }
        Ok(FactorModel {
            users: matrix.user_tokens().to_vec(),
            venues: matrix.venue_tokens().to_vec(),
            rank,
            lambda,
            u,
            v,
        })
    }

    pub fn user_row(&self, i: usize) -> &[f64] {
        &self.u[i * self.rank..(i + 1) * self.rank]
    }

    pub fn venue_row(&self, j: usize) -> &[f64] {
        &self.v[j * self.rank..(j + 1) * self.rank]
    }

    pub fn predict(&self, i: usize, j: usize) -> f64 {
        self.user_row(i).iter().zip(self.venue_row(j)).map(|(a, b)| a * b).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().chain(&self.v).all(|x| x.is_finite())
    }
}

pub(crate) fn cosine64(a: &[f64], b: &[f64]) -> Option<f64> {
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    (na > 0.0 && nb > 0.0).then(|| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / (na * nb))
}
