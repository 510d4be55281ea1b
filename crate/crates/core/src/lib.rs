//! Venue recommendation from location-based check-in histories.
//!
//! Users and venues are embedded in one vector space by training skip-gram or
//! CBOW with negative sampling on "sentences" made of a user token followed by
//! the venues that user checked in at. Three recommenders work on top of the
//! trained vectors:
//!
//! * **KNI**: rank venues by cosine similarity to the user's vector.
//! * **NN**: find the user's nearest users, then sum their venue visits.
//! * **KIU**: rank venues by cosine similarity to the mean of the user and its
//!   nearest users.
//!
//! The [`baselines`] module holds the reference methods (user-based CF,
//! random, truncated SVD and CCD++ latent neighbours), [`eval`] scores ranked
//! lists with Precision@k, NDCG@k, HitRate and prediction coverage, and
//! [`harness`] wires everything into reproducible experiments and sweeps.

pub mod baselines;
pub mod corpus;
pub mod embedding;
pub mod error;
pub mod eval;
pub mod harness;
pub mod interactions;
pub mod parallel;
pub mod recommend;
pub mod topk;

pub use error::{Error, Result};
