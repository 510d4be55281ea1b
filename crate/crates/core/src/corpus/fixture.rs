//! Synthetic check-in generator with planted community structure.
//!
//! Users and venues are split into communities. Each check-in picks the
//! user's own community (or, with probability `noise_rate`, another one) and
//! then a venue from it with Zipf-shaped popularity. With `locality > 0` the
//! venues of a community lie on a ring, every user has a home position on it,
//! and own-community draws are further weighted by a Gaussian of the ring
//! distance to home. Within one phase (train or test) a user does not revisit
//! a venue until the candidates are exhausted.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::CheckinRecord;
use crate::{Error, Result};

/// 2011-01-01T00:00:00Z.
pub const JAN_2011: u64 = 1_293_840_000;
/// 2011-02-01T00:00:00Z.
pub const FEB_2011: u64 = 1_296_518_400;
/// 2011-03-01T00:00:00Z.
pub const MAR_2011: u64 = 1_298_937_600;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureSpec {
    pub seed: u64,
    pub communities: usize,
    pub users_per_community: usize,
    pub venues_per_community: usize,
    pub noise_rate: f64,
    pub train_per_user: usize,
    pub test_per_user: usize,
    /// Zipf exponent of venue popularity inside a community; 0 is uniform.
    pub popularity_skew: f64,
    /// Width (in venues) of the taste kernel around each user's home; 0 turns
    /// it off.
    pub locality: f64,
    /// Force every venue to receive at least one training check-in.
    pub cover_all_venues: bool,
}

impl Default for FixtureSpec {
    fn default() -> Self {
        FixtureSpec {
            seed: 7,
            communities: 4,
            users_per_community: 50,
            venues_per_community: 100,
            noise_rate: 0.0,
            train_per_user: 20,
            test_per_user: 5,
            popularity_skew: 0.0,
            locality: 3.0,
            cover_all_venues: false,
        }
    }
}

impl FixtureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.communities == 0 || self.users_per_community == 0 || self.venues_per_community == 0 {
            return Err(Error::Config("fixture needs at least one community, user and venue".into()));
        }
        if !(0.0..=1.0).contains(&self.noise_rate) {
            return Err(Error::Config("noise_rate must lie in [0, 1]".into()));
        }
        if self.noise_rate > 0.0 && self.communities < 2 {
            return Err(Error::Config("cross-community noise needs two or more communities".into()));
        }
        if !(self.popularity_skew >= 0.0 && self.popularity_skew.is_finite()) {
            return Err(Error::Config("popularity_skew must be finite and non-negative".into()));
        }
        if !(self.locality >= 0.0 && self.locality.is_finite()) {
            return Err(Error::Config("locality must be finite and non-negative".into()));
        }
        if self.train_per_user == 0 {
            return Err(Error::Config("train_per_user must be at least 1".into()));
        }
        if self.cover_all_venues {
            let needed = self.venues_per_community.div_ceil(self.users_per_community);
            if needed > self.train_per_user {
                return Err(Error::Config(format!(
                    "covering {} venues with {} users needs train_per_user >= {needed}",
                    self.venues_per_community, self.users_per_community
                )));
            }
        }
        Ok(())
    }

    pub fn user_id(&self, community: usize, i: usize) -> String {
        format!("u{}", community * self.users_per_community + i)
    }

    pub fn venue_id(&self, community: usize, j: usize) -> String {
        format!("v{}", community * self.venues_per_community + j)
    }
}

#[derive(Debug, Clone)]
pub struct Fixture {
    pub spec: FixtureSpec,
    /// All check-ins sorted by timestamp.
    pub records: Vec<CheckinRecord>,
    pub boundary: u64,
    pub train_count: usize,
    pub test_count: usize,
}

impl Fixture {
    /// Community of a generated user or venue id (`u123`, `v45`).
    pub fn community_of_user(&self, user_id: &str) -> Option<usize> {
        let n: usize = user_id.strip_prefix('u')?.parse().ok()?;
        Some(n / self.spec.users_per_community)
    }

    pub fn community_of_venue(&self, venue_id: &str) -> Option<usize> {
        let n: usize = venue_id.strip_prefix('v')?.parse().ok()?;
        Some(n / self.spec.venues_per_community)
    }
}

struct Picker {
    weights: Vec<f64>,
}

impl Picker {
    /// Popularity-weighted draw that avoids `used` while possible.
    fn pick(&self, rng: &mut ChaCha8Rng, used: &[bool]) -> usize {
        let avail: Vec<f64> = self
            .weights
            .iter()
            .zip(used)
            .map(|(&w, &u)| if u { 0.0 } else { w })
            .collect();
        let dist = match WeightedIndex::new(&avail) {
            Ok(d) => d,
            Err(_) => WeightedIndex::new(&self.weights).expect("positive weights"),
        };
        dist.sample(rng)
    }
}

pub fn generate_fixture(spec: &FixtureSpec) -> Result<Fixture> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let v = spec.venues_per_community;
    let popularity: Vec<f64> = (0..v).map(|j| ((j + 1) as f64).powf(-spec.popularity_skew)).collect();
    let picker = Picker {
        weights: popularity.clone(),
    };
    let home_picker = |i: usize| -> Option<Picker> {
        if spec.locality == 0.0 {
            return None;
        }
        let home = i as f64 * v as f64 / spec.users_per_community as f64;
        let weights = (0..v)
            .map(|j| {
                let d = (j as f64 - home).abs();
                let d = d.min(v as f64 - d);
                popularity[j] * (-d * d / (2.0 * spec.locality * spec.locality)).exp()
            })
            .collect();
        Some(Picker { weights })
    };

    let mut records = Vec::new();
    let (mut train_count, mut test_count) = (0, 0);
    let phases = [
        (JAN_2011, FEB_2011, spec.train_per_user),
        (FEB_2011, MAR_2011, spec.test_per_user),
    ];
    for c in 0..spec.communities {
        for i in 0..spec.users_per_community {
            let user = spec.user_id(c, i);
            let own = home_picker(i);
            let own = own.as_ref().unwrap_or(&picker);
            for (phase, &(start, end, count)) in phases.iter().enumerate() {
                let mut used = vec![vec![false; spec.venues_per_community]; spec.communities];
                for n in 0..count {
                    let forced = if phase == 0 && spec.cover_all_venues {
                        let j = i + n * spec.users_per_community;
                        (j < spec.venues_per_community).then_some(j)
                    } else {
                        None
                    };
                    let (vc, j) = match forced {
                        Some(j) => (c, j),
                        None => {
                            let vc = if spec.noise_rate > 0.0 && rng.random_bool(spec.noise_rate) {
                                let other = rng.random_range(0..spec.communities - 1);
                                if other >= c {
                                    other + 1
                                } else {
                                    other
                                }
                            } else {
                                c
                            };
                            let p = if vc == c { own } else { &picker };
                            (vc, p.pick(&mut rng, &used[vc]))
                        }
                    };
                    used[vc][j] = true;
                    let ts = rng.random_range(start..end);
                    records.push(CheckinRecord::new(user.clone(), spec.venue_id(vc, j), ts));
                }
                if phase == 0 {
                    train_count += count;
                } else {
                    test_count += count;
                }
            }
        }
    }
    records.sort_by_key(|r| r.timestamp);
    Ok(Fixture {
        spec: spec.clone(),
        records,
        boundary: FEB_2011,
        train_count,
        test_count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_vocabulary, split_train_test};

    #[test]
    fn split_counts_match_construction() {
        let fx = generate_fixture(&FixtureSpec::default()).unwrap();
        let d = split_train_test(&fx.records, fx.boundary);
        assert_eq!(d.train.len(), fx.train_count);
        assert_eq!(d.test.len(), fx.test_count);
        assert_eq!(fx.train_count, 4 * 50 * 20);
        assert_eq!(fx.test_count, 4 * 50 * 5);
    }

    #[test]
    fn zero_noise_keeps_communities_disjoint() {
        let fx = generate_fixture(&FixtureSpec::default()).unwrap();
        for r in &fx.records {
            assert_eq!(fx.community_of_user(&r.user), fx.community_of_venue(&r.venue));
        }
    }

    #[test]
    fn same_seed_same_records() {
        let spec = FixtureSpec {
            noise_rate: 0.1,
            ..FixtureSpec::default()
        };
        let a = generate_fixture(&spec).unwrap();
        let b = generate_fixture(&spec).unwrap();
        assert_eq!(a.records, b.records);
    }

    #[test]
    fn checkins_jan_scale_vocabulary() {
        let spec = FixtureSpec {
            seed: 1,
            communities: 1,
            users_per_community: 8308,
            venues_per_community: 49521,
            train_per_user: 6,
            test_per_user: 1,
            popularity_skew: 0.8,
            locality: 0.0,
            cover_all_venues: true,
            ..FixtureSpec::default()
        };
        let fx = generate_fixture(&spec).unwrap();
        let d = split_train_test(&fx.records, fx.boundary);
        let vocab = build_vocabulary(&d.train, 1).unwrap();
        assert_eq!(vocab.users().len(), 8308);
        assert_eq!(vocab.venues().len(), 49521);
        assert_eq!(vocab.len(), 57829);
    }

    #[test]
    fn invalid_specs() {
        let bad = FixtureSpec {
            noise_rate: 1.5,
            ..FixtureSpec::default()
        };
        assert!(generate_fixture(&bad).is_err());
        let bad = FixtureSpec {
            cover_all_venues: true,
            train_per_user: 1,
            ..FixtureSpec::default()
        };
        assert!(generate_fixture(&bad).is_err());
    }
}
