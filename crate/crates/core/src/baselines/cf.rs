//! User-based collaborative filtering with cosine similarity on raw rows.

use crate::interactions::InteractionMatrix;
use crate::recommend::vote::vote;
use crate::recommend::{
    raw_id, Method, NoPrediction, RecommendOptions, RecommendationList, Recommender, ScoredVenue,
};
use crate::topk::top_k;
use crate::corpus::Vocabulary;

pub struct CfRecommender<'a> {
    matrix: &'a InteractionMatrix,
    columns: Vec<Vec<(usize, f64)>>,
    norms: Vec<f64>,
    pub options: RecommendOptions,
}

impl<'a> CfRecommender<'a> {
    pub fn new(matrix: &'a InteractionMatrix, options: RecommendOptions) -> Self {
        let norms = (0..matrix.n_users())
            .map(|u| matrix.row(u).map(|(_, x)| x * x).sum::<f64>().sqrt())
            .collect();
        CfRecommender {
            matrix,
            columns: matrix.columns(),
            norms,
            options,
        }
    }

    /// Cosine similarity of `row` to every user sharing at least one venue.
    fn similarities(&self, row: usize) -> Vec<(usize, f64)> {
        let mut dots = vec![0.0f64; self.matrix.n_users()];
        let mut touched = Vec::new();
        for (v, x) in self.matrix.row(row) {
            for &(other, y) in &self.columns[v] {
                if other != row {
                    if dots[other] == 0.0 {
                        touched.push(other);
                    }
                    dots[other] += x * y;
                }
            }
        }
        touched
            .into_iter()
            .map(|o| (o, dots[o] / (self.norms[row] * self.norms[o])))
            .filter(|&(_, s)| s > 0.0)
            .collect()
    }

    pub fn recommend_row(&self, user: &str, row: usize) -> RecommendationList {
        let opts = &self.options;
        let neighbors: Vec<(usize, f64)> = top_k(self.similarities(row), opts.neighbors)
            .into_iter()
            .map(|s| (s.index, s.score))
            .collect();
        if neighbors.is_empty() {
            return RecommendationList::missing(user, Method::Cf, NoPrediction::NoCandidates);
        }
        let seen = self.matrix.row_cols(row);
        let voted = vote(
            self.matrix,
            &neighbors,
            crate::interactions::Weighting::Counts,
            |c| opts.filter_seen && seen.binary_search(&c).is_ok(),
            opts.k,
            opts.tie_break,
            row as u64,
        );
        RecommendationList::new(
            user,
            Method::Cf,
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

impl Recommender for CfRecommender<'_> {
    fn method(&self) -> Method {
        Method::Cf
    }

    fn recommend(&self, user: &str) -> RecommendationList {
        match self.matrix.user_row(&Vocabulary::user_token(user)) {
            Some(row) => self.recommend_row(user, row),
            None => RecommendationList::missing(user, Method::Cf, NoPrediction::UnknownUser),
        }
    }
}

/// Top-N neighbours by cosine, venues scored by similarity-weighted sums of
/// the neighbours' entries. Users with no overlapping neighbour get no
/// prediction.
pub fn recommend_cf(matrix: &InteractionMatrix, user: &str, options: &RecommendOptions) -> RecommendationList {
    CfRecommender::new(matrix, options.clone()).recommend(user)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::CheckinRecord;
    use crate::interactions::Weighting;
    use crate::recommend::invariants;
    use proptest::prelude::*;

    fn opts(n: usize, k: usize) -> RecommendOptions {
        RecommendOptions {
            k,
            neighbors: n,
            ..RecommendOptions::default()
        }
    }

    #[test]
    fn twin_user_fills_the_gap() {
        let recs = vec![
            CheckinRecord::new("a", "x", 1),
            CheckinRecord::new("a", "y", 2),
            CheckinRecord::new("b", "x", 3),
            CheckinRecord::new("b", "y", 4),
            CheckinRecord::new("b", "z", 5),
        ];
        let m = InteractionMatrix::from_records(&recs, Weighting::Counts);
        let mut o = opts(5, 1);
        o.filter_seen = true;
        let l = recommend_cf(&m, "a", &o);
        assert_eq!(l.venues().collect::<Vec<_>>(), vec!["z"]);
    }

    #[test]
    fn isolated_user_gets_nothing() {
        let mut recs: Vec<_> = (0..10)
            .map(|i| CheckinRecord::new("user81", format!("solo{i}"), i))
            .collect();
        recs.push(CheckinRecord::new("b", "x", 1));
        recs.push(CheckinRecord::new("c", "x", 1));
        let m = InteractionMatrix::from_records(&recs, Weighting::Counts);
        let l = recommend_cf(&m, "user81", &opts(30, 10));
        assert_eq!(l.no_prediction, Some(NoPrediction::NoCandidates));
        assert_eq!(recommend_cf(&m, "nobody", &opts(30, 10)).no_prediction, Some(NoPrediction::UnknownUser));
    }

    #[test]
    fn hand_computed_weighted_sums() {
        // target t = [1, 1, 0, 0]; n1 = [1, 0, 2, 0]; n2 = [0, 2, 0, 1]
        let m = InteractionMatrix::from_dense(&[
            vec![1.0, 1.0, 0.0, 0.0],
            vec![1.0, 0.0, 2.0, 0.0],
            vec![0.0, 2.0, 0.0, 1.0],
        ]);
        let l = CfRecommender::new(&m, opts(2, 4)).recommend_row("t", 0);
        let s1 = 1.0 / (2f64.sqrt() * 5f64.sqrt());
        let s2 = 2.0 / (2f64.sqrt() * 5f64.sqrt());
        // v0: s1*1, v1: s2*2, v2: s1*2, v3: s2*1
        let expect = [("1", 2.0 * s2), ("2", 2.0 * s1), ("3", s2), ("0", s1)];
        assert_eq!(l.items.len(), 4);
        for (got, (v, s)) in l.items.iter().zip(expect) {
            assert_eq!(got.venue, v);
            assert!((got.score - s).abs() < 1e-12);
        }
        invariants::check(&l, 4, None);
    }

    fn brute_force(dense: &[Vec<f64>], target: usize) -> Vec<(usize, f64)> {
        let cos = |a: &[f64], b: &[f64]| {
            let d: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
            let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
            let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
            if na == 0.0 || nb == 0.0 { 0.0 } else { d / (na * nb) }
        };
        let cols = dense[0].len();
        let mut scores = vec![0.0; cols];
        for (o, row) in dense.iter().enumerate() {
            if o == target {
                continue;
            }
            let s = cos(&dense[target], row);
            for (j, x) in row.iter().enumerate() {
                scores[j] += s * x;
            }
        }
        let mut all: Vec<(usize, f64)> = scores.into_iter().enumerate().filter(|p| p.1 > 0.0).collect();
        all.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        all
    }

    proptest! {
        #[test]
        fn all_neighbors_binary_matches_brute_force(
            bits in prop::collection::vec(prop::collection::vec(prop::bool::weighted(0.3), 12), 2..50),
            k in 1usize..8,
        ) {
            let dense: Vec<Vec<f64>> = bits.iter()
                .map(|r| r.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect())
                .collect();
            let m = InteractionMatrix::from_dense(&dense);
            let l = CfRecommender::new(&m, opts(dense.len(), k)).recommend_row("t", 0);
            let full = brute_force(&dense, 0);
            let expect = &full[..k.min(full.len())];
            prop_assert_eq!(l.items.len(), expect.len());
            for (pos, (got, &(j, sc))) in l.items.iter().zip(expect).enumerate() {
                prop_assert!((got.score - sc).abs() < 1e-9);
                let tied = full.iter().enumerate().any(|(q, e)| q != pos && (e.1 - sc).abs() < 1e-9);
                if !tied {
                    prop_assert_eq!(&got.venue, &j.to_string());
                }
            }
        }
    }
}
