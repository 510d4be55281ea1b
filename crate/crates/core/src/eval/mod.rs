//! Offline evaluation: Precision@k, NDCG@k, HitRate and prediction coverage.
//!
//! Every user in the [`GroundTruth`] stays in every denominator. A user with
//! no recommendation scores zero on the accuracy metrics and sets
//! `predicted = 0` for coverage.

use std::collections::{HashMap, HashSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::corpus::{CheckinRecord, Dataset};
use crate::parallel::{map_slice, Execution};
use crate::recommend::RecommendationList;
use crate::{Error, Result};

/// Distinct test venues for every user that also has training data.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GroundTruth {
    users: Vec<String>,
    relevant: HashMap<String, HashSet<String>>,
}

impl GroundTruth {
    /// Users are kept in order of first test appearance.
    pub fn new(train: &[CheckinRecord], test: &[CheckinRecord]) -> Self {
        let trained: HashSet<&str> = train.iter().map(|r| r.user.as_str()).collect();
        let mut users = Vec::new();
        let mut relevant: HashMap<String, HashSet<String>> = HashMap::new();
        for r in test.iter().filter(|r| trained.contains(r.user.as_str())) {
            relevant
                .entry(r.user.clone())
                .or_insert_with(|| {
                    users.push(r.user.clone());
                    HashSet::new()
                })
                .insert(r.venue.clone());
        }
        GroundTruth { users, relevant }
    }

    pub fn from_dataset(data: &Dataset) -> Self {
        GroundTruth::new(&data.train, &data.test)
    }

    pub fn users(&self) -> &[String] {
        &self.users
    }

    pub fn relevant(&self, user: &str) -> Option<&HashSet<String>> {
        self.relevant.get(user)
    }

    pub fn len(&self) -> usize {
        self.users.len()
    }

    pub fn is_empty(&self) -> bool {
        self.users.is_empty()
    }

    /// Mean size of the relevant sets.
    pub fn mean_relevant(&self) -> f64 {
        if self.users.is_empty() {
            return 0.0;
        }
        self.relevant.values().map(HashSet::len).sum::<usize>() as f64 / self.users.len() as f64
    }

    /// Best precision any method can reach: mean of `min(k, |relevant|) / k`.
    pub fn precision_ceiling(&self, k: usize) -> f64 {
        if self.users.is_empty() || k == 0 {
            return 0.0;
        }
        let total: f64 = self.relevant.values().map(|r| r.len().min(k) as f64 / k as f64).sum();
        total / self.users.len() as f64
    }
}

fn check_inputs(recommended: &[&str], relevant: &HashSet<String>, k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::Evaluation("k must be at least 1".into()));
    }
    if relevant.is_empty() {
        return Err(Error::Evaluation("relevant set is empty".into()));
    }
    if recommended.len() > k {
        return Err(Error::Evaluation(format!(
            "{} recommendations for k = {k}",
            recommended.len()
        )));
    }
    Ok(())
}

/// Hits divided by `k`, also for lists shorter than `k`.
pub fn precision_at_k(recommended: &[&str], relevant: &HashSet<String>, k: usize) -> Result<f64> {
    check_inputs(recommended, relevant, k)?;
    let hits = recommended.iter().filter(|v| relevant.contains(**v)).count();
    Ok(hits as f64 / k as f64)
}

/// Binary-relevance NDCG with a `log2(rank + 1)` discount; the ideal list
/// holds `min(k, |relevant|)` hits.
pub fn ndcg_at_k(recommended: &[&str], relevant: &HashSet<String>, k: usize) -> Result<f64> {
    check_inputs(recommended, relevant, k)?;
    let discount = |rank: usize| 1.0 / ((rank + 1) as f64).log2();
    let dcg: f64 = recommended
        .iter()
        .enumerate()
        .filter(|(_, v)| relevant.contains(**v))
        .map(|(i, _)| discount(i + 1))
        .sum();
    let idcg: f64 = (1..=k.min(relevant.len())).map(discount).sum();
    Ok(dcg / idcg)
}

fn mean_flag(flags: &[bool], what: &str) -> Result<f64> {
    if flags.is_empty() {
        return Err(Error::Evaluation(format!("{what} over an empty user set")));
    }
    Ok(flags.iter().filter(|&&f| f).count() as f64 / flags.len() as f64)
}

pub fn hit_rate(hits: &[bool]) -> Result<f64> {
    mean_flag(hits, "hit rate")
}

pub fn prediction_coverage(predicted: &[bool]) -> Result<f64> {
    mean_flag(predicted, "prediction coverage")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserRow {
    pub user: String,
    pub precision: f64,
    pub ndcg: f64,
    pub hit: u8,
    pub predicted: u8,
}

/// Scores one list. `None` means the method gave the user nothing.
pub fn score_user(user: &str, list: Option<&RecommendationList>, relevant: &HashSet<String>, k: usize) -> Result<UserRow> {
    let venues: Vec<&str> = list.map(|l| l.venues().collect()).unwrap_or_default();
    let precision = precision_at_k(&venues, relevant, k)?;
    Ok(UserRow {
        user: user.to_string(),
        precision,
        ndcg: ndcg_at_k(&venues, relevant, k)?,
        hit: u8::from(precision > 0.0),
        predicted: u8::from(!venues.is_empty()),
    })
}

/// One row per ground-truth user, in ground-truth order. Lists for users
/// outside the ground truth are ignored.
pub fn evaluate(lists: &[RecommendationList], truth: &GroundTruth, k: usize, exec: Execution) -> Result<Vec<UserRow>> {
    if truth.is_empty() {
        return Err(Error::Evaluation("no user has both train and test check-ins".into()));
    }
    let by_user: HashMap<&str, &RecommendationList> = lists.iter().map(|l| (l.user.as_str(), l)).collect();
    map_slice(exec, truth.users(), |u| {
        let relevant = truth.relevant(u).expect("ground-truth user has a relevant set");
        score_user(u, by_user.get(u.as_str()).copied(), relevant, k)
    })
    .into_iter()
    .collect()
}

/// Which run produced a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEcho {
    pub method: String,
    /// Embedding architecture; empty for the baselines.
    pub arch: String,
    /// Embedding size or latent rank; 0 when the method has neither.
    pub features: usize,
    /// Context window; empty for the baselines.
    pub window: String,
    /// Training epochs; 0 for the baselines.
    pub epochs: usize,
    pub neighbors: usize,
    pub k: usize,
    pub filter_seen: bool,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub train_s: f64,
    pub rec_s_total: f64,
    pub rec_s_per_user: f64,
}

impl Timings {
    pub fn new(train_s: f64, rec_s_total: f64, users: usize) -> Self {
        Timings {
            train_s,
            rec_s_total,
            rec_s_per_user: if users == 0 { 0.0 } else { rec_s_total / users as f64 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub echo: RunEcho,
    pub precision: f64,
    pub ndcg: f64,
    pub hitrate: f64,
    pub coverage: f64,
    pub timings: Timings,
    pub users: Vec<UserRow>,
}

/// Arithmetic means over the per-user rows.
pub fn aggregate(rows: Vec<UserRow>, timings: Timings, echo: RunEcho) -> Result<MetricsReport> {
    if rows.is_empty() {
        return Err(Error::Evaluation("no per-user rows to aggregate".into()));
    }
    let n = rows.len() as f64;
    let hits: Vec<bool> = rows.iter().map(|r| r.hit == 1).collect();
    let predicted: Vec<bool> = rows.iter().map(|r| r.predicted == 1).collect();
    Ok(MetricsReport {
        echo,
        precision: rows.iter().map(|r| r.precision).sum::<f64>() / n,
        ndcg: rows.iter().map(|r| r.ndcg).sum::<f64>() / n,
        hitrate: hit_rate(&hits)?,
        coverage: prediction_coverage(&predicted)?,
        timings,
        users: rows,
    })
}

/// Flat summary row shared by the CSV and JSON outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub method: String,
    pub arch: String,
    #[serde(rename = "F")]
    pub f: usize,
    #[serde(rename = "C")]
    pub c: String,
    #[serde(rename = "E")]
    pub e: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub k: usize,
    pub precision: f64,
    pub ndcg: f64,
    pub hitrate: f64,
    pub coverage: f64,
    pub train_s: f64,
    pub rec_s_total: f64,
    pub rec_s_per_user: f64,
}

impl MetricsReport {
    pub fn summary(&self) -> SummaryRow {
        SummaryRow {
            method: self.echo.method.clone(),
            arch: self.echo.arch.clone(),
            f: self.echo.features,
            c: self.echo.window.clone(),
            e: self.echo.epochs,
            n: self.echo.neighbors,
            k: self.echo.k,
            precision: self.precision,
            ndcg: self.ndcg,
            hitrate: self.hitrate,
            coverage: self.coverage,
            train_s: self.timings.train_s,
            rec_s_total: self.timings.rec_s_total,
            rec_s_per_user: self.timings.rec_s_per_user,
        }
    }
}

pub fn write_summary_csv<W: Write>(w: W, reports: &[MetricsReport]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in reports {
        out.serialize(r.summary())?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_summary_csv<R: Read>(r: R) -> Result<Vec<SummaryRow>> {
    let mut rdr = csv::Reader::from_reader(r);
    Ok(rdr.deserialize().collect::<std::result::Result<_, _>>()?)
}

pub fn write_summary_json<W: Write>(w: W, reports: &[MetricsReport]) -> Result<()> {
    let rows: Vec<SummaryRow> = reports.iter().map(MetricsReport::summary).collect();
    serde_json::to_writer_pretty(w, &rows)?;
    Ok(())
}

pub fn write_user_csv<W: Write>(w: W, rows: &[UserRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_user_csv<R: Read>(r: R) -> Result<Vec<UserRow>> {
    let mut rdr = csv::Reader::from_reader(r);
    Ok(rdr.deserialize().collect::<std::result::Result<_, _>>()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::recommend::{Method, ScoredVenue};
    use proptest::prelude::*;

    fn set(v: &[&str]) -> HashSet<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn list(user: &str, venues: &[&str]) -> RecommendationList {
        let items = venues
            .iter()
            .map(|v| ScoredVenue { venue: v.to_string(), score: 1.0 })
            .collect();
        RecommendationList::new(user, Method::Kni, items)
    }

    fn echo() -> RunEcho {
        RunEcho {
            method: "KNI".into(),
            arch: "skipgram".into(),
            features: 100,
            window: "20".into(),
            epochs: 25,
            neighbors: 30,
            k: 10,
            filter_seen: false,
            seed: 1,
        }
    }

    #[test]
    fn precision_examples() {
        let rel = set(&["a", "b", "c"]);
        assert_eq!(precision_at_k(&["a", "b", "c"], &rel, 3).unwrap(), 1.0);
        assert_eq!(precision_at_k(&["x", "y"], &rel, 3).unwrap(), 0.0);
        let rec = ["x", "a", "y", "z", "b", "w", "q", "c", "r", "s"];
        assert_eq!(precision_at_k(&rec, &rel, 10).unwrap(), 0.3);
        // short list still divides by k
        assert_eq!(precision_at_k(&["a"], &rel, 10).unwrap(), 0.1);
    }

    #[test]
    fn precision_rejects_bad_input() {
        assert!(precision_at_k(&["a"], &set(&[]), 10).is_err());
        assert!(precision_at_k(&["a", "b"], &set(&["a"]), 1).is_err());
        assert!(precision_at_k(&[], &set(&["a"]), 0).is_err());
    }

    #[test]
    fn ndcg_examples() {
        let one = set(&["a"]);
        assert_eq!(ndcg_at_k(&["a", "x"], &one, 10).unwrap(), 1.0);
        let second = ndcg_at_k(&["x", "a"], &one, 10).unwrap();
        assert!((second - 0.630_929_753_571_457_4).abs() < 1e-12);
        let rel = set(&["a", "b", "c"]);
        assert!((ndcg_at_k(&["c", "a", "b", "x"], &rel, 10).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(ndcg_at_k(&[], &rel, 10).unwrap(), 0.0);
    }

    #[test]
    fn ndcg_matches_hand_sum() {
        // hits at ranks 2 and 4, three relevant, k=5
        let got = ndcg_at_k(&["x", "a", "y", "b", "z"], &set(&["a", "b", "c"]), 5).unwrap();
        let dcg = 1.0 / 3f64.log2() + 1.0 / 5f64.log2();
        let idcg = 1.0 + 1.0 / 3f64.log2() + 1.0 / 4f64.log2();
        assert!((got - dcg / idcg).abs() < 1e-15);
    }

    #[test]
    fn flag_means() {
        assert_eq!(hit_rate(&[true; 4]).unwrap(), 1.0);
        assert_eq!(hit_rate(&[true, false, true, false, true]).unwrap(), 0.6);
        assert_eq!(prediction_coverage(&[false]).unwrap(), 0.0);
        let mut flags = vec![true; 20];
        flags[7] = false;
        assert_eq!(prediction_coverage(&flags).unwrap(), 0.95);
        assert!(hit_rate(&[]).is_err());
        assert!(prediction_coverage(&[]).is_err());
    }

    #[test]
    fn ground_truth_needs_train_and_test() {
        let train = vec![CheckinRecord::new("u1", "a", 1), CheckinRecord::new("u2", "a", 1)];
        let test = vec![
            CheckinRecord::new("u2", "b", 5),
            CheckinRecord::new("u3", "b", 5),
            CheckinRecord::new("u2", "b", 6),
            CheckinRecord::new("u2", "c", 7),
        ];
        let gt = GroundTruth::new(&train, &test);
        assert_eq!(gt.users(), ["u2"]);
        assert_eq!(gt.relevant("u2").unwrap(), &set(&["b", "c"]));
        assert_eq!(gt.mean_relevant(), 2.0);
        assert_eq!(gt.precision_ceiling(10), 0.2);
    }

    #[test]
    fn missing_users_stay_in_denominators() {
        let train = vec![CheckinRecord::new("u1", "a", 1), CheckinRecord::new("u2", "a", 1)];
        let test = vec![CheckinRecord::new("u1", "b", 5), CheckinRecord::new("u2", "b", 5)];
        let gt = GroundTruth::new(&train, &test);
        let lists = vec![list("u1", &["b"]), list("stranger", &["b"])];
        let rows = evaluate(&lists, &gt, 10, Execution::Sequential).unwrap();
        assert_eq!(rows[1], UserRow { user: "u2".into(), precision: 0.0, ndcg: 0.0, hit: 0, predicted: 0 });
        let rep = aggregate(rows, Timings::default(), echo()).unwrap();
        assert_eq!(rep.coverage, 0.5);
        assert_eq!(rep.hitrate, 0.5);
        assert_eq!(rep.precision, 0.05);
    }

    #[test]
    fn aggregate_examples() {
        let row = |u: &str, p: f64| UserRow { user: u.into(), precision: p, ndcg: p, hit: 1, predicted: 1 };
        let one = aggregate(vec![row("a", 0.2)], Timings::default(), echo()).unwrap();
        assert_eq!((one.precision, one.ndcg, one.hitrate, one.coverage), (0.2, 0.2, 1.0, 1.0));
        let two = aggregate(vec![row("a", 0.2), row("b", 0.4)], Timings::default(), echo()).unwrap();
        assert!((two.precision - 0.3).abs() < 1e-15);
        assert!(aggregate(vec![], Timings::default(), echo()).is_err());
    }

    #[test]
    fn summary_csv_has_the_report_columns() {
        let rep = aggregate(
            vec![UserRow { user: "a".into(), precision: 0.1, ndcg: 0.5, hit: 1, predicted: 1 }],
            Timings::new(2.0, 1.0, 4),
            echo(),
        )
        .unwrap();
        let mut buf = Vec::new();
        write_summary_csv(&mut buf, &[rep.clone()]).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "method,arch,F,C,E,N,k,precision,ndcg,hitrate,coverage,train_s,rec_s_total,rec_s_per_user"
        );
        assert_eq!(read_summary_csv(buf.as_slice()).unwrap(), vec![rep.summary()]);
        let mut json = Vec::new();
        write_summary_json(&mut json, &[rep.clone()]).unwrap();
        let parsed: Vec<SummaryRow> = serde_json::from_slice(&json).unwrap();
        assert_eq!(parsed[0].rec_s_per_user, 0.25);
        let mut users = Vec::new();
        write_user_csv(&mut users, &rep.users).unwrap();
        assert_eq!(read_user_csv(users.as_slice()).unwrap(), rep.users);
    }

    fn arb_case() -> impl Strategy<Value = (Vec<String>, HashSet<String>, usize)> {
        (1usize..12).prop_flat_map(|k| {
            (
                proptest::sample::subsequence((0..30).collect::<Vec<u32>>(), 0..=k).prop_shuffle(),
                proptest::collection::hash_set(0u32..30, 1..10),
                Just(k),
            )
                .prop_map(|(rec, rel, k)| {
                    (
                        rec.into_iter().map(|v| v.to_string()).collect(),
                        rel.into_iter().map(|v| v.to_string()).collect(),
                        k,
                    )
                })
        })
    }

    proptest! {
        #[test]
        fn per_user_bounds((rec, rel, k) in arb_case()) {
            let rec: Vec<&str> = rec.iter().map(String::as_str).collect();
            let p = precision_at_k(&rec, &rel, k).unwrap();
            let n = ndcg_at_k(&rec, &rel, k).unwrap();
            prop_assert!((0.0..=1.0).contains(&n));
            prop_assert!(p >= 0.0 && p <= (rel.len() as f64 / k as f64).min(1.0) + 1e-12);
            prop_assert_eq!(p > 0.0, n > 0.0);
        }

        #[test]
        fn aggregates_bounded_and_order_free(
            cases in proptest::collection::vec((0u8..=10, any::<bool>()), 1..40),
            seed in any::<u64>(),
        ) {
            let rows: Vec<UserRow> = cases.iter().enumerate().map(|(i, &(h, pred))| {
                let hits = if pred { h } else { 0 };
                UserRow {
                    user: i.to_string(),
                    precision: hits as f64 / 10.0,
                    ndcg: if hits > 0 { 0.5 } else { 0.0 },
                    hit: u8::from(hits > 0),
                    predicted: u8::from(pred),
                }
            }).collect();
            let a = aggregate(rows.clone(), Timings::default(), echo()).unwrap();
            for v in [a.precision, a.ndcg, a.hitrate, a.coverage] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
            prop_assert!(a.coverage >= a.hitrate);
            prop_assert!(a.hitrate >= a.precision);
            let mut shuffled = rows;
            use rand::{seq::SliceRandom, SeedableRng};
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let b = aggregate(shuffled, Timings::default(), echo()).unwrap();
            prop_assert!((a.precision - b.precision).abs() < 1e-12);
            prop_assert!((a.ndcg - b.ndcg).abs() < 1e-12);
            prop_assert_eq!(a.hitrate, b.hitrate);
            prop_assert_eq!(a.coverage, b.coverage);
        }
    }
}
