//! Sparse user × venue visit table shared by the neighbourhood recommenders
//! and the matrix-factorisation baselines.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{CheckinRecord, Vocabulary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weighting {
    /// Entry = number of check-ins.
    #[default]
    Counts,
    /// Entry = 1 for any visit.
    Binary,
}

/// CSR matrix of visits with token maps for both axes.
///
/// Rows are users and columns venues, both in order of first appearance in
/// the training records. Only positive entries are stored.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionMatrix {
    users: Vec<String>,
    venues: Vec<String>,
    user_index: HashMap<String, usize>,
    venue_index: HashMap<String, usize>,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl InteractionMatrix {
    /// Builds the matrix from raw check-ins. Ids are stored with their
    /// `U:`/`V:` prefixes so lists line up with embedding tokens.
    pub fn from_records(records: &[CheckinRecord], weighting: Weighting) -> Self {
        Self::build(records, weighting, |_| true)
    }

    /// Same as [`from_records`](Self::from_records) but drops check-ins at
    /// venues missing from `vocab`. Columns then follow the vocabulary's venue
    /// order.
    pub fn from_records_in_vocab(records: &[CheckinRecord], vocab: &Vocabulary, weighting: Weighting) -> Self {
        Self::build(records, weighting, |r| vocab.venue_index(&r.venue).is_some())
    }

    fn build(
        records: &[CheckinRecord],
        weighting: Weighting,
        keep: impl Fn(&CheckinRecord) -> bool,
    ) -> Self {
        let mut users = Vec::new();
        let mut venues = Vec::new();
        let mut user_index = HashMap::new();
        let mut venue_index = HashMap::new();
        let mut cells: HashMap<(usize, usize), f64> = HashMap::new();
        for r in records.iter().filter(|r| keep(r)) {
            let ut = Vocabulary::user_token(&r.user);
            let vt = Vocabulary::venue_token(&r.venue);
            let u = *user_index.entry(ut.clone()).or_insert_with(|| {
                users.push(ut);
                users.len() - 1
            });
            let v = *venue_index.entry(vt.clone()).or_insert_with(|| {
                venues.push(vt);
                venues.len() - 1
            });
            *cells.entry((u, v)).or_insert(0.0) += 1.0;
        }
        let mut entries: Vec<((usize, usize), f64)> = cells.into_iter().collect();
        entries.sort_by_key(|&(k, _)| k);

        let mut row_ptr = vec![0usize; users.len() + 1];
        let mut col_idx = Vec::with_capacity(entries.len());
        let mut values = Vec::with_capacity(entries.len());
        for ((u, v), x) in entries {
            row_ptr[u + 1] += 1;
            col_idx.push(v);
            values.push(match weighting {
                Weighting::Counts => x,
                Weighting::Binary => 1.0,
            });
        }
        for i in 0..users.len() {
            row_ptr[i + 1] += row_ptr[i];
        }
        InteractionMatrix {
            users,
            venues,
            user_index,
            venue_index,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Dense constructor for tests and small experiments; zeros are dropped.
    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let n_cols = rows.first().map_or(0, Vec::len);
        let users: Vec<String> = (0..rows.len()).map(|i| format!("U:{i}")).collect();
        let venues: Vec<String> = (0..n_cols).map(|j| format!("V:{j}")).collect();
        let mut row_ptr = vec![0];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for row in rows {
            assert_eq!(row.len(), n_cols, "ragged dense matrix");
            for (j, &x) in row.iter().enumerate() {
                if x != 0.0 {
                    col_idx.push(j);
                    values.push(x);
                }
            }
            row_ptr.push(col_idx.len());
        }
        InteractionMatrix {
            user_index: users.iter().cloned().enumerate().map(|(i, t)| (t, i)).collect(),
            venue_index: venues.iter().cloned().enumerate().map(|(i, t)| (t, i)).collect(),
            users,
            venues,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    pub fn n_venues(&self) -> usize {
        self.venues.len()
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn user_token(&self, row: usize) -> &str {
        &self.users[row]
    }

    pub fn venue_token(&self, col: usize) -> &str {
        &self.venues[col]
    }

    pub fn venue_tokens(&self) -> &[String] {
        &self.venues
    }

    pub fn user_tokens(&self) -> &[String] {
        &self.users
    }

    /// Row of a prefixed user token.
    pub fn user_row(&self, token: &str) -> Option<usize> {
        self.user_index.get(token).copied()
    }

    pub fn venue_col(&self, token: &str) -> Option<usize> {
        self.venue_index.get(token).copied()
    }

    /// `(column, value)` pairs of one row, columns ascending.
    pub fn row(&self, u: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (a, b) = (self.row_ptr[u], self.row_ptr[u + 1]);
        self.col_idx[a..b].iter().copied().zip(self.values[a..b].iter().copied())
    }

    pub fn row_cols(&self, u: usize) -> &[usize] {
        &self.col_idx[self.row_ptr[u]..self.row_ptr[u + 1]]
    }

    /// Every stored entry as `(row, column, value)`.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_users()).flat_map(move |u| self.row(u).map(move |(v, x)| (u, v, x)))
    }

    /// Column-major view: for each venue, `(row, value)` pairs.
    pub fn columns(&self) -> Vec<Vec<(usize, f64)>> {
        let mut cols = vec![Vec::new(); self.n_venues()];
        for (u, v, x) in self.triplets() {
            cols[v].push((u, x));
        }
        cols
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n_venues()]; self.n_users()];
        for (u, v, x) in self.triplets() {
            d[u][v] = x;
        }
        d
    }
}
