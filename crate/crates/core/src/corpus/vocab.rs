use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::CheckinRecord;
use crate::{Error, Result};

pub const USER_PREFIX: &str = "U:";
pub const VENUE_PREFIX: &str = "V:";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TokenKind {
    User,
    Venue,
}

impl TokenKind {
    pub fn of(token: &str) -> Option<TokenKind> {
        if token.starts_with(USER_PREFIX) {
            Some(TokenKind::User)
        } else if token.starts_with(VENUE_PREFIX) {
            Some(TokenKind::Venue)
        } else {
            None
        }
    }
}

/// Token dictionary shared by users and venues.
///
/// Users are stored first (in order of first appearance), then venues (same
/// rule). Indices are dense `0..len()`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    token_to_index: HashMap<String, usize>,
    tokens: Vec<String>,
    frequency: Vec<u64>,
    kinds: Vec<TokenKind>,
    users: Vec<usize>,
    venues: Vec<usize>,
    min_word_count: u64,
}

impl Vocabulary {
    pub fn user_token(user_id: &str) -> String {
        format!("{USER_PREFIX}{user_id}")
    }

    pub fn venue_token(venue_id: &str) -> String {
        format!("{VENUE_PREFIX}{venue_id}")
    }

    /// Rebuilds a vocabulary from stored tokens and counts (e.g. a model file).
    pub fn from_parts(tokens: Vec<String>, frequency: Vec<u64>, min_word_count: u64) -> Result<Self> {
        if tokens.len() != frequency.len() {
            return Err(Error::Format("token and frequency counts differ".into()));
        }
        if tokens.is_empty() {
            return Err(Error::EmptyVocabulary("no tokens".into()));
        }
        let mut token_to_index = HashMap::with_capacity(tokens.len());
        let mut kinds = Vec::with_capacity(tokens.len());
        let (mut users, mut venues) = (Vec::new(), Vec::new());
        for (i, tok) in tokens.iter().enumerate() {
            let kind = TokenKind::of(tok)
                .ok_or_else(|| Error::Format(format!("token `{tok}` lacks a U:/V: prefix")))?;
            if token_to_index.insert(tok.clone(), i).is_some() {
                return Err(Error::Format(format!("duplicate token `{tok}`")));
            }
            kinds.push(kind);
            match kind {
                TokenKind::User => users.push(i),
                TokenKind::Venue => venues.push(i),
            }
        }
        Ok(Vocabulary {
            token_to_index,
            tokens,
            frequency,
            kinds,
            users,
            venues,
            min_word_count,
        })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn index(&self, token: &str) -> Option<usize> {
        self.token_to_index.get(token).copied()
    }

    pub fn user_index(&self, user_id: &str) -> Option<usize> {
        self.index(&Self::user_token(user_id))
    }

    pub fn venue_index(&self, venue_id: &str) -> Option<usize> {
        self.index(&Self::venue_token(venue_id))
    }

    pub fn token(&self, index: usize) -> &str {
        &self.tokens[index]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn frequency(&self, index: usize) -> u64 {
        self.frequency[index]
    }

    pub fn frequencies(&self) -> &[u64] {
        &self.frequency
    }

    pub fn kind(&self, index: usize) -> TokenKind {
        self.kinds[index]
    }

    /// Indices of user tokens, ascending.
    pub fn users(&self) -> &[usize] {
        &self.users
    }

    /// Indices of venue tokens, ascending.
    pub fn venues(&self) -> &[usize] {
        &self.venues
    }

    pub fn min_word_count(&self) -> u64 {
        self.min_word_count
    }
}

/// Builds the joint user/venue dictionary from training check-ins.
///
/// A user's frequency is its number of check-ins and a venue's frequency is
/// the number of times it was checked in; tokens below `min_word_count` are
/// dropped.
pub fn build_vocabulary(train: &[CheckinRecord], min_word_count: u64) -> Result<Vocabulary> {
    if min_word_count == 0 {
        return Err(Error::Config("min_word_count must be at least 1".into()));
    }
    if train.is_empty() {
        return Err(Error::EmptyVocabulary("training set has no check-ins".into()));
    }
    let mut user_order: Vec<&str> = Vec::new();
    let mut venue_order: Vec<&str> = Vec::new();
    let mut user_counts: HashMap<&str, u64> = HashMap::new();
    let mut venue_counts: HashMap<&str, u64> = HashMap::new();
    for r in train {
        let c = user_counts.entry(&r.user).or_insert(0);
        if *c == 0 {
            user_order.push(&r.user);
        }
        *c += 1;
        let c = venue_counts.entry(&r.venue).or_insert(0);
        if *c == 0 {
            venue_order.push(&r.venue);
        }
        *c += 1;
    }

    let mut tokens = Vec::new();
    let mut frequency = Vec::new();
    for u in user_order {
        let n = user_counts[u];
        if n >= min_word_count {
            tokens.push(Vocabulary::user_token(u));
            frequency.push(n);
        }
    }
    for v in venue_order {
        let n = venue_counts[v];
        if n >= min_word_count {
            tokens.push(Vocabulary::venue_token(v));
            frequency.push(n);
        }
    }
    if tokens.is_empty() {
        return Err(Error::EmptyVocabulary(format!(
            "no token reaches min_word_count={min_word_count}"
        )));
    }
    Vocabulary::from_parts(tokens, frequency, min_word_count)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(u: &str, v: &str, t: u64) -> CheckinRecord {
        CheckinRecord::new(u, v, t)
    }

    #[test]
    fn two_users_three_venues() {
        let train = vec![
            rec("a", "x", 1),
            rec("a", "y", 2),
            rec("b", "y", 3),
            rec("b", "z", 4),
        ];
        let v = build_vocabulary(&train, 1).unwrap();
        assert_eq!(v.len(), 5);
        assert_eq!(v.users().len(), 2);
        assert_eq!(v.venues().len(), 3);
        assert_eq!(v.frequency(v.index("V:y").unwrap()), 2);
        assert_eq!(v.frequency(v.user_index("a").unwrap()), 2);
        for (i, t) in v.tokens().iter().enumerate() {
            assert_eq!(v.index(t), Some(i));
        }
    }

    #[test]
    fn threshold_drops_rare_venue() {
        let train = vec![rec("a", "x", 1), rec("a", "y", 2), rec("b", "y", 3), rec("b", "y", 4)];
        let v = build_vocabulary(&train, 2).unwrap();
        assert!(v.venue_index("x").is_none());
        assert!(v.venue_index("y").is_some());
        assert!(v.frequencies().iter().all(|&f| f >= 2));
    }

    #[test]
    fn user_and_venue_with_same_id_do_not_collide() {
        let v = build_vocabulary(&[rec("42", "42", 0)], 1).unwrap();
        assert_eq!(v.len(), 2);
        assert_ne!(v.user_index("42"), v.venue_index("42"));
    }

    #[test]
    fn empty_train_is_an_error() {
        assert!(matches!(build_vocabulary(&[], 1), Err(Error::EmptyVocabulary(_))));
        assert!(matches!(
            build_vocabulary(&[rec("a", "b", 0)], 2),
            Err(Error::EmptyVocabulary(_))
        ));
    }
}
