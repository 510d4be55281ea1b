use std::collections::HashMap;

use super::{CheckinRecord, Vocabulary};

/// A user token followed by that user's venue tokens in check-in order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Sentence {
    pub tokens: Vec<usize>,
}

impl Sentence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn user(&self) -> usize {
        self.tokens[0]
    }

    pub fn venues(&self) -> &[usize] {
        &self.tokens[1..]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Sentences {
    pub sentences: Vec<Sentence>,
    pub max_len: usize,
}

impl Sentences {
    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn total_tokens(&self) -> usize {
        self.sentences.iter().map(Sentence::len).sum()
    }
}

/// One sentence per known user, venues ordered by timestamp (stable on ties).
///
/// Check-ins at venues missing from `vocab` are dropped, and users left with
/// no venue are skipped. Repeat visits are kept.
pub fn build_sentences(train: &[CheckinRecord], vocab: &Vocabulary) -> Sentences {
    let mut per_user: HashMap<usize, Vec<(u64, usize)>> = HashMap::new();
    for r in train {
        let (Some(u), Some(v)) = (vocab.user_index(&r.user), vocab.venue_index(&r.venue)) else {
            continue;
        };
        per_user.entry(u).or_default().push((r.timestamp, v));
    }

    let mut out = Sentences::default();
    for &u in vocab.users() {
        let Some(mut visits) = per_user.remove(&u) else {
            continue;
        };
        visits.sort_by_key(|&(t, _)| t);
        let mut tokens = Vec::with_capacity(visits.len() + 1);
        tokens.push(u);
        tokens.extend(visits.into_iter().map(|(_, v)| v));
        out.max_len = out.max_len.max(tokens.len());
        out.sentences.push(Sentence { tokens });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::build_vocabulary;
    use proptest::prelude::*;

    fn rec(u: &str, v: &str, t: u64) -> CheckinRecord {
        CheckinRecord::new(u, v, t)
    }

    #[test]
    fn ordered_by_timestamp() {
        let train = vec![rec("u0", "v2", 20), rec("u0", "v1", 10)];
        let vocab = build_vocabulary(&train, 1).unwrap();
        let s = build_sentences(&train, &vocab);
        assert_eq!(s.len(), 1);
        let toks: Vec<&str> = s.sentences[0].tokens.iter().map(|&i| vocab.token(i)).collect();
        assert_eq!(toks, ["U:u0", "V:v1", "V:v2"]);
        assert_eq!(s.max_len, 3);
    }

    #[test]
    fn ties_keep_input_order() {
        let train = vec![rec("u", "b", 5), rec("u", "a", 5), rec("u", "c", 1)];
        let vocab = build_vocabulary(&train, 1).unwrap();
        let s = build_sentences(&train, &vocab);
        let toks: Vec<&str> = s.sentences[0].venues().iter().map(|&i| vocab.token(i)).collect();
        assert_eq!(toks, ["V:c", "V:b", "V:a"]);
    }

    #[test]
    fn user_with_only_pruned_venues_is_omitted() {
        let train = vec![
            rec("a", "rare", 1),
            rec("a", "rare2", 2),
            rec("b", "pop", 1),
            rec("b", "pop", 2),
        ];
        let vocab = build_vocabulary(&train, 2).unwrap();
        assert!(vocab.user_index("a").is_some());
        let s = build_sentences(&train, &vocab);
        assert_eq!(s.len(), 1);
        assert_eq!(s.sentences[0].user(), vocab.user_index("b").unwrap());
    }

    #[test]
    fn long_history_sets_max_len() {
        let mut train: Vec<_> = (0..682).map(|i| rec("heavy", &format!("v{}", i % 37), i)).collect();
        train.push(rec("light", "v0", 5));
        let vocab = build_vocabulary(&train, 1).unwrap();
        assert_eq!(build_sentences(&train, &vocab).max_len, 683);
    }

    proptest! {
        #[test]
        fn length_sum_matches_surviving_records(
            raw in prop::collection::vec((0u8..6, 0u8..10, 0u64..50), 1..80),
            min_count in 1u64..4,
        ) {
            let train: Vec<_> = raw.iter()
                .map(|&(u, v, t)| rec(&format!("u{u}"), &format!("v{v}"), t))
                .collect();
            let Ok(vocab) = build_vocabulary(&train, min_count) else { return Ok(()); };
            let s = build_sentences(&train, &vocab);
            let surviving = train.iter()
                .filter(|r| vocab.user_index(&r.user).is_some() && vocab.venue_index(&r.venue).is_some())
                .count();
            let sum: usize = s.sentences.iter().map(|x| x.len() - 1).sum();
            prop_assert_eq!(sum, surviving);
            prop_assert!(s.sentences.iter().all(|x| x.len() >= 2));
            prop_assert_eq!(build_sentences(&train, &vocab), s);
        }
    }
}
