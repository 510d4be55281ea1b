//! Bounded top-k selection with a deterministic order: higher score first,
//! then lower index.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scored {
    pub index: usize,
    pub score: f64,
}

impl Eq for Scored {}

impl Ord for Scored {
    /// `Greater` means ranked earlier.
    fn cmp(&self, other: &Self) -> Ordering {
        self.score
            .total_cmp(&other.score)
            .then_with(|| other.index.cmp(&self.index))
    }
}

impl PartialOrd for Scored {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub struct TopK {
    k: usize,
    heap: BinaryHeap<Reverse<Scored>>,
}

impl TopK {
    pub fn new(k: usize) -> Self {
        TopK {
            k,
            heap: BinaryHeap::with_capacity(k + 1),
        }
    }

    pub fn push(&mut self, index: usize, score: f64) {
        if self.k == 0 {
            return;
        }
        let item = Scored { index, score };
        if self.heap.len() < self.k {
            self.heap.push(Reverse(item));
        } else if let Some(Reverse(worst)) = self.heap.peek() {
            if item > *worst {
                self.heap.pop();
                self.heap.push(Reverse(item));
            }
        }
    }

    /// Best first.
    pub fn into_sorted(self) -> Vec<Scored> {
        let mut v: Vec<Scored> = self.heap.into_iter().map(|Reverse(s)| s).collect();
        v.sort_by(|a, b| b.cmp(a));
        v
    }
}

pub fn top_k<I: IntoIterator<Item = (usize, f64)>>(items: I, k: usize) -> Vec<Scored> {
    let mut t = TopK::new(k);
    for (i, s) in items {
        t.push(i, s);
    }
    t.into_sorted()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ties_by_index() {
        let r = top_k(vec![(5, 1.0), (2, 1.0), (9, 2.0), (1, 0.5)], 3);
        let idx: Vec<usize> = r.iter().map(|s| s.index).collect();
        assert_eq!(idx, vec![9, 2, 5]);
    }

    proptest! {
        #[test]
        fn matches_full_sort(scores in prop::collection::vec(-4i32..4, 0..80), k in 1usize..20) {
            let items: Vec<(usize, f64)> = scores.iter().enumerate().map(|(i, &s)| (i, s as f64)).collect();
            let mut full = items.clone();
            full.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            full.truncate(k);
            let got: Vec<(usize, f64)> = top_k(items, k).into_iter().map(|s| (s.index, s.score)).collect();
            prop_assert_eq!(got, full);
        }
    }
}
