use super::EmbeddingModel;
use crate::corpus::TokenKind;
use crate::topk::TopK;
use crate::{Error, Result};

pub(crate) fn norm(v: &[f32]) -> f64 {
    v.iter().map(|&x| (x as f64) * (x as f64)).sum::<f64>().sqrt()
}

pub(crate) fn dot(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| x as f64 * y as f64).sum()
}

/// Cosine similarity accumulated in double precision; `None` if either side
/// has zero norm.
pub fn cosine(a: &[f32], b: &[f32]) -> Option<f64> {
    let (na, nb) = (norm(a), norm(b));
    (na > 0.0 && nb > 0.0).then(|| dot(a, b) / (na * nb))
}

/// Which tokens may appear in a similarity ranking.
#[derive(Debug, Clone, Copy)]
pub enum Candidates<'a> {
    All,
    Users,
    Venues,
    Only(&'a [usize]),
}

impl<'a> Candidates<'a> {
    fn indices(self, model: &'a EmbeddingModel) -> Box<dyn Iterator<Item = usize> + 'a> {
        match self {
            Candidates::All => Box::new(0..model.vocab.len()),
            Candidates::Users => Box::new(model.vocab.users().iter().copied()),
            Candidates::Venues => Box::new(model.vocab.venues().iter().copied()),
            Candidates::Only(ix) => Box::new(ix.iter().copied()),
        }
    }

    pub fn kind(self) -> Option<TokenKind> {
        match self {
            Candidates::Users => Some(TokenKind::User),
            Candidates::Venues => Some(TokenKind::Venue),
            _ => None,
        }
    }
}

/// The `k` candidates most cosine-similar to `query`, best first, ties broken
/// by ascending token index. Tokens rejected by `keep` are skipped.
///
/// Exhaustive scan over the input matrix; candidates with a zero vector score 0.
pub fn top_k_similar(
    model: &EmbeddingModel,
    query: &[f32],
    candidates: Candidates<'_>,
    k: usize,
    keep: impl Fn(usize) -> bool,
) -> Result<Vec<(usize, f64)>> {
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    if query.len() != model.features() {
        return Err(Error::Similarity(format!(
            "query has dimension {}, model has {}",
            query.len(),
            model.features()
        )));
    }
    let qn = norm(query);
    if !(qn > 0.0) {
        return Err(Error::Similarity("query vector has zero norm".into()));
    }
    let norms = model.input_norms();
    let mut top = TopK::new(k);
    for i in candidates.indices(model) {
        if !keep(i) {
            continue;
        }
        let rn = norms[i];
        let score = if rn > 0.0 {
            dot(query, model.input_row(i)) / (qn * rn)
        } else {
            0.0
        };
        top.push(i, score);
    }
    Ok(top.into_sorted().into_iter().map(|s| (s.index, s.score)).collect())
}
