//! Batch recommendation and its line format:
//!
//! ```text
//! user<TAB>method<TAB>venue:score<TAB>venue:score ...
//! user<TAB>method<TAB>no-prediction
//! ```

use std::io::{BufRead, Write};

use super::{Method, NoPrediction, RecommendationList, Recommender, ScoredVenue};
use crate::parallel::{map_slice, Execution};
use crate::{Error, Result};

pub const NO_PREDICTION: &str = "no-prediction";

pub fn recommend_batch(rec: &dyn Recommender, users: &[String], exec: Execution) -> Vec<RecommendationList> {
    map_slice(exec, users, |u| rec.recommend(u))
}

pub fn write_batch<W: Write>(mut w: W, lists: &[RecommendationList]) -> Result<()> {
    for l in lists {
        write!(w, "{}\t{}", l.user, l.method)?;
        if l.items.is_empty() {
            write!(w, "\t{NO_PREDICTION}")?;
        }
        for s in &l.items {
            write!(w, "\t{}:{}", s.venue, s.score)?;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn read_batch<R: BufRead>(r: R) -> Result<Vec<RecommendationList>> {
    let mut out = Vec::new();
    for (n, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |what: &str| Error::Format(format!("line {}: {what}", n + 1));
        let mut fields = line.split('\t');
        let user = fields.next().ok_or_else(|| bad("missing user"))?;
        let method: Method = fields.next().ok_or_else(|| bad("missing method"))?.parse()?;
        let rest: Vec<&str> = fields.collect();
        if rest == [NO_PREDICTION] {
            out.push(RecommendationList::missing(user, method, NoPrediction::NoCandidates));
            continue;
        }
        let mut items = Vec::with_capacity(rest.len());
        for pair in rest {
            let (venue, score) = pair.rsplit_once(':').ok_or_else(|| bad("expected venue:score"))?;
            let score: f64 = score.parse().map_err(|_| bad("bad score"))?;
            items.push(ScoredVenue {
                venue: venue.to_string(),
                score,
            });
        }
        out.push(RecommendationList::new(user, method, items));
    }
    Ok(out)
}
