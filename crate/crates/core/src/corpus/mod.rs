//! Check-in ingestion, train/test splitting, vocabulary and sentence building.

mod fixture;
mod sentences;
mod vocab;

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use flate2::read::MultiGzDecoder;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use fixture::{generate_fixture, Fixture, FixtureSpec, FEB_2011, JAN_2011, MAR_2011};
pub use sentences::{build_sentences, Sentence, Sentences};
pub use vocab::{build_vocabulary, TokenKind, Vocabulary, USER_PREFIX, VENUE_PREFIX};

/// One check-in: `user` visited `venue` at `timestamp` (seconds since epoch).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CheckinRecord {
    pub user: String,
    pub venue: String,
    pub timestamp: u64,
}

impl CheckinRecord {
    pub fn new(user: impl Into<String>, venue: impl Into<String>, timestamp: u64) -> Self {
        CheckinRecord {
            user: user.into(),
            venue: venue.into(),
            timestamp,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Column {
    User,
    Venue,
    Timestamp,
    Ignore,
}

/// Column layout of a check-in file.
///
/// Parsed from a comma-separated list of column names, e.g. `user,venue,timestamp`
/// or `user,_,timestamp,venue`; `_` marks a column that is skipped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldLayout {
    pub delimiter: char,
    columns: Vec<Column>,
}

impl Default for FieldLayout {
    fn default() -> Self {
        FieldLayout {
            delimiter: '\t',
            columns: vec![Column::User, Column::Venue, Column::Timestamp],
        }
    }
}

impl FieldLayout {
    pub fn with_delimiter(mut self, delimiter: char) -> Self {
        self.delimiter = delimiter;
        self
    }

    fn position(&self, col: Column) -> usize {
        self.columns.iter().position(|&c| c == col).expect("validated layout")
    }

    fn parse_line(&self, line: &str) -> Option<CheckinRecord> {
        let fields: Vec<&str> = line.split(self.delimiter).map(str::trim).collect();
        if fields.len() < self.columns.len() {
            return None;
        }
        let user = fields[self.position(Column::User)];
        let venue = fields[self.position(Column::Venue)];
        let ts = fields[self.position(Column::Timestamp)];
        if user.is_empty() || venue.is_empty() {
            return None;
        }
        let timestamp = ts.parse::<u64>().ok()?;
        Some(CheckinRecord::new(user, venue, timestamp))
    }
}

impl FromStr for FieldLayout {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut columns = Vec::new();
        for name in s.split(',').map(str::trim) {
            columns.push(match name {
                "user" | "u" => Column::User,
                "venue" | "v" | "item" => Column::Venue,
                "timestamp" | "time" | "t" => Column::Timestamp,
                "_" | "" => Column::Ignore,
                other => return Err(Error::Config(format!("unknown layout column `{other}`"))),
            });
        }
        for required in [Column::User, Column::Venue, Column::Timestamp] {
            let n = columns.iter().filter(|&&c| c == required).count();
            if n != 1 {
                return Err(Error::Config(format!(
                    "layout `{s}` must name {required:?} exactly once"
                )));
            }
        }
        Ok(FieldLayout {
            delimiter: '\t',
            columns,
        })
    }
}

impl fmt::Display for FieldLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self
            .columns
            .iter()
            .map(|c| match c {
                Column::User => "user",
                Column::Venue => "venue",
                Column::Timestamp => "timestamp",
                Column::Ignore => "_",
            })
            .collect();
        write!(f, "{}", names.join(","))
    }
}

/// Result of [`parse_checkins`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParsedCheckins {
    pub records: Vec<CheckinRecord>,
    pub skipped: usize,
}

/// Reads check-ins line by line. Blank lines and `#` comments are ignored;
/// malformed lines are counted in `skipped`. If more than half of the data
/// lines are malformed the layout is almost certainly wrong and a format
/// error is returned instead.
pub fn parse_checkins<R: BufRead>(source: R, layout: &FieldLayout) -> Result<ParsedCheckins> {
    let mut out = ParsedCheckins::default();
    for line in source.lines() {
        let line = line?;
        let trimmed = line.trim_end_matches(['\r', '\n']);
        if trimmed.trim().is_empty() || trimmed.starts_with('#') {
            continue;
        }
        match layout.parse_line(trimmed) {
            Some(rec) => out.records.push(rec),
            None => out.skipped += 1,
        }
    }
    let total = out.records.len() + out.skipped;
    if total > 0 && out.skipped * 2 > total {
        return Err(Error::Format(format!(
            "{} of {} lines malformed for layout `{}`",
            out.skipped, total, layout
        )));
    }
    if out.skipped > 0 {
        log::warn!("skipped {} malformed check-in lines", out.skipped);
    }
    Ok(out)
}

/// Opens `path` and parses it, transparently decompressing gzip input.
pub fn read_checkins(path: &Path, layout: &FieldLayout) -> Result<ParsedCheckins> {
    let mut file = File::open(path)?;
    let mut magic = [0u8; 2];
    let n = file.read(&mut magic)?;
    let file = File::open(path)?;
    if n == 2 && magic == [0x1f, 0x8b] {
        parse_checkins(BufReader::new(MultiGzDecoder::new(file)), layout)
    } else {
        parse_checkins(BufReader::new(file), layout)
    }
}

/// Writes records in the default `user<TAB>venue<TAB>timestamp` layout.
pub fn write_checkins<W: Write>(mut out: W, records: &[CheckinRecord]) -> Result<()> {
    for r in records {
        writeln!(out, "{}\t{}\t{}", r.user, r.venue, r.timestamp)?;
    }
    Ok(())
}

/// Check-ins split at a time boundary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dataset {
    pub boundary: u64,
    pub train: Vec<CheckinRecord>,
    pub test: Vec<CheckinRecord>,
}

impl Dataset {
    /// Writes train then test records; parsing the output and splitting at
    /// `self.boundary` reproduces `self`.
    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        write_checkins(&mut out, &self.train)?;
        write_checkins(&mut out, &self.test)
    }

    /// Fails if any training record lies at or after the boundary, or any
    /// test record before it.
    pub fn verify_split(&self) -> Result<()> {
        if let Some(r) = self.train.iter().find(|r| r.timestamp >= self.boundary) {
            return Err(Error::Training(format!(
                "record {r:?} leaked into the training side of boundary {}",
                self.boundary
            )));
        }
        if let Some(r) = self.test.iter().find(|r| r.timestamp < self.boundary) {
            return Err(Error::Evaluation(format!(
                "record {r:?} is on the test side but precedes boundary {}",
                self.boundary
            )));
        }
        Ok(())
    }
}

/// Train = records strictly before `boundary`, test = the rest. Input order is
/// kept on both sides.
pub fn split_train_test(records: &[CheckinRecord], boundary: u64) -> Dataset {
    let (train, test): (Vec<_>, Vec<_>) = records
        .iter()
        .cloned()
        .partition(|r| r.timestamp < boundary);
    if train.is_empty() {
        log::warn!("train split is empty (boundary {boundary})");
    }
    if test.is_empty() {
        log::warn!("test split is empty (boundary {boundary})");
    }
    Dataset {
        boundary,
        train,
        test,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tab() -> FieldLayout {
        FieldLayout::default()
    }

    #[test]
    fn single_line() {
        let p = parse_checkins("u1\tv9\t1296000000\n".as_bytes(), &tab()).unwrap();
        assert_eq!(p.records, vec![CheckinRecord::new("u1", "v9", 1296000000)]);
        assert_eq!(p.skipped, 0);
    }

    #[test]
    fn empty_stream() {
        let p = parse_checkins("".as_bytes(), &tab()).unwrap();
        assert!(p.records.is_empty());
        assert_eq!(p.skipped, 0);
    }

    #[test]
    fn one_missing_venue_is_skipped() {
        let src = "u1\tv1\t10\nu2\t20\nu3\tv3\t30\n";
        let p = parse_checkins(src.as_bytes(), &tab()).unwrap();
        assert_eq!(p.records.len(), 2);
        assert_eq!(p.skipped, 1);
    }

    #[test]
    fn mostly_malformed_is_a_format_error() {
        let src = "u1,v1,10\nu2,v2,20\nu3\tv3\t30\n";
        assert!(matches!(
            parse_checkins(src.as_bytes(), &tab()),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn custom_layout_and_delimiter() {
        let layout: FieldLayout = "timestamp,_,user,venue".parse().unwrap();
        let layout = layout.with_delimiter(',');
        let p = parse_checkins("42,x,alice,cafe\n".as_bytes(), &layout).unwrap();
        assert_eq!(p.records, vec![CheckinRecord::new("alice", "cafe", 42)]);
        assert!("user,venue".parse::<FieldLayout>().is_err());
        assert!("user,venue,time,user".parse::<FieldLayout>().is_err());
    }

    #[test]
    fn negative_timestamp_is_malformed() {
        let p = parse_checkins("a\tb\t-5\nc\td\t5\ne\tf\t6\n".as_bytes(), &tab()).unwrap();
        assert_eq!(p.skipped, 1);
    }

    #[test]
    fn gzip_input() {
        use flate2::{write::GzEncoder, Compression};
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.tsv.gz");
        let mut enc = GzEncoder::new(File::create(&path).unwrap(), Compression::default());
        enc.write_all(b"u1\tv1\t1\nu2\tv2\t2\n").unwrap();
        enc.finish().unwrap();
        let p = read_checkins(&path, &tab()).unwrap();
        assert_eq!(p.records.len(), 2);
    }

    #[test]
    fn unreadable_source() {
        let err = read_checkins(Path::new("/nonexistent/checkins.tsv"), &tab()).unwrap_err();
        assert!(matches!(err, Error::Io(_)));
    }

    #[test]
    fn split_is_strict() {
        let recs: Vec<_> = (1..=3).map(|t| CheckinRecord::new("u", "v", t)).collect();
        let d = split_train_test(&recs, 3);
        assert_eq!(d.train.iter().map(|r| r.timestamp).collect::<Vec<_>>(), vec![1, 2]);
        assert_eq!(d.test.iter().map(|r| r.timestamp).collect::<Vec<_>>(), vec![3]);
        let d = split_train_test(&recs, 0);
        assert!(d.train.is_empty());
        assert_eq!(d.test, recs);
        d.verify_split().unwrap();
    }

    fn arb_record() -> impl Strategy<Value = CheckinRecord> {
        ("[a-z0-9]{1,6}", "[a-z0-9]{1,6}", 0u64..2_000_000_000)
            .prop_map(|(u, v, t)| CheckinRecord::new(u, v, t))
    }

    proptest! {
        #[test]
        fn dataset_round_trip(recs in prop::collection::vec(arb_record(), 0..60), boundary in 0u64..2_000_000_000) {
            let d = split_train_test(&recs, boundary);
            let mut buf = Vec::new();
            d.write(&mut buf).unwrap();
            let parsed = parse_checkins(buf.as_slice(), &FieldLayout::default()).unwrap();
            prop_assert_eq!(parsed.skipped, 0);
            let again = split_train_test(&parsed.records, boundary);
            prop_assert_eq!(again, d);
        }
    }
}
