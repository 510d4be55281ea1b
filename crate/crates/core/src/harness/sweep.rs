//! One-axis parameter sweeps and tidy plot data.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use super::config::ExperimentConfig;
use super::run::run_experiment;
use crate::eval::{write_summary_csv, MetricsReport};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SweepAxis {
    /// Feature count.
    F,
    /// Context window.
    C,
    /// Epoch count.
    E,
}

impl SweepAxis {
    pub fn key(self) -> &'static str {
        match self {
            SweepAxis::F => "features",
            SweepAxis::C => "window",
            SweepAxis::E => "epochs",
        }
    }

    /// Default grid for the axis.
    pub fn grid(self) -> Vec<String> {
        let r: Vec<usize> = match self {
            SweepAxis::F => (10..=100).step_by(10).collect(),
            SweepAxis::C => (5..=20).step_by(5).collect(),
            SweepAxis::E => (5..=25).step_by(5).collect(),
        };
        r.into_iter().map(|v| v.to_string()).collect()
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepAxis::F => "F",
            SweepAxis::C => "C",
            SweepAxis::E => "E",
        })
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "f" | "features" => Ok(SweepAxis::F),
            "c" | "window" | "context" => Ok(SweepAxis::C),
            "e" | "epochs" => Ok(SweepAxis::E),
            _ => Err(Error::Config(format!("unknown sweep axis `{s}` (use F, C or E)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<String>,
}

impl SweepSpec {
    pub fn with_default_grid(axis: SweepAxis) -> Self {
        SweepSpec {
            axis,
            values: axis.grid(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepRun {
    pub axis: SweepAxis,
    pub value: String,
    pub report: MetricsReport,
}

#[derive(Debug, Clone, Default)]
pub struct SweepOutcome {
    pub runs: Vec<SweepRun>,
    /// `(value, error)` for runs that failed; the sweep carries on past them.
    pub failures: Vec<(String, String)>,
}

impl SweepOutcome {
    pub fn reports(&self) -> Vec<MetricsReport> {
        self.runs.iter().map(|r| r.report.clone()).collect()
    }

    pub fn combined_csv(&self) -> Result<String> {
        let mut buf = Vec::new();
        write_summary_csv(&mut buf, &self.reports())?;
        Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
    }
}

/// One run per axis value, other settings taken from `base`. Each run with an
/// output directory writes into `<output>/<axis>=<value>`, and the combined
/// CSV goes to `<output>/sweep_<axis>.csv`.
pub fn run_sweep(spec: &SweepSpec, base: &ExperimentConfig) -> Result<SweepOutcome> {
    if spec.values.is_empty() {
        return Err(Error::Config("sweep has no axis values".into()));
    }
    let base_text = base.to_pairs_text();
    let mut outcome = SweepOutcome::default();
    for value in &spec.values {
        let mut pairs = super::config::parse_pairs(&base_text)?;
        // the latent rank follows F when F is swept
        pairs.retain(|(k, _)| k != "output" && !(spec.axis == SweepAxis::F && k == "rank"));
        pairs.push((spec.axis.key().into(), value.clone()));
        let mut cfg = ExperimentConfig::from_pairs(pairs)?;
        cfg.output = base.output.as_ref().map(|o| o.join(format!("{}={value}", spec.axis)));
        match run_experiment(&cfg) {
            Ok(out) => outcome.runs.push(SweepRun {
                axis: spec.axis,
                value: value.clone(),
                report: out.report,
            }),
            Err(e) => {
                log::error!("sweep run {}={value} failed: {e}", spec.axis);
                outcome.failures.push((value.clone(), e.to_string()));
            }
        }
    }
    if let Some(dir) = &base.output {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(format!("sweep_{}.csv", spec.axis)), outcome.combined_csv()?)?;
        if !outcome.failures.is_empty() {
            let text: String = outcome.failures.iter().map(|(v, e)| format!("{v}\t{e}\n")).collect();
            fs::write(dir.join("failures.tsv"), text)?;
        }
    }
    Ok(outcome)
}

#[derive(Serialize)]
struct PlotRow<'a> {
    axis_value: &'a str,
    metric: &'static str,
    value: f64,
}

/// Tidy `(axis_value, metric, value)` CSV text keyed by `(method, axis)`.
pub fn emit_plot_data(runs: &[SweepRun]) -> Result<BTreeMap<(String, SweepAxis), String>> {
    let first = runs.first().ok_or_else(|| Error::Emit("no reports".into()))?;
    if let Some(r) = runs.iter().find(|r| r.axis != first.axis) {
        return Err(Error::Emit(format!("mixed axes {} and {}", first.axis, r.axis)));
    }
    let mut writers: BTreeMap<(String, SweepAxis), csv::Writer<Vec<u8>>> = BTreeMap::new();
    for run in runs {
        let w = writers
            .entry((run.report.echo.method.clone(), run.axis))
            .or_insert_with(|| csv::Writer::from_writer(Vec::new()));
        let r = &run.report;
        for (metric, value) in [
            ("precision", r.precision),
            ("ndcg", r.ndcg),
            ("hitrate", r.hitrate),
            ("coverage", r.coverage),
        ] {
            w.serialize(PlotRow {
                axis_value: &run.value,
                metric,
                value,
            })?;
        }
    }
    writers
        .into_iter()
        .map(|(key, w)| {
            let bytes = w.into_inner().map_err(|e| Error::Emit(e.to_string()))?;
            Ok((key, String::from_utf8(bytes).expect("csv output is UTF-8")))
        })
        .collect()
}

/// Writes `plot_<method>_<axis>.csv` files into `dir`; returns their names.
pub fn write_plot_data(dir: &Path, runs: &[SweepRun]) -> Result<Vec<String>> {
    fs::create_dir_all(dir)?;
    let mut names = Vec::new();
    for ((method, axis), text) in emit_plot_data(runs)? {
        let safe: String = method.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { 'p' }).collect();
        let name = format!("plot_{safe}_{axis}.csv");
        fs::write(dir.join(&name), text)?;
        names.push(name);
    }
    Ok(names)
}

/// Rebuilds sweep runs from a combined CSV, taking the axis value from the
/// matching column.
pub fn runs_from_combined_csv(text: &str, axis: SweepAxis) -> Result<Vec<SweepRun>> {
    use crate::eval::{read_summary_csv, RunEcho, Timings};
    let rows = read_summary_csv(text.as_bytes())?;
    Ok(rows
        .into_iter()
        .map(|s| {
            let value = match axis {
                SweepAxis::F => s.f.to_string(),
                SweepAxis::C => s.c.clone(),
                SweepAxis::E => s.e.to_string(),
            };
            SweepRun {
                axis,
                value,
                report: MetricsReport {
                    echo: RunEcho {
                        method: s.method,
                        arch: s.arch,
                        features: s.f,
                        window: s.c,
                        epochs: s.e,
                        neighbors: s.n,
                        k: s.k,
                        filter_seen: false,
                        seed: 0,
                    },
                    precision: s.precision,
                    ndcg: s.ndcg,
                    hitrate: s.hitrate,
                    coverage: s.coverage,
                    timings: Timings {
                        train_s: s.train_s,
                        rec_s_total: s.rec_s_total,
                        rec_s_per_user: s.rec_s_per_user,
                    },
                    users: Vec::new(),
                },
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{aggregate, RunEcho, Timings, UserRow};

    fn report(method: &str, p: f64) -> MetricsReport {
        let echo = RunEcho {
            method: method.into(),
            arch: "skip-gram".into(),
            features: 10,
            window: "5".into(),
            epochs: 5,
            neighbors: 30,
            k: 10,
            filter_seen: false,
            seed: 1,
        };
        let row = UserRow { user: "a".into(), precision: p, ndcg: p, hit: 1, predicted: 1 };
        aggregate(vec![row], Timings::default(), echo).unwrap()
    }

    fn run(axis: SweepAxis, v: &str) -> SweepRun {
        SweepRun { axis, value: v.into(), report: report("KNI", 0.1) }
    }

    #[test]
    fn default_grids() {
        assert_eq!(SweepAxis::F.grid().len(), 10);
        assert_eq!(SweepAxis::C.grid(), ["5", "10", "15", "20"]);
        assert_eq!(SweepAxis::E.grid(), ["5", "10", "15", "20", "25"]);
    }

    #[test]
    fn plot_rows_per_report() {
        let runs: Vec<SweepRun> = ["5", "10", "15"].iter().map(|v| run(SweepAxis::E, v)).collect();
        let out = emit_plot_data(&runs).unwrap();
        assert_eq!(out.len(), 1);
        let text = &out[&("KNI".to_string(), SweepAxis::E)];
        assert_eq!(text.lines().count(), 1 + 3 * 4);
        assert!(text.starts_with("axis_value,metric,value\n5,precision,0.1\n"));
        assert_eq!(emit_plot_data(&runs).unwrap(), out);
    }

    #[test]
    fn plot_errors() {
        assert!(matches!(emit_plot_data(&[]), Err(Error::Emit(_))));
        let mixed = [run(SweepAxis::E, "5"), run(SweepAxis::F, "10")];
        assert!(matches!(emit_plot_data(&mixed), Err(Error::Emit(_))));
    }

    #[test]
    fn sweep_runs_each_value() {
        let dir = tempfile::tempdir().unwrap();
        let mut base = ExperimentConfig::from_pairs([
            ("method", "SVD"),
            ("neighbors", "5"),
            ("fixture.communities", "2"),
            ("fixture.users", "10"),
            ("fixture.venues", "20"),
            ("fixture.train", "8"),
            ("fixture.test", "2"),
        ])
        .unwrap();
        base.output = Some(dir.path().to_path_buf());
        let spec = SweepSpec { axis: SweepAxis::F, values: vec!["2".into(), "4".into(), "6".into()] };
        let out = run_sweep(&spec, &base).unwrap();
        assert!(out.failures.is_empty());
        let ranks: Vec<usize> = out.runs.iter().map(|r| r.report.echo.features).collect();
        assert_eq!(ranks, [2, 4, 6]);
        let text = fs::read_to_string(dir.path().join("sweep_F.csv")).unwrap();
        assert_eq!(text, out.combined_csv().unwrap());
        assert!(dir.path().join("F=4").join("users.csv").exists());
        let bad = SweepSpec { axis: SweepAxis::E, values: vec![] };
        assert!(run_sweep(&bad, &base).unwrap_err().is_config());
    }

    #[test]
    fn combined_csv_round_trip() {
        let outcome = SweepOutcome {
            runs: vec![run(SweepAxis::E, "5"), run(SweepAxis::E, "10")],
            failures: vec![],
        };
        let text = outcome.combined_csv().unwrap();
        assert_eq!(text.lines().count(), 3);
        let back = runs_from_combined_csv(&text, SweepAxis::E).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].value, "5");
    }
}
