//! CSV tables, summaries and Vega-Lite plot descriptions.

use std::fmt::Write as _;
use std::path::Path;

use serde_json::json;

use crate::stats::{mean, pearson};
use crate::BenchError;

pub const CSV_HEADER: &str = "experiment,sampler,ratio,trial,error,sigma_s_am,bound,ms,seed";

/// One (sampler, ratio, trial) cell of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub experiment: String,
    pub sampler: String,
    pub ratio: f64,
    pub trial: usize,
    /// `None` when the sampler or the factorization failed.
    pub error: Option<f64>,
    pub sigma_s_am: Option<f64>,
    /// Error bound, when its preconditions held.
    pub bound: Option<f64>,
    pub ms: f64,
    pub seed: u64,
}

fn opt(v: Option<f64>, missing: &str) -> String {
    v.map_or_else(|| missing.to_string(), |x| x.to_string())
}

fn parse_opt(field: &str, missing: &str) -> Result<Option<f64>, BenchError> {
    if field == missing {
        return Ok(None);
    }
    field
        .parse()
        .map(Some)
        .map_err(|_| BenchError::Csv(format!("bad number {field:?}")))
}

pub fn write_csv(rows: &[ResultRow], out: impl std::io::Write) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER.split(','))?;
    for r in rows {
        w.write_record([
            r.experiment.clone(),
            r.sampler.clone(),
            r.ratio.to_string(),
            r.trial.to_string(),
            opt(r.error, "failed"),
            opt(r.sigma_s_am, "n/a"),
            opt(r.bound, "n/a"),
            r.ms.to_string(),
            r.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string(rows: &[ResultRow]) -> Result<String, BenchError> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    String::from_utf8(buf).map_err(|e| BenchError::Csv(e.to_string()))
}

pub fn read_csv(input: impl std::io::Read) -> Result<Vec<ResultRow>, BenchError> {
    let mut rdr = csv::Reader::from_reader(input);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header.join(",") != CSV_HEADER {
        return Err(BenchError::Csv(format!("unexpected header {:?}", header.join(","))));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let num = |i: usize| -> Result<&str, BenchError> {
            rec.get(i).ok_or_else(|| BenchError::Csv(format!("missing column {i}")))
        };
        let bad = |what: &str| BenchError::Csv(format!("bad {what}"));
        rows.push(ResultRow {
            experiment: num(0)?.to_string(),
            sampler: num(1)?.to_string(),
            ratio: num(2)?.parse().map_err(|_| bad("ratio"))?,
            trial: num(3)?.parse().map_err(|_| bad("trial"))?,
            error: parse_opt(num(4)?, "failed")?,
            sigma_s_am: parse_opt(num(5)?, "n/a")?,
            bound: parse_opt(num(6)?, "n/a")?,
            ms: num(7)?.parse().map_err(|_| bad("ms"))?,
            seed: num(8)?.parse().map_err(|_| bad("seed"))?,
        });
    }
    Ok(rows)
}

/// The CSV with the timing column blanked, for reproducibility checks.
pub fn csv_without_timing(rows: &[ResultRow]) -> Result<String, BenchError> {
    let stripped: Vec<ResultRow> = rows.iter().map(|r| ResultRow { ms: 0.0, ..r.clone() }).collect();
    csv_string(&stripped)
}

/// Mean error of one (experiment, sampler, ratio) group.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub experiment: String,
    pub sampler: String,
    pub ratio: f64,
    pub mean_error: Option<f64>,
    pub runs: usize,
    pub failures: usize,
    pub bound_violations: usize,
}

/// Groups rows in first-appearance order.
pub fn summarize(rows: &[ResultRow]) -> Vec<SummaryRow> {
    let mut out: Vec<SummaryRow> = Vec::new();
    let mut errors: Vec<Vec<f64>> = Vec::new();
    for r in rows {
        let pos = out.iter().position(|s| {
            s.experiment == r.experiment && s.sampler == r.sampler && s.ratio == r.ratio
        });
        let i = pos.unwrap_or_else(|| {
            out.push(SummaryRow {
                experiment: r.experiment.clone(),
                sampler: r.sampler.clone(),
                ratio: r.ratio,
                mean_error: None,
                runs: 0,
                failures: 0,
                bound_violations: 0,
            });
            errors.push(Vec::new());
            out.len() - 1
        });
        out[i].runs += 1;
        match r.error {
            Some(e) => {
                errors[i].push(e);
                if r.bound.is_some_and(|b| e > b) {
                    out[i].bound_violations += 1;
                }
            }
            None => out[i].failures += 1,
        }
    }
    for (s, e) in out.iter_mut().zip(&errors) {
        s.mean_error = mean(e);
    }
    out
}

pub fn format_summary(summary: &[SummaryRow]) -> String {
    let mut s = String::new();
    writeln!(
        s,
        "{:<24} {:<12} {:>6} {:>14} {:>5} {:>6} {:>6}",
        "experiment", "sampler", "ratio", "mean error", "runs", "failed", "viol"
    )
    .expect("string write");
    for r in summary {
        let err = r.mean_error.map_or_else(|| "n/a".into(), |e| format!("{e:.6e}"));
        writeln!(
            s,
            "{:<24} {:<12} {:>6.3} {:>14} {:>5} {:>6} {:>6}",
            r.experiment, r.sampler, r.ratio, err, r.runs, r.failures, r.bound_violations
        )
        .expect("string write");
    }
    s
}

/// Correlation of `(log sigma_s(A_M), log error)` over rows where both are
/// positive.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationSummary {
    pub pearson: Option<f64>,
    pub used: usize,
    /// Rows with zero `sigma_s(A_M)` or error, left out of the logs.
    pub excluded: usize,
}

pub fn log_correlation<'a>(rows: impl IntoIterator<Item = &'a ResultRow>) -> CorrelationSummary {
    let (mut xs, mut ys, mut excluded) = (Vec::new(), Vec::new(), 0);
    for r in rows {
        match (r.sigma_s_am, r.error) {
            (Some(s), Some(e)) if s > 0.0 && e > 0.0 => {
                xs.push(s.ln());
                ys.push(e.ln());
            }
            _ => excluded += 1,
        }
    }
    CorrelationSummary {
        pearson: pearson(&xs, &ys),
        used: xs.len(),
        excluded,
    }
}

/// Vega-Lite description: mean error against sample ratio, one line per
/// sampler (faceted by experiment).
pub fn ratio_plot(summary: &[SummaryRow], title: &str, log_y: bool) -> serde_json::Value {
    let values: Vec<_> = summary
        .iter()
        .filter_map(|r| {
            r.mean_error.map(|e| {
                json!({"experiment": r.experiment, "sampler": r.sampler, "ratio": r.ratio, "error": e})
            })
        })
        .collect();
    json!({
        "$schema": "https://vega.github.io/schema/vega-lite/v5.json",
        "title": title,
        "data": {"values": values},
        "facet": {"column": {"field": "experiment", "type": "nominal"}},
        "spec": {
            "mark": {"type": "line", "point": true},
            "encoding": {
                "x": {"field": "ratio", "type": "quantitative", "title": "sample ratio"},
                "y": {
                    "field": "error",
                    "type": "quantitative",
                    "title": "approximation error",
                    "scale": {"type": if log_y { "log" } else { "linear" }}
                },
                "color": {"field": "sampler", "type": "nominal"}
            }
        }
    })
}

/// Vega-Lite description: log-log scatter of error against `sigma_s(A_M)`.
pub fn singularity_plot(rows: &[ResultRow], title: &str) -> serde_json::Value {
    let values: Vec<_> = rows
        .iter()
        .filter_map(|r| match (r.sigma_s_am, r.error) {
            (Some(s), Some(e)) if s > 0.0 && e > 0.0 => {
                Some(json!({"sampler": r.sampler, "sigma_s_am": s, "error": e}))
            }
            _ => None,
        })
        .collect();
    json!({
        "$schema": "https://vega.github.io/schema/vega-lite/v5.json",
        "title": title,
        "data": {"values": values},
        "mark": "point",
        "encoding": {
            "x": {"field": "sigma_s_am", "type": "quantitative", "scale": {"type": "log"}, "title": "sigma_s(A_M)"},
            "y": {"field": "error", "type": "quantitative", "scale": {"type": "log"}, "title": "approximation error"},
            "color": {"field": "sampler", "type": "nominal"}
        }
    })
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), BenchError> {
    std::fs::write(path, contents).map_err(|e| BenchError::Io(format!("{}: {e}", path.display())))
}
