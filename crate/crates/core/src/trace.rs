//! Per-step trace rows, their CSV / JSON-lines encodings, and re-auditing of
//! a trace file.
//!
//! CSV columns, in order:
//!
//! ```text
//! t,chosen_arm,reward,explored,active_set_size,inst_regret,cum_regret,fairness_violation,coverage_violation
//! ```
//!
//! followed, when interval output is enabled, by `a_0,b_0,...,a_{k-1},b_{k-1}`
//! and `mu_0,...,mu_{k-1}`. Booleans are `0`/`1`; floats use the shortest
//! representation that round-trips.

use std::io::{BufRead, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::TraceFormat;
use crate::error::{Error, Result};
use crate::metrics::StepRecord;

pub const BASE_COLUMNS: [&str; 9] = [
    "t",
    "chosen_arm",
    "reward",
    "explored",
    "active_set_size",
    "inst_regret",
    "cum_regret",
    "fairness_violation",
    "coverage_violation",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: u64,
    pub chosen_arm: usize,
    pub reward: f64,
    pub explored: bool,
    pub active_set_size: usize,
    pub inst_regret: f64,
    pub cum_regret: f64,
    pub fairness_violation: bool,
    pub coverage_violation: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Vec<(f64, f64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub means: Option<Vec<f64>>,
}

impl TraceRow {
    pub fn from_record(rec: &StepRecord, cum_regret: f64, with_intervals: bool) -> Self {
        TraceRow {
            t: rec.t,
            chosen_arm: rec.decision.chosen_arm,
            reward: rec.reward,
            explored: rec.decision.explored,
            active_set_size: rec.decision.active_set.len(),
            inst_regret: rec.inst_regret,
            cum_regret,
            fairness_violation: rec.fairness_violation,
            coverage_violation: rec.coverage_violation,
            bounds: with_intervals
                .then(|| rec.decision.intervals.iter().map(|iv| (iv.lower, iv.upper)).collect()),
            means: with_intervals.then(|| rec.oracle_means.clone()),
        }
    }

    pub fn has_violation(&self) -> bool {
        self.fairness_violation || self.coverage_violation
    }
}

/// Row filter: every `thin`-th step plus the first, the last and every violation.
pub fn keep_row(t: u64, horizon: u64, thin: u64, violation: bool) -> bool {
    violation || t == 1 || t == horizon || t.is_multiple_of(thin.max(1))
}

pub fn header(num_arms: Option<usize>) -> Vec<String> {
    let mut cols: Vec<String> = BASE_COLUMNS.iter().map(|s| s.to_string()).collect();
    if let Some(k) = num_arms {
        for i in 0..k {
            cols.push(format!("a_{i}"));
            cols.push(format!("b_{i}"));
        }
        cols.extend((0..k).map(|i| format!("mu_{i}")));
    }
    cols
}

fn flag(b: bool) -> String {
    if b { "1" } else { "0" }.to_string()
}

pub fn write_trace<W: Write>(out: W, rows: &[TraceRow], format: TraceFormat) -> Result<()> {
    match format {
        TraceFormat::Csv => write_csv(out, rows),
        TraceFormat::Json => write_jsonl(out, rows),
    }
}

fn write_csv<W: Write>(out: W, rows: &[TraceRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let k = rows.first().and_then(|r| r.bounds.as_ref().map(Vec::len));
    w.write_record(header(k))?;
    for r in rows {
        let mut rec = vec![
            r.t.to_string(),
            r.chosen_arm.to_string(),
            r.reward.to_string(),
            flag(r.explored),
            r.active_set_size.to_string(),
            r.inst_regret.to_string(),
            r.cum_regret.to_string(),
            flag(r.fairness_violation),
            flag(r.coverage_violation),
        ];
        if let (Some(bounds), Some(means)) = (&r.bounds, &r.means) {
            for (a, b) in bounds {
                rec.push(a.to_string());
                rec.push(b.to_string());
            }
            rec.extend(means.iter().map(f64::to_string));
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

fn write_jsonl<W: Write>(mut out: W, rows: &[TraceRow]) -> Result<()> {
    for r in rows {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

fn parse_field<T: std::str::FromStr>(rec: &csv::StringRecord, idx: usize, name: &str) -> Result<T> {
    rec.get(idx)
        .ok_or_else(|| Error::Trace(format!("missing column {name}")))?
        .parse()
        .map_err(|_| Error::Trace(format!("bad value in column {name}: {:?}", rec.get(idx))))
}

fn parse_flag(rec: &csv::StringRecord, idx: usize, name: &str) -> Result<bool> {
    match rec.get(idx) {
        Some("1") | Some("true") => Ok(true),
        Some("0") | Some("false") => Ok(false),
        other => Err(Error::Trace(format!("bad flag in column {name}: {other:?}"))),
    }
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<TraceRow>> {
    let mut rdr = csv::Reader::from_reader(input);
    let head = rdr.headers()?.clone();
    if head.len() < BASE_COLUMNS.len() || head.iter().zip(BASE_COLUMNS).any(|(a, b)| a != b) {
        return Err(Error::Trace(format!("unexpected header {head:?}")));
    }
    let extra = head.len() - BASE_COLUMNS.len();
    if !extra.is_multiple_of(3) {
        return Err(Error::Trace("interval columns must come in (a, b, mu) triples per arm".into()));
    }
    let k = extra / 3;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let (bounds, means) = if k > 0 {
            let base = BASE_COLUMNS.len();
            let mut bounds = Vec::with_capacity(k);
            for i in 0..k {
                bounds.push((
                    parse_field(&rec, base + 2 * i, "a")?,
                    parse_field(&rec, base + 2 * i + 1, "b")?,
                ));
            }
            let means = (0..k)
                .map(|i| parse_field(&rec, base + 2 * k + i, "mu"))
                .collect::<Result<Vec<f64>>>()?;
            (Some(bounds), Some(means))
        } else {
            (None, None)
        };
        rows.push(TraceRow {
            t: parse_field(&rec, 0, "t")?,
            chosen_arm: parse_field(&rec, 1, "chosen_arm")?,
            reward: parse_field(&rec, 2, "reward")?,
            explored: parse_flag(&rec, 3, "explored")?,
            active_set_size: parse_field(&rec, 4, "active_set_size")?,
            inst_regret: parse_field(&rec, 5, "inst_regret")?,
            cum_regret: parse_field(&rec, 6, "cum_regret")?,
            fairness_violation: parse_flag(&rec, 7, "fairness_violation")?,
            coverage_violation: parse_flag(&rec, 8, "coverage_violation")?,
            bounds,
            means,
        });
    }
    Ok(rows)
}

pub fn read_jsonl<R: BufRead>(input: R) -> Result<Vec<TraceRow>> {
    let mut rows = Vec::new();
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        rows.push(serde_json::from_str(&line)?);
    }
    Ok(rows)
}

/// Reads a trace, choosing the decoder from the file extension when
/// `format` is not given.
pub fn read_trace_file(path: &Path, format: Option<TraceFormat>) -> Result<Vec<TraceRow>> {
    let format = format.unwrap_or(match path.extension().and_then(|e| e.to_str()) {
        Some("jsonl") | Some("json") => TraceFormat::Json,
        _ => TraceFormat::Csv,
    });
    let file = std::io::BufReader::new(std::fs::File::open(path)?);
    match format {
        TraceFormat::Csv => read_csv(file),
        TraceFormat::Json => read_jsonl(file),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub rows: usize,
    /// Rows are `t = 1, 2, ..` with no gaps.
    pub complete: bool,
    pub monotone_t: bool,
    /// Worst disagreement between `cum_regret` and the prefix sum of
    /// `inst_regret` (complete traces), or worst negative increment beyond
    /// the row's own regret (thinned traces).
    pub cum_regret_error: f64,
    pub cum_regret_consistent: bool,
    pub fairness_violations: usize,
    pub coverage_violations: usize,
    /// Rows whose coverage flag disagrees with the stored bounds and means.
    pub coverage_flag_mismatches: Option<usize>,
    /// Rows flagged unfair but fully covered; always zero for Fair-UCBe.
    pub fairness_without_coverage: usize,
    pub ok: bool,
}

const CUM_TOL: f64 = 1e-9;

/// Re-checks a trace from its rows alone.
pub fn audit_rows(rows: &[TraceRow]) -> AuditReport {
    let monotone_t = rows.windows(2).all(|w| w[0].t < w[1].t);
    let complete = rows.iter().enumerate().all(|(i, r)| r.t == i as u64 + 1);

    let mut cum_err: f64 = 0.0;
    if complete {
        let mut sum = 0.0;
        for r in rows {
            sum += r.inst_regret;
            cum_err = cum_err.max((r.cum_regret - sum).abs());
        }
    } else {
        let mut prev = 0.0;
        for r in rows {
            cum_err = cum_err.max(prev + r.inst_regret - r.cum_regret);
            prev = r.cum_regret;
        }
    }
    let scale = rows.last().map_or(1.0, |r| r.cum_regret.abs().max(1.0));
    let cum_regret_consistent = cum_err <= CUM_TOL * scale;

    let coverage_flag_mismatches = rows.first().and_then(|r| r.bounds.as_ref()).map(|_| {
        rows.iter()
            .filter(|r| match (&r.bounds, &r.means) {
                (Some(b), Some(m)) => {
                    let covered = b.iter().zip(m).all(|(&(lo, hi), &mu)| lo <= mu && mu <= hi);
                    covered == r.coverage_violation
                }
                _ => true,
            })
            .count()
    });

    let fairness_violations = rows.iter().filter(|r| r.fairness_violation).count();
    let coverage_violations = rows.iter().filter(|r| r.coverage_violation).count();
    let fairness_without_coverage =
        rows.iter().filter(|r| r.fairness_violation && !r.coverage_violation).count();
    let ok = monotone_t && cum_regret_consistent && coverage_flag_mismatches.unwrap_or(0) == 0;

    AuditReport {
        rows: rows.len(),
        complete,
        monotone_t,
        cum_regret_error: cum_err.max(0.0),
        cum_regret_consistent,
        fairness_violations,
        coverage_violations,
        coverage_flag_mismatches,
        fairness_without_coverage,
        ok,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(t: u64, inst: f64, cum: f64) -> TraceRow {
        TraceRow {
            t,
            chosen_arm: 1,
            reward: 0.25,
            explored: t % 2 == 0,
            active_set_size: 2,
            inst_regret: inst,
            cum_regret: cum,
            fairness_violation: false,
            coverage_violation: false,
            bounds: Some(vec![(0.0, 1.0), (0.1, 0.3)]),
            means: Some(vec![0.6, 0.2]),
        }
    }

    #[test]
    fn csv_round_trip_and_audit() {
        let rows = vec![row(1, 0.1, 0.1), row(2, 0.2, 0.1 + 0.2), row(3, 0.0, 0.1 + 0.2)];
        let mut buf = Vec::new();
        write_trace(&mut buf, &rows, TraceFormat::Csv).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,chosen_arm,reward,explored,active_set_size,inst_regret,cum_regret,fairness_violation,coverage_violation,a_0,b_0,a_1,b_1,mu_0,mu_1\n"));
        let back = read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, rows);
        let rep = audit_rows(&back);
        assert!(rep.ok && rep.complete, "{rep:?}");
        assert_eq!(rep.coverage_flag_mismatches, Some(0));
    }

    #[test]
    fn jsonl_round_trip() {
        let mut rows = vec![row(1, 0.1, 0.1)];
        rows[0].bounds = None;
        rows[0].means = None;
        let mut buf = Vec::new();
        write_trace(&mut buf, &rows, TraceFormat::Json).unwrap();
        assert_eq!(read_jsonl(buf.as_slice()).unwrap(), rows);
    }

    #[test]
    fn audit_catches_tampering() {
        let mut rows = vec![row(1, 0.1, 0.1), row(2, 0.2, 0.3)];
        rows[1].cum_regret = 0.5;
        assert!(!audit_rows(&rows).cum_regret_consistent);

        let mut rows = vec![row(1, 0.1, 0.1)];
        rows[0].coverage_violation = true;
        assert_eq!(audit_rows(&rows).coverage_flag_mismatches, Some(1));

        let rows = vec![row(2, 0.1, 0.1), row(1, 0.1, 0.2)];
        assert!(!audit_rows(&rows).monotone_t);
    }

    #[test]
    fn thinning_keeps_violations() {
        assert!(keep_row(37, 1000, 100, true));
        assert!(!keep_row(37, 1000, 100, false));
        assert!(keep_row(1, 1000, 100, false));
        assert!(keep_row(1000, 1000, 7, false));
        assert!(keep_row(300, 1000, 100, false));
    }

    #[test]
    fn rejects_wrong_header() {
        assert!(read_csv("t,arm\n1,0\n".as_bytes()).is_err());
    }
}
