//! CSV output of the benchmark harness.
//!
//! * records: `algo,replication,n,sq_error`, one row per checkpoint, sorted
//!   by replication then estimator order;
//! * summary: `algo,n,mean,median,q1,q3,min,max,diverged`, one row per
//!   estimator and checkpoint;
//! * tuning: `c_gamma,gamma_exp,mean_sq_error`, empty score for a grid
//!   point that diverged.

use std::io::Write;

use stochnewton_core::bench::{summarize, BenchRecord, Summary, TuningOutcome};
use stochnewton_core::Algorithm;

pub fn write_records<W: Write>(sink: W, records: &[BenchRecord], order: &[Algorithm]) -> csv::Result<()> {
    let rank = |a: Algorithm| order.iter().position(|&b| b == a).unwrap_or(usize::MAX);
    let mut sorted: Vec<&BenchRecord> = records.iter().collect();
    sorted.sort_by_key(|r| (r.replication, rank(r.algorithm)));
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["algo", "replication", "n", "sq_error"])?;
    for r in sorted {
        for (n, e) in &r.checkpoints {
            w.write_record([r.algorithm.name(), &r.replication.to_string(), &n.to_string(), &e.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Summaries at every checkpoint in `checkpoints`.
pub fn summaries(records: &[BenchRecord], checkpoints: &[u64]) -> stochnewton_core::Result<Vec<Summary>> {
    let mut out = Vec::new();
    for &n in checkpoints {
        out.extend(summarize(records, n)?);
    }
    out.sort_by_key(|s| (s.algorithm, s.n));
    Ok(out)
}

pub fn write_summary<W: Write>(sink: W, rows: &[Summary]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["algo", "n", "mean", "median", "q1", "q3", "min", "max", "diverged"])?;
    for s in rows {
        w.write_record([
            s.algorithm.name().to_string(),
            s.n.to_string(),
            s.mean.to_string(),
            s.median.to_string(),
            s.q1.to_string(),
            s.q3.to_string(),
            s.min.to_string(),
            s.max.to_string(),
            s.diverged.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_tuning<W: Write>(sink: W, outcome: &TuningOutcome) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["c_gamma", "gamma_exp", "mean_sq_error"])?;
    for (s, score) in &outcome.scores {
        let score = score.map(|v| v.to_string()).unwrap_or_default();
        w.write_record([s.c_gamma().to_string(), s.exponent().to_string(), score])?;
    }
    w.flush()?;
    Ok(())
}
