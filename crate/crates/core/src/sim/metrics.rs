//! Scalar summaries of a run.

use super::run::{FilterTrace, RunLog};
use super::scenario::FilterKind;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryOptions {
    pub att_threshold_deg: f64,
    pub pos_threshold_m: f64,
    /// Updates ignored before checking that the Lyapunov value decreases.
    pub lyapunov_skip: usize,
}

impl Default for SummaryOptions {
    fn default() -> Self {
        Self { att_threshold_deg: 1.0, pos_threshold_m: 0.1, lyapunov_skip: 5 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterSummary {
    pub kind: FilterKind,
    pub final_att_deg: f64,
    pub final_pos_m: f64,
    pub final_log_norm: f64,
    pub max_att_deg: f64,
    pub time_to_att: Option<f64>,
    pub time_to_pos: Option<f64>,
    pub diverged: bool,
    /// Largest `V_{n+1} − V_n` once past the skipped updates; `None` for
    /// filters without a Lyapunov trace.
    pub max_lyapunov_increase: Option<f64>,
    pub failure: Option<(f64, String)>,
}

/// Earliest time after which every later value stays below `threshold`.
pub fn time_to_threshold(t: &[f64], values: &[f64], threshold: f64) -> Option<f64> {
    let mut since = None;
    for (&t, &v) in t.iter().zip(values) {
        if v < threshold {
            since.get_or_insert(t);
        } else {
            since = None;
        }
    }
    since
}

/// Position error above ten times its initial value at any time after the
/// first update, or a numerical failure. An exact initial position gives
/// no reference scale, so only failures count then.
pub fn diverged(trace: &FilterTrace) -> bool {
    if trace.failure.is_some() {
        return true;
    }
    let initial = trace.rows.first().map_or(0.0, |r| r.err_pos_m);
    if !(initial > 0.0) {
        return false;
    }
    let Some(first) = trace.rows.iter().position(|r| r.updated) else { return false };
    trace.rows[first..].iter().any(|r| !(r.err_pos_m <= 10.0 * initial))
}

/// Largest increase between consecutive post-update Lyapunov values after
/// skipping the first `skip` updates. Negative when strictly decreasing.
pub fn max_lyapunov_increase(values: &[(f64, f64)], skip: usize) -> Option<f64> {
    let tail = values.get(skip..)?;
    tail.windows(2).map(|w| w[1].1 - w[0].1).reduce(f64::max)
}

/// True when `V` never grows by more than roundoff after the skipped updates.
pub fn lyapunov_non_increasing(values: &[(f64, f64)], skip: usize) -> bool {
    values.get(skip..).is_some_and(|tail| tail.windows(2).all(|w| w[1].1 <= w[0].1 * (1.0 + 1e-9) + 1e-12))
}

pub fn summarize(log: &RunLog, opts: &SummaryOptions) -> Vec<FilterSummary> {
    log.filters
        .iter()
        .map(|f| {
            let att: Vec<f64> = f.rows.iter().map(|r| r.err_att_deg).collect();
            let pos: Vec<f64> = f.rows.iter().map(|r| r.err_pos_m).collect();
            let last = f.rows.last();
            FilterSummary {
                kind: f.kind,
                final_att_deg: last.map_or(f64::NAN, |r| r.err_att_deg),
                final_pos_m: last.map_or(f64::NAN, |r| r.err_pos_m),
                final_log_norm: last.map_or(f64::NAN, |r| r.err_log_norm),
                max_att_deg: att.iter().copied().fold(0.0, f64::max),
                time_to_att: time_to_threshold(&log.t, &att, opts.att_threshold_deg),
                time_to_pos: time_to_threshold(&log.t, &pos, opts.pos_threshold_m),
                diverged: diverged(f),
                max_lyapunov_increase: if f.lyapunov.is_empty() {
                    None
                } else {
                    max_lyapunov_increase(&f.lyapunov, opts.lyapunov_skip)
                },
                failure: f.failure.clone(),
            }
        })
        .collect()
}
