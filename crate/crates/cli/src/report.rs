//! Plain-text summaries and tables.

use std::fmt::Write;

use iekf::observability::WindowReport;
use iekf::sim::{FilterSummary, ModelKind, RunLog};

fn opt_time(t: Option<f64>) -> String {
    t.map_or_else(|| "never".into(), |t| format!("{t} s"))
}

pub fn summary(name: &str, log: &RunLog, summaries: &[FilterSummary]) -> String {
    let s = &log.scenario;
    let mut out = String::new();
    let _ = writeln!(out, "run: {name}");
    let model = match s.model {
        ModelKind::Car => "car",
        ModelKind::Nav => "nav",
    };
    let _ = writeln!(out, "model: {model}");
    let _ = writeln!(out, "duration: {} s, rows: {}", s.duration, log.t.len());
    let _ = writeln!(out, "seed: {}, noise: {}", s.seed, if s.inject_noise { "on" } else { "off" });
    for (f, trace) in summaries.iter().zip(&log.filters) {
        let _ = writeln!(out);
        let _ = writeln!(out, "[{}]", f.kind.name());
        let _ = writeln!(out, "final_att_deg: {:.6}", f.final_att_deg);
        let _ = writeln!(out, "final_pos_m: {:.6}", f.final_pos_m);
        let _ = writeln!(out, "final_log_norm: {:.6e}", f.final_log_norm);
        let _ = writeln!(out, "max_att_deg: {:.6}", f.max_att_deg);
        let _ = writeln!(out, "time_to_att_threshold: {}", opt_time(f.time_to_att));
        let _ = writeln!(out, "time_to_pos_threshold: {}", opt_time(f.time_to_pos));
        let _ = writeln!(out, "diverged: {}", f.diverged);
        if let Some(v) = f.max_lyapunov_increase {
            let _ = writeln!(out, "max_lyapunov_increase: {v:.3e}");
        }
        let _ = writeln!(out, "min_p_eigenvalue: {:.3e}", trace.min_p_eigenvalue);
        let _ = writeln!(out, "skipped_updates: {}", trace.skipped_updates);
        match &f.failure {
            Some((t, msg)) => {
                let _ = writeln!(out, "failure: t = {t} s: {msg}");
            }
            None => {
                let _ = writeln!(out, "failure: none");
            }
        }
    }
    out
}

pub fn window(r: &WindowReport, window: usize, floor: f64) -> String {
    let mark = |ok: bool| if ok { "met" } else { "FAILED" };
    let c = r.conditions_met;
    let mut out = String::new();
    let _ = writeln!(out, "horizon {} s to {} s, window of {window} epochs, floor {floor:e}", r.t0, r.t1);
    let _ = writeln!(out, "{:<34} {:>12} {:>12}  status", "condition", "lower", "upper");
    let rows = [
        ("i   eig(PhiᵀPhi) per epoch", r.phi_eigen_bounds.0, r.phi_eigen_bounds.1, c[0]),
        ("ii  Q on its column space", r.q_floor, f64::NAN, c[1]),
        ("iii eig(N)", r.n_floor, f64::NAN, c[2]),
        ("iv  reachability Gramian", r.gramian_bounds.0, r.gramian_bounds.1, c[3]),
        ("v   observability sum", r.obs_bounds.0, r.obs_bounds.1, c[4]),
    ];
    for (name, lo, hi, ok) in rows {
        let hi = if hi.is_nan() { "-".to_string() } else { format!("{hi:.3e}") };
        let _ = writeln!(out, "{name:<34} {lo:>12.3e} {hi:>12}  {}", mark(ok));
    }
    let _ = writeln!(out, "rank [H; H Phi] over the first epoch: {}", r.rank_h_hphi);
    let _ = writeln!(out, "all conditions met: {}", r.all_met());
    out
}
