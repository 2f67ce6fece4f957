//! One row per integration step: time, truth, then a block per filter.

use std::io::{self, Write};

use nalgebra::{Matrix3, Vector3};

use crate::lie::{so3, GroupElement};
use crate::models::car::car_extract;
use crate::models::nav::nav_extract;

use super::run::RunLog;
use super::scenario::ModelKind;

fn state_columns(model: ModelKind) -> &'static [&'static str] {
    match model {
        ModelKind::Car => &["theta", "x", "y"],
        ModelKind::Nav => &["rx", "ry", "rz", "vx", "vy", "vz", "x", "y", "z"],
    }
}

/// Heading and position for the car; rotation vector, velocity and
/// position for nav.
fn state_values(model: ModelKind, g: &GroupElement) -> Vec<f64> {
    match model {
        ModelKind::Car => {
            let s = car_extract(g);
            vec![s.theta, s.x.x, s.x.y]
        }
        ModelKind::Nav => {
            let s = nav_extract(g);
            let r = so3::log(&s.r).unwrap_or_else(|_| rotation_vector_at_pi(&s.r));
            vec![r.x, r.y, r.z, s.v.x, s.v.y, s.v.z, s.x.x, s.x.y, s.x.z]
        }
    }
}

/// The log is undefined at angle π; any axis with that angle will do for
/// display.
fn rotation_vector_at_pi(r: &Matrix3<f64>) -> Vector3<f64> {
    let b = (r + Matrix3::identity()) * 0.5;
    let col = (0..3).max_by(|&i, &j| b[(i, i)].total_cmp(&b[(j, j)])).unwrap_or(0);
    b.column(col).normalize() * so3::angle(r)
}

pub fn header(log: &RunLog) -> Vec<String> {
    let model = log.scenario.model;
    let mut cols = vec!["t".to_string()];
    cols.extend(state_columns(model).iter().map(|c| format!("true_{c}")));
    for f in &log.filters {
        let n = f.kind.name();
        for c in ["err_att_deg", "err_pos_m", "err_log_norm", "trace_P", "updated"] {
            cols.push(format!("{n}_{c}"));
        }
        cols.extend(state_columns(model).iter().map(|c| format!("{n}_est_{c}")));
    }
    cols
}

pub fn write_csv<W: Write>(log: &RunLog, mut w: W) -> io::Result<()> {
    let model = log.scenario.model;
    let width = state_columns(model).len();
    writeln!(w, "{}", header(log).join(","))?;
    for (k, t) in log.t.iter().enumerate() {
        let mut fields = vec![format!("{t:?}")];
        fields.extend(state_values(model, &log.truth[k]).iter().map(|v| format!("{v:?}")));
        for f in &log.filters {
            let r = &f.rows[k];
            for v in [r.err_att_deg, r.err_pos_m, r.err_log_norm, r.trace_p] {
                fields.push(format!("{v:?}"));
            }
            fields.push(u8::from(r.updated).to_string());
            match &r.estimate {
                Some(g) => fields.extend(state_values(model, g).iter().map(|v| format!("{v:?}"))),
                None => fields.extend(std::iter::repeat_n("NaN".to_string(), width)),
            }
        }
        writeln!(w, "{}", fields.join(","))?;
    }
    Ok(())
}
