//! Scenario-driven simulations comparing invariant and conventional filters
//! on identical data.

mod analysis;
mod csv;
mod metrics;
mod run;
mod scenario;
mod truth;

pub use analysis::deyst_price_report;
pub use csv::{header, write_csv};
pub use metrics::{
    diverged, lyapunov_non_increasing, max_lyapunov_increase, summarize, time_to_threshold, FilterSummary,
    SummaryOptions,
};
pub use run::{
    attitude_error_deg, position, position_error, rotation_shift, run, run_shifted, FilterRow, FilterTrace, RunLog,
    Shift,
};
pub use scenario::{CarConfig, CarObservation, FilterKind, ModelKind, NavConfig, Scenario, Trajectory};
pub use truth::{car_circle, nav_circle, reintegration_error, Truth};
