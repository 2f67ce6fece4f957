// Negated comparisons below are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod filter;
pub mod integrate;
pub mod lie;
pub mod models;
pub mod observability;
pub mod sim;

pub use dynamics::{Dynamics, ErrorSide};
pub use error::{Error, Result};
pub use filter::{FilterState, InvariantEkf, NoiseSchedule, ObservationModel};
pub use lie::{AlgebraMatrix, GroupElement, GroupId, LieError, TangentVector};
