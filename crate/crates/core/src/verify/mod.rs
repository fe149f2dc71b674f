//! Interval certification of simple zeros.

mod interval;
mod krawczyk;

pub use interval::{format_bound, Interval, IntervalMatrix, IntervalVector};
pub use krawczyk::{
    interval_eval, interval_jacobian, krawczyk_verify, KrawczykOptions, VerifiedInclusion, VerifyError,
};
