//! Expectations over `Z_M` and over integer boxes.
//!
//! Everything here is deterministic for a fixed seed: exhaustive sums run over
//! fixed index chunks and Monte-Carlo draws come from a fixed number of
//! ChaCha streams, with partial results merged in a fixed order.

mod correlation;
mod forms;
mod gy;
mod sampling;

pub use correlation::{
    calibrate_prefactor, correlation_check, correlation_lhs, sample_shift_tuples, tau_moment,
    tau_weight, tau_zero, CorrelationReport, ShiftRecord, TauConfig,
};
pub use forms::{
    lf_expectation, lf_expectation_exhaustive, lf_expectation_sampled, validate_form_system,
    FormLevel, FormViolation, LinearFormSystem, Rational,
};
pub use gy::{gy_product_ratio, GyOutcome, IntegerForms};
pub use sampling::{exhaustive_mean, ordered_sum, sample_mean, Estimate, EXHAUSTIVE_LIMIT, SHARDS};

use crate::measures::WindowFn;
use crate::{Error, Result};

/// Arithmetic mean over all of `Z_M`.
pub fn mean(wf: &WindowFn) -> f64 {
    ordered_sum(wf.values()) / wf.len() as f64
}

/// Mean over the representatives `n` with `pred(n)`.
pub fn conditional_mean(wf: &WindowFn, pred: impl Fn(u64) -> bool) -> Result<f64> {
    let n0 = wf.params().n_start;
    let (sum, count) = wf
        .values()
        .iter()
        .enumerate()
        .filter(|&(i, _)| pred(n0 + i as u64))
        .fold((0.0, 0usize), |(s, c), (_, &v)| (s + v, c + 1));
    if count == 0 {
        return Err(Error::Domain("predicate selects no representative".into()));
    }
    Ok(sum / count as f64)
}
