//! Correlation and gap statistics of sorted value sequences.
//!
//! * [`ell_correlation`]: the sharp statistic
//!   `T_l = #{(i_1..i_l) pairwise distinct, i_j <= M,
//!   Lambda_{i_j} - Lambda_{i_1} in I_j} / M`, Poisson target `vol(I)`.
//! * [`gap_sequence`], [`ks_against_exponential`], [`long_gaps`]: nearest
//!   neighbour spacings.
//! * [`smooth`]: the smoothed statistic and its Hardy-Littlewood expectation.

mod gaps;
mod sharp;
pub mod smooth;

pub use gaps::{gap_sequence, ks_against_exponential, long_gaps, GapSummary, LongGaps};
pub use sharp::{
    ell_correlation, ell_correlation_bruteforce, ell_correlation_bruteforce_with_cap,
    CorrelationRequest, CorrelationResult, DEFAULT_BRUTE_FORCE_CAP,
};
pub use smooth::{
    hl_expectation, shell_schedule, smoothed_correlation, HlEstimate, ShellOptions, SmoothingKernels,
    VariableWeight, WindowWeight,
};

use crate::error::{Error, Result};

pub(crate) fn check_sorted(values: &[f64]) -> Result<()> {
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::invalid("sequence contains NaN"));
    }
    if values.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::invalid("sequence must be nondecreasing"));
    }
    Ok(())
}
