//! Shifted log transform `y = ln(x + delta)` with `delta` chosen so the
//! transformed sample has zero moment skewness.

use thiserror::Error;

use crate::scalar::{mean, Scalar};

/// Upper end beyond which the search bracket is not expanded.
pub const BRACKET_CAP: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransformError {
    #[error("sample needs at least 3 values with non-zero variance")]
    DegenerateSample,
    #[error("shift must be positive")]
    NonPositiveShift,
    #[error("value {0} is negative")]
    NegativeValue(f64),
    #[error(
        "skewness keeps the same sign over delta in [{low}, {high}]; \
         closest endpoint delta = {best_delta} with skewness {best_skewness}"
    )]
    NoSignChange {
        low: f64,
        high: f64,
        best_delta: f64,
        best_skewness: f64,
    },
}

/// Outcome of the shift search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformSpec<S> {
    pub delta: S,
    /// Skewness left in the transformed sample.
    pub achieved_skewness: S,
    /// Bracket actually searched, after any expansion.
    pub bracket_used: (S, S),
    pub iterations: usize,
    /// Whether `|achieved_skewness|` reached the requested tolerance.
    pub converged: bool,
}

/// Moment coefficient of skewness `g1 = m3 / m2^(3/2)` (central moments with divisor n).
pub fn sample_skewness<S: Scalar>(values: &[S]) -> Result<S, TransformError> {
    if values.len() < 3 {
        return Err(TransformError::DegenerateSample);
    }
    let n = S::of_usize(values.len());
    let m = mean(values);
    let (mut m2, mut m3) = (S::zero(), S::zero());
    for &v in values {
        let d = v - m;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
    }
    m2 /= n;
    m3 /= n;
    if !(m2 > S::zero()) || !m2.is_finite() {
        return Err(TransformError::DegenerateSample);
    }
    Ok(m3 / (m2 * m2.sqrt()))
}

pub fn log_shift_transform<S: Scalar>(values: &[S], delta: S) -> Result<Vec<S>, TransformError> {
    if !(delta > S::zero()) {
        return Err(TransformError::NonPositiveShift);
    }
    values
        .iter()
        .map(|&v| {
            if v < S::zero() {
                Err(TransformError::NegativeValue(v.as_f64()))
            } else {
                Ok((v + delta).ln())
            }
        })
        .collect()
}

/// Finds `delta` with `|skewness(ln(x + delta))| <= tolerance` over all values.
///
/// Bisection runs on `ln(delta)`; when the skewness has the same sign at both
/// ends the upper end is doubled up to [`BRACKET_CAP`].
pub fn zero_skewness_delta<S: Scalar>(
    values: &[S],
    bracket: (S, S),
    tolerance: S,
    max_iterations: usize,
) -> Result<TransformSpec<S>, TransformError> {
    check_sample(values)?;
    solve_zero_skewness(
        |delta| sample_skewness(&log_shift_transform(values, delta)?),
        bracket,
        tolerance,
        max_iterations,
    )
}

/// Like [`zero_skewness_delta`], but symmetrizes the group means of the
/// transformed values instead of the pooled values.
pub fn zero_skewness_delta_for_means<S: Scalar>(
    groups: &[Vec<S>],
    bracket: (S, S),
    tolerance: S,
    max_iterations: usize,
) -> Result<TransformSpec<S>, TransformError> {
    if groups.len() < 3 || groups.iter().any(Vec::is_empty) {
        return Err(TransformError::DegenerateSample);
    }
    for group in groups {
        if let Some(&v) = group.iter().find(|&&v| v < S::zero()) {
            return Err(TransformError::NegativeValue(v.as_f64()));
        }
    }
    solve_zero_skewness(
        |delta| {
            let means = groups
                .iter()
                .map(|g| log_shift_transform(g, delta).map(|t| mean(&t)))
                .collect::<Result<Vec<S>, _>>()?;
            sample_skewness(&means)
        },
        bracket,
        tolerance,
        max_iterations,
    )
}

fn check_sample<S: Scalar>(values: &[S]) -> Result<(), TransformError> {
    if let Some(&v) = values.iter().find(|&&v| v < S::zero()) {
        return Err(TransformError::NegativeValue(v.as_f64()));
    }
    let mut distinct: Vec<S> = values.to_vec();
    distinct.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(TransformError::DegenerateSample);
    }
    Ok(())
}

fn solve_zero_skewness<S, F>(
    skewness_at: F,
    bracket: (S, S),
    tolerance: S,
    max_iterations: usize,
) -> Result<TransformSpec<S>, TransformError>
where
    S: Scalar,
    F: Fn(S) -> Result<S, TransformError>,
{
    let (low, mut high) = bracket;
    if !(low > S::zero() && high > low) {
        return Err(TransformError::NonPositiveShift);
    }
    let cap = S::of(BRACKET_CAP).max(high);
    let g_low = skewness_at(low)?;
    let mut g_high = skewness_at(high)?;
    let spec = |delta, skew: S, high, iterations| TransformSpec {
        delta,
        achieved_skewness: skew,
        bracket_used: (low, high),
        iterations,
        converged: skew.abs() <= tolerance,
    };
    if g_low.abs() <= tolerance {
        return Ok(spec(low, g_low, high, 0));
    }
    while g_low.signum() == g_high.signum() && g_high.abs() > tolerance && high < cap {
        high = (high + high).min(cap);
        g_high = skewness_at(high)?;
    }
    if g_high.abs() <= tolerance {
        return Ok(spec(high, g_high, high, 0));
    }
    if g_low.signum() == g_high.signum() {
        let (best_delta, best_skewness) = if g_low.abs() <= g_high.abs() {
            (low, g_low)
        } else {
            (high, g_high)
        };
        return Err(TransformError::NoSignChange {
            low: low.as_f64(),
            high: high.as_f64(),
            best_delta: best_delta.as_f64(),
            best_skewness: best_skewness.as_f64(),
        });
    }

    let (mut lo, mut hi, mut g_lo) = (low, high, g_low);
    let mut best = if g_low.abs() <= g_high.abs() {
        (low, g_low)
    } else {
        (high, g_high)
    };
    let two = S::of(2.0);
    for iteration in 1..=max_iterations {
        let mut mid = (lo * hi).sqrt();
        if !(mid > lo && mid < hi) {
            mid = lo + (hi - lo) / two;
        }
        if !(mid > lo && mid < hi) {
            // Bracket is down to adjacent floats.
            return Ok(spec(best.0, best.1, high, iteration));
        }
        let g_mid = skewness_at(mid)?;
        if g_mid.abs() < best.1.abs() {
            best = (mid, g_mid);
        }
        if g_mid.abs() <= tolerance {
            return Ok(spec(mid, g_mid, high, iteration));
        }
        if g_mid.signum() == g_lo.signum() {
            lo = mid;
            g_lo = g_mid;
        } else {
            hi = mid;
        }
    }
    Ok(spec(best.0, best.1, high, max_iterations))
}
