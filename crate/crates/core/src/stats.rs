//! Descriptive statistics over short numeric series.
//!
//! These are the per-window temporal descriptors: moments and extremes,
//! the hopping count (a fluctuation measure), and longest monotone
//! stretch lengths (a tendency measure). Everything is generic over the
//! scalar type.

use thiserror::Error;

use crate::num::Real;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StatsError {
    #[error("operation requires a non-empty series")]
    EmptySeries,
}

/// Arithmetic mean. Summation runs in slice order.
pub fn mean<R: Real>(seq: &[R]) -> Result<R, StatsError> {
    if seq.is_empty() {
        return Err(StatsError::EmptySeries);
    }
    let sum = seq.iter().fold(R::zero(), |acc, &v| acc + v);
    Ok(sum / R::from_count(seq.len()))
}

/// Population standard deviation (divides by n, so a singleton has std 0).
pub fn population_std<R: Real>(seq: &[R]) -> Result<R, StatsError> {
    let m = mean(seq)?;
    let ss = seq
        .iter()
        .fold(R::zero(), |acc, &v| acc + (v - m) * (v - m));
    Ok((ss / R::from_count(seq.len())).sqrt())
}

/// Median; for even lengths, the mean of the two middle values.
pub fn median<R: Real>(seq: &[R]) -> Result<R, StatsError> {
    if seq.is_empty() {
        return Err(StatsError::EmptySeries);
    }
    let mut sorted = seq.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("series values are ordered"));
    let n = sorted.len();
    if n % 2 == 1 {
        Ok(sorted[n / 2])
    } else {
        Ok((sorted[n / 2 - 1] + sorted[n / 2]) / R::from_count(2))
    }
}

pub fn min<R: Real>(seq: &[R]) -> Result<R, StatsError> {
    seq.iter()
        .copied()
        .fold(None, |acc: Option<R>, v| match acc {
            Some(m) if m <= v => Some(m),
            _ => Some(v),
        })
        .ok_or(StatsError::EmptySeries)
}

pub fn max<R: Real>(seq: &[R]) -> Result<R, StatsError> {
    seq.iter()
        .copied()
        .fold(None, |acc: Option<R>, v| match acc {
            Some(m) if m >= v => Some(m),
            _ => Some(v),
        })
        .ok_or(StatsError::EmptySeries)
}

/// Number of positions whose value strictly exceeds the next one.
///
/// Sequences of length 0 or 1 have no adjacent pairs and count 0.
pub fn hopping_count<R: Real>(seq: &[R]) -> usize {
    seq.windows(2).filter(|w| w[0] > w[1]).count()
}

/// Lengths of the longest contiguous non-strictly increasing and
/// non-strictly decreasing runs, as `(inc_len, dec_len)`.
///
/// A constant stretch extends both kinds of run, so `[2,2,2]` yields
/// `(3, 3)`; a singleton yields `(1, 1)`.
pub fn longest_monotone_runs<R: Real>(seq: &[R]) -> Result<(usize, usize), StatsError> {
    if seq.is_empty() {
        return Err(StatsError::EmptySeries);
    }
    let mut best_inc = 1;
    let mut best_dec = 1;
    let mut cur_inc = 1;
    let mut cur_dec = 1;
    for w in seq.windows(2) {
        cur_inc = if w[1] >= w[0] { cur_inc + 1 } else { 1 };
        cur_dec = if w[1] <= w[0] { cur_dec + 1 } else { 1 };
        best_inc = best_inc.max(cur_inc);
        best_dec = best_dec.max(cur_dec);
    }
    Ok((best_inc, best_dec))
}

/// Lengths of the longest (not necessarily contiguous) non-strictly
/// increasing and decreasing subsequences, as `(inc_len, dec_len)`.
///
/// Alternative basis for the tendency descriptors, selected by
/// configuration; the default uses [`longest_monotone_runs`].
pub fn longest_monotone_subsequences<R: Real>(seq: &[R]) -> Result<(usize, usize), StatsError> {
    if seq.is_empty() {
        return Err(StatsError::EmptySeries);
    }
    Ok((
        longest_subsequence_by(seq, |a, b| b >= a),
        longest_subsequence_by(seq, |a, b| b <= a),
    ))
}

fn longest_subsequence_by<R: Real>(seq: &[R], admits: impl Fn(R, R) -> bool) -> usize {
    // O(n^2) DP; the series here are a handful of points per window.
    let mut len_at = vec![1usize; seq.len()];
    for i in 1..seq.len() {
        for j in 0..i {
            if admits(seq[j], seq[i]) {
                len_at[i] = len_at[i].max(len_at[j] + 1);
            }
        }
    }
    len_at.into_iter().max().unwrap_or(0)
}
