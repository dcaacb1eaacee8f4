//! Invertibility of the MA part and recovery of innovations from data:
//! `ε_t = Σ_{r≤t} ϑ_p(t,r) y_r - Σ_{r≤t} ϑ(t,r) φ(r)`.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::green::{theta_p_from_row, XiRow};
use crate::moments::{accumulate, check_row_time, stability_report, ProbePoint};
use crate::path::{CoefficientPath, MaMirror, Time};
use crate::tail::{TailStep, TruncationInfo, TruncationPolicy};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InvertibilityReport {
    pub t: Time,
    /// `(s, ϑ(t, s))` along the probes.
    pub probes: Vec<(Time, f64)>,
    pub decays: bool,
    /// Partial `Σ |ϑ(t, r)|`.
    pub theta_abs_sum: f64,
    pub converged: bool,
}

/// Mirrors [`stability_report`] on the MA-side Green function.
pub fn invertibility_report<P: CoefficientPath + ?Sized>(
    path: &P,
    t: Time,
    probes: &[Time],
    policy: &TruncationPolicy,
) -> Result<InvertibilityReport> {
    let rep = stability_report(&MaMirror(path), t, probes, policy)?;
    Ok(InvertibilityReport {
        t,
        probes: rep.probes.iter().map(|p: &ProbePoint| (p.s, p.xi)).collect(),
        decays: rep.decays,
        theta_abs_sum: rep.abs_sum,
        converged: rep.abs_sum_converged,
    })
}

/// Recovered innovations `ε̂_r` for `r = origin, origin + 1, ...`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RecoveredErrors {
    pub origin: Time,
    pub values: Vec<f64>,
    /// Longest history any single `ε̂_t` needed.
    pub required_history: usize,
    /// Truncation of the sum for the last recovered time.
    pub truncation: TruncationInfo,
}

impl RecoveredErrors {
    pub fn get(&self, t: Time) -> Option<f64> {
        usize::try_from(t - self.origin).ok().and_then(|i| self.values.get(i).copied())
    }

    pub fn end(&self) -> Time {
        self.origin + self.values.len() as Time - 1
    }
}

/// Number of lags `L(t)` that carry the inversion sum at `t`, and the
/// truncation details. `row` receives `ϑ(t, t - j)` for the lags walked.
fn inversion_length<P: CoefficientPath + ?Sized>(
    path: &P,
    t: Time,
    policy: &TruncationPolicy,
    row: &mut Vec<f64>,
) -> Result<(usize, TruncationInfo)> {
    row.clear();
    let mirror = MaMirror(path);
    let mut walk = XiRow::new(&mirror, t);
    // Term j needs ϑ(t, t-j+m) for m <= p, all already in `row`.
    let partial = accumulate(*policy, |_| {
        let (r, v) = walk.next().expect("endless row");
        check_row_time(path, r)?;
        row.push(v);
        let tp = theta_p_from_row(path, t, r, row);
        Ok((0.0, tp.abs().max((v * path.drift(r)).abs())))
    })?;
    match partial.step {
        TailStep::Converged => {
            let info = partial.info();
            Ok((info.terms_used.max(1), info))
        }
        _ => Err(Error::NotInvertible { t }),
    }
}

/// Recovers `ε̂_t` from observations `history[k] = y_{start+k}`. Only times
/// with enough history for the truncated sum are returned.
pub fn recover_errors<P: CoefficientPath + ?Sized>(
    path: &P,
    history: &[f64],
    start: Time,
    policy: &TruncationPolicy,
) -> Result<RecoveredErrors> {
    let n = history.len();
    if n == 0 {
        return Err(Error::InsufficientHistory { required: 1, available: 0 });
    }
    let end = start + n as Time - 1;
    let mut row = Vec::new();
    let mut values = Vec::new();
    let mut origin = None;
    let mut required = 0;
    let mut last_info = None;
    for t in start..=end {
        let (len, info) = inversion_length(path, t, policy, &mut row)?;
        required = required.max(len);
        last_info = Some(info);
        let avail = (t - start + 1) as usize;
        if avail < len {
            if origin.is_some() {
                // A later time needing more history than an earlier one
                // would leave a hole; stop the contiguous run here.
                return Err(Error::InsufficientHistory { required: len, available: avail });
            }
            continue;
        }
        origin.get_or_insert(t);
        let mut e = 0.0;
        for j in 0..len {
            let r = t - j as Time;
            e += theta_p_from_row(path, t, r, &row) * history[(r - start) as usize] - row[j] * path.drift(r);
        }
        values.push(e);
    }
    match origin {
        Some(origin) => Ok(RecoveredErrors {
            origin,
            values,
            required_history: required,
            truncation: last_info.expect("at least one time"),
        }),
        None => Err(Error::InsufficientHistory { required, available: n }),
    }
}
