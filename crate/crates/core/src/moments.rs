//! Wold–Cramér weights and unconditional moments of a time-varying ARMA
//! process, computed as truncated sums over the remote past:
//! `E y_t = Σ_{r≤t} ξ(t,r) φ(r)`, `Var y_t = Σ_{r≤t} ξ_q(t,r)² σ²(r)`.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::green::{XiQRow, XiRow};
use crate::path::{CoefficientPath, Time};
use crate::tail::{TailMonitor, TailStep, TruncationInfo, TruncationPolicy};

/// A truncated infinite sum.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MomentValue {
    pub value: f64,
    pub truncation: TruncationInfo,
}

pub(crate) struct Partial {
    pub value: f64,
    pub step: TailStep,
    pub monitor: TailMonitor,
}

/// Sums `term(j)` for `j = 0, 1, ...` until the monitor stops. `term`
/// returns `(contribution, monitored magnitude)`, or an error.
pub(crate) fn accumulate<F>(policy: TruncationPolicy, mut term: F) -> Result<Partial>
where
    F: FnMut(usize) -> Result<(f64, f64)>,
{
    policy.validate()?;
    let mut monitor = TailMonitor::new(policy);
    let mut value = 0.0;
    let mut j = 0;
    loop {
        let (c, mag) = term(j)?;
        j += 1;
        let step = monitor.observe(mag);
        if step != TailStep::Divergent {
            value += c;
        }
        if step != TailStep::Continue {
            return Ok(Partial { value, step, monitor });
        }
    }
}

impl Partial {
    pub(crate) fn info(&self) -> TruncationInfo {
        let converged = self.step == TailStep::Converged;
        TruncationInfo {
            terms_used: if converged { self.monitor.terms_used() } else { self.monitor.count() },
            terms_evaluated: self.monitor.count(),
            converged,
            decay_rate: self.monitor.decay_rate(),
            tail_bound: if converged { self.monitor_tol() } else { f64::INFINITY },
        }
    }

    fn monitor_tol(&self) -> f64 {
        // The monitored magnitudes of the confirming run are below tail_tol.
        self.monitor.tail_tol()
    }

    pub(crate) fn strict(self) -> Result<MomentValue> {
        if self.step == TailStep::Divergent {
            return Err(Error::NonSummable { terms: self.monitor.count() });
        }
        Ok(MomentValue { value: self.value, truncation: self.info() })
    }
}

/// Guards a row walk against leaving a finite coefficient window: the term
/// at `r` uses coefficients at times `>= r + 1`.
pub(crate) fn check_row_time<P: CoefficientPath + ?Sized>(path: &P, r: Time) -> Result<()> {
    let w = path.window();
    if r + 1 < w.lo {
        return Err(Error::OutOfWindow { t: r + 1, lo: w.lo, hi: w.hi });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WoldWeights {
    pub t: Time,
    /// `(r, ξ_q(t, r))` for `r = t, t-1, ...` down to the truncation point.
    pub weights: Vec<(Time, f64)>,
    pub truncation: TruncationInfo,
}

/// Weights `ξ_q(t, r)` of the innovations in the Wold–Cramér decomposition.
pub fn wold_weights<P: CoefficientPath + ?Sized>(path: &P, t: Time, policy: &TruncationPolicy) -> Result<WoldWeights> {
    let mut row = XiQRow::new(path, t);
    let mut weights = Vec::new();
    let partial = accumulate(*policy, |_| {
        let (r, _, xq) = row.next().expect("endless row");
        check_row_time(path, r)?;
        weights.push((r, xq));
        Ok((0.0, xq.abs()))
    })?;
    let keep = partial.monitor.terms_used().max(1);
    let truncation = partial.strict()?.truncation;
    if truncation.converged {
        weights.truncate(keep);
    }
    Ok(WoldWeights { t, weights, truncation })
}

/// `Σ_{r≤t} ξ(t, r) φ(r)`.
pub fn unconditional_mean<P: CoefficientPath + ?Sized>(
    path: &P,
    t: Time,
    policy: &TruncationPolicy,
) -> Result<MomentValue> {
    let mut row = XiRow::new(path, t);
    accumulate(*policy, |_| {
        let (r, x) = row.next().expect("endless row");
        check_row_time(path, r)?;
        let c = x * path.drift(r);
        Ok((c, x.abs().max(c.abs())))
    })?
    .strict()
}

/// `Σ_{r≤t} ξ_q(t, r)² σ²(r)`.
pub fn unconditional_variance<P: CoefficientPath + ?Sized>(
    path: &P,
    t: Time,
    policy: &TruncationPolicy,
) -> Result<MomentValue> {
    let mut row = XiQRow::new(path, t);
    accumulate(*policy, |_| {
        let (r, _, xq) = row.next().expect("endless row");
        check_row_time(path, r)?;
        Ok((xq * xq * path.sigma2(r), xq.abs()))
    })?
    .strict()
}

/// `γ_t(ℓ) = Σ_{r≤t-ℓ} ξ_q(t, r) ξ_q(t-ℓ, r) σ²(r)`.
pub fn autocovariance<P: CoefficientPath + ?Sized>(
    path: &P,
    t: Time,
    lag: usize,
    policy: &TruncationPolicy,
) -> Result<MomentValue> {
    let mut a = XiQRow::new(path, t);
    for _ in 0..lag {
        let (r, _, _) = a.next().expect("endless row");
        check_row_time(path, r)?;
    }
    let mut b = XiQRow::new(path, t - lag as Time);
    accumulate(*policy, |_| {
        let (r, _, qa) = a.next().expect("endless row");
        let (_, _, qb) = b.next().expect("endless row");
        check_row_time(path, r)?;
        Ok((qa * qb * path.sigma2(r), qa.abs().max(qb.abs())))
    })?
    .strict()
}

/// Values along one probe `s` of a stability report.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ProbePoint {
    pub s: Time,
    pub xi: f64,
    /// `ξ(t, s) φ(s)`.
    pub xi_drift: f64,
    /// `ξ_q(t, s)² σ²(s)`.
    pub xi_q_sq_sigma2: f64,
}

/// Numerical evidence for asymptotic stability at time `t`. Nothing here is
/// a proof: it reports partial sums and probe values against tolerances.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StabilityReport {
    pub t: Time,
    pub probes: Vec<ProbePoint>,
    /// Largest `|ξ(t, s)|` over the probes.
    pub xi_decay: f64,
    /// `|ξ(t, s)|` at the most remote probe is negligible relative to the
    /// probe maximum.
    pub decays: bool,
    /// Partial `Σ |ξ(t, r)|`.
    pub abs_sum: f64,
    pub abs_sum_converged: bool,
    /// Partial `Σ ξ_q(t, r)² σ²(r)`.
    pub sq_sum: f64,
    pub sq_sum_converged: bool,
    /// Drift and variance terms vanish at the remote probe (implications of
    /// absolute summability).
    pub drift_term_decays: bool,
    pub variance_term_decays: bool,
}

/// Relative size below which a probe value counts as decayed.
pub const DECAY_TOL: f64 = 1e-6;

pub fn stability_report<P: CoefficientPath + ?Sized>(
    path: &P,
    t: Time,
    probes: &[Time],
    policy: &TruncationPolicy,
) -> Result<StabilityReport> {
    if probes.windows(2).any(|w| w[1] >= w[0]) || probes.iter().any(|&s| s > t) {
        return Err(Error::invalid("probes must be decreasing and not later than t"));
    }
    let mut points = Vec::with_capacity(probes.len());
    let mut row = XiQRow::new(path, t);
    for &s in probes {
        check_row_time(path, s)?;
        let (_, x, xq) = row.by_ref().find(|(r, _, _)| *r == s).expect("endless row");
        points.push(ProbePoint { s, xi: x, xi_drift: x * path.drift(s), xi_q_sq_sigma2: xq * xq * path.sigma2(s) });
    }
    let xi_decay = points.iter().fold(0.0_f64, |a, p| a.max(p.xi.abs()));
    let rel = |v: f64, scale: f64| v.is_finite() && v <= DECAY_TOL * scale.max(1.0);
    let last = points.last().copied();
    let decays = last.is_some_and(|p| rel(p.xi.abs(), xi_decay));
    let drift_scale = points.iter().fold(0.0_f64, |a, p| a.max(p.xi_drift.abs()));
    let var_scale = points.iter().fold(0.0_f64, |a, p| a.max(p.xi_q_sq_sigma2));
    let drift_term_decays = last.is_some_and(|p| rel(p.xi_drift.abs(), drift_scale));
    let variance_term_decays = last.is_some_and(|p| rel(p.xi_q_sq_sigma2, var_scale));

    let mut row = XiRow::new(path, t);
    let abs = accumulate(*policy, |_| {
        let (r, x) = row.next().expect("endless row");
        check_row_time(path, r)?;
        Ok((x.abs(), x.abs()))
    })?;
    let mut row = XiQRow::new(path, t);
    let sq = accumulate(*policy, |_| {
        let (r, _, xq) = row.next().expect("endless row");
        check_row_time(path, r)?;
        Ok((xq * xq * path.sigma2(r), xq.abs()))
    })?;
    Ok(StabilityReport {
        t,
        probes: points,
        xi_decay,
        decays,
        abs_sum: abs.value,
        abs_sum_converged: abs.step == TailStep::Converged,
        sq_sum: sq.value,
        sq_sum_converged: sq.step == TailStep::Converged,
        drift_term_decays,
        variance_term_decays,
    })
}
