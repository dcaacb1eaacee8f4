//! Optimal `k`-step predictors from a finite set of prescribed values and
//! from the (truncated) infinite past, with forecast-error diagnostics.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::green::{xi_row, xi_sq_from_row, XiQRow, XiRow};
use crate::inversion::recover_errors;
use crate::moments::{accumulate, check_row_time, unconditional_mean};
use crate::path::{CoefficientPath, Time};
use crate::process::{solution_parts, InitialValues};
use crate::tail::{TailStep, TruncationInfo, TruncationPolicy};

/// Standard normal 97.5% quantile.
const Z95: f64 = 1.959_963_984_540_054;

/// Truncation of the sums behind an infinite-history forecast.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ForecastTruncation {
    pub mean: TruncationInfo,
    pub innovations: TruncationInfo,
    /// History needed to recover one innovation.
    pub recovery_history: usize,
    /// Total observations the forecast depends on.
    pub required_history: usize,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ForecastReport {
    pub t: Time,
    pub s: Time,
    pub point: f64,
    pub mse: f64,
    /// `ξ_q(t, r)` for `r = s+1, ..., t`.
    pub fe_weights: Vec<f64>,
    /// Half-width of the Gaussian 95% interval, `z·√mse`.
    pub interval_halfwidth: f64,
    pub truncation: Option<ForecastTruncation>,
}

/// `ξ_q(t, r)` for `r = s+1..=t` in increasing `r`, from `row[j] = ξ(t, t-j)`.
fn fe_weights_from_row<P: CoefficientPath + ?Sized>(path: &P, t: Time, row: &[f64]) -> Vec<f64> {
    let q = path.ma_order();
    (0..row.len())
        .rev()
        .map(|j| {
            let r = t - j as Time;
            row[j] + (1..=q.min(j)).map(|l| row[j - l] * path.theta(l, r + l as Time)).sum::<f64>()
        })
        .collect()
}

fn mse_of<P: CoefficientPath + ?Sized>(path: &P, s: Time, weights: &[f64]) -> f64 {
    weights.iter().enumerate().map(|(i, w)| w * w * path.sigma2(s + 1 + i as Time)).sum()
}

fn check_order(s: Time, t: Time) -> Result<()> {
    if s >= t {
        return Err(Error::invalid("forecast origin s must precede target t"));
    }
    Ok(())
}

/// Predictor of `y_t` given `y_s, ..., y_{s+1-p}` and `ε_s, ..., ε_{s+1-q}`.
pub fn predict_finite<P: CoefficientPath + ?Sized>(
    path: &P,
    t: Time,
    s: Time,
    init: &InitialValues,
) -> Result<ForecastReport> {
    check_order(s, t)?;
    let parts = solution_parts(path, t, s, init)?;
    let q = path.ma_order() as Time;
    let seeds: f64 = ((s + 1 - q)..=s).map(|r| xi_sq_from_row(path, s, t, r, &parts.row) * init.eps_lag((s + 1 - r) as usize)).sum();
    let fe_weights = fe_weights_from_row(path, t, &parts.row);
    let mse = mse_of(path, s, &fe_weights);
    Ok(ForecastReport {
        t,
        s,
        point: parts.homogeneous + parts.drift + seeds,
        mse,
        fe_weights,
        interval_halfwidth: Z95 * mse.sqrt(),
        truncation: None,
    })
}

/// Predictor of `y_t` from the observations `history[k] = y_{start+k}` up to
/// time `s`, through the innovations recovered by inversion.
pub fn predict_infinite<P: CoefficientPath + ?Sized>(
    path: &P,
    t: Time,
    s: Time,
    history: &[f64],
    start: Time,
    policy: &TruncationPolicy,
) -> Result<ForecastReport> {
    check_order(s, t)?;
    let last = start + history.len() as Time - 1;
    if s > last || s < start {
        return Err(Error::InsufficientHistory {
            required: (s - start + 1).max(1) as usize,
            available: history.len(),
        });
    }
    let history = &history[..=(s - start) as usize];
    let mean = unconditional_mean(path, t, policy)?;

    // Lags of the innovation sum that matter, found before touching data.
    let mut walk = XiQRow::new(path, t);
    for _ in 0..(t - s) {
        walk.next();
    }
    let mut weights = Vec::new();
    let partial = accumulate(*policy, |_| {
        let (r, _, xq) = walk.next().expect("endless row");
        check_row_time(path, r)?;
        weights.push(xq);
        Ok((0.0, xq.abs()))
    })?;
    let info = partial.info();
    match partial.step {
        TailStep::Converged => {}
        TailStep::Divergent => return Err(Error::NonSummable { terms: info.terms_evaluated }),
        _ => return Err(Error::InsufficientHistory { required: policy.max_terms, available: history.len() }),
    }
    let lags = info.terms_used.max(1);

    let rec = recover_errors(path, history, start, policy)?;
    let required = lags + rec.required_history - 1;
    if required > history.len() {
        return Err(Error::InsufficientHistory { required, available: history.len() });
    }
    let mut innov = 0.0;
    for (j, w) in weights.iter().take(lags).enumerate() {
        let r = s - j as Time;
        innov += w * rec.get(r).expect("recovered within required history");
    }

    let row = xi_row(path, t, (t - s) as usize)?;
    let fe_weights = fe_weights_from_row(path, t, &row);
    let mse = mse_of(path, s, &fe_weights);
    Ok(ForecastReport {
        t,
        s,
        point: mean.value + innov,
        mse,
        fe_weights,
        interval_halfwidth: Z95 * mse.sqrt(),
        truncation: Some(ForecastTruncation {
            mean: mean.truncation,
            innovations: info,
            recovery_history: rec.required_history,
            required_history: required,
        }),
    })
}

/// `MSE_k` at time `t`: `Σ_{r=t-k+1}^{t} ξ_q(t, r)² σ²(r)`.
pub fn mse_at_horizon<P: CoefficientPath + ?Sized>(path: &P, t: Time, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::invalid("horizon must be at least 1"));
    }
    let row = xi_row(path, t, k)?;
    Ok(mse_of(path, t - k as Time, &fe_weights_from_row(path, t, &row)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MseComparison {
    pub mse1: f64,
    pub mse2: f64,
    pub equal: bool,
}

/// Compares the `k`-step MSE at two target times; `equal` uses the relative
/// tolerance `tol`.
pub fn mse_time_comparison<P: CoefficientPath + ?Sized>(
    path: &P,
    k: usize,
    t1: Time,
    t2: Time,
    tol: f64,
) -> Result<MseComparison> {
    let mse1 = mse_at_horizon(path, t1, k)?;
    let mse2 = mse_at_horizon(path, t2, k)?;
    let equal = (mse1 - mse2).abs() <= tol * mse1.abs().max(mse2.abs()).max(1.0);
    Ok(MseComparison { mse1, mse2, equal })
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EfficiencyPoint {
    pub t: Time,
    /// `F(t, s) = Σ_{r=s+1}^{t} |ξ(t, r)|`.
    pub f: f64,
    pub mse: f64,
    /// Truncated `Σ_{r≤t} |ξ(t, r)|`, absent when it does not converge.
    pub global_bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ForwardEfficiencyReport {
    pub s: Time,
    pub points: Vec<EfficiencyPoint>,
    /// `F(t, s)` does not grow over the later half of the probes.
    pub bounded: bool,
    pub mse_bounded: bool,
    /// Finite-probe estimate of the MSE oscillation: sup - inf over the later
    /// half of the probes.
    pub oscillation_estimate: f64,
}

/// Growth allowed between the two halves of the probes before a sequence is
/// reported unbounded.
pub const GROWTH_TOL: f64 = 1e-3;

/// Tracks `F(t, s)` and `MSE_{t,s}` along increasing probe times `t > s`.
pub fn forward_efficiency<P: CoefficientPath + ?Sized>(
    path: &P,
    s: Time,
    probes: &[Time],
    policy: &TruncationPolicy,
) -> Result<ForwardEfficiencyReport> {
    if probes.is_empty() || probes.windows(2).any(|w| w[1] <= w[0]) || probes[0] <= s {
        return Err(Error::invalid("probes must be increasing and later than s"));
    }
    let mut points = Vec::with_capacity(probes.len());
    for &t in probes {
        let row = xi_row(path, t, (t - s) as usize)?;
        let f = row.iter().map(|x| x.abs()).sum();
        let mse = mse_of(path, s, &fe_weights_from_row(path, t, &row));
        let mut walk = XiRow::new(path, t);
        let global = accumulate(*policy, |_| {
            let (r, x) = walk.next().expect("endless row");
            check_row_time(path, r)?;
            Ok((x.abs(), x.abs()))
        });
        let global_bound = match global {
            Ok(p) if p.step == TailStep::Converged => Some(p.value),
            _ => None,
        };
        points.push(EfficiencyPoint { t, f, mse, global_bound });
    }
    let half = points.len() / 2;
    let grows = |get: fn(&EfficiencyPoint) -> f64| {
        let early = points[..half.max(1)].iter().map(get).fold(0.0_f64, f64::max);
        let late = points[half..].iter().map(get).fold(0.0_f64, f64::max);
        !late.is_finite() || late > early * (1.0 + GROWTH_TOL) + f64::EPSILON
    };
    let bounded = !grows(|p| p.f);
    let mse_bounded = !grows(|p| p.mse);
    let tail = &points[half..];
    let sup = tail.iter().map(|p| p.mse).fold(f64::NEG_INFINITY, f64::max);
    let inf = tail.iter().map(|p| p.mse).fold(f64::INFINITY, f64::min);
    Ok(ForwardEfficiencyReport { s, points, bounded, mse_bounded, oscillation_estimate: sup - inf })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::{ConstantPath, PeriodicPath, Regime};
    use alloc::vec;

    #[test]
    fn one_step_ar1() {
        let path = ConstantPath::new(Regime::ar(0.3, &[0.8], 2.0)).unwrap();
        let init = InitialValues { y: vec![1.5], eps: vec![] };
        let f = predict_finite(&path, 11, 10, &init).unwrap();
        assert!((f.point - (0.3 + 0.8 * 1.5)).abs() < 1e-15);
        assert_eq!(f.mse, 2.0);
        assert!(predict_finite(&path, 10, 10, &init).is_err());
    }

    #[test]
    fn constant_mse_is_time_invariant() {
        let path = ConstantPath::new(Regime::arma(0.0, &[0.5, 0.2], &[0.4], 1.0)).unwrap();
        let c = mse_time_comparison(&path, 6, 3, 400, 1e-12).unwrap();
        assert!(c.equal);
        let one = mse_time_comparison(&path, 1, 3, 400, 1e-12).unwrap();
        assert_eq!(one.mse1, 1.0);
    }

    #[test]
    fn periodic_with_explosive_season_is_bounded() {
        let path = PeriodicPath::new(vec![Regime::ar(0.0, &[1.5], 1.0), Regime::ar(0.0, &[0.4], 1.0)], 0).unwrap();
        let probes: Vec<Time> = (1..=40).map(|k| 2 * k + 1).collect();
        let rep = forward_efficiency(&path, 0, &probes, &TruncationPolicy::default()).unwrap();
        assert!(rep.bounded && rep.mse_bounded);
        let explosive = ConstantPath::ar(&[1.05]);
        let probes: Vec<Time> = (1..=40).collect();
        let rep = forward_efficiency(&explosive, 0, &probes, &TruncationPolicy::default()).unwrap();
        assert!(!rep.bounded);
    }

    #[test]
    fn ar1_forward_efficiency_limit() {
        let path = ConstantPath::ar(&[-0.6]);
        let probes: Vec<Time> = (1..=30).map(|k| 5 * k).collect();
        let rep = forward_efficiency(&path, 0, &probes, &TruncationPolicy::default()).unwrap();
        let last = rep.points.last().unwrap();
        assert!((last.f - 2.5).abs() < 1e-9);
        assert!((last.global_bound.unwrap() - 2.5).abs() < 1e-9);
        assert!(rep.bounded);
    }
}
