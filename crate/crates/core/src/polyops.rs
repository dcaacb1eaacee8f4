//! Lag polynomials with time-varying coefficients, `Σ_j c_j(t) B^j`, under
//! the skew product `B^i ∘ f(t) = f(t-i) B^i`.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::green::{xi_m_from_row, xi_row, xi_sq_from_row, XiRow};
use crate::moments::{accumulate, check_row_time};
use crate::path::{CoefficientPath, Time, Window};
use crate::process::SimulationRun;
use crate::tail::{TailStep, TruncationPolicy};

/// Trailing coefficients of a truncated inverse excluded from identity checks.
pub const GUARD_BAND: usize = 20;

type CoefFn = dyn Fn(Time) -> Vec<f64> + Send + Sync;

/// A lag polynomial whose coefficients are evaluated together at a time:
/// `coeffs_at(t)[j] = c_j(t)` for `j = 0..=degree`.
#[derive(Clone)]
pub struct TvPoly {
    degree: usize,
    coeffs: Arc<CoefFn>,
}

impl fmt::Debug for TvPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TvPoly").field("degree", &self.degree).finish_non_exhaustive()
    }
}

impl TvPoly {
    /// `f(t)` must return `degree + 1` coefficients.
    pub fn from_fn<F>(degree: usize, f: F) -> Self
    where
        F: Fn(Time) -> Vec<f64> + Send + Sync + 'static,
    {
        TvPoly { degree, coeffs: Arc::new(f) }
    }

    pub fn constant(c: &[f64]) -> Self {
        let c = if c.is_empty() { vec![0.0] } else { c.to_vec() };
        TvPoly::from_fn(c.len() - 1, move |_| c.clone())
    }

    /// `Φ_t(B) = 1 - Σ_m φ_m(t) B^m`.
    pub fn ar_operator<P: CoefficientPath + Send + Sync + 'static>(path: Arc<P>) -> Self {
        let p = path.ar_order();
        TvPoly::from_fn(p, move |t| {
            let mut c = vec![1.0];
            c.extend((1..=p).map(|m| -path.phi(m, t)));
            c
        })
    }

    /// `Θ_t(B) = 1 + Σ_l θ_l(t) B^l`.
    pub fn ma_operator<P: CoefficientPath + Send + Sync + 'static>(path: Arc<P>) -> Self {
        let q = path.ma_order();
        TvPoly::from_fn(q, move |t| {
            let mut c = vec![1.0];
            c.extend((1..=q).map(|l| path.theta(l, t)));
            c
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeffs_at(&self, t: Time) -> Vec<f64> {
        let c = (self.coeffs)(t);
        debug_assert_eq!(c.len(), self.degree + 1);
        c
    }

    pub fn coeff(&self, j: usize, t: Time) -> f64 {
        if j > self.degree {
            0.0
        } else {
            self.coeffs_at(t)[j]
        }
    }

    /// `(Σ_j c_j(t) B^j) x_t = Σ_j c_j(t) x_{t-j}`.
    pub fn apply<F: Fn(Time) -> f64>(&self, x: F, t: Time) -> f64 {
        self.coeffs_at(t).iter().enumerate().map(|(j, c)| c * x(t - j as Time)).sum()
    }

    /// Fallible [`apply`](Self::apply) for series with gaps.
    pub fn try_apply<F: Fn(Time) -> Option<f64>>(&self, x: F, t: Time) -> Option<f64> {
        let mut acc = 0.0;
        for (j, c) in self.coeffs_at(t).iter().enumerate() {
            acc += c * x(t - j as Time)?;
        }
        Some(acc)
    }

    /// Skew product `self ∘ other`: the `n`-th coefficient at `t` is
    /// `Σ_{i+j=n} a_i(t) b_j(t-i)`.
    pub fn skew_mul(&self, other: &TvPoly) -> TvPoly {
        let (a, b) = (self.clone(), other.clone());
        let degree = a.degree + b.degree;
        TvPoly::from_fn(degree, move |t| {
            let ca = a.coeffs_at(t);
            let mut out = vec![0.0; degree + 1];
            for (i, &ai) in ca.iter().enumerate() {
                if ai == 0.0 {
                    continue;
                }
                for (j, bj) in b.coeffs_at(t - i as Time).iter().enumerate() {
                    out[i + j] += ai * bj;
                }
            }
            out
        })
    }

    pub fn add(&self, other: &TvPoly) -> TvPoly {
        let (a, b) = (self.clone(), other.clone());
        let degree = a.degree.max(b.degree);
        TvPoly::from_fn(degree, move |t| {
            let mut out = vec![0.0; degree + 1];
            for (j, v) in a.coeffs_at(t).into_iter().enumerate() {
                out[j] += v;
            }
            for (j, v) in b.coeffs_at(t).into_iter().enumerate() {
                out[j] += v;
            }
            out
        })
    }

    /// Tabulates the coefficients over `window`; outside it the original
    /// closures are used.
    pub fn memoize(&self, window: Window) -> TvPoly {
        let base = self.clone();
        let table: Vec<Vec<f64>> = (window.lo..=window.hi).map(|t| base.coeffs_at(t)).collect();
        TvPoly::from_fn(self.degree, move |t| {
            if window.contains(t) {
                table[(t - window.lo) as usize].clone()
            } else {
                base.coeffs_at(t)
            }
        })
    }

    /// Largest coefficient difference on a grid of times.
    pub fn max_diff_on(&self, other: &TvPoly, grid: &[Time]) -> f64 {
        let mut worst = 0.0_f64;
        for &t in grid {
            let (a, b) = (self.coeffs_at(t), other.coeffs_at(t));
            for j in 0..a.len().max(b.len()) {
                let d = a.get(j).copied().unwrap_or(0.0) - b.get(j).copied().unwrap_or(0.0);
                worst = worst.max(d.abs());
            }
        }
        worst
    }
}

/// The three operators of the explicit solution at horizon `k`.
#[derive(Debug, Clone)]
pub struct XiOperators {
    pub k: usize,
    /// `Ξ_{t,p}^{[k]}(B) = 1 - Σ_m ξ^(m)(t, t-k) B^{k-1+m}`.
    pub homogeneous: TvPoly,
    /// `Ξ_t^{(k)}(B) = Σ_{r<k} ξ(t, t-r) B^r`.
    pub particular: TvPoly,
    /// `Ξ_{t,q}^{(k)}(B)`: `ξ_q(t, t-r)` for `r < k` and `ξ_{t-k,q}(t, t-r)`
    /// for `k <= r < k+q`.
    pub ma: TvPoly,
}

/// Builds the operators for `k = t - s`. Their coefficients are functions
/// of the operator's own time argument at fixed horizon `k`.
pub fn build_xi_operators<P>(path: Arc<P>, t: Time, s: Time) -> Result<XiOperators>
where
    P: CoefficientPath + Send + Sync + 'static,
{
    if s >= t {
        return Err(Error::invalid("operators need s < t"));
    }
    let k = (t - s) as usize;
    let (p, q) = (path.ar_order(), path.ma_order());

    let hp = path.clone();
    let homogeneous = TvPoly::from_fn(k - 1 + p, move |u| {
        let row: Vec<f64> = XiRow::new(&*hp, u).take(k).map(|x| x.1).collect();
        let mut c = vec![0.0; k + p];
        c[0] = 1.0;
        for m in 1..=p {
            c[k - 1 + m] -= xi_m_from_row(&*hp, m, u, u - k as Time, &row);
        }
        c
    });

    let pp = path.clone();
    let particular = TvPoly::from_fn(k - 1, move |u| XiRow::new(&*pp, u).take(k).map(|x| x.1).collect());

    let mp = path;
    let ma = TvPoly::from_fn(k - 1 + q, move |u| {
        let row: Vec<f64> = XiRow::new(&*mp, u).take(k).map(|x| x.1).collect();
        let mut c = vec![0.0; k + q];
        for r in 0..k {
            let tr = u - r as Time;
            c[r] = row[r] + (1..=q.min(r)).map(|l| row[r - l] * mp.theta(l, tr + l as Time)).sum::<f64>();
        }
        for r in k..k + q {
            c[r] = xi_sq_from_row(&*mp, u - k as Time, u, u - r as Time, &row);
        }
        c
    });
    Ok(XiOperators { k, homogeneous, particular, ma })
}

/// `|Ξ_{t,p}^{[k]}(B) y_t - Ξ_t^{(k)}(B) φ(t) - Ξ_{t,q}^{(k)}(B) ε_t|` on a
/// simulated run.
pub fn verify_representation_identity<P>(path: Arc<P>, run: &SimulationRun, t: Time, s: Time) -> Result<f64>
where
    P: CoefficientPath + Send + Sync + 'static,
{
    let ops = build_xi_operators(path.clone(), t, s)?;
    let (p, q) = (path.ar_order() as Time, path.ma_order() as Time);
    let first = s + 1 - p.max(q);
    let last = run.origin + run.y.len() as Time - 1;
    if first < run.origin || t > last {
        return Err(Error::OutOfWindow { t: if t > last { t } else { first }, lo: run.origin, hi: last });
    }
    path.window().check_range(s + 1, t)?;
    let lhs = ops.homogeneous.try_apply(|u| run.y_at(u), t).expect("covered");
    let drift = ops.particular.apply(|u| path.drift(u), t);
    let noise = ops.ma.try_apply(|u| run.eps_at(u), t).expect("covered");
    Ok((lhs - drift - noise).abs())
}

/// `Ξ_t(B) = Σ_r ξ(t, t-r) B^r` truncated where the row at `t` has decayed,
/// plus [`GUARD_BAND`] extra lags.
pub fn truncated_inverse<P>(path: Arc<P>, t: Time, policy: &TruncationPolicy) -> Result<TvPoly>
where
    P: CoefficientPath + Send + Sync + 'static,
{
    let mut walk = XiRow::new(&*path, t);
    let partial = accumulate(*policy, |_| {
        let (r, x) = walk.next().expect("endless row");
        check_row_time(&*path, r)?;
        Ok((0.0, x.abs()))
    })?;
    if partial.step != TailStep::Converged {
        return Err(Error::NonSummable { terms: partial.monitor.count() });
    }
    let len = partial.monitor.terms_used().max(1) + GUARD_BAND;
    xi_row(&*path, t, len)?;
    Ok(TvPoly::from_fn(len - 1, move |u| XiRow::new(&*path, u).take(len).map(|x| x.1).collect()))
}

/// Largest `|c_j(t) - δ_{j0}|` of `Ξ_t ∘ Φ_t` over lags outside the guard
/// band.
pub fn left_inverse_residual<P>(inverse: &TvPoly, path: Arc<P>, t: Time) -> f64
where
    P: CoefficientPath + Send + Sync + 'static,
{
    let prod = inverse.skew_mul(&TvPoly::ar_operator(path));
    let c = prod.coeffs_at(t);
    let keep = c.len().saturating_sub(GUARD_BAND);
    c[..keep].iter().enumerate().map(|(j, v)| if j == 0 { (v - 1.0).abs() } else { v.abs() }).fold(0.0, f64::max)
}
