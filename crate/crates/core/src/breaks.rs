//! AR models with deterministic abrupt breaks: least-squares segmentation
//! by dynamic programming, the variance decomposition of the two-break
//! AR(2) model, persistence measures and forecast metrics.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::forecast::predict_finite;
use crate::green::xi;
use crate::linalg::{largest_ar_root, Matrix};
use crate::moments::unconditional_variance;
use crate::path::{BreakPath, CoefficientPath, ConstantPath, Regime, Time};
use crate::process::InitialValues;
use crate::tail::TruncationPolicy;

/// Least-squares AR(p) fit on one segment of regression observations.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SegmentFit {
    /// First and last series index of the segment (inclusive).
    pub start: usize,
    pub end: usize,
    pub drift: f64,
    pub phi: Vec<f64>,
    /// `SSR / (n - p - 1)`.
    pub sigma2: f64,
    pub ssr: f64,
    /// Standard errors of `(drift, φ_1, ..., φ_p)`.
    pub se: Vec<f64>,
    /// Standard error of `σ̂` (Gaussian approximation).
    pub sigma_se: f64,
}

impl SegmentFit {
    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn regime(&self) -> Regime {
        Regime::ar(self.drift, &self.phi, self.sigma2)
    }
}

/// A segmented AR(p) fit with a fixed number of breaks.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SegmentedAR {
    pub p: usize,
    /// Series index of the last observation of each segment but the final.
    pub breaks: Vec<usize>,
    pub segments: Vec<SegmentFit>,
    pub ssr: f64,
    pub bic: f64,
}

impl SegmentedAR {
    /// The fitted model as a coefficient path, with series index `i` at
    /// time `origin + i`.
    pub fn to_break_path(&self, origin: Time) -> Result<BreakPath> {
        let breaks = self.breaks.iter().map(|&b| origin + b as Time).collect();
        BreakPath::new(breaks, self.segments.iter().map(SegmentFit::regime).collect())
    }
}

/// Fits for every feasible break count and the BIC choice among them.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SegmentationResult {
    pub p: usize,
    pub min_seg: usize,
    /// Number of regression observations, `len(y) - p`.
    pub observations: usize,
    /// `fits[l]` has `l` breaks.
    pub fits: Vec<SegmentedAR>,
    pub selected: usize,
}

impl SegmentationResult {
    pub fn best(&self) -> &SegmentedAR {
        &self.fits[self.selected]
    }
}

/// `max(p + 2, ⌈0.1·T⌉)`.
pub fn default_min_seg(p: usize, len: usize) -> usize {
    (p + 2).max(len.div_ceil(10))
}

/// Cross-product sums of one segment.
#[derive(Clone)]
struct Normal {
    xtx: Matrix,
    xty: Vec<f64>,
    yty: f64,
    n: usize,
}

impl Normal {
    fn new(k: usize) -> Self {
        Normal { xtx: Matrix::zeros(k, k), xty: vec![0.0; k], yty: 0.0, n: 0 }
    }

    fn push(&mut self, x: &[f64], y: f64) {
        let k = x.len();
        for i in 0..k {
            for j in 0..k {
                self.xtx[(i, j)] += x[i] * x[j];
            }
            self.xty[i] += x[i] * y;
        }
        self.yty += y * y;
        self.n += 1;
    }

    /// Coefficients and SSR, or `None` if the design is rank deficient.
    fn solve(&self) -> Option<(Vec<f64>, f64)> {
        let k = self.xty.len();
        let scale = (0..k).map(|i| self.xtx[(i, i)]).fold(0.0_f64, f64::max);
        let l = self.xtx.cholesky().ok()?;
        if (0..k).any(|i| !(l[(i, i)] * l[(i, i)] > 1e-10 * scale)) {
            return None;
        }
        let mut z = vec![0.0; k];
        for i in 0..k {
            let mut s = self.xty[i];
            for j in 0..i {
                s -= l[(i, j)] * z[j];
            }
            z[i] = s / l[(i, i)];
        }
        let mut b = vec![0.0; k];
        for i in (0..k).rev() {
            let mut s = z[i];
            for j in i + 1..k {
                s -= l[(j, i)] * b[j];
            }
            b[i] = s / l[(i, i)];
        }
        let ssr = (self.yty - z.iter().map(|v| v * v).sum::<f64>()).max(0.0);
        Some((b, ssr))
    }
}

fn regressors(y: &[f64], p: usize, t: usize) -> Vec<f64> {
    let mut x = Vec::with_capacity(p + 1);
    x.push(1.0);
    x.extend((1..=p).map(|m| y[t - m]));
    x
}

/// SSR of every admissible segment `[a, b]` of regression observations
/// (`a`, `b` index observations, i.e. series index minus `p`).
struct CostTable {
    n: usize,
    cost: Vec<f64>,
}

impl CostTable {
    fn build(y: &[f64], p: usize, min_seg: usize) -> Self {
        let n = y.len() - p;
        let mut cost = vec![f64::INFINITY; n * n];
        for a in 0..n {
            let mut ne = Normal::new(p + 1);
            for b in a..n {
                let t = b + p;
                ne.push(&regressors(y, p, t), y[t]);
                if b + 1 - a >= min_seg {
                    if let Some((_, ssr)) = ne.solve() {
                        cost[a * n + b] = ssr;
                    }
                }
            }
        }
        CostTable { n, cost }
    }

    fn get(&self, a: usize, b: usize) -> f64 {
        self.cost[a * self.n + b]
    }
}

/// Globally SSR-minimal partitions with `0..=max_breaks` breaks. Among
/// equal-SSR partitions the one with the earliest breaks is kept.
fn optimal_partitions(table: &CostTable, max_breaks: usize, min_seg: usize) -> Vec<Option<(f64, Vec<usize>)>> {
    let n = table.n;
    // best[j][b]: minimal SSR of observations 0..=b split into j+1 segments.
    let mut best = vec![vec![f64::INFINITY; n]; max_breaks + 1];
    let mut arg = vec![vec![usize::MAX; n]; max_breaks + 1];
    for b in 0..n {
        best[0][b] = table.get(0, b);
    }
    for j in 1..=max_breaks {
        for b in 0..n {
            let mut v = f64::INFINITY;
            let mut at = usize::MAX;
            // Last segment is (c, b]; earlier part 0..=c.
            let lo = j * min_seg - 1;
            if b + 1 < min_seg || b < lo + min_seg {
                continue;
            }
            for c in lo..=(b - min_seg) {
                let cand = best[j - 1][c] + table.get(c + 1, b);
                if cand < v {
                    v = cand;
                    at = c;
                }
            }
            best[j][b] = v;
            arg[j][b] = at;
        }
    }
    (0..=max_breaks)
        .map(|j| {
            let v = best[j][n - 1];
            if !v.is_finite() {
                return None;
            }
            let mut cuts = vec![0; j];
            let mut b = n - 1;
            for i in (0..j).rev() {
                let c = arg[i + 1][b];
                cuts[i] = c;
                b = c;
            }
            Some((v, cuts))
        })
        .collect()
}

fn fit_segment(y: &[f64], p: usize, start: usize, end: usize) -> Result<SegmentFit> {
    let mut ne = Normal::new(p + 1);
    for t in start..=end {
        ne.push(&regressors(y, p, t), y[t]);
    }
    let (beta, ssr) = ne.solve().ok_or(Error::RankDeficient { start: start as Time, end: end as Time })?;
    let dof = ne.n.saturating_sub(p + 1).max(1);
    let sigma2 = ssr / dof as f64;
    let inv = ne.xtx.inverse()?;
    let se = (0..=p).map(|i| (sigma2 * inv[(i, i)]).max(0.0).sqrt()).collect();
    Ok(SegmentFit {
        start,
        end,
        drift: beta[0],
        phi: beta[1..].to_vec(),
        sigma2,
        ssr,
        se,
        sigma_se: sigma2.sqrt() / (2.0 * dof as f64).sqrt(),
    })
}

/// `n ln(SSR/n) + ((l+1)(p+1) + l) ln n`.
pub fn bic(ssr: f64, n: usize, p: usize, breaks: usize) -> f64 {
    let nf = n as f64;
    let k = ((breaks + 1) * (p + 1) + breaks) as f64;
    nf * (ssr / nf).ln() + k * nf.ln()
}

/// Fits AR(p) models with `0..=max_breaks` breaks by exact least-squares
/// segmentation and selects the break count by BIC.
pub fn fit_segmented_ar(y: &[f64], p: usize, max_breaks: usize, min_seg: Option<usize>) -> Result<SegmentationResult> {
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("series contains non-finite values"));
    }
    let min_seg = min_seg.unwrap_or_else(|| default_min_seg(p, y.len()));
    if min_seg < p + 2 {
        return Err(Error::invalid("min_seg must be at least p + 2"));
    }
    let needed = (max_breaks + 1) * min_seg + p;
    if y.len() < needed {
        return Err(Error::SeriesTooShort { len: y.len(), needed });
    }
    let table = CostTable::build(y, p, min_seg);
    let n = table.n;
    let mut fits = Vec::new();
    for (l, part) in optimal_partitions(&table, max_breaks, min_seg).into_iter().enumerate() {
        let Some((ssr, cuts)) = part else {
            if l == 0 {
                return Err(Error::RankDeficient { start: p as Time, end: y.len() as Time - 1 });
            }
            break;
        };
        let mut segments = Vec::with_capacity(l + 1);
        let mut a = 0;
        for &c in cuts.iter().chain(core::iter::once(&(n - 1))) {
            segments.push(fit_segment(y, p, a + p, c + p)?);
            a = c + 1;
        }
        fits.push(SegmentedAR { p, breaks: cuts.iter().map(|c| c + p).collect(), segments, ssr, bic: bic(ssr, n, p, l) });
    }
    let selected = fits
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, f)| if f.bic < acc.1 { (i, f.bic) } else { acc })
        .0;
    Ok(SegmentationResult { p, min_seg, observations: n, fits, selected })
}

/// Variance of the two-break AR(2) model at `t1 + l`, split by regime.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DabarVariance {
    pub var: f64,
    /// Weight on the latest regime's `σ²`.
    pub a: f64,
    /// Weight on the middle regime's `σ²`.
    pub b: f64,
    /// Weight on the earliest regime's `σ²`, from its stationary moments.
    pub c: f64,
}

fn ar2(r: &Regime) -> Result<(f64, f64)> {
    if r.phi.len() > 2 || !r.theta.is_empty() {
        return Err(Error::invalid("the two-break variance formula needs AR(2) regimes"));
    }
    Ok((r.phi.first().copied().unwrap_or(0.0), r.phi.get(1).copied().unwrap_or(0.0)))
}

/// Three-regime path with breaks at `t2 = 0` and `t1 = gap` (regimes in
/// chronological order). With `gap = 0` the middle regime is absent.
pub fn dabar_path(regimes: &[Regime; 3], gap: usize) -> Result<BreakPath> {
    if gap == 0 {
        BreakPath::new(vec![0], vec![regimes[0].clone(), regimes[2].clone()])
    } else {
        BreakPath::new(vec![0, gap as Time], regimes.to_vec())
    }
}

/// `Var(y_{t1+l}) = A σ²_latest + B σ²_middle + C σ²_earliest` for regimes
/// given in chronological order and `t1 - t2 = gap`. Requires the earliest
/// and latest regimes to be stationary.
pub fn dabar_variance(regimes: &[Regime; 3], gap: usize, l: usize) -> Result<DabarVariance> {
    for (i, r) in regimes.iter().enumerate() {
        ar2(r)?;
        if i != 1 && largest_ar_root(&r.phi)? >= 1.0 {
            return Err(Error::NotStationary { regime: i });
        }
    }
    let path = dabar_path(regimes, gap)?;
    let (t2, t1) = (0, gap as Time);
    let t = t1 + l as Time;
    let sq = |s: Time| xi(&path, t, s).map(|v| v * v);
    let mut a = 0.0;
    for r in 1..=l as Time {
        a += sq(t1 + r)?;
    }
    let mut b = 0.0;
    for r in 0..gap as Time {
        b += sq(t1 - r)?;
    }
    let (f13, f23) = ar2(&regimes[0])?;
    let u = xi(&path, t, t2)?;
    // Coefficient of y_{t2-1}: φ_2 at t2+1 times ξ(t, t2+1).
    let w = path.phi(2, t2 + 1) * xi(&path, t, t2 + 1)?;
    let c = ((1.0 - f23) * (u * u + w * w) + 2.0 * f13 * u * w) / ((1.0 + f23) * ((1.0 - f23).powi(2) - f13 * f13));
    let var = a * regimes[2].sigma2 + b * regimes[1].sigma2 + c * regimes[0].sigma2;
    Ok(DabarVariance { var, a, b, c })
}

/// Within-regime persistence measures. Everything but the largest root is
/// undefined for a nonstationary regime.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SegmentPersistence {
    /// Modulus of the largest inverse root of `1 - Σ φ_m z^m`.
    pub lar: f64,
    pub stationary: bool,
    /// `1 / (1 - Σ φ_m)`.
    pub inv_one_minus_sum: Option<f64>,
    pub mean: Option<f64>,
    /// Spectrum at frequency zero, `σ² / (2π (1 - Σ φ_m)²)`.
    pub s0: Option<f64>,
    pub var: Option<f64>,
    /// `Var / σ²`.
    pub p: Option<f64>,
}

pub fn segment_persistence(regime: &Regime, policy: &TruncationPolicy) -> Result<SegmentPersistence> {
    let lar = largest_ar_root(&regime.phi)?;
    let stationary = lar < 1.0;
    if !stationary {
        return Ok(SegmentPersistence { lar, stationary, inv_one_minus_sum: None, mean: None, s0: None, var: None, p: None });
    }
    let one_minus = 1.0 - regime.ar_sum();
    let var = unconditional_variance(&ConstantPath::new(regime.clone())?, 0, policy)?.value;
    Ok(SegmentPersistence {
        lar,
        stationary,
        inv_one_minus_sum: Some(1.0 / one_minus),
        mean: Some(regime.drift / one_minus),
        s0: Some(regime.sigma2 / (2.0 * PI * one_minus * one_minus)),
        var: Some(var),
        p: Some(var / regime.sigma2),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrajectoryPoint {
    pub t: Time,
    pub var: Option<f64>,
    /// `Var(y_t) / σ²(t)`.
    pub p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PersistenceReport {
    pub segments: Vec<SegmentPersistence>,
    pub trajectory: Vec<TrajectoryPoint>,
}

/// Per-regime measures plus the time-varying variance and persistence
/// `P(y_t | ε_t)` over `from..=to`.
pub fn persistence_measures(path: &BreakPath, from: Time, to: Time, policy: &TruncationPolicy) -> Result<PersistenceReport> {
    let segments = path.regimes().iter().map(|r| segment_persistence(r, policy)).collect::<Result<Vec<_>>>()?;
    let mut trajectory = Vec::new();
    if segments[0].stationary {
        for t in from..=to {
            let var = match unconditional_variance(path, t, policy) {
                Ok(v) if v.truncation.converged => Some(v.value),
                Ok(_) | Err(Error::NonSummable { .. }) => None,
                Err(e) => return Err(e),
            };
            trajectory.push(TrajectoryPoint { t, var, p: var.map(|v| v / path.sigma2(t)) });
        }
    } else {
        trajectory.extend((from..=to).map(|t| TrajectoryPoint { t, var: None, p: None }));
    }
    Ok(PersistenceReport { segments, trajectory })
}

/// Theil U as computed by [`forecast_metrics`].
pub const THEIL_U_CONVENTION: &str = "rmse / (sqrt(mean(actual^2)) + sqrt(mean(predicted^2)))";

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ForecastMetrics {
    pub horizon: usize,
    pub n: usize,
    pub rmse: f64,
    pub mae: f64,
    pub theil_u: f64,
}

pub fn forecast_metrics(horizon: usize, actual: &[f64], predicted: &[f64]) -> Result<ForecastMetrics> {
    if actual.len() != predicted.len() {
        return Err(Error::LengthMismatch { expected: actual.len(), got: predicted.len() });
    }
    if actual.is_empty() {
        return Err(Error::invalid("no forecasts to evaluate"));
    }
    let n = actual.len() as f64;
    let mse = actual.iter().zip(predicted).map(|(a, p)| (a - p).powi(2)).sum::<f64>() / n;
    let mae = actual.iter().zip(predicted).map(|(a, p)| (a - p).abs()).sum::<f64>() / n;
    let rms = |v: &[f64]| (v.iter().map(|x| x * x).sum::<f64>() / n).sqrt();
    let denom = rms(actual) + rms(predicted);
    let rmse = mse.sqrt();
    Ok(ForecastMetrics {
        horizon,
        n: actual.len(),
        rmse,
        mae,
        theil_u: if denom > 0.0 { rmse / denom } else { 0.0 },
    })
}

/// Metrics per horizon; `predictions[i] = (h, forecasts aligned with actual)`.
pub fn forecast_eval(actual: &[f64], predictions: &[(usize, Vec<f64>)]) -> Result<Vec<ForecastMetrics>> {
    predictions.iter().map(|(h, p)| forecast_metrics(*h, actual, p)).collect()
}

/// `h`-step forecasts of `y_t` for `t` in `first..=last`, each made from the
/// `p` observations ending at `t - h`; `y[i]` is observed at `origin + i`.
pub fn h_step_forecasts<P: CoefficientPath + ?Sized>(
    path: &P,
    y: &[f64],
    origin: Time,
    first: Time,
    last: Time,
    h: usize,
) -> Result<Vec<f64>> {
    if h == 0 {
        return Err(Error::invalid("horizon must be at least 1"));
    }
    let p = path.ar_order();
    let mut out = Vec::new();
    for t in first..=last {
        let s = t - h as Time;
        let lo = s - p as Time + 1;
        if lo < origin || s >= origin + y.len() as Time {
            return Err(Error::InsufficientHistory { required: p, available: (s - origin + 1).max(0) as usize });
        }
        let init = InitialValues { y: (0..p).map(|j| y[(s - origin) as usize - j]).collect(), eps: Vec::new() };
        out.push(predict_finite(path, t, s, &init)?.point);
    }
    Ok(out)
}
