//! Coefficient paths: the time-indexed functions `φ_m(t)`, `θ_l(t)`,
//! drift `φ(t)` and innovation variance `σ²(t)`.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Integer time index.
pub type Time = i64;

/// Closed interval of times on which a path is defined.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Window {
    pub lo: Time,
    pub hi: Time,
}

impl Window {
    pub const UNBOUNDED: Window = Window { lo: Time::MIN, hi: Time::MAX };

    pub fn contains(&self, t: Time) -> bool {
        self.lo <= t && t <= self.hi
    }

    pub fn check(&self, t: Time) -> Result<()> {
        if self.contains(t) {
            Ok(())
        } else {
            Err(Error::OutOfWindow { t, lo: self.lo, hi: self.hi })
        }
    }

    /// Checks that every time in `[a, b]` is covered (empty ranges pass).
    pub fn check_range(&self, a: Time, b: Time) -> Result<()> {
        if a > b {
            return Ok(());
        }
        self.check(a)?;
        self.check(b)
    }
}

/// Time-varying ARMA(p, q) coefficient path.
///
/// `phi(m, t)` and `theta(l, t)` are only meaningful for `1 <= m <= p` and
/// `1 <= l <= q`; callers inside the crate never step outside those ranges.
/// The checked accessors report out-of-range lags and times as errors.
pub trait CoefficientPath {
    fn ar_order(&self) -> usize;
    fn ma_order(&self) -> usize;
    fn phi(&self, lag: usize, t: Time) -> f64;
    fn theta(&self, lag: usize, t: Time) -> f64;
    fn drift(&self, t: Time) -> f64;
    fn sigma2(&self, t: Time) -> f64;

    fn window(&self) -> Window {
        Window::UNBOUNDED
    }

    fn try_phi(&self, lag: usize, t: Time) -> Result<f64> {
        let order = self.ar_order();
        if lag == 0 || lag > order {
            return Err(Error::LagOutOfRange { lag, order });
        }
        self.window().check(t)?;
        Ok(self.phi(lag, t))
    }

    fn try_theta(&self, lag: usize, t: Time) -> Result<f64> {
        let order = self.ma_order();
        if lag == 0 || lag > order {
            return Err(Error::LagOutOfRange { lag, order });
        }
        self.window().check(t)?;
        Ok(self.theta(lag, t))
    }
}

macro_rules! forward_path {
    ($($ty:ty),*) => {$(
        impl<P: CoefficientPath + ?Sized> CoefficientPath for $ty {
            fn ar_order(&self) -> usize { (**self).ar_order() }
            fn ma_order(&self) -> usize { (**self).ma_order() }
            fn phi(&self, lag: usize, t: Time) -> f64 { (**self).phi(lag, t) }
            fn theta(&self, lag: usize, t: Time) -> f64 { (**self).theta(lag, t) }
            fn drift(&self, t: Time) -> f64 { (**self).drift(t) }
            fn sigma2(&self, t: Time) -> f64 { (**self).sigma2(t) }
            fn window(&self) -> Window { (**self).window() }
        }
    )*};
}

forward_path!(&P, alloc::boxed::Box<P>, Arc<P>);

/// One set of ARMA parameters.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Regime {
    #[cfg_attr(feature = "serde", serde(default))]
    pub drift: f64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub phi: Vec<f64>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub theta: Vec<f64>,
    #[cfg_attr(feature = "serde", serde(default = "one"))]
    pub sigma2: f64,
}

#[cfg(feature = "serde")]
fn one() -> f64 {
    1.0
}

impl Regime {
    pub fn ar(drift: f64, phi: &[f64], sigma2: f64) -> Self {
        Regime { drift, phi: phi.to_vec(), theta: Vec::new(), sigma2 }
    }

    pub fn arma(drift: f64, phi: &[f64], theta: &[f64], sigma2: f64) -> Self {
        Regime { drift, phi: phi.to_vec(), theta: theta.to_vec(), sigma2 }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self.drift.is_finite()
            && self.phi.iter().all(|v| v.is_finite())
            && self.theta.iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::invalid("non-finite regime coefficient"));
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return Err(Error::invalid("innovation variance must be positive"));
        }
        Ok(())
    }

    fn phi_at(&self, lag: usize) -> f64 {
        self.phi.get(lag.wrapping_sub(1)).copied().unwrap_or(0.0)
    }

    fn theta_at(&self, lag: usize) -> f64 {
        self.theta.get(lag.wrapping_sub(1)).copied().unwrap_or(0.0)
    }

    /// Sum of AR coefficients.
    pub fn ar_sum(&self) -> f64 {
        self.phi.iter().sum()
    }
}

fn common_orders(regimes: &[Regime]) -> (usize, usize) {
    let p = regimes.iter().map(|r| r.phi.len()).max().unwrap_or(0);
    let q = regimes.iter().map(|r| r.theta.len()).max().unwrap_or(0);
    (p, q)
}

fn validate_all(regimes: &[Regime]) -> Result<()> {
    if regimes.is_empty() {
        return Err(Error::invalid("at least one regime is required"));
    }
    regimes.iter().try_for_each(Regime::validate)
}

/// Time-invariant ARMA path.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantPath {
    pub regime: Regime,
}

impl ConstantPath {
    pub fn new(regime: Regime) -> Result<Self> {
        regime.validate()?;
        Ok(ConstantPath { regime })
    }

    pub fn ar(phi: &[f64]) -> Self {
        ConstantPath { regime: Regime::ar(0.0, phi, 1.0) }
    }
}

impl CoefficientPath for ConstantPath {
    fn ar_order(&self) -> usize {
        self.regime.phi.len()
    }
    fn ma_order(&self) -> usize {
        self.regime.theta.len()
    }
    fn phi(&self, lag: usize, _t: Time) -> f64 {
        self.regime.phi_at(lag)
    }
    fn theta(&self, lag: usize, _t: Time) -> f64 {
        self.regime.theta_at(lag)
    }
    fn drift(&self, _t: Time) -> f64 {
        self.regime.drift
    }
    fn sigma2(&self, _t: Time) -> f64 {
        self.regime.sigma2
    }
}

/// Piecewise-constant path with deterministic abrupt breaks.
///
/// With increasing `breaks = [b_1, ..., b_k]`, regime `i` is active on
/// `(b_i, b_{i+1}]`: a break time belongs to the earlier regime.
#[derive(Debug, Clone, PartialEq)]
pub struct BreakPath {
    breaks: Vec<Time>,
    regimes: Vec<Regime>,
    p: usize,
    q: usize,
}

impl BreakPath {
    pub fn new(breaks: Vec<Time>, regimes: Vec<Regime>) -> Result<Self> {
        validate_all(&regimes)?;
        if regimes.len() != breaks.len() + 1 {
            return Err(Error::LengthMismatch { expected: breaks.len() + 1, got: regimes.len() });
        }
        if breaks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("break times must be strictly increasing"));
        }
        let (p, q) = common_orders(&regimes);
        Ok(BreakPath { breaks, regimes, p, q })
    }

    pub fn breaks(&self) -> &[Time] {
        &self.breaks
    }

    pub fn regimes(&self) -> &[Regime] {
        &self.regimes
    }

    pub fn regime_index(&self, t: Time) -> usize {
        self.breaks.partition_point(|&b| b < t)
    }

    pub fn regime_at(&self, t: Time) -> &Regime {
        &self.regimes[self.regime_index(t)]
    }
}

impl CoefficientPath for BreakPath {
    fn ar_order(&self) -> usize {
        self.p
    }
    fn ma_order(&self) -> usize {
        self.q
    }
    fn phi(&self, lag: usize, t: Time) -> f64 {
        self.regime_at(t).phi_at(lag)
    }
    fn theta(&self, lag: usize, t: Time) -> f64 {
        self.regime_at(t).theta_at(lag)
    }
    fn drift(&self, t: Time) -> f64 {
        self.regime_at(t).drift
    }
    fn sigma2(&self, t: Time) -> f64 {
        self.regime_at(t).sigma2
    }
}

/// Periodic path: season `(t - origin) mod ℓ` is active at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicPath {
    seasons: Vec<Regime>,
    origin: Time,
    p: usize,
    q: usize,
}

impl PeriodicPath {
    pub fn new(seasons: Vec<Regime>, origin: Time) -> Result<Self> {
        validate_all(&seasons)?;
        let (p, q) = common_orders(&seasons);
        Ok(PeriodicPath { seasons, origin, p, q })
    }

    pub fn period(&self) -> usize {
        self.seasons.len()
    }

    pub fn seasons(&self) -> &[Regime] {
        &self.seasons
    }

    fn season(&self, t: Time) -> &Regime {
        let l = self.seasons.len() as Time;
        &self.seasons[(t - self.origin).rem_euclid(l) as usize]
    }
}

impl CoefficientPath for PeriodicPath {
    fn ar_order(&self) -> usize {
        self.p
    }
    fn ma_order(&self) -> usize {
        self.q
    }
    fn phi(&self, lag: usize, t: Time) -> f64 {
        self.season(t).phi_at(lag)
    }
    fn theta(&self, lag: usize, t: Time) -> f64 {
        self.season(t).theta_at(lag)
    }
    fn drift(&self, t: Time) -> f64 {
        self.season(t).drift
    }
    fn sigma2(&self, t: Time) -> f64 {
        self.season(t).sigma2
    }
}

/// AR(1) with a logistic transition from `phi1` (early) to `phi2` (late):
/// `φ(t) = φ1·F(t) + (1 - F(t))·φ2`, `F(t) = 1 / (1 + exp(γ (t - τ)))`.
///
/// Once `F` is within `cutoff` of 0 or 1 it is snapped to the plateau, so the
/// path is exactly constant far from `τ`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LogisticPath {
    pub phi1: f64,
    pub phi2: f64,
    pub gamma: f64,
    pub tau: f64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub drift: f64,
    #[cfg_attr(feature = "serde", serde(default = "one"))]
    pub sigma2: f64,
    #[cfg_attr(feature = "serde", serde(default = "default_cutoff"))]
    pub cutoff: f64,
}

#[cfg(feature = "serde")]
fn default_cutoff() -> f64 {
    LogisticPath::DEFAULT_CUTOFF
}

impl LogisticPath {
    pub const DEFAULT_CUTOFF: f64 = 1e-12;

    pub fn weight(&self, t: Time) -> f64 {
        let f = 1.0 / (1.0 + (self.gamma * (t as f64 - self.tau)).exp());
        if f < self.cutoff {
            0.0
        } else if f > 1.0 - self.cutoff {
            1.0
        } else {
            f
        }
    }
}

impl CoefficientPath for LogisticPath {
    fn ar_order(&self) -> usize {
        1
    }
    fn ma_order(&self) -> usize {
        0
    }
    fn phi(&self, lag: usize, t: Time) -> f64 {
        if lag != 1 {
            return 0.0;
        }
        let f = self.weight(t);
        self.phi1 * f + (1.0 - f) * self.phi2
    }
    fn theta(&self, _lag: usize, _t: Time) -> f64 {
        0.0
    }
    fn drift(&self, _t: Time) -> f64 {
        self.drift
    }
    fn sigma2(&self, _t: Time) -> f64 {
        self.sigma2
    }
}

/// AR(1) with exponential decay over `[0, length]`:
/// `φ(t) = φ` for `t <= 0`, `φ λ^{t/T}` inside, `φ λ` for `t >= T`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExponentialPath {
    pub phi: f64,
    pub lambda: f64,
    pub length: Time,
    #[cfg_attr(feature = "serde", serde(default = "one"))]
    pub sigma2: f64,
}

impl CoefficientPath for ExponentialPath {
    fn ar_order(&self) -> usize {
        1
    }
    fn ma_order(&self) -> usize {
        0
    }
    fn phi(&self, lag: usize, t: Time) -> f64 {
        if lag != 1 {
            0.0
        } else if t <= 0 {
            self.phi
        } else if t >= self.length {
            self.phi * self.lambda
        } else {
            self.phi * self.lambda.powf(t as f64 / self.length as f64)
        }
    }
    fn theta(&self, _lag: usize, _t: Time) -> f64 {
        0.0
    }
    fn drift(&self, _t: Time) -> f64 {
        0.0
    }
    fn sigma2(&self, _t: Time) -> f64 {
        self.sigma2
    }
}

/// AR(2) path whose Green function generates Gegenbauer coefficients:
/// `φ1(j) = 2φ((d-1)/j + 1)`, `φ2(j) = -(2(d-1)/j + 1)`, defined for `j >= 1`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GegenbauerPath {
    pub d: f64,
    pub phi: f64,
}

impl CoefficientPath for GegenbauerPath {
    fn ar_order(&self) -> usize {
        2
    }
    fn ma_order(&self) -> usize {
        0
    }
    fn phi(&self, lag: usize, t: Time) -> f64 {
        if t < 1 {
            return 0.0;
        }
        let j = t as f64;
        match lag {
            1 => 2.0 * self.phi * ((self.d - 1.0) / j + 1.0),
            2 => -(2.0 * (self.d - 1.0) / j + 1.0),
            _ => 0.0,
        }
    }
    fn theta(&self, _lag: usize, _t: Time) -> f64 {
        0.0
    }
    fn drift(&self, _t: Time) -> f64 {
        0.0
    }
    fn sigma2(&self, _t: Time) -> f64 {
        1.0
    }
    fn window(&self) -> Window {
        Window { lo: 1, hi: Time::MAX }
    }
}

/// Explicit per-time coefficients on a finite window starting at `start`.
/// Unchecked queries outside the window return NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct TablePath {
    start: Time,
    rows: Vec<Regime>,
    p: usize,
    q: usize,
}

impl TablePath {
    pub fn new(start: Time, rows: Vec<Regime>) -> Result<Self> {
        validate_all(&rows)?;
        let (p, q) = common_orders(&rows);
        Ok(TablePath { start, rows, p, q })
    }

    pub fn with_orders(start: Time, rows: Vec<Regime>, p: usize, q: usize) -> Result<Self> {
        let mut path = Self::new(start, rows)?;
        if path.p > p || path.q > q {
            return Err(Error::invalid("table rows exceed declared orders"));
        }
        path.p = p;
        path.q = q;
        Ok(path)
    }

    pub fn rows(&self) -> &[Regime] {
        &self.rows
    }

    pub fn start(&self) -> Time {
        self.start
    }

    fn row(&self, t: Time) -> Option<&Regime> {
        let i = t.checked_sub(self.start)?;
        usize::try_from(i).ok().and_then(|i| self.rows.get(i))
    }
}

impl CoefficientPath for TablePath {
    fn ar_order(&self) -> usize {
        self.p
    }
    fn ma_order(&self) -> usize {
        self.q
    }
    fn phi(&self, lag: usize, t: Time) -> f64 {
        self.row(t).map_or(f64::NAN, |r| r.phi_at(lag))
    }
    fn theta(&self, lag: usize, t: Time) -> f64 {
        self.row(t).map_or(f64::NAN, |r| r.theta_at(lag))
    }
    fn drift(&self, t: Time) -> f64 {
        self.row(t).map_or(f64::NAN, |r| r.drift)
    }
    fn sigma2(&self, t: Time) -> f64 {
        self.row(t).map_or(f64::NAN, |r| r.sigma2)
    }
    fn window(&self) -> Window {
        Window { lo: self.start, hi: self.start + self.rows.len() as Time - 1 }
    }
}

/// The pure-MA side of a path viewed as an AR recursion with coefficients
/// `-θ_l(t)`. Its Green function is `ϑ(t, s)`.
#[derive(Debug, Clone, Copy)]
pub struct MaMirror<P>(pub P);

impl<P: CoefficientPath> CoefficientPath for MaMirror<P> {
    fn ar_order(&self) -> usize {
        self.0.ma_order()
    }
    fn ma_order(&self) -> usize {
        0
    }
    fn phi(&self, lag: usize, t: Time) -> f64 {
        -self.0.theta(lag, t)
    }
    fn theta(&self, _lag: usize, _t: Time) -> f64 {
        0.0
    }
    fn drift(&self, t: Time) -> f64 {
        self.0.drift(t)
    }
    fn sigma2(&self, t: Time) -> f64 {
        self.0.sigma2(t)
    }
    fn window(&self) -> Window {
        self.0.window()
    }
}

/// Any of the built-in path families.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyPath {
    Constant(ConstantPath),
    Breaks(BreakPath),
    Periodic(PeriodicPath),
    Logistic(LogisticPath),
    Exponential(ExponentialPath),
    Gegenbauer(GegenbauerPath),
    Table(TablePath),
}

macro_rules! dispatch {
    ($self:ident, $p:ident => $e:expr) => {
        match $self {
            AnyPath::Constant($p) => $e,
            AnyPath::Breaks($p) => $e,
            AnyPath::Periodic($p) => $e,
            AnyPath::Logistic($p) => $e,
            AnyPath::Exponential($p) => $e,
            AnyPath::Gegenbauer($p) => $e,
            AnyPath::Table($p) => $e,
        }
    };
}

impl CoefficientPath for AnyPath {
    fn ar_order(&self) -> usize {
        dispatch!(self, p => p.ar_order())
    }
    fn ma_order(&self) -> usize {
        dispatch!(self, p => p.ma_order())
    }
    fn phi(&self, lag: usize, t: Time) -> f64 {
        dispatch!(self, p => p.phi(lag, t))
    }
    fn theta(&self, lag: usize, t: Time) -> f64 {
        dispatch!(self, p => p.theta(lag, t))
    }
    fn drift(&self, t: Time) -> f64 {
        dispatch!(self, p => p.drift(t))
    }
    fn sigma2(&self, t: Time) -> f64 {
        dispatch!(self, p => p.sigma2(t))
    }
    fn window(&self) -> Window {
        dispatch!(self, p => p.window())
    }
}
