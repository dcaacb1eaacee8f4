//! Simulation of time-varying ARMA processes and their explicit solution
//! in terms of the Green function.
//!
//! The model is
//! `y_t = φ(t) + Σ_m φ_m(t) y_{t-m} + ε_t + Σ_l θ_l(t) ε_{t-l}`.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::green::{xi_m_from_row, xi_row, xi_sq_from_row};
use crate::linalg::Matrix;
use crate::mc::{replication_rng, Noise};
use crate::path::{CoefficientPath, Time};

pub use crate::mc::Noise as NoiseFamily;

#[derive(Debug, Clone)]
pub struct TvArmaModel<P> {
    pub path: P,
    pub noise: Noise,
}

impl<P: CoefficientPath> TvArmaModel<P> {
    pub fn new(path: P, noise: Noise) -> Result<Self> {
        noise.validate()?;
        Ok(TvArmaModel { path, noise })
    }
}

/// Prescribed values at a reference time `s`, most recent first:
/// `y = [y_s, y_{s-1}, ..., y_{s+1-p}]`, `eps = [ε_s, ..., ε_{s+1-q}]`.
/// Missing entries are zero.
#[derive(Debug, Clone, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InitialValues {
    #[cfg_attr(feature = "serde", serde(default))]
    pub y: Vec<f64>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub eps: Vec<f64>,
}

impl InitialValues {
    pub fn zeros() -> Self {
        InitialValues::default()
    }

    /// `y_{s+1-m}`.
    pub fn y_lag(&self, m: usize) -> f64 {
        self.y.get(m - 1).copied().unwrap_or(0.0)
    }

    /// `ε_{s+1-l}`.
    pub fn eps_lag(&self, l: usize) -> f64 {
        self.eps.get(l - 1).copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SimConfig {
    /// First recorded time.
    pub start: Time,
    /// Last recorded time.
    pub end: Time,
    /// Steps simulated before `start` and then discarded from the record.
    pub burn_in: usize,
}

/// A simulated trajectory. Values are stored from `origin`, which includes
/// the prescribed initial block and the burn-in.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationRun {
    pub origin: Time,
    pub start: Time,
    pub end: Time,
    pub y: Vec<f64>,
    pub eps: Vec<f64>,
    pub seed: u64,
}

impl SimulationRun {
    fn idx(&self, t: Time) -> Option<usize> {
        usize::try_from(t - self.origin).ok().filter(|&i| i < self.y.len())
    }

    pub fn y_at(&self, t: Time) -> Option<f64> {
        self.idx(t).map(|i| self.y[i])
    }

    pub fn eps_at(&self, t: Time) -> Option<f64> {
        self.idx(t).map(|i| self.eps[i])
    }

    /// Recorded observations `y_start..=y_end`.
    pub fn observed(&self) -> &[f64] {
        let a = (self.start - self.origin) as usize;
        &self.y[a..]
    }

    pub fn observed_eps(&self) -> &[f64] {
        let a = (self.start - self.origin) as usize;
        &self.eps[a..]
    }

    /// Values at `s` in the layout expected by [`represent`].
    pub fn initial_values_at(&self, s: Time, p: usize, q: usize) -> InitialValues {
        let pick = |v: &[f64], n: usize| {
            (0..n).map(|j| self.idx(s - j as Time).map_or(0.0, |i| v[i])).collect::<Vec<_>>()
        };
        InitialValues { y: pick(&self.y, p), eps: pick(&self.eps, q) }
    }
}

/// Runs the recursion with given innovations `eps[k]` at time
/// `first + k`, seeded with `init` at time `first - 1`.
pub fn simulate_with_innovations<P: CoefficientPath + ?Sized>(
    path: &P,
    first: Time,
    init: &InitialValues,
    eps: &[f64],
) -> Result<SimulationRun> {
    let p = path.ar_order();
    let q = path.ma_order();
    let last = first + eps.len() as Time - 1;
    path.window().check_range(first, last)?;
    let m0 = p.max(q);
    let origin = first - m0 as Time;
    let n = m0 + eps.len();
    let mut y = vec![0.0; n];
    let mut e = vec![0.0; n];
    for m in 1..=p {
        y[m0 - m] = init.y_lag(m);
    }
    for l in 1..=q {
        e[m0 - l] = init.eps_lag(l);
    }
    e[m0..].copy_from_slice(eps);
    for i in m0..n {
        let t = origin + i as Time;
        let mut v = path.drift(t) + e[i];
        for m in 1..=p {
            v += path.phi(m, t) * y[i - m];
        }
        for l in 1..=q {
            v += path.theta(l, t) * e[i - l];
        }
        y[i] = v;
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("simulated path overflowed".into()));
    }
    Ok(SimulationRun { origin, start: first, end: last, y, eps: e, seed: 0 })
}

/// Simulates the model over `[config.start, config.end]` after
/// `config.burn_in` discarded steps, starting from `init`.
pub fn simulate<P: CoefficientPath>(
    model: &TvArmaModel<P>,
    config: &SimConfig,
    init: &InitialValues,
    seed: u64,
) -> Result<SimulationRun> {
    model.noise.validate()?;
    if config.end < config.start {
        return Err(Error::invalid("simulation window is empty"));
    }
    let first = config.start - config.burn_in as Time;
    let len = (config.end - first + 1) as usize;
    model.path.window().check_range(first, config.end)?;
    let mut rng = replication_rng(seed, 0);
    let eps: Vec<f64> =
        (0..len).map(|k| model.noise.draw(&mut rng, model.path.sigma2(first + k as Time))).collect();
    let mut run = simulate_with_innovations(&model.path, first, init, &eps)?;
    run.start = config.start;
    run.seed = seed;
    Ok(run)
}

/// Explicit solution: `y_t` from the values prescribed at `s` and the
/// innovations `ε_{s+1..t}`:
/// `Σ_m ξ^(m)(t,s) y_{s+1-m} + Σ_r ξ(t,r) φ(r) + Σ_r ξ_q(t,r) ε_r
///  + Σ_{r=s+1-q}^{s} ξ_{s,q}(t,r) ε_r`.
pub fn represent<P, E>(path: &P, t: Time, s: Time, init: &InitialValues, eps: E) -> Result<f64>
where
    P: CoefficientPath + ?Sized,
    E: Fn(Time) -> f64,
{
    if t <= s {
        let m = (s - t + 1) as usize;
        return Ok(if m <= path.ar_order() { init.y_lag(m) } else { 0.0 });
    }
    let parts = solution_parts(path, t, s, init)?;
    let q = path.ma_order();
    let row = &parts.row;
    let k = (t - s) as usize;
    let mut total = parts.homogeneous + parts.drift;
    // ξ_q(t, r) for r in s+1..=t, using ξ(t, r+l) = row[t-r-l].
    for j in 0..k {
        let r = t - j as Time;
        let mut w = row[j];
        for l in 1..=q.min(j) {
            w += row[j - l] * path.theta(l, r + l as Time);
        }
        total += w * eps(r);
    }
    for r in (s + 1 - q as Time)..=s {
        total += xi_sq_from_row(path, s, t, r, row) * eps(r);
    }
    Ok(total)
}

/// Deterministic pieces of the explicit solution at `(t, s)`.
pub(crate) struct SolutionParts {
    /// `row[j] = ξ(t, t-j)` for `j < t - s`.
    pub row: Vec<f64>,
    pub homogeneous: f64,
    pub drift: f64,
}

pub(crate) fn solution_parts<P: CoefficientPath + ?Sized>(
    path: &P,
    t: Time,
    s: Time,
    init: &InitialValues,
) -> Result<SolutionParts> {
    let k = (t - s) as usize;
    path.window().check_range(s + 1, t)?;
    let row = xi_row(path, t, k)?;
    let homogeneous: f64 =
        (1..=path.ar_order()).map(|m| xi_m_from_row(path, m, t, s, &row) * init.y_lag(m)).sum();
    let drift: f64 = (0..k).map(|j| row[j] * path.drift(t - j as Time)).sum();
    Ok(SolutionParts { row, homogeneous, drift })
}

/// The innovation part of `y_t` computed two ways: directly as
/// `Σ_{r=s+1}^t ξ(t,r) u_r` with `u_r = ε_r + Σ_l θ_l(r) ε_{r-l}`, and through
/// the MA-augmented kernels `ξ_q` and `ξ_{s,q}`.
pub fn decompose_innovations<P, E>(path: &P, t: Time, s: Time, eps: E) -> Result<(f64, f64)>
where
    P: CoefficientPath + ?Sized,
    E: Fn(Time) -> f64,
{
    if t <= s {
        return Ok((0.0, 0.0));
    }
    let k = (t - s) as usize;
    let q = path.ma_order();
    let row = xi_row(path, t, k)?;
    let mut direct = 0.0;
    for j in 0..k {
        let r = t - j as Time;
        let u = eps(r) + (1..=q).map(|l| path.theta(l, r) * eps(r - l as Time)).sum::<f64>();
        direct += row[j] * u;
    }
    let zero = InitialValues::zeros();
    let kernel = represent(path, t, s, &zero, &eps)? - solution_parts(path, t, s, &zero)?.drift;
    Ok((direct, kernel))
}

/// Companion matrix `Φ_t`: first row `φ_1(t)..φ_p(t)`, identity below.
pub fn companion_matrix<P: CoefficientPath + ?Sized>(path: &P, t: Time) -> Matrix {
    let p = path.ar_order();
    let mut m = Matrix::zeros(p, p);
    for j in 0..p {
        m[(0, j)] = path.phi(j + 1, t);
    }
    for i in 1..p {
        m[(i, i - 1)] = 1.0;
    }
    m
}

/// `C_{t,s} = Φ_t Φ_{t-1} ⋯ Φ_{s+1}` by direct multiplication; `C_{t,t} = I`.
pub fn companion_product<P: CoefficientPath + ?Sized>(path: &P, t: Time, s: Time) -> Result<Matrix> {
    if t < s {
        return Err(Error::invalid("companion product needs t >= s"));
    }
    path.window().check_range(s + 1, t)?;
    let mut c = Matrix::identity(path.ar_order());
    for r in (s + 1..=t).rev() {
        c = c.mul(&companion_matrix(path, r));
    }
    Ok(c)
}
