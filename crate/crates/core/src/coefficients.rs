//! Constructors for coefficient paths, serialisable path specifications and
//! stochastic coefficient generators.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::mc::{replication_rng, standard_normal, McRng};
use crate::path::{
    AnyPath, BreakPath, ConstantPath, ExponentialPath, GegenbauerPath, LogisticPath, PeriodicPath, Regime, TablePath,
    Time,
};

/// Logistic AR(1) transition from `phi1` to `phi2` centred at `tau`.
pub fn make_logistic_path(phi1: f64, phi2: f64, gamma: f64, tau: f64, sigma2: f64) -> Result<LogisticPath> {
    if !(gamma.is_finite() && tau.is_finite() && phi1.is_finite() && phi2.is_finite()) {
        return Err(Error::invalid("logistic parameters must be finite"));
    }
    if gamma < 0.0 {
        return Err(Error::invalid("logistic speed gamma must be non-negative"));
    }
    if !(sigma2 > 0.0) {
        return Err(Error::invalid("innovation variance must be positive"));
    }
    Ok(LogisticPath { phi1, phi2, gamma, tau, drift: 0.0, sigma2, cutoff: LogisticPath::DEFAULT_CUTOFF })
}

/// Periodic AR(1) with `φ(t) = coeffs[t mod ℓ]`.
pub fn make_periodic_path(coeffs: &[f64], sigma2: f64) -> Result<PeriodicPath> {
    if coeffs.is_empty() {
        return Err(Error::invalid("periodic path needs at least one season"));
    }
    PeriodicPath::new(coeffs.iter().map(|&c| Regime::ar(0.0, &[c], sigma2)).collect(), 0)
}

/// Piecewise-constant path; `regimes` are in chronological order.
pub fn make_break_path(breaks: &[Time], regimes: &[Regime]) -> Result<BreakPath> {
    BreakPath::new(breaks.to_vec(), regimes.to_vec())
}

pub fn make_gegenbauer_path(d: f64, phi: f64) -> Result<GegenbauerPath> {
    if !(d > 0.0 && d < 0.5) || !(phi.abs() <= 1.0) {
        return Err(Error::invalid("Gegenbauer path needs 0 < d < 1/2 and |phi| <= 1"));
    }
    Ok(GegenbauerPath { d, phi })
}

pub fn make_exponential_path(phi: f64, lambda: f64, length: Time, sigma2: f64) -> Result<ExponentialPath> {
    if length < 1 || !(lambda > 0.0) || !(sigma2 > 0.0) {
        return Err(Error::invalid("exponential path needs length >= 1, lambda > 0, sigma2 > 0"));
    }
    Ok(ExponentialPath { phi, lambda, length, sigma2 })
}

/// Serialisable description of a deterministic coefficient path.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum PathSpec {
    Constant(Regime),
    AbruptBreaks {
        breaks: Vec<Time>,
        regimes: Vec<Regime>,
    },
    Periodic {
        seasons: Vec<Regime>,
        #[cfg_attr(feature = "serde", serde(default))]
        origin: Time,
    },
    Logistic(LogisticPath),
    Exponential(ExponentialPath),
    Gegenbauer(GegenbauerPath),
    CustomTable {
        start: Time,
        rows: Vec<Regime>,
    },
}

impl PathSpec {
    pub fn realize(&self) -> Result<AnyPath> {
        Ok(match self {
            PathSpec::Constant(r) => AnyPath::Constant(ConstantPath::new(r.clone())?),
            PathSpec::AbruptBreaks { breaks, regimes } => AnyPath::Breaks(make_break_path(breaks, regimes)?),
            PathSpec::Periodic { seasons, origin } => AnyPath::Periodic(PeriodicPath::new(seasons.clone(), *origin)?),
            PathSpec::Logistic(l) => {
                let mut path = make_logistic_path(l.phi1, l.phi2, l.gamma, l.tau, l.sigma2)?;
                path.drift = l.drift;
                path.cutoff = l.cutoff;
                AnyPath::Logistic(path)
            }
            PathSpec::Exponential(e) => {
                AnyPath::Exponential(make_exponential_path(e.phi, e.lambda, e.length, e.sigma2)?)
            }
            PathSpec::Gegenbauer(g) => AnyPath::Gegenbauer(make_gegenbauer_path(g.d, g.phi)?),
            PathSpec::CustomTable { start, rows } => AnyPath::Table(TablePath::new(*start, rows.clone())?),
        })
    }
}

/// AR(L) law for one coefficient process in a double stochastic model:
/// `φ_{m,t} = β_0 + Σ_l β_l φ_{m,t-l} + e_{m,t}`, `e ~ N(0, sd²)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CoefLaw {
    pub beta0: f64,
    pub beta: Vec<f64>,
    pub sd: f64,
}

impl CoefLaw {
    pub fn stationary_mean(&self) -> f64 {
        self.beta0 / (1.0 - self.beta.iter().sum::<f64>())
    }
}

/// Double stochastic AR(p): constant drift `phi0`, coefficient `m` driven
/// by `laws[m-1]`, Gaussian innovations with variance `sigma2`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DsarSpec {
    pub phi0: f64,
    pub laws: Vec<CoefLaw>,
    pub sigma2: f64,
}

/// Generators for random coefficients. All innovations are Gaussian.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum StochasticCoeffSpec {
    /// `φ_{m,t} = means[m] + η_{m,t}` for `m = 0..=p` (index 0 is the
    /// drift), with `(η_0, ..., η_p, ε)` jointly normal with covariance `cov`.
    RandomCoefficient { means: Vec<f64>, cov: Vec<Vec<f64>> },
    /// `φ_{m,t} = phi[m] + vartheta[m]·ε_t`.
    MarkovBilinear { drift: f64, phi: Vec<f64>, vartheta: Vec<f64>, sigma2: f64 },
    /// `φ_{m,t} = c[m] + vartheta[m]·ε_t^{powers[m]}`.
    GenMarkovBilinear { drift: f64, c: Vec<f64>, vartheta: Vec<f64>, powers: Vec<u32>, sigma2: f64 },
    /// `φ_{m,t} = c[m] + (v1[m] + v2[m]·exp(-v3[m]·ε_t²))·ε_t`.
    RcExponential { drift: f64, c: Vec<f64>, v1: Vec<f64>, v2: Vec<f64>, v3: Vec<f64>, sigma2: f64 },
    DoubleStochastic(DsarSpec),
}

impl StochasticCoeffSpec {
    pub fn ar_order(&self) -> usize {
        match self {
            StochasticCoeffSpec::RandomCoefficient { means, .. } => means.len().saturating_sub(1),
            StochasticCoeffSpec::MarkovBilinear { phi, .. } => phi.len(),
            StochasticCoeffSpec::GenMarkovBilinear { c, .. } => c.len(),
            StochasticCoeffSpec::RcExponential { c, .. } => c.len(),
            StochasticCoeffSpec::DoubleStochastic(d) => d.laws.len(),
        }
    }

    /// Nominal innovation variance `σ_ε²`.
    pub fn noise_variance(&self) -> f64 {
        match self {
            StochasticCoeffSpec::RandomCoefficient { cov, .. } => cov.last().and_then(|r| r.last()).copied().unwrap_or(f64::NAN),
            StochasticCoeffSpec::MarkovBilinear { sigma2, .. }
            | StochasticCoeffSpec::GenMarkovBilinear { sigma2, .. }
            | StochasticCoeffSpec::RcExponential { sigma2, .. } => *sigma2,
            StochasticCoeffSpec::DoubleStochastic(d) => d.sigma2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.ar_order();
        let same = |v: &[f64]| v.len() == p;
        let ok = match self {
            StochasticCoeffSpec::RandomCoefficient { means, cov } => {
                !means.is_empty() && cov.len() == p + 2 && cov.iter().all(|r| r.len() == p + 2)
            }
            StochasticCoeffSpec::MarkovBilinear { vartheta, .. } => same(vartheta),
            StochasticCoeffSpec::GenMarkovBilinear { vartheta, powers, .. } => same(vartheta) && powers.len() == p,
            StochasticCoeffSpec::RcExponential { v1, v2, v3, .. } => same(v1) && same(v2) && same(v3),
            StochasticCoeffSpec::DoubleStochastic(d) => {
                d.laws.iter().all(|l| !l.beta.is_empty() && l.sd >= 0.0 && l.beta.iter().all(|b| b.is_finite()))
            }
        };
        if !ok {
            return Err(Error::invalid("stochastic coefficient spec has inconsistent dimensions"));
        }
        if !(self.noise_variance() > 0.0) {
            return Err(Error::invalid("innovation variance must be positive"));
        }
        Ok(())
    }
}

/// One draw of the coefficients and the innovation at a single time.
#[derive(Debug, Clone, Copy)]
pub struct CoefDraw<'a> {
    pub drift: f64,
    pub phi: &'a [f64],
    pub eps: f64,
}

/// Stateful sampler for a [`StochasticCoeffSpec`].
#[derive(Debug, Clone)]
pub struct CoefSampler {
    spec: StochasticCoeffSpec,
    chol: Option<Matrix>,
    phi: Vec<f64>,
    z: Vec<f64>,
    /// Double stochastic state: `history[m][l]` is `φ_{m+1, t-1-l}`.
    history: Vec<VecDeque<f64>>,
}

impl CoefSampler {
    pub fn new(spec: &StochasticCoeffSpec) -> Result<Self> {
        spec.validate()?;
        let p = spec.ar_order();
        let chol = match spec {
            StochasticCoeffSpec::RandomCoefficient { cov, .. } => {
                let rows: Vec<&[f64]> = cov.iter().map(|r| r.as_slice()).collect();
                Some(Matrix::from_rows(&rows).cholesky()?)
            }
            _ => None,
        };
        let mut sampler =
            CoefSampler { spec: spec.clone(), chol, phi: vec![0.0; p], z: vec![0.0; p + 2], history: Vec::new() };
        sampler.reset();
        Ok(sampler)
    }

    pub fn spec(&self) -> &StochasticCoeffSpec {
        &self.spec
    }

    /// Puts double stochastic coefficient processes at their means.
    pub fn reset(&mut self) {
        if let StochasticCoeffSpec::DoubleStochastic(d) = &self.spec {
            self.history = d.laws.iter().map(|l| core::iter::repeat_n(l.stationary_mean(), l.beta.len()).collect()).collect();
        }
    }

    /// Sets the double stochastic state; `history[m][l]` is `φ_{m+1, s-l}`.
    pub fn set_history(&mut self, history: &[Vec<f64>]) -> Result<()> {
        let StochasticCoeffSpec::DoubleStochastic(d) = &self.spec else {
            return Err(Error::invalid("only double stochastic coefficients carry state"));
        };
        if history.len() != d.laws.len() {
            return Err(Error::LengthMismatch { expected: d.laws.len(), got: history.len() });
        }
        for (h, l) in history.iter().zip(&d.laws) {
            if h.len() < l.beta.len() {
                return Err(Error::LengthMismatch { expected: l.beta.len(), got: h.len() });
            }
        }
        self.history = history.iter().zip(&d.laws).map(|(h, l)| h[..l.beta.len()].iter().copied().collect()).collect();
        Ok(())
    }

    /// Conditional mean of the next coefficient vector given the state.
    pub fn next_coef_mean(&self) -> Vec<f64> {
        match &self.spec {
            StochasticCoeffSpec::DoubleStochastic(d) => d
                .laws
                .iter()
                .zip(&self.history)
                .map(|(l, h)| l.beta0 + l.beta.iter().zip(h).map(|(b, x)| b * x).sum::<f64>())
                .collect(),
            _ => Vec::new(),
        }
    }

    /// Draws the coefficients and innovation for the next time step.
    /// `sign` multiplies every Gaussian draw (use -1 for antithetic pairs).
    pub fn step_signed(&mut self, rng: &mut McRng, sign: f64) -> CoefDraw<'_> {
        let p = self.phi.len();
        let (drift, eps) = match &self.spec {
            StochasticCoeffSpec::RandomCoefficient { means, .. } => {
                for z in self.z.iter_mut() {
                    *z = sign * standard_normal(rng);
                }
                let l = self.chol.as_ref().expect("cholesky built for random coefficients");
                let x = l.mul_vec(&self.z);
                for m in 0..p {
                    self.phi[m] = means[m + 1] + x[m + 1];
                }
                (means[0] + x[0], x[p + 1])
            }
            StochasticCoeffSpec::MarkovBilinear { drift, phi, vartheta, sigma2 } => {
                let e = sign * standard_normal(rng) * sigma2.sqrt();
                for m in 0..p {
                    self.phi[m] = phi[m] + vartheta[m] * e;
                }
                (*drift, e)
            }
            StochasticCoeffSpec::GenMarkovBilinear { drift, c, vartheta, powers, sigma2 } => {
                let e = sign * standard_normal(rng) * sigma2.sqrt();
                for m in 0..p {
                    self.phi[m] = c[m] + vartheta[m] * e.powi(powers[m] as i32);
                }
                (*drift, e)
            }
            StochasticCoeffSpec::RcExponential { drift, c, v1, v2, v3, sigma2 } => {
                let e = sign * standard_normal(rng) * sigma2.sqrt();
                for m in 0..p {
                    self.phi[m] = c[m] + (v1[m] + v2[m] * (-v3[m] * e * e).exp()) * e;
                }
                (*drift, e)
            }
            StochasticCoeffSpec::DoubleStochastic(d) => {
                for (m, (law, h)) in d.laws.iter().zip(self.history.iter_mut()).enumerate() {
                    let mut v = law.beta0 + sign * law.sd * standard_normal(rng);
                    for (b, x) in law.beta.iter().zip(h.iter()) {
                        v += b * x;
                    }
                    if !law.beta.is_empty() {
                        h.pop_back();
                        h.push_front(v);
                    }
                    self.phi[m] = v;
                }
                (d.phi0, sign * standard_normal(rng) * d.sigma2.sqrt())
            }
        };
        CoefDraw { drift, phi: &self.phi, eps }
    }

    pub fn step(&mut self, rng: &mut McRng) -> CoefDraw<'_> {
        self.step_signed(rng, 1.0)
    }
}

/// A sampled coefficient path together with the innovations it was drawn
/// with (bilinear coefficients depend on the contemporaneous innovation).
#[derive(Debug, Clone)]
pub struct StochasticRealization {
    pub path: TablePath,
    pub innovations: Vec<f64>,
}

/// Samples coefficients on `start..start+len` after `burn_in` discarded
/// steps. The table's `sigma2` column holds the nominal innovation variance.
pub fn sample_stochastic_path(
    spec: &StochasticCoeffSpec,
    seed: u64,
    start: Time,
    len: usize,
    burn_in: usize,
) -> Result<StochasticRealization> {
    let mut sampler = CoefSampler::new(spec)?;
    let mut rng = replication_rng(seed, 0);
    for _ in 0..burn_in {
        sampler.step(&mut rng);
    }
    let sigma2 = spec.noise_variance();
    let mut rows = Vec::with_capacity(len);
    let mut innovations = Vec::with_capacity(len);
    for _ in 0..len {
        let d = sampler.step(&mut rng);
        rows.push(Regime { drift: d.drift, phi: d.phi.to_vec(), theta: Vec::new(), sigma2 });
        innovations.push(d.eps);
    }
    let p = spec.ar_order();
    Ok(StochasticRealization { path: TablePath::with_orders(start, rows, p, 0)?, innovations })
}
