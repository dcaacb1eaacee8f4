//! Moments of AR models with random coefficients: closed forms for the
//! generalized random coefficient (GRC) family, Monte Carlo for double
//! stochastic AR (DS-AR) models and stability diagnostics for RC-AR paths.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::coefficients::{CoefSampler, DsarSpec, StochasticCoeffSpec};
use crate::error::{Error, Result};
use crate::green::xi_m;
use crate::linalg::Matrix;
use crate::mc::{Estimate, McRng, MomentsVec, Runner};
use crate::path::{ConstantPath, Time};

/// First and second moments of `(φ_0t, ..., φ_pt)` and their cross moments
/// with `ε_t`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GrcMomentInputs {
    /// `E φ_mt`, `m = 0..=p`.
    pub means: Vec<f64>,
    /// `σ_mn = Cov(φ_mt, φ_nt)`.
    pub cov: Vec<Vec<f64>>,
    /// `σ_mε = E(φ_mt ε_t)`.
    pub cross: Vec<f64>,
    pub sigma_eps2: f64,
}

/// `E e^r` for `e ~ N(0, σ²)`.
fn gaussian_moment(r: u32, sigma2: f64) -> f64 {
    if r % 2 == 1 {
        return 0.0;
    }
    let double_fact: f64 = (1..r).step_by(2).map(|k| k as f64).product();
    double_fact * sigma2.powi(r as i32 / 2)
}

impl GrcMomentInputs {
    pub fn p(&self) -> usize {
        self.means.len().saturating_sub(1)
    }

    /// Fixed coefficients: every covariance vanishes.
    pub fn degenerate(drift: f64, phi: &[f64], sigma2: f64) -> Self {
        let n = phi.len() + 1;
        let mut means = vec![drift];
        means.extend_from_slice(phi);
        GrcMomentInputs { means, cov: vec![vec![0.0; n]; n], cross: vec![0.0; n], sigma_eps2: sigma2 }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.means.len();
        if n < 2 {
            return Err(Error::invalid("GRC moments need p >= 1"));
        }
        if self.cov.len() != n || self.cov.iter().any(|r| r.len() != n) {
            return Err(Error::LengthMismatch { expected: n, got: self.cov.len() });
        }
        if self.cross.len() != n {
            return Err(Error::LengthMismatch { expected: n, got: self.cross.len() });
        }
        if !(self.sigma_eps2 > 0.0) {
            return Err(Error::invalid("innovation variance must be positive"));
        }
        let rows: Vec<&[f64]> = self.cov.iter().map(|r| r.as_slice()).collect();
        let m = Matrix::from_rows(&rows);
        if (0..n).any(|i| (0..n).any(|j| (m[(i, j)] - m[(j, i)]).abs() > 1e-12 * (1.0 + m[(i, j)].abs()))) {
            return Err(Error::invalid("coefficient covariance must be symmetric"));
        }
        m.cholesky().map_err(|_| Error::invalid("coefficient covariance must be positive semidefinite"))?;
        Ok(())
    }

    /// Moments implied by a generator. Double stochastic coefficients are
    /// serially dependent and have no GRC moments.
    pub fn from_spec(spec: &StochasticCoeffSpec) -> Result<Self> {
        spec.validate()?;
        let p = spec.ar_order();
        let n = p + 1;
        let mut cov = vec![vec![0.0; n]; n];
        let mut cross = vec![0.0; n];
        let out = match spec {
            StochasticCoeffSpec::RandomCoefficient { means, cov: joint } => {
                for i in 0..n {
                    cov[i].copy_from_slice(&joint[i][..n]);
                    cross[i] = joint[i][n];
                }
                GrcMomentInputs { means: means.clone(), cov, cross, sigma_eps2: joint[n][n] }
            }
            StochasticCoeffSpec::MarkovBilinear { drift, phi, vartheta, sigma2 } => {
                let mut means = vec![*drift];
                means.extend_from_slice(phi);
                for i in 1..n {
                    for j in 1..n {
                        cov[i][j] = vartheta[i - 1] * vartheta[j - 1] * sigma2;
                    }
                    cross[i] = vartheta[i - 1] * sigma2;
                }
                GrcMomentInputs { means, cov, cross, sigma_eps2: *sigma2 }
            }
            StochasticCoeffSpec::GenMarkovBilinear { drift, c, vartheta, powers, sigma2 } => {
                let mu = |r: u32| gaussian_moment(r, *sigma2);
                let mut means = vec![*drift];
                means.extend((0..p).map(|m| c[m] + vartheta[m] * mu(powers[m])));
                for i in 1..n {
                    let ri = powers[i - 1];
                    for j in 1..n {
                        let rj = powers[j - 1];
                        cov[i][j] = vartheta[i - 1] * vartheta[j - 1] * (mu(ri + rj) - mu(ri) * mu(rj));
                    }
                    cross[i] = vartheta[i - 1] * mu(ri + 1);
                }
                GrcMomentInputs { means, cov, cross, sigma_eps2: *sigma2 }
            }
            StochasticCoeffSpec::RcExponential { drift, c, v1, v2, v3, sigma2 } => {
                let s2 = *sigma2;
                // E[e² exp(-a e²)] for e ~ N(0, σ²).
                let damped = |a: f64| {
                    let d = 1.0 + 2.0 * a * s2;
                    if d > 0.0 {
                        Ok(s2 / (d * d.sqrt()))
                    } else {
                        Err(Error::invalid("rc_exponential moments need 1 + 2·v3·σ² > 0"))
                    }
                };
                let mut means = vec![*drift];
                means.extend_from_slice(c);
                for i in 1..n {
                    let (a1, a2, a3) = (v1[i - 1], v2[i - 1], v3[i - 1]);
                    for j in 1..n {
                        let (b1, b2, b3) = (v1[j - 1], v2[j - 1], v3[j - 1]);
                        cov[i][j] = a1 * b1 * s2 + a1 * b2 * damped(b3)? + a2 * b1 * damped(a3)? + a2 * b2 * damped(a3 + b3)?;
                    }
                    cross[i] = a1 * s2 + a2 * damped(a3)?;
                }
                GrcMomentInputs { means, cov, cross, sigma_eps2: s2 }
            }
            StochasticCoeffSpec::DoubleStochastic(_) => {
                return Err(Error::invalid("double stochastic coefficients are serially dependent; use the Monte Carlo routines"));
            }
        };
        out.validate()?;
        Ok(out)
    }

    /// `φ̄_mn = σ_mn + φ_m φ_n`.
    pub fn bar(&self, m: usize, n: usize) -> f64 {
        self.cov[m][n] + self.means[m] * self.means[n]
    }
}

/// `E y_t = φ_0 / (1 - Σ φ_m)`, requiring `|Σ φ_m| < 1`.
pub fn grc_mean(inputs: &GrcMomentInputs) -> Result<f64> {
    inputs.validate()?;
    let sum: f64 = inputs.means[1..].iter().sum();
    if !(sum.abs() < 1.0) {
        return Err(Error::ConditionViolated(format!("|Σ φ_m| = {} is not below 1", sum.abs())));
    }
    Ok(inputs.means[0] / (1.0 - sum))
}

/// Variance of the composite innovation at mean level `y`.
pub fn grc_sigma2(inputs: &GrcMomentInputs, y: f64) -> f64 {
    let p = inputs.p();
    let s = &inputs.cov;
    let mut v = inputs.sigma_eps2 + s[0][0] + 2.0 * inputs.cross[0];
    v += 2.0 * y * (1..=p).map(|m| inputs.cross[m] + s[m][0]).sum::<f64>();
    v += y * y * (1..=p).flat_map(|n| (1..=p).map(move |m| s[m][n])).sum::<f64>();
    v
}

/// `E(Φ_t ⊗ Φ_t)` for the companion matrix `Φ_t`, assembled from the
/// moments: only products of two first-row entries are random.
pub fn expected_kron(inputs: &GrcMomentInputs) -> Matrix {
    let p = inputs.p();
    let mean = |i: usize, j: usize| {
        if i == 0 {
            inputs.means[j + 1]
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    };
    let mut k = Matrix::zeros(p * p, p * p);
    for i in 0..p {
        for kk in 0..p {
            for j in 0..p {
                for l in 0..p {
                    k[(i * p + kk, j * p + l)] =
                        if i == 0 && kk == 0 { inputs.bar(j + 1, l + 1) } else { mean(i, j) * mean(kk, l) };
                }
            }
        }
    }
    k
}

/// Power-iteration settings for `λ_max[E(Φ ⊗ Φ)]`.
pub const SPECTRAL_TOL: f64 = 1e-12;
pub const SPECTRAL_MAX_ITER: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GrcAutocov {
    pub mean: f64,
    pub sigma2: f64,
    /// Modulus of the largest eigenvalue of `E(Φ ⊗ Φ)`.
    pub lambda_max: f64,
    pub gamma: Vec<f64>,
}

/// `γ(0..=lag_max)`: the first `p` lags from `[I - E(Φ⊗Φ)]⁻¹`, the rest by
/// fundamental solutions of the mean recursion.
pub fn grc_autocov(inputs: &GrcMomentInputs, lag_max: usize) -> Result<GrcAutocov> {
    let mean = grc_mean(inputs)?;
    let p = inputs.p();
    let k = expected_kron(inputs);
    let lambda_max = k.spectral_radius(SPECTRAL_TOL, SPECTRAL_MAX_ITER).value;
    if !(lambda_max < 1.0) {
        return Err(Error::ConditionViolated(format!("λ_max[E(Φ⊗Φ)] = {lambda_max} is not below 1")));
    }
    let inv = Matrix::identity(p * p).sub(&k).inverse()?;
    let sigma2 = grc_sigma2(inputs, mean);
    let mut gamma: Vec<f64> = (0..p.min(lag_max + 1)).map(|l| inv[(l, 0)] * sigma2).collect();
    if lag_max >= p {
        let path = ConstantPath::ar(&inputs.means[1..]);
        for l in p..=lag_max {
            let mut g = 0.0;
            for m in 1..=p {
                g += xi_m(&path, m, l as Time, 0)? * gamma[m - 1];
            }
            gamma.push(g);
        }
    }
    Ok(GrcAutocov { mean, sigma2, lambda_max, gamma })
}

/// Closed-form `(φ_{1,1}, φ_{2,1})` entries of `[I - E(Φ⊗Φ)]⁻¹` for
/// GRC-AR(2), under `1 - 2φ̄_12 φ_1/(1-φ_2) > φ̄_11 + φ̄_22 > 0`.
pub fn grc_ar2_closed_form(inputs: &GrcMomentInputs) -> Result<(f64, f64)> {
    inputs.validate()?;
    if inputs.p() != 2 {
        return Err(Error::invalid("the AR(2) closed form needs p = 2"));
    }
    let (f1, f2) = (inputs.means[1], inputs.means[2]);
    let (b11, b22, b12) = (inputs.bar(1, 1), inputs.bar(2, 2), inputs.bar(1, 2));
    let lhs = 1.0 - 2.0 * b12 * f1 / (1.0 - f2);
    if !(lhs > b11 + b22 && b11 + b22 > 0.0) {
        return Err(Error::ConditionViolated("GRC-AR(2) second-moment condition fails".into()));
    }
    let d = (1.0 - f2 * f2) * (1.0 - b11 - b22) - 2.0 * b12 * f1 * (1.0 + f2);
    Ok(((1.0 - f2 * f2) / d, f1 * (1.0 + f2) / d))
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GrcMonteCarlo {
    pub mean: Estimate,
    /// `E[(y_t - c)(y_{t-ℓ} - c)]` about the supplied centre `c`.
    pub autocov: Vec<Estimate>,
}

/// Simulates `n` independent stretches of a GRC-AR process started at
/// `centre` and records the last `lag_max + 1` values after `burn_in` steps.
pub fn grc_moments_mc<R: Runner>(
    spec: &StochasticCoeffSpec,
    lag_max: usize,
    burn_in: usize,
    centre: f64,
    n: u64,
    seed: u64,
    runner: &R,
) -> Result<GrcMonteCarlo> {
    let template = CoefSampler::new(spec)?;
    let p = spec.ar_order();
    let steps = burn_in + lag_max + 1;
    let acc = runner.run(n, seed, &MomentsVec::new(lag_max + 2), |acc, rng, _| {
        let mut sampler = template.clone();
        let mut y = vec![centre; p.max(lag_max + 1)];
        for _ in 0..steps {
            let d = sampler.step(rng);
            let mut v = d.drift + d.eps;
            for (m, phi) in d.phi.iter().enumerate() {
                v += phi * y[m];
            }
            y.rotate_right(1);
            y[0] = v;
        }
        acc.0[0].push(y[0]);
        for l in 0..=lag_max {
            acc.0[l + 1].push((y[0] - centre) * (y[l] - centre));
        }
    });
    let est = acc.estimates();
    Ok(GrcMonteCarlo { mean: est[0], autocov: est[1..].to_vec() })
}

/// Relative size below which Monte Carlo moments of `ξ` count as decayed.
pub const MC_DECAY_TOL: f64 = 1e-3;

/// Draws `len` coefficient vectors from `sampler`, returning them in time
/// order, together with the innovations.
fn draw_coefficients(sampler: &mut CoefSampler, rng: &mut McRng, len: usize, sign: f64) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut phis = Vec::with_capacity(len);
    let mut eps = Vec::with_capacity(len);
    for _ in 0..len {
        let d = sampler.step_signed(rng, sign);
        phis.push(d.phi.to_vec());
        eps.push(d.eps);
    }
    (phis, eps)
}

/// `row[j] = ξ(t, t-j)` where `phis[i]` holds the coefficients at time
/// `t - len + 1 + i`.
fn xi_row_from(phis: &[Vec<f64>]) -> Vec<f64> {
    let len = phis.len();
    let mut row = vec![0.0; len];
    if len == 0 {
        return row;
    }
    row[0] = 1.0;
    for j in 1..len {
        let r = len - 1 - j;
        let mut acc = 0.0;
        for m in 1..=j {
            if let Some(&phi) = phis[r + m].get(m - 1) {
                acc += phi * row[j - m];
            }
        }
        row[j] = acc;
    }
    row
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DsarMoments {
    /// `E ξ(t, t-j)` for `j < lags`.
    pub mean_xi: Vec<Estimate>,
    pub mean_xi2: Vec<Estimate>,
    pub var_xi: Vec<f64>,
    /// `φ_0 Σ_j E ξ(t, t-j)`.
    pub mean: Estimate,
    /// `φ_0² Σ Var ξ + σ² Σ E ξ²`, which leaves out covariances between
    /// different lags.
    pub variance_by_lag: f64,
    /// `φ_0² Var(Σ_j ξ) + σ² Σ E ξ²`.
    pub variance: Estimate,
    pub first_order_decays: bool,
    pub second_order_decays: bool,
}

/// Monte Carlo moments of the random Green function of a DS-AR model over
/// `lags` lags, with coefficient processes run for `burn_in` steps first.
pub fn dsar_moments_mc<R: Runner>(
    spec: &DsarSpec,
    lags: usize,
    burn_in: usize,
    n: u64,
    seed: u64,
    runner: &R,
) -> Result<DsarMoments> {
    if lags == 0 || n < 2 {
        return Err(Error::invalid("need lags >= 1 and at least two replications"));
    }
    let template = CoefSampler::new(&StochasticCoeffSpec::DoubleStochastic(spec.clone()))?;
    let acc = runner.run(n, seed, &MomentsVec::new(2 * lags + 2), |acc, rng, _| {
        let mut sampler = template.clone();
        for _ in 0..burn_in {
            sampler.step(rng);
        }
        let (phis, _) = draw_coefficients(&mut sampler, rng, lags, 1.0);
        let row = xi_row_from(&phis);
        let (mut s, mut q) = (0.0, 0.0);
        for (j, &x) in row.iter().enumerate() {
            acc.0[j].push(x);
            acc.0[lags + j].push(x * x);
            s += x;
            q += x * x;
        }
        acc.0[2 * lags].push(s);
        acc.0[2 * lags + 1].push(q);
    });
    let mean_xi: Vec<Estimate> = acc.0[..lags].iter().map(|m| m.estimate()).collect();
    let mean_xi2: Vec<Estimate> = acc.0[lags..2 * lags].iter().map(|m| m.estimate()).collect();
    let var_xi: Vec<f64> = acc.0[..lags].iter().map(|m| m.variance()).collect();
    let (phi0, s2) = (spec.phi0, spec.sigma2);
    let sum = acc.0[2 * lags].estimate();
    let sq = acc.0[2 * lags + 1].estimate();
    let var_sum = acc.0[2 * lags].variance();
    let variance_by_lag = phi0 * phi0 * var_xi.iter().sum::<f64>() + s2 * sq.value;
    let nf = n as f64;
    let variance = Estimate {
        value: phi0 * phi0 * var_sum + s2 * sq.value,
        se: phi0 * phi0 * var_sum * (2.0 / (nf - 1.0)).sqrt() + s2 * sq.se,
    };
    let decays = |v: &[f64]| {
        let peak = v.iter().fold(0.0_f64, |a, b| a.max(b.abs()));
        v.iter().all(|x| x.is_finite()) && v.last().is_some_and(|x| x.abs() <= MC_DECAY_TOL * peak)
    };
    let e1: Vec<f64> = mean_xi.iter().map(|e| e.value).collect();
    let e2: Vec<f64> = mean_xi2.iter().map(|e| e.value).collect();
    Ok(DsarMoments {
        first_order_decays: decays(&e1),
        second_order_decays: decays(&e2),
        mean: Estimate { value: phi0 * sum.value, se: phi0.abs() * sum.se },
        variance_by_lag,
        variance,
        mean_xi,
        mean_xi2,
        var_xi,
    })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DsarForecast {
    pub t: Time,
    pub s: Time,
    pub point: Estimate,
    /// `E(ξ(t, r) | K_s)` for `r = s+1..=t`.
    pub mean_xi: Vec<f64>,
    /// `E(ξ^(m)(t, s) | K_s)` for `m = 1..=p`.
    pub mean_xi_m: Vec<f64>,
    /// Sum of conditional variances term by term, without covariances
    /// between terms.
    pub cond_var_by_term: f64,
    /// `Var(y_t | K_s)` from simulated outcomes.
    pub cond_var: Estimate,
}

/// Predictor of `y_t` given `y_s, ..., y_{s+1-p}` (most recent first) and the
/// coefficient histories `phi_history[m][l] = φ_{m+1, s-l}`. Uses `pairs`
/// antithetic pairs of coefficient and innovation paths.
#[allow(clippy::too_many_arguments)]
pub fn dsar_predict<R: Runner>(
    spec: &DsarSpec,
    t: Time,
    s: Time,
    y_history: &[f64],
    phi_history: &[Vec<f64>],
    pairs: u64,
    seed: u64,
    runner: &R,
) -> Result<DsarForecast> {
    if s >= t {
        return Err(Error::invalid("forecast origin s must precede target t"));
    }
    if pairs < 2 {
        return Err(Error::invalid("need at least two antithetic pairs"));
    }
    let p = spec.laws.len();
    if y_history.len() < p {
        return Err(Error::InsufficientHistory { required: p, available: y_history.len() });
    }
    let mut template = CoefSampler::new(&StochasticCoeffSpec::DoubleStochastic(spec.clone()))?;
    template.set_history(phi_history).map_err(|e| match e {
        Error::LengthMismatch { expected, got } => Error::InsufficientHistory { required: expected, available: got },
        other => other,
    })?;
    let k = (t - s) as usize;
    let y0 = &y_history[..p];
    let phi0 = spec.phi0;
    // Layout: ξ_r (k), ξ_r² (k), ξ^(m) (p), ξ^(m)² (p), predictor part, y, y².
    let width = 2 * k + 2 * p + 3;
    let acc = runner.run(pairs, seed, &MomentsVec::new(width), |acc, rng, _| {
        let mut sum = vec![0.0; width];
        let mirror = rng.clone();
        for (sign, mut rng) in [(1.0, rng.clone()), (-1.0, mirror)] {
            let mut sampler = template.clone();
            let (phis, eps) = draw_coefficients(&mut sampler, &mut rng, k, sign);
            let row = xi_row_from(&phis);
            // row[j] = ξ(t, t-j); r = s+1+i has j = k-1-i.
            let mut part = 0.0;
            for i in 0..k {
                let x = row[k - 1 - i];
                sum[i] += x;
                sum[k + i] += x * x;
                part += phi0 * x;
            }
            for m in 1..=p {
                let mut xm = 0.0;
                for r in 1..=(p + 1 - m).min(k) {
                    xm += phis[r - 1][m - 1 + r - 1] * row[k - r];
                }
                sum[2 * k + m - 1] += xm;
                sum[2 * k + p + m - 1] += xm * xm;
                part += xm * y0[m - 1];
            }
            let mut lags = y0.to_vec();
            let mut y = 0.0;
            for (ph, e) in phis.iter().zip(&eps) {
                y = phi0 + e + ph.iter().zip(&lags).map(|(a, b)| a * b).sum::<f64>();
                if p > 0 {
                    lags.rotate_right(1);
                    lags[0] = y;
                }
            }
            sum[2 * k + 2 * p] += part;
            sum[2 * k + 2 * p + 1] += y;
            sum[2 * k + 2 * p + 2] += y * y;
        }
        for (m, v) in acc.0.iter_mut().zip(sum) {
            m.push(0.5 * v);
        }
    });
    let e: Vec<Estimate> = acc.estimates();
    let mean_xi: Vec<f64> = e[..k].iter().map(|x| x.value).collect();
    let mean_xi_m: Vec<f64> = e[2 * k..2 * k + p].iter().map(|x| x.value).collect();
    let mut by_term = 0.0;
    for i in 0..k {
        let v = e[k + i].value - mean_xi[i] * mean_xi[i];
        by_term += phi0 * phi0 * v + spec.sigma2 * e[k + i].value;
    }
    for m in 0..p {
        let v = e[2 * k + p + m].value - mean_xi_m[m] * mean_xi_m[m];
        by_term += v * y0[m] * y0[m];
    }
    let ey = e[2 * k + 2 * p + 1];
    let ey2 = e[2 * k + 2 * p + 2];
    let cond_var = Estimate { value: ey2.value - ey.value * ey.value, se: ey2.se + 2.0 * ey.value.abs() * ey.se };
    Ok(DsarForecast { t, s, point: e[2 * k + 2 * p], mean_xi, mean_xi_m, cond_var_by_term: by_term, cond_var })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RcarStabilityReport {
    pub t_max: usize,
    pub paths: u64,
    pub tol: f64,
    /// Share of paths with `|ξ(s+T, s)| < tol`.
    pub decayed_fraction: f64,
    /// Share of paths with `‖C_{s+T-1,s}‖·|ε_{s+T}| < tol`.
    pub shock_decayed_fraction: f64,
    /// Share of paths whose `sup |ξ(t, s)|` over the later half stays below
    /// `tol`.
    pub late_sup_fraction: f64,
    /// `E log‖C_{s+T,s}‖ / T`: a negative value points to almost sure decay.
    pub log_growth: Estimate,
    /// `E |ξ(s+T, s)|`, capped at `1e300`.
    pub mean_abs_xi: Estimate,
}

/// Monte Carlo evidence on the decay of `ξ(t, s)` for random coefficient
/// paths over `t_max` steps. Nothing here proves stability.
pub fn rcar_stability_diag<R: Runner>(
    spec: &StochasticCoeffSpec,
    t_max: usize,
    tol: f64,
    n: u64,
    seed: u64,
    runner: &R,
) -> Result<RcarStabilityReport> {
    if t_max == 0 || !(tol > 0.0) {
        return Err(Error::invalid("need t_max >= 1 and tol > 0"));
    }
    let template = CoefSampler::new(spec)?;
    let p = spec.ar_order().max(1);
    let ln_tol = tol.ln();
    const FLOOR: f64 = -690.0;
    let acc = runner.run(n, seed, &MomentsVec::new(5), |acc, rng, _| {
        let mut sampler = template.clone();
        // C = m·exp(scale), with C_{s,s} = I.
        let mut m = Matrix::identity(p);
        let mut scale = 0.0_f64;
        let mut late_sup = f64::NEG_INFINITY;
        let mut shock = 0.0;
        for step in 1..=t_max {
            let d = sampler.step(rng);
            if step == t_max {
                shock = (m.max_abs().ln() + scale + d.eps.abs().ln()).max(FLOOR);
            }
            let mut next = Matrix::zeros(p, p);
            for j in 0..p {
                let mut top = 0.0;
                for (i, phi) in d.phi.iter().enumerate() {
                    top += phi * m[(i, j)];
                }
                next[(0, j)] = top;
                for i in 1..p {
                    next[(i, j)] = m[(i - 1, j)];
                }
            }
            m = next;
            let big = m.max_abs();
            if big > 1e100 || (big < 1e-100 && big > 0.0) {
                m = m.scale(1.0 / big);
                scale += big.ln();
            }
            if 2 * step > t_max {
                late_sup = late_sup.max((m[(0, 0)].abs().ln() + scale).max(FLOOR));
            }
        }
        let ln_xi = (m[(0, 0)].abs().ln() + scale).max(FLOOR);
        let ln_norm = (m.max_abs().ln() + scale).max(FLOOR);
        acc.0[0].push(if ln_xi < ln_tol { 1.0 } else { 0.0 });
        acc.0[1].push(if shock < ln_tol { 1.0 } else { 0.0 });
        acc.0[2].push(if late_sup < ln_tol { 1.0 } else { 0.0 });
        acc.0[3].push(ln_norm / t_max as f64);
        acc.0[4].push(ln_xi.min(690.0).exp());
    });
    let e = acc.estimates();
    Ok(RcarStabilityReport {
        t_max,
        paths: n,
        tol,
        decayed_fraction: e[0].value,
        shock_decayed_fraction: e[1].value,
        late_sup_fraction: e[2].value,
        log_growth: e[3],
        mean_abs_xi: e[4],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::CoefLaw;
    use crate::mc::Sequential;
    use crate::moments::unconditional_variance;
    use crate::tail::TruncationPolicy;

    fn yule_walker_ar2(f1: f64, f2: f64, s2: f64) -> (f64, f64) {
        let g0 = s2 * (1.0 - f2) / ((1.0 + f2) * ((1.0 - f2).powi(2) - f1 * f1));
        (g0, f1 * g0 / (1.0 - f2))
    }

    #[test]
    fn degenerate_grc_is_yule_walker() {
        let inputs = GrcMomentInputs::degenerate(1.0, &[0.5, 0.3], 2.0);
        let ac = grc_autocov(&inputs, 6).unwrap();
        let (g0, g1) = yule_walker_ar2(0.5, 0.3, 2.0);
        assert!((ac.gamma[0] - g0).abs() < 1e-12 && (ac.gamma[1] - g1).abs() < 1e-12);
        let mut g = vec![g0, g1];
        for l in 2..=6 {
            g.push(0.5 * g[l - 1] + 0.3 * g[l - 2]);
        }
        for l in 0..=6 {
            assert!((ac.gamma[l] - g[l]).abs() < 1e-12);
        }
        assert!((ac.mean - 5.0).abs() < 1e-12);
    }

    #[test]
    fn sigma2_trivial_cases() {
        let mut inputs = GrcMomentInputs::degenerate(1.0, &[0.5], 1.5);
        assert_eq!(grc_sigma2(&inputs, 2.0), 1.5);
        inputs.cov[0][0] = 0.3;
        assert!((grc_sigma2(&inputs, 2.0) - 1.8).abs() < 1e-15);
    }

    #[test]
    fn ar2_closed_form_matches_inverse() {
        let mut inputs = GrcMomentInputs::degenerate(0.2, &[0.4, 0.2], 1.0);
        inputs.cov[1][1] = 0.05;
        inputs.cov[2][2] = 0.02;
        inputs.cov[1][2] = 0.01;
        inputs.cov[2][1] = 0.01;
        let (a, b) = grc_ar2_closed_form(&inputs).unwrap();
        let inv = Matrix::identity(4).sub(&expected_kron(&inputs)).inverse().unwrap();
        assert!((inv[(0, 0)] - a).abs() < 1e-12);
        assert!((inv[(1, 0)] - b).abs() < 1e-12);
    }

    #[test]
    fn bilinear_moments_from_spec() {
        let spec = StochasticCoeffSpec::MarkovBilinear { drift: 0.0, phi: vec![0.3], vartheta: vec![0.2], sigma2: 1.0 };
        let g = GrcMomentInputs::from_spec(&spec).unwrap();
        assert!((g.cov[1][1] - 0.04).abs() < 1e-15);
        assert!((g.cross[1] - 0.2).abs() < 1e-15);
        let gen = StochasticCoeffSpec::GenMarkovBilinear {
            drift: 0.0,
            c: vec![0.3],
            vartheta: vec![0.2],
            powers: vec![1],
            sigma2: 1.0,
        };
        assert_eq!(GrcMomentInputs::from_spec(&gen).unwrap(), g);
        assert!(GrcMomentInputs::from_spec(&StochasticCoeffSpec::DoubleStochastic(DsarSpec {
            phi0: 0.0,
            laws: vec![],
            sigma2: 1.0
        }))
        .is_err());
    }

    #[test]
    fn degenerate_dsar_matches_deterministic() {
        let spec = DsarSpec {
            phi0: 1.0,
            laws: vec![CoefLaw { beta0: 0.25, beta: vec![0.5], sd: 0.0 }, CoefLaw { beta0: 0.2, beta: vec![0.0], sd: 0.0 }],
            sigma2: 1.0,
        };
        let mc = dsar_moments_mc(&spec, 200, 10, 4, 1, &Sequential).unwrap();
        let path = ConstantPath::ar(&[0.5, 0.2]);
        let v = unconditional_variance(&path, 0, &TruncationPolicy::default()).unwrap().value;
        assert!((mc.mean.value - 1.0 / 0.3).abs() < 1e-9);
        assert!((mc.variance.value - v).abs() < 1e-9);
        assert!((mc.variance_by_lag - v).abs() < 1e-9);
        assert!(mc.first_order_decays && mc.second_order_decays);
    }

    #[test]
    fn dsar_one_step_is_exact() {
        let spec = DsarSpec {
            phi0: 0.5,
            laws: vec![CoefLaw { beta0: 0.1, beta: vec![0.6], sd: 0.2 }],
            sigma2: 1.0,
        };
        let f = dsar_predict(&spec, 1, 0, &[2.0], &[vec![0.4]], 50, 3, &Sequential).unwrap();
        let expected = (0.1 + 0.6 * 0.4) * 2.0 + 0.5;
        assert!((f.point.value - expected).abs() < 1e-12, "{}", f.point.value);
    }

    #[test]
    fn rcar_decays_almost_surely_without_l1() {
        let spec = StochasticCoeffSpec::RandomCoefficient {
            means: vec![0.0, 0.0],
            cov: vec![vec![0.0, 0.0, 0.0], vec![0.0, 2.25, 0.0], vec![0.0, 0.0, 1.0]],
        };
        let rep = rcar_stability_diag(&spec, 500, 1e-8, 400, 5, &Sequential).unwrap();
        assert!(rep.log_growth.value < 0.0);
        assert!(rep.decayed_fraction > 0.95);
        let explosive = StochasticCoeffSpec::MarkovBilinear { drift: 0.0, phi: vec![1.1], vartheta: vec![0.0], sigma2: 1.0 };
        let rep = rcar_stability_diag(&explosive, 200, 1e-8, 10, 5, &Sequential).unwrap();
        assert_eq!(rep.decayed_fraction, 0.0);
    }
}
