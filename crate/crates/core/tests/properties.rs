use std::sync::Arc;

use proptest::prelude::*;
use tvarma_core::breaks::{dabar_variance, fit_segmented_ar};
use tvarma_core::coefficients::{make_logistic_path, make_periodic_path, sample_stochastic_path, StochasticCoeffSpec};
use tvarma_core::forecast::{mse_at_horizon, predict_finite};
use tvarma_core::green::{oracle::xi_det, theta_green, xi, xi_m};
use tvarma_core::moments::autocovariance;
use tvarma_core::path::{CoefficientPath, ConstantPath, Regime, TablePath, Time};
use tvarma_core::polyops::{left_inverse_residual, truncated_inverse, TvPoly};
use tvarma_core::process::{companion_product, represent, simulate_with_innovations, InitialValues};
use tvarma_core::stochastic::{expected_kron, grc_autocov, GrcMomentInputs};
use tvarma_core::tail::TruncationPolicy;

const LEN: usize = 40;
const LAST: Time = LEN as Time - 1;

fn regime(p: usize, q: usize) -> impl Strategy<Value = Regime> {
    let bound = 0.95 / p.max(1) as f64;
    (
        -1.0..1.0f64,
        prop::collection::vec(-bound..bound, p),
        prop::collection::vec(-0.8..0.8f64, q),
        0.2..3.0f64,
    )
        .prop_map(|(d, phi, theta, s2)| Regime::arma(d, &phi, &theta, s2))
}

fn table_path(max_p: usize, max_q: usize) -> impl Strategy<Value = TablePath> {
    (1..=max_p, 0..=max_q).prop_flat_map(|(p, q)| {
        prop::collection::vec(regime(p, q), LEN).prop_map(|rows| TablePath::new(0, rows).unwrap())
    })
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

/// Least squares by Gauss-Jordan on the normal equations; `None` when singular.
fn ols_ssr(y: &[f64], p: usize, a: usize, b: usize) -> Option<f64> {
    let k = p + 1;
    let mut m = vec![vec![0.0; k + 1]; k];
    for t in a..=b {
        let x: Vec<f64> = std::iter::once(1.0).chain((1..=p).map(|j| y[t - j])).collect();
        for i in 0..k {
            for j in 0..k {
                m[i][j] += x[i] * x[j];
            }
            m[i][k] += x[i] * y[t];
        }
    }
    for c in 0..k {
        let piv = (c..k).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs()))?;
        m.swap(c, piv);
        if m[c][c].abs() < 1e-12 {
            return None;
        }
        for r in 0..k {
            if r != c {
                let f = m[r][c] / m[c][c];
                for j in c..=k {
                    m[r][j] -= f * m[c][j];
                }
            }
        }
    }
    let beta: Vec<f64> = (0..k).map(|i| m[i][k] / m[i][i]).collect();
    Some(
        (a..=b)
            .map(|t| {
                let fit = beta[0] + (1..=p).map(|j| beta[j] * y[t - j]).sum::<f64>();
                (y[t] - fit).powi(2)
            })
            .sum(),
    )
}

/// Minimal SSR over all partitions of observations `p..len` into
/// `breaks + 1` segments of at least `min_seg` observations.
fn exhaustive(y: &[f64], p: usize, breaks: usize, min_seg: usize) -> Option<(f64, Vec<usize>)> {
    fn rec(y: &[f64], p: usize, from: usize, left: usize, min_seg: usize, cuts: &mut Vec<usize>, best: &mut Option<(f64, Vec<usize>)>) {
        let n = y.len();
        if left == 0 {
            let mut ssr = 0.0;
            let mut a = p;
            for &c in cuts.iter().chain(std::iter::once(&(n - 1))) {
                if c + 1 - a < min_seg {
                    return;
                }
                match ols_ssr(y, p, a, c) {
                    Some(s) => ssr += s,
                    None => return,
                }
                a = c + 1;
            }
            if best.as_ref().is_none_or(|(b, _)| ssr < *b) {
                *best = Some((ssr, cuts.clone()));
            }
            return;
        }
        for c in from + min_seg - 1..n {
            cuts.push(c);
            rec(y, p, c + 1, left - 1, min_seg, cuts, best);
            cuts.pop();
        }
    }
    let mut best = None;
    rec(y, p, p, breaks, min_seg, &mut Vec::new(), &mut best);
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn recursion_matches_determinant(path in table_path(4, 0), s in 0..20i64, k in 0..=12i64) {
        let t = s + k;
        let a = xi(&path, t, s).unwrap();
        let b = xi_det(&path, t, s).unwrap();
        prop_assert!(close(a, b, 1e-9), "{a} vs {b}");
    }

    #[test]
    fn xi_column_solves_homogeneous_equation(path in table_path(4, 0), s in 5..15i64, k in 1..20i64) {
        let t = s + k;
        let p = path.ar_order();
        let col = |u: Time| if u < s { 0.0 } else { xi(&path, u, s).unwrap() };
        let rhs: f64 = (1..=p).map(|m| path.phi(m, t) * col(t - m as Time)).sum();
        prop_assert!(close(col(t), rhs, 1e-12));
        prop_assert_eq!(col(s), 1.0);
    }

    #[test]
    fn fundamental_solution_basis(path in table_path(4, 0), t in 1..=LAST) {
        for m in 1..=path.ar_order() {
            prop_assert_eq!(xi_m(&path, m, t, t - 1).unwrap(), path.phi(m, t));
        }
    }

    #[test]
    fn periodic_seasons_multiply(coeffs in prop::collection::vec(-1.5..1.5f64, 1..5), k in 1..6usize) {
        let path = make_periodic_path(&coeffs, 1.0).unwrap();
        let l = coeffs.len();
        let prod: f64 = coeffs.iter().product();
        let v = xi(&path, (k * l) as Time, 0).unwrap();
        prop_assert!(close(v, prod.powi(k as i32), 1e-12));
    }

    #[test]
    fn ma_green_is_ar_green_of_negated_coefficients(path in table_path(2, 3), s in 0..20i64, k in 0..12i64) {
        prop_assume!(path.ma_order() > 0);
        let rows = path
            .rows()
            .iter()
            .map(|r| Regime::ar(0.0, &r.theta.iter().map(|v| -v).collect::<Vec<_>>(), 1.0))
            .collect();
        let mirror = TablePath::new(0, rows).unwrap();
        prop_assert_eq!(theta_green(&path, s + k, s).unwrap(), xi(&mirror, s + k, s).unwrap());
    }

    #[test]
    fn companion_product_holds_fundamental_solutions(path in table_path(4, 0), s in 4..15i64, k in 0..=10i64) {
        let t = s + k;
        let c = companion_product(&path, t, s).unwrap();
        let p = path.ar_order();
        for i in 0..p {
            for m in 1..=p {
                let want = if (t - i as Time) < s { 0.0 } else { xi_m(&path, m, t - i as Time, s).unwrap() };
                // Rows below the first lag the first row by one step each.
                if t - (i as Time) >= s {
                    prop_assert!(close(c[(i, m - 1)], want, 1e-9), "({i},{m}): {} vs {want}", c[(i, m - 1)]);
                }
            }
        }
    }

    #[test]
    fn representation_reproduces_simulation(path in table_path(3, 2), seed in any::<u64>(), s in 5..20i64, k in 1..15i64) {
        let mut state = seed | 1;
        let eps: Vec<f64> = (0..LEN - 2).map(|_| {
            state ^= state << 13; state ^= state >> 7; state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        }).collect();
        let run = simulate_with_innovations(&path, 2, &InitialValues::zeros(), &eps).unwrap();
        let t = (s + k).min(LAST);
        let init = run.initial_values_at(s, path.ar_order(), path.ma_order());
        let y = represent(&path, t, s, &init, |r| run.eps_at(r).unwrap()).unwrap();
        prop_assert!(close(y, run.y_at(t).unwrap(), 1e-9));
    }

    #[test]
    fn skew_product_is_associative(a in prop::collection::vec(-1.0..1.0f64, 1..4), b in prop::collection::vec(-1.0..1.0f64, 1..4), c in prop::collection::vec(-1.0..1.0f64, 1..4)) {
        let tv = |v: Vec<f64>, w: f64| TvPoly::from_fn(v.len() - 1, move |t| v.iter().map(|x| x * (1.0 + 0.3 * (w * t as f64).sin())).collect());
        let (a, b, c) = (tv(a, 0.7), tv(b, 1.3), tv(c, 0.4));
        let grid: Vec<Time> = (-10..10).collect();
        let d = a.skew_mul(&b).skew_mul(&c).max_diff_on(&a.skew_mul(&b.skew_mul(&c)), &grid);
        prop_assert!(d < 1e-12);
    }

    #[test]
    fn truncated_inverse_is_left_inverse(phi in prop::collection::vec(-0.45..0.45f64, 1..3), t in -5..5i64) {
        let path = Arc::new(ConstantPath::ar(&phi));
        let inv = truncated_inverse(path.clone(), t, &TruncationPolicy::default()).unwrap();
        prop_assert!(left_inverse_residual(&inv, path, t) < 1e-8);
    }

    #[test]
    fn mse_grows_with_horizon(r in regime(2, 2), t in -5..5i64) {
        let path = ConstantPath::new(r).unwrap();
        let mut prev = 0.0;
        for k in 1..15 {
            let m = mse_at_horizon(&path, t, k).unwrap();
            prop_assert!(m >= prev);
            prev = m;
        }
    }

    #[test]
    fn mse_is_weighted_sum_of_squares(path in table_path(2, 2), s in 3..20i64, k in 1..15i64) {
        let init = InitialValues { y: vec![0.3; path.ar_order()], eps: vec![0.1; path.ma_order()] };
        let f = predict_finite(&path, s + k, s, &init).unwrap();
        let direct: f64 = f.fe_weights.iter().enumerate().map(|(i, w)| w * w * path.sigma2(s + 1 + i as Time)).sum();
        prop_assert!(f.mse >= 0.0);
        prop_assert!(close(f.mse, direct, 1e-14));
    }

    #[test]
    fn degenerate_grc_matches_deterministic(phi1 in -0.6..0.6f64, phi2 in -0.3..0.3f64, drift in -1.0..1.0f64) {
        let phi = [phi1, phi2];
        let g = grc_autocov(&GrcMomentInputs::degenerate(drift, &phi, 1.3), 5).unwrap();
        let path = ConstantPath::new(Regime::ar(drift, &phi, 1.3)).unwrap();
        for (lag, v) in g.gamma.iter().enumerate() {
            let d = autocovariance(&path, 0, lag, &TruncationPolicy::default()).unwrap().value;
            prop_assert!(close(*v, d, 1e-9), "lag {lag}: {v} vs {d}");
        }
    }

    #[test]
    fn expected_kron_matches_discrete_expectation(
        support in prop::collection::vec((-0.8..0.8f64, -0.5..0.5f64), 2..5),
        weights in prop::collection::vec(0.1..1.0f64, 5),
    ) {
        let w: Vec<f64> = weights[..support.len()].to_vec();
        let total: f64 = w.iter().sum();
        let pr: Vec<f64> = w.iter().map(|v| v / total).collect();
        let e = |f: &dyn Fn(f64, f64) -> f64| support.iter().zip(&pr).map(|(&(a, b), q)| q * f(a, b)).sum::<f64>();
        let (m1, m2) = (e(&|a, _| a), e(&|_, b| b));
        let cov = vec![
            vec![0.0, 0.0, 0.0],
            vec![0.0, e(&|a, _| a * a) - m1 * m1, e(&|a, b| a * b) - m1 * m2],
            vec![0.0, e(&|a, b| a * b) - m1 * m2, e(&|_, b| b * b) - m2 * m2],
        ];
        let inputs = GrcMomentInputs { means: vec![0.0, m1, m2], cov, cross: vec![0.0; 3], sigma_eps2: 1.0 };
        let k = expected_kron(&inputs);
        // Brute force: average Φ ⊗ Φ over the support.
        let mut brute = [[0.0; 4]; 4];
        for (&(a, b), q) in support.iter().zip(&pr) {
            let phi = [[a, b], [1.0, 0.0]];
            for r in 0..4 {
                for c in 0..4 {
                    brute[r][c] += q * phi[r / 2][c / 2] * phi[r % 2][c % 2];
                }
            }
        }
        for r in 0..4 {
            for c in 0..4 {
                prop_assert!((k[(r, c)] - brute[r][c]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn dab_variance_reduces_to_time_invariant(f1 in -0.9..0.9f64, f2 in -0.9..0.9f64, s2 in 0.1..5.0f64) {
        prop_assume!(f2.abs() < 0.95 && f1.abs() < 0.95 * (1.0 - f2));
        let r = Regime::ar(0.2, &[f1, f2], s2);
        let d = dabar_variance(&[r.clone(), Regime::ar(0.0, &[0.1, 0.1], 1.0), Regime::ar(0.0, &[0.3, 0.0], 2.0)], 0, 0).unwrap();
        let v = (1.0 - f2) * s2 / ((1.0 + f2) * ((1.0 - f2).powi(2) - f1 * f1));
        prop_assert!((d.var - v).abs() <= 1e-12 * v.max(1.0));
        prop_assert!(d.var >= 0.0);
    }

    #[test]
    fn logistic_is_monotone(phi1 in -0.9..0.9f64, phi2 in -0.9..0.9f64, gamma in 0.01..3.0f64, tau in -20.0..20.0f64) {
        let path = make_logistic_path(phi1, phi2, gamma, tau, 1.0).unwrap();
        let (lo, hi) = (phi1.min(phi2), phi1.max(phi2));
        let vals: Vec<f64> = (-60..60).map(|t| path.phi(1, t)).collect();
        let up = phi2 >= phi1;
        for w in vals.windows(2) {
            let ordered = if up { w[1] >= w[0] } else { w[1] <= w[0] };
            prop_assert!(ordered);
        }
        prop_assert!(vals.iter().all(|v| *v >= lo - 1e-15 && *v <= hi + 1e-15));
    }

    #[test]
    fn seeded_paths_are_reproducible(seed in any::<u64>()) {
        let spec = StochasticCoeffSpec::MarkovBilinear { drift: 0.1, phi: vec![0.4, 0.1], vartheta: vec![0.2, -0.1], sigma2: 1.0 };
        let a = sample_stochastic_path(&spec, seed, 0, 30, 10).unwrap();
        let b = sample_stochastic_path(&spec, seed, 0, 30, 10).unwrap();
        prop_assert_eq!(&a.path, &b.path);
        prop_assert_eq!(&a.innovations, &b.innovations);
        for t in 0..30 {
            prop_assert!(a.path.sigma2(t) > 0.0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn segmentation_is_globally_optimal(y in prop::collection::vec(-3.0..3.0f64, 24..=40), breaks in 0..=2usize) {
        let p = 1;
        let min_seg = 4;
        let res = fit_segmented_ar(&y, p, breaks, Some(min_seg)).unwrap();
        let (ssr, cuts) = exhaustive(&y, p, breaks, min_seg).unwrap();
        let fit = &res.fits[breaks];
        prop_assert_eq!(&fit.breaks, &cuts);
        prop_assert!(close(fit.ssr, ssr, 1e-9), "{} vs {ssr}", fit.ssr);
        for seg in &fit.segments {
            prop_assert!(seg.len() >= min_seg);
        }
    }
}
