//! Self-checks run by `tvarma verify`: the Green function against
//! independent computations, the persistence table, and operator identities.

use std::sync::Arc;

use rand::Rng;
use serde::Serialize;
use tvarma_core::breaks::segment_persistence;
use tvarma_core::green::{oracle, toeplitz_closed_form, xi};
use tvarma_core::mc::replication_rng;
use tvarma_core::path::{ConstantPath, GegenbauerPath, PeriodicPath, Regime, TablePath, Time};
use tvarma_core::polyops::{left_inverse_residual, truncated_inverse, verify_representation_identity};
use tvarma_core::process::{simulate_with_innovations, InitialValues};
use tvarma_core::tail::TruncationPolicy;

use crate::spec::ModelSpec;

/// Bundled three-regime AR(2) model of quarterly US inflation.
pub const INFLATION_DAB_SPEC: &str = include_str!("../data/us_inflation_dab.json");

/// Reference persistence measures for [`INFLATION_DAB_SPEC`], one row per
/// regime: LAR, 1/(1-SUM), mean, S0, P, Var.
pub const INFLATION_PERSISTENCE: [[f64; 6]; 3] = [
    [0.892, 6.493, 3.221, 7.784, 2.692, 3.122],
    [0.858, 6.135, 22.313, 31.688, 3.002, 15.881],
    [0.560, 0.937, 2.679, 0.652, 1.150, 5.365],
];

pub const PERSISTENCE_COLUMNS: [&str; 6] = ["LAR", "1/(1-SUM)", "mean", "S0", "P", "Var"];

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, worst: f64, tol: f64, cases: usize) -> Check {
    Check { name, passed: worst <= tol, detail: format!("{cases} cases, worst {worst:.3e} (tol {tol:.0e})") }
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

fn random_table(rng: &mut impl Rng, p: usize, q: usize, len: usize) -> TablePath {
    let rows = (0..len)
        .map(|_| {
            let phi: Vec<f64> = (0..p).map(|_| rng.random_range(-1.0..1.0) / p as f64).collect();
            let theta: Vec<f64> = (0..q).map(|_| rng.random_range(-0.6..0.6)).collect();
            Regime::arma(rng.random_range(-1.0..1.0), &phi, &theta, rng.random_range(0.5..2.0))
        })
        .collect();
    TablePath::new(0, rows).expect("valid rows")
}

pub fn determinant_check(paths: usize, seed: u64) -> Check {
    let mut worst = 0.0_f64;
    for i in 0..paths {
        let mut rng = replication_rng(seed, i as u64);
        let p = rng.random_range(1..=4);
        let path = random_table(&mut rng, p, 0, 20);
        for k in 0..=12 {
            let s = rng.random_range(0..8);
            let a = xi(&path, s + k, s).expect("in window");
            let b = oracle::xi_det(&path, s + k, s).expect("in window");
            worst = worst.max(rel_err(a, b));
        }
    }
    check("recursion vs determinant", worst, 1e-9, paths * 13)
}

/// `h_k(λ)`, the complete homogeneous symmetric polynomial, by the
/// recurrence over roots.
fn complete_homogeneous(roots: &[f64], k: usize) -> f64 {
    let mut h = vec![0.0; k + 1];
    h[0] = 1.0;
    for &l in roots {
        for j in 1..=k {
            h[j] += l * h[j - 1];
        }
    }
    h[k]
}

/// AR coefficients of `Π (1 - λ_i B)`.
pub fn ar_from_roots(roots: &[f64]) -> Vec<f64> {
    let mut c = vec![1.0];
    for &l in roots {
        let mut next = c.clone();
        next.push(0.0);
        for j in 1..next.len() {
            next[j] -= l * c[j - 1];
        }
        c = next;
    }
    c[1..].iter().map(|v| -v).collect()
}

pub fn widom_check() -> Check {
    let sets: [&[f64]; 4] = [&[0.5, -0.3], &[0.9, 0.2], &[0.7, -0.6, 0.1], &[-0.8, 0.45, 0.3]];
    let mut worst = 0.0_f64;
    for roots in sets {
        let phi = ar_from_roots(roots);
        let path = ConstantPath::ar(&phi);
        for k in 0..=40 {
            let r = xi(&path, k as Time, 0).expect("unbounded");
            worst = worst.max(rel_err(r, complete_homogeneous(roots, k)));
            worst = worst.max(rel_err(r, toeplitz_closed_form(&phi, k).expect("distinct roots")));
        }
    }
    check("closed form for constant coefficients", worst, 1e-10, 4 * 41)
}

pub fn gegenbauer_check() -> Check {
    let mut worst = 0.0_f64;
    let mut cases = 0;
    for d in [0.1, 0.25, 0.4, 0.75] {
        for phi in [-0.8, -0.3, 0.2, 0.6, 0.95] {
            let path = GegenbauerPath { d, phi };
            let (mut c0, mut c1) = (1.0, 2.0 * d * phi);
            for j in 0..=50usize {
                let c = match j {
                    0 => c0,
                    1 => c1,
                    _ => {
                        let jf = j as f64;
                        let c2 = (2.0 * phi * (jf + d - 1.0) * c1 - (jf + 2.0 * d - 2.0) * c0) / jf;
                        (c0, c1) = (c1, c2);
                        c2
                    }
                };
                worst = worst.max(rel_err(xi(&path, j as Time, 0).expect("in window"), c));
                cases += 1;
            }
        }
    }
    check("Gegenbauer coefficients", worst, 1e-9, cases)
}

/// Largest relative deviation from [`INFLATION_PERSISTENCE`].
pub fn persistence_deviations() -> Vec<[f64; 6]> {
    let spec = ModelSpec::from_json(INFLATION_DAB_SPEC).expect("bundled spec");
    let path = spec.break_path().expect("bundled spec");
    let policy = TruncationPolicy::default();
    path.regimes()
        .iter()
        .zip(INFLATION_PERSISTENCE)
        .map(|(r, want)| {
            let m = segment_persistence(r, &policy).expect("stationary regime");
            let got = [m.lar, m.inv_one_minus_sum.unwrap(), m.mean.unwrap(), m.s0.unwrap(), m.p.unwrap(), m.var.unwrap()];
            std::array::from_fn(|i| ((got[i] - want[i]) / want[i]).abs())
        })
        .collect()
}

pub fn persistence_check() -> Check {
    let worst = persistence_deviations().iter().flatten().fold(0.0_f64, |a, &b| a.max(b));
    check("inflation persistence table", worst, 5e-3, 18)
}

pub fn representation_check(cases: usize, seed: u64) -> Check {
    let mut worst = 0.0_f64;
    for i in 0..cases {
        let mut rng = replication_rng(seed, i as u64);
        let path = Arc::new(random_table(&mut rng, 2, 2, 60));
        let eps: Vec<f64> = (0..58).map(|_| rng.random_range(-1.0..1.0)).collect();
        let run = simulate_with_innovations(&*path, 2, &InitialValues::zeros(), &eps).expect("finite");
        let s = rng.random_range(5..30);
        let t = s + rng.random_range(1..25);
        worst = worst.max(verify_representation_identity(path, &run, t, s).expect("covered"));
    }
    check("operator form of the explicit solution", worst, 1e-9, cases)
}

pub fn left_inverse_check() -> Check {
    let policy = TruncationPolicy::default();
    let mut worst = 0.0_f64;
    let constant = Arc::new(ConstantPath::ar(&[0.6, -0.2]));
    let periodic = Arc::new(
        PeriodicPath::new(vec![Regime::ar(0.0, &[1.3], 1.0), Regime::ar(0.0, &[0.4], 1.0), Regime::ar(0.0, &[0.5], 1.0)], 0)
            .expect("valid"),
    );
    for t in [0, 7, 23] {
        let inv = truncated_inverse(constant.clone(), t, &policy).expect("stable");
        worst = worst.max(left_inverse_residual(&inv, constant.clone(), t));
        let inv = truncated_inverse(periodic.clone(), t, &policy).expect("stable");
        worst = worst.max(left_inverse_residual(&inv, periodic.clone(), t));
    }
    check("skew left inverse", worst, 1e-8, 6)
}

pub fn run_all(seed: u64) -> Vec<Check> {
    vec![
        determinant_check(500, seed),
        widom_check(),
        gegenbauer_check(),
        persistence_check(),
        representation_check(100, seed),
        left_inverse_check(),
    ]
}
