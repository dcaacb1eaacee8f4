//! The principal determinant `ξ(t, s)` and the kernels derived from it.
//!
//! `ξ(t, s)` is the Green function of the time-varying AR recursion: it is 1
//! at `t = s`, 0 for `t < s`, and obeys
//! `ξ(t, s) = Σ_m φ_m(t) ξ(t - m, s)` for `t > s`. Equivalently it is the
//! determinant of a banded lower Hessenberg matrix built from the
//! coefficients on `(s, t]`; [`oracle`] evaluates that determinant directly.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::ar_inverse_roots;
use crate::path::{CoefficientPath, MaMirror, Time};

/// `ξ(t, s)` without window checks. Forward recursion in `t` from `ξ(s, s) = 1`.
pub fn xi_unchecked<P: CoefficientPath + ?Sized>(path: &P, t: Time, s: Time) -> f64 {
    if t < s {
        return 0.0;
    }
    let k = (t - s) as usize;
    let p = path.ar_order();
    let mut buf = vec![0.0; k + 1];
    buf[0] = 1.0;
    for j in 1..=k {
        let tt = s + j as Time;
        let mut acc = 0.0;
        for m in 1..=p.min(j) {
            acc += path.phi(m, tt) * buf[j - m];
        }
        buf[j] = acc;
    }
    buf[k]
}

/// `ξ(t, s)`; needs the coefficients on `(s, t]`.
pub fn xi<P: CoefficientPath + ?Sized>(path: &P, t: Time, s: Time) -> Result<f64> {
    path.window().check_range(s + 1, t)?;
    Ok(xi_unchecked(path, t, s))
}

/// Walks `r = t, t-1, t-2, ...` yielding `(r, ξ(t, r))` via the backward
/// identity `ξ(t, r) = Σ_m φ_m(r + m) ξ(t, r + m)`. The iterator is endless.
pub struct XiRow<'a, P: ?Sized> {
    path: &'a P,
    t: Time,
    next_r: Time,
    p: usize,
    recent: VecDeque<f64>,
}

impl<'a, P: CoefficientPath + ?Sized> XiRow<'a, P> {
    pub fn new(path: &'a P, t: Time) -> Self {
        let p = path.ar_order();
        XiRow { path, t, next_r: t, p, recent: VecDeque::with_capacity(p + 1) }
    }
}

impl<P: CoefficientPath + ?Sized> Iterator for XiRow<'_, P> {
    type Item = (Time, f64);

    fn next(&mut self) -> Option<(Time, f64)> {
        let r = self.next_r;
        let v = if r == self.t {
            1.0
        } else {
            let mut acc = 0.0;
            for (i, &x) in self.recent.iter().enumerate() {
                acc += self.path.phi(i + 1, r + i as Time + 1) * x;
            }
            acc
        };
        if self.p > 0 {
            if self.recent.len() == self.p {
                self.recent.pop_back();
            }
            self.recent.push_front(v);
        }
        self.next_r -= 1;
        Some((r, v))
    }
}

/// Walks `r = t, t-1, ...` yielding `(r, ξ(t, r), ξ_q(t, r))`.
pub struct XiQRow<'a, P: ?Sized> {
    row: XiRow<'a, P>,
    path: &'a P,
    q: usize,
    recent: VecDeque<f64>,
}

impl<'a, P: CoefficientPath + ?Sized> XiQRow<'a, P> {
    pub fn new(path: &'a P, t: Time) -> Self {
        let q = path.ma_order();
        XiQRow { row: XiRow::new(path, t), path, q, recent: VecDeque::with_capacity(q + 1) }
    }
}

impl<P: CoefficientPath + ?Sized> Iterator for XiQRow<'_, P> {
    type Item = (Time, f64, f64);

    fn next(&mut self) -> Option<(Time, f64, f64)> {
        let (r, x) = self.row.next()?;
        let mut xq = x;
        for (i, &v) in self.recent.iter().enumerate() {
            let l = i + 1;
            xq += v * self.path.theta(l, r + l as Time);
        }
        if self.q > 0 {
            if self.recent.len() == self.q {
                self.recent.pop_back();
            }
            self.recent.push_front(x);
        }
        Some((r, x, xq))
    }
}

/// `[ξ(t, t), ξ(t, t-1), ..., ξ(t, t-len+1)]`.
pub fn xi_row<P: CoefficientPath + ?Sized>(path: &P, t: Time, len: usize) -> Result<Vec<f64>> {
    if len > 0 {
        path.window().check_range(t - len as Time + 2, t)?;
    }
    Ok(XiRow::new(path, t).take(len).map(|(_, v)| v).collect())
}

fn check_lag(m: usize, order: usize) -> Result<()> {
    if m == 0 || m > order {
        Err(Error::LagOutOfRange { lag: m, order })
    } else {
        Ok(())
    }
}

/// Fundamental solution `ξ^(m)(t, s)`: the homogeneous solution with initial
/// values `y_{s+1-m} = 1` and `y_{s+1-j} = 0` for `j ≠ m`.
///
/// For `t > s` this is `Σ_{r=1}^{p+1-m} φ_{m-1+r}(s+r) ξ(t, s+r)`; on the
/// initial stretch `s+1-p <= t <= s` it is the indicator of `t = s+1-m`.
pub fn xi_m<P: CoefficientPath + ?Sized>(path: &P, m: usize, t: Time, s: Time) -> Result<f64> {
    let p = path.ar_order();
    check_lag(m, p)?;
    if t <= s {
        return Ok(if t == s + 1 - m as Time { 1.0 } else { 0.0 });
    }
    path.window().check_range(s + 1, t)?;
    let row = xi_row(path, t, (t - s) as usize)?;
    Ok(xi_m_from_row(path, m, t, s, &row))
}

/// `ξ^(m)(t, s)` for `t > s` given `row[j] = ξ(t, t - j)`, `j < t - s`.
pub(crate) fn xi_m_from_row<P: CoefficientPath + ?Sized>(path: &P, m: usize, t: Time, s: Time, row: &[f64]) -> f64 {
    let p = path.ar_order();
    let mut acc = 0.0;
    for r in 1..=(p + 1 - m) {
        let tr = s + r as Time;
        if tr > t {
            break;
        }
        acc += path.phi(m - 1 + r, tr) * row[(t - tr) as usize];
    }
    acc
}

/// MA-augmented kernel `ξ_q(t, r) = ξ(t, r) + Σ_{l=1}^q ξ(t, r+l) θ_l(r+l)`.
pub fn xi_q<P: CoefficientPath + ?Sized>(path: &P, t: Time, r: Time) -> Result<f64> {
    if r > t {
        return Ok(0.0);
    }
    path.window().check_range(r + 1, t)?;
    Ok(XiQRow::new(path, t).nth((t - r) as usize).map(|x| x.2).unwrap_or(0.0))
}

/// Seed kernel `ξ_{s,q}(t, r) = Σ_{l=s+1-r}^{q} ξ(t, r+l) θ_l(r+l)`, used for
/// the pre-sample innovations `r <= s`. The lower limit is clamped at 1.
pub fn xi_sq<P: CoefficientPath + ?Sized>(path: &P, s: Time, t: Time, r: Time) -> Result<f64> {
    let q = path.ma_order() as Time;
    let lo = (s + 1 - r).max(1);
    if lo > q || r + lo > t {
        return Ok(0.0);
    }
    path.window().check_range(r + lo, t)?;
    let row = xi_row(path, t, (t - r - lo + 1) as usize)?;
    Ok(xi_sq_from_row(path, s, t, r, &row))
}

pub(crate) fn xi_sq_from_row<P: CoefficientPath + ?Sized>(path: &P, s: Time, t: Time, r: Time, row: &[f64]) -> f64 {
    let q = path.ma_order() as Time;
    let mut acc = 0.0;
    for l in (s + 1 - r).max(1)..=q {
        let tl = r + l;
        if tl > t {
            break;
        }
        acc += row[(t - tl) as usize] * path.theta(l as usize, tl);
    }
    acc
}

/// MA-side Green function `ϑ(t, s)`: the principal determinant of the
/// recursion with coefficients `-θ_l(t)`.
pub fn theta_green<P: CoefficientPath + ?Sized>(path: &P, t: Time, s: Time) -> Result<f64> {
    xi(&MaMirror(path), t, s)
}

/// `ϑ_p(t, r) = ϑ(t, r) - Σ_m ϑ(t, r+m) φ_m(r+m)`: the weight on `y_r` when
/// the innovations are recovered from the observations.
pub fn theta_p<P: CoefficientPath + ?Sized>(path: &P, t: Time, r: Time) -> Result<f64> {
    if r > t {
        return Ok(0.0);
    }
    path.window().check_range(r + 1, t)?;
    let mirror = MaMirror(path);
    let row: Vec<f64> = XiRow::new(&mirror, t).take((t - r) as usize + 1).map(|x| x.1).collect();
    Ok(theta_p_from_row(path, t, r, &row))
}

pub(crate) fn theta_p_from_row<P: CoefficientPath + ?Sized>(path: &P, t: Time, r: Time, row: &[f64]) -> f64 {
    let mut acc = row[(t - r) as usize];
    for m in 1..=path.ar_order() {
        let rm = r + m as Time;
        if rm > t {
            break;
        }
        acc -= row[(t - rm) as usize] * path.phi(m, rm);
    }
    acc
}

/// Closed form for constant coefficients with distinct inverse roots
/// `λ_1..λ_p` of `1 - Σ φ_m B^m`:
/// `ξ_k = Σ_m λ_m^{k+p-1} / Π_{n≠m} (λ_m - λ_n)`.
pub fn toeplitz_closed_form(phi: &[f64], k: usize) -> Result<f64> {
    let p = phi.len();
    if p == 0 {
        return Ok(if k == 0 { 1.0 } else { 0.0 });
    }
    let roots = ar_inverse_roots(phi)?;
    let scale = roots.iter().fold(1e-300_f64, |a, r| a.max(r.norm()));
    let mut total = Complex64::new(0.0, 0.0);
    for (m, &lm) in roots.iter().enumerate() {
        let mut den = Complex64::new(1.0, 0.0);
        for (n, &ln) in roots.iter().enumerate() {
            if n != m {
                let d = lm - ln;
                if d.norm() < 1e-8 * scale {
                    return Err(Error::Numerical("closed form needs distinct roots".into()));
                }
                den *= d;
            }
        }
        total += lm.powu((k + p - 1) as u32) / den;
    }
    Ok(total.re)
}

/// Eagerly built triangle of `ξ(t, s)` for `base <= s <= t <= horizon`.
#[derive(Debug, Clone)]
pub struct GreenTable {
    base: Time,
    horizon: Time,
    values: Vec<f64>,
}

impl GreenTable {
    pub fn build<P: CoefficientPath + ?Sized>(path: &P, base: Time, horizon: Time) -> Result<Self> {
        if horizon < base {
            return Err(Error::invalid("horizon precedes base"));
        }
        path.window().check_range(base + 1, horizon)?;
        let n = (horizon - base + 1) as usize;
        let p = path.ar_order();
        let mut values = vec![0.0; n * (n + 1) / 2];
        let idx = |ti: usize, si: usize| ti * (ti + 1) / 2 + si;
        for si in 0..n {
            values[idx(si, si)] = 1.0;
            for ti in si + 1..n {
                let t = base + ti as Time;
                let mut acc = 0.0;
                for m in 1..=p.min(ti - si) {
                    acc += path.phi(m, t) * values[idx(ti - m, si)];
                }
                values[idx(ti, si)] = acc;
            }
        }
        Ok(GreenTable { base, horizon, values })
    }

    pub fn base(&self) -> Time {
        self.base
    }

    pub fn horizon(&self) -> Time {
        self.horizon
    }

    /// `ξ(t, s)`, or `None` when `(t, s)` lies outside the table.
    pub fn get(&self, t: Time, s: Time) -> Option<f64> {
        if s < self.base || t > self.horizon {
            return None;
        }
        if t < s {
            return Some(0.0);
        }
        let ti = (t - self.base) as usize;
        let si = (s - self.base) as usize;
        Some(self.values[ti * (ti + 1) / 2 + si])
    }
}

pub mod oracle {
    //! Direct determinant of the banded lower Hessenberg matrix whose value is
    //! `ξ(t, s)`. Used to cross-check the recursions, never by them.

    use super::*;

    /// Largest order handled by cofactor expansion.
    pub const COFACTOR_CAP: usize = 10;
    /// Largest order handled at all.
    pub const ORACLE_CAP: usize = 14;

    /// The `k × k` matrix (`k = t - s`): `φ_1(s+1..t)` on the diagonal, `-1`
    /// on the superdiagonal and `φ_{1+r}` on the `r`-th subdiagonal.
    pub fn hessenberg_matrix<P: CoefficientPath + ?Sized>(path: &P, t: Time, s: Time) -> Vec<Vec<f64>> {
        let k = (t - s).max(0) as usize;
        let p = path.ar_order();
        let mut a = vec![vec![0.0; k]; k];
        for (i, row) in a.iter_mut().enumerate() {
            if i + 1 < k {
                row[i + 1] = -1.0;
            }
            for (j, cell) in row.iter_mut().enumerate().take(i + 1) {
                let lag = i - j + 1;
                if lag <= p {
                    *cell = path.phi(lag, s + 1 + i as Time);
                }
            }
        }
        a
    }

    /// Laplace expansion along the first remaining row, skipping zeros.
    pub fn cofactor_det(a: &[Vec<f64>]) -> f64 {
        fn rec(a: &[Vec<f64>], row: usize, cols: &mut Vec<usize>) -> f64 {
            if cols.is_empty() {
                return 1.0;
            }
            let mut total = 0.0;
            for pos in 0..cols.len() {
                let c = cols[pos];
                let v = a[row][c];
                if v == 0.0 {
                    continue;
                }
                let sign = if pos % 2 == 0 { 1.0 } else { -1.0 };
                cols.remove(pos);
                total += sign * v * rec(a, row + 1, cols);
                cols.insert(pos, c);
            }
            total
        }
        let mut cols: Vec<usize> = (0..a.len()).collect();
        rec(a, 0, &mut cols)
    }

    /// Fraction-free (Bareiss) elimination with row pivoting.
    pub fn bareiss_det(a: &[Vec<f64>]) -> f64 {
        let n = a.len();
        if n == 0 {
            return 1.0;
        }
        let mut m: Vec<Vec<f64>> = a.to_vec();
        let mut sign = 1.0;
        let mut prev = 1.0;
        for k in 0..n - 1 {
            if m[k][k] == 0.0 {
                match (k + 1..n).find(|&i| m[i][k] != 0.0) {
                    Some(i) => {
                        m.swap(i, k);
                        sign = -sign;
                    }
                    None => return 0.0,
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) / prev;
                }
            }
            prev = m[k][k];
        }
        sign * m[n - 1][n - 1]
    }

    /// `ξ(t, s)` by determinant: cofactor expansion up to order 10, fraction-
    /// free elimination up to 14, an error beyond.
    pub fn xi_det<P: CoefficientPath + ?Sized>(path: &P, t: Time, s: Time) -> Result<f64> {
        if t < s {
            return Ok(0.0);
        }
        let k = (t - s) as usize;
        if k > ORACLE_CAP {
            return Err(Error::OracleCapExceeded { order: k, cap: ORACLE_CAP });
        }
        path.window().check_range(s + 1, t)?;
        let a = hessenberg_matrix(path, t, s);
        Ok(if k <= COFACTOR_CAP { cofactor_det(&a) } else { bareiss_det(&a) })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::{ConstantPath, Regime};

    #[test]
    fn ar1_is_power() {
        let path = ConstantPath::ar(&[0.7]);
        for k in 0..10 {
            assert!((xi(&path, k, 0).unwrap() - 0.7f64.powi(k as i32)).abs() < 1e-15);
        }
    }

    #[test]
    fn fibonacci_from_unit_ar2() {
        let path = ConstantPath::ar(&[1.0, 1.0]);
        let fib = [1.0, 1.0, 2.0, 3.0, 5.0, 8.0, 13.0, 21.0];
        for (k, f) in fib.iter().enumerate() {
            assert_eq!(xi(&path, k as Time, 0).unwrap(), *f);
        }
    }

    #[test]
    fn bareiss_matches_cofactor() {
        let a = vec![vec![2.0, -1.0, 0.0], vec![0.5, 3.0, -1.0], vec![0.25, 0.1, 1.5]];
        assert!((oracle::bareiss_det(&a) - oracle::cofactor_det(&a)).abs() < 1e-13);
    }

    #[test]
    fn table_matches_recursion() {
        let path = ConstantPath::new(Regime::ar(0.0, &[0.4, -0.3, 0.2], 1.0)).unwrap();
        let table = GreenTable::build(&path, -3, 12).unwrap();
        for t in -3..=12 {
            for s in -3..=t {
                assert_eq!(table.get(t, s).unwrap(), xi(&path, t, s).unwrap());
            }
        }
        assert_eq!(table.get(13, 0), None);
    }

    #[test]
    fn row_walk_matches_forward() {
        let path = ConstantPath::ar(&[0.4, -0.3, 0.2]);
        for (r, v) in XiRow::new(&path, 5).take(12) {
            assert!((v - xi(&path, 5, r).unwrap()).abs() < 1e-15);
        }
    }
}
