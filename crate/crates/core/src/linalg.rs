//! Small dense linear algebra: the matrices here are at most a few dozen
//! rows (companion matrices, Kronecker squares, OLS normal equations).

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Matrix { rows: r, cols: c, data }
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows);
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len());
        (0..self.rows)
            .map(|i| self.data[i * self.cols..(i + 1) * self.cols].iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn kron(&self, other: &Matrix) -> Matrix {
        let (r, c) = (self.rows * other.rows, self.cols * other.cols);
        let mut out = Matrix::zeros(r, c);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self[(i, j)];
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        out[(i * other.rows + k, j * other.cols + l)] = a * other[(k, l)];
                    }
                }
            }
        }
        out
    }

    pub fn scale(&self, a: f64) -> Matrix {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| x * a).collect() }
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        self.add(&other.scale(-1.0))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |a, &b| a.max(b.abs()))
    }

    /// LU factorisation with partial pivoting.
    pub fn lu(&self) -> Result<Lu> {
        assert_eq!(self.rows, self.cols, "LU needs a square matrix");
        let n = self.rows;
        let mut a = self.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        for k in 0..n {
            let piv = (k..n).max_by(|&i, &j| a[i * n + k].abs().total_cmp(&a[j * n + k].abs())).unwrap_or(k);
            if a[piv * n + k].abs() <= 1e-14 * scale {
                return Err(Error::Singular);
            }
            if piv != k {
                for j in 0..n {
                    a.swap(k * n + j, piv * n + j);
                }
                perm.swap(k, piv);
                sign = -sign;
            }
            for i in k + 1..n {
                let f = a[i * n + k] / a[k * n + k];
                a[i * n + k] = f;
                for j in k + 1..n {
                    a[i * n + j] -= f * a[k * n + j];
                }
            }
        }
        Ok(Lu { n, a, perm, sign })
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        Ok(self.lu()?.solve(b))
    }

    pub fn inverse(&self) -> Result<Matrix> {
        let lu = self.lu()?;
        let n = self.rows;
        let mut inv = Matrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|x| *x = 0.0);
            e[j] = 1.0;
            let col = lu.solve(&e);
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        Ok(inv)
    }

    pub fn det(&self) -> f64 {
        match self.lu() {
            Ok(lu) => lu.det(),
            Err(_) => 0.0,
        }
    }

    /// Cholesky factor `L` with `A = L Lᵀ` for a symmetric positive-definite
    /// matrix; positive semi-definite inputs get zero columns where the pivot
    /// vanishes.
    pub fn cholesky(&self) -> Result<Matrix> {
        let n = self.rows;
        let mut l = Matrix::zeros(n, n);
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        for j in 0..n {
            let mut d = self[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if d < -1e-12 * scale {
                return Err(Error::Singular);
            }
            let d = d.max(0.0).sqrt();
            l[(j, j)] = d;
            for i in j + 1..n {
                let mut s = self[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = if d > 0.0 { s / d } else { 0.0 };
            }
        }
        Ok(l)
    }

    /// Spectral radius by power iteration (relative change below `tol`,
    /// at most `max_iter` steps). When the dominant eigenvalues form a complex
    /// pair the iteration does not settle; the radius is then taken from the
    /// growth rate of repeated squares, `‖A^(2^k)‖^(2^-k)`.
    pub fn spectral_radius(&self, tol: f64, max_iter: usize) -> SpectralRadius {
        let n = self.rows;
        let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * i as f64).collect();
        let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
        let nx = norm(&x);
        x.iter_mut().for_each(|a| *a /= nx);
        let mut prev = f64::NAN;
        for iter in 1..=max_iter {
            // Two steps per iteration so that a dominant ±λ pair still settles.
            let y = self.mul_vec(&self.mul_vec(&x));
            let ny = norm(&y);
            if ny == 0.0 {
                return SpectralRadius { value: 0.0, iterations: iter, converged: true };
            }
            let est = ny.sqrt();
            x = y.into_iter().map(|a| a / ny).collect();
            if (est - prev).abs() <= tol * est.max(1e-300) {
                return SpectralRadius { value: est, iterations: iter, converged: true };
            }
            prev = est;
        }
        SpectralRadius { value: self.gelfand_radius(), iterations: max_iter, converged: false }
    }

    fn gelfand_radius(&self) -> f64 {
        let mut m = self.clone();
        let mut log_scale = 0.0;
        let mut power = 1.0;
        let mut est = f64::NAN;
        for _ in 0..60 {
            let s = m.max_abs();
            if s == 0.0 {
                return 0.0;
            }
            m = m.scale(1.0 / s);
            log_scale += s.ln();
            // ‖A^power‖ ≈ exp(log_scale) · ‖m‖
            est = ((log_scale + m.max_abs().ln()) / power).exp();
            m = m.mul(&m);
            log_scale *= 2.0;
            power *= 2.0;
        }
        est
    }
}

impl core::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl core::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SpectralRadius {
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub struct Lu {
    n: usize,
    a: Vec<f64>,
    perm: Vec<usize>,
    sign: f64,
}

impl Lu {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&i| b[i]).collect();
        for i in 0..n {
            for j in 0..i {
                x[i] -= self.a[i * n + j] * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                x[i] -= self.a[i * n + j] * x[j];
            }
            x[i] /= self.a[i * n + i];
        }
        x
    }

    pub fn det(&self) -> f64 {
        (0..self.n).map(|i| self.a[i * self.n + i]).product::<f64>() * self.sign
    }
}

/// Roots of the monic polynomial `z^n + c[0] z^(n-1) + ... + c[n-1]`
/// (Aberth–Ehrlich iteration).
pub fn monic_roots(c: &[f64]) -> Result<Vec<Complex64>> {
    let n = c.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let eval = |z: Complex64| {
        let mut p = Complex64::new(1.0, 0.0);
        let mut dp = Complex64::new(0.0, 0.0);
        for &a in c {
            dp = dp * z + p;
            p = p * z + a;
        }
        (p, dp)
    };
    let radius = 1.0 + c.iter().fold(0.0_f64, |a, &b| a.max(b.abs()));
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| Complex64::from_polar(radius * 0.5, 0.4 + core::f64::consts::TAU * k as f64 / n as f64))
        .collect();
    for _ in 0..500 {
        let mut moved = 0.0_f64;
        for i in 0..n {
            let (p, dp) = eval(z[i]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let mut s = Complex64::new(0.0, 0.0);
            for j in 0..n {
                if j != i {
                    s += Complex64::new(1.0, 0.0) / (z[i] - z[j]);
                }
            }
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * s);
            z[i] -= step;
            moved = moved.max(step.norm() / z[i].norm().max(1.0));
        }
        if moved < 1e-15 {
            return Ok(z);
        }
    }
    if z.iter().all(|r| r.re.is_finite() && r.im.is_finite()) {
        Ok(z)
    } else {
        Err(Error::Numerical("root iteration diverged".into()))
    }
}

/// Inverse roots `λ` of `1 - φ1 B - ... - φp B^p = Π (1 - λ B)`.
pub fn ar_inverse_roots(phi: &[f64]) -> Result<Vec<Complex64>> {
    let c: Vec<f64> = phi.iter().map(|v| -v).collect();
    monic_roots(&c)
}

/// Largest absolute inverse root (1 for a unit root, < 1 when stationary).
pub fn largest_ar_root(phi: &[f64]) -> Result<f64> {
    Ok(ar_inverse_roots(phi)?.iter().fold(0.0, |a, r| a.max(r.norm())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_and_inverse() {
        let a = Matrix::from_rows(&[&[4.0, 1.0, 0.0], &[1.0, 3.0, 1.0], &[0.0, 1.0, 2.0]]);
        let x = a.solve(&[1.0, 2.0, 3.0]).unwrap();
        let b = a.mul_vec(&x);
        for (u, v) in b.iter().zip([1.0, 2.0, 3.0]) {
            assert!((u - v).abs() < 1e-14);
        }
        let prod = a.mul(&a.inverse().unwrap());
        assert!(prod.sub(&Matrix::identity(3)).max_abs() < 1e-14);
        assert!((a.det() - 18.0).abs() < 1e-12);
    }

    #[test]
    fn spectral_radius_real_and_complex() {
        let a = Matrix::from_rows(&[&[0.5, 0.2], &[1.0, 0.0]]);
        let r = a.spectral_radius(1e-12, 10_000);
        let exact = (0.5 + (0.25f64 + 0.8).sqrt()) / 2.0;
        assert!(r.converged && (r.value - exact).abs() < 1e-10);
        // rotation by 60 degrees scaled by 0.9
        let (c, s) = (0.9 * 0.5, 0.9 * 3f64.sqrt() / 2.0);
        let rot = Matrix::from_rows(&[&[c, -s], &[s, c]]);
        let r = rot.spectral_radius(1e-12, 10_000);
        assert!((r.value - 0.9).abs() < 1e-9, "{r:?}");
    }

    #[test]
    fn roots_of_ar2() {
        let roots = ar_inverse_roots(&[0.5, 0.24]).unwrap();
        let mut re: Vec<f64> = roots.iter().map(|z| z.re).collect();
        re.sort_by(f64::total_cmp);
        assert!((re[0] + 0.3).abs() < 1e-13 && (re[1] - 0.8).abs() < 1e-13);
        assert!((largest_ar_root(&[0.247, -0.314]).unwrap() - 0.314f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn cholesky_reconstructs() {
        let a = Matrix::from_rows(&[&[2.0, 0.5, 0.1], &[0.5, 1.0, 0.2], &[0.1, 0.2, 0.5]]);
        let l = a.cholesky().unwrap();
        let mut lt = Matrix::zeros(3, 3);
        for i in 0..3 {
            for j in 0..3 {
                lt[(i, j)] = l[(j, i)];
            }
        }
        assert!(l.mul(&lt).sub(&a).max_abs() < 1e-14);
    }
}
