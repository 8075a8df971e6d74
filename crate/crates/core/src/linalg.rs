//! Small dense complex linear algebra: LU with partial pivoting and a
//! shifted-QR eigensolver. Sizes here never exceed a few dozen, so the
//! matrix is a flat row-major `Vec`.

use std::ops::{Index, IndexMut};

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::numerics::{abs, cr, one, zero, Real, C};

#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix<T: Real> {
    n_rows: usize,
    n_cols: usize,
    data: Vec<C<T>>,
}

impl<T: Real> CMatrix<T> {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            data: vec![zero(); n_rows * n_cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = one();
        }
        m
    }

    pub fn from_rows(rows: &[Vec<C<T>>]) -> Self {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for r in rows {
            assert_eq!(r.len(), n_cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Self { n_rows, n_cols, data }
    }

    pub fn rows(&self) -> usize {
        self.n_rows
    }

    pub fn cols(&self) -> usize {
        self.n_cols
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.n_cols, self.n_rows);
        for i in 0..self.n_rows {
            for j in 0..self.n_cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn mul_vec(&self, v: &[C<T>]) -> Vec<C<T>> {
        assert_eq!(v.len(), self.n_cols);
        (0..self.n_rows)
            .map(|i| (0..self.n_cols).fold(zero(), |acc, j| acc + self[(i, j)] * v[j]))
            .collect()
    }

    /// Induced 1-norm (max column sum).
    pub fn norm1(&self) -> f64 {
        (0..self.n_cols)
            .map(|j| (0..self.n_rows).map(|i| abs(self[(i, j)])).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| abs(*z)).fold(0.0, f64::max)
    }
}

impl<T: Real> Index<(usize, usize)> for CMatrix<T> {
    type Output = C<T>;
    fn index(&self, (i, j): (usize, usize)) -> &C<T> {
        &self.data[i * self.n_cols + j]
    }
}

impl<T: Real> IndexMut<(usize, usize)> for CMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C<T> {
        &mut self.data[i * self.n_cols + j]
    }
}

/// LU factorization `P A = L U` of a square matrix.
#[derive(Clone, Debug)]
pub struct Lu<T: Real> {
    lu: CMatrix<T>,
    perm: Vec<usize>,
    norm1: f64,
}

impl<T: Real> Lu<T> {
    pub fn factor(a: &CMatrix<T>) -> Result<Self> {
        assert_eq!(a.rows(), a.cols(), "LU needs a square matrix");
        let n = a.rows();
        let norm1 = a.norm1();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let tiny = T::epsilon().to_f64_lossy() * norm1 * 1e-3;
        for k in 0..n {
            let (piv, piv_abs) = (k..n)
                .map(|i| (i, abs(lu[(i, k)])))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if piv_abs <= tiny || piv_abs == 0.0 {
                return Err(Error::SingularSystem {
                    condition: f64::INFINITY,
                });
            }
            if piv != k {
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(piv, j)];
                    lu[(piv, j)] = tmp;
                }
                perm.swap(k, piv);
            }
            let inv = lu[(k, k)].inv();
            for i in k + 1..n {
                let f = lu[(i, k)] * inv;
                lu[(i, k)] = f;
                if f.is_zero() {
                    continue;
                }
                for j in k + 1..n {
                    let u = lu[(k, j)];
                    lu[(i, j)] = lu[(i, j)] - f * u;
                }
            }
        }
        Ok(Self { lu, perm, norm1 })
    }

    pub fn solve(&self, b: &[C<T>]) -> Vec<C<T>> {
        let n = self.lu.rows();
        let mut x: Vec<C<T>> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                x[i] = x[i] - self.lu[(i, j)] * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                x[i] = x[i] - self.lu[(i, j)] * x[j];
            }
            x[i] = x[i] / self.lu[(i, i)];
        }
        x
    }

    pub fn inverse(&self) -> CMatrix<T> {
        let n = self.lu.rows();
        let mut inv = CMatrix::zeros(n, n);
        let mut e = vec![zero::<T>(); n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = zero());
            e[j] = one();
            let col = self.solve(&e);
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        inv
    }

    /// `‖A‖₁ ‖A⁻¹‖₁`, computed exactly (the matrices are tiny).
    pub fn condition(&self) -> f64 {
        self.norm1 * self.inverse().norm1()
    }
}

pub fn solve<T: Real>(a: &CMatrix<T>, b: &[C<T>]) -> Result<Vec<C<T>>> {
    Ok(Lu::factor(a)?.solve(b))
}

/// Eigenvalues of a general complex matrix by Householder reduction to
/// Hessenberg form followed by Wilkinson-shifted QR sweeps.
pub fn eigenvalues<T: Real>(a: &CMatrix<T>) -> Result<Vec<C<T>>> {
    assert_eq!(a.rows(), a.cols());
    let n = a.rows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut h = hessenberg(a);
    let eps = T::epsilon();
    let mut out = vec![zero::<T>(); n];
    let mut hi = n - 1;
    let mut iter = 0usize;
    let max_iter = 60 * n;
    let mut total = 0usize;
    loop {
        if hi == 0 {
            out[0] = h[(0, 0)];
            break;
        }
        let mut l = hi;
        while l > 0 {
            let s = h[(l - 1, l - 1)].norm() + h[(l, l)].norm();
            if h[(l, l - 1)].norm() <= eps * s || h[(l, l - 1)].norm() == T::zero() {
                h[(l, l - 1)] = zero();
                break;
            }
            l -= 1;
        }
        if l == hi {
            out[hi] = h[(hi, hi)];
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        total += 1;
        if total > max_iter {
            return Err(Error::EigenFailure(total));
        }
        let mu = if iter % 11 == 10 {
            // exceptional shift
            h[(hi, hi)] + cr::<T>(0.75) * h[(hi, hi - 1)].norm()
        } else {
            wilkinson_shift(
                h[(hi - 1, hi - 1)],
                h[(hi - 1, hi)],
                h[(hi, hi - 1)],
                h[(hi, hi)],
            )
        };
        qr_sweep(&mut h, l, hi, mu);
    }
    Ok(out)
}

fn wilkinson_shift<T: Real>(a: C<T>, b: C<T>, c: C<T>, d: C<T>) -> C<T> {
    let half = cr::<T>(0.5);
    let m = (a - d) * half;
    let disc = (m * m + b * c).sqrt();
    let mid = (a + d) * half;
    let s1 = mid + disc;
    let s2 = mid - disc;
    if (s1 - d).norm() <= (s2 - d).norm() {
        s1
    } else {
        s2
    }
}

fn givens<T: Real>(a: C<T>, b: C<T>) -> (C<T>, C<T>) {
    let r = (a.norm_sqr() + b.norm_sqr()).sqrt();
    if r == T::zero() {
        return (one(), zero());
    }
    let rr = C::new(r, T::zero());
    (a / rr, b / rr)
}

fn qr_sweep<T: Real>(h: &mut CMatrix<T>, lo: usize, hi: usize, mu: C<T>) {
    for k in lo..=hi {
        h[(k, k)] = h[(k, k)] - mu;
    }
    let mut rots = Vec::with_capacity(hi - lo);
    for k in lo..hi {
        let (c, s) = givens(h[(k, k)], h[(k + 1, k)]);
        for j in k..=hi {
            let x = h[(k, j)];
            let y = h[(k + 1, j)];
            h[(k, j)] = c.conj() * x + s.conj() * y;
            h[(k + 1, j)] = -s * x + c * y;
        }
        rots.push((c, s));
    }
    for (idx, k) in (lo..hi).enumerate() {
        let (c, s) = rots[idx];
        for i in lo..=(k + 1).min(hi) {
            let u = h[(i, k)];
            let v = h[(i, k + 1)];
            h[(i, k)] = u * c + v * s;
            h[(i, k + 1)] = -u * s.conj() + v * c.conj();
        }
    }
    for k in lo..=hi {
        h[(k, k)] = h[(k, k)] + mu;
    }
}

fn hessenberg<T: Real>(a: &CMatrix<T>) -> CMatrix<T> {
    let n = a.rows();
    let mut h = a.clone();
    for k in 0..n.saturating_sub(2) {
        let norm: T = (k + 1..n)
            .map(|i| h[(i, k)].norm_sqr())
            .fold(T::zero(), |acc, v| acc + v)
            .sqrt();
        if norm == T::zero() {
            continue;
        }
        let x0 = h[(k + 1, k)];
        let phase = if x0.norm() == T::zero() {
            one()
        } else {
            x0 / C::new(x0.norm(), T::zero())
        };
        let alpha = -phase * C::new(norm, T::zero());
        let mut v: Vec<C<T>> = (k + 1..n).map(|i| h[(i, k)]).collect();
        v[0] = v[0] - alpha;
        let vn: T = v.iter().map(|z| z.norm_sqr()).fold(T::zero(), |a, b| a + b).sqrt();
        if vn == T::zero() {
            continue;
        }
        let vn = C::new(vn, T::zero());
        v.iter_mut().for_each(|z| *z = *z / vn);
        let two = cr::<T>(2.0);
        // H ← (I − 2vvᴴ) H
        for j in 0..n {
            let dot = (0..v.len()).fold(zero::<T>(), |acc, i| acc + v[i].conj() * h[(k + 1 + i, j)]);
            for i in 0..v.len() {
                h[(k + 1 + i, j)] = h[(k + 1 + i, j)] - two * v[i] * dot;
            }
        }
        // H ← H (I − 2vvᴴ)
        for i in 0..n {
            let dot = (0..v.len()).fold(zero::<T>(), |acc, j| acc + h[(i, k + 1 + j)] * v[j]);
            for j in 0..v.len() {
                h[(i, k + 1 + j)] = h[(i, k + 1 + j)] - two * dot * v[j].conj();
            }
        }
        for i in k + 2..n {
            h[(i, k)] = zero();
        }
    }
    h
}

/// Eigenvector for a computed eigenvalue by inverse iteration, normalized to
/// unit 2-norm.
pub fn eigenvector<T: Real>(a: &CMatrix<T>, lambda: C<T>) -> Result<Vec<C<T>>> {
    let n = a.rows();
    let scale = a.max_abs().max(1.0);
    let eps = T::epsilon().to_f64_lossy();
    let mut shift = lambda + cr::<T>(eps.sqrt() * 1e-3 * scale);
    let mut shifted = a.clone();
    for i in 0..n {
        shifted[(i, i)] = shifted[(i, i)] - shift;
    }
    let lu = match Lu::factor(&shifted) {
        Ok(lu) => lu,
        Err(_) => {
            shift = lambda + cr::<T>(eps.sqrt() * 1e-1 * scale);
            let mut s2 = a.clone();
            for i in 0..n {
                s2[(i, i)] = s2[(i, i)] - shift;
            }
            Lu::factor(&s2)?
        }
    };
    let mut v: Vec<C<T>> = (0..n)
        .map(|i| C::new(T::one(), T::lit(0.1 * (i as f64 + 1.0).sin())))
        .collect();
    for _ in 0..4 {
        v = lu.solve(&v);
        let norm: T = v.iter().map(|z| z.norm_sqr()).fold(T::zero(), |a, b| a + b).sqrt();
        if !norm.is_finite() || norm == T::zero() {
            return Err(Error::EigenFailure(0));
        }
        let norm = C::new(norm, T::zero());
        v.iter_mut().for_each(|z| *z = *z / norm);
    }
    Ok(v)
}
