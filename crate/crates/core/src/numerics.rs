//! Scalar backends, precision context, q-Pochhammer symbols and the
//! Askey-Wilson grid.
//!
//! Everything downstream is generic over [`Real`], so a verification can be
//! re-run in double-double arithmetic by switching the scalar type. The
//! runtime choice is made through [`PrecisionContext::backend`].

use std::fmt::{Debug, Display, LowerExp};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use serde::{Deserialize, Serialize};
use crate::dd::Dd;
use crate::error::{Error, Result};

/// Complex number over the working scalar.
pub type C<T> = Complex<T>;

/// Real scalar used for all arithmetic.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + LowerExp + Send + Sync + 'static
{
    /// Significant decimal digits carried by the type.
    const DIGITS: u32;

    /// Converts an `f64` literal. Exact for every backend in this crate.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("finite literal")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f64 {
    const DIGITS: u32 = 15;
}

impl Real for Dd {
    const DIGITS: u32 = 31;

    fn lit(v: f64) -> Self {
        Dd::new(v)
    }

    fn to_f64_lossy(self) -> f64 {
        f64::from(self)
    }
}

/// Complex literal.
pub fn cx<T: Real>(re: f64, im: f64) -> C<T> {
    Complex::new(T::lit(re), T::lit(im))
}

pub fn cr<T: Real>(re: f64) -> C<T> {
    Complex::new(T::lit(re), T::zero())
}

pub fn one<T: Real>() -> C<T> {
    Complex::new(T::one(), T::zero())
}

pub fn zero<T: Real>() -> C<T> {
    Complex::new(T::zero(), T::zero())
}

/// Lowers a complex value to binary64 for reporting.
pub fn to_c64<T: Real>(z: C<T>) -> Complex<f64> {
    Complex::new(z.re.to_f64_lossy(), z.im.to_f64_lossy())
}

/// Lifts a binary64 value into the working scalar.
pub fn from_c64<T: Real>(z: Complex<f64>) -> C<T> {
    cx(z.re, z.im)
}

pub fn abs<T: Real>(z: C<T>) -> f64 {
    z.norm().to_f64_lossy()
}

/// Integer power, negative exponents allowed.
pub fn cpow<T: Real>(z: C<T>, n: i64) -> C<T> {
    let mut base = if n < 0 { z.inv() } else { z };
    let mut e = n.unsigned_abs();
    let mut acc = one::<T>();
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base;
        }
        base = base * base;
        e >>= 1;
    }
    acc
}

/// Joukowski map `x(z) = z + 1/z`.
pub fn joukowski<T: Real>(z: C<T>) -> C<T> {
    z + z.inv()
}

/// Preimage of `x` under the Joukowski map with `|ζ| <= 1`.
pub fn joukowski_inverse<T: Real>(x: C<T>) -> C<T> {
    let disc = (x * x - cr::<T>(4.0)).sqrt();
    let two = cr::<T>(2.0);
    let a = (x - disc) / two;
    let b = (x + disc) / two;
    if a.norm() <= b.norm() {
        a
    } else {
        b
    }
}

pub fn product<T: Real>(it: impl IntoIterator<Item = C<T>>) -> C<T> {
    it.into_iter().fold(one(), |acc, v| acc * v)
}

/// Backend selected by a [`PrecisionContext`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Backend {
    Binary64,
    DoubleDouble,
}

/// Working precision and the tolerances every check is measured against.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrecisionContext {
    /// Significant decimal digits requested.
    pub working_precision: u32,
    /// Relative residual bound for partial-fraction fits.
    pub fit_tolerance: f64,
    /// Relative bound for identity checks.
    pub equality_tolerance: f64,
}

impl Default for PrecisionContext {
    fn default() -> Self {
        Self {
            working_precision: 15,
            fit_tolerance: 1e-9,
            equality_tolerance: 1e-8,
        }
    }
}

impl PrecisionContext {
    pub fn with_precision(digits: u32) -> Result<Self> {
        let ctx = Self {
            working_precision: digits,
            ..Self::default()
        };
        ctx.validate()?;
        Ok(ctx)
    }

    pub fn validate(&self) -> Result<()> {
        if self.working_precision < 15 {
            return Err(Error::InvalidParameter(format!(
                "working precision {} is below 15 digits",
                self.working_precision
            )));
        }
        if !(self.fit_tolerance > 0.0 && self.fit_tolerance < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "fit tolerance {} outside (0, 1)",
                self.fit_tolerance
            )));
        }
        if self.equality_tolerance < self.fit_tolerance {
            return Err(Error::InvalidParameter(
                "equality tolerance must not be tighter than the fit tolerance".into(),
            ));
        }
        self.backend().map(|_| ())
    }

    pub fn backend(&self) -> Result<Backend> {
        match self.working_precision {
            0..=16 => Ok(Backend::Binary64),
            17..=31 => Ok(Backend::DoubleDouble),
            d => Err(Error::UnsupportedPrecision(d)),
        }
    }
}

/// Scale `α`, base `q` and the fixed square root `p` of the pole grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridParams<T: Real> {
    pub alpha: C<T>,
    pub q: C<T>,
    pub p: C<T>,
}

impl<T: Real> GridParams<T> {
    /// Builds the grid from `α` and `p`; `q` is set to `p²`.
    pub fn new(alpha: C<T>, p: C<T>) -> Result<Self> {
        let q = p * p;
        if alpha.norm() == T::zero() {
            return Err(Error::InvalidParameter("grid scale alpha is zero".into()));
        }
        let qa = abs(q);
        if !(qa > 0.0 && qa < 1.0) {
            return Err(Error::InvalidParameter(format!("|q| = {qa} must lie in (0, 1)")));
        }
        Ok(Self { alpha, q, p })
    }

    /// Grid node in the z-plane, `α qⁿ`.
    pub fn node(&self, n: i64) -> C<T> {
        self.alpha * cpow(self.q, n)
    }

    pub fn x(&self, n: i64) -> C<T> {
        grid_x(self, n)
    }

    /// Fails if `α qⁿ` sits on `±1` for some `n` in `range`, which collapses
    /// `x(αqⁿ)` onto its mirror image.
    pub fn check_nondegenerate(&self, range: std::ops::RangeInclusive<i64>) -> Result<()> {
        for n in range {
            let w = self.node(n);
            if abs(w * w - one()) < 1e-10 {
                return Err(Error::DegenerateGrid { index: n });
            }
        }
        Ok(())
    }

    /// Smallest pairwise separation of `x_0..=x_n_max`.
    pub fn min_separation(&self, n_max: i64) -> f64 {
        let xs: Vec<_> = (0..=n_max).map(|n| self.x(n)).collect();
        let mut best = f64::INFINITY;
        for i in 0..xs.len() {
            for j in 0..i {
                best = best.min(abs(xs[i] - xs[j]));
            }
        }
        best
    }
}

/// `(a; q)_n = ∏_{k<n} (1 − a q^k)`.
pub fn qpochhammer<T: Real>(a: C<T>, q: C<T>, n: usize) -> C<T> {
    let mut acc = one::<T>();
    let mut term = a;
    for _ in 0..n {
        acc = acc * (one::<T>() - term);
        term = term * q;
    }
    acc
}

/// Truncated `(a; q)_∞` with the number of factors chosen so the neglected
/// tail is below `tail_target`. Returns the value and the factor count.
pub fn qpochhammer_inf<T: Real>(a: C<T>, q: C<T>, tail_target: f64) -> Result<(C<T>, usize)> {
    let k = infinite_product_terms(abs(a), abs(q), tail_target)?;
    Ok((qpochhammer(a, q, k), k))
}

/// Factor count `K` with `|a| |q|^K / (1 − |q|) <= tail_target`.
pub fn infinite_product_terms(a_abs: f64, q_abs: f64, tail_target: f64) -> Result<usize> {
    if q_abs.is_nan() || q_abs >= 1.0 {
        return Err(Error::InvalidParameter("infinite product needs |q| < 1".into()));
    }
    if a_abs == 0.0 {
        return Ok(0);
    }
    let need = (tail_target * (1.0 - q_abs) / a_abs).ln() / q_abs.ln();
    let k = need.ceil().max(1.0);
    if !k.is_finite() || k > 20_000.0 {
        return Err(Error::TailTooLarge { factors: k as usize });
    }
    Ok(k as usize)
}

/// Askey-Wilson grid point `x_n = α qⁿ + (α qⁿ)⁻¹`.
pub fn grid_x<T: Real>(grid: &GridParams<T>, n: i64) -> C<T> {
    joukowski(grid.node(n))
}

/// Second pole series `y_n = p^{2n+1} + p^{−2n−1}`.
pub fn grid_y<T: Real>(p: C<T>, n: i64) -> C<T> {
    joukowski(cpow(p, 2 * n + 1))
}

/// Elementary symmetric polynomial `σ_k(values)`.
pub fn elementary_symmetric<T: Real>(values: &[C<T>], k: usize) -> Result<C<T>> {
    if k > values.len() {
        return Err(Error::OutOfRange(format!(
            "sigma_{k} requested for {} values",
            values.len()
        )));
    }
    Ok(elementary_symmetric_all(values)[k])
}

/// All of `σ_0..=σ_len`, built by the usual triangle update
/// `σ_j ← σ_j + v σ_{j−1}`.
pub fn elementary_symmetric_all<T: Real>(values: &[C<T>]) -> Vec<C<T>> {
    let mut sigma = vec![zero::<T>(); values.len() + 1];
    sigma[0] = one();
    for (i, &v) in values.iter().enumerate() {
        for j in (1..=i + 1).rev() {
            sigma[j] = sigma[j] + v * sigma[j - 1];
        }
    }
    sigma
}

/// Coefficients `c_0..c_{nodes−1}` of a polynomial of degree `< nodes` from
/// its values on `nodes` equally spaced points of `|z| = radius`. The node
/// set is rotated until every node passes `admissible`.
pub fn circle_coefficients<T: Real>(
    f: impl Fn(C<T>) -> C<T>,
    nodes: usize,
    radius: f64,
    admissible: impl Fn(C<T>) -> bool,
) -> Result<Vec<C<T>>> {
    for attempt in 0..16 {
        let rot = T::lit(0.17 + 0.29 * attempt as f64);
        let step = T::TAU() / T::lit(nodes as f64);
        let zs: Vec<C<T>> = (0..nodes)
            .map(|k| C::from_polar(T::lit(radius), rot + step * T::lit(k as f64)))
            .collect();
        if !zs.iter().all(|&z| admissible(z)) {
            continue;
        }
        let vals: Vec<C<T>> = zs.iter().map(|&z| f(z)).collect();
        let n = cr::<T>(nodes as f64);
        return Ok((0..nodes)
            .map(|j| {
                zs.iter()
                    .zip(&vals)
                    .fold(zero::<T>(), |acc, (z, v)| acc + *v * cpow(*z, -(j as i64)))
                    / n
            })
            .collect());
    }
    Err(Error::Sampling(nodes))
}

/// Deterministic off-axis evaluation points in the annulus `0.45 < |z| < 0.95`,
/// spread by the golden angle.
pub fn probe_points<T: Real>(count: usize) -> Vec<C<T>> {
    (0..count)
        .map(|k| {
            let th = 0.37 + 2.399_963_229_728_653 * k as f64;
            let r = 0.47 + 0.46 * ((k as f64 * 0.618_033_988_749_895) % 1.0);
            C::new(T::lit(r * th.cos()), T::lit(r * th.sin()))
        })
        .collect()
}

/// The eight-parameter family `ε_1..ε_8` together with `η_0`, `η̃_0` and `p`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpsilonParams<T: Real> {
    pub eps: [C<T>; 8],
    pub eta0: C<T>,
    pub eta_tilde0: C<T>,
    pub p: C<T>,
}

impl<T: Real> EpsilonParams<T> {
    pub fn new(eps: [C<T>; 8], eta0: C<T>, eta_tilde0: C<T>, p: C<T>) -> Result<Self> {
        if let Some(j) = eps.iter().position(|e| e.norm() == T::zero()) {
            return Err(Error::InvalidParameter(format!("epsilon_{} is zero", j + 1)));
        }
        let out = Self {
            eps,
            eta0,
            eta_tilde0,
            p,
        };
        GridParams::new(out.alpha(), p)?;
        Ok(out)
    }

    pub fn q(&self) -> C<T> {
        self.p * self.p
    }

    pub fn eps_product(&self) -> C<T> {
        product(self.eps.iter().copied())
    }

    /// `α = p ε_1 ⋯ ε_8`.
    pub fn alpha(&self) -> C<T> {
        self.p * self.eps_product()
    }

    pub fn grid(&self) -> GridParams<T> {
        GridParams {
            alpha: self.alpha(),
            q: self.q(),
            p: self.p,
        }
    }

    pub fn eps_squared(&self) -> [C<T>; 8] {
        self.eps.map(|e| e * e)
    }

    /// `η_k = (−p)^k σ_k(ε_1², …, ε_8²) η_0` for `k = 0..=8`.
    pub fn eta(&self) -> [C<T>; 9] {
        let sigma = elementary_symmetric_all(&self.eps_squared());
        let mut out = [zero::<T>(); 9];
        let mut pk = one::<T>();
        for k in 0..9 {
            out[k] = pk * sigma[k] * self.eta0;
            pk = -pk * self.p;
        }
        out
    }
}

/// κ multiplying the closed form of `A_1` built from `α` and `q`.
pub fn kappa_operator<T: Real>(alpha: C<T>, q: C<T>) -> C<T> {
    let o = one::<T>();
    let a2 = alpha * alpha;
    let num = alpha * q * q * q;
    let den = (o - q) * (o - q) * (o - q * q) * (o - q * q) * (o - a2 * q) * (o - a2 * q * q) * (o - a2 * q * q * q);
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use crate::dd::Dd;

    #[test]
    fn double_double_literals_keep_fractions() {
        let v: C<Dd> = cx(0.7, -0.25);
        assert_eq!(v.re, Dd::new(0.7));
        assert_eq!(v.im, Dd::new(-0.25));
        assert_eq!(Dd::new(0.7).to_f64_lossy(), 0.7);
    }

    fn c(re: f64, im: f64) -> C<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn pochhammer_empty_and_vanishing() {
        let q = c(0.4, 0.2);
        assert_eq!(qpochhammer(c(3.0, 1.0), q, 0), c(1.0, 0.0));
        for n in 1..6 {
            assert_eq!(qpochhammer(c(1.0, 0.0), q, n), c(0.0, 0.0));
        }
    }

    #[test]
    fn pochhammer_against_double_double_product() {
        let got = qpochhammer(c(0.5, 0.0), c(0.25, 0.0), 3);
        let a = Dd::new(0.5);
        let q = Dd::new(0.25);
        let one = Dd::new(1.0);
        let oracle = (one - a) * (one - a * q) * (one - a * q * q);
        assert!((got.re - f64::from(oracle)).abs() < 1e-16);
        assert_eq!(got.im, 0.0);
    }

    #[test]
    fn grid_points() {
        let g = GridParams::new(c(1.0, 0.0), c(0.6, 0.0)).unwrap();
        assert_eq!(grid_x(&g, 0), c(2.0, 0.0));

        // α qⁿ = −1
        let g = GridParams::new(c(-1.0 / 0.36, 0.0), c(0.6, 0.0)).unwrap();
        assert!((grid_x(&g, 1) - c(-2.0, 0.0)).norm() < 1e-15);
        assert!(g.check_nondegenerate(0..=3).is_err());

        let g = GridParams::new(c(0.7, 0.0), c(0.6, 0.0)).unwrap();
        let node = Dd::new(0.7) * Dd::new(0.36) * Dd::new(0.36);
        let oracle = node + Dd::new(1.0) / node;
        assert!((grid_x(&g, 2).re - f64::from(oracle)).abs() < 1e-13 * f64::from(oracle));
    }

    #[test]
    fn grid_y_values() {
        assert_eq!(grid_y(c(1.0, 0.0), 4), c(2.0, 0.0));
        let p = c(0.6, 0.1);
        assert!((grid_y(p, 0) - (p + p.inv())).norm() < 1e-15);
        let p = Dd::new(0.6);
        let p7 = p.powi(7);
        let oracle = p7 + Dd::new(1.0) / p7;
        let got = grid_y(c(0.6, 0.0), 3);
        assert!((got.re - f64::from(oracle)).abs() < 1e-14 * got.re);
    }

    #[test]
    fn symmetric_polynomials() {
        let v = [c(0.3, 0.2), c(-1.1, 0.5), c(0.9, -0.4)];
        assert_eq!(elementary_symmetric(&v, 0).unwrap(), c(1.0, 0.0));
        assert!(elementary_symmetric(&v, 4).is_err());

        let same = [c(0.7, 0.3); 5];
        let s5 = elementary_symmetric(&same, 5).unwrap();
        assert!((s5 - cpow(c(0.7, 0.3), 5)).norm() < 1e-15);
    }

    #[test]
    fn sigma4_of_eight_matches_explicit_sum() {
        let v: Vec<C<f64>> = (0..8)
            .map(|k| c((k as f64 * 0.37).sin() + 0.2, (k as f64 * 1.3).cos()))
            .collect();
        let mut oracle = c(0.0, 0.0);
        let mut terms = 0;
        for a in 0..8 {
            for b in a + 1..8 {
                for d in b + 1..8 {
                    for e in d + 1..8 {
                        oracle += v[a] * v[b] * v[d] * v[e];
                        terms += 1;
                    }
                }
            }
        }
        assert_eq!(terms, 70);
        let got = elementary_symmetric(&v, 4).unwrap();
        assert!((got - oracle).norm() < 1e-13 * (1.0 + oracle.norm()));
    }

    #[test]
    fn eta8_constraint_holds_identically() {
        let eps = [
            c(0.8, 0.1),
            c(1.2, -0.3),
            c(0.6, 0.5),
            c(-0.9, 0.2),
            c(1.1, 0.0),
            c(0.7, -0.6),
            c(1.3, 0.4),
            c(-0.5, -0.7),
        ];
        let e = EpsilonParams::new(eps, c(0.9, 0.2), c(0.1, 0.0), c(0.7, 0.2)).unwrap();
        let eta = e.eta();
        let a = e.alpha();
        let q = e.q();
        let rhs = a * a * q * q * q * eta[0];
        assert!((eta[8] - rhs).norm() < 1e-12 * rhs.norm());
    }

    #[test]
    fn precision_backend_selection() {
        assert_eq!(PrecisionContext::default().backend().unwrap(), Backend::Binary64);
        assert_eq!(
            PrecisionContext::with_precision(30).unwrap().backend().unwrap(),
            Backend::DoubleDouble
        );
        assert!(PrecisionContext::with_precision(40).is_err());
        assert!(PrecisionContext::with_precision(10).is_err());
        let bad = PrecisionContext {
            equality_tolerance: 1e-12,
            ..PrecisionContext::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn tail_terms_cover_target() {
        let k = infinite_product_terms(1.0, 0.64, 1e-20).unwrap();
        assert!(0.64f64.powi(k as i32) / 0.36 <= 1e-20);
        let (v, _) = qpochhammer_inf(c(0.5, 0.0), c(0.5, 0.0), 1e-20).unwrap();
        // (1/2; 1/2)_∞ = 0.288788095086602421...
        assert!((v.re - 0.288_788_095_086_602_4).abs() < 1e-15);
    }

    #[test]
    fn circle_interpolation_recovers_polynomial() {
        let coeffs = [c(1.0, 0.5), c(-2.0, 0.0), c(0.0, 0.3), c(0.7, -0.7)];
        let f = |z: C<f64>| coeffs.iter().rev().fold(c(0.0, 0.0), |acc, a| acc * z + a);
        let got = circle_coefficients(f, 6, 0.9, |z| (z - c(0.9, 0.0)).norm() > 0.05).unwrap();
        for (k, v) in got.iter().enumerate() {
            let want = coeffs.get(k).copied().unwrap_or_default();
            assert!((v - want).norm() < 1e-13);
        }
        assert!(circle_coefficients(f, 6, 0.9, |_| false).is_err());
    }

    proptest! {
        #[test]
        fn pochhammer_splits(
            ar in -1.5f64..1.5, ai in -1.5f64..1.5,
            qm in 0.3f64..0.8, qa in 0.0f64..std::f64::consts::TAU,
            m in 0usize..=10, n in 0usize..=10,
        ) {
            let a = c(ar, ai);
            let q = Complex::from_polar(qm, qa);
            let lhs = qpochhammer(a, q, m + n);
            let rhs = qpochhammer(a, q, m) * qpochhammer(a * cpow(q, m as i64), q, n);
            let scale = 1.0 + lhs.norm().max(rhs.norm());
            prop_assert!((lhs - rhs).norm() <= 1e-8 * scale);
        }

        #[test]
        fn grid_x_mirror_invariant(
            am in 0.5f64..1.5, aa in 0.0f64..std::f64::consts::TAU,
            qm in 0.3f64..0.8, qa in 0.0f64..std::f64::consts::TAU, n in -4i64..12,
        ) {
            let p = Complex::from_polar(qm.sqrt(), qa / 2.0);
            let g = GridParams::new(Complex::from_polar(am, aa), p).unwrap();
            let w = g.node(n);
            let x1 = grid_x(&g, n);
            let x2 = joukowski(w.inv());
            prop_assert!((x1 - x2).norm() <= 1e-12 * (1.0 + x1.norm()));
        }
    }
}
