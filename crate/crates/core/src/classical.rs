//! Classical operators: raising operators whose action never produces the
//! pole at `x1`. Built from the six-parameter `ε` instance, in both the
//! skip-pole form `𝓦` and the gauge-transformed difference form `Ŵ`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::heunop::{Coef, QDiffOperator, DEGENERACY_FLOOR};
use crate::numerics::{
    abs, circle_coefficients, cr, joukowski, kappa_operator, one, product, zero, GridParams,
    PrecisionContext, Real, C,
};
use crate::ratfun::{chi_value, fit_partial_fractions, PoleSet};

/// `ε1..ε6` and `p`; the grid scale is `α = ε1⋯ε6`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassicalParams<T: Real> {
    pub eps: [C<T>; 6],
    pub p: C<T>,
}

impl<T: Real> ClassicalParams<T> {
    pub fn new(eps: [C<T>; 6], p: C<T>) -> Result<Self> {
        if let Some(j) = eps.iter().position(|e| e.norm() == T::zero()) {
            return Err(Error::InvalidParameter(format!("epsilon_{} is zero", j + 1)));
        }
        let out = Self { eps, p };
        out.grid()?.check_nondegenerate(0..=12)?;
        Ok(out)
    }

    pub fn alpha(&self) -> C<T> {
        product(self.eps.iter().copied())
    }

    pub fn q(&self) -> C<T> {
        self.p * self.p
    }

    pub fn grid(&self) -> Result<GridParams<T>> {
        GridParams::new(self.alpha(), self.p)
    }

    /// `(z − α)(z − αq) ∏(1 − ε_j² p z) / (z² (1 − z²)(1 − q z²))`.
    pub fn b1(&self) -> Coef<T> {
        let (alpha, p, q) = (self.alpha(), self.p, self.q());
        let e = self.eps;
        let o = one::<T>();
        Arc::new(move |z: C<T>| {
            (z - alpha) * (z - alpha * q) * product(e.iter().map(|ej| o - *ej * *ej * p * z))
                / (z * z * (o - z * z) * (o - q * z * z))
        })
    }

    /// `∏(1 − α p / ε_j²)`.
    pub fn gamma_hat00(&self) -> C<T> {
        let (alpha, p) = (self.alpha(), self.p);
        product(self.eps.iter().map(|e| one::<T>() - alpha * p / (*e * *e)))
    }
}

/// Which of the two equivalent forms to act with.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Form {
    /// `𝓦`, acting on `[n/(n+1)]` functions with poles `x0, x1..x_n`.
    SkipPole,
    /// `Ŵ = B1(z)(T⁺ − 1) + B1(1/z)(T⁻ − 1) + γ̂00`, acting on `[n/n]`.
    Hatted,
}

#[derive(Clone)]
pub struct ClassicalOperator<T: Real> {
    pub grid: GridParams<T>,
    pub b1: Coef<T>,
    pub gamma_hat00: C<T>,
    pub hatted: QDiffOperator<T>,
    pub skip_pole: QDiffOperator<T>,
    /// Constant of the skip-pole form (`𝓦 χ0 = γ00 χ0`).
    pub gamma00: C<T>,
    pub params: Option<ClassicalParams<T>>,
    /// Residual of `Ŵ = −α/(κη0) (x − x0) 𝓦 (x − x0)⁻¹` at the check points.
    pub gauge_residual: f64,
}

impl<T: Real> std::fmt::Debug for ClassicalOperator<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ClassicalOperator")
            .field("grid", &self.grid)
            .field("gamma_hat00", &self.gamma_hat00)
            .field("gamma00", &self.gamma00)
            .field("params", &self.params)
            .finish_non_exhaustive()
    }
}

impl<T: Real> ClassicalOperator<T> {
    pub fn form(&self, form: Form) -> &QDiffOperator<T> {
        match form {
            Form::SkipPole => &self.skip_pole,
            Form::Hatted => &self.hatted,
        }
    }

    /// `τ1 self + τ2 other` (difference forms combined, skip-pole form
    /// rebuilt by the inverse gauge with unit scale).
    pub fn combine(&self, tau1: C<T>, other: &Self, tau2: C<T>) -> Self {
        let (b, c) = (self.b1.clone(), other.b1.clone());
        let b1: Coef<T> = Arc::new(move |z| tau1 * b(z) + tau2 * c(z));
        let gh = tau1 * self.gamma_hat00 + tau2 * other.gamma_hat00;
        from_hatted(self.grid, b1, gh, one())
    }
}

/// Skip-pole form obtained from `Ŵ` by `𝓦 = s (x − x0)⁻¹ Ŵ (x − x0)`.
pub fn from_hatted<T: Real>(grid: GridParams<T>, b1: Coef<T>, gamma_hat00: C<T>, s: C<T>) -> ClassicalOperator<T> {
    let q = grid.q;
    let x0 = grid.x(0);
    let hatted = QDiffOperator::difference_form(b1.clone(), gamma_hat00, q, "classical hatted");
    let (b, bm, b0) = (b1.clone(), b1.clone(), b1.clone());
    let skip_pole = QDiffOperator::new(
        Arc::new(move |z| s * b(z) * (joukowski(q * z) - x0) / (joukowski(z) - x0)),
        Arc::new(move |z| s * bm(z.inv()) * (joukowski(z / q) - x0) / (joukowski(z) - x0)),
        Arc::new(move |z| s * (gamma_hat00 - b0(z) - b0(z.inv()))),
        q,
        "classical skip-pole",
    );
    ClassicalOperator {
        grid,
        b1,
        gamma_hat00,
        hatted,
        skip_pole,
        gamma00: s * gamma_hat00,
        params: None,
        gauge_residual: 0.0,
    }
}

fn check_points<T: Real>() -> Vec<C<T>> {
    (0..8)
        .map(|k| {
            let th = 0.37 + 0.81 * k as f64;
            let r = 0.5 + 0.06 * k as f64;
            C::new(T::lit(r * th.cos()), T::lit(r * th.sin()))
        })
        .collect()
}

/// The explicit classical instance: skip-pole coefficient
/// `−κη0 (α − qz)(αq − z)(1 − αqz) ∏(1 − ε_j² p z) / (α q z² (1 − αz)(1 − z²)(1 − qz²))`,
/// `γ00 = −κη0 α⁻³ ∏(αp − ε_j²)`, and its hatted form.
pub fn make_classical<T: Real>(params: &ClassicalParams<T>, eta0: C<T>, ctx: &PrecisionContext) -> Result<ClassicalOperator<T>> {
    ctx.validate()?;
    let grid = params.grid()?;
    grid.check_nondegenerate(0..=12)?;
    let (alpha, p, q) = (params.alpha(), params.p, params.q());
    let o = one::<T>();
    for (name, d) in [
        ("1 - alpha^2 q", o - alpha * alpha * q),
        ("1 - alpha^2 q^2", o - alpha * alpha * q * q),
        ("1 - alpha^2 q^3", o - alpha * alpha * q * q * q),
        ("1 - q", o - q),
    ] {
        if abs(d) < DEGENERACY_FLOOR {
            return Err(Error::DegenerateParameter(format!("{name} vanishes")));
        }
    }
    if abs(eta0) == 0.0 {
        return Err(Error::InvalidParameter("eta0 is zero".into()));
    }
    let k = kappa_operator(alpha, q) * eta0;
    let e = params.eps;
    let a1: Coef<T> = Arc::new(move |z: C<T>| {
        -k * (alpha - q * z) * (alpha * q - z) * (o - alpha * q * z) * product(e.iter().map(|ej| o - *ej * *ej * p * z))
            / (alpha * q * z * z * (o - alpha * z) * (o - z * z) * (o - q * z * z))
    });
    let gamma00 = -k / (alpha * alpha * alpha) * product(e.iter().map(|ej| alpha * p - *ej * *ej));
    let x0 = grid.x(0);
    let (um, u0) = (a1.clone(), a1.clone());
    let skip_pole = QDiffOperator::new(
        a1,
        Arc::new(move |z| um(z.inv())),
        Arc::new(move |z: C<T>| {
            let x = joukowski(z);
            gamma00
                - u0(z) * (x - x0) / (joukowski(q * z) - x0)
                - u0(z.inv()) * (x - x0) / (joukowski(z / q) - x0)
        }),
        q,
        "classical skip-pole",
    );
    let b1 = params.b1();
    let gamma_hat00 = params.gamma_hat00();
    let hatted = QDiffOperator::difference_form(b1.clone(), gamma_hat00, q, "classical hatted");

    let s = -alpha / k;
    let test = |w: C<T>| (joukowski(w) / cr::<T>(4.0)).exp();
    let mut gauge_residual: f64 = 0.0;
    for z in check_points::<T>() {
        let x = joukowski(z);
        let lhs = s * (x - x0) * skip_pole.apply(|w| test(w) / (joukowski(w) - x0), z)?;
        let rhs = hatted.apply(test, z)?;
        gauge_residual = gauge_residual.max(abs(lhs - rhs) / abs(rhs).max(f64::MIN_POSITIVE));
    }
    if gauge_residual > ctx.equality_tolerance {
        return Err(Error::ConstraintViolation(format!(
            "gauge relation between the two classical forms fails ({gauge_residual:.2e})"
        )));
    }
    Ok(ClassicalOperator {
        grid,
        b1,
        gamma_hat00,
        hatted,
        skip_pole,
        gamma00,
        params: Some(*params),
        gauge_residual,
    })
}

/// Per-`n` outcome of [`check_classical`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassicalRow {
    pub n: usize,
    pub residual: f64,
    /// `|coefficient at x1|` relative to the largest fitted coefficient.
    pub x1_leakage: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalCheck {
    pub rows: Vec<ClassicalRow>,
    pub pass: bool,
}

/// Fits `W χ_n` (skip-pole form) or `Ŵ χ_n` (hatted form, with `χ_0 := 1`)
/// for `n = 0..=n_max` and reads the coefficient at `x1`.
pub fn check_classical<T: Real>(
    w: &QDiffOperator<T>,
    grid: &GridParams<T>,
    n_max: usize,
    form: Form,
    ctx: &PrecisionContext,
) -> Result<ClassicalCheck> {
    let mut rows = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let hi = n as i64 + 1;
        let (cand, constant) = match form {
            Form::SkipPole => (PoleSet::range(*grid, 0, hi.max(1))?, false),
            Form::Hatted => (PoleSet::range(*grid, 1, hi.max(1))?, true),
        };
        let xn = grid.x(n as i64);
        let g = |z: C<T>| {
            if form == Form::Hatted && n == 0 {
                w.apply(|_| one(), z)
            } else {
                w.apply_chi(xn, z)
            }
        };
        let rep = fit_partial_fractions(&g, &cand, constant, ctx)?;
        let pos = cand.position_of(1).expect("x1 in candidate");
        rows.push(ClassicalRow {
            n,
            residual: rep.residual,
            x1_leakage: rep.leakage([pos]),
        });
    }
    let pass = rows
        .iter()
        .all(|r| r.residual <= ctx.fit_tolerance && r.x1_leakage <= ctx.fit_tolerance);
    Ok(ClassicalCheck { rows, pass })
}

/// Coefficients `c0..c8` of `B1(z) z² (1 − z²)(1 − q z²) / ((z − α)(z − αq))`,
/// interpolated on nine points of `|z| = 0.9`.
pub fn numerator_coefficients<T: Real>(b1: &Coef<T>, grid: &GridParams<T>) -> Result<Vec<C<T>>> {
    let (alpha, q) = (grid.alpha, grid.q);
    let o = one::<T>();
    let f = |z: C<T>| b1(z) * z * z * (o - z * z) * (o - q * z * z) / ((z - alpha) * (z - alpha * q));
    let clear = |z: C<T>| abs(z - alpha) > 1e-2 && abs(z - alpha * q) > 1e-2 && abs(z * z - o) > 1e-2;
    circle_coefficients(f, 9, 0.9, clear)
}

/// Largest of `|c0|, |c6|, |c7|, |c8|` relative to `max|c_k|`: zero exactly
/// when the numerator has the degree-4 minimal shape `z Q4(z)`.
pub fn minimal_leakage<T: Real>(coeffs: &[C<T>]) -> f64 {
    let scale = coeffs.iter().map(|c| abs(*c)).fold(0.0, f64::max);
    if scale == 0.0 {
        return 0.0;
    }
    [0usize, 6, 7, 8]
        .iter()
        .filter_map(|&k| coeffs.get(k))
        .map(|c| abs(*c))
        .fold(0.0, f64::max)
        / scale
}

#[derive(Clone, Debug)]
pub struct MinimalOperator<T: Real> {
    pub base: ClassicalOperator<T>,
    pub tau: (C<T>, C<T>),
    /// Numerator coefficients `c0..c8` of the combination.
    pub q_coeffs: Vec<C<T>>,
    pub leakage: f64,
}

/// Chooses `(τ1, τ2)` so that `τ1 Ŵ1 + τ2 Ŵ2` has no constant (and hence
/// no leading) numerator coefficient.
pub fn minimal_combination<T: Real>(
    w1: &ClassicalOperator<T>,
    w2: &ClassicalOperator<T>,
    ctx: &PrecisionContext,
) -> Result<MinimalOperator<T>> {
    ctx.validate()?;
    let (g1, g2) = (w1.grid, w2.grid);
    if abs(g1.alpha - g2.alpha) > ctx.equality_tolerance * abs(g1.alpha)
        || abs(g1.q - g2.q) > ctx.equality_tolerance * abs(g1.q)
    {
        return Err(Error::InvalidParameter("operators live on different grids".into()));
    }
    let c1 = numerator_coefficients(&w1.b1, &g1)?;
    let c2 = numerator_coefficients(&w2.b1, &g1)?;
    let s1 = c1.iter().map(|c| abs(*c)).fold(0.0, f64::max);
    let s2 = c2.iter().map(|c| abs(*c)).fold(0.0, f64::max);
    let (tau1, tau2) = if abs(c1[0]) <= ctx.fit_tolerance * s1 {
        (one::<T>(), zero::<T>())
    } else if abs(c2[0]) <= ctx.fit_tolerance * s2 {
        (zero::<T>(), one::<T>())
    } else {
        let m = abs(c1[0]).max(abs(c2[0]));
        (c2[0] / cr::<T>(m), -c1[0] / cr::<T>(m))
    };
    let combined: Vec<C<T>> = c1.iter().zip(&c2).map(|(a, b)| tau1 * *a + tau2 * *b).collect();
    let norm = combined.iter().map(|c| abs(*c)).fold(0.0, f64::max);
    let inputs = (abs(tau1) * s1).max(abs(tau2) * s2);
    if norm <= ctx.equality_tolerance * inputs {
        return Err(Error::DegenerateParameter(
            "proportional operators: the minimal combination vanishes".into(),
        ));
    }
    let base = w1.combine(tau1, w2, tau2);
    let q_coeffs = numerator_coefficients(&base.b1, &base.grid)?;
    let leakage = minimal_leakage(&q_coeffs);
    Ok(MinimalOperator {
        base,
        tau: (tau1, tau2),
        q_coeffs,
        leakage,
    })
}

/// `Ŵ` applied to a `[n/n]` function with poles `x1..x_n` and the fit of
/// the result over `{x2..x_{n+1}}` plus a constant; returns the residual.
pub fn pole_shift_residual<T: Real>(
    w: &ClassicalOperator<T>,
    coeffs: &[C<T>],
    constant: C<T>,
    ctx: &PrecisionContext,
) -> Result<f64> {
    let n = coeffs.len() as i64;
    let g = w.grid;
    let xs: Vec<C<T>> = (1..=n).map(|k| g.x(k)).collect();
    let f = |v: C<T>| {
        xs.iter()
            .zip(coeffs)
            .fold(constant, |acc, (xk, c)| acc + *c * chi_value(*xk, v))
    };
    let h = |z: C<T>| w.hatted.apply(f, z);
    let cand = PoleSet::range(g, 2, n + 1)?;
    Ok(fit_partial_fractions(&h, &cand, true, ctx)?.residual)
}
