//! Generalized eigenvalue problems `Ŵ1 ψ = λ Ŵ2 ψ` for pairs of classical
//! operators: the splitting of `Ŵ`, the two-diagonal `ω` bases, the
//! recurrence solution, the generic pair, and the finite-dimensional
//! reduction of the eight-parameter operator.

use std::sync::Arc;

use crate::classical::{from_hatted, minimal_leakage, numerator_coefficients, ClassicalOperator, ClassicalParams};
use crate::error::{Error, Result};
use crate::heunop::{from_epsilon, gamma_closed, Coef, QDiffOperator, DEGENERACY_FLOOR};
use crate::linalg::{eigenvalues, eigenvector, solve, CMatrix};
use crate::numerics::{abs, cpow, joukowski, one, product, zero, EpsilonParams, PrecisionContext, Real, C};
use crate::ratfun::chi_value;

/// Factors closer to zero than this are treated as poles of `ω̆_n`.
const POLE_GUARD: f64 = 1e-10;

fn degenerate(what: &str, v: f64) -> Result<()> {
    if v < DEGENERACY_FLOOR {
        Err(Error::DegenerateParameter(format!("{what} vanishes ({v:.2e})")))
    } else {
        Ok(())
    }
}

/// `ω̆_n(z; a, b) = (az; p²)_n (a/z; p²)_n / ((bz; p²)_n (b/z; p²)_n)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OmegaBasisSpec<T: Real> {
    pub a: C<T>,
    pub b: C<T>,
    pub p: C<T>,
}

impl<T: Real> OmegaBasisSpec<T> {
    pub fn new(a: C<T>, b: C<T>, p: C<T>) -> Result<Self> {
        if abs(b) == 0.0 {
            return Err(Error::InvalidParameter("omega basis: b is zero".into()));
        }
        Ok(Self { a, b, p })
    }

    /// Basis with `a = ε1² p`, `b = α p²` for the classical parameters.
    pub fn classical(params: &ClassicalParams<T>) -> Result<Self> {
        let p = params.p;
        Self::new(params.eps[0] * params.eps[0] * p, params.alpha() * p * p, p)
    }

    /// The same basis with `b → b p²`.
    pub fn shifted(&self) -> Self {
        Self {
            b: self.b * self.p * self.p,
            ..*self
        }
    }

    /// `ω̆_0..=ω̆_n` at `z`.
    pub fn eval_all(&self, n: usize, z: C<T>) -> Result<Vec<C<T>>> {
        let q = self.p * self.p;
        let o = one::<T>();
        let zi = z.inv();
        let mut out = Vec::with_capacity(n + 1);
        let mut acc = o;
        let mut qk = o;
        out.push(acc);
        for k in 0..n {
            let d1 = o - self.b * qk * z;
            let d2 = o - self.b * qk * zi;
            let d = abs(d1).min(abs(d2));
            if d < POLE_GUARD {
                return Err(Error::PoleProximity {
                    pole: format!("b q^{k}"),
                    distance: d,
                });
            }
            acc = acc * (o - self.a * qk * z) * (o - self.a * qk * zi) / (d1 * d2);
            out.push(acc);
            qk = qk * q;
        }
        Ok(out)
    }

    pub fn eval(&self, n: usize, z: C<T>) -> Result<C<T>> {
        Ok(self.eval_all(n, z)?[n])
    }
}

pub fn omega<T: Real>(n: usize, z: C<T>, spec: &OmegaBasisSpec<T>) -> Result<C<T>> {
    spec.eval(n, z)
}

/// `Ŵ1`, `Ŵ2` with `Ŵ1 − λ Ŵ2 = Ŵ`, `λ = ε5/ε6 + ε6/ε5`.
#[derive(Clone, Debug)]
pub struct SplitPair<T: Real> {
    pub w1: ClassicalOperator<T>,
    pub w2: ClassicalOperator<T>,
    pub lambda: C<T>,
    pub params: ClassicalParams<T>,
}

/// `B̂ = p ε5 ε6 (z − α)(z − α p²) ∏_{j≤4}(1 − ε_j² p z) / (z (1 − z²)(1 − p² z²))`
/// and `c2 = ε1234 p ∏_{j≤4}(1 − α p / ε_j²)`.
fn split_parts<T: Real>(params: &ClassicalParams<T>) -> (Coef<T>, C<T>, C<T>, C<T>) {
    let (p, alpha, e) = (params.p, params.alpha(), params.eps);
    let q = p * p;
    let o = one::<T>();
    let e56 = e[4] * e[5];
    let e1234 = e[0] * e[1] * e[2] * e[3];
    let bhat: Coef<T> = Arc::new(move |z: C<T>| {
        p * e56 * (z - alpha) * (z - alpha * q) * product(e[..4].iter().map(|ej| o - *ej * *ej * p * z))
            / (z * (o - z * z) * (o - q * z * z))
    });
    let c2 = e1234 * p * product(e[..4].iter().map(|ej| o - alpha * p / (*ej * *ej)));
    (bhat, c2, e56, e1234)
}

pub fn split_operators<T: Real>(params: &ClassicalParams<T>, ctx: &PrecisionContext) -> Result<SplitPair<T>> {
    ctx.validate()?;
    let grid = params.grid()?;
    let p = params.p;
    let (e5, e6) = (params.eps[4], params.eps[5]);
    let (bhat, c2, e56, e1234) = split_parts(params);
    degenerate("epsilon_5 epsilon_6 p", abs(e56 * p))?;
    let b = bhat.clone();
    let b1: Coef<T> = Arc::new(move |z| joukowski(e56 * p * z) * b(z));
    let mut w1 = from_hatted(grid, b1, joukowski(e1234 * p) * c2, one());
    let mut w2 = from_hatted(grid, bhat, c2, one());
    w1.params = Some(*params);
    w2.params = Some(*params);
    Ok(SplitPair {
        w1,
        w2,
        lambda: e5 / e6 + e6 / e5,
        params: *params,
    })
}

/// Outcome of the consistency checks on a [`SplitPair`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitCheck {
    /// `(Ŵ1 − λŴ2 − Ŵ) f` relative to the term scale, worst over the probes.
    pub split_residual: f64,
    /// Change of `Ŵ1, Ŵ2` coefficients under `ε5 → cε5, ε6 → ε6/c`.
    pub independence: f64,
    /// Degree-4 leakage of the `Ŵ2` numerator.
    pub w2_leakage: f64,
}

impl SplitCheck {
    pub fn worst(&self) -> f64 {
        self.split_residual.max(self.independence).max(self.w2_leakage)
    }
}

pub fn check_split<T: Real>(pair: &SplitPair<T>, zs: &[C<T>], ctx: &PrecisionContext) -> Result<SplitCheck> {
    let params = pair.params;
    let q = params.q();
    let w = QDiffOperator::difference_form(params.b1(), params.gamma_hat00(), q, "classical hatted");
    let split = pair.w1.hatted.combine(one(), &pair.w2.hatted, -pair.lambda);
    let xt = C::new(T::lit(3.1), T::lit(0.7));
    let f = |v: C<T>| chi_value(xt, v);
    let mut split_residual: f64 = 0.0;
    for &z in zs {
        let (a, sa) = split.apply_scaled(f, z)?;
        let (b, sb) = w.apply_scaled(f, z)?;
        split_residual = split_residual.max(abs(a - b) / sa.max(sb));
    }

    let c = C::new(T::lit(1.3), T::lit(-0.4));
    let mut eps = params.eps;
    eps[4] = eps[4] * c;
    eps[5] = eps[5] / c;
    let moved = split_operators(&ClassicalParams::new(eps, params.p)?, ctx)?;
    let mut independence: f64 = 0.0;
    for (a, b) in [(&pair.w1, &moved.w1), (&pair.w2, &moved.w2)] {
        independence = independence.max(abs(a.gamma_hat00 - b.gamma_hat00) / abs(a.gamma_hat00).max(1e-300));
        for &z in zs {
            let (u, v) = ((a.b1)(z), (b.b1)(z));
            independence = independence.max(abs(u - v) / abs(u).max(1e-300));
        }
    }

    let coeffs = numerator_coefficients(&pair.w2.b1, &pair.w2.grid)?;
    Ok(SplitCheck {
        split_residual,
        independence,
        w2_leakage: minimal_leakage(&coeffs),
    })
}

/// `μ1,n, ν1,n, μ2,n, ν2,n` of `Ŵi ω_n = μi,n ω⁺_n + νi,n ω⁺_{n−1}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoDiagCoeffs<T: Real> {
    pub mu1: C<T>,
    pub nu1: C<T>,
    pub mu2: C<T>,
    pub nu2: C<T>,
}

pub fn two_diag_coeffs<T: Real>(n: usize, params: &ClassicalParams<T>) -> Result<TwoDiagCoeffs<T>> {
    let (p, alpha, e) = (params.p, params.alpha(), params.eps);
    let o = one::<T>();
    let n = n as i64;
    let pw = |k: i64| cpow(p, k);
    let e1s = e[0] * e[0];
    let e1234 = e[0] * e[1] * e[2] * e[3];
    let e56 = e[4] * e[5];
    let den = e1s * alpha * pw(4 * n + 1) - o;
    degenerate("epsilon_1^2 alpha p^(4n+1) - 1", abs(den))?;
    let mu2 = p * (e1s * alpha * pw(2 * n + 1) - o) * (alpha * p - e1s)
        * product(e[1..4].iter().map(|ej| alpha * pw(2 * n + 1) - *ej * *ej))
        / (e1234 * den);
    let nu2 = (o - pw(2 * n)) * (alpha * p - e1s) * e56
        * product(e[1..4].iter().map(|ej| e1s * *ej * *ej * pw(2 * n) - o))
        / den;
    Ok(TwoDiagCoeffs {
        mu1: joukowski(e1234 * pw(2 * n + 1)) * mu2,
        nu1: joukowski(e1s * e56 * pw(2 * n)) * nu2,
        mu2,
        nu2,
    })
}

/// Coefficients `μn, νn` of a single classical `Ŵ` in the same bases:
/// `μn = μ1,n − λ μ2,n`, `νn = ν1,n − λ ν2,n` written in product form.
pub fn generic_coeffs<T: Real>(n: usize, params: &ClassicalParams<T>) -> Result<(C<T>, C<T>)> {
    let t = two_diag_coeffs(n, params)?;
    let (p, alpha, e) = (params.p, params.alpha(), params.eps);
    let o = one::<T>();
    let n = n as i64;
    let pw = |k: i64| cpow(p, k);
    let e1s = e[0] * e[0];
    let e1234 = e[0] * e[1] * e[2] * e[3];
    let (e5, e6) = (e[4], e[5]);
    let mu = (e1234 * e6 * pw(2 * n + 1) - e5) * (e1234 * e5 * pw(2 * n + 1) - e6) / (alpha * pw(2 * n + 1)) * t.mu2;
    let nu = (e1s * e5 * e5 * pw(2 * n) - o) * (e1s * e6 * e6 * pw(2 * n) - o) / (e1s * e5 * e6 * pw(2 * n)) * t.nu2;
    Ok((mu, nu))
}

/// Solves `Σ A_s (μW_s − λ μY_s) ω⁺_s + A_s (νW_s − λ νY_s) ω⁺_{s−1} = 0`
/// with `A_0 = 1` and `λ = μW_n / μY_n`.
pub fn recurrence<T: Real>(
    mu_w: &[C<T>],
    nu_w: &[C<T>],
    mu_y: &[C<T>],
    nu_y: &[C<T>],
) -> Result<(C<T>, Vec<C<T>>)> {
    let n = mu_w.len() - 1;
    degenerate("mu_n of the second operator", abs(mu_y[n]))?;
    let lambda = mu_w[n] / mu_y[n];
    let mut a = vec![one::<T>()];
    for s in 0..n {
        let den = nu_w[s + 1] - lambda * nu_y[s + 1];
        let scale = abs(nu_w[s + 1]) + abs(lambda) * abs(nu_y[s + 1]);
        if scale == 0.0 || abs(den) <= 1e-12 * scale {
            return Err(Error::Resonance { s });
        }
        let next = a[s] * (lambda * mu_y[s] - mu_w[s]) / den;
        a.push(next);
    }
    Ok((lambda, a))
}

/// `R_n = Σ A_{n,s} ω_s` together with the coefficient tables it was built
/// from.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoDiagExpansion<T: Real> {
    pub n: usize,
    pub mu1: Vec<C<T>>,
    pub nu1: Vec<C<T>>,
    pub mu2: Vec<C<T>>,
    pub nu2: Vec<C<T>>,
    pub lambda: C<T>,
    pub a: Vec<C<T>>,
    pub basis: OmegaBasisSpec<T>,
}

impl<T: Real> TwoDiagExpansion<T> {
    pub fn eval(&self, z: C<T>) -> Result<C<T>> {
        let w = self.basis.eval_all(self.n, z)?;
        Ok(w.iter().zip(&self.a).fold(zero(), |acc, (w, a)| acc + *w * *a))
    }

    /// `A_{s+1}(ν1,s+1 − λν2,s+1) − A_s(λμ2,s − μ1,s)`, worst relative.
    pub fn recurrence_defect(&self) -> f64 {
        let l = self.lambda;
        (0..self.n)
            .map(|s| {
                let lhs = self.a[s + 1] * (self.nu1[s + 1] - l * self.nu2[s + 1]);
                let rhs = self.a[s] * (l * self.mu2[s] - self.mu1[s]);
                abs(lhs - rhs) / abs(lhs).max(abs(rhs)).max(1e-300)
            })
            .fold(0.0, f64::max)
    }
}

pub fn solve_recurrence<T: Real>(n: usize, params: &ClassicalParams<T>, ctx: &PrecisionContext) -> Result<TwoDiagExpansion<T>> {
    ctx.validate()?;
    let coeffs = (0..=n).map(|s| two_diag_coeffs(s, params)).collect::<Result<Vec<_>>>()?;
    let mu1: Vec<_> = coeffs.iter().map(|c| c.mu1).collect();
    let nu1: Vec<_> = coeffs.iter().map(|c| c.nu1).collect();
    let mu2: Vec<_> = coeffs.iter().map(|c| c.mu2).collect();
    let nu2: Vec<_> = coeffs.iter().map(|c| c.nu2).collect();
    let (lambda, a) = recurrence(&mu1, &nu1, &mu2, &nu2)?;
    Ok(TwoDiagExpansion {
        n,
        mu1,
        nu1,
        mu2,
        nu2,
        lambda,
        a,
        basis: OmegaBasisSpec::classical(params)?,
    })
}

/// Wraps a fallible function for use inside operator application; a pole
/// hit shows up as NaN and is turned back into an error by [`finite_or`].
fn lift<T: Real, F: Fn(C<T>) -> Result<C<T>>>(f: F) -> impl Fn(C<T>) -> C<T> {
    move |z| f(z).unwrap_or_else(|_| C::new(T::nan(), T::nan()))
}

fn finite_or<T: Real>(v: C<T>, z: C<T>) -> Result<C<T>> {
    if v.re.is_finite() && v.im.is_finite() {
        Ok(v)
    } else {
        Err(Error::PoleProximity {
            pole: format!("near z = {:.4e}", abs(z)),
            distance: 0.0,
        })
    }
}

/// `max_z |W1 f − λ W2 f| / (scale(W1 f) + |λ| scale(W2 f))`.
pub fn gevp_residual<T: Real, F: Fn(C<T>) -> Result<C<T>>>(
    w1: &QDiffOperator<T>,
    w2: &QDiffOperator<T>,
    lambda: C<T>,
    f: F,
    zs: &[C<T>],
) -> Result<f64> {
    let g = lift(f);
    let mut worst: f64 = 0.0;
    for &z in zs {
        let (a, sa) = w1.apply_scaled(&g, z)?;
        let (b, sb) = w2.apply_scaled(&g, z)?;
        let r = finite_or(a - lambda * b, z)?;
        worst = worst.max(abs(r) / (sa + abs(lambda) * sb).max(1e-300));
    }
    Ok(worst)
}

/// Residual of the transformed problem `(τ1W1 + τ2W2) f = λ̃ (ρ1W1 + ρ2W2) f`
/// with `λ̃ = (τ1λ + τ2)/(ρ1λ + ρ2)`.
pub fn mobius_residual<T: Real, F: Fn(C<T>) -> Result<C<T>>>(
    w1: &QDiffOperator<T>,
    w2: &QDiffOperator<T>,
    lambda: C<T>,
    tau: (C<T>, C<T>),
    rho: (C<T>, C<T>),
    f: F,
    zs: &[C<T>],
) -> Result<f64> {
    let det = tau.0 * rho.1 - tau.1 * rho.0;
    let scale = (abs(tau.0) + abs(tau.1)) * (abs(rho.0) + abs(rho.1));
    if abs(det) <= 1e-12 * scale {
        return Err(Error::DegenerateParameter("Mobius map is singular".into()));
    }
    let den = rho.0 * lambda + rho.1;
    degenerate("rho1 lambda + rho2", abs(den) / (abs(rho.0) * abs(lambda) + abs(rho.1)))?;
    let lt = (tau.0 * lambda + tau.1) / den;
    let v1 = w1.combine(tau.0, w2, tau.1);
    let v2 = w1.combine(rho.0, w2, rho.1);
    gevp_residual(&v1, &v2, lt, f, zs)
}

/// `(μ, ν)` of `W ω_n = μ ω⁺_n + ν ω⁺_{n−1}` solved from the first two
/// points, residual measured on the rest.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoDiagFit<T: Real> {
    pub mu: C<T>,
    pub nu: C<T>,
    pub residual: f64,
}

pub fn fit_two_diag<T: Real>(
    w: &QDiffOperator<T>,
    n: usize,
    basis: &OmegaBasisSpec<T>,
    zs: &[C<T>],
) -> Result<TwoDiagFit<T>> {
    if zs.len() < 3 {
        return Err(Error::Sampling(zs.len()));
    }
    let shifted = basis.shifted();
    let f = lift(|z| basis.eval(n, z));
    #[allow(clippy::type_complexity)]
    let rows = |z: C<T>| -> Result<(C<T>, f64, C<T>, C<T>)> {
        let (g, s) = w.apply_scaled(&f, z)?;
        let g = finite_or(g, z)?;
        let om = shifted.eval_all(n, z)?;
        let prev = if n == 0 { zero() } else { om[n - 1] };
        Ok((g, s, om[n], prev))
    };
    let (mu, nu) = if n == 0 {
        let (g, _, o0, _) = rows(zs[0])?;
        (g / o0, zero())
    } else {
        let (g0, _, a0, b0) = rows(zs[0])?;
        let (g1, _, a1, b1) = rows(zs[1])?;
        let m = CMatrix::from_rows(&[vec![a0, b0], vec![a1, b1]]);
        let x = solve(&m, &[g0, g1])?;
        (x[0], x[1])
    };
    let mut residual: f64 = 0.0;
    for &z in &zs[2..] {
        let (g, s, a, b) = rows(z)?;
        residual = residual.max(abs(g - mu * a - nu * b) / s.max(1e-300));
    }
    Ok(TwoDiagFit { mu, nu, residual })
}

/// Per-`n` results for a generic pair `Ŵ(ε)`, `Ŷ(δ)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GenericRow<T: Real> {
    pub n: usize,
    pub mu_w: C<T>,
    pub nu_w: C<T>,
    pub mu_y: C<T>,
    pub nu_y: C<T>,
    /// Worst deviation of the fitted two-diagonal action from the closed form,
    /// both operators, relative to the term scale.
    pub two_diag: f64,
    pub lambda: C<T>,
    pub gevp_residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GenericPairReport<T: Real> {
    pub rows: Vec<GenericRow<T>>,
}

impl<T: Real> GenericPairReport<T> {
    pub fn worst(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.two_diag.max(r.gevp_residual))
            .fold(0.0, f64::max)
    }
}

/// Hatted classical operator of a parameter set.
pub fn hatted_operator<T: Real>(params: &ClassicalParams<T>) -> QDiffOperator<T> {
    QDiffOperator::difference_form(params.b1(), params.gamma_hat00(), params.q(), "classical hatted")
}

pub fn generic_pair<T: Real>(
    eps_w: &ClassicalParams<T>,
    eps_y: &ClassicalParams<T>,
    n_max: usize,
    zs: &[C<T>],
    ctx: &PrecisionContext,
) -> Result<GenericPairReport<T>> {
    ctx.validate()?;
    let tol = ctx.equality_tolerance;
    let (e, d) = (eps_w.eps, eps_y.eps);
    if abs(e[0] - d[0]) > tol * abs(e[0]) {
        return Err(Error::ConstraintViolation("delta_1 must equal epsilon_1".into()));
    }
    let pe = product(e[1..].iter().copied());
    let pd = product(d[1..].iter().copied());
    if abs(pe - pd) > tol * abs(pe) {
        return Err(Error::ConstraintViolation(
            "delta_2..delta_6 product must equal epsilon_2..epsilon_6 product".into(),
        ));
    }
    if abs(eps_w.p - eps_y.p) > tol * abs(eps_w.p) {
        return Err(Error::ConstraintViolation("operators use different p".into()));
    }
    let (w, y) = (hatted_operator(eps_w), hatted_operator(eps_y));
    let basis = OmegaBasisSpec::classical(eps_w)?;
    let mut cw = Vec::new();
    let mut cy = Vec::new();
    let mut rows = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        cw.push(generic_coeffs(n, eps_w)?);
        cy.push(generic_coeffs(n, eps_y)?);
        let (mu_w, nu_w) = cw[n];
        let (mu_y, nu_y) = cy[n];
        let mut two_diag: f64 = 0.0;
        for (op, mu, nu) in [(&w, mu_w, nu_w), (&y, mu_y, nu_y)] {
            let fit = fit_two_diag(op, n, &basis, zs)?;
            let sc = abs(mu).max(abs(nu));
            two_diag = two_diag
                .max(fit.residual)
                .max(abs(fit.mu - mu) / sc)
                .max(abs(fit.nu - nu) / sc);
        }
        let split = |v: &[(C<T>, C<T>)], k: usize| -> Vec<C<T>> {
            v.iter().map(|c| if k == 0 { c.0 } else { c.1 }).collect()
        };
        let (lambda, a) = recurrence(&split(&cw, 0), &split(&cw, 1), &split(&cy, 0), &split(&cy, 1))?;
        let r = |z: C<T>| -> Result<C<T>> {
            let om = basis.eval_all(n, z)?;
            Ok(om.iter().zip(&a).fold(zero(), |acc, (o, c)| acc + *o * *c))
        };
        let gevp = gevp_residual(&w, &y, lambda, r, zs)?;
        rows.push(GenericRow {
            n,
            mu_w,
            nu_w,
            mu_y,
            nu_y,
            two_diag,
            lambda,
            gevp_residual: gevp,
        });
    }
    Ok(GenericPairReport { rows })
}

/// Completes free `ε2..ε7` to an eight-parameter set satisfying
/// `ε1² = α p^{2N+1}` at the prescribed `α`:
/// `ε8 = (α / (p^{2N+3} R²))^{1/2}`, `ε1 = p^{2N+2} R ε8`, `R = ε2⋯ε7`.
pub fn complete_truncated<T: Real>(
    big_n: usize,
    alpha: C<T>,
    free: [C<T>; 6],
    eta0: C<T>,
    eta_tilde0: C<T>,
    p: C<T>,
) -> Result<EpsilonParams<T>> {
    let n = big_n as i64;
    let r = product(free.iter().copied());
    degenerate("epsilon_2..epsilon_7 product", abs(r))?;
    let e8 = (alpha / (cpow(p, 2 * n + 3) * r * r)).sqrt();
    let e1 = cpow(p, 2 * n + 2) * r * e8;
    let mut eps = [one::<T>(); 8];
    eps[0] = e1;
    eps[1..7].copy_from_slice(&free);
    eps[7] = e8;
    EpsilonParams::new(eps, eta0, eta_tilde0, p)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EigenPair<T: Real> {
    pub lambda: C<T>,
    pub v: Vec<C<T>>,
    /// `max_z |Wψ − λψ| / max_z |ψ|` over the probe points.
    pub residual: f64,
}

#[derive(Clone, Debug)]
pub struct FiniteDimProblem<T: Real> {
    pub n: usize,
    pub eps: EpsilonParams<T>,
    pub m: CMatrix<T>,
    pub eigenpairs: Vec<EigenPair<T>>,
    /// Some eigenvector has a component below `1e-10 ‖v‖`.
    pub small_components: bool,
    /// `|γ̃_{N,3}|` relative to the largest coefficient of row `N`.
    pub truncation: f64,
}

impl<T: Real> FiniteDimProblem<T> {
    pub fn worst_residual(&self) -> f64 {
        self.eigenpairs.iter().map(|e| e.residual).fold(0.0, f64::max)
    }
}

/// Row `i` of `M` holds `W χ_i` in the basis `χ_0..χ_N`.
pub fn finite_dim_matrix<T: Real>(big_n: usize, eps: &EpsilonParams<T>) -> Result<CMatrix<T>> {
    let mut m = CMatrix::zeros(big_n + 1, big_n + 1);
    for i in 0..=big_n {
        let g = gamma_closed(i, eps)?;
        m[(i, 0)] = m[(i, 0)] + g[0];
        if i >= 1 {
            m[(i, i - 1)] = m[(i, i - 1)] + g[1];
        }
        m[(i, i)] = m[(i, i)] + g[2];
        if i < big_n {
            m[(i, i + 1)] = m[(i, i + 1)] + g[3];
        }
    }
    Ok(m)
}

pub fn finite_dim<T: Real>(
    big_n: usize,
    eps: &EpsilonParams<T>,
    zs: &[C<T>],
    ctx: &PrecisionContext,
) -> Result<FiniteDimProblem<T>> {
    ctx.validate()?;
    if big_n > 12 {
        return Err(Error::OutOfRange(format!("N = {big_n} exceeds 12")));
    }
    let grid = eps.grid();
    grid.check_nondegenerate(0..=big_n as i64 + 1)?;
    let last = gamma_closed(big_n, eps)?;
    let scale = last.iter().map(|g| abs(*g)).fold(0.0, f64::max);
    let truncation = abs(last[3]) / scale.max(1e-300);
    if truncation > ctx.equality_tolerance {
        return Err(Error::TruncationViolated(truncation));
    }
    let m = finite_dim_matrix(big_n, eps)?;
    let mt = m.transpose();
    let w = from_epsilon(eps, ctx)?;
    let xs: Vec<C<T>> = (0..=big_n as i64).map(|k| grid.x(k)).collect();
    let mut eigenpairs = Vec::with_capacity(big_n + 1);
    let mut small_components = false;
    for lambda in eigenvalues(&mt)? {
        let v = eigenvector(&mt, lambda)?;
        let vn = v.iter().map(|c| abs(*c)).fold(0.0, f64::max);
        small_components |= v.iter().any(|c| abs(*c) < 1e-10 * vn);
        let psi = |z: C<T>| xs.iter().zip(&v).fold(zero::<T>(), |acc, (x, c)| acc + *c * chi_value(*x, z));
        let (mut num, mut den): (f64, f64) = (0.0, 0.0);
        for &z in zs {
            let r = w.apply(psi, z)? - lambda * psi(z);
            num = num.max(abs(r));
            den = den.max(abs(psi(z)));
        }
        eigenpairs.push(EigenPair {
            lambda,
            v,
            residual: num / den.max(1e-300),
        });
    }
    Ok(FiniteDimProblem {
        n: big_n,
        eps: *eps,
        m,
        eigenpairs,
        small_components,
        truncation,
    })
}

/// Least-squares `λ` for `Ŵψ ≈ λψ` with `ψ = c + Σ ξ_k/(x − x_k)`, `k = 1..n`,
/// and the relative residual `‖Ŵψ − λψ‖ / ‖Ŵψ‖` it leaves.
pub fn ordinary_evp_residual<T: Real>(
    w: &ClassicalOperator<T>,
    xi: &[C<T>],
    constant: C<T>,
    zs: &[C<T>],
) -> Result<(C<T>, f64)> {
    let g = w.grid;
    let xs: Vec<C<T>> = (1..=xi.len() as i64).map(|k| g.x(k)).collect();
    let psi = |v: C<T>| xs.iter().zip(xi).fold(constant, |acc, (x, c)| acc + *c * chi_value(*x, v));
    let mut pairs = Vec::with_capacity(zs.len());
    for &z in zs {
        pairs.push((w.hatted.apply(psi, z)?, psi(z)));
    }
    let num = pairs.iter().fold(zero::<T>(), |acc, (a, b)| acc + b.conj() * *a);
    let den = pairs.iter().fold(zero::<T>(), |acc, (_, b)| acc + b.conj() * *b);
    let lambda = num / den;
    let r = pairs.iter().map(|(a, b)| (*a - lambda * *b).norm_sqr()).fold(T::zero(), |s, v| s + v);
    let n = pairs.iter().map(|(a, _)| a.norm_sqr()).fold(T::zero(), |s, v| s + v);
    Ok((lambda, (r / n).sqrt().to_f64_lossy()))
}
