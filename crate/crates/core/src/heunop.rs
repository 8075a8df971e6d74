//! Second-order q-shift operators `A1(z) T⁺ + A2(z) T⁻ + A0(z)` that raise
//! the pole order on the Askey-Wilson grid by one.
//!
//! Two constructions are provided: from nine prescribed expansion
//! coefficients ([`build_from_rspec`]) and from the eight-parameter
//! `ε` family ([`from_epsilon`]). Both are kept as black-box coefficient
//! functions and compared pointwise.

use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, Lu};
use crate::numerics::{
    abs, circle_coefficients, cpow, cr, cx, grid_y, infinite_product_terms, joukowski, kappa_operator, one,
    product, qpochhammer, zero, EpsilonParams, GridParams, PrecisionContext, Real, C,
};
use crate::ratfun::{chi_value, fit_partial_fractions, FitReport, PoleSet};

/// Coefficient function of an operator.
pub type Coef<T> = Arc<dyn Fn(C<T>) -> C<T> + Send + Sync>;

/// Denominators below this modulus are treated as vanishing.
pub const DEGENERACY_FLOOR: f64 = 1e-8;

/// `W = A1(z) T⁺ + A2(z) T⁻ + A0(z)` with `T^± f(z) = f(q^{±1} z)`.
#[derive(Clone)]
pub struct QDiffOperator<T: Real> {
    pub a1: Coef<T>,
    pub a2: Coef<T>,
    pub a0: Coef<T>,
    pub q: C<T>,
    pub label: String,
}

impl<T: Real> fmt::Debug for QDiffOperator<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("QDiffOperator")
            .field("q", &self.q)
            .field("label", &self.label)
            .finish_non_exhaustive()
    }
}

impl<T: Real> QDiffOperator<T> {
    pub fn new(a1: Coef<T>, a2: Coef<T>, a0: Coef<T>, q: C<T>, label: impl Into<String>) -> Self {
        Self {
            a1,
            a2,
            a0,
            q,
            label: label.into(),
        }
    }

    /// Operator with `A2(z) = A1(1/z)`.
    pub fn symmetric(a1: Coef<T>, a0: Coef<T>, q: C<T>, label: impl Into<String>) -> Self {
        let b = a1.clone();
        let a2: Coef<T> = Arc::new(move |z: C<T>| b(z.inv()));
        Self::new(a1, a2, a0, q, label)
    }

    /// `B(z)(T⁺ − 1) + B(1/z)(T⁻ − 1) + c`.
    pub fn difference_form(b: Coef<T>, c: C<T>, q: C<T>, label: impl Into<String>) -> Self {
        let bb = b.clone();
        let a0: Coef<T> = Arc::new(move |z: C<T>| c - bb(z) - bb(z.inv()));
        Self::symmetric(b, a0, q, label)
    }

    /// Rejects points where `z² = 1`, `qz² = 1` or `z² = q`.
    pub fn check_point(&self, z: C<T>) -> Result<()> {
        let z2 = z * z;
        let bad = [abs(z2 - one()), abs(self.q * z2 - one()), abs(z2 - self.q)];
        if abs(z) < 1e-300 || bad.iter().any(|&d| d < DEGENERACY_FLOOR) {
            return Err(Error::ShiftFixedPoint(format!("{}", crate::numerics::to_c64(z))));
        }
        Ok(())
    }

    pub fn coefficients(&self, z: C<T>) -> (C<T>, C<T>, C<T>) {
        ((self.a1)(z), (self.a2)(z), (self.a0)(z))
    }

    pub fn apply<F: Fn(C<T>) -> C<T>>(&self, f: F, z: C<T>) -> Result<C<T>> {
        self.check_point(z)?;
        let (a1, a2, a0) = self.coefficients(z);
        Ok(a1 * f(self.q * z) + a2 * f(z / self.q) + a0 * f(z))
    }

    /// `(W f)(z)` together with `|A1 f(qz)| + |A2 f(z/q)| + |A0 f(z)|`, the
    /// scale against which cancellation in the sum is judged.
    pub fn apply_scaled<F: Fn(C<T>) -> C<T>>(&self, f: F, z: C<T>) -> Result<(C<T>, f64)> {
        self.check_point(z)?;
        let (a1, a2, a0) = self.coefficients(z);
        let t = [a1 * f(self.q * z), a2 * f(z / self.q), a0 * f(z)];
        Ok((t[0] + t[1] + t[2], t.iter().map(|v| abs(*v)).sum()))
    }

    /// `W` applied to `1/(x − xn)` at `z`.
    pub fn apply_chi(&self, xn: C<T>, z: C<T>) -> Result<C<T>> {
        self.apply(|w| chi_value(xn, w), z)
    }

    pub fn scale(&self, c: C<T>) -> Self {
        self.combine(c, self, zero())
    }

    /// `a·self + b·other`; both must share `q`.
    pub fn combine(&self, a: C<T>, other: &Self, b: C<T>) -> Self {
        let (s1, s2, s0) = (self.a1.clone(), self.a2.clone(), self.a0.clone());
        let (o1, o2, o0) = (other.a1.clone(), other.a2.clone(), other.a0.clone());
        Self::new(
            Arc::new(move |z| a * s1(z) + b * o1(z)),
            Arc::new(move |z| a * s2(z) + b * o2(z)),
            Arc::new(move |z| a * s0(z) + b * o0(z)),
            self.q,
            format!("combination of {} and {}", self.label, other.label),
        )
    }

    pub fn add_constant(&self, c: C<T>) -> Self {
        let s0 = self.a0.clone();
        Self {
            a0: Arc::new(move |z| s0(z) + c),
            ..self.clone()
        }
    }
}

/// Both identities `x(qz) + x(z/q) = (q + 1/q) x(z)` and
/// `x(qz) x(z/q) = x(z)² + (q − 1/q)²`, as relative residuals.
pub fn xx_identities<T: Real>(z: C<T>, q: C<T>) -> (f64, f64) {
    let (xp, xm, x) = (joukowski(q * z), joukowski(z / q), joukowski(z));
    let s = (q + q.inv()) * x;
    let d = q - q.inv();
    let pr = x * x + d * d;
    (
        abs(xp + xm - s) / (1.0 + abs(s)),
        abs(xp * xm - pr) / (1.0 + abs(pr)),
    )
}

/// Expansion data `ξ00, ξ01, ξ10, ξ11, ξ12, ξ20, ξ21, ξ22, ξ23` of the
/// targets `r1 = W χ0`, `r2 = W χ1`, `r3 = W χ2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RSpec<T: Real> {
    pub xi: [C<T>; 9],
}

impl<T: Real> RSpec<T> {
    /// `r_j(x)` for `j = 1, 2, 3`.
    pub fn r(&self, j: usize, x: C<T>, xs: &[C<T>; 4]) -> C<T> {
        let (start, len) = match j {
            1 => (0, 2),
            2 => (2, 3),
            _ => (5, 4),
        };
        (0..len).fold(zero(), |acc, k| acc + self.xi[start + k] / (x - xs[k]))
    }
}

#[derive(Clone, Copy)]
struct Interp<T: Real> {
    r: RSpec<T>,
    xs: [C<T>; 4],
    q: C<T>,
}

impl<T: Real> Interp<T> {
    /// `Σ_j (x − x_j)(x(w) − x_j) / ((x_j − x_{j+1})(x_j − x_{j+2})) r_{j+1}(x)`
    /// with `x3 := x0`, `x4 := x1`.
    fn sum(&self, x: C<T>, xw: C<T>) -> C<T> {
        let c = [self.xs[0], self.xs[1], self.xs[2], self.xs[0], self.xs[1]];
        (0..3).fold(zero(), |acc, j| {
            acc + (x - c[j]) * (xw - c[j]) / ((c[j] - c[j + 1]) * (c[j] - c[j + 2])) * self.r.r(j + 1, x, &self.xs)
        })
    }

    fn a1(&self, z: C<T>) -> C<T> {
        let (xp, xm, x) = (joukowski(self.q * z), joukowski(z / self.q), joukowski(z));
        let pre = (xp - self.xs[0]) * (xp - self.xs[1]) * (xp - self.xs[2]) / ((xp - x) * (xp - xm));
        pre * self.sum(x, xm)
    }

    fn a2(&self, z: C<T>) -> C<T> {
        let (xp, xm, x) = (joukowski(self.q * z), joukowski(z / self.q), joukowski(z));
        let pre = (xm - self.xs[0]) * (xm - self.xs[1]) * (xm - self.xs[2]) / ((xm - x) * (xm - xp));
        pre * self.sum(x, xp)
    }

    fn a0(&self, z: C<T>) -> C<T> {
        let (xp, xm, x) = (joukowski(self.q * z), joukowski(z / self.q), joukowski(z));
        let x0 = self.xs[0];
        let r1_scaled = self.r.xi[0] + self.r.xi[1] * (x - x0) / (x - self.xs[1]);
        r1_scaled - (self.a1(z) / (xp - x0) + self.a2(z) / (xm - x0)) * (x - x0)
    }
}

fn interp<T: Real>(r: &RSpec<T>, grid: &GridParams<T>) -> Result<Interp<T>> {
    grid.check_nondegenerate(0..=4)?;
    let xs = [grid.x(0), grid.x(1), grid.x(2), grid.x(3)];
    for i in 0..4 {
        for j in 0..i {
            if abs(xs[i] - xs[j]) < DEGENERACY_FLOOR {
                return Err(Error::DegenerateGrid { index: i as i64 });
            }
        }
    }
    Ok(Interp { r: *r, xs, q: grid.q })
}

/// Operator whose action on `χ0, χ1, χ2` is prescribed by `r`. `A1`, `A2`
/// are the three-term interpolation sums; `A0` makes `W χ0 = r1` exact.
pub fn build_from_rspec<T: Real>(r: &RSpec<T>, grid: &GridParams<T>, ctx: &PrecisionContext) -> Result<QDiffOperator<T>> {
    ctx.validate()?;
    let it = interp(r, grid)?;
    Ok(QDiffOperator::new(
        Arc::new(move |z| it.a1(z)),
        Arc::new(move |z| it.a2(z)),
        Arc::new(move |z| it.a0(z)),
        grid.q,
        "interpolation",
    ))
}

/// Polynomial data of an operator: `η0..η8` of `Q8`, the `A0` template
/// constants `η̃0..η̃4` and `c1..c4`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EtaCoeffs<T: Real> {
    pub eta: [C<T>; 9],
    pub eta_tilde: [C<T>; 5],
    pub c: [C<T>; 4],
    /// `max(|η9|, |η10|) / max|η_k|` from the degree-10 interpolation.
    pub excess_degree: f64,
    /// Relative residual of the `A0` template fit on validation points.
    pub template_residual: f64,
}

impl<T: Real> EtaCoeffs<T> {
    pub fn eta8_defect(&self, grid: &GridParams<T>) -> f64 {
        let want = grid.alpha * grid.alpha * cpow(grid.q, 3) * self.eta[0];
        let scale = self.eta.iter().map(|e| abs(*e)).fold(0.0, f64::max);
        if scale == 0.0 {
            0.0
        } else {
            abs(self.eta[8] - want) / scale
        }
    }
}

/// `c1..c4` from `η`.
pub fn c_from_eta<T: Real>(eta: &[C<T>; 9], alpha: C<T>, q: C<T>) -> [C<T>; 4] {
    let aq = alpha * q;
    let den = q * (one::<T>() - q);
    [
        aq * eta[0] + eta[8] / aq,
        aq * eta[1] + eta[7] / aq,
        (eta[7] + eta[5] * q + eta[3] * q * q + eta[1] * q * q * q) / den,
        (eta[8] + eta[6] * q + eta[4] * q * q + eta[2] * q * q * q + eta[0] * cpow(q, 4)) / den,
    ]
}

/// `z ↦ κ (qz − α) Q8(z) / (z² (1 − αz)(1 − z²)(1 − qz²))`.
pub fn a1_closed_form<T: Real>(eta: &[C<T>; 9], grid: &GridParams<T>) -> Result<Coef<T>> {
    let (alpha, q) = (grid.alpha, grid.q);
    let want = alpha * alpha * q * q * q * eta[0];
    let scale = eta.iter().map(|e| abs(*e)).fold(0.0, f64::max);
    if abs(eta[8] - want) > 1e-8 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::ConstraintViolation(
            "eta_8 must equal alpha^2 q^3 eta_0".into(),
        ));
    }
    let kappa = kappa_operator(alpha, q);
    let eta = *eta;
    Ok(Arc::new(move |z: C<T>| {
        let q8 = eta.iter().rev().fold(zero::<T>(), |acc, e| acc * z + *e);
        let o = one::<T>();
        kappa * (q * z - alpha) * q8 / (z * z * (o - alpha * z) * (o - z * z) * (o - q * z * z))
    }))
}

/// Recovers `η` by interpolating `Q8` through eleven points on `|z| = 0.9`
/// (a discrete Fourier transform) and `η̃` by fitting `A0` to its template.
pub fn eta_from_rspec<T: Real>(r: &RSpec<T>, grid: &GridParams<T>, ctx: &PrecisionContext) -> Result<EtaCoeffs<T>> {
    ctx.validate()?;
    let it = interp(r, grid)?;
    let (alpha, q) = (grid.alpha, grid.q);
    let o = one::<T>();
    let pref = -qpochhammer(q, q, 2) * qpochhammer(alpha * alpha * q, q, 3) / (cpow(q, 4) * alpha * alpha);
    let q8 = |z: C<T>| {
        let s = it.sum(joukowski(z), joukowski(z / q));
        pref * s * z * qpochhammer(z / (alpha * q), q, 2) * qpochhammer(alpha * z, q, 4)
    };
    let hazards: Vec<C<T>> = (0..4).map(|k| grid.x(k)).collect();
    let clear = |z: C<T>| {
        let x = joukowski(z);
        hazards.iter().all(|&h| abs(x - h) > 1e-2 * (1.0 + abs(h)))
            && [o, -o].iter().all(|&s| abs(z - s) > 1e-2)
    };

    let c = circle_coefficients(q8, 11, 0.9, clear)?;
    let mut eta = [zero::<T>(); 9];
    eta.copy_from_slice(&c[..9]);
    let scale = eta.iter().map(|e| abs(*e)).fold(0.0, f64::max);
    let excess_degree = if scale == 0.0 {
        0.0
    } else {
        abs(c[9]).max(abs(c[10])) / scale
    };

    let (eta_tilde, template_residual) = fit_a0_template(&|z| it.a0(z), q)?;
    Ok(EtaCoeffs {
        eta,
        eta_tilde,
        c: c_from_eta(&eta, alpha, q),
        excess_degree,
        template_residual,
    })
}

fn a0_template_row<T: Real>(z: C<T>, q: C<T>) -> [C<T>; 5] {
    let o = one::<T>();
    let z2 = z * z;
    let d1 = o - q * z2;
    let d2 = z2 - q;
    [o, z2 + z2.inv(), z + z.inv(), o / d1 + q / d2, z / d1 + z / d2]
}

/// Fits `η̃0 + η̃1(z² + z⁻²) + η̃2(z + z⁻¹) + (η̃3 + η̃4 z)/(1 − qz²) + (η̃3 q + η̃4 z)/(z² − q)`.
fn fit_a0_template<T: Real>(a0: &dyn Fn(C<T>) -> C<T>, q: C<T>) -> Result<([C<T>; 5], f64)> {
    let zs: Vec<C<T>> = (0..13)
        .map(|k| {
            let th = 0.41 + TAU * k as f64 / 13.0;
            let r = if k % 2 == 0 { 0.83 } else { 0.61 };
            cx(r * th.cos(), r * th.sin())
        })
        .collect();
    let rows: Vec<Vec<C<T>>> = zs.iter().map(|&z| a0_template_row(z, q).to_vec()).collect();
    let vals: Vec<C<T>> = zs.iter().map(|&z| a0(z)).collect();
    let lu = Lu::factor(&CMatrix::from_rows(&rows[..5]))?;
    let sol = lu.solve(&vals[..5]);
    let mut res: f64 = 0.0;
    for (row, v) in rows[5..].iter().zip(&vals[5..]) {
        let (fit, mag) = row
            .iter()
            .zip(&sol)
            .fold((zero::<T>(), 0.0), |(f, m), (b, c)| (f + *b * *c, m + abs(*b * *c)));
        res = res.max(abs(fit - *v) / abs(*v).max(mag).max(f64::MIN_POSITIVE));
    }
    let mut out = [zero::<T>(); 5];
    out.copy_from_slice(&sol);
    Ok((out, res))
}

/// Pieces of the `ε`-parametrized coefficients that do not carry `κ η0`.
#[derive(Clone, Copy)]
struct EpsShape<T: Real> {
    p: C<T>,
    e: C<T>,
    e2: [C<T>; 8],
    p1: C<T>,
    p2: C<T>,
    ssum: C<T>,
}

impl<T: Real> EpsShape<T> {
    fn new(eps: &EpsilonParams<T>) -> Self {
        let e2 = eps.eps_squared();
        let o = one::<T>();
        Self {
            p: eps.p,
            e: eps.eps_product(),
            e2,
            p1: product(e2.iter().map(|a| o - *a)),
            p2: product(e2.iter().map(|a| o + *a)),
            ssum: e2.iter().fold(zero(), |acc, a| acc + *a + a.inv()),
        }
    }

    fn num8(&self, z: C<T>) -> C<T> {
        product(self.e2.iter().map(|a| one::<T>() - *a * self.p * z))
    }

    /// `p (pz − E) ∏(1 − ε_j² p z) / (z² (1 − pzE)(1 − z²)(1 − p²z²))`.
    fn u(&self, z: C<T>) -> C<T> {
        let (p, o) = (self.p, one::<T>());
        p * (p * z - self.e) * self.num8(z) / (z * z * (o - p * z * self.e) * (o - z * z) * (o - p * p * z * z))
    }

    fn pole_terms(&self, z: C<T>) -> (C<T>, C<T>) {
        let (p, o, two) = (self.p, one::<T>(), cr::<T>(2.0));
        (
            self.p1 / (two * (o - z / p) * (o - (p * z).inv())),
            self.p2 / (two * (o + z / p) * (o + (p * z).inv())),
        )
    }

    fn poly_part(&self, z: C<T>) -> C<T> {
        let p = self.p;
        p * self.e * (self.ssum * joukowski(z) - (p + p.inv()) * (z * z + (z * z).inv()))
    }

    /// The braces of the `A0` closed form.
    fn v(&self, z: C<T>) -> C<T> {
        let (t1, t2) = self.pole_terms(z);
        t1 - t2 - self.poly_part(z)
    }

    fn takemura_u(&self, z: C<T>) -> C<T> {
        let o = one::<T>();
        self.num8(z) / ((o - z * z) * (o - self.p * self.p * z * z))
    }

    fn takemura_v(&self, z: C<T>) -> C<T> {
        let (t1, t2) = self.pole_terms(z);
        t1 + t2 + self.poly_part(z)
    }
}

/// `W = κ W0 + η̃0` in the `ε` parametrization.
pub fn from_epsilon<T: Real>(eps: &EpsilonParams<T>, ctx: &PrecisionContext) -> Result<QDiffOperator<T>> {
    ctx.validate()?;
    let sh = EpsShape::new(eps);
    let k = kappa_operator(eps.alpha(), eps.q()) * eps.eta0;
    let (p, et0) = (eps.p, eps.eta_tilde0);
    Ok(QDiffOperator::symmetric(
        Arc::new(move |z| k * sh.u(z)),
        Arc::new(move |z| et0 + k * p * p * p * sh.v(z)),
        eps.q(),
        "epsilon",
    ))
}

/// `W0 = (W − η̃0)/κ`.
pub fn w0<T: Real>(eps: &EpsilonParams<T>) -> QDiffOperator<T> {
    let sh = EpsShape::new(eps);
    let (p, n0) = (eps.p, eps.eta0);
    QDiffOperator::symmetric(
        Arc::new(move |z| n0 * sh.u(z)),
        Arc::new(move |z| n0 * p * p * p * sh.v(z)),
        eps.q(),
        "W0",
    )
}

/// `Ŵ = W0 − η0 p³ ∏(1 − ε_j²) / ((1 − z/p)(1 − 1/(pz)))`.
pub fn hat_w<T: Real>(eps: &EpsilonParams<T>) -> QDiffOperator<T> {
    let sh = EpsShape::new(eps);
    let (p, n0) = (eps.p, eps.eta0);
    QDiffOperator::symmetric(
        Arc::new(move |z| n0 * sh.u(z)),
        Arc::new(move |z| {
            let (t1, t2) = sh.pole_terms(z);
            -n0 * p * p * p * (t1 + t2 + sh.poly_part(z))
        }),
        eps.q(),
        "W-hat",
    )
}

/// `A⁽¹⁾ = Ũ(z) T⁺ + Ũ(1/z) T⁻ + Ṽ(z)`.
pub fn a1_takemura<T: Real>(eps: &EpsilonParams<T>) -> QDiffOperator<T> {
    let sh = EpsShape::new(eps);
    QDiffOperator::symmetric(
        Arc::new(move |z| sh.takemura_u(z)),
        Arc::new(move |z| sh.takemura_v(z)),
        eps.q(),
        "A1",
    )
}

fn degenerate(what: &str, v: f64) -> Result<()> {
    if v < DEGENERACY_FLOOR {
        Err(Error::DegenerateParameter(format!("{what} vanishes ({v:.2e})")))
    } else {
        Ok(())
    }
}

/// Closed-form coefficients of `W χ_n` on `χ0, χ_{n−1}, χ_n, χ_{n+1}`.
pub fn gamma_closed<T: Real>(n: usize, eps: &EpsilonParams<T>) -> Result<[C<T>; 4]> {
    let (p, alpha, eta0) = (eps.p, eps.alpha(), eps.eta0);
    let sh = EpsShape::new(eps);
    let kappa = kappa_operator(alpha, eps.q());
    let o = one::<T>();
    let n = n as i64;
    let pw = |k: i64| cpow(p, k);
    let a2 = alpha * alpha;
    let dens = [
        ("1 - alpha^2 p^(2n-2)", o - a2 * pw(2 * n - 2)),
        ("1 - p^(2n+2)", o - pw(2 * n + 2)),
        ("1 - alpha^2 p^(4n-2)", o - a2 * pw(4 * n - 2)),
        ("1 - alpha^2 p^(4n)", o - a2 * pw(4 * n)),
        ("1 - alpha^2 p^(4n+2)", o - a2 * pw(4 * n + 2)),
        ("1 - alpha p^(2n-1)", o - alpha * pw(2 * n - 1)),
        ("1 - alpha p^(2n+1)", o - alpha * pw(2 * n + 1)),
        ("1 + alpha p^(2n-1)", o + alpha * pw(2 * n - 1)),
        ("1 + alpha p^(2n+1)", o + alpha * pw(2 * n + 1)),
    ];
    for (name, d) in &dens {
        degenerate(name, abs(*d))?;
    }
    let [d0, d1, d2, d3, d4, m1, m2, m3, m4] = dens.map(|(_, d)| d);
    let a3 = a2 * alpha;
    let g0 = kappa * pw(2 * n) * product(sh.e2.iter().map(|e| alpha - p * *e)) * eta0 / (a3 * d0 * d1);
    let g1 = -kappa * (o - pw(2 * n)) * product(sh.e2.iter().map(|e| o - alpha * pw(2 * n - 1) * *e)) * eta0
        / (alpha * pw(4 * n - 6) * d0 * d2 * d3);
    let apn = alpha * pw(2 * n);
    let a2p4n = a2 * pw(4 * n);
    let g2 = eps.eta_tilde0
        + kappa
            * alpha
            * p
            * p
            * p
            * ((a2p4n + a2p4n.inv()) * (p + p.inv())
                - (apn + apn.inv()) * sh.ssum
                - pw(2 * n + 1) / cr::<T>(2.0) * (sh.p1 / (m1 * m2) + sh.p2 / (m3 * m4)))
            * eta0;
    let g3 = -kappa * (o - a2 * pw(2 * n)) * product(sh.e2.iter().map(|e| alpha * pw(2 * n + 1) - *e)) * eta0
        / (a3 * pw(4 * n - 2) * d1 * d3 * d4);
    Ok([g0, g1, g2, g3])
}

/// `(p z; p²)∞ (p/z; p²)∞ (α/z; p²)∞ (α z; p²)∞`, truncated so every factor's
/// neglected tail is below `tail` (by default 10⁻⁴ of the scalar's epsilon).
#[derive(Clone, Copy, Debug)]
pub struct Gauge<T: Real> {
    pub alpha: C<T>,
    pub p: C<T>,
    pub tail: f64,
}

impl<T: Real> Gauge<T> {
    pub fn new(alpha: C<T>, p: C<T>) -> Self {
        Self {
            alpha,
            p,
            tail: T::epsilon().to_f64_lossy() * 1e-4,
        }
    }

    pub fn factors(&self, z: C<T>) -> Result<usize> {
        let q = self.p * self.p;
        let lead = [self.p * z, self.p / z, self.alpha / z, self.alpha * z]
            .iter()
            .map(|a| abs(*a))
            .fold(0.0, f64::max);
        infinite_product_terms(lead, abs(q), self.tail)
    }

    pub fn eval(&self, z: C<T>) -> Result<C<T>> {
        let k = self.factors(z)?;
        let q = self.p * self.p;
        Ok([self.p * z, self.p / z, self.alpha / z, self.alpha * z]
            .iter()
            .fold(one(), |acc, a| acc * qpochhammer(*a, q, k)))
    }
}

/// Relative residuals of the gauge correspondence between `Ŵ` and `A⁽¹⁾`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaugeReport {
    /// `Ψ(p²z) = −(1 − α/(p²z)) / (pz(1 − αz)) Ψ(z)`.
    pub functional_equation: f64,
    /// `Ũ(z) = −Ψ(z) U(z) / (Ψ(p²z) η0 p³)` and the `T⁻`/diagonal analogues.
    pub coefficients: f64,
    /// `−η0⁻¹ p⁻³ Ψ Ŵ Ψ⁻¹ g = A⁽¹⁾ g` for a smooth test function.
    pub operator: f64,
    pub factors: usize,
}

impl GaugeReport {
    pub fn worst(&self) -> f64 {
        self.functional_equation.max(self.coefficients).max(self.operator)
    }
}

fn rel(a: f64, scale: f64) -> f64 {
    if scale == 0.0 {
        a
    } else {
        a / scale
    }
}

/// Checks the gauge correspondence at the given points.
pub fn gauge_consistency_check<T: Real>(
    eps: &EpsilonParams<T>,
    zs: &[C<T>],
    ctx: &PrecisionContext,
) -> Result<GaugeReport> {
    ctx.validate()?;
    let gauge = Gauge::new(eps.alpha(), eps.p);
    let (p, q, alpha) = (eps.p, eps.q(), eps.alpha());
    let w = hat_w(eps);
    let a = a1_takemura(eps);
    let norm = -(eps.eta0 * p * p * p).inv();
    let test = |v: C<T>| (joukowski(v) / cr::<T>(3.0)).exp();
    let mut rep = GaugeReport {
        functional_equation: 0.0,
        coefficients: 0.0,
        operator: 0.0,
        factors: 0,
    };
    let o = one::<T>();
    for &z in zs {
        w.check_point(z)?;
        rep.factors = rep.factors.max(gauge.factors(z)?).max(gauge.factors(q * z)?);
        let (g0, gp, gm) = (gauge.eval(z)?, gauge.eval(q * z)?, gauge.eval(z / q)?);
        let fe = -(o - alpha / (z * q)) / (p * z * (o - alpha * z)) * g0;
        rep.functional_equation = rep.functional_equation.max(rel(abs(gp - fe), abs(gp)));

        let (u1, u2, v) = w.coefficients(z);
        let (t1, t2, tv) = a.coefficients(z);
        let c1 = norm * g0 * u1 / gp;
        let c2 = norm * g0 * u2 / gm;
        let c0 = norm * v;
        let e = [(t1, c1), (t2, c2), (tv, c0)]
            .iter()
            .map(|(x, y)| rel(abs(*x - *y), abs(*x)))
            .fold(0.0, f64::max);
        rep.coefficients = rep.coefficients.max(e);

        let inner = w.apply(|v| test(v) / gauge.eval(v).unwrap_or_else(|_| C::new(T::nan(), T::nan())), z)?;
        let lhs = norm * g0 * inner;
        let rhs = a.apply(test, z)?;
        rep.operator = rep.operator.max(rel(abs(lhs - rhs), abs(rhs)));
    }
    Ok(rep)
}

/// Expected pole labels of `Ŵ` applied to `1/(x − x_k)` (`on_x`) or
/// `1/(x − y_k)`.
pub fn two_series_pattern(k: usize, on_x: bool) -> Vec<String> {
    let (same, other) = if on_x { ("x", "y") } else { ("y", "x") };
    let mut out = vec![format!("{other}0"), format!("{same}0")];
    for j in k.saturating_sub(1)..=k + 1 {
        let l = format!("{same}{j}");
        if !out.contains(&l) {
            out.push(l);
        }
    }
    out
}

/// Pole set `{x0..x_m, y0..y_m}` on the `ε` grid.
pub fn two_series_poles<T: Real>(eps: &EpsilonParams<T>, m: usize) -> Result<PoleSet<T>> {
    let ys = (0..=m as i64).map(|j| (format!("y{j}"), grid_y(eps.p, j))).collect();
    PoleSet::new(eps.grid(), (0..=m as i64).collect(), ys)
}

/// Raising check on the two pole series for source index `k`: the
/// membership fit over the expected labels and the fit over the full set
/// `{x0..x_{k+1}, y0..y_{k+1}}` from which leakage is read.
#[derive(Clone, Debug)]
pub struct TwoSeriesFit<T: Real> {
    pub membership: FitReport<T>,
    pub full: FitReport<T>,
    pub leakage: f64,
}

/// With `via_gauge` the function fitted is `Ψ⁻¹ A⁽¹⁾ (Ψ χ)` instead of `Ŵ χ`.
pub fn check_two_series<T: Real>(
    eps: &EpsilonParams<T>,
    k: usize,
    on_x: bool,
    via_gauge: bool,
    ctx: &PrecisionContext,
) -> Result<TwoSeriesFit<T>> {
    let full = two_series_poles(eps, k + 1)?;
    let expected = two_series_pattern(k, on_x);
    let src = if on_x { eps.grid().x(k as i64) } else { grid_y(eps.p, k as i64) };
    let g: Box<dyn Fn(C<T>) -> Result<C<T>> + Sync> = if via_gauge {
        let a = a1_takemura(eps);
        let gauge = Gauge::new(eps.alpha(), eps.p);
        Box::new(move |z| {
            let inner = a.apply(
                |v| gauge.eval(v).unwrap_or_else(|_| C::new(T::nan(), T::nan())) * chi_value(src, v),
                z,
            )?;
            Ok(inner / gauge.eval(z)?)
        })
    } else {
        let w = hat_w(eps);
        Box::new(move |z| w.apply_chi(src, z))
    };
    let ys: Vec<(String, C<T>)> = expected
        .iter()
        .filter(|l| l.starts_with('y'))
        .map(|l| (l.clone(), grid_y(eps.p, l[1..].parse().unwrap_or(0))))
        .collect();
    let xs: Vec<i64> = expected
        .iter()
        .filter(|l| l.starts_with('x'))
        .map(|l| l[1..].parse().unwrap_or(0))
        .collect();
    let cand = PoleSet::new(eps.grid(), xs, ys)?;
    let membership = fit_partial_fractions(&*g, &cand, false, ctx)?;
    let full_fit = fit_partial_fractions(&*g, &full, false, ctx)?;
    let refs: Vec<&str> = expected.iter().map(String::as_str).collect();
    let leakage = full_fit.leakage_outside(&refs);
    Ok(TwoSeriesFit {
        membership,
        full: full_fit,
        leakage,
    })
}

/// The scaled `A⁽¹⁾` with `ε7 = δ7 t`, `ε8 = δ8/t` and the limiting
/// template it approaches as `t → ∞`.
#[derive(Clone, Debug)]
pub struct AwLimit<T: Real> {
    pub scaled: QDiffOperator<T>,
    /// `∏_{j≤6}(1 − ε_j² p z) / (p z (1 − z²)(1 − p² z²))`.
    pub u_hat: QDiffOperator<T>,
    /// Coefficient of `z + 1/z` in the limiting diagonal term.
    pub v_hat_linear: C<T>,
    pub t: f64,
}

impl<T: Real> AwLimit<T> {
    /// `|A1_scaled(z) − Û(z)|`.
    pub fn deviation(&self, z: C<T>) -> f64 {
        abs((self.scaled.a1)(z) - (self.u_hat.a1)(z))
    }
}

pub fn aw_limit<T: Real>(
    eps6: &[C<T>; 6],
    delta7: C<T>,
    delta8: C<T>,
    p: C<T>,
    t: f64,
    ctx: &PrecisionContext,
) -> Result<AwLimit<T>> {
    ctx.validate()?;
    if t.is_nan() || t < 10.0 {
        return Err(Error::InvalidParameter(format!("limit parameter t = {t} below 10")));
    }
    let tt = cr::<T>(t);
    let mut e = [one::<T>(); 8];
    e[..6].copy_from_slice(eps6);
    e[6] = delta7 * tt;
    e[7] = delta8 / tt;
    let eps = EpsilonParams::new(e, one(), zero(), p)?;
    let sh = EpsShape::new(&eps);
    let s = -(delta7 * delta7 * tt * tt).inv();
    let p2 = p * p;
    let scaled = QDiffOperator::new(
        Arc::new(move |z| s * sh.takemura_u(z) / (p2 * z * z)),
        Arc::new(move |z| s * z * z * sh.takemura_u(z.inv()) / p2),
        Arc::new(move |z| s * sh.takemura_v(z)),
        p2,
        "A1 scaled",
    );
    let e6 = *eps6;
    let o = one::<T>();
    let uhat: Coef<T> = Arc::new(move |z: C<T>| {
        product(e6.iter().map(|e| o - *e * *e * p * z)) / (p * z * (o - z * z) * (o - p2 * z * z))
    });
    let e123456 = product(eps6.iter().copied());
    let d78 = delta7 * delta8;
    let v_hat_linear = (p2 * e123456 * d78 - o) * (p2 * e123456 - d78) / (p * d78);
    Ok(AwLimit {
        scaled,
        u_hat: QDiffOperator::difference_form(uhat, zero(), p2, "AW template"),
        v_hat_linear,
        t,
    })
}
