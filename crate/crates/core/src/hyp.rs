//! Terminating very-well-poised series `₁₀W₉` and their balanced form
//! `₁₀B₉`, and the identification of the recurrence solutions of
//! [`crate::gevp`] with Wilson's biorthogonal rational functions.

use crate::classical::ClassicalParams;
use crate::error::{Error, Result};
use crate::gevp::{hatted_operator, solve_recurrence, split_operators};
use crate::numerics::{abs, cpow, joukowski, one, zero, PrecisionContext, Real, C};
use crate::ratfun::{fit_partial_fractions, FitReport, PoleSet};

/// Largest truncation order recognised from `g = q^{−n}`.
pub const MAX_ORDER: usize = 64;

/// Denominator factors below this (relative to 1) stop the summation.
const DENOMINATOR_FLOOR: f64 = 1e-13;

/// Parameters of `₁₀W₉(a; b, c, d, e, f, g, h; q)` with `g = q^{−n}` and
/// `h = μ qⁿ`. The first argument enters through `a²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HypSeriesSpec<T: Real> {
    pub a: C<T>,
    pub b: C<T>,
    pub c: C<T>,
    pub d: C<T>,
    pub e: C<T>,
    pub f: C<T>,
    pub g: C<T>,
    pub h: C<T>,
    pub q: C<T>,
    pub n: usize,
    pub mu: C<T>,
}

impl<T: Real> HypSeriesSpec<T> {
    /// Balanced terminating series: `g = q^{−n}`, `μ = a⁶q²/(bcdef)`, `h = μqⁿ`.
    #[allow(clippy::too_many_arguments)]
    pub fn terminating(a: C<T>, b: C<T>, c: C<T>, d: C<T>, e: C<T>, f: C<T>, q: C<T>, n: usize) -> Self {
        let a2 = a * a;
        let mu = a2 * a2 * a2 * q * q / (b * c * d * e * f);
        let qn = cpow(q, n as i64);
        Self {
            a,
            b,
            c,
            d,
            e,
            f,
            g: qn.inv(),
            h: mu * qn,
            q,
            n,
            mu,
        }
    }

    /// Worst relative violation of `bcdefgh = a⁶q²`, `g qⁿ = 1` and
    /// `μ bcdef = a⁶q²`.
    pub fn defect(&self) -> f64 {
        let a2 = self.a * self.a;
        let target = a2 * a2 * a2 * self.q * self.q;
        let t = abs(target);
        let bcdef = self.b * self.c * self.d * self.e * self.f;
        let vwp = abs(bcdef * self.g * self.h - target) / t;
        let trunc = abs(self.g * cpow(self.q, self.n as i64) - one());
        let bal = abs(self.mu * bcdef - target) / t;
        vwp.max(trunc).max(bal)
    }

    pub fn validate(&self, ctx: &PrecisionContext) -> Result<()> {
        let d = self.defect();
        if d > ctx.equality_tolerance {
            return Err(Error::ConstraintViolation(format!(
                "series parameters are not very-well-poised, balanced and terminating (defect {d:.2e})"
            )));
        }
        Ok(())
    }

    fn uppers(&self) -> [C<T>; 8] {
        let a2 = self.a * self.a;
        [a2, self.b, self.c, self.d, self.e, self.f, self.g, self.h]
    }

    fn lowers(&self) -> [C<T>; 8] {
        let aq = self.a * self.a * self.q;
        [self.q, aq / self.b, aq / self.c, aq / self.d, aq / self.e, aq / self.f, aq / self.g, aq / self.h]
    }
}

/// `Σ_{k=0..n} (1 − a²q^{2k})/(1 − a²) qᵏ ∏ (a², b, …, h; q)_k / (q, a²q/b, …, a²q/h; q)_k`,
/// each term obtained from the previous one by its ratio.
pub fn eval_10phi9<T: Real>(spec: &HypSeriesSpec<T>) -> Result<C<T>> {
    let (q, o) = (spec.q, one::<T>());
    let a2 = spec.a * spec.a;
    if spec.n > 0 && abs(o - a2) < DENOMINATOR_FLOOR {
        return Err(Error::SeriesDenominator(0));
    }
    let (up, lo) = (spec.uppers(), spec.lowers());
    let mut term = o;
    let mut sum = o;
    let mut qk = o;
    for k in 0..spec.n {
        let mut num = q * (o - a2 * qk * qk * q * q);
        let mut den = o - a2 * qk * qk;
        for (u, l) in up.iter().zip(&lo) {
            let dl = o - *l * qk;
            if abs(dl) < DENOMINATOR_FLOOR {
                return Err(Error::SeriesDenominator(k + 1));
            }
            num = num * (o - *u * qk);
            den = den * dl;
        }
        if abs(den) == 0.0 {
            return Err(Error::SeriesDenominator(k + 1));
        }
        term = term * num / den;
        sum = sum + term;
        qk = qk * q;
    }
    Ok(sum)
}

/// The same sum with every term built from full q-Pochhammer products.
pub fn eval_10phi9_direct<T: Real>(spec: &HypSeriesSpec<T>) -> Result<C<T>> {
    use crate::numerics::qpochhammer;
    let (q, o) = (spec.q, one::<T>());
    let a2 = spec.a * spec.a;
    let (up, lo) = (spec.uppers(), spec.lowers());
    let mut sum = zero::<T>();
    for k in 0..=spec.n {
        let mut num = cpow(q, k as i64);
        let mut den = one::<T>();
        if k > 0 {
            num = num * (o - a2 * cpow(q, 2 * k as i64));
            den = o - a2;
        }
        for (u, l) in up.iter().zip(&lo) {
            num = num * qpochhammer(*u, q, k);
            den = den * qpochhammer(*l, q, k);
        }
        if abs(den) == 0.0 {
            return Err(Error::SeriesDenominator(k));
        }
        sum = sum + num / den;
    }
    Ok(sum)
}

/// Finds `n` with `g qⁿ = 1`, `n ≤ MAX_ORDER`.
pub fn truncation_order<T: Real>(g: C<T>, q: C<T>) -> Result<usize> {
    let mut v = g;
    for n in 0..=MAX_ORDER {
        if abs(v - one()) < 1e-10 {
            return Ok(n);
        }
        v = v * q;
    }
    Err(Error::InvalidParameter(format!(
        "g is not q^(-n) for any n <= {MAX_ORDER}; the series does not terminate"
    )))
}

/// `₁₀B₉(a; b, c, d, e, f, g; q) = ₁₀W₉(a; b, …, g, a⁶q²/(bcdefg); q)`.
#[allow(clippy::too_many_arguments)]
pub fn eval_10b9<T: Real>(a: C<T>, b: C<T>, c: C<T>, d: C<T>, e: C<T>, f: C<T>, g: C<T>, q: C<T>) -> Result<C<T>> {
    let n = truncation_order(g, q)?;
    let mut spec = HypSeriesSpec::terminating(a, b, c, d, e, f, q, n);
    let a2 = a * a;
    spec.g = g;
    spec.h = a2 * a2 * a2 * q * q / (b * c * d * e * f * g);
    eval_10phi9(&spec)
}

/// `R_n(z) = ₁₀W₉(a; κz, κ/z, d, e, f, q^{−n}, μqⁿ; q)` with `μ = a⁶q/(κ²def)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WilsonRnSpec<T: Real> {
    pub a: C<T>,
    pub kappa_argument: C<T>,
    pub d: C<T>,
    pub e: C<T>,
    pub f: C<T>,
    pub q: C<T>,
    pub n: usize,
}

impl<T: Real> WilsonRnSpec<T> {
    /// The family attached to classical parameters at scale `α`:
    /// `a = ε1 √(αp)`, `κ = ε1² p`, `(d, e, f) = αp/ε_j²` (`j = 2, 3, 4`), base `p²`.
    pub fn from_classical(eps: &[C<T>; 6], alpha: C<T>, p: C<T>, n: usize) -> Self {
        let ap = alpha * p;
        Self {
            a: eps[0] * ap.sqrt(),
            kappa_argument: eps[0] * eps[0] * p,
            d: ap / (eps[1] * eps[1]),
            e: ap / (eps[2] * eps[2]),
            f: ap / (eps[3] * eps[3]),
            q: p * p,
            n,
        }
    }

    pub fn series(&self, z: C<T>) -> HypSeriesSpec<T> {
        let k = self.kappa_argument;
        HypSeriesSpec::terminating(self.a, k * z, k / z, self.d, self.e, self.f, self.q, self.n)
    }

    /// `x_s = a² q^s / κ + κ / (a² q^s)`.
    pub fn pole(&self, s: i64) -> C<T> {
        joukowski(self.a * self.a * cpow(self.q, s) / self.kappa_argument)
    }

    /// Grid on which `x_s` are the nodes: `α' = a²/κ`, base `q`.
    pub fn pole_set(&self, indices: Vec<i64>) -> Result<PoleSet<T>> {
        let alpha = self.a * self.a / self.kappa_argument;
        let p = self.q.sqrt();
        PoleSet::new(crate::numerics::GridParams { alpha, q: self.q, p }, indices, Vec::new())
    }
}

pub fn wilson_rn<T: Real>(spec: &WilsonRnSpec<T>, z: C<T>) -> Result<C<T>> {
    let x = joukowski(z);
    for s in 1..=spec.n as i64 {
        let xs = spec.pole(s);
        let d = abs(x - xs);
        if d < 1e-6 * (1.0 + abs(xs)) {
            return Err(Error::PoleProximity {
                pole: format!("x{s}"),
                distance: d,
            });
        }
    }
    eval_10phi9(&spec.series(z))
}

/// Fit of `R_n` over `x_1..x_n` plus the decoys `x_0, x_{n+1}, x_{n+2}`.
#[derive(Clone, Debug)]
pub struct WilsonFit<T: Real> {
    pub report: FitReport<T>,
    /// Largest decoy coefficient relative to the largest coefficient.
    pub decoy_leakage: f64,
}

pub fn fit_wilson_rn<T: Real>(spec: &WilsonRnSpec<T>, ctx: &PrecisionContext) -> Result<WilsonFit<T>> {
    let n = spec.n as i64;
    let mut idx: Vec<i64> = (0..=n + 2).collect();
    if n == 0 {
        idx.retain(|&s| s != 1);
        idx.push(3);
    }
    let cand = spec.pole_set(idx)?;
    let g = |z: C<T>| wilson_rn(spec, z);
    let report = fit_partial_fractions(&g, &cand, true, ctx)?;
    let decoys: Vec<usize> = (0..cand.len())
        .filter(|&k| {
            let s = cand.indices()[k];
            s < 1 || s > n
        })
        .collect();
    let decoy_leakage = report.leakage(decoys);
    Ok(WilsonFit { report, decoy_leakage })
}

/// Outcome of [`check_kernel_and_shift`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelShiftReport<T: Real> {
    /// `‖ŴR_n‖` relative to the term scale, for `ε5/ε6 = ε1234 p^{2n+1}` and its inverse.
    pub kernel: [f64; 2],
    /// Constant `c` in `Ŵ1 R_n = c R_n⁺`.
    pub shift_constant: C<T>,
    /// Relative spread of `Ŵ1 R_n / R_n⁺` over the probes.
    pub shift_spread: f64,
    /// Relative spread of `Ŵ1⁺ Ŵ1 R_n / R_n⁺⁺`.
    pub double_shift_spread: f64,
}

impl<T: Real> KernelShiftReport<T> {
    pub fn worst(&self) -> f64 {
        self.kernel[0]
            .max(self.kernel[1])
            .max(self.shift_spread)
            .max(self.double_shift_spread)
    }
}

/// Worst `|v_i/v_0 − 1|`.
pub fn ratio_spread<T: Real>(num: &[C<T>], den: &[C<T>]) -> (C<T>, f64) {
    let r0 = num[0] / den[0];
    let spread = num
        .iter()
        .zip(den)
        .map(|(a, b)| abs(*a / *b / r0 - one()))
        .fold(0.0, f64::max);
    (r0, spread)
}

/// Series `R_n` at scale `α`.
fn series_at<T: Real>(params: &ClassicalParams<T>, alpha: C<T>, n: usize) -> impl Fn(C<T>) -> C<T> {
    let spec = WilsonRnSpec::from_classical(&params.eps, alpha, params.p, n);
    move |z| wilson_rn(&spec, z).unwrap_or_else(|_| C::new(T::nan(), T::nan()))
}

/// Parameters with `ε5 ε6` scaled by `s`.
fn with_e56_scaled<T: Real>(params: &ClassicalParams<T>, s: C<T>) -> Result<ClassicalParams<T>> {
    let mut e = params.eps;
    e[5] = e[5] * s;
    ClassicalParams::new(e, params.p)
}

pub fn check_kernel_and_shift<T: Real>(
    params: &ClassicalParams<T>,
    n: usize,
    zs: &[C<T>],
    ctx: &PrecisionContext,
) -> Result<KernelShiftReport<T>> {
    ctx.validate()?;
    let (p, e) = (params.p, params.eps);
    let alpha = params.alpha();
    let r = series_at(params, alpha, n);

    let e56 = e[4] * e[5];
    let t = e[0] * e[1] * e[2] * e[3] * cpow(p, 2 * n as i64 + 1);
    let mut kernel = [0.0; 2];
    for (slot, ratio) in [t, t.inv()].into_iter().enumerate() {
        let mut k = e;
        k[4] = (e56 * ratio).sqrt();
        k[5] = e56 / k[4];
        let w = hatted_operator(&ClassicalParams::new(k, p)?);
        for &z in zs {
            let (v, s) = w.apply_scaled(&r, z)?;
            kernel[slot] = f64::max(kernel[slot], abs(v) / s);
        }
    }

    let pp = p * p;
    let up = with_e56_scaled(params, pp)?;
    let r_up = series_at(params, alpha * pp, n);
    let r_up2 = series_at(params, alpha * pp * pp, n);
    let w1 = split_operators(params, ctx)?.w1.hatted;
    let w1_up = split_operators(&up, ctx)?.w1.hatted;
    let once = |z: C<T>| w1.apply(&r, z).unwrap_or_else(|_| C::new(T::nan(), T::nan()));
    let mut a = Vec::with_capacity(zs.len());
    let mut b = Vec::with_capacity(zs.len());
    let mut a2 = Vec::with_capacity(zs.len());
    let mut b2 = Vec::with_capacity(zs.len());
    for &z in zs {
        a.push(once(z));
        b.push(r_up(z));
        a2.push(w1_up.apply(once, z)?);
        b2.push(r_up2(z));
    }
    let (shift_constant, shift_spread) = ratio_spread(&a, &b);
    let (_, double_shift_spread) = ratio_spread(&a2, &b2);
    Ok(KernelShiftReport {
        kernel,
        shift_constant,
        shift_spread: nan_to_inf(shift_spread),
        double_shift_spread: nan_to_inf(double_shift_spread),
    })
}

fn nan_to_inf(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// `R_n^{series} / R_n^{recurrence}` at the probes: constant and spread.
pub fn series_vs_recurrence<T: Real>(
    params: &ClassicalParams<T>,
    n: usize,
    zs: &[C<T>],
    ctx: &PrecisionContext,
) -> Result<(C<T>, f64)> {
    let rec = solve_recurrence(n, params, ctx)?;
    let spec = WilsonRnSpec::from_classical(&params.eps, params.alpha(), params.p, n);
    let mut a = Vec::with_capacity(zs.len());
    let mut b = Vec::with_capacity(zs.len());
    for &z in zs {
        a.push(wilson_rn(&spec, z)?);
        b.push(rec.eval(z)?);
    }
    let (c, s) = ratio_spread(&a, &b);
    Ok((c, nan_to_inf(s)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{probe_points, qpochhammer};
    use num_complex::Complex;
    use proptest::prelude::*;
    use crate::dd::Dd;

    fn c(re: f64, im: f64) -> C<f64> {
        Complex::new(re, im)
    }

    fn params() -> ClassicalParams<f64> {
        ClassicalParams::new(
            [c(0.8, 0.1), c(1.1, -0.2), c(0.7, 0.3), c(1.2, 0.1), c(0.9, -0.1), c(1.05, 0.25)],
            c(0.62, 0.12),
        )
        .unwrap()
    }

    fn spec(n: usize) -> HypSeriesSpec<f64> {
        HypSeriesSpec::terminating(c(0.7, 0.2), c(0.5, 0.4), c(1.3, -0.2), c(0.4, 0.1), c(0.9, 0.6), c(-0.6, 0.3), c(0.45, 0.2), n)
    }

    #[test]
    fn trivial_orders() {
        assert_eq!(eval_10phi9(&spec(0)).unwrap(), one());
        let s = spec(1);
        let a2 = s.a * s.a;
        let q = s.q;
        let o = one::<f64>();
        let num = (o - a2 * q * q) * q * [a2, s.b, s.c, s.d, s.e, s.f, s.g, s.h].iter().fold(o, |acc, u| acc * (o - *u));
        let den = (o - a2) * [q, a2 * q / s.b, a2 * q / s.c, a2 * q / s.d, a2 * q / s.e, a2 * q / s.f, a2 * q / s.g, a2 * q / s.h]
            .iter()
            .fold(o, |acc, l| acc * (o - *l));
        let v = eval_10phi9(&s).unwrap();
        assert!(abs(v - (o + num / den)) < 1e-13 * abs(v));
    }

    #[test]
    fn n1_against_double_double() {
        let s = spec(1);
        let sd = HypSeriesSpec::<Dd>::terminating(
            crate::numerics::from_c64(s.a),
            crate::numerics::from_c64(s.b),
            crate::numerics::from_c64(s.c),
            crate::numerics::from_c64(s.d),
            crate::numerics::from_c64(s.e),
            crate::numerics::from_c64(s.f),
            crate::numerics::from_c64(s.q),
            1,
        );
        let hi = crate::numerics::to_c64(eval_10phi9_direct(&sd).unwrap());
        let lo = eval_10phi9(&s).unwrap();
        assert!(abs(hi - lo) < 1e-13 * abs(hi), "{hi} {lo}");
    }

    #[test]
    fn incremental_matches_direct() {
        for n in 0..=10 {
            let s = spec(n);
            assert!(s.defect() < 1e-13);
            let a = eval_10phi9(&s).unwrap();
            let b = eval_10phi9_direct(&s).unwrap();
            assert!(abs(a - b) <= 1e-12 * abs(b), "n={n}");
        }
    }

    #[test]
    fn balanced_wrapper_and_truncation() {
        let s = spec(4);
        let v = eval_10b9(s.a, s.b, s.c, s.d, s.e, s.f, s.g, s.q).unwrap();
        assert!(abs(v - eval_10phi9(&s).unwrap()) < 1e-13 * abs(v));
        assert_eq!(eval_10b9(s.a, s.b, s.c, s.d, s.e, s.f, one(), s.q).unwrap(), one());
        assert!(eval_10b9(s.a, s.b, s.c, s.d, s.e, s.f, c(2.5, 0.1), s.q).is_err());
    }

    #[test]
    fn vanishing_denominator_is_reported() {
        let mut s = spec(3);
        // a²q/b = q^{-1} makes (a²q/b; q)_k vanish at k = 2.
        s.b = s.a * s.a * s.q * s.q;
        assert_eq!(eval_10phi9(&s), Err(Error::SeriesDenominator(2)));
    }

    #[test]
    fn wilson_rn_symmetry_and_poles() {
        let ctx = PrecisionContext::default();
        let p = params();
        for n in 0..=4 {
            let w = WilsonRnSpec::from_classical(&p.eps, p.alpha(), p.p, n);
            for z in probe_points::<f64>(8) {
                let a = wilson_rn(&w, z).unwrap();
                assert!(abs(a - wilson_rn(&w, z.inv()).unwrap()) < 1e-11 * abs(a));
            }
            let fit = fit_wilson_rn(&w, &ctx).unwrap();
            assert!(fit.report.confirmed(&ctx), "n={n}: {}", fit.report);
            assert!(fit.decoy_leakage < ctx.fit_tolerance, "n={n}");
            assert!(abs(fit.report.pf.constant) > 1e-6);
            let g = p.grid().unwrap();
            for s in 1..=n as i64 {
                assert!(abs(w.pole(s) - g.x(s)) < 1e-12 * abs(g.x(s)));
            }
        }
    }

    #[test]
    fn branch_of_square_root_is_irrelevant() {
        let p = params();
        let w = WilsonRnSpec::from_classical(&p.eps, p.alpha(), p.p, 4);
        let m = WilsonRnSpec { a: -w.a, ..w };
        let z = c(0.55, 0.3);
        let a = wilson_rn(&w, z).unwrap();
        assert!(abs(a - wilson_rn(&m, z).unwrap()) < 1e-13 * abs(a));
    }

    #[test]
    fn series_is_recurrence_solution() {
        let ctx = PrecisionContext::default();
        for n in 0..=6 {
            let (k, spread) = series_vs_recurrence(&params(), n, &probe_points(8), &ctx).unwrap();
            assert!(spread < 1e-10, "n={n} spread={spread}");
            assert!(abs(k - one()) < 1e-9, "n={n} k={k}");
        }
    }

    #[test]
    fn kernel_and_shifted_action() {
        let ctx = PrecisionContext::default();
        for n in 0..=5 {
            let rep = check_kernel_and_shift(&params(), n, &probe_points(8), &ctx).unwrap();
            assert!(rep.worst() < 1e-10, "n={n} {rep:?}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn vwp_invariant_holds(n in 0usize..8, re in 0.3f64..1.2, im in -0.4f64..0.4) {
            let s = HypSeriesSpec::terminating(c(re, im), c(0.5, 0.4), c(1.3, -0.2), c(0.4, 0.1), c(0.9, 0.6), c(-0.6, 0.3), c(0.45, 0.2), n);
            prop_assert!(s.defect() < 1e-12);
            prop_assert!(s.validate(&PrecisionContext::default()).is_ok());
        }

        #[test]
        fn pochhammer_direct_is_product(k in 0usize..6) {
            let q = c(0.5, 0.2);
            let a = c(0.3, -0.7);
            let d = qpochhammer(a, q, k + 1) / qpochhammer(a, q, k);
            prop_assert!(abs(d - (one::<f64>() - a * cpow(q, k as i64))) < 1e-14);
        }
    }
}
