//! Rational functions of `x = z + 1/z` in partial-fraction form, and the
//! fitting procedure that measures expansion coefficients of a black-box
//! function over a candidate pole set.

use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, Lu};
use crate::numerics::{
    abs, cr, cx, grid_x, joukowski, joukowski_inverse, zero, GridParams, PrecisionContext, Real, C,
};

/// Black-box function of `z` handed to [`fit_partial_fractions`].
pub type SampleFn<'a, T> = dyn Fn(C<T>) -> Result<C<T>> + Sync + 'a;

/// Radius of the anchor samples used for the constant term.
pub const ANCHOR_RADIUS: f64 = 0.83;
/// Radial offset of each pole-anchored sample from the pole preimage.
const POLE_OFFSET: f64 = 1.35;
const VALIDATION_OFFSET: f64 = 1.2;
const GOLDEN_ANGLE: f64 = 2.399_963_229_728_653;
const VALIDATION_POINTS: usize = 8;
const MAX_ATTEMPTS: usize = 16;

/// Ordered set of distinct poles: grid indices `n` (pole at `x_n`) followed
/// by optional labelled x-values that are not on the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct PoleSet<T: Real> {
    pub grid: GridParams<T>,
    indices: Vec<i64>,
    extra: Vec<(String, C<T>)>,
}

impl<T: Real> PoleSet<T> {
    pub fn new(grid: GridParams<T>, mut indices: Vec<i64>, extra: Vec<(String, C<T>)>) -> Result<Self> {
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter("repeated grid index in pole set".into()));
        }
        let set = Self { grid, indices, extra };
        let xs = set.xs();
        for i in 0..xs.len() {
            for j in 0..i {
                let gap = abs(xs[i] - xs[j]);
                let scale = 1.0 + abs(xs[i]).max(abs(xs[j]));
                if gap < 1e-3 * scale {
                    return Err(Error::InvalidParameter(format!(
                        "poles {} and {} are only {gap:.2e} apart",
                        set.label(i),
                        set.label(j)
                    )));
                }
            }
        }
        Ok(set)
    }

    /// Grid poles `x_lo..=x_hi`.
    pub fn range(grid: GridParams<T>, lo: i64, hi: i64) -> Result<Self> {
        Self::new(grid, (lo..=hi).collect(), Vec::new())
    }

    pub fn indices(&self) -> &[i64] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len() + self.extra.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Pole locations in x, grid poles first.
    pub fn xs(&self) -> Vec<C<T>> {
        self.indices
            .iter()
            .map(|&n| grid_x(&self.grid, n))
            .chain(self.extra.iter().map(|(_, x)| *x))
            .collect()
    }

    pub fn label(&self, k: usize) -> String {
        if k < self.indices.len() {
            format!("x{}", self.indices[k])
        } else {
            self.extra[k - self.indices.len()].0.clone()
        }
    }

    /// Position of the grid pole `x_n`, if present.
    pub fn position_of(&self, n: i64) -> Option<usize> {
        self.indices.iter().position(|&m| m == n)
    }

    /// Position of a labelled pole (`"x3"`, `"y0"`, …).
    pub fn position_of_label(&self, label: &str) -> Option<usize> {
        (0..self.len()).find(|&k| self.label(k) == label)
    }
}

/// `c + Σ_k ξ_k / (x − x_k)` over a pole set.
#[derive(Clone, Debug, PartialEq)]
pub struct RationalPF<T: Real> {
    pub poles: PoleSet<T>,
    pub constant: C<T>,
    pub coeffs: Vec<C<T>>,
}

impl<T: Real> RationalPF<T> {
    pub fn new(poles: PoleSet<T>, constant: C<T>, coeffs: Vec<C<T>>) -> Result<Self> {
        if coeffs.len() != poles.len() {
            return Err(Error::InvalidParameter(format!(
                "{} coefficients for {} poles",
                coeffs.len(),
                poles.len()
            )));
        }
        Ok(Self {
            poles,
            constant,
            coeffs,
        })
    }

    pub fn eval(&self, z: C<T>) -> Result<C<T>> {
        eval_pf(self, z)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| abs(*c)).fold(abs(self.constant), f64::max)
    }
}

/// Evaluates `f` at `x(z)`, refusing points within `1e−6 (1 + |x_k|)` of a pole.
pub fn eval_pf<T: Real>(f: &RationalPF<T>, z: C<T>) -> Result<C<T>> {
    let x = joukowski(z);
    let mut acc = f.constant;
    for (k, (xk, xi)) in f.poles.xs().into_iter().zip(&f.coeffs).enumerate() {
        let d = x - xk;
        if abs(d) < 1e-6 * (1.0 + abs(xk)) {
            return Err(Error::PoleProximity {
                pole: f.poles.label(k),
                distance: abs(d),
            });
        }
        acc = acc + *xi / d;
    }
    Ok(acc)
}

/// Elementary function `χ_n = 1/(x − x_n)`.
pub fn chi<T: Real>(n: i64, grid: &GridParams<T>) -> Result<RationalPF<T>> {
    grid.check_nondegenerate(n..=n)?;
    let poles = PoleSet::new(*grid, vec![n], Vec::new())?;
    RationalPF::new(poles, zero(), vec![C::new(T::one(), T::zero())])
}

/// Direct evaluation of `1/(x(z) − x_n)` without the proximity guard, for
/// use inside operator applications.
pub fn chi_value<T: Real>(xn: C<T>, z: C<T>) -> C<T> {
    (joukowski(z) - xn).inv()
}

/// Outcome of a partial-fraction fit.
#[derive(Clone, Debug)]
pub struct FitReport<T: Real> {
    pub pf: RationalPF<T>,
    /// Max relative residual over the validation points.
    pub residual: f64,
    /// 1-norm condition number of the column-equilibrated sample system.
    pub conditioning: f64,
}

impl<T: Real> FitReport<T> {
    /// Membership hypothesis accepted at the context's fit tolerance.
    pub fn confirmed(&self, ctx: &PrecisionContext) -> bool {
        self.residual <= ctx.fit_tolerance
    }

    pub fn coeff_of(&self, n: i64) -> Option<C<T>> {
        self.pf.poles.position_of(n).map(|k| self.pf.coeffs[k])
    }

    pub fn coeff_of_label(&self, label: &str) -> Option<C<T>> {
        self.pf.poles.position_of_label(label).map(|k| self.pf.coeffs[k])
    }

    /// Largest `|ξ_k|` over the given positions, relative to the largest
    /// fitted coefficient (constant included).
    pub fn leakage(&self, positions: impl IntoIterator<Item = usize>) -> f64 {
        let scale = self.pf.max_abs_coeff();
        if scale == 0.0 {
            return 0.0;
        }
        positions
            .into_iter()
            .map(|k| abs(self.pf.coeffs[k]))
            .fold(0.0, f64::max)
            / scale
    }

    /// Leakage at every pole whose label is not in `expected`.
    pub fn leakage_outside(&self, expected: &[&str]) -> f64 {
        let pos: Vec<usize> = (0..self.pf.poles.len())
            .filter(|&k| !expected.contains(&self.pf.poles.label(k).as_str()))
            .collect();
        self.leakage(pos)
    }
}

impl<T: Real> fmt::Display for FitReport<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "fit residual {:.3e}, cond {:.3e}", self.residual, self.conditioning)
    }
}

fn polar<T: Real>(r: f64, theta: f64) -> C<T> {
    cx(r * theta.cos(), r * theta.sin())
}

/// Sample z-values: one near each pole preimage (pushed off radially and
/// rotated by the golden angle), one anchor for the constant, then the
/// validation points.
fn sample_points<T: Real>(xs: &[C<T>], allow_constant: bool, attempt: usize) -> Vec<C<T>> {
    let base = 0.3 + 1.1 * attempt as f64;
    let roots: Vec<C<T>> = xs.iter().map(|&x| joukowski_inverse(x)).collect();
    let near = |k: usize, offset: f64, turn: f64| -> C<T> {
        let zeta = roots[k];
        let r = abs(zeta);
        let rho = if r * offset <= 0.92 { offset } else { 1.0 / offset };
        zeta * polar::<T>(rho, base + turn + GOLDEN_ANGLE * k as f64)
    };
    let mut out = Vec::with_capacity(xs.len() + 1 + VALIDATION_POINTS);
    for k in 0..xs.len() {
        out.push(near(k, POLE_OFFSET, 0.0));
    }
    if allow_constant || xs.is_empty() {
        out.push(polar(ANCHOR_RADIUS, base + 0.5));
    }
    for j in 0..VALIDATION_POINTS {
        if xs.is_empty() || j % 4 == 3 {
            out.push(polar(ANCHOR_RADIUS, base + 0.9 + 1.7 * j as f64));
        } else {
            let k = (5 * j + 1) % xs.len();
            out.push(near(k, VALIDATION_OFFSET, 2.2 + 0.37 * j as f64));
        }
    }
    out
}

fn admissible<T: Real>(zs: &[C<T>], xs: &[C<T>]) -> bool {
    let sx: Vec<C<T>> = zs.iter().map(|&z| joukowski(z)).collect();
    for (i, (&z, &x)) in zs.iter().zip(&sx).enumerate() {
        let r = abs(z);
        if !(r > 1e-14 && r <= 0.97) {
            return false;
        }
        if xs.iter().any(|&xk| abs(x - xk) < 1e-2 * (1.0 + abs(xk))) {
            return false;
        }
        if sx[..i].iter().any(|&y| abs(x - y) < 1e-6 * (1.0 + abs(x))) {
            return false;
        }
    }
    true
}

/// Fits `g` as `c + Σ ξ_k/(x − x_k)` over `candidate` (constant only when
/// `allow_constant`), solving the square system on pole-anchored samples and
/// reporting the residual on eight further validation points.
///
/// A residual above `ctx.fit_tolerance` is a rejected hypothesis, not an
/// error. Errors are reserved for sample sets that cannot be made regular.
pub fn fit_partial_fractions<T: Real>(
    g: &SampleFn<'_, T>,
    candidate: &PoleSet<T>,
    allow_constant: bool,
    ctx: &PrecisionContext,
) -> Result<FitReport<T>> {
    let _ = ctx;
    let xs = candidate.xs();
    if xs.len() > 32 {
        return Err(Error::InvalidParameter(format!(
            "candidate pole set of size {} exceeds 32",
            xs.len()
        )));
    }
    let offset = usize::from(allow_constant);
    let m = xs.len() + offset;
    if m == 0 {
        return Err(Error::InvalidParameter("empty fit basis".into()));
    }
    let mut singular_seen = false;
    for attempt in 0..MAX_ATTEMPTS {
        let zs = sample_points(&xs, allow_constant, attempt);
        if !admissible(&zs, &xs) {
            continue;
        }
        let values: Result<Vec<C<T>>> = zs.iter().map(|&z| g(z)).collect();
        let Ok(values) = values else { continue };
        if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            continue;
        }
        let basis = |z: C<T>| -> Vec<C<T>> {
            let x = joukowski(z);
            let mut row = Vec::with_capacity(m);
            if allow_constant {
                row.push(cr::<T>(1.0));
            }
            row.extend(xs.iter().map(|&xk| (x - xk).inv()));
            row
        };
        let rows: Vec<Vec<C<T>>> = zs.iter().map(|&z| basis(z)).collect();
        let mut a = CMatrix::from_rows(&rows[..m]);
        let col_scale: Vec<f64> = (0..m)
            .map(|j| (0..m).map(|i| abs(a[(i, j)])).fold(0.0, f64::max).max(f64::MIN_POSITIVE))
            .collect();
        for i in 0..m {
            for j in 0..m {
                a[(i, j)] = a[(i, j)] / cr::<T>(col_scale[j]);
            }
        }
        let lu = match Lu::factor(&a) {
            Ok(lu) => lu,
            Err(e) => {
                if singular_seen {
                    return Err(e);
                }
                singular_seen = true;
                continue;
            }
        };
        let conditioning = lu.condition();
        let scaled = lu.solve(&values[..m]);
        let sol: Vec<C<T>> = scaled
            .iter()
            .zip(&col_scale)
            .map(|(v, s)| *v / cr::<T>(*s))
            .collect();
        let mut residual: f64 = 0.0;
        for (row, &gv) in rows[m..].iter().zip(&values[m..]) {
            let mut fit = zero::<T>();
            let mut mag = 0.0;
            for (b, c) in row.iter().zip(&sol) {
                let term = *b * *c;
                mag += abs(term);
                fit = fit + term;
            }
            let scale = abs(gv).max(mag);
            let err = abs(fit - gv);
            residual = residual.max(if scale > 0.0 { err / scale } else { err });
        }
        let (constant, coeffs) = if allow_constant {
            (sol[0], sol[1..].to_vec())
        } else {
            (zero(), sol)
        };
        return Ok(FitReport {
            pf: RationalPF::new(candidate.clone(), constant, coeffs)?,
            residual,
            conditioning,
        });
    }
    Err(Error::Sampling(m + VALIDATION_POINTS))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{cpow, qpochhammer};
    use num_complex::Complex;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C<f64> {
        Complex::new(re, im)
    }

    fn grid() -> GridParams<f64> {
        GridParams::new(c(0.8, 0.3), c(0.62, 0.18)).unwrap()
    }

    #[test]
    fn single_term_evaluation() {
        let g = grid();
        let f = chi(0, &g).unwrap();
        let target = g.x(0) + c(1.0, 0.0);
        let z = joukowski_inverse(target);
        assert!((eval_pf(&f, z).unwrap() - c(1.0, 0.0)).norm() < 1e-12);
        assert_eq!(f.coeffs, vec![c(1.0, 0.0)]);
    }

    #[test]
    fn chi_at_its_own_node_is_a_pole_error() {
        let g = grid();
        let f = chi(0, &g).unwrap();
        assert!(matches!(eval_pf(&f, g.alpha), Err(Error::PoleProximity { .. })));
    }

    #[test]
    fn evaluation_matches_common_denominator() {
        let g = grid();
        let poles = PoleSet::range(g, 0, 3).unwrap();
        let xi = vec![c(0.3, -1.0), c(1.2, 0.4), c(-0.7, 0.1), c(0.05, 2.0)];
        let f = RationalPF::new(poles.clone(), c(0.0, 0.0), xi.clone()).unwrap();
        let xs = poles.xs();
        // Q1/Q2 with Q2 = Π(x − x_k), Q1 = Σ ξ_k Π_{j≠k}(x − x_j)
        for z in [c(0.4, 0.5), c(-0.9, 0.1), c(0.2, -0.33)] {
            let x = joukowski(z);
            let q2: C<f64> = xs.iter().map(|xk| x - xk).product();
            let q1: C<f64> = (0..4)
                .map(|k| xi[k] * (0..4).filter(|&j| j != k).map(|j| x - xs[j]).product::<C<f64>>())
                .sum();
            let v = eval_pf(&f, z).unwrap();
            assert!((v - q1 / q2).norm() < 1e-12 * (1.0 + v.norm()));
        }
    }

    #[test]
    fn exact_member_is_recovered() {
        let ctx = PrecisionContext::default();
        let g = grid();
        let x2 = g.x(2);
        let f = move |z: C<f64>| Ok(chi_value(x2, z));
        let rep = fit_partial_fractions(&f, &PoleSet::range(g, 0, 3).unwrap(), false, &ctx).unwrap();
        assert!(rep.confirmed(&ctx), "{rep}");
        for (k, v) in rep.pf.coeffs.iter().enumerate() {
            let want = if k == 2 { 1.0 } else { 0.0 };
            assert!((v - c(want, 0.0)).norm() < 1e-9);
        }
    }

    #[test]
    fn polynomial_is_rejected() {
        let ctx = PrecisionContext::default();
        let g = grid();
        let f = |z: C<f64>| Ok(joukowski(z));
        let rep = fit_partial_fractions(&f, &PoleSet::range(g, 0, 0).unwrap(), false, &ctx).unwrap();
        assert!(rep.residual > 1e3 * ctx.fit_tolerance);
        assert!(!rep.confirmed(&ctx));
    }

    #[test]
    fn chi3_indicator() {
        let ctx = PrecisionContext::default();
        let g = grid();
        let f3 = chi(3, &g).unwrap();
        let f = |z: C<f64>| eval_pf(&f3, z);
        let rep = fit_partial_fractions(&f, &PoleSet::range(g, 0, 4).unwrap(), false, &ctx).unwrap();
        for (k, v) in rep.pf.coeffs.iter().enumerate() {
            let want = if k == 3 { 1.0 } else { 0.0 };
            assert!((v - c(want, 0.0)).norm() < 1e-9);
        }
    }

    #[test]
    fn extra_poles_and_constant() {
        let ctx = PrecisionContext::default();
        let g = grid();
        let p = g.p;
        let y0 = joukowski(p);
        let poles = PoleSet::new(g, vec![0, 1], vec![("y0".into(), y0)]).unwrap();
        let truth = RationalPF::new(poles.clone(), c(0.5, 0.5), vec![c(1.0, 0.0), c(0.0, 2.0), c(-1.5, 0.2)]).unwrap();
        let f = |z: C<f64>| eval_pf(&truth, z);
        let rep = fit_partial_fractions(&f, &poles, true, &ctx).unwrap();
        assert!(rep.confirmed(&ctx));
        assert!((rep.pf.constant - truth.constant).norm() < 1e-9);
        assert!((rep.coeff_of_label("y0").unwrap() - c(-1.5, 0.2)).norm() < 1e-9);
    }

    #[test]
    fn repeated_poles_rejected() {
        let g = grid();
        assert!(PoleSet::new(g, vec![1, 1], Vec::new()).is_err());
        let x1 = g.x(1);
        assert!(PoleSet::new(g, vec![1], vec![("dup".into(), x1)]).is_err());
    }

    #[test]
    fn pole_set_rejects_oversized_fit() {
        let ctx = PrecisionContext::default();
        let g = GridParams::new(c(0.9, 0.1), c(0.9, 0.0)).unwrap();
        let poles = PoleSet::range(g, 0, 33).unwrap();
        let f = |_z: C<f64>| Ok(c(1.0, 0.0));
        assert!(fit_partial_fractions(&f, &poles, false, &ctx).is_err());
    }

    #[test]
    fn fits_a_pochhammer_ratio() {
        // (az;q)_2 (a/z;q)_2 / ((bz;q)_2 (b/z;q)_2) is [2/2] with poles at x(b q^k)
        let ctx = PrecisionContext::default();
        let q = c(0.45, 0.1);
        let (a, b) = (c(0.7, 0.2), c(0.6, -0.3));
        let f = move |z: C<f64>| {
            Ok(qpochhammer(a * z, q, 2) * qpochhammer(a / z, q, 2)
                / (qpochhammer(b * z, q, 2) * qpochhammer(b / z, q, 2)))
        };
        let pgrid = GridParams { alpha: b, q, p: q.sqrt() };
        let rep = fit_partial_fractions(&f, &PoleSet::range(pgrid, 0, 1).unwrap(), true, &ctx).unwrap();
        assert!(rep.confirmed(&ctx), "{rep}");
        let rep = fit_partial_fractions(&f, &PoleSet::range(pgrid, 0, 0).unwrap(), true, &ctx).unwrap();
        assert!(!rep.confirmed(&ctx));
        let _ = cpow(q, 2);
    }

    fn arb_grid() -> impl Strategy<Value = GridParams<f64>> {
        (0.5f64..1.5, 0.0f64..std::f64::consts::TAU, 0.3f64..0.8, 0.0f64..std::f64::consts::TAU).prop_filter_map(
            "well separated grid",
            |(am, aa, qm, qa)| {
                let g = GridParams::new(Complex::from_polar(am, aa), Complex::from_polar(qm.sqrt(), qa / 2.0)).ok()?;
                (g.check_nondegenerate(-1..=12).is_ok() && g.min_separation(12) > 1e-3).then_some(g)
            },
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn roundtrip_recovers_coefficients(
            g in arb_grid(),
            npoles in 1usize..=8,
            seeds in prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 8),
        ) {
            let ctx = PrecisionContext::default();
            let poles = PoleSet::range(g, 0, npoles as i64 - 1).unwrap();
            let xi: Vec<C<f64>> = seeds[..npoles].iter().map(|&(r, i)| c(r, i)).collect();
            let truth = RationalPF::new(poles.clone(), c(0.0, 0.0), xi.clone()).unwrap();
            let f = |z: C<f64>| eval_pf(&truth, z);
            let rep = fit_partial_fractions(&f, &poles, false, &ctx).unwrap();
            prop_assert!(rep.confirmed(&ctx), "{}", rep);
            let scale = xi.iter().map(|v| v.norm()).fold(0.0, f64::max);
            for (a, b) in rep.pf.coeffs.iter().zip(&xi) {
                prop_assert!((a - b).norm() <= ctx.fit_tolerance * scale.max(1.0));
            }
            // symmetric in z <-> 1/z
            for z in [c(0.3, 0.4), c(-0.5, 0.2)] {
                let (u, v) = (eval_pf(&truth, z).unwrap(), eval_pf(&truth, z.inv()).unwrap());
                prop_assert!((u - v).norm() <= ctx.equality_tolerance * (1.0 + u.norm()));
            }
        }

        #[test]
        fn larger_candidate_set_leaks_nothing(
            g in arb_grid(),
            npoles in 1usize..=6,
            extra in 1usize..=3,
        ) {
            let ctx = PrecisionContext::default();
            let poles = PoleSet::range(g, 0, npoles as i64 - 1).unwrap();
            let xi: Vec<C<f64>> = (0..npoles).map(|k| c(1.0 + k as f64 * 0.3, 0.5 - k as f64 * 0.1)).collect();
            let truth = RationalPF::new(poles, c(0.0, 0.0), xi).unwrap();
            let f = |z: C<f64>| eval_pf(&truth, z);
            let bigger = PoleSet::range(g, 0, (npoles + extra) as i64 - 1).unwrap();
            let rep = fit_partial_fractions(&f, &bigger, false, &ctx).unwrap();
            prop_assert!(rep.confirmed(&ctx));
            prop_assert!(rep.leakage(npoles..npoles + extra) <= ctx.fit_tolerance);
        }
    }
}
