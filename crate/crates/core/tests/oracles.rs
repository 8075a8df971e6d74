//! Frozen reference values.
//!
//! Values marked "40-digit reference" were computed independently with
//! arbitrary-precision arithmetic from the exact binary inputs and are
//! split into `hi + lo` pairs so the double-double backend can be held to
//! them. The rest were produced by this crate at 31 digits and are each
//! cross-checked below by an independent route (fits, recurrences).

use num_complex::Complex;
use twofloat::TwoFloat;

use ratheun::classical::ClassicalParams;
use ratheun::gevp::{complete_truncated, finite_dim, gevp_residual, solve_recurrence, split_operators, two_diag_coeffs};
use ratheun::heunop::{from_epsilon, gamma_closed};
use ratheun::hyp::{eval_10phi9, wilson_rn, HypSeriesSpec, WilsonRnSpec};
use ratheun::numerics::{abs, elementary_symmetric, grid_x, grid_y, probe_points, qpochhammer, to_c64};
use ratheun::ratfun::{fit_partial_fractions, PoleSet};
use ratheun::{Dd, EpsilonParams, GridParams, PrecisionContext, Real, C};

type C64 = Complex<f64>;

fn c<T: Real>(re: f64, im: f64) -> C<T> {
    Complex::new(T::lit(re), T::lit(im))
}

fn dd(hi: f64, lo: f64) -> Dd {
    Dd(TwoFloat::new_add(hi, lo))
}

fn rel<T: Real>(got: C<T>, want: C<T>) -> f64 {
    abs(got - want) / abs(want)
}

const EPS8: [(f64, f64); 8] = [
    (0.9, 0.2),
    (1.1, -0.3),
    (0.8, 0.1),
    (1.2, 0.4),
    (0.7, -0.2),
    (1.05, 0.15),
    (0.95, -0.1),
    (1.15, 0.05),
];

fn eps8<T: Real>() -> EpsilonParams<T> {
    EpsilonParams::new(EPS8.map(|(a, b)| c(a, b)), c(0.9, -0.2), c(0.3, 0.1), c(0.6, 0.1)).unwrap()
}

fn classical<T: Real>() -> ClassicalParams<T> {
    let e: [C<T>; 6] = std::array::from_fn(|k| c(EPS8[k].0, EPS8[k].1));
    ClassicalParams::new(e, c(0.6, 0.1)).unwrap()
}

/// Relative distance between two value lists, scaled by the largest entry.
fn list_dev<T: Real>(got: &[C<T>], want: &[C64]) -> f64 {
    let scale = want.iter().map(|w| w.norm()).fold(0.0, f64::max);
    got.iter()
        .zip(want)
        .map(|(g, w)| (to_c64(*g) - w).norm())
        .fold(0.0, f64::max)
        / scale
}

#[test]
fn pochhammer_reference() {
    // 40-digit reference
    let want = Complex::new(dd(0.373770463850567, -6.638884909039412e-18), dd(-0.305121966281944, -2.416969581578421e-17));
    let got = qpochhammer(c::<Dd>(0.3, 0.4), c(0.5, -0.2), 5);
    assert!(rel(got, want) < 1e-30, "{:e}", rel(got, want));
    let got = qpochhammer(c::<f64>(0.3, 0.4), c(0.5, -0.2), 5);
    assert!(rel(got, to_c64(want)) < 1e-15);
    assert_eq!(qpochhammer(c::<f64>(0.5, 0.0), c(0.25, 0.0), 3), c(0.423828125, 0.0));
}

#[test]
fn grid_reference() {
    // 40-digit references; q is p² of the binary p = 0.6, not binary 0.36
    let g = GridParams::<Dd>::new(c(0.7, 0.0), c(0.6, 0.0)).unwrap();
    let want = Complex::new(dd(11.113647689594359, -2.0772754773172099e-16), Dd::new(0.0));
    assert!(rel(grid_x(&g, 2), want) < 1e-30, "{:e}", rel(grid_x(&g, 2), want));
    let want = Complex::new(dd(35.75044444590765, -1.4177446241192774e-15), Dd::new(0.0));
    assert!(rel(grid_y(c::<Dd>(0.6, 0.0), 3), want) < 1e-30);
}

#[test]
fn elementary_symmetric_reference() {
    // 40-digit reference of the 70-term sum
    let vals: Vec<C<f64>> = [(0.3, 0.2), (-1.1, 0.5), (0.9, -0.4), (0.25, 0.75), (-0.6, -0.1), (1.3, 0.0), (0.05, -0.95), (-0.45, 0.35)]
        .iter()
        .map(|&(a, b)| c(a, b))
        .collect();
    let want = c(-0.7171, 0.172);
    assert!(rel(elementary_symmetric(&vals, 4).unwrap(), want) < 1e-14);
}

#[test]
fn very_well_poised_series_reference() {
    // 40-digit reference, n = 3
    let want = Complex::new(dd(1.020261753230138, 1.0232401655641175e-16), dd(0.010028045917413792, 6.662241106068428e-19));
    let s = HypSeriesSpec::<Dd>::terminating(c(0.8, 0.3), c(1.1, -0.2), c(0.7, 0.5), c(-0.9, 0.4), c(1.3, 0.1), c(0.6, -0.8), c(0.5, 0.3), 3);
    let got = eval_10phi9(&s).unwrap();
    assert!(rel(got, want) < 1e-29, "{:e}", rel(got, want));
}

const GAMMA_N3: [C64; 4] = [
    C64::new(0.00000007600036631844676, -0.00000044411659244511143),
    C64::new(-2.45489593433597, -0.3871910352057706),
    C64::new(26.896430997953292, -7.2886193205818195),
    C64::new(-44.44782918069682, 32.28861336861677),
];

#[test]
fn gamma_reference_and_fit() {
    assert!(list_dev(&gamma_closed(3, &eps8::<f64>()).unwrap(), &GAMMA_N3) < 1e-13);
    assert!(list_dev(&gamma_closed(3, &eps8::<Dd>()).unwrap(), &GAMMA_N3) < 1e-15);

    // the frozen values are the coefficients of W χ3 on χ0, χ2, χ3, χ4
    let ctx = PrecisionContext::with_precision(30).unwrap();
    let eps = eps8::<Dd>();
    let w = from_epsilon(&eps, &ctx).unwrap();
    let g = eps.grid();
    let xn = g.x(3);
    let f = |z: C<Dd>| w.apply_chi(xn, z);
    let rep = fit_partial_fractions(&f, &PoleSet::range(g, 0, 4).unwrap(), false, &ctx).unwrap();
    assert!(rep.residual < 1e-20, "{}", rep);
    let fitted = [rep.coeff_of(0).unwrap(), rep.coeff_of(2).unwrap(), rep.coeff_of(3).unwrap(), rep.coeff_of(4).unwrap()];
    assert!(list_dev(&fitted, &GAMMA_N3) < 1e-15);
    assert!(abs(rep.coeff_of(1).unwrap()) < 1e-20 * 60.0);
}

#[test]
fn two_diagonal_reference() {
    let want = [
        C64::new(1.7489100735176168, -1.989639581953512),
        C64::new(-1.1522215120724888, 2.1015569312214746),
        C64::new(0.2218788658821425, 0.08591638170033097),
        C64::new(-0.2145126224610811, 0.024854566555676545),
    ];
    let t = two_diag_coeffs(2, &classical::<Dd>()).unwrap();
    assert!(list_dev(&[t.mu1, t.nu1, t.mu2, t.nu2], &want) < 1e-15);
    let t = two_diag_coeffs(2, &classical::<f64>()).unwrap();
    assert!(list_dev(&[t.mu1, t.nu1, t.mu2, t.nu2], &want) < 1e-13);
}

#[test]
fn recurrence_and_series_reference() {
    let ctx = PrecisionContext::with_precision(30).unwrap();
    let params = classical::<Dd>();
    let e = solve_recurrence(2, &params, &ctx).unwrap();
    let want_a = [
        C64::new(1.0, 0.0),
        C64::new(0.4348351188351633, 0.2812873306264143),
        C64::new(-0.46779936966644586, 0.8996858627262652),
    ];
    assert!(list_dev(&e.a, &want_a) < 1e-15);
    assert!((to_c64(e.lambda) - C64::new(3.8349484736240287, -10.452209901083444)).norm() < 1e-14 * 11.2);

    // the series form at one point, and agreement with the recurrence form
    let z = c::<Dd>(0.5, 0.3);
    let spec = WilsonRnSpec::from_classical(&params.eps, params.alpha(), params.p, 2);
    let r = wilson_rn(&spec, z).unwrap();
    assert!((to_c64(r) - C64::new(1.1751029520842864, 0.2322078688726674)).norm() < 1e-15);
    assert!(rel(e.eval(z).unwrap(), r) < 1e-28);

    // and it solves the generalized problem
    let pair = split_operators(&params, &ctx).unwrap();
    let res = gevp_residual(&pair.w1.hatted, &pair.w2.hatted, e.lambda, |v| wilson_rn(&spec, v), &probe_points(8)).unwrap();
    assert!(res < 1e-28, "{res:e}");
}

#[test]
fn finite_dim_reference() {
    let ctx = PrecisionContext::with_precision(30).unwrap();
    let free: [C<Dd>; 6] = std::array::from_fn(|k| c(EPS8[k].0, EPS8[k].1));
    let eps = complete_truncated(2, c(0.8, 0.3), free, c(1.0, 0.0), c(0.0, 0.0), c(0.6, 0.2)).unwrap();
    assert!((to_c64(eps.eps[0]) - C64::new(0.16286687654504872, 0.24481343810244596)).norm() < 1e-15);
    assert!((to_c64(eps.eps[7]) - C64::new(1.9652623976746053, -5.190682630814251)).norm() < 1e-14);
    let pr = finite_dim(2, &eps, &probe_points(8), &ctx).unwrap();
    let want = [
        C64::new(4.463009488532933, -0.41118833326631377),
        C64::new(3.4490975142783067, -0.5622905263780424),
        C64::new(-1.3524456844247976, -1.2941594566117665),
    ];
    assert_eq!(pr.eigenpairs.len(), 3);
    for w in want {
        let nearest = pr.eigenpairs.iter().map(|e| (to_c64(e.lambda) - w).norm()).fold(f64::INFINITY, f64::min);
        assert!(nearest < 1e-14 * w.norm(), "{w}");
    }
    assert!(pr.worst_residual() < 1e-22);
}
