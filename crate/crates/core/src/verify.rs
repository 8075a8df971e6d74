//! Verification suites over seeded parameter draws.
//!
//! Every suite produces [`Row`]s ordered by draw, then `n`, then check
//! name; each row carries the full draw description so a failure can be
//! reproduced standalone.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use crate::dd::Dd;

use crate::classical::{check_classical, make_classical, minimal_combination, Form};
use crate::draws::Draw;
use crate::error::{Error, Result};
use crate::gevp::{
    check_split, fit_two_diag, finite_dim, gevp_residual, generic_pair, mobius_residual, ordinary_evp_residual,
    solve_recurrence, split_operators, two_diag_coeffs, OmegaBasisSpec,
};
use crate::heunop::{aw_limit, build_from_rspec, check_two_series, from_epsilon, gamma_closed, gauge_consistency_check};
use crate::hyp::{check_kernel_and_shift, series_vs_recurrence};
use crate::numerics::{abs, from_c64, probe_points, Backend, PrecisionContext, Real, C};
use crate::par::{map_indexed, Execution};
use crate::ratfun::{fit_partial_fractions, PoleSet};

/// Lower bound on the ordinary eigenvalue residual, as a multiple of the fit
/// tolerance.
pub const ORDINARY_EVP_FACTOR: f64 = 1e3;
/// Finite-dimensional eigen-residual bound.
pub const FINITE_DIM_TOLERANCE: f64 = 1e-6;
/// Allowed deviation of the degeneration rate from 4.
pub const AW_RATE_TOLERANCE: f64 = 0.8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Raising,
    GammaClosed,
    A1Correspondence,
    AwLimit,
    Classical,
    GevpSplit,
    GevpGeneric,
    SeriesMatch,
    FiniteDim,
}

impl Suite {
    pub const ALL: [Suite; 9] = [
        Suite::Raising,
        Suite::GammaClosed,
        Suite::A1Correspondence,
        Suite::AwLimit,
        Suite::Classical,
        Suite::GevpSplit,
        Suite::GevpGeneric,
        Suite::SeriesMatch,
        Suite::FiniteDim,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Raising => "raising",
            Suite::GammaClosed => "gamma-closed",
            Suite::A1Correspondence => "a1-correspondence",
            Suite::AwLimit => "aw-limit",
            Suite::Classical => "classical",
            Suite::GevpSplit => "gevp-split",
            Suite::GevpGeneric => "gevp-generic",
            Suite::SeriesMatch => "series-match",
            Suite::FiniteDim => "finite-dim",
        }
    }

    pub fn default_draws(self) -> usize {
        match self {
            Suite::Raising | Suite::GammaClosed => 20,
            Suite::FiniteDim => 5,
            _ => 10,
        }
    }

    pub fn default_n_max(self) -> usize {
        match self {
            Suite::Raising | Suite::GammaClosed | Suite::Classical => 8,
            Suite::A1Correspondence | Suite::GevpGeneric => 5,
            Suite::AwLimit => 0,
            Suite::GevpSplit | Suite::SeriesMatch | Suite::FiniteDim => 6,
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Parses a suite name; `all` expands to every suite.
pub fn parse_suites(name: &str) -> Result<Vec<Suite>> {
    if name == "all" {
        return Ok(Suite::ALL.to_vec());
    }
    name.parse().map(|s| vec![s])
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Unknown {
                kind: "suite",
                name: s.to_string(),
            })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Overrides the suite's default number of draws.
    pub draws: Option<usize>,
    /// Overrides the suite's default largest `n`.
    pub n_max: Option<usize>,
    pub ctx: PrecisionContext,
    pub exec: Execution,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            draws: None,
            n_max: None,
            ctx: PrecisionContext::default(),
            exec: Execution::default(),
        }
    }
}

/// One check outcome. For lower-bound checks (`check` ending in
/// `-lower-bound`) the row passes when `residual > threshold`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Row {
    pub suite: String,
    pub check: String,
    pub draw: usize,
    pub n: Option<usize>,
    pub residual: f64,
    pub threshold: f64,
    pub pass: bool,
    pub params: String,
}

struct Ctx<'a> {
    suite: Suite,
    draw: &'a Draw,
    params: String,
    rows: Vec<Row>,
}

impl<'a> Ctx<'a> {
    fn new(suite: Suite, draw: &'a Draw) -> Self {
        Self {
            suite,
            draw,
            params: draw.describe(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, check: &str, n: Option<usize>, residual: f64, threshold: f64) {
        let pass = residual.is_finite() && residual <= threshold;
        self.push_raw(check, n, residual, threshold, pass);
    }

    fn push_lower(&mut self, check: &str, n: Option<usize>, residual: f64, threshold: f64) {
        let pass = residual.is_finite() && residual > threshold;
        self.push_raw(check, n, residual, threshold, pass);
    }

    fn push_raw(&mut self, check: &str, n: Option<usize>, residual: f64, threshold: f64, pass: bool) {
        self.rows.push(Row {
            suite: self.suite.name().to_string(),
            check: check.to_string(),
            draw: self.draw.index,
            n,
            residual,
            threshold,
            pass,
            params: self.params.clone(),
        });
    }

    /// Records `r` or, on error, a failing row naming the error.
    fn record(&mut self, check: &str, n: Option<usize>, r: Result<f64>, threshold: f64) {
        match r {
            Ok(v) => self.push(check, n, v, threshold),
            Err(e) => {
                let name = format!("{check} [error: {e}]");
                self.push_raw(&name, n, f64::INFINITY, threshold, false);
            }
        }
    }
}

/// Runs one suite; rows are ordered by draw index.
pub fn run_suite(suite: Suite, cfg: &SuiteConfig) -> Result<Vec<Row>> {
    cfg.ctx.validate()?;
    let count = cfg.draws.unwrap_or(suite.default_draws());
    let n_max = cfg.n_max.unwrap_or(suite.default_n_max());
    let draws = Draw::batch(cfg.seed, count)?;
    let backend = cfg.ctx.backend()?;
    let per_draw = map_indexed(draws.len(), cfg.exec, |i| match backend {
        Backend::Binary64 => run_draw::<f64>(suite, &draws[i], n_max, &cfg.ctx),
        Backend::DoubleDouble => run_draw::<Dd>(suite, &draws[i], n_max, &cfg.ctx),
    });
    Ok(per_draw.into_iter().flatten().collect())
}

/// Runs several suites in order.
pub fn run_suites(suites: &[Suite], cfg: &SuiteConfig) -> Result<Vec<Row>> {
    let mut out = Vec::new();
    for s in suites {
        out.extend(run_suite(*s, cfg)?);
    }
    Ok(out)
}

fn run_draw<T: Real>(suite: Suite, draw: &Draw, n_max: usize, ctx: &PrecisionContext) -> Vec<Row> {
    let mut c = Ctx::new(suite, draw);
    let zs = probe_points::<T>(8);
    if let Err(e) = match suite {
        Suite::Raising => raising::<T>(&mut c, n_max, ctx),
        Suite::GammaClosed => gamma::<T>(&mut c, n_max, ctx),
        Suite::A1Correspondence => a1::<T>(&mut c, n_max, &zs, ctx),
        Suite::AwLimit => aw::<T>(&mut c, ctx),
        Suite::Classical => classical::<T>(&mut c, n_max, ctx),
        Suite::GevpSplit => split::<T>(&mut c, n_max, &zs, ctx),
        Suite::GevpGeneric => generic::<T>(&mut c, n_max, &zs, ctx),
        Suite::SeriesMatch => series::<T>(&mut c, n_max, &zs, ctx),
        Suite::FiniteDim => finite::<T>(&mut c, n_max, &zs, ctx),
    } {
        let name = format!("setup [error: {e}]");
        c.push_raw(&name, None, f64::INFINITY, 0.0, false);
    }
    c.rows
}

fn raising<T: Real>(c: &mut Ctx, n_max: usize, ctx: &PrecisionContext) -> Result<()> {
    let grid = c.draw.grid::<T>()?;
    let w = build_from_rspec(&c.draw.rspec::<T>(), &grid, ctx)?;
    for n in 0..=n_max {
        let ni = n as i64;
        // two decoys above the expected top pole
        let cand = PoleSet::range(grid, 0, ni + 3)?;
        let xn = grid.x(ni);
        let f = |z: C<T>| w.apply_chi(xn, z);
        match fit_partial_fractions(&f, &cand, false, ctx) {
            Ok(rep) => {
                let expected = [0, ni - 1, ni, ni + 1];
                let spurious: Vec<usize> = (0..cand.len())
                    .filter(|k| !expected.contains(&cand.indices()[*k]))
                    .collect();
                c.push("fit-residual", Some(n), rep.residual, ctx.fit_tolerance);
                c.push("spurious-poles", Some(n), rep.leakage(spurious), ctx.fit_tolerance);
            }
            Err(e) => c.record("fit-residual", Some(n), Err(e), ctx.fit_tolerance),
        }
    }
    Ok(())
}

fn gamma<T: Real>(c: &mut Ctx, n_max: usize, ctx: &PrecisionContext) -> Result<()> {
    let eps = c.draw.epsilon::<T>()?;
    let w = from_epsilon(&eps, ctx)?;
    let g = eps.grid();
    for n in 0..=n_max {
        let r = (|| {
            let ni = n as i64;
            let xn = g.x(ni);
            let f = |z: C<T>| w.apply_chi(xn, z);
            let rep = fit_partial_fractions(&f, &PoleSet::range(g, 0, ni + 1)?, false, ctx)?;
            let gam = gamma_closed(n, &eps)?;
            let mut want = vec![C::new(T::zero(), T::zero()); n + 2];
            want[0] = want[0] + gam[0];
            if n >= 1 {
                want[n - 1] = want[n - 1] + gam[1];
            }
            want[n] = want[n] + gam[2];
            want[n + 1] = want[n + 1] + gam[3];
            let scale = want.iter().map(|v| abs(*v)).fold(0.0, f64::max);
            let dev = rep
                .pf
                .coeffs
                .iter()
                .zip(&want)
                .map(|(a, b)| abs(*a - *b))
                .fold(0.0, f64::max);
            Ok(dev / scale)
        })();
        c.record("closed-vs-fit", Some(n), r, ctx.equality_tolerance);
    }
    Ok(())
}

fn a1<T: Real>(c: &mut Ctx, n_max: usize, zs: &[C<T>], ctx: &PrecisionContext) -> Result<()> {
    let eps = c.draw.epsilon::<T>()?;
    let tol = ctx.equality_tolerance;
    c.record("gauge-identity", None, gauge_consistency_check(&eps, zs, ctx).map(|r| r.worst()), tol);
    for k in 0..=n_max {
        for on_x in [true, false] {
            let tag = if on_x { "x" } else { "y" };
            match check_two_series(&eps, k, on_x, false, ctx) {
                Ok(f) => {
                    c.push(&format!("two-series-{tag}-residual"), Some(k), f.membership.residual, tol);
                    c.push(&format!("two-series-{tag}-leakage"), Some(k), f.leakage, tol);
                }
                Err(e) => c.record(&format!("two-series-{tag}-residual"), Some(k), Err(e), tol),
            }
        }
        let r = check_two_series(&eps, k, true, true, ctx).map(|f| f.membership.residual);
        c.record("transported-x-residual", Some(k), r, tol);
    }
    Ok(())
}

fn aw<T: Real>(c: &mut Ctx, ctx: &PrecisionContext) -> Result<()> {
    let e: [C<T>; 6] = std::array::from_fn(|k| from_c64(c.draw.eps[k]));
    let (d7, d8): (C<T>, C<T>) = (from_c64(c.draw.eps[6]), from_c64(c.draw.eps[7]));
    let p = c.draw.p::<T>();
    let a = aw_limit(&e, d7, d8, p, 100.0, ctx)?;
    let b = aw_limit(&e, d7, d8, p, 200.0, ctx)?;
    let worst = probe_points::<T>(6)
        .into_iter()
        .map(|z| (a.deviation(z) / b.deviation(z) - 4.0).abs())
        .fold(0.0, f64::max);
    c.push("rate-deviation-from-4", None, worst, AW_RATE_TOLERANCE);
    Ok(())
}

fn classical<T: Real>(c: &mut Ctx, n_max: usize, ctx: &PrecisionContext) -> Result<()> {
    let params = c.draw.classical::<T>()?;
    let eta0 = from_c64(c.draw.eta0);
    let w = make_classical(&params, eta0, ctx)?;
    c.push("gauge-form", None, w.gauge_residual, ctx.equality_tolerance);
    for form in [Form::SkipPole, Form::Hatted] {
        let tag = match form {
            Form::SkipPole => "skip-pole",
            Form::Hatted => "hatted",
        };
        match check_classical(w.form(form), &w.grid, n_max, form, ctx) {
            Ok(chk) => {
                for r in chk.rows {
                    c.push(&format!("{tag}-residual"), Some(r.n), r.residual, ctx.fit_tolerance);
                    c.push(&format!("{tag}-x1-leakage"), Some(r.n), r.x1_leakage, ctx.fit_tolerance);
                }
            }
            Err(e) => c.record(&format!("{tag}-residual"), None, Err(e), ctx.fit_tolerance),
        }
    }
    let other = make_classical(&c.draw.delta::<T>()?, eta0, ctx)?;
    c.record(
        "minimal-leakage",
        None,
        minimal_combination(&w, &other, ctx).map(|m| m.leakage),
        ctx.equality_tolerance,
    );
    Ok(())
}

fn split<T: Real>(c: &mut Ctx, n_max: usize, zs: &[C<T>], ctx: &PrecisionContext) -> Result<()> {
    let params = c.draw.classical::<T>()?;
    let tol = ctx.equality_tolerance;
    let pair = split_operators(&params, ctx)?;
    match check_split(&pair, zs, ctx) {
        Ok(s) => {
            c.push("split-equals-w", None, s.split_residual, tol);
            c.push("eps56-independence", None, s.independence, tol);
            c.push("w2-minimal", None, s.w2_leakage, tol);
        }
        Err(e) => c.record("split-equals-w", None, Err(e), tol),
    }
    let basis = OmegaBasisSpec::classical(&params)?;
    let (tau, rho) = c.draw.mobius::<T>();
    let w = make_classical(&params, from_c64(c.draw.eta0), ctx)?;
    for n in 0..=n_max {
        let fit = (|| {
            let t = two_diag_coeffs(n, &params)?;
            let mut worst: f64 = 0.0;
            for (op, mu, nu) in [(&pair.w1.hatted, t.mu1, t.nu1), (&pair.w2.hatted, t.mu2, t.nu2)] {
                let f = fit_two_diag(op, n, &basis, zs)?;
                let s = abs(mu).max(abs(nu));
                worst = worst.max(f.residual).max(abs(f.mu - mu) / s).max(abs(f.nu - nu) / s);
            }
            Ok(worst)
        })();
        c.record("two-diagonal", Some(n), fit, tol);
        match solve_recurrence(n, &params, ctx) {
            Ok(e) => {
                let r = gevp_residual(&pair.w1.hatted, &pair.w2.hatted, e.lambda, |z| e.eval(z), zs);
                c.record("gevp-residual", Some(n), r, tol);
                let m = mobius_residual(&pair.w1.hatted, &pair.w2.hatted, e.lambda, tau, rho, |z| e.eval(z), zs);
                c.record("mobius-residual", Some(n), m, tol);
            }
            Err(e) => c.record("gevp-residual", Some(n), Err(e), tol),
        }
        if n >= 1 {
            let xi: Vec<C<T>> = (0..n).map(|k| from_c64(c.draw.xi[k % 9])).collect();
            let bound = ORDINARY_EVP_FACTOR * ctx.fit_tolerance;
            match ordinary_evp_residual(&w, &xi, from_c64(c.draw.xi[8]), zs) {
                Ok((_, r)) => c.push_lower("ordinary-evp-lower-bound", Some(n), r, bound),
                Err(e) => c.record("ordinary-evp-lower-bound", Some(n), Err(e), bound),
            }
        }
    }
    Ok(())
}

fn generic<T: Real>(c: &mut Ctx, n_max: usize, zs: &[C<T>], ctx: &PrecisionContext) -> Result<()> {
    let (e, d) = (c.draw.classical::<T>()?, c.draw.delta::<T>()?);
    let rep = generic_pair(&e, &d, n_max, zs, ctx)?;
    for r in rep.rows {
        c.push("two-diagonal", Some(r.n), r.two_diag, ctx.equality_tolerance);
        c.push("gevp-residual", Some(r.n), r.gevp_residual, ctx.equality_tolerance);
    }
    Ok(())
}

fn series<T: Real>(c: &mut Ctx, n_max: usize, zs: &[C<T>], ctx: &PrecisionContext) -> Result<()> {
    let params = c.draw.classical::<T>()?;
    let tol = ctx.equality_tolerance;
    for n in 0..=n_max {
        c.record("series-ratio-spread", Some(n), series_vs_recurrence(&params, n, zs, ctx).map(|r| r.1), tol);
        match check_kernel_and_shift(&params, n, zs, ctx) {
            Ok(k) => {
                c.push("kernel-branch-direct", Some(n), k.kernel[0], tol);
                c.push("kernel-branch-inverse", Some(n), k.kernel[1], tol);
                c.push("shift-ratio-spread", Some(n), k.shift_spread, tol);
                c.push("double-shift-ratio-spread", Some(n), k.double_shift_spread, tol);
            }
            Err(e) => c.record("kernel-branch-direct", Some(n), Err(e), tol),
        }
    }
    Ok(())
}

fn finite<T: Real>(c: &mut Ctx, n_max: usize, zs: &[C<T>], ctx: &PrecisionContext) -> Result<()> {
    for big_n in 0..=n_max.min(12) {
        let r = c.draw.truncated::<T>(big_n).and_then(|e| finite_dim(big_n, &e, zs, ctx));
        match r {
            Ok(pr) => {
                c.push("eigen-residual", Some(big_n), pr.worst_residual(), FINITE_DIM_TOLERANCE);
                c.push("truncation", Some(big_n), pr.truncation, ctx.equality_tolerance);
                // flagged, never failed
                let smallest = pr
                    .eigenpairs
                    .iter()
                    .map(|e| {
                        let m = e.v.iter().map(|v| abs(*v)).fold(0.0, f64::max);
                        e.v.iter().map(|v| abs(*v)).fold(f64::INFINITY, f64::min) / m
                    })
                    .fold(f64::INFINITY, f64::min);
                let name = if pr.small_components { "min-component-flagged" } else { "min-component" };
                c.push_raw(name, Some(big_n), smallest, 1e-10, true);
            }
            Err(e) => c.record("eigen-residual", Some(big_n), Err(e), FINITE_DIM_TOLERANCE),
        }
    }
    Ok(())
}
