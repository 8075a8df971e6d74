//! Seeded random parameter draws for the verification suites.
//!
//! Draw `i` of seed `s` comes from a ChaCha8 generator seeded with `s` on
//! stream `i`, so draws are independent of each other and of the order in
//! which they are produced. Values are generated in `f64` and converted to
//! the working scalar, which keeps double-double runs on the same
//! parameters.

use std::f64::consts::TAU;
use std::fmt::Write as _;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::classical::ClassicalParams;
use crate::error::{Error, Result};
use crate::gevp::{complete_truncated, two_diag_coeffs};
use crate::heunop::gamma_closed;
use crate::numerics::{from_c64, grid_y, EpsilonParams, GridParams, Real, C};

/// Smallest admissible distance between two grid points.
pub const MIN_SEPARATION: f64 = 1e-3;
/// Largest grid index checked for collisions.
pub const GRID_SPAN: i64 = 12;
/// Attempts before a seed/index pair is declared unusable.
pub const MAX_ATTEMPTS: usize = 1000;

type C64 = Complex<f64>;

/// One parameter draw, in `f64`.
#[derive(Clone, Debug, PartialEq)]
pub struct Draw {
    pub seed: u64,
    pub index: usize,
    /// Rejected candidates before this one was accepted.
    pub rejected: usize,
    pub p: C64,
    pub eps: [C64; 8],
    pub eta0: C64,
    pub eta_tilde0: C64,
    /// Scale of the interpolation grid and target `α` of truncated sets.
    pub alpha: C64,
    pub xi: [C64; 9],
    /// `δ = (ε1, ε2 s1, ε3 s2, ε4 s3, ε5/(s1 s2), ε6/s3)`.
    pub shifts: [C64; 3],
    /// `(τ1, τ2, ρ1, ρ2)` of a Möbius map.
    pub mobius: [C64; 4],
}

fn polar(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> C64 {
    let r = rng.gen_range(lo..hi);
    let th = rng.gen_range(0.0..TAU);
    Complex::from_polar(r, th)
}

fn fmt_c(out: &mut String, v: C64) {
    let _ = write!(out, "{}{:+}j", v.re, v.im);
}

fn fmt_list(out: &mut String, name: &str, vs: &[C64]) {
    let _ = write!(out, " {name}=[");
    for (k, v) in vs.iter().enumerate() {
        if k > 0 {
            out.push(',');
        }
        fmt_c(out, *v);
    }
    out.push(']');
}

impl Draw {
    pub fn generate(seed: u64, index: usize) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index as u64);
        for rejected in 0..MAX_ATTEMPTS {
            let q_abs: f64 = rng.gen_range(0.3..0.8);
            let p = Complex::from_polar(q_abs.sqrt(), rng.gen_range(0.0..TAU));
            let eps = std::array::from_fn(|_| polar(&mut rng, 0.5, 1.5));
            let eta0 = polar(&mut rng, 0.5, 1.5);
            let eta_tilde0 = polar(&mut rng, 0.5, 1.5);
            let alpha = polar(&mut rng, 0.5, 1.5);
            let xi = std::array::from_fn(|_| Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            let shifts = std::array::from_fn(|_| polar(&mut rng, 0.7, 1.3));
            let mobius = std::array::from_fn(|_| polar(&mut rng, 0.5, 1.5));
            let d = Self {
                seed,
                index,
                rejected,
                p,
                eps,
                eta0,
                eta_tilde0,
                alpha,
                xi,
                shifts,
                mobius,
            };
            if d.admissible() {
                return Ok(d);
            }
        }
        Err(Error::InvalidParameter(format!(
            "no admissible draw for seed {seed}, index {index} after {MAX_ATTEMPTS} attempts"
        )))
    }

    /// Draws `0..count` of `seed`.
    pub fn batch(seed: u64, count: usize) -> Result<Vec<Self>> {
        (0..count).map(|i| Self::generate(seed, i)).collect()
    }

    fn admissible(&self) -> bool {
        self.checks().is_ok()
    }

    fn checks(&self) -> Result<()> {
        let sep = |g: &GridParams<f64>| -> Result<()> {
            g.check_nondegenerate(0..=GRID_SPAN)?;
            if g.min_separation(GRID_SPAN) < MIN_SEPARATION {
                return Err(Error::DegenerateGrid { index: GRID_SPAN });
            }
            Ok(())
        };
        let e = self.epsilon::<f64>()?;
        let g = e.grid();
        sep(&g)?;
        for m in 0..=GRID_SPAN {
            let y = grid_y(self.p, m);
            for n in 0..=GRID_SPAN {
                if (y - g.x(n)).norm() < MIN_SEPARATION {
                    return Err(Error::DegenerateGrid { index: n });
                }
            }
            for k in 0..m {
                if (y - grid_y(self.p, k)).norm() < MIN_SEPARATION {
                    return Err(Error::DegenerateGrid { index: m });
                }
            }
        }
        sep(&self.grid::<f64>()?)?;
        for params in [self.classical::<f64>()?, self.delta::<f64>()?] {
            sep(&params.grid()?)?;
            for n in 0..=GRID_SPAN as usize {
                two_diag_coeffs(n, &params)?;
            }
        }
        for n in 0..=GRID_SPAN as usize {
            gamma_closed(n, &e)?;
        }
        for big_n in 0..=6 {
            let t = self.truncated::<f64>(big_n)?;
            sep(&t.grid())?;
            for n in 0..=big_n {
                gamma_closed(n, &t)?;
            }
        }
        let [t1, t2, r1, r2] = self.mobius;
        if (t1 * r2 - t2 * r1).norm() < 0.1 {
            return Err(Error::DegenerateParameter("Mobius determinant".into()));
        }
        Ok(())
    }

    pub fn p<T: Real>(&self) -> C<T> {
        from_c64(self.p)
    }

    pub fn epsilon<T: Real>(&self) -> Result<EpsilonParams<T>> {
        EpsilonParams::new(self.eps.map(from_c64), from_c64(self.eta0), from_c64(self.eta_tilde0), self.p())
    }

    /// Interpolation grid `x(α qⁿ)` with `q = p²`.
    pub fn grid<T: Real>(&self) -> Result<GridParams<T>> {
        GridParams::new(from_c64(self.alpha), self.p())
    }

    pub fn rspec<T: Real>(&self) -> crate::heunop::RSpec<T> {
        crate::heunop::RSpec { xi: self.xi.map(from_c64) }
    }

    /// `ε1..ε6`.
    pub fn classical<T: Real>(&self) -> Result<ClassicalParams<T>> {
        let e: [C64; 6] = std::array::from_fn(|k| self.eps[k]);
        ClassicalParams::new(e.map(from_c64), self.p())
    }

    /// Companion set with `δ1 = ε1` and the same `δ2⋯δ6`.
    pub fn delta<T: Real>(&self) -> Result<ClassicalParams<T>> {
        let [s1, s2, s3] = self.shifts.map(from_c64::<T>);
        let e = self.eps.map(from_c64::<T>);
        let d = [e[0], e[1] * s1, e[2] * s2, e[3] * s3, e[4] / (s1 * s2), e[5] / s3];
        ClassicalParams::new(d, self.p())
    }

    /// Eight-parameter set with `ε1² = α p^{2N+1}` built from `ε2..ε7`.
    pub fn truncated<T: Real>(&self, big_n: usize) -> Result<EpsilonParams<T>> {
        let free: [C<T>; 6] = std::array::from_fn(|k| from_c64(self.eps[k + 1]));
        complete_truncated(big_n, from_c64(self.alpha), free, from_c64(self.eta0), from_c64(self.eta_tilde0), self.p())
    }

    #[allow(clippy::type_complexity)]
    pub fn mobius<T: Real>(&self) -> ((C<T>, C<T>), (C<T>, C<T>)) {
        let m = self.mobius.map(from_c64);
        ((m[0], m[1]), (m[2], m[3]))
    }

    /// Every drawn value, `re+imj` formatted, enough to rebuild the draw
    /// without the generator.
    pub fn describe(&self) -> String {
        let mut s = format!("seed={} draw={} p=", self.seed, self.index);
        fmt_c(&mut s, self.p);
        fmt_list(&mut s, "eps", &self.eps);
        fmt_list(&mut s, "eta0", &[self.eta0]);
        fmt_list(&mut s, "eta_tilde0", &[self.eta_tilde0]);
        fmt_list(&mut s, "alpha", &[self.alpha]);
        fmt_list(&mut s, "xi", &self.xi);
        fmt_list(&mut s, "shifts", &self.shifts);
        fmt_list(&mut s, "mobius", &self.mobius);
        s
    }
}
