//! Single closed-form or solved quantities for given parameters.

use anyhow::{bail, Context, Result};
use num_complex::Complex;

use ratheun::classical::ClassicalParams;
use ratheun::gevp::{complete_truncated, finite_dim, solve_recurrence, two_diag_coeffs};
use ratheun::heunop::gamma_closed;
use ratheun::hyp::{wilson_rn, WilsonRnSpec};
use ratheun::numerics::{from_c64, probe_points, to_c64};
use ratheun::{EpsilonParams, PrecisionContext, Real, C};

use crate::output::Record;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Object {
    Gamma,
    TwoDiagCoeffs,
    RnCoefficients,
    FiniteDimSpectrum,
    SeriesValue,
}

#[derive(Clone, Debug)]
pub struct Inputs {
    pub n: usize,
    pub eps: Vec<Complex<f64>>,
    pub p: Complex<f64>,
    pub eta0: Complex<f64>,
    pub eta_tilde0: Complex<f64>,
    pub alpha: Option<Complex<f64>>,
    pub z: Complex<f64>,
}

type C64 = Complex<f64>;

fn echo(inp: &Inputs, out: &mut Vec<Record>) {
    out.push(Record::param("n", None, C64::new(inp.n as f64, 0.0)));
    for (k, e) in inp.eps.iter().enumerate() {
        out.push(Record::param("eps", Some(k + 1), *e));
    }
    out.push(Record::param("p", None, inp.p));
}

fn eps_exact<const K: usize>(inp: &Inputs, object: &str) -> Result<[C64; K]> {
    inp.eps
        .as_slice()
        .try_into()
        .with_context(|| format!("{object} needs exactly {K} --eps values, got {}", inp.eps.len()))
}

fn classical<T: Real>(inp: &Inputs, object: &str) -> Result<ClassicalParams<T>> {
    let e: [C64; 6] = eps_exact(inp, object)?;
    Ok(ClassicalParams::new(e.map(from_c64), from_c64(inp.p))?)
}

pub fn compute<T: Real>(object: Object, inp: &Inputs, ctx: &PrecisionContext) -> Result<Vec<Record>> {
    let mut out = Vec::new();
    echo(inp, &mut out);
    match object {
        Object::Gamma => {
            let e: [C64; 8] = eps_exact(inp, "gamma")?;
            out.push(Record::param("eta0", None, inp.eta0));
            out.push(Record::param("eta_tilde0", None, inp.eta_tilde0));
            let eps = EpsilonParams::<T>::new(e.map(from_c64), from_c64(inp.eta0), from_c64(inp.eta_tilde0), from_c64(inp.p))?;
            for (k, g) in gamma_closed(inp.n, &eps)?.iter().enumerate() {
                out.push(Record::result("gamma", Some(k), to_c64(*g)));
            }
        }
        Object::TwoDiagCoeffs => {
            let t = two_diag_coeffs(inp.n, &classical::<T>(inp, "two-diag-coeffs")?)?;
            for (name, v) in [("mu1", t.mu1), ("nu1", t.nu1), ("mu2", t.mu2), ("nu2", t.nu2)] {
                out.push(Record::result(name, None, to_c64(v)));
            }
        }
        Object::RnCoefficients => {
            let e = solve_recurrence(inp.n, &classical::<T>(inp, "rn-coefficients")?, ctx)?;
            out.push(Record::result("lambda", None, to_c64(e.lambda)));
            for (s, a) in e.a.iter().enumerate() {
                out.push(Record::result("A", Some(s), to_c64(*a)));
            }
        }
        Object::FiniteDimSpectrum => {
            out.push(Record::param("eta0", None, inp.eta0));
            out.push(Record::param("eta_tilde0", None, inp.eta_tilde0));
            let eps: EpsilonParams<T> = match inp.eps.len() {
                6 => {
                    let Some(alpha) = inp.alpha else {
                        bail!("finite-dim-spectrum with six free --eps values needs --alpha");
                    };
                    out.push(Record::param("alpha", None, alpha));
                    let free: [C64; 6] = eps_exact(inp, "finite-dim-spectrum")?;
                    complete_truncated(inp.n, from_c64(alpha), free.map(from_c64), from_c64(inp.eta0), from_c64(inp.eta_tilde0), from_c64(inp.p))?
                }
                8 => {
                    let e: [C64; 8] = eps_exact(inp, "finite-dim-spectrum")?;
                    EpsilonParams::new(e.map(from_c64), from_c64(inp.eta0), from_c64(inp.eta_tilde0), from_c64(inp.p))?
                }
                k => bail!("finite-dim-spectrum needs 6 free --eps values (with --alpha) or a full set of 8, got {k}"),
            };
            for (k, e) in eps.eps.iter().enumerate() {
                out.push(Record::result("completed_eps", Some(k + 1), to_c64(*e)));
            }
            let zs: Vec<C<T>> = probe_points(8);
            let pr = finite_dim(inp.n, &eps, &zs, ctx)?;
            for (j, pair) in pr.eigenpairs.iter().enumerate() {
                out.push(Record::result("eigenvalue", Some(j), to_c64(pair.lambda)));
                out.push(Record::result("residual", Some(j), C64::new(pair.residual, 0.0)));
                for (i, v) in pair.v.iter().enumerate() {
                    out.push(Record::result(&format!("eigenvector_{j}"), Some(i), to_c64(*v)));
                }
            }
            if pr.small_components {
                out.push(Record::result("small_components_flag", None, C64::new(1.0, 0.0)));
            }
        }
        Object::SeriesValue => {
            let e: [C64; 6] = eps_exact(inp, "series-value")?;
            out.push(Record::param("z", None, inp.z));
            let params = ClassicalParams::<T>::new(e.map(from_c64), from_c64(inp.p))?;
            let spec = WilsonRnSpec::from_classical(&params.eps, params.alpha(), params.p, inp.n);
            out.push(Record::result("R", Some(inp.n), to_c64(wilson_rn(&spec, from_c64(inp.z))?)));
        }
    }
    Ok(out)
}
