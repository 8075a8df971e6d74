use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use ratheun::Dd;

use ratheun::par::Execution;
use ratheun::verify::{parse_suites, run_suites, Suite, SuiteConfig};
use ratheun::{Backend, PrecisionContext};

mod compute;
mod output;

use compute::{Inputs, Object};
use output::{parse_complex, Format};

const VERIFY_HELP: &str = "\
Suites: raising, gamma-closed, a1-correspondence, aw-limit, classical,
gevp-split, gevp-generic, series-match, finite-dim, all.

CSV columns: suite, check, draw, n, residual, threshold, pass, params.
`params` lists every drawn value (re+imj), enough to rebuild the draw.
Checks named *-lower-bound pass when residual > threshold.
Exit status is 0 iff every row passes.";

#[derive(Parser)]
#[command(name = "ratheun", version, about = "Rational q-Heun operators: verification suites and computations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Working precision in decimal digits (15: binary64, up to 31: double-double).
    #[arg(long, env = "RATHEUN_PRECISION", default_value_t = 15)]
    precision: u32,
    /// Relative residual bound for partial-fraction fits.
    #[arg(long)]
    fit_tolerance: Option<f64>,
    /// Relative bound for identity checks.
    #[arg(long)]
    equality_tolerance: Option<f64>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

impl Common {
    fn ctx(&self) -> Result<PrecisionContext> {
        let mut ctx = PrecisionContext::with_precision(self.precision)?;
        if let Some(t) = self.fit_tolerance {
            ctx.fit_tolerance = t;
        }
        if let Some(t) = self.equality_tolerance {
            ctx.equality_tolerance = t;
        }
        ctx.validate()?;
        Ok(ctx)
    }

    fn sink(&self) -> Result<Box<dyn Write>> {
        Ok(match &self.output {
            Some(p) => Box::new(BufWriter::new(
                File::create(p).with_context(|| format!("cannot write {}", p.display()))?,
            )),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a verification suite over seeded random parameter draws.
    #[command(after_help = VERIFY_HELP)]
    Verify {
        suite: String,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Number of parameter draws (suite default if omitted).
        #[arg(long)]
        draws: Option<usize>,
        /// Largest n checked (suite default if omitted).
        #[arg(long)]
        n_max: Option<usize>,
        /// Run draws one after another instead of in parallel.
        #[arg(long)]
        sequential: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate a closed form or solve for given parameters.
    Compute {
        #[arg(value_enum)]
        object: Object,
        /// Index n (for finite-dim-spectrum, the dimension minus one).
        #[arg(long, short = 'n', alias = "N", default_value_t = 0)]
        n: usize,
        /// Comma-separated ε values (re+imj).
        #[arg(long, value_delimiter = ',', value_parser = parse_complex, allow_hyphen_values = true)]
        eps: Vec<num_complex::Complex<f64>>,
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true, default_value = "0.6")]
        p: num_complex::Complex<f64>,
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true, default_value = "1")]
        eta0: num_complex::Complex<f64>,
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true, default_value = "0")]
        eta_tilde0: num_complex::Complex<f64>,
        /// Target grid scale for finite-dim-spectrum with six free ε.
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
        alpha: Option<num_complex::Complex<f64>>,
        /// Evaluation point for series-value.
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true, default_value = "0.5+0.3j")]
        z: num_complex::Complex<f64>,
        #[command(flatten)]
        common: Common,
    },
}

fn verify(suite: &str, seed: u64, draws: Option<usize>, n_max: Option<usize>, sequential: bool, common: &Common) -> Result<bool> {
    let suites = match parse_suites(suite) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}\n\n{VERIFY_HELP}");
            std::process::exit(2);
        }
    };
    let ctx = common.ctx()?;
    let cfg = SuiteConfig {
        seed,
        draws,
        n_max,
        ctx,
        exec: if sequential { Execution::Sequential } else { Execution::Parallel },
    };
    let rows = run_suites(&suites, &cfg)?;
    let header = serde_json::json!({
        "suite": suite,
        "seed": seed,
        "draws": draws,
        "n_max": n_max,
        "precision": ctx.working_precision,
        "fit_tolerance": ctx.fit_tolerance,
        "equality_tolerance": ctx.equality_tolerance,
    });
    let mut out = common.sink()?;
    output::write_rows(&mut out, &rows, common.format, &header)?;
    out.flush()?;
    let mut all = true;
    for s in &suites {
        let mine: Vec<_> = rows.iter().filter(|r| r.suite == s.name()).collect();
        let ok = mine.iter().filter(|r| r.pass).count();
        eprintln!("{:<18} {ok}/{} checks passed", Suite::name(*s), mine.len());
        all &= ok == mine.len();
    }
    Ok(all)
}

fn run() -> Result<bool> {
    let cli = Cli::parse();
    match cli.command {
        Command::Verify {
            suite,
            seed,
            draws,
            n_max,
            sequential,
            common,
        } => verify(&suite, seed, draws, n_max, sequential, &common),
        Command::Compute {
            object,
            n,
            eps,
            p,
            eta0,
            eta_tilde0,
            alpha,
            z,
            common,
        } => {
            let ctx = common.ctx()?;
            let inp = Inputs {
                n,
                eps,
                p,
                eta0,
                eta_tilde0,
                alpha,
                z,
            };
            let recs = match ctx.backend()? {
                Backend::Binary64 => compute::compute::<f64>(object, &inp, &ctx)?,
                Backend::DoubleDouble => compute::compute::<Dd>(object, &inp, &ctx)?,
            };
            let name = clap::ValueEnum::to_possible_value(&object)
                .map(|v| v.get_name().to_string())
                .unwrap_or_default();
            let mut out = common.sink()?;
            output::write_records(&mut out, &name, &recs, common.format)?;
            out.flush()?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
