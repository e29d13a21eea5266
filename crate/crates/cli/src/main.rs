//! `bipolar`: classification, spectra, immersions and verification of Lawson
//! bipolar surfaces from the command line.

mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lawson_bipolar::hill::{self, HillProblem};
use lawson_bipolar::surface::SurfaceParams;
use lawson_bipolar::verify::{self, Thresholds, VerifyConfig};
use lawson_bipolar::{phi, Error};
use rayon::prelude::*;

use output::{Output, SweepRow};

/// Environment variable overriding the default tolerance.
const TOL_ENV: &str = "BIPOLAR_TOL";

#[derive(Parser, Debug)]
#[command(name = "bipolar", version, about = "Lawson bipolar surfaces: spectra, immersions and extremal ranks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the profile integers and the topology.
    Classify(Common),
    /// Write the periodic eigenvalues of the Hill equation for p = 0..n.
    Spectrum(Common),
    /// Write sample points of the immersion into S4.
    Immerse(Common),
    /// Run every check and write the JSON report.
    Verify(Common),
    /// Print the index of the extremal eigenvalue.
    Rank(Common),
    /// Print the area by quadrature and in closed form.
    Area(Common),
    /// Write the integrated profile functions and first integrals.
    Profile(Common),
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Lawson parameter r.
    #[arg(long, required_unless_present = "sweep", allow_negative_numbers = true)]
    r: Option<i64>,
    /// Lawson parameter k.
    #[arg(long, required_unless_present = "sweep", allow_negative_numbers = true)]
    k: Option<i64>,
    /// Integration tolerance, overriding BIPOLAR_TOL.
    #[arg(long)]
    tol: Option<f64>,
    /// Grid size (points per side for immerse, y-points for verify).
    #[arg(long)]
    grid: Option<usize>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Run for every admissible (r, k) with r up to this value.
    #[arg(long, conflicts_with_all = ["r", "k"])]
    sweep: Option<u32>,
    /// Halve every verification threshold.
    #[arg(long)]
    strict: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Text,
    Json,
    Csv,
}

/// Failure classes and their exit codes.
#[derive(Debug)]
enum Failure {
    Input(String),
    Check(String),
    Numerical(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 1,
            Failure::Check(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Input(m) | Failure::Check(m) | Failure::Numerical(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameters { .. } | Error::Tolerance { .. } => Failure::Input(e.to_string()),
            Error::RankMismatch { .. } | Error::Multiplicity { .. } | Error::QuadratureMismatch { .. } => Failure::Check(e.to_string()),
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Input(format!("cannot write output: {e}"))
    }
}

type Outcome = Result<(), Failure>;

impl Common {
    fn params(&self) -> Result<SurfaceParams, Failure> {
        let (Some(r), Some(k)) = (self.r, self.k) else {
            return Err(Failure::Input("--r and --k are required".into()));
        };
        Ok(SurfaceParams::new(r, k)?)
    }

    /// All surfaces addressed by the flags, in sweep order.
    fn targets(&self) -> Result<Vec<SurfaceParams>, Failure> {
        match self.sweep {
            Some(r_max) => Ok(SurfaceParams::admissible_up_to(r_max)),
            None => Ok(vec![self.params()?]),
        }
    }

    fn single(&self, command: &str) -> Result<SurfaceParams, Failure> {
        if self.sweep.is_some() {
            return Err(Failure::Input(format!("{command} does not support --sweep")));
        }
        self.params()
    }

    fn tol(&self, default: f64) -> Result<f64, Failure> {
        let tol = match (self.tol, std::env::var(TOL_ENV)) {
            (Some(t), _) => t,
            (None, Ok(v)) => v.trim().parse().map_err(|_| Failure::Input(format!("{TOL_ENV}={v} is not a number")))?,
            (None, Err(_)) => default,
        };
        if !(phi::TOL_RANGE.0..=phi::TOL_RANGE.1).contains(&tol) {
            return Err(Error::Tolerance { value: tol, min: phi::TOL_RANGE.0, max: phi::TOL_RANGE.1 }.into());
        }
        Ok(tol)
    }

    fn grid(&self, default: usize) -> Result<usize, Failure> {
        match self.grid {
            Some(0) => Err(Failure::Input("--grid must be positive".into())),
            Some(g) => Ok(g),
            None => Ok(default),
        }
    }

    fn format(&self, default: Format, allowed: &[Format]) -> Result<Format, Failure> {
        let f = self.format.unwrap_or(default);
        if allowed.contains(&f) {
            Ok(f)
        } else {
            Err(Failure::Input(format!("format {f:?} is not available for this command")))
        }
    }

    fn output(&self) -> Output {
        Output::new(self.out.clone())
    }
}

fn classify(c: &Common) -> Outcome {
    let format = c.format(Format::Text, &[Format::Text, Format::Json, Format::Csv])?;
    let targets = c.targets()?;
    let mut out = c.output();
    match format {
        Format::Text => {
            for p in &targets {
                out.line(format!("{}, n={}, m={}", p.topology, p.n, p.m));
            }
        }
        Format::Json => if c.sweep.is_some() { out.json(&targets) } else { out.json(&targets[0]) },
        Format::Csv => {
            out.line("r,k,n,m,parity_class,topology");
            for p in &targets {
                out.line(format!("{},{},{},{},{:?},{}", p.r, p.k, p.n, p.m, p.parity_class, p.topology));
            }
        }
    }
    out.finish()
}

fn spectrum(c: &Common) -> Outcome {
    let format = c.format(Format::Csv, &[Format::Csv, Format::Json])?;
    let params = c.single("spectrum")?;
    let problem = HillProblem::with_tol(&params, c.tol(hill::DEFAULT_TOL)?)?;
    let lines = (0..=params.n)
        .into_par_iter()
        .map(|p| problem.find_branch(p as f64, hill::SIMPLICITY_LIMIT - 0.01))
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = c.output();
    match format {
        Format::Json => out.json(&lines),
        _ => out.bytes(|w| hill::write_spectrum_csv(&lines, w))?,
    }
    out.finish()?;
    match lines.iter().find_map(|l| l.problems_below(hill::SIMPLICITY_LIMIT).into_iter().next()) {
        Some(problem) => Err(Failure::Numerical(problem)),
        None => Ok(()),
    }
}

fn immerse(c: &Common) -> Outcome {
    let format = c.format(Format::Csv, &[Format::Csv, Format::Json])?;
    let params = c.single("immerse")?;
    let grid = c.grid(64)?;
    let mut out = c.output();
    output::write_immersion(&mut out, &params, grid, format == Format::Json)?;
    out.finish()
}

fn verify_config(c: &Common) -> Result<VerifyConfig, Failure> {
    let mut config = VerifyConfig::default();
    if c.strict {
        config.thresholds = Thresholds::strict();
    }
    config.grid = c.grid(config.grid)?;
    config.phi_tol = c.tol(config.phi_tol)?;
    Ok(config)
}

fn run_verify(c: &Common) -> Outcome {
    c.format(Format::Json, &[Format::Json])?;
    let config = verify_config(c)?;
    let targets = c.targets()?;
    let reports = targets.par_iter().map(|p| verify::full_report(p, &config)).collect::<Result<Vec<_>, _>>()?;
    let mut out = c.output();
    if c.sweep.is_some() { out.json(&reports) } else { out.json(&reports[0]) };
    out.finish()?;
    let failed: Vec<String> = reports
        .iter()
        .flat_map(|r| r.failed().into_iter().map(move |f| format!("({},{}) {}: {:e} >= {:e}", r.params.r, r.params.k, f.name, f.residual, f.threshold)))
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Check(failed.join("\n")))
    }
}

fn rank(c: &Common) -> Outcome {
    let sweep = c.sweep.is_some();
    let format = c.format(if sweep { Format::Csv } else { Format::Text }, &[Format::Text, Format::Json, Format::Csv])?;
    let tol = c.tol(hill::DEFAULT_TOL)?;
    let rows = c
        .targets()?
        .par_iter()
        .map(|p| -> Result<SweepRow, Failure> {
            let count = HillProblem::with_tol(p, tol)?.count_below_two(None)?;
            Ok(SweepRow::new(p, count.rank(), count.multiplicity))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = c.output();
    match format {
        Format::Text => {
            for row in &rows {
                out.line(row.text());
            }
        }
        Format::Json => if sweep { out.json(&rows) } else { out.json(&rows[0]) },
        Format::Csv => {
            out.line(SweepRow::CSV_HEADER);
            for row in &rows {
                out.line(row.csv());
            }
        }
    }
    out.finish()?;
    let mismatched: Vec<String> = rows.iter().filter(|r| !r.agrees()).map(|r| format!("({},{}) i={} expected {}", r.r, r.k, r.rank_i, r.expected)).collect();
    if mismatched.is_empty() {
        Ok(())
    } else {
        Err(Failure::Check(format!("rank disagrees with the parity rule: {}", mismatched.join(", "))))
    }
}

fn area(c: &Common) -> Outcome {
    let format = c.format(Format::Text, &[Format::Text, Format::Json, Format::Csv])?;
    let tolerance = if c.strict { Thresholds::strict() } else { Thresholds::default() }.area_relative;
    let targets = c.targets()?;
    let reports = targets.par_iter().map(|p| verify::area_and_lambda(p, tolerance)).collect::<Result<Vec<_>, _>>()?;
    let mut out = c.output();
    match format {
        Format::Text => {
            for (p, a) in targets.iter().zip(&reports) {
                let prefix = if c.sweep.is_some() { format!("r={}, k={}, ", p.r, p.k) } else { String::new() };
                out.line(format!(
                    "{prefix}quadrature={}, closed_form={}, relative={:e}, lambda_{}={}",
                    a.area, a.closed_form, a.relative, a.rank_i, a.lambda_value
                ));
            }
        }
        Format::Json => if c.sweep.is_some() { out.json(&reports) } else { out.json(&reports[0]) },
        Format::Csv => {
            out.line("r,k,area_quadrature,area_closed_form,relative,rank_i,lambda_value");
            for (p, a) in targets.iter().zip(&reports) {
                out.line(format!(
                    "{},{},{},{},{},{},{}",
                    p.r,
                    p.k,
                    output::f(a.area),
                    output::f(a.closed_form),
                    output::f(a.relative),
                    a.rank_i,
                    output::f(a.lambda_value)
                ));
            }
        }
    }
    out.finish()
}

fn profile(c: &Common) -> Outcome {
    let format = c.format(Format::Csv, &[Format::Csv, Format::Json])?;
    let params = c.single("profile")?;
    let profile = phi::integrate_system(&params, c.tol(phi::DEFAULT_TOL)?)?;
    let mut out = c.output();
    match format {
        Format::Json => out.json(&profile),
        _ => out.bytes(|w| profile.write_csv(w))?,
    }
    out.finish()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Classify(c) => classify(c),
        Command::Spectrum(c) => spectrum(c),
        Command::Immerse(c) => immerse(c),
        Command::Verify(c) => run_verify(c),
        Command::Rank(c) => rank(c),
        Command::Area(c) => area(c),
        Command::Profile(c) => profile(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message());
            ExitCode::from(failure.code())
        }
    }
}
