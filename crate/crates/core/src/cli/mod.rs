//! The `octopsh` command line.
//!
//! Every command writes one report: JSON (default) or CSV with the columns
//! `command, id, value, std_error, n_samples, seed, pass, tolerance`. The report goes
//! to `--output` or to stdout. Reports carry no timestamps, so identical invocations
//! are byte-identical, and Monte-Carlo batches are reduced in a fixed order, so the
//! thread count (`--threads` or `OCTOPSH_THREADS`) does not change them.
//!
//! Exit status: 0 when every check passes, 1 when some check fails, 2 for
//! unreadable or invalid input, 3 for numerical failures, 4 for unsupported
//! (body, valuation) combinations.
//!
//! Fields are given in the mini-language of [`fieldlang`]; bodies as JSON files
//! (see [`crate::valuation::BodySpec`]); test functions `ψ` as product bumps by
//! `--psi-center`, `--psi-half-width` and `--psi-order`.

pub mod fieldlang;
pub mod suites;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::calculus::hessian::octonionic_hessian;
use crate::calculus::mollify::{mollify, Mollifier};
use crate::calculus::psh::{is_psh, Region};
use crate::calculus::Smoothness;
use crate::error::{Error, Result};
use crate::measure::TestFunction;
use crate::valuation::{
    additivity_residual, pseudo_volume, psi_valuation, t_valuation, u_valuation, u_valuation_mc, ConvexBody, Smoothing,
};
use crate::Vec16;
use suites::{Ctx, Row};

pub const THREADS_ENV: &str = "OCTOPSH_THREADS";

#[derive(Parser, Debug)]
#[command(name = "octopsh", version, about = "Octonionic psh calculus, Monge-Ampere measures and Spin(9)-invariant valuations")]
pub struct Cli {
    #[command(flatten)]
    pub config: RunConfig,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct RunConfig {
    /// Seed of every random stream; always echoed in the report.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Overrides the main sample count of the command.
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// Worker threads (results do not depend on it).
    #[arg(long, global = true, env = THREADS_ENV)]
    pub threads: Option<usize>,
    /// Tolerance override `check-id=value`, repeatable.
    #[arg(long = "tol", global = true, value_parser = parse_tolerance)]
    pub tolerances: Vec<(String, f64)>,
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug, Clone)]
pub struct PsiArgs {
    /// Center of the bump's support cube: one number (all coordinates) or 16.
    #[arg(long, default_value = "0")]
    pub psi_center: String,
    #[arg(long, default_value_t = 0.5)]
    pub psi_half_width: f64,
    #[arg(long, default_value_t = 3)]
    pub psi_order: i32,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Octonion table and identities, hermitian-matrix checks.
    AlgebraCheck,
    /// Octonionic Hessian of a field at a point.
    Hessian {
        #[arg(long)]
        field: String,
        /// One number (all coordinates) or 16 comma-separated numbers.
        #[arg(long, default_value = "0.1")]
        point: String,
    },
    /// Sampled plurisubharmonicity check on a cube.
    PshCheck {
        #[arg(long)]
        field: String,
        #[arg(long, default_value = "0")]
        center: String,
        #[arg(long, default_value_t = 1.0)]
        half_width: f64,
        #[arg(long, default_value_t = 200)]
        points: usize,
        /// Mollify with the bump of radius 1/n first (needed for merely continuous fields).
        #[arg(long)]
        mollify: Option<u32>,
        #[arg(long, default_value_t = 4096)]
        quad_points: usize,
    },
    /// Octonionic pseudo-volume of a body.
    PseudoVolume {
        #[arg(long)]
        body: PathBuf,
        /// `exact`, `lse:BETA` or `mollify:N:POINTS`; defaults by body type.
        #[arg(long)]
        smoothing: Option<String>,
    },
    /// `∫ ψ det(∂²h_K)` for a bump `ψ`.
    PsiValuation {
        #[arg(long)]
        body: PathBuf,
        #[arg(long)]
        smoothing: Option<String>,
        #[command(flatten)]
        psi: PsiArgs,
    },
    /// Additivity residual of the ψ-valuation over a smoothing ladder.
    Additivity {
        #[arg(long)]
        body1: PathBuf,
        #[arg(long)]
        body2: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "32,64,128")]
        betas: Vec<f64>,
        #[command(flatten)]
        psi: PsiArgs,
    },
    /// `T_i`: average intrinsic volume of projections onto octonionic lines.
    TValuation {
        #[arg(long)]
        body: PathBuf,
        #[arg(long)]
        index: usize,
    },
    /// `U_j`: integral of intrinsic volumes of sections by affine octonionic lines.
    UValuation {
        #[arg(long)]
        body: PathBuf,
        #[arg(long)]
        index: usize,
        /// Also run the plain Monte-Carlo estimator and compare.
        #[arg(long)]
        mc: bool,
    },
    /// Radon transform and its inversion on Gaussians.
    RadonDemo,
    /// Dimensions of `sl2(O)` and of its compact part.
    Spin9Dim,
    /// Runs check suites (all by default).
    Report {
        #[arg(long, value_delimiter = ',')]
        suite: Vec<String>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::AlgebraCheck => "algebra-check",
            Command::Hessian { .. } => "hessian",
            Command::PshCheck { .. } => "psh-check",
            Command::PseudoVolume { .. } => "pseudo-volume",
            Command::PsiValuation { .. } => "psi-valuation",
            Command::Additivity { .. } => "additivity",
            Command::TValuation { .. } => "t-valuation",
            Command::UValuation { .. } => "u-valuation",
            Command::RadonDemo => "radon-demo",
            Command::Spin9Dim => "spin9-dim",
            Command::Report { .. } => "report",
        }
    }
}

fn parse_tolerance(s: &str) -> std::result::Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected check-id=value, got `{s}`"))?;
    let v: f64 = v.parse().map_err(|_| format!("bad tolerance `{v}`"))?;
    Ok((k.to_string(), v))
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    pub tolerances: BTreeMap<String, f64>,
    pub pass: bool,
    pub rows: Vec<Row>,
}

impl Report {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let mut out = String::from("command,id,value,std_error,n_samples,seed,pass,tolerance\n");
        for r in &self.rows {
            let pass = match r.pass {
                Some(true) => "pass",
                Some(false) => "fail",
                None => "",
            };
            out += &format!(
                "{},{},{},{},{},{},{},{}\n",
                self.command,
                r.id,
                r.value,
                opt(r.std_error),
                r.n_samples,
                r.seed,
                pass,
                opt(r.tolerance)
            );
        }
        out
    }
}

/// Exit status for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse(_) | Error::Io(_) | Error::Json(_) | Error::Domain(_) | Error::Precondition(_) => 2,
        Error::Numerical(_) | Error::Internal(_) => 3,
        Error::Capability(_) => 4,
    }
}

fn parse_point(s: &str) -> Result<Vec16> {
    let vals: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad coordinate `{t}`"))))
        .collect::<Result<_>>()?;
    match vals.len() {
        1 => Ok(Vec16::repeat(vals[0])),
        16 => Ok(Vec16::from_column_slice(&vals)),
        n => Err(Error::Parse(format!("a point needs 1 or 16 coordinates, got {n}"))),
    }
}

fn parse_smoothing(s: Option<&str>, body: &ConvexBody, seed: u64) -> Result<Smoothing> {
    let Some(s) = s else { return Ok(Smoothing::default_for(body)) };
    let parts: Vec<&str> = s.split(':').collect();
    let num = |t: &str| t.parse::<f64>().map_err(|_| Error::Parse(format!("bad smoothing parameter `{t}`")));
    match parts.as_slice() {
        ["exact"] => Ok(Smoothing::Exact),
        ["lse", beta] => Ok(Smoothing::Lse { beta: num(beta)? }),
        ["mollify", n, points] => Ok(Smoothing::Mollify { n: num(n)? as u32, points: num(points)? as usize, seed }),
        _ => Err(Error::Parse(format!("smoothing must be exact, lse:BETA or mollify:N:POINTS, got `{s}`"))),
    }
}

fn read_body(path: &Path) -> Result<ConvexBody> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    ConvexBody::from_json(&text)
}

fn body_id(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "body".into())
}

fn psi_from(args: &PsiArgs) -> Result<TestFunction> {
    if !(args.psi_half_width > 0.0) {
        return Err(Error::Parse("--psi-half-width must be positive".into()));
    }
    TestFunction::new(Region::cube(&parse_point(&args.psi_center)?, args.psi_half_width), args.psi_order)
}

fn valuation_row(id: String, v: &crate::valuation::ValuationResult) -> Row {
    Row::estimate(id, &v.estimate())
}

/// Runs one command and returns its report, plus lines for stdout that precede it.
pub fn execute(command: &Command, config: &RunConfig) -> Result<(Report, Vec<String>)> {
    let tolerances: BTreeMap<String, f64> = config.tolerances.iter().cloned().collect();
    let ctx = Ctx { seed: config.seed, samples: config.samples, tolerances: tolerances.clone() };
    let seed = config.seed;
    let here = Path::new(".");
    let mut notes = Vec::new();
    let rows = match command {
        Command::AlgebraCheck => {
            let mut rows = suites::run_suite("algebra", &ctx)?;
            rows.extend(suites::run_suite("hermitian", &ctx)?);
            rows
        }
        Command::Hessian { field, point } => {
            let f = fieldlang::parse_field(field, here)?;
            let x = parse_point(point)?;
            let rep = octonionic_hessian(f.as_ref(), &x)?;
            let h = rep.hessian;
            let mut rows = vec![Row::info("hessian.a", h.a), Row::info("hessian.b", h.b)];
            rows.extend((0..8).map(|i| Row::info(format!("hessian.q{i}"), h.q.0[i])));
            rows.push(Row::info("hessian.det", h.det()));
            rows.push(Row::info("hessian.min-eigenvalue", h.min_eigenvalue()));
            let tol = ctx_tol(&tolerances, "hessian.asymmetry", 1e-6 * (1.0 + h.entry_norm()));
            rows.push(Row::bound("hessian.asymmetry", rep.asymmetry, tol));
            rows
        }
        Command::PshCheck { field, center, half_width, points, mollify: n, quad_points } => {
            let f = fieldlang::parse_field(field, here)?;
            let region = Region::cube(&parse_point(center)?, *half_width);
            let tol = ctx_tol(&tolerances, "psh.min-eigenvalue", 1e-8);
            let n_points = config.samples.unwrap_or(*points);
            let rep = match n {
                Some(n) => is_psh(&mollify(f, Mollifier::new(*n), *quad_points, seed), &region, n_points, seed, tol)?,
                None if f.smoothness() == Smoothness::Continuous => {
                    return Err(Error::Precondition(format!("`{}` is only continuous; pass --mollify N", f.describe())))
                }
                None => is_psh(f.as_ref(), &region, n_points, seed, tol)?,
            };
            vec![Row::at_least("psh.min-eigenvalue", rep.min_eigenvalue, -tol).samples(n_points, seed)]
        }
        Command::PseudoVolume { body, smoothing } => {
            let k = read_body(body)?;
            let sm = parse_smoothing(smoothing.as_deref(), &k, seed)?;
            let v = pseudo_volume(&k, &sm, config.samples.unwrap_or(crate::mc::DEFAULT_SAMPLES), seed)?;
            notes.push(format!("smoothing: {}, exclusion bound: {:e}", v.smoothing, v.exclusion_bound));
            vec![valuation_row(body_id(body), &v), Row::info("exclusion-bound", v.exclusion_bound)]
        }
        Command::PsiValuation { body, smoothing, psi } => {
            let k = read_body(body)?;
            let sm = parse_smoothing(smoothing.as_deref(), &k, seed)?;
            let v = psi_valuation(&k, &psi_from(psi)?, &sm, config.samples.unwrap_or(crate::mc::DEFAULT_SAMPLES), seed)?;
            vec![valuation_row(body_id(body), &v), Row::info("exclusion-bound", v.exclusion_bound)]
        }
        Command::Additivity { body1, body2, betas, psi } => {
            let (k1, k2) = (read_body(body1)?, read_body(body2)?);
            let psi = psi_from(psi)?;
            let n = config.samples.unwrap_or(1 << 14);
            let rel_tol = ctx_tol(&tolerances, "additivity.smoothing-relative", 1e-6);
            let mut rows = Vec::new();
            let mut prev: Option<crate::mc::MeasureEstimate> = None;
            for &beta in betas {
                let rep = additivity_residual(&k1, &k2, &psi, beta, n, seed)?;
                let slack = rel_tol * rep.reference.value.abs();
                rows.push(Row::estimate(format!("reference.beta{beta}"), &rep.reference));
                rows.push(Row::sigma(format!("residual.beta{beta}"), &rep.residual, 0.0, 2.0, slack));
                if let Some(d) = &rep.direct_residual {
                    rows.push(Row::estimate(format!("direct-residual.beta{beta}"), d));
                }
                if let Some(p) = prev {
                    let ok = rep.residual.value.abs() <= p.value.abs() + 2.0 * (p.std_error + rep.residual.std_error) + slack;
                    rows.push(Row { pass: Some(ok), ..Row::estimate(format!("ladder.beta{beta}"), &rep.residual) });
                }
                prev = Some(rep.residual);
            }
            rows
        }
        Command::TValuation { body, index } => {
            let k = read_body(body)?;
            let v = t_valuation(&k, *index, config.samples.unwrap_or(100_000), seed)?;
            vec![valuation_row(format!("{}.T{index}", body_id(body)), &v)]
        }
        Command::UValuation { body, index, mc } => {
            let k = read_body(body)?;
            let v = u_valuation(&k, *index, 1000, seed)?;
            let mut rows = vec![valuation_row(format!("{}.U{index}", body_id(body)), &v)];
            if *mc {
                let m = u_valuation_mc(&k, *index, config.samples.unwrap_or(1 << 18), seed)?;
                let k_sigma = ctx_tol(&tolerances, "u-valuation.sigma", 3.0);
                rows.push(Row::sigma(format!("{}.U{index}.monte-carlo", body_id(body)), &m.estimate(), v.value, k_sigma, 0.0));
            }
            rows
        }
        Command::RadonDemo => suites::run_suite("radon", &ctx)?,
        Command::Spin9Dim => {
            let (full, compact) = suites::spin9_dims();
            notes.push(format!("dim sl2(O) = {full}, dim compact = {compact}"));
            vec![
                Row::bound("dim-sl2", (full as f64 - crate::spin::SL2_DIM as f64).abs(), 0.0),
                Row::bound("dim-compact", (compact as f64 - crate::spin::SPIN9_DIM as f64).abs(), 0.0),
            ]
        }
        Command::Report { suite } => {
            let names: Vec<String> = if suite.is_empty() { suites::SUITES.iter().map(|s| s.to_string()).collect() } else { suite.clone() };
            let mut rows = Vec::new();
            for name in &names {
                rows.extend(suites::run_suite(name, &ctx)?);
            }
            rows
        }
    };
    let pass = rows.iter().all(|r| r.pass != Some(false));
    let report = Report { command: command.name().into(), seed, samples: config.samples, tolerances, pass, rows };
    Ok((report, notes))
}

fn ctx_tol(t: &BTreeMap<String, f64>, id: &str, default: f64) -> f64 {
    t.get(id).copied().unwrap_or(default)
}

/// Entry point of the binary; returns the exit status.
pub fn run(cli: Cli) -> i32 {
    if let Some(n) = cli.config.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("warning: could not size the thread pool: {e}");
        }
    }
    let result = execute(&cli.command, &cli.config).and_then(|(report, notes)| {
        let body = match cli.config.format {
            Format::Json => report.to_json()?,
            Format::Csv => report.to_csv(),
        };
        let mut stdout = std::io::stdout().lock();
        for n in &notes {
            // informational lines go to stdout only when the report goes to a file
            // or is the dimension query, so stdout stays machine-readable otherwise
            if cli.config.output.is_some() || matches!(cli.command, Command::Spin9Dim) {
                writeln!(stdout, "{n}")?;
            } else {
                eprintln!("{n}");
            }
        }
        match &cli.config.output {
            Some(path) => std::fs::write(path, body)?,
            None if matches!(cli.command, Command::Spin9Dim) => {}
            None => stdout.write_all(body.as_bytes())?,
        }
        Ok(report.pass)
    });
    match result {
        Ok(true) => 0,
        Ok(false) => {
            eprintln!("some checks failed");
            1
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
