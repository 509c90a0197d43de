//! Command-line front end. Flags and JSON config files both parse into
//! [`RunConfig`]; [`run`] dispatches one command and writes its output.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{debug, info};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discriminator::{
    channel_from_measurement, check_nosignaling_constraint, check_score_invariance, fit_cosine_form,
    symmetrize, ChannelMatrix,
};
use crate::ensemble::{
    make_shadow_decomposition, make_symmetric_ensemble, verify_decomposition_identity, SymmetricEnsemble,
};
use crate::error::{Error, Result};
use crate::io::{fmt17, to_json_string, write_channel_csv, write_sweep_csv, SweepRow};
use crate::merit::{is_monotonous, make_fom, mutual_information, score, BuiltinMerit, FigureOfMerit, MeritSpec};
use crate::nosignal::{admissible_region, check_channel_admissible, guessing_bound, q_channel};
use crate::optimal::{
    optimize_covariant, optimize_general, random_covariant_povm, random_povm, symmetric_povm,
    verify_optimal_channel, GeneralOptions, OptimizationResult,
};
use crate::qubit::{helstrom_guess_probability, Povm};

pub const MAX_HALF_COUNT: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Ensemble,
    Bound,
    Channel,
    Fit,
    Score,
    Optimize,
    Verify,
    Sweep,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    General,
    Covariant,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    #[serde(rename = "M")]
    pub half_counts: Vec<usize>,
    pub r: Vec<f64>,
    pub theta: Vec<f64>,
}

impl Default for Grid {
    fn default() -> Self {
        Self {
            half_counts: (1..=5).collect(),
            r: vec![0.3, 0.7, 1.0],
            theta: vec![PI / 6.0, PI / 3.0, FRAC_PI_2],
        }
    }
}

fn default_half_count() -> usize {
    2
}
fn default_r() -> f64 {
    1.0
}
fn default_theta() -> f64 {
    FRAC_PI_2
}
fn default_merit() -> String {
    "delta".into()
}
fn default_povm() -> String {
    "eq20".into()
}

/// Everything one invocation needs; also the schema of `--config` files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    #[serde(rename = "M", default = "default_half_count")]
    pub half_count: usize,
    #[serde(default = "default_r")]
    pub r: f64,
    #[serde(default = "default_theta")]
    pub theta: f64,
    /// Builtin merit name or path to a merit JSON file.
    #[serde(default = "default_merit")]
    pub merit: String,
    /// `eq20`, `uniform`, `covariant-random`, `covariant:<seed>`, `random:<seed>` or a POVM JSON path.
    #[serde(default = "default_povm")]
    pub povm: String,
    #[serde(default)]
    pub format: Option<Format>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub method: Method,
    #[serde(default)]
    pub restarts: Option<usize>,
    #[serde(default)]
    pub max_iter: Option<usize>,
    #[serde(default)]
    pub tol: Option<f64>,
    /// Random POVMs drawn per check in `verify`.
    #[serde(default)]
    pub samples: Option<usize>,
    #[serde(default)]
    pub grid: Option<Grid>,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            half_count: default_half_count(),
            r: default_r(),
            theta: default_theta(),
            merit: default_merit(),
            povm: default_povm(),
            format: None,
            out: None,
            seed: 0,
            method: Method::default(),
            restarts: None,
            max_iter: None,
            tol: None,
            samples: None,
            grid: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_params(self.half_count, self.r, self.theta)?;
        if let Some(g) = &self.grid {
            for &m in &g.half_counts {
                for &r in &g.r {
                    for &t in &g.theta {
                        check_params(m, r, t)?;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn optimizer_options(&self) -> GeneralOptions {
        let d = GeneralOptions::default();
        GeneralOptions {
            max_iter: self.max_iter.unwrap_or(d.max_iter),
            tol: self.tol.unwrap_or(d.tol),
            restarts: self.restarts.unwrap_or(d.restarts),
            seed: self.seed,
        }
    }

    fn format(&self) -> Format {
        self.format.unwrap_or(match self.command {
            Command::Channel | Command::Sweep => Format::Csv,
            _ => Format::Json,
        })
    }

    fn ensemble(&self) -> Result<SymmetricEnsemble> {
        make_symmetric_ensemble(self.half_count, self.r, self.theta)
    }
}

fn check_params(m: usize, r: f64, theta: f64) -> Result<()> {
    if !(1..=MAX_HALF_COUNT).contains(&m) {
        return Err(Error::OutOfRange {
            name: "M",
            value: m as f64,
            expected: "[1, 32]",
        });
    }
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::OutOfRange {
            name: "r",
            value: r,
            expected: "[0, 1]",
        });
    }
    if !(0.0..=PI).contains(&theta) {
        return Err(Error::OutOfRange {
            name: "theta",
            value: theta,
            expected: "[0, pi] (radians)",
        });
    }
    Ok(())
}

#[derive(Debug, Parser)]
#[command(name = "qsd", version, about = "Symmetric qubit state discrimination with general figures of merit")]
pub struct Cli {
    /// Run the command described by a JSON config file.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Option<CliCommand>,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Print the states of the ensemble.
    Ensemble(CommonArgs),
    /// No-signaling guessing bound and admissible region.
    Bound(CommonArgs),
    /// Channel matrix induced by a POVM.
    Channel(CommonArgs),
    /// Cosine-form fit of the symmetrized channel of a POVM.
    Fit(CommonArgs),
    /// Average score of a POVM under a merit.
    Score(CommonArgs),
    /// Maximize the score over POVMs.
    Optimize(CommonArgs),
    /// Run every identity check for one ensemble; exits 1 on failure.
    Verify(CommonArgs),
    /// Evaluate closed-form quantities over a parameter grid.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    #[arg(long = "M", default_value_t = default_half_count())]
    pub half_count: usize,
    #[arg(long, default_value_t = default_r())]
    pub r: f64,
    /// Polar angle in radians.
    #[arg(long, default_value_t = default_theta())]
    pub theta: f64,
    /// Builtin merit (delta, cos2, linear, constant, neighbor) or a JSON file.
    #[arg(long, default_value = "delta")]
    pub merit: String,
    /// eq20, uniform, covariant-random, covariant:SEED, random:SEED, or a JSON file.
    #[arg(long, default_value = "eq20")]
    pub povm: String,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Method::General)]
    pub method: Method,
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long = "max-iter")]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Random POVMs per check in `verify`.
    #[arg(long)]
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Comma-separated half counts.
    #[arg(long = "grid-M", value_delimiter = ',')]
    pub grid_half_counts: Option<Vec<usize>>,
    #[arg(long = "grid-r", value_delimiter = ',')]
    pub grid_r: Option<Vec<f64>>,
    #[arg(long = "grid-theta", value_delimiter = ',')]
    pub grid_theta: Option<Vec<f64>>,
}

impl CommonArgs {
    fn into_config(self, command: Command) -> RunConfig {
        RunConfig {
            command,
            half_count: self.half_count,
            r: self.r,
            theta: self.theta,
            merit: self.merit,
            povm: self.povm,
            format: self.format,
            out: self.out,
            seed: self.seed,
            method: self.method,
            restarts: self.restarts,
            max_iter: self.max_iter,
            tol: self.tol,
            samples: self.samples,
            grid: None,
        }
    }
}

impl Cli {
    pub fn into_config(self) -> Result<RunConfig> {
        match (self.config, self.command) {
            (Some(_), Some(_)) => Err(Error::Format("pass either --config or a subcommand, not both".into())),
            (None, None) => Err(Error::Format("missing subcommand (or --config)".into())),
            (Some(path), None) => Ok(serde_json::from_reader(File::open(path)?)?),
            (None, Some(cmd)) => Ok(match cmd {
                CliCommand::Ensemble(a) => a.into_config(Command::Ensemble),
                CliCommand::Bound(a) => a.into_config(Command::Bound),
                CliCommand::Channel(a) => a.into_config(Command::Channel),
                CliCommand::Fit(a) => a.into_config(Command::Fit),
                CliCommand::Score(a) => a.into_config(Command::Score),
                CliCommand::Optimize(a) => a.into_config(Command::Optimize),
                CliCommand::Verify(a) => a.into_config(Command::Verify),
                CliCommand::Sweep(s) => {
                    let d = Grid::default();
                    let mut cfg = s.common.into_config(Command::Sweep);
                    cfg.grid = Some(Grid {
                        half_counts: s.grid_half_counts.unwrap_or(d.half_counts),
                        r: s.grid_r.unwrap_or(d.r),
                        theta: s.grid_theta.unwrap_or(d.theta),
                    });
                    cfg
                }
            }),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Success,
    VerificationFailed,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Success => 0,
            Status::VerificationFailed => 1,
        }
    }
}

/// Runs the command, writing to `config.out` or stdout.
pub fn run(config: &RunConfig) -> Result<Status> {
    match &config.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            let status = run_to(config, &mut w)?;
            w.flush()?;
            Ok(status)
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            run_to(config, &mut lock)
        }
    }
}

pub fn run_to<W: Write>(config: &RunConfig, out: &mut W) -> Result<Status> {
    config.validate()?;
    info!("running {:?} (seed {})", config.command, config.seed);
    match config.command {
        Command::Ensemble => cmd_ensemble(config, out),
        Command::Bound => cmd_bound(config, out),
        Command::Channel => cmd_channel(config, out),
        Command::Fit => cmd_fit(config, out),
        Command::Score => cmd_score(config, out),
        Command::Optimize => cmd_optimize(config, out),
        Command::Verify => cmd_verify(config, out),
        Command::Sweep => cmd_sweep(config, out),
    }
}

pub fn load_merit(source: &str, n: usize) -> Result<FigureOfMerit> {
    if let Some(b) = BuiltinMerit::parse(source) {
        return Ok(b.build(n));
    }
    let spec: MeritSpec = serde_json::from_reader(File::open(Path::new(source))?)?;
    let f = spec.build()?;
    if f.size() != n {
        return Err(Error::DimensionMismatch { expected: n, got: f.size() });
    }
    Ok(f)
}

pub fn load_povm(source: &str, e: &SymmetricEnsemble, seed: u64) -> Result<Povm> {
    let n = e.state_count();
    let parse_seed = |s: &str| {
        s.parse::<u64>()
            .map_err(|_| Error::Format(format!("bad POVM seed {s:?}")))
    };
    match source {
        "eq20" | "symmetric" => Ok(symmetric_povm(e)),
        "uniform" => Povm::trivial(n),
        "covariant" | "covariant-random" => random_covariant_povm(n, seed),
        s if s.starts_with("covariant:") => random_covariant_povm(n, parse_seed(&s[10..])?),
        s if s.starts_with("random:") => random_povm(n, parse_seed(&s[7..])?),
        path => {
            let p: Povm = serde_json::from_reader(File::open(Path::new(path))?)?;
            if p.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: p.len() });
            }
            Ok(p)
        }
    }
}

/// Key/value rows for CSV output of scalar reports.
fn write_pairs<W: Write>(out: &mut W, seed: u64, pairs: &[(&str, f64)]) -> Result<()> {
    writeln!(out, "# seed={seed}")?;
    writeln!(out, "quantity,value")?;
    for (k, v) in pairs {
        writeln!(out, "{k},{}", fmt17(*v))?;
    }
    Ok(())
}

fn write_json<W: Write, T: Serialize>(out: &mut W, value: &T) -> Result<()> {
    out.write_all(to_json_string(value)?.as_bytes())?;
    Ok(())
}

#[derive(Serialize)]
struct Header<'a> {
    command: Command,
    #[serde(rename = "M")]
    half_count: usize,
    r: f64,
    theta: f64,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    merit: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    povm: Option<&'a str>,
}

fn header<'a>(c: &'a RunConfig, merit: bool, povm: bool) -> Header<'a> {
    Header {
        command: c.command,
        half_count: c.half_count,
        r: c.r,
        theta: c.theta,
        seed: c.seed,
        merit: merit.then_some(c.merit.as_str()),
        povm: povm.then_some(c.povm.as_str()),
    }
}

fn cmd_ensemble<W: Write>(c: &RunConfig, out: &mut W) -> Result<Status> {
    #[derive(Serialize)]
    struct State {
        index: usize,
        azimuth: f64,
        bloch: [f64; 3],
    }
    #[derive(Serialize)]
    struct Report<'a> {
        #[serde(flatten)]
        header: Header<'a>,
        #[serde(rename = "N")]
        n: usize,
        states: Vec<State>,
    }
    let e = c.ensemble()?;
    let states: Vec<State> = (0..e.state_count())
        .map(|i| State {
            index: i,
            azimuth: e.azimuth(i),
            bloch: e.bloch(i).as_array(),
        })
        .collect();
    match c.format() {
        Format::Json => write_json(
            out,
            &Report {
                header: header(c, false, false),
                n: e.state_count(),
                states,
            },
        )?,
        Format::Csv => {
            writeln!(out, "# seed={}", c.seed)?;
            writeln!(out, "index,azimuth,x,y,z")?;
            for s in states {
                writeln!(
                    out,
                    "{},{},{},{},{}",
                    s.index,
                    fmt17(s.azimuth),
                    fmt17(s.bloch[0]),
                    fmt17(s.bloch[1]),
                    fmt17(s.bloch[2])
                )?;
            }
        }
    }
    Ok(Status::Success)
}

fn cmd_bound<W: Write>(c: &RunConfig, out: &mut W) -> Result<Status> {
    #[derive(Serialize)]
    struct Report<'a> {
        #[serde(flatten)]
        header: Header<'a>,
        #[serde(flatten)]
        bound: crate::nosignal::BoundReport,
        region: crate::nosignal::AdmissibleRegion,
    }
    let e = c.ensemble()?;
    let bound = guessing_bound(&e);
    let region = admissible_region(&e);
    match c.format() {
        Format::Json => write_json(
            out,
            &Report {
                header: header(c, false, false),
                bound,
                region,
            },
        )?,
        Format::Csv => write_pairs(
            out,
            c.seed,
            &[
                ("bound", bound.bound),
                ("p", bound.p),
                ("sum_p", bound.sum_p),
                ("alpha_min", region.alpha_min),
                ("alpha_max", region.alpha_max),
                ("beta_min", region.beta_min),
                ("beta_max", region.beta_max),
            ],
        )?,
    }
    Ok(Status::Success)
}

fn cmd_channel<W: Write>(c: &RunConfig, out: &mut W) -> Result<Status> {
    #[derive(Serialize)]
    struct Report<'a> {
        #[serde(flatten)]
        header: Header<'a>,
        #[serde(flatten)]
        channel: ChannelMatrix,
    }
    let e = c.ensemble()?;
    let channel = channel_from_measurement(&load_povm(&c.povm, &e, c.seed)?, &e)?;
    match c.format() {
        Format::Json => write_json(
            out,
            &Report {
                header: header(c, false, true),
                channel,
            },
        )?,
        Format::Csv => write_channel_csv(&channel, Some(c.seed), out)?,
    }
    Ok(Status::Success)
}

fn cmd_fit<W: Write>(c: &RunConfig, out: &mut W) -> Result<Status> {
    #[derive(Serialize)]
    struct Report<'a> {
        #[serde(flatten)]
        header: Header<'a>,
        #[serde(flatten)]
        fit: crate::discriminator::CosineFit,
        verdict: &'static str,
        nosignaling_residual: f64,
    }
    let e = c.ensemble()?;
    let channel = symmetrize(&channel_from_measurement(&load_povm(&c.povm, &e, c.seed)?, &e)?);
    let fit = fit_cosine_form(&channel, &e)?;
    let verdict = check_channel_admissible(&channel, &e)?.name();
    let nosignaling_residual = check_nosignaling_constraint(&channel, &e)?;
    match c.format() {
        Format::Json => write_json(
            out,
            &Report {
                header: header(c, false, true),
                fit,
                verdict,
                nosignaling_residual,
            },
        )?,
        Format::Csv => write_pairs(
            out,
            c.seed,
            &[
                ("alpha", fit.alpha),
                ("beta", fit.beta),
                ("residual", fit.residual),
                ("nosignaling_residual", nosignaling_residual),
            ],
        )?,
    }
    Ok(Status::Success)
}

fn cmd_score<W: Write>(c: &RunConfig, out: &mut W) -> Result<Status> {
    #[derive(Serialize)]
    struct Report<'a> {
        #[serde(flatten)]
        header: Header<'a>,
        #[serde(flatten)]
        report: crate::merit::ScoreReport,
        q_score: f64,
        monotonous: bool,
    }
    let e = c.ensemble()?;
    let f = load_merit(&c.merit, e.state_count())?;
    let channel = channel_from_measurement(&load_povm(&c.povm, &e, c.seed)?, &e)?;
    let report = score(&channel, &f, &e.priors())?;
    let q_score = score(&q_channel(&e), &f, &e.priors())?.score;
    match c.format() {
        Format::Json => write_json(
            out,
            &Report {
                header: header(c, true, true),
                report,
                q_score,
                monotonous: is_monotonous(&f),
            },
        )?,
        Format::Csv => write_pairs(out, c.seed, &[("score", report.score), ("q_score", q_score)])?,
    }
    Ok(Status::Success)
}

fn cmd_optimize<W: Write>(c: &RunConfig, out: &mut W) -> Result<Status> {
    #[derive(Serialize)]
    struct Report<'a> {
        #[serde(flatten)]
        header: Header<'a>,
        method: Method,
        options: GeneralOptions,
        q_score: f64,
        #[serde(flatten)]
        result: OptimizationResult,
    }
    let e = c.ensemble()?;
    let f = load_merit(&c.merit, e.state_count())?;
    let options = c.optimizer_options();
    let result = match c.method {
        Method::General => optimize_general(&e, &f, &options)?,
        Method::Covariant => optimize_covariant(&e, &f)?,
    };
    let q_score = score(&q_channel(&e), &f, &e.priors())?.score;
    debug!("optimizer finished after {} iterations", result.iterations);
    match c.format() {
        Format::Json => write_json(
            out,
            &Report {
                header: header(c, true, false),
                method: c.method,
                options,
                q_score,
                result,
            },
        )?,
        Format::Csv => {
            writeln!(out, "# seed={}", c.seed)?;
            writeln!(out, "iteration,score")?;
            for (i, s) in result.trace.iter().enumerate() {
                writeln!(out, "{i},{}", fmt17(*s))?;
            }
        }
    }
    Ok(Status::Success)
}

/// One named identity check of `verify`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance,
            pass: value <= tolerance,
        }
    }

    fn holds(name: impl Into<String>, ok: bool) -> Self {
        Self {
            name: name.into(),
            value: if ok { 0.0 } else { 1.0 },
            tolerance: 0.0,
            pass: ok,
        }
    }
}

/// Every identity check for one ensemble, seeded for the random parts.
pub fn verification_checks(e: &SymmetricEnsemble, seed: u64, samples: usize) -> Result<Vec<Check>> {
    let n = e.state_count();
    let big_m = e.half_count();
    let priors = e.priors();
    let mut checks = Vec::new();

    let decomposition = (1..big_m)
        .map(|m| verify_decomposition_identity(e, m))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    checks.push(Check::at_most("decomposition_identity", decomposition, 1e-12));

    if !e.is_degenerate() {
        let sd = make_shadow_decomposition(e)?;
        checks.push(Check::at_most("shadow_decomposition", sd.residual(e), 1e-12));
    }

    let bound = guessing_bound(e).bound;
    let closed = (1.0 + e.transverse_radius()) / n as f64;
    checks.push(Check::at_most("bound_closed_form", (bound - closed).abs(), 1e-14));

    let q = q_channel(e);
    checks.push(Check::at_most("eq20_channel_equals_q", verify_optimal_channel(e)?, 1e-12));
    checks.push(Check::at_most("q_diagonal_equals_bound", (q.get(0, 0) - bound).abs(), 1e-14));
    checks.push(Check::holds(
        "q_admissible",
        check_channel_admissible(&q, e)?.name() == "admissible",
    ));
    checks.push(Check::at_most("q_nosignaling", check_nosignaling_constraint(&q, e)?, 1e-12));

    if big_m == 1 {
        let helstrom = helstrom_guess_probability(e.state(0), e.state(1));
        checks.push(Check::at_most("helstrom_agreement", (bound - helstrom).abs(), 1e-12));
    }

    let orthogonal = big_m == 1 && (e.transverse_radius() - 1.0).abs() <= 1e-15;
    if !orthogonal {
        checks.push(Check::holds(
            "identity_signals",
            check_channel_admissible(&ChannelMatrix::identity(n), e)?.name() == "violates_bound",
        ));
    }

    let region = admissible_region(e);
    let mut fit_residual: f64 = 0.0;
    let mut constraint_residual: f64 = 0.0;
    let mut decomposition_outcomes: f64 = 0.0;
    let mut invariance_gap: f64 = 0.0;
    let mut above_bound = 0usize;
    let mut below_mirror = 0usize;
    for k in 0..samples as u64 {
        let s = seed.wrapping_mul(1_000_003).wrapping_add(k);
        let cov = channel_from_measurement(&random_covariant_povm(n, s)?, e)?;
        let sym = symmetrize(&cov);
        let fit = fit_cosine_form(&sym, e)?;
        fit_residual = fit_residual.max(fit.residual);
        // alpha < 0 is a legitimate anti-discriminating measurement, so only
        // |alpha| <= alpha_max is enforced here.
        if fit.alpha > region.alpha_max + 1e-10 {
            above_bound += 1;
        }
        if fit.alpha < -region.alpha_max - 1e-10 {
            below_mirror += 1;
        }
        let generic = random_povm(n, s)?;
        let raw = channel_from_measurement(&generic, e)?;
        constraint_residual = constraint_residual.max(check_nosignaling_constraint(&raw, e)?);
        for m in 1..big_m {
            let (l, r) = crate::discriminator::decomposition_outcomes(&generic, e, m, 0)?;
            let gap = l.iter().zip(&r).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            decomposition_outcomes = decomposition_outcomes.max(gap);
        }
        let profile: Vec<f64> = (0..n).map(|d| ((s as f64 + 1.0) * (d.min(n - d) as f64 + 0.5)).sin()).collect();
        let f = make_fom(&profile)?;
        let (a, b) = check_score_invariance(&raw, &f, &priors)?;
        invariance_gap = invariance_gap.max((a - b).abs());
    }
    if samples > 0 {
        checks.push(Check::at_most("cosine_form_universality", fit_residual, 1e-10));
        checks.push(Check::at_most("fits_respect_bound", above_bound as f64, 0.0));
        checks.push(Check::at_most("fits_respect_mirror_bound", below_mirror as f64, 0.0));
        checks.push(Check::at_most("measurement_nosignaling", constraint_residual, 1e-12));
        checks.push(Check::at_most("decomposition_indistinguishable", decomposition_outcomes, 1e-10));
        checks.push(Check::at_most("score_invariance", invariance_gap, 1e-12));
    }

    let mi_q = mutual_information(&q, &priors)?;
    let best_inner = (0..100)
        .map(|k| {
            let lambda = k as f64 / 100.0;
            ChannelMatrix::mix(lambda, &q, &ChannelMatrix::uniform(n))
                .and_then(|c| mutual_information(&c, &priors))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    checks.push(Check::at_most("information_peaks_at_q", (best_inner - mi_q).max(0.0), 1e-12));
    Ok(checks)
}

fn cmd_verify<W: Write>(c: &RunConfig, out: &mut W) -> Result<Status> {
    #[derive(Serialize)]
    struct Report<'a> {
        #[serde(flatten)]
        header: Header<'a>,
        pass: bool,
        checks: Vec<Check>,
    }
    let e = c.ensemble()?;
    let checks = verification_checks(&e, c.seed, c.samples.unwrap_or(100))?;
    let pass = checks.iter().all(|ch| ch.pass);
    for ch in checks.iter().filter(|ch| !ch.pass) {
        eprintln!("check {} failed: {:e} > {:e}", ch.name, ch.value, ch.tolerance);
    }
    match c.format() {
        Format::Json => write_json(
            out,
            &Report {
                header: header(c, false, false),
                pass,
                checks,
            },
        )?,
        Format::Csv => {
            writeln!(out, "# seed={}", c.seed)?;
            writeln!(out, "check,value,tolerance,pass")?;
            for ch in &checks {
                writeln!(out, "{},{},{},{}", ch.name, fmt17(ch.value), fmt17(ch.tolerance), ch.pass)?;
            }
        }
    }
    Ok(if pass { Status::Success } else { Status::VerificationFailed })
}

/// Closed-form quantities at one grid point.
pub fn sweep_point(m: usize, r: f64, theta: f64, merit: &str) -> Result<Vec<SweepRow>> {
    let e = make_symmetric_ensemble(m, r, theta)?;
    let priors = e.priors();
    let f = load_merit(merit, e.state_count())?;
    let q = q_channel(&e);
    let bound = guessing_bound(&e);
    let region = admissible_region(&e);
    let fit = fit_cosine_form(&q, &e)?;
    let mut values = vec![
        ("bound", bound.bound),
        ("p", bound.p),
        ("q_diagonal", q.get(0, 0)),
        ("eq20_residual", verify_optimal_channel(&e)?),
        ("alpha_max", region.alpha_max),
        ("beta_min", region.beta_min),
        ("beta_max", region.beta_max),
        ("q_alpha", fit.alpha),
        ("q_beta", fit.beta),
        ("q_score", score(&q, &f, &priors)?.score),
        ("q_mutual_information", mutual_information(&q, &priors)?),
    ];
    if m == 1 {
        values.push(("helstrom", helstrom_guess_probability(e.state(0), e.state(1))));
    }
    Ok(values
        .into_iter()
        .map(|(quantity, value)| SweepRow {
            half_count: m,
            r,
            theta,
            quantity: quantity.to_string(),
            value,
        })
        .collect())
}

fn cmd_sweep<W: Write>(c: &RunConfig, out: &mut W) -> Result<Status> {
    let grid = c.grid.clone().unwrap_or_default();
    let mut points = Vec::new();
    for &m in &grid.half_counts {
        for &r in &grid.r {
            for &t in &grid.theta {
                points.push((m, r, t));
            }
        }
    }
    let rows: Vec<SweepRow> = points
        .par_iter()
        .map(|&(m, r, t)| sweep_point(m, r, t, &c.merit))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    match c.format() {
        Format::Csv => write_sweep_csv(&rows, c.seed, out)?,
        Format::Json => {
            #[derive(Serialize)]
            struct Row<'a> {
                #[serde(rename = "M")]
                m: usize,
                r: f64,
                theta: f64,
                quantity: &'a str,
                value: f64,
            }
            #[derive(Serialize)]
            struct Report<'a> {
                seed: u64,
                merit: &'a str,
                rows: Vec<Row<'a>>,
            }
            write_json(
                out,
                &Report {
                    seed: c.seed,
                    merit: &c.merit,
                    rows: rows
                        .iter()
                        .map(|r| Row {
                            m: r.half_count,
                            r: r.r,
                            theta: r.theta,
                            quantity: &r.quantity,
                            value: r.value,
                        })
                        .collect(),
                },
            )?
        }
    }
    Ok(Status::Success)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_string(cfg: &RunConfig) -> (Status, String) {
        let mut buf = Vec::new();
        let status = run_to(cfg, &mut buf).unwrap();
        (status, String::from_utf8(buf).unwrap())
    }

    #[test]
    fn parameter_ranges_enforced() {
        let mut cfg = RunConfig::new(Command::Bound);
        cfg.half_count = 33;
        assert!(cfg.validate().is_err());
        cfg.half_count = 0;
        assert!(cfg.validate().is_err());
        cfg.half_count = 2;
        cfg.theta = 4.0;
        assert!(cfg.validate().is_err());
        cfg.theta = 1.0;
        cfg.r = -0.5;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn default_formats() {
        assert_eq!(RunConfig::new(Command::Channel).format(), Format::Csv);
        assert_eq!(RunConfig::new(Command::Bound).format(), Format::Json);
    }

    #[test]
    fn bound_json_contains_seed_and_bound() {
        let cfg = RunConfig::new(Command::Bound);
        let (status, text) = run_string(&cfg);
        assert_eq!(status, Status::Success);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["seed"], 0);
        assert!((v["bound"].as_f64().unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn povm_sources() {
        let e = make_symmetric_ensemble(2, 0.9, 1.0).unwrap();
        assert_eq!(load_povm("eq20", &e, 0).unwrap(), symmetric_povm(&e));
        assert_eq!(load_povm("covariant:7", &e, 0).unwrap(), random_covariant_povm(4, 7).unwrap());
        assert_eq!(load_povm("covariant-random", &e, 7).unwrap(), random_covariant_povm(4, 7).unwrap());
        assert!(load_povm("covariant:x", &e, 0).is_err());
        assert!(load_povm("/nonexistent/povm.json", &e, 0).is_err());
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn verify_passes_and_is_deterministic() {
        let mut cfg = RunConfig::new(Command::Verify);
        cfg.half_count = 3;
        cfg.r = 0.7;
        cfg.theta = 1.0471976;
        cfg.samples = Some(20);
        let (status, a) = run_string(&cfg);
        assert_eq!(status, Status::Success, "{a}");
        let (_, b) = run_string(&cfg);
        assert_eq!(a, b);
    }

    #[test]
    fn sweep_rows_are_long_format() {
        let mut cfg = RunConfig::new(Command::Sweep);
        cfg.grid = Some(Grid {
            half_counts: vec![1, 2],
            r: vec![1.0],
            theta: vec![FRAC_PI_2],
        });
        let (_, text) = run_string(&cfg);
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("# seed=0"));
        assert_eq!(lines.next(), Some("M,r,theta,quantity,value"));
        let bound_rows: Vec<&str> = text.lines().filter(|l| l.contains(",bound,")).collect();
        assert_eq!(bound_rows.len(), 2);
        assert!(bound_rows[1].starts_with("2,"));
    }
}
