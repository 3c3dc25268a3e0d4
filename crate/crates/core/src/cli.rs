//! Command-line front end: `solve`, `moments`, `mc` and `check`.
//!
//! Settings come from built-in defaults, then an optional TOML file, then flags.
//! Exit codes: 0 success, 2 input error, 3 validation failure.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::check::{plant_fault, run_checks, CheckOptions, McCheck};
use crate::hierarchy::{extend_with, ExtendOptions, HierarchicalSolution};
use crate::moments::MomentTrajectory;
use crate::montecarlo::{self, InitialState, WfConfig};
use crate::polynomial::{MultiIndex, SimplexPolynomial};
use crate::scalar::{Rational, Scalar};
use crate::simplex::embed_point;
use crate::spectral::ModeCache;

pub const EXIT_OK: u8 = 0;
pub const EXIT_INPUT: u8 = 2;
pub const EXIT_VALIDATION: u8 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "wf-hierarchy",
    version,
    about = "Wright-Fisher forward equation on the closed simplex"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Solve,
    Moments,
    Mc,
    Check,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Extend initial data to every face and write densities, masses and moments.
    Solve(RunArgs),
    /// Closed-form moment trajectories only.
    Moments(RunArgs),
    /// Discrete Wright-Fisher simulation.
    Mc(RunArgs),
    /// Run every validation suite.
    Check(RunArgs),
}

impl Command {
    fn parts(&self) -> (CommandKind, &RunArgs) {
        match self {
            Command::Solve(a) => (CommandKind::Solve, a),
            Command::Moments(a) => (CommandKind::Moments, a),
            Command::Mc(a) => (CommandKind::Mc, a),
            Command::Check(a) => (CommandKind::Check, a),
        }
    }
}

#[derive(ValueEnum, Serialize, Deserialize, Debug, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Arithmetic {
    Rational,
    Double,
}

#[derive(ValueEnum, Serialize, Deserialize, Debug, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug, Clone, Default)]
pub struct RunArgs {
    /// Simplex dimension (number of alleles minus one).
    #[arg(long)]
    pub n: Option<usize>,
    /// Initial density, e.g. "3/2 * x1^2 - x2 + 1".
    #[arg(long)]
    pub f: Option<String>,
    /// Comma-separated evaluation times.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub t: Option<Vec<f64>>,
    /// Largest moment order |α|.
    #[arg(long)]
    pub moments: Option<u32>,
    #[arg(long, value_enum)]
    pub mode: Option<Arithmetic>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub paths: Option<usize>,
    #[arg(long = "pop-size")]
    pub pop_size: Option<u64>,
    /// Fixed starting frequencies x0,…,xn for `mc` instead of sampling from f.
    #[arg(long, value_delimiter = ',')]
    pub start: Option<Vec<f64>>,
    /// Output directory; reports go to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Density table resolution: chart points k/grid.
    #[arg(long)]
    pub grid: Option<u32>,
    /// TOML file with any of the settings above; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Print the resolved settings and exit.
    #[arg(long)]
    pub explain: bool,
    #[arg(long, hide = true)]
    pub inject_fault: bool,
}

/// Settings accepted in a config file.
#[derive(Deserialize, Debug, Default, Clone)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub n: Option<usize>,
    pub f: Option<String>,
    pub t: Option<Vec<f64>>,
    pub moments: Option<u32>,
    pub mode: Option<Arithmetic>,
    pub seed: Option<u64>,
    pub paths: Option<usize>,
    pub pop_size: Option<u64>,
    pub start: Option<Vec<f64>>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub grid: Option<u32>,
}

/// Fully resolved settings for one run.
#[derive(Serialize, Debug, Clone, PartialEq)]
pub struct RunSettings {
    #[serde(skip)]
    pub command: CommandKind,
    pub n: usize,
    pub f: String,
    pub t: Vec<f64>,
    pub moments: u32,
    pub mode: Arithmetic,
    pub seed: u64,
    pub paths: usize,
    pub pop_size: u64,
    pub start: Option<Vec<f64>>,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub grid: u32,
    #[serde(skip)]
    pub inject_fault: bool,
}

/// Invalid command-line input (exit code 2).
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct InputError(pub String);

fn input(msg: impl Into<String>) -> anyhow::Error {
    InputError(msg.into()).into()
}

pub const DEFAULT_F: &str = "1";
pub const DEFAULT_T: [f64; 3] = [0.1, 1.0, 5.0];
pub const DEFAULT_MOMENTS: u32 = 4;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_PATHS: usize = 10_000;
pub const DEFAULT_POP_SIZE: u64 = 1000;
pub const DEFAULT_GRID: u32 = 10;

impl RunSettings {
    pub fn resolve(command: CommandKind, args: &RunArgs) -> Result<Self> {
        let file = match &args.config {
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                toml::from_str::<FileConfig>(&text).map_err(|e| input(format!("{}: {e}", path.display())))?
            }
            None => FileConfig::default(),
        };
        let n = args.n.or(file.n).ok_or_else(|| input("--n is required"))?;
        let settings = RunSettings {
            command,
            n,
            f: args.f.clone().or(file.f).unwrap_or_else(|| DEFAULT_F.to_string()),
            t: args.t.clone().or(file.t).unwrap_or_else(|| DEFAULT_T.to_vec()),
            moments: args.moments.or(file.moments).unwrap_or(DEFAULT_MOMENTS),
            mode: args.mode.or(file.mode).unwrap_or(Arithmetic::Rational),
            seed: args.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            paths: args.paths.or(file.paths).unwrap_or(DEFAULT_PATHS),
            pop_size: args.pop_size.or(file.pop_size).unwrap_or(DEFAULT_POP_SIZE),
            start: args.start.clone().or(file.start),
            out: args.out.clone().or(file.out),
            format: args.format.or(file.format).unwrap_or(Format::Json),
            grid: args.grid.or(file.grid).unwrap_or(DEFAULT_GRID),
            inject_fault: args.inject_fault,
        };
        settings.validate()?;
        Ok(settings)
    }

    fn validate(&self) -> Result<()> {
        if self.t.is_empty() {
            return Err(input("--t needs at least one time"));
        }
        if let Some(t) = self.t.iter().find(|t| t.is_nan() || **t < 0.0 || !t.is_finite()) {
            return Err(input(format!("time {t} must be finite and nonnegative")));
        }
        if self.grid == 0 {
            return Err(input("--grid must be positive"));
        }
        Ok(())
    }

    /// `key = value` lines for `--explain`.
    pub fn explain(&self) -> String {
        let times: Vec<String> = self.t.iter().map(|t| t.to_string()).collect();
        let mut s = String::new();
        let _ = writeln!(s, "command  = {:?}", self.command);
        let _ = writeln!(s, "n        = {}", self.n);
        let _ = writeln!(s, "f        = {:?}  (default {DEFAULT_F:?})", self.f);
        let _ = writeln!(s, "t        = {}  (default 0.1,1,5)", times.join(","));
        let _ = writeln!(s, "moments  = {}  (default {DEFAULT_MOMENTS})", self.moments);
        let _ = writeln!(s, "mode     = {:?}  (default Rational)", self.mode);
        let _ = writeln!(s, "seed     = {}  (default {DEFAULT_SEED})", self.seed);
        let _ = writeln!(s, "paths    = {}  (default {DEFAULT_PATHS})", self.paths);
        let _ = writeln!(s, "pop_size = {}  (default {DEFAULT_POP_SIZE})", self.pop_size);
        let _ = writeln!(s, "start    = {:?}  (default: sample from f)", self.start);
        let _ = writeln!(s, "out      = {:?}  (default: stdout)", self.out);
        let _ = writeln!(s, "format   = {:?}  (default Json)", self.format);
        let _ = writeln!(s, "grid     = {}  (default {DEFAULT_GRID})", self.grid);
        s
    }
}

/// Exit code for an error escaping [`run`].
pub fn exit_code_for(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<InputError>().is_some() || err.downcast_ref::<crate::Error>().is_some() {
        EXIT_INPUT
    } else {
        1
    }
}

/// Executes a parsed command, writing reports to `stdout`.
pub fn run(cli: &Cli, stdout: &mut dyn Write) -> Result<u8> {
    let (kind, args) = cli.command.parts();
    let settings = RunSettings::resolve(kind, args)?;
    if args.explain {
        stdout.write_all(settings.explain().as_bytes())?;
        return Ok(EXIT_OK);
    }
    match settings.mode {
        Arithmetic::Rational => dispatch::<Rational>(&settings, stdout),
        Arithmetic::Double => dispatch::<f64>(&settings, stdout),
    }
}

fn dispatch<S: Scalar>(settings: &RunSettings, stdout: &mut dyn Write) -> Result<u8> {
    let f = SimplexPolynomial::<S>::parse(&settings.f, settings.n)?;
    match settings.command {
        CommandKind::Solve => cmd_solve(settings, &f, stdout),
        CommandKind::Moments => cmd_moments(settings, &f, stdout),
        CommandKind::Mc => cmd_mc(settings, &f.to_f64(), stdout),
        CommandKind::Check => cmd_check(settings, &f, stdout),
    }
}

fn emit(settings: &RunSettings, name: &str, contents: &str, stdout: &mut dyn Write) -> Result<()> {
    match &settings.out {
        Some(dir) => write_file(dir, name, contents),
        None => Ok(stdout.write_all(contents.as_bytes())?),
    }
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
}

fn cache_for<S: Scalar>(settings: &RunSettings) -> Result<ModeCache<S>> {
    let cache = ModeCache::new();
    if settings.inject_fault {
        plant_fault(&cache, settings.n)?;
    }
    Ok(cache)
}

#[derive(Serialize)]
struct FaceMassRow {
    face: Vec<usize>,
    dim: usize,
    t: f64,
    mass: f64,
}

#[derive(Serialize)]
struct MomentRow {
    t: f64,
    alpha: Vec<u32>,
    value: f64,
}

#[derive(Serialize)]
struct SolveSummary {
    n: usize,
    arithmetic: String,
    resonances: usize,
    face_masses: Vec<FaceMassRow>,
    moments: Vec<MomentRow>,
}

fn face_masses<S: Scalar>(u: &HierarchicalSolution<S>, times: &[f64]) -> Vec<FaceMassRow> {
    let mut rows = Vec::new();
    for &t in times {
        for sol in u.faces() {
            rows.push(FaceMassRow {
                face: sol.face().indices(),
                dim: sol.face().dim(),
                t,
                mass: sol.mass().eval(t),
            });
        }
    }
    rows
}

fn hierarchy_moments<S: Scalar>(u: &HierarchicalSolution<S>, times: &[f64], order: u32) -> Result<Vec<MomentRow>> {
    let alphas = MultiIndex::all_up_to(u.n(), order);
    let profiles: Vec<_> = alphas.iter().map(|a| u.moment(a)).collect::<Result<_, _>>()?;
    let mut rows = Vec::new();
    for &t in times {
        for (alpha, p) in alphas.iter().zip(&profiles) {
            rows.push(MomentRow {
                t,
                alpha: alpha.to_dense(u.n()),
                value: p.eval(t),
            });
        }
    }
    Ok(rows)
}

fn join_u32(v: &[u32]) -> String {
    v.iter().map(u32::to_string).collect::<Vec<_>>().join(";")
}

fn join_usize(v: &[usize]) -> String {
    v.iter().map(usize::to_string).collect::<Vec<_>>().join(";")
}

fn face_mass_csv(rows: &[FaceMassRow]) -> String {
    let mut s = String::from("face,dim,t,mass\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{},{}", join_usize(&r.face), r.dim, r.t, r.mass);
    }
    s
}

fn moment_csv(rows: &[MomentRow]) -> String {
    let mut s = String::from("t,alpha,value\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{}", r.t, join_u32(&r.alpha), r.value);
    }
    s
}

/// Densities at chart points `k/grid` of every face.
fn density_csv<S: Scalar>(u: &HierarchicalSolution<S>, times: &[f64], grid: u32) -> Result<String> {
    let mut s = String::from("face,t,coords,density\n");
    for &t in times {
        for sol in u.faces() {
            let face = sol.face();
            let k = face.dim();
            let density = sol.density_at(t);
            for point in MultiIndex::all_up_to(k, grid).into_iter().filter(|a| a.order() <= grid) {
                let coords: Vec<f64> = point.to_dense(k).iter().map(|&c| c as f64 / grid as f64).collect();
                embed_point(u.n(), face, &coords)?;
                let label = coords.iter().map(f64::to_string).collect::<Vec<_>>().join(";");
                let _ = writeln!(
                    s,
                    "{},{t},{label},{}",
                    join_usize(&face.indices()),
                    density.eval(&coords)
                );
            }
        }
    }
    Ok(s)
}

fn cmd_solve<S: Scalar>(settings: &RunSettings, f: &SimplexPolynomial<S>, stdout: &mut dyn Write) -> Result<u8> {
    let cache = cache_for::<S>(settings)?;
    let u = extend_with(f, settings.n, &ExtendOptions::default(), &cache)?;
    let masses = face_masses(&u, &settings.t);
    let moments = hierarchy_moments(&u, &settings.t, settings.moments)?;
    if let Some(dir) = &settings.out {
        write_file(dir, "solution.json", &serde_json::to_string_pretty(&u.to_json())?)?;
        write_file(dir, "densities.csv", &density_csv(&u, &settings.t, settings.grid)?)?;
        write_file(dir, "face_masses.csv", &face_mass_csv(&masses))?;
        write_file(dir, "moments.csv", &moment_csv(&moments))?;
    }
    match settings.format {
        Format::Json => {
            let summary = SolveSummary {
                n: settings.n,
                arithmetic: S::NAME.to_string(),
                resonances: u.resonances().len(),
                face_masses: masses,
                moments,
            };
            writeln!(stdout, "{}", serde_json::to_string_pretty(&summary)?)?;
        }
        Format::Csv => {
            stdout.write_all(face_mass_csv(&masses).as_bytes())?;
        }
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct MomentJson {
    alpha: Vec<u32>,
    values: Vec<f64>,
    profile: Vec<crate::hierarchy::AtomJson>,
}

fn cmd_moments<S: Scalar>(settings: &RunSettings, f: &SimplexPolynomial<S>, stdout: &mut dyn Write) -> Result<u8> {
    let traj = MomentTrajectory::from_initial_data(f, settings.moments)?;
    match settings.format {
        Format::Csv => emit(settings, "moments.csv", &traj.to_csv(&settings.t), stdout)?,
        Format::Json => {
            let rows: Vec<MomentJson> = traj
                .entries()
                .map(|(alpha, p)| MomentJson {
                    alpha: alpha.to_dense(settings.n),
                    values: settings.t.iter().map(|&t| p.eval(t)).collect(),
                    profile: p
                        .atoms()
                        .map(|(&(rate, power), c)| crate::hierarchy::AtomJson {
                            lambda: rate.to_f64(),
                            power,
                            coeff: c.to_text(),
                        })
                        .collect(),
                })
                .collect();
            let doc = serde_json::json!({ "n": settings.n, "t": settings.t, "moments": rows });
            emit(
                settings,
                "moments.json",
                &format!("{}\n", serde_json::to_string_pretty(&doc)?),
                stdout,
            )?;
        }
    }
    Ok(EXIT_OK)
}

fn cmd_mc(settings: &RunSettings, f: &SimplexPolynomial<f64>, stdout: &mut dyn Write) -> Result<u8> {
    let initial = match &settings.start {
        Some(x) => InitialState::Fixed(x.clone()),
        None => InitialState::Density(f.clone()),
    };
    let mut reports = Vec::with_capacity(settings.t.len());
    for &t in &settings.t {
        let config = WfConfig {
            pop_size: settings.pop_size,
            n: settings.n,
            horizon_t: t,
            paths: settings.paths,
            seed: settings.seed,
            initial: initial.clone(),
            max_moment_order: settings.moments,
        };
        reports.push(montecarlo::run(&config)?);
    }
    match settings.format {
        Format::Json => emit(
            settings,
            "mc_report.json",
            &format!("{}\n", serde_json::to_string_pretty(&reports)?),
            stdout,
        )?,
        Format::Csv => {
            let mut s = String::from("t,kind,key,value,se\n");
            for r in &reports {
                for line in r.to_csv().lines().skip(1) {
                    let _ = writeln!(s, "{},{line}", r.horizon_t);
                }
            }
            emit(settings, "mc_report.csv", &s, stdout)?;
        }
    }
    Ok(EXIT_OK)
}

fn cmd_check<S: Scalar>(settings: &RunSettings, f: &SimplexPolynomial<S>, stdout: &mut dyn Write) -> Result<u8> {
    let cache = cache_for::<S>(settings)?;
    let opts = CheckOptions {
        moment_order: settings.moments,
        t_grid: settings.t.clone(),
        seed: settings.seed,
        mc: Some(McCheck {
            pop_size: settings.pop_size,
            paths: settings.paths,
            seed: settings.seed,
            ..McCheck::default()
        }),
        ..CheckOptions::default()
    };
    let report = run_checks(f, &opts, &cache)?;
    if let Some(dir) = &settings.out {
        match settings.format {
            Format::Json => write_file(dir, "check_report.json", &serde_json::to_string_pretty(&report)?)?,
            Format::Csv => {
                let mut s = String::from("suite,cases,max_residual,passed,skipped\n");
                for r in &report.suites {
                    let _ = writeln!(
                        s,
                        "{},{},{},{},{}",
                        r.name, r.cases, r.max_residual, r.passed, r.skipped
                    );
                }
                write_file(dir, "check_report.csv", &s)?;
            }
        }
    }
    writeln!(stdout, "{report}")?;
    Ok(if report.passed() { EXIT_OK } else { EXIT_VALIDATION })
}
