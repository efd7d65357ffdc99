//! Command-line front end for `hemipwi`.
//!
//! Every command writes its outputs under an `--out` prefix together with a
//! `<prefix>.json` sidecar holding the parsed command. `replay` re-runs a
//! sidecar and must reproduce the outputs byte for byte.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use hemipwi::coverage::{self, angle_grid, sweep, sweep_csv, SweepConfig};
use hemipwi::density::{self, DensityGrid, Pattern};
use hemipwi::oracles::{analytic_phi, analytic_rho, SingleAxisProtocol};
use hemipwi::return_plot::{ReturnHistogram, ReturnPlotParams, Seeding};
use hemipwi::sidecar::{Sidecar, TOOL, VERSION};
use hemipwi::{accumulate, CutParam, Protocol, PwiMap};

/// Relative tolerance of the single-axis oracle check.
pub const ORACLE_TOLERANCE: f64 = 0.05;

/// Map steps beyond which a run is flagged as long-running.
const LONG_RUN_STEPS: f64 = 5e10;

#[derive(Parser, Debug)]
#[command(name = "hemipwi", version, about = "Exceptional-set analysis for the hemispherical-shell piecewise isometry")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Coloured exceptional set on the Lambert disk.
    Render(RenderArgs),
    /// Scalar pattern advected forward by the map.
    Mix(MixArgs),
    /// Binned return histogram on the sided line parameter.
    Returnplot(ReturnPlotArgs),
    /// Fractional coverage by the direct and/or density method.
    Coverage(CoverageArgs),
    /// Both coverage estimators over an (alpha, beta) grid.
    Sweep(SweepArgs),
    /// Single-axis protocol against its closed-form density.
    OracleCheck(OracleArgs),
    /// Re-run the command recorded in a sidecar.
    Replay(ReplayArgs),
}

#[derive(Args, Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolArgs {
    /// Rotation about z, degrees in [0, 180).
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: f64,
    /// Rotation about x, degrees in [0, 180).
    #[arg(long, allow_negative_numbers = true)]
    pub beta: f64,
}

impl ProtocolArgs {
    fn protocol(&self) -> hemipwi::Result<Protocol> {
        Protocol::from_degrees(self.alpha, self.beta)
    }
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputArgs {
    /// Output path prefix.
    #[arg(long, default_value = "hemipwi")]
    pub out: PathBuf,
    /// Worker threads, 0 for all cores. Outputs do not depend on it.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenderArgs {
    #[command(flatten)]
    pub protocol: ProtocolArgs,
    #[arg(long, default_value_t = 1e-3)]
    pub eps: f64,
    #[arg(long, default_value_t = 20_000)]
    pub iters: u64,
    /// Pixels per side of the equal-area grid.
    #[arg(long, default_value_t = 1024)]
    pub grid: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixArgs {
    #[command(flatten)]
    pub protocol: ProtocolArgs,
    /// angle, height, angle-bands:<n> or checker:<n>.
    #[arg(long, default_value = "angle-bands:4", value_parser = parse_pattern)]
    pub pattern: Pattern,
    #[arg(long, default_value_t = 1000)]
    pub iters: u64,
    #[arg(long, default_value_t = 512)]
    pub grid: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReturnPlotArgs {
    #[command(flatten)]
    pub protocol: ProtocolArgs,
    #[arg(long, default_value_t = 1e-3)]
    pub eps: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub delta: f64,
    #[arg(long, default_value_t = 20_000)]
    pub iters: u64,
    /// Bins over the sided parameter; must be even.
    #[arg(long, default_value_t = 1000)]
    pub bins: usize,
    #[arg(long, default_value_t = 10)]
    pub seeds_per_bin: usize,
    /// Random seed offsets within each bin instead of the lattice.
    #[arg(long)]
    pub jitter_seed: Option<u64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Direct,
    Density,
    Both,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageArgs {
    #[command(flatten)]
    pub protocol: ProtocolArgs,
    #[arg(long, value_enum, default_value_t = Method::Both)]
    pub method: Method,
    #[arg(long, default_value_t = 1e-3)]
    pub eps: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub delta: f64,
    #[arg(long, default_value_t = 20_000)]
    pub iters: u64,
    /// Seeds along the two lines for the density method.
    #[arg(long, default_value_t = 2000)]
    pub seeds: usize,
    /// Grid resolution for the direct method.
    #[arg(long, default_value_t = 1024)]
    pub grid: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepArgs {
    /// Angles per axis.
    #[arg(long, default_value_t = 5)]
    pub coarse: usize,
    #[arg(long, default_value_t = 30.0)]
    pub lo: f64,
    #[arg(long, default_value_t = 150.0)]
    pub hi: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub eps: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub delta: f64,
    #[arg(long, default_value_t = 20_000)]
    pub iters: u64,
    #[arg(long, default_value_t = 2000)]
    pub seeds: usize,
    #[arg(long, default_value_t = 1024)]
    pub grid: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[group(id = "angle", required = true, multiple = false, args = ["phi_rad", "phi_rat"])]
pub struct OracleArgs {
    /// Irrational rotation angle in radians.
    #[arg(long)]
    pub phi_rad: Option<f64>,
    /// Rational rotation pi * p / q.
    #[arg(long, num_args = 2, value_names = ["P", "Q"])]
    pub phi_rat: Option<Vec<u64>>,
    #[arg(long, default_value_t = 1e-3)]
    pub eps: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub delta: f64,
    /// Near-rational rotations need long orbits before counts settle.
    #[arg(long, default_value_t = 1_000_000)]
    pub iters: u64,
    /// Heights sampled evenly in [-0.9, 0.9].
    #[arg(long, default_value_t = 100)]
    pub heights: usize,
    #[arg(long, default_value_t = 400)]
    pub seeds: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplayArgs {
    pub sidecar: PathBuf,
    /// New output prefix; defaults to the recorded one.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Override the recorded worker count.
    #[arg(long)]
    pub workers: Option<usize>,
}

fn parse_pattern(s: &str) -> Result<Pattern, String> {
    let (name, arg) = match s.split_once(':') {
        Some((n, a)) => (n, Some(a.parse::<u32>().map_err(|e| format!("bad count in {s:?}: {e}"))?)),
        None => (s, None),
    };
    match (name, arg) {
        ("angle", None) => Ok(Pattern::Angle),
        ("height", None) => Ok(Pattern::Height),
        ("angle-bands", n) => Ok(Pattern::AngleBands { bands: n.unwrap_or(4) }),
        ("checker", n) => Ok(Pattern::Checker { cells: n.unwrap_or(8) }),
        _ => Err(format!("unknown pattern {s:?}")),
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] hemipwi::Error),
    #[error("oracle check failed: {0}")]
    OracleFailed(String),
    #[error("cannot replay: {0}")]
    Replay(String),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        use hemipwi::Error as E;
        match self {
            CliError::Core(e) => match e {
                E::BoundaryPoint(_) => "boundary_point",
                E::OutsideDisk { .. } => "outside_disk",
                E::UndefinedDirection => "undefined_direction",
                E::InvalidProtocol { .. } => "invalid_protocol",
                E::InvalidCutParam(_) => "invalid_cut_param",
                E::InvalidArgument(_) => "invalid_argument",
                E::Io(_) => "io",
                E::Json(_) => "json",
            },
            CliError::OracleFailed(_) => "oracle_failed",
            CliError::Replay(_) => "replay",
        }
    }

    pub fn to_json(&self) -> Value {
        json!({ "error": { "kind": self.kind(), "message": self.to_string() } })
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// `<prefix>.<ext>`, keeping any dots already in the prefix.
fn with_ext(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_os_string();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

fn warn_if_long(steps: f64) {
    if steps > LONG_RUN_STEPS {
        eprintln!("warning: about {steps:.1e} map steps, this will take a long time");
    }
}

/// Writes `files` and the sidecar next to them; returns the sidecar results.
fn finish(cmd: &Command, output: &OutputArgs, files: Vec<(PathBuf, Vec<u8>)>, results: Value) -> CliResult<Value> {
    if let Some(dir) = output.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(hemipwi::Error::from)?;
    }
    let mut sidecar = Sidecar::new(cmd.name(), serde_json::to_value(cmd).map_err(hemipwi::Error::from)?);
    for (path, bytes) in &files {
        std::fs::write(path, bytes).map_err(hemipwi::Error::from)?;
        sidecar.outputs.push(file_name(path));
    }
    sidecar.results = results.clone();
    sidecar.write(with_ext(&output.out, "json"))?;
    Ok(results)
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Render(_) => "render",
            Command::Mix(_) => "mix",
            Command::Returnplot(_) => "returnplot",
            Command::Coverage(_) => "coverage",
            Command::Sweep(_) => "sweep",
            Command::OracleCheck(_) => "oracle-check",
            Command::Replay(_) => "replay",
        }
    }

    fn output_mut(&mut self) -> Option<&mut OutputArgs> {
        match self {
            Command::Render(a) => Some(&mut a.output),
            Command::Mix(a) => Some(&mut a.output),
            Command::Returnplot(a) => Some(&mut a.output),
            Command::Coverage(a) => Some(&mut a.output),
            Command::Sweep(a) => Some(&mut a.output),
            Command::OracleCheck(a) => Some(&mut a.output),
            Command::Replay(_) => None,
        }
    }
}

/// Runs one command and returns its summary.
pub fn run(cmd: &Command) -> CliResult<Value> {
    match cmd {
        Command::Render(a) => render(cmd, a),
        Command::Mix(a) => mix(cmd, a),
        Command::Returnplot(a) => returnplot(cmd, a),
        Command::Coverage(a) => coverage(cmd, a),
        Command::Sweep(a) => run_sweep(cmd, a),
        Command::OracleCheck(a) => oracle_check(cmd, a),
        Command::Replay(a) => replay(a),
    }
}

fn render(cmd: &Command, a: &RenderArgs) -> CliResult<Value> {
    let prot = a.protocol.protocol()?;
    warn_if_long((a.grid * a.grid) as f64 * a.iters as f64);
    let grid = DensityGrid::compute(prot, a.eps, a.iters, a.grid, a.output.workers)?;
    let check = grid.ergodicity_check(20);
    let results = json!({
        "covered_fraction": grid.covered_fraction(),
        "invalid_pixels": grid.invalid_in_disk(),
        "stats": check.stats,
        "non_ergodic": check.non_ergodic,
    });
    let files = vec![
        (with_ext(&a.output.out, "ppm"), grid.render().to_ppm()),
        (with_ext(&a.output.out, "grid"), grid.to_csv().into_bytes()),
    ];
    finish(cmd, &a.output, files, results)
}

fn mix(cmd: &Command, a: &MixArgs) -> CliResult<Value> {
    let prot = a.protocol.protocol()?;
    warn_if_long((a.grid * a.grid) as f64 * a.iters as f64);
    let field = density::advect_pattern(prot, a.iters, a.pattern, a.grid, a.output.workers)?;
    let results = json!({ "flagged_pixels": field.flagged() });
    let files = vec![(with_ext(&a.output.out, "ppm"), field.render().to_ppm())];
    finish(cmd, &a.output, files, results)
}

fn returnplot(cmd: &Command, a: &ReturnPlotArgs) -> CliResult<Value> {
    let params = ReturnPlotParams {
        protocol: a.protocol.protocol()?,
        eps: a.eps,
        delta: a.delta,
        bins: a.bins,
        seeds_per_bin: a.seeds_per_bin,
        iterations: a.iters,
        seeding: match a.jitter_seed {
            Some(seed) => Seeding::Jittered { seed },
            None => Seeding::Lattice,
        },
    };
    warn_if_long((a.bins * a.seeds_per_bin) as f64 * a.iters as f64);
    let h = ReturnHistogram::build(params, a.output.workers)?;
    let results = json!({
        "empty_fraction": h.empty_fraction(),
        "substituted": h.substituted,
        "dropped": h.dropped,
    });
    let files = vec![
        (with_ext(&a.output.out, "ppm"), h.log_render().to_ppm()),
        (with_ext(&a.output.out, "csv"), h.to_csv().into_bytes()),
    ];
    finish(cmd, &a.output, files, results)
}

fn coverage(cmd: &Command, a: &CoverageArgs) -> CliResult<Value> {
    let prot = a.protocol.protocol()?;
    let mut results = serde_json::Map::new();
    if matches!(a.method, Method::Direct | Method::Both) {
        warn_if_long((a.grid * a.grid) as f64 * a.iters as f64);
        let e = coverage::phi_direct(prot, a.eps, a.iters, a.grid, a.output.workers)?;
        results.insert("direct".into(), serde_json::to_value(e).map_err(hemipwi::Error::from)?);
    }
    if matches!(a.method, Method::Density | Method::Both) {
        let e = coverage::phi_density(prot, a.eps, a.delta, a.iters, a.seeds, a.output.workers)?;
        results.insert("density".into(), serde_json::to_value(e).map_err(hemipwi::Error::from)?);
    }
    finish(cmd, &a.output, Vec::new(), Value::Object(results))
}

fn run_sweep(cmd: &Command, a: &SweepArgs) -> CliResult<Value> {
    let angles = angle_grid(a.lo, a.hi, a.coarse);
    let cfg = SweepConfig {
        eps: a.eps,
        delta: a.delta,
        iterations: a.iters,
        seeds: a.seeds,
        resolution: a.grid,
        workers: a.output.workers,
    };
    warn_if_long((angles.len() * angles.len() * a.grid * a.grid) as f64 * a.iters as f64);
    let rows = sweep(&angles, &angles, &cfg);
    let diffs: Vec<f64> = rows.iter().filter_map(|r| r.abs_diff()).collect();
    let results = json!({
        "rows": rows.len(),
        "failed": rows.iter().filter(|r| r.error.is_some()).count(),
        "within_0.05": diffs.iter().filter(|&&d| d <= 0.05).count(),
        "wall_ms": rows.iter().map(|r| r.wall_ms).collect::<Vec<_>>(),
    });
    let files = vec![(with_ext(&a.output.out, "csv"), sweep_csv(&rows).into_bytes())];
    finish(cmd, &a.output, files, results)
}

fn oracle_check(cmd: &Command, a: &OracleArgs) -> CliResult<Value> {
    let single = match (&a.phi_rad, &a.phi_rat) {
        (Some(phi), None) => SingleAxisProtocol::Irrational { phi: *phi },
        (None, Some(pq)) if pq.len() == 2 => SingleAxisProtocol::rational(pq[0], pq[1])?,
        _ => return Err(hemipwi::Error::InvalidArgument("give exactly one of --phi-rad, --phi-rat".into()).into()),
    };
    let prot = single.protocol()?;
    let map = PwiMap::new(prot);
    let phi = coverage::phi_density(prot, a.eps, a.delta, a.iters, a.seeds, a.output.workers)?.phi;
    let want_phi = analytic_phi(single);

    let mut failures = Vec::new();
    let mut worst_rho = 0.0f64;
    if let SingleAxisProtocol::Irrational { .. } = single {
        // per-line density along the orbit through the rim point at height z
        for k in 0..a.heights {
            let z = if a.heights == 1 { 0.0 } else { -0.9 + 1.8 * k as f64 / (a.heights - 1) as f64 };
            let theta = CutParam::new(z.asin().rem_euclid(std::f64::consts::TAU))?;
            let (n1, n2) = accumulate(&map, map.param_point(theta, a.delta)?, a.eps, a.iters)?;
            let want = analytic_rho(z, a.eps)?;
            for n in [n1, n2] {
                let rel = (n as f64 / (a.iters + 1) as f64 / want - 1.0).abs();
                worst_rho = worst_rho.max(rel);
            }
        }
        if worst_rho > ORACLE_TOLERANCE {
            failures.push(format!("density off by {worst_rho:.4} relative"));
        }
    }
    if (phi - want_phi).abs() > ORACLE_TOLERANCE {
        failures.push(format!("coverage {phi:.4}, expected {want_phi}"));
    }
    let results = json!({
        "phi": single.phi(),
        "coverage": phi,
        "expected_coverage": want_phi,
        "worst_density_error": worst_rho,
        "tolerance": ORACLE_TOLERANCE,
        "pass": failures.is_empty(),
    });
    finish(cmd, &a.output, Vec::new(), results.clone())?;
    if failures.is_empty() {
        Ok(results)
    } else {
        Err(CliError::OracleFailed(failures.join("; ")))
    }
}

fn replay(a: &ReplayArgs) -> CliResult<Value> {
    let sidecar = Sidecar::read(&a.sidecar)?;
    if sidecar.tool != TOOL {
        return Err(CliError::Replay(format!("sidecar was written by {:?}", sidecar.tool)));
    }
    if sidecar.version != VERSION {
        eprintln!("warning: sidecar from version {}, running {VERSION}", sidecar.version);
    }
    let mut cmd: Command = serde_json::from_value(sidecar.config).map_err(hemipwi::Error::from)?;
    if cmd.name() != sidecar.command || matches!(cmd, Command::Replay(_)) {
        return Err(CliError::Replay(format!("unexpected command {:?}", sidecar.command)));
    }
    let output = cmd.output_mut().expect("replay was excluded above");
    if let Some(out) = &a.out {
        output.out = out.clone();
    }
    if let Some(w) = a.workers {
        output.workers = w;
    }
    run(&cmd)
}

/// Parses a full argument list, program name first.
pub fn parse<I, T>(args: I) -> Result<Command, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    Cli::try_parse_from(args).map(|c| c.command)
}

/// Parses `args`, runs the command and returns the process exit code.
///
/// Summaries go to stdout and errors to stderr, both as JSON.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let command = match parse(args) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return 0;
        }
        Err(e) => {
            let err = json!({ "error": { "kind": "usage", "message": e.to_string() } });
            eprintln!("{err}");
            return 2;
        }
    };
    match run(&command) {
        Ok(v) => {
            println!("{v}");
            0
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            1
        }
    }
}
