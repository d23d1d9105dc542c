//! Command-line experiment runner.
//!
//! Every subcommand writes CSV with a `#`-prefixed metadata header. A JSON
//! config file may supply any long flag by name (`{"seed": 7, "map": "ppt"}`);
//! flags given on the command line take precedence.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::circuit::{Ansatz, HypersphericalState, ShotPolicy, StatePreparation, FIG2_INIT};
use crate::detect::{
    sample_budget, ved_deterministic, ved_probabilistic, ved_reduction_direct, vlne,
    DetectionReport, NegativityReport, VedSettings, DEFAULT_DELTA_EXACT, DEFAULT_DELTA_SAMPLED,
};
use crate::error::Error;
use crate::maps::{MapKind, QuasiDecomposition};
use crate::optimize::OptimizerConfig;
use crate::oracle::{
    log_negativity_exact, min_eig_curve, min_eig_exact, threshold_scan, Crossing, Family,
};
use crate::rng;
use crate::states::{self, DensityMatrix};

/// Environment variable that caps the worker-thread count.
pub const THREADS_ENV: &str = "VED_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "ved",
    version,
    about = "Variational entanglement detection experiments"
)]
#[command(args_override_self = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one detection and write the loss trajectory.
    Detect(DetectArgs),
    /// Estimate log-negativity, optionally over a parameter grid.
    Quantify(QuantifyArgs),
    /// Exact minimal-eigenvalue curves and zero crossings.
    Oracle(OracleArgs),
    /// Detection over a parameter grid next to the exact curve.
    Scan(ScanArgs),
    /// Sampling cost γ and sample budget M per map.
    Budget(BudgetArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptimizerKind {
    Gd,
    Adam,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StateKind {
    Bell,
    Mes,
    Isotropic,
    Breuer,
    Product,
    Random,
    File,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    Isotropic,
    Breuer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Deterministic,
    Probabilistic,
    ReductionDirect,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnsatzKind {
    /// Two-qubit circuit with three angles.
    Fig2,
    /// Layers of U3 rotations and a CNOT ring.
    Layered,
    /// Direct unit-vector parameterization.
    Hyperspherical,
}

/// `start:stop:step`, inclusive of `stop` when it lands on the grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..count)
            .map(|i| {
                let x = self.start + i as f64 * self.step;
                ((x * 1e12).round() / 1e12).min(self.stop)
            })
            .collect()
    }
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, c] = parts.as_slice() else {
            return Err(format!("expected start:stop:step, got {s:?}"));
        };
        let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"));
        let grid = Grid {
            start: num(a)?,
            stop: num(b)?,
            step: num(c)?,
        };
        if grid.step.is_nan() || grid.step <= 0.0 || grid.stop < grid.start {
            return Err(format!("grid {s:?} needs step > 0 and stop >= start"));
        }
        Ok(grid)
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RunArgs {
    /// Run seed; every random draw derives from it.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Shots per circuit evaluation; 0 evaluates exactly.
    #[arg(long, default_value_t = 0)]
    pub shots: u32,
    /// Loss margin; defaults to 0.05 exact and 0.1 with sampling.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Failure probability per sampled loss evaluation.
    #[arg(long, default_value_t = 0.05)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 200)]
    pub max_iters: usize,
    /// Repetitions of the layered ansatz block.
    #[arg(long, default_value_t = 2)]
    pub ansatz_depth: usize,
    /// Learning rate; defaults to 0.5 for gd and 0.1 for adam.
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long, value_enum, default_value_t = OptimizerKind::Gd)]
    pub optimizer: OptimizerKind,
    /// Independent random starts; defaults to 1 for detection and 3 for
    /// log-negativity estimation.
    #[arg(long)]
    pub attempts: Option<usize>,
    /// Test-state parameterization; chosen from the state dimension if absent.
    #[arg(long, value_enum)]
    pub ansatz: Option<AnsatzKind>,
}

impl RunArgs {
    fn optimizer_config(&self) -> Result<OptimizerConfig, CliError> {
        if self.max_iters == 0 {
            return Err(CliError::Config("--max-iters must be at least 1".into()));
        }
        let cfg = match self.optimizer {
            OptimizerKind::Gd => {
                OptimizerConfig::gradient_descent(self.lr.unwrap_or(0.5), self.max_iters)
            }
            OptimizerKind::Adam => OptimizerConfig::adam(self.lr.unwrap_or(0.1), self.max_iters),
        };
        if !(cfg.learning_rate > 0.0 && cfg.learning_rate.is_finite()) {
            return Err(CliError::Config(format!(
                "--lr must be positive, got {}",
                cfg.learning_rate
            )));
        }
        Ok(cfg)
    }

    fn delta(&self, sampled: bool) -> Result<f64, CliError> {
        let d = self.delta.unwrap_or(if sampled {
            DEFAULT_DELTA_SAMPLED
        } else {
            DEFAULT_DELTA_EXACT
        });
        if !(d > 0.0 && d.is_finite()) {
            return Err(CliError::Config(format!(
                "--delta must be positive, got {d}"
            )));
        }
        Ok(d)
    }

    fn attempts(&self, default: usize) -> Result<usize, CliError> {
        match self.attempts.unwrap_or(default) {
            0 => Err(CliError::Config("--attempts must be at least 1".into())),
            a => Ok(a),
        }
    }

    fn settings(&self, sampled: bool, seed: u64) -> Result<VedSettings, CliError> {
        Ok(VedSettings::new(
            self.optimizer_config()?,
            self.delta(sampled || self.shots > 0)?,
            ShotPolicy::with_shots(self.shots, rng::derive(seed, &[0x5407])),
            seed,
        )
        .with_attempts(self.attempts(1)?))
    }

    fn depth(&self) -> Result<usize, CliError> {
        if self.ansatz_depth == 0 {
            return Err(CliError::Config("--ansatz-depth must be at least 1".into()));
        }
        Ok(self.ansatz_depth)
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct StateArgs {
    #[arg(long, value_enum, default_value_t = StateKind::Bell)]
    pub state: StateKind,
    /// Qubits on each side.
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    /// Local dimension for `mes` and `isotropic`; 3 selects qutrits.
    #[arg(long, default_value_t = 2)]
    pub local_dim: usize,
    /// Isotropic mixing weight.
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
    /// Breuer family parameter.
    #[arg(long, default_value_t = 0.75)]
    pub lambda: f64,
    /// Seed for `product` and `random` states.
    #[arg(long, default_value_t = 0)]
    pub state_seed: u64,
    /// JSON state file for `--state file`.
    #[arg(long)]
    pub state_file: Option<PathBuf>,
}

impl StateArgs {
    fn build(&self, param: Option<f64>) -> Result<DensityMatrix, CliError> {
        let qudit = match self.local_dim {
            2 => false,
            3 => true,
            d => {
                return Err(CliError::Config(format!(
                    "--local-dim must be 2 or 3, got {d}"
                )))
            }
        };
        if self.n == 0 || self.n > 3 {
            return Err(CliError::Config(format!(
                "--n must be in 1..=3, got {}",
                self.n
            )));
        }
        let side = if qudit { 3 } else { 1 << self.n };
        let r = match self.state {
            StateKind::Bell => Ok(states::bell()),
            StateKind::Mes if qudit => Ok(states::mes_qudit(3)),
            StateKind::Mes => Ok(states::mes(self.n)),
            StateKind::Isotropic if qudit => states::isotropic_qudit(3, param.unwrap_or(self.p)),
            StateKind::Isotropic => states::isotropic(self.n, param.unwrap_or(self.p)),
            StateKind::Breuer => states::breuer_literal(param.unwrap_or(self.lambda)),
            StateKind::Product => Ok(states::random_product(side, side, self.state_seed)),
            StateKind::Random => Ok(states::random_bipartite(side, side, self.state_seed)),
            StateKind::File => {
                let path = self
                    .state_file
                    .as_ref()
                    .ok_or_else(|| CliError::Config("--state file needs --state-file".into()))?;
                DensityMatrix::load_json(path)
            }
        };
        r.map_err(|e| CliError::Config(e.to_string()))
    }

    fn family(&self) -> Result<Family, CliError> {
        match (self.state, self.local_dim) {
            (StateKind::Isotropic, 2) => Ok(Family::Isotropic { n: self.n }),
            (StateKind::Breuer, _) => Ok(Family::Breuer),
            _ => Err(CliError::Config(
                "a parameter grid needs --state isotropic (qubits) or --state breuer".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OutputArgs {
    /// CSV destination; stdout if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the full result as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// JSON file of default flag values.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DetectArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    pub state: StateArgs,
    #[arg(long, default_value = "reduction", value_parser = parse_map)]
    pub map: MapKind,
    #[arg(long, value_enum, default_value_t = Mode::Deterministic)]
    pub mode: Mode,
    /// Keep optimizing after the loss drops below −δ.
    #[arg(long)]
    pub no_early_stop: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct QuantifyArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    pub state: StateArgs,
    /// Sweep the family parameter over `start:stop:step`.
    #[arg(long)]
    pub p_grid: Option<Grid>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OracleArgs {
    #[arg(long, value_enum, default_value_t = FamilyKind::Isotropic)]
    pub family: FamilyKind,
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    #[arg(long, value_delimiter = ',', default_value = "ppt,reduction,enhanced", value_parser = parse_map)]
    pub map: Vec<MapKind>,
    /// Number of evenly spaced parameters in [0, 1].
    #[arg(long, default_value_t = 101)]
    pub grid: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ScanArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long, value_enum, default_value_t = FamilyKind::Isotropic)]
    pub family: FamilyKind,
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    #[arg(long, value_delimiter = ',', default_value = "ppt,reduction", value_parser = parse_map)]
    pub map: Vec<MapKind>,
    #[arg(long, default_value = "0:1:0.2")]
    pub p_grid: Grid,
    #[arg(long, value_enum, default_value_t = Mode::Deterministic)]
    pub mode: Mode,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BudgetArgs {
    #[arg(long, value_delimiter = ',', default_value = "ppt,reduction,reduction-tp,choi", value_parser = parse_map)]
    pub map: Vec<MapKind>,
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    #[arg(long, default_value_t = DEFAULT_DELTA_SAMPLED)]
    pub delta: f64,
    #[arg(long, default_value_t = 0.05)]
    pub epsilon: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

fn parse_map(s: &str) -> Result<MapKind, String> {
    s.parse::<MapKind>().map_err(|e| e.to_string())
}

impl FamilyKind {
    fn family(self, n: usize) -> Result<Family, CliError> {
        match self {
            FamilyKind::Isotropic if (1..=3).contains(&n) => Ok(Family::Isotropic { n }),
            FamilyKind::Isotropic => {
                Err(CliError::Config(format!("--n must be in 1..=3, got {n}")))
            }
            FamilyKind::Breuer => Ok(Family::Breuer),
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config or inputs: exit code 2.
    Config(String),
    /// Failure while running: exit code 1.
    Runtime(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Runtime(e) => write!(f, "error: {e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Runtime(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Runtime(Error::Io(e))
    }
}

fn config_error(e: Error) -> CliError {
    CliError::Config(e.to_string())
}

/// Inserts flags from `--config <file>` right after the subcommand so that
/// explicit flags, parsed later, win.
pub fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let mut path = None;
    for (i, a) in args.iter().enumerate() {
        let s = a.to_string_lossy();
        if s == "--config" {
            path = args.get(i + 1).map(PathBuf::from);
        } else if let Some(p) = s.strip_prefix("--config=") {
            path = Some(PathBuf::from(p));
        }
    }
    let Some(path) = path else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let serde_json::Value::Object(map) = value else {
        return Err(CliError::Config(format!(
            "{} must hold a JSON object",
            path.display()
        )));
    };
    let mut injected = Vec::new();
    for (key, v) in map {
        let flag = format!("--{}", key.replace('_', "-"));
        match v {
            serde_json::Value::Bool(true) => injected.push(flag.into()),
            serde_json::Value::Bool(false) | serde_json::Value::Null => {}
            serde_json::Value::String(s) => injected.extend([flag.into(), s.into()]),
            serde_json::Value::Number(n) => injected.extend([flag.into(), n.to_string().into()]),
            serde_json::Value::Array(items) => {
                let joined: Vec<String> = items
                    .iter()
                    .map(|x| {
                        x.as_str()
                            .map(str::to_string)
                            .unwrap_or_else(|| x.to_string())
                    })
                    .collect();
                injected.extend([flag.into(), joined.join(",").into()]);
            }
            serde_json::Value::Object(_) => {
                return Err(CliError::Config(format!(
                    "config key {key:?} has a nested object"
                )));
            }
        }
    }
    let sub = args
        .iter()
        .skip(1)
        .position(|a| !a.to_string_lossy().starts_with('-'))
        .map(|i| i + 2)
        .unwrap_or(args.len());
    let mut out = args[..sub].to_vec();
    out.extend(injected);
    out.extend_from_slice(&args[sub..]);
    Ok(out)
}

struct Sink {
    inner: Box<dyn Write>,
}

impl Sink {
    fn open(path: Option<&PathBuf>) -> Result<Self, CliError> {
        let inner: Box<dyn Write> = match path {
            Some(p) => Box::new(BufWriter::new(File::create(p)?)),
            None => Box::new(io::stdout()),
        };
        Ok(Self { inner })
    }

    fn header(
        &mut self,
        command: &str,
        config: &impl Serialize,
        extra: &[(&str, String)],
    ) -> Result<(), CliError> {
        writeln!(self.inner, "# ved {}", env!("CARGO_PKG_VERSION"))?;
        writeln!(self.inner, "# command: {command}")?;
        let cfg = serde_json::to_string(config).map_err(Error::from)?;
        writeln!(self.inner, "# config: {cfg}")?;
        for (k, v) in extra {
            writeln!(self.inner, "# {k}: {v}")?;
        }
        Ok(())
    }

    fn comment(&mut self, key: &str, value: impl std::fmt::Display) -> Result<(), CliError> {
        writeln!(self.inner, "# {key}: {value}")?;
        Ok(())
    }

    fn row(&mut self, fields: &[String]) -> Result<(), CliError> {
        writeln!(self.inner, "{}", fields.join(","))?;
        self.inner.flush()?;
        Ok(())
    }
}

fn write_json(path: Option<&PathBuf>, value: &impl Serialize) -> Result<(), CliError> {
    if let Some(p) = path {
        let text = serde_json::to_string_pretty(value).map_err(Error::from)?;
        std::fs::write(p, text + "\n")?;
    }
    Ok(())
}

fn fmt(x: f64) -> String {
    format!("{x}")
}

fn test_state(
    kind: Option<AnsatzKind>,
    dim: usize,
    depth: usize,
) -> Result<Box<dyn StatePreparation>, CliError> {
    let qubits = dim.is_power_of_two().then(|| dim.trailing_zeros() as usize);
    let kind = kind.unwrap_or(match qubits {
        Some(2) => AnsatzKind::Fig2,
        Some(_) => AnsatzKind::Layered,
        None => AnsatzKind::Hyperspherical,
    });
    let prep: Box<dyn StatePreparation> = match (kind, qubits) {
        (AnsatzKind::Fig2, Some(2)) => Box::new(Ansatz::fig2()),
        (AnsatzKind::Layered, Some(w)) if w >= 2 => {
            Box::new(Ansatz::layered(w, depth).map_err(config_error)?)
        }
        (AnsatzKind::Hyperspherical, _) => {
            Box::new(HypersphericalState::new(dim).map_err(config_error)?)
        }
        (k, _) => {
            return Err(CliError::Config(format!(
                "ansatz {k:?} does not fit a {dim}-dimensional state"
            )))
        }
    };
    Ok(prep)
}

fn run_detection(
    rho: &DensityMatrix,
    decomp: &QuasiDecomposition,
    prep: &dyn StatePreparation,
    mode: Mode,
    settings: &VedSettings,
    epsilon: f64,
) -> Result<DetectionReport, CliError> {
    Ok(match mode {
        Mode::Deterministic => ved_deterministic(rho, decomp, prep, settings)?,
        Mode::Probabilistic => ved_probabilistic(rho, decomp, prep, settings, epsilon)?,
        Mode::ReductionDirect => ved_reduction_direct(rho, prep, settings)?,
    })
}

fn check_mode(mode: Mode, map: MapKind) -> Result<(), CliError> {
    if mode == Mode::ReductionDirect && map != MapKind::Reduction {
        return Err(CliError::Config(
            "--mode reduction-direct requires --map reduction".into(),
        ));
    }
    Ok(())
}

fn detect(args: &DetectArgs) -> Result<(), CliError> {
    check_mode(args.mode, args.map)?;
    let rho = args.state.build(None)?;
    let decomp = args.map.decomposition_for(&rho).map_err(config_error)?;
    let prep = test_state(args.run.ansatz, rho.dim(), args.run.depth()?)?;
    let sampled = args.mode == Mode::Probabilistic;
    let mut settings = args
        .run
        .settings(sampled, args.run.seed)?
        .with_early_stop(!args.no_early_stop);
    if prep.param_count() == FIG2_INIT.len() && args.run.ansatz != Some(AnsatzKind::Hyperspherical)
    {
        settings = settings.with_init(FIG2_INIT.to_vec());
    }
    let mut extra = vec![
        ("seed", args.run.seed.to_string()),
        ("gamma", fmt(decomp.gamma())),
    ];
    if sampled {
        let m = sample_budget(decomp.gamma(), settings.delta, args.run.epsilon)
            .map_err(config_error)?;
        extra.push(("budget", m.to_string()));
    }
    let report = run_detection(
        &rho,
        &decomp,
        prep.as_ref(),
        args.mode,
        &settings,
        args.run.epsilon,
    )?;
    let mut sink = Sink::open(args.output.out.as_ref())?;
    sink.header("detect", args, &extra)?;
    sink.row(&["iteration".into(), "loss".into()])?;
    for (i, l) in report.loss_trajectory.iter().enumerate() {
        sink.row(&[i.to_string(), fmt(*l)])?;
    }
    sink.comment("final_loss", fmt(report.final_loss))?;
    sink.comment("verdict", format!("{:?}", report.verdict).to_lowercase())?;
    if let Some(floor) = report.confidence_floor {
        sink.comment("confidence_floor", fmt(floor))?;
    }
    write_json(args.output.json.as_ref(), &report)
}

fn negativity_ansatz(rho: &DensityMatrix, depth: usize) -> Result<Ansatz, CliError> {
    let d = rho.dim();
    if !d.is_power_of_two() {
        return Err(CliError::Config(
            "log-negativity estimation needs qubit systems".into(),
        ));
    }
    let width = d.trailing_zeros() as usize + 1;
    if width > 5 {
        return Err(CliError::Config(
            "log-negativity estimation is limited to 2 qubits per side".into(),
        ));
    }
    Ansatz::layered(width, depth).map_err(config_error)
}

#[derive(Serialize)]
struct QuantifyPoint {
    p: Option<f64>,
    exact: f64,
    report: NegativityReport,
}

/// Runs `f` over `items` in parallel batches, handing finished results to
/// `emit` in input order.
fn batched<T: Sync, R: Send>(
    items: &[T],
    f: impl Fn(usize, &T) -> Result<R, CliError> + Sync,
    mut emit: impl FnMut(&R) -> Result<(), CliError>,
) -> Result<Vec<R>, CliError> {
    let batch = rayon::current_num_threads().max(1);
    let mut all = Vec::with_capacity(items.len());
    for (b, chunk) in items.chunks(batch).enumerate() {
        let done: Vec<R> = chunk
            .par_iter()
            .enumerate()
            .map(|(i, x)| f(b * batch + i, x))
            .collect::<Result<_, _>>()?;
        for r in &done {
            emit(r)?;
        }
        all.extend(done);
    }
    Ok(all)
}

fn quantify(args: &QuantifyArgs) -> Result<(), CliError> {
    let params: Vec<Option<f64>> = match &args.p_grid {
        Some(g) => {
            args.state.family()?;
            g.points().into_iter().map(Some).collect()
        }
        None => vec![None],
    };
    let states = params
        .iter()
        .map(|p| args.state.build(*p))
        .collect::<Result<Vec<_>, _>>()?;
    let ansatz = negativity_ansatz(&states[0], args.run.depth()?)?;
    let optimizer = args.run.optimizer_config()?;
    let attempts = args.run.attempts(3)?;
    let delta = args.run.delta(args.run.shots > 0)?;

    let mut sink = Sink::open(args.output.out.as_ref())?;
    sink.header("quantify", args, &[("seed", args.run.seed.to_string())])?;
    sink.row(
        &[
            "p",
            "log_negativity_estimate",
            "log_negativity_exact",
            "beta",
            "l1",
            "iterations",
        ]
        .map(String::from),
    )?;
    let jobs: Vec<(Option<f64>, DensityMatrix)> = params.into_iter().zip(states).collect();
    let points = batched(
        &jobs,
        |i, (p, rho)| {
            let seed = rng::derive(args.run.seed, &[i as u64]);
            let settings = VedSettings::new(
                optimizer,
                delta,
                ShotPolicy::with_shots(args.run.shots, rng::derive(seed, &[0x5407])),
                seed,
            )
            .with_attempts(attempts);
            Ok(QuantifyPoint {
                p: *p,
                exact: log_negativity_exact(rho)?,
                report: vlne(rho, &ansatz, &settings)?,
            })
        },
        |pt| {
            sink.row(&[
                pt.p.map(fmt).unwrap_or_default(),
                fmt(pt.report.log_negativity),
                fmt(pt.exact),
                fmt(pt.report.beta),
                fmt(pt.report.l1),
                pt.report.iterations.to_string(),
            ])
        },
    )?;
    write_json(args.output.json.as_ref(), &points)
}

#[derive(Serialize)]
struct OracleOutput {
    family: String,
    crossings: Vec<(String, Option<f64>)>,
    p: Vec<f64>,
    lambda_min: Vec<(String, Vec<f64>)>,
    log_negativity: Vec<f64>,
}

fn oracle(args: &OracleArgs) -> Result<(), CliError> {
    let family = args.family.family(args.n)?;
    if args.grid < 2 {
        return Err(CliError::Config("--grid must be at least 2".into()));
    }
    let n = family.qubits_per_side();
    let decomps = args
        .map
        .iter()
        .map(|m| m.decomposition(n).map_err(config_error))
        .collect::<Result<Vec<_>, _>>()?;
    let mut crossings = Vec::new();
    let mut curves = Vec::new();
    for (kind, d) in args.map.iter().zip(&decomps) {
        let c = match threshold_scan(family, d) {
            Ok(Crossing::At(p)) => Some(p),
            Ok(Crossing::NoCrossing) | Err(Error::NonMonotone) => None,
            Err(e) => return Err(e.into()),
        };
        crossings.push((kind.name().to_string(), c));
        curves.push((
            kind.name().to_string(),
            min_eig_curve(family, d, args.grid)?,
        ));
    }
    let p: Vec<f64> = (0..args.grid)
        .map(|i| i as f64 / (args.grid - 1) as f64)
        .collect();
    let log_neg = p
        .par_iter()
        .map(|&x| log_negativity_exact(&family.state(x)?))
        .collect::<Result<Vec<f64>, Error>>()?;

    let mut sink = Sink::open(args.output.out.as_ref())?;
    let extra: Vec<(&str, String)> = crossings
        .iter()
        .map(|(m, c)| {
            (
                "crossing",
                format!("{m}={}", c.map(fmt).unwrap_or_else(|| "none".into())),
            )
        })
        .collect();
    sink.header("oracle", args, &extra)?;
    let mut head = vec!["p".to_string()];
    head.extend(
        curves
            .iter()
            .map(|(m, _)| format!("lambda_min_{}", m.replace('-', "_"))),
    );
    head.push("log_negativity".into());
    sink.row(&head)?;
    for (i, x) in p.iter().enumerate() {
        let mut row = vec![fmt(*x)];
        row.extend(curves.iter().map(|(_, c)| fmt(c[i].1)));
        row.push(fmt(log_neg[i]));
        sink.row(&row)?;
    }
    write_json(
        args.output.json.as_ref(),
        &OracleOutput {
            family: family.name(),
            crossings,
            lambda_min: curves
                .into_iter()
                .map(|(m, c)| (m, c.into_iter().map(|(_, l)| l).collect()))
                .collect(),
            p,
            log_negativity: log_neg,
        },
    )
}

#[derive(Serialize)]
struct ScanPoint {
    p: f64,
    map: String,
    oracle_lambda_min: f64,
    report: DetectionReport,
}

fn scan(args: &ScanArgs) -> Result<(), CliError> {
    let family = args.family.family(args.n)?;
    for m in &args.map {
        check_mode(args.mode, *m)?;
    }
    let n = family.qubits_per_side();
    let decomps = args
        .map
        .iter()
        .map(|m| m.decomposition(n).map_err(config_error))
        .collect::<Result<Vec<_>, _>>()?;
    let prep = test_state(args.run.ansatz, 1 << (2 * n), args.run.depth()?)?;
    let sampled = args.mode == Mode::Probabilistic;
    args.run.settings(sampled, args.run.seed)?;

    let mut jobs = Vec::new();
    for p in args.p_grid.points() {
        for (k, d) in args.map.iter().zip(&decomps) {
            jobs.push((p, *k, d));
        }
    }
    let mut extra = vec![("seed", args.run.seed.to_string())];
    for (k, d) in args.map.iter().zip(&decomps) {
        let c = threshold_scan(family, d).ok().and_then(|c| c.value());
        extra.push((
            "crossing",
            format!(
                "{}={}",
                k.name(),
                c.map(fmt).unwrap_or_else(|| "none".into())
            ),
        ));
        extra.push(("gamma", format!("{}={}", k.name(), fmt(d.gamma()))));
    }
    let mut sink = Sink::open(args.output.out.as_ref())?;
    sink.header("scan", args, &extra)?;
    sink.row(
        &[
            "p",
            "map",
            "ved_loss",
            "oracle_lambda_min",
            "verdict",
            "iterations",
        ]
        .map(String::from),
    )?;
    let points = batched(
        &jobs,
        |i, (p, kind, decomp)| {
            let rho = family.state(*p).map_err(config_error)?;
            let settings = args
                .run
                .settings(sampled, rng::derive(args.run.seed, &[i as u64]))?;
            let report = run_detection(
                &rho,
                decomp,
                prep.as_ref(),
                args.mode,
                &settings,
                args.run.epsilon,
            )?;
            Ok(ScanPoint {
                p: *p,
                map: kind.name().to_string(),
                oracle_lambda_min: min_eig_exact(decomp, &rho)?,
                report,
            })
        },
        |pt| {
            sink.row(&[
                fmt(pt.p),
                pt.map.clone(),
                fmt(pt.report.final_loss),
                fmt(pt.oracle_lambda_min),
                format!("{:?}", pt.report.verdict).to_lowercase(),
                pt.report.iterations.to_string(),
            ])
        },
    )?;
    write_json(args.output.json.as_ref(), &points)
}

#[derive(Serialize)]
struct BudgetRow {
    map: String,
    n: usize,
    terms: usize,
    gamma: f64,
    budget: u64,
}

fn budget(args: &BudgetArgs) -> Result<(), CliError> {
    let rows = args
        .map
        .iter()
        .map(|m| {
            let n = if *m == MapKind::Choi { 1 } else { args.n };
            let d = m.decomposition(n).map_err(config_error)?;
            if d.is_empty() {
                return Err(CliError::Config(format!(
                    "{} on {n} qubit(s) is the zero map",
                    m.name()
                )));
            }
            Ok(BudgetRow {
                map: m.name().to_string(),
                n,
                terms: d.len(),
                gamma: d.gamma(),
                budget: sample_budget(d.gamma(), args.delta, args.epsilon).map_err(config_error)?,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut sink = Sink::open(args.output.out.as_ref())?;
    sink.header("budget", args, &[])?;
    sink.row(&["map", "n", "terms", "gamma", "budget"].map(String::from))?;
    for r in &rows {
        sink.row(&[
            r.map.clone(),
            r.n.to_string(),
            r.terms.to_string(),
            fmt(r.gamma),
            r.budget.to_string(),
        ])?;
    }
    write_json(args.output.json.as_ref(), &rows)
}

fn configure_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .parse()
            .map_err(|_| CliError::Config(format!("{THREADS_ENV}={v:?} is not a thread count")))?;
        // a pool built earlier in this process keeps its size
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    Ok(())
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    configure_threads()?;
    match &cli.command {
        Command::Detect(a) => detect(a),
        Command::Quantify(a) => quantify(a),
        Command::Oracle(a) => oracle(a),
        Command::Scan(a) => scan(a),
        Command::Budget(a) => budget(a),
    }
}

/// Parses `args`, runs, and returns the process exit code.
pub fn main_with_args(args: impl IntoIterator<Item = OsString>) -> i32 {
    let args = match expand_config(args.into_iter().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("{e}");
            return e.exit_code();
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        let g: Grid = "0:1:0.1".parse().unwrap();
        let pts = g.points();
        assert_eq!(pts.len(), 11);
        assert_eq!(pts[10], 1.0);
        assert!("0:1".parse::<Grid>().is_err());
        assert!("1:0:0.1".parse::<Grid>().is_err());
        assert!("0:1:0".parse::<Grid>().is_err());
    }

    #[test]
    fn config_flags_are_inserted_before_explicit_ones() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.json");
        std::fs::write(&cfg, r#"{"seed": 3, "map": "ppt", "no_early_stop": true}"#).unwrap();
        let args: Vec<OsString> = [
            "ved",
            "detect",
            "--config",
            cfg.to_str().unwrap(),
            "--seed",
            "9",
        ]
        .iter()
        .map(OsString::from)
        .collect();
        let expanded = expand_config(args).unwrap();
        let cli = Cli::try_parse_from(expanded).unwrap();
        let Command::Detect(d) = cli.command else {
            panic!()
        };
        assert_eq!(d.run.seed, 9);
        assert_eq!(d.map, MapKind::Ppt);
        assert!(d.no_early_stop);
    }

    #[test]
    fn config_errors_exit_two() {
        assert_eq!(
            main_with_args(["ved", "detect", "--map", "nope"].map(OsString::from)),
            2
        );
        assert_eq!(
            main_with_args(["ved", "budget", "--epsilon", "0"].map(OsString::from)),
            2
        );
        assert_eq!(
            main_with_args(
                [
                    "ved",
                    "detect",
                    "--mode",
                    "reduction-direct",
                    "--map",
                    "ppt"
                ]
                .map(OsString::from)
            ),
            2
        );
    }
}
