//! Run configuration from command-line flags and an optional config file.
//!
//! Every setting has a key. The config file is a flat TOML table using the
//! same keys as the long flags (`n = "769x257"`, `f = 3.5`,
//! `sequential = true`); flags override file values. Errors name the
//! offending key.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use helmadr::eikonal::FmOrder;
use helmadr::model::ModelKind;
use helmadr::operators::{BCSpec, BoundaryCondition};
use helmadr::solvers::{Strategy, StrategyConfig};
use helmadr::{GridSpec, Side};

/// Keys accepted in config files and as long flags.
pub const KEYS: &[&str] = &[
    "model",
    "model-file",
    "n",
    "L",
    "f",
    "source",
    "bc",
    "strategy",
    "alpha",
    "beta",
    "tol",
    "restart",
    "max-iters",
    "levels",
    "order",
    "out",
    "ref-factor",
    "sequential",
];

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("`{key}`: {message}")]
    Key { key: String, message: String },
    #[error("config file {path}: {message}")]
    File { path: PathBuf, message: String },
    #[error(transparent)]
    Args(#[from] clap::Error),
}

impl ConfigError {
    fn key(key: &str, message: impl Into<String>) -> Self {
        ConfigError::Key {
            key: key.to_string(),
            message: message.into(),
        }
    }

    /// Name of the offending key, when there is one.
    pub fn offending_key(&self) -> Option<&str> {
        match self {
            ConfigError::Key { key, .. } => Some(key),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Eikonal,
    Solve,
    Compare,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Eikonal => "eikonal",
            Command::Solve => "solve",
            Command::Compare => "compare",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelSource {
    Analytic(ModelKind),
    /// Raw velocity file; the grid comes from its sidecar when present.
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub model: ModelSource,
    pub n: Option<(usize, usize)>,
    /// Physical extent; the benchmark scaling is used when absent.
    pub extent: Option<(f64, f64)>,
    pub f: f64,
    /// Source node; top centre when absent.
    pub source: Option<(usize, usize)>,
    pub bc: BCSpec,
    pub strategies: Vec<Strategy>,
    /// Solver parameters shared by all strategies.
    pub solver: StrategyConfig,
    pub order: FmOrder,
    pub out: PathBuf,
    pub ref_factor: usize,
    pub sequential: bool,
}

impl RunConfig {
    /// Grid for an analytic model, or for a model file without sidecar.
    pub fn grid(&self) -> Result<GridSpec, ConfigError> {
        let (n1, n2) = self.n.ok_or_else(|| ConfigError::key("n", "grid size is required"))?;
        let g = match self.extent {
            Some((l1, l2)) => GridSpec::new(n1, n2, l1, l2),
            None => helmadr::solvers::benchmark_grid(n1, n2),
        };
        g.map_err(|e| ConfigError::key("n", e.to_string()))
    }

    /// Checks that only depend on the grid, for callers that learn the grid late.
    pub fn check_grid(&self, grid: &GridSpec) -> Result<(), ConfigError> {
        if self.command != Command::Eikonal && !grid.can_coarsen() {
            return Err(ConfigError::key(
                "n",
                format!("{}x{} cannot be coarsened; node counts must be odd and at least 5", grid.n1, grid.n2),
            ));
        }
        if let Some((i1, i2)) = self.source {
            if let Err(e) = helmadr::SourceSpec::new(grid, i1, i2, 1.0) {
                return Err(ConfigError::key("source", e.to_string()));
            }
        }
        Ok(())
    }
}

/// `WxH` with positive integers.
pub fn parse_dims(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s
        .trim()
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected WxH, got `{s}`"))?;
    let p = |t: &str| -> Result<usize, String> {
        let v: usize = t.trim().parse().map_err(|_| format!("`{t}` is not a non-negative integer"))?;
        if v == 0 {
            return Err("sizes must be positive".into());
        }
        Ok(v)
    };
    Ok((p(a)?, p(b)?))
}

fn parse_pair<T: std::str::FromStr>(s: &str, what: &str) -> Result<(T, T), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected two comma-separated {what}, got `{s}`"))?;
    let p = |t: &str| t.trim().parse::<T>().map_err(|_| format!("`{}` is not a valid {what}", t.trim()));
    Ok((p(a)?, p(b)?))
}

/// `name`, `constant:K2` or `linear:TOP,BOTTOM`.
pub fn parse_model(s: &str) -> Result<ModelKind, String> {
    let (name, params) = match s.split_once(':') {
        Some((n, p)) => (n.trim(), Some(p)),
        None => (s.trim(), None),
    };
    let kind = ModelKind::from_name(name).map_err(|e| e.to_string())?;
    let positive = |v: f64| {
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(format!("parameter must be positive, got {v}"))
        }
    };
    match (kind, params) {
        (k, None) => Ok(k),
        (ModelKind::Constant { .. }, Some(p)) => {
            let v: f64 = p.trim().parse().map_err(|_| format!("`{p}` is not a number"))?;
            Ok(ModelKind::Constant { kappa_sq: positive(v)? })
        }
        (ModelKind::Linear { .. }, Some(p)) => {
            let (top, bottom) = parse_pair::<f64>(p, "numbers")?;
            Ok(ModelKind::Linear {
                top: positive(top)?,
                bottom: positive(bottom)?,
            })
        }
        (k, Some(_)) => Err(format!("model `{}` takes no parameters", k.name())),
    }
}

/// Comma-separated `side=kind` entries over the free-surface default.
pub fn parse_bc(s: &str) -> Result<BCSpec, String> {
    let mut bc = BCSpec::free_surface();
    for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let (side, kind) = item.split_once('=').ok_or_else(|| format!("expected side=kind, got `{item}`"))?;
        let side: Side = side.trim().parse()?;
        let kind: BoundaryCondition = kind.trim().parse()?;
        bc = bc.with(side, kind);
    }
    Ok(bc)
}

/// One strategy name or `all`.
pub fn parse_strategies(s: &str) -> Result<Vec<Strategy>, String> {
    if s.trim() == "all" {
        return Ok(Strategy::ALL.to_vec());
    }
    let mut out = Vec::new();
    for name in s.split(',').map(str::trim) {
        let st: Strategy = name.parse()?;
        if !out.contains(&st) {
            out.push(st);
        }
    }
    Ok(out)
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(format!("`{other}` is not a boolean")),
    }
}

/// Reads a flat TOML table into string settings. Nested tables, arrays
/// and unknown keys are rejected.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::File {
        path: PathBuf::new(),
        message: e.message().to_string(),
    })?;
    let mut out = BTreeMap::new();
    for (key, value) in table {
        if !KEYS.contains(&key.as_str()) {
            return Err(ConfigError::key(&key, "unknown key"));
        }
        let text = match value {
            toml::Value::String(s) => s,
            toml::Value::Integer(i) => i.to_string(),
            toml::Value::Float(f) => f.to_string(),
            toml::Value::Boolean(b) => b.to_string(),
            other => return Err(ConfigError::key(&key, format!("expected a scalar, got {}", other.type_str()))),
        };
        out.insert(key, text);
    }
    Ok(out)
}

/// Builds a validated configuration from string settings.
pub fn from_settings(command: Command, settings: &BTreeMap<String, String>) -> Result<RunConfig, ConfigError> {
    if let Some(k) = settings.keys().find(|k| !KEYS.contains(&k.as_str())) {
        return Err(ConfigError::key(k, "unknown key"));
    }
    let get = |k: &str| settings.get(k).map(String::as_str);
    fn typed<T>(key: &str, v: Option<&str>, f: impl FnOnce(&str) -> Result<T, String>) -> Result<Option<T>, ConfigError> {
        v.map(|s| f(s).map_err(|m| ConfigError::key(key, m))).transpose()
    }
    let number = |key: &str| {
        typed(key, get(key), |s| {
            s.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| format!("`{s}` is not a finite number"))
        })
    };
    let count = |key: &str| typed(key, get(key), |s| s.trim().parse::<usize>().map_err(|_| format!("`{s}` is not a non-negative integer")));

    let model = match (get("model"), get("model-file")) {
        (Some(_), Some(_)) => return Err(ConfigError::key("model-file", "conflicts with `model`")),
        (_, Some(path)) => ModelSource::File(PathBuf::from(path)),
        (m, None) => ModelSource::Analytic(typed("model", Some(m.unwrap_or("linear")), parse_model)?.expect("present")),
    };
    let n = typed("n", get("n"), parse_dims)?;
    let extent = typed("L", get("L"), |s| parse_pair::<f64>(s, "lengths"))?;
    if let Some((l1, l2)) = extent {
        if !(l1 > 0.0 && l2 > 0.0 && l1.is_finite() && l2.is_finite()) {
            return Err(ConfigError::key("L", "lengths must be positive"));
        }
    }
    let f = number("f")?;
    let f = match (command, f) {
        (_, Some(f)) if !(f > 0.0) => return Err(ConfigError::key("f", format!("must be positive, got {f}"))),
        (_, Some(f)) => f,
        (Command::Eikonal, None) => 1.0,
        (_, None) => return Err(ConfigError::key("f", "frequency is required")),
    };
    let source = typed("source", get("source"), |s| parse_pair::<usize>(s, "node indices"))?;
    let bc = typed("bc", get("bc"), parse_bc)?.unwrap_or_else(BCSpec::free_surface);
    let strategies = typed("strategy", get("strategy"), parse_strategies)?.unwrap_or_else(|| Strategy::ALL.to_vec());

    let mut solver = StrategyConfig::new(strategies[0]);
    if let Some(v) = number("alpha")? {
        solver.alpha = v;
    }
    if let Some(v) = number("beta")? {
        solver.beta = v;
    }
    if let Some(v) = number("tol")? {
        solver.tol = v;
    }
    if let Some(v) = count("restart")? {
        solver.restart = v;
    }
    if let Some(v) = count("max-iters")? {
        solver.max_iters = v;
    }
    if let Some(v) = count("levels")? {
        solver.levels = v;
    }
    if let Err(helmadr::Error::InvalidParameter { name, reason }) = solver.validate() {
        let key = match name {
            "max_iters" => "max-iters",
            other => other,
        };
        return Err(ConfigError::key(key, reason));
    }
    let order = match typed("order", get("order"), |s| s.trim().parse::<u8>().map_err(|_| format!("`{s}` is not 1 or 2")))? {
        None | Some(2) => FmOrder::Second,
        Some(1) => FmOrder::First,
        Some(o) => return Err(ConfigError::key("order", format!("must be 1 or 2, got {o}"))),
    };
    let ref_factor = count("ref-factor")?.unwrap_or(4);
    if ref_factor < 2 {
        return Err(ConfigError::key("ref-factor", format!("must be at least 2, got {ref_factor}")));
    }
    let sequential = typed("sequential", get("sequential"), parse_bool)?.unwrap_or(false);
    let out = PathBuf::from(get("out").unwrap_or("out"));

    let cfg = RunConfig {
        command,
        model,
        n,
        extent,
        f,
        source,
        bc,
        strategies,
        solver,
        order,
        out,
        ref_factor,
        sequential,
    };
    if matches!(cfg.model, ModelSource::Analytic(_)) {
        let grid = cfg.grid()?;
        cfg.check_grid(&grid)?;
    }
    Ok(cfg)
}

#[derive(Debug, Parser)]
#[command(name = "helmadr", version, about = "Helmholtz point-source solves from travel time and amplitude")]
#[command(arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Travel time only: writes tau1 and the Fast Marching time.
    #[command(allow_negative_numbers = true)]
    Eikonal(Flags),
    /// Solves with the selected strategies.
    #[command(allow_negative_numbers = true)]
    Solve(Flags),
    /// Solves with every strategy and measures errors against a finer reference.
    #[command(allow_negative_numbers = true)]
    Compare(Flags),
}

#[derive(Debug, Args)]
struct Flags {
    /// Flat `key = value` file; flags take precedence.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// constant[:K2], linear[:TOP,BOTTOM], gaussian, waveguide or wedge.
    #[arg(long)]
    model: Option<String>,
    /// Raw little-endian f64 velocity file.
    #[arg(long = "model-file", value_name = "PATH")]
    model_file: Option<String>,
    /// Grid nodes, e.g. 769x257.
    #[arg(long, value_name = "WxH")]
    n: Option<String>,
    /// Physical extent; defaults to the benchmark scaling.
    #[arg(long = "L", value_name = "W,H")]
    extent: Option<String>,
    /// Frequency; omega = 2 pi f.
    #[arg(long)]
    f: Option<String>,
    /// Source node; defaults to the top centre.
    #[arg(long, value_name = "I,J")]
    source: Option<String>,
    /// Boundary overrides such as top=neumann,left=sommerfeld.
    #[arg(long)]
    bc: Option<String>,
    /// standard, central, upwind, a comma list, or all.
    #[arg(long)]
    strategy: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    beta: Option<String>,
    #[arg(long)]
    tol: Option<String>,
    #[arg(long)]
    restart: Option<String>,
    #[arg(long = "max-iters")]
    max_iters: Option<String>,
    #[arg(long)]
    levels: Option<String>,
    /// Fast Marching order, 1 or 2.
    #[arg(long)]
    order: Option<String>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<String>,
    /// Refinement of the reference grid in `compare`.
    #[arg(long = "ref-factor")]
    ref_factor: Option<String>,
    /// Single-threaded kernels for bit-reproducible runs.
    #[arg(long)]
    sequential: bool,
}

impl Flags {
    fn overrides(&self) -> Vec<(&'static str, String)> {
        let pairs: [(&'static str, &Option<String>); 17] = [
            ("model", &self.model),
            ("model-file", &self.model_file),
            ("n", &self.n),
            ("L", &self.extent),
            ("f", &self.f),
            ("source", &self.source),
            ("bc", &self.bc),
            ("strategy", &self.strategy),
            ("alpha", &self.alpha),
            ("beta", &self.beta),
            ("tol", &self.tol),
            ("restart", &self.restart),
            ("max-iters", &self.max_iters),
            ("levels", &self.levels),
            ("order", &self.order),
            ("out", &self.out),
            ("ref-factor", &self.ref_factor),
        ];
        let mut out: Vec<_> = pairs.into_iter().filter_map(|(k, v)| v.clone().map(|v| (k, v))).collect();
        if self.sequential {
            out.push(("sequential", "true".into()));
        }
        out
    }
}

/// Parses the process arguments (including the program name).
pub fn parse_args<I, T>(args: I) -> Result<RunConfig, ConfigError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args)?;
    let (command, flags) = match cli.command {
        Sub::Eikonal(f) => (Command::Eikonal, f),
        Sub::Solve(f) => (Command::Solve, f),
        Sub::Compare(f) => (Command::Compare, f),
    };
    let mut settings = match &flags.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| ConfigError::File {
                path: path.clone(),
                message: e.to_string(),
            })?;
            parse_config_text(&text).map_err(|e| match e {
                ConfigError::File { message, .. } => ConfigError::File { path: path.clone(), message },
                other => other,
            })?
        }
        None => BTreeMap::new(),
    };
    for (k, v) in flags.overrides() {
        settings.insert(k.to_string(), v);
    }
    if flags.model.is_some() {
        settings.remove("model-file");
    } else if flags.model_file.is_some() {
        settings.remove("model");
    }
    from_settings(command, &settings)
}
