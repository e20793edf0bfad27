//! Run configuration from `key=value` arguments and config files.
//!
//! A config file holds one `key=value` per line; blank lines and text after
//! `#` are ignored. Options given on the command line override the file.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use shortap_core::measures::{Mode, ParamSpec, Params};
use shortap_core::sieve;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Params,
    Sieve,
    NuMean,
    LfCheck,
    GyCheck,
    CorrCheck,
    TauMoments,
    ApCount,
    FullSuite,
}

impl Command {
    pub const ALL: [Command; 9] = [
        Command::Params,
        Command::Sieve,
        Command::NuMean,
        Command::LfCheck,
        Command::GyCheck,
        Command::CorrCheck,
        Command::TauMoments,
        Command::ApCount,
        Command::FullSuite,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Command::Params => "params",
            Command::Sieve => "sieve",
            Command::NuMean => "nu-mean",
            Command::LfCheck => "lf-check",
            Command::GyCheck => "gy-check",
            Command::CorrCheck => "corr-check",
            Command::TauMoments => "tau-moments",
            Command::ApCount => "ap-count",
            Command::FullSuite => "full-suite",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Command {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        Command::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| ConfigError::UnknownCommand(s.to_string()))
    }
}

/// Which window the `sieve` command writes to CSV.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WindowKind {
    /// The prime density `f`.
    F,
    Nu,
    /// Raw `Λ_R(Wn+1)`.
    Lambda,
}

impl FromStr for WindowKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "f" => Ok(WindowKind::F),
            "nu" => Ok(WindowKind::Nu),
            "lambda" => Ok(WindowKind::Lambda),
            _ => Err("expected f, nu or lambda".into()),
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("missing command; expected one of {list}", list = command_list())]
    MissingCommand,
    #[error("unknown command {0:?}; expected one of {list}", list = command_list())]
    UnknownCommand(String),
    #[error("argument {0:?} is not of the form key=value")]
    Malformed(String),
    #[error("unknown key {0:?}")]
    UnknownKey(String),
    #[error("invalid value {value:?} for key {key}: {reason}")]
    InvalidValue {
        key: String,
        value: String,
        reason: String,
    },
    #[error("key {key}: {message}")]
    Rejected { key: String, message: String },
    #[error("cannot read config file {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl ConfigError {
    /// The offending key, when the error concerns one.
    pub fn key(&self) -> Option<&str> {
        match self {
            ConfigError::UnknownKey(k) => Some(k),
            ConfigError::InvalidValue { key, .. } | ConfigError::Rejected { key, .. } => Some(key),
            _ => None,
        }
    }
}

fn command_list() -> String {
    Command::ALL.map(Command::as_str).join(", ")
}

pub const KEYS: [&str; 21] = [
    "N",
    "M",
    "k",
    "w",
    "mode",
    "eps",
    "r_exponent",
    "support_lo",
    "support_hi",
    "samples",
    "seed",
    "tau_A",
    "tau_C",
    "tau_C0",
    "m",
    "shifts",
    "window",
    "output",
    "csv",
    "threads",
    "config",
];

pub const DEFAULT_N: u64 = 1_000_003;
pub const DEFAULT_M: u64 = 1_000_003;
pub const DEFAULT_K: u32 = 4;
pub const DEFAULT_W: u64 = 5;
pub const DEFAULT_SAMPLES: u64 = 100_000;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_SHIFTS: usize = 200;

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub command: Command,
    pub spec: ParamSpec,
    pub params: Params,
    pub samples: u64,
    pub seed: u64,
    /// Fixed `τ` prefactor; calibrated when absent.
    pub tau_a: Option<f64>,
    pub tau_c: f64,
    pub tau_c0: f64,
    /// Number of forms (`gy-check`) or shifts per tuple (`corr-check`).
    pub m: usize,
    pub shifts: usize,
    pub window: WindowKind,
    pub output: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub threads: Option<usize>,
}

/// Parses `argv` (without the program name): a command followed by
/// `key=value` options, one of which may be `config=<file>`.
pub fn parse_config<S: AsRef<str>>(argv: &[S]) -> Result<RunConfig, ConfigError> {
    let (command, rest) = argv.split_first().ok_or(ConfigError::MissingCommand)?;
    let command: Command = command.as_ref().parse()?;

    let cli = parse_pairs(rest.iter().map(AsRef::as_ref))?;
    let mut options = match cli.get("config") {
        Some(path) => read_config_file(Path::new(path))?,
        None => BTreeMap::new(),
    };
    options.extend(cli);
    build(command, &options)
}

/// Reads `key=value` lines from a config file.
pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let lines = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty());
    let options = parse_pairs(lines)?;
    if options.contains_key("config") {
        return Err(ConfigError::Rejected {
            key: "config".into(),
            message: "config files cannot include other config files".into(),
        });
    }
    Ok(options)
}

fn parse_pairs<'a>(items: impl Iterator<Item = &'a str>) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut out = BTreeMap::new();
    for item in items {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| ConfigError::Malformed(item.to_string()))?;
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey(key.to_string()));
        }
        out.insert(key.to_string(), value.trim().to_string());
    }
    Ok(out)
}

fn get<T: FromStr>(options: &BTreeMap<String, String>, key: &str) -> Result<Option<T>, ConfigError>
where
    T::Err: fmt::Display,
{
    options
        .get(key)
        .map(|v| {
            v.parse::<T>().map_err(|e| ConfigError::InvalidValue {
                key: key.to_string(),
                value: v.clone(),
                reason: e.to_string(),
            })
        })
        .transpose()
}

fn reject(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Rejected {
        key: key.to_string(),
        message: message.into(),
    }
}

fn build(command: Command, options: &BTreeMap<String, String>) -> Result<RunConfig, ConfigError> {
    let n_start = get(options, "N")?.unwrap_or(DEFAULT_N);
    let modulus = get(options, "M")?.unwrap_or(DEFAULT_M);
    let k = get(options, "k")?.unwrap_or(DEFAULT_K);
    let w = get(options, "w")?.unwrap_or(DEFAULT_W);
    let mode: Mode = get(options, "mode")?.unwrap_or(Mode::Exploratory);

    if !sieve::is_prime_by_trial_division(modulus) {
        return Err(reject("M", format!("M must be prime (got {modulus})")));
    }
    let spec = ParamSpec {
        n_start,
        modulus,
        k,
        w,
        mode,
        eps: get(options, "eps")?,
        r_exponent: get(options, "r_exponent")?,
        support: match (get(options, "support_lo")?, get(options, "support_hi")?) {
            (Some(lo), Some(hi)) => Some((lo, hi)),
            (None, None) => None,
            (Some(_), None) => return Err(reject("support_hi", "support_lo needs support_hi")),
            (None, Some(_)) => return Err(reject("support_lo", "support_hi needs support_lo")),
        },
    };
    let params = spec.resolve().map_err(|e| match e {
        shortap_core::Error::Config(msg) | shortap_core::Error::Domain(msg) => blame(&msg),
        other => reject("N", other.to_string()),
    })?;

    let default_m = match command {
        Command::GyCheck => 1,
        _ => 2,
    };
    let m = get(options, "m")?.unwrap_or(default_m);
    match command {
        Command::GyCheck if !(1..=2).contains(&m) => {
            return Err(reject("m", format!("gy-check supports m = 1 or 2, got {m}")))
        }
        Command::CorrCheck if !(2..=6).contains(&m) => {
            return Err(reject("m", format!("corr-check needs 2 ≤ m ≤ 6, got {m}")))
        }
        _ => {}
    }

    let samples = get(options, "samples")?.unwrap_or(DEFAULT_SAMPLES);
    if samples == 0 {
        return Err(reject("samples", "samples must be positive"));
    }
    let shifts = get(options, "shifts")?.unwrap_or(DEFAULT_SHIFTS);
    if shifts == 0 {
        return Err(reject("shifts", "shifts must be positive"));
    }
    let tau_a: Option<f64> = get(options, "tau_A")?;
    if tau_a.is_some_and(|a| !(a >= 1.0 && a.is_finite())) {
        return Err(reject("tau_A", "tau_A must be a finite value ≥ 1"));
    }
    let tau_c: f64 = get(options, "tau_C")?.unwrap_or(1.0);
    if !(tau_c >= 0.0 && tau_c.is_finite()) {
        return Err(reject("tau_C", "tau_C must be a finite value ≥ 0"));
    }
    let tau_c0: f64 = get(options, "tau_C0")?.unwrap_or(10.0);
    if !(tau_c0 > 0.0 && tau_c0.is_finite()) {
        return Err(reject("tau_C0", "tau_C0 must be positive"));
    }
    let threads = get(options, "threads")?;
    if threads == Some(0) {
        return Err(reject("threads", "threads must be positive"));
    }

    Ok(RunConfig {
        command,
        spec,
        params,
        samples,
        seed: get(options, "seed")?.unwrap_or(DEFAULT_SEED),
        tau_a,
        tau_c,
        tau_c0,
        m,
        shifts,
        window: get(options, "window")?.unwrap_or(WindowKind::F),
        output: get(options, "output")?,
        csv: get(options, "csv")?,
        threads,
    })
}

/// Attributes a parameter-resolution message to the key it starts with.
fn blame(message: &str) -> ConfigError {
    let head: String = message
        .chars()
        .take_while(|c| c.is_ascii_alphanumeric() || *c == '_')
        .collect();
    let key = match head.as_str() {
        "support" => "support_lo",
        h if KEYS.contains(&h) => h,
        _ => "N",
    };
    reject(key, message)
}
