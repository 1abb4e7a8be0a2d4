//! Run configuration: built-in defaults, figure presets, an optional JSON
//! file and command-line flags, merged in that order.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Preset {
    Fig1,
    Fig3,
    Fig4,
}

impl Preset {
    fn source(self) -> &'static str {
        match self {
            Preset::Fig1 => include_str!("../presets/fig1.json"),
            Preset::Fig3 => include_str!("../presets/fig3.json"),
            Preset::Fig4 => include_str!("../presets/fig4.json"),
        }
    }

    fn settings(self) -> Settings {
        serde_json::from_str(self.source()).expect("built-in preset is valid")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    AngleScan,
    CostCurve,
    Strings,
    Optimize,
    Simulate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::AngleScan => "angle-scan",
            Command::CostCurve => "cost-curve",
            Command::Strings => "strings",
            Command::Optimize => "optimize",
            Command::Simulate => "simulate",
        }
    }

    fn default_preset(self) -> Option<Preset> {
        match self {
            Command::AngleScan => Some(Preset::Fig1),
            Command::CostCurve => Some(Preset::Fig3),
            Command::Strings => Some(Preset::Fig4),
            Command::Optimize | Command::Simulate => None,
        }
    }

    /// Settings keys the command reads.
    fn uses(self, key: &str) -> bool {
        const COMMON: [&str; 5] = ["theta", "q1", "epsilon", "epsilon_range", "max_copies"];
        if COMMON.contains(&key) || key == "format" {
            return true;
        }
        let extra: &[&str] = match self {
            Command::AngleScan => &["resolution"],
            Command::CostCurve => &["resolution"],
            Command::Strings => &[
                "strategy",
                "resolution",
                "coverage",
                "max_depth",
                "aggregate",
            ],
            Command::Optimize => &["resolution"],
            Command::Simulate => &["strategy", "resolution", "trials", "seed", "strings_csv"],
        };
        extra.contains(&key)
    }

    fn formats(self) -> &'static [Format] {
        match self {
            Command::AngleScan | Command::CostCurve | Command::Simulate => {
                &[Format::Csv, Format::Json, Format::Svg]
            }
            Command::Strings | Command::Optimize => &[Format::Csv, Format::Json],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Strategy {
    Fbm,
    Ubm,
    Lol,
    Gof,
    Fixed(f64),
}

impl Strategy {
    pub fn parse(text: &str) -> Result<Self, String> {
        let t = text.trim().to_ascii_lowercase();
        match t.as_str() {
            "fbm" => Ok(Strategy::Fbm),
            "ubm" => Ok(Strategy::Ubm),
            "lol" => Ok(Strategy::Lol),
            "gof" => Ok(Strategy::Gof),
            _ => match t.strip_prefix("fixed:") {
                Some(angle) => parse_angle(angle).map(Strategy::Fixed),
                None => Err(format!(
                    "unknown strategy '{text}' (expected fbm, ubm, lol, gof or fixed:<rad>)"
                )),
            },
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Strategy::Fbm => "fbm",
            Strategy::Ubm => "ubm",
            Strategy::Lol => "lol",
            Strategy::Gof => "gof",
            Strategy::Fixed(_) => "fixed",
        }
    }
}

/// Accepts plain radians or multiples of pi: `0.3`, `pi/8`, `3*pi/16`, `3pi/16`.
pub fn parse_angle(text: &str) -> Result<f64, String> {
    let t: String = text
        .chars()
        .filter(|c| !c.is_whitespace())
        .collect::<String>()
        .to_ascii_lowercase();
    let bad = || format!("cannot parse angle '{text}'");
    let Some(pos) = t.find("pi") else {
        return t.parse().map_err(|_| bad());
    };
    let coef = match t[..pos].trim_end_matches('*') {
        "" => 1.0,
        "-" => -1.0,
        c => c.parse::<f64>().map_err(|_| bad())?,
    };
    let rest = &t[pos + 2..];
    let denom = if rest.is_empty() {
        1.0
    } else {
        let d = rest.strip_prefix('/').ok_or_else(bad)?;
        d.parse::<f64>().map_err(|_| bad())?
    };
    Ok(coef * PI / denom)
}

/// `lo:hi:count:log|lin`, endpoints included.
pub fn parse_epsilon_range(text: &str) -> Result<Vec<f64>, String> {
    let bad = || format!("cannot parse epsilon range '{text}' (expected lo:hi:count:log|lin)");
    let parts: Vec<&str> = text.split(':').map(str::trim).collect();
    let [lo, hi, count, spacing] = parts[..] else {
        return Err(bad());
    };
    let lo: f64 = lo.parse().map_err(|_| bad())?;
    let hi: f64 = hi.parse().map_err(|_| bad())?;
    let count: usize = count.parse().map_err(|_| bad())?;
    if count == 0 || !(lo > 0.0 && lo <= hi) {
        return Err(bad());
    }
    if count == 1 {
        return Ok(vec![lo]);
    }
    let last = (count - 1) as f64;
    let point = |i: usize| -> f64 {
        let t = i as f64 / last;
        match spacing {
            "log" => lo * (hi / lo).powf(t),
            _ => lo + (hi - lo) * t,
        }
    };
    if spacing != "log" && spacing != "lin" {
        return Err(bad());
    }
    Ok((0..count)
        .map(|i| if i + 1 == count { hi } else { point(i) })
        .collect())
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum AngleText {
    Radians(f64),
    Text(String),
}

impl AngleText {
    fn value(&self) -> Result<f64, String> {
        match self {
            AngleText::Radians(x) => Ok(*x),
            AngleText::Text(t) => parse_angle(t),
        }
    }
}

/// One configuration layer; `None` defers to the layer below.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    pub theta: Option<Vec<AngleText>>,
    pub q1: Option<f64>,
    pub epsilon: Option<Vec<f64>>,
    pub epsilon_range: Option<String>,
    pub strategy: Option<Vec<String>>,
    pub resolution: Option<usize>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub coverage: Option<f64>,
    pub max_depth: Option<usize>,
    pub max_copies: Option<u64>,
    pub aggregate: Option<bool>,
    pub format: Option<Format>,
    pub strings_csv: Option<PathBuf>,
}

macro_rules! overlay_fields {
    ($base:ident, $top:ident; $($f:ident),*) => {
        $(if $top.$f.is_some() { $base.$f = $top.$f; })*
    };
}

impl Settings {
    fn defaults(command: Command) -> Self {
        Settings {
            theta: Some(vec![AngleText::Text("pi/12".into())]),
            q1: Some(0.5),
            epsilon: Some(vec![0.179]),
            epsilon_range: None,
            strategy: Some(vec!["ubm".into()]),
            resolution: Some(2000),
            trials: Some(100_000),
            seed: Some(0),
            coverage: Some(0.998),
            max_depth: Some(64),
            max_copies: Some(100_000),
            aggregate: Some(false),
            format: Some(match command {
                Command::Simulate => Format::Json,
                _ => Format::Csv,
            }),
            strings_csv: None,
        }
    }

    /// Fields set in `top` replace those here. The epsilon list and range
    /// act as one setting: a layer giving either replaces both.
    fn overlay(mut self, top: Settings) -> Self {
        if top.epsilon.is_some() || top.epsilon_range.is_some() {
            self.epsilon = top.epsilon;
            self.epsilon_range = top.epsilon_range;
        }
        overlay_fields!(self, top; theta, q1, strategy, resolution, trials, seed,
            coverage, max_depth, max_copies, aggregate, format, strings_csv);
        self
    }

    fn set_keys(&self) -> Vec<&'static str> {
        let mut keys = Vec::new();
        macro_rules! check {
            ($($f:ident),*) => { $(if self.$f.is_some() { keys.push(stringify!($f)); })* };
        }
        check!(
            theta,
            q1,
            epsilon,
            epsilon_range,
            strategy,
            resolution,
            trials,
            seed,
            coverage,
            max_depth,
            max_copies,
            aggregate,
            format,
            strings_csv
        );
        keys
    }
}

pub fn load_config_file(path: &Path) -> Result<Settings, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("config file {}: {e}", path.display())))
}

/// Fully resolved and validated configuration for one invocation.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub thetas: Vec<f64>,
    pub q1: f64,
    pub epsilons: Vec<f64>,
    pub strategies: Vec<Strategy>,
    pub resolution: usize,
    pub trials: u64,
    pub seed: u64,
    pub coverage: f64,
    pub max_depth: usize,
    pub max_copies: u64,
    pub aggregate: bool,
    pub format: Format,
    pub strings_csv: Option<PathBuf>,
    pub output: PathBuf,
}

pub fn resolve(
    command: Command,
    preset: Option<Preset>,
    file: Option<Settings>,
    flags: Settings,
    output: PathBuf,
) -> Result<RunConfig, CliError> {
    let usage = CliError::Usage;
    if let Some(key) = flags.set_keys().into_iter().find(|k| !command.uses(k)) {
        return Err(usage(format!(
            "--{} is not used by {}",
            key.replace('_', "-"),
            command.name()
        )));
    }
    let mut s = Settings::defaults(command);
    if let Some(p) = preset.or(command.default_preset()) {
        s = s.overlay(p.settings());
    }
    if let Some(f) = file {
        s = s.overlay(f);
    }
    s = s.overlay(flags);

    let thetas = s
        .theta
        .unwrap_or_default()
        .iter()
        .map(AngleText::value)
        .collect::<Result<Vec<_>, _>>()
        .map_err(usage)?;
    let mut epsilons = s.epsilon.unwrap_or_default();
    if let Some(range) = &s.epsilon_range {
        epsilons.extend(parse_epsilon_range(range).map_err(usage)?);
    }
    epsilons.sort_by(f64::total_cmp);
    epsilons.dedup();
    let strategies = s
        .strategy
        .unwrap_or_default()
        .iter()
        .map(|t| Strategy::parse(t))
        .collect::<Result<Vec<_>, _>>()
        .map_err(usage)?;

    let cfg = RunConfig {
        command,
        thetas,
        q1: s.q1.unwrap_or(0.5),
        epsilons,
        strategies,
        resolution: s.resolution.unwrap_or(2000),
        trials: s.trials.unwrap_or(100_000),
        seed: s.seed.unwrap_or(0),
        coverage: s.coverage.unwrap_or(0.998),
        max_depth: s.max_depth.unwrap_or(64),
        max_copies: s.max_copies.unwrap_or(100_000),
        aggregate: s.aggregate.unwrap_or(false),
        format: s.format.unwrap_or(Format::Csv),
        strings_csv: s.strings_csv,
        output,
    };
    validate(&cfg).map_err(usage)?;
    Ok(cfg)
}

fn validate(c: &RunConfig) -> Result<(), String> {
    if c.thetas.is_empty() {
        return Err("at least one theta is required".into());
    }
    for &t in &c.thetas {
        if !(t > 0.0 && t < PI / 4.0) {
            return Err(format!("theta = {t} must lie in (0, pi/4)"));
        }
    }
    if !(c.q1 > 0.0 && c.q1 < 1.0) {
        return Err(format!("q1 = {} must lie in (0, 1)", c.q1));
    }
    if c.epsilons.is_empty() {
        return Err("at least one epsilon is required".into());
    }
    for &e in &c.epsilons {
        if !(e > 0.0 && e < 0.5) {
            return Err(format!("epsilon = {e} must lie in (0, 0.5)"));
        }
    }
    for s in &c.strategies {
        if let Strategy::Fixed(phi) = *s {
            if !(0.0..PI / 2.0).contains(&phi) {
                return Err(format!("fixed angle {phi} must lie in [0, pi/2)"));
            }
        }
    }
    if c.resolution < 2 {
        return Err("resolution must be at least 2".into());
    }
    if c.trials < 1 {
        return Err("trials must be at least 1".into());
    }
    if !(c.coverage > 0.0 && c.coverage <= 1.0) {
        return Err(format!("coverage = {} must lie in (0, 1]", c.coverage));
    }
    if c.max_depth < 1 || c.max_copies < 1 {
        return Err("max-depth and max-copies must be at least 1".into());
    }
    if !c.command.formats().contains(&c.format) {
        return Err(format!(
            "{} cannot write {:?} output",
            c.command.name(),
            c.format
        ));
    }
    let single = |what: &str, n: usize| {
        if n == 1 {
            Ok(())
        } else {
            Err(format!("{} takes a single {what}", c.command.name()))
        }
    };
    match c.command {
        Command::AngleScan => single("epsilon", c.epsilons.len()),
        Command::CostCurve => single("theta", c.thetas.len()),
        Command::Strings => {
            single("theta", c.thetas.len())?;
            single("epsilon", c.epsilons.len())?;
            if c.strategies.is_empty() {
                return Err("at least one strategy is required".into());
            }
            Ok(())
        }
        Command::Optimize => Ok(()),
        Command::Simulate => {
            single("theta", c.thetas.len())?;
            if c.strategies.is_empty() {
                return Err("at least one strategy is required".into());
            }
            Ok(())
        }
    }
}
