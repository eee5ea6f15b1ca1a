//! Run configuration: a small TOML document with one `[scheme]` and one
//! `[scan]` table.
//!
//! Frequencies are ordinary frequencies in MHz and become 2π·f rad/μs;
//! times are μs unless `time_unit = "ns"`. With `dimensionless = true`
//! numbers are taken in units of β (β = 1) and no 2π is applied.

use std::f64::consts::PI;
use std::fmt;
use std::ops::Range;
use std::path::PathBuf;

use serde::de::{self, Deserializer, Visitor};
use serde::Deserialize;
use toml::Spanned;

use shape_core::experiments::figures::DEFAULT_STIRAP_DELAY_FRACTION;
use shape_core::experiments::protocol::DEFAULT_PHASE_PER_STEP;
use shape_core::experiments::{FigureId, Protocol, Resolution};
use shape_core::quantum::Method;
use shape_core::schemes::SCHEME_NAMES;

use crate::error::CliError;

const TWO_PI: f64 = 2.0 * PI;

/// Default number of rows written per time series.
pub const DEFAULT_SAMPLES: usize = 1001;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Scan,
    Synthesize,
    Figure,
}

impl Command {
    pub const NAMES: [&'static str; 4] = ["simulate", "scan", "synthesize", "figure"];

    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Scan => "scan",
            Command::Synthesize => "synthesize",
            Command::Figure => "figure",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "simulate" => Some(Command::Simulate),
            "scan" => Some(Command::Scan),
            "synthesize" => Some(Command::Synthesize),
            "figure" => Some(Command::Figure),
            _ => None,
        }
    }
}

/// Scheme parameters in internal units (rad/μs and μs, or units of β).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SchemeConfig {
    AllenEberly { omega0: f64, beta: f64, t0: f64, window_halfwidth: f64 },
    LandauZener { omega0: f64, sweep_rate: f64, t_start: f64, t_end: f64 },
    SquarePi { omega0: f64, detuning: f64 },
    CompositeXyx { omega0: f64, detuning: f64 },
    StirapSin4 { omega0: f64, period: f64, delay: f64, detuning: f64 },
}

impl SchemeConfig {
    pub fn name(&self) -> &'static str {
        match self {
            SchemeConfig::AllenEberly { .. } => "allen-eberly",
            SchemeConfig::LandauZener { .. } => "landau-zener",
            SchemeConfig::SquarePi { .. } => "square-pi",
            SchemeConfig::CompositeXyx { .. } => "composite-xyx",
            SchemeConfig::StirapSin4 { .. } => "stirap-sin4",
        }
    }

    pub fn omega0(&self) -> f64 {
        match *self {
            SchemeConfig::AllenEberly { omega0, .. }
            | SchemeConfig::LandauZener { omega0, .. }
            | SchemeConfig::SquarePi { omega0, .. }
            | SchemeConfig::CompositeXyx { omega0, .. }
            | SchemeConfig::StirapSin4 { omega0, .. } => omega0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanAxisConfig {
    RabiError,
    Detuning,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanConfig {
    pub axis: ScanAxisConfig,
    /// Internal units (η is dimensionless; δ in rad/μs or units of β).
    pub start: f64,
    pub stop: f64,
    pub step: f64,
    /// Also run the amplitude-error model that leaves auxiliary fields exact.
    pub reference_only: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub dimensionless: bool,
    /// Multiplier taking config times to μs (1 or 1e-3).
    pub time_scale: f64,
    pub scheme: Option<SchemeConfig>,
    pub protocols: Vec<Protocol>,
    pub output: Option<PathBuf>,
    pub resolution: Resolution,
    pub method: Method,
    pub figure: Option<FigureId>,
    pub stirap_delay_fraction: f64,
    pub samples: usize,
    pub scan: Option<ScanConfig>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: None,
            dimensionless: false,
            time_scale: 1.0,
            scheme: None,
            protocols: Vec::new(),
            output: None,
            resolution: Resolution::PhaseBudget(DEFAULT_PHASE_PER_STEP),
            method: Method::default(),
            figure: None,
            stirap_delay_fraction: DEFAULT_STIRAP_DELAY_FRACTION,
            samples: DEFAULT_SAMPLES,
            scan: None,
        }
    }
}

impl RunConfig {
    /// Angular frequency → the unit used on input (MHz or β).
    pub fn frequency_unit(&self) -> f64 {
        if self.dimensionless {
            1.0
        } else {
            TWO_PI
        }
    }
}

/// A TOML number; integers are accepted where floats are expected.
#[derive(Debug, Clone, Copy)]
struct Num(f64);

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Num;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Num, E> {
                Ok(Num(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Num, E> {
                Ok(Num(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Num, E> {
                Ok(Num(v as f64))
            }
        }
        d.deserialize_any(V)
    }
}

type SNum = Spanned<Num>;
type SStr = Spanned<String>;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    command: Option<SStr>,
    dimensionless: Option<bool>,
    time_unit: Option<SStr>,
    protocols: Option<Vec<SStr>>,
    output: Option<String>,
    steps: Option<Spanned<i64>>,
    phase_per_step: Option<SNum>,
    method: Option<SStr>,
    figure: Option<SStr>,
    stirap_delay_fraction: Option<SNum>,
    samples: Option<Spanned<i64>>,
    scheme: Option<Spanned<RawScheme>>,
    scan: Option<Spanned<RawScan>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScheme {
    name: SStr,
    omega0: Option<SNum>,
    beta: Option<SNum>,
    t0: Option<SNum>,
    window_t0: Option<SNum>,
    sweep_rate: Option<SNum>,
    t_start: Option<SNum>,
    t_end: Option<SNum>,
    detuning: Option<SNum>,
    period: Option<SNum>,
    delay: Option<SNum>,
    delay_fraction: Option<SNum>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScan {
    axis: SStr,
    start: SNum,
    stop: SNum,
    step: SNum,
    reference_only: Option<bool>,
}

/// Maps byte offsets to 1-based line numbers.
struct Lines<'a>(&'a str);

impl Lines<'_> {
    fn line(&self, span: &Range<usize>) -> usize {
        let end = span.start.min(self.0.len());
        self.0[..end].bytes().filter(|&b| b == b'\n').count() + 1
    }

    fn err(&self, span: &Range<usize>, message: impl Into<String>) -> CliError {
        CliError::Config { line: Some(self.line(span)), message: message.into() }
    }
}

fn positive(lines: &Lines, name: &str, v: &SNum) -> Result<f64, CliError> {
    let x = v.get_ref().0;
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        Err(lines.err(&v.span(), format!("`{name}` must be strictly positive, got {x}")))
    }
}

fn finite(lines: &Lines, name: &str, v: &SNum) -> Result<f64, CliError> {
    let x = v.get_ref().0;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(lines.err(&v.span(), format!("`{name}` must be finite")))
    }
}

fn required<'a>(lines: &Lines, table: &Range<usize>, scheme: &str, name: &str, v: &'a Option<SNum>) -> Result<&'a SNum, CliError> {
    v.as_ref()
        .ok_or_else(|| lines.err(table, format!("scheme `{scheme}` requires `{name}`")))
}

fn reject_extra(lines: &Lines, scheme: &str, present: &[(&str, &Option<SNum>)]) -> Result<(), CliError> {
    for (name, v) in present {
        if let Some(v) = v {
            return Err(lines.err(&v.span(), format!("`{name}` does not apply to scheme `{scheme}`")));
        }
    }
    Ok(())
}

pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let lines = Lines(text);
        CliError::Config {
            line: e.span().map(|s| lines.line(&s)),
            message: e.message().trim().to_string(),
        }
    })?;
    let lines = Lines(text);
    let mut cfg = RunConfig::default();

    if let Some(c) = &raw.command {
        cfg.command = Some(Command::parse(c.get_ref()).ok_or_else(|| {
            lines.err(&c.span(), format!("unknown command `{}`; valid: {}", c.get_ref(), Command::NAMES.join(", ")))
        })?);
    }
    cfg.dimensionless = raw.dimensionless.unwrap_or(false);
    if let Some(u) = &raw.time_unit {
        cfg.time_scale = match u.get_ref().as_str() {
            "us" => 1.0,
            "ns" => 1e-3,
            other => return Err(lines.err(&u.span(), format!("unknown time_unit `{other}`; valid: us, ns"))),
        };
        if cfg.dimensionless {
            return Err(lines.err(&u.span(), "time_unit does not apply in dimensionless mode"));
        }
    }
    if let Some(list) = &raw.protocols {
        cfg.protocols = list
            .iter()
            .map(|p| p.get_ref().parse::<Protocol>().map_err(|e| lines.err(&p.span(), e.to_string())))
            .collect::<Result<_, _>>()?;
    }
    cfg.output = raw.output.map(PathBuf::from);
    match (&raw.steps, &raw.phase_per_step) {
        (Some(s), Some(_)) => return Err(lines.err(&s.span(), "give either `steps` or `phase_per_step`, not both")),
        (Some(s), None) => {
            let n = *s.get_ref();
            if n < 2 {
                return Err(lines.err(&s.span(), format!("`steps` must be at least 2, got {n}")));
            }
            cfg.resolution = Resolution::Steps(n as usize);
        }
        (None, Some(p)) => cfg.resolution = Resolution::PhaseBudget(positive(&lines, "phase_per_step", p)?),
        (None, None) => {}
    }
    if let Some(m) = &raw.method {
        cfg.method = match m.get_ref().as_str() {
            "midpoint-exponential" => Method::MidpointExponential,
            "rk4" => Method::Rk4,
            other => {
                return Err(lines.err(&m.span(), format!("unknown method `{other}`; valid: midpoint-exponential, rk4")))
            }
        };
    }
    if let Some(f) = &raw.figure {
        cfg.figure = Some(f.get_ref().parse::<FigureId>().map_err(|e| lines.err(&f.span(), e.to_string()))?);
    }
    if let Some(d) = &raw.stirap_delay_fraction {
        let x = positive(&lines, "stirap_delay_fraction", d)?;
        if x >= 1.0 {
            return Err(lines.err(&d.span(), "`stirap_delay_fraction` must be below 1"));
        }
        cfg.stirap_delay_fraction = x;
    }
    if let Some(s) = &raw.samples {
        let n = *s.get_ref();
        if n < 2 {
            return Err(lines.err(&s.span(), format!("`samples` must be at least 2, got {n}")));
        }
        cfg.samples = n as usize;
    }
    if let Some(scheme) = &raw.scheme {
        cfg.scheme = Some(resolve_scheme(&lines, &cfg, scheme)?);
    }
    if let Some(scan) = &raw.scan {
        cfg.scan = Some(resolve_scan(&lines, &cfg, scan)?);
    }
    Ok(cfg)
}

fn resolve_scheme(lines: &Lines, cfg: &RunConfig, raw: &Spanned<RawScheme>) -> Result<SchemeConfig, CliError> {
    let table = raw.span();
    let s = raw.get_ref();
    let name = s.name.get_ref().as_str();
    let f = cfg.frequency_unit();
    let ts = cfg.time_scale;
    let req = |key: &str, v: &Option<SNum>| -> Result<f64, CliError> { positive(lines, key, required(lines, &table, name, key, v)?) };
    let detuning = |v: &Option<SNum>| -> Result<f64, CliError> {
        v.as_ref().map(|d| finite(lines, "detuning", d)).transpose().map(|d| f * d.unwrap_or(0.0))
    };

    if cfg.dimensionless {
        if let Some(b) = &s.beta {
            if b.get_ref().0 != 1.0 {
                return Err(lines.err(&b.span(), "dimensionless mode fixes beta = 1"));
            }
        }
    }

    let scheme = match name {
        "allen-eberly" => {
            reject_extra(lines, name, &[
                ("sweep_rate", &s.sweep_rate), ("t_start", &s.t_start), ("t_end", &s.t_end),
                ("detuning", &s.detuning), ("period", &s.period), ("delay", &s.delay), ("delay_fraction", &s.delay_fraction),
            ])?;
            let beta = if cfg.dimensionless { 1.0 } else { f * req("beta", &s.beta)? };
            let t0 = ts * req("t0", &s.t0)?;
            let window = match &s.window_t0 {
                Some(w) => positive(lines, "window_t0", w)?,
                None => shape_core::experiments::analytic::AE_WINDOW_T0,
            };
            SchemeConfig::AllenEberly { omega0: f * req("omega0", &s.omega0)?, beta, t0, window_halfwidth: window * t0 }
        }
        "landau-zener" => {
            reject_extra(lines, name, &[
                ("beta", &s.beta), ("t0", &s.t0), ("window_t0", &s.window_t0), ("detuning", &s.detuning),
                ("period", &s.period), ("delay", &s.delay), ("delay_fraction", &s.delay_fraction),
            ])?;
            let start = ts * finite(lines, "t_start", required(lines, &table, name, "t_start", &s.t_start)?)?;
            let end_raw = required(lines, &table, name, "t_end", &s.t_end)?;
            let end = ts * finite(lines, "t_end", end_raw)?;
            if end <= start {
                return Err(lines.err(&end_raw.span(), "`t_end` must exceed `t_start`"));
            }
            let rate = finite(lines, "sweep_rate", required(lines, &table, name, "sweep_rate", &s.sweep_rate)?)?;
            // MHz/μs → rad/μs²
            SchemeConfig::LandauZener { omega0: f * req("omega0", &s.omega0)?, sweep_rate: f * rate, t_start: start, t_end: end }
        }
        "square-pi" | "composite-xyx" => {
            reject_extra(lines, name, &[
                ("beta", &s.beta), ("t0", &s.t0), ("window_t0", &s.window_t0), ("sweep_rate", &s.sweep_rate),
                ("t_start", &s.t_start), ("t_end", &s.t_end), ("period", &s.period), ("delay", &s.delay),
                ("delay_fraction", &s.delay_fraction),
            ])?;
            let omega0 = f * req("omega0", &s.omega0)?;
            let detuning = detuning(&s.detuning)?;
            if name == "square-pi" {
                SchemeConfig::SquarePi { omega0, detuning }
            } else {
                SchemeConfig::CompositeXyx { omega0, detuning }
            }
        }
        "stirap-sin4" => {
            reject_extra(lines, name, &[
                ("beta", &s.beta), ("t0", &s.t0), ("window_t0", &s.window_t0), ("sweep_rate", &s.sweep_rate),
                ("t_start", &s.t_start), ("t_end", &s.t_end),
            ])?;
            let period = ts * req("period", &s.period)?;
            let delay = match (&s.delay, &s.delay_fraction) {
                (Some(d), None) => ts * positive(lines, "delay", d)?,
                (None, Some(fr)) => positive(lines, "delay_fraction", fr)? * period,
                (None, None) => cfg.stirap_delay_fraction * period,
                (Some(d), Some(_)) => return Err(lines.err(&d.span(), "give either `delay` or `delay_fraction`, not both")),
            };
            if delay >= period {
                return Err(lines.err(&table, "the pump delay must be shorter than the pulse period"));
            }
            SchemeConfig::StirapSin4 { omega0: f * req("omega0", &s.omega0)?, period, delay, detuning: detuning(&s.detuning)? }
        }
        other => {
            return Err(lines.err(
                &s.name.span(),
                format!("unknown scheme `{other}`; valid: {}", SCHEME_NAMES.join(", ")),
            ))
        }
    };
    Ok(scheme)
}

fn resolve_scan(lines: &Lines, cfg: &RunConfig, raw: &Spanned<RawScan>) -> Result<ScanConfig, CliError> {
    let s = raw.get_ref();
    let axis = match s.axis.get_ref().as_str() {
        "rabi-error" => ScanAxisConfig::RabiError,
        "detuning" => ScanAxisConfig::Detuning,
        other => return Err(lines.err(&s.axis.span(), format!("unknown scan axis `{other}`; valid: rabi-error, detuning"))),
    };
    let unit = match axis {
        ScanAxisConfig::RabiError => 1.0,
        ScanAxisConfig::Detuning => cfg.frequency_unit(),
    };
    let start = finite(lines, "start", &s.start)?;
    let stop = finite(lines, "stop", &s.stop)?;
    let step = positive(lines, "step", &s.step)?;
    if stop < start {
        return Err(lines.err(&s.stop.span(), "`stop` must not be below `start`"));
    }
    if axis == ScanAxisConfig::RabiError && start <= -1.0 {
        return Err(lines.err(&s.start.span(), "amplitude errors must stay above -1"));
    }
    let reference_only = s.reference_only.unwrap_or(axis == ScanAxisConfig::RabiError);
    if reference_only && axis == ScanAxisConfig::Detuning {
        return Err(lines.err(&raw.span(), "`reference_only` applies to rabi-error scans only"));
    }
    Ok(ScanConfig { axis, start: unit * start, stop: unit * stop, step: unit * step, reference_only })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_of(err: CliError) -> Option<usize> {
        match err {
            CliError::Config { line, .. } => line,
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn megahertz_become_angular() {
        let cfg = parse_config(
            "[scheme]\nname = \"allen-eberly\"\nomega0 = 5\nbeta = 1.0\nt0 = 0.025\n",
        )
        .unwrap();
        let Some(SchemeConfig::AllenEberly { omega0, beta, t0, window_halfwidth }) = cfg.scheme else {
            panic!("wrong scheme")
        };
        assert!((omega0 - 31.4159).abs() < 1e-4);
        assert_eq!(omega0, 2.0 * PI * 5.0);
        assert_eq!(beta, 2.0 * PI);
        assert_eq!(t0, 0.025);
        assert!((window_halfwidth - 0.2).abs() < 1e-15);
    }

    #[test]
    fn nanoseconds_are_converted() {
        let cfg = parse_config("time_unit = \"ns\"\n[scheme]\nname = \"allen-eberly\"\nomega0 = 5\nbeta = 1\nt0 = 25\n").unwrap();
        let Some(SchemeConfig::AllenEberly { t0, .. }) = cfg.scheme else { panic!() };
        assert!((t0 - 0.025).abs() < 1e-15);
    }

    #[test]
    fn dimensionless_mode_keeps_numbers() {
        let cfg = parse_config("dimensionless = true\n[scheme]\nname = \"allen-eberly\"\nomega0 = 5\nt0 = 1.22\n").unwrap();
        assert_eq!(
            cfg.scheme,
            Some(SchemeConfig::AllenEberly { omega0: 5.0, beta: 1.0, t0: 1.22, window_halfwidth: 8.0 * 1.22 })
        );
        let err = parse_config("dimensionless = true\n[scheme]\nname = \"allen-eberly\"\nomega0 = 5\nbeta = 2\nt0 = 1\n")
            .unwrap_err();
        assert_eq!(line_of(err), Some(5));
    }

    #[test]
    fn unknown_protocol_lists_valid_names() {
        let err = parse_config("command = \"scan\"\nprotocols = [\"shape\", \"stirap-magic\"]\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("stirap-magic") && msg.contains("composite-xyx") && msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn unknown_keys_are_rejected_with_line() {
        let err = parse_config("command = \"scan\"\n\n[scheme]\nname = \"allen-eberly\"\nomega_0 = 5\n").unwrap_err();
        assert!(err.to_string().contains("omega_0"), "{err}");
        assert_eq!(line_of(err), Some(5));
        assert!(parse_config("outptu = \"x\"\n").is_err());
    }

    #[test]
    fn unknown_scheme_lists_valid_names() {
        let err = parse_config("[scheme]\nname = \"gaussian\"\nomega0 = 1\n").unwrap_err();
        assert!(err.to_string().contains("stirap-sin4"));
        assert_eq!(line_of(err), Some(2));
    }

    #[test]
    fn non_positive_parameters_are_rejected() {
        let err = parse_config("[scheme]\nname = \"allen-eberly\"\nomega0 = 5\nbeta = 1\nt0 = -0.1\n").unwrap_err();
        assert!(err.to_string().contains("t0"));
        assert_eq!(line_of(err), Some(5));
        let err = parse_config("[scheme]\nname = \"stirap-sin4\"\nomega0 = 5\nperiod = 0.26\n\ndetuning = 0.5\ndelay = 0.3\n").unwrap_err();
        assert!(err.to_string().contains("delay"));
    }

    #[test]
    fn missing_parameters_are_reported() {
        let err = parse_config("[scheme]\nname = \"allen-eberly\"\nomega0 = 5\n").unwrap_err();
        assert!(err.to_string().contains("requires `beta`"), "{err}");
    }

    #[test]
    fn malformed_document_is_line_anchored() {
        let err = parse_config("command = \"scan\"\nsteps = = 3\n").unwrap_err();
        assert_eq!(line_of(err), Some(2));
    }

    #[test]
    fn scan_grid_in_megahertz() {
        let cfg = parse_config("[scan]\naxis = \"detuning\"\nstart = -1\nstop = 1\nstep = 0.05\n").unwrap();
        let scan = cfg.scan.unwrap();
        assert_eq!(scan.start, -2.0 * PI);
        assert_eq!(scan.step, 2.0 * PI * 0.05);
        assert!(!scan.reference_only);
        let eta = parse_config("[scan]\naxis = \"rabi-error\"\nstart = -0.2\nstop = 0.2\nstep = 0.01\n").unwrap();
        assert!(eta.scan.unwrap().reference_only);
    }

    #[test]
    fn resolution_override() {
        let cfg = parse_config("steps = 500\n").unwrap();
        assert_eq!(cfg.resolution, Resolution::Steps(500));
        assert!(parse_config("steps = 1\n").is_err());
        assert!(parse_config("steps = 10\nphase_per_step = 0.01\n").is_err());
    }
}
