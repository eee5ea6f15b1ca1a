//! Executes a resolved configuration and writes datasets plus a manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use shape_core::counterdiabatic::{h1_two_level, omega_a, omega_a_prime};
use shape_core::experiments::figures::FIGURE_CSV_HEADER;
use shape_core::experiments::{
    reproduce_figure, run_protocol, scan_detuning, scan_rabi_error, FigureId, FigureOptions, Perturbation, Protocol,
    ProtocolSpec, RabiErrorModel, RapParams, SchemeParams, StirapParams,
};
use shape_core::experiments::scan::uniform_grid;
use shape_core::quantum::{evolve, StateVector, TimeGrid, Trajectory};
use shape_core::schemes::{allen_eberly, composite_xyx, landau_zener, square_pulse, stirap_sin4, TwoLevelScheme};
use shape_core::Error;

use crate::config::{Command, RunConfig, ScanAxisConfig, SchemeConfig};
use crate::error::CliError;

pub const SYNTHESIZE_CSV_HEADER: &str = "t,value,value_over_omega0";

/// A dataset held in memory until every computation has succeeded.
#[derive(Debug, Clone)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub artifacts: Vec<Artifact>,
    /// Resolved inputs; their hash identifies the run.
    pub inputs: Value,
    /// Headline numbers, step counts.
    pub results: Value,
}

pub fn execute(cfg: &RunConfig, command: Command) -> Result<RunOutput, CliError> {
    match command {
        Command::Simulate => simulate(cfg),
        Command::Scan => scan(cfg),
        Command::Synthesize => synthesize(cfg),
        Command::Figure => figure(cfg),
    }
}

fn scheme_of(cfg: &RunConfig, command: Command) -> Result<SchemeConfig, CliError> {
    cfg.scheme
        .ok_or_else(|| CliError::Usage(format!("`{}` needs a [scheme] table in the config", command.name())))
}

fn scheme_json(s: &SchemeConfig) -> Value {
    let mut v = match *s {
        SchemeConfig::AllenEberly { omega0, beta, t0, window_halfwidth } => json!({
            "omega0": omega0, "beta": beta, "t0": t0, "window_halfwidth": window_halfwidth,
            // the dimensionless pair used by the closed-form results
            "omega": omega0 / beta, "tau": t0 * beta,
        }),
        SchemeConfig::LandauZener { omega0, sweep_rate, t_start, t_end } => json!({
            "omega0": omega0, "sweep_rate": sweep_rate, "t_start": t_start, "t_end": t_end,
        }),
        SchemeConfig::SquarePi { omega0, detuning } | SchemeConfig::CompositeXyx { omega0, detuning } => {
            json!({ "omega0": omega0, "detuning": detuning })
        }
        SchemeConfig::StirapSin4 { omega0, period, delay, detuning } => json!({
            "omega0": omega0, "period": period, "delay": delay, "detuning": detuning,
        }),
    };
    v["name"] = json!(s.name());
    v
}

fn base_inputs(cfg: &RunConfig, command: Command) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("command".into(), json!(command.name()));
    m.insert(
        "units".into(),
        json!(if cfg.dimensionless { "dimensionless (beta = 1)" } else { "angular frequency rad/us, time us" }),
    );
    m.insert("integrator".into(), json!(cfg.method.name()));
    m.insert(
        "resolution".into(),
        match cfg.resolution {
            shape_core::experiments::Resolution::PhaseBudget(p) => json!({ "phase_per_step": p }),
            shape_core::experiments::Resolution::Steps(n) => json!({ "steps": n }),
        },
    );
    m
}

/// Protocol runs a scheme supports, with the default selection first.
fn protocol_setup(scheme: &SchemeConfig, requested: &[Protocol]) -> Result<Vec<(ProtocolSpec, Perturbation)>, CliError> {
    let (params, defaults, shift): (SchemeParams, Vec<Protocol>, f64) = match *scheme {
        SchemeConfig::AllenEberly { omega0, beta, t0, window_halfwidth } => (
            SchemeParams::Rap(RapParams { omega0, beta, t0, window_halfwidth }),
            vec![Protocol::Adiabatic, Protocol::Shape],
            0.0,
        ),
        // square and composite pulses only use Ω₀; the detuning enters as a shift
        SchemeConfig::SquarePi { omega0, detuning } => {
            (SchemeParams::Rap(RapParams::new(omega0, 1.0, 1.0)), vec![Protocol::RabiPi], detuning)
        }
        SchemeConfig::CompositeXyx { omega0, detuning } => {
            (SchemeParams::Rap(RapParams::new(omega0, 1.0, 1.0)), vec![Protocol::CompositeXyx], detuning)
        }
        SchemeConfig::StirapSin4 { omega0, period, delay, detuning } => (
            SchemeParams::Stirap(StirapParams { omega0, period, delay, detuning }),
            vec![Protocol::Stirap, Protocol::StirapShape],
            0.0,
        ),
        SchemeConfig::LandauZener { .. } => unreachable!("handled separately"),
    };
    let chosen = if requested.is_empty() { defaults } else { requested.to_vec() };
    if matches!(scheme, SchemeConfig::SquarePi { .. } | SchemeConfig::CompositeXyx { .. }) {
        if let Some(p) = chosen.iter().find(|p| !matches!(p, Protocol::RabiPi | Protocol::CompositeXyx)) {
            return Err(Error::IncompatibleProtocol { protocol: p.name(), scheme: "square-pulse" }.into());
        }
    }
    chosen
        .into_iter()
        .map(|p| Ok((ProtocolSpec::new(p, params)?, Perturbation::detuning(shift))))
        .collect()
}

/// About `samples` indices spread over 0..n, always including both ends.
fn sample_indices(n: usize, samples: usize) -> Vec<usize> {
    if n <= samples {
        return (0..n).collect();
    }
    let mut idx: Vec<usize> = (0..samples).map(|k| (k * (n - 1) + (samples - 1) / 2) / (samples - 1)).collect();
    idx.dedup();
    idx
}

fn push_populations(csv: &mut String, label: &str, traj: &Trajectory, samples: usize, time_unit: f64) {
    let times: Vec<f64> = traj.times().collect();
    for k in sample_indices(times.len(), samples) {
        for (level, p) in traj.populations[k].iter().enumerate() {
            let _ = writeln!(csv, "{},{}:P{},{}", times[k] / time_unit, label, level + 1, p);
        }
    }
}

fn simulate(cfg: &RunConfig) -> Result<RunOutput, CliError> {
    let scheme = scheme_of(cfg, Command::Simulate)?;
    let mut csv = String::from(FIGURE_CSV_HEADER);
    csv.push('\n');
    let mut results = Map::new();
    let mut protocols = Vec::new();

    if let SchemeConfig::LandauZener { omega0, sweep_rate, t_start, t_end } = scheme {
        // a bare sweep under H₀, and with the closed-form auxiliary field
        let s = landau_zener(omega0, sweep_rate, (t_start, t_end))?;
        let requested: Vec<Protocol> =
            if cfg.protocols.is_empty() { vec![Protocol::Adiabatic, Protocol::Shape] } else { cfg.protocols.clone() };
        for p in requested {
            let with_aux = match p {
                Protocol::Adiabatic => false,
                Protocol::Shape => true,
                other => return Err(Error::IncompatibleProtocol { protocol: other.name(), scheme: "landau-zener" }.into()),
            };
            let h = |t: f64| {
                let h0 = s.h0(t);
                if with_aux {
                    h0 + h1_two_level(&s, t).expect("Landau-Zener field never vanishes")
                } else {
                    h0
                }
            };
            let n = cfg.resolution.steps_for(h, s.window())?;
            let grid = TimeGrid::new(t_start, t_end, n)?;
            let traj = evolve(h, &StateVector::basis(2, 0), &grid, cfg.method)?;
            push_populations(&mut csv, p.name(), &traj, cfg.samples, cfg.time_scale);
            results.insert(
                p.name().into(),
                json!({ "n_steps": n, "final_populations": traj.terminal_populations() }),
            );
            protocols.push(p.name());
        }
    } else {
        for (spec, pert) in protocol_setup(&scheme, &cfg.protocols)? {
            let run = run_protocol(&spec, &pert, cfg.resolution, cfg.method)?;
            push_populations(&mut csv, spec.protocol.name(), &run.trajectory, cfg.samples, cfg.time_scale);
            results.insert(
                spec.protocol.name().into(),
                json!({
                    "n_steps": run.n_steps,
                    "fidelity": run.fidelity,
                    "final_populations": run.trajectory.terminal_populations(),
                }),
            );
            protocols.push(spec.protocol.name());
        }
    }

    let mut inputs = base_inputs(cfg, Command::Simulate);
    inputs.insert("scheme".into(), scheme_json(&scheme));
    inputs.insert("protocols".into(), json!(protocols));
    inputs.insert("samples".into(), json!(cfg.samples));
    inputs.insert("time_unit_us".into(), json!(cfg.time_scale));
    Ok(RunOutput {
        artifacts: vec![Artifact { name: "simulate.csv".into(), contents: csv }],
        inputs: Value::Object(inputs),
        results: Value::Object(results),
    })
}

fn scan(cfg: &RunConfig) -> Result<RunOutput, CliError> {
    let scheme = scheme_of(cfg, Command::Scan)?;
    if !matches!(scheme, SchemeConfig::AllenEberly { .. } | SchemeConfig::StirapSin4 { .. }) {
        return Err(CliError::Usage(format!(
            "`scan` needs an allen-eberly or stirap-sin4 scheme, got `{}`",
            scheme.name()
        )));
    }
    let sc = cfg.scan.ok_or_else(|| CliError::Usage("`scan` needs a [scan] table in the config".into()))?;
    let requested = if cfg.protocols.is_empty() {
        match scheme {
            SchemeConfig::AllenEberly { .. } => Protocol::TWO_LEVEL.to_vec(),
            _ => vec![Protocol::Stirap, Protocol::StirapShape, Protocol::StirapShapeFull],
        }
    } else {
        cfg.protocols.clone()
    };
    let specs: Vec<ProtocolSpec> = protocol_setup(&scheme, &requested)?.into_iter().map(|(s, _)| s).collect();
    let grid = uniform_grid(sc.start, sc.stop, sc.step)?;

    let mut artifacts = Vec::new();
    let mut results = Map::new();
    let unit = match sc.axis {
        ScanAxisConfig::RabiError => 1.0,
        ScanAxisConfig::Detuning => cfg.frequency_unit(),
    };
    let main = match sc.axis {
        ScanAxisConfig::RabiError => scan_rabi_error(&specs, &grid, RabiErrorModel::AllFields, cfg.resolution)?,
        ScanAxisConfig::Detuning => scan_detuning(&specs, &grid, cfg.resolution)?,
    };
    artifacts.push(Artifact { name: "scan.csv".into(), contents: main.to_csv(unit) });
    results.insert("rows".into(), json!(main.points.len()));

    if sc.reference_only {
        let with_aux: Vec<ProtocolSpec> = specs
            .iter()
            .copied()
            .filter(|s| matches!(s.protocol, Protocol::Shape | Protocol::StirapShape | Protocol::StirapShapeFull))
            .collect();
        if !with_aux.is_empty() {
            let variant = scan_rabi_error(&with_aux, &grid, RabiErrorModel::ReferenceOnly, cfg.resolution)?;
            artifacts.push(Artifact { name: "scan_reference_only.csv".into(), contents: variant.to_csv(unit) });
            results.insert("reference_only_rows".into(), json!(variant.points.len()));
        }
    }

    let mut inputs = base_inputs(cfg, Command::Scan);
    inputs.insert("scheme".into(), scheme_json(&scheme));
    inputs.insert("protocols".into(), json!(specs.iter().map(|s| s.protocol.name()).collect::<Vec<_>>()));
    inputs.insert(
        "grid".into(),
        json!({
            "axis": match sc.axis { ScanAxisConfig::RabiError => "rabi-error", ScanAxisConfig::Detuning => "detuning" },
            "start": sc.start, "stop": sc.stop, "step": sc.step, "points": grid.len(),
            "csv_unit_divisor": unit,
            "rabi_error_model": "all-fields",
            "reference_only_variant": sc.reference_only,
        }),
    );
    Ok(RunOutput { artifacts, inputs: Value::Object(inputs), results: Value::Object(results) })
}

/// Ω_a with the vanishing-field points continued by zero.
fn aux_or_zero(r: shape_core::Result<f64>) -> shape_core::Result<f64> {
    match r {
        Err(Error::VanishingField { .. }) => Ok(0.0),
        other => other,
    }
}

fn synthesize(cfg: &RunConfig) -> Result<RunOutput, CliError> {
    let scheme = scheme_of(cfg, Command::Synthesize)?;
    let omega0 = scheme.omega0();
    let field: Box<dyn Fn(f64) -> shape_core::Result<f64>>;
    let window: (f64, f64);
    match scheme {
        SchemeConfig::AllenEberly { omega0, beta, t0, window_halfwidth } => {
            let s = allen_eberly(omega0, beta, t0, window_halfwidth)?;
            window = s.window();
            field = Box::new(move |t| aux_or_zero(omega_a(&s, t)));
        }
        SchemeConfig::LandauZener { omega0, sweep_rate, t_start, t_end } => {
            let s = landau_zener(omega0, sweep_rate, (t_start, t_end))?;
            window = s.window();
            field = Box::new(move |t| aux_or_zero(omega_a(&s, t)));
        }
        SchemeConfig::SquarePi { omega0, detuning } => {
            let s = square_pulse(omega0, detuning, std::f64::consts::PI / omega0, 0.0)?;
            window = s.window();
            field = Box::new(move |t| aux_or_zero(omega_a(&s, t)));
        }
        SchemeConfig::CompositeXyx { omega0, detuning } => {
            let seq = composite_xyx(omega0, detuning)?;
            window = (0.0, seq.total_duration());
            let pieces: Vec<(f64, f64, TwoLevelScheme)> =
                seq.segments().iter().map(|s| (s.start, s.end(), s.scheme)).collect();
            field = Box::new(move |t| {
                let (start, _, s) = pieces.iter().find(|(_, end, _)| t <= *end).unwrap_or(&pieces[pieces.len() - 1]);
                aux_or_zero(omega_a(s, t - start))
            });
        }
        SchemeConfig::StirapSin4 { omega0, period, delay, detuning } => {
            let s = stirap_sin4(omega0, period, delay, detuning)?;
            window = s.window();
            field = Box::new(move |t| aux_or_zero(omega_a_prime(&s, t)));
        }
    }
    let n = cfg.samples;
    let mut csv = String::from(SYNTHESIZE_CSV_HEADER);
    csv.push('\n');
    let mut peak = 0.0_f64;
    for k in 0..n {
        let t = if k == n - 1 { window.1 } else { window.0 + (window.1 - window.0) * k as f64 / (n - 1) as f64 };
        let v = field(t)?;
        peak = peak.max(v.abs());
        let _ = writeln!(csv, "{},{},{}", t / cfg.time_scale, v, v / omega0);
    }
    let mut inputs = base_inputs(cfg, Command::Synthesize);
    inputs.insert("scheme".into(), scheme_json(&scheme));
    inputs.insert("samples".into(), json!(n));
    inputs.insert("time_unit_us".into(), json!(cfg.time_scale));
    let results = json!({ "max_abs_value": peak, "max_abs_value_over_omega0": peak / omega0 });
    Ok(RunOutput {
        artifacts: vec![Artifact { name: "synthesize.csv".into(), contents: csv }],
        inputs: Value::Object(inputs),
        results,
    })
}

fn figure(cfg: &RunConfig) -> Result<RunOutput, CliError> {
    let id: FigureId = cfg
        .figure
        .ok_or_else(|| CliError::Usage("`figure` needs an id (fig1, fig2a, fig2b, fig4, fig5a, fig5b)".into()))?;
    let opts = FigureOptions { resolution: cfg.resolution, stirap_delay_fraction: cfg.stirap_delay_fraction };
    let data = reproduce_figure(id, &opts)?;
    let mut inputs = base_inputs(cfg, Command::Figure);
    inputs.insert("figure".into(), json!(id.name()));
    inputs.insert("stirap_delay_fraction".into(), json!(cfg.stirap_delay_fraction));
    let results: Map<String, Value> = data.summary.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
    Ok(RunOutput {
        artifacts: vec![Artifact { name: format!("{}.csv", id.name()), contents: data.to_csv() }],
        inputs: Value::Object(inputs),
        results: Value::Object(results),
    })
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

pub fn manifest(out: &RunOutput) -> Value {
    let canonical = serde_json::to_string(&out.inputs).expect("json values always serialize");
    json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "input_hash": sha256_hex(canonical.as_bytes()),
        "inputs": out.inputs,
        "results": out.results,
        "outputs": out.artifacts.iter().map(|a| json!({ "file": a.name, "sha256": sha256_hex(a.contents.as_bytes()) })).collect::<Vec<_>>(),
    })
}

/// Writes every artifact and `manifest.json` into `dir`. If any write
/// fails, files already written by this call are removed.
pub fn write_outputs(dir: &Path, out: &RunOutput) -> Result<Vec<PathBuf>, CliError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| CliError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    let mut manifest_text = serde_json::to_string_pretty(&manifest(out)).expect("json values always serialize");
    manifest_text.push('\n');
    let files: Vec<(PathBuf, &str)> = out
        .artifacts
        .iter()
        .map(|a| (dir.join(&a.name), a.contents.as_str()))
        .chain(std::iter::once((dir.join("manifest.json"), manifest_text.as_str())))
        .collect();
    let mut written = Vec::new();
    for (path, contents) in files {
        if let Err(e) = fs::write(&path, contents) {
            let _ = fs::remove_file(&path);
            for p in &written {
                let _ = fs::remove_file(p);
            }
            return Err(io(&path)(e));
        }
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    #[test]
    fn sample_indices_cover_ends() {
        assert_eq!(sample_indices(5, 10), vec![0, 1, 2, 3, 4]);
        let idx = sample_indices(10_001, 101);
        assert_eq!(idx.len(), 101);
        assert_eq!((idx[0], idx[100]), (0, 10_000));
    }

    #[test]
    fn sha256_of_empty_input() {
        assert_eq!(sha256_hex(b""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }

    #[test]
    fn static_scheme_synthesizes_zero_field() {
        let cfg = parse_config("samples = 11\n[scheme]\nname = \"square-pi\"\nomega0 = 5\ndetuning = 0.3\n").unwrap();
        let out = execute(&cfg, Command::Synthesize).unwrap();
        let csv = &out.artifacts[0].contents;
        assert!(csv.starts_with(SYNTHESIZE_CSV_HEADER));
        let rows: Vec<&str> = csv.lines().skip(1).collect();
        assert_eq!(rows.len(), 11);
        for r in rows {
            let cols: Vec<&str> = r.split(',').collect();
            assert_eq!(cols[1].parse::<f64>().unwrap(), 0.0);
            assert_eq!(cols[2].parse::<f64>().unwrap(), 0.0);
        }
    }

    #[test]
    fn fig2_parameters_echo_omega_and_tau() {
        let cfg = parse_config(
            "steps = 200\nprotocols = [\"shape\"]\n[scheme]\nname = \"allen-eberly\"\nomega0 = 5\nbeta = 1\nt0 = 0.025\n",
        )
        .unwrap();
        let out = execute(&cfg, Command::Simulate).unwrap();
        let m = manifest(&out);
        let scheme = &m["inputs"]["scheme"];
        assert!((scheme["omega"].as_f64().unwrap() - 5.0).abs() < 1e-12);
        assert!((scheme["tau"].as_f64().unwrap() - 0.157).abs() < 1e-3);
    }

    #[test]
    fn incompatible_protocol_is_an_error() {
        let cfg = parse_config("protocols = [\"stirap\"]\n[scheme]\nname = \"allen-eberly\"\nomega0 = 5\nbeta = 1\nt0 = 0.025\n").unwrap();
        assert!(execute(&cfg, Command::Simulate).is_err());
    }

    #[test]
    fn failed_write_leaves_no_files() {
        let dir = tempfile::tempdir().unwrap();
        let out = RunOutput {
            artifacts: vec![
                Artifact { name: "a.csv".into(), contents: "x\n".into() },
                // a directory in the way makes the second write fail
                Artifact { name: "blocked".into(), contents: "y\n".into() },
            ],
            inputs: json!({}),
            results: json!({}),
        };
        fs::create_dir(dir.path().join("blocked")).unwrap();
        assert!(write_outputs(dir.path(), &out).is_err());
        assert!(!dir.path().join("a.csv").exists());
        assert!(!dir.path().join("manifest.json").exists());
    }
}
