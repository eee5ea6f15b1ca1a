//! Data behind the reference figures, as long-format (x, series, value) rows.

use std::f64::consts::PI;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::adiabatic::{average_energy, eigenstates_two_level};
use crate::counterdiabatic::{h1_two_level, omega_a_prime};
use crate::error::{Error, Result};
use crate::experiments::analytic::dimensionless_allen_eberly;
use crate::experiments::protocol::{
    run_protocol, Perturbation, Protocol, ProtocolSpec, RapParams, Resolution, SchemeParams, StirapParams,
};
use crate::experiments::scan::{scan_detuning, scan_rabi_error, uniform_grid, RabiErrorModel, ScanResult};
use crate::quantum::{evolve, Method, StateVector, TimeGrid, Trajectory};

pub const FIGURE_CSV_HEADER: &str = "t_or_T,series_name,value";

/// Rows kept per time series.
const MAX_ROWS_PER_SERIES: usize = 400;

/// Delay between the Stokes and pump pulses as a fraction of their period.
pub const DEFAULT_STIRAP_DELAY_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigureId {
    /// Energies and ⟨H₀⟩ along an Allen-Eberly passage, with and without H₁.
    Fig1,
    /// Fidelity versus amplitude error.
    Fig2a,
    /// Fidelity versus detuning error.
    Fig2b,
    /// STIRAP pulses and the auxiliary 1–3 field.
    Fig4,
    /// STIRAP populations under H₀.
    Fig5a,
    /// STIRAP populations under H₀ + H₁′.
    Fig5b,
}

impl FigureId {
    pub const ALL: [FigureId; 6] = [
        FigureId::Fig1,
        FigureId::Fig2a,
        FigureId::Fig2b,
        FigureId::Fig4,
        FigureId::Fig5a,
        FigureId::Fig5b,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            FigureId::Fig1 => "fig1",
            FigureId::Fig2a => "fig2a",
            FigureId::Fig2b => "fig2b",
            FigureId::Fig4 => "fig4",
            FigureId::Fig5a => "fig5a",
            FigureId::Fig5b => "fig5b",
        }
    }
}

impl fmt::Display for FigureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FigureId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FigureId::ALL
            .iter()
            .copied()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::UnknownName {
                kind: "figure",
                name: s.to_string(),
                valid: FigureId::ALL.iter().map(FigureId::name).collect::<Vec<_>>().join(", "),
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FigureOptions {
    pub resolution: Resolution,
    pub stirap_delay_fraction: f64,
}

impl Default for FigureOptions {
    fn default() -> Self {
        Self { resolution: Resolution::default(), stirap_delay_fraction: DEFAULT_STIRAP_DELAY_FRACTION }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FigureRow {
    pub x: f64,
    pub series: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FigureData {
    pub id: FigureId,
    pub rows: Vec<FigureRow>,
    /// Headline numbers (terminal populations, peak ratios).
    pub summary: Vec<(String, f64)>,
}

impl FigureData {
    fn new(id: FigureId) -> Self {
        Self { id, rows: Vec::new(), summary: Vec::new() }
    }

    fn push(&mut self, x: f64, series: &str, value: f64) {
        self.rows.push(FigureRow { x, series: series.to_string(), value });
    }

    pub fn series(&self, name: &str) -> Vec<(f64, f64)> {
        self.rows.iter().filter(|r| r.series == name).map(|r| (r.x, r.value)).collect()
    }

    pub fn summary_value(&self, key: &str) -> Option<f64> {
        self.summary.iter().find(|(k, _)| k == key).map(|&(_, v)| v)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(FIGURE_CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{}", r.x, r.series, r.value);
        }
        out
    }
}

/// Parameters of the two-level robustness comparison (angular units, μs):
/// Ω₀ = 2π·5 MHz, t₀ = 0.025 μs, β = 2π MHz.
pub fn robustness_params() -> RapParams {
    RapParams::new(2.0 * PI * 5.0, 2.0 * PI, 0.025)
}

/// sin⁴ STIRAP: Ω₀ = 2π·5 MHz, Δ = 2π·0.5 MHz, T = 0.26 μs, τ_d = fraction·T.
pub fn stirap_params(delay_fraction: f64) -> StirapParams {
    let period = 0.26;
    StirapParams { omega0: 2.0 * PI * 5.0, period, delay: delay_fraction * period, detuning: 2.0 * PI * 0.5 }
}

/// η from −0.2 to 0.2 in steps of 0.01.
pub fn rabi_error_grid() -> Vec<f64> {
    uniform_grid(-0.2, 0.2, 0.01).expect("static grid")
}

/// δ from −2π to 2π MHz in steps of 2π·0.05 MHz.
pub fn detuning_grid() -> Vec<f64> {
    uniform_grid(-2.0 * PI, 2.0 * PI, 2.0 * PI * 0.05).expect("static grid")
}

pub fn two_level_specs(params: RapParams) -> Result<Vec<ProtocolSpec>> {
    Protocol::TWO_LEVEL
        .iter()
        .map(|&p| ProtocolSpec::new(p, SchemeParams::Rap(params)))
        .collect()
}

pub fn reproduce_figure(id: FigureId, opts: &FigureOptions) -> Result<FigureData> {
    match id {
        FigureId::Fig1 => fig1(opts),
        FigureId::Fig2a => fig2a(opts),
        FigureId::Fig2b => fig2b(opts),
        FigureId::Fig4 => fig4(opts),
        FigureId::Fig5a => fig5(FigureId::Fig5a, Protocol::Stirap, opts),
        FigureId::Fig5b => fig5(FigureId::Fig5b, Protocol::StirapShape, opts),
    }
}

fn stride(n: usize) -> usize {
    n.div_ceil(MAX_ROWS_PER_SERIES).max(1)
}

/// Indices 0, s, 2s, … plus the last sample.
fn decimated(n: usize) -> impl Iterator<Item = usize> {
    let s = stride(n);
    (0..n).step_by(s).chain(((n - 1) % s != 0).then_some(n - 1))
}

fn fig1(opts: &FigureOptions) -> Result<FigureData> {
    // dimensionless units: ω = Ω₀/β = 5, τ = t₀β = 1.22, energies in units of β
    let s = dimensionless_allen_eberly(5.0, 1.22)?;
    let (a, b) = s.window();
    let h = |t: f64| s.h0(t) + h1_two_level(&s, t).expect("field is nonzero inside the window");
    let psi0 = StateVector::basis(2, 0);
    let n = match opts.resolution {
        Resolution::Steps(n) => n,
        r => {
            let probe = ProtocolSpec::new(Protocol::Shape, SchemeParams::Rap(RapParams::new(5.0, 1.0, 1.22)))?;
            run_protocol(&probe, &Perturbation::default(), r, Method::default())?.n_steps
        }
    };
    let grid = TimeGrid::new(a, b, n)?;
    let plain = evolve(|t| s.h0(t), &psi0, &grid, Method::default())?;
    let shortcut = evolve(h, &psi0, &grid, Method::default())?;
    let avg_plain = average_energy(&plain, |t| s.h0(t));
    let avg_shortcut = average_energy(&shortcut, |t| s.h0(t));

    let mut fig = FigureData::new(FigureId::Fig1);
    let times: Vec<f64> = grid.times().collect();
    for k in decimated(times.len()) {
        let t = times[k];
        let e = eigenstates_two_level(&s, t)?;
        fig.push(t, "diabatic_plus", 0.5 * s.detuning(t));
        fig.push(t, "diabatic_minus", -0.5 * s.detuning(t));
        fig.push(t, "adiabatic_plus", e.e_plus);
        fig.push(t, "adiabatic_minus", e.e_minus);
        fig.push(t, "avg_h0_reference", avg_plain[k]);
        fig.push(t, "avg_h0_shortcut", avg_shortcut[k]);
    }
    fig.summary.push(("final_p_excited_reference".into(), final_pop(&plain, 1)));
    fig.summary.push(("final_p_excited_shortcut".into(), final_pop(&shortcut, 1)));
    Ok(fig)
}

fn final_pop(traj: &Trajectory, level: usize) -> f64 {
    traj.terminal_populations()[level]
}

fn push_scan(fig: &mut FigureData, scan: &ScanResult, unit: f64, suffix: &str) {
    for p in &scan.points {
        let series = format!("{}{}", p.protocol, suffix);
        fig.push(p.perturbation / unit, &series, p.fidelity);
    }
}

fn fig2a(opts: &FigureOptions) -> Result<FigureData> {
    let specs = two_level_specs(robustness_params())?;
    let etas = rabi_error_grid();
    let mut fig = FigureData::new(FigureId::Fig2a);
    let all = scan_rabi_error(&specs, &etas, RabiErrorModel::AllFields, opts.resolution)?;
    push_scan(&mut fig, &all, 1.0, "");
    // the shortcut with an exact auxiliary field, for comparison
    let shape = [ProtocolSpec::new(Protocol::Shape, SchemeParams::Rap(robustness_params()))?];
    let reference_only = scan_rabi_error(&shape, &etas, RabiErrorModel::ReferenceOnly, opts.resolution)?;
    push_scan(&mut fig, &reference_only, 1.0, "[reference-only]");
    Ok(fig)
}

fn fig2b(opts: &FigureOptions) -> Result<FigureData> {
    let specs = two_level_specs(robustness_params())?;
    let scan = scan_detuning(&specs, &detuning_grid(), opts.resolution)?;
    let mut fig = FigureData::new(FigureId::Fig2b);
    // δ in MHz
    push_scan(&mut fig, &scan, 2.0 * PI, "");
    Ok(fig)
}

/// max_t |Ω′_a(t)| / Ω₀ on a dense grid over the STIRAP window.
pub fn max_auxiliary_ratio(params: &StirapParams, samples: usize) -> Result<f64> {
    let s = params.scheme()?;
    let (a, b) = s.window();
    let mut worst = 0.0_f64;
    for k in 0..=samples {
        let t = a + (b - a) * k as f64 / samples as f64;
        if let Ok(w) = omega_a_prime(&s, t) {
            worst = worst.max(w.abs());
        }
    }
    Ok(worst / params.omega0)
}

fn fig4(opts: &FigureOptions) -> Result<FigureData> {
    let params = stirap_params(opts.stirap_delay_fraction);
    let s = params.scheme()?;
    let (a, b) = s.window();
    let mut fig = FigureData::new(FigureId::Fig4);
    let n = 2 * MAX_ROWS_PER_SERIES;
    for k in 0..=n {
        let t = a + (b - a) * k as f64 / n as f64;
        // Ω′_a is continued by zero where both pulses are off
        let aux = omega_a_prime(&s, t).unwrap_or(0.0);
        fig.push(t, "omega_s_over_omega0", s.stokes(t) / params.omega0);
        fig.push(t, "omega_p_over_omega0", s.pump(t) / params.omega0);
        fig.push(t, "omega_a_prime_over_omega0", aux / params.omega0);
    }
    fig.summary.push(("max_abs_omega_a_prime_over_omega0".into(), max_auxiliary_ratio(&params, 100_000)?));
    Ok(fig)
}

fn fig5(id: FigureId, protocol: Protocol, opts: &FigureOptions) -> Result<FigureData> {
    let params = stirap_params(opts.stirap_delay_fraction);
    let spec = ProtocolSpec::new(protocol, SchemeParams::Stirap(params))?;
    let run = run_protocol(&spec, &Perturbation::default(), opts.resolution, Method::default())?;
    let traj = &run.trajectory;
    let times: Vec<f64> = traj.times().collect();
    let mut fig = FigureData::new(id);
    for k in decimated(times.len()) {
        for (level, name) in ["p1", "p2", "p3"].iter().enumerate() {
            fig.push(times[k], name, traj.populations[k][level]);
        }
    }
    for (level, name) in ["final_p1", "final_p2", "final_p3"].iter().enumerate() {
        fig.summary.push((name.to_string(), final_pop(traj, level)));
    }
    Ok(fig)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn figure_ids_parse() {
        for id in FigureId::ALL {
            assert_eq!(id.name().parse::<FigureId>().unwrap(), id);
        }
        let err = "fig3".parse::<FigureId>().unwrap_err().to_string();
        assert!(err.contains("fig5b"), "{err}");
    }

    #[test]
    fn decimation_keeps_endpoints() {
        let idx: Vec<_> = decimated(1001).collect();
        assert_eq!(idx[0], 0);
        assert_eq!(*idx.last().unwrap(), 1000);
        assert!(idx.len() <= MAX_ROWS_PER_SERIES + 1);
        let small: Vec<_> = decimated(5).collect();
        assert_eq!(small, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn fig1_shortcut_ends_excited() {
        let fig = reproduce_figure(FigureId::Fig1, &FigureOptions::default()).unwrap();
        assert!(fig.summary_value("final_p_excited_shortcut").unwrap() > 1.0 - 1e-8);
        // the shortcut tracks the lower adiabatic energy
        let lower = fig.series("adiabatic_minus");
        let avg = fig.series("avg_h0_shortcut");
        for ((_, e), (_, h)) in lower.iter().zip(&avg) {
            assert!((e - h).abs() < 1e-4 * e.abs().max(1.0), "{e} vs {h}");
        }
        assert!(fig.to_csv().starts_with(FIGURE_CSV_HEADER));
    }

    #[test]
    fn fig4_pulses_in_counterintuitive_order() {
        let fig = reproduce_figure(FigureId::Fig4, &FigureOptions::default()).unwrap();
        let s = fig.series("omega_s_over_omega0");
        let p = fig.series("omega_p_over_omega0");
        let peak = |v: &[(f64, f64)]| v.iter().cloned().fold((0.0, f64::MIN), |m, x| if x.1 > m.1 { x } else { m }).0;
        assert!(peak(&s) < peak(&p));
        assert!(fig.summary_value("max_abs_omega_a_prime_over_omega0").is_some());
    }
}
