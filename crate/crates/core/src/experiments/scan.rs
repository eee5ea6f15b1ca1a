//! Robustness scans over systematic amplitude and detuning errors.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{require_positive, Error, Result};
use crate::experiments::protocol::{run_protocol, Perturbation, ProtocolSpec, Resolution};
use crate::quantum::Method;

pub const SCAN_CSV_HEADER: &str = "perturbation,protocol,fidelity,resolution";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanAxis {
    /// Relative amplitude error η.
    RabiError,
    /// Constant detuning error δ.
    Detuning,
}

/// Which fields an amplitude error acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RabiErrorModel {
    /// Every applied field, auxiliary ones included.
    #[default]
    AllFields,
    /// Only the reference fields of H₀; the auxiliary field stays exact.
    ReferenceOnly,
}

impl RabiErrorModel {
    pub fn name(&self) -> &'static str {
        match self {
            RabiErrorModel::AllFields => "all-fields",
            RabiErrorModel::ReferenceOnly => "reference-only",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanPoint {
    pub perturbation: f64,
    pub protocol: &'static str,
    pub fidelity: f64,
    /// Step count used for this point.
    pub n_steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub axis: ScanAxis,
    pub points: Vec<ScanPoint>,
}

impl ScanResult {
    /// Points of one protocol in grid order.
    pub fn series(&self, protocol: &str) -> Vec<&ScanPoint> {
        self.points.iter().filter(|p| p.protocol == protocol).collect()
    }

    pub fn fidelity_at(&self, protocol: &str, perturbation: f64) -> Option<f64> {
        self.points
            .iter()
            .find(|p| p.protocol == protocol && p.perturbation == perturbation)
            .map(|p| p.fidelity)
    }

    /// CSV rows; the perturbation column is divided by `unit` (e.g. 2π to
    /// report an angular detuning in frequency units).
    pub fn to_csv(&self, unit: f64) -> String {
        let mut out = String::from(SCAN_CSV_HEADER);
        out.push('\n');
        for p in &self.points {
            let _ = writeln!(out, "{},{},{},{}", p.perturbation / unit, p.protocol, p.fidelity, p.n_steps);
        }
        out
    }
}

/// `start + k·step` for k = 0..=n, built from integer multiples of `step` so
/// that a grid through zero contains 0.0 exactly.
pub fn uniform_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    require_positive("step", step)?;
    if !(start.is_finite() && stop.is_finite()) || stop < start {
        return Err(Error::InvalidGrid(format!("bad scan range [{start}, {stop}]")));
    }
    let n = ((stop - start) / step).round() as i64;
    let first = start / step;
    let aligned = (first - first.round()).abs() < 1e-9;
    Ok((0..=n)
        .map(|k| {
            if aligned {
                (first.round() as i64 + k) as f64 * step
            } else {
                start + k as f64 * step
            }
        })
        .collect())
}

fn run_grid<F>(specs: &[ProtocolSpec], grid: &[f64], axis: ScanAxis, resolution: Resolution, make: F) -> Result<ScanResult>
where
    F: Fn(f64) -> Perturbation + Sync,
{
    let jobs: Vec<(usize, f64)> = (0..specs.len())
        .flat_map(|i| grid.iter().map(move |&x| (i, x)))
        .collect();
    // indexed collect keeps the output order independent of scheduling
    let points = jobs
        .par_iter()
        .map(|&(i, x)| {
            let spec = &specs[i];
            let run = run_protocol(spec, &make(x), resolution, Method::default())?;
            Ok(ScanPoint {
                perturbation: x,
                protocol: spec.protocol.name(),
                fidelity: run.fidelity,
                n_steps: run.n_steps,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScanResult { axis, points })
}

/// Target fidelity versus relative amplitude error η (Ω → (1 + η)Ω).
pub fn scan_rabi_error(specs: &[ProtocolSpec], etas: &[f64], model: RabiErrorModel, resolution: Resolution) -> Result<ScanResult> {
    if let Some(&bad) = etas.iter().find(|&&e| !(e > -1.0 && e.is_finite())) {
        return Err(Error::InvalidParameter { name: "eta", value: bad, reason: "must be finite and > -1" });
    }
    let all = model == RabiErrorModel::AllFields;
    run_grid(specs, etas, ScanAxis::RabiError, resolution, |eta| Perturbation::rabi_error(eta, all))
}

/// Target fidelity versus constant detuning error δ (Δ → Δ + δ in H₀).
pub fn scan_detuning(specs: &[ProtocolSpec], deltas: &[f64], resolution: Resolution) -> Result<ScanResult> {
    if let Some(&bad) = deltas.iter().find(|d| !d.is_finite()) {
        return Err(Error::InvalidParameter { name: "delta", value: bad, reason: "must be finite" });
    }
    run_grid(specs, deltas, ScanAxis::Detuning, resolution, Perturbation::detuning)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::protocol::{Protocol, RapParams, SchemeParams};
    use std::f64::consts::PI;

    #[test]
    fn grid_hits_zero_exactly() {
        let g = uniform_grid(-0.2, 0.2, 0.01).unwrap();
        assert_eq!(g.len(), 41);
        assert_eq!(g[20], 0.0);
        assert_eq!(g[0], -0.2);
        assert_eq!(g[40], 0.2);
        let d = uniform_grid(-2.0 * PI, 2.0 * PI, 2.0 * PI * 0.05).unwrap();
        assert_eq!(d.len(), 41);
        assert_eq!(d[20], 0.0);
    }

    #[test]
    fn grid_rejects_bad_ranges() {
        assert!(uniform_grid(1.0, 0.0, 0.1).is_err());
        assert!(uniform_grid(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn scan_is_ordered_and_bounded() {
        let params = SchemeParams::Rap(RapParams::new(2.0 * PI * 5.0, 2.0 * PI, 0.025));
        let specs: Vec<_> = Protocol::TWO_LEVEL
            .iter()
            .map(|&p| ProtocolSpec::new(p, params).unwrap())
            .collect();
        let etas = [-0.1, 0.0, 0.1];
        let r = scan_rabi_error(&specs, &etas, RabiErrorModel::AllFields, Resolution::Steps(200)).unwrap();
        assert_eq!(r.points.len(), 12);
        for (k, p) in r.points.iter().enumerate() {
            assert_eq!(p.protocol, Protocol::TWO_LEVEL[k / 3].name());
            assert_eq!(p.perturbation, etas[k % 3]);
            assert!((0.0..=1.0).contains(&p.fidelity));
        }
        let again = scan_rabi_error(&specs, &etas, RabiErrorModel::AllFields, Resolution::Steps(200)).unwrap();
        assert_eq!(r, again);
        assert!(r.to_csv(1.0).starts_with(SCAN_CSV_HEADER));
        assert_eq!(r.to_csv(1.0).lines().count(), 13);
    }

    #[test]
    fn rejects_eta_at_or_below_minus_one() {
        let params = SchemeParams::Rap(RapParams::new(1.0, 1.0, 3.0));
        let spec = ProtocolSpec::new(Protocol::Shape, params).unwrap();
        assert!(scan_rabi_error(&[spec], &[-1.0], RabiErrorModel::AllFields, Resolution::Steps(10)).is_err());
    }
}
