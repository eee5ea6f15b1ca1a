//! Reference results, protocol runs, robustness scans and figure data.

pub mod analytic;
pub mod figures;
pub mod protocol;
pub mod scan;


pub use analytic::{
    max_abs_omega_a, minimal_tau, p1_allen_eberly_analytic, p1_square_pulse, MinimalTau, ADIABATIC_TAU,
};
pub use figures::{reproduce_figure, FigureData, FigureId, FigureOptions};
pub use protocol::{
    run_protocol, Perturbation, Protocol, ProtocolRun, ProtocolSpec, RapParams, Resolution, SchemeParams,
    StirapParams,
};
pub use scan::{scan_detuning, scan_rabi_error, RabiErrorModel, ScanPoint, ScanResult};
