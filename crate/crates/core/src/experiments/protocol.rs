//! Protocols compared in the robustness study and how they are propagated.

use std::fmt;
use std::str::FromStr;

use crate::counterdiabatic::{
    h1_three_level_full, h1_three_level_simplified, h1_two_level, zero_where_field_vanishes,
};
use crate::error::{require_finite, require_positive, Error, Result};
use crate::experiments::analytic::AE_WINDOW_T0;
use crate::quantum::{evolve, max_spectral_norm, Method, OperatorMatrix, StateVector, TimeGrid, Trajectory};
use crate::schemes::{allen_eberly, composite_xyx, square_pulse, stirap_sin4, ThreeLevelScheme, TwoLevelScheme};

/// Default accuracy budget: largest ‖H‖·dt accumulated per step.
///
/// The midpoint rule is second order; at this budget doubling the step
/// count moves terminal populations by < 1e-8 on every reference scenario
/// (plain STIRAP at the short period is the binding case).
pub const DEFAULT_PHASE_PER_STEP: f64 = 5e-4;

/// Lower bound on the step count of any segment.
const MIN_STEPS: usize = 8;

/// Samples used to estimate max ‖H‖ for step selection.
const NORM_SAMPLES: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Protocol {
    /// Allen-Eberly passage under H₀ alone.
    Adiabatic,
    /// Allen-Eberly passage under H₀ + H₁.
    Shape,
    /// Resonant square π pulse.
    RabiPi,
    /// π/2(x) π(y) π/2(x).
    CompositeXyx,
    /// sin⁴ STIRAP under H₀ alone.
    Stirap,
    /// STIRAP plus the single 1–3 auxiliary field.
    StirapShape,
    /// STIRAP plus the full three-coupling auxiliary Hamiltonian.
    StirapShapeFull,
}

impl Protocol {
    pub const ALL: [Protocol; 7] = [
        Protocol::Adiabatic,
        Protocol::Shape,
        Protocol::RabiPi,
        Protocol::CompositeXyx,
        Protocol::Stirap,
        Protocol::StirapShape,
        Protocol::StirapShapeFull,
    ];

    /// The four two-level protocols of the robustness comparison.
    pub const TWO_LEVEL: [Protocol; 4] = [
        Protocol::Adiabatic,
        Protocol::Shape,
        Protocol::RabiPi,
        Protocol::CompositeXyx,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Protocol::Adiabatic => "adiabatic",
            Protocol::Shape => "shape",
            Protocol::RabiPi => "rabi-pi",
            Protocol::CompositeXyx => "composite-xyx",
            Protocol::Stirap => "stirap",
            Protocol::StirapShape => "stirap-shape",
            Protocol::StirapShapeFull => "stirap-shape-full",
        }
    }

    pub fn is_two_level(&self) -> bool {
        matches!(
            self,
            Protocol::Adiabatic | Protocol::Shape | Protocol::RabiPi | Protocol::CompositeXyx
        )
    }

    fn valid_names() -> String {
        Protocol::ALL.iter().map(Protocol::name).collect::<Vec<_>>().join(", ")
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Protocol::ALL
            .iter()
            .copied()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::UnknownName {
                kind: "protocol",
                name: s.to_string(),
                valid: Protocol::valid_names(),
            })
    }
}

/// Two-level parameters. Rabi and composite pulses reuse Ω₀ at zero
/// detuning; the Allen-Eberly pulses run over ±8t₀ unless overridden.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RapParams {
    pub omega0: f64,
    pub beta: f64,
    pub t0: f64,
    pub window_halfwidth: f64,
}

impl RapParams {
    pub fn new(omega0: f64, beta: f64, t0: f64) -> Self {
        Self { omega0, beta, t0, window_halfwidth: AE_WINDOW_T0 * t0 }
    }

    pub fn allen_eberly(&self) -> Result<TwoLevelScheme> {
        allen_eberly(self.omega0, self.beta, self.t0, self.window_halfwidth)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StirapParams {
    pub omega0: f64,
    pub period: f64,
    pub delay: f64,
    pub detuning: f64,
}

impl StirapParams {
    pub fn scheme(&self) -> Result<ThreeLevelScheme> {
        stirap_sin4(self.omega0, self.period, self.delay, self.detuning)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SchemeParams {
    Rap(RapParams),
    Stirap(StirapParams),
}

impl SchemeParams {
    fn kind(&self) -> &'static str {
        match self {
            SchemeParams::Rap(_) => "two-level",
            SchemeParams::Stirap(_) => "three-level",
        }
    }
}

/// A protocol with its parameters and the transfer it should perform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolSpec {
    pub protocol: Protocol,
    pub params: SchemeParams,
    pub initial_level: usize,
    pub target_level: usize,
}

impl ProtocolSpec {
    /// Ground-to-excited for two-level protocols, |1⟩ → |3⟩ for STIRAP.
    pub fn new(protocol: Protocol, params: SchemeParams) -> Result<Self> {
        let compatible = matches!(params, SchemeParams::Rap(_)) == protocol.is_two_level();
        if !compatible {
            return Err(Error::IncompatibleProtocol { protocol: protocol.name(), scheme: params.kind() });
        }
        match params {
            SchemeParams::Rap(p) => {
                require_positive("omega0", p.omega0)?;
                require_positive("beta", p.beta)?;
                require_positive("t0", p.t0)?;
                require_positive("window_halfwidth", p.window_halfwidth)?;
            }
            SchemeParams::Stirap(p) => {
                p.scheme()?;
            }
        }
        let (initial_level, target_level) = if protocol.is_two_level() { (0, 1) } else { (0, 2) };
        Ok(Self { protocol, params, initial_level, target_level })
    }

    pub fn dim(&self) -> usize {
        if self.protocol.is_two_level() {
            2
        } else {
            3
        }
    }
}

/// Systematic errors applied to a protocol.
///
/// `rabi_scale` multiplies every reference field amplitude and, when
/// `scale_auxiliary` is set, the auxiliary fields too (a common amplitude
/// error of all applied fields). `detuning_shift` adds a constant to the
/// detuning of H₀. Auxiliary fields are always designed for the nominal
/// scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Perturbation {
    pub rabi_scale: f64,
    pub detuning_shift: f64,
    pub scale_auxiliary: bool,
}

impl Default for Perturbation {
    fn default() -> Self {
        Self { rabi_scale: 1.0, detuning_shift: 0.0, scale_auxiliary: true }
    }
}

impl Perturbation {
    pub fn rabi_error(eta: f64, scale_auxiliary: bool) -> Self {
        Self { rabi_scale: 1.0 + eta, scale_auxiliary, ..Self::default() }
    }

    pub fn detuning(shift: f64) -> Self {
        Self { detuning_shift: shift, ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        require_positive("rabi_scale", self.rabi_scale)?;
        require_finite("detuning_shift", self.detuning_shift)
    }

    fn auxiliary_scale(&self) -> f64 {
        if self.scale_auxiliary {
            self.rabi_scale
        } else {
            1.0
        }
    }
}

/// How many time steps to take.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Resolution {
    /// Enough steps that max ‖H‖·dt ≤ the given phase.
    PhaseBudget(f64),
    /// A fixed count (split 1:2:1 across composite segments).
    Steps(usize),
}

impl Default for Resolution {
    fn default() -> Self {
        Resolution::PhaseBudget(DEFAULT_PHASE_PER_STEP)
    }
}

impl Resolution {
    /// The same rule with twice the steps.
    pub fn doubled(&self) -> Self {
        match *self {
            Resolution::PhaseBudget(p) => Resolution::PhaseBudget(0.5 * p),
            Resolution::Steps(n) => Resolution::Steps(2 * n),
        }
    }

    /// Step count for propagating `h_fn` across `window`.
    pub fn steps_for<F: Fn(f64) -> OperatorMatrix>(&self, h_fn: F, window: (f64, f64)) -> Result<usize> {
        match *self {
            Resolution::Steps(n) => Ok(n.max(2)),
            Resolution::PhaseBudget(p) => {
                require_positive("phase_per_step", p)?;
                let norm = max_spectral_norm(h_fn, window.0, window.1, NORM_SAMPLES)?;
                let n = (norm * (window.1 - window.0) / p).ceil() as usize;
                Ok(n.max(MIN_STEPS))
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct ProtocolRun {
    pub trajectory: Trajectory,
    /// Terminal population of the target level.
    pub fidelity: f64,
    pub n_steps: usize,
}

type BoxedHamiltonian = Box<dyn Fn(f64) -> OperatorMatrix + Send + Sync>;

fn two_level_hamiltonian(nominal: TwoLevelScheme, perturbed: TwoLevelScheme, aux: Option<f64>) -> BoxedHamiltonian {
    Box::new(move |t| {
        let h0 = perturbed.h0(t);
        match aux {
            Some(scale) => {
                // closed form; zero only where Ω = 0, which never happens inside the window
                let h1 = zero_where_field_vanishes(h1_two_level(&nominal, t), 2)
                    .expect("two-level auxiliary field is finite for a finite scheme");
                h0 + h1 * scale
            }
            None => h0,
        }
    })
}

fn three_level_hamiltonian(protocol: Protocol, nominal: ThreeLevelScheme, perturbed: ThreeLevelScheme, scale: f64) -> BoxedHamiltonian {
    Box::new(move |t| {
        let h0 = perturbed.h0(t);
        let h1 = match protocol {
            Protocol::StirapShape => h1_three_level_simplified(&nominal, t),
            Protocol::StirapShapeFull => h1_three_level_full(&nominal, t),
            _ => return h0,
        };
        let h1 = zero_where_field_vanishes(h1, 3).expect("three-level auxiliary field is finite for a finite scheme");
        h0 + h1 * scale
    })
}

/// The Hamiltonian a continuous (single-segment) protocol applies, with its
/// time window. Composite pulses are piecewise and handled by [`run_protocol`].
pub fn protocol_hamiltonian(spec: &ProtocolSpec, pert: &Perturbation) -> Result<(BoxedHamiltonian, (f64, f64))> {
    pert.validate()?;
    match (spec.protocol, spec.params) {
        (Protocol::Adiabatic | Protocol::Shape, SchemeParams::Rap(p)) => {
            let nominal = p.allen_eberly()?;
            let perturbed = nominal.perturbed(pert.rabi_scale, pert.detuning_shift);
            let aux = (spec.protocol == Protocol::Shape).then(|| pert.auxiliary_scale());
            Ok((two_level_hamiltonian(nominal, perturbed, aux), nominal.window()))
        }
        (Protocol::RabiPi, SchemeParams::Rap(p)) => {
            let duration = std::f64::consts::PI / p.omega0;
            let nominal = square_pulse(p.omega0, 0.0, duration, 0.0)?;
            let perturbed = nominal.perturbed(pert.rabi_scale, pert.detuning_shift);
            Ok((two_level_hamiltonian(nominal, perturbed, None), nominal.window()))
        }
        (Protocol::Stirap | Protocol::StirapShape | Protocol::StirapShapeFull, SchemeParams::Stirap(p)) => {
            let nominal = p.scheme()?;
            let perturbed = nominal.perturbed(pert.rabi_scale, pert.detuning_shift);
            let h = three_level_hamiltonian(spec.protocol, nominal, perturbed, pert.auxiliary_scale());
            Ok((h, nominal.window()))
        }
        (protocol, params) => Err(Error::IncompatibleProtocol { protocol: protocol.name(), scheme: params.kind() }),
    }
}

/// Propagates `spec` from its initial level and reports the target population.
pub fn run_protocol(spec: &ProtocolSpec, pert: &Perturbation, resolution: Resolution, method: Method) -> Result<ProtocolRun> {
    let psi0 = StateVector::basis(spec.dim(), spec.initial_level);
    let trajectory = match (spec.protocol, spec.params) {
        (Protocol::CompositeXyx, SchemeParams::Rap(p)) => {
            pert.validate()?;
            run_composite(p.omega0, pert, resolution, method, &psi0)?
        }
        _ => {
            let (h, window) = protocol_hamiltonian(spec, pert)?;
            let n = resolution.steps_for(&h, window)?;
            let grid = TimeGrid::new(window.0, window.1, n)?;
            evolve(&h, &psi0, &grid, method)?
        }
    };
    let fidelity = trajectory.terminal_populations()[spec.target_level].clamp(0.0, 1.0);
    let n_steps = trajectory.grid.n_steps();
    Ok(ProtocolRun { trajectory, fidelity, n_steps })
}

/// Segment-wise propagation with a common step length: the π/2 pieces
/// take `unit` steps and the π piece `2·unit`.
fn run_composite(omega0: f64, pert: &Perturbation, resolution: Resolution, method: Method, psi0: &StateVector) -> Result<Trajectory> {
    let seq = composite_xyx(omega0, 0.0)?.perturbed(pert.rabi_scale, pert.detuning_shift);
    let first = seq.segments()[0];
    let unit = match resolution {
        Resolution::Steps(n) => (n / 4).max(2),
        budget => budget.steps_for(|t| first.scheme.h0(t), first.scheme.window())?,
    };
    let mut psi = psi0.clone();
    let mut joined: Option<Trajectory> = None;
    for (k, seg) in seq.segments().iter().enumerate() {
        let steps = if k == 1 { 2 * unit } else { unit };
        let grid = TimeGrid::new(seg.start, seg.end(), steps)?;
        let scheme = seg.scheme;
        let offset = seg.start;
        // square pulses are constant, so the local clock only matters for bookkeeping
        let traj = evolve(|t| scheme.h0(t - offset), &psi, &grid, method)?;
        psi = traj.terminal_state().clone();
        joined = Some(match joined {
            None => traj,
            Some(prev) => prev.concatenate(traj)?,
        });
    }
    Ok(joined.expect("composite sequence has three segments"))
}
