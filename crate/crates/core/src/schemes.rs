//! Pulse schemes with analytic derivatives and the bare-basis reference
//! Hamiltonians built from them.
//!
//! Two-level basis order is (|0⟩, |1⟩) with H₀[0][0] = Δ/2, so the ground
//! state |0⟩ is the lower diabatic level while Δ < 0. Three-level basis
//! order is (|1⟩, |2⟩, |3⟩) with the pump on 1–2 and the Stokes on 2–3.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64 as C64;

use crate::error::{require_finite, require_positive, Error, Result};
use crate::quantum::OperatorMatrix;

/// Catalog names addressable from configuration files.
pub const SCHEME_NAMES: [&str; 5] = [
    "allen-eberly",
    "landau-zener",
    "square-pi",
    "composite-xyx",
    "stirap-sin4",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TwoLevelShape {
    /// Ω_R = Ω₀ sech(πt/2t₀), Δ = (2β²t₀/π) tanh(πt/2t₀).
    AllenEberly { omega0: f64, beta: f64, t0: f64 },
    /// Ω_R = Ω₀, Δ = rate·t.
    LandauZener { omega0: f64, sweep_rate: f64 },
    /// Constant Ω_R and Δ.
    Square { omega0: f64, detuning: f64 },
}

/// Rabi frequency and detuning of a driven two-level system as functions of
/// time, with their first derivatives.
///
/// `amplitude_scale` and `detuning_offset` model laser errors: the Rabi
/// frequency is multiplied by the scale and the offset is added to Δ(t).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoLevelScheme {
    shape: TwoLevelShape,
    window: (f64, f64),
    coupling_phase: f64,
    amplitude_scale: f64,
    detuning_offset: f64,
}

fn sech(x: f64) -> f64 {
    1.0 / x.cosh()
}

fn check_window(window: (f64, f64)) -> Result<()> {
    require_finite("window start", window.0)?;
    require_finite("window end", window.1)?;
    if window.1 > window.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "window end",
            value: window.1,
            reason: "must exceed the window start",
        })
    }
}

impl TwoLevelScheme {
    fn with_shape(shape: TwoLevelShape, window: (f64, f64), coupling_phase: f64) -> Result<Self> {
        check_window(window)?;
        require_finite("coupling_phase", coupling_phase)?;
        Ok(Self {
            shape,
            window,
            coupling_phase,
            amplitude_scale: 1.0,
            detuning_offset: 0.0,
        })
    }

    pub fn shape(&self) -> &TwoLevelShape {
        &self.shape
    }

    pub fn name(&self) -> &'static str {
        match self.shape {
            TwoLevelShape::AllenEberly { .. } => "allen-eberly",
            TwoLevelShape::LandauZener { .. } => "landau-zener",
            TwoLevelShape::Square { .. } => "square-pi",
        }
    }

    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    pub fn coupling_phase(&self) -> f64 {
        self.coupling_phase
    }

    pub fn amplitude_scale(&self) -> f64 {
        self.amplitude_scale
    }

    pub fn detuning_offset(&self) -> f64 {
        self.detuning_offset
    }

    /// Nominal peak Rabi frequency Ω₀ (before any amplitude error).
    pub fn peak_rabi(&self) -> f64 {
        match self.shape {
            TwoLevelShape::AllenEberly { omega0, .. }
            | TwoLevelShape::LandauZener { omega0, .. }
            | TwoLevelShape::Square { omega0, .. } => omega0,
        }
    }

    /// A copy with the Rabi frequency scaled and the detuning shifted.
    pub fn perturbed(&self, amplitude_scale: f64, detuning_offset: f64) -> Self {
        Self {
            amplitude_scale,
            detuning_offset,
            ..*self
        }
    }

    /// The same scheme without amplitude or detuning errors.
    pub fn nominal(&self) -> Self {
        self.perturbed(1.0, 0.0)
    }

    pub fn with_coupling_phase(&self, coupling_phase: f64) -> Self {
        Self { coupling_phase, ..*self }
    }

    pub fn with_window(&self, window: (f64, f64)) -> Result<Self> {
        check_window(window)?;
        Ok(Self { window, ..*self })
    }

    pub fn rabi(&self, t: f64) -> f64 {
        let base = match self.shape {
            TwoLevelShape::AllenEberly { omega0, t0, .. } => omega0 * sech(PI * t / (2.0 * t0)),
            TwoLevelShape::LandauZener { omega0, .. } | TwoLevelShape::Square { omega0, .. } => omega0,
        };
        self.amplitude_scale * base
    }

    pub fn rabi_dot(&self, t: f64) -> f64 {
        let base = match self.shape {
            TwoLevelShape::AllenEberly { omega0, t0, .. } => {
                let x = PI * t / (2.0 * t0);
                -(PI * omega0 / (2.0 * t0)) * sech(x) * x.tanh()
            }
            _ => 0.0,
        };
        self.amplitude_scale * base
    }

    pub fn detuning(&self, t: f64) -> f64 {
        let base = match self.shape {
            TwoLevelShape::AllenEberly { beta, t0, .. } => {
                (2.0 * beta * beta * t0 / PI) * (PI * t / (2.0 * t0)).tanh()
            }
            TwoLevelShape::LandauZener { sweep_rate, .. } => sweep_rate * t,
            TwoLevelShape::Square { detuning, .. } => detuning,
        };
        base + self.detuning_offset
    }

    pub fn detuning_dot(&self, t: f64) -> f64 {
        match self.shape {
            TwoLevelShape::AllenEberly { beta, t0, .. } => {
                let s = sech(PI * t / (2.0 * t0));
                beta * beta * s * s
            }
            TwoLevelShape::LandauZener { sweep_rate, .. } => sweep_rate,
            TwoLevelShape::Square { .. } => 0.0,
        }
    }

    /// Ω(t) = √(Δ² + Ω_R²).
    pub fn generalized_rabi(&self, t: f64) -> f64 {
        self.detuning(t).hypot(self.rabi(t))
    }

    /// The reference Hamiltonian at `t`; see [`h0_two_level`].
    pub fn h0(&self, t: f64) -> OperatorMatrix {
        h0_two_level(self, t)
    }
}

/// Allen-Eberly chirp over the symmetric window [−halfwidth, halfwidth].
pub fn allen_eberly(omega0: f64, beta: f64, t0: f64, window_halfwidth: f64) -> Result<TwoLevelScheme> {
    require_positive("omega0", omega0)?;
    require_positive("beta", beta)?;
    require_positive("t0", t0)?;
    require_positive("window_halfwidth", window_halfwidth)?;
    TwoLevelScheme::with_shape(
        TwoLevelShape::AllenEberly { omega0, beta, t0 },
        (-window_halfwidth, window_halfwidth),
        0.0,
    )
}

/// Constant coupling with a linear detuning sweep.
pub fn landau_zener(omega0: f64, sweep_rate: f64, window: (f64, f64)) -> Result<TwoLevelScheme> {
    require_positive("omega0", omega0)?;
    require_finite("sweep_rate", sweep_rate)?;
    TwoLevelScheme::with_shape(TwoLevelShape::LandauZener { omega0, sweep_rate }, window, 0.0)
}

/// Constant Rabi frequency and detuning over [0, duration]. A π pulse has
/// duration π/Ω₀.
pub fn square_pulse(omega0: f64, detuning: f64, duration: f64, coupling_phase: f64) -> Result<TwoLevelScheme> {
    require_positive("omega0", omega0)?;
    require_finite("detuning", detuning)?;
    require_positive("duration", duration)?;
    TwoLevelScheme::with_shape(TwoLevelShape::Square { omega0, detuning }, (0.0, duration), coupling_phase)
}

/// One piece of a [`PulseSequence`]; the scheme's own window is
/// `[0, duration]` and `start` places it on the sequence clock.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub scheme: TwoLevelScheme,
    pub start: f64,
    pub duration: f64,
}

impl Segment {
    pub fn end(&self) -> f64 {
        self.start + self.duration
    }
}

/// Contiguous concatenation of two-level segments starting at t = 0.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseSequence {
    segments: Vec<Segment>,
}

impl PulseSequence {
    pub fn new(pieces: Vec<(TwoLevelScheme, f64)>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::InvalidParameter {
                name: "segments",
                value: 0.0,
                reason: "a sequence needs at least one segment",
            });
        }
        let mut start = 0.0;
        let mut segments = Vec::with_capacity(pieces.len());
        for (scheme, duration) in pieces {
            require_positive("duration", duration)?;
            segments.push(Segment { scheme, start, duration });
            start += duration;
        }
        Ok(Self { segments })
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    /// Applies the same amplitude scale and detuning offset to every segment.
    pub fn perturbed(&self, amplitude_scale: f64, detuning_offset: f64) -> Self {
        Self {
            segments: self
                .segments
                .iter()
                .map(|s| Segment {
                    scheme: s.scheme.perturbed(amplitude_scale, detuning_offset),
                    ..*s
                })
                .collect(),
        }
    }
}

/// π/2(x) π(y) π/2(x) with square pulses of Rabi frequency Ω₀ and detuning Δ.
pub fn composite_xyx(omega0: f64, detuning: f64) -> Result<PulseSequence> {
    require_positive("omega0", omega0)?;
    let half = PI / (2.0 * omega0);
    let full = PI / omega0;
    PulseSequence::new(vec![
        (square_pulse(omega0, detuning, half, 0.0)?, half),
        (square_pulse(omega0, detuning, full, FRAC_PI_2)?, full),
        (square_pulse(omega0, detuning, half, 0.0)?, half),
    ])
}

/// sin⁴(πt/T) on (0, T), zero elsewhere.
pub fn sin4_envelope(t: f64, period: f64) -> f64 {
    if t > 0.0 && t < period {
        (PI * t / period).sin().powi(4)
    } else {
        0.0
    }
}

/// d/dt of [`sin4_envelope`].
pub fn sin4_envelope_dot(t: f64, period: f64) -> f64 {
    if t > 0.0 && t < period {
        let x = PI * t / period;
        (4.0 * PI / period) * x.sin().powi(3) * x.cos()
    } else {
        0.0
    }
}

/// Stokes-then-pump STIRAP pulse pair: Ω_s = Ω₀ f(t), Ω_p = Ω₀ f(t − τ_d),
/// with a constant one-photon detuning Δ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThreeLevelScheme {
    omega0: f64,
    period: f64,
    delay: f64,
    detuning: f64,
    amplitude_scale: f64,
    detuning_offset: f64,
}

/// The sin⁴ STIRAP pair; the window is [0, T + τ_d].
pub fn stirap_sin4(omega0: f64, period: f64, delay: f64, detuning: f64) -> Result<ThreeLevelScheme> {
    require_positive("omega0", omega0)?;
    require_positive("period", period)?;
    require_positive("delay", delay)?;
    require_finite("detuning", detuning)?;
    if delay >= period {
        return Err(Error::InvalidParameter {
            name: "delay",
            value: delay,
            reason: "must be shorter than the pulse period",
        });
    }
    Ok(ThreeLevelScheme {
        omega0,
        period,
        delay,
        detuning,
        amplitude_scale: 1.0,
        detuning_offset: 0.0,
    })
}

impl ThreeLevelScheme {
    pub fn name(&self) -> &'static str {
        "stirap-sin4"
    }

    pub fn peak_rabi(&self) -> f64 {
        self.omega0
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn delay(&self) -> f64 {
        self.delay
    }

    pub fn window(&self) -> (f64, f64) {
        (0.0, self.period + self.delay)
    }

    pub fn amplitude_scale(&self) -> f64 {
        self.amplitude_scale
    }

    pub fn perturbed(&self, amplitude_scale: f64, detuning_offset: f64) -> Self {
        Self {
            amplitude_scale,
            detuning_offset,
            ..*self
        }
    }

    pub fn nominal(&self) -> Self {
        self.perturbed(1.0, 0.0)
    }

    pub fn stokes(&self, t: f64) -> f64 {
        self.amplitude_scale * self.omega0 * sin4_envelope(t, self.period)
    }

    pub fn stokes_dot(&self, t: f64) -> f64 {
        self.amplitude_scale * self.omega0 * sin4_envelope_dot(t, self.period)
    }

    pub fn pump(&self, t: f64) -> f64 {
        self.stokes(t - self.delay)
    }

    pub fn pump_dot(&self, t: f64) -> f64 {
        self.stokes_dot(t - self.delay)
    }

    pub fn detuning(&self) -> f64 {
        self.detuning + self.detuning_offset
    }

    /// Ω(t) = √(Ω_p² + Ω_s²).
    pub fn total_rabi(&self, t: f64) -> f64 {
        self.pump(t).hypot(self.stokes(t))
    }

    pub fn h0(&self, t: f64) -> OperatorMatrix {
        h0_three_level(self, t)
    }
}

/// ½[[Δ, Ω_R e^{−iφ}], [Ω_R e^{iφ}, −Δ]] with φ the coupling phase.
pub fn h0_two_level(s: &TwoLevelScheme, t: f64) -> OperatorMatrix {
    let delta = s.detuning(t);
    let coupling = C64::from_polar(0.5 * s.rabi(t), -s.coupling_phase());
    OperatorMatrix::from_row_slice(
        2,
        &[
            C64::new(0.5 * delta, 0.0),
            coupling,
            coupling.conj(),
            C64::new(-0.5 * delta, 0.0),
        ],
    )
}

/// ½[[0, Ω_p, 0], [Ω_p, 2Δ, Ω_s], [0, Ω_s, 0]].
pub fn h0_three_level(s: &ThreeLevelScheme, t: f64) -> OperatorMatrix {
    let p = 0.5 * s.pump(t);
    let st = 0.5 * s.stokes(t);
    let d = s.detuning();
    OperatorMatrix::from_real_rows(&[&[0.0, p, 0.0], &[p, d, st], &[0.0, st, 0.0]])
}


#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    fn d6(f: impl Fn(f64) -> f64, t: f64, h: f64) -> f64 {
        (45.0 * (f(t + h) - f(t - h)) - 9.0 * (f(t + 2.0 * h) - f(t - 2.0 * h)) + (f(t + 3.0 * h) - f(t - 3.0 * h)))
            / (60.0 * h)
    }

    fn close(analytic: f64, numeric: f64, scale: f64) -> bool {
        (analytic - numeric).abs() <= 1e-6 * analytic.abs().max(numeric.abs()).max(1e-3 * scale)
    }

    proptest! {
        #[test]
        fn allen_eberly_derivatives(omega0 in 0.5..50.0_f64, beta in 0.5..10.0_f64, t0 in 0.01..3.0_f64, u in -0.99..0.99_f64) {
            let s = allen_eberly(omega0, beta, t0, 8.0 * t0).unwrap();
            let t = u * 8.0 * t0;
            let h = 16.0 * t0 / 1e4;
            let scale = s.peak_rabi() / t0 + beta * beta;
            prop_assert!(close(s.rabi_dot(t), d6(|x| s.rabi(x), t, h), scale));
            prop_assert!(close(s.detuning_dot(t), d6(|x| s.detuning(x), t, h), scale));
        }

        #[test]
        fn stirap_derivatives(omega0 in 1.0..100.0_f64, period in 0.05..5.0_f64, frac in 0.05..0.6_f64, u in 0.02..0.98_f64) {
            let s = stirap_sin4(omega0, period, frac * period, 1.0).unwrap();
            let (a, b) = s.window();
            let t = a + u * (b - a);
            let h = (b - a) / 1e4;
            // sin⁴ is only C³ at its switch points; stay clear of them
            let edges = [0.0, period, frac * period, period + frac * period];
            prop_assume!(edges.iter().all(|e| (t - e).abs() > 10.0 * h));
            let scale = omega0 / period;
            prop_assert!(close(s.stokes_dot(t), d6(|x| s.stokes(x), t, h), scale));
            prop_assert!(close(s.pump_dot(t), d6(|x| s.pump(x), t, h), scale));
        }
    }
}
