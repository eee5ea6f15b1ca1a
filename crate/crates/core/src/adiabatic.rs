//! Closed-form instantaneous eigensystems, adiabaticity diagnostics and
//! projections of trajectories onto the adiabatic frame.

use num_complex::Complex64 as C64;

use crate::counterdiabatic::{mixing_angles_three_level, omega_a};
use crate::error::{Error, Result};
use crate::quantum::{eigensystem_hermitian, OperatorMatrix, StateVector, Trajectory};
use crate::schemes::{ThreeLevelScheme, TwoLevelScheme};

/// Ratio above which a scheme is reported as non-adiabatic.
pub const ADIABATIC_REPORT_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone)]
pub struct TwoLevelEigenstates {
    pub plus: StateVector,
    pub minus: StateVector,
    pub e_plus: f64,
    pub e_minus: f64,
    /// θ = arccos(−Δ/Ω).
    pub theta: f64,
}

/// Eigenpairs of [`h0_two_level`](crate::schemes::h0_two_level).
///
/// With θ = arccos(−Δ/Ω) and coupling phase φ:
/// |λ₋⟩ = cos(θ/2)|0⟩ − e^{iφ} sin(θ/2)|1⟩ and
/// |λ₊⟩ = sin(θ/2)|0⟩ + e^{iφ} cos(θ/2)|1⟩, with E± = ±Ω/2.
/// |λ₋⟩ starts on |0⟩ (θ → 0 as Δ → −∞) and ends on |1⟩.
pub fn eigenstates_two_level(s: &TwoLevelScheme, t: f64) -> Result<TwoLevelEigenstates> {
    let omega = s.generalized_rabi(t);
    if omega == 0.0 {
        return Err(Error::VanishingField { time: t });
    }
    let theta = (-s.detuning(t) / omega).clamp(-1.0, 1.0).acos();
    let (sin_h, cos_h) = (0.5 * theta).sin_cos();
    let phase = C64::from_polar(1.0, s.coupling_phase());
    let minus = StateVector::new(vec![C64::new(cos_h, 0.0), -phase * sin_h])?;
    let plus = StateVector::new(vec![C64::new(sin_h, 0.0), phase * cos_h])?;
    Ok(TwoLevelEigenstates {
        plus,
        minus,
        e_plus: 0.5 * omega,
        e_minus: -0.5 * omega,
        theta,
    })
}

#[derive(Debug, Clone)]
pub struct ThreeLevelEigenstates {
    pub plus: StateVector,
    pub zero: StateVector,
    pub minus: StateVector,
    pub e_plus: f64,
    pub e_zero: f64,
    pub e_minus: f64,
}

/// Eigenvectors of [`h0_three_level`](crate::schemes::h0_three_level) from
/// the mixing angles:
///
/// |λ₊⟩ = sinθ sinφ|1⟩ + cosφ|2⟩ + cosθ sinφ|3⟩,
/// |λ₀⟩ = cosθ|1⟩ − sinθ|3⟩,
/// |λ₋⟩ = sinθ cosφ|1⟩ − sinφ|2⟩ + cosθ cosφ|3⟩.
///
/// E₀ is exactly zero; E₊ and E₋ are the outer eigenvalues from numeric
/// diagonalization.
pub fn eigenstates_three_level(s: &ThreeLevelScheme, t: f64) -> Result<ThreeLevelEigenstates> {
    let m = mixing_angles_three_level(s, t)?;
    let (st, ct) = m.theta.sin_cos();
    let (sp, cp) = m.phi.sin_cos();
    let plus = StateVector::from_real(&[st * sp, cp, ct * sp])?;
    let zero = StateVector::from_real(&[ct, 0.0, -st])?;
    let minus = StateVector::from_real(&[st * cp, -sp, ct * cp])?;
    let eig = eigensystem_hermitian(&s.h0(t))?;
    Ok(ThreeLevelEigenstates {
        plus,
        zero,
        minus,
        e_plus: eig.values[2],
        e_zero: 0.0,
        e_minus: eig.values[0],
    })
}

/// ½|Ω_a|/Ω; the scheme is adiabatic at `t` when this is ≪ 1.
pub fn adiabaticity_ratio(s: &TwoLevelScheme, t: f64) -> Result<f64> {
    let oa = omega_a(s, t)?;
    Ok(0.5 * oa.abs() / s.generalized_rabi(t))
}

/// Largest [`adiabaticity_ratio`] over `samples + 1` points of the window.
pub fn max_adiabaticity_ratio(s: &TwoLevelScheme, samples: usize) -> Result<f64> {
    let (a, b) = s.window();
    (0..=samples)
        .map(|k| adiabaticity_ratio(s, a + (b - a) * k as f64 / samples as f64))
        .try_fold(0.0_f64, |m, r| r.map(|r| m.max(r)))
}

/// A scheme whose reference Hamiltonian has a closed-form eigenbasis.
pub trait AdiabaticBasis {
    fn window(&self) -> (f64, f64);

    /// Eigenvalues in ascending order with their analytic eigenvectors.
    fn adiabatic_basis(&self, t: f64) -> Result<(Vec<f64>, Vec<StateVector>)>;
}

impl AdiabaticBasis for TwoLevelScheme {
    fn window(&self) -> (f64, f64) {
        TwoLevelScheme::window(self)
    }

    fn adiabatic_basis(&self, t: f64) -> Result<(Vec<f64>, Vec<StateVector>)> {
        let e = eigenstates_two_level(self, t)?;
        Ok((vec![e.e_minus, e.e_plus], vec![e.minus, e.plus]))
    }
}

impl AdiabaticBasis for ThreeLevelScheme {
    fn window(&self) -> (f64, f64) {
        ThreeLevelScheme::window(self)
    }

    fn adiabatic_basis(&self, t: f64) -> Result<(Vec<f64>, Vec<StateVector>)> {
        let e = eigenstates_three_level(self, t)?;
        Ok((
            vec![e.e_minus, e.e_zero, e.e_plus],
            vec![e.minus, e.zero, e.plus],
        ))
    }
}

/// A trajectory expressed in the instantaneous eigenbasis.
#[derive(Debug, Clone)]
pub struct AdiabaticFrame {
    pub times: Vec<f64>,
    /// Ascending eigenvalues per sample.
    pub energies: Vec<Vec<f64>>,
    /// ⟨λₙ(t_k)|ψ(t_k)⟩ per sample, same ordering as `energies`.
    pub amplitudes: Vec<Vec<C64>>,
}

impl AdiabaticFrame {
    /// |⟨λₙ|ψ⟩|² per sample.
    pub fn populations(&self) -> Vec<Vec<f64>> {
        self.amplitudes
            .iter()
            .map(|row| row.iter().map(|a| a.norm_sqr()).collect())
            .collect()
    }

    /// Population history of eigenstate `n`.
    pub fn population_of(&self, n: usize) -> Vec<f64> {
        self.amplitudes.iter().map(|row| row[n].norm_sqr()).collect()
    }
}

/// Projects every sample of `traj` onto the analytic eigenbasis of `s`.
pub fn project_adiabatic<S: AdiabaticBasis + ?Sized>(traj: &Trajectory, s: &S) -> Result<AdiabaticFrame> {
    let (a, b) = s.window();
    let (ta, tb) = (traj.grid.t_start(), traj.grid.t_end());
    let tol = 1e-9 * (b - a);
    if (ta - a).abs() > tol || (tb - b).abs() > tol {
        return Err(Error::WindowMismatch {
            traj_start: ta,
            traj_end: tb,
            scheme_start: a,
            scheme_end: b,
        });
    }
    let mut times = Vec::with_capacity(traj.states.len());
    let mut energies = Vec::with_capacity(traj.states.len());
    let mut amplitudes = Vec::with_capacity(traj.states.len());
    for (t, psi) in traj.times().zip(&traj.states) {
        let (values, vectors) = s.adiabatic_basis(t)?;
        times.push(t);
        energies.push(values);
        amplitudes.push(vectors.iter().map(|v| v.inner(psi)).collect());
    }
    Ok(AdiabaticFrame { times, energies, amplitudes })
}

/// ⟨ψ(t)|H(t)|ψ(t)⟩ at every sample.
pub fn average_energy<F>(traj: &Trajectory, h_fn: F) -> Vec<f64>
where
    F: Fn(f64) -> OperatorMatrix,
{
    traj.times()
        .zip(&traj.states)
        .map(|(t, psi)| h_fn(t).expectation(psi).re)
        .collect()
}
