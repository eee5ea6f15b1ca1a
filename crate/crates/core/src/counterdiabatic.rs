//! Auxiliary (counterdiabatic) Hamiltonians that cancel the non-adiabatic
//! couplings of a reference Hamiltonian H₀(t):
//!
//! H₁ = i Σₙ (|∂ₜλₙ⟩⟨λₙ| − ⟨λₙ|∂ₜλₙ⟩|λₙ⟩⟨λₙ|)
//!
//! Closed forms are provided for the two-level chirp and the three-level
//! lambda system; [`cd_generic`] evaluates the sum numerically for any
//! gapped Hermitian H₀ and serves as their oracle.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::quantum::{eigensystem_hermitian, Eigensystem, OperatorMatrix};
use crate::schemes::{ThreeLevelScheme, TwoLevelScheme};

const I: C64 = C64::new(0.0, 1.0);

/// Ω_a = (Ω_R Δ̇ − Ω̇_R Δ)/Ω², the rate of the mixing angle
/// θ = arccos(−Δ/Ω).
pub fn omega_a(s: &TwoLevelScheme, t: f64) -> Result<f64> {
    let rabi = s.rabi(t);
    let delta = s.detuning(t);
    let omega_sq = rabi * rabi + delta * delta;
    if omega_sq == 0.0 {
        return Err(Error::VanishingField { time: t });
    }
    Ok((rabi * s.detuning_dot(t) - s.rabi_dot(t) * delta) / omega_sq)
}

/// Two-level auxiliary Hamiltonian.
///
/// For H₀ = ½(Δσz + Ω_R(cos φ σx + sin φ σy)) this is
/// ½Ω_a(sin φ σx − cos φ σy): the quadrature orthogonal to the drive. With
/// φ = 0 it reads ½[[0, iΩ_a], [−iΩ_a, 0]].
pub fn h1_two_level(s: &TwoLevelScheme, t: f64) -> Result<OperatorMatrix> {
    let omega_a = omega_a(s, t)?;
    let upper = I * C64::from_polar(0.5 * omega_a, -s.coupling_phase());
    Ok(OperatorMatrix::from_row_slice(
        2,
        &[C64::new(0.0, 0.0), upper, upper.conj(), C64::new(0.0, 0.0)],
    ))
}

/// Mixing angles of the three-level eigenbasis and their rates.
///
/// θ = atan2(Ω_p, Ω_s) ∈ [0, π/2] and 2φ = atan2(Ω, Δ) ∈ (0, π).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixingAngles3 {
    pub theta: f64,
    pub phi: f64,
    pub theta_dot: f64,
    pub phi_dot: f64,
}

pub fn mixing_angles_three_level(s: &ThreeLevelScheme, t: f64) -> Result<MixingAngles3> {
    let (p, st) = (s.pump(t), s.stokes(t));
    let (p_dot, s_dot) = (s.pump_dot(t), s.stokes_dot(t));
    let delta = s.detuning();
    let omega_sq = p * p + st * st;
    if omega_sq == 0.0 {
        return Err(Error::VanishingField { time: t });
    }
    let omega = omega_sq.sqrt();
    Ok(MixingAngles3 {
        theta: p.atan2(st),
        phi: 0.5 * omega.atan2(delta),
        theta_dot: (p_dot * st - s_dot * p) / omega_sq,
        phi_dot: (p_dot * p + s_dot * st) * delta / (2.0 * omega * (delta * delta + omega_sq)),
    })
}

/// Full three-level auxiliary Hamiltonian, couplings on 1–2, 2–3 and 1–3:
/// i[[0, φ̇ sin θ, θ̇], [−φ̇ sin θ, 0, −φ̇ cos θ], [−θ̇, φ̇ cos θ, 0]].
pub fn h1_three_level_full(s: &ThreeLevelScheme, t: f64) -> Result<OperatorMatrix> {
    let m = mixing_angles_three_level(s, t)?;
    let (sin_t, cos_t) = m.theta.sin_cos();
    let a = m.phi_dot * sin_t;
    let b = m.phi_dot * cos_t;
    let z = C64::new(0.0, 0.0);
    Ok(OperatorMatrix::from_row_slice(
        3,
        &[
            z,
            I * a,
            I * m.theta_dot,
            -I * a,
            z,
            -I * b,
            -I * m.theta_dot,
            I * b,
            z,
        ],
    ))
}

/// Ω′_a = 2θ̇, the Rabi frequency of the single 1–3 auxiliary field.
pub fn omega_a_prime(s: &ThreeLevelScheme, t: f64) -> Result<f64> {
    Ok(2.0 * mixing_angles_three_level(s, t)?.theta_dot)
}

/// The 1–3 part of [`h1_three_level_full`]: ½[[0, 0, iΩ′_a], [0, 0, 0], [−iΩ′_a, 0, 0]].
///
/// The φ̇ terms only couple λ₊ and λ₋, so dropping them leaves the
/// dark-state amplitude untouched.
pub fn h1_three_level_simplified(s: &ThreeLevelScheme, t: f64) -> Result<OperatorMatrix> {
    let half = 0.5 * omega_a_prime(s, t)?;
    let z = C64::new(0.0, 0.0);
    Ok(OperatorMatrix::from_row_slice(
        3,
        &[z, z, I * half, z, z, z, -I * half, z, z],
    ))
}

/// Maps a vanishing-field error to the zero matrix.
///
/// Where the controls are off the eigenbasis is frozen, and all catalog
/// schemes switch off smoothly, so zero is the continuous extension of H₁.
pub fn zero_where_field_vanishes(h1: Result<OperatorMatrix>, dim: usize) -> Result<OperatorMatrix> {
    match h1 {
        Err(Error::VanishingField { .. }) => Ok(OperatorMatrix::zeros(dim)),
        other => other,
    }
}

/// Default finite-difference step for [`cd_generic`]: window length / 10⁵.
pub fn default_cd_step(window: (f64, f64)) -> f64 {
    (window.1 - window.0) / 1e5
}

/// Numeric counterdiabatic Hamiltonian at `t`.
///
/// Eigenvectors at t ± h are phase-matched to those at t (parallel
/// transport), ∂ₜλₙ comes from a central difference, and the result is
/// Hermitized. Fails when the smallest eigenvalue gap on [t − h, t + h]
/// drops below 10³·h·‖Ḣ‖.
pub fn cd_generic<F>(h_fn: F, t: f64, h: f64) -> Result<OperatorMatrix>
where
    F: Fn(f64) -> OperatorMatrix,
{
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "h",
            value: h,
            reason: "finite-difference step must be positive",
        });
    }
    let (h_minus, h_center, h_plus) = (h_fn(t - h), h_fn(t), h_fn(t + h));
    for (m, time) in [(&h_minus, t - h), (&h_center, t), (&h_plus, t + h)] {
        if !m.is_finite() {
            return Err(Error::NonFiniteHamiltonian { time });
        }
    }
    let eig_minus = eigensystem_hermitian(&h_minus)?;
    let eig_center = eigensystem_hermitian(&h_center)?;
    let eig_plus = eigensystem_hermitian(&h_plus)?;

    let h_dot_norm = (&h_plus - &h_minus).frobenius_norm() / (2.0 * h);
    let threshold = 1e3 * h * h_dot_norm;
    let gap = [&eig_minus, &eig_center, &eig_plus]
        .iter()
        .map(|e: &&Eigensystem| e.min_gap())
        .fold(f64::INFINITY, f64::min);
    if gap < threshold {
        return Err(Error::NearDegeneracy { time: t, gap, threshold });
    }
    Ok(cd_from_eigenbases(
        &eig_minus.vectors,
        &eig_center.vectors,
        &eig_plus.vectors,
        h,
    ))
}

/// The counterdiabatic sum from eigenvector columns sampled at t − h, t and
/// t + h (same ordering in all three). Arbitrary column phases are allowed;
/// the neighbours are re-phased against the centre before differencing.
pub fn cd_from_eigenbases(
    minus: &DMatrix<C64>,
    center: &DMatrix<C64>,
    plus: &DMatrix<C64>,
    h: f64,
) -> OperatorMatrix {
    let n = center.nrows();
    let mut sum = DMatrix::<C64>::zeros(n, n);
    for k in 0..n {
        let v = center.column(k);
        let align = |w: nalgebra::DVectorView<C64>| {
            let overlap = v.dotc(&w);
            let norm = overlap.norm();
            let phase = if norm > 0.0 { overlap.conj() / norm } else { C64::new(1.0, 0.0) };
            w * phase
        };
        let w_plus = align(plus.column(k));
        let w_minus = align(minus.column(k));
        let dv = (w_plus - w_minus) / C64::new(2.0 * h, 0.0);
        let berry = v.dotc(&dv);
        sum += &dv * v.adjoint() - (v * v.adjoint()) * berry;
    }
    OperatorMatrix::from_matrix(sum * I).hermitian_part()
}
