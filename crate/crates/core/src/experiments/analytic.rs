//! Closed-form reference results and the minimal-time search.

use std::f64::consts::PI;

use crate::counterdiabatic::omega_a;
use crate::error::{require_positive, Error, Result};
use crate::schemes::{allen_eberly, TwoLevelScheme};

/// Dimensionless duration τ = t₀β beyond which plain Allen-Eberly passage
/// is reliable (P₁ > 0.999 for ω, τ ≥ 3).
pub const ADIABATIC_TAU: f64 = 3.0;

/// Half-width of the Allen-Eberly propagation window in units of t₀.
pub const AE_WINDOW_T0: f64 = 8.0;

/// Excited-state population after an Allen-Eberly passage from the ground
/// state, with ω = Ω₀/β and τ = t₀β:
/// P₁ = 1 − sech²(2τ²/π) cos²[τ (ω² − 4τ²/π²)^{1/2}].
///
/// When the square root is imaginary, cos(ix) = cosh(x) continues the formula.
pub fn p1_allen_eberly_analytic(omega: f64, tau: f64) -> f64 {
    let sech = 1.0 / (2.0 * tau * tau / PI).cosh();
    let radicand = omega * omega - 4.0 * tau * tau / (PI * PI);
    let c = if radicand >= 0.0 {
        (tau * radicand.sqrt()).cos()
    } else {
        (tau * (-radicand).sqrt()).cosh()
    };
    (1.0 - sech * sech * c * c).clamp(0.0, 1.0)
}

/// Rabi formula for a square pulse: (Ω₀/Ω)² sin²(Ωt/2), Ω = √(Δ² + Ω₀²).
pub fn p1_square_pulse(omega0: f64, detuning: f64, t: f64) -> f64 {
    let omega = omega0.hypot(detuning);
    let ratio = omega0 / omega;
    ratio * ratio * (0.5 * omega * t).sin().powi(2)
}

/// Dimensionless Allen-Eberly scheme (β = 1): Ω₀ = ω, t₀ = τ, window ±8τ.
pub fn dimensionless_allen_eberly(omega: f64, tau: f64) -> Result<TwoLevelScheme> {
    allen_eberly(omega, 1.0, tau, AE_WINDOW_T0 * tau)
}

/// max_t |Ω_a(t)| over the scheme window: the best of `samples` equispaced
/// points, refined by golden-section search in the neighbouring cells.
/// Returns (time of maximum, value).
pub fn max_abs_omega_a(s: &TwoLevelScheme, samples: usize) -> Result<(f64, f64)> {
    let (a, b) = s.window();
    let dt = (b - a) / samples as f64;
    let f = |t: f64| omega_a(s, t).map(f64::abs);
    let mut best = (a, f(a)?);
    for k in 1..=samples {
        let t = a + k as f64 * dt;
        let v = f(t)?;
        if v > best.1 {
            best = (t, v);
        }
    }
    let (mut lo, mut hi) = ((best.0 - dt).max(a), (best.0 + dt).min(b));
    let g = 0.5 * (5.0_f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    for _ in 0..80 {
        if f1 > f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2)?;
        }
    }
    let (t, v) = if f1 > f2 { (x1, f1) } else { (x2, f2) };
    Ok(if v > best.1 { (t, v) } else { best })
}

/// Minimal dimensionless duration for which max_t |Ω_a| ≤ Ω₀.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimalTau {
    /// Bisection result, 1e-6 relative.
    pub exact: f64,
    /// π/(4ω).
    pub formula: f64,
}

impl MinimalTau {
    /// t₀,m / t_a with t_a = 3 (in units of 1/β).
    pub fn reduction_factor(&self) -> f64 {
        self.exact / ADIABATIC_TAU
    }

    pub fn formula_reduction_factor(&self) -> f64 {
        self.formula / ADIABATIC_TAU
    }
}

const MAX_SEARCH_SAMPLES: usize = 4000;

pub fn minimal_tau(omega: f64) -> Result<MinimalTau> {
    require_positive("omega", omega)?;
    if omega < 1.0 {
        return Err(Error::InvalidParameter {
            name: "omega",
            value: omega,
            reason: "minimal-time search is defined for omega >= 1",
        });
    }
    let formula = PI / (4.0 * omega);
    // positive when the auxiliary field exceeds the peak Rabi frequency
    let excess = |tau: f64| -> Result<f64> {
        let s = dimensionless_allen_eberly(omega, tau)?;
        Ok(max_abs_omega_a(&s, MAX_SEARCH_SAMPLES)?.1 - omega)
    };
    let (mut lo, mut hi) = (0.25 * formula, 4.0 * formula);
    if excess(lo)? <= 0.0 || excess(hi)? > 0.0 {
        return Err(Error::Bisection(format!(
            "max |Omega_a| - Omega_0 does not change sign on [{lo}, {hi}] for omega = {omega}"
        )));
    }
    while (hi - lo) > 1e-6 * hi {
        let mid = 0.5 * (lo + hi);
        if excess(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(MinimalTau { exact: hi, formula })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn ae_formula_examples() {
        assert_eq!(p1_allen_eberly_analytic(5.0, 0.0), 0.0);
        assert!(p1_allen_eberly_analytic(3.0, 3.0) > 0.999);
        // complex branch stays a probability and joins the real one continuously
        let p = p1_allen_eberly_analytic(0.5, 4.0);
        assert!((0.0..=1.0).contains(&p));
        let tau = 2.0;
        let edge = 2.0 * tau / PI;
        let below = p1_allen_eberly_analytic(edge * (1.0 - 1e-9), tau);
        let above = p1_allen_eberly_analytic(edge * (1.0 + 1e-9), tau);
        assert_abs_diff_eq!(below, above, epsilon = 1e-8);
    }

    #[test]
    fn square_pulse_formula_examples() {
        let omega0 = 2.0 * PI * 5.0;
        assert_abs_diff_eq!(p1_square_pulse(omega0, 0.0, PI / omega0), 1.0, epsilon = 1e-15);
        assert_eq!(p1_square_pulse(omega0, 0.3, 0.0), 0.0);
        let want = 0.5 * (PI / 2.0_f64.sqrt()).sin().powi(2);
        assert_abs_diff_eq!(p1_square_pulse(omega0, omega0, PI / omega0), want, epsilon = 1e-15);
        assert_abs_diff_eq!(want, 0.316564, epsilon = 5e-7);
        // η = 0.1 amplitude error on a π pulse: sin²(1.1π/2)
        assert_abs_diff_eq!(p1_square_pulse(1.1, 0.0, PI), (0.05 * PI).cos().powi(2), epsilon = 1e-15);
        assert_abs_diff_eq!((0.05 * PI).cos().powi(2), 0.97553, epsilon = 5e-6);
    }

    #[test]
    fn max_omega_a_matches_closed_form_peak() {
        // β = 1: Ω_a = ω cosh x / (ω² + a² sinh² x), a = 2τ/π
        let (omega, tau) = (5.0, 0.3);
        let a = 2.0 * tau / PI;
        let closed = |x: f64| omega * x.cosh() / (omega * omega + a * a * x.sinh().powi(2));
        let brute = (0..=2_000_000)
            .map(|k| -4.0 * PI + 8.0 * PI * k as f64 / 2e6)
            .map(closed)
            .fold(0.0, f64::max);
        let s = dimensionless_allen_eberly(omega, tau).unwrap();
        let (_, peak) = max_abs_omega_a(&s, 4000).unwrap();
        assert_abs_diff_eq!(peak, brute, epsilon = 1e-9 * brute);
    }

    #[test]
    fn minimal_tau_formula_values() {
        let m3 = minimal_tau(3.0).unwrap();
        assert_abs_diff_eq!(m3.formula, PI / 12.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m3.formula, 0.2618, epsilon = 1e-4);
        let m20 = minimal_tau(20.0).unwrap();
        assert_abs_diff_eq!(m20.formula, 0.03927, epsilon = 1e-5);
        assert_abs_diff_eq!(m3.formula_reduction_factor(), PI / 36.0, epsilon = 1e-15);
    }

    #[test]
    fn minimal_tau_exact_satisfies_bound() {
        let m = minimal_tau(5.0).unwrap();
        let at = |tau: f64| {
            let s = dimensionless_allen_eberly(5.0, tau).unwrap();
            max_abs_omega_a(&s, 4000).unwrap().1
        };
        assert!(at(m.exact) <= 5.0);
        assert!(at(m.exact * (1.0 - 1e-5)) > 5.0);
        assert!((m.exact / m.formula - 1.0).abs() < 0.02);
    }

    #[test]
    fn minimal_tau_rejects_small_omega() {
        assert!(minimal_tau(0.5).is_err());
        assert!(minimal_tau(-1.0).is_err());
    }
}
