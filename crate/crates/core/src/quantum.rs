//! Dense state/operator arithmetic for small Hilbert spaces and the
//! Schrödinger propagators.
//!
//! Hamiltonians are angular-frequency matrices (ħ divided out), so a step of
//! length `dt` applies `exp(-i H dt)`.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

const I: C64 = C64::new(0.0, 1.0);

/// Tolerance on the Hermitian defect accepted by the eigensolver and the
/// propagators, relative to `max(1, ‖M‖_F)`.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Drift above which the RK4 integrator renormalizes the state.
pub const RK4_RENORM_THRESHOLD: f64 = 1e-10;

/// Normalized complex amplitude vector over the bare levels.
#[derive(Clone, PartialEq)]
pub struct StateVector(DVector<C64>);

impl StateVector {
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        normalize(amplitudes)
    }

    /// The bare level `level` of a `dim`-level system.
    pub fn basis(dim: usize, level: usize) -> Self {
        assert!(level < dim, "level {level} out of range for dimension {dim}");
        let mut v = DVector::zeros(dim);
        v[level] = C64::new(1.0, 0.0);
        Self(v)
    }

    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        normalize(amplitudes.iter().map(|&a| C64::new(a, 0.0)).collect())
    }

    /// Wraps propagated amplitudes without renormalizing them.
    #[allow(dead_code)]
    pub(crate) fn from_raw(v: DVector<C64>) -> Self {
        Self(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        self.0.as_slice()
    }

    pub fn as_vector(&self) -> &DVector<C64> {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn populations(&self) -> Vec<f64> {
        self.0.iter().map(|c| c.norm_sqr()).collect()
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.0.dotc(&other.0)
    }

    /// |⟨self|other⟩|², insensitive to global phase.
    pub fn fidelity(&self, other: &StateVector) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// Euclidean distance to `other` after removing the relative global phase.
    pub fn phase_aligned_distance(&self, other: &StateVector) -> f64 {
        let overlap = self.inner(other);
        let phase = if overlap.norm() > 0.0 {
            overlap / overlap.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        (&other.0 - &self.0 * phase).norm()
    }
}

impl fmt::Debug for StateVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter()).finish()
    }
}

/// Returns `v / ‖v‖`.
pub fn normalize(v: Vec<C64>) -> Result<StateVector> {
    let v = DVector::from_vec(v);
    let n = v.norm();
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::DegenerateState);
    }
    Ok(StateVector(v / C64::new(n, 0.0)))
}

/// Dense complex d×d operator, in units of angular frequency.
#[derive(Clone, PartialEq)]
pub struct OperatorMatrix(DMatrix<C64>);

impl OperatorMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self(DMatrix::zeros(dim, dim))
    }

    pub fn from_matrix(m: DMatrix<C64>) -> Self {
        assert!(m.is_square(), "operator matrices must be square");
        Self(m)
    }

    /// Row-major entries.
    pub fn from_row_slice(dim: usize, entries: &[C64]) -> Self {
        Self(DMatrix::from_row_slice(dim, dim, entries))
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let dim = rows.len();
        Self(DMatrix::from_fn(dim, dim, |i, j| C64::new(rows[i][j], 0.0)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.0[(row, col)]
    }

    pub fn as_matrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    /// max |M_ij − conj(M_ji)|.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.0[(i, j)] - self.0[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian_defect() <= HERMITIAN_TOL * self.frobenius_norm().max(1.0)
    }

    /// (M + M†)/2.
    pub fn hermitian_part(&self) -> Self {
        Self((&self.0 + self.0.adjoint()) * C64::new(0.5, 0.0))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    /// Largest absolute eigenvalue; the operator norm for Hermitian input.
    pub fn spectral_norm(&self) -> Result<f64> {
        let eig = eigensystem_hermitian(self)?;
        Ok(eig.values.iter().fold(0.0_f64, |m, v| m.max(v.abs())))
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, c| m.max(c.norm()))
    }

    pub fn apply(&self, psi: &StateVector) -> DVector<C64> {
        &self.0 * &psi.0
    }

    /// ⟨ψ|M|ψ⟩.
    pub fn expectation(&self, psi: &StateVector) -> C64 {
        psi.0.dotc(&(&self.0 * &psi.0))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self(&self.0 * C64::new(factor, 0.0))
    }
}

impl fmt::Debug for OperatorMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<Vec<C64>> = self.0.row_iter().map(|r| r.iter().copied().collect()).collect();
        f.debug_tuple("OperatorMatrix").field(&rows).finish()
    }
}

impl Add for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn add(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        OperatorMatrix(&self.0 + &rhs.0)
    }
}

impl Add for OperatorMatrix {
    type Output = OperatorMatrix;
    fn add(self, rhs: OperatorMatrix) -> OperatorMatrix {
        OperatorMatrix(self.0 + rhs.0)
    }
}

impl Sub for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn sub(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        OperatorMatrix(&self.0 - &rhs.0)
    }
}

impl Mul<f64> for OperatorMatrix {
    type Output = OperatorMatrix;
    fn mul(self, rhs: f64) -> OperatorMatrix {
        OperatorMatrix(self.0 * C64::new(rhs, 0.0))
    }
}

/// Eigenvalues in ascending order with matching orthonormal eigenvector
/// columns.
///
/// Each column is phased so that its largest-magnitude entry is real and
/// positive (the first such entry when several tie).
#[derive(Debug, Clone)]
pub struct Eigensystem {
    pub values: Vec<f64>,
    pub vectors: DMatrix<C64>,
}

impl Eigensystem {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn vector(&self, k: usize) -> StateVector {
        StateVector(self.vectors.column(k).into_owned())
    }

    /// V Λ V†.
    pub fn reconstruct(&self) -> OperatorMatrix {
        let lambda = DMatrix::from_diagonal(&DVector::from_iterator(
            self.dim(),
            self.values.iter().map(|&v| C64::new(v, 0.0)),
        ));
        OperatorMatrix(&self.vectors * lambda * self.vectors.adjoint())
    }

    /// Smallest spacing between consecutive eigenvalues.
    pub fn min_gap(&self) -> f64 {
        self.values
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }
}

pub(crate) fn fix_column_gauge(vectors: &mut DMatrix<C64>) {
    for mut col in vectors.column_iter_mut() {
        let max = col.iter().fold(0.0_f64, |m, c| m.max(c.norm()));
        if max == 0.0 {
            continue;
        }
        let pivot = col
            .iter()
            .copied()
            .find(|c| c.norm() >= max * (1.0 - 1e-12))
            .expect("column has a maximal entry");
        let phase = pivot.conj() / pivot.norm();
        col *= phase;
    }
}

/// Spectral decomposition of a Hermitian operator.
pub fn eigensystem_hermitian(m: &OperatorMatrix) -> Result<Eigensystem> {
    let defect = m.hermitian_defect();
    if defect > HERMITIAN_TOL * m.frobenius_norm().max(1.0) {
        return Err(Error::NotHermitian { defect });
    }
    let n = m.dim();
    let eig = nalgebra::SymmetricEigen::try_new(m.hermitian_part().0, f64::EPSILON, 0)
        .ok_or(Error::EigenFailure)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    fix_column_gauge(&mut vectors);
    Ok(Eigensystem { values, vectors })
}

/// exp(−i H dt) ψ through the spectral decomposition of `h`.
pub fn step_exponential(h: &OperatorMatrix, dt: f64, psi: &StateVector) -> Result<StateVector> {
    let eig = eigensystem_hermitian(h)?;
    Ok(apply_spectral_exponential(&eig, dt, psi))
}

fn apply_spectral_exponential(eig: &Eigensystem, dt: f64, psi: &StateVector) -> StateVector {
    let mut coeffs = eig.vectors.adjoint() * &psi.0;
    for (c, &lambda) in coeffs.iter_mut().zip(&eig.values) {
        *c *= (-I * (lambda * dt)).exp();
    }
    StateVector(&eig.vectors * coeffs)
}

/// Uniform time grid with `n_steps` intervals (and `n_steps + 1` samples).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t_start: f64,
    t_end: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(t_start: f64, t_end: f64, n_steps: usize) -> Result<Self> {
        if !(t_start.is_finite() && t_end.is_finite()) {
            return Err(Error::InvalidGrid("endpoints must be finite".into()));
        }
        if !(t_end > t_start) {
            return Err(Error::InvalidGrid(format!(
                "t_end ({t_end}) must exceed t_start ({t_start})"
            )));
        }
        if n_steps < 2 {
            return Err(Error::InvalidGrid(format!("n_steps must be at least 2, got {n_steps}")));
        }
        Ok(Self { t_start, t_end, n_steps })
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn n_samples(&self) -> usize {
        self.n_steps + 1
    }

    pub fn dt(&self) -> f64 {
        (self.t_end - self.t_start) / self.n_steps as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        if k == self.n_steps {
            self.t_end
        } else {
            self.t_start + k as f64 * self.dt()
        }
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.n_steps).map(|k| self.time(k))
    }

    /// The same interval at twice the resolution.
    pub fn refined(&self) -> Self {
        Self { n_steps: 2 * self.n_steps, ..*self }
    }
}

/// Propagation method for [`evolve`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    /// exp(−i H(t + dt/2) dt) per step; unitary to rounding.
    #[default]
    MidpointExponential,
    /// Classical fourth-order Runge-Kutta on ψ̇ = −iHψ.
    Rk4,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::MidpointExponential => "midpoint-exponential",
            Method::Rk4 => "rk4",
        }
    }
}

/// States sampled on a time grid, with bare-level populations.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: TimeGrid,
    pub states: Vec<StateVector>,
    pub populations: Vec<Vec<f64>>,
    /// Largest |‖ψ‖ − 1| seen before any renormalization.
    pub peak_norm_drift: f64,
}

impl Trajectory {
    fn from_states(grid: TimeGrid, states: Vec<StateVector>, peak_norm_drift: f64) -> Self {
        let populations = states.iter().map(StateVector::populations).collect();
        Self { grid, states, populations, peak_norm_drift }
    }

    pub fn terminal_state(&self) -> &StateVector {
        self.states.last().expect("trajectory is never empty")
    }

    pub fn terminal_populations(&self) -> &[f64] {
        self.populations.last().expect("trajectory is never empty")
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.grid.times()
    }

    /// Joins two trajectories sharing an endpoint and a step length.
    pub fn concatenate(self, next: Trajectory) -> Result<Trajectory> {
        let tol = 1e-12 * self.grid.t_end.abs().max(self.grid.dt());
        if (self.grid.t_end - next.grid.t_start).abs() > tol {
            return Err(Error::InvalidGrid("trajectories are not contiguous".into()));
        }
        if (self.grid.dt() - next.grid.dt()).abs() > 1e-9 * self.grid.dt() {
            return Err(Error::InvalidGrid("trajectories have different step lengths".into()));
        }
        let grid = TimeGrid::new(
            self.grid.t_start,
            next.grid.t_end,
            self.grid.n_steps + next.grid.n_steps,
        )?;
        let mut states = self.states;
        states.extend(next.states.into_iter().skip(1));
        Ok(Trajectory::from_states(
            grid,
            states,
            self.peak_norm_drift.max(next.peak_norm_drift),
        ))
    }
}

fn checked_hamiltonian<F>(h_fn: &F, t: f64, dim: usize) -> Result<OperatorMatrix>
where
    F: Fn(f64) -> OperatorMatrix,
{
    let h = h_fn(t);
    if h.dim() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: h.dim() });
    }
    if !h.is_finite() {
        return Err(Error::NonFiniteHamiltonian { time: t });
    }
    Ok(h)
}

/// Integrates iψ̇ = H(t)ψ over `grid` starting from `psi0`.
pub fn evolve<F>(h_fn: F, psi0: &StateVector, grid: &TimeGrid, method: Method) -> Result<Trajectory>
where
    F: Fn(f64) -> OperatorMatrix,
{
    let dim = psi0.dim();
    let dt = grid.dt();
    let mut states = Vec::with_capacity(grid.n_samples());
    states.push(psi0.clone());
    let mut psi = psi0.clone();
    let mut peak_drift = (psi.norm() - 1.0).abs();

    match method {
        Method::MidpointExponential => {
            for k in 0..grid.n_steps() {
                let t_mid = grid.time(k) + 0.5 * dt;
                let h = checked_hamiltonian(&h_fn, t_mid, dim)?;
                psi = step_exponential(&h, dt, &psi)?;
                peak_drift = peak_drift.max((psi.norm() - 1.0).abs());
                states.push(psi.clone());
            }
        }
        Method::Rk4 => {
            let deriv = |h: &OperatorMatrix, v: &DVector<C64>| -> DVector<C64> { (h.as_matrix() * v) * (-I) };
            for k in 0..grid.n_steps() {
                let t = grid.time(k);
                let h0 = checked_hamiltonian(&h_fn, t, dim)?;
                let hm = checked_hamiltonian(&h_fn, t + 0.5 * dt, dim)?;
                let h1 = checked_hamiltonian(&h_fn, t + dt, dim)?;
                let y = &psi.0;
                let half = C64::new(0.5 * dt, 0.0);
                let full = C64::new(dt, 0.0);
                let k1 = deriv(&h0, y);
                let k2 = deriv(&hm, &(y + &k1 * half));
                let k3 = deriv(&hm, &(y + &k2 * half));
                let k4 = deriv(&h1, &(y + &k3 * full));
                let next = y + (k1 + k2 * C64::new(2.0, 0.0) + k3 * C64::new(2.0, 0.0) + k4)
                    * C64::new(dt / 6.0, 0.0);
                let drift = (next.norm() - 1.0).abs();
                peak_drift = peak_drift.max(drift);
                psi = if drift > RK4_RENORM_THRESHOLD {
                    let n = next.norm();
                    StateVector(next / C64::new(n, 0.0))
                } else {
                    StateVector(next)
                };
                states.push(psi.clone());
            }
        }
    }
    Ok(Trajectory::from_states(*grid, states, peak_drift))
}

/// Largest spectral norm of `h_fn` over `samples + 1` equispaced times.
pub fn max_spectral_norm<F>(h_fn: F, t_start: f64, t_end: f64, samples: usize) -> Result<f64>
where
    F: Fn(f64) -> OperatorMatrix,
{
    let mut worst = 0.0_f64;
    for k in 0..=samples {
        let t = t_start + (t_end - t_start) * k as f64 / samples as f64;
        let h = h_fn(t);
        if !h.is_finite() {
            return Err(Error::NonFiniteHamiltonian { time: t });
        }
        worst = worst.max(h.spectral_norm()?);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn half_sigma_x(omega0: f64) -> OperatorMatrix {
        OperatorMatrix::from_real_rows(&[&[0.0, 0.5 * omega0], &[0.5 * omega0, 0.0]])
    }

    #[test]
    fn normalize_examples() {
        let v = normalize(vec![c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert_eq!(v.amplitudes(), &[c(1.0, 0.0), c(0.0, 0.0)]);

        let v = normalize(vec![c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert_abs_diff_eq!(v.amplitudes()[0].re, FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(v.amplitudes()[1].re, FRAC_1_SQRT_2, epsilon = 1e-15);

        let v = normalize(vec![c(0.0, 3.0), c(4.0, 0.0)]).unwrap();
        assert_abs_diff_eq!(v.amplitudes()[0].im, 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(v.amplitudes()[1].re, 0.8, epsilon = 1e-15);
        assert!((v.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn normalize_rejects_zero() {
        assert_eq!(normalize(vec![c(0.0, 0.0); 3]), Err(Error::DegenerateState));
    }

    #[test]
    fn eigensystem_diagonal() {
        let m = OperatorMatrix::from_real_rows(&[&[-1.0, 0.0], &[0.0, 1.0]]);
        let eig = eigensystem_hermitian(&m).unwrap();
        assert_eq!(eig.values, vec![-1.0, 1.0]);
        assert_abs_diff_eq!(eig.vectors[(0, 0)].re, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(eig.vectors[(1, 1)].re, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn eigensystem_pure_sigma_x() {
        let eig = eigensystem_hermitian(&half_sigma_x(2.0)).unwrap();
        assert_abs_diff_eq!(eig.values[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(eig.values[1], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn eigensystem_three_level_resonant() {
        // char. poly of ½[[0,1,0],[1,0,1],[0,1,0]]: −λ³ + λ/2 = 0
        let m = OperatorMatrix::from_real_rows(&[&[0.0, 0.5, 0.0], &[0.5, 0.0, 0.5], &[0.0, 0.5, 0.0]]);
        let eig = eigensystem_hermitian(&m).unwrap();
        let r = FRAC_1_SQRT_2;
        for (got, want) in eig.values.iter().zip([-r, 0.0, r]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-14);
        }
    }

    #[test]
    fn eigensystem_gauge_is_real_positive_pivot() {
        let m = OperatorMatrix::from_row_slice(
            2,
            &[c(0.3, 0.0), c(0.2, -0.7), c(0.2, 0.7), c(-1.1, 0.0)],
        );
        let eig = eigensystem_hermitian(&m).unwrap();
        for k in 0..2 {
            let col = eig.vectors.column(k);
            let pivot = col.iter().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap();
            assert!(pivot.im.abs() < 1e-14 && pivot.re > 0.0);
        }
    }

    #[test]
    fn eigensystem_rejects_non_hermitian() {
        let m = OperatorMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert!(matches!(eigensystem_hermitian(&m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn step_zero_hamiltonian_is_identity() {
        let psi = StateVector::new(vec![c(0.6, 0.0), c(0.0, 0.8)]).unwrap();
        let out = step_exponential(&OperatorMatrix::zeros(2), 3.7, &psi).unwrap();
        assert_eq!(out, psi);
    }

    #[test]
    fn step_pi_rotation_inverts() {
        let omega0 = 2.0 * PI * 5.0;
        let psi = StateVector::basis(2, 0);
        let out = step_exponential(&half_sigma_x(omega0), PI / omega0, &psi).unwrap();
        let want = StateVector::new(vec![c(0.0, 0.0), c(0.0, -1.0)]).unwrap();
        assert!(out.fidelity(&want) > 1.0 - 1e-14);
        assert!(out.phase_aligned_distance(&want) < 1e-13);
        assert!((out.norm() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn step_half_pi_rotation_splits() {
        let omega0 = 3.0;
        let out = step_exponential(&half_sigma_x(omega0), PI / (2.0 * omega0), &StateVector::basis(2, 0)).unwrap();
        let p = out.populations();
        assert_abs_diff_eq!(p[0], 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(p[1], 0.5, epsilon = 1e-14);
    }

    #[test]
    fn grid_validation() {
        assert!(TimeGrid::new(0.0, 1.0, 1).is_err());
        assert!(TimeGrid::new(1.0, 1.0, 10).is_err());
        assert!(TimeGrid::new(0.0, f64::NAN, 10).is_err());
        let g = TimeGrid::new(-1.0, 1.0, 4).unwrap();
        assert_eq!(g.times().collect::<Vec<_>>(), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
    }

    #[test]
    fn evolve_zero_hamiltonian_keeps_state() {
        let psi0 = StateVector::new(vec![c(0.6, 0.0), c(0.0, 0.8)]).unwrap();
        let grid = TimeGrid::new(0.0, 5.0, 50).unwrap();
        for method in [Method::MidpointExponential, Method::Rk4] {
            let traj = evolve(|_| OperatorMatrix::zeros(2), &psi0, &grid, method).unwrap();
            assert!(traj.states.iter().all(|s| *s == psi0));
        }
    }

    #[test]
    fn evolve_rabi_flop() {
        let omega0 = 2.0 * PI * 5.0;
        let grid = TimeGrid::new(0.0, PI / omega0, 400).unwrap();
        for method in [Method::MidpointExponential, Method::Rk4] {
            let traj = evolve(|_| half_sigma_x(omega0), &StateVector::basis(2, 0), &grid, method).unwrap();
            let p = traj.terminal_populations();
            assert_abs_diff_eq!(p[0], 0.0, epsilon = 1e-10);
            assert_abs_diff_eq!(p[1], 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn evolve_reports_non_finite_time() {
        let grid = TimeGrid::new(0.0, 1.0, 4).unwrap();
        let err = evolve(
            |t| {
                if t > 0.5 {
                    OperatorMatrix::from_real_rows(&[&[f64::NAN, 0.0], &[0.0, 0.0]])
                } else {
                    OperatorMatrix::zeros(2)
                }
            },
            &StateVector::basis(2, 0),
            &grid,
            Method::MidpointExponential,
        )
        .unwrap_err();
        assert_eq!(err, Error::NonFiniteHamiltonian { time: 0.625 });
    }

    #[test]
    fn concatenate_requires_contiguity() {
        let psi = StateVector::basis(2, 0);
        let zero = |_: f64| OperatorMatrix::zeros(2);
        let a = evolve(zero, &psi, &TimeGrid::new(0.0, 1.0, 4).unwrap(), Method::Rk4).unwrap();
        let b = evolve(zero, &psi, &TimeGrid::new(1.0, 2.0, 4).unwrap(), Method::Rk4).unwrap();
        let gap = evolve(zero, &psi, &TimeGrid::new(1.5, 2.5, 4).unwrap(), Method::Rk4).unwrap();
        let joined = a.clone().concatenate(b).unwrap();
        assert_eq!(joined.grid.n_steps(), 8);
        assert_eq!(joined.states.len(), 9);
        assert!(a.concatenate(gap).is_err());
    }
}
