//! Time-dependent Schrödinger propagation on uniform grids.
//!
//! Each step applies `exp(-i H(t_k + dt/2) dt / hbar)`, which is second order
//! in `dt` and exactly unitary per step.

use crate::error::{Error, Result};
use crate::frames::MovingFrame;
use crate::hilbert::{expi_hermitian, inner, CMatrix, HermitianOperator, StateVector, C64};
use crate::tolerances::Tolerances;

/// Uniform grid `t_k = k·dt`, `k = 0..=steps`, starting at zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t_end: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(t_end: f64, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidGrid("at least one step is required".into()));
        }
        if !t_end.is_finite() || t_end <= 0.0 {
            return Err(Error::InvalidGrid(format!(
                "end time must be positive and finite, got {t_end}"
            )));
        }
        Ok(Self { t_end, steps })
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        self.t_end / self.steps as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        if k == self.steps {
            self.t_end
        } else {
            k as f64 * self.dt()
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.steps).map(|k| self.time(k))
    }

    pub fn midpoint(&self, k: usize) -> f64 {
        (k as f64 + 0.5) * self.dt()
    }
}

/// A Hamiltonian `t -> H(t)` over fixed background parameters.
pub trait HamiltonianSchedule: Sync {
    fn dim(&self) -> usize;

    /// Raw matrix at time `t`; validated by the caller.
    fn evaluate(&self, t: f64) -> CMatrix;

    fn describe(&self) -> String {
        String::from("time-dependent Hamiltonian")
    }
}

impl<S: HamiltonianSchedule + ?Sized> HamiltonianSchedule for &S {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn evaluate(&self, t: f64) -> CMatrix {
        (**self).evaluate(t)
    }
    fn describe(&self) -> String {
        (**self).describe()
    }
}

/// Validated `H(t)`; hermiticity failures carry the offending time.
pub fn hermitian_at<S: HamiltonianSchedule + ?Sized>(
    h: &S,
    t: f64,
    tol: &Tolerances,
) -> Result<HermitianOperator> {
    HermitianOperator::new(h.evaluate(t), tol).map_err(|e| match e {
        Error::NotHermitian { defect, .. } => Error::NonHermitianAt { t, defect },
        other => other,
    })
}

#[derive(Debug, Clone)]
pub struct StaticHamiltonian(pub CMatrix);

impl HamiltonianSchedule for StaticHamiltonian {
    fn dim(&self) -> usize {
        self.0.nrows()
    }
    fn evaluate(&self, _t: f64) -> CMatrix {
        self.0.clone()
    }
    fn describe(&self) -> String {
        String::from("static Hamiltonian")
    }
}

/// Closure-backed schedule.
pub struct FnHamiltonian<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(f64) -> CMatrix + Sync> FnHamiltonian<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: Fn(f64) -> CMatrix + Sync> HamiltonianSchedule for FnHamiltonian<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn evaluate(&self, t: f64) -> CMatrix {
        (self.f)(t)
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    grid: TimeGrid,
    states: Vec<StateVector>,
}

impl Trajectory {
    pub fn new(grid: TimeGrid, states: Vec<StateVector>) -> Result<Self> {
        if states.len() != grid.steps() + 1 {
            return Err(Error::GridMismatch(format!(
                "{} states for a grid with {} nodes",
                states.len(),
                grid.steps() + 1
            )));
        }
        let dim = states[0].dim();
        if let Some(bad) = states.iter().find(|s| s.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.dim(),
            });
        }
        Ok(Self { grid, states })
    }

    /// Samples `f` at every grid node.
    pub fn sample(grid: TimeGrid, f: impl Fn(f64) -> StateVector) -> Result<Self> {
        Self::new(grid, grid.nodes().map(f).collect())
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn states(&self) -> &[StateVector] {
        &self.states
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }

    pub fn first(&self) -> &StateVector {
        &self.states[0]
    }

    pub fn last(&self) -> &StateVector {
        &self.states[self.states.len() - 1]
    }

    /// Every state multiplied by `e^{i phase}`.
    pub fn phased(&self, phase: f64) -> Self {
        Self {
            grid: self.grid,
            states: self.states.iter().map(|s| s.phased(phase)).collect(),
        }
    }

    /// `max_k | |psi_k| - |psi_0| |`.
    pub fn norm_drift(&self) -> f64 {
        let n0 = self.states[0].norm();
        self.states
            .iter()
            .map(|s| (s.norm() - n0).abs())
            .fold(0.0, f64::max)
    }
}

pub fn propagate<S: HamiltonianSchedule + ?Sized>(
    h: &S,
    psi0: &StateVector,
    grid: TimeGrid,
    hbar: f64,
    tol: &Tolerances,
) -> Result<Trajectory> {
    if psi0.dim() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            found: psi0.dim(),
        });
    }
    if !psi0.is_normalized(tol.normalized) {
        return Err(Error::NotNormalized { norm: psi0.norm() });
    }
    let dt = grid.dt();
    let mut states = Vec::with_capacity(grid.steps() + 1);
    states.push(psi0.clone());
    for k in 0..grid.steps() {
        let generator = hermitian_at(h, grid.midpoint(k), tol)?;
        let step = expi_hermitian(&generator, dt, hbar)?;
        let next = step.apply(&states[k]);
        states.push(next);
    }
    Ok(Trajectory { grid, states })
}

/// Frame coefficients `b_n(t_k) = <v_n(t_k)|psi_k>`, indexed `[k][n]`.
#[derive(Debug, Clone)]
pub struct CoefficientTable {
    pub times: Vec<f64>,
    pub coefficients: Vec<Vec<C64>>,
}

impl CoefficientTable {
    pub fn column(&self, n: usize) -> Vec<C64> {
        self.coefficients.iter().map(|row| row[n]).collect()
    }
}

pub fn expand_in_frame<F: MovingFrame + ?Sized>(
    traj: &Trajectory,
    frame: &F,
) -> Result<CoefficientTable> {
    if frame.dim() != traj.dim() {
        return Err(Error::DimensionMismatch {
            expected: traj.dim(),
            found: frame.dim(),
        });
    }
    let times: Vec<f64> = traj.grid.nodes().collect();
    let coefficients = times
        .iter()
        .zip(&traj.states)
        .map(|(&t, psi)| {
            (0..frame.count())
                .map(|n| inner(&frame.value(n, t), psi))
                .collect()
        })
        .collect::<Result<Vec<Vec<C64>>>>()?;
    Ok(CoefficientTable {
        times,
        coefficients,
    })
}

/// `min_k |<a_k|b_k>|^2`.
pub fn fidelity(a: &Trajectory, b: &Trajectory) -> Result<f64> {
    if a.grid != b.grid {
        return Err(Error::GridMismatch(format!("{:?} vs {:?}", a.grid, b.grid)));
    }
    a.states
        .iter()
        .zip(&b.states)
        .map(|(x, y)| inner(x, y).map(|z| z.norm_sqr()))
        .try_fold(f64::INFINITY, |acc, f| f.map(|f| acc.min(f)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::ConstantFrame;
    use crate::hilbert::pauli;
    use std::f64::consts::PI;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn grid_validation() {
        assert!(TimeGrid::new(1.0, 0).is_err());
        assert!(TimeGrid::new(-1.0, 4).is_err());
        assert!(TimeGrid::new(f64::NAN, 4).is_err());
        let g = TimeGrid::new(2.0, 4).unwrap();
        assert_eq!(g.dt(), 0.5);
        assert_eq!(g.nodes().collect::<Vec<_>>(), vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        assert_eq!(g.midpoint(1), 0.75);
    }

    #[test]
    fn zero_hamiltonian_leaves_state_fixed() {
        let h = StaticHamiltonian(CMatrix::zeros(2, 2));
        let psi0 = StateVector::new(vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)]).unwrap();
        let traj = propagate(&h, &psi0, TimeGrid::new(5.0, 50).unwrap(), 1.0, &tol()).unwrap();
        assert!(traj.states().iter().all(|s| s == &psi0));
    }

    #[test]
    fn static_eigenstate_picks_up_energy_phase() {
        // H = -mu hbar B sigma_z with mu = B = hbar = 1; spin-up has energy -1
        let h = StaticHamiltonian(pauli::z() * C64::new(-1.0, 0.0));
        let up = StateVector::basis(2, 0);
        let grid = TimeGrid::new(3.0, 30).unwrap();
        let traj = propagate(&h, &up, grid, 1.0, &tol()).unwrap();
        for (t, s) in grid.nodes().zip(traj.states()) {
            let expected = up.phased(t);
            assert!((s - &expected).norm() < 1e-13);
        }
    }

    #[test]
    fn rejects_non_hermitian_with_time() {
        let h = FnHamiltonian::new(2, |t| {
            if t > 0.5 {
                CMatrix::from_row_slice(
                    2,
                    2,
                    &[
                        C64::new(0., 0.),
                        C64::new(1., 0.),
                        C64::new(0., 0.),
                        C64::new(0., 0.),
                    ],
                )
            } else {
                pauli::x()
            }
        });
        let err = propagate(
            &h,
            &StateVector::basis(2, 0),
            TimeGrid::new(1.0, 4).unwrap(),
            1.0,
            &tol(),
        )
        .unwrap_err();
        match err {
            Error::NonHermitianAt { t, .. } => assert_eq!(t, 0.625),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_unnormalized_initial_state() {
        let h = StaticHamiltonian(pauli::x());
        let psi0 = StateVector::new(vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)]).unwrap();
        assert!(matches!(
            propagate(&h, &psi0, TimeGrid::new(1.0, 4).unwrap(), 1.0, &tol()),
            Err(Error::NotNormalized { .. })
        ));
    }

    #[test]
    fn norm_drift_stays_below_threshold_over_many_steps() {
        let h = FnHamiltonian::new(3, |t| {
            let a = C64::new(t.cos(), 0.3 * t.sin());
            CMatrix::from_row_slice(
                3,
                3,
                &[
                    C64::new(1.0, 0.0),
                    a,
                    C64::new(0.0, 0.2),
                    a.conj(),
                    C64::new(-0.5, 0.0),
                    C64::new(0.7, 0.0),
                    C64::new(0.0, -0.2),
                    C64::new(0.7, 0.0),
                    C64::new(0.1, 0.0),
                ],
            )
        });
        let psi0 = StateVector::basis(3, 1);
        let traj = propagate(&h, &psi0, TimeGrid::new(50.0, 10_000).unwrap(), 1.0, &tol()).unwrap();
        assert!(traj.norm_drift() <= 1e-10, "drift {}", traj.norm_drift());
    }

    #[test]
    fn fidelity_ignores_global_phase() {
        let h = StaticHamiltonian(pauli::x());
        let psi0 = StateVector::basis(2, 0);
        let traj = propagate(&h, &psi0, TimeGrid::new(PI, 16).unwrap(), 1.0, &tol()).unwrap();
        let f = fidelity(&traj, &traj).unwrap();
        assert!((f - 1.0).abs() < 1e-13, "{f}");
        assert!((fidelity(&traj, &traj.phased(PI / 5.0)).unwrap() - f).abs() < 1e-15);
    }

    #[test]
    fn fidelity_requires_matching_grids() {
        let h = StaticHamiltonian(pauli::x());
        let psi0 = StateVector::basis(2, 0);
        let a = propagate(&h, &psi0, TimeGrid::new(1.0, 8).unwrap(), 1.0, &tol()).unwrap();
        let b = propagate(&h, &psi0, TimeGrid::new(1.0, 16).unwrap(), 1.0, &tol()).unwrap();
        assert!(matches!(fidelity(&a, &b), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn canonical_frame_coefficients_are_raw_amplitudes() {
        let h = StaticHamiltonian(pauli::y());
        let psi0 = StateVector::basis(2, 0);
        let traj = propagate(&h, &psi0, TimeGrid::new(1.0, 10).unwrap(), 1.0, &tol()).unwrap();
        let table = expand_in_frame(&traj, &ConstantFrame::canonical(2)).unwrap();
        for (row, psi) in table.coefficients.iter().zip(traj.states()) {
            assert_eq!(row.as_slice(), psi.amplitudes());
        }
        let total: f64 = table.coefficients[5].iter().map(|b| b.norm_sqr()).sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn expansion_rejects_dimension_mismatch() {
        let h = StaticHamiltonian(pauli::y());
        let traj = propagate(
            &h,
            &StateVector::basis(2, 0),
            TimeGrid::new(1.0, 4).unwrap(),
            1.0,
            &tol(),
        )
        .unwrap();
        assert!(expand_in_frame(&traj, &ConstantFrame::canonical(3)).is_err());
    }
}
