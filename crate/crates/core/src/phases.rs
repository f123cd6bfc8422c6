//! Phase bookkeeping for trajectories.
//!
//! Convention: over an evolution the state acquires
//! `exp(-i·dynamical + i·geometric)` relative to its start, with
//! `dynamical = (1/hbar) ∫ <psi|H|psi> dt` and `total = arg <psi(0)|psi(T)>`,
//! hence `geometric = total + dynamical`. Geometric phases are reported in
//! `[0, 2π)` together with an unwrapped representative.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{hermitian_at, HamiltonianSchedule, TimeGrid, Trajectory};
use crate::frames::{
    check_index, connection_integral, gauge_transform, GaugeTransformed, LinearGauge, MovingFrame,
};
use crate::hilbert::{expi_hermitian, inner, HermitianOperator, StateVector, C64};
use crate::numerics::{phase_distance, trapezoid, unwrap, wrap_two_pi};
use crate::tolerances::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseReport {
    /// `arg <psi(0)|psi(T)>` in `(-π, π]`.
    pub total: f64,
    pub dynamical: f64,
    /// `total + dynamical` reduced to `[0, 2π)`.
    pub geometric: f64,
    /// Same phase with the total phase tracked continuously along the grid.
    pub geometric_unwrapped: f64,
    pub endpoint_overlap_modulus: f64,
    pub cyclic: bool,
    pub cyclic_tolerance: f64,
    /// Cyclic phase recomputed as the loop integral of the connection of
    /// the phase-stripped state, in `[0, 2π)`.
    pub geometric_by_connection: Option<f64>,
}

fn endpoint_overlap(traj: &Trajectory) -> Result<C64> {
    inner(traj.first(), traj.last())
}

pub fn total_phase(traj: &Trajectory, tol: &Tolerances) -> Result<f64> {
    let overlap = endpoint_overlap(traj)?;
    if overlap.norm() <= tol.overlap_floor {
        return Err(Error::OrthogonalEndpoints {
            overlap: overlap.norm(),
            floor: tol.overlap_floor,
        });
    }
    Ok(overlap.arg())
}

/// Total phase followed node by node; falls back to the principal value
/// when some intermediate overlap drops below the floor.
fn unwrapped_total_phase(traj: &Trajectory, tol: &Tolerances) -> Result<f64> {
    let overlaps = traj
        .states()
        .iter()
        .map(|s| inner(traj.first(), s))
        .collect::<Result<Vec<C64>>>()?;
    if overlaps.iter().any(|z| z.norm() <= tol.overlap_floor) {
        return total_phase(traj, tol);
    }
    let args: Vec<f64> = overlaps.iter().map(|z| z.arg()).collect();
    Ok(*unwrap(&args)
        .last()
        .expect("trajectory has at least two nodes"))
}

pub fn dynamical_phase<S: HamiltonianSchedule + ?Sized>(
    traj: &Trajectory,
    h: &S,
    hbar: f64,
    tol: &Tolerances,
) -> Result<f64> {
    if traj.dim() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            found: traj.dim(),
        });
    }
    let energies = traj
        .grid()
        .nodes()
        .zip(traj.states())
        .map(|(t, psi)| hermitian_at(h, t, tol).map(|op| op.expectation(psi)))
        .collect::<Result<Vec<f64>>>()?;
    Ok(trapezoid(&energies, traj.grid().dt()) / hbar)
}

pub fn noncyclic_geometric_phase<S: HamiltonianSchedule + ?Sized>(
    traj: &Trajectory,
    h: &S,
    hbar: f64,
    tol: &Tolerances,
) -> Result<PhaseReport> {
    let total = total_phase(traj, tol)?;
    let dynamical = dynamical_phase(traj, h, hbar, tol)?;
    let modulus = endpoint_overlap(traj)?.norm();
    let unwrapped = unwrapped_total_phase(traj, tol)? + dynamical;
    Ok(PhaseReport {
        total,
        dynamical,
        geometric: wrap_two_pi(total + dynamical),
        geometric_unwrapped: unwrapped,
        endpoint_overlap_modulus: modulus,
        cyclic: (modulus - 1.0).abs() <= tol.cyclic,
        cyclic_tolerance: tol.cyclic,
        geometric_by_connection: None,
    })
}

/// Cyclic phase `β` by both routes; fails if they disagree by more than
/// `1e-8 · 2π`.
pub fn cyclic_geometric_phase<S: HamiltonianSchedule + ?Sized>(
    traj: &Trajectory,
    h: &S,
    hbar: f64,
    tol: &Tolerances,
) -> Result<PhaseReport> {
    let modulus = endpoint_overlap(traj)?.norm();
    let deviation = (modulus - 1.0).abs();
    if deviation > tol.cyclic {
        return Err(Error::NotCyclic {
            deviation,
            tol: tol.cyclic,
        });
    }
    let mut report = noncyclic_geometric_phase(traj, h, hbar, tol)?;
    let by_connection = wrap_two_pi(beta_by_connection(traj, h, hbar, tol)?);
    if phase_distance(by_connection, report.geometric) > 1e-8 * TAU {
        return Err(Error::RouteDisagreement {
            connection: by_connection,
            decomposition: report.geometric,
        });
    }
    report.geometric_by_connection = Some(by_connection);
    Ok(report)
}

/// The trajectory as a one-vector frame. Off-grid values continue from the
/// nearest node with one midpoint-exponential step; the derivative comes
/// from the Schrödinger equation, `dψ/dt = -(i/hbar) H ψ`.
pub struct TrajectoryFrame<'a, S: ?Sized> {
    traj: &'a Trajectory,
    hamiltonian: &'a S,
    hbar: f64,
}

impl<'a, S: HamiltonianSchedule + ?Sized> TrajectoryFrame<'a, S> {
    pub fn new(traj: &'a Trajectory, hamiltonian: &'a S, hbar: f64) -> Self {
        Self {
            traj,
            hamiltonian,
            hbar,
        }
    }

    fn operator(&self, t: f64) -> HermitianOperator {
        // validated on the grid by dynamical_phase; off-grid values only symmetrized
        HermitianOperator::hermitian_part(&self.hamiltonian.evaluate(t))
    }
}

impl<S: HamiltonianSchedule + ?Sized> MovingFrame for TrajectoryFrame<'_, S> {
    fn dim(&self) -> usize {
        self.traj.dim()
    }
    fn count(&self) -> usize {
        1
    }
    fn value(&self, _n: usize, t: f64) -> StateVector {
        let grid = self.traj.grid();
        let k = ((t / grid.dt()).round().max(0.0) as usize).min(grid.steps());
        let tk = grid.time(k);
        if t == tk {
            return self.traj.states()[k].clone();
        }
        let step =
            expi_hermitian(&self.operator(0.5 * (t + tk)), t - tk, self.hbar).expect("finite step");
        step.apply(&self.traj.states()[k])
    }
    fn analytic_derivative(&self, n: usize, t: f64) -> Option<StateVector> {
        let psi = self.value(n, t);
        Some(
            self.operator(t)
                .apply(&psi)
                .scaled(C64::new(0.0, -1.0 / self.hbar)),
        )
    }
    fn period(&self) -> Option<f64> {
        Some(self.traj.grid().t_end())
    }
}

/// `e^{-i φ t/T} ψ(t)`, closed over one run when `ψ(T) = e^{iφ} ψ(0)`.
pub fn phase_stripped_frame<'a, S: HamiltonianSchedule + ?Sized>(
    traj: &'a Trajectory,
    h: &'a S,
    hbar: f64,
    tol: &Tolerances,
) -> Result<GaugeTransformed<TrajectoryFrame<'a, S>, LinearGauge>> {
    let phi = total_phase(traj, tol)?;
    let rate = -phi / traj.grid().t_end();
    Ok(gauge_transform(
        TrajectoryFrame::new(traj, h, hbar),
        LinearGauge { rate },
    ))
}

/// `∮ <v|i dv/dt> dt` over the phase-stripped frame, not reduced.
pub fn beta_by_connection<S: HamiltonianSchedule + ?Sized>(
    traj: &Trajectory,
    h: &S,
    hbar: f64,
    tol: &Tolerances,
) -> Result<f64> {
    let frame = phase_stripped_frame(traj, h, hbar, tol)?;
    connection_integral(&frame, 0, traj.grid(), tol)
}

/// `∮ A_n dt` around one period of a closed frame, trapezoid on `steps`
/// panels; returned without reduction.
pub fn adiabatic_berry_phase<F: MovingFrame + ?Sized>(
    frame: &F,
    n: usize,
    steps: usize,
    tol: &Tolerances,
) -> Result<f64> {
    check_index(frame, n)?;
    let period = frame.period().ok_or(Error::Aperiodic)?;
    let grid = TimeGrid::new(period, steps)?;
    connection_integral(frame, n, &grid, tol)
}
