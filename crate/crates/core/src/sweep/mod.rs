//! Single runs and η-sweeps of the rotating-field spin model.
//!
//! Each sweep row is an isolated computation, so rows may be evaluated in
//! any order; output is always assembled in ascending η.

mod config;
mod output;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

pub use config::{parse_number, Drive, OutputFormat, RunConfig, SweepSpec, MIN_STEPS};
pub use output::{
    read_csv, read_json, write_csv, write_evolve_csv, write_json, CSV_COLUMNS, CSV_VERSION_LINE,
};

use crate::error::{Error, Result};
use crate::evolution::{fidelity, propagate, TimeGrid, Trajectory};
use crate::frames::MovingFrame;
use crate::numerics::{phase_distance, wrap_two_pi};
use crate::phases::{cyclic_geometric_phase, noncyclic_geometric_phase, PhaseReport};
use crate::spin_model::{
    berry_limit, exact_trajectory, tilt_angle, Branch, ModelParams, SpinHamiltonian, WFrame,
};
use crate::tolerances::Tolerances;

/// Exact geometric phase over `n_periods` periods, reduced to `[0, 2π)`.
pub fn exact_phase_over(p: &ModelParams, branch: Branch, n_periods: usize) -> f64 {
    let alpha = tilt_angle(p).alpha;
    wrap_two_pi(n_periods as f64 * PI * (1.0 + branch.sign() * (p.theta - alpha).cos()))
}

/// Grid steps per period for a sweep row. The midpoint rule leaves a
/// geometric-phase error of about `3.3 · (mu B T) / M²` on this model, so
/// the configured count is raised to `sqrt(4 mu B T / tol.sweep_phase_error)`
/// when that is larger.
pub fn refined_steps(p: &ModelParams, steps: usize, tol: &Tolerances) -> usize {
    let needed = (4.0 * p.period() * p.mu * p.b_field / tol.sweep_phase_error).sqrt();
    if needed.is_finite() {
        steps.max(needed.ceil() as usize)
    } else {
        steps
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct BranchRun {
    pub branch: String,
    pub phases: PhaseReport,
    pub geometric_exact: f64,
    pub deviation_from_exact: f64,
    /// Minimum over the grid of `|<ψ_exact|ψ_num>|²`.
    pub endpoint_fidelity: f64,
    pub norm_drift: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EvolveReport {
    pub params: ModelParams,
    pub eta: f64,
    pub alpha: f64,
    pub alpha_denominator_negative: bool,
    pub steps_per_period: usize,
    pub n_periods: usize,
    pub steps_used: usize,
    pub branches: Vec<BranchRun>,
}

fn branch_name(b: Branch) -> &'static str {
    match b {
        Branch::Plus => "plus",
        Branch::Minus => "minus",
    }
}

/// Propagates `w_±(0)` and reports phases; the cyclic report (with both β
/// routes) is used whenever the run closes within `tol.cyclic`.
pub fn run_branch(
    p: &ModelParams,
    branch: Branch,
    grid: TimeGrid,
    n_periods: usize,
    tol: &Tolerances,
) -> Result<(BranchRun, Trajectory)> {
    let h = SpinHamiltonian(*p);
    let psi0 = WFrame::new(*p).value(branch.index(), 0.0);
    let traj = propagate(&h, &psi0, grid, p.hbar, tol)?;
    let phases = match cyclic_geometric_phase(&traj, &h, p.hbar, tol) {
        Err(Error::NotCyclic { .. }) => noncyclic_geometric_phase(&traj, &h, p.hbar, tol)?,
        other => other?,
    };
    let exact = exact_trajectory(p, branch, grid)?;
    let geometric_exact = exact_phase_over(p, branch, n_periods);
    let run = BranchRun {
        branch: branch_name(branch).to_string(),
        deviation_from_exact: phase_distance(phases.geometric, geometric_exact),
        geometric_exact,
        phases,
        endpoint_fidelity: fidelity(&exact, &traj)?,
        norm_drift: traj.norm_drift(),
    };
    Ok((run, traj))
}

pub fn evolve_params(
    p: &ModelParams,
    steps_per_period: usize,
    n_periods: usize,
    tol: &Tolerances,
) -> Result<EvolveReport> {
    let steps_used = steps_per_period * n_periods;
    let grid = TimeGrid::new(n_periods as f64 * p.period(), steps_used)?;
    let tilt = tilt_angle(p);
    let branches = [Branch::Plus, Branch::Minus]
        .into_iter()
        .map(|b| run_branch(p, b, grid, n_periods, tol).map(|(r, _)| r))
        .collect::<Result<Vec<_>>>()?;
    Ok(EvolveReport {
        params: *p,
        eta: p.eta(),
        alpha: tilt.alpha,
        alpha_denominator_negative: tilt.denominator_negative,
        steps_per_period,
        n_periods,
        steps_used,
        branches,
    })
}

/// A single run with the configured step count (no refinement).
pub fn run_evolve(cfg: &RunConfig) -> Result<EvolveReport> {
    let p = cfg.model_params()?;
    evolve_params(&p, cfg.steps, cfg.n_periods, &cfg.tol)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    #[serde(with = "output::nan_as_null")]
    pub eta: f64,
    #[serde(with = "output::nan_as_null")]
    pub theta: f64,
    #[serde(with = "output::nan_as_null")]
    pub alpha: f64,
    #[serde(with = "output::nan_as_null")]
    pub geom_phase_plus: f64,
    #[serde(with = "output::nan_as_null")]
    pub geom_phase_minus: f64,
    #[serde(with = "output::nan_as_null")]
    pub geom_phase_exact_plus: f64,
    #[serde(with = "output::nan_as_null")]
    pub berry_limit_plus: f64,
    /// Mod-2π distance between `geom_phase_plus` and the exact value.
    #[serde(with = "output::nan_as_null")]
    pub deviation_from_exact: f64,
    #[serde(with = "output::nan_as_null")]
    pub endpoint_fidelity: f64,
    pub steps_used: usize,
    /// `ok`, `ok;alpha-denominator-negative`, or `error: <message>`.
    pub status: String,
}

impl SweepRow {
    pub fn is_ok(&self) -> bool {
        self.status.starts_with("ok")
    }
}

/// Bitwise equality, with NaN equal to NaN.
impl PartialEq for SweepRow {
    fn eq(&self, o: &Self) -> bool {
        let f = |a: f64, b: f64| a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan());
        f(self.eta, o.eta)
            && f(self.theta, o.theta)
            && f(self.alpha, o.alpha)
            && f(self.geom_phase_plus, o.geom_phase_plus)
            && f(self.geom_phase_minus, o.geom_phase_minus)
            && f(self.geom_phase_exact_plus, o.geom_phase_exact_plus)
            && f(self.berry_limit_plus, o.berry_limit_plus)
            && f(self.deviation_from_exact, o.deviation_from_exact)
            && f(self.endpoint_fidelity, o.endpoint_fidelity)
            && self.steps_used == o.steps_used
            && self.status == o.status
    }
}

pub fn sweep_row(cfg: &RunConfig, eta: f64) -> SweepRow {
    let failed = |steps_used: usize, e: Error| SweepRow {
        eta,
        theta: cfg.theta,
        alpha: f64::NAN,
        geom_phase_plus: f64::NAN,
        geom_phase_minus: f64::NAN,
        geom_phase_exact_plus: f64::NAN,
        berry_limit_plus: wrap_two_pi(cfg.n_periods as f64 * berry_limit(cfg.theta, Branch::Plus)),
        deviation_from_exact: f64::NAN,
        endpoint_fidelity: f64::NAN,
        steps_used,
        status: format!("error: {e}"),
    };
    let p = match cfg.params_at_eta(eta) {
        Ok(p) => p,
        Err(e) => return failed(0, e),
    };
    let per_period = refined_steps(&p, cfg.steps, &cfg.tol);
    match evolve_params(&p, per_period, cfg.n_periods, &cfg.tol) {
        Ok(r) => {
            let (plus, minus) = (&r.branches[0], &r.branches[1]);
            SweepRow {
                eta,
                theta: cfg.theta,
                alpha: r.alpha,
                geom_phase_plus: plus.phases.geometric,
                geom_phase_minus: minus.phases.geometric,
                geom_phase_exact_plus: plus.geometric_exact,
                berry_limit_plus: wrap_two_pi(
                    cfg.n_periods as f64 * berry_limit(cfg.theta, Branch::Plus),
                ),
                deviation_from_exact: plus.deviation_from_exact,
                endpoint_fidelity: plus.endpoint_fidelity,
                steps_used: r.steps_used,
                status: if r.alpha_denominator_negative {
                    "ok;alpha-denominator-negative"
                } else {
                    "ok"
                }
                .to_string(),
            }
        }
        Err(e) => failed(per_period * cfg.n_periods, e),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Rayon work-stealing over rows; sequential when built without the
    /// `parallel` feature.
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Self::Parallel
        } else {
            Self::Sequential
        }
    }
}

pub fn run_sweep(cfg: &RunConfig) -> Result<Vec<SweepRow>> {
    run_sweep_with(cfg, Execution::default())
}

pub fn run_sweep_with(cfg: &RunConfig, exec: Execution) -> Result<Vec<SweepRow>> {
    let etas = cfg.sweep_spec()?.etas();
    Ok(match exec {
        Execution::Sequential => etas.iter().map(|&eta| sweep_row(cfg, eta)).collect(),
        Execution::Parallel => map_parallel(cfg, &etas),
    })
}

#[cfg(feature = "parallel")]
fn map_parallel(cfg: &RunConfig, etas: &[f64]) -> Vec<SweepRow> {
    use rayon::prelude::*;
    etas.par_iter().map(|&eta| sweep_row(cfg, eta)).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_parallel(cfg: &RunConfig, etas: &[f64]) -> Vec<SweepRow> {
    etas.iter().map(|&eta| sweep_row(cfg, eta)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_3;

    fn cfg(text: &str) -> RunConfig {
        text.parse().unwrap()
    }

    #[test]
    fn evolve_matches_closed_form() {
        let r = run_evolve(&cfg("theta = pi/3\neta = 1\nsteps = 2048")).unwrap();
        assert!((r.alpha - std::f64::consts::FRAC_PI_6).abs() < 1e-12);
        for b in &r.branches {
            assert!(b.deviation_from_exact < 1e-5, "{b:?}");
            assert!(b.endpoint_fidelity > 1.0 - 1e-9);
            assert!(b.phases.geometric_by_connection.is_some());
        }
    }

    #[test]
    fn flat_field_has_no_geometric_phase() {
        let r = run_evolve(&cfg("theta = 0\neta = 0.7\nsteps = 64")).unwrap();
        for b in &r.branches {
            assert!(phase_distance(b.phases.geometric, 0.0) < 1e-12);
        }
    }

    #[test]
    fn two_periods_double_the_phase() {
        let one = run_evolve(&cfg("eta = 0.5\nsteps = 1024")).unwrap();
        let two = run_evolve(&cfg("eta = 0.5\nsteps = 1024\nn_periods = 2")).unwrap();
        assert_eq!(two.steps_used, 2048);
        let doubled = wrap_two_pi(2.0 * one.branches[0].phases.geometric);
        assert!(phase_distance(two.branches[0].phases.geometric, doubled) < 1e-5);
    }

    #[test]
    fn refinement_keeps_configured_floor() {
        let p = ModelParams::unit(FRAC_PI_3, 100.0).unwrap();
        assert_eq!(refined_steps(&p, 4096, &Tolerances::default()), 4096);
        let slow = ModelParams::unit(FRAC_PI_3, 1e-3).unwrap();
        assert!(refined_steps(&slow, 4096, &Tolerances::default()) > 100_000);
    }

    #[test]
    fn sequential_and_parallel_rows_agree() {
        let c = cfg("sweep.eta_min = 0.1\nsweep.eta_max = 10\nsweep.points = 4\nsteps = 256");
        let a = run_sweep_with(&c, Execution::Sequential).unwrap();
        let b = run_sweep_with(&c, Execution::Parallel).unwrap();
        assert_eq!(a, b);
        assert!(a.windows(2).all(|w| w[0].eta < w[1].eta));
        assert!(a.iter().all(|r| r.status == "ok"));
    }

    #[test]
    fn sweep_requires_range() {
        assert!(run_sweep(&cfg("eta = 1")).unwrap_err().is_usage());
    }
}
