//! Spin-1/2 in a magnetic field precessing at constant rate about `z`.
//!
//! `H(t) = -mu hbar B (sinθ cos ωt σx + sinθ sin ωt σy + cosθ σz)`.
//!
//! The tilt angle α mixes the instantaneous eigenvectors into the frame
//! `w_±(t)` in which the effective Hamiltonian is exactly diagonal, so the
//! solutions `ψ_±` are known in closed form. They interpolate between the
//! adiabatic phase `π(1 ± cos θ)` (η -> 0) and zero (η -> ∞), where
//! `η = ω / (2 mu B)`.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{HamiltonianSchedule, TimeGrid, Trajectory};
use crate::frames::MovingFrame;
use crate::hilbert::{pauli, CMatrix, StateVector, C64};
use crate::numerics::wrap_two_pi;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub mu: f64,
    pub b_field: f64,
    pub omega: f64,
    pub theta: f64,
    pub hbar: f64,
}

impl ModelParams {
    pub fn new(mu: f64, b_field: f64, omega: f64, theta: f64, hbar: f64) -> Result<Self> {
        let p = Self {
            mu,
            b_field,
            omega,
            theta,
            hbar,
        };
        p.validate()?;
        Ok(p)
    }

    /// Parameters with `ω = 2 mu B η`.
    pub fn from_eta(theta: f64, eta: f64, mu: f64, b_field: f64, hbar: f64) -> Result<Self> {
        Self::new(mu, b_field, 2.0 * mu * b_field * eta, theta, hbar)
    }

    /// `mu = B = hbar = 1`, so `ω = 2η`.
    pub fn unit(theta: f64, eta: f64) -> Result<Self> {
        Self::from_eta(theta, eta, 1.0, 1.0, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.mu, self.b_field, self.omega, self.theta, self.hbar];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParams("parameters must be finite".into()));
        }
        if self.b_field <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "B must be positive, got {}",
                self.b_field
            )));
        }
        if self.omega <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "omega must be positive, got {}",
                self.omega
            )));
        }
        if self.mu <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "mu must be positive, got {}",
                self.mu
            )));
        }
        if self.hbar <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "hbar must be positive, got {}",
                self.hbar
            )));
        }
        if !(0.0..=PI).contains(&self.theta) {
            return Err(Error::InvalidParams(format!(
                "theta must lie in [0, pi], got {}",
                self.theta
            )));
        }
        Ok(())
    }

    pub fn period(&self) -> f64 {
        TAU / self.omega
    }

    pub fn eta(&self) -> f64 {
        self.omega / (2.0 * self.mu * self.b_field)
    }

    /// Zeeman energy scale `mu hbar B`.
    pub fn field_energy(&self) -> f64 {
        self.mu * self.hbar * self.b_field
    }

    /// Rotation energy scale `hbar ω`.
    pub fn drive_energy(&self) -> f64 {
        self.hbar * self.omega
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Branch::Plus => 0,
            Branch::Minus => 1,
        }
    }
}

/// The field Hamiltonian as a schedule.
#[derive(Debug, Clone, Copy)]
pub struct SpinHamiltonian(pub ModelParams);

pub fn hamiltonian(p: &ModelParams, t: f64) -> CMatrix {
    let (st, ct) = p.theta.sin_cos();
    let (sp, cp) = (p.omega * t).sin_cos();
    let scale = -p.field_energy();
    (pauli::x() * C64::new(st * cp, 0.0)
        + pauli::y() * C64::new(st * sp, 0.0)
        + pauli::z() * C64::new(ct, 0.0))
        * C64::new(scale, 0.0)
}

impl HamiltonianSchedule for SpinHamiltonian {
    fn dim(&self) -> usize {
        2
    }
    fn evaluate(&self, t: f64) -> CMatrix {
        hamiltonian(&self.0, t)
    }
    fn describe(&self) -> String {
        format!(
            "spin-1/2 in rotating field: mu={} B={} omega={} theta={} hbar={}",
            self.0.mu, self.0.b_field, self.0.omega, self.0.theta, self.0.hbar
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TiltAngle {
    pub alpha: f64,
    /// `|2 mu hbar B sinα - hbar ω sin(θ - α)|`.
    pub residual: f64,
    /// Set when `2 mu B + ω cosθ < 0` and α lies past π/2.
    pub denominator_negative: bool,
}

/// `tan α = ω sinθ / (2 mu B + ω cosθ)` on the branch continuous from
/// α = 0 at ω -> 0 to α = θ at ω -> ∞.
pub fn tilt_angle(p: &ModelParams) -> TiltAngle {
    let (st, ct) = p.theta.sin_cos();
    let denominator = 2.0 * p.mu * p.b_field + p.omega * ct;
    let alpha = (p.omega * st).atan2(denominator);
    let residual =
        (2.0 * p.field_energy() * alpha.sin() - p.drive_energy() * (p.theta - alpha).sin()).abs();
    TiltAngle {
        alpha,
        residual,
        denominator_negative: denominator < 0.0,
    }
}

/// `⟨w_±|H|w_±⟩ = ∓ mu hbar B cos α`.
pub fn frame_energy(p: &ModelParams, alpha: f64, branch: Branch) -> f64 {
    -branch.sign() * p.field_energy() * alpha.cos()
}

/// `⟨w_±|i hbar ∂t|w_±⟩ = (hbar ω / 2)(1 ± cos(θ - α))`.
pub fn frame_twist(p: &ModelParams, alpha: f64, branch: Branch) -> f64 {
    0.5 * p.drive_energy() * (1.0 + branch.sign() * (p.theta - alpha).cos())
}

/// The diagonalizing frame; index 0 is `w_+`, index 1 is `w_-`.
#[derive(Debug, Clone, Copy)]
pub struct WFrame {
    params: ModelParams,
    alpha: f64,
}

impl WFrame {
    pub fn new(params: ModelParams) -> Self {
        Self {
            params,
            alpha: tilt_angle(&params).alpha,
        }
    }

    /// Same field, but with an arbitrary mixing angle (α = 0 gives the
    /// instantaneous eigenvectors, α = θ the fast-rotation limit).
    pub fn with_alpha(params: ModelParams, alpha: f64) -> Self {
        Self { params, alpha }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    fn half_angles(&self) -> (f64, f64) {
        let half = 0.5 * (self.params.theta - self.alpha);
        (half.cos(), half.sin())
    }
}

impl MovingFrame for WFrame {
    fn dim(&self) -> usize {
        2
    }
    fn count(&self) -> usize {
        2
    }
    fn value(&self, n: usize, t: f64) -> StateVector {
        let (c, s) = self.half_angles();
        let rot = C64::from_polar(1.0, -self.params.omega * t);
        let amps = match n {
            0 => vec![rot * c, C64::new(s, 0.0)],
            1 => vec![rot * s, C64::new(-c, 0.0)],
            _ => panic!("w frame has two vectors, index {n} requested"),
        };
        StateVector::from_vector(amps.into())
    }
    fn analytic_derivative(&self, n: usize, t: f64) -> Option<StateVector> {
        let (c, s) = self.half_angles();
        let d = C64::new(0.0, -self.params.omega) * C64::from_polar(1.0, -self.params.omega * t);
        let amps = match n {
            0 => vec![d * c, C64::new(0.0, 0.0)],
            1 => vec![d * s, C64::new(0.0, 0.0)],
            _ => return None,
        };
        Some(StateVector::from_vector(amps.into()))
    }
    fn period(&self) -> Option<f64> {
        Some(self.params.period())
    }
}

pub fn w_frame(p: &ModelParams) -> WFrame {
    WFrame::new(*p)
}

/// Phase rate of `ψ_±`: `ψ_±(t) = w_±(t) exp(-i t (E_± - K_±)/hbar)`.
fn solution_rate(p: &ModelParams, alpha: f64, branch: Branch) -> f64 {
    (frame_energy(p, alpha, branch) - frame_twist(p, alpha, branch)) / p.hbar
}

pub fn exact_solution(p: &ModelParams, branch: Branch, t: f64) -> StateVector {
    let frame = WFrame::new(*p);
    let rate = solution_rate(p, frame.alpha, branch);
    frame.value(branch.index(), t).phased(-rate * t)
}

pub fn exact_trajectory(p: &ModelParams, branch: Branch, grid: TimeGrid) -> Result<Trajectory> {
    Trajectory::sample(grid, |t| exact_solution(p, branch, t))
}

/// `π(1 ± cos(θ - α))` reduced to `[0, 2π)`.
pub fn geometric_phase_exact(p: &ModelParams, branch: Branch) -> f64 {
    let alpha = tilt_angle(p).alpha;
    wrap_two_pi(PI * (1.0 + branch.sign() * (p.theta - alpha).cos()))
}

/// Adiabatic value `π(1 ± cos θ)` reduced to `[0, 2π)`.
pub fn berry_limit(theta: f64, branch: Branch) -> f64 {
    wrap_two_pi(PI * (1.0 + branch.sign() * theta.cos()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::{connection, eff_hamiltonian_matrix};
    use crate::hilbert::{hermiticity_defect, HermitianOperator};
    use crate::numerics::phase_distance;
    use crate::tolerances::Tolerances;
    use std::f64::consts::FRAC_PI_3;

    fn unit(theta: f64, eta: f64) -> ModelParams {
        ModelParams::unit(theta, eta).unwrap()
    }

    #[test]
    fn parameter_validation() {
        assert!(ModelParams::new(1.0, 0.0, 1.0, 0.5, 1.0).is_err());
        assert!(ModelParams::new(1.0, 1.0, -1.0, 0.5, 1.0).is_err());
        assert!(ModelParams::new(1.0, 1.0, 1.0, 4.0, 1.0).is_err());
        assert!(ModelParams::new(1.0, 1.0, 1.0, f64::NAN, 1.0).is_err());
        let p = ModelParams::from_eta(0.5, 3.0, 2.0, 0.5, 1.0).unwrap();
        assert_eq!(p.omega, 6.0);
        assert!((p.eta() - 3.0).abs() < 1e-15);
    }

    #[test]
    fn hamiltonian_special_cases() {
        let p = ModelParams::new(0.5, 2.0, 3.0, 0.0, 1.0).unwrap();
        assert_eq!(hamiltonian(&p, 0.7), pauli::z() * C64::new(-1.0, 0.0));
        let p = ModelParams::new(1.0, 1.0, 3.0, PI / 2.0, 1.0).unwrap();
        let diff = hamiltonian(&p, 0.0) + pauli::x();
        assert!(diff.iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn hamiltonian_is_traceless_with_fixed_spectrum() {
        let p = ModelParams::new(0.8, 1.5, 2.0, 1.1, 0.7).unwrap();
        for t in [0.0, 0.3, 1.9] {
            let m = hamiltonian(&p, t);
            assert_eq!(hermiticity_defect(&m), 0.0);
            let trace = m[(0, 0)] + m[(1, 1)];
            assert!(trace.norm() < 1e-15);
            let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
            assert!((det.re + p.field_energy().powi(2)).abs() < 1e-14 && det.im.abs() < 1e-15);
            let ev = HermitianOperator::new(m, &Tolerances::default())
                .unwrap()
                .eigenvalues();
            assert!((ev[0] + p.field_energy()).abs() < 1e-14);
            assert!((ev[1] - p.field_energy()).abs() < 1e-14);
        }
    }

    #[test]
    fn tilt_angle_examples() {
        assert_eq!(tilt_angle(&unit(0.0, 0.7)).alpha, 0.0);
        let a = tilt_angle(&unit(PI / 2.0, 1.0));
        assert!((a.alpha - PI / 4.0).abs() < 1e-15);
        // small-η expansion α ≈ η sinθ
        let a = tilt_angle(&unit(FRAC_PI_3, 1e-3));
        let first_order = 1e-3 * FRAC_PI_3.sin();
        assert!((a.alpha - first_order).abs() < 1e-6);
        assert!((a.alpha - 8.66e-4).abs() < 1e-6);
    }

    #[test]
    fn tilt_angle_limits_and_flag() {
        let slow = tilt_angle(&unit(1.0, 1e-9));
        assert!(slow.alpha < 1e-8);
        let fast = tilt_angle(&unit(1.0, 1e9));
        assert!((fast.alpha - 1.0).abs() < 1e-8);
        let flipped = tilt_angle(&unit(2.5, 10.0));
        assert!(flipped.denominator_negative);
        assert!(flipped.alpha > PI / 2.0 && flipped.alpha < PI);
        assert!(!tilt_angle(&unit(1.0, 10.0)).denominator_negative);
    }

    #[test]
    fn w_frame_expectations() {
        let p = ModelParams::new(0.9, 1.3, 1.7, 1.2, 0.8).unwrap();
        let f = w_frame(&p);
        let h = SpinHamiltonian(p);
        let alpha = f.alpha();
        for t in [0.0, 0.5, 2.0] {
            let op = HermitianOperator::new(h.evaluate(t), &Tolerances::default()).unwrap();
            for branch in [Branch::Plus, Branch::Minus] {
                let v = f.value(branch.index(), t);
                let e = op.expectation(&v);
                assert!((e - frame_energy(&p, alpha, branch)).abs() < 1e-14);
                let k = p.hbar * connection(&f, branch.index(), t).unwrap();
                assert!((k - frame_twist(&p, alpha, branch)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn w_frame_is_periodic_and_reduces_at_alpha_theta() {
        let p = unit(1.0, 0.4);
        let f = w_frame(&p);
        for n in 0..2 {
            assert!((&f.value(n, 0.0) - &f.value(n, p.period())).norm() < 1e-14);
        }
        let g = WFrame::with_alpha(p, p.theta);
        let t = 0.3;
        let plus = g.value(0, t);
        assert!((plus.amplitudes()[0] - C64::from_polar(1.0, -p.omega * t)).norm() < 1e-15);
        assert_eq!(plus.amplitudes()[1], C64::new(0.0, 0.0));
        assert_eq!(
            g.value(1, t).amplitudes(),
            &[C64::new(0.0, 0.0), C64::new(-1.0, 0.0)]
        );
    }

    #[test]
    fn w_frame_diagonalizes_effective_hamiltonian() {
        let p = ModelParams::new(1.1, 0.9, 2.3, 2.0, 1.0).unwrap();
        let f = w_frame(&p);
        let heff = eff_hamiltonian_matrix(
            &f,
            &SpinHamiltonian(p),
            0.77,
            p.hbar,
            &Tolerances::default(),
        )
        .unwrap();
        assert!(heff.max_off_diagonal() <= 1e-10 * (p.field_energy() + p.drive_energy()));
        let d = heff.diagonal();
        for branch in [Branch::Plus, Branch::Minus] {
            let expected = frame_energy(&p, f.alpha(), branch) - frame_twist(&p, f.alpha(), branch);
            assert!((d[branch.index()] - expected).abs() < 1e-13);
        }
    }

    #[test]
    fn exact_solution_endpoints() {
        let p = unit(FRAC_PI_3, 1.0);
        let alpha = tilt_angle(&p).alpha;
        for branch in [Branch::Plus, Branch::Minus] {
            let w0 = w_frame(&p).value(branch.index(), 0.0);
            assert_eq!(exact_solution(&p, branch, 0.0), w0);
            let big_theta = -frame_energy(&p, alpha, branch) * p.period() / p.hbar
                + PI * (1.0 + branch.sign() * (p.theta - alpha).cos());
            let end = exact_solution(&p, branch, p.period());
            assert!((&end - &w0.phased(big_theta)).norm() < 1e-13);
        }
    }

    #[test]
    fn exact_solution_satisfies_schrodinger_equation() {
        for (theta, eta) in [(0.4, 0.05), (FRAC_PI_3, 1.0), (2.0, 30.0)] {
            let p = unit(theta, eta);
            let h = 1e-6 * p.period();
            for branch in [Branch::Plus, Branch::Minus] {
                for frac in [0.1, 0.45, 0.8] {
                    let t = frac * p.period();
                    let psi = exact_solution(&p, branch, t);
                    let d = &exact_solution(&p, branch, t + h) - &exact_solution(&p, branch, t - h);
                    let lhs = d.scaled(C64::new(0.0, p.hbar / (2.0 * h)));
                    let rhs = StateVector::from_vector(hamiltonian(&p, t) * psi.as_vector());
                    let residual = (&lhs - &rhs).norm();
                    assert!(
                        residual <= 1e-8 * rhs.norm(),
                        "residual {residual} at θ={theta} η={eta}"
                    );
                }
            }
        }
    }

    #[test]
    fn geometric_phase_exact_values() {
        let p = unit(FRAC_PI_3, 1e-12);
        assert!(phase_distance(geometric_phase_exact(&p, Branch::Plus), 1.5 * PI) < 1e-10);
        let p = unit(FRAC_PI_3, 1e12);
        assert!(phase_distance(geometric_phase_exact(&p, Branch::Plus), 0.0) < 1e-10);
        let p = unit(PI / 2.0, 1.0);
        let g = geometric_phase_exact(&p, Branch::Plus);
        assert!((g - PI * (1.0 + (PI / 4.0).cos())).abs() < 1e-14);
        assert!((g - 5.36303).abs() < 1e-5);
        assert!((berry_limit(FRAC_PI_3, Branch::Plus) - 1.5 * PI).abs() < 1e-15);
        assert!((berry_limit(FRAC_PI_3, Branch::Minus) - 0.5 * PI).abs() < 1e-15);
    }
}
