//! Numerical thresholds shared by every module.
//!
//! One record holds all of them so a run configuration can override any
//! threshold through its `tol.*` keys.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Allowed `|H - H^dag|_max`, relative to `max(1, |H|_max)`.
    pub hermitian: f64,
    /// Allowed `|U^dag U - I|_max`.
    pub unitary: f64,
    /// Allowed `| |psi| - 1 |` for a normalized state.
    pub normalized: f64,
    /// Allowed `|<v_n|v_m> - delta_nm|` for frame vectors.
    pub orthonormal: f64,
    /// Allowed imaginary part of `<v|i dv/dt>`.
    pub connection_imag: f64,
    /// Allowed `| |<psi(0)|psi(T)>| - 1 |` for a cyclic evolution.
    pub cyclic: f64,
    /// Minimum endpoint overlap modulus for a defined Pancharatnam phase.
    pub overlap_floor: f64,
    /// Largest Hilbert-space dimension accepted by operator constructors.
    pub max_dim: usize,
    /// Target geometric-phase error of a sweep row; rows refine their grid
    /// beyond the configured step count to reach it.
    pub sweep_phase_error: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hermitian: 1e-12,
            unitary: 1e-12,
            normalized: 1e-12,
            orthonormal: 1e-10,
            connection_imag: 1e-9,
            cyclic: 1e-8,
            overlap_floor: 1e-6,
            max_dim: 64,
            sweep_phase_error: 1e-6,
        }
    }
}

impl Tolerances {
    /// Sets one threshold by its configuration key (the part after `tol.`).
    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        if !value.is_finite() || value <= 0.0 {
            return Err(Error::Config(format!(
                "tol.{key} must be a positive finite number"
            )));
        }
        match key {
            "hermitian" => self.hermitian = value,
            "unitary" => self.unitary = value,
            "normalized" => self.normalized = value,
            "orthonormal" => self.orthonormal = value,
            "connection_imag" => self.connection_imag = value,
            "cyclic" => self.cyclic = value,
            "overlap_floor" => self.overlap_floor = value,
            "sweep_phase_error" => self.sweep_phase_error = value,
            "max_dim" => {
                if value.fract() != 0.0 {
                    return Err(Error::Config("tol.max_dim must be an integer".into()));
                }
                self.max_dim = value as usize;
            }
            other => return Err(Error::Config(format!("unknown tolerance key tol.{other}"))),
        }
        Ok(())
    }
}
