//! Moving orthonormal frames and their hidden local gauge freedom.
//!
//! A frame `{v_n(t)}` is sampled lazily: nothing is tabulated, so one frame
//! serves any number of time grids. Frame indices are zero-based.
//!
//! Under `v_n -> e^{i a_n(t)} v_n` the connection `A_n = <v_n|i dv_n/dt>`
//! shifts by `-a_n'`, while the holonomy
//! `<v_n(0)|v_n(T)> exp(i ∫ A_n dt)` is unchanged.

use std::f64::consts::TAU;
use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::evolution::{hermitian_at, HamiltonianSchedule, TimeGrid};
use crate::hilbert::{hermiticity_defect, inner, CMatrix, StateVector, C64, I};
use crate::numerics::{cumulative_trapezoid, trapezoid};
use crate::tolerances::Tolerances;

pub trait MovingFrame: Sync {
    fn dim(&self) -> usize;

    /// Number of frame vectors, at most `dim`.
    fn count(&self) -> usize;

    fn value(&self, n: usize, t: f64) -> StateVector;

    /// `dv_n/dt` when known in closed form.
    fn analytic_derivative(&self, _n: usize, _t: f64) -> Option<StateVector> {
        None
    }

    /// Loop period, or `None` for an open path.
    fn period(&self) -> Option<f64> {
        None
    }
}

impl<F: MovingFrame + ?Sized> MovingFrame for &F {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn count(&self) -> usize {
        (**self).count()
    }
    fn value(&self, n: usize, t: f64) -> StateVector {
        (**self).value(n, t)
    }
    fn analytic_derivative(&self, n: usize, t: f64) -> Option<StateVector> {
        (**self).analytic_derivative(n, t)
    }
    fn period(&self) -> Option<f64> {
        (**self).period()
    }
}

impl<F: MovingFrame + ?Sized + Send> MovingFrame for Arc<F> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn count(&self) -> usize {
        (**self).count()
    }
    fn value(&self, n: usize, t: f64) -> StateVector {
        (**self).value(n, t)
    }
    fn analytic_derivative(&self, n: usize, t: f64) -> Option<StateVector> {
        (**self).analytic_derivative(n, t)
    }
    fn period(&self) -> Option<f64> {
        (**self).period()
    }
}

/// Finite-difference step used when no grid is in play.
pub fn default_fd_step<F: MovingFrame + ?Sized>(frame: &F) -> f64 {
    frame.period().map_or(1e-5, |p| p / 8192.0)
}

/// Analytic derivative if the frame has one, else a symmetric difference with step `h`.
pub fn derivative<F: MovingFrame + ?Sized>(frame: &F, n: usize, t: f64, h: f64) -> StateVector {
    frame.analytic_derivative(n, t).unwrap_or_else(|| {
        let forward = frame.value(n, t + h);
        let backward = frame.value(n, t - h);
        (&forward - &backward).scaled(C64::new(0.5 / h, 0.0))
    })
}

pub(crate) fn check_index<F: MovingFrame + ?Sized>(frame: &F, n: usize) -> Result<()> {
    if n >= frame.count() {
        return Err(Error::FrameIndex {
            index: n,
            count: frame.count(),
        });
    }
    Ok(())
}

/// `max_{n,m} |<v_n(t)|v_m(t)> - delta_nm|`.
pub fn orthonormality_defect<F: MovingFrame + ?Sized>(frame: &F, t: f64) -> f64 {
    let vs: Vec<StateVector> = (0..frame.count()).map(|n| frame.value(n, t)).collect();
    let mut worst = 0.0_f64;
    for (i, a) in vs.iter().enumerate() {
        for (j, b) in vs.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            let z = a.as_vector().dotc(b.as_vector());
            worst = worst.max((z - C64::new(target, 0.0)).norm());
        }
    }
    worst
}

/// A fixed orthonormal set.
#[derive(Debug, Clone)]
pub struct ConstantFrame {
    vectors: Vec<StateVector>,
}

impl ConstantFrame {
    pub fn new(vectors: Vec<StateVector>, tol: &Tolerances) -> Result<Self> {
        let dim = vectors.first().ok_or(Error::EmptyDimension)?.dim();
        if let Some(bad) = vectors.iter().find(|v| v.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.dim(),
            });
        }
        if vectors.len() > dim {
            return Err(Error::FrameIndex {
                index: vectors.len() - 1,
                count: dim,
            });
        }
        let frame = Self { vectors };
        let defect = orthonormality_defect(&frame, 0.0);
        if defect > tol.orthonormal {
            return Err(Error::Config(format!(
                "frame vectors are not orthonormal (defect {defect:e})"
            )));
        }
        Ok(frame)
    }

    pub fn canonical(dim: usize) -> Self {
        Self {
            vectors: (0..dim).map(|k| StateVector::basis(dim, k)).collect(),
        }
    }
}

impl MovingFrame for ConstantFrame {
    fn dim(&self) -> usize {
        self.vectors[0].dim()
    }
    fn count(&self) -> usize {
        self.vectors.len()
    }
    fn value(&self, n: usize, _t: f64) -> StateVector {
        self.vectors[n].clone()
    }
    fn analytic_derivative(&self, _n: usize, _t: f64) -> Option<StateVector> {
        Some(StateVector::zeros(self.dim()))
    }
}

type FrameFn = Box<dyn Fn(usize, f64) -> StateVector + Send + Sync>;

/// Closure-backed frame, with or without a closed-form derivative.
pub struct FnFrame {
    dim: usize,
    count: usize,
    period: Option<f64>,
    value: FrameFn,
    derivative: Option<FrameFn>,
}

impl FnFrame {
    pub fn new(
        dim: usize,
        count: usize,
        period: Option<f64>,
        value: impl Fn(usize, f64) -> StateVector + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim,
            count,
            period,
            value: Box::new(value),
            derivative: None,
        }
    }

    pub fn with_derivative(
        mut self,
        derivative: impl Fn(usize, f64) -> StateVector + Send + Sync + 'static,
    ) -> Self {
        self.derivative = Some(Box::new(derivative));
        self
    }
}

impl MovingFrame for FnFrame {
    fn dim(&self) -> usize {
        self.dim
    }
    fn count(&self) -> usize {
        self.count
    }
    fn value(&self, n: usize, t: f64) -> StateVector {
        (self.value)(n, t)
    }
    fn analytic_derivative(&self, n: usize, t: f64) -> Option<StateVector> {
        self.derivative.as_ref().map(|d| d(n, t))
    }
    fn period(&self) -> Option<f64> {
        self.period
    }
}

/// Smooth phase functions `a_n(t)` with known time derivative.
pub trait GaugeFunction: Sync {
    fn angle(&self, n: usize, t: f64) -> f64;
    fn rate(&self, n: usize, t: f64) -> f64;

    /// True when `a_n(T) = a_n(0) mod 2π` for the loop period.
    fn is_periodic(&self) -> bool {
        false
    }
}

impl<G: GaugeFunction + ?Sized> GaugeFunction for &G {
    fn angle(&self, n: usize, t: f64) -> f64 {
        (**self).angle(n, t)
    }
    fn rate(&self, n: usize, t: f64) -> f64 {
        (**self).rate(n, t)
    }
    fn is_periodic(&self) -> bool {
        (**self).is_periodic()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ConstantGauge(pub f64);

impl GaugeFunction for ConstantGauge {
    fn angle(&self, _n: usize, _t: f64) -> f64 {
        self.0
    }
    fn rate(&self, _n: usize, _t: f64) -> f64 {
        0.0
    }
    fn is_periodic(&self) -> bool {
        true
    }
}

/// `a_n(t) = rate · t` for every index.
#[derive(Debug, Clone, Copy)]
pub struct LinearGauge {
    pub rate: f64,
}

impl GaugeFunction for LinearGauge {
    fn angle(&self, _n: usize, t: f64) -> f64 {
        self.rate * t
    }
    fn rate(&self, _n: usize, _t: f64) -> f64 {
        self.rate
    }
}

/// `offset + 2π·winding·t/T + Σ_k [a_k cos(2πkt/T) + b_k sin(2πkt/T)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierSeries {
    pub period: f64,
    pub offset: f64,
    pub winding: i32,
    /// `(harmonic, cosine coefficient, sine coefficient)`.
    pub terms: Vec<(u32, f64, f64)>,
}

impl FourierSeries {
    pub fn constant(period: f64, offset: f64) -> Self {
        Self {
            period,
            offset,
            winding: 0,
            terms: Vec::new(),
        }
    }

    /// Random smooth periodic angle: offset in `[0, 2π)`, winding in
    /// `-2..=2`, and up to `max_harmonic` harmonics with amplitudes below 2.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, period: f64, max_harmonic: u32) -> Self {
        let terms = (1..=max_harmonic)
            .map(|k| {
                (
                    k,
                    rng.random_range(-2.0..2.0) / k as f64,
                    rng.random_range(-2.0..2.0) / k as f64,
                )
            })
            .collect();
        Self {
            period,
            offset: rng.random_range(0.0..TAU),
            winding: rng.random_range(-2..=2),
            terms,
        }
    }

    pub fn angle(&self, t: f64) -> f64 {
        let w = TAU / self.period;
        self.terms.iter().fold(
            self.offset + w * self.winding as f64 * t,
            |acc, &(k, a, b)| {
                let x = w * k as f64 * t;
                acc + a * x.cos() + b * x.sin()
            },
        )
    }

    pub fn rate(&self, t: f64) -> f64 {
        let w = TAU / self.period;
        self.terms
            .iter()
            .fold(w * self.winding as f64, |acc, &(k, a, b)| {
                let wk = w * k as f64;
                let x = wk * t;
                acc + wk * (b * x.cos() - a * x.sin())
            })
    }
}

/// One Fourier series per frame index; indices past the end are untouched.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierGauge {
    pub series: Vec<FourierSeries>,
}

impl FourierGauge {
    pub fn random<R: Rng + ?Sized>(
        rng: &mut R,
        count: usize,
        period: f64,
        max_harmonic: u32,
    ) -> Self {
        Self {
            series: (0..count)
                .map(|_| FourierSeries::random(rng, period, max_harmonic))
                .collect(),
        }
    }
}

impl GaugeFunction for FourierGauge {
    fn angle(&self, n: usize, t: f64) -> f64 {
        self.series.get(n).map_or(0.0, |s| s.angle(t))
    }
    fn rate(&self, n: usize, t: f64) -> f64 {
        self.series.get(n).map_or(0.0, |s| s.rate(t))
    }
    fn is_periodic(&self) -> bool {
        true
    }
}

/// `v_n -> e^{i a_n(t)} v_n`, derivative by the product rule.
pub struct GaugeTransformed<F, G> {
    frame: F,
    gauge: G,
}

pub fn gauge_transform<F: MovingFrame, G: GaugeFunction>(
    frame: F,
    gauge: G,
) -> GaugeTransformed<F, G> {
    GaugeTransformed { frame, gauge }
}

impl<F, G> GaugeTransformed<F, G> {
    pub fn inner_frame(&self) -> &F {
        &self.frame
    }

    pub fn gauge(&self) -> &G {
        &self.gauge
    }
}

impl<F: MovingFrame, G: GaugeFunction> MovingFrame for GaugeTransformed<F, G> {
    fn dim(&self) -> usize {
        self.frame.dim()
    }
    fn count(&self) -> usize {
        self.frame.count()
    }
    fn value(&self, n: usize, t: f64) -> StateVector {
        self.frame.value(n, t).phased(self.gauge.angle(n, t))
    }
    fn analytic_derivative(&self, n: usize, t: f64) -> Option<StateVector> {
        let dv = self.frame.analytic_derivative(n, t)?;
        let v = self.frame.value(n, t);
        let twisted = &dv + &v.scaled(I * self.gauge.rate(n, t));
        Some(twisted.phased(self.gauge.angle(n, t)))
    }
    fn period(&self) -> Option<f64> {
        self.frame.period()
    }
}

/// `<v_n|i dv_n/dt>` split into its physical real part and the imaginary
/// part, which measures norm drift.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConnectionSample {
    pub value: f64,
    pub imag: f64,
}

pub fn connection_sample<F: MovingFrame + ?Sized>(
    frame: &F,
    n: usize,
    t: f64,
    h: f64,
) -> Result<ConnectionSample> {
    check_index(frame, n)?;
    let v = frame.value(n, t);
    let dv = derivative(frame, n, t, h);
    let z = inner(&v, &dv.scaled(I))?;
    Ok(ConnectionSample {
        value: z.re,
        imag: z.im,
    })
}

/// Connection with an explicit finite-difference step and tolerances.
pub fn connection_with<F: MovingFrame + ?Sized>(
    frame: &F,
    n: usize,
    t: f64,
    h: f64,
    tol: &Tolerances,
) -> Result<f64> {
    let s = connection_sample(frame, n, t, h)?;
    if s.imag.abs() > tol.connection_imag {
        return Err(Error::NormalizationDrift {
            t,
            imag: s.imag,
            tolerance: tol.connection_imag,
        });
    }
    Ok(s.value)
}

/// Berry connection `A_n(t) = Re <v_n|i dv_n/dt>`.
pub fn connection<F: MovingFrame + ?Sized>(frame: &F, n: usize, t: f64) -> Result<f64> {
    connection_with(frame, n, t, default_fd_step(frame), &Tolerances::default())
}

/// Connection at every node of `grid`, finite differences at `dt/8`.
pub fn connection_on_grid<F: MovingFrame + ?Sized>(
    frame: &F,
    n: usize,
    grid: &TimeGrid,
    tol: &Tolerances,
) -> Result<Vec<f64>> {
    let h = grid.dt() / 8.0;
    grid.nodes()
        .map(|t| connection_with(frame, n, t, h, tol))
        .collect()
}

/// `∫_0^T A_n dt` by the composite trapezoid rule on `grid`.
pub fn connection_integral<F: MovingFrame + ?Sized>(
    frame: &F,
    n: usize,
    grid: &TimeGrid,
    tol: &Tolerances,
) -> Result<f64> {
    Ok(trapezoid(
        &connection_on_grid(frame, n, grid, tol)?,
        grid.dt(),
    ))
}

/// `<v_n(0)|v_n(T)> exp(i ∫_0^T A_n dt)` with `T = grid.t_end()`.
pub fn holonomy<F: MovingFrame + ?Sized>(
    frame: &F,
    n: usize,
    grid: &TimeGrid,
    tol: &Tolerances,
) -> Result<C64> {
    check_index(frame, n)?;
    let overlap = inner(&frame.value(n, 0.0), &frame.value(n, grid.t_end()))?;
    let integral = connection_integral(frame, n, grid, tol)?;
    Ok(overlap * C64::from_polar(1.0, integral))
}

/// Frame with vector `n` dressed by `exp(i ∫_0^t A_n)` so that its
/// connection vanishes; the integral is the grid trapezoid at nodes and is
/// continued by a partial trapezoid panel between nodes.
pub struct ParallelTransported<F> {
    frame: F,
    index: usize,
    grid: TimeGrid,
    fd_step: f64,
    connection: Vec<f64>,
    cumulative: Vec<f64>,
}

pub fn parallel_transport_fix<F: MovingFrame>(
    frame: F,
    n: usize,
    grid: &TimeGrid,
    tol: &Tolerances,
) -> Result<ParallelTransported<F>> {
    check_index(&frame, n)?;
    let connection = connection_on_grid(&frame, n, grid, tol)?;
    let cumulative = cumulative_trapezoid(&connection, grid.dt());
    Ok(ParallelTransported {
        frame,
        index: n,
        grid: *grid,
        fd_step: grid.dt() / 8.0,
        connection,
        cumulative,
    })
}

impl<F: MovingFrame> ParallelTransported<F> {
    fn raw_connection(&self, t: f64) -> f64 {
        connection_sample(&self.frame, self.index, t, self.fd_step)
            .expect("index validated at construction")
            .value
    }

    /// Accumulated dressing phase `∫_0^t A_n`.
    pub fn transport_phase(&self, t: f64) -> f64 {
        let dt = self.grid.dt();
        let steps = self.grid.steps();
        let pos = t / dt;
        let k = (pos.floor().max(0.0) as usize).min(steps - 1);
        if pos == pos.round() && (pos as usize) <= steps && pos >= 0.0 {
            return self.cumulative[pos as usize];
        }
        let tk = self.grid.time(k);
        self.cumulative[k] + 0.5 * (t - tk) * (self.connection[k] + self.raw_connection(t))
    }

    pub fn total_phase(&self) -> f64 {
        self.cumulative[self.grid.steps()]
    }
}

impl<F: MovingFrame> MovingFrame for ParallelTransported<F> {
    fn dim(&self) -> usize {
        self.frame.dim()
    }
    fn count(&self) -> usize {
        self.frame.count()
    }
    fn value(&self, n: usize, t: f64) -> StateVector {
        let v = self.frame.value(n, t);
        if n == self.index {
            v.phased(self.transport_phase(t))
        } else {
            v
        }
    }
    fn analytic_derivative(&self, n: usize, t: f64) -> Option<StateVector> {
        if n != self.index {
            return self.frame.analytic_derivative(n, t);
        }
        let v = self.frame.value(n, t);
        let dv = derivative(&self.frame, n, t, self.fd_step);
        let a = self.raw_connection(t);
        Some((&dv + &v.scaled(I * a)).phased(self.transport_phase(t)))
    }
    fn period(&self) -> Option<f64> {
        self.frame.period()
    }
}

/// `H_eff(n, m) = <v_n|H|v_m> - <v_n|i hbar dv_m/dt>` at one time.
#[derive(Debug, Clone)]
pub struct EffectiveHamiltonian {
    pub t: f64,
    pub entries: CMatrix,
}

impl EffectiveHamiltonian {
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.entries.nrows())
            .map(|n| self.entries[(n, n)].re)
            .collect()
    }

    pub fn max_off_diagonal(&self) -> f64 {
        let n = self.entries.nrows();
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    worst = worst.max(self.entries[(i, j)].norm());
                }
            }
        }
        worst
    }

    pub fn hermiticity_defect(&self) -> f64 {
        hermiticity_defect(&self.entries)
    }
}

pub fn eff_hamiltonian_matrix<F: MovingFrame + ?Sized, S: HamiltonianSchedule + ?Sized>(
    frame: &F,
    h: &S,
    t: f64,
    hbar: f64,
    tol: &Tolerances,
) -> Result<EffectiveHamiltonian> {
    eff_hamiltonian_matrix_with_step(frame, h, t, hbar, default_fd_step(frame), tol)
}

pub fn eff_hamiltonian_matrix_with_step<
    F: MovingFrame + ?Sized,
    S: HamiltonianSchedule + ?Sized,
>(
    frame: &F,
    h: &S,
    t: f64,
    hbar: f64,
    fd_step: f64,
    tol: &Tolerances,
) -> Result<EffectiveHamiltonian> {
    if frame.dim() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            found: frame.dim(),
        });
    }
    let op = hermitian_at(h, t, tol)?;
    let count = frame.count();
    let vs: Vec<StateVector> = (0..count).map(|n| frame.value(n, t)).collect();
    let hv: Vec<StateVector> = vs.iter().map(|v| op.apply(v)).collect();
    let dv: Vec<StateVector> = (0..count)
        .map(|n| derivative(frame, n, t, fd_step))
        .collect();
    let entries = CMatrix::from_fn(count, count, |i, j| {
        let energy = vs[i].as_vector().dotc(hv[j].as_vector());
        let twist = vs[i].as_vector().dotc(dv[j].as_vector()) * I * hbar;
        energy - twist
    });
    Ok(EffectiveHamiltonian { t, entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::StaticHamiltonian;
    use crate::hilbert::pauli;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    /// `v(t) = e^{-i λ t} u` for a fixed unit vector `u`.
    fn rotating_phase_frame(lambda: f64) -> FnFrame {
        let u = StateVector::new(vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)]).unwrap();
        let u2 = u.clone();
        FnFrame::new(2, 1, Some(TAU / lambda), move |_, t| u.phased(-lambda * t))
            .with_derivative(move |_, t| u2.phased(-lambda * t).scaled(C64::new(0.0, -lambda)))
    }

    #[test]
    fn constant_frame_has_zero_connection_and_unit_holonomy() {
        let f = ConstantFrame::canonical(3);
        assert_eq!(connection(&f, 1, 0.4).unwrap(), 0.0);
        let grid = TimeGrid::new(2.0, 16).unwrap();
        let h = holonomy(&f, 2, &grid, &tol()).unwrap();
        assert!((h - C64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn connection_of_phase_rotation_is_its_rate() {
        let f = rotating_phase_frame(1.7);
        assert!((connection(&f, 0, 0.3).unwrap() - 1.7).abs() < 1e-14);
    }

    #[test]
    fn finite_difference_connection_matches_analytic() {
        let u = StateVector::new(vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)]).unwrap();
        let f = FnFrame::new(2, 1, Some(TAU), move |_, t| u.phased(-1.3 * t));
        let a = connection_with(&f, 0, 0.7, 1e-4, &tol()).unwrap();
        assert!((a - 1.3).abs() < 1e-8);
    }

    #[test]
    fn norm_drift_is_reported() {
        let f = FnFrame::new(1, 1, None, |_, t| {
            StateVector::new(vec![C64::new(1.0 + t, 0.0)]).unwrap()
        });
        assert!(matches!(
            connection(&f, 0, 0.5),
            Err(Error::NormalizationDrift { .. })
        ));
    }

    #[test]
    fn out_of_range_index_is_rejected() {
        let f = ConstantFrame::canonical(2);
        assert!(matches!(
            connection(&f, 2, 0.0),
            Err(Error::FrameIndex { index: 2, count: 2 })
        ));
    }

    #[test]
    fn identity_gauge_leaves_frame_unchanged() {
        let f = rotating_phase_frame(0.9);
        let g = gauge_transform(&f, ConstantGauge(0.0));
        for t in [0.0, 0.4, 2.2] {
            assert_eq!(g.value(0, t), f.value(0, t));
        }
    }

    #[test]
    fn linear_gauge_shifts_connection_by_minus_rate() {
        let f = rotating_phase_frame(0.9);
        let g = gauge_transform(&f, LinearGauge { rate: 0.25 });
        let shift = connection(&g, 0, 1.1).unwrap() - connection(&f, 0, 1.1).unwrap();
        assert!((shift + 0.25).abs() < 1e-14);
    }

    #[test]
    fn parallel_transport_strips_a_pure_phase() {
        let lambda = 1.3;
        let f = rotating_phase_frame(lambda);
        let grid = TimeGrid::new(TAU / lambda, 64).unwrap();
        let fixed = parallel_transport_fix(&f, 0, &grid, &tol()).unwrap();
        let u = f.value(0, 0.0);
        for t in [0.0, 0.37, grid.time(10), grid.t_end()] {
            assert!((&fixed.value(0, t) - &u).norm() < 1e-12);
        }
        for t in grid.nodes() {
            assert!(connection_sample(&fixed, 0, t, 1e-4).unwrap().value.abs() < 1e-12);
        }
    }

    #[test]
    fn random_periodic_gauges_leave_holonomy_invariant() {
        let f = rotating_phase_frame(2.0);
        let grid = TimeGrid::new(f.period().unwrap(), 128).unwrap();
        let base = holonomy(&f, 0, &grid, &tol()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let g = FourierGauge::random(&mut rng, 1, grid.t_end(), 4);
            let h = holonomy(&gauge_transform(&f, &g), 0, &grid, &tol()).unwrap();
            assert!((h - base).norm() <= 1e-10, "{h} vs {base}");
        }
    }

    #[test]
    fn fourier_rate_matches_difference_quotient() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s = FourierSeries::random(&mut rng, 2.5, 5);
        let h = 1e-6;
        for t in [0.0, 0.8, 2.1] {
            let fd = (s.angle(t + h) - s.angle(t - h)) / (2.0 * h);
            assert!((fd - s.rate(t)).abs() < 1e-6);
        }
        let turns = (s.angle(2.5) - s.angle(0.0)) / TAU;
        assert!((turns - s.winding as f64).abs() < 1e-12);
    }

    #[test]
    fn eigenframe_of_static_hamiltonian_gives_diagonal_energies() {
        let h = StaticHamiltonian(pauli::z() * C64::new(0.7, 0.0));
        let f = ConstantFrame::canonical(2);
        let heff = eff_hamiltonian_matrix(&f, &h, 0.3, 1.0, &tol()).unwrap();
        assert_eq!(heff.diagonal(), vec![0.7, -0.7]);
        assert_eq!(heff.max_off_diagonal(), 0.0);
    }

    #[test]
    fn canonical_frame_reproduces_raw_hamiltonian() {
        let m = pauli::x() * C64::new(0.4, 0.0) + pauli::y() * C64::new(-1.1, 0.0);
        let h = StaticHamiltonian(m.clone());
        let heff =
            eff_hamiltonian_matrix(&ConstantFrame::canonical(2), &h, 0.0, 1.0, &tol()).unwrap();
        assert_eq!(heff.entries, m);
    }

    #[test]
    fn eff_hamiltonian_rejects_non_hermitian() {
        let m = CMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(0., 0.),
                C64::new(1., 0.),
                C64::new(0., 0.),
                C64::new(0., 0.),
            ],
        );
        let h = StaticHamiltonian(m);
        let res = eff_hamiltonian_matrix(&ConstantFrame::canonical(2), &h, 0.5, 1.0, &tol());
        assert!(matches!(res, Err(Error::NonHermitianAt { t, .. }) if t == 0.5));
    }

    #[test]
    fn constant_frame_validates_orthonormality() {
        let a = StateVector::basis(2, 0);
        assert!(ConstantFrame::new(vec![a.clone(), a], &tol()).is_err());
    }
}
