//! Time-dependent sweeps of `i d/dt (a, b)ᵀ = H(γ(t)) (a, b)ᵀ` with
//! `γ(t) = v t`, and the quantities read off them.
//!
//! The coupling `α + β|a|²` is recomputed from the stage state at every
//! Runge-Kutta stage, so the nonlinearity is never lagged.
//!
//! Each step is an exact su(2) rotation (see [`ode::integrate_su2`]), so
//! the norm drift reported by a sweep is integration roundoff only.
//!
//! Tunneling probabilities start on the lower adiabatic branch at
//! `gamma_start` and read the upper-branch population at `gamma_end`, both
//! with the coupling frozen at its instantaneous value and including the
//! first-order adiabatic admixture `r = −i c v / (4λ³)`, `λ = √(γ² + c²)`.

use std::time::{Duration, Instant};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::DynamicsError;
use crate::model::{dynamical_energy, to_bloch, ModelParams, QuantumState};
use crate::ode::{self, OdeFailure, StepControl};
use crate::phasespace::hole_fixed_point;
use crate::spectrum::{level_curves, LevelCurves};

/// Accepted norm drift of a sweep.
pub const NORM_DRIFT_TOL: f64 = 1e-9;
/// Norm deviation treated as a blown-up state.
const BLOWUP_TOL: f64 = 1e-6;
/// Tolerance divisor for the single automatic retry.
const RETRY_FACTOR: f64 = 100.0;

/// Sweep rate taken as the adiabatic limit, and its halved check value.
pub const ADIABATIC_RATE: f64 = 1e-3;
pub const ADIABATIC_CHECK_RATE: f64 = 5e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Largest step in t.
    pub max_step: f64,
    /// Spacing of recorded samples in γ.
    pub sample_stride: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step: 1.0,
            sample_stride: 0.01,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return Err(DynamicsError::BadConfig("rel_tol must be positive"));
        }
        if !(self.abs_tol > 0.0 && self.abs_tol.is_finite()) {
            return Err(DynamicsError::BadConfig("abs_tol must be positive"));
        }
        if !(self.max_step > 0.0) {
            return Err(DynamicsError::BadConfig("max_step must be positive"));
        }
        if !(self.sample_stride > 0.0 && self.sample_stride.is_finite()) {
            return Err(DynamicsError::BadConfig("sample_stride must be positive"));
        }
        Ok(())
    }

    fn tightened(&self) -> Self {
        IntegratorConfig {
            rel_tol: self.rel_tol / RETRY_FACTOR,
            abs_tol: self.abs_tol / RETRY_FACTOR,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSample {
    pub gamma: f64,
    pub state: QuantumState,
    /// Population difference `|b|² − |a|²`.
    pub s: f64,
    /// Relative phase; 0 at the poles.
    pub theta: f64,
    /// `⟨ψ|H|ψ⟩`.
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub params: ModelParams,
    pub samples: Vec<SweepSample>,
    /// Population on the upper adiabatic branch at `gamma_end`.
    pub p_final: f64,
    /// `max | |ψ|² − 1 |` over all accepted steps.
    pub norm_drift: f64,
    pub wall_time: Duration,
    pub steps: usize,
    /// Whether the tightened-tolerance retry was needed.
    pub retried: bool,
}

impl SweepResult {
    pub fn final_sample(&self) -> &SweepSample {
        self.samples.last().expect("a sweep always records its end point")
    }
}

/// Sample times: `gamma_start + k · stride` up to and including `gamma_end`.
fn sample_gammas(params: &ModelParams, stride: f64) -> Vec<f64> {
    let span = params.gamma_end - params.gamma_start;
    let n = (span / stride).floor() as usize;
    let mut g: Vec<f64> = (0..=n).map(|k| params.gamma_start + k as f64 * stride).collect();
    if g.last().is_some_and(|&x| params.gamma_end - x > 1e-9 * stride) {
        g.push(params.gamma_end);
    } else if let Some(last) = g.last_mut() {
        *last = params.gamma_end;
    }
    g
}

struct RawRun {
    samples: Vec<SweepSample>,
    drift: f64,
    steps: usize,
}

fn run_once(params: &ModelParams, initial: &QuantumState, config: &IntegratorConfig) -> Result<RawRun, DynamicsError> {
    let gammas = sample_gammas(params, config.sample_stride);
    let v = params.v;
    let times: Vec<f64> = gammas.iter().map(|g| g / v).collect();
    let control = StepControl {
        rel_tol: config.rel_tol,
        abs_tol: config.abs_tol,
        max_step: config.max_step,
        ..StepControl::default()
    };
    let (alpha, beta) = (params.alpha, params.beta);
    let mut samples = Vec::with_capacity(gammas.len());
    let mut drift: f64 = (initial.norm_sqr() - 1.0).abs();
    let mut blowup: Option<(f64, f64)> = None;
    let mut k = 0usize;

    let result = ode::integrate_su2(
        |t, y: &[f64; 4]| [alpha + beta * (y[0] * y[0] + y[1] * y[1]), 0.0, v * t],
        params.t_start(),
        initial.to_array(),
        &times,
        &control,
        |_t, y| {
            // Record the exact grid γ rather than v·t to keep samples on the grid.
            let gamma = gammas[k];
            k += 1;
            let state = QuantumState::from_array(y);
            let bloch = to_bloch(&state);
            samples.push(SweepSample {
                gamma,
                state,
                s: bloch.s,
                theta: bloch.theta,
                energy: dynamical_energy(params, gamma, &state),
            });
        },
        |t, y| {
            let n = y.iter().map(|x| x * x).sum::<f64>();
            let dev = (n - 1.0).abs();
            if !dev.is_finite() || dev > BLOWUP_TOL {
                blowup = Some((v * t, n));
                return false;
            }
            drift = drift.max(dev);
            true
        },
    );
    match result {
        Ok(stats) => Ok(RawRun {
            samples,
            drift,
            steps: stats.accepted,
        }),
        Err(OdeFailure::NonFinite) => {
            let (gamma, norm_sqr) = blowup.unwrap_or((f64::NAN, f64::NAN));
            Err(DynamicsError::NonFiniteState { gamma, norm_sqr })
        }
        Err(OdeFailure::StepUnderflow) => Err(DynamicsError::StepUnderflow { t: f64::NAN }),
        Err(OdeFailure::TooManySteps) => Err(DynamicsError::TooManySteps(control.max_steps)),
    }
}

/// Integrates the sweep from `initial` at `gamma_start` to `gamma_end`.
///
/// A run whose norm drift exceeds [`NORM_DRIFT_TOL`] is repeated once with
/// tolerances divided by 100; if the drift is still too large the sweep
/// fails with [`DynamicsError::ToleranceExceeded`].
pub fn evolve(
    params: &ModelParams,
    initial: &QuantumState,
    config: &IntegratorConfig,
) -> Result<SweepResult, DynamicsError> {
    params.validate()?;
    config.validate()?;
    QuantumState::new(initial.a, initial.b)?;
    let started = Instant::now();

    let mut retried = false;
    let mut run = run_once(params, initial, config)?;
    if run.drift > NORM_DRIFT_TOL {
        retried = true;
        run = run_once(params, initial, &config.tightened())?;
        if run.drift > NORM_DRIFT_TOL {
            return Err(DynamicsError::ToleranceExceeded { drift: run.drift });
        }
    }
    let last = run.samples.last().expect("end point recorded");
    let p_final = upper_branch_population(params, last.gamma, &last.state);
    Ok(SweepResult {
        params: *params,
        p_final,
        norm_drift: run.drift,
        wall_time: started.elapsed(),
        steps: run.steps,
        retried,
        samples: run.samples,
    })
}

/// Frozen-coupling eigenbasis at bias γ: `(|+⟩, |−⟩)` as real vectors and
/// the half gap λ.
fn frozen_basis(gamma: f64, c: f64) -> ([f64; 2], [f64; 2], f64) {
    let lambda = gamma.hypot(c);
    if lambda == 0.0 {
        return ([1.0, 0.0], [0.0, 1.0], 0.0);
    }
    // λ ± γ without cancellation.
    let (lp, lm) = if gamma >= 0.0 {
        (lambda + gamma, c * c / (lambda + gamma))
    } else {
        (c * c / (lambda - gamma), lambda - gamma)
    };
    let cos = (lp / (2.0 * lambda)).sqrt();
    let sin = (lm / (2.0 * lambda)).sqrt().copysign(c);
    ([cos, sin], [sin, -cos], lambda)
}

/// First-order adiabatic admixture of a state following the lower branch:
/// `⟨+|ψ⟩/⟨−|ψ⟩ = i · admixture(c, v, λ) = −i c v/(4λ³)`.
fn admixture(c: f64, v: f64, lambda: f64) -> f64 {
    if lambda == 0.0 {
        0.0
    } else {
        -c * v / (4.0 * lambda.powi(3))
    }
}

/// Population on the upper adiabatic branch at bias γ, with the coupling
/// frozen at `α + β|a|²` of the given state.
pub fn upper_branch_population(params: &ModelParams, gamma: f64, state: &QuantumState) -> f64 {
    let c = params.coupling(state.intensity());
    let (up, down, lambda) = frozen_basis(gamma, c);
    if lambda == 0.0 {
        return state.intensity();
    }
    let r = Complex64::new(0.0, admixture(c, params.v, lambda));
    let on_up = state.a * up[0] + state.b * up[1];
    let on_down = state.a * down[0] + state.b * down[1];
    ((on_up - r * on_down).norm_sqr() / (1.0 + r.norm_sqr())).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AdiabaticBranch {
    Lower,
    Upper,
}

/// State on an adiabatic branch at `gamma_start`, with the coupling solved
/// self-consistently and the first-order admixture included. For
/// `gamma_start → −∞` the lower branch tends to `(1, 0)` and the upper one
/// to `(0, 1)`.
pub fn branch_state(params: &ModelParams, branch: AdiabaticBranch) -> QuantumState {
    let gamma = params.gamma_start;
    let mut intensity = match branch {
        AdiabaticBranch::Lower => 1.0,
        AdiabaticBranch::Upper => 0.0,
    };
    let mut state = QuantumState::mode_a();
    for _ in 0..100 {
        let c = params.coupling(intensity);
        let (up, down, lambda) = frozen_basis(gamma, c);
        let r = admixture(c, params.v, lambda);
        let n = (1.0 + r * r).sqrt();
        // Lower: |−⟩ + i r |+⟩. Upper: |+⟩ + i r |−⟩, orthogonal to it.
        let (main, other) = match branch {
            AdiabaticBranch::Lower => (down, up),
            AdiabaticBranch::Upper => (up, down),
        };
        state = QuantumState {
            a: Complex64::new(main[0], r * other[0]) / n,
            b: Complex64::new(main[1], r * other[1]) / n,
        };
        let next = state.intensity();
        let done = (next - intensity).abs() <= 1e-15;
        intensity = next;
        if done {
            break;
        }
    }
    state
}

pub fn lower_branch_state(params: &ModelParams) -> QuantumState {
    branch_state(params, AdiabaticBranch::Lower)
}

/// Tunneling probability for a sweep started on the lower adiabatic branch.
pub fn tunneling_probability(params: &ModelParams, config: &IntegratorConfig) -> Result<f64, DynamicsError> {
    Ok(evolve(params, &lower_branch_state(params), config)?.p_final)
}

/// Tunneling probabilities for many parameter sets, evaluated in parallel
/// on the current rayon pool; output order follows input order.
pub fn tunneling_probabilities(params: &[ModelParams], config: &IntegratorConfig) -> Vec<Result<f64, DynamicsError>> {
    params.par_iter().map(|p| tunneling_probability(p, config)).collect()
}

/// Linear Landau-Zener probability `exp(−π α² / v)`.
pub fn lz_reference(alpha: f64, v: f64) -> f64 {
    (-std::f64::consts::PI * alpha * alpha / v).exp()
}

/// Adiabatic-limit tunneling probability `−α/β`, valid for `β ≤ −α`
/// (`β = −α` is the limit point with probability 1).
pub fn adiabatic_probability_analytic(alpha: f64, beta: f64) -> Result<f64, DynamicsError> {
    if beta > -alpha || !beta.is_finite() {
        return Err(DynamicsError::OutOfRegime { alpha, beta });
    }
    Ok(-alpha / beta)
}

/// Numerical adiabatic probability with its convergence check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdiabaticEstimate {
    pub alpha: f64,
    pub beta: f64,
    /// p at [`ADIABATIC_RATE`].
    pub p: f64,
    /// p at [`ADIABATIC_CHECK_RATE`].
    pub p_check: f64,
}

impl AdiabaticEstimate {
    pub fn shift(&self) -> f64 {
        (self.p - self.p_check).abs()
    }

    pub fn converged(&self) -> bool {
        self.shift() < 0.005
    }
}

pub fn adiabatic_probability_numeric(
    alpha: f64,
    beta: f64,
    config: &IntegratorConfig,
) -> Result<AdiabaticEstimate, DynamicsError> {
    let run = |v: f64| {
        let params = ModelParams::with_default_window(alpha, beta, v)?;
        tunneling_probability(&params, config)
    };
    let (p, p_check) = rayon::join(|| run(ADIABATIC_RATE), || run(ADIABATIC_CHECK_RATE));
    Ok(AdiabaticEstimate {
        alpha,
        beta,
        p: p?,
        p_check: p_check?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelityPoint {
    pub gamma: f64,
    pub fidelity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityTrace {
    pub points: Vec<FidelityPoint>,
}

/// Overlap of each sample with the hole state `s = s_hole`, maximized over
/// the hole's free phase:
/// `F = (√(I I_h) + √((1 − I)(1 − I_h)))²` with `I_h = −α/β`.
pub fn fidelity_to_hole(params: &ModelParams, trace: &SweepResult) -> Result<FidelityTrace, DynamicsError> {
    let s_hole = hole_fixed_point(params.alpha, params.beta).ok_or(DynamicsError::OutOfRegime {
        alpha: params.alpha,
        beta: params.beta,
    })?;
    let ih = 0.5 * (1.0 - s_hole);
    let points = trace
        .samples
        .iter()
        .map(|smp| FidelityPoint {
            gamma: smp.gamma,
            fidelity: hole_fidelity(smp.state.intensity(), ih),
        })
        .collect();
    Ok(FidelityTrace { points })
}

pub(crate) fn hole_fidelity(intensity: f64, hole_intensity: f64) -> f64 {
    let i = intensity.clamp(0.0, 1.0);
    let f = (i * hole_intensity).sqrt() + ((1.0 - i) * (1.0 - hole_intensity)).sqrt();
    (f * f).clamp(0.0, 1.0)
}

/// Dynamical energy along a sweep, with the adiabatic levels on the same
/// γ grid for comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyTrace {
    pub sweep: SweepResult,
    pub levels: LevelCurves,
}

impl EnergyTrace {
    /// `(γ, ε_dyn)` pairs.
    pub fn energies(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.sweep.samples.iter().map(|s| (s.gamma, s.energy))
    }
}

pub fn dynamical_energy_trace(
    params: &ModelParams,
    config: &IntegratorConfig,
    initial: &QuantumState,
) -> Result<EnergyTrace, DynamicsError> {
    let sweep = evolve(params, initial, config)?;
    let grid: Vec<f64> = sweep.samples.iter().map(|s| s.gamma).collect();
    let levels = level_curves(params.alpha, params.beta, &grid)?;
    Ok(EnergyTrace { sweep, levels })
}

/// Largest `|ε_dyn − ε_lower|` over the samples, where `ε_lower` is the
/// lowest validated level at each γ.
pub fn max_deviation_from_lowest(trace: &EnergyTrace) -> f64 {
    trace
        .sweep
        .samples
        .iter()
        .map(|s| {
            let lowest = trace
                .levels
                .at(s.gamma)
                .map(|p| p.epsilon)
                .fold(f64::INFINITY, f64::min);
            (s.energy - lowest).abs()
        })
        .fold(0.0, f64::max)
}

/// Smallest `|ε_dyn − ε|` over all validated levels at each sample.
pub fn distance_to_levels(trace: &EnergyTrace) -> Vec<(f64, f64)> {
    trace
        .sweep
        .samples
        .iter()
        .map(|s| {
            let d = trace
                .levels
                .at(s.gamma)
                .map(|p| (s.energy - p.epsilon).abs())
                .fold(f64::INFINITY, f64::min);
            (s.gamma, d)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn lz_reference_examples() {
        assert_abs_diff_eq!(lz_reference(1.0, 1.0), 0.043213918263772, epsilon = 1e-12);
        assert_abs_diff_eq!(lz_reference(1.0, std::f64::consts::PI), (-1f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(
            lz_reference(2.0, 1.0),
            (-4.0 * std::f64::consts::PI).exp(),
            epsilon = 1e-18
        );
        assert!((lz_reference(2.0, 1.0) - 3.487e-6).abs() < 1e-9);
    }

    #[test]
    fn analytic_adiabatic_probability() {
        assert_eq!(adiabatic_probability_analytic(1.0, -2.0).unwrap(), 0.5);
        assert_eq!(adiabatic_probability_analytic(1.0, -1.0).unwrap(), 1.0);
        assert_eq!(adiabatic_probability_analytic(1.0, -5.0).unwrap(), 0.2);
        assert!(matches!(
            adiabatic_probability_analytic(1.0, -0.5),
            Err(DynamicsError::OutOfRegime { .. })
        ));
    }

    #[test]
    fn fidelity_closed_form() {
        // Same populations give unit fidelity.
        assert_abs_diff_eq!(hole_fidelity(0.25, 0.25), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(hole_fidelity(0.0, 1.0), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(hole_fidelity(1.0, 0.5), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn upper_population_far_from_crossing_is_bare() {
        let p = ModelParams::new(1.0, 0.0, 1.0, -50.0, 50.0).unwrap();
        let st = QuantumState::mode_a();
        let up = upper_branch_population(&p, 50.0, &st);
        assert!((up - 1.0).abs() < 1e-3);
        let down = upper_branch_population(&p, -50.0, &st);
        assert!(down < 1e-3);
    }

    #[test]
    fn sample_grid_hits_end() {
        let p = ModelParams::new(1.0, 0.0, 1.0, -1.0, 1.005).unwrap();
        let g = sample_gammas(&p, 0.01);
        assert_eq!(g[0], -1.0);
        assert_eq!(*g.last().unwrap(), 1.005);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn fast_sweep_freezes_state() {
        let p = ModelParams::new(1.0, -2.0, 1e4, -50.0, 50.0).unwrap();
        let r = evolve(&p, &QuantumState::mode_a(), &IntegratorConfig::default()).unwrap();
        let last = r.final_sample();
        assert!(last.state.intensity() > 0.99);
        assert!(r.p_final > 0.99);
        assert!(r.norm_drift <= NORM_DRIFT_TOL);
    }

    #[test]
    fn linear_sweep_matches_lz() {
        let p = ModelParams::with_default_window(1.0, 0.0, 1.0).unwrap();
        let r = evolve(&p, &QuantumState::mode_a(), &IntegratorConfig::default()).unwrap();
        let want = lz_reference(1.0, 1.0);
        assert!((r.p_final - want).abs() / want < 0.02, "{} vs {want}", r.p_final);
        assert!(r.norm_drift <= NORM_DRIFT_TOL);
        assert!(r.samples.windows(2).all(|w| w[0].gamma < w[1].gamma));
    }

    #[test]
    fn rejects_unnormalized_initial() {
        let p = ModelParams::with_default_window(1.0, 0.0, 1.0).unwrap();
        let bad = QuantumState {
            a: num_complex::Complex64::new(1.0, 0.0),
            b: num_complex::Complex64::new(1.0, 0.0),
        };
        assert!(evolve(&p, &bad, &IntegratorConfig::default()).is_err());
    }

    #[test]
    fn deterministic_samples() {
        let p = ModelParams::new(1.0, -1.5, 0.5, -10.0, 10.0).unwrap();
        let c = IntegratorConfig::default();
        let a = evolve(&p, &QuantumState::mode_a(), &c).unwrap();
        let b = evolve(&p, &QuantumState::mode_a(), &c).unwrap();
        assert_eq!(a.samples, b.samples);
        assert_eq!(a.p_final.to_bits(), b.p_final.to_bits());
    }
}
