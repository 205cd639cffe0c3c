//! Physical parameterization of the two-mode model with amplitude-dependent
//! coupling, and the Bloch-type change of variables shared by the other
//! modules.
//!
//! The Hamiltonian is
//!
//! ```text
//! H(γ) = | γ            α + β|a|² |
//!        | α + β|a|²    −γ        |
//! ```
//!
//! with the bias swept linearly, `γ(t) = v t`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Tolerance on `|a|² + |b|² = 1` for a state to count as normalized.
pub const NORM_TOL: f64 = 1e-9;

/// Amplitude modulus below which the relative phase is treated as undefined.
const POLE_AMPLITUDE: f64 = 1e-12;

/// Default sweep half-window for fast sweeps (`v > 0.01`).
pub const FAST_SWEEP_WINDOW: f64 = 50.0;
/// Default sweep half-window for adiabatic sweeps (`v <= 0.01`).
pub const ADIABATIC_SWEEP_WINDOW: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Linear coupling strength; sets the energy unit.
    pub alpha: f64,
    /// Nonlinear (amplitude-dependent) coupling strength.
    pub beta: f64,
    /// Sweep rate of the bias.
    pub v: f64,
    pub gamma_start: f64,
    pub gamma_end: f64,
}

impl ModelParams {
    pub fn new(alpha: f64, beta: f64, v: f64, gamma_start: f64, gamma_end: f64) -> Result<Self, ModelError> {
        let p = ModelParams {
            alpha,
            beta,
            v,
            gamma_start,
            gamma_end,
        };
        p.validate()?;
        Ok(p)
    }

    /// Symmetric window `[-Γ, Γ]` with Γ picked from the sweep rate:
    /// 50 for fast sweeps, 20 once `v <= 0.01`.
    pub fn with_default_window(alpha: f64, beta: f64, v: f64) -> Result<Self, ModelError> {
        let half = default_half_window(v);
        Self::new(alpha, beta, v, -half, half)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let finite = [self.alpha, self.beta, self.v, self.gamma_start, self.gamma_end]
            .iter()
            .all(|x| x.is_finite());
        if !finite {
            return Err(ModelError::NonFinite);
        }
        if self.alpha <= 0.0 {
            return Err(ModelError::NonPositiveAlpha(self.alpha));
        }
        if self.v <= 0.0 {
            return Err(ModelError::NonPositiveRate(self.v));
        }
        if self.gamma_start >= self.gamma_end {
            return Err(ModelError::EmptyWindow {
                start: self.gamma_start,
                end: self.gamma_end,
            });
        }
        Ok(())
    }

    /// Coupling `α + β I` for a given intensity `I = |a|²`.
    #[inline]
    pub fn coupling(&self, intensity: f64) -> f64 {
        self.alpha + self.beta * intensity
    }

    pub fn t_start(&self) -> f64 {
        self.gamma_start / self.v
    }

    pub fn t_end(&self) -> f64 {
        self.gamma_end / self.v
    }

    /// Same physics in units where `α = 1`.
    pub fn scaled(&self) -> ModelParams {
        ModelParams {
            alpha: 1.0,
            beta: self.beta / self.alpha,
            v: self.v / (self.alpha * self.alpha),
            gamma_start: self.gamma_start / self.alpha,
            gamma_end: self.gamma_end / self.alpha,
        }
    }
}

pub fn default_half_window(v: f64) -> f64 {
    if v <= 0.01 {
        ADIABATIC_SWEEP_WINDOW
    } else {
        FAST_SWEEP_WINDOW
    }
}

/// Complex two-mode amplitudes `(a, b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantumState {
    pub a: Complex64,
    pub b: Complex64,
}

impl QuantumState {
    /// Builds a state and checks `|a|² + |b|² = 1` to [`NORM_TOL`].
    pub fn new(a: Complex64, b: Complex64) -> Result<Self, ModelError> {
        let s = QuantumState { a, b };
        let dev = (s.norm_sqr() - 1.0).abs();
        if !dev.is_finite() || dev > NORM_TOL {
            return Err(ModelError::NotNormalized(s.norm_sqr()));
        }
        Ok(s)
    }

    /// Real amplitudes, normalized on construction.
    pub fn from_real(a: f64, b: f64) -> Result<Self, ModelError> {
        let n = a.hypot(b);
        if !(n.is_finite() && n > 0.0) {
            return Err(ModelError::NotNormalized(n * n));
        }
        Ok(QuantumState {
            a: Complex64::new(a / n, 0.0),
            b: Complex64::new(b / n, 0.0),
        })
    }

    /// All population in mode 1: `(1, 0)`.
    pub fn mode_a() -> Self {
        QuantumState {
            a: Complex64::new(1.0, 0.0),
            b: Complex64::new(0.0, 0.0),
        }
    }

    /// All population in mode 2: `(0, 1)`.
    pub fn mode_b() -> Self {
        QuantumState {
            a: Complex64::new(0.0, 0.0),
            b: Complex64::new(1.0, 0.0),
        }
    }

    #[inline]
    pub fn norm_sqr(&self) -> f64 {
        self.a.norm_sqr() + self.b.norm_sqr()
    }

    /// `I = |a|²`.
    #[inline]
    pub fn intensity(&self) -> f64 {
        self.a.norm_sqr()
    }

    /// Flattened `[Re a, Im a, Re b, Im b]`, the integrator's state vector.
    pub fn to_array(&self) -> [f64; 4] {
        [self.a.re, self.a.im, self.b.re, self.b.im]
    }

    pub fn from_array(y: &[f64; 4]) -> Self {
        QuantumState {
            a: Complex64::new(y[0], y[1]),
            b: Complex64::new(y[2], y[3]),
        }
    }

    /// `|⟨self|other⟩|²`.
    pub fn overlap_sqr(&self, other: &QuantumState) -> f64 {
        (self.a.conj() * other.a + self.b.conj() * other.b).norm_sqr()
    }
}

/// Population difference and relative phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochCoords {
    /// `s = |b|² − |a|²`.
    pub s: f64,
    /// `θ = arg b − arg a` on `(−π, π]`.
    pub theta: f64,
    /// Set at the poles `s = ±1`, where θ is undefined and reported as 0.
    pub degenerate: bool,
}

impl BlochCoords {
    pub fn new(s: f64, theta: f64) -> Self {
        BlochCoords {
            s,
            theta: wrap_phase(theta),
            degenerate: false,
        }
    }

    /// `I = |a|² = (1 − s)/2`.
    pub fn intensity(&self) -> f64 {
        0.5 * (1.0 - self.s)
    }
}

/// Reduces an angle to `(−π, π]`.
pub fn wrap_phase(theta: f64) -> f64 {
    let mut t = theta.rem_euclid(2.0 * PI);
    if t > PI {
        t -= 2.0 * PI;
    }
    t
}

/// Real symmetric 2×2 matrix `[[h00, h01], [h01, h11]]`.
pub type Matrix2 = [[f64; 2]; 2];

/// `H(γ)` with the coupling evaluated from the state's `|a|²`.
pub fn hamiltonian(params: &ModelParams, gamma: f64, state: &QuantumState) -> Matrix2 {
    frozen_hamiltonian(gamma, params.coupling(state.intensity()))
}

/// `H(γ)` for an explicit (frozen) coupling value.
pub fn frozen_hamiltonian(gamma: f64, coupling: f64) -> Matrix2 {
    [[gamma, coupling], [coupling, -gamma]]
}

/// `ε_dyn = ⟨ψ|H(γ)|ψ⟩ = γ(|a|² − |b|²) + 2 Re(a̅ b)(α + β|a|²)`.
pub fn dynamical_energy(params: &ModelParams, gamma: f64, state: &QuantumState) -> f64 {
    let c = params.coupling(state.intensity());
    gamma * (state.a.norm_sqr() - state.b.norm_sqr()) + 2.0 * (state.a.conj() * state.b).re * c
}

pub fn to_bloch(state: &QuantumState) -> BlochCoords {
    let s = state.b.norm_sqr() - state.a.norm_sqr();
    if state.a.norm() <= POLE_AMPLITUDE || state.b.norm() <= POLE_AMPLITUDE {
        return BlochCoords {
            s,
            theta: 0.0,
            degenerate: true,
        };
    }
    // arg(b a̅) avoids differencing two principal values.
    let theta = wrap_phase((state.b * state.a.conj()).arg());
    BlochCoords {
        s,
        theta,
        degenerate: false,
    }
}

/// Inverse of [`to_bloch`] in the gauge `arg a = 0`.
pub fn from_bloch(coords: &BlochCoords) -> Result<QuantumState, ModelError> {
    let s = coords.s;
    if !(-1.0..=1.0).contains(&s) || !coords.theta.is_finite() {
        return Err(ModelError::PopulationOutOfRange(s));
    }
    let a = (0.5 * (1.0 - s)).sqrt();
    let b = (0.5 * (1.0 + s)).sqrt();
    Ok(QuantumState {
        a: Complex64::new(a, 0.0),
        b: Complex64::from_polar(b, coords.theta),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn params(beta: f64) -> ModelParams {
        ModelParams::new(1.0, beta, 1.0, -10.0, 10.0).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn hamiltonian_examples() {
        let h = hamiltonian(&params(0.0), 2.0, &QuantumState::mode_a());
        assert_eq!(h, [[2.0, 1.0], [1.0, -2.0]]);

        let h = hamiltonian(&params(-2.0), 0.0, &QuantumState::mode_a());
        assert_eq!(h, [[0.0, -1.0], [-1.0, 0.0]]);

        let half = QuantumState::from_real(1.0, 1.0).unwrap();
        let h = hamiltonian(&params(-2.0), 0.0, &half);
        assert_abs_diff_eq!(h[0][1], 0.0, epsilon = 1e-15);
        assert_eq!(h[0][1], h[1][0]);
    }

    #[test]
    fn dynamical_energy_examples() {
        for beta in [-3.0, 0.0, 2.5] {
            let e = dynamical_energy(&params(beta), 2.0, &QuantumState::mode_a());
            assert_eq!(e, 2.0);
        }
        let sym = QuantumState::new(c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0)).unwrap();
        assert_abs_diff_eq!(dynamical_energy(&params(0.0), 0.0, &sym), 1.0, epsilon = 1e-15);
        let anti = QuantumState::new(c(FRAC_1_SQRT_2, 0.0), c(-FRAC_1_SQRT_2, 0.0)).unwrap();
        assert_abs_diff_eq!(dynamical_energy(&params(0.0), 0.0, &anti), -1.0, epsilon = 1e-15);
    }

    #[test]
    fn bloch_examples() {
        let b = to_bloch(&QuantumState::mode_a());
        assert_eq!(b.s, -1.0);
        assert_eq!(b.theta, 0.0);
        assert!(b.degenerate);

        let st = QuantumState::new(c(FRAC_1_SQRT_2, 0.0), c(0.0, FRAC_1_SQRT_2)).unwrap();
        let b = to_bloch(&st);
        assert_abs_diff_eq!(b.s, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(b.theta, PI / 2.0, epsilon = 1e-15);
        assert!(!b.degenerate);

        let st = from_bloch(&BlochCoords::new(0.0, PI)).unwrap();
        assert_abs_diff_eq!(st.a.re, FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(st.a.im, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(st.b.re, -FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(st.b.im, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(ModelParams::new(0.0, 1.0, 1.0, -1.0, 1.0).is_err());
        assert!(ModelParams::new(1.0, 1.0, -1.0, -1.0, 1.0).is_err());
        assert!(ModelParams::new(1.0, 1.0, 1.0, 1.0, 1.0).is_err());
        assert!(ModelParams::new(1.0, f64::NAN, 1.0, -1.0, 1.0).is_err());
        assert!(QuantumState::new(c(1.0, 0.0), c(1.0, 0.0)).is_err());
        assert!(from_bloch(&BlochCoords::new(1.5, 0.0)).is_err());
    }

    #[test]
    fn default_window_depends_on_rate() {
        let slow = ModelParams::with_default_window(1.0, -2.0, 0.001).unwrap();
        assert_eq!((slow.gamma_start, slow.gamma_end), (-20.0, 20.0));
        let fast = ModelParams::with_default_window(1.0, -2.0, 1.0).unwrap();
        assert_eq!((fast.gamma_start, fast.gamma_end), (-50.0, 50.0));
    }

    proptest! {
        #[test]
        fn bloch_round_trip(s in -0.999f64..0.999, theta in -3.1f64..3.1) {
            let coords = BlochCoords::new(s, theta);
            let back = to_bloch(&from_bloch(&coords).unwrap());
            prop_assert!((back.s - s).abs() < 1e-12);
            prop_assert!((wrap_phase(back.theta - theta)).abs() < 1e-9);
        }

        #[test]
        fn gauge_invariance(s in -0.999f64..0.999, theta in -3.0f64..3.0, phase in -3.0f64..3.0,
                            gamma in -5.0f64..5.0, beta in -5.0f64..5.0) {
            let st = from_bloch(&BlochCoords::new(s, theta)).unwrap();
            let g = Complex64::from_polar(1.0, phase);
            let rotated = QuantumState { a: st.a * g, b: st.b * g };
            let p = params(beta);
            let b0 = to_bloch(&st);
            let b1 = to_bloch(&rotated);
            prop_assert!((b0.s - b1.s).abs() < 1e-12);
            prop_assert!(wrap_phase(b0.theta - b1.theta).abs() < 1e-9);
            prop_assert!((dynamical_energy(&p, gamma, &st) - dynamical_energy(&p, gamma, &rotated)).abs() < 1e-12);
        }

        #[test]
        fn hamiltonian_is_symmetric(a in -1.0f64..1.0, b in -1.0f64..1.0, gamma in -10.0f64..10.0,
                                    beta in -5.0f64..5.0) {
            prop_assume!(a.hypot(b) > 1e-3);
            let st = QuantumState::from_real(a, b).unwrap();
            let h = hamiltonian(&params(beta), gamma, &st);
            prop_assert_eq!(h[0][1], h[1][0]);
            prop_assert_eq!(h[0][0], -h[1][1]);
        }
    }
}
