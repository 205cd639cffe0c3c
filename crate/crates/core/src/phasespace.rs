//! Classical reduction in the variables `s = |b|² − |a|²`, `θ = arg b − arg a`.
//!
//! ```text
//! ṡ = −(2α + β(1−s)) √(1−s²) sin θ
//! θ̇ = 2γ + (2α + β(1−s)) s cos θ / √(1−s²)
//! ```
//!
//! These are Hamiltonian with respect to the bracket `{θ, s} = 2α + β(1−s)`
//! and `H_c = −√(1−s²) cos θ − (2γ/β) ln|2α + β(1−s)|`.
//!
//! Fixed points with θ ∈ {0, π} solve `h(s) = −2γ/σ`, `σ = cos θ`, where
//! `h(s) = (2α + β(1−s)) s / √(1−s²)`. For `β < −α` and `γ = 0` there is
//! also a whole line of fixed points at `s_hole = 1 + 2α/β` (any θ).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::PhaseSpaceError;
use crate::model::{from_bloch, BlochCoords, QuantumState};
use crate::ode::{self, StepControl};
use crate::poly;
use crate::spectrum::{self, classify_structure, StructureType};

/// Distance kept from the poles `s = ±1` when scanning for fixed points.
const POLE_GUARD: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    /// θ = 0, σ = +1.
    Theta0,
    /// θ = π, σ = −1.
    ThetaPi,
    /// The line `s = s_hole`, θ arbitrary.
    Hole,
}

impl Branch {
    pub fn name(&self) -> &'static str {
        match self {
            Branch::Theta0 => "theta0",
            Branch::ThetaPi => "thetapi",
            Branch::Hole => "hole",
        }
    }

    /// `σ = cos θ`; the hole has none.
    pub fn sigma(&self) -> Option<f64> {
        match self {
            Branch::Theta0 => Some(1.0),
            Branch::ThetaPi => Some(-1.0),
            Branch::Hole => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPoint {
    pub s: f64,
    pub branch: Branch,
    pub gamma: f64,
}

impl FixedPoint {
    /// Quantum state with `I = (1 − s)/2` and θ from the branch (0 for the
    /// hole).
    pub fn state(&self) -> QuantumState {
        let theta = match self.branch {
            Branch::ThetaPi => std::f64::consts::PI,
            _ => 0.0,
        };
        from_bloch(&BlochCoords::new(self.s.clamp(-1.0, 1.0), theta)).expect("fixed points lie inside the Bloch sphere")
    }

    /// `|h(s) + 2γ/σ|`; zero for the hole.
    pub fn residual(&self, alpha: f64, beta: f64) -> f64 {
        match self.branch.sigma() {
            Some(sigma) => (h(self.s, alpha, beta) + 2.0 * self.gamma / sigma).abs(),
            None => 0.0,
        }
    }
}

/// `{θ, s} = 2α + β(1 − s)`.
#[inline]
pub fn bracket(s: f64, alpha: f64, beta: f64) -> f64 {
    2.0 * alpha + beta * (1.0 - s)
}

/// `h(s) = (2α + β(1−s)) s / √(1−s²)`.
#[inline]
pub fn h(s: f64, alpha: f64, beta: f64) -> f64 {
    bracket(s, alpha, beta) * s / (1.0 - s * s).sqrt()
}

/// `(ṡ, θ̇)` of the canonical equations.
pub fn canonical_rhs(s: f64, theta: f64, gamma: f64, alpha: f64, beta: f64) -> Result<(f64, f64), PhaseSpaceError> {
    if s.abs() >= 1.0 || s.is_nan() {
        return Err(PhaseSpaceError::PoleSingularity(s));
    }
    let w = bracket(s, alpha, beta);
    let root = (1.0 - s * s).sqrt();
    let (sin, cos) = theta.sin_cos();
    Ok((-w * root * sin, 2.0 * gamma + w * s * cos / root))
}

/// `H_c(s, θ) = −√(1−s²) cos θ − (2γ/β) ln|2α + β(1−s)|`.
pub fn classical_hamiltonian(s: f64, theta: f64, gamma: f64, alpha: f64, beta: f64) -> Result<f64, PhaseSpaceError> {
    if beta == 0.0 {
        return Err(PhaseSpaceError::BetaZero);
    }
    if s.abs() > 1.0 || s.is_nan() {
        return Err(PhaseSpaceError::PoleSingularity(s));
    }
    let w = bracket(s, alpha, beta);
    if w.abs() <= f64::EPSILON * (2.0 * alpha + beta.abs()) {
        return Err(PhaseSpaceError::LogSingularity(s));
    }
    Ok(-(1.0 - s * s).sqrt() * theta.cos() - (2.0 * gamma / beta) * w.abs().ln())
}

/// Linear-limit Hamiltonian `2γ s − 2α √(1−s²) cos θ` (standard bracket).
pub fn linear_classical_hamiltonian(s: f64, theta: f64, gamma: f64, alpha: f64) -> f64 {
    2.0 * gamma * s - 2.0 * alpha * (1.0 - s * s).sqrt() * theta.cos()
}

/// `s_hole = 1 + 2α/β`, present when it lies strictly inside (−1, 1),
/// i.e. for `β < −α`.
pub fn hole_fixed_point(alpha: f64, beta: f64) -> Option<f64> {
    if beta < -alpha {
        Some(1.0 + 2.0 * alpha / beta)
    } else {
        None
    }
}

/// Fixed points at bias γ, ordered by branch then s.
///
/// For `γ ≠ 0`, each σ branch is solved on the monotone pieces of `h`,
/// split at the real roots of `h′ ∝ βs³ − 2βs + (2α + β)`. At `γ = 0` the
/// two isolated points `s = 0` are returned together with the hole line
/// when it exists.
pub fn find_fixed_points(alpha: f64, beta: f64, gamma: f64) -> Vec<FixedPoint> {
    if gamma == 0.0 {
        let mut out = vec![
            FixedPoint {
                s: 0.0,
                branch: Branch::Theta0,
                gamma,
            },
            FixedPoint {
                s: 0.0,
                branch: Branch::ThetaPi,
                gamma,
            },
        ];
        if let Some(s) = hole_fixed_point(alpha, beta) {
            out.push(FixedPoint {
                s,
                branch: Branch::Hole,
                gamma,
            });
        }
        return out;
    }

    let lo = -1.0 + POLE_GUARD;
    let hi = 1.0 - POLE_GUARD;
    let mut cuts = vec![lo];
    if beta != 0.0 {
        let crit = poly::real_roots(&[beta, 0.0, -2.0 * beta, 2.0 * alpha + beta]);
        cuts.extend(crit.into_iter().filter(|&c| c > lo && c < hi));
    }
    cuts.push(hi);
    cuts.dedup();

    let mut out = Vec::new();
    for branch in [Branch::Theta0, Branch::ThetaPi] {
        let target = -2.0 * gamma / branch.sigma().unwrap();
        let g = |s: f64| h(s, alpha, beta) - target;
        let mut roots: Vec<f64> = Vec::new();
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let (ga, gb) = (g(a), g(b));
            let root = if ga == 0.0 {
                Some(a)
            } else if gb == 0.0 {
                Some(b)
            } else if ga.signum() != gb.signum() {
                Some(bisect_root(&g, a, b))
            } else {
                None
            };
            if let Some(r) = root {
                if !roots.iter().any(|x| (x - r).abs() <= 1e-12) {
                    roots.push(r);
                }
            }
        }
        roots.sort_by(f64::total_cmp);
        out.extend(roots.into_iter().map(|s| FixedPoint { s, branch, gamma }));
    }
    out
}

fn bisect_root(g: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let sa = g(a).signum();
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        let gm = g(m);
        if gm == 0.0 {
            return m;
        }
        if gm.signum() == sa {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Number of distinct fixed points (the hole line counts once).
pub fn fixed_point_count(alpha: f64, beta: f64, gamma: f64) -> usize {
    find_fixed_points(alpha, beta, gamma).len()
}

/// `γ_c(β) = −(β+2)² / (8β √(1 − s_v²))`, `s_v = 1/2 + 1/β`, in units of α.
/// Only defined for `β < −α`.
pub fn boundary_f(alpha: f64, beta: f64) -> Result<f64, PhaseSpaceError> {
    let b = beta / alpha;
    if !(b < -1.0) {
        return Err(PhaseSpaceError::OutOfRegime(beta));
    }
    let sv = 0.5 + 1.0 / b;
    Ok(alpha * (-(b + 2.0).powi(2) / (8.0 * b * (1.0 - sv * sv).sqrt())))
}

/// β at which the two tangency roots in (−1, 0) merge: the zero of the
/// cubic discriminant `32β⁴ − 27β²(β+2)²` on (−1, 0).
pub fn swallowtail_merge_point() -> f64 {
    let (r32, r27) = (32f64.sqrt(), 27f64.sqrt());
    -2.0 * r27 / (r32 + r27)
}

/// Roots in (−1, 0) of `βs³ − 2βs + (β + 2) = 0` (α = 1), ascending.
pub fn tangency_cubic_roots(beta: f64) -> Result<(f64, f64), PhaseSpaceError> {
    if beta == 0.0 || !beta.is_finite() {
        return Err(PhaseSpaceError::NoWindow(beta));
    }
    let disc = 32.0 * beta.powi(4) - 27.0 * beta * beta * (beta + 2.0).powi(2);
    if disc <= 0.0 {
        return Err(PhaseSpaceError::NoWindow(beta));
    }
    let inside: Vec<f64> = poly::real_roots(&[beta, 0.0, -2.0 * beta, beta + 2.0])
        .into_iter()
        .filter(|&s| s > -1.0 && s < 0.0)
        .collect();
    match inside.as_slice() {
        [s1, s2] if s1 < s2 => Ok((*s1, *s2)),
        _ => Err(PhaseSpaceError::NoWindow(beta)),
    }
}

/// `|γ|` at which `2|γ|√(1−s²) = |βs² − (β+2)s|` holds (α = 1).
pub fn tangency_gamma(beta: f64, s: f64) -> f64 {
    (beta * s * s - (beta + 2.0) * s).abs() / (2.0 * (1.0 - s * s).sqrt())
}

/// Printed series coefficients of the upper swallowtail boundary.
pub const G2_APPENDIX_COEFFS: [f64; 3] = [0.34, 1.5, 5.0];
pub const G2_INLINE_COEFFS: [f64; 4] = [0.15, 0.636, 2.4, 40.0];

/// Closed form of the constant term of the upper boundary series,
/// `(2φ + 1)√(−φ)/(2φ)` with `φ = (1 − √5)/2`.
pub fn kappa0() -> f64 {
    let phi = (1.0 - 5f64.sqrt()) / 2.0;
    (2.0 * phi + 1.0) * (-phi).sqrt() / (2.0 * phi)
}

/// Swallowtail boundaries for `−1 < β < β*` (α = 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TangencyBoundary {
    pub beta: f64,
    pub gamma_c1: f64,
    pub gamma_c2: f64,
    pub s1: f64,
    pub s2: f64,
    /// `√η (1 − 2η − 6η² − 50η³)`, η = β + 1.
    pub series_c1: f64,
    /// `κ0 + 0.34η + 1.5η² + 5η³`.
    pub series_c2: f64,
    /// `0.15 + 0.636η + 2.4η² + 40η³`.
    pub series_c2_inline: f64,
}

pub fn boundary_g(beta: f64) -> Result<TangencyBoundary, PhaseSpaceError> {
    if !(beta > -1.0) {
        return Err(PhaseSpaceError::NoWindow(beta));
    }
    let (s1, s2) = tangency_cubic_roots(beta)?;
    let (g1, g2) = (tangency_gamma(beta, s1), tangency_gamma(beta, s2));
    let ((gamma_c1, s1), (gamma_c2, s2)) = if g1 <= g2 {
        ((g1, s1), (g2, s2))
    } else {
        ((g2, s2), (g1, s1))
    };
    let eta = beta + 1.0;
    let [k1, k2, k3] = G2_APPENDIX_COEFFS;
    let [i0, i1, i2, i3] = G2_INLINE_COEFFS;
    Ok(TangencyBoundary {
        beta,
        gamma_c1,
        gamma_c2,
        s1,
        s2,
        series_c1: eta.sqrt() * (1.0 - 2.0 * eta - 6.0 * eta * eta - 50.0 * eta.powi(3)),
        series_c2: kappa0() + k1 * eta + k2 * eta * eta + k3 * eta.powi(3),
        series_c2_inline: i0 + i1 * eta + i2 * eta * eta + i3 * eta.powi(3),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundarySource {
    Analytic,
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BoundaryKind {
    /// Four levels for `0 < |γ| < γ_c`.
    Single(f64),
    /// Four levels for `γ_c1 < |γ| < γ_c2`.
    Pair(f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseBoundary {
    pub beta: f64,
    pub kind: BoundaryKind,
    pub source: BoundarySource,
}

impl PhaseBoundary {
    /// Largest gap between two boundaries of the same shape.
    pub fn distance(&self, other: &PhaseBoundary) -> Option<f64> {
        match (self.kind, other.kind) {
            (BoundaryKind::Single(a), BoundaryKind::Single(b)) => Some((a - b).abs()),
            (BoundaryKind::Pair(a1, a2), BoundaryKind::Pair(b1, b2)) => Some((a1 - b1).abs().max((a2 - b2).abs())),
            _ => None,
        }
    }
}

/// Boundary located by bisection on the validated-level count.
pub fn oracle_boundary(alpha: f64, beta: f64) -> Option<PhaseBoundary> {
    let windows = spectrum::four_level_windows(alpha, beta);
    let &(lo, hi) = windows.first()?;
    let kind = if lo == 0.0 {
        BoundaryKind::Single(hi)
    } else {
        BoundaryKind::Pair(lo, hi)
    };
    Some(PhaseBoundary {
        beta,
        kind,
        source: BoundarySource::Oracle,
    })
}

/// Boundary from the closed form (`β < −α`) or the tangency system
/// (`−α < β < β* α`).
pub fn analytic_boundary(alpha: f64, beta: f64) -> Option<PhaseBoundary> {
    let kind = if beta < -alpha {
        BoundaryKind::Single(boundary_f(alpha, beta).ok()?)
    } else {
        let t = boundary_g(beta / alpha).ok()?;
        BoundaryKind::Pair(alpha * t.gamma_c1, alpha * t.gamma_c2)
    };
    Some(PhaseBoundary {
        beta,
        kind,
        source: BoundarySource::Analytic,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseCell {
    pub beta: f64,
    pub gamma: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryAgreement {
    pub beta: f64,
    pub oracle: PhaseBoundary,
    pub analytic: PhaseBoundary,
    pub max_abs_diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseDiagram {
    pub alpha: f64,
    pub cells: Vec<PhaseCell>,
    /// Structure type per β column.
    pub regions: Vec<(f64, StructureType)>,
    /// `(β, γ_c)` from the closed form, for `β < −α` in the grid.
    pub boundary_f: Vec<(f64, f64)>,
    /// `(β, γ_c1, γ_c2)` from the tangency system.
    pub boundary_g: Vec<(f64, f64, f64)>,
    pub agreement: Vec<BoundaryAgreement>,
}

/// Level counts on the (β, γ) grid plus analytic boundaries and their
/// agreement with the root-count oracle. Cells are evaluated in parallel;
/// output order is β-major, matching the input grids.
pub fn phase_diagram(alpha: f64, beta_grid: &[f64], gamma_grid: &[f64]) -> PhaseDiagram {
    let cells: Vec<PhaseCell> = beta_grid
        .par_iter()
        .flat_map_iter(|&beta| {
            gamma_grid.iter().map(move |&gamma| PhaseCell {
                beta,
                gamma,
                count: spectrum::level_count(alpha, beta, gamma),
            })
        })
        .collect();

    let per_beta: Vec<_> = beta_grid
        .par_iter()
        .map(|&beta| {
            let region = classify_structure(alpha, beta);
            let analytic = analytic_boundary(alpha, beta);
            let oracle = oracle_boundary(alpha, beta);
            (beta, region, analytic, oracle)
        })
        .collect();

    let mut regions = Vec::new();
    let mut boundary_f = Vec::new();
    let mut boundary_g = Vec::new();
    let mut agreement = Vec::new();
    for (beta, region, analytic, oracle) in per_beta {
        regions.push((beta, region));
        if let Some(a) = analytic {
            match a.kind {
                BoundaryKind::Single(g) => boundary_f.push((beta, g)),
                BoundaryKind::Pair(g1, g2) => boundary_g.push((beta, g1, g2)),
            }
            if let Some(o) = oracle {
                if let Some(d) = o.distance(&a) {
                    agreement.push(BoundaryAgreement {
                        beta,
                        oracle: o,
                        analytic: a,
                        max_abs_diff: d,
                    });
                }
            }
        }
    }
    PhaseDiagram {
        alpha,
        cells,
        regions,
        boundary_f,
        boundary_g,
        agreement,
    }
}

/// Integrates the canonical equations at fixed γ, returning `(t, s, θ)`
/// at `n + 1` evenly spaced times on `[0, t_end]`.
pub fn classical_trajectory(
    s0: f64,
    theta0: f64,
    gamma: f64,
    alpha: f64,
    beta: f64,
    t_end: f64,
    n: usize,
) -> Result<Vec<(f64, f64, f64)>, PhaseSpaceError> {
    canonical_rhs(s0, theta0, gamma, alpha, beta)?;
    let outputs: Vec<f64> = (1..=n).map(|k| t_end * k as f64 / n as f64).collect();
    let mut out = vec![(0.0, s0, theta0)];
    let mut pole: Option<f64> = None;
    let control = StepControl {
        rel_tol: 1e-12,
        abs_tol: 1e-14,
        ..StepControl::default()
    };
    let result = ode::integrate(
        |_, y: &[f64; 2]| match canonical_rhs(y[0], y[1], gamma, alpha, beta) {
            Ok((ds, dt)) => [ds, dt],
            Err(_) => [f64::NAN, f64::NAN],
        },
        0.0,
        [s0, theta0],
        &outputs,
        &control,
        |t, y| out.push((t, y[0], y[1])),
        |_, y| {
            if y[0].abs() >= 1.0 || !y[0].is_finite() {
                pole = Some(y[0]);
                false
            } else {
                true
            }
        },
    );
    match result {
        Ok(_) => Ok(out),
        Err(_) => Err(PhaseSpaceError::PoleSingularity(pole.unwrap_or(f64::NAN))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn canonical_rhs_examples() {
        for (a, b) in [(1.0, 0.0), (1.0, -3.0), (2.0, 5.0)] {
            assert_eq!(canonical_rhs(0.0, 0.0, 0.0, a, b).unwrap(), (0.0, 0.0));
        }
        let (ds, dt) = canonical_rhs(0.5, 0.0, 1.0, 1.0, 0.0).unwrap();
        assert_eq!(ds, 0.0);
        assert_abs_diff_eq!(dt, 2.0 + 1.0 / 0.75f64.sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(dt, 3.1547, epsilon = 1e-4);
        let (ds, dt) = canonical_rhs(0.0, PI / 2.0, 0.0, 1.0, 0.0).unwrap();
        assert_abs_diff_eq!(ds, -2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(dt, 0.0, epsilon = 1e-15);
        assert!(matches!(
            canonical_rhs(1.0, 0.0, 0.0, 1.0, 0.0),
            Err(PhaseSpaceError::PoleSingularity(_))
        ));
    }

    #[test]
    fn classical_hamiltonian_examples() {
        assert_abs_diff_eq!(
            classical_hamiltonian(0.0, 0.0, 0.0, 1.0, -3.0).unwrap(),
            -1.0,
            epsilon = 1e-15
        );
        assert!(matches!(
            classical_hamiltonian(0.0, PI, 1.0, 1.0, -2.0),
            Err(PhaseSpaceError::LogSingularity(_))
        ));
        assert!(matches!(
            classical_hamiltonian(0.5, 0.0, 0.1, 1.0, -4.0),
            Err(PhaseSpaceError::LogSingularity(_))
        ));
        assert_eq!(
            classical_hamiltonian(0.2, 0.0, 0.1, 1.0, 0.0),
            Err(PhaseSpaceError::BetaZero)
        );
    }

    #[test]
    fn linear_hamiltonian_generates_linear_flow() {
        // ṡ = −∂H/∂θ, θ̇ = ∂H/∂s at β = 0.
        let (s, th, g, a) = (0.3, 0.7, 0.4, 1.0);
        let d = 1e-6;
        let dhdth =
            (linear_classical_hamiltonian(s, th + d, g, a) - linear_classical_hamiltonian(s, th - d, g, a)) / (2.0 * d);
        let dhds =
            (linear_classical_hamiltonian(s + d, th, g, a) - linear_classical_hamiltonian(s - d, th, g, a)) / (2.0 * d);
        let (ds, dt) = canonical_rhs(s, th, g, a, 0.0).unwrap();
        assert_abs_diff_eq!(ds, -dhdth, epsilon = 1e-8);
        assert_abs_diff_eq!(dt, dhds, epsilon = 1e-8);
    }

    #[test]
    fn hole_examples() {
        assert_eq!(hole_fixed_point(1.0, -2.0), Some(0.0));
        assert_eq!(hole_fixed_point(1.0, -4.0), Some(0.5));
        assert_eq!(hole_fixed_point(1.0, -0.5), None);
        assert_eq!(hole_fixed_point(1.0, -1.0), None);
    }

    #[test]
    fn fixed_points_at_zero_bias() {
        let fp = find_fixed_points(1.0, 0.0, 0.0);
        assert_eq!(fp.len(), 2);
        assert!(fp.iter().all(|p| p.s == 0.0));
        assert_eq!(fp[0].branch, Branch::Theta0);
        assert_eq!(fp[1].branch, Branch::ThetaPi);

        let fp = find_fixed_points(1.0, -2.0, 0.0);
        assert_eq!(fp.len(), 3);
        assert_eq!(fp[2].branch, Branch::Hole);
        assert_eq!(fp[2].s, 0.0);
    }

    #[test]
    fn four_fixed_points_inside_window() {
        let fp = find_fixed_points(1.0, -3.0, 0.02);
        assert_eq!(fp.len(), 4, "{fp:?}");
        for p in &fp {
            assert!(p.residual(1.0, -3.0) <= 1e-10, "{p:?}");
        }
        assert_eq!(find_fixed_points(1.0, -3.0, 0.1).len(), 2);
    }

    #[test]
    fn fixed_point_residuals() {
        for &(beta, gamma) in &[
            (0.0, 0.5),
            (1.5, -0.3),
            (-0.98, 0.15),
            (-1.5, 0.01),
            (-5.0, 0.2),
            (-5.0, -3.0),
        ] {
            for p in find_fixed_points(1.0, beta, gamma) {
                assert!(p.residual(1.0, beta,) <= 1e-10, "beta={beta} gamma={gamma} {p:?}");
            }
        }
    }

    #[test]
    fn boundary_f_examples() {
        assert_abs_diff_eq!(boundary_f(1.0, -2.0).unwrap(), 0.0, epsilon = 1e-15);
        let want = 1.0 / (24.0 * (35.0f64 / 36.0).sqrt());
        assert_abs_diff_eq!(boundary_f(1.0, -3.0).unwrap(), want, epsilon = 1e-15);
        assert_abs_diff_eq!(want, 0.04226, epsilon = 1e-5);
        let want = -0.25 / (8.0 * -1.5 * (35.0f64 / 36.0).sqrt());
        assert_abs_diff_eq!(boundary_f(1.0, -1.5).unwrap(), want, epsilon = 1e-15);
        assert_abs_diff_eq!(want, 0.02113, epsilon = 1e-5);
        assert!(boundary_f(1.0, -0.5).is_err());
        assert!(boundary_f(1.0, -1.0).is_err());
        for beta in [-1.1, -1.5, -2.5, -4.0, -10.0] {
            assert!(boundary_f(1.0, beta).unwrap() >= 0.0);
        }
    }

    #[test]
    fn tangency_roots() {
        let (s1, s2) = tangency_cubic_roots(-0.99).unwrap();
        assert!(-1.0 < s1 && s1 < s2 && s2 < 0.0);
        assert!(matches!(tangency_cubic_roots(-0.95), Err(PhaseSpaceError::NoWindow(_))));
        let (s1, s2) = tangency_cubic_roots(-1.0 + 1e-7).unwrap();
        assert!((s1 + 1.0).abs() < 1e-3, "{s1}");
        assert_abs_diff_eq!(s2, (1.0 - 5f64.sqrt()) / 2.0, epsilon = 1e-6);
    }

    #[test]
    fn merge_point_is_discriminant_zero() {
        let b = swallowtail_merge_point();
        let disc = 32.0 * b.powi(4) - 27.0 * b * b * (b + 2.0).powi(2);
        assert!(disc.abs() < 1e-12);
        assert!((-0.97..=-0.95).contains(&b));
        assert!(tangency_cubic_roots(b + 1e-6).is_err());
        assert!(tangency_cubic_roots(b - 1e-6).is_ok());
    }

    #[test]
    fn boundary_g_against_series() {
        let t = boundary_g(-0.99).unwrap();
        assert_abs_diff_eq!(t.series_c1, 0.09794, epsilon = 1e-5);
        assert!((t.gamma_c1 - t.series_c1).abs() < 1e-3, "{t:?}");
        assert_abs_diff_eq!(t.series_c2, 0.1535, epsilon = 1e-3);
        assert!((t.gamma_c2 - t.series_c2).abs() < 5e-3, "{t:?}");
        assert!(0.0 < t.gamma_c1 && t.gamma_c1 < t.gamma_c2);

        let b = swallowtail_merge_point() - 1e-9;
        let t = boundary_g(b).unwrap();
        assert!((t.gamma_c2 - t.gamma_c1).abs() < 1e-4, "{t:?}");
        assert!(boundary_g(-1.2).is_err());
    }

    #[test]
    fn kappa0_value() {
        assert_abs_diff_eq!(kappa0(), 0.150, epsilon = 5e-4);
    }

    #[test]
    fn oracle_and_analytic_boundaries_agree() {
        for beta in [-1.5, -2.5, -3.0] {
            let o = oracle_boundary(1.0, beta).unwrap();
            let a = analytic_boundary(1.0, beta).unwrap();
            assert!(o.distance(&a).unwrap() < 1e-3, "{beta}: {o:?} {a:?}");
        }
        for beta in [-0.995, -0.99, -0.98] {
            let o = oracle_boundary(1.0, beta).unwrap();
            let a = analytic_boundary(1.0, beta).unwrap();
            assert!(o.distance(&a).unwrap() < 1e-6, "{beta}: {o:?} {a:?}");
        }
        assert!(oracle_boundary(1.0, 0.0).is_none());
        assert!(analytic_boundary(1.0, 0.0).is_none());
    }

    #[test]
    fn phase_diagram_cells() {
        let d = phase_diagram(1.0, &[-3.0, 0.0], &[0.02, 0.1, 1.0]);
        let count = |b: f64, g: f64| d.cells.iter().find(|c| c.beta == b && c.gamma == g).unwrap().count;
        assert_eq!(count(0.0, 1.0), 2);
        assert_eq!(count(-3.0, 0.02), 4);
        assert_eq!(count(-3.0, 0.1), 2);
        assert_eq!(
            d.regions,
            vec![(-3.0, StructureType::TypeIV), (0.0, StructureType::TypeI)]
        );
        assert_eq!(d.boundary_f.len(), 1);
        assert_eq!(d.agreement.len(), 1);
    }

    #[test]
    fn classical_energy_conserved() {
        for &(s0, th0, g, beta) in &[(0.2, 0.3, 0.2, 1.5), (-0.5, 0.4, 0.3, -0.5), (0.1, 2.0, -0.4, 2.5)] {
            let traj = classical_trajectory(s0, th0, g, 1.0, beta, 100.0, 200).unwrap();
            let h0 = classical_hamiltonian(s0, th0, g, 1.0, beta).unwrap();
            for (t, s, th) in traj {
                let h = classical_hamiltonian(s, th, g, 1.0, beta).unwrap();
                assert!((h - h0).abs() < 1e-8, "beta={beta} t={t}: {h} vs {h0}");
            }
        }
    }

    proptest! {
        #[test]
        fn bracket_form_matches_rhs(s in -0.95f64..0.95, th in -3.1f64..3.1, g in -1.0f64..1.0,
                                    beta in prop_oneof![-6.0f64..-0.1, 0.1f64..4.0]) {
            let w = bracket(s, 1.0, beta);
            prop_assume!(w.abs() > 1e-2);
            let d = 1e-6;
            let hc = |s: f64, th: f64| classical_hamiltonian(s, th, g, 1.0, beta).unwrap();
            let dth = (hc(s, th + d) - hc(s, th - d)) / (2.0 * d);
            let ds = (hc(s + d, th) - hc(s - d, th)) / (2.0 * d);
            let (sdot, thdot) = canonical_rhs(s, th, g, 1.0, beta).unwrap();
            prop_assert!((sdot + w * dth).abs() <= 1e-6 * (1.0 + sdot.abs()));
            prop_assert!((thdot - w * ds).abs() <= 1e-6 * (1.0 + thdot.abs()));
        }
    }
}
