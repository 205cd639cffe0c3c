//! Adiabatic (self-consistent) levels of the nonlinear eigenproblem
//! `H(γ)ψ = εψ`.
//!
//! Eliminating the intensity `I = |a|²` gives a quartic in ε,
//!
//! ```text
//! ε⁴ + D ε² + E ε + F = 0,
//! D = −(4α² + 4αβ + β² + 4γ²)/4,  E = −(4αβγ + 2β²γ)/4,  F = −β²γ²/4,
//! ```
//!
//! whose real roots are candidates only: each is mapped back to
//! `I = (ε + γ)/(2ε)` and accepted after checking `(α + βI)² = ε² − γ²`.

use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::SpectrumError;
use crate::model::{frozen_hamiltonian, QuantumState};
use crate::poly;

/// Maximum scaled residual `|(α+βI)² − (ε²−γ²)| / max(1, ε²)` of an
/// accepted level.
pub const LEVEL_RESIDUAL_TOL: f64 = 1e-10;

/// Levels closer than this (relative) are the same level.
const DUPLICATE_TOL: f64 = 1e-12;

/// Half-width of the β neighbourhood probed when classifying.
pub const CLASSIFY_TOL: f64 = 1e-4;

/// Coefficients of `ε⁴ + D ε² + E ε + F`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuarticCoefficients {
    pub d: f64,
    pub e: f64,
    pub f: f64,
}

impl QuarticCoefficients {
    /// Highest degree first, for [`poly`].
    pub fn as_poly(&self) -> [f64; 5] {
        [1.0, 0.0, self.d, self.e, self.f]
    }

    pub fn eval(&self, eps: f64) -> f64 {
        ((eps * eps + self.d) * eps + self.e) * eps + self.f
    }

    /// Discriminant: positive for four (or zero) distinct real roots,
    /// negative for exactly two.
    pub fn discriminant(&self) -> f64 {
        let (p, q, r) = (self.d, self.e, self.f);
        256.0 * r.powi(3) - 128.0 * p * p * r * r + 144.0 * p * q * q * r - 27.0 * q.powi(4) + 16.0 * p.powi(4) * r
            - 4.0 * p.powi(3) * q * q
    }
}

pub fn quartic_coefficients(alpha: f64, beta: f64, gamma: f64) -> QuarticCoefficients {
    QuarticCoefficients {
        d: -(4.0 * alpha * alpha + 4.0 * alpha * beta + beta * beta + 4.0 * gamma * gamma) / 4.0,
        e: -(4.0 * alpha * beta * gamma + 2.0 * beta * beta * gamma) / 4.0,
        f: -(beta * beta * gamma * gamma) / 4.0,
    }
}

/// The four complex roots, sorted by (Re, Im); near-real roots are snapped
/// to the real axis.
pub fn solve_quartic(coeffs: &QuarticCoefficients) -> [Complex64; 4] {
    let r = poly::roots(&coeffs.as_poly());
    [r[0], r[1], r[2], r[3]]
}

/// A validated self-consistent eigenpair at fixed γ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdiabaticLevel {
    pub epsilon: f64,
    /// `I = |a|²`.
    pub intensity: f64,
    pub residual: f64,
}

impl AdiabaticLevel {
    /// Real eigenvector with `a = √I ≥ 0`; the sign of `b` (θ ∈ {0, π})
    /// follows from `b/a = (ε − γ)/(α + βI)`.
    pub fn state(&self, alpha: f64, beta: f64, gamma: f64) -> QuantumState {
        let i = self.intensity.clamp(0.0, 1.0);
        let c = alpha + beta * i;
        let ratio = self.epsilon - gamma;
        let sign = if c == 0.0 || ratio * c >= 0.0 { 1.0 } else { -1.0 };
        QuantumState {
            a: Complex64::new(i.sqrt(), 0.0),
            b: Complex64::new(sign * (1.0 - i).sqrt(), 0.0),
        }
    }

    /// `‖H(γ)ψ − εψ‖` for the level's own state.
    pub fn eigen_residual(&self, alpha: f64, beta: f64, gamma: f64) -> f64 {
        let psi = self.state(alpha, beta, gamma);
        let h = frozen_hamiltonian(gamma, alpha + beta * psi.intensity());
        let r0 = h[0][0] * psi.a + h[0][1] * psi.b - self.epsilon * psi.a;
        let r1 = h[1][0] * psi.a + h[1][1] * psi.b - self.epsilon * psi.b;
        (r0.norm_sqr() + r1.norm_sqr()).sqrt()
    }
}

/// Validated levels at `(α, β, γ)`, ascending in ε.
pub fn adiabatic_levels(alpha: f64, beta: f64, gamma: f64) -> Result<Vec<AdiabaticLevel>, SpectrumError> {
    let coeffs = quartic_coefficients(alpha, beta, gamma);
    let mut levels: Vec<AdiabaticLevel> = Vec::with_capacity(4);
    for root in solve_quartic(&coeffs) {
        if root.im != 0.0 {
            continue;
        }
        if let Some(level) = validate_root(alpha, beta, gamma, root.re) {
            let dup = levels
                .iter()
                .any(|l| (l.epsilon - level.epsilon).abs() <= DUPLICATE_TOL * level.epsilon.abs().max(1.0));
            if !dup {
                levels.push(level);
            }
        }
    }
    if levels.is_empty() {
        return Err(SpectrumError::NoLevels { alpha, beta, gamma });
    }
    levels.sort_by(|a, b| a.epsilon.total_cmp(&b.epsilon));
    Ok(levels)
}

/// Number of validated levels; the root-count oracle used for boundaries.
pub fn level_count(alpha: f64, beta: f64, gamma: f64) -> usize {
    adiabatic_levels(alpha, beta, gamma).map_or(0, |l| l.len())
}

fn validate_root(alpha: f64, beta: f64, gamma: f64, eps: f64) -> Option<AdiabaticLevel> {
    if eps == 0.0 {
        // ε = 0 needs γ = 0 and a vanishing coupling: the knot, I = −α/β.
        if gamma != 0.0 || beta == 0.0 {
            return None;
        }
        let intensity = -alpha / beta;
        if !(0.0..=1.0).contains(&intensity) {
            return None;
        }
        return Some(AdiabaticLevel {
            epsilon: 0.0,
            intensity,
            residual: (alpha + beta * intensity).powi(2),
        });
    }
    let raw = (eps + gamma) / (2.0 * eps);
    if !(-1e-12..=1.0 + 1e-12).contains(&raw) {
        return None;
    }
    let intensity = raw.clamp(0.0, 1.0);
    let residual = ((alpha + beta * intensity).powi(2) - (eps * eps - gamma * gamma)).abs() / (eps * eps).max(1.0);
    (residual <= LEVEL_RESIDUAL_TOL).then_some(AdiabaticLevel {
        epsilon: eps,
        intensity,
        residual,
    })
}

/// Topological type of the level structure ε(γ).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StructureType {
    /// Avoided crossing; never more than two levels.
    TypeI,
    /// Swallowtail: a four-level window away from γ = 0.
    TypeII,
    /// Knot at γ = 0 with positive slope.
    TypeIII,
    /// Knot at γ = 0 with negative slope.
    TypeIV,
    /// Within [`CLASSIFY_TOL`] of a detected transition.
    Indeterminate,
}

impl StructureType {
    pub fn label(&self) -> &'static str {
        match self {
            StructureType::TypeI => "I",
            StructureType::TypeII => "II",
            StructureType::TypeIII => "III",
            StructureType::TypeIV => "IV",
            StructureType::Indeterminate => "indeterminate",
        }
    }
}

impl fmt::Display for StructureType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Classifies by root counting and knot slope. A point whose type differs
/// from either neighbour at `β ± 1e-4` is reported as indeterminate.
pub fn classify_structure(alpha: f64, beta: f64) -> StructureType {
    let here = classify_raw(alpha, beta);
    let lo = classify_raw(alpha, beta - CLASSIFY_TOL);
    let hi = classify_raw(alpha, beta + CLASSIFY_TOL);
    match (here, lo, hi) {
        (Some(t), Some(l), Some(h)) if t == l && t == h => t,
        _ => StructureType::Indeterminate,
    }
}

fn classify_raw(alpha: f64, beta: f64) -> Option<StructureType> {
    if has_knot(alpha, beta) {
        let slope = knot_slope(alpha, beta).ok()?;
        return Some(if slope > 0.0 {
            StructureType::TypeIII
        } else {
            StructureType::TypeIV
        });
    }
    let windows = four_level_windows(alpha, beta);
    match windows.first() {
        None => Some(StructureType::TypeI),
        Some(&(lo, _)) if lo > 0.0 => Some(StructureType::TypeII),
        Some(_) => None,
    }
}

/// True when γ = 0 carries a validated ε = 0 level strictly inside the
/// Bloch sphere.
fn has_knot(alpha: f64, beta: f64) -> bool {
    adiabatic_levels(alpha, beta, 0.0).is_ok_and(|levels| {
        levels
            .iter()
            .any(|l| l.epsilon == 0.0 && l.intensity > 0.0 && l.intensity < 1.0)
    })
}

/// Slope dε/dγ at the knot `(γ, ε) = (0, 0)`.
///
/// Both inner levels of the four-level window leave the knot with the same
/// slope and split at higher order, so the central difference is taken on
/// their midpoint. Starts at `h = 1e-4` and halves until two successive
/// estimates agree to 1e-3 relative.
pub fn knot_slope(alpha: f64, beta: f64) -> Result<f64, SpectrumError> {
    if beta >= -alpha {
        return Err(SpectrumError::NoKnot { alpha, beta });
    }
    let inner_mid = |g: f64| -> Option<f64> {
        let levels = adiabatic_levels(alpha, beta, g).ok()?;
        (levels.len() == 4).then(|| 0.5 * (levels[1].epsilon + levels[2].epsilon))
    };
    let estimate = |h: f64| -> Option<f64> { Some((inner_mid(h)? - inner_mid(-h)?) / (2.0 * h)) };

    let mut h = 1e-4 * alpha;
    let min_h = 1e-10 * alpha;
    let mut prev = loop {
        if let Some(s) = estimate(h) {
            break s;
        }
        h *= 0.5;
        if h < min_h {
            return Err(SpectrumError::SlopeUnstable(beta));
        }
    };
    while h > min_h {
        h *= 0.5;
        let Some(next) = estimate(h) else { break };
        if (next - prev).abs() <= 1e-3 * next.abs() {
            return Ok(next);
        }
        prev = next;
    }
    Err(SpectrumError::SlopeUnstable(beta))
}

/// Bias intervals `(lo, hi)` with `γ > 0` on which four validated levels
/// exist. `lo = 0` means the window reaches down to the knot. The spectrum
/// is symmetric under `(γ, ε) → (−γ, −ε)`, so negative γ mirrors these.
///
/// A coarse count scan locates wide windows; local maxima of the quartic
/// discriminant catch windows narrower than the scan step. Edges are
/// refined by bisection on the count.
pub fn four_level_windows(alpha: f64, beta: f64) -> Vec<(f64, f64)> {
    let step = 1e-3 * alpha;
    let gamma_max = alpha + beta.abs();
    let n = (gamma_max / step).ceil() as usize;
    let grid: Vec<f64> = (1..=n).map(|k| k as f64 * step).collect();
    let counts: Vec<usize> = grid.iter().map(|&g| level_count(alpha, beta, g)).collect();
    let disc: Vec<f64> = grid
        .iter()
        .map(|&g| quartic_coefficients(alpha, beta, g).discriminant())
        .collect();

    let is_four = |g: f64| level_count(alpha, beta, g) == 4;
    let mut windows = Vec::new();

    // Window touching γ → 0; probe below the first grid point too.
    if counts[0] == 4 {
        let mut i = 0;
        while i + 1 < n && counts[i + 1] == 4 {
            i += 1;
        }
        let hi = if i + 1 < n {
            bisect_edge(&is_four, grid[i], grid[i + 1])
        } else {
            grid[i]
        };
        windows.push((0.0, hi));
    } else if let Some(g) = (1..=4).map(|k| step * 10f64.powi(-k)).find(|&g| is_four(g)) {
        windows.push((0.0, bisect_edge(&is_four, g, step)));
    }

    let covered = |g: f64, windows: &[(f64, f64)]| windows.iter().any(|&(lo, hi)| g >= lo && g <= hi);

    for i in 1..n {
        // Entering a window between grid points.
        if counts[i] == 4 && counts[i - 1] != 4 && !covered(grid[i], &windows) {
            let lo = bisect_edge(&|g| !is_four(g), grid[i - 1], grid[i]);
            let mut j = i;
            while j + 1 < n && counts[j + 1] == 4 {
                j += 1;
            }
            let hi = if j + 1 < n {
                bisect_edge(&is_four, grid[j], grid[j + 1])
            } else {
                grid[j]
            };
            windows.push((lo, hi));
        }
    }
    for i in 1..n.saturating_sub(1) {
        let (a, b, c) = (disc[i - 1], disc[i], disc[i + 1]);
        if counts[i] != 4 && b >= a && b >= c && !covered(grid[i], &windows) {
            if let Some(peak) = refine_discriminant_peak(alpha, beta, grid[i - 1], grid[i + 1]) {
                if is_four(peak) {
                    let lo = bisect_edge(&|g| !is_four(g), grid[i - 1], peak);
                    let hi = bisect_edge(&is_four, peak, grid[i + 1]);
                    windows.push((lo, hi));
                }
            }
        }
    }
    windows.sort_by(|x, y| x.0.total_cmp(&y.0));
    windows
}

/// Golden-section maximization of the discriminant on `[lo, hi]`; returns
/// the argmax if the maximum is positive.
fn refine_discriminant_peak(alpha: f64, beta: f64, lo: f64, hi: f64) -> Option<f64> {
    let disc = |g: f64| quartic_coefficients(alpha, beta, g).discriminant();
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (disc(c), disc(d));
    for _ in 0..100 {
        if (b - a).abs() <= 1e-15 * b.abs().max(1.0) {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = disc(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = disc(d);
        }
    }
    let x = 0.5 * (a + b);
    (disc(x) > 0.0).then_some(x)
}

/// Bisects between `inside` (predicate true) and `outside` (false) to
/// machine resolution; returns the midpoint of the final bracket.
pub(crate) fn bisect_edge(pred: &dyn Fn(f64) -> bool, inside: f64, outside: f64) -> f64 {
    let (mut a, mut b) = (inside, outside);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        if pred(m) {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// One sample of a level curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelPoint {
    pub gamma: f64,
    pub epsilon: f64,
    pub intensity: f64,
    /// Continuation label, stable along a branch.
    pub branch: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelCurves {
    pub alpha: f64,
    pub beta: f64,
    pub points: Vec<LevelPoint>,
    pub branch_count: usize,
}

impl LevelCurves {
    pub fn at(&self, gamma: f64) -> impl Iterator<Item = &LevelPoint> {
        self.points.iter().filter(move |p| p.gamma == gamma)
    }

    pub fn branch(&self, id: usize) -> impl Iterator<Item = &LevelPoint> {
        self.points.iter().filter(move |p| p.branch == id)
    }
}

/// Levels on a sorted γ grid with branch labels from nearest-neighbour
/// matching in (ε, I) between adjacent grid points.
pub fn level_curves(alpha: f64, beta: f64, gamma_grid: &[f64]) -> Result<LevelCurves, SpectrumError> {
    if gamma_grid.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(SpectrumError::UnsortedGrid);
    }
    let per_gamma: Vec<Vec<AdiabaticLevel>> = gamma_grid
        .par_iter()
        .map(|&g| adiabatic_levels(alpha, beta, g))
        .collect::<Result<_, _>>()?;

    let mut points = Vec::new();
    let mut active: Vec<(usize, f64, f64)> = Vec::new();
    let mut next_id = 0usize;
    for (&gamma, levels) in gamma_grid.iter().zip(&per_gamma) {
        let assignment = match_levels(&active, levels);
        let mut now_active = Vec::with_capacity(levels.len());
        for (k, level) in levels.iter().enumerate() {
            let id = match assignment[k] {
                Some(slot) => active[slot].0,
                None => {
                    next_id += 1;
                    next_id - 1
                }
            };
            points.push(LevelPoint {
                gamma,
                epsilon: level.epsilon,
                intensity: level.intensity,
                branch: id,
            });
            now_active.push((id, level.epsilon, level.intensity));
        }
        active = now_active;
    }
    Ok(LevelCurves {
        alpha,
        beta,
        points,
        branch_count: next_id,
    })
}

/// For each level, the index into `active` it continues (or `None`).
/// Exhaustive over injective assignments (at most 4 × 4); minimizes the
/// summed (ε, I) distance, ties broken by the summed |ΔI|.
fn match_levels(active: &[(usize, f64, f64)], levels: &[AdiabaticLevel]) -> Vec<Option<usize>> {
    let n = levels.len();
    let m = active.len();
    let pairs = n.min(m);
    let mut best: Option<(f64, f64, Vec<Option<usize>>)> = None;
    let mut current = vec![None; n];
    let mut used = vec![false; m];

    #[allow(clippy::too_many_arguments)]
    fn search(
        k: usize,
        matched: usize,
        pairs: usize,
        active: &[(usize, f64, f64)],
        levels: &[AdiabaticLevel],
        current: &mut Vec<Option<usize>>,
        used: &mut Vec<bool>,
        best: &mut Option<(f64, f64, Vec<Option<usize>>)>,
    ) {
        if k == levels.len() {
            if matched != pairs {
                return;
            }
            let (mut cost, mut di) = (0.0, 0.0);
            for (lvl, slot) in levels.iter().zip(current.iter()) {
                if let Some(s) = slot {
                    let (_, e, i) = active[*s];
                    cost += ((lvl.epsilon - e).powi(2) + (lvl.intensity - i).powi(2)).sqrt();
                    di += (lvl.intensity - i).abs();
                }
            }
            let better = match best {
                None => true,
                Some((bc, bd, _)) => cost < *bc || (cost == *bc && di < *bd),
            };
            if better {
                *best = Some((cost, di, current.clone()));
            }
            return;
        }
        // Leave level k unmatched only if enough levels remain to fill `pairs`.
        if levels.len() - k > pairs - matched {
            current[k] = None;
            search(k + 1, matched, pairs, active, levels, current, used, best);
        }
        if matched < pairs {
            for s in 0..active.len() {
                if !used[s] {
                    used[s] = true;
                    current[k] = Some(s);
                    search(k + 1, matched + 1, pairs, active, levels, current, used, best);
                    used[s] = false;
                    current[k] = None;
                }
            }
        }
    }

    search(0, 0, pairs, active, levels, &mut current, &mut used, &mut best);
    best.map(|b| b.2).unwrap_or_else(|| vec![None; n])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn quartic_coefficient_examples() {
        let q = quartic_coefficients(1.0, 0.0, 0.0);
        assert_eq!((q.d, q.e, q.f), (-1.0, 0.0, 0.0));
        let q = quartic_coefficients(1.0, -2.0, 0.5);
        assert_abs_diff_eq!(q.d, -0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(q.e, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(q.f, -0.25, epsilon = 1e-15);
        let q = quartic_coefficients(1.0, -3.0, 0.0);
        assert_abs_diff_eq!(q.d, -0.25, epsilon = 1e-15);
        assert_eq!(q.e, 0.0);
        assert_eq!(q.f, 0.0);
    }

    #[test]
    fn solve_quartic_examples() {
        let r = solve_quartic(&QuarticCoefficients {
            d: -1.0,
            e: 0.0,
            f: 0.0,
        });
        let re: Vec<f64> = r.iter().map(|z| z.re).collect();
        assert!(r.iter().all(|z| z.im == 0.0));
        for (a, b) in re.iter().zip([-1.0, 0.0, 0.0, 1.0]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }

        // Biquadratic: ε² = (0.25 ± √1.0625)/2.
        let r = solve_quartic(&QuarticCoefficients {
            d: -0.25,
            e: 0.0,
            f: -0.25,
        });
        let real: Vec<f64> = r.iter().filter(|z| z.im == 0.0).map(|z| z.re).collect();
        let expected = ((0.25 + 1.0625f64.sqrt()) / 2.0).sqrt();
        assert_eq!(real.len(), 2);
        assert_abs_diff_eq!(real[0], -expected, epsilon = 1e-12);
        assert_abs_diff_eq!(real[1], expected, epsilon = 1e-12);
        assert_abs_diff_eq!(expected, 0.80024, epsilon = 1e-5);
        let imag = ((1.0625f64.sqrt() - 0.25) / 2.0).sqrt();
        assert!(r
            .iter()
            .filter(|z| z.im != 0.0)
            .all(|z| (z.im.abs() - imag).abs() < 1e-12));

        let r = solve_quartic(&QuarticCoefficients {
            d: -0.25,
            e: 0.0,
            f: 0.0,
        });
        for (z, b) in r.iter().zip([-0.5, 0.0, 0.0, 0.5]) {
            assert_eq!(z.im, 0.0);
            assert_abs_diff_eq!(z.re, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn linear_limit_levels() {
        let l = adiabatic_levels(1.0, 0.0, 0.0).unwrap();
        assert_eq!(l.len(), 2);
        assert_abs_diff_eq!(l[0].epsilon, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(l[1].epsilon, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(l[0].intensity, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(l[1].intensity, 0.5, epsilon = 1e-12);

        let l = adiabatic_levels(1.0, 0.0, 1.5).unwrap();
        let e = 3.25f64.sqrt();
        assert_eq!(l.len(), 2);
        assert_abs_diff_eq!(l[0].epsilon, -e, epsilon = 1e-12);
        assert_abs_diff_eq!(l[1].epsilon, e, epsilon = 1e-12);
        for lvl in &l {
            assert_abs_diff_eq!(
                lvl.intensity,
                (lvl.epsilon + 1.5) / (2.0 * lvl.epsilon),
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn knot_point_levels() {
        let l = adiabatic_levels(1.0, -3.0, 0.0).unwrap();
        let eps: Vec<f64> = l.iter().map(|x| x.epsilon).collect();
        assert_eq!(eps.len(), 3, "{eps:?}");
        assert_abs_diff_eq!(eps[0], -0.5, epsilon = 1e-12);
        assert_eq!(eps[1], 0.0);
        assert_abs_diff_eq!(eps[2], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(l[1].intensity, 1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn knot_exists_below_minus_alpha() {
        for beta in [-1.2, -1.5, -2.5, -4.0, -10.0] {
            let l = adiabatic_levels(1.0, beta, 0.0).unwrap();
            let knot = l.iter().find(|x| x.epsilon == 0.0).expect("knot");
            assert_abs_diff_eq!(knot.intensity, -1.0 / beta, epsilon = 1e-15);
        }
        let l = adiabatic_levels(1.0, -0.5, 0.0).unwrap();
        assert!(l.iter().all(|x| x.epsilon != 0.0));
    }

    #[test]
    fn levels_are_eigenstates() {
        for &(beta, gamma) in &[
            (0.0, 0.3),
            (2.0, -0.7),
            (-0.98, 0.15),
            (-1.5, 0.01),
            (-3.0, 0.02),
            (-3.0, 0.5),
        ] {
            for l in adiabatic_levels(1.0, beta, gamma).unwrap() {
                assert!(l.residual <= LEVEL_RESIDUAL_TOL);
                let r = l.eigen_residual(1.0, beta, gamma);
                assert!(r <= 1e-9, "beta={beta} gamma={gamma} eps={} r={r}", l.epsilon);
            }
        }
    }

    #[test]
    fn four_level_window_counts() {
        assert_eq!(level_count(1.0, -3.0, 0.02), 4);
        assert_eq!(level_count(1.0, -3.0, 0.1), 2);
        assert_eq!(level_count(1.0, 0.0, 1.0), 2);
    }

    /// Leading-order expansion of the quartic around (γ, ε) = (0, 0) with
    /// ε = kγ gives ((2α+β)k + β)² = 0, i.e. k = −β/(2α+β).
    fn knot_slope_oracle(alpha: f64, beta: f64) -> f64 {
        -beta / (2.0 * alpha + beta)
    }

    #[test]
    fn knot_slope_examples() {
        let s = knot_slope(1.0, -1.01).unwrap();
        assert!(s > 1.0 && s < 1.1, "{s}");
        let s = knot_slope(1.0, -10.0).unwrap();
        assert!(s < -1.0 && s > -1.5, "{s}");
        let s = knot_slope(1.0, -1.95).unwrap();
        assert!(s > 30.0, "{s}");
        for beta in [-1.01, -1.2, -1.5, -1.95, -2.5, -3.0, -10.0] {
            let s = knot_slope(1.0, beta).unwrap();
            let k = knot_slope_oracle(1.0, beta);
            assert!((s - k).abs() <= 2e-3 * k.abs(), "beta={beta}: {s} vs {k}");
        }
        assert!(matches!(knot_slope(1.0, -1.0), Err(SpectrumError::NoKnot { .. })));
        assert!(matches!(knot_slope(1.0, 0.5), Err(SpectrumError::NoKnot { .. })));
    }

    #[test]
    fn classification_examples() {
        assert_eq!(classify_structure(1.0, 0.0), StructureType::TypeI);
        assert_eq!(classify_structure(1.0, -0.9), StructureType::TypeI);
        assert_eq!(classify_structure(1.0, 3.0), StructureType::TypeI);
        assert_eq!(classify_structure(1.0, -0.98), StructureType::TypeII);
        assert_eq!(classify_structure(1.0, -1.5), StructureType::TypeIII);
        assert_eq!(classify_structure(1.0, -3.0), StructureType::TypeIV);
        assert_eq!(classify_structure(1.0, -2.0), StructureType::Indeterminate);
        assert_eq!(classify_structure(1.0, -1.0), StructureType::Indeterminate);
    }

    #[test]
    fn swallowtail_window_location() {
        let w = four_level_windows(1.0, -0.99);
        assert_eq!(w.len(), 1, "{w:?}");
        assert!((w[0].0 - 0.097934).abs() < 1e-5, "{w:?}");
        assert!((w[0].1 - 0.156761).abs() < 1e-5, "{w:?}");
        assert!(four_level_windows(1.0, -0.9).is_empty());
    }

    #[test]
    fn level_curves_linear_symmetric() {
        let c = level_curves(1.0, 0.0, &[-2.0, 0.0, 2.0]).unwrap();
        assert_eq!(c.branch_count, 2);
        for g in [-2.0f64, 0.0, 2.0] {
            let mut e: Vec<f64> = c.at(g).map(|p| p.epsilon).collect();
            e.sort_by(f64::total_cmp);
            let want = (g * g + 1.0).sqrt();
            assert_abs_diff_eq!(e[0], -want, epsilon = 1e-12);
            assert_abs_diff_eq!(e[1], want, epsilon = 1e-12);
        }
        // Lower branch stays lower.
        let lower: Vec<f64> = c.branch(0).map(|p| p.epsilon).collect();
        assert!(lower.iter().all(|e| *e < 0.0));
    }

    #[test]
    fn positive_beta_widens_gap_and_breaks_symmetry() {
        let grid: Vec<f64> = (0..=400).map(|k| -2.0 + 0.01 * k as f64).collect();
        let c = level_curves(1.0, 3.0, &grid).unwrap();
        let mut min_gap = f64::INFINITY;
        let mut asym: f64 = 0.0;
        for &g in &grid {
            let e: Vec<f64> = c.at(g).map(|p| p.epsilon).collect();
            assert_eq!(e.len(), 2);
            min_gap = min_gap.min(e[1] - e[0]);
            let mirror: Vec<f64> = c.at(-g).map(|p| p.epsilon).collect();
            if let (Some(a), Some(b)) = (e.first(), mirror.first()) {
                asym = asym.max((a - b).abs());
            }
        }
        assert!(min_gap > 2.0, "{min_gap}");
        assert!(asym > 1e-3, "{asym}");
    }

    #[test]
    fn four_level_window_confined_for_type_three() {
        let w = four_level_windows(1.0, -1.5);
        assert_eq!(w.len(), 1);
        assert_eq!(w[0].0, 0.0);
        assert!(w[0].1 < 0.25);
    }

    #[test]
    fn unsorted_grid_rejected() {
        assert_eq!(level_curves(1.0, 0.0, &[1.0, 0.0]), Err(SpectrumError::UnsortedGrid));
    }

    proptest! {
        #[test]
        fn linear_limit_matches_closed_form(gamma in -20.0f64..20.0) {
            let l = adiabatic_levels(1.0, 0.0, gamma).unwrap();
            prop_assert_eq!(l.len(), 2);
            let want = (gamma * gamma + 1.0).sqrt();
            prop_assert!((l[0].epsilon + want).abs() <= 1e-12 * want.max(1.0));
            prop_assert!((l[1].epsilon - want).abs() <= 1e-12 * want.max(1.0));
        }

        #[test]
        fn validated_levels_satisfy_eigenproblem(beta in -6.0f64..4.0, gamma in -2.0f64..2.0) {
            let levels = adiabatic_levels(1.0, beta, gamma).unwrap();
            prop_assert!((2..=4).contains(&levels.len()));
            for l in levels {
                prop_assert!(l.residual <= LEVEL_RESIDUAL_TOL);
                prop_assert!((0.0..=1.0).contains(&l.intensity));
                prop_assert!(l.eigen_residual(1.0, beta, gamma) <= 1e-9);
            }
        }
    }
}
