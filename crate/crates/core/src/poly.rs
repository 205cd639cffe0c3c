//! Roots of low-degree real polynomials: companion-matrix eigenvalues,
//! Newton polishing, and explicit resolution of nearly coincident pairs.
//!
//! Coefficients are stored highest degree first and the polynomial is taken
//! to be monic after normalization, `x^n + c[1] x^{n-1} + ... + c[n]`.

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Imaginary-part threshold (relative to `max(1, |Re|)`) below which a
/// root is reported as real.
pub const REAL_ROOT_TOL: f64 = 1e-9;

/// Two roots closer than this (relative) are re-examined on the real line.
const CLUSTER_TOL: f64 = 1e-6;

const NEWTON_MAX_ITER: usize = 60;

/// Evaluates the polynomial and its derivative by Horner's rule.
pub fn eval_with_derivative(coeffs: &[f64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &c in coeffs {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

pub fn eval(coeffs: &[f64], z: Complex64) -> Complex64 {
    eval_with_derivative(coeffs, z).0
}

/// Value, first and second derivative on the real line.
pub fn eval_real(coeffs: &[f64], x: f64) -> (f64, f64, f64) {
    let mut p = 0.0;
    let mut dp = 0.0;
    let mut ddp = 0.0;
    for &c in coeffs {
        ddp = ddp * x + 2.0 * dp;
        dp = dp * x + p;
        p = p * x + c;
    }
    (p, dp, ddp)
}

/// Scale for residual comparisons: `Σ |c_k| |z|^k`.
pub fn residual_scale(coeffs: &[f64], z: Complex64) -> f64 {
    let r = z.norm();
    coeffs.iter().fold(0.0, |acc, &c| acc * r + c.abs())
}

/// All complex roots, with multiplicity, sorted by (Re, Im).
///
/// Panics if `coeffs` is empty or its leading coefficient is zero.
pub fn roots(coeffs: &[f64]) -> Vec<Complex64> {
    assert!(
        !coeffs.is_empty() && coeffs[0] != 0.0,
        "leading coefficient must be nonzero"
    );
    let lead = coeffs[0];
    let monic: Vec<f64> = coeffs.iter().map(|c| c / lead).collect();
    let n = monic.len() - 1;
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![Complex64::new(-monic[1], 0.0)];
    }

    let mut companion = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        companion[(0, j)] = -monic[j + 1];
    }
    for i in 1..n {
        companion[(i, i - 1)] = 1.0;
    }
    let mut zs: Vec<Complex64> = companion
        .complex_eigenvalues()
        .iter()
        .map(|z| Complex64::new(z.re, z.im))
        .collect();

    for z in zs.iter_mut() {
        *z = polish(&monic, *z);
    }
    resolve_clusters(&monic, &mut zs);
    for z in zs.iter_mut() {
        if z.im.abs() <= REAL_ROOT_TOL * z.re.abs().max(1.0) {
            z.im = 0.0;
        }
    }
    zs.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
    zs
}

/// Real roots (with multiplicity), ascending.
pub fn real_roots(coeffs: &[f64]) -> Vec<f64> {
    roots(coeffs)
        .into_iter()
        .filter(|z| z.im == 0.0)
        .map(|z| z.re)
        .collect()
}

/// Newton iteration that only accepts steps reducing the residual.
fn polish(coeffs: &[f64], mut z: Complex64) -> Complex64 {
    let (mut p, _) = eval_with_derivative(coeffs, z);
    for _ in 0..NEWTON_MAX_ITER {
        let (_, dp) = eval_with_derivative(coeffs, z);
        if dp.norm() == 0.0 || p.norm() == 0.0 {
            break;
        }
        let step = p / dp;
        let candidate = z - step;
        let (pc, _) = eval_with_derivative(coeffs, candidate);
        if !(pc.norm() < p.norm()) {
            break;
        }
        z = candidate;
        p = pc;
        if step.norm() <= 4.0 * f64::EPSILON * z.norm().max(1.0) {
            break;
        }
    }
    z
}

/// Nearly coincident roots close to the real axis are ill-conditioned
/// (error ~ sqrt(eps)); decide real-vs-complex from the sign of the
/// polynomial at the local extremum between them, then bracket.
fn resolve_clusters(coeffs: &[f64], zs: &mut [Complex64]) {
    let n = zs.len();
    let mut done = vec![false; n];
    for i in 0..n {
        if done[i] {
            continue;
        }
        let zi = zs[i];
        let scale = zi.re.abs().max(1.0);
        if zi.im.abs() > CLUSTER_TOL * scale {
            continue;
        }
        // Partner: nearest other near-real root, or the conjugate.
        let partner = (0..n)
            .filter(|&j| j != i && !done[j])
            .filter(|&j| zs[j].im.abs() <= CLUSTER_TOL * scale)
            .filter(|&j| (zs[j].re - zi.re).abs() <= CLUSTER_TOL * scale)
            .min_by(|&a, &b| (zs[a] - zi).norm().total_cmp(&(zs[b] - zi).norm()));
        let Some(j) = partner else { continue };
        let (r1, r2) = resolve_pair(coeffs, 0.5 * (zi.re + zs[j].re), scale);
        zs[i] = r1;
        zs[j] = r2;
        done[i] = true;
        done[j] = true;
    }
}

fn resolve_pair(coeffs: &[f64], x0: f64, scale: f64) -> (Complex64, Complex64) {
    // Critical point of p near x0.
    let mut x = x0;
    for _ in 0..NEWTON_MAX_ITER {
        let (_, dp, ddp) = eval_real(coeffs, x);
        if ddp == 0.0 {
            break;
        }
        let step = dp / ddp;
        if step.abs() > CLUSTER_TOL * scale {
            break;
        }
        x -= step;
        if step.abs() <= 4.0 * f64::EPSILON * scale {
            break;
        }
    }
    let (p, _, ddp) = eval_real(coeffs, x);
    if ddp == 0.0 {
        let z = Complex64::new(x, 0.0);
        return (z, z);
    }
    if p * ddp > 0.0 {
        // Complex pair: p(x + iy) ≈ p(x) − ddp y²/2 vanishes at y = sqrt(2p/ddp).
        let y = (2.0 * p / ddp).sqrt();
        let z = polish(coeffs, Complex64::new(x, y));
        let z = if z.im < 0.0 { z.conj() } else { z };
        if z.im.abs() <= REAL_ROOT_TOL * scale {
            // Too close to tell apart from a double root.
            let r = Complex64::new(x, 0.0);
            return (r, r);
        }
        return (z.conj(), z);
    }
    if p == 0.0 {
        let z = Complex64::new(x, 0.0);
        return (z, z);
    }
    let delta = (2.0 * p.abs() / ddp.abs()).sqrt();
    let left = bracket_root(coeffs, x, -1.0, delta);
    let right = bracket_root(coeffs, x, 1.0, delta);
    (Complex64::new(left, 0.0), Complex64::new(right, 0.0))
}

/// Root on one side of the critical point `x`, found by widening the
/// interval until the sign changes and then bisecting.
fn bracket_root(coeffs: &[f64], x: f64, dir: f64, delta: f64) -> f64 {
    let f = |t: f64| eval_real(coeffs, t).0;
    let fx = f(x);
    let mut width = 2.0 * delta.max(f64::EPSILON * x.abs().max(1.0));
    let mut far = x + dir * width;
    let mut tries = 0;
    while f(far).signum() == fx.signum() && tries < 60 {
        width *= 2.0;
        far = x + dir * width;
        tries += 1;
    }
    let (mut lo, mut hi) = if dir < 0.0 { (far, x) } else { (x, far) };
    let flo_sign = f(lo).signum();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid).signum() == flo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn assert_roots(coeffs: &[f64], expected: &[f64], tol: f64) {
        let r = real_roots(coeffs);
        assert_eq!(r.len(), expected.len(), "roots {r:?}");
        for (a, b) in r.iter().zip(expected) {
            assert!((a - b).abs() <= tol, "{a} vs {b}");
        }
    }

    #[test]
    fn simple_factorizations() {
        // x²(x² − 1)
        assert_roots(&[1.0, 0.0, -1.0, 0.0, 0.0], &[-1.0, 0.0, 0.0, 1.0], 1e-12);
        // (x−1)(x−2)(x−3)
        assert_roots(&[1.0, -6.0, 11.0, -6.0], &[1.0, 2.0, 3.0], 1e-12);
    }

    #[test]
    fn complex_pair_kept() {
        let r = roots(&[1.0, 0.0, 1.0]);
        assert_eq!(r.len(), 2);
        assert!((r[0].im.abs() - 1.0).abs() < 1e-14);
        assert!(real_roots(&[1.0, 0.0, 1.0]).is_empty());
    }

    #[test]
    fn close_real_pair_resolved() {
        // (x − 1)(x − 1 − 1e-7)(x + 2)(x − 5)
        let d = 1e-7;
        let r = [1.0, 1.0 + d, -2.0, 5.0];
        let c = expand(&r);
        let got = real_roots(&c);
        assert_eq!(got.len(), 4, "{got:?}");
        // Coefficient rounding alone limits accuracy to ~eps/|p'| here.
        assert!((got[1] - 1.0).abs() < 1e-8, "{got:?}");
        assert!((got[2] - 1.0 - d).abs() < 1e-8);
        assert!(got[1] < got[2]);
    }

    #[test]
    fn close_complex_pair_resolved() {
        // (x² − 2x + 1 + 1e-12)(x + 3): complex pair 1 ± 1e-6 i
        let q = [1.0, -2.0, 1.0 + 1e-12];
        let c = [q[0], q[1] + 3.0 * q[0], q[2] + 3.0 * q[1], 3.0 * q[2]];
        let r = roots(&c);
        let complex = r.iter().filter(|z| z.im != 0.0).count();
        assert_eq!(complex, 2, "{r:?}");
    }

    fn expand(roots: &[f64]) -> Vec<f64> {
        let mut c = vec![1.0];
        for &r in roots {
            let mut next = vec![0.0; c.len() + 1];
            for (k, &ck) in c.iter().enumerate() {
                next[k] += ck;
                next[k + 1] -= r * ck;
            }
            c = next;
        }
        c
    }

    proptest! {
        #[test]
        fn residual_small_for_random_quartics(d in -5.0f64..5.0, e in -5.0f64..5.0, f in -5.0f64..5.0) {
            let c = [1.0, 0.0, d, e, f];
            let rs = roots(&c);
            prop_assert_eq!(rs.len(), 4);
            for z in rs {
                let res = eval(&c, z).norm();
                prop_assert!(res <= 1e-10 * residual_scale(&c, z).max(1.0), "{} at {}", res, z);
            }
        }

        #[test]
        fn recovers_distinct_real_roots(a in -3.0f64..3.0, b in -3.0f64..3.0, c in -3.0f64..3.0) {
            prop_assume!((a - b).abs() > 1e-2 && (b - c).abs() > 1e-2 && (a - c).abs() > 1e-2);
            let mut want = vec![a, b, c];
            want.sort_by(f64::total_cmp);
            let got = real_roots(&expand(&want));
            prop_assert_eq!(got.len(), 3);
            for (g, w) in got.iter().zip(&want) {
                prop_assert!((g - w).abs() < 1e-9);
            }
        }
    }
}
