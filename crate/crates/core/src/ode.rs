//! Dormand-Prince 5(4) with PI step-size control for small fixed-size
//! systems.
//!
//! Output times are hit exactly by shortening the step that would cross
//! them; the controller's proposal is restored afterwards so sampling does
//! not shrink the step sequence.
//!
//! [`integrate_su2`] applies the same tableau in the Lie algebra su(2)
//! (Munthe-Kaas form) for `i dψ/dt = (u·σ) ψ`, so every step is an exact
//! rotation of the two-component state and `|ψ|²` changes only by roundoff.

/// Butcher tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

/// Fifth-order weights minus embedded fourth-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub max_steps: usize,
    /// Safety factor.
    pub safe: f64,
    /// Bounds on `h_new / h`.
    pub min_factor: f64,
    pub max_factor: f64,
    /// PI stabilization exponent (Gustafsson); 0 gives the I controller.
    pub beta: f64,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step: f64::INFINITY,
            max_steps: 500_000_000,
            safe: 0.9,
            min_factor: 0.2,
            max_factor: 10.0,
            beta: 0.04,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OdeFailure {
    StepUnderflow,
    TooManySteps,
    NonFinite,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

/// Integrates `y' = f(t, y)` from `t0` to the last entry of `outputs`,
/// invoking `observe(t, y)` at every output time (ascending, all `> t0`)
/// and `on_step(t, y)` after every accepted step. `on_step` returning
/// `false` aborts with [`OdeFailure::NonFinite`].
pub fn integrate<const N: usize, F, O, S>(
    mut f: F,
    t0: f64,
    y0: [f64; N],
    outputs: &[f64],
    control: &StepControl,
    mut observe: O,
    mut on_step: S,
) -> Result<OdeStats, OdeFailure>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
    O: FnMut(f64, &[f64; N]),
    S: FnMut(f64, &[f64; N]) -> bool,
{
    let mut stats = OdeStats::default();
    let Some(&t_end) = outputs.last() else {
        return Ok(stats);
    };
    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    stats.evaluations += 1;
    let mut h = initial_step(&mut f, t, &y, &k1, control, t_end - t0);
    stats.evaluations += 1;

    let expo = 0.2 - control.beta * 0.75;
    let mut err_old: f64 = 1e-4;
    let mut next_out = 0usize;
    while next_out < outputs.len() && outputs[next_out] <= t {
        observe(outputs[next_out], &y);
        next_out += 1;
    }

    while next_out < outputs.len() {
        if stats.accepted + stats.rejected >= control.max_steps {
            return Err(OdeFailure::TooManySteps);
        }
        let target = outputs[next_out];
        let mut proposal = h.min(control.max_step);
        let clipped = t + proposal >= target;
        if clipped {
            proposal = target - t;
        }
        if proposal <= f64::EPSILON * t.abs().max(1.0) * 0.5 && !clipped {
            return Err(OdeFailure::StepUnderflow);
        }
        let hs = proposal;

        let mut ytmp = [0.0; N];
        for i in 0..N {
            ytmp[i] = y[i] + hs * A21 * k1[i];
        }
        let k2 = f(t + C2 * hs, &ytmp);
        for i in 0..N {
            ytmp[i] = y[i] + hs * (A31 * k1[i] + A32 * k2[i]);
        }
        let k3 = f(t + C3 * hs, &ytmp);
        for i in 0..N {
            ytmp[i] = y[i] + hs * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        let k4 = f(t + C4 * hs, &ytmp);
        for i in 0..N {
            ytmp[i] = y[i] + hs * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        let k5 = f(t + C5 * hs, &ytmp);
        for i in 0..N {
            ytmp[i] = y[i] + hs * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        let t_new = if clipped { target } else { t + hs };
        let k6 = f(t_new, &ytmp);
        let mut y_new = [0.0; N];
        for i in 0..N {
            y_new[i] = y[i] + hs * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        let k7 = f(t_new, &y_new);
        stats.evaluations += 6;

        let mut err = 0.0;
        for i in 0..N {
            let e = hs * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = control.abs_tol + control.rel_tol * y[i].abs().max(y_new[i].abs());
            err += (e / sc).powi(2);
        }
        let err = (err / N as f64).sqrt();
        if !err.is_finite() {
            return Err(OdeFailure::NonFinite);
        }

        // PI controller: factor = err^expo / err_old^beta, bounded.
        let fac11 = err.powf(expo);
        if err <= 1.0 {
            let mut fac = fac11 / err_old.powf(control.beta);
            fac = (fac / control.safe).clamp(1.0 / control.max_factor, 1.0 / control.min_factor);
            let h_next = hs / fac;
            err_old = err.max(1e-4);
            t = t_new;
            y = y_new;
            k1 = k7;
            stats.accepted += 1;
            if !on_step(t, &y) {
                return Err(OdeFailure::NonFinite);
            }
            // Do not let a clipped step shrink the controller's step.
            h = if clipped { h_next.max(h) } else { h_next };
            while next_out < outputs.len() && outputs[next_out] <= t {
                observe(outputs[next_out], &y);
                next_out += 1;
            }
        } else {
            let fac = (fac11 / control.safe).min(1.0 / control.min_factor);
            h = hs / fac;
            stats.rejected += 1;
        }
        if h <= f64::EPSILON * t.abs().max(1.0) {
            return Err(OdeFailure::StepUnderflow);
        }
    }
    Ok(stats)
}

/// Largest rotation angle `|Ω|` attempted in one su(2) step; `dexp⁻¹` is
/// singular at `|Ω| = π`.
const MAX_ROTATION: f64 = 1.0;

/// Integrates `i dψ/dt = H ψ` with `H = u(t, ψ)·σ` (Pauli vector σ) for
/// `ψ = [Re a, Im a, Re b, Im b]`, using Dormand-Prince stages on the
/// algebra: `ψ(t0 + h) = exp(−i Ω·σ) ψ(t0)` with `Ω` integrated from
/// `Ω' = dexp⁻¹_Ω(u)`. Callbacks behave as in [`integrate`].
pub fn integrate_su2<F, O, S>(
    mut field: F,
    t0: f64,
    psi0: [f64; 4],
    outputs: &[f64],
    control: &StepControl,
    mut observe: O,
    mut on_step: S,
) -> Result<OdeStats, OdeFailure>
where
    F: FnMut(f64, &[f64; 4]) -> [f64; 3],
    O: FnMut(f64, &[f64; 4]),
    S: FnMut(f64, &[f64; 4]) -> bool,
{
    let mut stats = OdeStats::default();
    let Some(&t_end) = outputs.last() else {
        return Ok(stats);
    };
    let mut t = t0;
    let mut y = psi0;
    let mut u1 = field(t, &y);
    stats.evaluations += 1;
    let mut h = (0.1 / norm3(&u1).max(1e-300))
        .min(control.max_step)
        .min((t_end - t0).abs());

    let expo = 0.2 - control.beta * 0.75;
    let mut err_old: f64 = 1e-4;
    let mut next_out = 0usize;
    while next_out < outputs.len() && outputs[next_out] <= t {
        observe(outputs[next_out], &y);
        next_out += 1;
    }

    while next_out < outputs.len() {
        if stats.accepted + stats.rejected >= control.max_steps {
            return Err(OdeFailure::TooManySteps);
        }
        let target = outputs[next_out];
        let cap = MAX_ROTATION / norm3(&u1).max(1e-300);
        let mut proposal = h.min(control.max_step).min(cap);
        let clipped = t + proposal >= target;
        if clipped {
            proposal = target - t;
        }
        if proposal <= f64::EPSILON * t.abs().max(1.0) * 0.5 && !clipped {
            return Err(OdeFailure::StepUnderflow);
        }
        let hs = proposal;

        let mut stage = |c: f64, w: [f64; 3]| -> Result<[f64; 3], OdeFailure> {
            if norm3(&w) >= 0.9 * std::f64::consts::PI {
                return Err(OdeFailure::StepUnderflow);
            }
            let ys = rotate(&w, &y);
            Ok(dexp_inv(&w, &field(t + c * hs, &ys)))
        };
        let comb = |terms: &[(f64, &[f64; 3])]| {
            let mut w = [0.0; 3];
            for (a, k) in terms {
                for i in 0..3 {
                    w[i] += hs * a * k[i];
                }
            }
            w
        };
        let result = (|| {
            let k1 = u1;
            let k2 = stage(C2, comb(&[(A21, &k1)]))?;
            let k3 = stage(C3, comb(&[(A31, &k1), (A32, &k2)]))?;
            let k4 = stage(C4, comb(&[(A41, &k1), (A42, &k2), (A43, &k3)]))?;
            let k5 = stage(C5, comb(&[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]))?;
            let k6 = stage(1.0, comb(&[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]))?;
            let w5 = comb(&[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
            Ok::<_, OdeFailure>((k1, k3, k4, k5, k6, w5))
        })();
        stats.evaluations += 5;
        let (k1, k3, k4, k5, k6, w5) = match result {
            Ok(v) => v,
            Err(_) => {
                h = hs * 0.5;
                stats.rejected += 1;
                continue;
            }
        };
        let t_new = if clipped { target } else { t + hs };
        let y_new = rotate(&w5, &y);
        let u_new = field(t_new, &y_new);
        let k7 = dexp_inv(&w5, &u_new);
        stats.evaluations += 1;
        let dw = comb(&[(E1, &k1), (E3, &k3), (E4, &k4), (E5, &k5), (E6, &k6), (E7, &k7)]);
        // ‖(exp(−iΩ₅·σ) − exp(−iΩ₄·σ))ψ‖ ≈ |ΔΩ| for unit ψ; spread over
        // the four real components to match the RMS norm of `integrate`.
        let sc = control.abs_tol + control.rel_tol;
        let err = norm3(&dw) / (2.0 * sc);
        if !err.is_finite() || y_new.iter().any(|x| !x.is_finite()) {
            return Err(OdeFailure::NonFinite);
        }

        let fac11 = err.powf(expo);
        if err <= 1.0 {
            let mut fac = fac11 / err_old.powf(control.beta);
            fac = (fac / control.safe).clamp(1.0 / control.max_factor, 1.0 / control.min_factor);
            let h_next = hs / fac;
            err_old = err.max(1e-4);
            t = t_new;
            y = y_new;
            u1 = u_new;
            stats.accepted += 1;
            if !on_step(t, &y) {
                return Err(OdeFailure::NonFinite);
            }
            h = if clipped { h_next.max(h) } else { h_next };
            while next_out < outputs.len() && outputs[next_out] <= t {
                observe(outputs[next_out], &y);
                next_out += 1;
            }
        } else {
            let fac = (fac11 / control.safe).min(1.0 / control.min_factor);
            h = hs / fac;
            stats.rejected += 1;
        }
        if h <= f64::EPSILON * t.abs().max(1.0) {
            return Err(OdeFailure::StepUnderflow);
        }
    }
    Ok(stats)
}

#[inline]
fn norm3(w: &[f64; 3]) -> f64 {
    (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt()
}

#[inline]
fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// `exp(−i w·σ) ψ = cos|w| ψ − i sin|w| (ŵ·σ) ψ`.
#[inline]
fn rotate(w: &[f64; 3], y: &[f64; 4]) -> [f64; 4] {
    let n = norm3(w);
    if n == 0.0 {
        return *y;
    }
    let (sn, cs) = n.sin_cos();
    let s = sn / n;
    let (x, yy, z) = (w[0] * s, w[1] * s, w[2] * s);
    // (w·σ)ψ with a = y0 + i y1, b = y2 + i y3:
    // first = z a + (x − i yy) b, second = (x + i yy) a − z b
    let p_re = z * y[0] + x * y[2] + yy * y[3];
    let p_im = z * y[1] + x * y[3] - yy * y[2];
    let q_re = x * y[0] - yy * y[1] - z * y[2];
    let q_im = x * y[1] + yy * y[0] - z * y[3];
    // ψ cos − i (p, q)
    [cs * y[0] + p_im, cs * y[1] - p_re, cs * y[2] + q_im, cs * y[3] - q_re]
}

/// `dexp⁻¹_w(u) = u − w×u + g(|w|) (|w|² u − (w·u) w)` with
/// `g(x) = (x cot x − 1)/x²`, for algebra elements written as `−i u·σ`.
#[inline]
fn dexp_inv(w: &[f64; 3], u: &[f64; 3]) -> [f64; 3] {
    let n2 = w[0] * w[0] + w[1] * w[1] + w[2] * w[2];
    let g = if n2 < 1e-4 {
        -1.0 / 3.0 - n2 / 45.0 - 2.0 * n2 * n2 / 945.0
    } else {
        let n = n2.sqrt();
        (n / n.tan() - 1.0) / n2
    };
    let wu = w[0] * u[0] + w[1] * u[1] + w[2] * u[2];
    let c = cross(w, u);
    let mut out = [0.0; 3];
    for i in 0..3 {
        out[i] = u[i] - c[i] + g * (n2 * u[i] - wu * w[i]);
    }
    out
}

/// Hairer's starting-step heuristic.
fn initial_step<const N: usize, F>(
    f: &mut F,
    t: f64,
    y: &[f64; N],
    f0: &[f64; N],
    control: &StepControl,
    span: f64,
) -> f64
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let sc = |i: usize| control.abs_tol + control.rel_tol * y[i].abs();
    let mut dnf = 0.0;
    let mut dny = 0.0;
    for i in 0..N {
        dnf += (f0[i] / sc(i)).powi(2);
        dny += (y[i] / sc(i)).powi(2);
    }
    let mut h = if dnf <= 1e-10 || dny <= 1e-10 {
        1e-6
    } else {
        (dny / dnf).sqrt() * 0.01
    };
    h = h.min(control.max_step).min(span.abs());
    let mut y1 = [0.0; N];
    for i in 0..N {
        y1[i] = y[i] + h * f0[i];
    }
    let f1 = f(t + h, &y1);
    let mut der2 = 0.0;
    for i in 0..N {
        der2 += ((f1[i] - f0[i]) / sc(i)).powi(2);
    }
    let der2 = der2.sqrt() / h;
    let der12 = der2.max(dnf.sqrt());
    let h1 = if der12 <= 1e-15 {
        (h * 1e-3).max(1e-6)
    } else {
        (0.01 / der12).powf(0.2)
    };
    (100.0 * h).min(h1).min(control.max_step).min(span.abs())
}
