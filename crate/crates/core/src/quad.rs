//! Adaptive Gauss-Kronrod quadrature plus helpers for oscillatory cosine
//! integrals on the half line.
//!
//! The 7-15 rule never evaluates at interval endpoints, so integrable
//! endpoint singularities (power or logarithmic) are handled by plain
//! bisection refinement.

use crate::error::Error;

/// Result of a quadrature run: the value together with a (conservative)
/// absolute error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub abs_error: f64,
}

// 15-point Kronrod abscissae on [0,1] (positive half) and the matching
// 7-point Gauss weights. Standard QUADPACK constants.
const XGK: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];
const WG: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

/// One 7-15 Gauss-Kronrod panel. Returns (kronrod value, error estimate).
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);

    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut res_abs = kronrod.abs();

    let mut fv = [0.0f64; 15];
    fv[7] = fc;
    for j in 0..7 {
        let x = half * XGK[j];
        let f1 = f(center - x);
        let f2 = f(center + x);
        fv[j] = f1;
        fv[14 - j] = f2;
        let sum = f1 + f2;
        kronrod += WGK[j] * sum;
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * sum;
        }
    }

    let mean = kronrod * 0.5;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv[j] - mean).abs() + (fv[14 - j] - mean).abs());
    }

    let raw_err = ((kronrod - gauss) * half).abs();
    res_asc *= half.abs();
    res_abs *= half.abs();

    // QUADPACK-style error rescaling.
    let mut err = raw_err;
    if res_asc != 0.0 && err != 0.0 {
        let scale = (200.0 * err / res_asc).powf(1.5);
        err = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }

    (kronrod * half, err)
}

/// Adaptive integration of `f` over the finite interval `[a, b]` to absolute
/// tolerance `tol_abs`. Splits the worst panel first.
pub fn adaptive<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    tol_abs: f64,
    max_panels: usize,
) -> Result<Quadrature, Error> {
    if a == b {
        return Ok(Quadrature { value: 0.0, abs_error: 0.0 });
    }
    let (v, e) = gk15(&f, a, b);
    // (value, err, lo, hi)
    let mut panels: Vec<(f64, f64, f64, f64)> = vec![(v, e, a, b)];
    loop {
        let total_err: f64 = panels.iter().map(|p| p.1).sum();
        if total_err <= tol_abs {
            let value = panels.iter().map(|p| p.0).sum();
            return Ok(Quadrature { value, abs_error: total_err });
        }
        if panels.len() >= max_panels {
            return Err(Error::QuadratureNonConvergence {
                context: "adaptive panel budget exhausted",
                abs_error: total_err,
                tol: tol_abs,
            });
        }
        // split worst panel
        let (idx, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .1.total_cmp(&y.1 .1))
            .expect("non-empty panel list");
        let (_, _, lo, hi) = panels.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // interval no longer splittable in f64; accept what we have
            let value: f64 = panels.iter().map(|p| p.0).sum::<f64>();
            let err: f64 = panels.iter().map(|p| p.1).sum::<f64>();
            let (v0, e0) = gk15(&f, lo, hi);
            return Ok(Quadrature { value: value + v0, abs_error: err + e0 });
        }
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        panels.push((v1, e1, lo, mid));
        panels.push((v2, e2, mid, hi));
    }
}

/// Adaptive integration to *relative* tolerance: terminates when the summed
/// panel error drops below `tol_rel` times the current value magnitude.
/// Suited to integrands of unknown scale (used by the perimeter oracle).
pub fn adaptive_rel<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    tol_rel: f64,
    max_panels: usize,
) -> Result<Quadrature, Error> {
    if a == b {
        return Ok(Quadrature { value: 0.0, abs_error: 0.0 });
    }
    let (v, e) = gk15(&f, a, b);
    let mut panels: Vec<(f64, f64, f64, f64)> = vec![(v, e, a, b)];
    loop {
        let total: f64 = panels.iter().map(|p| p.0).sum();
        let total_err: f64 = panels.iter().map(|p| p.1).sum();
        if total_err <= tol_rel * total.abs().max(1e-300) {
            return Ok(Quadrature { value: total, abs_error: total_err });
        }
        if panels.len() >= max_panels {
            return Err(Error::QuadratureNonConvergence {
                context: "relative adaptive panel budget exhausted",
                abs_error: total_err,
                tol: tol_rel * total.abs(),
            });
        }
        let (idx, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .1.total_cmp(&y.1 .1))
            .expect("non-empty panel list");
        let (_, _, lo, hi) = panels.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            let back = gk15(&f, lo, hi);
            panels.push((back.0, back.1, lo, hi));
            let value: f64 = panels.iter().map(|p| p.0).sum();
            let err: f64 = panels.iter().map(|p| p.1).sum();
            return Ok(Quadrature { value, abs_error: err });
        }
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        panels.push((v1, e1, lo, mid));
        panels.push((v2, e2, mid, hi));
    }
}

/// Iterated averaging (Euler transform) of the tail of a sequence of partial
/// sums of an alternating series. Returns the accelerated limit and an error
/// estimate taken from the stability of the last averaging level.
fn euler_accelerate(partials: &[f64]) -> (f64, f64) {
    debug_assert!(partials.len() >= 2);
    let mut row: Vec<f64> = partials.to_vec();
    let mut prev_last = *row.last().unwrap();
    let mut best = prev_last;
    let mut best_err = f64::INFINITY;
    while row.len() >= 2 {
        for i in 0..row.len() - 1 {
            row[i] = 0.5 * (row[i] + row[i + 1]);
        }
        row.pop();
        let last = *row.last().unwrap();
        let err = (last - prev_last).abs();
        if err < best_err {
            best_err = err;
            best = last;
        }
        prev_last = last;
    }
    (best, best_err)
}

/// Integrate one segment to `seg_tol` by bisection, never failing: returns
/// the value with whatever error remains after at most `max_panels` panels.
fn segment_refined<F: Fn(f64) -> f64>(
    f: &F,
    lo: f64,
    hi: f64,
    seg_tol: f64,
    max_panels: usize,
) -> (f64, f64) {
    let (v, e) = gk15(f, lo, hi);
    if e <= seg_tol {
        return (v, e);
    }
    let mut panels = vec![(v, e, lo, hi)];
    while panels.iter().map(|p| p.1).sum::<f64>() > seg_tol && panels.len() < max_panels {
        let (idx, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .1.total_cmp(&y.1 .1))
            .expect("non-empty");
        let (_, _, a, b) = panels.swap_remove(idx);
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            let back = gk15(f, a, b);
            panels.push((back.0, back.1, a, b));
            break;
        }
        let (v1, e1) = gk15(f, a, mid);
        let (v2, e2) = gk15(f, mid, b);
        panels.push((v1, e1, a, mid));
        panels.push((v2, e2, mid, b));
    }
    (
        panels.iter().map(|p| p.0).sum(),
        panels.iter().map(|p| p.1).sum(),
    )
}

/// Integrate `g(u) * cos(omega * u)` over `[0, inf)` where `g` is smooth,
/// nonnegative and eventually decreasing (here: `exp(-u^alpha)` shapes).
///
/// Strategy: while the phase is slow, plain adaptive panels; once oscillation
/// dominates, integrate half-period segments between consecutive zeros of the
/// cosine and Euler-accelerate the alternating partial sums.
pub fn cosine_half_line<G: Fn(f64) -> f64>(
    g: G,
    omega: f64,
    g_tail_bound: impl Fn(f64) -> f64,
    tol_abs: f64,
    max_panels: usize,
    max_segments: usize,
) -> Result<Quadrature, Error> {
    let omega = omega.abs();
    let f = |u: f64| g(u) * (omega * u).cos();

    // Truncation point where the *monotone* tail bound alone is below
    // tolerance. Grows fast for small alpha; only used to size the work, the
    // oscillatory branch relies on alternation beyond the segment budget.
    let mut upper = 1.0f64;
    while g_tail_bound(upper) > 0.1 * tol_abs && upper < 1e9 {
        upper *= 2.0;
    }

    if omega * upper <= 40.0 {
        // at most a few oscillations over the whole mass: direct adaptive
        let q = adaptive(f, 0.0, upper, 0.5 * tol_abs, max_panels)?;
        return Ok(Quadrature {
            value: q.value,
            abs_error: q.abs_error + g_tail_bound(upper),
        });
    }

    // Oscillatory branch. Zeros of cos(omega u) at u_k = (pi/2 + k pi)/omega.
    let half_period = core::f64::consts::PI / omega;
    let first_zero = 0.5 * half_period;
    let expected_segments = ((omega * upper / core::f64::consts::PI).ceil() as usize)
        .clamp(1, max_segments);
    let seg_tol = 0.25 * tol_abs / expected_segments as f64;

    // Head [0, first zero]: adaptive (g may have a sharp derivative at 0).
    let head = adaptive(&f, 0.0, first_zero, 0.1 * tol_abs, max_panels)?;
    let mut total = head.value;
    let mut err = head.abs_error;

    let mut partials: Vec<f64> = Vec::with_capacity(64);
    let mut lo = first_zero;
    let mut segments = 0usize;
    loop {
        let hi = lo + half_period;
        let (sv, se) = segment_refined(&f, lo, hi, seg_tol, 64);
        total += sv;
        err += se;
        partials.push(total);
        segments += 1;
        lo = hi;

        if sv.abs() < 0.1 * tol_abs {
            // alternating series: remainder bounded by the next segment
            return Ok(Quadrature {
                value: total,
                abs_error: err + sv.abs(),
            });
        }
        if segments >= max_segments {
            // accelerate the alternating partial sums
            let window = partials.len().min(24);
            let tail = &partials[partials.len() - window..];
            let (acc, acc_err) = euler_accelerate(tail);
            let q = Quadrature {
                value: acc,
                abs_error: err + acc_err,
            };
            if q.abs_error > tol_abs.max(1e-300) * 10.0 {
                return Err(Error::QuadratureNonConvergence {
                    context: "oscillatory segment budget exhausted",
                    abs_error: q.abs_error,
                    tol: tol_abs,
                });
            }
            return Ok(q);
        }
    }
}

/// Integrate `f` over `[0, inf)` through the substitution `u = tan(theta)`.
pub fn half_line_tan<F: Fn(f64) -> f64>(
    f: F,
    tol_abs: f64,
    max_panels: usize,
) -> Result<Quadrature, Error> {
    let g = |theta: f64| {
        let c = theta.cos();
        let u = theta.tan();
        let v = f(u);
        if v == 0.0 {
            0.0
        } else {
            v / (c * c)
        }
    };
    adaptive(g, 0.0, core::f64::consts::FRAC_PI_2, tol_abs, max_panels)
}

/// Integrate `f` over `[a, b]` where `f` has an integrable power/log
/// singularity at `a`: substitutes `x = a + (b-a) s^grade`, which makes the
/// integrand bounded when `grade * (1 - singularity exponent) >= 1`.
pub fn graded_left<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    grade: i32,
    tol_abs: f64,
    max_panels: usize,
) -> Result<Quadrature, Error> {
    debug_assert!(grade >= 1);
    let w = b - a;
    let g = |s: f64| {
        let sp = s.powi(grade - 1);
        let x = a + w * (sp * s);
        f(x) * w * grade as f64 * sp
    };
    adaptive(g, 0.0, 1.0, tol_abs, max_panels)
}
