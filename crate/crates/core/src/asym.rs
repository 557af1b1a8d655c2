//! Closed-form and semi-closed-form supremum laws and the regime
//! predictions of the small-time heat-content expansion.
//!
//! The Cauchy supremum density follows Darling's representation
//! `f_1(x) = F(1/x) / (pi (1 + x^2))` with
//! `F(z) = exp((1/pi) int_0^inf ln(z + y) dy/(1+y^2))`; the Brownian
//! (alpha = 2) side uses the reflection principle for the variance-2t
//! normalization.

use crate::error::{Error, Result};
use crate::heat::{fractional_perimeter, Interval, Normalizer};
use crate::quad;
use crate::sim::MCEstimate;
use crate::stable::small_time_tail_constant;
use core::f64::consts::{FRAC_PI_2, PI};

/// How a regime's limiting constant is known.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LimitConstant {
    /// Closed form (alpha <= 1 and alpha = 2).
    Exact(f64),
    /// Only the analytic bracket `[E(X_1; X_1>0), 2 E(X_1; X_1>0)] * 2` is
    /// available (1 < alpha < 2 without a Monte Carlo run).
    Bracket { lo: f64, hi: f64 },
    /// Monte Carlo value for `2 E sup X`, with the bracket retained.
    MonteCarlo {
        value: f64,
        std_error: f64,
        lo: f64,
        hi: f64,
    },
}

impl LimitConstant {
    /// Point value used in reports: exact value, MC value, or bracket center.
    pub fn central(&self) -> f64 {
        match *self {
            Self::Exact(v) => v,
            Self::Bracket { lo, hi } => 0.5 * (lo + hi),
            Self::MonteCarlo { value, .. } => value,
        }
    }
}

/// Per-regime normalizer and limiting constant of
/// `(|Omega| - Q(t)) / normalizer(t)`.
#[derive(Debug, Clone, Copy)]
pub struct RegimeLimit {
    pub alpha: f64,
    pub normalizer: Normalizer,
    pub constant: LimitConstant,
}

/// `P(u <= sup_{s<=t} X_s)` for the variance-2t Brownian motion: by
/// reflection this equals `2 P(u <= X_t) = erfc(u / (2 sqrt t))`.
pub fn brownian_sup_tail(u: f64, t: f64) -> Result<f64> {
    if !(u >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "u",
            message: "threshold must be nonnegative",
            value: u,
        });
    }
    if !(t > 0.0) {
        return Err(Error::InvalidParameter {
            name: "t",
            message: "time must be positive",
            value: t,
        });
    }
    Ok(libm::erfc(u / (2.0 * t.sqrt())))
}

/// Evaluator for the Cauchy (alpha = 1) supremum law at unit time.
#[derive(Debug, Clone, Copy)]
pub struct CauchySupremum {
    tol_abs: f64,
    max_panels: usize,
}

impl Default for CauchySupremum {
    fn default() -> Self {
        Self {
            tol_abs: 1e-10,
            max_panels: 8192,
        }
    }
}

impl CauchySupremum {
    pub fn new(tol_abs: f64) -> Self {
        Self {
            tol_abs,
            max_panels: 8192,
        }
    }

    /// `(1/pi) int_0^inf ln(z + y) dy/(1+y^2)`, written as
    /// `(1/pi) int_0^{pi/2} ln(1 + z cot(theta)) d theta` so that the
    /// `int ln tan = 0` part cancels structurally and the z = 0 value is an
    /// exact 0 rather than a cancellation.
    pub fn log_kernel_integral(&self, z: f64) -> Result<f64> {
        if !(z >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "z",
                message: "argument must be nonnegative",
                value: z,
            });
        }
        if z == 0.0 {
            return Ok(0.0);
        }
        let q = quad::adaptive(
            |theta: f64| (1.0 + z / theta.tan()).ln(),
            0.0,
            FRAC_PI_2,
            self.tol_abs,
            self.max_panels,
        )?;
        Ok(q.value / PI)
    }

    /// `F(z) = exp((1/pi) int_0^inf ln(z+y)/(1+y^2) dy)`; `F(0) = 1` exactly
    /// by the implemented identity; strictly increasing in z.
    pub fn big_f(&self, z: f64) -> Result<f64> {
        Ok(self.log_kernel_integral(z)?.exp())
    }

    /// Supremum density `f_1(x) = F(1/x) / (pi (1 + x^2))`, x > 0.
    pub fn density(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            return Err(Error::InvalidParameter {
                name: "x",
                message: "supremum density defined for x > 0",
                value: x,
            });
        }
        Ok(self.big_f(1.0 / x)? / (PI * (1.0 + x * x)))
    }

    /// `P(u <= sup X) = int_u^inf f_1 = (1/pi) int_0^{1/u} F(v)/(1+v^2) dv`
    /// (substituting x = 1/v). At u = 0 this is the total mass.
    pub fn sup_tail(&self, u: f64) -> Result<f64> {
        if !(u >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "u",
                message: "threshold must be nonnegative",
                value: u,
            });
        }
        let integrand = |v: f64| match self.big_f(v) {
            Ok(f) => f / (1.0 + v * v),
            Err(_) => f64::NAN,
        };
        let q = if u == 0.0 {
            quad::half_line_tan(integrand, self.tol_abs, self.max_panels)?
        } else {
            quad::adaptive(integrand, 0.0, 1.0 / u, self.tol_abs, self.max_panels)?
        };
        if !q.value.is_finite() {
            return Err(Error::QuadratureNonConvergence {
                context: "cauchy supremum tail",
                abs_error: f64::INFINITY,
                tol: self.tol_abs,
            });
        }
        Ok((q.value / PI).clamp(0.0, 1.0))
    }

    /// `int_0^M P(u <= sup X) du = E min(sup X, M)`: the evaluation swaps the
    /// order of integration,
    /// `(1/pi) int_0^inf F(v)/(1+v^2) min(M, 1/v) dv`,
    /// and integrates the logarithmically divergent middle range in
    /// log-coordinates.
    pub fn clipped_sup_mean(&self, m: f64) -> Result<f64> {
        if !(m > 0.0) {
            return Err(Error::InvalidParameter {
                name: "m",
                message: "clip level must be positive",
                value: m,
            });
        }
        let f_over = |v: f64| match self.big_f(v) {
            Ok(f) => f / (1.0 + v * v),
            Err(_) => f64::NAN,
        };
        // v <= 1/M: min(M, 1/v) = M
        let head = quad::adaptive(&f_over, 0.0, 1.0 / m, self.tol_abs, self.max_panels)?;
        // 1/M <= v <= 1: log coordinates absorb the 1/v weight
        let mid = quad::adaptive(
            |s: f64| {
                let v = s.exp();
                match self.big_f(v) {
                    Ok(f) => f / (1.0 + v * v),
                    Err(_) => f64::NAN,
                }
            },
            -(m.ln()),
            0.0,
            self.tol_abs,
            self.max_panels,
        )?;
        // v >= 1: compactified far range of F(v)/(v (1+v^2))
        let high = quad::adaptive(
            |theta: f64| {
                let v = theta.tan();
                let c = theta.cos();
                if v < 1.0 {
                    return 0.0;
                }
                match self.big_f(v) {
                    Ok(f) => f / (v * (1.0 + v * v)) / (c * c),
                    Err(_) => f64::NAN,
                }
            },
            FRAC_PI_2 / 2.0,
            FRAC_PI_2,
            self.tol_abs,
            self.max_panels,
        )?;
        let total = (m * head.value + mid.value + high.value) / PI;
        if !total.is_finite() {
            return Err(Error::QuadratureNonConvergence {
                context: "cauchy supremum clipped mean",
                abs_error: f64::INFINITY,
                tol: self.tol_abs,
            });
        }
        Ok(total)
    }
}

/// Deterministic `L(t) = int_0^{|Omega| t^{-1/alpha}} P(u <= sup X) du`
/// for the two indices with closed/semi-closed supremum laws:
/// the Brownian reflection at alpha = 2 and the Cauchy supremum at alpha = 1.
pub fn l_deterministic(alpha: f64, interval: &Interval, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter {
            name: "t",
            message: "time must be positive",
            value: t,
        });
    }
    if alpha == 2.0 {
        let m = interval.length() / t.sqrt();
        // int_0^M erfc(u/2) du = M erfc(M/2) + (2/sqrt pi)(1 - e^{-M^2/4})
        Ok(m * libm::erfc(m / 2.0) + (2.0 / PI.sqrt()) * (1.0 - (-m * m / 4.0).exp()))
    } else if alpha == 1.0 {
        CauchySupremum::default().clipped_sup_mean(interval.length() / t)
    } else {
        Err(Error::InvalidParameter {
            name: "alpha",
            message: "deterministic L available only at alpha in {1, 2}",
            value: alpha,
        })
    }
}

/// Theorem constants for `(|Omega| - Q(t))/normalizer(t)`:
/// `2 E sup X` (exact `4/sqrt(pi)` at alpha = 2, Monte Carlo with an analytic
/// bracket for 1 < alpha < 2), `2/pi` at alpha = 1, and
/// `A_{alpha,1} P_alpha(Omega)` for alpha < 1.
///
/// For 1 < alpha < 2 a supremum-mean estimate must be supplied unless
/// `allow_bracket` accepts the bracket-only limit.
pub fn regime_prediction(
    alpha: f64,
    interval: &Interval,
    sup_mean: Option<&MCEstimate>,
    allow_bracket: bool,
) -> Result<RegimeLimit> {
    let normalizer = Normalizer::for_alpha(alpha)?;
    let constant = if alpha == 2.0 {
        LimitConstant::Exact(4.0 / PI.sqrt())
    } else if alpha > 1.0 {
        // E(X_1; X_1 > 0) = Gamma(1 - 1/alpha)/pi and the sandwich
        // E(X_1; X_1>0) <= E sup X <= 2 E(X_1; X_1>0)
        let half = libm::tgamma(1.0 - 1.0 / alpha) / PI;
        let (lo, hi) = (2.0 * half, 4.0 * half);
        match sup_mean {
            Some(est) => LimitConstant::MonteCarlo {
                value: 2.0 * est.value,
                std_error: 2.0 * est.std_error,
                lo,
                hi,
            },
            None if allow_bracket => LimitConstant::Bracket { lo, hi },
            None => {
                return Err(Error::InvalidConfig {
                    message: format!(
                        "alpha = {alpha} in (1,2) needs a supremum-mean estimate \
                         or explicit bracket acceptance"
                    ),
                })
            }
        }
    } else if alpha == 1.0 {
        LimitConstant::Exact(2.0 / PI)
    } else {
        LimitConstant::Exact(
            small_time_tail_constant(alpha, 1)? * fractional_perimeter(alpha, interval)?,
        )
    };
    Ok(RegimeLimit {
        alpha,
        normalizer,
        constant,
    })
}
