//! Mittag-Leffler functions E_{α,β}(z) for real arguments.
//!
//! E_{α,β}(z) = Σ_k z^k / Γ(αk + β)
//!
//! Evaluation strategy (0 < α ≤ 1):
//! - `z >= 0`: the power series, summed in log space (all terms positive).
//! - `-Z_SWITCH <= z < 0`: the power series with compensated summation.
//! - `z < -Z_SWITCH`, α < 1: the Hankel-contour integral collapsed onto the
//!   negative real axis,
//!
//!   E_{α,β}(z) = (1/π) ∫_0^∞ e^{-ρ} ρ^{α-β} N(ρ) / (ρ^{2α} - 2zρ^α cos(πα) + z²) dρ,
//!   N(ρ) = ρ^α sin(πβ) + z sin(π(α-β)),
//!
//!   valid for β < 1 + α (β > 1 is reduced by the recurrence), evaluated by
//!   double-exponential quadrature split at the near-pole ρ* = |z|^{1/α}.
//! - `z < 0`, α = 1: E_{1,β}(-x) = e^{-x}/Γ(β) · Σ_k (β-1)/(β-1+k) · x^k/k!,
//!   a Poisson-weighted sum with no cancellation.

use crate::error::{Error, Result};
use crate::quad;
use crate::special::{cos_pi, ln_gamma, rgamma, sin_pi};

/// Crossover |z| between the alternating series and the integral
/// representation for negative arguments. Above this the series loses too
/// many digits for small orders.
pub const Z_SWITCH: f64 = 1.0;

/// Largest positive argument accepted.
pub const POSITIVE_LIMIT: f64 = 50.0;

/// Largest second parameter accepted.
pub const MAX_BETA: f64 = 3.0;

// Beyond this the integrand's near-pole lies where e^{-ρ} has underflowed
// relative to the result, so the integral is not split.
const SPLIT_LIMIT: f64 = 60.0;

const QUAD_RTOL: f64 = 1e-10;

/// Parameters of the two-parameter function E_{α,β}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlParams {
    pub alpha: f64,
    pub beta: f64,
}

impl MlParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::arg("alpha", format!("must be finite and > 0, got {alpha}")));
        }
        if !beta.is_finite() {
            return Err(Error::arg("beta", format!("must be finite, got {beta}")));
        }
        Ok(MlParams { alpha, beta })
    }

    pub fn eval(&self, z: f64) -> Result<f64> {
        ml_two(self.alpha, self.beta, z)
    }
}

/// One-parameter function E_q(z) = E_{q,1}(z).
pub fn ml_one(q: f64, z: f64) -> Result<f64> {
    ml_two(q, 1.0, z)
}

/// Two-parameter function E_{q,b}(z) for 0 < q ≤ 1, 0 < b ≤ [`MAX_BETA`].
pub fn ml_two(q: f64, b: f64, z: f64) -> Result<f64> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::arg("q", format!("order must lie in (0, 1], got {q}")));
    }
    if !(b > 0.0 && b <= MAX_BETA) {
        return Err(Error::arg("beta", format!("must lie in (0, {MAX_BETA}], got {b}")));
    }
    if !z.is_finite() {
        return Err(Error::arg("z", format!("must be finite, got {z}")));
    }
    if z > POSITIVE_LIMIT {
        return Err(Error::AccuracyNotGuaranteed {
            alpha: q,
            beta: b,
            z,
            reason: "positive argument above 50",
        });
    }
    let value = if z == 0.0 {
        rgamma(b)
    } else if z > 0.0 {
        positive_series(q, b, z)
    } else if q == 1.0 {
        unit_order_negative(b, -z)
    } else if -z <= Z_SWITCH {
        alternating_series(q, b, z)
    } else {
        hankel(q, b, z)?
    };
    if !value.is_finite() {
        return Err(Error::AccuracyNotGuaranteed {
            alpha: q,
            beta: b,
            z,
            reason: "result not representable",
        });
    }
    Ok(value)
}

/// ∫_0^t (t-s)^{q-1} E_{q,q}(-κ(t-s)^q) ds = (1 - E_q(-κ t^q)) / κ.
///
/// Computed as t^q E_{q,q+1}(-κ t^q), which is the same quantity without
/// the cancellation in 1 - E_q for small κt^q.
pub fn ml_conv_integral(q: f64, kappa: f64, t: f64) -> Result<f64> {
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(Error::arg("kappa", format!("must be finite and > 0, got {kappa}")));
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::arg("t", format!("must be finite and >= 0, got {t}")));
    }
    if t == 0.0 {
        // still validate q
        ml_one(q, 0.0)?;
        return Ok(0.0);
    }
    let tq = t.powf(q);
    let e = ml_two(q, q + 1.0, -kappa * tq)?;
    Ok((tq * e).max(0.0))
}

/// Neumaier-compensated accumulator.
#[derive(Default)]
struct Compensated {
    sum: f64,
    comp: f64,
}

impl Compensated {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

fn alternating_series(q: f64, b: f64, z: f64) -> f64 {
    let mut acc = Compensated::default();
    let mut zk = 1.0;
    let mut small = 0;
    for k in 0..20_000u32 {
        let arg = q * k as f64 + b;
        let term = zk * rgamma(arg);
        acc.add(term);
        // Γ is increasing beyond 1.47, so once past it tiny terms stay tiny
        if arg > 2.0 && term.abs() <= 1e-17 * acc.value().abs() {
            small += 1;
            if small >= 2 {
                break;
            }
        } else {
            small = 0;
        }
        zk *= z;
        if zk == 0.0 {
            break;
        }
    }
    acc.value()
}

fn positive_series(q: f64, b: f64, z: f64) -> f64 {
    let lz = z.ln();
    let mut acc = Compensated::default();
    let mut prev_log = f64::NEG_INFINITY;
    for k in 0..1_000_000u32 {
        let arg = q * k as f64 + b;
        let log_term = k as f64 * lz - ln_gamma(arg);
        if log_term > 709.0 {
            return f64::INFINITY;
        }
        let term = log_term.exp();
        acc.add(term);
        let decreasing = log_term < prev_log;
        if arg > 2.0 && decreasing && term <= 1e-17 * acc.value() {
            break;
        }
        prev_log = log_term;
    }
    acc.value()
}

fn unit_order_negative(b: f64, x: f64) -> f64 {
    if b == 1.0 {
        return (-x).exp();
    }
    if x > 700.0 {
        // e^{-x} is below the result's resolution; the algebraic expansion
        // -Σ z^{-k}/Γ(b-k) converges quickly here
        let z = -x;
        let mut acc = Compensated::default();
        let mut zk = 1.0;
        for k in 1..60 {
            zk /= z;
            let term = -zk * rgamma(b - k as f64);
            acc.add(term);
            if term.abs() <= 1e-17 * acc.value().abs() && k > 2 {
                break;
            }
        }
        return acc.value();
    }
    let bm1 = b - 1.0;
    let lx = x.ln();
    let mut acc = Compensated::default();
    let mut k = 0u32;
    loop {
        let kf = k as f64;
        let log_p = -x + kf * lx - ln_gamma(kf + 1.0);
        let p = log_p.exp();
        let c = if k == 0 { 1.0 } else { bm1 / (bm1 + kf) };
        acc.add(c * p);
        if kf > x && p < 1e-18 {
            break;
        }
        k += 1;
    }
    acc.value() * rgamma(b)
}

fn hankel(q: f64, b: f64, z: f64) -> Result<f64> {
    if b > 1.0 {
        // E_{q,b}(z) = (E_{q,b-q}(z) - 1/Γ(b-q)) / z. Reducing all the way to
        // b <= 1 keeps clear of the b -> 1+q edge, where the integral has a
        // jump the quadrature cannot resolve.
        let lower = hankel(q, b - q, z)?;
        return Ok((lower - rgamma(b - q)) / z);
    }
    let x = -z;
    let sin_b = sin_pi(b);
    let sin_qb = sin_pi(q - b);
    let cos_half = cos_pi(0.5 * q);
    let two_cos_sq = 2.0 * cos_half * cos_half; // 1 + cos(πq)
    let integrand = |rho: f64| -> f64 {
        if rho <= 0.0 {
            return 0.0;
        }
        let rq = rho.powf(q);
        let d = rq - x;
        // ρ^{2q} + 2xρ^q cos(πq) + x² rewritten to stay accurate as q → 1
        let den = d * d + 2.0 * x * rq * two_cos_sq;
        let num = rq * sin_b + z * sin_qb;
        (-rho).exp() * rho.powf(q - b) * num / den
    };
    let rho_star = x.powf(1.0 / q);
    let (value, ok) = if rho_star < SPLIT_LIMIT {
        let left = quad::tanh_sinh(integrand, 0.0, rho_star, QUAD_RTOL);
        let right = quad::exp_sinh(integrand, rho_star, QUAD_RTOL);
        (left.value + right.value, left.converged && right.converged)
    } else {
        let r = quad::exp_sinh(integrand, 0.0, QUAD_RTOL);
        (r.value, r.converged)
    };
    if !ok {
        return Err(Error::AccuracyNotGuaranteed {
            alpha: q,
            beta: b,
            z,
            reason: "quadrature did not converge",
        });
    }
    Ok(value / std::f64::consts::PI)
}
