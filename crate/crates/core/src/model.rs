//! Object-level compound Poisson primitives.
//!
//! Each object `j` carries a spectrally positive compound Poisson process
//! `V_j(t) = sum_{k <= N_j(t)} X_j(k) - c_j t` with arrival rate `lambda_j`,
//! positive jumps drawn from a [`JumpLaw`] and drift `c_j`. Everything in the
//! network layer conditions on these one-dimensional building blocks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Distribution of the (strictly positive) jump sizes of one object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum JumpLaw {
    Exponential { mean: f64 },
    /// Sum of `shape` i.i.d. exponentials with overall mean `mean`.
    Erlang { shape: u32, mean: f64 },
    Deterministic { value: f64 },
    /// Mass `masses[k]` sits at `(k + 1) * step`.
    Empirical { step: f64, masses: Vec<f64> },
}

impl JumpLaw {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        match self {
            JumpLaw::Exponential { mean } if !(mean.is_finite() && *mean > 0.0) => {
                bad(format!("exponential mean must be positive, got {mean}"))
            }
            JumpLaw::Erlang { shape, mean } if *shape == 0 || !(mean.is_finite() && *mean > 0.0) => {
                bad(format!("erlang needs shape >= 1 and mean > 0, got ({shape}, {mean})"))
            }
            JumpLaw::Deterministic { value } if !(value.is_finite() && *value > 0.0) => {
                bad(format!("deterministic jump must be positive, got {value}"))
            }
            JumpLaw::Empirical { step, masses } => {
                if !(step.is_finite() && *step > 0.0) {
                    return bad(format!("empirical step must be positive, got {step}"));
                }
                if masses.is_empty() || masses.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
                    return bad("empirical masses must be a nonempty list of nonnegative numbers".into());
                }
                let total: f64 = masses.iter().sum();
                if (total - 1.0).abs() > 1e-12 {
                    return bad(format!("empirical masses sum to {total}, expected 1"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            JumpLaw::Exponential { mean } | JumpLaw::Erlang { mean, .. } => *mean,
            JumpLaw::Deterministic { value } => *value,
            JumpLaw::Empirical { step, masses } => masses
                .iter()
                .enumerate()
                .map(|(k, m)| m * (k + 1) as f64 * step)
                .sum(),
        }
    }

    /// `P(X > x)`.
    pub fn survival(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 1.0;
        }
        match self {
            JumpLaw::Exponential { mean } => (-x / mean).exp(),
            JumpLaw::Erlang { shape, mean } => {
                let rate = *shape as f64 / mean;
                erlang_survival(*shape, rate, x)
            }
            JumpLaw::Deterministic { value } => {
                if x < *value {
                    1.0
                } else {
                    0.0
                }
            }
            JumpLaw::Empirical { step, masses } => {
                // atoms at (k+1)*step strictly above x
                let first = (x / step).floor() as usize; // atoms with index >= first are > x
                masses.iter().skip(first).sum::<f64>().min(1.0)
            }
        }
    }

    /// Right end of the moment generating function's domain (may be infinite).
    pub fn mgf_limit(&self) -> f64 {
        match self {
            JumpLaw::Exponential { mean } => 1.0 / mean,
            JumpLaw::Erlang { shape, mean } => *shape as f64 / mean,
            JumpLaw::Deterministic { .. } | JumpLaw::Empirical { .. } => f64::INFINITY,
        }
    }

    /// `E exp(t X)`, or `None` when `t` is at or beyond the divergence point.
    pub fn mgf(&self, t: f64) -> Option<f64> {
        if t >= self.mgf_limit() {
            return None;
        }
        Some(match self {
            JumpLaw::Exponential { mean } => 1.0 / (1.0 - t * mean),
            JumpLaw::Erlang { shape, mean } => {
                let rate = *shape as f64 / mean;
                (rate / (rate - t)).powi(*shape as i32)
            }
            JumpLaw::Deterministic { value } => (t * value).exp(),
            JumpLaw::Empirical { step, masses } => masses
                .iter()
                .enumerate()
                .map(|(k, m)| m * (t * (k + 1) as f64 * step).exp())
                .sum(),
        })
    }
}

/// `P(Gamma(shape, rate) > x)` for integer shape.
pub(crate) fn erlang_survival(shape: u32, rate: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let y = rate * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 1..shape {
        term *= y / n as f64;
        sum += term;
    }
    ((-y).exp() * sum).min(1.0)
}

/// Parameters of one object's compound Poisson process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectParams {
    pub lambda: f64,
    pub jump: JumpLaw,
    pub drift: f64,
}

impl ObjectParams {
    pub fn new(lambda: f64, jump: JumpLaw, drift: f64) -> Result<Self> {
        let obj = ObjectParams { lambda, jump, drift };
        obj.validate()?;
        Ok(obj)
    }

    /// Convenience constructor for exponential jumps.
    pub fn exponential(lambda: f64, mean: f64, drift: f64) -> Result<Self> {
        Self::new(lambda, JumpLaw::Exponential { mean }, drift)
    }

    /// Exponential jumps with the drift chosen so that `rho = lambda * mean / drift`.
    pub fn exponential_with_rho(lambda: f64, mean: f64, rho: f64) -> Result<Self> {
        if !(rho.is_finite() && rho > 0.0) {
            return Err(Error::InvalidParameter(format!("rho must be positive, got {rho}")));
        }
        Self::exponential(lambda, mean, lambda * mean / rho)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(Error::InvalidParameter(format!("lambda must be positive, got {}", self.lambda)));
        }
        if !(self.drift.is_finite() && self.drift > 0.0) {
            return Err(Error::InvalidParameter(format!("drift must be positive, got {}", self.drift)));
        }
        self.jump.validate()
    }

    pub fn mean_jump(&self) -> f64 {
        self.jump.mean()
    }

    /// Expected jump amount per unit time, `lambda * mu`.
    pub fn load(&self) -> f64 {
        self.lambda * self.jump.mean()
    }

    pub fn rho(&self) -> f64 {
        rho(self)
    }

    /// Cumulant `psi(t) = log E exp(t V(1)) = lambda (M(t) - 1) - c t`.
    pub fn cumulant(&self, t: f64) -> Option<f64> {
        self.jump.mgf(t).map(|m| self.lambda * (m - 1.0) - self.drift * t)
    }
}

/// Pollaczek-Khintchine parameter `lambda * mu / c`.
pub fn rho(obj: &ObjectParams) -> f64 {
    obj.load() / obj.drift
}

/// Closed-form hitting probability for exponential jumps with mean `mu`.
pub fn classic_hitting_exponential(rho: f64, mu: f64, u: f64) -> f64 {
    if rho >= 1.0 {
        return 1.0;
    }
    rho * (-u * (1.0 - rho) / mu).exp()
}

/// Adjustment coefficient `kappa` with `lambda * int e^{kappa z} Fbar(z) dz = c`.
///
/// Exponential jumps use the closed form `(1 - rho) / mu`; everything else is
/// found by bisection on the cumulant.
pub fn adjustment_coefficient(obj: &ObjectParams, tol: f64) -> Result<f64> {
    obj.validate()?;
    let r = rho(obj);
    if r >= 1.0 {
        return Err(Error::NoAdjustmentCoefficient(format!("rho = {r} >= 1")));
    }
    if let JumpLaw::Exponential { mean } = obj.jump {
        return Ok((1.0 - r) / mean);
    }
    cumulant_root(|t| obj.cumulant(t), obj.jump.mgf_limit(), tol)
}

/// Positive root of a convex function `f` with `f(0) = 0` and `f'(0) < 0`.
///
/// `f` returns `None` outside its domain `(.., limit)`. The upper end of the
/// bracket approaches `limit` geometrically, or doubles when `limit` is
/// infinite. Bisection stops at relative width `tol`.
pub fn cumulant_root<F>(f: F, limit: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> Option<f64>,
{
    let positive = |t: f64| f(t).map_or(true, |v| v > 0.0);
    let mut lo = 0.0;
    let mut hi = None;
    if limit.is_finite() {
        for k in 1..=200 {
            let t = limit * (1.0 - 0.5f64.powi(k));
            if t >= limit {
                break;
            }
            match f(t) {
                Some(v) if v > 0.0 => {
                    hi = Some(t);
                    break;
                }
                Some(_) => lo = t,
                None => {
                    hi = Some(t);
                    break;
                }
            }
        }
    } else {
        let mut t = 1.0;
        for _ in 0..2100 {
            match f(t) {
                Some(v) if v > 0.0 => {
                    hi = Some(t);
                    break;
                }
                Some(_) => {
                    lo = t;
                    t *= 2.0;
                }
                None => {
                    hi = Some(t);
                    break;
                }
            }
        }
        if hi.is_none() {
            // shrink towards zero for very steep cumulants
            lo = 0.0;
        }
    }
    let mut hi = hi.ok_or(Error::DivergentMoment)?;
    // lo may have been moved above the root only if f(lo) <= 0, so the root is in (lo, hi]
    let tol = tol.max(1e-15);
    for _ in 0..400 {
        if hi - lo <= tol * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if positive(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
