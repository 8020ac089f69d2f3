//! Adjustment coefficients of network-aggregated processes and Lundberg-type bounds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{adjustment_coefficient, cumulant_root, ObjectParams};
use crate::network::{max_weight, AdjacencyRealization, AgentSet, NetworkSpec, WEIGHT_SLACK};

/// Relative precision of adjustment coefficients.
pub const KAPPA_TOL: f64 = 1e-13;

/// Per-agent exponents `r*_i` of the joint bound, aligned with the group members.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentAllocation {
    pub r_star: Vec<f64>,
}

impl ExponentAllocation {
    pub fn total(&self) -> f64 {
        self.r_star.iter().sum()
    }
}

/// Adjustment coefficients `kappa_j` of all objects.
pub fn object_kappas(objects: &[ObjectParams]) -> Result<Vec<f64>> {
    objects.iter().map(|o| adjustment_coefficient(o, KAPPA_TOL)).collect()
}

/// Adjustment coefficient of `sum_j s_j V_j`: the positive root of
/// `sum_j psi_{V_j}(t s_j) = 0`, located inside `[min_j kappa_j / s_j, max_j kappa_j / s_j]`.
pub fn adjustment_coefficient_for_exposure(s: &[f64], objects: &[ObjectParams], tol: f64) -> Result<f64> {
    let linked: Vec<(f64, &ObjectParams)> = s.iter().zip(objects).filter(|(&x, _)| x > 0.0).map(|(&x, o)| (x, o)).collect();
    if linked.is_empty() {
        return Err(Error::IsolatedGroup);
    }
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for &(sj, o) in &linked {
        let k = adjustment_coefficient(o, tol.min(KAPPA_TOL))? / sj;
        lo = lo.min(k);
        hi = hi.max(k);
    }
    if hi - lo <= tol * hi {
        return Ok(0.5 * (lo + hi));
    }
    let f = |t: f64| -> f64 {
        let mut acc = 0.0;
        for &(sj, o) in &linked {
            match o.cumulant(t * sj) {
                Some(v) => acc += v,
                None => return f64::INFINITY,
            }
        }
        acc
    };
    // the sum is convex, nonpositive at lo and nonnegative at hi
    let (mut a, mut b) = (lo, hi);
    while b - a > tol * b {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if f(m) > 0.0 {
            b = m;
        } else {
            a = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Adjustment coefficient of the group process in one realization.
pub fn network_adjustment_coefficient(
    real: &AdjacencyRealization,
    objects: &[ObjectParams],
    group: &AgentSet,
    tol: f64,
) -> Result<f64> {
    adjustment_coefficient_for_exposure(&real.group_exposure(group), objects, tol)
}

/// Cumulant `sum_j psi_{V_j}(t s_j)` of the aggregated process (`None` beyond the moment domain).
pub fn aggregated_cumulant(s: &[f64], objects: &[ObjectParams], t: f64) -> Option<f64> {
    s.iter()
        .zip(objects)
        .filter(|(&x, _)| x > 0.0)
        .try_fold(0.0, |acc, (&x, o)| o.cumulant(t * x).map(|v| acc + v))
}

/// Generic root of an aggregated cumulant, for jump laws without a closed form.
pub fn aggregated_cumulant_root(s: &[f64], objects: &[ObjectParams], tol: f64) -> Result<f64> {
    let limit = s
        .iter()
        .zip(objects)
        .filter(|(&x, _)| x > 0.0)
        .map(|(&x, o)| o.jump.mgf_limit() / x)
        .fold(f64::INFINITY, f64::min);
    cumulant_root(|t| aggregated_cumulant(s, objects, t), limit, tol)
}

/// Objects the group can be linked to.
fn reachable(spec: &NetworkSpec, group: &AgentSet) -> Vec<usize> {
    (0..spec.d).filter(|&j| spec.prob_linked(group, j) > 0.0).collect()
}

/// `min_j kappa_j` over the objects the group can reach (`None` if it reaches none).
fn min_reachable_kappa(spec: &NetworkSpec, objects: &[ObjectParams], group: &AgentSet) -> Result<Option<f64>> {
    let mut best: Option<f64> = None;
    for j in reachable(spec, group) {
        let k = adjustment_coefficient(&objects[j], KAPPA_TOL)?;
        best = Some(best.map_or(k, |b: f64| b.min(k)));
    }
    Ok(best)
}

fn check_barriers(group: &AgentSet, u: &[f64]) -> Result<()> {
    if u.len() != group.len() {
        return Err(Error::DimensionMismatch(format!("{} barriers given for a group of {}", u.len(), group.len())));
    }
    if let Some(b) = u.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
        return Err(Error::InvalidParameter(format!("barriers must be nonnegative, got {b}")));
    }
    Ok(())
}

/// `P(deg(Q) > 0) exp(-kappa sum_i u^i / sum_i W^i)` with `kappa = min_j kappa_j`.
///
/// `w_caps` (aligned with the group) must dominate every realizable weight of
/// the agent; by default the largest realizable weight is used.
pub fn lundberg_bound_sum(
    spec: &NetworkSpec,
    objects: &[ObjectParams],
    group: &AgentSet,
    u: &[f64],
    w_caps: Option<&[f64]>,
) -> Result<f64> {
    spec.validate()?;
    spec.check_objects(objects)?;
    check_barriers(group, u)?;
    let linked = 1.0 - spec.prob_isolated(group);
    let Some(kappa) = min_reachable_kappa(spec, objects, group)? else {
        return Ok(0.0);
    };
    if linked <= 0.0 {
        return Ok(0.0);
    }
    let mut w_total = 0.0;
    for (pos, &i) in group.members().iter().enumerate() {
        let realizable = max_weight(spec, objects, group, i)?;
        let cap = match w_caps {
            Some(caps) => {
                if caps.len() != group.len() {
                    return Err(Error::DimensionMismatch(format!("{} weight caps for a group of {}", caps.len(), group.len())));
                }
                let c = caps[pos];
                if !(c <= 1.0 + WEIGHT_SLACK) || c + WEIGHT_SLACK < realizable {
                    return Err(Error::InvalidParameter(format!(
                        "weight cap {c} for agent {i} must lie in [{realizable}, 1]"
                    )));
                }
                c
            }
            None => realizable,
        };
        w_total += cap;
    }
    let total_u: f64 = u.iter().sum();
    Ok(linked * (-kappa * total_u / w_total).exp())
}

/// `P(deg(Q) > 0) exp(-sum_i r*_i u^i)` for a feasible allocation `sum_i r*_i <= kappa_j`.
pub fn lundberg_bound_joint(
    spec: &NetworkSpec,
    objects: &[ObjectParams],
    group: &AgentSet,
    u: &[f64],
    alloc: &ExponentAllocation,
) -> Result<f64> {
    spec.validate()?;
    spec.check_objects(objects)?;
    check_barriers(group, u)?;
    if alloc.r_star.len() != group.len() {
        return Err(Error::DimensionMismatch(format!("{} exponents for a group of {}", alloc.r_star.len(), group.len())));
    }
    if alloc.r_star.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
        return Err(Error::InvalidParameter("exponents must be positive".into()));
    }
    let sum = alloc.total();
    if let Some(kappa) = min_reachable_kappa(spec, objects, group)? {
        if sum > kappa * (1.0 + 1e-12) {
            return Err(Error::InfeasibleAllocation { sum, kappa });
        }
    }
    let linked = 1.0 - spec.prob_isolated(group);
    let exponent: f64 = alloc.r_star.iter().zip(u).map(|(r, x)| r * x).sum();
    Ok(linked * (-exponent).exp())
}

/// Maximizes `sum_i r*_i u^i` subject to `sum_i r*_i <= min_j kappa_j` and `r*_i > 0`.
///
/// Agents below the largest barrier keep a floor of `1e-9 * kappa`; the rest of
/// the budget is split equally among the agents with the largest barrier.
pub fn optimize_allocation(objects: &[ObjectParams], group: &AgentSet, u: &[f64]) -> Result<ExponentAllocation> {
    check_barriers(group, u)?;
    let kappa = object_kappas(objects)?.into_iter().fold(f64::INFINITY, f64::min);
    if !kappa.is_finite() {
        return Err(Error::NoAdjustmentCoefficient("no objects".into()));
    }
    let eps = 1e-9 * kappa;
    let umax = u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let top = u.iter().filter(|&&x| x == umax).count();
    let rest = (u.len() - top) as f64;
    let share = (kappa - rest * eps) / top as f64;
    let r_star: Vec<f64> = u.iter().map(|&x| if x == umax { share } else { eps }).collect();
    let alloc = ExponentAllocation { r_star };
    if alloc.total() > kappa * (1.0 + 1e-12) {
        return Err(Error::InfeasibleAllocation { sum: alloc.total(), kappa });
    }
    Ok(alloc)
}
