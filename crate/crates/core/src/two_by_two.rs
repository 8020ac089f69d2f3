//! Closed forms for two agents and two objects.
//!
//! Edge probabilities are given as `p[i][j]` (agent `i`, object `j`, zero-based).
//! The sixteen configurations are ordered: none; `a11`, `a12`, `a21`, `a22`;
//! `{a11,a12}`, `{a11,a21}`, `{a11,a22}`, `{a12,a21}`, `{a12,a22}`, `{a21,a22}`;
//! `{a11,a12,a21}`, `{a11,a12,a22}`, `{a11,a21,a22}`, `{a12,a21,a22}`; all.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{JumpLaw, ObjectParams};
use crate::network::{apply_weights, AgentSet, WeightScheme};
use crate::pk::pk_value;
use crate::network::AdjacencyRealization;
use crate::series::{compound_geometric_tail, IntegratedTail};

/// Edge probabilities `p[i][j]`.
pub type EdgeProbs = [[f64; 2]; 2];

/// Edge sets of the sixteen configurations as `(agent, object)` pairs.
pub const CONFIGURATIONS: [&[(usize, usize)]; 16] = [
    &[],
    &[(0, 0)],
    &[(0, 1)],
    &[(1, 0)],
    &[(1, 1)],
    &[(0, 0), (0, 1)],
    &[(0, 0), (1, 0)],
    &[(0, 0), (1, 1)],
    &[(0, 1), (1, 0)],
    &[(0, 1), (1, 1)],
    &[(1, 0), (1, 1)],
    &[(0, 0), (0, 1), (1, 0)],
    &[(0, 0), (0, 1), (1, 1)],
    &[(0, 0), (1, 0), (1, 1)],
    &[(0, 1), (1, 0), (1, 1)],
    &[(0, 0), (0, 1), (1, 0), (1, 1)],
];

/// Indicator matrix of configuration `k` (1-based).
pub fn configuration(k: usize) -> [[bool; 2]; 2] {
    let mut m = [[false; 2]; 2];
    for &(i, j) in CONFIGURATIONS[k - 1] {
        m[i][j] = true;
    }
    m
}

/// Mixed parameters of the two-object system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhoSymbols {
    pub rho1: f64,
    pub rho2: f64,
    /// `(l1 m1 + l2 m2) / (c1 + c2)`.
    pub rho11: f64,
    /// `(2 l1 m1 + l2 m2) / (2 c1 + c2)`.
    pub rho21: f64,
    /// `(l1 m1 + 2 l2 m2) / (c1 + 2 c2)`.
    pub rho12: f64,
    /// Harmonic mean `2 rho1 rho2 / (rho1 + rho2)`.
    pub rho_exp: f64,
}

pub fn rho_symbols(objects: &[ObjectParams]) -> Result<RhoSymbols> {
    check_two(objects)?;
    let (a, b) = (&objects[0], &objects[1]);
    let (l1, l2, c1, c2) = (a.load(), b.load(), a.drift, b.drift);
    let (rho1, rho2) = (a.rho(), b.rho());
    Ok(RhoSymbols {
        rho1,
        rho2,
        rho11: (l1 + l2) / (c1 + c2),
        rho21: (2.0 * l1 + l2) / (2.0 * c1 + c2),
        rho12: (l1 + 2.0 * l2) / (c1 + 2.0 * c2),
        rho_exp: 2.0 * rho1 * rho2 / (rho1 + rho2),
    })
}

fn check_two(objects: &[ObjectParams]) -> Result<()> {
    if objects.len() != 2 {
        return Err(Error::DimensionMismatch(format!("two objects required, got {}", objects.len())));
    }
    objects.iter().try_for_each(|o| o.validate())
}

fn check_probs(p: &EdgeProbs) -> Result<()> {
    if p.iter().flatten().any(|x| !(0.0..=1.0).contains(x)) {
        return Err(Error::InvalidParameter("edge probabilities must lie in [0, 1]".into()));
    }
    Ok(())
}

fn exponential_means(objects: &[ObjectParams]) -> Result<[f64; 2]> {
    check_two(objects)?;
    let mut out = [0.0; 2];
    for (k, o) in objects.iter().enumerate() {
        match o.jump {
            JumpLaw::Exponential { mean } => out[k] = mean,
            _ => return Err(Error::ModelMismatch("closed forms need exponential jumps".into())),
        }
    }
    Ok(out)
}

fn check_stable(objects: &[ObjectParams]) -> Result<()> {
    for o in objects {
        if o.rho() >= 1.0 {
            return Err(Error::RhoOutOfRange(o.rho()));
        }
    }
    Ok(())
}

/// Probability of configuration `k` (1-based).
pub fn configuration_probability(p: &EdgeProbs, k: usize) -> f64 {
    let m = configuration(k);
    (0..2)
        .flat_map(|i| (0..2).map(move |j| (i, j)))
        .map(|(i, j)| if m[i][j] { p[i][j] } else { 1.0 - p[i][j] })
        .product()
}

/// One row of the configuration table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEntry {
    /// 1-based configuration number.
    pub index: usize,
    pub indicator: [[bool; 2]; 2],
    pub probability: f64,
    /// Weights with the scheme resolved for the group `{1}`.
    pub weights_single: [[f64; 2]; 2],
    /// Weights with the scheme resolved for the group `{1, 2}`.
    pub weights_pair: [[f64; 2]; 2],
    /// `P^1`.
    pub p1: f64,
    /// `P^{1,2}`.
    pub p12: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigTable {
    pub entries: Vec<ConfigEntry>,
}

/// All sixteen configurations with probabilities, weights and `P^Q` values.
pub fn config_table(objects: &[ObjectParams], p: &EdgeProbs, scheme: &WeightScheme) -> Result<ConfigTable> {
    check_two(objects)?;
    check_probs(p)?;
    let single = AgentSet::single(0, 2)?;
    let pair = AgentSet::all(2)?;
    let to_arr = |w: Vec<Vec<f64>>| [[w[0][0], w[0][1]], [w[1][0], w[1][1]]];
    let entries = (1..=16)
        .map(|k| -> Result<ConfigEntry> {
            let ind = configuration(k);
            let indicator: Vec<Vec<bool>> = ind.iter().map(|r| r.to_vec()).collect();
            let w1 = apply_weights(&indicator, scheme, objects, &single)?;
            let w12 = apply_weights(&indicator, scheme, objects, &pair)?;
            let r1 = AdjacencyRealization { indicator: indicator.clone(), weights: w1.clone(), probability: None };
            let r12 = AdjacencyRealization { indicator, weights: w12.clone(), probability: None };
            Ok(ConfigEntry {
                index: k,
                indicator: ind,
                probability: configuration_probability(p, k),
                weights_single: to_arr(w1),
                weights_pair: to_arr(w12),
                p1: pk_value(&r1, objects, &single),
                p12: pk_value(&r12, objects, &pair),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConfigTable { entries })
}

/// A closed-form value with its series error and simple bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoByTwoResult {
    pub value: f64,
    pub error_bound: f64,
    /// Value with all mixture-series terms dropped.
    pub lower: f64,
    /// Lundberg-type upper bound.
    pub upper: f64,
}

/// Ladder-height mixture of `w1 X1 + w2 X2` style processes: weights and means.
fn mixture(parts: [(f64, f64); 2]) -> Result<IntegratedTail> {
    IntegratedTail::mixture(parts.iter().map(|&(w, m)| (w, JumpLaw::Exponential { mean: m })).collect())
}

struct Mixtures {
    f11: IntegratedTail,
    f12: IntegratedTail,
    f21: IntegratedTail,
}

fn mixtures(objects: &[ObjectParams], mu: [f64; 2]) -> Result<Mixtures> {
    let (l1, l2) = (objects[0].load(), objects[1].load());
    Ok(Mixtures {
        f11: mixture([(l1, mu[0]), (l2, mu[1])])?,
        f12: mixture([(l1, mu[0] / 2.0), (2.0 * l2, mu[1])])?,
        f21: mixture([(2.0 * l1, mu[0]), (l2, mu[1] / 2.0)])?,
    })
}

fn classic(rho: f64, mu: f64, x: f64) -> f64 {
    rho * (-(1.0 - rho) * x / mu).exp()
}

fn kappas(objects: &[ObjectParams], mu: [f64; 2]) -> [f64; 2] {
    [(1.0 - objects[0].rho()) / mu[0], (1.0 - objects[1].rho()) / mu[1]]
}

/// `Psi^1(u1)` in the homogeneous system with exponential jumps.
pub fn psi1_homogeneous(objects: &[ObjectParams], p: &EdgeProbs, u1: f64, tol: f64) -> Result<TwoByTwoResult> {
    let mu = exponential_means(objects)?;
    check_probs(p)?;
    check_stable(objects)?;
    if !(u1 > 0.0) {
        return Err(Error::InvalidParameter(format!("barrier must be positive, got {u1}")));
    }
    let r = rho_symbols(objects)?;
    let f = mixtures(objects, mu)?;
    let [[p11, p12], [p21, p22]] = *p;
    let lower = p11 * (1.0 - p12) * (1.0 - p21) * classic(r.rho1, mu[0], u1)
        + p12 * (1.0 - p11) * (1.0 - p22) * classic(r.rho2, mu[1], u1)
        + p11 * p21 * (1.0 - p12) * classic(r.rho1, mu[0], 2.0 * u1)
        + p12 * p22 * (1.0 - p11) * classic(r.rho2, mu[1], 2.0 * u1);
    let terms = [
        (p11 * p12 * (1.0 - p21) * (1.0 - p22), r.rho11, &f.f11, u1),
        (p11 * p12 * p21 * (1.0 - p22), r.rho12, &f.f12, u1),
        (p11 * p12 * p22 * (1.0 - p21), r.rho21, &f.f21, u1),
        (p11 * p12 * p21 * p22, r.rho11, &f.f11, 2.0 * u1),
    ];
    let (mut value, mut error) = (lower, 0.0);
    for (coef, rho, tail, x) in terms {
        if coef > 0.0 {
            let v = compound_geometric_tail(rho, tail, x, tol)?;
            value += coef * v.value;
            error += coef * v.error;
        }
    }
    let k = kappas(objects, mu);
    let upper = (1.0 - (1.0 - p11) * (1.0 - p12)) * (-k[0].min(k[1]) * u1).exp();
    Ok(TwoByTwoResult { value, error_bound: error, lower, upper })
}

/// `Psi^{1,2}(u)` for the sum of both agents in the homogeneous system.
pub fn psi_sum_homogeneous(objects: &[ObjectParams], p: &EdgeProbs, u: [f64; 2], tol: f64) -> Result<TwoByTwoResult> {
    let mu = exponential_means(objects)?;
    check_probs(p)?;
    check_stable(objects)?;
    let total = u[0] + u[1];
    if !(total > 0.0) || u.iter().any(|&x| x < 0.0) {
        return Err(Error::InvalidParameter("barriers must be nonnegative with positive sum".into()));
    }
    let r = rho_symbols(objects)?;
    let f = mixtures(objects, mu)?;
    let [[p11, p12], [p21, p22]] = *p;
    let none1 = (1.0 - p11) * (1.0 - p21);
    let none2 = (1.0 - p12) * (1.0 - p22);
    let lower = none2 * (1.0 - none1) * classic(r.rho1, mu[0], total) + none1 * (1.0 - none2) * classic(r.rho2, mu[1], total);
    let coef = 1.0 + none1 * none2 - none2 - none1;
    let (mut value, mut error) = (lower, 0.0);
    if coef > 0.0 {
        let v = compound_geometric_tail(r.rho11, &f.f11, total, tol)?;
        value += coef * v.value;
        error += coef * v.error;
    }
    let k = kappas(objects, mu);
    let upper = (1.0 - none1 * none2) * (-0.5 * k[0].min(k[1]) * total).exp();
    Ok(TwoByTwoResult { value, error_bound: error, lower, upper })
}

fn common_lambda(objects: &[ObjectParams]) -> Result<()> {
    if (objects[0].lambda - objects[1].lambda).abs() > 1e-12 * objects[0].lambda {
        return Err(Error::ModelMismatch("the exponential system needs a common arrival rate".into()));
    }
    Ok(())
}

fn profile(rho: f64, x: f64, r: f64) -> f64 {
    if rho >= 1.0 {
        1.0
    } else {
        rho * (-x * (1.0 - rho) / r).exp()
    }
}

/// `Psi^1(u1)` in the exponential system with group rate `r1 <= min_j mu_j / 2`.
pub fn psi1_exponential(objects: &[ObjectParams], p: &EdgeProbs, r1: f64, u1: f64) -> Result<f64> {
    let mu = exponential_means(objects)?;
    common_lambda(objects)?;
    check_probs(p)?;
    if !(r1 > 0.0) {
        return Err(Error::InvalidParameter(format!("rate must be positive, got {r1}")));
    }
    for (j, m) in mu.iter().enumerate() {
        // both agents linked to object j carry r1 / mu_j each
        let sum = 2.0 * r1 / m;
        if sum > 1.0 + 1e-12 {
            return Err(Error::WeightConstraintViolated { object: j, sum });
        }
    }
    let r = rho_symbols(objects)?;
    let [[p11, p12], _] = *p;
    Ok(p11 * (1.0 - p12) * profile(r.rho1, u1, r1)
        + (1.0 - p11) * p12 * profile(r.rho2, u1, r1)
        + p11 * p12 * profile(r.rho_exp, u1, r1))
}

/// `Psi^{1,2}(u)` in the exponential system with group rate `r12 <= min_j mu_j`.
pub fn psi_sum_exponential(objects: &[ObjectParams], p: &EdgeProbs, r12: f64, u: [f64; 2]) -> Result<f64> {
    let mu = exponential_means(objects)?;
    common_lambda(objects)?;
    check_probs(p)?;
    if !(r12 > 0.0) {
        return Err(Error::InvalidParameter(format!("rate must be positive, got {r12}")));
    }
    for (j, m) in mu.iter().enumerate() {
        let sum = r12 / m;
        if sum > 1.0 + 1e-12 {
            return Err(Error::WeightConstraintViolated { object: j, sum });
        }
    }
    let r = rho_symbols(objects)?;
    let [[p11, p12], [p21, p22]] = *p;
    let total = u[0] + u[1];
    let linked1 = p11 + p21 - p11 * p21;
    let linked2 = p12 + p22 - p12 * p22;
    Ok((1.0 - p12) * (1.0 - p22) * linked1 * profile(r.rho1, total, r12)
        + (1.0 - p11) * (1.0 - p21) * linked2 * profile(r.rho2, total, r12)
        + linked1 * linked2 * profile(r.rho_exp, total, r12))
}

/// Bounds on the probability that both agents are simultaneously above their barriers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointBounds {
    /// Exact contributions of the two configurations where one object is shared.
    pub lower: f64,
    /// Network Lundberg bound with the symmetric allocation.
    pub upper_global: f64,
    /// Configuration-wise bound.
    pub upper_casewise: f64,
}

/// Joint hitting bounds for the homogeneous system with exponential jumps.
///
/// Objects are relabelled internally so that `rho_1 <= rho_2`.
pub fn psi_joint_bounds(objects: &[ObjectParams], p: &EdgeProbs, u: [f64; 2], tol: f64) -> Result<JointBounds> {
    exponential_means(objects)?;
    check_probs(p)?;
    check_stable(objects)?;
    if u.iter().any(|&x| !(x >= 0.0)) || !(u[0] + u[1] > 0.0) {
        return Err(Error::InvalidParameter("barriers must be nonnegative with positive sum".into()));
    }
    let (objects, p) = if objects[0].rho() <= objects[1].rho() {
        (objects.to_vec(), *p)
    } else {
        (vec![objects[1].clone(), objects[0].clone()], [[p[0][1], p[0][0]], [p[1][1], p[1][0]]])
    };
    let mu = exponential_means(&objects)?;
    let r = rho_symbols(&objects)?;
    let f = mixtures(&objects, mu)?;
    let k = kappas(&objects, mu);
    let [[p11, p12], [p21, p22]] = p;
    let umax = u[0].max(u[1]);
    let total = u[0] + u[1];
    let lower = p11 * p21 * (1.0 - p12) * (1.0 - p22) * classic(r.rho1, mu[0], 2.0 * umax)
        + p12 * p22 * (1.0 - p11) * (1.0 - p21) * classic(r.rho2, mu[1], 2.0 * umax);
    let none = (1.0 - p11) * (1.0 - p12) * (1.0 - p21) * (1.0 - p22);
    let upper_global = (1.0 - none) * (-0.5 * k[0].min(k[1]) * total).exp();
    let all = p11 * p12 * p21 * p22;
    let shared = if all > 0.0 {
        let v = compound_geometric_tail(r.rho11, &f.f11, 2.0 * umax, tol)?;
        all * (v.value + v.error)
    } else {
        0.0
    };
    let upper_casewise = lower
        + p11 * p22 * (1.0 - p12) * (1.0 - p21) * (-k[0] * u[0] - k[1] * u[1]).exp()
        + p12 * p21 * (1.0 - p11) * (1.0 - p22) * (-k[1] * u[0] - k[0] * u[1]).exp()
        + p21 * p22 * (p12 * (1.0 - p11) + p11 * (1.0 - p12)) * (-(2.0 * k[0]).min(2.0 / 3.0 * k[1]) * total).exp()
        + p11 * p12 * (p21 * (1.0 - p22) + p22 * (1.0 - p21)) * (-(2.0 / 3.0 * k[0]).min(2.0 * k[1]) * total).exp()
        + shared;
    Ok(JointBounds { lower, upper_global, upper_casewise })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig5() -> Vec<ObjectParams> {
        vec![
            ObjectParams::exponential_with_rho(0.5, 1.0, 0.6).unwrap(),
            ObjectParams::exponential_with_rho(0.5, 1.0, 0.9).unwrap(),
        ]
    }

    #[test]
    fn configuration_probabilities_sum_to_one() {
        let grid = [0.0, 0.25, 0.5, 0.75, 1.0];
        for &a in &grid {
            for &b in &grid {
                for &c in &grid {
                    for &d in &grid {
                        let p = [[a, b], [c, d]];
                        let probs: Vec<f64> = (1..=16).map(|k| configuration_probability(&p, k)).collect();
                        assert!(probs.iter().all(|&x| x >= 0.0));
                        assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                    }
                }
            }
        }
        let half = [[0.5; 2]; 2];
        assert!((1..=16).all(|k| (configuration_probability(&half, k) - 1.0 / 16.0).abs() < 1e-15));
    }

    #[test]
    fn rho_ordering_chain() {
        let o = vec![
            ObjectParams::exponential_with_rho(0.5, 1.0, 0.3).unwrap(),
            ObjectParams::exponential_with_rho(1.5, 2.0, 0.8).unwrap(),
        ];
        let r = rho_symbols(&o).unwrap();
        assert!(r.rho1 <= r.rho21 && r.rho21 <= r.rho11 && r.rho11 <= r.rho12 && r.rho12 <= r.rho2);
        assert!(r.rho1 <= r.rho_exp && r.rho_exp <= r.rho2);
        let h = vec![
            ObjectParams::exponential_with_rho(1.0, 1.0, 0.5).unwrap(),
            ObjectParams::exponential_with_rho(1.0, 1.0, 1.0).unwrap(),
        ];
        assert!((rho_symbols(&h).unwrap().rho_exp - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn trivial_edge_probabilities() {
        let o = fig5();
        let zero = [[0.0; 2]; 2];
        assert_eq!(psi1_homogeneous(&o, &zero, 1.0, 1e-10).unwrap().value, 0.0);
        assert_eq!(psi1_exponential(&o, &zero, 0.5, 1.0).unwrap(), 0.0);
        assert_eq!(psi_sum_exponential(&o, &zero, 1.0, [1.0, 1.0]).unwrap(), 0.0);
        let b = psi_joint_bounds(&o, &zero, [1.0, 1.0], 1e-10).unwrap();
        assert_eq!((b.lower, b.upper_global, b.upper_casewise), (0.0, 0.0, 0.0));
    }

    #[test]
    fn complete_network_keeps_only_shared_term() {
        let o = fig5();
        let one = [[1.0; 2]; 2];
        let r = rho_symbols(&o).unwrap();
        let tail = mixtures(&o, [1.0, 1.0]).unwrap().f11;
        let v = psi1_homogeneous(&o, &one, 1.0, 1e-12).unwrap();
        let direct = compound_geometric_tail(r.rho11, &tail, 2.0, 1e-12).unwrap();
        assert!((v.value - direct.value).abs() < 1e-14);
        let e = psi_sum_exponential(&o, &one, 1.0, [0.7, 0.3]).unwrap();
        assert!((e - r.rho_exp * (-(1.0 - r.rho_exp)).exp()).abs() < 1e-14);
    }

    #[test]
    fn sum_formula_depends_on_total_only() {
        let o = fig5();
        let p = [[0.3, 0.6], [0.2, 0.9]];
        let a = psi_sum_homogeneous(&o, &p, [2.0, 0.0], 1e-12).unwrap();
        let b = psi_sum_homogeneous(&o, &p, [0.5, 1.5], 1e-12).unwrap();
        assert!((a.value - b.value).abs() < 1e-14);
    }

    #[test]
    fn weight_constraint_is_enforced() {
        let o = fig5();
        let p = [[0.5; 2]; 2];
        assert!(matches!(psi1_exponential(&o, &p, 0.6, 1.0), Err(Error::WeightConstraintViolated { .. })));
        assert!(matches!(psi_sum_exponential(&o, &p, 1.1, [1.0, 1.0]), Err(Error::WeightConstraintViolated { .. })));
    }

    #[test]
    fn joint_bounds_are_ordered_on_fig5_grid() {
        let o = fig5();
        for p in [0.2, 0.5, 0.8] {
            let pm = [[p; 2]; 2];
            for k in 1..=10 {
                let x = 0.5 * k as f64;
                let b = psi_joint_bounds(&o, &pm, [x, x], 1e-10).unwrap();
                assert!(b.lower <= b.upper_casewise, "p={p} u={x}");
                assert!(b.upper_casewise <= b.upper_global, "p={p} u={x}: {} > {}", b.upper_casewise, b.upper_global);
            }
        }
    }

    #[test]
    fn joint_bounds_do_not_depend_on_object_order() {
        let o = fig5();
        let swapped = vec![o[1].clone(), o[0].clone()];
        let p = [[0.2, 0.7], [0.4, 0.1]];
        let ps = [[0.7, 0.2], [0.1, 0.4]];
        let a = psi_joint_bounds(&o, &p, [1.0, 2.0], 1e-10).unwrap();
        let b = psi_joint_bounds(&swapped, &ps, [1.0, 2.0], 1e-10).unwrap();
        assert!((a.lower - b.lower).abs() < 1e-15 && (a.upper_casewise - b.upper_casewise).abs() < 1e-15);
    }

    #[test]
    fn symmetric_objects_have_equal_single_object_terms() {
        let o = vec![
            ObjectParams::exponential_with_rho(0.5, 1.0, 0.7).unwrap(),
            ObjectParams::exponential_with_rho(0.5, 1.0, 0.7).unwrap(),
        ];
        let p = [[0.4; 2]; 2];
        let b = psi_joint_bounds(&o, &p, [1.0, 1.0], 1e-10).unwrap();
        let single = 0.4 * 0.4 * 0.6 * 0.6 * classic(0.7, 1.0, 2.0);
        assert!((b.lower - 2.0 * single).abs() < 1e-15);
    }
}
