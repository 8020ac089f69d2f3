//! The network Pollaczek-Khintchine parameter
//! `P^Q = sum_j s_j lambda_j mu_j / sum_j s_j c_j` with `s_j = sum_{i in Q} A^i_j`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ObjectParams;
use crate::network::{self, merge_atoms, AdjacencyRealization, AgentSet, NetworkSpec};

/// Atom-merging tolerance on values of `P^Q`.
pub const ATOM_TOL: f64 = 1e-12;

/// Upper limit on intermediate states in the factorized enumeration.
pub const MAX_FACTORIZED_STATES: usize = 20_000_000;

/// Finite law of `P^Q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PKDistribution {
    /// `(value, probability)`, sorted by value.
    pub atoms: Vec<(f64, f64)>,
    /// `P(deg(Q) = 0)`; included in the mass of the atom at 0.
    pub degzero_mass: f64,
}

impl PKDistribution {
    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().map(|(v, m)| v * m).sum()
    }

    /// `E f(P^Q)`.
    pub fn expect<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.atoms.iter().map(|&(v, m)| f(v) * m).sum()
    }

    pub fn prob_at_least(&self, t: f64) -> f64 {
        self.atoms.iter().filter(|a| a.0 >= t).map(|a| a.1).sum()
    }
}

/// Unconditional and `deg(Q) > 0`-conditional moments of `P^Q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PkMoments {
    pub cond_mean: f64,
    pub cond_var: f64,
    pub mean: f64,
    pub var: f64,
    pub prob_at_least_one: f64,
}

impl PkMoments {
    pub fn cond_sd(&self) -> f64 {
        self.cond_var.max(0.0).sqrt()
    }
}

/// `P^Q` for one realization (0 when the group carries no weight).
pub fn pk_value(real: &AdjacencyRealization, objects: &[ObjectParams], group: &AgentSet) -> f64 {
    pk_from_exposure(&real.group_exposure(group), objects)
}

/// `P^Q` from the exposure vector `s`.
pub fn pk_from_exposure(s: &[f64], objects: &[ObjectParams]) -> f64 {
    let (num, den) = s.iter().zip(objects).fold((0.0, 0.0), |(n, d), (&sj, o)| (n + sj * o.load(), d + sj * o.drift));
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// Exact law of `P^Q` by full enumeration of the network.
pub fn pk_distribution(spec: &NetworkSpec, objects: &[ObjectParams], group: &AgentSet) -> Result<PKDistribution> {
    let all = network::enumerate(spec, objects, group)?;
    let atoms = all
        .iter()
        .map(|r| (pk_value(r, objects, group), r.probability.unwrap_or(0.0)))
        .collect();
    Ok(PKDistribution { atoms: merge_atoms(atoms, ATOM_TOL), degzero_mass: spec.prob_isolated(group) })
}

/// Exact law of `P^Q` as a product over the independent per-object exposures.
pub fn pk_distribution_factorized(
    spec: &NetworkSpec,
    objects: &[ObjectParams],
    group: &AgentSet,
) -> Result<PKDistribution> {
    let laws = network::exposure_laws(spec, objects, group)?;
    // states are (numerator, denominator, mass)
    let mut states: Vec<(f64, f64, f64)> = vec![(0.0, 0.0, 1.0)];
    for (j, law) in laws.iter().enumerate() {
        let o = &objects[j];
        let projected = states.len().saturating_mul(law.len());
        if projected > MAX_FACTORIZED_STATES {
            return Err(Error::EnumerationTooLarge { states: projected as f64, limit: MAX_FACTORIZED_STATES as f64 });
        }
        let mut next = Vec::with_capacity(projected);
        for &(n, d, m) in &states {
            for &(s, p) in law {
                next.push((n + s * o.load(), d + s * o.drift, m * p));
            }
        }
        states = merge_pairs(next);
    }
    let atoms = states
        .into_iter()
        .map(|(n, d, m)| (if d > 0.0 { n / d } else { 0.0 }, m))
        .collect();
    Ok(PKDistribution { atoms: merge_atoms(atoms, ATOM_TOL), degzero_mass: spec.prob_isolated(group) })
}

fn merge_pairs(mut v: Vec<(f64, f64, f64)>) -> Vec<(f64, f64, f64)> {
    v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let close = |x: f64, y: f64| (x - y).abs() <= ATOM_TOL * x.abs().max(1.0);
    let mut out: Vec<(f64, f64, f64)> = Vec::with_capacity(v.len());
    for (n, d, m) in v {
        match out.last_mut() {
            Some(last) if close(last.0, n) && close(last.1, d) => last.2 += m,
            _ => out.push((n, d, m)),
        }
    }
    out
}

/// Moments of `P^Q`, unconditionally and given `deg(Q) > 0`.
pub fn conditional_moments(dist: &PKDistribution) -> Result<PkMoments> {
    let mean = dist.mean();
    let second: f64 = dist.atoms.iter().map(|(v, m)| v * v * m).sum();
    let var = (second - mean * mean).max(0.0);
    // mass of deg(Q) > 0: nonzero atoms plus whatever of the zero atom is not isolation
    let zero_mass: f64 = dist.atoms.iter().filter(|a| a.0 == 0.0).map(|a| a.1).sum();
    let nonzero: f64 = dist.atoms.iter().filter(|a| a.0 != 0.0).map(|a| a.1).sum();
    let cond_mass = nonzero + (zero_mass - dist.degzero_mass).max(0.0);
    if cond_mass <= 0.0 || dist.degzero_mass >= 1.0 {
        return Err(Error::DegenerateConditioning);
    }
    let cond_mean = mean / cond_mass;
    let cond_second = second / cond_mass;
    let cond_var = (cond_second - cond_mean * cond_mean).max(0.0);
    Ok(PkMoments { cond_mean, cond_var, mean, var, prob_at_least_one: dist.prob_at_least(1.0) })
}

/// Conditional law of `P^Q` given `deg(Q) > 0` as all edge probabilities
/// vanish: uniform on the object parameters `rho_j`.
pub fn small_p_limit(objects: &[ObjectParams]) -> PKDistribution {
    let d = objects.len() as f64;
    let atoms = objects.iter().map(|o| (o.rho(), 1.0 / d)).collect();
    PKDistribution { atoms: merge_atoms(atoms, ATOM_TOL), degzero_mass: 0.0 }
}

/// Envelope `[min rho_j, max rho_j]` and Markov bound on `P(P^Q >= t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub min_rho: f64,
    pub max_rho: f64,
    pub markov_bound: f64,
}

pub fn envelope_and_markov(objects: &[ObjectParams], spec: &NetworkSpec, group: &AgentSet, t: f64) -> Result<Envelope> {
    spec.check_objects(objects)?;
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("threshold must be positive, got {t}")));
    }
    let rhos: Vec<f64> = objects.iter().map(ObjectParams::rho).collect();
    let min_rho = rhos.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_rho = rhos.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let markov: f64 = rhos.iter().enumerate().map(|(j, r)| spec.prob_linked(group, j) * r).sum::<f64>() / t;
    Ok(Envelope { min_rho, max_rho, markov_bound: markov })
}

/// How a set of moments was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MomentSource {
    Exact,
    /// Monte Carlo over sampled networks; standard errors of `(mean, cond_mean)`.
    Estimated { se_mean: f64, se_cond_mean: f64, n: usize },
}

/// Moments of `P^Q`: exact when the factorized enumeration fits, otherwise
/// estimated from `mc_samples` sampled networks.
pub fn pk_moments_auto(
    spec: &NetworkSpec,
    objects: &[ObjectParams],
    group: &AgentSet,
    mc_samples: usize,
    seed: u64,
) -> Result<(PkMoments, MomentSource)> {
    match pk_distribution_factorized(spec, objects, group) {
        Ok(dist) => Ok((conditional_moments(&dist)?, MomentSource::Exact)),
        Err(Error::EnumerationTooLarge { .. }) => {
            let est = crate::montecarlo::estimate_pk_moments(spec, objects, group, mc_samples, seed)?;
            Ok((
                est.moments,
                MomentSource::Estimated { se_mean: est.se_mean, se_cond_mean: est.se_cond_mean, n: mc_samples },
            ))
        }
        Err(e) => Err(e),
    }
}
