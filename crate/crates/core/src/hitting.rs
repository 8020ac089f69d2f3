//! Hitting probabilities of group sums, obtained by conditioning on the network.
//!
//! Given a realization, the group process `sum_{i in Q} R^i = sum_j s_j V_j` is a
//! compound Poisson process with parameter `P^Q` and ladder-height law `F_I^Q`.
//! Both depend on the realization only through the exposure vector `s`, whose
//! law factorizes over objects; the hitting probability is the expectation of
//! the compound-geometric tail over that law.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{JumpLaw, ObjectParams};
use crate::montecarlo::{self, SimPlan, Target};
use crate::network::{self, AgentSet, NetworkSpec, WeightScheme};
use crate::pk::{self, pk_from_exposure};
use crate::series::{compound_geometric_tail_with, integrated_tail_from_exposure, SeriesOptions};

/// Largest number of distinct exposure vectors evaluated exactly.
pub const MAX_EXPOSURE_STATES: usize = 200_000;

/// A hitting-probability question: group `Q`, barriers aligned with its members.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HittingQuery {
    pub spec: NetworkSpec,
    pub objects: Vec<ObjectParams>,
    pub group: AgentSet,
    pub u: Vec<f64>,
    pub tol: f64,
}

impl HittingQuery {
    pub fn new(spec: NetworkSpec, objects: Vec<ObjectParams>, group: AgentSet, u: Vec<f64>, tol: f64) -> Result<Self> {
        let q = HittingQuery { spec, objects, group, u, tol };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        self.spec.check_objects(&self.objects)?;
        if self.group.is_empty() {
            return Err(Error::EmptyAgentSet);
        }
        if let Some(&i) = self.group.members().iter().find(|&&i| i >= self.spec.q) {
            return Err(Error::AgentOutOfRange { index: i, count: self.spec.q });
        }
        if self.u.len() != self.group.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} barriers given for a group of {}",
                self.u.len(),
                self.group.len()
            )));
        }
        if let Some(b) = self.u.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
            return Err(Error::InvalidParameter(format!("barriers must be nonnegative, got {b}")));
        }
        if !(self.total_barrier() > 0.0) {
            return Err(Error::InvalidParameter("the barriers of the group must not all be zero".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!("tolerance must be positive, got {}", self.tol)));
        }
        Ok(())
    }

    pub fn total_barrier(&self) -> f64 {
        self.u.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HittingMethod {
    /// Conditioning on the network with lattice or closed-form series.
    Exact,
    /// Closed form of the exponential system.
    ClosedForm,
    /// Monte Carlo estimate; `error_bound` is three standard errors plus truncation.
    Estimated,
}

/// Contribution of one exposure vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contribution {
    pub exposure: Vec<f64>,
    pub probability: f64,
    pub pk: f64,
    pub psi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HittingResult {
    pub value: f64,
    pub error_bound: f64,
    pub decomposition: Option<Vec<Contribution>>,
    /// `P(P^Q >= 1)`.
    pub mass_at_certain_hit: f64,
    pub method: HittingMethod,
}

/// Joint law of the exposure vector `s` as `(s, probability)`; zero-probability
/// states are dropped.
pub fn exposure_states(spec: &NetworkSpec, objects: &[ObjectParams], group: &AgentSet) -> Result<Vec<(Vec<f64>, f64)>> {
    let laws = network::exposure_laws(spec, objects, group)?;
    let total: f64 = laws.iter().map(|l| l.len() as f64).product();
    if total > MAX_EXPOSURE_STATES as f64 {
        return Err(Error::EnumerationTooLarge { states: total, limit: MAX_EXPOSURE_STATES as f64 });
    }
    let mut states: Vec<(Vec<f64>, f64)> = vec![(Vec::with_capacity(objects.len()), 1.0)];
    for law in &laws {
        let mut next = Vec::with_capacity(states.len() * law.len());
        for (s, m) in &states {
            for &(x, p) in law {
                if p > 0.0 {
                    let mut v = s.clone();
                    v.push(x);
                    next.push((v, m * p));
                }
            }
        }
        states = next;
    }
    Ok(states)
}

/// Path budget used when an exact evaluation is out of reach.
fn path_budget(tol: f64) -> u64 {
    (0.25 / (tol * tol)).ceil().clamp(10_000.0, 10_000_000.0) as u64
}

/// `Psi^Q` at several totals `sum_i u^i` of the group barriers.
pub fn hitting_sum_levels(
    spec: &NetworkSpec,
    objects: &[ObjectParams],
    group: &AgentSet,
    totals: &[f64],
    tol: f64,
) -> Result<Vec<HittingResult>> {
    spec.validate()?;
    spec.check_objects(objects)?;
    let states = match exposure_states(spec, objects, group) {
        Ok(s) => s,
        Err(Error::EnumerationTooLarge { .. }) => return estimate_levels(spec, objects, group, totals, tol),
        Err(e) => return Err(e),
    };
    let opts = SeriesOptions::with_tol(tol);
    let evaluated: Vec<(f64, Vec<(f64, f64)>)> = states
        .par_iter()
        .map(|(s, _)| -> Result<(f64, Vec<(f64, f64)>)> {
            let pk = pk_from_exposure(s, objects);
            if s.iter().all(|&x| x == 0.0) {
                return Ok((pk, totals.iter().map(|_| (0.0, 0.0)).collect()));
            }
            if pk >= 1.0 {
                return Ok((pk, totals.iter().map(|_| (1.0, 0.0)).collect()));
            }
            let tail = integrated_tail_from_exposure(s, objects)?;
            let vals = compound_geometric_tail_with(pk, &tail, totals, &opts)?;
            Ok((pk, vals.into_iter().map(|v| (v.value, v.error)).collect()))
        })
        .collect::<Result<_>>()?;
    let certain: f64 = states.iter().zip(&evaluated).filter(|(_, e)| e.0 >= 1.0).map(|(s, _)| s.1).sum();
    let out = (0..totals.len())
        .map(|k| {
            let (mut value, mut err) = (0.0, 0.0);
            for ((_, m), (_, vals)) in states.iter().zip(&evaluated) {
                value += m * vals[k].0;
                err += m * vals[k].1;
            }
            HittingResult {
                value: value.clamp(0.0, 1.0),
                error_bound: err,
                decomposition: None,
                mass_at_certain_hit: certain,
                method: HittingMethod::Exact,
            }
        })
        .collect();
    Ok(out)
}

fn estimate_levels(
    spec: &NetworkSpec,
    objects: &[ObjectParams],
    group: &AgentSet,
    totals: &[f64],
    tol: f64,
) -> Result<Vec<HittingResult>> {
    let barriers: Vec<Vec<f64>> = totals
        .iter()
        .map(|&t| {
            let mut u = vec![0.0; group.len()];
            u[0] = t;
            u
        })
        .collect();
    let plan = SimPlan { n_paths: path_budget(tol), ..SimPlan::default() };
    let est = montecarlo::estimate_hitting_grid(spec, objects, group, &[Target::Sum], &barriers, &plan)?;
    Ok(est[0]
        .iter()
        .map(|e| HittingResult {
            value: e.mean,
            error_bound: 3.0 * e.std_error + e.truncation_bound.unwrap_or(f64::INFINITY),
            decomposition: None,
            mass_at_certain_hit: f64::NAN,
            method: HittingMethod::Estimated,
        })
        .collect())
}

/// `Psi^Q(u)`: probability that the group sum ever reaches `sum_{i in Q} u^i`.
///
/// Exposure vectors with `P^Q >= 1` contribute their full mass, isolated groups
/// contribute nothing. The decomposition lists every exposure vector.
pub fn hitting_sum(query: &HittingQuery) -> Result<HittingResult> {
    query.validate()?;
    let total = query.total_barrier();
    let states = match exposure_states(&query.spec, &query.objects, &query.group) {
        Ok(s) => s,
        Err(Error::EnumerationTooLarge { .. }) => {
            return estimate_levels(&query.spec, &query.objects, &query.group, &[total], query.tol)
                .map(|mut v| v.remove(0));
        }
        Err(e) => return Err(e),
    };
    let mut result = hitting_sum_levels(&query.spec, &query.objects, &query.group, &[total], query.tol)?.remove(0);
    let opts = SeriesOptions::with_tol(query.tol);
    let decomposition = states
        .par_iter()
        .map(|(s, m)| -> Result<Contribution> {
            let pk = pk_from_exposure(s, &query.objects);
            let psi = if s.iter().all(|&x| x == 0.0) {
                0.0
            } else if pk >= 1.0 {
                1.0
            } else {
                let tail = integrated_tail_from_exposure(s, &query.objects)?;
                compound_geometric_tail_with(pk, &tail, &[total], &opts)?[0].value
            };
            Ok(Contribution { exposure: s.clone(), probability: *m, pk, psi })
        })
        .collect::<Result<Vec<_>>>()?;
    result.decomposition = Some(decomposition);
    Ok(result)
}

/// Hitting probability of a single agent's level `u_i`.
pub fn hitting_single(spec: &NetworkSpec, objects: &[ObjectParams], i: usize, u_i: f64, tol: f64) -> Result<HittingResult> {
    let group = AgentSet::single(i, spec.q)?;
    let query = HittingQuery::new(spec.clone(), objects.to_vec(), group, vec![u_i], tol)?;
    hitting_sum(&query)
}

/// `f(rho) = rho e^{-(1 - rho) x / r}` for `rho < 1`, and 1 otherwise.
pub fn exponential_system_profile(rho: f64, total: f64, r: f64) -> f64 {
    if rho >= 1.0 {
        1.0
    } else {
        rho * (-(1.0 - rho) * total / r).exp()
    }
}

/// Checks exponential jumps, a common arrival rate and exponential-system weights;
/// returns the group rate `r^Q`.
pub fn exponential_system_rate(spec: &NetworkSpec, objects: &[ObjectParams], group: &AgentSet) -> Result<f64> {
    if !matches!(spec.scheme, WeightScheme::ExponentialSystem { .. }) {
        return Err(Error::ModelMismatch("the network must use exponential-system weights".into()));
    }
    if objects.iter().any(|o| !matches!(o.jump, JumpLaw::Exponential { .. })) {
        return Err(Error::ModelMismatch("the exponential system needs exponential jumps".into()));
    }
    let lambda = objects.first().map_or(1.0, |o| o.lambda);
    if objects.iter().any(|o| (o.lambda - lambda).abs() > 1e-12 * lambda) {
        return Err(Error::ModelMismatch("the exponential system needs a common arrival rate".into()));
    }
    let r = spec
        .scheme
        .exponential_rate(objects, spec.q, group)
        .ok_or_else(|| Error::ModelMismatch("no exponential-system rate".into()))?;
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidParameter(format!("exponential-system rate must be positive, got {r}")));
    }
    Ok(r)
}

/// `Psi^Q(u) = E f(P^Q)` in the exponential system, where every group ladder
/// height is exponential with mean `r^Q`.
pub fn hitting_sum_exponential_system(query: &HittingQuery) -> Result<HittingResult> {
    query.validate()?;
    let r = exponential_system_rate(&query.spec, &query.objects, &query.group)?;
    let dist = pk::pk_distribution_factorized(&query.spec, &query.objects, &query.group)?;
    let total = query.total_barrier();
    let value = dist.expect(|v| if v == 0.0 { 0.0 } else { exponential_system_profile(v, total, r) });
    Ok(HittingResult {
        value: value.clamp(0.0, 1.0),
        error_bound: 0.0,
        decomposition: None,
        mass_at_certain_hit: dist.prob_at_least(1.0),
        method: HittingMethod::ClosedForm,
    })
}

/// `f(rho) P(deg(Q) > 0) + f(0) P(deg(Q) = 0)` when all objects share `rho`.
pub fn hitting_equal_rho<F: Fn(f64) -> f64>(spec: &NetworkSpec, group: &AgentSet, rho: f64, f: F) -> f64 {
    let isolated = spec.prob_isolated(group);
    f(rho) * (1.0 - isolated) + f(0.0) * isolated
}
