//! Random bipartite networks between agents and objects.
//!
//! Edges are independent with probability `p_{i,j}`. A realization carries the
//! 0/1 indicator matrix together with the weight matrix `A^i_j`, which must
//! satisfy `sum_i A^i_j <= 1` for every object.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ObjectParams;

/// Maximum number of free (non-forced) edges for full enumeration.
pub const MAX_FREE_EDGES: usize = 22;

pub const WEIGHT_SLACK: f64 = 1e-12;

/// A nonempty, sorted set of 0-based agent indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AgentSet(Vec<usize>);

impl AgentSet {
    pub fn new(mut members: Vec<usize>, q: usize) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::EmptyAgentSet);
        }
        members.sort_unstable();
        members.dedup();
        if let Some(&bad) = members.iter().find(|&&i| i >= q) {
            return Err(Error::AgentOutOfRange { index: bad, count: q });
        }
        Ok(AgentSet(members))
    }

    pub fn single(i: usize, q: usize) -> Result<Self> {
        Self::new(vec![i], q)
    }

    pub fn all(q: usize) -> Result<Self> {
        Self::new((0..q).collect(), q)
    }

    pub fn members(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    /// Membership mask of length `q`.
    pub fn mask(&self, q: usize) -> Vec<bool> {
        let mut m = vec![false; q];
        for &i in &self.0 {
            if i < q {
                m[i] = true;
            }
        }
        m
    }
}

/// How realized edges are turned into weights `A^i_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightScheme {
    /// `A^i_j = 1{i~j} / deg(j)`: each object is split equally.
    Homogeneous,
    /// `A^i_j = 1{i~j} 1{Q~j} r / (deg_Q(j) mu_j)` for the queried group `Q`.
    ExponentialSystem { r: Option<f64> },
    /// `A^i_j = 1{i~j} k / (lambda_j mu_j)`.
    InverseExpectedLoss { k: Option<f64> },
    /// `A^i_j = 1{i~j} scale / c_j`.
    InverseDrift { scale: Option<f64> },
    /// `A^i_j = 1{i~j} W^i_j` for a fixed matrix `W`.
    Custom { weights: Vec<Vec<f64>> },
}

/// Default group rate for the exponential system: the largest `r` keeping
/// column sums at most one in every realization.
pub fn default_exponential_rate(objects: &[ObjectParams], q: usize, group_size: usize) -> f64 {
    let min_mu = objects.iter().map(|o| o.mean_jump()).fold(f64::INFINITY, f64::min);
    min_mu / (q - group_size + 1) as f64
}

/// Default `k` for inverse-expected-loss weights: `min_j lambda_j mu_j / q`.
pub fn default_loss_constant(objects: &[ObjectParams], q: usize) -> f64 {
    objects.iter().map(|o| o.load()).fold(f64::INFINITY, f64::min) / q as f64
}

/// Default scale for inverse-drift weights: `min_j c_j / q`.
pub fn default_drift_scale(objects: &[ObjectParams], q: usize) -> f64 {
    objects.iter().map(|o| o.drift).fold(f64::INFINITY, f64::min) / q as f64
}

impl WeightScheme {
    /// Resolved exponential-system rate for the given group.
    pub fn exponential_rate(&self, objects: &[ObjectParams], q: usize, group: &AgentSet) -> Option<f64> {
        match self {
            WeightScheme::ExponentialSystem { r } => {
                Some(r.unwrap_or_else(|| default_exponential_rate(objects, q, group.len())))
            }
            _ => None,
        }
    }
}

/// Independent-edge network model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub q: usize,
    pub d: usize,
    pub edge_prob: Vec<Vec<f64>>,
    pub scheme: WeightScheme,
}

impl NetworkSpec {
    pub fn new(q: usize, d: usize, edge_prob: Vec<Vec<f64>>, scheme: WeightScheme) -> Result<Self> {
        let spec = NetworkSpec { q, d, edge_prob, scheme };
        spec.validate()?;
        Ok(spec)
    }

    /// Bernoulli network: every edge present with the same probability.
    pub fn bernoulli(q: usize, d: usize, p: f64, scheme: WeightScheme) -> Result<Self> {
        Self::new(q, d, vec![vec![p; d]; q], scheme)
    }

    pub fn complete(q: usize, d: usize, scheme: WeightScheme) -> Result<Self> {
        Self::bernoulli(q, d, 1.0, scheme)
    }

    pub fn validate(&self) -> Result<()> {
        if self.q == 0 || self.d == 0 {
            return Err(Error::InvalidParameter("network needs at least one agent and one object".into()));
        }
        if self.edge_prob.len() != self.q || self.edge_prob.iter().any(|row| row.len() != self.d) {
            return Err(Error::DimensionMismatch(format!("edge probabilities must be a {}x{} matrix", self.q, self.d)));
        }
        for (i, row) in self.edge_prob.iter().enumerate() {
            for (j, &p) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::InvalidParameter(format!("edge probability p[{i}][{j}] = {p} is outside [0, 1]")));
                }
            }
        }
        let positive = |x: f64| x.is_finite() && x > 0.0;
        match &self.scheme {
            WeightScheme::ExponentialSystem { r: Some(r) } if !positive(*r) => {
                return Err(Error::InvalidParameter(format!("exponential-system rate must be positive, got {r}")))
            }
            WeightScheme::InverseExpectedLoss { k: Some(k) } if !positive(*k) => {
                return Err(Error::InvalidParameter(format!("loss constant must be positive, got {k}")))
            }
            WeightScheme::InverseDrift { scale: Some(s) } if !positive(*s) => {
                return Err(Error::InvalidParameter(format!("drift scale must be positive, got {s}")))
            }
            WeightScheme::Custom { weights } => {
                if weights.len() != self.q || weights.iter().any(|row| row.len() != self.d) {
                    return Err(Error::DimensionMismatch(format!("custom weights must be a {}x{} matrix", self.q, self.d)));
                }
                if weights.iter().flatten().any(|w| !(w.is_finite() && (0.0..=1.0).contains(w))) {
                    return Err(Error::InvalidParameter("custom weights must lie in [0, 1]".into()));
                }
            }
            _ => {}
        }
        Ok(())
    }

    pub fn p(&self, i: usize, j: usize) -> f64 {
        self.edge_prob[i][j]
    }

    /// Checks that the object list matches this network.
    pub fn check_objects(&self, objects: &[ObjectParams]) -> Result<()> {
        if objects.len() != self.d {
            return Err(Error::DimensionMismatch(format!("{} objects given for a network with {} objects", objects.len(), self.d)));
        }
        objects.iter().try_for_each(|o| o.validate())
    }

    /// `P(deg(Q) = 0) = prod_{i in Q} prod_j (1 - p_{i,j})`.
    pub fn prob_isolated(&self, group: &AgentSet) -> f64 {
        group
            .members()
            .iter()
            .map(|&i| self.edge_prob[i].iter().map(|p| 1.0 - p).product::<f64>())
            .product()
    }

    /// `P(Q ~ j) = 1 - prod_{i in Q} (1 - p_{i,j})`.
    pub fn prob_linked(&self, group: &AgentSet, j: usize) -> f64 {
        1.0 - group.members().iter().map(|&i| 1.0 - self.edge_prob[i][j]).product::<f64>()
    }

    /// Number of edges whose probability is strictly between 0 and 1.
    pub fn free_edges(&self) -> usize {
        self.edge_prob.iter().flatten().filter(|&&p| p > 0.0 && p < 1.0).count()
    }
}

/// One realized network.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjacencyRealization {
    pub indicator: Vec<Vec<bool>>,
    pub weights: Vec<Vec<f64>>,
    pub probability: Option<f64>,
}

impl AdjacencyRealization {
    /// Group exposure `s_j = sum_{i in Q} A^i_j` for every object.
    pub fn group_exposure(&self, group: &AgentSet) -> Vec<f64> {
        let d = self.weights.first().map_or(0, Vec::len);
        (0..d)
            .map(|j| group.members().iter().map(|&i| self.weights[i][j]).sum())
            .collect()
    }
}

/// Degree summary of a realization relative to a group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Degrees {
    pub agent: Vec<usize>,
    pub object: Vec<usize>,
    pub group: usize,
    pub linked: Vec<bool>,
}

pub fn degrees(real: &AdjacencyRealization, group: &AgentSet) -> Degrees {
    let ind = &real.indicator;
    let q = ind.len();
    let d = ind.first().map_or(0, Vec::len);
    let agent: Vec<usize> = ind.iter().map(|row| row.iter().filter(|&&e| e).count()).collect();
    let object: Vec<usize> = (0..d).map(|j| (0..q).filter(|&i| ind[i][j]).count()).collect();
    let group_deg = group.members().iter().map(|&i| agent[i]).sum();
    let linked = (0..d).map(|j| group.members().iter().any(|&i| ind[i][j])).collect();
    Degrees { agent, object, group: group_deg, linked }
}

/// Turns an indicator matrix into weights under `scheme`, verifying column sums.
pub fn apply_weights(
    indicator: &[Vec<bool>],
    scheme: &WeightScheme,
    objects: &[ObjectParams],
    group: &AgentSet,
) -> Result<Vec<Vec<f64>>> {
    let q = indicator.len();
    let d = objects.len();
    if indicator.iter().any(|row| row.len() != d) {
        return Err(Error::DimensionMismatch(format!("indicator rows must have {d} entries")));
    }
    let mut w = vec![vec![0.0; d]; q];
    for j in 0..d {
        let deg = (0..q).filter(|&i| indicator[i][j]).count();
        if deg == 0 {
            continue;
        }
        match scheme {
            WeightScheme::Homogeneous => {
                for i in 0..q {
                    if indicator[i][j] {
                        w[i][j] = 1.0 / deg as f64;
                    }
                }
            }
            WeightScheme::ExponentialSystem { r } => {
                let r = r.unwrap_or_else(|| default_exponential_rate(objects, q, group.len()));
                let deg_q = group.members().iter().filter(|&&i| indicator[i][j]).count();
                if deg_q > 0 {
                    let wj = r / (deg_q as f64 * objects[j].mean_jump());
                    for i in 0..q {
                        if indicator[i][j] {
                            w[i][j] = wj;
                        }
                    }
                }
            }
            WeightScheme::InverseExpectedLoss { k } => {
                let k = k.unwrap_or_else(|| default_loss_constant(objects, q));
                let wj = k / objects[j].load();
                for i in 0..q {
                    if indicator[i][j] {
                        w[i][j] = wj;
                    }
                }
            }
            WeightScheme::InverseDrift { scale } => {
                let s = scale.unwrap_or_else(|| default_drift_scale(objects, q));
                let wj = s / objects[j].drift;
                for i in 0..q {
                    if indicator[i][j] {
                        w[i][j] = wj;
                    }
                }
            }
            WeightScheme::Custom { weights } => {
                for i in 0..q {
                    if indicator[i][j] {
                        w[i][j] = weights[i][j];
                    }
                }
            }
        }
        let sum: f64 = (0..q).map(|i| w[i][j]).sum();
        if sum > 1.0 + WEIGHT_SLACK {
            return Err(Error::WeightConstraintViolated { object: j, sum });
        }
    }
    Ok(w)
}

/// Draws one network realization from `rng`.
pub fn sample_with<R: Rng + ?Sized>(
    spec: &NetworkSpec,
    objects: &[ObjectParams],
    group: &AgentSet,
    rng: &mut R,
) -> Result<AdjacencyRealization> {
    let indicator: Vec<Vec<bool>> = spec
        .edge_prob
        .iter()
        .map(|row| row.iter().map(|&p| rng.random::<f64>() < p).collect())
        .collect();
    let weights = apply_weights(&indicator, &spec.scheme, objects, group)?;
    Ok(AdjacencyRealization { indicator, weights, probability: None })
}

/// Draws one network realization, reproducibly from `seed`.
pub fn sample(spec: &NetworkSpec, objects: &[ObjectParams], group: &AgentSet, seed: u64) -> Result<AdjacencyRealization> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_with(spec, objects, group, &mut rng)
}

/// All realizations with positive probability, in a fixed order.
///
/// Free edges are visited in row-major order and act as the bits of a
/// counter, the first free edge being the least significant bit.
pub fn enumerate(spec: &NetworkSpec, objects: &[ObjectParams], group: &AgentSet) -> Result<Vec<AdjacencyRealization>> {
    spec.validate()?;
    spec.check_objects(objects)?;
    let free: Vec<(usize, usize)> = (0..spec.q)
        .flat_map(|i| (0..spec.d).map(move |j| (i, j)))
        .filter(|&(i, j)| {
            let p = spec.edge_prob[i][j];
            p > 0.0 && p < 1.0
        })
        .collect();
    if free.len() > MAX_FREE_EDGES {
        return Err(Error::EnumerationTooLarge {
            states: 2f64.powi(free.len() as i32),
            limit: 2f64.powi(MAX_FREE_EDGES as i32),
        });
    }
    let base: Vec<Vec<bool>> = spec
        .edge_prob
        .iter()
        .map(|row| row.iter().map(|&p| p >= 1.0).collect())
        .collect();
    let mut out = Vec::with_capacity(1 << free.len());
    for mask in 0u64..(1u64 << free.len()) {
        let mut indicator = base.clone();
        let mut prob = 1.0;
        for (bit, &(i, j)) in free.iter().enumerate() {
            let p = spec.edge_prob[i][j];
            if mask >> bit & 1 == 1 {
                indicator[i][j] = true;
                prob *= p;
            } else {
                prob *= 1.0 - p;
            }
        }
        let weights = apply_weights(&indicator, &spec.scheme, objects, group)?;
        out.push(AdjacencyRealization { indicator, weights, probability: Some(prob) });
    }
    Ok(out)
}

/// Distribution of the group exposure `s_j = sum_{i in Q} A^i_j` of one object.
///
/// Every built-in scheme makes column `j` of `A` a function of column `j` of the
/// indicator matrix alone, so the exposures of different objects are independent.
/// Atoms are `(s_j, probability)`, sorted by `s_j`, zero-probability atoms dropped.
pub fn column_exposure_law(
    spec: &NetworkSpec,
    objects: &[ObjectParams],
    group: &AgentSet,
    j: usize,
) -> Result<Vec<(f64, f64)>> {
    let q = spec.q;
    let in_group = group.mask(q);
    let mut atoms: Vec<(f64, f64)> = Vec::new();
    match &spec.scheme {
        WeightScheme::Custom { weights } => {
            let worst: f64 = (0..q).filter(|&i| spec.edge_prob[i][j] > 0.0).map(|i| weights[i][j]).sum();
            if worst > 1.0 + WEIGHT_SLACK {
                return Err(Error::WeightConstraintViolated { object: j, sum: worst });
            }
            let members = group.members();
            if members.len() > 24 {
                return Err(Error::EnumerationTooLarge { states: 2f64.powi(members.len() as i32), limit: 2f64.powi(24) });
            }
            for mask in 0u32..(1u32 << members.len()) {
                let mut prob = 1.0;
                let mut s = 0.0;
                for (b, &i) in members.iter().enumerate() {
                    let p = spec.edge_prob[i][j];
                    if mask >> b & 1 == 1 {
                        prob *= p;
                        s += weights[i][j];
                    } else {
                        prob *= 1.0 - p;
                    }
                }
                if prob > 0.0 {
                    atoms.push((s, prob));
                }
            }
        }
        scheme => {
            // Poisson-binomial law of (deg_Q(j), deg(j) - deg_Q(j)).
            let nq = group.len();
            let nr = q - nq;
            let mut table = vec![vec![0.0; nr + 1]; nq + 1];
            table[0][0] = 1.0;
            let (mut aq, mut ar) = (0usize, 0usize);
            for i in 0..q {
                let p = spec.edge_prob[i][j];
                let mut next = vec![vec![0.0; nr + 1]; nq + 1];
                for a in 0..=aq {
                    for b in 0..=ar {
                        let m = table[a][b];
                        if m == 0.0 {
                            continue;
                        }
                        if in_group[i] {
                            next[a][b] += m * (1.0 - p);
                            next[a + 1][b] += m * p;
                        } else {
                            next[a][b] += m * (1.0 - p);
                            next[a][b + 1] += m * p;
                        }
                    }
                }
                if in_group[i] {
                    aq += 1;
                } else {
                    ar += 1;
                }
                table = next;
            }
            let obj = &objects[j];
            for (a, row) in table.iter().enumerate() {
                for (b, &prob) in row.iter().enumerate() {
                    if prob <= 0.0 {
                        continue;
                    }
                    let deg = a + b;
                    let (s, col_sum) = match scheme {
                        WeightScheme::Homogeneous => {
                            if deg == 0 {
                                (0.0, 0.0)
                            } else {
                                (a as f64 / deg as f64, 1.0)
                            }
                        }
                        WeightScheme::ExponentialSystem { r } => {
                            let r = r.unwrap_or_else(|| default_exponential_rate(objects, q, nq));
                            if a == 0 {
                                (0.0, 0.0)
                            } else {
                                let w = r / (a as f64 * obj.mean_jump());
                                (a as f64 * w, deg as f64 * w)
                            }
                        }
                        WeightScheme::InverseExpectedLoss { k } => {
                            let w = k.unwrap_or_else(|| default_loss_constant(objects, q)) / obj.load();
                            (a as f64 * w, deg as f64 * w)
                        }
                        WeightScheme::InverseDrift { scale } => {
                            let w = scale.unwrap_or_else(|| default_drift_scale(objects, q)) / obj.drift;
                            (a as f64 * w, deg as f64 * w)
                        }
                        WeightScheme::Custom { .. } => unreachable!(),
                    };
                    if col_sum > 1.0 + WEIGHT_SLACK {
                        return Err(Error::WeightConstraintViolated { object: j, sum: col_sum });
                    }
                    atoms.push((s, prob));
                }
            }
        }
    }
    Ok(merge_atoms(atoms, 1e-12))
}

/// Sorts `(value, mass)` pairs and merges values closer than `tol` (relative
/// to `max(1, |value|)`).
pub(crate) fn merge_atoms(mut atoms: Vec<(f64, f64)>, tol: f64) -> Vec<(f64, f64)> {
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
    for (v, m) in atoms {
        match out.last_mut() {
            Some(last) if (v - last.0).abs() <= tol * last.0.abs().max(1.0) => last.1 += m,
            _ => out.push((v, m)),
        }
    }
    out
}

/// Exposure laws of all objects.
pub fn exposure_laws(spec: &NetworkSpec, objects: &[ObjectParams], group: &AgentSet) -> Result<Vec<Vec<(f64, f64)>>> {
    spec.validate()?;
    spec.check_objects(objects)?;
    (0..spec.d).map(|j| column_exposure_law(spec, objects, group, j)).collect()
}

/// Largest realizable weight `A^i_j` of agent `i` over all objects and realizations.
pub fn max_weight(spec: &NetworkSpec, objects: &[ObjectParams], group: &AgentSet, i: usize) -> Result<f64> {
    spec.check_objects(objects)?;
    let q = spec.q;
    let mut best: f64 = 0.0;
    for j in 0..spec.d {
        if spec.edge_prob[i][j] <= 0.0 {
            continue;
        }
        let forced_others = (0..q).filter(|&k| k != i && spec.edge_prob[k][j] >= 1.0).count();
        let w = match &spec.scheme {
            WeightScheme::Homogeneous => 1.0 / (1 + forced_others) as f64,
            WeightScheme::ExponentialSystem { r } => {
                let r = r.unwrap_or_else(|| default_exponential_rate(objects, q, group.len()));
                // smallest deg_Q(j) compatible with i present
                let forced_group = (0..q)
                    .filter(|&k| k != i && group.contains(k) && spec.edge_prob[k][j] >= 1.0)
                    .count();
                let min_dq = if group.contains(i) { 1 + forced_group } else { forced_group.max(1) };
                r / (min_dq as f64 * objects[j].mean_jump())
            }
            WeightScheme::InverseExpectedLoss { k } => {
                k.unwrap_or_else(|| default_loss_constant(objects, q)) / objects[j].load()
            }
            WeightScheme::InverseDrift { scale } => {
                scale.unwrap_or_else(|| default_drift_scale(objects, q)) / objects[j].drift
            }
            WeightScheme::Custom { weights } => weights[i][j],
        };
        best = best.max(w);
    }
    Ok(best)
}
