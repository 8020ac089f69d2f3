//! Poisson surrogates for the network functional `P^Q` and delta-method moments.
//!
//! Replacing independent edge indicators by independent Poisson variables with
//! the same means changes the law of any function of them by at most
//! `sum p^2` in total variation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ObjectParams;
use crate::network::{AgentSet, NetworkSpec, WeightScheme};

/// Paths per random stream in bulk sampling.
const CHUNK: u64 = 1 << 14;

/// `sum_{i,j} p_{i,j}^2` over every edge of the network.
pub fn tv_bound(spec: &NetworkSpec) -> f64 {
    spec.edge_prob.iter().flatten().map(|p| p * p).sum()
}

/// Which indicators are replaced by Poisson variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurrogateVariant {
    /// Every edge `Z_{i,j} ~ Poisson(p_{i,j})`, weights `Z_{i,j} / sum_s Z_{s,j}`.
    HomogeneousGroup,
    /// Row of the single agent kept, the other agents' degrees of each object
    /// replaced by `Poisson(sum_{s != i} p_{s,j})`.
    HomogeneousSingleAgent,
    /// Link indicators `1{Q ~ j}` replaced by `Poisson(pi_{Q,j})`.
    ExponentialSystem,
}

/// Slot intensities and the total-variation budget of a surrogate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoissonSurrogate {
    pub variant: SurrogateVariant,
    /// Per-slot Poisson means (row-major `q x d` for the group variant, `d` otherwise).
    pub means: Vec<f64>,
    /// Bernoulli probabilities of the kept row (single-agent variant only).
    pub kept_row: Vec<f64>,
    pub tv_budget: f64,
    group: AgentSet,
    q: usize,
    d: usize,
}

impl PoissonSurrogate {
    pub fn new(spec: &NetworkSpec, group: &AgentSet, variant: SurrogateVariant) -> Result<Self> {
        spec.validate()?;
        if group.is_empty() {
            return Err(Error::EmptyAgentSet);
        }
        let (q, d) = (spec.q, spec.d);
        let homogeneous = matches!(spec.scheme, WeightScheme::Homogeneous);
        match variant {
            SurrogateVariant::HomogeneousGroup => {
                if !homogeneous {
                    return Err(Error::ModelMismatch("the homogeneous surrogate needs homogeneous weights".into()));
                }
                let means: Vec<f64> = spec.edge_prob.iter().flatten().copied().collect();
                let tv_budget = means.iter().map(|p| p * p).sum();
                Ok(PoissonSurrogate { variant, means, kept_row: Vec::new(), tv_budget, group: group.clone(), q, d })
            }
            SurrogateVariant::HomogeneousSingleAgent => {
                if !homogeneous {
                    return Err(Error::ModelMismatch("the homogeneous surrogate needs homogeneous weights".into()));
                }
                if group.len() != 1 {
                    return Err(Error::ModelMismatch("the single-agent surrogate needs a one-agent group".into()));
                }
                let i = group.members()[0];
                let means: Vec<f64> = (0..d).map(|j| (0..q).filter(|&s| s != i).map(|s| spec.edge_prob[s][j]).sum()).collect();
                let tv_budget = (0..q)
                    .filter(|&s| s != i)
                    .flat_map(|s| spec.edge_prob[s].iter())
                    .map(|p| p * p)
                    .sum();
                Ok(PoissonSurrogate { variant, means, kept_row: spec.edge_prob[i].clone(), tv_budget, group: group.clone(), q, d })
            }
            SurrogateVariant::ExponentialSystem => {
                if !matches!(spec.scheme, WeightScheme::ExponentialSystem { .. }) {
                    return Err(Error::ModelMismatch("the exponential-system surrogate needs exponential-system weights".into()));
                }
                let means: Vec<f64> = (0..d).map(|j| spec.prob_linked(group, j)).collect();
                let tv_budget = means.iter().map(|p| p * p).sum();
                Ok(PoissonSurrogate { variant, means, kept_row: Vec::new(), tv_budget, group: group.clone(), q, d })
            }
        }
    }

    /// One draw of the surrogate of `P^Q`.
    pub fn sample<R: Rng + ?Sized>(&self, objects: &[ObjectParams], rng: &mut R) -> f64 {
        match self.variant {
            SurrogateVariant::HomogeneousGroup => {
                let z: Vec<u64> = self.means.iter().map(|&m| poisson(m, rng)).collect();
                let in_group = self.group.mask(self.q);
                let (mut num, mut den) = (0.0, 0.0);
                for (j, o) in objects.iter().enumerate() {
                    let col: u64 = (0..self.q).map(|i| z[i * self.d + j]).sum();
                    if col == 0 {
                        continue;
                    }
                    let mine: u64 = (0..self.q).filter(|&i| in_group[i]).map(|i| z[i * self.d + j]).sum();
                    let s = mine as f64 / col as f64;
                    num += s * o.load();
                    den += s * o.drift;
                }
                if den > 0.0 {
                    num / den
                } else {
                    0.0
                }
            }
            SurrogateVariant::HomogeneousSingleAgent => {
                let linked: Vec<bool> = self.kept_row.iter().map(|&p| rng.random::<f64>() < p).collect();
                let z: Vec<u64> = self.means.iter().map(|&m| poisson(m, rng)).collect();
                let (mut num, mut den) = (0.0, 0.0);
                for (j, o) in objects.iter().enumerate() {
                    if linked[j] {
                        let s = 1.0 / (1 + z[j]) as f64;
                        num += s * o.load();
                        den += s * o.drift;
                    }
                }
                if den > 0.0 {
                    num / den
                } else {
                    0.0
                }
            }
            SurrogateVariant::ExponentialSystem => {
                let z: Vec<u64> = self.means.iter().map(|&m| poisson(m, rng)).collect();
                let inv: Vec<f64> = objects.iter().map(|o| 1.0 / o.rho()).collect();
                let weighted: f64 = z.iter().zip(&inv).map(|(&k, r)| k as f64 * r).sum();
                z.iter()
                    .zip(&inv)
                    .filter(|(&k, _)| k > 0)
                    .map(|(&k, &r)| k as f64 / (r + weighted - k as f64 * r))
                    .sum()
            }
        }
    }
}

/// Poisson variate: inversion for small means, a library sampler above.
pub fn poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    if mean < 10.0 {
        let u: f64 = rng.random();
        let mut k = 0u64;
        let mut p = (-mean).exp();
        let mut cdf = p;
        while u > cdf && k < 1000 {
            k += 1;
            p *= mean / k as f64;
            cdf += p;
        }
        k
    } else {
        Poisson::new(mean).expect("positive finite mean").sample(rng) as u64
    }
}

/// One draw of the Poissonized `P^Q`.
pub fn sample_poissonized_pk(
    spec: &NetworkSpec,
    objects: &[ObjectParams],
    group: &AgentSet,
    variant: SurrogateVariant,
    seed: u64,
) -> Result<f64> {
    spec.check_objects(objects)?;
    let s = PoissonSurrogate::new(spec, group, variant)?;
    Ok(s.sample(objects, &mut ChaCha8Rng::seed_from_u64(seed)))
}

/// Sample mean and standard error of `g(surrogate)` over `n` draws.
pub fn surrogate_expectation<G>(
    spec: &NetworkSpec,
    objects: &[ObjectParams],
    group: &AgentSet,
    variant: SurrogateVariant,
    n: u64,
    seed: u64,
    g: G,
) -> Result<(f64, f64)>
where
    G: Fn(f64) -> f64 + Sync,
{
    spec.check_objects(objects)?;
    if n < 2 {
        return Err(Error::InvalidParameter("at least two draws are needed".into()));
    }
    let s = PoissonSurrogate::new(spec, group, variant)?;
    let chunks = n.div_ceil(CHUNK);
    let (sum, sq) = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let len = CHUNK.min(n - c * CHUNK);
            let (mut a, mut b) = (0.0, 0.0);
            for _ in 0..len {
                let v = g(s.sample(objects, &mut rng));
                a += v;
                b += v * v;
            }
            (a, b)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((0.0, 0.0), |acc, x| (acc.0 + x.0, acc.1 + x.1));
    let nf = n as f64;
    let mean = sum / nf;
    let var = ((sq - nf * mean * mean) / (nf - 1.0)).max(0.0);
    Ok((mean, (var / nf).sqrt()))
}

/// `Ein(x) = sum_{k >= 1} x^k / (k k!)`, which equals `Chi(x) + Shi(x) - log x - gamma`.
pub fn ein(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let mut term = 1.0;
    let mut sum = 0.0;
    for k in 1..10_000 {
        term *= x / k as f64;
        let add = term / k as f64;
        sum += add;
        if add.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

/// `(1 - e^{-x}) / x` with its limit 1 at 0.
fn expm1_ratio(x: f64) -> f64 {
    if x < 1e-8 {
        1.0 - 0.5 * x
    } else {
        -(-x).exp_m1() / x
    }
}

/// Delta-method approximation of `E P^i` with per-object diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaMethod {
    pub mean: f64,
    /// Second-order value `sum_j p_{i,j} rho_j (1 / beta + Var S / beta^3)`.
    pub mean_second_order: f64,
    /// `beta_{i,j}`, the mean of `S_{i,j}`.
    pub beta: Vec<f64>,
    /// Exact variance of `S_{i,j}` under the Poisson surrogate.
    pub var_s: Vec<f64>,
    /// Series form of the variance in terms of `Ein`.
    pub var_s_series: Vec<f64>,
}

/// `E P^i ~ sum_j p_{i,j} rho_j / beta_{i,j}` in the homogeneous system.
pub fn delta_method_mean_pk(spec: &NetworkSpec, objects: &[ObjectParams], i: usize) -> Result<DeltaMethod> {
    spec.validate()?;
    spec.check_objects(objects)?;
    if i >= spec.q {
        return Err(Error::AgentOutOfRange { index: i, count: spec.q });
    }
    if !matches!(spec.scheme, WeightScheme::Homogeneous) {
        return Err(Error::ModelMismatch("the delta method applies to homogeneous weights".into()));
    }
    let d = spec.d;
    let p = &spec.edge_prob[i];
    let pi: Vec<f64> = (0..d).map(|k| (0..spec.q).filter(|&s| s != i).map(|s| spec.edge_prob[s][k]).sum()).collect();
    let c: Vec<f64> = objects.iter().map(|o| o.drift).collect();
    let mut beta = vec![0.0; d];
    let mut var_s = vec![0.0; d];
    let mut var_s_series = vec![0.0; d];
    let mut mean = 0.0;
    let mut mean_second_order = 0.0;
    for j in 0..d {
        // S = 1 + (1 + Z_j) Y with Y = sum_{k != j} B_k (c_k / c_j) / (1 + Z_k)
        let (mut ey, mut vy, mut series) = (0.0, 0.0, 0.0);
        for k in (0..d).filter(|&k| k != j) {
            let a = c[k] / c[j];
            let ew = expm1_ratio(pi[k]);
            let ew2 = if pi[k] < 1e-8 { 1.0 - 0.75 * pi[k] } else { (-pi[k]).exp() * ein(pi[k]) / pi[k] };
            ey += p[k] * a * ew;
            vy += a * a * (p[k] * ew2 - p[k] * p[k] * ew * ew);
            let bracket = if pi[k] > 0.0 { ein(pi[k]) - ew * ew } else { -1.0 };
            series += a * a * p[k] * bracket;
        }
        let m1 = 1.0 + pi[j];
        let m2 = 1.0 + 3.0 * pi[j] + pi[j] * pi[j];
        beta[j] = 1.0 + m1 * ey;
        var_s[j] = m2 * (vy + ey * ey) - m1 * m1 * ey * ey;
        var_s_series[j] = pi[j] * pi[j] * series;
        mean += p[j] * objects[j].rho() / beta[j];
        mean_second_order += p[j] * objects[j].rho() * (1.0 / beta[j] + var_s[j] / beta[j].powi(3));
    }
    Ok(DeltaMethod { mean, mean_second_order, beta, var_s, var_s_series })
}
