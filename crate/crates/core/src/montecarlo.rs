//! Event-driven simulation of network-aggregated compound Poisson processes.
//!
//! Each path samples a network, then merges the jump epochs of all objects into
//! one sequence at total rate `sum_j lambda_j`. Between epochs every aggregated
//! component only decreases, so targets are checked at time 0 and right after
//! each jump. A path stops once all of its levels are hit, once a Lundberg
//! drawdown bound makes a later hit unlikely (probability at most `epsilon / 2`),
//! or at a horizon beyond which a hit has probability at most `epsilon / 2`.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hitting::{exposure_states, HittingQuery};
use crate::lundberg::{adjustment_coefficient_for_exposure, aggregated_cumulant, aggregated_cumulant_root, KAPPA_TOL};
use crate::model::{JumpLaw, ObjectParams};
use crate::network::{apply_weights, degrees, sample_with, AgentSet, NetworkSpec};
use crate::pk::{pk_from_exposure, pk_value, PkMoments};

/// Paths simulated per random stream.
pub const CHUNK_PATHS: u64 = 4096;

/// What a path is checked against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    /// The group sum reaches the sum of the barriers.
    Sum,
    /// One agent (a member of the group) reaches its own barrier.
    Single(usize),
    /// Every group member is at or above its barrier at the same time.
    Joint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimPlan {
    pub n_paths: u64,
    /// Fixed horizon; `None` picks a certified horizon per realization.
    pub horizon: Option<f64>,
    /// Target truncation error, split between drawdown stopping and the horizon.
    pub epsilon: f64,
    pub seed: u64,
    pub antithetic: bool,
    pub target: Target,
}

impl Default for SimPlan {
    fn default() -> Self {
        SimPlan { n_paths: 100_000, horizon: None, epsilon: 1e-4, seed: 0, antithetic: false, target: Target::Sum }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    /// Bound on the probability lost to truncation; `None` if not certified.
    pub truncation_bound: Option<f64>,
    pub n_paths: u64,
    pub hits: u64,
}

/// Random uniforms with optional recording and antithetic replay.
struct Stream<'a> {
    rng: &'a mut ChaCha8Rng,
    tape: &'a mut Vec<f64>,
    mode: Mode,
}

#[derive(Clone, Copy)]
enum Mode {
    Plain,
    Record,
    Replay(usize),
}

impl Stream<'_> {
    /// Uniform on the open interval `(0, 1)`.
    fn uniform(&mut self) -> f64 {
        match self.mode {
            Mode::Plain => fresh(self.rng),
            Mode::Record => {
                let u = fresh(self.rng);
                self.tape.push(u);
                u
            }
            Mode::Replay(pos) => {
                if pos < self.tape.len() {
                    self.mode = Mode::Replay(pos + 1);
                    1.0 - self.tape[pos]
                } else {
                    fresh(self.rng)
                }
            }
        }
    }
}

fn fresh(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// Inversion samplers; empirical laws use the alias method.
#[derive(Debug, Clone)]
enum JumpSampler {
    Exponential(f64),
    Erlang(u32, f64),
    Deterministic(f64),
    Alias { step: f64, prob: Vec<f64>, alias: Vec<usize> },
}

impl JumpSampler {
    fn new(law: &JumpLaw) -> Self {
        match law {
            JumpLaw::Exponential { mean } => JumpSampler::Exponential(*mean),
            JumpLaw::Erlang { shape, mean } => JumpSampler::Erlang(*shape, mean / *shape as f64),
            JumpLaw::Deterministic { value } => JumpSampler::Deterministic(*value),
            JumpLaw::Empirical { step, masses } => {
                let (prob, alias) = alias_table(masses);
                JumpSampler::Alias { step: *step, prob, alias }
            }
        }
    }

    fn sample(&self, s: &mut Stream) -> f64 {
        match self {
            JumpSampler::Exponential(m) => -m * s.uniform().ln(),
            JumpSampler::Erlang(k, scale) => (0..*k).map(|_| -scale * s.uniform().ln()).sum(),
            JumpSampler::Deterministic(v) => *v,
            JumpSampler::Alias { step, prob, alias } => {
                let x = s.uniform() * prob.len() as f64;
                let i = (x as usize).min(prob.len() - 1);
                let k = if x - (i as f64) < prob[i] { i } else { alias[i] };
                (k + 1) as f64 * step
            }
        }
    }
}

/// Walker's alias table for a finite law.
fn alias_table(masses: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let n = masses.len();
    let total: f64 = masses.iter().sum();
    let mut scaled: Vec<f64> = masses.iter().map(|m| m * n as f64 / total).collect();
    let mut alias: Vec<usize> = (0..n).collect();
    let mut prob = vec![1.0; n];
    let (mut small, mut large): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| scaled[i] < 1.0);
    while let (Some(s), Some(&l)) = (small.pop(), large.last()) {
        prob[s] = scaled[s];
        alias[s] = l;
        scaled[l] -= 1.0 - scaled[s];
        if scaled[l] < 1.0 {
            large.pop();
            small.push(l);
        }
    }
    (prob, alias)
}

/// Lundberg data of one aggregated process `sum_j s_j V_j`.
#[derive(Debug, Clone, Copy)]
struct Decay {
    kappa: f64,
    /// Minimizer of the cumulant on `(0, kappa)` and its (negative) value.
    theta: f64,
    psi: f64,
}

fn decay(s: &[f64], objects: &[ObjectParams]) -> Option<Decay> {
    if s.iter().all(|&x| x == 0.0) || pk_from_exposure(s, objects) >= 1.0 {
        return None;
    }
    let kappa = adjustment_coefficient_for_exposure(s, objects, KAPPA_TOL)
        .or_else(|_| aggregated_cumulant_root(s, objects, KAPPA_TOL))
        .ok()?;
    let f = |t: f64| aggregated_cumulant(s, objects, t).unwrap_or(f64::INFINITY);
    // golden-section search on the convex cumulant
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (0.0, kappa);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..100 {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        }
    }
    let theta = 0.5 * (a + b);
    let psi = f(theta);
    if !(psi < 0.0) {
        return None;
    }
    Some(Decay { kappa, theta, psi })
}

impl Decay {
    /// Horizon after which a first hit of `level` has probability at most `eps`.
    fn horizon(&self, level: f64, eps: f64) -> f64 {
        let dl = (2.0 / eps).ln();
        let a = (dl / self.kappa - level).max(0.0);
        (self.theta * a + dl) / (-self.psi)
    }

    /// Bound on the probability of a first hit of `level` after time `t`:
    /// `min_a e^{theta a + t psi} + e^{-kappa (level + a)}`.
    fn tail_after(&self, level: f64, t: f64) -> f64 {
        let la = t * self.psi;
        let lb = -self.kappa * level;
        let a = ((self.kappa / self.theta).ln() + lb - la) / (self.theta + self.kappa);
        let a = a.max(0.0);
        ((self.theta * a + la).exp() + (lb - self.kappa * a).exp()).min(1.0)
    }

    /// Gap below the level beyond which a later hit has probability at most `eps`.
    fn drawdown(&self, eps: f64) -> f64 {
        (1.0 / eps).ln() / self.kappa
    }
}

/// Horizon and the truncation bound it certifies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Horizon {
    pub time: f64,
    /// `None` when some realization has no adjustment coefficient.
    pub certified_bound: Option<f64>,
}

/// A horizon `T` with `P(first hit of sum_i u^i after T) <= epsilon`, uniformly
/// over the realizations of the network.
pub fn choose_horizon(query: &HittingQuery, epsilon: f64) -> Result<Horizon> {
    query.validate()?;
    if epsilon >= 1.0 {
        return Ok(Horizon { time: 0.0, certified_bound: Some(1.0) });
    }
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
    }
    let total = query.total_barrier();
    let mut time: f64 = 0.0;
    let mut certified = true;
    for (s, _) in exposure_states(&query.spec, &query.objects, &query.group)? {
        if s.iter().all(|&x| x == 0.0) {
            continue;
        }
        match decay(&s, &query.objects) {
            Some(d) => time = time.max(d.horizon(total, epsilon)),
            None => {
                certified = false;
                time = time.max(fallback_horizon(&s, &query.objects, total, None));
            }
        }
    }
    if !certified {
        return Err(Error::NoAdjustmentCoefficient(format!(
            "some realization has P^Q >= 1; uncertified horizon {time}"
        )));
    }
    Ok(Horizon { time, certified_bound: Some(epsilon) })
}

/// Horizon for processes without an exponential decay bound (not certified).
fn fallback_horizon(s: &[f64], objects: &[ObjectParams], level: f64, fixed: Option<f64>) -> f64 {
    if let Some(t) = fixed {
        return t;
    }
    let rate: f64 = s.iter().zip(objects).filter(|(&x, _)| x > 0.0).map(|(_, o)| o.lambda).sum();
    let drift: f64 = s.iter().zip(objects).map(|(&x, o)| x * (o.load() - o.drift)).sum();
    let base = 1000.0 / rate.max(1e-12);
    if drift > 0.0 {
        base + 100.0 * (level + 1.0) / drift
    } else {
        100.0 * base
    }
}

/// Precomputed state of one target in one realization.
#[derive(Debug, Clone)]
struct Setup {
    /// Exposure rows (one for sum/single, one per member for joint).
    rows: Vec<Vec<f64>>,
    /// Drift of each row, `sum_j row_j c_j`.
    drifts: Vec<f64>,
    /// Drawdown gap per row (`None`: no decay bound; `Some(0)`: row never moves).
    gaps: Vec<Option<f64>>,
    horizon: f64,
    certified: bool,
    /// Tail bound at the horizon when the horizon is fixed by the plan.
    tail: f64,
}

#[derive(Debug, Clone)]
struct Realized {
    setups: Vec<Setup>,
    /// `(object, cumulative rate)` over objects that move some target.
    active: Vec<(usize, f64)>,
}

struct Problem<'a> {
    spec: &'a NetworkSpec,
    objects: &'a [ObjectParams],
    targets: Vec<(Target, AgentSet)>,
    /// Barrier vectors per target: one entry per level, one component per row.
    levels: Vec<Vec<Vec<f64>>>,
    samplers: Vec<JumpSampler>,
    plan: &'a SimPlan,
    eps_d: f64,
    eps_t: f64,
}

impl Problem<'_> {
    fn setup(&self, indicator: &[Vec<bool>]) -> Result<Realized> {
        let mut setups = Vec::with_capacity(self.targets.len());
        let d = self.objects.len();
        let mut moving = vec![false; d];
        for (t, ((target, g), levels)) in self.targets.iter().zip(&self.levels).enumerate() {
            let _ = t;
            let w = apply_weights(indicator, &self.spec.scheme, self.objects, g)?;
            let rows: Vec<Vec<f64>> = match target {
                Target::Sum | Target::Single(_) => {
                    vec![(0..d).map(|j| g.members().iter().map(|&i| w[i][j]).sum()).collect()]
                }
                Target::Joint => g.members().iter().map(|&i| w[i].clone()).collect(),
            };
            let drifts: Vec<f64> = rows.iter().map(|r| r.iter().zip(self.objects).map(|(x, o)| x * o.drift).sum()).collect();
            let mut gaps = Vec::with_capacity(rows.len());
            let mut horizon = f64::INFINITY;
            let mut certified = true;
            let mut fallback: f64 = 0.0;
            let mut tail: f64 = 0.0;
            let mut any_decay = false;
            for (k, row) in rows.iter().enumerate() {
                for (j, &x) in row.iter().enumerate() {
                    if x > 0.0 {
                        moving[j] = true;
                    }
                }
                let low = levels.iter().map(|l| l[k]).fold(f64::INFINITY, f64::min);
                if row.iter().all(|&x| x == 0.0) {
                    gaps.push(Some(0.0));
                    continue;
                }
                match decay(row, self.objects) {
                    Some(dc) => {
                        any_decay = true;
                        gaps.push(Some(dc.drawdown(self.eps_d)));
                        match self.plan.horizon {
                            Some(fixed) => {
                                horizon = horizon.min(fixed);
                                tail = tail.max(dc.tail_after(low, fixed));
                            }
                            None => horizon = horizon.min(dc.horizon(low, self.eps_t)),
                        }
                    }
                    None => {
                        gaps.push(None);
                        let high = levels.iter().map(|l| l[k]).fold(0.0, f64::max);
                        fallback = fallback.max(fallback_horizon(row, self.objects, high, self.plan.horizon));
                    }
                }
            }
            if matches!(target, Target::Joint) {
                // a joint hit needs every component; any component with decay bounds the horizon
                if !any_decay {
                    horizon = fallback;
                    certified = gaps.iter().any(|g| *g == Some(0.0)) || rows.is_empty();
                }
            } else if !any_decay {
                horizon = if gaps[0] == Some(0.0) { 0.0 } else { fallback };
                certified = gaps[0] == Some(0.0);
            }
            if !horizon.is_finite() {
                horizon = fallback;
            }
            setups.push(Setup { rows, drifts, gaps, horizon, certified, tail });
        }
        let mut active = Vec::new();
        let mut cum = 0.0;
        for (j, o) in self.objects.iter().enumerate() {
            if moving[j] {
                cum += o.lambda;
                active.push((j, cum));
            }
        }
        Ok(Realized { setups, active })
    }
}

/// Outcome of one path: per target, per level, hit or not; plus truncation flags.
struct PathOutcome {
    hits: Vec<Vec<bool>>,
    /// Per target: the path was cut at an uncertified horizon with levels pending.
    uncertified: Vec<bool>,
    tail: Vec<f64>,
}

struct TargetState {
    values: Vec<f64>,
    hit: Vec<bool>,
    pending: usize,
    done: bool,
}

fn simulate_path(problem: &Problem, cache: &mut HashMap<Vec<u64>, Realized>, stream: &mut Stream) -> Result<PathOutcome> {
    let spec = problem.spec;
    let (q, d) = (spec.q, spec.d);
    let mut indicator = vec![vec![false; d]; q];
    let mut key = vec![0u64; (q * d).div_ceil(64)];
    for i in 0..q {
        for j in 0..d {
            let p = spec.edge_prob[i][j];
            let present = if p >= 1.0 {
                true
            } else if p <= 0.0 {
                false
            } else {
                stream.uniform() < p
            };
            if present {
                indicator[i][j] = true;
                let b = i * d + j;
                key[b / 64] |= 1 << (b % 64);
            }
        }
    }
    if !cache.contains_key(&key) {
        let r = problem.setup(&indicator)?;
        cache.insert(key.clone(), r);
    }
    let real = &cache[&key];
    let nt = problem.targets.len();
    let mut states: Vec<TargetState> = problem
        .levels
        .iter()
        .zip(&real.setups)
        .map(|(levels, s)| TargetState {
            values: vec![0.0; s.rows.len()],
            hit: vec![false; levels.len()],
            pending: levels.len(),
            done: false,
        })
        .collect();
    let mut uncertified = vec![false; nt];
    let tail: Vec<f64> = real.setups.iter().map(|s| s.tail).collect();

    let check = |st: &mut TargetState, setup: &Setup, levels: &[Vec<f64>]| {
        for (l, lv) in levels.iter().enumerate() {
            if !st.hit[l] && st.values.iter().zip(lv).all(|(v, u)| v >= u) {
                st.hit[l] = true;
                st.pending -= 1;
            }
        }
        if st.pending == 0 {
            st.done = true;
            return;
        }
        // every pending level has a component too far below its barrier
        let hopeless = levels.iter().enumerate().filter(|(l, _)| !st.hit[*l]).all(|(_, lv)| {
            st.values.iter().zip(lv).zip(&setup.gaps).any(|((v, u), g)| match g {
                Some(gap) => u - v > 0.0 && u - v >= *gap,
                None => false,
            })
        });
        if hopeless {
            st.done = true;
        }
    };

    for t in 0..nt {
        check(&mut states[t], &real.setups[t], &problem.levels[t]);
    }
    let total_rate = real.active.last().map_or(0.0, |a| a.1);
    let mut time = 0.0;
    while states.iter().any(|s| !s.done) && total_rate > 0.0 {
        let dt = -stream.uniform().ln() / total_rate;
        time += dt;
        for t in 0..nt {
            if !states[t].done && time > real.setups[t].horizon {
                states[t].done = true;
                if !real.setups[t].certified && states[t].pending > 0 {
                    uncertified[t] = true;
                }
            }
        }
        if states.iter().all(|s| s.done) {
            break;
        }
        let pick = stream.uniform() * total_rate;
        let idx = real.active.partition_point(|a| a.1 < pick).min(real.active.len() - 1);
        let j = real.active[idx].0;
        let x = problem.samplers[j].sample(stream);
        for t in 0..nt {
            if states[t].done {
                continue;
            }
            let setup = &real.setups[t];
            let st = &mut states[t];
            for (k, row) in setup.rows.iter().enumerate() {
                st.values[k] += row[j] * x - setup.drifts[k] * dt;
            }
            check(st, setup, &problem.levels[t]);
        }
    }
    Ok(PathOutcome { hits: states.into_iter().map(|s| s.hit).collect(), uncertified, tail })
}

#[derive(Clone)]
struct Tally {
    /// Plain: hits per (target, level). Antithetic: pairs with exactly one / two hits.
    one: Vec<Vec<u64>>,
    two: Vec<Vec<u64>>,
    uncertified: Vec<bool>,
    tail: Vec<f64>,
}

impl Tally {
    fn new(levels: &[Vec<Vec<f64>>]) -> Self {
        let z: Vec<Vec<u64>> = levels.iter().map(|l| vec![0; l.len()]).collect();
        Tally { one: z.clone(), two: z, uncertified: vec![false; levels.len()], tail: vec![0.0; levels.len()] }
    }

    fn merge(mut self, other: &Tally) -> Self {
        for t in 0..self.one.len() {
            for l in 0..self.one[t].len() {
                self.one[t][l] += other.one[t][l];
                self.two[t][l] += other.two[t][l];
            }
            self.uncertified[t] |= other.uncertified[t];
            self.tail[t] = self.tail[t].max(other.tail[t]);
        }
        self
    }

    fn note(&mut self, o: &PathOutcome) {
        for t in 0..self.uncertified.len() {
            self.uncertified[t] |= o.uncertified[t];
            self.tail[t] = self.tail[t].max(o.tail[t]);
        }
    }
}

/// Estimates for several targets and barrier vectors from one set of paths.
///
/// `barriers[l]` is aligned with the members of `group`. The result is indexed
/// `[target][level]`.
pub fn estimate_hitting_grid(
    spec: &NetworkSpec,
    objects: &[ObjectParams],
    group: &AgentSet,
    targets: &[Target],
    barriers: &[Vec<f64>],
    plan: &SimPlan,
) -> Result<Vec<Vec<Estimate>>> {
    spec.validate()?;
    spec.check_objects(objects)?;
    if group.is_empty() {
        return Err(Error::EmptyAgentSet);
    }
    if plan.n_paths == 0 || !(plan.epsilon > 0.0) || plan.horizon.is_some_and(|t| !(t > 0.0)) {
        return Err(Error::InvalidParameter("plan needs n_paths >= 1, epsilon > 0 and a positive horizon".into()));
    }
    for b in barriers {
        if b.len() != group.len() || b.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::DimensionMismatch(format!("barriers must be {} nonnegative numbers", group.len())));
        }
    }
    let mut resolved = Vec::with_capacity(targets.len());
    let mut levels = Vec::with_capacity(targets.len());
    for &t in targets {
        match t {
            Target::Sum => {
                resolved.push((t, group.clone()));
                levels.push(barriers.iter().map(|b| vec![b.iter().sum()]).collect());
            }
            Target::Single(i) => {
                let pos = group
                    .members()
                    .iter()
                    .position(|&m| m == i)
                    .ok_or(Error::AgentOutOfRange { index: i, count: spec.q })?;
                resolved.push((t, AgentSet::single(i, spec.q)?));
                levels.push(barriers.iter().map(|b| vec![b[pos]]).collect());
            }
            Target::Joint => {
                resolved.push((t, group.clone()));
                levels.push(barriers.to_vec());
            }
        }
    }
    let problem = Problem {
        spec,
        objects,
        targets: resolved,
        levels,
        samplers: objects.iter().map(|o| JumpSampler::new(&o.jump)).collect(),
        plan,
        eps_d: plan.epsilon / 2.0,
        eps_t: plan.epsilon / 2.0,
    };
    // antithetic plans simulate pairs; a pair is one unit of work
    let units = if plan.antithetic { plan.n_paths.div_ceil(2) } else { plan.n_paths };
    let chunks = units.div_ceil(CHUNK_PATHS);
    let tallies: Vec<Tally> = (0..chunks)
        .into_par_iter()
        .map(|c| -> Result<Tally> {
            let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
            rng.set_stream(c);
            let mut tape = Vec::new();
            let mut cache = HashMap::new();
            let mut tally = Tally::new(&problem.levels);
            let len = CHUNK_PATHS.min(units - c * CHUNK_PATHS);
            for _ in 0..len {
                if plan.antithetic {
                    tape.clear();
                    let a = simulate_path(&problem, &mut cache, &mut Stream { rng: &mut rng, tape: &mut tape, mode: Mode::Record })?;
                    let b = simulate_path(&problem, &mut cache, &mut Stream { rng: &mut rng, tape: &mut tape, mode: Mode::Replay(0) })?;
                    tally.note(&a);
                    tally.note(&b);
                    for t in 0..a.hits.len() {
                        for l in 0..a.hits[t].len() {
                            match (a.hits[t][l], b.hits[t][l]) {
                                (true, true) => tally.two[t][l] += 1,
                                (false, false) => {}
                                _ => tally.one[t][l] += 1,
                            }
                        }
                    }
                } else {
                    let a = simulate_path(&problem, &mut cache, &mut Stream { rng: &mut rng, tape: &mut tape, mode: Mode::Plain })?;
                    tally.note(&a);
                    for t in 0..a.hits.len() {
                        for l in 0..a.hits[t].len() {
                            if a.hits[t][l] {
                                tally.one[t][l] += 1;
                            }
                        }
                    }
                }
            }
            Ok(tally)
        })
        .collect::<Result<_>>()?;
    let total = tallies.iter().fold(Tally::new(&problem.levels), |acc, t| acc.merge(t));
    let n = units as f64;
    let mut out = Vec::with_capacity(targets.len());
    for t in 0..targets.len() {
        let truncation = if total.uncertified[t] {
            None
        } else {
            Some(problem.eps_d + if plan.horizon.is_some() { total.tail[t] } else { problem.eps_t })
        };
        let row = (0..problem.levels[t].len())
            .map(|l| {
                let (one, two) = (total.one[t][l] as f64, total.two[t][l] as f64);
                let (mean, se, paths, hits) = if plan.antithetic {
                    // pair averages take values 0, 1/2, 1
                    let mean = (0.5 * one + two) / n;
                    let second = (0.25 * one + two) / n;
                    let var = if n > 1.0 { (second - mean * mean).max(0.0) * n / (n - 1.0) } else { 0.0 };
                    (mean, (var / n).sqrt(), 2 * units, total.one[t][l] + 2 * total.two[t][l])
                } else {
                    let mean = one / n;
                    let var = if n > 1.0 { mean * (1.0 - mean) * n / (n - 1.0) } else { 0.0 };
                    (mean, (var / n).sqrt(), units, total.one[t][l])
                };
                Estimate { mean, std_error: se, truncation_bound: truncation, n_paths: paths, hits }
            })
            .collect();
        out.push(row);
    }
    Ok(out)
}

/// Monte Carlo estimate of the hitting probability for `plan.target`.
pub fn estimate_hitting(query: &HittingQuery, plan: &SimPlan) -> Result<Estimate> {
    query.validate()?;
    let grid = estimate_hitting_grid(&query.spec, &query.objects, &query.group, &[plan.target], &[query.u.clone()], plan)?;
    Ok(grid[0][0])
}

/// Sampled moments of `P^Q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PkMomentEstimate {
    pub moments: PkMoments,
    pub se_mean: f64,
    pub se_cond_mean: f64,
    pub n: usize,
    /// Samples with `deg(Q) > 0`.
    pub n_linked: usize,
}

/// Moments of `P^Q` over `n` sampled networks, unconditionally and given `deg(Q) > 0`.
pub fn estimate_pk_moments(
    spec: &NetworkSpec,
    objects: &[ObjectParams],
    group: &AgentSet,
    n: usize,
    seed: u64,
) -> Result<PkMomentEstimate> {
    spec.validate()?;
    spec.check_objects(objects)?;
    if n < 2 {
        return Err(Error::InvalidParameter("at least two samples are needed".into()));
    }
    let chunk = CHUNK_PATHS as usize;
    let chunks = n.div_ceil(chunk);
    // (sum, sum of squares, linked count, linked sum, linked squares, count >= 1)
    let parts: Vec<[f64; 6]> = (0..chunks)
        .into_par_iter()
        .map(|c| -> Result<[f64; 6]> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let mut acc = [0.0; 6];
            for _ in 0..chunk.min(n - c * chunk) {
                let r = sample_with(spec, objects, group, &mut rng)?;
                let v = pk_value(&r, objects, group);
                acc[0] += v;
                acc[1] += v * v;
                if degrees(&r, group).group > 0 {
                    acc[2] += 1.0;
                    acc[3] += v;
                    acc[4] += v * v;
                }
                if v >= 1.0 {
                    acc[5] += 1.0;
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let mut s = [0.0; 6];
    for p in &parts {
        for k in 0..6 {
            s[k] += p[k];
        }
    }
    let nf = n as f64;
    let mean = s[0] / nf;
    let var = ((s[1] - nf * mean * mean) / (nf - 1.0)).max(0.0);
    let nl = s[2];
    if nl == 0.0 {
        return Err(Error::DegenerateConditioning);
    }
    let cond_mean = s[3] / nl;
    let cond_var = if nl > 1.0 { ((s[4] - nl * cond_mean * cond_mean) / (nl - 1.0)).max(0.0) } else { 0.0 };
    Ok(PkMomentEstimate {
        moments: PkMoments { cond_mean, cond_var, mean, var, prob_at_least_one: s[5] / nf },
        se_mean: (var / nf).sqrt(),
        se_cond_mean: (cond_var / nl).sqrt(),
        n,
        n_linked: nl as usize,
    })
}

/// One simulated path of the group sum, for inspection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathTrace {
    pub exposure: Vec<f64>,
    pub drift: f64,
    /// `(time, object, jump size)` of every epoch up to the horizon.
    pub epochs: Vec<(f64, usize, f64)>,
    pub horizon: f64,
}

impl PathTrace {
    /// Group sum at time `t`.
    pub fn value_at(&self, t: f64) -> f64 {
        let jumps: f64 = self.epochs.iter().take_while(|e| e.0 <= t).map(|e| self.exposure[e.1] * e.2).sum();
        jumps - self.drift * t
    }

    /// Values right after each epoch (and at time 0).
    pub fn epoch_values(&self) -> Vec<f64> {
        let mut v = 0.0;
        let mut last = 0.0;
        let mut out = vec![0.0];
        for &(t, j, x) in &self.epochs {
            v += self.exposure[j] * x - self.drift * (t - last);
            last = t;
            out.push(v);
        }
        out
    }
}

/// Samples a network and the group-sum path up to `horizon`.
pub fn sample_path_trace(
    spec: &NetworkSpec,
    objects: &[ObjectParams],
    group: &AgentSet,
    horizon: f64,
    seed: u64,
) -> Result<PathTrace> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let real = sample_with(spec, objects, group, &mut rng)?;
    let exposure = real.group_exposure(group);
    let drift = exposure.iter().zip(objects).map(|(x, o)| x * o.drift).sum();
    let samplers: Vec<JumpSampler> = objects.iter().map(|o| JumpSampler::new(&o.jump)).collect();
    let rates: Vec<f64> = objects.iter().map(|o| o.lambda).collect();
    let total: f64 = rates.iter().sum();
    let mut tape = Vec::new();
    let mut stream = Stream { rng: &mut rng, tape: &mut tape, mode: Mode::Plain };
    let mut epochs = Vec::new();
    let mut t = 0.0;
    loop {
        t += -stream.uniform().ln() / total;
        if t > horizon {
            break;
        }
        let mut pick = stream.uniform() * total;
        let mut j = 0;
        while j + 1 < rates.len() && pick >= rates[j] {
            pick -= rates[j];
            j += 1;
        }
        epochs.push((t, j, samplers[j].sample(&mut stream)));
    }
    Ok(PathTrace { exposure, drift, epochs, horizon })
}
