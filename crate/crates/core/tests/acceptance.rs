//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::time::Instant;

use netpk::hitting::{hitting_sum, hitting_sum_exponential_system, HittingQuery};
use netpk::lundberg::{lundberg_bound_sum, network_adjustment_coefficient, object_kappas};
use netpk::model::{adjustment_coefficient, JumpLaw, ObjectParams};
use netpk::montecarlo::{estimate_hitting, estimate_hitting_grid, SimPlan, Target};
use netpk::network::{enumerate, sample, AgentSet, NetworkSpec, WeightScheme};
use netpk::pk::{conditional_moments, pk_distribution, pk_distribution_factorized};
use netpk::poisson_approx::{delta_method_mean_pk, surrogate_expectation, tv_bound, SurrogateVariant};
use netpk::series::{compound_geometric_tail_with, IntegratedTail, SeriesMethod, SeriesOptions};
use netpk::two_by_two::{
    config_table, configuration_probability, psi1_exponential, psi1_homogeneous, psi_joint_bounds,
    psi_sum_exponential, psi_sum_homogeneous, rho_symbols,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Six objects with `lambda mu = 0.5` and the given loads.
fn six_objects() -> Vec<ObjectParams> {
    [0.1, 0.1, 0.1, 1.1, 1.1, 1.1]
        .iter()
        .map(|&rho| ObjectParams::exponential_with_rho(0.5, 1.0, rho).unwrap())
        .collect()
}

fn fig5_objects() -> Vec<ObjectParams> {
    vec![
        ObjectParams::exponential_with_rho(0.5, 1.0, 0.6).unwrap(),
        ObjectParams::exponential_with_rho(0.5, 1.0, 0.9).unwrap(),
    ]
}

fn small_p_limit() -> Check {
    let spec = NetworkSpec::bernoulli(6, 6, 1e-4, WeightScheme::Homogeneous).map_err(|e| e.to_string())?;
    let g = AgentSet::single(0, 6).unwrap();
    let dist = pk_distribution_factorized(&spec, &six_objects(), &g).map_err(|e| e.to_string())?;
    let m = conditional_moments(&dist).map_err(|e| e.to_string())?;
    let msg = format!("mean {:.6}, sd {:.6}", m.cond_mean, m.cond_sd());
    ensure((m.cond_mean - 0.6).abs() <= 1e-3 && (m.cond_sd() - 0.5).abs() <= 1e-3, || msg.clone())?;
    Ok(msg)
}

/// Symbols of the sixteen-configuration table: 0 = zero, 1 = rho_1, 2 = rho_2,
/// 3 = rho_{1*1}, 4 = rho_{2*1}, 5 = rho_{1*2}, 6 = rho_exp.
/// Columns: homogeneous P^1, P^{1,2}, exponential P^1, P^{1,2}.
const TABLE: [[u8; 4]; 16] = [
    [0, 0, 0, 0],
    [1, 1, 1, 1],
    [2, 2, 2, 2],
    [0, 1, 0, 1],
    [0, 2, 0, 2],
    [3, 3, 6, 6],
    [1, 1, 1, 1],
    [1, 3, 1, 6],
    [2, 3, 2, 6],
    [2, 2, 2, 2],
    [0, 3, 0, 6],
    [5, 3, 6, 6],
    [4, 3, 6, 6],
    [1, 3, 1, 6],
    [2, 3, 2, 6],
    [3, 3, 6, 6],
];

/// Edge probability polynomial of each configuration, as `(i, j)` edges present.
fn table_probability(k: usize, p: &[[f64; 2]; 2]) -> f64 {
    let present: &[(usize, usize)] = match k {
        1 => &[],
        2 => &[(0, 0)],
        3 => &[(0, 1)],
        4 => &[(1, 0)],
        5 => &[(1, 1)],
        6 => &[(0, 0), (0, 1)],
        7 => &[(0, 0), (1, 0)],
        8 => &[(0, 0), (1, 1)],
        9 => &[(0, 1), (1, 0)],
        10 => &[(0, 1), (1, 1)],
        11 => &[(1, 0), (1, 1)],
        12 => &[(0, 0), (0, 1), (1, 0)],
        13 => &[(0, 0), (0, 1), (1, 1)],
        14 => &[(0, 0), (1, 0), (1, 1)],
        15 => &[(0, 1), (1, 0), (1, 1)],
        _ => &[(0, 0), (0, 1), (1, 0), (1, 1)],
    };
    let mut v = 1.0;
    for i in 0..2 {
        for j in 0..2 {
            v *= if present.contains(&(i, j)) { p[i][j] } else { 1.0 - p[i][j] };
        }
    }
    v
}

fn table_reproduction() -> Check {
    // (lambda, mean, drift) per object; the exponential column needs a common lambda
    let params: [[(f64, f64, f64); 2]; 2] = [[(0.5, 1.0, 5.0 / 6.0), (0.5, 2.0, 10.0 / 9.0)], [(1.0, 0.5, 1.0), (1.0, 3.0, 4.0)]];
    let grid = [0.0, 0.25, 0.5, 0.75, 1.0];
    let mut cells = 0;
    for par in &params {
        let objects: Vec<ObjectParams> = par.iter().map(|&(l, m, c)| ObjectParams::exponential(l, m, c).unwrap()).collect();
        let (l1, l2) = (par[0].0 * par[0].1, par[1].0 * par[1].1);
        let (c1, c2) = (par[0].2, par[1].2);
        let (r1, r2) = (l1 / c1, l2 / c2);
        let sym = [0.0, r1, r2, (l1 + l2) / (c1 + c2), (2.0 * l1 + l2) / (2.0 * c1 + c2), (l1 + 2.0 * l2) / (c1 + 2.0 * c2), 2.0 / (1.0 / r1 + 1.0 / r2)];
        let s = rho_symbols(&objects).map_err(|e| e.to_string())?;
        for (a, b) in [s.rho1, s.rho2, s.rho11, s.rho21, s.rho12, s.rho_exp].iter().zip(&sym[1..]) {
            ensure((a - b).abs() <= 1e-12, || format!("symbol {a} vs {b}"))?;
        }
        for &a in &grid {
            for &b in &grid {
                for &c in &grid {
                    for &d in &grid {
                        let p = [[a, b], [c, d]];
                        for (col, scheme) in [WeightScheme::Homogeneous, WeightScheme::ExponentialSystem { r: Some(0.25) }].iter().enumerate() {
                            let t = config_table(&objects, &p, scheme).map_err(|e| e.to_string())?;
                            for e in &t.entries {
                                let k = e.index;
                                let want = table_probability(k, &p);
                                ensure((e.probability - want).abs() <= 1e-12, || format!("probability of ({k}) at {p:?}"))?;
                                ensure((configuration_probability(&p, k) - want).abs() <= 1e-12, || format!("probability ({k})"))?;
                                let (w1, w12) = (sym[TABLE[k - 1][2 * col] as usize], sym[TABLE[k - 1][2 * col + 1] as usize]);
                                ensure((e.p1 - w1).abs() <= 1e-12 && (e.p12 - w12).abs() <= 1e-12, || {
                                    format!("config ({k}) scheme {col}: ({}, {}) vs ({w1}, {w12})", e.p1, e.p12)
                                })?;
                                cells += 3;
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(format!("{cells} cells match"))
}

fn classical_closed_form() -> Check {
    let mut worst: f64 = 0.0;
    for &rho in &[0.1, 0.5, 0.9] {
        let opts = SeriesOptions { method: SeriesMethod::Lattice, step: Some(1e-3), tol: 1e-12 };
        let levels = [0.0, 1.0, 5.0];
        let vals = compound_geometric_tail_with(rho, &IntegratedTail::exponential(1.0), &levels, &opts).map_err(|e| e.to_string())?;
        for (u, v) in levels.iter().zip(&vals) {
            let exact = rho * (-u * (1.0 - rho)).exp();
            ensure((v.value - exact).abs() <= v.error && v.error <= 1e-3, || {
                format!("rho {rho} u {u}: {} +- {} vs {exact}", v.value, v.error)
            })?;
            worst = worst.max(v.error);
        }
    }
    Ok(format!("largest certified error {worst:.2e}"))
}

fn analytic_vs_mc() -> Check {
    let objects = fig5_objects();
    let levels: Vec<f64> = (1..=10).map(|k| 0.5 * k as f64).collect();
    let barriers: Vec<Vec<f64>> = levels.iter().map(|&u| vec![u, u]).collect();
    let mut worst: f64 = 0.0;
    for &p in &[0.2, 0.8] {
        let spec = NetworkSpec::bernoulli(2, 2, p, WeightScheme::Homogeneous).unwrap();
        let plan = SimPlan { n_paths: 1_000_000, epsilon: 1e-4, seed: 42, ..SimPlan::default() };
        let g = AgentSet::all(2).unwrap();
        let grid = estimate_hitting_grid(&spec, &objects, &g, &[Target::Single(0), Target::Sum], &barriers, &plan)
            .map_err(|e| e.to_string())?;
        let pp = [[p, p], [p, p]];
        for (l, &u) in levels.iter().enumerate() {
            let a1 = psi1_homogeneous(&objects, &pp, u, 1e-10).map_err(|e| e.to_string())?;
            let a12 = psi_sum_homogeneous(&objects, &pp, [u, u], 1e-10).map_err(|e| e.to_string())?;
            for (name, a, e) in [("single", a1, grid[0][l]), ("sum", a12, grid[1][l])] {
                let trunc = e.truncation_bound.ok_or("uncertified truncation")?;
                let tol = 3.0 * e.std_error + trunc + a.error_bound;
                let gap = (a.value - e.mean).abs();
                worst = worst.max(gap / tol);
                ensure(gap <= tol, || format!("p {p} u {u} {name}: analytic {} vs mc {} (tol {tol:.2e})", a.value, e.mean))?;
            }
        }
    }
    Ok(format!("largest gap/tolerance {worst:.3}"))
}

fn random_exponential_objects(rng: &mut ChaCha8Rng, d: usize) -> Vec<ObjectParams> {
    (0..d)
        .map(|_| {
            let lambda = rng.random_range(0.2..2.0);
            let mu = rng.random_range(0.5..2.0);
            let rho = rng.random_range(0.1..0.95);
            ObjectParams::exponential_with_rho(lambda, mu, rho).unwrap()
        })
        .collect()
}

fn random_probs(rng: &mut ChaCha8Rng, q: usize, d: usize) -> Vec<Vec<f64>> {
    (0..q).map(|_| (0..d).map(|_| rng.random_range(0.05..1.0)).collect()).collect()
}

fn bound_dominance() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut sum_checks = 0;
    for n in 0..100 {
        let size = if n % 2 == 0 { 2 } else { 3 };
        let objects = random_exponential_objects(&mut rng, size);
        let spec = NetworkSpec::new(size, size, random_probs(&mut rng, size, size), WeightScheme::Homogeneous).unwrap();
        let members: Vec<usize> = (0..size).filter(|_| rng.random_bool(0.5)).collect();
        let group = if members.is_empty() { AgentSet::single(0, size).unwrap() } else { AgentSet::new(members, size).unwrap() };
        let u: Vec<f64> = (0..group.len()).map(|_| rng.random_range(0.0..4.0)).collect();
        if u.iter().sum::<f64>() <= 0.0 {
            continue;
        }
        let bound = lundberg_bound_sum(&spec, &objects, &group, &u, None).map_err(|e| e.to_string())?;
        let q = HittingQuery::new(spec, objects, group, u, 1e-8).map_err(|e| e.to_string())?;
        let exact = hitting_sum(&q).map_err(|e| e.to_string())?;
        ensure(bound >= exact.value - exact.error_bound, || format!("instance {n}: bound {bound} < exact {}", exact.value))?;
        sum_checks += 1;
    }
    let mut joint_checks = 0;
    for n in 0..100 {
        let objects = random_exponential_objects(&mut rng, 2);
        let p = random_probs(&mut rng, 2, 2);
        let pp = [[p[0][0], p[0][1]], [p[1][0], p[1][1]]];
        let u = [rng.random_range(0.2..3.0), rng.random_range(0.2..3.0)];
        let b = psi_joint_bounds(&objects, &pp, u, 1e-10).map_err(|e| e.to_string())?;
        let spec = NetworkSpec::new(2, 2, p, WeightScheme::Homogeneous).unwrap();
        let q = HittingQuery::new(spec, objects, AgentSet::all(2).unwrap(), u.to_vec(), 1e-3).map_err(|e| e.to_string())?;
        let plan = SimPlan { n_paths: 100_000, seed: 1000 + n, target: Target::Joint, ..SimPlan::default() };
        let e = estimate_hitting(&q, &plan).map_err(|e| e.to_string())?;
        let slack = 3.0 * e.std_error + e.truncation_bound.unwrap_or(0.0);
        ensure(b.lower <= e.mean + slack, || format!("joint {n}: lower {} > mc {}", b.lower, e.mean))?;
        ensure(e.mean - slack <= b.upper_casewise, || format!("joint {n}: mc {} > casewise {}", e.mean, b.upper_casewise))?;
        ensure(b.upper_casewise <= b.upper_global, || {
            format!("joint {n}: casewise {} > global {} (u {u:?}, p {pp:?})", b.upper_casewise, b.upper_global)
        })?;
        joint_checks += 1;
    }
    Ok(format!("{sum_checks} sum bounds, {joint_checks} joint bound orderings"))
}

fn exponential_system_exactness() -> Check {
    let objects = vec![ObjectParams::exponential(0.8, 1.0, 1.6).unwrap(), ObjectParams::exponential(0.8, 2.0, 2.0).unwrap()];
    let mut checks = 0;
    for p in [[[0.3, 0.6], [0.5, 0.2]], [[1.0, 1.0], [1.0, 1.0]], [[0.9, 0.1], [0.4, 0.7]]] {
        let probs: Vec<Vec<f64>> = p.iter().map(|r| r.to_vec()).collect();
        for &u in &[0.5, 2.0, 6.0] {
            let r1 = 0.4;
            let spec = NetworkSpec::new(2, 2, probs.clone(), WeightScheme::ExponentialSystem { r: Some(r1) }).unwrap();
            let q = HittingQuery::new(spec, objects.clone(), AgentSet::single(0, 2).unwrap(), vec![u], 1e-10).unwrap();
            let generic = hitting_sum_exponential_system(&q).map_err(|e| e.to_string())?.value;
            let closed = psi1_exponential(&objects, &p, r1, u).map_err(|e| e.to_string())?;
            ensure((generic - closed).abs() <= 1e-12, || format!("single {p:?} u {u}: {generic} vs {closed}"))?;

            let r12 = 0.9;
            let spec = NetworkSpec::new(2, 2, probs.clone(), WeightScheme::ExponentialSystem { r: Some(r12) }).unwrap();
            let q = HittingQuery::new(spec, objects.clone(), AgentSet::all(2).unwrap(), vec![u, 0.5 * u], 1e-10).unwrap();
            let generic = hitting_sum_exponential_system(&q).map_err(|e| e.to_string())?.value;
            let closed = psi_sum_exponential(&objects, &p, r12, [u, 0.5 * u]).map_err(|e| e.to_string())?;
            ensure((generic - closed).abs() <= 1e-12, || format!("sum {p:?} u {u}: {generic} vs {closed}"))?;

            if p[0][0] == 1.0 {
                // harmonic-mean load: lambda sum_j 1 / sum_j c_j / mu_j
                let pq = 0.8 * 2.0 / (1.6 / 1.0 + 2.0 / 2.0);
                let single = pq * (-(1.0 - pq) * u / r1).exp();
                let pair = pq * (-(1.0 - pq) * 1.5 * u / r12).exp();
                let c1 = psi1_exponential(&objects, &p, r1, u).unwrap();
                ensure((c1 - single).abs() <= 1e-12 && (closed - pair).abs() <= 1e-12, || format!("complete network u {u}"))?;
            }
            checks += 2;
        }
    }
    Ok(format!("{checks} comparisons"))
}

fn poisson_budget() -> Check {
    let objects3: Vec<ObjectParams> = [0.5, 0.9, 1.3]
        .iter()
        .map(|&rho| ObjectParams::exponential_with_rho(0.5, 1.0, rho).unwrap())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut specs = Vec::new();
    for d in [2usize, 3] {
        for &p in &[0.1, 0.2, 0.3] {
            specs.push(vec![vec![p; d]; 2]);
        }
        for _ in 0..3 {
            specs.push(random_probs(&mut rng, 2, d).into_iter().map(|r| r.into_iter().map(|x| 0.3 * x).collect()).collect());
        }
    }
    let mut worst: f64 = 0.0;
    let mut n = 0;
    for (k, probs) in specs.into_iter().enumerate() {
        let d = probs[0].len();
        let objects = &objects3[..d];
        let spec = NetworkSpec::new(2, d, probs, WeightScheme::Homogeneous).unwrap();
        let budget = tv_bound(&spec);
        for group in [AgentSet::single(0, 2).unwrap(), AgentSet::all(2).unwrap()] {
            let dist = pk_distribution(&spec, objects, &group).map_err(|e| e.to_string())?;
            let gs: [(&str, fn(f64) -> f64); 2] = [("min", |v| v.min(1.0)), ("indicator", |v| if v >= 1.0 { 1.0 } else { 0.0 })];
            for (name, g) in gs {
                let exact = dist.expect(g);
                let (mc, se) = surrogate_expectation(&spec, objects, &group, SurrogateVariant::HomogeneousGroup, 10_000_000, 100 + k as u64, g)
                    .map_err(|e| e.to_string())?;
                let gap = (exact - mc).abs();
                worst = worst.max(gap / (budget + 3.0 * se));
                ensure(gap <= budget + 3.0 * se, || format!("spec {k} {name}: exact {exact} vs surrogate {mc} (budget {budget})"))?;
                n += 1;
            }
        }
    }
    Ok(format!("{n} comparisons, largest gap/budget {worst:.3}"))
}

fn delta_method() -> Check {
    let objects = six_objects();
    let spec = NetworkSpec::bernoulli(6, 6, 0.1, WeightScheme::Homogeneous).unwrap();
    let dm = delta_method_mean_pk(&spec, &objects, 0).map_err(|e| e.to_string())?;
    let approx = dm.mean;
    let exact = pk_distribution_factorized(&spec, &objects, &AgentSet::single(0, 6).unwrap()).map_err(|e| e.to_string())?.mean();
    let gap = (approx - exact).abs() / exact;
    let second = dm.mean_second_order;
    let gap2 = (second - exact).abs() / exact;
    ensure(gap <= 0.1, || {
        format!("approx {approx:.6} vs exact {exact:.6}, relative gap {gap:.4} (second-order value {second:.6}, gap {gap2:.4})")
    })?;
    Ok(format!("approx {approx:.6}, exact {exact:.6}, relative gap {gap:.4}"))
}

fn equal_rho_identities() -> Check {
    let rho = 0.7;
    let objects = vec![
        ObjectParams::exponential_with_rho(0.5, 1.0, rho).unwrap(),
        ObjectParams::exponential_with_rho(1.5, 2.0, rho).unwrap(),
        ObjectParams::new(0.8, JumpLaw::Erlang { shape: 3, mean: 1.2 }, 0.8 * 1.2 / rho).unwrap(),
    ];
    let schemes = [
        WeightScheme::Homogeneous,
        WeightScheme::ExponentialSystem { r: None },
        WeightScheme::InverseExpectedLoss { k: None },
        WeightScheme::InverseDrift { scale: None },
        WeightScheme::Custom { weights: vec![vec![0.3, 0.5, 0.2], vec![0.6, 0.1, 0.4], vec![0.1, 0.4, 0.3]] },
    ];
    let probs = vec![vec![0.3, 0.0, 0.8], vec![0.5, 0.6, 0.2], vec![1.0, 0.4, 0.1]];
    let mut checks = 0;
    for scheme in schemes {
        // the exponential system needs exponential jumps
        let objs = if matches!(scheme, WeightScheme::ExponentialSystem { .. }) {
            vec![objects[0].clone(), ObjectParams::exponential_with_rho(0.5, 2.0, rho).unwrap(), ObjectParams::exponential_with_rho(0.5, 0.5, rho).unwrap()]
        } else {
            objects.clone()
        };
        let spec = NetworkSpec::new(3, 3, probs.clone(), scheme.clone()).unwrap();
        for members in [vec![0], vec![1], vec![0, 2], vec![0, 1, 2]] {
            let group = AgentSet::new(members, 3).unwrap();
            for real in enumerate(&spec, &objs, &group).map_err(|e| e.to_string())? {
                let linked = real.group_exposure(&group).iter().any(|&s| s > 0.0);
                let v = netpk::pk::pk_value(&real, &objs, &group);
                let want = if linked { rho } else { 0.0 };
                ensure((v - want).abs() <= 1e-12, || format!("{scheme:?}: P^Q = {v}, expected {want}"))?;
                checks += 1;
            }
            let linked = 1.0 - spec.prob_isolated(&group);
            let threshold = 1.0 / linked;
            for factor in [0.99, 1.01] {
                let r = threshold * factor;
                let objs_r: Vec<ObjectParams> = objs
                    .iter()
                    .map(|o| ObjectParams::new(o.lambda, o.jump.clone(), o.load() / r).unwrap())
                    .collect();
                let mean = pk_distribution(&spec, &objs_r, &group).map_err(|e| e.to_string())?.mean();
                ensure((mean < 1.0) == (factor < 1.0), || format!("threshold side {factor}: mean {mean}"))?;
                checks += 1;
            }
        }
    }
    Ok(format!("{checks} checks"))
}

fn adjustment_coefficients() -> Check {
    for &(mu, rho) in &[(1.0, 0.5), (2.0, 0.1), (0.5, 0.9), (3.0, 0.99)] {
        let o = ObjectParams::exponential_with_rho(1.0, mu, rho).unwrap();
        let k = adjustment_coefficient(&o, 1e-14).map_err(|e| e.to_string())?;
        let want = (1.0 - rho) / mu;
        ensure((k - want).abs() <= 1e-10, || format!("mu {mu} rho {rho}: {k} vs {want}"))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut checked = 0;
    for n in 0..1000u64 {
        let (q, d) = (rng.random_range(1..=4usize), rng.random_range(1..=4usize));
        let objects: Vec<ObjectParams> = (0..d)
            .map(|_| {
                let rho = rng.random_range(0.1..0.95);
                let lambda = rng.random_range(0.2..2.0);
                let mean = rng.random_range(0.5..2.0);
                match rng.random_range(0..3) {
                    0 => ObjectParams::exponential_with_rho(lambda, mean, rho).unwrap(),
                    1 => ObjectParams::new(lambda, JumpLaw::Erlang { shape: 2, mean }, lambda * mean / rho).unwrap(),
                    _ => ObjectParams::new(lambda, JumpLaw::Deterministic { value: mean }, lambda * mean / rho).unwrap(),
                }
            })
            .collect();
        let spec = NetworkSpec::new(q, d, random_probs(&mut rng, q, d), WeightScheme::Homogeneous).unwrap();
        let group = AgentSet::single(rng.random_range(0..q), q).unwrap();
        let real = sample(&spec, &objects, &group, n).map_err(|e| e.to_string())?;
        let s = real.group_exposure(&group);
        if s.iter().all(|&x| x == 0.0) {
            continue;
        }
        let kappas = object_kappas(&objects).map_err(|e| e.to_string())?;
        let ratios: Vec<f64> = s.iter().zip(&kappas).filter(|(s, _)| **s > 0.0).map(|(s, k)| k / s).collect();
        let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().cloned().fold(0.0, f64::max);
        let k = network_adjustment_coefficient(&real, &objects, &group, 1e-13).map_err(|e| e.to_string())?;
        ensure(k >= lo * (1.0 - 1e-12) && k <= hi * (1.0 + 1e-12), || format!("realization {n}: {k} outside [{lo}, {hi}]"))?;
        checked += 1;
    }
    Ok(format!("{checked} realizations inside the bracket"))
}

fn main() {
    let criteria: [(&str, fn() -> Check, f64); 10] = [
        ("1 small-p limit of conditional moments", small_p_limit, 30.0),
        ("2 configuration table", table_reproduction, 1.0),
        ("3 classical closed form via lattice", classical_closed_form, 10.0),
        ("4 analytic vs Monte Carlo (2x2)", analytic_vs_mc, 300.0),
        ("5 bound dominance", bound_dominance, 600.0),
        ("6 exponential-system exactness", exponential_system_exactness, 1.0),
        ("7 Poisson surrogate budget", poisson_budget, 300.0),
        ("8 delta-method mean", delta_method, 60.0),
        ("9 equal-load identities", equal_rho_identities, 1.0),
        ("10 adjustment coefficients", adjustment_coefficients, 30.0),
    ];
    let mut failed = 0;
    for (name, f, budget) in criteria {
        let start = Instant::now();
        let secs_outcome = f();
        let secs = start.elapsed().as_secs_f64();
        let outcome = secs_outcome.and_then(|m| if secs <= budget { Ok(m) } else { Err(format!("{m}; over the runtime budget")) });
        match outcome {
            Ok(msg) => println!("PASS criterion {name}: {msg} ({secs:.2}s, budget {budget}s)"),
            Err(msg) => {
                failed += 1;
                println!("FAIL criterion {name}: {msg} ({secs:.2}s, budget {budget}s)");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
