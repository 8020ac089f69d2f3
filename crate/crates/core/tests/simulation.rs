use netpk::hitting::{hitting_sum, HittingQuery};
use netpk::lundberg::{lundberg_bound_joint, optimize_allocation};
use netpk::model::{JumpLaw, ObjectParams};
use netpk::montecarlo::{estimate_hitting, estimate_hitting_grid, sample_path_trace, SimPlan, Target};
use netpk::network::{enumerate, sample, AgentSet, NetworkSpec, WeightScheme};

fn fig5() -> Vec<ObjectParams> {
    vec![
        ObjectParams::exponential_with_rho(0.5, 1.0, 0.6).unwrap(),
        ObjectParams::exponential_with_rho(0.5, 1.0, 0.9).unwrap(),
    ]
}

#[test]
fn configuration_frequencies_at_one_half() {
    let spec = NetworkSpec::bernoulli(2, 2, 0.5, WeightScheme::Homogeneous).unwrap();
    let objects = fig5();
    let g = AgentSet::all(2).unwrap();
    let n = 1_000_000u64;
    let mut counts = [0u64; 16];
    for seed in 0..n {
        let r = sample(&spec, &objects, &g, seed).unwrap();
        let k = (r.indicator[0][0] as usize) | (r.indicator[0][1] as usize) << 1 | (r.indicator[1][0] as usize) << 2 | (r.indicator[1][1] as usize) << 3;
        counts[k] += 1;
    }
    let se = (n as f64 * (1.0 / 16.0) * (15.0 / 16.0)).sqrt();
    for c in counts {
        assert!((c as f64 - n as f64 / 16.0).abs() <= 3.0 * se, "count {c}");
    }
}

#[test]
fn sampled_frequencies_match_enumeration() {
    let spec = NetworkSpec::new(2, 3, vec![vec![0.2, 0.7, 1.0], vec![0.5, 0.0, 0.35]], WeightScheme::Homogeneous).unwrap();
    let objects = vec![ObjectParams::exponential_with_rho(1.0, 1.0, 0.5).unwrap(); 3];
    let g = AgentSet::all(2).unwrap();
    let reals = enumerate(&spec, &objects, &g).unwrap();
    let n = 200_000u64;
    let mut counts = vec![0u64; reals.len()];
    for seed in 0..n {
        let r = sample(&spec, &objects, &g, seed).unwrap();
        let k = reals.iter().position(|e| e.indicator == r.indicator).expect("sampled state is enumerable");
        counts[k] += 1;
    }
    let chi2: f64 = reals
        .iter()
        .zip(&counts)
        .map(|(r, &c)| {
            let e = r.probability.unwrap() * n as f64;
            (c as f64 - e).powi(2) / e
        })
        .sum();
    // 15 degrees of freedom; the 0.999 quantile is about 37.7
    assert!(chi2 < 37.7, "chi-square {chi2}");
}

#[test]
fn jump_epochs_catch_every_hit() {
    let spec = NetworkSpec::bernoulli(2, 2, 0.5, WeightScheme::Homogeneous).unwrap();
    let objects = vec![
        ObjectParams::exponential_with_rho(0.5, 1.0, 0.6).unwrap(),
        ObjectParams::new(0.8, JumpLaw::Erlang { shape: 2, mean: 0.7 }, 0.7).unwrap(),
    ];
    let g = AgentSet::all(2).unwrap();
    let horizon = 20.0;
    let steps = 100_000;
    for seed in 0..1000 {
        let trace = sample_path_trace(&spec, &objects, &g, horizon, seed).unwrap();
        let at_epochs = trace.epoch_values().into_iter().fold(f64::NEG_INFINITY, f64::max);
        // sweep the grid incrementally
        let mut next = 0;
        let mut jumps = 0.0;
        let mut grid_max = f64::NEG_INFINITY;
        for k in 0..=steps {
            let t = horizon * k as f64 / steps as f64;
            while next < trace.epochs.len() && trace.epochs[next].0 <= t {
                let (_, j, x) = trace.epochs[next];
                jumps += trace.exposure[j] * x;
                next += 1;
            }
            grid_max = grid_max.max(jumps - trace.drift * t);
        }
        assert!(grid_max <= at_epochs + 1e-9, "seed {seed}: grid {grid_max} above epochs {at_epochs}");
        assert!((trace.value_at(horizon / 2.0) - {
            let e: f64 = trace.epochs.iter().filter(|e| e.0 <= horizon / 2.0).map(|e| trace.exposure[e.1] * e.2).sum();
            e - trace.drift * horizon / 2.0
        })
        .abs()
            < 1e-9);
    }
}

#[test]
fn estimates_agree_with_exact_values() {
    let cases = [
        (NetworkSpec::bernoulli(2, 2, 0.4, WeightScheme::Homogeneous).unwrap(), fig5(), AgentSet::all(2).unwrap(), vec![1.0, 2.0]),
        (
            NetworkSpec::new(3, 2, vec![vec![0.3, 0.8], vec![0.5, 0.5], vec![1.0, 0.2]], WeightScheme::InverseDrift { scale: None }).unwrap(),
            fig5(),
            AgentSet::new(vec![0, 2], 3).unwrap(),
            vec![0.5, 0.5],
        ),
        (
            NetworkSpec::bernoulli(2, 2, 0.6, WeightScheme::Homogeneous).unwrap(),
            vec![
                ObjectParams::exponential_with_rho(0.5, 1.0, 0.4).unwrap(),
                ObjectParams::exponential_with_rho(1.0, 2.0, 1.2).unwrap(),
            ],
            AgentSet::single(1, 2).unwrap(),
            vec![1.5],
        ),
    ];
    for (k, (spec, objects, group, u)) in cases.into_iter().enumerate() {
        let q = HittingQuery::new(spec, objects, group, u, 1e-8).unwrap();
        let exact = hitting_sum(&q).unwrap();
        let e = estimate_hitting(&q, &SimPlan { n_paths: 200_000, seed: k as u64, ..SimPlan::default() }).unwrap();
        let slack = 3.0 * e.std_error + e.truncation_bound.unwrap_or(0.0) + exact.error_bound;
        assert!((e.mean - exact.value).abs() <= slack, "case {k}: mc {} vs exact {}", e.mean, exact.value);
    }
}

#[test]
fn joint_hitting_is_dominated_by_single_and_bounds() {
    let spec = NetworkSpec::bernoulli(2, 2, 0.5, WeightScheme::Homogeneous).unwrap();
    let objects = fig5();
    let g = AgentSet::all(2).unwrap();
    let u = vec![1.0, 1.5];
    let plan = SimPlan { n_paths: 200_000, seed: 17, ..SimPlan::default() };
    let grid = estimate_hitting_grid(&spec, &objects, &g, &[Target::Joint], &[u.clone()], &plan).unwrap();
    let joint = grid[0][0];
    for (pos, &i) in g.members().iter().enumerate() {
        let single = hitting_sum(&HittingQuery::new(spec.clone(), objects.clone(), AgentSet::single(i, 2).unwrap(), vec![u[pos]], 1e-8).unwrap()).unwrap();
        assert!(joint.mean <= single.value + 3.0 * joint.std_error + single.error_bound);
    }
    let alloc = optimize_allocation(&objects, &g, &u).unwrap();
    let bound = lundberg_bound_joint(&spec, &objects, &g, &u, &alloc).unwrap();
    assert!(bound >= joint.mean - 3.0 * joint.std_error);
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let spec = NetworkSpec::bernoulli(2, 2, 0.5, WeightScheme::Homogeneous).unwrap();
    let q = HittingQuery::new(spec, fig5(), AgentSet::all(2).unwrap(), vec![1.0, 1.0], 1e-3).unwrap();
    let plan = SimPlan { n_paths: 20_000, seed: 4, ..SimPlan::default() };
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(|| estimate_hitting(&q, &plan).unwrap());
    let many = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap().install(|| estimate_hitting(&q, &plan).unwrap());
    assert_eq!(one, many);
}
