//! Subcommand drivers. Each returns a CSV table.

use netpk::hitting::{hitting_single, hitting_sum_levels};
use netpk::lundberg::{lundberg_bound_joint, lundberg_bound_sum, object_kappas, optimize_allocation};
use netpk::model::{JumpLaw, ObjectParams};
use netpk::montecarlo::{estimate_hitting_grid, estimate_pk_moments, Estimate, SimPlan, Target};
use netpk::network::{AgentSet, NetworkSpec, WeightScheme};
use netpk::pk::{conditional_moments, pk_distribution_factorized};
use netpk::poisson_approx::{delta_method_mean_pk, surrogate_expectation, tv_bound, SurrogateVariant};
use netpk::two_by_two::{config_table, psi1_homogeneous, psi_joint_bounds, psi_sum_homogeneous, EdgeProbs};

use crate::config::{ExperimentConfig, Method, Model, TargetKind};
use crate::error::CliError;
use crate::presets::{half_load_objects, p_sweep, preset};

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    fn with_barriers(group: &AgentSet, rest: &[&str]) -> Self {
        let mut header: Vec<String> = group.members().iter().map(|i| format!("u{}", i + 1)).collect();
        header.extend(rest.iter().map(|s| s.to_string()));
        Table { header, rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write<W: std::io::Write>(&self, w: W) -> Result<(), CliError> {
        let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        out.write_record(&self.header)?;
        for r in &self.rows {
            out.write_record(r)?;
        }
        out.flush()?;
        Ok(())
    }
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn nums(xs: &[f64]) -> Vec<String> {
    xs.iter().map(|&x| num(x)).collect()
}

fn wants_exact(m: Method) -> bool {
    matches!(m, Method::Exact | Method::Both)
}

fn wants_mc(m: Method) -> bool {
    matches!(m, Method::Mc | Method::Both)
}

fn plan(cfg: &ExperimentConfig) -> SimPlan {
    SimPlan {
        n_paths: cfg.run.n_paths,
        horizon: None,
        epsilon: cfg.run.epsilon,
        seed: cfg.run.seed,
        antithetic: cfg.run.antithetic,
        target: Target::Sum,
    }
}

/// Edge-probability sweep points (`None` = the configured network).
fn p_points(cfg: &ExperimentConfig) -> Vec<Option<f64>> {
    match &cfg.query.p_grid {
        Some(g) => g.iter().map(|&p| Some(p)).collect(),
        None => vec![None],
    }
}

fn p_label(spec: &NetworkSpec, p: Option<f64>) -> String {
    match p {
        Some(p) => num(p),
        None => {
            let first = spec.edge_prob[0][0];
            if spec.edge_prob.iter().flatten().all(|&x| x == first) {
                num(first)
            } else {
                String::new()
            }
        }
    }
}

pub fn pk_dist(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let m = cfg.model()?;
    let mut t = Table::new(&["p", "value", "probability"]);
    for p in p_points(cfg) {
        let spec = cfg.network_spec(p)?;
        let dist = pk_distribution_factorized(&spec, &m.objects, &m.group)?;
        for (v, mass) in dist.atoms {
            t.push(vec![p_label(&spec, p), num(v), num(mass)]);
        }
    }
    Ok(t)
}

pub fn pk_moments(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let m = cfg.model()?;
    let mut t = Table::new(&["p", "method", "mean", "var", "cond_mean", "cond_sd", "prob_at_least_one", "se_mean", "se_cond_mean"]);
    for p in p_points(cfg) {
        let spec = cfg.network_spec(p)?;
        if wants_exact(cfg.run.method) {
            let mo = conditional_moments(&pk_distribution_factorized(&spec, &m.objects, &m.group)?)?;
            let mut row = vec![p_label(&spec, p), "exact".into()];
            row.extend(nums(&[mo.mean, mo.var, mo.cond_mean, mo.cond_sd(), mo.prob_at_least_one]));
            row.extend([String::new(), String::new()]);
            t.push(row);
        }
        if wants_mc(cfg.run.method) {
            let e = estimate_pk_moments(&spec, &m.objects, &m.group, cfg.run.n_paths as usize, cfg.run.seed)?;
            let mo = e.moments;
            let mut row = vec![p_label(&spec, p), "mc".into()];
            row.extend(nums(&[mo.mean, mo.var, mo.cond_mean, mo.cond_sd(), mo.prob_at_least_one, e.se_mean, e.se_cond_mean]));
            t.push(row);
        }
    }
    Ok(t)
}

fn mc_row(e: &Estimate) -> Vec<String> {
    vec!["mc".into(), num(e.mean), String::new(), num(e.std_error), opt(e.truncation_bound)]
}

pub fn hit_sum(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let m = cfg.model()?;
    let barriers = cfg.barriers()?;
    let mut t = Table::with_barriers(&m.group, &["total", "method", "value", "error_bound", "std_error", "truncation_bound"]);
    let totals: Vec<f64> = barriers.iter().map(|u| u.iter().sum()).collect();
    let exact = if wants_exact(cfg.run.method) {
        Some(hitting_sum_levels(&m.spec, &m.objects, &m.group, &totals, cfg.query.tol)?)
    } else {
        None
    };
    let mc = if wants_mc(cfg.run.method) {
        Some(estimate_hitting_grid(&m.spec, &m.objects, &m.group, &[Target::Sum], &barriers, &plan(cfg))?.remove(0))
    } else {
        None
    };
    for (l, u) in barriers.iter().enumerate() {
        let mut lead = nums(u);
        lead.push(num(totals[l]));
        if let Some(ex) = &exact {
            let r = &ex[l];
            let method = serde_plain(&r.method);
            let mut row = lead.clone();
            row.extend([method, num(r.value), num(r.error_bound), String::new(), String::new()]);
            t.push(row);
        }
        if let Some(mc) = &mc {
            let mut row = lead.clone();
            row.extend(mc_row(&mc[l]));
            t.push(row);
        }
    }
    Ok(t)
}

fn serde_plain<T: serde::Serialize>(v: &T) -> String {
    toml::Value::try_from(v).ok().and_then(|x| x.as_str().map(str::to_string)).unwrap_or_default()
}

pub fn hit_single(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let m = cfg.model()?;
    let barriers = cfg.barriers()?;
    let mut t = Table::new(&["agent", "u", "method", "value", "error_bound", "std_error", "truncation_bound"]);
    let targets: Vec<Target> = m.group.members().iter().map(|&i| Target::Single(i)).collect();
    let mc = if wants_mc(cfg.run.method) {
        Some(estimate_hitting_grid(&m.spec, &m.objects, &m.group, &targets, &barriers, &plan(cfg))?)
    } else {
        None
    };
    for (pos, &i) in m.group.members().iter().enumerate() {
        for (l, u) in barriers.iter().enumerate() {
            let lead = vec![(i + 1).to_string(), num(u[pos])];
            if wants_exact(cfg.run.method) {
                let r = hitting_single(&m.spec, &m.objects, i, u[pos], cfg.query.tol)?;
                let mut row = lead.clone();
                row.extend([serde_plain(&r.method), num(r.value), num(r.error_bound), String::new(), String::new()]);
                t.push(row);
            }
            if let Some(mc) = &mc {
                let mut row = lead.clone();
                row.extend(mc_row(&mc[pos][l]));
                t.push(row);
            }
        }
    }
    Ok(t)
}

/// Edge probabilities of a 2x2 spec, if the model is 2x2 with exponential jumps.
fn two_by_two_probs(m: &Model) -> Option<EdgeProbs> {
    let exp = m.objects.iter().all(|o| matches!(o.jump, JumpLaw::Exponential { .. }));
    if m.spec.q == 2 && m.spec.d == 2 && exp {
        let p = &m.spec.edge_prob;
        Some([[p[0][0], p[0][1]], [p[1][0], p[1][1]]])
    } else {
        None
    }
}

pub fn hit_joint_bounds(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let m = cfg.model()?;
    let barriers = cfg.barriers()?;
    let mut t = Table::with_barriers(
        &m.group,
        &["lundberg_joint", "lower", "upper_casewise", "upper_global", "mc_value", "std_error", "truncation_bound"],
    );
    let pair = m.group.len() == 2 && matches!(m.spec.scheme, WeightScheme::Homogeneous);
    let probs = two_by_two_probs(&m).filter(|_| pair);
    let mc = if wants_mc(cfg.run.method) {
        Some(estimate_hitting_grid(&m.spec, &m.objects, &m.group, &[Target::Joint], &barriers, &plan(cfg))?.remove(0))
    } else {
        None
    };
    for (l, u) in barriers.iter().enumerate() {
        let alloc = optimize_allocation(&m.objects, &m.group, u)?;
        let mut row = nums(u);
        row.push(num(lundberg_bound_joint(&m.spec, &m.objects, &m.group, u, &alloc)?));
        match probs {
            Some(p) => {
                let b = psi_joint_bounds(&m.objects, &p, [u[0], u[1]], cfg.query.tol)?;
                row.extend(nums(&[b.lower, b.upper_casewise, b.upper_global]));
            }
            None => row.extend([String::new(), String::new(), String::new()]),
        }
        match &mc {
            Some(mc) => row.extend([num(mc[l].mean), num(mc[l].std_error), opt(mc[l].truncation_bound)]),
            None => row.extend([String::new(), String::new(), String::new()]),
        }
        t.push(row);
    }
    Ok(t)
}

pub fn lundberg(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let m = cfg.model()?;
    let barriers = cfg.barriers()?;
    let kappa = object_kappas(&m.objects)?.into_iter().fold(f64::INFINITY, f64::min);
    let mut rest = vec!["kappa_min", "sum_bound", "joint_bound"];
    let alloc_cols: Vec<String> = m.group.members().iter().map(|i| format!("r{}", i + 1)).collect();
    rest.extend(alloc_cols.iter().map(String::as_str));
    let mut t = Table::with_barriers(&m.group, &rest);
    for u in &barriers {
        let alloc = optimize_allocation(&m.objects, &m.group, u)?;
        let mut row = nums(u);
        row.push(num(kappa));
        row.push(num(lundberg_bound_sum(&m.spec, &m.objects, &m.group, u, None)?));
        row.push(num(lundberg_bound_joint(&m.spec, &m.objects, &m.group, u, &alloc)?));
        row.extend(nums(&alloc.r_star));
        t.push(row);
    }
    Ok(t)
}

pub fn poisson_approx(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let m = cfg.model()?;
    let variant = match m.spec.scheme {
        WeightScheme::Homogeneous => SurrogateVariant::HomogeneousGroup,
        WeightScheme::ExponentialSystem { .. } => SurrogateVariant::ExponentialSystem,
        _ => return Err(CliError::Validation("network.scheme: Poisson surrogates need homogeneous or exponential-system weights".into())),
    };
    let mut t = Table::new(&[
        "p",
        "tv_bound",
        "exact_mean_min1",
        "surrogate_mean_min1",
        "surrogate_se",
        "delta_mean",
        "delta_mean_second_order",
        "exact_mean",
    ]);
    let g = |v: f64| v.min(1.0);
    for p in p_points(cfg) {
        let spec = cfg.network_spec(p)?;
        let dist = pk_distribution_factorized(&spec, &m.objects, &m.group)?;
        let (mc, se) = surrogate_expectation(&spec, &m.objects, &m.group, variant, cfg.run.n_paths, cfg.run.seed, g)?;
        let (delta, delta2) = if variant == SurrogateVariant::HomogeneousGroup && m.group.len() == 1 {
            let dm = delta_method_mean_pk(&spec, &m.objects, m.group.members()[0])?;
            (Some(dm.mean), Some(dm.mean_second_order))
        } else {
            (None, None)
        };
        t.push(vec![
            p_label(&spec, p),
            num(tv_bound(&spec)),
            num(dist.expect(g)),
            num(mc),
            num(se),
            opt(delta),
            opt(delta2),
            num(dist.mean()),
        ]);
    }
    Ok(t)
}

pub fn two_by_two(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let m = cfg.model()?;
    if m.spec.q != 2 || m.spec.d != 2 {
        return Err(CliError::Validation("network: the configuration table needs q = d = 2".into()));
    }
    let p = &m.spec.edge_prob;
    let probs = [[p[0][0], p[0][1]], [p[1][0], p[1][1]]];
    let table = config_table(&m.objects, &probs, &m.spec.scheme)?;
    let mut t = Table::new(&["configuration", "edges", "probability", "p1", "p12"]);
    for e in table.entries {
        let edges: Vec<String> = (0..2)
            .flat_map(|i| (0..2).map(move |j| (i, j)))
            .filter(|&(i, j)| e.indicator[i][j])
            .map(|(i, j)| format!("{}~{}", i + 1, j + 1))
            .collect();
        t.push(vec![e.index.to_string(), edges.join(" "), num(e.probability), num(e.p1), num(e.p12)]);
    }
    Ok(t)
}

pub fn simulate(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let m = cfg.model()?;
    let barriers = cfg.barriers()?;
    let targets: Vec<(String, Target)> = match cfg.query.target {
        TargetKind::Sum => vec![("sum".into(), Target::Sum)],
        TargetKind::Joint => vec![("joint".into(), Target::Joint)],
        TargetKind::Single => m.group.members().iter().map(|&i| (format!("single{}", i + 1), Target::Single(i))).collect(),
    };
    let kinds: Vec<Target> = targets.iter().map(|t| t.1).collect();
    let grid = estimate_hitting_grid(&m.spec, &m.objects, &m.group, &kinds, &barriers, &plan(cfg))?;
    let mut t = Table::with_barriers(&m.group, &["target", "value", "std_error", "truncation_bound", "n_paths", "hits"]);
    for (k, (name, _)) in targets.iter().enumerate() {
        for (l, u) in barriers.iter().enumerate() {
            let e = grid[k][l];
            let mut row = nums(u);
            row.extend([name.clone(), num(e.mean), num(e.std_error), opt(e.truncation_bound), e.n_paths.to_string(), e.hits.to_string()]);
            t.push(row);
        }
    }
    Ok(t)
}

pub const FIGURES: [&str; 5] = ["fig2", "fig3-left", "fig3-right", "fig4", "fig5"];

fn cond_moments(q: usize, objects: &[ObjectParams], group: &AgentSet, p: f64) -> Result<(f64, f64), CliError> {
    let spec = NetworkSpec::bernoulli(q, objects.len(), p, WeightScheme::Homogeneous)?;
    let mo = conditional_moments(&pk_distribution_factorized(&spec, objects, group)?)?;
    Ok((mo.cond_mean, mo.cond_sd()))
}

fn params(cfgs: Vec<crate::config::ObjectConfig>) -> Result<Vec<ObjectParams>, CliError> {
    cfgs.into_iter().map(|o| ObjectParams::new(o.lambda, o.jump, o.drift).map_err(CliError::from)).collect()
}

/// Figure data; `p_grid` overrides the default sweep `0.01, ..., 1`.
pub fn figures(name: &str, p_grid: Option<Vec<f64>>) -> Result<Table, CliError> {
    let grid = p_grid.unwrap_or_else(p_sweep);
    let low_high = [0.1, 0.1, 0.1, 1.1, 1.1, 1.1];
    match name {
        "fig2" => {
            // E[P^Q | deg(Q) > 0] for Q = {1, ..., n}
            let objects = params(half_load_objects(&low_high))?;
            let mut t = Table::new(&["n", "p", "cond_mean", "cond_sd"]);
            for n in 1..=6 {
                let group = AgentSet::new((0..n).collect(), 6)?;
                for &p in &grid {
                    let (mean, sd) = cond_moments(6, &objects, &group, p)?;
                    t.push(vec![n.to_string(), num(p), num(mean), num(sd)]);
                }
            }
            Ok(t)
        }
        "fig3-left" => {
            let objects = params(half_load_objects(&low_high))?;
            let mut t = Table::new(&["q", "p", "cond_mean"]);
            for q in 1..=6 {
                let group = AgentSet::single(0, q)?;
                for &p in &grid {
                    t.push(vec![q.to_string(), num(p), num(cond_moments(q, &objects, &group, p)?.0)]);
                }
            }
            Ok(t)
        }
        "fig3-right" => {
            let mut t = Table::new(&["d", "p", "cond_mean"]);
            for d in [2usize, 4, 6, 8, 10] {
                let rhos: Vec<f64> = (0..d).map(|j| if j % 2 == 0 { 0.1 } else { 1.1 }).collect();
                let objects = params(half_load_objects(&rhos))?;
                let group = AgentSet::single(0, 6)?;
                for &p in &grid {
                    t.push(vec![d.to_string(), num(p), num(cond_moments(6, &objects, &group, p)?.0)]);
                }
            }
            Ok(t)
        }
        "fig4" => {
            // n objects with rho = 0.1, the other 6 - n with rho = 1.1
            let mut t = Table::new(&["n", "p", "cond_mean", "cond_sd"]);
            for n in 0..=6 {
                let rhos: Vec<f64> = (0..6).map(|j| if j >= 6 - n { 0.1 } else { 1.1 }).collect();
                let objects = params(half_load_objects(&rhos))?;
                let group = AgentSet::single(0, 6)?;
                for &p in &grid {
                    let (mean, sd) = cond_moments(6, &objects, &group, p)?;
                    t.push(vec![n.to_string(), num(p), num(mean), num(sd)]);
                }
            }
            Ok(t)
        }
        "fig5" => {
            let mut t = Table::new(&[
                "p",
                "u",
                "psi1",
                "psi1_lower",
                "psi1_upper",
                "psi12",
                "psi12_lower",
                "psi12_upper",
                "joint_lower",
                "joint_upper_casewise",
                "joint_upper_global",
            ]);
            for name in ["fig5-p02", "fig5-p08"] {
                let cfg = preset(name).expect("preset exists");
                let m = cfg.model()?;
                let p = two_by_two_probs(&m).expect("2x2 exponential preset");
                for u in cfg.barriers()? {
                    let a = psi1_homogeneous(&m.objects, &p, u[0], 1e-10)?;
                    let b = psi_sum_homogeneous(&m.objects, &p, [u[0], u[1]], 1e-10)?;
                    let j = psi_joint_bounds(&m.objects, &p, [u[0], u[1]], 1e-10)?;
                    let mut row = vec![num(p[0][0]), num(u[0])];
                    row.extend(nums(&[a.value, a.lower, a.upper, b.value, b.lower, b.upper, j.lower, j.upper_casewise, j.upper_global]));
                    t.push(row);
                }
            }
            Ok(t)
        }
        _ => Err(CliError::Validation(format!("unknown figure {name:?}; choose one of {}", FIGURES.join(", ")))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use netpk::pk::pk_distribution;

    #[test]
    fn factorized_table_matches_enumeration() {
        let mut cfg = preset("risk-balancing").unwrap();
        cfg.network.scheme = WeightScheme::Homogeneous;
        let m = cfg.model().unwrap();
        let full = pk_distribution(&m.spec, &m.objects, &m.group).unwrap();
        let t = pk_dist(&cfg).unwrap();
        assert_eq!(t.rows.len(), full.atoms.len());
        for (row, (v, w)) in t.rows.iter().zip(&full.atoms) {
            let v2: f64 = row[1].parse().unwrap();
            let w2: f64 = row[2].parse().unwrap();
            assert!((v - v2).abs() < 1e-12 && (w - w2).abs() < 1e-12, "{row:?} vs {v} {w}");
        }
    }

    #[test]
    fn two_by_two_table_sums_to_one() {
        let cfg = preset("switch-2x2").unwrap();
        let t = two_by_two(&cfg).unwrap();
        assert_eq!(t.rows.len(), 16);
        let total: f64 = t.rows.iter().map(|r| r[2].parse::<f64>().unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unknown_figure_is_a_validation_error() {
        assert_eq!(figures("fig9", None).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn csv_uses_lf_endings() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec!["1".into(), "0.5".into()]);
        let mut buf = Vec::new();
        t.write(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "a,b\n1,0.5\n");
    }
}
