//! Named experiment configurations.

use netpk::model::JumpLaw;
use netpk::network::WeightScheme;

use crate::config::{EdgeProb, ExperimentConfig, Method, NetworkConfig, ObjectConfig, QueryConfig, RunConfig, TargetKind};

pub const NAMES: [&str; 8] = ["fig2", "fig3-left", "fig3-right", "fig4", "fig5-p02", "fig5-p08", "switch-2x2", "risk-balancing"];

/// Exponential object with `lambda mu = load` and the given `rho`.
fn object(lambda: f64, mean: f64, rho: f64) -> ObjectConfig {
    ObjectConfig { lambda, jump: JumpLaw::Exponential { mean }, drift: lambda * mean / rho }
}

/// Loads `lambda mu = 0.5` with the given `rho` values.
pub fn half_load_objects(rhos: &[f64]) -> Vec<ObjectConfig> {
    rhos.iter().map(|&r| object(0.5, 1.0, r)).collect()
}

/// `p = 0.01, 0.02, ..., 1`.
pub fn p_sweep() -> Vec<f64> {
    (1..=100).map(|k| k as f64 / 100.0).collect()
}

fn bernoulli(q: usize, d: usize, p: f64, scheme: WeightScheme) -> NetworkConfig {
    NetworkConfig { q, d, edge_prob: EdgeProb::Scalar(p), scheme }
}

fn moments_sweep(q: usize, objects: Vec<ObjectConfig>) -> ExperimentConfig {
    let d = objects.len();
    ExperimentConfig {
        objects,
        network: bernoulli(q, d, 0.5, WeightScheme::Homogeneous),
        query: QueryConfig { p_grid: Some(p_sweep()), ..QueryConfig::default() },
        run: RunConfig::default(),
    }
}

fn fig5(p: f64) -> ExperimentConfig {
    ExperimentConfig {
        objects: vec![object(0.5, 1.0, 0.6), object(0.5, 1.0, 0.9)],
        network: bernoulli(2, 2, p, WeightScheme::Homogeneous),
        query: QueryConfig {
            group: vec![1, 2],
            u_grid: Some((1..=10).map(|k| 0.5 * k as f64).collect()),
            ..QueryConfig::default()
        },
        run: RunConfig { method: Method::Both, n_paths: 1_000_000, ..RunConfig::default() },
    }
}

pub fn preset(name: &str) -> Option<ExperimentConfig> {
    let low_high = [0.1, 0.1, 0.1, 1.1, 1.1, 1.1];
    Some(match name {
        "fig2" | "fig3-left" | "fig4" => moments_sweep(6, half_load_objects(&low_high)),
        "fig3-right" => moments_sweep(6, half_load_objects(&[0.1, 1.1, 0.1, 1.1, 0.1, 1.1])),
        "fig5-p02" => fig5(0.2),
        "fig5-p08" => fig5(0.8),
        "switch-2x2" => ExperimentConfig {
            objects: vec![object(0.5, 1.0, 0.6), object(0.5, 1.0, 0.9)],
            network: NetworkConfig {
                q: 2,
                d: 2,
                edge_prob: EdgeProb::Matrix(vec![vec![0.7, 0.3], vec![0.3, 0.7]]),
                scheme: WeightScheme::ExponentialSystem { r: Some(0.5) },
            },
            query: QueryConfig {
                group: vec![1],
                u_grid: Some((1..=10).map(|k| 5.0 * k as f64).collect()),
                target: TargetKind::Single,
                ..QueryConfig::default()
            },
            run: RunConfig::default(),
        },
        "risk-balancing" => ExperimentConfig {
            objects: vec![object(0.5, 1.0, 0.5), object(1.0, 2.0, 0.8), object(0.2, 0.5, 0.3), object(2.0, 1.0, 0.95)],
            network: bernoulli(3, 4, 0.5, WeightScheme::InverseExpectedLoss { k: None }),
            query: QueryConfig {
                group: vec![1],
                u_grid: Some((0..=10).map(|k| k as f64).collect()),
                ..QueryConfig::default()
            },
            run: RunConfig::default(),
        },
        _ => return None,
    })
}
