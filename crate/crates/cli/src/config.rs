//! Experiment configuration files (TOML) with environment overrides.

use netpk::model::{JumpLaw, ObjectParams};
use netpk::network::{AgentSet, NetworkSpec, WeightScheme};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Prefix of environment variables overriding config keys, e.g. `NETPK__RUN__SEED=7`
/// or `NETPK__OBJECTS__0__DRIFT=2.5`.
pub const ENV_PREFIX: &str = "NETPK__";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub objects: Vec<ObjectConfig>,
    pub network: NetworkConfig,
    #[serde(default)]
    pub query: QueryConfig,
    #[serde(default)]
    pub run: RunConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectConfig {
    pub lambda: f64,
    pub jump: JumpLaw,
    pub drift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EdgeProb {
    Scalar(f64),
    Matrix(Vec<Vec<f64>>),
    /// Only `"complete"` is accepted.
    Keyword(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub q: usize,
    pub d: usize,
    pub edge_prob: EdgeProb,
    #[serde(default = "homogeneous")]
    pub scheme: WeightScheme,
}

fn homogeneous() -> WeightScheme {
    WeightScheme::Homogeneous
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    Sum,
    Single,
    Joint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryConfig {
    /// Agents of the group, numbered from 1.
    #[serde(default = "first_agent")]
    pub group: Vec<usize>,
    /// Barriers aligned with `group`; defaults to 1 for every member.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<Vec<f64>>,
    /// Sweep: every member's barrier set to each value in turn.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_grid: Option<Vec<f64>>,
    /// Sweep over a common Bernoulli edge probability.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_grid: Option<Vec<f64>>,
    #[serde(default = "sum_target")]
    pub target: TargetKind,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn first_agent() -> Vec<usize> {
    vec![1]
}

fn sum_target() -> TargetKind {
    TargetKind::Sum
}

fn default_tol() -> f64 {
    1e-6
}

impl Default for QueryConfig {
    fn default() -> Self {
        QueryConfig { group: first_agent(), u: None, u_grid: None, p_grid: None, target: TargetKind::Sum, tol: default_tol() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    Mc,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "exact")]
    pub method: Method,
    #[serde(default = "default_paths")]
    pub n_paths: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub antithetic: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

fn exact() -> Method {
    Method::Exact
}

fn default_paths() -> u64 {
    100_000
}

fn default_epsilon() -> f64 {
    1e-4
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { method: Method::Exact, n_paths: default_paths(), seed: 0, epsilon: default_epsilon(), antithetic: false, output: None }
    }
}

/// Validated model built from a config.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub spec: NetworkSpec,
    pub objects: Vec<ObjectParams>,
    pub group: AgentSet,
    /// Barriers aligned with the group members.
    pub u: Vec<f64>,
}

impl ExperimentConfig {
    /// Parses TOML text, applying `NETPK__` overrides from `env`.
    pub fn parse(text: &str, env: impl IntoIterator<Item = (String, String)>) -> Result<Self, CliError> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| CliError::Validation(e.to_string()))?;
        let mut overrides: Vec<(String, String)> = env.into_iter().filter(|(k, _)| k.starts_with(ENV_PREFIX)).collect();
        overrides.sort();
        for (key, raw) in overrides {
            let path: Vec<String> = key[ENV_PREFIX.len()..].split("__").map(|s| s.to_lowercase()).collect();
            set_path(&mut table, &path, parse_value(&raw)).map_err(|e| CliError::Validation(format!("{key}: {e}")))?;
        }
        let cfg: ExperimentConfig =
            toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| CliError::Validation(e.to_string()))?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configs serialize")
    }

    /// Network spec with the given common edge probability (or the configured one).
    pub fn network_spec(&self, p: Option<f64>) -> Result<NetworkSpec, CliError> {
        let n = &self.network;
        let probs = match (p, &n.edge_prob) {
            (Some(p), _) | (None, &EdgeProb::Scalar(p)) => vec![vec![p; n.d]; n.q],
            (None, EdgeProb::Matrix(m)) => m.clone(),
            (None, EdgeProb::Keyword(k)) if k == "complete" => vec![vec![1.0; n.d]; n.q],
            (None, EdgeProb::Keyword(k)) => {
                return Err(CliError::Validation(format!("network.edge_prob: unknown keyword {k:?}; use a number, a matrix or \"complete\"")))
            }
        };
        NetworkSpec::new(n.q, n.d, probs, n.scheme.clone()).map_err(|e| CliError::validation("network", e))
    }

    pub fn object_params(&self) -> Result<Vec<ObjectParams>, CliError> {
        self.objects
            .iter()
            .enumerate()
            .map(|(j, o)| ObjectParams::new(o.lambda, o.jump.clone(), o.drift).map_err(|e| CliError::validation(&format!("objects[{j}]"), e)))
            .collect()
    }

    pub fn group(&self) -> Result<AgentSet, CliError> {
        let q = self.network.q;
        if self.query.group.iter().any(|&i| i == 0) {
            return Err(CliError::Validation("query.group: agents are numbered from 1".into()));
        }
        AgentSet::new(self.query.group.iter().map(|i| i - 1).collect(), q).map_err(|e| CliError::validation("query.group", e))
    }

    /// Barrier vectors to evaluate: one per sweep point, aligned with the group.
    pub fn barriers(&self) -> Result<Vec<Vec<f64>>, CliError> {
        let n = self.query.group.len();
        let list = match (&self.query.u_grid, &self.query.u) {
            (Some(grid), _) => grid.iter().map(|&v| vec![v; n]).collect(),
            (None, Some(u)) => vec![u.clone()],
            (None, None) => vec![vec![1.0; n]],
        };
        for u in &list {
            if u.len() != n || u.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                return Err(CliError::Validation(format!("query.u: need {n} nonnegative barriers, got {u:?}")));
            }
        }
        Ok(list)
    }

    /// Fully validated model at the configured edge probabilities.
    pub fn model(&self) -> Result<Model, CliError> {
        let objects = self.object_params()?;
        if objects.len() != self.network.d {
            return Err(CliError::Validation(format!(
                "objects: {} objects listed but network.d = {}",
                objects.len(),
                self.network.d
            )));
        }
        let spec = self.network_spec(None)?;
        spec.check_objects(&objects).map_err(|e| CliError::validation("network", e))?;
        let group = self.group()?;
        let u = self.barriers()?.remove(0);
        if !(self.query.tol > 0.0) {
            return Err(CliError::Validation("query.tol: must be positive".into()));
        }
        if let Some(grid) = &self.query.p_grid {
            if grid.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(CliError::Validation("query.p_grid: probabilities must lie in [0, 1]".into()));
            }
        }
        Ok(Model { spec, objects, group, u })
    }
}

fn parse_value(raw: &str) -> toml::Value {
    match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

fn set_path(table: &mut toml::Table, path: &[String], value: toml::Value) -> Result<(), String> {
    let (head, rest) = path.split_first().ok_or("empty key")?;
    if rest.is_empty() {
        table.insert(head.clone(), value);
        return Ok(());
    }
    let entry = table.entry(head.clone()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
    set_value(entry, rest, value)
}

fn set_value(node: &mut toml::Value, path: &[String], value: toml::Value) -> Result<(), String> {
    match node {
        toml::Value::Table(t) => set_path(t, path, value),
        toml::Value::Array(a) => {
            let (head, rest) = path.split_first().ok_or("empty key")?;
            let idx: usize = head.parse().map_err(|_| format!("{head} is not an array index"))?;
            let len = a.len();
            let slot = a.get_mut(idx).ok_or(format!("index {idx} out of range for {len} entries"))?;
            if rest.is_empty() {
                *slot = value;
                Ok(())
            } else {
                set_value(slot, rest, value)
            }
        }
        _ => Err(format!("cannot descend into {}", path.join("."))),
    }
}
