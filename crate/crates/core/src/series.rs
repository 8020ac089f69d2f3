//! Integrated tails and compound-geometric tail probabilities.
//!
//! The hitting probability of a one-dimensional compound Poisson process with
//! parameter `rho < 1` is the tail of a geometric sum of ladder heights:
//! `(1 - rho) sum_{n >= 1} rho^n (1 - F_I^{n*}(u))`. Ladder heights follow the
//! integrated tail `F_I` of the jump law. Mixtures of exponential ladder laws
//! are evaluated in closed form; everything else goes through a lattice
//! recursion bracketed by lower and upper rounding.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{erlang_survival, JumpLaw, ObjectParams};
use crate::network::{AdjacencyRealization, AgentSet};

/// Largest lattice size used by the recursion; the step is coarsened beyond it.
pub const MAX_LATTICE_POINTS: usize = 40_000;

/// The law of `s X` for a jump `X` with law `law`.
pub fn scale_law(law: &JumpLaw, s: f64) -> JumpLaw {
    match law {
        JumpLaw::Exponential { mean } => JumpLaw::Exponential { mean: mean * s },
        JumpLaw::Erlang { shape, mean } => JumpLaw::Erlang { shape: *shape, mean: mean * s },
        JumpLaw::Deterministic { value } => JumpLaw::Deterministic { value: value * s },
        JumpLaw::Empirical { step, masses } => JumpLaw::Empirical { step: step * s, masses: masses.clone() },
    }
}

/// Mixture `sum_k w_k G_{k,I}` of integrated tails of jump laws `G_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegratedTail {
    components: Vec<(f64, JumpLaw)>,
}

impl IntegratedTail {
    /// Integrated tail of a single jump law.
    pub fn of_law(law: &JumpLaw) -> Self {
        IntegratedTail { components: vec![(1.0, law.clone())] }
    }

    /// Exponential ladder heights with the given mean.
    pub fn exponential(mean: f64) -> Self {
        Self::of_law(&JumpLaw::Exponential { mean })
    }

    /// Mixture with nonnegative weights (normalized internally).
    pub fn mixture(components: Vec<(f64, JumpLaw)>) -> Result<Self> {
        let total: f64 = components.iter().map(|c| c.0).sum();
        if components.is_empty() || !(total > 0.0) || components.iter().any(|c| !(c.0 >= 0.0)) {
            return Err(Error::InvalidParameter("mixture weights must be nonnegative with positive sum".into()));
        }
        for (_, law) in &components {
            law.validate()?;
        }
        let components = components.into_iter().filter(|c| c.0 > 0.0).map(|(w, l)| (w / total, l)).collect();
        Ok(IntegratedTail { components })
    }

    pub fn components(&self) -> &[(f64, JumpLaw)] {
        &self.components
    }

    /// `1 - F_I(x)`.
    pub fn survival(&self, x: f64) -> f64 {
        self.components.iter().map(|(w, law)| w * integrated_survival(law, x)).sum::<f64>().clamp(0.0, 1.0)
    }

    /// Mean of the integrated-tail law, `E X^2 / (2 E X)` per component.
    pub fn mean(&self) -> f64 {
        self.components
            .iter()
            .map(|(w, law)| {
                w * match law {
                    JumpLaw::Exponential { mean } => *mean,
                    JumpLaw::Erlang { shape, mean } => {
                        let k = *shape as f64;
                        (k + 1.0) * mean / (2.0 * k)
                    }
                    JumpLaw::Deterministic { value } => value / 2.0,
                    JumpLaw::Empirical { step, masses } => {
                        let (m1, m2) = masses.iter().enumerate().fold((0.0, 0.0), |(a, b), (k, m)| {
                            let x = (k + 1) as f64 * step;
                            (a + m * x, b + m * x * x)
                        });
                        m2 / (2.0 * m1)
                    }
                }
            })
            .sum()
    }

    /// `(weight, rate)` pairs with equal rates merged, if every component is exponential.
    pub fn hyperexponential(&self) -> Option<Vec<(f64, f64)>> {
        let mut pairs = Vec::with_capacity(self.components.len());
        for (w, law) in &self.components {
            match law {
                JumpLaw::Exponential { mean } => pairs.push((*w, 1.0 / mean)),
                _ => return None,
            }
        }
        pairs.sort_by(|a, b| a.1.total_cmp(&b.1));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(pairs.len());
        for (w, r) in pairs {
            match merged.last_mut() {
                Some(last) if (r - last.1).abs() <= 1e-9 * last.1 => {
                    // weighted merge keeps the mean of the merged pair
                    let mean = (last.0 / last.1 + w / r) / (last.0 + w);
                    last.0 += w;
                    last.1 = 1.0 / mean;
                }
                _ => merged.push((w, r)),
            }
        }
        Some(merged)
    }
}

/// Survival function of the integrated tail of `law`.
pub fn integrated_survival(law: &JumpLaw, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    match law {
        JumpLaw::Exponential { mean } => (-x / mean).exp(),
        JumpLaw::Erlang { shape, mean } => {
            let rate = *shape as f64 / mean;
            (1..=*shape).map(|n| erlang_survival(n, rate, x)).sum::<f64>() / *shape as f64
        }
        JumpLaw::Deterministic { value } => (1.0 - x / value).max(0.0),
        JumpLaw::Empirical { step, masses } => {
            let nu = law.mean();
            let k = (x / step).floor() as usize;
            if k >= masses.len() {
                return 0.0;
            }
            // tails[m] = P(X > y) for y in [m h, (m+1) h)
            let mut tail_above: f64 = masses[k..].iter().sum();
            let mut integral = ((k + 1) as f64 * step - x) * tail_above;
            for m in masses.iter().skip(k).take(masses.len() - k - 1) {
                tail_above -= m;
                integral += step * tail_above.max(0.0);
            }
            (integral / nu).clamp(0.0, 1.0)
        }
    }
}

/// Integrated tail of a single jump law (closed form carried symbolically).
pub fn integrated_tail(law: &JumpLaw) -> IntegratedTail {
    IntegratedTail::of_law(law)
}

/// Ladder-height law of the group process `sum_j s_j V_j`:
/// a mixture over linked objects of the integrated tails of `s_j X_j`,
/// weighted by `lambda_j s_j mu_j`.
pub fn integrated_tail_from_exposure(s: &[f64], objects: &[ObjectParams]) -> Result<IntegratedTail> {
    let comps: Vec<(f64, JumpLaw)> = s
        .iter()
        .zip(objects)
        .filter(|(&sj, _)| sj > 0.0)
        .map(|(&sj, o)| (o.load() * sj, scale_law(&o.jump, sj)))
        .collect();
    if comps.is_empty() {
        return Err(Error::IsolatedGroup);
    }
    IntegratedTail::mixture(comps)
}

/// Ladder-height law of the group `Q` in one realization.
pub fn integrated_tail_q(real: &AdjacencyRealization, objects: &[ObjectParams], group: &AgentSet) -> Result<IntegratedTail> {
    integrated_tail_from_exposure(&real.group_exposure(group), objects)
}

/// Lattice rounding direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rounding {
    /// Mass of `(kh, (k+1)h]` placed at `kh`: stochastically smaller.
    Lower,
    /// Mass of `((k-1)h, kh]` placed at `kh`: stochastically larger.
    Upper,
}

/// Probability masses on `{0, h, 2h, ...}` plus the residual mass beyond the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretizedDistribution {
    pub step: f64,
    pub masses: Vec<f64>,
    pub tail_truncation: f64,
}

impl DiscretizedDistribution {
    pub fn total(&self) -> f64 {
        self.masses.iter().sum::<f64>() + self.tail_truncation
    }
}

/// Rounds an integrated tail onto a lattice with `points` grid points.
pub fn discretize(tail: &IntegratedTail, step: f64, points: usize, rounding: Rounding) -> DiscretizedDistribution {
    let surv: Vec<f64> = (0..=points).map(|k| tail.survival(k as f64 * step)).collect();
    let mut masses = vec![0.0; points];
    match rounding {
        Rounding::Lower => {
            for k in 0..points {
                masses[k] = (surv[k] - surv[k + 1]).max(0.0);
            }
            DiscretizedDistribution { step, masses, tail_truncation: surv[points] }
        }
        Rounding::Upper => {
            for k in 1..points {
                masses[k] = (surv[k - 1] - surv[k]).max(0.0);
            }
            DiscretizedDistribution { step, masses, tail_truncation: surv[points - 1] }
        }
    }
}

/// A probability with an error bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesValue {
    pub value: f64,
    pub error: f64,
}

/// Evaluation route for compound-geometric tails.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SeriesMethod {
    /// Closed form for exponential mixtures, lattice recursion otherwise.
    #[default]
    Auto,
    /// Lattice recursion with lower/upper rounding.
    Lattice,
    /// Truncated sum of lattice convolution powers.
    Series,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesOptions {
    pub method: SeriesMethod,
    /// Lattice step; defaults to `min(mean of tail law, 1) * 1e-3`.
    pub step: Option<f64>,
    pub tol: f64,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        SeriesOptions { method: SeriesMethod::Auto, step: None, tol: 1e-10 }
    }
}

impl SeriesOptions {
    pub fn with_tol(tol: f64) -> Self {
        SeriesOptions { tol, ..Default::default() }
    }
}

/// `(1 - rho) sum_{n >= 1} rho^n (1 - F_I^{n*}(u))`.
pub fn compound_geometric_tail(rho: f64, tail: &IntegratedTail, u: f64, tol: f64) -> Result<SeriesValue> {
    compound_geometric_tail_with(rho, tail, &[u], &SeriesOptions::with_tol(tol)).map(|v| v[0])
}

/// Compound-geometric tail on a set of levels, sharing one lattice pass.
pub fn compound_geometric_tail_with(
    rho: f64,
    tail: &IntegratedTail,
    levels: &[f64],
    opts: &SeriesOptions,
) -> Result<Vec<SeriesValue>> {
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::RhoOutOfRange(rho));
    }
    if let Some(bad) = levels.iter().find(|u| !(u.is_finite() && **u >= 0.0)) {
        return Err(Error::InvalidParameter(format!("level must be a nonnegative number, got {bad}")));
    }
    if rho == 0.0 || levels.is_empty() {
        return Ok(levels.iter().map(|_| SeriesValue { value: 0.0, error: 0.0 }).collect());
    }
    match opts.method {
        SeriesMethod::Auto => {
            if let Some(pairs) = tail.hyperexponential() {
                if let Some(v) = hyperexponential_tail(rho, &pairs, levels) {
                    return Ok(v);
                }
            }
            lattice_tail(rho, tail, levels, opts.step)
        }
        SeriesMethod::Lattice => lattice_tail(rho, tail, levels, opts.step),
        SeriesMethod::Series => series_tail(rho, tail, levels, opts.step, opts.tol),
    }
}

/// Closed form for mixtures of exponential ladder heights:
/// `Psi(u) = sum_k c_k exp(-R_k u)`.
fn hyperexponential_tail(rho: f64, pairs: &[(f64, f64)], levels: &[f64]) -> Option<Vec<SeriesValue>> {
    let (roots, coef) = hyperexponential_expansion(rho, pairs)?;
    let total: f64 = coef.iter().sum();
    let defect = (total - rho).abs();
    if !(defect <= 1e-9) {
        return None;
    }
    let error = (10.0 * defect).max(1e-13);
    Some(
        levels
            .iter()
            .map(|&u| {
                let v: f64 = roots.iter().zip(&coef).map(|(r, c)| c * (-r * u).exp()).sum();
                SeriesValue { value: v.clamp(0.0, 1.0), error }
            })
            .collect(),
    )
}

/// Exponents `R_k` and coefficients `c_k` of the hyperexponential expansion.
pub fn hyperexponential_expansion(rho: f64, pairs: &[(f64, f64)]) -> Option<(Vec<f64>, Vec<f64>)> {
    let m = pairs.len();
    if m == 0 {
        return None;
    }
    if m == 1 {
        let nu = pairs[0].1;
        return Some((vec![nu * (1.0 - rho)], vec![rho]));
    }
    let h = |r: f64| rho * pairs.iter().map(|(b, nu)| b * nu / (nu - r)).sum::<f64>() - 1.0;
    let mut roots = Vec::with_capacity(m);
    for k in 0..m {
        let mut lo = if k == 0 { 0.0 } else { pairs[k - 1].1 };
        let mut hi = pairs[k].1;
        for _ in 0..300 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if h(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        roots.push(0.5 * (lo + hi));
    }
    // sum_k c_k nu_m / (nu_m - R_k) = 1 for every m
    let mut a: Vec<Vec<f64>> = pairs
        .iter()
        .map(|(_, nu)| roots.iter().map(|r| nu / (nu - r)).collect())
        .collect();
    let mut b = vec![1.0; m];
    let c = solve_linear(&mut a, &mut b)?;
    if c.iter().any(|x| !x.is_finite()) {
        return None;
    }
    Some((roots, c))
}

/// Gaussian elimination with partial pivoting.
fn solve_linear(a: &mut [Vec<f64>], b: &mut [f64]) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

fn lattice_plan(tail: &IntegratedTail, levels: &[f64], step: Option<f64>) -> (f64, usize) {
    let umax = levels.iter().cloned().fold(0.0, f64::max);
    let mut h = step.unwrap_or_else(|| tail.mean().min(1.0) * 1e-3);
    if umax / h > MAX_LATTICE_POINTS as f64 {
        h = umax / MAX_LATTICE_POINTS as f64;
    }
    let points = (umax / h + 1e-9).floor() as usize + 2;
    (h, points)
}

fn level_index(u: f64, h: f64) -> usize {
    (u / h + 1e-9).floor() as usize
}

/// Compound-geometric law on the lattice by the recursion
/// `g_0 = (1 - rho) / (1 - rho f_0)`, `g_k = rho / (1 - rho f_0) sum_{i=1}^k f_i g_{k-i}`.
fn geometric_lattice(rho: f64, f: &[f64]) -> Vec<f64> {
    let n = f.len();
    let denom = 1.0 - rho * f[0];
    let mut g = vec![0.0; n];
    g[0] = (1.0 - rho) / denom;
    let c = rho / denom;
    for k in 1..n {
        let mut s = 0.0;
        for i in 1..=k {
            s += f[i] * g[k - i];
        }
        g[k] = c * s;
    }
    g
}

fn sandwich(lower: &[f64], upper: &[f64], levels: &[f64], h: f64, extra: f64) -> Vec<SeriesValue> {
    levels
        .iter()
        .map(|&u| {
            let k = level_index(u, h);
            let lo = lower[k].clamp(0.0, 1.0);
            let up = (upper[k] + extra).clamp(0.0, 1.0);
            let (lo, up) = if lo <= up { (lo, up) } else { (up, lo) };
            SeriesValue { value: 0.5 * (lo + up), error: 0.5 * (up - lo) + 1e-12 }
        })
        .collect()
}

/// `1 - cumulative sum`: tail probabilities `P(S > kh)`.
fn tail_from_masses(g: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    g.iter()
        .map(|m| {
            acc += m;
            1.0 - acc
        })
        .collect()
}

fn lattice_tail(rho: f64, tail: &IntegratedTail, levels: &[f64], step: Option<f64>) -> Result<Vec<SeriesValue>> {
    let (h, points) = lattice_plan(tail, levels, step);
    let lo = discretize(tail, h, points, Rounding::Lower);
    let up = discretize(tail, h, points, Rounding::Upper);
    let g_lo = geometric_lattice(rho, &lo.masses);
    let g_up = geometric_lattice(rho, &up.masses);
    Ok(sandwich(&tail_from_masses(&g_lo), &tail_from_masses(&g_up), levels, h, 0.0))
}

fn series_tail(rho: f64, tail: &IntegratedTail, levels: &[f64], step: Option<f64>, tol: f64) -> Result<Vec<SeriesValue>> {
    let (h, points) = lattice_plan(tail, levels, step);
    // smallest N with rho^{N+1} / (1 - rho) <= tol
    let tol = tol.max(1e-300);
    let mut n_terms = 1usize;
    while rho.powi(n_terms as i32 + 1) / (1.0 - rho) > tol && n_terms < 100_000 {
        n_terms += 1;
    }
    let run = |rounding: Rounding| -> Vec<f64> {
        let f = discretize(tail, h, points, rounding).masses;
        let mut acc = vec![0.0; points];
        let mut conv = f.clone();
        let mut weight = 1.0 - rho;
        for n in 1..=n_terms {
            weight *= rho;
            let tails = tail_from_masses(&conv);
            for k in 0..points {
                acc[k] += weight * tails[k];
            }
            if n < n_terms {
                let mut next = vec![0.0; points];
                for (a, &x) in conv.iter().enumerate() {
                    if x == 0.0 {
                        continue;
                    }
                    for (b, &y) in f.iter().enumerate().take(points - a) {
                        next[a + b] += x * y;
                    }
                }
                conv = next;
            }
        }
        acc
    };
    let lower = run(Rounding::Lower);
    let upper = run(Rounding::Upper);
    // terms beyond N contribute at most rho^{N+1}
    Ok(sandwich(&lower, &upper, levels, h, rho.powi(n_terms as i32 + 1)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::classic_hitting_exponential;

    fn quad<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
        // composite Simpson, n even
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for k in 1..n {
            let x = a + k as f64 * h;
            s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(x);
        }
        s * h / 3.0
    }

    #[test]
    fn integrated_tail_closed_forms() {
        let exp = integrated_tail(&JumpLaw::Exponential { mean: 1.0 });
        assert!((exp.survival(1.3) - (-1.3f64).exp()).abs() < 1e-15);
        let det = integrated_tail(&JumpLaw::Deterministic { value: 2.0 });
        assert!((det.survival(0.5) - 0.75).abs() < 1e-15);
        assert_eq!(det.survival(2.5), 0.0);
    }

    #[test]
    fn erlang_integrated_tail_matches_quadrature() {
        let law = JumpLaw::Erlang { shape: 2, mean: 1.0 };
        let tail = integrated_tail(&law);
        for x in [0.0, 0.1, 0.5, 1.0, 2.5, 6.0] {
            // 1 - F_I(x) = (1/mean) int_x^inf Gbar(y) dy
            let oracle = quad(|y| law.survival(y), x, 60.0, 20_000);
            assert!((tail.survival(x) - oracle).abs() < 1e-10, "x={x}");
        }
        assert!((tail.mean() - quad(|x| tail.survival(x), 0.0, 60.0, 20_000)).abs() < 1e-9);
    }

    #[test]
    fn empirical_integrated_tail_matches_quadrature() {
        let law = JumpLaw::Empirical { step: 0.5, masses: vec![0.2, 0.5, 0.3] };
        let tail = integrated_tail(&law);
        let nu = law.mean();
        for x in [0.0, 0.2, 0.5, 0.9, 1.2, 1.6] {
            let oracle = quad(|y| law.survival(y), x, 1.5, 30_000) / nu;
            assert!((tail.survival(x) - oracle).abs() < 1e-4, "x={x}: {} vs {oracle}", tail.survival(x));
        }
        assert!((tail.mean() - quad(|x| tail.survival(x), 0.0, 1.5, 30_000)).abs() < 1e-4);
    }

    #[test]
    fn trivial_cases() {
        let t = IntegratedTail::exponential(1.0);
        assert_eq!(compound_geometric_tail(0.0, &t, 1.0, 1e-10).unwrap().value, 0.0);
        let at_zero = compound_geometric_tail(0.5, &t, 0.0, 1e-10).unwrap();
        assert!((at_zero.value - 0.5).abs() < 1e-12);
        assert!(matches!(compound_geometric_tail(1.0, &t, 1.0, 1e-10), Err(Error::RhoOutOfRange(_))));
    }

    #[test]
    fn lattice_brackets_classic_formula() {
        let t = IntegratedTail::exponential(1.0);
        let opts = SeriesOptions { method: SeriesMethod::Lattice, step: Some(1e-3), tol: 1e-10 };
        for rho in [0.1, 0.5, 0.9] {
            let vals = compound_geometric_tail_with(rho, &t, &[0.0, 1.0, 5.0], &opts).unwrap();
            for (v, u) in vals.iter().zip([0.0, 1.0, 5.0]) {
                let exact = classic_hitting_exponential(rho, 1.0, u);
                assert!((v.value - exact).abs() <= v.error, "rho={rho} u={u}: {} vs {exact} (err {})", v.value, v.error);
                assert!(v.error <= 1e-3);
            }
        }
    }

    #[test]
    fn series_route_agrees_with_recursion() {
        let tail = integrated_tail(&JumpLaw::Erlang { shape: 3, mean: 1.2 });
        let levels = [0.0, 0.7, 2.0];
        let opts = SeriesOptions { method: SeriesMethod::Series, step: Some(5e-3), tol: 1e-9 };
        let s = compound_geometric_tail_with(0.6, &tail, &levels, &opts).unwrap();
        let opts = SeriesOptions { method: SeriesMethod::Lattice, step: Some(5e-3), tol: 1e-9 };
        let l = compound_geometric_tail_with(0.6, &tail, &levels, &opts).unwrap();
        for (a, b) in s.iter().zip(&l) {
            assert!((a.value - b.value).abs() <= a.error + b.error);
        }
    }

    #[test]
    fn hyperexponential_closed_form_agrees_with_lattice() {
        let tail = IntegratedTail::mixture(vec![
            (0.3, JumpLaw::Exponential { mean: 0.5 }),
            (0.5, JumpLaw::Exponential { mean: 1.0 }),
            (0.2, JumpLaw::Exponential { mean: 3.0 }),
        ])
        .unwrap();
        let levels = [0.0, 1.0, 4.0];
        for rho in [0.2, 0.7, 0.95] {
            let fast = compound_geometric_tail_with(rho, &tail, &levels, &SeriesOptions::default()).unwrap();
            let opts = SeriesOptions { method: SeriesMethod::Lattice, step: Some(1e-3), tol: 1e-10 };
            let slow = compound_geometric_tail_with(rho, &tail, &levels, &opts).unwrap();
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a.value - b.value).abs() <= a.error + b.error, "rho={rho}: {} vs {}", a.value, b.value);
            }
            assert!((fast[0].value - rho).abs() < 1e-12);
        }
    }

    #[test]
    fn single_exponential_fast_path_is_exact() {
        let t = IntegratedTail::exponential(2.0);
        for u in [0.0, 1.0, 5.0] {
            let v = compound_geometric_tail(0.5, &t, u, 1e-10).unwrap();
            assert!((v.value - classic_hitting_exponential(0.5, 2.0, u)).abs() < 1e-15);
        }
    }

    #[test]
    fn deterministic_jumps_match_known_value() {
        // Uniform(0,1) ladder heights: Psi(u) for u < 1 equals 1 - (1 - rho) e^{rho u}
        let tail = integrated_tail(&JumpLaw::Deterministic { value: 1.0 });
        let rho = 0.5;
        let opts = SeriesOptions { method: SeriesMethod::Lattice, step: Some(1e-4), tol: 1e-10 };
        let v = compound_geometric_tail_with(rho, &tail, &[0.5], &opts).unwrap()[0];
        let exact = 1.0 - (1.0 - rho) * (rho * 0.5f64).exp();
        assert!((v.value - exact).abs() <= v.error, "{} vs {exact}", v.value);
    }

    #[test]
    fn discretization_conserves_mass() {
        let tail = integrated_tail(&JumpLaw::Erlang { shape: 2, mean: 1.0 });
        for r in [Rounding::Lower, Rounding::Upper] {
            let d = discretize(&tail, 1e-2, 500, r);
            assert!((d.total() - 1.0).abs() < 1e-10);
        }
    }
}
