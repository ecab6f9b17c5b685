//! 2-tree accounting for growing tree clusters with discard-on-failure.
//!
//! A tree with branching profile `[b_0, ..., b_m]` is grown bottom-up. The
//! bottom level is a 2-tree doubled until it has at least `b_m` branches.
//! Each higher level joins two copies of the subtree to a fresh 2-tree with two
//! fusions, then doubles until it has at least `b_i` branches. Any failed
//! fusion throws away everything that went into it.
//!
//! Branching that is not a power of two is padded up and the surplus branches
//! are pruned for free, so costs are those of the padded tree.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Poisson};
use rayon::prelude::*;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TreeSpec {
    branching: Vec<u32>,
}

impl TreeSpec {
    pub fn new(branching: Vec<u32>) -> Result<Self> {
        if branching.is_empty() {
            return Err(Error::InvalidTreeSpec("empty branching profile".into()));
        }
        if let Some(b) = branching.iter().find(|&&b| b == 0 || b > 1 << 20) {
            return Err(Error::InvalidTreeSpec(format!("branching {b} out of range")));
        }
        Ok(Self { branching })
    }

    pub fn branching(&self) -> &[u32] {
        &self.branching
    }

    /// Index of the bottom level.
    pub fn depth(&self) -> usize {
        self.branching.len() - 1
    }

    /// Root plus every level: `1 + b_0 + b_0 b_1 + ...`.
    pub fn qubit_count(&self) -> u128 {
        let mut total = 1u128;
        let mut level = 1u128;
        for &b in &self.branching {
            level = level.saturating_mul(b as u128);
            total = total.saturating_add(level);
        }
        total
    }
}

impl fmt::Display for TreeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.branching.iter().map(u32::to_string).collect();
        write!(f, "{}", parts.join(","))
    }
}

impl FromStr for TreeSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let branching = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<u32>()
                    .map_err(|_| Error::InvalidTreeSpec(format!("bad branching value {t:?} in {s:?}")))
            })
            .collect::<Result<Vec<u32>>>()?;
        Self::new(branching)
    }
}

fn check_p(p_ii: f64) -> Result<f64> {
    if p_ii.is_nan() || p_ii <= 0.0 || p_ii > 1.0 {
        return Err(Error::ZeroSuccessProbability(p_ii));
    }
    Ok(p_ii)
}

/// Number of doublings, plus one, needed to reach at least `b` branches from 2.
fn padded_log(b: u32) -> u32 {
    let l = if b <= 1 { 0 } else { 32 - (b - 1).leading_zeros() };
    l.max(1)
}

/// Expected 2-trees for one `2^l`-tree: `(2/p)^(l-1)`.
pub fn expected_power_tree_cost(l: u32, p_ii: f64) -> Result<f64> {
    if l == 0 {
        return Err(Error::InvalidArgument("power-tree level must be at least 1".into()));
    }
    let p = check_p(p_ii)?;
    Ok((2.0 / p).powi(l as i32 - 1))
}

/// Exact expected 2-tree consumption of the padded growth strategy.
pub fn analytic_tree_cost(spec: &TreeSpec, p_ii: f64) -> Result<f64> {
    let p = check_p(p_ii)?;
    let mut cost = 1.0;
    for (i, &b) in spec.branching.iter().enumerate().rev() {
        let unit = if i == spec.depth() {
            1.0
        } else {
            (2.0 * cost + 1.0) / (p * p)
        };
        cost = unit * expected_power_tree_cost(padded_log(b), p)?;
    }
    Ok(cost)
}

/// `(2/p^2)^m * prod (2/p)^(log2 b_i)`.
pub fn tree_cost_bound(spec: &TreeSpec, p_ii: f64) -> Result<f64> {
    let p = check_p(p_ii)?;
    let poly: f64 = spec
        .branching
        .iter()
        .map(|&b| (2.0 / p).powf((b as f64).log2()))
        .product();
    Ok((2.0 / (p * p)).powi(spec.depth() as i32) * poly)
}

/// `n (3/p^3 + 3 n_tree) / p^3`.
pub fn encoded_cluster_cost(n: u64, p_ii: f64, n_tree: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("cluster length must be at least 1".into()));
    }
    let p = check_p(p_ii)?;
    if n_tree.is_nan() || n_tree <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "tree cost must be positive, got {n_tree}"
        )));
    }
    let p3 = p * p * p;
    Ok(n as f64 * (3.0 / p3 + 3.0 * n_tree) / p3)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResourceEstimate {
    pub mean_2trees: f64,
    pub std_error: f64,
    pub trials: u64,
    pub p_ii_used: f64,
    pub analytic_mean: f64,
    pub analytic_bound: f64,
}

impl ResourceEstimate {
    pub fn within_three_sigma(&self) -> bool {
        (self.mean_2trees - self.analytic_mean).abs() <= 3.0 * self.std_error
    }
}

/// Number of attempts needed for `n` successes at rate `q`.
fn attempts<R: Rng + ?Sized>(n: u64, q: f64, rng: &mut R) -> u64 {
    if n == 0 || q >= 1.0 {
        return n;
    }
    // negative binomial failures as a gamma-mixed Poisson
    let rate = Gamma::new(n as f64, (1.0 - q) / q).expect("valid gamma").sample(rng);
    if rate <= 0.0 {
        return n;
    }
    let failures = Poisson::new(rate).expect("valid poisson").sample(rng);
    n + failures as u64
}

struct Sampler<'a> {
    branching: &'a [u32],
    p: f64,
}

impl Sampler<'_> {
    /// Total 2-trees spent producing `count` finished trees of level `level`.
    fn level_sum<R: Rng + ?Sized>(&self, level: usize, count: u64, rng: &mut R) -> u64 {
        // walk the doublings down to the branching-2 unit
        let mut units = count;
        for _ in 1..padded_log(self.branching[level]) {
            units = 2 * attempts(units, self.p, rng);
        }
        if level + 1 == self.branching.len() {
            return units;
        }
        let joins = attempts(units, self.p * self.p, rng);
        self.level_sum(level + 1, 2 * joins, rng) + joins
    }
}

fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

fn summarize(costs: impl ParallelIterator<Item = u64>, trials: u64) -> (f64, f64) {
    let (sum, sq) = costs
        .map(|c| (c as u128, (c as u128) * (c as u128)))
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let n = trials as f64;
    let mean = sum as f64 / n;
    if trials < 2 {
        return (mean, 0.0);
    }
    // exact integer numerator keeps p = 1 at zero variance
    let num = (trials as u128) * sq - sum * sum;
    let var = num as f64 / (n * (n - 1.0));
    (mean, (var / n).sqrt())
}

/// Samples `trials` independent tree builds. Trial `i` draws from stream `i`
/// of a generator seeded with `seed`, so the estimate depends only on
/// `(spec, p_ii, trials, seed)`.
pub fn monte_carlo_tree_cost(spec: &TreeSpec, p_ii: f64, trials: u64, seed: u64) -> Result<ResourceEstimate> {
    let p = check_p(p_ii)?;
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let sampler = Sampler {
        branching: &spec.branching,
        p,
    };
    let costs = (0..trials)
        .into_par_iter()
        .map(|i| sampler.level_sum(0, 1, &mut trial_rng(seed, i)));
    let (mean_2trees, std_error) = summarize(costs, trials);
    Ok(ResourceEstimate {
        mean_2trees,
        std_error,
        trials,
        p_ii_used: p,
        analytic_mean: analytic_tree_cost(spec, p)?,
        analytic_bound: tree_cost_bound(spec, p)?,
    })
}

/// Fusion-by-fusion simulation of one build. Slow, but a direct transcription
/// of the growth strategy.
pub fn simulate_build_direct<R: Rng + ?Sized>(spec: &TreeSpec, p_ii: f64, rng: &mut R) -> Result<u64> {
    let p = check_p(p_ii)?;
    fn unit<R: Rng + ?Sized>(b: &[u32], level: usize, p: f64, rng: &mut R) -> u64 {
        if level + 1 == b.len() {
            return 1;
        }
        let mut spent = 0;
        loop {
            spent += tree(b, level + 1, p, rng) + tree(b, level + 1, p, rng) + 1;
            if rng.random::<f64>() < p && rng.random::<f64>() < p {
                return spent;
            }
        }
    }
    fn doubled<R: Rng + ?Sized>(b: &[u32], level: usize, l: u32, p: f64, rng: &mut R) -> u64 {
        if l == 1 {
            return unit(b, level, p, rng);
        }
        let mut spent = 0;
        loop {
            spent += doubled(b, level, l - 1, p, rng) + doubled(b, level, l - 1, p, rng);
            if rng.random::<f64>() < p {
                return spent;
            }
        }
    }
    fn tree<R: Rng + ?Sized>(b: &[u32], level: usize, p: f64, rng: &mut R) -> u64 {
        doubled(b, level, padded_log(b[level]), p, rng)
    }
    Ok(tree(&spec.branching, 0, p, rng))
}
