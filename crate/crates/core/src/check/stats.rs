use std::collections::BTreeMap;

use crate::efg::{enumerate_trajectories, ExtensiveFormGame};
use crate::interp::{playout_with, LudiiAst, UniformPolicy};
use crate::num::rational_to_f64;
use crate::rng::SplitMix64;

#[derive(Debug, Clone, PartialEq)]
pub struct LeafFrequency {
    /// Vertex of the neutral marker at the end of the playout.
    pub leaf: i64,
    pub expected: f64,
    pub observed: f64,
    /// Allowed absolute deviation, `z·sqrt(p(1−p)/n)`.
    pub tolerance: f64,
}

impl LeafFrequency {
    pub fn deviation(&self) -> f64 {
        (self.observed - self.expected).abs()
    }

    pub fn within(&self) -> bool {
        self.deviation() <= self.tolerance
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatisticalReport {
    pub playouts: usize,
    pub z: f64,
    pub leaves: Vec<LeafFrequency>,
    /// Playouts that ended in an interpreter error.
    pub errors: usize,
    pub first_error: Option<String>,
}

impl StatisticalReport {
    pub fn max_deviation(&self) -> f64 {
        self.leaves.iter().map(LeafFrequency::deviation).fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.errors == 0 && self.leaves.iter().all(LeafFrequency::within)
    }

    /// `key=value` records: one per leaf, then a summary line.
    pub fn render_records(&self) -> String {
        let mut out = String::new();
        for l in &self.leaves {
            out += &format!(
                "leaf={} expected={:.6} observed={:.6} tolerance={:.6} status={}\n",
                l.leaf,
                l.expected,
                l.observed,
                l.tolerance,
                if l.within() { "pass" } else { "fail" }
            );
        }
        if let Some(e) = &self.first_error {
            out += &format!("error={e:?}\n");
        }
        out += &format!(
            "playouts={} errors={} max_deviation={:.6} overall={}\n",
            self.playouts,
            self.errors,
            self.max_deviation(),
            if self.passed() { "pass" } else { "fail" }
        );
        out
    }
}

/// Compares leaf frequencies over `n` uniform-policy playouts with the
/// probabilities the game assigns under the same policy.
pub fn statistical_playout_check(g: &ExtensiveFormGame, ast: &LudiiAst, n: usize, seed: u64, z: f64) -> StatisticalReport {
    let mut expected: BTreeMap<i64, f64> = BTreeMap::new();
    for t in enumerate_trajectories(g) {
        *expected.entry(t.leaf().0 as i64).or_default() += rational_to_f64(&t.uniform_policy_probability(g));
    }
    let mut hits: BTreeMap<i64, usize> = BTreeMap::new();
    let mut errors = 0;
    let mut first_error = None;
    let mut rng = SplitMix64::new(seed);
    for _ in 0..n {
        match playout_with(ast, &mut rng, &mut UniformPolicy, |_| {}) {
            Ok(p) => *hits.entry(p.final_state.neutral_vertex()).or_default() += 1,
            Err(e) => {
                errors += 1;
                first_error.get_or_insert_with(|| e.to_string());
            }
        }
    }
    let trials = n.max(1) as f64;
    let mut leaves: Vec<LeafFrequency> = expected
        .iter()
        .map(|(&leaf, &p)| LeafFrequency {
            leaf,
            expected: p,
            observed: hits.get(&leaf).copied().unwrap_or(0) as f64 / trials,
            tolerance: z * (p * (1.0 - p) / trials).sqrt(),
        })
        .collect();
    // Leaves the game does not have can only be reached with probability 0.
    leaves.extend(hits.iter().filter(|(l, _)| !expected.contains_key(l)).map(|(&leaf, &c)| LeafFrequency {
        leaf,
        expected: 0.0,
        observed: c as f64 / trials,
        tolerance: 0.0,
    }));
    StatisticalReport {
        playouts: n,
        z,
        leaves,
        errors,
        first_error,
    }
}
