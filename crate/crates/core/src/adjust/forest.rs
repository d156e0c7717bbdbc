//! Bagged CART regression forest.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// Features tried per split; `None` means `ceil(p / 3)`.
    pub mtry: Option<usize>,
    pub min_leaf: usize,
    pub max_depth: Option<usize>,
    pub seed: u64,
    pub include_censored_training: bool,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 500,
            mtry: None,
            min_leaf: 5,
            max_depth: None,
            seed: 1,
            include_censored_training: false,
        }
    }
}

impl ForestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::config("forest.n_trees", "need at least one tree"));
        }
        if self.min_leaf == 0 {
            return Err(Error::config("forest.min_leaf", "must be at least 1"));
        }
        if self.mtry == Some(0) {
            return Err(Error::config("forest.mtry", "must be at least 1"));
        }
        Ok(())
    }

    pub fn mtry_for(&self, p: usize) -> usize {
        self.mtry.unwrap_or(p.div_ceil(3)).clamp(1, p.max(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
enum Node {
    Leaf(f64),
    /// Rows with `x[feature] < threshold` go to `left`.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    nodes: Vec<Node>,
}

impl RegressionTree {
    pub fn leaf(value: f64) -> Self {
        RegressionTree {
            nodes: vec![Node::Leaf(value)],
        }
    }

    pub fn stump(feature: usize, threshold: f64, left: f64, right: f64) -> Self {
        RegressionTree {
            nodes: vec![
                Node::Split {
                    feature,
                    threshold,
                    left: 1,
                    right: 2,
                },
                Node::Leaf(left),
                Node::Leaf(right),
            ],
        }
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf(v) => return v,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if row[feature] < threshold { left } else { right },
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf(_))).count()
    }

    fn leaf_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.nodes.iter().filter_map(|n| match n {
            Node::Leaf(v) => Some(*v),
            _ => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionForest {
    pub trees: Vec<RegressionTree>,
    pub n_features: usize,
    pub target_range: (f64, f64),
    pub oob_mse: Option<f64>,
}

impl RegressionForest {
    pub fn from_trees(trees: Vec<RegressionTree>, n_features: usize) -> Self {
        let (lo, hi) = trees
            .iter()
            .flat_map(|t| t.leaf_values())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        RegressionForest {
            trees,
            n_features,
            target_range: (lo, hi),
            oob_mse: None,
        }
    }
}

struct Grower<'a> {
    x: &'a [Vec<f64>],
    y: &'a [f64],
    mtry: usize,
    min_leaf: usize,
    max_depth: usize,
    nodes: Vec<Node>,
}

impl Grower<'_> {
    fn mean(&self, idx: &[usize]) -> f64 {
        idx.iter().map(|&i| self.y[i]).sum::<f64>() / idx.len() as f64
    }

    /// Best variance-reducing split among `mtry` random features.
    fn best_split(&self, idx: &mut [usize], rng: &mut ChaCha8Rng) -> Option<(usize, f64)> {
        let p = self.x[0].len();
        let total: f64 = idx.iter().map(|&i| self.y[i]).sum();
        let n = idx.len();
        let base = total * total / n as f64;
        let mut best: Option<(f64, usize, f64)> = None;
        for feature in sample(rng, p, self.mtry) {
            idx.sort_by(|&a, &b| self.x[a][feature].total_cmp(&self.x[b][feature]));
            let mut left = 0.0;
            for k in 1..n {
                left += self.y[idx[k - 1]];
                let (lo, hi) = (self.x[idx[k - 1]][feature], self.x[idx[k]][feature]);
                if k < self.min_leaf || n - k < self.min_leaf || lo == hi {
                    continue;
                }
                let right = total - left;
                let gain = left * left / k as f64 + right * right / (n - k) as f64 - base;
                if gain > 1e-12 * base.abs().max(1.0) && best.is_none_or(|(g, _, _)| gain > g) {
                    best = Some((gain, feature, 0.5 * (lo + hi)));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }

    fn grow(&mut self, idx: &mut [usize], depth: usize, rng: &mut ChaCha8Rng) -> usize {
        let at = self.nodes.len();
        self.nodes.push(Node::Leaf(self.mean(idx)));
        if idx.len() < 2 * self.min_leaf || depth >= self.max_depth {
            return at;
        }
        let Some((feature, threshold)) = self.best_split(idx, rng) else {
            return at;
        };
        let x = self.x;
        idx.sort_by_key(|&i| x[i][feature] >= threshold);
        let cut = idx.partition_point(|&i| x[i][feature] < threshold);
        let (l, r) = idx.split_at_mut(cut);
        let left = self.grow(l, depth + 1, rng);
        let right = self.grow(r, depth + 1, rng);
        self.nodes[at] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        at
    }
}

/// Fits `cfg.n_trees` trees on bootstrap samples. Tree `t` draws from its
/// own ChaCha stream `t` under `cfg.seed`, so results do not depend on
/// thread scheduling.
pub fn forest_fit(features: &[Vec<f64>], targets: &[f64], cfg: &ForestConfig) -> Result<RegressionForest> {
    cfg.validate()?;
    let n = features.len();
    if n != targets.len() {
        return Err(Error::InvalidInput("features and targets differ in length".into()));
    }
    if n < 2 * cfg.min_leaf || n == 0 {
        return Err(Error::InsufficientTraining {
            have: n,
            need: (2 * cfg.min_leaf).max(1),
        });
    }
    let p = features[0].len();
    if let Some(bad) = features.iter().find(|r| r.len() != p) {
        return Err(Error::FeatureMismatch {
            expected: p,
            got: bad.len(),
        });
    }
    if p == 0 {
        return Err(Error::InvalidInput("forest needs at least one feature".into()));
    }
    if targets.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
        return Err(Error::InvalidInput("forest targets must be finite and positive".into()));
    }
    let mtry = cfg.mtry_for(p);
    let max_depth = cfg.max_depth.unwrap_or(usize::MAX);

    let fitted: Vec<(RegressionTree, Vec<bool>)> = (0..cfg.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(t as u64);
            let mut in_bag = vec![false; n];
            let mut idx: Vec<usize> = (0..n)
                .map(|_| {
                    let i = rng.random_range(0..n);
                    in_bag[i] = true;
                    i
                })
                .collect();
            let mut g = Grower {
                x: features,
                y: targets,
                mtry,
                min_leaf: cfg.min_leaf,
                max_depth,
                nodes: Vec::new(),
            };
            g.grow(&mut idx, 0, &mut rng);
            (RegressionTree { nodes: g.nodes }, in_bag)
        })
        .collect();

    let (mut sum, mut cnt) = (vec![0.0; n], vec![0usize; n]);
    for (tree, in_bag) in &fitted {
        for i in (0..n).filter(|&i| !in_bag[i]) {
            sum[i] += tree.predict(&features[i]);
            cnt[i] += 1;
        }
    }
    let oob: Vec<f64> = (0..n)
        .filter(|&i| cnt[i] > 0)
        .map(|i| (sum[i] / cnt[i] as f64 - targets[i]).powi(2))
        .collect();
    let oob_mse = (!oob.is_empty()).then(|| oob.iter().sum::<f64>() / oob.len() as f64);

    let lo = targets.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = targets.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(RegressionForest {
        trees: fitted.into_iter().map(|(t, _)| t).collect(),
        n_features: p,
        target_range: (lo, hi),
        oob_mse,
    })
}

pub fn forest_predict(f: &RegressionForest, row: &[f64]) -> Result<f64> {
    if row.len() != f.n_features {
        return Err(Error::FeatureMismatch {
            expected: f.n_features,
            got: row.len(),
        });
    }
    Ok(f.trees.iter().map(|t| t.predict(row)).sum::<f64>() / f.trees.len() as f64)
}
