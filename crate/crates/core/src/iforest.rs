//! Isolation trees and forests: random-split construction with a height cap,
//! path-length evaluation, and anomaly scoring.
//!
//! A point that separates from the rest of the data after only a few random
//! splits is easy to isolate, so short paths mean anomalous. Leaf nodes carry
//! the size of the training subset they absorbed; queries landing there are
//! credited the expected extra depth a tree over that many points would have
//! needed, which keeps scores comparable across leaf sizes.

use rand::{Rng, RngExt};
use serde::{Deserialize, Serialize};

use crate::rng::{derive_rng, DOMAIN_TREES};
use crate::{Error, FeatureVector, Result};

/// Euler-Mascheroni constant, used in the expected-path-length formula.
pub const EULER_GAMMA: f64 = 0.5772156649;

const SNAPSHOT_VERSION: u32 = 1;

/// Expected path length of an unsuccessful binary-search-tree lookup over
/// `n` points:
///
/// ```text
/// c(n) = 2 * (ln(n - 1) + gamma) - 2 * (n - 1) / n
/// ```
///
/// with `c(0) = c(1) = 0` since one point needs no further splits.
pub fn expected_path_length(n: usize) -> f64 {
    if n <= 1 {
        return 0.0;
    }
    let m = (n - 1) as f64;
    2.0 * (m.ln() + EULER_GAMMA) - 2.0 * m / n as f64
}

/// The anomaly score `2^(-mean_path / c(sample_size))`. It is 1.0 at
/// immediate isolation, 0.5 when the point behaves like an average training
/// point, and decays toward 0 for points that are hard to isolate. A sample
/// of one point has no isolation information at all, so the degenerate
/// normalizer returns the indifferent 0.5.
pub fn score_from_mean_path(mean_path: f64, sample_size: usize) -> f64 {
    let normalizer = expected_path_length(sample_size);
    if normalizer <= 0.0 {
        return 0.5;
    }
    2f64.powf(-mean_path / normalizer)
}

/// One node of an isolation tree.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum TreeNode {
    Internal {
        split_attribute: usize,
        split_value: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    External {
        size: usize,
    },
}

impl TreeNode {
    fn node_count(&self) -> usize {
        match self {
            TreeNode::Internal { left, right, .. } => 1 + left.node_count() + right.node_count(),
            TreeNode::External { .. } => 1,
        }
    }

    fn depth(&self) -> usize {
        match self {
            TreeNode::Internal { left, right, .. } => 1 + left.depth().max(right.depth()),
            TreeNode::External { .. } => 0,
        }
    }
}

/// A single isolation tree over one training sample.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IsolationTree {
    root: TreeNode,
    height_limit: usize,
    training_size: usize,
    dimension: usize,
}

impl IsolationTree {
    /// Edges from the root to the leaf this point reaches, plus the expected
    /// remaining depth for the leaf's training subset.
    pub fn path_length(&self, point: &[f64]) -> Result<f64> {
        if point.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                point: point.len(),
                training: self.dimension,
            });
        }
        let mut node = &self.root;
        let mut edges = 0usize;
        loop {
            match node {
                TreeNode::External { size } => {
                    return Ok(edges as f64 + expected_path_length(*size));
                }
                TreeNode::Internal {
                    split_attribute,
                    split_value,
                    left,
                    right,
                } => {
                    edges += 1;
                    node = if point[*split_attribute] < *split_value {
                        left
                    } else {
                        right
                    };
                }
            }
        }
    }

    pub fn root(&self) -> &TreeNode {
        &self.root
    }

    pub fn height_limit(&self) -> usize {
        self.height_limit
    }

    pub fn training_size(&self) -> usize {
        self.training_size
    }

    pub fn node_count(&self) -> usize {
        self.root.node_count()
    }

    pub fn max_depth(&self) -> usize {
        self.root.depth()
    }
}

/// Uniform draw from the open interval (lo, hi). The generator's half-open
/// range can return lo itself; redraw, and in the measure-zero worst case
/// fall back to hi, which still routes the minimum left and the maximum
/// right.
fn draw_split<R: Rng>(lo: f64, hi: f64, rng: &mut R) -> f64 {
    for _ in 0..16 {
        let v = rng.random_range(lo..hi);
        if v > lo {
            return v;
        }
    }
    hi
}

fn build_node<R: Rng>(
    sample: &[FeatureVector],
    indices: Vec<usize>,
    depth: usize,
    limit: usize,
    rng: &mut R,
) -> TreeNode {
    if indices.len() <= 1 || depth >= limit {
        return TreeNode::External {
            size: indices.len(),
        };
    }
    let dimension = sample[0].len();
    let splittable: Vec<(usize, f64, f64)> = (0..dimension)
        .filter_map(|attr| {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for &i in &indices {
                let v = sample[i][attr];
                lo = lo.min(v);
                hi = hi.max(v);
            }
            (hi > lo).then_some((attr, lo, hi))
        })
        .collect();
    if splittable.is_empty() {
        // Every remaining attribute is constant; the points are duplicates
        // and can never be separated.
        return TreeNode::External {
            size: indices.len(),
        };
    }

    let (split_attribute, lo, hi) = splittable[rng.random_range(0..splittable.len())];
    let split_value = draw_split(lo, hi, rng);
    let (left, right): (Vec<usize>, Vec<usize>) = indices
        .into_iter()
        .partition(|&i| sample[i][split_attribute] < split_value);
    TreeNode::Internal {
        split_attribute,
        split_value,
        left: Box::new(build_node(sample, left, depth + 1, limit, rng)),
        right: Box::new(build_node(sample, right, depth + 1, limit, rng)),
    }
}

/// Grows one tree over the sample with uniformly random attribute and split
/// choices. Recursion stops at single points, duplicate-only subsets, and
/// the height limit.
pub fn build_itree<R: Rng>(
    sample: &[FeatureVector],
    current_height: usize,
    height_limit: usize,
    rng: &mut R,
) -> Result<IsolationTree> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    crate::sampling::validate_window(sample)?;
    let indices: Vec<usize> = (0..sample.len()).collect();
    let root = build_node(sample, indices, current_height, height_limit, rng);
    Ok(IsolationTree {
        root,
        height_limit,
        training_size: sample.len(),
        dimension: sample[0].len(),
    })
}

/// Bookkeeping attached to each tree slot in a forest.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeMeta {
    /// Retirement priority: the tree at rank 0 is replaced first.
    pub rank: usize,
    /// Points this tree flagged as anomalous in the most recent chunk.
    pub anomalies_flagged: usize,
    /// Construction counter; lower means built earlier.
    pub birth: u64,
}

/// A fixed-size collection of isolation trees plus their ranking metadata.
#[derive(Clone, Debug)]
pub struct Forest {
    trees: Vec<IsolationTree>,
    meta: Vec<TreeMeta>,
    sample_size: usize,
    next_birth: u64,
}

#[derive(Serialize, Deserialize)]
struct ForestSnapshot {
    version: u32,
    sample_size: usize,
    next_birth: u64,
    trees: Vec<IsolationTree>,
    meta: Vec<TreeMeta>,
}

/// Builds `ntrees` trees over one shared sample. Tree `i` draws its
/// randomness from a child source derived from (master_seed, i), so the
/// forest is reproducible and insensitive to construction order.
pub fn build_forest(
    sample: &[FeatureVector],
    ntrees: usize,
    height_limit: usize,
    master_seed: u64,
) -> Result<Forest> {
    if ntrees == 0 {
        return Err(Error::InvalidConfig("ntrees must be at least 1".into()));
    }
    let mut trees = Vec::with_capacity(ntrees);
    let mut meta = Vec::with_capacity(ntrees);
    for i in 0..ntrees {
        let mut rng = derive_rng(master_seed, DOMAIN_TREES, i as u64);
        trees.push(build_itree(sample, 0, height_limit, &mut rng)?);
        meta.push(TreeMeta {
            rank: i,
            anomalies_flagged: 0,
            birth: i as u64,
        });
    }
    Ok(Forest {
        trees,
        meta,
        sample_size: sample.len(),
        next_birth: ntrees as u64,
    })
}

impl Forest {
    pub fn len(&self) -> usize {
        self.trees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }

    /// Size of the sample the forest was first built on; used as the score
    /// normalizer.
    pub fn sample_size(&self) -> usize {
        self.sample_size
    }

    pub fn trees(&self) -> &[IsolationTree] {
        &self.trees
    }

    pub fn meta(&self) -> &[TreeMeta] {
        &self.meta
    }

    /// Path length of the point in every tree, in slot order.
    pub fn path_lengths(&self, point: &[f64]) -> Result<Vec<f64>> {
        self.trees.iter().map(|t| t.path_length(point)).collect()
    }

    /// Mean path length across trees pushed through the score formula.
    pub fn anomaly_score(&self, point: &[f64]) -> Result<f64> {
        let paths = self.path_lengths(point)?;
        let mean = paths.iter().sum::<f64>() / paths.len() as f64;
        Ok(score_from_mean_path(mean, self.sample_size))
    }

    /// Records how many chunk points each tree flagged and recomputes ranks.
    pub fn set_anomalies_flagged(&mut self, counts: &[usize]) -> Result<()> {
        if counts.len() != self.meta.len() {
            return Err(Error::LengthMismatch {
                what: "per-tree flag counts",
                expected: self.meta.len(),
                got: counts.len(),
            });
        }
        for (meta, &count) in self.meta.iter_mut().zip(counts) {
            meta.anomalies_flagged = count;
        }
        self.rerank();
        Ok(())
    }

    /// Rank = position in the retirement order: descending flag count, ties
    /// broken toward the older tree, so fresh trees with no evidence against
    /// them are kept longest.
    fn rerank(&mut self) {
        let mut order: Vec<usize> = (0..self.meta.len()).collect();
        order.sort_by(|&a, &b| {
            self.meta[b]
                .anomalies_flagged
                .cmp(&self.meta[a].anomalies_flagged)
                .then(self.meta[a].birth.cmp(&self.meta[b].birth))
        });
        for (rank, &slot) in order.iter().enumerate() {
            self.meta[slot].rank = rank;
        }
    }

    /// Tree slots sorted by rank, most retirable first.
    pub fn retirement_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.meta.len()).collect();
        order.sort_by_key(|&slot| self.meta[slot].rank);
        order
    }

    /// Regrows the trees in `slots` from a fresh sample. Replacements start
    /// with zero flags and the newest birth stamps, then the whole forest is
    /// reranked. The forest size never changes.
    pub fn replace_trees(
        &mut self,
        slots: &[usize],
        sample: &[FeatureVector],
        height_limit: usize,
        master_seed: u64,
    ) -> Result<()> {
        let mut seen = vec![false; self.trees.len()];
        for &slot in slots {
            if slot >= self.trees.len() {
                return Err(Error::InvalidConfig(format!(
                    "tree slot {slot} out of range for forest of {}",
                    self.trees.len()
                )));
            }
            if seen[slot] {
                return Err(Error::InvalidConfig(format!("tree slot {slot} repeated")));
            }
            seen[slot] = true;
        }
        for &slot in slots {
            let mut rng = derive_rng(master_seed, DOMAIN_TREES, self.next_birth);
            self.trees[slot] = build_itree(sample, 0, height_limit, &mut rng)?;
            self.meta[slot] = TreeMeta {
                rank: 0,
                anomalies_flagged: 0,
                birth: self.next_birth,
            };
            self.next_birth += 1;
        }
        self.rerank();
        Ok(())
    }

    /// Total nodes across all trees; the streaming caller uses this to prove
    /// the model footprint stays bounded.
    pub fn node_count(&self) -> usize {
        self.trees.iter().map(|t| t.node_count()).sum()
    }

    pub fn max_depth(&self) -> usize {
        self.trees.iter().map(|t| t.max_depth()).max().unwrap_or(0)
    }

    /// Serializes the forest to a versioned JSON snapshot.
    pub fn to_json(&self) -> Result<String> {
        let snapshot = ForestSnapshot {
            version: SNAPSHOT_VERSION,
            sample_size: self.sample_size,
            next_birth: self.next_birth,
            trees: self.trees.clone(),
            meta: self.meta.clone(),
        };
        serde_json::to_string(&snapshot).map_err(|e| Error::Snapshot(e.to_string()))
    }

    /// Restores a forest from [`Forest::to_json`] output.
    pub fn from_json(text: &str) -> Result<Forest> {
        let snapshot: ForestSnapshot =
            serde_json::from_str(text).map_err(|e| Error::Snapshot(e.to_string()))?;
        if snapshot.version != SNAPSHOT_VERSION {
            return Err(Error::Snapshot(format!(
                "unsupported snapshot version {} (expected {SNAPSHOT_VERSION})",
                snapshot.version
            )));
        }
        if snapshot.trees.is_empty() || snapshot.trees.len() != snapshot.meta.len() {
            return Err(Error::Snapshot(format!(
                "{} trees with {} metadata entries",
                snapshot.trees.len(),
                snapshot.meta.len()
            )));
        }
        Ok(Forest {
            trees: snapshot.trees,
            meta: snapshot.meta,
            sample_size: snapshot.sample_size,
            next_birth: snapshot.next_birth,
        })
    }
}
