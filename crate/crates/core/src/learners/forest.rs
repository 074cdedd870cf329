//! Bagged CART regression trees.
//!
//! Each tree is grown on a bootstrap sample (with replacement, original
//! size) using variance-reduction splits over `max(1, ceil(p/3))` candidate
//! columns per split, until leaves are pure or hold fewer than 2 samples.
//! Every tree derives its own RNG from the forest seed and its index, so the
//! fit is deterministic regardless of how trees are scheduled.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

/// Parameters for [`forest_fit_with`]; [`forest_fit`] uses the defaults.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForestParams {
    pub trees: usize,
    pub seed: u64,
    /// Candidate columns per split; `None` means `max(1, ceil(p/3))`.
    pub max_features: Option<usize>,
    /// Disable to train every tree on the full sample (test hook).
    pub bootstrap: bool,
}

impl ForestParams {
    pub fn new(trees: usize, seed: u64) -> Self {
        ForestParams {
            trees,
            seed,
            max_features: None,
            bootstrap: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn predict(&self, row: &[f64]) -> f64 {
        let mut index = 0;
        loop {
            match &self.nodes[index] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    index = if row[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }
}

/// A fitted forest.
#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    trees: Vec<Tree>,
    columns: usize,
    pub params: ForestParams,
}

impl ForestModel {
    pub fn tree_count(&self) -> usize {
        self.trees.len()
    }

    /// Mean over trees of the leaf value each row lands in.
    pub fn predict(&self, x: &DenseMatrix) -> Result<Vec<f64>> {
        if x.rows() > 0 && x.cols() != self.columns {
            return Err(Error::data(format!(
                "prediction input has {} columns, model was fit on {}",
                x.cols(),
                self.columns
            )));
        }
        Ok(x.iter_rows()
            .map(|row| {
                self.trees.iter().map(|t| t.predict(row)).sum::<f64>() / self.trees.len() as f64
            })
            .collect())
    }
}

fn mean_of(indices: &[usize], y: &[f64]) -> f64 {
    indices.iter().map(|&i| y[i]).sum::<f64>() / indices.len() as f64
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    score: f64,
}

/// Finds the split minimizing the summed squared error of the two children.
fn best_split(
    x: &DenseMatrix,
    y: &[f64],
    indices: &[usize],
    candidates: &[usize],
) -> Option<BestSplit> {
    let total = indices.len();
    let mut best: Option<BestSplit> = None;

    let mut order: Vec<usize> = Vec::with_capacity(total);
    for &feature in candidates {
        order.clear();
        order.extend_from_slice(indices);
        order.sort_by(|&a, &b| {
            x.get(a, feature)
                .total_cmp(&x.get(b, feature))
                .then(a.cmp(&b))
        });

        let total_sum: f64 = order.iter().map(|&i| y[i]).sum();
        let total_sq: f64 = order.iter().map(|&i| y[i] * y[i]).sum();

        let mut left_sum = 0.0;
        let mut left_sq = 0.0;
        for pos in 1..total {
            let prev = order[pos - 1];
            left_sum += y[prev];
            left_sq += y[prev] * y[prev];
            let here = x.get(order[pos], feature);
            let before = x.get(prev, feature);
            if here == before {
                continue;
            }
            let left_n = pos as f64;
            let right_n = (total - pos) as f64;
            let right_sum = total_sum - left_sum;
            let right_sq = total_sq - left_sq;
            let score = (left_sq - left_sum * left_sum / left_n)
                + (right_sq - right_sum * right_sum / right_n);
            if best.as_ref().is_none_or(|b| score < b.score) {
                // the midpoint of two adjacent floats can round up to the
                // upper value; fall back to the lower one so both children
                // stay non-empty
                let mut threshold = (before + here) / 2.0;
                if threshold >= here {
                    threshold = before;
                }
                best = Some(BestSplit {
                    feature,
                    threshold,
                    score,
                });
            }
        }
    }
    best
}

fn grow_tree(x: &DenseMatrix, y: &[f64], sample: Vec<usize>, max_features: usize, rng: &mut ChaCha8Rng) -> Tree {
    let mut nodes = vec![Node::Leaf { value: 0.0 }];
    let mut work = vec![(0usize, sample)];

    while let Some((slot, indices)) = work.pop() {
        let first = y[indices[0]];
        let pure = indices.iter().all(|&i| y[i] == first);
        if indices.len() < 2 || pure {
            nodes[slot] = Node::Leaf {
                value: mean_of(&indices, y),
            };
            continue;
        }

        let candidates: Vec<usize> =
            rand::seq::index::sample(rng, x.cols(), max_features.min(x.cols())).into_vec();
        match best_split(x, y, &indices, &candidates) {
            Some(split) => {
                let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
                    .into_iter()
                    .partition(|&i| x.get(i, split.feature) <= split.threshold);
                let left = nodes.len();
                nodes.push(Node::Leaf { value: 0.0 });
                let right = nodes.len();
                nodes.push(Node::Leaf { value: 0.0 });
                nodes[slot] = Node::Split {
                    feature: split.feature,
                    threshold: split.threshold,
                    left,
                    right,
                };
                work.push((left, left_idx));
                work.push((right, right_idx));
            }
            None => {
                // the sampled columns are constant on this node
                nodes[slot] = Node::Leaf {
                    value: mean_of(&indices, y),
                };
            }
        }
    }
    Tree { nodes }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Fits a forest of `trees` bagged CART trees with the default parameters.
pub fn forest_fit(x: &DenseMatrix, y: &[f64], trees: usize, seed: u64) -> Result<ForestModel> {
    forest_fit_with(x, y, ForestParams::new(trees, seed))
}

/// Fits with explicit parameters.
pub fn forest_fit_with(x: &DenseMatrix, y: &[f64], params: ForestParams) -> Result<ForestModel> {
    if x.rows() != y.len() {
        return Err(Error::data("design and target row counts differ"));
    }
    if x.rows() < 2 {
        return Err(Error::data(format!(
            "random forest needs at least 2 rows, got {}",
            x.rows()
        )));
    }
    if params.trees == 0 {
        return Err(Error::config("forest needs at least one tree"));
    }

    let n = x.rows();
    let p = x.cols();
    let max_features = params.max_features.unwrap_or_else(|| (p.div_ceil(3)).max(1));

    let trees: Vec<Tree> = (0..params.trees)
        .into_par_iter()
        .map(|tree_index| {
            let mut rng = ChaCha8Rng::seed_from_u64(splitmix(
                params.seed ^ splitmix(tree_index as u64 + 1),
            ));
            let sample: Vec<usize> = if params.bootstrap {
                (0..n).map(|_| rng.gen_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            grow_tree(x, y, sample, max_features, &mut rng)
        })
        .collect();

    Ok(ForestModel {
        trees,
        columns: p,
        params,
    })
}
