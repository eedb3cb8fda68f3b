use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::argmax_lowest;
use crate::seed::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeConfig {
    /// Features examined per node; `None` means all of them.
    pub max_features: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        counts: Vec<u32>,
    },
}

/// CART classification tree grown until leaves are pure or hold fewer than
/// two samples. Samples with `x[feature] <= threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    nodes: Vec<Node>,
    n_features: usize,
    class_count: usize,
}

struct Candidate {
    feature: usize,
    threshold: f64,
    score: f64,
}

/// Weighted Gini of a partition, scaled by node size:
/// `n_l·gini_l + n_r·gini_r`.
fn split_score(n_left: f64, sq_left: f64, n_right: f64, sq_right: f64) -> f64 {
    (n_left - sq_left / n_left) + (n_right - sq_right / n_right)
}

impl DecisionTree {
    /// `samples` may repeat indices (bootstrap draws). `columns[f][i]` is
    /// feature `f` of row `i`.
    pub fn fit(
        columns: &[Vec<f64>],
        labels: &[usize],
        class_count: usize,
        samples: Vec<usize>,
        config: TreeConfig,
        rng: &mut Rng,
    ) -> Self {
        let n_features = columns.len();
        let mtry = config
            .max_features
            .unwrap_or(n_features)
            .clamp(1, n_features.max(1));
        let mut tree = DecisionTree {
            nodes: Vec::new(),
            n_features,
            class_count,
        };
        let mut features: Vec<usize> = (0..n_features).collect();
        // (node slot, samples)
        let mut stack = vec![(tree.push_placeholder(), samples)];
        while let Some((slot, idx)) = stack.pop() {
            let mut counts = vec![0u32; class_count];
            for &i in &idx {
                counts[labels[i]] += 1;
            }
            let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
            let split = if pure || idx.len() < 2 {
                None
            } else {
                features.shuffle(rng);
                best_split(columns, labels, class_count, &idx, &features, mtry)
            };
            match split {
                None => tree.nodes[slot] = Node::Leaf { counts },
                Some(c) => {
                    let (l, r): (Vec<usize>, Vec<usize>) = idx
                        .into_iter()
                        .partition(|&i| columns[c.feature][i] <= c.threshold);
                    let left = tree.push_placeholder();
                    let right = tree.push_placeholder();
                    tree.nodes[slot] = Node::Split {
                        feature: c.feature,
                        threshold: c.threshold,
                        left,
                        right,
                    };
                    stack.push((right, r));
                    stack.push((left, l));
                }
            }
        }
        tree
    }

    fn push_placeholder(&mut self) -> usize {
        self.nodes.push(Node::Leaf { counts: Vec::new() });
        self.nodes.len() - 1
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn leaf_counts(&self, x: &[f64]) -> &[u32] {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { counts } => return counts,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    /// Majority class of the reached leaf, lowest class on ties.
    pub fn predict(&self, x: &[f64]) -> usize {
        argmax_lowest(self.leaf_counts(x))
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Feature and threshold of the root split, if the root is not a leaf.
    pub fn root_split(&self) -> Option<(usize, f64)> {
        match self.nodes.first()? {
            Node::Split {
                feature, threshold, ..
            } => Some((*feature, *threshold)),
            Node::Leaf { .. } => None,
        }
    }
}

/// Scans features in `order` until `mtry` non-constant ones have been
/// examined; constant features do not count towards the budget.
fn best_split(
    columns: &[Vec<f64>],
    labels: &[usize],
    class_count: usize,
    idx: &[usize],
    order: &[usize],
    mtry: usize,
) -> Option<Candidate> {
    let n = idx.len() as f64;
    let mut total = vec![0f64; class_count];
    for &i in idx {
        total[labels[i]] += 1.0;
    }
    let mut best: Option<Candidate> = None;
    let mut sorted: Vec<(f64, usize)> = Vec::with_capacity(idx.len());
    let mut informative = 0;
    for &f in order {
        if informative >= mtry {
            break;
        }
        let col = &columns[f];
        sorted.clear();
        sorted.extend(idx.iter().map(|&i| (col[i], labels[i])));
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        if sorted[0].0 == sorted[sorted.len() - 1].0 {
            continue;
        }
        informative += 1;
        let mut left = vec![0f64; class_count];
        let mut sq_left = 0.0;
        let mut sq_right: f64 = total.iter().map(|c| c * c).sum();
        for k in 0..sorted.len() - 1 {
            let c = sorted[k].1;
            sq_left += 2.0 * left[c] + 1.0;
            left[c] += 1.0;
            let right_c = total[c] - left[c];
            sq_right -= 2.0 * right_c + 1.0;
            let (v, next) = (sorted[k].0, sorted[k + 1].0);
            if v == next {
                continue;
            }
            let n_left = (k + 1) as f64;
            let score = split_score(n_left, sq_left, n - n_left, sq_right);
            if best.as_ref().is_none_or(|b| score < b.score) {
                let mut threshold = 0.5 * (v + next);
                if threshold >= next {
                    threshold = v;
                }
                best = Some(Candidate {
                    feature: f,
                    threshold,
                    score,
                });
            }
        }
    }
    best
}
