//! Regression tree grown on first/second-order statistics.
//!
//! With gradient `-y` and unit hessian the leaf value is the sample mean and
//! the split gain is the reduction in squared error, which is what the random
//! forest needs; gradient boosting passes its loss derivatives instead.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
enum Node {
    Leaf(f64),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    nodes: Vec<Node>,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct GrowParams {
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub min_child_weight: f64,
    pub alpha: f64,
    pub lambda: f64,
    /// Features tried per split; all of them when >= the column count.
    pub max_features: usize,
    /// Leaf values are clipped to `±max_delta_step` when positive.
    pub max_delta_step: f64,
}

fn soft_threshold(g: f64, alpha: f64) -> f64 {
    if g > alpha {
        g - alpha
    } else if g < -alpha {
        g + alpha
    } else {
        0.0
    }
}

struct Grower<'a> {
    columns: &'a [Vec<f64>],
    grad: &'a [f64],
    hess: &'a [f64],
    p: GrowParams,
    nodes: Vec<Node>,
}

impl Grower<'_> {
    fn score(&self, g: f64, h: f64) -> f64 {
        let t = soft_threshold(g, self.p.alpha);
        let denom = h + self.p.lambda;
        if denom <= 0.0 {
            0.0
        } else {
            t * t / denom
        }
    }

    fn leaf_value(&self, g: f64, h: f64) -> f64 {
        let denom = h + self.p.lambda;
        let w = if denom <= 0.0 {
            0.0
        } else {
            -soft_threshold(g, self.p.alpha) / denom
        };
        if self.p.max_delta_step > 0.0 {
            w.clamp(-self.p.max_delta_step, self.p.max_delta_step)
        } else {
            w
        }
    }

    fn candidate_features(&self, rng: &mut ChaCha8Rng) -> Vec<usize> {
        let p = self.columns.len();
        let mut all: Vec<usize> = (0..p).collect();
        let k = self.p.max_features.clamp(1, p);
        if k < p {
            for i in 0..k {
                let j = rng.random_range(i..p);
                all.swap(i, j);
            }
            all.truncate(k);
            all.sort_unstable();
        }
        all
    }

    fn grow(&mut self, idx: Vec<usize>, depth: usize, rng: &mut ChaCha8Rng) -> usize {
        let (g, h) = idx
            .iter()
            .fold((0.0, 0.0), |(g, h), &i| (g + self.grad[i], h + self.hess[i]));
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf(self.leaf_value(g, h)));
        let n = idx.len();
        if depth >= self.p.max_depth
            || n < self.p.min_samples_split.max(2)
            || n < 2 * self.p.min_samples_leaf.max(1)
            || h < 2.0 * self.p.min_child_weight
        {
            return id;
        }
        let parent = self.score(g, h);
        let mut best: Option<(f64, usize, f64)> = None;
        let mut order = idx.clone();
        for f in self.candidate_features(rng) {
            let col = &self.columns[f];
            order.sort_by(|&a, &b| col[a].total_cmp(&col[b]));
            let (mut gl, mut hl) = (0.0, 0.0);
            for k in 0..n - 1 {
                let i = order[k];
                gl += self.grad[i];
                hl += self.hess[i];
                let (x, next) = (col[i], col[order[k + 1]]);
                if x == next {
                    continue;
                }
                let (nl, nr) = (k + 1, n - k - 1);
                if nl < self.p.min_samples_leaf || nr < self.p.min_samples_leaf {
                    continue;
                }
                let hr = h - hl;
                if hl < self.p.min_child_weight || hr < self.p.min_child_weight {
                    continue;
                }
                let gain = self.score(gl, hl) + self.score(g - gl, hr) - parent;
                if gain > 1e-12 * parent.abs().max(1e-12) && best.is_none_or(|(b, _, _)| gain > b) {
                    let mid = 0.5 * (x + next);
                    let threshold = if mid < next { mid } else { x };
                    best = Some((gain, f, threshold));
                }
            }
        }
        let Some((_, feature, threshold)) = best else {
            return id;
        };
        let col = &self.columns[feature];
        let (l, r): (Vec<usize>, Vec<usize>) = idx.into_iter().partition(|&i| col[i] <= threshold);
        let left = self.grow(l, depth + 1, rng);
        let right = self.grow(r, depth + 1, rng);
        self.nodes[id] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        id
    }
}

impl Tree {
    /// Grows a tree over `indices` (repeats allowed, as in a bootstrap draw).
    pub(crate) fn grow(
        columns: &[Vec<f64>],
        grad: &[f64],
        hess: &[f64],
        indices: Vec<usize>,
        params: GrowParams,
        rng: &mut ChaCha8Rng,
    ) -> Tree {
        let mut g = Grower {
            columns,
            grad,
            hess,
            p: params,
            nodes: Vec::new(),
        };
        g.grow(indices, 0, rng);
        Tree { nodes: g.nodes }
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
                } => i = if row[feature] <= threshold { left } else { right },
            }
        }
    }

    /// Prediction for row `i` of column-major data.
    pub fn predict_column_row(&self, columns: &[Vec<f64>], i: usize) -> f64 {
        let mut n = 0;
        loop {
            match self.nodes[n] {
                Node::Leaf(v) => return v,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => n = if columns[feature][i] <= threshold { left } else { right },
            }
        }
    }

    #[cfg(test)]
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    #[cfg(test)]
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }
}
