//! Bagged regression trees with variance-reduction splits.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ForestParams {
    pub trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self { trees: 30, max_depth: 8, min_leaf: 1 }
    }
}

#[derive(Clone, Debug)]
enum Node {
    Leaf(f64),
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Clone, Debug)]
struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf(v) => return v,
                Node::Split { feature, threshold, left, right } => {
                    i = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }
}

fn mean(ys: &[f64], idx: &[usize]) -> f64 {
    idx.iter().map(|&i| ys[i]).sum::<f64>() / idx.len() as f64
}

struct Builder<'a> {
    xs: &'a [Vec<f64>],
    ys: &'a [f64],
    params: ForestParams,
    mtry: usize,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    fn grow(&mut self, idx: Vec<usize>, depth: usize, rng: &mut ChaCha8Rng) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf(mean(self.ys, &idx)));
        if depth >= self.params.max_depth || idx.len() < 2 * self.params.min_leaf {
            return id;
        }
        let p = self.xs[0].len();
        let mut best: Option<(f64, usize, f64)> = None;
        // Features beyond `mtry` are only tried while no valid split was found.
        for (tried, feature) in sample(rng, p, p).into_iter().enumerate() {
            if tried >= self.mtry && best.is_some() {
                break;
            }
            let mut order = idx.clone();
            order.sort_by(|&a, &b| self.xs[a][feature].total_cmp(&self.xs[b][feature]).then(a.cmp(&b)));
            let total: f64 = order.iter().map(|&i| self.ys[i]).sum();
            let total_sq: f64 = order.iter().map(|&i| self.ys[i] * self.ys[i]).sum();
            let (mut s, mut sq) = (0.0, 0.0);
            for k in 0..order.len() - 1 {
                let y = self.ys[order[k]];
                s += y;
                sq += y * y;
                let (lo, hi) = (self.xs[order[k]][feature], self.xs[order[k + 1]][feature]);
                let nl = (k + 1) as f64;
                let nr = (order.len() - k - 1) as f64;
                if lo == hi || nl < self.params.min_leaf as f64 || nr < self.params.min_leaf as f64 {
                    continue;
                }
                let sse = (sq - s * s / nl) + ((total_sq - sq) - (total - s).powi(2) / nr);
                if best.is_none_or(|(b, _, _)| sse < b) {
                    best = Some((sse, feature, lo + (hi - lo) / 2.0));
                }
            }
        }
        let Some((_, feature, threshold)) = best else { return id };
        let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| self.xs[i][feature] <= threshold);
        let left = self.grow(l, depth + 1, rng);
        let right = self.grow(r, depth + 1, rng);
        self.nodes[id] = Node::Split { feature, threshold, left, right };
        id
    }
}

/// Mean prediction of bootstrap-trained trees. Deterministic for a seed.
#[derive(Clone, Debug)]
pub struct Forest {
    trees: Vec<Tree>,
}

impl Forest {
    /// Fits on `xs` (rows of equal length) and targets `ys`; `None` when empty.
    pub fn fit(xs: &[Vec<f64>], ys: &[f64], params: ForestParams, seed: u64) -> Option<Forest> {
        if xs.is_empty() || xs.len() != ys.len() {
            return None;
        }
        let p = xs[0].len();
        let mtry = (p / 3).max(1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let trees = (0..params.trees.max(1))
            .map(|_| {
                let idx: Vec<usize> = (0..xs.len()).map(|_| rng.gen_range(0..xs.len())).collect();
                let mut b = Builder { xs, ys, params, mtry, nodes: Vec::new() };
                b.grow(idx, 0, &mut rng);
                Tree { nodes: b.nodes }
            })
            .collect();
        Some(Forest { trees })
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict(x)).sum::<f64>() / self.trees.len() as f64
    }
}
