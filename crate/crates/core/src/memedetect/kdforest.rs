//! Randomised kd-tree forest with a shared best-bin-first queue.
//!
//! Each tree splits on a dimension drawn at random from the few with the
//! highest variance at that node, at the node mean. Queries descend every
//! tree, queue the unexplored branches by their accumulated cut distance
//! and keep popping the closest branch until the check budget runs out.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::distance::{sq_dist, Neighbor, ResultSet};
use crate::matrix::Matrix;

const SAMPLE_MEAN: usize = 100;
const RAND_DIM: usize = 5;

#[derive(Clone, Debug)]
enum Node {
    Split { dim: u32, value: f32, left: u32, right: u32 },
    Leaf { start: u32, end: u32 },
}

#[derive(Clone, Debug)]
struct Tree {
    nodes: Vec<Node>,
    order: Vec<u32>,
}

#[derive(Clone, Debug)]
pub struct KdForest {
    trees: Vec<Tree>,
}

#[derive(Clone, Copy, Debug)]
struct Key(f64);
impl PartialEq for Key {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o).is_eq()
    }
}
impl Eq for Key {}
impl PartialOrd for Key {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Key {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&o.0)
    }
}

impl KdForest {
    pub fn build(data: &Matrix, trees: usize, leaf_size: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let trees = (0..trees.max(1))
            .map(|_| {
                let mut order: Vec<u32> = (0..data.rows() as u32).collect();
                order.shuffle(&mut rng);
                let mut tree = Tree {
                    nodes: Vec::new(),
                    order,
                };
                let n = tree.order.len();
                build_node(&mut tree, data, 0, n, leaf_size.max(1), &mut rng);
                tree
            })
            .collect();
        KdForest { trees }
    }

    pub fn tree_count(&self) -> usize {
        self.trees.len()
    }

    /// Approximate `k` nearest neighbours examining at most `budget` points.
    pub fn knn(&self, data: &Matrix, query: &[f32], k: usize, budget: usize, exclude: Option<u32>) -> Vec<Neighbor> {
        let mut search = Search {
            data,
            query,
            budget,
            checks: 0,
            checked: HashSet::with_capacity(budget.min(data.rows()) + 1),
            heap: BinaryHeap::new(),
            result: ResultSet::new(k),
            exclude,
        };
        for (t, tree) in self.trees.iter().enumerate() {
            search.descend(tree, t, 0, 0.0);
        }
        while search.checks < budget {
            let Some(Reverse((Key(mind), t, node))) = search.heap.pop() else { break };
            search.descend(&self.trees[t], t, node, mind);
        }
        search.result.into_neighbors()
    }
}

struct Search<'a> {
    data: &'a Matrix,
    query: &'a [f32],
    budget: usize,
    checks: usize,
    checked: HashSet<u32>,
    heap: BinaryHeap<Reverse<(Key, usize, u32)>>,
    result: ResultSet,
    exclude: Option<u32>,
}

impl Search<'_> {
    fn descend(&mut self, tree: &Tree, t: usize, mut node: u32, mindist: f64) {
        if self.result.is_full() && mindist > self.result.worst() {
            return;
        }
        loop {
            match tree.nodes[node as usize] {
                Node::Leaf { start, end } => {
                    for &p in &tree.order[start as usize..end as usize] {
                        if self.checks >= self.budget {
                            return;
                        }
                        if Some(p) == self.exclude || !self.checked.insert(p) {
                            continue;
                        }
                        self.checks += 1;
                        let d = sq_dist(self.query, self.data.row(p as usize));
                        self.result.add(d, p);
                    }
                    return;
                }
                Node::Split { dim, value, left, right } => {
                    let diff = self.query[dim as usize] as f64 - value as f64;
                    let (best, other) = if diff < 0.0 { (left, right) } else { (right, left) };
                    let cut = mindist + diff * diff;
                    if !self.result.is_full() || cut < self.result.worst() {
                        self.heap.push(Reverse((Key(cut), t, other)));
                    }
                    node = best;
                }
            }
        }
    }
}

fn build_node(tree: &mut Tree, data: &Matrix, start: usize, end: usize, leaf_size: usize, rng: &mut ChaCha8Rng) -> u32 {
    let id = tree.nodes.len() as u32;
    tree.nodes.push(Node::Leaf {
        start: start as u32,
        end: end as u32,
    });
    if end - start <= leaf_size {
        return id;
    }
    let Some((dim, value)) = choose_split(tree, data, start, end, rng) else {
        return id;
    };
    let slice = &mut tree.order[start..end];
    // partition: values < split go left
    let mut lo = 0;
    for i in 0..slice.len() {
        if data.row(slice[i] as usize)[dim] < value {
            slice.swap(lo, i);
            lo += 1;
        }
    }
    if lo == 0 || lo == slice.len() {
        slice.sort_by(|&a, &b| {
            data.row(a as usize)[dim]
                .total_cmp(&data.row(b as usize)[dim])
                .then(a.cmp(&b))
        });
        lo = slice.len() / 2;
    }
    let mid = start + lo;
    let split_value = if lo == 0 { value } else { value.min(data.row(tree.order[mid] as usize)[dim]) };
    let left = build_node(tree, data, start, mid, leaf_size, rng);
    let right = build_node(tree, data, mid, end, leaf_size, rng);
    tree.nodes[id as usize] = Node::Split {
        dim: dim as u32,
        value: split_value,
        left,
        right,
    };
    id
}

fn choose_split(tree: &Tree, data: &Matrix, start: usize, end: usize, rng: &mut ChaCha8Rng) -> Option<(usize, f32)> {
    let cols = data.cols();
    let sample = &tree.order[start..end.min(start + SAMPLE_MEAN)];
    let mut mean = vec![0.0f64; cols];
    for &p in sample {
        for (m, &v) in mean.iter_mut().zip(data.row(p as usize)) {
            *m += v as f64;
        }
    }
    mean.iter_mut().for_each(|m| *m /= sample.len() as f64);
    let mut var = vec![0.0f64; cols];
    for &p in sample {
        for ((s, &v), m) in var.iter_mut().zip(data.row(p as usize)).zip(&mean) {
            let d = v as f64 - m;
            *s += d * d;
        }
    }
    let mut dims: Vec<usize> = (0..cols).filter(|&d| var[d] > 0.0).collect();
    if dims.is_empty() {
        // the sample may be constant while the node is not
        dims = (0..cols)
            .filter(|&d| {
                let first = data.row(tree.order[start] as usize)[d];
                tree.order[start..end].iter().any(|&p| data.row(p as usize)[d] != first)
            })
            .take(RAND_DIM)
            .collect();
        let d = *dims.first()?;
        let m = tree.order[start..end]
            .iter()
            .map(|&p| data.row(p as usize)[d] as f64)
            .sum::<f64>()
            / (end - start) as f64;
        return Some((d, m as f32));
    }
    dims.sort_by(|&a, &b| var[b].total_cmp(&var[a]).then(a.cmp(&b)));
    dims.truncate(RAND_DIM);
    let d = dims[rng.random_range(0..dims.len())];
    Some((d, mean[d] as f32))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Matrix {
        let rows: Vec<Vec<f32>> = (0..64).map(|i| vec![(i % 8) as f32, (i / 8) as f32, 0.0]).collect();
        Matrix::from_rows(&rows).unwrap()
    }

    #[test]
    fn full_budget_finds_exact_neighbours() {
        let data = grid();
        let forest = KdForest::build(&data, 4, 1, 3);
        let q = [3.2f32, 4.1, 0.0];
        let got = forest.knn(&data, &q, 1, usize::MAX, None);
        assert_eq!(got[0].index, 4 * 8 + 3);
    }

    #[test]
    fn budget_caps_checks() {
        let data = grid();
        let forest = KdForest::build(&data, 2, 1, 3);
        let got = forest.knn(&data, &[0.0, 0.0, 0.0], 10, 5, None);
        assert!(got.len() <= 5);
    }

    #[test]
    fn duplicates_do_not_break_build() {
        let rows = vec![vec![1.0f32, 1.0]; 50];
        let data = Matrix::from_rows(&rows).unwrap();
        let forest = KdForest::build(&data, 2, 1, 0);
        assert_eq!(forest.knn(&data, &[1.0, 1.0], 3, 100, Some(0)).len(), 3);
    }
}
