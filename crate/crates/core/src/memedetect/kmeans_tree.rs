//! Hierarchical k-means tree searched best-bin-first.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::distance::{sq_dist, Neighbor, ResultSet};
use crate::matrix::Matrix;

#[derive(Clone, Debug)]
enum Node {
    Inner { centers: Vec<Vec<f32>>, children: Vec<u32> },
    Leaf { points: Vec<u32> },
}

#[derive(Clone, Debug)]
pub struct KMeansTree {
    nodes: Vec<Node>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Key(f64);
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

impl KMeansTree {
    pub fn build(data: &Matrix, branching: usize, iterations: usize, seed: u64) -> Self {
        let branching = branching.max(2);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut tree = KMeansTree { nodes: Vec::new() };
        let all: Vec<u32> = (0..data.rows() as u32).collect();
        tree.build_node(data, all, branching, iterations, &mut rng);
        tree
    }

    fn build_node(&mut self, data: &Matrix, points: Vec<u32>, b: usize, iters: usize, rng: &mut ChaCha8Rng) -> u32 {
        let id = self.nodes.len() as u32;
        self.nodes.push(Node::Leaf { points: Vec::new() });
        if points.len() < b * 2 {
            self.nodes[id as usize] = Node::Leaf { points };
            return id;
        }
        let (centers, groups) = kmeans(data, &points, b, iters, rng);
        if groups.iter().filter(|g| !g.is_empty()).count() < 2 {
            self.nodes[id as usize] = Node::Leaf { points };
            return id;
        }
        let mut kept_centers = Vec::new();
        let mut children = Vec::new();
        for (c, g) in centers.into_iter().zip(groups) {
            if g.is_empty() {
                continue;
            }
            kept_centers.push(c);
            children.push(self.build_node(data, g, b, iters, rng));
        }
        self.nodes[id as usize] = Node::Inner {
            centers: kept_centers,
            children,
        };
        id
    }

    pub fn knn(&self, data: &Matrix, query: &[f32], k: usize, budget: usize, exclude: Option<u32>) -> Vec<Neighbor> {
        let mut result = ResultSet::new(k);
        let mut heap: BinaryHeap<Reverse<(Key, u32)>> = BinaryHeap::new();
        let mut checks = 0usize;
        heap.push(Reverse((Key(0.0), 0)));
        while let Some(Reverse((_, mut node))) = heap.pop() {
            if checks >= budget {
                break;
            }
            loop {
                match &self.nodes[node as usize] {
                    Node::Leaf { points } => {
                        for &p in points {
                            if checks >= budget {
                                break;
                            }
                            if Some(p) == exclude {
                                continue;
                            }
                            checks += 1;
                            result.add(sq_dist(query, data.row(p as usize)), p);
                        }
                        break;
                    }
                    Node::Inner { centers, children } => {
                        let mut best = 0;
                        let mut best_d = f64::INFINITY;
                        let dists: Vec<f64> = centers.iter().map(|c| sq_dist(query, c)).collect();
                        for (i, &d) in dists.iter().enumerate() {
                            if d < best_d {
                                best_d = d;
                                best = i;
                            }
                        }
                        for (i, &d) in dists.iter().enumerate() {
                            if i != best {
                                heap.push(Reverse((Key(d), children[i])));
                            }
                        }
                        node = children[best];
                    }
                }
            }
        }
        result.into_neighbors()
    }
}

fn kmeans(data: &Matrix, points: &[u32], k: usize, iters: usize, rng: &mut ChaCha8Rng) -> (Vec<Vec<f32>>, Vec<Vec<u32>>) {
    // k-means++ seeding
    let first = points[rng.random_range(0..points.len())];
    let mut centers: Vec<Vec<f32>> = vec![data.row(first as usize).to_vec()];
    let mut nearest: Vec<f64> = points.iter().map(|&p| sq_dist(data.row(p as usize), &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = nearest.iter().sum();
        if total <= 0.0 {
            break;
        }
        let mut target = rng.random::<f64>() * total;
        let mut pick = points.len() - 1;
        for (i, &d) in nearest.iter().enumerate() {
            if target < d {
                pick = i;
                break;
            }
            target -= d;
        }
        let c = data.row(points[pick] as usize).to_vec();
        for (n, &p) in nearest.iter_mut().zip(points) {
            *n = n.min(sq_dist(data.row(p as usize), &c));
        }
        centers.push(c);
    }
    let dim = data.cols();
    let mut assign = vec![0usize; points.len()];
    for it in 0..=iters {
        let mut changed = false;
        for (a, &p) in assign.iter_mut().zip(points) {
            let row = data.row(p as usize);
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (ci, c) in centers.iter().enumerate() {
                let d = sq_dist(row, c);
                if d < best_d {
                    best_d = d;
                    best = ci;
                }
            }
            if *a != best || it == 0 {
                changed |= *a != best;
                *a = best;
            }
        }
        if it == iters || (it > 0 && !changed) {
            break;
        }
        let mut sums = vec![vec![0.0f64; dim]; centers.len()];
        let mut counts = vec![0usize; centers.len()];
        for (&a, &p) in assign.iter().zip(points) {
            counts[a] += 1;
            for (s, &v) in sums[a].iter_mut().zip(data.row(p as usize)) {
                *s += v as f64;
            }
        }
        for ((c, s), &n) in centers.iter_mut().zip(&sums).zip(&counts) {
            if n > 0 {
                for (cv, sv) in c.iter_mut().zip(s) {
                    *cv = (sv / n as f64) as f32;
                }
            }
        }
    }
    let mut groups = vec![Vec::new(); centers.len()];
    for (&a, &p) in assign.iter().zip(points) {
        groups[a].push(p);
    }
    (centers, groups)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exhaustive_budget_is_exact() {
        let rows: Vec<Vec<f32>> = (0..200).map(|i| vec![(i % 20) as f32, (i / 20) as f32]).collect();
        let data = Matrix::from_rows(&rows).unwrap();
        let tree = KMeansTree::build(&data, 4, 5, 1);
        let got = tree.knn(&data, &[7.1, 3.2], 1, usize::MAX, None);
        assert_eq!(got[0].index, 3 * 20 + 7);
    }

    #[test]
    fn constant_data_becomes_leaf() {
        let data = Matrix::from_rows(&vec![vec![0.5f32; 3]; 40]).unwrap();
        let tree = KMeansTree::build(&data, 4, 3, 0);
        assert_eq!(tree.knn(&data, &[0.5; 3], 5, 10, None).len(), 5);
    }
}
