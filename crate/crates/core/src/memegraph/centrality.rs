//! Degree, closeness and betweenness on unweighted graphs.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::graph::Adjacency;
use crate::par::{self, Exec};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Centrality {
    pub degree: f64,
    pub closeness: f64,
    pub betweenness: f64,
}

/// Distinct neighbours (either direction) over `n - 1`.
pub fn degree(adj: &Adjacency) -> Vec<f64> {
    if adj.n < 2 {
        return vec![0.0; adj.n];
    }
    (0..adj.n)
        .map(|v| {
            let mut nb: Vec<u32> = adj.outgoing[v].iter().chain(&adj.incoming[v]).copied().collect();
            nb.sort_unstable();
            nb.dedup();
            nb.len() as f64 / (adj.n - 1) as f64
        })
        .collect()
}

fn bfs(adj: &Adjacency, s: usize, dist: &mut [i64]) {
    dist.iter_mut().for_each(|d| *d = -1);
    dist[s] = 0;
    let mut q = VecDeque::from([s]);
    while let Some(v) = q.pop_front() {
        for &w in &adj.outgoing[v] {
            if dist[w as usize] < 0 {
                dist[w as usize] = dist[v] + 1;
                q.push_back(w as usize);
            }
        }
    }
}

/// Reachable count over total distance to reachable nodes; 0 for nodes that
/// reach nothing. Directed graphs follow outgoing edges.
pub fn closeness(exec: Exec, adj: &Adjacency) -> Vec<f64> {
    par::map_range(exec, adj.n, |s| {
        let mut dist = vec![0i64; adj.n];
        bfs(adj, s, &mut dist);
        let (mut r, mut total) = (0usize, 0i64);
        for (v, &d) in dist.iter().enumerate() {
            if v != s && d > 0 {
                r += 1;
                total += d;
            }
        }
        if r == 0 {
            0.0
        } else {
            r as f64 / total as f64
        }
    })
}

/// Single-source dependencies, added into `delta_out`.
fn brandes_source(adj: &Adjacency, s: usize, acc: &mut [f64]) {
    let n = adj.n;
    let mut sigma = vec![0.0f64; n];
    let mut dist = vec![-1i64; n];
    let mut order = Vec::with_capacity(n);
    sigma[s] = 1.0;
    dist[s] = 0;
    let mut q = VecDeque::from([s]);
    while let Some(v) = q.pop_front() {
        order.push(v);
        for &w in &adj.outgoing[v] {
            let w = w as usize;
            if dist[w] < 0 {
                dist[w] = dist[v] + 1;
                q.push_back(w);
            }
            if dist[w] == dist[v] + 1 {
                sigma[w] += sigma[v];
            }
        }
    }
    let mut delta = vec![0.0f64; n];
    for &w in order.iter().rev() {
        for &v in &adj.incoming[w] {
            let v = v as usize;
            if dist[v] >= 0 && dist[v] + 1 == dist[w] {
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
            }
        }
        if w != s {
            acc[w] += delta[w];
        }
    }
}

/// Normalised betweenness; sources run in parallel, summed in a fixed order.
pub fn betweenness(exec: Exec, adj: &Adjacency) -> Vec<f64> {
    let n = adj.n;
    if n < 3 {
        return vec![0.0; n];
    }
    let sources: Vec<usize> = (0..n).collect();
    let chunk = (n / (par::threads(exec) * 4).max(1)).max(8);
    let raw = par::fold_chunks(
        exec,
        &sources,
        chunk,
        || vec![0.0f64; n],
        |acc, _, &s| brandes_source(adj, s, acc),
        |out, part| {
            for (a, b) in out.iter_mut().zip(part) {
                *a += b;
            }
        },
    );
    // undirected runs count each pair from both ends
    let norm = ((n - 1) * (n - 2)) as f64;
    raw.into_iter().map(|b| b / norm).collect()
}

pub fn centralities(exec: Exec, adj: &Adjacency) -> Vec<Centrality> {
    let d = degree(adj);
    let c = closeness(exec, adj);
    let b = betweenness(exec, adj);
    (0..adj.n)
        .map(|i| Centrality {
            degree: d[i],
            closeness: c[i],
            betweenness: b[i],
        })
        .collect()
}
