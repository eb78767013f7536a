use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::corpus::{days_between, Corpus};
use crate::memedetect::MemeCluster;

/// Default exponent of the power-law memory factor.
pub const DEFAULT_ETA: f64 = 0.7654;
/// Lower clamp on edge time gaps, in days (one hour).
pub const MIN_DT_DAYS: f64 = 1.0 / 24.0;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightVariant {
    /// Shared meme count.
    #[default]
    Star,
    /// Shared meme count decayed by the time gap.
    Prime,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VideoEdge {
    /// Node index of the earlier video.
    pub src: usize,
    /// Node index of the later video.
    pub dst: usize,
    pub nu: u32,
    pub dt_days: f64,
    pub omega_star: f64,
    pub omega_prime: f64,
}

impl VideoEdge {
    pub fn weight(&self, v: WeightVariant) -> f64 {
        match v {
            WeightVariant::Star => self.omega_star,
            WeightVariant::Prime => self.omega_prime,
        }
    }
}

/// Time-directed graph over videos that contain at least one meme.
#[derive(Clone, Debug, PartialEq)]
pub struct VideoGraph {
    /// Corpus video index of each node, ascending.
    pub videos: Vec<usize>,
    /// Upload time of each node.
    pub times: Vec<i64>,
    /// Edges sorted by `(src, dst)`.
    pub edges: Vec<VideoEdge>,
    pub eta: f64,
    /// Video pairs sharing a meme but posted at the same instant.
    pub simultaneous_pairs: usize,
}

/// `nu * max(dt, 1h)^-eta`.
pub fn omega_prime(nu: u32, dt_days: f64, eta: f64) -> f64 {
    nu as f64 * dt_days.max(MIN_DT_DAYS).powf(-eta)
}

pub fn build_video_graph(clusters: &[MemeCluster], corpus: &Corpus, eta: f64) -> VideoGraph {
    let mut shared: HashMap<(usize, usize), u32> = HashMap::new();
    let mut in_graph = std::collections::BTreeSet::new();
    for c in clusters {
        in_graph.extend(c.videos.iter().copied());
        for (i, &a) in c.videos.iter().enumerate() {
            for &b in &c.videos[i + 1..] {
                *shared.entry((a, b)).or_insert(0) += 1;
            }
        }
    }
    let videos: Vec<usize> = in_graph.into_iter().collect();
    let node: HashMap<usize, usize> = videos.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let times: Vec<i64> = videos.iter().map(|&v| corpus.video(v).upload_time).collect();
    let mut edges = Vec::with_capacity(shared.len());
    let mut simultaneous = 0;
    for ((a, b), nu) in shared {
        let (na, nb) = (node[&a], node[&b]);
        let (src, dst) = match times[na].cmp(&times[nb]) {
            std::cmp::Ordering::Less => (na, nb),
            std::cmp::Ordering::Greater => (nb, na),
            std::cmp::Ordering::Equal => {
                simultaneous += 1;
                continue;
            }
        };
        let dt = days_between(times[src], times[dst]);
        edges.push(VideoEdge {
            src,
            dst,
            nu,
            dt_days: dt,
            omega_star: nu as f64,
            omega_prime: omega_prime(nu, dt, eta),
        });
    }
    if simultaneous > 0 {
        log::info!("{simultaneous} video pairs share memes at identical timestamps; no edge created");
    }
    edges.sort_by_key(|e| (e.src, e.dst));
    VideoGraph {
        videos,
        times,
        edges,
        eta,
        simultaneous_pairs: simultaneous,
    }
}

impl VideoGraph {
    pub fn len(&self) -> usize {
        self.videos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.videos.is_empty()
    }

    pub fn node_of(&self, video: usize) -> Option<usize> {
        self.videos.binary_search(&video).ok()
    }

    /// Nodes posted at or before `upto` and the edges among them.
    pub fn restrict(&self, upto: i64) -> VideoGraph {
        let keep: Vec<usize> = (0..self.len()).filter(|&i| self.times[i] <= upto).collect();
        let mut remap = vec![usize::MAX; self.len()];
        for (new, &old) in keep.iter().enumerate() {
            remap[old] = new;
        }
        VideoGraph {
            videos: keep.iter().map(|&i| self.videos[i]).collect(),
            times: keep.iter().map(|&i| self.times[i]).collect(),
            edges: self
                .edges
                .iter()
                .filter(|e| remap[e.src] != usize::MAX && remap[e.dst] != usize::MAX)
                .map(|e| VideoEdge {
                    src: remap[e.src],
                    dst: remap[e.dst],
                    ..*e
                })
                .collect(),
            eta: self.eta,
            simultaneous_pairs: self.simultaneous_pairs,
        }
    }

    pub fn adjacency(&self) -> Adjacency {
        Adjacency::new(self.len(), true, self.edges.iter().map(|e| (e.src, e.dst)))
    }

    /// True when no directed cycle exists.
    pub fn is_dag(&self) -> bool {
        let adj = self.adjacency();
        let mut indeg: Vec<usize> = adj.incoming.iter().map(Vec::len).collect();
        let mut stack: Vec<usize> = (0..adj.n).filter(|&v| indeg[v] == 0).collect();
        let mut seen = 0;
        while let Some(v) = stack.pop() {
            seen += 1;
            for &w in &adj.outgoing[v] {
                indeg[w as usize] -= 1;
                if indeg[w as usize] == 0 {
                    stack.push(w as usize);
                }
            }
        }
        seen == adj.n
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AuthorEdge {
    /// Node indices with `a < b`.
    pub a: usize,
    pub b: usize,
    pub theta: f64,
}

/// Undirected graph over authors of video-graph nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct AuthorGraph {
    /// Corpus author index of each node, ascending.
    pub authors: Vec<usize>,
    pub edges: Vec<AuthorEdge>,
}

pub fn build_author_graph(vg: &VideoGraph, corpus: &Corpus, variant: WeightVariant) -> AuthorGraph {
    let author_of: Vec<usize> = vg.videos.iter().map(|&v| corpus.author_of(v)).collect();
    let mut authors = author_of.clone();
    authors.sort_unstable();
    authors.dedup();
    let node = |a: usize| authors.binary_search(&a).expect("author present");
    let mut theta: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for e in &vg.edges {
        let (r, s) = (node(author_of[e.src]), node(author_of[e.dst]));
        if r != s {
            *theta.entry((r.min(s), r.max(s))).or_insert(0.0) += e.weight(variant);
        }
    }
    let edges = theta.into_iter().map(|((a, b), theta)| AuthorEdge { a, b, theta }).collect();
    AuthorGraph { authors, edges }
}

impl AuthorGraph {
    pub fn len(&self) -> usize {
        self.authors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.authors.is_empty()
    }

    pub fn node_of(&self, author: usize) -> Option<usize> {
        self.authors.binary_search(&author).ok()
    }

    /// Symmetric weight between two nodes, 0 when unlinked.
    pub fn theta(&self, r: usize, s: usize) -> f64 {
        let key = (r.min(s), r.max(s));
        self.edges
            .binary_search_by(|e| (e.a, e.b).cmp(&key))
            .map_or(0.0, |i| self.edges[i].theta)
    }

    pub fn adjacency(&self) -> Adjacency {
        Adjacency::new(self.len(), false, self.edges.iter().map(|e| (e.a, e.b)))
    }
}

/// Unweighted adjacency lists.
#[derive(Clone, Debug, PartialEq)]
pub struct Adjacency {
    pub n: usize,
    pub directed: bool,
    pub outgoing: Vec<Vec<u32>>,
    /// Same as `outgoing` for undirected graphs.
    pub incoming: Vec<Vec<u32>>,
}

impl Adjacency {
    pub fn new(n: usize, directed: bool, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut outgoing = vec![Vec::new(); n];
        let mut incoming = vec![Vec::new(); n];
        for (a, b) in edges {
            if a == b {
                continue;
            }
            outgoing[a].push(b as u32);
            incoming[b].push(a as u32);
            if !directed {
                outgoing[b].push(a as u32);
                incoming[a].push(b as u32);
            }
        }
        for l in outgoing.iter_mut().chain(incoming.iter_mut()) {
            l.sort_unstable();
            l.dedup();
        }
        Adjacency {
            n,
            directed,
            outgoing,
            incoming,
        }
    }

    /// Induced subgraph on `keep` (ascending), renumbered in that order.
    pub fn induced(&self, keep: &[usize]) -> Adjacency {
        let mut remap = vec![u32::MAX; self.n];
        for (i, &v) in keep.iter().enumerate() {
            remap[v] = i as u32;
        }
        let edges = keep.iter().flat_map(|&v| {
            let remap = &remap;
            self.outgoing[v]
                .iter()
                .filter(move |&&w| remap[w as usize] != u32::MAX)
                .map(move |&w| (remap[v] as usize, remap[w as usize] as usize))
        });
        Adjacency::new(keep.len(), self.directed, edges.collect::<Vec<_>>())
    }

    /// Weakly connected component id per node, numbered by first member.
    pub fn components(&self) -> Vec<usize> {
        let mut comp = vec![usize::MAX; self.n];
        let mut next = 0;
        for s in 0..self.n {
            if comp[s] != usize::MAX {
                continue;
            }
            let mut stack = vec![s];
            comp[s] = next;
            while let Some(v) = stack.pop() {
                for &w in self.outgoing[v].iter().chain(&self.incoming[v]) {
                    if comp[w as usize] == usize::MAX {
                        comp[w as usize] = next;
                        stack.push(w as usize);
                    }
                }
            }
            next += 1;
        }
        comp
    }
}
