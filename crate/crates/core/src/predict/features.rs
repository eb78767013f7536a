//! Per-meme early-dynamics features.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::corpus::{BagOfWords, Corpus};
use crate::memedetect::MemeCluster;
use crate::memegraph::{
    build_author_graph, build_video_graph, centralities, meme_zetas, Adjacency, AuthorGraph, Centrality, WeightVariant, DEFAULT_ETA,
};
use crate::par::{self, Exec};
use crate::topics::{JointVocabulary, Modality, TopicModel};
use crate::{Error, Result, SECONDS_PER_DAY};

pub const CONNECTIVITY_DIM: usize = 28;
pub const INFLUENCE_DIM: usize = 16;
pub const PRESENCE_DIM: usize = 3;
/// Memes found in fewer videos are not modelled.
pub const MIN_VIDEOS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Block {
    Volume,
    Connectivity,
    Influence,
    Txt,
    Vmeme,
    Topic,
    Presence,
}

impl Block {
    pub const ALL: [Block; 7] = [
        Block::Volume,
        Block::Connectivity,
        Block::Influence,
        Block::Txt,
        Block::Vmeme,
        Block::Topic,
        Block::Presence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Block::Volume => "volume",
            Block::Connectivity => "connectivity",
            Block::Influence => "influence",
            Block::Txt => "txt",
            Block::Vmeme => "vmeme",
            Block::Topic => "topic",
            Block::Presence => "presence",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockSpan {
    pub block: Block,
    pub start: usize,
    pub len: usize,
}

/// Column layout of a feature row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub blocks: Vec<BlockSpan>,
    /// Aggregates within connectivity and influence, per metric.
    pub aggregates: Vec<String>,
    pub connectivity_metrics: Vec<String>,
    pub influence_metrics: Vec<String>,
}

impl FeatureSchema {
    pub fn new(txt: usize, vmeme: usize, topic: usize) -> Self {
        let mut blocks = Vec::new();
        let mut start = 0;
        for (block, len) in [
            (Block::Volume, 1),
            (Block::Connectivity, CONNECTIVITY_DIM),
            (Block::Influence, INFLUENCE_DIM),
            (Block::Txt, txt),
            (Block::Vmeme, vmeme),
            (Block::Topic, topic),
            (Block::Presence, PRESENCE_DIM),
        ] {
            blocks.push(BlockSpan { block, start, len });
            start += len;
        }
        let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect();
        FeatureSchema {
            blocks,
            aggregates: s(&["max", "mean", "median", "std"]),
            connectivity_metrics: s(&[
                "productivity",
                "author_degree",
                "author_closeness",
                "author_betweenness",
                "video_degree",
                "video_closeness",
                "video_betweenness",
            ]),
            influence_metrics: s(&["chi_hat", "chi_bar", "in_degree", "out_degree"]),
        }
    }

    pub fn width(&self) -> usize {
        self.blocks.last().map_or(0, |b| b.start + b.len)
    }

    pub fn span(&self, b: Block) -> &BlockSpan {
        self.blocks.iter().find(|s| s.block == b).expect("every block present")
    }

    /// Column indices covering `blocks`, in schema order.
    pub fn columns(&self, blocks: &[Block]) -> Vec<usize> {
        self.blocks
            .iter()
            .filter(|s| blocks.contains(&s.block))
            .flat_map(|s| s.start..s.start + s.len)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemeFeatureRow {
    pub meme_id: u32,
    pub values: Vec<f64>,
    /// `log10` of the number of videos containing the meme.
    pub log_volume: f64,
    /// `log10(1 + lifespan in days)`.
    pub log_lifespan: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureTable {
    pub schema: FeatureSchema,
    pub rows: Vec<MemeFeatureRow>,
    /// Memes dropped for having too few videos.
    pub pruned: Vec<u32>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssembleParams {
    pub delta_days: f64,
    pub min_videos: usize,
    pub eta: f64,
    pub weight_variant: WeightVariant,
    /// When set, author-graph centralities come from snapshots taken on this
    /// grid of days (UTC-aligned) at or before each meme's window end,
    /// instead of one snapshot per meme.
    pub author_snapshot_days: Option<f64>,
}

impl Default for AssembleParams {
    fn default() -> Self {
        AssembleParams {
            delta_days: 1.0,
            min_videos: MIN_VIDEOS,
            eta: DEFAULT_ETA,
            weight_variant: WeightVariant::Star,
            author_snapshot_days: None,
        }
    }
}

pub struct FeatureInputs<'a> {
    pub corpus: &'a Corpus,
    /// Filtered clusters over the whole corpus.
    pub clusters: &'a [MemeCluster],
    /// Joint bag of each corpus video; only its text terms are read.
    pub docs: &'a [BagOfWords],
    pub vocab: &'a JointVocabulary,
    pub model: Option<&'a TopicModel>,
}

/// `[max, mean, median, std]` (population std); zeros when empty.
pub fn aggregate(values: &[f64]) -> [f64; 4] {
    if values.is_empty() {
        return [0.0; 4];
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let median = if v.len() % 2 == 1 {
        v[v.len() / 2]
    } else {
        0.5 * (v[v.len() / 2 - 1] + v[v.len() / 2])
    };
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    [v[v.len() - 1], mean, median, var.sqrt()]
}

/// Cluster restricted to videos posted by `upto`, if it still spans two
/// videos and two authors.
pub fn truncate_cluster(c: &MemeCluster, corpus: &Corpus, upto: i64) -> Option<MemeCluster> {
    let videos: Vec<usize> = c.videos.iter().copied().filter(|&v| corpus.video(v).upload_time <= upto).collect();
    let authors: BTreeSet<usize> = videos.iter().map(|&v| corpus.author_of(v)).collect();
    if videos.len() < 2 || authors.len() < 2 {
        return None;
    }
    let members = c
        .members
        .iter()
        .filter(|m| corpus.video_index(&m.video_id).is_some_and(|v| corpus.video(v).upload_time <= upto))
        .cloned()
        .collect();
    let times = videos.iter().map(|&v| corpus.video(v).upload_time);
    Some(MemeCluster {
        meme_id: c.meme_id,
        members,
        onset_time: times.clone().min().unwrap_or(c.onset_time),
        last_time: times.max().unwrap_or(c.onset_time),
        videos,
        authors: authors.into_iter().collect(),
    })
}

/// Centralities of `nodes` computed on the components containing them and
/// normalised as if computed on a graph of `n_total` nodes.
fn local_centralities(exec: Exec, adj: &Adjacency, nodes: &[usize], n_total: usize) -> BTreeMap<usize, Centrality> {
    let n = n_total.max(adj.n);
    let comp = adj.components();
    let wanted: BTreeSet<usize> = nodes.iter().map(|&v| comp[v]).collect();
    let keep: Vec<usize> = (0..adj.n).filter(|&v| wanted.contains(&comp[v])).collect();
    let sub = adj.induced(&keep);
    let nc = keep.len();
    let c = centralities(exec, &sub);
    let scale_deg = if n > 1 { (nc.saturating_sub(1)) as f64 / (n - 1) as f64 } else { 0.0 };
    let scale_btw = if n > 2 && nc > 2 {
        ((nc - 1) * (nc - 2)) as f64 / ((n - 1) * (n - 2)) as f64
    } else {
        0.0
    };
    let wanted_nodes: BTreeSet<usize> = nodes.iter().copied().collect();
    keep.iter()
        .enumerate()
        .filter(|(_, v)| wanted_nodes.contains(v))
        .map(|(i, &v)| {
            (
                v,
                Centrality {
                    degree: c[i].degree * scale_deg,
                    closeness: c[i].closeness,
                    betweenness: c[i].betweenness * scale_btw,
                },
            )
        })
        .collect()
}

/// When each cluster and video first appears in a time-restricted graph.
struct Timeline {
    /// Earliest time at which the truncated cluster passes the two-video,
    /// two-author filter; `i64::MAX` if never.
    cluster_active: Vec<i64>,
    video_clusters: Vec<Vec<usize>>,
    /// Sorted activation times of videos that ever become graph nodes.
    node_times: Vec<i64>,
}

impl Timeline {
    fn new(clusters: &[MemeCluster], corpus: &Corpus) -> Self {
        let mut video_clusters = vec![Vec::new(); corpus.len()];
        let cluster_active: Vec<i64> = clusters
            .iter()
            .enumerate()
            .map(|(ci, c)| {
                for &v in &c.videos {
                    video_clusters[v].push(ci);
                }
                let mut order: Vec<usize> = c.videos.clone();
                order.sort_by_key(|&v| corpus.video(v).upload_time);
                let first = order.first().map(|&v| corpus.author_of(v));
                order
                    .iter()
                    .find(|&&v| Some(corpus.author_of(v)) != first)
                    .map_or(i64::MAX, |&v| corpus.video(v).upload_time)
            })
            .collect();
        let mut node_times: Vec<i64> = video_clusters
            .iter()
            .enumerate()
            .filter_map(|(v, cs)| {
                let a = cs.iter().map(|&c| cluster_active[c]).min()?;
                (a != i64::MAX).then(|| a.max(corpus.video(v).upload_time))
            })
            .collect();
        node_times.sort_unstable();
        Timeline {
            cluster_active,
            video_clusters,
            node_times,
        }
    }

    fn nodes_at(&self, t: i64) -> usize {
        self.node_times.partition_point(|&x| x <= t)
    }

    /// Active clusters reachable from `seeds` through shared videos, all
    /// truncated to `t`.
    fn component_clusters(&self, clusters: &[MemeCluster], corpus: &Corpus, seeds: &[usize], t: i64) -> Vec<MemeCluster> {
        let mut seen_video: BTreeSet<usize> = seeds.iter().copied().collect();
        let mut seen_cluster = BTreeSet::new();
        let mut stack: Vec<usize> = seeds.to_vec();
        while let Some(v) = stack.pop() {
            for &c in &self.video_clusters[v] {
                if self.cluster_active[c] > t || !seen_cluster.insert(c) {
                    continue;
                }
                for &u in &clusters[c].videos {
                    if corpus.video(u).upload_time <= t && seen_video.insert(u) {
                        stack.push(u);
                    }
                }
            }
        }
        seen_cluster.into_iter().filter_map(|c| truncate_cluster(&clusters[c], corpus, t)).collect()
    }

    /// Every cluster as it stood at time `t`.
    fn snapshot(&self, clusters: &[MemeCluster], corpus: &Corpus, t: i64) -> Vec<MemeCluster> {
        clusters
            .iter()
            .zip(&self.cluster_active)
            .filter(|(_, &a)| a <= t)
            .filter_map(|(c, _)| truncate_cluster(c, corpus, t))
            .collect()
    }
}

/// Author graph and the centralities of all its nodes at one time.
struct AuthorSnapshot {
    graph: AuthorGraph,
    centrality: Vec<Centrality>,
}

impl AuthorSnapshot {
    fn at(inputs: &FeatureInputs, params: &AssembleParams, timeline: &Timeline, t: i64) -> Self {
        let snap = timeline.snapshot(inputs.clusters, inputs.corpus, t);
        let vg = build_video_graph(&snap, inputs.corpus, params.eta);
        let graph = build_author_graph(&vg, inputs.corpus, params.weight_variant);
        let centrality = centralities(Exec::Sequential, &graph.adjacency());
        AuthorSnapshot { graph, centrality }
    }

    fn get(&self, author: usize) -> Centrality {
        self.graph.node_of(author).map(|n| self.centrality[n]).unwrap_or_default()
    }
}

fn window_end(cluster: &MemeCluster, params: &AssembleParams) -> i64 {
    cluster.onset_time + (params.delta_days * SECONDS_PER_DAY).round() as i64
}

fn checkpoint(t: i64, step_days: f64) -> i64 {
    let step = (step_days * SECONDS_PER_DAY).round().max(1.0) as i64;
    t.div_euclid(step) * step
}

struct Shared<'a> {
    inputs: &'a FeatureInputs<'a>,
    params: &'a AssembleParams,
    schema: &'a FeatureSchema,
    timeline: Timeline,
    by_author: Vec<Vec<usize>>,
}

fn meme_row(sh: &Shared, cluster: &MemeCluster, author_snapshot: Option<&AuthorSnapshot>) -> MemeFeatureRow {
    let (inputs, params, schema) = (sh.inputs, sh.params, sh.schema);
    let corpus = inputs.corpus;
    let t1 = window_end(cluster, params);
    let window: Vec<usize> = cluster
        .videos
        .iter()
        .copied()
        .filter(|&v| corpus.video(v).upload_time <= t1)
        .collect();
    let authors: Vec<usize> = window.iter().map(|&v| corpus.author_of(v)).collect::<BTreeSet<_>>().into_iter().collect();

    let local = sh.timeline.component_clusters(inputs.clusters, corpus, &window, t1);
    let vg = build_video_graph(&local, corpus, params.eta);
    let v_nodes: Vec<usize> = window.iter().filter_map(|&v| vg.node_of(v)).collect();
    let vc = local_centralities(Exec::Sequential, &vg.adjacency(), &v_nodes, sh.timeline.nodes_at(t1));
    let author_centrality: BTreeMap<usize, Centrality> = match author_snapshot {
        Some(s) => authors.iter().map(|&a| (a, s.get(a))).collect(),
        None => {
            let full = build_video_graph(&sh.timeline.snapshot(inputs.clusters, corpus, t1), corpus, params.eta);
            let ag = build_author_graph(&full, corpus, params.weight_variant);
            let a_nodes: Vec<usize> = authors.iter().filter_map(|&a| ag.node_of(a)).collect();
            let ac = local_centralities(Exec::Sequential, &ag.adjacency(), &a_nodes, ag.authors.len());
            authors
                .iter()
                .map(|&a| (a, ag.node_of(a).and_then(|n| ac.get(&n)).copied().unwrap_or_default()))
                .collect()
        }
    };

    let early_of = |a: usize| -> Vec<usize> {
        sh.by_author[a].iter().copied().filter(|&v| corpus.video(v).upload_time <= t1).collect()
    };
    // per-video influence at t1, over the clusters touching the authors' early videos
    let mut touched = BTreeSet::new();
    for &a in &authors {
        for v in early_of(a) {
            touched.extend(sh.timeline.video_clusters[v].iter().copied().filter(|&c| sh.timeline.cluster_active[c] <= t1));
        }
    }
    let mut chi: BTreeMap<usize, f64> = BTreeMap::new();
    let mut zin: BTreeMap<usize, f64> = BTreeMap::new();
    let mut zout: BTreeMap<usize, f64> = BTreeMap::new();
    for c in touched.into_iter().filter_map(|c| truncate_cluster(&inputs.clusters[c], corpus, t1)) {
        for z in meme_zetas(&c, corpus) {
            *chi.entry(z.video).or_default() += z.zeta_out as f64 / (1.0 + z.zeta_in as f64);
            *zin.entry(z.video).or_default() += z.zeta_in as f64;
            *zout.entry(z.video).or_default() += z.zeta_out as f64;
        }
    }
    let snapshot = local;

    let mut metrics: [Vec<f64>; 7] = Default::default();
    let mut infl: [Vec<f64>; 4] = Default::default();
    for &a in &authors {
        let early = early_of(a);
        let productivity = early.len() as f64;
        metrics[0].push(productivity);
        let ca = author_centrality[&a];
        metrics[1].push(ca.degree);
        metrics[2].push(ca.closeness);
        metrics[3].push(ca.betweenness);
        let mine: Vec<Centrality> = window
            .iter()
            .filter(|&&v| corpus.author_of(v) == a)
            .map(|&v| vg.node_of(v).and_then(|n| vc.get(&n)).copied().unwrap_or_default())
            .collect();
        let m = mine.len().max(1) as f64;
        metrics[4].push(mine.iter().map(|c| c.degree).sum::<f64>() / m);
        metrics[5].push(mine.iter().map(|c| c.closeness).sum::<f64>() / m);
        metrics[6].push(mine.iter().map(|c| c.betweenness).sum::<f64>() / m);
        let sum = |map: &BTreeMap<usize, f64>| early.iter().map(|v| map.get(v).copied().unwrap_or(0.0)).sum::<f64>();
        let chi_hat = sum(&chi);
        infl[0].push(chi_hat);
        infl[1].push(if productivity > 0.0 { chi_hat / productivity } else { 0.0 });
        infl[2].push(sum(&zin));
        infl[3].push(sum(&zout));
    }

    let mut values = vec![0.0; schema.width()];
    values[schema.span(Block::Volume).start] = window.len() as f64;
    let cs = schema.span(Block::Connectivity).start;
    for (i, m) in metrics.iter().enumerate() {
        values[cs + 4 * i..cs + 4 * i + 4].copy_from_slice(&aggregate(m));
    }
    let is = schema.span(Block::Influence).start;
    for (i, m) in infl.iter().enumerate() {
        values[is + 4 * i..is + 4 * i + 4].copy_from_slice(&aggregate(m));
    }

    // content blocks
    let w = window.len().max(1) as f64;
    let txt = schema.span(Block::Txt).clone();
    let mut any_txt = false;
    let mut joint = BagOfWords {
        doc_id: format!("meme{}", cluster.meme_id),
        counts: BTreeMap::new(),
    };
    for &v in &window {
        for (&t, &c) in &inputs.docs[v].counts {
            if (t as usize) < txt.len {
                values[txt.start + t as usize] += c as f64 / w;
                *joint.counts.entry(t).or_insert(0) += c;
                any_txt = true;
            }
        }
    }
    let vm = schema.span(Block::Vmeme).clone();
    let meme_range = inputs.vocab.range(Modality::Meme);
    let mut any_meme = false;
    for c in &snapshot {
        let Some(term) = inputs.vocab.meme_index(c.meme_id) else { continue };
        for (v, shots) in c.shots_per_video(corpus) {
            if window.binary_search(&v).is_ok() {
                values[vm.start + term as usize - meme_range.start] += shots as f64 / w;
                *joint.counts.entry(term).or_insert(0) += shots;
                any_meme = true;
            }
        }
    }
    let tp = schema.span(Block::Topic).clone();
    let mut any_topic = false;
    if let Some(model) = inputs.model {
        if !joint.counts.is_empty() {
            any_topic = true;
            values[tp.start..tp.start + tp.len].copy_from_slice(&model.infer_theta(&joint));
        }
    }
    let ps = schema.span(Block::Presence).start;
    values[ps] = any_txt as u8 as f64;
    values[ps + 1] = any_meme as u8 as f64;
    values[ps + 2] = any_topic as u8 as f64;

    let lifespan_days = (cluster.last_time - cluster.onset_time) as f64 / SECONDS_PER_DAY;
    MemeFeatureRow {
        meme_id: cluster.meme_id,
        values,
        log_volume: (cluster.videos.len() as f64).log10(),
        log_lifespan: (1.0 + lifespan_days).log10(),
    }
}

pub fn assemble_features(exec: Exec, inputs: &FeatureInputs, params: &AssembleParams) -> Result<FeatureTable> {
    if inputs.docs.len() != inputs.corpus.len() {
        return Err(Error::DimensionMismatch {
            expected: inputs.corpus.len(),
            found: inputs.docs.len(),
        });
    }
    if !(params.delta_days >= 0.0) {
        return Err(Error::InvalidInput("feature window must be non-negative".into()));
    }
    let topic = inputs.model.map_or(0, |m| m.k);
    if let Some(m) = inputs.model {
        if m.vocab_size() != inputs.vocab.len() {
            return Err(Error::DimensionMismatch {
                expected: inputs.vocab.len(),
                found: m.vocab_size(),
            });
        }
    }
    let schema = FeatureSchema::new(inputs.vocab.range(Modality::Text).len(), inputs.vocab.range(Modality::Meme).len(), topic);
    let (kept, pruned): (Vec<&MemeCluster>, Vec<&MemeCluster>) =
        inputs.clusters.iter().partition(|c| c.videos.len() >= params.min_videos);
    let shared = Shared {
        inputs,
        params,
        schema: &schema,
        timeline: Timeline::new(inputs.clusters, inputs.corpus),
        by_author: inputs.corpus.videos_by_author(),
    };
    let rows = match params.author_snapshot_days {
        None => par::map(exec, &kept, |c| meme_row(&shared, c, None)),
        Some(step) => {
            if !(step > 0.0) {
                return Err(Error::InvalidInput("author snapshot step must be positive".into()));
            }
            let times: Vec<i64> = kept
                .iter()
                .map(|c| checkpoint(window_end(c, params), step))
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            let snaps = par::map(exec, &times, |&t| AuthorSnapshot::at(inputs, params, &shared.timeline, t));
            par::map(exec, &kept, |c| {
                let t = checkpoint(window_end(c, params), step);
                let i = times.binary_search(&t).expect("checkpoint computed");
                meme_row(&shared, c, Some(&snaps[i]))
            })
        }
    };
    Ok(FeatureTable {
        schema,
        rows,
        pruned: pruned.iter().map(|c| c.meme_id).collect(),
    })
}
