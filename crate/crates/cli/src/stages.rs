//! Stage builders and the runner that skips up-to-date stages.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use vmeme::corpus::{build_vocabulary, ingest_manifest, write_jsonl, BagOfWords, Corpus, IngestOptions, Normalizer, TokenizedCorpus};
use vmeme::correlogram::{collection_max_matrix, extract, to_matrix, DEFAULT_DISTANCES};
use vmeme::imgproc::{keyframes_from_labels, prepare_frame, segment_shots, FrameRef, RawFrame, ShotRecord};
use vmeme::matrix::Matrix;
use vmeme::memedetect::{
    candidates, close_clusters, filter_clusters, resolve_labels, sweep, AnnIndex, Candidates, ClusterRecord, EvalMode, LabeledPair,
    MemeCluster, Neighbor,
};
use vmeme::memegraph::{
    build_author_graph, build_video_graph, centralities, gini, influence_indices, originality_index, write_author_edges,
    write_video_edges, zipf_fit, PowerLawFit,
};
use vmeme::par;
use vmeme::predict::{assemble_features, evaluate, save_feature_table, write_reports_csv, FeatureInputs, FeatureSet, Target};
use vmeme::topics::{fit_lda, load_model, save_model, JointVocabulary, TopicModel};
use vmeme::Exec;

use crate::config::Config;
use crate::reports;
use crate::workspace::{fingerprint, sha256_file, Stage, Workspace};

pub fn exec(cfg: &Config) -> Exec {
    if cfg.threads == 1 {
        Exec::Sequential
    } else {
        Exec::Parallel
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Built,
    UpToDate,
}

/// The config keys a stage depends on.
pub fn stage_config(stage: Stage, cfg: &Config) -> serde_json::Value {
    use serde_json::json;
    match stage {
        Stage::Ingest => json!({}),
        Stage::Shots => json!({ "shot_threshold": cfg.shot_threshold, "seed": cfg.seed }),
        Stage::Features => json!({ "prep": cfg.prep(), "distances": DEFAULT_DISTANCES }),
        Stage::Index => json!({ "index": cfg.index() }),
        Stage::Detect => json!({ "tau": cfg.tau }),
        Stage::EvalDetect => json!({ "tau_grid": cfg.tau_grid }),
        Stage::Graph => json!({ "eta": cfg.eta, "weight_variant": cfg.weight_variant }),
        Stage::Topics => json!({ "vocab_size": cfg.vocab_size, "meme_terms": cfg.meme_terms, "lda": cfg.lda() }),
        Stage::Predict => json!({
            "assemble": cfg.assemble(),
            "eval": cfg.eval(),
            "feature_sets": cfg.feature_sets,
            "targets": cfg.targets,
        }),
        Stage::Report => json!({}),
    }
}

/// Resolves a path from the config against the workspace root.
pub fn resolve(ws: &Workspace, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        ws.root().join(p)
    }
}

fn manifest_path(ws: &Workspace, cfg: &Config) -> Result<PathBuf> {
    cfg.manifest
        .as_deref()
        .map(|p| resolve(ws, p))
        .ok_or_else(|| anyhow!("no manifest given; pass --manifest or set `manifest` in config.toml"))
}

fn labels_path(ws: &Workspace, cfg: &Config) -> Result<PathBuf> {
    cfg.labels
        .as_deref()
        .map(|p| resolve(ws, p))
        .ok_or_else(|| anyhow!("no labels given; pass --labels or set `labels` in config.toml"))
}

/// Digest of the manifest plus every frame file it references.
fn ingest_inputs(path: &Path) -> Result<Vec<(String, String)>> {
    let ingested = ingest_manifest(path, &IngestOptions::default())?;
    let mut frames = BTreeMap::new();
    for v in ingested.corpus.videos() {
        for f in &v.frames {
            let p = Path::new(&f.path);
            if p.exists() {
                frames.insert(f.path.clone(), sha256_file(p)?);
            }
        }
    }
    Ok(vec![
        ("manifest".into(), sha256_file(path)?),
        ("frames".into(), fingerprint(&frames.values().collect::<Vec<_>>())?),
    ])
}

fn external_inputs(ws: &Workspace, stage: Stage, cfg: &Config) -> Result<Vec<(String, String)>> {
    match stage {
        Stage::Ingest => ingest_inputs(&manifest_path(ws, cfg)?),
        Stage::EvalDetect => Ok(vec![("labels".into(), sha256_file(&labels_path(ws, cfg)?)?)]),
        Stage::Report => {
            let mut out = Vec::new();
            for opt in [Stage::EvalDetect, Stage::Predict] {
                if let Some(m) = ws.manifest(opt)? {
                    out.push((opt.name().to_string(), fingerprint(&m)?));
                }
            }
            Ok(out)
        }
        _ => Ok(Vec::new()),
    }
}

/// Builds `stage` unless its config, inputs and outputs are unchanged.
pub fn run_stage(ws: &Workspace, cfg: &Config, stage: Stage, force: bool) -> Result<Outcome> {
    let config_hash = fingerprint(&stage_config(stage, cfg))?;
    let mut inputs = BTreeMap::new();
    for &up in stage.inputs() {
        inputs.insert(up.name().to_string(), fingerprint(&ws.require(up)?)?);
    }
    inputs.extend(external_inputs(ws, stage, cfg).with_context(|| format!("stage `{stage}` inputs"))?);
    if !force && ws.is_fresh(stage, &config_hash, &inputs)? {
        log::info!("{stage}: up-to-date");
        return Ok(Outcome::UpToDate);
    }
    let start = Instant::now();
    let dir = ws.reset(stage)?;
    build(ws, cfg, stage, &dir).with_context(|| format!("stage `{stage}` failed"))?;
    ws.commit(stage, config_hash, inputs)?;
    log::info!("{stage}: built in {:.2}s", start.elapsed().as_secs_f64());
    Ok(Outcome::Built)
}

/// Runs the whole chain, then detection evaluation when labels are
/// configured, then the report bundle.
pub fn run_pipeline(ws: &Workspace, cfg: &Config, force: bool) -> Result<Vec<(Stage, Outcome)>> {
    let mut out = Vec::new();
    let mut stages = Stage::PIPELINE.to_vec();
    if cfg.labels.is_some() {
        stages.push(Stage::EvalDetect);
    }
    stages.push(Stage::Report);
    for s in stages {
        out.push((s, run_stage(ws, cfg, s, force)?));
    }
    Ok(out)
}

fn build(ws: &Workspace, cfg: &Config, stage: Stage, dir: &Path) -> Result<()> {
    match stage {
        Stage::Ingest => build_ingest(ws, cfg, dir),
        Stage::Shots => build_shots(ws, cfg, dir),
        Stage::Features => build_features(ws, cfg, dir),
        Stage::Index => build_index(ws, cfg, dir),
        Stage::Detect => build_detect(ws, cfg, dir),
        Stage::EvalDetect => build_eval_detect(ws, cfg, dir),
        Stage::Graph => build_graph(ws, cfg, dir),
        Stage::Topics => build_topics(ws, cfg, dir),
        Stage::Predict => build_predict(ws, cfg, dir),
        Stage::Report => reports::emit(ws, cfg, dir),
    }
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).with_context(|| format!("{}:{}", path.display(), i + 1))?);
    }
    Ok(out)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

// ---- ingest ----

fn build_ingest(ws: &Workspace, cfg: &Config, dir: &Path) -> Result<()> {
    let ingested = ingest_manifest(&manifest_path(ws, cfg)?, &IngestOptions::default())?;
    for r in &ingested.rejects {
        log::warn!("manifest line {} skipped: {}", r.line, r.reason);
    }
    ingested.corpus.write_dir(dir)?;
    write_jsonl(&dir.join("rejects.jsonl"), &ingested.rejects)?;
    Ok(())
}

pub fn load_corpus(ws: &Workspace) -> Result<Corpus> {
    ws.require(Stage::Ingest)?;
    Ok(Corpus::read_dir(&ws.dir(Stage::Ingest))?)
}

// ---- shots ----

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KeyframeRow {
    #[serde(flatten)]
    pub shot: ShotRecord,
    pub path: String,
}

fn build_shots(ws: &Workspace, cfg: &Config, dir: &Path) -> Result<()> {
    let corpus = load_corpus(ws)?;
    let videos: Vec<_> = corpus.videos().iter().filter(|v| !v.is_frameless()).collect();
    let rows = par::try_map(exec(cfg), &videos, |v| -> Result<Vec<KeyframeRow>> {
        let offsets: Vec<f64> = v.frames.iter().map(|f| f.t_offset_s).collect();
        let shots = if v.frames.iter().all(|f| f.shot.is_some()) {
            let labels: Vec<u32> = v.frames.iter().map(|f| f.shot.unwrap_or(0)).collect();
            keyframes_from_labels(&v.video_id, &labels, &offsets, cfg.seed)?
        } else {
            let frames = v
                .frames
                .iter()
                .map(|f| RawFrame::load(v.video_id.clone(), f.t_offset_s, Path::new(&f.path)))
                .collect::<vmeme::Result<Vec<_>>>()
                .with_context(|| format!("loading frames of {}", v.video_id))?;
            segment_shots(&frames, cfg.shot_threshold, cfg.seed)?
        };
        Ok(shots
            .into_iter()
            .map(|shot| KeyframeRow {
                path: v.frames[shot.keyframe].path.clone(),
                shot,
            })
            .collect())
    })?;
    let rows: Vec<KeyframeRow> = rows.into_iter().flatten().collect();
    write_jsonl(&dir.join("keyframes.jsonl"), &rows)?;
    Ok(())
}

// ---- features ----

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct BlankFrame {
    video_id: String,
    shot: u32,
    path: String,
}

fn build_features(ws: &Workspace, cfg: &Config, dir: &Path) -> Result<()> {
    ws.require(Stage::Shots)?;
    let rows: Vec<KeyframeRow> = read_jsonl(&ws.file(Stage::Shots, "keyframes.jsonl"))?;
    let prep = cfg.prep();
    let start = Instant::now();
    let results = par::try_map(exec(cfg), &rows, |r| -> Result<Option<vmeme::correlogram::CorrelogramFeature>> {
        let raw = RawFrame::load(r.shot.video_id.clone(), r.shot.start_s, Path::new(&r.path))
            .with_context(|| format!("keyframe {}#{}", r.shot.video_id, r.shot.shot_index))?;
        let p = prepare_frame(&raw.image, &prep)?;
        if p.blank {
            return Ok(None);
        }
        Ok(Some(extract(&p, &DEFAULT_DISTANCES)?))
    })?;
    let secs = start.elapsed().as_secs_f64();
    log::info!("features: {} keyframes, {:.1}s per 1k frames", rows.len(), 1000.0 * secs / rows.len().max(1) as f64);
    let mut frames = Vec::new();
    let mut feats = Vec::new();
    let mut blank = Vec::new();
    for (r, f) in rows.iter().zip(results) {
        match f {
            Some(f) => {
                frames.push(FrameRef {
                    video_id: r.shot.video_id.clone(),
                    shot: r.shot.shot_index,
                });
                feats.push(f);
            }
            None => blank.push(BlankFrame {
                video_id: r.shot.video_id.clone(),
                shot: r.shot.shot_index,
                path: r.path.clone(),
            }),
        }
    }
    let m = if feats.is_empty() { Matrix::zeros(0, vmeme::correlogram::FEATURE_DIM) } else { to_matrix(&feats)? };
    m.save(&dir.join("features.vmf"))?;
    write_jsonl(&dir.join("frames.jsonl"), &frames)?;
    write_jsonl(&dir.join("blank.jsonl"), &blank)?;
    Ok(())
}

pub fn load_features(ws: &Workspace) -> Result<(Vec<FrameRef>, Matrix)> {
    ws.require(Stage::Features)?;
    let frames: Vec<FrameRef> = read_jsonl(&ws.file(Stage::Features, "frames.jsonl"))?;
    let m = Matrix::load(&ws.file(Stage::Features, "features.vmf"))?;
    if m.rows() != frames.len() {
        bail!("features.vmf has {} rows but frames.jsonl lists {}", m.rows(), frames.len());
    }
    Ok((frames, m))
}

// ---- index ----

#[derive(Serialize, Deserialize)]
struct CandidateRow {
    ratio: f64,
    neighbors: Vec<(u32, f64)>,
}

fn build_index(ws: &Workspace, cfg: &Config, dir: &Path) -> Result<()> {
    let (_, m) = load_features(ws)?;
    if m.rows() == 0 {
        bail!("no non-blank keyframes to index");
    }
    let ex = exec(cfg);
    let fmax = collection_max_matrix(ex, &m)?;
    let index = AnnIndex::build(ex, m, &cfg.index())?;
    let cands = candidates(ex, &index, &fmax, cfg.knn)?;
    let rows: Vec<CandidateRow> = cands
        .neighbors
        .iter()
        .zip(&cands.norm_ratio)
        .map(|(n, &ratio)| CandidateRow {
            ratio,
            neighbors: n.iter().map(|x| (x.index, x.distance)).collect(),
        })
        .collect();
    write_jsonl(&dir.join("candidates.jsonl"), &rows)?;
    let info = serde_json::json!({
        "kind": index.kind(),
        "budget": index.budget(),
        "rows": index.len(),
        "probe": index.probe(),
        "fmax_norm": fmax.l2_norm(),
    });
    fs::write(dir.join("index.json"), serde_json::to_string_pretty(&info)? + "\n")?;
    Ok(())
}

pub fn load_candidates(ws: &Workspace) -> Result<Candidates> {
    ws.require(Stage::Index)?;
    let rows: Vec<CandidateRow> = read_jsonl(&ws.file(Stage::Index, "candidates.jsonl"))?;
    let mut neighbors = Vec::with_capacity(rows.len());
    let mut norm_ratio = Vec::with_capacity(rows.len());
    for r in rows {
        norm_ratio.push(r.ratio);
        neighbors.push(r.neighbors.into_iter().map(|(index, distance)| Neighbor { index, distance }).collect());
    }
    Ok(Candidates { neighbors, norm_ratio })
}

// ---- detect ----

fn build_detect(ws: &Workspace, cfg: &Config, dir: &Path) -> Result<()> {
    let corpus = load_corpus(ws)?;
    let (frames, _) = load_features(ws)?;
    let cands = load_candidates(ws)?;
    let pairs = cands.pairs(cfg.tau)?;
    let clusters = filter_clusters(&close_clusters(frames.len(), &pairs), &frames, &corpus)?;
    log::info!("detect: {} pairs, {} memes at tau {}", pairs.len(), clusters.len(), cfg.tau);
    let mut w = create(&dir.join("pairs.csv"))?;
    writeln!(w, "a_video,a_shot,b_video,b_shot,distance")?;
    for p in &pairs {
        let (a, b) = (&frames[p.a as usize], &frames[p.b as usize]);
        writeln!(w, "{},{},{},{},{}", a.video_id, a.shot, b.video_id, b.shot, p.distance)?;
    }
    w.flush()?;
    let records: Vec<ClusterRecord> = clusters.iter().map(MemeCluster::to_record).collect();
    write_jsonl(&dir.join("clusters.jsonl"), &records)?;
    Ok(())
}

pub fn load_clusters(ws: &Workspace, corpus: &Corpus) -> Result<Vec<MemeCluster>> {
    ws.require(Stage::Detect)?;
    let recs: Vec<ClusterRecord> = read_jsonl(&ws.file(Stage::Detect, "clusters.jsonl"))?;
    recs.into_iter()
        .map(|r| MemeCluster::from_record(r, corpus).map_err(Into::into))
        .collect()
}

// ---- eval-detect ----

fn build_eval_detect(ws: &Workspace, cfg: &Config, dir: &Path) -> Result<()> {
    let (frames, _) = load_features(ws)?;
    let cands = load_candidates(ws)?;
    let labels: Vec<LabeledPair> = read_jsonl(&labels_path(ws, cfg)?)?;
    let rows = resolve_labels(&labels, &frames)?;
    let mut w = create(&dir.join("pr_curve.csv"))?;
    writeln!(w, "mode,tau,precision,recall,f1,true_pos,false_pos,false_neg")?;
    let mut best = serde_json::Map::new();
    for (name, mode) in [("pair", EvalMode::Pair), ("cluster", EvalMode::Cluster)] {
        let curve = sweep(exec(cfg), &cands, mode, &rows, &cfg.tau_grid)?;
        for p in &curve {
            let r = &p.prf;
            writeln!(w, "{name},{},{},{},{},{},{},{}", p.tau, r.precision, r.recall, r.f1, r.true_pos, r.false_pos, r.false_neg)?;
        }
        best.insert(name.into(), serde_json::to_value(vmeme::memedetect::best_f1(&curve))?);
    }
    w.flush()?;
    fs::write(dir.join("best.json"), serde_json::to_string_pretty(&best)? + "\n")?;
    Ok(())
}

// ---- graph ----

#[derive(Serialize)]
struct GraphStats {
    memes: usize,
    meme_videos: usize,
    video_nodes: usize,
    video_edges: usize,
    author_nodes: usize,
    author_edges: usize,
    volume_gini: Option<f64>,
    volume_zipf: Option<PowerLawFit>,
    productivity_gini: Option<f64>,
}

fn build_graph(ws: &Workspace, cfg: &Config, dir: &Path) -> Result<()> {
    let corpus = load_corpus(ws)?;
    let clusters = load_clusters(ws, &corpus)?;
    let vg = build_video_graph(&clusters, &corpus, cfg.eta);
    let ag = build_author_graph(&vg, &corpus, cfg.weight_variant);
    write_video_edges(create(&dir.join("video_edges.csv"))?, &vg, &corpus)?;
    write_author_edges(create(&dir.join("author_edges.csv"))?, &ag, &corpus)?;
    let infl = influence_indices(&clusters, &corpus);
    vmeme::memegraph::write_influence(create(&dir.join("influence.csv"))?, &infl, &corpus)?;
    let orig = originality_index(&clusters, &corpus);
    vmeme::memegraph::write_originality(create(&dir.join("originality.csv"))?, &orig, &corpus)?;

    let cent = centralities(exec(cfg), &ag.adjacency());
    let mut w = create(&dir.join("authors.csv"))?;
    writeln!(w, "author_id,productivity,chi_hat,chi_bar,degree,closeness,betweenness,originality")?;
    let orig_of: BTreeMap<usize, f64> = orig.iter().map(|o| (o.author, o.index)).collect();
    for a in &infl.authors {
        let c = ag.node_of(a.author).map(|n| cent[n]).unwrap_or_default();
        let o = orig_of.get(&a.author).map(|v| v.to_string()).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            corpus.authors()[a.author].author_id,
            a.productivity,
            a.chi_hat,
            a.chi_bar,
            c.degree,
            c.closeness,
            c.betweenness,
            o
        )?;
    }
    w.flush()?;

    let volumes: Vec<f64> = clusters.iter().map(|c| c.videos.len() as f64).collect();
    let productivity: Vec<f64> = corpus.authors().iter().map(|a| a.productivity as f64).collect();
    let meme_videos: std::collections::BTreeSet<usize> = clusters.iter().flat_map(|c| c.videos.iter().copied()).collect();
    let stats = GraphStats {
        memes: clusters.len(),
        meme_videos: meme_videos.len(),
        video_nodes: vg.len(),
        video_edges: vg.edges.len(),
        author_nodes: ag.len(),
        author_edges: ag.edges.len(),
        volume_gini: gini(&volumes).ok(),
        volume_zipf: zipf_fit(&volumes).ok(),
        productivity_gini: gini(&productivity).ok(),
    };
    fs::write(dir.join("stats.json"), serde_json::to_string_pretty(&stats)? + "\n")?;
    Ok(())
}

// ---- topics ----

pub struct TopicsArtifacts {
    pub model: TopicModel,
    pub vocab: JointVocabulary,
    pub docs: Vec<BagOfWords>,
    pub corpus: Corpus,
    pub clusters: Vec<MemeCluster>,
}

fn tokenize(corpus: &Corpus) -> TokenizedCorpus {
    TokenizedCorpus::new(corpus, &Normalizer::default())
}

fn build_topics(ws: &Workspace, cfg: &Config, dir: &Path) -> Result<()> {
    let corpus = load_corpus(ws)?;
    let clusters = load_clusters(ws, &corpus)?;
    let tokens = tokenize(&corpus);
    let text = build_vocabulary(&tokens, cfg.vocab_size, None)?;
    let vocab = JointVocabulary::build(&text, &clusters, cfg.meme_terms)?;
    let docs = vocab.documents(&corpus, &tokens, &clusters);
    let (model, report) = fit_lda(exec(cfg), &docs, vocab.len(), &cfg.lda())?;
    log::info!("topics: k={} over {} terms, {} EM iterations", model.k, vocab.len(), report.bounds.len());
    save_model(dir, &model, &vocab)?;
    fs::write(dir.join("text_vocab.tsv"), text.to_tsv())?;
    fs::write(dir.join("fit.json"), serde_json::to_string_pretty(&report)? + "\n")?;
    Ok(())
}

pub fn load_topics(ws: &Workspace) -> Result<TopicsArtifacts> {
    ws.require(Stage::Topics)?;
    let corpus = load_corpus(ws)?;
    let clusters = load_clusters(ws, &corpus)?;
    let (model, vocab, _) = load_model(&ws.dir(Stage::Topics))?;
    let docs = vocab.documents(&corpus, &tokenize(&corpus), &clusters);
    Ok(TopicsArtifacts {
        model,
        vocab,
        docs,
        corpus,
        clusters,
    })
}

// ---- predict ----

fn build_predict(ws: &Workspace, cfg: &Config, dir: &Path) -> Result<()> {
    let t = load_topics(ws)?;
    let inputs = FeatureInputs {
        corpus: &t.corpus,
        clusters: &t.clusters,
        docs: &t.docs,
        vocab: &t.vocab,
        model: Some(&t.model),
    };
    let ex = exec(cfg);
    let table = assemble_features(ex, &inputs, &cfg.assemble())?;
    log::info!("predict: {} memes, {} pruned, {} columns", table.rows.len(), table.pruned.len(), table.schema.width());
    save_feature_table(dir, "features", &table)?;
    let params = cfg.eval();
    let mut reports = Vec::new();
    for target in &cfg.targets {
        let target: Target = target.parse()?;
        for set in &cfg.feature_sets {
            let set: FeatureSet = set.parse()?;
            reports.push(evaluate(ex, &table, &set, target, &params).with_context(|| format!("evaluating {} on {}", set.name, target.name()))?);
        }
    }
    fs::write(dir.join("report.json"), serde_json::to_string_pretty(&reports)? + "\n")?;
    let mut w = create(&dir.join("report.csv"))?;
    write_reports_csv(&mut w, &reports)?;
    w.flush()?;
    Ok(())
}
