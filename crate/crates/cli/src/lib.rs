//! Pipeline orchestration, workspace bookkeeping and reports for the
//! `vmeme` command-line tool.

pub mod config;
pub mod reports;
pub mod stages;
pub mod svg;
pub mod workspace;

use std::path::Path;

use anyhow::{anyhow, Result};
use vmeme::memegraph::influence_indices;
use vmeme::synth::images::{generate_image_corpus, write_image_corpus, ImageCorpusSpec};
use vmeme::topics::{cm2_score, modality_thetas, Cm2Query, Modality};

pub use config::Config;
pub use stages::{run_pipeline, run_stage, Outcome};
pub use workspace::{Stage, Workspace, WORKSPACE_ENV};

/// Directory inside the workspace that `demo` writes its corpus to.
pub const DEMO_DIR: &str = "demo-input";

/// Writes the synthetic 500-keyframe corpus with planted duplicate groups
/// and points the workspace config at it. Returns the manifest path.
pub fn write_demo(ws: &Workspace, cfg: &Config) -> Result<std::path::PathBuf> {
    let dir = ws.root().join(DEMO_DIR);
    let corpus = generate_image_corpus(&ImageCorpusSpec::default(), cfg.seed)?;
    write_image_corpus(&dir, &corpus)?;
    let mut saved = Config::load_or_default(&ws.config_path())?;
    saved.manifest = Some(Path::new(DEMO_DIR).join("manifest.jsonl"));
    saved.labels = Some(Path::new(DEMO_DIR).join("labels.jsonl"));
    std::fs::write(ws.config_path(), saved.to_toml()?)?;
    Ok(dir.join("manifest.jsonl"))
}

/// Words most associated with a meme through the topic space.
pub fn annotate(ws: &Workspace, cfg: &Config, meme_id: u32, top: usize) -> Result<Vec<(String, f64)>> {
    let t = stages::load_topics(ws)?;
    let term = t
        .vocab
        .meme_index(meme_id)
        .ok_or_else(|| anyhow!("meme {meme_id} is not in the topic vocabulary"))?;
    let thetas = modality_thetas(stages::exec(cfg), &t.model, &t.vocab, &t.docs, Modality::Meme);
    let q = Cm2Query {
        terms: vec![term],
        candidate: Modality::Text,
        sigma: None,
    };
    Ok(cm2_score(&t.model, &t.vocab, &t.docs, &thetas, &q)?
        .into_iter()
        .take(top)
        .map(|s| (t.vocab.label(s.term), s.score))
        .collect())
}

/// Memes most associated with a word through the topic space.
pub fn illustrate(ws: &Workspace, cfg: &Config, word: &str, top: usize) -> Result<Vec<(u32, f64)>> {
    let t = stages::load_topics(ws)?;
    let term = t
        .vocab
        .text_index(&word.to_lowercase())
        .ok_or_else(|| anyhow!("word {word:?} is not in the topic vocabulary"))?;
    let thetas = modality_thetas(stages::exec(cfg), &t.model, &t.vocab, &t.docs, Modality::Text);
    let q = Cm2Query {
        terms: vec![term],
        candidate: Modality::Meme,
        sigma: None,
    };
    let memes = t.vocab.meme_terms();
    let offset = t.vocab.range(Modality::Meme).start;
    Ok(cm2_score(&t.model, &t.vocab, &t.docs, &thetas, &q)?
        .into_iter()
        .take(top)
        .map(|s| (memes[s.term as usize - offset], s.score))
        .collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct InfluenceRow {
    pub author_id: String,
    pub productivity: usize,
    pub chi_hat: f64,
    pub chi_bar: f64,
}

/// Authors ranked by total influence index.
pub fn top_influencers(ws: &Workspace, top: usize) -> Result<Vec<InfluenceRow>> {
    let corpus = stages::load_corpus(ws)?;
    let clusters = stages::load_clusters(ws, &corpus)?;
    let mut rows: Vec<InfluenceRow> = influence_indices(&clusters, &corpus)
        .authors
        .into_iter()
        .filter(|a| a.productivity > 0)
        .map(|a| InfluenceRow {
            author_id: corpus.authors()[a.author].author_id.clone(),
            productivity: a.productivity,
            chi_hat: a.chi_hat,
            chi_bar: a.chi_bar,
        })
        .collect();
    rows.sort_by(|a, b| b.chi_hat.total_cmp(&a.chi_hat).then_with(|| a.author_id.cmp(&b.author_id)));
    rows.truncate(top);
    Ok(rows)
}
