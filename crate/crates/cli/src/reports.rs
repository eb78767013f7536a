//! The analyst report bundle: CSV tables with header rows and SVG charts
//! rendered from the same rows.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use vmeme::corpus::{format_timestamp, Corpus};
use vmeme::memedetect::MemeCluster;
use vmeme::memegraph::{influence_indices, zipf_fit};
use vmeme::SECONDS_PER_DAY;

use crate::config::Config;
use crate::stages::{load_clusters, load_corpus};
use crate::svg::{Chart, Mark, Series};
use crate::workspace::{Stage, Workspace};

/// Buckets in the remix-by-view-rank table.
pub const RANK_BUCKETS: usize = 10;
/// Memes drawn in the timeline chart.
const TIMELINE_CHART_MEMES: usize = 8;

pub const TIMELINE_HEADER: &str = "meme_id,day,videos";
pub const REMIX_HEADER: &str = "bucket,first_rank,last_rank,videos,meme_videos,fraction";
pub const ZIPF_HEADER: &str = "rank,volume";
pub const INFLUENCE_HEADER: &str = "author_id,productivity,chi_hat,chi_bar";

fn day_label(day: i64) -> String {
    format_timestamp(day * SECONDS_PER_DAY as i64)[..10].to_string()
}

/// Videos per (meme, UTC day), only days with at least one video.
pub fn timeline_rows(clusters: &[MemeCluster], corpus: &Corpus) -> Vec<(u32, i64, usize)> {
    let mut out = Vec::new();
    for c in clusters {
        let mut per_day: BTreeMap<i64, usize> = BTreeMap::new();
        for &v in &c.videos {
            *per_day.entry(corpus.video(v).day()).or_default() += 1;
        }
        out.extend(per_day.into_iter().map(|(d, n)| (c.meme_id, d, n)));
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct RemixRow {
    pub bucket: String,
    pub first_rank: usize,
    pub last_rank: usize,
    pub videos: usize,
    pub meme_videos: usize,
}

impl RemixRow {
    pub fn fraction(&self) -> f64 {
        if self.videos == 0 {
            0.0
        } else {
            self.meme_videos as f64 / self.videos as f64
        }
    }
}

/// Share of videos containing a meme, by view-count rank bucket, then over
/// the whole corpus. Rank 1 is the most viewed; ties break by video id.
pub fn remix_rows(clusters: &[MemeCluster], corpus: &Corpus) -> Vec<RemixRow> {
    let with_meme: BTreeSet<usize> = clusters.iter().flat_map(|c| c.videos.iter().copied()).collect();
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    order.sort_by(|&a, &b| {
        let (va, vb) = (corpus.video(a), corpus.video(b));
        vb.view_count.cmp(&va.view_count).then_with(|| va.video_id.cmp(&vb.video_id))
    });
    let n = order.len();
    let mut rows = Vec::new();
    for b in 0..RANK_BUCKETS.min(n) {
        let (lo, hi) = (b * n / RANK_BUCKETS.min(n), (b + 1) * n / RANK_BUCKETS.min(n));
        rows.push(RemixRow {
            bucket: (b + 1).to_string(),
            first_rank: lo + 1,
            last_rank: hi,
            videos: hi - lo,
            meme_videos: order[lo..hi].iter().filter(|v| with_meme.contains(v)).count(),
        });
    }
    rows.push(RemixRow {
        bucket: "all".into(),
        first_rank: 1.min(n),
        last_rank: n,
        videos: n,
        meme_videos: with_meme.len(),
    });
    rows
}

fn write(path: &Path, body: &str) -> Result<()> {
    fs::write(path, body).with_context(|| format!("writing {}", path.display()))
}

fn csv(header: &str, rows: impl IntoIterator<Item = String>) -> String {
    let mut s = String::from(header);
    s.push('\n');
    for r in rows {
        s.push_str(&r);
        s.push('\n');
    }
    s
}

/// Writes the bundle into `dir`. Needs ingest, detect and graph; adds the
/// detection curve and prediction table when those stages are built.
pub fn emit(ws: &Workspace, _cfg: &Config, dir: &Path) -> Result<()> {
    ws.require(Stage::Graph)?;
    let corpus = load_corpus(ws)?;
    let clusters = load_clusters(ws, &corpus)?;

    let timeline = timeline_rows(&clusters, &corpus);
    write(
        &dir.join("timeline.csv"),
        &csv(TIMELINE_HEADER, timeline.iter().map(|(m, d, n)| format!("{m},{},{n}", day_label(*d)))),
    )?;
    let mut top: Vec<&MemeCluster> = clusters.iter().collect();
    top.sort_by(|a, b| b.videos.len().cmp(&a.videos.len()).then(a.meme_id.cmp(&b.meme_id)));
    let chart = Chart {
        title: "Meme volume per day".into(),
        x_label: "day index (UTC)".into(),
        y_label: "videos".into(),
        series: top
            .iter()
            .take(TIMELINE_CHART_MEMES)
            .map(|c| Series {
                name: format!("meme {}", c.meme_id),
                points: timeline
                    .iter()
                    .filter(|r| r.0 == c.meme_id)
                    .map(|r| (r.1 as f64, r.2 as f64))
                    .collect(),
                mark: Mark::Line,
            })
            .collect(),
        ..Default::default()
    };
    write(&dir.join("timeline.svg"), &chart.render())?;

    let remix = remix_rows(&clusters, &corpus);
    write(
        &dir.join("remix.csv"),
        &csv(
            REMIX_HEADER,
            remix.iter().map(|r| {
                format!("{},{},{},{},{},{}", r.bucket, r.first_rank, r.last_rank, r.videos, r.meme_videos, r.fraction())
            }),
        ),
    )?;

    let mut volumes: Vec<usize> = clusters.iter().map(|c| c.videos.len()).collect();
    volumes.sort_unstable_by(|a, b| b.cmp(a));
    write(
        &dir.join("zipf.csv"),
        &csv(ZIPF_HEADER, volumes.iter().enumerate().map(|(i, v)| format!("{},{v}", i + 1))),
    )?;
    let fit = zipf_fit(&volumes.iter().map(|&v| v as f64).collect::<Vec<_>>()).ok();
    let mut zipf = Chart {
        title: match &fit {
            Some(f) => format!("Meme volume by rank (exponent {:.3})", f.exponent),
            None => "Meme volume by rank".into(),
        },
        x_label: "rank".into(),
        y_label: "videos".into(),
        log_x: true,
        log_y: true,
        series: vec![Series {
            name: "memes".into(),
            points: volumes.iter().enumerate().map(|(i, &v)| ((i + 1) as f64, v as f64)).collect(),
            mark: Mark::Points,
        }],
    };
    if let Some(f) = &fit {
        let n = volumes.len() as f64;
        zipf.series.push(Series {
            name: "fit".into(),
            points: vec![(1.0, f.log_scale.exp()), (n, f.log_scale.exp() * n.powf(-f.exponent))],
            mark: Mark::Line,
        });
    }
    write(&dir.join("zipf.svg"), &zipf.render())?;

    let infl = influence_indices(&clusters, &corpus);
    let authors: Vec<_> = infl.authors.iter().filter(|a| a.productivity > 0).collect();
    write(
        &dir.join("influence.csv"),
        &csv(
            INFLUENCE_HEADER,
            authors.iter().map(|a| {
                format!("{},{},{},{}", corpus.authors()[a.author].author_id, a.productivity, a.chi_hat, a.chi_bar)
            }),
        ),
    )?;
    let scatter = Chart {
        title: "Author influence against productivity".into(),
        x_label: "videos posted".into(),
        y_label: "influence index".into(),
        log_x: true,
        log_y: true,
        series: vec![
            Series {
                name: "total".into(),
                points: authors.iter().map(|a| (a.productivity as f64, a.chi_hat)).collect(),
                mark: Mark::Points,
            },
            Series {
                name: "per video".into(),
                points: authors.iter().map(|a| (a.productivity as f64, a.chi_bar)).collect(),
                mark: Mark::Points,
            },
        ],
    };
    write(&dir.join("influence.svg"), &scatter.render())?;

    if ws.manifest(Stage::EvalDetect)?.is_some() {
        let src = ws.file(Stage::EvalDetect, "pr_curve.csv");
        let raw = fs::read_to_string(&src).with_context(|| format!("reading {}", src.display()))?;
        write(&dir.join("pr_curve.csv"), &raw)?;
        let mut series: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
        for line in raw.lines().skip(1) {
            let f: Vec<&str> = line.split(',').collect();
            if let (Some(mode), Some(p), Some(r)) = (f.first(), f.get(2), f.get(3)) {
                series.entry(mode.to_string()).or_default().push((r.parse()?, p.parse()?));
            }
        }
        let chart = Chart {
            title: "Detection precision against recall over tau".into(),
            x_label: "recall".into(),
            y_label: "precision".into(),
            series: series
                .into_iter()
                .map(|(name, points)| Series {
                    name,
                    points,
                    mark: Mark::Line,
                })
                .collect(),
            ..Default::default()
        };
        write(&dir.join("pr_curve.svg"), &chart.render())?;
    }
    if ws.manifest(Stage::Predict)?.is_some() {
        let src = ws.file(Stage::Predict, "report.csv");
        fs::copy(&src, dir.join("prediction.csv")).with_context(|| format!("copying {}", src.display()))?;
    }
    let mut listing = fs::File::create(dir.join("README.txt"))?;
    writeln!(
        listing,
        "timeline.csv   {TIMELINE_HEADER}\nremix.csv      {REMIX_HEADER}\nzipf.csv       {ZIPF_HEADER}\ninfluence.csv  {INFLUENCE_HEADER}"
    )?;
    Ok(())
}
