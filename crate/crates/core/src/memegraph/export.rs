//! CSV exports of graphs and per-node tables.

use std::io::Write;

use super::graph::{AuthorGraph, VideoGraph};
use super::influence::InfluenceRecord;
use super::originality::Originality;
use crate::corpus::Corpus;

pub fn write_video_edges<W: Write>(mut w: W, g: &VideoGraph, corpus: &Corpus) -> std::io::Result<()> {
    writeln!(w, "src,dst,nu,omega_star,omega_prime,dt_days")?;
    for e in &g.edges {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            corpus.video(g.videos[e.src]).video_id,
            corpus.video(g.videos[e.dst]).video_id,
            e.nu,
            e.omega_star,
            e.omega_prime,
            e.dt_days
        )?;
    }
    Ok(())
}

pub fn write_author_edges<W: Write>(mut w: W, g: &AuthorGraph, corpus: &Corpus) -> std::io::Result<()> {
    writeln!(w, "a,b,theta")?;
    for e in &g.edges {
        writeln!(
            w,
            "{},{},{}",
            corpus.authors()[g.authors[e.a]].author_id,
            corpus.authors()[g.authors[e.b]].author_id,
            e.theta
        )?;
    }
    Ok(())
}

/// One row per video with a non-empty meme subgraph, then per author.
pub fn write_influence<W: Write>(mut w: W, rec: &InfluenceRecord, corpus: &Corpus) -> std::io::Result<()> {
    writeln!(w, "kind,id,meme_id,zeta_in,zeta_out,chi,chi_hat,chi_bar,productivity")?;
    for z in &rec.zetas {
        writeln!(
            w,
            "zeta,{},{},{},{},,,,",
            corpus.video(z.video).video_id,
            z.meme_id,
            z.zeta_in,
            z.zeta_out
        )?;
    }
    for (v, &chi) in rec.video_chi.iter().enumerate() {
        if chi > 0.0 {
            writeln!(w, "video,{},,,,{},,,", corpus.video(v).video_id, chi)?;
        }
    }
    for a in &rec.authors {
        writeln!(
            w,
            "author,{},,,,,{},{},{}",
            corpus.authors()[a.author].author_id,
            a.chi_hat,
            a.chi_bar,
            a.productivity
        )?;
    }
    Ok(())
}

pub fn write_originality<W: Write>(mut w: W, rows: &[Originality], corpus: &Corpus) -> std::io::Result<()> {
    writeln!(w, "author,originated,reposted,index")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{}",
            corpus.authors()[r.author].author_id,
            r.originated,
            r.reposted,
            r.index
        )?;
    }
    Ok(())
}
