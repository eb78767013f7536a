//! Event corpus ingestion and text vocabulary.

mod text;
mod vocab;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDate, NaiveDateTime, Utc};
use serde::{Deserialize, Serialize};

pub use text::{normalize_text, Normalizer};
pub use vocab::{build_vocabulary, BagOfWords, DocFreqTable, TextVocabulary, TokenizedCorpus};

use crate::{Error, Result, SECONDS_PER_DAY};

/// One decoded frame referenced by the manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameEntry {
    /// Shot index when the manifest is already segmented into shots.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shot: Option<u32>,
    pub path: String,
    pub t_offset_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VideoDoc {
    pub video_id: String,
    pub author_id: String,
    /// Upload time, UTC seconds since the Unix epoch.
    #[serde(with = "iso_time")]
    pub upload_time: i64,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub view_count: u64,
    #[serde(default)]
    pub frames: Vec<FrameEntry>,
}

impl VideoDoc {
    pub fn is_frameless(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn day(&self) -> i64 {
        day_of(self.upload_time)
    }

    pub fn text(&self) -> String {
        format!("{} {}", self.title, self.description)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthorRecord {
    pub author_id: String,
    pub video_ids: BTreeSet<String>,
    pub productivity: usize,
}

/// A manifest line that was skipped during ingestion.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reject {
    pub line: usize,
    pub reason: String,
}

#[derive(Clone, Debug, Default)]
pub struct IngestOptions {
    /// Directory that relative frame paths are resolved against. Defaults to
    /// the manifest's parent directory.
    pub frame_root: Option<PathBuf>,
}

/// Immutable collection of videos and their authors.
///
/// Videos keep manifest order; authors are ordered by id.
#[derive(Clone, Debug, PartialEq)]
pub struct Corpus {
    videos: Vec<VideoDoc>,
    video_index: HashMap<String, usize>,
    authors: Vec<AuthorRecord>,
    author_index: HashMap<String, usize>,
    video_author: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct Ingested {
    pub corpus: Corpus,
    pub rejects: Vec<Reject>,
}

impl Corpus {
    pub fn from_videos(videos: Vec<VideoDoc>) -> Result<Self> {
        let mut video_index = HashMap::with_capacity(videos.len());
        let mut by_author: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for (i, v) in videos.iter().enumerate() {
            if video_index.insert(v.video_id.clone(), i).is_some() {
                return Err(Error::Conflict(format!("duplicate video_id {:?}", v.video_id)));
            }
            by_author
                .entry(v.author_id.clone())
                .or_default()
                .insert(v.video_id.clone());
        }
        let authors: Vec<AuthorRecord> = by_author
            .into_iter()
            .map(|(author_id, video_ids)| AuthorRecord {
                productivity: video_ids.len(),
                author_id,
                video_ids,
            })
            .collect();
        let author_index: HashMap<String, usize> = authors
            .iter()
            .enumerate()
            .map(|(i, a)| (a.author_id.clone(), i))
            .collect();
        let video_author = videos.iter().map(|v| author_index[&v.author_id]).collect();
        Ok(Corpus {
            videos,
            video_index,
            authors,
            author_index,
            video_author,
        })
    }

    pub fn videos(&self) -> &[VideoDoc] {
        &self.videos
    }

    pub fn video(&self, idx: usize) -> &VideoDoc {
        &self.videos[idx]
    }

    pub fn video_index(&self, video_id: &str) -> Option<usize> {
        self.video_index.get(video_id).copied()
    }

    pub fn authors(&self) -> &[AuthorRecord] {
        &self.authors
    }

    pub fn author_index(&self, author_id: &str) -> Option<usize> {
        self.author_index.get(author_id).copied()
    }

    /// Author index of the video at `video_idx`.
    pub fn author_of(&self, video_idx: usize) -> usize {
        self.video_author[video_idx]
    }

    pub fn len(&self) -> usize {
        self.videos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.videos.is_empty()
    }

    /// Video indices uploaded by each author, in corpus order.
    pub fn videos_by_author(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.authors.len()];
        for (i, &a) in self.video_author.iter().enumerate() {
            out[a].push(i);
        }
        out
    }

    /// Writes `videos.jsonl` and `authors.jsonl` into `dir`.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_jsonl(&dir.join("videos.jsonl"), &self.videos)?;
        write_jsonl(&dir.join("authors.jsonl"), &self.authors)
    }

    pub fn read_dir(dir: &Path) -> Result<Self> {
        let path = dir.join("videos.jsonl");
        let file = File::open(&path).map_err(|e| Error::io(&path, e))?;
        let mut videos = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(&path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            videos.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
                line: i + 1,
                reason: e.to_string(),
            })?);
        }
        Corpus::from_videos(videos)
    }
}

pub fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for r in rows {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Deserialize)]
struct ManifestRecord {
    video_id: String,
    author_id: String,
    upload_time: String,
    #[serde(default)]
    title: String,
    #[serde(default)]
    description: String,
    #[serde(default)]
    view_count: u64,
    #[serde(default)]
    frames: Vec<FrameEntry>,
}

/// Reads a JSON Lines manifest.
///
/// Malformed JSON or a missing required field aborts with the offending
/// line number; a duplicate `video_id` aborts with a conflict. Records with
/// an unparseable timestamp or inconsistent frame list are skipped and
/// listed in the returned rejects.
pub fn ingest_manifest(path: &Path, options: &IngestOptions) -> Result<Ingested> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let root = options
        .frame_root
        .clone()
        .or_else(|| path.parent().map(Path::to_path_buf))
        .unwrap_or_default();
    ingest_reader(BufReader::new(file), &root)
}

pub fn ingest_reader<R: BufRead>(reader: R, frame_root: &Path) -> Result<Ingested> {
    let mut videos = Vec::new();
    let mut rejects = Vec::new();
    let mut seen = HashMap::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::Parse {
            line: lineno,
            reason: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: ManifestRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: lineno,
            reason: e.to_string(),
        })?;
        if let Some(prev) = seen.insert(rec.video_id.clone(), lineno) {
            return Err(Error::Conflict(format!(
                "video_id {:?} on line {lineno} already defined on line {prev}",
                rec.video_id
            )));
        }
        let upload_time = match parse_timestamp(&rec.upload_time) {
            Some(t) => t,
            None => {
                rejects.push(Reject {
                    line: lineno,
                    reason: format!("unparseable upload_time {:?}", rec.upload_time),
                });
                continue;
            }
        };
        let frames = match normalize_frames(rec.frames, frame_root) {
            Ok(f) => f,
            Err(reason) => {
                rejects.push(Reject { line: lineno, reason });
                continue;
            }
        };
        videos.push(VideoDoc {
            video_id: rec.video_id,
            author_id: rec.author_id,
            upload_time,
            title: rec.title,
            description: rec.description,
            view_count: rec.view_count,
            frames,
        });
    }
    Ok(Ingested {
        corpus: Corpus::from_videos(videos)?,
        rejects,
    })
}

fn normalize_frames(mut frames: Vec<FrameEntry>, root: &Path) -> std::result::Result<Vec<FrameEntry>, String> {
    if frames.iter().any(|f| !f.t_offset_s.is_finite()) {
        return Err("non-finite frame t_offset_s".into());
    }
    frames.sort_by(|a, b| a.t_offset_s.total_cmp(&b.t_offset_s));
    let labelled = frames.iter().filter(|f| f.shot.is_some()).count();
    if labelled != 0 && labelled != frames.len() {
        return Err("either every frame or no frame may carry a shot index".into());
    }
    if frames.windows(2).any(|w| w[1].shot < w[0].shot) {
        return Err("shot indices must not decrease with t_offset_s".into());
    }
    for f in &mut frames {
        let p = Path::new(&f.path);
        if p.is_relative() && !root.as_os_str().is_empty() {
            f.path = root.join(p).to_string_lossy().into_owned();
        }
    }
    Ok(frames)
}

/// Parses RFC 3339 / ISO-8601 timestamps into UTC seconds. Naive
/// date-times and bare dates are taken as UTC.
pub fn parse_timestamp(s: &str) -> Option<i64> {
    let s = s.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(t.timestamp());
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M:%S%.f"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(t.and_utc().timestamp());
        }
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .ok()
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .map(|t| t.and_utc().timestamp())
}

pub fn format_timestamp(t: i64) -> String {
    DateTime::<Utc>::from_timestamp(t, 0)
        .map(|d| d.format("%Y-%m-%dT%H:%M:%SZ").to_string())
        .unwrap_or_else(|| t.to_string())
}

/// Day index (floor of UTC seconds / 86400).
pub fn day_of(t: i64) -> i64 {
    t.div_euclid(SECONDS_PER_DAY as i64)
}

pub fn days_between(earlier: i64, later: i64) -> f64 {
    (later - earlier) as f64 / SECONDS_PER_DAY
}

mod iso_time {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(t: &i64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::format_timestamp(*t))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<i64, D::Error> {
        let raw = String::deserialize(d)?;
        super::parse_timestamp(&raw)
            .ok_or_else(|| serde::de::Error::custom(format!("bad timestamp {raw:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: &str, author: &str, time: &str) -> String {
        format!(
            r#"{{"video_id":"{id}","author_id":"{author}","upload_time":"{time}","title":"t","description":"d","view_count":3,"frames":[{{"shot":0,"path":"f/{id}.png","t_offset_s":0.0}}]}}"#
        )
    }

    fn ingest(lines: &[String]) -> Result<Ingested> {
        ingest_reader(lines.join("\n").as_bytes(), Path::new(""))
    }

    #[test]
    fn counts_videos_and_authors() {
        let got = ingest(&[
            rec("v1", "a", "2009-06-13T10:00:00Z"),
            rec("v2", "b", "2009-06-14T10:00:00Z"),
            rec("v3", "a", "2009-06-15"),
        ])
        .unwrap();
        assert_eq!(got.corpus.len(), 3);
        assert_eq!(got.corpus.authors().len(), 2);
        assert_eq!(got.corpus.authors()[0].productivity, 2);
        assert!(got.rejects.is_empty());
    }

    #[test]
    fn bad_timestamp_goes_to_rejects() {
        let got = ingest(&[rec("v1", "a", "not-a-date"), rec("v2", "b", "2009-06-14T10:00:00Z")]).unwrap();
        assert_eq!(got.corpus.len(), 1);
        assert_eq!(got.rejects, vec![Reject { line: 1, reason: "unparseable upload_time \"not-a-date\"".into() }]);
    }

    #[test]
    fn duplicate_video_is_a_conflict() {
        let err = ingest(&[rec("v1", "a", "2009-06-13"), rec("v1", "b", "2009-06-14")]).unwrap_err();
        assert!(matches!(err, Error::Conflict(_)));
    }

    #[test]
    fn malformed_line_names_line_number() {
        let err = ingest(&[rec("v1", "a", "2009-06-13"), "{not json".into()]).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let missing = r#"{"video_id":"v9","upload_time":"2009-06-13"}"#.to_string();
        assert!(matches!(ingest(&[missing]).unwrap_err(), Error::Parse { line: 1, .. }));
    }

    #[test]
    fn frameless_records_are_kept() {
        let line = r#"{"video_id":"v1","author_id":"a","upload_time":"2009-06-13T00:00:00Z"}"#.to_string();
        let got = ingest(&[line]).unwrap();
        assert!(got.corpus.video(0).is_frameless());
    }

    #[test]
    fn timestamps_and_days() {
        assert_eq!(parse_timestamp("1970-01-02T00:00:00Z"), Some(86_400));
        assert_eq!(parse_timestamp("1970-01-01T01:00:00+01:00"), Some(0));
        assert_eq!(parse_timestamp("2009-13-01"), None);
        assert_eq!(day_of(86_399), 0);
        assert_eq!(day_of(-1), -1);
        assert_eq!(format_timestamp(86_400), "1970-01-02T00:00:00Z");
    }

    #[test]
    fn serialization_is_idempotent() {
        let lines = [rec("v1", "a", "2009-06-13T10:00:00Z"), rec("v2", "b", "2009-06-14T10:00:00Z")];
        let dir = tempfile::tempdir().unwrap();
        let c1 = ingest(&lines).unwrap().corpus;
        let c2 = ingest(&lines).unwrap().corpus;
        c1.write_dir(&dir.path().join("a")).unwrap();
        c2.write_dir(&dir.path().join("b")).unwrap();
        for f in ["videos.jsonl", "authors.jsonl"] {
            let a = std::fs::read(dir.path().join("a").join(f)).unwrap();
            let b = std::fs::read(dir.path().join("b").join(f)).unwrap();
            assert_eq!(a, b);
        }
        let back = Corpus::read_dir(&dir.path().join("a")).unwrap();
        assert_eq!(back, c1);
    }
}
