use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::lda::TopicModel;
use super::vocab::JointVocabulary;
use crate::matrix::Matrix;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub k: usize,
    pub alpha: f64,
    pub vocab_size: usize,
    pub vocab_sha256: String,
    pub documents: usize,
}

/// Writes `phi.bin`, `theta.bin`, `meta.json` and `vocab.json` into `dir`.
pub fn save_model(dir: &Path, model: &TopicModel, vocab: &JointVocabulary) -> Result<()> {
    if model.vocab_size() != vocab.len() {
        return Err(Error::DimensionMismatch {
            expected: vocab.len(),
            found: model.vocab_size(),
        });
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    Matrix::from_f64_rows(&model.phi)?.save(&dir.join("phi.bin"))?;
    if model.theta.is_empty() {
        Matrix::zeros(0, model.k).save(&dir.join("theta.bin"))?;
    } else {
        Matrix::from_f64_rows(&model.theta)?.save(&dir.join("theta.bin"))?;
    }
    let meta = ModelMeta {
        k: model.k,
        alpha: model.alpha,
        vocab_size: vocab.len(),
        vocab_sha256: vocab.sha256(),
        documents: model.theta.len(),
    };
    let write = |name: &str, body: String| {
        let p = dir.join(name);
        fs::write(&p, body + "\n").map_err(|e| Error::io(&p, e))
    };
    write("meta.json", serde_json::to_string_pretty(&meta)?)?;
    write("vocab.json", serde_json::to_string(vocab)?)?;
    Ok(())
}

fn rows_on_simplex(m: &Matrix) -> Vec<Vec<f64>> {
    m.iter_rows()
        .map(|r| {
            let v: Vec<f64> = r.iter().map(|&x| x as f64).collect();
            let s: f64 = v.iter().sum();
            if s > 0.0 {
                v.into_iter().map(|x| x / s).collect()
            } else {
                v
            }
        })
        .collect()
}

pub fn load_model(dir: &Path) -> Result<(TopicModel, JointVocabulary, ModelMeta)> {
    let read = |name: &str| {
        let p = dir.join(name);
        fs::read_to_string(&p).map_err(|e| Error::io(&p, e))
    };
    let meta: ModelMeta = serde_json::from_str(&read("meta.json")?)?;
    let vocab = JointVocabulary::from_json(&read("vocab.json")?)?;
    if vocab.sha256() != meta.vocab_sha256 {
        return Err(Error::Conflict("topic model vocabulary hash does not match vocab.json".into()));
    }
    let phi = Matrix::load(&dir.join("phi.bin"))?;
    let theta = Matrix::load(&dir.join("theta.bin"))?;
    if phi.rows() != meta.k || phi.cols() != vocab.len() {
        return Err(Error::DimensionMismatch {
            expected: meta.k * vocab.len(),
            found: phi.rows() * phi.cols(),
        });
    }
    if theta.rows() > 0 && theta.cols() != meta.k {
        return Err(Error::DimensionMismatch {
            expected: meta.k,
            found: theta.cols(),
        });
    }
    let model = TopicModel {
        k: meta.k,
        alpha: meta.alpha,
        phi: rows_on_simplex(&phi),
        theta: rows_on_simplex(&theta),
    };
    Ok((model, vocab, meta))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let vocab = JointVocabulary::new(vec!["a".into(), "b".into()], vec![3]).unwrap();
        let model = TopicModel {
            k: 2,
            alpha: 0.3,
            phi: vec![vec![0.5, 0.25, 0.25], vec![0.1, 0.1, 0.8]],
            theta: vec![vec![0.6, 0.4]],
        };
        save_model(dir.path(), &model, &vocab).unwrap();
        let (m, v, meta) = load_model(dir.path()).unwrap();
        assert_eq!(v, vocab);
        assert_eq!(meta.k, 2);
        for (a, b) in m.phi.iter().flatten().zip(model.phi.iter().flatten()) {
            assert!((a - b).abs() < 1e-7);
        }
        for row in &m.phi {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn tampered_vocabulary_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        let vocab = JointVocabulary::new(vec!["a".into()], vec![]).unwrap();
        let model = TopicModel {
            k: 1,
            alpha: 1.0,
            phi: vec![vec![1.0]],
            theta: vec![],
        };
        save_model(dir.path(), &model, &vocab).unwrap();
        fs::write(dir.path().join("vocab.json"), r#"{"text":["z"],"memes":[]}"#).unwrap();
        assert!(matches!(load_model(dir.path()), Err(Error::Conflict(_))));
    }
}
