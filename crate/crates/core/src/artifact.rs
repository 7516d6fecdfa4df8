//! Versioned model files.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic            8 bytes  "CWMODEL\0"
//! format version   u32
//! header length    u64, then the header as UTF-8 JSON
//! body length      u64, then the body as UTF-8 JSON
//! tensor count     u32
//! per tensor       u32 name length, name (UTF-8), u32 rows, u32 cols,
//!                  rows × cols f64 values in row-major order
//! ```
//!
//! The header carries the metadata served by the model-info endpoint. The
//! body holds the preprocessing state (vocabularies, scalers, trees) and the
//! tensors hold the numeric parameters. Vocabulary and topic-model files use
//! a JSON envelope with a magic string and a format version.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{InterpretableFeaturizer, Scaler};
use crate::linear_models::{EnlrModel, RfModel};
use crate::neural::{AttentionVariant, NeuralConfig, NeuralModel, Tensor};
use crate::pipeline::{ModelFamily, TrainedModel};
use crate::textrep::{TermIndex, TopicModel, Vocabulary};

pub const MAGIC: &[u8; 8] = b"CWMODEL\0";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorInfo {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactHeader {
    pub format_version: u32,
    pub family: ModelFamily,
    pub contextual: bool,
    pub attention_variant: Option<AttentionVariant>,
    pub library_version: String,
    pub hyperparameters: serde_json::Value,
    /// FNV-1a 64-bit hashes (hex) of each vocabulary's term list.
    pub vocab_hashes: BTreeMap<String, String>,
    pub tensors: Vec<TensorInfo>,
}

/// A model file's contents.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelArtifact {
    pub header: ArtifactHeader,
    pub model: TrainedModel,
}

#[derive(Serialize, Deserialize)]
struct EnlrBody {
    featurizer: InterpretableFeaturizer,
    b: f64,
    alpha: f64,
    lambda: f64,
    feature_names: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct RfBody {
    featurizer: InterpretableFeaturizer,
    /// Importances are stored as a tensor and cleared here.
    model: RfModel,
}

#[derive(Serialize, Deserialize)]
struct NeuralBody {
    config: NeuralConfig,
    words: TermIndex,
    chars: TermIndex,
    hand_scaler: Scaler,
}

/// FNV-1a over the newline-joined terms, as 16 hex digits.
pub fn vocab_hash(terms: &[String]) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for (i, t) in terms.iter().enumerate() {
        if i > 0 {
            h = (h ^ u64::from(b'\n')).wrapping_mul(0x0100_0000_01b3);
        }
        for &b in t.as_bytes() {
            h = (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3);
        }
    }
    format!("{h:016x}")
}

fn featurizer_hashes(f: &InterpretableFeaturizer) -> BTreeMap<String, String> {
    let mut m = BTreeMap::new();
    m.insert("vocab".to_owned(), vocab_hash(f.vocab.terms.terms()));
    m.insert("section_vocab".to_owned(), vocab_hash(f.section_vocab.terms.terms()));
    if let Some(t) = &f.topics {
        m.insert("topics".to_owned(), vocab_hash(t.vocab.terms()));
    }
    m
}

fn column(v: &[f64]) -> Tensor {
    Tensor::from_vec(v.len(), 1, v.to_vec())
}

impl ModelArtifact {
    pub fn new(model: TrainedModel) -> Self {
        let (hyperparameters, vocab_hashes, tensors) = match &model {
            TrainedModel::Enlr { featurizer, model } => (
                serde_json::json!({ "alpha": model.alpha, "lambda": model.lambda, "featurizer": featurizer.config }),
                featurizer_hashes(featurizer),
                vec![("beta".to_owned(), column(&model.beta))],
            ),
            TrainedModel::Rf { featurizer, model } => (
                serde_json::json!({
                    "trees": model.b(), "max_features": model.p, "bootstrap": model.bootstrap,
                    "seed": model.seed, "featurizer": featurizer.config,
                }),
                featurizer_hashes(featurizer),
                vec![("importances".to_owned(), column(&model.importances))],
            ),
            TrainedModel::Neural(m) => {
                let mut h = BTreeMap::new();
                h.insert("words".to_owned(), vocab_hash(m.words.terms()));
                h.insert("chars".to_owned(), vocab_hash(m.chars.terms()));
                let t = m.params.tensors().into_iter().map(|(n, t)| (n.to_owned(), t.clone())).collect();
                (serde_json::to_value(&m.config).unwrap_or_default(), h, t)
            }
        };
        let header = ArtifactHeader {
            format_version: FORMAT_VERSION,
            family: model.family(),
            contextual: model.contextual(),
            attention_variant: model.attention(),
            library_version: env!("CARGO_PKG_VERSION").to_owned(),
            hyperparameters,
            vocab_hashes,
            tensors: tensors
                .iter()
                .map(|(name, t)| TensorInfo {
                    name: name.clone(),
                    rows: t.rows,
                    cols: t.cols,
                })
                .collect(),
        };
        Self { header, model }
    }

    fn parts(&self) -> Result<(serde_json::Value, Vec<(String, Tensor)>)> {
        Ok(match &self.model {
            TrainedModel::Enlr { featurizer, model } => (
                serde_json::to_value(EnlrBody {
                    featurizer: featurizer.clone(),
                    b: model.b,
                    alpha: model.alpha,
                    lambda: model.lambda,
                    feature_names: model.feature_names.clone(),
                })?,
                vec![("beta".to_owned(), column(&model.beta))],
            ),
            TrainedModel::Rf { featurizer, model } => {
                let mut stripped = model.clone();
                stripped.importances.clear();
                (
                    serde_json::to_value(RfBody {
                        featurizer: featurizer.clone(),
                        model: stripped,
                    })?,
                    vec![("importances".to_owned(), column(&model.importances))],
                )
            }
            TrainedModel::Neural(m) => (
                serde_json::to_value(NeuralBody {
                    config: m.config.clone(),
                    words: m.words.clone(),
                    chars: m.chars.clone(),
                    hand_scaler: m.hand_scaler.clone(),
                })?,
                m.params.tensors().into_iter().map(|(n, t)| (n.to_owned(), t.clone())).collect(),
            ),
        })
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let (body, tensors) = self.parts()?;
        let header = serde_json::to_vec(&self.header)?;
        let body = serde_json::to_vec(&body)?;
        let mut out = Vec::with_capacity(header.len() + body.len() + 64);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(header.len() as u64).to_le_bytes());
        out.extend_from_slice(&header);
        out.extend_from_slice(&(body.len() as u64).to_le_bytes());
        out.extend_from_slice(&body);
        out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
        for (name, t) in &tensors {
            out.extend_from_slice(&(name.len() as u32).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.extend_from_slice(&(t.rows as u32).to_le_bytes());
            out.extend_from_slice(&(t.cols as u32).to_le_bytes());
            for v in &t.data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        Self::from_bytes(&bytes).map_err(|e| match e {
            Error::InvalidArtifact { reason, .. } => Error::InvalidArtifact {
                path: path.to_owned(),
                reason,
            },
            other => other,
        })
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(invalid("not a model file (bad magic)"));
        }
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(invalid(format!("unsupported format version {version}")));
        }
        let n = r.u64()? as usize;
        let header: ArtifactHeader = json(r.take(n)?)?;
        let n = r.u64()? as usize;
        let body = r.take(n)?;
        let count = r.u32()? as usize;
        let mut tensors = BTreeMap::new();
        for _ in 0..count {
            let n = r.u32()? as usize;
            let name = String::from_utf8(r.take(n)?.to_vec()).map_err(|_| invalid("tensor name is not UTF-8"))?;
            let rows = r.u32()? as usize;
            let cols = r.u32()? as usize;
            let raw = r.take(rows.checked_mul(cols).and_then(|n| n.checked_mul(8)).ok_or_else(|| invalid("tensor too large"))?)?;
            let data = raw
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
                .collect();
            tensors.insert(name, Tensor::from_vec(rows, cols, data));
        }
        if r.pos != bytes.len() {
            return Err(invalid("trailing bytes after the last tensor"));
        }
        let mut take = |name: &str| tensors.remove(name).ok_or_else(|| invalid(format!("missing tensor {name}")));
        let model = match header.family {
            ModelFamily::Enlr => {
                let b: EnlrBody = json(body)?;
                let beta = take("beta")?.data;
                if beta.len() != b.featurizer.width() {
                    return Err(invalid("coefficient count does not match the feature space"));
                }
                TrainedModel::Enlr {
                    featurizer: b.featurizer,
                    model: EnlrModel {
                        beta,
                        b: b.b,
                        alpha: b.alpha,
                        lambda: b.lambda,
                        feature_names: b.feature_names,
                    },
                }
            }
            ModelFamily::Rf => {
                let mut b: RfBody = json(body)?;
                b.model.importances = take("importances")?.data;
                if b.model.n_features != b.featurizer.width() {
                    return Err(invalid("forest feature count does not match the feature space"));
                }
                TrainedModel::Rf {
                    featurizer: b.featurizer,
                    model: b.model,
                }
            }
            ModelFamily::Neural => {
                let b: NeuralBody = json(body)?;
                let chars = b.chars.terms().iter().filter_map(|c| c.chars().next()).collect();
                let mut m = NeuralModel::new(b.config, b.words.terms().to_vec(), chars, b.hand_scaler);
                for (name, slot) in m.params.tensors_mut() {
                    let t = take(name)?;
                    if (t.rows, t.cols) != (slot.rows, slot.cols) {
                        return Err(invalid(format!(
                            "tensor {name} is {}x{}, expected {}x{}",
                            t.rows, t.cols, slot.rows, slot.cols
                        )));
                    }
                    *slot = t;
                }
                TrainedModel::Neural(Box::new(m))
            }
        };
        Ok(Self { header, model })
    }
}

fn invalid(reason: impl Into<String>) -> Error {
    Error::InvalidArtifact {
        path: PathBuf::from("<memory>"),
        reason: reason.into(),
    }
}

fn json<T: DeserializeOwned>(bytes: &[u8]) -> Result<T> {
    serde_json::from_slice(bytes).map_err(|e| invalid(format!("bad JSON section: {e}")))
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| invalid("truncated file"))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

#[derive(Serialize, Deserialize)]
struct Envelope<T> {
    magic: String,
    format_version: u32,
    data: T,
}

const VOCAB_MAGIC: &str = "citeworth-vocabulary";
const TOPICS_MAGIC: &str = "citeworth-topic-model";

fn save_envelope<T: Serialize>(path: &Path, magic: &str, data: &T) -> Result<()> {
    let env = Envelope {
        magic: magic.to_owned(),
        format_version: FORMAT_VERSION,
        data,
    };
    std::fs::write(path, serde_json::to_vec(&env)?)?;
    Ok(())
}

fn load_envelope<T: DeserializeOwned>(path: &Path, magic: &str) -> Result<T> {
    let env: Envelope<T> = serde_json::from_slice(&std::fs::read(path)?).map_err(|e| Error::InvalidArtifact {
        path: path.to_owned(),
        reason: e.to_string(),
    })?;
    if env.magic != magic || env.format_version != FORMAT_VERSION {
        return Err(Error::InvalidArtifact {
            path: path.to_owned(),
            reason: format!("expected {magic} version {FORMAT_VERSION}"),
        });
    }
    Ok(env.data)
}

pub fn save_vocabulary(path: &Path, vocab: &Vocabulary) -> Result<()> {
    save_envelope(path, VOCAB_MAGIC, vocab)
}

pub fn load_vocabulary(path: &Path) -> Result<Vocabulary> {
    load_envelope(path, VOCAB_MAGIC)
}

pub fn save_topic_model(path: &Path, model: &TopicModel) -> Result<()> {
    save_envelope(path, TOPICS_MAGIC, model)
}

pub fn load_topic_model(path: &Path) -> Result<TopicModel> {
    load_envelope(path, TOPICS_MAGIC)
}
