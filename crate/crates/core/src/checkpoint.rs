//! Versioned JSON checkpoints for trained models.

use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::relation::ReModel;
use crate::tagger::NerModel;

pub const NER_CHECKPOINT_VERSION: &str = "casegraph-ner-v1";
pub const RE_CHECKPOINT_VERSION: &str = "casegraph-re-v1";

#[derive(Serialize, Deserialize)]
struct Versioned<M> {
    version: String,
    model: M,
}

fn save<M: Serialize>(path: &Path, version: &str, model: &M) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let wrapped = Versioned { version: version.to_string(), model };
    std::fs::write(path, serde_json::to_string(&wrapped)?)?;
    Ok(())
}

fn load<M: DeserializeOwned>(path: &Path, version: &str) -> Result<M> {
    let text = std::fs::read_to_string(path)?;
    // Check the version tag before touching the model payload so that a
    // wrong-version file reports the version, not a shape error.
    #[derive(Deserialize)]
    struct Header {
        version: String,
    }
    let header: Header = serde_json::from_str(&text)?;
    if header.version != version {
        return Err(Error::Format(format!(
            "checkpoint version '{}' unsupported (expected '{version}')",
            header.version
        )));
    }
    let wrapped: Versioned<M> = serde_json::from_str(&text)?;
    Ok(wrapped.model)
}

pub fn save_ner_model(path: &Path, model: &NerModel) -> Result<()> {
    save(path, NER_CHECKPOINT_VERSION, model)
}

pub fn load_ner_model(path: &Path) -> Result<NerModel> {
    let mut model: NerModel = load(path, NER_CHECKPOINT_VERSION)?;
    model.encoder.vocab.rebuild_lookup();
    Ok(model)
}

pub fn save_re_model(path: &Path, model: &ReModel) -> Result<()> {
    save(path, RE_CHECKPOINT_VERSION, model)
}

pub fn load_re_model(path: &Path) -> Result<ReModel> {
    let mut model: ReModel = load(path, RE_CHECKPOINT_VERSION)?;
    model.encoder.vocab.rebuild_lookup();
    Ok(model)
}
