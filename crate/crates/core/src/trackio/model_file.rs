use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seqmodel::{ActivityModelBank, SeqError};

pub const MODEL_FORMAT_VERSION: u32 = 1;
const FORMAT_NAME: &str = "groupact-model";

#[derive(Debug, Error)]
pub enum ModelFileError {
    #[error("not a model file: {0}")]
    Parse(String),
    #[error("unsupported model format version {found} (expected {MODEL_FORMAT_VERSION})")]
    Version { found: String },
    #[error("invalid model: {0}")]
    Invalid(#[from] SeqError),
}

#[derive(Serialize)]
struct FileRef<'a> {
    format: &'a str,
    version: u32,
    bank: &'a ActivityModelBank,
}

#[derive(Deserialize)]
struct FileOwned {
    bank: ActivityModelBank,
}

/// Serializes a bank as versioned JSON. Floats are written with enough
/// digits to parse back to the identical value.
pub fn save_model(bank: &ActivityModelBank) -> Result<String, ModelFileError> {
    bank.validate()?;
    let doc = FileRef {
        format: FORMAT_NAME,
        version: MODEL_FORMAT_VERSION,
        bank,
    };
    let mut text = serde_json::to_string_pretty(&doc).map_err(|e| ModelFileError::Parse(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

pub fn load_model(text: &str) -> Result<ActivityModelBank, ModelFileError> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| ModelFileError::Parse(e.to_string()))?;
    if value.get("format").and_then(|f| f.as_str()) != Some(FORMAT_NAME) {
        return Err(ModelFileError::Parse("missing format tag".into()));
    }
    match value.get("version") {
        Some(v) if v.as_u64() == Some(MODEL_FORMAT_VERSION as u64) => {}
        Some(v) => {
            let found = v.as_str().map(str::to_string).unwrap_or_else(|| v.to_string());
            return Err(ModelFileError::Version { found });
        }
        None => return Err(ModelFileError::Parse("missing version".into())),
    }
    let file: FileOwned = serde_json::from_value(value).map_err(|e| ModelFileError::Parse(e.to_string()))?;
    file.bank.validate()?;
    Ok(file.bank)
}
