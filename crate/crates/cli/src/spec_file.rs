//! JSON system files: schema, validation, canonical digest and conversion
//! into the core system type.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use filippov_core::pws::{FieldTriple, Polynomial, PwsSystem};

#[derive(Debug, Error)]
pub enum SpecFileError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid JSON in {path}: {source}")]
    Json {
        path: String,
        source: serde_json::Error,
    },
    #[error("{path}: missing field entry '{key}' (need X1..X4)")]
    MissingField { path: String, key: String },
    #[error("{path}: field '{key}' has an empty coefficient list")]
    EmptyCoefficients { path: String, key: String },
    #[error("{path}: empty x domain [{lo}, {hi}]")]
    EmptyDomain { path: String, lo: f64, hi: f64 },
}

/// One field's polynomial coefficients, ascending powers of x.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
}

/// On-disk system description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSpecFile {
    pub name: String,
    pub x_domain: [f64; 2],
    pub fields: BTreeMap<String, FieldSpec>,
}

/// A parsed system along with its provenance for reporting.
pub struct LoadedSystem {
    pub spec: SystemSpecFile,
    pub system: PwsSystem,
    /// SHA-256 of the canonicalized (sorted-key, compact) JSON.
    pub digest: String,
}

pub fn load_system(path: &Path) -> Result<LoadedSystem, SpecFileError> {
    let display = path.display().to_string();
    let bytes = std::fs::read(path).map_err(|source| SpecFileError::Io {
        path: display.clone(),
        source,
    })?;
    let value: serde_json::Value =
        serde_json::from_slice(&bytes).map_err(|source| SpecFileError::Json {
            path: display.clone(),
            source,
        })?;
    // Canonical form: serde_json's default map is ordered by key, so a
    // compact re-serialization is key-sorted and whitespace-free.
    let canonical = serde_json::to_string(&value).expect("value reserializes");
    let digest = hex_digest(canonical.as_bytes());
    let spec: SystemSpecFile =
        serde_json::from_value(value).map_err(|source| SpecFileError::Json {
            path: display.clone(),
            source,
        })?;
    let system = to_system(&spec, &display)?;
    Ok(LoadedSystem {
        spec,
        system,
        digest,
    })
}

fn hex_digest(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let out = hasher.finalize();
    out.iter().map(|b| format!("{b:02x}")).collect()
}

fn to_system(spec: &SystemSpecFile, path: &str) -> Result<PwsSystem, SpecFileError> {
    let [lo, hi] = spec.x_domain;
    if !(lo <= hi) {
        return Err(SpecFileError::EmptyDomain {
            path: path.to_string(),
            lo,
            hi,
        });
    }
    let mut fields: Vec<FieldTriple> = Vec::with_capacity(4);
    for idx in 1..=4 {
        let key = format!("X{idx}");
        let f = spec
            .fields
            .get(&key)
            .ok_or_else(|| SpecFileError::MissingField {
                path: path.to_string(),
                key: key.clone(),
            })?;
        let poly = |coeffs: &Vec<f64>| {
            Polynomial::new(coeffs.clone()).map_err(|_| SpecFileError::EmptyCoefficients {
                path: path.to_string(),
                key: key.clone(),
            })
        };
        fields.push(FieldTriple {
            alpha: poly(&f.alpha)?,
            beta: poly(&f.beta)?,
            gamma: poly(&f.gamma)?,
        });
    }
    let fields: [FieldTriple; 4] = fields.try_into().expect("exactly four fields");
    PwsSystem::new(fields, lo, hi).map_err(|_| SpecFileError::EmptyDomain {
        path: path.to_string(),
        lo,
        hi,
    })
}
