//! JSON form of a band-limited field: `{"K": 3, "coeffs": [[re, im], ...]}`
//! listing `û(1), …, û(K)`. Floats are written in shortest round-trip form,
//! so reading back a written field is exact.

use std::fs;
use std::path::Path;

use kdv_core::{FourierField, C64};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldJson {
    #[serde(rename = "K")]
    pub k: usize,
    pub coeffs: Vec<[f64; 2]>,
}

impl From<&FourierField> for FieldJson {
    fn from(u: &FourierField) -> Self {
        FieldJson { k: u.k_max(), coeffs: u.coeffs().iter().map(|c| [c.re, c.im]).collect() }
    }
}

impl FieldJson {
    /// `field` names the config entry for error messages.
    pub fn to_field(&self, field: &str) -> Result<FourierField> {
        if self.coeffs.len() != self.k {
            return Err(LabError::config(
                format!("{field}.coeffs"),
                format!("expected K = {} coefficients, found {}", self.k, self.coeffs.len()),
            ));
        }
        if self.coeffs.iter().flatten().any(|x| !x.is_finite()) {
            return Err(LabError::config(format!("{field}.coeffs"), "coefficients must be finite"));
        }
        FourierField::from_coeffs(self.coeffs.iter().map(|c| C64::new(c[0], c[1])).collect())
            .map_err(|e| LabError::config(field, e.to_string()))
    }
}

pub fn read_field(path: &Path) -> Result<FourierField> {
    let text = fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
    let mut de = serde_json::Deserializer::from_str(&text);
    let fj: FieldJson = serde_path_to_error::deserialize(&mut de)
        .map_err(|e| LabError::config(format!("{}:{}", path.display(), e.path()), e.inner().to_string()))?;
    fj.to_field(&path.display().to_string())
}

pub fn write_field(path: &Path, u: &FourierField) -> Result<()> {
    let text = serde_json::to_string_pretty(&FieldJson::from(u)).expect("field serializes");
    fs::write(path, text + "\n").map_err(|e| LabError::io(path, e))
}
