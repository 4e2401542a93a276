//! Spectrum files: `{"n", "d", "entries": [{"f": "3,1", "re", "im"}]}`.
//!
//! Doubles are written as shortest round-trip decimals and parsed back
//! exactly, so a save/load cycle is bit-faithful.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use num_complex::Complex64 as C64;
use serde::{de::DeserializeOwned, Deserialize, Serialize};
use sfft_core::tree::{Dims, FreqVec};
use sfft_core::signal::SparseSpectrum;

use crate::error::{BenchError, Result};
use crate::instance::InstanceMeta;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub f: String,
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumData {
    pub n: u64,
    pub d: usize,
    pub entries: Vec<Entry>,
}

impl SpectrumData {
    pub fn from_spectrum(s: &SparseSpectrum) -> Self {
        let entries = s
            .iter_freqs()
            .map(|(f, v)| Entry { f: f.to_string(), re: v.re, im: v.im })
            .collect();
        SpectrumData { n: s.dims().n(), d: s.dims().d(), entries }
    }

    pub fn to_spectrum(&self) -> Result<SparseSpectrum> {
        let dims = Dims::new(self.n, self.d)?;
        let mut s = SparseSpectrum::new(dims);
        let mut seen = BTreeSet::new();
        for e in &self.entries {
            let f: FreqVec = e.f.parse()?;
            s.insert(&f, C64::new(e.re, e.im))?;
            if !seen.insert(f) {
                return Err(BenchError::Invalid(format!("duplicate frequency {}", e.f)));
            }
        }
        Ok(s)
    }
}

/// A spectrum plus the generator metadata needed to rebuild the oracle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumFile {
    #[serde(flatten)]
    pub spectrum: SpectrumData,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance: Option<InstanceMeta>,
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|source| BenchError::Io { path: path.into(), source })?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| BenchError::Io { path: path.into(), source })
}
