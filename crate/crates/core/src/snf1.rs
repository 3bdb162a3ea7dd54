//! SNF1 field files.
//!
//! A field is stored as two files side by side: `NAME.snf`, a UTF-8 text
//! document of `key=value` lines, and `NAME.bin`, the `n²` values as
//! little-endian IEEE-754 binary64, row-major (`x₁` index outer, `x₂` inner).
//!
//! ```text
//! format=SNF1
//! n=256
//! L=12
//! p=2
//! symmetry=odd_in_x2
//! created-by=snewton 0.1.0
//! content-hash=<lowercase hex sha256 of NAME.bin>
//! ```
//!
//! Every key is required, no other key is allowed, and blank lines and lines
//! starting with `#` are ignored. Floats use the shortest representation that
//! reads back to the same value.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField, SymmetryClass};

const KEYS: [&str; 7] = ["format", "n", "L", "p", "symmetry", "created-by", "content-hash"];

#[derive(Debug, Clone, PartialEq)]
pub struct FieldFile {
    pub field: ScalarField,
    pub p: f64,
    pub symmetry: SymmetryClass,
    pub created_by: String,
}

/// The blob path belonging to a metadata path.
pub fn blob_path(meta: &Path) -> PathBuf {
    meta.with_extension("bin")
}

pub fn encode_values(values: &[f64]) -> Vec<u8> {
    values.iter().flat_map(|v| v.to_le_bytes()).collect()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes `meta` and its blob. Returns the blob path.
pub fn write(meta: &Path, file: &FieldFile) -> Result<PathBuf> {
    let blob = encode_values(file.field.values());
    let spec = file.field.spec();
    let text = format!(
        "format=SNF1\nn={}\nL={}\np={}\nsymmetry={}\ncreated-by={}\ncontent-hash={}\n",
        spec.n(),
        spec.half_width(),
        file.p,
        file.symmetry,
        file.created_by,
        sha256_hex(&blob)
    );
    let blob_path = blob_path(meta);
    fs::write(&blob_path, &blob)?;
    fs::write(meta, text)?;
    Ok(blob_path)
}

fn parse_meta(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Format(format!("line {}: expected key=value", lineno + 1)))?;
        let k = k.trim();
        if !KEYS.contains(&k) {
            return Err(Error::Format(format!("unknown key '{k}'")));
        }
        if map.insert(k.to_string(), v.trim().to_string()).is_some() {
            return Err(Error::Format(format!("duplicate key '{k}'")));
        }
    }
    for k in KEYS {
        if !map.contains_key(k) {
            return Err(Error::Format(format!("missing key '{k}'")));
        }
    }
    Ok(map)
}

fn parse<T: std::str::FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<T> {
    map[key]
        .parse()
        .map_err(|_| Error::Format(format!("bad value for '{key}': '{}'", map[key])))
}

pub fn read(meta: &Path) -> Result<FieldFile> {
    let text = fs::read_to_string(meta)?;
    let map = parse_meta(&text)?;
    if map["format"] != "SNF1" {
        return Err(Error::Format(format!("unsupported format '{}'", map["format"])));
    }
    let n: usize = parse(&map, "n")?;
    let half_width: f64 = parse(&map, "L")?;
    let p: f64 = parse(&map, "p")?;
    let symmetry: SymmetryClass = map["symmetry"]
        .parse()
        .map_err(|_| Error::Format(format!("bad symmetry '{}'", map["symmetry"])))?;
    let spec = GridSpec::new(half_width, n).map_err(|e| Error::Format(e.to_string()))?;

    let bytes = fs::read(blob_path(meta))?;
    if bytes.len() != 8 * n * n {
        return Err(Error::Format(format!(
            "blob holds {} bytes, expected {}",
            bytes.len(),
            8 * n * n
        )));
    }
    let hash = sha256_hex(&bytes);
    if hash != map["content-hash"].to_ascii_lowercase() {
        return Err(Error::Format("content hash mismatch".into()));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    let field = ScalarField::from_values(spec, values).map_err(|e| Error::Format(e.to_string()))?;
    Ok(FieldFile {
        field,
        p,
        symmetry,
        created_by: map["created-by"].clone(),
    })
}
