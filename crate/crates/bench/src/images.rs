//! Standard test images and their checksum list.
//!
//! Images are not shipped with the repository. `scripts/fetch_test_images.py`
//! prepares them under `data/`, and `data/checksums.txt` lists the SHA-256 of
//! each file's decoded 8-bit pixels in row-major order, one
//! `<hex digest>  <file name>` pair per line.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use bm3d_frames::Image;
use sha2::{Digest, Sha256};

use crate::error::{BenchError, Result};

pub const CHECKSUM_FILE: &str = "checksums.txt";

/// Standard images by short name and file name.
pub const STANDARD_IMAGES: [(&str, &str); 4] = [
    ("cameraman", "cameraman256.png"),
    ("house", "house256.png"),
    ("lena", "lena512.png"),
    ("barbara", "barbara512.png"),
];

/// Default data directory: `data/` at the workspace root.
pub fn default_data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

/// SHA-256 of the 8-bit rendering of `img`, row-major.
pub fn pixel_digest(img: &Image) -> String {
    hex::encode(Sha256::digest(img.to_gray8().as_raw()))
}

pub fn read_checksums(path: impl AsRef<Path>) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = BTreeMap::new();
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
        let mut parts = line.split_whitespace();
        match (parts.next(), parts.next()) {
            (Some(digest), Some(name)) => {
                out.insert(name.to_string(), digest.to_ascii_lowercase());
            }
            _ => {
                return Err(BenchError::TestImage {
                    name: CHECKSUM_FILE.into(),
                    reason: format!("malformed line {line:?}"),
                })
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct TestImage {
    pub name: String,
    pub path: PathBuf,
    pub image: Image,
    pub digest: String,
    /// Whether a listed checksum was found and matched.
    pub verified: bool,
}

/// Loads an image and checks it against the checksum list next to it, if
/// that list has an entry for the file.
pub fn load_verified(path: impl AsRef<Path>) -> Result<TestImage> {
    let path = path.as_ref();
    let file_name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string();
    let name = STANDARD_IMAGES
        .iter()
        .find(|(_, f)| *f == file_name)
        .map(|(n, _)| n.to_string())
        .unwrap_or_else(|| path.file_stem().and_then(|s| s.to_str()).unwrap_or("image").to_string());
    if !path.exists() {
        return Err(BenchError::TestImage {
            name,
            reason: format!("{} not found; run scripts/fetch_test_images.py or supply your own copy", path.display()),
        });
    }
    let image = Image::load(path).map_err(|e| BenchError::TestImage {
        name: name.clone(),
        reason: e.to_string(),
    })?;
    let digest = pixel_digest(&image);
    let list = path.with_file_name(CHECKSUM_FILE);
    let expected = if list.exists() { read_checksums(&list)?.remove(&file_name) } else { None };
    let verified = match expected {
        Some(want) if want != digest => {
            return Err(BenchError::TestImage {
                name,
                reason: format!("checksum mismatch: expected {want}, found {digest}"),
            })
        }
        Some(_) => true,
        None => false,
    };
    Ok(TestImage {
        name,
        path: path.to_path_buf(),
        image,
        digest,
        verified,
    })
}

/// Loads a standard image by short name from `data_dir`.
pub fn load_standard(data_dir: impl AsRef<Path>, name: &str) -> Result<TestImage> {
    let (_, file) = STANDARD_IMAGES
        .iter()
        .find(|(n, _)| n.eq_ignore_ascii_case(name))
        .ok_or_else(|| BenchError::TestImage {
            name: name.into(),
            reason: "not a standard image name".into(),
        })?;
    load_verified(data_dir.as_ref().join(file))
}
