//! IDX reader and writer for handwritten-digit sets.
//!
//! Images carry magic 2051 (`00 00 08 03`) followed by count, rows and cols;
//! labels carry magic 2049 (`00 00 08 01`) followed by count. All header
//! integers are big-endian u32.

use std::path::Path;

use super::raster::Bitmap;
use crate::error::{Error, Result};

pub const IMAGE_MAGIC: u32 = 2051;
pub const LABEL_MAGIC: u32 = 2049;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DigitSet {
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<u8>,
    pub labels: Vec<u8>,
}

fn be_u32(bytes: &[u8], at: usize) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or(Error::Length {
            expected: at + 4,
            found: bytes.len(),
        })
}

fn check_magic(found: u32, expected: u32, what: &str) -> Result<()> {
    if found == expected {
        return Ok(());
    }
    let other = if expected == IMAGE_MAGIC { LABEL_MAGIC } else { IMAGE_MAGIC };
    if found == other {
        Err(Error::Pairing(format!(
            "{what} file has magic {found}, expected {expected} (image and label files swapped?)"
        )))
    } else {
        Err(Error::Format(format!("{what} file has magic {found}, expected {expected}")))
    }
}

impl DigitSet {
    pub fn new(rows: usize, cols: usize, pixels: Vec<u8>, labels: Vec<u8>) -> Result<Self> {
        if pixels.len() != labels.len() * rows * cols {
            return Err(Error::Shape(format!(
                "{} pixels for {} labels of {}x{}",
                pixels.len(),
                labels.len(),
                rows,
                cols
            )));
        }
        if let Some(l) = labels.iter().find(|&&l| l > 9) {
            return Err(Error::Format(format!("label {l} outside 0..=9")));
        }
        Ok(Self {
            rows,
            cols,
            pixels,
            labels,
        })
    }

    pub fn count(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn bitmap(&self, i: usize) -> Bitmap<'_> {
        let n = self.rows * self.cols;
        Bitmap {
            rows: self.rows,
            cols: self.cols,
            pixels: &self.pixels[i * n..(i + 1) * n],
        }
    }

    pub fn label(&self, i: usize) -> u8 {
        self.labels[i]
    }

    /// Parses an image/label IDX pair.
    pub fn from_idx_bytes(images: &[u8], labels: &[u8]) -> Result<Self> {
        check_magic(be_u32(images, 0)?, IMAGE_MAGIC, "image")?;
        check_magic(be_u32(labels, 0)?, LABEL_MAGIC, "label")?;
        let n = be_u32(images, 4)? as usize;
        let rows = be_u32(images, 8)? as usize;
        let cols = be_u32(images, 12)? as usize;
        let nl = be_u32(labels, 4)? as usize;
        if n != nl {
            return Err(Error::Pairing(format!("{n} images but {nl} labels")));
        }
        let need = 16 + n * rows * cols;
        if images.len() < need {
            return Err(Error::Length {
                expected: need,
                found: images.len(),
            });
        }
        if labels.len() < 8 + n {
            return Err(Error::Length {
                expected: 8 + n,
                found: labels.len(),
            });
        }
        Self::new(rows, cols, images[16..need].to_vec(), labels[8..8 + n].to_vec())
    }

    /// Serializes back to an (images, labels) IDX byte pair.
    pub fn to_idx_bytes(&self) -> (Vec<u8>, Vec<u8>) {
        let mut img = Vec::with_capacity(16 + self.pixels.len());
        for v in [IMAGE_MAGIC, self.count() as u32, self.rows as u32, self.cols as u32] {
            img.extend_from_slice(&v.to_be_bytes());
        }
        img.extend_from_slice(&self.pixels);
        let mut lbl = Vec::with_capacity(8 + self.labels.len());
        for v in [LABEL_MAGIC, self.count() as u32] {
            lbl.extend_from_slice(&v.to_be_bytes());
        }
        lbl.extend_from_slice(&self.labels);
        (img, lbl)
    }

    pub fn write_idx(&self, images: &Path, labels: &Path) -> Result<()> {
        let (i, l) = self.to_idx_bytes();
        std::fs::write(images, i)?;
        std::fs::write(labels, l)?;
        Ok(())
    }

    /// Indices of the first `per_class` samples of each class, ascending.
    pub fn first_per_class(&self, per_class: usize) -> Result<Vec<usize>> {
        let mut taken = [0usize; 10];
        let mut out = Vec::with_capacity(per_class * 10);
        for (i, &l) in self.labels.iter().enumerate() {
            if taken[l as usize] < per_class {
                taken[l as usize] += 1;
                out.push(i);
            }
        }
        if let Some(c) = taken.iter().position(|&t| t < per_class) {
            return Err(Error::Argument(format!(
                "class {c} has only {} samples, {per_class} requested",
                taken[c]
            )));
        }
        Ok(out)
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        let n = self.rows * self.cols;
        let mut pixels = Vec::with_capacity(indices.len() * n);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            pixels.extend_from_slice(&self.pixels[i * n..(i + 1) * n]);
            labels.push(self.labels[i]);
        }
        Self {
            rows: self.rows,
            cols: self.cols,
            pixels,
            labels,
        }
    }
}

/// Reads an image/label IDX pair from disk.
pub fn load_idx(images: &Path, labels: &Path) -> Result<DigitSet> {
    let img = std::fs::read(images)?;
    let lbl = std::fs::read(labels)?;
    DigitSet::from_idx_bytes(&img, &lbl)
}

/// Looks for the conventional file names inside `dir`.
pub fn load_idx_dir(dir: &Path) -> Result<DigitSet> {
    let pairs = [
        ("images-idx3-ubyte", "labels-idx1-ubyte"),
        ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
        ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
    ];
    for (i, l) in pairs {
        let (ip, lp) = (dir.join(i), dir.join(l));
        if ip.is_file() && lp.is_file() {
            return load_idx(&ip, &lp);
        }
    }
    Err(Error::Io(std::io::Error::new(
        std::io::ErrorKind::NotFound,
        format!("no IDX image/label pair found in {}", dir.display()),
    )))
}
