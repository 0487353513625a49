//! On-disk corpora: `images/`, `masks/` and a `manifest.csv` listing
//! `image,mask,click_x,click_y` (paths relative to the root, click optional).

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::synth::SyntheticSample;
use crate::error::{Error, Result};
use crate::imaging::{load_image, load_mask, save_image, save_mask, BinaryMask, GrayImage};
use crate::segment::Seed;

pub const MANIFEST: &str = "manifest.csv";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub image: PathBuf,
    pub mask: PathBuf,
    pub click: Option<Seed>,
}

impl CorpusEntry {
    /// Identifier used in every output row: the image file stem.
    pub fn name(&self) -> String {
        self.image
            .file_stem()
            .map_or_else(|| self.image.display().to_string(), |s| s.to_string_lossy().into_owned())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub root: PathBuf,
    pub entries: Vec<CorpusEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestRow {
    image: String,
    mask: String,
    click_x: Option<usize>,
    click_y: Option<usize>,
}

impl Corpus {
    pub fn load(root: impl AsRef<Path>) -> Result<Self> {
        let root = root.as_ref().to_path_buf();
        let path = root.join(MANIFEST);
        let file = fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
        let mut rdr = csv::Reader::from_reader(file);
        let mut entries = Vec::new();
        for (i, row) in rdr.deserialize::<ManifestRow>().enumerate() {
            let row = row?;
            let click = match (row.click_x, row.click_y) {
                (Some(x), Some(y)) => Some((x, y)),
                (None, None) => None,
                _ => {
                    return Err(Error::Config(format!(
                        "{}: row {} has only one click coordinate",
                        path.display(),
                        i + 1
                    )))
                }
            };
            entries.push(CorpusEntry {
                image: row.image.into(),
                mask: row.mask.into(),
                click,
            });
        }
        if entries.is_empty() {
            return Err(Error::Config(format!("{} lists no images", path.display())));
        }
        Ok(Self { root, entries })
    }

    pub fn write_manifest(&self) -> Result<()> {
        let path = self.root.join(MANIFEST);
        let mut wtr = csv::Writer::from_path(&path)?;
        for e in &self.entries {
            wtr.serialize(ManifestRow {
                image: e.image.to_string_lossy().replace('\\', "/"),
                mask: e.mask.to_string_lossy().replace('\\', "/"),
                click_x: e.click.map(|c| c.0),
                click_y: e.click.map(|c| c.1),
            })?;
        }
        wtr.flush().map_err(|e| Error::io(&path, e))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Loads entry `i`, checking that the mask matches the image and the
    /// click lies inside it.
    pub fn load_entry(&self, i: usize) -> Result<(GrayImage, BinaryMask)> {
        let e = &self.entries[i];
        let img = load_image(self.root.join(&e.image))?;
        let mask = load_mask(self.root.join(&e.mask))?;
        if img.dims() != mask.dims() {
            return Err(Error::DimensionMismatch {
                expected: img.dims(),
                actual: mask.dims(),
            });
        }
        if let Some((x, y)) = e.click {
            if x >= img.width() || y >= img.height() {
                return Err(Error::Config(format!("click ({x}, {y}) outside {}x{} image", img.width(), img.height())));
            }
        }
        Ok((img, mask))
    }
}

/// Writes samples as `images/img_NNNN.png`, `masks/img_NNNN.png` plus the
/// manifest.
pub fn write_synthetic_corpus(root: impl AsRef<Path>, samples: &[SyntheticSample]) -> Result<Corpus> {
    let root = root.as_ref().to_path_buf();
    for d in ["images", "masks"] {
        let p = root.join(d);
        fs::create_dir_all(&p).map_err(|e| Error::io(&p, e))?;
    }
    let width = samples.len().saturating_sub(1).to_string().len().max(4);
    let mut entries = Vec::with_capacity(samples.len());
    for (i, s) in samples.iter().enumerate() {
        let file = format!("img_{i:0width$}.png");
        let image = Path::new("images").join(&file);
        let mask = Path::new("masks").join(&file);
        save_image(&s.image, root.join(&image))?;
        save_mask(&s.gold, root.join(&mask))?;
        entries.push(CorpusEntry {
            image,
            mask,
            click: s.click,
        });
    }
    let corpus = Corpus { root, entries };
    corpus.write_manifest()?;
    Ok(corpus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::synth::generate_synthetic_corpus;

    #[test]
    fn round_trip_through_disk() {
        let dir = tempfile::tempdir().unwrap();
        let samples = generate_synthetic_corpus(3, 32, 5);
        let corpus = write_synthetic_corpus(dir.path(), &samples).unwrap();
        let back = Corpus::load(dir.path()).unwrap();
        assert_eq!(back, corpus);
        assert_eq!(back.entries[1].name(), "img_0001");
        for (i, s) in samples.iter().enumerate() {
            let (img, mask) = back.load_entry(i).unwrap();
            assert_eq!(img, s.image);
            assert_eq!(mask, s.gold);
        }
    }

    #[test]
    fn manifest_errors() {
        let dir = tempfile::tempdir().unwrap();
        assert!(Corpus::load(dir.path()).is_err());
        fs::write(dir.path().join(MANIFEST), "image,mask,click_x,click_y\na.png,b.png,3,\n").unwrap();
        assert!(Corpus::load(dir.path()).is_err());
        fs::write(dir.path().join(MANIFEST), "image,mask,click_x,click_y\n").unwrap();
        assert!(Corpus::load(dir.path()).is_err());
        fs::write(dir.path().join(MANIFEST), "image,mask,click_x,click_y\na.png,b.png,,\n").unwrap();
        let c = Corpus::load(dir.path()).unwrap();
        assert_eq!(c.entries[0].click, None);
        assert!(c.load_entry(0).is_err());
    }

    #[test]
    fn mismatched_mask_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut samples = generate_synthetic_corpus(1, 32, 5);
        samples[0].gold = BinaryMask::empty(16, 16);
        let c = write_synthetic_corpus(dir.path(), &samples).unwrap();
        assert!(matches!(c.load_entry(0), Err(Error::DimensionMismatch { .. })));
    }
}
