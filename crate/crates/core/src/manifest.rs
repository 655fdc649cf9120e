use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Page;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestPage {
    pub page_index: u32,
    /// Page raster, relative to the manifest's directory unless absolute.
    pub image: PathBuf,
    pub width: u32,
    pub height: u32,
}

/// A catalog delivered as pre-rasterized page images.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub catalog_name: String,
    #[serde(default)]
    pub pages: Vec<ManifestPage>,
}

pub fn page_id(page_index: u32) -> String {
    format!("p{page_index:03}")
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading manifest {}", path.display()), e))?;
        let manifest: Manifest =
            serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))?;
        manifest.validate()?;
        Ok(manifest)
    }

    /// Page indices must be unique and run 0, 1, 2, ... in some order.
    pub fn validate(&self) -> Result<()> {
        let mut seen = vec![false; self.pages.len()];
        for p in &self.pages {
            let idx = p.page_index as usize;
            if idx >= seen.len() || seen[idx] {
                return Err(Error::Validation(format!(
                    "manifest page_index {} is duplicated or leaves a gap",
                    p.page_index
                )));
            }
            seen[idx] = true;
            if p.width == 0 || p.height == 0 {
                return Err(Error::Validation(format!(
                    "manifest page {} has zero size",
                    p.page_index
                )));
            }
        }
        Ok(())
    }

    /// Pages in index order with image paths resolved against `base_dir`.
    pub fn pages(&self, base_dir: &Path) -> Vec<Page> {
        let mut pages: Vec<Page> = self
            .pages
            .iter()
            .map(|p| Page {
                page_id: page_id(p.page_index),
                source_file: p.image.clone(),
                page_index: p.page_index,
                width: p.width,
                height: p.height,
                image_ref: base_dir.join(&p.image),
            })
            .collect();
        pages.sort_by_key(|p| p.page_index);
        pages
    }

    /// Copy with every image path made absolute against `base_dir`.
    pub fn resolved(&self, base_dir: &Path) -> Manifest {
        let base = base_dir.canonicalize().unwrap_or_else(|_| base_dir.to_path_buf());
        Manifest {
            catalog_name: self.catalog_name.clone(),
            pages: self
                .pages
                .iter()
                .map(|p| ManifestPage {
                    image: base.join(&p.image),
                    ..p.clone()
                })
                .collect(),
        }
    }
}
