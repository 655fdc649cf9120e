use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::model::{Block, Page};

/// File name of a block crop: `{page_id}_{block_id}.png`.
pub fn crop_file_name(page_id: &str, block_id: &str) -> String {
    format!("{page_id}_{block_id}.png")
}

/// Integer pixel rectangle `(x0, y0, x1, y1)` covering the block, rounded
/// outward and limited to a `width × height` raster.
pub fn crop_rect(block: &Block, width: u32, height: u32) -> (u32, u32, u32, u32) {
    let c = block.bbox.corners();
    let clampx = |v: f64| v.clamp(0.0, width as f64) as u32;
    let clampy = |v: f64| v.clamp(0.0, height as f64) as u32;
    let (x0, y0) = (clampx(c.x0.floor()), clampy(c.y0.floor()));
    let (x1, y1) = (clampx(c.x1.ceil()), clampy(c.y1.ceil()));
    (x0, y0, x1.max(x0 + 1).min(width.max(1)), y1.max(y0 + 1).min(height.max(1)))
}

pub(crate) fn open_page(page: &Page) -> Result<image::DynamicImage> {
    image::open(&page.image_ref).map_err(|source| Error::Image {
        path: page.image_ref.clone(),
        source,
    })
}

/// Writes the crop of every block to `out_dir`, loading the page raster once.
/// Returns crop paths in block order.
pub fn crop_blocks(page: &Page, blocks: &[&Block], out_dir: &Path) -> Result<Vec<PathBuf>> {
    if blocks.is_empty() {
        return Ok(Vec::new());
    }
    let raster = open_page(page)?;
    std::fs::create_dir_all(out_dir)
        .map_err(|e| Error::io(format!("creating {}", out_dir.display()), e))?;
    blocks
        .iter()
        .map(|block| {
            let (x0, y0, x1, y1) = crop_rect(block, raster.width(), raster.height());
            let crop = raster.crop_imm(x0, y0, x1 - x0, y1 - y0);
            let path = out_dir.join(crop_file_name(&page.page_id, &block.id));
            crop.save_with_format(&path, image::ImageFormat::Png)
                .map_err(|source| Error::Image {
                    path: path.clone(),
                    source,
                })?;
            Ok(path)
        })
        .collect()
}

/// Crops a single block.
pub fn crop_block(page: &Page, block: &Block, out_dir: &Path) -> Result<PathBuf> {
    Ok(crop_blocks(page, &[block], out_dir)?.remove(0))
}
