//! Random catalogs whose foreign keys collide often enough to form groups.

use std::path::PathBuf;

use catalog_core::model::{AttributeRecord, Block, Modality, Page, ParseStatus};
use catalog_core::BoundingBox;
use indexmap::IndexMap;
use rand::Rng;

pub struct Catalog {
    pub pages: Vec<Page>,
    pub blocks: Vec<Block>,
    pub images: Vec<AttributeRecord>,
    pub texts: Vec<AttributeRecord>,
}

pub fn catalog<R: Rng>(rng: &mut R) -> Catalog {
    let n_pages = rng.gen_range(1..=3u32);
    let pages: Vec<Page> = (0..n_pages)
        .map(|i| Page {
            page_id: format!("p{i:03}"),
            source_file: PathBuf::from("catalog.pdf"),
            page_index: i,
            width: 600,
            height: 800,
            image_ref: PathBuf::from(format!("page-{i}.png")),
        })
        .collect();
    let mut blocks = Vec::new();
    let mut images = Vec::new();
    let mut texts = Vec::new();
    for page in &pages {
        for modality in [Modality::Image, Modality::Text] {
            let n = rng.gen_range(0..=6usize);
            for k in 0..n {
                let id = format!("{}-{}-{k:03}", page.page_id, if modality == Modality::Image { "img" } else { "txt" });
                blocks.push(Block {
                    id: id.clone(),
                    page_id: page.page_id.clone(),
                    modality,
                    bbox: BoundingBox {
                        x_c: rng.gen_range(20..580) as f64,
                        y_c: rng.gen_range(20..780) as f64,
                        w: 40.0,
                        h: 40.0,
                    },
                    confidence: 0.9,
                });
                let rec = record(rng, id);
                match modality {
                    Modality::Image => images.push(rec),
                    Modality::Text => texts.push(rec),
                }
            }
        }
    }
    Catalog { pages, blocks, images, texts }
}

fn record<R: Rng>(rng: &mut R, block_id: String) -> AttributeRecord {
    if rng.gen_bool(0.1) {
        return AttributeRecord::unparsed(block_id, vec!["garbled".into()]);
    }
    let mut attributes = IndexMap::new();
    let fig = if rng.gen_bool(0.1) { String::new() } else { format!("fig{}", rng.gen_range(1..=3)) };
    let item = if rng.gen_bool(0.1) { String::new() } else { rng.gen_range(1..=2).to_string() };
    attributes.insert("catalog_figure_no".into(), fig);
    attributes.insert("item_index".into(), item);
    attributes.insert("excavation_unit".into(), String::new());
    attributes.insert("morphological_class".into(), String::new());
    AttributeRecord {
        block_id,
        attributes,
        parse_status: ParseStatus::Ok,
        warnings: Vec::new(),
    }
}
