//! Image/text block alignment.
//!
//! Records whose foreign-key value sets are identical and non-empty form
//! candidate pairs. Connected components of that relation with exactly one
//! record per side are accepted as is; larger components are resolved by a
//! minimum-cost assignment over block-center distances.

mod assignment;
mod disjoint_set;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

pub use assignment::{assignment_cost, solve_assignment};
pub use disjoint_set::DisjointSet;

use crate::error::{Error, Result};
use crate::geometry::center_distance_unchecked;
use crate::model::{AttributeRecord, Block, MatchPair, MatchStage, Modality, Page};
use crate::par::{self, Execution};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForeignKeyConfig {
    pub foreign_keys: Vec<String>,
}

impl Default for ForeignKeyConfig {
    fn default() -> Self {
        ForeignKeyConfig {
            foreign_keys: vec!["catalog_figure_no".into(), "item_index".into()],
        }
    }
}

impl ForeignKeyConfig {
    pub fn validate(&self, schema_keys: &[String]) -> Result<()> {
        if self.foreign_keys.is_empty() {
            return Err(Error::Config("foreign_keys must not be empty".into()));
        }
        if let Some(k) = self.foreign_keys.iter().find(|k| !schema_keys.contains(k)) {
            return Err(Error::Config(format!(
                "foreign key {k:?} is not in the comprehension schema"
            )));
        }
        Ok(())
    }
}

/// Non-empty values of the configured foreign keys. Unparsed records have none.
pub fn foreign_keys(record: &AttributeRecord, cfg: &ForeignKeyConfig) -> BTreeSet<String> {
    if !record.is_parsed() {
        return BTreeSet::new();
    }
    cfg.foreign_keys
        .iter()
        .filter_map(|k| record.get(k))
        .filter(|v| !v.is_empty())
        .map(str::to_string)
        .collect()
}

/// Jaccard overlap of two foreign-key sets; 0 when both are empty.
pub fn set_overlap(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 0.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

pub fn matching_degree(a: &AttributeRecord, b: &AttributeRecord, cfg: &ForeignKeyConfig) -> f64 {
    set_overlap(&foreign_keys(a, cfg), &foreign_keys(b, cfg))
}

/// All `(image index, text index)` pairs with matching degree 1, sorted.
///
/// Degree 1 holds exactly when both key sets are equal and non-empty, so
/// records are bucketed by key set instead of compared pairwise.
pub fn foreign_key_match(
    images: &[AttributeRecord],
    texts: &[AttributeRecord],
    cfg: &ForeignKeyConfig,
) -> Vec<(usize, usize)> {
    let mut texts_by_keys: HashMap<BTreeSet<String>, Vec<usize>> = HashMap::new();
    for (j, t) in texts.iter().enumerate() {
        let fk = foreign_keys(t, cfg);
        if !fk.is_empty() {
            texts_by_keys.entry(fk).or_default().push(j);
        }
    }
    let mut pairs = Vec::new();
    for (i, img) in images.iter().enumerate() {
        let fk = foreign_keys(img, cfg);
        if let Some(js) = texts_by_keys.get(&fk) {
            pairs.extend(js.iter().map(|&j| (i, j)));
        }
    }
    pairs
}

/// A connected component of the complete-match relation that is not a
/// plain one-to-one pair. Indices are sorted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchGroup {
    pub images: Vec<usize>,
    pub texts: Vec<usize>,
    pub pairs: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Components {
    pub one_to_one: Vec<(usize, usize)>,
    pub groups: Vec<MatchGroup>,
}

/// Splits candidate pairs into connected components.
///
/// Output order is deterministic: by smallest image index in the component.
pub fn group_components(pairs: &[(usize, usize)]) -> Components {
    if pairs.is_empty() {
        return Components::default();
    }
    let n_img = pairs.iter().map(|p| p.0).max().unwrap_or(0) + 1;
    let n_txt = pairs.iter().map(|p| p.1).max().unwrap_or(0) + 1;
    // nodes: images first, then texts
    let mut ds = DisjointSet::new(n_img + n_txt);
    for &(i, j) in pairs {
        ds.union(i, n_img + j);
    }

    let mut by_root: BTreeMap<usize, MatchGroup> = BTreeMap::new();
    let mut order: Vec<usize> = Vec::new();
    let mut sorted: Vec<(usize, usize)> = pairs.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    for &(i, j) in &sorted {
        let root = ds.find(i);
        let g = by_root.entry(root).or_insert_with(|| {
            order.push(root);
            MatchGroup {
                images: Vec::new(),
                texts: Vec::new(),
                pairs: Vec::new(),
            }
        });
        g.pairs.push((i, j));
        g.images.push(i);
        g.texts.push(j);
    }

    let mut out = Components::default();
    for root in order {
        let mut g = by_root.remove(&root).expect("root recorded");
        g.images.sort_unstable();
        g.images.dedup();
        g.texts.sort_unstable();
        g.texts.dedup();
        if g.images.len() == 1 && g.texts.len() == 1 {
            out.one_to_one.push(g.pairs[0]);
        } else {
            out.groups.push(g);
        }
    }
    out
}

/// Block and page lookup used to price candidate pairings.
#[derive(Debug, Clone)]
pub struct Layout<'a> {
    blocks: HashMap<&'a str, &'a Block>,
    pages: HashMap<&'a str, &'a Page>,
}

impl<'a> Layout<'a> {
    pub fn new(blocks: &'a [Block], pages: &'a [Page]) -> Self {
        Layout {
            blocks: blocks.iter().map(|b| (b.id.as_str(), b)).collect(),
            pages: pages.iter().map(|p| (p.page_id.as_str(), p)).collect(),
        }
    }

    pub fn block(&self, id: &str) -> Result<&'a Block> {
        self.blocks
            .get(id)
            .copied()
            .ok_or_else(|| Error::Validation(format!("unknown block {id}")))
    }

    pub fn page(&self, id: &str) -> Result<&'a Page> {
        self.pages
            .get(id)
            .copied()
            .ok_or_else(|| Error::Validation(format!("unknown page {id}")))
    }

    /// Center distance for blocks on one page. Blocks on different pages cost
    /// `page gap × larger page diagonal + center distance`, which is never
    /// below any same-page distance.
    pub fn pair_cost(&self, image_id: &str, text_id: &str) -> Result<f64> {
        let (a, b) = (self.block(image_id)?, self.block(text_id)?);
        let d = center_distance_unchecked(&a.bbox, &b.bbox);
        if a.page_id == b.page_id {
            return Ok(d);
        }
        let (pa, pb) = (self.page(&a.page_id)?, self.page(&b.page_id)?);
        let gap = (pa.page_index as f64 - pb.page_index as f64).abs().max(1.0);
        Ok(gap * pa.diagonal().max(pb.diagonal()) + d)
    }
}

/// Distance matrix for a group: rows follow `group.images`, columns `group.texts`.
pub fn cost_matrix(
    group: &MatchGroup,
    images: &[AttributeRecord],
    texts: &[AttributeRecord],
    layout: &Layout<'_>,
) -> Result<Vec<Vec<f64>>> {
    group
        .images
        .iter()
        .map(|&i| {
            group
                .texts
                .iter()
                .map(|&j| layout.pair_cost(&images[i].block_id, &texts[j].block_id))
                .collect()
        })
        .collect()
}

/// A group together with its optimal assignment, as record-index pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedGroup {
    pub group: MatchGroup,
    pub assignment: Vec<(usize, usize)>,
    pub costs: Vec<f64>,
}

pub fn resolve_group(
    group: &MatchGroup,
    images: &[AttributeRecord],
    texts: &[AttributeRecord],
    layout: &Layout<'_>,
) -> Result<ResolvedGroup> {
    let d = cost_matrix(group, images, texts, layout)?;
    let solved = solve_assignment(&d)?;
    Ok(ResolvedGroup {
        assignment: solved
            .iter()
            .map(|&(r, c)| (group.images[r], group.texts[c]))
            .collect(),
        costs: solved.iter().map(|&(r, c)| d[r][c]).collect(),
        group: group.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnmatchedReason {
    /// The record could not be parsed.
    Unparsed,
    /// Parsed, but none of the foreign keys carried a value.
    NoForeignKeys,
    /// No record of the other modality shares the exact key set.
    NoCompleteMatch,
    /// Left over when a group had more records on one side.
    GroupLeftover,
    /// Removed during review.
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnmatchedBlock {
    pub block_id: String,
    pub modality: Modality,
    pub reason: UnmatchedReason,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MatchOutcome {
    pub pairs: Vec<MatchPair>,
    pub unmatched: Vec<UnmatchedBlock>,
}

/// Final pairs: one-to-one foreign-key pairs plus every group's assignment.
/// Records left without a partner are reported with the reason.
pub fn combine_matches(
    one_to_one: &[(usize, usize)],
    resolved: &[ResolvedGroup],
    images: &[AttributeRecord],
    texts: &[AttributeRecord],
    cfg: &ForeignKeyConfig,
) -> MatchOutcome {
    let mut pairs = Vec::with_capacity(one_to_one.len() + resolved.len());
    let mut img_done = vec![false; images.len()];
    let mut txt_done = vec![false; texts.len()];
    let mut leftover_img = vec![false; images.len()];
    let mut leftover_txt = vec![false; texts.len()];

    for &(i, j) in one_to_one {
        img_done[i] = true;
        txt_done[j] = true;
        pairs.push(MatchPair {
            image_block_id: images[i].block_id.clone(),
            text_block_id: texts[j].block_id.clone(),
            stage: MatchStage::ForeignKey,
            cost: 0.0,
        });
    }
    for r in resolved {
        r.group.images.iter().for_each(|&i| leftover_img[i] = true);
        r.group.texts.iter().for_each(|&j| leftover_txt[j] = true);
        for (&(i, j), &cost) in r.assignment.iter().zip(&r.costs) {
            img_done[i] = true;
            txt_done[j] = true;
            pairs.push(MatchPair {
                image_block_id: images[i].block_id.clone(),
                text_block_id: texts[j].block_id.clone(),
                stage: MatchStage::Bipartite,
                cost,
            });
        }
    }
    pairs.sort_by(|a, b| a.image_block_id.cmp(&b.image_block_id));

    let reason = |rec: &AttributeRecord, leftover: bool| {
        if leftover {
            UnmatchedReason::GroupLeftover
        } else if !rec.is_parsed() {
            UnmatchedReason::Unparsed
        } else if foreign_keys(rec, cfg).is_empty() {
            UnmatchedReason::NoForeignKeys
        } else {
            UnmatchedReason::NoCompleteMatch
        }
    };
    let mut unmatched = Vec::new();
    for (i, rec) in images.iter().enumerate().filter(|(i, _)| !img_done[*i]) {
        unmatched.push(UnmatchedBlock {
            block_id: rec.block_id.clone(),
            modality: Modality::Image,
            reason: reason(rec, leftover_img[i]),
        });
    }
    for (j, rec) in texts.iter().enumerate().filter(|(j, _)| !txt_done[*j]) {
        unmatched.push(UnmatchedBlock {
            block_id: rec.block_id.clone(),
            modality: Modality::Text,
            reason: reason(rec, leftover_txt[j]),
        });
    }
    MatchOutcome { pairs, unmatched }
}

/// Runs both matching stages end to end. Groups are solved under `exec`.
pub fn match_records(
    images: &[AttributeRecord],
    texts: &[AttributeRecord],
    layout: &Layout<'_>,
    cfg: &ForeignKeyConfig,
    exec: Execution,
) -> Result<MatchOutcome> {
    let candidates = foreign_key_match(images, texts, cfg);
    let components = group_components(&candidates);
    let resolved: Vec<ResolvedGroup> = par::map(exec, &components.groups, |g| {
        resolve_group(g, images, texts, layout)
    })
    .into_iter()
    .collect::<Result<_>>()?;
    Ok(combine_matches(
        &components.one_to_one,
        &resolved,
        images,
        texts,
        cfg,
    ))
}
