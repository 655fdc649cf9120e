use std::cmp::Ordering;

use crate::geometry::{iou_unchecked, BoundingBox};

/// Greedy non-maximum suppression over `(box, score)` pairs.
///
/// Candidates are visited by descending score (ties: top-to-bottom, then
/// left-to-right); a candidate is dropped when its IoU with an already kept box
/// exceeds `iou_threshold`. Returns indices of the kept candidates.
pub fn suppress(candidates: &[(BoundingBox, f64)], iou_threshold: f64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| {
        let (ba, sa) = candidates[a];
        let (bb, sb) = candidates[b];
        sb.total_cmp(&sa)
            .then_with(|| reading_order(&ba, &bb))
            .then(a.cmp(&b))
    });

    let mut kept: Vec<usize> = Vec::new();
    for idx in order {
        let b = &candidates[idx].0;
        if kept
            .iter()
            .all(|&k| iou_unchecked(&candidates[k].0, b) <= iou_threshold)
        {
            kept.push(idx);
        }
    }
    kept
}

/// Top-to-bottom then left-to-right by center; extents break exact ties.
pub fn reading_order(a: &BoundingBox, b: &BoundingBox) -> Ordering {
    a.y_c
        .total_cmp(&b.y_c)
        .then(a.x_c.total_cmp(&b.x_c))
        .then(a.w.total_cmp(&b.w))
        .then(a.h.total_cmp(&b.h))
}
