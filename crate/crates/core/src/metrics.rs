//! Boundary Recall and Under-segmentation Error against a region ground truth.

use std::collections::HashMap;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Topology;
use crate::imgio::{self, LabelMap};

/// Default boundary-matching tolerance in pixels.
pub const DEFAULT_TOLERANCE: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruth {
    width: usize,
    height: usize,
    regions: Vec<u32>,
}

impl GroundTruth {
    pub fn new(width: usize, height: usize, regions: Vec<u32>) -> Result<Self> {
        if width == 0 || height == 0 || regions.len() != width * height {
            return Err(Error::InvalidLabels(format!(
                "{} region ids for {width}x{height}",
                regions.len()
            )));
        }
        Ok(GroundTruth {
            width,
            height,
            regions,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn regions(&self) -> &[u32] {
        &self.regions
    }
}

/// Loads a PGM whose sample values are region ids (e.g. 0/255 masks).
pub fn load_ground_truth(path: impl AsRef<Path>) -> Result<GroundTruth> {
    let (w, h, ids) = imgio::load_region_ids(path)?;
    GroundTruth::new(w, h, ids)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricsReport {
    pub br: f64,
    pub ue: f64,
    pub superpixel_count: usize,
}

fn check_dims(map: &LabelMap, gt: &GroundTruth) -> Result<()> {
    if map.dims() != gt.dims() {
        return Err(Error::DimensionMismatch {
            expected: gt.dims(),
            found: map.dims(),
        });
    }
    Ok(())
}

fn border_mask(width: usize, height: usize, ids: &[u32]) -> Vec<bool> {
    let topo = Topology::eight_connected(width, height);
    (0..ids.len())
        .map(|x| {
            let mut border = false;
            topo.for_each_neighbor(x, |y| border |= ids[y] != ids[x]);
            border
        })
        .collect()
}

/// Fraction of ground-truth boundary pixels with a superpixel border pixel
/// within Chebyshev distance `tolerance`. A ground truth without boundaries
/// scores 1.
pub fn boundary_recall(map: &LabelMap, gt: &GroundTruth, tolerance: usize) -> Result<f64> {
    check_dims(map, gt)?;
    let (w, h) = gt.dims();
    let gt_border = border_mask(w, h, &gt.regions);
    let sp_border = border_mask(w, h, map.labels());

    // summed-area table of superpixel borders for O(1) window queries
    let mut sat = vec![0u32; (w + 1) * (h + 1)];
    for y in 0..h {
        let mut row = 0u32;
        for x in 0..w {
            row += sp_border[y * w + x] as u32;
            sat[(y + 1) * (w + 1) + x + 1] = sat[y * (w + 1) + x + 1] + row;
        }
    }
    let window = |x: usize, y: usize| {
        let (x0, y0) = (x.saturating_sub(tolerance), y.saturating_sub(tolerance));
        let (x1, y1) = ((x + tolerance).min(w - 1) + 1, (y + tolerance).min(h - 1) + 1);
        sat[y1 * (w + 1) + x1] + sat[y0 * (w + 1) + x0]
            - sat[y0 * (w + 1) + x1]
            - sat[y1 * (w + 1) + x0]
    };

    let mut total = 0usize;
    let mut hit = 0usize;
    for (i, _) in gt_border.iter().enumerate().filter(|(_, &b)| b) {
        total += 1;
        if window(i % w, i / w) > 0 {
            hit += 1;
        }
    }
    Ok(if total == 0 {
        1.0
    } else {
        hit as f64 / total as f64
    })
}

/// `(1/|V|) * sum over regions G and superpixels S meeting G of min(|S ∩ G|, |S \ G|)`.
pub fn under_segmentation_error(map: &LabelMap, gt: &GroundTruth) -> Result<f64> {
    check_dims(map, gt)?;
    let mut sp_size = vec![0usize; map.num_labels() + 1];
    let mut overlap: HashMap<(u32, u32), usize> = HashMap::new();
    for (&s, &g) in map.labels().iter().zip(&gt.regions) {
        sp_size[s as usize] += 1;
        *overlap.entry((s, g)).or_default() += 1;
    }
    let leaked: usize = overlap
        .iter()
        .map(|(&(s, _), &inside)| inside.min(sp_size[s as usize] - inside))
        .sum();
    Ok(leaked as f64 / gt.regions.len() as f64)
}

pub fn evaluate(map: &LabelMap, gt: &GroundTruth, tolerance: usize) -> Result<MetricsReport> {
    Ok(MetricsReport {
        br: boundary_recall(map, gt, tolerance)?,
        ue: under_segmentation_error(map, gt)?,
        superpixel_count: map.num_labels(),
    })
}
