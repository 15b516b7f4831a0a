//! Image, saliency and label-map containers plus their PNM I/O.
//!
//! Grayscale inputs keep a single intensity channel scaled to `[0, 1]`.
//! Color inputs are converted from sRGB (D65) to CIELAB, so feature distances
//! are perceptual. All rasters are row-major with a top-left origin.

pub mod color;
pub mod pnm;

use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::Topology;

pub use pnm::{Kind as PnmKind, Pnm};

/// A 2D lattice of per-pixel feature vectors in the working space.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    channels: usize,
    features: Vec<f64>,
    source_depth: u32,
}

impl Image {
    /// Builds an image from interleaved features (`channels` values per pixel).
    pub fn new(width: usize, height: usize, channels: usize, features: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!(
                "degenerate dimensions {width}x{height}"
            )));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidImage(format!(
                "{channels} channels, expected 1 or 3"
            )));
        }
        if features.len() != width * height * channels {
            return Err(Error::InvalidImage(format!(
                "{} feature values for {width}x{height}x{channels}",
                features.len()
            )));
        }
        if let Some(i) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidImage(format!(
                "non-finite feature at offset {i}"
            )));
        }
        Ok(Image {
            width,
            height,
            channels,
            features,
            source_depth: 64,
        })
    }

    pub fn gray(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        Image::new(width, height, 1, values)
    }

    /// Converts interleaved 8-bit sRGB samples to a CIELAB image.
    pub fn from_srgb8(width: usize, height: usize, rgb: &[u8]) -> Result<Self> {
        let samples: Vec<u16> = rgb.iter().map(|&v| v as u16).collect();
        Image::from_rgb_samples(width, height, &samples, 255)
    }

    fn from_rgb_samples(width: usize, height: usize, samples: &[u16], maxval: u32) -> Result<Self> {
        let scale = maxval as f64;
        let features = samples
            .chunks_exact(3)
            .flat_map(|px| color::srgb_to_lab([px[0], px[1], px[2]].map(|c| c as f64 / scale)))
            .collect();
        let mut image = Image::new(width, height, 3, features)?;
        image.source_depth = bit_depth(maxval);
        Ok(image)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// Number of pixels.
    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Bits per sample of the file the image was decoded from.
    pub fn source_depth(&self) -> u32 {
        self.source_depth
    }

    #[inline]
    pub fn feature(&self, index: usize) -> &[f64] {
        &self.features[index * self.channels..(index + 1) * self.channels]
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn topology(&self) -> Topology {
        Topology::eight_connected(self.width, self.height)
    }

    /// Display colors: Lab is converted back to sRGB, intensity is replicated.
    pub fn to_srgb8(&self) -> Vec<[u8; 3]> {
        (0..self.len())
            .map(|i| {
                let f = self.feature(i);
                let rgb = if self.channels == 3 {
                    color::lab_to_srgb([f[0], f[1], f[2]])
                } else {
                    let v = f[0].clamp(0.0, 1.0);
                    [v, v, v]
                };
                rgb.map(|c| (c * 255.0).round() as u8)
            })
            .collect()
    }
}

fn bit_depth(maxval: u32) -> u32 {
    32 - maxval.leading_zeros()
}

/// Loads a PGM (as scaled intensity) or PPM (as CIELAB).
pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    let pnm = pnm::read(path.as_ref())?;
    if pnm.channels() == 3 {
        Image::from_rgb_samples(pnm.width, pnm.height, &pnm.samples, pnm.maxval)
    } else {
        let scale = pnm.maxval as f64;
        let values = pnm.samples.iter().map(|&v| v as f64 / scale).collect();
        let mut image = Image::gray(pnm.width, pnm.height, values)?;
        image.source_depth = bit_depth(pnm.maxval);
        Ok(image)
    }
}

/// Writes an 8-bit PPM (three channels) or PGM (one channel).
pub fn save_image(image: &Image, path: impl AsRef<Path>) -> Result<()> {
    let pnm = if image.channels() == 3 {
        Pnm {
            kind: PnmKind::RawColor,
            width: image.width,
            height: image.height,
            maxval: 255,
            samples: image
                .to_srgb8()
                .into_iter()
                .flatten()
                .map(u16::from)
                .collect(),
        }
    } else {
        Pnm {
            kind: PnmKind::RawGray,
            width: image.width,
            height: image.height,
            maxval: 255,
            samples: image
                .features
                .iter()
                .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u16)
                .collect(),
        }
    };
    pnm::write(&pnm, path.as_ref())
}

/// Per-pixel object membership in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SaliencyMap {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl SaliencyMap {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "{} saliency values for {width}x{height}",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidImage(format!("saliency value {v} outside [0, 1]")));
        }
        Ok(SaliencyMap {
            width,
            height,
            values,
        })
    }

    /// Every pixel fully belongs to the object; object-modulated relevance then
    /// reduces to the plain criterion.
    pub fn uniform(dims: (usize, usize)) -> Self {
        SaliencyMap {
            width: dims.0,
            height: dims.1,
            values: vec![1.0; dims.0 * dims.1],
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, index: usize) -> f64 {
        self.values[index]
    }
}

/// Loads a PGM saliency map, dividing each sample by the file's maxval.
pub fn load_saliency(path: impl AsRef<Path>, dims: (usize, usize)) -> Result<SaliencyMap> {
    let pnm = pnm::read(path.as_ref())?;
    if pnm.channels() != 1 {
        return Err(Error::WrongKind {
            expected: "PGM",
            found: "PPM".into(),
        });
    }
    if (pnm.width, pnm.height) != dims {
        return Err(Error::DimensionMismatch {
            expected: dims,
            found: (pnm.width, pnm.height),
        });
    }
    let scale = pnm.maxval as f64;
    let values = pnm.samples.iter().map(|&v| v as f64 / scale).collect();
    SaliencyMap::new(pnm.width, pnm.height, values)
}

pub fn uniform_saliency(dims: (usize, usize)) -> SaliencyMap {
    SaliencyMap::uniform(dims)
}

/// Superpixel labels numbered contiguously from 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabelMap {
    width: usize,
    height: usize,
    labels: Vec<u32>,
    count: usize,
}

impl LabelMap {
    /// Validates that `labels` uses exactly the ids `1..=K`.
    pub fn new(width: usize, height: usize, labels: Vec<u32>) -> Result<Self> {
        if width == 0 || height == 0 || labels.len() != width * height {
            return Err(Error::InvalidLabels(format!(
                "{} labels for {width}x{height}",
                labels.len()
            )));
        }
        let max = *labels.iter().max().unwrap() as usize;
        if labels.contains(&0) {
            return Err(Error::InvalidLabels("label 0 is reserved".into()));
        }
        let mut seen = vec![false; max + 1];
        for &l in &labels {
            seen[l as usize] = true;
        }
        if let Some(missing) = (1..=max).find(|&l| !seen[l]) {
            return Err(Error::InvalidLabels(format!(
                "labels are not contiguous: {missing} is missing below {max}"
            )));
        }
        Ok(LabelMap {
            width,
            height,
            labels,
            count: max,
        })
    }

    /// Renumbers arbitrary region ids to `1..=K` in raster order of first appearance.
    pub fn relabeled(width: usize, height: usize, raw: &[u32]) -> Result<Self> {
        let mut mapping = std::collections::HashMap::new();
        let labels = raw
            .iter()
            .map(|&r| {
                let next = mapping.len() as u32 + 1;
                *mapping.entry(r).or_insert(next)
            })
            .collect();
        LabelMap::new(width, height, labels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    #[inline]
    pub fn get(&self, index: usize) -> u32 {
        self.labels[index]
    }

    /// Number of distinct superpixels K.
    pub fn num_labels(&self) -> usize {
        self.count
    }

    /// True when every label's pixels form a single 8-connected component.
    pub fn is_connected(&self) -> bool {
        let topo = Topology::eight_connected(self.width, self.height);
        let mut visited = vec![false; self.labels.len()];
        let mut seen_label = vec![false; self.count + 1];
        let mut stack = Vec::new();
        for start in 0..self.labels.len() {
            if visited[start] {
                continue;
            }
            let label = self.labels[start];
            if seen_label[label as usize] {
                return false;
            }
            seen_label[label as usize] = true;
            visited[start] = true;
            stack.push(start);
            while let Some(x) = stack.pop() {
                topo.for_each_neighbor(x, |y| {
                    if !visited[y] && self.labels[y] == label {
                        visited[y] = true;
                        stack.push(y);
                    }
                });
            }
        }
        true
    }

    /// True when `x` has a differently labeled pixel in its 8-neighborhood.
    pub fn is_border(&self, topo: &Topology, x: usize) -> bool {
        let label = self.labels[x];
        let mut border = false;
        topo.for_each_neighbor(x, |y| border |= self.labels[y] != label);
        border
    }
}

/// Writes a P5 PGM whose maxval is the largest label (16-bit samples above 255).
pub fn save_label_map(map: &LabelMap, path: impl AsRef<Path>) -> Result<()> {
    if map.count > 65535 {
        return Err(Error::TooManyLabels(map.count));
    }
    let pnm = Pnm {
        kind: PnmKind::RawGray,
        width: map.width,
        height: map.height,
        maxval: map.count as u32,
        samples: map.labels.iter().map(|&l| l as u16).collect(),
    };
    pnm::write(&pnm, path.as_ref())
}

/// Reads the raw region ids of a PGM without any scaling.
pub fn load_region_ids(path: impl AsRef<Path>) -> Result<(usize, usize, Vec<u32>)> {
    let pnm = pnm::read(path.as_ref())?;
    if pnm.channels() != 1 {
        return Err(Error::WrongKind {
            expected: "PGM",
            found: "PPM".into(),
        });
    }
    let ids = pnm.samples.iter().map(|&v| v as u32).collect();
    Ok((pnm.width, pnm.height, ids))
}

/// Loads a label map written by [`save_label_map`]; labels must already be `1..=K`.
pub fn load_label_map(path: impl AsRef<Path>) -> Result<LabelMap> {
    let (w, h, ids) = load_region_ids(path)?;
    LabelMap::new(w, h, ids)
}

/// Paints every pixel whose 8-neighborhood crosses a label boundary with `color` (sRGB).
pub fn render_overlay(image: &Image, map: &LabelMap, color: [u8; 3]) -> Result<Image> {
    if image.dims() != map.dims() {
        return Err(Error::DimensionMismatch {
            expected: image.dims(),
            found: map.dims(),
        });
    }
    let topo = image.topology();
    let border = color::srgb_to_lab(color.map(|c| c as f64 / 255.0));
    let mut features = Vec::with_capacity(image.len() * 3);
    for x in 0..image.len() {
        if map.is_border(&topo, x) {
            features.extend_from_slice(&border);
        } else if image.channels() == 3 {
            features.extend_from_slice(image.feature(x));
        } else {
            let v = image.feature(x)[0].clamp(0.0, 1.0);
            features.extend_from_slice(&color::srgb_to_lab([v, v, v]));
        }
    }
    let mut out = Image::new(image.width, image.height, 3, features)?;
    out.source_depth = image.source_depth;
    Ok(out)
}
