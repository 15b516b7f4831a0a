//! Image digraph over the pixel lattice.
//!
//! Vertices are raster indices `y * width + x`. Arcs join every pair of
//! distinct pixels within Euclidean distance `radius`; `radius = sqrt(2)`
//! gives the 8-neighborhood used throughout the pipeline.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    width: usize,
    height: usize,
    radius: f64,
    /// (dx, dy) in row-major scan order of the offset window.
    offsets: Vec<(isize, isize)>,
}

impl Topology {
    pub fn new(width: usize, height: usize, radius: f64) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!(
                "degenerate dimensions {width}x{height}"
            )));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::Config(format!("adjacency radius {radius} must be > 0")));
        }
        let reach = radius.floor() as isize;
        let limit = radius * radius + 1e-9;
        let mut offsets = Vec::new();
        for dy in -reach..=reach {
            for dx in -reach..=reach {
                if (dx, dy) != (0, 0) && ((dx * dx + dy * dy) as f64) <= limit {
                    offsets.push((dx, dy));
                }
            }
        }
        Ok(Topology {
            width,
            height,
            radius,
            offsets,
        })
    }

    pub fn eight_connected(width: usize, height: usize) -> Self {
        Topology::new(width, height, std::f64::consts::SQRT_2).expect("valid lattice")
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

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Size of the offset window, i.e. the neighbor count of an interior vertex.
    pub fn max_degree(&self) -> usize {
        self.offsets.len()
    }

    /// Calls `f` on each neighbor of `x` in the fixed offset order.
    #[inline]
    pub fn for_each_neighbor(&self, x: usize, mut f: impl FnMut(usize)) {
        let (w, h) = (self.width as isize, self.height as isize);
        let px = (x % self.width) as isize;
        let py = (x / self.width) as isize;
        for &(dx, dy) in &self.offsets {
            let (nx, ny) = (px + dx, py + dy);
            if nx >= 0 && ny >= 0 && nx < w && ny < h {
                f((ny * w + nx) as usize);
            }
        }
    }

    pub fn neighbors(&self, x: usize) -> Result<Vec<usize>> {
        if x >= self.len() {
            return Err(Error::OutOfRange {
                index: x,
                len: self.len(),
            });
        }
        let mut out = Vec::with_capacity(self.offsets.len());
        self.for_each_neighbor(x, |y| out.push(y));
        Ok(out)
    }
}
