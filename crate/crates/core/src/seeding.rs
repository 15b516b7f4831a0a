//! Initial seed oversampling.
//!
//! GRID spreads seeds over a lattice whose per-axis counts follow the image's
//! aspect ratio; RND draws distinct pixels uniformly. Both return raster
//! indices. RND uses ChaCha8 seeded through `SeedableRng::seed_from_u64`, which
//! is specified independently of platform and word size.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Strategy {
    Grid,
    #[default]
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SamplingSpec {
    pub strategy: Strategy,
    pub n0: usize,
    pub rng_seed: u64,
}

impl Default for SamplingSpec {
    fn default() -> Self {
        SamplingSpec {
            strategy: Strategy::Random,
            n0: 3000,
            rng_seed: 0,
        }
    }
}

impl SamplingSpec {
    pub fn sample(&self, width: usize, height: usize) -> Result<Vec<usize>> {
        match self.strategy {
            Strategy::Grid => sample_grid(width, height, self.n0),
            Strategy::Random => sample_random(width, height, self.n0, self.rng_seed),
        }
    }
}

/// Per-axis seed counts `(k_x, k_y)` of the GRID layout.
pub fn grid_shape(width: usize, height: usize, n0: usize) -> Result<(usize, usize)> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidImage(format!(
            "degenerate dimensions {width}x{height}"
        )));
    }
    if n0 == 0 {
        return Err(Error::Config("n0 must be at least 1".into()));
    }
    let (w, h) = (width as f64, height as f64);
    let prop_x = w / (w + h);
    let prop_y = h / (w + h);
    let c = (n0 as f64 / (prop_x * prop_y)).sqrt();
    let round_half_up = |v: f64| (v + 0.5).floor() as usize;
    let kx = round_half_up(prop_x * c).clamp(1, width);
    let ky = round_half_up(prop_y * c).clamp(1, height);
    Ok((kx, ky))
}

/// Seeds at the centers of a `k_x * k_y` lattice of cells, row-major.
pub fn sample_grid(width: usize, height: usize, n0: usize) -> Result<Vec<usize>> {
    let (kx, ky) = grid_shape(width, height, n0)?;
    let stride_x = width as f64 / kx as f64;
    let stride_y = height as f64 / ky as f64;
    let mut seeds = Vec::with_capacity(kx * ky);
    for j in 0..ky {
        let y = ((j as f64 + 0.5) * stride_y).floor() as usize;
        for i in 0..kx {
            let x = ((i as f64 + 0.5) * stride_x).floor() as usize;
            seeds.push(y * width + x);
        }
    }
    Ok(seeds)
}

/// `n0` distinct pixels drawn uniformly without replacement, in draw order.
pub fn sample_random(width: usize, height: usize, n0: usize, rng_seed: u64) -> Result<Vec<usize>> {
    let n = width * height;
    if n == 0 {
        return Err(Error::InvalidImage(format!(
            "degenerate dimensions {width}x{height}"
        )));
    }
    if n0 == 0 || n0 > n {
        return Err(Error::Config(format!(
            "cannot draw {n0} seeds from {n} pixels"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    Ok(rand::seq::index::sample(&mut rng, n, n0).into_vec())
}
