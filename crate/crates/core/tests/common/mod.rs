#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sicle::Image;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Left half 0.25, right half 0.75.
pub fn two_regions(w: usize, h: usize) -> (Image, Vec<u32>) {
    let regions: Vec<u32> = (0..w * h).map(|i| u32::from(i % w >= w / 2)).collect();
    let values = regions.iter().map(|&r| 0.25 + 0.5 * r as f64).collect();
    (Image::gray(w, h, values).unwrap(), regions)
}

/// Bright disk of `radius` centered in a dark background, contrast 0.5.
pub fn disk(w: usize, h: usize, radius: f64) -> (Image, Vec<u32>) {
    let (cx, cy) = ((w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0);
    let regions: Vec<u32> = (0..w * h)
        .map(|i| {
            let (x, y) = ((i % w) as f64 - cx, (i / w) as f64 - cy);
            u32::from(x * x + y * y <= radius * radius)
        })
        .collect();
    let values = regions.iter().map(|&r| 0.25 + 0.5 * r as f64).collect();
    (Image::gray(w, h, values).unwrap(), regions)
}

/// Colored scene: smooth gradient, a few ellipses and mild noise, as 8-bit sRGB.
pub fn scene_rgb(w: usize, h: usize, seed: u64) -> Vec<u8> {
    let mut r = rng(seed);
    let blobs: Vec<(f64, f64, f64, f64, [f64; 3])> = (0..6)
        .map(|_| {
            (
                r.random_range(0.0..w as f64),
                r.random_range(0.0..h as f64),
                r.random_range(w as f64 / 12.0..w as f64 / 4.0),
                r.random_range(h as f64 / 12.0..h as f64 / 4.0),
                [r.random(), r.random(), r.random()],
            )
        })
        .collect();
    let mut out = Vec::with_capacity(w * h * 3);
    for y in 0..h {
        for x in 0..w {
            let mut c = [
                0.2 + 0.5 * x as f64 / w as f64,
                0.3 + 0.4 * y as f64 / h as f64,
                0.5,
            ];
            for &(bx, by, rx, ry, color) in &blobs {
                let (dx, dy) = ((x as f64 - bx) / rx, (y as f64 - by) / ry);
                if dx * dx + dy * dy <= 1.0 {
                    c = color;
                }
            }
            for v in c {
                let noisy = v + r.random_range(-0.03..0.03);
                out.push((noisy.clamp(0.0, 1.0) * 255.0).round() as u8);
            }
        }
    }
    out
}

pub fn scene(w: usize, h: usize, seed: u64) -> Image {
    Image::from_srgb8(w, h, &scene_rgb(w, h, seed)).unwrap()
}

pub fn write_ppm(path: &std::path::Path, w: usize, h: usize, rgb: &[u8]) {
    let mut bytes = format!("P6\n{w} {h}\n255\n").into_bytes();
    bytes.extend_from_slice(rgb);
    std::fs::write(path, bytes).unwrap();
}

pub fn write_pgm(path: &std::path::Path, w: usize, h: usize, samples: &[u8]) {
    let mut bytes = format!("P5\n{w} {h}\n255\n").into_bytes();
    bytes.extend_from_slice(samples);
    std::fs::write(path, bytes).unwrap();
}
