//! Superpixel segmentation by iterative clearcutting.
//!
//! Far more seeds than desired superpixels are sampled, an optimum-path
//! forest is grown from them over the 8-connected pixel graph, and the least
//! relevant seeds are discarded. Growing and pruning repeat on a bounded
//! exponential schedule until exactly `Nf` seeds remain, so the final
//! partition always has `Nf` connected superpixels. Intermediate partitions
//! can be kept to obtain a multiscale segmentation from a single run.
//!
//! An optional object saliency map steers which seeds survive but never
//! changes how a given seed set partitions the image.
//!
//! ```no_run
//! use sicle::{imgio, pipeline};
//!
//! let image = imgio::load_image("bird.ppm")?;
//! let config = pipeline::default_config().with_nf(200);
//! let result = pipeline::segment(&image, None, &config)?;
//! imgio::save_label_map(&result.final_map, "bird_200.pgm")?;
//! # Ok::<(), sicle::Error>(())
//! ```

pub mod cli;
pub mod error;
pub mod graph;
pub mod ift;
pub mod imgio;
pub mod metrics;
pub mod pipeline;
pub mod removal;
pub mod seeding;

pub use error::{Error, Result};
pub use ift::{run_ift, ArcCost, Forest, TreeStats};
pub use imgio::{Image, LabelMap, SaliencyMap};
pub use pipeline::{default_config, segment, SegmentationResult, SicleConfig};
