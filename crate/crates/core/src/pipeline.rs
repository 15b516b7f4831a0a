//! Oversample -> grow forest -> prune seeds, until exactly Nf superpixels remain.

use std::collections::{BTreeMap, BTreeSet};

use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use crate::error::{Error, Result};
use crate::ift::{run_ift, ArcCost};
use crate::imgio::{Image, LabelMap, SaliencyMap};
use crate::removal::{seeds_to_keep, select_survivors, Decay, Relevance, Schedule};
use crate::seeding::{SamplingSpec, Strategy};

/// Default number of superpixels when none is requested.
pub const DEFAULT_NF: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct SicleConfig {
    pub sampling: SamplingSpec,
    pub mode: ArcCost,
    pub criterion: Relevance,
    pub schedule: Schedule,
    /// Superpixel counts to snapshot on the way down; Nf is always emitted.
    pub emit_scales: BTreeSet<usize>,
}

/// RND oversampling of 3000 seeds, ROOT arc costs, size-times-min-contrast
/// relevance with object modulation, and at most five forests.
pub fn default_config() -> SicleConfig {
    SicleConfig {
        sampling: SamplingSpec {
            strategy: Strategy::Random,
            n0: 3000,
            rng_seed: 0,
        },
        mode: ArcCost::Root,
        criterion: Relevance::default(),
        schedule: Schedule::curve(3000, DEFAULT_NF, 5),
        emit_scales: BTreeSet::new(),
    }
}

impl Default for SicleConfig {
    fn default() -> Self {
        default_config()
    }
}

impl SicleConfig {
    /// Sets N0 on both the sampler and the schedule.
    pub fn with_n0(mut self, n0: usize) -> Self {
        self.sampling.n0 = n0;
        self.schedule.n0 = n0;
        self
    }

    pub fn with_nf(mut self, nf: usize) -> Self {
        self.schedule.nf = nf;
        self
    }

    pub fn nf(&self) -> usize {
        self.schedule.nf
    }

    pub fn validate(&self) -> Result<()> {
        if self.sampling.n0 != self.schedule.n0 {
            return Err(Error::Config(format!(
                "sampler n0 ({}) differs from schedule n0 ({})",
                self.sampling.n0, self.schedule.n0
            )));
        }
        self.schedule.validate()?;
        let (nf, n0) = (self.schedule.nf, self.schedule.n0);
        if let Some(&k) = self.emit_scales.iter().find(|&&k| k < nf || k > n0) {
            return Err(Error::Config(format!(
                "scale {k} lies outside [nf, n0] = [{nf}, {n0}]"
            )));
        }
        if let Decay::Explicit(list) = &self.schedule.decay {
            if let Some(&k) = self
                .emit_scales
                .iter()
                .find(|&&k| k != n0 && !list.contains(&k))
            {
                return Err(Error::Config(format!(
                    "scale {k} is not produced by the explicit schedule {list:?}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentationResult {
    /// The Nf-superpixel partition.
    pub final_map: LabelMap,
    /// Snapshot per emitted superpixel count (always includes Nf).
    pub scales: BTreeMap<usize, LabelMap>,
    /// Number of forests grown.
    pub iterations_run: usize,
    /// Seed count of each forest, strictly decreasing.
    pub seed_counts: Vec<usize>,
    /// Seed pixels of each forest.
    pub seed_history: Vec<Vec<usize>>,
}

/// Next survivor count after `iteration`, or `None` while the schedule would
/// not remove anything.
fn next_target(
    config: &SicleConfig,
    iteration: usize,
    current: usize,
    pending: &BTreeSet<usize>,
) -> Option<usize> {
    let mut target = seeds_to_keep(&config.schedule, iteration);
    if !matches!(config.schedule.decay, Decay::Explicit(_)) {
        // never jump past a requested scale
        if let Some(&scale) = pending.range(..current).next_back() {
            target = target.max(scale);
        }
    }
    let target = target.min(current).max(config.schedule.nf);
    (target < current).then_some(target)
}

/// Runs the full pipeline on one image. Without a saliency map every pixel is
/// treated as fully object, which makes object modulation a no-op.
pub fn segment(
    image: &Image,
    saliency: Option<&SaliencyMap>,
    config: &SicleConfig,
) -> Result<SegmentationResult> {
    config.validate()?;
    let uniform;
    let saliency = match saliency {
        Some(s) => {
            if s.dims() != image.dims() {
                return Err(Error::DimensionMismatch {
                    expected: image.dims(),
                    found: s.dims(),
                });
            }
            s
        }
        None => {
            uniform = SaliencyMap::uniform(image.dims());
            &uniform
        }
    };
    let (width, height) = image.dims();
    let nf = config.schedule.nf;
    if nf > image.len() {
        return Err(Error::Config(format!(
            "nf ({nf}) exceeds the pixel count ({})",
            image.len()
        )));
    }

    let mut seeds = config.sampling.sample(width, height)?;
    if seeds.len() < nf {
        return Err(Error::Config(format!(
            "sampling produced {} seeds, fewer than nf ({nf})",
            seeds.len()
        )));
    }
    if let Some(&k) = config.emit_scales.range(seeds.len() + 1..).next() {
        return Err(Error::Config(format!(
            "scale {k} exceeds the {} seeds actually sampled",
            seeds.len()
        )));
    }

    let mut pending: BTreeSet<usize> = config.emit_scales.clone();
    pending.insert(nf);
    let topology = image.topology();
    let mut rng = ChaCha8Rng::seed_from_u64(config.sampling.rng_seed);
    rng.set_stream(1);

    let mut scales = BTreeMap::new();
    let mut seed_counts = Vec::new();
    let mut seed_history = Vec::new();
    let mut schedule_step = 1;

    loop {
        let (forest, stats) = run_ift(image, &topology, &seeds, config.mode, saliency)?;
        seed_counts.push(seeds.len());
        seed_history.push(seeds.clone());

        if pending.remove(&seeds.len()) {
            scales.insert(seeds.len(), forest.to_label_map(width, height)?);
        }
        if seeds.len() == nf {
            break;
        }

        let target = loop {
            let step = schedule_step;
            schedule_step += 1;
            if let Some(t) = next_target(config, step, seeds.len(), &pending) {
                break t;
            }
        };
        let survivors = select_survivors(&stats, config.criterion, target, &mut rng)?;
        seeds = survivors.into_iter().map(|id| seeds[id]).collect();
    }

    Ok(SegmentationResult {
        final_map: scales[&nf].clone(),
        scales,
        iterations_run: seed_counts.len(),
        seed_counts,
        seed_history,
    })
}
