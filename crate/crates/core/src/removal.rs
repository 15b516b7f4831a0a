//! Seed relevance scoring and the per-iteration survivor schedule.
//!
//! After each forest is grown, every seed is scored from its tree: relative
//! size, color contrast against adjacent trees, their products, or a random
//! baseline. Optionally the score is scaled by how object-like the tree is
//! according to the saliency map. The best `N(i)` seeds survive unchanged
//! into the next iteration.

use rand::Rng;

use crate::error::{Error, Result};
use crate::ift::TreeStats;

/// How many seeds survive each iteration.
#[derive(Debug, Clone, PartialEq)]
pub enum Decay {
    /// `N(i) = max(N0^(1 - w*i), Nf)` with `w = 1 / (cap - 1)`, reaching Nf after at most `cap` forests.
    Curve { omega_cap: usize },
    /// `w = 1 / ln N0`, i.e. `N(i) = N0 * e^-i`.
    Disf,
    /// Survivor counts listed per iteration; strictly decreasing and ending at Nf.
    Explicit(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub n0: usize,
    pub nf: usize,
    pub decay: Decay,
}

impl Schedule {
    pub fn curve(n0: usize, nf: usize, omega_cap: usize) -> Self {
        Schedule {
            n0,
            nf,
            decay: Decay::Curve { omega_cap },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nf < 1 {
            return Err(Error::Config("nf must be at least 1".into()));
        }
        if self.nf > self.n0 {
            return Err(Error::Config(format!(
                "nf ({}) exceeds n0 ({})",
                self.nf, self.n0
            )));
        }
        match &self.decay {
            Decay::Curve { omega_cap } if *omega_cap < 2 => Err(Error::Config(format!(
                "iteration cap must be at least 2, got {omega_cap}"
            ))),
            Decay::Explicit(scales) => {
                if scales.is_empty() {
                    return Err(Error::Config("explicit schedule is empty".into()));
                }
                if scales.windows(2).any(|w| w[0] <= w[1]) {
                    return Err(Error::Config(format!(
                        "explicit schedule {scales:?} is not strictly decreasing"
                    )));
                }
                if scales[0] > self.n0 {
                    return Err(Error::Config(format!(
                        "explicit schedule starts above n0 ({})",
                        self.n0
                    )));
                }
                if *scales.last().unwrap() != self.nf {
                    return Err(Error::Config(format!(
                        "explicit schedule must end at nf ({})",
                        self.nf
                    )));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// The decay rate `w`; `None` for explicit schedules.
    pub fn omega(&self) -> Option<f64> {
        match self.decay {
            Decay::Curve { omega_cap } => Some(1.0 / (omega_cap as f64 - 1.0)),
            Decay::Disf => Some(1.0 / (self.n0 as f64).ln()),
            Decay::Explicit(_) => None,
        }
    }
}

fn round_half_up(v: f64) -> usize {
    (v + 0.5).floor() as usize
}

/// Number of seeds to keep after iteration `i` (1-based).
pub fn seeds_to_keep(schedule: &Schedule, iteration: usize) -> usize {
    let i = iteration.max(1);
    match &schedule.decay {
        Decay::Explicit(scales) => scales[(i - 1).min(scales.len() - 1)],
        _ => {
            let omega = schedule.omega().expect("curve schedules have a rate");
            let exponent = 1.0 - omega * i as f64;
            if schedule.n0 <= 1 {
                return schedule.nf;
            }
            let target = ((schedule.n0 as f64).ln() * exponent).exp();
            round_half_up(target).max(schedule.nf)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Criterion {
    Size,
    MinContrast,
    MaxContrast,
    #[default]
    MinSizeContrast,
    MaxSizeContrast,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Relevance {
    pub base: Criterion,
    pub object_modulated: bool,
}

impl Default for Relevance {
    fn default() -> Self {
        Relevance {
            base: Criterion::MinSizeContrast,
            object_modulated: true,
        }
    }
}

fn feature_contrast(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Precomputed tree means shared by all relevance evaluations of one forest.
struct Means {
    features: Vec<Vec<f64>>,
    saliency: Vec<f64>,
}

impl Means {
    fn new(stats: &[TreeStats]) -> Result<Self> {
        Ok(Means {
            features: stats
                .iter()
                .map(TreeStats::mean_features)
                .collect::<Result<_>>()?,
            saliency: stats.iter().map(TreeStats::mean_saliency).collect(),
        })
    }

    /// Min and max feature contrast against adjacent trees; `(0, 0)` when isolated.
    fn contrast_range(&self, seed: usize, stats: &[TreeStats]) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for &t in &stats[seed].neighbors {
            let g = feature_contrast(&self.features[seed], &self.features[t]);
            lo = lo.min(g);
            hi = hi.max(g);
        }
        if stats[seed].neighbors.is_empty() {
            (0.0, 0.0)
        } else {
            (lo, hi)
        }
    }

    fn object_factor(&self, seed: usize, stats: &[TreeStats]) -> f64 {
        let own = self.saliency[seed];
        stats[seed]
            .neighbors
            .iter()
            .map(|&t| (own - self.saliency[t]).abs())
            .fold(own, f64::max)
    }

    fn score(
        &self,
        seed: usize,
        stats: &[TreeStats],
        criterion: Relevance,
        total_pixels: usize,
        rng: &mut impl Rng,
    ) -> f64 {
        let size = stats[seed].size as f64 / total_pixels as f64;
        let base = match criterion.base {
            Criterion::Size => size,
            Criterion::MinContrast => self.contrast_range(seed, stats).0,
            Criterion::MaxContrast => self.contrast_range(seed, stats).1,
            Criterion::MinSizeContrast => size * self.contrast_range(seed, stats).0,
            Criterion::MaxSizeContrast => size * self.contrast_range(seed, stats).1,
            Criterion::Random => rng.random::<f64>(),
        };
        if criterion.object_modulated {
            base * self.object_factor(seed, stats)
        } else {
            base
        }
    }
}

/// Relevance of one seed given all trees of the same forest.
pub fn relevance(
    seed: usize,
    stats: &[TreeStats],
    criterion: Relevance,
    total_pixels: usize,
    rng: &mut impl Rng,
) -> Result<f64> {
    if seed >= stats.len() {
        return Err(Error::OutOfRange {
            index: seed,
            len: stats.len(),
        });
    }
    if total_pixels == 0 {
        return Err(Error::Config("total pixel count is zero".into()));
    }
    Ok(Means::new(stats)?.score(seed, stats, criterion, total_pixels, rng))
}

/// Relevance of every seed, in seed order.
pub fn relevances(
    stats: &[TreeStats],
    criterion: Relevance,
    rng: &mut impl Rng,
) -> Result<Vec<f64>> {
    let total: usize = stats.iter().map(|s| s.size).sum();
    if total == 0 {
        return Err(Error::EmptyTree);
    }
    let means = Means::new(stats)?;
    Ok((0..stats.len())
        .map(|s| means.score(s, stats, criterion, total, rng))
        .collect())
}

fn check_keep(keep: usize, seeds: usize) -> Result<()> {
    if keep == 0 {
        return Err(Error::Config("must keep at least one seed".into()));
    }
    if keep > seeds {
        return Err(Error::Config(format!("cannot keep {keep} of {seeds} seeds")));
    }
    Ok(())
}

/// Ids of the `keep` highest scores, ascending; ties go to the lower id.
pub fn top_k(scores: &[f64], keep: usize) -> Result<Vec<usize>> {
    check_keep(keep, scores.len())?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(keep);
    order.sort_unstable();
    Ok(order)
}

/// Chooses the `keep` most relevant seeds of a forest.
pub fn select_survivors(
    stats: &[TreeStats],
    criterion: Relevance,
    keep: usize,
    rng: &mut impl Rng,
) -> Result<Vec<usize>> {
    check_keep(keep, stats.len())?;
    top_k(&relevances(stats, criterion, rng)?, keep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    fn tree(size: usize, feat: f64, sal: f64, neighbors: Vec<usize>) -> TreeStats {
        TreeStats {
            size,
            feat_sum: vec![feat * size as f64],
            sal_sum: sal * size as f64,
            neighbors,
        }
    }

    const ALL: [Criterion; 6] = [
        Criterion::Size,
        Criterion::MinContrast,
        Criterion::MaxContrast,
        Criterion::MinSizeContrast,
        Criterion::MaxSizeContrast,
        Criterion::Random,
    ];

    fn plain(base: Criterion) -> Relevance {
        Relevance {
            base,
            object_modulated: false,
        }
    }

    #[test]
    fn curve_schedule() {
        let s = Schedule::curve(3000, 25, 5);
        assert_eq!(s.omega(), Some(0.25));
        assert_eq!(seeds_to_keep(&s, 1), 405);
        assert_eq!(seeds_to_keep(&s, 2), 55);
        assert_eq!(seeds_to_keep(&s, 3), 25);
        assert_eq!(seeds_to_keep(&s, 4), 25);
        assert_eq!(seeds_to_keep(&Schedule::curve(3000, 3, 5), 4), 3);
    }

    #[test]
    fn disf_schedule() {
        let s = Schedule {
            n0: 1000,
            nf: 5,
            decay: Decay::Disf,
        };
        assert_eq!(seeds_to_keep(&s, 1), 368);
        assert_eq!(seeds_to_keep(&s, 2), 135);
        assert_eq!(seeds_to_keep(&s, 6), 5);
        for i in 1..8 {
            let general = (1000f64).powf(1.0 - i as f64 / (1000f64).ln());
            let direct = 1000.0 * (-(i as f64)).exp();
            assert!((general - direct).abs() < 1e-9);
        }
    }

    #[test]
    fn explicit_schedule() {
        let s = Schedule {
            n0: 3000,
            nf: 25,
            decay: Decay::Explicit(vec![500, 100, 25]),
        };
        s.validate().unwrap();
        assert_eq!(
            (1..=5).map(|i| seeds_to_keep(&s, i)).collect::<Vec<_>>(),
            vec![500, 100, 25, 25, 25]
        );
        let bad = Schedule {
            decay: Decay::Explicit(vec![100, 500, 25]),
            ..s.clone()
        };
        assert!(bad.validate().is_err());
        let bad = Schedule {
            decay: Decay::Explicit(vec![500, 100]),
            ..s
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn schedule_validation() {
        assert!(Schedule::curve(10, 20, 5).validate().is_err());
        assert!(Schedule::curve(10, 0, 5).validate().is_err());
        assert!(Schedule::curve(10, 2, 1).validate().is_err());
        assert!(Schedule::curve(10, 10, 2).validate().is_ok());
    }

    #[test]
    fn size_of_sole_tree_is_one() {
        let stats = vec![tree(16, 0.3, 1.0, vec![])];
        let r = relevance(0, &stats, plain(Criterion::Size), 16, &mut rng()).unwrap();
        assert_eq!(r, 1.0);
    }

    #[test]
    fn contrast_criteria_on_two_trees() {
        let stats = vec![tree(12, 0.0, 1.0, vec![1]), tree(4, 1.0, 1.0, vec![0])];
        for s in 0..2 {
            let r = relevance(s, &stats, plain(Criterion::MinContrast), 16, &mut rng()).unwrap();
            assert_eq!(r, 1.0);
        }
        let r = relevance(0, &stats, plain(Criterion::MinSizeContrast), 16, &mut rng()).unwrap();
        assert_eq!(r, 0.75);
        let r = relevance(1, &stats, plain(Criterion::MaxSizeContrast), 16, &mut rng()).unwrap();
        assert_eq!(r, 0.25);
    }

    #[test]
    fn isolated_tree_has_zero_contrast() {
        let stats = vec![tree(5, 0.2, 1.0, vec![])];
        for base in [Criterion::MinContrast, Criterion::MaxSizeContrast] {
            assert_eq!(relevance(0, &stats, plain(base), 5, &mut rng()).unwrap(), 0.0);
        }
    }

    #[test]
    fn object_factor_uses_saliency_contrast() {
        // own mean 0.1, neighbor 0.9 -> factor max(0.1, 0.8) = 0.8
        let stats = vec![tree(8, 0.0, 0.1, vec![1]), tree(8, 1.0, 0.9, vec![0])];
        let crit = Relevance {
            base: Criterion::Size,
            object_modulated: true,
        };
        let r = relevance(0, &stats, crit, 16, &mut rng()).unwrap();
        assert!((r - 0.5 * 0.8).abs() < 1e-12);
        let r = relevance(1, &stats, crit, 16, &mut rng()).unwrap();
        assert!((r - 0.5 * 0.9).abs() < 1e-12);
    }

    #[test]
    fn survivors() {
        assert_eq!(top_k(&[0.9, 0.1, 0.5], 2).unwrap(), vec![0, 2]);
        assert_eq!(top_k(&[0.3; 6], 4).unwrap(), vec![0, 1, 2, 3]);
        assert_eq!(top_k(&[0.1, 0.2, 0.3], 3).unwrap(), vec![0, 1, 2]);
        assert!(top_k(&[0.1], 0).is_err());
        let stats = vec![tree(3, 0.0, 1.0, vec![1]), tree(1, 1.0, 1.0, vec![0])];
        assert_eq!(
            select_survivors(&stats, plain(Criterion::Size), 1, &mut rng()).unwrap(),
            vec![0]
        );
        assert!(select_survivors(&stats, plain(Criterion::Size), 0, &mut rng()).is_err());
        assert!(select_survivors(&stats, plain(Criterion::Size), 3, &mut rng()).is_err());
    }

    fn forest_stats() -> impl proptest::strategy::Strategy<Value = Vec<TreeStats>> {
        (2usize..12).prop_flat_map(|n| {
            (
                prop::collection::vec((1usize..50, 0.0f64..1.0, 0.0f64..=1.0), n),
                prop::collection::vec(prop::collection::vec(0..n, 0..4), n),
            )
                .prop_map(move |(trees, adj)| {
                    let mut neighbors = vec![Vec::new(); n];
                    for (s, list) in adj.into_iter().enumerate() {
                        for t in list {
                            if t != s {
                                neighbors[s].push(t);
                                neighbors[t].push(s);
                            }
                        }
                    }
                    trees
                        .into_iter()
                        .zip(neighbors)
                        .map(|((size, f, o), mut nb)| {
                            nb.sort_unstable();
                            nb.dedup();
                            tree(size, f, o, nb)
                        })
                        .collect()
                })
        })
    }

    proptest! {
        #[test]
        fn uniform_saliency_is_neutral(stats in forest_stats()) {
            let uniform: Vec<TreeStats> = stats
                .iter()
                .map(|t| TreeStats { sal_sum: t.size as f64, ..t.clone() })
                .collect();
            for base in ALL {
                let plain_scores = relevances(&uniform, plain(base), &mut rng()).unwrap();
                let modulated = relevances(
                    &uniform,
                    Relevance { base, object_modulated: true },
                    &mut rng(),
                )
                .unwrap();
                prop_assert_eq!(
                    plain_scores.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                    modulated.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
                );
            }
        }

        #[test]
        fn relevance_finite_and_nonnegative(stats in forest_stats(), modulated in any::<bool>()) {
            for base in ALL {
                let crit = Relevance { base, object_modulated: modulated };
                for r in relevances(&stats, crit, &mut rng()).unwrap() {
                    prop_assert!(r.is_finite() && r >= 0.0);
                }
            }
        }

        #[test]
        fn size_ranking_is_scale_invariant(stats in forest_stats(), factor in 2usize..7) {
            let scaled: Vec<TreeStats> = stats
                .iter()
                .map(|t| TreeStats {
                    size: t.size * factor,
                    feat_sum: t.feat_sum.iter().map(|f| f * factor as f64).collect(),
                    sal_sum: t.sal_sum * factor as f64,
                    neighbors: t.neighbors.clone(),
                })
                .collect();
            let crit = plain(Criterion::Size);
            let keep = stats.len() / 2 + 1;
            prop_assert_eq!(
                select_survivors(&stats, crit, keep, &mut rng()).unwrap(),
                select_survivors(&scaled, crit, keep, &mut rng()).unwrap()
            );
        }

        #[test]
        fn contrast_is_symmetric(stats in forest_stats()) {
            let means = Means::new(&stats).unwrap();
            for s in 0..stats.len() {
                for &t in &stats[s].neighbors {
                    prop_assert_eq!(
                        feature_contrast(&means.features[s], &means.features[t]),
                        feature_contrast(&means.features[t], &means.features[s])
                    );
                }
            }
        }

        #[test]
        fn curve_is_monotone_and_bounded(n0 in 2usize..10_000, nf_frac in 0.0f64..1.0, cap in 2usize..12) {
            let nf = ((n0 as f64 * nf_frac) as usize).max(1);
            let s = Schedule::curve(n0, nf, cap);
            let mut prev = n0;
            for i in 1..cap + 3 {
                let k = seeds_to_keep(&s, i);
                prop_assert!(k <= prev && k >= nf);
                prev = k;
            }
            prop_assert_eq!(seeds_to_keep(&s, cap - 1), nf);
        }
    }
}
