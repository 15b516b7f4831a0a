//! Seed-restricted Image Foresting Transform under the f_max path cost.
//!
//! Every seed starts a tree with cost 0. Paths are extended one arc at a time
//! and a path's cost is the largest arc cost along it, so each pixel joins the
//! seed it can reach through the "least resistant" route. Two arc-cost
//! estimators are supported: [`ArcCost::Root`] compares the candidate pixel
//! with the features of the tree's seed, [`ArcCost::Dyn`] with the running
//! mean of the tree at the moment the pixel is evaluated.
//!
//! Equal-cost candidates leave the queue in insertion order (FIFO), and
//! vertices are final on their first dequeue. Together with the fixed
//! neighbor order of [`Topology`] this makes both modes deterministic.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::graph::Topology;
use crate::imgio::{Image, LabelMap, SaliencyMap};

/// Which reference an arc `<x, y>` is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ArcCost {
    /// Features of the seed that roots `x`'s tree.
    #[default]
    Root,
    /// Mean features of `x`'s tree as grown so far.
    Dyn,
}

/// Aggregates of one optimum-path tree (one superpixel).
#[derive(Debug, Clone, PartialEq)]
pub struct TreeStats {
    pub size: usize,
    pub feat_sum: Vec<f64>,
    pub sal_sum: f64,
    /// Ids (positions in the seed list) of trees sharing an arc with this one, ascending.
    pub neighbors: Vec<usize>,
}

impl TreeStats {
    pub fn mean_features(&self) -> Result<Vec<f64>> {
        tree_mean_features(self)
    }

    /// Mean saliency of the tree's pixels; 0 for an empty tree.
    pub fn mean_saliency(&self) -> f64 {
        if self.size == 0 {
            0.0
        } else {
            self.sal_sum / self.size as f64
        }
    }
}

/// Per-vertex result of one IFT execution.
#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    /// Optimum path cost.
    pub cost: Vec<f64>,
    /// Seed vertex at the origin of each vertex's path.
    pub root: Vec<usize>,
    /// Predecessor on the path; `None` marks a root.
    pub pred: Vec<Option<usize>>,
    /// Tree id, i.e. the position of `root` in the seed list.
    pub label: Vec<usize>,
}

impl Forest {
    /// Label map with tree `i` numbered `i + 1`.
    pub fn to_label_map(&self, width: usize, height: usize) -> Result<LabelMap> {
        LabelMap::new(
            width,
            height,
            self.label.iter().map(|&l| l as u32 + 1).collect(),
        )
    }
}

/// Composition rule of f_max.
#[inline]
pub fn path_cost_fmax(prefix_cost: f64, arc_cost: f64) -> f64 {
    prefix_cost.max(arc_cost)
}

pub fn tree_mean_features(stats: &TreeStats) -> Result<Vec<f64>> {
    if stats.size == 0 {
        return Err(Error::EmptyTree);
    }
    let n = stats.size as f64;
    Ok(stats.feat_sum.iter().map(|s| s / n).collect())
}

#[derive(Debug, Clone, Copy)]
struct Entry {
    cost: f64,
    order: u64,
    vertex: u32,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    // reversed: BinaryHeap is a max-heap, we pop the lowest cost, then the oldest entry
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.order.cmp(&self.order))
    }
}

fn validate(
    image: &Image,
    topology: &Topology,
    seeds: &[usize],
    saliency: &SaliencyMap,
) -> Result<()> {
    if image.dims() != topology.dims() {
        return Err(Error::DimensionMismatch {
            expected: image.dims(),
            found: topology.dims(),
        });
    }
    if image.dims() != saliency.dims() {
        return Err(Error::DimensionMismatch {
            expected: image.dims(),
            found: saliency.dims(),
        });
    }
    if seeds.is_empty() {
        return Err(Error::EmptySeeds);
    }
    let n = image.len();
    let mut used = vec![false; n];
    for &s in seeds {
        if s >= n {
            return Err(Error::OutOfRange { index: s, len: n });
        }
        if std::mem::replace(&mut used[s], true) {
            return Err(Error::DuplicateSeed(s));
        }
    }
    Ok(())
}

#[inline]
fn distance_to(reference: &[f64], feature: &[f64]) -> f64 {
    reference
        .iter()
        .zip(feature)
        .map(|(r, f)| (r - f) * (r - f))
        .sum::<f64>()
        .sqrt()
}

#[inline]
fn distance_to_mean(sum: &[f64], size: usize, feature: &[f64]) -> f64 {
    let n = size as f64;
    sum.iter()
        .zip(feature)
        .map(|(s, f)| {
            let d = s / n - f;
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Grows one optimum-path tree per seed and returns the forest with per-tree statistics.
///
/// Tree ids in the returned forest (and the index of each [`TreeStats`]) are
/// positions in `seeds`. The saliency map only feeds `sal_sum`; it never
/// influences the partition.
pub fn run_ift(
    image: &Image,
    topology: &Topology,
    seeds: &[usize],
    mode: ArcCost,
    saliency: &SaliencyMap,
) -> Result<(Forest, Vec<TreeStats>)> {
    validate(image, topology, seeds, saliency)?;
    let n = image.len();
    let m = image.channels();
    let trees = seeds.len();

    let mut cost = vec![f64::INFINITY; n];
    let mut root = vec![usize::MAX; n];
    let mut pred: Vec<Option<usize>> = vec![None; n];
    let mut label = vec![usize::MAX; n];
    let mut done = vec![false; n];

    let mut size = vec![0usize; trees];
    let mut feat_sum = vec![0.0f64; trees * m];
    let mut sal_sum = vec![0.0f64; trees];

    let mut heap = BinaryHeap::with_capacity(n);
    let mut order = 0u64;
    for (id, &s) in seeds.iter().enumerate() {
        cost[s] = 0.0;
        root[s] = s;
        label[s] = id;
        heap.push(Entry {
            cost: 0.0,
            order,
            vertex: s as u32,
        });
        order += 1;
    }

    let mut finalized = 0usize;
    while let Some(Entry { cost: c, vertex, .. }) = heap.pop() {
        let x = vertex as usize;
        if done[x] || c > cost[x] {
            continue;
        }
        done[x] = true;
        finalized += 1;

        let tree = label[x];
        size[tree] += 1;
        for (acc, f) in feat_sum[tree * m..(tree + 1) * m]
            .iter_mut()
            .zip(image.feature(x))
        {
            *acc += f;
        }
        sal_sum[tree] += saliency.get(x);

        let seed_feature = image.feature(root[x]);
        topology.for_each_neighbor(x, |y| {
            if done[y] {
                return;
            }
            let arc = match mode {
                ArcCost::Root => distance_to(seed_feature, image.feature(y)),
                ArcCost::Dyn => distance_to_mean(
                    &feat_sum[tree * m..(tree + 1) * m],
                    size[tree],
                    image.feature(y),
                ),
            };
            let candidate = path_cost_fmax(c, arc);
            if candidate < cost[y] {
                cost[y] = candidate;
                root[y] = root[x];
                label[y] = tree;
                pred[y] = Some(x);
                heap.push(Entry {
                    cost: candidate,
                    order,
                    vertex: y as u32,
                });
                order += 1;
            }
        });
    }

    if finalized != n {
        return Err(Error::Config(format!(
            "{} vertices are unreachable from the seeds under this topology",
            n - finalized
        )));
    }

    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); trees];
    for x in 0..n {
        let lx = label[x];
        topology.for_each_neighbor(x, |y| {
            let ly = label[y];
            if ly != lx && adjacency[lx].last() != Some(&ly) {
                adjacency[lx].push(ly);
            }
        });
    }

    let stats = adjacency
        .into_iter()
        .enumerate()
        .map(|(id, mut neighbors)| {
            neighbors.sort_unstable();
            neighbors.dedup();
            TreeStats {
                size: size[id],
                feat_sum: feat_sum[id * m..(id + 1) * m].to_vec(),
                sal_sum: sal_sum[id],
                neighbors,
            }
        })
        .collect();

    Ok((
        Forest {
            cost,
            root,
            pred,
            label,
        },
        stats,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gray(w: usize, h: usize, values: Vec<f64>) -> Image {
        Image::gray(w, h, values).unwrap()
    }

    fn run(img: &Image, seeds: &[usize], mode: ArcCost) -> (Forest, Vec<TreeStats>) {
        let sal = SaliencyMap::uniform(img.dims());
        run_ift(img, &img.topology(), seeds, mode, &sal).unwrap()
    }

    #[test]
    fn fmax_composition() {
        assert_eq!(path_cost_fmax(0.0, 5.0), 5.0);
        assert_eq!(path_cost_fmax(7.0, 3.0), 7.0);
        assert_eq!([2.0, 9.0, 4.0].into_iter().fold(0.0, path_cost_fmax), 9.0);
    }

    #[test]
    fn mean_features() {
        let one = TreeStats {
            size: 1,
            feat_sum: vec![0.4],
            sal_sum: 1.0,
            neighbors: vec![],
        };
        assert_eq!(tree_mean_features(&one).unwrap(), vec![0.4]);
        let two = TreeStats {
            size: 2,
            feat_sum: vec![1.0, 1.0],
            sal_sum: 2.0,
            neighbors: vec![],
        };
        assert_eq!(tree_mean_features(&two).unwrap(), vec![0.5, 0.5]);
        let four = TreeStats {
            size: 4,
            feat_sum: vec![0.0 + 0.0 + 1.0 + 1.0],
            sal_sum: 4.0,
            neighbors: vec![],
        };
        assert_eq!(tree_mean_features(&four).unwrap(), vec![0.5]);
        let empty = TreeStats {
            size: 0,
            ..one
        };
        assert!(matches!(tree_mean_features(&empty), Err(Error::EmptyTree)));
    }

    #[test]
    fn flat_pair_single_seed() {
        let img = gray(2, 1, vec![0.0, 0.0]);
        let (forest, stats) = run(&img, &[0], ArcCost::Root);
        assert_eq!(forest.label, vec![0, 0]);
        assert_eq!(forest.cost, vec![0.0, 0.0]);
        assert_eq!(forest.pred, vec![None, Some(0)]);
        assert_eq!(stats[0].size, 2);
    }

    #[test]
    fn middle_pixel_joins_similar_seed() {
        let img = gray(3, 1, vec![0.0, 0.0, 1.0]);
        let (forest, stats) = run(&img, &[0, 2], ArcCost::Root);
        assert_eq!(forest.label, vec![0, 0, 1]);
        assert_eq!(forest.cost[1], 0.0);
        assert_eq!(stats[0].neighbors, vec![1]);
        assert_eq!(stats[1].neighbors, vec![0]);
    }

    #[test]
    fn two_flat_halves_split_exactly() {
        let values = (0..16).map(|i| if i % 4 < 2 { 0.0 } else { 1.0 }).collect();
        let img = gray(4, 4, values);
        for mode in [ArcCost::Root, ArcCost::Dyn] {
            let (forest, stats) = run(&img, &[5, 10], mode);
            for i in 0..16 {
                assert_eq!(forest.label[i], usize::from(i % 4 >= 2), "{mode:?} vertex {i}");
                assert_eq!(forest.cost[i], 0.0);
            }
            assert_eq!(stats[0].size, 8);
            assert_eq!(stats[1].feat_sum, vec![8.0]);
        }
    }

    #[test]
    fn input_errors() {
        let img = gray(2, 1, vec![0.0, 1.0]);
        let sal = SaliencyMap::uniform((2, 1));
        let topo = img.topology();
        assert!(matches!(
            run_ift(&img, &topo, &[], ArcCost::Root, &sal),
            Err(Error::EmptySeeds)
        ));
        assert!(matches!(
            run_ift(&img, &topo, &[0, 0], ArcCost::Root, &sal),
            Err(Error::DuplicateSeed(0))
        ));
        assert!(matches!(
            run_ift(&img, &topo, &[2], ArcCost::Root, &sal),
            Err(Error::OutOfRange { .. })
        ));
        let wrong = SaliencyMap::uniform((1, 2));
        assert!(matches!(
            run_ift(&img, &topo, &[0], ArcCost::Root, &wrong),
            Err(Error::DimensionMismatch { .. })
        ));
        let topo = Topology::eight_connected(1, 2);
        assert!(matches!(
            run_ift(&img, &topo, &[0], ArcCost::Root, &sal),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn dyn_uses_running_mean() {
        // seed 0.0, then 0.2 joins (arc 0.2); the mean drops to 0.1 so 0.3 costs 0.2
        // under DYN but 0.3 under ROOT
        let img = gray(3, 1, vec![0.0, 0.2, 0.3]);
        let (root, _) = run(&img, &[0], ArcCost::Root);
        let (dynamic, _) = run(&img, &[0], ArcCost::Dyn);
        assert!((root.cost[2] - 0.3).abs() < 1e-12);
        assert!((dynamic.cost[2] - 0.2).abs() < 1e-12);
    }

    fn check_forest(img: &Image, seeds: &[usize], forest: &Forest, stats: &[TreeStats], sal: &SaliencyMap) {
        let n = img.len();
        for &s in seeds {
            assert_eq!(forest.cost[s], 0.0);
            assert_eq!(forest.pred[s], None);
        }
        for x in 0..n {
            assert!(forest.cost[x].is_finite());
            let mut v = x;
            let mut steps = 0;
            while let Some(p) = forest.pred[v] {
                assert!(forest.cost[p] <= forest.cost[v]);
                assert_eq!(forest.label[p], forest.label[v]);
                v = p;
                steps += 1;
                assert!(steps <= n, "cycle in predecessor map");
            }
            assert!(seeds.contains(&v));
            assert_eq!(forest.root[x], v);
            assert_eq!(seeds[forest.label[x]], v);
        }
        assert_eq!(stats.iter().map(|s| s.size).sum::<usize>(), n);
        let total: f64 = sal.values().iter().sum();
        let tracked: f64 = stats.iter().map(|s| s.sal_sum).sum();
        assert!((total - tracked).abs() <= 1e-9 * n as f64);
        for (id, s) in stats.iter().enumerate() {
            for &t in &s.neighbors {
                assert!(stats[t].neighbors.contains(&id));
            }
            let members: Vec<usize> = (0..n).filter(|&x| forest.label[x] == id).collect();
            let mean = s.mean_features().unwrap();
            for k in 0..img.channels() {
                let lo = members.iter().map(|&x| img.feature(x)[k]).fold(f64::INFINITY, f64::min);
                let hi = members.iter().map(|&x| img.feature(x)[k]).fold(f64::NEG_INFINITY, f64::max);
                assert!(mean[k] >= lo - 1e-9 && mean[k] <= hi + 1e-9);
            }
        }
        let map = forest.to_label_map(img.width(), img.height()).unwrap();
        assert_eq!(map.num_labels(), seeds.len());
        assert!(map.is_connected());
    }

    fn scenario() -> impl Strategy<Value = (usize, usize, Vec<f64>, Vec<f64>, Vec<usize>)> {
        (1usize..=12, 1usize..=12).prop_flat_map(|(w, h)| {
            let n = w * h;
            (
                Just(w),
                Just(h),
                prop::collection::vec(0.0f64..1.0, n),
                prop::collection::vec(0.0f64..=1.0, n),
                prop::sample::subsequence((0..n).collect::<Vec<_>>(), 1..=n.min(6))
                    .prop_shuffle(),
            )
        })
    }

    proptest! {
        #[test]
        fn forest_invariants((w, h, feats, sal, seeds) in scenario(), dynamic in any::<bool>()) {
            let img = gray(w, h, feats);
            let sal = SaliencyMap::new(w, h, sal).unwrap();
            let mode = if dynamic { ArcCost::Dyn } else { ArcCost::Root };
            let (forest, stats) = run_ift(&img, &img.topology(), &seeds, mode, &sal).unwrap();
            check_forest(&img, &seeds, &forest, &stats, &sal);
            let again = run_ift(&img, &img.topology(), &seeds, mode, &sal).unwrap();
            prop_assert_eq!(&again.0, &forest);
            prop_assert_eq!(&again.1, &stats);
        }

        #[test]
        fn root_costs_are_a_fixed_point((w, h, feats, _sal, seeds) in scenario()) {
            // every non-seed cost equals the best offer from any neighbor's tree
            let img = gray(w, h, feats);
            let (forest, _) = run(&img, &seeds, ArcCost::Root);
            let topo = img.topology();
            for x in 0..img.len() {
                if seeds.contains(&x) {
                    continue;
                }
                let mut best = f64::INFINITY;
                topo.for_each_neighbor(x, |y| {
                    let arc = (img.feature(forest.root[y])[0] - img.feature(x)[0]).abs();
                    best = best.min(forest.cost[y].max(arc));
                });
                prop_assert_eq!(forest.cost[x], best);
            }
        }
    }
}
