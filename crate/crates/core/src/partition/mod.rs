//! Recursive equal-mass ("moving region") partitions and fixed grids.
//!
//! A moving partition is built from a sample: the region is split along one
//! coordinate at the order statistics with 1-based ranks
//! `floor(n_A * s / bins)`, `s = 1..bins-1`, then each child is split along
//! the next coordinate using only the points it contains. Every interval is
//! half-open `(lo, hi]`, the outermost ends being the axis support bounds.

mod json;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::divergence::MultinomialPmf;
use crate::error::{domain, Error, Result};
use crate::scalar::Real;

pub use json::TreeDocument;

/// Bins per split.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branching {
    /// The same number of bins for every region.
    Uniform(usize),
    /// Bins for each level, root first.
    PerLevel(Vec<usize>),
    /// Bins keyed by region index `(j_1, .., j_{i-1})`; the root is `[]`.
    PerRegion(BTreeMap<Vec<usize>, usize>),
}

impl Branching {
    pub fn bins_for(&self, region: &[usize]) -> Option<usize> {
        match self {
            Branching::Uniform(b) => Some(*b),
            Branching::PerLevel(v) => v.get(region.len()).copied(),
            Branching::PerRegion(map) => map.get(region).copied(),
        }
    }
}

/// How to build a moving partition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionSpec {
    /// Number of coordinates split (the partition depth).
    pub depth: usize,
    pub branching: Branching,
    /// Distinct 0-based axes split at each level; defaults to `0, 1, ..`.
    pub axis_order: Option<Vec<usize>>,
}

impl PartitionSpec {
    pub fn uniform(depth: usize, bins: usize) -> Self {
        Self {
            depth,
            branching: Branching::Uniform(bins),
            axis_order: None,
        }
    }

    pub fn with_axes(mut self, axes: Vec<usize>) -> Self {
        self.axis_order = Some(axes);
        self
    }

    /// Split axes for a `k`-dimensional sample, after validation.
    pub fn split_axes(&self, k: usize) -> Result<Vec<usize>> {
        if self.depth == 0 || self.depth > k {
            return domain(format!("partition depth must lie in 1..={k}, got {}", self.depth));
        }
        let axes = match &self.axis_order {
            None => (0..self.depth).collect::<Vec<_>>(),
            Some(order) => {
                if order.len() < self.depth {
                    return domain(format!(
                        "axis order {order:?} shorter than depth {}",
                        self.depth
                    ));
                }
                let mut seen = vec![false; k];
                for &a in order {
                    if a >= k || std::mem::replace(&mut seen[a], true) {
                        return domain(format!("axis order {order:?} is not a permutation of axes"));
                    }
                }
                order[..self.depth].to_vec()
            }
        };
        match &self.branching {
            Branching::Uniform(b) if *b < 2 => return domain("every branching value must be >= 2"),
            Branching::PerLevel(v) => {
                if v.len() < self.depth {
                    return domain(format!(
                        "{} per-level branchings given for depth {}",
                        v.len(),
                        self.depth
                    ));
                }
                if v.iter().any(|&b| b < 2) {
                    return domain("every branching value must be >= 2");
                }
            }
            Branching::PerRegion(map) => {
                if map.values().any(|&b| b < 2) {
                    return domain("every branching value must be >= 2");
                }
            }
            _ => {}
        }
        Ok(axes)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PartitionKind {
    Moving,
    Fixed,
}

/// `(lo, hi]` on one axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval<T> {
    pub axis: usize,
    pub lo: T,
    pub hi: T,
}

impl<T: Real> Interval<T> {
    #[inline]
    pub fn contains(&self, x: T) -> bool {
        self.lo < x && x <= self.hi
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Leaf<T> {
    /// Region index `(j_1, .., j_l)`.
    pub index: Vec<usize>,
    /// One interval per split, root first.
    pub intervals: Vec<Interval<T>>,
    /// Product of bin counts along the path (`p'_{j(l-1)} + 1`).
    pub path_bins: u64,
    /// Building-sample points inside the leaf (moving partitions only).
    pub building_count: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Node<T> {
    Split {
        axis: usize,
        cuts: Vec<T>,
        children: Vec<Node<T>>,
    },
    Leaf(usize),
}

/// The nested partition; leaves are ordered lexicographically by index.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionTree<T> {
    kind: PartitionKind,
    dim: usize,
    axes: Vec<usize>,
    bounds: Vec<(T, T)>,
    root: Node<T>,
    leaves: Vec<Leaf<T>>,
}

/// Per-leaf counts of a discretized sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinCounts {
    pub counts: Vec<u64>,
    pub total: u64,
}

impl BinCounts {
    pub fn zero_bins(&self) -> usize {
        self.counts.iter().filter(|&&c| c == 0).count()
    }

    /// Empirical frequencies `count / total`.
    pub fn to_pmf<T: Real>(&self) -> Result<MultinomialPmf<T>> {
        if self.total == 0 {
            return Err(Error::EmptyInput);
        }
        let n = T::lit(self.total as f64);
        MultinomialPmf::new(self.counts.iter().map(|&c| T::lit(c as f64) / n).collect())
    }
}

/// Builds the moving-region partition of `model_sample` described by `spec`.
pub fn build_moving_partition<T: Real>(
    model_sample: &Dataset<T>,
    spec: &PartitionSpec,
) -> Result<PartitionTree<T>> {
    let axes = spec.split_axes(model_sample.k())?;
    let mut builder = Builder {
        data: model_sample,
        spec,
        axes: &axes,
        leaves: Vec::new(),
    };
    let rows: Vec<usize> = (0..model_sample.n()).collect();
    let mut intervals = Vec::with_capacity(axes.len());
    let mut index = Vec::with_capacity(axes.len());
    let root = builder.split(rows, &mut index, &mut intervals, 1)?;
    let leaves = builder.leaves;
    Ok(PartitionTree {
        kind: PartitionKind::Moving,
        dim: model_sample.k(),
        axes,
        bounds: model_sample.bounds().to_vec(),
        root,
        leaves,
    })
}

struct Builder<'a, T> {
    data: &'a Dataset<T>,
    spec: &'a PartitionSpec,
    axes: &'a [usize],
    leaves: Vec<Leaf<T>>,
}

impl<T: Real> Builder<'_, T> {
    fn split(
        &mut self,
        rows: Vec<usize>,
        index: &mut Vec<usize>,
        intervals: &mut Vec<Interval<T>>,
        path_bins: u64,
    ) -> Result<Node<T>> {
        let level = index.len();
        if level == self.axes.len() {
            let id = self.leaves.len();
            self.leaves.push(Leaf {
                index: index.clone(),
                intervals: intervals.clone(),
                path_bins,
                building_count: Some(rows.len() as u64),
            });
            return Ok(Node::Leaf(id));
        }

        let axis = self.axes[level];
        let bins = self.spec.branching.bins_for(index).ok_or_else(|| {
            Error::Domain(format!("no branching given for region {index:?}"))
        })?;
        if bins < 2 {
            return domain(format!("branching for region {index:?} must be >= 2"));
        }
        let n_region = rows.len();
        if n_region < bins {
            return Err(Error::Capacity {
                region: index.clone(),
                available: n_region,
                bins,
            });
        }

        let mut values: Vec<T> = rows.iter().map(|&r| self.data.get(r, axis)).collect();
        // 0-based positions of the order statistics X(floor(n s / bins))
        let ranks: Vec<usize> = (1..bins).map(|s| n_region * s / bins - 1).collect();
        let cuts = order_statistics(&mut values, &ranks);
        drop(values);

        let mut groups: Vec<Vec<usize>> = (0..bins)
            .map(|_| Vec::with_capacity(n_region / bins + 1))
            .collect();
        for r in rows {
            let x = self.data.get(r, axis);
            groups[bin_of(&cuts, x)].push(r);
        }

        let (lo_bound, hi_bound) = self.data.bounds()[axis];
        let mut children = Vec::with_capacity(bins);
        for (j, group) in groups.into_iter().enumerate() {
            let lo = if j == 0 { lo_bound } else { cuts[j - 1] };
            let hi = if j + 1 == bins { hi_bound } else { cuts[j] };
            index.push(j);
            intervals.push(Interval { axis, lo, hi });
            let child = self.split(group, index, intervals, path_bins * bins as u64);
            index.pop();
            intervals.pop();
            children.push(child?);
        }
        Ok(Node::Split {
            axis,
            cuts,
            children,
        })
    }
}

/// Selects the values at the given ascending 0-based ranks, reordering
/// `values` in place.
fn order_statistics<T: Real>(values: &mut [T], ranks: &[usize]) -> Vec<T> {
    let mut out = vec![T::zero(); ranks.len()];
    select_into(values, 0, ranks, &mut out);
    out
}

fn select_into<T: Real>(values: &mut [T], offset: usize, ranks: &[usize], out: &mut [T]) {
    if ranks.is_empty() {
        return;
    }
    let mid = ranks.len() / 2;
    let pos = ranks[mid] - offset;
    let (left, pivot, right) =
        values.select_nth_unstable_by(pos, |a, b| a.partial_cmp(b).expect("finite values"));
    out[mid] = *pivot;
    let (out_left, out_rest) = out.split_at_mut(mid);
    select_into(left, offset, &ranks[..mid], out_left);
    select_into(right, offset + pos + 1, &ranks[mid + 1..], &mut out_rest[1..]);
}

/// Bin of `x` given ascending interior cuts; values equal to a cut go low.
#[inline]
fn bin_of<T: Real>(cuts: &[T], x: T) -> usize {
    cuts.partition_point(|c| *c < x)
}

/// Product grid over the leading `grid.len()` axes from sorted breakpoints.
pub fn build_fixed_partition<T: Real>(grid: &[Vec<T>]) -> Result<PartitionTree<T>> {
    if grid.is_empty() {
        return domain("fixed grid needs at least one axis");
    }
    for (axis, points) in grid.iter().enumerate() {
        if points.iter().any(|p| !p.is_finite()) {
            return domain(format!("axis {}: breakpoints must be finite", axis + 1));
        }
        if points.windows(2).any(|w| !(w[0] < w[1])) {
            return domain(format!(
                "axis {}: breakpoints must be strictly increasing",
                axis + 1
            ));
        }
    }
    let dim = grid.len();
    let bounds = vec![(T::neg_infinity(), T::infinity()); dim];
    let mut leaves = Vec::new();
    let mut index = Vec::new();
    let mut intervals = Vec::new();
    let root = fixed_node(grid, &bounds, &mut index, &mut intervals, 1, &mut leaves);
    Ok(PartitionTree {
        kind: PartitionKind::Fixed,
        dim,
        axes: (0..dim).collect(),
        bounds,
        root,
        leaves,
    })
}

fn fixed_node<T: Real>(
    grid: &[Vec<T>],
    bounds: &[(T, T)],
    index: &mut Vec<usize>,
    intervals: &mut Vec<Interval<T>>,
    path_bins: u64,
    leaves: &mut Vec<Leaf<T>>,
) -> Node<T> {
    let axis = index.len();
    if axis == grid.len() {
        leaves.push(Leaf {
            index: index.clone(),
            intervals: intervals.clone(),
            path_bins,
            building_count: None,
        });
        return Node::Leaf(leaves.len() - 1);
    }
    let cuts = grid[axis].clone();
    let bins = cuts.len() + 1;
    let children = (0..bins)
        .map(|j| {
            let lo = if j == 0 { bounds[axis].0 } else { cuts[j - 1] };
            let hi = if j + 1 == bins { bounds[axis].1 } else { cuts[j] };
            index.push(j);
            intervals.push(Interval { axis, lo, hi });
            let child = fixed_node(grid, bounds, index, intervals, path_bins * bins as u64, leaves);
            index.pop();
            intervals.pop();
            child
        })
        .collect();
    Node::Split {
        axis,
        cuts,
        children,
    }
}

impl<T: Real> PartitionTree<T> {
    pub fn kind(&self) -> PartitionKind {
        self.kind
    }

    /// Dimension of the points the tree accepts.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn depth(&self) -> usize {
        self.axes.len()
    }

    /// 0-based axis split at each level.
    pub fn split_axes(&self) -> &[usize] {
        &self.axes
    }

    pub fn bounds(&self) -> &[(T, T)] {
        &self.bounds
    }

    pub fn leaves(&self) -> &[Leaf<T>] {
        &self.leaves
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves.len()
    }

    /// Number of free multinomial parameters `p'` (leaves minus one).
    pub fn free_param_count(&self) -> usize {
        self.leaves.len() - 1
    }

    /// Leaf containing `point`. Points outside the support fall into the
    /// nearest outer bin.
    pub fn locate(&self, point: &[T]) -> usize {
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf(id) => return *id,
                Node::Split {
                    axis,
                    cuts,
                    children,
                } => node = &children[bin_of(cuts, point[*axis])],
            }
        }
    }

    /// Counts the rows of `sample` per leaf.
    pub fn count_into_bins(&self, sample: &Dataset<T>) -> Result<BinCounts> {
        if sample.k() != self.dim {
            return domain(format!(
                "sample has dimension {} but the partition expects {}",
                sample.k(),
                self.dim
            ));
        }
        const CHUNK: usize = 1 << 16;
        let leaves = self.leaves.len();
        let counts = sample
            .values()
            .par_chunks(CHUNK * sample.k())
            .map(|chunk| {
                let mut local = vec![0u64; leaves];
                for row in chunk.chunks_exact(sample.k()) {
                    local[self.locate(row)] += 1;
                }
                local
            })
            .reduce(
                || vec![0u64; leaves],
                |mut a, b| {
                    a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                    a
                },
            );
        Ok(BinCounts {
            counts,
            total: sample.n() as u64,
        })
    }

    /// Building-sample counts per leaf, when the tree came from a sample.
    pub fn building_counts(&self) -> Option<BinCounts> {
        let counts: Option<Vec<u64>> = self.leaves.iter().map(|l| l.building_count).collect();
        counts.map(|counts| {
            let total = counts.iter().sum();
            BinCounts { counts, total }
        })
    }

    /// Exact model-side masses `1 / (p'_{j(l-1)} + 1)` of a moving partition.
    pub fn model_pmf(&self) -> Result<MultinomialPmf<T>> {
        if self.kind != PartitionKind::Moving {
            return domain("equal-mass leaf probabilities are only defined for moving partitions");
        }
        MultinomialPmf::new(
            self.leaves
                .iter()
                .map(|l| T::one() / T::lit(l.path_bins as f64))
                .collect(),
        )
    }

    /// `(region index, bins)` for every internal region, depth first.
    pub fn branching(&self) -> Vec<(Vec<usize>, usize)> {
        fn walk<T>(node: &Node<T>, index: &mut Vec<usize>, out: &mut Vec<(Vec<usize>, usize)>) {
            if let Node::Split { children, .. } = node {
                out.push((index.clone(), children.len()));
                for (j, c) in children.iter().enumerate() {
                    index.push(j);
                    walk(c, index, out);
                    index.pop();
                }
            }
        }
        let mut out = Vec::new();
        walk(&self.root, &mut Vec::new(), &mut out);
        out
    }
}

/// Free-function form of [`PartitionTree::locate`].
pub fn locate<T: Real>(tree: &PartitionTree<T>, point: &[T]) -> usize {
    tree.locate(point)
}

pub fn count_into_bins<T: Real>(tree: &PartitionTree<T>, sample: &Dataset<T>) -> Result<BinCounts> {
    tree.count_into_bins(sample)
}

pub fn model_pmf<T: Real>(tree: &PartitionTree<T>) -> Result<MultinomialPmf<T>> {
    tree.model_pmf()
}

pub fn free_param_count<T: Real>(tree: &PartitionTree<T>) -> usize {
    tree.free_param_count()
}
