//! JSON form of a partition tree. Endpoints are strings: `"-inf"`, `"inf"`
//! or the shortest decimal that parses back to the same value. Axes are
//! 1-based in the document.

use serde::{Deserialize, Serialize};

use super::{Interval, Leaf, Node, PartitionKind, PartitionTree};
use crate::error::{domain, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeDocument {
    pub kind: PartitionKind,
    pub dimension: usize,
    pub depth: usize,
    pub axes: Vec<usize>,
    pub bounds: Vec<[String; 2]>,
    pub branching: Vec<RegionBranching>,
    pub leaves: Vec<LeafDocument>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionBranching {
    pub region: Vec<usize>,
    pub bins: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeafDocument {
    pub index: Vec<usize>,
    pub intervals: Vec<IntervalDocument>,
    pub path_bins: u64,
    pub count: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalDocument {
    pub axis: usize,
    pub lo: String,
    pub hi: String,
}

fn endpoint_text<T: Real>(v: T) -> String {
    if v == T::infinity() {
        "inf".into()
    } else if v == T::neg_infinity() {
        "-inf".into()
    } else {
        v.to_string()
    }
}

fn parse_endpoint<T: Real>(s: &str) -> Result<T> {
    match s {
        "inf" | "+inf" => Ok(T::infinity()),
        "-inf" => Ok(T::neg_infinity()),
        _ => match s.parse::<T>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => domain(format!("invalid interval endpoint {s:?}")),
        },
    }
}

impl<T: Real> PartitionTree<T> {
    pub fn to_document(&self) -> TreeDocument {
        TreeDocument {
            kind: self.kind,
            dimension: self.dim,
            depth: self.depth(),
            axes: self.axes.iter().map(|a| a + 1).collect(),
            bounds: self
                .bounds
                .iter()
                .map(|&(lo, hi)| [endpoint_text(lo), endpoint_text(hi)])
                .collect(),
            branching: self
                .branching()
                .into_iter()
                .map(|(region, bins)| RegionBranching { region, bins })
                .collect(),
            leaves: self
                .leaves
                .iter()
                .map(|l| LeafDocument {
                    index: l.index.clone(),
                    intervals: l
                        .intervals
                        .iter()
                        .map(|iv| IntervalDocument {
                            axis: iv.axis + 1,
                            lo: endpoint_text(iv.lo),
                            hi: endpoint_text(iv.hi),
                        })
                        .collect(),
                    path_bins: l.path_bins,
                    count: l.building_count,
                })
                .collect(),
        }
    }

    pub fn from_document(doc: &TreeDocument) -> Result<Self> {
        let depth = doc.depth;
        if depth == 0 || doc.axes.len() != depth || doc.leaves.is_empty() {
            return domain("tree document: inconsistent depth, axes or leaves");
        }
        if doc.axes.iter().any(|&a| a == 0 || a > doc.dimension) || doc.bounds.len() != doc.dimension {
            return domain("tree document: axes or bounds do not match the dimension");
        }
        let axes: Vec<usize> = doc.axes.iter().map(|a| a - 1).collect();
        let bounds = doc
            .bounds
            .iter()
            .map(|[lo, hi]| Ok((parse_endpoint(lo)?, parse_endpoint(hi)?)))
            .collect::<Result<Vec<(T, T)>>>()?;

        let mut leaves = Vec::with_capacity(doc.leaves.len());
        for l in &doc.leaves {
            if l.index.len() != depth || l.intervals.len() != depth {
                return domain(format!("tree document: leaf {:?} has wrong depth", l.index));
            }
            let intervals = l
                .intervals
                .iter()
                .zip(&axes)
                .map(|(iv, &axis)| {
                    if iv.axis != axis + 1 {
                        return domain(format!("tree document: leaf {:?} splits the wrong axis", l.index));
                    }
                    Ok(Interval {
                        axis,
                        lo: parse_endpoint(&iv.lo)?,
                        hi: parse_endpoint(&iv.hi)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            leaves.push(Leaf {
                index: l.index.clone(),
                intervals,
                path_bins: l.path_bins,
                building_count: l.count,
            });
        }
        for pair in leaves.windows(2) {
            if pair[0].index >= pair[1].index {
                return domain("tree document: leaves must be in increasing index order");
            }
        }
        let root = rebuild(&leaves, 0, 0, leaves.len())?;
        Ok(Self {
            kind: doc.kind,
            dim: doc.dimension,
            axes,
            bounds,
            root,
            leaves,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_document())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_document(&serde_json::from_str(text)?)
    }
}

fn rebuild<T: Real>(leaves: &[Leaf<T>], level: usize, start: usize, end: usize) -> Result<Node<T>> {
    let depth = leaves[start].index.len();
    if level == depth {
        if end - start != 1 {
            return domain("tree document: duplicated leaf index");
        }
        return Ok(Node::Leaf(start));
    }
    let axis = leaves[start].intervals[level].axis;
    let mut children = Vec::new();
    let mut cuts = Vec::new();
    let mut i = start;
    while i < end {
        let j = leaves[i].index[level];
        if j != children.len() {
            return domain(format!("tree document: missing child {} at level {}", children.len(), level + 1));
        }
        let mut e = i;
        while e < end && leaves[e].index[level] == j {
            e += 1;
        }
        if !children.is_empty() {
            cuts.push(leaves[i].intervals[level].lo);
        }
        children.push(rebuild(leaves, level + 1, i, e)?);
        i = e;
    }
    Ok(Node::Split {
        axis,
        cuts,
        children,
    })
}
