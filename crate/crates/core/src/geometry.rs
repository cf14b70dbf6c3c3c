//! Point clouds in the embedding space and the r-neighborhood graph.
//!
//! The neighbor graph is built once from the initial cloud and then frozen:
//! it fixes which pairs interact elastically for the whole run, no matter
//! how far the points later travel.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An ordered set of `N` points with `n`-dimensional coordinates.
///
/// Coordinates are stored row-major. A point's identity is its index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    dim: usize,
    coords: Vec<f64>,
}

impl PointCloud {
    /// Builds a cloud from row-major coordinates.
    pub fn from_flat(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dim", "embedding dimension must be at least 1"));
        }
        if coords.is_empty() {
            return Err(Error::EmptyCloud);
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: coords.len() % dim,
            });
        }
        if let Some(pos) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFinite {
                point: pos / dim,
                axis: pos % dim,
            });
        }
        Ok(PointCloud { dim, coords })
    }

    /// Builds a cloud from individual points, all of which must share a dimension.
    pub fn from_points<P: AsRef<[f64]>>(points: &[P]) -> Result<Self> {
        let first = points.first().ok_or(Error::EmptyCloud)?;
        let dim = first.as_ref().len();
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in points {
            let p = p.as_ref();
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: p.len(),
                });
            }
            coords.extend_from_slice(p);
        }
        Self::from_flat(dim, coords)
    }

    /// Embedding dimension `n`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of points `N`.
    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.coords
    }

    pub(crate) fn as_flat_mut(&mut self) -> &mut [f64] {
        &mut self.coords
    }

    pub fn centroid(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.dim];
        for p in self.points() {
            for (acc, x) in c.iter_mut().zip(p) {
                *acc += x;
            }
        }
        let n = self.len() as f64;
        c.iter_mut().for_each(|x| *x /= n);
        c
    }

    /// Returns a copy with every point shifted by `offset`.
    pub fn translated(&self, offset: &[f64]) -> Result<Self> {
        check_dim(self.dim, offset.len())?;
        let coords = self
            .points()
            .flat_map(|p| p.iter().zip(offset).map(|(x, o)| x + o))
            .collect();
        Self::from_flat(self.dim, coords)
    }

    /// Minimum and maximum distance over all distinct index pairs.
    ///
    /// Returns `None` for single-point clouds.
    pub fn pairwise_extent(&self) -> Option<(f64, f64)> {
        let n = self.len();
        if n < 2 {
            return None;
        }
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for i in 0..n {
            for j in i + 1..n {
                let d = distance_unchecked(self.point(i), self.point(j));
                lo = lo.min(d);
                hi = hi.max(d);
            }
        }
        Some((lo, hi))
    }
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

#[inline]
pub(crate) fn distance_unchecked(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Euclidean distance measured in the embedding space.
pub fn euclidean_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    check_dim(a.len(), b.len())?;
    Ok(distance_unchecked(a, b))
}

/// A neighbor of some point together with the pair distance on the initial cloud.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub index: usize,
    pub initial_distance: f64,
}

/// Deleted r-neighborhoods of every point of the initial cloud.
///
/// `j` is a neighbor of `i` iff `0 < |p_i(0) - p_j(0)| < r`. The relation is
/// symmetric and irreflexive, and each list is sorted by index.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborGraph {
    radius: f64,
    neighbors: Vec<Vec<Neighbor>>,
    coincident_pairs: usize,
}

impl NeighborGraph {
    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    /// Neighbors of point `i`, sorted by index.
    pub fn neighbors(&self, i: usize) -> &[Neighbor] {
        &self.neighbors[i]
    }

    pub fn is_neighbor(&self, i: usize, j: usize) -> bool {
        self.neighbors[i].binary_search_by_key(&j, |n| n.index).is_ok()
    }

    /// Initial distance of the pair, if it is a neighbor pair.
    pub fn initial_distance(&self, i: usize, j: usize) -> Option<f64> {
        self.neighbors[i]
            .binary_search_by_key(&j, |n| n.index)
            .ok()
            .map(|k| self.neighbors[i][k].initial_distance)
    }

    /// Every neighbor pair once, as `(i, j, d0)` with `i < j`.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.neighbors.iter().enumerate().flat_map(|(i, ns)| {
            ns.iter()
                .filter(move |n| n.index > i)
                .map(move |n| (i, n.index, n.initial_distance))
        })
    }

    pub fn pair_count(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Points whose neighborhood is empty. The elastic term vanishes on them.
    pub fn isolated(&self) -> Vec<usize> {
        self.neighbors
            .iter()
            .enumerate()
            .filter(|(_, ns)| ns.is_empty())
            .map(|(i, _)| i)
            .collect()
    }

    /// Number of distinct index pairs that coincide on the initial cloud.
    pub fn coincident_pairs(&self) -> usize {
        self.coincident_pairs
    }
}

/// Builds the deleted r-neighborhood graph of the initial cloud.
///
/// The scan is exhaustive over all pairs. Isolated points and coincident
/// pairs are reported through `log::warn!` and kept in the graph metadata.
pub fn build_neighbor_graph(cloud: &PointCloud, r: f64) -> Result<NeighborGraph> {
    if r <= 0.0 || !r.is_finite() {
        return Err(Error::invalid(
            "r",
            format!("neighborhood radius must be positive and finite, got {r}"),
        ));
    }
    let n = cloud.len();
    let rows: Vec<(Vec<Neighbor>, usize)> = (0..n)
        .map(|i| {
            let p = cloud.point(i);
            let mut ns = Vec::new();
            let mut coincident = 0;
            for j in 0..n {
                if j == i {
                    continue;
                }
                let d = distance_unchecked(p, cloud.point(j));
                if d == 0.0 {
                    coincident += 1;
                } else if d < r {
                    ns.push(Neighbor {
                        index: j,
                        initial_distance: d,
                    });
                }
            }
            (ns, coincident)
        })
        .collect();

    let coincident_pairs = rows.iter().map(|(_, c)| c).sum::<usize>() / 2;
    let neighbors: Vec<Vec<Neighbor>> = rows.into_iter().map(|(ns, _)| ns).collect();
    let graph = NeighborGraph {
        radius: r,
        neighbors,
        coincident_pairs,
    };

    if coincident_pairs > 0 {
        log::warn!("{coincident_pairs} coincident point pair(s) in the initial cloud");
    }
    let isolated = graph.isolated();
    if !isolated.is_empty() && n > 1 {
        log::warn!(
            "{} point(s) have an empty r-neighborhood (r = {r}); only repulsion acts on them",
            isolated.len()
        );
    }
    Ok(graph)
}

/// Neighborhood radius heuristic for clouds without a prescribed radius:
/// `multiplier` times the given percentile of the nonzero pairwise distances.
///
/// The percentile uses the nearest-rank definition.
pub fn percentile_radius(cloud: &PointCloud, percentile: f64, multiplier: f64) -> Result<f64> {
    if !(percentile > 0.0 && percentile <= 100.0) {
        return Err(Error::invalid(
            "percentile",
            format!("must lie in (0, 100], got {percentile}"),
        ));
    }
    if multiplier <= 0.0 || !multiplier.is_finite() {
        return Err(Error::invalid(
            "multiplier",
            format!("must be positive, got {multiplier}"),
        ));
    }
    let n = cloud.len();
    let mut dists = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let d = distance_unchecked(cloud.point(i), cloud.point(j));
            if d > 0.0 {
                dists.push(d);
            }
        }
    }
    if dists.is_empty() {
        return Err(Error::invalid("cloud", "no nonzero pairwise distances"));
    }
    dists.sort_by(f64::total_cmp);
    let rank = ((percentile / 100.0) * dists.len() as f64).ceil() as usize;
    let d = dists[rank.clamp(1, dists.len()) - 1];
    Ok(d * multiplier)
}
