//! Flattening, topology-preservation and intrinsic-dimension measurements.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dynamics::ManifoldState;
use crate::error::{Error, Result};
use crate::geometry::{distance_unchecked, NeighborGraph, PointCloud};

/// Default cumulative explained-variance threshold for the intrinsic dimension.
pub const DEFAULT_VARIANCE_THRESHOLD: f64 = 0.99;

/// Relative change of neighbor-pair distances with respect to the initial cloud.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistortionStats {
    pub max: f64,
    pub rms: f64,
    pub pairs: usize,
}

/// `|d_ij(t) − d_ij(0)| / d_ij(0)` over all neighbor pairs, summarized as max and RMS.
pub fn neighbor_distortion(state: &ManifoldState, graph: &NeighborGraph) -> DistortionStats {
    let cur = state.current();
    let mut max = 0.0f64;
    let mut sum_sq = 0.0;
    let mut pairs = 0usize;
    for (i, j, d0) in graph.pairs() {
        let d = distance_unchecked(cur.point(i), cur.point(j));
        let delta = (d - d0).abs() / d0;
        max = max.max(delta);
        sum_sq += delta * delta;
        pairs += 1;
    }
    if pairs == 0 {
        log::warn!("neighbor graph has no pairs; distortion reported as zero");
        return DistortionStats {
            max: 0.0,
            rms: 0.0,
            pairs: 0,
        };
    }
    DistortionStats {
        max,
        rms: (sum_sq / pairs as f64).sqrt(),
        pairs,
    }
}

/// Proximity of distinct points and drift of the cloud as a whole.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdhesionReport {
    /// Minimum over all distinct pairs.
    pub min_distance: f64,
    /// Minimum over neighbor pairs; `None` when the graph has no pairs.
    pub min_neighbor_distance: Option<f64>,
    /// Minimum over non-neighbor pairs; `None` when every pair is a neighbor pair.
    pub min_non_neighbor_distance: Option<f64>,
    /// True iff `min_distance < epsilon_adhesion`.
    pub adhesion: bool,
    pub centroid_drift: f64,
}

pub fn adhesion_check(state: &ManifoldState, graph: &NeighborGraph, epsilon_adhesion: f64) -> AdhesionReport {
    let cur = state.current();
    let n = cur.len();
    let mut min_all = f64::INFINITY;
    let mut min_nb: Option<f64> = None;
    let mut min_non: Option<f64> = None;
    for i in 0..n {
        for j in i + 1..n {
            let d = distance_unchecked(cur.point(i), cur.point(j));
            min_all = min_all.min(d);
            let slot = if graph.is_neighbor(i, j) {
                &mut min_nb
            } else {
                &mut min_non
            };
            *slot = Some(slot.map_or(d, |m| m.min(d)));
        }
    }
    let drift = distance_unchecked(&cur.centroid(), &state.initial().centroid());
    AdhesionReport {
        min_distance: min_all,
        min_neighbor_distance: min_nb,
        min_non_neighbor_distance: min_non,
        adhesion: min_all < epsilon_adhesion,
        centroid_drift: drift,
    }
}

/// Combined topology-preservation data for one state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TopologyReport {
    pub distortion: DistortionStats,
    #[serde(flatten)]
    pub adhesion: AdhesionReport,
}

pub fn topology_report(state: &ManifoldState, graph: &NeighborGraph, epsilon_adhesion: f64) -> TopologyReport {
    TopologyReport {
        distortion: neighbor_distortion(state, graph),
        adhesion: adhesion_check(state, graph, epsilon_adhesion),
    }
}

/// Singular values of the centered coordinate matrix and the dimension they imply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    /// Sorted descending.
    pub singular_values: Vec<f64>,
    pub explained_variance: Vec<f64>,
    pub intrinsic_dimension: usize,
    pub threshold: f64,
}

/// Computes the singular values of the `N × n` centered coordinate matrix
/// and the smallest `d` whose cumulative explained variance reaches `threshold`.
pub fn spectrum(cloud: &PointCloud, threshold: f64) -> Result<SpectrumReport> {
    if cloud.len() < 2 {
        return Err(Error::invalid("cloud", "spectrum needs at least 2 points"));
    }
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::invalid(
            "threshold",
            format!("must lie in (0, 1], got {threshold}"),
        ));
    }
    let n = cloud.len();
    let dim = cloud.dim();
    let mean = cloud.centroid();
    let centered = DMatrix::from_fn(n, dim, |r, c| cloud.point(r)[c] - mean[c]);

    // values are padded with zeros when N < n
    let mut singular_values = vec![0.0; dim];
    let svd = nalgebra::linalg::SVD::try_new(centered, false, false, 1e-15, 10_000)
        .ok_or_else(|| Error::invalid("cloud", "singular value decomposition did not converge"))?;
    for (slot, s) in singular_values.iter_mut().zip(svd.singular_values.iter()) {
        *slot = s.max(0.0);
    }
    singular_values.sort_by(|a, b| b.total_cmp(a));

    let total: f64 = singular_values.iter().map(|s| s * s).sum();
    let explained_variance: Vec<f64> = if total > 0.0 {
        singular_values.iter().map(|s| s * s / total).collect()
    } else {
        vec![0.0; dim]
    };
    let intrinsic_dimension = if total > 0.0 {
        let mut cumulative = 0.0;
        explained_variance
            .iter()
            .position(|r| {
                cumulative += r;
                cumulative >= threshold - 1e-12
            })
            .map_or(dim, |k| k + 1)
    } else {
        0
    };
    Ok(SpectrumReport {
        singular_values,
        explained_variance,
        intrinsic_dimension,
        threshold,
    })
}

impl SpectrumReport {
    /// `σ_{d+1} / σ_1`; zero for a cloud collapsed to a point.
    pub fn flatness_ratio(&self, d: usize) -> Result<f64> {
        let dim = self.singular_values.len();
        if d < 1 || d >= dim {
            return Err(Error::invalid("d", format!("must satisfy 1 <= d < {dim}, got {d}")));
        }
        let top = self.singular_values[0];
        Ok(if top > 0.0 { self.singular_values[d] / top } else { 0.0 })
    }
}

/// How far the cloud is from lying in a `d`-dimensional affine subspace.
pub fn flatness_ratio(cloud: &PointCloud, d: usize) -> Result<f64> {
    spectrum(cloud, DEFAULT_VARIANCE_THRESHOLD)?.flatness_ratio(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_neighbor_graph;

    #[test]
    fn collinear_is_one_dimensional() {
        let pts: Vec<[f64; 2]> = (0..10).map(|k| [k as f64, 2.0 * k as f64 + 1.0]).collect();
        let c = PointCloud::from_points(&pts).unwrap();
        let s = spectrum(&c, 0.99).unwrap();
        assert!(s.singular_values[1] < 1e-12 * s.singular_values[0]);
        assert_eq!(s.intrinsic_dimension, 1);
        assert!(flatness_ratio(&c, 1).unwrap() < 1e-12);
    }

    #[test]
    fn planar_grid_in_space_is_two_dimensional() {
        let mut pts = Vec::new();
        for a in 0..5 {
            for b in 0..4 {
                pts.push([a as f64, b as f64, 0.0]);
            }
        }
        let s = spectrum(&PointCloud::from_points(&pts).unwrap(), 0.99).unwrap();
        assert_eq!(s.singular_values[2], 0.0);
        assert_eq!(s.intrinsic_dimension, 2);
        assert!((s.explained_variance.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn degenerate_inputs() {
        let one = PointCloud::from_points(&[[1.0, 2.0]]).unwrap();
        assert!(spectrum(&one, 0.99).is_err());
        let same = PointCloud::from_points(&[[1.0, 2.0], [1.0, 2.0]]).unwrap();
        let s = spectrum(&same, 0.99).unwrap();
        assert_eq!(s.intrinsic_dimension, 0);
        assert_eq!(s.flatness_ratio(1).unwrap(), 0.0);
        assert!(s.flatness_ratio(0).is_err());
        assert!(s.flatness_ratio(2).is_err());
    }

    #[test]
    fn distortion_examples() {
        let init = PointCloud::from_points(&[[0.0, 0.0], [1.0, 0.0]]).unwrap();
        let g = build_neighbor_graph(&init, 1.5).unwrap();
        let s = ManifoldState::new(init.clone());
        assert_eq!(
            neighbor_distortion(&s, &g),
            DistortionStats {
                max: 0.0,
                rms: 0.0,
                pairs: 1
            }
        );
        let moved = PointCloud::from_points(&[[0.0, 0.0], [1.1, 0.0]]).unwrap();
        let s = ManifoldState::with_current(init, moved).unwrap();
        let d = neighbor_distortion(&s, &g);
        assert!((d.max - 0.1).abs() < 1e-12 && (d.rms - 0.1).abs() < 1e-12);
    }

    #[test]
    fn empty_graph_distortion_is_zero() {
        let init = PointCloud::from_points(&[[0.0, 0.0], [5.0, 0.0]]).unwrap();
        let g = build_neighbor_graph(&init, 1.0).unwrap();
        let d = neighbor_distortion(&ManifoldState::new(init), &g);
        assert_eq!((d.max, d.rms, d.pairs), (0.0, 0.0, 0));
    }

    #[test]
    fn adhesion_detects_duplicates() {
        let c = PointCloud::from_points(&[[0.0, 0.0], [1.0, 0.0], [1.0, 0.0]]).unwrap();
        let g = build_neighbor_graph(&c, 0.5).unwrap();
        let rep = adhesion_check(&ManifoldState::new(c), &g, 1e-6);
        assert!(rep.adhesion);
        assert_eq!(rep.min_distance, 0.0);
        assert_eq!(rep.min_neighbor_distance, None);
        assert_eq!(rep.centroid_drift, 0.0);
    }

    #[test]
    fn adhesion_reports_drift_and_minima() {
        let init = PointCloud::from_points(&[[0.0, 0.0], [1.0, 0.0], [3.0, 0.0]]).unwrap();
        let g = build_neighbor_graph(&init, 1.5).unwrap();
        let moved = init.translated(&[0.0, 2.0]).unwrap();
        let rep = adhesion_check(&ManifoldState::with_current(init, moved).unwrap(), &g, 1e-6);
        assert!(!rep.adhesion);
        assert_eq!(rep.min_neighbor_distance, Some(1.0));
        assert_eq!(rep.min_non_neighbor_distance, Some(2.0));
        assert!((rep.centroid_drift - 2.0).abs() < 1e-12);
    }
}
