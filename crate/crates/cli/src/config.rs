use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use deform_core::metrics::{self, SpectrumReport, TopologyReport};
use deform_core::{FieldParams, IntegratorConfig, ManifoldSpec, ManifoldState, NeighborGraph, PointCloud};
use serde::{Deserialize, Serialize};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Axis the top view looks along.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlotOptions {
    pub top_axis: Axis,
    pub width: u32,
    pub height: u32,
}

impl Default for PlotOptions {
    fn default() -> Self {
        PlotOptions {
            top_axis: Axis::Y,
            width: 800,
            height: 600,
        }
    }
}

/// How the neighborhood radius was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule")]
pub enum RadiusRule {
    Explicit,
    Percentile { percentile: f64, multiplier: f64 },
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub manifold: ManifoldSpec,
    pub r: f64,
    pub radius_rule: RadiusRule,
    pub field: FieldParams,
    pub integrator: IntegratorConfig,
    pub epsilon_adhesion: f64,
    pub variance_threshold: f64,
    pub output_dir: PathBuf,
    pub plot: PlotOptions,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.r <= 0.0 || !self.r.is_finite() {
            bail!("neighborhood radius must be positive, got {}", self.r);
        }
        self.field.validate()?;
        self.integrator.validate()?;
        if self.epsilon_adhesion <= 0.0 || !self.epsilon_adhesion.is_finite() {
            bail!("epsilon_adhesion must be positive, got {}", self.epsilon_adhesion);
        }
        if !(self.variance_threshold > 0.0 && self.variance_threshold <= 1.0) {
            bail!("variance_threshold must lie in (0, 1], got {}", self.variance_threshold);
        }
        if self.plot.width == 0 || self.plot.height == 0 {
            bail!("plot canvas must be non-empty");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotEntry {
    pub file: String,
    pub step: usize,
    pub time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotMetrics {
    pub step: usize,
    pub time: f64,
    pub topology: TopologyReport,
    pub spectrum: SpectrumReport,
    /// `flatness_ratios[d - 1]` is `σ_{d+1} / σ_1`.
    pub flatness_ratios: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub neighbor_pairs: usize,
    pub isolated_points: usize,
    pub series: Vec<SnapshotMetrics>,
    #[serde(rename = "final")]
    pub final_snapshot: Option<SnapshotMetrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instability {
    pub step: usize,
    pub point: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: RunConfig,
    pub termination: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instability: Option<Instability>,
    pub steps: usize,
    pub capped_steps: usize,
    pub degeneracy_events: usize,
    pub final_max_speed: f64,
    pub elapsed_seconds: f64,
    pub snapshots: Vec<SnapshotEntry>,
    pub metrics: MetricsReport,
}

impl Manifest {
    pub fn load(run_dir: &Path) -> Result<Self> {
        let path = run_dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn save(&self, run_dir: &Path) -> Result<()> {
        let path = run_dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))
    }
}

pub fn snapshot_file_name(step: usize) -> String {
    format!("snapshot_{step:06}.csv")
}

pub fn snapshot_metrics(
    initial: &PointCloud,
    graph: &NeighborGraph,
    cloud: &PointCloud,
    step: usize,
    time: f64,
    config: &RunConfig,
) -> Result<SnapshotMetrics> {
    let state = ManifoldState::with_current(initial.clone(), cloud.clone())?.at_time(time, step);
    let topology = metrics::topology_report(&state, graph, config.epsilon_adhesion);
    let spectrum = metrics::spectrum(cloud, config.variance_threshold)?;
    let flatness_ratios = (1..cloud.dim())
        .map(|d| spectrum.flatness_ratio(d))
        .collect::<Result<_, _>>()?;
    Ok(SnapshotMetrics {
        step,
        time,
        topology,
        spectrum,
        flatness_ratios,
    })
}
