use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Subcommand, ValueEnum};
use deform_core::generators::{self, write_csv};
use deform_core::{
    build_neighbor_graph, compute_field, percentile_radius, run_simulation, FieldParams, IntegratorConfig,
    ManifoldSpec, ManifoldState, PointCloud, Termination,
};

use crate::config::{
    snapshot_file_name, snapshot_metrics, Axis, Instability, Manifest, MetricsReport, PlotOptions, RadiusRule,
    RunConfig, SnapshotEntry, MANIFEST_FILE,
};
use crate::plot::{self, Projection};

/// Reference-scale defaults for the built-in manifolds.
pub const HALF_CIRCLE_RADIUS: f64 = 69.0;
pub const HALF_CIRCLE_COUNT: usize = 129;
pub const HALF_CIRCLE_R: f64 = 3.36;
pub const SPIRAL_COUNT: usize = 600;
pub const SPIRAL_R: f64 = 1.2;
pub const S_CURVE_GRID: (usize, usize) = (24, 15);
pub const S_CURVE_SCALE: f64 = 10.0;
pub const RADIUS_PERCENTILE: f64 = 1.0;

/// Process exit status of a successful command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    Unstable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    HalfCircle,
    Spiral,
    SCurve,
    Csv,
}

#[derive(Debug, Args)]
pub struct ManifoldArgs {
    /// Half-circle radius.
    #[arg(long, default_value_t = HALF_CIRCLE_RADIUS)]
    pub radius: f64,
    /// Sample count (half circle, spiral). Defaults to 129 / 600.
    #[arg(long)]
    pub count: Option<usize>,
    /// S-curve grid as `UxV`.
    #[arg(long, default_value = "24x15", value_parser = parse_grid)]
    pub grid: (usize, usize),
    /// S-curve scale.
    #[arg(long, default_value_t = S_CURVE_SCALE)]
    pub scale: f64,
    /// Input CSV for `csv`.
    #[arg(long)]
    pub input: Option<PathBuf>,
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (u, v) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected UxV, got {s:?}"))?;
    let parse = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("{t:?}: {e}"));
    Ok((parse(u)?, parse(v)?))
}

impl ManifoldArgs {
    pub fn spec(&self, kind: Kind) -> Result<ManifoldSpec> {
        Ok(match kind {
            Kind::HalfCircle => ManifoldSpec::HalfCircle {
                radius: self.radius,
                count: self.count.unwrap_or(HALF_CIRCLE_COUNT),
            },
            Kind::Spiral => ManifoldSpec::Spiral {
                count: self.count.unwrap_or(SPIRAL_COUNT),
            },
            Kind::SCurve => ManifoldSpec::SCurve {
                grid_u: self.grid.0,
                grid_v: self.grid.1,
                scale: self.scale,
            },
            Kind::Csv => ManifoldSpec::Csv {
                path: self
                    .input
                    .clone()
                    .ok_or_else(|| anyhow!("`csv` requires --input <FILE>"))?,
            },
        })
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    pub kind: Kind,
    #[command(flatten)]
    pub manifold: ManifoldArgs,
    /// Output CSV; stdout when omitted.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

pub fn generate(args: &GenerateArgs) -> Result<Status> {
    let spec = args.manifold.spec(args.kind)?;
    let cloud = spec.build()?;
    match &args.out {
        Some(path) => generators::save_csv(&cloud, path)?,
        None => write_csv(&cloud, std::io::stdout().lock())?,
    }
    let (lo, hi) = cloud.pairwise_extent().unwrap_or((0.0, 0.0));
    eprintln!(
        "{}: N = {}, n = {}, min pairwise distance = {lo:.6}, max pairwise distance = {hi:.6}",
        spec.name(),
        cloud.len(),
        cloud.dim()
    );
    Ok(Status::Ok)
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Manifold to deform. Not needed with --from-manifest.
    #[arg(required_unless_present = "from_manifest")]
    pub kind: Option<Kind>,
    #[command(flatten)]
    pub manifold: ManifoldArgs,
    /// Reuse the configuration stored in an earlier run's manifest.json.
    #[arg(long, conflicts_with = "kind")]
    pub from_manifest: Option<PathBuf>,
    /// Output directory.
    #[arg(long, short)]
    pub out: PathBuf,

    /// Neighborhood radius. Defaults to 3.36 (half circle), 1.2 (spiral),
    /// otherwise a multiple of the 1st percentile of pairwise distances.
    #[arg(long)]
    pub r: Option<f64>,
    /// Multiplier for the percentile radius heuristic.
    #[arg(long, default_value_t = 2.0)]
    pub radius_multiplier: f64,
    #[arg(long, default_value_t = FieldParams::default().k1)]
    pub k1: f64,
    #[arg(long, default_value_t = FieldParams::default().k2)]
    pub k2: f64,
    #[arg(long, default_value_t = FieldParams::default().epsilon_dist)]
    pub epsilon_dist: f64,
    #[arg(long, default_value_t = IntegratorConfig::default().dt)]
    pub dt: f64,
    #[arg(long, default_value_t = IntegratorConfig::default().max_steps)]
    pub max_steps: usize,
    #[arg(long, default_value_t = IntegratorConfig::default().converge_vel)]
    pub converge_vel: f64,
    #[arg(long, default_value_t = IntegratorConfig::default().converge_window)]
    pub converge_window: usize,
    #[arg(long, default_value_t = IntegratorConfig::default().max_disp_frac)]
    pub max_disp_frac: f64,
    #[arg(long, default_value_t = IntegratorConfig::default().snapshot_every)]
    pub snapshot_every: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub epsilon_adhesion: f64,
    #[arg(long, default_value_t = deform_core::metrics::DEFAULT_VARIANCE_THRESHOLD)]
    pub variance_threshold: f64,
    /// Axis the 3-D top view looks along.
    #[arg(long, value_enum, default_value_t = PlotOptions::default().top_axis)]
    pub top_axis: Axis,
    #[arg(long, default_value_t = PlotOptions::default().width)]
    pub width: u32,
    #[arg(long, default_value_t = PlotOptions::default().height)]
    pub height: u32,
}

impl RunArgs {
    /// Resolves the run configuration and the initial cloud.
    pub fn resolve(&self) -> Result<(RunConfig, PointCloud)> {
        if let Some(path) = &self.from_manifest {
            let manifest_path = if path.is_dir() {
                path.join(MANIFEST_FILE)
            } else {
                path.clone()
            };
            let text =
                fs::read_to_string(&manifest_path).with_context(|| format!("reading {}", manifest_path.display()))?;
            let manifest: Manifest =
                serde_json::from_str(&text).with_context(|| format!("parsing {}", manifest_path.display()))?;
            let mut config = manifest.config;
            config.output_dir = self.out.clone();
            let cloud = config.manifold.build()?;
            config.validate()?;
            return Ok((config, cloud));
        }

        let kind = self.kind.ok_or_else(|| anyhow!("a manifold kind is required"))?;
        let manifold = self.manifold.spec(kind)?;
        let cloud = manifold.build()?;
        let (r, radius_rule) = match (self.r, kind) {
            (Some(r), _) => (r, RadiusRule::Explicit),
            (None, Kind::HalfCircle) => (HALF_CIRCLE_R, RadiusRule::Explicit),
            (None, Kind::Spiral) => (SPIRAL_R, RadiusRule::Explicit),
            (None, _) => (
                percentile_radius(&cloud, RADIUS_PERCENTILE, self.radius_multiplier)?,
                RadiusRule::Percentile {
                    percentile: RADIUS_PERCENTILE,
                    multiplier: self.radius_multiplier,
                },
            ),
        };
        let config = RunConfig {
            manifold,
            r,
            radius_rule,
            field: FieldParams {
                k1: self.k1,
                k2: self.k2,
                epsilon_dist: self.epsilon_dist,
            },
            integrator: IntegratorConfig {
                dt: self.dt,
                max_steps: self.max_steps,
                converge_vel: self.converge_vel,
                converge_window: self.converge_window,
                max_disp_frac: self.max_disp_frac,
                snapshot_every: self.snapshot_every,
            },
            epsilon_adhesion: self.epsilon_adhesion,
            variance_threshold: self.variance_threshold,
            output_dir: self.out.clone(),
            plot: PlotOptions {
                top_axis: self.top_axis,
                width: self.width,
                height: self.height,
            },
        };
        config.validate()?;
        Ok((config, cloud))
    }
}

pub fn run(args: &RunArgs) -> Result<Status> {
    let (config, cloud) = args.resolve()?;
    execute(&config, cloud)
}

/// Runs a simulation and writes snapshots plus `manifest.json` into the output directory.
pub fn execute(config: &RunConfig, cloud: PointCloud) -> Result<Status> {
    let dir = &config.output_dir;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;

    let started = Instant::now();
    let traj = run_simulation(cloud, config.r, &config.field, &config.integrator)?;
    let elapsed_seconds = started.elapsed().as_secs_f64();

    let initial = &traj.snapshots[0].cloud;
    let mut entries = Vec::with_capacity(traj.snapshots.len());
    let mut series = Vec::with_capacity(traj.snapshots.len());
    for snap in &traj.snapshots {
        let file = snapshot_file_name(snap.step);
        generators::save_csv(&snap.cloud, dir.join(&file))?;
        series.push(snapshot_metrics(
            initial,
            &traj.graph,
            &snap.cloud,
            snap.step,
            snap.time,
            config,
        )?);
        entries.push(SnapshotEntry {
            file,
            step: snap.step,
            time: snap.time,
        });
    }

    let instability = match traj.termination {
        Termination::Instability { step, point } => Some(Instability { step, point }),
        _ => None,
    };
    let manifest = Manifest {
        config: config.clone(),
        termination: traj.termination.as_str().to_string(),
        instability,
        steps: traj.steps(),
        capped_steps: traj.capped_steps,
        degeneracy_events: traj.degeneracy_events,
        final_max_speed: traj.final_max_speed,
        elapsed_seconds,
        snapshots: entries,
        metrics: MetricsReport {
            neighbor_pairs: traj.graph.pair_count(),
            isolated_points: traj.graph.isolated().len(),
            final_snapshot: series.last().cloned(),
            series,
        },
    };
    manifest.save(dir)?;

    eprintln!(
        "{}: {} after {} steps ({} capped), {} snapshots in {}",
        config.manifold.name(),
        manifest.termination,
        manifest.steps,
        manifest.capped_steps,
        manifest.snapshots.len(),
        dir.display()
    );
    Ok(match traj.termination {
        Termination::Instability { .. } => Status::Unstable,
        _ => Status::Ok,
    })
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// A run directory or a single CSV cloud.
    pub input: PathBuf,
    /// Output directory; defaults to `<run>/plots` or the CSV's directory.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Draw the deforming field at each plotted cloud.
    #[arg(long)]
    pub arrows: bool,
    /// Neighborhood radius for arrows on a bare CSV (defaults to the percentile heuristic).
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long)]
    pub top_axis: Option<Axis>,
    #[arg(long)]
    pub width: Option<u32>,
    #[arg(long)]
    pub height: Option<u32>,
}

/// A cloud to draw, with the state needed to recompute its field.
struct Frame {
    name: String,
    cloud: PointCloud,
}

pub fn plot(args: &PlotArgs) -> Result<Status> {
    let (frames, initial, r, params, base_opts, out_dir) = if args.input.is_dir() {
        let manifest = Manifest::load(&args.input)?;
        if manifest.snapshots.is_empty() {
            bail!("{} lists no snapshots", args.input.join(MANIFEST_FILE).display());
        }
        let frames = manifest
            .snapshots
            .iter()
            .map(|s| {
                let cloud = generators::load_csv(args.input.join(&s.file))?;
                Ok(Frame {
                    name: s.file.trim_end_matches(".csv").to_string(),
                    cloud,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let initial = frames[0].cloud.clone();
        let out = args.out.clone().unwrap_or_else(|| args.input.join("plots"));
        (
            frames,
            initial,
            manifest.config.r,
            manifest.config.field,
            manifest.config.plot,
            out,
        )
    } else {
        let cloud = generators::load_csv(&args.input)?;
        let r = match args.r {
            Some(r) => r,
            None if args.arrows => percentile_radius(&cloud, RADIUS_PERCENTILE, 2.0)?,
            None => 1.0,
        };
        let name = args
            .input
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "cloud".into());
        let out = args.out.clone().unwrap_or_else(|| {
            args.input
                .parent()
                .map(Path::to_path_buf)
                .unwrap_or_else(|| PathBuf::from("."))
        });
        (
            vec![Frame {
                name,
                cloud: cloud.clone(),
            }],
            cloud,
            r,
            FieldParams::default(),
            PlotOptions::default(),
            out,
        )
    };

    let options = PlotOptions {
        top_axis: args.top_axis.unwrap_or(base_opts.top_axis),
        width: args.width.unwrap_or(base_opts.width),
        height: args.height.unwrap_or(base_opts.height),
    };
    if initial.dim() > 3 {
        log::warn!("cloud has {} dimensions; plotting the first three axes", initial.dim());
    }
    fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;

    let graph = if args.arrows {
        Some(build_neighbor_graph(&initial, r)?)
    } else {
        None
    };
    let base_state = ManifoldState::new(initial);
    let mut written = 0;
    for frame in &frames {
        let arrows: Option<Vec<Vec<f64>>> = match &graph {
            Some(g) => {
                let state = base_state.replace_current(frame.cloud.clone())?;
                let field = compute_field(&state, g, &params)?;
                Some(field.vectors().map(<[f64]>::to_vec).collect())
            }
            None => None,
        };
        let points: Vec<Vec<f64>> = frame.cloud.points().map(<[f64]>::to_vec).collect();
        let views: Vec<(String, Projection)> = if frame.cloud.dim() >= 3 {
            vec![
                (format!("{}_3d.svg", frame.name), Projection::perspective()),
                (format!("{}_top.svg", frame.name), Projection::Top(options.top_axis)),
            ]
        } else {
            vec![(format!("{}.svg", frame.name), Projection::Plane(0, 1))]
        };
        for (file, projection) in views {
            let svg = plot::render(&points, arrows.as_deref(), projection, &options, &frame.name);
            let path = out_dir.join(&file);
            fs::write(&path, svg).with_context(|| format!("writing {}", path.display()))?;
            written += 1;
        }
    }
    eprintln!("wrote {written} SVG file(s) to {}", out_dir.display());
    Ok(Status::Ok)
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// Run directory containing manifest.json.
    pub run_dir: PathBuf,
}

/// Recomputes per-snapshot topology and spectrum reports from the stored clouds.
pub fn metrics_report(run_dir: &Path) -> Result<MetricsReport> {
    let manifest = Manifest::load(run_dir)?;
    let first = manifest
        .snapshots
        .first()
        .ok_or_else(|| anyhow!("manifest lists no snapshots"))?;
    let initial = generators::load_csv(run_dir.join(&first.file))?;
    let graph = build_neighbor_graph(&initial, manifest.config.r)?;
    let series = manifest
        .snapshots
        .iter()
        .map(|s| {
            let cloud = generators::load_csv(run_dir.join(&s.file))?;
            snapshot_metrics(&initial, &graph, &cloud, s.step, s.time, &manifest.config)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MetricsReport {
        neighbor_pairs: graph.pair_count(),
        isolated_points: graph.isolated().len(),
        final_snapshot: series.last().cloned(),
        series,
    })
}

pub fn metrics(args: &MetricsArgs) -> Result<Status> {
    let report = metrics_report(&args.run_dir)?;
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, &report)?;
    writeln!(out)?;
    Ok(Status::Ok)
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write one of the built-in initial manifolds as CSV.
    Generate(GenerateArgs),
    /// Deform a manifold and record snapshots, metrics and a manifest.
    Run(RunArgs),
    /// Render SVG scatter plots of a run directory or a CSV cloud.
    Plot(PlotArgs),
    /// Print per-snapshot topology and spectrum reports as JSON.
    Metrics(MetricsArgs),
}

pub fn dispatch(command: &Command) -> Result<Status> {
    match command {
        Command::Generate(a) => generate(a),
        Command::Run(a) => run(a),
        Command::Plot(a) => plot(a),
        Command::Metrics(a) => metrics(a),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("24x15"), Ok((24, 15)));
        assert_eq!(parse_grid("3X4"), Ok((3, 4)));
        assert!(parse_grid("24").is_err());
        assert!(parse_grid("ax3").is_err());
    }

    #[test]
    fn csv_kind_needs_input() {
        let args = ManifoldArgs {
            radius: 1.0,
            count: None,
            grid: (2, 2),
            scale: 1.0,
            input: None,
        };
        assert!(args.spec(Kind::Csv).is_err());
        assert_eq!(
            args.spec(Kind::Spiral).unwrap(),
            ManifoldSpec::Spiral { count: SPIRAL_COUNT }
        );
    }
}
