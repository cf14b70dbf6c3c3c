//! Deforming-manifold dynamics.
//!
//! A manifold embedded in `R^n` is represented by a cloud of sample points.
//! Neighborhoods are fixed on the initial cloud; the autonomous flattening
//! field then keeps neighbor pairs at their initial distance while pushing
//! all other pairs apart, which unrolls curved manifolds into flat ones.
//!
//! ```
//! use deform_core::{generators, metrics, run_simulation, FieldParams, IntegratorConfig};
//!
//! let cloud = generators::half_circle(5.0, 12).unwrap();
//! let config = IntegratorConfig { max_steps: 50, ..Default::default() };
//! let traj = run_simulation(cloud, 3.0, &FieldParams::default(), &config).unwrap();
//! let report = metrics::spectrum(traj.final_state.current(), 0.99).unwrap();
//! assert_eq!(report.singular_values.len(), 2);
//! ```

pub mod dynamics;
pub mod error;
pub mod generators;
pub mod geometry;
pub mod metrics;

pub use dynamics::{
    compute_field, deformation_derivative_check, elastic_term, integrate, repulsive_term, run_simulation, step,
    DeformingField, DerivativeCheck, FieldParams, IntegratorConfig, ManifoldState, Snapshot, StepOutcome, Term,
    Termination, Trajectory,
};
pub use error::{Error, Result};
pub use generators::ManifoldSpec;
pub use geometry::{build_neighbor_graph, euclidean_distance, percentile_radius, Neighbor, NeighborGraph, PointCloud};
pub use metrics::{
    adhesion_check, flatness_ratio, neighbor_distortion, spectrum, topology_report, AdhesionReport, DistortionStats,
    SpectrumReport, TopologyReport,
};
