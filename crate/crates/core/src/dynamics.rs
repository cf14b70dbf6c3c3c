//! The autonomous flattening field and its explicit time integration.
//!
//! Each point moves with velocity
//!
//! ```text
//! v_i = Σ_{j ∈ U_i}   K1 · (p_i − p_j)/|p_i − p_j| · (d_ij(0) − |p_i − p_j|)
//!     + Σ_{w ∉ U_i, w ≠ i} K2 · (p_i − p_w)/|p_i − p_w|
//! ```
//!
//! where `U_i` is the neighborhood of `i` on the initial cloud. The first sum
//! holds neighbor pairs at their initial separation, the second pushes every
//! other pair apart with constant magnitude. The field depends only on the
//! current positions (plus the frozen graph), never on time.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{build_neighbor_graph, NeighborGraph, PointCloud};

/// Coefficients of the elastic and repulsive interactions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldParams {
    /// Elastic coefficient (force per unit length).
    pub k1: f64,
    /// Repulsive coefficient (distance-independent force).
    pub k2: f64,
    /// Pairs closer than this contribute nothing; their unit vector is undefined.
    pub epsilon_dist: f64,
}

impl Default for FieldParams {
    fn default() -> Self {
        FieldParams {
            k1: 0.1,
            k2: 0.0002,
            epsilon_dist: 1e-9,
        }
    }
}

impl FieldParams {
    pub fn validate(&self) -> Result<()> {
        positive("k1", self.k1)?;
        positive("k2", self.k2)?;
        positive("epsilon_dist", self.epsilon_dist)
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be positive and finite, got {v}")))
    }
}

/// Explicit Euler integration settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    /// Time step Δ.
    pub dt: f64,
    pub max_steps: usize,
    /// Run counts as converged once the largest field magnitude stays below
    /// this value for `converge_window` consecutive steps.
    pub converge_vel: f64,
    pub converge_window: usize,
    /// Largest allowed per-step displacement, as a fraction of the neighborhood radius.
    pub max_disp_frac: f64,
    pub snapshot_every: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            dt: 1.0,
            max_steps: 200_000,
            converge_vel: 1e-3,
            converge_window: 10,
            max_disp_frac: 0.25,
            snapshot_every: 200,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        positive("dt", self.dt)?;
        if self.max_steps < 1 {
            return Err(Error::invalid("max_steps", "must be at least 1"));
        }
        if self.converge_vel < 0.0 || !self.converge_vel.is_finite() {
            return Err(Error::invalid(
                "converge_vel",
                format!("must be non-negative, got {}", self.converge_vel),
            ));
        }
        if self.converge_window < 1 {
            return Err(Error::invalid("converge_window", "must be at least 1"));
        }
        if !(self.max_disp_frac > 0.0 && self.max_disp_frac <= 1.0) {
            return Err(Error::invalid(
                "max_disp_frac",
                format!("must lie in (0, 1], got {}", self.max_disp_frac),
            ));
        }
        if self.snapshot_every < 1 {
            return Err(Error::invalid("snapshot_every", "must be at least 1"));
        }
        Ok(())
    }
}

/// Initial cloud, current cloud and elapsed simulated time.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldState {
    initial: Arc<PointCloud>,
    current: PointCloud,
    time: f64,
    step_index: usize,
}

impl ManifoldState {
    /// State at `t = 0`, where the current cloud equals the initial one.
    pub fn new(initial: PointCloud) -> Self {
        ManifoldState {
            current: initial.clone(),
            initial: Arc::new(initial),
            time: 0.0,
            step_index: 0,
        }
    }

    /// A state whose current cloud differs from the initial one.
    pub fn with_current(initial: PointCloud, current: PointCloud) -> Result<Self> {
        Self::new(initial).replace_current(current)
    }

    /// Same initial cloud and clock, different current positions.
    pub fn replace_current(&self, current: PointCloud) -> Result<Self> {
        if current.dim() != self.initial.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.initial.dim(),
                found: current.dim(),
            });
        }
        if current.len() != self.initial.len() {
            return Err(Error::invalid(
                "current",
                format!("has {} points, initial cloud has {}", current.len(), self.initial.len()),
            ));
        }
        Ok(ManifoldState {
            initial: Arc::clone(&self.initial),
            current,
            time: self.time,
            step_index: self.step_index,
        })
    }

    /// Overrides the clock. The field never reads it.
    pub fn at_time(mut self, time: f64, step_index: usize) -> Self {
        self.time = time;
        self.step_index = step_index;
        self
    }

    pub fn initial(&self) -> &PointCloud {
        &self.initial
    }

    pub fn current(&self) -> &PointCloud {
        &self.current
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn step_index(&self) -> usize {
        self.step_index
    }

    pub fn len(&self) -> usize {
        self.current.len()
    }

    pub fn is_empty(&self) -> bool {
        self.current.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.current.dim()
    }
}

/// One velocity vector per point, stored row-major like [`PointCloud`].
#[derive(Debug, Clone, PartialEq)]
pub struct DeformingField {
    dim: usize,
    vectors: Vec<f64>,
    degenerate_pairs: usize,
}

impl DeformingField {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    pub fn vectors(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.vectors.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.vectors
    }

    /// Unordered pairs skipped because they were closer than `epsilon_dist`.
    pub fn degenerate_pairs(&self) -> usize {
        self.degenerate_pairs
    }

    /// Largest vector norm over all points.
    pub fn max_magnitude(&self) -> f64 {
        self.vectors()
            .map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }
}

/// Contribution of one interaction type to a single point's velocity.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub vector: Vec<f64>,
    /// Pairs skipped because they were closer than `epsilon_dist`.
    pub degenerate_pairs: usize,
}

struct PairSums {
    elastic: Vec<f64>,
    repulsive: Vec<f64>,
    degenerate_elastic: usize,
    degenerate_repulsive: usize,
}

/// Accumulates both interaction sums for point `i`, visiting partners in index order.
fn pair_sums(i: usize, current: &PointCloud, graph: &NeighborGraph, params: &FieldParams) -> PairSums {
    let dim = current.dim();
    let p = current.point(i);
    let neighbors = graph.neighbors(i);
    let mut next = 0;
    let mut out = PairSums {
        elastic: vec![0.0; dim],
        repulsive: vec![0.0; dim],
        degenerate_elastic: 0,
        degenerate_repulsive: 0,
    };

    for (j, q) in current.points().enumerate() {
        if j == i {
            continue;
        }
        let neighbor = match neighbors.get(next) {
            Some(n) if n.index == j => {
                next += 1;
                Some(n.initial_distance)
            }
            _ => None,
        };
        let d = p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        if d < params.epsilon_dist {
            match neighbor {
                Some(_) => out.degenerate_elastic += 1,
                None => out.degenerate_repulsive += 1,
            }
            continue;
        }
        let (acc, coef) = match neighbor {
            Some(d0) => (&mut out.elastic, params.k1 * (d0 - d) / d),
            None => (&mut out.repulsive, params.k2 / d),
        };
        for ((a, x), y) in acc.iter_mut().zip(p).zip(q) {
            *a += coef * (x - y);
        }
    }
    out
}

fn check_point(state: &ManifoldState, graph: &NeighborGraph, i: usize) -> Result<()> {
    if graph.len() != state.len() {
        return Err(Error::invalid(
            "graph",
            format!("built for {} points, state has {}", graph.len(), state.len()),
        ));
    }
    if i >= state.len() {
        return Err(Error::IndexOutOfRange {
            index: i,
            len: state.len(),
        });
    }
    Ok(())
}

/// Elastic term on point `i`: pulls or pushes each neighbor pair back toward its initial separation.
pub fn elastic_term(i: usize, state: &ManifoldState, graph: &NeighborGraph, params: &FieldParams) -> Result<Term> {
    check_point(state, graph, i)?;
    let sums = pair_sums(i, state.current(), graph, params);
    Ok(Term {
        vector: sums.elastic,
        degenerate_pairs: sums.degenerate_elastic,
    })
}

/// Repulsive term on point `i`: a push of magnitude `K2` away from every non-neighbor.
pub fn repulsive_term(i: usize, state: &ManifoldState, graph: &NeighborGraph, params: &FieldParams) -> Result<Term> {
    check_point(state, graph, i)?;
    let sums = pair_sums(i, state.current(), graph, params);
    Ok(Term {
        vector: sums.repulsive,
        degenerate_pairs: sums.degenerate_repulsive,
    })
}

/// Evaluates the deforming field on every point of the current cloud.
///
/// Each unordered pair is visited once and its contribution is added to both
/// endpoints. Contributions to any one point still arrive in ascending partner
/// index, so every vector is bitwise equal to `elastic_term + repulsive_term`.
pub fn compute_field(state: &ManifoldState, graph: &NeighborGraph, params: &FieldParams) -> Result<DeformingField> {
    check_point(state, graph, 0)?;
    let current = state.current();
    let dim = current.dim();
    let n = current.len();
    let mut elastic = vec![0.0; n * dim];
    let mut repulsive = vec![0.0; n * dim];
    let mut diff = vec![0.0; dim];
    let mut degenerate_pairs = 0;

    for i in 0..n {
        let p = current.point(i);
        let neighbors = graph.neighbors(i);
        let mut next = neighbors.partition_point(|nb| nb.index <= i);
        for j in i + 1..n {
            let neighbor = match neighbors.get(next) {
                Some(nb) if nb.index == j => {
                    next += 1;
                    Some(nb.initial_distance)
                }
                _ => None,
            };
            let q = current.point(j);
            let mut d2 = 0.0;
            for ((dk, a), b) in diff.iter_mut().zip(p).zip(q) {
                *dk = a - b;
                d2 += *dk * *dk;
            }
            let d = d2.sqrt();
            if d < params.epsilon_dist {
                degenerate_pairs += 1;
                continue;
            }
            let (acc, coef) = match neighbor {
                Some(d0) => (&mut elastic, params.k1 * (d0 - d) / d),
                None => (&mut repulsive, params.k2 / d),
            };
            let (head, tail) = acc.split_at_mut(j * dim);
            let vi = &mut head[i * dim..(i + 1) * dim];
            let vj = &mut tail[..dim];
            for k in 0..dim {
                let c = coef * diff[k];
                vi[k] += c;
                vj[k] -= c;
            }
        }
    }

    let vectors: Vec<f64> = elastic.iter().zip(&repulsive).map(|(e, r)| e + r).collect();
    if let Some(pos) = vectors.iter().position(|v| !v.is_finite()) {
        return Err(Error::Instability { point: pos / dim });
    }
    Ok(DeformingField {
        dim,
        vectors,
        degenerate_pairs,
    })
}

/// Result of one Euler step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: ManifoldState,
    /// Factor applied to the whole field; `1.0` unless the displacement cap was hit.
    pub scale: f64,
}

impl StepOutcome {
    pub fn capped(&self) -> bool {
        self.scale < 1.0
    }
}

/// Common factor that keeps the largest per-step displacement at or below `max_disp_frac · r`.
fn displacement_scale(field: &DeformingField, config: &IntegratorConfig, radius: f64) -> f64 {
    let limit = config.max_disp_frac * radius;
    let largest = config.dt * field.max_magnitude();
    if largest > limit {
        limit / largest
    } else {
        1.0
    }
}

/// Advances every point by `Δ · v_i` (explicit Euler).
///
/// If some displacement would exceed `max_disp_frac · radius`, the whole
/// field is scaled down by one common factor so field directions are kept.
pub fn step(
    state: &ManifoldState,
    field: &DeformingField,
    config: &IntegratorConfig,
    radius: f64,
) -> Result<StepOutcome> {
    if field.dim() != state.dim() || field.len() != state.len() {
        return Err(Error::invalid("field", "does not match the state's shape"));
    }
    let scale = displacement_scale(field, config, radius);
    let h = config.dt * scale;
    let mut next = state.current.clone();
    for (x, v) in next.as_flat_mut().iter_mut().zip(field.as_flat()) {
        *x += h * v;
    }
    if let Some(pos) = next.as_flat().iter().position(|x| !x.is_finite()) {
        return Err(Error::Instability {
            point: pos / state.dim(),
        });
    }
    Ok(StepOutcome {
        state: ManifoldState {
            initial: Arc::clone(&state.initial),
            current: next,
            time: state.time + config.dt,
            step_index: state.step_index + 1,
        },
        scale,
    })
}

/// Outcome of comparing a finite-difference time derivative with the field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivativeCheck {
    /// `max_i ‖(p_i(t+Δ) − p_i(t))/Δ − v_i(t)‖`.
    pub residual: f64,
    /// The displacement cap was active, so the residual reflects the rescale rather than the integrator.
    pub capped: bool,
}

/// Takes one step and measures how far the difference quotient of the
/// trajectory is from the field that produced it.
pub fn deformation_derivative_check(
    state: &ManifoldState,
    graph: &NeighborGraph,
    params: &FieldParams,
    config: &IntegratorConfig,
) -> Result<DerivativeCheck> {
    let field = compute_field(state, graph, params)?;
    let outcome = step(state, &field, config, graph.radius())?;
    let dim = state.dim();
    let residual = state
        .current()
        .points()
        .zip(outcome.state.current().points())
        .zip(field.vectors())
        .map(|((before, after), v)| {
            (0..dim)
                .map(|k| {
                    let r = (after[k] - before[k]) / config.dt - v[k];
                    r * r
                })
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0, f64::max);
    Ok(DerivativeCheck {
        residual,
        capped: outcome.capped(),
    })
}

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "reason")]
pub enum Termination {
    Converged,
    StepBudgetExhausted,
    Instability { step: usize, point: usize },
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::StepBudgetExhausted => "step_budget_exhausted",
            Termination::Instability { .. } => "instability",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub time: f64,
    pub cloud: PointCloud,
}

/// Recorded run: snapshots (first is the initial cloud, last is the final one),
/// the frozen graph, and run counters.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub graph: NeighborGraph,
    pub snapshots: Vec<Snapshot>,
    pub termination: Termination,
    pub final_state: ManifoldState,
    pub capped_steps: usize,
    pub degeneracy_events: usize,
    /// Largest field magnitude at the last evaluated step.
    pub final_max_speed: f64,
}

impl Trajectory {
    pub fn steps(&self) -> usize {
        self.final_state.step_index()
    }
}

/// Builds the neighbor graph of `initial` and integrates the field until
/// convergence, the step budget, or a numerical blow-up.
pub fn run_simulation(
    initial: PointCloud,
    r: f64,
    params: &FieldParams,
    config: &IntegratorConfig,
) -> Result<Trajectory> {
    params.validate()?;
    config.validate()?;
    let graph = build_neighbor_graph(&initial, r)?;
    Ok(integrate(ManifoldState::new(initial), graph, params, config))
}

/// Integrates from an arbitrary starting state with a prebuilt graph.
pub fn integrate(
    start: ManifoldState,
    graph: NeighborGraph,
    params: &FieldParams,
    config: &IntegratorConfig,
) -> Trajectory {
    let radius = graph.radius();
    let mut snapshots = vec![Snapshot {
        step: start.step_index(),
        time: start.time(),
        cloud: start.current().clone(),
    }];
    let mut state = start;
    let mut quiet = 0usize;
    let mut capped_steps = 0usize;
    let mut degeneracy_events = 0usize;
    let mut final_max_speed = 0.0;
    let mut taken = 0usize;

    let termination = loop {
        if taken >= config.max_steps {
            break Termination::StepBudgetExhausted;
        }
        let field = match compute_field(&state, &graph, params) {
            Ok(f) => f,
            Err(Error::Instability { point }) => {
                break Termination::Instability {
                    step: state.step_index(),
                    point,
                }
            }
            Err(e) => unreachable!("field inputs validated up front: {e}"),
        };
        if field.degenerate_pairs() > 0 {
            degeneracy_events += 1;
        }
        final_max_speed = field.max_magnitude();
        if final_max_speed < config.converge_vel {
            quiet += 1;
        } else {
            quiet = 0;
        }
        let outcome = match step(&state, &field, config, radius) {
            Ok(o) => o,
            Err(Error::Instability { point }) => {
                break Termination::Instability {
                    step: state.step_index(),
                    point,
                }
            }
            Err(e) => unreachable!("step inputs validated up front: {e}"),
        };
        if outcome.capped() {
            capped_steps += 1;
        }
        state = outcome.state;
        taken += 1;
        if taken.is_multiple_of(config.snapshot_every) {
            snapshots.push(Snapshot {
                step: state.step_index(),
                time: state.time(),
                cloud: state.current().clone(),
            });
        }
        if quiet >= config.converge_window {
            break Termination::Converged;
        }
    };

    if snapshots.last().map(|s| s.step) != Some(state.step_index()) {
        snapshots.push(Snapshot {
            step: state.step_index(),
            time: state.time(),
            cloud: state.current().clone(),
        });
    }
    if let Termination::Instability { step, point } = termination {
        log::warn!("run became unstable at step {step} (point {point})");
    }

    Trajectory {
        graph,
        snapshots,
        termination,
        final_state: state,
        capped_steps,
        degeneracy_events,
        final_max_speed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cloud(pts: &[[f64; 2]]) -> PointCloud {
        PointCloud::from_points(pts).unwrap()
    }

    #[test]
    fn elastic_vanishes_at_start() {
        let c = cloud(&[[0.0, 0.0], [1.0, 0.5], [1.7, 1.1], [3.0, 0.0]]);
        let g = build_neighbor_graph(&c, 1.5).unwrap();
        let s = ManifoldState::new(c);
        for i in 0..4 {
            let e = elastic_term(i, &s, &g, &FieldParams::default()).unwrap();
            assert!(e.vector.iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn stretched_pair_pulls_back() {
        let init = cloud(&[[1.0, 0.0], [0.0, 0.0]]);
        let g = build_neighbor_graph(&init, 1.5).unwrap();
        let s = ManifoldState::with_current(init, cloud(&[[2.0, 0.0], [0.0, 0.0]])).unwrap();
        let e = elastic_term(0, &s, &g, &FieldParams::default()).unwrap();
        assert!((e.vector[0] + 0.1).abs() < 1e-15 && e.vector[1] == 0.0);
    }

    #[test]
    fn repulsion_is_distance_independent() {
        let p = FieldParams::default();
        for sep in [0.5, 3.0, 1e4] {
            let c = cloud(&[[0.0, 0.0], [sep, 0.0]]);
            let g = build_neighbor_graph(&c, 0.1).unwrap();
            let t = repulsive_term(1, &ManifoldState::new(c), &g, &p).unwrap();
            assert!((t.vector[0] - p.k2).abs() < 1e-18 && t.vector[1] == 0.0);
        }
    }

    #[test]
    fn symmetric_repulsion_cancels() {
        let c = cloud(&[[-2.0, 0.0], [0.0, 0.0], [2.0, 0.0]]);
        let g = build_neighbor_graph(&c, 0.5).unwrap();
        let t = repulsive_term(1, &ManifoldState::new(c), &g, &FieldParams::default()).unwrap();
        assert_eq!(t.vector, vec![0.0, 0.0]);
    }

    #[test]
    fn coincident_pairs_are_skipped_and_counted() {
        let c = cloud(&[[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]]);
        let g = build_neighbor_graph(&c, 0.5).unwrap();
        let s = ManifoldState::new(c);
        let t = repulsive_term(0, &s, &g, &FieldParams::default()).unwrap();
        assert_eq!(t.degenerate_pairs, 1);
        assert_eq!(t.vector, vec![-0.0002, 0.0]);
        let f = compute_field(&s, &g, &FieldParams::default()).unwrap();
        assert_eq!(f.degenerate_pairs(), 1);
    }

    #[test]
    fn bad_index_rejected() {
        let c = cloud(&[[0.0, 0.0], [1.0, 0.0]]);
        let g = build_neighbor_graph(&c, 2.0).unwrap();
        assert!(matches!(
            elastic_term(2, &ManifoldState::new(c), &g, &FieldParams::default()),
            Err(Error::IndexOutOfRange { index: 2, len: 2 })
        ));
    }

    #[test]
    fn zero_field_only_advances_time() {
        let c = cloud(&[[0.0, 0.0], [1.0, 0.0]]);
        let g = build_neighbor_graph(&c, 2.0).unwrap();
        let s = ManifoldState::new(c.clone());
        let f = compute_field(&s, &g, &FieldParams::default()).unwrap();
        let cfg = IntegratorConfig {
            dt: 0.1,
            ..Default::default()
        };
        let out = step(&s, &f, &cfg, 2.0).unwrap();
        assert_eq!(out.state.current(), &c);
        assert_eq!(out.state.time(), 0.1);
        assert_eq!(out.state.step_index(), 1);
    }

    #[test]
    fn single_point_moves_along_field() {
        let s = ManifoldState::new(cloud(&[[0.0, 0.0]]));
        let f = DeformingField {
            dim: 2,
            vectors: vec![1.0, 0.0],
            degenerate_pairs: 0,
        };
        let cfg = IntegratorConfig {
            dt: 0.1,
            ..Default::default()
        };
        let out = step(&s, &f, &cfg, 10.0).unwrap();
        assert_eq!(out.state.current().point(0), &[0.1, 0.0]);
        assert!(!out.capped());
    }

    #[test]
    fn displacement_cap_rescales_uniformly() {
        let s = ManifoldState::new(cloud(&[[0.0, 0.0], [5.0, 5.0]]));
        let f = DeformingField {
            dim: 2,
            vectors: vec![10.0, 0.0, 0.0, 5.0],
            degenerate_pairs: 0,
        };
        let cfg = IntegratorConfig {
            dt: 1.0,
            max_disp_frac: 0.25,
            ..Default::default()
        };
        let out = step(&s, &f, &cfg, 4.0).unwrap();
        assert!(out.capped());
        assert_eq!(out.scale, 0.1);
        assert_eq!(out.state.current().point(0), &[1.0, 0.0]);
        assert_eq!(out.state.current().point(1), &[5.0, 5.5]);
    }

    #[test]
    fn non_finite_step_is_instability() {
        let s = ManifoldState::new(cloud(&[[0.0, 0.0], [1.0, 0.0]]));
        let f = DeformingField {
            dim: 2,
            vectors: vec![0.0, 0.0, f64::MAX, 0.0],
            degenerate_pairs: 0,
        };
        let cfg = IntegratorConfig {
            dt: 10.0,
            max_disp_frac: 1.0,
            ..Default::default()
        };
        // cap keeps the displacement bounded, so go through an infinite radius
        assert!(matches!(
            step(&s, &f, &cfg, f64::INFINITY),
            Err(Error::Instability { point: 1 })
        ));
    }

    #[test]
    fn capped_derivative_check_is_flagged() {
        let c = cloud(&[[0.0, 0.0], [1.0, 0.0]]);
        let g = build_neighbor_graph(&c, 0.5).unwrap();
        let params = FieldParams {
            k2: 100.0,
            ..Default::default()
        };
        let cfg = IntegratorConfig {
            dt: 1.0,
            ..Default::default()
        };
        let chk = deformation_derivative_check(&ManifoldState::new(c), &g, &params, &cfg).unwrap();
        assert!(chk.capped);
        // scale = 0.125 / 100, residual = (1 - scale) · 100
        assert!((chk.residual - (100.0 - 0.125)).abs() < 1e-9);
    }

    #[test]
    fn resting_pair_converges_immediately() {
        let c = cloud(&[[0.0, 0.0], [1.0, 0.0]]);
        let cfg = IntegratorConfig::default();
        let traj = run_simulation(c.clone(), 2.0, &FieldParams::default(), &cfg).unwrap();
        assert_eq!(traj.termination, Termination::Converged);
        assert_eq!(traj.steps(), cfg.converge_window);
        assert_eq!(traj.snapshots.len(), 2);
        assert_eq!(traj.snapshots[0].step, 0);
        assert_eq!(traj.final_state.current(), &c);
    }

    #[test]
    fn step_budget_is_respected() {
        let c = cloud(&[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]);
        let cfg = IntegratorConfig {
            max_steps: 7,
            snapshot_every: 3,
            ..Default::default()
        };
        let traj = run_simulation(c, 1.5, &FieldParams::default(), &cfg).unwrap();
        assert_eq!(traj.termination, Termination::StepBudgetExhausted);
        let steps: Vec<usize> = traj.snapshots.iter().map(|s| s.step).collect();
        assert_eq!(steps, vec![0, 3, 6, 7]);
    }

    #[test]
    fn invalid_configs_rejected() {
        let c = cloud(&[[0.0, 0.0], [1.0, 0.0]]);
        let p = FieldParams::default();
        for cfg in [
            IntegratorConfig {
                dt: 0.0,
                ..Default::default()
            },
            IntegratorConfig {
                max_steps: 0,
                ..Default::default()
            },
            IntegratorConfig {
                max_disp_frac: 1.5,
                ..Default::default()
            },
            IntegratorConfig {
                converge_vel: -1.0,
                ..Default::default()
            },
        ] {
            assert!(run_simulation(c.clone(), 2.0, &p, &cfg).is_err());
        }
        let bad = FieldParams {
            k1: 0.0,
            ..Default::default()
        };
        assert!(run_simulation(c, 2.0, &bad, &IntegratorConfig::default()).is_err());
    }
}
