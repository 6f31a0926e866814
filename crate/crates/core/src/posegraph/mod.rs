//! Pose graph optimization: unit dual quaternion poses linked by relative
//! measurements, with the 2-norm of the subtraction errors as objective.

mod format;

use std::collections::VecDeque;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{
    is_canonical_sign, mat4_mul, mat4_scale, DualQuaternion, DualQuaternionVector, Quaternion, UnitDualQuaternion,
    CONJ_MATRIX,
};
use crate::error::{Error, Result};
use crate::func::{coordinate, unit_norm_constraint, Aggregate, JacobianBlock, Part, ResidualFunction, ResidualMap};
use crate::handeye::{transform_error, TransformError};
use crate::pose::Pose;
use crate::random::{normal, rng, unit_axis};
use crate::solver::{solve_eqdqo, EqdqoProblem, SolveReport, SolverConfig};

pub use format::{parse_graph, parse_poses, serialize_graph, serialize_poses};

/// Largest rotation angle of a generated ground-truth pose. Relative
/// rotations then stay below π, so sign-canonical measurements agree with
/// the products `x̂_i* x̂_j` of the truth.
const MAX_TRUTH_ANGLE: f64 = 1.3;

/// Radius of the generated loop.
const LOOP_RADIUS: f64 = 3.0;

/// A directed measurement between vertices `i` and `j` (1-based).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    /// Relative pose with sign-canonical rotation.
    pub measurement: Pose,
}

impl Edge {
    pub fn udq(&self) -> UnitDualQuaternion {
        self.measurement.to_udq().expect("validated measurement")
    }
}

/// Vertices `1..=n` with optional initial guesses and edges in
/// lexicographic `(i, j, input order)` order.
#[derive(Clone, Debug, PartialEq)]
pub struct PoseGraph {
    pub initial: Vec<Option<Pose>>,
    pub edges: Vec<Edge>,
    /// Ground-truth poses of generated graphs.
    pub truth: Option<Vec<Pose>>,
}

fn canonical(p: Pose) -> Pose {
    if is_canonical_sign(p.rotation) {
        p
    } else {
        Pose { rotation: -p.rotation, ..p }
    }
}

impl PoseGraph {
    /// Validate, canonicalize measurement signs and sort the edges.
    pub fn new(n: usize, initial: Vec<Option<Pose>>, edges: Vec<Edge>) -> Result<Self> {
        if initial.len() != n {
            return Err(Error::InvalidGraph(format!("{} initial slots for {n} vertices", initial.len())));
        }
        for e in &edges {
            if e.i == 0 || e.j == 0 || e.i > n || e.j > n {
                return Err(Error::InvalidGraph(format!("edge ({}, {}) outside 1..={n}", e.i, e.j)));
            }
            if e.i == e.j {
                return Err(Error::InvalidGraph(format!("self-loop at vertex {}", e.i)));
            }
            e.measurement.validate()?;
        }
        let mut edges: Vec<Edge> = edges.into_iter().map(|e| Edge { measurement: canonical(e.measurement), ..e }).collect();
        edges.sort_by_key(|e| (e.i, e.j));
        Ok(Self { initial, edges, truth: None })
    }

    pub fn with_truth(mut self, truth: Vec<Pose>) -> Result<Self> {
        if truth.len() != self.len() {
            return Err(Error::InvalidGraph(format!("{} truth poses for {} vertices", truth.len(), self.len())));
        }
        self.truth = Some(truth);
        Ok(self)
    }

    /// Number of vertices.
    pub fn len(&self) -> usize {
        self.initial.len()
    }

    pub fn is_empty(&self) -> bool {
        self.initial.is_empty()
    }

    /// Weak connectivity over all vertices.
    pub fn is_connected(&self) -> bool {
        self.bfs_order().len() == self.len()
    }

    /// Vertices reachable from vertex 1 ignoring edge direction, with the
    /// edge that reached each one, in breadth-first order.
    fn bfs_order(&self) -> Vec<(usize, Option<(usize, bool)>)> {
        let n = self.len();
        if n == 0 {
            return Vec::new();
        }
        let mut adj: Vec<Vec<(usize, usize, bool)>> = vec![Vec::new(); n];
        for (k, e) in self.edges.iter().enumerate() {
            adj[e.i - 1].push((e.j - 1, k, true));
            adj[e.j - 1].push((e.i - 1, k, false));
        }
        let mut seen = vec![false; n];
        let mut order = vec![(0, None)];
        seen[0] = true;
        let mut queue = VecDeque::from([0]);
        while let Some(v) = queue.pop_front() {
            for &(w, k, forward) in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    order.push((w, Some((k, forward))));
                    queue.push_back(w);
                }
            }
        }
        order
    }

    /// Poses chained from `x̂_1 = 1` along a breadth-first spanning tree.
    pub fn spanning_tree_guess(&self) -> Result<DualQuaternionVector> {
        let order = self.bfs_order();
        if order.len() != self.len() {
            return Err(Error::DisconnectedGraph);
        }
        let mut x = vec![DualQuaternion::ONE; self.len()];
        for (v, via) in order {
            if let Some((k, forward)) = via {
                let e = &self.edges[k];
                let q = e.udq().inner();
                x[v] = if forward { x[e.i - 1] * q } else { x[e.j - 1] * q.conj() };
            }
        }
        Ok(DualQuaternionVector::new(x))
    }

    /// The initial guesses moved into the anchored gauge `x̂_1 = 1`, when
    /// every vertex has one.
    pub fn anchored_initial(&self) -> Option<DualQuaternionVector> {
        let poses: Option<Vec<Pose>> = self.initial.iter().copied().collect();
        let x: Vec<UnitDualQuaternion> = poses?.iter().map(|p| p.to_udq().expect("validated")).collect();
        let g = x[0].conj();
        Some(x.iter().map(|xi| (g * *xi).inner()).collect())
    }

    /// `ê` under the assignment `x`, in edge order.
    pub fn error_vector(&self, x: &DualQuaternionVector) -> DualQuaternionVector {
        self.edges.iter().map(|e| edge_error(x[e.i - 1], x[e.j - 1], e.udq().inner())).collect()
    }
}

/// `q̂_ij − x̂_i* x̂_j`.
pub fn edge_error(xi: DualQuaternion, xj: DualQuaternion, q: DualQuaternion) -> DualQuaternion {
    q - xi.conj() * xj
}

/// The edge errors of a graph as residuals over the `n` poses.
#[derive(Clone, Debug)]
pub struct PgoMap {
    n: usize,
    edges: Vec<(usize, usize, DualQuaternion)>,
}

impl PgoMap {
    pub fn new(g: &PoseGraph) -> Self {
        Self { n: g.len(), edges: g.edges.iter().map(|e| (e.i - 1, e.j - 1, e.udq().inner())).collect() }
    }
}

impl ResidualMap for PgoMap {
    fn arity(&self) -> usize {
        self.n
    }

    fn len(&self) -> usize {
        self.edges.len()
    }

    fn residual(&self, k: usize, x: &DualQuaternionVector) -> DualQuaternion {
        let (i, j, q) = self.edges[k];
        edge_error(x[i], x[j], q)
    }

    fn jacobian(&self, k: usize, x: &DualQuaternionVector) -> Vec<JacobianBlock> {
        // r = q − a* b and r_d = q_d − a* b_d − a_d* b for x̂_i = a + a_d ε,
        // x̂_j = b + b_d ε; a* b = R(b)·C·a and a* b = L(a*)·b.
        let (i, j, _) = self.edges[k];
        let (a, b) = (x[i], x[j]);
        let rb = mat4_scale(&mat4_mul(&b.std.right_matrix(), &CONJ_MATRIX), -1.0);
        let rbd = mat4_scale(&mat4_mul(&b.dual.right_matrix(), &CONJ_MATRIX), -1.0);
        let la = mat4_scale(&a.std.conj().left_matrix(), -1.0);
        let lad = mat4_scale(&a.dual.conj().left_matrix(), -1.0);
        let zero = [[0.0; 4]; 4];
        vec![
            JacobianBlock { var: i, part: Part::Std, d_std: rb, d_dual: rbd },
            JacobianBlock { var: i, part: Part::Dual, d_std: zero, d_dual: rb },
            JacobianBlock { var: j, part: Part::Std, d_std: la, d_dual: lad },
            JacobianBlock { var: j, part: Part::Dual, d_std: zero, d_dual: la },
        ]
    }
}

/// `min ‖ê‖₂ s.t. x̂_1 = 1, |x̂_i|² = 1 (i ≥ 2)`.
///
/// The anchor pins all eight coordinates of `x̂_1`, which also makes it
/// unit. Starting points are the complete initial guesses, if any, then a
/// spanning-tree chain of the measurements.
pub fn build_pgo(g: &PoseGraph) -> Result<EqdqoProblem> {
    let n = g.len();
    if n < 2 || g.edges.is_empty() {
        return Err(Error::InvalidGraph("need at least two vertices and one edge".into()));
    }
    if !g.is_connected() {
        return Err(Error::DisconnectedGraph);
    }
    let map = PgoMap::new(g);
    let tie = Arc::new(map.clone());
    let f = ResidualFunction::new(map, Aggregate::Norm2).into_function();
    let mut cons: Vec<_> = (0..4).map(|c| coordinate(0, c, if c == 0 { 1.0 } else { 0.0 }, n)).collect();
    cons.extend((1..n).map(|v| unit_norm_constraint(v, n)));
    let mut starts: Vec<DualQuaternionVector> = g.anchored_initial().into_iter().collect();
    starts.push(g.spanning_tree_guess()?);
    Ok(EqdqoProblem::new(f, cons)?.with_initial_points(starts).with_tie_break(tie))
}

fn truth_pose(r: &mut impl Rng, k: usize, n: usize) -> UnitDualQuaternion {
    let theta = std::f64::consts::TAU * k as f64 / n as f64;
    let yaw = 1.0 * theta.sin();
    let tilt = Quaternion::from_axis_angle(0.15 * r.random::<f64>(), unit_axis(r)).expect("unit axis");
    let q = Quaternion::from_axis_angle(yaw, Quaternion::K).expect("unit axis") * tilt;
    debug_assert!(q.rotation_angle() <= MAX_TRUTH_ANGLE);
    let spatial = [LOOP_RADIUS * theta.cos(), LOOP_RADIUS * theta.sin(), 0.3 * (2.0 * theta).sin()];
    let body = q.conj().rotate(spatial);
    UnitDualQuaternion::from_pose(q, Quaternion::imaginary(body)).expect("valid pose")
}

/// Loop trajectory of `n` poses with edges `(k, k+1)`, the closing edge
/// `(n, 1)`, and `loop_closures` distinct random chords between
/// non-adjacent vertices. Measurements are perturbed like the hand-eye
/// generator's and sign-canonicalized; the draws do not depend on the
/// noise levels.
pub fn generate_cycle_graph(n: usize, loop_closures: usize, sigma_r: f64, sigma_t: f64, seed: u64) -> Result<PoseGraph> {
    if n < 3 {
        return Err(Error::InvalidGraph(format!("a cycle needs at least 3 vertices, got {n}")));
    }
    if !(sigma_r >= 0.0 && sigma_t >= 0.0) {
        return Err(Error::Config("noise levels must be nonnegative".into()));
    }
    let adjacent = |i: usize, j: usize| i.abs_diff(j) == 1 || i.abs_diff(j) == n - 1;
    let available = n * (n - 1) / 2 - n;
    if loop_closures > available {
        return Err(Error::InvalidGraph(format!("{loop_closures} chords requested, {available} possible")));
    }
    let mut r = rng(seed);
    let truth: Vec<UnitDualQuaternion> = (0..n).map(|k| truth_pose(&mut r, k, n)).collect();
    let mut pairs: Vec<(usize, usize)> = (0..n).map(|k| (k, (k + 1) % n)).collect();
    while pairs.len() < n + loop_closures {
        let i = r.random_range(0..n);
        let j = r.random_range(0..n);
        if i != j && !adjacent(i, j) && !pairs.iter().any(|&(a, b)| (a, b) == (i, j) || (a, b) == (j, i)) {
            pairs.push((i, j));
        }
    }
    let edges = pairs
        .into_iter()
        .map(|(i, j)| {
            let axis = unit_axis(&mut r);
            let angle = sigma_r * normal(&mut r);
            let p = [sigma_t * normal(&mut r), sigma_t * normal(&mut r), sigma_t * normal(&mut r)];
            let q = Quaternion::from_axis_angle(angle, axis).expect("unit axis");
            let noise = UnitDualQuaternion::from_pose(q, Quaternion::imaginary(p)).expect("valid noise");
            let m = (truth[i].conj() * truth[j] * noise).canonicalize();
            Edge { i: i + 1, j: j + 1, measurement: Pose::from_udq(m) }
        })
        .collect();
    PoseGraph::new(n, vec![None; n], edges)?.with_truth(truth.into_iter().map(Pose::from_udq).collect())
}

/// Per-vertex errors against the ground truth moved into the anchored
/// gauge `x̂_1 = 1`.
pub fn evaluate_poses(g: &PoseGraph, x: &DualQuaternionVector) -> Result<Vec<TransformError>> {
    let truth = g.truth.as_ref().ok_or(Error::NoGroundTruth)?;
    let g1 = truth[0].to_udq()?.conj();
    truth
        .iter()
        .zip(x.iter())
        .map(|(t, &xi)| transform_error(&Pose::from_udq(g1 * t.to_udq()?), xi))
        .collect()
}

/// Solve report of a pose graph with per-vertex errors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PgoReport {
    #[serde(flatten)]
    pub solve: SolveReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertex_errors: Option<Vec<TransformError>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_rotation_error: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_translation_error: Option<f64>,
}

pub fn solve(g: &PoseGraph, cfg: &SolverConfig) -> Result<PgoReport> {
    let problem = build_pgo(g)?;
    let solve = solve_eqdqo(&problem, cfg)?;
    let vertex_errors = match &g.truth {
        Some(_) => Some(evaluate_poses(g, &solve.solution)?),
        None => None,
    };
    let max = |f: fn(&TransformError) -> f64| vertex_errors.as_ref().map(|v| v.iter().map(f).fold(0.0, f64::max));
    Ok(PgoReport {
        max_rotation_error: max(|e| e.rotation),
        max_translation_error: max(|e| e.translation),
        vertex_errors,
        solve,
    })
}
