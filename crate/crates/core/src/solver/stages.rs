//! Stage I / Stage II drivers, restarts and report assembly.

use std::sync::Arc;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use crate::algebra::{DualQuaternion, DualQuaternionVector, Quaternion};
use crate::error::{Error, Result};
use crate::func::{accumulate, DualFunction, DualGradient, Part, ResidualMap, Smoothing};
use crate::random::{derived_rng, unit_quaternion};
use crate::tolerance::FD_STEP;

use super::kkt::{kkt_residual, KktForm};
use super::optim::{augmented_lagrangian, AlSettings, AlState, Nlp, ValueGrad};
use super::report::{
    HistoryRecord, Multipliers, PerStage, RestartSummary, SolveReport, BEST_FOUND,
};
use super::{EqdqoProblem, SolverConfig};

/// A magnitude counts as settled on its kink once its argument is below
/// this fraction of the current smoothing level; smaller levels would not
/// move the solution.
const KINK_SETTLED: f64 = 1e-3;

/// Gauss-Newton steps used to project a start onto linear-in-`x_d`
/// constraints.
const PROJECTION_STEPS: usize = 20;

/// Central-difference gradient of both parts, for functions without an
/// analytic one.
pub(crate) fn fd_gradient(f: &DualFunction, x: &DualQuaternionVector, s: &Smoothing) -> DualGradient {
    let base = x.to_coords();
    let mut g = DualGradient::zeros(base.len());
    g.value = f.eval_smoothed(x, s);
    let mut z = base.clone();
    for i in 0..base.len() {
        z[i] = base[i] + FD_STEP;
        let plus = f.eval_smoothed(&DualQuaternionVector::from_coords(&z), s);
        z[i] = base[i] - FD_STEP;
        let minus = f.eval_smoothed(&DualQuaternionVector::from_coords(&z), s);
        z[i] = base[i];
        g.std[i] = (plus.std - minus.std) / (2.0 * FD_STEP);
        g.dual[i] = (plus.dual - minus.dual) / (2.0 * FD_STEP);
    }
    g
}

/// Which real coordinates a stage optimizes; the rest stay fixed.
#[derive(Clone, Debug)]
enum Coords {
    Full,
    /// Standard parts free, dual parts fixed.
    Std(Vec<Quaternion>),
    /// Dual parts free, standard parts fixed.
    Dual(Vec<Quaternion>),
}

impl Coords {
    fn range(&self, n: usize) -> std::ops::Range<usize> {
        match self {
            Coords::Full => 0..8 * n,
            Coords::Std(_) => 0..4 * n,
            Coords::Dual(_) => 4 * n..8 * n,
        }
    }

    fn extract(&self, x: &DualQuaternionVector) -> Vec<f64> {
        x.to_coords()[self.range(x.len())].to_vec()
    }

    fn point(&self, z: &[f64], _n: usize) -> DualQuaternionVector {
        let quats = |v: &[f64]| -> Vec<Quaternion> {
            v.chunks(4).map(|c| Quaternion::new(c[0], c[1], c[2], c[3])).collect()
        };
        match self {
            Coords::Full => DualQuaternionVector::from_coords(z),
            Coords::Std(dual) => DualQuaternionVector::from_parts(&quats(z), dual),
            Coords::Dual(std) => DualQuaternionVector::from_parts(std, &quats(z)),
        }
    }

    fn restrict(&self, g: &[f64], n: usize) -> Vec<f64> {
        g[self.range(n)].to_vec()
    }
}

/// Linear tilt per smoothing level: `(μ, e_μ)`.
type TiltTable = Vec<(f64, Vec<f64>)>;

/// `sign · (part(F) − shift)` as a smooth real function.
#[derive(Clone, Debug)]
struct Term {
    f: DualFunction,
    part: Part,
    shift: f64,
    sign: f64,
    frozen: Option<Vec<bool>>,
    /// Linear correction `−⟨t_μ, coords⟩` per smoothing level.
    tilt: Option<Arc<TiltTable>>,
}

impl Term {
    fn new(f: &DualFunction, part: Part) -> Self {
        Self { f: f.clone(), part, shift: 0.0, sign: 1.0, frozen: None, tilt: None }
    }

    fn frozen(mut self, branches: Vec<bool>) -> Self {
        self.frozen = Some(branches);
        self
    }

    fn bound(mut self, shift: f64, sign: f64) -> Self {
        self.shift = shift;
        self.sign = sign;
        self
    }

    fn tilted(mut self, tilt: Vec<(f64, Vec<f64>)>) -> Self {
        self.tilt = Some(Arc::new(tilt));
        self
    }

    fn smoothing(&self, mu: f64) -> Smoothing {
        Smoothing { mu, frozen: self.frozen.clone() }
    }

    fn eval(&self, x: &DualQuaternionVector, mu: f64) -> ValueGrad {
        let s = self.smoothing(mu);
        let g = self.f.gradient(x, &s).unwrap_or_else(|| fd_gradient(&self.f, x, &s));
        let (mut v, mut grad) = match self.part {
            Part::Std => (g.value.std, g.std),
            Part::Dual => (g.value.dual, g.dual),
        };
        if let Some(t) = self.tilt.as_ref().and_then(|levels| {
            levels.iter().find(|(m, _)| *m == mu).or(levels.last()).map(|(_, t)| t)
        }) {
            let z = x.to_coords();
            v -= t.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>();
            grad.iter_mut().zip(t.iter()).for_each(|(g, a)| *g -= a);
        }
        (self.sign * (v - self.shift), grad.into_iter().map(|d| self.sign * d).collect())
    }

    fn kinks(&self, x: &DualQuaternionVector, mu: f64) -> Vec<f64> {
        self.f.kink_arguments(x, &self.smoothing(mu), self.part)
    }
}

enum Goal {
    Term(Term),
    /// `Σ_k |(r_k)_d|²` over the residuals of a map.
    DualLeastSquares(Arc<dyn ResidualMap>),
}

impl Goal {
    fn eval(&self, x: &DualQuaternionVector, mu: f64) -> ValueGrad {
        match self {
            Goal::Term(t) => t.eval(x, mu),
            Goal::DualLeastSquares(map) => {
                let n = x.len();
                let mut grad = vec![0.0; 8 * n];
                let mut value = 0.0;
                for k in 0..map.len() {
                    let r = map.residual(k, x);
                    value += r.dual.norm_squared();
                    let blocks = map.jacobian(k, x);
                    accumulate(&blocks, n, [0.0; 4], r.dual.scale(2.0).to_array(), &mut grad);
                }
                (value, grad)
            }
        }
    }
}

struct StageNlp<'a> {
    n: usize,
    coords: &'a Coords,
    mu: f64,
    goal: &'a Goal,
    eqs: &'a [Term],
    ineqs: &'a [Term],
}

impl StageNlp<'_> {
    fn terms(&self, z: &[f64], terms: &[Term]) -> Vec<ValueGrad> {
        let x = self.coords.point(z, self.n);
        terms
            .iter()
            .map(|t| {
                let (v, g) = t.eval(&x, self.mu);
                (v, self.coords.restrict(&g, self.n))
            })
            .collect()
    }
}

impl Nlp for StageNlp<'_> {
    fn dim(&self) -> usize {
        self.coords.range(self.n).len()
    }

    fn objective(&self, z: &[f64]) -> ValueGrad {
        let x = self.coords.point(z, self.n);
        let (v, g) = self.goal.eval(&x, self.mu);
        (v, self.coords.restrict(&g, self.n))
    }

    fn equalities(&self, z: &[f64]) -> Vec<ValueGrad> {
        self.terms(z, self.eqs)
    }

    fn inequalities(&self, z: &[f64]) -> Vec<ValueGrad> {
        self.terms(z, self.ineqs)
    }
}

/// Result of running one stage from one start.
#[derive(Clone, Debug)]
struct LevelsOutcome {
    z: Vec<f64>,
    mu: f64,
    iterations: usize,
    stationarity: f64,
    feasibility: f64,
    converged: bool,
}

struct StageSetup<'a> {
    problem: &'a EqdqoProblem,
    coords: Coords,
    eqs: Vec<Term>,
    ineqs: Vec<Term>,
    settings: AlSettings,
    stage: u8,
}

impl StageSetup<'_> {
    fn n(&self) -> usize {
        self.problem.arity()
    }

    /// Run the smoothing continuation for `goal`, stopping early once every
    /// kink argument of `kink` has settled.
    fn run(
        &self,
        goal: &Goal,
        kink: Option<&Term>,
        levels: &[f64],
        start: Vec<f64>,
        history: &mut Vec<HistoryRecord>,
    ) -> LevelsOutcome {
        let n = self.n();
        let mut z = start;
        let mut state: Option<AlState> = None;
        let mut out = LevelsOutcome {
            z: z.clone(),
            mu: levels[0],
            iterations: 0,
            stationarity: f64::INFINITY,
            feasibility: f64::INFINITY,
            converged: false,
        };
        for &mu in levels {
            let nlp = StageNlp { n, coords: &self.coords, mu, goal, eqs: &self.eqs, ineqs: &self.ineqs };
            let objective = &self.problem.objective;
            let coords = &self.coords;
            let stage = self.stage;
            let al = augmented_lagrangian(&nlp, &z, state.take(), &self.settings, |zz, _, feas, stat| {
                let v = objective.eval(&coords.point(zz, n));
                history.push(HistoryRecord {
                    iter: history.len() + 1,
                    stage,
                    objective_std: v.std,
                    objective_dual: v.dual,
                    feasibility: feas,
                    kkt_residual: stat,
                });
            });
            z = al.z.clone();
            state = Some(al.state.clone());
            out = LevelsOutcome {
                z: al.z,
                mu,
                iterations: out.iterations + al.inner_iterations,
                stationarity: al.stationarity,
                feasibility: al.feasibility,
                converged: al.converged,
            };
            let settled = match kink {
                // A tilted term differs between levels by more than its
                // kinks, so it always runs the full schedule.
                Some(t) if t.tilt.is_some() => false,
                Some(t) => t.kinks(&self.coords.point(&z, n), mu).iter().all(|&a| a <= mu * KINK_SETTLED),
                None => true,
            };
            if settled {
                break;
            }
        }
        out
    }

    /// Minimum-norm Gauss-Newton projection of `z` onto the equalities.
    fn project(&self, mut z: Vec<f64>) -> Vec<f64> {
        let n = self.n();
        for _ in 0..PROJECTION_STEPS {
            let goal = Goal::Term(Term::new(&self.problem.objective, Part::Std));
            let nlp = StageNlp { n, coords: &self.coords, mu: 0.0, goal: &goal, eqs: &self.eqs, ineqs: &[] };
            let cons = nlp.equalities(&z);
            let worst = cons.iter().map(|(c, _)| c.abs()).fold(0.0, f64::max);
            if cons.is_empty() || worst <= 1e-3 * self.settings.tol_feas {
                break;
            }
            let dim = z.len();
            let a = DMatrix::from_fn(cons.len(), dim, |r, c| cons[r].1[c]);
            let rhs = DVector::from_iterator(cons.len(), cons.iter().map(|(c, _)| -c));
            let Ok(step) = a.svd(true, true).solve(&rhs, 1e-12) else {
                break;
            };
            z.iter_mut().zip(step.iter()).for_each(|(zi, si)| *zi += si);
        }
        z
    }
}

/// Stage I result from one starting point.
#[derive(Clone, Debug)]
pub struct StageOneSolution {
    pub restart_index: usize,
    /// For standard problems the dual parts are zero here; Stage II
    /// chooses them.
    pub point: DualQuaternionVector,
    /// Exact `f` at `point`.
    pub value: f64,
    /// Constraint violation handled by Stage I.
    pub feasibility: f64,
    pub mu_final: f64,
    pub stationarity: f64,
    pub iterations: usize,
    pub converged: bool,
    pub history: Vec<HistoryRecord>,
}

/// Stage II result for one Stage I solution.
#[derive(Clone, Debug)]
pub struct StageTwoSolution {
    pub point: DualQuaternionVector,
    /// Exact `f_d` at `point`.
    pub value: f64,
    pub branches: Vec<bool>,
    pub mu_final: f64,
    pub stationarity: f64,
    pub iterations: usize,
    pub converged: bool,
    pub history: Vec<HistoryRecord>,
}

fn settings(cfg: &SolverConfig) -> AlSettings {
    AlSettings {
        tol_grad: cfg.tol_grad,
        tol_feas: cfg.tol_feas,
        max_outer: cfg.max_outer,
        max_inner: cfg.max_inner,
    }
}

/// Starting point of restart `index`: supplied points first, then unit
/// quaternions drawn uniformly per variable with zero dual parts.
pub fn initial_point(problem: &EqdqoProblem, cfg: &SolverConfig, index: usize) -> DualQuaternionVector {
    if let Some(p) = problem.initial_points.get(index) {
        return p.clone();
    }
    let mut rng = derived_rng(cfg.seed, index as u64);
    (0..problem.arity()).map(|_| DualQuaternion::from_std(unit_quaternion(&mut rng))).collect()
}

/// Stage I from a single start.
pub fn stage1_from(
    problem: &EqdqoProblem,
    cfg: &SolverConfig,
    start: &DualQuaternionVector,
    restart_index: usize,
) -> StageOneSolution {
    let n = problem.arity();
    let (coords, eqs) = if problem.is_standard() {
        let eqs = problem.constraints.iter().map(|h| Term::new(h, Part::Std)).collect();
        (Coords::Std(vec![Quaternion::ZERO; n]), eqs)
    } else {
        let eqs = problem
            .constraints
            .iter()
            .flat_map(|h| [Term::new(h, Part::Std), Term::new(h, Part::Dual)])
            .collect();
        (Coords::Full, eqs)
    };
    let setup = StageSetup { problem, coords, eqs, ineqs: Vec::new(), settings: settings(cfg), stage: 1 };
    let objective = Term::new(&problem.objective, Part::Std);
    let mut history = Vec::new();
    let out = setup.run(
        &Goal::Term(objective.clone()),
        Some(&objective),
        &cfg.mu_schedule,
        setup.coords.extract(start),
        &mut history,
    );
    let point = setup.coords.point(&out.z, n);
    StageOneSolution {
        restart_index,
        value: problem.objective.eval(&point).std,
        feasibility: out.feasibility,
        point,
        mu_final: out.mu,
        stationarity: out.stationarity,
        iterations: out.iterations,
        converged: out.converged,
        history,
    }
}

/// Stage II for one Stage I solution.
///
/// Standard problems keep `x` at the Stage I solution and optimize `x_d`
/// against `(h_j)_d = 0`, starting from `x_d = 0` projected onto those
/// constraints. General problems optimize all coordinates inside the band
/// `|f − L^I| ≤ τ`. Magnitude branches are frozen at the Stage I solution.
/// When the problem supplies a tie-break map, a final pass minimizes
/// `Σ |(r_k)_d|²` without letting `f_d` rise above its Stage II value by
/// more than the band.
pub fn stage2_from(
    problem: &EqdqoProblem,
    cfg: &SolverConfig,
    s1: &StageOneSolution,
) -> StageTwoSolution {
    let n = problem.arity();
    let branches = problem.objective.branches(&s1.point);
    let mut objective = Term::new(&problem.objective, Part::Dual).frozen(branches.clone());
    // Only appreciable magnitudes carry Stage I's gradient into Stage II.
    if problem.is_standard() && branches.iter().any(|&b| b) {
        let tilt = cfg.mu_schedule.iter().map(|&mu| (mu, stage_one_tilt(problem, &s1.point, mu))).collect();
        objective = objective.tilted(tilt);
    }
    let tau = cfg.tau_band(s1.value);
    let setup = if problem.is_standard() {
        let eqs = problem.constraints.iter().map(|h| Term::new(h, Part::Dual)).collect();
        StageSetup {
            problem,
            coords: Coords::Dual(s1.point.std_parts()),
            eqs,
            ineqs: Vec::new(),
            settings: settings(cfg),
            stage: 2,
        }
    } else {
        let eqs = problem
            .constraints
            .iter()
            .flat_map(|h| [Term::new(h, Part::Std), Term::new(h, Part::Dual)])
            .collect();
        let band = Term::new(&problem.objective, Part::Std).frozen(branches.clone());
        let ineqs = vec![band.clone().bound(s1.value + tau, 1.0), band.bound(s1.value - tau, -1.0)];
        StageSetup { problem, coords: Coords::Full, eqs, ineqs, settings: settings(cfg), stage: 2 }
    };
    let mut history = Vec::new();
    let mut start = setup.project(setup.coords.extract(&s1.point));
    // Standard problems with appreciable residuals have an `f_d` that is
    // flat on the feasible set; starting from the least-squares fit makes
    // that the answer instead of wherever the projection landed.
    if let (Some(map), true) = (&problem.tie_break, problem.is_standard()) {
        let fit = setup.run(&Goal::DualLeastSquares(map.clone()), None, &[cfg.mu_min()], start.clone(), &mut history);
        if fit.feasibility <= cfg.tol_feas {
            start = fit.z;
        }
    }
    let start_point = setup.coords.point(&start, n);
    let levels: Vec<f64> = if objective.kinks(&start_point, cfg.mu_schedule[0]).is_empty() {
        vec![cfg.mu_min()]
    } else {
        cfg.mu_schedule.clone()
    };
    let mut out =
        setup.run(&Goal::Term(objective.clone()), Some(&objective), &levels, start, &mut history);

    if let (Some(map), true) = (&problem.tie_break, problem.is_standard()) {
        let x = setup.coords.point(&out.z, n);
        let (v, _) = objective.eval(&x, out.mu);
        let band = objective.clone().bound(v + cfg.tau_band(v), 1.0);
        let tie = StageSetup { ineqs: vec![band], ..setup_clone(&setup) };
        let mut tie_history = Vec::new();
        let res = tie.run(&Goal::DualLeastSquares(map.clone()), None, &[out.mu], out.z.clone(), &mut tie_history);
        // Near a kink the band still lets the fit move off it, which
        // trades Stage II stationarity for the tie-break; keep the
        // stationary point then.
        let stationarity = |z: &[f64]| {
            let s = Smoothing::frozen(out.mu, branches.clone());
            kkt_residual(problem, &setup.coords.point(z, n), KktForm::StageTwo, &s, None)
                .map_or(f64::INFINITY, |k| k.residual)
        };
        if res.feasibility <= cfg.tol_feas && stationarity(&res.z) <= stationarity(&out.z).max(cfg.tol_grad) {
            let offset = history.len();
            history.extend(tie_history.into_iter().map(|h| HistoryRecord { iter: h.iter + offset, ..h }));
            out = LevelsOutcome { z: res.z, iterations: out.iterations + res.iterations, ..out };
        }
    }

    let point = setup.coords.point(&out.z, n);
    StageTwoSolution {
        value: problem.objective.eval(&point).dual,
        point,
        branches,
        mu_final: out.mu,
        stationarity: out.stationarity,
        iterations: out.iterations,
        converged: out.converged,
        history,
    }
}

/// Stage I Lagrangian gradient `∇f + Σλ_j∇h_j` at `x` with least-squares
/// multipliers, placed on the `x_d` block of the `8n` layout.
///
/// For standard problems `∂r_d/∂x_d = ∂r/∂x` and `∂(h_j)_d/∂x_d = ∂h_j/∂x`,
/// so along feasible `x_d` directions the Stage II slope of every
/// appreciable magnitude equals its Stage I gradient. Subtracting this
/// residual makes Stage II see an exactly stationary Stage I point instead
/// of drifting along directions whose only slope is Stage I's rounding.
fn stage_one_tilt(problem: &EqdqoProblem, x: &DualQuaternionVector, mu: f64) -> Vec<f64> {
    let n = problem.arity();
    let s = Smoothing::with_mu(mu);
    let grad = |f: &DualFunction| f.gradient(x, &s).unwrap_or_else(|| fd_gradient(f, x, &s)).std[..4 * n].to_vec();
    let g = grad(&problem.objective);
    let mut tilt = vec![0.0; 8 * n];
    if problem.constraints.is_empty() {
        tilt[4 * n..].copy_from_slice(&g);
        return tilt;
    }
    let cols: Vec<Vec<f64>> = problem.constraints.iter().map(grad).collect();
    let a = DMatrix::from_fn(4 * n, cols.len(), |r, c| cols[c][r]);
    let rhs = DVector::from_iterator(4 * n, g.iter().map(|v| -v));
    let lambda = a.clone().svd(true, true).solve(&rhs, 1e-12).unwrap_or_else(|_| DVector::zeros(cols.len()));
    let e = a * lambda - rhs;
    tilt[4 * n..].copy_from_slice(e.as_slice());
    tilt
}

fn setup_clone<'a>(s: &StageSetup<'a>) -> StageSetup<'a> {
    StageSetup {
        problem: s.problem,
        coords: s.coords.clone(),
        eqs: s.eqs.clone(),
        ineqs: s.ineqs.clone(),
        settings: s.settings,
        stage: s.stage,
    }
}

/// Map `f` over `0..count` on up to `threads` workers, keeping index order.
pub(crate) fn par_map<T: Send>(count: usize, threads: usize, f: impl Fn(usize) -> T + Sync) -> Vec<T> {
    if threads <= 1 || count <= 1 {
        return (0..count).map(f).collect();
    }
    let workers = threads.min(count);
    let mut slots: Vec<Option<T>> = (0..count).map(|_| None).collect();
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let f = &f;
                scope.spawn(move || {
                    (w..count).step_by(workers).map(|i| (i, f(i))).collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (i, v) in h.join().expect("restart worker panicked") {
                slots[i] = Some(v);
            }
        }
    });
    slots.into_iter().map(|s| s.expect("every index computed")).collect()
}

fn run_stage1_restarts(problem: &EqdqoProblem, cfg: &SolverConfig) -> Vec<StageOneSolution> {
    par_map(cfg.restarts, cfg.threads, |i| stage1_from(problem, cfg, &initial_point(problem, cfg, i), i))
}

fn feasible(s: &StageOneSolution, cfg: &SolverConfig) -> bool {
    s.feasibility <= cfg.tol_feas && s.value.is_finite()
}

fn infeasible(runs: &[StageOneSolution], cfg: &SolverConfig) -> Error {
    let residual = runs.iter().map(|s| s.feasibility).fold(f64::INFINITY, f64::min);
    Error::Infeasible { residual, tol: cfg.tol_feas }
}

/// Best Stage I solution over restarts (smallest `f`, then lowest index).
pub fn solve_stage1(problem: &EqdqoProblem, cfg: &SolverConfig) -> Result<StageOneSolution> {
    cfg.validate()?;
    let runs = run_stage1_restarts(problem, cfg);
    runs.iter()
        .filter(|s| feasible(s, cfg))
        .min_by(|a, b| a.value.total_cmp(&b.value).then(a.restart_index.cmp(&b.restart_index)))
        .cloned()
        .ok_or_else(|| infeasible(&runs, cfg))
}

/// Stage II on a given Stage I solution, assembled into a report.
pub fn solve_stage2(
    problem: &EqdqoProblem,
    s1: &StageOneSolution,
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    cfg.validate()?;
    let started = Instant::now();
    let s2 = stage2_from(problem, cfg, s1);
    let summary = vec![RestartSummary {
        index: s1.restart_index,
        stage1_value: s1.value,
        feasible: true,
        stage2_value: Some(s2.value),
    }];
    assemble(problem, cfg, s1, &s2, summary, started)
}

/// Two-stage solve over all restarts.
///
/// Stage I runs from every start. Solutions whose `f` lies within the band
/// `τ = max(tau_l, tau_rel·|L^I|)` of the best are treated as equally good
/// and carried into Stage II; the reported solution has the smallest
/// `f_d` among them, preferring runs where both stages converged (lowest
/// restart index on ties).
pub fn solve_eqdqo(problem: &EqdqoProblem, cfg: &SolverConfig) -> Result<SolveReport> {
    cfg.validate()?;
    let started = Instant::now();
    let runs = run_stage1_restarts(problem, cfg);
    let best = runs
        .iter()
        .filter(|s| feasible(s, cfg))
        .map(|s| s.value)
        .fold(f64::INFINITY, f64::min);
    if !best.is_finite() {
        return Err(infeasible(&runs, cfg));
    }
    let tau = cfg.tau_band(best);
    let candidates: Vec<&StageOneSolution> =
        runs.iter().filter(|s| feasible(s, cfg) && s.value <= best + tau).collect();
    let stage2: Vec<StageTwoSolution> =
        par_map(candidates.len(), cfg.threads, |i| stage2_from(problem, cfg, candidates[i]));
    let pick = (0..candidates.len())
        .min_by(|&a, &b| {
            let settled = |i: usize| candidates[i].converged && stage2[i].converged;
            settled(b).cmp(&settled(a)).then(stage2[a].value.total_cmp(&stage2[b].value)).then(a.cmp(&b))
        })
        .expect("at least one candidate");
    let summary = runs
        .iter()
        .map(|s| RestartSummary {
            index: s.restart_index,
            stage1_value: s.value,
            feasible: feasible(s, cfg),
            stage2_value: candidates
                .iter()
                .position(|c| c.restart_index == s.restart_index)
                .map(|i| stage2[i].value),
        })
        .collect();
    assemble(problem, cfg, candidates[pick], &stage2[pick], summary, started)
}

fn assemble(
    problem: &EqdqoProblem,
    cfg: &SolverConfig,
    s1: &StageOneSolution,
    s2: &StageTwoSolution,
    restarts: Vec<RestartSummary>,
    started: Instant,
) -> Result<SolveReport> {
    let point = &s2.point;
    let value = problem.objective.eval(point);
    let feasibility = problem.feasibility(point);
    if feasibility.max() > cfg.tol_feas {
        return Err(Error::Infeasible { residual: feasibility.max(), tol: cfg.tol_feas });
    }
    let k1 = kkt_residual(problem, &s1.point, KktForm::StageOne, &Smoothing::with_mu(s1.mu_final), None)?;
    let k2 = kkt_residual(
        problem,
        point,
        KktForm::StageTwo,
        &Smoothing::frozen(s2.mu_final, s2.branches.clone()),
        None,
    )?;
    let mut history = s1.history.clone();
    let offset = history.len();
    history.extend(s2.history.iter().map(|h| HistoryRecord { iter: h.iter + offset, ..*h }));
    Ok(SolveReport {
        stage1_value: value.std,
        stage2_value: value.dual,
        solution: point.clone(),
        multipliers: Multipliers { stage1: k1.multipliers, stage2: k2.multipliers, sigma: k2.sigma },
        kkt_residual: PerStage { stage1: k1.residual, stage2: k2.residual },
        feasibility,
        iterations: PerStage { stage1: s1.iterations, stage2: s2.iterations },
        restart_index: s1.restart_index,
        wall_time_ms: started.elapsed().as_secs_f64() * 1e3,
        converged: s1.converged && s2.converged,
        label: BEST_FOUND.to_string(),
        standard: problem.is_standard(),
        mu_final: PerStage { stage1: s1.mu_final, stage2: s2.mu_final },
        tau_band: cfg.tau_band(s1.value),
        restarts,
        history,
    })
}
