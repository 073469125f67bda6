//! Gate verdicts from per-qubit spin-up probabilities, flip-time detection and
//! operating ranges over field-gradient sweeps.

use std::f64::consts::PI;

use nalgebra::DVector;
use rayon::prelude::*;

use crate::device::{build_hamiltonian_rwa, field_to_energy, DeviceConfig, Gate};
use crate::dynamics::{evolve, Hamiltonian, SolverOptions};
use crate::error::{Error, Result};
use crate::noise::{collapse_set_for_device, CollapseSet, NoiseConfig};
use crate::quantum::{c, eigensystem, partial_trace, BasisState, DensityMatrix, Physicality, C64};

/// Logical-level thresholds on `P_↑`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Thresholds {
    pub upper: f64,
    pub lower: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { upper: 0.8, lower: 0.2 }
    }
}

impl Thresholds {
    pub fn new(upper: f64, lower: f64) -> Result<Self> {
        let t = Thresholds { upper, lower };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if 0.0 < self.lower && self.lower < self.upper && self.upper < 1.0 {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "thresholds need 0 < lower < upper < 1, got lower {} upper {}",
                self.lower, self.upper
            )))
        }
    }

    /// Signed distance past the threshold; positive means the qubit reads as `expect_up`.
    pub fn margin(&self, p_up: f64, expect_up: bool) -> f64 {
        if expect_up {
            p_up - self.upper
        } else {
            self.lower - p_up
        }
    }
}

/// `⟨↑|Tr_{other}(ρ)|↑⟩`, clamped to `[0, 1]`.
pub fn population_up(rho: &DensityMatrix, qubit: usize) -> Result<f64> {
    let reduced = partial_trace(rho, qubit)?;
    Ok(reduced.operator()[(0, 0)].re.clamp(0.0, 1.0))
}

/// Truth table of the gate on a computational basis state.
pub fn expected_final(gate: Gate, initial: BasisState) -> Result<BasisState> {
    if initial.n_qubits() != gate.n_qubits() {
        return Err(Error::ArityMismatch { expected: gate.n_qubits(), found: initial.n_qubits() });
    }
    let controls_up = gate.controls().iter().all(|&q| initial.is_up(q));
    Ok(if controls_up { initial.flip(gate.target()) } else { initial })
}

/// Outcome for one initial basis state.
#[derive(Clone, Debug, PartialEq)]
pub struct GateVerdict {
    pub initial: BasisState,
    pub expected: BasisState,
    pub p_up: Vec<f64>,
    pub pass: bool,
    pub failing: Vec<usize>,
    /// Smallest per-qubit margin past the thresholds.
    pub margin: f64,
    /// Qubit attaining `margin`.
    pub weakest_qubit: usize,
    pub physicality: Option<Physicality>,
}

impl GateVerdict {
    pub fn from_populations(
        gate: Gate,
        initial: BasisState,
        p_up: Vec<f64>,
        thresholds: &Thresholds,
    ) -> Result<Self> {
        let expected = expected_final(gate, initial)?;
        let margins: Vec<f64> = p_up.iter().enumerate().map(|(q, &p)| thresholds.margin(p, expected.is_up(q))).collect();
        let failing: Vec<usize> = margins.iter().enumerate().filter(|(_, &m)| m <= 0.0).map(|(q, _)| q).collect();
        let (weakest_qubit, margin) = margins
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (q, m)| if m < acc.1 { (q, m) } else { acc });
        Ok(GateVerdict { initial, expected, p_up, pass: failing.is_empty(), failing, margin, weakest_qubit, physicality: None })
    }
}

/// Verdict from the state of a trajectory at `t_flip`, linearly interpolating
/// `P_↑` between samples.
pub fn classify(
    traj: &crate::dynamics::Trajectory,
    t_flip: f64,
    gate: Gate,
    initial: BasisState,
    thresholds: &Thresholds,
) -> Result<GateVerdict> {
    let times = &traj.times;
    let (first, last) = (times[0], *times.last().unwrap());
    let span_tol = 1e-12 * last.abs().max(1.0);
    if t_flip < first - span_tol || t_flip > last + span_tol {
        return Err(Error::InvalidConfig(format!("t_flip {t_flip} outside trajectory span [{first}, {last}]")));
    }
    let i = times.partition_point(|&t| t < t_flip).min(times.len() - 1);
    let n = gate.n_qubits();
    let mut p_up = Vec::with_capacity(n);
    for q in 0..n {
        let hi = population_up(&traj.states[i], q)?;
        let p = if i == 0 || (times[i] - t_flip).abs() <= span_tol {
            hi
        } else {
            let lo = population_up(&traj.states[i - 1], q)?;
            let w = (t_flip - times[i - 1]) / (times[i] - times[i - 1]);
            lo + w * (hi - lo)
        };
        p_up.push(p);
    }
    GateVerdict::from_populations(gate, initial, p_up, thresholds)
}

/// Coarse samples per analytic flip time when searching for the flip.
const FLIP_SEARCH_DENSITY: usize = 400;
const FLIP_SEARCH_HORIZON: f64 = 4.0;

/// Time of the target's π flip from the all-controls-up state, from the exact
/// noise-free evolution under the rotating-frame Hamiltonian.
///
/// Returns the first local minimum of the target's `P_↑` that lies below
/// one half, refined by golden-section search.
pub fn flip_time(cfg: &DeviceConfig) -> Result<f64> {
    let cfg = cfg.resolved()?;
    let b = field_to_energy(cfg.b_ac, cfg.g);
    let analytic = PI / (2.0 * b);
    let horizon = FLIP_SEARCH_HORIZON * analytic;
    if !horizon.is_finite() {
        return Err(Error::NoFlipDetected { horizon });
    }
    let h = build_hamiltonian_rwa(&cfg)?;
    let eig = eigensystem(&h)?;
    let psi0 = BasisState::from_spins(&vec![true; cfg.n_qubits()]).ket();
    let amps: DVector<C64> = eig.vectors().matrix().adjoint() * psi0;
    let target = cfg.gate.target();
    let n = cfg.n_qubits();
    let target_up: Vec<bool> = (0..1usize << n).map(|i| BasisState::new(i, n).unwrap().is_up(target)).collect();

    let p_target = |t: f64| -> f64 {
        let phased = DVector::from_iterator(
            amps.len(),
            amps.iter().zip(eig.values()).map(|(a, &w)| a * c(0.0, -w * t).exp()),
        );
        let psi = eig.vectors().matrix() * phased;
        psi.iter().zip(&target_up).filter(|(_, &up)| up).map(|(z, _)| z.norm_sqr()).sum()
    };

    let steps = FLIP_SEARCH_DENSITY * FLIP_SEARCH_HORIZON as usize;
    let dt = horizon / steps as f64;
    let samples: Vec<f64> = (0..=steps).map(|i| p_target(i as f64 * dt)).collect();
    let start = samples.iter().position(|&p| p < 0.5).ok_or(Error::NoFlipDetected { horizon })?;
    let end = samples[start..].iter().position(|&p| p >= 0.5).map_or(steps, |o| start + o);
    let (imin, _) = samples[start..=end.min(steps)]
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &p)| if p < acc.1 { (i, p) } else { acc });
    let imin = start + imin;
    let lo = (imin.saturating_sub(1)) as f64 * dt;
    let hi = ((imin + 1).min(steps)) as f64 * dt;
    Ok(golden_section_min(p_target, lo, hi, 1e-10 * analytic))
}

fn golden_section_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while (b - a).abs() > tol {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
    }
    0.5 * (a + b)
}

/// A gradient sweep over one fixed-field row.
///
/// For the CNOT the row fixes the target field and the gradient is
/// `B_C − B_T`; for the Toffoli it fixes the left-control field and uses the
/// symmetric profile `B_TC = B_CL + G`, `B_CR = B_CL + 2G`.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub gate: Gate,
    pub fixed_field: f64,
    pub exchange: Vec<f64>,
    pub b_ac: f64,
    pub g: f64,
    pub axis: Vec<f64>,
    /// Bisect range boundaries to three significant figures.
    pub refine: bool,
    pub solver: SolverOptions,
    pub workers: usize,
}

impl SweepSpec {
    pub fn new(gate: Gate, fixed_field: f64, exchange: Vec<f64>, b_ac: f64, axis: Vec<f64>) -> Self {
        SweepSpec {
            gate,
            fixed_field,
            exchange,
            b_ac,
            g: crate::device::DEFAULT_G,
            axis,
            refine: true,
            solver: sweep_solver_options(),
            workers: 1,
        }
    }

    pub fn config_at(&self, gradient: f64) -> DeviceConfig {
        let b_z = match self.gate {
            Gate::Cnot => vec![self.fixed_field + gradient, self.fixed_field],
            Gate::Toffoli => vec![self.fixed_field, self.fixed_field + gradient, self.fixed_field + 2.0 * gradient],
        };
        DeviceConfig {
            gate: self.gate,
            exchange: self.exchange.clone(),
            b_z,
            b_ac: self.b_ac,
            g: self.g,
            drive_frequency: crate::device::DriveFrequency::Auto,
        }
    }
}

/// Solver tolerances used for sweeps: verdicts only need `P_↑` to ~1e-4.
pub fn sweep_solver_options() -> SolverOptions {
    SolverOptions { rtol: 1e-7, atol: 1e-10, ..Default::default() }
}

/// Linearly or logarithmically spaced gradient grid.
pub fn grid(start: f64, stop: f64, points: usize, log: bool) -> Result<Vec<f64>> {
    if points < 2 || !(start < stop) || (log && start <= 0.0) {
        return Err(Error::InvalidConfig(format!("bad grid start {start} stop {stop} points {points}")));
    }
    let f = |i: usize| i as f64 / (points - 1) as f64;
    Ok((0..points)
        .map(|i| if log { start * (stop / start).powf(f(i)) } else { start + (stop - start) * f(i) })
        .collect())
}

/// Everything needed to simulate one device configuration.
pub struct PreparedPoint {
    pub gradient: f64,
    pub config: DeviceConfig,
    pub t_flip: f64,
    pub hamiltonian: Hamiltonian,
    pub collapse: CollapseSet,
}

pub fn prepare_point(cfg: &DeviceConfig, noise: &NoiseConfig, gradient: f64) -> Result<PreparedPoint> {
    let config = match cfg.resolved() {
        Err(Error::Unlabeled) => bare_resonance(cfg)?,
        other => other?,
    };
    // without a detectable flip the gate is judged at the bare Rabi time, where it fails
    let t_flip = match flip_time(&config) {
        Err(Error::NoFlipDetected { .. }) => PI / (2.0 * field_to_energy(config.b_ac, config.g)),
        other => other?,
    };
    let hamiltonian = Hamiltonian::Static(build_hamiltonian_rwa(&config)?);
    let collapse = collapse_set_for_device(&config, noise)?;
    Ok(PreparedPoint { gradient, config, t_flip, hamiltonian, collapse })
}

/// Drive at the gap between the bare diagonal levels of the driven transition,
/// for drifts too strongly mixed to label.
fn bare_resonance(cfg: &DeviceConfig) -> Result<DeviceConfig> {
    let h0 = crate::device::static_hamiltonian(cfg)?;
    let (a, b) = cfg.gate.drive_transition();
    let gap = (h0[(a.index(), a.index())].re - h0[(b.index(), b.index())].re).abs();
    Ok(DeviceConfig { drive_frequency: crate::device::DriveFrequency::Explicit(gap), ..cfg.clone() })
}

/// Evolve `initial` to the flip time and classify it.
pub fn run_state(
    point: &PreparedPoint,
    initial: BasisState,
    thresholds: &Thresholds,
    solver: &SolverOptions,
) -> Result<GateVerdict> {
    let rho0 = DensityMatrix::basis(initial);
    let traj = evolve(&point.hamiltonian, &point.collapse, &rho0, &[point.t_flip], solver)?;
    let mut verdict = classify(&traj, point.t_flip, point.config.gate, initial, thresholds)?;
    verdict.physicality = Some(traj.physicality());
    Ok(verdict)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PointResult {
    pub gradient: f64,
    pub t_flip: f64,
    pub verdicts: Vec<GateVerdict>,
}

impl PointResult {
    pub fn pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    pub fn worst(&self) -> &GateVerdict {
        self.verdicts
            .iter()
            .min_by(|a, b| a.margin.total_cmp(&b.margin))
            .expect("a point has at least one verdict")
    }
}

/// Initial state and qubit that fail first at a range boundary.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Limit {
    pub state: BasisState,
    pub qubit: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Bound {
    /// Outermost passing grid value.
    pub grid: f64,
    /// Bisected boundary when refinement ran.
    pub refined: Option<f64>,
    /// The passing run reaches the end of the grid; the bound is one-sided.
    pub open: bool,
    pub limit: Option<Limit>,
}

impl Bound {
    pub fn value(&self) -> f64 {
        self.refined.unwrap_or(self.grid)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OperatingRange {
    pub lower: Bound,
    pub upper: Bound,
}

impl OperatingRange {
    pub fn contains(&self, other: &OperatingRange) -> bool {
        self.lower.value() <= other.lower.value() && self.upper.value() >= other.upper.value()
    }

    pub fn width(&self) -> f64 {
        self.upper.value() - self.lower.value()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub gate: Gate,
    pub fixed_field: f64,
    pub axis: Vec<f64>,
    pub points: Vec<PointResult>,
    pub range: Option<OperatingRange>,
}

impl SweepResult {
    /// Worst physicality over every simulated state.
    pub fn physicality(&self) -> Physicality {
        let mut worst = Physicality { trace_error: 0.0, hermiticity: 0.0, min_eigenvalue: f64::INFINITY };
        for v in self.points.iter().flat_map(|p| &p.verdicts) {
            if let Some(p) = v.physicality {
                worst.trace_error = worst.trace_error.max(p.trace_error);
                worst.hermiticity = worst.hermiticity.max(p.hermiticity);
                worst.min_eigenvalue = worst.min_eigenvalue.min(p.min_eigenvalue);
            }
        }
        worst
    }
}

fn thread_pool(workers: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("thread pool")
}

fn wrap(gradient: f64, state: &str, e: Error) -> Error {
    match e {
        e @ Error::SweepPoint { .. } => e,
        e => Error::SweepPoint { gradient, state: state.to_string(), source: Box::new(e) },
    }
}

/// Simulate every initial basis state at each gradient. Results are ordered by
/// gradient index, then by basis index.
pub fn sweep_points(spec: &SweepSpec, gradients: &[f64], noise: &NoiseConfig, thresholds: &Thresholds) -> Result<Vec<PointResult>> {
    let pool = thread_pool(spec.workers);
    pool.install(|| {
        let prepared: Vec<PreparedPoint> = gradients
            .par_iter()
            .map(|&g| prepare_point(&spec.config_at(g), noise, g).map_err(|e| wrap(g, "-", e)))
            .collect::<Result<_>>()?;
        let n = spec.gate.n_qubits();
        let tasks: Vec<(usize, BasisState)> =
            (0..prepared.len()).flat_map(|i| BasisState::all(n).map(move |s| (i, s))).collect();
        let verdicts: Vec<GateVerdict> = tasks
            .par_iter()
            .map(|&(i, s)| {
                run_state(&prepared[i], s, thresholds, &spec.solver).map_err(|e| wrap(prepared[i].gradient, &s.ascii(), e))
            })
            .collect::<Result<_>>()?;
        let per = 1usize << n;
        Ok(prepared
            .iter()
            .zip(verdicts.chunks(per))
            .map(|(p, v)| PointResult { gradient: p.gradient, t_flip: p.t_flip, verdicts: v.to_vec() })
            .collect())
    })
}

const REFINE_REL_TOL: f64 = 5e-4;

/// Operating range over `spec.axis`: the maximal contiguous run of gradients
/// where every initial state passes, chosen around the point with the largest
/// worst-case margin.
pub fn operating_range(spec: &SweepSpec, noise: &NoiseConfig, thresholds: &Thresholds) -> Result<SweepResult> {
    if spec.axis.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if spec.axis.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidConfig("sweep axis must be strictly increasing".into()));
    }
    thresholds.validate()?;
    noise.validate()?;
    let points = sweep_points(spec, &spec.axis, noise, thresholds)?;
    let range = passing_run(&points).map(|(lo, hi)| -> Result<OperatingRange> {
        let lower = boundary(spec, noise, thresholds, &points, lo, lo.checked_sub(1))?;
        let upper = boundary(spec, noise, thresholds, &points, hi, (hi + 1 < points.len()).then_some(hi + 1))?;
        Ok(OperatingRange { lower, upper })
    });
    let range = range.transpose()?;
    Ok(SweepResult { gate: spec.gate, fixed_field: spec.fixed_field, axis: spec.axis.clone(), points, range })
}

/// Index bounds of the longest run of passing points; the lower run wins ties.
pub fn passing_run(points: &[PointResult]) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    let mut i = 0;
    while i < points.len() {
        if !points[i].pass() {
            i += 1;
            continue;
        }
        let lo = i;
        while i + 1 < points.len() && points[i + 1].pass() {
            i += 1;
        }
        if best.map_or(true, |(a, b)| i - lo > b - a) {
            best = Some((lo, i));
        }
        i += 1;
    }
    best
}

fn limit_of(point: &PointResult) -> Limit {
    let worst = point.worst();
    Limit { state: worst.initial, qubit: worst.weakest_qubit }
}

fn boundary(
    spec: &SweepSpec,
    noise: &NoiseConfig,
    thresholds: &Thresholds,
    points: &[PointResult],
    inside: usize,
    outside: Option<usize>,
) -> Result<Bound> {
    let grid = points[inside].gradient;
    let Some(out) = outside else {
        return Ok(Bound { grid, refined: None, open: true, limit: None });
    };
    let mut limit = limit_of(&points[out]);
    if !spec.refine {
        return Ok(Bound { grid, refined: None, open: false, limit: Some(limit) });
    }
    let (mut good, mut bad) = (grid, points[out].gradient);
    while (bad - good).abs() > REFINE_REL_TOL * good.abs().max(bad.abs()) {
        let mid = 0.5 * (good + bad);
        let probe = sweep_points(spec, &[mid], noise, thresholds)?.remove(0);
        if probe.pass() {
            good = mid;
        } else {
            limit = limit_of(&probe);
            bad = mid;
        }
    }
    Ok(Bound { grid, refined: Some(0.5 * (good + bad)), open: false, limit: Some(limit) })
}
