//! Lindblad master equation: reference right-hand side, adaptive integration
//! and an exact superoperator-exponential oracle.

use nalgebra::{DMatrix, DVector};

use crate::device::PeriodicHamiltonian;
use crate::error::{Error, Result};
use crate::noise::CollapseSet;
use crate::ode::{self, OdeOptions, OdeStats};
use crate::quantum::{c, partial_trace, DensityMatrix, Operator, Physicality, C64};

pub type SolverOptions = OdeOptions;

/// Largest Hermiticity residual tolerated at a sample point before it is
/// symmetrized.
pub const SAMPLE_HERMITICITY_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub enum Hamiltonian {
    Static(Operator),
    Periodic(PeriodicHamiltonian),
}

impl Hamiltonian {
    pub fn dim(&self) -> usize {
        match self {
            Hamiltonian::Static(h) => h.dim(),
            Hamiltonian::Periodic(p) => p.dim(),
        }
    }

    pub fn at(&self, t: f64) -> Operator {
        match self {
            Hamiltonian::Static(h) => h.clone(),
            Hamiltonian::Periodic(p) => p.at(t),
        }
    }
}

impl From<Operator> for Hamiltonian {
    fn from(h: Operator) -> Self {
        Hamiltonian::Static(h)
    }
}

/// `−i[H, ρ] + Σ_n (C_n ρ C_n† − ½{C_n†C_n, ρ})`
pub fn lindblad_rhs(h: &Operator, collapse: &CollapseSet, rho: &DensityMatrix) -> Result<Operator> {
    let d = rho.dim();
    for found in [h.dim(), collapse.dim()] {
        if found != d {
            return Err(Error::DimensionMismatch { expected: d, found });
        }
    }
    let r = rho.operator().matrix();
    let hm = h.matrix();
    let mut out = (hm * r - r * hm) * c(0.0, -1.0);
    for op in collapse {
        let cm = op.matrix().matrix();
        let cd = cm.adjoint();
        let cdc = &cd * cm;
        out += cm * r * &cd - (&cdc * r + r * &cdc) * c(0.5, 0.0);
    }
    Ok(Operator::from_matrix(out))
}

/// Column-stacking Liouvillian: `vec(dρ/dt) = L · vec(ρ)`.
pub fn liouvillian(h: &Operator, collapse: &CollapseSet) -> Result<DMatrix<C64>> {
    let d = h.dim();
    if collapse.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: collapse.dim() });
    }
    let id = DMatrix::<C64>::identity(d, d);
    let hm = h.matrix();
    let mut l = (id.kronecker(hm) - hm.transpose().kronecker(&id)) * c(0.0, -1.0);
    for op in collapse {
        let cm = op.matrix().matrix();
        let cdc = cm.adjoint() * cm;
        l += cm.conjugate().kronecker(cm);
        l -= (id.kronecker(&cdc) + cdc.transpose().kronecker(&id)) * c(0.5, 0.0);
    }
    Ok(l)
}

fn vectorize(m: &DMatrix<C64>) -> DVector<C64> {
    // nalgebra storage is column-major, so this is column stacking
    DVector::from_column_slice(m.as_slice())
}

fn unvectorize(v: &DVector<C64>, d: usize) -> DMatrix<C64> {
    DMatrix::from_column_slice(d, d, v.as_slice())
}

/// `ρ(t) = unvec(exp(L t) · vec(ρ0))` by scaling and squaring.
pub fn expm_oracle(h: &Hamiltonian, collapse: &CollapseSet, rho0: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
    let h = match h {
        Hamiltonian::Static(h) => h,
        Hamiltonian::Periodic(_) => return Err(Error::TimeDependentHamiltonian),
    };
    if h.dim() != rho0.dim() {
        return Err(Error::DimensionMismatch { expected: rho0.dim(), found: h.dim() });
    }
    if t == 0.0 {
        return Ok(rho0.clone());
    }
    let l = liouvillian(h, collapse)? * c(t, 0.0);
    let v = l.exp() * vectorize(rho0.operator().matrix());
    Ok(DensityMatrix::from_operator_unchecked(Operator::from_matrix(unvectorize(&v, rho0.dim()))))
}

/// Lindblad generator precompiled for repeated evaluation on flat buffers.
///
/// Collapse operators carrying eigen-transition indices are folded into a rate
/// matrix acting on eigenbasis populations; other rank-one operators use their
/// factors and anything else is applied densely.
pub struct Generator {
    d: usize,
    heff0: Vec<C64>,
    drive: Option<(Vec<C64>, Vec<C64>, f64)>,
    basis: Option<Vec<C64>>,
    rates: Vec<f64>,
    dyads: Vec<(Vec<C64>, Vec<C64>)>,
    dense: Vec<Vec<C64>>,
}

fn row_major(m: &DMatrix<C64>) -> Vec<C64> {
    let d = m.nrows();
    (0..d * d).map(|i| m[(i / d, i % d)]).collect()
}

impl Generator {
    pub fn new(h: &Hamiltonian, collapse: &CollapseSet) -> Result<Self> {
        let d = h.dim();
        if collapse.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, found: collapse.dim() });
        }
        let (h0, drive) = match h {
            Hamiltonian::Static(h) => (h.matrix().clone(), None),
            Hamiltonian::Periodic(p) => (
                p.h0.matrix().clone(),
                Some((row_major(p.h_cos.matrix()), row_major(p.h_sin.matrix()), p.omega)),
            ),
        };
        let mut k = DMatrix::<C64>::zeros(d, d);
        let mut rates = vec![0.0; d * d];
        let mut dyads = Vec::new();
        let mut dense = Vec::new();
        let basis = collapse.eigenbasis().map(|v| row_major(v.matrix()));
        for op in collapse {
            let cm = op.matrix().matrix();
            k += cm.adjoint() * cm;
            match (op.transition, &basis, op.factors()) {
                (Some((j, kk)), Some(_), _) => rates[j * d + kk] += op.rate,
                (_, _, Some((u, v))) => dyads.push((u.iter().copied().collect(), v.iter().copied().collect())),
                _ => dense.push(row_major(cm)),
            }
        }
        let heff0 = row_major(&(h0 - k * c(0.0, 0.5)));
        Ok(Generator { d, heff0, drive, basis, rates, dyads, dense })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// `out = L_t(ρ)` for Hermitian `ρ`, both row-major `d×d`.
    pub fn apply(&self, t: f64, rho: &[C64], out: &mut [C64], heff: &mut [C64], tmp: &mut [C64]) {
        let d = self.d;
        heff.copy_from_slice(&self.heff0);
        if let Some((hc, hs, w)) = &self.drive {
            let (s, co) = (w * t).sin_cos();
            for i in 0..d * d {
                heff[i] += hc[i] * co + hs[i] * s;
            }
        }
        // A = H_eff ρ;  −i(H_eff ρ − ρ H_eff†) = −i(A − A†)
        matmul(heff, rho, tmp, d);
        for i in 0..d {
            for j in 0..d {
                let z = tmp[i * d + j] - tmp[j * d + i].conj();
                out[i * d + j] = C64::new(z.im, -z.re);
            }
        }
        if let Some(v) = &self.basis {
            let mut pops = [0.0f64; 64];
            let pops = &mut pops[..d];
            for (kk, p) in pops.iter_mut().enumerate() {
                let mut acc = C64::new(0.0, 0.0);
                for a in 0..d {
                    let va = v[a * d + kk].conj();
                    let mut row = C64::new(0.0, 0.0);
                    for b in 0..d {
                        row += rho[a * d + b] * v[b * d + kk];
                    }
                    acc += va * row;
                }
                *p = acc.re;
            }
            for j in 0..d {
                let q: f64 = (0..d).map(|kk| self.rates[j * d + kk] * pops[kk]).sum();
                if q == 0.0 {
                    continue;
                }
                for a in 0..d {
                    let va = v[a * d + j] * q;
                    for b in 0..d {
                        out[a * d + b] += va * v[b * d + j].conj();
                    }
                }
            }
        }
        for (u, v) in &self.dyads {
            let mut s = C64::new(0.0, 0.0);
            for a in 0..d {
                let mut row = C64::new(0.0, 0.0);
                for b in 0..d {
                    row += rho[a * d + b] * v[b];
                }
                s += v[a].conj() * row;
            }
            for a in 0..d {
                let ua = u[a] * s;
                for b in 0..d {
                    out[a * d + b] += ua * u[b].conj();
                }
            }
        }
        for cm in &self.dense {
            matmul(cm, rho, tmp, d);
            for a in 0..d {
                for b in 0..d {
                    let mut acc = C64::new(0.0, 0.0);
                    for k in 0..d {
                        acc += tmp[a * d + k] * cm[b * d + k].conj();
                    }
                    out[a * d + b] += acc;
                }
            }
        }
    }

    /// Convenience wrapper on operators.
    pub fn apply_operator(&self, t: f64, rho: &Operator) -> Operator {
        let d = self.d;
        let r = row_major(rho.matrix());
        let mut out = vec![C64::new(0.0, 0.0); d * d];
        let mut heff = out.clone();
        let mut tmp = out.clone();
        self.apply(t, &r, &mut out, &mut heff, &mut tmp);
        Operator::from_row_slice(d, &out)
    }
}

fn matmul(a: &[C64], b: &[C64], out: &mut [C64], d: usize) {
    for i in 0..d {
        for j in 0..d {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..d {
                acc += a[i * d + k] * b[k * d + j];
            }
            out[i * d + j] = acc;
        }
    }
}

fn flatten(rho: &Operator) -> Vec<f64> {
    let d = rho.dim();
    let mut y = Vec::with_capacity(2 * d * d);
    for i in 0..d {
        for j in 0..d {
            let z = rho[(i, j)];
            y.push(z.re);
            y.push(z.im);
        }
    }
    y
}

fn unflatten(y: &[f64], d: usize) -> Operator {
    let data: Vec<C64> = y.chunks_exact(2).map(|p| C64::new(p[0], p[1])).collect();
    Operator::from_row_slice(d, &data)
}

/// Sampled solution of the master equation.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    /// Largest Hermiticity residual seen before symmetrizing a sample.
    pub hermiticity_drift: f64,
    pub stats: OdeStats,
}

impl Trajectory {
    pub fn n_qubits(&self) -> usize {
        self.states[0].n_qubits()
    }

    pub fn final_state(&self) -> &DensityMatrix {
        self.states.last().expect("trajectory has at least one sample")
    }

    /// `P_↑` of `qubit` at every sample.
    pub fn p_up(&self, qubit: usize) -> Result<Vec<f64>> {
        self.states.iter().map(|s| crate::analysis::population_up(s, qubit)).collect()
    }

    /// Worst trace error, Hermiticity residual and smallest eigenvalue over
    /// all samples (Hermiticity measured before symmetrization).
    pub fn physicality(&self) -> Physicality {
        let mut worst = Physicality { trace_error: 0.0, hermiticity: self.hermiticity_drift, min_eigenvalue: f64::INFINITY };
        for s in &self.states {
            let p = s.physicality();
            worst.trace_error = worst.trace_error.max(p.trace_error);
            worst.hermiticity = worst.hermiticity.max(p.hermiticity);
            worst.min_eigenvalue = worst.min_eigenvalue.min(p.min_eigenvalue);
        }
        worst
    }

    /// Reduced states of `qubit` at every sample.
    pub fn reduced(&self, qubit: usize) -> Result<Vec<DensityMatrix>> {
        self.states.iter().map(|s| partial_trace(s, qubit)).collect()
    }
}

/// `samples` equally spaced points on `[0, t_end]`.
pub fn uniform_grid(t_end: f64, samples: usize) -> Vec<f64> {
    let n = samples.max(2);
    (0..n).map(|i| t_end * i as f64 / (n - 1) as f64).collect()
}

/// Integrate the master equation from `t = 0` and sample at `times`.
///
/// The trace is not renormalized; Hermiticity is restored at each sample
/// after checking the residual against [`SAMPLE_HERMITICITY_TOL`].
pub fn evolve(
    h: &Hamiltonian,
    collapse: &CollapseSet,
    rho0: &DensityMatrix,
    times: &[f64],
    opts: &SolverOptions,
) -> Result<Trajectory> {
    let d = rho0.dim();
    if h.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: h.dim() });
    }
    if times.is_empty() {
        return Err(Error::IntegrationFailed { t: 0.0, reason: "no sample times".into() });
    }
    let gen = Generator::new(h, collapse)?;
    let zero = C64::new(0.0, 0.0);
    let mut rho = vec![zero; d * d];
    let mut out = vec![zero; d * d];
    let mut heff = vec![zero; d * d];
    let mut tmp = vec![zero; d * d];
    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| {
        // the generator is only exact on Hermitian input and the anti-Hermitian
        // part of roundoff would otherwise grow under −½{K, ·}
        for i in 0..d {
            for j in i..d {
                let (a, b) = (2 * (i * d + j), 2 * (j * d + i));
                let z = C64::new(0.5 * (y[a] + y[b]), 0.5 * (y[a + 1] - y[b + 1]));
                rho[i * d + j] = z;
                rho[j * d + i] = z.conj();
            }
        }
        gen.apply(t, &rho, &mut out, &mut heff, &mut tmp);
        for (p, z) in dy.chunks_exact_mut(2).zip(&out) {
            p[0] = z.re;
            p[1] = z.im;
        }
    };
    let (ys, stats) = ode::integrate(rhs, 0.0, &flatten(rho0.operator()), times, opts)?;

    let mut drift = 0.0f64;
    let mut states = Vec::with_capacity(ys.len());
    for (y, &t) in ys.iter().zip(times) {
        let op = unflatten(y, d);
        let residual = op.hermiticity_residual();
        if residual > SAMPLE_HERMITICITY_TOL {
            return Err(Error::IntegrationFailed { t, reason: format!("Hermiticity residual {residual:.3e}") });
        }
        drift = drift.max(residual);
        let sym = (op.matrix() + op.matrix().adjoint()) * c(0.5, 0.0);
        states.push(DensityMatrix::from_operator_unchecked(Operator::from_matrix(sym)));
    }
    Ok(Trajectory { times: times.to_vec(), states, hermiticity_drift: drift, stats })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{Channel, CollapseOperator};
    use crate::quantum::{kron, pauli, Axis, BasisState};

    fn amplitude_damping(gamma: f64) -> CollapseSet {
        let ket0 = BasisState::from_spins(&[true]).ket();
        let ket1 = BasisState::from_spins(&[false]).ket();
        let op = CollapseOperator::dyad(Channel::PhononPositive, None, gamma, &ket0, &ket1);
        CollapseSet::new(2, vec![op]).unwrap()
    }

    #[test]
    fn rhs_trivial_cases() {
        let rho = DensityMatrix::basis(BasisState::from_spins(&[true, false]));
        let zero = lindblad_rhs(&Operator::zeros(4), &CollapseSet::empty(4), &rho).unwrap();
        assert_eq!(zero.max_abs(), 0.0);
        let h = kron(&pauli(Axis::X), &pauli(Axis::Y)).scale_real(3.0);
        let mixed = DensityMatrix::maximally_mixed(4);
        assert!(lindblad_rhs(&h, &CollapseSet::empty(4), &mixed).unwrap().max_abs() < 1e-15);
        assert!(lindblad_rhs(&Operator::zeros(2), &CollapseSet::empty(4), &rho).is_err());
    }

    #[test]
    fn rhs_amplitude_damping() {
        let gamma = 0.7;
        let rho = DensityMatrix::basis(BasisState::from_spins(&[false]));
        let d = lindblad_rhs(&Operator::zeros(2), &amplitude_damping(gamma), &rho).unwrap();
        let expected = Operator::from_real_diagonal(&[gamma, -gamma]);
        assert!(d.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn free_precession() {
        let gap = 1.3;
        let h = pauli(Axis::Z).scale_real(gap / 2.0);
        let plus = DensityMatrix::pure(&DVector::from_vec(vec![c(1.0, 0.0), c(1.0, 0.0)])).unwrap();
        let times = uniform_grid(10.0, 21);
        let traj = evolve(&h.into(), &CollapseSet::empty(2), &plus, &times, &SolverOptions::default()).unwrap();
        for (t, s) in traj.times.iter().zip(&traj.states) {
            let m = s.operator();
            assert!((m[(0, 0)].re - 0.5).abs() < 1e-9);
            // ρ01(t) = ½ e^{−i·gap·t}
            let expected = c(0.0, -gap * t).exp() * 0.5;
            assert!((m[(0, 1)] - expected).norm() < 1e-7, "t={t}");
        }
    }

    #[test]
    fn generator_paths_match_reference() {
        let gen_dense = {
            let op = CollapseOperator::dense(Channel::Dephasing, 0.3, pauli(Axis::Z).scale_real(0.3f64.sqrt()));
            CollapseSet::new(2, vec![op]).unwrap()
        };
        let h = pauli(Axis::X).scale_real(0.4);
        let rho = DensityMatrix::pure(&DVector::from_vec(vec![c(0.6, 0.1), c(0.2, -0.7)])).unwrap();
        for set in [amplitude_damping(0.9), gen_dense] {
            let g = Generator::new(&Hamiltonian::Static(h.clone()), &set).unwrap();
            let fast = g.apply_operator(0.0, rho.operator());
            let reference = lindblad_rhs(&h, &set, &rho).unwrap();
            assert!(fast.max_abs_diff(&reference) < 1e-14);
        }
    }

    #[test]
    fn oracle_at_zero_is_identity_and_rejects_periodic() {
        let rho = DensityMatrix::basis(BasisState::from_spins(&[true]));
        let h = Hamiltonian::Static(pauli(Axis::X));
        let out = expm_oracle(&h, &amplitude_damping(1.0), &rho, 0.0).unwrap();
        assert_eq!(out, rho);
        let p = Hamiltonian::Periodic(PeriodicHamiltonian {
            h0: pauli(Axis::Z),
            h_cos: pauli(Axis::X),
            h_sin: pauli(Axis::Y),
            omega: 1.0,
        });
        assert_eq!(expm_oracle(&p, &CollapseSet::empty(2), &rho, 1.0).unwrap_err(), Error::TimeDependentHamiltonian);
    }

    #[test]
    fn amplitude_damping_decays_exponentially() {
        let gamma = 0.25;
        let rho = DensityMatrix::basis(BasisState::from_spins(&[false]));
        let times = uniform_grid(8.0, 9);
        let h = Hamiltonian::Static(Operator::zeros(2));
        let traj = evolve(&h, &amplitude_damping(gamma), &rho, &times, &SolverOptions::default()).unwrap();
        for (t, s) in traj.times.iter().zip(&traj.states) {
            assert!((s.operator()[(1, 1)].re - (-gamma * t).exp()).abs() < 1e-8);
        }
        let oracle = expm_oracle(&h, &amplitude_damping(gamma), &rho, 8.0).unwrap();
        assert!(oracle.operator().max_abs_diff(traj.final_state().operator()) < 1e-8);
    }
}
