//! Dense complex matrix algebra for few-qubit systems.
//!
//! Basis convention: qubit 0 is the most significant bit of the basis index and
//! spin-up is bit value 0, so `|↑…↑⟩` is index 0 and `|↓…↓⟩` is index `dim - 1`.
//! Pauli matrices are used as-is (eigenvalues ±1).

use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

const HERMITIAN_TOL: f64 = 1e-12;
const STATE_TOL: f64 = 1e-9;

#[inline]
pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// A dense square complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator(DMatrix<C64>);

impl Operator {
    pub fn from_matrix(m: DMatrix<C64>) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "operator must be square");
        Operator(m)
    }

    pub fn from_row_slice(dim: usize, data: &[C64]) -> Self {
        Operator(DMatrix::from_row_slice(dim, dim, data))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let d = DVector::from_iterator(diag.len(), diag.iter().map(|&x| c(x, 0.0)));
        Operator(DMatrix::from_diagonal(&d))
    }

    pub fn zeros(dim: usize) -> Self {
        Operator(DMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        Operator(DMatrix::identity(dim, dim))
    }

    /// `|ket⟩⟨bra|`
    pub fn outer(ket: &DVector<C64>, bra: &DVector<C64>) -> Self {
        Operator(ket * bra.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.0
    }

    pub fn dagger(&self) -> Self {
        Operator(self.0.adjoint())
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn scale(&self, s: C64) -> Self {
        Operator(&self.0 * s)
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(c(s, 0.0))
    }

    /// Largest elementwise modulus of `A - A†`.
    pub fn hermiticity_residual(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.0[(i, j)] - self.0[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_residual() <= HERMITIAN_TOL * self.max_abs().max(1.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0f64, |m, z| m.max(z.norm()))
    }

    /// Largest elementwise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        (&self.0 - &other.0).iter().fold(0.0f64, |m, z| m.max(z.norm()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn commutator(&self, other: &Operator) -> Operator {
        Operator(&self.0 * &other.0 - &other.0 * &self.0)
    }

    /// Number of qubits when `dim` is a power of two.
    pub fn n_qubits(&self) -> Result<usize> {
        qubits_for_dim(self.dim())
    }

    pub fn apply(&self, v: &DVector<C64>) -> DVector<C64> {
        &self.0 * v
    }

    /// Numerical rank with singular values below `tol * σ_max` discarded.
    pub fn rank(&self, tol: f64) -> usize {
        let sv = self.0.clone().singular_values();
        let top = sv.iter().cloned().fold(0.0, f64::max);
        if top == 0.0 {
            return 0;
        }
        sv.iter().filter(|&&s| s > tol * top).count()
    }
}

impl std::ops::Index<(usize, usize)> for Operator {
    type Output = C64;
    fn index(&self, idx: (usize, usize)) -> &C64 {
        &self.0[idx]
    }
}

impl<'a> Add<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn add(self, rhs: &'a Operator) -> Operator {
        Operator(&self.0 + &rhs.0)
    }
}

impl<'a> Sub<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn sub(self, rhs: &'a Operator) -> Operator {
        Operator(&self.0 - &rhs.0)
    }
}

impl<'a> Mul<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn mul(self, rhs: &'a Operator) -> Operator {
        Operator(&self.0 * &rhs.0)
    }
}

impl Add for Operator {
    type Output = Operator;
    fn add(self, rhs: Operator) -> Operator {
        Operator(self.0 + rhs.0)
    }
}

pub(crate) fn qubits_for_dim(dim: usize) -> Result<usize> {
    if dim == 0 || !dim.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(dim));
    }
    Ok(dim.trailing_zeros() as usize)
}

/// Kronecker product `a ⊗ b`; `a` occupies the more significant index bits.
pub fn kron(a: &Operator, b: &Operator) -> Operator {
    Operator(a.0.kronecker(&b.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

pub fn pauli(axis: Axis) -> Operator {
    let z = c(0.0, 0.0);
    let one = c(1.0, 0.0);
    let i = c(0.0, 1.0);
    let data = match axis {
        Axis::X => [z, one, one, z],
        Axis::Y => [z, -i, i, z],
        Axis::Z => [one, z, z, -one],
    };
    Operator::from_row_slice(2, &data)
}

/// `I ⊗ … ⊗ σ_axis ⊗ … ⊗ I` with the Pauli matrix at position `qubit`.
pub fn embed_pauli(axis: Axis, qubit: usize, n_qubits: usize) -> Result<Operator> {
    if qubit >= n_qubits {
        return Err(Error::QubitOutOfRange { qubit, n_qubits });
    }
    let id = Operator::identity(2);
    let sigma = pauli(axis);
    let mut out = Operator::identity(1);
    for q in 0..n_qubits {
        out = kron(&out, if q == qubit { &sigma } else { &id });
    }
    Ok(out)
}

/// A computational basis state, e.g. `↑↓` for control up, target down.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisState {
    index: usize,
    n_qubits: usize,
}

impl BasisState {
    pub fn new(index: usize, n_qubits: usize) -> Result<Self> {
        if index >= (1usize << n_qubits) {
            return Err(Error::InvalidLabel(format!("index {index} for {n_qubits} qubits")));
        }
        Ok(BasisState { index, n_qubits })
    }

    /// Build from per-qubit spins, `true` meaning ↑.
    pub fn from_spins(up: &[bool]) -> Self {
        let n = up.len();
        let index = up
            .iter()
            .fold(0usize, |acc, &u| (acc << 1) | usize::from(!u));
        BasisState { index, n_qubits: n }
    }

    pub fn all(n_qubits: usize) -> impl Iterator<Item = BasisState> {
        (0..1usize << n_qubits).map(move |index| BasisState { index, n_qubits })
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn is_up(&self, qubit: usize) -> bool {
        (self.index >> (self.n_qubits - 1 - qubit)) & 1 == 0
    }

    pub fn spins(&self) -> Vec<bool> {
        (0..self.n_qubits).map(|q| self.is_up(q)).collect()
    }

    pub fn flip(&self, qubit: usize) -> Self {
        BasisState {
            index: self.index ^ (1 << (self.n_qubits - 1 - qubit)),
            n_qubits: self.n_qubits,
        }
    }

    pub fn ket(&self) -> DVector<C64> {
        let mut v = DVector::zeros(1 << self.n_qubits);
        v[self.index] = c(1.0, 0.0);
        v
    }

    /// ASCII form using `u`/`d`, as accepted by config files.
    pub fn ascii(&self) -> String {
        self.spins().iter().map(|&u| if u { 'u' } else { 'd' }).collect()
    }
}

impl fmt::Display for BasisState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for up in self.spins() {
            f.write_str(if up { "↑" } else { "↓" })?;
        }
        Ok(())
    }
}

impl FromStr for BasisState {
    type Err = Error;

    /// Accepts `u`/`d`, `↑`/`↓`, or `0`/`1` per qubit.
    fn from_str(s: &str) -> Result<Self> {
        let trimmed = s.trim();
        let spins = trimmed
            .chars()
            .map(|ch| match ch {
                'u' | 'U' | '↑' | '0' => Ok(true),
                'd' | 'D' | '↓' | '1' => Ok(false),
                _ => Err(Error::InvalidLabel(s.to_string())),
            })
            .collect::<Result<Vec<_>>>()?;
        if spins.is_empty() {
            return Err(Error::InvalidLabel(s.to_string()));
        }
        Ok(BasisState::from_spins(&spins))
    }
}

/// Diagnostics of how far an operator is from a physical density matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Physicality {
    pub trace_error: f64,
    pub hermiticity: f64,
    pub min_eigenvalue: f64,
}

impl Physicality {
    pub fn of(op: &Operator) -> Self {
        let hermiticity = op.hermiticity_residual();
        let sym = Operator((&op.0 + op.0.adjoint()) * c(0.5, 0.0));
        let min_eigenvalue = SymmetricEigen::new(sym.0)
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        Physicality {
            trace_error: (op.trace() - c(1.0, 0.0)).norm(),
            hermiticity,
            min_eigenvalue,
        }
    }

    pub fn within(&self, trace_tol: f64, herm_tol: f64, eig_floor: f64) -> bool {
        self.trace_error <= trace_tol && self.hermiticity <= herm_tol && self.min_eigenvalue >= eig_floor
    }
}

/// Unit-trace, Hermitian, positive semidefinite operator.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(Operator);

impl DensityMatrix {
    /// Validates with the default tolerance of 1e-9 on trace, Hermiticity and
    /// negative eigenvalues.
    pub fn new(op: Operator) -> Result<Self> {
        Self::with_tolerance(op, STATE_TOL, STATE_TOL, -STATE_TOL)
    }

    pub fn with_tolerance(op: Operator, trace_tol: f64, herm_tol: f64, eig_floor: f64) -> Result<Self> {
        qubits_for_dim(op.dim())?;
        let p = Physicality::of(&op);
        if !p.within(trace_tol, herm_tol, eig_floor) {
            return Err(Error::InvalidState(format!(
                "trace error {:.3e}, hermiticity {:.3e}, min eigenvalue {:.3e}",
                p.trace_error, p.hermiticity, p.min_eigenvalue
            )));
        }
        Ok(DensityMatrix(op))
    }

    /// Wraps without checks; for integrator output that is validated separately.
    pub fn from_operator_unchecked(op: Operator) -> Self {
        DensityMatrix(op)
    }

    pub fn pure(ket: &DVector<C64>) -> Result<Self> {
        let norm = ket.norm();
        if norm == 0.0 {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        let k = ket / c(norm, 0.0);
        Self::new(Operator::outer(&k, &k))
    }

    pub fn basis(state: BasisState) -> Self {
        let k = state.ket();
        DensityMatrix(Operator::outer(&k, &k))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        DensityMatrix(Operator::identity(dim).scale_real(1.0 / dim as f64))
    }

    pub fn operator(&self) -> &Operator {
        &self.0
    }

    pub fn into_operator(self) -> Operator {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn n_qubits(&self) -> usize {
        qubits_for_dim(self.dim()).expect("density matrix dimension is a power of two")
    }

    pub fn physicality(&self) -> Physicality {
        Physicality::of(&self.0)
    }

    /// `⟨state|ρ|state⟩`
    pub fn population(&self, state: BasisState) -> f64 {
        self.0[(state.index(), state.index())].re
    }
}

/// Reduced 2×2 state of qubit `keep`.
pub fn partial_trace(rho: &DensityMatrix, keep: usize) -> Result<DensityMatrix> {
    let n = rho.n_qubits();
    if keep >= n {
        return Err(Error::QubitOutOfRange { qubit: keep, n_qubits: n });
    }
    let shift = n - 1 - keep;
    let dim = rho.dim();
    let m = rho.operator().matrix();
    let mut out = DMatrix::<C64>::zeros(2, 2);
    for i in 0..dim {
        for j in 0..dim {
            // every other qubit must agree between row and column
            if (i ^ j) & !(1 << shift) != 0 {
                continue;
            }
            let a = (i >> shift) & 1;
            let b = (j >> shift) & 1;
            out[(a, b)] += m[(i, j)];
        }
    }
    Ok(DensityMatrix(Operator(out)))
}

/// `Tr(op · ρ)` for Hermitian `op`.
pub fn expect(op: &Operator, rho: &DensityMatrix) -> Result<f64> {
    if op.dim() != rho.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), found: op.dim() });
    }
    let v = (op.matrix() * rho.operator().matrix()).trace();
    let scale = op.max_abs().max(1.0);
    debug_assert!(v.im.abs() <= 1e-10 * scale, "imaginary expectation {}", v.im);
    Ok(v.re)
}

/// Spectrum of a Hermitian operator sorted ascending, with eigenvectors as
/// columns and a computational-basis label per eigenvector.
#[derive(Clone, Debug)]
pub struct EigenSystem {
    values: Vec<f64>,
    vectors: Operator,
    labels: Option<Vec<BasisState>>,
}

impl EigenSystem {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn vectors(&self) -> &Operator {
        &self.vectors
    }

    pub fn vector(&self, k: usize) -> DVector<C64> {
        self.vectors.matrix().column(k).into_owned()
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `ω_jk = w_j − w_k`
    pub fn gap(&self, j: usize, k: usize) -> f64 {
        self.values[j] - self.values[k]
    }

    pub fn gaps(&self) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |j, k| self.gap(j, k))
    }

    pub fn labels(&self) -> Option<&[BasisState]> {
        self.labels.as_deref()
    }

    pub fn label(&self, k: usize) -> Option<BasisState> {
        self.labels.as_ref().map(|l| l[k])
    }

    /// Eigen-index carrying the given label.
    pub fn index_of(&self, state: BasisState) -> Result<usize> {
        let labels = self.labels.as_ref().ok_or(Error::Unlabeled)?;
        labels.iter().position(|&l| l == state).ok_or(Error::Unlabeled)
    }

    /// Energy of the eigenstate labeled `state`.
    pub fn energy_of(&self, state: BasisState) -> Result<f64> {
        Ok(self.values[self.index_of(state)?])
    }

    /// `V · diag(w) · V†`
    pub fn reconstruct(&self) -> Operator {
        let v = self.vectors.matrix();
        let d = DMatrix::from_diagonal(&DVector::from_iterator(
            self.dim(),
            self.values.iter().map(|&w| c(w, 0.0)),
        ));
        Operator(v * d * v.adjoint())
    }
}

/// Diagonalize a Hermitian operator.
pub fn eigensystem(h: &Operator) -> Result<EigenSystem> {
    let scale = h.max_abs().max(1.0);
    let residual = h.hermiticity_residual();
    if residual > HERMITIAN_TOL * scale {
        return Err(Error::NotHermitian(residual));
    }
    let n = h.dim();
    let eig = SymmetricEigen::new(h.matrix().clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = DMatrix::<C64>::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(src).into_owned();
        // fix the global phase so the largest component is real positive
        let (imax, _) = col
            .iter()
            .enumerate()
            .fold((0, 0.0), |(bi, bv), (i, z)| if z.norm() > bv { (i, z.norm()) } else { (bi, bv) });
        let phase = col[imax] / c(col[imax].norm(), 0.0);
        col /= phase;
        vectors.set_column(dst, &col);
    }

    let labels = qubits_for_dim(n).ok().and_then(|nq| overlap_labels(&values, &vectors, nq, scale));
    Ok(EigenSystem { values, vectors: Operator(vectors), labels })
}

fn overlap_labels(values: &[f64], vectors: &DMatrix<C64>, n_qubits: usize, scale: f64) -> Option<Vec<BasisState>> {
    let degenerate = values.windows(2).any(|w| (w[1] - w[0]).abs() <= 1e-9 * scale);
    if degenerate {
        return None;
    }
    let n = values.len();
    let mut seen = vec![false; n];
    let mut labels = Vec::with_capacity(n);
    for k in 0..n {
        let (best, _) = (0..n)
            .map(|i| (i, vectors[(i, k)].norm_sqr()))
            .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if seen[best] {
            return None;
        }
        seen[best] = true;
        labels.push(BasisState { index: best, n_qubits });
    }
    Some(labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ghz(n: usize) -> DensityMatrix {
        let dim = 1 << n;
        let mut v = DVector::zeros(dim);
        v[0] = c(1.0, 0.0);
        v[dim - 1] = c(1.0, 0.0);
        DensityMatrix::pure(&v).unwrap()
    }

    #[test]
    fn kron_identities_and_bit_flip() {
        let i2 = Operator::identity(2);
        assert_eq!(kron(&i2, &i2), Operator::identity(4));
        let zz = kron(&pauli(Axis::Z), &pauli(Axis::Z));
        assert_eq!(zz, Operator::from_real_diagonal(&[1.0, -1.0, -1.0, 1.0]));
        let x0 = kron(&pauli(Axis::X), &i2);
        let up_up: BasisState = "uu".parse().unwrap();
        let out = x0.apply(&up_up.ket());
        assert_eq!(out[2], c(1.0, 0.0));
        assert_eq!("du".parse::<BasisState>().unwrap().index(), 2);
    }

    #[test]
    fn embed_pauli_examples() {
        let z0 = embed_pauli(Axis::Z, 0, 2).unwrap();
        assert_eq!(z0, Operator::from_real_diagonal(&[1.0, 1.0, -1.0, -1.0]));
        let x1 = embed_pauli(Axis::X, 1, 2).unwrap();
        assert!((&x1 * &x1).max_abs_diff(&Operator::identity(4)) < 1e-15);
        let y2 = embed_pauli(Axis::Y, 2, 3).unwrap();
        assert_eq!(y2.dim(), 8);
        assert!(y2.trace().norm() < 1e-15);
        assert!(matches!(
            embed_pauli(Axis::X, 3, 3),
            Err(Error::QubitOutOfRange { qubit: 3, n_qubits: 3 })
        ));
    }

    #[test]
    fn pauli_algebra() {
        let n = 3;
        for q in 0..n {
            let x = embed_pauli(Axis::X, q, n).unwrap();
            let y = embed_pauli(Axis::Y, q, n).unwrap();
            let z = embed_pauli(Axis::Z, q, n).unwrap();
            assert!((&x * &y).max_abs_diff(&z.scale(c(0.0, 1.0))) < 1e-15);
            for p in 0..n {
                if p != q {
                    for axis in [Axis::X, Axis::Y, Axis::Z] {
                        let other = embed_pauli(axis, p, n).unwrap();
                        assert!(x.commutator(&other).max_abs() < 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn eigensystem_diagonal_and_sigma_x() {
        let es = eigensystem(&Operator::from_real_diagonal(&[3.0, 1.0])).unwrap();
        assert_eq!(es.values(), &[1.0, 3.0]);
        assert_eq!(es.gap(1, 0), 2.0);
        assert_eq!(es.gap(0, 1), -es.gap(1, 0));

        let es = eigensystem(&pauli(Axis::X)).unwrap();
        assert!((es.values()[0] + 1.0).abs() < 1e-14);
        assert!((es.values()[1] - 1.0).abs() < 1e-14);
        let s = 1.0 / 2f64.sqrt();
        let v0 = es.vector(0);
        let v1 = es.vector(1);
        // columns are fixed up to a global phase; compare moduli and relative sign
        assert!((v0[0].norm() - s).abs() < 1e-12 && (v0[1].norm() - s).abs() < 1e-12);
        assert!((v0[0] + v0[1]).norm() < 1e-12);
        assert!((v1[0] - v1[1]).norm() < 1e-12);
    }

    #[test]
    fn eigensystem_rejects_non_hermitian() {
        let m = Operator::from_row_slice(2, &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert!(matches!(eigensystem(&m), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn degenerate_spectrum_is_unlabeled() {
        let es = eigensystem(&Operator::identity(4)).unwrap();
        assert!(es.labels().is_none());
        assert_eq!(es.index_of(BasisState::new(0, 2).unwrap()), Err(Error::Unlabeled));
    }

    #[test]
    fn partial_trace_examples() {
        let up = BasisState::from_spins(&[true]);
        let ud: BasisState = "ud".parse().unwrap();
        let r = partial_trace(&DensityMatrix::basis(ud), 0).unwrap();
        assert_eq!(r, DensityMatrix::basis(up));

        let half = DensityMatrix::maximally_mixed(2);
        for keep in 0..2 {
            let r = partial_trace(&ghz(2), keep).unwrap();
            assert!(r.operator().max_abs_diff(half.operator()) < 1e-15);
        }
        let r = partial_trace(&ghz(3), 1).unwrap();
        assert!(r.operator().max_abs_diff(half.operator()) < 1e-15);
        assert!(partial_trace(&ghz(3), 3).is_err());
    }

    /// Independent oracle: sum ρ[(a,b),(a',b)] by explicit index loops over
    /// the three qubit digits.
    #[test]
    fn partial_trace_matches_digit_sum_oracle() {
        let mut v = DVector::zeros(8);
        for i in 0..8 {
            v[i] = c((i as f64 * 0.37).sin(), (i as f64 * 1.1).cos());
        }
        let rho = DensityMatrix::pure(&v).unwrap();
        let m = rho.operator().matrix();
        let idx = |q0: usize, q1: usize, q2: usize| q0 * 4 + q1 * 2 + q2;
        let mut oracle = DMatrix::<C64>::zeros(2, 2);
        for a in 0..2 {
            for b in 0..2 {
                for q0 in 0..2 {
                    for q2 in 0..2 {
                        oracle[(a, b)] += m[(idx(q0, a, q2), idx(q0, b, q2))];
                    }
                }
            }
        }
        let r = partial_trace(&rho, 1).unwrap();
        assert!((r.operator().matrix() - oracle).norm() < 1e-14);
    }

    #[test]
    fn expect_examples() {
        let up = DensityMatrix::basis(BasisState::from_spins(&[true]));
        assert_eq!(expect(&Operator::identity(2), &up).unwrap(), 1.0);
        assert_eq!(expect(&pauli(Axis::Z), &up).unwrap(), 1.0);
        let plus = DensityMatrix::pure(&DVector::from_vec(vec![c(1.0, 0.0), c(1.0, 0.0)])).unwrap();
        assert!((expect(&pauli(Axis::X), &plus).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(
            expect(&Operator::identity(4), &up),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn basis_state_parsing() {
        let s: BasisState = "↑↓↑".parse().unwrap();
        assert_eq!(s.index(), 0b010);
        assert_eq!(s.to_string(), "↑↓↑");
        assert_eq!(s.ascii(), "udu");
        assert_eq!(s.flip(1).ascii(), "uuu");
        assert!("uxd".parse::<BasisState>().is_err());
    }

    #[test]
    fn density_matrix_validation() {
        let bad = Operator::from_real_diagonal(&[1.0, 1.0]);
        assert!(DensityMatrix::new(bad).is_err());
        let neg = Operator::from_real_diagonal(&[1.5, -0.5]);
        assert!(DensityMatrix::new(neg).is_err());
    }
}
