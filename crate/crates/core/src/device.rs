//! Device parameters and the two- and three-spin Hamiltonians.
//!
//! Energies are in μeV and ħ = 1, so one model time unit is
//! [`HBAR_UEV_NS`] ns. Spin operators are Pauli matrices, which makes a
//! single-spin Zeeman gap `2·g·μ_B·B`.
//!
//! The CNOT Hamiltonian carries `+gμ_B·B_i·σ_iz` (so `|↑↑⟩` is highest), the
//! Toffoli Hamiltonian carries `−gμ_B·B_i·σ_iz` (so `|↓↓↓⟩` is highest).
//! The circular drive always co-rotates with the spin precession of the
//! respective sign convention; for the Toffoli that is
//! `−gμB_ac(cos ωt Σσx − sin ωt Σσy)`, for the CNOT the sine term flips sign.

use crate::error::{Error, Result};
use crate::quantum::{c, eigensystem, embed_pauli, Axis, BasisState, EigenSystem, Operator};

/// Bohr magneton in μeV/T.
pub const BOHR_MAGNETON_UEV_PER_T: f64 = 57.883818;
/// Reduced Planck constant in μeV·ns; also the length of one model time unit in ns.
pub const HBAR_UEV_NS: f64 = 0.6582120;

/// Default g-factor.
pub const DEFAULT_G: f64 = 2.0;
/// GaAs conduction-band g-factor; its magnitude sets the energy scale.
pub const GAAS_G: f64 = -0.44;

pub fn ns_to_time(ns: f64) -> f64 {
    ns / HBAR_UEV_NS
}

pub fn time_to_ns(t: f64) -> f64 {
    t * HBAR_UEV_NS
}

/// Zeeman energy `g·μ_B·B` in μeV.
pub fn field_to_energy(b_tesla: f64, g: f64) -> f64 {
    g.abs() * BOHR_MAGNETON_UEV_PER_T * b_tesla
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Gate {
    Cnot,
    Toffoli,
}

impl Gate {
    pub fn n_qubits(self) -> usize {
        match self {
            Gate::Cnot => 2,
            Gate::Toffoli => 3,
        }
    }

    pub fn target(self) -> usize {
        match self {
            Gate::Cnot => 1,
            Gate::Toffoli => 1,
        }
    }

    pub fn controls(self) -> &'static [usize] {
        match self {
            Gate::Cnot => &[0],
            Gate::Toffoli => &[0, 2],
        }
    }

    /// Prefactor of the static Zeeman terms.
    fn zeeman_sign(self) -> f64 {
        match self {
            Gate::Cnot => 1.0,
            Gate::Toffoli => -1.0,
        }
    }

    /// Rotation sense of the drive that is resonant for this gate's Zeeman sign.
    fn helicity(self) -> f64 {
        -self.zeeman_sign()
    }

    /// Driven transition: all qubits up ↔ target flipped.
    pub fn drive_transition(self) -> (BasisState, BasisState) {
        let all_up = BasisState::from_spins(&vec![true; self.n_qubits()]);
        (all_up, all_up.flip(self.target()))
    }

    pub fn qubit_role(self, qubit: usize) -> &'static str {
        match (self, qubit) {
            (Gate::Cnot, 0) => "control",
            (Gate::Cnot, _) => "target",
            (Gate::Toffoli, 0) => "left_control",
            (Gate::Toffoli, 1) => "target",
            (Gate::Toffoli, _) => "right_control",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Gate::Cnot => "cnot",
            Gate::Toffoli => "toffoli",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DriveFrequency {
    Auto,
    /// Angular frequency in μeV (ħ = 1).
    Explicit(f64),
}

/// Static and driving parameters of a CNOT or Toffoli device.
///
/// `b_z` is ordered `[control, target]` for the CNOT and
/// `[left control, center target, right control]` for the Toffoli.
/// `exchange` holds `[J]` or `[J12, J23]` in μeV.
#[derive(Clone, Debug, PartialEq)]
pub struct DeviceConfig {
    pub gate: Gate,
    pub exchange: Vec<f64>,
    pub b_z: Vec<f64>,
    pub b_ac: f64,
    pub g: f64,
    pub drive_frequency: DriveFrequency,
}

impl DeviceConfig {
    pub fn cnot(j: f64, b_control: f64, b_target: f64, b_ac: f64) -> Self {
        DeviceConfig {
            gate: Gate::Cnot,
            exchange: vec![j],
            b_z: vec![b_control, b_target],
            b_ac,
            g: DEFAULT_G,
            drive_frequency: DriveFrequency::Auto,
        }
    }

    pub fn toffoli(j12: f64, j23: f64, b_left: f64, b_center: f64, b_right: f64, b_ac: f64) -> Self {
        DeviceConfig {
            gate: Gate::Toffoli,
            exchange: vec![j12, j23],
            b_z: vec![b_left, b_center, b_right],
            b_ac,
            g: DEFAULT_G,
            drive_frequency: DriveFrequency::Auto,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.gate.n_qubits()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_qubits();
        if self.b_z.len() != n {
            return Err(Error::InvalidConfig(format!("{} needs {} static fields, got {}", self.gate.name(), n, self.b_z.len())));
        }
        if self.exchange.len() != n - 1 {
            return Err(Error::InvalidConfig(format!(
                "{} needs {} exchange couplings, got {}",
                self.gate.name(),
                n - 1,
                self.exchange.len()
            )));
        }
        let finite = self.b_z.iter().chain(&self.exchange).chain([&self.b_ac, &self.g]).all(|x| x.is_finite());
        if !finite {
            return Err(Error::InvalidConfig("non-finite parameter".into()));
        }
        if self.b_ac < 0.0 {
            return Err(Error::InvalidConfig("b_ac must be non-negative".into()));
        }
        if self.exchange.iter().any(|&j| j < 0.0) {
            return Err(Error::InvalidConfig("exchange couplings must be non-negative".into()));
        }
        if let DriveFrequency::Explicit(w) = self.drive_frequency {
            if !w.is_finite() {
                return Err(Error::InvalidConfig("non-finite drive frequency".into()));
            }
        }
        Ok(())
    }

    /// Whether the field profile has the intended gradient shape
    /// (`B_C > B_T`, or `B_CR > B_TC > B_CL`). Violations are allowed.
    pub fn has_expected_gradient(&self) -> bool {
        match self.gate {
            Gate::Cnot => self.b_z[0] > self.b_z[1],
            Gate::Toffoli => self.b_z[2] > self.b_z[1] && self.b_z[1] > self.b_z[0],
        }
    }

    fn zeeman_energies(&self) -> Vec<f64> {
        self.b_z.iter().map(|&b| field_to_energy(b, self.g)).collect()
    }

    fn drive_energy(&self) -> f64 {
        field_to_energy(self.b_ac, self.g)
    }

    fn resolved_omega(&self) -> Result<f64> {
        match self.drive_frequency {
            DriveFrequency::Explicit(w) => Ok(w),
            DriveFrequency::Auto => Err(Error::UnresolvedDrive),
        }
    }

    /// Copy with `drive_frequency = auto` replaced by the resonance of the
    /// driven transition.
    pub fn resolved(&self) -> Result<DeviceConfig> {
        self.validate()?;
        let mut out = self.clone();
        if out.drive_frequency == DriveFrequency::Auto {
            let eig = eigensystem(&static_hamiltonian(self)?)?;
            let (a, b) = self.gate.drive_transition();
            out.drive_frequency = DriveFrequency::Explicit(resonance_frequency(&eig, a, b)?);
        }
        Ok(out)
    }
}

fn exchange_terms(cfg: &DeviceConfig) -> Result<Operator> {
    let n = cfg.n_qubits();
    let mut h = Operator::zeros(1 << n);
    for (pair, &j) in cfg.exchange.iter().enumerate() {
        for axis in [Axis::X, Axis::Y, Axis::Z] {
            let a = embed_pauli(axis, pair, n)?;
            let b = embed_pauli(axis, pair + 1, n)?;
            h = &h + &(&a * &b).scale_real(j);
        }
    }
    Ok(h)
}

fn sum_pauli(axis: Axis, n: usize) -> Result<Operator> {
    let mut out = Operator::zeros(1 << n);
    for q in 0..n {
        out = &out + &embed_pauli(axis, q, n)?;
    }
    Ok(out)
}

fn zeeman_terms(cfg: &DeviceConfig, shift: f64) -> Result<Operator> {
    let n = cfg.n_qubits();
    let sign = cfg.gate.zeeman_sign();
    let mut h = Operator::zeros(1 << n);
    for (q, e) in cfg.zeeman_energies().into_iter().enumerate() {
        h = &h + &embed_pauli(Axis::Z, q, n)?.scale_real(sign * e + shift);
    }
    Ok(h)
}

/// Drift Hamiltonian without the drive: exchange plus static Zeeman terms.
pub fn static_hamiltonian(cfg: &DeviceConfig) -> Result<Operator> {
    cfg.validate()?;
    Ok(&exchange_terms(cfg)? + &zeeman_terms(cfg, 0.0)?)
}

/// Lab-frame Hamiltonian split as `h0 + cos(ωt)·h_cos + sin(ωt)·h_sin`.
#[derive(Clone, Debug)]
pub struct PeriodicHamiltonian {
    pub h0: Operator,
    pub h_cos: Operator,
    pub h_sin: Operator,
    pub omega: f64,
}

impl PeriodicHamiltonian {
    pub fn at(&self, t: f64) -> Operator {
        let (s, co) = (self.omega * t).sin_cos();
        &(&self.h0 + &self.h_cos.scale_real(co)) + &self.h_sin.scale_real(s)
    }

    pub fn dim(&self) -> usize {
        self.h0.dim()
    }
}

pub fn lab_hamiltonian(cfg: &DeviceConfig) -> Result<PeriodicHamiltonian> {
    let omega = cfg.resolved_omega()?;
    let n = cfg.n_qubits();
    let b = cfg.drive_energy();
    let h0 = static_hamiltonian(cfg)?;
    let h_cos = sum_pauli(Axis::X, n)?.scale_real(-b);
    let h_sin = sum_pauli(Axis::Y, n)?.scale_real(b * cfg.gate.helicity());
    Ok(PeriodicHamiltonian { h0, h_cos, h_sin, omega })
}

/// Lab-frame Hamiltonian at time `t` (model units).
pub fn build_hamiltonian_lab(cfg: &DeviceConfig, t: f64) -> Result<Operator> {
    Ok(lab_hamiltonian(cfg)?.at(t))
}

/// Hamiltonian in the frame co-rotating with the drive.
///
/// The frame is `U(t) = exp(−i·h·ω·t·Σσz/2)` with `h` the drive helicity.
/// Exchange commutes with it, the Zeeman coefficients shift by `h·ω/2`, and
/// the drive becomes the static term `−gμB_ac·Σσx`. `U` is diagonal, so
/// z-basis populations are identical in both frames.
pub fn build_hamiltonian_rwa(cfg: &DeviceConfig) -> Result<Operator> {
    let omega = cfg.resolved_omega()?;
    let n = cfg.n_qubits();
    let shift = cfg.gate.helicity() * omega / 2.0;
    let drive = sum_pauli(Axis::X, n)?.scale(c(-cfg.drive_energy(), 0.0));
    Ok(&(&exchange_terms(cfg)? + &zeeman_terms(cfg, shift)?) + &drive)
}

/// `|w_j − w_k|` for the eigenstates labeled `a` and `b`.
pub fn resonance_frequency(eig: &EigenSystem, a: BasisState, b: BasisState) -> Result<f64> {
    let ja = eig.index_of(a)?;
    let jb = eig.index_of(b)?;
    Ok(eig.gap(ja, jb).abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag_entries(op: &Operator) -> Vec<f64> {
        (0..op.dim()).map(|i| op[(i, i)].re).collect()
    }

    #[test]
    fn field_to_energy_values() {
        assert_eq!(field_to_energy(0.0, 2.0), 0.0);
        assert!((field_to_energy(1.0, 2.0) - 115.767636).abs() < 1e-9);
        assert!((field_to_energy(4e-3, 2.0) - 0.463070544).abs() < 1e-9);
    }

    #[test]
    fn cnot_without_drive_or_exchange_is_diagonal() {
        let mut cfg = DeviceConfig::cnot(0.0, 1.3, 0.7, 0.0);
        cfg.drive_frequency = DriveFrequency::Explicit(0.0);
        let h = build_hamiltonian_lab(&cfg, 0.0).unwrap();
        let e1 = field_to_energy(1.3, 2.0);
        let e2 = field_to_energy(0.7, 2.0);
        let expected = Operator::from_real_diagonal(&[e1 + e2, e1 - e2, -e1 + e2, -e1 - e2]);
        assert!(h.max_abs_diff(&expected) < 1e-12);
    }

    #[test]
    fn cnot_drive_at_t0() {
        let mut cfg = DeviceConfig::cnot(0.42, 2.0, 1.0, 4e-3);
        cfg.drive_frequency = DriveFrequency::Explicit(231.0);
        let h = build_hamiltonian_lab(&cfg, 0.0).unwrap();
        assert!(h.is_hermitian());
        let h_static = static_hamiltonian(&cfg).unwrap();
        let b = field_to_energy(4e-3, 2.0);
        let drive = sum_pauli(Axis::X, 2).unwrap().scale_real(-b);
        assert!((&h - &h_static).max_abs_diff(&drive) < 1e-12);
    }

    #[test]
    fn toffoli_static_spectrum_has_negative_zeeman_sign() {
        let mut cfg = DeviceConfig::toffoli(0.0, 0.0, 0.1, 0.3, 0.5, 0.0);
        cfg.drive_frequency = DriveFrequency::Explicit(0.0);
        let h = build_hamiltonian_lab(&cfg, 0.0).unwrap();
        let e: Vec<f64> = [0.1, 0.3, 0.5].iter().map(|&b| field_to_energy(b, 2.0)).collect();
        // hand diagonal: −Σ s_i E_i with s_i = +1 for ↑
        let expected: Vec<f64> = BasisState::all(3)
            .map(|s| -(0..3).map(|q| if s.is_up(q) { e[q] } else { -e[q] }).sum::<f64>())
            .collect();
        for (a, b) in diag_entries(&h).iter().zip(&expected) {
            assert!((a - b).abs() < 1e-12);
        }
        let eig = eigensystem(&h).unwrap();
        let mut sorted = expected.clone();
        sorted.sort_by(f64::total_cmp);
        for (a, b) in eig.values().iter().zip(&sorted) {
            assert!((a - b).abs() < 1e-10);
        }
        assert_eq!(eig.label(7).unwrap().ascii(), "ddd");
        assert_eq!(eig.label(0).unwrap().ascii(), "uuu");
    }

    #[test]
    fn rwa_reduces_to_lab_without_drive() {
        let mut cfg = DeviceConfig::cnot(0.42, 2.0, 1.0, 0.0);
        cfg.drive_frequency = DriveFrequency::Explicit(0.0);
        let lab = build_hamiltonian_lab(&cfg, 0.0).unwrap();
        let rwa = build_hamiltonian_rwa(&cfg).unwrap();
        assert!(lab.max_abs_diff(&rwa) < 1e-12);
    }

    #[test]
    fn rwa_linear_in_drive() {
        let mut cfg = DeviceConfig::cnot(0.42, 2.0, 1.0, 4e-3);
        cfg.drive_frequency = DriveFrequency::Explicit(230.0);
        let h1 = build_hamiltonian_rwa(&cfg).unwrap();
        cfg.b_ac *= 2.0;
        let h2 = build_hamiltonian_rwa(&cfg).unwrap();
        let diff = &h2 - &h1;
        let b = field_to_energy(4e-3, 2.0);
        let expected = sum_pauli(Axis::X, 2).unwrap().scale_real(-b);
        assert!(diff.max_abs_diff(&expected) < 1e-12);
        for i in 0..4 {
            assert!(diff[(i, i)].norm() < 1e-12);
        }
    }

    #[test]
    fn rwa_without_exchange_or_drive_has_shifted_zeeman_spectrum() {
        let (b1, b2) = (1.4, 0.9);
        let mut cfg = DeviceConfig::cnot(0.0, b1, b2, 0.0);
        cfg.drive_frequency = DriveFrequency::Explicit(0.0);
        let eig = eigensystem(&build_hamiltonian_rwa(&cfg).unwrap()).unwrap();
        let (e1, e2) = (field_to_energy(b1, 2.0), field_to_energy(b2, 2.0));
        let mut expected = vec![e1 + e2, e1 - e2, -(e1 - e2), -(e1 + e2)];
        expected.sort_by(f64::total_cmp);
        for (a, b) in eig.values().iter().zip(&expected) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    /// Hand diagonalization of the exchange-coupled pair: the triplet edges sit
    /// at `±E_z + J`, the (↑↓, ↓↑) block at `−J ± sqrt(δE_z² + 4J²)`.
    #[test]
    fn two_spin_levels_follow_exchange_scheme() {
        let (j, bc, bt) = (0.42, 2.0, 1.0);
        let cfg = DeviceConfig::cnot(j, bc, bt, 0.0);
        let eig = eigensystem(&static_hamiltonian(&cfg).unwrap()).unwrap();
        let ez = field_to_energy(bc + bt, 2.0);
        let dez = field_to_energy(bc - bt, 2.0);
        let root = (dez * dez + 4.0 * j * j).sqrt();
        let expect = |s: &str| match s {
            "uu" => ez + j,
            "ud" => -j + root,
            "du" => -j - root,
            _ => -ez + j,
        };
        for label in ["uu", "ud", "du", "dd"] {
            let e = eig.energy_of(label.parse().unwrap()).unwrap();
            assert!((e - expect(label)).abs() < 1e-9, "{label}");
        }
    }

    #[test]
    fn resonance_frequency_examples() {
        let cfg = DeviceConfig::cnot(0.0, 1.5, 0.8, 0.0);
        let eig = eigensystem(&static_hamiltonian(&cfg).unwrap()).unwrap();
        let (uu, ud): (BasisState, BasisState) = ("uu".parse().unwrap(), "ud".parse().unwrap());
        let f = resonance_frequency(&eig, uu, ud).unwrap();
        assert!((f - 2.0 * field_to_energy(0.8, 2.0)).abs() < 1e-10);
        assert_eq!(f, resonance_frequency(&eig, ud, uu).unwrap());

        let cfg = DeviceConfig::toffoli(0.0, 0.0, 0.1, 0.25, 0.4, 0.0);
        let eig = eigensystem(&static_hamiltonian(&cfg).unwrap()).unwrap();
        let f = resonance_frequency(&eig, "uuu".parse().unwrap(), "udu".parse().unwrap()).unwrap();
        assert!((f - 2.0 * field_to_energy(0.25, 2.0)).abs() < 1e-10);
    }

    #[test]
    fn resonance_requires_labels() {
        let cfg = DeviceConfig::cnot(0.0, 0.0, 0.0, 0.0);
        let eig = eigensystem(&static_hamiltonian(&cfg).unwrap()).unwrap();
        assert_eq!(
            resonance_frequency(&eig, "uu".parse().unwrap(), "ud".parse().unwrap()),
            Err(Error::Unlabeled)
        );
    }

    #[test]
    fn unresolved_drive_is_rejected() {
        let cfg = DeviceConfig::cnot(0.42, 2.0, 1.0, 4e-3);
        assert_eq!(build_hamiltonian_lab(&cfg, 0.0).unwrap_err(), Error::UnresolvedDrive);
        assert_eq!(build_hamiltonian_rwa(&cfg).unwrap_err(), Error::UnresolvedDrive);
        let resolved = cfg.resolved().unwrap();
        assert!(matches!(resolved.drive_frequency, DriveFrequency::Explicit(w) if w > 0.0));
    }

    #[test]
    fn validation_and_gradient_shape() {
        let mut cfg = DeviceConfig::cnot(0.42, 2.0, 1.0, 4e-3);
        assert!(cfg.has_expected_gradient());
        cfg.b_z = vec![1.0, 2.0];
        assert!(!cfg.has_expected_gradient());
        assert!(cfg.validate().is_ok());
        cfg.b_ac = -1.0;
        assert!(cfg.validate().is_err());
        let mut cfg = DeviceConfig::toffoli(0.42, 0.42, 0.1, 0.2, 0.3, 4e-3);
        assert!(cfg.has_expected_gradient());
        cfg.b_z.pop();
        assert!(cfg.validate().is_err());
    }
}
