//! Hyperfine and phonon relaxation rates and the Lindblad collapse operators
//! built from them.
//!
//! Rates are in model units (μeV with ħ = 1, i.e. inverse time units of
//! ħ/μeV). `upsilon` therefore has units of μeV and `phonon` of μeV⁻⁴.
//!
//! For every ordered pair of eigenstates `(j, k)` with signed gap
//! `ω_jk = w_j − w_k` the set contains `sqrt(rate(ω_jk))·|w_j⟩⟨w_k|`. Pairs with
//! `ω_jk > 0` form the positive channel and use the Gaussian hyperfine rate and
//! the phonon rate at `+|ω|`; pairs with `ω_jk < 0` form the negative channel
//! and carry the Boltzmann-suppressed partner rates.

use std::fmt;

use nalgebra::DVector;

use crate::device::{ns_to_time, static_hamiltonian, DeviceConfig};
use crate::error::{Error, Result};
use crate::quantum::{c, eigensystem, kron, pauli, Axis, EigenSystem, Operator, C64};

/// Rates below this are treated as exactly zero.
pub const RATE_FLOOR: f64 = 1e-30;

/// Hyperfine rate constant frozen by calibration against the low-field CNOT row.
pub const CALIBRATED_UPSILON: f64 = 1.0;
/// Phonon rate constant frozen by calibration against the `B_T = 1 T` CNOT row.
pub const CALIBRATED_PHONON: f64 = 8.5e-17;

/// Which energy enters the `E²` factor of the phonon rate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PhononEnergyMode {
    /// `E_jk = ω_jk`, the full eigen-gap.
    Gap,
    /// `E_jk` from the bare Zeeman energies of the labeled states.
    BareZeeman,
}

/// Noise constants; all energies in μeV, `t2_star_ns` in nanoseconds.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseConfig {
    pub upsilon: f64,
    pub phonon: f64,
    pub delta_e_nuc: f64,
    pub t_k: f64,
    pub t2_star_ns: f64,
    pub hyperfine: bool,
    pub phonon_enabled: bool,
    pub dephasing: bool,
    pub phonon_energy: PhononEnergyMode,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            upsilon: CALIBRATED_UPSILON,
            phonon: CALIBRATED_PHONON,
            delta_e_nuc: 0.3,
            t_k: 10.0,
            t2_star_ns: 1000.0,
            hyperfine: true,
            phonon_enabled: true,
            dephasing: true,
            phonon_energy: PhononEnergyMode::Gap,
        }
    }
}

impl NoiseConfig {
    pub fn disabled() -> Self {
        NoiseConfig { hyperfine: false, phonon_enabled: false, dephasing: false, ..Default::default() }
    }

    /// Same configuration with both rate constants multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        NoiseConfig { upsilon: self.upsilon * factor, phonon: self.phonon * factor, ..self.clone() }
    }

    pub fn t2_star(&self) -> f64 {
        ns_to_time(self.t2_star_ns)
    }

    pub fn validate(&self) -> Result<()> {
        let checks = [
            (self.upsilon >= 0.0, "upsilon must be >= 0"),
            (self.phonon >= 0.0, "p must be >= 0"),
            (self.delta_e_nuc > 0.0, "delta_e_nuc must be > 0"),
            (self.t_k > 0.0, "t_k must be > 0"),
            (self.t2_star_ns > 0.0, "t2_star must be > 0"),
        ];
        for (ok, msg) in checks {
            if !ok {
                return Err(Error::InvalidConfig(msg.into()));
            }
        }
        Ok(())
    }
}

fn floor(rate: f64) -> f64 {
    if rate < RATE_FLOOR {
        0.0
    } else {
        rate
    }
}

/// `Υ·exp(−ω²/(2δE_nuc²))`
pub fn hyperfine_rate_down(omega: f64, upsilon: f64, delta_e_nuc: f64) -> Result<f64> {
    if omega <= 0.0 || omega.is_nan() {
        return Err(Error::NonPositiveGap(omega));
    }
    Ok(upsilon * (-omega * omega / (2.0 * delta_e_nuc * delta_e_nuc)).exp())
}

/// `Υ·exp(−ω²/(2δE_nuc²) − ω/T_k)`
pub fn hyperfine_rate_up(omega: f64, upsilon: f64, delta_e_nuc: f64, t_k: f64) -> Result<f64> {
    if omega <= 0.0 || omega.is_nan() {
        return Err(Error::NonPositiveGap(omega));
    }
    Ok(upsilon * (-omega * omega / (2.0 * delta_e_nuc * delta_e_nuc) - omega / t_k).exp())
}

/// `P·|ω³E² / (1 − e^(−ω/T_k))|` for a signed gap `ω`.
pub fn phonon_rate(omega: f64, energy: f64, p: f64, t_k: f64) -> Result<f64> {
    if omega == 0.0 || omega.is_nan() {
        return Err(Error::ZeroGap);
    }
    let x = omega / t_k;
    // 1 − e^(−x) without cancellation near 0
    let denom = -(-x).exp_m1();
    Ok(p * (omega.powi(3) * energy * energy / denom).abs())
}

/// `sqrt(1/(2·T2*))·σz⊗…⊗σz` with `t2_star` in model time units.
pub fn dephasing_operator(n_qubits: usize, t2_star: f64) -> Result<Operator> {
    if !(2..=3).contains(&n_qubits) {
        return Err(Error::UnsupportedQubitCount(n_qubits));
    }
    let z = pauli(Axis::Z);
    let mut op = Operator::identity(1);
    for _ in 0..n_qubits {
        op = kron(&op, &z);
    }
    Ok(op.scale_real((1.0 / (2.0 * t2_star)).sqrt()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Channel {
    HyperfinePositive,
    HyperfineNegative,
    PhononPositive,
    PhononNegative,
    Dephasing,
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Channel::HyperfinePositive => "hyperfine+",
            Channel::HyperfineNegative => "hyperfine-",
            Channel::PhononPositive => "phonon+",
            Channel::PhononNegative => "phonon-",
            Channel::Dephasing => "dephasing",
        })
    }
}

/// One Lindblad operator with its provenance.
#[derive(Clone, Debug)]
pub struct CollapseOperator {
    pub channel: Channel,
    /// `(j, k)` for `|w_j⟩⟨w_k|`; `None` for dephasing.
    pub transition: Option<(usize, usize)>,
    pub rate: f64,
    matrix: Operator,
    dyad: Option<(DVector<C64>, DVector<C64>)>,
}

impl CollapseOperator {
    /// `sqrt(rate)·|ket⟩⟨bra|`
    pub fn dyad(channel: Channel, transition: Option<(usize, usize)>, rate: f64, ket: &DVector<C64>, bra: &DVector<C64>) -> Self {
        let scaled = ket * c(rate.sqrt(), 0.0);
        CollapseOperator {
            channel,
            transition,
            rate,
            matrix: Operator::outer(&scaled, bra),
            dyad: Some((scaled, bra.clone())),
        }
    }

    pub fn dense(channel: Channel, rate: f64, matrix: Operator) -> Self {
        CollapseOperator { channel, transition: None, rate, matrix, dyad: None }
    }

    pub fn matrix(&self) -> &Operator {
        &self.matrix
    }

    /// `(u, v)` with the operator equal to `u·v†`, when rank one.
    pub fn factors(&self) -> Option<(&DVector<C64>, &DVector<C64>)> {
        self.dyad.as_ref().map(|(u, v)| (u, v))
    }
}

#[derive(Clone, Debug, Default)]
pub struct CollapseSet {
    ops: Vec<CollapseOperator>,
    dim: usize,
    eigenbasis: Option<Operator>,
}

impl CollapseSet {
    pub fn new(dim: usize, ops: Vec<CollapseOperator>) -> Result<Self> {
        if let Some(bad) = ops.iter().find(|o| o.matrix.dim() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, found: bad.matrix.dim() });
        }
        Ok(CollapseSet { ops, dim, eigenbasis: None })
    }

    pub fn empty(dim: usize) -> Self {
        CollapseSet { ops: Vec::new(), dim, eigenbasis: None }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Eigenvector matrix whose columns the `transition` indices refer to.
    pub fn eigenbasis(&self) -> Option<&Operator> {
        self.eigenbasis.as_ref()
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, CollapseOperator> {
        self.ops.iter()
    }

    pub fn count(&self, channel: Channel) -> usize {
        self.ops.iter().filter(|o| o.channel == channel).count()
    }

    /// Sum of rates over the given channels.
    pub fn total_rate(&self, channels: &[Channel]) -> f64 {
        self.ops.iter().filter(|o| channels.contains(&o.channel)).map(|o| o.rate).sum()
    }

    pub fn push(&mut self, op: CollapseOperator) -> Result<()> {
        if op.matrix.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: op.matrix.dim() });
        }
        self.ops.push(op);
        Ok(())
    }
}

impl<'a> IntoIterator for &'a CollapseSet {
    type Item = &'a CollapseOperator;
    type IntoIter = std::slice::Iter<'a, CollapseOperator>;
    fn into_iter(self) -> Self::IntoIter {
        self.ops.iter()
    }
}

/// Collapse operators for the eigenstates of `eig` (gap mode only).
pub fn build_collapse_set(eig: &EigenSystem, noise: &NoiseConfig) -> Result<CollapseSet> {
    build_collapse_set_with(eig, noise, None)
}

/// Collapse operators for a device, using the eigenstates of its drift
/// Hamiltonian. Supports both phonon energy modes.
pub fn collapse_set_for_device(cfg: &DeviceConfig, noise: &NoiseConfig) -> Result<CollapseSet> {
    let eig = eigensystem(&static_hamiltonian(cfg)?)?;
    let bare = bare_zeeman_energies(cfg)?;
    build_collapse_set_with(&eig, noise, Some(&bare))
}

/// Diagonal of the drift Hamiltonian with exchange switched off, per basis index.
pub fn bare_zeeman_energies(cfg: &DeviceConfig) -> Result<Vec<f64>> {
    let mut bare = cfg.clone();
    bare.exchange.iter_mut().for_each(|j| *j = 0.0);
    let h = static_hamiltonian(&bare)?;
    Ok((0..h.dim()).map(|i| h[(i, i)].re).collect())
}

fn build_collapse_set_with(eig: &EigenSystem, noise: &NoiseConfig, bare: Option<&[f64]>) -> Result<CollapseSet> {
    noise.validate()?;
    let n = eig.dim();
    let scale = eig.values().iter().fold(1.0f64, |m, w| m.max(w.abs()));
    let degenerate = eig.values().windows(2).any(|w| (w[1] - w[0]).abs() <= 1e-9 * scale);
    if degenerate && (noise.hyperfine || noise.phonon_enabled) {
        return Err(Error::Unlabeled);
    }

    let phonon_energy = |j: usize, k: usize| -> Result<f64> {
        match noise.phonon_energy {
            PhononEnergyMode::Gap => Ok(eig.gap(j, k)),
            PhononEnergyMode::BareZeeman => {
                let bare = bare.ok_or_else(|| {
                    Error::InvalidConfig("bare_zeeman phonon energies need the device configuration".into())
                })?;
                let lj = eig.label(j).ok_or(Error::Unlabeled)?;
                let lk = eig.label(k).ok_or(Error::Unlabeled)?;
                Ok(bare[lj.index()] - bare[lk.index()])
            }
        }
    };

    let mut set = CollapseSet::empty(n);
    set.eigenbasis = Some(eig.vectors().clone());
    let vectors: Vec<DVector<C64>> = (0..n).map(|k| eig.vector(k)).collect();
    for positive in [true, false] {
        if noise.hyperfine {
            for j in 0..n {
                for k in 0..n {
                    let w = eig.gap(j, k);
                    if j == k || (w > 0.0) != positive {
                        continue;
                    }
                    let (rate, channel) = if positive {
                        (hyperfine_rate_down(w, noise.upsilon, noise.delta_e_nuc)?, Channel::HyperfinePositive)
                    } else {
                        (hyperfine_rate_up(-w, noise.upsilon, noise.delta_e_nuc, noise.t_k)?, Channel::HyperfineNegative)
                    };
                    set.push(CollapseOperator::dyad(channel, Some((j, k)), floor(rate), &vectors[j], &vectors[k]))?;
                }
            }
        }
        if noise.phonon_enabled {
            for j in 0..n {
                for k in 0..n {
                    let w = eig.gap(j, k);
                    if j == k || (w > 0.0) != positive {
                        continue;
                    }
                    let rate = phonon_rate(w, phonon_energy(j, k)?, noise.phonon, noise.t_k)?;
                    let channel = if positive { Channel::PhononPositive } else { Channel::PhononNegative };
                    set.push(CollapseOperator::dyad(channel, Some((j, k)), floor(rate), &vectors[j], &vectors[k]))?;
                }
            }
        }
    }
    if noise.dephasing {
        let nq = crate::quantum::qubits_for_dim(n)?;
        let op = dephasing_operator(nq, noise.t2_star())?;
        set.push(CollapseOperator::dense(Channel::Dephasing, 1.0 / (2.0 * noise.t2_star()), op))?;
    }
    Ok(set)
}
