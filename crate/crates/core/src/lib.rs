//! Open-system simulation of spin-qubit CNOT and Toffoli gates in coupled
//! quantum dots: Hamiltonians, thermal collapse operators, Lindblad dynamics
//! and operating-range sweeps.

pub mod analysis;
pub mod device;
pub mod dynamics;
pub mod error;
pub mod noise;
pub mod ode;
pub mod quantum;

pub use analysis::{
    classify, expected_final, flip_time, operating_range, population_up, GateVerdict, OperatingRange, SweepResult,
    SweepSpec, Thresholds,
};
pub use device::{
    build_hamiltonian_lab, build_hamiltonian_rwa, DeviceConfig, DriveFrequency, Gate, PeriodicHamiltonian,
};
pub use dynamics::{evolve, expm_oracle, Hamiltonian, SolverOptions, Trajectory};
pub use error::{Error, Result};
pub use noise::{build_collapse_set, hyperfine_rate_down, hyperfine_rate_up, phonon_rate, CollapseSet, NoiseConfig};
pub use quantum::{eigensystem, embed_pauli, kron, partial_trace, BasisState, DensityMatrix, EigenSystem, Operator};
