use nalgebra::DVector;
use num_complex::Complex64;

use qdgate_core::analysis::{flip_time, population_up};
use qdgate_core::device::{build_hamiltonian_rwa, DeviceConfig};
use qdgate_core::dynamics::{evolve, expm_oracle, uniform_grid, Hamiltonian, SolverOptions};
use qdgate_core::noise::{collapse_set_for_device, dephasing_operator, phonon_rate, Channel, CollapseOperator, CollapseSet, NoiseConfig};
use qdgate_core::quantum::{BasisState, DensityMatrix, Operator};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn ket(d: usize, i: usize) -> DVector<Complex64> {
    let mut v = DVector::zeros(d);
    v[i] = c(1.0, 0.0);
    v
}

#[test]
fn thermalization_reaches_boltzmann_ratio() {
    let (gap, t_k) = (20.0, 10.0);
    let p = 1.0 / phonon_rate(gap, gap, 1.0, t_k).unwrap();
    let down = phonon_rate(gap, gap, p, t_k).unwrap();
    let up = phonon_rate(-gap, gap, p, t_k).unwrap();
    // index 0 is the upper level
    let h = Operator::from_real_diagonal(&[gap / 2.0, -gap / 2.0]);
    let set = CollapseSet::new(
        2,
        vec![
            CollapseOperator::dyad(Channel::PhononPositive, None, down, &ket(2, 1), &ket(2, 0)),
            CollapseOperator::dyad(Channel::PhononNegative, None, up, &ket(2, 0), &ket(2, 1)),
        ],
    )
    .unwrap();
    let rho0 = DensityMatrix::basis(BasisState::new(1, 1).unwrap());
    let t_end = 50.0 / up.min(down);
    let traj = evolve(&Hamiltonian::Static(h), &set, &rho0, &[t_end], &SolverOptions::default()).unwrap();
    let rho = traj.final_state().operator();
    let ratio = rho[(0, 0)].re / rho[(1, 1)].re;
    let expected = (-gap / t_k).exp();
    assert!((ratio / expected - 1.0).abs() < 1e-6, "{ratio} vs {expected}");
}

#[test]
fn collective_dephasing_decays_coherence() {
    let t2 = 50.0;
    let set = CollapseSet::new(4, vec![CollapseOperator::dense(Channel::Dephasing, 1.0 / (2.0 * t2), dephasing_operator(2, t2).unwrap())]).unwrap();
    let plus_up = (ket(4, 0) + ket(4, 2)) * c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let rho0 = DensityMatrix::pure(&plus_up).unwrap();
    let h = Hamiltonian::Static(Operator::zeros(4));
    let times = uniform_grid(100.0, 11);
    let traj = evolve(&h, &set, &rho0, &times, &SolverOptions::default()).unwrap();
    for (t, rho) in times.iter().zip(&traj.states) {
        let coherence = rho.operator()[(0, 2)].norm();
        let oracle = expm_oracle(&h, &set, &rho0, *t).unwrap();
        assert!((coherence - oracle.operator()[(0, 2)].norm()).abs() < 1e-7);
        assert!((coherence - 0.5 * (-t / t2).exp()).abs() < 1e-7, "t = {t}");
    }
}

#[test]
fn noise_free_rabi_flip_agrees_with_oracle() {
    let cfg = DeviceConfig::cnot(0.42, 2.0, 1.0, 4e-3).resolved().unwrap();
    let t_flip = flip_time(&cfg).unwrap();
    let h = Hamiltonian::Static(build_hamiltonian_rwa(&cfg).unwrap());
    let set = CollapseSet::empty(4);
    let rho0 = DensityMatrix::basis("uu".parse().unwrap());
    let oracle = expm_oracle(&h, &set, &rho0, t_flip).unwrap();
    assert!(population_up(&oracle, 1).unwrap() < 0.01);
    let traj = evolve(&h, &set, &rho0, &[t_flip], &SolverOptions::default()).unwrap();
    assert!(traj.final_state().operator().max_abs_diff(oracle.operator()) < 1e-6);
}

#[test]
fn tightening_tolerances_converges_to_oracle() {
    let cfg = DeviceConfig::cnot(0.42, 1.5, 0.75, 4e-3).resolved().unwrap();
    let t_flip = flip_time(&cfg).unwrap();
    let h = Hamiltonian::Static(build_hamiltonian_rwa(&cfg).unwrap());
    let set = collapse_set_for_device(&cfg, &NoiseConfig::default().scaled(1e3)).unwrap();
    let rho0 = DensityMatrix::basis("du".parse().unwrap());
    let oracle = expm_oracle(&h, &set, &rho0, t_flip).unwrap();
    let error_at = |rtol: f64| {
        let opts = SolverOptions { rtol, atol: rtol * 1e-2, ..Default::default() };
        let traj = evolve(&h, &set, &rho0, &[t_flip], &opts).unwrap();
        traj.final_state().operator().max_abs_diff(oracle.operator())
    };
    let errors: Vec<f64> = [1e-5, 1e-7, 1e-9].into_iter().map(error_at).collect();
    assert!(errors[2] < errors[1] && errors[1] < errors[0], "{errors:?}");
    assert!(errors[2] < 1e-7, "{errors:?}");
}
