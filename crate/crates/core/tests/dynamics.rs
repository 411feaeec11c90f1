use qtraj_core::linalg::{eig_general, CVector, DEFAULT_TOL};
use qtraj_core::master::{evolve_master, DensityMatrix};
use qtraj_core::models::{AtomParams, ModelKind, ModelSpec};
use qtraj_core::ode::Controls;
use qtraj_core::photonstats::{g2_analytic_rf, g2_estimate, poisson_stream, stream_from_trajectory, tau_grid};
use qtraj_core::trajectory::{run_ensemble, run_trajectory, SampleGrid, Solver};
use qtraj_core::C64;

fn dark_pair() -> ModelSpec {
    let p = AtomParams { v: 10.0, gamma12: 1.0, omega_rabi: 5.0, delta_diff: 2.0, ..Default::default() }.on_antisymmetric_resonance();
    ModelSpec::build(ModelKind::TwoAtomEigen, p).unwrap()
}

#[test]
fn conditional_state_relaxes_to_slowest_mode() {
    let m = dark_pair();
    let h = m.effective_hamiltonian();
    let spec = eig_general(&h, DEFAULT_TOL).unwrap();
    let slow = &spec.right[0];
    // conditional evolution with no detection, renormalised every step
    let dt = 0.05;
    let x = h.scale(C64::new(0.0, -dt));
    let mut psi = CVector::basis(4, m.ground_index());
    for _ in 0..(400.0 / dt) as usize {
        let mut term = psi.clone();
        let mut next = psi.clone();
        for k in 1..20 {
            term = x.mul_vec(&term).scale(C64::new(1.0 / k as f64, 0.0));
            next = &next + &term;
        }
        psi = next.normalized().unwrap();
    }
    let overlap = slow.dot(&psi).norm();
    assert!((overlap - 1.0).abs() < 1e-8, "overlap {overlap}");
}

#[test]
fn relaxing_atom_ensemble_follows_exponential_decay() {
    let m = ModelSpec::build(ModelKind::Relaxing, AtomParams::default()).unwrap();
    let psi0 = CVector::from_real(&[0.9, 0.19f64.sqrt()]);
    let grid = SampleGrid::uniform(4.0, 9);
    let n = 400;
    let ens = run_ensemble(&m, &psi0, 4.0, &Solver::Molmer { dt: 1e-3 }, n, 7, &grid).unwrap();
    for (t, p) in ens.times.iter().zip(&ens.mean_populations) {
        let exact = 0.81 * (-t).exp();
        let sigma = (exact * (1.0 - exact) / n as f64).sqrt().max(1e-3);
        assert!((p[0] - exact).abs() < 4.0 * sigma, "t={t}: {} vs {exact}", p[0]);
    }
}

#[test]
fn ensemble_tracks_master_equation() {
    let p = AtomParams { v: 3.0, gamma12: 0.5, omega_rabi: 2.0, delta_diff: 1.0, delta_total: -1.0, ..Default::default() };
    let m = ModelSpec::build(ModelKind::TwoAtomProduct, p).unwrap();
    let psi0 = CVector::basis(4, m.ground_index());
    let grid = SampleGrid::uniform(6.0, 7);
    let times = grid.times(6.0).unwrap();
    let n = 400;
    let ens = run_ensemble(&m, &psi0, 6.0, &Solver::NormThreshold(Controls::default()), n, 11, &grid).unwrap();
    let master = evolve_master(&m, &DensityMatrix::pure(&psi0).unwrap(), &times, Controls::new(1e-10, 1e-12)).unwrap();
    for (k, rho) in master.states.iter().enumerate() {
        for (i, exact) in rho.populations().into_iter().enumerate() {
            let sigma = (exact * (1.0 - exact) / n as f64).sqrt().max(1e-3);
            let got = ens.mean_populations[k][i];
            assert!((got - exact).abs() < 4.5 * sigma, "t={} level {i}: {got} vs {exact}", times[k]);
        }
    }
}

#[test]
fn ensemble_is_reproducible_and_seed_sensitive() {
    let m = ModelSpec::build(ModelKind::Driven, AtomParams { omega_rabi: 2.0, ..Default::default() }).unwrap();
    let psi0 = CVector::basis(2, 1);
    let run = |seed| run_ensemble(&m, &psi0, 3.0, &Solver::Molmer { dt: 0.01 }, 20, seed, &SampleGrid::Every(0.5)).unwrap();
    assert_eq!(run(5), run(5));
    assert_ne!(run(5).mean_populations, run(6).mean_populations);
}

#[test]
fn poisson_light_is_uncorrelated() {
    let s = poisson_stream(1.0, 2e5, 3).unwrap();
    let g = g2_estimate(&s, 0.1, &tau_grid(0.1, 2.0), 4).unwrap();
    for (tau, v) in g.taus.iter().zip(&g.values) {
        assert!((v - 1.0).abs() < 0.1, "g2({tau}) = {v}");
    }
}

#[test]
fn driven_atom_is_antibunched() {
    let (omega, gamma) = (4.0, 1.0);
    let m = ModelSpec::build(ModelKind::Driven, AtomParams { omega_rabi: omega, gamma, ..Default::default() }).unwrap();
    let rec = run_trajectory(&m, &CVector::basis(2, 1), 2e4, &Solver::NormThreshold(Controls::default()), 9, &SampleGrid::Endpoints).unwrap();
    let s = stream_from_trajectory(&rec, None).unwrap();
    let taus = tau_grid(0.1, 4.0);
    let g = g2_estimate(&s, 0.1, &taus, 10).unwrap();
    let exact = g2_analytic_rf(omega, gamma, &taus);
    assert!(g.values[0] < 0.2, "g2(0) = {}", g.values[0]);
    let rms = (g.values.iter().zip(&exact.values).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / taus.len() as f64).sqrt();
    assert!(rms < 0.2, "rms deviation {rms}");
}
