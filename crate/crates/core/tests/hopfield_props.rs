use proxnet_core::sample::Sampler;
use proxnet_core::{Execution, HopfieldModel, SolverOptions};

fn models(seed: u64, count: usize) -> Vec<HopfieldModel> {
    let mut s = Sampler::new(seed);
    (0..count)
        .map(|_| {
            let kappa = s.uniform(0.1, 0.8);
            s.hopfield(3, 3, kappa, 1.0).unwrap()
        })
        .collect()
}

#[test]
fn prox_equilibrium_has_small_dynamics_residual() {
    for m in models(1, 20) {
        let r = m.equilibrium_via_prox(None, &SolverOptions::default()).unwrap();
        assert!(r.residual <= 1e-8, "{}", r.residual);
        let x = m.state_from_activation(&r.z_star).unwrap();
        assert!(x.distance(&r.x_star) <= 1e-10);
    }
}

#[test]
fn equilibrium_is_unique_across_starts() {
    let opts = SolverOptions::with_tol(1e-11);
    for (i, m) in models(2, 20).iter().enumerate() {
        let mut s = Sampler::new(50 + i as u64);
        let starts: Vec<_> = (0..10).map(|_| s.vector(m.dim(), 5.0)).collect();
        let zs: Vec<_> = m
            .equilibrium_multistart(&starts, &opts, Execution::default())
            .unwrap()
            .into_iter()
            .map(|r| r.unwrap().z_star)
            .collect();
        for z in &zs {
            assert!(z.distance(&zs[0]) <= 1e-8);
        }
    }
}

#[test]
fn equilibrium_solves_the_inclusion_form() {
    for m in models(3, 20) {
        let r = m.equilibrium_via_prox(None, &SolverOptions::default()).unwrap();
        for res in m.inclusion_residuals(&r.z_star, 1e-8).unwrap() {
            assert!(res <= 1e-8);
        }
    }
}

#[test]
fn zero_bias_flow_decays_to_origin() {
    let mut s = Sampler::new(4);
    for _ in 0..5 {
        let m = s.hopfield(2, 2, 0.5, 0.0).unwrap();
        let x0 = s.vector(m.dim(), 1.0);
        let traj = m.simulate(&x0, 0.01, 80.0).unwrap();
        assert!(traj.final_state().norm() <= 1e-6);
    }
}

#[test]
fn simulated_flow_from_equilibrium_is_constant() {
    for m in models(5, 5) {
        let r = m.equilibrium_via_prox(None, &SolverOptions::with_tol(1e-13)).unwrap();
        let traj = m.simulate(&r.x_star, 0.01, 5.0).unwrap();
        for x in &traj.states {
            assert!(x.distance(&r.x_star) <= 1e-10);
        }
    }
}
