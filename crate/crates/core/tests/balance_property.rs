use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sfcdist::sfc_model::{constant_sum, reduce, verify_balance, SteadyStateSystem};
use sfcdist::ModelParameters;

/// Uniform point on the scaled simplex from normalized exponential spacings.
fn feasible<R: Rng>(rng: &mut R, nw: usize, total: f64) -> Vec<f64> {
    let e: Vec<f64> = (0..nw).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|v| v / s * total).collect()
}

fn random_params<R: Rng>(rng: &mut R) -> ModelParameters {
    loop {
        let p = ModelParameters {
            alpha0: rng.random_range(1e-4..1.0),
            alpha1: rng.random_range(0.3..0.95),
            alpha2: rng.random_range(0.0..0.1),
            r: rng.random_range(0.0..0.1),
            delta: rng.random_range(0.01..0.3),
            k: rng.random_range(0.5..6.0),
            gamma_adj: 0.0,
        };
        if p.validate().is_ok() {
            return p;
        }
    }
}

#[test]
fn random_feasible_vectors_balance() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let p = ModelParameters::REFERENCE;
    for nw in [2, 10, 100] {
        let reduced = reduce(&SteadyStateSystem::build(&p, nw).unwrap()).unwrap();
        let total = constant_sum(&p, nw).unwrap();
        for _ in 0..1000 {
            let m = feasible(&mut rng, nw, total);
            let state = reduced.recover(&m).unwrap();
            let report = verify_balance(&state, &p);
            assert!(report.passed, "nw = {nw}: {:?}", report.failures().collect::<Vec<_>>());
            assert!(report.max_residual() < 1e-9);
        }
    }
}

#[test]
fn random_parameters_five_households() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..50 {
        let p = random_params(&mut rng);
        let reduced = reduce(&SteadyStateSystem::build(&p, 5).unwrap()).unwrap();
        assert_eq!(reduced.solution_dimension(), 4);
        let total = constant_sum(&p, 5).unwrap();
        assert!((reduced.constant_sum_row.rhs - total).abs() <= 1e-10 * total);
        for _ in 0..20 {
            let state = reduced.recover(&feasible(&mut rng, 5, total)).unwrap();
            assert!(verify_balance(&state, &p).passed, "{p:?}");
        }
    }
}
