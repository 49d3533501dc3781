mod common;

use rdproxy::infotheory::tilted_information;
use rdproxy::proxies::{solve_r_cond_excess, solve_r_excess, solve_r_expected, solve_r_guaranteed};
use rdproxy::{ball_table, InstanceSpec, SolverOptions};

use common::{binary_hamming, feasible_instance};

/// `-ln P_Y(B_d(x)) >= Lambda_Y(x, lambda)` on a grid of `lambda`.
fn check_markov(inst: &InstanceSpec, d: f64, py: &[f64]) {
    let ball = ball_table(inst, d);
    let masses = ball.ball_masses(py);
    for (x, &b) in masses.iter().enumerate() {
        for k in 0..50 {
            let lambda = 0.2 * k as f64;
            let tilt = tilted_information(py, &inst.dist()[x], lambda, d);
            assert!(
                -b.ln() >= tilt - 1e-12,
                "x={x} lambda={lambda}: {} < {tilt}",
                -b.ln()
            );
        }
    }
}

#[test]
fn markov_at_solver_outputs() {
    let opts = SolverOptions::default();
    for seed in 0..10 {
        let (inst, d) = feasible_instance(seed, 3, 4);
        check_markov(
            &inst,
            d,
            solve_r_guaranteed(&inst, d, &opts).unwrap().py.as_slice(),
        );
        let eps = vec![0.1; inst.m()];
        check_markov(
            &inst,
            d,
            solve_r_cond_excess(&inst, d, &eps, &opts)
                .unwrap()
                .py
                .as_slice(),
        );
        check_markov(
            &inst,
            d,
            solve_r_excess(&inst, d, 0.1, &opts).unwrap().py.as_slice(),
        );
    }
    let inst = binary_hamming();
    for d in [0.05, 0.11, 0.25] {
        check_markov(
            &inst,
            d,
            solve_r_expected(&inst, d, &opts).unwrap().py.as_slice(),
        );
    }
}
