mod common;

use rdproxy::proxies::{
    oracle_grid_min, solve_r_cond_excess, solve_r_excess, solve_r_guaranteed, Criterion,
};
use rdproxy::SolverOptions;

use common::feasible_instance;

const STEP: f64 = 0.01;

#[test]
fn guaranteed_matches_grid() {
    let opts = SolverOptions::default();
    for seed in 0..12 {
        let (inst, d) = feasible_instance(seed, 2 + seed as usize % 3, 2 + (seed as usize / 3) % 3);
        let r = solve_r_guaranteed(&inst, d, &opts).unwrap().value.bits();
        let grid = oracle_grid_min(&inst, d, &Criterion::Guaranteed, STEP)
            .unwrap()
            .bits();
        assert!(
            r <= grid + 1e-9,
            "seed {seed}: solver {r} above grid {grid}"
        );
        assert!(
            grid - r < 0.02,
            "seed {seed}: solver {r} far below grid {grid}"
        );
    }
}

#[test]
fn cond_excess_matches_grid() {
    let opts = SolverOptions::default();
    for seed in 0..8 {
        let (inst, d) = feasible_instance(100 + seed, 3, 3);
        let eps: Vec<f64> = (0..inst.m()).map(|x| 0.05 * (x as f64 + 1.0)).collect();
        let r = solve_r_cond_excess(&inst, d, &eps, &opts)
            .unwrap()
            .value
            .bits();
        let grid = oracle_grid_min(&inst, d, &Criterion::CondExcess(eps), STEP)
            .unwrap()
            .bits();
        assert!(r <= grid + 1e-9, "seed {seed}: {r} vs {grid}");
        assert!(grid - r < 0.02, "seed {seed}: {r} vs {grid}");
    }
}

#[test]
fn excess_matches_grid() {
    let opts = SolverOptions::default();
    for seed in 0..6 {
        let (inst, d) = feasible_instance(200 + seed, 3, 3);
        for eps in [0.05, 0.2] {
            let r = solve_r_excess(&inst, d, eps, &opts).unwrap().value.bits();
            let grid = oracle_grid_min(&inst, d, &Criterion::Excess(eps), STEP)
                .unwrap()
                .bits();
            assert!(r <= grid + 1e-7, "seed {seed} eps {eps}: {r} vs {grid}");
            assert!(grid - r < 0.02, "seed {seed} eps {eps}: {r} vs {grid}");
        }
    }
}
