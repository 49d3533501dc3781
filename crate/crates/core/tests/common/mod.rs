#![allow(dead_code)]

use rdproxy::InstanceSpec;

/// Random instance together with a distortion level at which every source
/// letter has a nonempty ball.
pub fn feasible_instance(seed: u64, m: usize, n: usize) -> (InstanceSpec, f64) {
    let inst = InstanceSpec::random(seed, m, n, 3);
    let levels = inst.distortion_levels();
    let d_min = inst.min_covering_distortion();
    let usable: Vec<f64> = levels.into_iter().filter(|&d| d >= d_min).collect();
    let d = usable[(seed as usize) % usable.len()];
    (inst, d)
}

pub fn triangle() -> InstanceSpec {
    let dist = (0..3)
        .map(|x| {
            (0..3)
                .map(|y| match (y + 3 - x) % 3 {
                    0 => 0.0,
                    1 => 1.0,
                    _ => 2.0,
                })
                .collect()
        })
        .collect();
    InstanceSpec::new(vec![1.0 / 3.0; 3], dist).unwrap()
}

pub fn binary_hamming() -> InstanceSpec {
    InstanceSpec::new(vec![0.5, 0.5], vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap()
}
