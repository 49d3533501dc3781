//! End-to-end acceptance suite. Prints one line per criterion and exits
//! nonzero if any criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rdproxy::codebook::simulate;
use rdproxy::codes::{huffman, lossless_sandwich_check, one_to_one_optimal};
use rdproxy::exact::{
    exact_h_cond_excess, exact_h_guaranteed, sandwich_check, upper_h_excess, SandwichMode,
};
use rdproxy::infotheory::tilted_information;
use rdproxy::model::{AlphaProfile, ConditionalKernel, ReproductionDistribution};
use rdproxy::proxies::{
    alpha_threshold, csiszar_residual, oracle_grid_min, solve_r_cond_excess, solve_r_excess,
    solve_r_expected, solve_r_guaranteed, verify_optimality,
};
use rdproxy::{ball_table, Criterion, InfoValue, InstanceSpec, ProxySolution, SolverOptions};

type Outcome = Result<String, String>;
type Check<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

const EPS_GRID: [f64; 3] = [0.05, 0.1, 0.25];

fn h2(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        0.0
    } else {
        -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
    }
}

fn binary_hamming() -> InstanceSpec {
    InstanceSpec::new(vec![0.5, 0.5], vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap()
}

fn fixture(name: &str) -> InstanceSpec {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name);
    InstanceSpec::from_json(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Twenty random instances with `m, n <= 4`, each with a distortion level
/// at which every ball is nonempty.
fn random_suite() -> Vec<(InstanceSpec, f64)> {
    (0..20u64)
        .map(|seed| {
            let m = 2 + (seed % 3) as usize;
            let n = 2 + ((seed / 3) % 3) as usize;
            let inst = InstanceSpec::random(1000 + seed, m, n, 3);
            let d_min = inst.min_covering_distortion();
            let levels: Vec<f64> = inst
                .distortion_levels()
                .into_iter()
                .filter(|&d| d >= d_min)
                .collect();
            let d = levels[(seed as usize) % levels.len()];
            (inst, d)
        })
        .collect()
}

/// Random instances plus the bundled fixtures, each at every usable
/// distortion level.
fn full_suite(random: &[(InstanceSpec, f64)]) -> Vec<(String, InstanceSpec, f64)> {
    let mut out: Vec<(String, InstanceSpec, f64)> = random
        .iter()
        .enumerate()
        .map(|(i, (inst, d))| (format!("random#{i}"), inst.clone(), *d))
        .collect();
    for name in ["binary_hamming.json", "triangle.json", "random5x5.json"] {
        let inst = fixture(name);
        let d_min = inst.min_covering_distortion();
        for d in inst.distortion_levels().into_iter().filter(|&d| d >= d_min) {
            out.push((format!("{name}@{d}"), inst.clone(), d));
        }
    }
    out
}

fn criterion_1(suite: &[(InstanceSpec, f64)], opts: &SolverOptions) -> Outcome {
    let mut worst: f64 = 0.0;
    for (i, (inst, d)) in suite.iter().enumerate() {
        let r = solve_r_guaranteed(inst, *d, opts).map_err(|e| format!("#{i}: {e}"))?;
        let g =
            oracle_grid_min(inst, *d, &Criterion::Guaranteed, 1e-3).map_err(|e| e.to_string())?;
        let gap = (r.value.bits() - g.bits()).abs();
        worst = worst.max(gap);
        if gap > 1e-3 {
            return Err(format!(
                "#{i}: solver {} vs oracle {} bits",
                r.value.bits(),
                g.bits()
            ));
        }
    }
    Ok(format!("max |R - oracle| = {worst:.2e} bits"))
}

fn criterion_2(suite: &[(InstanceSpec, f64)], opts: &SolverOptions) -> Outcome {
    let mut min_slack = f64::INFINITY;
    for (i, (inst, d)) in suite.iter().enumerate() {
        let r = solve_r_guaranteed(inst, *d, opts).map_err(|e| e.to_string())?;
        let h = exact_h_guaranteed(inst, *d).map_err(|e| e.to_string())?;
        let v = sandwich_check(h.value, r.value, SandwichMode::Guaranteed, true);
        if !v.passed() {
            return Err(format!("#{i}: {v:?}"));
        }
        min_slack = min_slack.min(v.lower_slack.min(v.upper_slack));
    }
    Ok(format!("0 violations, min slack {min_slack:.3e} bits"))
}

fn criterion_3(suite: &[(InstanceSpec, f64)], opts: &SolverOptions) -> Outcome {
    let (mut red, mut orc): (f64, f64) = (0.0, 0.0);
    for (i, (inst, d)) in suite.iter().enumerate() {
        let m = inst.m();
        let g = solve_r_guaranteed(inst, *d, opts).map_err(|e| e.to_string())?;
        let c0 = solve_r_cond_excess(inst, *d, &vec![0.0; m], opts).map_err(|e| e.to_string())?;
        let gap = (g.value.bits() - c0.value.bits()).abs();
        red = red.max(gap);
        if gap > 1e-6 {
            return Err(format!(
                "#{i}: eps=0 gives {} vs {}",
                c0.value.bits(),
                g.value.bits()
            ));
        }
        for eps in EPS_GRID {
            let profile = vec![eps; m];
            let c = solve_r_cond_excess(inst, *d, &profile, opts).map_err(|e| e.to_string())?;
            let o = oracle_grid_min(inst, *d, &Criterion::CondExcess(profile), 1e-3)
                .map_err(|e| e.to_string())?;
            let gap = (c.value.bits() - o.bits()).abs();
            orc = orc.max(gap);
            if gap > 1e-3 {
                return Err(format!(
                    "#{i} eps={eps}: {} vs oracle {}",
                    c.value.bits(),
                    o.bits()
                ));
            }
        }
    }
    let inst = binary_hamming();
    let mut bin: f64 = 0.0;
    for k in 0..=10 {
        let eps = 0.05 * k as f64;
        let c = solve_r_cond_excess(&inst, 0.0, &[eps; 2], opts).map_err(|e| e.to_string())?;
        let gap = (c.value.bits() - (1.0 - h2(eps))).abs();
        bin = bin.max(gap);
        if gap > 1e-4 {
            return Err(format!(
                "binary eps={eps}: {} vs {}",
                c.value.bits(),
                1.0 - h2(eps)
            ));
        }
    }
    Ok(format!(
        "eps=0 gap {red:.1e}, oracle gap {orc:.2e}, binary 1-h gap {bin:.1e} bits"
    ))
}

fn criterion_4(suite: &[(String, InstanceSpec, f64)], opts: &SolverOptions) -> Outcome {
    let mut checked = 0;
    for (name, inst, d) in suite {
        for eps in EPS_GRID {
            let r = solve_r_cond_excess(inst, *d, &vec![eps; inst.m()], opts)
                .map_err(|e| format!("{name}: {e}"))?;
            let h = exact_h_cond_excess(inst, *d, eps).map_err(|e| format!("{name}: {e}"))?;
            let v = sandwich_check(h.value, r.value, SandwichMode::ExcessFamily, true);
            if !v.passed() {
                return Err(format!("{name} eps={eps}: {v:?}"));
            }
            checked += 1;
        }
    }
    Ok(format!("0 violations over {checked} points"))
}

fn criterion_5(suite: &[(String, InstanceSpec, f64)], opts: &SolverOptions) -> Outcome {
    let mut checked = 0;
    for (name, inst, d) in suite {
        let g = solve_r_guaranteed(inst, *d, opts)
            .map_err(|e| e.to_string())?
            .value
            .bits();
        for eps in [0.0, 0.05, 0.1, 0.25, 0.5] {
            let c = solve_r_cond_excess(inst, *d, &vec![eps; inst.m()], opts)
                .map_err(|e| e.to_string())?
                .value
                .bits();
            let e = solve_r_excess(inst, *d, eps, opts)
                .map_err(|e| e.to_string())?
                .value
                .bits();
            if !(e <= c + 1e-9 && c <= g + 1e-9) {
                return Err(format!(
                    "{name} eps={eps}: excess {e}, cond {c}, guaranteed {g}"
                ));
            }
            let up = upper_h_excess(inst, *d, eps).map_err(|e| e.to_string())?;
            let v = sandwich_check(
                up.value,
                InfoValue::from_bits(e),
                SandwichMode::ExcessFamily,
                false,
            );
            if !v.upper_ok {
                return Err(format!("{name} eps={eps}: upper {v:?}"));
            }
            checked += 1;
        }
    }
    Ok(format!("ordering and upper bound hold at {checked} points"))
}

fn markov_holds(inst: &InstanceSpec, d: f64, py: &[f64]) -> Result<(), String> {
    let masses = ball_table(inst, d).ball_masses(py);
    for (x, &b) in masses.iter().enumerate() {
        for k in 0..50 {
            let lambda = 0.2 * k as f64;
            let tilt = tilted_information(py, &inst.dist()[x], lambda, d);
            if -b.ln() < tilt - 1e-12 {
                return Err(format!("x={x} lambda={lambda}: {} < {tilt}", -b.ln()));
            }
        }
    }
    Ok(())
}

fn criterion_6(suite: &[(String, InstanceSpec, f64)], opts: &SolverOptions) -> Outcome {
    let inst = binary_hamming();
    let mut gap: f64 = 0.0;
    let mut res: f64 = 0.0;
    for d in [0.05, 0.11, 0.25] {
        let s = solve_r_expected(&inst, d, opts).map_err(|e| e.to_string())?;
        let g = (s.value.bits() - (1.0 - h2(d))).abs();
        gap = gap.max(g);
        res = res.max(s.residual);
        if g > 1e-5 || s.residual > 1e-4 {
            return Err(format!(
                "d={d}: R={} residual={}",
                s.value.bits(),
                s.residual
            ));
        }
        markov_holds(&inst, d, s.py.as_slice()).map_err(|e| format!("expected d={d}: {e}"))?;
    }
    let mut outputs = 3;
    for (name, inst, d) in suite {
        let sols = [
            solve_r_guaranteed(inst, *d, opts),
            solve_r_cond_excess(inst, *d, &vec![0.1; inst.m()], opts),
            solve_r_excess(inst, *d, 0.1, opts),
        ];
        for s in sols {
            let s = s.map_err(|e| e.to_string())?;
            markov_holds(inst, *d, s.py.as_slice()).map_err(|e| format!("{name}: {e}"))?;
            outputs += 1;
        }
    }
    Ok(format!(
        "max |R - (1-h)| = {gap:.1e} bits, max residual {res:.1e}, Markov holds at {outputs} outputs"
    ))
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for trial in 0..1000 {
        let m = rng.random_range(2..=64);
        let mut p: Vec<f64> = (0..m)
            .map(|_| {
                let u: f64 = rng.random();
                if trial % 10 == 0 {
                    u.powi(8)
                } else {
                    u
                }
            })
            .collect();
        let s: f64 = p.iter().sum();
        p.iter_mut().for_each(|v| *v /= s);
        let v = lossless_sandwich_check(&p).map_err(|e| e.to_string())?;
        if !v.passed {
            return Err(format!("m={m}: {v:?}"));
        }
    }
    let u4 = [0.25; 4];
    let v = lossless_sandwich_check(&u4).map_err(|e| e.to_string())?;
    let l1 = one_to_one_optimal(&u4)
        .map_err(|e| e.to_string())?
        .expected_length;
    let lh = huffman(&u4).map_err(|e| e.to_string())?.expected_length;
    if v.entropy != 2.0 || l1 != 1.0 || lh != 2.0 {
        return Err(format!("uniform-4: H={} L*={l1} L_huffman={lh}", v.entropy));
    }
    Ok("0 violations over 1000 distributions; uniform-4 gives H=2, L*=1, L_huffman=2".into())
}

fn criterion_8(opts: &SolverOptions) -> Outcome {
    let inst = binary_hamming();
    let py = ReproductionDistribution::uniform(2);
    let rep = simulate(&inst, 0.0, &py, &AlphaProfile::ones(2), 100_000, 64, 42)
        .map_err(|e| e.to_string())?;
    // E[floor(log2 W)] for W ~ Geometric(1/2).
    let exact: f64 = (1..200u32)
        .map(|w| 0.5f64.powi(w as i32) * (w.ilog2() as f64))
        .sum();
    let l = rep.mean_code_length;
    if (l.mean - exact).abs() > 3.0 * l.se || l.mean > 1.0 {
        return Err(format!("E[L] = {} +- {} vs {exact}", l.mean, l.se));
    }
    if rep.empirical_entropy_w > rep.entropy_chain_rhs + 3.0 * l.se {
        return Err(format!(
            "H(W) = {} above {}",
            rep.empirical_entropy_w, rep.entropy_chain_rhs
        ));
    }
    let ball = ball_table(&inst, 0.0);
    let mut rates = Vec::new();
    for eps in [0.1, 0.25] {
        let threshold =
            alpha_threshold(py.as_slice(), &ball, inst.px(), eps).map_err(|e| e.to_string())?;
        let sol = solve_r_excess(&inst, 0.0, eps, opts).map_err(|e| e.to_string())?;
        for (py, alpha) in [(py.clone(), threshold), (sol.py.clone(), sol.alpha.clone())] {
            let r =
                simulate(&inst, 0.0, &py, &alpha, 100_000, 64, 42).map_err(|e| e.to_string())?;
            let x = r.empirical_excess_rate;
            if x.mean > eps + 3.0 * x.se {
                return Err(format!("eps={eps}: excess rate {} +- {}", x.mean, x.se));
            }
            rates.push(format!("{:.4}", x.mean));
        }
    }
    Ok(format!(
        "E[L] = {:.4} +- {:.4} (exact {exact:.4}), H(W) = {:.4} <= {:.4}, excess rates [{}]",
        l.mean,
        l.se,
        rep.empirical_entropy_w,
        rep.entropy_chain_rhs,
        rates.join(", ")
    ))
}

/// Moves `weight` of the row with the largest source mass onto its least
/// likely reproduction letter.
fn perturb(kernel: &ConditionalKernel, px: &[f64], weight: f64) -> ConditionalKernel {
    let x = (0..px.len())
        .max_by(|&a, &b| px[a].total_cmp(&px[b]))
        .unwrap();
    let mut rows = kernel.rows().to_vec();
    let row = &mut rows[x];
    let y = (0..row.len())
        .min_by(|&a, &b| row[a].total_cmp(&row[b]))
        .unwrap();
    for v in row.iter_mut() {
        *v *= 1.0 - weight;
    }
    row[y] += weight;
    ConditionalKernel::new(rows).unwrap()
}

fn criterion_9(suite: &[(String, InstanceSpec, f64)], opts: &SolverOptions) -> Outcome {
    let mut worst: f64 = 0.0;
    let mut weakest_perturbed = f64::INFINITY;
    let mut count = 0;
    for (name, inst, d) in suite {
        let ball = ball_table(inst, *d);
        let px = inst.px();
        let mut sols: Vec<ProxySolution> =
            vec![solve_r_guaranteed(inst, *d, opts).map_err(|e| e.to_string())?];
        for eps in EPS_GRID {
            sols.push(
                solve_r_cond_excess(inst, *d, &vec![eps; inst.m()], opts)
                    .map_err(|e| e.to_string())?,
            );
            sols.push(solve_r_excess(inst, *d, eps, opts).map_err(|e| e.to_string())?);
        }
        for mut s in sols {
            let r = verify_optimality(&s, px, &ball);
            if !s.converged || r > 10.0 * opts.tol {
                return Err(format!("{name} {:?}: residual {r:.3e}", s.criterion));
            }
            worst = worst.max(r);
            s.kernel = perturb(&s.kernel, px, 0.2);
            let p = verify_optimality(&s, px, &ball);
            if p <= 0.01 {
                return Err(format!(
                    "{name} {:?}: perturbed residual {p:.3e}",
                    s.criterion
                ));
            }
            weakest_perturbed = weakest_perturbed.min(p);
            count += 1;
        }
    }
    let inst = binary_hamming();
    for d in [0.05, 0.11, 0.25] {
        let s = solve_r_expected(&inst, d, opts).map_err(|e| e.to_string())?;
        let k = perturb(&s.kernel, inst.px(), 0.2);
        let p = csiszar_residual(inst.px(), inst.dist(), &k, s.lambda_star, d);
        if p <= 0.01 {
            return Err(format!("expected d={d}: perturbed residual {p:.3e}"));
        }
        weakest_perturbed = weakest_perturbed.min(p);
    }
    Ok(format!(
        "{count} solutions, max residual {worst:.1e}; min perturbed residual {weakest_perturbed:.3}"
    ))
}

fn criterion_10() -> Outcome {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let run = |args: &[&str]| {
        Command::new(env!("CARGO_BIN_EXE_rdproxy"))
            .args(args)
            .env_remove("RDPROXY_SEED")
            .output()
            .map_err(|e| e.to_string())
    };
    let mut runs = Vec::new();
    for (name, d) in [
        ("binary_hamming.json", "0"),
        ("triangle.json", "1"),
        ("random5x5.json", "1"),
    ] {
        let inst = dir.join(name).to_string_lossy().into_owned();
        for format in ["json", "csv"] {
            runs.push(vec![
                "verify".to_string(),
                inst.clone(),
                "--format".into(),
                format.into(),
            ]);
            runs.push(vec![
                "simulate".into(),
                inst.clone(),
                "--d".into(),
                d.into(),
                "--mode".into(),
                "excess".into(),
                "--seed".into(),
                "42".into(),
                "--trials".into(),
                "20000".into(),
                "--format".into(),
                format.into(),
            ]);
        }
    }
    for args in &runs {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let a = run(&args)?;
        let b = run(&args)?;
        if !a.status.success() || a.stdout.is_empty() {
            return Err(format!(
                "{args:?} failed: {}",
                String::from_utf8_lossy(&a.stderr)
            ));
        }
        if a.stdout != b.stdout || a.stderr != b.stderr {
            return Err(format!("{args:?} differs between runs"));
        }
    }
    Ok(format!(
        "{} command lines byte-identical across two runs",
        runs.len()
    ))
}

fn main() {
    let opts = SolverOptions::default();
    let random = random_suite();
    let suite = full_suite(&random);
    let criteria: Vec<Check> = vec![
        (
            "guaranteed proxy matches grid oracle",
            Box::new(|| criterion_1(&random, &opts)),
        ),
        (
            "guaranteed sandwich",
            Box::new(|| criterion_2(&random, &opts)),
        ),
        (
            "conditional proxy reduction and oracle",
            Box::new(|| criterion_3(&random, &opts)),
        ),
        (
            "conditional sandwich",
            Box::new(|| criterion_4(&suite, &opts)),
        ),
        (
            "excess <= cond <= guaranteed, excess upper bound",
            Box::new(|| criterion_5(&suite, &opts)),
        ),
        (
            "expected-distortion solver and Markov relation",
            Box::new(|| criterion_6(&suite, &opts)),
        ),
        ("lossless sandwiches", Box::new(criterion_7)),
        ("simulator bounds", Box::new(|| criterion_8(&opts))),
        (
            "optimality residuals",
            Box::new(|| criterion_9(&suite, &opts)),
        ),
        ("determinism", Box::new(criterion_10)),
    ];
    let mut failed = 0;
    for (i, (title, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS ({secs:.1}s) {title}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL ({secs:.1}s) {title}: {detail}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
