use std::path::Path;

use rayon::prelude::*;
use serde_json::{json, Value};

use rdproxy::codebook::simulate;
use rdproxy::codes::lossless_sandwich_check;
use rdproxy::exact::{
    exact_h_cond_excess, exact_h_guaranteed, sandwich_check, upper_h_excess, ExactError,
    QuantizerSolution, SandwichMode,
};
use rdproxy::infotheory::tilted_information;
use rdproxy::model::InstanceFile;
use rdproxy::proxies::{
    oracle_grid_min, solve_r_cond_excess, solve_r_excess, solve_r_expected, solve_r_guaranteed,
    verify_optimality, ExpectedSolution, ORACLE_MAX_N,
};
use rdproxy::{
    ball_table, AlphaProfile, Criterion, InfoValue, InstanceSpec, ProxyError, ProxySolution,
    SolverOptions,
};

use crate::args::{Command, ModeArg, RunArgs, UnitsArg};
use crate::error::CliError;
use crate::grid::parse_grid;
use crate::table::{join_vec, Cell, Table};

pub struct Outcome {
    pub json: Value,
    pub table: Table,
    pub status: u8,
    pub warnings: Vec<String>,
}

const EXIT_VERIFY: u8 = 3;
const EXIT_NOT_CONVERGED: u8 = 4;

pub fn run(command: &Command) -> Result<Outcome, CliError> {
    let args = command.args();
    if !(args.tol > 0.0 && args.tol.is_finite()) {
        return Err(CliError::Usage(format!(
            "--tol must be positive, got {}",
            args.tol
        )));
    }
    if args.max_iter == 0 {
        return Err(CliError::Usage("--max-iter must be positive".into()));
    }
    let instance = load_instance(&args.instance)?;
    match command {
        Command::Compute(a) => compute(&instance, a),
        Command::Exact(a) => exact(&instance, a),
        Command::Sweep(a) => sweep(&instance, a),
        Command::Simulate(a) => simulate_cmd(&instance, a),
        Command::Verify(a) => verify(&instance, a),
    }
}

pub fn load_instance(path: &Path) -> Result<InstanceSpec, CliError> {
    let shown = path.display().to_string();
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{shown}: {e}")))?;
    let file: InstanceFile = serde_json::from_str(&text).map_err(|e| {
        let message = e.to_string();
        let message = message
            .split(" at line ")
            .next()
            .unwrap_or_default()
            .to_string();
        CliError::Parse {
            path: shown.clone(),
            line: e.line(),
            column: e.column(),
            message,
        }
    })?;
    InstanceSpec::from_file(file).map_err(|source| CliError::Instance {
        path: shown,
        source,
    })
}

fn options(args: &RunArgs) -> SolverOptions {
    SolverOptions {
        tol: args.tol,
        max_iter: args.max_iter,
        record_trace: false,
    }
}

fn in_units(v: InfoValue, units: UnitsArg) -> f64 {
    match units {
        UnitsArg::Bits => v.bits(),
        UnitsArg::Nats => v.nats(),
    }
}

fn units_name(units: UnitsArg) -> &'static str {
    match units {
        UnitsArg::Bits => "bits",
        UnitsArg::Nats => "nats",
    }
}

fn single(spec: &str, flag: &str) -> Result<f64, CliError> {
    match parse_grid(spec)?.as_slice() {
        [v] => Ok(*v),
        _ => Err(CliError::Usage(format!(
            "--{flag} takes a single value for this command"
        ))),
    }
}

fn required_d(args: &RunArgs) -> Result<&str, CliError> {
    args.d
        .as_deref()
        .ok_or_else(|| CliError::Usage("--d is required".into()))
}

fn check_eps(eps: f64) -> Result<f64, CliError> {
    if (0.0..=1.0).contains(&eps) {
        Ok(eps)
    } else {
        Err(CliError::Usage(format!("eps = {eps} outside [0, 1]")))
    }
}

/// Runs a proxy solver; non-convergence is returned as a flagged solution.
fn solve_proxy(
    instance: &InstanceSpec,
    mode: ModeArg,
    d: f64,
    eps: f64,
    opts: &SolverOptions,
) -> Result<ProxySolution, ProxyError> {
    let out = match mode {
        ModeArg::Guaranteed => solve_r_guaranteed(instance, d, opts),
        ModeArg::CondExcess => solve_r_cond_excess(instance, d, &vec![eps; instance.m()], opts),
        ModeArg::Excess => solve_r_excess(instance, d, eps, opts),
        ModeArg::Expected => unreachable!("expected mode has its own solver"),
    };
    match out {
        Err(ProxyError::NotConverged(sol)) => Ok(*sol),
        other => other,
    }
}

fn kernel_cell(rows: &[Vec<f64>]) -> String {
    rows.iter()
        .map(|r| join_vec(r))
        .collect::<Vec<_>>()
        .join("|")
}

fn eps_cell(mode: ModeArg, eps: f64) -> Cell {
    match mode {
        ModeArg::CondExcess | ModeArg::Excess => Cell::Num(eps),
        _ => Cell::Empty,
    }
}

fn finish(table: Table, status: u8, warnings: Vec<String>) -> Outcome {
    Outcome {
        json: table.to_json(),
        table,
        status,
        warnings,
    }
}

fn compute(instance: &InstanceSpec, args: &RunArgs) -> Result<Outcome, CliError> {
    let d = single(required_d(args)?, "d")?;
    let eps = check_eps(single(&args.eps, "eps")?)?;
    let opts = options(args);
    let mut table = Table::new(&[
        "mode",
        "d",
        "eps",
        "value",
        "units",
        "iterations",
        "residual",
        "converged",
        "lambda",
        "threshold_rule_value",
        "threshold_rule_mismatch",
        "py",
        "alpha",
    ]);
    let mut warnings = Vec::new();
    let status;
    if args.mode == ModeArg::Expected {
        let s: ExpectedSolution = solve_r_expected(instance, d, &opts)?;
        status = if s.converged { 0 } else { EXIT_NOT_CONVERGED };
        table.push(vec![
            args.mode.name().into(),
            d.into(),
            Cell::Empty,
            in_units(s.value, args.units).into(),
            units_name(args.units).into(),
            s.iterations.into(),
            s.residual.into(),
            s.converged.into(),
            s.lambda_star.into(),
            Cell::Empty,
            Cell::Empty,
            join_vec(s.py.as_slice()).into(),
            Cell::Empty,
        ]);
    } else {
        let s = solve_proxy(instance, args.mode, d, eps, &opts)?;
        status = if s.converged { 0 } else { EXIT_NOT_CONVERGED };
        if let Some(rule) = s.threshold_rule.as_ref().filter(|r| r.mismatch) {
            warnings.push(format!(
                "threshold alpha-rule reaches {:.6} bits, above the optimum {:.6} bits",
                rule.value.bits(),
                s.value.bits()
            ));
        }
        let rule = s.threshold_rule.as_ref();
        table.push(vec![
            args.mode.name().into(),
            d.into(),
            eps_cell(args.mode, eps),
            in_units(s.value, args.units).into(),
            units_name(args.units).into(),
            s.iterations.into(),
            s.residual.into(),
            s.converged.into(),
            s.lambda.into(),
            rule.map(|r| in_units(r.value, args.units)).into(),
            rule.map(|r| r.mismatch).into(),
            join_vec(s.py.as_slice()).into(),
            join_vec(&s.alpha.alpha).into(),
        ]);
    }
    if status != 0 {
        warnings.push("solver did not converge within --max-iter".into());
    }
    Ok(finish(table, status, warnings))
}

fn exact_solution(
    instance: &InstanceSpec,
    mode: ModeArg,
    d: f64,
    eps: f64,
) -> Result<QuantizerSolution, CliError> {
    Ok(match mode {
        ModeArg::Guaranteed => exact_h_guaranteed(instance, d)?,
        ModeArg::CondExcess => exact_h_cond_excess(instance, d, eps)?,
        ModeArg::Excess => upper_h_excess(instance, d, eps)?,
        ModeArg::Expected => {
            return Err(CliError::Usage(
                "exact is not defined for --mode expected".into(),
            ))
        }
    })
}

fn exact(instance: &InstanceSpec, args: &RunArgs) -> Result<Outcome, CliError> {
    let d = single(required_d(args)?, "d")?;
    let eps = check_eps(single(&args.eps, "eps")?)?;
    let s = exact_solution(instance, args.mode, d, eps)?;
    let mut table = Table::new(&[
        "mode", "d", "eps", "value", "units", "exact", "py", "kernel",
    ]);
    table.push(vec![
        args.mode.name().into(),
        d.into(),
        eps_cell(args.mode, eps),
        in_units(s.value, args.units).into(),
        units_name(args.units).into(),
        s.exact.into(),
        join_vec(&s.py).into(),
        kernel_cell(s.kernel.rows()).into(),
    ]);
    Ok(finish(table, 0, Vec::new()))
}

struct SweepRow {
    d: f64,
    eps: Option<f64>,
    r: f64,
    h: Option<f64>,
    lower_ok: Option<bool>,
    upper_ok: Option<bool>,
    residual: Option<f64>,
    iterations: Option<usize>,
    converged: bool,
    note: Option<String>,
}

fn sweep_point(instance: &InstanceSpec, args: &RunArgs, d: f64, eps: Option<f64>) -> SweepRow {
    let opts = options(args);
    let mut row = SweepRow {
        d,
        eps,
        r: f64::INFINITY,
        h: None,
        lower_ok: None,
        upper_ok: None,
        residual: None,
        iterations: None,
        converged: true,
        note: None,
    };
    if args.mode == ModeArg::Expected {
        match solve_r_expected(instance, d, &opts) {
            Ok(s) => {
                row.r = in_units(s.value, args.units);
                row.residual = Some(s.residual);
                row.iterations = Some(s.iterations);
                row.converged = s.converged;
            }
            Err(e) => row.note = Some(format!("d = {d}: {e}")),
        }
        return row;
    }
    let e = eps.unwrap_or(0.0);
    let sol = match solve_proxy(instance, args.mode, d, e, &opts) {
        Ok(s) => s,
        Err(ProxyError::Infeasible(_)) => {
            row.h = Some(f64::INFINITY);
            return row;
        }
        Err(err) => {
            row.r = f64::NAN;
            row.note = Some(format!("d = {d}, eps = {e}: {err}"));
            return row;
        }
    };
    row.r = in_units(sol.value, args.units);
    row.residual = Some(sol.residual);
    row.iterations = Some(sol.iterations);
    row.converged = sol.converged;
    let sandwich_mode = match args.mode {
        ModeArg::Guaranteed => SandwichMode::Guaranteed,
        _ => SandwichMode::ExcessFamily,
    };
    match exact_solution(instance, args.mode, d, e) {
        Ok(q) => {
            let v = sandwich_check(q.value, sol.value, sandwich_mode, q.exact);
            row.h = Some(in_units(q.value, args.units));
            row.lower_ok = v.lower_ok;
            row.upper_ok = Some(v.upper_ok);
        }
        Err(err) => {
            row.note = Some(format!(
                "d = {d}, eps = {e}: quantizer search skipped: {err}"
            ))
        }
    }
    row
}

fn sweep(instance: &InstanceSpec, args: &RunArgs) -> Result<Outcome, CliError> {
    let ds = parse_grid(required_d(args)?)?;
    let points: Vec<(f64, Option<f64>)> = match args.mode {
        ModeArg::Guaranteed | ModeArg::Expected => ds.iter().map(|&d| (d, None)).collect(),
        _ => {
            let eps = parse_grid(&args.eps)?;
            for &e in &eps {
                check_eps(e)?;
            }
            ds.iter()
                .flat_map(|&d| eps.iter().map(move |&e| (d, Some(e))))
                .collect()
        }
    };
    let rows: Vec<SweepRow> = points
        .par_iter()
        .map(|&(d, e)| sweep_point(instance, args, d, e))
        .collect();
    let mut table = Table::new(&[
        "d",
        "eps",
        "R",
        "H_or_bound",
        "sandwich_lower_ok",
        "sandwich_upper_ok",
        "residual",
        "iterations",
    ]);
    let mut warnings = Vec::new();
    let mut status = 0;
    for r in rows {
        if !r.converged {
            status = EXIT_NOT_CONVERGED;
            warnings.push(format!("not converged at d = {}, eps = {:?}", r.d, r.eps));
        }
        warnings.extend(r.note);
        table.push(vec![
            r.d.into(),
            r.eps.into(),
            r.r.into(),
            r.h.into(),
            r.lower_ok.into(),
            r.upper_ok.into(),
            r.residual.into(),
            r.iterations.into(),
        ]);
    }
    Ok(finish(table, status, warnings))
}

fn simulate_cmd(instance: &InstanceSpec, args: &RunArgs) -> Result<Outcome, CliError> {
    let d = single(required_d(args)?, "d")?;
    let eps = check_eps(single(&args.eps, "eps")?)?;
    if args.mode == ModeArg::Expected {
        return Err(CliError::Usage(
            "simulate is not defined for --mode expected".into(),
        ));
    }
    if args.trials == 0 || args.codebook_len == 0 {
        return Err(CliError::Usage(
            "--trials and --codebook-len must be positive".into(),
        ));
    }
    let sol = solve_proxy(instance, args.mode, d, eps, &options(args))?;
    let alpha = match args.mode {
        ModeArg::Guaranteed => AlphaProfile::ones(instance.m()),
        _ => sol.alpha.clone(),
    };
    let report = simulate(
        instance,
        d,
        &sol.py,
        &alpha,
        args.trials,
        args.codebook_len,
        args.seed,
    )?;
    let mut warnings = Vec::new();
    let mut status = 0;
    if !sol.converged {
        status = EXIT_NOT_CONVERGED;
        warnings.push("proxy solver did not converge; simulating at the last iterate".into());
    }
    if report.insufficient_length {
        warnings.push(format!(
            "codebook length {} exhausted in {:.3e} of trials",
            args.codebook_len, report.exhaustion_rate
        ));
    }

    let mut table = Table::new(&["quantity", "value"]);
    let mut put = |k: String, v: Cell| table.push(vec![k.into(), v]);
    put("mode".into(), args.mode.name().into());
    put("d".into(), d.into());
    put("eps".into(), eps_cell(args.mode, eps));
    put("proxy_value_bits".into(), sol.value.bits().into());
    put("trials".into(), report.trials.into());
    put("seed".into(), report.seed.into());
    put("codebook_len".into(), report.codebook_len.into());
    put("generator".into(), report.generator.clone().into());
    put(
        "mean_code_length".into(),
        report.mean_code_length.mean.into(),
    );
    put(
        "mean_code_length_se".into(),
        report.mean_code_length.se.into(),
    );
    put(
        "mean_gamma_length".into(),
        report.mean_gamma_length.mean.into(),
    );
    put(
        "mean_gamma_length_se".into(),
        report.mean_gamma_length.se.into(),
    );
    put(
        "empirical_entropy_w".into(),
        report.empirical_entropy_w.into(),
    );
    put(
        "empirical_excess_rate".into(),
        report.empirical_excess_rate.mean.into(),
    );
    put(
        "empirical_excess_rate_se".into(),
        report.empirical_excess_rate.se.into(),
    );
    for letter in &report.per_letter_excess {
        put(
            format!("excess_rate_x{}", letter.x),
            letter.rate.mean.into(),
        );
        put(
            format!("excess_allowed_x{}", letter.x),
            letter.allowed.into(),
        );
    }
    put("elub_rhs".into(), report.elub_rhs.into());
    put("elubcc_rhs".into(), report.elubcc_rhs.into());
    put("entropy_chain_rhs".into(), report.entropy_chain_rhs.into());
    put("exhausted_trials".into(), report.exhausted_trials.into());
    put("exhaustion_rate".into(), report.exhaustion_rate.into());
    put(
        "insufficient_length".into(),
        report.insufficient_length.into(),
    );

    let json = json!({
        "mode": args.mode.name(),
        "d": d,
        "eps": if matches!(args.mode, ModeArg::Guaranteed) { Value::Null } else { json!(eps) },
        "proxy_value_bits": sol.value.bits(),
        "report": report,
    });
    Ok(Outcome {
        json,
        table,
        status,
        warnings,
    })
}

/// Smallest `-ln P_Y(B_d(x)) - Lambda_Y(x, lambda)` over letters and a
/// 50-point grid of `lambda` in `[0, 10]`; nonnegative by Markov's inequality.
fn markov_margin(instance: &InstanceSpec, d: f64, py: &[f64]) -> f64 {
    let masses = ball_table(instance, d).ball_masses(py);
    let mut worst = f64::INFINITY;
    for (x, &b) in masses.iter().enumerate() {
        for k in 0..50 {
            let lambda = 10.0 * k as f64 / 49.0;
            let tilt = tilted_information(py, &instance.dist()[x], lambda, d);
            worst = worst.min(-b.ln() - tilt);
        }
    }
    worst
}

struct Verdicts {
    table: Table,
    failures: usize,
}

impl Verdicts {
    fn new() -> Self {
        Self {
            table: Table::new(&["check", "d", "eps", "value", "bound", "verdict"]),
            failures: 0,
        }
    }

    fn record(
        &mut self,
        check: &str,
        d: Option<f64>,
        eps: Option<f64>,
        value: f64,
        bound: f64,
        ok: bool,
    ) {
        if !ok {
            self.failures += 1;
        }
        self.push(
            check,
            d,
            eps,
            Cell::Num(value),
            Cell::Num(bound),
            if ok { "pass" } else { "fail" },
        );
    }

    fn skip(&mut self, check: &str, d: Option<f64>, eps: Option<f64>) {
        self.push(check, d, eps, Cell::Empty, Cell::Empty, "skip");
    }

    fn push(
        &mut self,
        check: &str,
        d: Option<f64>,
        eps: Option<f64>,
        value: Cell,
        bound: Cell,
        verdict: &str,
    ) {
        self.table.push(vec![
            check.into(),
            d.into(),
            eps.into(),
            value,
            bound,
            verdict.into(),
        ]);
    }
}

/// Guaranteed-mode checks at one distortion level.
fn verify_guaranteed(
    instance: &InstanceSpec,
    d: f64,
    opts: &SolverOptions,
    v: &mut Verdicts,
) -> Option<ProxySolution> {
    let ball = ball_table(instance, d);
    let limit = 10.0 * opts.tol;
    let g = match solve_r_guaranteed(instance, d, opts) {
        Ok(s) => s,
        Err(ProxyError::NotConverged(s)) => *s,
        Err(_) => {
            v.record("guaranteed/feasible", Some(d), None, 0.0, 0.0, false);
            return None;
        }
    };
    let residual = verify_optimality(&g, instance.px(), &ball);
    v.record(
        "guaranteed/residual",
        Some(d),
        None,
        residual,
        limit,
        g.converged && residual <= limit,
    );
    match exact_h_guaranteed(instance, d) {
        Ok(h) => {
            let s = sandwich_check(h.value, g.value, SandwichMode::Guaranteed, true);
            v.record(
                "guaranteed/sandwich-lower",
                Some(d),
                None,
                s.lower_slack,
                0.0,
                s.lower_ok == Some(true),
            );
            v.record(
                "guaranteed/sandwich-upper",
                Some(d),
                None,
                s.upper_slack,
                0.0,
                s.upper_ok,
            );
        }
        Err(_) => v.skip("guaranteed/sandwich", Some(d), None),
    }
    if instance.n() <= ORACLE_MAX_N {
        let grid = oracle_grid_min(instance, d, &Criterion::Guaranteed, ORACLE_STEP)
            .expect("oracle on small alphabet")
            .bits();
        let gap = grid - g.value.bits();
        v.record(
            "guaranteed/oracle-gap",
            Some(d),
            None,
            gap,
            ORACLE_GAP,
            (-1e-9..=ORACLE_GAP).contains(&gap),
        );
    } else {
        v.skip("guaranteed/oracle-gap", Some(d), None);
    }
    let margin = markov_margin(instance, d, g.py.as_slice());
    v.record(
        "guaranteed/markov",
        Some(d),
        None,
        margin,
        0.0,
        margin >= -1e-12,
    );
    Some(g)
}

const ORACLE_STEP: f64 = 0.005;
const ORACLE_GAP: f64 = 0.01;

fn verify(instance: &InstanceSpec, args: &RunArgs) -> Result<Outcome, CliError> {
    let opts = options(args);
    let limit = 10.0 * opts.tol;
    let d_min = instance.min_covering_distortion();
    let ds = match &args.d {
        Some(spec) => parse_grid(spec)?,
        None => instance
            .distortion_levels()
            .into_iter()
            .filter(|&d| d >= d_min)
            .collect(),
    };
    if let Some(&bad) = ds.iter().find(|&&d| d < d_min) {
        return Err(CliError::Infeasible(format!(
            "d = {bad} leaves some source letter with an empty ball (needs d >= {d_min})"
        )));
    }
    let eps_grid = parse_grid(&args.eps)?;
    for &e in &eps_grid {
        check_eps(e)?;
    }

    let mut v = Verdicts::new();
    let lossless = lossless_sandwich_check(instance.px()).expect("validated source");
    v.record(
        "lossless/sandwich",
        None,
        None,
        lossless
            .one_to_one_lower_slack
            .min(lossless.one_to_one_upper_slack)
            .min(lossless.prefix_lower_slack)
            .min(lossless.prefix_upper_slack),
        0.0,
        lossless.passed,
    );

    for &d in &ds {
        let ball = ball_table(instance, d);
        let Some(g) = verify_guaranteed(instance, d, &opts, &mut v) else {
            continue;
        };

        match solve_r_cond_excess(instance, d, &vec![0.0; instance.m()], &opts) {
            Ok(c0) => {
                let diff = (c0.value.bits() - g.value.bits()).abs();
                v.record(
                    "cond-excess/zero-budget",
                    Some(d),
                    Some(0.0),
                    diff,
                    1e-6,
                    diff <= 1e-6,
                );
            }
            Err(_) => v.record(
                "cond-excess/zero-budget",
                Some(d),
                Some(0.0),
                f64::NAN,
                1e-6,
                false,
            ),
        }

        for &eps in &eps_grid {
            let e = Some(eps);
            let c = solve_proxy(instance, ModeArg::CondExcess, d, eps, &opts)?;
            let residual = verify_optimality(&c, instance.px(), &ball);
            v.record(
                "cond-excess/residual",
                Some(d),
                e,
                residual,
                limit,
                c.converged && residual <= limit,
            );
            match exact_h_cond_excess(instance, d, eps) {
                Ok(h) => {
                    let s = sandwich_check(h.value, c.value, SandwichMode::ExcessFamily, true);
                    v.record(
                        "cond-excess/sandwich-lower",
                        Some(d),
                        e,
                        s.lower_slack,
                        0.0,
                        s.lower_ok == Some(true),
                    );
                    v.record(
                        "cond-excess/sandwich-upper",
                        Some(d),
                        e,
                        s.upper_slack,
                        0.0,
                        s.upper_ok,
                    );
                }
                Err(ExactError::SearchTooLarge { .. }) => {
                    v.skip("cond-excess/sandwich", Some(d), e)
                }
                Err(err) => return Err(err.into()),
            }

            let x = solve_proxy(instance, ModeArg::Excess, d, eps, &opts)?;
            let residual = verify_optimality(&x, instance.px(), &ball);
            v.record(
                "excess/residual",
                Some(d),
                e,
                residual,
                limit,
                x.converged && residual <= limit,
            );
            let order = (x.value.bits() - c.value.bits()).max(c.value.bits() - g.value.bits());
            v.record("excess/ordering", Some(d), e, order, 1e-9, order <= 1e-9);
            match upper_h_excess(instance, d, eps) {
                Ok(h) => {
                    let s = sandwich_check(h.value, x.value, SandwichMode::ExcessFamily, false);
                    v.record(
                        "excess/sandwich-upper",
                        Some(d),
                        e,
                        s.upper_slack,
                        0.0,
                        s.upper_ok,
                    );
                }
                Err(ExactError::SearchTooLarge { .. }) => {
                    v.skip("excess/sandwich-upper", Some(d), e)
                }
                Err(err) => return Err(err.into()),
            }
        }

        match solve_r_expected(instance, d, &opts) {
            Ok(s) => {
                v.record(
                    "expected/residual",
                    Some(d),
                    None,
                    s.residual,
                    1e-4,
                    s.converged && s.residual <= 1e-4,
                );
                let gap = s.value.bits() - g.value.bits();
                v.record(
                    "expected/below-guaranteed",
                    Some(d),
                    None,
                    gap,
                    1e-9,
                    gap <= 1e-9,
                );
            }
            Err(ProxyError::DminViolation { .. }) => v.skip("expected/residual", Some(d), None),
            Err(err) => return Err(err.into()),
        }
    }

    let status = if v.failures > 0 { EXIT_VERIFY } else { 0 };
    let warnings = if v.failures > 0 {
        vec![format!("{} check(s) failed", v.failures)]
    } else {
        Vec::new()
    };
    Ok(finish(v.table, status, warnings))
}
