//! Acceptance criteria 1-9. Prints one PASS/FAIL line per criterion and
//! exits non-zero when any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use scorch::data::{gen_deconvolution, gen_group_lasso, gen_logistic, parse_libsvm, write_libsvm, GroundTruth};
use scorch::run::{build_problem, Family, RegSpec};
use scorch_core::kernels::SmoothingKernel;
use scorch_core::linalg::norm_inf;
use scorch_core::prox::{prox_group_l2_scaled, prox_l1_scaled, prox_oracle, prox_sparse_group};
use scorch_core::search::SplitMix64;
use scorch_core::solvers::{ggn_direction_dual, ggn_direction_full, validate_step_lengths};
use scorch_core::{
    build_augmented_jacobian, infconv_oracle, least_squares_problem, logistic_problem, smooth_l1, solve, Algorithm,
    CompositeProblem, DiagonalMetric, GroupStructure, Matrix, PenaltySpec, ProxScaling, SeparableKernel,
    SolverConfig, Status, TraceRecord,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Traces of every SCORE run, checked by criterion 8.
type Traces = Vec<(String, f64, Vec<TraceRecord>)>;

fn within(elapsed: Duration, secs: u64) -> (bool, String) {
    let ok = elapsed <= Duration::from_secs(secs);
    (ok, format!("{:.2}s (limit {secs}s)", elapsed.as_secs_f64()))
}

fn smoother_correctness() -> Outcome {
    let start = Instant::now();
    let h = SeparableKernel::new(SmoothingKernel::hyperbolic(), 1);
    let abs = |w: &[f64]| w[0].abs();
    let (mut worst_v, mut worst_g, mut worst_h) = (0.0f64, 0.0f64, 0.0f64);
    for mu in [0.2, 0.5, 1.0] {
        let s = smooth_l1(mu, 1, 1.0).unwrap();
        for i in 0..200 {
            let x = -3.0 + 6.0 * i as f64 / 199.0;
            let oracle = infconv_oracle(abs, &h, mu, &[x], (-6.0, 6.0), 4001);
            worst_v = worst_v.max((s.value(&[x]) - oracle).abs());
            let e = 1e-5;
            let fd = (s.value(&[x + e]) - s.value(&[x - e])) / (2.0 * e);
            worst_g = worst_g.max((s.gradient(&[x])[0] - fd).abs());
            let fd2 = (s.gradient(&[x + e])[0] - s.gradient(&[x - e])[0]) / (2.0 * e);
            worst_h = worst_h.max((s.hessian_diag(&[x])[0] - fd2).abs());
        }
    }
    let (fast, t) = within(start.elapsed(), 5);
    outcome(
        worst_v <= 1e-6 && worst_g <= 1e-5 && worst_h <= 1e-4 && fast,
        format!("max |g_s - oracle| {worst_v:.2e}, grad err {worst_g:.2e}, hess err {worst_h:.2e}, {t}"),
    )
}

fn prox_correctness() -> Outcome {
    let start = Instant::now();
    let mut r = SplitMix64::new(20240917);
    let mut worst = [0.0f64; 3];
    for k in 0..1000 {
        let n = 1 + (r.next_u64() % 4) as usize;
        let x: Vec<f64> = (0..n).map(|_| r.uniform(-4.0, 4.0)).collect();
        let m = DiagonalMetric::new((0..n).map(|_| r.uniform(0.1, 10.0)).collect()).unwrap();
        let alpha = r.uniform(0.1, 1.0);
        let beta = r.uniform(0.0, 2.0);
        let beta_g = r.uniform(0.0, 2.0);
        let cut = (r.next_u64() % (n as u64 + 1)) as usize;
        let groups: Vec<Vec<usize>> = [(0..cut).collect::<Vec<_>>(), (cut..n).collect()]
            .into_iter()
            .filter(|g| !g.is_empty())
            .collect();
        let gs = GroupStructure::with_sqrt_sizes(n, groups).unwrap();
        let (p, spec) = match k % 3 {
            0 => {
                let spec = PenaltySpec::l1(beta).unwrap();
                (prox_l1_scaled(&x, beta, &m, alpha, ProxScaling::Exact).unwrap(), spec)
            }
            1 => {
                let spec = PenaltySpec::group_l2(gs, beta_g).unwrap();
                (prox_group_l2_scaled(&x, &spec, &m, alpha, ProxScaling::Exact).unwrap(), spec)
            }
            _ => {
                let spec = PenaltySpec::sparse_group(gs, beta, beta_g).unwrap();
                (prox_sparse_group(&x, &spec, &m, alpha, ProxScaling::Exact).unwrap(), spec)
            }
        };
        let o = prox_oracle(&x, |w| spec.value(w), &m, alpha);
        let err = p.iter().zip(&o).fold(0.0f64, |a, (u, v)| a.max((u - v).abs()));
        worst[k % 3] = worst[k % 3].max(err);
    }
    let (fast, t) = within(start.elapsed(), 30);
    outcome(
        worst.iter().all(|w| *w <= 1e-6) && fast,
        format!(
            "max err l1 {:.2e}, group {:.2e}, sparse-group {:.2e} over 1000 instances, {t}",
            worst[0], worst[1], worst[2]
        ),
    )
}

fn random_problem(r: &mut SplitMix64, m: usize, n: usize, logistic: bool) -> CompositeProblem {
    let a = Matrix::from_fn(m, n, |_, _| r.normal());
    if logistic {
        let y = (0..m).map(|_| if r.next_f64() < 0.5 { -1.0 } else { 1.0 }).collect();
        logistic_problem(a, y, r.uniform(0.05, 1.0), r.uniform(0.1, 2.0)).unwrap()
    } else {
        let y = (0..m).map(|_| r.normal()).collect();
        let pen = PenaltySpec::l1(r.uniform(0.05, 1.0)).unwrap();
        least_squares_problem(a, y, pen, r.uniform(0.1, 2.0)).unwrap()
    }
}

fn ggn_branches() -> Outcome {
    let start = Instant::now();
    let mut r = SplitMix64::new(7);
    let mut worst = 0.0f64;
    let (mut wide, mut tall) = (0, 0);
    for k in 0..200 {
        let m = 2 + (r.next_u64() % 9) as usize;
        let n = 2 + (r.next_u64() % 11) as usize;
        let p = random_problem(&mut r, m, n, k % 2 == 0);
        let x: Vec<f64> = (0..n).map(|_| r.normal()).collect();
        let h = p.smoother().hessian_diag(&x);
        let aj = build_augmented_jacobian(p.loss().residual_model().unwrap(), p.smoother(), &x);
        if aj.j.rows() <= n {
            wide += 1;
        } else {
            tall += 1;
        }
        let full = ggn_direction_full(&aj, &h).unwrap();
        let dual = ggn_direction_dual(&aj, &h).unwrap();
        let diff = full.iter().zip(&dual).fold(0.0f64, |a, (u, v)| a.max((u - v).abs()));
        worst = worst.max(diff / norm_inf(&full).max(1.0));
    }
    let (fast, t) = within(start.elapsed(), 10);
    outcome(
        worst <= 1e-8 && fast,
        format!("max |d_full - d_dual| / max(1, |d|) {worst:.2e} ({wide} with rows(J) <= n, {tall} otherwise), {t}"),
    )
}

fn logistic_instance(seed: u64) -> (CompositeProblem, GroundTruth) {
    let (d, t) = gen_logistic(200, 50, seed, 0.1).unwrap();
    let reg = RegSpec {
        beta: Some(0.2),
        mu: Some(1.0),
        ..RegSpec::default()
    };
    let inst = build_problem(Family::Logistic, d, Some(t), &reg).unwrap();
    (inst.problem, inst.truth.unwrap())
}

fn descent(traces: &mut Traces) -> Outcome {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut max_iters = 0;
    let mut worst_rise = f64::NEG_INFINITY;
    for seed in 0..20 {
        let (p, _) = logistic_instance(seed);
        for alg in [Algorithm::ProxNScore, Algorithm::ProxGgnScore] {
            let mut c = SolverConfig::new(alg);
            c.alpha = 1.0;
            c.max_iters = 200;
            c.tol = 1e-6;
            match solve(&p, &c) {
                Ok(s) => {
                    for w in s.trace.windows(2) {
                        let rise = w[1].objective - w[0].objective;
                        worst_rise = worst_rise.max(rise);
                        if rise > 1e-10 {
                            failures.push(format!("seed {seed} {alg}: objective rose by {rise:.2e} at k={}", w[1].k));
                            break;
                        }
                    }
                    if s.status != Status::Converged {
                        failures.push(format!("seed {seed} {alg}: no convergence in 200 iterations"));
                    }
                    max_iters = max_iters.max(s.iterations());
                    traces.push((format!("descent seed {seed} {alg}"), c.alpha, s.trace));
                }
                Err(e) => failures.push(format!("seed {seed} {alg}: {e}")),
            }
        }
    }
    let (fast, t) = within(start.elapsed(), 60);
    let detail = format!(
        "40 runs, largest objective change {worst_rise:.2e}, most iterations {max_iters}, {t}{}",
        failures.first().map(|f| format!("; first failure: {f}")).unwrap_or_default()
    );
    outcome(failures.is_empty() && fast, detail)
}

fn support_recovery(traces: &mut Traces) -> Outcome {
    let start = Instant::now();
    let (d, t) = gen_group_lasso(200, 800, 40, 1).unwrap();
    let inst = build_problem(Family::GroupLasso, d, Some(t), &RegSpec::default()).unwrap();
    let truth = inst.truth.as_ref().unwrap();
    let c = SolverConfig::new(Algorithm::ProxGgnScore);
    let s = match solve(&inst.problem, &c) {
        Ok(s) => s,
        Err(e) => return outcome(false, format!("solver error: {e}")),
    };
    let nnz = s.trace.last().unwrap().nnz;
    let mse = truth.mse(&s.x);
    traces.push(("group lasso prox-ggn-score".into(), c.alpha, s.trace.clone()));
    let (fast, t) = within(start.elapsed(), 120);
    outcome(
        nnz == truth.nnz && mse < 1e-4 && fast,
        format!(
            "nnz {nnz} vs true {}, mse {mse:.3e} (limit 1e-4), {} after {} iterations, beta {:.3e}, beta_G {:.3e}, {t}",
            truth.nnz,
            s.status.name(),
            s.iterations(),
            inst.reg.beta,
            inst.reg.beta_g.unwrap_or(0.0)
        ),
    )
}

fn solver_agreement(traces: &mut Traces) -> Outcome {
    let start = Instant::now();
    let (p, _) = logistic_instance(100);
    let mut xs = Vec::new();
    let mut iters = Vec::new();
    for alg in Algorithm::ALL {
        let mut c = SolverConfig::new(alg);
        c.tol = 1e-9;
        c.max_iters = 100_000;
        match solve(&p, &c) {
            Ok(s) => {
                iters.push(s.iterations());
                xs.push(s.x.clone());
                if alg.is_score() {
                    traces.push((format!("agreement {alg}"), c.alpha, s.trace));
                }
            }
            Err(e) => return outcome(false, format!("{alg}: {e}")),
        }
    }
    let mut spread = 0.0f64;
    for a in &xs {
        for b in &xs {
            spread = spread.max(a.iter().zip(b).fold(0.0f64, |m, (u, v)| m.max((u - v).abs())));
        }
    }
    let newton = iters[0].max(1);
    let ratio = iters[2].min(iters[3]) as f64 / newton as f64;
    let (fast, t) = within(start.elapsed(), 120);
    outcome(
        spread <= 1e-4 && ratio >= 5.0 && fast,
        format!(
            "max pairwise |x_a - x_b| {spread:.2e}, iterations n/ggn/grad/fast = {}/{}/{}/{}, baseline/newton ratio {ratio:.1}, {t}",
            iters[0], iters[1], iters[2], iters[3]
        ),
    )
}

fn deconvolution(traces: &mut Traces) -> Outcome {
    let start = Instant::now();
    let (d, t) = gen_deconvolution(1024, 1).unwrap();
    let reg = RegSpec {
        beta: Some(1e-3),
        mu: Some(5e-2),
        ..RegSpec::default()
    };
    let inst = build_problem(Family::Deconv, d, Some(t), &reg).unwrap();
    let truth = inst.truth.as_ref().unwrap();
    let mut mse = Vec::new();
    for alg in [Algorithm::ProxNScore, Algorithm::ProxGgnScore, Algorithm::ProxGrad] {
        let mut c = SolverConfig::new(alg);
        c.tol = 1e-6;
        c.max_iters = 10_000;
        match solve(&inst.problem, &c) {
            Ok(s) => {
                mse.push((alg, truth.mse(&s.x), s.status, s.iterations()));
                if alg.is_score() {
                    traces.push((format!("deconvolution {alg}"), c.alpha, s.trace));
                }
            }
            Err(e) => return outcome(false, format!("{alg}: {e}")),
        }
    }
    let baseline = mse[2].1;
    let (fast, t) = within(start.elapsed(), 120);
    let rows: Vec<String> = mse
        .iter()
        .map(|(a, m, s, k)| format!("{a} {m:.3e} ({} at {k})", s.name()))
        .collect();
    outcome(
        mse[0].1 <= baseline && mse[1].1 <= baseline && fast,
        format!("mse: {}, {t}", rows.join(", ")),
    )
}

fn step_lengths(traces: &Traces) -> Outcome {
    let mut records = 0;
    let mut zero_eta = 0;
    for (name, alpha, trace) in traces {
        if let Err(e) = validate_step_lengths(trace, *alpha) {
            return outcome(false, format!("{name}: {e}"));
        }
        records += trace.iter().filter(|r| r.alpha_bar.is_some()).count();
        zero_eta += trace.iter().filter(|r| r.eta == Some(0.0)).count();
    }
    outcome(
        records > 0,
        format!(
            "{records} steps from {} SCORE runs in (0, alpha], {zero_eta} with eta = 0 and alpha_bar = alpha",
            traces.len()
        ),
    )
}

fn parser() -> Outcome {
    let start = Instant::now();
    let (d, _) = gen_logistic(60, 30, 9, 0.2).unwrap();
    let sparse = d.to_libsvm();
    let mut buf = Vec::new();
    write_libsvm(&mut buf, &sparse).unwrap();
    let back = parse_libsvm(buf.as_slice(), Some(30)).unwrap();
    let round_trip = back == sparse;
    let malformed: [(&str, usize); 5] = [
        ("1 1:0.5\nabc 2:1\n", 2),
        ("1 1:0.5\n-1 2:1\n1 3 4:1\n", 3),
        ("1 0:2\n", 1),
        ("1 1:1\n1 1:2 4:1 3:1\n", 2),
        ("1 1:1\n1 2:1\n\n-1 5:x\n", 4),
    ];
    let mut wrong = Vec::new();
    for (text, line) in malformed {
        match parse_libsvm(text.as_bytes(), None) {
            Err(e) if e.line() == Some(line) && e.to_string().starts_with(&format!("line {line}:")) => {}
            other => wrong.push(format!("{text:?} -> {:?}", other.map(|d| d.rows.len()))),
        }
    }
    let (fast, t) = within(start.elapsed(), 1);
    outcome(
        round_trip && wrong.is_empty() && fast,
        format!(
            "round trip {}, {} of 5 malformed inputs rejected at the right line, {t}",
            if round_trip { "exact" } else { "differs" },
            5 - wrong.len()
        ),
    )
}

fn main() -> ExitCode {
    let mut traces: Traces = Vec::new();
    let results = [
        (1, "smoother correctness", smoother_correctness()),
        (2, "prox correctness", prox_correctness()),
        (3, "GGN branch equivalence", ggn_branches()),
        (4, "descent on logistic problems", descent(&mut traces)),
        (5, "group-lasso support recovery", support_recovery(&mut traces)),
        (6, "solver agreement", solver_agreement(&mut traces)),
        (7, "deconvolution quality", deconvolution(&mut traces)),
    ];
    let c8 = (8, "step-length rule", step_lengths(&traces));
    let c9 = (9, "LIBSVM parser robustness", parser());
    let mut failed = 0;
    for (k, name, o) in results.iter().chain([&c8, &c9]) {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        if !o.pass {
            failed += 1;
        }
        println!("criterion {k} [{tag}] {name}: {}", o.detail);
    }
    println!("{} of 9 criteria passed", 9 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
