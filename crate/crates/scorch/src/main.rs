use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use scorch::data::{gen_deconvolution_with, gen_group_lasso_with, gen_logistic_with, write_libsvm};
use scorch::report::{
    write_atomic, write_json, write_solution_csv, write_summary_csv, write_svg, write_trace_csv, SummaryDoc,
};
use scorch::run::{
    build_instance, run_algorithm, run_bench, thread_budget, DataSource, Family, GenParams, RegSpec, RunSpec,
    SolverSpec,
};
use scorch_core::{Algorithm, Status};

#[derive(Parser)]
#[command(name = "scorch", version, about = "Self-concordant smoothing solvers for composite problems")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one algorithm and write trace.csv, summary.json and solution.csv.
    Solve(SolveArgs),
    /// Run several algorithms on the same data and write a comparison table.
    Bench(BenchArgs),
    /// Write a synthetic dataset and its ground truth.
    Gen(GenArgs),
}

#[derive(Args)]
struct ProblemArgs {
    /// Problem family: logistic, group-lasso or deconv.
    #[arg(long)]
    family: Family,
    /// Generator parameters, e.g. `m=200,n=50,seed=7`.
    #[arg(long, conflicts_with = "data")]
    gen: Option<GenParams>,
    /// LIBSVM file.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Number of features in --data (default: largest index).
    #[arg(long, requires = "data")]
    n_features: Option<usize>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    beta_g: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    /// Number of contiguous groups (group-lasso).
    #[arg(long)]
    ng: Option<usize>,
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 1000)]
    max_iters: usize,
    /// Use `α = min(1/L, 1)`.
    #[arg(long)]
    alpha_from_lipschitz: bool,
    /// Multiply prox thresholds by the metric instead of dividing.
    #[arg(long)]
    prox_dhat_literal: bool,
    /// Record ω_ν per iteration.
    #[arg(long)]
    diagnostics: bool,
    /// Output directory.
    #[arg(long, default_value = "scorch-out")]
    out: PathBuf,
    /// Also write an objective plot (plot.svg).
    #[arg(long)]
    svg: bool,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long, default_value = "prox-n-score")]
    alg: String,
    #[command(flatten)]
    solver: SolverArgs,
    /// Skip solution.csv.
    #[arg(long)]
    no_solution: bool,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Comma-separated algorithms.
    #[arg(long, value_delimiter = ',', default_value = "prox-n-score,prox-ggn-score,prox-grad,fast-prox-grad")]
    algs: Vec<String>,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Libsvm,
    Csv,
    Both,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    family: Family,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    ng: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    sparsity: Option<f64>,
    #[arg(long)]
    flip: Option<f64>,
    #[arg(long)]
    active: Option<f64>,
    #[arg(long)]
    spikes: Option<usize>,
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long, value_enum, default_value = "libsvm")]
    format: Format,
    #[arg(long, default_value = "scorch-data")]
    out: PathBuf,
}

fn run_spec(p: &ProblemArgs, s: &SolverArgs) -> anyhow::Result<RunSpec> {
    let source = match (&p.gen, &p.data) {
        (Some(g), None) => DataSource::Generate(g.clone()),
        (None, Some(path)) => DataSource::File {
            path: path.clone(),
            n_features: p.n_features,
        },
        (None, None) => bail!("give a dataset with --gen or --data"),
        (Some(_), Some(_)) => bail!("--gen and --data are mutually exclusive"),
    };
    Ok(RunSpec {
        family: p.family,
        source,
        reg: RegSpec {
            beta: p.beta,
            beta_g: p.beta_g,
            mu: p.mu,
            gamma: p.gamma,
            ng: p.ng,
        },
        solver: SolverSpec {
            alpha: s.alpha,
            tol: s.tol,
            max_iters: s.max_iters,
            prox_dhat_literal: s.prox_dhat_literal,
            alpha_from_lipschitz: s.alpha_from_lipschitz,
            diagnostics: s.diagnostics,
        },
    })
}

fn cmd_solve(args: &SolveArgs) -> anyhow::Result<ExitCode> {
    let alg = Algorithm::parse(&args.alg)?;
    let spec = run_spec(&args.problem, &args.solver)?;
    let config = spec.solver.config(alg);
    config.validate(0)?;
    let inst = build_instance(&spec)?;
    let out = run_algorithm(&inst, &config);
    let dir = &args.solver.out;
    write_atomic(&dir.join("trace.csv"), |w| Ok(write_trace_csv(w, out.trace())?))?;
    let doc = SummaryDoc {
        spec: &spec,
        regularization: inst.reg,
        dataset: &inst.meta,
        summary: std::slice::from_ref(&out.summary),
    };
    write_atomic(&dir.join("summary.json"), |w| Ok(write_json(w, &doc)?))?;
    if args.solver.svg {
        write_atomic(&dir.join("plot.svg"), |w| Ok(write_svg(w, &[(alg.name(), out.trace())])?))?;
    }
    let sol = out.result?;
    if !args.no_solution {
        write_atomic(&dir.join("solution.csv"), |w| Ok(write_solution_csv(w, &sol.x)?))?;
    }
    let s = &out.summary;
    println!(
        "{}: {} after {} iterations, objective {:.10e}, nnz {}{}",
        s.algorithm,
        s.status,
        s.iterations,
        s.final_objective.unwrap_or(f64::NAN),
        s.nnz.unwrap_or(0),
        s.mse.map(|m| format!(", mse {m:.3e}")).unwrap_or_default()
    );
    Ok(match sol.status {
        Status::Converged => ExitCode::SUCCESS,
        Status::MaxIterations => ExitCode::from(2),
    })
}

fn cmd_bench(args: &BenchArgs) -> anyhow::Result<ExitCode> {
    let algs = args
        .algs
        .iter()
        .map(|a| Algorithm::parse(a.trim()))
        .collect::<Result<Vec<_>, _>>()?;
    if algs.len() < 2 {
        bail!("a bench needs at least two algorithms");
    }
    let spec = run_spec(&args.problem, &args.solver)?;
    for &a in &algs {
        spec.solver.config(a).validate(0)?;
    }
    let inst = build_instance(&spec)?;
    let outcomes = run_bench(&inst, &algs, &spec.solver, thread_budget());
    let dir = &args.solver.out;
    let rows: Vec<_> = outcomes.iter().map(|o| o.summary.clone()).collect();
    for o in &outcomes {
        let name = format!("trace_{}.csv", o.algorithm.name());
        write_atomic(&dir.join(name), |w| Ok(write_trace_csv(w, o.trace())?))?;
    }
    write_atomic(&dir.join("bench.csv"), |w| Ok(write_summary_csv(w, &rows)?))?;
    let doc = SummaryDoc {
        spec: &spec,
        regularization: inst.reg,
        dataset: &inst.meta,
        summary: &rows,
    };
    write_atomic(&dir.join("summary.json"), |w| Ok(write_json(w, &doc)?))?;
    if args.solver.svg {
        let traces: Vec<_> = outcomes.iter().map(|o| (o.algorithm.name(), o.trace())).collect();
        write_atomic(&dir.join("plot.svg"), |w| Ok(write_svg(w, &traces)?))?;
    }
    println!("{:<16} {:>6} {:>10} {:>10} {:>16} {:>10}  status", "algorithm", "nnz", "iters", "secs", "objective", "mse");
    for r in &rows {
        println!(
            "{:<16} {:>6} {:>10} {:>10.3} {:>16.10e} {:>10}  {}",
            r.algorithm,
            r.nnz.map_or("-".into(), |v| v.to_string()),
            r.iterations,
            r.wall_secs,
            r.final_objective.unwrap_or(f64::NAN),
            r.mse.map_or("-".into(), |v| format!("{v:.3e}")),
            r.error.as_deref().unwrap_or(&r.status)
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_gen(args: &GenArgs) -> anyhow::Result<ExitCode> {
    let seed = args.seed;
    let (data, truth) = match args.family {
        Family::Logistic => gen_logistic_with(
            args.m.unwrap_or(200),
            args.n.unwrap_or(50),
            seed,
            args.sparsity.unwrap_or(0.1),
            args.flip.unwrap_or(0.05),
        )?,
        Family::GroupLasso => gen_group_lasso_with(
            args.m.unwrap_or(200),
            args.n.unwrap_or(800),
            args.ng.unwrap_or(40),
            seed,
            args.active.unwrap_or(0.1),
        )?,
        Family::Deconv => {
            let n = args.n.unwrap_or(1024);
            gen_deconvolution_with(n, seed, args.spikes.unwrap_or(n.div_ceil(64)), args.noise.unwrap_or(0.01))?
        }
    };
    let dir: &Path = &args.out;
    if matches!(args.format, Format::Libsvm | Format::Both) {
        let sparse = data.to_libsvm();
        write_atomic(&dir.join("data.libsvm"), |w| Ok(write_libsvm(w, &sparse)?))?;
    }
    if matches!(args.format, Format::Csv | Format::Both) {
        write_atomic(&dir.join("data.csv"), |w| Ok(data.write_dense_csv(w)?))?;
    }
    write_atomic(&dir.join("truth.json"), |w| Ok(write_json(w, &truth)?))?;
    println!(
        "{} x {} {} data written to {}; nnz(x*) = {}",
        data.m(),
        data.n(),
        args.family.name(),
        dir.display(),
        truth.nnz
    );
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let res = match &cli.cmd {
        Cmd::Solve(a) => cmd_solve(a),
        Cmd::Bench(a) => cmd_bench(a),
        Cmd::Gen(a) => cmd_gen(a).context("generating data"),
    };
    match res {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
