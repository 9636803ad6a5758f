//! Turning a run description into a problem instance and executing solvers.

use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{bail, Context};
use scorch_core::linalg::norm_inf;
use scorch_core::solvers::{solve_with_clock, StdClock};
use scorch_core::{
    least_squares_problem, logistic_problem, Algorithm, CompositeProblem, GroupStructure, PenaltySpec, ProxScaling,
    Solution, SolverConfig, Status,
};
use serde::Serialize;

use crate::data::{
    gen_deconvolution_with, gen_group_lasso_with, gen_logistic_with, read_libsvm, Dataset, DatasetMeta, GroundTruth,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Logistic,
    GroupLasso,
    Deconv,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Logistic => "logistic",
            Family::GroupLasso => "group-lasso",
            Family::Deconv => "deconv",
        }
    }
}

impl FromStr for Family {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        match s {
            "logistic" => Ok(Family::Logistic),
            "group-lasso" | "group_lasso" => Ok(Family::GroupLasso),
            "deconv" | "deconvolution" => Ok(Family::Deconv),
            _ => bail!("unknown family `{s}` (expected logistic, group-lasso or deconv)"),
        }
    }
}

/// Generator parameters, e.g. `m=200,n=50,seed=7`. Unset fields take the
/// family defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct GenParams {
    pub m: Option<usize>,
    pub n: Option<usize>,
    pub ng: Option<usize>,
    pub seed: u64,
    pub sparsity: Option<f64>,
    pub flip: Option<f64>,
    pub active: Option<f64>,
    pub spikes: Option<usize>,
    pub noise: Option<f64>,
}

impl FromStr for GenParams {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        let mut p = GenParams::default();
        for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let (k, v) = item
                .split_once('=')
                .with_context(|| format!("generator parameter `{item}` is not key=value"))?;
            let bad = || format!("invalid value `{v}` for generator parameter `{k}`");
            match k {
                "m" => p.m = Some(v.parse().with_context(bad)?),
                "n" => p.n = Some(v.parse().with_context(bad)?),
                "ng" | "n_g" => p.ng = Some(v.parse().with_context(bad)?),
                "seed" => p.seed = v.parse().with_context(bad)?,
                "sparsity" => p.sparsity = Some(v.parse().with_context(bad)?),
                "flip" => p.flip = Some(v.parse().with_context(bad)?),
                "active" => p.active = Some(v.parse().with_context(bad)?),
                "spikes" => p.spikes = Some(v.parse().with_context(bad)?),
                "noise" => p.noise = Some(v.parse().with_context(bad)?),
                _ => bail!("unknown generator parameter `{k}`"),
            }
        }
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataSource {
    Generate(GenParams),
    File { path: PathBuf, n_features: Option<usize> },
}

/// Penalty weights. `None` takes the family default.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RegSpec {
    pub beta: Option<f64>,
    pub beta_g: Option<f64>,
    pub mu: Option<f64>,
    /// Scale of the group-lasso defaults `β = 0.9γ‖Aᵀy‖∞`, `β_G = 9.1γ‖Aᵀy‖∞`.
    pub gamma: Option<f64>,
    /// Number of contiguous groups when the data has no ground truth.
    pub ng: Option<usize>,
}

pub const GROUP_TAU1: f64 = 0.9;
pub const GROUP_GAMMA: f64 = 1e-7;

/// Resolved penalty weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Regularization {
    pub beta: f64,
    pub beta_g: Option<f64>,
    pub mu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverSpec {
    pub alpha: f64,
    pub tol: f64,
    pub max_iters: usize,
    pub prox_dhat_literal: bool,
    pub alpha_from_lipschitz: bool,
    pub diagnostics: bool,
}

impl Default for SolverSpec {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            tol: 1e-6,
            max_iters: 1000,
            prox_dhat_literal: false,
            alpha_from_lipschitz: false,
            diagnostics: false,
        }
    }
}

impl SolverSpec {
    pub fn config(&self, algorithm: Algorithm) -> SolverConfig {
        SolverConfig {
            algorithm,
            alpha: self.alpha,
            max_iters: self.max_iters,
            tol: self.tol,
            alpha_from_lipschitz: self.alpha_from_lipschitz,
            prox_scaling: if self.prox_dhat_literal {
                ProxScaling::Literal
            } else {
                ProxScaling::Exact
            },
            diagnostics: self.diagnostics,
            ..SolverConfig::default()
        }
    }
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSpec {
    pub family: Family,
    pub source: DataSource,
    pub reg: RegSpec,
    pub solver: SolverSpec,
}

pub struct Instance {
    pub problem: CompositeProblem,
    pub truth: Option<GroundTruth>,
    pub meta: DatasetMeta,
    pub m: usize,
    pub n: usize,
    pub reg: Regularization,
}

/// Draw the dataset a spec describes.
pub fn load_dataset(family: Family, source: &DataSource) -> anyhow::Result<(Dataset, Option<GroundTruth>)> {
    match source {
        DataSource::File { path, n_features } => {
            let d = read_libsvm(path, *n_features, family == Family::Logistic)?;
            Ok((d, None))
        }
        DataSource::Generate(p) => {
            let (d, t) = match family {
                Family::Logistic => gen_logistic_with(
                    p.m.unwrap_or(200),
                    p.n.unwrap_or(50),
                    p.seed,
                    p.sparsity.unwrap_or(0.1),
                    p.flip.unwrap_or(0.05),
                )?,
                Family::GroupLasso => gen_group_lasso_with(
                    p.m.unwrap_or(200),
                    p.n.unwrap_or(800),
                    p.ng.unwrap_or(40),
                    p.seed,
                    p.active.unwrap_or(0.1),
                )?,
                Family::Deconv => {
                    if p.m.is_some_and(|m| Some(m) != p.n) {
                        bail!("deconvolution is square: m must equal n");
                    }
                    let n = p.n.or(p.m).unwrap_or(1024);
                    gen_deconvolution_with(n, p.seed, p.spikes.unwrap_or(n.div_ceil(64)), p.noise.unwrap_or(0.01))?
                }
            };
            Ok((d, Some(t)))
        }
    }
}

/// Build the composite problem for a dataset under the family defaults.
pub fn build_problem(
    family: Family,
    data: Dataset,
    truth: Option<GroundTruth>,
    reg: &RegSpec,
) -> anyhow::Result<Instance> {
    let (m, n) = (data.m(), data.n());
    if m == 0 || n == 0 {
        bail!("dataset is empty ({m} x {n})");
    }
    let meta = data.meta.clone();
    let synthetic = truth.is_some();
    let (problem, resolved) = match family {
        Family::Logistic => {
            let beta = reg.beta.unwrap_or(if synthetic { 0.2 } else { 1.0 });
            let mu = reg.mu.unwrap_or(1.0);
            let p = logistic_problem(data.a, data.y, beta, mu)?;
            (p, Regularization { beta, beta_g: None, mu })
        }
        Family::Deconv => {
            let beta = reg.beta.unwrap_or(1e-3);
            let mu = reg.mu.unwrap_or(5e-2);
            let p = least_squares_problem(data.a, data.y, PenaltySpec::l1(beta)?, mu)?;
            (p, Regularization { beta, beta_g: None, mu })
        }
        Family::GroupLasso => {
            let groups = match (&truth, reg.ng) {
                (_, Some(ng)) => {
                    if n % ng != 0 {
                        bail!("n = {n} is not divisible by n_g = {ng}");
                    }
                    GroupStructure::contiguous(n, ng)?
                }
                (Some(t), None) => GroupStructure::with_sqrt_sizes(n, t.groups.clone())?,
                (None, None) => bail!("group-lasso data from a file needs the number of groups (--ng)"),
            };
            let scale = reg.gamma.unwrap_or(GROUP_GAMMA) * norm_inf(&data.a.tmatvec(&data.y));
            let beta = reg.beta.unwrap_or(GROUP_TAU1 * scale);
            let beta_g = reg.beta_g.unwrap_or((10.0 - GROUP_TAU1) * scale);
            let mu = reg.mu.unwrap_or(1.6);
            let penalty = PenaltySpec::sparse_group(groups, beta, beta_g)?;
            let p = least_squares_problem(data.a, data.y, penalty, mu)?;
            (
                p,
                Regularization {
                    beta,
                    beta_g: Some(beta_g),
                    mu,
                },
            )
        }
    };
    Ok(Instance {
        problem,
        truth,
        meta,
        m,
        n,
        reg: resolved,
    })
}

pub fn build_instance(spec: &RunSpec) -> anyhow::Result<Instance> {
    let (data, truth) = load_dataset(spec.family, &spec.source)?;
    build_problem(spec.family, data, truth, &spec.reg)
}

/// One row of a results table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub algorithm: String,
    pub m: usize,
    pub n: usize,
    pub nnz: Option<usize>,
    pub iterations: usize,
    pub wall_secs: f64,
    pub final_objective: Option<f64>,
    /// `(1/n)‖x̂ − x*‖²` when the truth is known.
    pub mse: Option<f64>,
    pub status: String,
    pub error: Option<String>,
}

pub struct RunOutcome {
    pub algorithm: Algorithm,
    pub result: Result<Solution, scorch_core::solvers::SolveError>,
    pub summary: SummaryRow,
}

impl RunOutcome {
    pub fn trace(&self) -> &[scorch_core::TraceRecord] {
        match &self.result {
            Ok(s) => &s.trace,
            Err(e) => &e.trace,
        }
    }

    pub fn status(&self) -> Option<Status> {
        self.result.as_ref().ok().map(|s| s.status)
    }
}

/// Solve one instance with one algorithm, timing with the wall clock.
pub fn run_algorithm(instance: &Instance, config: &SolverConfig) -> RunOutcome {
    let result = solve_with_clock(&instance.problem, config, &StdClock::start());
    let summary = match &result {
        Ok(sol) => {
            let last = sol.trace.last();
            SummaryRow {
                algorithm: config.algorithm.name().into(),
                m: instance.m,
                n: instance.n,
                nnz: last.map(|r| r.nnz),
                iterations: sol.iterations(),
                wall_secs: last.map_or(0.0, |r| r.wall_secs),
                final_objective: Some(sol.final_objective()),
                mse: instance.truth.as_ref().map(|t| t.mse(&sol.x)),
                status: sol.status.name().into(),
                error: None,
            }
        }
        Err(e) => {
            let last = e.trace.last();
            SummaryRow {
                algorithm: config.algorithm.name().into(),
                m: instance.m,
                n: instance.n,
                nnz: last.map(|r| r.nnz),
                iterations: last.map_or(0, |r| r.k),
                wall_secs: last.map_or(0.0, |r| r.wall_secs),
                final_objective: last.map(|r| r.objective),
                mse: None,
                status: "error".into(),
                error: Some(e.to_string()),
            }
        }
    };
    RunOutcome {
        algorithm: config.algorithm,
        result,
        summary,
    }
}

/// Worker count for benches: `SCORCH_THREADS` if set, else the available
/// parallelism.
pub fn thread_budget() -> usize {
    std::env::var("SCORCH_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&t| t > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Run several algorithms on the same instance. Results keep the order of
/// `algorithms`.
pub fn run_bench(instance: &Instance, algorithms: &[Algorithm], solver: &SolverSpec, threads: usize) -> Vec<RunOutcome> {
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Mutex;

    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<RunOutcome>>> = Mutex::new((0..algorithms.len()).map(|_| None).collect());
    let workers = threads.clamp(1, algorithms.len().max(1));
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&alg) = algorithms.get(i) else { break };
                let out = run_algorithm(instance, &solver.config(alg));
                slots.lock().expect("bench worker panicked")[i] = Some(out);
            });
        }
    });
    slots
        .into_inner()
        .expect("bench worker panicked")
        .into_iter()
        .map(|o| o.expect("every cell is run"))
        .collect()
}
