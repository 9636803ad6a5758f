//! Proximal Newton-type solvers on `ℒ_s = f + g_s + g` and the
//! first-order baselines.
//!
//! All four methods share one outer loop ([`solve`]) that records a
//! [`TraceRecord`] per iteration and stops on the relative step
//! `‖x_k − x_{k−1}‖ / max(‖x_{k−1}‖, 1) < tol`.

pub mod diagnostics;
mod steps;

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg;
use crate::problems::{subgradient_residual, CompositeProblem};
use crate::prox::ProxScaling;

pub use steps::{
    fast_prox_grad_step, ggn_direction_dual, ggn_direction_full, newton_direction, prox_ggn_score_step,
    prox_grad_step, prox_n_score_step, smoothed_lipschitz, step_length, GgnBranch,
};

/// Entries with magnitude above this count as nonzero.
pub const NNZ_THRESHOLD: f64 = 1e-12;

/// Above this dimension Newton systems are solved matrix-free with CG.
pub const DENSE_LIMIT: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    ProxNScore,
    ProxGgnScore,
    ProxGrad,
    FastProxGrad,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::ProxNScore,
        Algorithm::ProxGgnScore,
        Algorithm::ProxGrad,
        Algorithm::FastProxGrad,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::ProxNScore => "prox-n-score",
            Algorithm::ProxGgnScore => "prox-ggn-score",
            Algorithm::ProxGrad => "prox-grad",
            Algorithm::FastProxGrad => "fast-prox-grad",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Config(alloc::format!("unknown algorithm `{s}`")))
    }

    /// Damped second-order methods with the self-concordant step length.
    pub fn is_score(self) -> bool {
        matches!(self, Algorithm::ProxNScore | Algorithm::ProxGgnScore)
    }
}

impl core::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub algorithm: Algorithm,
    /// `α ∈ (0, 1]`
    pub alpha: f64,
    pub max_iters: usize,
    pub tol: f64,
    /// Lipschitz constant of `∇(f + g_s)` for the baselines; estimated when
    /// absent.
    pub lipschitz: Option<f64>,
    /// Use `α = min(1/L, 1)` instead of the fixed `alpha`.
    pub alpha_from_lipschitz: bool,
    pub prox_scaling: ProxScaling,
    pub x0: Option<Vec<f64>>,
    /// Record `d_ν` and `ω_ν(d_ν)` per iteration (SCORE methods).
    pub diagnostics: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::ProxNScore,
            alpha: 1.0,
            max_iters: 1000,
            tol: 1e-6,
            lipschitz: None,
            alpha_from_lipschitz: false,
            prox_scaling: ProxScaling::Exact,
            x0: None,
            diagnostics: false,
        }
    }
}

impl SolverConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        Self {
            algorithm,
            ..Self::default()
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Config(alloc::format!("alpha must lie in (0, 1], got {}", self.alpha)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config(alloc::format!("tol must be > 0, got {}", self.tol)));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        if let Some(l) = self.lipschitz {
            if !(l > 0.0) || !l.is_finite() {
                return Err(Error::Config(alloc::format!("lipschitz must be > 0, got {l}")));
            }
        }
        if let Some(x0) = &self.x0 {
            if x0.len() != dim {
                return Err(Error::Config(alloc::format!(
                    "x0 has length {}, problem dimension is {dim}",
                    x0.len()
                )));
            }
        }
        Ok(())
    }
}

/// One row of the iteration log. Row `k = 0` describes the starting point.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub k: usize,
    /// `ℒ(x_k) = f + g`
    pub objective: f64,
    /// `ℒ_s(x_k) = f + g_s + g`
    pub smoothed_objective: f64,
    /// Step used to reach `x_k`: `ᾱ` for SCORE methods, `1/L` for baselines.
    pub alpha_bar: Option<f64>,
    /// `η = ‖∇g_s‖*_{H_g}` at `x_{k−1}` (SCORE methods).
    pub eta: Option<f64>,
    pub rel_step: Option<f64>,
    pub residual: f64,
    pub nnz: usize,
    pub wall_secs: f64,
    /// `ω_ν(d_ν(x_k, x_{k−1}))` when diagnostics are on.
    pub omega: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Converged,
    MaxIterations,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::MaxIterations => "max_iterations",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub x: Vec<f64>,
    pub trace: Vec<TraceRecord>,
    pub status: Status,
    /// Lipschitz estimate used by a baseline.
    pub lipschitz: Option<f64>,
}

impl Solution {
    pub fn iterations(&self) -> usize {
        self.trace.last().map_or(0, |r| r.k)
    }

    pub fn final_objective(&self) -> f64 {
        self.trace.last().map_or(f64::NAN, |r| r.objective)
    }
}

/// A failed solve, with the trace up to the failure.
#[derive(Debug, Clone, thiserror::Error)]
#[error("{algorithm} failed after {} iterations: {error}", trace.last().map_or(0, |r| r.k))]
pub struct SolveError {
    pub algorithm: Algorithm,
    #[source]
    pub error: Error,
    pub trace: Vec<TraceRecord>,
    pub x: Vec<f64>,
}

/// Source of wall-clock time for traces.
pub trait Clock {
    fn seconds(&self) -> f64;
}

/// Reports zero elapsed time.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn seconds(&self) -> f64 {
        0.0
    }
}

#[cfg(feature = "std")]
#[derive(Debug, Clone, Copy)]
pub struct StdClock(std::time::Instant);

#[cfg(feature = "std")]
impl StdClock {
    pub fn start() -> Self {
        Self(std::time::Instant::now())
    }
}

#[cfg(feature = "std")]
impl Clock for StdClock {
    fn seconds(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

/// Per-iteration state carried between steps.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub k: usize,
    pub x: Vec<f64>,
    /// Previous iterate (momentum of the accelerated baseline).
    pub x_prev: Vec<f64>,
    /// Extrapolated point and momentum scalar of the accelerated baseline.
    pub y: Vec<f64>,
    pub t: f64,
    /// Smoother Hessian diagonal at the last SCORE step.
    pub h_g: Vec<f64>,
    pub eta: f64,
    pub alpha_bar: f64,
    pub lipschitz: f64,
}

impl SolverState {
    pub fn new(x0: Vec<f64>) -> Self {
        Self {
            k: 0,
            x_prev: x0.clone(),
            y: x0.clone(),
            h_g: vec![],
            x: x0,
            t: 1.0,
            eta: 0.0,
            alpha_bar: 0.0,
            lipschitz: f64::NAN,
        }
    }
}

fn nnz(x: &[f64]) -> usize {
    x.iter().filter(|v| v.abs() > NNZ_THRESHOLD).count()
}

/// Run the configured algorithm without wall-clock timing.
pub fn solve(problem: &CompositeProblem, config: &SolverConfig) -> core::result::Result<Solution, SolveError> {
    solve_with_clock(problem, config, &NoClock)
}

pub fn solve_with_clock(
    problem: &CompositeProblem,
    config: &SolverConfig,
    clock: &dyn Clock,
) -> core::result::Result<Solution, SolveError> {
    let n = problem.dim();
    let fail = |error: Error, trace: Vec<TraceRecord>, x: Vec<f64>| SolveError {
        algorithm: config.algorithm,
        error,
        trace,
        x,
    };
    if let Err(e) = config.validate(n) {
        return Err(fail(e, vec![], vec![]));
    }
    let x0 = config.x0.clone().unwrap_or_else(|| vec![0.0; n]);
    let mut state = SolverState::new(x0);
    let mut cfg = config.clone();
    let needs_l = !cfg.algorithm.is_score() || cfg.alpha_from_lipschitz;
    if needs_l {
        let l = cfg.lipschitz.unwrap_or_else(|| smoothed_lipschitz(problem));
        if !(l > 0.0) || !l.is_finite() {
            return Err(fail(
                Error::Config(alloc::format!("could not determine a Lipschitz constant (got {l})")),
                vec![],
                state.x,
            ));
        }
        state.lipschitz = l;
        if cfg.alpha_from_lipschitz {
            cfg.alpha = (1.0 / l).min(1.0);
        }
    }

    let record = |state: &SolverState, rel: Option<f64>, omega: Option<f64>, first: bool| -> Result<TraceRecord> {
        let x = &state.x;
        let objective = problem.objective(x);
        let smoothed = problem.smoothed_objective(x);
        if !objective.is_finite() || !smoothed.is_finite() {
            return Err(Error::NonFinite(alloc::format!("objective at iteration {}", state.k)));
        }
        let residual = subgradient_residual(problem, x)?;
        let (alpha_bar, eta) = if first {
            (None, None)
        } else if cfg.algorithm.is_score() {
            (Some(state.alpha_bar), Some(state.eta))
        } else {
            (Some(1.0 / state.lipschitz), None)
        };
        Ok(TraceRecord {
            k: state.k,
            objective,
            smoothed_objective: smoothed,
            alpha_bar,
            eta,
            rel_step: rel,
            residual,
            nnz: nnz(x),
            wall_secs: clock.seconds(),
            omega,
        })
    };

    let mut trace = Vec::new();
    match record(&state, None, None, true) {
        Ok(r) => trace.push(r),
        Err(e) => return Err(fail(e, trace, state.x)),
    }
    let initial = trace[0].objective;
    let blowup = initial.abs().max(1.0) * 1e8;
    let mut status = Status::MaxIterations;

    for _ in 0..cfg.max_iters {
        let prev = state.x.clone();
        let stepped = match cfg.algorithm {
            Algorithm::ProxNScore => prox_n_score_step(problem, &mut state, &cfg),
            Algorithm::ProxGgnScore => prox_ggn_score_step(problem, &mut state, &cfg),
            Algorithm::ProxGrad => prox_grad_step(problem, &mut state),
            Algorithm::FastProxGrad => fast_prox_grad_step(problem, &mut state),
        };
        if let Err(e) = stepped {
            return Err(fail(e, trace, state.x));
        }
        if state.x.iter().any(|v| !v.is_finite()) {
            log::error!("{}: non-finite iterate at k={}", cfg.algorithm, state.k);
            return Err(fail(
                Error::NonFinite(alloc::format!("iterate at iteration {}", state.k)),
                trace,
                state.x,
            ));
        }
        let rel = linalg::dist2(&state.x, &prev) / linalg::norm2(&prev).max(1.0);
        let omega = if cfg.diagnostics && cfg.algorithm.is_score() {
            let sm = problem.smoother();
            let d = diagnostics::d_nu(sm.nu(), sm.m_g(), &prev, &state.x, &state.h_g);
            diagnostics::omega_nu(sm.nu(), d).ok()
        } else {
            None
        };
        let rec = match record(&state, Some(rel), omega, false) {
            Ok(r) => r,
            Err(e) => {
                log::error!("{}: {e}", cfg.algorithm);
                return Err(fail(e, trace, state.x));
            }
        };
        if let Some(o) = omega {
            if o > 0.5 {
                log::debug!("{}: omega_nu = {o} > 0.5 at k={}", cfg.algorithm, state.k);
            }
        }
        let diverged = rec.objective > initial + blowup;
        trace.push(rec);
        if diverged {
            log::error!(
                "{}: objective grew from {initial} to {} by iteration {}; step too long?",
                cfg.algorithm,
                trace.last().map_or(f64::NAN, |r| r.objective),
                state.k
            );
            return Err(fail(Error::Diverged { k: state.k }, trace, state.x));
        }
        if rel < cfg.tol {
            status = Status::Converged;
            break;
        }
    }
    Ok(Solution {
        x: state.x,
        trace,
        status,
        lipschitz: state.lipschitz.is_finite().then_some(state.lipschitz),
    })
}

/// Check the step-length invariants on a SCORE trace: `ᾱ_k ∈ (0, α]` and
/// `ᾱ_k = α` whenever `η_k = 0`. Returns a description of the first
/// violation.
pub fn validate_step_lengths(trace: &[TraceRecord], alpha: f64) -> core::result::Result<(), String> {
    for r in trace.iter().filter(|r| r.k > 0) {
        let (Some(a), Some(eta)) = (r.alpha_bar, r.eta) else {
            continue;
        };
        if !(a > 0.0 && a <= alpha) {
            return Err(alloc::format!("k={}: alpha_bar {a} outside (0, {alpha}]", r.k));
        }
        if eta == 0.0 && a != alpha {
            return Err(alloc::format!("k={}: eta = 0 but alpha_bar {a} != {alpha}", r.k));
        }
    }
    Ok(())
}
