use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::kernels::SmoothedRegularizer;
use crate::linalg::{self, Cholesky, Lu, Matrix};
use crate::math;
use crate::problems::{build_augmented_jacobian, AugmentedJacobian, CompositeProblem};
use crate::prox::{DiagonalMetric, ProxScaling};

use super::{SolverConfig, SolverState, DENSE_LIMIT};

/// `η = ‖∇g_s(x)‖*_{H_g}` and the damped step `ᾱ = α / (1 + M_g η)`.
pub fn step_length(smoother: &SmoothedRegularizer, x: &[f64], alpha: f64) -> Result<(f64, f64)> {
    let g = smoother.gradient(x);
    let h = smoother.hessian_diag(x);
    Ok(damped_step(smoother.m_g(), &g, &h, alpha)?)
}

fn damped_step(m_g: f64, grad: &[f64], h_g: &[f64], alpha: f64) -> Result<(f64, f64)> {
    let eta2: f64 = grad.iter().zip(h_g).map(|(g, h)| g * g / h).sum();
    let eta = math::sqrt(eta2);
    if !eta.is_finite() {
        return Err(Error::NonFinite("smoother gradient".into()));
    }
    Ok((eta, alpha / (1.0 + m_g * eta)))
}

/// Lipschitz constant of `∇(f + g_s)`: the loss constant plus the largest
/// curvature of the smoother.
pub fn smoothed_lipschitz(problem: &CompositeProblem) -> f64 {
    let lf = problem.loss().lipschitz();
    match problem.smoother().curvature_bound() {
        Some(c) => lf + c,
        None => {
            log::warn!("smoother curvature is unbounded; using the loss Lipschitz constant alone");
            lf
        }
    }
}

/// Solve `(∇²f(x) + diag(h_g)) Δ = rhs`.
pub fn newton_direction(problem: &CompositeProblem, x: &[f64], h_g: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = x.len();
    if n <= DENSE_LIMIT {
        let mut h = problem.loss().hessian(x);
        h.add_diag(h_g);
        Ok(Cholesky::factor_regularized(&h)?.solve(rhs))
    } else {
        let loss = problem.loss();
        let op = |v: &[f64]| {
            let mut out = loss.hessian_vec(x, v);
            for ((o, vi), hi) in out.iter_mut().zip(v).zip(h_g) {
                *o += hi * vi;
            }
            out
        };
        Ok(linalg::conjugate_gradient(op, rhs, 1e-12, 10 * n))
    }
}

/// Which linear system the Gauss-Newton direction used.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GgnBranch {
    /// `n x n` system `(JᵀVJ + H_g) δ = −Jᵀu`.
    Full,
    /// `rows(J) x rows(J)` system through `(I + V J H_g⁻¹ Jᵀ)`.
    Dual,
}

/// `δ = −(JᵀVJ + H_g)⁻¹ Jᵀu`
pub fn ggn_direction_full(aj: &AugmentedJacobian, h_g: &[f64]) -> Result<Vec<f64>> {
    let mut g = aj.j.weighted_gram(Some(&aj.v));
    g.add_diag(h_g);
    let rhs = aj.jt_u();
    let d = Cholesky::factor_regularized(&g)?.solve(&rhs);
    Ok(d.into_iter().map(|v| -v).collect())
}

/// `δ = −H_g⁻¹ Jᵀ (I + V J H_g⁻¹ Jᵀ)⁻¹ u`
pub fn ggn_direction_dual(aj: &AugmentedJacobian, h_g: &[f64]) -> Result<Vec<f64>> {
    let r = aj.j.rows();
    let inv: Vec<f64> = h_g.iter().map(|h| 1.0 / h).collect();
    // B = J H⁻¹ Jᵀ, symmetric
    let mut k = Matrix::zeros(r, r);
    for a in 0..r {
        let ja = aj.j.row(a);
        for b in a..r {
            let jb = aj.j.row(b);
            let s: f64 = ja.iter().zip(jb).zip(&inv).map(|((p, q), w)| p * q * w).sum();
            k[(a, b)] = s;
            k[(b, a)] = s;
        }
    }
    for a in 0..r {
        let va = aj.v[a];
        k.row_mut(a).iter_mut().for_each(|e| *e *= va);
        k[(a, a)] += 1.0;
    }
    let lu = match Lu::factor(&k) {
        Ok(lu) => lu,
        Err(_) => {
            log::debug!("dual GGN system singular, retrying with diagonal shift");
            k.add_scaled_identity(linalg::CHOLESKY_RETRY_SHIFT);
            Lu::factor(&k)?
        }
    };
    let s = lu.solve(&aj.u);
    let jts = aj.j.tmatvec(&s);
    Ok(jts.iter().zip(&inv).map(|(v, w)| -v * w).collect())
}

fn metric(h_g: Vec<f64>) -> Result<DiagonalMetric> {
    DiagonalMetric::new(h_g)
}

/// One iteration of the proximal Newton method:
/// `x⁺ = prox^{H_g}_{αg}(x − ᾱ (∇²f + H_g)⁻¹ ∇q)`.
pub fn prox_n_score_step(problem: &CompositeProblem, state: &mut SolverState, cfg: &SolverConfig) -> Result<()> {
    let x = &state.x;
    let sm = problem.smoother();
    let (_, grad_gs, h_g) = sm.evaluate(x);
    let (eta, alpha_bar) = damped_step(sm.m_g(), &grad_gs, &h_g, cfg.alpha)?;
    let grad_q = linalg::add(&problem.loss().gradient(x), &grad_gs);
    let delta = newton_direction(problem, x, &h_g, &grad_q)?;
    let z: Vec<f64> = x.iter().zip(&delta).map(|(a, d)| a - alpha_bar * d).collect();
    let m = metric(h_g)?;
    let next = problem.penalty().prox(&z, &m, cfg.alpha, cfg.prox_scaling)?;
    state.k += 1;
    state.eta = eta;
    state.alpha_bar = alpha_bar;
    state.h_g = m.diag().to_vec();
    state.x_prev = core::mem::replace(&mut state.x, next);
    Ok(())
}

/// One iteration of the proximal generalized Gauss-Newton method:
/// `x⁺ = prox^{H_g}_{αg}(x + ᾱ δ)` with `δ` from the augmented Jacobian.
pub fn prox_ggn_score_step(problem: &CompositeProblem, state: &mut SolverState, cfg: &SolverConfig) -> Result<()> {
    let model = problem
        .loss()
        .residual_model()
        .ok_or_else(|| Error::Unsupported("Gauss-Newton step needs a residual model".into()))?;
    let x = &state.x;
    let sm = problem.smoother();
    let (_, grad_gs, h_g) = sm.evaluate(x);
    let (eta, alpha_bar) = damped_step(sm.m_g(), &grad_gs, &h_g, cfg.alpha)?;
    let delta = if model.n_residuals() + 1 <= x.len() {
        ggn_direction_dual(&build_augmented_jacobian(model, sm, x), &h_g)?
    } else {
        // the ∇g_s row of J carries zero weight in V, so JᵀVJ is the model's
        // own Gauss-Newton matrix and Jᵀu = ∇f + ∇g_s
        let (_, d2) = model.loss_derivatives(x);
        let mut g = model.weighted_gram(x, &d2);
        g.add_diag(&h_g);
        let rhs = linalg::add(&problem.loss().gradient(x), &grad_gs);
        Cholesky::factor_regularized(&g)?.solve(&rhs).into_iter().map(|v| -v).collect()
    };
    let z: Vec<f64> = x.iter().zip(&delta).map(|(a, d)| a + alpha_bar * d).collect();
    let m = metric(h_g)?;
    let next = problem.penalty().prox(&z, &m, cfg.alpha, cfg.prox_scaling)?;
    state.k += 1;
    state.eta = eta;
    state.alpha_bar = alpha_bar;
    state.h_g = m.diag().to_vec();
    state.x_prev = core::mem::replace(&mut state.x, next);
    Ok(())
}

fn forward_backward(problem: &CompositeProblem, at: &[f64], l: f64) -> Result<Vec<f64>> {
    let g = problem.smooth_gradient(at);
    let z: Vec<f64> = at.iter().zip(&g).map(|(a, b)| a - b / l).collect();
    let id = DiagonalMetric::identity(at.len());
    problem.penalty().prox(&z, &id, 1.0 / l, ProxScaling::Exact)
}

/// `x⁺ = prox_{g/L}(x − ∇(f + g_s)(x)/L)`
pub fn prox_grad_step(problem: &CompositeProblem, state: &mut SolverState) -> Result<()> {
    let next = forward_backward(problem, &state.x, state.lipschitz)?;
    state.k += 1;
    state.x_prev = core::mem::replace(&mut state.x, next);
    Ok(())
}

/// Accelerated variant with momentum `t⁺ = (1 + √(1 + 4t²))/2`.
pub fn fast_prox_grad_step(problem: &CompositeProblem, state: &mut SolverState) -> Result<()> {
    let next = forward_backward(problem, &state.y, state.lipschitz)?;
    let t_next = 0.5 * (1.0 + math::sqrt(1.0 + 4.0 * state.t * state.t));
    let w = (state.t - 1.0) / t_next;
    state.y = next
        .iter()
        .zip(&state.x)
        .map(|(a, b)| a + w * (a - b))
        .collect();
    state.t = t_next;
    state.k += 1;
    state.x_prev = core::mem::replace(&mut state.x, next);
    Ok(())
}
