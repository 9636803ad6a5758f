//! Composite problems `ℒ_s = f + g_s + g` and the residual view of `f`
//! used by the Gauss-Newton solver.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::kernels::{smooth_l1, smooth_l2_groups, smooth_sparse_group, SmoothedRegularizer};
use crate::linalg::{self, CsrMatrix, Matrix};
use crate::math;
use crate::prox::{PenaltyKind, PenaltySpec};

/// Smooth convex part `f` with derivative oracles.
pub trait SmoothLoss: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
    /// Dense `∇²f(x)`.
    fn hessian(&self, x: &[f64]) -> Matrix;
    /// `∇²f(x) v` without forming the matrix.
    fn hessian_vec(&self, x: &[f64], v: &[f64]) -> Vec<f64>;
    /// A Lipschitz constant of `∇f`.
    fn lipschitz(&self) -> f64;
    /// `f(x) = Σ ℓ(y_i, ŷ_i(x))` form, when available.
    fn residual_model(&self) -> Option<&dyn ResidualModel> {
        None
    }
}

/// Per-sample predictions `ŷ(x)` and a convex loss `ℓ(y, ŷ)`.
pub trait ResidualModel {
    fn dim(&self) -> usize;
    /// Number of rows `m·n_y` of `∂ŷ/∂x`.
    fn n_residuals(&self) -> usize;
    fn predictions(&self, x: &[f64]) -> Vec<f64>;
    /// `∂ŷ/∂x`, shape `m·n_y × n`.
    fn jacobian(&self, x: &[f64]) -> Matrix;
    /// `(ℓ'(ŷ_i), ℓ''(ŷ_i))` for every residual row.
    fn loss_derivatives(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>);
    /// `(∂ŷ/∂x)ᵀ diag(w) (∂ŷ/∂x)`
    fn weighted_gram(&self, x: &[f64], w: &[f64]) -> Matrix {
        self.jacobian(x).weighted_gram(Some(w))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    /// `ℓ(y, ŷ) = log(1 + exp(−y ŷ))`, `y ∈ {−1, 1}`
    Logistic,
    /// `ℓ(y, ŷ) = ½ (ŷ − y)²`
    Squared,
}

/// Linear predictor `ŷ_{ik} = ⟨a_i, x_k⟩` with `n_y` outputs per sample;
/// `x` stacks the `n_y` coefficient blocks of length `p`.
#[derive(Debug, Clone)]
pub struct GlmLoss {
    a: Matrix,
    y: Vec<f64>,
    n_y: usize,
    kind: LossKind,
    /// `AᵀA`, kept for the squared loss whose Hessian does not depend on `x`.
    gram: Option<Matrix>,
    /// Sparse copy of `A` when at most a quarter of its entries are nonzero.
    sparse: Option<CsrMatrix>,
}

impl GlmLoss {
    pub fn new(a: Matrix, y: Vec<f64>, n_y: usize, kind: LossKind) -> Result<Self> {
        if n_y == 0 {
            return Err(Error::Data("n_y must be at least 1".into()));
        }
        if y.len() != a.rows() * n_y {
            return Err(Error::Data(alloc::format!(
                "{} targets for {} samples with {} outputs",
                y.len(),
                a.rows(),
                n_y
            )));
        }
        if !a.is_finite() {
            return Err(Error::Data("design matrix has non-finite entries".into()));
        }
        if let Some((i, v)) = y.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Data(alloc::format!("target {i} is not finite ({v})")));
        }
        if kind == LossKind::Logistic {
            if let Some((i, v)) = y.iter().enumerate().find(|(_, v)| **v != 1.0 && **v != -1.0) {
                return Err(Error::Data(alloc::format!("label {i} is {v}, expected -1 or 1")));
            }
        }
        let gram = (kind == LossKind::Squared && a.cols() <= crate::solvers::DENSE_LIMIT).then(|| a.weighted_gram(None));
        let csr = CsrMatrix::from_dense(&a);
        let sparse = (4 * csr.nnz() <= a.rows() * a.cols()).then_some(csr);
        Ok(Self {
            a,
            y,
            n_y,
            kind,
            gram,
            sparse,
        })
    }

    pub fn design(&self) -> &Matrix {
        &self.a
    }

    pub fn targets(&self) -> &[f64] {
        &self.y
    }

    pub fn kind(&self) -> LossKind {
        self.kind
    }

    pub fn n_outputs(&self) -> usize {
        self.n_y
    }

    fn p(&self) -> usize {
        self.a.cols()
    }

    fn mv(&self, x: &[f64]) -> Vec<f64> {
        match &self.sparse {
            Some(s) => s.matvec(x),
            None => self.a.matvec(x),
        }
    }

    fn tmv(&self, y: &[f64]) -> Vec<f64> {
        match &self.sparse {
            Some(s) => s.tmatvec(y),
            None => self.a.tmatvec(y),
        }
    }

    fn block<'a>(&self, x: &'a [f64], k: usize) -> &'a [f64] {
        &x[k * self.p()..(k + 1) * self.p()]
    }

    fn derivs(&self, y: f64, yhat: f64) -> (f64, f64, f64) {
        match self.kind {
            LossKind::Logistic => {
                let z = -y * yhat;
                let s = math::sigmoid(z);
                (math::softplus(z), -y * s, s * (1.0 - s))
            }
            LossKind::Squared => {
                let r = yhat - y;
                (0.5 * r * r, r, 1.0)
            }
        }
    }

    /// `Jᵀ w` for a vector over residual rows.
    fn jt(&self, w: &[f64]) -> Vec<f64> {
        let (m, p) = (self.a.rows(), self.p());
        let mut out = vec![0.0; p * self.n_y];
        for k in 0..self.n_y {
            let col: Vec<f64> = (0..m).map(|i| w[i * self.n_y + k]).collect();
            out[k * p..(k + 1) * p].copy_from_slice(&self.tmv(&col));
        }
        out
    }
}

impl SmoothLoss for GlmLoss {
    fn dim(&self) -> usize {
        self.p() * self.n_y
    }

    fn value(&self, x: &[f64]) -> f64 {
        let yhat = ResidualModel::predictions(self, x);
        yhat.iter().zip(&self.y).map(|(&h, &y)| self.derivs(y, h).0).sum()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let (d1, _) = self.loss_derivatives(x);
        self.jt(&d1)
    }

    fn hessian(&self, x: &[f64]) -> Matrix {
        let (m, p) = (self.a.rows(), self.p());
        if self.n_y == 1 {
            if let Some(g) = &self.gram {
                return g.clone();
            }
        }
        let (_, d2) = self.loss_derivatives(x);
        if self.n_y == 1 {
            return self.a.weighted_gram(if self.kind == LossKind::Squared { None } else { Some(&d2) });
        }
        let n = SmoothLoss::dim(self);
        let mut h = Matrix::zeros(n, n);
        for k in 0..self.n_y {
            let w: Vec<f64> = (0..m).map(|i| d2[i * self.n_y + k]).collect();
            let blk = match &self.gram {
                Some(g) => g.clone(),
                None => self.a.weighted_gram(Some(&w)),
            };
            for r in 0..p {
                for c in 0..p {
                    h[(k * p + r, k * p + c)] = blk[(r, c)];
                }
            }
        }
        h
    }

    fn hessian_vec(&self, x: &[f64], v: &[f64]) -> Vec<f64> {
        let (_, d2) = self.loss_derivatives(x);
        let mut jv = ResidualModel::predictions(self, v);
        jv.iter_mut().zip(&d2).for_each(|(a, b)| *a *= b);
        self.jt(&jv)
    }

    fn lipschitz(&self) -> f64 {
        let lam = linalg::power_iteration(self.p(), |v| self.tmv(&self.mv(v)), 5000, 1e-10);
        match self.kind {
            LossKind::Logistic => 0.25 * lam,
            LossKind::Squared => lam,
        }
    }

    fn residual_model(&self) -> Option<&dyn ResidualModel> {
        Some(self)
    }
}

impl ResidualModel for GlmLoss {
    fn dim(&self) -> usize {
        self.p() * self.n_y
    }

    fn n_residuals(&self) -> usize {
        self.a.rows() * self.n_y
    }

    fn predictions(&self, x: &[f64]) -> Vec<f64> {
        let m = self.a.rows();
        let mut out = vec![0.0; m * self.n_y];
        for k in 0..self.n_y {
            for (i, v) in self.mv(self.block(x, k)).into_iter().enumerate().take(m) {
                out[i * self.n_y + k] = v;
            }
        }
        out
    }

    fn jacobian(&self, _x: &[f64]) -> Matrix {
        let (m, p) = (self.a.rows(), self.p());
        if self.n_y == 1 {
            return self.a.clone();
        }
        let mut j = Matrix::zeros(m * self.n_y, p * self.n_y);
        for i in 0..m {
            for k in 0..self.n_y {
                let r = i * self.n_y + k;
                j.row_mut(r)[k * p..(k + 1) * p].copy_from_slice(self.a.row(i));
            }
        }
        j
    }

    fn weighted_gram(&self, x: &[f64], w: &[f64]) -> Matrix {
        match (&self.gram, self.n_y) {
            (Some(g), 1) if w.iter().all(|v| *v == 1.0) => g.clone(),
            (_, 1) => self.a.weighted_gram(Some(w)),
            _ => self.jacobian(x).weighted_gram(Some(w)),
        }
    }

    fn loss_derivatives(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let yhat = ResidualModel::predictions(self, x);
        let mut d1 = Vec::with_capacity(yhat.len());
        let mut d2 = Vec::with_capacity(yhat.len());
        for (&h, &y) in yhat.iter().zip(&self.y) {
            let (_, a, b) = self.derivs(y, h);
            d1.push(a);
            d2.push(b);
        }
        (d1, d2)
    }
}

/// `ℒ_s(x) = f(x) + g_s(x) + g(x)`.
pub struct CompositeProblem {
    loss: Box<dyn SmoothLoss>,
    penalty: PenaltySpec,
    smoother: SmoothedRegularizer,
}

impl core::fmt::Debug for CompositeProblem {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("CompositeProblem")
            .field("dim", &self.dim())
            .field("penalty", &self.penalty)
            .field("mu", &self.smoother.mu())
            .finish()
    }
}

impl CompositeProblem {
    pub fn new(loss: Box<dyn SmoothLoss>, penalty: PenaltySpec, smoother: SmoothedRegularizer) -> Result<Self> {
        if smoother.dim() != loss.dim() {
            return Err(Error::Dimension(alloc::format!(
                "loss over {} variables, smoother over {}",
                loss.dim(),
                smoother.dim()
            )));
        }
        if let Some(g) = &penalty.groups {
            if g.dim() != loss.dim() {
                return Err(Error::Dimension(alloc::format!(
                    "groups over {} variables, loss over {}",
                    g.dim(),
                    loss.dim()
                )));
            }
        }
        Ok(Self {
            loss,
            penalty,
            smoother,
        })
    }

    pub fn dim(&self) -> usize {
        self.loss.dim()
    }

    pub fn loss(&self) -> &dyn SmoothLoss {
        self.loss.as_ref()
    }

    pub fn penalty(&self) -> &PenaltySpec {
        &self.penalty
    }

    pub fn smoother(&self) -> &SmoothedRegularizer {
        &self.smoother
    }

    /// `ℒ(x) = f(x) + g(x)`
    pub fn objective(&self, x: &[f64]) -> f64 {
        self.loss.value(x) + self.penalty.value(x)
    }

    /// `ℒ_s(x) = f(x) + g_s(x) + g(x)`
    pub fn smoothed_objective(&self, x: &[f64]) -> f64 {
        self.loss.value(x) + self.smoother.value(x) + self.penalty.value(x)
    }

    /// `∇q(x) = ∇f(x) + ∇g_s(x)`
    pub fn smooth_gradient(&self, x: &[f64]) -> Vec<f64> {
        linalg::add(&self.loss.gradient(x), &self.smoother.gradient(x))
    }
}

/// Sparse logistic regression, `f(x) = Σ log(1 + exp(−y_i⟨a_i, x⟩))`,
/// `g = β‖x‖₁`, smoothed with the hyperbolic kernel.
pub fn logistic_problem(a: Matrix, y: Vec<f64>, beta: f64, mu: f64) -> Result<CompositeProblem> {
    let n = a.cols();
    let loss = GlmLoss::new(a, y, 1, LossKind::Logistic)?;
    CompositeProblem::new(Box::new(loss), PenaltySpec::l1(beta)?, smooth_l1(mu, n, beta)?)
}

/// `f(x) = ½‖Ax − y‖²` with the smoother matching `penalty`.
pub fn least_squares_problem(a: Matrix, y: Vec<f64>, penalty: PenaltySpec, mu: f64) -> Result<CompositeProblem> {
    let n = a.cols();
    let loss = GlmLoss::new(a, y, 1, LossKind::Squared)?;
    let smoother = smoother_for(&penalty, n, mu)?;
    CompositeProblem::new(Box::new(loss), penalty, smoother)
}

/// The hyperbolic-kernel smoother of a penalty.
pub fn smoother_for(penalty: &PenaltySpec, n: usize, mu: f64) -> Result<SmoothedRegularizer> {
    let groups = || {
        penalty
            .groups
            .clone()
            .ok_or_else(|| Error::Config("group penalty without groups".into()))
    };
    match penalty.kind {
        PenaltyKind::L1 => smooth_l1(mu, n, penalty.beta),
        PenaltyKind::GroupL2 => smooth_l2_groups(mu, groups()?, penalty.beta_g),
        PenaltyKind::SparseGroup => smooth_sparse_group(mu, groups()?, penalty.beta, penalty.beta_g),
    }
}

/// `J = [∂ŷ/∂x; ∇g_sᵀ]`, `V = [ℓ''; 0]`, `u = [ℓ'; 1]`, so that
/// `Jᵀu = ∇f + ∇g_s`.
#[derive(Debug, Clone)]
pub struct AugmentedJacobian {
    pub j: Matrix,
    pub v: Vec<f64>,
    pub u: Vec<f64>,
}

impl AugmentedJacobian {
    /// `Jᵀ u`
    pub fn jt_u(&self) -> Vec<f64> {
        self.j.tmatvec(&self.u)
    }
}

pub fn build_augmented_jacobian(
    model: &dyn ResidualModel,
    smoother: &SmoothedRegularizer,
    x: &[f64],
) -> AugmentedJacobian {
    let jy = model.jacobian(x);
    let (d1, d2) = model.loss_derivatives(x);
    let (rows, n) = (jy.rows(), jy.cols());
    let mut data = Vec::with_capacity((rows + 1) * n);
    data.extend_from_slice(jy.as_slice());
    data.extend_from_slice(&smoother.gradient(x));
    let j = Matrix::from_vec(rows + 1, n, data).expect("shape is consistent by construction");
    let mut v = d2;
    v.push(0.0);
    let mut u = d1;
    u.push(1.0);
    AugmentedJacobian { j, v, u }
}

/// Distance from `−∇f(x) − ∇g_s(x)` to `∂g(x)`; zero iff `x` is stationary
/// for `ℒ_s`.
pub fn subgradient_residual(problem: &CompositeProblem, x: &[f64]) -> Result<f64> {
    let v: Vec<f64> = problem.smooth_gradient(x).iter().map(|g| -g).collect();
    let pen = problem.penalty();
    let beta = match pen.kind {
        PenaltyKind::GroupL2 => 0.0,
        _ => pen.beta,
    };
    let l1_dist = |vi: f64, xi: f64| -> f64 {
        if xi > 0.0 {
            vi - beta
        } else if xi < 0.0 {
            vi + beta
        } else {
            (math::abs(vi) - beta).max(0.0)
        }
    };
    let mut sq = 0.0;
    let mut covered = vec![false; x.len()];
    if let (PenaltyKind::GroupL2 | PenaltyKind::SparseGroup, Some(groups)) = (pen.kind, &pen.groups) {
        for (g, w) in groups.iter() {
            let c = pen.beta_g * w;
            let r = crate::groups::GroupStructure::group_norm(x, g);
            for &i in g {
                covered[i] = true;
            }
            if r > 0.0 {
                for &i in g {
                    let d = l1_dist(v[i] - c * x[i] / r, x[i]);
                    sq += d * d;
                }
            } else {
                let s: f64 = g
                    .iter()
                    .map(|&i| {
                        let t = (math::abs(v[i]) - beta).max(0.0);
                        t * t
                    })
                    .sum();
                let d = (math::sqrt(s) - c).max(0.0);
                sq += d * d;
            }
        }
    } else if pen.kind != PenaltyKind::L1 {
        return Err(Error::Unsupported("group penalty without groups".into()));
    }
    for i in 0..x.len() {
        if !covered[i] {
            let d = l1_dist(v[i], x[i]);
            sq += d * d;
        }
    }
    Ok(math::sqrt(sq))
}
