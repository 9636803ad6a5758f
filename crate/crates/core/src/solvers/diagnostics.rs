//! Local-geometry quantities of generalized self-concordant functions:
//! the distance `d_ν`, the curvature bound `ω_ν` and the Hessian-variation
//! bound `R_ν`.

use crate::error::{Error, Result};
use crate::math;

const TAYLOR_RADIUS: f64 = 1e-4;

/// `d_ν(x, y)` with `‖·‖_x` the local norm of the smoother at `x`
/// (its Hessian diagonal `h_x`).
pub fn d_nu(nu: f64, m_g: f64, x: &[f64], y: &[f64], h_x: &[f64]) -> f64 {
    let mut e2 = 0.0;
    let mut loc2 = 0.0;
    for ((a, b), h) in x.iter().zip(y).zip(h_x) {
        let d = b - a;
        e2 += d * d;
        loc2 += h * d * d;
    }
    let e = math::sqrt(e2);
    if nu == 2.0 {
        return m_g * e;
    }
    if e == 0.0 {
        return 0.0;
    }
    let loc = math::sqrt(loc2);
    (0.5 * nu - 1.0) * m_g * math::powf(e, 3.0 - nu) * math::powf(loc, nu - 2.0)
}

/// `ω_ν(τ)`; for `ν > 2` it needs `τ < 1`.
pub fn omega_nu(nu: f64, tau: f64) -> Result<f64> {
    if !(nu >= 2.0) || !nu.is_finite() {
        return Err(Error::Parameter(alloc::format!("omega_nu needs nu >= 2, got {nu}")));
    }
    if nu > 2.0 && !(tau < 1.0) {
        return Err(Error::Domain { point: tau });
    }
    if math::abs(tau) < TAYLOR_RADIUS {
        // second-order expansion around the removable singularity
        let (a1, a2) = if nu == 2.0 {
            (1.0 / 6.0, 1.0 / 24.0)
        } else if nu == 3.0 {
            (1.0 / 3.0, 0.25)
        } else if nu == 4.0 {
            (1.0 / 6.0, 1.0 / 12.0)
        } else {
            let p = 2.0 * (3.0 - nu) / (2.0 - nu);
            (-(p - 2.0) / 6.0, (p - 2.0) * (p - 3.0) / 24.0)
        };
        return Ok(0.5 + a1 * tau + a2 * tau * tau);
    }
    let t2 = tau * tau;
    let v = if nu == 2.0 {
        (math::exp_m1(tau) - tau) / t2
    } else if nu == 3.0 {
        (-tau - math::ln_1p(-tau)) / t2
    } else if nu == 4.0 {
        ((1.0 - tau) * math::ln_1p(-tau) + tau) / t2
    } else {
        let p = 2.0 * (3.0 - nu) / (2.0 - nu);
        let inner = (nu - 2.0) / (2.0 * (3.0 - nu) * tau) * math::exp_m1(p * math::ln_1p(-tau)) - 1.0;
        (nu - 2.0) / (4.0 - nu) / tau * inner
    };
    Ok(v)
}

/// `R_ν(τ)` for `ν ∈ [2, 3]`, `τ ∈ [0, 1)`.
pub fn r_nu(nu: f64, tau: f64) -> Result<f64> {
    if nu == 2.0 {
        return Ok((1.5 + tau / 3.0) * math::exp(tau));
    }
    if !(nu > 2.0 && nu <= 3.0) {
        return Err(Error::Unsupported(alloc::format!("R_nu is defined for nu in [2,3], got {nu}")));
    }
    if !(0.0..1.0).contains(&tau) {
        return Err(Error::Domain { point: tau });
    }
    let q = (4.0 - nu) / (nu - 2.0);
    if tau < TAYLOR_RADIUS {
        return Ok(0.5 * (q + 1.0) + (0.5 * q * (q + 1.0) - (q * q - 1.0) / 3.0) * tau);
    }
    let s = math::powf(1.0 - tau, q);
    Ok((1.0 - s - q * tau * s) / (q * tau * tau * s))
}
