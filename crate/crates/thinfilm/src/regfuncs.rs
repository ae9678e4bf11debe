//! Pointwise regularized mobility, second-order coefficient, entropy densities
//! and energy antiderivatives.
//!
//! Everything here is defined for strictly positive heights only; the
//! regularized flow keeps the film positive, so there is no sign branch.

use thiserror::Error;

use crate::params::DEGENERACY_TOL;
use crate::quad::{gauss_kronrod, QuadError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FnError {
    #[error("argument z = {0} outside the domain z > 0")]
    Domain(f64),
    #[error("degenerate denominator: exponent {0} lies in {{-1, -2}}")]
    DegenerateDenominator(f64),
    #[error("z^{0} is not integrable at the origin (need exponent > -1)")]
    NonIntegrableAtZero(f64),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

fn positive(z: f64) -> Result<f64, FnError> {
    if z > 0.0 && z.is_finite() {
        Ok(z)
    } else {
        Err(FnError::Domain(z))
    }
}

// Unchecked kernels, shared with the solver's inner loops.

#[inline]
pub(crate) fn f_eps_raw(z: f64, n: f64, s: f64, eps: f64) -> f64 {
    if eps == 0.0 {
        z.powf(n)
    } else {
        // z^(s+n) / (z^s + eps z^n), written to avoid overflow for large z
        z.powf(n) / (1.0 + eps * z.powf(n - s))
    }
}

#[inline]
pub(crate) fn f_eps_prime_raw(z: f64, n: f64, s: f64, eps: f64) -> f64 {
    let f = f_eps_raw(z, n, s, eps);
    if eps == 0.0 {
        return n * z.powf(n - 1.0);
    }
    n * f / z + eps * (s - n) * z.powf(-(s + 1.0)) * f * f
}

#[inline]
pub(crate) fn dpp_eps_raw(z: f64, m: f64, n: f64, eps: f64) -> f64 {
    let p = z.powf(m - n);
    if eps == 0.0 {
        p
    } else if p.is_infinite() {
        1.0 / eps
    } else {
        p / (1.0 + eps * p)
    }
}

#[inline]
pub(crate) fn dpp_eps_prime_raw(z: f64, m: f64, n: f64, eps: f64) -> f64 {
    let e = m - n;
    if e == 0.0 {
        return 0.0;
    }
    let p = z.powf(e);
    let denom = 1.0 + eps * p;
    e * z.powf(e - 1.0) / (denom * denom)
}

/// `f_eps(z) = z^(s+n) / (z^s + eps z^n)`; reduces to `z^n` at `eps = 0`.
pub fn f_eps(z: f64, n: f64, s: f64, eps: f64) -> Result<f64, FnError> {
    Ok(f_eps_raw(positive(z)?, n, s, eps))
}

/// Regularized mobility `f_eps(z) + delta`.
pub fn f_delta_eps(z: f64, n: f64, s: f64, eps: f64, delta: f64) -> Result<f64, FnError> {
    Ok(f_eps(z, n, s, eps)? + delta)
}

/// Closed-form derivative `n f/z + eps (s - n) z^-(s+1) f^2`.
pub fn f_eps_prime(z: f64, n: f64, s: f64, eps: f64) -> Result<f64, FnError> {
    Ok(f_eps_prime_raw(positive(z)?, n, s, eps))
}

/// Regularized second-order coefficient `z^(m-n) / (1 + eps z^(m-n))`.
pub fn dpp_eps(z: f64, m: f64, n: f64, eps: f64) -> Result<f64, FnError> {
    Ok(dpp_eps_raw(positive(z)?, m, n, eps))
}

/// Derivative of [`dpp_eps`] with respect to `z`.
pub fn dpp_eps_prime(z: f64, m: f64, n: f64, eps: f64) -> Result<f64, FnError> {
    Ok(dpp_eps_prime_raw(positive(z)?, m, n, eps))
}

fn near(x: f64, target: f64) -> bool {
    (x - target).abs() < DEGENERACY_TOL
}

/// Entropy density with second derivative `z^(beta - n)`.
pub fn g0_beta(z: f64, n: f64, beta: f64) -> Result<f64, FnError> {
    let z = positive(z)?;
    Ok(g0_beta_raw(z, n, beta))
}

pub(crate) fn g0_beta_raw(z: f64, n: f64, beta: f64) -> f64 {
    let q = beta - n;
    if near(q, -1.0) {
        z * z.ln() - z
    } else if near(q, -2.0) {
        -z.ln()
    } else {
        z.powf(q + 2.0) / ((q + 2.0) * (q + 1.0))
    }
}

/// `z^(alpha+m-n+2) / ((alpha+m-n+1)(alpha+m-n+2))`; `alpha = 0` gives the
/// classical potential of the second-order term.
pub fn dtilde0(z: f64, alpha: f64, m: f64, n: f64) -> Result<f64, FnError> {
    if !(z >= 0.0 && z.is_finite()) {
        return Err(FnError::Domain(z));
    }
    let w = alpha + m - n;
    if near(w, -1.0) || near(w, -2.0) {
        return Err(FnError::DegenerateDenominator(w));
    }
    if z == 0.0 {
        // the power vanishes for w + 2 > 0; otherwise it is unbounded
        return if w + 2.0 > 0.0 { Ok(0.0) } else { Err(FnError::Domain(z)) };
    }
    Ok(z.powf(w + 2.0) / ((w + 1.0) * (w + 2.0)))
}

/// Double antiderivative of `z^alpha D''_eps(z)` with `D(0) = D'(0) = 0`:
///
/// `D~_eps(z) = int_0^z (z - u) u^alpha D''_eps(u) du`.
///
/// The substitution `u = z v^k`, `k = 1/(w+1)` with `w = alpha + m - n`
/// removes the algebraic endpoint singularity, leaving
/// `z^(w+2) k int_0^1 (1 - v^k) / (1 + eps z^(m-n) v^(k(m-n))) dv`.
pub fn dtilde_eps(z: f64, alpha: f64, m: f64, n: f64, eps: f64) -> Result<f64, FnError> {
    if !(z >= 0.0 && z.is_finite()) {
        return Err(FnError::Domain(z));
    }
    let w = alpha + m - n;
    if w <= -1.0 {
        return Err(FnError::NonIntegrableAtZero(w));
    }
    if z == 0.0 {
        return Ok(0.0);
    }
    let k = 1.0 / (w + 1.0);
    let p = m - n;
    let scale = eps * z.powf(p);
    let integrand = |v: f64| {
        let vk = v.powf(k);
        let sat = if scale == 0.0 { 0.0 } else { scale * v.powf(k * p) };
        if sat.is_infinite() {
            0.0
        } else {
            (1.0 - vk) / (1.0 + sat)
        }
    };
    let (integral, _) = gauss_kronrod(integrand, 0.0, 1.0, 1e-13, 1e-13)?;
    Ok(z.powf(w + 2.0) * k * integral)
}
