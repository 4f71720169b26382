//! Forward-Euler stepping for the finite-difference models.

use crate::error::{Error, Result};

/// Returns `r = nu dt / dx^2`, rejecting `r >= 1/2`.
pub fn check_cfl(nu: f64, dt: f64, dx: f64) -> Result<f64> {
    let ratio = nu * dt / (dx * dx);
    if ratio.is_finite() && ratio < 0.5 {
        Ok(ratio)
    } else {
        Err(Error::CflViolation { ratio })
    }
}

/// `u <- u + dt * rhs(u)`.
pub fn explicit_fd_step<F>(u: &mut [f64], dt: f64, scratch: &mut [f64], mut rhs: F) -> Result<()>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<()>,
{
    rhs(u, scratch)?;
    for (v, d) in u.iter_mut().zip(scratch.iter()) {
        *v += dt * d;
    }
    Ok(())
}
