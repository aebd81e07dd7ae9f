//! Preconditioned MINRES for symmetric, possibly indefinite systems.

use super::sparse::{axpy, dot};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct MinresReport {
    pub iterations: usize,
    /// Preconditioned residual norm relative to that of the right-hand side.
    pub relative_residual: f64,
}

/// Solves `A x = b` with a symmetric positive definite preconditioner `P ≈ A⁻¹`.
pub fn minres(
    apply: impl Fn(&[f64]) -> Vec<f64>,
    precond: impl Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, MinresReport)> {
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut r1 = b.to_vec();
    let mut y = precond(&r1);
    let beta1 = dot(&r1, &y);
    if beta1 < 0.0 {
        return Err(Error::IllConditioned("preconditioner is not positive definite".into()));
    }
    let beta1 = beta1.sqrt();
    if beta1 == 0.0 {
        return Ok((x, MinresReport { iterations: 0, relative_residual: 0.0 }));
    }
    let mut r2 = r1.clone();
    let (mut oldb, mut beta) = (0.0, beta1);
    let (mut dbar, mut epsln, mut phibar) = (0.0, 0.0, beta1);
    let (mut cs, mut sn) = (-1.0, 0.0);
    let mut w = vec![0.0; n];
    let mut w2 = vec![0.0; n];
    for itn in 1..=max_iter {
        let s = 1.0 / beta;
        let v: Vec<f64> = y.iter().map(|a| a * s).collect();
        let mut yv = apply(&v);
        if itn >= 2 {
            axpy(-beta / oldb, &r1, &mut yv);
        }
        let alfa = dot(&v, &yv);
        axpy(-alfa / beta, &r2, &mut yv);
        r1 = std::mem::replace(&mut r2, yv);
        y = precond(&r2);
        oldb = beta;
        let b2 = dot(&r2, &y);
        if b2 < 0.0 {
            return Err(Error::IllConditioned("preconditioner is not positive definite".into()));
        }
        beta = b2.sqrt();

        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = gbar.hypot(beta).max(f64::MIN_POSITIVE);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;

        let denom = 1.0 / gamma;
        let w1 = std::mem::replace(&mut w2, std::mem::take(&mut w));
        w = v.iter().zip(&w1).zip(&w2).map(|((vi, a), c)| (vi - oldeps * a - delta * c) * denom).collect();
        axpy(phi, &w, &mut x);

        let rel = phibar / beta1;
        if rel <= tol || beta == 0.0 {
            return Ok((x, MinresReport { iterations: itn, relative_residual: rel }));
        }
    }
    Err(Error::NoConvergence { iterations: max_iter, converged: 0, requested: 1, worst_residual: phibar / beta1 })
}
