//! Shift-invert block Lanczos for `K x = λ M x` with `K` symmetric positive
//! semidefinite and `M` symmetric positive definite.

use super::assemble::DiscreteOperator;
use super::factor::Factorization;
use super::sparse::{axpy, dot, CsrMatrix};
use crate::error::{Error, Result};
use faer::{Mat, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug, PartialEq)]
pub struct SolverOptions {
    pub nev: usize,
    /// `None` asks for the lowest eigenvalues, `Some(s)` for those nearest `s`.
    pub shift: Option<f64>,
    /// Relative tolerance on `‖Kx − λMx‖_{M⁻¹} / (|λ| + 1)`.
    pub tol: f64,
    pub seed: u64,
    pub block: usize,
    /// Basis size that triggers a thick restart; 0 picks a default from `nev`.
    pub max_basis: usize,
    pub max_iterations: usize,
}

impl SolverOptions {
    pub fn new(nev: usize) -> Self {
        Self { nev, shift: None, tol: 1e-9, seed: 0, block: 4, max_basis: 0, max_iterations: 400 }
    }

    pub fn with_shift(mut self, shift: f64) -> Self {
        self.shift = Some(shift);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }
}

/// Eigenpairs of a discrete operator, ascending in `λ`.
#[derive(Clone, Debug)]
pub struct SpectralResult {
    pub eigenvalues: Vec<f64>,
    /// Mass-orthonormal dof vectors.
    pub eigenvectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    /// `(∫_base |u|², ∫_cusp |u|²)` per pair.
    pub region_masses: Vec<(f64, f64)>,
    pub iterations: usize,
}

impl SpectralResult {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }
}

/// Shift used for the lowest eigenvalues; any negative value keeps `K − σM` definite.
const LOWEST_SHIFT: f64 = -1.0;

/// Solves for `opts.nev` eigenpairs of the operator.
pub fn solve(op: &DiscreteOperator, opts: &SolverOptions) -> Result<SpectralResult> {
    let (eigenvalues, eigenvectors, residuals, iterations) = solve_pencil(&op.stiffness, &op.mass, opts)?;
    let region_masses = eigenvectors.iter().map(|x| op.region_masses(x)).collect();
    Ok(SpectralResult { eigenvalues, eigenvectors, residuals, region_masses, iterations })
}

/// Factors `K − σM`, retrying once at a perturbed shift.
fn factor_shifted(k: &CsrMatrix, m: &CsrMatrix, sigma: f64, definite: bool) -> Result<(Factorization, f64)> {
    let attempt = |s: f64| {
        let a = k.lin_comb(1.0, m, -s);
        if definite {
            Factorization::cholesky(&a)
        } else {
            Factorization::lu(&a)
        }
    };
    match attempt(sigma) {
        Ok(f) => Ok((f, sigma)),
        Err(first) => {
            let s = sigma + 1e-6 * (sigma.abs() + 1.0);
            attempt(s).map(|f| (f, s)).map_err(|_| {
                Error::Factorization(format!("shifted operator singular at σ = {sigma} and {s}: {first}"))
            })
        }
    }
}

struct Basis<'a> {
    m: &'a CsrMatrix,
    v: Vec<Vec<f64>>,
    mv: Vec<Vec<f64>>,
}

impl Basis<'_> {
    /// M-orthogonalizes `x` against the basis twice and normalizes it.
    /// Returns `false` when `x` lies in the span to working precision.
    fn push(&mut self, mut x: Vec<f64>) -> bool {
        let norm0 = self.m.bilinear(&x, &x).sqrt();
        if norm0 == 0.0 || !norm0.is_finite() {
            return false;
        }
        for _ in 0..2 {
            for (v, mv) in self.v.iter().zip(&self.mv) {
                let c = dot(mv, &x);
                axpy(-c, v, &mut x);
            }
        }
        let mx = self.m.mul(&x);
        let norm = dot(&x, &mx).sqrt();
        if !(norm > 1e-10 * norm0) {
            return false;
        }
        let inv = 1.0 / norm;
        self.v.push(x.iter().map(|a| a * inv).collect());
        self.mv.push(mx.iter().map(|a| a * inv).collect());
        true
    }

    fn len(&self) -> usize {
        self.v.len()
    }

    fn combine(vecs: &[Vec<f64>], coef: impl Fn(usize) -> f64) -> Vec<f64> {
        let mut out = vec![0.0; vecs[0].len()];
        for (i, v) in vecs.iter().enumerate() {
            let c = coef(i);
            if c != 0.0 {
                axpy(c, v, &mut out);
            }
        }
        out
    }
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Symmetric eigendecomposition of the leading `m × m` block of `t`.
fn ritz(t: &[Vec<f64>], m: usize) -> Result<(Vec<f64>, Mat<f64>)> {
    let a = Mat::<f64>::from_fn(m, m, |i, j| 0.5 * (t[i][j] + t[j][i]));
    let eig = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::IllConditioned(format!("Rayleigh-Ritz eigensolve failed: {e:?}")))?;
    let s = eig.S().column_vector();
    Ok(((0..m).map(|i| s[i]).collect(), eig.U().to_owned()))
}

/// Makes the sign of a vector deterministic: positive mean, or a positive
/// largest entry when the mean vanishes.
fn fix_sign(x: &mut [f64], mx: &[f64]) {
    let mean: f64 = mx.iter().sum();
    let scale: f64 = mx.iter().map(|a| a.abs()).sum();
    let flip = if mean.abs() > 1e-8 * scale {
        mean < 0.0
    } else {
        let big = x.iter().cloned().fold(0.0f64, |a, b| if b.abs() > a.abs() { b } else { a });
        big < 0.0
    };
    if flip {
        x.iter_mut().for_each(|a| *a = -*a);
    }
}

type Pairs = (Vec<f64>, Vec<Vec<f64>>, Vec<f64>, usize);

/// Eigenpairs of the pencil `(K, M)`: values, M-orthonormal vectors,
/// relative dual-norm residuals and the iteration count.
pub fn solve_pencil(k: &CsrMatrix, m: &CsrMatrix, opts: &SolverOptions) -> Result<Pairs> {
    let n = k.n;
    let nev = opts.nev;
    if nev == 0 || nev > n {
        return Err(Error::Config(format!("nev = {nev} must lie in 1..={n}")));
    }
    let b = opts.block.clamp(1, n);
    let max_basis = if opts.max_basis > 0 { opts.max_basis } else { (3 * nev).max(nev + 4 * b) + 2 * b };
    let max_basis = max_basis.max(nev + 2 * b).min(n);

    let (fact, sigma) = match opts.shift {
        None => factor_shifted(k, m, LOWEST_SHIFT, true)?,
        Some(s) => factor_shifted(k, m, s, false)?,
    };
    // Residuals are measured in the dual W^{1,2} norm `‖r‖_{(K+M)⁻¹}`, which
    // stays well scaled on graded meshes where `M` has tiny entries.
    let dual_fact = if sigma == -1.0 { None } else { Some(Factorization::cholesky(&k.lin_comb(1.0, m, 1.0))?) };
    let dual_fact = dual_fact.as_ref().unwrap_or(&fact);
    let apply = |x: &[f64]| {
        let mut y = m.mul(x);
        fact.solve_in_place(&mut y);
        y
    };
    // Larger key is a better target.
    let key = |theta: f64| if opts.shift.is_none() { theta } else { theta.abs() };

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut basis = Basis { m, v: Vec::new(), mv: Vec::new() };
    while basis.len() < b {
        basis.push(random_vector(&mut rng, n));
    }
    let mut t: Vec<Vec<f64>> = Vec::new();
    let mut done = 0;
    let mut worst = f64::INFINITY;
    let mut converged = 0;

    for iteration in 1..=opts.max_iterations {
        // Expand: apply the operator to the frontier block.
        let total = basis.len();
        for row in &mut t {
            row.resize(total, 0.0);
        }
        t.resize(total, vec![0.0; total]);
        let mut candidates = Vec::with_capacity(total - done);
        for i in done..total {
            let w = apply(&basis.v[i]);
            for j in 0..total {
                let c = dot(&basis.mv[j], &w);
                t[j][i] = c;
                t[i][j] = c;
            }
            candidates.push(w);
        }
        done = total;

        // Rayleigh-Ritz on the completed block.
        let (theta, y) = ritz(&t, done)?;
        let mut order: Vec<usize> = (0..done).collect();
        order.sort_by(|&a, &c| key(theta[c]).total_cmp(&key(theta[a])).then(a.cmp(&c)));

        if done >= nev + b.min(n - nev) || done == n {
            let mut pairs = Vec::with_capacity(nev);
            worst = 0.0;
            converged = 0;
            for &idx in order.iter().take(nev) {
                let x = Basis::combine(&basis.v, |i| y[(i, idx)]);
                let lambda = sigma + 1.0 / theta[idx];
                let mx = m.mul(&x);
                let mut r = k.mul(&x);
                axpy(-lambda, &mx, &mut r);
                let z = dual_fact.solve(&r);
                let res = dot(&r, &z).max(0.0).sqrt() / (lambda.abs() + 1.0);
                worst = worst.max(res);
                if res <= opts.tol {
                    converged += 1;
                }
                pairs.push((lambda, x, mx, res));
            }
            if converged == nev {
                pairs.sort_by(|a, c| a.0.total_cmp(&c.0));
                let mut vals = Vec::with_capacity(nev);
                let mut vecs = Vec::with_capacity(nev);
                let mut res = Vec::with_capacity(nev);
                for (lambda, mut x, mx, r) in pairs {
                    fix_sign(&mut x, &mx);
                    vals.push(lambda);
                    vecs.push(x);
                    res.push(r);
                }
                return Ok((vals, vecs, res, iteration));
            }
        }
        if done == n {
            break;
        }

        // Thick restart: keep the best Ritz vectors, whose operator images
        // stay in the span of the kept vectors and the new frontier.
        if done + b > max_basis {
            let keep = (nev + b).min(done);
            let kept: Vec<usize> = order[..keep].to_vec();
            let v: Vec<Vec<f64>> = kept.iter().map(|&c| Basis::combine(&basis.v, |i| y[(i, c)])).collect();
            let mv: Vec<Vec<f64>> = kept.iter().map(|&c| Basis::combine(&basis.mv, |i| y[(i, c)])).collect();
            // The old frontier images are orthogonalized against the full
            // basis before it is truncated.
            let mut fresh = Basis { m, v: basis.v.clone(), mv: basis.mv.clone() };
            let before = fresh.len();
            for w in candidates.drain(..) {
                fresh.push(w);
            }
            candidates = fresh.v.split_off(before);
            basis = Basis { m, v, mv };
            t = (0..keep).map(|i| (0..keep).map(|j| if i == j { theta[kept[i]] } else { 0.0 }).collect()).collect();
            done = keep;
        }

        // New frontier block.
        let before = basis.len();
        for w in candidates {
            if basis.len() - before < b {
                basis.push(w);
            }
        }
        while basis.len() == before && basis.len() < n {
            // Invariant subspace reached: continue with a fresh random direction.
            basis.push(random_vector(&mut rng, n));
        }
    }
    Err(Error::NoConvergence { iterations: opts.max_iterations, converged, requested: nev, worst_residual: worst })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize) -> (CsrMatrix, CsrMatrix) {
        let h = 1.0 / (n + 1) as f64;
        let mut k = Vec::new();
        let mut m = Vec::new();
        for i in 0..n {
            k.push((i, i, 2.0 / h));
            m.push((i, i, 4.0 * h / 6.0));
            if i + 1 < n {
                k.push((i, i + 1, -1.0 / h));
                k.push((i + 1, i, -1.0 / h));
                m.push((i, i + 1, h / 6.0));
                m.push((i + 1, i, h / 6.0));
            }
        }
        (CsrMatrix::from_triplets(n, k), CsrMatrix::from_triplets(n, m))
    }

    /// Exact eigenvalues of the P1 Dirichlet Laplacian on a uniform 1-D grid.
    fn exact_1d(n: usize, j: usize) -> f64 {
        let h = 1.0 / (n + 1) as f64;
        let c = (j as f64 * std::f64::consts::PI * h).cos();
        6.0 / (h * h) * (1.0 - c) / (2.0 + c)
    }

    #[test]
    fn lowest_modes_of_a_string() {
        let (k, m) = laplacian_1d(300);
        let (vals, vecs, res, _) = solve_pencil(&k, &m, &SolverOptions::new(5)).unwrap();
        for j in 0..5 {
            assert!((vals[j] - exact_1d(300, j + 1)).abs() < 1e-9 * vals[j], "{j}: {}", vals[j]);
            assert!(res[j] <= 1e-9);
            assert!((m.bilinear(&vecs[j], &vecs[j]) - 1.0).abs() < 1e-10);
        }
        assert!(m.bilinear(&vecs[0], &vecs[3]).abs() < 1e-10);
    }

    #[test]
    fn interior_modes_near_a_shift() {
        let (k, m) = laplacian_1d(200);
        let target = exact_1d(200, 10) + 1.0;
        let opts = SolverOptions::new(3).with_shift(target);
        let (vals, _, _, _) = solve_pencil(&k, &m, &opts).unwrap();
        for (v, j) in vals.iter().zip(9..12) {
            assert!((v - exact_1d(200, j)).abs() < 1e-8 * v);
        }
    }

    #[test]
    fn restarts_still_converge() {
        let (k, m) = laplacian_1d(400);
        let opts = SolverOptions { block: 2, max_basis: 14, ..SolverOptions::new(8) };
        let (vals, _, _, _) = solve_pencil(&k, &m, &opts).unwrap();
        for j in 0..8 {
            assert!((vals[j] - exact_1d(400, j + 1)).abs() < 1e-8 * vals[j]);
        }
    }

    #[test]
    fn whole_spectrum_of_a_tiny_problem() {
        let (k, m) = laplacian_1d(6);
        let (vals, _, _, _) = solve_pencil(&k, &m, &SolverOptions::new(6)).unwrap();
        for j in 0..6 {
            assert!((vals[j] - exact_1d(6, j + 1)).abs() < 1e-9 * vals[j]);
        }
    }

    #[test]
    fn fixed_seed_is_bitwise_reproducible() {
        let (k, m) = laplacian_1d(150);
        let opts = SolverOptions::new(4).with_seed(7);
        let a = solve_pencil(&k, &m, &opts).unwrap();
        let b = solve_pencil(&k, &m, &opts).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
    }
}
