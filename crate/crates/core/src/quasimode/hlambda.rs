use super::green::GreenData;
use crate::error::{Error, Result};
use crate::fem::{axpy, dot, minres, solve, DiscreteOperator, Factorization, MinresReport, SolverOptions};
use crate::geometry::{BaseSurface, ChartedMesh};
use std::f64::consts::PI;

/// Fraction of `λ₁(Σ)` kept clear at both ends of the admissible λ window.
pub const WINDOW_MARGIN: f64 = 0.2;

/// The discrete first eigenspace of a closed base surface.
#[derive(Clone, Debug)]
pub struct FirstEigenspace {
    /// Discrete eigenvalues of the cluster, ascending.
    pub eigenvalues: Vec<f64>,
    /// Raw mass-orthonormal eigenvectors of the cluster.
    pub eigenvectors: Vec<Vec<f64>>,
    /// Orthonormal recombination of the eigenvectors in which only the first
    /// vector may be nonzero at the pole, and it is nonnegative there.
    pub basis: Vec<Vec<f64>>,
    /// Values of `basis` at the pole.
    pub pole_values: Vec<f64>,
    /// Rayleigh quotients of `basis`.
    pub basis_eigenvalues: Vec<f64>,
    /// Exact `λ₁(Σ)` and the next distinct exact eigenvalue `λ_{K+1}(Σ)`.
    pub lambda1: f64,
    pub lambda_next: f64,
}

impl FirstEigenspace {
    pub fn multiplicity(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `[δ₀, λ_{K+1}(Σ) − δ₀]` with `δ₀ = WINDOW_MARGIN · λ₁(Σ)`.
    pub fn window(&self) -> (f64, f64) {
        let d = WINDOW_MARGIN * self.lambda1;
        (d, self.lambda_next - d)
    }

    pub fn check_window(&self, lambda: f64) -> Result<()> {
        let (lo, hi) = self.window();
        if lambda < lo || lambda > hi {
            return Err(Error::Domain(format!("λ = {lambda} lies outside the admissible window [{lo}, {hi}]")));
        }
        Ok(())
    }
}

/// Computes the discrete eigenspace of `λ₁(Σ)` and rotates it so that all
/// but the first basis vector vanish at the pole dof.
pub fn first_eigenspace(op: &DiscreteOperator, surface: &BaseSurface, pole_dof: usize, seed: u64) -> Result<FirstEigenspace> {
    let k = surface.first_multiplicity();
    let exact = surface.exact_eigenvalues(k + 12);
    // Whole clusters converge faster than a request that splits one.
    let nev = exact.iter().filter(|&&l| l <= exact[k + 1] * (1.0 + 1e-9)).count() + 1;
    let res = solve(op, &SolverOptions::new(nev).with_seed(seed))?;
    let eigenvalues = res.eigenvalues[1..=k].to_vec();
    let eigenvectors = res.eigenvectors[1..=k].to_vec();
    if (res.eigenvalues[k + 1] - eigenvalues[k - 1]).abs() < 0.05 * exact[1] {
        return Err(Error::Multiplicity(format!(
            "the discrete first cluster {eigenvalues:?} is not separated from {}",
            res.eigenvalues[k + 1]
        )));
    }
    let v: Vec<f64> = eigenvectors.iter().map(|e| e[pole_dof]).collect();
    let norm = dot(&v, &v).sqrt();
    // Householder reflection taking e₀ to v/|v|; its columns form the rotation.
    let q: Vec<Vec<f64>> = if norm < 1e-14 {
        (0..k).map(|j| (0..k).map(|i| if i == j { 1.0 } else { 0.0 }).collect()).collect()
    } else {
        let mut w: Vec<f64> = v.iter().map(|x| x / norm).collect();
        w[0] -= 1.0;
        let ww = dot(&w, &w);
        (0..k)
            .map(|j| {
                (0..k)
                    .map(|i| {
                        let id = if i == j { 1.0 } else { 0.0 };
                        if ww < 1e-30 {
                            id
                        } else {
                            id - 2.0 * w[i] * w[j] / ww
                        }
                    })
                    .collect()
            })
            .collect()
    };
    let n = op.dim();
    let basis: Vec<Vec<f64>> = q
        .iter()
        .map(|col| {
            let mut b = vec![0.0; n];
            for (c, e) in col.iter().zip(&eigenvectors) {
                axpy(*c, e, &mut b);
            }
            b
        })
        .collect();
    let basis_eigenvalues = q.iter().map(|col| col.iter().zip(&eigenvalues).map(|(c, l)| c * c * l).sum()).collect();
    let mut pole_values: Vec<f64> = basis.iter().map(|b| b[pole_dof]).collect();
    for p in pole_values.iter_mut().skip(1) {
        if p.abs() < 1e-13 {
            *p = 0.0;
        }
    }
    Ok(FirstEigenspace {
        eigenvalues,
        eigenvectors,
        basis,
        pole_values,
        basis_eigenvalues,
        lambda1: exact[1],
        lambda_next: exact[k + 1],
    })
}

/// `H_λ = G + u_λ` on a closed base surface.
#[derive(Clone, Debug)]
pub struct HLambda {
    pub lambda: f64,
    /// `u_λ`, solving `(K − λM)u = λMf + M1/area` orthogonally to the
    /// eigenspace, with `f = G_h − Σ⟨G_h, φ_i⟩φ_i`.
    pub smooth: Vec<f64>,
    /// `G_h + u_λ`; satisfies `(K − λM)H = e_{x₀} − λ Σ c_i Mφ_i` exactly.
    pub discrete: Vec<f64>,
    /// `c_i = ⟨G_h, φ_i⟩` for the raw eigenvectors.
    pub projections: Vec<f64>,
    /// Regular value `e_λ(x₀) = lim (H − (1/2π)log(1/r))`.
    pub e_lambda: f64,
    pub minres: MinresReport,
}

impl HLambda {
    /// `e_{ε,λ} = 2π e_λ(x₀) / log(1/ε^k)` for a hole of radius `ε^k`.
    pub fn e_eps_lambda(&self, hole_radius: f64) -> f64 {
        2.0 * PI * self.e_lambda / (1.0 / hole_radius).ln()
    }

    /// `H = G + u` in split form at a dof; `+∞` at the pole.
    pub fn split_value(&self, green: &GreenData, dof: usize) -> f64 {
        green.values[dof] + self.smooth[dof]
    }

    /// Smooth part `H − (1/2π)log(1/r)` at a dof of the pole chart.
    pub fn regular_value(&self, green: &GreenData, dof: usize) -> f64 {
        green.regular_part[dof] + self.smooth[dof]
    }
}

/// Solves for `H_λ` on the closed base mesh of `green`.
pub fn h_lambda(
    mesh: &ChartedMesh,
    op: &DiscreteOperator,
    surface: &BaseSurface,
    green: &GreenData,
    space: &FirstEigenspace,
    lambda: f64,
) -> Result<HLambda> {
    space.check_window(lambda)?;
    let n = op.dim();
    let mphi: Vec<Vec<f64>> = space.eigenvectors.iter().map(|e| op.mass.mul(e)).collect();
    let projections: Vec<f64> = mphi.iter().map(|m| dot(m, &green.discrete)).collect();
    let mut f = green.discrete.clone();
    for (c, e) in projections.iter().zip(&space.eigenvectors) {
        axpy(-c, e, &mut f);
    }
    let m1 = op.mass.mul(&vec![1.0; n]);
    let mut b = op.mass.mul(&f);
    b.iter_mut().for_each(|x| *x *= lambda);
    axpy(green.area_norm, &m1, &mut b);

    let gamma = space.lambda1 + 1.0;
    let apply = |x: &[f64]| {
        let mut y = op.stiffness.mul(x);
        axpy(-lambda, &op.mass.mul(x), &mut y);
        for m in &mphi {
            axpy(gamma * dot(m, x), m, &mut y);
        }
        y
    };
    let pre = Factorization::cholesky(&op.stiffness.lin_comb(1.0, &op.mass, 1.0))?;
    let (mut u, report) = minres(apply, |r| pre.solve(r), &b, 1e-13, 20 * n.max(100)).map_err(|e| match e {
        Error::NoConvergence { worst_residual, .. } => Error::IllConditioned(format!(
            "λ = {lambda} is too close to an eigenvalue outside the deflated space (relative residual {worst_residual:.2e})"
        )),
        other => other,
    })?;
    // The exact solution is orthogonal to the eigenspace; remove round-off.
    for (m, e) in mphi.iter().zip(&space.eigenvectors) {
        axpy(-dot(m, &u), e, &mut u);
    }
    let discrete: Vec<f64> = green.discrete.iter().zip(&u).map(|(g, x)| g + x).collect();
    let mut h = HLambda { lambda, smooth: u, discrete, projections, e_lambda: 0.0, minres: report };
    h.e_lambda = ring_extrapolation(mesh, op, surface, green, &h);
    Ok(h)
}

/// Averages the smooth part of `H` over the first three vertex rings around
/// the pole and extrapolates `a + b r²` to `r = 0`.
fn ring_extrapolation(mesh: &ChartedMesh, op: &DiscreteOperator, surface: &BaseSurface, green: &GreenData, h: &HLambda) -> f64 {
    let radii = GreenData::dof_radii(mesh, op, surface, green.pole);
    let mut pts: Vec<(f64, f64)> = radii
        .iter()
        .enumerate()
        .filter_map(|(d, r)| r.filter(|&r| r > 0.0).map(|r| (r, h.regular_value(green, d))))
        .collect();
    pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut rings: Vec<(f64, f64, usize)> = Vec::new();
    for (r, s) in pts {
        match rings.last_mut() {
            Some(last) if (r - last.0).abs() <= 1e-9 * last.0 => {
                last.1 += s;
                last.2 += 1;
            }
            _ => {
                if rings.len() == 3 {
                    break;
                }
                rings.push((r, s, 1));
            }
        }
    }
    let xs: Vec<f64> = rings.iter().map(|r| r.0 * r.0).collect();
    let ys: Vec<f64> = rings.iter().map(|r| r.1 / r.2 as f64).collect();
    let m = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    my - slope * mx
}
