use super::cutoff::{log_cutoff_unchecked, ramp};
use super::green::{log_kernel, GreenData};
use super::hlambda::{h_lambda, FirstEigenspace, HLambda};
use super::problem::{GluedProblem, GluedVertex};
use crate::cusp::{Attachment, CuspMode};
use crate::error::{Error, Result};
use crate::fem::{dot, solve_pencil, CsrMatrix, DualNorm, SolverOptions};
use crate::geometry::{vertex_at, ChartPoint};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QuasimodeKind {
    /// Extension of the given base eigenfunction.
    SurfaceExtension(usize),
    /// Green's-function extension of the given rotationally symmetric cusp mode.
    CuspExtension(usize),
}

impl QuasimodeKind {
    pub fn name(&self) -> &'static str {
        match self {
            QuasimodeKind::SurfaceExtension(_) => "surface",
            QuasimodeKind::CuspExtension(_) => "cusp",
        }
    }

    pub fn index(&self) -> usize {
        match *self {
            QuasimodeKind::SurfaceExtension(i) | QuasimodeKind::CuspExtension(i) => i,
        }
    }
}

/// A test function on the glued surface with small eigen-defect.
#[derive(Clone, Debug)]
pub struct Quasimode {
    pub kind: QuasimodeKind,
    /// Dof vector on the glued operator.
    pub values: Vec<f64>,
    pub target_lambda: f64,
    /// Dual `W^{1,2}` norm of `(Δ − λ)` applied to `values`.
    pub delta: f64,
    pub l2_norm: f64,
    /// Closed-form flux `a_{ε,κ,l}` of the cusp mode.
    pub a: Option<f64>,
    pub e_lambda: Option<f64>,
    pub e_eps_lambda: Option<f64>,
}

impl Quasimode {
    /// `∫∇q·∇w − λ∫q w` for a test dof vector `w`.
    pub fn defect_against(&self, problem: &GluedProblem, w: &[f64]) -> f64 {
        problem.op.stiffness.bilinear(&self.values, w) - self.target_lambda * problem.op.mass.bilinear(&self.values, w)
    }
}

fn marked_value(problem: &GluedProblem, field: &[f64], p: ChartPoint) -> Result<f64> {
    let v = vertex_at(&problem.filled, p).ok_or_else(|| Error::Domain("marked point is not a vertex of the filled mesh".into()))?;
    Ok(field[problem.filled_dof(v)])
}

/// Radii `(ε^k, ε^{k/2})` of the log cut-off annulus.
pub fn cutoff_radii(problem: &GluedProblem) -> (f64, f64) {
    let r_in = problem.params.hole_radius();
    (r_in, problem.params.epsilon.powf(0.5 * problem.params.k as f64))
}

/// `φ̃`: the base eigenfunction `phi` (a dof vector on the filled mesh) outside
/// the cut-off annuli, log-interpolated to its pole values across them, and
/// equal to `φ(x₀)` on a cross cap or ramped from `φ(x₀)` to `φ(x₁)` along a
/// cylinder.
pub fn surface_extension(problem: &GluedProblem, phi: &[f64], lambda: f64, index: usize) -> Result<Quasimode> {
    let (r_in, r_out) = cutoff_radii(problem);
    let marks = &problem.surface.marked_points;
    let pole_values: Vec<f64> = marks.iter().map(|&p| marked_value(problem, phi, p)).collect::<Result<_>>()?;
    let params = problem.params;
    let values = problem.field(|_, gv| match gv {
        GluedVertex::Base { filled } => {
            let vert = problem.filled.vertices[filled];
            let mut val = phi[problem.filled_dof(filled)];
            for (c, pv) in marks.iter().zip(&pole_values) {
                if let Some(r) = problem.surface.distance(*c, &vert) {
                    if r < r_out {
                        let eta = log_cutoff_unchecked(r, r_in, r_out);
                        val = eta * val + (1.0 - eta) * pv;
                    }
                }
            }
            val
        }
        GluedVertex::Cusp { y } => match params.attachment {
            Attachment::CrossCap => pole_values[0],
            Attachment::Cylinder => {
                let rho = ramp(&params, y);
                rho * pole_values[1] + (1.0 - rho) * pole_values[0]
            }
        },
    });
    let dn = DualNorm::new(&problem.op)?;
    Ok(Quasimode {
        kind: QuasimodeKind::SurfaceExtension(index),
        delta: dn.residual(&values, lambda),
        l2_norm: problem.op.mass_norm(&values),
        values,
        target_lambda: lambda,
        a: None,
        e_lambda: None,
        e_eps_lambda: None,
    })
}

/// `φ̃` for the `index`-th vector of the rotated first eigenspace, at its
/// discrete Rayleigh quotient.
pub fn surface_quasimode(problem: &GluedProblem, space: &FirstEigenspace, index: usize) -> Result<Quasimode> {
    let phi = space
        .basis
        .get(index)
        .ok_or_else(|| Error::Domain(format!("eigenspace has {} vectors, asked for {index}", space.basis.len())))?;
    surface_extension(problem, phi, space.basis_eigenvalues[index], index)
}

/// The `l`-th rotationally symmetric Dirichlet mode of the cusp mesh alone:
/// eigenvalue and values per cusp-mesh vertex, signed like the closed form.
///
/// The cusp mesh is invariant under a shift by one column, so θ-independent
/// fields form an invariant subspace of the discrete operator. The mode is
/// computed from the restriction of the pencil to that subspace and is a
/// discrete eigenvector of the two-dimensional operator. On that subspace
/// every triangle has a purely radial gradient, so the restricted stiffness
/// is the one-dimensional form `∫ C f'² dy` (`C` the chart circumference).
/// It is assembled directly: summing the two-dimensional rows would cancel
/// angular couplings that exceed the radial ones by the squared aspect ratio.
pub fn discrete_cusp_mode(problem: &GluedProblem, l: usize, seed: u64) -> Result<(f64, Vec<f64>)> {
    let op = problem.cusp_dirichlet_operator()?;
    let cols = problem.mesh_spec.n_theta + 1;
    let mut row_of_dof = vec![usize::MAX; op.dim()];
    for v in 0..problem.cusp.vertices.len() {
        if let Some(d) = op.dof_of_vertex(v) {
            row_of_dof[d] = v / cols;
        }
    }
    let mut rows: Vec<usize> = row_of_dof.clone();
    rows.sort_unstable();
    rows.dedup();
    let index = |d: usize| rows.binary_search(&row_of_dof[d]).expect("every dof has a row");
    let restrict = |a: &CsrMatrix| {
        let mut trips = Vec::with_capacity(3 * rows.len());
        for i in 0..a.n {
            for (k, v) in a.row(i) {
                trips.push((index(i), index(k), v));
            }
        }
        CsrMatrix::from_triplets(rows.len(), trips)
    };
    let cusp = &problem.cusp;
    let width = cusp.vertices[cols - 1].u - cusp.vertices[0].u;
    let mut trips = Vec::new();
    for j in 0..cusp.vertices.len() / cols - 1 {
        let c = width / (cusp.vertices[(j + 1) * cols].v - cusp.vertices[j * cols].v);
        let (lo, hi) = (rows.binary_search(&j).ok(), rows.binary_search(&(j + 1)).ok());
        for (a, b, v) in [(lo, lo, c), (hi, hi, c), (lo, hi, -c), (hi, lo, -c)] {
            if let (Some(a), Some(b)) = (a, b) {
                trips.push((a, b, v));
            }
        }
    }
    let k1 = CsrMatrix::from_triplets(rows.len(), trips);
    let m1 = restrict(&op.mass);
    let (vals, vecs, _, _) = solve_pencil(&k1, &m1, &SolverOptions::new(l + 1).with_seed(seed))?;
    let mode = CuspMode::for_attachment(&problem.params.geometry(), problem.params.attachment, l);
    let lambda = vals[l];
    if (lambda - mode.eigenvalue).abs() > 0.05 * mode.eigenvalue {
        return Err(Error::Domain(format!(
            "discrete cusp eigenvalue {lambda} is not the rotationally symmetric mode {l} ({}); refine the cusp mesh",
            mode.eigenvalue
        )));
    }
    let dofs: Vec<f64> = (0..op.dim()).map(|d| vecs[l][index(d)]).collect();
    let mut values = op.to_vertices(&dofs);
    let reference: Vec<f64> = problem.cusp.vertices.iter().map(|v| mode.value(v.v, true).unwrap_or(0.0)).collect();
    if dot(&values, &reference) < 0.0 {
        values.iter_mut().for_each(|x| *x = -*x);
    }
    Ok((lambda, values))
}

/// Everything needed to build cusp quasimodes on one glued surface.
pub struct CuspQuasimodeInputs<'a> {
    pub green: &'a GreenData,
    pub space: &'a FirstEigenspace,
    pub seed: u64,
}

/// `ψ̃` for the `l`-th cusp mode: `a·H_λ` on the base away from the holes,
/// `a(ηH_λ + (1 − η)(L + e_λ))` on the cut-off annulus, and the discrete cusp
/// mode plus `a(L(ε^k) + e_λ)` on the cusp. On a cylinder the constant is
/// ramped to `a H_λ(x₁)` towards the short circle, and `H_λ` is blended to
/// `H_λ(x₁)` around `x₁`.
///
/// The cusp part is the discrete eigenvector of the cusp mesh and `λ` its
/// discrete eigenvalue, so that the mesh error of the mode does not enter
/// the defect; `a` is the closed form.
pub fn cusp_quasimode(problem: &GluedProblem, inputs: &CuspQuasimodeInputs, l: usize) -> Result<(Quasimode, HLambda)> {
    let params = problem.params;
    let mode = CuspMode::for_attachment(&params.geometry(), params.attachment, l);
    inputs.space.check_window(mode.eigenvalue)?;
    let (lambda, psi) = discrete_cusp_mode(problem, l, inputs.seed)?;
    let hl = h_lambda(&problem.filled, &problem.filled_op, &problem.surface, inputs.green, inputs.space, lambda)?;
    let a = mode.flux_long;
    let e = hl.e_lambda;
    let (r_in, r_out) = cutoff_radii(problem);
    let marks = &problem.surface.marked_points;
    let h_at = |filled: usize| hl.split_value(inputs.green, problem.filled_dof(filled));
    let h_x1 = match params.attachment {
        Attachment::Cylinder => {
            let v = vertex_at(&problem.filled, marks[1]).ok_or_else(|| Error::Domain("x₁ is not a vertex".into()))?;
            h_at(v)
        }
        Attachment::CrossCap => 0.0,
    };
    let cusp_constant = log_kernel(r_in) + e;
    let offset = problem.parent.len();
    let values = problem.field(|v, gv| match gv {
        GluedVertex::Base { filled } => {
            let vert = problem.filled.vertices[filled];
            if let Some(r) = problem.surface.distance(marks[0], &vert).filter(|&r| r < r_out) {
                let eta = log_cutoff_unchecked(r, r_in, r_out);
                return a * (eta * h_at(filled) + (1.0 - eta) * (log_kernel(r) + e));
            }
            if params.attachment == Attachment::Cylinder {
                if let Some(r) = problem.surface.distance(marks[1], &vert).filter(|&r| r < r_out) {
                    let eta = log_cutoff_unchecked(r, r_in, r_out);
                    return a * (eta * h_at(filled) + (1.0 - eta) * h_x1);
                }
            }
            a * h_at(filled)
        }
        GluedVertex::Cusp { y } => {
            let rho = if params.attachment == Attachment::Cylinder { ramp(&params, y) } else { 0.0 };
            psi[v - offset] + a * (rho * h_x1 + (1.0 - rho) * cusp_constant)
        }
    });
    let dn = DualNorm::new(&problem.op)?;
    let q = Quasimode {
        kind: QuasimodeKind::CuspExtension(l),
        delta: dn.residual(&values, lambda),
        l2_norm: problem.op.mass_norm(&values),
        values,
        target_lambda: lambda,
        a: Some(a),
        e_lambda: Some(e),
        e_eps_lambda: Some(hl.e_eps_lambda(r_in)),
    };
    Ok((q, hl))
}
