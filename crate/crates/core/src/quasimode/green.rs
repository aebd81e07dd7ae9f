use crate::error::{Error, Result};
use crate::fem::{axpy, CsrMatrix, DiscreteOperator, Factorization};
use crate::geometry::{vertex_at, BaseSurface, ChartPoint, ChartedMesh};
use std::f64::consts::PI;

/// `(1/2π) log(1/r)`.
pub fn log_kernel(r: f64) -> f64 {
    -r.ln() / (2.0 * PI)
}

/// Smooth radial cut-off used to split off the singularity: 1 below `inner`,
/// 0 above `outer`, quintic smoothstep in between.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitCutoff {
    pub inner: f64,
    pub outer: f64,
}

impl SplitCutoff {
    /// `(η, η', η'')` at radius `r`.
    pub fn eval(&self, r: f64) -> (f64, f64, f64) {
        if r <= self.inner {
            return (1.0, 0.0, 0.0);
        }
        if r >= self.outer {
            return (0.0, 0.0, 0.0);
        }
        let w = self.outer - self.inner;
        let t = (r - self.inner) / w;
        let s = t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
        let ds = 30.0 * t * t * (1.0 - t) * (1.0 - t);
        let dds = 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t);
        (1.0 - s, -ds / w, -dds / (w * w))
    }

    /// `h = Δ(ηL) − ηΔL` in the flat chart, with `Δ = −∇²` and `L = log_kernel`.
    pub fn source(&self, r: f64) -> f64 {
        let (_, d1, d2) = self.eval(r);
        if d1 == 0.0 && d2 == 0.0 {
            return 0.0;
        }
        let l = log_kernel(r);
        let dl = -1.0 / (2.0 * PI * r);
        -l * (d2 + d1 / r) - 2.0 * d1 * dl
    }
}

/// Green's function `G(x₀, ·)` of a closed base surface, `ΔG = δ_{x₀} − 1/area`.
#[derive(Clone, Debug)]
pub struct GreenData {
    pub pole: ChartPoint,
    /// Mesh vertex at the pole and its degree of freedom.
    pub pole_vertex: usize,
    pub pole_dof: usize,
    pub cutoff: SplitCutoff,
    /// Dof vector of the split solution `η L + r`; `+∞` at the pole.
    pub values: Vec<f64>,
    /// Dof vector of `G − L`, continuous with value 0 at the pole. Only
    /// meaningful where the vertex shares the pole's chart or `η = 0`.
    pub regular_part: Vec<f64>,
    /// Smooth correction `r`, with `r(x₀) = 0`.
    pub correction: Vec<f64>,
    /// `1/area` of the discrete surface.
    pub area_norm: f64,
    /// Discrete Green's function solving `K G_h = e_{x₀} − M1/area`,
    /// shifted to agree with `values` on average where `η = 0`.
    pub discrete: Vec<f64>,
    /// Constant subtracted from the raw discrete solution to align it.
    pub alignment: f64,
    /// Largest deviation `|G_h − G|` over the vertices where `η = 0`.
    pub alignment_spread: f64,
}

impl GreenData {
    /// Chart distance from the pole to every dof, `None` in other charts.
    pub fn dof_radii(mesh: &ChartedMesh, op: &DiscreteOperator, surface: &BaseSurface, pole: ChartPoint) -> Vec<Option<f64>> {
        let mut out = vec![None; op.dim()];
        for (v, vert) in mesh.vertices.iter().enumerate() {
            if let Some(d) = op.dof_of_vertex(v) {
                if let Some(r) = surface.distance(pole, vert) {
                    out[d] = Some(out[d].map_or(r, |o: f64| o.min(r)));
                }
            }
        }
        out
    }
}

/// Seven-point degree-5 rule on the reference triangle: barycentric points, weights.
const DUNAVANT5: [([f64; 3], f64); 7] = [
    ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 0.225),
    ([0.059715871789770, 0.470142064105115, 0.470142064105115], 0.132394152788506),
    ([0.470142064105115, 0.059715871789770, 0.470142064105115], 0.132394152788506),
    ([0.470142064105115, 0.470142064105115, 0.059715871789770], 0.132394152788506),
    ([0.797426985353087, 0.101286507323456, 0.101286507323456], 0.125939180544827),
    ([0.101286507323456, 0.797426985353087, 0.101286507323456], 0.125939180544827),
    ([0.101286507323456, 0.101286507323456, 0.797426985353087], 0.125939180544827),
];

/// `∫ h φ_i` for every hat function, integrated in the flat pole chart.
fn source_load(mesh: &ChartedMesh, op: &DiscreteOperator, surface: &BaseSurface, pole: ChartPoint, cut: &SplitCutoff) -> Vec<f64> {
    let mut load = vec![0.0; op.dim()];
    for t in &mesh.triangles {
        // Offsets from the pole; a triangle within the support never straddles the period seam.
        let Some(p) = t
            .vertices
            .iter()
            .map(|&v| surface.offset(pole, &mesh.vertices[v]))
            .collect::<Option<Vec<(f64, f64)>>>()
        else {
            continue;
        };
        let (lo, hi) = p.iter().fold((f64::INFINITY, 0.0f64), |(a, b), d| (a.min(d.0.hypot(d.1)), b.max(d.0.hypot(d.1))));
        if hi < cut.inner || lo > cut.outer {
            continue;
        }
        let xy = |b: [f64; 3]| {
            (
                b[0] * p[0].0 + b[1] * p[1].0 + b[2] * p[2].0,
                b[0] * p[0].1 + b[1] * p[1].1 + b[2] * p[2].1,
            )
        };
        let area = 0.5 * ((p[1].0 - p[0].0) * (p[2].1 - p[0].1) - (p[2].0 - p[0].0) * (p[1].1 - p[0].1)).abs();
        // Four congruent sub-triangles in barycentric coordinates.
        let mid = |a: [f64; 3], b: [f64; 3]| [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1]), 0.5 * (a[2] + b[2])];
        let (e0, e1, e2) = ([1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]);
        let (m01, m12, m20) = (mid(e0, e1), mid(e1, e2), mid(e2, e0));
        let subs = [[e0, m01, m20], [m01, e1, m12], [m20, m12, e2], [m12, m20, m01]];
        let mut acc = [0.0; 3];
        for s in &subs {
            for (q, w) in &DUNAVANT5 {
                let b = [
                    q[0] * s[0][0] + q[1] * s[1][0] + q[2] * s[2][0],
                    q[0] * s[0][1] + q[1] * s[1][1] + q[2] * s[2][1],
                    q[0] * s[0][2] + q[1] * s[1][2] + q[2] * s[2][2],
                ];
                let (x, y) = xy(b);
                let hv = cut.source(x.hypot(y));
                for j in 0..3 {
                    acc[j] += 0.25 * w * area * hv * b[j];
                }
            }
        }
        for j in 0..3 {
            if let Some(d) = op.dof_of_vertex(t.vertices[j]) {
                load[d] += acc[j];
            }
        }
    }
    load
}

/// Solves `K x = b` with the pole dof held at 0; `b` must have zero sum.
fn pinned_solve(stiffness: &CsrMatrix, pole: usize, b: &[f64]) -> Result<Vec<f64>> {
    let n = stiffness.n;
    let keep: Vec<bool> = (0..n).map(|i| i != pole).collect();
    let reduced = stiffness.restrict(&keep);
    let rhs: Vec<f64> = (0..n).filter(|&i| i != pole).map(|i| b[i]).collect();
    let sol = Factorization::cholesky(&reduced)?.solve(&rhs);
    let mut x = vec![0.0; n];
    let mut it = sol.into_iter();
    for (i, xi) in x.iter_mut().enumerate() {
        if i != pole {
            *xi = it.next().unwrap_or(0.0);
        }
    }
    Ok(x)
}

/// Default split radii as fractions of the chart-ball radius.
pub const SPLIT_INNER: f64 = 0.3;
pub const SPLIT_OUTER: f64 = 0.8;

/// Green's function with pole at `surface.marked_points[marked]`, computed on
/// a closed base mesh that has a vertex there.
///
/// `G = ηL + r`, where `r` solves `a(r, φ) = −∫hφ − (1/area)∫φ` with the
/// additive constant fixed by `r(x₀) = 0`.
pub fn green_function(mesh: &ChartedMesh, op: &DiscreteOperator, surface: &BaseSurface, marked: usize) -> Result<GreenData> {
    let pole = *surface
        .marked_points
        .get(marked)
        .ok_or_else(|| Error::Domain(format!("no marked point {marked}")))?;
    green_function_at(mesh, op, surface, pole)
}

/// Same as [`green_function`] for an arbitrary vertex of a conformally flat chart.
pub fn green_function_at(mesh: &ChartedMesh, op: &DiscreteOperator, surface: &BaseSurface, pole: ChartPoint) -> Result<GreenData> {
    if (surface.conformal_factor(pole.chart, pole.u, pole.v) - 1.0).abs() > 1e-12 {
        return Err(Error::Domain(format!(
            "pole ({}, {}) in chart {} is not a point where the chart is isometric",
            pole.u, pole.v, pole.chart
        )));
    }
    if !mesh.loops.is_empty() || !op.dof_of_class.iter().all(Option::is_some) {
        return Err(Error::Domain("the Green's function needs a closed surface operator".into()));
    }
    let pole_vertex = vertex_at(mesh, pole).ok_or_else(|| Error::Domain("the pole is not a mesh vertex".into()))?;
    let pole_dof = op.dof_of_vertex(pole_vertex).expect("closed operator has every vertex free");
    let chart_radius = surface.chart_radius();
    let cutoff = SplitCutoff { inner: SPLIT_INNER * chart_radius, outer: SPLIT_OUTER * chart_radius };

    let n = op.dim();
    let ones = vec![1.0; n];
    let m1 = op.mass.mul(&ones);
    let area: f64 = m1.iter().sum();
    let area_norm = 1.0 / area;

    let radii = GreenData::dof_radii(mesh, op, surface, pole);
    let singular: Vec<f64> = radii
        .iter()
        .map(|r| match r {
            Some(r) if *r > 0.0 => cutoff.eval(*r).0 * log_kernel(*r),
            Some(_) => f64::INFINITY,
            None => 0.0,
        })
        .collect();

    let mut rhs = source_load(mesh, op, surface, pole, &cutoff);
    rhs.iter_mut().for_each(|x| *x = -*x);
    axpy(-area_norm, &m1, &mut rhs);
    let defect: f64 = rhs.iter().sum();
    axpy(-defect / area, &m1, &mut rhs);
    let correction = pinned_solve(&op.stiffness, pole_dof, &rhs)?;

    let values: Vec<f64> = singular.iter().zip(&correction).map(|(s, c)| s + c).collect();
    let regular_part: Vec<f64> = radii
        .iter()
        .zip(&correction)
        .map(|(r, c)| match r {
            Some(r) if *r > 0.0 => c + (cutoff.eval(*r).0 - 1.0) * log_kernel(*r),
            Some(_) => 0.0,
            None => f64::NAN,
        })
        .collect();

    let mut b = vec![0.0; n];
    b[pole_dof] = 1.0;
    axpy(-area_norm, &m1, &mut b);
    let mut discrete = pinned_solve(&op.stiffness, pole_dof, &b)?;
    let far: Vec<usize> = (0..n).filter(|&i| radii[i].map_or(true, |r| r >= cutoff.outer)).collect();
    let weight: f64 = far.iter().map(|&i| m1[i]).sum();
    let alignment = far.iter().map(|&i| m1[i] * (discrete[i] - values[i])).sum::<f64>() / weight;
    discrete.iter_mut().for_each(|x| *x -= alignment);
    let alignment_spread = far.iter().map(|&i| (discrete[i] - values[i]).abs()).fold(0.0, f64::max);

    Ok(GreenData {
        pole,
        pole_vertex,
        pole_dof,
        cutoff,
        values,
        regular_part,
        correction,
        area_norm,
        discrete,
        alignment,
        alignment_spread,
    })
}
