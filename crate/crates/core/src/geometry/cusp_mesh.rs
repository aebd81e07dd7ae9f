use super::mesh::{BoundaryLoop, ChartedMesh, LoopTag, Region, Triangle, Vertex, CUSP_CHART};
use crate::cusp::{Attachment, CuspParams};
use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Options of the cusp mesher.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CuspMeshOptions {
    /// Vertices per circle; must match the ring count of the base hole.
    pub n_theta: usize,
    /// Rows per unit of `log y`.
    pub n_log: usize,
    /// When set, bands between log-uniform rows are split by extra rows,
    /// uniform in `y`, until every cell has `Δy ≤ max_aspect·Δu`.
    pub max_aspect: Option<f64>,
    /// Upper bound on the number of vertices.
    pub node_budget: usize,
}

/// Cell aspect ratio that keeps all angles of the split rectangles above 15°.
pub const QUALITY_ASPECT: f64 = 3.5;

impl CuspMeshOptions {
    pub fn new(n_theta: usize, n_log: usize) -> Self {
        Self { n_theta, n_log, max_aspect: Some(QUALITY_ASPECT), node_budget: 2_000_000 }
    }

    /// Rows placed only uniformly in `log y`, accepting stretched cells.
    pub fn log_uniform(n_theta: usize, n_log: usize) -> Self {
        Self { max_aspect: None, ..Self::new(n_theta, n_log) }
    }
}

/// Row heights `y_j` of the cusp mesh, increasing from 1 to `R`.
pub fn cusp_rows(params: &CuspParams, opts: &CuspMeshOptions) -> Result<Vec<f64>> {
    let l = params.log_length();
    let r = l.exp();
    if !r.is_finite() || r > 1e12 {
        return Err(Error::Config(format!("far end R = exp({l}) is not representable for meshing")));
    }
    let primary = ((opts.n_log as f64 * l).ceil() as usize).max(1);
    let du = 2.0 * PI * params.epsilon / opts.n_theta as f64;
    let mut rows = vec![1.0];
    let mut estimate = 0usize;
    for j in 0..primary {
        let y0 = (l * j as f64 / primary as f64).exp();
        let y1 = if j + 1 == primary { r } else { (l * (j + 1) as f64 / primary as f64).exp() };
        let split = match opts.max_aspect {
            Some(a) => ((y1 - y0) / (a * du)).ceil().max(1.0) as usize,
            None => 1,
        };
        estimate += split;
        if estimate.saturating_mul(opts.n_theta + 1) > opts.node_budget {
            return Err(Error::Config(format!(
                "cusp mesh needs more than {} vertices (log R = {l}, n_log = {}, n_theta = {})",
                opts.node_budget, opts.n_log, opts.n_theta
            )));
        }
        for s in 1..=split {
            rows.push(if s == split { y1 } else { y0 + (y1 - y0) * s as f64 / split as f64 });
        }
    }
    Ok(rows)
}

/// Mesh of `[0, 2πε] × [1, R]` in the chart `(u, y) = (εθ, y)`, where the
/// metric is `(κy)⁻²(du² + dy²)`.
pub fn build_cusp_mesh_with(params: &CuspParams, opts: &CuspMeshOptions) -> Result<ChartedMesh> {
    let n = opts.n_theta;
    if n < 8 || n % 2 != 0 {
        return Err(Error::Config(format!("n_theta must be even and at least 8, got {n}")));
    }
    if opts.n_log < 4 {
        return Err(Error::Config(format!("n_log must be at least 4, got {}", opts.n_log)));
    }
    let rows = cusp_rows(params, opts)?;
    let width = 2.0 * PI * params.epsilon;
    let kappa = params.kappa;
    let cols = n + 1;
    let idx = |j: usize, i: usize| j * cols + i;
    let mut mesh = ChartedMesh::default();
    for &y in &rows {
        for i in 0..cols {
            mesh.vertices.push(Vertex { chart: CUSP_CHART, u: width * i as f64 / n as f64, v: y });
        }
    }
    let weight = |j: usize| 1.0 / (kappa * rows[j]).powi(2);
    for j in 0..rows.len() - 1 {
        for i in 0..n {
            let (a, b, c, d) = (idx(j, i), idx(j, i + 1), idx(j + 1, i + 1), idx(j + 1, i));
            let (wa, wc) = (weight(j), weight(j + 1));
            // One diagonal direction everywhere keeps the mesh invariant
            // under a shift by one column, so θ-independent fields stay
            // θ-independent under the discrete operator.
            let tris = [([a, b, c], [wa, wa, wc]), ([a, c, d], [wa, wc, wc])];
            for (vertices, weights) in tris {
                mesh.triangles.push(Triangle { vertices, region: Region::Cusp, weights });
            }
        }
    }
    let last = rows.len() - 1;
    for j in 0..rows.len() {
        mesh.identifications.push((idx(j, 0), idx(j, n)));
    }
    mesh.loops.push(BoundaryLoop { tag: LoopTag::GlueCircleLong, vertices: (0..n).map(|i| idx(0, i)).collect() });
    match params.attachment {
        Attachment::Cylinder => {
            mesh.loops.push(BoundaryLoop {
                tag: LoopTag::GlueCircleShort,
                vertices: (0..n).map(|i| idx(last, i)).collect(),
            });
        }
        Attachment::CrossCap => {
            for i in 0..n / 2 {
                mesh.identifications.push((idx(last, i), idx(last, i + n / 2)));
            }
        }
    }
    mesh.validate()?;
    Ok(mesh)
}

/// Cusp mesh with quality rows enabled.
pub fn build_cusp_mesh(params: &CuspParams, n_theta: usize, n_log: usize) -> Result<ChartedMesh> {
    build_cusp_mesh_with(params, &CuspMeshOptions::new(n_theta, n_log))
}
