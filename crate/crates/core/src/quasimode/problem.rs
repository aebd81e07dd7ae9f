use crate::cusp::{Attachment, CuspParams};
use crate::error::Result;
use crate::fem::{assemble, BoundaryCondition, DiscreteOperator};
use crate::geometry::{
    build_cusp_mesh_with, build_filled_mesh, glue, punch_holes, BaseMeshOptions, BaseSurface, ChartedMesh, CuspMeshOptions,
    Hole, LoopTag, CUSP_CHART,
};

/// Mesh resolution of a glued surface.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeshSpec {
    /// Background edge length on the base surface.
    pub h: f64,
    /// Vertices per glue circle.
    pub n_theta: usize,
    /// Cusp rows per unit of `log y`.
    pub n_log: usize,
    /// Split stretched cusp cells (every angle ≥ 15°) instead of keeping
    /// log-uniform rows only.
    pub quality_rows: bool,
}

impl MeshSpec {
    pub fn cusp_options(&self) -> CuspMeshOptions {
        if self.quality_rows {
            CuspMeshOptions::new(self.n_theta, self.n_log)
        } else {
            CuspMeshOptions::log_uniform(self.n_theta, self.n_log)
        }
    }
}

/// Where a glued-mesh vertex lives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GluedVertex {
    /// Base vertex with its index in the filled base mesh.
    Base { filled: usize },
    /// Cusp vertex at height `y`.
    Cusp { y: f64 },
}

/// A glued surface together with the filled base mesh it was cut from.
///
/// The holed base mesh is a sub-mesh of the filled one, so base fields
/// computed on the filled mesh transfer to the glued mesh vertex by vertex.
#[derive(Clone, Debug)]
pub struct GluedProblem {
    pub params: CuspParams,
    pub surface: BaseSurface,
    pub mesh_spec: MeshSpec,
    pub filled: ChartedMesh,
    pub filled_op: DiscreteOperator,
    /// The filled mesh with the balls removed.
    pub holed: ChartedMesh,
    /// Filled-mesh index of every holed-base vertex.
    pub parent: Vec<usize>,
    pub cusp: ChartedMesh,
    pub glued: ChartedMesh,
    pub op: DiscreteOperator,
}

impl GluedProblem {
    pub fn build(params: CuspParams, surface: BaseSurface, mesh_spec: MeshSpec) -> Result<Self> {
        let radius = params.hole_radius();
        let mut opts = BaseMeshOptions::new(mesh_spec.h, mesh_spec.n_theta, radius);
        opts.annulus_radius = params.epsilon.powf(0.5 * params.k as f64).min(0.5 * surface.chart_radius());
        let filled = build_filled_mesh(&surface, &opts)?;
        let holes: Vec<Hole> = (0..surface.marked_points.len()).map(|marked| Hole { marked, radius }).collect();
        let (holed, parent) = punch_holes(&filled, &surface, &holes)?;
        let cusp = build_cusp_mesh_with(&params, &mesh_spec.cusp_options())?;
        let glued = glue(&holed, &cusp, params.attachment)?;
        let filled_op = assemble(&filled, &BoundaryCondition::Closed)?;
        let op = assemble(&glued, &BoundaryCondition::Closed)?;
        Ok(Self { params, surface, mesh_spec, filled, filled_op, holed, parent, cusp, glued, op })
    }

    /// The same base with the cusp rebuilt at another curvature scale.
    pub fn with_kappa(&self, kappa: f64) -> Result<Self> {
        let params = self.params.with_kappa(kappa)?;
        let cusp = build_cusp_mesh_with(&params, &self.mesh_spec.cusp_options())?;
        let glued = glue(&self.holed, &cusp, params.attachment)?;
        let op = assemble(&glued, &BoundaryCondition::Closed)?;
        Ok(Self { params, cusp, glued, op, ..self.clone() })
    }

    pub fn vertex(&self, v: usize) -> GluedVertex {
        if v < self.parent.len() {
            GluedVertex::Base { filled: self.parent[v] }
        } else {
            debug_assert_eq!(self.glued.vertices[v].chart, CUSP_CHART);
            GluedVertex::Cusp { y: self.glued.vertices[v].v }
        }
    }

    /// Glued dof vector of a nodal field given per glued vertex.
    pub fn field(&self, f: impl Fn(usize, GluedVertex) -> f64) -> Vec<f64> {
        let values: Vec<f64> = (0..self.glued.vertices.len()).map(|v| f(v, self.vertex(v))).collect();
        self.op.from_vertices(&values)
    }

    /// Filled-mesh dof of a filled-mesh vertex.
    pub fn filled_dof(&self, filled_vertex: usize) -> usize {
        self.filled_op.dof_of_vertex(filled_vertex).expect("filled base mesh is closed")
    }

    /// Operator of the cusp alone with Dirichlet conditions on its glue circles.
    pub fn cusp_dirichlet_operator(&self) -> Result<DiscreteOperator> {
        let mut tags = vec![LoopTag::GlueCircleLong];
        if self.params.attachment == Attachment::Cylinder {
            tags.push(LoopTag::GlueCircleShort);
        }
        assemble(&self.cusp, &BoundaryCondition::DirichletOn(tags))
    }
}
