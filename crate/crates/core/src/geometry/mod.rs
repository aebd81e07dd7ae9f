//! Base surfaces, mesh generation for the glued surface, and mesh I/O.

pub mod base;
pub mod cusp_mesh;
pub mod glue;
pub mod io;
pub mod mesh;

pub use base::{build_base_mesh, build_filled_mesh, punch_holes, vertex_at, BaseMeshOptions, BaseSurface, ChartPoint, Hole, SurfaceKind};
pub use cusp_mesh::{build_cusp_mesh, build_cusp_mesh_with, CuspMeshOptions};
pub use glue::glue;
pub use mesh::{BoundaryLoop, ChartedMesh, LoopTag, Region, Triangle, Vertex, VertexClasses, CUSP_CHART};
