use super::sparse::CsrMatrix;
use crate::error::{Error, Result};
use crate::geometry::{ChartedMesh, LoopTag, Region};
use std::str::FromStr;

/// Boundary treatment. Unlisted boundary loops are natural (Neumann).
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BoundaryCondition {
    Closed,
    DirichletOn(Vec<LoopTag>),
    NeumannOn(Vec<LoopTag>),
}

impl BoundaryCondition {
    pub fn dirichlet_tags(&self) -> &[LoopTag] {
        match self {
            BoundaryCondition::DirichletOn(t) => t,
            _ => &[],
        }
    }
}

impl FromStr for BoundaryCondition {
    type Err = Error;

    /// `closed`, `dirichlet:<tag>[,<tag>]` or `neumann:<tag>[,<tag>]`.
    fn from_str(s: &str) -> Result<Self> {
        if s == "closed" {
            return Ok(Self::Closed);
        }
        let (kind, tags) = s
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("boundary condition '{s}' is not closed, dirichlet:<tags> or neumann:<tags>")))?;
        let tags = tags.split(',').map(str::parse).collect::<Result<Vec<LoopTag>>>()?;
        match kind {
            "dirichlet" => Ok(Self::DirichletOn(tags)),
            "neumann" => Ok(Self::NeumannOn(tags)),
            _ => Err(Error::Config(format!("unknown boundary condition kind '{kind}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum MassKind {
    #[default]
    Consistent,
    Lumped,
}

/// Stiffness and mass matrices of `-Δ` on the free degrees of freedom.
#[derive(Clone, Debug)]
pub struct DiscreteOperator {
    pub stiffness: CsrMatrix,
    pub mass: CsrMatrix,
    /// Mass restricted to cusp triangles; the base mass is `mass - mass_cusp`.
    pub mass_cusp: CsrMatrix,
    /// Vertex class of every mesh vertex.
    pub class_of: Vec<usize>,
    /// Degree of freedom of every vertex class, `None` when constrained.
    pub dof_of_class: Vec<Option<usize>>,
    pub mass_kind: MassKind,
}

impl DiscreteOperator {
    pub fn dim(&self) -> usize {
        self.stiffness.n
    }

    pub fn dof_of_vertex(&self, v: usize) -> Option<usize> {
        self.dof_of_class[self.class_of[v]]
    }

    /// Nodal values per mesh vertex, zero on constrained vertices.
    pub fn to_vertices(&self, x: &[f64]) -> Vec<f64> {
        self.class_of.iter().map(|&c| self.dof_of_class[c].map_or(0.0, |d| x[d])).collect()
    }

    /// Dof vector of a nodal field given per mesh vertex. Identified vertices
    /// must carry equal values; the first one seen wins.
    pub fn from_vertices(&self, values: &[f64]) -> Vec<f64> {
        let mut x = vec![f64::NAN; self.dim()];
        for (v, &c) in self.class_of.iter().enumerate() {
            if let Some(d) = self.dof_of_class[c] {
                if x[d].is_nan() {
                    x[d] = values[v];
                }
            }
        }
        x
    }

    /// Dof vector of a function of the vertex.
    pub fn interpolate(&self, mesh: &ChartedMesh, f: impl Fn(usize) -> f64) -> Vec<f64> {
        let vals: Vec<f64> = (0..mesh.vertices.len()).map(f).collect();
        self.from_vertices(&vals)
    }

    pub fn mass_norm(&self, x: &[f64]) -> f64 {
        self.mass.bilinear(x, x).sqrt()
    }

    /// `(∫_base |x|², ∫_cusp |x|²)`.
    pub fn region_masses(&self, x: &[f64]) -> (f64, f64) {
        let total = self.mass.bilinear(x, x);
        let cusp = self.mass_cusp.bilinear(x, x);
        (total - cusp, cusp)
    }

    /// `∫ x` over the whole surface and over the cusp.
    pub fn integrals(&self, x: &[f64]) -> (f64, f64) {
        let ones = vec![1.0; self.dim()];
        (self.mass.bilinear(&ones, x), self.mass_cusp.bilinear(&ones, x))
    }

    /// Dirichlet energy `xᵀ K y`.
    pub fn energy(&self, x: &[f64], y: &[f64]) -> f64 {
        self.stiffness.bilinear(x, y)
    }
}

/// Local stiffness of a flat triangle: `K_ij = (b_i b_j + c_i c_j) / 4A`.
fn local_stiffness(p: [[f64; 2]; 3], area: f64) -> [[f64; 3]; 3] {
    let mut b = [0.0; 3];
    let mut c = [0.0; 3];
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        b[i] = p[j][1] - p[k][1];
        c[i] = p[k][0] - p[j][0];
    }
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (b[i] * b[j] + c[i] * c[j]) / (4.0 * area);
        }
    }
    out
}

/// Exact mass of P1 functions against the P1 interpolant of the conformal factor.
fn local_mass(w: [f64; 3], area: f64) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = if i == j {
                let (a, b) = ((i + 1) % 3, (i + 2) % 3);
                w[i] * area / 10.0 + (w[a] + w[b]) * area / 30.0
            } else {
                let k = 3 - i - j;
                (w[i] + w[j]) * area / 30.0 + w[k] * area / 60.0
            };
        }
    }
    out
}

/// Assembles `-Δ` on a charted mesh with P1 elements.
pub fn assemble(mesh: &ChartedMesh, bc: &BoundaryCondition) -> Result<DiscreteOperator> {
    assemble_with(mesh, bc, MassKind::Consistent)
}

pub fn assemble_with(mesh: &ChartedMesh, bc: &BoundaryCondition, mass_kind: MassKind) -> Result<DiscreteOperator> {
    let classes = mesh.vertex_classes();
    // Classes touched by no triangle carry no dof.
    let mut constrained = vec![true; classes.count];
    for t in &mesh.triangles {
        for &v in &t.vertices {
            constrained[classes.class_of[v]] = false;
        }
    }
    for tag in bc.dirichlet_tags() {
        let lp = mesh
            .loop_with_tag(*tag)
            .ok_or_else(|| Error::Config(format!("mesh has no boundary loop tagged {}", tag.name())))?;
        for &v in &lp.vertices {
            constrained[classes.class_of[v]] = true;
        }
    }
    let mut dof_of_class = vec![None; classes.count];
    let mut n = 0;
    for (c, d) in dof_of_class.iter_mut().enumerate() {
        if !constrained[c] {
            *d = Some(n);
            n += 1;
        }
    }

    let mut k_trips = Vec::with_capacity(9 * mesh.triangles.len());
    let mut m_trips = Vec::with_capacity(9 * mesh.triangles.len());
    let mut c_trips = Vec::new();
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let area = mesh.signed_area(t).abs();
        let lens = mesh.edge_lengths(t);
        let longest = lens.iter().cloned().fold(0.0, f64::max);
        if !(area > 1e-14 * longest * longest) {
            return Err(Error::DegenerateTriangle { index: t, reason: format!("area {area:e}") });
        }
        let p = tri.vertices.map(|v| [mesh.vertices[v].u, mesh.vertices[v].v]);
        let kl = local_stiffness(p, area);
        let mut ml = local_mass(tri.weights, area);
        if mass_kind == MassKind::Lumped {
            for i in 0..3 {
                let s: f64 = ml[i].iter().sum();
                ml[i] = [0.0; 3];
                ml[i][i] = s;
            }
        }
        let dofs = tri.vertices.map(|v| dof_of_class[classes.class_of[v]]);
        for i in 0..3 {
            let Some(di) = dofs[i] else { continue };
            for j in 0..3 {
                let Some(dj) = dofs[j] else { continue };
                k_trips.push((di, dj, kl[i][j]));
                m_trips.push((di, dj, ml[i][j]));
                // Zero entries keep both masses on the same pattern.
                let cusp = if tri.region == Region::Cusp { ml[i][j] } else { 0.0 };
                c_trips.push((di, dj, cusp));
            }
        }
    }
    Ok(DiscreteOperator {
        stiffness: CsrMatrix::from_triplets(n, k_trips),
        mass: CsrMatrix::from_triplets(n, m_trips),
        mass_cusp: CsrMatrix::from_triplets(n, c_trips),
        class_of: classes.class_of,
        dof_of_class,
        mass_kind,
    })
}
