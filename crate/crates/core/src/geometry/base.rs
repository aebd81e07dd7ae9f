use super::mesh::{BoundaryLoop, ChartedMesh, LoopTag, Region, Triangle, Vertex};
use crate::cusp::Attachment;
use crate::error::{Error, Result};
use spade::{ConstrainedDelaunayTriangulation, Point2, Triangulation};
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SurfaceKind {
    /// `[0, a] × [0, b]` with opposite sides identified.
    FlatTorus { a: f64, b: f64 },
    /// Round sphere covered by two stereographic disks.
    RoundSphere { radius: f64 },
}

/// A point given in chart coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChartPoint {
    pub chart: u32,
    pub u: f64,
    pub v: f64,
}

impl ChartPoint {
    pub fn distance_to(&self, v: &Vertex) -> Option<f64> {
        (v.chart == self.chart).then(|| (v.u - self.u).hypot(v.v - self.v))
    }

    pub fn angle_to(&self, v: &Vertex) -> f64 {
        (v.v - self.v).atan2(v.u - self.u)
    }
}

/// A closed base surface with conformally flat charts around its marked points.
#[derive(Clone, Debug, PartialEq)]
pub struct BaseSurface {
    pub kind: SurfaceKind,
    /// `x₀`, and `x₁` for a cylinder attachment. The conformal factor is 1 there.
    pub marked_points: Vec<ChartPoint>,
}

impl BaseSurface {
    pub fn flat_torus(a: f64, b: f64, attachment: Attachment) -> Result<Self> {
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::Config(format!("torus sides must be positive, got ({a}, {b})")));
        }
        let marked_points = match attachment {
            Attachment::CrossCap => vec![ChartPoint { chart: 0, u: 0.5 * a, v: 0.5 * b }],
            Attachment::Cylinder => vec![
                ChartPoint { chart: 0, u: 0.25 * a, v: 0.5 * b },
                ChartPoint { chart: 0, u: 0.75 * a, v: 0.5 * b },
            ],
        };
        Ok(Self { kind: SurfaceKind::FlatTorus { a, b }, marked_points })
    }

    pub fn round_sphere(radius: f64, attachment: Attachment) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::Config(format!("sphere radius must be positive, got {radius}")));
        }
        let mut marked_points = vec![ChartPoint { chart: 0, u: 0.0, v: 0.0 }];
        if attachment == Attachment::Cylinder {
            marked_points.push(ChartPoint { chart: 1, u: 0.0, v: 0.0 });
        }
        Ok(Self { kind: SurfaceKind::RoundSphere { radius }, marked_points })
    }

    pub fn area(&self) -> f64 {
        match self.kind {
            SurfaceKind::FlatTorus { a, b } => a * b,
            SurfaceKind::RoundSphere { radius } => 4.0 * PI * radius * radius,
        }
    }

    /// Conformal factor `f` with `g = f·(du² + dv²)` in the given chart.
    pub fn conformal_factor(&self, _chart: u32, u: f64, v: f64) -> f64 {
        match self.kind {
            SurfaceKind::FlatTorus { .. } => 1.0,
            SurfaceKind::RoundSphere { radius } => {
                let s = 1.0 + (u * u + v * v) / (4.0 * radius * radius);
                1.0 / (s * s)
            }
        }
    }

    /// Radius of the chart ball around each marked point that stays inside
    /// one chart and keeps the balls of two marked points disjoint.
    pub fn chart_radius(&self) -> f64 {
        match self.kind {
            SurfaceKind::FlatTorus { a, b } => {
                if self.marked_points.len() > 1 {
                    (0.25 * a).min(0.5 * b)
                } else {
                    0.5 * a.min(b)
                }
            }
            SurfaceKind::RoundSphere { radius } => 2.0 * radius,
        }
    }

    /// Chart offset from `p` to `v`, using the nearest periodic image on the
    /// torus; `None` when `v` lies in another chart.
    pub fn offset(&self, p: ChartPoint, v: &Vertex) -> Option<(f64, f64)> {
        if v.chart != p.chart {
            return None;
        }
        let (du, dv) = (v.u - p.u, v.v - p.v);
        Some(match self.kind {
            SurfaceKind::FlatTorus { a, b } => (du - a * (du / a).round(), dv - b * (dv / b).round()),
            SurfaceKind::RoundSphere { .. } => (du, dv),
        })
    }

    /// Chart distance from `p` to `v` (see [`BaseSurface::offset`]).
    pub fn distance(&self, p: ChartPoint, v: &Vertex) -> Option<f64> {
        self.offset(p, v).map(|(x, y)| x.hypot(y))
    }

    /// The first `n` eigenvalues (with multiplicity) of the exact Laplacian.
    pub fn exact_eigenvalues(&self, n: usize) -> Vec<f64> {
        let mut out = Vec::new();
        match self.kind {
            SurfaceKind::FlatTorus { a, b } => {
                let m = (n as f64).sqrt().ceil() as i64 + 3;
                for i in -m..=m {
                    for j in -m..=m {
                        out.push(4.0 * PI * PI * ((i as f64 / a).powi(2) + (j as f64 / b).powi(2)));
                    }
                }
            }
            SurfaceKind::RoundSphere { radius } => {
                let mut l = 0;
                while out.len() < n {
                    let lam = (l * (l + 1)) as f64 / (radius * radius);
                    out.extend(std::iter::repeat(lam).take(2 * l + 1));
                    l += 1;
                }
            }
        }
        out.sort_by(|x, y| x.partial_cmp(y).unwrap());
        out.truncate(n);
        out
    }

    /// First nonzero eigenvalue of the exact Laplacian.
    pub fn first_eigenvalue(&self) -> f64 {
        self.exact_eigenvalues(2)[1]
    }

    /// Multiplicity of the first nonzero eigenvalue.
    pub fn first_multiplicity(&self) -> usize {
        let ev = self.exact_eigenvalues(12);
        ev.iter().filter(|&&l| (l - ev[1]).abs() < 1e-9 * ev[1]).count()
    }
}

/// A ball of chart radius `radius` removed around `marked_points[marked]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hole {
    pub marked: usize,
    pub radius: f64,
}

/// Options of the base mesher.
#[derive(Clone, Debug, PartialEq)]
pub struct BaseMeshOptions {
    /// Target edge length of the background grid.
    pub h: f64,
    /// Vertices per ring around each marked point.
    pub n_theta: usize,
    /// Ring radii are `ring_reference · 2^{j/m}` for integers `j`, so that
    /// any hole radius of that form is an exact ring.
    pub ring_reference: f64,
    /// Innermost ring radius; a centre vertex closes the disk below it.
    pub inner_radius: f64,
    /// Triangles closer than this to a marked point are tagged `Annulus`.
    pub annulus_radius: f64,
}

impl BaseMeshOptions {
    pub fn new(h: f64, n_theta: usize, ring_reference: f64) -> Self {
        Self {
            h,
            n_theta,
            ring_reference,
            inner_radius: 0.25 * ring_reference,
            annulus_radius: 0.0,
        }
    }

    /// Rings per doubling of the radius, chosen so ring cells are close to square.
    pub fn rings_per_octave(&self) -> u32 {
        let cell = 2.0 * PI / self.n_theta as f64;
        ((2f64.ln() / cell).round() as u32).max(1)
    }

    fn ring_ratio(&self) -> f64 {
        2f64.powf(1.0 / self.rings_per_octave() as f64)
    }

    /// Largest ring radius; beyond it the background grid takes over.
    pub fn outer_ring_radius(&self) -> f64 {
        let q = self.ring_ratio();
        let target = self.n_theta as f64 * self.h / (2.0 * PI);
        let j = ((target / self.ring_reference).ln() / q.ln()).floor().max(1.0);
        self.ring_reference * q.powf(j)
    }

    fn ring_indices(&self) -> std::ops::RangeInclusive<i64> {
        let q = self.ring_ratio();
        let lo = ((self.inner_radius / self.ring_reference).ln() / q.ln() - 1e-9).ceil() as i64;
        let hi = ((self.outer_ring_radius() / self.ring_reference).ln() / q.ln()).round() as i64;
        lo..=hi
    }

    fn ring_radius(&self, j: i64) -> f64 {
        // Exact powers of two where possible, so octave rings hit hole radii exactly.
        let m = self.rings_per_octave() as i64;
        let (oct, rem) = (j.div_euclid(m), j.rem_euclid(m));
        self.ring_reference * 2f64.powi(oct as i32) * 2f64.powf(rem as f64 / m as f64)
    }
}

struct ChartPoints {
    points: Vec<(f64, f64)>,
    constraints: Vec<[usize; 2]>,
}

impl ChartPoints {
    fn push(&mut self, p: (f64, f64)) -> usize {
        self.points.push(p);
        self.points.len() - 1
    }

    fn polygon(&mut self, ids: &[usize]) {
        for i in 0..ids.len() {
            self.constraints.push([ids[i], ids[(i + 1) % ids.len()]]);
        }
    }
}

fn add_rings(cp: &mut ChartPoints, centre: ChartPoint, opts: &BaseMeshOptions) {
    cp.push((centre.u, centre.v));
    let n = opts.n_theta;
    for j in opts.ring_indices() {
        let r = opts.ring_radius(j);
        let offset = if j.rem_euclid(2) == 0 { 0.0 } else { PI / n as f64 };
        let ids: Vec<usize> = (0..n)
            .map(|i| {
                let th = 2.0 * PI * i as f64 / n as f64 + offset;
                cp.push((centre.u + r * th.cos(), centre.v + r * th.sin()))
            })
            .collect();
        cp.polygon(&ids);
    }
}

fn triangulate(cp: ChartPoints) -> Result<Vec<[usize; 3]>> {
    let n = cp.points.len();
    let verts: Vec<Point2<f64>> = cp.points.iter().map(|&(x, y)| Point2::new(x, y)).collect();
    let cdt = ConstrainedDelaunayTriangulation::<Point2<f64>>::bulk_load_cdt(verts, cp.constraints)
        .map_err(|e| Error::Config(format!("triangulation failed: {e:?}")))?;
    if cdt.num_vertices() != n {
        return Err(Error::Config("duplicate mesh points; reduce h or the ring count".into()));
    }
    Ok(cdt
        .inner_faces()
        .map(|f| {
            let v = f.vertices();
            [v[0].fix().index(), v[1].fix().index(), v[2].fix().index()]
        })
        .collect())
}

fn check_rings(surface: &BaseSurface, opts: &BaseMeshOptions) -> Result<()> {
    if opts.n_theta < 8 || opts.n_theta % 2 != 0 {
        return Err(Error::Config(format!("n_theta must be even and at least 8, got {}", opts.n_theta)));
    }
    if !(opts.h > 0.0) || !(opts.ring_reference > 0.0) || !(opts.inner_radius > 0.0) {
        return Err(Error::Config("mesh sizes must be positive".into()));
    }
    let outer = opts.outer_ring_radius();
    if outer + opts.h > surface.chart_radius() {
        return Err(Error::Config(format!(
            "h = {} is too coarse to resolve a hole of radius {}: the graded rings reach {outer}, beyond the chart ball of radius {}",
            opts.h,
            opts.ring_reference,
            surface.chart_radius()
        )));
    }
    Ok(())
}

/// Triangulation of the whole base surface, refined by log-graded rings down
/// to a centre vertex at every marked point.
pub fn build_filled_mesh(surface: &BaseSurface, opts: &BaseMeshOptions) -> Result<ChartedMesh> {
    check_rings(surface, opts)?;
    let h = opts.h;
    let clearance = opts.outer_ring_radius() + 0.6 * h;
    let mut mesh = ChartedMesh::default();
    match surface.kind {
        SurfaceKind::FlatTorus { a, b } => {
            let (nx, ny) = ((a / h).ceil() as usize, (b / h).ceil() as usize);
            let mut cp = ChartPoints { points: Vec::new(), constraints: Vec::new() };
            let mut grid = vec![usize::MAX; (nx + 1) * (ny + 1)];
            for i in 0..=nx {
                for j in 0..=ny {
                    let p = (a * i as f64 / nx as f64, b * j as f64 / ny as f64);
                    let near = surface
                        .marked_points
                        .iter()
                        .any(|m| (p.0 - m.u).hypot(p.1 - m.v) < clearance);
                    if !near {
                        grid[i * (ny + 1) + j] = cp.push(p);
                    }
                }
            }
            for m in &surface.marked_points {
                add_rings(&mut cp, *m, opts);
            }
            let points = cp.points.clone();
            let tris = triangulate(cp)?;
            mesh.vertices = points.iter().map(|&(u, v)| Vertex { chart: 0, u, v }).collect();
            push_triangles(&mut mesh, surface, opts, &tris);
            for j in 0..=ny {
                mesh.identifications.push((grid[j], grid[nx * (ny + 1) + j]));
            }
            for i in 0..=nx {
                mesh.identifications.push((grid[i * (ny + 1)], grid[i * (ny + 1) + ny]));
            }
        }
        SurfaceKind::RoundSphere { radius } => {
            let disk = 2.0 * radius;
            let n_eq = (4.0 * (2.0 * PI * disk / (4.0 * h)).ceil()).max(16.0) as usize;
            let mut rims = Vec::new();
            for chart in 0..2u32 {
                let offset = mesh.vertices.len();
                let mut cp = ChartPoints { points: Vec::new(), constraints: Vec::new() };
                let rim: Vec<usize> = (0..n_eq)
                    .map(|i| {
                        let th = 2.0 * PI * i as f64 / n_eq as f64;
                        cp.push((disk * th.cos(), disk * th.sin()))
                    })
                    .collect();
                cp.polygon(&rim);
                let marks: Vec<ChartPoint> =
                    surface.marked_points.iter().copied().filter(|m| m.chart == chart).collect();
                let n = (disk / h).ceil() as i64;
                for i in -n..=n {
                    for j in -n..=n {
                        let p = (i as f64 * h, j as f64 * h);
                        if p.0.hypot(p.1) > disk - 0.6 * h {
                            continue;
                        }
                        if marks.iter().any(|m| (p.0 - m.u).hypot(p.1 - m.v) < clearance) {
                            continue;
                        }
                        cp.push(p);
                    }
                }
                for m in &marks {
                    add_rings(&mut cp, *m, opts);
                }
                let points = cp.points.clone();
                let tris = triangulate(cp)?;
                mesh.vertices.extend(points.iter().map(|&(u, v)| Vertex { chart, u, v }));
                let shifted: Vec<[usize; 3]> =
                    tris.iter().map(|t| [t[0] + offset, t[1] + offset, t[2] + offset]).collect();
                push_triangles(&mut mesh, surface, opts, &shifted);
                rims.push(rim.iter().map(|&r| r + offset).collect::<Vec<_>>());
            }
            // z ↦ 4ρ²/z maps the rim angle φ to −φ.
            for i in 0..n_eq {
                mesh.identifications.push((rims[0][i], rims[1][(n_eq - i) % n_eq]));
            }
        }
    }
    mesh.validate()?;
    Ok(mesh)
}

fn push_triangles(mesh: &mut ChartedMesh, surface: &BaseSurface, opts: &BaseMeshOptions, tris: &[[usize; 3]]) {
    for t in tris {
        let p: Vec<Vertex> = t.iter().map(|&i| mesh.vertices[i]).collect();
        let (cu, cv) = ((p[0].u + p[1].u + p[2].u) / 3.0, (p[0].v + p[1].v + p[2].v) / 3.0);
        let chart = p[0].chart;
        let in_annulus = surface
            .marked_points
            .iter()
            .any(|m| m.chart == chart && (cu - m.u).hypot(cv - m.v) < opts.annulus_radius);
        let weights = [
            surface.conformal_factor(chart, p[0].u, p[0].v),
            surface.conformal_factor(chart, p[1].u, p[1].v),
            surface.conformal_factor(chart, p[2].u, p[2].v),
        ];
        mesh.triangles.push(Triangle {
            vertices: *t,
            region: if in_annulus { Region::Annulus } else { Region::Base },
            weights,
        });
    }
}

/// Index of the vertex sitting exactly at a chart point.
pub fn vertex_at(mesh: &ChartedMesh, p: ChartPoint) -> Option<usize> {
    mesh.vertices
        .iter()
        .position(|v| v.chart == p.chart && (v.u - p.u).abs() < 1e-13 && (v.v - p.v).abs() < 1e-13)
}

/// Removes the open balls of `holes` from a filled mesh. Returns the holed
/// mesh and, for each of its vertices, the index in the filled mesh. Every
/// hole radius must coincide with a ring; its vertices become a
/// `RemovedBall` loop ordered by angle starting at angle 0.
pub fn punch_holes(filled: &ChartedMesh, surface: &BaseSurface, holes: &[Hole]) -> Result<(ChartedMesh, Vec<usize>)> {
    for (i, h) in holes.iter().enumerate() {
        if h.marked >= surface.marked_points.len() {
            return Err(Error::Config(format!("hole {i} refers to a missing marked point")));
        }
        if !(h.radius > 0.0 && h.radius < 0.5) {
            return Err(Error::Config(format!("hole radius {} must lie in (0, 1/2)", h.radius)));
        }
        for (j, g) in holes.iter().enumerate().skip(i + 1) {
            let (p, q) = (surface.marked_points[h.marked], surface.marked_points[g.marked]);
            let apart = p.chart != q.chart || (p.u - q.u).hypot(p.v - q.v) > h.radius + g.radius;
            if !apart || h.marked == g.marked {
                return Err(Error::Config(format!("holes {i} and {j} overlap")));
            }
        }
    }
    let inside = |v: &Vertex| {
        holes.iter().any(|h| {
            let c = surface.marked_points[h.marked];
            c.distance_to(v).is_some_and(|d| d <= h.radius * (1.0 + 1e-9))
        })
    };
    let mut keep_tri = Vec::new();
    for t in &filled.triangles {
        if !t.vertices.iter().all(|&v| inside(&filled.vertices[v])) {
            keep_tri.push(*t);
        }
    }
    let mut new_index = vec![usize::MAX; filled.vertices.len()];
    let mut parent = Vec::new();
    for t in &keep_tri {
        for &v in &t.vertices {
            if new_index[v] == usize::MAX {
                new_index[v] = 0;
            }
        }
    }
    let mut mesh = ChartedMesh::default();
    for (v, slot) in new_index.iter_mut().enumerate() {
        if *slot != usize::MAX {
            *slot = mesh.vertices.len();
            mesh.vertices.push(filled.vertices[v]);
            parent.push(v);
        }
    }
    mesh.triangles = keep_tri
        .into_iter()
        .map(|mut t| {
            t.vertices = t.vertices.map(|v| new_index[v]);
            t
        })
        .collect();
    mesh.identifications = filled
        .identifications
        .iter()
        .filter(|(a, b)| new_index[*a] != usize::MAX && new_index[*b] != usize::MAX)
        .map(|&(a, b)| (new_index[a], new_index[b]))
        .collect();
    for h in holes {
        let c = surface.marked_points[h.marked];
        let mut ring: Vec<(f64, usize)> = mesh
            .vertices
            .iter()
            .enumerate()
            .filter(|(_, v)| c.distance_to(v).is_some_and(|d| (d - h.radius).abs() <= 1e-9 * h.radius))
            .map(|(i, v)| (c.angle_to(v).rem_euclid(2.0 * PI), i))
            .collect();
        ring.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        if ring.len() < 8 {
            return Err(Error::Config(format!("hole radius {} does not coincide with a mesh ring", h.radius)));
        }
        mesh.loops.push(BoundaryLoop { tag: LoopTag::RemovedBall, vertices: ring.into_iter().map(|(_, i)| i).collect() });
    }
    mesh.validate()?;
    Ok((mesh, parent))
}

/// Base surface minus the given holes, meshed with target edge length `h`.
pub fn build_base_mesh(surface: &BaseSurface, h: f64, n_theta: usize, holes: &[Hole], annulus_radius: f64) -> Result<ChartedMesh> {
    let reference = holes.iter().map(|h| h.radius).fold(f64::INFINITY, f64::min);
    let reference = if reference.is_finite() { reference } else { 0.25 * h };
    let mut opts = BaseMeshOptions::new(h, n_theta, reference);
    opts.annulus_radius = annulus_radius;
    let filled = build_filled_mesh(surface, &opts)?;
    Ok(punch_holes(&filled, surface, holes)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn octave_rings_are_exact_powers_of_two() {
        let opts = BaseMeshOptions::new(0.02, 16, 0.005);
        assert_eq!(opts.rings_per_octave(), 2);
        assert_eq!(opts.ring_radius(2), 0.01);
        assert_eq!(opts.ring_radius(6), 0.04);
        assert_eq!(opts.ring_radius(-2), 0.0025);
    }

    #[test]
    fn torus_mesh_is_closed_with_unit_area() {
        let s = BaseSurface::flat_torus(1.0, 1.0, Attachment::CrossCap).unwrap();
        let m = build_filled_mesh(&s, &BaseMeshOptions::new(0.05, 16, 0.01)).unwrap();
        assert_eq!(m.euler_characteristic(), 0);
        assert!(m.is_orientable());
        assert!((m.area() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hole_loop_has_circle_length() {
        let s = BaseSurface::flat_torus(1.0, 1.5, Attachment::CrossCap).unwrap();
        let m = build_base_mesh(&s, 0.03, 64, &[Hole { marked: 0, radius: 0.01 }], 0.0).unwrap();
        let lp = m.loop_with_tag(LoopTag::RemovedBall).unwrap();
        assert_eq!(lp.vertices.len(), 64);
        let len = m.loop_chart_length(lp);
        assert!((len - 2.0 * PI * 0.01).abs() < 1e-4, "{len}");
        assert_eq!(m.euler_characteristic(), -1);
    }

    #[test]
    fn sphere_mesh_is_a_sphere() {
        let s = BaseSurface::round_sphere(1.0, Attachment::Cylinder).unwrap();
        let m = build_filled_mesh(&s, &BaseMeshOptions::new(0.15, 16, 0.01)).unwrap();
        assert_eq!(m.euler_characteristic(), 2);
        assert!(m.is_orientable());
        let area = m.area();
        assert!((area - 4.0 * PI).abs() < 0.02 * 4.0 * PI, "{area}");
    }

    #[test]
    fn overlapping_holes_are_rejected() {
        let s = BaseSurface::flat_torus(1.0, 1.0, Attachment::CrossCap).unwrap();
        let opts = BaseMeshOptions::new(0.05, 16, 0.01);
        let filled = build_filled_mesh(&s, &opts).unwrap();
        let holes = [Hole { marked: 0, radius: 0.01 }, Hole { marked: 0, radius: 0.02 }];
        assert!(matches!(punch_holes(&filled, &s, &holes), Err(Error::Config(_))));
    }

    #[test]
    fn coarse_h_is_rejected() {
        let s = BaseSurface::flat_torus(1.0, 1.0, Attachment::CrossCap).unwrap();
        let opts = BaseMeshOptions::new(0.6, 16, 0.01);
        assert!(matches!(build_filled_mesh(&s, &opts), Err(Error::Config(_))));
    }

    #[test]
    fn exact_torus_table() {
        let s = BaseSurface::flat_torus(1.0, 1.5, Attachment::CrossCap).unwrap();
        let ev = s.exact_eigenvalues(6);
        let l1 = 4.0 * PI * PI / 2.25;
        assert!((ev[1] - l1).abs() < 1e-12 && (ev[2] - l1).abs() < 1e-12);
        assert!((ev[3] - 4.0 * PI * PI).abs() < 1e-12);
        assert_eq!(s.first_multiplicity(), 2);
    }
}
