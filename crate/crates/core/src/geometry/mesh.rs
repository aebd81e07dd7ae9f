use crate::error::{Error, Result};
use std::collections::HashMap;

/// Chart identifier of the cusp rectangle. Base charts use 0 and 1.
pub const CUSP_CHART: u32 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Region {
    Base,
    /// Base triangles inside the graded annulus around a removed ball.
    Annulus,
    Cusp,
}

impl Region {
    pub fn name(self) -> &'static str {
        match self {
            Region::Base => "base",
            Region::Annulus => "annulus",
            Region::Cusp => "cusp",
        }
    }

    pub fn is_base(self) -> bool {
        matches!(self, Region::Base | Region::Annulus)
    }
}

impl std::str::FromStr for Region {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "base" => Ok(Region::Base),
            "annulus" => Ok(Region::Annulus),
            "cusp" => Ok(Region::Cusp),
            other => Err(Error::Config(format!("unknown region '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LoopTag {
    /// Cusp circle `y = 1`, glued to the ball around the first marked point.
    GlueCircleLong,
    /// Cusp circle `y = R`, glued to the ball around the second marked point.
    GlueCircleShort,
    /// Boundary of a removed ball in the base surface.
    RemovedBall,
}

impl LoopTag {
    pub fn name(self) -> &'static str {
        match self {
            LoopTag::GlueCircleLong => "glue_long",
            LoopTag::GlueCircleShort => "glue_short",
            LoopTag::RemovedBall => "removed_ball",
        }
    }
}

impl std::str::FromStr for LoopTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "glue_long" => Ok(LoopTag::GlueCircleLong),
            "glue_short" => Ok(LoopTag::GlueCircleShort),
            "removed_ball" => Ok(LoopTag::RemovedBall),
            other => Err(Error::Config(format!("unknown loop tag '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Vertex {
    pub chart: u32,
    pub u: f64,
    pub v: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Triangle {
    pub vertices: [usize; 3],
    pub region: Region,
    /// Conformal factor `f` of `g = f·(du² + dv²)` at the three corners;
    /// the mass matrix integrates its linear interpolant exactly.
    pub weights: [f64; 3],
}

/// An ordered cycle of boundary vertices, listed by increasing angle.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryLoop {
    pub tag: LoopTag,
    pub vertices: Vec<usize>,
}

/// A triangulated surface made of flat charts glued along vertex identifications.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ChartedMesh {
    pub vertices: Vec<Vertex>,
    pub triangles: Vec<Triangle>,
    pub loops: Vec<BoundaryLoop>,
    pub identifications: Vec<(usize, usize)>,
}

/// Vertex classes after all identifications are applied.
#[derive(Clone, Debug)]
pub struct VertexClasses {
    pub class_of: Vec<usize>,
    pub count: usize,
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

impl ChartedMesh {
    pub fn edge_lengths(&self, t: usize) -> [f64; 3] {
        let [a, b, c] = self.triangles[t].vertices;
        let d = |i: usize, j: usize| {
            let (p, q) = (self.vertices[i], self.vertices[j]);
            (p.u - q.u).hypot(p.v - q.v)
        };
        [d(b, c), d(c, a), d(a, b)]
    }

    /// Signed chart area of triangle `t`.
    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].vertices;
        let (p, q, r) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        0.5 * ((q.u - p.u) * (r.v - p.v) - (r.u - p.u) * (q.v - p.v))
    }

    /// Angles of triangle `t` in degrees, opposite each vertex.
    pub fn angles_deg(&self, t: usize) -> [f64; 3] {
        let [a, b, c] = self.edge_lengths(t);
        let angle = |opp: f64, x: f64, y: f64| {
            ((x * x + y * y - opp * opp) / (2.0 * x * y)).clamp(-1.0, 1.0).acos().to_degrees()
        };
        [angle(a, b, c), angle(b, c, a), angle(c, a, b)]
    }

    /// Smallest triangle angle over triangles whose region passes `filter`.
    pub fn min_angle_deg(&self, filter: impl Fn(Region) -> bool) -> f64 {
        (0..self.triangles.len())
            .filter(|&t| filter(self.triangles[t].region))
            .flat_map(|t| self.angles_deg(t))
            .fold(f64::INFINITY, f64::min)
    }

    /// Checks index ranges and the strict triangle inequality.
    pub fn validate(&self) -> Result<()> {
        let n = self.vertices.len();
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.vertices.iter().any(|&v| v >= n) {
                return Err(Error::DegenerateTriangle { index: t, reason: "vertex index out of range".into() });
            }
            let [a, b, c] = self.edge_lengths(t);
            let longest = a.max(b).max(c);
            if !(a + b + c - longest > longest * (1.0 + 1e-12)) {
                return Err(Error::DegenerateTriangle {
                    index: t,
                    reason: format!("edge lengths {a:e}, {b:e}, {c:e} violate the strict triangle inequality"),
                });
            }
            if tri.weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
                return Err(Error::DegenerateTriangle { index: t, reason: "non-positive conformal weight".into() });
            }
        }
        for &(a, b) in &self.identifications {
            if a >= n || b >= n {
                return Err(Error::Config(format!("identification ({a}, {b}) out of range")));
            }
        }
        for lp in &self.loops {
            if lp.vertices.iter().any(|&v| v >= n) {
                return Err(Error::Config(format!("loop {:?} references a missing vertex", lp.tag)));
            }
        }
        Ok(())
    }

    /// Union-find over the identification pairs. Classes are numbered by
    /// first appearance in vertex order, so the numbering is deterministic.
    pub fn vertex_classes(&self) -> VertexClasses {
        let n = self.vertices.len();
        let mut parent: Vec<usize> = (0..n).collect();
        for &(a, b) in &self.identifications {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
                parent[hi] = lo;
            }
        }
        let mut label = vec![usize::MAX; n];
        let mut class_of = vec![0; n];
        let mut count = 0;
        for v in 0..n {
            let r = find(&mut parent, v);
            if label[r] == usize::MAX {
                label[r] = count;
                count += 1;
            }
            class_of[v] = label[r];
        }
        VertexClasses { class_of, count }
    }

    /// Vertex classes actually used by some triangle.
    fn used_classes(&self, classes: &VertexClasses) -> usize {
        let mut used = vec![false; classes.count];
        for t in &self.triangles {
            for &v in &t.vertices {
                used[classes.class_of[v]] = true;
            }
        }
        used.iter().filter(|&&u| u).count()
    }

    fn edge_incidence(&self, classes: &VertexClasses) -> HashMap<(usize, usize), Vec<(usize, bool)>> {
        let mut edges: HashMap<(usize, usize), Vec<(usize, bool)>> = HashMap::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            for e in 0..3 {
                let a = classes.class_of[tri.vertices[e]];
                let b = classes.class_of[tri.vertices[(e + 1) % 3]];
                let key = (a.min(b), a.max(b));
                edges.entry(key).or_default().push((t, a < b));
            }
        }
        edges
    }

    /// `V − E + F` of the identified complex.
    pub fn euler_characteristic(&self) -> i64 {
        let classes = self.vertex_classes();
        let v = self.used_classes(&classes) as i64;
        let e = self.edge_incidence(&classes).len() as i64;
        v - e + self.triangles.len() as i64
    }

    /// Whether every triangle can be given an orientation so that each
    /// interior edge is traversed in opposite directions by its two triangles.
    pub fn is_orientable(&self) -> bool {
        let classes = self.vertex_classes();
        let edges = self.edge_incidence(&classes);
        let mut neighbours: Vec<Vec<(usize, bool)>> = vec![Vec::new(); self.triangles.len()];
        for inc in edges.values() {
            if inc.len() > 2 {
                return false;
            }
            if let [(t0, d0), (t1, d1)] = inc[..] {
                // Same direction on the shared edge means opposite orientations.
                let flip = d0 == d1;
                neighbours[t0].push((t1, flip));
                neighbours[t1].push((t0, flip));
            }
        }
        let mut sign: Vec<Option<bool>> = vec![None; self.triangles.len()];
        for start in 0..self.triangles.len() {
            if sign[start].is_some() {
                continue;
            }
            sign[start] = Some(false);
            let mut stack = vec![start];
            while let Some(t) = stack.pop() {
                let st = sign[t].unwrap();
                for &(n, flip) in &neighbours[t] {
                    let want = st ^ flip;
                    match sign[n] {
                        None => {
                            sign[n] = Some(want);
                            stack.push(n);
                        }
                        Some(s) if s != want => return false,
                        _ => {}
                    }
                }
            }
        }
        true
    }

    /// Number of connected components of the identified complex.
    pub fn component_count(&self) -> usize {
        let classes = self.vertex_classes();
        let mut parent: Vec<usize> = (0..classes.count).collect();
        for t in &self.triangles {
            let c: Vec<usize> = t.vertices.iter().map(|&v| classes.class_of[v]).collect();
            for &other in &c[1..] {
                let (ra, rb) = (find(&mut parent, c[0]), find(&mut parent, other));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
        let mut roots = std::collections::BTreeSet::new();
        for t in &self.triangles {
            roots.insert(find(&mut parent, classes.class_of[t.vertices[0]]));
        }
        roots.len()
    }

    /// Closed polygon length of a loop in its own chart.
    pub fn loop_chart_length(&self, lp: &BoundaryLoop) -> f64 {
        let n = lp.vertices.len();
        (0..n)
            .map(|i| {
                let (p, q) = (self.vertices[lp.vertices[i]], self.vertices[lp.vertices[(i + 1) % n]]);
                (p.u - q.u).hypot(p.v - q.v)
            })
            .sum()
    }

    /// Length of a loop in the surface metric, integrating `sqrt(f)` along
    /// each polygon edge with the trapezoid rule on the corner weights.
    pub fn loop_metric_length(&self, lp: &BoundaryLoop) -> f64 {
        let weight = self.vertex_weights();
        let n = lp.vertices.len();
        (0..n)
            .map(|i| {
                let (a, b) = (lp.vertices[i], lp.vertices[(i + 1) % n]);
                let (p, q) = (self.vertices[a], self.vertices[b]);
                (p.u - q.u).hypot(p.v - q.v) * 0.5 * (weight[a].sqrt() + weight[b].sqrt())
            })
            .sum()
    }

    /// Conformal weight per vertex, read from any incident triangle.
    pub fn vertex_weights(&self) -> Vec<f64> {
        let mut w = vec![f64::NAN; self.vertices.len()];
        for t in &self.triangles {
            for k in 0..3 {
                w[t.vertices[k]] = t.weights[k];
            }
        }
        w
    }

    pub fn loop_with_tag(&self, tag: LoopTag) -> Option<&BoundaryLoop> {
        self.loops.iter().find(|l| l.tag == tag)
    }

    /// Exact conformal area `∫ f` of the P1-interpolated weight.
    pub fn area(&self) -> f64 {
        self.region_area(|_| true)
    }

    pub fn region_area(&self, filter: impl Fn(Region) -> bool) -> f64 {
        (0..self.triangles.len())
            .filter(|&t| filter(self.triangles[t].region))
            .map(|t| {
                let w = self.triangles[t].weights;
                self.signed_area(t).abs() * (w[0] + w[1] + w[2]) / 3.0
            })
            .sum()
    }
}
