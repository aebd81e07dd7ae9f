//! Plain-text mesh format.
//!
//! ```text
//! cusp-spectra-mesh 1
//! vertices <n>
//! <id> <chart> <u> <v>
//! triangles <m>
//! <v0> <v1> <v2> <region> <w0> <w1> <w2>
//! loops <l>
//! <tag> <count> <v...>
//! identifications <p>
//! <a> <b>
//! ```
//!
//! Floats are written with Rust's shortest round-trip formatting, so a mesh
//! survives a write/read cycle bit for bit.

use super::mesh::{BoundaryLoop, ChartedMesh, Triangle, Vertex};
use crate::error::{Error, Result};
use std::fmt::Write as _;

const MAGIC: &str = "cusp-spectra-mesh 1";

pub fn write_mesh(mesh: &ChartedMesh) -> String {
    let mut s = String::new();
    writeln!(s, "{MAGIC}").unwrap();
    writeln!(s, "vertices {}", mesh.vertices.len()).unwrap();
    for (i, v) in mesh.vertices.iter().enumerate() {
        writeln!(s, "{i} {} {:?} {:?}", v.chart, v.u, v.v).unwrap();
    }
    writeln!(s, "triangles {}", mesh.triangles.len()).unwrap();
    for t in &mesh.triangles {
        let [a, b, c] = t.vertices;
        let [w0, w1, w2] = t.weights;
        writeln!(s, "{a} {b} {c} {} {w0:?} {w1:?} {w2:?}", t.region.name()).unwrap();
    }
    writeln!(s, "loops {}", mesh.loops.len()).unwrap();
    for lp in &mesh.loops {
        write!(s, "{} {}", lp.tag.name(), lp.vertices.len()).unwrap();
        for v in &lp.vertices {
            write!(s, " {v}").unwrap();
        }
        s.push('\n');
    }
    writeln!(s, "identifications {}", mesh.identifications.len()).unwrap();
    for (a, b) in &mesh.identifications {
        writeln!(s, "{a} {b}").unwrap();
    }
    s
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next_fields(&mut self) -> Result<Vec<&'a str>> {
        loop {
            let (i, text) = self.inner.next().ok_or(Error::Parse { line: self.line + 1, reason: "unexpected end of file".into() })?;
            self.line = i + 1;
            let text = text.trim();
            if !text.is_empty() && !text.starts_with('#') {
                return Ok(text.split_whitespace().collect());
            }
        }
    }

    fn err(&self, reason: impl Into<String>) -> Error {
        Error::Parse { line: self.line, reason: reason.into() }
    }

    fn section(&mut self, name: &str) -> Result<usize> {
        let f = self.next_fields()?;
        if f.len() != 2 || f[0] != name {
            return Err(self.err(format!("expected '{name} <count>'")));
        }
        f[1].parse().map_err(|_| self.err("bad count"))
    }

    fn parse<T: std::str::FromStr>(&self, s: &str) -> Result<T> {
        s.parse().map_err(|_| self.err(format!("cannot parse '{s}'")))
    }
}

pub fn read_mesh(text: &str) -> Result<ChartedMesh> {
    let mut lines = Lines { inner: text.lines().enumerate(), line: 0 };
    if lines.next_fields()?.join(" ") != MAGIC {
        return Err(lines.err("missing header line"));
    }
    let mut mesh = ChartedMesh::default();
    let n = lines.section("vertices")?;
    for i in 0..n {
        let f = lines.next_fields()?;
        if f.len() != 4 || lines.parse::<usize>(f[0])? != i {
            return Err(lines.err("vertex rows are 'id chart u v' in id order"));
        }
        mesh.vertices.push(Vertex { chart: lines.parse(f[1])?, u: lines.parse(f[2])?, v: lines.parse(f[3])? });
    }
    let m = lines.section("triangles")?;
    for _ in 0..m {
        let f = lines.next_fields()?;
        if f.len() != 7 {
            return Err(lines.err("triangle rows are 'v0 v1 v2 region w0 w1 w2'"));
        }
        mesh.triangles.push(Triangle {
            vertices: [lines.parse(f[0])?, lines.parse(f[1])?, lines.parse(f[2])?],
            region: f[3].parse().map_err(|_| lines.err("bad region"))?,
            weights: [lines.parse(f[4])?, lines.parse(f[5])?, lines.parse(f[6])?],
        });
    }
    let l = lines.section("loops")?;
    for _ in 0..l {
        let f = lines.next_fields()?;
        let count: usize = lines.parse(f.get(1).copied().unwrap_or(""))?;
        if f.len() != count + 2 {
            return Err(lines.err("loop rows are 'tag count v...'"));
        }
        let vertices = f[2..].iter().map(|s| lines.parse(s)).collect::<Result<Vec<usize>>>()?;
        mesh.loops.push(BoundaryLoop { tag: f[0].parse().map_err(|_| lines.err("bad loop tag"))?, vertices });
    }
    let p = lines.section("identifications")?;
    for _ in 0..p {
        let f = lines.next_fields()?;
        if f.len() != 2 {
            return Err(lines.err("identification rows are 'a b'"));
        }
        mesh.identifications.push((lines.parse(f[0])?, lines.parse(f[1])?));
    }
    mesh.validate()?;
    Ok(mesh)
}
