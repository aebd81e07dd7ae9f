use super::mesh::{BoundaryLoop, ChartedMesh, LoopTag};
use crate::cusp::Attachment;
use crate::error::{Error, Result};

/// Angle of the first loop vertex about the loop centroid, in radians.
fn start_angle(mesh: &ChartedMesh, lp: &BoundaryLoop) -> f64 {
    let n = lp.vertices.len() as f64;
    let (cu, cv) = lp.vertices.iter().fold((0.0, 0.0), |(a, b), &i| {
        (a + mesh.vertices[i].u / n, b + mesh.vertices[i].v / n)
    });
    let p = mesh.vertices[lp.vertices[0]];
    (p.v - cv).atan2(p.u - cu)
}

/// Glues a cusp mesh into the removed balls of a base mesh.
///
/// Base vertices keep their indices; cusp vertices follow. The circle
/// `y = 1` is matched to the first removed ball by angle. For a cylinder the
/// circle `y = R` is matched to the second ball by the reflected angle
/// `θ ↦ −θ`, which keeps the handle orientable.
pub fn glue(base: &ChartedMesh, cusp: &ChartedMesh, attachment: Attachment) -> Result<ChartedMesh> {
    let balls: Vec<&BoundaryLoop> = base.loops.iter().filter(|l| l.tag == LoopTag::RemovedBall).collect();
    let needed = match attachment {
        Attachment::Cylinder => 2,
        Attachment::CrossCap => 1,
    };
    if balls.len() != needed {
        return Err(Error::Config(format!(
            "{} attachment needs {needed} removed balls, base mesh has {}",
            attachment.name(),
            balls.len()
        )));
    }
    let long = cusp
        .loop_with_tag(LoopTag::GlueCircleLong)
        .ok_or_else(|| Error::Config("cusp mesh has no long glue circle".into()))?;
    let offset = base.vertices.len();
    let mut mesh = ChartedMesh {
        vertices: base.vertices.iter().chain(&cusp.vertices).copied().collect(),
        triangles: base.triangles.clone(),
        loops: Vec::new(),
        identifications: base.identifications.clone(),
    };
    mesh.triangles.extend(cusp.triangles.iter().map(|t| {
        let mut t = *t;
        t.vertices = t.vertices.map(|v| v + offset);
        t
    }));
    mesh.identifications.extend(cusp.identifications.iter().map(|&(a, b)| (a + offset, b + offset)));

    let mut attach = |ball: &BoundaryLoop, circle: &BoundaryLoop, tag: LoopTag, reflect: bool| -> Result<()> {
        let n = ball.vertices.len();
        if circle.vertices.len() != n {
            return Err(Error::Config(format!(
                "node-count mismatch: removed ball has {n} vertices, cusp circle has {}",
                circle.vertices.len()
            )));
        }
        if start_angle(base, ball).abs() > 1e-6 {
            return Err(Error::Config("removed-ball loop must start at angle 0".into()));
        }
        for i in 0..n {
            let j = if reflect { (n - i) % n } else { i };
            mesh.identifications.push((ball.vertices[j], circle.vertices[i] + offset));
        }
        mesh.loops.push(BoundaryLoop { tag, vertices: ball.vertices.clone() });
        Ok(())
    };
    attach(balls[0], long, LoopTag::GlueCircleLong, false)?;
    if attachment == Attachment::Cylinder {
        let short = cusp
            .loop_with_tag(LoopTag::GlueCircleShort)
            .ok_or_else(|| Error::Config("cylinder mesh has no short glue circle".into()))?;
        attach(balls[1], short, LoopTag::GlueCircleShort, true)?;
    }
    mesh.validate()?;
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cusp::CuspParams;
    use crate::geometry::base::{build_base_mesh, BaseSurface, Hole};
    use crate::geometry::cusp_mesh::build_cusp_mesh;

    fn glued(attachment: Attachment) -> (ChartedMesh, f64) {
        let p = CuspParams::new(0.1, 3.0, 0.4, 2, attachment).unwrap();
        let s = BaseSurface::flat_torus(1.0, 1.5, attachment).unwrap();
        let holes: Vec<Hole> = (0..s.marked_points.len()).map(|marked| Hole { marked, radius: p.hole_radius() }).collect();
        let base = build_base_mesh(&s, 0.08, 16, &holes, 0.0).unwrap();
        let cusp = build_cusp_mesh(&p, 16, 4).unwrap();
        let expected = base.area() + cusp.area();
        (glue(&base, &cusp, attachment).unwrap(), expected)
    }

    #[test]
    fn cylinder_adds_an_orientable_handle() {
        let (m, area) = glued(Attachment::Cylinder);
        assert_eq!(m.euler_characteristic(), -2);
        assert!(m.is_orientable());
        assert_eq!(m.component_count(), 1);
        assert!((m.area() - area).abs() < 1e-12);
    }

    #[test]
    fn cross_cap_is_non_orientable() {
        let (m, _) = glued(Attachment::CrossCap);
        assert_eq!(m.euler_characteristic(), -1);
        assert!(!m.is_orientable());
    }

    #[test]
    fn node_count_mismatch_is_reported() {
        let p = CuspParams::new(0.1, 3.0, 0.4, 2, Attachment::CrossCap).unwrap();
        let s = BaseSurface::flat_torus(1.0, 1.5, Attachment::CrossCap).unwrap();
        let base = build_base_mesh(&s, 0.08, 16, &[Hole { marked: 0, radius: p.hole_radius() }], 0.0).unwrap();
        let cusp = build_cusp_mesh(&p, 32, 4).unwrap();
        assert!(matches!(glue(&base, &cusp, Attachment::CrossCap), Err(Error::Config(_))));
    }
}
