use crate::cusp::{Attachment, CuspParams};
use crate::error::{Error, Result};
use crate::geometry::{BaseSurface, ChartPoint, ChartedMesh, CUSP_CHART};

/// Logarithmic cut-off: 0 at `r_in`, 1 from `r_out` on, and
/// `1 − log(r/r_out)/log(r_in/r_out)` in between.
pub fn log_cutoff(r: f64, r_in: f64, r_out: f64) -> Result<f64> {
    check_radii(r_in, r_out)?;
    Ok(log_cutoff_unchecked(r, r_in, r_out))
}

pub(crate) fn log_cutoff_unchecked(r: f64, r_in: f64, r_out: f64) -> f64 {
    if r >= r_out {
        1.0
    } else if r <= r_in {
        0.0
    } else {
        1.0 - (r / r_out).ln() / (r_in / r_out).ln()
    }
}

fn check_radii(r_in: f64, r_out: f64) -> Result<()> {
    if !(r_in > 0.0 && r_in < r_out && r_out <= 1.0) {
        return Err(Error::Domain(format!("cut-off radii must satisfy 0 < r_in < r_out ≤ 1, got ({r_in}, {r_out})")));
    }
    Ok(())
}

/// Nodal log cut-off around each centre, taken per mesh vertex. Base
/// vertices outside every `B_{r_out}` get 1 and cusp vertices get 0, the
/// value on the glue circle.
pub fn log_cutoff_field(mesh: &ChartedMesh, surface: &BaseSurface, centers: &[ChartPoint], r_in: f64, r_out: f64) -> Result<Vec<f64>> {
    check_radii(r_in, r_out)?;
    Ok(mesh
        .vertices
        .iter()
        .map(|v| {
            if v.chart == CUSP_CHART {
                return 0.0;
            }
            centers
                .iter()
                .filter_map(|c| surface.distance(*c, v))
                .map(|r| log_cutoff_unchecked(r, r_in, r_out))
                .fold(1.0, f64::min)
        })
        .collect())
}

/// Width `w = min(1/ε^k, (R − 1)/2)` of the ramp at the short end of a cylinder.
pub fn ramp_width(params: &CuspParams) -> f64 {
    let far = params.geometry().far_end().unwrap_or(f64::INFINITY);
    (1.0 / params.hole_radius()).min(0.5 * (far - 1.0))
}

/// Ramp `ρ(y)`: 0 below `R − w`, linear up to 1 at `y = R`.
pub fn ramp(params: &CuspParams, y: f64) -> f64 {
    let far = params.geometry().far_end().unwrap_or(f64::INFINITY);
    let w = ramp_width(params);
    ((y - (far - w)) / w).clamp(0.0, 1.0)
}

/// Nodal ramp on the cusp vertices of a mesh (zero on base vertices).
pub fn ramp_cutoff(mesh: &ChartedMesh, params: &CuspParams) -> Result<Vec<f64>> {
    if params.attachment != Attachment::Cylinder {
        return Err(Error::Domain("the ramp cut-off is defined for a cylinder attachment only".into()));
    }
    Ok(mesh
        .vertices
        .iter()
        .map(|v| if v.chart == CUSP_CHART { ramp(params, v.v) } else { 0.0 })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_cutoff_endpoints_and_midpoint() {
        let (a, b) = (1e-4, 1e-2);
        assert_eq!(log_cutoff(a, a, b).unwrap(), 0.0);
        assert_eq!(log_cutoff(b, a, b).unwrap(), 1.0);
        assert!((log_cutoff((a * b).sqrt(), a, b).unwrap() - 0.5).abs() < 1e-14);
        assert!(log_cutoff(0.5, b, a).is_err());
        assert!(log_cutoff(0.5, 0.1, 2.0).is_err());
    }

    #[test]
    fn ramp_endpoints() {
        let p = CuspParams::new(0.1, 3.0, 0.4, 2, Attachment::Cylinder).unwrap();
        let far = p.geometry().far_end().unwrap();
        let w = ramp_width(&p);
        assert!((w - 0.5 * (far - 1.0)).abs() < 1e-12);
        assert_eq!(ramp(&p, far), 1.0);
        assert_eq!(ramp(&p, far - w), 0.0);
        assert_eq!(ramp(&p, 1.0), 0.0);
        let small = CuspParams::new(0.01, 3.0, 0.55, 2, Attachment::Cylinder).unwrap();
        assert!((ramp_width(&small) - 1e4).abs() < 1e-8);
    }
}
