//! Closed-form rotationally symmetric spectra of the truncated cusp.
//!
//! The cusp is `S¹ × [1, R]` with metric `(κy)⁻²(ε²dθ² + dy²)`. Every
//! rotationally symmetric eigenfunction vanishing at `y = 1` has the form
//! `sin((t/κ) log y) · y^{1/2}` with eigenvalue `κ²/4 + t²`. All formulas are
//! written in terms of `L = log R`, which is stored directly so that tiny `ε`
//! never overflows `R`.

use crate::error::{Error, Result};
use std::f64::consts::PI;

/// How the cusp is attached to the base surface.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Attachment {
    /// Both boundary circles are glued to the base (a handle).
    Cylinder,
    /// The far circle is closed up by the antipodal map (a Möbius band).
    CrossCap,
}

impl Attachment {
    pub fn name(self) -> &'static str {
        match self {
            Attachment::Cylinder => "cylinder",
            Attachment::CrossCap => "crosscap",
        }
    }
}

impl std::str::FromStr for Attachment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cylinder" => Ok(Attachment::Cylinder),
            "crosscap" | "cross_cap" | "cross-cap" => Ok(Attachment::CrossCap),
            other => Err(Error::Config(format!("unknown attachment '{other}'"))),
        }
    }
}

/// Lower end of the admissible truncation exponent window.
pub const ALPHA_MIN: f64 = 1.0 / 3.0;
/// Upper end of the admissible truncation exponent window.
pub const ALPHA_MAX: f64 = 9.0 / 16.0;

/// The full parameter tuple of a degenerating cusp.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CuspParams {
    pub epsilon: f64,
    pub kappa: f64,
    pub alpha: f64,
    /// The removed ball has chart radius `ε^k`.
    pub k: u32,
    pub attachment: Attachment,
    log_length: f64,
}

impl CuspParams {
    pub fn new(epsilon: f64, kappa: f64, alpha: f64, k: u32, attachment: Attachment) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::Config(format!("epsilon must lie in (0, 1), got {epsilon}")));
        }
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::Config(format!("kappa must be positive, got {kappa}")));
        }
        if !(alpha > ALPHA_MIN && alpha < ALPHA_MAX) {
            return Err(Error::Config("alpha must lie in (1/3, 9/16)".into()));
        }
        if k < 2 {
            return Err(Error::Config(format!("k must be at least 2, got {k}")));
        }
        Ok(Self {
            epsilon,
            kappa,
            alpha,
            k,
            attachment,
            log_length: epsilon.powf(-alpha),
        })
    }

    /// Same parameters with a different curvature scale.
    pub fn with_kappa(&self, kappa: f64) -> Result<Self> {
        Self::new(self.epsilon, kappa, self.alpha, self.k, self.attachment)
    }

    /// `log R = ε^{-α}`.
    pub fn log_length(&self) -> f64 {
        self.log_length
    }

    /// Chart radius `ε^k` of the removed ball.
    pub fn hole_radius(&self) -> f64 {
        self.epsilon.powi(self.k as i32)
    }

    /// Exponent of the boundary flux scaling, `3α/2 + 1/2`.
    pub fn flux_exponent(&self) -> f64 {
        1.5 * self.alpha + 0.5
    }

    pub fn geometry(&self) -> CuspGeometry {
        CuspGeometry {
            epsilon: self.epsilon,
            kappa: self.kappa,
            log_length: self.log_length,
        }
    }
}

/// The metric data `(ε, κ, log R)` that all closed forms depend on.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CuspGeometry {
    pub epsilon: f64,
    pub kappa: f64,
    pub log_length: f64,
}

impl CuspGeometry {
    pub fn new(epsilon: f64, kappa: f64, log_length: f64) -> Self {
        Self { epsilon, kappa, log_length }
    }

    /// `R`, or `None` when it does not fit in a double.
    pub fn far_end(&self) -> Option<f64> {
        let r = self.log_length.exp();
        r.is_finite().then_some(r)
    }

    /// Bottom of the continuous-spectrum threshold, `κ²/4`.
    pub fn spectral_floor(&self) -> f64 {
        0.25 * self.kappa * self.kappa
    }

    /// Lower bound `κ²/ε²` for eigenvalues of modes that depend on `θ`.
    pub fn nonsymmetric_floor(&self) -> f64 {
        (self.kappa / self.epsilon).powi(2)
    }
}

/// Boundary conditions satisfied by a rotationally symmetric mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryKind {
    /// Vanishes on both circles of the cylinder.
    DirichletDirichlet,
    /// Vanishes at `y = 1`, zero normal derivative at `y = R` (cross cap).
    DirichletNeumann,
    /// Zero normal derivative on both circles.
    NeumannNeumann,
}

/// Which boundary circle a flux is taken over.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CircleEnd {
    /// The circle `y = 1` of length `2πε/κ`.
    Long,
    /// The circle `y = R` of length `2πε/(κR)`.
    Short,
}

pub fn dirichlet_frequency(g: &CuspGeometry, l: usize) -> f64 {
    (l + 1) as f64 * g.kappa * PI / g.log_length
}

pub fn dirichlet_eigenvalue(g: &CuspGeometry, l: usize) -> f64 {
    g.spectral_floor() + dirichlet_frequency(g, l).powi(2)
}

pub fn neumann_eigenvalue(g: &CuspGeometry, l: usize) -> f64 {
    if l == 0 {
        return 0.0;
    }
    let t = l as f64 * g.kappa * PI / g.log_length;
    g.spectral_floor() + t * t
}

/// `(t/κ) cos(tL/κ) + ½ sin(tL/κ)`, proportional to `∂_y f_t` at `y = R`.
fn crosscap_root_function(g: &CuspGeometry, t: f64) -> f64 {
    let x = t * g.log_length / g.kappa;
    (t / g.kappa) * x.cos() + 0.5 * x.sin()
}

fn crosscap_root_derivative(g: &CuspGeometry, t: f64) -> f64 {
    let (k, l) = (g.kappa, g.log_length);
    let x = t * l / k;
    x.cos() / k - (t / k) * (l / k) * x.sin() + 0.5 * (l / k) * x.cos()
}

/// The `(l+1)`-th positive frequency of the cross cap: the root of the
/// Neumann condition at the far circle inside `(lκπ/L, (l+1)κπ/L)`.
pub fn crosscap_frequency(g: &CuspGeometry, l: usize) -> f64 {
    let step = g.kappa * PI / g.log_length;
    let (mut lo, mut hi) = (l as f64 * step, (l + 1) as f64 * step);
    let (mut f_lo, f_hi) = (crosscap_root_function(g, lo), crosscap_root_function(g, hi));
    if l == 0 {
        // t = 0 is a trivial root; the function is positive just above it.
        f_lo = 1.0;
        lo = 0.0;
    }
    assert!(
        f_lo * f_hi < 0.0,
        "cross-cap root not bracketed for l = {l} (f({lo}) = {f_lo}, f({hi}) = {f_hi})"
    );
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = crosscap_root_function(g, mid);
        if f_mid == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if (f_mid > 0.0) == (f_lo > 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    let (a, b) = (l as f64 * step, (l + 1) as f64 * step);
    let mut t = 0.5 * (lo + hi);
    for _ in 0..3 {
        let d = crosscap_root_derivative(g, t);
        if d == 0.0 {
            break;
        }
        let next = t - crosscap_root_function(g, t) / d;
        if next > a && next < b {
            t = next;
        }
    }
    t
}

pub fn crosscap_eigenvalue(g: &CuspGeometry, l: usize) -> f64 {
    g.spectral_floor() + crosscap_frequency(g, l).powi(2)
}

/// `∫ f_t² dA` in the ε-scaled metric for `f_t = sin((t/κ) log y) y^{1/2}`.
pub fn mode_l2_norm_sq(g: &CuspGeometry, t: f64) -> f64 {
    let (k, l) = (g.kappa, g.log_length);
    let bracket = 0.5 * l - (k / (4.0 * t)) * (2.0 * t * l / k).sin();
    2.0 * PI * g.epsilon / (k * k) * bracket
}

/// Area `(2πε/κ²)(1 − 1/R)` of the cusp in the ε-scaled metric.
pub fn cusp_area(g: &CuspGeometry) -> f64 {
    2.0 * PI * g.epsilon / (g.kappa * g.kappa) * (-(-g.log_length).exp_m1())
}

/// Number of rotationally symmetric Dirichlet modes with eigenvalue `≤ lambda`.
pub fn mode_count_below(g: &CuspGeometry, lambda: f64) -> usize {
    let excess = lambda - g.spectral_floor();
    if excess < 0.0 {
        return 0;
    }
    let step = g.kappa * PI / g.log_length;
    // Count (l+1)·step ≤ sqrt(excess), guarding the boundary case exactly.
    let mut n = (excess.sqrt() / step).floor() as usize;
    while n > 0 && dirichlet_eigenvalue(g, n - 1) > lambda {
        n -= 1;
    }
    while dirichlet_eigenvalue(g, n) <= lambda {
        n += 1;
    }
    n
}

/// The curvature scale `κ` at which the `l`-th rotationally symmetric mode
/// has eigenvalue `lambda`. Frequencies scale linearly in `κ` at fixed
/// `log R`, so the eigenvalue is `κ²(1/4 + x²)` with `x` the frequency at `κ = 1`.
pub fn kappa_for_eigenvalue(epsilon: f64, log_length: f64, attachment: Attachment, l: usize, lambda: f64) -> f64 {
    let x = CuspMode::for_attachment(&CuspGeometry::new(epsilon, 1.0, log_length), attachment, l).frequency;
    (lambda / (0.25 + x * x)).sqrt()
}

/// One exact rotationally symmetric eigenmode of the cylinder or cross cap.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CuspMode {
    pub index: usize,
    pub frequency: f64,
    pub eigenvalue: f64,
    pub boundary_kind: BoundaryKind,
    /// Squared `L²` norm of the unnormalized mode in the ε-scaled metric.
    pub l2_norm_sq: f64,
    /// `−∫ ∂_ν ψ` over `y = 1` for the normalized mode, `ν` the outward normal.
    pub flux_long: f64,
    /// Same over `y = R`; only the cylinder has this circle.
    pub flux_short: Option<f64>,
    kappa: f64,
    log_length: f64,
}

impl CuspMode {
    /// The `l`-th Dirichlet mode of the cylinder.
    pub fn dirichlet(g: &CuspGeometry, l: usize) -> Self {
        Self::from_frequency(g, l, dirichlet_frequency(g, l), BoundaryKind::DirichletDirichlet)
    }

    /// The `l`-th mode of the cross cap (Dirichlet at `y = 1`).
    pub fn crosscap(g: &CuspGeometry, l: usize) -> Self {
        Self::from_frequency(g, l, crosscap_frequency(g, l), BoundaryKind::DirichletNeumann)
    }

    pub fn for_attachment(g: &CuspGeometry, attachment: Attachment, l: usize) -> Self {
        match attachment {
            Attachment::Cylinder => Self::dirichlet(g, l),
            Attachment::CrossCap => Self::crosscap(g, l),
        }
    }

    fn from_frequency(g: &CuspGeometry, l: usize, t: f64, kind: BoundaryKind) -> Self {
        let norm_sq = mode_l2_norm_sq(g, t);
        let flux_long = 2.0 * PI * g.epsilon * t / (g.kappa * norm_sq.sqrt());
        let flux_short = (kind == BoundaryKind::DirichletDirichlet).then(|| {
            // At y = R the normalized mode has derivative (t/κ)cos(tL/κ)R^{-1/2};
            // cos(tL/κ) = (-1)^{l+1} makes the outward flux alternate.
            let x = t * g.log_length / g.kappa;
            let length_times_derivative =
                2.0 * PI * g.epsilon * t * x.cos() * (-0.5 * g.log_length).exp();
            -length_times_derivative / (g.kappa * norm_sq.sqrt())
        });
        Self {
            index: l,
            frequency: t,
            eigenvalue: g.spectral_floor() + t * t,
            boundary_kind: kind,
            l2_norm_sq: norm_sq,
            flux_long,
            flux_short,
            kappa: g.kappa,
            log_length: g.log_length,
        }
    }

    /// Mode value at `y = e^s`, safe for `s` far beyond the double range of `y`.
    pub fn value_at_log(&self, s: f64, normalized: bool) -> f64 {
        let v = (self.frequency * s / self.kappa).sin() * (0.5 * s).exp();
        if normalized {
            v / self.l2_norm_sq.sqrt()
        } else {
            v
        }
    }

    /// Derivative `d/dy` of the mode at `y = e^s`.
    pub fn derivative_at_log(&self, s: f64, normalized: bool) -> f64 {
        let x = self.frequency * s / self.kappa;
        let d = ((self.frequency / self.kappa) * x.cos() + 0.5 * x.sin()) * (-0.5 * s).exp();
        if normalized {
            d / self.l2_norm_sq.sqrt()
        } else {
            d
        }
    }

    /// `sin((t/κ) log y) y^{1/2}`, optionally divided by the `L²` norm.
    pub fn value(&self, y: f64, normalized: bool) -> Result<f64> {
        let s = y.ln();
        if !(y >= 1.0) || s > self.log_length * (1.0 + 1e-12) {
            return Err(Error::Domain(format!(
                "y = {y} outside [1, R] with log R = {}",
                self.log_length
            )));
        }
        Ok(self.value_at_log(s, normalized))
    }

    /// Squared norm in the unscaled metric `(κy)⁻²(dθ² + dy²)`.
    pub fn l2_norm_sq_unscaled(&self, g: &CuspGeometry) -> f64 {
        self.l2_norm_sq / g.epsilon
    }

    /// `−∫ ∂_ν ψ` of the normalized mode over the requested circle.
    pub fn boundary_flux(&self, end: CircleEnd) -> Result<f64> {
        match end {
            CircleEnd::Long => Ok(self.flux_long),
            CircleEnd::Short => self
                .flux_short
                .ok_or_else(|| Error::Domain("the cross cap has no short boundary circle".into())),
        }
    }
}

/// Convenience: all Dirichlet modes of the cylinder with eigenvalue `≤ lambda`.
pub fn dirichlet_modes_below(g: &CuspGeometry, lambda: f64) -> Vec<CuspMode> {
    (0..mode_count_below(g, lambda)).map(|l| CuspMode::dirichlet(g, l)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(kappa: f64, log_length: f64) -> CuspGeometry {
        CuspGeometry::new(0.1, kappa, log_length)
    }

    #[test]
    fn dirichlet_and_neumann_tables() {
        let geo = g(2.0, PI);
        assert!((dirichlet_eigenvalue(&geo, 0) - 5.0).abs() < 1e-12);
        assert!((dirichlet_eigenvalue(&geo, 1) - 17.0).abs() < 1e-12);
        assert_eq!(neumann_eigenvalue(&geo, 0), 0.0);
        assert!((neumann_eigenvalue(&geo, 1) - 5.0).abs() < 1e-12);
        assert!((neumann_eigenvalue(&geo, 2) - 17.0).abs() < 1e-12);
    }

    #[test]
    fn mode_count_is_inclusive() {
        let geo = g(2.0, PI);
        assert_eq!(mode_count_below(&geo, 0.9), 0);
        assert_eq!(mode_count_below(&geo, 17.0), 2);
        assert_eq!(mode_count_below(&geo, 16.99), 1);
    }

    #[test]
    fn mode_value_formula() {
        let geo = g(2.0, 10.0);
        let mut mode = CuspMode::dirichlet(&geo, 0);
        mode.frequency = 2.0;
        let y = (PI / 4.0).exp();
        let expected = (PI / 4.0).sin() * (PI / 8.0).exp();
        assert!((mode.value(y, false).unwrap() - expected).abs() < 1e-14);
        assert_eq!(mode.value(1.0, false).unwrap(), 0.0);
        assert!(mode.value(0.5, false).is_err());
    }

    #[test]
    fn dirichlet_mode_vanishes_at_far_end() {
        let geo = g(3.0, 2.5);
        for l in 0..4 {
            let mode = CuspMode::dirichlet(&geo, l);
            assert!(mode.value_at_log(geo.log_length, true).abs() < 1e-12);
        }
    }

    #[test]
    fn dirichlet_norm_has_closed_form() {
        let geo = CuspGeometry::new(0.1, 2.0, 0.1f64.powf(-0.4));
        for l in 0..5 {
            let mode = CuspMode::dirichlet(&geo, l);
            let exact = PI * 0.1 * geo.log_length / 4.0;
            assert!((mode.l2_norm_sq - exact).abs() < 1e-14 * exact);
        }
    }

    #[test]
    fn cusp_area_limits() {
        let huge = CuspGeometry::new(0.1, 2.0, 800.0);
        assert!((cusp_area(&huge) - 0.05 * PI).abs() < 1e-15);
        let geo = CuspGeometry::new(0.1, 2.0, 2.5119);
        let expected = 0.05 * PI * (1.0 - (-2.5119f64).exp());
        assert!((cusp_area(&geo) - expected).abs() < 1e-15);
    }

    #[test]
    fn short_flux_rejected_on_crosscap() {
        let geo = g(1.0, 1.0);
        let mode = CuspMode::crosscap(&geo, 0);
        assert!(mode.boundary_flux(CircleEnd::Short).is_err());
    }

    #[test]
    fn alpha_window_is_validated() {
        let err = CuspParams::new(0.1, 1.0, 0.2, 2, Attachment::CrossCap).unwrap_err();
        assert!(err.to_string().contains("alpha must lie in (1/3, 9/16)"));
        assert!(CuspParams::new(0.1, 1.0, 0.4, 1, Attachment::CrossCap).is_err());
    }

    #[test]
    fn ground_flux_is_positive() {
        let geo = CuspGeometry::new(0.05, 3.0, 0.05f64.powf(-0.4));
        assert!(CuspMode::dirichlet(&geo, 0).flux_long > 0.0);
        assert!(CuspMode::crosscap(&geo, 0).flux_long > 0.0);
    }
}
