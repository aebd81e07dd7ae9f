//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use cusp_spectra::cusp::CuspGeometry;
use std::f64::consts::PI;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Exponential integral `E₁(x)` for `x > 0`.
pub fn e1(x: f64) -> f64 {
    if x <= 1.0 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..60 {
            term *= -x / k as f64;
            sum -= term / k as f64;
        }
        -EULER_GAMMA - x.ln() + sum
    } else {
        // Modified Lentz evaluation of the continued fraction.
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..200 {
            let an = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (an * d + b);
            c = b + an / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h * (-x).exp()
    }
}

/// Ewald sum for the mean-zero Green's function of `−∇²` on the flat torus
/// `[0,a]×[0,b]`, returned as `(G(x), G(x) − (1/2π)log(1/|x|))`.
pub fn torus_green(a: f64, b: f64, x: f64, y: f64) -> (f64, f64) {
    let area = a * b;
    let beta = PI / area;
    let (x, y) = (x - a * (x / a).round(), y - b * (y / b).round());
    let mut real = 0.0;
    let mut near = 0.0;
    let n = 6;
    for i in -n..=n {
        for j in -n..=n {
            let (u, v) = (x + i as f64 * a, y + j as f64 * b);
            let r2 = u * u + v * v;
            if i == 0 && j == 0 {
                near = r2;
                continue;
            }
            real += e1(beta * r2) / (4.0 * PI);
        }
    }
    let mut recip = 0.0;
    for i in -n..=n {
        for j in -n..=n {
            if i == 0 && j == 0 {
                continue;
            }
            let (kx, ky) = (2.0 * PI * i as f64 / a, 2.0 * PI * j as f64 / b);
            let k2 = kx * kx + ky * ky;
            recip += (kx * x + ky * y).cos() * (-k2 / (4.0 * beta)).exp() / (area * k2);
        }
    }
    let constant = real + recip - 1.0 / (4.0 * beta * area);
    let log_kernel = if near > 0.0 { -near.sqrt().ln() / (2.0 * PI) } else { 0.0 };
    let singular = if near > 0.0 { e1(beta * near) / (4.0 * PI) } else { f64::INFINITY };
    // E₁(βr²)/4π = (−γ − log β)/4π + (1/2π)log(1/r) + O(r²).
    let regular = if near > 0.0 {
        singular - log_kernel + constant
    } else {
        (-EULER_GAMMA - beta.ln()) / (4.0 * PI) + constant
    };
    (singular + constant, regular)
}

/// Truncated Fourier lattice sum `Σ' e^{2πiξ·x}/(4π²|ξ|²)/area`, used to
/// cross-check the Ewald sum away from the origin.
pub fn torus_green_fourier(a: f64, b: f64, x: f64, y: f64, n: i64) -> f64 {
    let mut s = 0.0;
    for i in -n..=n {
        for j in -n..=n {
            if i == 0 && j == 0 {
                continue;
            }
            let (kx, ky) = (2.0 * PI * i as f64 / a, 2.0 * PI * j as f64 / b);
            s += (kx * x + ky * y).cos() / (kx * kx + ky * ky);
        }
    }
    s / (a * b)
}

pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut f_lo = f(lo);
    assert!(f_lo * f(hi) < 0.0);
    while hi - lo > 1e-15 * hi.abs().max(1.0) {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if (fm > 0.0) == (f_lo > 0.0) {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// `∫_{S¹×[1,R]} f_t² dA` for the metric `(κy)⁻²(ε²dθ² + dy²)`, integrated in `y`.
pub fn norm_sq_oracle(g: &CuspGeometry, t: f64) -> f64 {
    let r = g.log_length.exp();
    let f = |y: f64| {
        let v = (t / g.kappa * y.ln()).sin() * y.sqrt();
        v * v * g.epsilon / (g.kappa * g.kappa * y * y)
    };
    // Split into pieces so the adaptive rule sees each oscillation.
    let pieces = 64;
    let mut total = 0.0;
    for i in 0..pieces {
        let a = (g.log_length * i as f64 / pieces as f64).exp();
        let b = if i + 1 == pieces { r } else { (g.log_length * (i + 1) as f64 / pieces as f64).exp() };
        total += simpson(&f, a, b, 1e-16);
    }
    2.0 * PI * total
}

/// `−∫ ∂_ν ψ` at `y = 1` by differentiating the normalized mode numerically.
pub fn flux_oracle(g: &CuspGeometry, t: f64, norm_sq: f64) -> f64 {
    let f = |y: f64| (t / g.kappa * y.ln()).sin() * y.sqrt() / norm_sq.sqrt();
    let central = |h: f64| (f(1.0 + h) - f(1.0 - h)) / (2.0 * h);
    // Three-level Richardson table on central differences.
    let h = 1e-2;
    let d1 = central(h);
    let d2 = central(h / 2.0);
    let d3 = central(h / 4.0);
    let e1 = (4.0 * d2 - d1) / 3.0;
    let e2 = (4.0 * d3 - d2) / 3.0;
    let derivative = (16.0 * e2 - e1) / 15.0;
    // Outward unit normal at y = 1 is −κy∂_y; the circle has length 2πε/κ.
    let normal_derivative = -g.kappa * derivative;
    -(2.0 * PI * g.epsilon / g.kappa) * normal_derivative
}
