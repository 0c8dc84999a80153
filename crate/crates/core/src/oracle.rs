//! Independent closed-form and brute-force references.
//!
//! Everything here is deliberately computed by a *different* route than the
//! production code it is checked against: the product quadrature rule is
//! Gauss-Legendre in the polar angle (the production direction sets are
//! Fibonacci spirals), and the weak-scattering far field is the closed-form
//! first-order expression (the production solver iterates the full volume
//! integral equation). The validation harness and the test suites both feed
//! on this module.

use crate::em;
use crate::linalg::{self, C64, CMat3, CVec3, Vec3};
use crate::sphere::{Topology, UnitDirectionSet};

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
///
/// Newton iteration on the Legendre polynomial; exact for polynomials of
/// degree `2 m - 1`.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 1);
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m {
        // Tricomi-style initial guess, then Newton.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        for _ in 0..100 {
            // p0, p1 hold P_{j-1}(x), P_j(x)
            let mut p0 = 1.0;
            let mut p1 = x;
            for j in 2..=m {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            // derivative of P_m via recurrence
            let dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let mut p0 = 1.0;
        let mut p1 = x;
        for j in 2..=m {
            let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
            p0 = p1;
            p1 = p2;
        }
        let dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
        nodes[m - 1 - i] = x;
        weights[m - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Product quadrature on the unit sphere: `n_polar` Gauss-Legendre levels in
/// `cos(theta)` times `n_azimuth` equispaced azimuths. Near-exact for
/// band-limited integrands well beyond what the equal-weight spiral sets
/// deliver, which is what makes it a usable oracle.
pub fn product_sphere_rule(n_polar: usize, n_azimuth: usize) -> UnitDirectionSet {
    let (nodes, gl_weights) = gauss_legendre(n_polar);
    let mut points = Vec::with_capacity(n_polar * n_azimuth);
    let mut weights = Vec::with_capacity(n_polar * n_azimuth);
    let dphi = 2.0 * std::f64::consts::PI / n_azimuth as f64;
    for (z, wz) in nodes.iter().zip(&gl_weights) {
        let r = (1.0 - z * z).max(0.0).sqrt();
        for j in 0..n_azimuth {
            let phi = dphi * (j as f64 + 0.5);
            points.push([r * phi.cos(), r * phi.sin(), *z]);
            weights.push(wz * dphi);
        }
    }
    UnitDirectionSet::new(points, weights, Topology::Custom)
        .expect("product rule weights are positive and points are unit")
}

/// Brute-force Herglotz integrals
/// `int (d x p) e^{-ik d.z} ds(d)` and `int ((d x p) x d) e^{-ik d.z} ds(d)`
/// over a quadrature rule.
pub fn herglotz_kernel_quadrature(
    rule: &UnitDirectionSet,
    z: Vec3,
    p: Vec3,
    k: f64,
) -> (CVec3, CVec3) {
    let mut w = linalg::ZERO_CVEC3;
    let mut v = linalg::ZERO_CVEC3;
    for (&d, &wt) in rule.points().iter().zip(rule.weights()) {
        let phase = C64::new(0.0, -k * linalg::dot(d, z)).exp() * wt;
        let dxp = linalg::cross(d, p);
        let dxpxd = linalg::cross(dxp, d);
        for i in 0..3 {
            w[i] += phase * dxp[i];
            v[i] += phase * dxpxd[i];
        }
    }
    (w, v)
}

/// Ball shape factor `S(kappa) = 4 pi a^3 (sin r - r cos r) / r^3`,
/// `r = kappa a`; equals the ball volume at `kappa = 0`.
pub fn ball_shape_factor(kappa: f64, radius: f64) -> f64 {
    let rho = kappa * radius;
    4.0 * std::f64::consts::PI * radius.powi(3) * em::sin_minus_tcos_over_t3(rho)
}

/// First-order (weak-scattering) far-field matrix of a homogeneous
/// permittivity ball: contrast `eps_r = (1 + tau) I` on a ball of the given
/// radius and center, vacuum elsewhere.
///
/// `U(xh, d) = (k^2 tau / 4 pi) S(k|d - xh|) e^{ik (d - xh).c} P_t(xh) P_t(d)`
///
/// where `P_t` are tangential projectors; the right-hand projector pins the
/// convention that the polarization column along `d` contributes nothing.
pub fn born_sphere_far_field(
    xhat: Vec3,
    d: Vec3,
    k: f64,
    radius: f64,
    tau: f64,
    center: Vec3,
) -> CMat3 {
    let diff = linalg::sub(d, xhat);
    let s = ball_shape_factor(k * linalg::norm(diff), radius);
    let phase = C64::new(0.0, k * linalg::dot(diff, center)).exp();
    let amp = phase * (k * k * tau / (4.0 * std::f64::consts::PI) * s);
    let mut m = linalg::CMAT3_ZERO;
    for i in 0..3 {
        for j in 0..3 {
            let pt_obs = f64::from(u8::from(i == j)) - xhat[i] * xhat[j];
            m[i][j] = C64::new(pt_obs, 0.0);
        }
    }
    // right-multiply by P_t(d) and scale
    let mut out = linalg::CMAT3_ZERO;
    for i in 0..3 {
        for j in 0..3 {
            let mut s = C64::new(0.0, 0.0);
            for l in 0..3 {
                let pt_inc = f64::from(u8::from(l == j)) - d[l] * d[j];
                s += m[i][l] * pt_inc;
            }
            out[i][j] = s * amp;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn gauss_legendre_low_orders() {
        let (n2, w2) = gauss_legendre(2);
        let x = 1.0 / 3.0_f64.sqrt();
        assert!((n2[0] + x).abs() < 1e-14 && (n2[1] - x).abs() < 1e-14);
        assert!((w2[0] - 1.0).abs() < 1e-14 && (w2[1] - 1.0).abs() < 1e-14);

        let (n3, w3) = gauss_legendre(3);
        assert!(n3[1].abs() < 1e-14);
        assert!((w3[1] - 8.0 / 9.0).abs() < 1e-14);
        assert!((n3[2] - (3.0f64 / 5.0).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn gauss_legendre_integrates_high_degree_monomials() {
        let (n, w) = gauss_legendre(40);
        // int x^78 dx over [-1,1] = 2/79, degree 78 <= 2*40-1
        let q: f64 = n.iter().zip(&w).map(|(x, w)| w * x.powi(78)).sum();
        assert!((q - 2.0 / 79.0).abs() < 1e-14);
    }

    #[test]
    fn product_rule_integrates_plane_wave_phase_sharply() {
        let rule = product_sphere_rule(40, 50);
        let zhat = linalg::normalize([0.2, -0.7, 0.4]);
        for kz in [0.5, 7.0, 20.0] {
            let mut sum = C64::new(0.0, 0.0);
            for (d, &w) in rule.points().iter().zip(rule.weights()) {
                sum += C64::new(0.0, kz * linalg::dot(*d, zhat)).exp() * w;
            }
            let truth = 4.0 * PI * kz.sin() / kz;
            assert!(
                (sum - truth).norm() < 1e-9,
                "kz={kz}: err {}",
                (sum - truth).norm()
            );
        }
    }

    #[test]
    fn shape_factor_zero_frequency_is_volume() {
        let a = 0.5;
        let v = ball_shape_factor(0.0, a);
        assert!((v - 4.0 * PI * a.powi(3) / 3.0).abs() < 1e-14);
    }

    #[test]
    fn born_matrix_kills_radial_columns_and_rows() {
        let xh = linalg::normalize([0.3, 0.4, -0.5]);
        let d = linalg::normalize([-0.2, 0.9, 0.1]);
        let m = born_sphere_far_field(xh, d, 3.0, 0.5, 0.01, [0.0; 3]);
        // row space tangential to xh
        let col = [m[0][1], m[1][1], m[2][1]];
        assert!(linalg::cdot_rc(xh, col).norm() < 1e-14 * linalg::cnorm(col).max(1.0));
        // d column is zero
        let dcol = linalg::cmat3_matvec(&m, linalg::to_complex(d));
        assert!(linalg::cnorm(dcol) < 1e-14);
    }
}
