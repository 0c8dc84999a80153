//! Electromagnetic primitives: incident plane waves, probe polarizations and
//! probe fields, the scalar Helmholtz Green's function, and the closed-form
//! resolution kernels of the sampling indicator.
//!
//! Sign convention for the resolution kernels: with `t = k|z|`,
//! `j0(t) = sin(t)/t` and `f(t) = (cos t - j0(t)) / t^2`,
//!
//! ```text
//! W(z) = 4 pi i k f(t) (z x p)
//! V(z) = 4 pi [ (p - (p.zh) zh) j0(t) + (p - 3 (p.zh) zh) f(t) ]
//! ```
//!
//! both equal the spherical integrals with the *negative* phase,
//! `W(z) = int (d x p) e^{-ik d.z} ds(d)` and
//! `V(z) = int ((d x p) x d) e^{-ik d.z} ds(d)`; with the `e^{+ik d.z}`
//! convention `W` flips sign while `V` is unchanged (it is even in `z`).
//! The equalities are pinned against a brute-force quadrature oracle in the
//! test suite; indicator acceptance uses magnitudes only.

use crate::error::Error;
use crate::linalg::{self, C64, CVec3, Vec3};
use crate::sphere::{TangentialField, UnitDirectionSet};
use crate::Result;
use std::f64::consts::PI;

/// Wavenumber, polarization anchor, and probe coefficients shared by the
/// imaging operations.
#[derive(Debug, Clone, Copy)]
pub struct WaveContext {
    k: f64,
    p: Vec3,
    alpha1: C64,
    alpha2: C64,
}

impl WaveContext {
    pub fn new(k: f64, p: Vec3, alpha1: C64, alpha2: C64) -> Result<Self> {
        if !(k > 0.0) {
            return Err(Error::invalid(format!("wavenumber must be positive, got {k}")));
        }
        if !(linalg::norm(p) > 0.0) {
            return Err(Error::invalid("polarization anchor p must be nonzero"));
        }
        if alpha1.norm_sqr() + alpha2.norm_sqr() <= 0.0 {
            return Err(Error::invalid("|alpha1|^2 + |alpha2|^2 must be positive"));
        }
        Ok(WaveContext { k, p, alpha1, alpha2 })
    }

    /// Default probe coefficients `alpha1 = alpha2 = 1/sqrt(2)`, exercising
    /// both terms of the probe polarization.
    pub fn with_default_probe(k: f64, p: Vec3) -> Result<Self> {
        let a = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        WaveContext::new(k, p, a, a)
    }

    pub fn wavenumber(&self) -> f64 {
        self.k
    }

    pub fn anchor(&self) -> Vec3 {
        self.p
    }

    pub fn alphas(&self) -> (C64, C64) {
        (self.alpha1, self.alpha2)
    }
}

/// Incident plane wave `q e^{ik x.d}` with polarization `q` orthogonal to the
/// propagation direction `d`.
pub fn plane_wave(x: Vec3, d: Vec3, q: Vec3, k: f64) -> Result<CVec3> {
    if (linalg::norm(d) - 1.0).abs() > 1e-10 {
        return Err(Error::invalid("plane-wave direction must be a unit vector"));
    }
    if linalg::dot(q, d).abs() > 1e-10 * linalg::norm(q).max(1.0) {
        return Err(Error::invalid(
            "plane-wave polarization must be orthogonal to the direction",
        ));
    }
    let phase = C64::new(0.0, k * linalg::dot(x, d)).exp();
    Ok([phase * q[0], phase * q[1], phase * q[2]])
}

/// Probe polarization `h(d) = alpha1 (d x p) + alpha2 ((d x p) x d)`,
/// tangential to `d` by construction.
pub fn probe_polarization(d: Vec3, ctx: &WaveContext) -> CVec3 {
    let dxp = linalg::cross(d, ctx.p);
    let dxpxd = linalg::cross(dxp, d);
    [
        ctx.alpha1 * dxp[0] + ctx.alpha2 * dxpxd[0],
        ctx.alpha1 * dxp[1] + ctx.alpha2 * dxpxd[1],
        ctx.alpha1 * dxp[2] + ctx.alpha2 * dxpxd[2],
    ]
}

/// Probe field `psi_y(d) = h(d) e^{-ik d.y}` on a direction set.
pub fn probe_field(y: Vec3, directions: &UnitDirectionSet, ctx: &WaveContext) -> TangentialField {
    let values = directions
        .points()
        .iter()
        .map(|&d| {
            let h = probe_polarization(d, ctx);
            let phase = C64::new(0.0, -ctx.k * linalg::dot(d, y)).exp();
            linalg::cscale(h, phase)
        })
        .collect();
    TangentialField::new(directions.clone(), values)
        .expect("probe polarization is tangential by construction")
}

/// Factorization-method test function
/// `phi_y(d) = ((d x p) x d) e^{-ik d.y}`, i.e. the probe field with
/// `alpha1 = 0, alpha2 = 1`.
pub fn fm_test_function(y: Vec3, directions: &UnitDirectionSet, p: Vec3, k: f64) -> TangentialField {
    let ctx = WaveContext::new(k, p, C64::new(0.0, 0.0), C64::new(1.0, 0.0))
        .expect("fm test function context is valid");
    probe_field(y, directions, &ctx)
}

/// `(sin t - t cos t) / t^3`, entire, value `1/3` at `t = 0`.
pub(crate) fn sin_minus_tcos_over_t3(t: f64) -> f64 {
    debug_assert!(t >= 0.0);
    if t < 1e-3 {
        let t2 = t * t;
        1.0 / 3.0 - t2 / 30.0 + t2 * t2 / 840.0
    } else {
        (t.sin() - t * t.cos()) / (t * t * t)
    }
}

/// `(cos t - j0(t)) / t^2`, entire, value `-1/3` at `t = 0`.
fn cos_minus_j0_over_t2(t: f64) -> f64 {
    -sin_minus_tcos_over_t3(t)
}

fn j0(t: f64) -> f64 {
    if t.abs() < 1e-6 {
        1.0 - t * t / 6.0
    } else {
        t.sin() / t
    }
}

/// Resolution kernel `W(z) = 4 pi i k f(k|z|) (z x p)`.
///
/// Zero for `z` parallel to `p` and at `z = 0`; the small-argument branch
/// keeps the evaluation stable near the origin.
pub fn w_kernel(z: Vec3, p: Vec3, k: f64) -> CVec3 {
    let r = linalg::norm(z);
    let t = k * r;
    let factor = C64::new(0.0, 4.0 * PI * k * cos_minus_j0_over_t2(t));
    let zxp = linalg::cross(z, p);
    [factor * zxp[0], factor * zxp[1], factor * zxp[2]]
}

/// Resolution kernel
/// `V(z) = 4 pi [ (p - (p.zh) zh) j0(k|z|) + (p - 3 (p.zh) zh) f(k|z|) ]`.
///
/// The limit `z -> 0` is `(8 pi / 3) p` independent of approach direction.
pub fn v_kernel(z: Vec3, p: Vec3, k: f64) -> CVec3 {
    let r = linalg::norm(z);
    if r == 0.0 {
        return linalg::to_complex(linalg::scale(p, 8.0 * PI / 3.0));
    }
    let zh = linalg::scale(z, 1.0 / r);
    let t = k * r;
    let pz = linalg::dot(p, zh);
    let f = cos_minus_j0_over_t2(t);
    let j = j0(t);
    let mut out = [C64::new(0.0, 0.0); 3];
    for i in 0..3 {
        let perp = p[i] - pz * zh[i];
        let quad = p[i] - 3.0 * pz * zh[i];
        out[i] = C64::new(4.0 * PI * (perp * j + quad * f), 0.0);
    }
    out
}

/// Free-space scalar Helmholtz Green's function
/// `Phi(x, y) = e^{ik|x - y|} / (4 pi |x - y|)`.
pub fn scalar_green(x: Vec3, y: Vec3, k: f64) -> Result<C64> {
    let r = linalg::norm(linalg::sub(x, y));
    if r == 0.0 {
        return Err(Error::invalid("scalar Green's function at coincident points"));
    }
    Ok(C64::new(0.0, k * r).exp() / (4.0 * PI * r))
}
