//! Forward scattering: the coupled volume-integral system, far-field
//! extraction, synthetic dataset generation, and the noise model.
//!
//! With incident data `f = E_in`, `g = curl E_in` sampled on the grid, the
//! unknowns are the total fields `w1 = u + f`, `w2 = curl u + g` on the
//! scatterer support. They satisfy
//!
//! ```text
//! w1 = f + (k^2 + grad div) K[rho1] + curl K[rho2]
//! w2 = g + k^2 curl K[rho1] + (k^2 + grad div) K[rho2] + rho2
//! rho1 = (P - xi mu^-1 zeta) w1 - (i/k) xi mu^-1 w2
//! rho2 = ik mu^-1 zeta w1 + Q w2
//! ```
//!
//! The `w2` equation is the curl of the `w1` equation combined with the
//! identity `curl curl K[rho] = (k^2 + grad div) K[rho] + rho`, which holds
//! because `K` inverts `-(Laplace + k^2)`. Solving for both fields avoids a
//! lossy discrete curl of the solved electric field. The system is solved
//! with restarted GMRES; the potentials are applied spectrally by
//! [`kernel::SpectralOperator`].
//!
//! Far fields are read off the densities:
//! `u_inf(xh) = 1/(4 pi) [ k^2 xh x rho1^(k xh) x xh + ik xh x rho2^(k xh) ]`
//! with `rho^` the midpoint-rule Fourier transform over the support. The
//! `1/(4 pi)` matches the outgoing-kernel normalisation; every sampling
//! indicator downstream is invariant under positive rescaling of the data.

pub mod fft;
pub mod gmres;
pub mod kernel;

use crate::error::Error;
use crate::farfield::FarFieldData;
use crate::linalg::{self, C64, CMat3, CVec3, Vec3};
use crate::material::{validate_assumption_i, MaterialModel, VolumeGrid};
use crate::sphere::{tangential_basis, UnitDirectionSet};
use crate::Result;
use gmres::{gmres, GmresConfig};
use kernel::SpectralOperator;
use rand_core::{RngCore, SeedableRng};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Solver knobs. `force` skips the material audit (used internally once a
/// dataset-level audit has passed, or to push through boundary cases).
#[derive(Debug, Clone, Copy)]
pub struct ForwardOptions {
    pub gmres: GmresConfig,
    pub force: bool,
}

impl Default for ForwardOptions {
    fn default() -> Self {
        ForwardOptions {
            gmres: GmresConfig::default(),
            force: false,
        }
    }
}

/// Total fields on the full grid plus solver diagnostics.
#[derive(Debug, Clone)]
pub struct ForwardSolution {
    pub w1: Vec<CVec3>,
    pub w2: Vec<CVec3>,
    pub iterations: usize,
    pub residual: f64,
}

/// Incident plane-wave pair `(f, g) = (q e^{ik d.x}, ik d x q e^{ik d.x})`
/// sampled at voxel centers.
pub fn plane_wave_fields(
    grid: &VolumeGrid,
    d: Vec3,
    q: Vec3,
    k: f64,
) -> (Vec<CVec3>, Vec<CVec3>) {
    let dxq = linalg::cross(d, q);
    let mut f = Vec::with_capacity(grid.cell_count());
    let mut g = Vec::with_capacity(grid.cell_count());
    for idx in 0..grid.cell_count() {
        let x = grid.center(idx);
        let phase = C64::new(0.0, k * linalg::dot(d, x)).exp();
        let ik_phase = phase * C64::new(0.0, k);
        f.push([phase * q[0], phase * q[1], phase * q[2]]);
        g.push([ik_phase * dxq[0], ik_phase * dxq[1], ik_phase * dxq[2]]);
    }
    (f, g)
}

/// Per-voxel density coefficients of the coupled system.
struct DensityCoeffs {
    a11: Vec<CMat3>,
    a12: Vec<CMat3>,
    a21: Vec<CMat3>,
    a22: Vec<CMat3>,
}

impl DensityCoeffs {
    fn build(m: &MaterialModel, k: f64) -> Self {
        let ns = m.support_len();
        let mut a11 = Vec::with_capacity(ns);
        let mut a12 = Vec::with_capacity(ns);
        let mut a21 = Vec::with_capacity(ns);
        let mut a22 = Vec::with_capacity(ns);
        for s in 0..ns {
            let ximu = linalg::cmat3_mul(m.xi(s), m.inv_mu_r(s));
            let muzeta = linalg::cmat3_mul(m.inv_mu_r(s), m.zeta(s));
            a11.push(linalg::cmat3_sub(
                &m.contrast_p(s),
                &linalg::cmat3_mul(&ximu, m.zeta(s)),
            ));
            a12.push(linalg::cmat3_scale(&ximu, C64::new(0.0, -1.0 / k)));
            a21.push(linalg::cmat3_scale(&muzeta, C64::new(0.0, k)));
            a22.push(m.contrast_q(s));
        }
        DensityCoeffs { a11, a12, a21, a22 }
    }

    fn densities(&self, s: usize, w1: CVec3, w2: CVec3) -> (CVec3, CVec3) {
        let r1 = linalg::cadd(
            linalg::cmat3_matvec(&self.a11[s], w1),
            linalg::cmat3_matvec(&self.a12[s], w2),
        );
        let r2 = linalg::cadd(
            linalg::cmat3_matvec(&self.a21[s], w1),
            linalg::cmat3_matvec(&self.a22[s], w2),
        );
        (r1, r2)
    }
}

fn ensure_compliant(m: &MaterialModel) -> Result<()> {
    let report = validate_assumption_i(m);
    if !report.compliant() {
        return Err(Error::NonCompliantMaterial(report.violations.join("; ")));
    }
    Ok(())
}

/// Solves the coupled system for one incident field pair.
///
/// `f` and `g` are full-grid voxel samples of the incident field and its
/// curl. Zero-contrast models return `(f, g)` exactly with zero iterations.
pub fn solve_forward(
    m: &MaterialModel,
    f: &[CVec3],
    g: &[CVec3],
    k: f64,
    opts: &ForwardOptions,
) -> Result<ForwardSolution> {
    let grid = m.grid();
    if f.len() != grid.cell_count() || g.len() != grid.cell_count() {
        return Err(Error::invalid("incident fields must cover the full grid"));
    }
    if !opts.force {
        ensure_compliant(m)?;
    }
    let (radius, _margin) = kernel::truncation_radius(grid, m.support_diameter());
    let mut op = SpectralOperator::new(grid, k, radius);
    solve_forward_with(&mut op, m, f, g, k, opts)
}

/// As [`solve_forward`] but reusing a prebuilt spectral operator (the tables
/// depend only on the grid and wavenumber, so multi-direction sweeps share
/// them).
pub fn solve_forward_with(
    op: &mut SpectralOperator,
    m: &MaterialModel,
    f: &[CVec3],
    g: &[CVec3],
    k: f64,
    opts: &ForwardOptions,
) -> Result<ForwardSolution> {
    let grid = m.grid();
    let support = m.support();
    let ns = support.len();
    let vol = grid.cell_volume();

    if ns == 0 || m.is_vacuum() {
        return Ok(ForwardSolution {
            w1: f.to_vec(),
            w2: g.to_vec(),
            iterations: 0,
            residual: 0.0,
        });
    }

    let coeffs = DensityCoeffs::build(m, k);

    // pack (w1, w2) on the support
    let pack = |a: &[CVec3], b: &[CVec3]| -> Vec<C64> {
        let mut x = Vec::with_capacity(6 * ns);
        for &gi in support {
            let gi = gi as usize;
            x.extend_from_slice(&a[gi]);
            x.extend_from_slice(&b[gi]);
        }
        x
    };
    let b = pack(f, g);

    let mut rho1 = vec![linalg::ZERO_CVEC3; ns];
    let mut rho2 = vec![linalg::ZERO_CVEC3; ns];

    let mut apply = |x: &[C64]| -> Vec<C64> {
        for s in 0..ns {
            let w1 = [x[6 * s], x[6 * s + 1], x[6 * s + 2]];
            let w2 = [x[6 * s + 3], x[6 * s + 4], x[6 * s + 5]];
            let (r1, r2) = coeffs.densities(s, w1, w2);
            rho1[s] = r1;
            rho2[s] = r2;
        }
        op.apply(support, &rho1, &rho2, vol);
        let mut y = Vec::with_capacity(6 * ns);
        for (s, &gi) in support.iter().enumerate() {
            let (pa, pb) = op.extract(gi as usize);
            for c in 0..3 {
                y.push(x[6 * s + c] - pa[c]);
            }
            for c in 0..3 {
                y.push(x[6 * s + 3 + c] - pb[c] - rho2[s][c]);
            }
        }
        y
    };

    let out = gmres(&mut apply, &b, Some(&b), &opts.gmres);
    if !out.converged {
        return Err(Error::SolverFailure {
            residual: out.residual,
            iterations: out.iterations,
        });
    }

    // reconstruct the full-grid fields from the converged densities
    for s in 0..ns {
        let x = &out.x[6 * s..6 * s + 6];
        let (r1, r2) = coeffs.densities(s, [x[0], x[1], x[2]], [x[3], x[4], x[5]]);
        rho1[s] = r1;
        rho2[s] = r2;
    }
    op.apply(support, &rho1, &rho2, vol);
    let mut w1 = f.to_vec();
    let mut w2 = g.to_vec();
    for idx in 0..grid.cell_count() {
        let (pa, pb) = op.extract(idx);
        w1[idx] = linalg::cadd(w1[idx], pa);
        w2[idx] = linalg::cadd(w2[idx], pb);
    }
    for (s, &gi) in support.iter().enumerate() {
        w2[gi as usize] = linalg::cadd(w2[gi as usize], rho2[s]);
    }

    Ok(ForwardSolution {
        w1,
        w2,
        iterations: out.iterations,
        residual: out.residual,
    })
}

/// Far-field pattern of a solved state at the given observation directions.
pub fn far_field_from_solution(
    m: &MaterialModel,
    solution: &ForwardSolution,
    observation: &UnitDirectionSet,
    k: f64,
) -> Vec<CVec3> {
    let grid = m.grid();
    let support = m.support();
    let coeffs = DensityCoeffs::build(m, k);
    let vol = grid.cell_volume();

    let densities: Vec<(CVec3, CVec3)> = support
        .iter()
        .enumerate()
        .map(|(s, &gi)| {
            let gi = gi as usize;
            coeffs.densities(s, solution.w1[gi], solution.w2[gi])
        })
        .collect();

    observation
        .points()
        .iter()
        .map(|&xh| {
            let mut rho1_hat = linalg::ZERO_CVEC3;
            let mut rho2_hat = linalg::ZERO_CVEC3;
            for (&gi, (r1, r2)) in support.iter().zip(&densities) {
                let y = grid.center(gi as usize);
                let phase = C64::new(0.0, -k * linalg::dot(xh, y)).exp() * vol;
                for c in 0..3 {
                    rho1_hat[c] += r1[c] * phase;
                    rho2_hat[c] += r2[c] * phase;
                }
            }
            far_field_combine(xh, rho1_hat, rho2_hat, k)
        })
        .collect()
}

/// `1/(4 pi) [ k^2 xh x v1 x xh + ik xh x v2 ]`, exactly tangential to `xh`.
fn far_field_combine(xh: Vec3, v1: CVec3, v2: CVec3, k: f64) -> CVec3 {
    let c = 1.0 / (4.0 * std::f64::consts::PI);
    // xh x (v1 x xh) = P_t(xh) v1; the nested crosses keep the result exactly
    // tangential in floating point
    let p1 = linalg::ccross_rc(xh, linalg::ccross_cr(v1, xh));
    let c2 = linalg::ccross_rc(xh, v2);
    let k2 = k * k;
    let ik = C64::new(0.0, k);
    [
        (p1[0] * k2 + c2[0] * ik) * c,
        (p1[1] * k2 + c2[1] * ik) * c,
        (p1[2] * k2 + c2[2] * ik) * c,
    ]
}

/// Generates the multi-static synthetic dataset: two forward solves per
/// incident direction (one per tangential basis polarization), assembled by
/// linearity into 3x3 entries whose column along the propagation direction
/// is zero.
///
/// Solves for distinct directions are independent; with the `parallel`
/// feature they run on the rayon pool and are merged by direction index, so
/// the result does not depend on the schedule.
pub fn generate_synthetic_dataset(
    m: &MaterialModel,
    incidence: &UnitDirectionSet,
    observation: &UnitDirectionSet,
    k: f64,
    opts: &ForwardOptions,
) -> Result<FarFieldData> {
    if !opts.force {
        ensure_compliant(m)?;
    }
    let inner_opts = ForwardOptions {
        force: true,
        ..*opts
    };
    let (radius, _) = kernel::truncation_radius(m.grid(), m.support_diameter());

    let solve_direction = |op: &mut SpectralOperator, j: usize| -> Result<Vec<CMat3>> {
        let d = incidence.point(j);
        let (e1, e2) = tangential_basis(d);
        let mut columns = Vec::with_capacity(2);
        for q in [e1, e2] {
            let (f, g) = plane_wave_fields(m.grid(), d, q, k);
            let sol = solve_forward_with(op, m, &f, &g, k, &inner_opts)
                .map_err(|e| annotate_direction(e, j))?;
            columns.push(far_field_from_solution(m, &sol, observation, k));
        }
        let mut entries = Vec::with_capacity(observation.len());
        for i in 0..observation.len() {
            let mut u = linalg::CMAT3_ZERO;
            for r in 0..3 {
                for c in 0..3 {
                    u[r][c] = columns[0][i][r] * e1[c] + columns[1][i][r] * e2[c];
                }
            }
            entries.push(u);
        }
        Ok(entries)
    };

    // spectral tables depend only on (grid, k); one operator per worker
    #[cfg(feature = "parallel")]
    let per_direction: Vec<Result<Vec<CMat3>>> = (0..incidence.len())
        .into_par_iter()
        .map_init(
            || SpectralOperator::new(m.grid(), k, radius),
            |op, j| solve_direction(op, j),
        )
        .collect();
    #[cfg(not(feature = "parallel"))]
    let per_direction: Vec<Result<Vec<CMat3>>> = {
        let mut op = SpectralOperator::new(m.grid(), k, radius);
        (0..incidence.len())
            .map(|j| solve_direction(&mut op, j))
            .collect()
    };

    let mut entries = vec![linalg::CMAT3_ZERO; observation.len() * incidence.len()];
    for (j, res) in per_direction.into_iter().enumerate() {
        let col = res?;
        for (i, u) in col.into_iter().enumerate() {
            entries[i * incidence.len() + j] = u;
        }
    }
    FarFieldData::new_matrix(observation.clone(), incidence.clone(), entries, k)
}

fn annotate_direction(e: Error, j: usize) -> Error {
    match e {
        Error::SolverFailure { residual, iterations } => Error::Structural(format!(
            "forward solve for incident direction {j} failed: residual {residual:.3e} after {iterations} iterations"
        )),
        other => other,
    }
}

/// Additive relative noise: `u_delta = u + delta (N / |N|) |u|` where `N`
/// has i.i.d. real and imaginary parts uniform on (-1, 1) from a seeded
/// generator, flattened over all stored complex entries in a fixed order
/// (observation-major entries, row-major within each matrix, real before
/// imaginary). Byte-identical output for identical inputs and seed.
pub fn add_noise(data: &FarFieldData, delta: f64, seed: u64) -> FarFieldData {
    if delta == 0.0 {
        return data.clone();
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut uniform = move || {
        let u = rng.next_u64() >> 11; // 53 random bits
        2.0 * (u as f64) * (1.0 / (1u64 << 53) as f64) - 1.0
    };
    let full = data.mask().is_full() && data.storage() == crate::farfield::Storage::Matrix;

    let mut noise: Vec<CMat3> = Vec::with_capacity(data.entries().len());
    let mut norm_sq = 0.0;
    for _ in 0..data.entries().len() {
        let mut n = linalg::CMAT3_ZERO;
        for r in 0..3 {
            for c in 0..3 {
                let keep = if full {
                    true
                } else {
                    c == 0 && data.mask().keeps(r)
                };
                if keep {
                    let re = uniform();
                    let im = uniform();
                    n[r][c] = C64::new(re, im);
                    norm_sq += n[r][c].norm_sqr();
                }
            }
        }
        noise.push(n);
    }
    let scale = if norm_sq > 0.0 {
        delta * data.flat_norm() / norm_sq.sqrt()
    } else {
        0.0
    };
    let mut out = data.clone();
    for (e, n) in out.entries_mut().iter_mut().zip(&noise) {
        for r in 0..3 {
            for c in 0..3 {
                e[r][c] += n[r][c] * scale;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::material::{MaterialModel, MaterialSpec, Shape, VolumeGrid};
    use crate::oracle;
    use crate::sphere::make_quasi_uniform_sphere;

    fn sphere_spec(tau: f64) -> MaterialSpec {
        MaterialSpec::dielectric(
            Shape::Sphere {
                center: [0.0; 3],
                radius: 0.5,
            },
            C64::new(1.0 + tau, 0.0),
        )
    }

    #[test]
    fn vacuum_passes_incident_field_through() {
        let grid = VolumeGrid::cube([0.0; 3], 1.5, 8).unwrap();
        let m = MaterialModel::vacuum(grid.clone());
        let (f, g) = plane_wave_fields(&grid, [0.0, 0.0, 1.0], [1.0, 0.0, 0.0], 3.0);
        let sol = solve_forward(&m, &f, &g, 3.0, &ForwardOptions::default()).unwrap();
        assert_eq!(sol.iterations, 0);
        assert_eq!(sol.residual, 0.0);
        for (a, b) in sol.w1.iter().zip(&f) {
            for c in 0..3 {
                assert_eq!(a[c], b[c]);
            }
        }
        let obs = make_quasi_uniform_sphere(6).unwrap();
        let ff = far_field_from_solution(&m, &sol, &obs, 3.0);
        for v in ff {
            assert_eq!(linalg::cnorm(v), 0.0);
        }
    }

    #[test]
    fn weak_sphere_stays_near_born() {
        // tau = 0.01 contrast: w1 deviates from f by O(tau).
        let grid = VolumeGrid::cube([0.0; 3], 1.5, 16).unwrap();
        let m = MaterialModel::from_spec(grid.clone(), &sphere_spec(0.01)).unwrap();
        let k = 3.0;
        let (f, g) = plane_wave_fields(&grid, [0.0, 0.0, 1.0], [1.0, 0.0, 0.0], k);
        let opts = ForwardOptions {
            force: true, // lossless dielectric: absorption constants are zero
            ..Default::default()
        };
        let sol = solve_forward(&m, &f, &g, k, &opts).unwrap();
        let mut num = 0.0f64;
        let mut den = 0.0f64;
        for (a, b) in sol.w1.iter().zip(&f) {
            num += linalg::cnorm_sq(linalg::csub(*a, *b));
            den += linalg::cnorm_sq(*b);
        }
        let rel = (num / den).sqrt();
        assert!(rel < 0.05, "deviation {rel}");
        assert!(rel > 1e-5, "suspiciously exact: {rel}");
    }

    #[test]
    fn weak_sphere_far_field_matches_born_closed_form() {
        let grid = VolumeGrid::cube([0.0; 3], 1.5, 32).unwrap();
        let tau = 0.01;
        let k = 3.0;
        let m = MaterialModel::from_spec(grid.clone(), &sphere_spec(tau)).unwrap();
        let d = [0.0, 0.0, 1.0];
        let q = [1.0, 0.0, 0.0];
        let (f, g) = plane_wave_fields(&grid, d, q, k);
        let opts = ForwardOptions {
            force: true,
            gmres: GmresConfig {
                tol: 1e-8,
                ..Default::default()
            },
        };
        let sol = solve_forward(&m, &f, &g, k, &opts).unwrap();
        let obs = make_quasi_uniform_sphere(24).unwrap();
        let ff = far_field_from_solution(&m, &sol, &obs, k);
        let mut err = 0.0f64;
        let mut den = 0.0f64;
        for (i, &xh) in obs.points().iter().enumerate() {
            let born = oracle::born_sphere_far_field(xh, d, k, 0.5, tau, [0.0; 3]);
            let truth = linalg::cmat3_matvec(&born, linalg::to_complex(q));
            err += linalg::cnorm_sq(linalg::csub(ff[i], truth));
            den += linalg::cnorm_sq(truth);
        }
        let rel = (err / den).sqrt();
        assert!(rel < 0.05, "relative far-field error {rel}");
    }

    #[test]
    fn far_fields_are_tangential() {
        let grid = VolumeGrid::cube([0.0; 3], 1.5, 12).unwrap();
        let m = MaterialModel::from_spec(grid.clone(), &sphere_spec(0.2)).unwrap();
        let k = 3.0;
        let (f, g) = plane_wave_fields(&grid, [0.0, 0.0, 1.0], [0.0, 1.0, 0.0], k);
        let opts = ForwardOptions {
            force: true,
            ..Default::default()
        };
        let sol = solve_forward(&m, &f, &g, k, &opts).unwrap();
        let obs = make_quasi_uniform_sphere(20).unwrap();
        for (v, &xh) in far_field_from_solution(&m, &sol, &obs, k)
            .iter()
            .zip(obs.points())
        {
            let n = linalg::cnorm(*v);
            assert!(n > 0.0);
            assert!(linalg::cdot_rc(xh, *v).norm() / n < 1e-12);
        }
    }

    #[test]
    fn dataset_linearity_in_polarization() {
        let grid = VolumeGrid::cube([0.0; 3], 1.2, 10).unwrap();
        let m = MaterialModel::from_spec(
            grid.clone(),
            &sphere_spec(0.3),
        )
        .unwrap();
        let k = 4.0;
        let dirs = make_quasi_uniform_sphere(4).unwrap();
        let opts = ForwardOptions {
            force: true,
            ..Default::default()
        };
        let data = generate_synthetic_dataset(&m, &dirs, &dirs, k, &opts).unwrap();

        // a q1 + b q2 responds as the combination of columns
        let d = dirs.point(1);
        let (e1, e2) = tangential_basis(d);
        let (a, b) = (C64::new(0.7, 0.2), C64::new(-0.3, 1.1));
        for i in 0..dirs.len() {
            let u = data.entry(i, 1);
            let q = [
                e1[0] * a + e2[0] * b,
                e1[1] * a + e2[1] * b,
                e1[2] * a + e2[2] * b,
            ];
            let combined = linalg::cmat3_matvec(u, q);
            let u1 = linalg::cmat3_matvec(u, linalg::to_complex(e1));
            let u2 = linalg::cmat3_matvec(u, linalg::to_complex(e2));
            for c in 0..3 {
                let expect = u1[c] * a + u2[c] * b;
                assert!((combined[c] - expect).norm() < 1e-10);
            }
            // propagation-direction column contributes nothing
            let ud = linalg::cmat3_matvec(u, linalg::to_complex(d));
            assert!(linalg::cnorm(ud) < 1e-12);
        }
    }

    #[test]
    fn zero_contrast_dataset_is_zero() {
        let grid = VolumeGrid::cube([0.0; 3], 1.0, 6).unwrap();
        let m = MaterialModel::vacuum(grid);
        let dirs = make_quasi_uniform_sphere(4).unwrap();
        let data =
            generate_synthetic_dataset(&m, &dirs, &dirs, 2.0, &ForwardOptions::default())
                .unwrap();
        assert_eq!(data.flat_norm(), 0.0);
    }

    #[test]
    fn noise_scales_exactly_and_reproduces() {
        let grid = VolumeGrid::cube([0.0; 3], 1.2, 8).unwrap();
        let m = MaterialModel::from_spec(grid, &sphere_spec(0.5)).unwrap();
        let dirs = make_quasi_uniform_sphere(5).unwrap();
        let opts = ForwardOptions {
            force: true,
            ..Default::default()
        };
        let data = generate_synthetic_dataset(&m, &dirs, &dirs, 3.0, &opts).unwrap();

        let clean = add_noise(&data, 0.0, 7);
        assert_eq!(&clean, &data);

        let noisy = add_noise(&data, 0.3, 7);
        let rel = data.flat_distance(&noisy) / data.flat_norm();
        assert!((rel - 0.3).abs() < 1e-12, "relative perturbation {rel}");

        let again = add_noise(&data, 0.3, 7);
        assert_eq!(noisy, again);
        let other = add_noise(&data, 0.3, 8);
        assert_ne!(noisy, other);
    }
}
