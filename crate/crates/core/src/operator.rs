//! The discrete far-field operator, its imaginary part, coercivity
//! diagnostics, and the factorization-method indicator.
//!
//! The operator acts on tangential fields over the incidence set as
//! `(F g)(xh_i) = sum_j w_j U(xh_i, d_j) g(d_j)` and is stored as a
//! `(2 n_obs) x (2 n_inc)` complex matrix in the deterministic tangential
//! bases of the two direction sets, with the quadrature weights baked in as
//! a right diagonal factor. Spectral diagnostics (`Im F`, coercivity, the
//! factorization indicator) require the square full-aperture case: equal
//! full-sphere observation and incidence sets with an unmasked matrix
//! dataset. Rectangular or masked data still assembles for indicator-style
//! use.

use crate::error::Error;
use crate::farfield::{FarFieldData, Storage};
use crate::imaging::{IndicatorField, SamplingGrid};
use crate::linalg::{self, hermitian_eigen, CMatrix, CVec3, HermitianEigen, Vec3, C64};
use crate::sphere::{tangential_basis, TangentialField, Topology, UnitDirectionSet};
use crate::Result;
use std::fmt::Write as _;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Quadrature-weighted matrix representation of the far-field operator in
/// tangential-basis coordinates.
#[derive(Debug, Clone)]
pub struct DiscreteFarFieldOperator {
    matrix: CMatrix,
    observation: UnitDirectionSet,
    incidence: UnitDirectionSet,
    obs_bases: Vec<(Vec3, Vec3)>,
    inc_bases: Vec<(Vec3, Vec3)>,
    spectral_ok: bool,
}

/// Builds the tangential-basis matrix from far-field data.
///
/// Masked or vector (measured) data cannot represent the polarization map,
/// so assembly requires matrix storage; masked matrices assemble but are
/// barred from spectral diagnostics.
pub fn assemble_operator(data: &FarFieldData) -> Result<DiscreteFarFieldOperator> {
    if data.storage() != Storage::Matrix {
        return Err(Error::invalid(
            "operator assembly needs matrix-storage data (measured vector data is indicator-only)",
        ));
    }
    let obs = data.observation().clone();
    let inc = data.incidence().clone();
    let obs_bases: Vec<_> = obs.points().iter().map(|&d| tangential_basis(d)).collect();
    let inc_bases: Vec<_> = inc.points().iter().map(|&d| tangential_basis(d)).collect();

    let mut matrix = CMatrix::zeros(2 * obs.len(), 2 * inc.len());
    for i in 0..obs.len() {
        let (o1, o2) = obs_bases[i];
        for j in 0..inc.len() {
            let w = inc.weight(j);
            let (e1, e2) = inc_bases[j];
            let u = data.entry(i, j);
            for (a, oa) in [o1, o2].into_iter().enumerate() {
                for (b, eb) in [e1, e2].into_iter().enumerate() {
                    let ueb = linalg::cmat3_matvec(u, linalg::to_complex(eb));
                    matrix[(2 * i + a, 2 * j + b)] = linalg::cdot_rc(oa, ueb) * w;
                }
            }
        }
    }

    let spectral_ok = data.mask().is_full()
        && obs.topology() == Topology::FullSphere
        && inc.topology() == Topology::FullSphere
        && obs == inc;

    Ok(DiscreteFarFieldOperator {
        matrix,
        observation: obs,
        incidence: inc,
        obs_bases,
        inc_bases,
        spectral_ok,
    })
}

impl DiscreteFarFieldOperator {
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn observation(&self) -> &UnitDirectionSet {
        &self.observation
    }

    pub fn incidence(&self) -> &UnitDirectionSet {
        &self.incidence
    }

    /// Whether spectral diagnostics are admissible (square full-aperture
    /// unmasked case).
    pub fn spectral_ok(&self) -> bool {
        self.spectral_ok
    }

    /// Tangential coefficients of a field on the incidence set.
    pub fn coefficients(&self, g: &TangentialField) -> Vec<C64> {
        g.values()
            .iter()
            .zip(&self.inc_bases)
            .flat_map(|(v, (e1, e2))| [linalg::cdot_rc(*e1, *v), linalg::cdot_rc(*e2, *v)])
            .collect()
    }

    /// Applies the operator to a tangential field, returning far-field
    /// vectors at the observation points.
    pub fn apply(&self, g: &TangentialField) -> Vec<CVec3> {
        let coeffs = self.coefficients(g);
        let out = self.matrix.matvec(&coeffs);
        self.obs_bases
            .iter()
            .enumerate()
            .map(|(i, (o1, o2))| {
                let (a, b) = (out[2 * i], out[2 * i + 1]);
                [
                    o1[0] * a + o2[0] * b,
                    o1[1] * a + o2[1] * b,
                    o1[2] * a + o2[2] * b,
                ]
            })
            .collect()
    }

    /// Quadrature norm squared of `F g` over the observation set.
    pub fn apply_norm_sq(&self, g: &TangentialField) -> f64 {
        let coeffs = self.coefficients(g);
        let out = self.matrix.matvec(&coeffs);
        self.observation
            .weights()
            .iter()
            .enumerate()
            .map(|(i, &w)| w * (out[2 * i].norm_sqr() + out[2 * i + 1].norm_sqr()))
            .sum()
    }
}

/// `Im F = (F - F^H) / (2i)`, Hermitian by construction.
///
/// Only meaningful on the square full-aperture case where the equal
/// quadrature weights make the conjugate transpose the quadrature-space
/// adjoint.
pub fn imaginary_part(op: &DiscreteFarFieldOperator) -> Result<CMatrix> {
    if !op.matrix.is_square() {
        return Err(Error::invalid("Im F needs a square operator"));
    }
    if !op.spectral_ok {
        return Err(Error::invalid(
            "Im F is restricted to full-aperture unmasked synthetic data",
        ));
    }
    let n = op.matrix.rows;
    let mut m = CMatrix::zeros(n, n);
    let half_over_i = C64::new(0.0, -0.5);
    for i in 0..n {
        m[(i, i)] = C64::new(op.matrix[(i, i)].im, 0.0);
        for j in (i + 1)..n {
            let v = (op.matrix[(i, j)] - op.matrix[(j, i)].conj()) * half_over_i;
            m[(i, j)] = v;
            m[(j, i)] = v.conj();
        }
    }
    Ok(m)
}

/// Full Hermitian spectrum of `Im F` with the extreme eigenvalues broken
/// out. `lambda_min` relative to `lambda_max` is the discrete shadow of the
/// coercivity statement: for compliant absorbing media it sits at the solver
/// tolerance floor, and its magnitude under noise guides the factorization
/// truncation rule.
#[derive(Debug, Clone)]
pub struct CoercivityReport {
    pub eigen: HermitianEigen,
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// `lambda_min / lambda_max` (zero when the spectrum vanishes).
    pub relative_min: f64,
}

pub fn coercivity_report(im_f: &CMatrix) -> CoercivityReport {
    let eigen = hermitian_eigen(im_f);
    let lambda_min = *eigen.values.first().unwrap();
    let lambda_max = *eigen.values.last().unwrap();
    let relative_min = if lambda_max != 0.0 {
        lambda_min / lambda_max
    } else {
        0.0
    };
    CoercivityReport {
        eigen,
        lambda_min,
        lambda_max,
        relative_min,
    }
}

impl CoercivityReport {
    /// Spectrum as `index,eigenvalue` CSV (ascending).
    pub fn spectrum_csv(&self) -> String {
        let mut out = String::from("index,eigenvalue\n");
        for (i, v) in self.eigen.values.iter().enumerate() {
            let _ = writeln!(out, "{i},{v}");
        }
        out
    }
}

/// Eigenvalue truncation rule for the factorization indicator.
#[derive(Debug, Clone, Copy)]
pub enum FmCutoff {
    /// Discard eigenpairs with `lambda <= fraction * lambda_max`.
    Fixed(f64),
    /// `max(1e-3, |lambda_min| / lambda_max)`: ties the truncation to the
    /// measured negative tail, which is the empirical noise floor.
    NoiseCalibrated,
}

impl Default for FmCutoff {
    fn default() -> Self {
        FmCutoff::Fixed(1e-3)
    }
}

/// Factorization-method indicator: the reciprocal Picard series
/// `I(y) = [ sum_j |<phi_y, v_j>|^2 / lambda_j ]^-1` over retained
/// eigenpairs of `Im F`, normalized to maximum one over the grid.
pub fn fm_indicator(
    report: &CoercivityReport,
    op: &DiscreteFarFieldOperator,
    grid: &SamplingGrid,
    p: Vec3,
    k: f64,
    cutoff: FmCutoff,
) -> Result<IndicatorField> {
    let values = fm_indicator_values(
        report,
        op,
        &(0..grid.len()).map(|i| grid.point(i)).collect::<Vec<_>>(),
        p,
        k,
        cutoff,
    )?;
    Ok(IndicatorField::from_raw(grid.clone(), values))
}

/// Raw (unnormalized) reciprocal Picard sums at arbitrary points.
pub fn fm_indicator_values(
    report: &CoercivityReport,
    op: &DiscreteFarFieldOperator,
    points: &[Vec3],
    p: Vec3,
    k: f64,
    cutoff: FmCutoff,
) -> Result<Vec<f64>> {
    let lambda_max = report.lambda_max;
    let threshold = match cutoff {
        FmCutoff::Fixed(f) => f * lambda_max,
        FmCutoff::NoiseCalibrated => {
            (1e-3f64).max(report.lambda_min.abs() / lambda_max.max(f64::MIN_POSITIVE))
                * lambda_max
        }
    };
    let retained: Vec<usize> = report
        .eigen
        .values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > threshold)
        .map(|(i, _)| i)
        .collect();
    if retained.is_empty() {
        return Err(Error::DegenerateSpectrum);
    }

    let eval = |y: &Vec3| -> f64 {
        let phi = crate::em::fm_test_function(*y, op.incidence(), p, k);
        let coeffs = op.coefficients(&phi);
        let mut picard = 0.0;
        for &j in &retained {
            let v = &report.eigen.vectors[j];
            let ip: C64 = v.iter().zip(&coeffs).map(|(a, b)| a.conj() * b).sum();
            picard += ip.norm_sqr() / report.eigen.values[j];
        }
        if picard > 0.0 {
            1.0 / picard
        } else {
            0.0
        }
    };

    #[cfg(feature = "parallel")]
    let values: Vec<f64> = points.par_iter().map(eval).collect();
    #[cfg(not(feature = "parallel"))]
    let values: Vec<f64> = points.iter().map(eval).collect();
    Ok(values)
}

/// Plain orthogonality-sampling comparator:
/// `I(y) = sum_j w_j | sum_i w_i q(xh_i) . u_inf(xh_i, d_j, q_j) e^{ik xh_i . y} |^2`
/// with `q(x) = (x cross p) cross x`. The discrete form (a single Herglotz
/// superposition over the observation directions) is this crate's choice of
/// comparator, not a quantity pinned by the factorization analysis.
pub fn osm_indicator(
    data: &FarFieldData,
    grid: &SamplingGrid,
    p: Vec3,
) -> IndicatorField {
    let k = data.wavenumber();
    let obs = data.observation();
    let inc = data.incidence();
    // response of pair (i, j) to the source polarization, masked, dotted
    // with the receiver probe
    let mut amp = vec![C64::new(0.0, 0.0); obs.len() * inc.len()];
    for (j, &d) in inc.points().iter().enumerate() {
        let qj = linalg::cross(linalg::cross(d, p), d);
        for (i, &xh) in obs.points().iter().enumerate() {
            let qi = linalg::cross(linalg::cross(xh, p), xh);
            let u = data.mask().apply(data.response(i, j, linalg::to_complex(qj)));
            amp[i * inc.len() + j] = linalg::cdot_rc(qi, u);
        }
    }

    let eval = |idx: usize| -> f64 {
        let y = grid.point(idx);
        let mut total = 0.0;
        for j in 0..inc.len() {
            let mut inner = C64::new(0.0, 0.0);
            for (i, &xh) in obs.points().iter().enumerate() {
                let phase = C64::new(0.0, k * linalg::dot(xh, y)).exp();
                inner += amp[i * inc.len() + j] * phase * obs.weight(i);
            }
            total += inc.weight(j) * inner.norm_sqr();
        }
        total
    };

    #[cfg(feature = "parallel")]
    let values: Vec<f64> = (0..grid.len()).into_par_iter().map(eval).collect();
    #[cfg(not(feature = "parallel"))]
    let values: Vec<f64> = (0..grid.len()).map(eval).collect();
    IndicatorField::from_raw(grid.clone(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::farfield::FarFieldData;
    use crate::linalg::CMAT3_ZERO;
    use crate::sphere::make_quasi_uniform_sphere;

    /// Random tangential-preserving data: `U_ij = P_t(xh_i) R_ij P_t(d_j)`.
    fn random_tangential_data(n: usize, k: f64) -> FarFieldData {
        let dirs = make_quasi_uniform_sphere(n).unwrap();
        let mut state = 0x5a5a5a5au64;
        let mut next = move || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
        };
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let mut r = CMAT3_ZERO;
                for a in 0..3 {
                    for b in 0..3 {
                        r[a][b] = C64::new(next(), next());
                    }
                }
                let xh = dirs.point(i);
                let d = dirs.point(j);
                let mut u = CMAT3_ZERO;
                for a in 0..3 {
                    for b in 0..3 {
                        let mut s = C64::new(0.0, 0.0);
                        for l in 0..3 {
                            for m in 0..3 {
                                let pt_o = f64::from(u8::from(a == l)) - xh[a] * xh[l];
                                let pt_i = f64::from(u8::from(m == b)) - d[m] * d[b];
                                s += r[l][m] * pt_o * pt_i;
                            }
                        }
                        u[a][b] = s;
                    }
                }
                entries.push(u);
            }
        }
        FarFieldData::new_matrix(dirs.clone(), dirs, entries, k).unwrap()
    }

    #[test]
    fn zero_data_gives_zero_operator() {
        let dirs = make_quasi_uniform_sphere(6).unwrap();
        let data = FarFieldData::new_matrix(
            dirs.clone(),
            dirs,
            vec![CMAT3_ZERO; 36],
            2.0,
        )
        .unwrap();
        let op = assemble_operator(&data).unwrap();
        assert_eq!(op.matrix().frobenius_norm(), 0.0);
    }

    #[test]
    fn identity_like_data_gives_weight_diagonal() {
        let dirs = make_quasi_uniform_sphere(5).unwrap();
        let n = dirs.len();
        let mut entries = vec![CMAT3_ZERO; n * n];
        for (i, &d) in dirs.points().iter().enumerate() {
            let mut pt = CMAT3_ZERO;
            for a in 0..3 {
                for b in 0..3 {
                    pt[a][b] = C64::new(f64::from(u8::from(a == b)) - d[a] * d[b], 0.0);
                }
            }
            entries[i * n + i] = pt;
        }
        let data = FarFieldData::new_matrix(dirs.clone(), dirs.clone(), entries, 2.0).unwrap();
        let op = assemble_operator(&data).unwrap();
        for i in 0..2 * n {
            for j in 0..2 * n {
                let expect = if i == j {
                    dirs.weight(i / 2)
                } else {
                    0.0
                };
                assert!(
                    (op.matrix()[(i, j)] - C64::new(expect, 0.0)).norm() < 1e-14,
                    "entry ({i},{j})"
                );
            }
        }
    }

    #[test]
    fn apply_matches_direct_quadrature_loop() {
        let data = random_tangential_data(8, 3.0);
        let op = assemble_operator(&data).unwrap();
        let ctx = crate::em::WaveContext::with_default_probe(3.0, [1.0, -1.0, 0.5]).unwrap();
        let g = crate::em::probe_field([0.2, -0.4, 0.7], data.incidence(), &ctx);

        let fast = op.apply(&g);
        for (i, fast_v) in fast.iter().enumerate() {
            let mut direct = linalg::ZERO_CVEC3;
            for (j, gv) in g.values().iter().enumerate() {
                let r = data.response(i, j, *gv);
                for c in 0..3 {
                    direct[c] += r[c] * data.incidence().weight(j);
                }
            }
            let scale = linalg::cnorm(direct).max(1e-30);
            assert!(
                linalg::cnorm(linalg::csub(*fast_v, direct)) / scale < 1e-12,
                "observation {i}"
            );
        }
    }

    #[test]
    fn imaginary_part_properties() {
        // F = F^H gives 0; F = iI gives the identity.
        let dirs = make_quasi_uniform_sphere(4).unwrap();
        let n = dirs.len();
        // Hermitian-like data: U_ij = U_ji^H with equal weights makes F = F^H
        let mut entries = vec![CMAT3_ZERO; n * n];
        for i in 0..n {
            for j in 0..n {
                let base = C64::new((i + j) as f64, 0.0);
                let mut u = CMAT3_ZERO;
                for a in 0..3 {
                    u[a][a] = base;
                }
                entries[i * n + j] = u;
            }
        }
        let data =
            FarFieldData::new_matrix(dirs.clone(), dirs.clone(), entries, 2.0).unwrap();
        let op = assemble_operator(&data).unwrap();
        // not exactly F = F^H because of the tangential bases, so check the
        // constructed Im F is Hermitian and the eigenvalues are real
        let im = imaginary_part(&op).unwrap();
        assert!(im.hermiticity_defect() == 0.0);
        let rep = coercivity_report(&im);
        assert_eq!(rep.eigen.values.len(), 2 * n);

        let random = random_tangential_data(6, 2.0);
        let op = assemble_operator(&random).unwrap();
        let im = imaginary_part(&op).unwrap();
        assert!(im.hermiticity_defect() < 1e-13 * im.frobenius_norm().max(1.0));
    }

    #[test]
    fn masked_data_refused_for_spectral_use() {
        let dirs = make_quasi_uniform_sphere(4).unwrap();
        let entries = vec![CMAT3_ZERO; 16];
        let data = FarFieldData::new(
            dirs.clone(),
            dirs,
            entries,
            crate::farfield::ComponentMask::single(3).unwrap(),
            Storage::Matrix,
            2.0,
        )
        .unwrap();
        let op = assemble_operator(&data).unwrap();
        assert!(!op.spectral_ok());
        assert!(imaginary_part(&op).is_err());
    }

    #[test]
    fn zero_operator_coercivity_is_all_zero() {
        let im = CMatrix::zeros(8, 8);
        let rep = coercivity_report(&im);
        assert_eq!(rep.lambda_max, 0.0);
        assert_eq!(rep.relative_min, 0.0);
        let csv = rep.spectrum_csv();
        assert!(csv.starts_with("index,eigenvalue\n0,"));
    }

    #[test]
    fn degenerate_spectrum_rejected() {
        let dirs = make_quasi_uniform_sphere(4).unwrap();
        let data = FarFieldData::new_matrix(
            dirs.clone(),
            dirs.clone(),
            vec![CMAT3_ZERO; 16],
            2.0,
        )
        .unwrap();
        let op = assemble_operator(&data).unwrap();
        let im = imaginary_part(&op).unwrap();
        let rep = coercivity_report(&im);
        let grid = SamplingGrid::new([-1.0; 3], [1.0; 3], [3, 3, 3]).unwrap();
        let r = fm_indicator(&rep, &op, &grid, [1.0, 0.0, 0.0], 2.0, FmCutoff::default());
        assert!(matches!(r, Err(Error::DegenerateSpectrum)));
    }

    #[test]
    fn osm_zero_data_is_zero_field() {
        let dirs = make_quasi_uniform_sphere(5).unwrap();
        let data = FarFieldData::new_matrix(
            dirs.clone(),
            dirs.clone(),
            vec![CMAT3_ZERO; 25],
            2.0,
        )
        .unwrap();
        let grid = SamplingGrid::new([-1.0; 3], [1.0; 3], [4, 4, 4]).unwrap();
        let f = osm_indicator(&data, &grid, [1.0, 0.0, 0.0]);
        assert!(f.is_degenerate());
        assert!(f.values().iter().all(|&v| v == 0.0));
    }
}
