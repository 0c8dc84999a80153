//! Voxel material models on uniform grids, shape primitives, and the
//! well-posedness audit of the constitutive tensors.
//!
//! A scatterer is described by four complex 3x3 tensor fields: relative
//! permittivity `eps_r`, inverse relative permeability `inv_mu_r`, and the
//! magnetoelectric couplings `xi`, `zeta`. Outside the support the medium is
//! exactly vacuum (`eps_r = inv_mu_r = I`, `xi = zeta = 0`). The audit checks
//! the symmetry, ellipticity, absorption, and coupling-smallness conditions
//! that make the forward problem well posed and the far-field operator's
//! imaginary part coercive.

use crate::error::Error;
use crate::linalg::{
    self, cmat3_diag, cmat3_frobenius, cmat3_hermitian_eigen_bounds, cmat3_hermitian_part,
    cmat3_identity, cmat3_mul, cmat3_scale, cmat3_skew_part, cmat3_sub, CMat3, Vec3, C64,
};
use crate::Result;

/// Uniform voxel grid: `n[a]` cells per axis with common spacing `h`,
/// covering the box `[lower, lower + n h)`. Field samples live at voxel
/// centers `lower + h (i + 1/2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct VolumeGrid {
    lower: Vec3,
    n: [usize; 3],
    h: f64,
}

impl VolumeGrid {
    pub fn new(lower: Vec3, n: [usize; 3], h: f64) -> Result<Self> {
        if n.iter().any(|&c| c == 0) {
            return Err(Error::invalid("grid needs at least one cell per axis"));
        }
        if !(h > 0.0) {
            return Err(Error::invalid("grid spacing must be positive"));
        }
        Ok(VolumeGrid { lower, n, h })
    }

    /// Cube of side `side` centered at `center` with `n` cells per axis.
    pub fn cube(center: Vec3, side: f64, n: usize) -> Result<Self> {
        if !(side > 0.0) {
            return Err(Error::invalid("cube side must be positive"));
        }
        let h = side / n as f64;
        let lower = [
            center[0] - side / 2.0,
            center[1] - side / 2.0,
            center[2] - side / 2.0,
        ];
        VolumeGrid::new(lower, [n, n, n], h)
    }

    pub fn lower(&self) -> Vec3 {
        self.lower
    }

    pub fn n(&self) -> [usize; 3] {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn cell_count(&self) -> usize {
        self.n[0] * self.n[1] * self.n[2]
    }

    pub fn cell_volume(&self) -> f64 {
        self.h * self.h * self.h
    }

    pub fn side_lengths(&self) -> Vec3 {
        [
            self.n[0] as f64 * self.h,
            self.n[1] as f64 * self.h,
            self.n[2] as f64 * self.h,
        ]
    }

    /// Voxel center, `x` fastest: `idx = ix + nx (iy + ny iz)`.
    pub fn center(&self, idx: usize) -> Vec3 {
        let (ix, iy, iz) = self.unravel(idx);
        [
            self.lower[0] + self.h * (ix as f64 + 0.5),
            self.lower[1] + self.h * (iy as f64 + 0.5),
            self.lower[2] + self.h * (iz as f64 + 0.5),
        ]
    }

    pub fn unravel(&self, idx: usize) -> (usize, usize, usize) {
        let ix = idx % self.n[0];
        let iy = (idx / self.n[0]) % self.n[1];
        let iz = idx / (self.n[0] * self.n[1]);
        (ix, iy, iz)
    }

    /// True when the spacing resolves the vacuum wavelength with at least
    /// 8 points (`h <= 2 pi / (8 k)`). Coarser grids still run, callers
    /// should warn.
    pub fn resolves_wavelength(&self, k: f64) -> bool {
        self.h <= 2.0 * std::f64::consts::PI / (8.0 * k)
    }
}

/// Geometric support primitives for piecewise-constant material models.
#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Sphere { center: Vec3, radius: f64 },
    Cuboid { lower: Vec3, upper: Vec3 },
    Union(Vec<Shape>),
}

impl Shape {
    /// Axis-aligned L-shaped slab: the union of two cuboids
    /// `[-a, a] x [-a, 0] x [-t, t]` and `[-a, 0] x [0, a] x [-t, t]`.
    pub fn l_shape(arm: f64, thickness: f64) -> Shape {
        Shape::Union(vec![
            Shape::Cuboid {
                lower: [-arm, -arm, -thickness],
                upper: [arm, 0.0, thickness],
            },
            Shape::Cuboid {
                lower: [-arm, 0.0, -thickness],
                upper: [0.0, arm, thickness],
            },
        ])
    }

    pub fn contains(&self, x: Vec3) -> bool {
        match self {
            Shape::Sphere { center, radius } => {
                linalg::norm(linalg::sub(x, *center)) <= *radius
            }
            Shape::Cuboid { lower, upper } => {
                (0..3).all(|a| x[a] >= lower[a] && x[a] <= upper[a])
            }
            Shape::Union(parts) => parts.iter().any(|s| s.contains(x)),
        }
    }

    /// Euclidean distance to the shape (zero inside).
    pub fn distance(&self, x: Vec3) -> f64 {
        match self {
            Shape::Sphere { center, radius } => {
                (linalg::norm(linalg::sub(x, *center)) - radius).max(0.0)
            }
            Shape::Cuboid { lower, upper } => {
                let mut sq = 0.0;
                for a in 0..3 {
                    let d = (lower[a] - x[a]).max(0.0).max(x[a] - upper[a]);
                    sq += d * d;
                }
                sq.sqrt()
            }
            Shape::Union(parts) => parts
                .iter()
                .map(|s| s.distance(x))
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// Loose bounding ball (center and radius) used for geometry checks.
    pub fn bounding_ball(&self) -> (Vec3, f64) {
        match self {
            Shape::Sphere { center, radius } => (*center, *radius),
            Shape::Cuboid { lower, upper } => {
                let c = linalg::scale(linalg::add(*lower, *upper), 0.5);
                let r = 0.5 * linalg::norm(linalg::sub(*upper, *lower));
                (c, r)
            }
            Shape::Union(parts) => {
                let balls: Vec<_> = parts.iter().map(|s| s.bounding_ball()).collect();
                // center of mass of part centers, radius covering all parts
                let mut c = [0.0; 3];
                for (bc, _) in &balls {
                    c = linalg::add(c, *bc);
                }
                c = linalg::scale(c, 1.0 / balls.len() as f64);
                let r = balls
                    .iter()
                    .map(|(bc, br)| linalg::norm(linalg::sub(*bc, c)) + br)
                    .fold(0.0, f64::max);
                (c, r)
            }
        }
    }
}

/// Constant tensor values assigned to one shape.
#[derive(Debug, Clone)]
pub struct MaterialSpec {
    pub shape: Shape,
    pub eps_r: CMat3,
    pub inv_mu_r: CMat3,
    pub xi: CMat3,
    pub zeta: CMat3,
}

impl MaterialSpec {
    /// Isotropic permittivity-only scatterer (`mu_r = I`, no coupling).
    pub fn dielectric(shape: Shape, eps_r: C64) -> Self {
        MaterialSpec {
            shape,
            eps_r: cmat3_scale(&cmat3_identity(), eps_r),
            inv_mu_r: cmat3_identity(),
            xi: linalg::CMAT3_ZERO,
            zeta: linalg::CMAT3_ZERO,
        }
    }
}

/// Voxel-sampled material tensors with their support mask.
#[derive(Debug, Clone)]
pub struct MaterialModel {
    grid: VolumeGrid,
    support: Vec<u32>,
    eps_r: Vec<CMat3>,
    inv_mu_r: Vec<CMat3>,
    xi: Vec<CMat3>,
    zeta: Vec<CMat3>,
}

const SYMMETRY_TOL: f64 = 1e-12;

impl MaterialModel {
    /// Vacuum everywhere (empty support).
    pub fn vacuum(grid: VolumeGrid) -> Self {
        MaterialModel {
            grid,
            support: Vec::new(),
            eps_r: Vec::new(),
            inv_mu_r: Vec::new(),
            xi: Vec::new(),
            zeta: Vec::new(),
        }
    }

    /// Samples a piecewise-constant spec on the grid: voxels whose centers
    /// lie in the shape carry the spec tensors, everything else is vacuum.
    pub fn from_spec(grid: VolumeGrid, spec: &MaterialSpec) -> Result<Self> {
        for (name, t) in [
            ("eps_r", &spec.eps_r),
            ("inv_mu_r", &spec.inv_mu_r),
            ("xi", &spec.xi),
            ("zeta", &spec.zeta),
        ] {
            let defect = linalg::cmat3_asymmetry(t);
            if defect > SYMMETRY_TOL {
                return Err(Error::invalid(format!(
                    "{name} is not symmetric: max |a_ij - a_ji| = {defect:e}"
                )));
            }
        }
        let mut support = Vec::new();
        for idx in 0..grid.cell_count() {
            if spec.shape.contains(grid.center(idx)) {
                support.push(idx as u32);
            }
        }
        let count = support.len();
        Ok(MaterialModel {
            grid,
            support,
            eps_r: vec![spec.eps_r; count],
            inv_mu_r: vec![spec.inv_mu_r; count],
            xi: vec![spec.xi; count],
            zeta: vec![spec.zeta; count],
        })
    }

    /// Builds from per-voxel sampling functions over the support of `shape`.
    pub fn from_fn<F>(grid: VolumeGrid, shape: &Shape, mut sample: F) -> Result<Self>
    where
        F: FnMut(Vec3) -> (CMat3, CMat3, CMat3, CMat3),
    {
        let mut support = Vec::new();
        let mut eps_r = Vec::new();
        let mut inv_mu_r = Vec::new();
        let mut xi = Vec::new();
        let mut zeta = Vec::new();
        for idx in 0..grid.cell_count() {
            let x = grid.center(idx);
            if !shape.contains(x) {
                continue;
            }
            let (e, m, xv, zv) = sample(x);
            for t in [&e, &m, &xv, &zv] {
                if linalg::cmat3_asymmetry(t) > SYMMETRY_TOL {
                    return Err(Error::invalid(format!(
                        "sampled tensor at voxel {idx} is not symmetric"
                    )));
                }
            }
            support.push(idx as u32);
            eps_r.push(e);
            inv_mu_r.push(m);
            xi.push(xv);
            zeta.push(zv);
        }
        Ok(MaterialModel {
            grid,
            support,
            eps_r,
            inv_mu_r,
            xi,
            zeta,
        })
    }

    pub fn grid(&self) -> &VolumeGrid {
        &self.grid
    }

    /// Grid indices of support voxels, ascending.
    pub fn support(&self) -> &[u32] {
        &self.support
    }

    pub fn support_len(&self) -> usize {
        self.support.len()
    }

    /// Per-support-voxel tensors, indexed by support position.
    pub fn eps_r(&self, s: usize) -> &CMat3 {
        &self.eps_r[s]
    }

    pub fn inv_mu_r(&self, s: usize) -> &CMat3 {
        &self.inv_mu_r[s]
    }

    pub fn xi(&self, s: usize) -> &CMat3 {
        &self.xi[s]
    }

    pub fn zeta(&self, s: usize) -> &CMat3 {
        &self.zeta[s]
    }

    /// Permittivity contrast `P = eps_r - I` at a support voxel.
    pub fn contrast_p(&self, s: usize) -> CMat3 {
        cmat3_sub(&self.eps_r[s], &cmat3_identity())
    }

    /// Permeability contrast `Q = I - inv_mu_r` at a support voxel.
    pub fn contrast_q(&self, s: usize) -> CMat3 {
        cmat3_sub(&cmat3_identity(), &self.inv_mu_r[s])
    }

    /// True when every support tensor equals vacuum (zero contrast).
    pub fn is_vacuum(&self) -> bool {
        let id = cmat3_identity();
        (0..self.support.len()).all(|s| {
            cmat3_frobenius(&cmat3_sub(&self.eps_r[s], &id)) == 0.0
                && cmat3_frobenius(&cmat3_sub(&self.inv_mu_r[s], &id)) == 0.0
                && cmat3_frobenius(&self.xi[s]) == 0.0
                && cmat3_frobenius(&self.zeta[s]) == 0.0
        })
    }

    /// Euclidean diameter bound of the support voxel centers (diagonal of
    /// their bounding box).
    pub fn support_diameter(&self) -> f64 {
        if self.support.is_empty() {
            return 0.0;
        }
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for &idx in &self.support {
            let c = self.grid.center(idx as usize);
            for a in 0..3 {
                lo[a] = lo[a].min(c[a]);
                hi[a] = hi[a].max(c[a]);
            }
        }
        linalg::norm(linalg::sub(hi, lo))
    }
}

/// Outcome of the well-posedness audit.
#[derive(Debug, Clone)]
pub struct AssumptionReport {
    /// Ellipticity constant of `Re(inv_mu_r)`.
    pub c1: f64,
    /// Ellipticity constant of `Re(eps_r - xi inv_mu_r zeta)`.
    pub c2: f64,
    /// Absorption constant of `-Im(inv_mu_r)`.
    pub alpha: f64,
    /// Absorption constant of `Im(eps_r - xi inv_mu_r zeta)`.
    pub beta: f64,
    /// Left side of the coupling-smallness condition,
    /// `max|inv_mu_r xi|_F^2 + max|inv_mu_r zeta|_F^2`.
    pub coupling: f64,
    /// Right side `2 min(c1 c2, alpha beta)`.
    pub coupling_budget: f64,
    /// Human-readable strict violations; empty means compliant.
    pub violations: Vec<String>,
    /// Zero absorption constants: the strict inequalities degenerate to
    /// equalities (vacuum, lossless media). Allowed, but flagged.
    pub boundary: bool,
}

impl AssumptionReport {
    pub fn compliant(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Audits the ellipticity, absorption, and coupling-smallness conditions
/// voxel by voxel via Hermitian eigenvalue bounds, and returns the extracted
/// constants or the violation list.
pub fn validate_assumption_i(m: &MaterialModel) -> AssumptionReport {
    let mut c1 = f64::INFINITY;
    let mut c2 = f64::INFINITY;
    let mut alpha = f64::INFINITY;
    let mut beta = f64::INFINITY;
    let mut coupling_xi: f64 = 0.0;
    let mut coupling_zeta: f64 = 0.0;

    if m.support_len() == 0 {
        // vacuum: inv_mu_r = eps_r = I
        c1 = 1.0;
        c2 = 1.0;
        alpha = 0.0;
        beta = 0.0;
    }

    for s in 0..m.support_len() {
        let mu = m.inv_mu_r(s);
        let e = cmat3_sub(m.eps_r(s), &cmat3_mul(&cmat3_mul(m.xi(s), mu), m.zeta(s)));
        let (mu_re_min, _) = cmat3_hermitian_eigen_bounds(&cmat3_hermitian_part(mu));
        let (e_re_min, _) = cmat3_hermitian_eigen_bounds(&cmat3_hermitian_part(&e));
        let (_, mu_im_max) = cmat3_hermitian_eigen_bounds(&cmat3_skew_part(mu));
        let (e_im_min, _) = cmat3_hermitian_eigen_bounds(&cmat3_skew_part(&e));
        c1 = c1.min(mu_re_min);
        c2 = c2.min(e_re_min);
        alpha = alpha.min(-mu_im_max);
        beta = beta.min(e_im_min);
        coupling_xi = coupling_xi.max(cmat3_frobenius(&cmat3_mul(mu, m.xi(s))));
        coupling_zeta = coupling_zeta.max(cmat3_frobenius(&cmat3_mul(mu, m.zeta(s))));
    }

    let coupling = coupling_xi * coupling_xi + coupling_zeta * coupling_zeta;
    let coupling_budget = 2.0 * (c1 * c2).min(alpha * beta);

    const ZERO_TOL: f64 = 1e-14;
    let mut violations = Vec::new();
    if c1 <= ZERO_TOL {
        violations.push(format!("Re(inv_mu_r) not uniformly positive: c1 = {c1:.3e}"));
    }
    if c2 <= ZERO_TOL {
        violations.push(format!(
            "Re(eps_r - xi inv_mu_r zeta) not uniformly positive: c2 = {c2:.3e}"
        ));
    }
    if alpha < -ZERO_TOL {
        violations.push(format!("-Im(inv_mu_r) has negative part: alpha = {alpha:.3e}"));
    }
    if beta < -ZERO_TOL {
        violations.push(format!(
            "Im(eps_r - xi inv_mu_r zeta) has negative part: beta = {beta:.3e}"
        ));
    }
    // The strict smallness condition; a zero/zero boundary case (no coupling,
    // no absorption budget needed) is not a violation.
    if coupling > ZERO_TOL && coupling >= coupling_budget {
        violations.push(format!(
            "coupling too large: |mu^-1 xi|^2 + |mu^-1 zeta|^2 = {coupling:.3e} >= {coupling_budget:.3e}"
        ));
    }
    let boundary = alpha.abs() <= ZERO_TOL || beta.abs() <= ZERO_TOL;

    AssumptionReport {
        c1,
        c2,
        alpha,
        beta,
        coupling,
        coupling_budget,
        violations,
        boundary,
    }
}

/// The bianisotropic benchmark tensors used across the synthetic
/// experiments: diagonal `xi`, absorbing diagonal `eps_r` and `inv_mu_r`,
/// and `zeta = -xi`.
pub fn benchmark_bianisotropic(shape: Shape) -> MaterialSpec {
    let xi = cmat3_diag([
        C64::new(0.03, 0.0),
        C64::new(0.02, 0.0),
        C64::new(0.01, 0.0),
    ]);
    MaterialSpec {
        shape,
        eps_r: cmat3_diag([
            C64::new(0.8, 0.5),
            C64::new(0.7, 1.0),
            C64::new(0.6, 0.4),
        ]),
        inv_mu_r: cmat3_diag([
            C64::new(0.2, -0.3),
            C64::new(0.6, -0.4),
            C64::new(0.9, -0.7),
        ]),
        zeta: cmat3_scale(&xi, C64::new(-1.0, 0.0)),
        xi,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_centers_and_indexing() {
        let g = VolumeGrid::cube([0.0; 3], 2.0, 4).unwrap();
        assert_eq!(g.cell_count(), 64);
        assert!((g.spacing() - 0.5).abs() < 1e-15);
        let c0 = g.center(0);
        assert!((c0[0] + 0.75).abs() < 1e-15);
        let (ix, iy, iz) = g.unravel(1 + 4 * (2 + 4 * 3));
        assert_eq!((ix, iy, iz), (1, 2, 3));
    }

    #[test]
    fn wavelength_resolution_check() {
        let g = VolumeGrid::cube([0.0; 3], 1.5, 32).unwrap();
        assert!(g.resolves_wavelength(12.0)); // h = 0.0469 <= 0.0654
        assert!(!g.resolves_wavelength(30.0));
    }

    #[test]
    fn shapes_contain_and_measure_distance() {
        let s = Shape::Sphere {
            center: [1.0, 0.0, 0.0],
            radius: 0.5,
        };
        assert!(s.contains([1.2, 0.0, 0.0]));
        assert!(!s.contains([0.0, 0.0, 0.0]));
        assert!((s.distance([0.0, 0.0, 0.0]) - 0.5).abs() < 1e-15);

        let l = Shape::l_shape(0.5, 0.2);
        assert!(l.contains([0.3, -0.3, 0.0]));
        assert!(l.contains([-0.3, 0.3, 0.0]));
        assert!(!l.contains([0.3, 0.3, 0.0]));
        assert!((l.distance([0.3, 0.3, 0.0]) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn from_spec_marks_support_and_vacuum_outside() {
        let g = VolumeGrid::cube([0.0; 3], 1.5, 16).unwrap();
        let spec = MaterialSpec::dielectric(
            Shape::Sphere {
                center: [0.0; 3],
                radius: 0.5,
            },
            C64::new(1.01, 0.0),
        );
        let m = MaterialModel::from_spec(g, &spec).unwrap();
        assert!(m.support_len() > 0);
        // voxel count approximates the ball volume
        let vol = m.support_len() as f64 * m.grid().cell_volume();
        let truth = 4.0 * std::f64::consts::PI / 3.0 * 0.125;
        assert!((vol - truth).abs() / truth < 0.05, "vol {vol} vs {truth}");
        assert!(!m.is_vacuum());
    }

    #[test]
    fn asymmetric_tensor_rejected() {
        let g = VolumeGrid::cube([0.0; 3], 1.0, 4).unwrap();
        let mut spec = MaterialSpec::dielectric(
            Shape::Sphere {
                center: [0.0; 3],
                radius: 0.4,
            },
            C64::new(2.0, 0.1),
        );
        spec.eps_r[0][1] = C64::new(0.3, 0.0); // break symmetry
        assert!(MaterialModel::from_spec(g, &spec).is_err());
    }

    #[test]
    fn vacuum_report_is_boundary_compliant() {
        let g = VolumeGrid::cube([0.0; 3], 1.0, 4).unwrap();
        let m = MaterialModel::vacuum(g);
        let r = validate_assumption_i(&m);
        assert!(r.compliant());
        assert!(r.boundary);
        assert!((r.c1 - 1.0).abs() < 1e-15);
        assert!((r.c2 - 1.0).abs() < 1e-15);
        assert_eq!(r.alpha, 0.0);
        assert_eq!(r.beta, 0.0);
    }

    #[test]
    fn benchmark_material_is_compliant() {
        let g = VolumeGrid::cube([0.0; 3], 1.5, 12).unwrap();
        let spec = benchmark_bianisotropic(Shape::l_shape(0.5, 0.2));
        let m = MaterialModel::from_spec(g, &spec).unwrap();
        let r = validate_assumption_i(&m);
        assert!(r.compliant(), "violations: {:?}", r.violations);
        assert!(!r.boundary);
        // the diagonal tensors make the constants readable by hand
        assert!((r.c1 - 0.2).abs() < 1e-12);
        assert!((r.alpha - 0.3).abs() < 1e-12);
        assert!((r.c2 - 0.6).abs() < 2e-4);
        assert!((r.beta - 0.4).abs() < 2e-3);
        assert!(r.coupling < r.coupling_budget);
    }

    #[test]
    fn inflated_coupling_reported() {
        let g = VolumeGrid::cube([0.0; 3], 1.5, 8).unwrap();
        let mut spec = benchmark_bianisotropic(Shape::Sphere {
            center: [0.0; 3],
            radius: 0.5,
        });
        spec.xi = cmat3_scale(&spec.xi, C64::new(100.0, 0.0));
        spec.zeta = cmat3_scale(&spec.xi, C64::new(-1.0, 0.0));
        let m = MaterialModel::from_spec(g, &spec).unwrap();
        let r = validate_assumption_i(&m);
        assert!(!r.compliant());
        assert!(r
            .violations
            .iter()
            .any(|v| v.contains("coupling too large") || v.contains("beta")));
    }
}
