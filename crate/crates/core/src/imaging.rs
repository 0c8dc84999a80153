//! The modified orthogonality sampling imaging function, grid scanning,
//! post-processing, exports, and the stability and decay diagnostics.
//!
//! The imaging value at a sampling point `y` is the double quadrature
//!
//! ```text
//! I(y) = outer_i | sum_j w_j u_inf(xh_i, d_j, h(d_j)) e^{-ik d_j . y} |^2
//! ```
//!
//! where the component mask is applied to the inner vector before the
//! modulus. For full-sphere unmasked observation sets the outer reduction is
//! the weighted quadrature `sum_i w_i (.)`; for limited-aperture or masked
//! data it is the unweighted mean over receivers, which keeps magnitudes
//! comparable across apertures. Fields are normalized to maximum one at the
//! end of a scan; the pre-normalization maximum is kept because the
//! stability bound concerns raw values.

use crate::em::{self, WaveContext};
use crate::error::Error;
use crate::farfield::{FarFieldData, Storage};
use crate::forward::add_noise;
use crate::linalg::{self, CMatrix, CVec3, Vec3, C64};
use crate::sphere::Topology;
use crate::Result;
use std::fmt::Write as _;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

// ---------------------------------------------------------------------------
// Sampling grids and indicator fields
// ---------------------------------------------------------------------------

/// Rectangular sampling lattice: `n[a]` points per axis placed inclusively
/// from `lower` to `upper` (spacing `(upper - lower)/(n - 1)`), `x` fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingGrid {
    lower: Vec3,
    upper: Vec3,
    n: [usize; 3],
}

impl SamplingGrid {
    pub fn new(lower: Vec3, upper: Vec3, n: [usize; 3]) -> Result<Self> {
        if n.iter().any(|&c| c < 2) {
            return Err(Error::invalid("sampling grid needs at least 2 points per axis"));
        }
        if (0..3).any(|a| !(upper[a] > lower[a])) {
            return Err(Error::invalid("sampling box must be non-degenerate"));
        }
        Ok(SamplingGrid { lower, upper, n })
    }

    /// Cube `[-half, half]^3` with `n` points per axis.
    pub fn centered_cube(half: f64, n: usize) -> Result<Self> {
        SamplingGrid::new([-half; 3], [half; 3], [n, n, n])
    }

    pub fn lower(&self) -> Vec3 {
        self.lower
    }

    pub fn upper(&self) -> Vec3 {
        self.upper
    }

    pub fn n(&self) -> [usize; 3] {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n[0] * self.n[1] * self.n[2]
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> Vec3 {
        [
            (self.upper[0] - self.lower[0]) / (self.n[0] - 1) as f64,
            (self.upper[1] - self.lower[1]) / (self.n[1] - 1) as f64,
            (self.upper[2] - self.lower[2]) / (self.n[2] - 1) as f64,
        ]
    }

    pub fn unravel(&self, idx: usize) -> [usize; 3] {
        [
            idx % self.n[0],
            (idx / self.n[0]) % self.n[1],
            idx / (self.n[0] * self.n[1]),
        ]
    }

    pub fn point(&self, idx: usize) -> Vec3 {
        let iv = self.unravel(idx);
        let s = self.spacing();
        [
            self.lower[0] + s[0] * iv[0] as f64,
            self.lower[1] + s[1] * iv[1] as f64,
            self.lower[2] + s[2] * iv[2] as f64,
        ]
    }
}

/// Nonnegative scalar field over a sampling grid, normalized so the maximum
/// value is exactly one. The pre-normalization maximum is retained; an
/// all-zero field skips normalization and is flagged degenerate.
#[derive(Debug, Clone)]
pub struct IndicatorField {
    grid: SamplingGrid,
    values: Vec<f64>,
    raw_max: Option<f64>,
}

impl IndicatorField {
    /// Normalizes raw nonnegative values to maximum one.
    pub fn from_raw(grid: SamplingGrid, mut values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.len());
        let max = values.iter().copied().fold(0.0f64, f64::max);
        if max > 0.0 {
            for v in values.iter_mut() {
                *v /= max;
            }
            IndicatorField {
                grid,
                values,
                raw_max: Some(max),
            }
        } else {
            IndicatorField {
                grid,
                values,
                raw_max: None,
            }
        }
    }

    pub fn grid(&self) -> &SamplingGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Pre-normalization maximum; `None` for an all-zero (degenerate) field.
    pub fn raw_max(&self) -> Option<f64> {
        self.raw_max
    }

    pub fn is_degenerate(&self) -> bool {
        self.raw_max.is_none()
    }

    /// Index and location of the maximum; ties break to the lowest index.
    pub fn argmax(&self) -> (usize, Vec3) {
        let mut best = 0usize;
        let mut bv = f64::NEG_INFINITY;
        for (i, &v) in self.values.iter().enumerate() {
            if v > bv {
                bv = v;
                best = i;
            }
        }
        (best, self.grid.point(best))
    }

    /// Grid indices with value at or above the isovalue. An empty result is
    /// legitimate (callers may warn).
    pub fn threshold_isosurface(&self, isovalue: f64) -> Vec<usize> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v >= isovalue)
            .map(|(i, _)| i)
            .collect()
    }

    /// Nearest-plane 2D slice. `axis` is 0, 1, or 2; `offset` must lie
    /// inside the box.
    pub fn slice(&self, axis: usize, offset: f64) -> Result<Slice2D> {
        if axis > 2 {
            return Err(Error::invalid("slice axis must be 0, 1, or 2"));
        }
        if offset < self.grid.lower[axis] || offset > self.grid.upper[axis] {
            return Err(Error::invalid(format!(
                "slice offset {offset} outside [{}, {}]",
                self.grid.lower[axis], self.grid.upper[axis]
            )));
        }
        let s = self.grid.spacing();
        let plane = ((offset - self.grid.lower[axis]) / s[axis]).round() as usize;
        let plane = plane.min(self.grid.n[axis] - 1);
        let (a1, a2) = match axis {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        let mut values = vec![0.0; self.grid.n[a1] * self.grid.n[a2]];
        for i2 in 0..self.grid.n[a2] {
            for i1 in 0..self.grid.n[a1] {
                let mut iv = [0usize; 3];
                iv[axis] = plane;
                iv[a1] = i1;
                iv[a2] = i2;
                let idx = iv[0] + self.grid.n[0] * (iv[1] + self.grid.n[1] * iv[2]);
                values[i2 * self.grid.n[a1] + i1] = self.values[idx];
            }
        }
        let coord = |a: usize, i: usize| self.grid.lower[a] + self.grid.spacing()[a] * i as f64;
        Ok(Slice2D {
            axis,
            offset: coord(axis, plane),
            col_coords: (0..self.grid.n[a1]).map(|i| coord(a1, i)).collect(),
            row_coords: (0..self.grid.n[a2]).map(|i| coord(a2, i)).collect(),
            values,
        })
    }

    /// Legacy VTK structured-points volume (ASCII), `x` fastest, one value
    /// per line.
    pub fn to_vtk_ascii(&self, name: &str) -> String {
        let s = self.grid.spacing();
        let mut out = String::new();
        out.push_str("# vtk DataFile Version 3.0\n");
        let _ = writeln!(out, "{name}");
        out.push_str("ASCII\nDATASET STRUCTURED_POINTS\n");
        let _ = writeln!(
            out,
            "DIMENSIONS {} {} {}",
            self.grid.n[0], self.grid.n[1], self.grid.n[2]
        );
        let _ = writeln!(
            out,
            "ORIGIN {} {} {}",
            self.grid.lower[0], self.grid.lower[1], self.grid.lower[2]
        );
        let _ = writeln!(out, "SPACING {} {} {}", s[0], s[1], s[2]);
        let _ = writeln!(out, "POINT_DATA {}", self.values.len());
        let _ = writeln!(out, "SCALARS {name} double 1");
        out.push_str("LOOKUP_TABLE default\n");
        for v in &self.values {
            let _ = writeln!(out, "{v}");
        }
        out
    }

    /// Flat CSV `x,y,z,value`, rows in grid index order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,z,value\n");
        for (i, v) in self.values.iter().enumerate() {
            let p = self.grid.point(i);
            let _ = writeln!(out, "{},{},{},{}", p[0], p[1], p[2], v);
        }
        out
    }
}

/// A 2D cross-section with its plane coordinates.
#[derive(Debug, Clone)]
pub struct Slice2D {
    pub axis: usize,
    pub offset: f64,
    pub col_coords: Vec<f64>,
    pub row_coords: Vec<f64>,
    /// Row-major `values[row * ncols + col]`.
    pub values: Vec<f64>,
}

impl Slice2D {
    /// Row-major CSV with a coordinates header: the first row lists column
    /// coordinates, each following row starts with its row coordinate.
    pub fn to_csv(&self) -> String {
        let axis_name = ["x", "y", "z"][self.axis];
        let mut out = String::new();
        let _ = writeln!(out, "# slice {axis_name} = {}", self.offset);
        out.push_str("coord");
        for c in &self.col_coords {
            let _ = write!(out, ",{c}");
        }
        out.push('\n');
        for (r, rc) in self.row_coords.iter().enumerate() {
            let _ = write!(out, "{rc}");
            for c in 0..self.col_coords.len() {
                let _ = write!(out, ",{}", self.values[r * self.col_coords.len() + c]);
            }
            out.push('\n');
        }
        out
    }
}

/// Jaccard overlap `|A intersect B| / |A union B|` of two index sets
/// (sorted or not). Empty-union pairs count as overlap one.
pub fn jaccard(a: &[usize], b: &[usize]) -> f64 {
    let sa: std::collections::BTreeSet<usize> = a.iter().copied().collect();
    let sb: std::collections::BTreeSet<usize> = b.iter().copied().collect();
    let inter = sa.intersection(&sb).count();
    let union = sa.union(&sb).count();
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

/// Number of 6-connected components of an index set on a sampling grid.
pub fn connected_components(grid: &SamplingGrid, indices: &[usize]) -> usize {
    let set: std::collections::BTreeSet<usize> = indices.iter().copied().collect();
    let mut seen = std::collections::BTreeSet::new();
    let n = grid.n();
    let mut components = 0;
    for &start in &set {
        if seen.contains(&start) {
            continue;
        }
        components += 1;
        let mut stack = vec![start];
        seen.insert(start);
        while let Some(idx) = stack.pop() {
            let [ix, iy, iz] = grid.unravel(idx);
            let mut push = |jx: isize, jy: isize, jz: isize| {
                if jx < 0 || jy < 0 || jz < 0 {
                    return;
                }
                let (jx, jy, jz) = (jx as usize, jy as usize, jz as usize);
                if jx >= n[0] || jy >= n[1] || jz >= n[2] {
                    return;
                }
                let j = jx + n[0] * (jy + n[1] * jz);
                if set.contains(&j) && seen.insert(j) {
                    stack.push(j);
                }
            };
            let (x, y, z) = (ix as isize, iy as isize, iz as isize);
            push(x - 1, y, z);
            push(x + 1, y, z);
            push(x, y - 1, z);
            push(x, y + 1, z);
            push(x, y, z - 1);
            push(x, y, z + 1);
        }
    }
    components
}

// ---------------------------------------------------------------------------
// The imaging function
// ---------------------------------------------------------------------------

/// Probe responses `B_ij = w_j u_inf(xh_i, d_j, h(d_j))`, precomputed once
/// per scan; only the sampling-point phase varies over the grid.
struct ProbeTable {
    n_obs: usize,
    n_inc: usize,
    b: Vec<CVec3>,
}

impl ProbeTable {
    fn build(data: &FarFieldData, ctx: &WaveContext) -> Self {
        let inc = data.incidence();
        let n_obs = data.n_obs();
        let n_inc = data.n_inc();
        let mut b = vec![linalg::ZERO_CVEC3; n_obs * n_inc];
        for (j, &d) in inc.points().iter().enumerate() {
            let h = em::probe_polarization(d, ctx);
            let w = inc.weight(j);
            for i in 0..n_obs {
                let r = data.response(i, j, h);
                b[i * n_inc + j] = linalg::cscale(r, C64::new(w, 0.0));
            }
        }
        ProbeTable { n_obs, n_inc, b }
    }
}

fn outer_is_quadrature(data: &FarFieldData) -> bool {
    data.observation().topology() == Topology::FullSphere && data.mask().is_full()
}

fn mosm_value_with(table: &ProbeTable, data: &FarFieldData, y: Vec3, k: f64) -> f64 {
    let inc = data.incidence();
    let phases: Vec<C64> = inc
        .points()
        .iter()
        .map(|&d| C64::new(0.0, -k * linalg::dot(d, y)).exp())
        .collect();
    let quadrature_outer = outer_is_quadrature(data);
    let mut total = 0.0;
    for i in 0..table.n_obs {
        let row = &table.b[i * table.n_inc..(i + 1) * table.n_inc];
        let mut inner = linalg::ZERO_CVEC3;
        for (bij, ph) in row.iter().zip(&phases) {
            inner[0] += bij[0] * ph;
            inner[1] += bij[1] * ph;
            inner[2] += bij[2] * ph;
        }
        let masked = data.mask().apply(inner);
        let mag = linalg::cnorm_sq(masked);
        total += if quadrature_outer {
            data.observation().weight(i) * mag
        } else {
            mag
        };
    }
    if quadrature_outer {
        total
    } else {
        total / table.n_obs as f64
    }
}

/// Raw (unnormalized) imaging value at one sampling point.
///
/// The wavenumbers of `data` and `ctx` must agree; [`scan`] enforces it.
pub fn mosm_value(data: &FarFieldData, y: Vec3, ctx: &WaveContext) -> f64 {
    let table = ProbeTable::build(data, ctx);
    mosm_value_with(&table, data, y, ctx.wavenumber())
}

fn scan_raw_with_mode(
    data: &FarFieldData,
    grid: &SamplingGrid,
    ctx: &WaveContext,
    parallel: bool,
) -> Result<Vec<f64>> {
    let (dk, ck) = (data.wavenumber(), ctx.wavenumber());
    if (dk - ck).abs() > 1e-12 * dk.max(ck) {
        return Err(Error::WavenumberMismatch {
            data_k: dk,
            expected_k: ck,
        });
    }
    let table = ProbeTable::build(data, ctx);
    let eval = |idx: usize| mosm_value_with(&table, data, grid.point(idx), ck);

    #[cfg(feature = "parallel")]
    if parallel {
        return Ok((0..grid.len()).into_par_iter().map(eval).collect());
    }
    let _ = parallel;
    Ok((0..grid.len()).map(eval).collect())
}

/// Evaluates the imaging function at every grid point and normalizes to
/// maximum one. With the `parallel` feature points are scanned on the rayon
/// pool; each point owns its output slot, so the result is bitwise
/// independent of the worker count. An all-zero field is returned degenerate
/// (normalization skipped).
pub fn scan(data: &FarFieldData, grid: &SamplingGrid, ctx: &WaveContext) -> Result<IndicatorField> {
    let raw = scan_raw_with_mode(data, grid, ctx, true)?;
    Ok(IndicatorField::from_raw(grid.clone(), raw))
}

/// Sequential variant of [`scan`]; the `parallel` build keeps it available
/// for benchmarking against the rayon path.
pub fn scan_sequential(
    data: &FarFieldData,
    grid: &SamplingGrid,
    ctx: &WaveContext,
) -> Result<IndicatorField> {
    let raw = scan_raw_with_mode(data, grid, ctx, false)?;
    Ok(IndicatorField::from_raw(grid.clone(), raw))
}

// ---------------------------------------------------------------------------
// Stability diagnostic
// ---------------------------------------------------------------------------

/// One noise draw of the stability audit.
#[derive(Debug, Clone)]
pub struct StabilityRow {
    pub delta: f64,
    pub seed: u64,
    /// `max_y |I(y) - I_delta(y)|` over the grid (raw values).
    pub max_gap: f64,
    /// `(delta^2 + 2 delta) |F|^2 |h|^2`.
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct StabilityReport {
    /// Spectral norm of the weighted data matrix (the discrete `|F|`).
    pub f_norm: f64,
    /// Quadrature norm squared of the probe polarization over the incidence set.
    pub h_norm_sq: f64,
    pub rows: Vec<StabilityRow>,
}

impl StabilityReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }
}

/// Weighted flat matrix `M[(3i+a),(3j+b)] = sqrt(w_i) U_ij[a][b] sqrt(w_j)`
/// whose plain spectral norm is the quadrature-space operator norm of the
/// far-field operator, and for which `I(y) = |M Psi_y|^2` exactly.
fn weighted_flat_matrix(data: &FarFieldData) -> CMatrix {
    let (no, ni) = (data.n_obs(), data.n_inc());
    let mut m = CMatrix::zeros(3 * no, 3 * ni);
    for i in 0..no {
        let wi = data.observation().weight(i).sqrt();
        for j in 0..ni {
            let wj = data.incidence().weight(j).sqrt();
            let u = data.entry(i, j);
            for a in 0..3 {
                for b in 0..3 {
                    m[(3 * i + a, 3 * j + b)] = u[a][b] * (wi * wj);
                }
            }
        }
    }
    m
}

/// Checks the noise-stability inequality
/// `max_y |I - I_delta| <= (delta^2 + 2 delta) |F|^2 |h|^2`
/// for each noise level and seed, with `|F|` the matrix operator norm of the
/// weighted data and `|h|^2` the quadrature norm of the probe polarization.
///
/// Requires full-aperture unmasked matrix data so the operator norm and the
/// imaging function use the same quadrature spaces.
pub fn stability_gap(
    data: &FarFieldData,
    deltas: &[f64],
    seeds: &[u64],
    grid: &SamplingGrid,
    ctx: &WaveContext,
) -> Result<StabilityReport> {
    if data.storage() != Storage::Matrix || !data.mask().is_full() {
        return Err(Error::invalid(
            "stability audit needs full-aperture unmasked matrix data",
        ));
    }
    let f_norm = weighted_flat_matrix(data).operator_norm();
    let h_norm_sq: f64 = data
        .incidence()
        .points()
        .iter()
        .zip(data.incidence().weights())
        .map(|(&d, &w)| w * linalg::cnorm_sq(em::probe_polarization(d, ctx)))
        .sum();

    let clean = scan_raw_with_mode(data, grid, ctx, true)?;
    let mut rows = Vec::new();
    for &delta in deltas {
        for &seed in seeds {
            let bound = (delta * delta + 2.0 * delta) * f_norm * f_norm * h_norm_sq;
            let max_gap = if delta == 0.0 {
                0.0
            } else {
                let noisy = add_noise(data, delta, seed);
                let vals = scan_raw_with_mode(&noisy, grid, ctx, true)?;
                clean
                    .iter()
                    .zip(&vals)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            };
            rows.push(StabilityRow {
                delta,
                seed,
                max_gap,
                bound,
                pass: max_gap <= bound,
            });
        }
    }
    Ok(StabilityReport {
        f_norm,
        h_norm_sq,
        rows,
    })
}

// ---------------------------------------------------------------------------
// Decay diagnostic
// ---------------------------------------------------------------------------

/// Least-squares fit of `log I` against `log dist` along an exterior ray.
#[derive(Debug, Clone)]
pub struct DecayFit {
    /// Fitted log-log slope; the far-field indicator decays like
    /// `dist^-2`, so physical data lands near -2.
    pub slope: f64,
    pub intercept: f64,
    pub n_points: usize,
    /// False when the fitted slope does not decay (slower than
    /// `dist^-0.8`), which marks non-physical data.
    pub physical: bool,
}

/// Fits the decay exponent of the imaging function at the given exterior
/// sampling points, with distances measured from `origin`. At least 8
/// points are required.
pub fn decay_profile(
    data: &FarFieldData,
    ray: &[Vec3],
    origin: Vec3,
    ctx: &WaveContext,
) -> Result<DecayFit> {
    if ray.len() < 8 {
        return Err(Error::invalid(format!(
            "decay fit needs at least 8 ray points, got {}",
            ray.len()
        )));
    }
    let table = ProbeTable::build(data, ctx);
    let mut xs = Vec::with_capacity(ray.len());
    let mut ys = Vec::with_capacity(ray.len());
    for &y in ray {
        let v = mosm_value_with(&table, data, y, ctx.wavenumber());
        if v > 0.0 {
            xs.push(linalg::norm(linalg::sub(y, origin)).ln());
            ys.push(v.ln());
        }
    }
    if xs.len() < 8 {
        return Err(Error::invalid(
            "decay fit needs at least 8 positive imaging values on the ray",
        ));
    }
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - slope * sx) / n;
    Ok(DecayFit {
        slope,
        intercept,
        n_points: xs.len(),
        physical: slope < -0.8,
    })
}
