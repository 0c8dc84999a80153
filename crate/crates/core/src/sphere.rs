//! Direction sets, quadrature, and tangential-vector bookkeeping on the unit
//! sphere.
//!
//! Incident and observation directions are represented as [`UnitDirectionSet`]
//! values: unit vectors plus quadrature weights. Quasi-uniform full-sphere
//! sets use a deterministic Fibonacci spiral with equal weights `4 pi / n`;
//! limited-aperture receiver rings are equally spaced great circles with
//! arc-length weights `2 pi / n`. Tangential vector fields on a direction set
//! (Herglotz densities, probe and test functions) are [`TangentialField`]s.

use crate::error::Error;
use crate::linalg::{self, CVec3, Vec3};
use crate::Result;
use std::fmt::Write as _;

/// How a direction set covers the sphere. Downstream quadrature conventions
/// depend on it: full-sphere sets integrate over the sphere, great circles
/// are aperture-limited sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Topology {
    FullSphere,
    GreatCircle,
    Custom,
}

impl Topology {
    pub fn as_str(&self) -> &'static str {
        match self {
            Topology::FullSphere => "full-sphere",
            Topology::GreatCircle => "great-circle",
            Topology::Custom => "custom",
        }
    }

    pub fn from_str(s: &str) -> Result<Self> {
        match s {
            "full-sphere" => Ok(Topology::FullSphere),
            "great-circle" => Ok(Topology::GreatCircle),
            "custom" => Ok(Topology::Custom),
            other => Err(Error::invalid(format!("unknown topology tag `{other}`"))),
        }
    }
}

/// A finite set of unit directions with positive quadrature weights.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitDirectionSet {
    points: Vec<Vec3>,
    weights: Vec<f64>,
    topology: Topology,
}

impl UnitDirectionSet {
    /// Builds a set from raw points and weights, validating unit norms and
    /// weight positivity. Full-sphere sets must have weights summing to
    /// `4 pi` within `1e-10`.
    pub fn new(points: Vec<Vec3>, weights: Vec<f64>, topology: Topology) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(Error::invalid("points and weights length mismatch"));
        }
        for (i, p) in points.iter().enumerate() {
            if (linalg::norm(*p) - 1.0).abs() > 1e-12 {
                return Err(Error::invalid(format!(
                    "direction {i} has norm {} (must be 1 within 1e-12)",
                    linalg::norm(*p)
                )));
            }
        }
        for (i, &w) in weights.iter().enumerate() {
            if !(w > 0.0) {
                return Err(Error::invalid(format!("weight {i} is {w}, must be > 0")));
            }
        }
        if topology == Topology::FullSphere {
            let total: f64 = weights.iter().sum();
            if (total - 4.0 * std::f64::consts::PI).abs() > 1e-10 {
                return Err(Error::invalid(format!(
                    "full-sphere weights sum to {total}, expected 4 pi"
                )));
            }
        }
        Ok(UnitDirectionSet {
            points,
            weights,
            topology,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn point(&self, i: usize) -> Vec3 {
        self.points[i]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    /// Discrete quadrature `sum_j w_j f(d_j)` of a scalar function.
    pub fn integrate<F: FnMut(Vec3) -> f64>(&self, mut f: F) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&d, &w)| w * f(d))
            .sum()
    }

    /// Serialises to the documented ASCII table: one `x y z w` line per
    /// point, headed by a `directions <topology> <count>` line. Numbers are
    /// written in shortest round-trippable form, so parsing recovers the set
    /// bit for bit.
    pub fn to_ascii(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "directions {} {}",
            self.topology.as_str(),
            self.points.len()
        );
        for (p, w) in self.points.iter().zip(&self.weights) {
            let _ = writeln!(out, "{} {} {} {}", p[0], p[1], p[2], w);
        }
        out
    }

    /// Parses the table written by [`Self::to_ascii`]. `line_offset` is added
    /// to reported line numbers so callers embedding the table in a larger
    /// file can report absolute positions.
    pub fn from_ascii_lines<'a, I>(lines: &mut I, line_offset: &mut usize) -> Result<Self>
    where
        I: Iterator<Item = &'a str>,
    {
        let header = lines.next().ok_or(Error::Parse {
            line: *line_offset + 1,
            message: "expected `directions <topology> <count>` header".into(),
        })?;
        *line_offset += 1;
        let mut it = header.split_whitespace();
        let (tag, topo, count) = (it.next(), it.next(), it.next());
        if tag != Some("directions") {
            return Err(Error::Parse {
                line: *line_offset,
                message: format!("expected `directions` header, got `{header}`"),
            });
        }
        let topology = Topology::from_str(topo.unwrap_or("")).map_err(|e| Error::Parse {
            line: *line_offset,
            message: e.to_string(),
        })?;
        let count: usize = count
            .and_then(|c| c.parse().ok())
            .ok_or(Error::Parse {
                line: *line_offset,
                message: "bad direction count".into(),
            })?;
        let mut points = Vec::with_capacity(count);
        let mut weights = Vec::with_capacity(count);
        for _ in 0..count {
            let line = lines.next().ok_or(Error::Parse {
                line: *line_offset + 1,
                message: "unexpected end of direction table".into(),
            })?;
            *line_offset += 1;
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse {
                    line: *line_offset,
                    message: e.to_string(),
                })?;
            if vals.len() != 4 {
                return Err(Error::Parse {
                    line: *line_offset,
                    message: format!("expected 4 numbers, got {}", vals.len()),
                });
            }
            points.push([vals[0], vals[1], vals[2]]);
            weights.push(vals[3]);
        }
        UnitDirectionSet::new(points, weights, topology).map_err(|e| Error::Parse {
            line: *line_offset,
            message: e.to_string(),
        })
    }
}

/// Quasi-uniform full-sphere direction set from a deterministic Fibonacci
/// spiral.
///
/// Point `i` sits at height `z_i = 1 - (2i+1)/n` (midpoint offsets, so the
/// poles are never hit exactly) and azimuth `i` times the golden angle
/// `pi (3 - sqrt 5)`. All weights equal `4 pi / n`. Identical `n` yields a
/// bitwise identical set.
pub fn make_quasi_uniform_sphere(n: usize) -> Result<UnitDirectionSet> {
    if n < 4 {
        return Err(Error::invalid(format!(
            "quasi-uniform sphere needs n >= 4, got {n}"
        )));
    }
    let golden_angle = std::f64::consts::PI * (3.0 - 5.0_f64.sqrt());
    let mut points = Vec::with_capacity(n);
    for i in 0..n {
        let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
        let r = (1.0 - z * z).max(0.0).sqrt();
        let theta = golden_angle * i as f64;
        points.push([r * theta.cos(), r * theta.sin(), z]);
    }
    let w = 4.0 * std::f64::consts::PI / n as f64;
    UnitDirectionSet::new(points, vec![w; n], Topology::FullSphere)
}

/// `n` equally spaced unit vectors on the great circle orthogonal to `axis`,
/// with arc-length weights `2 pi / n`.
///
/// The circle is traced in the plane spanned by [`tangential_basis`]`(axis)`,
/// starting at the first basis vector.
pub fn make_great_circle(n: usize, axis: Vec3) -> Result<UnitDirectionSet> {
    if n < 3 {
        return Err(Error::invalid(format!("great circle needs n >= 3, got {n}")));
    }
    if (linalg::norm(axis) - 1.0).abs() > 1e-12 {
        return Err(Error::invalid("great-circle axis must be a unit vector"));
    }
    let (e1, e2) = tangential_basis(axis);
    let mut points = Vec::with_capacity(n);
    for i in 0..n {
        let t = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
        let (s, c) = t.sin_cos();
        points.push(linalg::add(linalg::scale(e1, c), linalg::scale(e2, s)));
    }
    let w = 2.0 * std::f64::consts::PI / n as f64;
    UnitDirectionSet::new(points, vec![w; n], Topology::GreatCircle)
}

/// Right-handed orthonormal tangent pair `(e1, e2)` with `e1 x e2 = d`.
///
/// Deterministic smallest-axis rule: take the coordinate axis `a` on which
/// `d` has the smallest magnitude component (lowest index wins ties), set
/// `e1 = normalize(a x d)` and `e2 = d x e1`.
pub fn tangential_basis(d: Vec3) -> (Vec3, Vec3) {
    debug_assert!((linalg::norm(d) - 1.0).abs() < 1e-10);
    let abs = [d[0].abs(), d[1].abs(), d[2].abs()];
    let mut axis = 0;
    if abs[1] < abs[axis] {
        axis = 1;
    }
    if abs[2] < abs[axis] {
        axis = 2;
    }
    let mut a = [0.0; 3];
    a[axis] = 1.0;
    let e1 = linalg::normalize(linalg::cross(a, d));
    let e2 = linalg::cross(d, e1);
    (e1, e2)
}

/// Tangential projection `v - (d . v) d`.
pub fn tangential_project(d: Vec3, v: CVec3) -> CVec3 {
    let dv = linalg::cdot_rc(d, v);
    [v[0] - dv * d[0], v[1] - dv * d[1], v[2] - dv * d[2]]
}

/// A complex 3-vector field on a direction set whose value at each point is
/// tangential to that direction.
#[derive(Debug, Clone)]
pub struct TangentialField {
    base: UnitDirectionSet,
    values: Vec<CVec3>,
}

impl TangentialField {
    /// Validating constructor: at every point `|d . v| <= 1e-10 |v|`.
    pub fn new(base: UnitDirectionSet, values: Vec<CVec3>) -> Result<Self> {
        if base.len() != values.len() {
            return Err(Error::invalid("field length does not match direction set"));
        }
        for (i, (&d, &v)) in base.points().iter().zip(&values).enumerate() {
            let radial = linalg::cdot_rc(d, v).norm();
            if radial > 1e-10 * linalg::cnorm(v) {
                return Err(Error::invalid(format!(
                    "value {i} is not tangential: |d.v| = {radial:e}"
                )));
            }
        }
        Ok(TangentialField { base, values })
    }

    /// Builds the field by tangentially projecting arbitrary values.
    pub fn project(base: UnitDirectionSet, values: Vec<CVec3>) -> Self {
        let projected = base
            .points()
            .iter()
            .zip(values)
            .map(|(&d, v)| tangential_project(d, v))
            .collect();
        TangentialField {
            base,
            values: projected,
        }
    }

    pub fn base(&self) -> &UnitDirectionSet {
        &self.base
    }

    pub fn values(&self) -> &[CVec3] {
        &self.values
    }

    /// Quadrature norm squared `sum_j w_j |v_j|^2`.
    pub fn norm_sq(&self) -> f64 {
        self.values
            .iter()
            .zip(self.base.weights())
            .map(|(v, &w)| w * linalg::cnorm_sq(*v))
            .sum()
    }
}
