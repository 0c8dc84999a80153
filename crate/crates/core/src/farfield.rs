//! Far-field data container and its ASCII file format.
//!
//! A [`FarFieldData`] holds one complex 3x3 matrix per (observation,
//! incidence) direction pair. For synthetic full-aperture data the matrix is
//! the polarization-to-far-field map `q -> u_inf(xh, d) q`. For measured
//! limited-aperture data the incident polarization is folded into the
//! measurement; the response vector is stored in the first matrix column,
//! unmeasured components are zero, and the component mask says which vector
//! components carry information. The `storage` header line distinguishes the
//! two conventions.
//!
//! File layout (ASCII, one item per line, `#`-free, space separated):
//!
//! ```text
//! k <value>
//! nobs <n>
//! ninc <m>
//! mask <digits>            e.g. 123 (all components) or 3
//! storage <matrix|vector>
//! directions <topology> <n>    observation set, then n lines `x y z w`
//! directions <topology> <m>    incidence set, then m lines `x y z w`
//! entries
//! <m n lines of 18 reals>   incidence-major: source j outer, receiver i inner;
//!                           3x3 complex matrix, row major, re/im interleaved
//! ```
//!
//! Numbers are printed in Rust's shortest round-trip form, so
//! write-then-parse reproduces the data bit for bit.

use crate::error::Error;
use crate::linalg::{self, C64, CMat3, CVec3};
use crate::sphere::UnitDirectionSet;
use crate::Result;
use std::fmt::Write as _;

/// Which far-field vector components carry information (1-based components
/// x, y, z).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ComponentMask([bool; 3]);

impl ComponentMask {
    pub const FULL: ComponentMask = ComponentMask([true, true, true]);

    pub fn single(component: usize) -> Result<Self> {
        if !(1..=3).contains(&component) {
            return Err(Error::invalid("mask component must be 1, 2, or 3"));
        }
        let mut m = [false; 3];
        m[component - 1] = true;
        Ok(ComponentMask(m))
    }

    pub fn is_full(&self) -> bool {
        self.0 == [true, true, true]
    }

    pub fn keeps(&self, axis: usize) -> bool {
        self.0[axis]
    }

    /// Zeroes masked-out components.
    pub fn apply(&self, v: CVec3) -> CVec3 {
        let z = C64::new(0.0, 0.0);
        [
            if self.0[0] { v[0] } else { z },
            if self.0[1] { v[1] } else { z },
            if self.0[2] { v[2] } else { z },
        ]
    }

    pub fn to_digits(&self) -> String {
        let mut s = String::new();
        for (i, &on) in self.0.iter().enumerate() {
            if on {
                s.push(char::from_digit(i as u32 + 1, 10).unwrap());
            }
        }
        s
    }

    pub fn from_digits(s: &str) -> Result<Self> {
        let mut m = [false; 3];
        for c in s.chars() {
            match c {
                '1' => m[0] = true,
                '2' => m[1] = true,
                '3' => m[2] = true,
                other => {
                    return Err(Error::invalid(format!("bad mask digit `{other}`")));
                }
            }
        }
        if m == [false; 3] {
            return Err(Error::invalid("mask must keep at least one component"));
        }
        Ok(ComponentMask(m))
    }
}

/// Whether entries are polarization-to-field matrices (synthetic data) or
/// measured response vectors with the incident polarization folded in
/// (limited-aperture lab data).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Storage {
    Matrix,
    Vector,
}

impl Storage {
    fn as_str(&self) -> &'static str {
        match self {
            Storage::Matrix => "matrix",
            Storage::Vector => "vector",
        }
    }
}

/// Multi-static far-field data at one wavenumber.
#[derive(Debug, Clone, PartialEq)]
pub struct FarFieldData {
    observation: UnitDirectionSet,
    incidence: UnitDirectionSet,
    /// Row-major over (observation, incidence): index `i * ninc + j`.
    entries: Vec<CMat3>,
    mask: ComponentMask,
    storage: Storage,
    k: f64,
}

impl FarFieldData {
    /// Synthetic full-matrix data.
    pub fn new_matrix(
        observation: UnitDirectionSet,
        incidence: UnitDirectionSet,
        entries: Vec<CMat3>,
        k: f64,
    ) -> Result<Self> {
        Self::new(
            observation,
            incidence,
            entries,
            ComponentMask::FULL,
            Storage::Matrix,
            k,
        )
    }

    /// Measured response vectors (stored in the first matrix column).
    pub fn new_vector(
        observation: UnitDirectionSet,
        incidence: UnitDirectionSet,
        responses: Vec<CVec3>,
        mask: ComponentMask,
        k: f64,
    ) -> Result<Self> {
        let entries = responses
            .into_iter()
            .map(|v| {
                let mut m = linalg::CMAT3_ZERO;
                for i in 0..3 {
                    m[i][0] = v[i];
                }
                m
            })
            .collect();
        Self::new(
            observation,
            incidence,
            entries,
            mask,
            Storage::Vector,
            k,
        )
    }

    pub fn new(
        observation: UnitDirectionSet,
        incidence: UnitDirectionSet,
        entries: Vec<CMat3>,
        mask: ComponentMask,
        storage: Storage,
        k: f64,
    ) -> Result<Self> {
        if entries.len() != observation.len() * incidence.len() {
            return Err(Error::invalid(format!(
                "expected {} entries, got {}",
                observation.len() * incidence.len(),
                entries.len()
            )));
        }
        if !(k > 0.0) {
            return Err(Error::invalid("wavenumber must be positive"));
        }
        Ok(FarFieldData {
            observation,
            incidence,
            entries,
            mask,
            storage,
            k,
        })
    }

    pub fn observation(&self) -> &UnitDirectionSet {
        &self.observation
    }

    pub fn incidence(&self) -> &UnitDirectionSet {
        &self.incidence
    }

    pub fn wavenumber(&self) -> f64 {
        self.k
    }

    pub fn mask(&self) -> ComponentMask {
        self.mask
    }

    pub fn storage(&self) -> Storage {
        self.storage
    }

    pub fn n_obs(&self) -> usize {
        self.observation.len()
    }

    pub fn n_inc(&self) -> usize {
        self.incidence.len()
    }

    pub fn entry(&self, i_obs: usize, j_inc: usize) -> &CMat3 {
        &self.entries[i_obs * self.incidence.len() + j_inc]
    }

    pub fn entries(&self) -> &[CMat3] {
        &self.entries
    }

    pub fn entries_mut(&mut self) -> &mut [CMat3] {
        &mut self.entries
    }

    /// Far-field response of pair `(i, j)` to an incident polarization.
    ///
    /// Matrix data applies the stored matrix to `h`; measured vector data
    /// returns the stored response (its polarization is already folded in).
    pub fn response(&self, i_obs: usize, j_inc: usize, h: CVec3) -> CVec3 {
        let e = self.entry(i_obs, j_inc);
        match self.storage {
            Storage::Matrix => linalg::cmat3_matvec(e, h),
            Storage::Vector => [e[0][0], e[1][0], e[2][0]],
        }
    }

    /// Flat l2 norm over the stored complex entries (all nine matrix entries
    /// for matrix data, the response column for vector data). This is the
    /// norm the noise model is calibrated against.
    pub fn flat_norm(&self) -> f64 {
        let sq: f64 = match self.storage {
            Storage::Matrix => self
                .entries
                .iter()
                .flat_map(|m| m.iter().flatten())
                .map(|e| e.norm_sqr())
                .sum(),
            Storage::Vector => self
                .entries
                .iter()
                .map(|m| {
                    m.iter()
                        .enumerate()
                        .map(|(r, row)| {
                            if self.mask.keeps(r) {
                                row[0].norm_sqr()
                            } else {
                                0.0
                            }
                        })
                        .sum::<f64>()
                })
                .sum(),
        };
        sq.sqrt()
    }

    /// Flat l2 distance to another dataset of identical shape.
    pub fn flat_distance(&self, other: &FarFieldData) -> f64 {
        assert_eq!(self.entries.len(), other.entries.len());
        let sq: f64 = self
            .entries
            .iter()
            .zip(&other.entries)
            .flat_map(|(a, b)| {
                a.iter()
                    .flatten()
                    .zip(b.iter().flatten())
                    .map(|(x, y)| (x - y).norm_sqr())
            })
            .sum();
        sq.sqrt()
    }

    /// Worst relative radial leakage `|xh . (U q)| / |U q|` over all entries
    /// and the two tangential basis polarizations. Synthetic far fields are
    /// tangential by construction, so this sits at roundoff level; noisy or
    /// measured data has no reason to satisfy it.
    pub fn tangentiality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, &xh) in self.observation.points().iter().enumerate() {
            for (j, &d) in self.incidence.points().iter().enumerate() {
                let (e1, e2) = crate::sphere::tangential_basis(d);
                for q in [e1, e2] {
                    let u = self.response(i, j, linalg::to_complex(q));
                    let n = linalg::cnorm(u);
                    if n > 0.0 {
                        worst = worst.max(linalg::cdot_rc(xh, u).norm() / n);
                    }
                }
            }
        }
        worst
    }

    /// Serialises to the documented ASCII format.
    pub fn to_ascii(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "k {}", self.k);
        let _ = writeln!(out, "nobs {}", self.observation.len());
        let _ = writeln!(out, "ninc {}", self.incidence.len());
        let _ = writeln!(out, "mask {}", self.mask.to_digits());
        let _ = writeln!(out, "storage {}", self.storage.as_str());
        out.push_str(&self.observation.to_ascii());
        out.push_str(&self.incidence.to_ascii());
        let _ = writeln!(out, "entries");
        for j in 0..self.incidence.len() {
            for i in 0..self.observation.len() {
                let m = self.entry(i, j);
                let mut first = true;
                for row in m {
                    for e in row {
                        if !first {
                            out.push(' ');
                        }
                        let _ = write!(out, "{} {}", e.re, e.im);
                        first = false;
                    }
                }
                out.push('\n');
            }
        }
        out
    }

    /// Parses the format written by [`Self::to_ascii`].
    pub fn from_ascii(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let mut line_no = 0usize;
        let mut header = |name: &str| -> Result<String> {
            let line = lines.next().ok_or(Error::Parse {
                line: line_no + 1,
                message: format!("missing `{name}` header"),
            })?;
            line_no += 1;
            let mut it = line.split_whitespace();
            match (it.next(), it.next()) {
                (Some(tag), Some(val)) if tag == name => Ok(val.to_string()),
                _ => Err(Error::Parse {
                    line: line_no,
                    message: format!("expected `{name} <value>`, got `{line}`"),
                }),
            }
        };
        let k: f64 = header("k")?.parse().map_err(|e| Error::Parse {
            line: 1,
            message: format!("bad wavenumber: {e}"),
        })?;
        let nobs: usize = header("nobs")?.parse().map_err(|e| Error::Parse {
            line: 2,
            message: format!("bad nobs: {e}"),
        })?;
        let ninc: usize = header("ninc")?.parse().map_err(|e| Error::Parse {
            line: 3,
            message: format!("bad ninc: {e}"),
        })?;
        let mask = ComponentMask::from_digits(&header("mask")?)?;
        let storage = match header("storage")?.as_str() {
            "matrix" => Storage::Matrix,
            "vector" => Storage::Vector,
            other => {
                return Err(Error::Parse {
                    line: 5,
                    message: format!("bad storage kind `{other}`"),
                })
            }
        };
        let observation = UnitDirectionSet::from_ascii_lines(&mut lines, &mut line_no)?;
        let incidence = UnitDirectionSet::from_ascii_lines(&mut lines, &mut line_no)?;
        if observation.len() != nobs || incidence.len() != ninc {
            return Err(Error::Structural(format!(
                "direction table sizes ({}, {}) disagree with headers ({nobs}, {ninc})",
                observation.len(),
                incidence.len()
            )));
        }
        let marker = lines.next().ok_or(Error::Parse {
            line: line_no + 1,
            message: "missing `entries` marker".into(),
        })?;
        line_no += 1;
        if marker.trim() != "entries" {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected `entries`, got `{marker}`"),
            });
        }
        let mut entries = vec![linalg::CMAT3_ZERO; nobs * ninc];
        for j in 0..ninc {
            for i in 0..nobs {
                let line = lines.next().ok_or(Error::Parse {
                    line: line_no + 1,
                    message: "unexpected end of entry table".into(),
                })?;
                line_no += 1;
                let vals: Vec<f64> = line
                    .split_whitespace()
                    .map(|t| t.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| Error::Parse {
                        line: line_no,
                        message: e.to_string(),
                    })?;
                if vals.len() != 18 {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("expected 18 reals, got {}", vals.len()),
                    });
                }
                let mut m = linalg::CMAT3_ZERO;
                for r in 0..3 {
                    for c in 0..3 {
                        let base = 2 * (r * 3 + c);
                        m[r][c] = C64::new(vals[base], vals[base + 1]);
                    }
                }
                entries[i * ninc + j] = m;
            }
        }
        if lines.next().is_some() {
            return Err(Error::Structural("trailing content after entry table".into()));
        }
        FarFieldData::new(observation, incidence, entries, mask, storage, k)
    }
}
