//! Ingestion of sparse limited-aperture experimental measurement tables.
//!
//! The measurement files are ASCII numeric tables, one record per line, with
//! a configurable column layout (the real database documents its own column
//! order; fixtures ship in this crate's default layout). Each record holds
//! the source direction (spherical angles), the receiver azimuth on the
//! `z = 0` ring, and the third components of the measured total and incident
//! fields at one frequency. The scattered field is the plain subtraction
//! `total - incident`; no drift correction or calibration is applied. Far
//! fields follow from the large receiver distance, and the unit map rescales
//! 40 mm (configurable) to one computational length unit.

use crate::error::Error;
use crate::farfield::{ComponentMask, FarFieldData};
use crate::linalg::C64;
use crate::sphere::{Topology, UnitDirectionSet};
use crate::Result;
use std::collections::BTreeMap;
use std::fmt::Write as _;

/// Vacuum speed of light in meters per second.
pub const SPEED_OF_LIGHT: f64 = 2.997_924_58e8;

/// Zero-based column positions of the record fields in a measurement table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ColumnMap {
    pub frequency_ghz: usize,
    pub source_theta: usize,
    pub source_phi: usize,
    pub receiver_phi: usize,
    pub total_re: usize,
    pub total_im: usize,
    pub incident_re: usize,
    pub incident_im: usize,
}

impl Default for ColumnMap {
    /// The crate's fixture layout:
    /// `freq theta phi rec_phi tot_re tot_im inc_re inc_im`.
    fn default() -> Self {
        ColumnMap {
            frequency_ghz: 0,
            source_theta: 1,
            source_phi: 2,
            receiver_phi: 3,
            total_re: 4,
            total_im: 5,
            incident_re: 6,
            incident_im: 7,
        }
    }
}

impl ColumnMap {
    fn max_index(&self) -> usize {
        [
            self.frequency_ghz,
            self.source_theta,
            self.source_phi,
            self.receiver_phi,
            self.total_re,
            self.total_im,
            self.incident_re,
            self.incident_im,
        ]
        .into_iter()
        .max()
        .unwrap()
    }
}

/// One measured (source, receiver, frequency) record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementRecord {
    pub frequency_ghz: f64,
    /// Source direction polar angle (radians).
    pub source_theta: f64,
    /// Source direction azimuth (radians).
    pub source_phi: f64,
    /// Receiver azimuth on the `z = 0` ring (radians).
    pub receiver_phi: f64,
    /// Third component of the measured total field (lab units).
    pub total: C64,
    /// Third component of the incident field (lab units).
    pub incident: C64,
}

/// Geometry and unit constants the measurement files do not carry.
#[derive(Debug, Clone, Copy)]
pub struct FresnelMeta {
    /// Distance from the target region to the receivers (meters).
    pub receiver_radius_m: f64,
    /// Meters per computational length unit.
    pub unit_scale_m: f64,
}

impl FresnelMeta {
    pub fn new(receiver_radius_m: f64, unit_scale_m: f64) -> Result<Self> {
        if !(receiver_radius_m > 0.0) {
            return Err(Error::invalid("receiver radius must be positive"));
        }
        if !(unit_scale_m > 0.0) {
            return Err(Error::invalid("unit scale must be positive"));
        }
        Ok(FresnelMeta {
            receiver_radius_m,
            unit_scale_m,
        })
    }
}

/// A parsed measurement database: records grouped by frequency over a fixed
/// source/receiver geometry.
#[derive(Debug, Clone)]
pub struct FresnelDataset {
    /// Ascending frequencies (GHz).
    frequencies: Vec<f64>,
    /// `records[f][j * n_receivers + i]`: frequency-major, source-major,
    /// receiver-inner.
    records: Vec<Vec<MeasurementRecord>>,
    /// Unique source angles, ascending by (theta, phi).
    source_angles: Vec<(f64, f64)>,
    /// Unique receiver azimuths, ascending.
    receiver_angles: Vec<f64>,
    meta: FresnelMeta,
}

fn direction_from_angles(theta: f64, phi: f64) -> [f64; 3] {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    [st * cp, st * sp, ct]
}

impl FresnelDataset {
    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn n_sources(&self) -> usize {
        self.source_angles.len()
    }

    pub fn n_receivers(&self) -> usize {
        self.receiver_angles.len()
    }

    pub fn meta(&self) -> FresnelMeta {
        self.meta
    }

    /// Whether the geometry matches the database convention of 81 sources
    /// and 36 receivers.
    pub fn matches_database_convention(&self) -> bool {
        self.n_sources() == 81 && self.n_receivers() == 36
    }

    /// Records of one frequency, source-major.
    pub fn records_at(&self, frequency_ghz: f64) -> Result<&[MeasurementRecord]> {
        let idx = self
            .frequencies
            .iter()
            .position(|&f| (f - frequency_ghz).abs() <= 1e-9 * f.max(frequency_ghz))
            .ok_or_else(|| {
                Error::invalid(format!(
                    "frequency {frequency_ghz} GHz not present (have {:?})",
                    self.frequencies
                ))
            })?;
        Ok(&self.records[idx])
    }

    /// Source directions with equal full-sphere weights.
    pub fn source_set(&self) -> UnitDirectionSet {
        let points = self
            .source_angles
            .iter()
            .map(|&(t, p)| direction_from_angles(t, p))
            .collect();
        let w = 4.0 * std::f64::consts::PI / self.source_angles.len() as f64;
        UnitDirectionSet::new(points, vec![w; self.source_angles.len()], Topology::FullSphere)
            .expect("angle-derived directions are unit vectors")
    }

    /// Receiver directions on the `z = 0` ring with arc-length weights.
    pub fn receiver_set(&self) -> UnitDirectionSet {
        let points = self
            .receiver_angles
            .iter()
            .map(|&p| [p.cos(), p.sin(), 0.0])
            .collect();
        let w = 2.0 * std::f64::consts::PI / self.receiver_angles.len() as f64;
        UnitDirectionSet::new(
            points,
            vec![w; self.receiver_angles.len()],
            Topology::GreatCircle,
        )
        .expect("ring directions are unit vectors")
    }

    /// Canonical table serialisation in the default column layout; fixtures
    /// written by this function parse back byte-identically.
    pub fn export_default_layout(&self) -> String {
        let mut out = String::new();
        for recs in &self.records {
            for r in recs {
                let _ = writeln!(
                    out,
                    "{} {} {} {} {} {} {} {}",
                    r.frequency_ghz,
                    r.source_theta,
                    r.source_phi,
                    r.receiver_phi,
                    r.total.re,
                    r.total.im,
                    r.incident.re,
                    r.incident.im
                );
            }
        }
        out
    }
}

/// Parses a measurement table. Blank lines and lines starting with `#` are
/// skipped; every other line must provide the mapped columns. The records of
/// each frequency must tile the full source x receiver product exactly once.
pub fn parse(text: &str, map: &ColumnMap, meta: FresnelMeta) -> Result<FresnelDataset> {
    let mut raw: Vec<MeasurementRecord> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let vals: Vec<f64> = trimmed
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse {
                line: line_no,
                message: e.to_string(),
            })?;
        if vals.len() <= map.max_index() {
            return Err(Error::Parse {
                line: line_no,
                message: format!(
                    "need at least {} columns, got {}",
                    map.max_index() + 1,
                    vals.len()
                ),
            });
        }
        let r = MeasurementRecord {
            frequency_ghz: vals[map.frequency_ghz],
            source_theta: vals[map.source_theta],
            source_phi: vals[map.source_phi],
            receiver_phi: vals[map.receiver_phi],
            total: C64::new(vals[map.total_re], vals[map.total_im]),
            incident: C64::new(vals[map.incident_re], vals[map.incident_im]),
        };
        if !r.frequency_ghz.is_finite()
            || !(3.0..=8.0).contains(&r.frequency_ghz)
        {
            return Err(Error::Parse {
                line: line_no,
                message: format!(
                    "frequency {} GHz outside the database band [3, 8]",
                    r.frequency_ghz
                ),
            });
        }
        if !r.source_theta.is_finite() || !r.source_phi.is_finite() || !r.receiver_phi.is_finite()
        {
            return Err(Error::Parse {
                line: line_no,
                message: "non-finite angle".into(),
            });
        }
        raw.push(r);
    }
    if raw.is_empty() {
        return Err(Error::Structural("no records in measurement table".into()));
    }

    // collect unique geometry across the whole file
    let mut src_keys: Vec<(u64, u64)> = raw
        .iter()
        .map(|r| (r.source_theta.to_bits(), r.source_phi.to_bits()))
        .collect();
    src_keys.sort_unstable();
    src_keys.dedup();
    let mut source_angles: Vec<(f64, f64)> = src_keys
        .iter()
        .map(|&(t, p)| (f64::from_bits(t), f64::from_bits(p)))
        .collect();
    source_angles.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut rec_keys: Vec<u64> = raw.iter().map(|r| r.receiver_phi.to_bits()).collect();
    rec_keys.sort_unstable();
    rec_keys.dedup();
    let mut receiver_angles: Vec<f64> = rec_keys.iter().map(|&p| f64::from_bits(p)).collect();
    receiver_angles.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let src_index: BTreeMap<(u64, u64), usize> = source_angles
        .iter()
        .enumerate()
        .map(|(i, &(t, p))| ((t.to_bits(), p.to_bits()), i))
        .collect();
    let rec_index: BTreeMap<u64, usize> = receiver_angles
        .iter()
        .enumerate()
        .map(|(i, &p)| (p.to_bits(), i))
        .collect();

    let mut freq_keys: Vec<u64> = raw.iter().map(|r| r.frequency_ghz.to_bits()).collect();
    freq_keys.sort_unstable();
    freq_keys.dedup();
    let mut frequencies: Vec<f64> = freq_keys.iter().map(|&f| f64::from_bits(f)).collect();
    frequencies.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let freq_index: BTreeMap<u64, usize> = frequencies
        .iter()
        .enumerate()
        .map(|(i, &f)| (f.to_bits(), i))
        .collect();

    let (ns, nr) = (source_angles.len(), receiver_angles.len());
    let mut records: Vec<Vec<Option<MeasurementRecord>>> =
        vec![vec![None; ns * nr]; frequencies.len()];
    for r in &raw {
        let fi = freq_index[&r.frequency_ghz.to_bits()];
        let si = src_index[&(r.source_theta.to_bits(), r.source_phi.to_bits())];
        let ri = rec_index[&r.receiver_phi.to_bits()];
        let slot = &mut records[fi][si * nr + ri];
        if slot.is_some() {
            return Err(Error::Structural(format!(
                "duplicate record: frequency {} GHz, source (theta={}, phi={}), receiver phi={}",
                r.frequency_ghz, r.source_theta, r.source_phi, r.receiver_phi
            )));
        }
        *slot = Some(*r);
    }
    let mut full: Vec<Vec<MeasurementRecord>> = Vec::with_capacity(frequencies.len());
    for (fi, per_freq) in records.into_iter().enumerate() {
        let mut out = Vec::with_capacity(ns * nr);
        for (idx, slot) in per_freq.into_iter().enumerate() {
            match slot {
                Some(r) => out.push(r),
                None => {
                    let (si, ri) = (idx / nr, idx % nr);
                    return Err(Error::Structural(format!(
                        "missing record: frequency {} GHz, source (theta={}, phi={}), receiver phi={}",
                        frequencies[fi],
                        source_angles[si].0,
                        source_angles[si].1,
                        receiver_angles[ri]
                    )));
                }
            }
        }
        full.push(out);
    }

    Ok(FresnelDataset {
        frequencies,
        records: full,
        source_angles,
        receiver_angles,
        meta,
    })
}

/// Scattered field of every record at one frequency: `total - incident`,
/// nothing else (the method consumes raw data).
pub fn scattered_field(dataset: &FresnelDataset, frequency_ghz: f64) -> Result<Vec<C64>> {
    Ok(dataset
        .records_at(frequency_ghz)?
        .iter()
        .map(|r| r.total - r.incident)
        .collect())
}

/// Near-to-far conversion: the measured field at distance `R` relates to the
/// far-field pattern by `u ~ e^{ikR}/R u_inf`, so `u_inf = R e^{-ikR} u`.
/// `radius_m` and `k_physical` share meter units.
pub fn near_to_far(u_scat: C64, radius_m: f64, k_physical: f64) -> C64 {
    u_scat * C64::new(0.0, -k_physical * radius_m).exp() * radius_m
}

/// Physical wavenumber `2 pi f / c` (1/m) at a frequency in GHz.
pub fn physical_wavenumber(frequency_ghz: f64) -> f64 {
    2.0 * std::f64::consts::PI * frequency_ghz * 1e9 / SPEED_OF_LIGHT
}

/// Computational wavenumber after rescaling `unit_scale_m` meters to one
/// length unit.
pub fn computational_wavenumber(frequency_ghz: f64, unit_scale_m: f64) -> f64 {
    physical_wavenumber(frequency_ghz) * unit_scale_m
}

/// Converts one frequency of measurements into far-field data in
/// computational units: scattered fields by subtraction, far fields by the
/// large-distance factor, the third-component mask, and
/// `k = 2 pi f / c * unit_scale`. Receivers become the observation set,
/// sources the incidence set; the lab polarization stays folded into the
/// stored response vectors.
pub fn to_computational_units(
    dataset: &FresnelDataset,
    frequency_ghz: f64,
) -> Result<FarFieldData> {
    let records = dataset.records_at(frequency_ghz)?;
    let k_phys = physical_wavenumber(frequency_ghz);
    let k_comp = computational_wavenumber(frequency_ghz, dataset.meta.unit_scale_m);
    let receivers = dataset.receiver_set();
    let sources = dataset.source_set();
    let (nr, ns) = (receivers.len(), sources.len());

    // records are source-major; far-field data is observation-major
    let mut responses = vec![
        [C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)];
        nr * ns
    ];
    for (j, chunk) in records.chunks_exact(nr).enumerate() {
        for (i, r) in chunk.iter().enumerate() {
            let u_inf = near_to_far(r.total - r.incident, dataset.meta.receiver_radius_m, k_phys);
            responses[i * ns + j][2] = u_inf;
        }
    }
    FarFieldData::new_vector(
        receivers,
        sources,
        responses,
        ComponentMask::single(3)?,
        k_comp,
    )
}
