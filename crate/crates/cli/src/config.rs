//! Experiment configuration: a documented TOML schema mapped onto the core
//! types. Every run writes its fully resolved configuration next to the
//! outputs so results are reproducible from the artifact alone.

use anyhow::{bail, Context, Result};
use invscat::em::WaveContext;
use invscat::fresnel::{ColumnMap, FresnelMeta};
use invscat::imaging::SamplingGrid;
use invscat::linalg::{cmat3_diag, cmat3_identity, CMat3, Vec3, C64};
use invscat::material::{MaterialModel, Shape, VolumeGrid};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Synthesize,
    Invert,
    Fresnel,
    Validate,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub mode: Mode,
    pub wave: WaveConfig,
    #[serde(default)]
    pub directions: DirectionsConfig,
    #[serde(default)]
    pub material: MaterialConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub sampling: SamplingConfig,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub fresnel: Option<FresnelConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveConfig {
    /// Wavenumber in computational units; exactly one of this and
    /// `frequency_ghz` must be set.
    #[serde(default)]
    pub wavenumber: Option<f64>,
    /// Lab frequency; converted with the 40 mm unit scale (or the one in
    /// `[fresnel]`).
    #[serde(default)]
    pub frequency_ghz: Option<f64>,
    /// Polarization anchor `p`.
    pub anchor: [f64; 3],
    /// Probe coefficient `alpha1` as `[re, im]`; defaults to `1/sqrt(2)`.
    #[serde(default)]
    pub alpha1: Option<[f64; 2]>,
    #[serde(default)]
    pub alpha2: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirectionsConfig {
    pub incidence: usize,
    pub observation: usize,
}

impl Default for DirectionsConfig {
    fn default() -> Self {
        DirectionsConfig {
            incidence: 30,
            observation: 30,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialConfig {
    #[serde(default)]
    pub shapes: Vec<ShapeConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapeConfig {
    pub kind: ShapeKind,
    #[serde(default)]
    pub center: Option<[f64; 3]>,
    #[serde(default)]
    pub radius: Option<f64>,
    #[serde(default)]
    pub lower: Option<[f64; 3]>,
    #[serde(default)]
    pub upper: Option<[f64; 3]>,
    #[serde(default)]
    pub arm: Option<f64>,
    #[serde(default)]
    pub thickness: Option<f64>,
    #[serde(default)]
    pub eps_r: Option<TensorSpec>,
    #[serde(default)]
    pub inv_mu_r: Option<TensorSpec>,
    #[serde(default)]
    pub xi: Option<TensorSpec>,
    #[serde(default)]
    pub zeta: Option<TensorSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShapeKind {
    Sphere,
    Cuboid,
    LShape,
}

/// A complex 3x3 tensor: a scalar multiple of the identity, a diagonal, or a
/// full row-major matrix, entries as `[re, im]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorSpec {
    #[serde(default)]
    pub scalar: Option<[f64; 2]>,
    #[serde(default)]
    pub diag: Option<[[f64; 2]; 3]>,
    #[serde(default)]
    pub full: Option<Vec<[f64; 2]>>,
}

impl TensorSpec {
    pub fn to_tensor(&self) -> Result<CMat3> {
        let given =
            usize::from(self.scalar.is_some()) + usize::from(self.diag.is_some()) + usize::from(self.full.is_some());
        if given != 1 {
            bail!("tensor spec needs exactly one of `scalar`, `diag`, `full`");
        }
        if let Some([re, im]) = self.scalar {
            let mut m = cmat3_identity();
            for (i, row) in m.iter_mut().enumerate() {
                row[i] = C64::new(re, im);
            }
            return Ok(m);
        }
        if let Some(d) = self.diag {
            return Ok(cmat3_diag([
                C64::new(d[0][0], d[0][1]),
                C64::new(d[1][0], d[1][1]),
                C64::new(d[2][0], d[2][1]),
            ]));
        }
        let full = self.full.as_ref().unwrap();
        if full.len() != 9 {
            bail!("full tensor needs 9 entries, got {}", full.len());
        }
        let mut m = cmat3_identity();
        for r in 0..3 {
            for c in 0..3 {
                let [re, im] = full[r * 3 + c];
                m[r][c] = C64::new(re, im);
            }
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    /// Cells per axis of the forward grid.
    pub cells: usize,
    /// Cube side of the forward grid; when omitted it is sized so the
    /// scatterer fits the inscribed ball with a safety margin.
    #[serde(default)]
    pub box_side: Option<f64>,
    pub tol: f64,
    pub restart: usize,
    pub max_iter: usize,
    /// Skip the well-posedness audit.
    pub force: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            cells: 32,
            box_side: None,
            tol: 1e-6,
            restart: 50,
            max_iter: 500,
            force: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingConfig {
    pub lower: [f64; 3],
    pub upper: [f64; 3],
    pub points: usize,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            lower: [-1.5; 3],
            upper: [1.5; 3],
            points: 40,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub delta: f64,
    pub seed: u64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            delta: 0.0,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub isovalue: f64,
    /// Cross sections to export, e.g. `{ axis = "y", offset = 0.0 }`.
    pub slices: Vec<SliceConfig>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            isovalue: 0.5,
            slices: vec![SliceConfig {
                axis: "y".into(),
                offset: 0.0,
            }],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SliceConfig {
    pub axis: String,
    pub offset: f64,
}

impl SliceConfig {
    pub fn axis_index(&self) -> Result<usize> {
        match self.axis.as_str() {
            "x" => Ok(0),
            "y" => Ok(1),
            "z" => Ok(2),
            other => bail!("slice axis must be x, y, or z, got `{other}`"),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FresnelConfig {
    pub frequency_ghz: f64,
    pub receiver_radius_m: f64,
    #[serde(default = "default_unit_scale")]
    pub unit_scale_m: f64,
    #[serde(default)]
    pub columns: Option<ColumnsConfig>,
}

fn default_unit_scale() -> f64 {
    0.04
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnsConfig {
    pub frequency_ghz: usize,
    pub source_theta: usize,
    pub source_phi: usize,
    pub receiver_phi: usize,
    pub total_re: usize,
    pub total_im: usize,
    pub incident_re: usize,
    pub incident_im: usize,
}

impl ColumnsConfig {
    pub fn to_map(&self) -> ColumnMap {
        ColumnMap {
            frequency_ghz: self.frequency_ghz,
            source_theta: self.source_theta,
            source_phi: self.source_phi,
            receiver_phi: self.receiver_phi,
            total_re: self.total_re,
            total_im: self.total_im,
            incident_re: self.incident_re,
            incident_im: self.incident_im,
        }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).context("parsing configuration")?;
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<()> {
        match (self.wave.wavenumber, self.wave.frequency_ghz) {
            (Some(k), None) if k > 0.0 => {}
            (None, Some(f)) if f > 0.0 => {}
            _ => bail!("[wave] needs exactly one positive `wavenumber` or `frequency_ghz`"),
        }
        if self.mode == Mode::Fresnel && self.fresnel.is_none() {
            bail!("fresnel mode requires a [fresnel] section");
        }
        Ok(())
    }

    /// Computational wavenumber, converting a lab frequency when given.
    pub fn wavenumber(&self) -> f64 {
        match self.wave.wavenumber {
            Some(k) => k,
            None => {
                let scale = self
                    .fresnel
                    .as_ref()
                    .map(|f| f.unit_scale_m)
                    .unwrap_or_else(default_unit_scale);
                invscat::fresnel::computational_wavenumber(
                    self.wave.frequency_ghz.unwrap(),
                    scale,
                )
            }
        }
    }

    pub fn wave_context(&self) -> Result<WaveContext> {
        let frac = std::f64::consts::FRAC_1_SQRT_2;
        let a1 = self.wave.alpha1.unwrap_or([frac, 0.0]);
        let a2 = self.wave.alpha2.unwrap_or([frac, 0.0]);
        WaveContext::new(
            self.wavenumber(),
            self.wave.anchor,
            C64::new(a1[0], a1[1]),
            C64::new(a2[0], a2[1]),
        )
        .map_err(|e| anyhow::anyhow!("{e}"))
    }

    pub fn sampling_grid(&self) -> Result<SamplingGrid> {
        let s = &self.sampling;
        let n = s.points;
        SamplingGrid::new(s.lower, s.upper, [n, n, n]).map_err(|e| anyhow::anyhow!("{e}"))
    }

    /// Builds the shapes with their tensors, the union support, and the
    /// voxel model on the forward grid.
    pub fn material_model(&self) -> Result<(MaterialModel, Shape)> {
        let mut shapes = Vec::new();
        for (i, sc) in self.material.shapes.iter().enumerate() {
            let shape = sc.to_shape().with_context(|| format!("material shape {i}"))?;
            let tensors = sc.tensors().with_context(|| format!("material shape {i}"))?;
            shapes.push((shape, tensors));
        }
        let union = Shape::Union(shapes.iter().map(|(s, _)| s.clone()).collect());

        let side = match self.solver.box_side {
            Some(s) => s,
            None => {
                // the support must fit the inscribed ball of the grid box
                let (bc, br) = union.bounding_ball();
                let center_offset = invscat::linalg::norm(bc);
                2.0 * (br + center_offset) * 1.02
            }
        };
        let grid = VolumeGrid::cube([0.0; 3], side, self.solver.cells)
            .map_err(|e| anyhow::anyhow!("{e}"))?;

        let model = if shapes.is_empty() {
            MaterialModel::vacuum(grid)
        } else {
            MaterialModel::from_fn(grid, &union, |x| {
                for (shape, t) in &shapes {
                    if shape.contains(x) {
                        return *t;
                    }
                }
                // unreachable: from_fn only samples inside the union
                (
                    cmat3_identity(),
                    cmat3_identity(),
                    invscat::linalg::CMAT3_ZERO,
                    invscat::linalg::CMAT3_ZERO,
                )
            })
            .map_err(|e| anyhow::anyhow!("{e}"))?
        };
        Ok((model, union))
    }

    pub fn forward_options(&self) -> invscat::forward::ForwardOptions {
        invscat::forward::ForwardOptions {
            gmres: invscat::forward::gmres::GmresConfig {
                tol: self.solver.tol,
                restart: self.solver.restart,
                max_iter: self.solver.max_iter,
            },
            force: self.solver.force,
        }
    }

    pub fn fresnel_meta(&self) -> Result<FresnelMeta> {
        let f = self
            .fresnel
            .as_ref()
            .ok_or_else(|| anyhow::anyhow!("missing [fresnel] section"))?;
        FresnelMeta::new(f.receiver_radius_m, f.unit_scale_m).map_err(|e| anyhow::anyhow!("{e}"))
    }

    pub fn column_map(&self) -> ColumnMap {
        self.fresnel
            .as_ref()
            .and_then(|f| f.columns.as_ref())
            .map(|c| c.to_map())
            .unwrap_or_default()
    }

    /// Fully resolved TOML, defaults materialized.
    pub fn to_resolved_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serialises")
    }
}

impl ShapeConfig {
    pub fn to_shape(&self) -> Result<Shape> {
        match self.kind {
            ShapeKind::Sphere => {
                let center = self.center.context("sphere needs `center`")?;
                let radius = self.radius.context("sphere needs `radius`")?;
                if !(radius > 0.0) {
                    bail!("sphere radius must be positive");
                }
                Ok(Shape::Sphere { center, radius })
            }
            ShapeKind::Cuboid => {
                let lower = self.lower.context("cuboid needs `lower`")?;
                let upper = self.upper.context("cuboid needs `upper`")?;
                if (0..3).any(|a| upper[a] <= lower[a]) {
                    bail!("cuboid upper must exceed lower on every axis");
                }
                Ok(Shape::Cuboid { lower, upper })
            }
            ShapeKind::LShape => {
                let arm = self.arm.context("l-shape needs `arm`")?;
                let thickness = self.thickness.context("l-shape needs `thickness`")?;
                if !(arm > 0.0 && thickness > 0.0) {
                    bail!("l-shape arm and thickness must be positive");
                }
                Ok(Shape::l_shape(arm, thickness))
            }
        }
    }

    fn tensors(&self) -> Result<(CMat3, CMat3, CMat3, CMat3)> {
        let get = |spec: &Option<TensorSpec>, vacuum: CMat3| -> Result<CMat3> {
            match spec {
                Some(t) => t.to_tensor(),
                None => Ok(vacuum),
            }
        };
        Ok((
            get(&self.eps_r, cmat3_identity())?,
            get(&self.inv_mu_r, cmat3_identity())?,
            get(&self.xi, invscat::linalg::CMAT3_ZERO)?,
            get(&self.zeta, invscat::linalg::CMAT3_ZERO)?,
        ))
    }
}
