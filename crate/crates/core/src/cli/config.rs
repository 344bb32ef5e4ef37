//! TOML experiment configuration and its resolution into an [`Experiment`].

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{DriverSpec, Experiment, Reference};
use crate::driver::{JumpDriverSpec, JumpLaw};
use crate::error::{Error, Result};
use crate::flow::{Coefficient, FlowConfig, WorkingRegion};
use crate::geometry::Domain;
use crate::schemes::{SchemeKind, DEFAULT_SUBSTEPS_BAR};
use crate::{point, Point};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DomainConfig {
    HalfSpace { normal: Vec<f64>, offset: f64 },
    Ball { center: Vec<f64>, radius: f64 },
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Polyhedron { faces: Vec<FaceConfig> },
    ExteriorBall { center: Vec<f64>, radius: f64 },
}

/// One face `{x : normal · x ≥ offset}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaceConfig {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl DomainConfig {
    pub fn build(&self) -> Result<Domain> {
        match self {
            DomainConfig::HalfSpace { normal, offset } => Domain::half_space(normal, *offset),
            DomainConfig::Ball { center, radius } => Domain::ball(center, *radius),
            DomainConfig::Box { lower, upper } => Domain::cuboid(lower, upper),
            DomainConfig::Polyhedron { faces } => {
                let f: Vec<(Vec<f64>, f64)> = faces.iter().map(|f| (f.normal.clone(), f.offset)).collect();
                Domain::polyhedron(&f)
            }
            DomainConfig::ExteriorBall { center, radius } => Domain::exterior_ball(center, *radius),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionConfig {
    pub center: Vec<f64>,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CoefficientConfig {
    Zero,
    Identity,
    /// Row-major `d × d` matrix.
    Constant { matrix: Vec<Vec<f64>> },
    LinearDiagonal { scale: f64, region: RegionConfig },
    Trig { scale: f64 },
    TanhDiagonal { scale: f64 },
}

impl CoefficientConfig {
    pub fn build(&self, dim: usize) -> Result<Coefficient> {
        match self {
            CoefficientConfig::Zero => Coefficient::zero(dim),
            CoefficientConfig::Identity => Coefficient::identity(dim),
            CoefficientConfig::Constant { matrix } => {
                if matrix.len() != dim || matrix.iter().any(|r| r.len() != dim) {
                    return Err(Error::InvalidParameter(format!("constant coefficient must be {dim}x{dim}")));
                }
                Coefficient::constant(DMatrix::from_fn(dim, dim, |i, j| matrix[i][j]))
            }
            CoefficientConfig::LinearDiagonal { scale, region } => {
                Coefficient::linear_diagonal(dim, *scale, WorkingRegion { center: point(&region.center), radius: region.radius })
            }
            CoefficientConfig::Trig { scale } => Coefficient::trig(dim, *scale),
            CoefficientConfig::TanhDiagonal { scale } => Coefficient::tanh_diagonal(dim, *scale),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DriverConfig {
    Brownian {
        steps: usize,
    },
    /// Brownian part plus compound Poisson jumps. Jumps are uniform on the
    /// ball of `jump_radius`, or the fixed `jump_vector` when given.
    Jump {
        steps: usize,
        jump_rate: f64,
        #[serde(default)]
        jump_radius: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        jump_vector: Option<Vec<f64>>,
        diffusion_scale: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeConfig {
    pub kind: SchemeKind,
    pub x0: Vec<f64>,
    #[serde(default = "default_flow_substeps")]
    pub flow_substeps: usize,
    #[serde(default)]
    pub flow_adaptive: bool,
    #[serde(default = "default_substeps_bar")]
    pub substeps_bar: usize,
    /// Mesh used by `simulate`; defaults to the finest rung of the ladder.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh: Option<f64>,
}

fn default_flow_substeps() -> usize {
    FlowConfig::scheme().substeps
}

fn default_substeps_bar() -> usize {
    DEFAULT_SUBSTEPS_BAR
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ReferenceConfig {
    Numerical { refine: usize },
    StratonovichExponential,
    ItoExponential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub horizon: f64,
    pub n_paths: usize,
    pub mesh_ladder: Vec<f64>,
    pub output_dir: String,
    pub domain: DomainConfig,
    pub coefficient: CoefficientConfig,
    pub driver: DriverConfig,
    pub scheme: SchemeConfig,
    pub reference: ReferenceConfig,
}

impl Default for ExperimentConfig {
    /// Reflected Brownian motion on the unit disk.
    fn default() -> Self {
        Self {
            seed: 1,
            horizon: 1.0,
            n_paths: 100,
            mesh_ladder: vec![1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0, 1.0 / 256.0],
            output_dir: "out".into(),
            domain: DomainConfig::Ball { center: vec![0.0, 0.0], radius: 1.0 },
            coefficient: CoefficientConfig::Identity,
            driver: DriverConfig::Brownian { steps: 4096 },
            scheme: SchemeConfig {
                kind: SchemeKind::WzBar,
                x0: vec![0.5, 0.0],
                flow_substeps: default_flow_substeps(),
                flow_adaptive: false,
                substeps_bar: DEFAULT_SUBSTEPS_BAR,
                mesh: None,
            },
            reference: ReferenceConfig::Numerical { refine: 1024 },
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical TOML rendering.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }

    pub fn experiment(&self) -> Result<Experiment> {
        let domain = self.domain.build()?;
        let dim = domain.dim();
        let coefficient = self.coefficient.build(dim)?;
        let driver = match &self.driver {
            DriverConfig::Brownian { steps } => DriverSpec::Brownian { steps: *steps, dim },
            DriverConfig::Jump { steps, jump_rate, jump_radius, jump_vector, diffusion_scale } => {
                let jump_law = match jump_vector {
                    Some(v) => JumpLaw::FixedVector(point(v)),
                    None => JumpLaw::UniformBall { radius: *jump_radius },
                };
                DriverSpec::Jump(JumpDriverSpec {
                    horizon: self.horizon,
                    steps: *steps,
                    dim,
                    jump_rate: *jump_rate,
                    jump_law,
                    diffusion_scale: *diffusion_scale,
                })
            }
        };
        let reference = match self.reference {
            ReferenceConfig::Numerical { refine } => Reference::Numerical { refine },
            ReferenceConfig::StratonovichExponential => Reference::StratonovichExponential,
            ReferenceConfig::ItoExponential => Reference::ItoExponential,
        };
        let exp = Experiment {
            domain,
            coefficient,
            x0: Point::from_column_slice(&self.scheme.x0),
            horizon: self.horizon,
            driver,
            scheme: self.scheme.kind,
            flow: FlowConfig { substeps: self.scheme.flow_substeps, adaptive: self.scheme.flow_adaptive },
            substeps_bar: self.scheme.substeps_bar,
            meshes: self.mesh_ladder.clone(),
            n_paths: self.n_paths,
            seed: self.seed,
            reference,
        };
        exp.validate()?;
        if let Some(m) = self.scheme.mesh {
            if !(m.is_finite() && m > 0.0) {
                return Err(Error::InvalidParameter(format!("scheme mesh must be positive, got {m}")));
            }
        }
        Ok(exp)
    }

    /// Mesh of a single `simulate` run.
    pub fn simulate_mesh(&self) -> f64 {
        self.scheme.mesh.unwrap_or_else(|| *self.mesh_ladder.last().expect("validated ladder"))
    }
}

/// Input of the `skorokhod` command: a domain and an optional start point
/// (the first row of the input path when absent). Other tables are ignored,
/// so a full experiment config is accepted.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct SkorokhodConfig {
    pub domain: DomainConfig,
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
}

impl SkorokhodConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }
}
