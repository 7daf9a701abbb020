//! TOML configuration for single runs.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::sync::Arc;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, VectorGridFunction};
use crate::interface::{BodyForce, DerivedJumps, ForceDensity, InterfaceGeometry, Motion, NoJumps, SampledCurve, Shape};
use crate::solver::{JumpMode, Problem, SolverConfig};

use super::cases::ManufacturedCase;

/// Documentation of every key, printed by the command-line help.
pub const CONFIG_KEYS: &str = "\
Run configuration (TOML). Top-level keys:
  case            manufactured case: taylor_green, static_circle, moving_circle,
                  quiescent. When set, geometry, force and body force come from
                  the case and `geometry`/`force` tables are rejected.
  n               nodes per half period (grid has 2n x 2n nodes)      [required]
  lambda          tau / h                                              [0.5]
  T               final time                                           [required]
  jump_mode       analytic | derived                                   [analytic]
  enable_c1       time-derivative crossing correction                  [true]
  enable_c7       side-shift crossing corrections                      [true]
  snapshot_times  times at which velocity snapshots are written        [[]]
  snapshot_dir    directory for snapshot CSV files                     [none]
  output          summary CSV path; stdout when absent                 [none]
[geometry] (without `case`)
  shape           circle | ellipse | sampled                           [circle]
  center          [x, y]                                               [[0, 0]]
  radius          circle radius                                        [1.0]
  semi_axes       ellipse semi-axes [a, b]                             [[1.0, 0.6]]
  angle           ellipse rotation                                     [0.0]
  points          sampled curve points [[x, y], ...], counterclockwise
  motion          static | translate | rotate                          [static]
  velocity        translation velocity [vx, vy]                        [[0, 0]]
  omega           rotation rate                                        [0.0]
[force] (without `case`; f = normal n + tangential sin(mode theta) s)
  normal          normal force density                                 [0.0]
  tangential      tangential amplitude                                 [0.0]
  mode            angular mode of the tangential part                  [1]
[body_force]
  kind            none | case                                          [case with `case`, else none]
";

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub case: Option<String>,
    pub n: usize,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(rename = "T")]
    pub t_final: f64,
    #[serde(default = "default_mode")]
    pub jump_mode: JumpMode,
    #[serde(default = "yes")]
    pub enable_c1: bool,
    #[serde(default = "yes")]
    pub enable_c7: bool,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    pub snapshot_dir: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub geometry: Option<GeometryConfig>,
    pub force: Option<ForceConfig>,
    pub body_force: Option<BodyForceConfig>,
}

fn default_lambda() -> f64 {
    0.5
}

fn default_mode() -> JumpMode {
    JumpMode::Analytic
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeKind {
    Circle,
    Ellipse,
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MotionKind {
    Static,
    Translate,
    Rotate,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    #[serde(default = "circle")]
    pub shape: ShapeKind,
    #[serde(default)]
    pub center: [f64; 2],
    #[serde(default = "unit")]
    pub radius: f64,
    #[serde(default = "semi_axes")]
    pub semi_axes: [f64; 2],
    #[serde(default)]
    pub angle: f64,
    #[serde(default)]
    pub points: Vec<[f64; 2]>,
    #[serde(default = "still")]
    pub motion: MotionKind,
    #[serde(default)]
    pub velocity: [f64; 2],
    #[serde(default)]
    pub omega: f64,
}

fn circle() -> ShapeKind {
    ShapeKind::Circle
}

fn unit() -> f64 {
    1.0
}

fn semi_axes() -> [f64; 2] {
    [1.0, 0.6]
}

fn still() -> MotionKind {
    MotionKind::Static
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForceConfig {
    #[serde(default)]
    pub normal: f64,
    #[serde(default)]
    pub tangential: f64,
    #[serde(default = "one")]
    pub mode: u32,
}

fn one() -> u32 {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BodyForceKind {
    None,
    Case,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodyForceConfig {
    pub kind: BodyForceKind,
}

impl GeometryConfig {
    pub fn build(&self) -> Result<InterfaceGeometry> {
        let shape = match self.shape {
            ShapeKind::Circle => Shape::Circle { center: self.center, radius: self.radius },
            ShapeKind::Ellipse => Shape::Ellipse { center: self.center, semi_axes: self.semi_axes, angle: self.angle },
            ShapeKind::Sampled => Shape::Sampled(SampledCurve::new(&self.points)?),
        };
        let motion = match self.motion {
            MotionKind::Static => Motion::Static,
            MotionKind::Translate => Motion::Translate { velocity: self.velocity },
            MotionKind::Rotate => Motion::Rotate { omega: self.omega },
        };
        InterfaceGeometry::new(shape, motion, PI)
    }
}

/// `normal n + tangential sin(mode theta) s` on the curve.
struct ConfiguredForce {
    geometry: Arc<InterfaceGeometry>,
    normal: f64,
    tangential: f64,
    mode: f64,
}

impl ForceDensity for ConfiguredForce {
    fn force(&self, theta: f64, t: f64) -> [f64; 2] {
        let p = self.geometry.point(theta, t);
        let ft = self.tangential * (self.mode * theta).sin();
        [0, 1].map(|k| self.normal * p.normal[k] + ft * p.tangent[k])
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn check(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Config(format!("key `n`: must be at least 2, got {}", self.n)));
        }
        if !(self.lambda > 0.0) {
            return Err(Error::Config(format!("key `lambda`: must be positive, got {}", self.lambda)));
        }
        if !(self.t_final >= 0.0) {
            return Err(Error::Config(format!("key `T`: must be nonnegative, got {}", self.t_final)));
        }
        if self.case.is_some() && (self.geometry.is_some() || self.force.is_some()) {
            return Err(Error::Config("keys `geometry` and `force` cannot be combined with `case`".into()));
        }
        if self.case.is_none() && self.jump_mode == JumpMode::Analytic && self.geometry.is_some() {
            return Err(Error::Config("key `jump_mode`: a configured geometry needs `derived` jumps".into()));
        }
        if self.case.is_none() && matches!(self.body_force, Some(BodyForceConfig { kind: BodyForceKind::Case })) {
            return Err(Error::Config("key `body_force.kind`: `case` requires a `case`".into()));
        }
        Ok(())
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            lambda: self.lambda,
            t_final: self.t_final,
            jump_mode: self.jump_mode,
            enable_c1: self.enable_c1,
            enable_c7: self.enable_c7,
            snapshot_times: self.snapshot_times.clone(),
            snapshot_dir: self.snapshot_dir.clone(),
        }
    }

    /// The case named in the config, if any.
    pub fn manufactured_case(&self) -> Result<Option<ManufacturedCase>> {
        self.case.as_deref().map(ManufacturedCase::by_name).transpose()
    }

    pub fn problem(&self) -> Result<Problem> {
        let spec = GridSpec::periodic_2pi(self.n)?;
        if let Some(case) = self.manufactured_case()? {
            let mut p = case.problem(spec, self.jump_mode, 0.0)?;
            if matches!(self.body_force, Some(BodyForceConfig { kind: BodyForceKind::None })) {
                p.body = None;
            }
            return Ok(p);
        }
        let Some(gc) = &self.geometry else {
            return Ok(Problem {
                spec,
                geometry: None,
                jumps: Arc::new(NoJumps),
                body: None,
                initial_velocity: VectorGridFunction::zeros(spec),
                t0: 0.0,
            });
        };
        let geometry = Arc::new(gc.build()?);
        let fc = self.force.clone().unwrap_or(ForceConfig { normal: 0.0, tangential: 0.0, mode: 1 });
        let force: Arc<dyn ForceDensity> =
            Arc::new(ConfiguredForce { geometry: geometry.clone(), normal: fc.normal, tangential: fc.tangential, mode: fc.mode as f64 });
        let body: Option<Arc<dyn BodyForce>> = None;
        Ok(Problem {
            spec,
            geometry: Some(geometry.clone()),
            jumps: Arc::new(DerivedJumps::new(geometry, force, body.clone())),
            body,
            initial_velocity: VectorGridFunction::zeros(spec),
            t0: 0.0,
        })
    }
}
