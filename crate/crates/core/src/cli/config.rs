//! Experiment configuration files.
//!
//! Configs are strict JSON: unknown keys are errors. A config is turned into
//! a [`Plan`] up front, so every validation error surfaces before the first
//! rollout.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::avoidance::{AvoidanceMethod, ComposedField, CosGradient, Obstacle};
use crate::dmp::{LearnConfig, RolloutConfig, Trajectory, Vector, DEFAULT_DT};
use crate::error::{Error, Result};
use crate::obstacles::{PointObstacle, Superquadric};
use crate::sim::{build_scene, Scene, SceneLayout, Variant};

use super::{demo, io};

pub const DEFAULT_ELASTIC: f64 = 1050.0;
pub const DEFAULT_N_BASIS: usize = 50;
pub const DEFAULT_BOUNDARY_POINTS: usize = 50;
/// Rollouts run this many multiples of `tau` unless a horizon is given.
pub const DEFAULT_HORIZON_TAUS: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    OneObstacle,
    TwoObstacle,
    Multirobot,
    Custom,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::OneObstacle => "one_obstacle",
            ExperimentKind::TwoObstacle => "two_obstacle",
            ExperimentKind::Multirobot => "multirobot",
            ExperimentKind::Custom => "custom",
        }
    }
}

/// Learning and integration parameters shared by `learn`, `rollout` and the
/// single-primitive experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DmpParams {
    pub elastic: f64,
    /// `None` selects critical damping `2 sqrt(K)`.
    pub damping: Option<f64>,
    pub alpha: f64,
    pub n_basis: usize,
    pub regularization: Option<f64>,
    /// Integration step; also the sampling step of builtin demos.
    pub dt: f64,
    /// Defaults to three times `tau`.
    pub horizon: Option<f64>,
    /// Defaults to the demo duration.
    pub tau: Option<f64>,
    pub start: Option<Vec<f64>>,
    pub goal: Option<Vec<f64>>,
}

impl Default for DmpParams {
    fn default() -> Self {
        Self {
            elastic: DEFAULT_ELASTIC,
            damping: None,
            alpha: crate::phase::DEFAULT_ALPHA,
            n_basis: DEFAULT_N_BASIS,
            regularization: None,
            dt: DEFAULT_DT,
            horizon: None,
            tau: None,
            start: None,
            goal: None,
        }
    }
}

impl DmpParams {
    pub fn learn_config(&self) -> Result<LearnConfig> {
        if !(self.elastic > 0.0 && self.elastic.is_finite()) {
            return Err(Error::invalid(format!(
                "elastic gain must be positive, got {}",
                self.elastic
            )));
        }
        if let Some(d) = self.damping {
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::invalid(format!("damping must be positive, got {d}")));
            }
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::invalid(format!(
                "alpha must be positive, got {}",
                self.alpha
            )));
        }
        if self.n_basis == 0 {
            return Err(Error::invalid("n_basis must be at least 1"));
        }
        if let Some(r) = self.regularization {
            if !(r >= 0.0 && r.is_finite()) {
                return Err(Error::invalid(format!(
                    "regularization must be non-negative, got {r}"
                )));
            }
        }
        Ok(LearnConfig {
            elastic: vec![self.elastic],
            damping: self.damping.map(|d| vec![d]),
            alpha: self.alpha,
            n_basis: self.n_basis,
            regularization: self.regularization,
        })
    }

    pub fn rollout_config(&self, tau: f64) -> Result<RolloutConfig> {
        if let Some(t) = self.tau {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::invalid(format!("tau must be positive, got {t}")));
            }
        }
        let config =
            RolloutConfig::new(self.dt, self.horizon.unwrap_or(DEFAULT_HORIZON_TAUS * tau));
        config.steps()?;
        Ok(config)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum BuiltinDemo {
    Spiral,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DemoSource {
    Builtin(BuiltinDemo),
    /// Trajectory CSV, relative to the config file.
    File(PathBuf),
}

impl Default for DemoSource {
    fn default() -> Self {
        DemoSource::Builtin(BuiltinDemo::Spiral)
    }
}

impl DemoSource {
    pub fn load(&self, base: &Path, dt: f64) -> Result<Trajectory> {
        match self {
            DemoSource::Builtin(BuiltinDemo::Spiral) => demo::spiral(dt),
            DemoSource::File(p) => io::read_trajectory(&base.join(p)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Geometry {
    Superquadric(Superquadric),
    Point(PointObstacle),
}

impl Geometry {
    /// The obstacle clearance is measured against.
    pub fn truth(&self) -> Obstacle {
        match self {
            Geometry::Superquadric(sq) => Obstacle::Volume(sq.clone()),
            Geometry::Point(p) => Obstacle::Point(p.clone()),
        }
    }
}

/// How `method` sees `geometry`: point methods get the boundary sampled at
/// `count` nodes.
pub fn field_member(
    method: AvoidanceMethod,
    geometry: &Geometry,
    count: usize,
) -> Result<(AvoidanceMethod, Obstacle)> {
    let obstacle = match (geometry, method.is_point_method()) {
        (Geometry::Superquadric(sq), true) => Obstacle::Cloud(sq.discretize_boundary(count)?),
        (Geometry::Superquadric(sq), false) => Obstacle::Volume(sq.clone()),
        (Geometry::Point(p), true) => Obstacle::Point(p.clone()),
        (Geometry::Point(_), false) => {
            return Err(Error::invalid(format!(
                "{} needs a superquadric obstacle, got a point",
                method.name()
            )))
        }
    };
    Ok((method, obstacle))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleSpec {
    pub geometry: Geometry,
    pub method: AvoidanceMethod,
    #[serde(default)]
    pub boundary_points: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    #[serde(default = "both_variants")]
    pub variants: Vec<Variant>,
    #[serde(default)]
    pub layout: SceneLayout,
}

fn both_variants() -> Vec<Variant> {
    vec![Variant::NullWeights, Variant::ConstantSpeed]
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            variants: both_variants(),
            layout: SceneLayout::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub dmp: Option<DmpParams>,
    #[serde(default)]
    pub demo: Option<DemoSource>,
    /// Benchmark kinds only; defaults to the five standard methods.
    #[serde(default)]
    pub methods: Option<Vec<AvoidanceMethod>>,
    /// Custom kind only.
    #[serde(default)]
    pub obstacles: Vec<ObstacleSpec>,
    /// Benchmark kinds: boundary nodes given to point methods.
    #[serde(default)]
    pub boundary_points: Option<usize>,
    /// Multirobot kind only.
    #[serde(default)]
    pub scene: Option<SceneConfig>,
    #[serde(default)]
    pub cos_gradient: CosGradient,
    /// Relative to the config file; `--out` overrides it.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

/// Obstacles for `rollout --config`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleFile {
    pub obstacles: Vec<ObstacleSpec>,
    #[serde(default)]
    pub cos_gradient: CosGradient,
}

impl ObstacleFile {
    pub fn field(&self) -> Result<ComposedField> {
        let members = self
            .obstacles
            .iter()
            .map(|o| {
                field_member(
                    o.method,
                    &o.geometry,
                    o.boundary_points.unwrap_or(DEFAULT_BOUNDARY_POINTS),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ComposedField::new(members)?.with_cos_gradient(self.cos_gradient))
    }
}

/// Obstacles and goal for `metrics --config`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsFile {
    #[serde(default)]
    pub obstacles: Vec<Geometry>,
    /// Defaults to the reference's final position.
    #[serde(default)]
    pub goal: Option<Vec<f64>>,
}

/// One adapted rollout of a single-primitive experiment.
#[derive(Debug, Clone)]
pub struct Case {
    pub name: String,
    pub methods: Vec<AvoidanceMethod>,
    pub field: ComposedField,
}

#[derive(Debug, Clone)]
pub struct SinglePlan {
    pub demo: Trajectory,
    pub learn: LearnConfig,
    pub tau: Option<f64>,
    pub start: Option<Vector>,
    pub goal: Option<Vector>,
    pub rollout: RolloutConfig,
    pub cases: Vec<Case>,
    /// Obstacles clearance is measured against.
    pub truth: Vec<Obstacle>,
}

#[derive(Debug, Clone)]
pub enum Plan {
    Single(Box<SinglePlan>),
    Multirobot(Vec<(Variant, Scene)>),
}

/// The ellipse, and for the two-obstacle kind the circle, of the planar
/// benchmark.
pub fn benchmark_obstacles(kind: ExperimentKind) -> Vec<Superquadric> {
    let ellipse = Superquadric::ellipsoid(&[-0.5, 0.7], &[0.3, 0.2]).expect("valid ellipse");
    let circle = Superquadric::ellipsoid(&[0.15, 0.4], &[0.1, 0.1]).expect("valid circle");
    match kind {
        ExperimentKind::TwoObstacle => vec![ellipse, circle],
        _ => vec![ellipse],
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str, origin: &str) -> Result<Self> {
        io::parse_json(text, origin)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&io::read_to_string(path)?, &path.display().to_string())
    }

    /// Validates everything and loads inputs; `base` resolves relative paths.
    pub fn plan(&self, base: &Path) -> Result<Plan> {
        let single_only = |what: &str, present: bool| {
            if present && self.kind == ExperimentKind::Multirobot {
                Err(Error::invalid(format!(
                    "`{what}` does not apply to multirobot experiments"
                )))
            } else {
                Ok(())
            }
        };
        single_only("dmp", self.dmp.is_some())?;
        single_only("demo", self.demo.is_some())?;
        single_only("methods", self.methods.is_some())?;
        single_only("boundary_points", self.boundary_points.is_some())?;
        if self.scene.is_some() && self.kind != ExperimentKind::Multirobot {
            return Err(Error::invalid(
                "`scene` only applies to multirobot experiments",
            ));
        }
        let custom = self.kind == ExperimentKind::Custom;
        if custom && (self.methods.is_some() || self.boundary_points.is_some()) {
            return Err(Error::invalid(
                "custom experiments set methods per obstacle, not `methods`/`boundary_points`",
            ));
        }
        if !custom && !self.obstacles.is_empty() {
            return Err(Error::invalid(format!(
                "`obstacles` only applies to custom experiments, not {}",
                self.kind.name()
            )));
        }

        if self.kind == ExperimentKind::Multirobot {
            let scene = self.scene.clone().unwrap_or_default();
            if scene.variants.is_empty() {
                return Err(Error::invalid("`scene.variants` is empty"));
            }
            let layout = scene.layout;
            layout.mutual_method.validate()?;
            layout.obstacle_method.validate()?;
            let mut scenes = Vec::with_capacity(scene.variants.len());
            for v in scene.variants {
                if scenes.iter().any(|(w, _)| *w == v) {
                    return Err(Error::invalid(format!("variant {v:?} listed twice")));
                }
                let mut sc = build_scene(v, &layout)?;
                sc.cos_gradient = self.cos_gradient;
                sc.validate()?;
                scenes.push((v, sc));
            }
            return Ok(Plan::Multirobot(scenes));
        }

        let params = self.dmp.clone().unwrap_or_default();
        let learn = params.learn_config()?;
        let vector = |name: &str, v: &Option<Vec<f64>>| -> Result<Option<Vector>> {
            match v {
                Some(xs) if xs.iter().any(|x| !x.is_finite()) => {
                    Err(Error::invalid(format!("{name} must be finite")))
                }
                Some(xs) => Ok(Some(Vector::from_column_slice(xs))),
                None => Ok(None),
            }
        };
        let start = vector("start", &params.start)?;
        let goal = vector("goal", &params.goal)?;

        let (cases, truth) = if custom {
            self.custom_cases()?
        } else {
            self.benchmark_cases()?
        };
        let demo = self
            .demo
            .clone()
            .unwrap_or_default()
            .load(base, params.dt)?;
        let d = demo.dims();
        for (name, v) in [("start", &start), ("goal", &goal)] {
            if let Some(v) = v {
                if v.len() != d {
                    return Err(Error::Dimension(format!(
                        "{name} has {} entries for a {d}-dimensional demo",
                        v.len()
                    )));
                }
            }
        }
        if let Some(c) = cases.iter().find(|c| c.field.dims() != d) {
            return Err(Error::Dimension(format!(
                "{}-dimensional obstacles for a {d}-dimensional demo",
                c.field.dims()
            )));
        }
        let tau = params.tau.unwrap_or(demo.duration());
        let rollout = params.rollout_config(tau)?;
        Ok(Plan::Single(Box::new(SinglePlan {
            demo,
            learn,
            tau: params.tau,
            start,
            goal,
            rollout,
            cases,
            truth,
        })))
    }

    fn benchmark_cases(&self) -> Result<(Vec<Case>, Vec<Obstacle>)> {
        let methods = self
            .methods
            .clone()
            .unwrap_or_else(|| AvoidanceMethod::benchmark_defaults().to_vec());
        if methods.is_empty() {
            return Err(Error::invalid("`methods` is empty"));
        }
        let count = self.boundary_points.unwrap_or(DEFAULT_BOUNDARY_POINTS);
        let geometry: Vec<Geometry> = benchmark_obstacles(self.kind)
            .into_iter()
            .map(Geometry::Superquadric)
            .collect();
        let mut cases: Vec<Case> = Vec::with_capacity(methods.len());
        for m in methods {
            m.validate()?;
            if cases.iter().any(|c| c.name == m.name()) {
                return Err(Error::invalid(format!("method {} listed twice", m.name())));
            }
            let members = geometry
                .iter()
                .map(|g| field_member(m, g, count))
                .collect::<Result<Vec<_>>>()?;
            cases.push(Case {
                name: m.name().to_string(),
                methods: vec![m],
                field: ComposedField::new(members)?.with_cos_gradient(self.cos_gradient),
            });
        }
        Ok((cases, geometry.iter().map(Geometry::truth).collect()))
    }

    fn custom_cases(&self) -> Result<(Vec<Case>, Vec<Obstacle>)> {
        if self.obstacles.is_empty() {
            return Err(Error::invalid(
                "custom experiments need at least one obstacle",
            ));
        }
        let members = self
            .obstacles
            .iter()
            .map(|o| {
                o.method.validate()?;
                field_member(
                    o.method,
                    &o.geometry,
                    o.boundary_points.unwrap_or(DEFAULT_BOUNDARY_POINTS),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let case = Case {
            name: "adapted".to_string(),
            methods: self.obstacles.iter().map(|o| o.method).collect(),
            field: ComposedField::new(members)?.with_cos_gradient(self.cos_gradient),
        };
        Ok((
            vec![case],
            self.obstacles.iter().map(|o| o.geometry.truth()).collect(),
        ))
    }
}
