//! Perturbation terms `phi(x, v)` that push a rollout away from obstacles.
//!
//! Three methods act on point obstacles (a static distance potential, a
//! velocity-dependent distance potential and a steering-angle rotation) and
//! two on superquadric volumes (a static isopotential potential and the
//! velocity-dependent volumetric potential
//!
//! ```text
//! U(x, v) = lambda (-cos theta)^beta |v| / C(x)^eta    if cos theta < 0, else 0
//! cos theta = <grad C(x), v> / (|grad C(x)| |v|)
//! ```
//!
//! whose negative gradient is the perturbation). Every method measures the
//! system velocity relative to the obstacle velocity, which reduces to the
//! plain velocity for still obstacles.
//!
//! The angle `theta` is taken from the isopotential gradient, which is only
//! meaningful for convex obstacles. Pseudo-ellipsoids with integer
//! exponents are convex; genuinely non-convex bodies should be split into
//! convex parts or replaced by their convex hull before use.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::dmp::{PerturbationField, Vector};
use crate::error::{Error, Result};
use crate::obstacles::{PointObstacle, Superquadric};

const MIN_SPEED: f64 = 1e-12;
const MIN_DISTANCE: f64 = 1e-12;

/// Which perturbation formula to use, with its gains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum AvoidanceMethod {
    /// `U = eta/2 (1/p - 1/p0)^2` inside the influence radius `p0`.
    StaticPoint { eta: f64, p0: f64 },
    /// `U = lambda (-cos theta)^beta |v| / p` when approaching.
    DynamicPoint { lambda: f64, beta: f64 },
    /// `phi = gamma R v theta exp(-beta theta)` with `theta` the steering angle.
    SteeringAngle { gamma: f64, beta: f64 },
    /// `U = A exp(-eta C) / C`.
    StaticVolume { amplitude: f64, eta: f64 },
    /// `U = lambda (-cos theta)^beta |v| / C^eta` when approaching.
    DynamicVolume { lambda: f64, beta: f64, eta: f64 },
}

impl AvoidanceMethod {
    pub const STATIC_POINT: Self = Self::StaticPoint { eta: 1.0, p0: 0.1 };
    pub const DYNAMIC_POINT: Self = Self::DynamicPoint {
        lambda: 0.2,
        beta: 2.0,
    };
    pub const STEERING_ANGLE: Self = Self::SteeringAngle {
        gamma: 20.0,
        beta: 3.0,
    };
    pub const STATIC_VOLUME: Self = Self::StaticVolume {
        amplitude: 10.0,
        eta: 1.0,
    };
    pub const DYNAMIC_VOLUME: Self = Self::DynamicVolume {
        lambda: 10.0,
        beta: 2.0,
        eta: 0.5,
    };

    /// The five methods with the gains of the planar benchmarks.
    pub fn benchmark_defaults() -> [Self; 5] {
        [
            Self::STATIC_POINT,
            Self::DYNAMIC_POINT,
            Self::STEERING_ANGLE,
            Self::STATIC_VOLUME,
            Self::DYNAMIC_VOLUME,
        ]
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::StaticPoint { .. } => "static_point",
            Self::DynamicPoint { .. } => "dynamic_point",
            Self::SteeringAngle { .. } => "steering_angle",
            Self::StaticVolume { .. } => "static_volume",
            Self::DynamicVolume { .. } => "dynamic_volume",
        }
    }

    pub fn is_point_method(&self) -> bool {
        matches!(
            self,
            Self::StaticPoint { .. } | Self::DynamicPoint { .. } | Self::SteeringAngle { .. }
        )
    }

    /// All gains positive; `beta > 1` for the two velocity-dependent
    /// potentials so that `(-cos theta)^(beta - 1)` stays bounded.
    pub fn validate(&self) -> Result<()> {
        let gains: &[(&str, f64)] = match self {
            Self::StaticPoint { eta, p0 } => &[("eta", *eta), ("p0", *p0)],
            Self::DynamicPoint { lambda, beta } => &[("lambda", *lambda), ("beta", *beta)],
            Self::SteeringAngle { gamma, beta } => &[("gamma", *gamma), ("beta", *beta)],
            Self::StaticVolume { amplitude, eta } => &[("amplitude", *amplitude), ("eta", *eta)],
            Self::DynamicVolume { lambda, beta, eta } => {
                &[("lambda", *lambda), ("beta", *beta), ("eta", *eta)]
            }
        };
        for (name, g) in gains {
            if !(*g > 0.0 && g.is_finite()) {
                return Err(Error::invalid(format!(
                    "{} gain {name} must be positive, got {g}",
                    self.name()
                )));
            }
        }
        match self {
            Self::DynamicPoint { beta, .. } | Self::DynamicVolume { beta, .. } if *beta <= 1.0 => {
                Err(Error::invalid(format!(
                    "{} needs beta > 1, got {beta}",
                    self.name()
                )))
            }
            _ => Ok(()),
        }
    }
}

fn check_dims(x: &Vector, v: &Vector, d: usize) -> Result<()> {
    if x.len() != d || v.len() != d {
        return Err(Error::Dimension(format!(
            "state of dimension {}/{} against a {d}-dimensional obstacle",
            x.len(),
            v.len()
        )));
    }
    Ok(())
}

fn point_offset(x: &Vector, obs: &PointObstacle) -> Result<(Vector, f64)> {
    let r = x - &obs.position;
    let p = r.norm();
    if p < MIN_DISTANCE {
        return Err(Error::Singularity(format!(
            "system is on a point obstacle (distance {p:e})"
        )));
    }
    Ok((r, p))
}

/// `U_s(x)` for a point obstacle.
pub fn static_point_potential(x: &Vector, obs: &PointObstacle, eta: f64, p0: f64) -> Result<f64> {
    let (_, p) = point_offset(x, obs)?;
    if p > p0 {
        return Ok(0.0);
    }
    Ok(0.5 * eta * (1.0 / p - 1.0 / p0).powi(2))
}

/// `-grad U_s`; ignores the velocity.
pub fn static_point_phi(x: &Vector, obs: &PointObstacle, eta: f64, p0: f64) -> Result<Vector> {
    let (r, p) = point_offset(x, obs)?;
    if p >= p0 {
        return Ok(Vector::zeros(x.len()));
    }
    Ok(r * (eta * (1.0 / p - 1.0 / p0) / (p * p * p)))
}

/// `cos theta` between the relative velocity and `x - o`; `None` when the
/// relative velocity vanishes.
pub fn point_cos_theta(x: &Vector, v: &Vector, obs: &PointObstacle) -> Result<Option<f64>> {
    let (r, p) = point_offset(x, obs)?;
    let u = v - &obs.velocity;
    let speed = u.norm();
    if speed < MIN_SPEED {
        return Ok(None);
    }
    Ok(Some(u.dot(&r) / (speed * p)))
}

/// `U_d(x, v)` for a point obstacle.
pub fn dynamic_point_potential(
    x: &Vector,
    v: &Vector,
    obs: &PointObstacle,
    lambda: f64,
    beta: f64,
) -> Result<f64> {
    let (_, p) = point_offset(x, obs)?;
    let u = v - &obs.velocity;
    match point_cos_theta(x, v, obs)? {
        Some(cos) if cos < 0.0 => Ok(lambda * (-cos).powf(beta) * u.norm() / p),
        _ => Ok(0.0),
    }
}

/// `-grad_x U_d` at fixed velocity.
pub fn dynamic_point_phi(
    x: &Vector,
    v: &Vector,
    obs: &PointObstacle,
    lambda: f64,
    beta: f64,
) -> Result<Vector> {
    let (r, p) = point_offset(x, obs)?;
    let u = v - &obs.velocity;
    let speed = u.norm();
    if speed < MIN_SPEED {
        return Ok(Vector::zeros(x.len()));
    }
    let cos = u.dot(&r) / (speed * p);
    if cos >= 0.0 {
        return Ok(Vector::zeros(x.len()));
    }
    // grad cos = u / (|u| p) - cos r / p^2 ;  grad (1/p) = -r / p^3
    let grad_cos = &u / (speed * p) - &r * (cos / (p * p));
    let neg = -cos;
    let scale = lambda * speed * neg.powf(beta - 1.0);
    Ok((grad_cos * (beta / p) + &r * (neg / (p * p * p))) * scale)
}

/// Steering angle between `o - x` and the relative velocity; `None` when
/// either vector vanishes.
pub fn steering_angle(x: &Vector, v: &Vector, obs: &PointObstacle) -> Option<f64> {
    let r = &obs.position - x;
    let u = v - &obs.velocity;
    let (rn, un) = (r.norm(), u.norm());
    if rn < MIN_DISTANCE || un < MIN_SPEED {
        return None;
    }
    Some((r.dot(&u) / (rn * un)).clamp(-1.0, 1.0).acos())
}

/// `gamma R v theta exp(-beta theta)` with `R` the quarter turn about
/// `(o - x) x v`. Degenerate geometry (no relative motion, velocity
/// parallel to the obstacle direction) gives zero.
pub fn steering_phi(
    x: &Vector,
    v: &Vector,
    obs: &PointObstacle,
    gamma: f64,
    beta: f64,
) -> Result<Vector> {
    let d = x.len();
    if d != 2 && d != 3 {
        return Err(Error::Dimension(format!(
            "the steering-angle method needs 2 or 3 dimensions, got {d}"
        )));
    }
    let Some(angle) = steering_angle(x, v, obs) else {
        return Ok(Vector::zeros(d));
    };
    let r = &obs.position - x;
    let scale = gamma * angle * (-beta * angle).exp();
    let tol = 1e-12 * r.norm() * v.norm();
    let rotated = if d == 2 {
        let cross = r[0] * v[1] - r[1] * v[0];
        if cross.abs() <= tol {
            return Ok(Vector::zeros(d));
        }
        let sign = cross.signum();
        Vector::from_column_slice(&[-sign * v[1], sign * v[0]])
    } else {
        let r3 = Vector3::new(r[0], r[1], r[2]);
        let v3 = Vector3::new(v[0], v[1], v[2]);
        let axis = r3.cross(&v3);
        let norm = axis.norm();
        if norm <= tol {
            return Ok(Vector::zeros(d));
        }
        // v is orthogonal to the axis, so the quarter turn is axis x v
        let turned = (axis / norm).cross(&v3);
        Vector::from_column_slice(turned.as_slice())
    };
    Ok(rotated * scale)
}

fn exterior_isopotential(x: &Vector, sq: &Superquadric) -> Result<f64> {
    let c = sq.isopotential(x);
    if !(c > 0.0) {
        return Err(Error::InsideObstacle { c });
    }
    Ok(c)
}

/// `U_S(x) = A exp(-eta C) / C`.
pub fn static_volume_potential(
    x: &Vector,
    sq: &Superquadric,
    amplitude: f64,
    eta: f64,
) -> Result<f64> {
    let c = exterior_isopotential(x, sq)?;
    Ok(amplitude * (-eta * c).exp() / c)
}

/// `-grad U_S = A exp(-eta C) (eta C + 1) / C^2 grad C`.
pub fn static_volume_phi(
    x: &Vector,
    sq: &Superquadric,
    amplitude: f64,
    eta: f64,
) -> Result<Vector> {
    let c = exterior_isopotential(x, sq)?;
    let scale = amplitude * (-eta * c).exp() * (eta * c + 1.0) / (c * c);
    Ok(sq.gradient(x) * scale)
}

/// `cos theta` between the isopotential gradient and the relative velocity;
/// `None` when the relative velocity vanishes.
pub fn volume_cos_theta(x: &Vector, v: &Vector, sq: &Superquadric) -> Result<Option<f64>> {
    let u = v - sq.velocity();
    let speed = u.norm();
    if speed < MIN_SPEED {
        return Ok(None);
    }
    let grad = sq.gradient(x);
    let gn = grad.norm();
    if gn < 1e-12 {
        return Err(Error::Singularity(format!(
            "isopotential gradient vanishes (|grad C| = {gn:e})"
        )));
    }
    Ok(Some(grad.dot(&u) / (gn * speed)))
}

/// `U_D(x, v)`.
pub fn dynamic_volume_potential(
    x: &Vector,
    v: &Vector,
    sq: &Superquadric,
    lambda: f64,
    beta: f64,
    eta: f64,
) -> Result<f64> {
    let c = exterior_isopotential(x, sq)?;
    let speed = (v - sq.velocity()).norm();
    match volume_cos_theta(x, v, sq)? {
        Some(cos) if cos < 0.0 => Ok(lambda * (-cos).powf(beta) * speed / c.powf(eta)),
        _ => Ok(0.0),
    }
}

/// How `grad_x cos theta` is obtained for the dynamic volumetric potential.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CosGradient {
    /// From the analytic gradient and Hessian of the isopotential.
    #[default]
    Analytic,
    /// Central differences of `cos theta` with step `1e-7 * scale`.
    FiniteDifference,
}

/// `-grad_x U_D` at fixed velocity:
///
/// ```text
/// phi = -(lambda |u| (-cos)^(beta-1) / C^eta) (-beta grad cos + eta cos / C grad C)
/// grad cos = (|grad C| H u - <grad C, u> grad |grad C|) / (|u| |grad C|^2)
/// ```
pub fn dynamic_volume_phi(
    x: &Vector,
    v: &Vector,
    sq: &Superquadric,
    lambda: f64,
    beta: f64,
    eta: f64,
    mode: CosGradient,
) -> Result<Vector> {
    let c = exterior_isopotential(x, sq)?;
    let u = v - sq.velocity();
    let speed = u.norm();
    if speed < MIN_SPEED {
        return Ok(Vector::zeros(x.len()));
    }
    let grad = sq.gradient(x);
    let gn = grad.norm();
    if gn < 1e-12 {
        return Err(Error::Singularity(format!(
            "isopotential gradient vanishes (|grad C| = {gn:e})"
        )));
    }
    let gu = grad.dot(&u);
    let cos = gu / (gn * speed);
    if cos >= 0.0 {
        return Ok(Vector::zeros(x.len()));
    }
    let grad_cos = match mode {
        CosGradient::Analytic => {
            let hessian = sq.hessian(x);
            let hu = &hessian * &u;
            let grad_norm = &hessian * &grad / gn;
            (hu * gn - grad_norm * gu) / (speed * gn * gn)
        }
        CosGradient::FiniteDifference => fd_cos_gradient(x, &u, sq)?,
    };
    let neg = -cos;
    let scale = lambda * speed * neg.powf(beta - 1.0) / c.powf(eta);
    Ok((grad_cos * beta - grad * (eta * cos / c)) * scale)
}

fn fd_cos_gradient(x: &Vector, u: &Vector, sq: &Superquadric) -> Result<Vector> {
    let h = 1e-7 * sq.scale();
    let speed = u.norm();
    let cos_at = |y: &Vector| -> Result<f64> {
        let g = sq.gradient(y);
        let gn = g.norm();
        if gn < 1e-12 {
            return Err(Error::Singularity("isopotential gradient vanishes".into()));
        }
        Ok(g.dot(u) / (gn * speed))
    };
    let mut out = Vector::zeros(x.len());
    for i in 0..x.len() {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[i] += h;
        xm[i] -= h;
        out[i] = (cos_at(&xp)? - cos_at(&xm)?) / (2.0 * h);
    }
    Ok(out)
}

/// An obstacle as seen by one field term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Obstacle {
    Point(PointObstacle),
    /// Point cloud; contributes one term per point.
    Cloud(Vec<PointObstacle>),
    Volume(Superquadric),
}

impl Obstacle {
    pub fn dims(&self) -> Option<usize> {
        match self {
            Obstacle::Point(p) => Some(p.position.len()),
            Obstacle::Cloud(ps) => ps.first().map(|p| p.position.len()),
            Obstacle::Volume(sq) => Some(sq.dims()),
        }
    }

    /// Clearance: the isopotential for a volume, the smallest distance for
    /// points.
    pub fn clearance(&self, x: &Vector) -> f64 {
        match self {
            Obstacle::Point(p) => p.distance(x),
            Obstacle::Cloud(ps) => ps
                .iter()
                .map(|p| p.distance(x))
                .fold(f64::INFINITY, f64::min),
            Obstacle::Volume(sq) => sq.isopotential(x),
        }
    }

    pub fn at_time(&self, t: f64) -> Obstacle {
        match self {
            Obstacle::Point(p) => Obstacle::Point(p.at_time(t)),
            Obstacle::Cloud(ps) => Obstacle::Cloud(ps.iter().map(|p| p.at_time(t)).collect()),
            Obstacle::Volume(sq) => Obstacle::Volume(sq.at_time(t)),
        }
    }

    fn is_static(&self) -> bool {
        match self {
            Obstacle::Point(p) => p.velocity.iter().all(|v| *v == 0.0),
            Obstacle::Cloud(ps) => ps.iter().all(|p| p.velocity.iter().all(|v| *v == 0.0)),
            Obstacle::Volume(sq) => sq.is_static(),
        }
    }
}

fn point_term(
    method: &AvoidanceMethod,
    x: &Vector,
    v: &Vector,
    obs: &PointObstacle,
) -> Result<Vector> {
    check_dims(x, v, obs.position.len())?;
    match *method {
        AvoidanceMethod::StaticPoint { eta, p0 } => static_point_phi(x, obs, eta, p0),
        AvoidanceMethod::DynamicPoint { lambda, beta } => {
            dynamic_point_phi(x, v, obs, lambda, beta)
        }
        AvoidanceMethod::SteeringAngle { gamma, beta } => steering_phi(x, v, obs, gamma, beta),
        _ => unreachable!("volume method paired with a point obstacle"),
    }
}

impl AvoidanceMethod {
    /// Perturbation from one obstacle. Point methods need point obstacles or
    /// clouds, volume methods need superquadrics.
    pub fn phi(
        &self,
        x: &Vector,
        v: &Vector,
        obstacle: &Obstacle,
        mode: CosGradient,
    ) -> Result<Vector> {
        self.check_pairing(obstacle)?;
        match (obstacle, *self) {
            (Obstacle::Point(p), _) => point_term(self, x, v, p),
            (Obstacle::Cloud(ps), _) => {
                let mut total = Vector::zeros(x.len());
                for p in ps {
                    total += point_term(self, x, v, p)?;
                }
                Ok(total)
            }
            (Obstacle::Volume(sq), AvoidanceMethod::StaticVolume { amplitude, eta }) => {
                check_dims(x, v, sq.dims())?;
                static_volume_phi(x, sq, amplitude, eta)
            }
            (Obstacle::Volume(sq), AvoidanceMethod::DynamicVolume { lambda, beta, eta }) => {
                check_dims(x, v, sq.dims())?;
                dynamic_volume_phi(x, v, sq, lambda, beta, eta, mode)
            }
            (Obstacle::Volume(_), _) => unreachable!("pairing checked above"),
        }
    }

    fn check_pairing(&self, obstacle: &Obstacle) -> Result<()> {
        let ok = match obstacle {
            Obstacle::Point(_) | Obstacle::Cloud(_) => self.is_point_method(),
            Obstacle::Volume(_) => !self.is_point_method(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "{} cannot act on a {} obstacle",
                self.name(),
                match obstacle {
                    Obstacle::Volume(_) => "volumetric",
                    _ => "point",
                }
            )))
        }
    }
}

/// One method acting on one obstacle.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldTerm {
    pub method: AvoidanceMethod,
    pub obstacle: Obstacle,
}

/// Sum of several method/obstacle perturbations. Obstacles with a velocity
/// are advanced to the evaluation time before each evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct ComposedField {
    terms: Vec<FieldTerm>,
    dims: usize,
    cos_gradient: CosGradient,
}

impl ComposedField {
    pub fn new(members: Vec<(AvoidanceMethod, Obstacle)>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::invalid("a composed field needs at least one member"));
        }
        let mut dims = None;
        let mut terms = Vec::with_capacity(members.len());
        for (method, obstacle) in members {
            method.validate()?;
            method.check_pairing(&obstacle)?;
            let d = obstacle
                .dims()
                .ok_or_else(|| Error::invalid("empty point cloud"))?;
            if let Obstacle::Cloud(ps) = &obstacle {
                if ps.iter().any(|p| p.position.len() != d) {
                    return Err(Error::Dimension("point cloud mixes dimensions".into()));
                }
            }
            if matches!(method, AvoidanceMethod::SteeringAngle { .. }) && d != 2 && d != 3 {
                return Err(Error::Dimension(format!(
                    "the steering-angle method needs 2 or 3 dimensions, got {d}"
                )));
            }
            match dims {
                None => dims = Some(d),
                Some(prev) if prev != d => {
                    return Err(Error::Dimension(format!(
                        "field members mix {prev}- and {d}-dimensional obstacles"
                    )))
                }
                _ => {}
            }
            terms.push(FieldTerm { method, obstacle });
        }
        Ok(Self {
            terms,
            dims: dims.expect("nonempty"),
            cos_gradient: CosGradient::Analytic,
        })
    }

    pub fn with_cos_gradient(mut self, mode: CosGradient) -> Self {
        self.cos_gradient = mode;
        self
    }

    pub fn terms(&self) -> &[FieldTerm] {
        &self.terms
    }

    pub fn dims(&self) -> usize {
        self.dims
    }
}

impl PerturbationField for ComposedField {
    fn phi(&self, x: &Vector, xdot: &Vector, t: f64) -> Result<Vector> {
        let mut total = Vector::zeros(x.len());
        for term in &self.terms {
            let phi = if term.obstacle.is_static() {
                term.method
                    .phi(x, xdot, &term.obstacle, self.cos_gradient)?
            } else {
                term.method
                    .phi(x, xdot, &term.obstacle.at_time(t), self.cos_gradient)?
            };
            total += phi;
        }
        Ok(total)
    }
}
