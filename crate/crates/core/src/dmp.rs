//! The transformation system
//!
//! ```text
//! tau * dv/dt = K (g - x) - D v - K (g - x0) s + K f(s) + phi(x, xdot, t)
//! tau * dx/dt = v
//! ```
//!
//! together with learning its forcing weights from one demonstration and
//! integrating it forward with explicit Euler steps.
//!
//! `v` is the scaled velocity `tau * xdot`. Perturbation fields receive the
//! world-time velocity `xdot = v / tau`, which is what relative obstacle
//! velocities are measured against.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::basis::BasisSet;
use crate::error::{Error, Result};
use crate::phase::{CanonicalSystem, DEFAULT_ALPHA};

pub type Vector = DVector<f64>;

pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_DIVERGENCE_BOUND: f64 = 1e6;
const DEFAULT_RIDGE_PER_SAMPLE: f64 = 1e-10;

/// Repulsive acceleration added to the transformation system.
///
/// Implementations must be re-entrant: one field may be shared by several
/// concurrent rollouts.
pub trait PerturbationField: Sync {
    /// Perturbation at position `x`, world-time velocity `xdot`, time `t`.
    fn phi(&self, x: &Vector, xdot: &Vector, t: f64) -> Result<Vector>;
}

impl<F> PerturbationField for F
where
    F: Fn(&Vector, &Vector, f64) -> Result<Vector> + Sync,
{
    fn phi(&self, x: &Vector, xdot: &Vector, t: f64) -> Result<Vector> {
        self(x, xdot, t)
    }
}

/// Time-stamped positions, velocities and accelerations, all in world time.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    times: Vec<f64>,
    positions: Vec<Vector>,
    velocities: Vec<Vector>,
    accelerations: Vec<Vector>,
}

impl Trajectory {
    pub fn new(
        times: Vec<f64>,
        positions: Vec<Vector>,
        velocities: Vec<Vector>,
        accelerations: Vec<Vector>,
    ) -> Result<Self> {
        check_times(&times)?;
        let m = times.len();
        if positions.len() != m || velocities.len() != m || accelerations.len() != m {
            return Err(Error::Dimension(format!(
                "trajectory arrays disagree: {m} times, {} positions, {} velocities, {} accelerations",
                positions.len(),
                velocities.len(),
                accelerations.len()
            )));
        }
        let d = positions[0].len();
        if d == 0 {
            return Err(Error::Dimension(
                "trajectory has zero-dimensional samples".into(),
            ));
        }
        let consistent = positions
            .iter()
            .chain(&velocities)
            .chain(&accelerations)
            .all(|p| p.len() == d);
        if !consistent {
            return Err(Error::Dimension(format!(
                "trajectory samples are not all {d}-dimensional"
            )));
        }
        Ok(Self {
            times,
            positions,
            velocities,
            accelerations,
        })
    }

    /// Builds a trajectory from positions only, filling velocities and
    /// accelerations with finite differences (central inside, one-sided at
    /// the ends). Time stamps may be non-uniform.
    pub fn from_positions(times: Vec<f64>, positions: Vec<Vector>) -> Result<Self> {
        check_times(&times)?;
        if positions.len() != times.len() {
            return Err(Error::Dimension(format!(
                "{} times but {} positions",
                times.len(),
                positions.len()
            )));
        }
        let velocities = differentiate(&times, &positions);
        let accelerations = differentiate(&times, &velocities);
        Self::new(times, positions, velocities, accelerations)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dims(&self) -> usize {
        self.positions[0].len()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn positions(&self) -> &[Vector] {
        &self.positions
    }

    pub fn velocities(&self) -> &[Vector] {
        &self.velocities
    }

    pub fn accelerations(&self) -> &[Vector] {
        &self.accelerations
    }

    pub fn duration(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    pub fn first_position(&self) -> &Vector {
        &self.positions[0]
    }

    pub fn last_position(&self) -> &Vector {
        &self.positions[self.positions.len() - 1]
    }

    /// Index `k` and weight `w` such that the value at `t` is
    /// `(1 - w) * a[k] + w * a[k + 1]`; clamps outside the time range.
    pub(crate) fn locate(&self, t: f64) -> (usize, f64) {
        let m = self.times.len();
        if t <= self.times[0] {
            return (0, 0.0);
        }
        if t >= self.times[m - 1] {
            return (m - 2, 1.0);
        }
        let k = self.times.partition_point(|&tk| tk <= t) - 1;
        let k = k.min(m - 2);
        let w = (t - self.times[k]) / (self.times[k + 1] - self.times[k]);
        (k, w)
    }

    pub fn position_at(&self, t: f64) -> Vector {
        let (k, w) = self.locate(t);
        lerp(&self.positions[k], &self.positions[k + 1], w)
    }

    pub fn acceleration_at(&self, t: f64) -> Vector {
        let (k, w) = self.locate(t);
        lerp(&self.accelerations[k], &self.accelerations[k + 1], w)
    }
}

pub(crate) fn lerp(a: &Vector, b: &Vector, w: f64) -> Vector {
    if w == 0.0 {
        a.clone()
    } else if w == 1.0 {
        b.clone()
    } else {
        a * (1.0 - w) + b * w
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.len() < 2 {
        return Err(Error::invalid(format!(
            "a trajectory needs at least 2 samples, got {}",
            times.len()
        )));
    }
    if times[0] != 0.0 {
        return Err(Error::invalid(format!(
            "trajectory must start at t = 0, got {}",
            times[0]
        )));
    }
    if let Some(w) = times
        .windows(2)
        .find(|w| !(w[1] > w[0]) || !w[1].is_finite())
    {
        return Err(Error::invalid(format!(
            "trajectory times must be strictly increasing: {} then {}",
            w[0], w[1]
        )));
    }
    Ok(())
}

/// Second-order central differences on a possibly non-uniform grid,
/// first-order one-sided differences at the two ends.
pub(crate) fn differentiate(times: &[f64], values: &[Vector]) -> Vec<Vector> {
    let m = times.len();
    (0..m)
        .map(|i| {
            if i == 0 {
                (&values[1] - &values[0]) / (times[1] - times[0])
            } else if i == m - 1 {
                (&values[m - 1] - &values[m - 2]) / (times[m - 1] - times[m - 2])
            } else {
                let hm = times[i] - times[i - 1];
                let hp = times[i + 1] - times[i];
                (&values[i + 1] * (hm * hm) - &values[i - 1] * (hp * hp)
                    + &values[i] * (hp * hp - hm * hm))
                    / (hm * hp * (hm + hp))
            }
        })
        .collect()
}

/// Settings for [`Dmp::learn`].
#[derive(Debug, Clone, PartialEq)]
pub struct LearnConfig {
    /// Diagonal of `K`; a single entry is broadcast to every dimension.
    pub elastic: Vec<f64>,
    /// Diagonal of `D`; defaults to critical damping `2 sqrt(K)`.
    pub damping: Option<Vec<f64>>,
    pub alpha: f64,
    pub n_basis: usize,
    /// Ridge term added to the normal equations; defaults to `1e-10 * M`.
    pub regularization: Option<f64>,
}

impl LearnConfig {
    pub fn new(elastic: f64, n_basis: usize) -> Self {
        Self {
            elastic: vec![elastic],
            damping: None,
            alpha: DEFAULT_ALPHA,
            n_basis,
            regularization: None,
        }
    }
}

/// Integration settings for [`Dmp::rollout`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RolloutConfig {
    pub dt: f64,
    pub horizon: f64,
    /// Abort once `|x|` exceeds this.
    pub divergence_bound: f64,
}

impl RolloutConfig {
    pub fn new(dt: f64, horizon: f64) -> Self {
        Self {
            dt,
            horizon,
            divergence_bound: DEFAULT_DIVERGENCE_BOUND,
        }
    }

    pub(crate) fn steps(&self) -> Result<usize> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid(format!(
                "time step must be positive, got {}",
                self.dt
            )));
        }
        if !(self.horizon >= self.dt && self.horizon.is_finite()) {
            return Err(Error::invalid(format!(
                "horizon {} must be at least one time step ({})",
                self.horizon, self.dt
            )));
        }
        if !(self.divergence_bound > 0.0) {
            return Err(Error::invalid("divergence bound must be positive"));
        }
        Ok((self.horizon / self.dt).round() as usize)
    }
}

/// A learned movement primitive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DmpParts")]
pub struct Dmp {
    elastic: Vec<f64>,
    damping: Vec<f64>,
    tau: f64,
    alpha: f64,
    basis: BasisSet,
    /// One row of `N + 1` weights per dimension.
    weights: Vec<Vec<f64>>,
    demo_duration: f64,
    start: Vec<f64>,
    goal: Vec<f64>,
}

/// Parts of a [`Dmp`] for construction without a demonstration.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DmpParts {
    pub elastic: Vec<f64>,
    #[serde(default)]
    pub damping: Option<Vec<f64>>,
    pub tau: f64,
    pub alpha: f64,
    pub basis: BasisSet,
    pub weights: Vec<Vec<f64>>,
    pub demo_duration: f64,
    pub start: Vec<f64>,
    pub goal: Vec<f64>,
}

fn broadcast(name: &str, values: &[f64], dims: usize) -> Result<Vec<f64>> {
    let out = match values.len() {
        1 => vec![values[0]; dims],
        n if n == dims => values.to_vec(),
        n => {
            return Err(Error::Dimension(format!(
                "{name} has {n} entries for a {dims}-dimensional primitive"
            )))
        }
    };
    if let Some(bad) = out.iter().find(|k| !(**k > 0.0 && k.is_finite())) {
        return Err(Error::invalid(format!(
            "{name} entries must be positive, got {bad}"
        )));
    }
    Ok(out)
}

pub fn critical_damping(elastic: &[f64]) -> Vec<f64> {
    elastic.iter().map(|k| 2.0 * k.sqrt()).collect()
}

impl TryFrom<DmpParts> for Dmp {
    type Error = Error;

    fn try_from(parts: DmpParts) -> Result<Self> {
        Self::from_parts(parts)
    }
}

impl Dmp {
    pub fn from_parts(parts: DmpParts) -> Result<Self> {
        let dims = parts.start.len();
        if dims == 0 || parts.goal.len() != dims {
            return Err(Error::Dimension(format!(
                "start has {} entries, goal has {}",
                dims,
                parts.goal.len()
            )));
        }
        let elastic = broadcast("elastic gain", &parts.elastic, dims)?;
        let damping = match parts.damping {
            Some(d) => broadcast("damping gain", &d, dims)?,
            None => critical_damping(&elastic),
        };
        CanonicalSystem::new(parts.alpha, parts.tau)?;
        if !(parts.demo_duration > 0.0 && parts.demo_duration.is_finite()) {
            return Err(Error::invalid("demonstration duration must be positive"));
        }
        if parts.weights.len() != dims
            || parts
                .weights
                .iter()
                .any(|row| row.len() != parts.basis.len())
        {
            return Err(Error::Dimension(format!(
                "weights must be {dims} rows of {} entries",
                parts.basis.len()
            )));
        }
        if parts.weights.iter().flatten().any(|w| !w.is_finite()) {
            return Err(Error::invalid("weights must be finite"));
        }
        if parts
            .start
            .iter()
            .chain(&parts.goal)
            .any(|v| !v.is_finite())
        {
            return Err(Error::invalid("start and goal must be finite"));
        }
        Ok(Self {
            elastic,
            damping,
            tau: parts.tau,
            alpha: parts.alpha,
            basis: parts.basis,
            weights: parts.weights,
            demo_duration: parts.demo_duration,
            start: parts.start,
            goal: parts.goal,
        })
    }

    /// A primitive with null forcing term: a straight, critically damped
    /// approach from `start` to `goal`.
    pub fn with_zero_weights(
        start: &[f64],
        goal: &[f64],
        elastic: f64,
        alpha: f64,
        n_basis: usize,
        tau: f64,
    ) -> Result<Self> {
        let basis = BasisSet::new(n_basis, alpha, 1.0)?;
        Self::from_parts(DmpParts {
            elastic: vec![elastic],
            damping: None,
            tau,
            alpha,
            weights: vec![vec![0.0; basis.len()]; start.len()],
            basis,
            demo_duration: tau,
            start: start.to_vec(),
            goal: goal.to_vec(),
        })
    }

    /// Fits the forcing weights to a single demonstration.
    ///
    /// Start, goal, duration and `tau` are taken from the demonstration. The
    /// desired forcing term at each sample is obtained by solving the
    /// transformation system for `f`, and each dimension's weights minimise
    /// the ridge-regularised squared residual.
    pub fn learn(demo: &Trajectory, config: &LearnConfig) -> Result<Self> {
        let m = demo.len();
        if m < 3 {
            return Err(Error::invalid(format!(
                "demonstration needs at least 3 samples, got {m}"
            )));
        }
        let duration = demo.duration();
        if !(duration > 0.0) {
            return Err(Error::invalid("demonstration has zero duration"));
        }
        let dims = demo.dims();
        let elastic = broadcast("elastic gain", &config.elastic, dims)?;
        let damping = match &config.damping {
            Some(d) => broadcast("damping gain", d, dims)?,
            None => critical_damping(&elastic),
        };
        let tau = duration;
        let cs = CanonicalSystem::new(config.alpha, tau)?;
        // centers follow the phase over t / tau in [0, 1]
        let basis = BasisSet::new(config.n_basis, config.alpha, duration / tau)?;
        let ridge = config
            .regularization
            .unwrap_or(DEFAULT_RIDGE_PER_SAMPLE * m as f64);
        if !(ridge >= 0.0 && ridge.is_finite()) {
            return Err(Error::invalid(format!(
                "regularization must be nonnegative, got {ridge}"
            )));
        }

        let x0 = demo.first_position();
        let g = demo.last_position();
        let nb = basis.len();
        let mut design = DMatrix::<f64>::zeros(m, nb);
        let mut target = DMatrix::<f64>::zeros(m, dims);
        for (k, &t) in demo.times().iter().enumerate() {
            let s = cs.phase_at(t);
            let row = basis.regressor(s)?;
            for (j, r) in row.into_iter().enumerate() {
                design[(k, j)] = r;
            }
            let x = &demo.positions()[k];
            let xd = &demo.velocities()[k];
            let xdd = &demo.accelerations()[k];
            for p in 0..dims {
                let accel_term = tau * tau * xdd[p] + damping[p] * tau * xd[p];
                target[(k, p)] = accel_term / elastic[p] - (g[p] - x[p]) + (g[p] - x0[p]) * s;
            }
        }

        let mut normal = design.transpose() * &design;
        for j in 0..nb {
            normal[(j, j)] += ridge;
        }
        let rhs = design.transpose() * &target;
        let solution = match normal.clone().cholesky() {
            Some(ch) => ch.solve(&rhs),
            None => normal
                .svd(true, true)
                .solve(&rhs, 1e-14)
                .map_err(|e| Error::Singularity(format!("forcing-term regression: {e}")))?,
        };
        let weights: Vec<Vec<f64>> = (0..dims)
            .map(|p| solution.column(p).iter().copied().collect())
            .collect();

        Self::from_parts(DmpParts {
            elastic,
            damping: Some(damping),
            tau,
            alpha: config.alpha,
            basis,
            weights,
            demo_duration: duration,
            start: x0.iter().copied().collect(),
            goal: g.iter().copied().collect(),
        })
    }

    pub fn dims(&self) -> usize {
        self.start.len()
    }

    pub fn elastic(&self) -> &[f64] {
        &self.elastic
    }

    pub fn damping(&self) -> &[f64] {
        &self.damping
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn basis(&self) -> &BasisSet {
        &self.basis
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn demo_duration(&self) -> f64 {
        self.demo_duration
    }

    pub fn start(&self) -> Vector {
        Vector::from_column_slice(&self.start)
    }

    pub fn goal(&self) -> Vector {
        Vector::from_column_slice(&self.goal)
    }

    pub fn canonical_system(&self) -> CanonicalSystem {
        CanonicalSystem::new(self.alpha, self.tau).expect("validated at construction")
    }

    /// Copy executing at a different speed; `tau` larger is slower.
    pub fn with_tau(&self, tau: f64) -> Result<Self> {
        CanonicalSystem::new(self.alpha, tau)?;
        Ok(Self {
            tau,
            ..self.clone()
        })
    }

    /// Copy with every damping gain replaced.
    pub fn with_damping(&self, damping: &[f64]) -> Result<Self> {
        let damping = broadcast("damping gain", damping, self.dims())?;
        Ok(Self {
            damping,
            ..self.clone()
        })
    }

    /// Forcing vector `f(s)`.
    pub fn forcing(&self, s: f64) -> Result<Vector> {
        let psi = self.basis.eval(s);
        let total: f64 = psi.iter().sum();
        if !(total >= f64::MIN_POSITIVE) {
            return Err(Error::DegenerateNormalization { s });
        }
        let scale = s / total;
        Ok(Vector::from_iterator(
            self.dims(),
            self.weights
                .iter()
                .map(|row| row.iter().zip(&psi).map(|(w, p)| w * p).sum::<f64>() * scale),
        ))
    }

    /// `dv/dt` of the transformation system for scaled velocity `v`.
    pub(crate) fn scaled_acceleration(
        &self,
        x: &Vector,
        v: &Vector,
        start: &Vector,
        goal: &Vector,
        s: f64,
        phi: Option<&Vector>,
    ) -> Result<Vector> {
        let f = self.forcing(s)?;
        let mut acc = Vector::from_fn(self.dims(), |p, _| {
            let k = self.elastic[p];
            k * (goal[p] - x[p]) - self.damping[p] * v[p] - k * (goal[p] - start[p]) * s + k * f[p]
        });
        if let Some(phi) = phi {
            acc += phi;
        }
        acc /= self.tau;
        Ok(acc)
    }

    /// Integrates the perturbed system from rest at `start` towards `goal`.
    ///
    /// Samples are recorded at `t_k = k dt` for `k = 0..=round(horizon/dt)`,
    /// each with the world-time velocity and acceleration that drive the
    /// step out of it.
    pub fn rollout(
        &self,
        start: &Vector,
        goal: &Vector,
        config: &RolloutConfig,
        field: Option<&dyn PerturbationField>,
    ) -> Result<Trajectory> {
        let dims = self.dims();
        if start.len() != dims || goal.len() != dims {
            return Err(Error::Dimension(format!(
                "start/goal of length {}/{} for a {dims}-dimensional primitive",
                start.len(),
                goal.len()
            )));
        }
        let steps = config.steps()?;
        let cs = self.canonical_system();
        let mut stepper = Stepper::new(self, start.clone(), goal.clone());
        let mut rec = Recorder::with_capacity(steps + 1);
        for k in 0..=steps {
            let t = k as f64 * config.dt;
            let s = cs.phase_at(t);
            let xdot = stepper.world_velocity();
            let phi = match field {
                Some(f) => Some(f.phi(&stepper.x, &xdot, t).map_err(|e| e.at_time(t))?),
                None => None,
            };
            let vdot = stepper
                .acceleration(s, phi.as_ref())
                .map_err(|e| e.at_time(t))?;
            rec.push(t, &stepper.x, xdot, &vdot / self.tau);
            if k < steps {
                stepper.advance(&vdot, config.dt);
                stepper.check(t + config.dt, config.divergence_bound)?;
            }
        }
        rec.finish()
    }
}

/// Explicit-Euler state of one primitive.
#[derive(Debug, Clone)]
pub(crate) struct Stepper<'a> {
    dmp: &'a Dmp,
    start: Vector,
    goal: Vector,
    pub(crate) x: Vector,
    /// Scaled velocity `tau * xdot`.
    pub(crate) v: Vector,
}

impl<'a> Stepper<'a> {
    pub(crate) fn new(dmp: &'a Dmp, start: Vector, goal: Vector) -> Self {
        let dims = start.len();
        Self {
            dmp,
            x: start.clone(),
            v: Vector::zeros(dims),
            start,
            goal,
        }
    }

    pub(crate) fn world_velocity(&self) -> Vector {
        &self.v / self.dmp.tau
    }

    pub(crate) fn acceleration(&self, s: f64, phi: Option<&Vector>) -> Result<Vector> {
        self.dmp
            .scaled_acceleration(&self.x, &self.v, &self.start, &self.goal, s, phi)
    }

    pub(crate) fn advance(&mut self, vdot: &Vector, dt: f64) {
        let h = dt / self.dmp.tau;
        self.x.axpy(h, &self.v, 1.0);
        self.v.axpy(dt, vdot, 1.0);
    }

    pub(crate) fn check(&self, t: f64, bound: f64) -> Result<()> {
        let norm = self.x.norm();
        if !(norm <= bound) || !self.v.iter().all(|v| v.is_finite()) {
            return Err(Error::Divergence { t, norm, bound });
        }
        Ok(())
    }
}

#[derive(Debug, Default)]
pub(crate) struct Recorder {
    times: Vec<f64>,
    positions: Vec<Vector>,
    velocities: Vec<Vector>,
    accelerations: Vec<Vector>,
}

impl Recorder {
    pub(crate) fn with_capacity(n: usize) -> Self {
        Self {
            times: Vec::with_capacity(n),
            positions: Vec::with_capacity(n),
            velocities: Vec::with_capacity(n),
            accelerations: Vec::with_capacity(n),
        }
    }

    pub(crate) fn push(&mut self, t: f64, x: &Vector, xdot: Vector, xddot: Vector) {
        self.times.push(t);
        self.positions.push(x.clone());
        self.velocities.push(xdot);
        self.accelerations.push(xddot);
    }

    pub(crate) fn finish(self) -> Result<Trajectory> {
        Trajectory::new(
            self.times,
            self.positions,
            self.velocities,
            self.accelerations,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_demo(dims: usize) -> Trajectory {
        let times: Vec<f64> = (0..=100).map(|k| k as f64 * 0.01).collect();
        let positions = times
            .iter()
            .map(|t| Vector::from_fn(dims, |p, _| (p + 1) as f64 * t * t))
            .collect();
        Trajectory::from_positions(times, positions).unwrap()
    }

    #[test]
    fn trajectory_rejects_bad_time_stamps() {
        let p = vec![Vector::zeros(2); 3];
        assert!(Trajectory::from_positions(vec![0.1, 0.2, 0.3], p.clone()).is_err());
        assert!(Trajectory::from_positions(vec![0.0, 0.2, 0.2], p.clone()).is_err());
        assert!(Trajectory::from_positions(vec![0.0], vec![Vector::zeros(2)]).is_err());
        assert!(Trajectory::from_positions(vec![0.0, 0.1], p).is_err());
    }

    #[test]
    fn finite_differences_are_exact_for_quadratics_on_uneven_grids() {
        let times = vec![0.0, 0.1, 0.25, 0.3, 0.6];
        let positions = times
            .iter()
            .map(|t| Vector::from_element(1, 3.0 * t * t))
            .collect();
        let traj = Trajectory::from_positions(times.clone(), positions).unwrap();
        for i in 1..times.len() - 1 {
            assert!((traj.velocities()[i][0] - 6.0 * times[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn learning_needs_three_samples() {
        let traj = Trajectory::from_positions(
            vec![0.0, 1.0],
            vec![Vector::zeros(1), Vector::from_element(1, 1.0)],
        )
        .unwrap();
        assert!(matches!(
            Dmp::learn(&traj, &LearnConfig::new(100.0, 5)),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn learned_primitive_takes_endpoints_from_demo() {
        let demo = line_demo(3);
        let dmp = Dmp::learn(&demo, &LearnConfig::new(1050.0, 20)).unwrap();
        assert_eq!(dmp.dims(), 3);
        assert_eq!(dmp.tau(), demo.duration());
        assert_eq!(dmp.start(), *demo.first_position());
        assert_eq!(dmp.goal(), *demo.last_position());
        let expected = 2.0 * 1050f64.sqrt();
        assert!(dmp.damping().iter().all(|d| (*d - expected).abs() < 1e-12));
    }

    #[test]
    fn damping_override_is_kept() {
        let demo = line_demo(2);
        let mut cfg = LearnConfig::new(3050.0, 10);
        cfg.damping = Some(vec![3050f64.sqrt()]);
        let dmp = Dmp::learn(&demo, &cfg).unwrap();
        assert_eq!(dmp.damping(), &[3050f64.sqrt(); 2]);
        assert!(Dmp::learn(
            &demo,
            &LearnConfig {
                elastic: vec![-1.0],
                ..cfg
            }
        )
        .is_err());
    }

    #[test]
    fn unforced_rollout_reaches_goal() {
        let dmp = Dmp::with_zero_weights(&[0.0, 0.0], &[1.0, -2.0], 1050.0, 4.0, 10, 1.0).unwrap();
        let traj = dmp
            .rollout(
                &dmp.start(),
                &dmp.goal(),
                &RolloutConfig::new(1e-3, 3.0),
                None,
            )
            .unwrap();
        assert_eq!(traj.len(), 3001);
        assert!((traj.last_position() - dmp.goal()).norm() <= 1e-3);
    }

    #[test]
    fn rollout_validates_configuration() {
        let dmp = Dmp::with_zero_weights(&[0.0], &[1.0], 100.0, 4.0, 5, 1.0).unwrap();
        let (x0, g) = (dmp.start(), dmp.goal());
        assert!(dmp
            .rollout(&x0, &g, &RolloutConfig::new(0.0, 1.0), None)
            .is_err());
        assert!(dmp
            .rollout(&x0, &g, &RolloutConfig::new(0.1, 0.01), None)
            .is_err());
        assert!(matches!(
            dmp.rollout(&Vector::zeros(2), &g, &RolloutConfig::new(0.1, 1.0), None),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn divergence_is_reported() {
        let dmp = Dmp::with_zero_weights(&[0.0], &[1.0], 100.0, 4.0, 5, 1.0).unwrap();
        let push = |_: &Vector, _: &Vector, _: f64| -> Result<Vector> {
            Ok(Vector::from_element(1, 1e12))
        };
        let err = dmp
            .rollout(
                &dmp.start(),
                &dmp.goal(),
                &RolloutConfig::new(1e-3, 1.0),
                Some(&push),
            )
            .unwrap_err();
        assert!(matches!(err, Error::Divergence { .. }), "{err}");
    }

    #[test]
    fn field_errors_carry_the_time() {
        let dmp = Dmp::with_zero_weights(&[0.0], &[1.0], 100.0, 4.0, 5, 1.0).unwrap();
        let fail = |_: &Vector, _: &Vector, t: f64| -> Result<Vector> {
            if t > 0.5 {
                Err(Error::InsideObstacle { c: -0.1 })
            } else {
                Ok(Vector::zeros(1))
            }
        };
        let err = dmp
            .rollout(
                &dmp.start(),
                &dmp.goal(),
                &RolloutConfig::new(0.01, 1.0),
                Some(&fail),
            )
            .unwrap_err();
        match err {
            Error::AtTime { t, source } => {
                assert!((t - 0.51).abs() < 1e-12);
                assert!(matches!(*source, Error::InsideObstacle { .. }));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn serde_round_trip_preserves_every_field() {
        let dmp = Dmp::learn(&line_demo(2), &LearnConfig::new(500.0, 8)).unwrap();
        let json = serde_json::to_string(&dmp).unwrap();
        let back: Dmp = serde_json::from_str(&json).unwrap();
        assert_eq!(dmp, back);
    }
}
