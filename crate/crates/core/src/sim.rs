//! Several planar robots, each driven by its own primitive but all by one
//! phase, avoiding walls, boxes and each other.
//!
//! Every robot sees every other robot as a moving ellipse centered at that
//! robot, with semi-axes equal to the sum of both footprints, moving with
//! that robot's current velocity. All robots read the state of the previous
//! step, so the result does not depend on their order.

use serde::{Deserialize, Serialize};

use crate::avoidance::{AvoidanceMethod, ComposedField, CosGradient, Obstacle};
use crate::dmp::{
    Dmp, LearnConfig, PerturbationField, Recorder, RolloutConfig, Stepper, Trajectory, Vector,
    DEFAULT_DIVERGENCE_BOUND, DEFAULT_DT,
};
use crate::error::{Error, Result};
use crate::obstacles::Superquadric;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotSpec {
    pub dmp: Dmp,
    pub start: [f64; 2],
    pub goal: [f64; 2],
    /// Semi-axes of the ellipse other robots keep away from.
    pub footprint: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scene {
    pub robots: Vec<RobotSpec>,
    pub static_obstacles: Vec<(Superquadric, AvoidanceMethod)>,
    pub dt: f64,
    pub horizon: f64,
    /// Robot-to-robot field; `None` runs every robot independently.
    pub mutual_method: Option<AvoidanceMethod>,
    #[serde(default)]
    pub cos_gradient: CosGradient,
}

impl Scene {
    pub fn validate(&self) -> Result<()> {
        let first = self
            .robots
            .first()
            .ok_or_else(|| Error::invalid("a scene needs at least one robot"))?;
        RolloutConfig::new(self.dt, self.horizon).steps()?;
        let (tau, alpha) = (first.dmp.tau(), first.dmp.alpha());
        for (i, r) in self.robots.iter().enumerate() {
            if r.dmp.dims() != 2 {
                return Err(Error::Dimension(format!(
                    "robot {i} has a {}-dimensional primitive, scenes are planar",
                    r.dmp.dims()
                )));
            }
            if r.dmp.tau() != tau || r.dmp.alpha() != alpha {
                return Err(Error::invalid(format!(
                    "robot {i} has tau = {}, alpha = {} but the scene phase uses tau = {tau}, alpha = {alpha}",
                    r.dmp.tau(),
                    r.dmp.alpha()
                )));
            }
            if !r.footprint.iter().all(|f| *f > 0.0 && f.is_finite()) {
                return Err(Error::invalid(format!(
                    "robot {i} footprint must be positive"
                )));
            }
            if !r.start.iter().chain(&r.goal).all(|c| c.is_finite()) {
                return Err(Error::invalid(format!(
                    "robot {i} start/goal must be finite"
                )));
            }
            let start = Vector::from_column_slice(&r.start);
            for (k, (sq, _)) in self.static_obstacles.iter().enumerate() {
                let c = sq.isopotential(&start);
                if !(c > 0.0) {
                    return Err(Error::invalid(format!(
                        "robot {i} starts inside static obstacle {k} (C = {c})"
                    )));
                }
            }
        }
        if let Some(m) = &self.mutual_method {
            if !matches!(m, AvoidanceMethod::DynamicVolume { .. }) {
                return Err(Error::invalid(format!(
                    "robots repel each other with dynamic_volume, not {}",
                    m.name()
                )));
            }
            m.validate()?;
        }
        Ok(())
    }

    fn static_field(&self) -> Result<Option<ComposedField>> {
        if self.static_obstacles.is_empty() {
            return Ok(None);
        }
        let members = self
            .static_obstacles
            .iter()
            .map(|(sq, m)| (*m, Obstacle::Volume(sq.clone())))
            .collect();
        Ok(Some(
            ComposedField::new(members)?.with_cos_gradient(self.cos_gradient),
        ))
    }

    /// Ellipse robot `j` presents to robot `i`.
    pub fn mutual_obstacle(
        &self,
        i: usize,
        j: usize,
        center: &Vector,
        velocity: &Vector,
    ) -> Superquadric {
        let (a, b) = (&self.robots[i].footprint, &self.robots[j].footprint);
        Superquadric::ellipsoid(center.as_slice(), &[a[0] + b[0], a[1] + b[1]])
            .and_then(|sq| sq.with_velocity(velocity.as_slice()))
            .expect("validated footprints and finite states")
    }

    /// A single robot rolled out against the static obstacles alone.
    pub fn independent_rollout(&self, i: usize) -> Result<Trajectory> {
        self.validate()?;
        let r = &self.robots[i];
        let field = self.static_field()?;
        let config = RolloutConfig::new(self.dt, self.horizon);
        r.dmp.rollout(
            &Vector::from_column_slice(&r.start),
            &Vector::from_column_slice(&r.goal),
            &config,
            field.as_ref().map(|f| f as &dyn PerturbationField),
        )
    }
}

/// Runs all robots on one common time grid.
pub fn simulate(scene: &Scene) -> Result<Vec<Trajectory>> {
    scene.validate()?;
    let config = RolloutConfig {
        dt: scene.dt,
        horizon: scene.horizon,
        divergence_bound: DEFAULT_DIVERGENCE_BOUND,
    };
    let steps = config.steps()?;
    let cs = scene.robots[0].dmp.canonical_system();
    let static_field = scene.static_field()?;
    let mut steppers: Vec<Stepper> = scene
        .robots
        .iter()
        .map(|r| {
            Stepper::new(
                &r.dmp,
                Vector::from_column_slice(&r.start),
                Vector::from_column_slice(&r.goal),
            )
        })
        .collect();
    let mut recorders: Vec<Recorder> = scene
        .robots
        .iter()
        .map(|_| Recorder::with_capacity(steps + 1))
        .collect();
    let n = scene.robots.len();

    for k in 0..=steps {
        let t = k as f64 * config.dt;
        let s = cs.phase_at(t);
        let velocities: Vec<Vector> = steppers.iter().map(|st| st.world_velocity()).collect();
        let mut vdots = Vec::with_capacity(n);
        for i in 0..n {
            let x = &steppers[i].x;
            let phi = perturbation(scene, static_field.as_ref(), &steppers, &velocities, i, t)
                .map_err(|e| e.at_time(t))?;
            let vdot = steppers[i]
                .acceleration(s, phi.as_ref())
                .map_err(|e| e.at_time(t))?;
            recorders[i].push(
                t,
                x,
                velocities[i].clone(),
                &vdot / scene.robots[i].dmp.tau(),
            );
            vdots.push(vdot);
        }
        if k < steps {
            for (st, vdot) in steppers.iter_mut().zip(&vdots) {
                st.advance(vdot, config.dt);
                st.check(t + config.dt, config.divergence_bound)?;
            }
        }
    }
    recorders.into_iter().map(Recorder::finish).collect()
}

fn perturbation(
    scene: &Scene,
    static_field: Option<&ComposedField>,
    steppers: &[Stepper],
    velocities: &[Vector],
    i: usize,
    t: f64,
) -> Result<Option<Vector>> {
    let x = &steppers[i].x;
    let xdot = &velocities[i];
    let mut phi = match static_field {
        Some(f) => Some(f.phi(x, xdot, t)?),
        None => None,
    };
    let Some(method) = &scene.mutual_method else {
        return Ok(phi);
    };
    // sum the other robots in a state-determined order so that relabeling
    // robots cannot change the rounding
    let mut others: Vec<usize> = (0..steppers.len()).filter(|&j| j != i).collect();
    others.sort_by(|&a, &b| {
        state_order(
            &steppers[a].x,
            &velocities[a],
            &steppers[b].x,
            &velocities[b],
        )
    });
    for j in others {
        let sq = scene.mutual_obstacle(i, j, &steppers[j].x, &velocities[j]);
        let c = sq.isopotential(x);
        if !(c > 0.0) {
            return Err(Error::RobotCollision {
                first: i.min(j),
                second: i.max(j),
                t,
                c,
            });
        }
        let term = method.phi(x, xdot, &Obstacle::Volume(sq), scene.cos_gradient)?;
        phi = Some(match phi {
            Some(p) => p + term,
            None => term,
        });
    }
    Ok(phi)
}

fn state_order(xa: &Vector, va: &Vector, xb: &Vector, vb: &Vector) -> std::cmp::Ordering {
    xa.iter()
        .chain(va.iter())
        .zip(xb.iter().chain(vb.iter()))
        .map(|(a, b)| a.total_cmp(b))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

/// Smallest mutual-ellipse isopotential over all ordered robot pairs and
/// all samples; `None` with fewer than two robots.
pub fn min_mutual_clearance(scene: &Scene, trajectories: &[Trajectory]) -> Option<f64> {
    let mut best: Option<f64> = None;
    for i in 0..trajectories.len() {
        for j in 0..trajectories.len() {
            if i == j {
                continue;
            }
            for k in 0..trajectories[i].len().min(trajectories[j].len()) {
                let sq = scene.mutual_obstacle(
                    i,
                    j,
                    &trajectories[j].positions()[k],
                    &trajectories[j].velocities()[k],
                );
                let c = sq.isopotential(&trajectories[i].positions()[k]);
                best = Some(best.map_or(c, |b| b.min(c)));
            }
        }
    }
    best
}

/// Smallest static-obstacle isopotential over all robots and samples.
pub fn min_static_clearance(scene: &Scene, trajectories: &[Trajectory]) -> Option<f64> {
    let mut best: Option<f64> = None;
    for tr in trajectories {
        for x in tr.positions() {
            for (sq, _) in &scene.static_obstacles {
                let c = sq.isopotential(x);
                best = Some(best.map_or(c, |b| b.min(c)));
            }
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Straight lines from the unforced spring-damper.
    NullWeights,
    /// Weights learned from a constant-speed straight line.
    ConstantSpeed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxLayout {
    pub center: [f64; 2],
    /// Full side lengths.
    pub size: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotLayout {
    pub start: [f64; 2],
    pub goal: [f64; 2],
}

/// Geometry and gains of the walled-room scene. The room spans
/// `[0, width] x [0, height]`; walls sit just outside it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SceneLayout {
    pub room: [f64; 2],
    pub wall_thickness: f64,
    pub boxes: Vec<BoxLayout>,
    pub robots: Vec<RobotLayout>,
    pub footprint: [f64; 2],
    pub elastic: f64,
    /// `None` selects critical damping `2 sqrt(K)`.
    pub damping: Option<f64>,
    pub alpha: f64,
    pub n_basis: usize,
    pub tau: f64,
    pub dt: f64,
    pub horizon: f64,
    pub mutual_method: AvoidanceMethod,
    pub obstacle_method: AvoidanceMethod,
}

impl Default for SceneLayout {
    fn default() -> Self {
        Self {
            room: [10.0, 6.0],
            wall_thickness: 0.2,
            boxes: vec![
                BoxLayout {
                    center: [2.5, 1.5],
                    size: [0.8, 0.8],
                },
                BoxLayout {
                    center: [6.0, 3.5],
                    size: [0.8, 0.8],
                },
                BoxLayout {
                    center: [8.0, 4.0],
                    size: [0.8, 0.8],
                },
            ],
            // without the mutual field two of these robots touch
            robots: vec![
                RobotLayout {
                    start: [1.0, 4.5],
                    goal: [8.0, 5.0],
                },
                RobotLayout {
                    start: [1.0, 3.0],
                    goal: [8.5, 1.0],
                },
                RobotLayout {
                    start: [8.0, 1.0],
                    goal: [1.0, 5.0],
                },
            ],
            footprint: [0.58, 0.38],
            elastic: 3050.0,
            damping: None,
            alpha: 4.0,
            n_basis: 50,
            tau: 10.0,
            dt: DEFAULT_DT,
            horizon: 30.0,
            mutual_method: AvoidanceMethod::DynamicVolume {
                lambda: 60.0,
                beta: 2.0,
                eta: 0.2,
            },
            obstacle_method: AvoidanceMethod::DynamicVolume {
                lambda: 60.0,
                beta: 2.0,
                eta: 2.0,
            },
        }
    }
}

/// Pseudo-ellipsoid (`n = m = 2`) walls and boxes, not yet inflated.
pub fn room_obstacles(layout: &SceneLayout) -> Result<Vec<Superquadric>> {
    let [w, h] = layout.room;
    let th = layout.wall_thickness;
    if !(w > 0.0 && h > 0.0 && th > 0.0) {
        return Err(Error::invalid(
            "room size and wall thickness must be positive",
        ));
    }
    let half = th / 2.0;
    let mut out = vec![
        Superquadric::new(&[w / 2.0, -half], &[w / 2.0 + th, half], 2, 2)?,
        Superquadric::new(&[w / 2.0, h + half], &[w / 2.0 + th, half], 2, 2)?,
        Superquadric::new(&[-half, h / 2.0], &[half, h / 2.0 + th], 2, 2)?,
        Superquadric::new(&[w + half, h / 2.0], &[half, h / 2.0 + th], 2, 2)?,
    ];
    for b in &layout.boxes {
        out.push(Superquadric::new(
            &b.center,
            &[b.size[0] / 2.0, b.size[1] / 2.0],
            2,
            2,
        )?);
    }
    Ok(out)
}

/// Samples a constant-speed straight line from `start` to `goal` taking
/// `duration`, with exact derivatives.
pub fn constant_speed_line(
    start: &[f64],
    goal: &[f64],
    duration: f64,
    dt: f64,
) -> Result<Trajectory> {
    let config = RolloutConfig::new(dt, duration);
    let steps = config.steps()?;
    let a = Vector::from_column_slice(start);
    let b = Vector::from_column_slice(goal);
    let vel = (&b - &a) / duration;
    let times: Vec<f64> = (0..=steps)
        .map(|k| k as f64 * duration / steps as f64)
        .collect();
    let positions = times.iter().map(|t| &a + &vel * *t).collect();
    let velocities = vec![vel; times.len()];
    let accelerations = vec![Vector::zeros(a.len()); times.len()];
    Trajectory::new(times, positions, velocities, accelerations)
}

/// The three-robot room with the default layout.
pub fn build_benchmark_scene(variant: Variant) -> Scene {
    build_scene(variant, &SceneLayout::default()).expect("default layout is valid")
}

pub fn build_scene(variant: Variant, layout: &SceneLayout) -> Result<Scene> {
    if layout.robots.is_empty() {
        return Err(Error::invalid("layout needs at least one robot"));
    }
    let damping = vec![layout.damping.unwrap_or(2.0 * layout.elastic.sqrt())];
    let mut robots = Vec::with_capacity(layout.robots.len());
    for r in &layout.robots {
        let dmp = match variant {
            Variant::NullWeights => Dmp::with_zero_weights(
                &r.start,
                &r.goal,
                layout.elastic,
                layout.alpha,
                layout.n_basis,
                layout.tau,
            )?
            .with_damping(&damping)?,
            Variant::ConstantSpeed => {
                let demo = constant_speed_line(&r.start, &r.goal, layout.tau, layout.dt)?;
                let mut config = LearnConfig::new(layout.elastic, layout.n_basis);
                config.alpha = layout.alpha;
                config.damping = Some(damping.clone());
                Dmp::learn(&demo, &config)?
            }
        };
        robots.push(RobotSpec {
            dmp,
            start: r.start,
            goal: r.goal,
            footprint: layout.footprint,
        });
    }
    layout.obstacle_method.validate()?;
    let static_obstacles = room_obstacles(layout)?
        .into_iter()
        .map(|sq| Ok((sq.inflate(&layout.footprint)?, layout.obstacle_method)))
        .collect::<Result<Vec<_>>>()?;
    let scene = Scene {
        robots,
        static_obstacles,
        dt: layout.dt,
        horizon: layout.horizon,
        mutual_method: Some(layout.mutual_method),
        cos_gradient: CosGradient::Analytic,
    };
    scene.validate()?;
    Ok(scene)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lone_robot(start: [f64; 2], goal: [f64; 2]) -> RobotSpec {
        RobotSpec {
            dmp: Dmp::with_zero_weights(&start, &goal, 100.0, 4.0, 10, 1.0).unwrap(),
            start,
            goal,
            footprint: [0.2, 0.1],
        }
    }

    fn bare_scene(robots: Vec<RobotSpec>) -> Scene {
        Scene {
            robots,
            static_obstacles: vec![],
            dt: 1e-3,
            horizon: 3.0,
            mutual_method: Some(AvoidanceMethod::DynamicVolume {
                lambda: 60.0,
                beta: 2.0,
                eta: 0.2,
            }),
            cos_gradient: CosGradient::Analytic,
        }
    }

    #[test]
    fn single_robot_without_obstacles_reaches_goal() {
        let scene = bare_scene(vec![lone_robot([0.0, 0.0], [1.0, 0.5])]);
        let out = simulate(&scene).unwrap();
        assert_eq!(out.len(), 1);
        let err = (out[0].last_position() - Vector::from_column_slice(&[1.0, 0.5])).norm();
        assert!(err <= 1e-2, "goal error {err}");
        assert_eq!(out[0], scene.independent_rollout(0).unwrap());
    }

    #[test]
    fn head_on_swap_keeps_robots_apart() {
        let mut scene = bare_scene(vec![
            lone_robot([0.0, 0.0], [3.0, 0.05]),
            lone_robot([3.0, 0.0], [0.0, -0.05]),
        ]);
        for r in &mut scene.robots {
            r.dmp = r.dmp.with_tau(2.0).unwrap();
        }
        scene.horizon = 8.0;
        let out = simulate(&scene).unwrap();
        assert!(min_mutual_clearance(&scene, &out).unwrap() > 0.0);
        for (r, tr) in scene.robots.iter().zip(&out) {
            let err = (tr.last_position() - Vector::from_column_slice(&r.goal)).norm();
            assert!(err <= 5e-2, "goal error {err}");
        }
    }

    #[test]
    fn decoupled_scene_matches_independent_rollouts() {
        let mut scene = build_benchmark_scene(Variant::NullWeights);
        scene.horizon = 2.0;
        scene.mutual_method = None;
        let out = simulate(&scene).unwrap();
        for (i, tr) in out.iter().enumerate() {
            assert_eq!(*tr, scene.independent_rollout(i).unwrap());
        }
    }

    #[test]
    fn relabeling_robots_permutes_the_output() {
        let mut scene = build_benchmark_scene(Variant::NullWeights);
        scene.horizon = 4.0;
        let out = simulate(&scene).unwrap();
        let mut swapped = scene.clone();
        swapped.robots.rotate_left(1);
        let out2 = simulate(&swapped).unwrap();
        let n = out.len();
        for i in 0..n {
            assert_eq!(out[(i + 1) % n], out2[i]);
        }
    }

    #[test]
    fn mismatched_phase_is_rejected() {
        let mut scene = bare_scene(vec![
            lone_robot([0.0, 0.0], [1.0, 0.0]),
            lone_robot([0.0, 1.0], [1.0, 1.0]),
        ]);
        scene.robots[1].dmp = scene.robots[1].dmp.with_tau(2.0).unwrap();
        assert!(matches!(simulate(&scene), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn other_mutual_methods_are_rejected() {
        let mut scene = bare_scene(vec![lone_robot([0.0, 0.0], [1.0, 0.0])]);
        scene.mutual_method = Some(AvoidanceMethod::STATIC_VOLUME);
        assert!(scene.validate().is_err());
    }

    #[test]
    fn overlapping_starts_abort_with_the_pair() {
        let scene = bare_scene(vec![
            lone_robot([0.0, 0.0], [1.0, 0.0]),
            lone_robot([0.05, 0.0], [1.0, 1.0]),
        ]);
        match simulate(&scene).unwrap_err() {
            Error::RobotCollision {
                first, second, t, ..
            } => {
                assert_eq!((first, second, t), (0, 1, 0.0));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn benchmark_scene_starts_outside_obstacles() {
        for variant in [Variant::NullWeights, Variant::ConstantSpeed] {
            let scene = build_benchmark_scene(variant);
            assert_eq!(scene.robots.len(), 3);
            for r in &scene.robots {
                let x = Vector::from_column_slice(&r.start);
                for (sq, _) in &scene.static_obstacles {
                    assert!(sq.isopotential(&x) > 0.0);
                }
            }
        }
    }

    #[test]
    fn null_weights_variant_has_zero_weights() {
        let scene = build_benchmark_scene(Variant::NullWeights);
        for r in &scene.robots {
            assert!(r.dmp.weights().iter().flatten().all(|w| *w == 0.0));
        }
    }

    #[test]
    fn constant_speed_variant_moves_at_constant_speed() {
        let scene = build_benchmark_scene(Variant::ConstantSpeed);
        let tau = scene.robots[0].dmp.tau();
        for r in &scene.robots {
            let tr = r
                .dmp
                .rollout(
                    &Vector::from_column_slice(&r.start),
                    &Vector::from_column_slice(&r.goal),
                    &RolloutConfig::new(1e-3, tau),
                    None,
                )
                .unwrap();
            let expected =
                (Vector::from_column_slice(&r.goal) - Vector::from_column_slice(&r.start)).norm()
                    / tau;
            for (t, v) in tr.times().iter().zip(tr.velocities()) {
                if *t >= 0.1 * tau && *t <= 0.9 * tau {
                    let rel = (v.norm() - expected).abs() / expected;
                    assert!(rel <= 0.05, "speed off by {rel} at t = {t}");
                }
            }
        }
    }
}
