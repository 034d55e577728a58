mod common;

use std::f64::consts::PI;

use common::*;
use dmp_avoid::avoidance::{
    dynamic_point_potential, dynamic_volume_potential, static_point_potential,
    static_volume_potential, AvoidanceMethod, ComposedField, CosGradient, Obstacle,
};
use dmp_avoid::dmp::{PerturbationField, Vector};
use dmp_avoid::obstacles::{PointObstacle, Superquadric};
use proptest::prelude::*;
use rand::Rng;

const STATIC_POINT: AvoidanceMethod = AvoidanceMethod::StaticPoint { eta: 1.0, p0: 0.1 };
const DYNAMIC_POINT: AvoidanceMethod = AvoidanceMethod::DynamicPoint {
    lambda: 0.2,
    beta: 2.0,
};
const STEERING: AvoidanceMethod = AvoidanceMethod::SteeringAngle {
    gamma: 1000.0,
    beta: 20.0 / PI,
};
const STATIC_VOLUME: AvoidanceMethod = AvoidanceMethod::StaticVolume {
    amplitude: 10.0,
    eta: 1.0,
};
const DYNAMIC_VOLUME: AvoidanceMethod = AvoidanceMethod::DynamicVolume {
    lambda: 10.0,
    beta: 2.0,
    eta: 0.5,
};

fn point_on_ray(o: &[f64], dir: &[f64], p: f64) -> Vec<f64> {
    o.iter().zip(dir).map(|(a, b)| a + p * b).collect()
}

fn phi(m: AvoidanceMethod, x: &[f64], v: &[f64], obstacle: &Obstacle) -> Vector {
    m.phi(&vec(x), &vec(v), obstacle, CosGradient::Analytic)
        .unwrap()
}

/// Rotation of the plane, or about a random axis in space.
fn rotation(r: &mut TestRng, d: usize) -> nalgebra::DMatrix<f64> {
    let angle = r.gen_range(-PI..PI);
    if d == 2 {
        let (s, c) = angle.sin_cos();
        nalgebra::DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
    } else {
        let axis = nalgebra::Unit::new_normalize(nalgebra::Vector3::from_column_slice(&unit(r, 3)));
        let m = nalgebra::Rotation3::from_axis_angle(&axis, angle).into_inner();
        nalgebra::DMatrix::from_iterator(3, 3, m.iter().copied())
    }
}

fn rotate(m: &nalgebra::DMatrix<f64>, x: &[f64]) -> Vec<f64> {
    (m * vec(x)).iter().copied().collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn potentials_decrease_along_exterior_rays(seed in any::<u64>(), k in 0usize..4) {
        let mut r = rng(seed);
        let shape = shape(&mut r, k);
        let sq = shape.superquadric();
        let d = shape.center.len();
        let o = shape.center.clone();
        let obs = PointObstacle::new(&o).unwrap();
        let dir = unit(&mut r, d);
        let speed = r.gen_range(0.1..3.0);
        let mut last = [f64::INFINITY; 4];
        for i in 0..40 {
            let p = 0.01 + 0.085 * i as f64 / 39.0;
            let x = point_on_ray(&o, &dir, p);
            let toward: Vec<f64> = dir.iter().map(|a| -speed * a).collect();
            let u_sp = static_point_potential(&vec(&x), &obs, 1.0, 0.1).unwrap();
            let u_dp = dynamic_point_potential(&vec(&x), &vec(&toward), &obs, 0.2, 2.0).unwrap();
            prop_assert!(u_sp < last[0] && u_dp < last[1]);
            last[0] = u_sp;
            last[1] = u_dp;

            let c = 0.02 + 4.0 * i as f64 / 39.0;
            let x = exterior_point_on_ray(&shape, &dir, c);
            let n = shape.grad(&x);
            let nn = n.iter().map(|a| a * a).sum::<f64>().sqrt();
            let toward: Vec<f64> = n.iter().map(|a| -speed * a / nn).collect();
            let u_sv = static_volume_potential(&vec(&x), &sq, 10.0, 1.0).unwrap();
            let u_dv = dynamic_volume_potential(&vec(&x), &vec(&toward), &sq, 10.0, 2.0, 0.5).unwrap();
            prop_assert!(u_sv < last[2] && u_dv < last[3]);
            last[2] = u_sv;
            last[3] = u_dv;
        }
    }

    #[test]
    fn dynamic_fields_scale_with_speed(seed in any::<u64>(), k in 0usize..4, scale in 0.01f64..100.0) {
        let mut r = rng(seed);
        let shape = shape(&mut r, k);
        let o = shape.center.clone();
        let point = Obstacle::Point(PointObstacle::new(&o).unwrap());
        let dir = unit(&mut r, o.len());
        let x = point_on_ray(&o, &dir, r.gen_range(0.05..2.0));
        let (cos, speed) = (r.gen_range(-1.0..-0.01), r.gen_range(0.1..3.0));
        let v = velocity_with_cos(&mut r, &dir, cos, speed);
        let kv: Vec<f64> = v.iter().map(|a| scale * a).collect();
        for m in [DYNAMIC_POINT, STEERING] {
            let (base, scaled) = (phi(m, &x, &v, &point), phi(m, &x, &kv, &point));
            prop_assert!((&scaled - &base * scale).norm() <= 1e-12 * scale * base.norm().max(1e-300));
        }
        let volume = Obstacle::Volume(shape.superquadric());
        let target = r.gen_range(0.05..2.0);
        let x = exterior_point(&mut r, &shape, target);
        let v = velocity_with_cos(&mut r, &shape.grad(&x), cos, speed);
        let kv: Vec<f64> = v.iter().map(|a| scale * a).collect();
        let (base, scaled) = (phi(DYNAMIC_VOLUME, &x, &v, &volume), phi(DYNAMIC_VOLUME, &x, &kv, &volume));
        prop_assert!((&scaled - &base * scale).norm() <= 1e-12 * scale * base.norm());
    }

    #[test]
    fn receding_motion_is_not_perturbed(seed in any::<u64>(), k in 0usize..4, cos in 0.0f64..=1.0) {
        let mut r = rng(seed);
        let shape = shape(&mut r, k);
        let o = shape.center.clone();
        let point = Obstacle::Point(PointObstacle::new(&o).unwrap());
        let dir = unit(&mut r, o.len());
        let x = point_on_ray(&o, &dir, r.gen_range(0.05..2.0));
        let speed = r.gen_range(0.1..3.0);
        let v = velocity_with_cos(&mut r, &dir, cos, speed);
        prop_assert!(phi(DYNAMIC_POINT, &x, &v, &point).iter().all(|p| *p == 0.0));
        let target = r.gen_range(0.05..2.0);
        let x = exterior_point(&mut r, &shape, target);
        let v = velocity_with_cos(&mut r, &shape.grad(&x), cos, speed);
        let volume = Obstacle::Volume(shape.superquadric());
        prop_assert!(phi(DYNAMIC_VOLUME, &x, &v, &volume).iter().all(|p| *p == 0.0));
    }

    #[test]
    fn obstacles_moving_with_the_robot_are_ignored(seed in any::<u64>(), k in 0usize..4) {
        let mut r = rng(seed);
        let shape = shape(&mut r, k);
        let d = shape.center.len();
        let v: Vec<f64> = (0..d).map(|_| r.gen_range(-2.0..2.0)).collect();
        let point = Obstacle::Point(PointObstacle::new(&shape.center).unwrap().with_velocity(&v).unwrap());
        let volume = Obstacle::Volume(shape.superquadric().with_velocity(&v).unwrap());
        let target = r.gen_range(0.05..2.0);
        let x = exterior_point(&mut r, &shape, target);
        for m in [DYNAMIC_POINT, STEERING] {
            prop_assert!(phi(m, &x, &v, &point).iter().all(|p| *p == 0.0));
        }
        prop_assert!(phi(DYNAMIC_VOLUME, &x, &v, &volume).iter().all(|p| *p == 0.0));
    }

    #[test]
    fn static_point_vanishes_beyond_influence_radius(seed in any::<u64>(), p in 0.1f64..10.0) {
        let mut r = rng(seed);
        let d = r.gen_range(2..=3);
        let o: Vec<f64> = (0..d).map(|_| r.gen_range(-1.0..1.0)).collect();
        let x = point_on_ray(&o, &unit(&mut r, d), p * 1.000001);
        let obs = PointObstacle::new(&o).unwrap();
        prop_assert_eq!(static_point_potential(&vec(&x), &obs, 1.0, 0.1).unwrap(), 0.0);
        prop_assert!(phi(STATIC_POINT, &x, &vec![0.0; d], &Obstacle::Point(obs)).iter().all(|p| *p == 0.0));
    }

    #[test]
    fn potentials_do_not_grow_as_velocity_turns_away(seed in any::<u64>(), k in 0usize..4) {
        let mut r = rng(seed);
        let shape = shape(&mut r, k);
        let sq = shape.superquadric();
        let o = shape.center.clone();
        let obs = PointObstacle::new(&o).unwrap();
        let target = r.gen_range(0.05..2.0);
        let x = exterior_point(&mut r, &shape, target);
        let radial: Vec<f64> = x.iter().zip(&o).map(|(a, b)| a - b).collect();
        let speed = r.gen_range(0.1..3.0);
        for (which, n) in [radial, shape.grad(&x)].into_iter().enumerate() {
            let nn = n.iter().map(|a| a * a).sum::<f64>().sqrt();
            let n: Vec<f64> = n.iter().map(|a| a / nn).collect();
            let w = orthogonal(&mut r, &n);
            let mut last = f64::INFINITY;
            for i in 0..=40 {
                let angle = PI * i as f64 / 40.0;
                let v: Vec<f64> = n.iter().zip(&w).map(|(a, b)| speed * (-angle.cos() * a + angle.sin() * b)).collect();
                let u = if which == 0 {
                    dynamic_point_potential(&vec(&x), &vec(&v), &obs, 0.2, 2.0).unwrap()
                } else {
                    dynamic_volume_potential(&vec(&x), &vec(&v), &sq, 10.0, 2.0, 0.5).unwrap()
                };
                prop_assert!(u <= last);
                last = u;
            }
            prop_assert_eq!(last, 0.0);
        }
    }

    #[test]
    fn fields_match_finite_difference_gradients(seed in any::<u64>(), k in 0usize..4) {
        let mut r = rng(seed);
        let shape = shape(&mut r, k);
        let o = shape.center.clone();
        let obs = Obstacle::Point(PointObstacle::new(&o).unwrap());
        let dir = unit(&mut r, o.len());
        let x = point_on_ray(&o, &dir, r.gen_range(0.02..0.095));
        let fd: Vec<f64> = fd_gradient(|y| u_static_point(y, &o, 1.0, 0.1), &x, 1e-6).iter().map(|g| -g).collect();
        prop_assert!(rel_err(phi(STATIC_POINT, &x, &x, &obs).as_slice(), &fd) <= 1e-5);

        let x = point_on_ray(&o, &dir, r.gen_range(0.05..2.0));
        let (cos, speed) = (r.gen_range(-1.0..-0.05), r.gen_range(0.1..3.0));
        let v = velocity_with_cos(&mut r, &dir, cos, speed);
        let fd: Vec<f64> = fd_gradient(|y| u_dynamic_point(y, &v, &o, 0.2, 2.0), &x, 1e-6).iter().map(|g| -g).collect();
        prop_assert!(rel_err(phi(DYNAMIC_POINT, &x, &v, &obs).as_slice(), &fd) <= 1e-5);

        let volume = Obstacle::Volume(shape.superquadric());
        let target = r.gen_range(0.05..2.0);
        let x = exterior_point(&mut r, &shape, target);
        let fd: Vec<f64> = fd_gradient(|y| u_static_volume(y, &shape, 10.0, 1.0), &x, 1e-6).iter().map(|g| -g).collect();
        prop_assert!(rel_err(phi(STATIC_VOLUME, &x, &x, &volume).as_slice(), &fd) <= 1e-5);

        let v = velocity_with_cos(&mut r, &shape.grad(&x), cos, speed);
        let fd: Vec<f64> = fd_gradient(|y| u_dynamic_volume(y, &v, &shape, 10.0, 2.0, 0.5), &x, 1e-6).iter().map(|g| -g).collect();
        let analytic = phi(DYNAMIC_VOLUME, &x, &v, &volume);
        prop_assert!(rel_err(analytic.as_slice(), &fd) <= 1e-5);
        let numeric = DYNAMIC_VOLUME.phi(&vec(&x), &vec(&v), &volume, CosGradient::FiniteDifference).unwrap();
        prop_assert!(rel_err(numeric.as_slice(), analytic.as_slice()) <= 1e-5);
    }

    #[test]
    fn fields_rotate_with_the_scene(seed in any::<u64>(), d in 2usize..=3) {
        let mut r = rng(seed);
        let rot = rotation(&mut r, d);
        let o: Vec<f64> = (0..d).map(|_| r.gen_range(-1.0..1.0)).collect();
        let dir = unit(&mut r, d);
        let x = point_on_ray(&o, &dir, r.gen_range(0.02..0.095));
        let (cos, speed) = (r.gen_range(-0.99..-0.05), r.gen_range(0.1..3.0));
        let v = velocity_with_cos(&mut r, &dir, cos, speed);
        let (ro, rx, rv) = (rotate(&rot, &o), rotate(&rot, &x), rotate(&rot, &v));
        let point = Obstacle::Point(PointObstacle::new(&o).unwrap());
        let rpoint = Obstacle::Point(PointObstacle::new(&ro).unwrap());
        for m in [STATIC_POINT, DYNAMIC_POINT, STEERING] {
            let expected = &rot * phi(m, &x, &v, &point);
            let got = phi(m, &rx, &rv, &rpoint);
            prop_assert!((&got - &expected).norm() <= 1e-9 * expected.norm().max(1e-12), "{}", m.name());
        }

        // a ball is invariant under every rotation about its center
        let radius = r.gen_range(0.2..0.8);
        let ball = Superquadric::new(&o, &vec![radius; d], 1, 1).unwrap();
        let rball = Superquadric::new(&ro, &vec![radius; d], 1, 1).unwrap();
        let x = point_on_ray(&o, &dir, radius * r.gen_range(1.05..3.0));
        let (rx, rv) = (rotate(&rot, &x), rotate(&rot, &v));
        for m in [STATIC_VOLUME, DYNAMIC_VOLUME] {
            let expected = &rot * phi(m, &x, &v, &Obstacle::Volume(ball.clone()));
            let got = phi(m, &rx, &rv, &Obstacle::Volume(rball.clone()));
            prop_assert!((&got - &expected).norm() <= 1e-9 * expected.norm().max(1e-12), "{}", m.name());
        }
    }

    #[test]
    fn quarter_turn_swaps_superquadric_axes(seed in any::<u64>(), k in 0usize..4) {
        let mut r = rng(seed);
        let shape = shape(&mut r, k);
        let mut turned = shape.clone();
        turned.axes.swap(0, 1);
        turned.center[0] = -shape.center[1];
        turned.center[1] = shape.center[0];
        let quarter = |p: &[f64]| -> Vec<f64> {
            let mut q = p.to_vec();
            q[0] = -p[1];
            q[1] = p[0];
            q
        };
        let target = r.gen_range(0.05..2.0);
        let x = exterior_point(&mut r, &shape, target);
        let (cos, speed) = (r.gen_range(-0.99..-0.05), r.gen_range(0.1..3.0));
        let v = velocity_with_cos(&mut r, &shape.grad(&x), cos, speed);
        for m in [STATIC_VOLUME, DYNAMIC_VOLUME] {
            let expected = quarter(phi(m, &x, &v, &Obstacle::Volume(shape.superquadric())).as_slice());
            let got = phi(m, &quarter(&x), &quarter(&v), &Obstacle::Volume(turned.superquadric()));
            prop_assert!(rel_err(got.as_slice(), &expected) <= 1e-9);
        }
    }

    #[test]
    fn composed_field_is_the_sum_of_its_terms(seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = shape(&mut r, 0);
        let b = shape(&mut r, 1);
        let target = r.gen_range(0.5..2.0);
        let x = exterior_point(&mut r, &a, target);
        prop_assume!(b.c(&x) > 0.1);
        let v: Vec<f64> = (0..2).map(|_| r.gen_range(-2.0..2.0)).collect();
        let members = vec![
            (DYNAMIC_VOLUME, Obstacle::Volume(a.superquadric())),
            (STATIC_VOLUME, Obstacle::Volume(b.superquadric())),
            (DYNAMIC_POINT, Obstacle::Cloud(b.superquadric().discretize_boundary(12).unwrap())),
        ];
        let mut expected = Vector::zeros(2);
        for (m, o) in &members {
            expected += phi(*m, &x, &v, o);
        }
        let field = ComposedField::new(members).unwrap();
        let got = field.phi(&vec(&x), &vec(&v), 0.0).unwrap();
        prop_assert!((&got - &expected).norm() <= 1e-12 * expected.norm().max(1.0));
    }
}

#[test]
fn steering_field_turns_velocity_away_from_the_obstacle() {
    let obs = Obstacle::Point(PointObstacle::new(&[1.0, 0.2]).unwrap());
    let p = phi(STEERING, &[0.0, 0.0], &[1.0, 0.0], &obs);
    // obstacle ahead and to the left, so the push is to the right
    assert!(p[1] < 0.0);
    assert!(p[0].abs() < 1e-12);
    let mirrored = Obstacle::Point(PointObstacle::new(&[1.0, -0.2]).unwrap());
    let q = phi(STEERING, &[0.0, 0.0], &[1.0, 0.0], &mirrored);
    assert!((q[1] + p[1]).abs() < 1e-12);
}
