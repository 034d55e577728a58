//! Independent reference implementations used as test oracles.
//!
//! Nothing here calls the library's potentials or derivatives: the
//! isopotential, its gradient and every potential are written out again
//! from their closed forms, and gradients of potentials are taken by central
//! finite differences.
#![allow(dead_code)]

use std::f64::consts::PI;

use dmp_avoid::dmp::{Trajectory, Vector};
use dmp_avoid::obstacles::Superquadric;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;
pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn vec(xs: &[f64]) -> Vector {
    Vector::from_column_slice(xs)
}

/// Superquadric with `p = m`, evaluated by hand.
#[derive(Debug, Clone)]
pub struct Shape {
    pub center: Vec<f64>,
    pub axes: Vec<f64>,
    pub n: u32,
    pub m: u32,
}

impl Shape {
    pub fn superquadric(&self) -> Superquadric {
        Superquadric::new(&self.center, &self.axes, self.n, self.m).unwrap()
    }

    fn scaled(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.center)
            .zip(&self.axes)
            .map(|((xi, ci), li)| (xi - ci) / li)
            .collect()
    }

    pub fn c(&self, x: &[f64]) -> f64 {
        let a = self.scaled(x);
        let (n, m) = (self.n as i32, self.m as i32);
        let planar = a[0].powi(2 * n) + a[1].powi(2 * n);
        let mut c = planar.powf(m as f64 / n as f64) - 1.0;
        if a.len() == 3 {
            c += a[2].powi(2 * m);
        }
        c
    }

    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        let a = self.scaled(x);
        let (n, m) = (self.n as i32, self.m as i32);
        let planar = a[0].powi(2 * n) + a[1].powi(2 * n);
        // d/dx_i (S^(m/n)) = (m/n) S^(m/n - 1) * 2n a_i^(2n-1) / l_i
        let outer = 2.0 * m as f64 * planar.powf(m as f64 / n as f64 - 1.0);
        let mut g = vec![
            outer * a[0].powi(2 * n - 1) / self.axes[0],
            outer * a[1].powi(2 * n - 1) / self.axes[1],
        ];
        if a.len() == 3 {
            g.push(2.0 * m as f64 * a[2].powi(2 * m - 1) / self.axes[2]);
        }
        g
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn u_static_point(x: &[f64], o: &[f64], eta: f64, p0: f64) -> f64 {
    let p = norm(&sub(x, o));
    if p > p0 {
        0.0
    } else {
        eta / 2.0 * (1.0 / p - 1.0 / p0).powi(2)
    }
}

pub fn u_dynamic_point(x: &[f64], v: &[f64], o: &[f64], lambda: f64, beta: f64) -> f64 {
    let r = sub(x, o);
    let (p, speed) = (norm(&r), norm(v));
    let cos = dot(&r, v) / (p * speed);
    if cos < 0.0 {
        lambda * (-cos).powf(beta) * speed / p
    } else {
        0.0
    }
}

pub fn u_static_volume(x: &[f64], shape: &Shape, amplitude: f64, eta: f64) -> f64 {
    let c = shape.c(x);
    amplitude * (-eta * c).exp() / c
}

pub fn u_dynamic_volume(
    x: &[f64],
    v: &[f64],
    shape: &Shape,
    lambda: f64,
    beta: f64,
    eta: f64,
) -> f64 {
    let c = shape.c(x);
    let g = shape.grad(x);
    let speed = norm(v);
    let cos = dot(&g, v) / (norm(&g) * speed);
    if cos < 0.0 {
        lambda * (-cos).powf(beta) * speed / c.powf(eta)
    } else {
        0.0
    }
}

pub fn fd_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[i] += h;
            xm[i] -= h;
            (f(&xp) - f(&xm)) / (2.0 * h)
        })
        .collect()
}

pub fn rel_err(actual: &[f64], expected: &[f64]) -> f64 {
    let diff = norm(&sub(actual, expected));
    let scale = norm(expected);
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

pub fn unit(rng: &mut TestRng, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n = norm(&v);
        if n > 0.1 && n <= 1.0 {
            return v.iter().map(|x| x / n).collect();
        }
    }
}

/// A unit vector orthogonal to the unit vector `n`.
pub fn orthogonal(rng: &mut TestRng, n: &[f64]) -> Vec<f64> {
    loop {
        let w = unit(rng, n.len());
        let along = dot(&w, n);
        let perp: Vec<f64> = w.iter().zip(n).map(|(wi, ni)| wi - along * ni).collect();
        let pn = norm(&perp);
        if pn > 0.1 {
            return perp.iter().map(|x| x / pn).collect();
        }
    }
}

/// A velocity of the given speed making angle `acos(cos)` with `n`.
pub fn velocity_with_cos(rng: &mut TestRng, n: &[f64], cos: f64, speed: f64) -> Vec<f64> {
    let nn = norm(n);
    let n: Vec<f64> = n.iter().map(|x| x / nn).collect();
    let w = orthogonal(rng, &n);
    let sin = (1.0 - cos * cos).max(0.0).sqrt();
    n.iter()
        .zip(&w)
        .map(|(a, b)| speed * (cos * a + sin * b))
        .collect()
}

/// Ellipsoids and pseudo-ellipsoids in the plane and in space, in turn.
pub fn shape(rng: &mut TestRng, k: usize) -> Shape {
    let d = if k % 4 < 2 { 2 } else { 3 };
    let e = if k.is_multiple_of(2) { 1 } else { 2 };
    Shape {
        center: (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        axes: (0..d).map(|_| rng.gen_range(0.2..0.8)).collect(),
        n: e,
        m: e,
    }
}

/// A point outside `shape` with isopotential `target`, on a random ray.
pub fn exterior_point(rng: &mut TestRng, shape: &Shape, target: f64) -> Vec<f64> {
    let dir = unit(rng, shape.center.len());
    exterior_point_on_ray(shape, &dir, target)
}

/// Bisects along the ray from the center of `shape` in direction `dir`.
pub fn exterior_point_on_ray(shape: &Shape, dir: &[f64], target: f64) -> Vec<f64> {
    let at = |r: f64| -> Vec<f64> {
        shape
            .center
            .iter()
            .zip(dir)
            .map(|(c, d)| c + r * d)
            .collect()
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    while shape.c(&at(hi)) < target {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if shape.c(&at(mid)) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(0.5 * (lo + hi))
}

/// The planar spiral `(t cos(pi t), t sin(pi t))` with exact derivatives.
pub fn spiral(dt: f64) -> Trajectory {
    let n = (1.0 / dt).round() as usize;
    let times: Vec<f64> = (0..=n).map(|k| k as f64 / n as f64).collect();
    let pos = times
        .iter()
        .map(|&t| vec(&[t * (PI * t).cos(), t * (PI * t).sin()]))
        .collect();
    let vel = times
        .iter()
        .map(|&t| {
            vec(&[
                (PI * t).cos() - PI * t * (PI * t).sin(),
                (PI * t).sin() + PI * t * (PI * t).cos(),
            ])
        })
        .collect();
    let acc = times
        .iter()
        .map(|&t| {
            vec(&[
                -2.0 * PI * (PI * t).sin() - PI * PI * t * (PI * t).cos(),
                2.0 * PI * (PI * t).cos() - PI * PI * t * (PI * t).sin(),
            ])
        })
        .collect();
    Trajectory::new(times, pos, vel, acc).unwrap()
}
