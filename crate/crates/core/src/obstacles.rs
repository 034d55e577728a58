//! Obstacle geometry.
//!
//! A [`Superquadric`] is described by the isopotential
//!
//! ```text
//! C(x) = ((a_1)^(2n) + (a_2)^(2n))^(m/n) + (a_3)^(2p) - 1,   a_i = (x_i - c_i) / l_i
//! ```
//!
//! with the third term dropped in the plane. `C` is negative inside, zero on
//! the surface and grows outward. `n = m = 1` gives ellipses and ellipsoids,
//! `n = m = 2` rounded boxes, and `n = m = 1, p = 2` a rounded cylinder along
//! the third axis. The third exponent `p` defaults to `m`.
//!
//! All axes are constants; position-dependent axis functions are not
//! supported.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dmp::Vector;
use crate::error::{Error, Result};

/// Generalized ellipsoid obstacle in two or three dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SuperquadricRecord", into = "SuperquadricRecord")]
pub struct Superquadric {
    center: Vector,
    axes: Vector,
    n: u32,
    m: u32,
    p: u32,
    velocity: Vector,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuperquadricRecord {
    pub center: Vec<f64>,
    pub axes: Vec<f64>,
    /// `[n, m]`, or `[n, m, p]` for a different exponent on the third axis.
    pub exponents: Vec<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub velocity: Option<Vec<f64>>,
}

impl TryFrom<SuperquadricRecord> for Superquadric {
    type Error = Error;

    fn try_from(r: SuperquadricRecord) -> Result<Self> {
        let (n, m, p) = match r.exponents.as_slice() {
            [n, m] => (*n, *m, None),
            [n, m, p] => (*n, *m, Some(*p)),
            other => {
                return Err(Error::invalid(format!(
                    "superquadric exponents must be [n, m] or [n, m, p], got {other:?}"
                )))
            }
        };
        let mut sq = Superquadric::new(&r.center, &r.axes, n, m)?;
        if let Some(p) = p {
            sq = sq.with_third_exponent(p)?;
        }
        if let Some(v) = r.velocity {
            sq = sq.with_velocity(&v)?;
        }
        Ok(sq)
    }
}

impl From<Superquadric> for SuperquadricRecord {
    fn from(sq: Superquadric) -> Self {
        let exponents = if sq.dims() == 3 && sq.p != sq.m {
            vec![sq.n, sq.m, sq.p]
        } else {
            vec![sq.n, sq.m]
        };
        let velocity = if sq.velocity.iter().all(|v| *v == 0.0) {
            None
        } else {
            Some(sq.velocity.iter().copied().collect())
        };
        Self {
            center: sq.center.iter().copied().collect(),
            axes: sq.axes.iter().copied().collect(),
            exponents,
            velocity,
        }
    }
}

fn finite_vector(name: &str, values: &[f64]) -> Result<Vector> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid(format!(
            "{name} must be finite, got {values:?}"
        )));
    }
    Ok(Vector::from_column_slice(values))
}

impl Superquadric {
    pub fn new(center: &[f64], axes: &[f64], n: u32, m: u32) -> Result<Self> {
        let d = center.len();
        if d != 2 && d != 3 {
            return Err(Error::Dimension(format!(
                "superquadrics are defined in 2 or 3 dimensions, got {d}"
            )));
        }
        if axes.len() != d {
            return Err(Error::Dimension(format!(
                "{} axes for a {d}-dimensional center",
                axes.len()
            )));
        }
        if let Some(a) = axes.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
            return Err(Error::invalid(format!(
                "superquadric axes must be positive, got {a}"
            )));
        }
        if n == 0 || m == 0 {
            return Err(Error::invalid(format!(
                "superquadric exponents must be >= 1, got n={n} m={m}"
            )));
        }
        Ok(Self {
            center: finite_vector("center", center)?,
            axes: Vector::from_column_slice(axes),
            n,
            m,
            p: m,
            velocity: Vector::zeros(d),
        })
    }

    pub fn ellipsoid(center: &[f64], axes: &[f64]) -> Result<Self> {
        Self::new(center, axes, 1, 1)
    }

    pub fn with_velocity(mut self, velocity: &[f64]) -> Result<Self> {
        if velocity.len() != self.dims() {
            return Err(Error::Dimension(format!(
                "velocity of length {} for a {}-dimensional obstacle",
                velocity.len(),
                self.dims()
            )));
        }
        self.velocity = finite_vector("velocity", velocity)?;
        Ok(self)
    }

    /// Sets the exponent of the third-axis term (3-D only).
    pub fn with_third_exponent(mut self, p: u32) -> Result<Self> {
        if self.dims() != 3 {
            return Err(Error::Dimension(
                "a third exponent needs a 3-dimensional obstacle".into(),
            ));
        }
        if p == 0 {
            return Err(Error::invalid("superquadric exponents must be >= 1"));
        }
        self.p = p;
        Ok(self)
    }

    /// Copy with every axis enlarged by the matching margin.
    pub fn inflate(&self, margins: &[f64]) -> Result<Self> {
        if margins.len() != self.dims() {
            return Err(Error::Dimension(format!(
                "{} margins for a {}-dimensional obstacle",
                margins.len(),
                self.dims()
            )));
        }
        let axes: Vec<f64> = self.axes.iter().zip(margins).map(|(a, m)| a + m).collect();
        let mut out = Self::new(self.center.as_slice(), &axes, self.n, self.m)?;
        out.p = self.p;
        out.velocity = self.velocity.clone();
        Ok(out)
    }

    /// Snapshot after moving with constant velocity for `t` seconds.
    pub fn at_time(&self, t: f64) -> Self {
        if t == 0.0 || self.is_static() {
            return self.clone();
        }
        Self {
            center: &self.center + &self.velocity * t,
            ..self.clone()
        }
    }

    /// Same shape, recentred.
    pub fn moved_to(&self, center: &Vector) -> Self {
        Self {
            center: center.clone(),
            ..self.clone()
        }
    }

    pub fn dims(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &Vector {
        &self.center
    }

    pub fn axes(&self) -> &Vector {
        &self.axes
    }

    pub fn velocity(&self) -> &Vector {
        &self.velocity
    }

    pub fn exponents(&self) -> (u32, u32, u32) {
        (self.n, self.m, self.p)
    }

    pub fn is_static(&self) -> bool {
        self.velocity.iter().all(|v| *v == 0.0)
    }

    /// Smallest semi-axis, a natural length scale for finite differences.
    pub fn scale(&self) -> f64 {
        self.axes.min()
    }

    fn scaled(&self, x: &Vector) -> Vec<f64> {
        (0..self.dims())
            .map(|i| (x[i] - self.center[i]) / self.axes[i])
            .collect()
    }

    fn check_dims(&self, x: &Vector) {
        assert_eq!(
            x.len(),
            self.dims(),
            "point of dimension {} evaluated against a {}-dimensional obstacle",
            x.len(),
            self.dims()
        );
    }

    /// Planar sum `w = a_1^(2n) + a_2^(2n)` and the outer power `m / n`.
    fn planar(&self, a: &[f64]) -> (f64, f64) {
        let two_n = 2 * self.n as i32;
        (
            a[0].powi(two_n) + a[1].powi(two_n),
            self.m as f64 / self.n as f64,
        )
    }

    fn outer(&self, w: f64, q: f64) -> f64 {
        if self.m == self.n {
            w
        } else {
            w.powf(q)
        }
    }

    pub fn isopotential(&self, x: &Vector) -> f64 {
        self.check_dims(x);
        let a = self.scaled(x);
        let (w, q) = self.planar(&a);
        let mut c = self.outer(w, q) - 1.0;
        if self.dims() == 3 {
            c += a[2].powi(2 * self.p as i32);
        }
        c
    }

    /// Analytic gradient of the isopotential.
    pub fn gradient(&self, x: &Vector) -> Vector {
        self.check_dims(x);
        let a = self.scaled(x);
        let (w, q) = self.planar(&a);
        let (n, m) = (self.n as i32, self.m as f64);
        let mut grad = Vector::zeros(self.dims());
        // d/da_i of w^q = 2 m w^(q-1) a_i^(2n-1); at w = 0 every a_i is zero
        // and the product vanishes since 2m - 1 >= 1
        if w > 0.0 {
            let outer_slope = if self.m == self.n {
                1.0
            } else {
                w.powf(q - 1.0)
            };
            for i in 0..2 {
                grad[i] = 2.0 * m * outer_slope * a[i].powi(2 * n - 1) / self.axes[i];
            }
        }
        if self.dims() == 3 {
            let p = self.p as i32;
            grad[2] = 2.0 * p as f64 * a[2].powi(2 * p - 1) / self.axes[2];
        }
        grad
    }

    /// Analytic Hessian of the isopotential.
    pub fn hessian(&self, x: &Vector) -> DMatrix<f64> {
        self.check_dims(x);
        let d = self.dims();
        let a = self.scaled(x);
        let (w, q) = self.planar(&a);
        let (n, m) = (self.n as i32, self.m as f64);
        let mut h = DMatrix::zeros(d, d);
        if w > 0.0 {
            let slope = if self.m == self.n {
                1.0
            } else {
                w.powf(q - 1.0)
            };
            for i in 0..2 {
                for j in 0..2 {
                    let mut hij = 0.0;
                    if self.m != self.n {
                        // 2m (q - 1) w^(q-2) 2n a_i^(2n-1) a_j^(2n-1)
                        hij += 2.0
                            * m
                            * (q - 1.0)
                            * w.powf(q - 2.0)
                            * 2.0
                            * n as f64
                            * a[i].powi(2 * n - 1)
                            * a[j].powi(2 * n - 1);
                    }
                    if i == j {
                        hij += 2.0 * m * slope * (2 * n - 1) as f64 * a[i].powi(2 * n - 2);
                    }
                    h[(i, j)] = hij / (self.axes[i] * self.axes[j]);
                }
            }
        } else if self.n == 1 && self.m == 1 {
            // at the center only the quadratic case has curvature
            for i in 0..2 {
                h[(i, i)] = 2.0 / (self.axes[i] * self.axes[i]);
            }
        }
        if d == 3 {
            let p = self.p as i32;
            h[(2, 2)] =
                (2 * p * (2 * p - 1)) as f64 * a[2].powi(2 * p - 2) / (self.axes[2] * self.axes[2]);
        }
        h
    }

    /// `grad_x <grad C(x), v>`, i.e. the Hessian applied to `v`.
    pub fn hessian_times(&self, x: &Vector, v: &Vector) -> Vector {
        self.hessian(x) * v
    }

    /// `grad_x |grad C(x)|`; undefined where the gradient vanishes.
    pub fn grad_norm_gradient(&self, x: &Vector) -> Result<Vector> {
        let grad = self.gradient(x);
        let norm = grad.norm();
        if norm < 1e-12 {
            return Err(Error::Singularity(format!(
                "isopotential gradient vanishes (|grad C| = {norm:e})"
            )));
        }
        Ok(self.hessian(x) * grad / norm)
    }

    /// Planar boundary point at parameter angle `theta`.
    fn boundary_point(&self, theta: f64) -> Vector {
        let inv = 1.0 / self.n as f64;
        let (sin, cos) = theta.sin_cos();
        let a = cos.signum() * cos.abs().powf(inv);
        let b = sin.signum() * sin.abs().powf(inv);
        Vector::from_column_slice(&[
            self.center[0] + self.axes[0] * a,
            self.center[1] + self.axes[1] * b,
        ])
    }

    /// `count` points on the zero-level set, equally spaced in the angular
    /// parameter of the superellipse; each carries the obstacle velocity.
    pub fn discretize_boundary(&self, count: usize) -> Result<Vec<PointObstacle>> {
        if self.dims() != 2 {
            return Err(Error::Dimension(
                "boundary discretization is planar only".into(),
            ));
        }
        if count < 3 {
            return Err(Error::invalid(format!(
                "need at least 3 boundary points, got {count}"
            )));
        }
        Ok((0..count)
            .map(|k| PointObstacle {
                position: self.boundary_point(2.0 * PI * k as f64 / count as f64),
                velocity: self.velocity.clone(),
            })
            .collect())
    }

    /// Closed planar outline, for plotting.
    pub fn outline(&self, count: usize) -> Vec<Vector> {
        (0..count)
            .map(|k| self.boundary_point(2.0 * PI * k as f64 / count as f64))
            .collect()
    }
}

/// A point obstacle, possibly moving with constant velocity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PointRecord", into = "PointRecord")]
pub struct PointObstacle {
    pub position: Vector,
    pub velocity: Vector,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointRecord {
    pub position: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub velocity: Option<Vec<f64>>,
}

impl TryFrom<PointRecord> for PointObstacle {
    type Error = Error;

    fn try_from(r: PointRecord) -> Result<Self> {
        let p = PointObstacle::new(&r.position)?;
        match r.velocity {
            Some(v) => p.with_velocity(&v),
            None => Ok(p),
        }
    }
}

impl From<PointObstacle> for PointRecord {
    fn from(p: PointObstacle) -> Self {
        let velocity = if p.velocity.iter().all(|v| *v == 0.0) {
            None
        } else {
            Some(p.velocity.iter().copied().collect())
        };
        Self {
            position: p.position.iter().copied().collect(),
            velocity,
        }
    }
}

impl PointObstacle {
    pub fn new(position: &[f64]) -> Result<Self> {
        if position.is_empty() {
            return Err(Error::Dimension(
                "point obstacle needs at least one coordinate".into(),
            ));
        }
        Ok(Self {
            position: finite_vector("point obstacle position", position)?,
            velocity: Vector::zeros(position.len()),
        })
    }

    pub fn with_velocity(mut self, velocity: &[f64]) -> Result<Self> {
        if velocity.len() != self.position.len() {
            return Err(Error::Dimension(
                "point obstacle velocity has the wrong length".into(),
            ));
        }
        self.velocity = finite_vector("point obstacle velocity", velocity)?;
        Ok(self)
    }

    pub fn at_time(&self, t: f64) -> Self {
        if t == 0.0 || self.velocity.iter().all(|v| *v == 0.0) {
            return self.clone();
        }
        Self {
            position: &self.position + &self.velocity * t,
            velocity: self.velocity.clone(),
        }
    }

    /// Distance `p(x)` from the system position.
    pub fn distance(&self, x: &Vector) -> f64 {
        (x - &self.position).norm()
    }
}
