//! Positions, directions and rigid-body rotation.
//!
//! Directions use the polar convention: `theta` is measured from the +Z axis
//! and `phi` is the azimuth from +X toward +Y, so that
//! `unit_vector(d) = (cos phi sin theta, sin phi sin theta, cos theta)`.
//!
//! Rotations are intrinsic Z-Y-X (yaw, then pitch, then roll), i.e. the
//! rotation matrix is `R = Rz(yaw) * Ry(pitch) * Rx(roll)`.

use std::f64::consts::PI;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// A point or displacement in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn distance(self, other: Vec3) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Returns `None` for the zero vector.
    pub fn normalized(self) -> Option<Vec3> {
        let n = self.norm();
        (n > 0.0).then(|| self * (1.0 / n))
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from([x, y, z]: [f64; 3]) -> Self {
        Vec3 { x, y, z }
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    if a > -PI && a <= PI {
        return a;
    }
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w == -PI {
        PI
    } else {
        w
    }
}

/// A far-field direction: polar angle `theta` from +Z and azimuth `phi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    pub theta: f64,
    pub phi: f64,
}

impl Direction {
    /// Builds a direction with both angles wrapped into `(-pi, pi]`.
    pub fn new(theta: f64, phi: f64) -> Self {
        Self {
            theta: wrap_angle(theta),
            phi: wrap_angle(phi),
        }
    }

    pub fn unit_vector(self) -> Vec3 {
        unit_vector(self)
    }
}

/// `(cos phi sin theta, sin phi sin theta, cos theta)`.
pub fn unit_vector(d: Direction) -> Vec3 {
    let (st, ct) = d.theta.sin_cos();
    let (sp, cp) = d.phi.sin_cos();
    Vec3::new(cp * st, sp * st, ct)
}

/// Direction of `to` as seen from `from`.
pub fn direction_between(from: Vec3, to: Vec3) -> Result<Direction> {
    let delta = to - from;
    let dist = delta.norm();
    if dist == 0.0 || !dist.is_finite() {
        return Err(Error::DegenerateDirection);
    }
    let theta = (delta.z / dist).clamp(-1.0, 1.0).acos();
    let phi = delta.y.atan2(delta.x);
    Ok(Direction { theta, phi })
}

/// Yaw/pitch/roll attitude in radians.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RotationAngles {
    pub yaw: f64,
    pub pitch: f64,
    pub roll: f64,
}

impl RotationAngles {
    pub const ZERO: RotationAngles = RotationAngles {
        yaw: 0.0,
        pitch: 0.0,
        roll: 0.0,
    };

    pub fn new(yaw: f64, pitch: f64, roll: f64) -> Self {
        Self { yaw, pitch, roll }
    }

    /// Component-wise sum, wrapped into `(-pi, pi]`.
    pub fn compose_additive(self, other: RotationAngles) -> RotationAngles {
        RotationAngles {
            yaw: wrap_angle(self.yaw + other.yaw),
            pitch: wrap_angle(self.pitch + other.pitch),
            roll: wrap_angle(self.roll + other.roll),
        }
    }

    pub fn is_zero(self) -> bool {
        self.yaw == 0.0 && self.pitch == 0.0 && self.roll == 0.0
    }

    /// Row-major `Rz(yaw) * Ry(pitch) * Rx(roll)`.
    pub fn matrix(self) -> [[f64; 3]; 3] {
        let (sy, cy) = self.yaw.sin_cos();
        let (sp, cp) = self.pitch.sin_cos();
        let (sr, cr) = self.roll.sin_cos();
        [
            [cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr],
            [sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr],
            [-sp, cp * sr, cp * cr],
        ]
    }
}

pub fn rotate_vector(v: Vec3, angles: RotationAngles) -> Vec3 {
    let m = angles.matrix();
    Vec3::new(
        m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
        m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
        m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
    )
}

/// Rectangular `l_u x c_u x r_u` swarm with uniform spacing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwarmLayout {
    pub l_u: usize,
    pub c_u: usize,
    pub r_u: usize,
    pub spacing_delta: f64,
    pub origin: Vec3,
}

impl SwarmLayout {
    pub fn new(
        l_u: usize,
        c_u: usize,
        r_u: usize,
        spacing_delta: f64,
        origin: Vec3,
    ) -> Result<Self> {
        let layout = Self {
            l_u,
            c_u,
            r_u,
            spacing_delta,
            origin,
        };
        layout.validate()?;
        Ok(layout)
    }

    pub fn validate(&self) -> Result<()> {
        if self.l_u == 0 {
            return Err(invalid("l_u", "must be at least 1"));
        }
        if self.c_u == 0 {
            return Err(invalid("c_u", "must be at least 1"));
        }
        if self.r_u == 0 {
            return Err(invalid("r_u", "must be at least 1"));
        }
        if !(self.spacing_delta > 0.0 && self.spacing_delta.is_finite()) {
            return Err(invalid("spacing_delta", "must be a finite value > 0"));
        }
        if !self.origin.is_finite() {
            return Err(invalid("origin", "must be finite"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.l_u * self.c_u * self.r_u
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Kinematic and radio state of one UAV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UavState {
    pub position: Vec3,
    pub rotation: RotationAngles,
    /// Linear transmit power `P_k` in watts.
    pub power: f64,
    /// Transmit phase `zeta_k` in radians.
    pub phase: f64,
}

impl UavState {
    pub fn at(position: Vec3) -> Self {
        Self {
            position,
            rotation: RotationAngles::ZERO,
            power: 1.0,
            phase: 0.0,
        }
    }
}

/// Grid positions `origin + delta * (i, j, k)`, X fastest, then Y, then Z.
pub fn build_grid_layout(layout: &SwarmLayout) -> Vec<UavState> {
    let d = layout.spacing_delta;
    let mut out = Vec::with_capacity(layout.len());
    for k in 0..layout.r_u {
        for j in 0..layout.c_u {
            for i in 0..layout.l_u {
                let offset = Vec3::new(i as f64 * d, j as f64 * d, k as f64 * d);
                out.push(UavState::at(layout.origin + offset));
            }
        }
    }
    out
}

/// Unweighted centroid of the UAV positions; the array reference point.
pub fn centroid(uavs: &[UavState]) -> Vec3 {
    if uavs.is_empty() {
        return Vec3::ZERO;
    }
    let sum = uavs.iter().fold(Vec3::ZERO, |acc, u| acc + u.position);
    sum * (1.0 / uavs.len() as f64)
}
