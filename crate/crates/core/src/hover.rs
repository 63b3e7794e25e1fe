//! Hovering jitter: bounded displacement and attitude perturbations.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, invalid, Result};
use crate::geometry::{RotationAngles, UavState, Vec3};

/// Default attitude jitter half-width, 10 degrees.
pub const DEFAULT_ANGLE_MAX: f64 = 10.0 * std::f64::consts::PI / 180.0;
/// Default displacement tolerance as a fraction of the UAV spacing.
pub const DEFAULT_TOLERANCE_FRACTION: f64 = 0.30;

/// Half-widths of the uniform hover perturbations.
///
/// When `tolerance_fraction` is set it overrides the absolute displacement
/// bounds: each axis gets `fraction * spacing`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HoverSpec {
    pub dx_max: f64,
    pub dy_max: f64,
    pub dz_max: f64,
    pub angle_max: f64,
    pub tolerance_fraction: Option<f64>,
}

impl Default for HoverSpec {
    fn default() -> Self {
        Self {
            dx_max: 0.0,
            dy_max: 0.0,
            dz_max: 0.0,
            angle_max: DEFAULT_ANGLE_MAX,
            tolerance_fraction: Some(DEFAULT_TOLERANCE_FRACTION),
        }
    }
}

impl HoverSpec {
    /// No hovering at all.
    pub fn still() -> Self {
        Self {
            dx_max: 0.0,
            dy_max: 0.0,
            dz_max: 0.0,
            angle_max: 0.0,
            tolerance_fraction: None,
        }
    }

    /// Same bound on every displacement axis, no attitude jitter.
    pub fn displacement_only(delta: f64) -> Self {
        Self {
            dx_max: delta,
            dy_max: delta,
            dz_max: delta,
            angle_max: 0.0,
            tolerance_fraction: None,
        }
    }

    pub fn from_fraction(fraction: f64, angle_max: f64) -> Self {
        Self {
            dx_max: 0.0,
            dy_max: 0.0,
            dz_max: 0.0,
            angle_max,
            tolerance_fraction: Some(fraction),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("dx_max", self.dx_max),
            ("dy_max", self.dy_max),
            ("dz_max", self.dz_max),
            ("angle_max", self.angle_max),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(name, "must be a finite value >= 0"));
            }
        }
        if let Some(f) = self.tolerance_fraction {
            if !(0.0..=1.0).contains(&f) {
                return Err(invalid("tolerance_fraction", "must lie in [0, 1]"));
            }
        }
        Ok(())
    }

    /// Effective per-axis displacement half-widths for a swarm with the
    /// given spacing.
    pub fn displacement_bounds(&self, spacing: f64) -> Vec3 {
        match self.tolerance_fraction {
            Some(f) => Vec3::new(f * spacing, f * spacing, f * spacing),
            None => Vec3::new(self.dx_max, self.dy_max, self.dz_max),
        }
    }

    /// The same spec with the fraction folded into absolute bounds.
    pub fn resolved(&self, spacing: f64) -> HoverSpec {
        let b = self.displacement_bounds(spacing);
        HoverSpec {
            dx_max: b.x,
            dy_max: b.y,
            dz_max: b.z,
            angle_max: self.angle_max,
            tolerance_fraction: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Perturbation {
    pub displacement: Vec3,
    pub rotation: RotationAngles,
}

impl Perturbation {
    pub const ZERO: Perturbation = Perturbation {
        displacement: Vec3::ZERO,
        rotation: RotationAngles::ZERO,
    };
}

/// Draws one perturbation. Six uniforms are consumed in a fixed order
/// (x, y, z, yaw, pitch, roll) regardless of which bounds are zero, so
/// streams stay aligned across specs.
pub fn sample_perturbation<R: Rng + ?Sized>(
    spec: &HoverSpec,
    spacing: f64,
    rng: &mut R,
) -> Perturbation {
    let b = spec.displacement_bounds(spacing);
    let mut draw = |w: f64| {
        let u: f64 = rng.random();
        if w == 0.0 {
            0.0
        } else {
            // Inclusive map of [0, 1) onto [-w, w].
            (-w + 2.0 * w * u).clamp(-w, w)
        }
    };
    let displacement = Vec3::new(draw(b.x), draw(b.y), draw(b.z));
    let a = spec.angle_max;
    let rotation = RotationAngles::new(draw(a), draw(a), draw(a));
    Perturbation {
        displacement,
        rotation,
    }
}

/// Draws `count` independent perturbations.
pub fn sample_perturbations<R: Rng + ?Sized>(
    spec: &HoverSpec,
    spacing: f64,
    count: usize,
    rng: &mut R,
) -> Vec<Perturbation> {
    (0..count)
        .map(|_| sample_perturbation(spec, spacing, rng))
        .collect()
}

/// Adds each perturbation to the matching nominal state. Power and phase
/// are untouched.
pub fn apply_hover(states: &[UavState], perturbations: &[Perturbation]) -> Result<Vec<UavState>> {
    check_len(states.len(), perturbations.len())?;
    Ok(states
        .iter()
        .zip(perturbations)
        .map(|(s, p)| UavState {
            position: s.position + p.displacement,
            rotation: s.rotation.compose_additive(p.rotation),
            ..*s
        })
        .collect())
}
