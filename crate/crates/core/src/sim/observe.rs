//! Noisy opponent detections expressed in the ego line's Frenet frame.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::gp::OpponentObservation;
use crate::sim::vehicle::VehicleState;
use crate::track::{normalize_angle, TrackModel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseParams {
    pub sigma_d: f64,
    pub sigma_vs: f64,
    pub dropout: f64,
    pub rate_hz: f64,
    pub range: f64,
    /// Full field of view, degrees, centered on the ego heading.
    pub fov_deg: f64,
}

impl Default for NoiseParams {
    fn default() -> Self {
        Self {
            sigma_d: 0.03,
            sigma_vs: 0.15,
            dropout: 0.05,
            rate_hz: 40.0,
            range: 10.0,
            fov_deg: 270.0,
        }
    }
}

impl NoiseParams {
    pub fn noiseless() -> Self {
        Self { sigma_d: 0.0, sigma_vs: 0.0, dropout: 0.0, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), String> {
        let ok = self.sigma_d >= 0.0
            && self.sigma_vs >= 0.0
            && (0.0..1.0).contains(&self.dropout)
            && self.rate_hz > 0.0
            && self.range > 0.0
            && self.fov_deg > 0.0
            && self.fov_deg <= 360.0;
        if ok {
            Ok(())
        } else {
            Err(format!("invalid noise parameters {self:?}"))
        }
    }
}

/// True when the opponent center is within range and inside the field of view.
pub fn visible(opp: &VehicleState, ego: &VehicleState, noise: &NoiseParams) -> bool {
    let (dx, dy) = (opp.x - ego.x, opp.y - ego.y);
    if dx.hypot(dy) > noise.range {
        return false;
    }
    let bearing = normalize_angle(dy.atan2(dx) - ego.heading);
    bearing.abs() <= 0.5 * noise.fov_deg.to_radians()
}

/// Exact Frenet projection of the opponent: position plus speed along the reference.
pub fn project_opponent(opp: &VehicleState, frame: &TrackModel, s_hint: f64) -> Option<(f64, f64, f64)> {
    let f = frame.cartesian_to_frenet_near(&opp.pose(), s_hint, 3.0).ok()?;
    let reference = frame.frenet_to_cartesian(f.s, 0.0);
    let k = frame.curvature_at(f.s);
    let v_s = opp.v * normalize_angle(opp.heading - reference.heading).cos() / (1.0 - k * f.d);
    Some((f.s, f.d, v_s))
}

/// One detection attempt. Draws the dropout sample and both noise samples on every call
/// in which the opponent is visible, so the random stream does not depend on the outcome.
pub fn observe_opponent<R: Rng + ?Sized>(
    opp: &VehicleState,
    ego: &VehicleState,
    frame: &TrackModel,
    s_hint: f64,
    t: f64,
    noise: &NoiseParams,
    rng: &mut R,
) -> Option<OpponentObservation> {
    if !visible(opp, ego, noise) {
        return None;
    }
    let drop: f64 = rng.random();
    let zd: f64 = rng.sample(StandardNormal);
    let zv: f64 = rng.sample(StandardNormal);
    if drop < noise.dropout {
        return None;
    }
    let (s, d, v_s) = project_opponent(opp, frame, s_hint)?;
    Some(OpponentObservation {
        s,
        d: d + noise.sigma_d * zd,
        v_s: v_s + noise.sigma_vs * zv,
        timestamp: t,
    })
}
