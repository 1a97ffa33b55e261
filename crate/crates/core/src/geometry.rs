//! Base-station geometry: user arrival angles, the discrete rotation grid on
//! the circular track, and angle arithmetic.
//!
//! All angles are radians. The reference point is the track center
//! `o_MA = [0, 0, h2]`; users live on the ground plane `z = 0`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BsGeometry {
    /// Horizontal distance from the ground center to each sector array center.
    pub r1: f64,
    /// Height of the sector array centers.
    pub h1: f64,
    /// Radius of the circular track.
    pub r2: f64,
    /// Height of the track plane.
    pub h2: f64,
    /// Fixed azimuths of the three sector arrays.
    pub fpa_rotations: [f64; 3],
    /// Minimum spacing between the centers of two surfaces on the track.
    pub d_min: f64,
}

impl BsGeometry {
    pub fn validate(&self) -> Result<()> {
        if !(self.r1 > 0.0) {
            return Err(Error::config("geometry.r1_m", "must be > 0"));
        }
        if !(self.r2 > 0.0) {
            return Err(Error::config("geometry.r2_m", "must be > 0"));
        }
        if !(self.h1 > 0.0 && self.h1 < self.h2) {
            return Err(Error::config(
                "geometry.h1_m",
                format!("need 0 < h1 < h2, got h1={} h2={}", self.h1, self.h2),
            ));
        }
        for (i, &rot) in self.fpa_rotations.iter().enumerate() {
            if !(0.0..TAU).contains(&rot) {
                return Err(Error::config(
                    "geometry.fpa_rotations_deg",
                    format!("entry {i} = {rot} rad is outside [0, 2pi)"),
                ));
            }
        }
        if !(self.d_min > 0.0) {
            return Err(Error::config("geometry.d_min_m", "must be > 0"));
        }
        Ok(())
    }
}

/// Arrival direction and range of one user, seen from the track center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserAngles {
    /// Elevation in `[pi/2, pi]`; `pi/2` is the horizon.
    pub theta: f64,
    /// Azimuth in `[0, 2pi)`.
    pub phi: f64,
    /// Distance to the track center.
    pub d: f64,
}

/// The `L` candidate azimuths equally spaced on the track.
///
/// Slot `l` (0-based storage) sits at `(2(l+1) - 1) * pi / L`, i.e. the
/// 1-based slot `l` sits at `(2l - 1) pi / L`.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationGrid {
    angles: Vec<f64>,
}

impl RotationGrid {
    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn angle(&self, slot: usize) -> f64 {
        self.angles[slot]
    }

    /// Angles for the given 0-based slots, in the order given.
    pub fn angles_of(&self, slots: &[usize]) -> Vec<f64> {
        slots.iter().map(|&s| self.angles[s]).collect()
    }

    pub fn spacing(&self) -> f64 {
        TAU / self.angles.len() as f64
    }
}

pub fn candidate_rotations(slots: usize) -> Result<RotationGrid> {
    if slots == 0 {
        return Err(Error::InvalidArgument(
            "rotation grid needs at least one slot".into(),
        ));
    }
    let l = slots as f64;
    let angles = (1..=slots)
        .map(|i| (2.0 * i as f64 - 1.0) * PI / l)
        .collect();
    Ok(RotationGrid { angles })
}

/// Whether `slots` surfaces of center spacing `d_min` fit on a track of
/// radius `r2` without overlapping.
pub fn check_track_capacity(slots: usize, r2: f64, d_min: f64) -> bool {
    let max_slots = (TAU * r2 / d_min).floor();
    (slots as f64) <= max_slots
}

pub fn user_angles(x: f64, y: f64, geometry: &BsGeometry) -> Result<UserAngles> {
    if x == 0.0 && y == 0.0 {
        return Err(Error::DegeneratePosition { x, y });
    }
    let h2 = geometry.h2;
    let rho = x.hypot(y);
    let theta = (h2 / rho).atan() + FRAC_PI_2;
    let phi = azimuth(x, y);
    let d = (rho * rho + h2 * h2).sqrt();
    Ok(UserAngles { theta, phi, d })
}

/// Three-branch azimuth, with the `x = 0` limits `pi/2` and `3pi/2` and the
/// `y = 0, x > 0` case mapped to 0.
fn azimuth(x: f64, y: f64) -> f64 {
    let phi = if x > 0.0 {
        let base = (y / x).atan();
        if y < 0.0 {
            base + TAU
        } else {
            base
        }
    } else if x < 0.0 {
        (y / x).atan() + PI
    } else if y > 0.0 {
        FRAC_PI_2
    } else {
        3.0 * FRAC_PI_2
    };
    // atan of a tiny negative ratio plus 2pi can round up to exactly 2pi.
    if phi >= TAU {
        0.0
    } else {
        phi
    }
}

/// `a - b` wrapped to `(-pi, pi]`.
pub fn wrap_angle_delta(a: f64, b: f64) -> f64 {
    let raw = a - b;
    // Differences already in range are returned untouched, which keeps the
    // wrap exactly odd there.
    if raw > -PI && raw <= PI {
        return raw;
    }
    let d = raw.rem_euclid(TAU);
    if d > PI {
        d - TAU
    } else {
        d
    }
}
