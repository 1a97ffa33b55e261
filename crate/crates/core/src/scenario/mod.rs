//! Experiment description, configuration files, orchestration and output.

mod experiment;
mod export;
mod file;

use serde::{Deserialize, Serialize};

pub use experiment::{compare, power_sweep, run_experiment, Experiment, Method, RunReport};
pub use export::{export_results, write_csv, write_plot_data, write_summary, write_trace_csv, Timing, CSV_HEADER};
pub use file::{config_hash, load_config, load_config_str, load_preset, to_toml, ConfigFile, PRESETS};

use crate::capacity::RfConfig;
use crate::channel::{ArrayShape, GainPattern};
use crate::error::{Error, Result};
use crate::geometry::{candidate_rotations, check_track_capacity, BsGeometry, RotationGrid};
use crate::optimizer::AmcmcParams;
use crate::population::{densities_from_targets, DiskRegion};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HotspotSpec {
    /// Center azimuth from the ground origin, radians.
    pub azimuth: f64,
    /// Center distance from the ground origin, m.
    pub distance: f64,
    pub radius: f64,
    /// Relative share of the hotspot users.
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserLayout {
    pub cell_radius: f64,
    /// Expected total number of users in the cell.
    pub mean_users: f64,
    /// Share of `mean_users` that lives in hotspots.
    pub hotspot_fraction: f64,
    pub hotspots: Vec<HotspotSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchLimits {
    /// Exhaustive search refuses above this many candidates.
    pub enumeration_cap: u64,
    /// LRU entries of the capacity memo; 0 disables it.
    pub cache_capacity: usize,
}

impl Default for SearchLimits {
    fn default() -> Self {
        Self {
            enumeration_cap: 100_000,
            cache_capacity: 4096,
        }
    }
}

/// Everything needed to reproduce one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub geometry: BsGeometry,
    /// Candidate positions on the track (`L`).
    pub slots: usize,
    /// Rotatable surfaces (`N_MA`).
    pub surfaces: usize,
    pub surface_shape: ArrayShape,
    pub fpa_shape: ArrayShape,
    pub pattern: GainPattern,
    pub rf: RfConfig,
    pub users: UserLayout,
    /// Monte-Carlo realizations per capacity estimate.
    pub realizations: usize,
    pub seed: u64,
    pub optimizer: AmcmcParams,
    pub search: SearchLimits,
}

impl ScenarioConfig {
    /// The `paper-default` preset.
    pub fn paper_default() -> Self {
        load_preset("paper-default").expect("built-in preset is valid")
    }

    pub fn grid(&self) -> Result<RotationGrid> {
        candidate_rotations(self.slots)
    }

    /// `M = M_MA N_MA + 3 M_FA`.
    pub fn total_antennas(&self) -> usize {
        self.surface_shape.total() * self.surfaces + 3 * self.fpa_shape.total()
    }

    /// Cell disk followed by the hotspot disks, with densities set from the
    /// expected user counts.
    pub fn regions(&self) -> Result<Vec<DiskRegion>> {
        let u = &self.users;
        let mut regions = vec![DiskRegion::cell(u.cell_radius, 0.0)];
        regions.extend(u.hotspots.iter().map(|h| DiskRegion {
            azimuth: h.azimuth,
            distance: h.distance,
            radius: h.radius,
            density: 0.0,
        }));
        let weights: Vec<f64> = u.hotspots.iter().map(|h| h.weight).collect();
        densities_from_targets(u.mean_users, &weights, u.hotspot_fraction, &regions)
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        if self.slots == 0 {
            return Err(Error::config("track.slots", "must be >= 1"));
        }
        if self.surfaces >= self.slots {
            return Err(Error::config(
                "track.surfaces",
                format!("must be fewer than the {} slots, got {}", self.slots, self.surfaces),
            ));
        }
        if !check_track_capacity(self.slots, self.geometry.r2, self.geometry.d_min) {
            let limit = (std::f64::consts::TAU * self.geometry.r2 / self.geometry.d_min).floor();
            return Err(Error::config(
                "track.slots",
                format!(
                    "{} slots overlap on a track of radius {} m with spacing {} m (at most {limit})",
                    self.slots, self.geometry.r2, self.geometry.d_min
                ),
            ));
        }
        if !self.surface_shape.is_valid() {
            return Err(Error::config("arrays.surface", "both dimensions must be >= 1"));
        }
        if !self.fpa_shape.is_valid() {
            return Err(Error::config("arrays.fpa", "both dimensions must be >= 1"));
        }
        if !(self.pattern.side_lobe_db >= 0.0) {
            return Err(Error::config("pattern.side_lobe_db", "must be >= 0"));
        }
        if !(self.pattern.beamwidth > 0.0) {
            return Err(Error::config("pattern.beamwidth_deg", "must be > 0"));
        }
        if !self.pattern.max_gain_dbi.is_finite() {
            return Err(Error::config("pattern.max_gain_dbi", "must be finite"));
        }
        self.rf.validate()?;
        self.validate_users()?;
        if self.realizations == 0 {
            return Err(Error::config("realizations", "must be >= 1"));
        }
        self.optimizer.validate()?;
        Ok(())
    }

    fn validate_users(&self) -> Result<()> {
        let u = &self.users;
        if !(u.cell_radius > 0.0) {
            return Err(Error::config("users.cell_radius_m", "must be > 0"));
        }
        if !(u.mean_users >= 0.0 && u.mean_users.is_finite()) {
            return Err(Error::config("users.mean_users", "must be finite and >= 0"));
        }
        if !(0.0..=1.0).contains(&u.hotspot_fraction) {
            return Err(Error::config("users.hotspot_fraction", "must lie in [0, 1]"));
        }
        if u.hotspots.is_empty() && u.hotspot_fraction > 0.0 {
            return Err(Error::config(
                "users.hotspot_fraction",
                "must be 0 when no hotspots are configured",
            ));
        }
        for (i, h) in u.hotspots.iter().enumerate() {
            if !(h.radius > 0.0) {
                return Err(Error::config(format!("users.hotspots[{i}].radius_m"), "must be > 0"));
            }
            if !(h.distance >= 0.0) {
                return Err(Error::config(format!("users.hotspots[{i}].distance_m"), "must be >= 0"));
            }
            if !(h.weight > 0.0) {
                return Err(Error::config(format!("users.hotspots[{i}].weight"), "must be > 0"));
            }
        }
        Ok(())
    }
}
