//! TOML configuration files.
//!
//! A file may start from a built-in preset (`preset = "paper-default"`) and
//! override any subset of its keys; dotted-path overrides from the command
//! line apply last. Units are converted here and nowhere else: degrees to
//! radians, dBm to watts, dB to linear.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use toml::{Table, Value};

use super::{HotspotSpec, ScenarioConfig, SearchLimits, UserLayout};
use crate::capacity::RfConfig;
use crate::channel::{ArrayShape, GainPattern};
use crate::error::{Error, Result};
use crate::geometry::BsGeometry;
use crate::optimizer::AmcmcParams;

const DEFAULT_PRESET: &str = r#"
seed = 1
realizations = 100

[geometry]
r1_m = 1.0
h1_m = 9.0
r2_m = 1.0
h2_m = 10.0
fpa_rotations_deg = [90.0, 210.0, 330.0]
# d_min_m defaults to (wavelength / 2) * surface horizontal element count

[track]
slots = 40
surfaces = 6

[arrays]
surface = { horizontal = 2, vertical = 8 }
fpa = { horizontal = 8, vertical = 8 }

[pattern]
max_gain_dbi = 0.0
side_lobe_db = 25.0
beamwidth_deg = 65.0

[rf]
p0_dbm = 0.0
noise_dbm = -80.0
wavelength_m = 0.125
beta0_db = -40.0

[users]
cell_radius_m = 100.0
mean_users = 300.0
hotspot_fraction = 0.5
hotspots = [
    { azimuth_deg = 45.0, distance_m = 50.0, radius_m = 10.0, weight = 1.0 },
    { azimuth_deg = 210.0, distance_m = 60.0, radius_m = 15.0, weight = 2.0 },
    { azimuth_deg = 315.0, distance_m = 70.0, radius_m = 20.0, weight = 3.0 },
]

[optimizer]
tau = 1.0
inner_iterations = 20
outer_iterations = 10
p_floor = 0.01
max_proposal_retries = 1000

[search]
enumeration_cap = 100000
cache_capacity = 4096
"#;

/// Small-array scenario where exhaustive search is affordable.
const ESM_COMPARISON: &str = r#"
preset = "paper-default"
realizations = 20

[track]
slots = 20
surfaces = 3

[arrays]
surface = { horizontal = 2, vertical = 2 }
fpa = { horizontal = 4, vertical = 4 }

[users]
mean_users = 75.0
"#;

/// Built-in presets by name.
pub const PRESETS: &[(&str, &str)] = &[
    ("paper-default", DEFAULT_PRESET),
    ("esm-comparison", ESM_COMPARISON),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    pub r1_m: f64,
    pub h1_m: f64,
    pub r2_m: f64,
    pub h2_m: f64,
    pub fpa_rotations_deg: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_min_m: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackSection {
    pub slots: usize,
    pub surfaces: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArraysSection {
    pub surface: ArrayShape,
    pub fpa: ArrayShape,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternSection {
    pub max_gain_dbi: f64,
    pub side_lobe_db: f64,
    pub beamwidth_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RfSection {
    pub p0_dbm: f64,
    pub noise_dbm: f64,
    pub wavelength_m: f64,
    pub beta0_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HotspotSection {
    pub azimuth_deg: f64,
    pub distance_m: f64,
    pub radius_m: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UsersSection {
    pub cell_radius_m: f64,
    pub mean_users: f64,
    pub hotspot_fraction: f64,
    #[serde(default)]
    pub hotspots: Vec<HotspotSection>,
}

/// On-disk form of [`ScenarioConfig`], in file units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    pub seed: u64,
    pub realizations: usize,
    pub geometry: GeometrySection,
    pub track: TrackSection,
    pub arrays: ArraysSection,
    pub pattern: PatternSection,
    pub rf: RfSection,
    pub users: UsersSection,
    pub optimizer: AmcmcParams,
    pub search: SearchLimits,
}

fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Rounds a converted value to 12 significant digits so that unit
/// conversions do not leak rounding noise into the canonical text.
fn tidy(x: f64) -> f64 {
    format!("{x:.11e}").parse().unwrap_or(x)
}

fn default_d_min(wavelength: f64, shape: ArrayShape) -> f64 {
    wavelength / 2.0 * shape.horizontal as f64
}

impl ConfigFile {
    pub fn into_scenario(self) -> Result<ScenarioConfig> {
        let g = &self.geometry;
        for (i, deg) in g.fpa_rotations_deg.iter().enumerate() {
            if !(0.0..360.0).contains(deg) {
                return Err(Error::config(
                    "geometry.fpa_rotations_deg",
                    format!("entry {i} = {deg} must lie in [0, 360)"),
                ));
            }
        }
        let d_min = g
            .d_min_m
            .unwrap_or_else(|| default_d_min(self.rf.wavelength_m, self.arrays.surface));
        Ok(ScenarioConfig {
            geometry: BsGeometry {
                r1: g.r1_m,
                h1: g.h1_m,
                r2: g.r2_m,
                h2: g.h2_m,
                fpa_rotations: g.fpa_rotations_deg.map(f64::to_radians),
                d_min,
            },
            slots: self.track.slots,
            surfaces: self.track.surfaces,
            surface_shape: self.arrays.surface,
            fpa_shape: self.arrays.fpa,
            pattern: GainPattern {
                max_gain_dbi: self.pattern.max_gain_dbi,
                side_lobe_db: self.pattern.side_lobe_db,
                beamwidth: self.pattern.beamwidth_deg.to_radians(),
            },
            rf: RfConfig {
                p0: dbm_to_watts(self.rf.p0_dbm),
                noise: dbm_to_watts(self.rf.noise_dbm),
                wavelength: self.rf.wavelength_m,
                beta0: db_to_linear(self.rf.beta0_db),
            },
            users: UserLayout {
                cell_radius: self.users.cell_radius_m,
                mean_users: self.users.mean_users,
                hotspot_fraction: self.users.hotspot_fraction,
                hotspots: self
                    .users
                    .hotspots
                    .iter()
                    .map(|h| HotspotSpec {
                        azimuth: h.azimuth_deg.to_radians(),
                        distance: h.distance_m,
                        radius: h.radius_m,
                        weight: h.weight,
                    })
                    .collect(),
            },
            realizations: self.realizations,
            seed: self.seed,
            optimizer: self.optimizer,
            search: self.search,
        })
    }

    pub fn from_scenario(sc: &ScenarioConfig) -> Self {
        let derived = default_d_min(sc.rf.wavelength, sc.surface_shape);
        let d_min_m = ((sc.geometry.d_min - derived).abs() > 1e-12 * derived)
            .then_some(sc.geometry.d_min);
        ConfigFile {
            preset: None,
            seed: sc.seed,
            realizations: sc.realizations,
            geometry: GeometrySection {
                r1_m: sc.geometry.r1,
                h1_m: sc.geometry.h1,
                r2_m: sc.geometry.r2,
                h2_m: sc.geometry.h2,
                fpa_rotations_deg: sc.geometry.fpa_rotations.map(|r| tidy(r.to_degrees())),
                d_min_m,
            },
            track: TrackSection {
                slots: sc.slots,
                surfaces: sc.surfaces,
            },
            arrays: ArraysSection {
                surface: sc.surface_shape,
                fpa: sc.fpa_shape,
            },
            pattern: PatternSection {
                max_gain_dbi: sc.pattern.max_gain_dbi,
                side_lobe_db: sc.pattern.side_lobe_db,
                beamwidth_deg: tidy(sc.pattern.beamwidth.to_degrees()),
            },
            rf: RfSection {
                p0_dbm: tidy(watts_to_dbm(sc.rf.p0)),
                noise_dbm: tidy(watts_to_dbm(sc.rf.noise)),
                wavelength_m: sc.rf.wavelength,
                beta0_db: tidy(10.0 * sc.rf.beta0.log10()),
            },
            users: UsersSection {
                cell_radius_m: sc.users.cell_radius,
                mean_users: sc.users.mean_users,
                hotspot_fraction: sc.users.hotspot_fraction,
                hotspots: sc
                    .users
                    .hotspots
                    .iter()
                    .map(|h| HotspotSection {
                        azimuth_deg: tidy(h.azimuth.to_degrees()),
                        distance_m: h.distance,
                        radius_m: h.radius,
                        weight: h.weight,
                    })
                    .collect(),
            },
            optimizer: sc.optimizer,
            search: sc.search,
        }
    }
}

fn parse_document(text: &str) -> Result<Table> {
    text.parse::<Table>()
        .map_err(|e| Error::config("<document>", e.message().to_string()))
}

fn merge(base: &mut Table, over: Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

fn resolve_presets(doc: Table, depth: usize) -> Result<Table> {
    let Some(name) = doc.get("preset") else {
        return Ok(doc);
    };
    let name = name
        .as_str()
        .ok_or_else(|| Error::config("preset", "must be a string"))?
        .to_string();
    if depth > 4 {
        return Err(Error::config("preset", "presets nest too deeply"));
    }
    let text = PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, t)| *t)
        .ok_or_else(|| {
            let known: Vec<_> = PRESETS.iter().map(|(n, _)| *n).collect();
            Error::config("preset", format!("unknown preset `{name}`; known: {}", known.join(", ")))
        })?;
    let mut base = resolve_presets(parse_document(text)?, depth + 1)?;
    let mut doc = doc;
    doc.remove("preset");
    merge(&mut base, doc);
    Ok(base)
}

fn parse_override_value(raw: &str) -> Value {
    format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

/// Sets `path` (dot separated; integer segments index arrays) to a TOML
/// literal, or to a bare string when `raw` is not valid TOML.
fn apply_override(doc: &mut Table, path: &str, raw: &str) -> Result<()> {
    let segments: Vec<&str> = path.split('.').collect();
    if segments.iter().any(|s| s.is_empty()) {
        return Err(Error::config(path, "malformed override path"));
    }
    let value = parse_override_value(raw);
    let (last, parents) = segments.split_last().expect("non-empty path");
    let mut cursor: &mut Value = doc
        .entry(parents.first().copied().unwrap_or(last).to_string())
        .or_insert_with(|| Value::Table(Table::new()));
    if parents.is_empty() {
        *cursor = value;
        return Ok(());
    }
    for seg in parents[1..].iter().chain(std::iter::once(last)) {
        cursor = match cursor {
            Value::Table(t) => t
                .entry(seg.to_string())
                .or_insert_with(|| Value::Table(Table::new())),
            Value::Array(a) => {
                let idx: usize = seg
                    .parse()
                    .map_err(|_| Error::config(path, format!("`{seg}` is not an array index")))?;
                let len = a.len();
                a.get_mut(idx)
                    .ok_or_else(|| Error::config(path, format!("index {idx} out of range ({len})")))?
            }
            _ => return Err(Error::config(path, format!("`{seg}` is not inside a table"))),
        };
    }
    *cursor = value;
    Ok(())
}

/// Parses, merges presets, applies `key=value` overrides, converts units and
/// validates.
pub fn load_config_str(text: &str, overrides: &[(String, String)]) -> Result<ScenarioConfig> {
    let mut doc = resolve_presets(parse_document(text)?, 0)?;
    for (path, raw) in overrides {
        apply_override(&mut doc, path, raw)?;
    }
    let file: ConfigFile = Value::Table(doc)
        .try_into()
        .map_err(|e: toml::de::Error| Error::config("<document>", e.message().to_string()))?;
    let scenario = file.into_scenario()?;
    scenario.validate()?;
    Ok(scenario)
}

pub fn load_config(path: &Path, overrides: &[(String, String)]) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        Error::config("<file>", format!("cannot read {}: {e}", path.display()))
    })?;
    load_config_str(&text, overrides)
}

pub fn load_preset(name: &str) -> Result<ScenarioConfig> {
    load_config_str(&format!("preset = {:?}", name), &[])
}

/// Canonical, fully expanded TOML text for a scenario.
pub fn to_toml(scenario: &ScenarioConfig) -> String {
    toml::to_string(&ConfigFile::from_scenario(scenario)).expect("config serializes")
}

/// Short hex digest of the canonical TOML text.
pub fn config_hash(scenario: &ScenarioConfig) -> String {
    let digest = Sha256::digest(to_toml(scenario).as_bytes());
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}
