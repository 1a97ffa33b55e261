//! Heuristic benchmark placements.
//!
//! * Scheme 1: `N_MA / W` slots nearest to each hotspot azimuth.
//! * Scheme 2: slots split across hotspots in proportion to their expected
//!   user counts, then nearest-slot allocation.
//! * Scheme 3: no track surfaces; the same antenna budget spread over the
//!   three sector arrays.

use serde::{Deserialize, Serialize};

use crate::capacity::{average_capacity, CapacityEstimate};
use crate::channel::ArrayShape;
use crate::error::{Error, Result};
use crate::geometry::{wrap_angle_delta, RotationGrid};
use crate::population::RealizationBatch;
use crate::scenario::ScenarioConfig;

const TIE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeResult {
    pub label: String,
    /// Surface azimuths; empty for the sector-only scheme.
    pub rotations: Vec<f64>,
    /// Grid slots behind `rotations`, ascending.
    pub slots: Vec<usize>,
    pub capacity: CapacityEstimate,
}

/// For each `(azimuth, count)` in order, claims the `count` unclaimed grid
/// slots with the smallest wrapped distance to `azimuth` (ties to the lower
/// slot). Returns all claimed slots ascending.
pub fn nearest_slots(grid: &RotationGrid, targets: &[(f64, usize)]) -> Result<Vec<usize>> {
    let wanted: usize = targets.iter().map(|t| t.1).sum();
    if wanted > grid.len() {
        return Err(Error::SchemeInapplicable(format!(
            "{wanted} slots requested from a grid of {}",
            grid.len()
        )));
    }
    let mut claimed = vec![false; grid.len()];
    for &(azimuth, count) in targets {
        for _ in 0..count {
            // Distances within TIE_EPS are ties; symmetric slots around a
            // hotspot otherwise differ only by rounding.
            let mut best: Option<(f64, usize)> = None;
            for l in (0..grid.len()).filter(|&l| !claimed[l]) {
                let d = wrap_angle_delta(grid.angle(l), azimuth).abs();
                if best.is_none_or(|(bd, _)| d < bd - TIE_EPS) {
                    best = Some((d, l));
                }
            }
            if let Some((_, l)) = best {
                claimed[l] = true;
            }
        }
    }
    Ok((0..grid.len()).filter(|&l| claimed[l]).collect())
}

fn hotspot_azimuths(scenario: &ScenarioConfig) -> Result<Vec<f64>> {
    if scenario.users.hotspots.is_empty() {
        return Err(Error::SchemeInapplicable("scenario has no hotspots".into()));
    }
    Ok(scenario.users.hotspots.iter().map(|h| h.azimuth).collect())
}

pub fn scheme1_slots(scenario: &ScenarioConfig) -> Result<Vec<usize>> {
    let azimuths = hotspot_azimuths(scenario)?;
    let w = azimuths.len();
    if scenario.surfaces % w != 0 {
        return Err(Error::SchemeInapplicable(format!(
            "scheme1 needs the surface count ({}) divisible by the hotspot count ({w})",
            scenario.surfaces
        )));
    }
    let per = scenario.surfaces / w;
    let targets: Vec<_> = azimuths.into_iter().map(|a| (a, per)).collect();
    nearest_slots(&scenario.grid()?, &targets)
}

pub fn scheme2_slots(scenario: &ScenarioConfig) -> Result<Vec<usize>> {
    let azimuths = hotspot_azimuths(scenario)?;
    let regions = scenario.regions()?;
    let expected: Vec<f64> = regions[1..].iter().map(|r| r.expected_count()).collect();
    let total: f64 = expected.iter().sum();
    if !(total > 0.0) {
        return Err(Error::SchemeInapplicable(
            "scheme2 needs hotspots with nonzero expected users".into(),
        ));
    }
    let mut targets = Vec::with_capacity(azimuths.len());
    for (a, k) in azimuths.into_iter().zip(expected) {
        let share = scenario.surfaces as f64 * k / total;
        let rounded = share.round();
        if (share - rounded).abs() > 1e-9 {
            return Err(Error::SchemeInapplicable(format!(
                "scheme2 split of {} surfaces gives a non-integer share {share}",
                scenario.surfaces
            )));
        }
        targets.push((a, rounded as usize));
    }
    nearest_slots(&scenario.grid()?, &targets)
}

fn evaluate_slots(
    label: &str,
    slots: Vec<usize>,
    scenario: &ScenarioConfig,
    batch: &RealizationBatch,
) -> Result<SchemeResult> {
    let rotations = scenario.grid()?.angles_of(&slots);
    let capacity = average_capacity(batch, &rotations, scenario)?;
    Ok(SchemeResult {
        label: label.to_string(),
        rotations,
        slots,
        capacity,
    })
}

pub fn scheme1(scenario: &ScenarioConfig, batch: &RealizationBatch) -> Result<SchemeResult> {
    evaluate_slots("scheme1", scheme1_slots(scenario)?, scenario, batch)
}

pub fn scheme2(scenario: &ScenarioConfig, batch: &RealizationBatch) -> Result<SchemeResult> {
    evaluate_slots("scheme2", scheme2_slots(scenario)?, scenario, batch)
}

/// Sector-only variant with the same total antenna count. Each sector array
/// keeps its vertical element count and grows horizontally.
pub fn scheme3_scenario(scenario: &ScenarioConfig) -> Result<ScenarioConfig> {
    let total = scenario.total_antennas();
    if total % 3 != 0 {
        return Err(Error::SchemeInapplicable(format!(
            "scheme3 needs the antenna total ({total}) divisible by 3"
        )));
    }
    let per_array = total / 3;
    let vertical = scenario.fpa_shape.vertical;
    if per_array % vertical != 0 {
        return Err(Error::SchemeInapplicable(format!(
            "scheme3 cannot shape {per_array} antennas with {vertical} vertical elements"
        )));
    }
    let mut variant = scenario.clone();
    variant.surfaces = 0;
    variant.fpa_shape = ArrayShape::new(per_array / vertical, vertical);
    Ok(variant)
}

pub fn scheme3(scenario: &ScenarioConfig, batch: &RealizationBatch) -> Result<SchemeResult> {
    let variant = scheme3_scenario(scenario)?;
    let capacity = average_capacity(batch, &[], &variant)?;
    Ok(SchemeResult {
        label: "scheme3".into(),
        rotations: Vec::new(),
        slots: Vec::new(),
        capacity,
    })
}
