//! Stochastic-geometry user placement: an HPPP over the whole cell plus
//! independent HPPPs over hotspot disks, and seeded Monte-Carlo batches.

use std::f64::consts::PI;
use std::io::{BufRead, Write};

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::geometry::{user_angles, BsGeometry, UserAngles};
use crate::rng::{substream, Stream};

/// Disk `b(psi, D, R)` carrying an HPPP of the given density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskRegion {
    /// Azimuth of the disk center from the ground origin.
    pub azimuth: f64,
    /// Distance of the disk center from the ground origin.
    pub distance: f64,
    pub radius: f64,
    /// Users per square meter.
    pub density: f64,
}

impl DiskRegion {
    /// The whole cell: a disk of radius `radius` centered at the origin.
    pub fn cell(radius: f64, density: f64) -> Self {
        Self {
            azimuth: 0.0,
            distance: 0.0,
            radius,
            density,
        }
    }

    pub fn center(&self) -> (f64, f64) {
        (
            self.distance * self.azimuth.cos(),
            self.distance * self.azimuth.sin(),
        )
    }

    pub fn area(&self) -> f64 {
        PI * self.radius * self.radius
    }

    pub fn expected_count(&self) -> f64 {
        self.density * self.area()
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        let (cx, cy) = self.center();
        (x - cx).hypot(y - cy) <= self.radius
    }
}

/// Sets densities so that the hotspots carry `hotspot_fraction * mean_users`
/// users on average, split by `ratios`, and the cell carries the rest.
///
/// `regions[0]` is the cell; `regions[1..]` are the hotspots in ratio order.
pub fn densities_from_targets(
    mean_users: f64,
    ratios: &[f64],
    hotspot_fraction: f64,
    regions: &[DiskRegion],
) -> Result<Vec<DiskRegion>> {
    let Some((cell, hotspots)) = regions.split_first() else {
        return Err(Error::InvalidArgument("no cell region given".into()));
    };
    if ratios.len() != hotspots.len() {
        return Err(Error::InvalidArgument(format!(
            "{} hotspot ratios for {} hotspots",
            ratios.len(),
            hotspots.len()
        )));
    }
    if !(mean_users >= 0.0 && mean_users.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "mean user count must be finite and >= 0, got {mean_users}"
        )));
    }
    if !(0.0..=1.0).contains(&hotspot_fraction) {
        return Err(Error::InvalidArgument(format!(
            "hotspot fraction {hotspot_fraction} outside [0, 1]"
        )));
    }
    if ratios.iter().any(|&r| !(r > 0.0)) {
        return Err(Error::InvalidArgument("hotspot ratios must be > 0".into()));
    }
    if regions.iter().any(|r| !(r.radius > 0.0)) {
        return Err(Error::InvalidArgument("region radius must be > 0".into()));
    }

    let ratio_sum: f64 = ratios.iter().sum();
    let hotspot_users = hotspot_fraction * mean_users;
    let mut out = Vec::with_capacity(regions.len());
    out.push(DiskRegion {
        density: (1.0 - hotspot_fraction) * mean_users / cell.area(),
        ..*cell
    });
    for (h, &r) in hotspots.iter().zip(ratios) {
        let expected = hotspot_users * r / ratio_sum;
        out.push(DiskRegion {
            density: expected / h.area(),
            ..*h
        });
    }
    Ok(out)
}

/// One sampled set of ground positions with their arrival angles.
#[derive(Debug, Clone, PartialEq)]
pub struct UserRealization {
    positions: Vec<(f64, f64)>,
    angles: Vec<UserAngles>,
    region_counts: Vec<usize>,
}

impl UserRealization {
    pub fn from_positions(positions: Vec<(f64, f64)>, geometry: &BsGeometry) -> Result<Self> {
        let n = positions.len();
        Self::with_counts(positions, vec![n], geometry)
    }

    fn with_counts(
        positions: Vec<(f64, f64)>,
        region_counts: Vec<usize>,
        geometry: &BsGeometry,
    ) -> Result<Self> {
        let angles = positions
            .iter()
            .map(|&(x, y)| user_angles(x, y, geometry))
            .collect::<Result<_>>()?;
        Ok(Self {
            positions,
            angles,
            region_counts,
        })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[(f64, f64)] {
        &self.positions
    }

    pub fn angles(&self) -> &[UserAngles] {
        &self.angles
    }

    /// Number of users contributed by each region, in region order.
    pub fn region_counts(&self) -> &[usize] {
        &self.region_counts
    }
}

fn uniform_in_disk<R: Rng + ?Sized>(region: &DiskRegion, rng: &mut R) -> (f64, f64) {
    let (cx, cy) = region.center();
    loop {
        let r = region.radius * rng.random::<f64>().sqrt();
        let a = rng.random_range(0.0..2.0 * PI);
        let (x, y) = (cx + r * a.cos(), cy + r * a.sin());
        // The origin has no azimuth; redraw.
        if x != 0.0 || y != 0.0 {
            return (x, y);
        }
    }
}

pub fn sample_realization<R: Rng + ?Sized>(
    regions: &[DiskRegion],
    geometry: &BsGeometry,
    rng: &mut R,
) -> Result<UserRealization> {
    let mut positions = Vec::new();
    let mut counts = Vec::with_capacity(regions.len());
    for region in regions {
        let mean = region.expected_count();
        let count = if mean > 0.0 {
            let poisson = Poisson::new(mean).map_err(|e| {
                Error::InvalidArgument(format!("Poisson mean {mean}: {e}"))
            })?;
            poisson.sample(rng) as usize
        } else {
            0
        };
        counts.push(count);
        positions.extend((0..count).map(|_| uniform_in_disk(region, rng)));
    }
    UserRealization::with_counts(positions, counts, geometry)
}

/// A fixed Monte-Carlo ensemble. Reused unchanged for every candidate
/// rotation set so the objective is deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct RealizationBatch {
    realizations: Vec<UserRealization>,
    seed: u64,
}

impl RealizationBatch {
    pub fn new(realizations: Vec<UserRealization>, seed: u64) -> Self {
        Self { realizations, seed }
    }

    pub fn realizations(&self) -> &[UserRealization] {
        &self.realizations
    }

    pub fn len(&self) -> usize {
        self.realizations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.realizations.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn mean_users(&self) -> f64 {
        if self.realizations.is_empty() {
            return 0.0;
        }
        self.realizations.iter().map(|r| r.len()).sum::<usize>() as f64
            / self.realizations.len() as f64
    }

    /// Text dump keyed by `key` (normally a scenario hash). Coordinates are
    /// written as raw IEEE-754 bits so reloading is exact.
    pub fn write_to<W: Write>(&self, mut out: W, key: &str) -> Result<()> {
        writeln!(out, "hfma-batch 1")?;
        writeln!(out, "seed {}", self.seed)?;
        writeln!(out, "key {key}")?;
        writeln!(out, "realizations {}", self.realizations.len())?;
        for r in &self.realizations {
            write!(out, "users {}", r.len())?;
            for c in &r.region_counts {
                write!(out, " {c}")?;
            }
            writeln!(out)?;
            for &(x, y) in &r.positions {
                writeln!(out, "{:016x} {:016x}", x.to_bits(), y.to_bits())?;
            }
        }
        Ok(())
    }

    /// Reads a dump written by [`write_to`](Self::write_to), checking that
    /// it carries `key`.
    pub fn read_from<R: BufRead>(input: R, key: &str, geometry: &BsGeometry) -> Result<Self> {
        let mut lines = input.lines();
        let mut next = move || -> Result<String> {
            lines
                .next()
                .ok_or_else(|| Error::BatchFormat("unexpected end of file".into()))?
                .map_err(Error::from)
        };
        let bad = |what: &str| Error::BatchFormat(what.to_string());

        if next()?.trim() != "hfma-batch 1" {
            return Err(bad("missing header"));
        }
        let field = |line: String, name: &str| -> Result<String> {
            line.strip_prefix(name)
                .and_then(|s| s.strip_prefix(' '))
                .map(str::to_string)
                .ok_or_else(|| Error::BatchFormat(format!("expected `{name}` line")))
        };
        let seed: u64 = field(next()?, "seed")?
            .parse()
            .map_err(|_| bad("bad seed"))?;
        let stored_key = field(next()?, "key")?;
        if stored_key != key {
            return Err(Error::BatchFormat(format!(
                "batch key {stored_key} does not match scenario key {key}"
            )));
        }
        let count: usize = field(next()?, "realizations")?
            .parse()
            .map_err(|_| bad("bad realization count"))?;
        let mut realizations = Vec::with_capacity(count);
        for _ in 0..count {
            let header = field(next()?, "users")?;
            let nums: Vec<usize> = header
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| bad("bad user count")))
                .collect::<Result<_>>()?;
            let (&users, region_counts) = nums.split_first().ok_or_else(|| bad("bad users line"))?;
            let mut positions = Vec::with_capacity(users);
            for _ in 0..users {
                let line = next()?;
                let mut parts = line.split_whitespace().map(|t| {
                    u64::from_str_radix(t, 16)
                        .map(f64::from_bits)
                        .map_err(|_| bad("bad coordinate"))
                });
                let x = parts.next().ok_or_else(|| bad("missing x"))??;
                let y = parts.next().ok_or_else(|| bad("missing y"))??;
                positions.push((x, y));
            }
            realizations.push(UserRealization::with_counts(
                positions,
                region_counts.to_vec(),
                geometry,
            )?);
        }
        Ok(Self { realizations, seed })
    }
}

pub fn generate_batch(
    regions: &[DiskRegion],
    geometry: &BsGeometry,
    count: usize,
    seed: u64,
) -> Result<RealizationBatch> {
    if count == 0 {
        return Err(Error::InvalidArgument(
            "a batch needs at least one realization".into(),
        ));
    }
    let mut rng = substream(seed, Stream::Batch);
    let realizations = (0..count)
        .map(|_| sample_realization(regions, geometry, &mut rng))
        .collect::<Result<_>>()?;
    Ok(RealizationBatch { realizations, seed })
}
