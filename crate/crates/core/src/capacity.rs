//! Sum capacity of the uplink multiple-access channel.
//!
//! Two evaluation routes share one definition,
//! `log2 det(I + (P0/sigma^2) H H^H)`:
//!
//! * [`instantaneous_capacity`] / [`average_capacity`] build `H` for an
//!   arbitrary list of surface azimuths and factor the smaller Gram form.
//! * [`SlotObjective`] is specialised to the discrete track grid. Per
//!   realization it factors the fixed sector-array part once and keeps the
//!   Schur-complement coupling between every pair of track slots, so scoring
//!   a candidate slot set only factors an `(N_MA * M_MA)`-sized matrix:
//!
//!   `det(I_K + c H^H H) = det(B) det(I + c S B^-1 S^H)`, `B = I_K + c F^H F`,
//!
//!   where `F` stacks the sector-array rows and `S` the selected slot rows.

use std::f64::consts::{LN_2, PI};
use std::num::NonZeroUsize;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use lru::LruCache;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{channel_matrix, fpa_blocks, surface_blocks, ChannelMatrix};
use crate::error::{Error, Result};
use crate::geometry::{candidate_rotations, RotationGrid};
use crate::linalg::{dot_conj, dot_conj_split, SquareMatrix};
use crate::optimizer::IndicatorVector;
use crate::population::{RealizationBatch, UserRealization};
use crate::scenario::ScenarioConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RfConfig {
    /// Per-user transmit power, W.
    pub p0: f64,
    /// Receiver noise power, W.
    pub noise: f64,
    /// Carrier wavelength, m.
    pub wavelength: f64,
    /// Linear channel power gain at 1 m.
    pub beta0: f64,
}

impl RfConfig {
    pub fn snr_scale(&self) -> f64 {
        self.p0 / self.noise
    }

    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("rf.p0_dbm", self.p0),
            ("rf.noise_dbm", self.noise),
            ("rf.wavelength_m", self.wavelength),
            ("rf.beta0_db", self.beta0),
        ];
        for (field, v) in checks {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(field, format!("must be finite and > 0, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityEstimate {
    /// Monte-Carlo mean capacity, bps/Hz.
    pub mean_bps_hz: f64,
    pub per_realization: Vec<f64>,
    /// Area spectrum efficiency, bps/Hz/m^2, over the cell disk.
    pub ase: f64,
}

impl CapacityEstimate {
    pub fn from_values(per_realization: Vec<f64>, cell_radius: f64) -> Self {
        // Plain left-to-right sum: the reduction order is fixed.
        let mean_bps_hz =
            per_realization.iter().sum::<f64>() / per_realization.len() as f64;
        Self {
            mean_bps_hz,
            per_realization,
            ase: mean_bps_hz / (PI * cell_radius * cell_radius),
        }
    }
}

/// `log2 det(I + (P0/sigma^2) H H^H)` for one channel realization.
pub fn instantaneous_capacity(h: &ChannelMatrix, rf: &RfConfig) -> Result<f64> {
    let cols = h.columns();
    if cols.iter().flatten().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numeric("channel matrix has non-finite entries".into()));
    }
    let scale = rf.snr_scale();
    let (m, k) = (h.rows(), h.cols());
    if k == 0 || m == 0 {
        return Ok(0.0);
    }
    let mut a;
    if k < m {
        a = SquareMatrix::identity(k);
        for i in 0..k {
            for j in 0..=i {
                a.add_at(i, j, scale * dot_conj(&cols[i], &cols[j]));
            }
        }
    } else {
        a = SquareMatrix::identity(m);
        for col in cols {
            for r in 0..m {
                let s = scale * col[r];
                for c in 0..=r {
                    a.add_at(r, c, s * col[c].conj());
                }
            }
        }
    }
    Ok((a.hpd_log_det()? / LN_2).max(0.0))
}

/// Monte-Carlo mean capacity over `batch` for explicit surface azimuths.
pub fn average_capacity(
    batch: &RealizationBatch,
    rotations: &[f64],
    scenario: &ScenarioConfig,
) -> Result<CapacityEstimate> {
    if batch.is_empty() {
        return Err(Error::InvalidArgument("empty realization batch".into()));
    }
    let values = batch
        .realizations()
        .iter()
        .map(|r| instantaneous_capacity(&channel_matrix(r, rotations, scenario), &scenario.rf))
        .collect::<Result<Vec<_>>>()?;
    Ok(CapacityEstimate::from_values(values, scenario.users.cell_radius))
}

/// Per-realization data that makes any slot subset cheap to score.
struct SlotCoupling {
    /// `ln det(I_K + c F^H F)`.
    fixed_log_det: f64,
    /// `S_all B^-1 S_all^H`, row-major over all `L * M_MA` slot rows;
    /// empty when the realization has no users.
    coupling: Vec<Complex64>,
}

impl SlotCoupling {
    fn build(
        realization: &UserRealization,
        grid: &RotationGrid,
        scenario: &ScenarioConfig,
    ) -> Result<Self> {
        let k = realization.len();
        if k == 0 {
            return Ok(Self {
                fixed_log_det: 0.0,
                coupling: Vec::new(),
            });
        }
        let c = scenario.rf.snr_scale();
        let angles = realization.angles();
        let fixed: Vec<Vec<Complex64>> = angles.iter().map(|a| fpa_blocks(a, scenario)).collect();
        let slots: Vec<Vec<Complex64>> = angles
            .iter()
            .map(|a| surface_blocks(a, grid.angles(), scenario))
            .collect();
        let dim = slots[0].len();

        let mut b = SquareMatrix::identity(k);
        for i in 0..k {
            for j in 0..=i {
                b.add_at(i, j, c * dot_conj(&fixed[i], &fixed[j]));
            }
        }
        let fixed_log_det = b.cholesky_in_place()?;

        // V = L^-1 S^H by forward substitution, row k of S^H is conj(s_k).
        let mut v_re = vec![vec![0.0; dim]; k];
        let mut v_im = vec![vec![0.0; dim]; k];
        for row in 0..k {
            let (done_re, rest_re) = v_re.split_at_mut(row);
            let (done_im, rest_im) = v_im.split_at_mut(row);
            let (cur_re, cur_im) = (&mut rest_re[0], &mut rest_im[0]);
            for (a, z) in slots[row].iter().enumerate() {
                cur_re[a] = z.re;
                cur_im[a] = -z.im;
            }
            let l_row = b.lower_row(row);
            for j in 0..row {
                let (lr, li) = (l_row[j].re, l_row[j].im);
                let (pr, pi) = (&done_re[j], &done_im[j]);
                for a in 0..dim {
                    cur_re[a] -= lr * pr[a] - li * pi[a];
                    cur_im[a] -= lr * pi[a] + li * pr[a];
                }
            }
            let inv = 1.0 / l_row[row].re;
            cur_re.iter_mut().for_each(|x| *x *= inv);
            cur_im.iter_mut().for_each(|x| *x *= inv);
        }

        // X = V^H V over columns of V.
        let mut t_re = vec![vec![0.0; k]; dim];
        let mut t_im = vec![vec![0.0; k]; dim];
        for row in 0..k {
            for a in 0..dim {
                t_re[a][row] = v_re[row][a];
                t_im[a][row] = v_im[row][a];
            }
        }
        drop(v_re);
        drop(v_im);
        let mut coupling = vec![Complex64::new(0.0, 0.0); dim * dim];
        for a in 0..dim {
            for bcol in a..dim {
                let x = dot_conj_split(&t_re[a], &t_im[a], &t_re[bcol], &t_im[bcol]);
                coupling[a * dim + bcol] = x;
                coupling[bcol * dim + a] = x.conj();
            }
        }
        Ok(Self {
            fixed_log_det,
            coupling,
        })
    }

    fn capacity(&self, rows: &[usize], dim: usize, c: f64) -> Result<f64> {
        if self.coupling.is_empty() {
            return Ok(0.0);
        }
        let n = rows.len();
        let mut a = SquareMatrix::identity(n);
        for (i, &ri) in rows.iter().enumerate() {
            let base = ri * dim;
            for (j, &rj) in rows[..=i].iter().enumerate() {
                a.add_at(i, j, c * self.coupling[base + rj]);
            }
        }
        let log_det = self.fixed_log_det + a.hpd_log_det()?;
        Ok((log_det / LN_2).max(0.0))
    }
}

/// Capacity of slot subsets of the track grid over one fixed batch, with an
/// LRU memo keyed by the selected support.
pub struct SlotObjective {
    grid: RotationGrid,
    surfaces: usize,
    block: usize,
    snr: f64,
    cell_radius: f64,
    realizations: Vec<SlotCoupling>,
    cache: Option<Mutex<LruCache<Vec<usize>, f64>>>,
    evaluations: AtomicUsize,
}

impl SlotObjective {
    /// Precomputes the slot coupling for every realization of `batch`. The
    /// grid size and surface count come from `scenario`; `cache_capacity`
    /// of 0 disables memoization.
    pub fn new(scenario: &ScenarioConfig, batch: &RealizationBatch) -> Result<Self> {
        if batch.is_empty() {
            return Err(Error::InvalidArgument("empty realization batch".into()));
        }
        let grid = candidate_rotations(scenario.slots)?;
        let realizations = batch
            .realizations()
            .iter()
            .map(|r| SlotCoupling::build(r, &grid, scenario))
            .collect::<Result<_>>()?;
        let cache = NonZeroUsize::new(scenario.search.cache_capacity)
            .map(|cap| Mutex::new(LruCache::new(cap)));
        Ok(Self {
            grid,
            surfaces: scenario.surfaces,
            block: scenario.surface_shape.total(),
            snr: scenario.rf.snr_scale(),
            cell_radius: scenario.users.cell_radius,
            realizations,
            cache,
            evaluations: AtomicUsize::new(0),
        })
    }

    pub fn grid(&self) -> &RotationGrid {
        &self.grid
    }

    pub fn slots(&self) -> usize {
        self.grid.len()
    }

    pub fn surfaces(&self) -> usize {
        self.surfaces
    }

    /// Number of uncached subset evaluations performed so far.
    pub fn evaluations(&self) -> usize {
        self.evaluations.load(Ordering::Relaxed)
    }

    fn check_support(&self, support: &[usize]) -> Result<()> {
        if support.len() != self.surfaces {
            return Err(Error::InvalidIndicator(format!(
                "support has {} slots, expected {}",
                support.len(),
                self.surfaces
            )));
        }
        if support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidIndicator(
                "support must be strictly ascending".into(),
            ));
        }
        if support.last().is_some_and(|&s| s >= self.slots()) {
            return Err(Error::InvalidIndicator(format!(
                "slot index out of range for {} slots",
                self.slots()
            )));
        }
        Ok(())
    }

    fn rows_of(&self, support: &[usize]) -> Vec<usize> {
        support
            .iter()
            .flat_map(|&s| s * self.block..(s + 1) * self.block)
            .collect()
    }

    /// Per-realization capacities for an ascending slot support. Not cached.
    pub fn estimate(&self, support: &[usize]) -> Result<CapacityEstimate> {
        self.check_support(support)?;
        self.evaluations.fetch_add(1, Ordering::Relaxed);
        let rows = self.rows_of(support);
        let dim = self.slots() * self.block;
        let values = self
            .realizations
            .iter()
            .map(|r| r.capacity(&rows, dim, self.snr))
            .collect::<Result<Vec<_>>>()?;
        Ok(CapacityEstimate::from_values(values, self.cell_radius))
    }

    /// Mean capacity for an ascending slot support. Not cached.
    pub fn capacity_of_support(&self, support: &[usize]) -> Result<f64> {
        self.estimate(support).map(|e| e.mean_bps_hz)
    }

    /// Mean capacity of the slots selected by `eps`, memoized.
    pub fn capacity_of_indicator(&self, eps: &IndicatorVector) -> Result<f64> {
        if eps.len() != self.slots() {
            return Err(Error::InvalidIndicator(format!(
                "indicator has length {}, grid has {} slots",
                eps.len(),
                self.slots()
            )));
        }
        let support = eps.support();
        let Some(cache) = &self.cache else {
            return self.capacity_of_support(&support);
        };
        if let Some(&v) = cache.lock().expect("cache lock").get(&support) {
            return Ok(v);
        }
        let v = self.capacity_of_support(&support)?;
        cache.lock().expect("cache lock").put(support, v);
        Ok(v)
    }

    pub fn rotations_of(&self, support: &[usize]) -> Vec<f64> {
        self.grid.angles_of(support)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ArrayShape;
    use crate::population::generate_batch;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rf(scale: f64) -> RfConfig {
        RfConfig {
            p0: scale,
            noise: 1.0,
            wavelength: 0.125,
            beta0: 1e-4,
        }
    }

    fn random_matrix(m: usize, k: usize, rng: &mut ChaCha8Rng) -> ChannelMatrix {
        let cols = (0..k)
            .map(|_| {
                (0..m)
                    .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                    .collect()
            })
            .collect();
        ChannelMatrix::from_columns(m, cols)
    }

    /// Independent route: eigenvalues of H^H H.
    fn eigen_capacity(h: &ChannelMatrix, scale: f64) -> f64 {
        if h.cols() == 0 {
            return 0.0;
        }
        let m = DMatrix::from_fn(h.rows(), h.cols(), |r, c| h.get(r, c));
        let gram = m.adjoint() * &m;
        gram.symmetric_eigenvalues()
            .iter()
            .map(|l| (1.0 + scale * l.max(0.0)).log2())
            .sum()
    }

    fn small_scenario() -> ScenarioConfig {
        let mut sc = ScenarioConfig::paper_default();
        sc.slots = 10;
        sc.surfaces = 2;
        sc.surface_shape = ArrayShape::new(2, 2);
        sc.fpa_shape = ArrayShape::new(4, 4);
        sc.users.mean_users = 40.0;
        sc
    }

    #[test]
    fn empty_and_rank_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(instantaneous_capacity(&random_matrix(8, 0, &mut rng), &rf(3.0)).unwrap(), 0.0);
        let h = random_matrix(8, 1, &mut rng);
        let n2: f64 = h.column(0).iter().map(|z| z.norm_sqr()).sum();
        assert_relative_eq!(
            instantaneous_capacity(&h, &rf(3.0)).unwrap(),
            (1.0 + 3.0 * n2).log2(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn matches_eigen_oracle_both_forms() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for (m, k) in [(8, 3), (3, 8), (5, 5), (16, 1)] {
            let h = random_matrix(m, k, &mut rng);
            let got = instantaneous_capacity(&h, &rf(2.5)).unwrap();
            let want = eigen_capacity(&h, 2.5);
            assert_relative_eq!(got, want, max_relative = 1e-10);
        }
    }

    #[test]
    fn non_finite_rejected() {
        let mut cols = vec![vec![Complex64::new(1.0, 0.0); 4]];
        cols[0][2] = Complex64::new(f64::NAN, 0.0);
        let h = ChannelMatrix::from_columns(4, cols);
        assert!(matches!(instantaneous_capacity(&h, &rf(1.0)), Err(Error::Numeric(_))));
    }

    #[test]
    fn average_over_batch() {
        let sc = small_scenario();
        let batch = generate_batch(&sc.regions().unwrap(), &sc.geometry, 1, 5).unwrap();
        let rot = vec![0.5, 2.0];
        let est = average_capacity(&batch, &rot, &sc).unwrap();
        let single = instantaneous_capacity(&channel_matrix(&batch.realizations()[0], &rot, &sc), &sc.rf).unwrap();
        assert_eq!(est.mean_bps_hz, single);
        assert_relative_eq!(est.ase, single / (PI * 100.0 * 100.0));

        let batch = generate_batch(&sc.regions().unwrap(), &sc.geometry, 6, 5).unwrap();
        let base = average_capacity(&batch, &rot, &sc).unwrap().mean_bps_hz;
        assert!(base > 0.0 && base.is_finite());
        let mut louder = sc.clone();
        louder.rf.p0 *= 2.0;
        assert!(average_capacity(&batch, &rot, &louder).unwrap().mean_bps_hz > base);
        let mut quiet = sc.clone();
        let mut prev = base;
        for _ in 0..6 {
            quiet.rf.p0 /= 100.0;
            let v = average_capacity(&batch, &rot, &quiet).unwrap().mean_bps_hz;
            assert!(v < prev);
            prev = v;
        }
        assert!(prev < 1e-6);
    }

    #[test]
    fn slot_objective_matches_direct_route() {
        let sc = small_scenario();
        let batch = generate_batch(&sc.regions().unwrap(), &sc.geometry, 4, 11).unwrap();
        let obj = SlotObjective::new(&sc, &batch).unwrap();
        for support in [[0usize, 1], [3, 7], [2, 9], [0, 5]] {
            let fast = obj.estimate(&support).unwrap();
            let direct = average_capacity(&batch, &obj.rotations_of(&support), &sc).unwrap();
            for (a, b) in fast.per_realization.iter().zip(&direct.per_realization) {
                assert_relative_eq!(*a, *b, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn slot_objective_paper_default_matches_direct_route() {
        let mut sc = ScenarioConfig::paper_default();
        sc.users.mean_users = 250.0;
        let batch = generate_batch(&sc.regions().unwrap(), &sc.geometry, 2, 3).unwrap();
        let obj = SlotObjective::new(&sc, &batch).unwrap();
        let support = [1, 6, 14, 22, 30, 37];
        let fast = obj.capacity_of_support(&support).unwrap();
        let direct = average_capacity(&batch, &obj.rotations_of(&support), &sc).unwrap();
        assert_relative_eq!(fast, direct.mean_bps_hz, max_relative = 1e-9);
    }

    #[test]
    fn indicator_memo_and_validation() {
        let sc = small_scenario();
        let batch = generate_batch(&sc.regions().unwrap(), &sc.geometry, 3, 4).unwrap();
        let obj = SlotObjective::new(&sc, &batch).unwrap();
        let a = IndicatorVector::from_support(10, &[2, 4]).unwrap();
        let b = IndicatorVector::from_support(10, &[4, 2]).unwrap();
        let va = obj.capacity_of_indicator(&a).unwrap();
        let evals = obj.evaluations();
        assert_eq!(va, obj.capacity_of_indicator(&b).unwrap());
        assert_eq!(obj.evaluations(), evals);

        let wrong = IndicatorVector::from_support(10, &[1, 2, 3]).unwrap();
        assert!(matches!(obj.capacity_of_indicator(&wrong), Err(Error::InvalidIndicator(_))));
        let short = IndicatorVector::from_support(9, &[1, 2]).unwrap();
        assert!(matches!(obj.capacity_of_indicator(&short), Err(Error::InvalidIndicator(_))));
    }

    #[test]
    fn boresight_beats_away_single_hotspot() {
        let mut sc = small_scenario();
        sc.users.hotspot_fraction = 0.9;
        sc.users.hotspots.truncate(1);
        sc.users.hotspots[0].weight = 1.0;
        let batch = generate_batch(&sc.regions().unwrap(), &sc.geometry, 5, 6).unwrap();
        let obj = SlotObjective::new(&sc, &batch).unwrap();
        // The hotspot sits at pi/4; slots 0 and 1 are at pi/10 and 3pi/10.
        let toward = obj.capacity_of_support(&[0, 1]).unwrap();
        let away = obj.capacity_of_support(&[5, 6]).unwrap();
        assert!(toward >= away, "{toward} < {away}");
    }

    #[test]
    fn full_selection_equals_all_grid_angles() {
        let mut sc = small_scenario();
        sc.slots = 4;
        sc.surfaces = 4;
        let batch = generate_batch(&sc.regions().unwrap(), &sc.geometry, 2, 8).unwrap();
        let obj = SlotObjective::new(&sc, &batch).unwrap();
        let all = IndicatorVector::from_support(4, &[0, 1, 2, 3]).unwrap();
        let direct = average_capacity(&batch, obj.grid().angles(), &sc).unwrap();
        assert_relative_eq!(obj.capacity_of_indicator(&all).unwrap(), direct.mean_bps_hz, max_relative = 1e-9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn invariances(seed in 0u64..1000, m in 1usize..12, k in 1usize..8, pick in 0usize..8) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let h = random_matrix(m, k, &mut rng);
            let base = instantaneous_capacity(&h, &rf(1.7)).unwrap();
            let col = pick % k;

            let mut cols = h.columns().to_vec();
            let phase = Complex64::from_polar(1.0, rng.random_range(0.0..6.0));
            cols[col].iter_mut().for_each(|z| *z *= phase);
            let rotated = instantaneous_capacity(&ChannelMatrix::from_columns(m, cols.clone()), &rf(1.7)).unwrap();
            prop_assert!((rotated - base).abs() <= 1e-9 * base.max(1.0));

            cols.reverse();
            let permuted = instantaneous_capacity(&ChannelMatrix::from_columns(m, cols.clone()), &rf(1.7)).unwrap();
            prop_assert!((permuted - base).abs() <= 1e-9 * base.max(1.0));

            cols.push(random_matrix(m, 1, &mut rng).column(0).to_vec());
            let grown = instantaneous_capacity(&ChannelMatrix::from_columns(m, cols), &rf(1.7)).unwrap();
            prop_assert!(grown >= base - 1e-9 * base.max(1.0));

            prop_assert!(instantaneous_capacity(&h, &rf(3.4)).unwrap() > base);
        }
    }
}
