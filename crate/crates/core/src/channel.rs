//! Line-of-sight channel model: UPA steering vectors, the horizontal sector
//! gain pattern, and stacking of surface and sector-array responses into
//! per-user channel vectors.
//!
//! Element order inside one array is `a_h ⊗ a_v`, so the vertical index runs
//! fastest. A channel vector lists the track surfaces in the order of the
//! rotation list, followed by the three sector arrays.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::geometry::{wrap_angle_delta, UserAngles};
use crate::population::UserRealization;
use crate::scenario::ScenarioConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrayShape {
    pub horizontal: usize,
    pub vertical: usize,
}

impl ArrayShape {
    pub const fn new(horizontal: usize, vertical: usize) -> Self {
        Self {
            horizontal,
            vertical,
        }
    }

    pub const fn total(&self) -> usize {
        self.horizontal * self.vertical
    }

    pub fn is_valid(&self) -> bool {
        self.horizontal >= 1 && self.vertical >= 1
    }
}

/// Horizontal-plane sector pattern: parabolic main lobe clamped at a
/// side-lobe floor. Omnidirectional in elevation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainPattern {
    /// Peak gain in dBi.
    pub max_gain_dbi: f64,
    /// Depth of the side-lobe floor below the peak, dB.
    pub side_lobe_db: f64,
    /// Half-power beamwidth, radians.
    pub beamwidth: f64,
}

impl GainPattern {
    pub fn is_valid(&self) -> bool {
        self.side_lobe_db >= 0.0 && self.beamwidth > 0.0 && self.max_gain_dbi.is_finite()
    }

    /// Gain in dBi for a wrapped azimuth offset from boresight.
    pub fn gain_dbi(&self, offset: f64) -> f64 {
        let ratio = offset / self.beamwidth;
        self.max_gain_dbi - (12.0 * ratio * ratio).min(self.side_lobe_db)
    }
}

pub fn antenna_gain_linear(pattern: &GainPattern, phi_user: f64, phi_face: f64) -> f64 {
    let offset = wrap_angle_delta(phi_user, phi_face);
    10f64.powf(pattern.gain_dbi(offset) / 10.0)
}

fn ula_phases(count: usize, spatial_freq: f64) -> Vec<Complex64> {
    let center = (count as f64 + 1.0) / 2.0;
    (1..=count)
        .map(|i| Complex64::from_polar(1.0, PI * (center - i as f64) * spatial_freq))
        .collect()
}

pub fn steering_horizontal(count: usize, phi_face: f64, angles: &UserAngles) -> Vec<Complex64> {
    ula_phases(count, (phi_face - angles.phi).sin() * angles.theta.sin())
}

pub fn steering_vertical(count: usize, angles: &UserAngles) -> Vec<Complex64> {
    ula_phases(count, angles.theta.cos())
}

/// `scale * (a ⊗ b)` appended to `out`.
fn push_kron(out: &mut Vec<Complex64>, scale: Complex64, a: &[Complex64], b: &[Complex64]) {
    for &x in a {
        let sx = scale * x;
        out.extend(b.iter().map(|&y| sx * y));
    }
}

fn push_surface(
    out: &mut Vec<Complex64>,
    shape: ArrayShape,
    pattern: &GainPattern,
    phi_n: f64,
    angles: &UserAngles,
    vertical: &[Complex64],
    r2: f64,
    wavelength: f64,
) {
    let gain = antenna_gain_linear(pattern, angles.phi, phi_n);
    let rho = 2.0 * PI / wavelength * r2 * (phi_n - angles.phi).cos() * angles.theta.sin();
    let scale = Complex64::from_polar(gain.sqrt(), rho);
    let horizontal = steering_horizontal(shape.horizontal, phi_n, angles);
    push_kron(out, scale, &horizontal, vertical);
}

#[allow(clippy::too_many_arguments)]
fn push_fpa(
    out: &mut Vec<Complex64>,
    shape: ArrayShape,
    pattern: &GainPattern,
    phi_f: f64,
    angles: &UserAngles,
    vertical: &[Complex64],
    r1: f64,
    h1: f64,
    h2: f64,
    wavelength: f64,
) {
    let gain = antenna_gain_linear(pattern, angles.phi, phi_f);
    let rho = 2.0 * PI / wavelength
        * (r1 * (angles.phi - phi_f).cos() * angles.theta.sin() - (h2 - h1) * angles.theta.cos());
    let scale = Complex64::from_polar(gain.sqrt(), rho);
    let horizontal = steering_horizontal(shape.horizontal, phi_f, angles);
    push_kron(out, scale, &horizontal, vertical);
}

/// Response of one track surface at azimuth `phi_n`.
pub fn surface_response_6dma(
    shape: ArrayShape,
    pattern: &GainPattern,
    phi_n: f64,
    angles: &UserAngles,
    r2: f64,
    wavelength: f64,
) -> Vec<Complex64> {
    let vertical = steering_vertical(shape.vertical, angles);
    let mut out = Vec::with_capacity(shape.total());
    push_surface(&mut out, shape, pattern, phi_n, angles, &vertical, r2, wavelength);
    out
}

/// Response of one sector array at fixed azimuth `phi_f`.
#[allow(clippy::too_many_arguments)]
pub fn array_response_fpa(
    shape: ArrayShape,
    pattern: &GainPattern,
    phi_f: f64,
    angles: &UserAngles,
    r1: f64,
    h1: f64,
    h2: f64,
    wavelength: f64,
) -> Vec<Complex64> {
    let vertical = steering_vertical(shape.vertical, angles);
    let mut out = Vec::with_capacity(shape.total());
    push_fpa(
        &mut out, shape, pattern, phi_f, angles, &vertical, r1, h1, h2, wavelength,
    );
    out
}

/// Large-scale amplitude and propagation phase `sqrt(beta_k) e^{-j 2pi d / lambda}`.
pub fn path_factor(angles: &UserAngles, scenario: &ScenarioConfig) -> Complex64 {
    let beta = scenario.rf.beta0 / (angles.d * angles.d);
    Complex64::from_polar(
        beta.sqrt(),
        -2.0 * PI * angles.d / scenario.rf.wavelength,
    )
}

/// Path-scaled responses of every listed surface azimuth, stacked.
pub fn surface_blocks(
    angles: &UserAngles,
    rotations: &[f64],
    scenario: &ScenarioConfig,
) -> Vec<Complex64> {
    let shape = scenario.surface_shape;
    let path = path_factor(angles, scenario);
    let vertical: Vec<Complex64> = steering_vertical(shape.vertical, angles)
        .into_iter()
        .map(|v| v * path)
        .collect();
    let mut out = Vec::with_capacity(shape.total() * rotations.len());
    for &phi_n in rotations {
        push_surface(
            &mut out,
            shape,
            &scenario.pattern,
            phi_n,
            angles,
            &vertical,
            scenario.geometry.r2,
            scenario.rf.wavelength,
        );
    }
    out
}

/// Path-scaled responses of the three sector arrays, stacked.
pub fn fpa_blocks(angles: &UserAngles, scenario: &ScenarioConfig) -> Vec<Complex64> {
    let shape = scenario.fpa_shape;
    let g = &scenario.geometry;
    let path = path_factor(angles, scenario);
    let vertical: Vec<Complex64> = steering_vertical(shape.vertical, angles)
        .into_iter()
        .map(|v| v * path)
        .collect();
    let mut out = Vec::with_capacity(3 * shape.total());
    for &phi_f in &g.fpa_rotations {
        push_fpa(
            &mut out,
            shape,
            &scenario.pattern,
            phi_f,
            angles,
            &vertical,
            g.r1,
            g.h1,
            g.h2,
            scenario.rf.wavelength,
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelVector(Vec<Complex64>);

impl ChannelVector {
    pub fn entries(&self) -> &[Complex64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn into_inner(self) -> Vec<Complex64> {
        self.0
    }
}

pub fn channel_vector(
    user: &UserAngles,
    rotations: &[f64],
    scenario: &ScenarioConfig,
) -> ChannelVector {
    let mut entries = surface_blocks(user, rotations, scenario);
    entries.extend(fpa_blocks(user, scenario));
    ChannelVector(entries)
}

/// An `M x K` channel matrix stored column by column.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    rows: usize,
    columns: Vec<Vec<Complex64>>,
}

impl ChannelMatrix {
    /// # Panics
    /// If a column length differs from `rows`.
    pub fn from_columns(rows: usize, columns: Vec<Vec<Complex64>>) -> Self {
        assert!(
            columns.iter().all(|c| c.len() == rows),
            "all channel columns must have {rows} entries"
        );
        Self { rows, columns }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, k: usize) -> &[Complex64] {
        &self.columns[k]
    }

    pub fn columns(&self) -> &[Vec<Complex64>] {
        &self.columns
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.columns[col][row]
    }
}

pub fn channel_matrix(
    realization: &UserRealization,
    rotations: &[f64],
    scenario: &ScenarioConfig,
) -> ChannelMatrix {
    let rows = scenario.surface_shape.total() * rotations.len() + 3 * scenario.fpa_shape.total();
    let columns = realization
        .angles()
        .iter()
        .map(|a| channel_vector(a, rotations, scenario).into_inner())
        .collect();
    ChannelMatrix { rows, columns }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::user_angles;
    use crate::scenario::ScenarioConfig;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, TAU};

    fn pattern() -> GainPattern {
        GainPattern {
            max_gain_dbi: 0.0,
            side_lobe_db: 25.0,
            beamwidth: 65f64.to_radians(),
        }
    }

    fn angles(theta: f64, phi: f64) -> UserAngles {
        UserAngles { theta, phi, d: 10.0 }
    }

    /// Independent scalar evaluation of one array entry, 1-based indices.
    fn scalar_entry(m_h: usize, m_v: usize, i_h: usize, i_v: usize, face: f64, a: &UserAngles) -> Complex64 {
        let ch = (m_h as f64 + 1.0) / 2.0 - i_h as f64;
        let cv = (m_v as f64 + 1.0) / 2.0 - i_v as f64;
        let ph = PI * ch * (face - a.phi).sin() * a.theta.sin();
        let pv = PI * cv * a.theta.cos();
        Complex64::new((ph + pv).cos(), (ph + pv).sin())
    }

    fn brute_gain(p: &GainPattern, user: f64, face: f64) -> f64 {
        let mut d = user - face;
        while d > PI {
            d -= TAU;
        }
        while d <= -PI {
            d += TAU;
        }
        let loss = (12.0 * (d / p.beamwidth).powi(2)).min(p.side_lobe_db);
        10f64.powf((p.max_gain_dbi - loss) / 10.0)
    }

    fn brute_surface(shape: ArrayShape, p: &GainPattern, phi_n: f64, a: &UserAngles, r2: f64, lambda: f64) -> Vec<Complex64> {
        let g = brute_gain(p, a.phi, phi_n).sqrt();
        let rho = 2.0 * PI / lambda * r2 * (phi_n - a.phi).cos() * a.theta.sin();
        let mut out = vec![];
        for i_h in 1..=shape.horizontal {
            for i_v in 1..=shape.vertical {
                out.push(Complex64::from_polar(g, rho) * scalar_entry(shape.horizontal, shape.vertical, i_h, i_v, phi_n, a));
            }
        }
        out
    }

    #[allow(clippy::too_many_arguments)]
    fn brute_fpa(shape: ArrayShape, p: &GainPattern, phi_f: f64, a: &UserAngles, r1: f64, h1: f64, h2: f64, lambda: f64) -> Vec<Complex64> {
        let g = brute_gain(p, a.phi, phi_f).sqrt();
        let rho = 2.0 * PI / lambda * (r1 * (a.phi - phi_f).cos() * a.theta.sin() - (h2 - h1) * a.theta.cos());
        let mut out = vec![];
        for i_h in 1..=shape.horizontal {
            for i_v in 1..=shape.vertical {
                out.push(Complex64::from_polar(g, rho) * scalar_entry(shape.horizontal, shape.vertical, i_h, i_v, phi_f, a));
            }
        }
        out
    }

    fn assert_vec_close(a: &[Complex64], b: &[Complex64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).norm() < tol, "{x} vs {y}");
        }
    }

    #[test]
    fn gain_anchors() {
        let p = pattern();
        assert_eq!(antenna_gain_linear(&p, 1.0, 1.0), 1.0);
        assert_relative_eq!(
            antenna_gain_linear(&p, p.beamwidth / 2.0, 0.0),
            10f64.powf(-0.3),
            epsilon = 1e-15
        );
        assert_relative_eq!(antenna_gain_linear(&p, PI, 0.0), 10f64.powf(-2.5), epsilon = 1e-18);
    }

    #[test]
    fn gain_wraps_across_seam() {
        let p = pattern();
        let near = antenna_gain_linear(&p, TAU - 0.05, 0.05);
        assert_relative_eq!(near, antenna_gain_linear(&p, 0.0, 0.1), epsilon = 1e-12);
        assert!(near > 0.9);
    }

    #[test]
    fn steering_examples() {
        let a = angles(FRAC_PI_2, 0.3);
        assert_eq!(steering_horizontal(1, 1.2, &a), vec![Complex64::new(1.0, 0.0)]);
        for z in steering_horizontal(7, 0.3, &a) {
            assert_relative_eq!(z.re, 1.0);
            assert_relative_eq!(z.im, 0.0);
        }

        let a = angles(FRAC_PI_2, 0.0);
        let h = steering_horizontal(2, FRAC_PI_2, &a);
        let cis = |x: f64| Complex64::new(x.cos(), x.sin());
        assert_vec_close(&h, &[cis(FRAC_PI_2), cis(-FRAC_PI_2)], 1e-15);

        for z in steering_vertical(5, &a) {
            assert!((z - 1.0).norm() < 1e-15);
        }
        assert_eq!(steering_vertical(1, &angles(2.0, 0.0)).len(), 1);

        let v = steering_vertical(3, &angles(2.0 * PI / 3.0, 0.0));
        let want: Vec<_> = [1.0, 0.0, -1.0].iter().map(|c| cis(PI * c * -0.5)).collect();
        assert_vec_close(&v, &want, 1e-15);
    }

    #[test]
    fn surface_response_examples() {
        let p = pattern();
        let a = angles(PI, 0.7);
        let r = surface_response_6dma(ArrayShape::new(1, 1), &p, 0.7, &a, 1.0, 0.125);
        assert_eq!(r.len(), 1);
        assert!((r[0] - 1.0).norm() < 1e-12);

        let shape = ArrayShape::new(2, 8);
        let a = angles(1.9, 5.1);
        let got = surface_response_6dma(shape, &p, 4.4, &a, 1.0, 0.125);
        assert_vec_close(&got, &brute_surface(shape, &p, 4.4, &a, 1.0, 0.125), 1e-12);
        let norm: f64 = got.iter().map(|z| z.norm_sqr()).sum();
        assert_relative_eq!(norm, 16.0 * antenna_gain_linear(&p, 5.1, 4.4), max_relative = 1e-12);
    }

    #[test]
    fn fpa_response_examples() {
        let p = pattern();
        let a = angles(FRAC_PI_2, 0.4);
        let r = array_response_fpa(ArrayShape::new(1, 1), &p, 0.4, &a, 1.0, 9.0, 10.0, 0.125);
        let rho = 2.0 * PI / 0.125;
        assert!((r[0] - Complex64::from_polar(1.0, rho)).norm() < 1e-12);

        let shape = ArrayShape::new(8, 8);
        let a = angles(2.3, 3.3);
        let got = array_response_fpa(shape, &p, 7.0 * PI / 6.0, &a, 1.0, 9.0, 10.0, 0.125);
        let want = brute_fpa(shape, &p, 7.0 * PI / 6.0, &a, 1.0, 9.0, 10.0, 0.125);
        assert_vec_close(&got, &want, 1e-12);
    }

    #[test]
    fn channel_vector_matches_per_antenna_oracle() {
        let sc = ScenarioConfig::paper_default();
        let user = user_angles(50.0, 50.0, &sc.geometry).unwrap();
        let rotations = vec![FRAC_PI_4; sc.surfaces];
        let got = channel_vector(&user, &rotations, &sc);

        let g = &sc.geometry;
        let beta = sc.rf.beta0 / (user.d * user.d);
        let path = Complex64::from_polar(beta.sqrt(), -2.0 * PI * user.d / sc.rf.wavelength);
        let mut want = vec![];
        for &r in &rotations {
            want.extend(brute_surface(sc.surface_shape, &sc.pattern, r, &user, g.r2, sc.rf.wavelength).into_iter().map(|z| z * path));
        }
        for &f in &g.fpa_rotations {
            want.extend(brute_fpa(sc.fpa_shape, &sc.pattern, f, &user, g.r1, g.h1, g.h2, sc.rf.wavelength).into_iter().map(|z| z * path));
        }
        assert_eq!(got.len(), 6 * 16 + 3 * 64);
        let scale = beta.sqrt();
        assert_vec_close(got.entries(), &want, 1e-12 * scale);
    }

    #[test]
    fn degenerate_stacking_and_matrix() {
        let mut sc = ScenarioConfig::paper_default();
        sc.surfaces = 0;
        let user = user_angles(10.0, -3.0, &sc.geometry).unwrap();
        assert_eq!(channel_vector(&user, &[], &sc).len(), 192);

        let sc = ScenarioConfig::paper_default();
        let rot = vec![0.1; 6];
        let empty = UserRealization::from_positions(vec![], &sc.geometry).unwrap();
        let h = channel_matrix(&empty, &rot, &sc);
        assert_eq!((h.rows(), h.cols()), (288, 0));

        let real = UserRealization::from_positions(vec![(5.0, 1.0), (-20.0, 3.0), (0.5, -70.0)], &sc.geometry).unwrap();
        let h = channel_matrix(&real, &rot, &sc);
        assert_eq!(h.cols(), 3);
        for (k, a) in real.angles().iter().enumerate() {
            assert_eq!(h.column(k), channel_vector(a, &rot, &sc).entries());
        }
    }

    proptest! {
        #[test]
        fn steering_unit_modulus(m in 1usize..20, face in 0.0..TAU, theta in FRAC_PI_2..PI, phi in 0.0..TAU) {
            let a = angles(theta, phi);
            for z in steering_horizontal(m, face, &a).into_iter().chain(steering_vertical(m, &a)) {
                prop_assert!((z.norm() - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn gain_even_and_monotone(d1 in 0.0..PI, d2 in 0.0..PI) {
            let p = pattern();
            prop_assert_eq!(antenna_gain_linear(&p, d1, 0.0), antenna_gain_linear(&p, -d1, 0.0));
            let (lo, hi) = if d1 < d2 { (d1, d2) } else { (d2, d1) };
            prop_assert!(antenna_gain_linear(&p, lo, 0.0) >= antenna_gain_linear(&p, hi, 0.0));
        }

        #[test]
        fn channel_norm_identity(x in -100.0..100.0f64, y in -100.0..100.0f64, slots in proptest::collection::vec(0usize..40, 6)) {
            prop_assume!(x.hypot(y) > 1e-3);
            let sc = ScenarioConfig::paper_default();
            let grid = sc.grid().unwrap();
            let rot = grid.angles_of(&slots);
            let a = user_angles(x, y, &sc.geometry).unwrap();
            let h = channel_vector(&a, &rot, &sc);
            let beta = sc.rf.beta0 / (a.d * a.d);
            let gains: f64 = rot.iter().map(|&r| 16.0 * antenna_gain_linear(&sc.pattern, a.phi, r)).sum::<f64>()
                + sc.geometry.fpa_rotations.iter().map(|&f| 64.0 * antenna_gain_linear(&sc.pattern, a.phi, f)).sum::<f64>();
            prop_assert!((h.norm_sqr() - beta * gains).abs() <= 1e-10 * beta * gains);
        }

        #[test]
        fn permuting_rotations_permutes_blocks(x in 1.0..90.0f64, y in -90.0..90.0f64, shift in 1usize..6) {
            let sc = ScenarioConfig::paper_default();
            let rot: Vec<f64> = (0..6).map(|i| 0.3 + i as f64).collect();
            let mut rolled = rot.clone();
            rolled.rotate_left(shift);
            let a = user_angles(x, y, &sc.geometry).unwrap();
            let h = channel_vector(&a, &rot, &sc);
            let g = channel_vector(&a, &rolled, &sc);
            prop_assert!((h.norm_sqr() - g.norm_sqr()).abs() < 1e-12 * h.norm_sqr());
            for n in 0..6 {
                let src = (n + shift) % 6;
                prop_assert_eq!(&g.entries()[n * 16..(n + 1) * 16], &h.entries()[src * 16..(src + 1) * 16]);
            }
        }

        #[test]
        fn norm_independent_of_wavelength(x in 1.0..90.0f64, y in -90.0..90.0f64, lambda in 0.01..1.0f64) {
            let sc = ScenarioConfig::paper_default();
            let mut other = sc.clone();
            other.rf.wavelength = lambda;
            let a = user_angles(x, y, &sc.geometry).unwrap();
            let rot = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
            let n1 = channel_vector(&a, &rot, &sc).norm_sqr();
            let n2 = channel_vector(&a, &rot, &other).norm_sqr();
            prop_assert!((n1 - n2).abs() < 1e-12 * n1);
        }
    }
}
