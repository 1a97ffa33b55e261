//! Independence proposal: a product of Bernoulli distributions over the
//! slots, conditioned on exactly `N_MA` ones.

use rand::Rng;

use super::IndicatorVector;

#[derive(Debug, Clone, PartialEq)]
pub struct Proposal {
    pub indicator: IndicatorVector,
    /// Rejection sampling ran out of retries and the conditional sampler
    /// produced the draw.
    pub used_fallback: bool,
}

/// Draws i.i.d. Bernoulli(`p_l`) bits until exactly `surfaces` are set, up
/// to `max_retries` attempts, then falls back to sampling the conditioned
/// distribution directly. Both routes target the same distribution.
pub fn proposal_sample<R: Rng + ?Sized>(
    p: &[f64],
    surfaces: usize,
    rng: &mut R,
    max_retries: usize,
) -> Proposal {
    assert!(surfaces <= p.len(), "cannot select {surfaces} of {} slots", p.len());
    let mut bits = vec![false; p.len()];
    for _ in 0..max_retries {
        let mut ones = 0;
        for (b, &pl) in bits.iter_mut().zip(p) {
            *b = rng.random::<f64>() < pl;
            ones += usize::from(*b);
        }
        if ones == surfaces {
            return Proposal {
                indicator: IndicatorVector::from_bits(bits),
                used_fallback: false,
            };
        }
    }
    log::debug!("proposal rejection exhausted {max_retries} retries; using conditional sampler");
    Proposal {
        indicator: conditional_bernoulli(p, surfaces, rng),
        used_fallback: true,
    }
}

/// Exact draw from `prod p_l^e_l (1 - p_l)^(1 - e_l)` restricted to
/// `sum e = k`, slot by slot, using elementary symmetric polynomials of the
/// odds `p_l / (1 - p_l)` over each suffix.
fn conditional_bernoulli<R: Rng + ?Sized>(p: &[f64], k: usize, rng: &mut R) -> IndicatorVector {
    let n = p.len();
    let odds: Vec<f64> = p.iter().map(|&pl| pl / (1.0 - pl)).collect();
    // Rescaling every odd by the same factor leaves the conditional law
    // unchanged and keeps the polynomials bounded.
    let top = odds.iter().cloned().fold(f64::MIN_POSITIVE, f64::max);
    let w: Vec<f64> = odds.iter().map(|o| o / top).collect();

    // suffix[l][j] = e_j(w_l, ..., w_{n-1})
    let mut suffix = vec![vec![0.0; k + 1]; n + 1];
    suffix[n][0] = 1.0;
    for l in (0..n).rev() {
        suffix[l][0] = 1.0;
        for j in 1..=k {
            suffix[l][j] = suffix[l + 1][j] + w[l] * suffix[l + 1][j - 1];
        }
    }

    let mut bits = vec![false; n];
    let mut need = k;
    for l in 0..n {
        if need == 0 {
            break;
        }
        let take = w[l] * suffix[l + 1][need - 1] / suffix[l][need];
        if n - l == need || rng.random::<f64>() < take {
            bits[l] = true;
            need -= 1;
        }
    }
    IndicatorVector::from_bits(bits)
}

/// `sum_l e_l ln p_l + (1 - e_l) ln(1 - p_l)`; the normalizer over the
/// feasible set is omitted since it cancels in acceptance ratios.
pub fn log_proposal_unnorm(eps: &IndicatorVector, p: &[f64]) -> f64 {
    eps.bits()
        .iter()
        .zip(p)
        .map(|(&b, &pl)| if b { pl.ln() } else { (1.0 - pl).ln() })
        .sum()
}
