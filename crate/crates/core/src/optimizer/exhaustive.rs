use super::IndicatorVector;
use crate::capacity::{CapacityEstimate, SlotObjective};
use crate::error::{Error, Result};

/// `n choose k`, exact.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Ascending `k`-subsets of `0..n` in lexicographic order.
#[derive(Debug, Clone)]
pub struct Combinations {
    n: usize,
    current: Option<Vec<usize>>,
}

impl Combinations {
    pub fn new(n: usize, k: usize) -> Self {
        Self {
            n,
            current: (k <= n).then(|| (0..k).collect()),
        }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.clone()?;
        let k = out.len();
        let mut next = out.clone();
        let mut i = k;
        loop {
            if i == 0 {
                self.current = None;
                break;
            }
            i -= 1;
            if next[i] < self.n - k + i {
                next[i] += 1;
                for j in i + 1..k {
                    next[j] = next[j - 1] + 1;
                }
                self.current = Some(next);
                break;
            }
        }
        Some(out)
    }
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub best: IndicatorVector,
    pub estimate: CapacityEstimate,
    pub evaluated: usize,
}

/// Scores every feasible support and returns the best; ties go to the
/// lexicographically smallest support. Refuses when the candidate count
/// exceeds `cap`.
pub fn exhaustive_search(objective: &SlotObjective, cap: u64) -> Result<SearchOutcome> {
    let (slots, surfaces) = (objective.slots(), objective.surfaces());
    let candidates = binomial(slots, surfaces);
    if candidates > cap as u128 {
        return Err(Error::EnumerationCap { candidates, cap });
    }
    let mut best: Option<(Vec<usize>, f64)> = None;
    let mut evaluated = 0;
    for support in Combinations::new(slots, surfaces) {
        let v = objective.capacity_of_support(&support)?;
        evaluated += 1;
        if best.as_ref().is_none_or(|(_, b)| v > *b) {
            best = Some((support, v));
        }
    }
    let (support, _) = best.ok_or_else(|| {
        Error::InvalidArgument(format!("no way to place {surfaces} surfaces on {slots} slots"))
    })?;
    let estimate = objective.estimate(&support)?;
    Ok(SearchOutcome {
        best: IndicatorVector::from_support(slots, &support)?,
        estimate,
        evaluated,
    })
}
