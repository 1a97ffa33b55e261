use std::fmt;

use crate::error::{Error, Result};

/// Binary selection over the `L` track slots.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IndicatorVector {
    bits: Vec<bool>,
}

impl IndicatorVector {
    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    /// Ones at the given slots; order does not matter, duplicates do.
    pub fn from_support(len: usize, support: &[usize]) -> Result<Self> {
        let mut bits = vec![false; len];
        for &s in support {
            if s >= len {
                return Err(Error::InvalidIndicator(format!(
                    "slot {s} out of range for length {len}"
                )));
            }
            if std::mem::replace(&mut bits[s], true) {
                return Err(Error::InvalidIndicator(format!("slot {s} selected twice")));
            }
        }
        Ok(Self { bits })
    }

    /// `ones` leading ones followed by zeros.
    pub fn leading(len: usize, ones: usize) -> Self {
        Self {
            bits: (0..len).map(|i| i < ones).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, slot: usize) -> bool {
        self.bits[slot]
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Selected slots, ascending.
    pub fn support(&self) -> Vec<usize> {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect()
    }
}

impl fmt::Display for IndicatorVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}
