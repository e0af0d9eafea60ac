//! Alignment metrics against hand-labelled gold edges.

use alloc::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type EdgeSet = BTreeSet<(usize, usize)>;

/// Sure and possible gold edges, `sure ⊆ possible`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GoldAlignment {
    pub sure: EdgeSet,
    pub possible: EdgeSet,
}

impl GoldAlignment {
    /// `possible` is widened to include every sure edge.
    pub fn new(sure: EdgeSet, possible: EdgeSet) -> Self {
        let possible = possible.union(&sure).copied().collect();
        GoldAlignment { sure, possible }
    }

    pub fn sure_only(sure: EdgeSet) -> Self {
        GoldAlignment { possible: sure.clone(), sure }
    }

    /// Every index must be below the sequence lengths.
    pub fn validate(&self, nx: usize, ny: usize) -> Result<()> {
        match self.possible.iter().find(|&&(i, j)| i >= nx || j >= ny) {
            Some((i, j)) => Err(Error::InvalidConfig(alloc::format!("gold edge {i}-{j} outside {nx}x{ny}"))),
            None => Ok(()),
        }
    }
}

/// `1 - (|A∩S| + |A∩P|) / (|A| + |S|)`; 0 when both sets are empty.
pub fn alignment_error_rate(predicted: &EdgeSet, gold: &GoldAlignment) -> f64 {
    let denom = predicted.len() + gold.sure.len();
    if denom == 0 {
        return 0.0;
    }
    let a_s = predicted.intersection(&gold.sure).count();
    let a_p = predicted.intersection(&gold.possible).count();
    1.0 - (a_s + a_p) as f64 / denom as f64
}

/// Harmonic mean of precision (1 for an empty prediction) and recall.
pub fn edge_f1(predicted: &EdgeSet, sure: &EdgeSet) -> f64 {
    let hit = predicted.intersection(sure).count() as f64;
    let precision = if predicted.is_empty() { 1.0 } else { hit / predicted.len() as f64 };
    let recall = if sure.is_empty() { 1.0 } else { hit / sure.len() as f64 };
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}
