//! Group-relative advantages: mean-centering, std normalization, broadcast.
//!
//! For each reward kind, the K rewards of one prompt's candidate group are
//! centered by the group mean and divided by the population standard
//! deviation of the centered values plus `eps_norm`, then broadcast to every
//! token position of the candidate. Group statistics are always computed per
//! prompt; batch-level averages over all candidates happen in the objective.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AdvantageError {
    #[error("candidate group needs at least 2 rewards, got {0}")]
    GroupTooSmall(usize),
    #[error("candidate {0} has an empty token sequence")]
    EmptySequence(usize),
}

/// Which reward a group of values belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RewardKind {
    Acc,
    Lan,
}

/// The K rewards of one prompt's candidate group.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupRewards {
    pub values: Vec<f64>,
    pub kind: RewardKind,
}

impl GroupRewards {
    pub fn new(values: Vec<f64>, kind: RewardKind) -> Self {
        GroupRewards { values, kind }
    }
}

/// Per-candidate advantages broadcast to the token level; constant per row.
#[derive(Debug, Clone, PartialEq)]
pub struct AdvantageTensor {
    rows: Vec<Vec<f64>>,
}

impl AdvantageTensor {
    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn candidate(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn num_candidates(&self) -> usize {
        self.rows.len()
    }

    /// The per-candidate scalar (the broadcast value of each row).
    pub fn scalar(&self, i: usize) -> f64 {
        self.rows[i][0]
    }
}

/// Subtracts the group mean from every reward. The output sums to zero.
pub fn center_rewards(group: &GroupRewards) -> Result<Vec<f64>, AdvantageError> {
    let k = group.values.len();
    if k < 2 {
        return Err(AdvantageError::GroupTooSmall(k));
    }
    let mean = group.values.iter().sum::<f64>() / k as f64;
    Ok(group.values.iter().map(|r| r - mean).collect())
}

/// Divides centered rewards by their population standard deviation plus
/// `eps_norm`. Degenerate all-equal groups come out as exact zeros.
pub fn normalize_rewards(centered: &[f64], eps_norm: f64) -> Vec<f64> {
    let k = centered.len() as f64;
    let var = centered.iter().map(|c| c * c).sum::<f64>() / k;
    let denom = var.sqrt() + eps_norm;
    centered.iter().map(|c| c / denom).collect()
}

/// Centers and normalizes one group in a single call.
pub fn group_advantages(group: &GroupRewards, eps_norm: f64) -> Result<Vec<f64>, AdvantageError> {
    Ok(normalize_rewards(&center_rewards(group)?, eps_norm))
}

/// Broadcasts per-candidate scalars to every token position.
pub fn broadcast_advantage(
    normalized: &[f64],
    lengths: &[usize],
) -> Result<AdvantageTensor, AdvantageError> {
    assert_eq!(normalized.len(), lengths.len(), "one length per candidate");
    let mut rows = Vec::with_capacity(normalized.len());
    for (i, (&a, &len)) in normalized.iter().zip(lengths).enumerate() {
        if len == 0 {
            return Err(AdvantageError::EmptySequence(i));
        }
        rows.push(vec![a; len]);
    }
    Ok(AdvantageTensor { rows })
}
