//! The mixed dual-reward objective: per-token likelihood ratios, clipped
//! surrogates per reward kind, a term-masked language objective, an exact KL
//! regularizer against the reference policy, and the lambda-mixed loss with
//! its analytic parameter gradient.
//!
//! Conventions fixed here:
//! - Token averaging always divides by the full candidate length, also under
//!   the term mask.
//! - The KL term is the exact divergence over the full conditional
//!   distribution at every visited context, not a single-sample estimate.
//! - At clip kinks the gradient follows the attained branch, ties broken
//!   toward the unclipped branch; on a strictly clipped branch the token
//!   contributes no surrogate gradient.
//! - The batch average runs over all candidates of all prompts in the step;
//!   group statistics were already taken per prompt in [`crate::advantage`].

use crate::advantage::AdvantageTensor;
use crate::policy::{Policy, PolicyError, PromptBag, TokenId};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ObjectiveError {
    #[error("numerical error: {0}")]
    NumericalError(String),
    #[error("empty batch")]
    EmptyBatch,
    #[error("alignment error: {0}")]
    AlignmentError(String),
    #[error("lambda {0} outside [0, 1]")]
    InvalidSchedule(f64),
    #[error(transparent)]
    Policy(#[from] PolicyError),
}

/// Per-token log-probabilities of one candidate under the current, old, and
/// reference policies, aligned to the generated tokens.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenLogProbs {
    pub current: Vec<f64>,
    pub old: Vec<f64>,
    pub reference: Vec<f64>,
}

impl TokenLogProbs {
    pub fn len(&self) -> usize {
        self.current.len()
    }

    pub fn is_empty(&self) -> bool {
        self.current.is_empty()
    }

    fn check_aligned(&self) -> Result<(), ObjectiveError> {
        if self.old.len() != self.current.len() || self.reference.len() != self.current.len() {
            return Err(ObjectiveError::AlignmentError(format!(
                "log-prob lists disagree: current {}, old {}, reference {}",
                self.current.len(),
                self.old.len(),
                self.reference.len()
            )));
        }
        Ok(())
    }
}

/// Clipping and KL-weight configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClipConfig {
    pub eps_clip: f64,
    pub beta: f64,
}

impl Default for ClipConfig {
    fn default() -> Self {
        ClipConfig { eps_clip: 0.2, beta: 0.001 }
    }
}

/// Binary token mask for the language objective; 0 marks protected terms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TermMask {
    bits: Vec<bool>,
}

impl TermMask {
    pub fn new(bits: Vec<bool>) -> Self {
        TermMask { bits }
    }

    /// Neutral mask: every token participates.
    pub fn ones(len: usize) -> Self {
        TermMask { bits: vec![true; len] }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn value(&self, t: usize) -> f64 {
        if self.bits[t] {
            1.0
        } else {
            0.0
        }
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }
}

/// Per-token likelihood ratios `exp(current - old)`.
pub fn likelihood_ratio(lp: &TokenLogProbs) -> Result<Vec<f64>, ObjectiveError> {
    lp.check_aligned()?;
    lp.current
        .iter()
        .zip(&lp.old)
        .map(|(c, o)| {
            let r = (c - o).exp();
            if r.is_finite() && r > 0.0 {
                Ok(r)
            } else {
                Err(ObjectiveError::NumericalError(format!(
                    "ratio exp({c} - {o}) is not a positive finite number"
                )))
            }
        })
        .collect()
}

/// The pessimistic clipped surrogate `min(r*A, clip(r, 1-eps, 1+eps)*A)`.
pub fn clip_surrogate(ratio: f64, advantage: f64, eps_clip: f64) -> f64 {
    let clipped = ratio.clamp(1.0 - eps_clip, 1.0 + eps_clip);
    (ratio * advantage).min(clipped * advantage)
}

/// Surrogate value plus whether the unclipped branch is attained (ties go to
/// the unclipped branch, so its gradient flows).
fn surrogate_branch(ratio: f64, advantage: f64, eps_clip: f64) -> (f64, bool) {
    let unclipped = ratio * advantage;
    let clipped = ratio.clamp(1.0 - eps_clip, 1.0 + eps_clip) * advantage;
    if unclipped <= clipped {
        (unclipped, true)
    } else {
        (clipped, false)
    }
}

fn check_batch_alignment(
    group: &[TokenLogProbs],
    adv: &AdvantageTensor,
) -> Result<(), ObjectiveError> {
    if group.is_empty() {
        return Err(ObjectiveError::EmptyBatch);
    }
    if adv.num_candidates() != group.len() {
        return Err(ObjectiveError::AlignmentError(format!(
            "{} advantage rows for {} candidates",
            adv.num_candidates(),
            group.len()
        )));
    }
    for (i, lp) in group.iter().enumerate() {
        lp.check_aligned()?;
        if lp.is_empty() {
            return Err(ObjectiveError::AlignmentError(format!("candidate {i} has no tokens")));
        }
        if adv.candidate(i).len() != lp.len() {
            return Err(ObjectiveError::AlignmentError(format!(
                "candidate {i}: {} advantages for {} tokens",
                adv.candidate(i).len(),
                lp.len()
            )));
        }
    }
    Ok(())
}

/// Accuracy objective: batch mean of token-averaged clipped surrogates.
pub fn objective_acc(
    group: &[TokenLogProbs],
    adv: &AdvantageTensor,
    cfg: &ClipConfig,
) -> Result<f64, ObjectiveError> {
    check_batch_alignment(group, adv)?;
    let n = group.len() as f64;
    let mut total = 0.0;
    for (i, lp) in group.iter().enumerate() {
        let ratios = likelihood_ratio(lp)?;
        let len = lp.len() as f64;
        for (t, r) in ratios.iter().enumerate() {
            total += clip_surrogate(*r, adv.candidate(i)[t], cfg.eps_clip) / (n * len);
        }
    }
    Ok(total)
}

/// Language objective: like [`objective_acc`] but each token term is
/// multiplied by the mask; the average still divides by the full length.
pub fn objective_lan(
    group: &[TokenLogProbs],
    adv: &AdvantageTensor,
    masks: &[TermMask],
    cfg: &ClipConfig,
) -> Result<f64, ObjectiveError> {
    check_batch_alignment(group, adv)?;
    if masks.len() != group.len() {
        return Err(ObjectiveError::AlignmentError(format!(
            "{} masks for {} candidates",
            masks.len(),
            group.len()
        )));
    }
    for (i, (lp, m)) in group.iter().zip(masks).enumerate() {
        if m.len() != lp.len() {
            return Err(ObjectiveError::AlignmentError(format!(
                "candidate {i}: mask length {} for {} tokens",
                m.len(),
                lp.len()
            )));
        }
    }
    let n = group.len() as f64;
    let mut total = 0.0;
    for (i, lp) in group.iter().enumerate() {
        let ratios = likelihood_ratio(lp)?;
        let len = lp.len() as f64;
        for (t, r) in ratios.iter().enumerate() {
            total +=
                masks[i].value(t) * clip_surrogate(*r, adv.candidate(i)[t], cfg.eps_clip) / (n * len);
        }
    }
    Ok(total)
}

fn check_log_dist(row: &[f64]) -> Result<(), ObjectiveError> {
    let total: f64 = row.iter().map(|lp| lp.exp()).sum();
    if (total - 1.0).abs() > 1e-8 {
        return Err(ObjectiveError::NumericalError(format!(
            "distribution mass {total} deviates from 1 beyond 1e-8"
        )));
    }
    Ok(())
}

/// Exact per-context KL divergence of one distribution pair, clamped at zero
/// against vanishing negative round-off.
fn kl_row(current: &[f64], reference: &[f64]) -> Result<f64, ObjectiveError> {
    if current.len() != reference.len() {
        return Err(ObjectiveError::AlignmentError(format!(
            "distribution sizes disagree: {} vs {}",
            current.len(),
            reference.len()
        )));
    }
    check_log_dist(current)?;
    check_log_dist(reference)?;
    let kl: f64 = current.iter().zip(reference).map(|(c, r)| c.exp() * (c - r)).sum();
    Ok(kl.max(0.0))
}

/// Batch mean of token-averaged exact KL terms. Inputs are per-candidate
/// lists of full conditional log-distributions at each visited context.
pub fn kl_term(
    current: &[Vec<Vec<f64>>],
    reference: &[Vec<Vec<f64>>],
) -> Result<f64, ObjectiveError> {
    if current.is_empty() {
        return Err(ObjectiveError::EmptyBatch);
    }
    if current.len() != reference.len() {
        return Err(ObjectiveError::AlignmentError(format!(
            "{} current candidates vs {} reference candidates",
            current.len(),
            reference.len()
        )));
    }
    let n = current.len() as f64;
    let mut total = 0.0;
    for (i, (cur_rows, ref_rows)) in current.iter().zip(reference).enumerate() {
        if cur_rows.len() != ref_rows.len() || cur_rows.is_empty() {
            return Err(ObjectiveError::AlignmentError(format!(
                "candidate {i}: {} current rows vs {} reference rows",
                cur_rows.len(),
                ref_rows.len()
            )));
        }
        let len = cur_rows.len() as f64;
        for (c, r) in cur_rows.iter().zip(ref_rows) {
            total += kl_row(c, r)? / (n * len);
        }
    }
    Ok(total)
}

/// The mixed objective `(1 - lambda) * J_acc + lambda * J_lan - beta * KL`.
/// The loss is its negation.
pub fn mixed_objective(
    j_acc: f64,
    j_lan: f64,
    kl: f64,
    lambda: f64,
    beta: f64,
) -> Result<f64, ObjectiveError> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(ObjectiveError::InvalidSchedule(lambda));
    }
    Ok((1.0 - lambda) * j_acc + lambda * j_lan - beta * kl)
}

/// One candidate of a policy-update batch: generated ids, frozen sampling
/// log-probs, prompt bag, per-kind scalar advantages, and the term mask.
#[derive(Debug, Clone)]
pub struct DsrCandidate {
    pub ids: Vec<TokenId>,
    pub logp_old: Vec<f64>,
    pub bag: PromptBag,
    pub adv_acc: f64,
    pub adv_lan: f64,
    pub mask: TermMask,
}

/// Loss value with its decomposition and the parameter gradient.
#[derive(Debug, Clone)]
pub struct DsrStepValue {
    pub loss: f64,
    pub grad: Vec<f64>,
    pub j_acc: f64,
    pub j_lan: f64,
    pub kl: f64,
}

/// Computes the DSR loss and its analytic gradient for one batch.
///
/// The old log-probs, reference policy, advantages, and mask are frozen
/// inputs; only the current policy parameters carry gradient. Reward-kind
/// terms with zero mixing weight are skipped entirely, so a `lambda = 0` run
/// is bit-identical to a variant that never computes the language objective.
pub fn dsr_loss_and_grad(
    policy: &Policy,
    reference: &Policy,
    batch: &[DsrCandidate],
    cfg: &ClipConfig,
    lambda: f64,
) -> Result<DsrStepValue, ObjectiveError> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(ObjectiveError::InvalidSchedule(lambda));
    }
    if batch.is_empty() {
        return Err(ObjectiveError::EmptyBatch);
    }
    let n = batch.len() as f64;
    let vocab_len = policy.vocab().len();
    let mut grad = vec![0.0; policy.n_params()];
    let mut j_acc = 0.0;
    let mut j_lan = 0.0;
    let mut kl = 0.0;
    let mut cot = vec![0.0; vocab_len];

    for (i, cand) in batch.iter().enumerate() {
        let len = cand.ids.len();
        if len == 0 {
            return Err(ObjectiveError::AlignmentError(format!("candidate {i} has no tokens")));
        }
        if cand.logp_old.len() != len || cand.mask.len() != len {
            return Err(ObjectiveError::AlignmentError(format!(
                "candidate {i}: ids {len}, old log-probs {}, mask {}",
                cand.logp_old.len(),
                cand.mask.len()
            )));
        }
        let cur_rows = policy.full_log_dists(&cand.ids, &cand.bag)?;
        let ref_rows = reference.full_log_dists(&cand.ids, &cand.bag)?;
        let scale = 1.0 / (n * len as f64);
        let mut prev: Option<TokenId> = None;
        for t in 0..len {
            let y = cand.ids[t] as usize;
            let cur_row = &cur_rows[t];
            let ref_row = &ref_rows[t];
            let ratio = (cur_row[y] - cand.logp_old[t]).exp();
            if !ratio.is_finite() || ratio <= 0.0 {
                return Err(ObjectiveError::NumericalError(format!(
                    "candidate {i} token {t}: ratio {ratio}"
                )));
            }
            let m = cand.mask.value(t);
            let (s_acc, acc_active) = surrogate_branch(ratio, cand.adv_acc, cfg.eps_clip);
            let (s_lan, lan_active) = surrogate_branch(ratio, cand.adv_lan, cfg.eps_clip);
            j_acc += s_acc * scale;
            j_lan += m * s_lan * scale;

            // Weight of d(ratio)/d(logit) in the loss gradient. Zero-weight
            // reward kinds are skipped so their terms never touch the sum.
            let mut w = 0.0;
            if lambda < 1.0 && acc_active {
                w += (1.0 - lambda) * cand.adv_acc;
            }
            if lambda > 0.0 && lan_active {
                w += lambda * m * cand.adv_lan;
            }
            w *= ratio * scale;

            let kl_t = kl_row(cur_row, ref_row)?;
            kl += kl_t * scale;

            let mut any = false;
            for v in 0..vocab_len {
                let p = cur_row[v].exp();
                let onehot = if v == y { 1.0 } else { 0.0 };
                let mut c = -w * (onehot - p);
                if cfg.beta != 0.0 {
                    c += cfg.beta * scale * p * (cur_row[v] - ref_row[v] - kl_t);
                }
                cot[v] = c;
                any |= c != 0.0;
            }
            if any {
                policy.accumulate_logit_grad(prev, &cand.bag, &cot, &mut grad)?;
            }
            prev = Some(cand.ids[t]);
        }
    }

    let objective = mixed_objective(j_acc, j_lan, kl, lambda, cfg.beta)?;
    let loss = -objective;
    if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(ObjectiveError::NumericalError("non-finite loss or gradient".into()));
    }
    Ok(DsrStepValue { loss, grad, j_acc, j_lan, kl })
}
