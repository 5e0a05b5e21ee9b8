//! dsr-core: decaying-scaffolding-reward reinforcement learning, desk scale.
//!
//! The crate trains a small autoregressive policy over a synthetic bilingual
//! vocabulary with two complementary rewards: a discrete accuracy reward and a
//! language-form reward (the fraction of Devanagari tokens in the generated
//! sequence). A time-decaying coefficient `lambda(tau)` mixes the two clipped
//! group-relative objectives, so the language scaffold dominates early
//! optimization and the task reward governs the final policy.
//!
//! Everything is exact and seeded: log-probabilities, KL terms, and loss
//! gradients are computed analytically, sampling is reproducible, and the
//! training pipeline (supervised stages, RL stage, evaluation) emits
//! bit-identical logs for a fixed seed.
//!
//! # Modules
//!
//! - [`textlang`]: tokens, Unicode script classes, Hindi-fraction statistic
//! - [`rewards`]: accuracy reward, language reward, verifier contract
//! - [`advantage`]: group-relative advantage normalization and broadcast
//! - [`objective`]: clipped surrogates, term mask, KL term, mixed loss + gradient
//! - [`policy`]: differentiable toy policy, sampling, snapshots, checkpoints
//! - [`training`]: decay schedule, SFT stages, RL steps, ablation variants
//! - [`evaluation`]: MCQ answer extraction, benchmark scoring, En-Hi gap
//! - [`lexicon`]: longest-match term protection and injected translation
//! - [`synthdata`]: seeded synthetic bilingual MCQ world
//! - [`dataset`]: line-delimited dataset / benchmark / run-log records

pub mod advantage;
pub mod dataset;
pub mod evaluation;
pub mod lexicon;
pub mod objective;
pub mod policy;
pub mod rewards;
pub mod synthdata;
pub mod textlang;
pub mod training;

pub use advantage::{broadcast_advantage, center_rewards, normalize_rewards, AdvantageTensor};
pub use objective::{clip_surrogate, mixed_objective, ClipConfig, TermMask};
pub use policy::{Policy, PromptBag, Vocabulary};
pub use rewards::{accuracy_reward, language_reward, AccReward, Label, Verifier};
pub use textlang::{classify_codepoint, classify_token, hindi_fraction, ScriptClass, Token, TokenSequence};

/// Mixes a base seed with a salt into a fresh stream seed.
///
/// Used everywhere a component needs its own deterministic RNG stream derived
/// from one top-level seed (per-candidate sampling, per-item evaluation, batch
/// shuffling). SplitMix64 finalizer.
pub fn mix_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
