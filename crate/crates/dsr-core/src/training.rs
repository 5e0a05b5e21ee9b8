//! The three-stage training procedure: two supervised fine-tuning stages
//! (language adaptation, reasoning cold-start) and the scaffolded RL stage
//! with the cosine-decaying mixing coefficient.
//!
//! SFT minimizes token-averaged negative log-likelihood on target tokens
//! only; the prompt conditions generation through the bag and is never
//! scored. The RL stage samples a fresh on-policy group per prompt per step
//! from a per-step snapshot, scores both rewards, normalizes them per group,
//! and applies one optimizer update from the analytic mixed-loss gradient.
//! A step either fully succeeds or leaves the parameters untouched.

use crate::advantage::{group_advantages, AdvantageError, GroupRewards, RewardKind};
use crate::dataset::{DatasetError, TrainRecord};
use crate::evaluation::{extract_answer, EvalError, Language, McqItem};
use crate::lexicon::{derive_term_mask, Lexicon};
use crate::mix_seed;
use crate::objective::{dsr_loss_and_grad, ClipConfig, DsrCandidate, ObjectiveError, TermMask};
use crate::policy::{Policy, PolicyError, PromptBag, TokenId, Vocabulary, DEFAULT_MAX_LEN};
use crate::rewards::{accuracy_reward, language_reward, ExactVerifier, Label, RewardError, Verifier};
use crate::textlang::{hindi_fraction, TextError};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("example {0} has no unmasked target tokens")]
    DegenerateExample(usize),
    #[error("training diverged at step {step}: loss {loss}")]
    Diverged { step: u64, loss: f64 },
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Reward(#[from] RewardError),
    #[error(transparent)]
    Advantage(#[from] AdvantageError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Text(#[from] TextError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Shape of the mixing-coefficient schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecayShape {
    Cosine,
    Linear,
    Constant,
}

/// The lambda(tau) schedule: start weight, end weight, horizon, shape.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecaySchedule {
    pub lambda_start: f64,
    pub lambda_end: f64,
    pub horizon: u64,
    pub shape: DecayShape,
}

impl DecaySchedule {
    pub fn new(
        lambda_start: f64,
        lambda_end: f64,
        horizon: u64,
        shape: DecayShape,
    ) -> Result<Self, TrainError> {
        if !(0.0..=1.0).contains(&lambda_end)
            || !(0.0..=1.0).contains(&lambda_start)
            || lambda_end > lambda_start
        {
            return Err(TrainError::Config(format!(
                "schedule requires 0 <= end <= start <= 1, got start {lambda_start} end {lambda_end}"
            )));
        }
        if horizon == 0 {
            return Err(TrainError::Config("schedule horizon must be at least 1".into()));
        }
        Ok(DecaySchedule { lambda_start, lambda_end, horizon, shape })
    }

    /// The default scaffold: cosine from 0.9 down to 0.1.
    pub fn cosine(horizon: u64) -> Self {
        DecaySchedule::new(0.9, 0.1, horizon, DecayShape::Cosine).unwrap()
    }

    pub fn constant(value: f64, horizon: u64) -> Result<Self, TrainError> {
        DecaySchedule::new(value, value, horizon, DecayShape::Constant)
    }
}

/// The language-objective weight at step `tau`; clamps to the end value once
/// the schedule is exhausted. Endpoints are exact.
pub fn lambda_at(sched: &DecaySchedule, tau: u64) -> f64 {
    if tau == 0 {
        return match sched.shape {
            DecayShape::Constant => sched.lambda_start,
            _ => sched.lambda_start,
        };
    }
    if tau >= sched.horizon {
        return match sched.shape {
            DecayShape::Constant => sched.lambda_start,
            _ => sched.lambda_end,
        };
    }
    let frac = tau as f64 / sched.horizon as f64;
    match sched.shape {
        DecayShape::Constant => sched.lambda_start,
        DecayShape::Linear => sched.lambda_start + (sched.lambda_end - sched.lambda_start) * frac,
        DecayShape::Cosine => {
            sched.lambda_end
                + (sched.lambda_start - sched.lambda_end)
                    * (1.0 + (std::f64::consts::PI * frac).cos())
                    / 2.0
        }
    }
}

/// Optimizer choice for both SFT and RL updates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

/// First-order optimizer with optional adaptive moments.
#[derive(Debug, Clone)]
pub struct Optimizer {
    kind: OptimizerKind,
    lr: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

impl Optimizer {
    pub fn new(kind: OptimizerKind, lr: f64, n_params: usize) -> Self {
        Optimizer { kind, lr, m: vec![0.0; n_params], v: vec![0.0; n_params], t: 0 }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        match self.kind {
            OptimizerKind::Sgd => {
                for (p, g) in params.iter_mut().zip(grad) {
                    *p -= self.lr * g;
                }
            }
            OptimizerKind::Adam => {
                self.t += 1;
                let bc1 = 1.0 - ADAM_BETA1.powi(self.t as i32);
                let bc2 = 1.0 - ADAM_BETA2.powi(self.t as i32);
                for i in 0..params.len() {
                    self.m[i] = ADAM_BETA1 * self.m[i] + (1.0 - ADAM_BETA1) * grad[i];
                    self.v[i] = ADAM_BETA2 * self.v[i] + (1.0 - ADAM_BETA2) * grad[i] * grad[i];
                    let m_hat = self.m[i] / bc1;
                    let v_hat = self.v[i] / bc2;
                    params[i] -= self.lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
                }
            }
        }
    }
}

/// Training configuration. Defaults mirror the published run settings
/// (batch 8, lr 5e-6, K 8, clip 0.2, beta 0.001); desk-scale runs override
/// the learning rate and optimizer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub group_size: usize,
    pub eps_clip: f64,
    pub beta: f64,
    pub eps_norm: f64,
    pub seed: u64,
    pub max_steps: u64,
    pub max_len: usize,
    pub optimizer: OptimizerKind,
    pub ema_decay: f64,
    /// Collapse the 0.1 accuracy level to 0.
    pub binary_acc: bool,
    /// Threshold the language reward to {0, 1} at 0.5.
    pub binary_lan: bool,
    /// Evaluate every this many steps (0 disables periodic eval).
    pub eval_every: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 8,
            learning_rate: 5e-6,
            group_size: 8,
            eps_clip: 0.2,
            beta: 0.001,
            eps_norm: 1e-6,
            seed: 0,
            max_steps: 1000,
            max_len: DEFAULT_MAX_LEN,
            optimizer: OptimizerKind::Sgd,
            ema_decay: 0.9,
            binary_acc: false,
            binary_lan: false,
            eval_every: 0,
        }
    }
}

impl TrainConfig {
    pub fn clip_config(&self) -> ClipConfig {
        ClipConfig { eps_clip: self.eps_clip, beta: self.beta }
    }
}

/// The two supervised stages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    La,
    Rc,
}

/// One SFT example: prompt tokens condition the bag, target tokens carry the
/// loss. The mask over the concatenation is 1 exactly on target tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SftExample {
    prompt: Vec<TokenId>,
    target: Vec<TokenId>,
}

impl SftExample {
    /// Builds an example, truncating the target at `max_len` tokens.
    pub fn new(
        prompt: Vec<TokenId>,
        mut target: Vec<TokenId>,
        max_len: usize,
    ) -> Result<Self, TrainError> {
        target.truncate(max_len);
        if target.is_empty() {
            return Err(TrainError::DegenerateExample(0));
        }
        Ok(SftExample { prompt, target })
    }

    pub fn prompt(&self) -> &[TokenId] {
        &self.prompt
    }

    pub fn target(&self) -> &[TokenId] {
        &self.target
    }

    pub fn tokens(&self) -> Vec<TokenId> {
        self.prompt.iter().chain(&self.target).copied().collect()
    }

    pub fn mask(&self) -> Vec<bool> {
        let mut m = vec![false; self.prompt.len()];
        m.extend(std::iter::repeat(true).take(self.target.len()));
        m
    }
}

/// Token-averaged negative log-likelihood over unmasked (target) tokens.
pub fn sft_loss(policy: &Policy, batch: &[SftExample]) -> Result<f64, TrainError> {
    Ok(sft_loss_and_grad_impl(policy, batch, false)?.0)
}

/// Loss plus its parameter gradient.
pub fn sft_loss_and_grad(
    policy: &Policy,
    batch: &[SftExample],
) -> Result<(f64, Vec<f64>), TrainError> {
    let (loss, grad) = sft_loss_and_grad_impl(policy, batch, true)?;
    Ok((loss, grad.unwrap()))
}

fn sft_loss_and_grad_impl(
    policy: &Policy,
    batch: &[SftExample],
    with_grad: bool,
) -> Result<(f64, Option<Vec<f64>>), TrainError> {
    if batch.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let total_tokens: usize = batch.iter().map(|e| e.target.len()).sum();
    if total_tokens == 0 {
        return Err(TrainError::DegenerateExample(0));
    }
    let scale = 1.0 / total_tokens as f64;
    let mut loss = 0.0;
    let mut grad = if with_grad { Some(vec![0.0; policy.n_params()]) } else { None };
    let vocab_len = policy.vocab().len();
    let mut cot = vec![0.0; vocab_len];
    for example in batch {
        let bag = PromptBag::new(example.prompt.clone());
        let mut prev: Option<TokenId> = None;
        for &id in &example.target {
            let dist = policy.log_dist(prev, &bag)?;
            let idx = id as usize;
            if idx >= vocab_len {
                return Err(TrainError::Policy(PolicyError::InvalidToken(id)));
            }
            loss -= dist[idx] * scale;
            if let Some(g) = grad.as_mut() {
                // d(-log p)/dz = p - onehot, averaged over target tokens.
                for (v, c) in cot.iter_mut().enumerate() {
                    *c = (dist[v].exp() - if v == idx { 1.0 } else { 0.0 }) * scale;
                }
                policy.accumulate_logit_grad(prev, &bag, &cot, g)?;
            }
            prev = Some(id);
        }
    }
    Ok((loss, grad))
}

/// Loss curve of one SFT run with its EMA smoothing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SftStats {
    pub stage: Stage,
    pub losses: Vec<f64>,
    pub ema: Vec<f64>,
}

/// Runs one supervised stage: seeded shuffled batches, gradient descent on
/// the masked NLL, EMA-smoothed loss curve. Aborts on divergence.
pub fn sft_stage(
    policy: &mut Policy,
    dataset: &[SftExample],
    cfg: &TrainConfig,
    stage: Stage,
) -> Result<SftStats, TrainError> {
    if dataset.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, 0x5f7a));
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    order.shuffle(&mut rng);
    let mut cursor = 0usize;
    let mut optimizer = Optimizer::new(cfg.optimizer, cfg.learning_rate, policy.n_params());
    let mut losses = Vec::with_capacity(cfg.max_steps as usize);
    let mut ema_curve = Vec::with_capacity(cfg.max_steps as usize);
    let mut ema = f64::NAN;
    for step in 0..cfg.max_steps {
        let mut batch = Vec::with_capacity(cfg.batch_size);
        for _ in 0..cfg.batch_size.max(1) {
            if cursor == order.len() {
                order.shuffle(&mut rng);
                cursor = 0;
            }
            batch.push(dataset[order[cursor]].clone());
            cursor += 1;
        }
        let (loss, grad) = sft_loss_and_grad(policy, &batch)?;
        if !loss.is_finite() {
            return Err(TrainError::Diverged { step, loss });
        }
        optimizer.step(policy.params_mut(), &grad);
        ema = if ema.is_nan() { loss } else { cfg.ema_decay * ema + (1.0 - cfg.ema_decay) * loss };
        losses.push(loss);
        ema_curve.push(ema);
    }
    Ok(SftStats { stage, losses, ema: ema_curve })
}

/// Builds the stage dataset from training records.
///
/// LA keeps Hindi records and targets a short factual statement (the
/// question's in-vocabulary words) with no reasoning segment. RC targets the
/// full response format: reasoning between delimiters, then the answer.
pub fn build_sft_dataset(
    records: &[TrainRecord],
    vocab: &Vocabulary,
    stage: Stage,
    max_len: usize,
) -> Result<Vec<SftExample>, TrainError> {
    let mut out = Vec::new();
    for record in records {
        let prompt = vocab.prompt_bag(&record.question).ids().to_vec();
        match stage {
            Stage::La => {
                if record.language != Language::Hi {
                    continue;
                }
                let mut target = prompt.clone();
                target.push(vocab.eos());
                out.push(SftExample::new(prompt, target, max_len)?);
            }
            Stage::Rc => {
                let gold = record.gold()?;
                let letter = vocab
                    .id_of(&gold.to_string())
                    .ok_or_else(|| TrainError::Config(format!("no letter token for {gold}")))?;
                let mut target = vec![vocab.think_open()];
                target.extend(vocab.tokenize(&record.cot)?);
                target.push(vocab.think_close());
                target.push(vocab.answer_marker());
                target.push(letter);
                target.push(vocab.eos());
                out.push(SftExample::new(prompt, target, max_len)?);
            }
        }
    }
    if out.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    Ok(out)
}

/// One RL prompt: question text, prompt bag, gold label, option count.
#[derive(Debug, Clone)]
pub struct RlPrompt {
    pub question: String,
    pub bag: PromptBag,
    pub gold: Label,
    pub n_options: usize,
}

impl RlPrompt {
    pub fn from_record(record: &TrainRecord, vocab: &Vocabulary) -> Result<Self, TrainError> {
        Ok(RlPrompt {
            bag: vocab.prompt_bag(&record.question),
            question: record.question.clone(),
            gold: record.gold()?,
            n_options: record.options.len(),
        })
    }
}

/// One line of the RL run log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLogRecord {
    pub step: u64,
    pub lambda: f64,
    pub mean_r_acc: f64,
    pub mean_r_lan: f64,
    pub loss: f64,
    pub kl: f64,
    pub eval_acc: Option<f64>,
    pub eval_hi_frac: Option<f64>,
}

impl RunLogRecord {
    pub const CSV_HEADER: &'static str =
        "step,lambda,mean_r_acc,mean_r_lan,loss,kl,eval_acc,eval_hi_frac";

    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{}",
            self.step,
            self.lambda,
            self.mean_r_acc,
            self.mean_r_lan,
            self.loss,
            self.kl,
            opt(self.eval_acc),
            opt(self.eval_hi_frac)
        )
    }
}

/// Writes the plot-ready CSV export of a run log.
pub fn write_run_log_csv(path: &Path, log: &[RunLogRecord]) -> Result<(), TrainError> {
    let mut out = String::new();
    out.push_str(RunLogRecord::CSV_HEADER);
    out.push('\n');
    for rec in log {
        out.push_str(&rec.csv_row());
        out.push('\n');
    }
    let tmp = path.with_extension("tmp");
    std::fs::File::create(&tmp)?.write_all(out.as_bytes())?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// One RL update step. Samples a K-candidate group per prompt from the old
/// snapshot, scores both rewards, normalizes per group, assembles the mixed
/// loss, and applies exactly one optimizer update. Any error aborts before
/// the update, leaving the parameters bit-identical.
#[allow(clippy::too_many_arguments)]
pub fn dsr_step(
    policy: &mut Policy,
    old_snapshot: &Policy,
    ref_snapshot: &Policy,
    prompts: &[RlPrompt],
    cfg: &TrainConfig,
    sched: &DecaySchedule,
    tau: u64,
    verifier: &dyn Verifier,
    lexicon: Option<&Lexicon>,
    optimizer: &mut Optimizer,
) -> Result<RunLogRecord, TrainError> {
    if prompts.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let lambda = lambda_at(sched, tau);
    let mut batch: Vec<DsrCandidate> = Vec::with_capacity(prompts.len() * cfg.group_size);
    let mut acc_sum = 0.0;
    let mut lan_sum = 0.0;
    for (p_idx, prompt) in prompts.iter().enumerate() {
        let group_seed = mix_seed(mix_seed(cfg.seed, tau), p_idx as u64);
        let group = old_snapshot.sample_group(&prompt.bag, cfg.group_size, group_seed, cfg.max_len)?;
        let mut acc_values = Vec::with_capacity(group.len());
        let mut lan_values = Vec::with_capacity(group.len());
        let mut masks = Vec::with_capacity(group.len());
        for rec in &group {
            let acc = accuracy_reward(&rec.tokens, &prompt.question, prompt.gold, verifier)?;
            let acc_value = if cfg.binary_acc { acc.binary_value() } else { acc.value() };
            let lan_raw = language_reward(&rec.tokens)?;
            let lan_value = if cfg.binary_lan {
                if lan_raw >= 0.5 {
                    1.0
                } else {
                    0.0
                }
            } else {
                lan_raw
            };
            acc_values.push(acc_value);
            lan_values.push(lan_value);
            masks.push(match lexicon {
                Some(lex) => derive_term_mask(&rec.tokens, lex),
                None => TermMask::ones(rec.ids.len()),
            });
        }
        acc_sum += acc_values.iter().sum::<f64>();
        lan_sum += lan_values.iter().sum::<f64>();
        let adv_acc =
            group_advantages(&GroupRewards::new(acc_values, RewardKind::Acc), cfg.eps_norm)?;
        let adv_lan =
            group_advantages(&GroupRewards::new(lan_values, RewardKind::Lan), cfg.eps_norm)?;
        for (i, rec) in group.into_iter().enumerate() {
            batch.push(DsrCandidate {
                ids: rec.ids,
                logp_old: rec.logp_old,
                bag: prompt.bag.clone(),
                adv_acc: adv_acc[i],
                adv_lan: adv_lan[i],
                mask: masks[i].clone(),
            });
        }
    }
    let n_candidates = batch.len() as f64;
    let out = dsr_loss_and_grad(policy, ref_snapshot, &batch, &cfg.clip_config(), lambda)?;
    optimizer.step(policy.params_mut(), &out.grad);
    Ok(RunLogRecord {
        step: tau,
        lambda,
        mean_r_acc: acc_sum / n_candidates,
        mean_r_lan: lan_sum / n_candidates,
        loss: out.loss,
        kl: out.kl,
        eval_acc: None,
        eval_hi_frac: None,
    })
}

/// Samples one response per item and reports accuracy plus the mean Hindi
/// fraction of the generations.
pub fn evaluate_policy(
    policy: &Policy,
    items: &[McqItem],
    seed: u64,
    max_len: usize,
) -> Result<(f64, f64), TrainError> {
    if items.is_empty() {
        return Err(TrainError::Eval(EvalError::EmptyBenchmark));
    }
    let vocab = policy.vocab();
    let mut correct = 0usize;
    let mut hi_total = 0.0;
    for (idx, item) in items.iter().enumerate() {
        let bag = vocab.prompt_bag(&item.question);
        let rec = policy.sample_one(&bag, mix_seed(seed, idx as u64), max_len)?;
        let response = vocab.render(&rec.ids)?;
        if extract_answer(&response, item).label == Some(item.gold()) {
            correct += 1;
        }
        hi_total += hindi_fraction(&rec.tokens)?;
    }
    Ok((correct as f64 / items.len() as f64, hi_total / items.len() as f64))
}

/// Runs a full RL stage: per-step old-policy refresh, seeded prompt batches,
/// periodic evaluation, one log record per step.
pub fn dsr_run(
    policy: &mut Policy,
    ref_snapshot: &Policy,
    prompts: &[RlPrompt],
    eval_items: &[McqItem],
    cfg: &TrainConfig,
    sched: &DecaySchedule,
    verifier: &dyn Verifier,
    lexicon: Option<&Lexicon>,
) -> Result<Vec<RunLogRecord>, TrainError> {
    if prompts.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, 0xba7c4));
    let mut order: Vec<usize> = (0..prompts.len()).collect();
    order.shuffle(&mut rng);
    let mut cursor = 0usize;
    let mut optimizer = Optimizer::new(cfg.optimizer, cfg.learning_rate, policy.n_params());
    let mut log = Vec::with_capacity(cfg.max_steps as usize);
    for tau in 0..cfg.max_steps {
        let mut step_prompts = Vec::with_capacity(cfg.batch_size);
        for _ in 0..cfg.batch_size.max(1) {
            if cursor == order.len() {
                order.shuffle(&mut rng);
                cursor = 0;
            }
            step_prompts.push(prompts[order[cursor]].clone());
            cursor += 1;
        }
        let old = policy.snapshot();
        let mut record = dsr_step(
            policy,
            &old,
            ref_snapshot,
            &step_prompts,
            cfg,
            sched,
            tau,
            verifier,
            lexicon,
            &mut optimizer,
        )?;
        if !eval_items.is_empty()
            && cfg.eval_every > 0
            && (tau % cfg.eval_every == 0 || tau + 1 == cfg.max_steps)
        {
            let (acc, hi) =
                evaluate_policy(policy, eval_items, mix_seed(cfg.seed, 0xe7a1 ^ tau), cfg.max_len)?;
            record.eval_acc = Some(acc);
            record.eval_hi_frac = Some(hi);
        }
        log.push(record);
    }
    Ok(log)
}

/// A named reward-ablation variant: configuration plus schedule.
#[derive(Debug, Clone)]
pub struct AblationVariant {
    pub name: &'static str,
    pub cfg: TrainConfig,
    pub sched: DecaySchedule,
}

/// The reward-ablation grid: no language reward, binary accuracy reward,
/// binary language reward, constant mixing ratio, linear decay.
pub fn reward_ablation_variants(cfg: &TrainConfig, sched: &DecaySchedule) -> Vec<AblationVariant> {
    let horizon = sched.horizon;
    vec![
        AblationVariant {
            name: "wo_r_lan",
            cfg: *cfg,
            sched: DecaySchedule::constant(0.0, horizon).unwrap(),
        },
        AblationVariant {
            name: "binary_r_acc",
            cfg: TrainConfig { binary_acc: true, ..*cfg },
            sched: *sched,
        },
        AblationVariant {
            name: "binary_r_lan",
            cfg: TrainConfig { binary_lan: true, ..*cfg },
            sched: *sched,
        },
        AblationVariant {
            name: "constant_reward_ratio",
            cfg: *cfg,
            sched: DecaySchedule::constant(0.5, horizon).unwrap(),
        },
        AblationVariant {
            name: "linear_decay",
            cfg: *cfg,
            sched: DecaySchedule::new(
                sched.lambda_start,
                sched.lambda_end,
                horizon,
                DecayShape::Linear,
            )
            .unwrap(),
        },
    ]
}

/// Desk-scale exact verifier for a fixed option count.
pub fn desk_verifier(n_options: usize) -> ExactVerifier {
    ExactVerifier::new(n_options)
}
