//! A small, fully differentiable autoregressive policy.
//!
//! Architecture: token embedding + prompt-bag conditioning + linear-softmax
//! head, no attention. The hidden state for a context is the embedding of the
//! previous token (zero at start-of-sequence) plus the mean of the prompt-bag
//! rows for the prompt's in-vocabulary tokens; logits are a linear map of the
//! hidden state. Everything is exact: log-probabilities, full conditional
//! distributions, and score gradients, which keeps finite-difference checks
//! and exact KL terms cheap.
//!
//! Parameters are a single flat `Vec<f64>` with layout
//! `[embedding | prompt-bag table | output matrix]`, each `|V| x d`
//! row-major, so the whole policy can be perturbed per-coordinate.

use crate::mix_seed;
use crate::textlang::{Token, TokenRole, TokenSequence};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;
use thiserror::Error;

pub type TokenId = u32;

/// Hard cap on vocabulary size.
pub const MAX_VOCAB: usize = 128;
/// End-of-sequence surface.
pub const EOS_SURFACE: &str = "</s>";
/// Default generation cap, in tokens.
pub const DEFAULT_MAX_LEN: usize = 32;
/// Parameter initialization range is `[-INIT_SCALE, INIT_SCALE]`.
pub const INIT_SCALE: f64 = 0.1;

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("unknown token id {0}")]
    InvalidToken(TokenId),
    #[error("word {0:?} is not in the vocabulary")]
    UnknownWord(String),
    #[error("numerical error: {0}")]
    NumericalError(String),
    #[error("invalid vocabulary: {0}")]
    InvalidVocabulary(String),
    #[error("bad checkpoint: {0}")]
    BadCheckpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Structural kind of a vocabulary entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Content,
    OptionLetter,
    ThinkOpen,
    ThinkClose,
    AnswerMarker,
    Eos,
}

impl TokenKind {
    fn as_str(self) -> &'static str {
        match self {
            TokenKind::Content => "content",
            TokenKind::OptionLetter => "option",
            TokenKind::ThinkOpen => "think_open",
            TokenKind::ThinkClose => "think_close",
            TokenKind::AnswerMarker => "answer_marker",
            TokenKind::Eos => "eos",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "content" => TokenKind::Content,
            "option" => TokenKind::OptionLetter,
            "think_open" => TokenKind::ThinkOpen,
            "think_close" => TokenKind::ThinkClose,
            "answer_marker" => TokenKind::AnswerMarker,
            "eos" => TokenKind::Eos,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VocabEntry {
    pub surface: String,
    pub kind: TokenKind,
}

/// A closed vocabulary with the four structural tokens required by the
/// response format: `<think>`, `</think>`, `Answer:`, `</s>`.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    entries: Vec<VocabEntry>,
    by_surface: BTreeMap<String, TokenId>,
    think_open: TokenId,
    think_close: TokenId,
    answer_marker: TokenId,
    eos: TokenId,
}

impl Vocabulary {
    pub fn new(entries: Vec<VocabEntry>) -> Result<Self, PolicyError> {
        if entries.is_empty() || entries.len() > MAX_VOCAB {
            return Err(PolicyError::InvalidVocabulary(format!(
                "vocabulary size {} outside 1..={MAX_VOCAB}",
                entries.len()
            )));
        }
        let mut by_surface = BTreeMap::new();
        for (id, e) in entries.iter().enumerate() {
            if e.surface.is_empty() || e.surface.chars().any(char::is_whitespace) {
                return Err(PolicyError::InvalidVocabulary(format!(
                    "surface {:?} is empty or contains whitespace",
                    e.surface
                )));
            }
            if by_surface.insert(e.surface.clone(), id as TokenId).is_some() {
                return Err(PolicyError::InvalidVocabulary(format!(
                    "duplicate surface {:?}",
                    e.surface
                )));
            }
        }
        let unique = |kind: TokenKind| -> Result<TokenId, PolicyError> {
            let ids: Vec<TokenId> = entries
                .iter()
                .enumerate()
                .filter(|(_, e)| e.kind == kind)
                .map(|(i, _)| i as TokenId)
                .collect();
            match ids.as_slice() {
                [id] => Ok(*id),
                _ => Err(PolicyError::InvalidVocabulary(format!(
                    "expected exactly one {} token, found {}",
                    kind.as_str(),
                    ids.len()
                ))),
            }
        };
        let think_open = unique(TokenKind::ThinkOpen)?;
        let think_close = unique(TokenKind::ThinkClose)?;
        let answer_marker = unique(TokenKind::AnswerMarker)?;
        let eos = unique(TokenKind::Eos)?;
        Ok(Vocabulary { entries, by_surface, think_open, think_close, answer_marker, eos })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry(&self, id: TokenId) -> Result<&VocabEntry, PolicyError> {
        self.entries.get(id as usize).ok_or(PolicyError::InvalidToken(id))
    }

    pub fn entries(&self) -> &[VocabEntry] {
        &self.entries
    }

    pub fn id_of(&self, surface: &str) -> Option<TokenId> {
        self.by_surface.get(surface).copied()
    }

    pub fn eos(&self) -> TokenId {
        self.eos
    }

    pub fn think_open(&self) -> TokenId {
        self.think_open
    }

    pub fn think_close(&self) -> TokenId {
        self.think_close
    }

    pub fn answer_marker(&self) -> TokenId {
        self.answer_marker
    }

    /// Prompt bag: ids of the prompt's in-vocabulary words, duplicates kept,
    /// unknown words dropped.
    pub fn prompt_bag(&self, text: &str) -> PromptBag {
        PromptBag::new(text.split_whitespace().filter_map(|w| self.id_of(w)).collect())
    }

    /// Strict tokenization: every whitespace-delimited word must be known.
    pub fn tokenize(&self, text: &str) -> Result<Vec<TokenId>, PolicyError> {
        text.split_whitespace()
            .map(|w| self.id_of(w).ok_or_else(|| PolicyError::UnknownWord(w.to_string())))
            .collect()
    }

    /// Renders token ids back to whitespace-joined surfaces.
    pub fn render(&self, ids: &[TokenId]) -> Result<String, PolicyError> {
        let mut words = Vec::with_capacity(ids.len());
        for &id in ids {
            words.push(self.entry(id)?.surface.as_str());
        }
        Ok(words.join(" "))
    }

    /// Builds a role-annotated token sequence from generated ids.
    ///
    /// Structural tokens are delimiters; tokens inside the first well-formed
    /// think block are reasoning; tokens after an answer marker are answer
    /// tokens; anything else defaults to reasoning.
    pub fn annotate(&self, ids: &[TokenId]) -> Result<TokenSequence, PolicyError> {
        #[derive(PartialEq)]
        enum State {
            Outside,
            InThink,
            InAnswer,
        }
        let mut state = State::Outside;
        let mut tokens = Vec::with_capacity(ids.len());
        for &id in ids {
            let entry = self.entry(id)?;
            let role = match entry.kind {
                TokenKind::ThinkOpen => {
                    state = State::InThink;
                    TokenRole::Delimiter
                }
                TokenKind::ThinkClose => {
                    state = State::Outside;
                    TokenRole::Delimiter
                }
                TokenKind::AnswerMarker => {
                    state = State::InAnswer;
                    TokenRole::Delimiter
                }
                TokenKind::Eos => TokenRole::Delimiter,
                _ => match state {
                    State::InThink => TokenRole::Reasoning,
                    State::InAnswer => TokenRole::Answer,
                    State::Outside => TokenRole::Reasoning,
                },
            };
            tokens.push(
                Token::new(entry.surface.clone(), id, role)
                    .map_err(|e| PolicyError::InvalidVocabulary(e.to_string()))?,
            );
        }
        Ok(TokenSequence::new(tokens))
    }
}

/// Bag of prompt token ids used for conditioning.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PromptBag {
    ids: Vec<TokenId>,
}

impl PromptBag {
    pub fn new(ids: Vec<TokenId>) -> Self {
        PromptBag { ids }
    }

    pub fn empty() -> Self {
        PromptBag::default()
    }

    pub fn ids(&self) -> &[TokenId] {
        &self.ids
    }
}

/// One sampled candidate: tokens, their log-probabilities under the sampling
/// policy, and the seed that reproduces them.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub tokens: TokenSequence,
    pub ids: Vec<TokenId>,
    pub logp_old: Vec<f64>,
    pub seed: u64,
}

/// Numerically stable log-softmax.
pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
    logits.iter().map(|z| z - lse).collect()
}

/// The differentiable policy. Cloning yields an independent frozen copy.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    vocab: Arc<Vocabulary>,
    dim: usize,
    params: Vec<f64>,
}

impl Policy {
    /// Seeded initialization, uniform in `[-0.1, 0.1]`.
    pub fn init(vocab: Arc<Vocabulary>, dim: usize, seed: u64) -> Self {
        let n = 3 * vocab.len() * dim;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = (0..n).map(|_| rng.gen_range(-INIT_SCALE..=INIT_SCALE)).collect();
        Policy { vocab, dim, params }
    }

    pub fn zeros(vocab: Arc<Vocabulary>, dim: usize) -> Self {
        let n = 3 * vocab.len() * dim;
        Policy { vocab, dim, params: vec![0.0; n] }
    }

    pub fn vocab(&self) -> &Arc<Vocabulary> {
        &self.vocab
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn embed_off(&self, id: TokenId) -> usize {
        id as usize * self.dim
    }

    fn bag_off(&self, id: TokenId) -> usize {
        (self.vocab.len() + id as usize) * self.dim
    }

    fn out_off(&self, id: TokenId) -> usize {
        (2 * self.vocab.len() + id as usize) * self.dim
    }

    fn check_id(&self, id: TokenId) -> Result<(), PolicyError> {
        if (id as usize) < self.vocab.len() {
            Ok(())
        } else {
            Err(PolicyError::InvalidToken(id))
        }
    }

    fn hidden(&self, prev: Option<TokenId>, bag: &PromptBag) -> Result<Vec<f64>, PolicyError> {
        let mut h = vec![0.0; self.dim];
        if let Some(p) = prev {
            self.check_id(p)?;
            let off = self.embed_off(p);
            h.copy_from_slice(&self.params[off..off + self.dim]);
        }
        if !bag.ids.is_empty() {
            let w = 1.0 / bag.ids.len() as f64;
            for &id in &bag.ids {
                self.check_id(id)?;
                let off = self.bag_off(id);
                for j in 0..self.dim {
                    h[j] += w * self.params[off + j];
                }
            }
        }
        Ok(h)
    }

    /// Logits over the vocabulary at one context.
    pub fn logits(&self, prev: Option<TokenId>, bag: &PromptBag) -> Result<Vec<f64>, PolicyError> {
        let h = self.hidden(prev, bag)?;
        let v = self.vocab.len();
        let mut z = vec![0.0; v];
        for (id, zi) in z.iter_mut().enumerate() {
            let off = self.out_off(id as TokenId);
            *zi = self.params[off..off + self.dim].iter().zip(&h).map(|(u, hj)| u * hj).sum();
        }
        Ok(z)
    }

    /// Log-probabilities over the full vocabulary at one context.
    pub fn log_dist(&self, prev: Option<TokenId>, bag: &PromptBag) -> Result<Vec<f64>, PolicyError> {
        Ok(log_softmax(&self.logits(prev, bag)?))
    }

    /// Per-token log-probabilities of a sequence under this policy.
    pub fn log_prob(&self, ids: &[TokenId], bag: &PromptBag) -> Result<Vec<f64>, PolicyError> {
        let mut out = Vec::with_capacity(ids.len());
        let mut prev = None;
        for &id in ids {
            self.check_id(id)?;
            let dist = self.log_dist(prev, bag)?;
            let lp = dist[id as usize];
            if !lp.is_finite() {
                return Err(PolicyError::NumericalError(format!("non-finite log-prob {lp}")));
            }
            out.push(lp);
            prev = Some(id);
        }
        Ok(out)
    }

    /// Full conditional log-distributions at every context a sequence visits.
    pub fn full_log_dists(&self, ids: &[TokenId], bag: &PromptBag) -> Result<Vec<Vec<f64>>, PolicyError> {
        let mut rows = Vec::with_capacity(ids.len());
        let mut prev = None;
        for &id in ids {
            self.check_id(id)?;
            rows.push(self.log_dist(prev, bag)?);
            prev = Some(id);
        }
        Ok(rows)
    }

    /// Ancestral sampling of one response, deterministic given the seed.
    /// Generation stops at end-of-sequence; the final slot forces it.
    pub fn sample_one(&self, bag: &PromptBag, seed: u64, max_len: usize) -> Result<SampleRecord, PolicyError> {
        assert!(max_len >= 1, "generation cap must be positive");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let eos = self.vocab.eos();
        let mut ids = Vec::new();
        let mut logp = Vec::new();
        let mut prev = None;
        for pos in 0..max_len {
            let dist = self.log_dist(prev, bag)?;
            let id = if pos + 1 == max_len { eos } else { draw(&dist, rng.gen::<f64>()) };
            logp.push(dist[id as usize]);
            ids.push(id);
            if id == eos {
                break;
            }
            prev = Some(id);
        }
        let tokens = self.vocab.annotate(&ids)?;
        Ok(SampleRecord { tokens, ids, logp_old: logp, seed })
    }

    /// Samples a group of K candidates with per-candidate derived seeds.
    pub fn sample_group(
        &self,
        bag: &PromptBag,
        k: usize,
        seed: u64,
        max_len: usize,
    ) -> Result<Vec<SampleRecord>, PolicyError> {
        (0..k).map(|i| self.sample_one(bag, mix_seed(seed, i as u64), max_len)).collect()
    }

    /// Analytic gradient of the sequence log-likelihood with respect to the
    /// flat parameter vector.
    pub fn score_gradient(&self, ids: &[TokenId], bag: &PromptBag) -> Result<Vec<f64>, PolicyError> {
        self.score_gradient_from(None, ids, bag)
    }

    /// Same, starting from an arbitrary previous-token context.
    pub fn score_gradient_from(
        &self,
        start: Option<TokenId>,
        ids: &[TokenId],
        bag: &PromptBag,
    ) -> Result<Vec<f64>, PolicyError> {
        let mut grad = vec![0.0; self.n_params()];
        let mut prev = start;
        for &id in ids {
            self.check_id(id)?;
            let dist = self.log_dist(prev, bag)?;
            let mut cot: Vec<f64> = dist.iter().map(|lp| -lp.exp()).collect();
            cot[id as usize] += 1.0;
            self.accumulate_logit_grad(prev, bag, &cot, &mut grad)?;
            prev = Some(id);
        }
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(PolicyError::NumericalError("non-finite score gradient".into()));
        }
        Ok(grad)
    }

    /// Backpropagates a logit cotangent at one context into the parameter
    /// gradient accumulator.
    pub fn accumulate_logit_grad(
        &self,
        prev: Option<TokenId>,
        bag: &PromptBag,
        cotangent: &[f64],
        grad: &mut [f64],
    ) -> Result<(), PolicyError> {
        assert_eq!(cotangent.len(), self.vocab.len());
        assert_eq!(grad.len(), self.n_params());
        let h = self.hidden(prev, bag)?;
        let mut dh = vec![0.0; self.dim];
        for (id, &c) in cotangent.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let off = self.out_off(id as TokenId);
            for j in 0..self.dim {
                grad[off + j] += c * h[j];
                dh[j] += c * self.params[off + j];
            }
        }
        if let Some(p) = prev {
            let off = self.embed_off(p);
            for j in 0..self.dim {
                grad[off + j] += dh[j];
            }
        }
        if !bag.ids.is_empty() {
            let w = 1.0 / bag.ids.len() as f64;
            for &id in &bag.ids {
                let off = self.bag_off(id);
                for j in 0..self.dim {
                    grad[off + j] += w * dh[j];
                }
            }
        }
        Ok(())
    }

    /// Immutable copy usable as a reference or old policy.
    pub fn snapshot(&self) -> Policy {
        self.clone()
    }

    /// Serializes the checkpoint (version, vocabulary, bit-exact parameters).
    pub fn write_checkpoint(&self, w: &mut impl std::io::Write) -> Result<(), PolicyError> {
        let mut s = String::new();
        writeln!(s, "dsr-checkpoint v1").unwrap();
        writeln!(s, "dim {}", self.dim).unwrap();
        writeln!(s, "vocab {}", self.vocab.len()).unwrap();
        for e in self.vocab.entries() {
            writeln!(s, "{}\t{}", e.surface, e.kind.as_str()).unwrap();
        }
        writeln!(s, "params {}", self.params.len()).unwrap();
        for chunk in self.params.chunks(8) {
            let words: Vec<String> = chunk.iter().map(|p| format!("{:016x}", p.to_bits())).collect();
            writeln!(s, "{}", words.join(" ")).unwrap();
        }
        w.write_all(s.as_bytes())?;
        Ok(())
    }

    /// Parses a checkpoint. Round-trips are bit-exact.
    pub fn parse_checkpoint(bytes: &[u8]) -> Result<Policy, PolicyError> {
        let text = std::str::from_utf8(bytes)
            .map_err(|e| PolicyError::BadCheckpoint(format!("not utf-8: {e}")))?;
        let mut lines = text.lines();
        let bad = |msg: &str| PolicyError::BadCheckpoint(msg.to_string());
        if lines.next() != Some("dsr-checkpoint v1") {
            return Err(bad("missing or unsupported header"));
        }
        let dim = parse_kv(lines.next(), "dim")?;
        if dim == 0 || dim > 64 {
            return Err(bad("dim outside 1..=64"));
        }
        let vocab_len = parse_kv(lines.next(), "vocab")?;
        let mut entries = Vec::with_capacity(vocab_len);
        for _ in 0..vocab_len {
            let line = lines.next().ok_or_else(|| bad("truncated vocabulary"))?;
            let (surface, kind) =
                line.split_once('\t').ok_or_else(|| bad("vocabulary line missing tab"))?;
            let kind = TokenKind::parse(kind)
                .ok_or_else(|| PolicyError::BadCheckpoint(format!("unknown token kind {kind:?}")))?;
            entries.push(VocabEntry { surface: surface.to_string(), kind });
        }
        let vocab = Vocabulary::new(entries)?;
        let n_params = parse_kv(lines.next(), "params")?;
        if n_params != 3 * vocab.len() * dim {
            return Err(bad("parameter count does not match dimensions"));
        }
        let mut params = Vec::with_capacity(n_params);
        for line in lines.by_ref() {
            for word in line.split_whitespace() {
                let bits = u64::from_str_radix(word, 16)
                    .map_err(|e| PolicyError::BadCheckpoint(format!("bad parameter word: {e}")))?;
                params.push(f64::from_bits(bits));
            }
        }
        if params.len() != n_params {
            return Err(bad("parameter payload has the wrong length"));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(bad("non-finite parameter"));
        }
        Ok(Policy { vocab: Arc::new(vocab), dim, params })
    }

    /// Writes the checkpoint atomically (temp file + rename).
    pub fn save(&self, path: &Path) -> Result<(), PolicyError> {
        let tmp = path.with_extension("tmp");
        {
            let mut f = std::fs::File::create(&tmp)?;
            self.write_checkpoint(&mut f)?;
        }
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Policy, PolicyError> {
        Policy::parse_checkpoint(&std::fs::read(path)?)
    }
}

fn parse_kv(line: Option<&str>, key: &str) -> Result<usize, PolicyError> {
    let line = line.ok_or_else(|| PolicyError::BadCheckpoint(format!("missing {key} line")))?;
    let value = line
        .strip_prefix(key)
        .and_then(|rest| rest.strip_prefix(' '))
        .ok_or_else(|| PolicyError::BadCheckpoint(format!("expected {key} line, got {line:?}")))?;
    value
        .parse::<usize>()
        .map_err(|e| PolicyError::BadCheckpoint(format!("bad {key} value: {e}")))
}

/// Inverse-CDF draw from a log-distribution.
fn draw(log_dist: &[f64], u: f64) -> TokenId {
    let mut acc = 0.0;
    for (id, lp) in log_dist.iter().enumerate() {
        acc += lp.exp();
        if u < acc {
            return id as TokenId;
        }
    }
    (log_dist.len() - 1) as TokenId
}
