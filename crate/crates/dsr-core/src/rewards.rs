//! Per-candidate rewards: discrete accuracy reward and language-form reward.
//!
//! The accuracy reward takes one of three values: 0 for responses without a
//! reasoning segment, 0.1 for responses with reasoning but an incorrect
//! answer, 1 for responses with reasoning and a correct answer. Correctness
//! is delegated to a pluggable [`Verifier`]; the desk-scale binding is
//! [`ExactVerifier`], an exact stand-in for a learned verifier that reports
//! the probability of the "correct" class as its confidence.
//!
//! The language reward is the Hindi fraction of the whole generated sequence,
//! unmasked; the term mask applies only inside the language objective.

use crate::textlang::{hindi_fraction, ScriptClass, TextError, TokenSequence};
use thiserror::Error;

/// Opening delimiter of the reasoning segment.
pub const THINK_OPEN: &str = "<think>";
/// Closing delimiter of the reasoning segment.
pub const THINK_CLOSE: &str = "</think>";
/// Marker introducing the answer segment.
pub const ANSWER_MARKER: &str = "Answer:";
/// Hindi answer marker accepted when verifying free-form responses.
pub const ANSWER_MARKER_HI: &str = "उत्तर:";
/// Confidence at or above which a verdict counts as correct.
pub const CONFIDENCE_THRESHOLD: f64 = 0.5;
/// Largest supported option count (labels A..J).
pub const MAX_OPTIONS: usize = 10;

#[derive(Debug, Error, PartialEq)]
pub enum RewardError {
    #[error("verifier unavailable: {0}")]
    VerifierUnavailable(String),
    #[error("label {label} outside the option set of size {n_options}")]
    InvalidLabel { label: char, n_options: usize },
    #[error(transparent)]
    Text(#[from] TextError),
}

/// An option label, `A` through `J`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Label(char);

impl Label {
    pub fn new(c: char) -> Option<Self> {
        let up = c.to_ascii_uppercase();
        ('A'..='J').contains(&up).then_some(Label(up))
    }

    pub fn from_index(index: usize) -> Option<Self> {
        (index < MAX_OPTIONS).then(|| Label((b'A' + index as u8) as char))
    }

    /// Parses a label from a word, tolerating surrounding punctuation.
    pub fn parse(word: &str) -> Option<Self> {
        let core = word.trim_matches(|c: char| !c.is_alphanumeric());
        let mut chars = core.chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) => Label::new(c),
            _ => None,
        }
    }

    pub fn index(self) -> usize {
        (self.0 as u8 - b'A') as usize
    }

    pub fn as_char(self) -> char {
        self.0
    }
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The discrete accuracy reward.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AccReward {
    NoReasoning,
    ReasoningWrong,
    ReasoningCorrect,
}

impl AccReward {
    /// Reward value: 0, 0.1, or 1.
    pub fn value(self) -> f64 {
        match self {
            AccReward::NoReasoning => 0.0,
            AccReward::ReasoningWrong => 0.1,
            AccReward::ReasoningCorrect => 1.0,
        }
    }

    /// Binary-ablation value: the partial credit 0.1 collapses to 0.
    pub fn binary_value(self) -> f64 {
        match self {
            AccReward::ReasoningCorrect => 1.0,
            _ => 0.0,
        }
    }
}

/// Verdict of an answer verifier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifierVerdict {
    pub correct: bool,
    pub confidence: f64,
}

/// Answer-verification contract: `(question, response, gold) -> verdict`.
///
/// Implementations must be total and deterministic for fixed inputs.
pub trait Verifier {
    fn verify(&self, question: &str, response: &str, gold: Label) -> Result<VerifierVerdict, RewardError>;
}

/// Per-candidate reward pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardBundle {
    pub acc: AccReward,
    pub lan: f64,
    pub candidate_index: usize,
}

/// True iff the response contains a non-empty reasoning segment.
///
/// The segment is the tokens strictly between the first `<think>` and the
/// first following `</think>`, and it must precede any answer marker.
/// Malformed delimiters (unclosed, inverted, empty interior) yield `false`.
pub fn detect_reasoning(seq: &TokenSequence) -> bool {
    let surfaces: Vec<&str> = seq.iter().map(|t| t.surface.as_str()).collect();
    let open = match surfaces.iter().position(|s| *s == THINK_OPEN) {
        Some(i) => i,
        None => return false,
    };
    let close = match surfaces[open + 1..].iter().position(|s| *s == THINK_CLOSE) {
        Some(off) => open + 1 + off,
        None => return false,
    };
    if close == open + 1 {
        return false;
    }
    // An answer marker inside or before the reasoning segment is malformed.
    !surfaces[..close].iter().any(|s| is_answer_marker(s))
}

fn is_answer_marker(word: &str) -> bool {
    word == ANSWER_MARKER || word == ANSWER_MARKER_HI
}

/// Extracts the answer label from the answer segment of a response.
///
/// The segment starts at the last answer marker; the first following word
/// that parses as an option label wins.
pub fn extract_reward_answer(seq: &TokenSequence) -> Option<Label> {
    let surfaces: Vec<&str> = seq.iter().map(|t| t.surface.as_str()).collect();
    let marker = surfaces.iter().rposition(|s| is_answer_marker(s))?;
    surfaces[marker + 1..].iter().find_map(|w| Label::parse(w))
}

/// Computes the accuracy reward for one candidate response.
///
/// The reward is never silently defaulted: a verifier failure propagates.
pub fn accuracy_reward(
    seq: &TokenSequence,
    question: &str,
    gold: Label,
    verifier: &dyn Verifier,
) -> Result<AccReward, RewardError> {
    if !detect_reasoning(seq) {
        return Ok(AccReward::NoReasoning);
    }
    let response: Vec<&str> = seq.iter().map(|t| t.surface.as_str()).collect();
    let verdict = verifier.verify(question, &response.join(" "), gold)?;
    if verdict.confidence >= CONFIDENCE_THRESHOLD {
        Ok(AccReward::ReasoningCorrect)
    } else {
        Ok(AccReward::ReasoningWrong)
    }
}

/// The language-form reward: Hindi fraction of the whole generated sequence.
pub fn language_reward(seq: &TokenSequence) -> Result<f64, RewardError> {
    Ok(hindi_fraction(seq)?)
}

/// Compares an extracted label against gold within an option set of the given
/// size. Confidence is exactly 0 or 1.
pub fn exact_verifier(
    extracted: Label,
    gold: Label,
    n_options: usize,
) -> Result<VerifierVerdict, RewardError> {
    for label in [extracted, gold] {
        if label.index() >= n_options {
            return Err(RewardError::InvalidLabel { label: label.as_char(), n_options });
        }
    }
    let correct = extracted == gold;
    Ok(VerifierVerdict { correct, confidence: if correct { 1.0 } else { 0.0 } })
}

/// Desk-scale exact verifier: extracts the answer from the response text and
/// compares it to gold.
#[derive(Debug, Clone, Copy)]
pub struct ExactVerifier {
    pub n_options: usize,
}

impl ExactVerifier {
    pub fn new(n_options: usize) -> Self {
        ExactVerifier { n_options }
    }

    fn extract(&self, response: &str) -> Option<Label> {
        let words: Vec<&str> = response.split_whitespace().collect();
        let marker = words.iter().rposition(|w| is_answer_marker(w))?;
        words[marker + 1..].iter().find_map(|w| Label::parse(w))
    }
}

impl Verifier for ExactVerifier {
    fn verify(&self, _question: &str, response: &str, gold: Label) -> Result<VerifierVerdict, RewardError> {
        if gold.index() >= self.n_options {
            return Err(RewardError::InvalidLabel { label: gold.as_char(), n_options: self.n_options });
        }
        match self.extract(response).filter(|l| l.index() < self.n_options) {
            Some(extracted) => exact_verifier(extracted, gold, self.n_options),
            None => Ok(VerifierVerdict { correct: false, confidence: 0.0 }),
        }
    }
}

/// Whether a token counts as Hindi for reward purposes.
pub fn is_hindi_token(script: ScriptClass) -> bool {
    script == ScriptClass::Devanagari
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textlang::{Token, TokenRole};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn seq_of(surfaces: &[&str]) -> TokenSequence {
        TokenSequence::new(
            surfaces
                .iter()
                .enumerate()
                .map(|(i, s)| Token::new(*s, i as u32, TokenRole::Reasoning).unwrap())
                .collect(),
        )
    }

    struct FailingVerifier;
    impl Verifier for FailingVerifier {
        fn verify(&self, _q: &str, _r: &str, _g: Label) -> Result<VerifierVerdict, RewardError> {
            Err(RewardError::VerifierUnavailable("backend down".into()))
        }
    }

    /// Learned-verifier stand-in: same decision as the exact verifier but the
    /// confidence comes out of a {0,1}-valued softmax head.
    struct LearnedMock {
        inner: ExactVerifier,
    }
    impl Verifier for LearnedMock {
        fn verify(&self, q: &str, r: &str, g: Label) -> Result<VerifierVerdict, RewardError> {
            let v = self.inner.verify(q, r, g)?;
            Ok(VerifierVerdict { correct: v.confidence >= 0.5, confidence: v.confidence })
        }
    }

    #[test]
    fn detect_reasoning_cases() {
        assert!(detect_reasoning(&seq_of(&["<think>", "जल", "नदी", "वन", "</think>", "Answer:", "B"])));
        assert!(!detect_reasoning(&seq_of(&["Answer:", "B"])));
        assert!(!detect_reasoning(&seq_of(&["<think>", "</think>", "Answer:", "B"])));
        // Malformed: unclosed, inverted, marker inside the segment.
        assert!(!detect_reasoning(&seq_of(&["<think>", "जल", "Answer:", "B"])));
        assert!(!detect_reasoning(&seq_of(&["</think>", "जल", "<think>", "Answer:", "B"])));
        assert!(!detect_reasoning(&seq_of(&["<think>", "Answer:", "जल", "</think>", "B"])));
    }

    #[test]
    fn accuracy_reward_levels() {
        let v = ExactVerifier::new(5);
        let gold = Label::new('B').unwrap();
        let no_reasoning = seq_of(&["Answer:", "B"]);
        assert_eq!(accuracy_reward(&no_reasoning, "q", gold, &v).unwrap(), AccReward::NoReasoning);

        let wrong = seq_of(&["<think>", "जल", "</think>", "Answer:", "A"]);
        assert_eq!(accuracy_reward(&wrong, "q", gold, &v).unwrap(), AccReward::ReasoningWrong);

        let right = seq_of(&["<think>", "जल", "</think>", "Answer:", "B"]);
        assert_eq!(accuracy_reward(&right, "q", gold, &v).unwrap(), AccReward::ReasoningCorrect);

        // Missing answer after reasoning is wrong, not an error.
        let missing = seq_of(&["<think>", "जल", "</think>"]);
        assert_eq!(accuracy_reward(&missing, "q", gold, &v).unwrap(), AccReward::ReasoningWrong);

        let err = accuracy_reward(&right, "q", gold, &FailingVerifier).unwrap_err();
        assert!(matches!(err, RewardError::VerifierUnavailable(_)));
    }

    #[test]
    fn language_reward_counts_delimiters_as_non_hindi() {
        let all_hi = seq_of(&["जल", "नदी", "वन"]);
        assert_eq!(language_reward(&all_hi).unwrap(), 1.0);

        let half = seq_of(&["जल", "lake"]);
        assert_eq!(language_reward(&half).unwrap(), 0.5);

        // Hand count: <think> जल जल </think> Answer: B -> 2 Hindi of 6 tokens.
        let framed = seq_of(&["<think>", "जल", "जल", "</think>", "Answer:", "B"]);
        assert!((language_reward(&framed).unwrap() - 2.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn exact_verifier_verdicts() {
        let b = Label::new('B').unwrap();
        let a = Label::new('A').unwrap();
        let v = exact_verifier(b, b, 5).unwrap();
        assert!(v.correct && v.confidence == 1.0);
        let v = exact_verifier(a, b, 5).unwrap();
        assert!(!v.correct && v.confidence == 0.0);
        // H is a representable label but outside an A..E option set.
        let h = Label::new('H').unwrap();
        assert!(matches!(
            exact_verifier(h, b, 5).unwrap_err(),
            RewardError::InvalidLabel { label: 'H', n_options: 5 }
        ));
        assert!(Label::new('Z').is_none());
    }

    #[test]
    fn accuracy_reward_image_is_three_valued() {
        let v = ExactVerifier::new(5);
        let gold = Label::new('C').unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let words = ["जल", "lake", "<think>", "</think>", "Answer:", "A", "B", "C", "D", "E"];
        let mut seen = std::collections::BTreeSet::new();
        for _ in 0..2000 {
            let n = rng.gen_range(1..=10);
            let surfaces: Vec<&str> = (0..n).map(|_| words[rng.gen_range(0..words.len())]).collect();
            let r = accuracy_reward(&seq_of(&surfaces), "q", gold, &v).unwrap();
            let value = r.value();
            assert!(value == 0.0 || value == 0.1 || value == 1.0);
            seen.insert((value * 10.0) as i64);
        }
        assert_eq!(seen.len(), 3, "all three reward levels should be reachable");
    }

    #[test]
    fn language_reward_monotone_under_hindi_substitution() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let n = rng.gen_range(1..=16);
            let surfaces: Vec<&str> =
                (0..n).map(|_| if rng.gen_bool(0.5) { "जल" } else { "lake" }).collect();
            let seq = seq_of(&surfaces);
            let base = language_reward(&seq).unwrap();
            for i in 0..n {
                if surfaces[i] != "जल" {
                    let mut replaced = surfaces.clone();
                    replaced[i] = "जल";
                    assert!(language_reward(&seq_of(&replaced)).unwrap() >= base);
                }
            }
        }
    }

    #[test]
    fn learned_verifier_mock_agrees_with_exact() {
        let exact = ExactVerifier::new(5);
        let learned = LearnedMock { inner: exact };
        let gold = Label::new('D').unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let words = ["जल", "<think>", "</think>", "Answer:", "A", "B", "C", "D", "E"];
        for _ in 0..500 {
            let n = rng.gen_range(1..=10);
            let surfaces: Vec<&str> = (0..n).map(|_| words[rng.gen_range(0..words.len())]).collect();
            let seq = seq_of(&surfaces);
            assert_eq!(
                accuracy_reward(&seq, "q", gold, &exact).unwrap(),
                accuracy_reward(&seq, "q", gold, &learned).unwrap()
            );
        }
    }
}
