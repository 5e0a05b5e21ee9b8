//! Zero-shot MCQ evaluation: progressively relaxed answer extraction,
//! benchmark accuracy, and the English-Hindi accuracy gap.
//!
//! Extraction cascades through three stages and stops at the first success:
//! strict answer patterns (last occurrence wins), a scan for a standalone
//! option letter adjacent to an option delimiter, and a token-overlap
//! similarity match between the response tail and the option texts. A failed
//! extraction is a value, not an error, and scores as incorrect.

use crate::mix_seed;
use crate::policy::{Policy, DEFAULT_MAX_LEN};
use crate::rewards::Label;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use thiserror::Error;

macro_rules! cached_regex {
    ($pattern:literal) => {{
        static RE: std::sync::OnceLock<regex::Regex> = std::sync::OnceLock::new();
        RE.get_or_init(|| regex::Regex::new($pattern).unwrap())
    }};
}

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("benchmark has no items")]
    EmptyBenchmark,
    #[error("runs must be at least 1")]
    NoRuns,
    #[error("benchmarks are not id-paired: {0}")]
    PairingError(String),
    #[error("invalid item {id}: {reason}")]
    InvalidItem { id: String, reason: String },
}

/// Language of an item or benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    Hi,
    En,
}

impl std::fmt::Display for Language {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Language::Hi => "hi",
            Language::En => "en",
        })
    }
}

/// One multiple-choice item with labels contiguous from A.
#[derive(Debug, Clone, PartialEq)]
pub struct McqItem {
    id: String,
    pub question: String,
    options: Vec<(Label, String)>,
    gold: Label,
    pub language: Language,
    pub system: Option<String>,
}

impl McqItem {
    pub fn new(
        id: impl Into<String>,
        question: impl Into<String>,
        option_texts: Vec<String>,
        gold: Label,
        language: Language,
        system: Option<String>,
    ) -> Result<Self, EvalError> {
        let id = id.into();
        if option_texts.len() < 2 || option_texts.len() > crate::rewards::MAX_OPTIONS {
            return Err(EvalError::InvalidItem {
                id,
                reason: format!("{} options outside 2..=10", option_texts.len()),
            });
        }
        let options: Vec<(Label, String)> = option_texts
            .into_iter()
            .enumerate()
            .map(|(i, text)| (Label::from_index(i).unwrap(), text))
            .collect();
        if gold.index() >= options.len() {
            return Err(EvalError::InvalidItem {
                id,
                reason: format!("gold label {gold} outside the option set"),
            });
        }
        Ok(McqItem { id, question: question.into(), options, gold, language, system })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn options(&self) -> &[(Label, String)] {
        &self.options
    }

    pub fn gold(&self) -> Label {
        self.gold
    }

    pub fn has_label(&self, label: Label) -> bool {
        label.index() < self.options.len()
    }

    /// Replaces the question and option texts, keeping id/labels/gold intact.
    pub fn with_texts(&self, question: String, option_texts: Vec<String>) -> Self {
        let options = self
            .options
            .iter()
            .zip(option_texts)
            .map(|((l, _), text)| (*l, text))
            .collect();
        McqItem { question, options, ..self.clone() }
    }
}

/// Extraction cascade stage that produced (or failed to produce) a label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ExtractionStage {
    StrictPattern,
    LetterScan,
    Similarity,
    Failed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtractionResult {
    pub label: Option<Label>,
    pub stage: ExtractionStage,
}

/// Similarity-stage threshold on the token-overlap score.
pub const SIMILARITY_THRESHOLD: f64 = 0.3;
/// Number of trailing response tokens the similarity stage considers.
pub const SIMILARITY_TAIL: usize = 50;

fn normalize_word(w: &str) -> Option<String> {
    let core = w.trim_matches(|c: char| !c.is_alphanumeric());
    if core.is_empty() {
        None
    } else {
        Some(core.to_lowercase())
    }
}

fn strict_patterns(response: &str, item: &McqItem) -> Option<Label> {
    let mut best: Option<(usize, Label)> = None;
    let mut consider = |pos: usize, letter: &str| {
        if let Some(label) = Label::new(letter.chars().next().unwrap()) {
            if item.has_label(label) && best.map_or(true, |(p, _)| pos >= p) {
                best = Some((pos, label));
            }
        }
    };
    let re_en = cached_regex!(r"(?i)answer\s*:\s*\(?\s*([A-J])([^0-9A-Za-z]|$)");
    let re_hi = cached_regex!(r"उत्तर\s*:\s*\(?\s*([A-Ja-j])([^0-9A-Za-z]|$)");
    for re in [re_en, re_hi] {
        for cap in re.captures_iter(response) {
            let m = cap.get(1).unwrap();
            consider(m.start(), m.as_str());
        }
    }
    // A trailing "(X)" token-group counts as a strict pattern.
    if let Some(last) = response.split_whitespace().last() {
        if let Some(cap) = cached_regex!(r"^\(([A-Ja-j])\)[.!।]?$").captures(last) {
            let pos = response.trim_end().len();
            consider(pos, cap.get(1).unwrap().as_str());
        }
    }
    best.map(|(_, label)| label)
}

fn letter_scan(response: &str, item: &McqItem) -> Option<Label> {
    let chars: Vec<char> = response.chars().collect();
    let mut best = None;
    for (i, &c) in chars.iter().enumerate() {
        let label = match Label::new(c) {
            Some(l) if c.is_ascii_uppercase() && item.has_label(l) => l,
            _ => continue,
        };
        let prev = if i > 0 { Some(chars[i - 1]) } else { None };
        let next = chars.get(i + 1).copied();
        let standalone = prev.map_or(true, |p| !p.is_alphanumeric())
            && next.map_or(true, |n| !n.is_alphanumeric());
        if !standalone {
            continue;
        }
        let delimited =
            prev == Some('(') || matches!(next, Some(')') | Some('.') | Some(':') | Some('।'));
        if delimited {
            best = Some(label);
        }
    }
    best
}

fn similarity(response: &str, item: &McqItem) -> Option<Label> {
    let tail: BTreeSet<String> = response
        .split_whitespace()
        .rev()
        .take(SIMILARITY_TAIL)
        .filter_map(normalize_word)
        .collect();
    if tail.is_empty() {
        return None;
    }
    let mut scored: Vec<(f64, Label)> = item
        .options()
        .iter()
        .map(|(label, text)| {
            let words: BTreeSet<String> =
                text.split_whitespace().filter_map(normalize_word).collect();
            let inter = words.intersection(&tail).count();
            let denom = words.len() + tail.len();
            let dice = if denom == 0 { 0.0 } else { 2.0 * inter as f64 / denom as f64 };
            (dice, *label)
        })
        .collect();
    scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.index().cmp(&b.1.index())));
    let (best, label) = scored[0];
    let runner_up = scored.get(1).map_or(0.0, |s| s.0);
    (best > SIMILARITY_THRESHOLD && best > runner_up).then_some(label)
}

/// Progressively relaxed answer extraction.
pub fn extract_answer(response: &str, item: &McqItem) -> ExtractionResult {
    if let Some(label) = strict_patterns(response, item) {
        return ExtractionResult { label: Some(label), stage: ExtractionStage::StrictPattern };
    }
    if let Some(label) = letter_scan(response, item) {
        return ExtractionResult { label: Some(label), stage: ExtractionStage::LetterScan };
    }
    if let Some(label) = similarity(response, item) {
        return ExtractionResult { label: Some(label), stage: ExtractionStage::Similarity };
    }
    ExtractionResult { label: None, stage: ExtractionStage::Failed }
}

/// Generation contract for benchmark scoring. A failure is recorded for the
/// item and scored incorrect; the run continues.
pub trait ResponseModel {
    fn respond(&mut self, item: &McqItem, seed: u64) -> Result<String, String>;
}

/// Oracle that echoes the gold label in strict format.
pub struct GoldEchoModel;

impl ResponseModel for GoldEchoModel {
    fn respond(&mut self, item: &McqItem, _seed: u64) -> Result<String, String> {
        Ok(format!("Answer: {}", item.gold()))
    }
}

/// Degenerate model answering the same letter everywhere.
pub struct FixedLetterModel(pub Label);

impl ResponseModel for FixedLetterModel {
    fn respond(&mut self, _item: &McqItem, _seed: u64) -> Result<String, String> {
        Ok(format!("Answer: {}", self.0))
    }
}

/// Policy-backed model: builds the prompt bag from the question text and
/// samples one response.
pub struct PolicyModel<'a> {
    pub policy: &'a Policy,
    pub max_len: usize,
}

impl<'a> PolicyModel<'a> {
    pub fn new(policy: &'a Policy) -> Self {
        PolicyModel { policy, max_len: DEFAULT_MAX_LEN }
    }
}

impl ResponseModel for PolicyModel<'_> {
    fn respond(&mut self, item: &McqItem, seed: u64) -> Result<String, String> {
        let bag = self.policy.vocab().prompt_bag(&item.question);
        let rec = self.policy.sample_one(&bag, seed, self.max_len).map_err(|e| e.to_string())?;
        self.policy.vocab().render(&rec.ids).map_err(|e| e.to_string())
    }
}

/// Scored benchmark report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub runs: usize,
    pub n_items: usize,
    pub per_run_accuracy: Vec<f64>,
    /// Extraction stages per item per run, item-major.
    pub per_item_stages: Vec<Vec<ExtractionStage>>,
    /// Count per cascade stage over all (item, run) pairs.
    pub stage_histogram: Vec<(ExtractionStage, usize)>,
    pub generation_failures: usize,
    pub item_ids: Vec<String>,
}

/// Scores a benchmark: one generation per item per run with distinct derived
/// seeds, exact-match scoring against gold, accuracy averaged over runs.
pub fn score_benchmark(
    model: &mut dyn ResponseModel,
    items: &[McqItem],
    runs: usize,
    seed: u64,
) -> Result<EvalReport, EvalError> {
    if items.is_empty() {
        return Err(EvalError::EmptyBenchmark);
    }
    if runs == 0 {
        return Err(EvalError::NoRuns);
    }
    let mut per_run_accuracy = Vec::with_capacity(runs);
    let mut per_item_stages = vec![Vec::with_capacity(runs); items.len()];
    let mut failures = 0usize;
    let mut histogram = std::collections::BTreeMap::new();
    for run in 0..runs {
        let mut correct = 0usize;
        for (idx, item) in items.iter().enumerate() {
            let gen_seed = mix_seed(mix_seed(seed, run as u64), idx as u64);
            let stage = match model.respond(item, gen_seed) {
                Ok(response) => {
                    let extraction = extract_answer(&response, item);
                    if extraction.label == Some(item.gold()) {
                        correct += 1;
                    }
                    extraction.stage
                }
                Err(_) => {
                    failures += 1;
                    ExtractionStage::Failed
                }
            };
            per_item_stages[idx].push(stage);
            *histogram.entry(stage).or_insert(0usize) += 1;
        }
        per_run_accuracy.push(correct as f64 / items.len() as f64);
    }
    let accuracy = per_run_accuracy.iter().sum::<f64>() / runs as f64;
    Ok(EvalReport {
        accuracy,
        runs,
        n_items: items.len(),
        per_run_accuracy,
        per_item_stages,
        stage_histogram: histogram.into_iter().collect(),
        generation_failures: failures,
        item_ids: items.iter().map(|i| i.id.clone()).collect(),
    })
}

/// The accuracy gap `En - Hi` over id-paired benchmarks. May be negative.
pub fn accuracy_gap(report_en: &EvalReport, report_hi: &EvalReport) -> Result<f64, EvalError> {
    let mut en_ids = report_en.item_ids.clone();
    let mut hi_ids = report_hi.item_ids.clone();
    en_ids.sort();
    hi_ids.sort();
    if en_ids != hi_ids {
        return Err(EvalError::PairingError(format!(
            "{} En items vs {} Hi items with differing ids",
            report_en.item_ids.len(),
            report_hi.item_ids.len()
        )));
    }
    Ok(report_en.accuracy - report_hi.accuracy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn item(gold: char) -> McqItem {
        McqItem::new(
            "q1",
            "which word names the river ?",
            vec![
                "swift mountain river".into(),
                "quiet forest lake".into(),
                "dusty desert trail".into(),
                "frozen northern sea".into(),
                "green valley meadow".into(),
            ],
            Label::new(gold).unwrap(),
            Language::En,
            None,
        )
        .unwrap()
    }

    #[test]
    fn item_invariants_enforced() {
        assert!(McqItem::new("x", "q", vec!["one".into()], Label::new('A').unwrap(), Language::En, None)
            .is_err());
        assert!(McqItem::new(
            "x",
            "q",
            vec!["one".into(), "two".into()],
            Label::new('E').unwrap(),
            Language::En,
            None
        )
        .is_err());
    }

    #[test]
    fn strict_pattern_extraction() {
        let it = item('B');
        let r = extract_answer("after much thought ... Answer: B", &it);
        assert_eq!(r.label, Some(Label::new('B').unwrap()));
        assert_eq!(r.stage, ExtractionStage::StrictPattern);

        let r = extract_answer("उत्तर: (C)", &it);
        assert_eq!(r.label, Some(Label::new('C').unwrap()));
        assert_eq!(r.stage, ExtractionStage::StrictPattern);

        // Last occurrence wins across chain-of-thought mentions.
        let r = extract_answer("Answer: A is tempting but no. Answer: C", &it);
        assert_eq!(r.label, Some(Label::new('C').unwrap()));

        // Trailing token-group form.
        let r = extract_answer("the best choice is (D)", &it);
        assert_eq!(r.stage, ExtractionStage::StrictPattern);
        assert_eq!(r.label, Some(Label::new('D').unwrap()));

        // Out-of-set letters do not count as strict matches.
        let r = extract_answer("Answer: F", &it);
        assert_ne!(r.stage, ExtractionStage::StrictPattern);
    }

    #[test]
    fn letter_scan_extraction() {
        let it = item('B');
        let r = extract_answer("i would pick option B) over the rest", &it);
        assert_eq!(r.stage, ExtractionStage::LetterScan);
        assert_eq!(r.label, Some(Label::new('B').unwrap()));

        let r = extract_answer("clearly (E it must be", &it);
        assert_eq!(r.stage, ExtractionStage::LetterScan);
        assert_eq!(r.label, Some(Label::new('E').unwrap()));

        // Lowercase or embedded letters never match the scan.
        let r = extract_answer("maybe b) or aBc while walking", &it);
        assert_eq!(r.stage, ExtractionStage::Failed);
    }

    #[test]
    fn similarity_extraction_matches_overlap_oracle() {
        let it = item('B');
        let response = "so the dusty desert trail it is";
        let r = extract_answer(response, &it);
        assert_eq!(r.stage, ExtractionStage::Similarity);
        assert_eq!(r.label, Some(Label::new('C').unwrap()));

        // Exhaustive overlap oracle over all options.
        let tail: BTreeSet<String> =
            response.split_whitespace().filter_map(normalize_word).collect();
        let mut best = (0.0, None);
        for (label, text) in it.options() {
            let words: BTreeSet<String> =
                text.split_whitespace().filter_map(normalize_word).collect();
            let dice =
                2.0 * words.intersection(&tail).count() as f64 / (words.len() + tail.len()) as f64;
            if dice > best.0 {
                best = (dice, Some(*label));
            }
        }
        assert!(best.0 > SIMILARITY_THRESHOLD);
        assert_eq!(r.label, best.1);

        // No overlap above threshold: Failed.
        let r = extract_answer("completely unrelated musings about nothing", &it);
        assert_eq!(r.stage, ExtractionStage::Failed);
        assert_eq!(r.label, None);
    }

    #[test]
    fn cascade_stops_at_the_first_stage() {
        let it = item('B');
        // Both a strict pattern and scan/similarity cues present: strict wins.
        let r = extract_answer("(E) quiet forest lake ... Answer: A", &it);
        assert_eq!(r.stage, ExtractionStage::StrictPattern);
        assert_eq!(r.label, Some(Label::new('A').unwrap()));
        // Deterministic for fixed inputs.
        let again = extract_answer("(E) quiet forest lake ... Answer: A", &it);
        assert_eq!(r, again);
    }

    fn balanced_items(n: usize, seed: u64) -> Vec<McqItem> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let gold = Label::from_index(rng.gen_range(0..5)).unwrap();
                McqItem::new(
                    format!("item-{i}"),
                    "pick one",
                    (0..5).map(|j| format!("text {j}")).collect(),
                    gold,
                    Language::En,
                    None,
                )
                .unwrap()
            })
            .collect()
    }

    #[test]
    fn gold_echo_scores_one_and_fixed_letter_scores_chance() {
        let items = balanced_items(200, 12);
        let report = score_benchmark(&mut GoldEchoModel, &items, 3, 7).unwrap();
        assert_eq!(report.accuracy, 1.0);
        assert_eq!(report.runs, 3);

        let mut fixed = FixedLetterModel(Label::new('A').unwrap());
        let report = score_benchmark(&mut fixed, &items, 3, 7).unwrap();
        let sigma = (0.2f64 * 0.8 / items.len() as f64).sqrt();
        assert!(
            (report.accuracy - 0.2).abs() <= 3.0 * sigma,
            "accuracy {} outside 0.2 +/- {}",
            report.accuracy,
            3.0 * sigma
        );

        assert_eq!(
            score_benchmark(&mut GoldEchoModel, &[], 3, 7).unwrap_err(),
            EvalError::EmptyBenchmark
        );
    }

    #[test]
    fn scoring_is_reproducible_and_failures_count_incorrect() {
        struct Flaky;
        impl ResponseModel for Flaky {
            fn respond(&mut self, item: &McqItem, seed: u64) -> Result<String, String> {
                if seed % 3 == 0 {
                    Err("backend flaked".into())
                } else {
                    Ok(format!("Answer: {}", item.gold()))
                }
            }
        }
        let items = balanced_items(60, 3);
        let a = score_benchmark(&mut Flaky, &items, 3, 11).unwrap();
        let b = score_benchmark(&mut Flaky, &items, 3, 11).unwrap();
        assert_eq!(a, b);
        assert!(a.generation_failures > 0);
        assert!(a.accuracy < 1.0);
        let histogram_total: usize = a.stage_histogram.iter().map(|(_, c)| c).sum();
        assert_eq!(histogram_total, 60 * 3);
    }

    #[test]
    fn accuracy_gap_arithmetic() {
        let items = balanced_items(10, 5);
        let mut base = score_benchmark(&mut GoldEchoModel, &items, 1, 1).unwrap();
        let mut en = base.clone();
        en.accuracy = 0.607;
        let mut hi = base.clone();
        hi.accuracy = 0.507;
        assert!((accuracy_gap(&en, &hi).unwrap() - 0.100).abs() < 1e-12);

        en.accuracy = 0.271;
        hi.accuracy = 0.286;
        assert!((accuracy_gap(&en, &hi).unwrap() + 0.015).abs() < 1e-12);

        assert_eq!(accuracy_gap(&base, &base).unwrap(), 0.0);

        base.item_ids.pop();
        let other = score_benchmark(&mut GoldEchoModel, &items, 1, 1).unwrap();
        assert!(matches!(accuracy_gap(&base, &other), Err(EvalError::PairingError(_))));
    }
}
