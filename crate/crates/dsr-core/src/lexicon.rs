//! Lexicon-guided terminology injection and format-aware MCQ translation.
//!
//! A bilingual lexicon maps normalized English source terms (possibly
//! multi-word) one-to-one onto Devanagari target terms. Matching is a greedy
//! left-to-right longest-match over word sequences, case-insensitive on
//! punctuation-trimmed words, and never matches inside a word. Matched spans
//! can be injected in place ("target (source)" or target only), or protected
//! through a pluggable translator with private-use sentinels that must
//! survive the round trip; a dropped sentinel is an error, never silent loss.

use crate::evaluation::McqItem;
use crate::objective::TermMask;
use crate::textlang::TokenSequence;
use std::collections::BTreeMap;
use std::io::BufRead;
use thiserror::Error;

/// Sentinel delimiters from the BMP private-use area.
pub const SENTINEL_OPEN: char = '\u{F8F0}';
pub const SENTINEL_CLOSE: char = '\u{F8F1}';

#[derive(Debug, Error, PartialEq)]
pub enum LexiconError {
    #[error("line {line}: conflicting targets for source term {term:?}")]
    ConflictingEntry { line: usize, term: String },
    #[error("line {line}: expected 2 tab-separated fields")]
    MalformedLine { line: usize },
    #[error("span alignment error: {0}")]
    AlignmentError(String),
    #[error("translator lost sentinel {0}")]
    SentinelLost(u32),
    #[error("translator failure: {0}")]
    TranslatorFailure(String),
    #[error("span {0:?} is already injected; refusing to re-inject")]
    AlreadyInjected(String),
}

/// One deterministic source -> target mapping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexiconEntry {
    /// Lowercase, single-space separated English term.
    pub source_term: String,
    /// Devanagari replacement.
    pub target_term: String,
}

#[derive(Debug, Default, Clone)]
struct TrieNode {
    children: BTreeMap<String, usize>,
    entry: Option<usize>,
}

/// Bilingual term store supporting longest-match word-sequence lookup.
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    entries: Vec<LexiconEntry>,
    nodes: Vec<TrieNode>,
    targets: BTreeMap<String, usize>,
    max_words: usize,
}

fn normalize_term(term: &str) -> String {
    term.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

fn normalize_word(word: &str) -> Option<String> {
    let core = word.trim_matches(|c: char| !c.is_alphanumeric());
    if core.is_empty() {
        None
    } else {
        Some(core.to_lowercase())
    }
}

impl Lexicon {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[LexiconEntry] {
        &self.entries
    }

    pub fn lookup(&self, source: &str) -> Option<&LexiconEntry> {
        let normalized = normalize_term(source);
        let mut node = 0usize;
        for word in normalized.split(' ') {
            node = *self.nodes.get(node)?.children.get(word)?;
        }
        self.nodes[node].entry.map(|i| &self.entries[i])
    }

    /// True when the term is some entry's target, used by the mask deriver.
    pub fn is_target(&self, term: &str) -> bool {
        self.targets.contains_key(term)
    }

    /// Inserting an already-present identical pair is a no-op; a conflicting
    /// target for a known source is an error.
    fn insert(&mut self, source: String, target: String, line: usize) -> Result<(), LexiconError> {
        if self.nodes.is_empty() {
            self.nodes.push(TrieNode::default());
        }
        let words: Vec<String> = source.split(' ').map(str::to_string).collect();
        let mut node = 0usize;
        for word in &words {
            node = match self.nodes[node].children.get(word) {
                Some(&next) => next,
                None => {
                    self.nodes.push(TrieNode::default());
                    let next = self.nodes.len() - 1;
                    self.nodes[node].children.insert(word.clone(), next);
                    next
                }
            };
        }
        if let Some(existing) = self.nodes[node].entry {
            if self.entries[existing].target_term != target {
                return Err(LexiconError::ConflictingEntry { line, term: source });
            }
            return Ok(());
        }
        self.max_words = self.max_words.max(words.len());
        self.targets.insert(target.clone(), self.entries.len());
        self.entries.push(LexiconEntry { source_term: source, target_term: target });
        self.nodes[node].entry = Some(self.entries.len() - 1);
        Ok(())
    }

    pub fn from_pairs<S: AsRef<str>>(pairs: &[(S, S)]) -> Result<Self, LexiconError> {
        let mut lex = Lexicon::default();
        for (i, (source, target)) in pairs.iter().enumerate() {
            lex.insert(normalize_term(source.as_ref()), target.as_ref().trim().to_string(), i + 1)?;
        }
        Ok(lex)
    }
}

/// Loads a lexicon from tab-separated source/target lines. `#` comments and
/// blank lines are ignored; duplicates deduplicate; conflicts are errors.
pub fn load_lexicon(reader: impl BufRead) -> Result<Lexicon, LexiconError> {
    let mut lex = Lexicon::default();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|_| LexiconError::MalformedLine { line: line_no })?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut fields = trimmed.split('\t');
        let (source, target) = match (fields.next(), fields.next(), fields.next()) {
            (Some(s), Some(t), None) if !s.trim().is_empty() && !t.trim().is_empty() => (s, t),
            _ => return Err(LexiconError::MalformedLine { line: line_no }),
        };
        lex.insert(normalize_term(source), target.trim().to_string(), line_no)?;
    }
    Ok(lex)
}

/// A matched term occurrence: word offsets, the byte range of the matched
/// core (edge punctuation excluded), the entry, and a document-unique
/// sentinel id.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtectedSpan {
    pub start_word: usize,
    pub end_word: usize,
    pub byte_start: usize,
    pub byte_end: usize,
    pub entry: LexiconEntry,
    pub sentinel: u32,
}

/// Word occurrences with byte ranges of their punctuation-trimmed cores.
fn words_with_offsets(text: &str) -> Vec<(usize, usize, Option<String>)> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < text.len() {
        let rest = &text[i..];
        match rest.char_indices().find(|(_, c)| !c.is_whitespace()) {
            None => break,
            Some((off, _)) => {
                let start = i + off;
                let end = text[start..]
                    .char_indices()
                    .find(|(_, c)| c.is_whitespace())
                    .map(|(off, _)| start + off)
                    .unwrap_or(text.len());
                let word = &text[start..end];
                let trimmed = word.trim_matches(|c: char| !c.is_alphanumeric());
                if trimmed.is_empty() {
                    out.push((start, end, None));
                } else {
                    let core_start = start + (trimmed.as_ptr() as usize - word.as_ptr() as usize);
                    out.push((core_start, core_start + trimmed.len(), normalize_word(word)));
                }
                i = end;
            }
        }
    }
    out
}

/// Greedy left-to-right longest-match scan. Matched words are consumed, so
/// spans never overlap and come out sorted by start offset.
pub fn longest_match_spans(text: &str, lex: &Lexicon) -> Vec<ProtectedSpan> {
    let words = words_with_offsets(text);
    let mut spans = Vec::new();
    let mut i = 0;
    let mut sentinel = 0u32;
    while i < words.len() {
        let mut node = 0usize;
        let mut best: Option<usize> = None; // number of words matched
        let mut j = i;
        while j < words.len() && j - i < lex.max_words {
            let Some(core) = words[j].2.as_ref() else { break };
            let Some(&next) = lex.nodes.get(node).and_then(|n| n.children.get(core)) else {
                break;
            };
            node = next;
            j += 1;
            if lex.nodes[node].entry.is_some() {
                best = Some(j - i);
            }
        }
        match best {
            Some(len) => {
                let mut node = 0usize;
                for w in &words[i..i + len] {
                    node = lex.nodes[node].children[w.2.as_ref().unwrap()];
                }
                let entry = lex.entries[lex.nodes[node].entry.unwrap()].clone();
                spans.push(ProtectedSpan {
                    start_word: i,
                    end_word: i + len,
                    byte_start: words[i].0,
                    byte_end: words[i + len - 1].1,
                    entry,
                    sentinel,
                });
                sentinel += 1;
                i += len;
            }
            None => i += 1,
        }
    }
    spans
}

/// Replacement mode for [`inject_terms`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InjectionMode {
    /// `target (source)`
    Parenthetical,
    /// `target`
    ReplaceOnly,
}

fn check_spans(text: &str, spans: &[ProtectedSpan]) -> Result<(), LexiconError> {
    let mut prev_end = 0usize;
    for span in spans {
        if span.byte_start < prev_end || span.byte_end > text.len() || span.byte_start >= span.byte_end
        {
            return Err(LexiconError::AlignmentError(format!(
                "span bytes {}..{} out of range or overlapping (text length {})",
                span.byte_start,
                span.byte_end,
                text.len()
            )));
        }
        if !text.is_char_boundary(span.byte_start) || !text.is_char_boundary(span.byte_end) {
            return Err(LexiconError::AlignmentError("span not on char boundaries".into()));
        }
        prev_end = span.byte_end;
    }
    Ok(())
}

fn replace_spans(
    text: &str,
    spans: &[ProtectedSpan],
    mut replacement: impl FnMut(&ProtectedSpan) -> String,
) -> Result<String, LexiconError> {
    check_spans(text, spans)?;
    let mut out = String::with_capacity(text.len());
    let mut cursor = 0usize;
    for span in spans {
        out.push_str(&text[cursor..span.byte_start]);
        out.push_str(&replacement(span));
        cursor = span.byte_end;
    }
    out.push_str(&text[cursor..]);
    Ok(out)
}

/// Injects target terms at the given spans; non-span text is unchanged
/// byte-for-byte.
pub fn inject_terms(
    text: &str,
    spans: &[ProtectedSpan],
    mode: InjectionMode,
) -> Result<String, LexiconError> {
    replace_spans(text, spans, |span| match mode {
        InjectionMode::Parenthetical => {
            format!("{} ({})", span.entry.target_term, span.entry.source_term)
        }
        InjectionMode::ReplaceOnly => span.entry.target_term.clone(),
    })
}

/// Translation contract: total on sentinel-bearing text, must echo sentinels
/// unchanged.
pub trait Translator {
    fn translate(&self, text: &str) -> Result<String, String>;
}

/// Passes text through unchanged.
pub struct IdentityTranslator;

impl Translator for IdentityTranslator {
    fn translate(&self, text: &str) -> Result<String, String> {
        Ok(text.to_string())
    }
}

fn sentinel_text(id: u32) -> String {
    format!("{SENTINEL_OPEN}{id}{SENTINEL_CLOSE}")
}

/// Detects a span that already carries its parenthetical injection, i.e. the
/// matched source sits in parentheses right after its target term.
fn already_injected(text: &str, span: &ProtectedSpan) -> bool {
    let before = &text[..span.byte_start];
    let after = &text[span.byte_end..];
    let opens = before.trim_end().ends_with('(');
    let closes = after.trim_start().starts_with(')');
    if !(opens && closes) {
        return false;
    }
    let before_paren = before.trim_end().trim_end_matches('(').trim_end();
    before_paren.ends_with(span.entry.target_term.as_str())
}

/// Protects matched terms behind sentinels, runs the translator, and restores
/// each term as a parenthetical injection. A translator that drops or
/// duplicates a sentinel triggers an error rather than silent loss.
pub fn protect_translate_restore(
    text: &str,
    lex: &Lexicon,
    translator: &dyn Translator,
) -> Result<String, LexiconError> {
    let spans = longest_match_spans(text, lex);
    for span in &spans {
        if already_injected(text, span) {
            return Err(LexiconError::AlreadyInjected(span.entry.source_term.clone()));
        }
    }
    let protected = replace_spans(text, &spans, |span| sentinel_text(span.sentinel))?;
    let mut translated =
        translator.translate(&protected).map_err(LexiconError::TranslatorFailure)?;
    for span in &spans {
        let sentinel = sentinel_text(span.sentinel);
        let first = translated.find(&sentinel).ok_or(LexiconError::SentinelLost(span.sentinel))?;
        if translated[first + sentinel.len()..].contains(&sentinel) {
            return Err(LexiconError::TranslatorFailure(format!(
                "sentinel {} duplicated by translator",
                span.sentinel
            )));
        }
        let injection = format!("{} ({})", span.entry.target_term, span.entry.source_term);
        translated.replace_range(first..first + sentinel.len(), &injection);
    }
    Ok(translated)
}

/// Translates an MCQ item component-wise: the question stem and every option
/// text go through [`protect_translate_restore`] independently; id, labels,
/// ordering, and the gold label are untouched. Any component failure leaves
/// the item unmodified.
pub fn translate_mcq(
    item: &McqItem,
    lex: &Lexicon,
    translator: &dyn Translator,
) -> Result<McqItem, LexiconError> {
    let question = protect_translate_restore(&item.question, lex, translator)?;
    let mut option_texts = Vec::with_capacity(item.options().len());
    for (_, text) in item.options() {
        option_texts.push(protect_translate_restore(text, lex, translator)?);
    }
    Ok(item.with_texts(question, option_texts))
}

/// Derives the language-objective term mask for a tokenized sequence from
/// lexicon-processed text: tokens forming an injected `(source term)`
/// parenthetical right after its target term are masked out.
pub fn derive_term_mask(seq: &TokenSequence, lex: &Lexicon) -> TermMask {
    let surfaces: Vec<&str> = seq.iter().map(|t| t.surface.as_str()).collect();
    let mut bits = vec![true; surfaces.len()];
    for i in 0..surfaces.len() {
        if !surfaces[i].starts_with('(') {
            continue;
        }
        if i == 0 || !lex.is_target(surfaces[i - 1].trim_matches(|c: char| "()".contains(c))) {
            continue;
        }
        let limit = lex.max_words.min(surfaces.len() - i);
        let mut joined = Vec::new();
        for j in 0..limit {
            match normalize_word(surfaces[i + j]) {
                Some(w) => joined.push(w),
                None => break,
            }
            if surfaces[i + j].ends_with(')') {
                if lex.lookup(&joined.join(" ")).is_some() {
                    for b in bits.iter_mut().skip(i).take(j + 1) {
                        *b = false;
                    }
                }
                break;
            }
        }
    }
    TermMask::new(bits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::Language;
    use crate::rewards::Label;
    use crate::textlang::{Token, TokenRole};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use std::io::Cursor;

    fn lex(pairs: &[(&str, &str)]) -> Lexicon {
        Lexicon::from_pairs(pairs).unwrap()
    }

    #[test]
    fn load_lexicon_cases() {
        let l = load_lexicon(Cursor::new("fever\tज्वर\nhigh fever\tतीव्र\n")).unwrap();
        assert_eq!(l.len(), 2);

        let l = load_lexicon(Cursor::new("fever\tज्वर\nfever\tज्वर\n# comment\n\n")).unwrap();
        assert_eq!(l.len(), 1);

        let err = load_lexicon(Cursor::new("fever\tज्वर\nfever\tबुखार\n")).unwrap_err();
        assert_eq!(err, LexiconError::ConflictingEntry { line: 2, term: "fever".into() });

        let err = load_lexicon(Cursor::new("fever ज्वर\n")).unwrap_err();
        assert_eq!(err, LexiconError::MalformedLine { line: 1 });
        let err = load_lexicon(Cursor::new("a\tb\tc\n")).unwrap_err();
        assert_eq!(err, LexiconError::MalformedLine { line: 1 });

        // Lookup is insertion-order independent.
        let a = lex(&[("heart", "हृदय"), ("heart attack", "हृदयाघात")]);
        let b = lex(&[("heart attack", "हृदयाघात"), ("heart", "हृदय")]);
        for probe in ["heart", "heart attack"] {
            assert_eq!(a.lookup(probe).unwrap().target_term, b.lookup(probe).unwrap().target_term);
        }
    }

    #[test]
    fn longest_match_rules() {
        let l = lex(&[("heart", "हृदय"), ("heart attack", "हृदयाघात")]);

        let spans = longest_match_spans("heart attack", &l);
        assert_eq!(spans.len(), 1);
        assert_eq!(spans[0].entry.source_term, "heart attack");
        assert_eq!((spans[0].start_word, spans[0].end_word), (0, 2));

        assert!(longest_match_spans("no terms here", &l).is_empty());

        let spans = longest_match_spans("heart attack heart", &l);
        let sources: Vec<&str> = spans.iter().map(|s| s.entry.source_term.as_str()).collect();
        assert_eq!(sources, vec!["heart attack", "heart"]);

        // Word-boundary matching: no match inside a word.
        assert!(longest_match_spans("wholehearted", &l).is_empty());
        // Case-insensitive on trimmed words.
        let spans = longest_match_spans("Heart Attack!", &l);
        assert_eq!(spans.len(), 1);
        assert_eq!(spans[0].entry.source_term, "heart attack");
    }

    /// Brute-force oracle: enumerate all matches, then greedily take the
    /// leftmost-longest without overlap.
    fn oracle_spans(text: &str, l: &Lexicon) -> Vec<(usize, usize, String)> {
        let words: Vec<Option<String>> = text.split_whitespace().map(normalize_word).collect();
        let mut out = Vec::new();
        let mut i = 0;
        while i < words.len() {
            let mut best: Option<(usize, String)> = None;
            for len in (1..=words.len() - i).rev() {
                let Some(joined) =
                    words[i..i + len].iter().cloned().collect::<Option<Vec<_>>>()
                else {
                    continue;
                };
                if let Some(e) = l.lookup(&joined.join(" ")) {
                    best = Some((len, e.source_term.clone()));
                    break;
                }
            }
            match best {
                Some((len, source)) => {
                    out.push((i, i + len, source));
                    i += len;
                }
                None => i += 1,
            }
        }
        out
    }

    #[test]
    fn spans_match_brute_force_and_never_overlap() {
        let l = lex(&[
            ("heart", "हृदय"),
            ("heart attack", "हृदयाघात"),
            ("blood", "रक्त"),
            ("blood pressure", "रक्तचाप"),
            ("high blood pressure", "उच्चरक्तचाप"),
        ]);
        let vocabulary = ["heart", "attack", "blood", "pressure", "high", "and", "the"];
        let mut rng = ChaCha8Rng::seed_from_u64(91);
        for _ in 0..500 {
            let n = rng.gen_range(0..=12);
            let text: Vec<&str> =
                (0..n).map(|_| vocabulary[rng.gen_range(0..vocabulary.len())]).collect();
            let text = text.join(" ");
            let spans = longest_match_spans(&text, &l);
            let expected = oracle_spans(&text, &l);
            let got: Vec<(usize, usize, String)> = spans
                .iter()
                .map(|s| (s.start_word, s.end_word, s.entry.source_term.clone()))
                .collect();
            assert_eq!(got, expected, "text: {text}");
            for pair in spans.windows(2) {
                assert!(pair[0].end_word <= pair[1].start_word);
                assert!(pair[0].byte_end <= pair[1].byte_start);
            }
            let ids: std::collections::BTreeSet<u32> = spans.iter().map(|s| s.sentinel).collect();
            assert_eq!(ids.len(), spans.len());
        }
    }

    #[test]
    fn inject_terms_formats() {
        let l = lex(&[("fever", "ज्वर")]);
        let text = "high fever today";
        let spans = longest_match_spans(text, &l);
        assert_eq!(
            inject_terms(text, &spans, InjectionMode::Parenthetical).unwrap(),
            "high ज्वर (fever) today"
        );
        assert_eq!(
            inject_terms(text, &spans, InjectionMode::ReplaceOnly).unwrap(),
            "high ज्वर today"
        );
        assert_eq!(inject_terms(text, &[], InjectionMode::Parenthetical).unwrap(), text);

        // Adjacent spans: inter-span bytes (double space, punctuation) survive.
        let l2 = lex(&[("heart attack", "हृदयाघात"), ("heart", "हृदय")]);
        let text = "heart attack,  heart!";
        let spans = longest_match_spans(text, &l2);
        assert_eq!(
            inject_terms(text, &spans, InjectionMode::Parenthetical).unwrap(),
            "हृदयाघात (heart attack),  हृदय (heart)!"
        );

        // Stale spans are rejected.
        let mut stale = longest_match_spans("fever", &l);
        stale[0].byte_end = 99;
        assert!(matches!(
            inject_terms("fever", &stale, InjectionMode::ReplaceOnly).unwrap_err(),
            LexiconError::AlignmentError(_)
        ));
    }

    #[test]
    fn replace_only_round_trip() {
        let forward = lex(&[("fever", "ज्वर"), ("heart attack", "हृदयाघात")]);
        let reverse = lex(&[("ज्वर", "fever"), ("हृदयाघात", "heart attack")]);
        let text = "a fever after a heart attack";
        let spans = longest_match_spans(text, &forward);
        let replaced = inject_terms(text, &spans, InjectionMode::ReplaceOnly).unwrap();
        let back_spans = longest_match_spans(&replaced, &reverse);
        let restored = inject_terms(&replaced, &back_spans, InjectionMode::ReplaceOnly).unwrap();
        assert_eq!(restored, text);
    }

    struct UppercaseTranslator;
    impl Translator for UppercaseTranslator {
        fn translate(&self, text: &str) -> Result<String, String> {
            Ok(text.to_uppercase())
        }
    }

    struct SentinelEater;
    impl Translator for SentinelEater {
        fn translate(&self, text: &str) -> Result<String, String> {
            Ok(text.chars().filter(|c| *c != SENTINEL_OPEN && *c != SENTINEL_CLOSE).collect())
        }
    }

    #[test]
    fn protect_translate_restore_round_trips() {
        let l = lex(&[("fever", "ज्वर")]);
        let text = "high fever today";

        let out = protect_translate_restore(text, &l, &IdentityTranslator).unwrap();
        let spans = longest_match_spans(text, &l);
        assert_eq!(out, inject_terms(text, &spans, InjectionMode::Parenthetical).unwrap());

        // A translator that mangles surrounding text still restores the term.
        let out = protect_translate_restore(text, &l, &UppercaseTranslator).unwrap();
        assert_eq!(out, "HIGH ज्वर (fever) TODAY");

        let err = protect_translate_restore(text, &l, &SentinelEater).unwrap_err();
        assert_eq!(err, LexiconError::SentinelLost(0));

        // Re-running on the already-injected output: the source still matches
        // inside "(fever)", so re-injection is detected and refused.
        let injected = "high ज्वर (fever) today";
        let err = protect_translate_restore(injected, &l, &IdentityTranslator).unwrap_err();
        assert!(matches!(err, LexiconError::AlreadyInjected(_)));

        // After ReplaceOnly injection no source matches: idempotent.
        let replaced = "high ज्वर today";
        assert_eq!(protect_translate_restore(replaced, &l, &IdentityTranslator).unwrap(), replaced);
    }

    fn sample_item() -> McqItem {
        McqItem::new(
            "it-1",
            "what treats a high fever ?",
            vec![
                "rest and water".into(),
                "a heart attack".into(),
                "more fever".into(),
                "nothing at all".into(),
                "cold air".into(),
            ],
            Label::new('A').unwrap(),
            Language::En,
            None,
        )
        .unwrap()
    }

    #[test]
    fn translate_mcq_preserves_structure() {
        let l = lex(&[("fever", "ज्वर"), ("heart attack", "हृदयाघात")]);
        let item = sample_item();
        let out = translate_mcq(&item, &l, &IdentityTranslator).unwrap();
        assert_eq!(out.id(), item.id());
        assert_eq!(out.gold(), item.gold());
        assert_eq!(out.options().len(), item.options().len());
        for ((la, _), (lb, _)) in item.options().iter().zip(out.options()) {
            assert_eq!(la, lb);
        }
        assert_eq!(out.question, "what treats a high ज्वर (fever) ?");
        assert_eq!(out.options()[1].1, "a हृदयाघात (heart attack)");
        // Untouched components stay byte-identical.
        assert_eq!(out.options()[0].1, item.options()[0].1);

        struct FailOnNothing;
        impl Translator for FailOnNothing {
            fn translate(&self, text: &str) -> Result<String, String> {
                if text.contains("nothing") {
                    Err("refused".into())
                } else {
                    Ok(text.to_string())
                }
            }
        }
        assert!(matches!(
            translate_mcq(&item, &l, &FailOnNothing).unwrap_err(),
            LexiconError::TranslatorFailure(_)
        ));
    }

    #[test]
    fn translate_mcq_structure_property_randomized() {
        let l = lex(&[("fever", "ज्वर"), ("heart", "हृदय"), ("blood pressure", "रक्तचाप")]);
        let pool = ["fever", "heart", "blood", "pressure", "calm", "walk", "see"];
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for i in 0..300 {
            let n_opts = rng.gen_range(2..=6);
            let mk_text = |rng: &mut ChaCha8Rng| {
                let n = rng.gen_range(1..=6);
                (0..n).map(|_| pool[rng.gen_range(0..pool.len())]).collect::<Vec<_>>().join(" ")
            };
            let gold = Label::from_index(rng.gen_range(0..n_opts)).unwrap();
            let item = McqItem::new(
                format!("r{i}"),
                mk_text(&mut rng),
                (0..n_opts).map(|_| mk_text(&mut rng)).collect(),
                gold,
                Language::En,
                None,
            )
            .unwrap();
            let out = translate_mcq(&item, &l, &IdentityTranslator).unwrap();
            assert_eq!(out.id(), item.id());
            assert_eq!(out.gold(), item.gold());
            assert_eq!(out.options().len(), item.options().len());
            for (j, ((la, _), (lb, _))) in item.options().iter().zip(out.options()).enumerate() {
                assert_eq!(la, lb, "label {j} changed");
            }
        }
    }

    #[test]
    fn term_mask_covers_injected_parentheticals() {
        let l = lex(&[("heart attack", "हृदयाघात"), ("fever", "ज्वर")]);
        let surfaces = ["हृदयाघात", "(heart", "attack)", "के", "ज्वर", "(fever)", "बाद"];
        let seq = TokenSequence::new(
            surfaces
                .iter()
                .enumerate()
                .map(|(i, s)| Token::new(*s, i as u32, TokenRole::Reasoning).unwrap())
                .collect(),
        );
        let mask = derive_term_mask(&seq, &l);
        assert_eq!(mask.bits(), &[true, false, false, true, true, false, true]);

        // A parenthetical with no preceding target stays unmasked.
        let seq2 = TokenSequence::new(
            ["देखो", "(heart", "attack)"]
                .iter()
                .enumerate()
                .map(|(i, s)| Token::new(*s, i as u32, TokenRole::Reasoning).unwrap())
                .collect(),
        );
        assert_eq!(derive_term_mask(&seq2, &l).bits(), &[true, true, true]);
    }
}
