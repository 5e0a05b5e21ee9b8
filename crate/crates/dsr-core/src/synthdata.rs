//! Seeded synthetic bilingual MCQ world for desk-scale training and eval.
//!
//! The world is built from register pairs: every content concept has one
//! Devanagari surface and one Latin surface, so any rationale can be written
//! in either register and accuracy and language form stay independently
//! optimizable. Items are generated from keys; the gold option is a fixed
//! function of the key (its topic), every question names both its key and
//! topic, and reference rationales walk a shared chain of content pairs.
//! Train and eval splits use disjoint key sets.

use crate::dataset::{BenchRecord, TrainRecord};
use crate::evaluation::{Language, McqItem};
use crate::policy::{TokenId, VocabEntry, Vocabulary, EOS_SURFACE};
use crate::policy::TokenKind;
use crate::rewards::{Label, ANSWER_MARKER_HI, THINK_CLOSE, THINK_OPEN};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum WorldError {
    #[error("world too small: {0}")]
    TooSmall(String),
    #[error("invalid world spec: {0}")]
    InvalidSpec(String),
}

/// Parameters of the synthetic world.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorldSpec {
    pub n_keys: usize,
    pub n_options: usize,
    pub chain_len: usize,
    pub seed: u64,
}

impl Default for WorldSpec {
    fn default() -> Self {
        WorldSpec { n_keys: 25, n_options: 5, chain_len: 27, seed: 7 }
    }
}

/// A register pair: the same concept in Devanagari and Latin form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegisterPair {
    pub hi: TokenId,
    pub en: TokenId,
}

impl RegisterPair {
    pub fn id(&self, language: Language) -> TokenId {
        match language {
            Language::Hi => self.hi,
            Language::En => self.en,
        }
    }
}

/// The built world: vocabulary plus the pairing tables.
#[derive(Debug, Clone)]
pub struct World {
    pub spec: WorldSpec,
    pub vocab: Arc<Vocabulary>,
    pub chain: Vec<RegisterPair>,
    pub keys: Vec<RegisterPair>,
    pub topics: Vec<RegisterPair>,
    pub letters: Vec<TokenId>,
}

/// One generated item with both-register reference rationales.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldItem {
    pub id: String,
    pub key: usize,
    pub language: Language,
    /// Register of the reference rationale emitted into training records.
    /// Independent of the question language: reasoning register is a
    /// behavior to be shaped, not a property of the prompt.
    pub cot_language: Language,
    pub question: String,
    pub options: Vec<String>,
    pub gold: Label,
    pub cot_hi: String,
    pub cot_en: String,
}

const HI_SYLLABLES: [&str; 30] = [
    "क", "ख", "ग", "घ", "च", "छ", "ज", "झ", "ट", "ठ", "ड", "ढ", "त", "थ", "द", "ध", "न", "प",
    "फ", "ब", "भ", "म", "य", "र", "ल", "व", "श", "ष", "स", "ह",
];
const HI_MATRAS: [&str; 10] = ["", "ा", "ि", "ी", "ु", "ू", "े", "ै", "ो", "ौ"];
const EN_SYLLABLES: [&str; 30] = [
    "ka", "ke", "ki", "ko", "ku", "ra", "re", "ri", "ro", "ru", "ma", "me", "mi", "mo", "mu",
    "ta", "te", "ti", "to", "tu", "na", "ne", "ni", "no", "nu", "sa", "se", "si", "so", "su",
];

/// Deterministic distinct Devanagari word for an index below 900.
fn hindi_word(idx: usize) -> String {
    debug_assert!(idx < 900);
    let a = idx % 30;
    let b = (idx / 30) % 30;
    format!("{}{}{}{}", HI_SYLLABLES[a], HI_MATRAS[(idx / 3) % 10], HI_SYLLABLES[b], HI_MATRAS[(idx / 7) % 10])
}

/// Deterministic distinct Latin word for an index below 900.
fn latin_word(idx: usize) -> String {
    debug_assert!(idx < 900);
    format!("{}{}", EN_SYLLABLES[idx % 30], EN_SYLLABLES[(idx / 30) % 30])
}

impl World {
    pub fn build(spec: WorldSpec) -> Result<World, WorldError> {
        if spec.n_keys < 2 {
            return Err(WorldError::TooSmall(format!("{} keys cannot be split", spec.n_keys)));
        }
        if !(2..=10).contains(&spec.n_options) {
            return Err(WorldError::InvalidSpec(format!("{} options outside 2..=10", spec.n_options)));
        }
        if spec.chain_len == 0 {
            return Err(WorldError::InvalidSpec("rationale chain cannot be empty".into()));
        }
        let mut entries = vec![
            VocabEntry { surface: THINK_OPEN.into(), kind: TokenKind::ThinkOpen },
            VocabEntry { surface: THINK_CLOSE.into(), kind: TokenKind::ThinkClose },
            // The Hindi answer marker keeps the well-formed response close to
            // the language reward's ceiling.
            VocabEntry { surface: ANSWER_MARKER_HI.into(), kind: TokenKind::AnswerMarker },
            VocabEntry { surface: EOS_SURFACE.into(), kind: TokenKind::Eos },
        ];
        let mut letters = Vec::with_capacity(spec.n_options);
        for i in 0..spec.n_options {
            letters.push(entries.len() as TokenId);
            entries.push(VocabEntry {
                surface: Label::from_index(i).unwrap().to_string(),
                kind: TokenKind::OptionLetter,
            });
        }
        let push_pairs = |count: usize, offset: usize, entries: &mut Vec<VocabEntry>| {
            let mut pairs = Vec::with_capacity(count);
            for i in 0..count {
                let hi = entries.len() as TokenId;
                entries.push(VocabEntry { surface: hindi_word(offset + i), kind: TokenKind::Content });
                let en = entries.len() as TokenId;
                entries.push(VocabEntry { surface: latin_word(offset + i), kind: TokenKind::Content });
                pairs.push(RegisterPair { hi, en });
            }
            pairs
        };
        let chain = push_pairs(spec.chain_len, 0, &mut entries);
        let keys = push_pairs(spec.n_keys, 100, &mut entries);
        let topics = push_pairs(spec.n_options, 300, &mut entries);
        let vocab = Vocabulary::new(entries)
            .map_err(|e| WorldError::InvalidSpec(format!("vocabulary: {e}")))?;
        Ok(World { spec, vocab: Arc::new(vocab), chain, keys, topics, letters })
    }

    /// Gold option index for a key: a fixed function of the key.
    pub fn gold_of_key(&self, key: usize) -> usize {
        key % self.spec.n_options
    }

    fn surface(&self, id: TokenId) -> &str {
        &self.vocab.entry(id).unwrap().surface
    }

    fn question_text(&self, key: usize, language: Language) -> String {
        let key_word = self.surface(self.keys[key].id(language));
        let topic_word = self.surface(self.topics[self.gold_of_key(key)].id(language));
        match language {
            Language::Hi => format!("प्रश्न {key_word} {topic_word} विकल्प चुनिए"),
            Language::En => format!("question {key_word} {topic_word} choose option"),
        }
    }

    fn option_texts(&self, language: Language) -> Vec<String> {
        self.topics.iter().map(|t| self.surface(t.id(language)).to_string()).collect()
    }

    fn rationale(&self, language: Language) -> String {
        self.chain
            .iter()
            .map(|p| self.surface(p.id(language)))
            .collect::<Vec<_>>()
            .join(" ")
    }

    fn make_item(
        &self,
        id: String,
        key: usize,
        language: Language,
        cot_language: Language,
    ) -> WorldItem {
        WorldItem {
            id,
            key,
            language,
            cot_language,
            question: self.question_text(key, language),
            options: self.option_texts(language),
            gold: Label::from_index(self.gold_of_key(key)).unwrap(),
            cot_hi: self.rationale(Language::Hi),
            cot_en: self.rationale(Language::En),
        }
    }
}

impl WorldItem {
    fn cot(&self) -> &str {
        match self.cot_language {
            Language::Hi => &self.cot_hi,
            Language::En => &self.cot_en,
        }
    }

    pub fn to_train_record(&self) -> TrainRecord {
        TrainRecord {
            question: self.question.clone(),
            options: self
                .options
                .iter()
                .enumerate()
                .map(|(i, t)| (Label::from_index(i).unwrap().to_string(), t.clone()))
                .collect(),
            answer: self.gold.to_string(),
            cot: self.cot().to_string(),
            language: self.language,
        }
    }

    pub fn to_bench_record(&self) -> BenchRecord {
        BenchRecord {
            id: self.id.clone(),
            question: self.question.clone(),
            options: self
                .options
                .iter()
                .enumerate()
                .map(|(i, t)| (Label::from_index(i).unwrap().to_string(), t.clone()))
                .collect(),
            answer: self.gold.to_string(),
            language: self.language,
            system: None,
        }
    }

    pub fn to_mcq_item(&self) -> McqItem {
        McqItem::new(
            self.id.clone(),
            self.question.clone(),
            self.options.clone(),
            self.gold,
            self.language,
            None,
        )
        .unwrap()
    }
}

/// Generates the world and its train/eval items. Eval keys are disjoint from
/// train keys; eval items come in id-paired Hindi/English duplicates.
pub fn generate_world(
    spec: WorldSpec,
    n_train: usize,
    n_eval_ids: usize,
) -> Result<(World, Vec<WorldItem>, Vec<WorldItem>), WorldError> {
    if n_train < 1 || n_eval_ids < 1 {
        return Err(WorldError::TooSmall(format!(
            "need at least 1 train item and 1 eval id, got {n_train}/{n_eval_ids}"
        )));
    }
    let world = World::build(spec)?;
    let n_eval_keys = (spec.n_keys / 5).max(1);
    let n_train_keys = spec.n_keys - n_eval_keys;
    if n_train_keys == 0 {
        return Err(WorldError::TooSmall("no train keys left after the split".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    // Stratify the split by gold class so both sides keep near-uniform gold
    // labels: shuffle within each class, then draw eval keys round-robin.
    let mut classes: Vec<Vec<usize>> = vec![Vec::new(); spec.n_options];
    for key in 0..spec.n_keys {
        classes[world.gold_of_key(key)].push(key);
    }
    for class in classes.iter_mut() {
        class.shuffle(&mut rng);
    }
    let mut eval_keys = Vec::with_capacity(n_eval_keys);
    let mut class_idx = rng.gen_range(0..spec.n_options);
    while eval_keys.len() < n_eval_keys {
        if let Some(key) = classes[class_idx % spec.n_options].pop() {
            eval_keys.push(key);
        }
        class_idx += 1;
    }
    let train_keys: Vec<usize> = classes.into_iter().flatten().collect();
    let (train_keys, eval_keys) = (&train_keys[..], &eval_keys[..]);

    let mut train = Vec::with_capacity(n_train);
    for i in 0..n_train {
        let key = train_keys[rng.gen_range(0..train_keys.len())];
        let language = if rng.gen_bool(0.5) { Language::Hi } else { Language::En };
        let cot_language = if rng.gen_bool(0.5) { Language::Hi } else { Language::En };
        train.push(world.make_item(format!("train-{i}"), key, language, cot_language));
    }
    let mut eval = Vec::with_capacity(2 * n_eval_ids);
    for j in 0..n_eval_ids {
        let key = eval_keys[rng.gen_range(0..eval_keys.len())];
        for language in [Language::Hi, Language::En] {
            eval.push(world.make_item(format!("eval-{j}"), key, language, language));
        }
    }
    Ok((world, train, eval))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn build_respects_limits() {
        let world = World::build(WorldSpec::default()).unwrap();
        assert!(world.vocab.len() <= crate::policy::MAX_VOCAB);
        assert_eq!(world.letters.len(), 5);
        assert_eq!(world.chain.len(), 26);
        // Register tables are bijections onto distinct surfaces.
        let mut surfaces = BTreeSet::new();
        for pair in world.chain.iter().chain(&world.keys).chain(&world.topics) {
            assert!(surfaces.insert(world.surface(pair.hi).to_string()));
            assert!(surfaces.insert(world.surface(pair.en).to_string()));
        }
        assert!(World::build(WorldSpec { n_keys: 1, ..Default::default() }).is_err());
    }

    #[test]
    fn splits_are_key_disjoint_and_deterministic() {
        let spec = WorldSpec { n_keys: 10, n_options: 5, chain_len: 6, seed: 3 };
        let (_, train, eval) = generate_world(spec, 100, 20).unwrap();
        let train_keys: BTreeSet<usize> = train.iter().map(|i| i.key).collect();
        let eval_keys: BTreeSet<usize> = eval.iter().map(|i| i.key).collect();
        assert!(train_keys.is_disjoint(&eval_keys));
        assert_eq!(eval.len(), 40);

        let (_, train2, eval2) = generate_world(spec, 100, 20).unwrap();
        assert_eq!(train, train2);
        assert_eq!(eval, eval2);

        assert!(generate_world(spec, 0, 1).is_err());
    }

    #[test]
    fn gold_labels_are_uniform() {
        let spec = WorldSpec { n_keys: 25, n_options: 5, chain_len: 4, seed: 11 };
        let (_, train, _) = generate_world(spec, 10_000, 1).unwrap();
        let mut counts = [0usize; 5];
        for item in &train {
            counts[item.gold.index()] += 1;
        }
        let n = train.len() as f64;
        let p = 1.0 / 5.0;
        let sigma = (p * (1.0 - p) / n).sqrt();
        for (i, &c) in counts.iter().enumerate() {
            let freq = c as f64 / n;
            assert!(
                (freq - p).abs() <= 3.0 * sigma,
                "label {i}: freq {freq} vs {p} (3 sigma {})",
                3.0 * sigma
            );
        }
    }

    #[test]
    fn items_are_lookup_solvable() {
        let spec = WorldSpec { n_keys: 10, n_options: 5, chain_len: 4, seed: 5 };
        let (world, train, eval) = generate_world(spec, 200, 30).unwrap();
        // Oracle: find which topic surface the question names, answer its
        // letter. Must score 1.0 on both splits.
        let topic_surfaces: Vec<Vec<String>> = world
            .topics
            .iter()
            .map(|t| vec![world.surface(t.hi).to_string(), world.surface(t.en).to_string()])
            .collect();
        for item in train.iter().chain(&eval) {
            let words: BTreeSet<&str> = item.question.split_whitespace().collect();
            let mut matched = None;
            for (topic_idx, surfaces) in topic_surfaces.iter().enumerate() {
                if surfaces.iter().any(|s| words.contains(s.as_str())) {
                    matched = Some(topic_idx);
                }
            }
            assert_eq!(matched, Some(item.gold.index()), "item {}", item.id);
            // The rationale is expressible in both registers.
            assert_ne!(item.cot_hi, item.cot_en);
        }
    }

    #[test]
    fn records_round_trip_through_dataset_formats() {
        let spec = WorldSpec { n_keys: 4, n_options: 5, chain_len: 3, seed: 2 };
        let (world, train, eval) = generate_world(spec, 10, 3).unwrap();
        let rec = train[0].to_train_record();
        assert_eq!(rec.gold().unwrap(), train[0].gold);
        assert_eq!(rec.option_texts().unwrap(), train[0].options);
        // Rationale and question tokenize strictly against the vocabulary
        // bag (template words are intentionally out-of-vocabulary).
        assert!(world.vocab.tokenize(&rec.cot).is_ok());
        assert_eq!(world.vocab.prompt_bag(&rec.question).ids().len(), 2);

        let bench = eval[0].to_bench_record();
        let item = bench.to_item().unwrap();
        assert_eq!(item.gold(), eval[0].gold);
        assert_eq!(item.id(), eval[0].id);
    }
}
