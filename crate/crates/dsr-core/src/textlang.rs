//! Tokens, Unicode script classification, and the Hindi-fraction statistic.
//!
//! The language-form reward is defined over whole generated sequences as the
//! fraction of tokens that are Hindi tokens. "Hindi token" is operationalized
//! here: a token is Devanagari iff a strict majority of its letter codepoints
//! fall in the Devanagari blocks (U+0900..=U+097F, U+A8E0..=U+A8FF). Digit and
//! punctuation codepoints take precedence over block membership so that the
//! danda and Devanagari digits classify as Punct/Digit rather than as letters.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Script class of a single Unicode scalar value or of a whole token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScriptClass {
    Devanagari,
    Latin,
    Digit,
    Punct,
    Whitespace,
    Other,
}

/// Structural role of a token within a prompt/response.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TokenRole {
    Prompt,
    Reasoning,
    Answer,
    Delimiter,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TextError {
    #[error("cannot classify an empty token")]
    EmptyToken,
    #[error("operation requires a non-empty token sequence")]
    EmptySequence,
}

fn is_devanagari_block(cp: char) -> bool {
    matches!(cp, '\u{0900}'..='\u{097F}' | '\u{A8E0}'..='\u{A8FF}')
}

fn is_latin_letter(cp: char) -> bool {
    cp.is_ascii_alphabetic()
        || matches!(cp,
            '\u{00C0}'..='\u{00D6}' | '\u{00D8}'..='\u{00F6}' | '\u{00F8}'..='\u{00FF}'
            | '\u{0100}'..='\u{024F}')
}

/// Classifies one Unicode scalar value. Total: never fails.
///
/// Precedence: whitespace, then digits, then punctuation, then the Devanagari
/// blocks, then Latin letters. The danda (U+0964) sits inside the Devanagari
/// block but is punctuation, and Devanagari digits (U+0966..=U+096F) are
/// digits; both must win over plain block membership.
pub fn classify_codepoint(cp: char) -> ScriptClass {
    if cp.is_whitespace() {
        ScriptClass::Whitespace
    } else if cp.is_ascii_digit() || matches!(cp, '\u{0966}'..='\u{096F}') {
        ScriptClass::Digit
    } else if cp.is_ascii_punctuation()
        || matches!(cp, '\u{0964}' | '\u{0965}' | '\u{2000}'..='\u{206F}')
    {
        ScriptClass::Punct
    } else if is_devanagari_block(cp) {
        ScriptClass::Devanagari
    } else if is_latin_letter(cp) {
        ScriptClass::Latin
    } else {
        ScriptClass::Other
    }
}

/// Classifies a whole token surface.
///
/// A strict majority of the token's letter codepoints decides between
/// Devanagari and Latin; a token with letters but no strict majority is
/// `Other`; a token with no letters takes the class of its first codepoint.
pub fn classify_token(surface: &str) -> Result<ScriptClass, TextError> {
    let mut letters = 0usize;
    let mut devanagari = 0usize;
    let mut latin = 0usize;
    let mut first = None;
    for cp in surface.chars() {
        let class = classify_codepoint(cp);
        if first.is_none() {
            first = Some(class);
        }
        if cp.is_alphabetic() {
            letters += 1;
            match class {
                ScriptClass::Devanagari => devanagari += 1,
                ScriptClass::Latin => latin += 1,
                _ => {}
            }
        }
    }
    let first = first.ok_or(TextError::EmptyToken)?;
    if letters == 0 {
        return Ok(first);
    }
    if 2 * devanagari > letters {
        Ok(ScriptClass::Devanagari)
    } else if 2 * latin > letters {
        Ok(ScriptClass::Latin)
    } else {
        Ok(ScriptClass::Other)
    }
}

/// One token: surface form, vocabulary id, derived script class, role.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub id: u32,
    pub script: ScriptClass,
    pub role: TokenRole,
}

impl Token {
    /// Builds a token, deriving the script class from the surface.
    pub fn new(surface: impl Into<String>, id: u32, role: TokenRole) -> Result<Self, TextError> {
        let surface = surface.into();
        let script = classify_token(&surface)?;
        Ok(Token { surface, id, script, role })
    }
}

/// An ordered token sequence; for generated sequences the prompt is excluded.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TokenSequence {
    pub tokens: Vec<Token>,
}

impl TokenSequence {
    pub fn new(tokens: Vec<Token>) -> Self {
        TokenSequence { tokens }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Token> {
        self.tokens.iter()
    }
}

/// Fraction of Devanagari tokens in the sequence, in `[0, 1]`.
///
/// Digits, punctuation, and mixed-script tokens count in the denominator but
/// not in the numerator. Errors on an empty sequence.
pub fn hindi_fraction(seq: &TokenSequence) -> Result<f64, TextError> {
    if seq.is_empty() {
        return Err(TextError::EmptySequence);
    }
    let hindi = seq.iter().filter(|t| t.script == ScriptClass::Devanagari).count();
    Ok(hindi as f64 / seq.len() as f64)
}

/// Splits text into whitespace-delimited words.
pub fn split_words(text: &str) -> Vec<&str> {
    text.split_whitespace().collect()
}
