//! Plate grammar, normalization and confusable-aware similarity.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::RegistryError;

/// Default grammar: two or three letters, a hyphen, one to four digits.
pub const DEFAULT_PLATE_PATTERN: &str = "L{2,3}-D{1,4}";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Class {
    Letter,
    Digit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Block {
    class: Class,
    min: usize,
    max: usize,
}

/// A hyphen-separated sequence of letter (`L`) and digit (`D`) blocks, each
/// with a length range: `L{2,3}-D{1,4}`, `L{3}-D{3}-L{1,2}` and so on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlateGrammar {
    pattern: String,
    blocks: Vec<Block>,
}

impl Default for PlateGrammar {
    fn default() -> Self {
        DEFAULT_PLATE_PATTERN.parse().expect("default plate pattern is valid")
    }
}

impl FromStr for PlateGrammar {
    type Err = RegistryError;

    fn from_str(pattern: &str) -> Result<Self, Self::Err> {
        let bad = |why: &str| RegistryError::InvalidGrammar(format!("{pattern:?}: {why}"));
        let mut blocks = Vec::new();
        for part in pattern.trim().split('-') {
            let mut chars = part.chars();
            let class = match chars.next() {
                Some('L') => Class::Letter,
                Some('D') => Class::Digit,
                _ => return Err(bad("each block must start with L or D")),
            };
            let rest = chars.as_str();
            let inner = rest
                .strip_prefix('{')
                .and_then(|r| r.strip_suffix('}'))
                .ok_or_else(|| bad("expected {min,max} or {n} after block class"))?;
            let parse = |s: &str| s.trim().parse::<usize>().map_err(|_| bad("bad repeat count"));
            let (min, max) = match inner.split_once(',') {
                Some((lo, hi)) => (parse(lo)?, parse(hi)?),
                None => {
                    let n = parse(inner)?;
                    (n, n)
                }
            };
            if min == 0 || min > max {
                return Err(bad("repeat range must satisfy 1 <= min <= max"));
            }
            blocks.push(Block { class, min, max });
        }
        if blocks.is_empty() {
            return Err(bad("empty pattern"));
        }
        Ok(Self {
            pattern: pattern.trim().to_string(),
            blocks,
        })
    }
}

impl PlateGrammar {
    pub fn pattern(&self) -> &str {
        &self.pattern
    }

    /// Canonicalizes free-form plate text.
    ///
    /// Whitespace and ASCII punctuation separate groups. When there are fewer
    /// groups than the grammar has blocks, groups are further split at
    /// letter/digit boundaries (`abc123` becomes `ABC-123`). Groups are
    /// upper-cased and joined with single hyphens.
    ///
    /// A letter block also admits the digits `0 1 8 5` and a digit block the
    /// letters `O I B S`, since recognisers routinely confuse them; such
    /// characters are kept verbatim so fuzzy matching can weigh them.
    pub fn normalize(&self, raw: &str) -> Result<PlateId, RegistryError> {
        let invalid = |why: String| RegistryError::InvalidPlate(why);

        let mut groups: Vec<String> = Vec::new();
        let mut current = String::new();
        for ch in raw.chars() {
            if ch.is_ascii_alphanumeric() {
                current.push(ch.to_ascii_uppercase());
            } else if ch.is_whitespace() || ch.is_ascii_punctuation() {
                if !current.is_empty() {
                    groups.push(std::mem::take(&mut current));
                }
            } else {
                return Err(invalid(format!("unsupported character {ch:?}")));
            }
        }
        if !current.is_empty() {
            groups.push(current);
        }
        if groups.is_empty() {
            return Err(invalid("no letters or digits".into()));
        }
        if groups.len() < self.blocks.len() {
            groups = groups.iter().flat_map(|g| split_classes(g)).collect();
        }

        let candidate = groups.join("-");
        if groups.len() != self.blocks.len() {
            return Err(invalid(format!(
                "{candidate:?} has {} groups, grammar {} expects {}",
                groups.len(),
                self.pattern,
                self.blocks.len()
            )));
        }
        for (group, block) in groups.iter().zip(&self.blocks) {
            let class_ok = group.chars().all(|c| admits(block.class, c));
            let len_ok = (block.min..=block.max).contains(&group.len());
            if !class_ok || !len_ok {
                return Err(invalid(format!(
                    "{candidate:?} does not match grammar {}",
                    self.pattern
                )));
            }
        }
        Ok(PlateId(candidate))
    }
}

fn admits(class: Class, c: char) -> bool {
    match class {
        Class::Letter => c.is_ascii_uppercase() || matches!(c, '0' | '1' | '8' | '5'),
        Class::Digit => c.is_ascii_digit() || matches!(c, 'O' | 'I' | 'B' | 'S'),
    }
}

fn split_classes(group: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    let mut prev_digit = None;
    for c in group.chars() {
        let digit = c.is_ascii_digit();
        if prev_digit != Some(digit) {
            out.push(String::new());
        }
        out.last_mut().expect("pushed above").push(c);
        prev_digit = Some(digit);
    }
    out
}

/// A canonical plate string, e.g. `ABC-123`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PlateId(String);

impl PlateId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for PlateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Normalizes against the default grammar.
pub fn normalize_plate(raw: &str) -> Result<PlateId, RegistryError> {
    PlateGrammar::default().normalize(raw)
}

const CONFUSABLE: [(char, char); 4] = [('O', '0'), ('I', '1'), ('B', '8'), ('S', '5')];

fn confusable(a: char, b: char) -> bool {
    CONFUSABLE
        .iter()
        .any(|&(x, y)| (a == x && b == y) || (a == y && b == x))
}

/// Edit distance where OCR-confusable substitutions cost half an edit.
pub fn weighted_edit_distance(a: &str, b: &str) -> f64 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<f64> = (0..=b.len()).map(|j| j as f64).collect();
    let mut row = vec![0.0; b.len() + 1];
    for (i, &ca) in a.iter().enumerate() {
        row[0] = (i + 1) as f64;
        for (j, &cb) in b.iter().enumerate() {
            let sub = if ca == cb {
                0.0
            } else if confusable(ca, cb) {
                0.5
            } else {
                1.0
            };
            row[j + 1] = (prev[j] + sub).min(prev[j + 1] + 1.0).min(row[j] + 1.0);
        }
        std::mem::swap(&mut prev, &mut row);
    }
    prev[b.len()]
}

/// `1 - weighted_edit_distance / max_len`, in `[0, 1]`.
pub fn plate_similarity(a: &PlateId, b: &PlateId) -> f64 {
    let longest = a.0.chars().count().max(b.0.chars().count());
    if longest == 0 {
        return 1.0;
    }
    (1.0 - weighted_edit_distance(&a.0, &b.0) / longest as f64).clamp(0.0, 1.0)
}

/// Stands in for on-device OCR: plate text and a confidence come in
/// already recognised.
#[derive(Debug, Clone, Default)]
pub struct RecognizerStub {
    grammar: PlateGrammar,
}

impl RecognizerStub {
    pub fn new(grammar: PlateGrammar) -> Self {
        Self { grammar }
    }

    pub fn recognize(&self, text: &str, confidence: f64) -> Result<(PlateId, f64), RegistryError> {
        if !(0.0..=1.0).contains(&confidence) {
            return Err(RegistryError::InvalidConfidence(confidence));
        }
        Ok((self.grammar.normalize(text)?, confidence))
    }
}
