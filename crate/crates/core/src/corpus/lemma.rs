use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};

use super::bundled;

/// Dictionary lookup for irregular forms backed by a small set of inflectional
/// suffix rules (-s, -es, -ies, -ing, -ed).
///
/// Lemmatization is iterated to a fixed point, so `lemmatize(lemmatize(w))`
/// always equals `lemmatize(w)`.
#[derive(Debug, Clone, Default)]
pub struct Lemmatizer {
    dictionary: HashMap<String, String>,
}

const MAX_REWRITES: usize = 8;

impl Lemmatizer {
    /// Rules only, no dictionary.
    pub fn rules_only() -> Self {
        Lemmatizer::default()
    }

    pub fn bundled() -> Self {
        Self::from_tsv(bundled::LEMMAS).expect("bundled lemma dictionary is well formed")
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_tsv(&text)
    }

    /// Parses `surface<TAB>lemma` lines. Blank lines and `#` comments are skipped.
    pub fn from_tsv(text: &str) -> Result<Self> {
        let mut dictionary = HashMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split('\t');
            let (surface, lemma) = match (cols.next(), cols.next(), cols.next()) {
                (Some(s), Some(l), None) if !s.trim().is_empty() && !l.trim().is_empty() => {
                    (s.trim().to_lowercase(), l.trim().to_lowercase())
                }
                _ => {
                    return Err(Error::MalformedRecord {
                        position: format!("lemma dictionary line {}", lineno + 1),
                        message: "expected two tab-separated columns".into(),
                    })
                }
            };
            dictionary.insert(surface, lemma);
        }
        Ok(Lemmatizer { dictionary })
    }

    pub fn len(&self) -> usize {
        self.dictionary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dictionary.is_empty()
    }

    pub fn lemmatize(&self, word: &str) -> String {
        let mut current = word.to_string();
        for _ in 0..MAX_REWRITES {
            let next = self.rewrite_once(&current);
            if next == current {
                break;
            }
            current = next;
        }
        current
    }

    fn rewrite_once(&self, word: &str) -> String {
        match self.dictionary.get(word) {
            Some(lemma) => lemma.clone(),
            None => apply_suffix_rules(word),
        }
    }
}

fn is_vowel_at(chars: &[char], i: usize) -> bool {
    match chars[i] {
        'a' | 'e' | 'i' | 'o' | 'u' => true,
        // 'y' after a consonant acts as a vowel ("try", "fly").
        'y' => i > 0 && !is_vowel_at(chars, i - 1),
        _ => false,
    }
}

fn has_vowel(word: &str) -> bool {
    let chars: Vec<char> = word.chars().collect();
    (0..chars.len()).any(|i| is_vowel_at(&chars, i))
}

/// Number of vowel-consonant sequences in the word.
fn measure(word: &str) -> usize {
    let chars: Vec<char> = word.chars().collect();
    let mut m = 0;
    let mut prev_vowel = false;
    for i in 0..chars.len() {
        let v = is_vowel_at(&chars, i);
        if prev_vowel && !v {
            m += 1;
        }
        prev_vowel = v;
    }
    m
}

/// consonant-vowel-consonant ending where the final consonant is not w, x or y.
fn ends_cvc(word: &str) -> bool {
    let chars: Vec<char> = word.chars().collect();
    let n = chars.len();
    if n < 3 {
        return false;
    }
    !is_vowel_at(&chars, n - 3)
        && is_vowel_at(&chars, n - 2)
        && !is_vowel_at(&chars, n - 1)
        && !matches!(chars[n - 1], 'w' | 'x' | 'y')
}

fn ends_double_consonant(word: &str) -> bool {
    let chars: Vec<char> = word.chars().collect();
    let n = chars.len();
    n >= 2 && chars[n - 1] == chars[n - 2] && !is_vowel_at(&chars, n - 1)
}

fn apply_suffix_rules(word: &str) -> String {
    let len = word.chars().count();

    // Plural and third-person -s.
    if let Some(stem) = word.strip_suffix("ies") {
        if len > 4 {
            return format!("{stem}y");
        }
    }
    if let Some(stem) = word.strip_suffix("sses") {
        return format!("{stem}ss");
    }
    for suffix in ["ches", "shes", "xes", "zes"] {
        if word.ends_with(suffix) && len > suffix.len() + 1 {
            return word[..word.len() - 2].to_string();
        }
    }
    if word.ends_with('s')
        && len > 3
        && !word.ends_with("ss")
        && !word.ends_with("us")
        && !word.ends_with("is")
    {
        return word[..word.len() - 1].to_string();
    }

    // Past tense and progressive.
    if let Some(stem) = word.strip_suffix("eed") {
        if measure(stem) > 0 {
            return word[..word.len() - 1].to_string();
        }
        return word.to_string();
    }
    for suffix in ["ing", "ed"] {
        if let Some(stem) = word.strip_suffix(suffix) {
            if stem.chars().count() >= 3 && has_vowel(stem) {
                return restore_stem(stem);
            }
        }
    }
    word.to_string()
}

fn restore_stem(stem: &str) -> String {
    if stem.ends_with("at") || stem.ends_with("bl") || stem.ends_with("iz") {
        return format!("{stem}e");
    }
    if ends_double_consonant(stem) && !matches!(stem.chars().last(), Some('l' | 's' | 'z')) {
        return stem[..stem.len() - 1].to_string();
    }
    if measure(stem) == 1 && ends_cvc(stem) {
        return format!("{stem}e");
    }
    stem.to_string()
}
