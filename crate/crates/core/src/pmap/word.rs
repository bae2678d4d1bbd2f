//! Words over a generator family.

use std::fmt;

use thiserror::Error;

/// One letter: a generator index with an orientation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter {
    pub index: usize,
    pub inverse: bool,
}

impl Letter {
    pub fn cancels(&self, other: &Letter) -> bool {
        self.index == other.index && self.inverse != other.inverse
    }

    pub fn inverted(&self) -> Letter {
        Letter {
            index: self.index,
            inverse: !self.inverse,
        }
    }
}

/// A freely reduced word. Letters are stored in composition order: the last
/// letter of the sequence is applied first, so `letters = [a, b]` denotes
/// the map `a ∘ b`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word {
    letters: Vec<Letter>,
}

impl Word {
    /// The empty word (identity).
    pub fn identity() -> Word {
        Word { letters: Vec::new() }
    }

    pub fn generator(index: usize) -> Word {
        Word {
            letters: vec![Letter { index, inverse: false }],
        }
    }

    pub fn generator_inverse(index: usize) -> Word {
        Word {
            letters: vec![Letter { index, inverse: true }],
        }
    }

    /// Builds a word from letters in composition order, cancelling adjacent
    /// inverse pairs until the word is freely reduced.
    pub fn from_letters(letters: impl IntoIterator<Item = Letter>) -> Word {
        let mut stack: Vec<Letter> = Vec::new();
        for l in letters {
            if stack.last().is_some_and(|top| top.cancels(&l)) {
                stack.pop();
            } else {
                stack.push(l);
            }
        }
        Word { letters: stack }
    }

    /// Concatenation `self ∘ other` (apply `other` first), freely reduced.
    pub fn concat(&self, other: &Word) -> Word {
        Word::from_letters(self.letters.iter().chain(other.letters.iter()).copied())
    }

    pub fn inverse(&self) -> Word {
        Word {
            letters: self.letters.iter().rev().map(Letter::inverted).collect(),
        }
    }

    /// `self` composed with itself `k` times; negative `k` uses the inverse.
    pub fn pow(&self, k: i64) -> Word {
        let base = if k < 0 { self.inverse() } else { self.clone() };
        let mut letters = Vec::with_capacity(base.letters.len() * k.unsigned_abs() as usize);
        for _ in 0..k.unsigned_abs() {
            letters.extend_from_slice(&base.letters);
        }
        Word::from_letters(letters)
    }

    /// The commutator `w1⁻¹ ∘ w2⁻¹ ∘ w1 ∘ w2`, freely reduced.
    pub fn commutator(w1: &Word, w2: &Word) -> Word {
        w1.inverse().concat(&w2.inverse()).concat(w1).concat(w2)
    }

    pub fn is_identity(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// Letters in composition order (index 0 is applied last).
    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    /// The lexicographically smaller of the word and its inverse; two words
    /// that are inverses of each other share this key.
    pub fn canonical_key(&self) -> Word {
        let inv = self.inverse();
        if inv < *self {
            inv
        } else {
            self.clone()
        }
    }

    /// Renders the word with the given generator names, e.g.
    /// `"f1^-1 f2^-1 f1 f2"`. The empty word renders as `"id"`.
    pub fn display_with(&self, names: &[impl AsRef<str>]) -> String {
        if self.letters.is_empty() {
            return "id".to_string();
        }
        let mut out = String::new();
        for (i, l) in self.letters.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            match names.get(l.index) {
                Some(n) => out.push_str(n.as_ref()),
                None => out.push_str(&format!("g{}", l.index + 1)),
            }
            if l.inverse {
                out.push_str("^-1");
            }
        }
        out
    }

    /// Parses a word written as space-separated letters (`"f1 f2^-1"`,
    /// powers like `"f1^3"` allowed, `"id"` for the empty word) against the
    /// given generator names.
    pub fn parse(text: &str, names: &[impl AsRef<str>]) -> Result<Word, WordParseError> {
        let trimmed = text.trim();
        if trimmed.is_empty() || trimmed == "id" {
            return Ok(Word::identity());
        }
        let mut letters = Vec::new();
        for token in trimmed.split_whitespace() {
            let (name, power) = match token.split_once('^') {
                Some((name, pow_text)) => {
                    let power: i64 =
                        pow_text
                            .parse()
                            .map_err(|_| WordParseError::BadPower {
                                token: token.to_string(),
                            })?;
                    (name, power)
                }
                None => (token, 1),
            };
            let index = names
                .iter()
                .position(|n| n.as_ref() == name)
                .ok_or_else(|| WordParseError::UnknownGenerator {
                    name: name.to_string(),
                })?;
            let letter = Letter {
                index,
                inverse: power < 0,
            };
            for _ in 0..power.unsigned_abs() {
                letters.push(letter);
            }
        }
        Ok(Word::from_letters(letters))
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum WordParseError {
    #[error("unknown generator '{name}' in word")]
    UnknownGenerator { name: String },
    #[error("malformed power in word token '{token}'")]
    BadPower { token: String },
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Positional names g1, g2, ... when generator names are not at hand.
        let names: Vec<String> = (0..)
            .take(
                self.letters
                    .iter()
                    .map(|l| l.index + 1)
                    .max()
                    .unwrap_or(0),
            )
            .map(|i| format!("g{}", i + 1))
            .collect();
        write!(f, "{}", self.display_with(&names))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names() -> Vec<&'static str> {
        vec!["f1", "f2", "f3"]
    }

    #[test]
    fn free_reduction_cancels_adjacent_pairs() {
        let w = Word::generator(0).concat(&Word::generator_inverse(0));
        assert!(w.is_identity());
        let c = Word::commutator(&Word::generator(0), &Word::generator(0));
        assert!(c.is_identity());
    }

    #[test]
    fn commutator_letter_order() {
        let c = Word::commutator(&Word::generator(0), &Word::generator(1));
        assert_eq!(c.display_with(&names()), "f1^-1 f2^-1 f1 f2");
    }

    #[test]
    fn inverse_reverses_and_flips() {
        let c = Word::commutator(&Word::generator(0), &Word::generator(1));
        assert_eq!(c.inverse().display_with(&names()), "f2^-1 f1^-1 f2 f1");
        assert!(c.concat(&c.inverse()).is_identity());
    }

    #[test]
    fn powers_and_parse_round_trip() {
        let w = Word::parse("f1^2 f2^-1", &names()).unwrap();
        assert_eq!(w.len(), 3);
        assert_eq!(w.display_with(&names()), "f1 f1 f2^-1");
        assert_eq!(Word::parse("id", &names()).unwrap(), Word::identity());
        assert_eq!(Word::generator(0).pow(-2).display_with(&names()), "f1^-1 f1^-1");
        assert!(Word::parse("f9", &names()).is_err());
    }

    #[test]
    fn canonical_key_identifies_inverse_pairs() {
        let c = Word::commutator(&Word::generator(0), &Word::generator(1));
        let c_rev = Word::commutator(&Word::generator(1), &Word::generator(0));
        assert_eq!(c.inverse(), c_rev);
        assert_eq!(c.canonical_key(), c_rev.canonical_key());
    }
}
