//! Node addresses in k-ary trees and their prefix / lexicographic orders.

use std::fmt;

/// A node address: a sequence of direction indices `0..k`, root = empty.
///
/// The derived `Ord` is the lexicographic order in which a prefix is
/// smaller than its extensions, i.e. the preorder of a depth-first walk
/// visiting directions in increasing order.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(pub Vec<usize>);

impl Word {
    pub fn root() -> Word {
        Word(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn child(&self, d: usize) -> Word {
        let mut v = self.0.clone();
        v.push(d);
        Word(v)
    }

    pub fn parent(&self) -> Option<Word> {
        let mut v = self.0.clone();
        v.pop().map(|_| Word(v))
    }

    pub fn is_prefix_of(&self, other: &Word) -> bool {
        other.0.starts_with(&self.0)
    }

    pub fn is_strict_prefix_of(&self, other: &Word) -> bool {
        self.len() < other.len() && self.is_prefix_of(other)
    }

    pub fn lex_le(&self, other: &Word) -> bool {
        self <= other
    }

    pub fn lex_lt(&self, other: &Word) -> bool {
        self < other
    }

    pub fn incomparable(&self, other: &Word) -> bool {
        !self.is_prefix_of(other) && !other.is_prefix_of(self)
    }

    /// Every element is the last direction `k - 1` (the rightmost branch).
    pub fn is_rightmost(&self, k: usize) -> bool {
        self.0.iter().all(|&d| d + 1 == k)
    }

    /// Renders with direction names, joined by `.`; the root is the empty string.
    pub fn display_with(&self, directions: &[String]) -> String {
        self.0
            .iter()
            .map(|&d| directions[d].as_str())
            .collect::<Vec<_>>()
            .join(".")
    }

    /// Inverse of [`Word::display_with`].
    pub fn parse_with(s: &str, directions: &[String]) -> Option<Word> {
        if s.is_empty() {
            return Some(Word::root());
        }
        s.split('.')
            .map(|name| directions.iter().position(|d| d == name))
            .collect::<Option<Vec<_>>>()
            .map(Word)
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("ε");
        }
        for d in &self.0 {
            write!(f, "{}", d + 1)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &[usize]) -> Word {
        Word(s.to_vec())
    }

    #[test]
    fn orders() {
        assert!(w(&[]).is_strict_prefix_of(&w(&[0])));
        assert!(!w(&[0]).is_strict_prefix_of(&w(&[0])));
        assert!(w(&[0]).is_prefix_of(&w(&[0])));
        assert!(w(&[0, 1, 1]).lex_lt(&w(&[1])));
        assert!(w(&[0]).lex_lt(&w(&[0, 0])));
        assert!(w(&[0, 1]).incomparable(&w(&[1, 0])));
        assert!(!w(&[0]).incomparable(&w(&[0, 1])));
        assert!(w(&[1, 1]).is_rightmost(2));
        assert!(w(&[]).is_rightmost(2));
        assert!(!w(&[1, 0]).is_rightmost(2));
    }

    /// The derived order coincides with the prefix-or-first-difference definition.
    #[test]
    fn lex_matches_definition() {
        let mut all = vec![Word::root()];
        for len in 1..=3 {
            for code in 0..(1usize << len) {
                all.push(Word((0..len).map(|i| (code >> (len - 1 - i)) & 1).collect()));
            }
        }
        for u in &all {
            for v in &all {
                let by_def = u.is_prefix_of(v)
                    || u.0.iter().zip(&v.0).find(|(a, b)| a != b).is_some_and(|(a, b)| a < b);
                assert_eq!(u.lex_le(v), by_def, "{u:?} {v:?}");
            }
        }
    }

    #[test]
    fn names_roundtrip() {
        let dirs = vec!["d1".to_string(), "d2".to_string()];
        let x = w(&[1, 0, 1]);
        let s = x.display_with(&dirs);
        assert_eq!(s, "d2.d1.d2");
        assert_eq!(Word::parse_with(&s, &dirs), Some(x));
        assert_eq!(Word::parse_with("", &dirs), Some(Word::root()));
        assert_eq!(Word::parse_with("d3", &dirs), None);
    }
}
