//! Reduced words in two involutions `a`, `b` (`a² = b² = 1`, no other relation)
//! and the expansion of `[(1+a)(1+b)]^n`.
//!
//! Every reduced word alternates, so it is determined by its first letter and
//! its length. The classes follow that split:
//!
//! | class          | word           | count symbol        |
//! |----------------|----------------|---------------------|
//! | `Empty`        | `1`            | `c(n,0) = e(n,0)`   |
//! | `Ab(k)`, k ≥ 1 | `(ab)^k`       | `c(n,k)`            |
//! | `AbA(k)`, k ≥ 0| `(ab)^k a`     | `d(n,k)`            |
//! | `Ba(k)`, k ≥ 1 | `(ba)^k`       | `e(n,k)`            |
//! | `BAb(k)`, k ≥ 0| `b(ab)^k`      | (odd, unnamed)      |

use std::collections::BTreeMap;

use num_bigint::BigUint;
use serde::Serialize;

use super::binomial;
use crate::error::{Error, Result};

/// Largest expansion order accepted by [`word_counts_bruteforce`] (4^12 ≈ 16.8M terms).
pub const BRUTEFORCE_CAP: u32 = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Letter {
    A,
    B,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum WordClass {
    Empty,
    Ab(u32),
    AbA(u32),
    Ba(u32),
    BAb(u32),
}

impl WordClass {
    pub fn len(&self) -> u32 {
        match *self {
            WordClass::Empty => 0,
            WordClass::Ab(k) | WordClass::Ba(k) => 2 * k,
            WordClass::AbA(k) | WordClass::BAb(k) => 2 * k + 1,
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, WordClass::Empty)
    }

    pub fn is_odd(&self) -> bool {
        self.len() % 2 == 1
    }

    /// Class of an already reduced word. Panics if `word` is not alternating.
    pub fn of_reduced(word: &[Letter]) -> Self {
        assert!(
            word.windows(2).all(|w| w[0] != w[1]),
            "word is not reduced: {word:?}"
        );
        let len = word.len() as u32;
        match word.first() {
            None => WordClass::Empty,
            Some(Letter::A) if len.is_multiple_of(2) => WordClass::Ab(len / 2),
            Some(Letter::A) => WordClass::AbA(len / 2),
            Some(Letter::B) if len.is_multiple_of(2) => WordClass::Ba(len / 2),
            Some(Letter::B) => WordClass::BAb(len / 2),
        }
    }
}

/// Rewrites `aa → ε`, `bb → ε` until no rule applies.
pub fn reduce_word(word: &[Letter]) -> Vec<Letter> {
    let mut current = word.to_vec();
    loop {
        let Some(pos) = current.windows(2).position(|w| w[0] == w[1]) else {
            return current;
        };
        current.drain(pos..pos + 2);
    }
}

/// Exact tally of reduced classes in the expansion of `[(1+a)(1+b)]^n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WordCountTable {
    pub n: u32,
    pub counts: BTreeMap<WordClass, u64>,
}

impl WordCountTable {
    pub fn count(&self, class: WordClass) -> u64 {
        self.counts.get(&class).copied().unwrap_or(0)
    }

    /// Number of terms reducing to `(ab)^k` (the empty word when `k = 0`).
    pub fn c(&self, k: u32) -> u64 {
        if k == 0 {
            self.count(WordClass::Empty)
        } else {
            self.count(WordClass::Ab(k))
        }
    }

    pub fn d(&self, k: u32) -> u64 {
        self.count(WordClass::AbA(k))
    }

    /// Number of terms reducing to `(ba)^k` (the empty word when `k = 0`).
    pub fn e(&self, k: u32) -> u64 {
        if k == 0 {
            self.count(WordClass::Empty)
        } else {
            self.count(WordClass::Ba(k))
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn odd_total(&self) -> u64 {
        self.counts
            .iter()
            .filter(|(class, _)| class.is_odd())
            .map(|(_, &c)| c)
            .sum()
    }
}

/// Enumerates all `4^n` terms of `[(1+a)(1+b)]^n` and tallies reduced classes.
///
/// Each factor contributes one of `1, a, b, ab`. The reduced word is kept on a
/// stack during the depth-first walk so that appending a letter either pushes
/// it or cancels the top, which is the same normal form [`reduce_word`] reaches.
pub fn word_counts_bruteforce(n: u32) -> Result<WordCountTable> {
    if n == 0 {
        return Err(Error::param("n", 0.0, "expansion order must be positive"));
    }
    if n > BRUTEFORCE_CAP {
        return Err(Error::OrderTooLarge {
            order: n,
            cap: BRUTEFORCE_CAP,
        });
    }
    // Indexed by (first letter, length); length ≤ 2n.
    let width = 2 * n as usize + 1;
    let mut tally = vec![[0u64; 2]; width];
    let mut stack: Vec<Letter> = Vec::with_capacity(2 * n as usize);
    walk(n, &mut stack, &mut tally);

    let mut counts = BTreeMap::new();
    for (len, firsts) in tally.iter().enumerate() {
        for (slot, &count) in firsts.iter().enumerate() {
            if count == 0 {
                continue;
            }
            let first = if slot == 0 { Letter::A } else { Letter::B };
            let word: Vec<Letter> = (0..len)
                .map(|i| match (first, i % 2) {
                    (Letter::A, 0) | (Letter::B, 1) => Letter::A,
                    _ => Letter::B,
                })
                .collect();
            *counts.entry(WordClass::of_reduced(&word)).or_insert(0) += count;
        }
    }
    Ok(WordCountTable { n, counts })
}

enum Undo {
    Pushed,
    Popped(Letter),
}

fn apply(stack: &mut Vec<Letter>, letter: Letter) -> Undo {
    if stack.last() == Some(&letter) {
        stack.pop();
        Undo::Popped(letter)
    } else {
        stack.push(letter);
        Undo::Pushed
    }
}

fn revert(stack: &mut Vec<Letter>, undo: Undo) {
    match undo {
        Undo::Pushed => {
            stack.pop();
        }
        Undo::Popped(letter) => stack.push(letter),
    }
}

fn walk(remaining: u32, stack: &mut Vec<Letter>, tally: &mut [[u64; 2]]) {
    if remaining == 0 {
        let slot = match stack.first() {
            Some(Letter::B) => 1,
            _ => 0,
        };
        tally[stack.len()][slot] += 1;
        return;
    }
    // 1
    walk(remaining - 1, stack, tally);
    // a
    let u = apply(stack, Letter::A);
    walk(remaining - 1, stack, tally);
    revert(stack, u);
    // b
    let u = apply(stack, Letter::B);
    walk(remaining - 1, stack, tally);
    revert(stack, u);
    // ab
    let u1 = apply(stack, Letter::A);
    let u2 = apply(stack, Letter::B);
    walk(remaining - 1, stack, tally);
    revert(stack, u2);
    revert(stack, u1);
}

/// Closed-form counts `c(n,k) = C(2n-1, n-k)`, `d(n,k) = e(n,k) = C(2n-1, n-k-1)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClosedCounts {
    pub c: BigUint,
    pub d: BigUint,
    pub e: BigUint,
}

impl ClosedCounts {
    /// Weight of `τ((ab)^k)` in the expansion: `c(n,k) + e(n,k) = C(2n, n-k)`.
    pub fn combined(&self) -> BigUint {
        &self.c + &self.e
    }
}

pub fn word_counts_closed(n: u32, k: u32) -> Result<ClosedCounts> {
    if n == 0 {
        return Err(Error::param("n", 0.0, "expansion order must be positive"));
    }
    let top = 2 * n as u64 - 1;
    let nk = n as i64 - k as i64;
    let d = binomial(top, nk - 1);
    Ok(ClosedCounts {
        c: binomial(top, nk),
        e: d.clone(),
        d,
    })
}

/// One CSV row of the word-count table.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WordCountRow {
    pub n: u32,
    pub k: u32,
    pub c: String,
    pub d: String,
    pub e: String,
    pub bruteforce_c: Option<u64>,
    pub bruteforce_d: Option<u64>,
    pub bruteforce_e: Option<u64>,
}

/// Rows `k = 0..=n` pairing closed forms with brute-force counts (when `n` is
/// within the enumeration cap).
pub fn word_count_rows(n: u32) -> Result<Vec<WordCountRow>> {
    let brute = if n <= BRUTEFORCE_CAP {
        Some(word_counts_bruteforce(n)?)
    } else {
        None
    };
    (0..=n)
        .map(|k| {
            let closed = word_counts_closed(n, k)?;
            Ok(WordCountRow {
                n,
                k,
                c: closed.c.to_string(),
                d: closed.d.to_string(),
                e: closed.e.to_string(),
                bruteforce_c: brute.as_ref().map(|t| t.c(k)),
                bruteforce_d: brute.as_ref().map(|t| t.d(k)),
                bruteforce_e: brute.as_ref().map(|t| t.e(k)),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use Letter::{A, B};

    #[test]
    fn rewriting_reaches_alternating_normal_form() {
        assert_eq!(reduce_word(&[A, A]), vec![]);
        assert_eq!(reduce_word(&[A, B, B, A]), vec![]);
        assert_eq!(reduce_word(&[A, B, B, A, B]), vec![B]);
        assert_eq!(reduce_word(&[A, B, A, B]), vec![A, B, A, B]);
    }

    #[test]
    fn order_one_expansion() {
        let t = word_counts_bruteforce(1).unwrap();
        assert_eq!(t.count(WordClass::Empty), 1);
        assert_eq!(t.count(WordClass::AbA(0)), 1);
        assert_eq!(t.count(WordClass::BAb(0)), 1);
        assert_eq!(t.count(WordClass::Ab(1)), 1);
        assert_eq!(t.counts.len(), 4);
    }

    #[test]
    fn order_two_counts() {
        let t = word_counts_bruteforce(2).unwrap();
        assert_eq!(t.c(1), 3);
        assert_eq!(t.c(0), 3);
        assert_eq!(t.e(1), 1);
        assert_eq!(t.total(), 16);
    }

    #[test]
    fn cap_enforced() {
        assert_eq!(
            word_counts_bruteforce(13),
            Err(Error::OrderTooLarge { order: 13, cap: 12 })
        );
        assert!(word_counts_bruteforce(0).is_err());
    }

    #[test]
    fn closed_form_values() {
        assert_eq!(word_counts_closed(1, 1).unwrap().c, BigUint::from(1u32));
        assert_eq!(word_counts_closed(2, 0).unwrap().e, BigUint::from(3u32));
        assert_eq!(word_counts_closed(2, 1).unwrap().c, BigUint::from(3u32));
        // c(n,k) + e(n,k) = C(2n, n-k)
        assert_eq!(
            word_counts_closed(5, 2).unwrap().combined(),
            binomial(10, 3)
        );
    }

    #[test]
    fn stack_walk_matches_rewriting() {
        // Independent tally by explicit rewriting for n = 3.
        let mut counts: BTreeMap<WordClass, u64> = BTreeMap::new();
        let choices: [&[Letter]; 4] = [&[], &[A], &[B], &[A, B]];
        for code in 0..64u32 {
            let mut word = Vec::new();
            for f in 0..3 {
                word.extend_from_slice(choices[((code >> (2 * f)) & 3) as usize]);
            }
            *counts
                .entry(WordClass::of_reduced(&reduce_word(&word)))
                .or_insert(0) += 1;
        }
        assert_eq!(word_counts_bruteforce(3).unwrap().counts, counts);
    }

    #[test]
    fn rows_include_bruteforce_columns() {
        let rows = word_count_rows(3).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[1].c, "10");
        assert_eq!(rows[1].bruteforce_c, Some(10));
        assert!(word_count_rows(13).unwrap()[0].bruteforce_c.is_none());
    }
}
