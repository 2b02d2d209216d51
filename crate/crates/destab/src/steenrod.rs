//! The mod 2 Steenrod algebra on the admissible basis.
//!
//! A word `[i1, i2, ..., ik]` stands for `Sq^i1 Sq^i2 ... Sq^ik`; it is
//! admissible when `i_j >= 2 i_{j+1}`. Elements are sets of admissible
//! words, so symmetric difference is addition.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

/// `binom(a, b) mod 2` with the 2-adic convention for negative `a`.
///
/// For `b >= 0` this is Lucas' theorem applied to the two's-complement
/// digits of `a`, which for negative `a` end in an infinite run of ones.
#[inline]
pub fn binom2(a: i64, b: i64) -> bool {
    if b < 0 {
        return false;
    }
    if a >= 0 && b > a {
        return false;
    }
    b & !a == 0
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SqWord(pub Vec<u32>);

impl SqWord {
    pub fn unit() -> Self {
        SqWord(Vec::new())
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_admissible(&self) -> bool {
        self.0.iter().all(|&i| i > 0) && self.0.windows(2).all(|w| w[0] >= 2 * w[1])
    }
}

impl fmt::Debug for SqWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for SqWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        for i in &self.0 {
            write!(f, "Sq{i}")?;
        }
        Ok(())
    }
}

/// A homogeneous sum of admissible words.
#[derive(Clone, Default, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct SqSum {
    pub terms: BTreeSet<SqWord>,
}

impl SqSum {
    pub fn zero() -> Self {
        SqSum::default()
    }

    pub fn one() -> Self {
        Self::from_word(SqWord::unit())
    }

    pub fn from_word(w: SqWord) -> Self {
        let mut s = SqSum::zero();
        s.toggle(w);
        s
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn toggle(&mut self, w: SqWord) {
        if !self.terms.remove(&w) {
            self.terms.insert(w);
        }
    }

    pub fn add_assign(&mut self, other: &SqSum) {
        for w in &other.terms {
            self.toggle(w.clone());
        }
    }
}

impl fmt::Display for SqSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self.terms.iter().map(|w| w.to_string()).collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// The Adem relation for `Sq^a Sq^b` with `0 < a < 2b`, as the list of
/// words `[a+b-j, j]` (with `Sq^0` dropped) that occur with coefficient 1.
pub fn adem_sq(a: u32, b: u32) -> Vec<Vec<u32>> {
    debug_assert!(a < 2 * b);
    (0..=a / 2)
        .filter(|&j| binom2(b as i64 - 1 - j as i64, a as i64 - 2 * j as i64))
        .map(|j| if j == 0 { vec![a + b] } else { vec![a + b - j, j] })
        .collect()
}

/// Rewrites a word into admissible normal form.
///
/// The leftmost inadmissible pair is rewritten first; any other order
/// gives the same answer (checked exhaustively in the test suite).
pub fn adem_normalize_sq(word: &[u32]) -> SqSum {
    let w: Vec<u32> = word.iter().copied().filter(|&i| i > 0).collect();
    let Some(p) = w.windows(2).position(|p| p[0] < 2 * p[1]) else {
        return SqSum::from_word(SqWord(w));
    };
    let mut out = SqSum::zero();
    for mid in adem_sq(w[p], w[p + 1]) {
        let mut nw = w[..p].to_vec();
        nw.extend(mid);
        nw.extend_from_slice(&w[p + 2..]);
        out.add_assign(&adem_normalize_sq(&nw));
    }
    out
}

pub fn multiply(x: &SqSum, y: &SqSum) -> SqSum {
    let mut out = SqSum::zero();
    for a in &x.terms {
        for b in &y.terms {
            let mut w = a.0.clone();
            w.extend_from_slice(&b.0);
            out.add_assign(&adem_normalize_sq(&w));
        }
    }
    out
}

/// Appends every admissible word of degree `n` with first entry at most
/// `cap` to `out`.
fn admissible_rec(n: u32, cap: u32, prefix: &mut Vec<u32>, out: &mut Vec<SqWord>) {
    if n == 0 {
        out.push(SqWord(prefix.clone()));
        return;
    }
    for i in 1..=n.min(cap) {
        prefix.push(i);
        admissible_rec(n - i, i / 2, prefix, out);
        prefix.pop();
    }
}

/// Admissible basis of the degree-`n` part of the Steenrod algebra, in
/// decreasing lexicographic order (`Sq3` before `Sq2Sq1`).
pub fn admissible_basis(n: u32) -> Vec<SqWord> {
    let mut out = Vec::new();
    admissible_rec(n, n, &mut Vec::new(), &mut out);
    out.sort_by(|a, b| b.cmp(a));
    out
}
