//! Freely reduced words in free groups and pairs of them in a direct product.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

/// A generator or its inverse.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Letter {
    pub gen: u16,
    pub inverse: bool,
}

impl Letter {
    pub fn new(gen: u16) -> Self {
        Letter { gen, inverse: false }
    }

    pub fn inv(gen: u16) -> Self {
        Letter { gen, inverse: true }
    }

    pub fn inverted(self) -> Self {
        Letter { gen: self.gen, inverse: !self.inverse }
    }

    fn cancels(self, other: Letter) -> bool {
        self.gen == other.gen && self.inverse != other.inverse
    }
}

/// A freely reduced word; the empty word is the identity.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ReducedWord {
    letters: Vec<Letter>,
}

impl ReducedWord {
    pub fn identity() -> Self {
        ReducedWord::default()
    }

    /// Freely reduces an arbitrary sequence of letters.
    pub fn new(letters: impl IntoIterator<Item = Letter>) -> Self {
        let mut out: Vec<Letter> = Vec::new();
        for l in letters {
            if out.last().is_some_and(|&last| last.cancels(l)) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        ReducedWord { letters: out }
    }

    pub fn generator(gen: u16) -> Self {
        ReducedWord { letters: vec![Letter::new(gen)] }
    }

    /// Parses a compact exponent form: `[(gen, exp), ...]`.
    pub fn from_powers(powers: &[(u16, i32)]) -> Self {
        Self::new(powers.iter().flat_map(|&(g, e)| {
            let l = if e < 0 { Letter::inv(g) } else { Letter::new(g) };
            std::iter::repeat_n(l, e.unsigned_abs() as usize)
        }))
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn mul(&self, other: &ReducedWord) -> ReducedWord {
        ReducedWord::new(self.letters.iter().chain(&other.letters).copied())
    }

    pub fn inverse(&self) -> ReducedWord {
        ReducedWord { letters: self.letters.iter().rev().map(|l| l.inverted()).collect() }
    }

    pub fn max_generator(&self) -> Option<u16> {
        self.letters.iter().map(|l| l.gen).max()
    }

    pub fn uses_generator(&self, gen: u16) -> bool {
        self.letters.iter().any(|l| l.gen == gen)
    }

    /// Uniform random reduced word of exactly `len` letters over `rank` generators.
    pub fn random<R: Rng + ?Sized>(rank: u16, len: usize, rng: &mut R) -> Self {
        let mut letters: Vec<Letter> = Vec::with_capacity(len);
        while letters.len() < len {
            let l = Letter { gen: rng.gen_range(0..rank), inverse: rng.gen_bool(0.5) };
            if letters.last().is_some_and(|&last| last.cancels(l)) {
                continue;
            }
            letters.push(l);
        }
        ReducedWord { letters }
    }

    /// Random reduced word restricted to a subset of generators.
    pub fn random_over<R: Rng + ?Sized>(gens: &[u16], len: usize, rng: &mut R) -> Self {
        let mut letters: Vec<Letter> = Vec::with_capacity(len);
        while letters.len() < len {
            let l = Letter { gen: gens[rng.gen_range(0..gens.len())], inverse: rng.gen_bool(0.5) };
            if letters.last().is_some_and(|&last| last.cancels(l)) {
                continue;
            }
            letters.push(l);
        }
        ReducedWord { letters }
    }

    /// All reduced words of length `1..=max_len`, shortest first.
    pub fn enumerate(rank: u16, max_len: usize) -> Vec<ReducedWord> {
        let all: Vec<Letter> = (0..rank).flat_map(|g| [Letter::new(g), Letter::inv(g)]).collect();
        let mut layer = vec![ReducedWord::identity()];
        let mut out = Vec::new();
        for _ in 0..max_len {
            let mut next = Vec::new();
            for w in &layer {
                for &l in &all {
                    if w.letters.last().is_some_and(|&last| last.cancels(l)) {
                        continue;
                    }
                    let mut letters = w.letters.clone();
                    letters.push(l);
                    next.push(ReducedWord { letters });
                }
            }
            out.extend(next.iter().cloned());
            layer = next;
        }
        out
    }

    /// Renders the word with generator names, e.g. `b1 b3^-1`.
    pub fn render(&self, names: &[String]) -> String {
        if self.letters.is_empty() {
            return "e".into();
        }
        self.letters
            .iter()
            .map(|l| {
                let n = names.get(l.gen as usize).cloned().unwrap_or_else(|| format!("x{}", l.gen));
                if l.inverse {
                    format!("{n}^-1")
                } else {
                    n
                }
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

impl fmt::Display for ReducedWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return write!(f, "e");
        }
        for (i, l) in self.letters.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "x{}", l.gen)?;
            if l.inverse {
                write!(f, "^-1")?;
            }
        }
        Ok(())
    }
}

/// An element `(g, h)` of a product of two free groups.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ProductWord {
    pub left: ReducedWord,
    pub right: ReducedWord,
}

impl ProductWord {
    pub fn new(left: ReducedWord, right: ReducedWord) -> Self {
        ProductWord { left, right }
    }

    pub fn identity() -> Self {
        ProductWord::default()
    }

    pub fn left_only(w: ReducedWord) -> Self {
        ProductWord { left: w, right: ReducedWord::identity() }
    }

    pub fn right_only(w: ReducedWord) -> Self {
        ProductWord { left: ReducedWord::identity(), right: w }
    }

    pub fn is_identity(&self) -> bool {
        self.left.is_identity() && self.right.is_identity()
    }

    pub fn mul(&self, o: &ProductWord) -> ProductWord {
        ProductWord { left: self.left.mul(&o.left), right: self.right.mul(&o.right) }
    }

    pub fn inverse(&self) -> ProductWord {
        ProductWord { left: self.left.inverse(), right: self.right.inverse() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn arb_letters() -> impl Strategy<Value = Vec<Letter>> {
        prop::collection::vec((0u16..3, any::<bool>()).prop_map(|(gen, inverse)| Letter { gen, inverse }), 0..20)
    }

    #[test]
    fn reduction_cancels_adjacent_pairs() {
        let w = ReducedWord::new([Letter::new(0), Letter::new(1), Letter::inv(1), Letter::inv(0)]);
        assert!(w.is_identity());
        assert_eq!(ReducedWord::from_powers(&[(0, 2), (0, -1)]), ReducedWord::generator(0));
    }

    #[test]
    fn enumeration_counts() {
        // 2r(2r-1)^(n-1) words of length n
        let words = ReducedWord::enumerate(2, 3);
        assert_eq!(words.len(), 4 + 12 + 36);
        assert!(words.iter().all(|w| ReducedWord::new(w.letters().iter().copied()) == *w));
    }

    proptest! {
        #[test]
        fn word_times_inverse_is_identity(ls in arb_letters()) {
            let w = ReducedWord::new(ls);
            prop_assert!(w.mul(&w.inverse()).is_identity());
            prop_assert!(w.inverse().mul(&w).is_identity());
        }

        #[test]
        fn multiplication_is_associative(a in arb_letters(), b in arb_letters(), c in arb_letters()) {
            let (a, b, c) = (ReducedWord::new(a), ReducedWord::new(b), ReducedWord::new(c));
            prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
        }

        #[test]
        fn reduction_is_idempotent(ls in arb_letters()) {
            let w = ReducedWord::new(ls);
            prop_assert_eq!(ReducedWord::new(w.letters().iter().copied()), w);
        }
    }
}
