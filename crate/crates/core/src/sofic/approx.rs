//! Maps from a free group (or a product of two) to permutations of a fixed
//! indexed domain, evaluated as word maps over generator images.

use std::sync::Arc;

use super::hamming::{distance_fn, Estimate, HammingMode};
use super::perm::PermutationRep;
use crate::error::{Error, Result};
use crate::groups::{ProductWord, ReducedWord};

/// An assignment of permutations of `0..N` to group elements given as words.
pub trait Approximation: Sync {
    type Word: Clone + Sync;

    fn domain_size(&self) -> u128;

    /// σ(w) x.
    fn apply(&self, w: &Self::Word, x: u128) -> u128;

    fn word_mul(&self, u: &Self::Word, v: &Self::Word) -> Self::Word;

    fn identity_word(&self) -> Self::Word;

    /// d_H between σ(lhs[0])∘σ(lhs[1])∘… and σ(rhs[0])∘σ(rhs[1])∘….
    fn distance(&self, lhs: &[Self::Word], rhs: &[Self::Word], mode: &HammingMode) -> Result<Estimate> {
        distance_fn(self.domain_size(), |x| apply_seq(self, lhs, x), |x| apply_seq(self, rhs, x), mode)
    }
}

/// Applies `ws` right to left.
pub fn apply_seq<A: Approximation + ?Sized>(a: &A, ws: &[A::Word], x: u128) -> u128 {
    ws.iter().rev().fold(x, |x, w| a.apply(w, x))
}

/// Multiplicativity defect d_H(σ(u)∘σ(v), σ(uv)).
pub fn hom_defect<A: Approximation + ?Sized>(a: &A, u: &A::Word, v: &A::Word, mode: &HammingMode) -> Result<Estimate> {
    a.distance(&[u.clone(), v.clone()], &[a.word_mul(u, v)], mode)
}

/// d_H(σ(w), Id).
pub fn displacement<A: Approximation + ?Sized>(a: &A, w: &A::Word, mode: &HammingMode) -> Result<Estimate> {
    a.distance(std::slice::from_ref(w), &[], mode)
}

/// Fraction of points fixed by σ(w).
pub fn fixed_fraction<A: Approximation + ?Sized>(a: &A, w: &A::Word, mode: &HammingMode) -> Result<Estimate> {
    Ok(displacement(a, w, mode)?.complement())
}

/// d_H(σ(u)∘σ(v), σ(v)∘σ(u)).
pub fn commutator_defect<A: Approximation + ?Sized>(a: &A, u: &A::Word, v: &A::Word, mode: &HammingMode) -> Result<Estimate> {
    a.distance(&[u.clone(), v.clone()], &[v.clone(), u.clone()], mode)
}

/// σ(g, h) = σ(g, e) ∘ σ(e, h), where each factor is the word map over the
/// generator images of the left free group (Σ) and the right one (Λ).
#[derive(Clone, Debug)]
pub struct AsymptoticHom {
    n: u128,
    left: Vec<PermutationRep>,
    left_inv: Vec<PermutationRep>,
    right: Vec<PermutationRep>,
    right_inv: Vec<PermutationRep>,
}

impl AsymptoticHom {
    pub fn new(left: Vec<PermutationRep>, right: Vec<PermutationRep>) -> Result<Self> {
        let n = left.first().or(right.first()).map(|p| p.size()).ok_or_else(|| Error::invalid("no generator images"))?;
        if left.iter().chain(&right).any(|p| p.size() != n) {
            return Err(Error::invalid("generator images act on different domains"));
        }
        let left_inv = left.iter().map(|p| p.inverse()).collect();
        let right_inv = right.iter().map(|p| p.inverse()).collect();
        Ok(AsymptoticHom { n, left, left_inv, right, right_inv })
    }

    /// Generator images together with their inverses, already computed.
    pub(crate) fn with_inverses(left: Vec<(PermutationRep, PermutationRep)>, right: Vec<(PermutationRep, PermutationRep)>) -> Result<Self> {
        let n = left.first().or(right.first()).map(|p| p.0.size()).ok_or_else(|| Error::invalid("no generator images"))?;
        let (left, left_inv) = left.into_iter().unzip();
        let (right, right_inv) = right.into_iter().unzip();
        Ok(AsymptoticHom { n, left, left_inv, right, right_inv })
    }

    pub fn left_rank(&self) -> usize {
        self.left.len()
    }

    pub fn right_rank(&self) -> usize {
        self.right.len()
    }

    pub fn left_image(&self, i: usize) -> &PermutationRep {
        &self.left[i]
    }

    pub fn right_image(&self, j: usize) -> &PermutationRep {
        &self.right[j]
    }

    pub fn is_exact(&self) -> bool {
        self.left.iter().chain(&self.right).all(|p| p.is_exact())
    }

    #[inline]
    fn apply_word(images: &[PermutationRep], inverses: &[PermutationRep], w: &ReducedWord, mut x: u128) -> u128 {
        for l in w.letters().iter().rev() {
            let table = if l.inverse { &inverses[l.gen as usize] } else { &images[l.gen as usize] };
            x = table.apply(x);
        }
        x
    }

    /// σ(g, e) x.
    pub fn apply_left(&self, g: &ReducedWord, x: u128) -> u128 {
        Self::apply_word(&self.left, &self.left_inv, g, x)
    }

    /// σ(e, h) x.
    pub fn apply_right(&self, h: &ReducedWord, x: u128) -> u128 {
        Self::apply_word(&self.right, &self.right_inv, h, x)
    }

    /// Rejects words naming generators beyond the ranks.
    pub fn check_word(&self, w: &ProductWord) -> Result<()> {
        if w.left.max_generator().is_some_and(|g| g as usize >= self.left.len())
            || w.right.max_generator().is_some_and(|g| g as usize >= self.right.len())
        {
            return Err(Error::invalid("word uses a generator outside the approximation's ranks"));
        }
        Ok(())
    }

    /// σ(w) as a permutation (an image table when every generator is exact).
    pub fn eval(&self, w: &ProductWord) -> Result<PermutationRep> {
        self.check_word(w)?;
        if self.is_exact() {
            let n = self.n as u32;
            use rayon::prelude::*;
            let v: Vec<u32> = (0..n).into_par_iter().map(|x| self.apply(w, x as u128) as u32).collect();
            return Ok(PermutationRep::from_images_unchecked(v));
        }
        let (me, w2) = (Arc::new(self.clone()), w.clone());
        let (me_i, wi) = (me.clone(), w.inverse());
        Ok(PermutationRep::implicit(self.n, Arc::new(move |x| me.apply(&w2, x)), Arc::new(move |x| me_i.apply(&wi, x))))
    }
}

impl Approximation for AsymptoticHom {
    type Word = ProductWord;

    fn domain_size(&self) -> u128 {
        self.n
    }

    #[inline]
    fn apply(&self, w: &ProductWord, x: u128) -> u128 {
        self.apply_left(&w.left, self.apply_right(&w.right, x))
    }

    fn word_mul(&self, u: &ProductWord, v: &ProductWord) -> ProductWord {
        u.mul(v)
    }

    fn identity_word(&self) -> ProductWord {
        ProductWord::identity()
    }
}

/// Two approximations of the same group acting on the product of their
/// domains; point `(x, y)` has index `x * N_2 + y`.
#[derive(Clone, Debug)]
pub struct ProductApprox {
    pub first: AsymptoticHom,
    pub second: AsymptoticHom,
}

impl ProductApprox {
    pub fn new(first: AsymptoticHom, second: AsymptoticHom) -> Result<Self> {
        if first.left_rank() != second.left_rank() || first.right_rank() != second.right_rank() {
            return Err(Error::invalid("factors have different generator counts"));
        }
        if first.domain_size().checked_mul(second.domain_size()).is_none() {
            return Err(Error::Unsupported("product domain does not fit in 128-bit indices".into()));
        }
        Ok(ProductApprox { first, second })
    }

    pub fn split(&self, x: u128) -> (u128, u128) {
        let n2 = self.second.domain_size();
        (x / n2, x % n2)
    }
}

impl Approximation for ProductApprox {
    type Word = ProductWord;

    fn domain_size(&self) -> u128 {
        self.first.domain_size() * self.second.domain_size()
    }

    fn apply(&self, w: &ProductWord, x: u128) -> u128 {
        let (a, b) = self.split(x);
        self.first.apply(w, a) * self.second.domain_size() + self.second.apply(w, b)
    }

    fn word_mul(&self, u: &ProductWord, v: &ProductWord) -> ProductWord {
        u.mul(v)
    }

    fn identity_word(&self) -> ProductWord {
        ProductWord::identity()
    }

    /// Exact mode measures each factor and combines: two product maps agree
    /// at `(x, y)` iff both factors agree, so the agreeing fraction is the
    /// product of the factor fractions.
    fn distance(&self, lhs: &[ProductWord], rhs: &[ProductWord], mode: &HammingMode) -> Result<Estimate> {
        if mode.is_exact() {
            let d1 = self.first.distance(lhs, rhs, mode)?;
            let d2 = self.second.distance(lhs, rhs, mode)?;
            let total = d1.total * d2.total;
            let agree = (d1.total - d1.count) * (d2.total - d2.count);
            return Ok(Estimate::exact(total - agree, total));
        }
        distance_fn(self.domain_size(), |x| apply_seq(self, lhs, x), |x| apply_seq(self, rhs, x), mode)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_hom(n: usize, l: usize, r: usize, seed: u64) -> AsymptoticHom {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        AsymptoticHom::new(
            (0..l).map(|_| PermutationRep::random(n, &mut rng)).collect(),
            (0..r).map(|_| PermutationRep::random(n, &mut rng)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn word_maps_are_homomorphisms_on_each_side() {
        let a = random_hom(200, 2, 2, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let u = ProductWord::left_only(ReducedWord::random(2, 5, &mut rng));
            let v = ProductWord::left_only(ReducedWord::random(2, 5, &mut rng));
            assert_eq!(hom_defect(&a, &u, &v, &HammingMode::Exact).unwrap().count, 0);
            let u = ProductWord::right_only(ReducedWord::random(2, 5, &mut rng));
            let v = ProductWord::right_only(ReducedWord::random(2, 5, &mut rng));
            assert_eq!(hom_defect(&a, &u, &v, &HammingMode::Exact).unwrap().count, 0);
        }
        let e = ProductWord::identity();
        assert_eq!(displacement(&a, &e, &HammingMode::Exact).unwrap().count, 0);
    }

    #[test]
    fn eval_matches_apply() {
        let a = random_hom(100, 2, 1, 3);
        let w = ProductWord::new(ReducedWord::from_powers(&[(0, 2), (1, -1)]), ReducedWord::from_powers(&[(0, -3)]));
        let p = a.eval(&w).unwrap();
        for x in 0..100 {
            assert_eq!(p.apply(x), a.apply(&w, x));
        }
        assert!(a.eval(&ProductWord::left_only(ReducedWord::generator(2))).is_err());
    }

    #[test]
    fn product_distance_matches_direct_count() {
        let f = random_hom(30, 1, 1, 4);
        let g = random_hom(7, 1, 1, 5);
        let pr = ProductApprox::new(f, g).unwrap();
        let u = ProductWord::left_only(ReducedWord::generator(0));
        let v = ProductWord::right_only(ReducedWord::generator(0));
        let fast = commutator_defect(&pr, &u, &v, &HammingMode::Exact).unwrap();
        let slow = distance_fn(
            pr.domain_size(),
            |x| apply_seq(&pr, &[u.clone(), v.clone()], x),
            |x| apply_seq(&pr, &[v.clone(), u.clone()], x),
            &HammingMode::Exact,
        )
        .unwrap();
        assert_eq!(fast, slow);
    }
}
