//! Induction of an approximation of a finite-index subgroup Γ₀ of a free
//! group Γ, given by the action of Γ's generators on the cosets Γ/Γ₀.

use std::collections::VecDeque;

use super::approx::{Approximation, AsymptoticHom};
use crate::error::{Error, Result};
use crate::groups::{Letter, ReducedWord};

/// A transitive left action of a free group on `0..r`; point 0 is the coset Γ₀.
#[derive(Clone, Debug)]
pub struct CosetAction {
    perms: Vec<Vec<u32>>,
    inverses: Vec<Vec<u32>>,
}

impl CosetAction {
    /// `perms[i][x]` is `a_i · x`.
    pub fn new(perms: Vec<Vec<u32>>) -> Result<Self> {
        let r = perms.first().map(|p| p.len()).ok_or_else(|| Error::invalid("no generators"))?;
        if r == 0 {
            return Err(Error::invalid("empty coset set"));
        }
        let mut inverses = Vec::new();
        for p in &perms {
            if p.len() != r {
                return Err(Error::invalid("generator actions have different sizes"));
            }
            let mut inv = vec![u32::MAX; r];
            for (x, &y) in p.iter().enumerate() {
                if y as usize >= r || inv[y as usize] != u32::MAX {
                    return Err(Error::invalid("generator action is not a permutation"));
                }
                inv[y as usize] = x as u32;
            }
            inverses.push(inv);
        }
        let a = CosetAction { perms, inverses };
        if a.spanning_tree().iter().skip(1).any(|e| e.is_none()) {
            return Err(Error::invalid("coset action is not transitive"));
        }
        Ok(a)
    }

    /// The trivial action on one point (Γ₀ = Γ).
    pub fn trivial(rank: usize) -> Self {
        CosetAction::new(vec![vec![0]; rank]).expect("valid")
    }

    pub fn index(&self) -> usize {
        self.perms[0].len()
    }

    pub fn rank(&self) -> usize {
        self.perms.len()
    }

    #[inline]
    pub fn step(&self, l: Letter, x: usize) -> usize {
        if l.inverse {
            self.inverses[l.gen as usize][x] as usize
        } else {
            self.perms[l.gen as usize][x] as usize
        }
    }

    /// `w · x`.
    pub fn act(&self, w: &ReducedWord, x: usize) -> usize {
        w.letters().iter().rev().fold(x, |x, &l| self.step(l, x))
    }

    /// Breadth-first tree from 0: for each point, the letter and predecessor
    /// it was reached by.
    fn spanning_tree(&self) -> Vec<Option<(Letter, usize)>> {
        let r = self.index();
        let mut tree: Vec<Option<(Letter, usize)>> = vec![None; r];
        let mut seen = vec![false; r];
        seen[0] = true;
        let mut queue = VecDeque::from([0usize]);
        while let Some(x) = queue.pop_front() {
            for g in 0..self.rank() as u16 {
                for l in [Letter::new(g), Letter::inv(g)] {
                    let y = self.step(l, x);
                    if !seen[y] {
                        seen[y] = true;
                        tree[y] = Some((l, x));
                        queue.push_back(y);
                    }
                }
            }
        }
        tree
    }
}

/// A Schreier transversal of Γ₀, the resulting free basis of Γ₀ and a
/// section of Γ → Γ/Γ₀ used for the cocycle.
#[derive(Clone, Debug)]
pub struct SchreierData {
    action: CosetAction,
    transversal: Vec<ReducedWord>,
    /// `edge_gen[x][i]`: basis index of `t(a_i x)^-1 a_i t(x)`, or `None` on
    /// tree edges where that element is trivial.
    edge_gen: Vec<Vec<Option<u16>>>,
    basis: Vec<ReducedWord>,
    section: Vec<ReducedWord>,
    section_is_transversal: bool,
}

impl SchreierData {
    pub fn new(action: CosetAction) -> Result<Self> {
        let r = action.index();
        let tree = action.spanning_tree();
        let mut transversal = vec![ReducedWord::identity(); r];
        let mut tree_edge = vec![vec![false; action.rank()]; r];
        // BFS order guarantees predecessors are filled first
        let mut order: Vec<usize> = (1..r).collect();
        let mut depth = vec![0usize; r];
        for &y in &order.clone() {
            let mut d = 0;
            let mut z = y;
            while let Some((_, prev)) = tree[z] {
                d += 1;
                z = prev;
            }
            depth[y] = d;
        }
        order.sort_by_key(|&y| (depth[y], y));
        for y in order {
            let (l, x) = tree[y].expect("transitive");
            transversal[y] = ReducedWord::new(std::iter::once(l).chain(transversal[x].letters().iter().copied()));
            if l.inverse {
                tree_edge[y][l.gen as usize] = true;
            } else {
                tree_edge[x][l.gen as usize] = true;
            }
        }
        let mut edge_gen = vec![vec![None; action.rank()]; r];
        let mut basis = Vec::new();
        for x in 0..r {
            for i in 0..action.rank() {
                if tree_edge[x][i] {
                    continue;
                }
                let a = Letter::new(i as u16);
                let y = action.step(a, x);
                let w = transversal[y].inverse().mul(&ReducedWord::new([a])).mul(&transversal[x]);
                if basis.len() >= u16::MAX as usize {
                    return Err(Error::Unsupported("subgroup rank exceeds 65535".into()));
                }
                edge_gen[x][i] = Some(basis.len() as u16);
                basis.push(w);
            }
        }
        let section = transversal.clone();
        Ok(SchreierData { action, transversal, edge_gen, basis, section, section_is_transversal: true })
    }

    /// Uses `section` for the cocycle; it must satisfy s(0) = e and s(x)·0 = x.
    pub fn with_section(action: CosetAction, section: Vec<ReducedWord>) -> Result<Self> {
        let mut d = SchreierData::new(action)?;
        if section.len() != d.action.index() {
            return Err(Error::invalid("section must have one word per coset"));
        }
        if !section[0].is_identity() {
            return Err(Error::invalid("invalid section: s(Γ₀) must be the identity"));
        }
        for (x, s) in section.iter().enumerate() {
            if d.action.act(s, 0) != x {
                return Err(Error::invalid(format!("invalid section: s({x}) does not lie in coset {x}")));
            }
        }
        d.section_is_transversal = section == d.transversal;
        d.section = section;
        Ok(d)
    }

    pub fn action(&self) -> &CosetAction {
        &self.action
    }

    pub fn transversal(&self) -> &[ReducedWord] {
        &self.transversal
    }

    /// Free basis of Γ₀ as words in Γ; its size is (n − 1)r + 1.
    pub fn basis(&self) -> &[ReducedWord] {
        &self.basis
    }

    pub fn subgroup_rank(&self) -> usize {
        self.basis.len()
    }

    /// Rewrites `t(w x)^-1 w t(x)` in the basis of Γ₀.
    fn rewrite_from(&self, w: &ReducedWord, x: usize) -> ReducedWord {
        let mut cur = x;
        let mut out = Vec::with_capacity(w.len());
        for &l in w.letters().iter().rev() {
            if l.inverse {
                let y = self.action.step(l, cur);
                if let Some(b) = self.edge_gen[y][l.gen as usize] {
                    out.push(Letter::inv(b));
                }
                cur = y;
            } else {
                if let Some(b) = self.edge_gen[cur][l.gen as usize] {
                    out.push(Letter::new(b));
                }
                cur = self.action.step(l, cur);
            }
        }
        out.reverse();
        ReducedWord::new(out)
    }

    /// `gamma` in the basis of Γ₀.
    pub fn rewrite(&self, gamma: &ReducedWord) -> Result<ReducedWord> {
        if self.action.act(gamma, 0) != 0 {
            return Err(Error::invalid("word does not lie in the subgroup; cannot rewrite"));
        }
        Ok(self.rewrite_from(gamma, 0))
    }

    /// c(g, x) = s(gx)^-1 g s(x) in the basis of Γ₀.
    pub fn cocycle(&self, g: &ReducedWord, x: usize) -> ReducedWord {
        if self.section_is_transversal {
            return self.rewrite_from(g, x);
        }
        let gx = self.action.act(g, x);
        let w = self.section[gx].inverse().mul(g).mul(&self.section[x]);
        self.rewrite_from(&w, 0)
    }

    /// A basis word of Γ₀ back in Γ.
    pub fn expand(&self, w: &ReducedWord) -> ReducedWord {
        let mut acc = ReducedWord::identity();
        for l in w.letters() {
            let b = &self.basis[l.gen as usize];
            acc = acc.mul(&if l.inverse { b.inverse() } else { b.clone() });
        }
        acc
    }
}

/// Ind(σ)(g)(x, ξ) = (g x, σ(c(g, x)) ξ) on Γ/Γ₀ × X, with `(x, ξ)` at index
/// `x |X| + ξ`.
#[derive(Clone, Debug)]
pub struct Induced {
    pub data: SchreierData,
    /// An approximation of Γ₀ on its left generators (the Schreier basis).
    pub sigma: AsymptoticHom,
}

pub fn induce_approximation(sigma: AsymptoticHom, data: SchreierData) -> Result<Induced> {
    if sigma.left_rank() != data.subgroup_rank() {
        return Err(Error::invalid(format!("σ has {} generators but the subgroup has rank {}", sigma.left_rank(), data.subgroup_rank())));
    }
    Ok(Induced { data, sigma })
}

impl Induced {
    pub fn fiber_size(&self) -> u128 {
        self.sigma.domain_size()
    }
}

impl Approximation for Induced {
    type Word = ReducedWord;

    fn domain_size(&self) -> u128 {
        self.data.action.index() as u128 * self.fiber_size()
    }

    fn apply(&self, g: &ReducedWord, idx: u128) -> u128 {
        let n = self.fiber_size();
        let (x, xi) = ((idx / n) as usize, idx % n);
        let c = self.data.cocycle(g, x);
        self.data.action.act(g, x) as u128 * n + self.sigma.apply_left(&c, xi)
    }

    fn word_mul(&self, u: &ReducedWord, v: &ReducedWord) -> ReducedWord {
        u.mul(v)
    }

    fn identity_word(&self) -> ReducedWord {
        ReducedWord::identity()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sofic::approx::hom_defect;
    use crate::sofic::hamming::HammingMode;
    use crate::sofic::perm::PermutationRep;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn index_four() -> CosetAction {
        CosetAction::new(vec![vec![1, 2, 3, 0], vec![1, 0, 2, 3]]).unwrap()
    }

    #[test]
    fn rank_follows_schreier_formula() {
        let d = SchreierData::new(index_four()).unwrap();
        assert_eq!(d.subgroup_rank(), 5);
        for b in d.basis() {
            assert_eq!(d.action().act(b, 0), 0);
            assert!(!b.is_identity());
        }
        for (x, t) in d.transversal().iter().enumerate() {
            assert_eq!(d.action().act(t, 0), x);
        }
    }

    #[test]
    fn rewriting_round_trips() {
        let d = SchreierData::new(index_four()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..500 {
            let w = ReducedWord::random(2, rng.gen_range(0..12), &mut rng);
            if d.action().act(&w, 0) == 0 {
                assert_eq!(d.expand(&d.rewrite(&w).unwrap()), w);
            } else {
                assert!(d.rewrite(&w).is_err());
            }
        }
    }

    #[test]
    fn cocycle_identity_with_custom_section() {
        let a = index_four();
        let base = SchreierData::new(a.clone()).unwrap();
        // shift each transversal word by an element of the subgroup
        let section: Vec<ReducedWord> =
            base.transversal().iter().enumerate().map(|(x, t)| if x == 0 { t.clone() } else { t.mul(&base.basis()[x % 5]) }).collect();
        let d = SchreierData::with_section(a.clone(), section).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..300 {
            let g = ReducedWord::random(2, rng.gen_range(0..8), &mut rng);
            let h = ReducedWord::random(2, rng.gen_range(0..8), &mut rng);
            let x = rng.gen_range(0..4);
            let lhs = d.cocycle(&g.mul(&h), x);
            let rhs = d.cocycle(&g, a.act(&h, x)).mul(&d.cocycle(&h, x));
            assert_eq!(lhs, rhs);
        }
        assert!(SchreierData::with_section(a.clone(), vec![ReducedWord::identity(); 4]).is_err());
    }

    #[test]
    fn rejects_intransitive_action() {
        assert!(CosetAction::new(vec![vec![1, 0, 3, 2], vec![0, 1, 2, 3]]).is_err());
    }

    #[test]
    fn induced_homomorphism_has_no_defect() {
        let d = SchreierData::new(index_four()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let gens = (0..5).map(|_| PermutationRep::random(30, &mut rng)).collect();
        let sigma = AsymptoticHom::new(gens, vec![]).unwrap();
        let ind = induce_approximation(sigma, d).unwrap();
        for _ in 0..20 {
            let g = ReducedWord::random(2, rng.gen_range(0..6), &mut rng);
            let h = ReducedWord::random(2, rng.gen_range(0..6), &mut rng);
            assert_eq!(hom_defect(&ind, &g, &h, &HammingMode::Exact).unwrap().count, 0);
        }
    }
}
