//! The groups G_p = A_p ⋊ PSL2(F_p) and G̃_p = G_p × PSL2(F_r), words in free
//! groups, and the homomorphisms from free groups used by the construction.

pub mod finite;
pub mod homs;
pub mod words;

use std::collections::{HashMap, HashSet};
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::algebra::{is_prime, PSL2Element, Psl2Entries, Psl2Group};
use crate::error::{Error, Result};
use crate::f3vectors::{ap_index_unchecked, ap_unindex, coordinate_permutation, permute_coords, ApVector};

pub use finite::FiniteGroup;
pub use homs::*;
pub use words::*;

/// An element `(a, h)` of G_p; the product is `(a,h)(a',h') = (a + h.a', hh')`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GpElement {
    pub a: ApVector,
    pub h: PSL2Element,
}

impl GpElement {
    pub fn identity(p: u32) -> Self {
        GpElement { a: ApVector::zero(p), h: PSL2Element::identity(p) }
    }

    pub fn p(&self) -> u32 {
        self.a.p()
    }

    pub fn from_a(a: ApVector) -> Self {
        GpElement { a, h: PSL2Element::identity(a.p()) }
    }

    pub fn from_h(h: PSL2Element) -> Self {
        GpElement { a: ApVector::zero(h.modulus()), h }
    }

    pub fn is_identity(&self) -> bool {
        self.a.is_zero() && self.h.is_identity()
    }

    /// Semidirect product without a cached context.
    pub fn mul(&self, o: &GpElement) -> GpElement {
        GpElement { a: self.a.add(&permute_coords(&coordinate_permutation(&self.h), &o.a)), h: self.h.mul_unchecked(&o.h) }
    }

    pub fn try_mul(&self, o: &GpElement) -> Result<GpElement> {
        if self.p() != o.p() {
            return Err(Error::ModulusMismatch { left: self.p() as u64, right: o.p() as u64 });
        }
        Ok(self.mul(o))
    }

    /// `(a,h)^-1 = (-h^-1.a, h^-1)`.
    pub fn inv(&self) -> GpElement {
        let hi = self.h.inv();
        GpElement { a: permute_coords(&coordinate_permutation(&hi), &self.a).neg(), h: hi }
    }
}

/// An element `(g, k)` of G̃_p = G_p × K_p.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GtildeElement {
    pub g: GpElement,
    pub k: PSL2Element,
}

impl GtildeElement {
    pub fn identity(p: u32, r: u32) -> Self {
        GtildeElement { g: GpElement::identity(p), k: PSL2Element::identity(r) }
    }

    pub fn mul(&self, o: &GtildeElement) -> GtildeElement {
        GtildeElement { g: self.g.mul(&o.g), k: self.k.mul_unchecked(&o.k) }
    }

    pub fn inv(&self) -> GtildeElement {
        GtildeElement { g: self.g.inv(), k: self.k.inv() }
    }

    pub fn is_identity(&self) -> bool {
        self.g.is_identity() && self.k.is_identity()
    }
}

/// Cached data for G_p: the enumeration of H_p and the slot permutation of
/// every element. Global index of `(a, h)` is `ap_index(a) * |H_p| + index(h)`.
pub struct GpContext {
    p: u32,
    h: Psl2Group,
    coord_perms: Vec<Vec<u8>>,
    a_order: u64,
}

impl std::fmt::Debug for GpContext {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "GpContext(p = {})", self.p)
    }
}

impl GpContext {
    pub fn new(p: u32) -> Result<Self> {
        if !is_prime(p as u64) || p % 3 != 1 {
            return Err(Error::invalid(format!("p = {p} is not a prime that is 1 mod 3")));
        }
        if p > crate::f3vectors::MAX_INDEXED_P {
            return Err(Error::Unsupported(format!("p = {p} exceeds the indexable range")));
        }
        let h = Psl2Group::enumerate(p)?;
        let coord_perms = h.elements().iter().map(coordinate_permutation).collect();
        Ok(GpContext { p, h, coord_perms, a_order: 3u64.pow(p) })
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn h_group(&self) -> &Psl2Group {
        &self.h
    }

    pub fn a_order(&self) -> u64 {
        self.a_order
    }

    pub fn h_order(&self) -> u64 {
        self.h.order() as u64
    }

    /// |G_p| = 3^p |H_p|.
    pub fn order(&self) -> u128 {
        self.a_order as u128 * self.h_order() as u128
    }

    pub fn coord_perm(&self, h: &PSL2Element) -> &[u8] {
        &self.coord_perms[self.h.index_of(h)]
    }

    pub fn coord_perm_by_index(&self, hi: usize) -> &[u8] {
        &self.coord_perms[hi]
    }

    #[inline]
    pub fn act(&self, h: &PSL2Element, a: &ApVector) -> ApVector {
        permute_coords(self.coord_perm(h), a)
    }

    #[inline]
    pub fn mul(&self, x: &GpElement, y: &GpElement) -> GpElement {
        GpElement { a: x.a.add(&self.act(&x.h, &y.a)), h: x.h.mul_unchecked(&y.h) }
    }

    pub fn inv(&self, x: &GpElement) -> GpElement {
        let hi = x.h.inv();
        GpElement { a: self.act(&hi, &x.a).neg(), h: hi }
    }

    #[inline]
    pub fn index(&self, x: &GpElement) -> u64 {
        ap_index_unchecked(&x.a) * self.h_order() + self.h.index_of(&x.h) as u64
    }

    pub fn element(&self, i: u64) -> Result<GpElement> {
        if i as u128 >= self.order() {
            return Err(Error::OutOfRange { index: i, bound: self.order().min(u64::MAX as u128) as u64 });
        }
        let a = ap_unindex(i / self.h_order(), self.p)?;
        Ok(GpElement { a, h: self.h.element((i % self.h_order()) as usize) })
    }

    /// Global index as a 128-bit integer (valid for every supported p).
    #[inline]
    pub fn encode(&self, x: &GpElement) -> u128 {
        ap_index_unchecked(&x.a) as u128 * self.h_order() as u128 + self.h.index_of(&x.h) as u128
    }

    /// Inverse of [`GpContext::encode`]; `i` must be below the group order.
    #[inline]
    pub fn decode(&self, i: u128) -> GpElement {
        let nh = self.h_order() as u128;
        let a = ap_unindex((i / nh) as u64, self.p).expect("index below group order");
        GpElement { a, h: self.h.element((i % nh) as usize) }
    }

    pub fn random<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> GpElement {
        GpElement { a: ApVector::random(self.p, rng), h: self.h.element(rng.gen_range(0..self.h.order())) }
    }
}

/// Dense index tables for G_p when the whole group fits in memory (p = 7).
pub struct GpTables {
    pub ctx: GpContext,
    a_vecs: Vec<ApVector>,
    h_mul: Vec<u32>,
    h_inv: Vec<u32>,
    act: Vec<u32>,
}

/// Largest |G_p| for which dense tables are built.
pub const DENSE_GP_LIMIT: u64 = 1 << 22;

impl GpTables {
    pub fn new(p: u32) -> Result<Self> {
        let ctx = GpContext::new(p)?;
        if ctx.order() > DENSE_GP_LIMIT as u128 {
            return Err(Error::Resource(format!(
                "|G_{p}| = {} exceeds the dense-table limit {DENSE_GP_LIMIT}; use sampled mode",
                ctx.order()
            )));
        }
        let na = ctx.a_order() as usize;
        let nh = ctx.h_order() as usize;
        let a_vecs: Vec<ApVector> = (0..na as u64).map(|i| ap_unindex(i, p)).collect::<Result<_>>()?;
        let mut h_mul = vec![0u32; nh * nh];
        for i in 0..nh {
            let x = ctx.h.element(i);
            for j in 0..nh {
                h_mul[i * nh + j] = ctx.h.index_of(&x.mul_unchecked(&ctx.h.element(j))) as u32;
            }
        }
        let h_inv = (0..nh).map(|i| ctx.h.index_of(&ctx.h.element(i).inv()) as u32).collect();
        let mut act = vec![0u32; nh * na];
        for hi in 0..nh {
            let perm = ctx.coord_perm_by_index(hi);
            for (ai, a) in a_vecs.iter().enumerate() {
                act[hi * na + ai] = ap_index_unchecked(&permute_coords(perm, a)) as u32;
            }
        }
        Ok(GpTables { ctx, a_vecs, h_mul, h_inv, act })
    }

    pub fn order(&self) -> usize {
        self.a_vecs.len() * self.h_inv.len()
    }

    pub fn a_order(&self) -> usize {
        self.a_vecs.len()
    }

    pub fn h_order(&self) -> usize {
        self.h_inv.len()
    }

    pub fn a_vec(&self, ai: usize) -> &ApVector {
        &self.a_vecs[ai]
    }

    #[inline]
    pub fn split(&self, x: usize) -> (usize, usize) {
        (x / self.h_order(), x % self.h_order())
    }

    #[inline]
    pub fn join(&self, ai: usize, hi: usize) -> usize {
        ai * self.h_order() + hi
    }

    #[inline]
    pub fn act_index(&self, hi: usize, ai: usize) -> usize {
        self.act[hi * self.a_order() + ai] as usize
    }

    #[inline]
    pub fn add_index(&self, ai: usize, bi: usize) -> usize {
        ap_index_unchecked(&self.a_vecs[ai].add(&self.a_vecs[bi])) as usize
    }

    #[inline]
    pub fn h_mul_index(&self, hi: usize, hj: usize) -> usize {
        self.h_mul[hi * self.h_order() + hj] as usize
    }

    pub fn h_inv_index(&self, hi: usize) -> usize {
        self.h_inv[hi] as usize
    }

    /// Product of two elements given by global index.
    #[inline]
    pub fn mul_index(&self, x: usize, y: usize) -> usize {
        let (ax, hx) = self.split(x);
        let (ay, hy) = self.split(y);
        self.join(self.add_index(ax, self.act_index(hx, ay)), self.h_mul_index(hx, hy))
    }

    pub fn index_of(&self, x: &GpElement) -> usize {
        self.ctx.index(x) as usize
    }

    pub fn element(&self, i: usize) -> GpElement {
        let (ai, hi) = self.split(i);
        GpElement { a: self.a_vecs[ai], h: self.ctx.h.element(hi) }
    }

    /// Table of `x -> g x` over all of G_p.
    pub fn left_mul_table(&self, g: &GpElement) -> Vec<u32> {
        let gi = self.index_of(g);
        (0..self.order()).map(|x| self.mul_index(gi, x) as u32).collect()
    }

    /// Table of `x -> x g` over all of G_p.
    pub fn right_mul_table(&self, g: &GpElement) -> Vec<u32> {
        let gi = self.index_of(g);
        (0..self.order()).map(|x| self.mul_index(x, gi) as u32).collect()
    }
}

/// Order of the subgroup generated by `gens`, by breadth-first closure under
/// right multiplication. Stops early once `order_bound` elements are found and
/// fails once more than `budget` elements are stored.
pub fn bfs_closure_order<E, F>(gens: &[E], identity: E, mul: F, order_bound: Option<u64>, budget: u64) -> Result<u64>
where
    E: Clone + Eq + Hash,
    F: Fn(&E, &E) -> E,
{
    let mut seen: HashSet<E> = HashSet::new();
    seen.insert(identity.clone());
    let mut frontier = vec![identity];
    while !frontier.is_empty() {
        if order_bound.is_some_and(|b| seen.len() as u64 >= b) {
            break;
        }
        let mut next = Vec::new();
        for x in &frontier {
            for g in gens {
                let y = mul(x, g);
                if !seen.contains(&y) {
                    if seen.len() as u64 >= budget {
                        return Err(Error::Resource(format!("subgroup closure exceeded budget of {budget} elements")));
                    }
                    seen.insert(y.clone());
                    next.push(y);
                }
            }
        }
        frontier = next;
    }
    Ok(seen.len() as u64)
}

/// Breadth-first closure keyed by a quotient map, keeping one representative
/// per quotient element (a Schreier transversal).
pub(crate) fn schreier_transversal<E, K, F, Q>(gens: &[E], identity: E, mul: F, key: Q, budget: u64) -> Result<HashMap<K, E>>
where
    E: Clone,
    K: Clone + Eq + Hash,
    F: Fn(&E, &E) -> E,
    Q: Fn(&E) -> K,
{
    let mut reps: HashMap<K, E> = HashMap::new();
    reps.insert(key(&identity), identity.clone());
    let mut frontier = vec![identity];
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for x in &frontier {
            for g in gens {
                let y = mul(x, g);
                let k = key(&y);
                if !reps.contains_key(&k) {
                    if reps.len() as u64 >= budget {
                        return Err(Error::Resource(format!("transversal exceeded budget of {budget} elements")));
                    }
                    reps.insert(k, y.clone());
                    next.push(y);
                }
            }
        }
        frontier = next;
    }
    Ok(reps)
}

/// Canonical integer form of a G_p element for serialized documents.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GpEntries {
    pub a: Vec<u8>,
    pub h: Psl2Entries,
}

impl From<&GpElement> for GpEntries {
    fn from(x: &GpElement) -> Self {
        GpEntries { a: x.a.coords(), h: (&x.h).into() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::f3vectors::h_act;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn subgroup_embeddings_multiply_to_pair() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ctx = GpContext::new(7).unwrap();
        let x = ctx.random(&mut rng);
        let lhs = GpElement::from_a(x.a).mul(&GpElement::from_h(x.h));
        assert_eq!(lhs, x);
    }

    #[test]
    fn inverses_and_associativity() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ctx = GpContext::new(7).unwrap();
        for _ in 0..10_000 {
            let x = ctx.random(&mut rng);
            assert!(ctx.mul(&x, &ctx.inv(&x)).is_identity());
            assert!(x.inv().mul(&x).is_identity());
        }
        for _ in 0..2_000 {
            let (x, y, z) = (ctx.random(&mut rng), ctx.random(&mut rng), ctx.random(&mut rng));
            assert_eq!(ctx.mul(&ctx.mul(&x, &y), &z), ctx.mul(&x, &ctx.mul(&y, &z)));
            assert_eq!(ctx.mul(&x, &y), x.mul(&y));
        }
    }

    #[test]
    fn conjugation_realises_the_action() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ctx = GpContext::new(7).unwrap();
        for _ in 0..500 {
            let x = ctx.random(&mut rng);
            let h = GpElement::from_h(x.h);
            let a = GpElement::from_a(x.a);
            let conj = h.mul(&a).mul(&h.inv());
            assert_eq!(conj, GpElement::from_a(h_act(&x.h, &x.a).unwrap()));
        }
    }

    #[test]
    fn gtilde_axioms() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let ctx = GpContext::new(7).unwrap();
        let k = Psl2Group::enumerate(11).unwrap();
        let rand_el = |rng: &mut ChaCha8Rng| GtildeElement { g: ctx.random(rng), k: k.element(rand::Rng::gen_range(rng, 0..k.order())) };
        for _ in 0..2_000 {
            let (x, y, z) = (rand_el(&mut rng), rand_el(&mut rng), rand_el(&mut rng));
            assert!(x.mul(&x.inv()).is_identity());
            assert_eq!(x.mul(&y).mul(&z), x.mul(&y.mul(&z)));
        }
    }

    #[test]
    fn dense_tables_agree_with_context() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let t = GpTables::new(7).unwrap();
        assert_eq!(t.order(), 367_416);
        for _ in 0..2_000 {
            let x = t.ctx.random(&mut rng);
            let y = t.ctx.random(&mut rng);
            let xi = t.index_of(&x);
            assert_eq!(t.element(xi), x);
            assert_eq!(t.mul_index(xi, t.index_of(&y)), t.index_of(&t.ctx.mul(&x, &y)));
        }
    }

    #[test]
    fn trivial_closure() {
        let n = bfs_closure_order(&[PSL2Element::identity(7)], PSL2Element::identity(7), |a, b| a.mul_unchecked(b), None, 10).unwrap();
        assert_eq!(n, 1);
    }

    #[test]
    fn closure_budget_is_enforced() {
        let g = [PSL2Element::new(1, 1, 0, 1, 7).unwrap(), PSL2Element::new(0, -1, 1, 0, 7).unwrap()];
        let r = bfs_closure_order(&g, PSL2Element::identity(7), |a, b| a.mul_unchecked(b), None, 50);
        assert!(matches!(r, Err(Error::Resource(_))));
        let full = bfs_closure_order(&g, PSL2Element::identity(7), |a, b| a.mul_unchecked(b), None, 1000).unwrap();
        assert_eq!(full, 168);
    }

    #[test]
    fn gp_context_rejects_bad_p() {
        assert!(GpContext::new(11).is_err());
        assert!(GpContext::new(4).is_err());
    }
}
