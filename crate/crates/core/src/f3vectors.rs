//! The zero-sum module A_p inside F_3^{p+1}, its PSL2(F_p) permutation action,
//! the set S_p and exact counting over it.
//!
//! Coordinates are indexed by slots `0..=p`: slot `j < p` is the residue `j`
//! of P1(F_p) and slot `p` is the point at infinity.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;

use crate::algebra::{moebius_slot, PSL2Element};
use crate::error::{Error, Result};

/// Largest p for which A_p indices fit in a `u64`.
pub const MAX_INDEXED_P: u32 = 40;
const MAX_COORDS: u32 = 64;

/// An element of A_p, packed at two bits per coordinate (the redundant last
/// coordinate included).
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub struct ApVector {
    packed: u128,
    p: u32,
}

/// Counts of coordinates equal to 0, 1 and 2.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Hash)]
pub struct TypeCount {
    pub n0: u32,
    pub n1: u32,
    pub n2: u32,
}

impl TypeCount {
    pub fn total(&self) -> u32 {
        self.n0 + self.n1 + self.n2
    }

    /// Whether vectors with these counts have zero coordinate sum.
    pub fn is_zero_sum(&self) -> bool {
        (self.n1 + 2 * self.n2).is_multiple_of(3)
    }

    /// Membership criterion for S_p: `n1 > n0 + 2` and `n1 > n2 + 2`.
    pub fn in_sp(&self) -> bool {
        self.n1 > self.n0 + 2 && self.n1 > self.n2 + 2
    }

    fn get(&self, v: u32) -> u32 {
        match v % 3 {
            0 => self.n0,
            1 => self.n1,
            _ => self.n2,
        }
    }

    fn add(&self, o: &TypeCount) -> TypeCount {
        TypeCount { n0: self.n0 + o.n0, n1: self.n1 + o.n1, n2: self.n2 + o.n2 }
    }
}

fn check_p(p: u32) -> Result<()> {
    if p + 1 > MAX_COORDS {
        return Err(Error::invalid(format!("p = {p} exceeds the packed width ({} coordinates)", MAX_COORDS)));
    }
    if p < 2 {
        return Err(Error::invalid(format!("p = {p} is too small")));
    }
    Ok(())
}

impl ApVector {
    pub fn zero(p: u32) -> Self {
        ApVector { packed: 0, p }
    }

    /// Builds a vector from `p + 1` coordinates (taken mod 3); the sum must vanish.
    pub fn from_coords(coords: &[i64], p: u32) -> Result<Self> {
        check_p(p)?;
        if coords.len() != p as usize + 1 {
            return Err(Error::invalid(format!("expected {} coordinates, got {}", p + 1, coords.len())));
        }
        let mut packed = 0u128;
        let mut sum = 0;
        for (i, &c) in coords.iter().enumerate() {
            let v = c.rem_euclid(3) as u128;
            sum += v;
            packed |= v << (2 * i);
        }
        if sum % 3 != 0 {
            return Err(Error::invalid("coordinates do not sum to 0 mod 3"));
        }
        Ok(ApVector { packed, p })
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn len(&self) -> usize {
        self.p as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn coord(&self, i: usize) -> u8 {
        ((self.packed >> (2 * i)) & 3) as u8
    }

    pub fn coords(&self) -> Vec<u8> {
        (0..self.len()).map(|i| self.coord(i)).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.packed == 0
    }

    pub fn support_len(&self) -> usize {
        (0..self.len()).filter(|&i| self.coord(i) != 0).count()
    }

    #[inline]
    fn map2(&self, o: &ApVector, f: impl Fn(u8, u8) -> u8) -> ApVector {
        debug_assert_eq!(self.p, o.p);
        let mut packed = 0u128;
        for i in 0..self.len() {
            packed |= (f(self.coord(i), o.coord(i)) as u128) << (2 * i);
        }
        ApVector { packed, p: self.p }
    }

    pub fn try_add(&self, o: &ApVector) -> Result<ApVector> {
        if self.p != o.p {
            return Err(Error::ModulusMismatch { left: self.p as u64, right: o.p as u64 });
        }
        Ok(self.add(o))
    }

    #[inline]
    pub fn add(&self, o: &ApVector) -> ApVector {
        self.map2(o, |a, b| (a + b) % 3)
    }

    #[inline]
    pub fn sub(&self, o: &ApVector) -> ApVector {
        self.map2(o, |a, b| (a + 3 - b) % 3)
    }

    pub fn neg(&self) -> ApVector {
        ApVector::zero(self.p).sub(self)
    }

    pub fn type_count(&self) -> TypeCount {
        let mut t = TypeCount { n0: 0, n1: 0, n2: 0 };
        for i in 0..self.len() {
            match self.coord(i) {
                0 => t.n0 += 1,
                1 => t.n1 += 1,
                _ => t.n2 += 1,
            }
        }
        t
    }

    /// v(p) = (1, -1, 0, ..., 0).
    pub fn v(p: u32) -> Result<Self> {
        let mut c = vec![0i64; p as usize + 1];
        c[0] = 1;
        c[1] = -1;
        Self::from_coords(&c, p)
    }

    /// Default choice of v1(p); equal to v(p).
    pub fn v1(p: u32) -> Result<Self> {
        Self::v(p)
    }

    /// Default choice of v2(p) = (1, 1, 1, 0, ..., 0, -1, -1, -1).
    pub fn v2(p: u32) -> Result<Self> {
        if p < 5 {
            return Err(Error::invalid("v2(p) needs at least 6 coordinates"));
        }
        let n = p as usize + 1;
        let mut c = vec![0i64; n];
        c[..3].fill(1);
        c[n - 3..].fill(-1);
        Self::from_coords(&c, p)
    }

    /// a_p = (0, 0, 1, ..., 1); zero-sum exactly when p = 1 mod 3.
    pub fn a_p(p: u32) -> Result<Self> {
        let mut c = vec![1i64; p as usize + 1];
        c[0] = 0;
        c[1] = 0;
        Self::from_coords(&c, p)
    }

    pub fn random<R: Rng + ?Sized>(p: u32, rng: &mut R) -> Self {
        let mut packed = 0u128;
        let mut sum = 0u32;
        for i in 0..p as usize {
            let v: u32 = rng.gen_range(0..3);
            sum += v;
            packed |= (v as u128) << (2 * i);
        }
        let last = (3 - sum % 3) % 3;
        packed |= (last as u128) << (2 * p as usize);
        ApVector { packed, p }
    }
}

/// Bijection A_p -> [0, 3^p): base-3 digits of the first p coordinates.
pub fn ap_index(x: &ApVector) -> Result<u64> {
    if x.p > MAX_INDEXED_P {
        return Err(Error::Unsupported(format!("A_p index does not fit in u64 for p = {}", x.p)));
    }
    Ok(ap_index_unchecked(x))
}

#[inline]
pub(crate) fn ap_index_unchecked(x: &ApVector) -> u64 {
    let mut idx = 0u64;
    for i in (0..x.p as usize).rev() {
        idx = idx * 3 + x.coord(i) as u64;
    }
    idx
}

pub fn ap_unindex(mut i: u64, p: u32) -> Result<ApVector> {
    check_p(p)?;
    if p > MAX_INDEXED_P {
        return Err(Error::Unsupported(format!("A_p index does not fit in u64 for p = {p}")));
    }
    let bound = 3u64.pow(p);
    if i >= bound {
        return Err(Error::OutOfRange { index: i, bound });
    }
    let mut packed = 0u128;
    let mut sum = 0u64;
    for k in 0..p as usize {
        let d = i % 3;
        i /= 3;
        sum += d;
        packed |= (d as u128) << (2 * k);
    }
    packed |= (((3 - sum % 3) % 3) as u128) << (2 * p as usize);
    Ok(ApVector { packed, p })
}

/// Slot permutation of `h`: `perm[j]` is the slot of `h . j`.
pub fn coordinate_permutation(h: &PSL2Element) -> Vec<u8> {
    let q = h.modulus() as usize;
    (0..=q).map(|j| moebius_slot(h, j) as u8).collect()
}

/// Applies a slot permutation: output coordinate `perm[j]` receives `x_j`,
/// so that `(h.x)_i = x_{h^-1 . i}`.
#[inline]
pub fn permute_coords(perm: &[u8], x: &ApVector) -> ApVector {
    let mut packed = 0u128;
    for (j, &t) in perm.iter().enumerate() {
        packed |= (x.coord(j) as u128) << (2 * t as usize);
    }
    ApVector { packed, p: x.p }
}

pub fn h_act(h: &PSL2Element, x: &ApVector) -> Result<ApVector> {
    if h.modulus() != x.p {
        return Err(Error::ModulusMismatch { left: h.modulus() as u64, right: x.p as u64 });
    }
    Ok(permute_coords(&coordinate_permutation(h), x))
}

pub fn sp_membership(x: &ApVector) -> bool {
    x.type_count().in_sp()
}

fn require_one_mod_three(p: u32) -> Result<()> {
    if p % 3 != 1 {
        return Err(Error::invalid(format!("p = {p} is not 1 mod 3")));
    }
    Ok(())
}

/// Factorials 0!..=n! as big integers.
struct Factorials(Vec<BigUint>);

impl Factorials {
    fn new(n: u32) -> Self {
        let mut f = vec![BigUint::one()];
        for i in 1..=n {
            let next = &f[i as usize - 1] * BigUint::from(i);
            f.push(next);
        }
        Factorials(f)
    }

    fn multinomial(&self, t: &TypeCount) -> BigUint {
        &self.0[t.total() as usize] / (&self.0[t.n0 as usize] * &self.0[t.n1 as usize] * &self.0[t.n2 as usize])
    }
}

fn triples(n: u32) -> impl Iterator<Item = TypeCount> {
    (0..=n).flat_map(move |n0| (0..=n - n0).map(move |n1| TypeCount { n0, n1, n2: n - n0 - n1 }))
}

/// |S_p| as a sum of multinomials over admissible type counts.
pub fn sp_count_exact(p: u32) -> Result<BigUint> {
    require_one_mod_three(p)?;
    let f = Factorials::new(p + 1);
    Ok(triples(p + 1).filter(|t| t.is_zero_sum() && t.in_sp()).map(|t| f.multinomial(&t)).sum())
}

/// |A_p| = 3^p.
pub fn ap_order(p: u32) -> BigUint {
    BigUint::from(3u32).pow(p)
}

/// Exact counts for the pair (S_p, w + S_p).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShiftCounts {
    pub sp: BigUint,
    pub shifted: BigUint,
    pub both: BigUint,
}

impl ShiftCounts {
    /// |S_p △ (w + S_p)|.
    pub fn symmetric_difference(&self) -> BigUint {
        &self.sp + &self.shifted - &self.both - &self.both
    }

    /// |S_p \ (w + S_p)|.
    pub fn difference(&self) -> BigUint {
        &self.sp - &self.both
    }
}

/// Exact counts of S_p, w + S_p and their intersection.
///
/// Coordinates are grouped by the value of `w`; within each group only the
/// type count of `y` matters, so the sum runs over one type count per group
/// weighted by a product of multinomials.
pub fn sp_shift_counts(w: &ApVector) -> Result<ShiftCounts> {
    let p = w.p;
    require_one_mod_three(p)?;
    let sizes = w.type_count();
    let binom = binomials(p + 1);
    let multi = |t: &TypeCount| binom[t.total() as usize][t.n0 as usize] * binom[(t.n1 + t.n2) as usize][t.n1 as usize];
    let weighted = |n: u32| -> Vec<(TypeCount, u128)> { triples(n).map(|t| (t, multi(&t))).collect() };
    let (c0, c1, c2) = (weighted(sizes.n0), weighted(sizes.n1), weighted(sizes.n2));
    let (mut sp, mut shifted, mut both) = (0u128, 0u128, 0u128);
    for (m0, w0) in &c0 {
        for (m1, w1) in &c1 {
            let w01 = w0 * w1;
            for (m2, w2) in &c2 {
                let y = m0.add(m1).add(m2);
                if !y.is_zero_sum() {
                    continue;
                }
                // y - w rotates each group's counts by that group's value of w
                let d = m0.add(&rotate(m1, 1)).add(&rotate(m2, 2));
                let (y_in, d_in) = (y.in_sp(), d.in_sp());
                if !(y_in || d_in) {
                    continue;
                }
                let mult = w01 * w2;
                if y_in {
                    sp += mult;
                }
                if d_in {
                    shifted += mult;
                }
                if y_in && d_in {
                    both += mult;
                }
            }
        }
    }
    Ok(ShiftCounts { sp: sp.into(), shifted: shifted.into(), both: both.into() })
}

/// Type count of `y - c` for `y` of type `t`.
fn rotate(t: &TypeCount, c: u32) -> TypeCount {
    TypeCount { n0: t.get(c), n1: t.get(c + 1), n2: t.get(c + 2) }
}

/// Pascal's triangle up to row `n` (exact in u128 for n ≤ 64).
fn binomials(n: u32) -> Vec<Vec<u128>> {
    let mut rows: Vec<Vec<u128>> = vec![vec![1]];
    for i in 1..=n as usize {
        let prev = &rows[i - 1];
        let row = (0..=i).map(|j| if j == 0 || j == i { 1 } else { prev[j - 1] + prev[j] }).collect();
        rows.push(row);
    }
    rows
}

/// Exact |S_p △ (w + S_p)|.
pub fn sp_shift_diff_exact(w: &ApVector) -> Result<BigUint> {
    Ok(sp_shift_counts(w)?.symmetric_difference())
}

/// Whether `(a_p + S_p) ∩ S_p` is empty, by exact conditioned counting.
pub fn disjointness_check_ap_shift(p: u32) -> Result<bool> {
    let a = ApVector::a_p(p)?;
    Ok(sp_shift_counts(&a)?.both.is_zero())
}

/// Dimension of the smallest PSL2(F_p)-invariant subspace of A_p containing `x`.
pub fn invariant_closure_dim(x: &ApVector) -> usize {
    invariant_closure_dim_of(std::slice::from_ref(x))
}

/// Dimension of the smallest PSL2(F_p)-invariant subspace containing every `xs`.
pub fn invariant_closure_dim_of(xs: &[ApVector]) -> usize {
    let Some(first) = xs.first() else { return 0 };
    let p = first.p;
    let gens = [coordinate_permutation(&translation(p)), coordinate_permutation(&inversion(p))];
    let mut basis = EchelonBasis::default();
    let mut queue = xs.to_vec();
    while let Some(v) = queue.pop() {
        if basis.insert(&v) {
            for g in &gens {
                queue.push(permute_coords(g, &v));
            }
        }
    }
    basis.rows.len()
}

pub(crate) fn translation(p: u32) -> PSL2Element {
    PSL2Element::new(1, 1, 0, 1, p).expect("p prime")
}

pub(crate) fn inversion(p: u32) -> PSL2Element {
    PSL2Element::new(0, -1, 1, 0, p).expect("p prime")
}

/// Row-echelon basis over F_3; rows normalised to pivot value 1.
#[derive(Default)]
struct EchelonBasis {
    rows: Vec<(usize, Vec<u8>)>,
}

impl EchelonBasis {
    fn insert(&mut self, v: &ApVector) -> bool {
        let mut r = v.coords();
        for (pivot, row) in &self.rows {
            let f = r[*pivot];
            if f != 0 {
                for (a, b) in r.iter_mut().zip(row) {
                    *a = (*a + 3 * 3 - f * b) % 3;
                }
            }
        }
        match r.iter().position(|&c| c != 0) {
            None => false,
            Some(pivot) => {
                if r[pivot] == 2 {
                    for a in r.iter_mut() {
                        *a = (*a * 2) % 3;
                    }
                }
                self.rows.push((pivot, r));
                true
            }
        }
    }
}

/// Monte-Carlo estimate of |S_p| / 3^p from uniform samples of A_p.
pub fn sp_fraction_sampled<R: Rng + ?Sized>(p: u32, samples: u64, rng: &mut R) -> f64 {
    let hits = (0..samples).filter(|_| sp_membership(&ApVector::random(p, rng))).count();
    hits as f64 / samples as f64
}

/// Ratio of two big integers as `f64`.
pub fn big_ratio(num: &BigUint, den: &BigUint) -> f64 {
    num.to_f64().unwrap_or(f64::INFINITY) / den.to_f64().unwrap_or(f64::INFINITY)
}
