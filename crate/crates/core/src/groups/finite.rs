//! Small finite groups given by a full multiplication table.

use std::collections::{BTreeSet, HashSet};

use crate::algebra::Psl2Group;
use crate::error::{Error, Result};

/// Largest order accepted for table-based groups.
pub const MAX_TABLE_ORDER: usize = 5_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteGroup {
    n: usize,
    mul: Vec<u32>,
    inv: Vec<u32>,
    identity: usize,
}

impl FiniteGroup {
    /// Validates closure, identity, inverses and associativity of `mul`
    /// (row-major, `mul[x * n + y] = x y`).
    pub fn from_table(n: usize, mul: Vec<u32>) -> Result<Self> {
        if n == 0 || n > MAX_TABLE_ORDER || mul.len() != n * n {
            return Err(Error::invalid(format!("bad table for order {n}")));
        }
        if mul.iter().any(|&z| z as usize >= n) {
            return Err(Error::invalid("table entry out of range"));
        }
        let identity = (0..n)
            .find(|&e| (0..n).all(|x| mul[e * n + x] as usize == x && mul[x * n + e] as usize == x))
            .ok_or_else(|| Error::invalid("no identity"))?;
        let mut inv = vec![0u32; n];
        for x in 0..n {
            inv[x] = (0..n).find(|&y| mul[x * n + y] as usize == identity).ok_or_else(|| Error::invalid("missing inverse"))? as u32;
        }
        let g = FiniteGroup { n, mul, inv, identity };
        if n <= 200 {
            for x in 0..n {
                for y in 0..n {
                    for z in 0..n {
                        if g.mul(g.mul(x, y), z) != g.mul(x, g.mul(y, z)) {
                            return Err(Error::invalid("table is not associative"));
                        }
                    }
                }
            }
        }
        Ok(g)
    }

    pub fn cyclic(n: usize) -> Self {
        let mul = (0..n * n).map(|i| ((i / n + i % n) % n) as u32).collect();
        FiniteGroup::from_table(n, mul).expect("cyclic group")
    }

    /// Sym(k) on `0..k`; elements in lexicographic order of image lists,
    /// product `(x y)(i) = x(y(i))`.
    pub fn symmetric(k: usize) -> Result<Self> {
        if k == 0 || k > 6 {
            return Err(Error::invalid("symmetric groups supported for 1 ≤ k ≤ 6"));
        }
        let mut perms: Vec<Vec<usize>> = vec![(0..k).collect()];
        let mut all = Vec::new();
        permutations(&mut perms[0].clone(), 0, &mut all);
        all.sort();
        perms = all;
        let index = |p: &Vec<usize>| perms.binary_search(p).expect("permutation");
        let n = perms.len();
        let mut mul = vec![0u32; n * n];
        for (i, x) in perms.iter().enumerate() {
            for (j, y) in perms.iter().enumerate() {
                let z: Vec<usize> = (0..k).map(|t| x[y[t]]).collect();
                mul[i * n + j] = index(&z) as u32;
            }
        }
        FiniteGroup::from_table(n, mul)
    }

    pub fn from_psl2(g: &Psl2Group) -> Result<Self> {
        let n = g.order();
        if n > MAX_TABLE_ORDER {
            return Err(Error::Resource(format!("order {n} is too large for a table")));
        }
        let mut mul = Vec::with_capacity(n * n);
        for x in g.elements() {
            mul.extend(g.left_mul_table(x));
        }
        FiniteGroup::from_table(n, mul)
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    #[inline]
    pub fn mul(&self, x: usize, y: usize) -> usize {
        self.mul[x * self.n + y] as usize
    }

    pub fn inv(&self, x: usize) -> usize {
        self.inv[x] as usize
    }

    /// `x ↦ g x`.
    pub fn left_regular(&self, g: usize) -> Vec<u32> {
        self.mul[g * self.n..(g + 1) * self.n].to_vec()
    }

    /// `x ↦ x g`.
    pub fn right_regular(&self, g: usize) -> Vec<u32> {
        (0..self.n).map(|x| self.mul(x, g) as u32).collect()
    }

    /// The subgroup generated by `gens`, sorted.
    pub fn closure(&self, gens: &[usize]) -> Vec<usize> {
        let mut seen: BTreeSet<usize> = BTreeSet::from([self.identity]);
        let mut frontier = vec![self.identity];
        while let Some(x) = frontier.pop() {
            for &g in gens {
                let y = self.mul(x, g);
                if seen.insert(y) {
                    frontier.push(y);
                }
            }
        }
        seen.into_iter().collect()
    }

    /// Every subgroup, each as a sorted element list, found by adjoining one
    /// element at a time starting from the trivial subgroup.
    pub fn all_subgroups(&self) -> Result<Vec<Vec<usize>>> {
        if self.n > 200 {
            return Err(Error::Resource("subgroup enumeration is limited to order 200".into()));
        }
        let trivial = vec![self.identity];
        let mut found: HashSet<Vec<usize>> = HashSet::from([trivial.clone()]);
        let mut queue = vec![trivial];
        while let Some(h) = queue.pop() {
            for g in 0..self.n {
                if h.binary_search(&g).is_ok() {
                    continue;
                }
                let mut gens = h.clone();
                gens.push(g);
                let k = self.closure(&gens);
                if found.insert(k.clone()) {
                    queue.push(k);
                }
            }
        }
        let mut out: Vec<Vec<usize>> = found.into_iter().collect();
        out.sort_by(|a, b| a.len().cmp(&b.len()).then(a.cmp(b)));
        Ok(out)
    }

    /// Left coset `x N` of each element, labelled by the smallest element.
    pub fn left_coset_labels(&self, subgroup: &[usize]) -> Vec<u32> {
        (0..self.n).map(|x| subgroup.iter().map(|&h| self.mul(x, h)).min().expect("nonempty") as u32).collect()
    }
}

fn permutations(a: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k == a.len() {
        out.push(a.clone());
        return;
    }
    for i in k..a.len() {
        a.swap(k, i);
        permutations(a, k + 1, out);
        a.swap(k, i);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subgroup_counts() {
        // Z12 has one subgroup per divisor; S3 has 6 subgroups, S4 has 30
        assert_eq!(FiniteGroup::cyclic(12).all_subgroups().unwrap().len(), 6);
        assert_eq!(FiniteGroup::symmetric(3).unwrap().all_subgroups().unwrap().len(), 6);
        assert_eq!(FiniteGroup::symmetric(4).unwrap().all_subgroups().unwrap().len(), 30);
    }

    #[test]
    fn bad_tables_are_rejected() {
        assert!(FiniteGroup::from_table(2, vec![0, 1, 1, 1]).is_err());
        assert!(FiniteGroup::from_table(2, vec![0, 1, 1, 0]).is_ok());
    }

    #[test]
    fn psl2_table() {
        let g = FiniteGroup::from_psl2(&Psl2Group::enumerate(5).unwrap()).unwrap();
        assert_eq!(g.order(), 60);
        let x = 7;
        assert_eq!(g.mul(x, g.inv(x)), g.identity());
    }
}
