//! Partitions of a finite group, how far a permutation is from permuting their
//! blocks, and recovery of coset structure from almost-invariant partitions.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use pathfinding::prelude::{kuhn_munkres, Matrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sofic::perm::{read_header, read_u64, sidecar_path, write_header};
use crate::sofic::PermutationRep;

/// Block counts up to this size may use the optimal assignment.
pub const OPTIMAL_BLOCK_LIMIT: usize = 1000;

/// Largest explicit partition held in memory.
pub const MAX_EXPLICIT_POINTS: usize = 1 << 28;

/// Largest `S` listed block by block in a `CosetHypothesis`.
pub const ASSIGNMENT_LIST_LIMIT: u128 = 1 << 16;

pub const SPRT_MAGIC: &[u8; 4] = b"SPRT";
pub const SPRT_VERSION: u32 = 1;

/// A partition of `0..N` into nonempty blocks `0..B`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledPartition {
    labels: Vec<u32>,
    sizes: Vec<u64>,
}

impl LabeledPartition {
    /// Labels must use every id in `0..B`.
    pub fn new(labels: Vec<u32>) -> Result<Self> {
        if labels.is_empty() || labels.len() > MAX_EXPLICIT_POINTS {
            return Err(Error::invalid(format!("partition size {} out of range", labels.len())));
        }
        let b = *labels.iter().max().expect("nonempty") as usize + 1;
        let mut sizes = vec![0u64; b];
        for &l in &labels {
            sizes[l as usize] += 1;
        }
        if let Some(k) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::invalid(format!("block {k} is empty")));
        }
        Ok(LabeledPartition { labels, sizes })
    }

    /// Renumbers arbitrary labels in order of first appearance.
    pub fn from_labels(raw: &[u64]) -> Result<Self> {
        let mut ids: HashMap<u64, u32> = HashMap::new();
        let labels = raw
            .iter()
            .map(|&r| {
                let next = ids.len() as u32;
                *ids.entry(r).or_insert(next)
            })
            .collect();
        LabeledPartition::new(labels)
    }

    pub fn singletons(n: usize) -> Result<Self> {
        LabeledPartition::new((0..n as u32).collect())
    }

    pub fn single_block(n: usize) -> Result<Self> {
        LabeledPartition::new(vec![0; n])
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn block_count(&self) -> usize {
        self.sizes.len()
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn label(&self, x: usize) -> u32 {
        self.labels[x]
    }

    pub fn sizes(&self) -> &[u64] {
        &self.sizes
    }

    /// Moves `round(fraction · N)` distinct points to a different block.
    pub fn relabel_noise(&self, fraction: f64, seed: u64) -> Result<Self> {
        let n = self.len();
        let b = self.block_count() as u32;
        if b < 2 || !(0.0..=1.0).contains(&fraction) {
            return Err(Error::invalid("noise needs a fraction in [0,1] and at least two blocks"));
        }
        let count = (fraction * n as f64).round() as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let picked = rand::seq::index::sample(&mut rng, n, count);
        let mut labels = self.labels.clone();
        for x in picked.iter() {
            let shift = rng.gen_range(1..b);
            labels[x] = (labels[x] + shift) % b;
        }
        let raw: Vec<u64> = labels.iter().map(|&l| l as u64).collect();
        LabeledPartition::from_labels(&raw)
    }

    pub fn write_sprt(&self, path: &Path, sidecar: &serde_json::Value) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        write_header(&mut w, SPRT_MAGIC, SPRT_VERSION, self.len() as u64)?;
        w.write_all(&(self.block_count() as u64).to_le_bytes())?;
        for &l in &self.labels {
            w.write_all(&l.to_le_bytes())?;
        }
        w.flush()?;
        std::fs::write(sidecar_path(path), serde_json::to_string_pretty(sidecar)?)?;
        Ok(())
    }

    pub fn read_sprt(path: &Path) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        let n = read_header(&mut r, SPRT_MAGIC, SPRT_VERSION)?;
        let blocks = read_u64(&mut r)?;
        if n as usize > MAX_EXPLICIT_POINTS {
            return Err(Error::Format(format!("declared length {n} is too large")));
        }
        let mut labels = Vec::with_capacity(n as usize);
        let mut b4 = [0u8; 4];
        for _ in 0..n {
            r.read_exact(&mut b4)?;
            labels.push(u32::from_le_bytes(b4));
        }
        if r.read(&mut [0u8; 1])? != 0 {
            return Err(Error::Format("trailing bytes after payload".into()));
        }
        let p = LabeledPartition::new(labels)?;
        if p.block_count() as u64 != blocks {
            return Err(Error::Format(format!("header declares {blocks} blocks, payload has {}", p.block_count())));
        }
        Ok(p)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Matching {
    GreedyMaxOverlap,
    OptimalAssignment,
}

fn exact_images(sigma: &PermutationRep, n: usize) -> Result<std::sync::Arc<Vec<u32>>> {
    if sigma.size() != n as u128 {
        return Err(Error::invalid(format!("permutation acts on {} points, partition has {n}", sigma.size())));
    }
    match sigma.to_exact()? {
        PermutationRep::Exact(v) => Ok(v),
        PermutationRep::Implicit { .. } => unreachable!("to_exact returns a table"),
    }
}

/// Nonzero entries of `M[k][l] = |σ(X_k) ∩ X_l|`, sorted by `(k, l)`.
pub fn overlap_entries(partition: &LabeledPartition, sigma: &PermutationRep) -> Result<Vec<((u32, u32), u64)>> {
    let images = exact_images(sigma, partition.len())?;
    let labels = partition.labels();
    let counts = labels
        .par_iter()
        .enumerate()
        .fold(HashMap::new, |mut acc: HashMap<(u32, u32), u64>, (x, &k)| {
            *acc.entry((k, labels[images[x] as usize])).or_insert(0) += 1;
            acc
        })
        .reduce(HashMap::new, |mut a, b| {
            for (key, v) in b {
                *a.entry(key).or_insert(0) += v;
            }
            a
        });
    let mut out: Vec<_> = counts.into_iter().collect();
    out.sort_unstable();
    Ok(out)
}

/// Maximum-weight matching of rows to columns; unmatched rows map to `None`.
/// Missing rows or columns are padded with empty pseudo-blocks.
fn match_blocks(rows: usize, cols: usize, entries: &[((u32, u32), u64)], mode: Matching) -> Result<Vec<Option<u32>>> {
    match mode {
        Matching::GreedyMaxOverlap => {
            let mut order: Vec<&((u32, u32), u64)> = entries.iter().collect();
            order.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
            let mut row_of = vec![None; rows];
            let mut col_used = vec![false; cols];
            for &&((k, l), _) in &order {
                if row_of[k as usize].is_none() && !col_used[l as usize] {
                    row_of[k as usize] = Some(l);
                    col_used[l as usize] = true;
                }
            }
            Ok(row_of)
        }
        Matching::OptimalAssignment => {
            let size = rows.max(cols);
            if size > OPTIMAL_BLOCK_LIMIT {
                return Err(Error::Resource(format!("optimal assignment is limited to {OPTIMAL_BLOCK_LIMIT} blocks")));
            }
            let mut weights = Matrix::new(size, size, 0i64);
            for &((k, l), v) in entries {
                weights[(k as usize, l as usize)] = v as i64;
            }
            let (_, assignment) = kuhn_munkres(&weights);
            Ok((0..rows).map(|k| if assignment[k] < cols { Some(assignment[k] as u32) } else { None }).collect())
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvarianceDefect {
    /// `(1/|G|) Σ_k |σ(X_k) △ X_{m(k)}|`.
    pub value: f64,
    pub symmetric_difference: u64,
    pub matching: Matching,
    /// `m(k)` for each block.
    pub block_map: Vec<Option<u32>>,
}

pub fn invariance_defect(partition: &LabeledPartition, sigma: &PermutationRep, matching: Matching) -> Result<InvarianceDefect> {
    let entries = overlap_entries(partition, sigma)?;
    let b = partition.block_count();
    let block_map = match_blocks(b, b, &entries, matching)?;
    let index: HashMap<(u32, u32), u64> = entries.into_iter().collect();
    let n = partition.len() as u64;
    let matched: u64 = block_map.iter().enumerate().filter_map(|(k, m)| m.and_then(|l| index.get(&(k as u32, l)).copied())).sum();
    // Σ_k |σX_k| + Σ_l |X_l| − 2·matched; unmatched blocks face empty pseudo-blocks
    let diff = 2 * n - 2 * matched;
    Ok(InvarianceDefect { value: diff as f64 / n as f64, symmetric_difference: diff, matching, block_map })
}

/// `(1/|G|) Σ_{k,l} |σ(X_k) ∩ X_l|² / √(|X_k||X_l|)`.
pub fn eta_overlap(partition: &LabeledPartition, sigma: &PermutationRep) -> Result<f64> {
    let entries = overlap_entries(partition, sigma)?;
    let sizes = partition.sizes();
    let sum: f64 =
        entries.iter().map(|&((k, l), c)| (c as f64).powi(2) / ((sizes[k as usize] as f64) * (sizes[l as usize] as f64)).sqrt()).sum();
    Ok(sum / partition.len() as f64)
}

/// Result of matching blocks to cosets of a subgroup.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CosetHypothesis {
    pub subgroup: String,
    pub subgroup_order: u64,
    /// `|S|`.
    pub assigned: u128,
    /// Blocks matched to a coset, increasing; left empty above
    /// `ASSIGNMENT_LIST_LIMIT` blocks.
    pub assignment: Vec<u64>,
    /// Coset label matched to each block of `assignment`.
    pub omega: Vec<u64>,
    /// `|G| · residual`.
    pub residual_count: u128,
    pub group_order: u128,
    pub residual: f64,
    /// `|N|·|S| / |G|`.
    pub moreover: f64,
}

struct BlockFit {
    size: u64,
    coset: u64,
    overlap: u64,
}

// Shared selection rule once each block knows its majority coset.
fn select(subgroup: &str, subgroup_order: u64, group_order: u128, fits: impl Iterator<Item = (u64, BlockFit)>) -> CosetHypothesis {
    let mut best: HashMap<u64, (u64, u64)> = HashMap::new();
    let mut blocks = Vec::new();
    for (id, f) in fits {
        if 2 * f.overlap > f.size {
            let e = best.entry(f.coset).or_insert((f.overlap, id));
            if f.overlap > e.0 || (f.overlap == e.0 && id < e.1) {
                *e = (f.overlap, id);
            }
            blocks.push((id, f));
        }
    }
    let mut chosen: Vec<(u64, u64)> = Vec::new();
    let mut gain: i128 = 0;
    for (id, f) in blocks {
        if best.get(&f.coset).map(|e| e.1) == Some(id) {
            chosen.push((id, f.coset));
            gain += subgroup_order as i128 - 2 * f.overlap as i128;
        }
    }
    let count = chosen.len() as u128;
    finish(subgroup, subgroup_order, group_order, chosen, count, gain)
}

// residual · |G| = |G| + Σ_{k∈S} (|N| − 2 |X_k ∩ ω(k)N|)
fn finish(
    subgroup: &str,
    subgroup_order: u64,
    group_order: u128,
    mut chosen: Vec<(u64, u64)>,
    assigned: u128,
    gain: i128,
) -> CosetHypothesis {
    chosen.sort_unstable();
    if assigned > ASSIGNMENT_LIST_LIMIT {
        chosen.clear();
    }
    let residual_count = (group_order as i128 + gain) as u128;
    CosetHypothesis {
        subgroup: subgroup.to_string(),
        subgroup_order,
        assigned,
        assignment: chosen.iter().map(|c| c.0).collect(),
        omega: chosen.iter().map(|c| c.1).collect(),
        residual_count,
        group_order,
        residual: residual_count as f64 / group_order as f64,
        moreover: subgroup_order as f64 * assigned as f64 / group_order as f64,
    }
}

fn majority(counts: &HashMap<u64, u64>) -> (u64, u64) {
    counts.iter().fold((u64::MAX, 0), |(c, o), (&k, &v)| if v > o || (v == o && k < c) { (k, v) } else { (c, o) })
}

/// Fits an explicit partition against the cosets given by `coset_of[x]`.
pub fn coset_fit(partition: &LabeledPartition, coset_of: &[u64], subgroup: &str, subgroup_order: u64) -> Result<CosetHypothesis> {
    let n = partition.len();
    if coset_of.len() != n {
        return Err(Error::invalid("coset indexer does not cover the domain"));
    }
    if subgroup_order == 0 || !(n as u64).is_multiple_of(subgroup_order) {
        return Err(Error::invalid(format!("|N| = {subgroup_order} does not divide {n}")));
    }
    let mut per_block: Vec<HashMap<u64, u64>> = vec![HashMap::new(); partition.block_count()];
    for (x, &k) in partition.labels().iter().enumerate() {
        *per_block[k as usize].entry(coset_of[x]).or_insert(0) += 1;
    }
    let sizes = partition.sizes();
    let fits = per_block.iter().enumerate().map(|(k, counts)| {
        let (coset, overlap) = majority(counts);
        (k as u64, BlockFit { size: sizes[k], coset, overlap })
    });
    Ok(select(subgroup, subgroup_order, n as u128, fits))
}

/// Fits against every candidate and ranks by residual, then input order.
pub fn rank_subgroups(partition: &LabeledPartition, candidates: &[(String, Vec<u64>, u64)]) -> Result<Vec<CosetHypothesis>> {
    let mut fits: Vec<(usize, CosetHypothesis)> = candidates
        .iter()
        .enumerate()
        .map(|(i, (name, cosets, order))| coset_fit(partition, cosets, name, *order).map(|h| (i, h)))
        .collect::<Result<_>>()?;
    fits.sort_by(|a, b| a.1.residual_count.cmp(&b.1.residual_count).then(a.0.cmp(&b.0)));
    Ok(fits.into_iter().map(|f| f.1).collect())
}

/// A partition of a product `G × K` whose blocks are products `B × C`;
/// block id is `b · |blocks(K)| + c`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProductPartition {
    pub left: LabeledPartition,
    pub right: LabeledPartition,
}

impl ProductPartition {
    pub fn new(left: LabeledPartition, right: LabeledPartition) -> Self {
        ProductPartition { left, right }
    }

    pub fn domain_size(&self) -> u128 {
        self.left.len() as u128 * self.right.len() as u128
    }

    pub fn block_count(&self) -> u128 {
        self.left.block_count() as u128 * self.right.block_count() as u128
    }

    /// Block of the point `x · |K| + y`.
    pub fn label(&self, point: u128) -> u128 {
        let nk = self.right.len() as u128;
        let (x, y) = ((point / nk) as usize, (point % nk) as usize);
        self.left.label(x) as u128 * self.right.block_count() as u128 + self.right.label(y) as u128
    }
}

/// The six normal subgroups of G̃_p = (A_p ⋊ H_p) × K_p that can arise.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Candidate {
    Trivial,
    EK,
    AK,
    Whole,
    GE,
    AE,
}

impl Candidate {
    pub const ALL: [Candidate; 6] = [Candidate::Trivial, Candidate::EK, Candidate::AK, Candidate::Whole, Candidate::GE, Candidate::AE];

    pub fn name(&self) -> &'static str {
        match self {
            Candidate::Trivial => "{e}",
            Candidate::EK => "{e} x K",
            Candidate::AK => "A x K",
            Candidate::Whole => "G~",
            Candidate::GE => "G x {e}",
            Candidate::AE => "A x {e}",
        }
    }

    fn factors(&self) -> (GFactor, bool) {
        match self {
            Candidate::Trivial => (GFactor::E, false),
            Candidate::EK => (GFactor::E, true),
            Candidate::AK => (GFactor::A, true),
            Candidate::Whole => (GFactor::G, true),
            Candidate::GE => (GFactor::G, false),
            Candidate::AE => (GFactor::A, false),
        }
    }
}

#[derive(Clone, Copy)]
enum GFactor {
    E,
    A,
    G,
}

/// Shape of G̃_p: points are `g · |K| + k` with `g = a · |H| + h`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GtildeShape {
    pub a_order: u64,
    pub h_order: u64,
    pub k_order: u64,
}

impl GtildeShape {
    pub fn new(p: u32) -> Result<Self> {
        let ctx = crate::groups::GpContext::new(p)?;
        let r = crate::algebra::next_prime(p as u64);
        Ok(GtildeShape { a_order: ctx.a_order(), h_order: ctx.h_order(), k_order: crate::algebra::psl2_order(r) })
    }

    pub fn g_order(&self) -> u64 {
        self.a_order * self.h_order
    }

    pub fn order(&self) -> u128 {
        self.g_order() as u128 * self.k_order as u128
    }

    fn g_coset(&self, f: GFactor, g: u64) -> u64 {
        match f {
            GFactor::E => g,
            GFactor::A => g % self.h_order,
            GFactor::G => 0,
        }
    }

    fn g_subgroup_order(&self, f: GFactor) -> u64 {
        match f {
            GFactor::E => 1,
            GFactor::A => self.a_order,
            GFactor::G => self.g_order(),
        }
    }

    /// The cosets of `c` as a product partition.
    pub fn coset_partition(&self, c: Candidate) -> Result<ProductPartition> {
        let (gf, kf) = c.factors();
        let left: Vec<u64> = (0..self.g_order()).map(|g| self.g_coset(gf, g)).collect();
        let right: Vec<u64> = (0..self.k_order).map(|k| if kf { 0 } else { k }).collect();
        Ok(ProductPartition::new(LabeledPartition::from_labels(&left)?, LabeledPartition::from_labels(&right)?))
    }
}

// Per-factor majority cosets: (size, coset, overlap) for each block.
fn factor_fits(part: &LabeledPartition, coset: impl Fn(u64) -> u64) -> Vec<(u64, u64, u64)> {
    let mut per_block: Vec<HashMap<u64, u64>> = vec![HashMap::new(); part.block_count()];
    for (x, &k) in part.labels().iter().enumerate() {
        *per_block[k as usize].entry(coset(x as u64)).or_insert(0) += 1;
    }
    per_block
        .iter()
        .zip(part.sizes())
        .map(|(counts, &s)| {
            let (c, o) = majority(counts);
            (s, c, o)
        })
        .collect()
}

/// Coset fit of a product partition against a product candidate. Block
/// overlaps factor, so the majority coset of `B × C` is the pair of factor
/// majorities and nothing is materialised per point.
pub fn coset_fit_product(shape: &GtildeShape, partition: &ProductPartition, candidate: Candidate) -> Result<CosetHypothesis> {
    if partition.left.len() as u64 != shape.g_order() || partition.right.len() as u64 != shape.k_order {
        return Err(Error::invalid("partition does not match the shape of G~_p"));
    }
    let (gf, kf) = candidate.factors();
    let left = factor_fits(&partition.left, |g| shape.g_coset(gf, g));
    let right = factor_fits(&partition.right, |k| if kf { 0 } else { k });
    let k_cosets = if kf { 1 } else { shape.k_order };
    let n_order = shape.g_subgroup_order(gf) * if kf { shape.k_order } else { 1 };
    let nb = right.len() as u64;
    // a product block can hold more than half of its coset only if both factors do
    let group = |fits: &[(u64, u64, u64)]| {
        let mut by_coset: BTreeMap<u64, Vec<(u64, u64, u64)>> = BTreeMap::new();
        for (id, &(s, c, o)) in fits.iter().enumerate() {
            if 2 * o > s {
                by_coset.entry(c).or_default().push((id as u64, s, o));
            }
        }
        by_coset
    };
    let (lg, rg) = (group(&left), group(&right));
    let mut chosen = Vec::new();
    let mut assigned = 0u128;
    let mut gain: i128 = 0;
    for (&c1, ls) in &lg {
        for (&c2, rs) in &rg {
            let mut winner: Option<(u64, u64)> = None;
            for &(b, s1, o1) in ls {
                for &(c, s2, o2) in rs {
                    let o = o1 * o2;
                    if 2 * o > s1 * s2 && winner.is_none_or(|(wo, _)| o > wo) {
                        winner = Some((o, b * nb + c));
                    }
                }
            }
            if let Some((o, id)) = winner {
                assigned += 1;
                gain += n_order as i128 - 2 * o as i128;
                if assigned <= ASSIGNMENT_LIST_LIMIT {
                    chosen.push((id, c1 * k_cosets + c2));
                }
            }
        }
    }
    Ok(finish(candidate.name(), n_order, shape.order(), chosen, assigned, gain))
}

/// Every candidate's fit, best residual first; ties keep the listed order.
pub fn classify_candidates(shape: &GtildeShape, partition: &ProductPartition) -> Result<Vec<CosetHypothesis>> {
    let mut fits: Vec<(usize, CosetHypothesis)> =
        Candidate::ALL.iter().enumerate().map(|(i, &c)| coset_fit_product(shape, partition, c).map(|h| (i, h))).collect::<Result<_>>()?;
    fits.sort_by(|a, b| a.1.residual_count.cmp(&b.1.residual_count).then(a.0.cmp(&b.0)));
    Ok(fits.into_iter().map(|f| f.1).collect())
}
