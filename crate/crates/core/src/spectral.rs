//! Cayley graphs, second-eigenvalue estimates, boundary ratios of witness
//! sets, and Kazhdan constants of small groups.

use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{PSL2Element, Psl2Group};
use crate::error::{Error, Result};
use crate::f3vectors::{ap_order, big_ratio, sp_count_exact, sp_shift_diff_exact};
use crate::groups::{FiniteGroup, GpElement, GpTables, HomSpecs};

/// Largest vertex count accepted by the power iteration.
pub const MAX_SPECTRAL_NODES: usize = 1 << 25;

/// Largest group for the dense Kazhdan computation.
pub const MAX_KAZHDAN_ORDER: usize = 2000;

/// The constant `36/√π` bounding `|S_p △ (S_p + v)|·√p / |A_p|`.
pub fn boundary_constant() -> f64 {
    36.0 / std::f64::consts::PI.sqrt()
}

const CHUNK: usize = 1 << 14;

/// A Cayley graph on a product of factors, vertex `x = Σ x_f · stride_f`.
/// Each generator acts factorwise by right multiplication.
#[derive(Clone, Debug)]
pub struct CayleyGraph {
    sizes: Vec<usize>,
    strides: Vec<usize>,
    n: usize,
    forward: Vec<Vec<Vec<u32>>>,
    inverse: Vec<Vec<Vec<u32>>>,
}

impl CayleyGraph {
    /// `gens[g][f]` is the permutation of factor `f` induced by generator `g`.
    pub fn new(sizes: Vec<usize>, gens: Vec<Vec<Vec<u32>>>) -> Result<Self> {
        if sizes.is_empty() || gens.is_empty() {
            return Err(Error::invalid("a Cayley graph needs factors and generators"));
        }
        let n = sizes.iter().try_fold(1usize, |acc, &s| acc.checked_mul(s)).filter(|&n| n > 0);
        let n = match n {
            Some(n) if n <= MAX_SPECTRAL_NODES => n,
            _ => return Err(Error::Resource(format!("Cayley graph exceeds {MAX_SPECTRAL_NODES} vertices"))),
        };
        let mut strides = vec![1usize; sizes.len()];
        for f in (0..sizes.len().saturating_sub(1)).rev() {
            strides[f] = strides[f + 1] * sizes[f + 1];
        }
        let mut inverse = Vec::with_capacity(gens.len());
        for g in &gens {
            if g.len() != sizes.len() {
                return Err(Error::invalid("generator does not act on every factor"));
            }
            let mut inv_g = Vec::with_capacity(sizes.len());
            for (table, &size) in g.iter().zip(&sizes) {
                if table.len() != size {
                    return Err(Error::invalid("generator table has the wrong length"));
                }
                let mut inv = vec![u32::MAX; size];
                for (x, &y) in table.iter().enumerate() {
                    if y as usize >= size || inv[y as usize] != u32::MAX {
                        return Err(Error::invalid("generator table is not a permutation"));
                    }
                    inv[y as usize] = x as u32;
                }
                inv_g.push(inv);
            }
            inverse.push(inv_g);
        }
        Ok(CayleyGraph { sizes, strides, n, forward: gens, inverse })
    }

    /// The cycle `Z_n` with generator `+1`.
    pub fn cycle(n: usize) -> Result<Self> {
        CayleyGraph::new(vec![n], vec![vec![(0..n).map(|x| ((x + 1) % n) as u32).collect()]])
    }

    pub fn finite_group(g: &FiniteGroup, gens: &[usize]) -> Result<Self> {
        CayleyGraph::new(vec![g.order()], gens.iter().map(|&s| vec![g.right_regular(s)]).collect())
    }

    pub fn gp(tables: &GpTables, gens: &[GpElement]) -> Result<Self> {
        CayleyGraph::new(vec![tables.order()], gens.iter().map(|g| vec![tables.right_mul_table(g)]).collect())
    }

    pub fn hxk(h: &Psl2Group, k: &Psl2Group, gens: &[(PSL2Element, PSL2Element)]) -> Result<Self> {
        CayleyGraph::new(vec![h.order(), k.order()], gens.iter().map(|(x, y)| vec![h.right_mul_table(x), k.right_mul_table(y)]).collect())
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn generator_count(&self) -> usize {
        self.forward.len()
    }

    pub fn degree(&self) -> usize {
        2 * self.forward.len()
    }

    pub fn neighbor(&self, x: usize, gen: usize, inverse: bool) -> usize {
        let tables = if inverse { &self.inverse[gen] } else { &self.forward[gen] };
        let mut y = 0;
        let mut rest = x;
        for (table, &stride) in tables.iter().zip(&self.strides) {
            let c = rest / stride;
            rest %= stride;
            y += table[c] as usize * stride;
        }
        y
    }

    /// `out = A v` for the normalized adjacency operator.
    pub fn apply_adjacency(&self, v: &[f64], out: &mut [f64]) {
        let scale = 1.0 / self.degree() as f64;
        match self.sizes.len() {
            1 => {
                out.par_iter_mut().enumerate().for_each(|(x, o)| {
                    let mut s = 0.0;
                    for (f, b) in self.forward.iter().zip(&self.inverse) {
                        s += v[f[0][x] as usize] + v[b[0][x] as usize];
                    }
                    *o = s * scale;
                });
                return;
            }
            2 => {
                // rows follow the first factor, so each row reads two rows of v
                let n2 = self.sizes[1];
                out.par_chunks_mut(n2).enumerate().for_each(|(i, row)| {
                    row.iter_mut().for_each(|o| *o = 0.0);
                    for tables in self.forward.iter().chain(&self.inverse) {
                        let src = &v[tables[0][i] as usize * n2..][..n2];
                        for (o, &j) in row.iter_mut().zip(&tables[1]) {
                            *o += src[j as usize];
                        }
                    }
                    row.iter_mut().for_each(|o| *o *= scale);
                });
                return;
            }
            _ => {}
        }
        out.par_iter_mut().enumerate().for_each(|(x, o)| {
            let mut s = 0.0;
            for g in 0..self.forward.len() {
                s += v[self.neighbor(x, g, false)] + v[self.neighbor(x, g, true)];
            }
            *o = s * scale;
        });
    }
}

/// Result of a power iteration on the complement of constants.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SpectrumEstimate {
    pub n: usize,
    pub degree: usize,
    /// Second largest eigenvalue of the normalized adjacency operator.
    pub lambda2: f64,
    pub gap: f64,
    pub iterations: usize,
    /// `‖Av − λ₂v‖` for the final unit vector.
    pub residual: f64,
    pub converged: bool,
    pub seed: u64,
    /// Rayleigh quotient of the lazy operator after each iteration.
    #[serde(skip)]
    pub rayleigh_history: Vec<f64>,
}

// Sums over fixed chunks, then in chunk order, so the result does not depend
// on the thread count.
fn det_sum<F: Fn(usize) -> f64 + Sync>(n: usize, f: F) -> f64 {
    let partial: Vec<f64> = (0..n.div_ceil(CHUNK)).into_par_iter().map(|c| (c * CHUNK..((c + 1) * CHUNK).min(n)).map(&f).sum()).collect();
    partial.iter().sum()
}

fn deflate_normalize(v: &mut [f64]) -> f64 {
    let n = v.len();
    let mean = det_sum(n, |i| v[i]) / n as f64;
    v.par_iter_mut().for_each(|x| *x -= mean);
    let norm = det_sum(n, |i| v[i] * v[i]).sqrt();
    if norm > 0.0 {
        v.par_iter_mut().for_each(|x| *x /= norm);
    }
    norm
}

/// Power iteration on the lazy operator `(I + A)/2`, whose spectrum is
/// nonnegative, so its top eigenvalue `μ` on the complement of constants
/// gives `λ₂ = 2μ − 1` even for bipartite graphs.
pub fn lambda2_estimate(graph: &CayleyGraph, iterations: usize, tolerance: f64, seed: u64) -> Result<SpectrumEstimate> {
    let n = graph.size();
    if n < 2 {
        return Err(Error::invalid("the graph needs at least two vertices"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    deflate_normalize(&mut v);
    let mut w = vec![0.0; n];
    let mut mu = 0.0;
    let mut residual = f64::INFINITY;
    let mut history = Vec::new();
    let mut done = 0;
    let mut converged = false;
    for it in 1..=iterations.max(1) {
        graph.apply_adjacency(&v, &mut w);
        w.par_iter_mut().zip(&v).for_each(|(a, b)| *a = 0.5 * (*a + b));
        let mean = det_sum(n, |i| w[i]) / n as f64;
        w.par_iter_mut().for_each(|x| *x -= mean);
        mu = det_sum(n, |i| v[i] * w[i]);
        residual = 2.0 * det_sum(n, |i| (w[i] - mu * v[i]).powi(2)).sqrt();
        history.push(mu);
        done = it;
        if residual <= tolerance {
            converged = true;
            break;
        }
        if deflate_normalize(&mut w) == 0.0 {
            // v lies in the kernel of the lazy operator
            converged = true;
            break;
        }
        std::mem::swap(&mut v, &mut w);
    }
    let lambda2 = (2.0 * mu - 1.0).clamp(-1.0, 1.0);
    Ok(SpectrumEstimate {
        n,
        degree: graph.degree(),
        lambda2,
        gap: 1.0 - lambda2,
        iterations: done,
        residual,
        converged,
        seed,
        rayleigh_history: history,
    })
}

/// Which Cayley graph a spectral row measures.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// H_p × K_p with the images of a_1..a_{m-3}.
    Eta,
    /// G_p with the images of a_1..a_{m-1}.
    Phi,
    /// G_p with the images of b_1..b_k.
    Rho,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Eta => "eta",
            Family::Phi => "phi",
            Family::Rho => "rho",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "eta" => Ok(Family::Eta),
            "phi" => Ok(Family::Phi),
            "rho" => Ok(Family::Rho),
            _ => Err(Error::invalid(format!("unknown family {s:?}"))),
        }
    }
}

pub fn family_graph(specs: &HomSpecs, family: Family) -> Result<CayleyGraph> {
    match family {
        Family::Eta => {
            let h = Psl2Group::enumerate(specs.p)?;
            let k = Psl2Group::enumerate(specs.r)?;
            let gens: Vec<_> = specs.eta.images[..(specs.m - 3) as usize].iter().map(|x| x.as_hxk().expect("H x K image")).collect();
            if h.order().saturating_mul(k.order()) > MAX_SPECTRAL_NODES {
                return Err(Error::Resource(format!("H_{} x K_{} is beyond the spectral budget", specs.p, specs.r)));
            }
            CayleyGraph::hxk(&h, &k, &gens)
        }
        Family::Phi | Family::Rho => {
            let spec = if family == Family::Phi { &specs.phi } else { &specs.rho };
            if specs.p > 7 {
                return Err(Error::Resource(format!("G_{} is beyond the spectral budget", specs.p)));
            }
            let tables = GpTables::new(specs.p)?;
            let gens: Vec<GpElement> = spec.images.iter().map(|x| x.as_gp().expect("G_p image")).collect();
            CayleyGraph::gp(&tables, &gens)
        }
    }
}

/// One line of the spectra table.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SpectrumRow {
    pub p: u32,
    pub family: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub degree: usize,
    pub lambda2: f64,
    pub gap: f64,
    pub residual: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl SpectrumRow {
    pub fn new(p: u32, family: Family, est: &SpectrumEstimate) -> Self {
        SpectrumRow {
            p,
            family: family.name().to_string(),
            n: est.n,
            degree: est.degree,
            lambda2: est.lambda2,
            gap: est.gap,
            residual: est.residual,
            iterations: est.iterations,
            seed: est.seed,
        }
    }
}

pub fn write_spectra_csv<W: Write>(rows: &[SpectrumRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row).map_err(|e| Error::Format(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// A subset of a group whose boundary is measured.
#[derive(Clone, Debug)]
pub enum SubsetDescriptor {
    /// Membership flags over `0..N`.
    Explicit(Vec<bool>),
    /// `T_p = S_p · H_p ⊂ G_p`.
    SpTimesH { p: u32 },
}

/// A generator acting on the right.
#[derive(Clone, Debug)]
pub enum BoundaryGenerator {
    Table(Vec<u32>),
    Gp(GpElement),
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryRatio {
    /// `max_g |Tg △ T|`.
    pub numerator: BigUint,
    pub group_order: BigUint,
    pub set_size: BigUint,
    /// `max_g |Tg △ T| / |G|`.
    pub ratio: f64,
    /// `max_g |Tg △ T| / |T|`.
    pub cheeger: f64,
    pub per_generator: Vec<f64>,
    pub argmax: usize,
}

pub fn boundary_ratio(t: &SubsetDescriptor, generators: &[BoundaryGenerator]) -> Result<BoundaryRatio> {
    if generators.is_empty() {
        return Err(Error::invalid("no generators"));
    }
    let (counts, group_order, set_size): (Vec<BigUint>, BigUint, BigUint) = match t {
        SubsetDescriptor::Explicit(members) => {
            let n = members.len();
            let size = members.iter().filter(|&&b| b).count();
            let counts = generators
                .iter()
                .map(|g| match g {
                    BoundaryGenerator::Table(table) if table.len() == n => {
                        // |Tg △ T| = 2 |Tg \ T| for a bijection
                        let out = (0..n).into_par_iter().filter(|&x| members[x] && !members[table[x] as usize]).count();
                        Ok(BigUint::from(2 * out))
                    }
                    _ => Err(Error::invalid("explicit subsets take permutation tables of matching size")),
                })
                .collect::<Result<_>>()?;
            (counts, BigUint::from(n), BigUint::from(size))
        }
        SubsetDescriptor::SpTimesH { p } => {
            let h_order = BigUint::from(crate::algebra::psl2_order(*p as u64));
            let counts = generators
                .iter()
                .map(|g| match g {
                    // each H-slice of Tg is S_p + h.w, and S_p is coordinate-symmetric
                    BoundaryGenerator::Gp(x) if x.p() == *p => Ok(&h_order * sp_shift_diff_exact(&x.a)?),
                    _ => Err(Error::invalid(format!("T_{p} takes elements of G_{p}"))),
                })
                .collect::<Result<_>>()?;
            (counts, ap_order(*p) * &h_order, sp_count_exact(*p)? * &h_order)
        }
    };
    let per_generator: Vec<f64> = counts.iter().map(|c| big_ratio(c, &group_order)).collect();
    let argmax = (0..counts.len()).fold(0, |best, i| if counts[i] > counts[best] { i } else { best });
    let numerator = counts[argmax].clone();
    let cheeger = if set_size.is_zero() { 0.0 } else { big_ratio(&numerator, &set_size) };
    Ok(BoundaryRatio { ratio: big_ratio(&numerator, &group_order), cheeger, numerator, group_order, set_size, per_generator, argmax })
}

/// The boundary of `T_p` under `ρ_p(b_1..b_k)`.
pub fn rho_boundary(specs: &HomSpecs) -> Result<BoundaryRatio> {
    let gens: Vec<BoundaryGenerator> = specs.rho.images.iter().map(|x| BoundaryGenerator::Gp(x.as_gp().expect("G_p image"))).collect();
    boundary_ratio(&SubsetDescriptor::SpTimesH { p: specs.p }, &gens)
}

/// Bounds on the Kazhdan constant of `(G, T)` in the regular representation.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct KazhdanBounds {
    /// Smallest eigenvalue of `Σ_{t∈T}(2 − λ(t) − λ(t)*)` off the constants.
    pub gap: f64,
    pub lower: f64,
    pub upper: f64,
    pub direct: Option<f64>,
}

#[derive(Clone, Copy, Debug)]
pub struct DirectOptions {
    pub restarts: usize,
    pub steps: usize,
    pub seed: u64,
}

impl Default for DirectOptions {
    fn default() -> Self {
        DirectOptions { restarts: 8, steps: 400, seed: 0 }
    }
}

fn displacement_sq(g: &FiniteGroup, t: usize, xi: &[f64]) -> f64 {
    // (λ(t)ξ)(x) = ξ(t⁻¹x)
    let ti = g.inv(t);
    (0..xi.len()).map(|x| (xi[g.mul(ti, x)] - xi[x]).powi(2)).sum()
}

fn max_displacement(g: &FiniteGroup, ts: &[usize], xi: &[f64]) -> (f64, usize) {
    ts.iter().enumerate().fold((0.0, 0), |(best, arg), (i, &t)| {
        let d = displacement_sq(g, t, xi).sqrt();
        if d > best {
            (d, i)
        } else {
            (best, arg)
        }
    })
}

fn project_unit(xi: &mut [f64]) -> bool {
    let n = xi.len() as f64;
    let mean = xi.iter().sum::<f64>() / n;
    xi.iter_mut().for_each(|x| *x -= mean);
    let norm = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm < 1e-300 {
        return false;
    }
    xi.iter_mut().for_each(|x| *x /= norm);
    true
}

pub fn kazhdan_bounds(g: &FiniteGroup, t: &[usize], direct: Option<DirectOptions>) -> Result<KazhdanBounds> {
    let n = g.order();
    if t.is_empty() || t.iter().any(|&x| x >= n) {
        return Err(Error::invalid("T must be a nonempty set of group elements"));
    }
    if n > MAX_KAZHDAN_ORDER {
        return Err(Error::Resource(format!("|G| = {n} exceeds {MAX_KAZHDAN_ORDER}")));
    }
    if n == 1 {
        return Err(Error::invalid("the trivial group has no non-constant vectors"));
    }
    let shift = 4.0 * t.len() as f64 + 1.0;
    let mut lap = DMatrix::<f64>::from_element(n, n, shift / n as f64);
    for &s in t {
        for x in 0..n {
            let y = g.mul(s, x);
            lap[(x, x)] += 2.0;
            lap[(y, x)] -= 1.0;
            lap[(x, y)] -= 1.0;
        }
    }
    let eig = SymmetricEigen::new(lap);
    let (imin, gap) = eig.eigenvalues.iter().enumerate().fold((0, f64::INFINITY), |acc, (i, &e)| if e < acc.1 { (i, e) } else { acc });
    let gap = gap.max(0.0);
    let lower = (gap / t.len() as f64).sqrt();
    let upper = (2.0 * gap).sqrt();

    let direct = match direct {
        None => None,
        Some(opts) => {
            let mut starts: Vec<Vec<f64>> = vec![eig.eigenvectors.column(imin).iter().copied().collect()];
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            for _ in 0..opts.restarts {
                starts.push((0..n).map(|_| rng.sample(StandardNormal)).collect());
            }
            let mut best = f64::INFINITY;
            for mut xi in starts {
                if !project_unit(&mut xi) {
                    continue;
                }
                best = best.min(descend(g, t, xi, opts.steps));
            }
            let scale = 1e-9 * upper.max(1.0);
            if best < lower - scale || best > upper + scale {
                return Err(Error::Precondition(format!("direct value {best} escaped [{lower}, {upper}]")));
            }
            Some(best.clamp(lower, upper))
        }
    };
    Ok(KazhdanBounds { gap, lower, upper, direct })
}

// Projected subgradient descent on max_t ‖λ(t)ξ − ξ‖ over the unit sphere
// off the constants; returns the best value seen.
fn descend(g: &FiniteGroup, t: &[usize], mut xi: Vec<f64>, steps: usize) -> f64 {
    let n = xi.len();
    let (mut best, _) = max_displacement(g, t, &xi);
    let mut step = 0.5;
    for _ in 0..steps {
        let (_, i) = max_displacement(g, t, &xi);
        let s = t[i];
        let si = g.inv(s);
        // gradient of ‖Pξ − ξ‖² is 2(P − I)ᵀ(P − I)ξ
        let r: Vec<f64> = (0..n).map(|x| xi[g.mul(si, x)] - xi[x]).collect();
        let mut grad = vec![0.0; n];
        for x in 0..n {
            grad[g.mul(s, x)] += r[x];
            grad[x] -= r[x];
        }
        let cand: Vec<f64> = (0..n).map(|x| xi[x] - step * grad[x]).collect();
        let mut cand = cand;
        if !project_unit(&mut cand) {
            break;
        }
        let (value, _) = max_displacement(g, t, &cand);
        if value < best {
            best = value;
            xi = cand;
            step *= 1.2;
        } else {
            step *= 0.5;
            if step < 1e-12 {
                break;
            }
        }
    }
    best
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct AmplificationResult {
    pub holds: bool,
    pub trials: usize,
    pub kappa: f64,
    /// Largest observed `(κ/2)·max_G / max_T`.
    pub worst_ratio: f64,
    pub witness: Option<Vec<f64>>,
}

/// Checks `(κ/2)·max_{g∈G}‖λ(g)ξ − ξ‖ ≤ max_{t∈T}‖λ(t)ξ − ξ‖` on random ξ,
/// with κ the certified lower bound.
pub fn verify_amplification(g: &FiniteGroup, t: &[usize], trials: usize, seed: u64) -> Result<AmplificationResult> {
    let kappa = kazhdan_bounds(g, t, None)?.lower;
    let all: Vec<usize> = (0..g.order()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let xi: Vec<f64> = (0..g.order()).map(|_| rng.sample(StandardNormal)).collect();
        let (lhs, _) = max_displacement(g, &all, &xi);
        let lhs = 0.5 * kappa * lhs;
        let (rhs, _) = max_displacement(g, t, &xi);
        if rhs > 0.0 {
            worst = worst.max(lhs / rhs);
        }
        if lhs > rhs * (1.0 + 1e-12) + 1e-12 {
            return Ok(AmplificationResult { holds: false, trials, kappa, worst_ratio: worst, witness: Some(xi) });
        }
    }
    Ok(AmplificationResult { holds: true, trials, kappa, worst_ratio: worst, witness: None })
}

/// `|G_p| / |T_p|` as a float, used to normalise the ρ-family boundary.
pub fn tp_inverse_density(p: u32) -> Result<f64> {
    let s = sp_count_exact(p)?;
    Ok((ap_order(p).to_f64().unwrap_or(f64::INFINITY)) / s.to_f64().unwrap_or(f64::INFINITY))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::build_hom_specs;

    #[test]
    fn cycle_matches_closed_form() {
        let g = CayleyGraph::cycle(100).unwrap();
        let est = lambda2_estimate(&g, 200_000, 1e-9, 3).unwrap();
        assert!(est.converged);
        assert!((est.lambda2 - (2.0 * std::f64::consts::PI / 100.0).cos()).abs() < 1e-6, "{est:?}");
    }

    #[test]
    fn two_point_graph() {
        let g = CayleyGraph::finite_group(&FiniteGroup::cyclic(2), &[1]).unwrap();
        let est = lambda2_estimate(&g, 100, 1e-12, 0).unwrap();
        assert!((est.lambda2 + 1.0).abs() < 1e-12);
    }

    #[test]
    fn rayleigh_quotients_do_not_decrease() {
        let g = CayleyGraph::cycle(60).unwrap();
        let est = lambda2_estimate(&g, 500, 0.0, 9).unwrap();
        for w in est.rayleigh_history.windows(2) {
            assert!(w[1] >= w[0] - 1e-12);
        }
    }

    #[test]
    fn estimate_is_seed_deterministic() {
        let g = CayleyGraph::cycle(37).unwrap();
        let a = lambda2_estimate(&g, 300, 0.0, 5).unwrap();
        let b = lambda2_estimate(&g, 300, 0.0, 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn eta_graph_has_a_gap_at_7() {
        let specs = build_hom_specs(7, 5, 3).unwrap();
        let g = family_graph(&specs, Family::Eta).unwrap();
        assert_eq!(g.size(), 110_880);
        let est = lambda2_estimate(&g, 3000, 1e-6, 1).unwrap();
        assert!(est.gap > 0.01, "{est:?}");
    }

    #[test]
    fn boundary_examples() {
        let n = 12;
        let z = FiniteGroup::cyclic(n);
        let mut single = vec![false; n];
        single[0] = true;
        let r = boundary_ratio(&SubsetDescriptor::Explicit(single.clone()), &[BoundaryGenerator::Table(z.right_regular(5))]).unwrap();
        assert_eq!(r.numerator, BigUint::from(2u32));
        assert!((r.ratio - 2.0 / n as f64).abs() < 1e-15);

        let specs = build_hom_specs(7, 5, 3).unwrap();
        let b = rho_boundary(&specs).unwrap();
        assert!(b.per_generator[..2].iter().all(|&x| x == 0.0));
        assert_eq!(b.argmax, 2);
        assert!(b.ratio > 0.0 && b.ratio <= boundary_constant() / 7f64.sqrt());
    }

    #[test]
    fn sp_times_h_matches_enumeration() {
        let specs = build_hom_specs(7, 5, 3).unwrap();
        let tables = GpTables::new(7).unwrap();
        let members: Vec<bool> = (0..tables.order()).map(|x| crate::f3vectors::sp_membership(tables.a_vec(tables.split(x).0))).collect();
        let g = specs.rho.images[2].as_gp().unwrap();
        let a = boundary_ratio(&SubsetDescriptor::Explicit(members), &[BoundaryGenerator::Table(tables.right_mul_table(&g))]).unwrap();
        let b = boundary_ratio(&SubsetDescriptor::SpTimesH { p: 7 }, &[BoundaryGenerator::Gp(g)]).unwrap();
        assert_eq!(a.numerator, b.numerator);
        assert_eq!(a.set_size, b.set_size);
    }

    #[test]
    fn z2_kazhdan_constant_is_two() {
        let k = kazhdan_bounds(&FiniteGroup::cyclic(2), &[1], Some(DirectOptions::default())).unwrap();
        assert!((k.direct.unwrap() - 2.0).abs() < 1e-9);
        assert!((k.lower - 2.0).abs() < 1e-9);
    }

    #[test]
    fn s3_sandwich() {
        let g = FiniteGroup::symmetric(3).unwrap();
        // a transposition and a 3-cycle
        let t = [1, 3];
        assert_eq!(g.closure(&t).len(), 6);
        let k = kazhdan_bounds(&g, &t, Some(DirectOptions::default())).unwrap();
        let d = k.direct.unwrap();
        assert!(k.lower <= d && d <= k.upper, "{k:?}");
        let all: Vec<usize> = (0..6).collect();
        let kall = kazhdan_bounds(&g, &all, Some(DirectOptions::default())).unwrap();
        assert!(kall.direct.unwrap() >= d - 1e-9);
    }

    #[test]
    fn amplification_holds() {
        assert!(verify_amplification(&FiniteGroup::cyclic(2), &[1], 1000, 1).unwrap().holds);
        let g = FiniteGroup::symmetric(3).unwrap();
        assert!(verify_amplification(&g, &[1, 3], 1000, 2).unwrap().holds);
    }

    #[test]
    fn csv_columns() {
        let g = CayleyGraph::cycle(10).unwrap();
        let est = lambda2_estimate(&g, 10, 0.0, 0).unwrap();
        let mut buf = Vec::new();
        write_spectra_csv(&[SpectrumRow::new(7, Family::Eta, &est)], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("p,family,N,degree,lambda2,gap,residual,iterations,seed\n"));
    }
}
