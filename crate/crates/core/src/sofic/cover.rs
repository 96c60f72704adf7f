//! Branched covers θ: X → Y with constant fibre size, lifting a permutation
//! of X to one that intertwines exactly, and reading off fibrewise cocycles.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::perm::{read_header, read_u64, read_u64s, write_header, PermutationRep};
use crate::error::{Error, Result};

/// A surjection `θ: 0..|X| → 0..|Y|` whose fibres all have `d` points.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BranchedCover {
    theta: Vec<u32>,
    y_size: usize,
    d: usize,
    /// Fibres in domain order.
    fibers: Vec<Vec<u32>>,
    /// Position of each point inside its fibre.
    position: Vec<u32>,
}

impl BranchedCover {
    pub fn new(theta: Vec<u32>, y_size: usize) -> Result<Self> {
        if y_size == 0 || theta.is_empty() {
            return Err(Error::invalid("empty cover"));
        }
        let mut fibers = vec![Vec::new(); y_size];
        let mut position = vec![0u32; theta.len()];
        for (x, &y) in theta.iter().enumerate() {
            let y = y as usize;
            if y >= y_size {
                return Err(Error::invalid(format!("θ({x}) = {y} is outside Y")));
            }
            position[x] = fibers[y].len() as u32;
            fibers[y].push(x as u32);
        }
        let d = fibers[0].len();
        if let Some((y, f)) = fibers.iter().enumerate().find(|(_, f)| f.len() != d) {
            return Err(Error::invalid(format!("θ is not {d}-to-one: fibre over {y} has {} points", f.len())));
        }
        if d == 0 {
            return Err(Error::invalid("θ is not surjective"));
        }
        Ok(BranchedCover { theta, y_size, d, fibers, position })
    }

    /// The projection `Y × Z → Y`, with `(y, z)` at index `y * d + z`.
    pub fn product(y_size: usize, d: usize) -> Result<Self> {
        BranchedCover::new((0..y_size * d).map(|x| (x / d) as u32).collect(), y_size)
    }

    pub fn theta(&self) -> &[u32] {
        &self.theta
    }

    pub fn x_size(&self) -> usize {
        self.theta.len()
    }

    pub fn y_size(&self) -> usize {
        self.y_size
    }

    pub fn fiber_size(&self) -> usize {
        self.d
    }

    pub fn fiber(&self, y: usize) -> &[u32] {
        &self.fibers[y]
    }

    pub fn position(&self, x: usize) -> usize {
        self.position[x] as usize
    }

    fn check_pair(&self, sigma: &PermutationRep, tau: &PermutationRep) -> Result<(Vec<u32>, Vec<u32>)> {
        let s = sigma.to_exact()?;
        let t = tau.to_exact()?;
        if s.size() != self.x_size() as u128 || t.size() != self.y_size as u128 {
            return Err(Error::invalid("permutation sizes do not match the cover"));
        }
        Ok((s.images().unwrap().to_vec(), t.images().unwrap().to_vec()))
    }

    /// d_H(θ∘σ, τ∘θ) on X.
    pub fn intertwining_defect(&self, sigma: &PermutationRep, tau: &PermutationRep) -> Result<f64> {
        let (s, t) = self.check_pair(sigma, tau)?;
        let bad = (0..s.len()).filter(|&x| self.theta[s[x] as usize] != t[self.theta[x] as usize]).count();
        Ok(bad as f64 / s.len() as f64)
    }

    pub fn write_scov(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        write_header(&mut w, SCOV_MAGIC, SCOV_VERSION, self.theta.len() as u64)?;
        w.write_all(&(self.y_size as u64).to_le_bytes())?;
        for &y in &self.theta {
            w.write_all(&(y as u64).to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_scov(path: &Path) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        let n = read_header(&mut r, SCOV_MAGIC, SCOV_VERSION)?;
        let y_size = read_u64(&mut r)?;
        let theta = read_u64s(&mut r, n)?
            .into_iter()
            .map(|y| u32::try_from(y).map_err(|_| Error::Format(format!("fibre label {y} does not fit"))))
            .collect::<Result<Vec<u32>>>()?;
        BranchedCover::new(theta, y_size as usize).map_err(|e| Error::Format(e.to_string()))
    }
}

pub const SCOV_MAGIC: &[u8; 4] = b"SCOV";
pub const SCOV_VERSION: u32 = 1;

/// Lifts σ to σ′ with θ∘σ′ = τ∘θ, changing σ only where θ∘σ and τ∘θ
/// disagree: inside each fibre pair (θ⁻¹(y), θ⁻¹(τy)) points already mapped
/// correctly keep their image and the rest are matched in index order.
pub fn lift_branched_cover(sigma: &PermutationRep, tau: &PermutationRep, theta: &BranchedCover) -> Result<PermutationRep> {
    let (s, t) = theta.check_pair(sigma, tau)?;
    PermutationRep::from_images(t.clone()).map_err(|_| Error::invalid("τ is not a bijection of Y"))?;
    let mut out = vec![0u32; s.len()];
    let mut taken = vec![false; s.len()];
    for (y, &target_y) in t.iter().enumerate().take(theta.y_size()) {
        let src = theta.fiber(y);
        let dst = theta.fiber(target_y as usize);
        let mut pending = Vec::new();
        for &x in src {
            let sx = s[x as usize];
            if theta.theta[sx as usize] == target_y {
                out[x as usize] = sx;
                taken[sx as usize] = true;
            } else {
                pending.push(x);
            }
        }
        let free: Vec<u32> = dst.iter().copied().filter(|&z| !taken[z as usize]).collect();
        for (x, z) in pending.into_iter().zip(free) {
            out[x as usize] = z;
            taken[z as usize] = true;
        }
    }
    PermutationRep::from_images(out)
}

/// Fibrewise permutations `c(g, y)` of `0..d` for a cover that intertwines
/// exactly: σ(g) sends the i-th point over y to the `c(g,y)(i)`-th point
/// over τ(g)y.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlmostCocycle {
    pub d: usize,
    /// `c[g][y]` as an image table on `0..d`.
    pub c: Vec<Vec<Vec<u32>>>,
    /// For each requested `(g, h, gh)`, the fraction of y with
    /// c(gh, y) ≠ c(g, τ(h)y) c(h, y).
    pub defects: Vec<((usize, usize, usize), f64)>,
}

impl AlmostCocycle {
    /// σ(g)(x) rebuilt from `τ(g)` and `c(g, ·)`.
    pub fn reconstruct(&self, g: usize, tau: &PermutationRep, theta: &BranchedCover) -> Result<PermutationRep> {
        let t = tau.to_exact()?;
        let t = t.images().unwrap();
        let mut out = vec![0u32; theta.x_size()];
        for (x, slot) in out.iter_mut().enumerate() {
            let y = theta.theta[x] as usize;
            let j = self.c[g][y][theta.position(x)];
            *slot = theta.fiber(t[y] as usize)[j as usize];
        }
        PermutationRep::from_images(out)
    }
}

/// Reads off `c(g, y)` for each pair `(sigma[g], tau[g])` and measures the
/// cocycle defect of every triple `(g, h, gh)` in `products`.
pub fn extract_almost_cocycle(
    sigma: &[PermutationRep],
    tau: &[PermutationRep],
    theta: &BranchedCover,
    products: &[(usize, usize, usize)],
) -> Result<AlmostCocycle> {
    if sigma.len() != tau.len() {
        return Err(Error::invalid("σ and τ lists differ in length"));
    }
    let d = theta.fiber_size();
    let mut c = Vec::with_capacity(sigma.len());
    let mut taus = Vec::with_capacity(tau.len());
    for (g, (sg, tg)) in sigma.iter().zip(tau).enumerate() {
        let (s, t) = theta.check_pair(sg, tg)?;
        let mut cg = vec![vec![0u32; d]; theta.y_size()];
        for x in 0..s.len() {
            let y = theta.theta[x] as usize;
            let sx = s[x] as usize;
            if theta.theta[sx] != t[y] {
                return Err(Error::Precondition(format!("generator {g}: θ∘σ ≠ τ∘θ at point {x}; lift the cover first")));
            }
            cg[y][theta.position(x)] = theta.position(sx) as u32;
        }
        c.push(cg);
        taus.push(t);
    }
    let mut defects = Vec::new();
    for &(g, h, gh) in products {
        if g.max(h).max(gh) >= c.len() {
            return Err(Error::invalid(format!("product triple ({g}, {h}, {gh}) is out of range")));
        }
        let bad = (0..theta.y_size())
            .filter(|&y| {
                let hy = taus[h][y] as usize;
                (0..d).any(|i| c[gh][y][i] != c[g][hy][c[h][y][i] as usize])
            })
            .count();
        defects.push(((g, h, gh), bad as f64 / theta.y_size() as f64));
    }
    Ok(AlmostCocycle { d, c, defects })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sofic::hamming::{d_hamming, HammingMode};
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_theta(y: usize, d: usize, rng: &mut ChaCha8Rng) -> BranchedCover {
        let mut theta: Vec<u32> = (0..y * d).map(|x| (x / d) as u32).collect();
        theta.shuffle(rng);
        BranchedCover::new(theta, y).unwrap()
    }

    #[test]
    fn cover_validation() {
        assert!(BranchedCover::new(vec![0, 0, 1], 2).is_err());
        assert!(BranchedCover::new(vec![0, 0, 2, 2], 3).is_err());
        assert!(BranchedCover::new(vec![0, 1, 1, 0], 2).is_ok());
    }

    #[test]
    fn lift_keeps_an_intertwining_sigma() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let theta = BranchedCover::product(20, 3).unwrap();
        let tau = PermutationRep::random(20, &mut rng);
        let t = tau.images().unwrap();
        let sigma: Vec<u32> = (0..60).map(|x| t[x / 3] * 3 + ((x % 3 + 1) % 3) as u32).collect();
        let sigma = PermutationRep::from_images(sigma).unwrap();
        assert_eq!(lift_branched_cover(&sigma, &tau, &theta).unwrap().images(), sigma.images());
    }

    #[test]
    fn lift_with_bijective_theta_is_forced() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut th: Vec<u32> = (0..50).collect();
        th.shuffle(&mut rng);
        let theta = BranchedCover::new(th.clone(), 50).unwrap();
        let tau = PermutationRep::random(50, &mut rng);
        let sigma = PermutationRep::random(50, &mut rng);
        let lifted = lift_branched_cover(&sigma, &tau, &theta).unwrap();
        let inv: Vec<u32> = PermutationRep::from_images(th.clone()).unwrap().inverse().images().unwrap().to_vec();
        for x in 0..50 {
            let expect = inv[tau.images().unwrap()[th[x] as usize] as usize];
            assert_eq!(lifted.images().unwrap()[x], expect);
        }
    }

    #[test]
    fn lift_postconditions_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let theta = random_theta(100, 10, &mut rng);
            let tau = PermutationRep::random(100, &mut rng);
            let sigma = PermutationRep::random(1000, &mut rng);
            let lifted = lift_branched_cover(&sigma, &tau, &theta).unwrap();
            assert_eq!(theta.intertwining_defect(&lifted, &tau).unwrap(), 0.0);
            let moved = d_hamming(&lifted, &sigma, &HammingMode::Exact).unwrap().value;
            assert!(moved <= theta.intertwining_defect(&sigma, &tau).unwrap() + 1e-12);
        }
    }

    #[test]
    fn product_with_identity_has_trivial_cocycle() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let theta = BranchedCover::product(30, 4).unwrap();
        let tau = PermutationRep::random(30, &mut rng);
        let t = tau.images().unwrap();
        let sigma = PermutationRep::from_images((0..120).map(|x| t[x / 4] * 4 + (x % 4) as u32).collect()).unwrap();
        let tt = tau.compose(&tau).unwrap();
        let ss = sigma.compose(&sigma).unwrap();
        let c = extract_almost_cocycle(&[sigma, ss], &[tau, tt], &theta, &[(0, 0, 1)]).unwrap();
        assert!(c.c.iter().flatten().all(|p| p.iter().enumerate().all(|(i, &j)| i as u32 == j)));
        assert_eq!(c.defects[0].1, 0.0);
    }

    #[test]
    fn non_intertwining_input_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let theta = BranchedCover::product(10, 2).unwrap();
        let tau = PermutationRep::random(10, &mut rng);
        let sigma = PermutationRep::random(20, &mut rng);
        if theta.intertwining_defect(&sigma, &tau).unwrap() > 0.0 {
            assert!(matches!(extract_almost_cocycle(&[sigma], &[tau], &theta, &[]), Err(Error::Precondition(_))));
        }
        let _ = rng.gen::<u8>();
    }

    #[test]
    fn scov_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.scov");
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let theta = random_theta(7, 5, &mut rng);
        theta.write_scov(&path).unwrap();
        assert_eq!(BranchedCover::read_scov(&path).unwrap(), theta);
    }
}
