//! Normalized Hamming distance between maps on an indexed domain, exact by
//! enumeration or estimated from seeded uniform samples.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::perm::{PermutationRep, EXACT_LIMIT};
use crate::error::{Error, Result};

/// Default failure probability for sampled estimates.
pub const DEFAULT_DELTA: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum HammingMode {
    Exact,
    Sampled { samples: u64, seed: Option<u64>, delta: f64 },
}

impl HammingMode {
    pub fn sampled(samples: u64, seed: u64) -> Self {
        HammingMode::Sampled { samples, seed: Some(seed), delta: DEFAULT_DELTA }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, HammingMode::Exact)
    }
}

/// A measured fraction of the domain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub exact: bool,
    /// Disagreements counted (exact: over the domain; sampled: over samples).
    pub count: u128,
    /// Domain size (exact) or number of samples.
    pub total: u128,
    pub radius: f64,
    pub confidence: f64,
    pub seed: Option<u64>,
}

impl Estimate {
    pub fn exact(count: u128, total: u128) -> Self {
        Estimate {
            value: if total == 0 { 0.0 } else { count as f64 / total as f64 },
            exact: true,
            count,
            total,
            radius: 0.0,
            confidence: 1.0,
            seed: None,
        }
    }

    /// Whether `bound` is consistent with this estimate from below.
    pub fn at_least(&self, bound: f64) -> bool {
        self.value + self.radius >= bound - 1e-12
    }

    pub fn at_most(&self, bound: f64) -> bool {
        self.value - self.radius <= bound + 1e-12
    }

    /// `1 - value`, with the same uncertainty.
    pub fn complement(&self) -> Estimate {
        Estimate { value: 1.0 - self.value, count: self.total - self.count, ..*self }
    }
}

/// Two-sided Hoeffding radius at confidence `1 - delta`.
pub fn hoeffding_radius(samples: u64, delta: f64) -> f64 {
    ((2.0 / delta).ln() / (2.0 * samples as f64)).sqrt()
}

/// Fraction of `0..n` where `f` and `g` disagree.
pub fn distance_fn<F, G>(n: u128, f: F, g: G, mode: &HammingMode) -> Result<Estimate>
where
    F: Fn(u128) -> u128 + Sync,
    G: Fn(u128) -> u128 + Sync,
{
    match *mode {
        HammingMode::Exact => {
            if n > EXACT_LIMIT {
                return Err(Error::Resource(format!("exact distance over {n} points refused; use sampled mode")));
            }
            let count = (0..n as u64).into_par_iter().filter(|&x| f(x as u128) != g(x as u128)).count();
            Ok(Estimate::exact(count as u128, n))
        }
        HammingMode::Sampled { samples, seed, delta } => {
            let seed = seed.ok_or_else(|| Error::invalid("sampled mode requires a seed"))?;
            if samples == 0 {
                return Err(Error::invalid("sampled mode requires at least one sample"));
            }
            if !(delta > 0.0 && delta < 1.0) {
                return Err(Error::invalid(format!("delta = {delta} must lie in (0, 1)")));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let points: Vec<u128> = (0..samples).map(|_| rng.gen_range(0..n)).collect();
            let count = points.par_iter().filter(|&&x| f(x) != g(x)).count() as u128;
            Ok(Estimate {
                value: count as f64 / samples as f64,
                exact: false,
                count,
                total: samples as u128,
                radius: hoeffding_radius(samples, delta),
                confidence: 1.0 - delta,
                seed: Some(seed),
            })
        }
    }
}

/// d_H(σ, τ) = |{x : σx ≠ τx}| / N.
pub fn d_hamming(sigma: &PermutationRep, tau: &PermutationRep, mode: &HammingMode) -> Result<Estimate> {
    if sigma.size() != tau.size() {
        return Err(Error::invalid(format!("domain sizes {} and {} differ", sigma.size(), tau.size())));
    }
    if let (HammingMode::Exact, Some(a), Some(b)) = (mode, sigma.images(), tau.images()) {
        let count = a.par_iter().zip(b.par_iter()).filter(|(x, y)| x != y).count();
        return Ok(Estimate::exact(count as u128, a.len() as u128));
    }
    distance_fn(sigma.size(), |x| sigma.apply(x), |x| tau.apply(x), mode)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_distances() {
        let id = PermutationRep::identity(50);
        assert_eq!(d_hamming(&id, &id, &HammingMode::Exact).unwrap().value, 0.0);
        let t = PermutationRep::transposition(50, 3, 17).unwrap();
        let e = d_hamming(&id, &t, &HammingMode::Exact).unwrap();
        assert_eq!((e.count, e.total), (2, 50));
        assert!(d_hamming(&id, &PermutationRep::identity(51), &HammingMode::Exact).is_err());
    }

    #[test]
    fn sampled_requires_seed() {
        let id = PermutationRep::identity(10);
        let m = HammingMode::Sampled { samples: 10, seed: None, delta: 0.01 };
        assert!(matches!(d_hamming(&id, &id, &m), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn sampled_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = PermutationRep::random(1000, &mut rng);
        let b = PermutationRep::random(1000, &mut rng);
        let m = HammingMode::sampled(500, 9);
        assert_eq!(d_hamming(&a, &b, &m).unwrap(), d_hamming(&a, &b, &m).unwrap());
    }

    #[test]
    fn sampled_agrees_with_exact_within_radius() {
        let n = 100_000usize;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        // a random pair agreeing on roughly 70% of points
        let a = PermutationRep::random(n, &mut rng);
        let mut bv: Vec<u32> = a.images().unwrap().to_vec();
        let moved: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.3)).collect();
        for w in moved.windows(2).step_by(2) {
            bv.swap(w[0], w[1]);
        }
        let b = PermutationRep::from_images(bv).unwrap();
        let exact = d_hamming(&a, &b, &HammingMode::Exact).unwrap();
        let mut covered = 0;
        for trial in 0..100 {
            let s = d_hamming(&a, &b, &HammingMode::sampled(2_000, trial)).unwrap();
            if (s.value - exact.value).abs() <= s.radius {
                covered += 1;
            }
        }
        assert!(covered >= 99, "covered {covered}/100");
    }

    #[test]
    fn radius_formula() {
        assert!((hoeffding_radius(1000, 0.05) - ((40f64).ln() / 2000.0).sqrt()).abs() < 1e-15);
    }
}
