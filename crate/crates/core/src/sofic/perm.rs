//! Permutations of `0..N`, stored as an image table or as a pair of
//! forward/inverse callables when the domain is too large to enumerate.

use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// A point-to-point map on an indexed domain.
pub type PointFn = Arc<dyn Fn(u128) -> u128 + Send + Sync>;

/// Largest domain that may be materialised as an image table.
pub const EXACT_LIMIT: u128 = 1 << 31;

#[derive(Clone)]
pub enum PermutationRep {
    Exact(Arc<Vec<u32>>),
    Implicit { n: u128, forward: PointFn, inverse: PointFn },
}

impl fmt::Debug for PermutationRep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PermutationRep::Exact(v) => write!(f, "PermutationRep::Exact(N = {})", v.len()),
            PermutationRep::Implicit { n, .. } => write!(f, "PermutationRep::Implicit(N = {n})"),
        }
    }
}

impl PermutationRep {
    pub fn identity(n: usize) -> Self {
        PermutationRep::Exact(Arc::new((0..n as u32).collect()))
    }

    /// Validates that `images` is a bijection of `0..images.len()`.
    pub fn from_images(images: Vec<u32>) -> Result<Self> {
        validate_images(&images)?;
        Ok(PermutationRep::Exact(Arc::new(images)))
    }

    pub(crate) fn from_images_unchecked(images: Vec<u32>) -> Self {
        debug_assert!(validate_images(&images).is_ok());
        PermutationRep::Exact(Arc::new(images))
    }

    pub fn implicit(n: u128, forward: PointFn, inverse: PointFn) -> Self {
        PermutationRep::Implicit { n, forward, inverse }
    }

    pub fn transposition(n: usize, i: usize, j: usize) -> Result<Self> {
        if i >= n || j >= n {
            return Err(Error::OutOfRange { index: i.max(j) as u64, bound: n as u64 });
        }
        let mut v: Vec<u32> = (0..n as u32).collect();
        v.swap(i, j);
        Ok(PermutationRep::Exact(Arc::new(v)))
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        use rand::seq::SliceRandom;
        let mut v: Vec<u32> = (0..n as u32).collect();
        v.shuffle(rng);
        PermutationRep::Exact(Arc::new(v))
    }

    pub fn size(&self) -> u128 {
        match self {
            PermutationRep::Exact(v) => v.len() as u128,
            PermutationRep::Implicit { n, .. } => *n,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, PermutationRep::Exact(_))
    }

    pub fn images(&self) -> Option<&[u32]> {
        match self {
            PermutationRep::Exact(v) => Some(v),
            PermutationRep::Implicit { .. } => None,
        }
    }

    #[inline]
    pub fn apply(&self, x: u128) -> u128 {
        match self {
            PermutationRep::Exact(v) => v[x as usize] as u128,
            PermutationRep::Implicit { forward, .. } => forward(x),
        }
    }

    pub fn inverse(&self) -> PermutationRep {
        match self {
            PermutationRep::Exact(v) => {
                let mut inv = vec![0u32; v.len()];
                for (i, &y) in v.iter().enumerate() {
                    inv[y as usize] = i as u32;
                }
                PermutationRep::Exact(Arc::new(inv))
            }
            PermutationRep::Implicit { n, forward, inverse } => {
                PermutationRep::Implicit { n: *n, forward: inverse.clone(), inverse: forward.clone() }
            }
        }
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &PermutationRep) -> Result<PermutationRep> {
        if self.size() != other.size() {
            return Err(Error::invalid(format!("domain sizes {} and {} differ", self.size(), other.size())));
        }
        Ok(match (self, other) {
            (PermutationRep::Exact(a), PermutationRep::Exact(b)) => {
                PermutationRep::Exact(Arc::new(b.par_iter().map(|&x| a[x as usize]).collect()))
            }
            _ => {
                let (f1, f2) = (self.clone(), other.clone());
                let (g1, g2) = (self.inverse(), other.inverse());
                PermutationRep::Implicit {
                    n: self.size(),
                    forward: Arc::new(move |x| f1.apply(f2.apply(x))),
                    inverse: Arc::new(move |x| g2.apply(g1.apply(x))),
                }
            }
        })
    }

    /// Materialises the image table.
    pub fn to_exact(&self) -> Result<PermutationRep> {
        match self {
            PermutationRep::Exact(_) => Ok(self.clone()),
            PermutationRep::Implicit { n, forward, .. } => {
                if *n > EXACT_LIMIT {
                    return Err(Error::Resource(format!("domain of {n} points is too large to enumerate")));
                }
                let v: Vec<u32> = (0..*n as u64).into_par_iter().map(|x| forward(x as u128) as u32).collect();
                PermutationRep::from_images(v)
            }
        }
    }

    /// Exact tables are checked to be bijections; implicit ones are checked
    /// for `inverse(forward(x)) = x` on `samples` seeded points.
    pub fn validate(&self, samples: u64, seed: u64) -> Result<()> {
        match self {
            PermutationRep::Exact(v) => validate_images(v),
            PermutationRep::Implicit { n, forward, inverse } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                for _ in 0..samples {
                    let x = rng.gen_range(0..*n);
                    let y = forward(x);
                    if y >= *n || inverse(y) != x {
                        return Err(Error::Precondition(format!("implicit permutation fails inverse check at {x}")));
                    }
                }
                Ok(())
            }
        }
    }

    /// Number of fixed points of an exact permutation.
    pub fn fixed_points(&self) -> Option<u64> {
        self.images().map(|v| v.par_iter().enumerate().filter(|(i, &y)| *i as u32 == y).count() as u64)
    }

    /// Writes the SPRM binary file and a `.json` sidecar next to it.
    pub fn write_sprm(&self, path: &Path, sidecar: &serde_json::Value) -> Result<()> {
        let v = self.to_exact()?;
        let images = v.images().expect("exact");
        let mut w = BufWriter::new(File::create(path)?);
        write_header(&mut w, SPRM_MAGIC, SPRM_VERSION, images.len() as u64)?;
        for &y in images {
            w.write_all(&(y as u64).to_le_bytes())?;
        }
        w.flush()?;
        std::fs::write(sidecar_path(path), serde_json::to_string_pretty(sidecar)?)?;
        Ok(())
    }

    pub fn read_sprm(path: &Path) -> Result<PermutationRep> {
        let mut r = BufReader::new(File::open(path)?);
        let n = read_header(&mut r, SPRM_MAGIC, SPRM_VERSION)?;
        let images = read_u64s(&mut r, n)?
            .into_iter()
            .map(|y| u32::try_from(y).map_err(|_| Error::Format(format!("image {y} does not fit"))))
            .collect::<Result<Vec<u32>>>()?;
        PermutationRep::from_images(images)
    }
}

fn validate_images(images: &[u32]) -> Result<()> {
    let n = images.len();
    let mut seen = vec![false; n];
    for &y in images {
        let y = y as usize;
        if y >= n || seen[y] {
            return Err(Error::Precondition(format!("image table is not a bijection of 0..{n}")));
        }
        seen[y] = true;
    }
    Ok(())
}

pub const SPRM_MAGIC: &[u8; 4] = b"SPRM";
pub const SPRM_VERSION: u32 = 1;

/// `<path>.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub(crate) fn write_header<W: Write>(w: &mut W, magic: &[u8; 4], version: u32, n: u64) -> Result<()> {
    w.write_all(magic)?;
    w.write_all(&version.to_le_bytes())?;
    w.write_all(&n.to_le_bytes())?;
    Ok(())
}

pub(crate) fn read_header<R: Read>(r: &mut R, magic: &[u8; 4], version: u32) -> Result<u64> {
    let mut m = [0u8; 4];
    r.read_exact(&mut m)?;
    if &m != magic {
        return Err(Error::Format(format!("bad magic {:?}, expected {:?}", m, magic)));
    }
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4)?;
    let v = u32::from_le_bytes(b4);
    if v != version {
        return Err(Error::Format(format!("unsupported version {v}")));
    }
    read_u64(r)
}

pub(crate) fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8)?;
    Ok(u64::from_le_bytes(b8))
}

pub(crate) fn read_u64s<R: Read>(r: &mut R, n: u64) -> Result<Vec<u64>> {
    if n > EXACT_LIMIT as u64 {
        return Err(Error::Format(format!("declared length {n} is too large")));
    }
    let mut out = Vec::with_capacity(n as usize);
    for _ in 0..n {
        out.push(read_u64(r)?);
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Format("trailing bytes after payload".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_bijections() {
        assert!(PermutationRep::from_images(vec![0, 0, 1]).is_err());
        assert!(PermutationRep::from_images(vec![0, 3, 1]).is_err());
        assert!(PermutationRep::from_images(vec![2, 0, 1]).is_ok());
    }

    #[test]
    fn inverse_and_compose() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = PermutationRep::random(500, &mut rng);
        let b = PermutationRep::random(500, &mut rng);
        let id = a.compose(&a.inverse()).unwrap();
        assert_eq!(id.fixed_points(), Some(500));
        let ab = a.compose(&b).unwrap();
        for x in 0..500u128 {
            assert_eq!(ab.apply(x), a.apply(b.apply(x)));
        }
        let imp = PermutationRep::implicit(
            500,
            Arc::new({
                let a = a.clone();
                move |x| a.apply(x)
            }),
            Arc::new({
                let ai = a.inverse();
                move |x| ai.apply(x)
            }),
        );
        imp.validate(1000, 3).unwrap();
        let mixed = imp.compose(&b).unwrap();
        assert_eq!(mixed.to_exact().unwrap().images(), ab.images());
    }

    #[test]
    fn broken_implicit_is_caught() {
        let p = PermutationRep::implicit(10, Arc::new(|x| (x + 1) % 10), Arc::new(|x| x));
        assert!(p.validate(100, 1).is_err());
    }

    #[test]
    fn sprm_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.sprm");
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = PermutationRep::random(1000, &mut rng);
        a.write_sprm(&path, &serde_json::json!({"construction": "test"})).unwrap();
        let b = PermutationRep::read_sprm(&path).unwrap();
        assert_eq!(a.images(), b.images());
        assert!(sidecar_path(&path).exists());
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[..4], b"SPRM");
        assert_eq!(bytes.len(), 16 + 8 * 1000);
        let mut bad = bytes.clone();
        bad[0] = b'X';
        std::fs::write(&path, &bad).unwrap();
        assert!(matches!(PermutationRep::read_sprm(&path), Err(Error::Format(_))));
    }
}
