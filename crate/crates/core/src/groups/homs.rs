//! Homomorphisms from free groups into PSL2, G_p, H_p × K_p and G̃_p, given
//! by generator images, and the generation checks the construction relies on.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{schreier_transversal, GpContext, GpElement, GtildeElement, ReducedWord};
use crate::algebra::{int_mat_inv, int_mat_mul, is_prime, next_prime, psl2_order, reduce_word_mod, IntMatrix, PSL2Element, Psl2Group};
use crate::error::{Error, Result};
use crate::f3vectors::{invariant_closure_dim, invariant_closure_dim_of, ApVector};

/// Largest number of transversal keys a direct Schreier or BFS check may store.
pub const CLOSURE_BUDGET: u64 = 4_000_000;

/// Largest quotient for which certificates enumerate H_p × K_p directly
/// rather than going through Goursat's lemma.
pub const DIRECT_CERTIFICATE_LIMIT: u64 = 1_000_000;

/// Codomain of a homomorphism.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Target {
    Psl2 { q: u32 },
    Gp { p: u32 },
    HxK { p: u32, r: u32 },
    Gtilde { p: u32, r: u32 },
}

impl Target {
    pub fn order(&self) -> u128 {
        match *self {
            Target::Psl2 { q } => psl2_order(q as u64) as u128,
            Target::Gp { p } => 3u128.pow(p) * psl2_order(p as u64) as u128,
            Target::HxK { p, r } => psl2_order(p as u64) as u128 * psl2_order(r as u64) as u128,
            Target::Gtilde { p, r } => 3u128.pow(p) * psl2_order(p as u64) as u128 * psl2_order(r as u64) as u128,
        }
    }

    pub fn identity(&self) -> GroupElement {
        match *self {
            Target::Psl2 { q } => GroupElement::Psl2(PSL2Element::identity(q)),
            Target::Gp { p } => GroupElement::Gp(GpElement::identity(p)),
            Target::HxK { p, r } => GroupElement::HxK(PSL2Element::identity(p), PSL2Element::identity(r)),
            Target::Gtilde { p, r } => GroupElement::Gtilde(GtildeElement::identity(p, r)),
        }
    }
}

/// An element of one of the target groups.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GroupElement {
    Psl2(PSL2Element),
    Gp(GpElement),
    HxK(PSL2Element, PSL2Element),
    Gtilde(GtildeElement),
}

impl GroupElement {
    pub fn target(&self) -> Target {
        match self {
            GroupElement::Psl2(h) => Target::Psl2 { q: h.modulus() },
            GroupElement::Gp(g) => Target::Gp { p: g.p() },
            GroupElement::HxK(h, k) => Target::HxK { p: h.modulus(), r: k.modulus() },
            GroupElement::Gtilde(x) => Target::Gtilde { p: x.g.p(), r: x.k.modulus() },
        }
    }

    pub fn try_mul(&self, o: &GroupElement) -> Result<GroupElement> {
        Ok(match (self, o) {
            (GroupElement::Psl2(x), GroupElement::Psl2(y)) => GroupElement::Psl2(x.try_mul(y)?),
            (GroupElement::Gp(x), GroupElement::Gp(y)) => GroupElement::Gp(x.try_mul(y)?),
            (GroupElement::HxK(h, k), GroupElement::HxK(h2, k2)) => GroupElement::HxK(h.try_mul(h2)?, k.try_mul(k2)?),
            (GroupElement::Gtilde(x), GroupElement::Gtilde(y)) => {
                GroupElement::Gtilde(GtildeElement { g: x.g.try_mul(&y.g)?, k: x.k.try_mul(&y.k)? })
            }
            _ => return Err(Error::invalid(format!("cannot multiply {:?} by {:?}", self.target(), o.target()))),
        })
    }

    pub fn inv(&self) -> GroupElement {
        match self {
            GroupElement::Psl2(x) => GroupElement::Psl2(x.inv()),
            GroupElement::Gp(x) => GroupElement::Gp(x.inv()),
            GroupElement::HxK(h, k) => GroupElement::HxK(h.inv(), k.inv()),
            GroupElement::Gtilde(x) => GroupElement::Gtilde(x.inv()),
        }
    }

    pub fn is_identity(&self) -> bool {
        match self {
            GroupElement::Psl2(x) => x.is_identity(),
            GroupElement::Gp(x) => x.is_identity(),
            GroupElement::HxK(h, k) => h.is_identity() && k.is_identity(),
            GroupElement::Gtilde(x) => x.is_identity(),
        }
    }

    pub fn as_psl2(&self) -> Option<PSL2Element> {
        match self {
            GroupElement::Psl2(x) => Some(*x),
            _ => None,
        }
    }

    pub fn as_gp(&self) -> Option<GpElement> {
        match self {
            GroupElement::Gp(x) => Some(*x),
            _ => None,
        }
    }

    pub fn as_hxk(&self) -> Option<(PSL2Element, PSL2Element)> {
        match self {
            GroupElement::HxK(h, k) => Some((*h, *k)),
            _ => None,
        }
    }

    pub fn as_gtilde(&self) -> Option<GtildeElement> {
        match self {
            GroupElement::Gtilde(x) => Some(*x),
            _ => None,
        }
    }
}

/// Free group a homomorphism is defined on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    /// Free on `a_1, ..., a_{m-1}`.
    Gamma,
    /// Free on `a_1, ..., a_{m-1}, t`.
    Sigma,
    /// Free on `b_1, ..., b_k`.
    Lambda,
}

impl Source {
    pub fn generator_names(&self, m: u32, k: u32) -> Vec<String> {
        match self {
            Source::Gamma => (1..m).map(|i| format!("a{i}")).collect(),
            Source::Sigma => (1..m).map(|i| format!("a{i}")).chain(std::iter::once("t".to_string())).collect(),
            Source::Lambda => (1..=k).map(|j| format!("b{j}")).collect(),
        }
    }
}

/// A homomorphism from a free group, given by its generator images.
#[derive(Clone, Debug, PartialEq)]
pub struct HomSpec {
    pub name: String,
    pub p: u32,
    pub r: u32,
    pub m: u32,
    pub k: u32,
    pub source: Source,
    pub target: Target,
    pub images: Vec<GroupElement>,
}

impl HomSpec {
    pub fn new(name: &str, params: (u32, u32, u32, u32), source: Source, target: Target, images: Vec<GroupElement>) -> Result<Self> {
        let (p, r, m, k) = params;
        let expected = source.generator_names(m, k).len();
        if images.len() != expected {
            return Err(Error::invalid(format!("{name}: {} images for {expected} generators", images.len())));
        }
        if let Some(bad) = images.iter().find(|x| x.target() != target) {
            return Err(Error::invalid(format!("{name}: image in {:?}, expected {target:?}", bad.target())));
        }
        Ok(HomSpec { name: name.to_string(), p, r, m, k, source, target, images })
    }

    pub fn rank(&self) -> usize {
        self.images.len()
    }

    pub fn generator_names(&self) -> Vec<String> {
        self.source.generator_names(self.m, self.k)
    }

    pub fn image(&self, gen: usize) -> Result<&GroupElement> {
        self.images.get(gen).ok_or(Error::OutOfRange { index: gen as u64, bound: self.images.len() as u64 })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&HomSpecDoc::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: HomSpecDoc = serde_json::from_str(s)?;
        doc.into_spec()
    }
}

/// Evaluates `w` under `spec`: the product of generator images along the word.
pub fn hom_eval(spec: &HomSpec, w: &ReducedWord) -> Result<GroupElement> {
    let mut acc = spec.target.identity();
    for l in w.letters() {
        let g = spec
            .images
            .get(l.gen as usize)
            .ok_or_else(|| Error::invalid(format!("{}: unknown generator id {} (rank {})", spec.name, l.gen, spec.rank())))?;
        let g = if l.inverse { g.inv() } else { *g };
        acc = acc.try_mul(&g)?;
    }
    Ok(acc)
}

/// Integer avatar `B^i A B^-i` with `A = [[1,2],[0,1]]`, `B = [[1,0],[2,1]]`.
pub fn sanov_avatar(i: u32) -> IntMatrix {
    let a: IntMatrix = [[1, 2], [0, 1]];
    let bi: IntMatrix = [[1, 0], [2 * i as i64, 1]];
    int_mat_mul(&int_mat_mul(&bi, &a), &int_mat_inv(&bi))
}

/// Outcome of one named generation check.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// All homomorphisms of the construction at one prime.
#[derive(Clone, Debug)]
pub struct HomSpecs {
    pub p: u32,
    pub r: u32,
    pub m: u32,
    pub k: u32,
    /// ξ_p on Σ.
    pub xi: HomSpec,
    /// ψ_p on Σ.
    pub psi: HomSpec,
    /// ξ_p on Λ.
    pub xi_lambda: HomSpec,
    /// ψ_p on Λ.
    pub psi_lambda: HomSpec,
    pub phi: HomSpec,
    pub rho: HomSpec,
    pub zeta: HomSpec,
    pub eta: HomSpec,
    pub phi_tilde: HomSpec,
    pub rho_tilde: HomSpec,
    pub checks: Vec<GenerationCheck>,
}

impl HomSpecs {
    pub fn all(&self) -> [&HomSpec; 10] {
        [
            &self.xi,
            &self.psi,
            &self.xi_lambda,
            &self.psi_lambda,
            &self.phi,
            &self.rho,
            &self.zeta,
            &self.eta,
            &self.phi_tilde,
            &self.rho_tilde,
        ]
    }

    /// h_p, the image of `[[1,1],[0,1]]`.
    pub fn h_p(&self) -> PSL2Element {
        PSL2Element::new(1, 1, 0, 1, self.p).expect("p prime")
    }
}

/// Validates `(p, m, k)` without building anything.
pub fn check_parameters(p: u32, m: u32, k: u32) -> Result<()> {
    if !is_prime(p as u64) || p % 3 != 1 {
        return Err(Error::invalid(format!("p = {p}: p not prime ≡ 1 mod 3")));
    }
    if p > crate::f3vectors::MAX_INDEXED_P {
        return Err(Error::Unsupported(format!("p = {p} exceeds the supported range (p ≤ {})", crate::f3vectors::MAX_INDEXED_P)));
    }
    if m < 5 {
        return Err(Error::invalid(format!("m = {m}: the construction requires m ≥ 5")));
    }
    if k < 3 {
        return Err(Error::invalid(format!("k = {k}: the construction requires k ≥ 3")));
    }
    if m > 1000 || k > 1000 {
        return Err(Error::invalid("m and k are limited to 1000 generators"));
    }
    Ok(())
}

/// Builds the homomorphisms without running generation checks.
pub fn construct_hom_specs(p: u32, m: u32, k: u32) -> Result<HomSpecs> {
    check_parameters(p, m, k)?;
    let r = next_prime(p as u64) as u32;
    let params = (p, r, m, k);
    let avatar = |i: u32, q: u32| reduce_word_mod(&[sanov_avatar(i)], q);

    let xi_s: Vec<PSL2Element> = (1..=m).map(|i| avatar(i, p)).collect::<Result<_>>()?;
    let psi_s: Vec<PSL2Element> = (1..=m).map(|i| avatar(i, r)).collect::<Result<_>>()?;
    let xi_l: Vec<PSL2Element> = (1..=k).map(|j| avatar(j, p)).collect::<Result<_>>()?;
    let psi_l: Vec<PSL2Element> = (1..=k).map(|j| avatar(j, r)).collect::<Result<_>>()?;

    let v1 = ApVector::v1(p)?;
    let v2 = ApVector::v2(p)?;
    let v = ApVector::v(p)?;
    let phi: Vec<GpElement> = (1..m)
        .map(|i| {
            let h = xi_s[i as usize - 1];
            let a = if i == m - 2 {
                v1
            } else if i == m - 1 {
                v2
            } else {
                ApVector::zero(p)
            };
            GpElement { a, h }
        })
        .collect();
    let rho: Vec<GpElement> = (1..=k)
        .map(|j| {
            let h = xi_l[j as usize - 1];
            if j == k {
                GpElement { a: crate::f3vectors::permute_coords(&crate::f3vectors::coordinate_permutation(&h), &v), h }
            } else {
                GpElement::from_h(h)
            }
        })
        .collect();
    let zeta: Vec<PSL2Element> = (1..=k).map(|j| if j == k { PSL2Element::identity(r) } else { psi_l[j as usize - 1] }).collect();

    let gamma = (m - 1) as usize;
    let psl = |q| Target::Psl2 { q };
    let spec = HomSpec::new;
    Ok(HomSpecs {
        p,
        r,
        m,
        k,
        xi: spec("xi", params, Source::Sigma, psl(p), xi_s.iter().map(|&h| GroupElement::Psl2(h)).collect())?,
        psi: spec("psi", params, Source::Sigma, psl(r), psi_s.iter().map(|&h| GroupElement::Psl2(h)).collect())?,
        xi_lambda: spec("xi_lambda", params, Source::Lambda, psl(p), xi_l.iter().map(|&h| GroupElement::Psl2(h)).collect())?,
        psi_lambda: spec("psi_lambda", params, Source::Lambda, psl(r), psi_l.iter().map(|&h| GroupElement::Psl2(h)).collect())?,
        phi: spec("phi", params, Source::Gamma, Target::Gp { p }, phi.iter().map(|&g| GroupElement::Gp(g)).collect())?,
        rho: spec("rho", params, Source::Lambda, Target::Gp { p }, rho.iter().map(|&g| GroupElement::Gp(g)).collect())?,
        zeta: spec("zeta", params, Source::Lambda, psl(r), zeta.iter().map(|&h| GroupElement::Psl2(h)).collect())?,
        eta: spec("eta", params, Source::Gamma, Target::HxK { p, r }, (0..gamma).map(|i| GroupElement::HxK(xi_s[i], psi_s[i])).collect())?,
        phi_tilde: spec(
            "phi_tilde",
            params,
            Source::Gamma,
            Target::Gtilde { p, r },
            (0..gamma).map(|i| GroupElement::Gtilde(GtildeElement { g: phi[i], k: psi_s[i] })).collect(),
        )?,
        rho_tilde: spec(
            "rho_tilde",
            params,
            Source::Lambda,
            Target::Gtilde { p, r },
            (0..k as usize).map(|j| GroupElement::Gtilde(GtildeElement { g: rho[j], k: zeta[j] })).collect(),
        )?,
        checks: Vec::new(),
    })
}

/// Builds all homomorphisms at `p` and runs every generation check the
/// construction needs, failing on the first one that does not hold.
pub fn build_hom_specs(p: u32, m: u32, k: u32) -> Result<HomSpecs> {
    let mut specs = construct_hom_specs(p, m, k)?;
    let r = specs.r;
    let mut checks = Vec::new();
    let mut record = |name: &str, passed: bool, detail: String| -> Result<()> {
        checks.push(GenerationCheck { name: name.to_string(), passed, detail: detail.clone() });
        if passed {
            Ok(())
        } else {
            Err(Error::Generation { check: name.to_string(), detail })
        }
    };

    let h_p = specs.h_p();
    record("h_p^2 != e", !h_p.pow(2).is_identity(), format!("h_p has order {}", h_p.order()))?;

    let eta_sub: Vec<(PSL2Element, PSL2Element)> =
        specs.eta.images[..(m - 3) as usize].iter().map(|x| x.as_hxk().expect("H x K image")).collect();
    let c = hxk_generation(&eta_sub, p, r)?;
    record("eta(<a_1..a_{m-3}>) = H_p x K_p", c.onto, c.detail())?;

    let xi_sub: Vec<PSL2Element> = specs.xi_lambda.images[..(k - 1) as usize].iter().map(|x| x.as_psl2().unwrap()).collect();
    let n = psl2_closure_order(&xi_sub)?;
    record("xi(<b_1..b_{k-1}>) = H_p", n == psl2_order(p as u64), format!("closure order {n} of {}", psl2_order(p as u64)))?;

    let psi_sub: Vec<PSL2Element> = specs.psi_lambda.images[..(k - 1) as usize].iter().map(|x| x.as_psl2().unwrap()).collect();
    let n = psl2_closure_order(&psi_sub)?;
    record("psi(<b_1..b_{k-1}>) = K_p", n == psl2_order(r as u64), format!("closure order {n} of {}", psl2_order(r as u64)))?;

    for spec in [&specs.phi, &specs.rho, &specs.phi_tilde, &specs.rho_tilde] {
        let c = verify_surjectivity(spec)?;
        record(&format!("{} onto {}", spec.name, target_name(&spec.target)), c.onto, c.detail())?;
    }
    specs.checks = checks;
    Ok(specs)
}

fn target_name(t: &Target) -> String {
    match t {
        Target::Psl2 { q } => format!("PSL2(F_{q})"),
        Target::Gp { p } => format!("G_{p}"),
        Target::HxK { p, r } => format!("H_{p} x K_{r}"),
        Target::Gtilde { p, .. } => format!("G~_{p}"),
    }
}

/// Order of the subgroup of PSL2(F_q) generated by `gens`.
pub fn psl2_closure_order(gens: &[PSL2Element]) -> Result<u64> {
    let Some(first) = gens.first() else { return Ok(1) };
    let q = first.modulus();
    if gens.iter().any(|g| g.modulus() != q) {
        return Err(Error::invalid("generators over different moduli"));
    }
    super::bfs_closure_order(gens, PSL2Element::identity(q), |a, b| a.mul_unchecked(b), Some(psl2_order(q as u64)), CLOSURE_BUDGET)
}

/// Evidence for or against a homomorphism being onto its target.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurjectivityCertificate {
    pub onto: bool,
    /// `"bfs"`, `"schreier"` or `"goursat"`.
    pub method: String,
    /// Order reached for the quotient by A_p (the whole group for PSL2 targets).
    pub quotient_order: u128,
    pub expected_quotient_order: u128,
    /// A-part of an image element with trivial quotient part whose invariant
    /// closure is all of A_p.
    pub witness: Option<Vec<u8>>,
    pub closure_dim: usize,
    pub diagnostics: Vec<String>,
}

impl SurjectivityCertificate {
    pub fn detail(&self) -> String {
        let mut s = format!(
            "{}: quotient {} of {}, closure dim {}",
            self.method, self.quotient_order, self.expected_quotient_order, self.closure_dim
        );
        for d in &self.diagnostics {
            s.push_str("; ");
            s.push_str(d);
        }
        s
    }
}

/// Checks whether the images of `spec` generate its target.
///
/// For G_p: the H-parts must generate H_p and the kernel of the projection to
/// H_p, read off from Schreier generators, must contain a vector whose
/// invariant closure is all of A_p. For G̃_p the same criterion runs over
/// H_p × K_p when it fits the budget, and otherwise via Goursat's lemma: G_p
/// and K_p share no nontrivial quotient since the quotients of G_p are G_p,
/// H_p and 1.
pub fn verify_surjectivity(spec: &HomSpec) -> Result<SurjectivityCertificate> {
    match spec.target {
        Target::Psl2 { q } => {
            let gens: Vec<PSL2Element> = spec.images.iter().filter_map(|x| x.as_psl2()).collect();
            let n = psl2_closure_order(&gens)? as u128;
            let full = psl2_order(q as u64) as u128;
            Ok(SurjectivityCertificate {
                onto: n == full,
                method: "bfs".into(),
                quotient_order: n,
                expected_quotient_order: full,
                witness: None,
                closure_dim: 0,
                diagnostics: vec![],
            })
        }
        Target::HxK { p, r } => {
            let gens: Vec<(PSL2Element, PSL2Element)> = spec.images.iter().filter_map(|x| x.as_hxk()).collect();
            hxk_generation(&gens, p, r)
        }
        Target::Gp { p } => {
            let gens: Vec<GpElement> = spec.images.iter().filter_map(|x| x.as_gp()).collect();
            gp_surjectivity(&gens, p)
        }
        Target::Gtilde { p, r } => {
            let gens: Vec<GtildeElement> = spec.images.iter().filter_map(|x| x.as_gtilde()).collect();
            gtilde_surjectivity(&gens, p, r)
        }
    }
}

/// Whether `gens` generate H_p × K_r, by BFS within budget or else by
/// Goursat on the two simple, non-isomorphic factors.
pub fn hxk_generation(gens: &[(PSL2Element, PSL2Element)], p: u32, r: u32) -> Result<SurjectivityCertificate> {
    let (hp, kr) = (psl2_order(p as u64), psl2_order(r as u64));
    let full = hp as u128 * kr as u128;
    if full <= DIRECT_CERTIFICATE_LIMIT as u128 {
        let n = super::bfs_closure_order(
            gens,
            (PSL2Element::identity(p), PSL2Element::identity(r)),
            |x, y| (x.0.mul_unchecked(&y.0), x.1.mul_unchecked(&y.1)),
            Some(full as u64),
            CLOSURE_BUDGET,
        )? as u128;
        return Ok(SurjectivityCertificate {
            onto: n == full,
            method: "bfs".into(),
            quotient_order: n,
            expected_quotient_order: full,
            witness: None,
            closure_dim: 0,
            diagnostics: vec![],
        });
    }
    let h: Vec<PSL2Element> = gens.iter().map(|x| x.0).collect();
    let k: Vec<PSL2Element> = gens.iter().map(|x| x.1).collect();
    let nh = psl2_closure_order(&h)?;
    let nk = psl2_closure_order(&k)?;
    Ok(SurjectivityCertificate {
        onto: nh == hp && nk == kr && p != r,
        method: "goursat".into(),
        quotient_order: nh as u128 * nk as u128,
        expected_quotient_order: full,
        witness: None,
        closure_dim: 0,
        diagnostics: vec![format!("projections reach {nh} of {hp} and {nk} of {kr}")],
    })
}

/// Kernel evidence from Schreier generators: the first vector with full
/// invariant closure, and the closure dimension of all of them together.
fn kernel_evidence(vectors: &[ApVector], p: u32) -> (Option<Vec<u8>>, usize) {
    for w in vectors {
        if invariant_closure_dim(w) == p as usize {
            return (Some(w.coords()), p as usize);
        }
    }
    (None, invariant_closure_dim_of(vectors))
}

fn gp_surjectivity(gens: &[GpElement], p: u32) -> Result<SurjectivityCertificate> {
    let ctx = GpContext::new(p)?;
    let hg = ctx.h_group();
    let reps = schreier_transversal(gens, GpElement::identity(p), |x, y| ctx.mul(x, y), |x| hg.index_of(&x.h), CLOSURE_BUDGET)?;
    let mut keys: Vec<usize> = reps.keys().copied().collect();
    keys.sort_unstable();
    let mut kernel = Vec::new();
    for key in &keys {
        let x = &reps[key];
        for g in gens {
            let y = ctx.mul(x, g);
            let z = ctx.mul(&y, &ctx.inv(&reps[&hg.index_of(&y.h)]));
            debug_assert!(z.h.is_identity());
            if !z.a.is_zero() {
                kernel.push(z.a);
            }
        }
    }
    let (witness, closure_dim) = kernel_evidence(&kernel, p);
    let hp = ctx.h_order() as u128;
    let quotient = reps.len() as u128;
    let mut diagnostics = vec![];
    if kernel.is_empty() {
        diagnostics.push("image meets A_p trivially".to_string());
    }
    Ok(SurjectivityCertificate {
        onto: quotient == hp && closure_dim == p as usize,
        method: "schreier".into(),
        quotient_order: quotient,
        expected_quotient_order: hp,
        witness,
        closure_dim,
        diagnostics,
    })
}

fn gtilde_surjectivity(gens: &[GtildeElement], p: u32, r: u32) -> Result<SurjectivityCertificate> {
    let ctx = GpContext::new(p)?;
    let kg = Psl2Group::enumerate(r)?;
    let hp = ctx.h_order();
    let kr = kg.order() as u64;
    let expected = hp as u128 * kr as u128;
    if expected <= DIRECT_CERTIFICATE_LIMIT as u128 {
        let hg = ctx.h_group();
        let key = |x: &GtildeElement| hg.index_of(&x.g.h) as u64 * kr + kg.index_of(&x.k) as u64;
        let mul = |x: &GtildeElement, y: &GtildeElement| GtildeElement { g: ctx.mul(&x.g, &y.g), k: x.k.mul_unchecked(&y.k) };
        let reps: HashMap<u64, GtildeElement> = schreier_transversal(gens, GtildeElement::identity(p, r), mul, key, CLOSURE_BUDGET)?;
        let mut keys: Vec<u64> = reps.keys().copied().collect();
        keys.sort_unstable();
        let mut kernel = Vec::new();
        let mut witness = None;
        for kk in &keys {
            let x = &reps[kk];
            for g in gens {
                let y = mul(x, g);
                let z = mul(&y, &reps[&key(&y)].inv());
                if !z.g.a.is_zero() {
                    if invariant_closure_dim(&z.g.a) == p as usize {
                        witness = Some(z.g.a.coords());
                        break;
                    }
                    if kernel.len() < 4096 {
                        kernel.push(z.g.a);
                    }
                }
            }
            if witness.is_some() {
                break;
            }
        }
        let closure_dim = if witness.is_some() { p as usize } else { invariant_closure_dim_of(&kernel) };
        let quotient = reps.len() as u128;
        return Ok(SurjectivityCertificate {
            onto: quotient == expected && closure_dim == p as usize,
            method: "schreier".into(),
            quotient_order: quotient,
            expected_quotient_order: expected,
            witness,
            closure_dim,
            diagnostics: vec![],
        });
    }
    let g_part: Vec<GpElement> = gens.iter().map(|x| x.g).collect();
    let k_part: Vec<PSL2Element> = gens.iter().map(|x| x.k).collect();
    let gc = gp_surjectivity(&g_part, p)?;
    let nk = psl2_closure_order(&k_part)?;
    Ok(SurjectivityCertificate {
        onto: gc.onto && nk == kr && p != r,
        method: "goursat".into(),
        quotient_order: gc.quotient_order * nk as u128,
        expected_quotient_order: expected,
        witness: gc.witness,
        closure_dim: gc.closure_dim,
        diagnostics: vec![format!("G_{p} projection {}; K projection reaches {nk} of {kr}", if gc.onto { "onto" } else { "not onto" })],
    })
}

/// Serialized element: canonical PSL2 entries and A_p coordinates.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum ElementDoc {
    Psl2 { h: [u32; 4] },
    Gp { a: Vec<u8>, h: [u32; 4] },
    HxK { h: [u32; 4], k: [u32; 4] },
    Gtilde { a: Vec<u8>, h: [u32; 4], k: [u32; 4] },
}

/// Current HomSpec document version.
pub const HOMSPEC_VERSION: u32 = 1;

/// JSON layout of a HomSpec; fields are written in this order.
#[derive(Clone, Debug, Serialize, Deserialize)]
struct HomSpecDoc {
    version: u32,
    name: String,
    p: u32,
    r_p: u32,
    m: u32,
    k: u32,
    source: Source,
    generators: Vec<String>,
    target: Target,
    images: Vec<ElementDoc>,
}

impl From<&HomSpec> for HomSpecDoc {
    fn from(s: &HomSpec) -> Self {
        let images = s
            .images
            .iter()
            .map(|x| match x {
                GroupElement::Psl2(h) => ElementDoc::Psl2 { h: h.entries() },
                GroupElement::Gp(g) => ElementDoc::Gp { a: g.a.coords(), h: g.h.entries() },
                GroupElement::HxK(h, k) => ElementDoc::HxK { h: h.entries(), k: k.entries() },
                GroupElement::Gtilde(x) => ElementDoc::Gtilde { a: x.g.a.coords(), h: x.g.h.entries(), k: x.k.entries() },
            })
            .collect();
        HomSpecDoc {
            version: HOMSPEC_VERSION,
            name: s.name.clone(),
            p: s.p,
            r_p: s.r,
            m: s.m,
            k: s.k,
            source: s.source,
            generators: s.generator_names(),
            target: s.target,
            images,
        }
    }
}

fn psl2_from_entries(e: [u32; 4], q: u32) -> Result<PSL2Element> {
    let x = PSL2Element::new(e[0] as i64, e[1] as i64, e[2] as i64, e[3] as i64, q)?;
    if x.entries() != e {
        return Err(Error::Format(format!("entries {e:?} are not canonical mod {q}")));
    }
    Ok(x)
}

fn ap_from_coords(a: &[u8], p: u32) -> Result<ApVector> {
    if a.len() != p as usize + 1 {
        return Err(Error::Format(format!("A_p vector of length {} for p = {p}", a.len())));
    }
    if a.iter().any(|&c| c > 2) {
        return Err(Error::Format("A_p coordinates must lie in 0..=2".into()));
    }
    let coords: Vec<i64> = a.iter().map(|&c| c as i64).collect();
    ApVector::from_coords(&coords, p)
}

impl HomSpecDoc {
    fn into_spec(self) -> Result<HomSpec> {
        if self.version != HOMSPEC_VERSION {
            return Err(Error::Format(format!("unsupported HomSpec version {}", self.version)));
        }
        let images = self
            .images
            .iter()
            .map(|d| -> Result<GroupElement> {
                Ok(match (d, self.target) {
                    (ElementDoc::Psl2 { h }, Target::Psl2 { q }) => GroupElement::Psl2(psl2_from_entries(*h, q)?),
                    (ElementDoc::Gp { a, h }, Target::Gp { p }) => {
                        GroupElement::Gp(GpElement { a: ap_from_coords(a, p)?, h: psl2_from_entries(*h, p)? })
                    }
                    (ElementDoc::HxK { h, k }, Target::HxK { p, r }) => {
                        GroupElement::HxK(psl2_from_entries(*h, p)?, psl2_from_entries(*k, r)?)
                    }
                    (ElementDoc::Gtilde { a, h, k }, Target::Gtilde { p, r }) => GroupElement::Gtilde(GtildeElement {
                        g: GpElement { a: ap_from_coords(a, p)?, h: psl2_from_entries(*h, p)? },
                        k: psl2_from_entries(*k, r)?,
                    }),
                    _ => return Err(Error::Format(format!("image {d:?} does not belong to {:?}", self.target))),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let spec = HomSpec::new(&self.name, (self.p, self.r_p, self.m, self.k), self.source, self.target, images)?;
        if spec.generator_names() != self.generators {
            return Err(Error::Format("generator names do not match source".into()));
        }
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::f3vectors::h_act;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn specs7() -> HomSpecs {
        build_hom_specs(7, 5, 3).unwrap()
    }

    #[test]
    fn avatars_are_unipotent_conjugates() {
        assert_eq!(sanov_avatar(0), [[1, 2], [0, 1]]);
        assert_eq!(sanov_avatar(1), [[-3, 2], [-8, 5]]);
        for i in 0..6 {
            assert_eq!(crate::algebra::int_det(&sanov_avatar(i)), 1);
        }
    }

    #[test]
    fn generator_images_follow_the_construction() {
        let s = specs7();
        let phi1 = s.phi.images[0].as_gp().unwrap();
        assert!(phi1.a.is_zero());
        let rho_k = s.rho.images[2].as_gp().unwrap();
        let xi_k = s.xi_lambda.images[2].as_psl2().unwrap();
        assert_eq!(rho_k.a, h_act(&xi_k, &ApVector::v(7).unwrap()).unwrap());
        assert_eq!(rho_k.h, xi_k);
        assert!(s.zeta.images[2].is_identity());
        assert_eq!(s.phi.images[2].as_gp().unwrap().a, ApVector::v1(7).unwrap());
        assert_eq!(s.phi.images[3].as_gp().unwrap().a, ApVector::v2(7).unwrap());
        for i in 0..2 {
            let (h, k) = s.eta.images[i].as_hxk().unwrap();
            let t = s.phi_tilde.images[i].as_gtilde().unwrap();
            assert_eq!((t.g.h, t.k), (h, k));
            assert!(t.g.a.is_zero());
        }
        assert_eq!(s.r, 11);
        assert!(s.checks.iter().all(|c| c.passed));
    }

    #[test]
    fn eta_closure_is_full_product() {
        let s = specs7();
        let gens: Vec<_> = s.eta.images[..2].iter().map(|x| x.as_hxk().unwrap()).collect();
        let n = crate::groups::bfs_closure_order(
            &gens,
            (PSL2Element::identity(7), PSL2Element::identity(11)),
            |x, y| (x.0.mul_unchecked(&y.0), x.1.mul_unchecked(&y.1)),
            None,
            CLOSURE_BUDGET,
        )
        .unwrap();
        assert_eq!(n, 110_880);
        let xi: Vec<_> = s.xi_lambda.images[..2].iter().map(|x| x.as_psl2().unwrap()).collect();
        assert_eq!(psl2_closure_order(&xi).unwrap(), 168);
    }

    #[test]
    fn surjectivity_at_seven() {
        let s = specs7();
        for spec in [&s.phi, &s.rho, &s.phi_tilde, &s.rho_tilde] {
            let c = verify_surjectivity(spec).unwrap();
            assert!(c.onto, "{}: {}", spec.name, c.detail());
            assert_eq!(c.closure_dim, 7);
        }
    }

    #[test]
    fn goursat_route_agrees_with_schreier() {
        let s = specs7();
        let gens: Vec<GtildeElement> = s.rho_tilde.images.iter().map(|x| x.as_gtilde().unwrap()).collect();
        let g: Vec<GpElement> = gens.iter().map(|x| x.g).collect();
        assert!(gp_surjectivity(&g, 7).unwrap().onto);
        let k: Vec<PSL2Element> = gens.iter().map(|x| x.k).collect();
        assert_eq!(psl2_closure_order(&k).unwrap(), 660);
    }

    #[test]
    fn zero_a_parts_are_not_onto() {
        let s = specs7();
        let images = s.rho.images.iter().map(|x| GroupElement::Gp(GpElement::from_h(x.as_gp().unwrap().h))).collect();
        let spec = HomSpec::new("flat", (7, 11, 5, 3), Source::Lambda, Target::Gp { p: 7 }, images).unwrap();
        let c = verify_surjectivity(&spec).unwrap();
        assert!(!c.onto);
        assert_eq!(c.quotient_order, 168);
        assert_eq!(c.closure_dim, 0);
    }

    #[test]
    fn parameter_errors() {
        assert!(matches!(build_hom_specs(4, 5, 3), Err(Error::InvalidArgument(m)) if m.contains("1 mod 3")));
        assert!(matches!(build_hom_specs(7, 4, 3), Err(Error::InvalidArgument(m)) if m.contains("m ≥ 5")));
        assert!(matches!(build_hom_specs(7, 5, 2), Err(Error::InvalidArgument(m)) if m.contains("k ≥ 3")));
        assert!(build_hom_specs(11, 5, 3).is_err());
    }

    #[test]
    fn json_round_trip() {
        let s = specs7();
        for spec in s.all() {
            let back = HomSpec::from_json(&spec.to_json().unwrap()).unwrap();
            assert_eq!(&back, spec);
        }
        let mut doc: serde_json::Value = serde_json::from_str(&s.phi.to_json().unwrap()).unwrap();
        doc["version"] = 99.into();
        assert!(HomSpec::from_json(&doc.to_string()).is_err());
    }

    #[test]
    fn unknown_generator_is_rejected() {
        let s = specs7();
        assert!(hom_eval(&s.rho, &ReducedWord::generator(3)).is_err());
        assert!(hom_eval(&s.rho, &ReducedWord::identity()).unwrap().is_identity());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn hom_eval_is_multiplicative(seed in any::<u64>(), lu in 0usize..12, lv in 0usize..12) {
            let s = construct_hom_specs(7, 5, 3).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u = ReducedWord::random(4, lu, &mut rng);
            let v = ReducedWord::random(4, lv, &mut rng);
            for spec in [&s.phi, &s.eta, &s.phi_tilde] {
                let uv = hom_eval(spec, &u.mul(&v)).unwrap();
                prop_assert_eq!(uv, hom_eval(spec, &u).unwrap().try_mul(&hom_eval(spec, &v).unwrap()).unwrap());
                prop_assert!(hom_eval(spec, &u.mul(&u.inverse())).unwrap().is_identity());
            }
            let t = hom_eval(&s.phi_tilde, &u).unwrap().as_gtilde().unwrap();
            prop_assert_eq!(GroupElement::Gp(t.g), hom_eval(&s.phi, &u).unwrap());
            let psi_u = hom_eval(&s.psi, &u).unwrap().as_psl2().unwrap();
            prop_assert_eq!(t.k, psi_u);
        }

        #[test]
        fn evaluation_ignores_cancelling_pairs(seed in any::<u64>(), len in 0usize..10, pos in 0usize..10, gen in 0u16..3) {
            let s = construct_hom_specs(7, 5, 3).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let w = ReducedWord::random(3, len, &mut rng);
            let mut letters = w.letters().to_vec();
            let at = pos.min(letters.len());
            letters.insert(at, crate::groups::Letter::new(gen));
            letters.insert(at + 1, crate::groups::Letter::inv(gen));
            let mut acc = s.rho.target.identity();
            for l in &letters {
                let g = s.rho.images[l.gen as usize];
                acc = acc.try_mul(&if l.inverse { g.inv() } else { g }).unwrap();
            }
            prop_assert_eq!(acc, hom_eval(&s.rho, &ReducedWord::new(letters)).unwrap());
        }
    }
}
