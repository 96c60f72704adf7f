//! Permutation representations, Hamming distance, the asymptotic
//! homomorphisms σ_p and σ̃_p, branched covers and induction.

pub mod approx;
pub mod cover;
pub mod hamming;
pub mod induce;
pub mod perm;
pub mod sigma;

pub use approx::{apply_seq, commutator_defect, displacement, fixed_fraction, hom_defect, Approximation, AsymptoticHom, ProductApprox};
pub use cover::{extract_almost_cocycle, lift_branched_cover, AlmostCocycle, BranchedCover};
pub use hamming::{d_hamming, distance_fn, hoeffding_radius, Estimate, HammingMode};
pub use induce::{induce_approximation, CosetAction, Induced, SchreierData};
pub use perm::{sidecar_path, PermutationRep};
pub use sigma::{build_sigma, build_tilde_sigma, lemma36_conditions, Lemma36Options, Lemma36Report, Sigma, TildeSigma};
