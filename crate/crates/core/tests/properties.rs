use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use soficlab::groups::FiniteGroup;
use soficlab::partition::{eta_overlap, invariance_defect, LabeledPartition, Matching};
use soficlab::sofic::{d_hamming, lift_branched_cover, BranchedCover, HammingMode, PermutationRep};
use soficlab::spectral::{boundary_ratio, BoundaryGenerator, SubsetDescriptor};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn shift(n: usize, s: usize) -> Vec<u32> {
    (0..n).map(|x| ((x + s) % n) as u32).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hamming_is_a_metric(n in 1usize..200, seed: u64) {
        let mut r = rng(seed);
        let (a, b, c) = (PermutationRep::random(n, &mut r), PermutationRep::random(n, &mut r), PermutationRep::random(n, &mut r));
        let d = |x: &PermutationRep, y: &PermutationRep| d_hamming(x, y, &HammingMode::Exact).unwrap().value;
        prop_assert_eq!(d(&a, &a), 0.0);
        prop_assert_eq!(d(&a, &b), d(&b, &a));
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-12);
        let ca = c.compose(&a).unwrap();
        let cb = c.compose(&b).unwrap();
        prop_assert!((d(&ca, &cb) - d(&a, &b)).abs() < 1e-12);
    }

    #[test]
    fn lift_always_intertwines(y in 1usize..40, deg in 1usize..8, seed: u64) {
        let mut r = rng(seed);
        let theta = BranchedCover::product(y, deg).unwrap();
        let sigma = PermutationRep::random(y * deg, &mut r);
        let tau = PermutationRep::random(y, &mut r);
        let lift = lift_branched_cover(&sigma, &tau, &theta).unwrap();
        prop_assert_eq!(theta.intertwining_defect(&lift, &tau).unwrap(), 0.0);
        let moved = d_hamming(&lift, &sigma, &HammingMode::Exact).unwrap().value;
        prop_assert!(moved <= theta.intertwining_defect(&sigma, &tau).unwrap() + 1e-12);
    }

    #[test]
    fn partition_scores_are_bounded(n in 2usize..300, blocks in 1u32..10, seed: u64) {
        let mut r = rng(seed);
        let labels: Vec<u64> = (0..n).map(|_| r.gen_range(0..blocks as u64)).collect();
        let part = LabeledPartition::from_labels(&labels).unwrap();
        let sigma = PermutationRep::random(n, &mut r);
        let eta = eta_overlap(&part, &sigma).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&eta));
        let greedy = invariance_defect(&part, &sigma, Matching::GreedyMaxOverlap).unwrap();
        let optimal = invariance_defect(&part, &sigma, Matching::OptimalAssignment).unwrap();
        prop_assert!(optimal.value <= greedy.value + 1e-12);
        prop_assert!((0.0..=2.0).contains(&optimal.value));
        let id = invariance_defect(&part, &PermutationRep::identity(n), Matching::OptimalAssignment).unwrap();
        prop_assert_eq!(id.value, 0.0);
    }

    #[test]
    fn coset_partitions_are_invariant_under_left_translation(n in 2usize..60, d in 1usize..8, s: usize) {
        let n = n * d;
        let part = LabeledPartition::new((0..n).map(|x| (x % d) as u32).collect()).unwrap();
        let sigma = PermutationRep::from_images(shift(n, s % n)).unwrap();
        prop_assert_eq!(invariance_defect(&part, &sigma, Matching::GreedyMaxOverlap).unwrap().value, 0.0);
        prop_assert_eq!(eta_overlap(&part, &sigma).unwrap(), 1.0);
    }

    #[test]
    fn boundary_is_inverse_symmetric(n in 2usize..200, s in 1usize..200, seed: u64) {
        let mut r = rng(seed);
        let members: Vec<bool> = (0..n).map(|_| r.gen_bool(0.3)).collect();
        let s = s % n;
        let t = SubsetDescriptor::Explicit(members);
        let fwd = boundary_ratio(&t, &[BoundaryGenerator::Table(shift(n, s))]).unwrap();
        let back = boundary_ratio(&t, &[BoundaryGenerator::Table(shift(n, n - s))]).unwrap();
        prop_assert_eq!(fwd.numerator, back.numerator);
        prop_assert!(fwd.ratio <= 2.0);
    }

    #[test]
    fn regular_representations_commute(seed: u64) {
        let g = FiniteGroup::symmetric(4).unwrap();
        let mut r = rng(seed);
        let (a, b) = (r.gen_range(0..24usize), r.gen_range(0..24usize));
        let left = PermutationRep::from_images(g.left_regular(a)).unwrap();
        let right = PermutationRep::from_images(g.right_regular(b)).unwrap();
        let (lr, rl) = (left.compose(&right).unwrap(), right.compose(&left).unwrap());
        prop_assert_eq!(lr.images(), rl.images());
    }
}
