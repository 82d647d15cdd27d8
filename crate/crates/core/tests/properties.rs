//! Property tests for the cross-module invariants.

use ncvariety::berezin::{berezin_kernel, berezin_transform};
use ncvariety::fixtures::{random_commuting_member, random_matrix, random_strict_point, random_tensor_member};
use ncvariety::fock::{build_universal_model, TruncationGrid};
use ncvariety::linalg::{diff_norm, identity, min_eigenvalue, spectral_norm, CMat, C64};
use ncvariety::modeltheory::{factorize_psd, FactorizeOutcome};
use ncvariety::ncalg::{b_table, binomial, enumerate_words, DomainSpec, PositiveRegularPolynomial, Word};
use ncvariety::polydomain::{check_membership, iterated_limit, CpMaps, OperatorTuple, Purity, Tolerances};
use ncvariety::rkhs::{gram_matrix, kernel_value, kernel_value_cc, ScalarPoint};
use ncvariety::variety::{build_ideal_subspace, IdealSpec};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn enumerate_b(q: &PositiveRegularPolynomial, m: usize, alpha: &[usize]) -> f64 {
    if alpha.is_empty() {
        return 1.0;
    }
    // Sum over compositions into factors that are words of q, weighted by C(p+m−1, m−1).
    fn rec(q: &PositiveRegularPolynomial, m: usize, rest: &[usize], p: usize) -> f64 {
        if rest.is_empty() {
            return binomial(p + m - 1, m - 1);
        }
        (1..=rest.len()).map(|cut| q.coeffs.get(&Word(rest[..cut].to_vec())).map_or(0.0, |a| a * rec(q, m, &rest[cut..], p + 1))).sum()
    }
    rec(q, m, alpha, 0)
}

fn random_q(n: usize, extra: &[(Vec<usize>, u8)], linear: &[u8]) -> PositiveRegularPolynomial {
    let mut terms: Vec<(Vec<usize>, f64)> = (0..n).map(|j| (vec![j], 1.0 + linear[j] as f64)).collect();
    for (w, a) in extra {
        let w: Vec<usize> = w.iter().map(|x| x % n).collect();
        if w.len() > 1 && !terms.iter().any(|(t, _)| *t == w) {
            terms.push((w, *a as f64));
        }
    }
    let refs: Vec<(&[usize], f64)> = terms.iter().map(|(w, a)| (w.as_slice(), *a)).collect();
    PositiveRegularPolynomial::from_terms(n, &refs).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn b_table_matches_factorization_sum(
        n in 1usize..=3,
        m in 1usize..=3,
        linear in proptest::collection::vec(0u8..3, 3),
        extra in proptest::collection::vec((proptest::collection::vec(0usize..3, 2..=3), 1u8..3), 0..3),
    ) {
        let q = random_q(n, &extra, &linear);
        let table = b_table(&q, m, 5);
        for (idx, w) in enumerate_words(n, 5).iter().enumerate() {
            prop_assert_eq!(table[idx], enumerate_b(&q, m, &w.0));
        }
    }

    #[test]
    fn defect_steps_compose(seed in any::<u64>(), d in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = DomainSpec::polyball(&[2, 1], &[2, 1]);
        let t = random_tensor_member(&mut rng, &spec, &[d, 2]);
        let maps = CpMaps::new(&spec, &t.blocks);
        let y = random_matrix(&mut rng, t.dim);
        for p in [[0usize, 0], [1, 0], [0, 1], [1, 1]] {
            for i in 0..2 {
                let mut up = p;
                up[i] += 1;
                let dp = maps.defect(&p, &y);
                let expect = &dp - maps.phi(i, &dp);
                prop_assert!(diff_norm(&maps.defect(&up, &y), &expect) <= 1e-12 * (1.0 + spectral_norm(&y)));
            }
        }
    }

    #[test]
    fn kernel_isometry_equals_iterated_limit(seed in any::<u64>(), d in 2usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = DomainSpec::polyball(&[1, 2], &[2, 1]);
        let t = random_commuting_member(&mut rng, &spec, d);
        let w = build_universal_model(&spec, &TruncationGrid::new(vec![d, d]));
        let data = berezin_kernel(&w, &t, &Tolerances::default()).unwrap();
        let kk = data.k.adjoint() * &data.k;
        let limit = iterated_limit(&spec, &t, &identity(t.dim), d + 1);
        prop_assert!(diff_norm(&kk, &limit) <= 1e-10);
        prop_assert!(diff_norm(&kk, &identity(t.dim)) <= 1e-10);
    }

    #[test]
    fn berezin_transform_is_completely_positive(seed in any::<u64>(), d in 2usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = DomainSpec::ball(2, 1);
        let t = random_commuting_member(&mut rng, &spec, d);
        let w = build_universal_model(&spec, &TruncationGrid::new(vec![3]));
        let data = berezin_kernel(&w, &t, &Tolerances::default()).unwrap();
        let gs: Vec<CMat> = (0..3).map(|_| random_matrix(&mut rng, w.dim())).collect();
        let dim = t.dim;
        let mut block = CMat::zeros(3 * dim, 3 * dim);
        for i in 0..3 {
            for j in 0..3 {
                let b = berezin_transform(&data, &(gs[i].adjoint() * &gs[j])).unwrap();
                block.view_mut((i * dim, j * dim), (dim, dim)).copy_from(&b);
            }
        }
        prop_assert!(min_eigenvalue(&block) >= -1e-9 * (1.0 + spectral_norm(&block)));
    }

    #[test]
    fn truncated_universal_models_are_pure_members(n in 1usize..3, m in 1usize..3, d in 1usize..5) {
        let spec = DomainSpec::polyball(&[n, 1], &[m, 1]);
        let w = build_universal_model(&spec, &TruncationGrid::new(vec![d, 2]));
        let t = OperatorTuple::unchecked(w.dense_blocks()).unwrap();
        let rep = check_membership(&spec, &t, &Tolerances::default());
        prop_assert!(rep.is_member);
        prop_assert_eq!(rep.is_pure, Purity::Pure);
        prop_assert_eq!(rep.defect_rank, 1);
    }

    #[test]
    fn gram_matrices_are_psd(seed in any::<u64>(), m in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = DomainSpec::polyball(&[2, 1], &[m, 1]);
        let pts: Vec<ScalarPoint> = (0..12).map(|_| ScalarPoint::new(&spec, random_strict_point(&mut rng, &spec, 0.95)).unwrap()).collect();
        prop_assert!(gram_matrix(&spec, &pts, 1e-9).unwrap().psd);
    }

    #[test]
    fn diagonal_kernel_matches_block_kernel(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = DomainSpec::polydisc(3);
        let one = DomainSpec::ball(1, 1);
        let a = random_strict_point(&mut rng, &one, 0.9)[0][0];
        let b = random_strict_point(&mut rng, &one, 0.9)[0][0];
        let pa = ScalarPoint::new(&spec, vec![vec![a]; 3]).unwrap();
        let pb = ScalarPoint::new(&spec, vec![vec![b]; 3]).unwrap();
        let block = kernel_value(&spec, &pb, &pa).unwrap();
        let diag = kernel_value_cc(&spec, &[b], &[a]).unwrap();
        prop_assert!((block - diag).norm() <= 1e-12 * block.norm());
    }

    /// Exactly one of: a factor with ΓΓ* = G, or a refusal with a negative defect eigenvalue.
    #[test]
    fn factorization_or_refusal(seed in any::<u64>(), rank in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = build_ideal_subspace(&DomainSpec::ball(1, 2), &TruncationGrid::new(vec![3]), &IdealSpec::zero()).unwrap();
        let a = CMat::from_fn(model.dim(), rank, |_, _| C64::new(rand::Rng::random_range(&mut rng, -1.0..1.0), 0.0));
        let g = &a * a.adjoint();
        let g = &g / C64::new(spectral_norm(&g), 0.0);
        match factorize_psd(&model, &g, &Tolerances::default()).unwrap() {
            FactorizeOutcome::Factor(f) => {
                prop_assert!(f.factor_defect <= 1e-8);
                prop_assert!(f.gamma.intertwining_residual <= 1e-9);
            }
            FactorizeOutcome::Refused(e) => prop_assert!(e.min_eigen < -1e-9 * (1.0 + e.norm)),
        }
    }
}
