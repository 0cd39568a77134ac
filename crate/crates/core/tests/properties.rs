use cpmmh::auxiliary::{propose_cn, propose_mixture, sample_prior, AuxProposalConfig};
use cpmmh::diagnostics::{iact, posterior_summary};
use cpmmh::estimators::{
    systematic_resample, EstimatorKind, IsScale, ModelSpec, Potential, PotentialEvaluator,
};
use cpmmh::models::PriorSpec;
use cpmmh::peskun::{build_transition, GridSpec, ZSpaceModel};
use cpmmh::sampler::{
    acceptance_probability, replicate_rng, run_pmmh, SamplerConfig, ThetaProposal,
};
use proptest::prelude::*;
use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn iact_is_affine_invariant(seed in 0u64..1000, a in 0.01f64..100.0, b in -50.0f64..50.0) {
        let mut rng = replicate_rng(seed, 0);
        let mut s = 0.0;
        let x: Vec<f64> = (0..2000)
            .map(|_| {
                s = 0.6 * s + rng.random::<f64>();
                s
            })
            .collect();
        let y: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        let (ix, iy) = (iact(&x, 100).unwrap(), iact(&y, 100).unwrap());
        prop_assert!((ix - iy).abs() < 1e-8 * ix.abs().max(1.0), "{} vs {}", ix, iy);
    }

    #[test]
    fn cn_step_keeps_shape_and_is_seeded(
        rows in 1usize..12,
        cols in 1usize..12,
        sigma_u in 0.01f64..=1.0,
        seed in any::<u64>(),
    ) {
        let u = sample_prior(rows, cols, &mut replicate_rng(seed, 0)).unwrap();
        let a = propose_cn(&u, sigma_u, &mut replicate_rng(seed, 1)).unwrap();
        let b = propose_cn(&u, sigma_u, &mut replicate_rng(seed, 1)).unwrap();
        prop_assert_eq!(a.shape(), (rows, cols));
        prop_assert_eq!(a, b);
    }

    #[test]
    fn mixture_keeps_shape(
        sigma_u in 0.0f64..=1.0,
        alpha in 0.01f64..=1.0,
        seed in any::<u64>(),
    ) {
        let cfg = AuxProposalConfig::new(sigma_u, alpha).unwrap();
        let mut rng = replicate_rng(seed, 0);
        let u = sample_prior(3, 4, &mut rng).unwrap();
        let (v, _) = propose_mixture(&u, &cfg, &mut rng);
        prop_assert_eq!(v.shape(), (3, 4));
    }

    #[test]
    fn systematic_offspring_within_one(
        raw in prop::collection::vec(0.0f64..1.0, 1..60),
        uniform in 0.0001f64..0.9999,
    ) {
        let total: f64 = raw.iter().sum();
        prop_assume!(total > 1e-6);
        let w: Vec<f64> = raw.iter().map(|v| v / total).collect();
        let idx = systematic_resample(&w, uniform).unwrap();
        let n = w.len();
        prop_assert_eq!(idx.len(), n);
        let mut counts = vec![0usize; n];
        for i in &idx {
            counts[*i] += 1;
        }
        for (c, wi) in counts.iter().zip(&w) {
            prop_assert!((*c as f64 - n as f64 * wi).abs() < 1.0 + 1e-9);
        }
        prop_assert!(idx.windows(2).all(|p| p[0] <= p[1]));
    }

    #[test]
    fn acceptance_probability_is_a_probability(
        a in -1e6f64..1e6,
        b in -1e6f64..1e6,
        q in -50.0f64..50.0,
    ) {
        let p = acceptance_probability(a, b, q);
        prop_assert!((0.0..=1.0).contains(&p));
    }

    #[test]
    fn potential_is_pure(mu in -0.99f64..0.99, seed in any::<u64>()) {
        let ev = PotentialEvaluator::new(
            ModelSpec::IidMean { sigma_v: 0.3, sigma_e: 0.1, scale: IsScale::Stddev },
            PriorSpec::iid_mean(-1.0, 1.0).unwrap(),
            vec![0.3, 0.6, 0.45],
            EstimatorKind::ImportanceSampling,
            7,
        ).unwrap();
        let u = sample_prior(3, 7, &mut replicate_rng(seed, 0)).unwrap();
        prop_assert_eq!(ev.potential(&[mu], &u).to_bits(), ev.potential(&[mu], &u).to_bits());
    }

    #[test]
    fn discretized_chain_is_reversible_and_stationary(
        sigma_phi in 0.0f64..3.5,
        sigma_z in 0.05f64..=1.0,
    ) {
        let chain = build_transition(
            &ZSpaceModel::new(sigma_phi, sigma_z).unwrap(),
            &GridSpec::around(sigma_phi, 100).unwrap(),
        ).unwrap();
        let p = chain.transition();
        let pi = chain.stationary();
        let l = chain.len();
        for i in 0..l {
            let row: f64 = p.row(i).iter().sum();
            prop_assert!((row - 1.0).abs() < 1e-10);
            for j in 0..l {
                prop_assert!(p[(i, j)] >= 0.0);
                if i != j {
                    let (f, b) = (pi[i] * p[(i, j)], pi[j] * p[(j, i)]);
                    prop_assert!((f - b).abs() <= 1e-8 * f.max(b) + 1e-300);
                }
            }
        }
        for j in 0..l {
            let flow: f64 = (0..l).map(|i| pi[i] * p[(i, j)]).sum();
            prop_assert!((flow - pi[j]).abs() < 1e-8);
        }
    }
}

#[test]
fn summary_acceptance_rate_is_mean_of_flags() {
    struct Quadratic;
    impl Potential for Quadratic {
        fn aux_shape(&self) -> (usize, usize) {
            (1, 2)
        }
        fn potential(&self, theta: &[f64], u: &cpmmh::auxiliary::AuxiliaryBlock) -> f64 {
            0.5 * theta[0] * theta[0] + 0.1 * u.get(0, 0).powi(2)
        }
    }
    let cfg = SamplerConfig::new(
        3000,
        vec![0.0],
        ThetaProposal::scalar(2.0).unwrap(),
        AuxProposalConfig::crank_nicolson(0.5).unwrap(),
    );
    let trace = run_pmmh(&cfg, &Quadratic, &mut replicate_rng(3, 0)).unwrap();
    for burn in [0, 100, 2999] {
        let s = posterior_summary(&trace, burn).unwrap();
        let kept = &trace.accepted[burn..];
        let expected = kept.iter().filter(|a| **a).count() as f64 / kept.len() as f64;
        assert_eq!(s.acceptance_rate, expected);
    }
    let s = posterior_summary(&trace, 500).unwrap();
    // Target is N(0, 1) in theta.
    assert!(
        s.mean[0].abs() < 0.15 && (s.std[0] - 1.0).abs() < 0.15,
        "{s:?}"
    );
}
