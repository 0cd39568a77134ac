mod common;

use common::*;
use cpmmh::auxiliary::{gaussian_to_uniform, sample_prior};
use cpmmh::estimators::{bpf_loglik, is_loglik, IsScale};
use cpmmh::models::{
    exact_iid_loglik, simulate_iid, GaussianIIDModel, InitVariance, LeverageForm,
    LinearGaussianModel, PriorComponent, SVLeverageModel,
};
use cpmmh::peskun::{asymptotic_variance, batch_means_variance, DiscretizedChain};
use cpmmh::sampler::replicate_rng;

#[test]
fn normal_cdf_matches_series() {
    let u = gaussian_to_uniform(1.959964).unwrap();
    assert!((u - 0.975).abs() < 1e-7);
    for x in [-3.5, -3.0, -1.2, -0.1, 0.0, 0.4, 2.2, 3.4] {
        let a = gaussian_to_uniform(x).unwrap();
        let b = normal_cdf_series(x);
        assert!((a - b).abs() < 1e-12, "x={x}: {a} vs {b}");
    }
}

#[test]
fn prior_densities_integrate_to_one() {
    let cases = [
        (PriorComponent::Normal { mean: 0.0, sd: 2.0 }, -20.0, 20.0),
        (
            PriorComponent::TruncatedNormal {
                mean: 0.9,
                sd: 0.05,
                lower: -1.0,
                upper: 1.0,
            },
            -1.0 + 1e-12,
            1.0 - 1e-12,
        ),
        (
            PriorComponent::TruncatedNormal {
                mean: 0.0,
                sd: 1.0,
                lower: -1.0,
                upper: 1.0,
            },
            -1.0 + 1e-12,
            1.0 - 1e-12,
        ),
        (
            PriorComponent::Gamma {
                shape: 2.0,
                rate: 0.05,
            },
            0.0,
            1000.0,
        ),
        (
            PriorComponent::Normal {
                mean: -0.5,
                sd: 0.2,
            },
            -3.0,
            2.0,
        ),
    ];
    for (c, a, b) in cases {
        let f = |x: f64| {
            if c.in_support(x) {
                c.log_density(x).exp()
            } else {
                0.0
            }
        };
        let total = simpson(f, a, b, 200_000);
        assert!((total - 1.0).abs() < 1e-6, "{c:?}: {total}");
    }
}

#[test]
fn iid_likelihood_matches_convolution_quadrature() {
    let model = GaussianIIDModel::new(0.5, 0.3, 0.1).unwrap();
    let y = simulate_iid(&model, 6, &mut replicate_rng(3, 0));
    // p(y_t) = ∫ N(y_t; x, se^2) N(x; mu, sv^2) dx
    let by_quadrature: f64 = y
        .iter()
        .map(|yt| {
            simpson(
                |x| normal_pdf(*yt, x, 0.1) * normal_pdf(x, 0.5, 0.3),
                -3.0,
                4.0,
                20_000,
            )
            .ln()
        })
        .sum();
    assert!((exact_iid_loglik(&model, &y) - by_quadrature).abs() < 1e-9);
}

#[test]
fn importance_sampler_is_unbiased() {
    let model = GaussianIIDModel::new(0.5, 0.3, 0.1).unwrap();
    let y = simulate_iid(&model, 3, &mut replicate_rng(4, 0));
    let exact = exact_iid_loglik(&model, &y);
    let mut rng = replicate_rng(4, 1);
    let draws: Vec<f64> = (0..20_000)
        .map(|_| {
            let u = sample_prior(3, 10, &mut rng).unwrap();
            is_loglik(&model, IsScale::Stddev, &y, &u)
                .unwrap()
                .log_likelihood
        })
        .collect();
    let (m, se) = mean_and_se_of_exp(&draws, exact);
    assert!((m - 1.0).abs() < 3.0 * se, "ratio {m} ± {se}");
}

#[test]
fn kalman_oracle_matches_closed_form_single_step() {
    // One observation: y_1 ~ N(mu, sv^2 / (1 - phi^2) * phi^2 + sv^2 + se^2).
    let (mu, phi, sv, se): (f64, f64, f64, f64) = (0.3, 0.7, 0.5, 0.4);
    let var = phi * phi * sv * sv / (1.0 - phi * phi) + sv * sv + se * se;
    let expected = normal_pdf(1.1, mu, var.sqrt()).ln();
    assert!((kalman_loglik(mu, phi, sv, se, &[1.1]) - expected).abs() < 1e-12);
}

#[test]
fn particle_filter_is_unbiased_for_linear_gaussian() {
    let model = LinearGaussianModel::new(0.2, 0.8, 0.5, 0.6).unwrap();
    let (_, y) = model.simulate(5, &mut replicate_rng(5, 0));
    let exact = kalman_loglik(0.2, 0.8, 0.5, 0.6, &y);
    let mut rng = replicate_rng(5, 1);
    let draws: Vec<f64> = (0..20_000)
        .map(|_| {
            let u = sample_prior(6, 9, &mut rng).unwrap();
            bpf_loglik(&model, &y, &u).unwrap().log_likelihood
        })
        .collect();
    let (m, se) = mean_and_se_of_exp(&draws, exact);
    assert!((m - 1.0).abs() < 3.0 * se, "ratio {m} ± {se}");
}

#[test]
fn particle_filter_is_unbiased_for_leveraged_sv() {
    let y = [0.8, -1.3, 0.4];
    // The printed covariance form needs sv^2 > rho^2 e^{-x}; a small rho and
    // a high mean keep the state well inside that region.
    let cases = [
        (0.1, -0.6, LeverageForm::Correlation),
        (1.0, -0.05, LeverageForm::CovarianceAsPrinted),
    ];
    for (mu, rho, leverage) in cases {
        let model =
            SVLeverageModel::with_options(mu, 0.9, 0.4, rho, InitVariance::Stationary, leverage)
                .unwrap();
        let v0 = model.initial_variance();
        let exact = sv_grid_loglik(
            mu,
            0.9,
            0.4,
            v0,
            |x| model.cross_covariance(x),
            &y,
            mu - 6.0,
            mu + 6.0,
            1200,
        );
        let mut rng = replicate_rng(6, 0);
        let draws: Vec<f64> = (0..20_000)
            .map(|_| {
                let u = sample_prior(4, 6, &mut rng).unwrap();
                bpf_loglik(&model, &y, &u)
                    .map(|e| e.log_likelihood)
                    .unwrap_or(f64::NEG_INFINITY)
            })
            .collect();
        let (m, se) = mean_and_se_of_exp(&draws, exact);
        assert!((m - 1.0).abs() < 3.0 * se, "{leverage:?}: ratio {m} ± {se}");
    }
}

#[test]
fn three_state_chain_variance_matches_simulation() {
    let p = vec![
        vec![0.5, 0.5, 0.0],
        vec![0.25, 0.5, 0.25],
        vec![0.0, 0.5, 0.5],
    ];
    let chain = DiscretizedChain::from_parts(vec![1.0, 0.0, -1.0], &p, &[0.25, 0.5, 0.25]).unwrap();
    let nu = asymptotic_variance(&chain, &[1.0, 0.0, -1.0]).unwrap();
    // The eigen-decomposition gives nu = 1.5 for phi = (1, 0, -1): phi is the
    // eigenvector with eigenvalue 1/2, so nu = Var(phi) (1 + 1/2) / (1 - 1/2).
    assert!((nu - 1.5).abs() < 1e-12, "{nu}");
    let path = chain.simulate(1, 10_000_000, &mut replicate_rng(7, 0));
    let series: Vec<f64> = path.iter().map(|s| [1.0, 0.0, -1.0][*s]).collect();
    let bm = batch_means_variance(&series, 10_000);
    assert!((bm - nu).abs() / nu < 0.02, "batch means {bm} vs {nu}");
}
