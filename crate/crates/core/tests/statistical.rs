//! Monte Carlo checks of the samplers against exact laws and moments.

use hypzero::coeffs::CoefSeq;
use hypzero::limitlaw::{cdf_xl, XlLaw};
use hypzero::moments::{centering_identity, fourth_moment_s};
use hypzero::sampler::{complex_gaussian, trial_rng, XlSampler};
use hypzero::stats::{ks_statistic, moment_estimates};
use rand::Rng;
use rand_distr::{Distribution, Exp1};

#[test]
fn neighbouring_trial_streams_are_uncorrelated() {
    let n = 10_000u64;
    let first = |t: u64| complex_gaussian(&mut trial_rng(7, t)).re;
    let xs: Vec<f64> = (0..=n).map(first).collect();
    let (a, b) = (&xs[..n as usize], &xs[1..]);
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (ma, mb) = (mean(a), mean(b));
    let cov = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / n as f64;
    let var = |v: &[f64], m: f64| v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n as f64;
    let corr = cov / (var(a, ma) * var(b, mb)).sqrt();
    assert!(corr.abs() <= 4.0 / (n as f64).sqrt(), "lag-1 correlation {corr}");
}

#[test]
fn centering_identity_on_grid() {
    for l in [0.25, 1.0] {
        for r in [0.5, 0.9] {
            let (s, abs) = centering_identity(l, r).unwrap();
            assert!(s.abs() <= 1e-9 * abs, "L={l} r={r}: {s} vs {abs}");
        }
    }
}

#[test]
fn fourth_moment_formula_matches_simulation() {
    let mut rng = trial_rng(11, 0);
    for case in 0..3 {
        let alphas: Vec<f64> = (0..5 + 3 * case).map(|_| rng.gen_range(0.1..1.0)).collect();
        let n = 200_000;
        let fourth: Vec<f64> = (0..n)
            .map(|_| {
                let s: f64 = alphas
                    .iter()
                    .map(|a| {
                        let e: f64 = Exp1.sample(&mut rng);
                        a * (e - 1.0)
                    })
                    .sum();
                s.powi(4)
            })
            .collect();
        let m = moment_estimates(&fourth).unwrap();
        let exact = fourth_moment_s(&alphas);
        assert!(
            (m.mean - exact).abs() <= 4.0 * m.se_mean,
            "case {case}: {} ± {} vs {exact}",
            m.mean,
            m.se_mean
        );
    }
}

#[test]
fn xl_samples_follow_the_inverted_law() {
    for l in [0.25, 0.4] {
        let sampler = XlSampler::with_terms(l, 2000, true).unwrap();
        let xs: Vec<f64> = (0..20_000).map(|t| sampler.sample(3, t)).collect();
        let law = XlLaw::shared(l).unwrap();
        let ks = ks_statistic(&xs, |x| law.cdf(x).unwrap());
        let bound = 1.5 * 1.63 / (xs.len() as f64).sqrt();
        assert!(ks.d <= bound, "L={l}: D = {} > {bound}", ks.d);
    }
}

#[test]
fn xl_sample_variance_is_s2() {
    let l = 0.3;
    let sampler = XlSampler::with_terms(l, 2000, true).unwrap();
    let xs: Vec<f64> = (0..50_000).map(|t| sampler.sample(5, t)).collect();
    let m = moment_estimates(&xs).unwrap();
    let s2 = CoefSeq::new(l).unwrap().s2_total().unwrap();
    assert!(m.mean.abs() <= 4.0 * m.se_mean);
    assert!((m.variance - s2).abs() <= 4.0 * m.se_variance, "{} vs {s2}", m.variance);
}

#[test]
fn cdf_free_function_matches_cached_law() {
    let law = XlLaw::shared(0.25).unwrap();
    for x in [-2.0, 0.0, 3.0] {
        assert_eq!(cdf_xl(0.25, x).unwrap(), law.cdf(x).unwrap());
    }
}
