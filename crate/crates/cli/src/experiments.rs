//! The Monte Carlo experiments and the deterministic curves behind the
//! subcommands.
//!
//! Trials run in parallel; results are collected in trial order and all
//! aggregates are computed from that ordered vector, so they do not depend on
//! the thread count.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use hypzero::coeffs::{c_l, Constants};
use hypzero::kernel::mean_count;
use hypzero::limitlaw::{cdf_xl, density_xl, gumbel_cdf, phi_eta, tail_xl};
use hypzero::moments::{chaos_variance_terms, first_chaos_variance, variance_asymptotic, variance_integral};
use hypzero::sampler::{complex_gaussian, trial_rng, GafSample, XlSampler, GENERATOR, XL_TERM_CAP};
use hypzero::special::normal_cdf;
use hypzero::stats::{
    bootstrap_ci, histogram, ks_lattice, ks_statistic, moment_estimates, sample_variance, MomentSummary,
};
use hypzero::zeros::{count_zeros, pseudohyperbolic_params, CircleSpec, Method};
use hypzero::{Complex64, Result as ModelResult};

use crate::config::ExperimentConfig;
use crate::record::{RunRecord, SCHEMA_VERSION};
use crate::{in_pool, HarnessError};

/// Bootstrap resamples for the variance interval.
pub const BOOTSTRAP_REPS: usize = 1000;
/// Stream offset for the bootstrap and other post-processing draws.
const POST_STREAM: u64 = u64::MAX;
/// Seed mask for the independent copy of `X_L` in `l2-convergence`.
const INDEPENDENT_SEED_MASK: u64 = 0x9E37_79B9_7F4A_7C15;

fn record<T, S>(cfg: &ExperimentConfig, trials: Vec<T>, summary: S, start: Instant) -> RunRecord<T, S> {
    RunRecord {
        schema_version: SCHEMA_VERSION,
        config: cfg.clone(),
        generator: GENERATOR,
        trials,
        summary,
        wall_time_s: start.elapsed().as_secs_f64(),
    }
}

/// CDF of the limit of the normalised count at `L`: standard normal for
/// `L ≥ 1/2`, the law of `−c_L X_L` below.
pub fn limit_cdf(l: f64) -> ModelResult<(String, Box<dyn Fn(f64) -> f64 + Sync>)> {
    if l >= 0.5 {
        return Ok(("normal".into(), Box::new(normal_cdf)));
    }
    let c = c_l(l)?;
    if l == 0.0 {
        return Ok(("-c_0 X_0 (Gumbel)".into(), Box::new(move |y| 1.0 - gumbel_cdf(-y / c))));
    }
    Ok((
        format!("-c_L X_L (L = {l})"),
        Box::new(move |y| 1.0 - cdf_xl(l, -y / c).unwrap_or(f64::NAN)),
    ))
}

#[derive(Debug, Clone, Serialize)]
pub struct SimTrial {
    pub trial: u64,
    pub count: Option<u64>,
    pub method: Method,
    pub resamples: u32,
    /// min |f| over the final contour.
    pub min_modulus: Option<f64>,
    pub n_hat: Option<f64>,
    pub radius_used: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DiscInfo {
    pub center: [f64; 2],
    pub radius: f64,
    /// Pseudo-hyperbolic centre and radius of the same disc.
    pub hyperbolic_center: [f64; 2],
    pub hyperbolic_radius: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct HistBin {
    pub count: u64,
    pub n_hat: f64,
    pub trials: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct KsSummary {
    pub law: String,
    pub d: f64,
    pub p: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimSummary {
    pub trials: u64,
    pub failed: u64,
    pub disc: DiscInfo,
    pub engine_mean: f64,
    pub engine_variance: f64,
    pub counts: Option<MomentSummary>,
    /// (MC mean − engine mean) / SE.
    pub mean_z: Option<f64>,
    pub variance_ci99: Option<(f64, f64)>,
    pub variance_ci_contains_engine: Option<bool>,
    pub n_hat: Option<MomentSummary>,
    pub histogram: Vec<HistBin>,
    /// Lattice-corrected KS of the counts against the regime's limit law.
    pub ks: Option<KsSummary>,
}

/// Zero counts in the disc `|z − center| < r` (or its pseudo-hyperbolic
/// image), compared with the mean and variance engines.
pub fn run_simulate(cfg: &ExperimentConfig) -> Result<RunRecord<SimTrial, SimSummary>, HarnessError> {
    let start = Instant::now();
    let l = cfg.require_l()?;
    let r = cfg.require_r()?;
    let circle = CircleSpec::new(cfg.center(), r)?;
    let (w, r_h) = pseudohyperbolic_params(&circle)?;
    let engine_mean = mean_count(l, r_h)?;
    let engine_variance = variance_integral(l, r_h)?.value;
    let sd = engine_variance.sqrt();
    let method: Method = cfg.method.into();
    let outer = circle.outer_radius();

    let trials: Vec<SimTrial> = in_pool(cfg.threads, || {
        (0..cfg.trials)
            .into_par_iter()
            .map(|t| {
                let res = hypzero::sampler::sample_gaf(l, outer, cfg.seed, t, cfg.eps_rel)
                    .and_then(|s| count_zeros(&s, &circle, method));
                match res {
                    Ok(c) => SimTrial {
                        trial: t,
                        count: Some(c.count),
                        method: c.method,
                        resamples: c.resamples,
                        min_modulus: Some(c.min_modulus_on_contour),
                        n_hat: Some((c.count as f64 - engine_mean) / sd),
                        radius_used: c.radius,
                        error: None,
                    },
                    Err(e) => SimTrial {
                        trial: t,
                        count: None,
                        method,
                        resamples: 0,
                        min_modulus: None,
                        n_hat: None,
                        radius_used: r,
                        error: Some(e.to_string()),
                    },
                }
            })
            .collect()
    })?;

    let counts: Vec<u64> = trials.iter().filter_map(|t| t.count).collect();
    let as_f64: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    let n_hats: Vec<f64> = trials.iter().filter_map(|t| t.n_hat).collect();
    let summary_counts = moment_estimates(&as_f64).ok();
    let mean_z = summary_counts.as_ref().map(|s| (s.mean - engine_mean) / s.se_mean);
    let variance_ci99 = if as_f64.len() >= 8 {
        let mut rng = trial_rng(cfg.seed, POST_STREAM);
        Some(bootstrap_ci(&as_f64, sample_variance, BOOTSTRAP_REPS, 0.99, &mut rng)?)
    } else {
        None
    };
    let hist = histogram(&counts);
    let histogram = hist
        .iter()
        .enumerate()
        .filter(|(_, &n)| n > 0)
        .map(|(k, &n)| HistBin {
            count: k as u64,
            n_hat: (k as f64 - engine_mean) / sd,
            trials: n,
        })
        .collect();
    let ks = if counts.is_empty() {
        None
    } else {
        let (law, cdf) = limit_cdf(l)?;
        let ints: Vec<i64> = counts.iter().map(|&c| c as i64).collect();
        let res = ks_lattice(&ints, |k| cdf((k - engine_mean) / sd));
        Some(KsSummary { law, d: res.d, p: res.p })
    };
    let summary = SimSummary {
        trials: cfg.trials,
        failed: trials.iter().filter(|t| t.count.is_none()).count() as u64,
        disc: DiscInfo {
            center: [circle.center.re, circle.center.im],
            radius: circle.radius,
            hyperbolic_center: [w.re, w.im],
            hyperbolic_radius: r_h,
        },
        engine_mean,
        engine_variance,
        counts: summary_counts,
        mean_z,
        variance_ci99,
        variance_ci_contains_engine: variance_ci99.map(|(lo, hi)| lo <= engine_variance && engine_variance <= hi),
        n_hat: moment_estimates(&n_hats).ok(),
        histogram,
        ks,
    };
    Ok(record(cfg, trials, summary, start))
}

#[derive(Debug, Clone, Serialize)]
pub struct L2Trial {
    pub trial: u64,
    pub x_l: f64,
    /// Zero counts along the r-grid (`None` where counting failed).
    pub counts: Vec<Option<u64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct L2Point {
    pub r: f64,
    pub engine_mean: f64,
    pub engine_variance: f64,
    /// Monte Carlo E[(n̂ + c_L X_L)²].
    pub mean_sq: f64,
    pub se: f64,
    pub failed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct L2Summary {
    pub c_l: f64,
    pub n_x: usize,
    pub n_x_certified: bool,
    pub independent_x: bool,
    pub points: Vec<L2Point>,
    pub strictly_decreasing: bool,
}

/// `E[(n̂_L(r) + c_L X_L)²]` along the r-grid, with `X_L` built from the same
/// coefficients `ζ_m` as the zero counts (or from an independent stream when
/// `independent_x` is set).
pub fn run_l2_convergence(cfg: &ExperimentConfig) -> Result<RunRecord<L2Trial, L2Summary>, HarnessError> {
    let start = Instant::now();
    let l = cfg.require_l()?;
    let radii = cfg.radii()?;
    let r_max = radii.iter().copied().fold(0.0, f64::max);
    let c = c_l(l)?;
    let xs = XlSampler::new(l, cfg.eps_x, XL_TERM_CAP, false)?;
    let degree = hypzero::sampler::truncation_degree(l, r_max, cfg.eps_rel)?;
    let draws = degree.max(xs.terms()) + 1;
    let circles = radii
        .iter()
        .map(|&r| CircleSpec::centered(r))
        .collect::<ModelResult<Vec<_>>>()?;
    let engines = radii
        .iter()
        .map(|&r| Ok((mean_count(l, r)?, variance_integral(l, r)?.value)))
        .collect::<ModelResult<Vec<_>>>()?;
    let method: Method = cfg.method.into();

    let trials: Vec<L2Trial> = in_pool(cfg.threads, || {
        (0..cfg.trials)
            .into_par_iter()
            .map(|t| -> ModelResult<L2Trial> {
                let mut rng = trial_rng(cfg.seed, t);
                let zetas: Vec<Complex64> = (0..draws).map(|_| complex_gaussian(&mut rng)).collect();
                let x_l = if cfg.independent_x {
                    xs.sample(cfg.seed ^ INDEPENDENT_SEED_MASK, t)
                } else {
                    xs.from_zetas(&zetas)?
                };
                let sample = GafSample::from_zetas(l, r_max, zetas[..=degree].to_vec())?;
                let counts = circles
                    .iter()
                    .map(|circle| count_zeros(&sample, circle, method).ok().map(|c| c.count))
                    .collect();
                Ok(L2Trial { trial: t, x_l, counts })
            })
            .collect::<ModelResult<Vec<_>>>()
    })??;

    let points: Vec<L2Point> = radii
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let (mean, var) = engines[i];
            let sq: Vec<f64> = trials
                .iter()
                .filter_map(|t| t.counts[i].map(|n| ((n as f64 - mean) / var.sqrt() + c * t.x_l).powi(2)))
                .collect();
            let n = sq.len() as f64;
            let mean_sq = sq.iter().sum::<f64>() / n;
            let se = if sq.len() > 1 { (sample_variance(&sq) / n).sqrt() } else { f64::NAN };
            L2Point {
                r,
                engine_mean: mean,
                engine_variance: var,
                mean_sq,
                se,
                failed: trials.len() as u64 - sq.len() as u64,
            }
        })
        .collect();
    let strictly_decreasing = points.windows(2).all(|p| p[1].mean_sq < p[0].mean_sq);
    let summary = L2Summary {
        c_l: c,
        n_x: xs.terms(),
        n_x_certified: xs.certified(),
        independent_x: cfg.independent_x,
        points,
        strictly_decreasing,
    };
    Ok(record(cfg, trials, summary, start))
}

#[derive(Debug, Clone, Serialize)]
pub struct XlTrial {
    pub trial: u64,
    pub x: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct XlSummary {
    pub n_x: usize,
    pub n_x_certified: bool,
    pub gaussian_tail_sd: f64,
    pub moments: Option<MomentSummary>,
    /// S2(∞) = Var X_L.
    pub exact_variance: f64,
    pub ks: Option<KsSummary>,
}

/// Draws of `X_L` from the truncated series with a Gaussian stand-in for the
/// dropped terms.
pub fn run_xl_sample(cfg: &ExperimentConfig) -> Result<RunRecord<XlTrial, XlSummary>, HarnessError> {
    let start = Instant::now();
    let l = cfg.require_l()?;
    let sampler = XlSampler::new(l, cfg.eps_x, XL_TERM_CAP, true)?;
    let trials: Vec<XlTrial> = in_pool(cfg.threads, || {
        (0..cfg.trials)
            .into_par_iter()
            .map(|t| XlTrial {
                trial: t,
                x: sampler.sample(cfg.seed, t),
            })
            .collect()
    })?;
    let xs: Vec<f64> = trials.iter().map(|t| t.x).collect();
    let ks = if xs.is_empty() {
        None
    } else if l == 0.0 {
        let r = ks_statistic(&xs, gumbel_cdf);
        Some(KsSummary {
            law: "Gumbel".into(),
            d: r.d,
            p: r.p,
        })
    } else {
        let r = ks_statistic(&xs, |x| cdf_xl(l, x).unwrap_or(f64::NAN));
        Some(KsSummary {
            law: format!("X_L (L = {l})"),
            d: r.d,
            p: r.p,
        })
    };
    let summary = XlSummary {
        n_x: sampler.terms(),
        n_x_certified: sampler.certified(),
        gaussian_tail_sd: sampler.tail_sd(),
        moments: moment_estimates(&xs).ok(),
        exact_variance: hypzero::coeffs::CoefSeq::new(l)?.s2_total()?,
        ks,
    };
    Ok(record(cfg, trials, summary, start))
}

#[derive(Debug, Clone, Serialize)]
pub struct MeanVarRow {
    #[serde(rename = "L")]
    pub l: f64,
    pub r: f64,
    pub mean: f64,
    pub variance_integral: f64,
    pub variance_abs_error: f64,
    /// E[n(r;α)²] for α = 1..=alpha_max.
    pub chaos_terms: Vec<f64>,
    /// The remainder α > alpha_max.
    pub chaos_tail: f64,
    pub chaos_total: f64,
    pub first_chaos_variance: f64,
    pub asymptotic: Option<f64>,
}

/// [`MeanVarRow`] without the per-α terms, for CSV.
#[derive(Debug, Clone, Serialize)]
pub struct MeanVarCsvRow {
    #[serde(rename = "L")]
    pub l: f64,
    pub r: f64,
    pub mean: f64,
    pub variance_integral: f64,
    pub variance_abs_error: f64,
    pub chaos_total: f64,
    pub chaos_tail: f64,
    pub first_chaos_variance: f64,
    pub asymptotic: Option<f64>,
}

impl From<&MeanVarRow> for MeanVarCsvRow {
    fn from(r: &MeanVarRow) -> Self {
        Self {
            l: r.l,
            r: r.r,
            mean: r.mean,
            variance_integral: r.variance_integral,
            variance_abs_error: r.variance_abs_error,
            chaos_total: r.chaos_total,
            chaos_tail: r.chaos_tail,
            first_chaos_variance: r.first_chaos_variance,
            asymptotic: r.asymptotic,
        }
    }
}

pub fn mean_var_rows(cfg: &ExperimentConfig) -> Result<Vec<MeanVarRow>, HarnessError> {
    let l = cfg.require_l()?;
    cfg.radii()?
        .into_iter()
        .map(|r| {
            let vi = variance_integral(l, r)?;
            let chaos = chaos_variance_terms(l, r, cfg.alpha_max)?;
            Ok(MeanVarRow {
                l,
                r,
                mean: mean_count(l, r)?,
                variance_integral: vi.value,
                variance_abs_error: vi.abs_error_estimate,
                chaos_terms: chaos.terms.iter().map(|t| t.value).collect(),
                chaos_tail: chaos.tail_bound,
                chaos_total: chaos.total(),
                first_chaos_variance: first_chaos_variance(l, r)?,
                asymptotic: variance_asymptotic(l, r)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct DensityRow {
    pub x: f64,
    pub pdf: f64,
    pub cdf: f64,
    /// κ_L e^{−x} (x > 0), reference for P[X_L > x].
    pub right_tail_ref: Option<f64>,
    /// −λ_L |x|^{1/L} (x < 0), reference for log P[X_L < x].
    pub left_tail_ref: Option<f64>,
}

pub fn density_rows(l: f64, xs: &[f64]) -> Result<Vec<DensityRow>, HarnessError> {
    xs.iter()
        .map(|&x| {
            Ok(DensityRow {
                x,
                pdf: density_xl(l, x)?,
                cdf: cdf_xl(l, x)?,
                right_tail_ref: (x > 0.0).then(|| tail_xl(l, x).map(|t| t.right)).transpose()?,
                left_tail_ref: (x < 0.0).then(|| tail_xl(l, -x).map(|t| t.left_log)).transpose()?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct EtaRow {
    pub eta: f64,
    pub x: f64,
    pub phi: f64,
}

pub fn eta_rows(etas: &[f64], xs: &[f64]) -> Result<Vec<EtaRow>, HarnessError> {
    let mut rows = Vec::with_capacity(etas.len() * xs.len());
    for &eta in etas {
        for &x in xs {
            rows.push(EtaRow {
                eta,
                x,
                phi: phi_eta(eta, x)?,
            });
        }
    }
    Ok(rows)
}

pub fn constants(l: f64) -> Result<Constants, HarnessError> {
    Ok(Constants::for_l(l)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ConfigPatch;

    fn cfg(sub: &str, patch: ConfigPatch) -> ExperimentConfig {
        ExperimentConfig::resolve(sub, patch).unwrap()
    }

    #[test]
    fn empty_simulation() {
        let c = cfg(
            "simulate",
            ConfigPatch {
                l: Some(1.0),
                r: Some(0.5),
                trials: Some(0),
                ..Default::default()
            },
        );
        let rec = run_simulate(&c).unwrap();
        assert!(rec.trials.is_empty());
        assert!(rec.summary.counts.is_none());
        assert!(rec.summary.ks.is_none());
    }

    #[test]
    fn simulation_is_thread_independent() {
        let base = ConfigPatch {
            l: Some(0.25),
            r: Some(0.7),
            trials: Some(64),
            ..Default::default()
        };
        let one = run_simulate(&cfg("simulate", ConfigPatch { threads: Some(1), ..base.clone() })).unwrap();
        let three = run_simulate(&cfg("simulate", ConfigPatch { threads: Some(3), ..base })).unwrap();
        let counts = |r: &RunRecord<SimTrial, SimSummary>| r.trials.iter().map(|t| t.count).collect::<Vec<_>>();
        assert_eq!(counts(&one), counts(&three));
        let (a, b) = (one.summary.counts.unwrap(), three.summary.counts.unwrap());
        assert_eq!(a, b);
        assert_eq!(one.summary.variance_ci99, three.summary.variance_ci99);
    }

    #[test]
    fn off_center_disc_uses_hyperbolic_engines() {
        let c = cfg(
            "simulate",
            ConfigPatch {
                l: Some(1.0),
                r: Some(0.5),
                center: Some([0.2, -0.1]),
                trials: Some(16),
                ..Default::default()
            },
        );
        let rec = run_simulate(&c).unwrap();
        let d = &rec.summary.disc;
        assert!(d.hyperbolic_radius > 0.5);
        let h = d.hyperbolic_radius;
        assert!((rec.summary.engine_mean - h * h / (1.0 - h * h)).abs() < 1e-12);
        assert_eq!(rec.summary.failed, 0);
    }

    #[test]
    fn limit_cdf_regimes() {
        let (name, f) = limit_cdf(1.0).unwrap();
        assert_eq!(name, "normal");
        assert!((f(0.0) - 0.5).abs() < 1e-15);
        for l in [0.0, 0.3] {
            let (_, f) = limit_cdf(l).unwrap();
            // −c X has mean 0 and is skewed to the left: median above 0
            assert!(f(-20.0) < 1e-6 && f(20.0) > 1.0 - 1e-6);
            assert!(f(0.0) < 0.5);
        }
    }

    #[test]
    fn density_rows_have_tail_references() {
        let rows = density_rows(0.3, &[-2.0, 0.0, 3.0]).unwrap();
        assert!(rows[0].left_tail_ref.is_some() && rows[0].right_tail_ref.is_none());
        assert!(rows[1].left_tail_ref.is_none() && rows[1].right_tail_ref.is_none());
        assert!(rows[2].right_tail_ref.is_some());
        assert!(rows.iter().all(|r| r.pdf > 0.0 && (0.0..=1.0).contains(&r.cdf)));
    }
}
