//! Estimators and goodness-of-fit tests for the Monte Carlo harness.

use rand::Rng;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::numerics::CompensatedSum;

/// Sample moments with standard errors.
///
/// Skewness and excess kurtosis are the plug-in ratios `m3/m2^{3/2}` and
/// `m4/m2² − 3`; they are `None` when the sample has no spread. Their standard
/// errors, and that of the variance, are delete-one jackknife estimates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentSummary {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub skewness: Option<f64>,
    pub excess_kurtosis: Option<f64>,
    pub se_mean: f64,
    pub se_variance: f64,
    pub se_skewness: Option<f64>,
    pub se_excess_kurtosis: Option<f64>,
}

pub const MIN_MOMENT_SAMPLES: usize = 8;

/// Central moments `(mean, m2, m3, m4)` from power sums of `x − shift`.
fn central(n: f64, s: [f64; 4], shift: f64) -> (f64, f64, f64, f64) {
    let d = s[0] / n;
    let e2 = s[1] / n;
    let e3 = s[2] / n;
    let e4 = s[3] / n;
    let m2 = (e2 - d * d).max(0.0);
    let m3 = e3 - 3.0 * d * e2 + 2.0 * d * d * d;
    let m4 = e4 - 4.0 * d * e3 + 6.0 * d * d * e2 - 3.0 * d.powi(4);
    (shift + d, m2, m3, m4)
}

fn shape(m2: f64, m3: f64, m4: f64) -> Option<(f64, f64)> {
    (m2 > 0.0).then(|| (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0))
}

pub fn moment_estimates(samples: &[f64]) -> Result<MomentSummary> {
    let n = samples.len();
    if n < MIN_MOMENT_SAMPLES {
        return Err(Error::InsufficientSamples {
            needed: MIN_MOMENT_SAMPLES,
            got: n,
        });
    }
    let shift = samples.iter().sum::<f64>() / n as f64;
    let mut acc = [CompensatedSum::new(); 4];
    for &x in samples {
        let y = x - shift;
        let mut p = y;
        for a in acc.iter_mut() {
            a.add(p);
            p *= y;
        }
    }
    let s = acc.map(|a| a.value());
    let nf = n as f64;
    let (mean, m2, m3, m4) = central(nf, s, shift);
    let variance = m2 * nf / (nf - 1.0);
    let full_shape = shape(m2, m3, m4);

    // delete-one jackknife on (variance, skewness, kurtosis)
    let mut loo = Vec::with_capacity(n);
    for &x in samples {
        let y = x - shift;
        let t = [s[0] - y, s[1] - y * y, s[2] - y.powi(3), s[3] - y.powi(4)];
        let (_, m2, m3, m4) = central(nf - 1.0, t, shift);
        loo.push((m2 * (nf - 1.0) / (nf - 2.0), shape(m2, m3, m4)));
    }
    let se_variance = jackknife_se(loo.iter().map(|v| v.0), n);
    let (se_skewness, se_excess_kurtosis) = if full_shape.is_some() && loo.iter().all(|v| v.1.is_some()) {
        (
            Some(jackknife_se(loo.iter().map(|v| v.1.unwrap().0), n)),
            Some(jackknife_se(loo.iter().map(|v| v.1.unwrap().1), n)),
        )
    } else {
        (None, None)
    };
    Ok(MomentSummary {
        n,
        mean,
        variance,
        skewness: full_shape.map(|s| s.0),
        excess_kurtosis: full_shape.map(|s| s.1),
        se_mean: (variance / nf).sqrt(),
        se_variance,
        se_skewness,
        se_excess_kurtosis,
    })
}

fn jackknife_se(values: impl Iterator<Item = f64> + Clone, n: usize) -> f64 {
    let nf = n as f64;
    let mean: CompensatedSum = values.clone().collect();
    let mean = mean.value() / nf;
    let ss: CompensatedSum = values.map(|v| (v - mean) * (v - mean)).collect();
    ((nf - 1.0) / nf * ss.value()).sqrt()
}

/// Kolmogorov–Smirnov distance with its asymptotic p-value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsResult {
    pub d: f64,
    pub p: f64,
    pub n: usize,
}

/// `P[K > λ]` for the Kolmogorov distribution.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.0 {
        // P[K ≤ λ] = (√(2π)/λ) Σ_{k≥1} e^{−(2k−1)²π²/(8λ²)}
        let c = std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda);
        let mut s = 0.0;
        for k in 1..=20 {
            let j = (2 * k - 1) as f64;
            let term = (-j * j * c).exp();
            s += term;
            if term < 1e-300 {
                break;
            }
        }
        return (1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * s).clamp(0.0, 1.0);
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        s += if k % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

/// One-sample KS statistic against a continuous CDF, p from `√n D`.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> KsResult {
    let n = samples.len();
    if n == 0 {
        return KsResult { d: 0.0, p: 1.0, n };
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let nf = n as f64;
    let mut d = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / nf).max((i + 1) as f64 / nf - f);
    }
    let d = d.clamp(0.0, 1.0);
    KsResult {
        d,
        p: kolmogorov_sf(nf.sqrt() * d),
        n,
    }
}

/// KS distance for integer-valued data against a continuous reference,
/// evaluating the reference at half-integers: `sup_k |F_n(k) − F(k + 1/2)|`.
///
/// `cdf` receives the continuity-corrected count `k + 1/2`. The p-value uses
/// the continuous Kolmogorov law and is conservative for lattice data.
pub fn ks_lattice<F: Fn(f64) -> f64>(counts: &[i64], cdf: F) -> KsResult {
    let n = counts.len();
    if n == 0 {
        return KsResult { d: 0.0, p: 1.0, n };
    }
    let mut xs = counts.to_vec();
    xs.sort_unstable();
    let (lo, hi) = (xs[0], xs[n - 1]);
    let nf = n as f64;
    let mut d = cdf(lo as f64 - 0.5).abs();
    let mut idx = 0;
    for k in lo..=hi {
        while idx < n && xs[idx] <= k {
            idx += 1;
        }
        d = d.max((idx as f64 / nf - cdf(k as f64 + 0.5)).abs());
    }
    let d = d.clamp(0.0, 1.0);
    KsResult {
        d,
        p: kolmogorov_sf(nf.sqrt() * d),
        n,
    }
}

/// Two-sample chi-square homogeneity test on merged bins.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Chi2Result {
    pub stat: f64,
    pub df: usize,
    pub p: f64,
    /// Merged bins as `[first, last]` original indices.
    pub bins: Vec<(usize, usize)>,
}

/// Minimum expected count per sample and merged bin.
pub const MIN_EXPECTED: f64 = 5.0;

/// Adjacent bins are merged left to right until both samples' expected
/// counts reach [`MIN_EXPECTED`]; a short last group joins its neighbour.
pub fn chi2_homogeneity(a: &[u64], b: &[u64]) -> Result<Chi2Result> {
    let len = a.len().max(b.len());
    let get = |h: &[u64], i: usize| h.get(i).copied().unwrap_or(0) as f64;
    let na: f64 = a.iter().map(|&c| c as f64).sum();
    let nb: f64 = b.iter().map(|&c| c as f64).sum();
    let total = na + nb;
    if na == 0.0 || nb == 0.0 {
        return Err(Error::InsufficientData("an empty histogram".into()));
    }
    let expected_ok = |pooled: f64| pooled * na.min(nb) / total >= MIN_EXPECTED;

    let mut groups: Vec<(usize, usize, f64, f64)> = Vec::new();
    let mut start = 0;
    let (mut ca, mut cb) = (0.0, 0.0);
    for i in 0..len {
        ca += get(a, i);
        cb += get(b, i);
        if expected_ok(ca + cb) {
            groups.push((start, i, ca, cb));
            start = i + 1;
            ca = 0.0;
            cb = 0.0;
        }
    }
    if ca + cb > 0.0 || start < len {
        match groups.last_mut() {
            Some(g) => {
                g.1 = len - 1;
                g.2 += ca;
                g.3 += cb;
            }
            None => groups.push((0, len.saturating_sub(1), ca, cb)),
        }
    }
    if groups.len() < 2 || !groups.iter().all(|g| expected_ok(g.2 + g.3)) {
        return Err(Error::InsufficientData(format!(
            "{} bin(s) with expected count ≥ {MIN_EXPECTED} after merging",
            groups.iter().filter(|g| expected_ok(g.2 + g.3)).count()
        )));
    }
    let mut stat = CompensatedSum::new();
    for &(_, _, ca, cb) in &groups {
        let pooled = ca + cb;
        let ea = pooled * na / total;
        let eb = pooled * nb / total;
        stat.add((ca - ea).powi(2) / ea + (cb - eb).powi(2) / eb);
    }
    let stat = stat.value().max(0.0);
    let df = groups.len() - 1;
    let p = ChiSquared::new(df as f64)
        .map_err(|e| Error::InsufficientData(e.to_string()))?
        .sf(stat);
    Ok(Chi2Result {
        stat,
        df,
        p,
        bins: groups.iter().map(|g| (g.0, g.1)).collect(),
    })
}

/// Integer histogram with bin `k` holding the count of value `k`.
pub fn histogram(values: &[u64]) -> Vec<u64> {
    let top = values.iter().copied().max().map_or(0, |m| m as usize + 1);
    let mut h = vec![0u64; top];
    for &v in values {
        h[v as usize] += 1;
    }
    h
}

/// Percentile bootstrap interval for `stat` at confidence `level`.
pub fn bootstrap_ci<R, F>(samples: &[f64], stat: F, reps: usize, level: f64, rng: &mut R) -> Result<(f64, f64)>
where
    R: Rng + ?Sized,
    F: Fn(&[f64]) -> f64,
{
    if samples.len() < 2 || reps < 2 {
        return Err(Error::InsufficientSamples {
            needed: 2,
            got: samples.len().min(reps),
        });
    }
    let n = samples.len();
    let mut buf = vec![0.0; n];
    let mut stats: Vec<f64> = (0..reps)
        .map(|_| {
            for b in buf.iter_mut() {
                *b = samples[rng.gen_range(0..n)];
            }
            stat(&buf)
        })
        .collect();
    stats.sort_by(f64::total_cmp);
    let alpha = 0.5 * (1.0 - level);
    let q = |p: f64| {
        let pos = p * (reps - 1) as f64;
        let (i, frac) = (pos.floor() as usize, pos.fract());
        stats[i] + frac * (stats[(i + 1).min(reps - 1)] - stats[i])
    };
    Ok((q(alpha), q(1.0 - alpha)))
}

/// Unbiased sample variance.
pub fn sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let ss: CompensatedSum = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    ss.value() / (n - 1.0)
}
