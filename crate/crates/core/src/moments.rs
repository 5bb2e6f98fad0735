//! Deterministic variance engines for the zero count `n_L(r)`.
//!
//! * [`variance_integral`]: the kernel integral in `H`, `H′`.
//! * [`chaos_variance_terms`]: the Wiener chaos second moments `E[n(r;α)²]`,
//!   with the remainder past `α_max` integrated exactly.
//! * [`first_chaos_variance`]: the α = 1 term as an explicit series.
//! * [`variance_asymptotic`]: leading-order behaviour as `r → 1`.

use crate::error::{domain, Result};
use crate::kernel::{log_one_over_one_minus, mean_count, one_minus_sq, KernelFns};
use crate::numerics::CompensatedSum;
use crate::quad::{circle_mean, QuadResult, DEFAULT_REL_TOL};
use crate::special::ln_gamma;
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;

/// Number of chaos terms reported before the remainder is lumped together.
pub const DEFAULT_ALPHA_MAX: usize = 32;

fn check_radius(r: f64) -> Result<()> {
    if !(r > 0.0 && r < 1.0) {
        return Err(domain(format!("radius must lie in (0, 1), got {r}")));
    }
    Ok(())
}

/// `Var n_L(r)` from the kernel integral
/// `(1/2π)∫ |H(t)H′(t+iθ) − H(t+iθ)H′(t)|² / (H(t)²(H(t)² − |H(t+iθ)|²)) dθ`.
pub fn variance_integral(l: f64, r: f64) -> Result<QuadResult> {
    check_radius(r)?;
    let k = KernelFns::new(l)?;
    let x = r * r;
    let omx = one_minus_sq(r);
    let (ht, hpt) = if l == 0.0 {
        (log_one_over_one_minus(x, omx), x / omx)
    } else {
        let h = (-l * omx.ln()).exp();
        (h, l * x * h / omx)
    };
    let res = circle_mean(omx, 1, DEFAULT_REL_TOL, |theta, out| {
        let s = (0.5 * theta).sin();
        let w = Complex64::new(omx + 2.0 * x * s * s, -x * theta.sin());
        let y = Complex64::new(1.0, 0.0) - w;
        let (hz, hpz) = if l == 0.0 {
            (-w.ln(), y / w)
        } else {
            let hz = (-l * w.ln()).exp();
            (hz, l * y * hz / w)
        };
        let num = (ht * hpz - hz * hpt).norm_sqr();
        let gap = k.circle_point(x, omx, theta).one_minus_q;
        out[0] = num / (ht * ht * ht * ht * gap);
    })?;
    Ok(res[0])
}

/// One chaos term `E[n_L(r;α)²]`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ChaosTerm {
    pub alpha: usize,
    pub value: f64,
    pub abs_error_estimate: f64,
    /// The same term from the `|K̂|^{2αL}` form (only for `L > 0`).
    pub kernel_form: Option<f64>,
}

/// Chaos decomposition of the variance.
#[derive(Debug, Clone, Serialize)]
pub struct ChaosSpectrum {
    pub terms: Vec<ChaosTerm>,
    /// Σ_{α > α_max} E[n(r;α)²], integrated in closed form over α.
    pub tail_bound: f64,
    pub tail_error_estimate: f64,
    pub nodes: usize,
}

impl ChaosSpectrum {
    pub fn total(&self) -> f64 {
        let mut s: CompensatedSum = self.terms.iter().map(|t| t.value).collect();
        s.add(self.tail_bound);
        s.value()
    }

    pub fn term(&self, alpha: usize) -> Option<&ChaosTerm> {
        self.terms.get(alpha.checked_sub(1)?)
    }
}

/// `E[n_L(r;α)²]` for `α = 1..=alpha_max` plus the exact remainder.
///
/// Term α is `(1/2π)∫ q^α |A(t+iθ) − A(t)|² dθ` with `q = |G(r²e^{iθ})/G(r²)|²`;
/// the remainder is the same integral with `q^{α_max+1}/(1−q)`.
pub fn chaos_variance_terms(l: f64, r: f64, alpha_max: usize) -> Result<ChaosSpectrum> {
    check_radius(r)?;
    if alpha_max == 0 {
        return Err(domain("alpha_max must be at least 1"));
    }
    let k = KernelFns::new(l)?;
    let x = r * r;
    let omx = one_minus_sq(r);
    let with_kernel_form = l > 0.0;
    let width = alpha_max + 1 + if with_kernel_form { alpha_max } else { 0 };
    let shape_pref = l * l * x * x / (omx * omx);
    let res = circle_mean(omx, width, DEFAULT_REL_TOL, |theta, out| {
        let p = k.circle_point(x, omx, theta);
        let mut qa = 1.0;
        for slot in out.iter_mut().take(alpha_max) {
            qa *= p.q;
            *slot = qa * p.delta_a_sq;
        }
        out[alpha_max] = qa * p.q / p.one_minus_q * p.delta_a_sq;
        if with_kernel_form {
            // L² r⁴/(1−r²)² |(1−r²)/(1−r²e^{iθ})|^{2αL} |(1−e^{iθ})/(1−r²e^{iθ})|²
            let e = Complex64::from_polar(1.0, theta);
            let den = Complex64::new(1.0, 0.0) - x * e;
            let ratio = (omx / den.norm()).powf(2.0 * l);
            let shape = shape_pref * (Complex64::new(1.0, 0.0) - e).norm_sqr() / den.norm_sqr();
            let mut ka = 1.0;
            for slot in out[alpha_max + 1..].iter_mut() {
                ka *= ratio;
                *slot = ka * shape;
            }
        }
    })?;
    let terms = (0..alpha_max)
        .map(|i| ChaosTerm {
            alpha: i + 1,
            value: res[i].value,
            abs_error_estimate: res[i].abs_error_estimate,
            kernel_form: with_kernel_form.then(|| res[alpha_max + 1 + i].value),
        })
        .collect();
    Ok(ChaosSpectrum {
        terms,
        tail_bound: res[alpha_max].value,
        tail_error_estimate: res[alpha_max].abs_error_estimate,
        nodes: res[0].nodes,
    })
}

/// Running sums over the first-chaos coefficients
/// `c_m = a_m r^{2m}(m − A)/G`, `A = r²G′/G`, `G = G(r²)`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct FirstChaosSums {
    pub sum: f64,
    pub abs_sum: f64,
    pub sq_sum: f64,
    pub quartic_sum: f64,
    pub tail_sq_bound: f64,
}

/// Sums the coefficients until the certified geometric tail of Σ|c_m| is
/// below 1e-17 of the running sum.
pub(crate) fn first_chaos_sums(l: f64, r: f64) -> Result<FirstChaosSums> {
    check_radius(r)?;
    let x = r * r;
    let omx = one_minus_sq(r);
    let g = if l == 0.0 {
        log_one_over_one_minus(x, omx)
    } else {
        (-l * omx.ln()).exp()
    };
    let mean = mean_count(l, r)?;
    let mut sum = CompensatedSum::new();
    let mut abs = CompensatedSum::new();
    let mut sq = CompensatedSum::new();
    let mut quartic = CompensatedSum::new();
    // p = a_m x^m
    let mut p = if l == 0.0 { 0.0 } else { 1.0 };
    let mut xm = 1.0;
    let mut m = 0u64;
    loop {
        let mf = m as f64;
        let c = p * (mf - mean) / g;
        sum.add(c);
        abs.add(c.abs());
        sq.add(c * c);
        quartic.add(c.powi(4));
        if mf > 2.0 * mean + 1.0 {
            // sup_{k ≥ m} |c_{k+1}/c_k|
            let growth = if l > 1.0 { (l + mf) / (mf + 1.0) } else { 1.0 };
            let ratio = x * growth * (1.0 + 1.0 / (mf - mean));
            if ratio < 1.0 && c.abs() * ratio / (1.0 - ratio) <= 1e-17 * abs.value() {
                let rho2 = ratio * ratio;
                return Ok(FirstChaosSums {
                    sum: sum.value(),
                    abs_sum: abs.value(),
                    sq_sum: sq.value(),
                    quartic_sum: quartic.value(),
                    tail_sq_bound: c * c * rho2 / (1.0 - rho2),
                });
            }
        }
        xm *= x;
        m += 1;
        p = if l == 0.0 {
            xm / (m as f64)
        } else {
            p * x * (l + mf) / (m as f64)
        };
    }
}

/// `E[n_L(r;1)²] = Σ_m c_m²` with `c_m = a_m r^{2m}(m G(r²) − r²G′(r²))/G(r²)²`.
pub fn first_chaos_variance(l: f64, r: f64) -> Result<f64> {
    let s = first_chaos_sums(l, r)?;
    Ok(s.sq_sum + 0.5 * s.tail_sq_bound)
}

/// The centering sum Σ a_m r^{2m}(m G − r²G′) scaled by `1/G²`, and the sum of
/// absolute values of its terms.
pub fn centering_identity(l: f64, r: f64) -> Result<(f64, f64)> {
    let s = first_chaos_sums(l, r)?;
    Ok((s.sum, s.abs_sum))
}

/// `E[S⁴]/E[S²]²` for `S = Σ c_m(|ζ_m|²−1)` along the first-chaos coefficients.
pub fn first_chaos_fourth_moment_ratio(l: f64, r: f64) -> Result<f64> {
    let s = first_chaos_sums(l, r)?;
    Ok(3.0 + 6.0 * s.quartic_sum / (s.sq_sum * s.sq_sum))
}

/// Both printed forms of the constant `C_L` in `Var n_L(r) ∼ C_L (1−r)^{2L−2}`,
/// `0 < L < 1/2`: `L²Γ(1−2L)/(4^{1−L}Γ(1−L)²)` and `L²Γ(1/2−L)/(4√π Γ(1−L))`.
pub fn long_range_variance_constants(l: f64) -> Result<(f64, f64)> {
    if !(l > 0.0 && l < 0.5) {
        return Err(domain(format!("L = {l} outside (0, 1/2)")));
    }
    let a = l * l * (ln_gamma(1.0 - 2.0 * l) - (1.0 - l) * 4f64.ln() - 2.0 * ln_gamma(1.0 - l)).exp();
    let b = l * l * (ln_gamma(0.5 - l) - ln_gamma(1.0 - l)).exp() / (4.0 * PI.sqrt());
    Ok((a, b))
}

/// Leading-order variance as `r → 1`, when a constant is known (`L ≤ 1/2`).
pub fn variance_asymptotic(l: f64, r: f64) -> Result<Option<f64>> {
    check_radius(r)?;
    let omr = 1.0 - r;
    let lg = -omr.ln();
    Ok(if l == 0.0 {
        Some(PI * PI / 24.0 / (omr * omr * lg.powi(4)))
    } else if l < 0.5 {
        let (c, _) = long_range_variance_constants(l)?;
        Some(c * omr.powf(2.0 * l - 2.0))
    } else if l == 0.5 {
        Some(lg / (8.0 * PI * omr))
    } else {
        None
    })
}

/// `E[(Σ α_m(|ζ_m|²−1))⁴] = 3(Σα_m²)² + 6Σα_m⁴` for iid `|ζ_m|² ~ Exp(1)`.
pub fn fourth_moment_s(alphas: &[f64]) -> f64 {
    let s2: CompensatedSum = alphas.iter().map(|a| a * a).collect();
    let s4: CompensatedSum = alphas.iter().map(|a| a.powi(4)).collect();
    3.0 * s2.value().powi(2) + 6.0 * s4.value()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::rel_diff;

    #[test]
    fn fourth_moment_examples() {
        assert_eq!(fourth_moment_s(&[1.0]), 9.0);
        assert_eq!(fourth_moment_s(&[1.0, 1.0]), 24.0);
        assert_eq!(fourth_moment_s(&[0.0; 5]), 0.0);
    }

    #[test]
    fn first_chaos_is_first_term() {
        for &(l, r) in &[(0.25, 0.9), (1.0, 0.5), (2.0, 0.99)] {
            let spec = chaos_variance_terms(l, r, 4).unwrap();
            let series = first_chaos_variance(l, r).unwrap();
            assert!(rel_diff(spec.terms[0].value, series) < 1e-8, "{l} {r}");
            for t in &spec.terms {
                assert!(rel_diff(t.value, t.kernel_form.unwrap()) < 1e-8);
            }
            for w in spec.terms.windows(2) {
                assert!(w[1].value < w[0].value);
            }
        }
    }

    #[test]
    fn first_chaos_at_log_kernel() {
        let spec = chaos_variance_terms(0.0, 0.9, 2).unwrap();
        let series = first_chaos_variance(0.0, 0.9).unwrap();
        assert!(rel_diff(spec.terms[0].value, series) < 1e-8);
    }

    #[test]
    fn recasting_small_grid() {
        for &(l, r) in &[(0.0, 0.5), (0.25, 0.9), (1.0, 0.99)] {
            let vi = variance_integral(l, r).unwrap();
            let spec = chaos_variance_terms(l, r, 8).unwrap();
            assert!(rel_diff(vi.value, spec.total()) < 1e-6, "{l} {r}");
        }
    }

    #[test]
    fn centering_vanishes() {
        for &l in &[0.0, 0.25, 1.0] {
            for &r in &[0.5, 0.9] {
                let (s, abs) = centering_identity(l, r).unwrap();
                assert!(s.abs() <= 1e-9 * abs);
            }
        }
    }

    #[test]
    fn constant_forms_agree() {
        for &l in &[0.05, 0.25, 0.4, 0.49] {
            let (a, b) = long_range_variance_constants(l).unwrap();
            assert!(rel_diff(a, b) < 1e-10);
        }
        assert!(variance_asymptotic(0.75, 0.9).unwrap().is_none());
    }

    #[test]
    fn l1_variance_closed_form() {
        // at L = 1 the count is a sum of independent Bernoulli(r^{2k}), k ≥ 1
        let r: f64 = 0.7;
        let v = variance_integral(1.0, r).unwrap().value;
        assert!(rel_diff(v, r * r / (1.0 - r.powi(4))) < 1e-9);
    }
}
