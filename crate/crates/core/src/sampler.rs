//! Seeded realizations of `f_L` and of the limit variable `X_L`.
//!
//! Every trial draws from its own ChaCha8 stream: the generator is seeded with
//! `seed` and placed on stream `trial`. Coefficient `ζ_m` is the `m`-th pair of
//! standard normals on that stream, scaled so that `E|ζ_m|² = 1`. A realization
//! truncated at degree `N` is therefore a prefix of the one truncated at any
//! larger degree.

use crate::coeffs::{CoefSeq, ModelParams};
use crate::error::{domain, Error, Result};
use crate::kernel::{log_one_over_one_minus, one_minus_sq};
use crate::numerics::CompensatedSum;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use rustfft::FftPlanner;
use serde::Serialize;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Generator identity recorded in run records.
pub const GENERATOR: &str = "ChaCha8Rng(seed_from_u64(seed), stream = trial)";

/// Largest truncation degree accepted.
pub const DEGREE_CAP: usize = 10_000_000;

/// The per-trial random stream.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Standard complex Gaussian with `E|ζ|² = 1`.
#[inline]
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * FRAC_1_SQRT_2
}

/// Smallest `N` with certified Σ_{m>N} a_m r^{2m} ≤ `eps_rel² G(r²)`.
pub fn truncation_degree(l: f64, r: f64, eps_rel: f64) -> Result<usize> {
    ModelParams::new(l)?;
    if !(r > 0.0 && r < 1.0) {
        return Err(domain(format!("radius must lie in (0, 1), got {r}")));
    }
    if !(eps_rel > 0.0 && eps_rel < 1.0) {
        return Err(domain(format!("eps_rel must lie in (0, 1), got {eps_rel}")));
    }
    let x = r * r;
    let omx = one_minus_sq(r);
    let g = if l == 0.0 {
        log_one_over_one_minus(x, omx)
    } else {
        (-l * omx.ln()).exp()
    };
    let target = eps_rel * eps_rel * g;
    // p = a_{N+1} x^{N+1}
    let mut p = if l == 0.0 { x } else { l * x };
    for n in 0..DEGREE_CAP {
        let nf = n as f64;
        let sup_ratio = if l > 1.0 { (l + nf + 1.0) / (nf + 2.0) } else { 1.0 };
        let q = x * sup_ratio;
        if q < 1.0 && p / (1.0 - q) <= target {
            return Ok(n);
        }
        let m = nf + 1.0;
        p *= if l == 0.0 { x * m / (m + 1.0) } else { x * (l + m) / (m + 1.0) };
    }
    Err(Error::CapExceeded {
        cap: DEGREE_CAP,
        l,
        r,
    })
}

/// One realization of the truncated series `Σ_{m≤N} √a_m ζ_m z^m`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GafSample {
    pub l: f64,
    /// Radius for which the truncation was certified.
    pub radius: f64,
    pub eps_rel: f64,
    pub seed: u64,
    pub trial: u64,
    pub zetas: Vec<Complex64>,
    #[serde(skip)]
    amps: Vec<f64>,
}

impl GafSample {
    /// Truncation degree `N`.
    pub fn degree(&self) -> usize {
        self.zetas.len() - 1
    }

    /// A sample with prescribed `ζ_m` (for forced test polynomials).
    pub fn from_zetas(l: f64, radius: f64, zetas: Vec<Complex64>) -> Result<Self> {
        if zetas.is_empty() {
            return Err(domain("need at least one coefficient"));
        }
        let amps = CoefSeq::new(l)?.values(zetas.len() - 1).iter().map(|a| a.sqrt()).collect();
        Ok(Self {
            l,
            radius,
            eps_rel: 0.0,
            seed: 0,
            trial: 0,
            zetas,
            amps,
        })
    }

    /// Polynomial coefficients `√a_m ζ_m`.
    pub fn poly_coeffs(&self) -> Vec<Complex64> {
        self.zetas.iter().zip(&self.amps).map(|(z, a)| z * a).collect()
    }

    pub fn amp(&self, m: usize) -> f64 {
        self.amps[m]
    }

    /// `f(z)` by Horner's rule.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.zetas
            .iter()
            .zip(&self.amps)
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, (zeta, a)| acc * z + zeta * a)
    }

    /// Standard deviation of the truncated `f` on `|z| = r`: `(Σ a_m r^{2m})^{1/2}`.
    pub fn rms_on_circle(&self, r: f64) -> f64 {
        let x = r * r;
        let mut p = 1.0;
        let mut s = CompensatedSum::new();
        for a in &self.amps {
            s.add(a * a * p);
            p *= x;
        }
        s.value().sqrt()
    }
}

/// Draws the GAF truncated for radius `r` at relative accuracy `eps_rel`.
pub fn sample_gaf(l: f64, r: f64, seed: u64, trial: u64, eps_rel: f64) -> Result<GafSample> {
    let n = truncation_degree(l, r, eps_rel)?;
    let mut rng = trial_rng(seed, trial);
    let zetas = (0..=n).map(|_| complex_gaussian(&mut rng)).collect();
    let mut s = GafSample::from_zetas(l, r, zetas)?;
    s.eps_rel = eps_rel;
    s.seed = seed;
    s.trial = trial;
    Ok(s)
}

/// A circle `|z − center| = radius` inside the unit disc.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CircleSpec {
    pub center: Complex64,
    pub radius: f64,
}

impl CircleSpec {
    pub fn new(center: Complex64, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !(center.norm() + radius < 1.0) {
            return Err(domain(format!(
                "circle (center {center}, radius {radius}) is not inside the unit disc"
            )));
        }
        Ok(Self { center, radius })
    }

    pub fn centered(radius: f64) -> Result<Self> {
        Self::new(Complex64::new(0.0, 0.0), radius)
    }

    pub fn is_centered(&self) -> bool {
        self.center == Complex64::new(0.0, 0.0)
    }

    /// Largest `|z|` on the circle.
    pub fn outer_radius(&self) -> f64 {
        self.center.norm() + self.radius
    }

    /// Node `k` of `m` equispaced nodes.
    pub fn node(&self, k: usize, m: usize) -> Complex64 {
        self.center + Complex64::from_polar(self.radius, 2.0 * PI * k as f64 / m as f64)
    }
}

/// Values of `f` at `m` equispaced nodes of a circle.
#[derive(Debug, Clone)]
pub struct CircleEvaluation {
    pub values: Vec<Complex64>,
}

impl CircleEvaluation {
    pub fn nodes(&self) -> usize {
        self.values.len()
    }
}

/// Evaluates `f` at the `m` nodes of `circle`.
///
/// Centered circles use one inverse FFT of the folded vector `√a_k ζ_k r^k`;
/// other circles use Horner at each node.
pub fn eval_on_circle(sample: &GafSample, circle: &CircleSpec, m: usize) -> CircleEvaluation {
    if !circle.is_centered() {
        let values = (0..m).map(|k| sample.eval(circle.node(k, m))).collect();
        return CircleEvaluation { values };
    }
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    let mut rk = 1.0;
    for (k, (zeta, a)) in sample.zetas.iter().zip(&sample.amps).enumerate() {
        // e^{2πi jk/m} only depends on k mod m
        buf[k % m] += zeta * (a * rk);
        rk *= circle.radius;
    }
    let fft = FftPlanner::new().plan_fft_inverse(m);
    fft.process(&mut buf);
    CircleEvaluation { values: buf }
}

/// Sampler for `X_L = Σ a_m(|ζ_m|² − 1)`, truncated at `N_X` terms.
#[derive(Debug, Clone)]
pub struct XlSampler {
    l: f64,
    coefs: Vec<f64>,
    tail_sd: f64,
    gaussian_tail: bool,
    certified: bool,
}

/// Default cap on `N_X`.
pub const XL_TERM_CAP: usize = 100_000;

impl XlSampler {
    /// Chooses `N_X` as the smallest index with Σ_{m>N_X} a_m² ≤ eps_x² Σ a_m²,
    /// clipped to `cap`.
    ///
    /// When the cap binds the truncation is not certified; `gaussian_tail`
    /// then replaces the dropped terms by a centered normal of the same variance.
    pub fn new(l: f64, eps_x: f64, cap: usize, gaussian_tail: bool) -> Result<Self> {
        if !(0.0..0.5).contains(&l) {
            return Err(domain(format!("X_L is defined for 0 ≤ L < 1/2, got {l}")));
        }
        if !(eps_x > 0.0 && eps_x < 1.0) {
            return Err(domain(format!("eps_x must lie in (0, 1), got {eps_x}")));
        }
        let seq = CoefSeq::new(l)?;
        let total = seq.s2_total()?;
        let (n, certified) = match seq.square_tail_index(eps_x * eps_x * total, cap) {
            Some(n) if n <= cap => (n, true),
            _ => (cap, false),
        };
        Self::with_terms_inner(seq, total, n, gaussian_tail, certified)
    }

    /// Fixed truncation `N_X = terms`.
    pub fn with_terms(l: f64, terms: usize, gaussian_tail: bool) -> Result<Self> {
        if !(0.0..0.5).contains(&l) {
            return Err(domain(format!("X_L is defined for 0 ≤ L < 1/2, got {l}")));
        }
        let seq = CoefSeq::new(l)?;
        let total = seq.s2_total()?;
        Self::with_terms_inner(seq, total, terms, gaussian_tail, false)
    }

    fn with_terms_inner(seq: CoefSeq, total: f64, n: usize, gaussian_tail: bool, certified: bool) -> Result<Self> {
        let coefs = seq.values(n);
        let head: CompensatedSum = coefs.iter().map(|a| a * a).collect();
        let tail_var = (total - head.value()).max(0.0);
        Ok(Self {
            l: seq.l(),
            coefs,
            tail_sd: tail_var.sqrt(),
            gaussian_tail,
            certified,
        })
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    /// `N_X`.
    pub fn terms(&self) -> usize {
        self.coefs.len() - 1
    }

    /// Whether `N_X` meets the `eps_x` criterion (false when capped).
    pub fn certified(&self) -> bool {
        self.certified
    }

    /// Standard deviation of the dropped terms.
    pub fn tail_sd(&self) -> f64 {
        self.tail_sd
    }

    pub fn gaussian_tail(&self) -> bool {
        self.gaussian_tail
    }

    /// One draw on the trial stream, using `|ζ_m|² ~ Exp(1)`.
    pub fn sample(&self, seed: u64, trial: u64) -> f64 {
        let mut rng = trial_rng(seed, trial);
        self.sample_rng(&mut rng)
    }

    pub fn sample_rng<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let mut s = 0.0;
        for &a in &self.coefs {
            let e: f64 = rng.sample(Exp1);
            s += a * (e - 1.0);
        }
        if self.gaussian_tail {
            let g: f64 = rng.sample(StandardNormal);
            s += self.tail_sd * g;
        }
        s
    }

    /// `X_L` built from given coefficients `ζ_0, ζ_1, …` (at least `N_X + 1`).
    ///
    /// The Gaussian tail, when enabled, is not added here: the caller's
    /// stream is shared with other statistics.
    pub fn from_zetas(&self, zetas: &[Complex64]) -> Result<f64> {
        if zetas.len() < self.coefs.len() {
            return Err(Error::InsufficientSamples {
                needed: self.coefs.len(),
                got: zetas.len(),
            });
        }
        Ok(self
            .coefs
            .iter()
            .zip(zetas)
            .map(|(a, z)| a * (z.norm_sqr() - 1.0))
            .sum())
    }
}

/// `X_L` on the trial stream with the default truncation rule.
pub fn sample_xl(l: f64, seed: u64, trial: u64, eps_x: f64) -> Result<f64> {
    Ok(XlSampler::new(l, eps_x, XL_TERM_CAP, false)?.sample(seed, trial))
}

/// The first-chaos component `n_L(r;1)` of the zero count, summed over the
/// sample's coefficients:
/// `(1−r²)^{L−1} Σ a_m (m(1−r²) − Lr²)(|ζ_m|²−1) r^{2m}` for `L > 0`, and
/// `Σ a_m (m(1−r²)ℓ − r²)(|ζ_m|²−1) r^{2m} / ((1−r²)ℓ²)`, `ℓ = log 1/(1−r²)`, at `L = 0`.
pub fn first_chaos(sample: &GafSample, r: f64) -> Result<f64> {
    if !(r > 0.0 && r <= sample.radius) {
        return Err(Error::OutsideCertifiedRadius {
            certified: sample.radius,
        });
    }
    let l = sample.l;
    let x = r * r;
    let omx = one_minus_sq(r);
    let lg = log_one_over_one_minus(x, omx);
    let mut acc = CompensatedSum::new();
    let mut xm = 1.0;
    for (m, (zeta, amp)) in sample.zetas.iter().zip(&sample.amps).enumerate() {
        let mf = m as f64;
        let a = amp * amp;
        let weight = if l == 0.0 { mf * omx * lg - x } else { mf * omx - l * x };
        acc.add(a * weight * (zeta.norm_sqr() - 1.0) * xm);
        xm *= x;
    }
    Ok(if l == 0.0 {
        acc.value() / (omx * lg * lg)
    } else {
        omx.powf(l - 1.0) * acc.value()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truncation_examples() {
        let n = truncation_degree(1.0, 0.5, 1e-6).unwrap();
        assert!(n <= 60);
        assert_eq!(n, 19);
        // direct tail check at L = 0
        let n = truncation_degree(0.0, 0.9, 1e-6).unwrap();
        let x: f64 = 0.81;
        let tail: f64 = (n + 1..n + 5000).map(|m| x.powi(m as i32) / m as f64).sum();
        assert!(tail <= 1e-12 * (1.0 / (1.0 - x)).ln());
        assert!(matches!(truncation_degree(1.0, 1.0 - 1e-9, 1e-6), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn truncation_monotone_in_eps() {
        let mut prev = 0;
        for k in 1..10 {
            let n = truncation_degree(0.25, 0.95, 0.5f64.powi(k)).unwrap();
            assert!(n >= prev);
            prev = n;
        }
    }

    #[test]
    fn sampling_is_deterministic_and_prefix_stable() {
        let a = sample_gaf(0.5, 0.9, 7, 3, 1e-6).unwrap();
        let b = sample_gaf(0.5, 0.9, 7, 3, 1e-6).unwrap();
        assert_eq!(a, b);
        let c = sample_gaf(0.5, 0.99, 7, 3, 1e-6).unwrap();
        assert!(c.degree() > a.degree());
        assert_eq!(&c.zetas[..=a.degree()], &a.zetas[..]);
        let d = sample_gaf(0.5, 0.9, 7, 4, 1e-6).unwrap();
        assert_ne!(a.zetas[0], d.zetas[0]);
    }

    #[test]
    fn forced_monomial_on_circle() {
        let mut z = vec![Complex64::new(0.0, 0.0); 4];
        z[3] = Complex64::new(1.0, 0.0);
        let s = GafSample::from_zetas(1.0, 0.9, z).unwrap();
        let r = 0.7;
        let ev = eval_on_circle(&s, &CircleSpec::centered(r).unwrap(), 64);
        for (k, v) in ev.values.iter().enumerate() {
            let expect = Complex64::from_polar(r.powi(3), 6.0 * PI * k as f64 / 64.0);
            assert!((v - expect).norm() < 1e-14);
        }
    }

    #[test]
    fn fft_matches_horner_and_refinement() {
        let s = sample_gaf(0.75, 0.95, 11, 0, 1e-6).unwrap();
        let circle = CircleSpec::centered(0.95).unwrap();
        let m = 1 << 12;
        let ev = eval_on_circle(&s, &circle, m);
        let fine = eval_on_circle(&s, &circle, 2 * m);
        for k in [0, 17, 500, 1023, 2047, 3000, 4001, 4095] {
            let direct = s.eval(circle.node(k, m));
            assert!((ev.values[k] - direct).norm() <= 1e-9 * direct.norm());
            assert!((ev.values[k] - fine.values[2 * k]).norm() <= 1e-12 * s.rms_on_circle(0.95));
        }
        // folding when the degree exceeds the node count
        let small = eval_on_circle(&s, &circle, 64);
        for k in [0, 5, 63] {
            let direct = s.eval(circle.node(k, 64));
            assert!((small.values[k] - direct).norm() <= 1e-9 * direct.norm());
        }
    }

    #[test]
    fn first_chaos_zero_noise() {
        // |ζ_m|² = 1 for every m makes every term vanish
        let z = vec![Complex64::new(1.0, 0.0); 50];
        for &l in &[0.0, 0.3, 2.0] {
            let s = GafSample::from_zetas(l, 0.5, z.clone()).unwrap();
            assert_eq!(first_chaos(&s, 0.5).unwrap(), 0.0);
        }
        let s = GafSample::from_zetas(1.0, 0.5, z).unwrap();
        assert!(first_chaos(&s, 0.6).is_err());
    }

    #[test]
    fn xl_truncation_rule() {
        // Σ_{m>N} 1/m² ≈ 1/N ≤ 1e-4·π²/6 gives N ≈ 6080
        let s = XlSampler::new(0.0, 1e-2, XL_TERM_CAP, false).unwrap();
        assert!(s.certified());
        assert!((6000..6200).contains(&s.terms()), "{}", s.terms());
        let tail: f64 = (s.terms() + 1..10_000_000).map(|m| 1.0 / (m as f64).powi(2)).sum();
        assert!(tail <= 1e-4 * PI * PI / 6.0);
        let capped = XlSampler::new(0.25, 1e-3, 1000, true).unwrap();
        assert!(!capped.certified());
        assert_eq!(capped.terms(), 1000);
        assert!(capped.tail_sd() > 0.0);
    }
}
