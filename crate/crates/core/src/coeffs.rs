//! Coefficient sequences `a_{m,L}` and the closed-form constants built on them.
//!
//! For `L > 0`, `a_{m,L} = Γ(L+m) / (Γ(L) m!)`; for `L = 0`, `a_0 = 0` and
//! `a_m = 1/m`. The sequence is produced by the multiplicative recurrence
//! `a_{m+1} = a_m (L+m)/(m+1)` so that no Γ value is ever formed.

use crate::error::{domain, Error, Result};
use crate::numerics::CompensatedSum;
use crate::special::{gamma, ln_gamma, ln_gamma_ratio, power_tail, sinc};
use serde::Serialize;
use std::f64::consts::PI;

/// Model parameter `L ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParams {
    pub l: f64,
}

/// Which side of the critical value `L = 1/2` a parameter falls on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Regime {
    Log,
    LongRange,
    Critical,
    ShortRange,
}

impl ModelParams {
    pub fn new(l: f64) -> Result<Self> {
        if !(l >= 0.0) || !l.is_finite() {
            return Err(domain(format!("L must be a finite number ≥ 0, got {l}")));
        }
        Ok(Self { l })
    }

    pub fn regime(&self) -> Regime {
        if self.l == 0.0 {
            Regime::Log
        } else if self.l < 0.5 {
            Regime::LongRange
        } else if self.l == 0.5 {
            Regime::Critical
        } else {
            Regime::ShortRange
        }
    }
}

/// `a_{m,L}`.
///
/// Small `m` use the recurrence; large `m` use a Stirling log-ratio, which keeps
/// the relative error near machine precision where the product of `m` rounded
/// factors would drift.
pub fn coef_a(l: f64, m: u64) -> f64 {
    if l == 0.0 {
        return if m == 0 { 0.0 } else { 1.0 / m as f64 };
    }
    if m <= 64 {
        let mut a = 1.0;
        for k in 0..m {
            a *= (l + k as f64) / (k as f64 + 1.0);
        }
        return a;
    }
    (ln_gamma_ratio(m as f64 + 1.0, l - 1.0) - ln_gamma(l)).exp()
}

/// Iterator over `a_{0,L}, a_{1,L}, …` by recurrence.
#[derive(Debug, Clone)]
pub struct CoefIter {
    l: f64,
    m: u64,
    a: f64,
}

impl Iterator for CoefIter {
    type Item = f64;

    #[inline]
    fn next(&mut self) -> Option<f64> {
        let out = self.a;
        let m = self.m as f64;
        self.a = if self.l == 0.0 {
            1.0 / (m + 1.0)
        } else {
            self.a * (self.l + m) / (m + 1.0)
        };
        self.m += 1;
        Some(out)
    }
}

/// Large-`m` shape `a_m ≈ scale · m^{-decay} (1 + c1/m + c2/m²)`.
#[derive(Debug, Clone, Copy)]
struct Asymptotics {
    scale: f64,
    decay: f64,
    c1: f64,
    c2: f64,
}

impl Asymptotics {
    fn new(l: f64) -> Self {
        if l == 0.0 {
            return Self {
                scale: 1.0,
                decay: 1.0,
                c1: 0.0,
                c2: 0.0,
            };
        }
        // Γ(m+L)/Γ(m+1) = m^{L-1} (1 + c1/m + c2/m² + O(m^-3))
        Self {
            scale: 1.0 / gamma(l),
            decay: 1.0 - l,
            c1: l * (l - 1.0) / 2.0,
            c2: (l - 1.0) * (l - 2.0) * l * (3.0 * l - 1.0) / 24.0,
        }
    }

    /// Σ_{m ≥ n} a_m^k; needs `k·decay > 1` and `n` large (≥ 1024 for 1e-12).
    fn power_tail(&self, k: u32, n: u64) -> f64 {
        let kf = k as f64;
        let s = kf * self.decay;
        let second = kf * self.c2 + kf * (kf - 1.0) / 2.0 * self.c1 * self.c1;
        self.scale.powi(k as i32)
            * (power_tail(s, n) + kf * self.c1 * power_tail(s + 1.0, n) + second * power_tail(s + 2.0, n))
    }
}

/// The coefficient sequence for a fixed `L` with its derived quantities.
#[derive(Debug, Clone, Copy)]
pub struct CoefSeq {
    l: f64,
    asym: Asymptotics,
}

/// Index beyond which tails are taken from the asymptotic expansion.
const ASYMPTOTIC_START: u64 = 1 << 14;

impl CoefSeq {
    pub fn new(l: f64) -> Result<Self> {
        ModelParams::new(l)?;
        Ok(Self {
            l,
            asym: Asymptotics::new(l),
        })
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn iter(&self) -> CoefIter {
        CoefIter {
            l: self.l,
            m: 0,
            a: if self.l == 0.0 { 0.0 } else { 1.0 },
        }
    }

    /// `a_0 … a_n`.
    pub fn values(&self, n: usize) -> Vec<f64> {
        self.iter().take(n + 1).collect()
    }

    pub fn a(&self, m: u64) -> f64 {
        coef_a(self.l, m)
    }

    /// Amplitude `√a_m` multiplying `ζ_m` in the series of `f_L`.
    pub fn amp(&self, m: u64) -> f64 {
        self.a(m).sqrt()
    }

    /// `1/a_m`, the zeros (negated) of the canonical product.
    pub fn inv(&self, m: u64) -> Option<f64> {
        let a = self.a(m);
        (a > 0.0).then(|| 1.0 / a)
    }

    /// Σ_{m ≤ n} a_m².
    pub fn s2(&self, n: usize) -> f64 {
        self.partial_power_sum(2, n)
    }

    /// Σ_{m ≤ n} a_m⁴.
    pub fn s4(&self, n: usize) -> f64 {
        self.partial_power_sum(4, n)
    }

    fn partial_power_sum(&self, k: i32, n: usize) -> f64 {
        self.iter()
            .take(n + 1)
            .map(|a| a.powi(k))
            .collect::<CompensatedSum>()
            .value()
    }

    /// Whether Σ a_m^k converges.
    pub fn power_sum_converges(&self, k: u32) -> bool {
        k as f64 * self.asym.decay > 1.0
    }

    /// Σ_{m ≥ n} a_m^k from the asymptotic expansion (for `n ≥ 2^14`).
    pub fn asymptotic_power_tail(&self, k: u32, n: u64) -> f64 {
        debug_assert!(n >= ASYMPTOTIC_START);
        self.asym.power_tail(k, n)
    }

    /// Σ_{m ≥ 0} a_m^k: direct head plus expansion tail.
    pub fn power_sum(&self, k: u32) -> Result<f64> {
        if !self.power_sum_converges(k) {
            return Err(Error::Divergent {
                what: "power sum of a_m",
                l: self.l,
            });
        }
        let head: CompensatedSum = self
            .iter()
            .take(ASYMPTOTIC_START as usize)
            .map(|a| a.powi(k as i32))
            .collect();
        Ok(head.value() + self.asym.power_tail(k, ASYMPTOTIC_START))
    }

    /// Σ a_m² over all `m`; finite for `L < 1/2`.
    pub fn s2_total(&self) -> Result<f64> {
        self.power_sum(2)
    }

    /// Index `N` with certified Σ_{m > N} a_m² ≤ `target`.
    ///
    /// The tail is bounded by the integral comparison for the eventually
    /// monotone terms; beyond `2^14` the expansion tail is used.
    pub fn square_tail_index(&self, target: f64, cap: usize) -> Option<usize> {
        if !self.power_sum_converges(2) {
            return None;
        }
        let tail_from = |n: u64| self.asym.power_tail(2, n);
        if tail_from(ASYMPTOTIC_START) <= target {
            // walk down through the exact head
            let vals = self.values(ASYMPTOTIC_START as usize);
            let mut idx = ASYMPTOTIC_START as usize - 1;
            let mut tail_after = tail_from(ASYMPTOTIC_START);
            while idx > 0 && tail_after + vals[idx] * vals[idx] <= target {
                tail_after += vals[idx] * vals[idx];
                idx -= 1;
            }
            return Some(idx);
        }
        let mut lo = ASYMPTOTIC_START - 1;
        let mut hi = ASYMPTOTIC_START * 2;
        while tail_from(hi + 1) > target {
            lo = hi;
            hi *= 2;
            if hi as usize > cap {
                return None;
            }
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if tail_from(mid + 1) > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(hi as usize)
    }
}

/// Precomputed suffix sums `T_j(n) = Σ_{m ≥ n} a_m^j` at power-of-two checkpoints.
#[derive(Debug, Clone)]
pub struct SuffixPowerSums {
    seq: CoefSeq,
    /// (checkpoint n, T_j(n) for j = 2..=MAX_POWER)
    checkpoints: Vec<(u64, [f64; MAX_POWER as usize - 1])>,
}

/// Highest power kept in the suffix tables.
pub const MAX_POWER: u32 = 16;
const TABLE_END: u64 = 1 << 20;
const TABLE_START_EXP: u32 = 10;

impl SuffixPowerSums {
    /// Requires Σ a_m² < ∞ (`L < 1/2`).
    pub fn new(seq: CoefSeq) -> Result<Self> {
        if !seq.power_sum_converges(2) {
            return Err(Error::Divergent {
                what: "Σ a_m²",
                l: seq.l(),
            });
        }
        let n_pow = MAX_POWER as usize - 1;
        let mut tail = [0.0; MAX_POWER as usize - 1];
        for (j, t) in tail.iter_mut().enumerate() {
            *t = seq.asym.power_tail(j as u32 + 2, TABLE_END);
        }
        let values = seq.values(TABLE_END as usize);
        let mut checkpoints = Vec::new();
        let mut upper = TABLE_END;
        for e in (TABLE_START_EXP..20).rev() {
            let lower = 1u64 << e;
            let mut block = vec![CompensatedSum::new(); n_pow];
            for &a in &values[lower as usize..upper as usize] {
                let mut p = a * a;
                for s in block.iter_mut() {
                    s.add(p);
                    p *= a;
                }
            }
            for (t, b) in tail.iter_mut().zip(&block) {
                *t += b.value();
            }
            checkpoints.push((lower, tail));
            upper = lower;
        }
        checkpoints.reverse();
        Ok(Self { seq, checkpoints })
    }

    pub fn seq(&self) -> &CoefSeq {
        &self.seq
    }

    /// Smallest checkpoint `n ≥ min_n` with `a_n ≤ bound`, plus its suffix sums.
    ///
    /// Past the table the suffix sums come from the asymptotic expansion.
    pub fn cutoff_for(&self, bound: f64) -> (u64, [f64; MAX_POWER as usize - 1]) {
        for &(n, sums) in &self.checkpoints {
            if self.seq.a(n) <= bound {
                return (n, sums);
            }
        }
        let mut n = TABLE_END * 2;
        while self.seq.a(n) > bound {
            n *= 2;
        }
        let mut sums = [0.0; MAX_POWER as usize - 1];
        for (j, s) in sums.iter_mut().enumerate() {
            *s = self.seq.asym.power_tail(j as u32 + 2, n);
        }
        (n, sums)
    }
}

fn require_long_range(l: f64, open_at_zero: bool) -> Result<()> {
    let ok = if open_at_zero {
        l > 0.0 && l < 0.5
    } else {
        (0.0..0.5).contains(&l)
    };
    if ok {
        Ok(())
    } else {
        Err(domain(format!("L = {l} outside the long-range interval")))
    }
}

/// Normalising constant `c_L = (Σ a_m²)^{-1/2}`, closed form.
pub fn c_l(l: f64) -> Result<f64> {
    require_long_range(l, false)?;
    if l == 0.0 {
        return Ok(6f64.sqrt() / PI);
    }
    let log_c2 = 2.0 * ln_gamma(1.0 - l) - ln_gamma(1.0 - 2.0 * l);
    Ok((0.5 * log_c2).exp())
}

/// Right-tail constant κ_L = e^{-1} ∏_{m≥1} e^{-a_m}/(1-a_m).
pub fn kappa_l(l: f64) -> Result<f64> {
    require_long_range(l, true)?;
    let seq = CoefSeq::new(l)?;
    Ok(kappa_from_sums(&SuffixPowerSums::new(seq)?))
}

pub(crate) fn kappa_from_sums(sums: &SuffixPowerSums) -> f64 {
    // -a - log(1-a) = Σ_{j≥2} a^j / j; direct until a_n ≤ 0.05, series after
    let (cut, tails) = sums.cutoff_for(0.05);
    let mut acc = CompensatedSum::new();
    for a in sums.seq().iter().take(cut as usize).skip(1) {
        acc.add(-a - (-a).ln_1p());
    }
    for (j, t) in tails.iter().enumerate() {
        acc.add(t / (j as f64 + 2.0));
    }
    (acc.value() - 1.0).exp()
}

/// Left-tail constant λ_L = L Γ(L)^{1/L} (−sinc(π/(1−L)))^{1/L − 1}.
pub fn lambda_l(l: f64) -> Result<f64> {
    require_long_range(l, true)?;
    let base = -sinc(PI / (1.0 - l));
    Ok(l * (ln_gamma(l) / l).exp() * base.powf(1.0 / l - 1.0))
}

/// Order ρ = 1/(1−L) of the canonical product.
pub fn rho(l: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&l) {
        return Err(domain(format!("order undefined for L = {l}")));
    }
    Ok(1.0 / (1.0 - l))
}

/// Density constant d_ρ = Γ(1 − 1/ρ)^{−ρ} = Γ(L)^{−1/(1−L)}; zero at `L = 0`.
pub fn d_rho(l: f64) -> Result<f64> {
    let rho = rho(l)?;
    if l == 0.0 {
        return Ok(0.0);
    }
    Ok((-rho * ln_gamma(l)).exp())
}

/// Growth constant π d_ρ / sin(πρ) of log Ψ_L on the positive axis.
pub fn growth_constant(l: f64) -> Result<f64> {
    require_long_range(l, true)?;
    let rho = rho(l)?;
    Ok(PI * d_rho(l)? / (PI * rho).sin())
}

/// ψ_L(x) = (1 − (1−x)^{1−2L}) / (π(1−2L)), with the logarithmic limit at `L = 1/2`.
pub fn psi_l(l: f64, x: f64) -> Result<f64> {
    if !(l > 0.0) {
        return Err(domain(format!("ψ_L needs L > 0, got {l}")));
    }
    if !(0.0..1.0).contains(&x) {
        return Err(domain(format!("ψ_L needs 0 ≤ x < 1, got {x}")));
    }
    let delta = 1.0 - 2.0 * l;
    let log1mx = (-x).ln_1p();
    if delta.abs() < 1e-12 {
        // series in δ·log(1−x) about the branch point
        let y = delta * log1mx;
        return Ok(-log1mx / PI * (1.0 + y / 2.0 + y * y / 6.0));
    }
    Ok(-(delta * log1mx).exp_m1() / (PI * delta))
}

/// Σ_m a_m² x^m.
pub fn hyp_sum(l: f64, x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(domain(format!("hyp_sum needs x in [0,1], got {x}")));
    }
    let seq = CoefSeq::new(l)?;
    if x == 1.0 {
        return seq.s2_total();
    }
    let mut acc = CompensatedSum::new();
    let mut xm = 1.0;
    for (m, a) in seq.iter().enumerate() {
        let term = a * a * xm;
        acc.add(term);
        let mf = m as f64;
        let growth = if l > 1.0 {
            ((l + mf + 1.0) / (mf + 2.0)).powi(2)
        } else {
            1.0
        };
        let ratio = x * growth;
        if m > 0 && ratio < 1.0 {
            let next = term * ratio;
            if next / (1.0 - ratio) <= 1e-17 * acc.value() {
                break;
            }
        }
        xm *= x;
    }
    Ok(acc.value())
}

/// Constants reported by the `constants` subcommand.
#[derive(Debug, Clone, Serialize)]
pub struct Constants {
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "c_L")]
    pub c_l: Option<f64>,
    #[serde(rename = "kappa_L")]
    pub kappa_l: Option<f64>,
    #[serde(rename = "lambda_L")]
    pub lambda_l: Option<f64>,
    pub rho: Option<f64>,
    pub d_rho: Option<f64>,
}

impl Constants {
    pub fn for_l(l: f64) -> Result<Self> {
        ModelParams::new(l)?;
        Ok(Self {
            l,
            c_l: c_l(l).ok(),
            kappa_l: kappa_l(l).ok(),
            lambda_l: lambda_l(l).ok(),
            rho: rho(l).ok(),
            d_rho: d_rho(l).ok(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::rel_diff;

    #[test]
    fn coef_examples() {
        assert_eq!(coef_a(0.0, 0), 0.0);
        assert!((coef_a(0.0, 3) - 1.0 / 3.0).abs() < 1e-16);
        assert!((coef_a(1.0, 7) - 1.0).abs() < 1e-15);
        assert!((coef_a(0.25, 2) - 0.15625).abs() < 1e-16);
        assert!(rel_diff(coef_a(1.0, 1_000_000), 1.0) < 1e-13);
        assert!(rel_diff(coef_a(2.0, 10_000_000), 10_000_001.0) < 1e-13);
    }

    #[test]
    fn recurrence_invariants() {
        let seq = CoefSeq::new(0.0).unwrap();
        let v = seq.values(5);
        assert_eq!(v[0], 0.0);
        assert_eq!(v[1], 1.0);
        for l in [0.1, 0.25, 0.4, 0.7] {
            let v = CoefSeq::new(l).unwrap().values(200);
            assert_eq!(v[0], 1.0);
            for m in 1..200 {
                assert!(v[m] > 0.0);
                assert!(v[m + 1] < v[m], "L={l} m={m}");
            }
        }
    }

    #[test]
    fn large_m_power_law() {
        for l in [0.25, 0.5, 1.0] {
            let m = 1_000_000u64;
            let v = coef_a(l, m) * gamma(l) * (m as f64).powf(1.0 - l);
            assert!((0.99..=1.01).contains(&v), "L={l}: {v}");
        }
    }

    #[test]
    fn c_l_examples() {
        assert!((c_l(0.0).unwrap() - 0.779_696_801_233_676).abs() < 1e-12);
        assert!(c_l(0.499).unwrap() < 0.1);
        assert!(c_l(0.5).is_err());
        assert!(c_l(-0.1).is_err());
    }

    #[test]
    fn c_l_matches_series() {
        for l in [0.0, 0.1, 0.25, 0.4] {
            let s2 = CoefSeq::new(l).unwrap().s2_total().unwrap();
            let c = c_l(l).unwrap();
            assert!((s2 * c * c - 1.0).abs() < 1e-10, "L={l}: {}", s2 * c * c);
        }
    }

    #[test]
    fn c_l_against_long_direct_sum() {
        // direct sum to 10^6 plus a crude integral tail: agreement to 1e-8
        let l = 0.25;
        let seq = CoefSeq::new(l).unwrap();
        let n = 1_000_000usize;
        let head = seq.s2(n);
        let a_n = seq.a(n as u64);
        // Σ_{m>n} a_m² ≈ ∫_n^∞ a_n² (m/n)^{-1.5} dm − a_n²/2 = a_n² (2n − 1/2)
        let tail = a_n * a_n * (2.0 * n as f64 - 0.5);
        let c_series = 1.0 / (head + tail).sqrt();
        assert!(rel_diff(c_series, c_l(l).unwrap()) < 1e-8);
    }

    #[test]
    fn kappa_properties() {
        for l in [0.05, 0.25, 0.3, 0.45] {
            assert!(kappa_l(l).unwrap() > (-1f64).exp());
        }
        assert!(kappa_l(0.0).is_err());
        assert!(kappa_l(0.5).is_err());
    }

    #[test]
    fn kappa_stable_under_cutoff_doubling() {
        // oracle: brute-force product with cutoff M and 2M plus the leading tail
        let l = 0.25;
        let seq = CoefSeq::new(l).unwrap();
        let brute = |m_cut: usize| {
            let vals = seq.values(m_cut);
            let mut acc = CompensatedSum::new();
            for &a in &vals[1..] {
                acc.add(-a - (-a).ln_1p());
            }
            // Σ_{m>M} a²/2 ≈ a_M² (2M)/2
            let a_m = vals[m_cut];
            acc.add(a_m * a_m * m_cut as f64);
            (acc.value() - 1.0).exp()
        };
        let k1 = brute(1 << 21);
        let k2 = brute(1 << 22);
        assert!(rel_diff(k1, k2) < 1e-9);
        assert!(rel_diff(kappa_l(l).unwrap(), k2) < 1e-9);
    }

    #[test]
    fn lambda_examples() {
        let lam = lambda_l(0.4).unwrap();
        assert!((lam - 0.1972).abs() < 5e-5, "{lam}");
        for l in [0.01, 0.2, 0.3, 0.49] {
            assert!(-sinc(PI / (1.0 - l)) > 0.0);
        }
    }

    #[test]
    fn lambda_matches_tauberian_form() {
        for l in [0.1, 0.3, 0.45] {
            let rho = rho(l).unwrap();
            let d = d_rho(l).unwrap();
            let alt = (1.0 - 1.0 / rho)
                * (-(PI * rho).sin() / (PI * rho * d)).powf(1.0 / (rho - 1.0));
            assert!(rel_diff(lambda_l(l).unwrap(), alt) < 1e-12, "L={l}");
        }
    }

    #[test]
    fn d_rho_value() {
        assert!((d_rho(0.25).unwrap() - 0.1795).abs() < 1e-4);
        assert!((growth_constant(0.25).unwrap() + 0.651).abs() < 1e-3);
    }

    #[test]
    fn psi_examples() {
        assert_eq!(psi_l(0.3, 0.0).unwrap(), 0.0);
        let x = 1.0 - (-1f64).exp();
        assert!((psi_l(0.5, x).unwrap() - 1.0 / PI).abs() < 1e-15);
        let lo = psi_l(0.5 - 1e-9, 0.9).unwrap();
        let hi = psi_l(0.5 + 1e-9, 0.9).unwrap();
        let mid = psi_l(0.5, 0.9).unwrap();
        assert!((lo - hi).abs() < 1e-6);
        assert!((lo - mid).abs() < 1e-6);
        assert!(psi_l(0.3, 1.0).is_err());
    }

    #[test]
    fn hyp_sum_examples() {
        assert_eq!(hyp_sum(0.25, 0.0).unwrap(), 1.0);
        let closed = gamma(0.5) / gamma(0.75).powi(2);
        let at_one = hyp_sum(0.25, 1.0).unwrap();
        assert!(rel_diff(at_one, closed) < 1e-8);
        // ₂F₁(1/4, 1/4; 1; 0.99), evaluated independently
        let near = hyp_sum(0.25, 0.99).unwrap();
        assert!(rel_diff(near, 1.154_754_378_957_632_7) < 1e-12, "{near}");
        assert!(near < at_one && near > 0.97 * at_one);
        assert!(matches!(hyp_sum(0.5, 1.0), Err(Error::Divergent { .. })));
    }

    #[test]
    fn square_tail_index_is_certified() {
        let seq = CoefSeq::new(0.0).unwrap();
        let s2 = seq.s2_total().unwrap();
        let target = 1e-6 * s2;
        let n = seq.square_tail_index(target, 10_000_000).unwrap();
        // Σ_{m>n} 1/m² ≈ 1/n
        let tail = power_tail(2.0, n as u64 + 1);
        assert!(tail <= target);
        assert!(power_tail(2.0, n as u64) > target);
    }

    #[test]
    fn suffix_sums_against_direct() {
        let seq = CoefSeq::new(0.3).unwrap();
        let sums = SuffixPowerSums::new(seq).unwrap();
        let (n, t) = sums.cutoff_for(0.01);
        let direct2: f64 = seq
            .iter()
            .skip(n as usize)
            .take(1 << 23)
            .map(|a| a * a)
            .sum::<f64>()
            + seq.asymptotic_power_tail(2, n + (1 << 23));
        assert!(rel_diff(t[0], direct2) < 1e-10);
    }
}
