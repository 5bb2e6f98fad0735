//! Limit laws of the normalised zero count: the standard normal, the Gumbel law
//! of `X_0`, and the law of `X_L = Σ a_m(|ζ_m|² − 1)` for `0 < L < 1/2`.
//!
//! The law of `X_L` is reached through its characteristic function
//! `φ(t) = 1/Ψ_L(−it)`, where `Ψ_L(z) = ∏ (1 + a_m z) e^{−a_m z}` is the
//! canonical product with zeros at `−b_m = −1/a_m`. Densities and CDFs come
//! from trapezoidal Fourier inversion, which for an analytic `φ` is accurate
//! up to aliasing at distance `2π/h` in `x`.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::coeffs::{growth_constant, kappa_from_sums, lambda_l, rho, CoefSeq, SuffixPowerSums};
use crate::error::{domain, Error, Result};
use crate::numerics::CompensatedSum;
use crate::sampler::XlSampler;
use crate::special::{normal_cdf, normal_pdf, EULER_GAMMA};

/// `exp(−e^{−x−γ})`: the law of `X_0`, mean 0 and variance π²/6.
pub fn gumbel_cdf(x: f64) -> f64 {
    (-(-x - EULER_GAMMA).exp()).exp()
}

pub fn gumbel_pdf(x: f64) -> f64 {
    let e = (-x - EULER_GAMMA).exp();
    e * (-e).exp()
}

/// Distance to a zero of `Ψ_L` below which evaluation is refused.
pub const POLE_GUARD: f64 = 1e-8;
/// Tail-series terms are used once `|a_m z| ≤ SERIES_BOUND`.
const SERIES_BOUND: f64 = 0.1;
/// Coefficients kept in memory per law.
const STORED_TERMS: usize = 1 << 20;

/// `Ψ_L(z) = ∏_{m≥0} (1 + z/b_m) e^{−z/b_m}` with `b_m = 1/a_m`.
///
/// Factors with `|a_m z| > 0.1` are multiplied out; the rest enter through
/// `Σ_{j≥2} (−1)^{j+1} z^j T_j / j` with the suffix power sums `T_j`.
#[derive(Debug)]
pub struct CanonicalProduct {
    l: f64,
    a: Vec<f64>,
    sums: SuffixPowerSums,
}

impl CanonicalProduct {
    /// Defined for `0 ≤ L < 1/2`, where `Σ a_m² < ∞`.
    pub fn new(l: f64) -> Result<Self> {
        if !(0.0..0.5).contains(&l) {
            return Err(domain(format!("canonical product needs 0 ≤ L < 1/2, got {l}")));
        }
        let seq = CoefSeq::new(l)?;
        let a = seq.values(STORED_TERMS);
        let sums = SuffixPowerSums::new(seq)?;
        Ok(Self { l, a, sums })
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    /// The zero `−b_m`; `None` when `a_m = 0`.
    pub fn zero(&self, m: u64) -> Option<f64> {
        self.sums.seq().inv(m).map(|b| -b)
    }

    /// κ_L = e^{−1} ∏_{m≥1} e^{−a_m}/(1 − a_m).
    pub fn kappa(&self) -> f64 {
        kappa_from_sums(&self.sums)
    }

    /// `log Ψ_L(z)` as a sum of principal logarithms.
    ///
    /// Fails within [`POLE_GUARD`] of a zero.
    pub fn log_psi(&self, z: Complex64) -> Result<Complex64> {
        let bound = if z.norm() > 0.0 {
            SERIES_BOUND / z.norm()
        } else {
            f64::INFINITY
        };
        let (cut, tails) = self.sums.cutoff_for(bound);
        let mut re = CompensatedSum::new();
        let mut im = CompensatedSum::new();
        let mut add = |a: f64| -> Result<()> {
            if a == 0.0 {
                return Ok(());
            }
            let u = z * a;
            let one_plus = Complex64::new(1.0, 0.0) + u;
            let distance = one_plus.norm() / a;
            if distance < POLE_GUARD {
                return Err(Error::PoleProximity { distance });
            }
            // log(1+u) with ln_1p on the modulus
            let log_mod = 0.5 * (2.0 * u.re + u.norm_sqr()).ln_1p();
            let arg = u.im.atan2(1.0 + u.re);
            re.add(log_mod - u.re);
            im.add(arg - u.im);
            Ok(())
        };
        let cut = cut as usize;
        if cut <= self.a.len() {
            for &a in &self.a[..cut] {
                add(a)?;
            }
        } else {
            for a in self.sums.seq().iter().take(cut) {
                add(a)?;
            }
        }
        // Σ_{j≥2} (−1)^{j+1} z^j T_j / j
        let mut zj = z;
        for (k, t) in tails.iter().enumerate() {
            zj *= z;
            let j = k as f64 + 2.0;
            let sign = if k % 2 == 0 { -1.0 } else { 1.0 };
            let term = zj * (sign * t / j);
            re.add(term.re);
            im.add(term.im);
        }
        Ok(Complex64::new(re.value(), im.value()))
    }

    /// `Ψ_L(z)`; exactly 0 at a zero.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        match self.log_psi(z) {
            Ok(v) => v.exp(),
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    /// `φ_{X_L}(w) = 1/Ψ_L(−iw)`.
    pub fn char_fn(&self, w: Complex64) -> Result<Complex64> {
        Ok((-self.log_psi(Complex64::new(w.im, -w.re))?).exp())
    }
}

/// `Ψ_L(z)`; zero exactly at `−b_m`.
pub fn psi_canonical(l: f64, z: Complex64) -> Result<Complex64> {
    if !(l > 0.0 && l < 0.5) {
        return Err(domain(format!("Ψ_L needs 0 < L < 1/2, got {l}")));
    }
    Ok(XlLaw::shared(l)?.product.eval(z))
}

/// `log Ψ_L(R) / ((π d_ρ / sin πρ) R^ρ)`.
pub fn growth_ratio(l: f64, big_r: f64) -> Result<f64> {
    if !(big_r > 0.0) {
        return Err(domain(format!("growth ratio needs R > 0, got {big_r}")));
    }
    let c = growth_constant(l)?;
    let log_psi = XlLaw::shared(l)?.product.log_psi(Complex64::new(big_r, 0.0))?;
    Ok(log_psi.re / (c * big_r.powf(rho(l)?)))
}

/// `φ_{X_L}(w)` for `0 ≤ L < 1/2`.
pub fn char_xl(l: f64, w: Complex64) -> Result<Complex64> {
    XlLaw::shared(l)?.product.char_fn(w)
}

/// `E[e^{−λ X_L}] = 1/Ψ_L(λ)`.
pub fn mgf_identity_check(l: f64, lambda: f64) -> Result<f64> {
    Ok(log_mgf(l, lambda)?.exp())
}

/// `log E[e^{−λ X_L}] = −log Ψ_L(λ)`, usable where the MGF itself overflows.
pub fn log_mgf(l: f64, lambda: f64) -> Result<f64> {
    if !(l > 0.0 && l < 0.5) || !(lambda > 0.0) {
        return Err(domain(format!("need 0 < L < 1/2 and λ > 0, got L = {l}, λ = {lambda}")));
    }
    Ok(-XlLaw::shared(l)?.product.log_psi(Complex64::new(lambda, 0.0))?.re)
}

/// Reference curves for the two tails of `X_L`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct TailRefs {
    /// κ_L e^{−x}
    pub right: f64,
    /// −λ_L x^{1/L}
    pub left_log: f64,
}

pub fn tail_xl(l: f64, x: f64) -> Result<TailRefs> {
    if !(x > 0.0) {
        return Err(domain(format!("tail references need x > 0, got {x}")));
    }
    let law = XlLaw::shared(l)?;
    let kappa = law.kappa.ok_or_else(|| domain("κ_L needs L > 0"))?;
    Ok(TailRefs {
        right: kappa * (-x).exp(),
        left_log: -lambda_l(l)? * x.powf(1.0 / l),
    })
}

/// Φ_η(x): `1 − x²` at η = 0, `0` at η = 1, otherwise
/// `(√(1−η²)/η)(e^{−ηx²/(1−η)}/(1−η) − 1)`.
pub fn phi_eta(eta: f64, x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&eta) || !(x >= 0.0) {
        return Err(domain(format!("Φ_η needs η ∈ [0,1], x ≥ 0; got η = {eta}, x = {x}")));
    }
    if eta == 0.0 {
        return Ok(1.0 - x * x);
    }
    if eta == 1.0 {
        return Ok(0.0);
    }
    let k = (1.0 - eta * eta).sqrt() / eta;
    Ok(k * ((-eta / (1.0 - eta) * x * x).exp() / (1.0 - eta) - 1.0))
}

/// φ on the grid `t_k = k h`, `k = 0..len`.
#[derive(Debug)]
struct Grid {
    h: f64,
    phi: Vec<Complex64>,
}

/// The law of `X_L` with cached inversion grids.
#[derive(Debug)]
pub struct XlLaw {
    product: CanonicalProduct,
    kappa: Option<f64>,
    t_max: f64,
    grids: Mutex<BTreeMap<u32, Arc<Grid>>>,
}

/// Inversion integrals stop once `|φ| < ENVELOPE_CUT`.
const ENVELOPE_CUT: f64 = 1e-14;
const T_CAP: f64 = 1e6;
/// Base grid resolves `|x| ≤ 40`: `h = π/(4·50)`.
const BASE_SPAN: f64 = 50.0;

impl XlLaw {
    pub fn new(l: f64) -> Result<Self> {
        let product = CanonicalProduct::new(l)?;
        let kappa = (l > 0.0).then(|| product.kappa());
        let envelope = |t: f64| -> Result<f64> { Ok(product.char_fn(Complex64::new(t, 0.0))?.norm()) };
        let t_max = truncation_point(envelope, ENVELOPE_CUT)?;
        Ok(Self {
            product,
            kappa,
            t_max,
            grids: Mutex::new(BTreeMap::new()),
        })
    }

    /// Process-wide instance for `l`, built on first use.
    pub fn shared(l: f64) -> Result<Arc<Self>> {
        static LAWS: OnceLock<Mutex<HashMap<u64, Arc<XlLaw>>>> = OnceLock::new();
        let laws = LAWS.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(law) = laws.lock().unwrap().get(&l.to_bits()) {
            return Ok(Arc::clone(law));
        }
        let law = Arc::new(Self::new(l)?);
        Ok(Arc::clone(laws.lock().unwrap().entry(l.to_bits()).or_insert(law)))
    }

    pub fn l(&self) -> f64 {
        self.product.l
    }

    pub fn product(&self) -> &CanonicalProduct {
        &self.product
    }

    pub fn kappa(&self) -> Option<f64> {
        self.kappa
    }

    /// Truncation of the real-line inversion integrals.
    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    fn grid_for(&self, x: f64) -> Result<Arc<Grid>> {
        let mut level = 0u32;
        while BASE_SPAN * f64::from(1u32 << level) < x.abs() + 10.0 {
            level += 1;
        }
        if let Some(g) = self.grids.lock().unwrap().get(&level) {
            return Ok(Arc::clone(g));
        }
        let h = PI / (4.0 * BASE_SPAN * f64::from(1u32 << level));
        let n = (self.t_max / h).ceil() as usize;
        let phi = (0..=n)
            .map(|k| self.product.char_fn(Complex64::new(k as f64 * h, 0.0)))
            .collect::<Result<Vec<_>>>()?;
        let grid = Arc::new(Grid { h, phi });
        Ok(Arc::clone(self.grids.lock().unwrap().entry(level).or_insert(grid)))
    }

    /// Density by real-line inversion `(1/π) ∫₀^∞ Re[φ(t) e^{−ixt}] dt`.
    pub fn density(&self, x: f64) -> Result<f64> {
        let g = self.grid_for(x)?;
        let mut acc = CompensatedSum::new();
        acc.add(0.5 * g.phi[0].re);
        for (k, p) in g.phi.iter().enumerate().skip(1) {
            let t = k as f64 * g.h;
            acc.add((p * Complex64::from_polar(1.0, -x * t)).re);
        }
        Ok(acc.value() * g.h / PI)
    }

    /// CDF by Gil–Pelaez, `1/2 − (1/π) ∫₀^∞ Im[φ(t) e^{−ixt}]/t dt`.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        let g = self.grid_for(x)?;
        let mut acc = CompensatedSum::new();
        // the integrand tends to E[X] − x = −x at t = 0
        acc.add(-0.5 * x);
        for (k, p) in g.phi.iter().enumerate().skip(1) {
            let t = k as f64 * g.h;
            acc.add((p * Complex64::from_polar(1.0, -x * t)).im / t);
        }
        Ok(0.5 - acc.value() * g.h / PI)
    }

    /// Density as `κ_L e^{−x}` plus [`Self::shifted_remainder`]. Intended for `x ≥ 5`.
    pub fn density_shifted(&self, x: f64) -> Result<f64> {
        let kappa = self
            .kappa
            .ok_or_else(|| domain("the shifted contour needs L > 0"))?;
        Ok(kappa * (-x).exp() + self.shifted_remainder(x)?)
    }

    /// The inversion integral along `Im t = −β`, `β = (1 + 1/L)/2`: what is left
    /// of the density once the residue `κ_L e^{−x}` at `t = −i` is taken out.
    pub fn shifted_remainder(&self, x: f64) -> Result<f64> {
        let l = self.l();
        if self.kappa.is_none() {
            return Err(domain("the shifted contour needs L > 0"));
        }
        let beta = 0.5 * (1.0 + 1.0 / l);
        let damp = (-beta * x).exp();
        let phi = |s: f64| self.product.char_fn(Complex64::new(s, -beta));
        let s_max = truncation_point(|s| Ok(phi(s)?.norm() * damp), 1e-17)?;
        let h = PI / (4.0 * (x.abs() + 10.0));
        let n = (s_max / h).ceil() as usize;
        let mut acc = CompensatedSum::new();
        for k in 0..=n {
            let s = k as f64 * h;
            let w = if k == 0 { 0.5 } else { 1.0 };
            acc.add(w * (phi(s)? * Complex64::from_polar(1.0, -x * s)).re);
        }
        Ok(damp * acc.value() * h / PI)
    }
}

/// First point of the sequence `t = 1, 1.25, 1.25², …` past which `envelope`
/// stays below `cut`. Envelopes here decrease monotonically.
fn truncation_point<F: Fn(f64) -> Result<f64>>(envelope: F, cut: f64) -> Result<f64> {
    let mut t = 1.0;
    while envelope(t)? >= cut {
        t *= 1.25;
        if t > T_CAP {
            return Err(Error::QuadNoConvergence {
                nodes: 0,
                last_change: envelope(t)?,
            });
        }
    }
    Ok(t)
}

/// Density of `X_L` (`0 < L < 1/2`) by real-line inversion.
pub fn density_xl(l: f64, x: f64) -> Result<f64> {
    require_open(l)?;
    XlLaw::shared(l)?.density(x)
}

/// Density of `X_L` through the shifted contour.
pub fn density_xl_shifted(l: f64, x: f64) -> Result<f64> {
    require_open(l)?;
    XlLaw::shared(l)?.density_shifted(x)
}

/// CDF of `X_L` (`0 < L < 1/2`) by Gil–Pelaez inversion.
pub fn cdf_xl(l: f64, x: f64) -> Result<f64> {
    require_open(l)?;
    XlLaw::shared(l)?.cdf(x)
}

fn require_open(l: f64) -> Result<()> {
    if l > 0.0 && l < 0.5 {
        Ok(())
    } else {
        Err(domain(format!("the X_L law needs 0 < L < 1/2, got {l}")))
    }
}

/// A limit law of the normalised zero count.
#[derive(Debug, Clone)]
pub enum LimitLaw {
    StdNormal,
    GumbelX0,
    Xl(Arc<XlLaw>),
}

impl LimitLaw {
    pub fn xl(l: f64) -> Result<Self> {
        require_open(l)?;
        Ok(Self::Xl(XlLaw::shared(l)?))
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        match self {
            Self::StdNormal => Ok(normal_cdf(x)),
            Self::GumbelX0 => Ok(gumbel_cdf(x)),
            Self::Xl(law) => law.cdf(x),
        }
    }

    pub fn pdf(&self, x: f64) -> Result<f64> {
        match self {
            Self::StdNormal => Ok(normal_pdf(x)),
            Self::GumbelX0 => Ok(gumbel_pdf(x)),
            Self::Xl(law) => law.density(x),
        }
    }

    /// `P[X > x] ~ κ e^{−x}`: κ_L for `X_L`, `e^{−γ}` for the Gumbel law.
    pub fn right_tail_constant(&self) -> Option<f64> {
        match self {
            Self::StdNormal => None,
            Self::GumbelX0 => Some((-EULER_GAMMA).exp()),
            Self::Xl(law) => law.kappa(),
        }
    }

    /// `log P[X < −x] ~ −λ x^{1/L}`.
    pub fn left_tail_constant(&self) -> Option<f64> {
        match self {
            Self::Xl(law) => lambda_l(law.l()).ok(),
            _ => None,
        }
    }

    /// Sampler for this law. `X_L` uses a truncated series with `eps_x`
    /// relative accuracy and a Gaussian stand-in for the dropped terms.
    pub fn sampler(&self, eps_x: f64) -> Result<LawSampler> {
        Ok(match self {
            Self::StdNormal => LawSampler::Normal,
            Self::GumbelX0 => LawSampler::Gumbel,
            Self::Xl(law) => LawSampler::Series(XlSampler::new(law.l(), eps_x, crate::sampler::XL_TERM_CAP, true)?),
        })
    }
}

#[derive(Debug, Clone)]
pub enum LawSampler {
    Normal,
    /// Inverse-CDF draw `−γ − log(−log U)`.
    Gumbel,
    Series(XlSampler),
}

impl LawSampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Self::Normal => rng.sample(StandardNormal),
            Self::Gumbel => {
                let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
                -EULER_GAMMA - (-u.ln()).ln()
            }
            Self::Series(s) => s.sample_rng(rng),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::gamma_complex;

    #[test]
    fn gumbel_examples() {
        assert!((gumbel_cdf(0.0) - (-(-EULER_GAMMA).exp()).exp()).abs() < 1e-16);
        assert!((gumbel_cdf(0.0) - 0.570376).abs() < 1e-6);
        let mode = -EULER_GAMMA;
        assert!((gumbel_pdf(mode) - (-1f64).exp()).abs() < 1e-15);
        assert!(gumbel_pdf(mode + 1e-3) < gumbel_pdf(mode));
        assert!(gumbel_pdf(mode - 1e-3) < gumbel_pdf(mode));
    }

    #[test]
    fn gumbel_moments_by_quadrature() {
        let h = 1e-3;
        let (mut m0, mut m1, mut m2) = (CompensatedSum::new(), CompensatedSum::new(), CompensatedSum::new());
        let mut x = -10.0;
        while x < 60.0 {
            let p = gumbel_pdf(x) * h;
            m0.add(p);
            m1.add(x * p);
            m2.add(x * x * p);
            x += h;
        }
        assert!((m0.value() - 1.0).abs() < 1e-8);
        assert!(m1.value().abs() < 1e-8, "{}", m1.value());
        assert!((m2.value() - PI * PI / 6.0).abs() < 1e-8);
    }

    #[test]
    fn char_at_zero_and_gumbel_identity() {
        for &l in &[0.0, 0.1, 0.3] {
            let v = char_xl(l, Complex64::new(0.0, 0.0)).unwrap();
            assert!((v - 1.0).norm() < 1e-15);
        }
        for &t in &[0.5, 1.0, 2.0, 5.0] {
            let phi = char_xl(0.0, Complex64::new(t, 0.0)).unwrap();
            let exact = Complex64::from_polar(1.0, -EULER_GAMMA * t) * gamma_complex(Complex64::new(1.0, -t));
            assert!((phi - exact).norm() < 1e-12 * exact.norm(), "{t}: {phi} vs {exact}");
            let sq = PI * t / (PI * t).sinh();
            assert!((phi.norm_sqr() - sq).abs() < 1e-12);
        }
        let one = char_xl(0.0, Complex64::new(1.0, 0.0)).unwrap().norm_sqr();
        assert!((one - 0.27203).abs() < 1e-5);
    }

    #[test]
    fn log_char_curvature_is_s2() {
        for &l in &[0.0, 0.25] {
            let total = CoefSeq::new(l).unwrap().s2_total().unwrap();
            let law = XlLaw::shared(l).unwrap();
            let lp = |t: f64| -law.product().log_psi(Complex64::new(0.0, -t)).unwrap();
            let h = 1e-3;
            let d2 = (lp(h) - 2.0 * lp(0.0) + lp(-h)) / (h * h);
            assert!((-d2.re - total).abs() < 1e-6, "{l}: {} vs {total}", -d2.re);
        }
    }

    #[test]
    fn canonical_product_zeros() {
        let p = psi_canonical(0.3, Complex64::new(0.0, 0.0)).unwrap();
        assert!((p - 1.0).norm() < 1e-15);
        assert_eq!(psi_canonical(0.3, Complex64::new(-1.0, 0.0)).unwrap(), Complex64::new(0.0, 0.0));
        let law = XlLaw::shared(0.3).unwrap();
        let b1 = law.product().zero(1).unwrap();
        assert!((b1 + 1.0 / 0.3).abs() < 1e-12);
        assert!(matches!(
            law.product().log_psi(Complex64::new(b1 + 1e-10, 0.0)),
            Err(Error::PoleProximity { .. })
        ));
    }

    #[test]
    fn growth_ratio_quarter() {
        let c = growth_constant(0.25).unwrap();
        assert!((c + 0.651).abs() < 1e-3, "{c}");
        let g = growth_ratio(0.25, 1e4).unwrap();
        assert!((0.9..=1.1).contains(&g), "{g}");
    }

    #[test]
    fn mgf_limits() {
        assert!((mgf_identity_check(0.3, 1e-9).unwrap() - 1.0).abs() < 1e-12);
        let l = 0.3;
        let lam: f64 = 1e3;
        let v = log_mgf(l, lam).unwrap() / lam.powf(rho(l).unwrap());
        let target = -growth_constant(l).unwrap();
        assert!((v / target - 1.0).abs() < 0.1, "{v} vs {target}");
    }

    #[test]
    fn tail_references() {
        let a = tail_xl(0.3, 2.0).unwrap();
        let b = tail_xl(0.3, 3.0).unwrap();
        assert!((a.right / b.right - std::f64::consts::E).abs() < 1e-12);
        let c = tail_xl(0.3, 4.0).unwrap();
        assert!((c.left_log / a.left_log - 2f64.powf(1.0 / 0.3)).abs() < 1e-10);
        let t = tail_xl(0.4, 3.0).unwrap();
        assert!((-t.left_log - 3.07).abs() < 0.01, "{}", t.left_log);
    }

    #[test]
    fn phi_eta_examples() {
        for &x in &[0.0, 0.5, 3.0] {
            assert_eq!(phi_eta(1.0, x).unwrap(), 0.0);
        }
        assert!((phi_eta(0.0, 0.5).unwrap() - 0.75).abs() < 1e-15);
        let mut prev = f64::INFINITY;
        for k in 0..50 {
            let v = phi_eta(0.5, k as f64 * 0.1).unwrap();
            assert!(v < prev);
            prev = v;
        }
        assert!((phi_eta(0.5, 50.0).unwrap() + 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn density_normalisation_and_moments() {
        let l = 0.3;
        let total = CoefSeq::new(l).unwrap().s2_total().unwrap();
        let law = XlLaw::shared(l).unwrap();
        let h = 0.01;
        let (mut m0, mut m1, mut m2) = (CompensatedSum::new(), CompensatedSum::new(), CompensatedSum::new());
        let n = (60.0 / h) as usize;
        for k in 0..=n {
            let x = -20.0 + k as f64 * h;
            // Simpson weights
            let w = if k == 0 || k == n { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 } * h / 3.0;
            let f = law.density(x).unwrap();
            assert!(f > -1e-12, "negative density {f} at {x}");
            m0.add(w * f);
            m1.add(w * x * f);
            m2.add(w * x * x * f);
        }
        assert!((m0.value() - 1.0).abs() < 1e-6, "{}", m0.value());
        assert!(m1.value().abs() < 1e-6, "{}", m1.value());
        assert!((m2.value() - total).abs() < 1e-6, "{} vs {total}", m2.value());
    }

    #[test]
    fn cdf_is_monotone_and_matches_density() {
        let law = XlLaw::shared(0.25).unwrap();
        let mut prev = 0.0;
        for k in 0..=90 {
            let x = -3.0 + k as f64 * 0.1;
            let f = law.cdf(x).unwrap();
            assert!(f >= prev - 1e-14 && (0.0..=1.0).contains(&f));
            prev = f;
            let d = 1e-4;
            let num = (law.cdf(x + d).unwrap() - law.cdf(x - d).unwrap()) / (2.0 * d);
            assert!((num - law.density(x).unwrap()).abs() < 1e-5, "{x}");
        }
        assert!(law.cdf(-20.0).unwrap() < 1e-10);
        assert!(law.cdf(40.0).unwrap() > 1.0 - 1e-10);
    }

    #[test]
    fn shifted_contour_agrees() {
        let law = XlLaw::shared(0.3).unwrap();
        for k in 0..=10 {
            let x = 5.0 + 0.5 * k as f64;
            let a = law.density(x).unwrap();
            let b = law.density_shifted(x).unwrap();
            assert!((a - b).abs() < 1e-8, "{x}: {a} vs {b}");
        }
        let kappa = law.kappa().unwrap();
        let ratio = law.density(8.0).unwrap() / (kappa * (-8f64).exp());
        assert!((0.95..=1.05).contains(&ratio), "{ratio}");
    }

    #[test]
    fn domain_errors() {
        assert!(density_xl(0.5, 0.0).is_err());
        assert!(cdf_xl(0.0, 0.0).is_err());
        assert!(phi_eta(1.5, 0.0).is_err());
        assert!(growth_ratio(0.25, -1.0).is_err());
    }
}
