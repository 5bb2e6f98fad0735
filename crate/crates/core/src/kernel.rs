//! Covariance functions of `f_L`.
//!
//! `G(x) = (1−x)^{−L}` (or `log 1/(1−x)` at `L = 0`), `K(z,w) = G(z w̄)`,
//! `H(ζ) = G(e^ζ)` and `A = H′/H`. Points on the circle of radius `r` are
//! `ζ = t + iθ` with `e^t = r²`.

use crate::coeffs::CoefSeq;
use crate::error::{domain, Result};
use crate::numerics::CompensatedSum;
use num_complex::Complex64;

fn check_in_disc(x: Complex64) -> Result<()> {
    if !(x.norm() < 1.0) {
        return Err(domain(format!("|x| = {} is not inside the unit disc", x.norm())));
    }
    Ok(())
}

fn check_l(l: f64) -> Result<()> {
    if !(l >= 0.0) || !l.is_finite() {
        return Err(domain(format!("L must be ≥ 0, got {l}")));
    }
    Ok(())
}

/// `G(x)` on the principal branch.
pub fn g_eval(l: f64, x: Complex64) -> Result<Complex64> {
    check_l(l)?;
    check_in_disc(x)?;
    let log1m = (Complex64::new(1.0, 0.0) - x).ln();
    Ok(if l == 0.0 { -log1m } else { (-l * log1m).exp() })
}

/// `G′(x)`.
pub fn g_prime(l: f64, x: Complex64) -> Result<Complex64> {
    check_l(l)?;
    check_in_disc(x)?;
    let w = Complex64::new(1.0, 0.0) - x;
    Ok(if l == 0.0 {
        w.inv()
    } else {
        l * (-(l + 1.0) * w.ln()).exp()
    })
}

/// Σ_{m ≤ terms} a_m x^m, the series form of `G` used as a cross-check.
pub fn g_series(l: f64, x: Complex64, terms: usize) -> Result<Complex64> {
    let seq = CoefSeq::new(l)?;
    let mut re = CompensatedSum::new();
    let mut im = CompensatedSum::new();
    let mut p = Complex64::new(1.0, 0.0);
    for a in seq.iter().take(terms + 1) {
        let t = a * p;
        re.add(t.re);
        im.add(t.im);
        p *= x;
    }
    Ok(Complex64::new(re.value(), im.value()))
}

/// Covariance `K(z,w) = G(z w̄)`.
pub fn kernel(l: f64, z: Complex64, w: Complex64) -> Result<Complex64> {
    g_eval(l, z * w.conj())
}

/// `K̂(z,w) = K(z,w) / √(K(z,z) K(w,w))`.
pub fn normalized_kernel(l: f64, z: Complex64, w: Complex64) -> Result<Complex64> {
    let kzz = kernel(l, z, z)?.re;
    let kww = kernel(l, w, w)?.re;
    if kzz <= 0.0 || kww <= 0.0 {
        return Err(domain("normalized kernel undefined at the origin for L = 0"));
    }
    Ok(kernel(l, z, w)? / (kzz * kww).sqrt())
}

/// `H`, `A`, `A′` for a fixed `L`.
#[derive(Debug, Clone, Copy)]
pub struct KernelFns {
    l: f64,
}

impl KernelFns {
    pub fn new(l: f64) -> Result<Self> {
        check_l(l)?;
        Ok(Self { l })
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    fn check_half_plane(zeta: Complex64) -> Result<()> {
        if !(zeta.re < 0.0) {
            return Err(domain(format!("Re ζ = {} must be negative", zeta.re)));
        }
        Ok(())
    }

    /// `H(ζ) = G(e^ζ)`.
    pub fn h(&self, zeta: Complex64) -> Result<Complex64> {
        Self::check_half_plane(zeta)?;
        g_eval(self.l, zeta.exp())
    }

    /// `dH/dζ = e^ζ G′(e^ζ)`.
    pub fn h_prime(&self, zeta: Complex64) -> Result<Complex64> {
        Self::check_half_plane(zeta)?;
        let y = zeta.exp();
        Ok(y * g_prime(self.l, y)?)
    }

    /// `A(ζ) = H′(ζ)/H(ζ)`.
    pub fn a(&self, zeta: Complex64) -> Result<Complex64> {
        Self::check_half_plane(zeta)?;
        let y = zeta.exp();
        let w = Complex64::new(1.0, 0.0) - y;
        Ok(if self.l == 0.0 {
            -y / (w * w.ln())
        } else {
            self.l * y / w
        })
    }

    /// `A′(ζ)`.
    pub fn a_prime(&self, zeta: Complex64) -> Result<Complex64> {
        Self::check_half_plane(zeta)?;
        let y = zeta.exp();
        let w = Complex64::new(1.0, 0.0) - y;
        Ok(if self.l == 0.0 {
            let lg = w.ln();
            -y * (y + lg) / (w * w * lg * lg)
        } else {
            self.l * y / (w * w)
        })
    }

    /// Integrand pieces on the circle `|z| = r`, `x = r²`, at angle `θ`.
    ///
    /// `one_minus_x` is passed separately so callers near `r = 1` keep its
    /// relative precision.
    pub(crate) fn circle_point(&self, x: f64, one_minus_x: f64, theta: f64) -> CirclePoint {
        let s = (0.5 * theta).sin();
        let s2 = s * s;
        // 1 − x e^{iθ}
        let w = Complex64::new(one_minus_x + 2.0 * x * s2, -x * theta.sin());
        // x e^{iθ} − x
        let dy = Complex64::new(-2.0 * x * s2, x * theta.sin());
        let u = 4.0 * x * s2 / (one_minus_x * one_minus_x);
        let log1p_u = u.ln_1p();
        if self.l > 0.0 {
            let delta_a = self.l * dy / (w * one_minus_x);
            let q = (-self.l * log1p_u).exp();
            let one_minus_q = -(-self.l * log1p_u).exp_m1();
            CirclePoint {
                q,
                one_minus_q,
                delta_a_sq: delta_a.norm_sqr(),
            }
        } else {
            let l0 = log_one_over_one_minus(x, one_minus_x);
            let lz = -w.ln();
            let y = Complex64::new(x, 0.0) + dy;
            let delta_a = y / (w * lz) - x / (one_minus_x * l0);
            // ℓ₀² − |ℓ|² with Re ℓ = ℓ₀ − ½ log(1+u)
            let gap = 0.5 * log1p_u * (l0 + lz.re) - lz.im * lz.im;
            CirclePoint {
                q: lz.norm_sqr() / (l0 * l0),
                one_minus_q: gap / (l0 * l0),
                delta_a_sq: delta_a.norm_sqr(),
            }
        }
    }
}

/// `q = |H(t+iθ)|²/H(t)²`, `1 − q` without cancellation, and `|A(t+iθ) − A(t)|²`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct CirclePoint {
    pub q: f64,
    pub one_minus_q: f64,
    pub delta_a_sq: f64,
}

/// `1 − r²` computed as `(1−r)(1+r)`.
pub(crate) fn one_minus_sq(r: f64) -> f64 {
    (1.0 - r) * (1.0 + r)
}

/// `log(1/(1−x))`, from whichever of `x`, `1−x` carries more precision.
pub(crate) fn log_one_over_one_minus(x: f64, one_minus_x: f64) -> f64 {
    if x < 0.5 {
        -(-x).ln_1p()
    } else {
        -one_minus_x.ln()
    }
}

/// Expected number of zeros in `D(0, r)`: `r² G′(r²)/G(r²)`.
///
/// `r = 0` gives the empty disc and the value 0, also for `L = 0` where the
/// sure zero at the origin makes the right limit 1.
pub fn mean_count(l: f64, r: f64) -> Result<f64> {
    check_l(l)?;
    if !(0.0..1.0).contains(&r) {
        return Err(domain(format!("radius must lie in [0, 1), got {r}")));
    }
    if r == 0.0 {
        return Ok(0.0);
    }
    let x = r * r;
    let omx = one_minus_sq(r);
    Ok(if l == 0.0 {
        x / (omx * log_one_over_one_minus(x, omx))
    } else {
        l * x / omx
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn g_examples() {
        assert_eq!(g_eval(0.0, c(0.0, 0.0)).unwrap(), c(0.0, 0.0));
        assert!((g_eval(1.0, c(0.5, 0.0)).unwrap() - 2.0).norm() < 1e-15);
        let x = c(0.3, 0.4);
        let closed = g_eval(0.25, x).unwrap();
        let series = g_series(0.25, x, 200).unwrap();
        assert!((closed - series).norm() / closed.norm() < 1e-12);
        assert!(g_eval(0.5, c(1.0, 0.0)).is_err());
    }

    #[test]
    fn g_prime_matches_difference() {
        for &l in &[0.0, 0.25, 1.0, 2.5] {
            let x = c(0.2, -0.5);
            let h = 1e-6;
            let fd = (g_eval(l, x + h).unwrap() - g_eval(l, x - h).unwrap()) / (2.0 * h);
            assert!((fd - g_prime(l, x).unwrap()).norm() < 1e-8);
        }
    }

    #[test]
    fn mean_examples() {
        assert!((mean_count(1.0, 0.5).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        let r = (1.0 - 1.0 / E).sqrt();
        assert!((mean_count(0.0, r).unwrap() - (E - 1.0)).abs() < 1e-13);
        let r = 1.0 - 1e-7;
        let ratio = mean_count(2.0, r).unwrap() * 2.0 * (1.0 - r) / 2.0;
        assert!((ratio - 1.0).abs() < 1e-6);
        assert_eq!(mean_count(0.0, 0.0).unwrap(), 0.0);
        assert!((mean_count(0.0, 1e-6).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn mean_is_a_at_log_r2() {
        for &(l, r) in &[(0.0, 0.7), (0.3, 0.95), (1.7, 0.2)] {
            let k = KernelFns::new(l).unwrap();
            let a = k.a(c((r * r as f64).ln(), 0.0)).unwrap();
            assert!((a.re - mean_count(l, r).unwrap()).abs() < 1e-12 * a.re.max(1.0));
        }
    }

    #[test]
    fn normalized_kernel_examples() {
        let z = c(0.0, 0.3);
        for &l in &[0.0, 0.5, 2.0] {
            assert!((normalized_kernel(l, z, z).unwrap() - 1.0).norm() < 1e-15);
        }
        let k = normalized_kernel(1.0, c(0.5, 0.0), c(0.0, 0.0)).unwrap();
        assert!((k.re - 0.75f64.sqrt()).abs() < 1e-15);
        // |K̂| = ((1−|z|²)(1−|w|²))^{L/2} / |1 − z w̄|^L = (0.19/1.81)^L here
        let k = normalized_kernel(0.5, c(0.9, 0.0), c(-0.9, 0.0)).unwrap();
        assert!((k.norm() - (0.19f64 / 1.81).sqrt()).abs() < 1e-14);
        let k = normalized_kernel(5.0, c(0.9, 0.0), c(-0.9, 0.0)).unwrap();
        assert!(k.norm() < 1.5e-5);
        assert!(normalized_kernel(0.0, c(0.0, 0.0), c(0.1, 0.0)).is_err());
    }

    #[test]
    fn a_and_a_prime_consistent() {
        for &l in &[0.0, 0.2, 0.45] {
            let k = KernelFns::new(l).unwrap();
            let z = c(-0.3, 0.7);
            let h = 1e-6;
            let fd = (k.a(z + h).unwrap() - k.a(z - h).unwrap()) / (2.0 * h);
            assert!((fd - k.a_prime(z).unwrap()).norm() < 1e-7);
            let ratio = k.h_prime(z).unwrap() / k.h(z).unwrap();
            assert!((ratio - k.a(z).unwrap()).norm() < 1e-12);
            for t in [-2.0, -0.1, -1e-3] {
                assert!(k.a_prime(c(t, 0.0)).unwrap().re > 0.0);
            }
        }
    }

    #[test]
    fn circle_point_matches_direct() {
        for &l in &[0.0, 0.25, 1.0] {
            let k = KernelFns::new(l).unwrap();
            let r: f64 = 0.8;
            let x = r * r;
            let t = x.ln();
            let ht = k.h(c(t, 0.0)).unwrap().re;
            let at = k.a(c(t, 0.0)).unwrap();
            for &theta in &[0.3, 1.0, PI - 0.01] {
                let p = k.circle_point(x, one_minus_sq(r), theta);
                let z = c(t, theta);
                let hz = k.h(z).unwrap();
                let q = hz.norm_sqr() / (ht * ht);
                assert!((p.q - q).abs() < 1e-13);
                assert!((p.one_minus_q - (1.0 - q)).abs() < 1e-13);
                assert!((p.delta_a_sq - (k.a(z).unwrap() - at).norm_sqr()).abs() < 1e-12);
                assert!(hz.norm() <= ht);
            }
        }
    }
}
