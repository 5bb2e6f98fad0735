//! Special functions: log-gamma (Lanczos), gamma ratios, power-sum tails.

use num_complex::Complex64;
use std::f64::consts::PI;

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577215664901532860606512090082;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

const HALF_LN_TWO_PI: f64 = 0.918_938_533_204_672_8;

/// Natural log of |Γ(x)| for real `x` that is not a non-positive integer.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection: Γ(x)Γ(1-x) = π / sin(πx)
        return (PI / (PI * x).sin().abs()).ln() - ln_gamma(1.0 - x);
    }
    if x >= 30.0 {
        return stirling_ln_gamma(x);
    }
    let z = x - 1.0;
    let mut acc = LANCZOS_COEF[0];
    for (i, &c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    HALF_LN_TWO_PI + (z + 0.5) * t.ln() - t + acc.ln()
}

fn stirling_correction(x: f64) -> f64 {
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)))
}

fn stirling_ln_gamma(x: f64) -> f64 {
    (x - 0.5) * x.ln() - x + HALF_LN_TWO_PI + stirling_correction(x)
}

/// Γ(x) for real `x > 0`.
pub fn gamma(x: f64) -> f64 {
    if x <= 0.0 && x == x.floor() {
        return f64::NAN;
    }
    let sign = if x < 0.0 && (x.floor() as i64) % 2 != 0 {
        -1.0
    } else {
        1.0
    };
    sign * ln_gamma(x).exp()
}

/// `ln Γ(x + a) - ln Γ(x)` without cancellation for large `x`.
///
/// Requires `x > 0` and `x + a > 0`.
pub fn ln_gamma_ratio(x: f64, a: f64) -> f64 {
    if x < 30.0 || x + a < 30.0 {
        return ln_gamma(x + a) - ln_gamma(x);
    }
    a * x.ln() + (x + a - 0.5) * (a / x).ln_1p() - a + stirling_correction(x + a)
        - stirling_correction(x)
}

/// Γ(z) for complex `z`.
pub fn gamma_complex(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        let s = (Complex64::from(PI) * z).sin();
        return Complex64::from(PI) / (s * gamma_complex(Complex64::new(1.0, 0.0) - z));
    }
    let z = z - 1.0;
    let mut acc = Complex64::from(LANCZOS_COEF[0]);
    for (i, &c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    (2.0 * PI).sqrt() * t.powc(z + 0.5) * (-t).exp() * acc
}

/// Σ_{m ≥ n} m^{-s} for `s > 1`, `n ≥ 1`.
///
/// Direct summation up to 64, Euler–Maclaurin beyond.
pub fn power_tail(s: f64, n: u64) -> f64 {
    debug_assert!(s > 1.0 && n >= 1);
    const SWITCH: u64 = 64;
    let mut head = 0.0;
    let mut start = n;
    while start < SWITCH {
        head += (start as f64).powf(-s);
        start += 1;
    }
    head + euler_maclaurin_power_tail(s, start as f64)
}

fn euler_maclaurin_power_tail(s: f64, n: f64) -> f64 {
    // B_{2k}/(2k)!
    const B_OVER_FACT: [f64; 5] = [
        1.0 / 12.0,
        -1.0 / 720.0,
        1.0 / 30240.0,
        -1.0 / 1209600.0,
        1.0 / 47900160.0,
    ];
    let base = n.powf(-s);
    let mut total = n * base / (s - 1.0) + 0.5 * base;
    // rising factorial (s)_{2k-1} times n^{-s-2k+1}
    let mut rising = s;
    let mut pow = base / n;
    for (k, &b) in B_OVER_FACT.iter().enumerate() {
        total += b * rising * pow;
        let j = 2.0 * k as f64 + 1.0;
        rising *= (s + j) * (s + j + 1.0);
        pow /= n * n;
    }
    total
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// sin(x)/x with the removable point at 0.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn gamma_known_values() {
        assert!(rel(gamma(0.5), PI.sqrt()) < 1e-14);
        assert!(rel(gamma(5.0), 24.0) < 1e-14);
        assert!(rel(gamma(0.25), 3.625_609_908_221_908) < 1e-13);
        assert!(rel(gamma(0.4), 2.218_159_543_757_688) < 1e-13);
        assert!(rel(gamma(171.5), (ln_gamma(171.5)).exp()) < 1e-14);
        assert!(rel(ln_gamma(100.0), 359.134_205_369_575_4) < 1e-14);
        assert!(rel(ln_gamma(30.5), ln_gamma(29.5) + 29.5f64.ln()) < 1e-14);
    }

    #[test]
    fn gamma_reflection_negative() {
        // Γ(-0.5) = -2√π
        assert!(rel(gamma(-0.5), -2.0 * PI.sqrt()) < 1e-13);
    }

    #[test]
    fn ratio_matches_direct_for_moderate_x() {
        for &(x, a) in &[(31.0, 0.25), (50.0, -0.75), (1e3, 1.5), (40.0, 2.0)] {
            let direct = ln_gamma(x + a) - ln_gamma(x);
            assert!((ln_gamma_ratio(x, a) - direct).abs() < 1e-12, "{x} {a}");
        }
        // Γ(x+1)/Γ(x) = x exactly
        for &x in &[35.0, 1e4, 1e7] {
            assert!(rel(ln_gamma_ratio(x, 1.0).exp(), x) < 1e-14);
        }
    }

    #[test]
    fn complex_gamma_modulus_identity() {
        // |Γ(1 - it)|² = πt / sinh(πt)
        for &t in &[0.5, 1.0, 2.0, 5.0] {
            let g = gamma_complex(Complex64::new(1.0, -t));
            assert!(rel(g.norm_sqr(), PI * t / (PI * t).sinh()) < 1e-13);
        }
        let g = gamma_complex(Complex64::new(4.0, 0.0));
        assert!((g - 6.0).norm() < 1e-12);
    }

    #[test]
    fn power_tail_against_zeta() {
        // ζ(2) = π²/6
        assert!(rel(power_tail(2.0, 1), PI * PI / 6.0) < 1e-14);
        // ζ(4) = π⁴/90
        assert!(rel(power_tail(4.0, 1), PI.powi(4) / 90.0) < 1e-14);
        let direct: f64 = (100..2_000_000u64).map(|m| (m as f64).powf(-1.5)).sum::<f64>()
            + power_tail(1.5, 2_000_000);
        assert!(rel(power_tail(1.5, 100), direct) < 1e-12);
    }

    #[test]
    fn normal_cdf_values() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-16);
        assert!(rel(normal_cdf(-5.0), 2.866_515_718_791_933e-7) < 1e-13);
        assert!(rel(normal_cdf(1.0), 0.841_344_746_068_542_9) < 1e-14);
    }
}
