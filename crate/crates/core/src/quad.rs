//! Periodic quadrature over the circle with a peak of width `s` at `θ = 0`.
//!
//! The substitution `θ = 2 atan(c sinh v)`, `c = s/2`, maps `v ∈ (0, ∞)` onto
//! `θ ∈ (0, π)`. Integrands analytic near the real θ axis with singularities at
//! distance ≈ `s` become analytic in a strip of fixed width in `v`, so the
//! midpoint rule converges geometrically whatever the peak width.

use crate::error::{Error, Result};
use crate::numerics::CompensatedSum;
use serde::Serialize;

/// A quadrature value with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error_estimate: f64,
    pub nodes: usize,
}

pub(crate) const DEFAULT_REL_TOL: f64 = 1e-9;
const MAX_NODES: usize = 1 << 24;
const START_NODES: usize = 64;

/// `(1/2π) ∫_{−π}^{π} f(θ) dθ` for each of `width` integrands at once.
///
/// `f` must be even in θ. It writes its values into the slice it is given.
/// Nodes double until every component changes by less than `rel_tol` of its
/// value (plus a floor of 1e-15 of the largest component).
pub(crate) fn circle_mean<F>(peak_width: f64, width: usize, rel_tol: f64, f: F) -> Result<Vec<QuadResult>>
where
    F: Fn(f64, &mut [f64]),
{
    let c = 0.5 * peak_width.clamp(1e-300, 2.0);
    // beyond v_max the Jacobian is below e^-40 of its peak
    let v_max = (4.0 / c).ln() + 40.0;
    let mut n = START_NODES;
    let mut prev = sweep(c, v_max, n, width, &f);
    loop {
        n *= 2;
        let cur = sweep(c, v_max, n, width, &f);
        let scale = cur.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut worst = 0.0f64;
        let mut ok = true;
        for (a, b) in cur.iter().zip(&prev) {
            let d = (a - b).abs();
            if d > rel_tol * a.abs() + 1e-15 * scale {
                ok = false;
                worst = worst.max(d / a.abs().max(1e-300));
            }
        }
        if ok {
            return Ok(cur
                .iter()
                .zip(&prev)
                .map(|(&v, &p)| QuadResult {
                    value: v,
                    abs_error_estimate: (v - p).abs(),
                    nodes: n,
                })
                .collect());
        }
        if n >= MAX_NODES {
            return Err(Error::QuadNoConvergence {
                nodes: n,
                last_change: worst,
            });
        }
        prev = cur;
    }
}

fn sweep<F>(c: f64, v_max: f64, n: usize, width: usize, f: &F) -> Vec<f64>
where
    F: Fn(f64, &mut [f64]),
{
    let h = v_max / n as f64;
    let mut sums = vec![CompensatedSum::new(); width];
    let mut vals = vec![0.0; width];
    for k in 0..n {
        let v = (k as f64 + 0.5) * h;
        let sh = c * v.sinh();
        let theta = 2.0 * sh.atan();
        let jac = 2.0 * c * v.cosh() / (1.0 + sh * sh);
        f(theta, &mut vals);
        for (s, &x) in sums.iter_mut().zip(&vals) {
            s.add(x * jac);
        }
    }
    // (1/2π)·2∫₀^π
    sums.iter().map(|s| s.value() * h / std::f64::consts::PI).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn poisson_kernel_mean_is_one() {
        // (1/2π)∫ (1−ρ²)/(1 − 2ρ cos θ + ρ²) dθ = 1, peak width 1−ρ
        for &rho in &[0.5, 0.99, 1.0 - 1e-6] {
            let omr = 1.0 - rho;
            let res = circle_mean(omr, 1, 1e-12, |t, out| {
                let s = (0.5 * t).sin();
                out[0] = omr * (1.0 + rho) / (omr * omr + 4.0 * rho * s * s);
            })
            .unwrap();
            assert!((res[0].value - 1.0).abs() < 1e-11, "{rho}: {:?}", res[0]);
        }
    }

    #[test]
    fn cosine_moments() {
        let res = circle_mean(1.0, 2, 1e-12, |t, out| {
            out[0] = t.cos().powi(2);
            out[1] = 1.0 + t * t;
        })
        .unwrap();
        assert!((res[0].value - 0.5).abs() < 1e-12);
        assert!((res[1].value - (1.0 + PI * PI / 3.0)).abs() < 1e-11);
    }
}
