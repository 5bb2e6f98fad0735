//! Counting zeros of a sampled GAF inside a disc.
//!
//! The production path tracks the phase of `f` around the circle (argument
//! principle); the oracle path finds every root of the truncated polynomial
//! with the Aberth–Ehrlich iteration and counts those inside.

use crate::error::{Error, Result};
use crate::kernel::mean_count;
use crate::sampler::{eval_on_circle, GafSample};
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;

pub use crate::sampler::CircleSpec;

/// Counting method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Winding,
    Roots,
}

/// A zero count with its diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CountResult {
    pub count: u64,
    pub method: Method,
    pub min_modulus_on_contour: f64,
    pub refinement_depth: u32,
    pub resamples: u32,
    pub winding_residual: f64,
    /// Radius actually used (differs from the requested one after retries).
    pub radius: f64,
}

/// Contour guard: `|f| < ZERO_GUARD · √G` on the contour aborts the count.
pub const ZERO_GUARD: f64 = 1e-9;
/// Bisection depth cap for phase refinement.
pub const MAX_REFINE_DEPTH: u32 = 40;
/// Retries of the boundary-perturbation rule.
pub const MAX_RETRIES: u32 = 8;
/// Degree cap of the root oracle.
pub const ROOT_DEGREE_CAP: usize = 512;

fn check_certified(sample: &GafSample, circle: &CircleSpec) -> Result<()> {
    if circle.outer_radius() > sample.radius * (1.0 + 1e-12) {
        return Err(Error::OutsideCertifiedRadius {
            certified: sample.radius,
        });
    }
    Ok(())
}

/// Initial node count for a circle.
fn initial_nodes(sample: &GafSample, circle: &CircleSpec) -> usize {
    let poly = (2 * (sample.degree() + 1)).next_power_of_two();
    if circle.is_centered() {
        let expected = mean_count(sample.l, circle.radius).unwrap_or(0.0);
        let by_mean = ((8.0 * expected).ceil() as usize).next_power_of_two();
        4096.max(by_mean).max(poly)
    } else {
        1024.max(poly)
    }
}

struct PhaseWalk<'a> {
    sample: &'a GafSample,
    circle: &'a CircleSpec,
    threshold: f64,
    min_modulus: f64,
    depth: u32,
}

impl PhaseWalk<'_> {
    fn at(&mut self, theta: f64) -> Result<Complex64> {
        let z = self.circle.center + Complex64::from_polar(self.circle.radius, theta);
        let v = self.sample.eval(z);
        self.guard(v)?;
        Ok(v)
    }

    fn guard(&mut self, v: Complex64) -> Result<()> {
        let m = v.norm();
        self.min_modulus = self.min_modulus.min(m);
        if m < self.threshold {
            return Err(Error::ZeroNearContour {
                min_modulus: m,
                threshold: self.threshold,
            });
        }
        Ok(())
    }

    /// Phase increment of `f` from `ta` to `tb`, bisecting until every step is below π/2.
    fn increment(&mut self, ta: f64, fa: Complex64, tb: f64, fb: Complex64, depth: u32) -> Result<f64> {
        let d = (fb / fa).arg();
        if d.abs() < 0.5 * PI {
            return Ok(d);
        }
        if depth >= MAX_REFINE_DEPTH {
            return Err(Error::RefinementExhausted { depth });
        }
        self.depth = self.depth.max(depth + 1);
        let tm = 0.5 * (ta + tb);
        let fm = self.at(tm)?;
        Ok(self.increment(ta, fa, tm, fm, depth + 1)? + self.increment(tm, fm, tb, fb, depth + 1)?)
    }
}

/// Number of zeros of `f` inside `circle` from the winding of `f` along it.
pub fn count_zeros_winding(sample: &GafSample, circle: &CircleSpec) -> Result<CountResult> {
    check_certified(sample, circle)?;
    let m = initial_nodes(sample, circle);
    let values = eval_on_circle(sample, circle, m).values;
    let scale = sample.rms_on_circle(circle.outer_radius());
    let mut walk = PhaseWalk {
        sample,
        circle,
        threshold: ZERO_GUARD * scale,
        min_modulus: f64::INFINITY,
        depth: 0,
    };
    for &v in &values {
        walk.guard(v)?;
    }
    let step = 2.0 * PI / m as f64;
    let mut total = 0.0;
    for k in 0..m {
        let (fa, fb) = (values[k], values[(k + 1) % m]);
        total += walk.increment(k as f64 * step, fa, (k + 1) as f64 * step, fb, 0)?;
    }
    let raw = total / (2.0 * PI);
    let count = raw.round();
    let residual = (raw - count).abs();
    if residual > 1e-6 || count < 0.0 {
        return Err(Error::NonIntegerWinding { raw });
    }
    Ok(CountResult {
        count: count as u64,
        method: Method::Winding,
        min_modulus_on_contour: walk.min_modulus,
        refinement_depth: walk.depth,
        resamples: 0,
        winding_residual: residual,
        radius: circle.radius,
    })
}

/// Number of roots of the truncated polynomial strictly inside `circle`.
pub fn count_zeros_roots(sample: &GafSample, circle: &CircleSpec) -> Result<CountResult> {
    check_certified(sample, circle)?;
    if sample.degree() > ROOT_DEGREE_CAP {
        return Err(Error::DegreeTooLarge {
            degree: sample.degree(),
            cap: ROOT_DEGREE_CAP,
        });
    }
    let roots = polynomial_roots(&sample.poly_coeffs())?;
    let mut count = 0;
    let mut closest = f64::INFINITY;
    for z in &roots {
        let d = (z - circle.center).norm() - circle.radius;
        closest = closest.min(d.abs());
        if d < 0.0 {
            count += 1;
        }
    }
    if closest < ZERO_GUARD {
        return Err(Error::ZeroNearContour {
            min_modulus: closest,
            threshold: ZERO_GUARD,
        });
    }
    Ok(CountResult {
        count,
        method: Method::Roots,
        min_modulus_on_contour: f64::NAN,
        refinement_depth: 0,
        resamples: 0,
        winding_residual: 0.0,
        radius: circle.radius,
    })
}

/// Counts with the given method, shrinking the radius by `(1 − outer)·1e-6`
/// whenever a zero lies too close to the contour (at most [`MAX_RETRIES`] times).
pub fn count_zeros(sample: &GafSample, circle: &CircleSpec, method: Method) -> Result<CountResult> {
    let mut c = *circle;
    let mut retries = 0;
    loop {
        let res = match method {
            Method::Winding => count_zeros_winding(sample, &c),
            Method::Roots => count_zeros_roots(sample, &c),
        };
        match res {
            Err(Error::ZeroNearContour { .. }) if retries < MAX_RETRIES => {
                retries += 1;
                c.radius -= (1.0 - c.outer_radius()) * 1e-6;
            }
            Ok(mut r) => {
                r.resamples = retries;
                return Ok(r);
            }
            Err(e) => return Err(e),
        }
    }
}

/// The Euclidean circle bounding `{z : |z − w|/|1 − w̄z| < r}`.
pub fn pseudohyperbolic_disc(w: Complex64, r: f64) -> Result<CircleSpec> {
    if !(w.norm() < 1.0) || !(r > 0.0 && r < 1.0) {
        return Err(crate::error::domain(format!(
            "need |w| < 1 and 0 < r < 1, got w = {w}, r = {r}"
        )));
    }
    let w2 = w.norm_sqr();
    let den = 1.0 - r * r * w2;
    CircleSpec::new(w * ((1.0 - r * r) / den), r * (1.0 - w2) / den)
}

/// The pseudo-hyperbolic centre `w` and radius `r` of a Euclidean circle
/// inside the unit disc (inverse of [`pseudohyperbolic_disc`]).
pub fn pseudohyperbolic_params(circle: &CircleSpec) -> Result<(Complex64, f64)> {
    if circle.outer_radius() >= 1.0 {
        return Err(Error::Domain(format!(
            "circle reaches the unit circle (outer radius {})",
            circle.outer_radius()
        )));
    }
    let c = circle.center.norm();
    let dir = if c > 0.0 { circle.center / c } else { Complex64::new(1.0, 0.0) };
    // the diameter through the origin runs from p1 to p2; w is its hyperbolic midpoint
    let (p1, p2) = (c - circle.radius, c + circle.radius);
    let (s, t) = (p1 + p2, 1.0 + p1 * p2);
    let m = if s.abs() < 1e-300 {
        0.0
    } else {
        // smaller root of s m² − 2t m + s = 0, in cancellation-free form
        s / (t + (t * t - s * s).sqrt())
    };
    let r = (p2 - m) / (1.0 - m * p2);
    Ok((dir * m, r))
}

/// All roots of `Σ c_k z^k` (Aberth–Ehrlich, tolerance 1e-12, 200 iterations).
pub fn polynomial_roots(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    const MAX_ITER: usize = 200;
    const TOL: f64 = 1e-12;
    let top = match coeffs.iter().rposition(|c| *c != Complex64::new(0.0, 0.0)) {
        Some(t) => t,
        None => return Ok(Vec::new()),
    };
    let low = coeffs.iter().position(|c| *c != Complex64::new(0.0, 0.0)).unwrap();
    let mut roots = vec![Complex64::new(0.0, 0.0); low];
    let p = &coeffs[low..=top];
    let n = p.len() - 1;
    if n == 0 {
        return Ok(roots);
    }
    let abs: Vec<f64> = p.iter().map(|c| c.norm()).collect();
    let rev: Vec<Complex64> = p.iter().rev().copied().collect();
    let abs_rev: Vec<f64> = abs.iter().rev().copied().collect();
    let mut z = initial_guesses(&abs);
    let mut done = vec![false; n];
    for _ in 0..MAX_ITER {
        let mut all = true;
        for i in 0..n {
            if done[i] {
                continue;
            }
            let (ratio, at_noise) = newton_ratio(p, &abs, &rev, &abs_rev, z[i]);
            if at_noise {
                done[i] = true;
                continue;
            }
            let s: Complex64 = (0..n).filter(|&j| j != i).map(|j| (z[i] - z[j]).inv()).sum();
            let w = ratio / (Complex64::new(1.0, 0.0) - ratio * s);
            if !w.is_finite() {
                // coincident iterates: nudge apart and retry
                z[i] *= Complex64::from_polar(1.0 + 1e-8, 1e-3);
                all = false;
                continue;
            }
            z[i] -= w;
            if w.norm() <= TOL * z[i].norm().max(1e-3) {
                done[i] = true;
            } else {
                all = false;
            }
        }
        if all {
            roots.extend(z);
            return Ok(roots);
        }
    }
    Err(Error::NoConvergence { iterations: MAX_ITER })
}

/// `p(z)/p'(z)` and whether `|p(z)|` is already below Horner's rounding level.
/// Outside the unit disc the reversed polynomial is used to avoid overflow.
fn newton_ratio(
    p: &[Complex64],
    abs: &[f64],
    rev: &[Complex64],
    abs_rev: &[f64],
    z: Complex64,
) -> (Complex64, bool) {
    let n = (p.len() - 1) as f64;
    let noise = 2.0 * n * f64::EPSILON;
    if z.norm() <= 1.0 {
        let (v, dv, bound) = horner_with_derivative(p, abs, z);
        (v / dv, v.norm() <= noise * bound)
    } else {
        // p(z) = z^n q(1/z), so p'/p = n/z − q'(1/z)/(z² q(1/z))
        let y = z.inv();
        let (v, dv, bound) = horner_with_derivative(rev, abs_rev, y);
        let log_deriv = n * y - dv / v * y * y;
        (log_deriv.inv(), v.norm() <= noise * bound)
    }
}

fn horner_with_derivative(p: &[Complex64], abs: &[f64], z: Complex64) -> (Complex64, Complex64, f64) {
    let mut v = Complex64::new(0.0, 0.0);
    let mut dv = Complex64::new(0.0, 0.0);
    let mut bound = 0.0;
    let az = z.norm();
    for (c, a) in p.iter().zip(abs).rev() {
        dv = dv * z + v;
        v = v * z + c;
        bound = bound * az + a;
    }
    (v, dv, bound)
}

/// Starting points on circles whose radii come from the upper convex hull of
/// `(k, log|c_k|)`.
fn initial_guesses(abs: &[f64]) -> Vec<Complex64> {
    let n = abs.len() - 1;
    let pts: Vec<(f64, f64)> = abs
        .iter()
        .enumerate()
        .filter(|(_, a)| **a > 0.0)
        .map(|(k, a)| (k as f64, a.ln()))
        .collect();
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for &p in &pts {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    let mut z = Vec::with_capacity(n);
    for (i, pair) in hull.windows(2).enumerate() {
        let (a, b) = (pair[0], pair[1]);
        let k = (b.0 - a.0) as usize;
        let radius = ((a.1 - b.1) / (b.0 - a.0)).exp();
        for j in 0..k {
            let angle = 2.0 * PI * j as f64 / k as f64 + 2.0 * PI * i as f64 / n as f64 + 0.7;
            z.push(Complex64::from_polar(radius, angle));
        }
    }
    z
}
