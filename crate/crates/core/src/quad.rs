//! Adaptive Simpson quadrature and Gauss–Legendre rules.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use thiserror::Error;

use crate::vec3::{CVec3, Vec3};

#[derive(Debug, Clone, Error, PartialEq)]
#[error("quadrature did not reach tolerance {requested:e} within {intervals} intervals (estimated error {achieved:e})")]
pub struct QuadratureFailure {
    pub requested: f64,
    pub achieved: f64,
    pub intervals: usize,
}

/// Values that can be integrated: a real vector space with a norm.
pub trait QuadValue: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn magnitude(&self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

impl QuadValue for Vec3 {
    fn zero() -> Self {
        Vec3::ZERO
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

impl QuadValue for CVec3 {
    fn zero() -> Self {
        CVec3::ZERO
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

/// Settings for [`adaptive_simpson`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadOptions {
    /// Absolute tolerance on the integral (in the integrand's units × time).
    pub abs_tol: f64,
    /// Maximum number of accepted-or-split panels.
    pub max_intervals: usize,
    /// Uniform panels the interval is cut into before adapting; raise this for
    /// oscillatory integrands so no period is sampled too coarsely.
    pub initial_panels: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self { abs_tol: 1e-10, max_intervals: 1 << 20, initial_panels: 8 }
    }
}

impl QuadOptions {
    pub fn with_tol(abs_tol: f64) -> Self {
        Self { abs_tol, ..Self::default() }
    }

    pub fn panels(mut self, n: usize) -> Self {
        self.initial_panels = n.max(1);
        self
    }
}

struct Panel<V> {
    a: f64,
    b: f64,
    fa: V,
    fm: V,
    fb: V,
    whole: V,
}

/// Integrates `f` over `[a, b]` with globally adaptive Simpson refinement.
///
/// Each panel gets a share of `abs_tol` proportional to its width. A panel is
/// also accepted once its error estimate is at the rounding level of its own
/// value, so tolerances below machine precision of the integrand do not spin.
pub fn adaptive_simpson<V, F>(mut f: F, a: f64, b: f64, opts: QuadOptions) -> Result<V, QuadratureFailure>
where
    V: QuadValue,
    F: FnMut(f64) -> V,
{
    if a == b {
        return Ok(V::zero());
    }
    let width = b - a;
    let n0 = opts.initial_panels.max(1);
    let mut stack: Vec<Panel<V>> = Vec::with_capacity(64);
    let mut f_left = f(a);
    for k in 0..n0 {
        let pa = a + width * (k as f64) / (n0 as f64);
        let pb = if k + 1 == n0 { b } else { a + width * ((k + 1) as f64) / (n0 as f64) };
        let fm = f(0.5 * (pa + pb));
        let fb = f(pb);
        let whole = simpson(pa, pb, f_left, fm, fb);
        stack.push(Panel { a: pa, b: pb, fa: f_left, fm, fb, whole });
        f_left = fb;
    }

    let mut total = V::zero();
    let mut err_sum = 0.0;
    let mut intervals = n0;
    let tol_density = opts.abs_tol / width.abs();
    while let Some(p) = stack.pop() {
        let m = 0.5 * (p.a + p.b);
        let flm = f(0.5 * (p.a + m));
        let frm = f(0.5 * (m + p.b));
        let left = simpson(p.a, m, p.fa, flm, p.fm);
        let right = simpson(m, p.b, p.fm, frm, p.fb);
        let refined = left + right;
        let diff = refined - p.whole;
        let err = diff.magnitude() / 15.0;
        let local_tol = tol_density * (p.b - p.a).abs();
        let rounding = 64.0 * f64::EPSILON * refined.magnitude();
        let too_narrow = (p.b - p.a).abs() <= 1e-14 * width.abs();
        if err <= local_tol || err <= rounding || too_narrow {
            total = total + refined + diff * (1.0 / 15.0);
            err_sum += err;
            continue;
        }
        intervals += 1;
        if intervals > opts.max_intervals {
            return Err(QuadratureFailure { requested: opts.abs_tol, achieved: err_sum + err, intervals });
        }
        stack.push(Panel { a: m, b: p.b, fa: p.fm, fm: frm, fb: p.fb, whole: right });
        stack.push(Panel { a: p.a, b: m, fa: p.fa, fm: flm, fb: p.fm, whole: left });
    }
    Ok(total)
}

fn simpson<V: QuadValue>(a: f64, b: f64, fa: V, fm: V, fb: V) -> V {
    (fa + fm * 4.0 + fb) * ((b - a) / 6.0)
}

/// Gauss–Legendre nodes and weights on `[−1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "gauss_legendre needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..(n + 1) / 2 {
        // Tricomi initial guess for the i-th root from the top
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

/// Gauss–Legendre rule with precomputed nodes, mapped onto arbitrary intervals.
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        let (nodes, weights) = gauss_legendre(n);
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `(t_i, w_i)` pairs on `[a, b]`.
    pub fn points(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes.iter().zip(&self.weights).map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate<V: QuadValue, F: FnMut(f64) -> V>(&self, mut f: F, a: f64, b: f64) -> V {
        self.points(a, b).fold(V::zero(), |acc, (t, w)| acc + f(t) * w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_polynomials_and_trig() {
        let v: f64 = adaptive_simpson(|x| x * x * x, 0.0, 2.0, QuadOptions::default()).unwrap();
        assert!((v - 4.0).abs() < 1e-13);
        let v: f64 = adaptive_simpson(f64::sin, 0.0, std::f64::consts::PI, QuadOptions::with_tol(1e-12)).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn simpson_reversed_interval() {
        let v: f64 = adaptive_simpson(|x| x, 1.0, 0.0, QuadOptions::default()).unwrap();
        assert!((v + 0.5).abs() < 1e-15);
    }

    #[test]
    fn simpson_complex_oscillatory() {
        let w = 40.0;
        let v: Complex64 =
            adaptive_simpson(|t| Complex64::new(0.0, w * t).exp(), 0.0, 1.0, QuadOptions::with_tol(1e-12).panels(64))
                .unwrap();
        let exact = (Complex64::new(0.0, w).exp() - 1.0) / Complex64::new(0.0, w);
        assert!((v - exact).norm() < 1e-12);
    }

    #[test]
    fn budget_exhaustion_reports_failure() {
        let opts = QuadOptions { abs_tol: 1e-14, max_intervals: 16, initial_panels: 1 };
        let r: Result<f64, _> = adaptive_simpson(|x: f64| (1.0 / (x + 1e-3)).sin(), 0.0, 1.0, opts);
        assert!(r.is_err());
    }

    #[test]
    fn gauss_legendre_exact_for_high_degree() {
        let g = GaussLegendre::new(10);
        // exact up to degree 19
        let v: f64 = g.integrate(|x| x.powi(18), -1.0, 1.0);
        assert!((v - 2.0 / 19.0).abs() < 1e-14);
        let w_sum: f64 = g.points(0.0, 3.0).map(|(_, w)| w).sum();
        assert!((w_sum - 3.0).abs() < 1e-14);
    }

    #[test]
    fn gauss_legendre_odd_count_has_center_node() {
        let (x, w) = gauss_legendre(5);
        assert!(x[2].abs() < 1e-16);
        assert!((w[2] - 128.0 / 225.0).abs() < 1e-15);
    }
}
