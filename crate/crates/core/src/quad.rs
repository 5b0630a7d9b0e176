//! Double-exponential (tanh-sinh) quadrature.
//!
//! Nodes carry their distances to both interval ends, computed without
//! cancellation, so integrands with algebraic endpoint singularities such as
//! `y^mu` (Re mu > -1) can be evaluated accurately next to the endpoint.

use std::f64::consts::FRAC_PI_2;
use std::ops::{Add, Mul};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Half-width of the truncated t-range; distances below ~1e-270 are dropped.
const T_MAX: f64 = 6.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadError {
    #[error("quadrature did not converge: estimate error {err:e} > tolerance {tol:e} at level {level}")]
    NoConvergence { err: f64, tol: f64, level: u32 },
    #[error("non-finite integrand value at x = {x}")]
    NonFinite { x: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureConfig {
    /// Absolute tolerance on successive-level differences.
    pub tol: f64,
    /// Deepest refinement level (step `2^-level`).
    pub max_level: u32,
    /// First level at which convergence may be declared.
    pub min_level: u32,
    /// Contour node count per variable (power of two).
    pub contour_nodes: usize,
    /// Upper bound for contour node doubling.
    pub max_contour_nodes: usize,
    /// Contour radius as a fraction of the distance to the nearest other pole.
    pub radius_fraction: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            tol: 1e-10,
            max_level: 9,
            min_level: 3,
            contour_nodes: 64,
            max_contour_nodes: 256,
            radius_fraction: 0.25,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.tol > 0.0) {
            return Err(format!("tolerance must be positive, got {}", self.tol));
        }
        if !self.contour_nodes.is_power_of_two() || !self.max_contour_nodes.is_power_of_two() {
            return Err("contour node counts must be powers of two".into());
        }
        if self.max_contour_nodes < self.contour_nodes {
            return Err("max_contour_nodes below contour_nodes".into());
        }
        if !(self.radius_fraction > 0.0 && self.radius_fraction < 1.0) {
            return Err("radius_fraction must lie in (0, 1)".into());
        }
        if self.min_level > self.max_level {
            return Err("min_level above max_level".into());
        }
        Ok(())
    }
}

pub trait QuadValue: Copy + Add<Output = Self> + Mul<f64, Output = Self> + Send + Sync {
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

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Node {
    pub x: f64,
    pub w: f64,
    /// `x - a`, accurate near `a`.
    pub from_a: f64,
    /// `b - x`, accurate near `b`.
    pub from_b: f64,
}

fn node_at(t: f64, a: f64, b: f64, h: f64) -> Option<Node> {
    let half = 0.5 * (b - a);
    let u = FRAC_PI_2 * t.sinh();
    let e = (-2.0 * u.abs()).exp();
    // 1 - |tanh u| = 2 e / (1 + e)
    let comp = 2.0 * e / (1.0 + e);
    if comp == 0.0 {
        return None;
    }
    let cosh_u = u.cosh();
    let w = half * h * FRAC_PI_2 * t.cosh() / (cosh_u * cosh_u);
    let (from_a, from_b) = if t < 0.0 {
        (half * comp, half * (2.0 - comp))
    } else {
        (half * (2.0 - comp), half * comp)
    };
    let x = if t < 0.0 { a + from_a } else { b - from_b };
    Some(Node { x, w, from_a, from_b })
}

/// All nodes of the rule with step `2^-level` on `[a, b]`.
pub fn nodes(a: f64, b: f64, level: u32) -> Vec<Node> {
    let h = 0.5f64.powi(level as i32);
    let n = (T_MAX / h).round() as i64;
    (-n..=n).filter_map(|k| node_at(k as f64 * h, a, b, h)).collect()
}

/// Nodes added when refining from `level - 1` to `level` (odd multiples of h).
pub fn new_nodes(a: f64, b: f64, level: u32) -> Vec<Node> {
    let h = 0.5f64.powi(level as i32);
    let n = (T_MAX / h).round() as i64;
    (-n..=n).filter(|k| k % 2 != 0).filter_map(|k| node_at(k as f64 * h, a, b, h)).collect()
}

#[derive(Clone, Copy, Debug)]
pub struct QuadResult<V> {
    pub value: V,
    pub err: f64,
    pub level: u32,
    pub evals: usize,
}

/// Adaptive tanh-sinh on `[a, b]`, halving the step until successive levels
/// agree within `cfg.tol`. The integrand receives the full [`Node`].
pub fn integrate<V: QuadValue>(
    f: impl Fn(&Node) -> V,
    a: f64,
    b: f64,
    cfg: &QuadratureConfig,
) -> Result<QuadResult<V>, QuadError> {
    if a == b {
        return Ok(QuadResult { value: V::zero(), err: 0.0, level: 0, evals: 0 });
    }
    if b < a {
        let r = integrate(f, b, a, cfg)?;
        return Ok(QuadResult { value: r.value * -1.0, ..r });
    }
    let mut evals = 0usize;
    let mut eval_sum = |ns: &[Node]| -> Result<V, QuadError> {
        let mut s = V::zero();
        for n in ns {
            let v = f(n);
            if !v.magnitude().is_finite() {
                return Err(QuadError::NonFinite { x: n.x });
            }
            s = s + v * n.w;
        }
        evals += ns.len();
        Ok(s)
    };
    // sum of f*w at level 0 with h = 1
    let mut raw = eval_sum(&nodes(a, b, 0))?;
    let mut prev = raw;
    let mut err = f64::INFINITY;
    for level in 1..=cfg.max_level {
        // node weights already contain h; rescale the running sum to the new step
        raw = raw * 0.5 + eval_sum(&new_nodes(a, b, level))?;
        err = (raw + prev * -1.0).magnitude();
        if level >= cfg.min_level && err <= cfg.tol {
            return Ok(QuadResult { value: raw, err, level, evals });
        }
        prev = raw;
    }
    Err(QuadError::NoConvergence { err, tol: cfg.tol, level: cfg.max_level })
}

/// [`integrate`] with each refinement level evaluated in parallel. Values are
/// summed in node order, so results do not depend on scheduling.
pub fn integrate_par<V: QuadValue>(
    f: impl Fn(&Node) -> V + Sync,
    a: f64,
    b: f64,
    cfg: &QuadratureConfig,
) -> Result<QuadResult<V>, QuadError> {
    if a == b {
        return Ok(QuadResult { value: V::zero(), err: 0.0, level: 0, evals: 0 });
    }
    if b < a {
        let r = integrate_par(f, b, a, cfg)?;
        return Ok(QuadResult { value: r.value * -1.0, ..r });
    }
    let mut evals = 0usize;
    let mut eval_sum = |ns: &[Node]| -> Result<V, QuadError> {
        let vals: Vec<V> = ns.par_iter().map(&f).collect();
        let mut s = V::zero();
        for (n, v) in ns.iter().zip(vals) {
            if !v.magnitude().is_finite() {
                return Err(QuadError::NonFinite { x: n.x });
            }
            s = s + v * n.w;
        }
        evals += ns.len();
        Ok(s)
    };
    let mut raw = eval_sum(&nodes(a, b, 0))?;
    let mut prev = raw;
    let mut err = f64::INFINITY;
    for level in 1..=cfg.max_level {
        raw = raw * 0.5 + eval_sum(&new_nodes(a, b, level))?;
        err = (raw + prev * -1.0).magnitude();
        if level >= cfg.min_level && err <= cfg.tol {
            return Ok(QuadResult { value: raw, err, level, evals });
        }
        prev = raw;
    }
    Err(QuadError::NoConvergence { err, tol: cfg.tol, level: cfg.max_level })
}

/// Iterated integration over a box where each axis may be split at
/// integrand-dependent breakpoints. `breaks(k, prefix)` returns interior
/// breakpoints on axis `k` given the already-fixed coordinates `prefix`.
pub fn integrate_nested<V: QuadValue>(
    f: &(dyn Fn(&[f64]) -> V + Sync),
    lo: &[f64],
    hi: &[f64],
    breaks: &(dyn Fn(usize, &[f64]) -> Vec<f64> + Sync),
    cfg: &QuadratureConfig,
) -> Result<V, QuadError> {
    let mut prefix = Vec::with_capacity(lo.len());
    nested_rec(f, lo, hi, breaks, cfg, &mut prefix, false)
}

/// [`integrate_nested`] with the outermost axis evaluated in parallel.
pub fn integrate_nested_par<V: QuadValue>(
    f: &(dyn Fn(&[f64]) -> V + Sync),
    lo: &[f64],
    hi: &[f64],
    breaks: &(dyn Fn(usize, &[f64]) -> Vec<f64> + Sync),
    cfg: &QuadratureConfig,
) -> Result<V, QuadError> {
    let mut prefix = Vec::with_capacity(lo.len());
    nested_rec(f, lo, hi, breaks, cfg, &mut prefix, true)
}

fn nested_rec<V: QuadValue>(
    f: &(dyn Fn(&[f64]) -> V + Sync),
    lo: &[f64],
    hi: &[f64],
    breaks: &(dyn Fn(usize, &[f64]) -> Vec<f64> + Sync),
    cfg: &QuadratureConfig,
    prefix: &mut Vec<f64>,
    par: bool,
) -> Result<V, QuadError> {
    let k = prefix.len();
    if k == lo.len() {
        return Ok(f(prefix));
    }
    let mut pts = vec![lo[k]];
    let mut inner: Vec<f64> = breaks(k, prefix).into_iter().filter(|&x| x > lo[k] && x < hi[k]).collect();
    inner.sort_by(|a, b| a.partial_cmp(b).unwrap());
    inner.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    pts.extend(inner);
    pts.push(hi[k]);
    let mut total = V::zero();
    let mut failure = None;
    let inner = |n: &Node| {
        let mut p = prefix.clone();
        p.push(n.x);
        match nested_rec(f, lo, hi, breaks, cfg, &mut p, false) {
            Ok(v) => v,
            Err(_) => V::zero() * f64::NAN,
        }
    };
    for win in pts.windows(2) {
        let r = if par { integrate_par(inner, win[0], win[1], cfg) } else { integrate(inner, win[0], win[1], cfg) };
        match r {
            Ok(r) => total = total + r.value,
            Err(e) => failure = Some(e),
        }
    }
    match failure {
        Some(e) => Err(e),
        None => Ok(total),
    }
}
