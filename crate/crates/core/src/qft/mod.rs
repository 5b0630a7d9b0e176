//! Toy amplitudes on flat spacetimes of dimension one and two: the squared
//! geodesic distance, a Hadamard-form propagator with constant coefficients,
//! regularized products of propagators and their renormalization.
//!
//! In two dimensions test functions are products in the null coordinates
//! `u = x0 - x1`, `v = x0 + x1` of each vertex, where `dx0 dx1 = du dv / 2`
//! and the squared distance factors as `du * dv`.

mod amplitude;
mod checks;

use std::f64::consts::PI;

use num_complex::Complex64;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::{BumpFactor, CatalogEntry, DistError, PowerProduct, TestFunction};
use crate::germ::{LinearForm, Poles};
use crate::microlocal::{is_polarized, CausalSite, CotangentElement, Scalar};
use crate::quad::QuadError;
use crate::renorm::RenormError;

pub use amplitude::{
    regularized_amplitude, renormalize_amplitude, AmplitudeOptions, AmplitudeRenorm, AmplitudeValue, Route,
    TwoPointKernel,
};
pub use checks::{
    check_covariance, check_qft_factorization, shipped_factorization, two_blocks_with_bridge, CovarianceReport, FactorizationOptions,
    QftFactorizationReport,
};

#[derive(Debug, Error)]
pub enum QftError {
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error(transparent)]
    Renorm(#[from] RenormError),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error("invalid amplitude: {0}")]
    Spec(String),
    #[error("outside validity region: {0}")]
    OutsideValidity(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

/// `Line` is `R` with `G(x, y) = (x - y)^2`; `Minkowski` is `R^{1+1}` with
/// `G(x, y) = (x0 - y0)^2 - (x1 - y1)^2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Spacetime {
    Line,
    Minkowski,
}

impl TryFrom<u8> for Spacetime {
    type Error = String;

    fn try_from(d: u8) -> Result<Self, String> {
        match d {
            1 => Ok(Spacetime::Line),
            2 => Ok(Spacetime::Minkowski),
            _ => Err(format!("spacetime dimension must be 1 or 2, got {d}")),
        }
    }
}

impl From<Spacetime> for u8 {
    fn from(s: Spacetime) -> u8 {
        s.dim() as u8
    }
}

/// Value and both gradients (as covectors) of the squared distance.
#[derive(Clone, Debug, PartialEq)]
pub struct Synge<S> {
    pub value: S,
    pub dx: Vec<S>,
    pub dy: Vec<S>,
}

impl Spacetime {
    pub fn dim(self) -> usize {
        match self {
            Spacetime::Line => 1,
            Spacetime::Minkowski => 2,
        }
    }

    pub fn site(self) -> CausalSite {
        CausalSite::new(self.dim() - 1)
    }

    pub fn synge<S: Scalar>(self, x: &[S], y: &[S]) -> Synge<S> {
        let site = self.site();
        let diff: Vec<S> = y.iter().zip(x).map(|(a, b)| a.clone() - b.clone()).collect();
        let value = site.metric(&diff, &diff);
        // lower the index of 2 (y - x)
        let dy: Vec<S> = diff
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let two = S::from_i64(2) * c.clone();
                if i == 0 {
                    two
                } else {
                    -two
                }
            })
            .collect();
        let dx = dy.iter().map(|c| -c.clone()).collect();
        Synge { value, dx, dy }
    }

    /// `g^{mn} xi_m xi_n`.
    pub fn covector_norm<S: Scalar>(self, xi: &[S]) -> S {
        self.site().metric(xi, xi)
    }

    /// `g^{mn} d_m G d_n G = 4 G` in exact arithmetic.
    pub fn gradient_identity(self, x: &[BigRational], y: &[BigRational]) -> bool {
        let s = self.synge(x, y);
        self.covector_norm(&s.dx) == BigRational::from_i64(4) * s.value.clone()
            && self.covector_norm(&s.dy) == BigRational::from_i64(4) * s.value
    }

    /// Squared distance between vertex coordinates as used by the integrators:
    /// Cartesian on the line, null coordinates in two dimensions.
    pub fn gamma(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Spacetime::Line => (b[0] - a[0]) * (b[0] - a[0]),
            Spacetime::Minkowski => (b[0] - a[0]) * (b[1] - a[1]),
        }
    }

    /// Catalog function of the relative coordinate whose powers carry the
    /// two-point kernels.
    pub fn entry(self) -> CatalogEntry {
        match self {
            Spacetime::Line => CatalogEntry::Square,
            Spacetime::Minkowski => CatalogEntry::Monomial { exponents: vec![1, 1] },
        }
    }

    /// `dx` in the integration coordinates of one vertex.
    pub fn vertex_jacobian(self) -> f64 {
        match self {
            Spacetime::Line => 1.0,
            Spacetime::Minkowski => 0.5,
        }
    }

    pub fn to_null(self, x: &[f64]) -> Vec<f64> {
        match self {
            Spacetime::Line => x.to_vec(),
            Spacetime::Minkowski => vec![x[0] - x[1], x[0] + x[1]],
        }
    }
}

/// `log(G + i0)`.
pub fn log_i0(gamma: f64) -> Complex64 {
    Complex64::new(gamma.abs().ln(), if gamma < 0.0 { PI } else { 0.0 })
}

/// `P = U / (G + i0) + V log(G + i0) + W` with constant coefficients.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PropagatorModel {
    pub u: f64,
    pub v: f64,
    pub w: f64,
}

impl Default for PropagatorModel {
    fn default() -> Self {
        PropagatorModel { u: 1.0, v: 0.0, w: 0.0 }
    }
}

/// `coef * (G + i0)^{-power} * log(G + i0)^logs`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExpansionTerm {
    pub coef: f64,
    pub power: u32,
    pub logs: u32,
}

impl PropagatorModel {
    pub fn validate(&self) -> Result<(), QftError> {
        if [self.u, self.v, self.w].iter().all(|c| c.is_finite()) {
            Ok(())
        } else {
            Err(QftError::Spec(format!("non-finite propagator coefficients {self:?}")))
        }
    }

    /// Multinomial expansion of `P^mult`.
    pub fn expansion(&self, mult: u32) -> Vec<ExpansionTerm> {
        let fact = |k: u32| (1..=k).fold(1.0, |a, j| a * j as f64);
        let mut out = Vec::new();
        for a in 0..=mult {
            for b in 0..=mult - a {
                let c = mult - a - b;
                let coef = fact(mult) / (fact(a) * fact(b) * fact(c))
                    * self.u.powi(a as i32)
                    * self.v.powi(b as i32)
                    * self.w.powi(c as i32);
                if coef != 0.0 {
                    out.push(ExpansionTerm { coef, power: a, logs: b });
                }
            }
        }
        out
    }

    /// `P^mult (G + i0)^{mult * lambda}` off the zero set of `G`; zero on it,
    /// which only quadrature nodes rounded onto that null set can reach.
    pub fn edge_factor(&self, mult: u32, lambda: Complex64, gamma: f64) -> Complex64 {
        if gamma == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let l = log_i0(gamma);
        // (P (G + i0)^lambda)^mult, with the exponents combined so that tiny
        // |G| does not overflow
        let q = self.u * (l * (lambda - 1.0)).exp() + (self.v * l + self.w) * (l * lambda).exp();
        q.powu(mult)
    }

    /// Pole order at `lambda = 0` of the two-point kernel family allowed by
    /// the catalog lattice; each log factor raises it by one.
    pub fn declared_order(&self, st: Spacetime, mult: u32) -> Result<u32, QftError> {
        let lattice = PowerProduct::single(st.entry()).lattice()?;
        let mut order = 0;
        for t in self.expansion(mult) {
            let composed = lattice.compose(&[vec![mult as i64]], &[-(t.power as i64)]);
            let m = composed.through(&[0])?.values().copied().max().unwrap_or(0);
            if m > 0 {
                order = order.max(m + t.logs);
            }
        }
        Ok(order)
    }
}

/// Propagator between vertices `i < j` (1-based) raised to `mult`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub mult: u32,
}

/// Graph of an amplitude; edge `k` carries its own variable `lambda_k`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AmplitudeSpec {
    pub vertices: usize,
    pub edges: Vec<Edge>,
}

impl AmplitudeSpec {
    pub fn validate(&self) -> Result<(), QftError> {
        if self.vertices < 2 {
            return Err(QftError::Spec(format!("need at least two vertices, got {}", self.vertices)));
        }
        if self.edges.is_empty() {
            return Err(QftError::Spec("no edges".into()));
        }
        for (k, e) in self.edges.iter().enumerate() {
            if !(1 <= e.i && e.i < e.j && e.j <= self.vertices) || e.mult == 0 {
                return Err(QftError::Spec(format!("edge {k}: {e:?}")));
            }
            if self.edges[..k].iter().any(|f| (f.i, f.j) == (e.i, e.j)) {
                return Err(QftError::Spec(format!("edge {k}: repeated pair ({}, {})", e.i, e.j)));
            }
        }
        Ok(())
    }

    /// Declared poles at `lambda = 0`, one variable per edge.
    pub fn declared_poles(&self, st: Spacetime, model: &PropagatorModel) -> Result<Poles, QftError> {
        let p = self.edges.len();
        let mut poles = Poles::new();
        for (k, e) in self.edges.iter().enumerate() {
            let m = model.declared_order(st, e.mult)?;
            if m > 0 {
                poles.insert(LinearForm::unit(p, k), m);
            }
        }
        Ok(poles)
    }
}

/// `prod_i phi_i(x_i)`; each `phi_i` has `d` factors, in null coordinates when `d = 2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductTest {
    pub vertices: Vec<TestFunction>,
}

impl ProductTest {
    pub fn validate(&self, st: Spacetime, n: usize) -> Result<(), QftError> {
        if self.vertices.len() != n {
            return Err(QftError::Spec(format!("{} vertex test functions for {n} vertices", self.vertices.len())));
        }
        for phi in &self.vertices {
            if phi.factors.len() != st.dim() {
                return Err(DistError::Dimension { expected: st.dim(), got: phi.factors.len() }.into());
            }
            phi.validate()?;
        }
        Ok(())
    }

    /// Support interval of vertex `i` along integration axis `k`.
    pub fn range(&self, i: usize, k: usize) -> (f64, f64) {
        let f = &self.vertices[i].factors[k];
        (f.center - f.half_width, f.center + f.half_width)
    }

    /// Supports of the two vertices avoid the zero set of `G` in every pair.
    pub fn separated(&self, st: Spacetime, i: usize, j: usize) -> bool {
        (0..st.dim()).all(|k| {
            let (a0, a1) = self.range(i, k);
            let (b0, b1) = self.range(j, k);
            b0 - a1 > 0.0 || a0 - b1 > 0.0
        })
    }

    pub fn push_forward(&self, st: Spacetime, g: &Isometry) -> Result<ProductTest, QftError> {
        let vertices = self
            .vertices
            .iter()
            .map(|phi| g.push_forward(st, phi))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ProductTest { vertices })
    }
}

/// Affine maps preserving `G` that are realized on product test functions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Isometry {
    /// Cartesian translation vector.
    Translation { by: Vec<f64> },
    /// `u -> e^{-r} u`, `v -> e^{r} v`; two dimensions only.
    Boost { rapidity: f64 },
    /// `x -> -x` on the line, `x1 -> -x1` in two dimensions.
    Reflection,
}

impl Isometry {
    pub fn apply(&self, st: Spacetime, x: &[f64]) -> Result<Vec<f64>, QftError> {
        Ok(match (self, st) {
            (Isometry::Translation { by }, _) if by.len() == st.dim() => x.iter().zip(by).map(|(a, b)| a + b).collect(),
            (Isometry::Boost { rapidity }, Spacetime::Minkowski) => {
                let (c, s) = (rapidity.cosh(), rapidity.sinh());
                vec![c * x[0] + s * x[1], s * x[0] + c * x[1]]
            }
            (Isometry::Reflection, Spacetime::Line) => vec![-x[0]],
            (Isometry::Reflection, Spacetime::Minkowski) => vec![x[0], -x[1]],
            _ => return Err(QftError::Unsupported(format!("{self:?} on {}-dimensional spacetime", st.dim()))),
        })
    }

    /// `phi o g^{-1}`.
    pub fn push_forward(&self, st: Spacetime, phi: &TestFunction) -> Result<TestFunction, QftError> {
        let f = &phi.factors;
        let factors: Vec<BumpFactor> = match (self, st) {
            (Isometry::Translation { by }, Spacetime::Line) if by.len() == 1 => vec![f[0].image(1.0, by[0])],
            (Isometry::Translation { by }, Spacetime::Minkowski) if by.len() == 2 => {
                vec![f[0].image(1.0, by[0] - by[1]), f[1].image(1.0, by[0] + by[1])]
            }
            (Isometry::Boost { rapidity }, Spacetime::Minkowski) => {
                vec![f[0].image((-rapidity).exp(), 0.0), f[1].image(rapidity.exp(), 0.0)]
            }
            (Isometry::Reflection, Spacetime::Line) => vec![f[0].image(-1.0, 0.0)],
            (Isometry::Reflection, Spacetime::Minkowski) => vec![f[1].clone(), f[0].clone()],
            _ => return Err(QftError::Unsupported(format!("{self:?} on {}-dimensional spacetime", st.dim()))),
        };
        Ok(TestFunction::new(factors))
    }
}

/// The sets `C_I` of configurations where no point of `I` meets a point outside it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionCover {
    pub n: usize,
    /// Proper nonempty subsets of `1..=n`.
    pub regions: Vec<Vec<usize>>,
}

pub fn cover_regions(n: usize) -> Result<RegionCover, QftError> {
    if !(2..=20).contains(&n) {
        return Err(QftError::Spec(format!("cover needs 2 <= n <= 20, got {n}")));
    }
    let regions = (1..(1usize << n) - 1).map(|m| (1..=n).filter(|i| m >> (i - 1) & 1 == 1).collect()).collect();
    Ok(RegionCover { n, regions })
}

impl RegionCover {
    pub fn contains(&self, region: &[usize], config: &[Vec<f64>]) -> bool {
        let inside = |i: usize| region.contains(&(i + 1));
        let mut min = f64::INFINITY;
        for i in (0..config.len()).filter(|&i| inside(i)) {
            for j in (0..config.len()).filter(|&j| !inside(j)) {
                let d = config[i].iter().zip(&config[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
                min = min.min(d);
            }
        }
        min > 0.0
    }

    /// Regions containing the configuration.
    pub fn members(&self, config: &[Vec<f64>]) -> Vec<&[usize]> {
        self.regions.iter().filter(|r| self.contains(r, config)).map(|r| r.as_slice()).collect()
    }
}

/// Sampled check that the wavefront relation of the model propagator is a
/// Feynman relation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeynmanReport {
    pub samples: usize,
    /// Off-diagonal null pairs with `a > 0` carry a nonzero forward covector
    /// at the later point and are strictly polarized.
    pub forward_at_later: bool,
    pub reversed_rejected: bool,
    pub diagonal_polarized: bool,
    /// On the line the relation has no off-diagonal part.
    pub off_diagonal_empty: Option<bool>,
}

impl FeynmanReport {
    pub fn pass(&self) -> bool {
        self.forward_at_later && self.reversed_rejected && self.diagonal_polarized && self.off_diagonal_empty != Some(false)
    }
}

fn random_rational(rng: &mut ChaCha8Rng) -> BigRational {
    BigRational::new(rng.gen_range(-20i64..=20).into(), rng.gen_range(1i64..=6).into())
}

fn positive_rational(rng: &mut ChaCha8Rng) -> BigRational {
    BigRational::new(rng.gen_range(1i64..=20).into(), rng.gen_range(1i64..=6).into())
}

pub fn feynman_relation_check(st: Spacetime, model: &PropagatorModel, samples: usize, seed: u64) -> FeynmanReport {
    let site = st.site();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = FeynmanReport {
        samples,
        forward_at_later: true,
        reversed_rejected: true,
        diagonal_polarized: true,
        off_diagonal_empty: None,
    };
    // a smooth propagator has empty wavefront set
    if model.u == 0.0 && model.v == 0.0 {
        return report;
    }
    let zero = || BigRational::from_i64(0);
    for _ in 0..samples {
        let x: Vec<BigRational> = (0..st.dim()).map(|_| random_rational(&mut rng)).collect();
        let xi: Vec<BigRational> = (0..st.dim()).map(|_| random_rational(&mut rng)).collect();
        let diag = vec![
            CotangentElement::new(x.clone(), xi.clone()),
            CotangentElement::new(x.clone(), xi.iter().map(|c| -c.clone()).collect()),
        ];
        report.diagonal_polarized &= is_polarized(&site, &diag, false);

        let mut t = random_rational(&mut rng);
        if t == zero() {
            t = BigRational::from_i64(1);
        }
        match st {
            Spacetime::Line => {
                let y = vec![x[0].clone() + t];
                let g = st.synge(&x, &y);
                let empty = g.value > zero();
                report.off_diagonal_empty = Some(report.off_diagonal_empty.unwrap_or(true) && empty);
            }
            Spacetime::Minkowski => {
                let dir = if rng.gen_bool(0.5) { BigRational::from_i64(1) } else { BigRational::from_i64(-1) };
                let y = vec![x[0].clone() + t.clone(), x[1].clone() + t.clone() * dir];
                let g = st.synge(&x, &y);
                debug_assert!(g.value == zero());
                let a = positive_rational(&mut rng);
                let scaled = |v: &[BigRational], s: &BigRational| -> Vec<BigRational> {
                    v.iter().map(|c| c.clone() * s.clone()).collect()
                };
                let later_is_y = t > zero();
                for sign in [1i64, -1] {
                    let s = a.clone() * BigRational::from_i64(sign);
                    let (cx, cy) = (scaled(&g.dx, &s), scaled(&g.dy, &s));
                    let later = if later_is_y { &cy } else { &cx };
                    let forward = site.in_forward_cone(later) && later.iter().any(|c| !Scalar::is_zero(c));
                    let config = vec![CotangentElement::new(x.clone(), cx.clone()), CotangentElement::new(y.clone(), cy)];
                    if sign > 0 {
                        report.forward_at_later &= forward && is_polarized(&site, &config, true);
                    } else {
                        report.reversed_rejected &= !forward && !is_polarized(&site, &config, false);
                    }
                }
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::rat;

    #[test]
    fn synge_examples() {
        let st = Spacetime::Minkowski;
        assert_eq!(st.synge(&[0.0, 0.0], &[3.0, 0.0]).value, 9.0);
        assert_eq!(st.synge(&[0.0, 0.0], &[1.0, 1.0]).value, 0.0);
        let s = st.synge(&[rat(1, 2), rat(0, 1)], &[rat(2, 1), rat(1, 3)]);
        assert!(st.gradient_identity(&[rat(1, 2), rat(0, 1)], &[rat(2, 1), rat(1, 3)]));
        assert_eq!(s.dx.iter().zip(&s.dy).map(|(a, b)| a + b).collect::<Vec<_>>(), vec![rat(0, 1), rat(0, 1)]);
        // null coordinates give the same value
        let (x, y) = ([0.3, -0.2], [1.1, 0.4]);
        let g = st.synge(&x, &y).value;
        assert!((st.gamma(&st.to_null(&x), &st.to_null(&y)) - g).abs() < 1e-15);
    }

    #[test]
    fn expansion_resums() {
        let m = PropagatorModel { u: 1.5, v: -0.5, w: 0.25 };
        for gamma in [-2.0, 0.3, 4.0] {
            let l = log_i0(gamma);
            let lam = Complex64::new(0.2, -0.1);
            let direct = m.edge_factor(3, lam, gamma);
            let sum: Complex64 = m
                .expansion(3)
                .iter()
                .map(|t| t.coef * (l * (lam * 3.0 - t.power as f64)).exp() * l.powu(t.logs))
                .sum();
            assert!((direct - sum).norm() < 1e-12 * direct.norm(), "{gamma}");
        }
    }

    #[test]
    fn declared_orders() {
        let m = PropagatorModel::default();
        assert_eq!(m.declared_order(Spacetime::Line, 2).unwrap(), 1);
        assert_eq!(m.declared_order(Spacetime::Minkowski, 1).unwrap(), 2);
        let logs = PropagatorModel { u: 1.0, v: 1.0, w: 0.0 };
        assert_eq!(logs.declared_order(Spacetime::Minkowski, 2).unwrap(), 3);
        let smooth = PropagatorModel { u: 0.0, v: 0.0, w: 1.0 };
        assert_eq!(smooth.declared_order(Spacetime::Minkowski, 2).unwrap(), 0);
    }

    #[test]
    fn spec_validation() {
        let ok = AmplitudeSpec { vertices: 3, edges: vec![Edge { i: 1, j: 2, mult: 1 }, Edge { i: 2, j: 3, mult: 2 }] };
        assert!(ok.validate().is_ok());
        let bad = AmplitudeSpec { vertices: 2, edges: vec![Edge { i: 2, j: 1, mult: 1 }] };
        assert!(bad.validate().is_err());
        let dup = AmplitudeSpec { vertices: 2, edges: vec![Edge { i: 1, j: 2, mult: 1 }; 2] };
        assert!(dup.validate().is_err());
        assert!(serde_json::from_str::<Spacetime>("3").is_err());
    }

    #[test]
    fn cover_examples() {
        let c = cover_regions(3).unwrap();
        assert_eq!(c.regions.len(), 6);
        let distinct = vec![vec![0.0], vec![1.0], vec![2.0]];
        assert_eq!(c.members(&distinct).len(), 6);
        let pair = vec![vec![0.0], vec![0.0], vec![2.0]];
        assert!(c.contains(&[1, 2], &pair));
        assert!(!c.contains(&[1], &pair));
        let diag = vec![vec![0.5], vec![0.5], vec![0.5]];
        assert!(c.members(&diag).is_empty());
    }

    #[test]
    fn feynman_relation() {
        for st in [Spacetime::Line, Spacetime::Minkowski] {
            let r = feynman_relation_check(st, &PropagatorModel::default(), 200, 1);
            assert!(r.pass(), "{r:?}");
        }
    }

    #[test]
    fn push_forward_matches_points() {
        let st = Spacetime::Minkowski;
        let phi = TestFunction::new(vec![BumpFactor::with_poly(vec![1.0, 0.5], 0.2, 0.6), BumpFactor::bump(-0.1, 0.4)]);
        for g in [Isometry::Translation { by: vec![1.0, 0.3] }, Isometry::Boost { rapidity: 0.5 }, Isometry::Reflection] {
            let pushed = g.push_forward(st, &phi).unwrap();
            for x in [[0.1, -0.05], [0.3, 0.1], [-0.1, -0.2]] {
                let y = g.apply(st, &x).unwrap();
                let a = crate::dist::SmoothFn::value(&phi, &st.to_null(&x));
                let b = crate::dist::SmoothFn::value(&pushed, &st.to_null(&y));
                assert!((a - b).abs() < 1e-13, "{g:?} {x:?}");
            }
        }
    }
}
