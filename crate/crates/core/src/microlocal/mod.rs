//! Causal order on flat Minkowski space, traces of cotangent configurations,
//! polarization predicates, cone cells and their Iagolnitzer sums.
//!
//! Predicates are generic over [`Scalar`]: exact rationals decide boundary
//! cases (null covectors, vanishing sums) without rounding, floats use a
//! small guard band.

mod cone;
mod random;

pub use cone::{hat_plus, hat_plus_sampled, lambda_membership, Base, ConeCell, Fiber, SampledFiber};
pub use random::{run_polarization_batch, BatchConfig, BatchReport, Counterexample};

use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::rat_to_f64;

/// Guard band for floating-point sign decisions.
pub const FLOAT_GUARD: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MicrolocalError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("configurations have different base points")]
    BasePoints,
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid number '{0}'")]
    Number(String),
}

pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn from_i64(n: i64) -> Self;
    /// -1, 0 or 1; floats inside the guard band count as zero.
    fn sign(&self) -> i8;
    fn to_f64(&self) -> f64;

    fn is_zero(&self) -> bool {
        self.sign() == 0
    }
}

impl Scalar for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn from_i64(n: i64) -> Self {
        BigRational::from_integer(n.into())
    }
    fn sign(&self) -> i8 {
        if Zero::is_zero(self) {
            0
        } else if self.is_positive() {
            1
        } else {
            -1
        }
    }
    fn to_f64(&self) -> f64 {
        rat_to_f64(self)
    }
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn from_i64(n: i64) -> Self {
        n as f64
    }
    fn sign(&self) -> i8 {
        if self.abs() <= FLOAT_GUARD {
            0
        } else if *self > 0.0 {
            1
        } else {
            -1
        }
    }
    fn to_f64(&self) -> f64 {
        *self
    }
}

fn same_point<S: Scalar>(a: &[S], b: &[S]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x.clone() - y.clone()).is_zero())
}

fn all_zero<S: Scalar>(v: &[S]) -> bool {
    v.iter().all(Scalar::is_zero)
}

/// Flat spacetime `R^{1+d}` with signature `(+, -, ..., -)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CausalSite {
    pub space_dim: usize,
}

impl CausalSite {
    pub fn new(space_dim: usize) -> Self {
        CausalSite { space_dim }
    }

    pub fn dim(&self) -> usize {
        self.space_dim + 1
    }

    pub fn metric<S: Scalar>(&self, a: &[S], b: &[S]) -> S {
        let mut g = a[0].clone() * b[0].clone();
        for i in 1..self.dim() {
            g = g - a[i].clone() * b[i].clone();
        }
        g
    }

    /// Membership in the closed forward cone `{g(v, v) >= 0, v0 >= 0}`.
    pub fn in_forward_cone<S: Scalar>(&self, v: &[S]) -> bool {
        v[0].sign() >= 0 && self.metric(v, v).sign() >= 0
    }

    pub fn causal_leq<S: Scalar>(&self, x: &[S], y: &[S]) -> bool {
        let d: Vec<S> = y.iter().zip(x).map(|(a, b)| a.clone() - b.clone()).collect();
        self.in_forward_cone(&d)
    }

    pub fn check<S>(&self, v: &[S]) -> Result<(), MicrolocalError> {
        if v.len() != self.dim() {
            return Err(MicrolocalError::Dimension { expected: self.dim(), got: v.len() });
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CotangentElement<S> {
    pub x: Vec<S>,
    pub xi: Vec<S>,
}

impl<S: Scalar> CotangentElement<S> {
    pub fn new(x: Vec<S>, xi: Vec<S>) -> Self {
        CotangentElement { x, xi }
    }

    pub fn to_f64(&self) -> CotangentElement<f64> {
        CotangentElement { x: self.x.iter().map(Scalar::to_f64).collect(), xi: self.xi.iter().map(Scalar::to_f64).collect() }
    }
}

/// A point of the trace: the summed covector at a base point, with the index
/// of the first element sitting there.
#[derive(Clone, Debug, PartialEq)]
pub struct TracePoint<S> {
    pub point: Vec<S>,
    pub covector: Vec<S>,
    pub first: usize,
}

/// Sums covectors over equal base points, keeping points where some
/// covector is nonzero.
pub fn trace<S: Scalar>(elements: &[CotangentElement<S>]) -> Vec<TracePoint<S>> {
    let mut out: Vec<(TracePoint<S>, bool)> = Vec::new();
    for (i, e) in elements.iter().enumerate() {
        let nonzero = !all_zero(&e.xi);
        match out.iter_mut().find(|(t, _)| same_point(&t.point, &e.x)) {
            Some((t, seen)) => {
                for (c, v) in t.covector.iter_mut().zip(&e.xi) {
                    *c = c.clone() + v.clone();
                }
                *seen |= nonzero;
            }
            None => out.push((TracePoint { point: e.x.clone(), covector: e.xi.clone(), first: i }, nonzero)),
        }
    }
    out.into_iter().filter(|(_, seen)| *seen).map(|(t, _)| t).collect()
}

/// Indices (into `tr`) of points with no other trace point strictly after them.
pub fn maximal_points<S: Scalar>(site: &CausalSite, tr: &[TracePoint<S>]) -> Vec<usize> {
    (0..tr.len())
        .filter(|&a| {
            !tr.iter()
                .enumerate()
                .any(|(b, t)| b != a && !same_point(&t.point, &tr[a].point) && site.causal_leq(&tr[a].point, &t.point))
        })
        .collect()
}

pub fn is_reduced_polarized<S: Scalar>(site: &CausalSite, tr: &[TracePoint<S>], strict: bool) -> bool {
    maximal_points(site, tr).into_iter().all(|a| {
        let eta = &tr[a].covector;
        site.in_forward_cone(eta) && !(strict && all_zero(eta))
    })
}

pub fn is_polarized<S: Scalar>(site: &CausalSite, elements: &[CotangentElement<S>], strict: bool) -> bool {
    is_reduced_polarized(site, &trace(elements), strict)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SumReport {
    /// `u` polarized, `v` strictly polarized, both nonzero, same base points.
    pub admissible: bool,
    pub nonzero_sum: bool,
    /// `max A = max B ∩ max C`.
    pub max_identity: bool,
    /// `max B ∩ max C ⊂ max A`.
    pub cap_inclusion: bool,
    /// `max A = max (B ∪ C)`.
    pub union_identity: bool,
    /// `u` is itself strictly polarized.
    pub u_strict: bool,
    pub sum_polarized: bool,
    pub sum_strictly_polarized: bool,
    /// Maximal trace points of `u + v`, `u`, `v`, as first element indices.
    pub max_a: Vec<usize>,
    pub max_b: Vec<usize>,
    pub max_c: Vec<usize>,
}

impl SumReport {
    /// The conclusions of the polarized-product theorem: the sum is nonzero
    /// and polarized, strictly so when `u` is. The literal `max_identity` is
    /// reported separately: it fails when a maximal point of the sum carries
    /// covectors of only one factor.
    pub fn pass(&self) -> bool {
        self.nonzero_sum
            && self.sum_polarized
            && (!self.u_strict || self.sum_strictly_polarized)
            && self.union_identity
            && self.cap_inclusion
    }
}

/// Canonical labels of the maximal points: the index of the first element of
/// `base` sitting at each point, sorted.
fn max_labels<S: Scalar>(site: &CausalSite, tr: &[TracePoint<S>], base: &[Vec<S>]) -> Vec<usize> {
    let mut v: Vec<usize> = maximal_points(site, tr)
        .into_iter()
        .map(|a| base.iter().position(|p| same_point(p, &tr[a].point)).unwrap())
        .collect();
    v.sort_unstable();
    v
}

/// Element-wise sum of two configurations over the same base points, with
/// the checks of the polarized-product theorem.
pub fn check_sum_polarization<S: Scalar>(
    site: &CausalSite,
    u: &[CotangentElement<S>],
    v: &[CotangentElement<S>],
) -> Result<SumReport, MicrolocalError> {
    if u.len() != v.len() || u.iter().zip(v).any(|(a, b)| !same_point(&a.x, &b.x)) {
        return Err(MicrolocalError::BasePoints);
    }
    for e in u.iter().chain(v) {
        site.check(&e.x)?;
        site.check(&e.xi)?;
    }
    let w: Vec<CotangentElement<S>> = u
        .iter()
        .zip(v)
        .map(|(a, b)| CotangentElement {
            x: a.x.clone(),
            xi: a.xi.iter().zip(&b.xi).map(|(p, q)| p.clone() + q.clone()).collect(),
        })
        .collect();
    let nonzero = |c: &[CotangentElement<S>]| c.iter().any(|e| !all_zero(&e.xi));
    let (tu, tv, tw) = (trace(u), trace(v), trace(&w));
    let admissible =
        nonzero(u) && nonzero(v) && is_reduced_polarized(site, &tu, false) && is_reduced_polarized(site, &tv, true);
    let base: Vec<Vec<S>> = u.iter().map(|e| e.x.clone()).collect();
    let (max_a, max_b, max_c) = (max_labels(site, &tw, &base), max_labels(site, &tu, &base), max_labels(site, &tv, &base));
    let cap: Vec<usize> = max_b.iter().copied().filter(|i| max_c.contains(i)).collect();
    let mut union = tu.clone();
    union.extend(tv.iter().filter(|t| !tu.iter().any(|s| same_point(&s.point, &t.point))).cloned());
    Ok(SumReport {
        admissible,
        nonzero_sum: nonzero(&w),
        max_identity: max_a == cap,
        cap_inclusion: cap.iter().all(|i| max_a.contains(i)),
        union_identity: max_a == max_labels(site, &union, &base),
        u_strict: is_reduced_polarized(site, &tu, true),
        sum_polarized: is_reduced_polarized(site, &tw, false),
        sum_strictly_polarized: is_reduced_polarized(site, &tw, true),
        max_a,
        max_b,
        max_c,
    })
}

/// Number read from a configuration file: integers and `p/q` strings stay
/// exact, floats are converted exactly from their binary value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Num {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Num {
    pub fn to_rational(&self) -> Result<BigRational, MicrolocalError> {
        match self {
            Num::Int(n) => Ok(BigRational::from_integer((*n).into())),
            Num::Float(x) => BigRational::from_float(*x).ok_or_else(|| MicrolocalError::Number(x.to_string())),
            Num::Text(s) => BigRational::from_str(s.trim()).map_err(|_| MicrolocalError::Number(s.clone())),
        }
    }

    pub fn from_rational(q: &BigRational) -> Num {
        if q.is_integer() {
            if let Ok(n) = q.to_integer().try_into() {
                return Num::Int(n);
            }
        }
        Num::Text(q.to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElementSpec {
    pub x: Vec<Num>,
    pub xi: Vec<Num>,
}

impl ElementSpec {
    pub fn parse(&self) -> Result<CotangentElement<BigRational>, MicrolocalError> {
        let conv = |v: &[Num]| v.iter().map(Num::to_rational).collect::<Result<Vec<_>, _>>();
        Ok(CotangentElement { x: conv(&self.x)?, xi: conv(&self.xi)? })
    }

    pub fn from_element(e: &CotangentElement<BigRational>) -> Self {
        ElementSpec { x: e.x.iter().map(Num::from_rational).collect(), xi: e.xi.iter().map(Num::from_rational).collect() }
    }
}

/// A pair of configurations as read from JSON or TOML.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairSpec {
    pub space_dim: usize,
    pub u: Vec<ElementSpec>,
    pub v: Vec<ElementSpec>,
}

impl PairSpec {
    pub fn check(&self) -> Result<SumReport, MicrolocalError> {
        let site = CausalSite::new(self.space_dim);
        let parse = |c: &[ElementSpec]| c.iter().map(ElementSpec::parse).collect::<Result<Vec<_>, _>>();
        check_sum_polarization(&site, &parse(&self.u)?, &parse(&self.v)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::rat_int;

    fn q(v: &[i64]) -> Vec<BigRational> {
        v.iter().map(|&n| rat_int(n)).collect()
    }

    fn el(x: &[i64], xi: &[i64]) -> CotangentElement<BigRational> {
        CotangentElement::new(q(x), q(xi))
    }

    #[test]
    fn causal_order_examples() {
        let s = CausalSite::new(1);
        assert!(s.causal_leq(&q(&[0, 0]), &q(&[1, 0])));
        assert!(!s.causal_leq(&q(&[0, 0]), &q(&[0, 1])));
        assert!(s.causal_leq(&q(&[3, 2]), &q(&[3, 2])));
        // null separation is included, past is not
        assert!(s.causal_leq(&q(&[0, 0]), &q(&[1, 1])));
        assert!(!s.causal_leq(&q(&[1, 0]), &q(&[0, 0])));
        assert!(!s.causal_leq(&[0.0, 0.0], &[1.0, 1.0 + 1e-6]));
        assert!(s.causal_leq(&[0.0, 0.0], &[1.0, 1.0 + 1e-12]));
    }

    #[test]
    fn order_axioms_on_grid() {
        let s = CausalSite::new(1);
        let pts: Vec<Vec<BigRational>> =
            (-2..=2).flat_map(|a| (-2..=2).map(move |b| q(&[a, b]))).collect();
        for x in &pts {
            assert!(s.causal_leq(x, x));
            for y in &pts {
                if s.causal_leq(x, y) && s.causal_leq(y, x) {
                    assert_eq!(x, y);
                }
                for z in &pts {
                    if s.causal_leq(x, y) && s.causal_leq(y, z) {
                        assert!(s.causal_leq(x, z));
                    }
                }
            }
        }
    }

    #[test]
    fn trace_examples() {
        let t = trace(&[el(&[0, 0], &[1, 0]), el(&[0, 0], &[-1, 0])]);
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].covector, q(&[0, 0]));
        let t = trace(&[el(&[0, 0], &[1, 0])]);
        assert_eq!(t[0].covector, q(&[1, 0]));
        assert!(trace(&[el(&[0, 0], &[0, 0])]).is_empty());
    }

    #[test]
    fn polarization_examples() {
        let s = CausalSite::new(1);
        let fwd = trace(&[el(&[0, 0], &[2, 1])]);
        assert!(is_reduced_polarized(&s, &fwd, false) && is_reduced_polarized(&s, &fwd, true));
        let zero = trace(&[el(&[0, 0], &[1, 0]), el(&[0, 0], &[-1, 0])]);
        assert!(is_reduced_polarized(&s, &zero, false));
        assert!(!is_reduced_polarized(&s, &zero, true));
        let past = trace(&[el(&[0, 0], &[-2, 1])]);
        assert!(!is_reduced_polarized(&s, &past, false));
        // only the later point is constrained
        let two = trace(&[el(&[0, 0], &[-1, 0]), el(&[2, 0], &[1, 0])]);
        assert!(is_reduced_polarized(&s, &two, true));
    }

    #[test]
    fn single_shared_point() {
        let s = CausalSite::new(1);
        let u = [el(&[1, 0], &[1, 0])];
        let v = [el(&[1, 0], &[3, 1])];
        let r = check_sum_polarization(&s, &u, &v).unwrap();
        assert!(r.admissible && r.pass() && r.max_identity);
        assert_eq!((r.max_a.clone(), r.max_b.clone(), r.max_c.clone()), (vec![0], vec![0], vec![0]));
    }

    #[test]
    fn opposite_configuration_is_inadmissible() {
        let s = CausalSite::new(1);
        let v = [el(&[0, 0], &[1, 0]), el(&[1, 0], &[2, 1])];
        let u: Vec<_> =
            v.iter().map(|e| CotangentElement::new(e.x.clone(), e.xi.iter().map(|c| -c.clone()).collect())).collect();
        let r = check_sum_polarization(&s, &u, &v).unwrap();
        assert!(!r.admissible);
        assert!(!r.nonzero_sum);
    }

    #[test]
    fn maximal_point_of_one_factor() {
        // (2, 2) carries only v-covectors and is maximal in A and C but not in B
        let s = CausalSite::new(1);
        let u = [el(&[2, 1], &[3, -2]), el(&[0, -1], &[0, 0]), el(&[2, 2], &[0, 0])];
        let v = [el(&[2, 1], &[2, 2]), el(&[0, -1], &[1, -1]), el(&[2, 2], &[2, -2])];
        let r = check_sum_polarization(&s, &u, &v).unwrap();
        assert!(r.admissible && r.pass());
        assert!(!r.max_identity);
        assert!(r.sum_strictly_polarized);
        assert_eq!(r.max_a, vec![0, 2]);
        assert_eq!(r.max_b, vec![0]);
    }

    #[test]
    fn cancelling_maximal_point_of_u() {
        // u sums to zero at the maximal point (0, -2), where v vanishes
        let s = CausalSite::new(1);
        let u = [el(&[1, 0], &[1, 0]), el(&[0, -2], &[0, 2]), el(&[0, -2], &[0, -2]), el(&[1, 0], &[2, -1])];
        let v = [el(&[1, 0], &[0, 0]), el(&[0, -2], &[0, 0]), el(&[0, -2], &[0, 0]), el(&[1, 0], &[1, 0])];
        let r = check_sum_polarization(&s, &u, &v).unwrap();
        assert!(r.admissible && r.pass());
        assert!(r.sum_polarized && !r.sum_strictly_polarized && !r.u_strict);
    }

    #[test]
    fn diagonal_conormal_is_polarized() {
        let s = CausalSite::new(2);
        let a = [1, -1, 2];
        let conormal = [el(&a, &[3, 1, -2]), el(&a, &[-1, 0, 5]), el(&a, &[-2, -1, -3])];
        let t = trace(&conormal);
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].covector, q(&[0, 0, 0]));
        assert!(is_polarized(&s, &conormal, false));
    }

    #[test]
    fn base_point_mismatch() {
        let s = CausalSite::new(1);
        let r = check_sum_polarization(&s, &[el(&[0, 0], &[1, 0])], &[el(&[1, 0], &[1, 0])]);
        assert_eq!(r, Err(MicrolocalError::BasePoints));
    }

    #[test]
    fn pair_spec_roundtrip() {
        let json = r#"{"space_dim":1,"u":[{"x":[0,"1/2"],"xi":[1,0]}],"v":[{"x":[0,"1/2"],"xi":[2.5,1]}]}"#;
        let spec: PairSpec = serde_json::from_str(json).unwrap();
        let r = spec.check().unwrap();
        assert!(r.admissible && r.pass());
        let e = spec.u[0].parse().unwrap();
        assert_eq!(ElementSpec::from_element(&e).x[1], Num::Text("1/2".into()));
    }
}
