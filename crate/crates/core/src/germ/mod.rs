//! Meromorphic germs with linear poles and the projection onto holomorphic germs.
//!
//! A germ is `h(l - k) / prod_i L_i(l - k)^{s_i}` where `h` is a polynomial
//! (a finite jet) and the `L_i` are integer linear forms through the center `k`.
//! [`project_pi`] splits a germ into a singular part, whose terms have numerators
//! depending only on directions orthogonal to their poles, and a holomorphic
//! remainder. The holomorphic remainder is the image of the projection.

pub mod corpus;
mod form;
mod parse;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{Field, GaussRat};
use crate::linalg;
use crate::poly::Poly;

pub use form::LinearForm;
pub use parse::{parse_germ, parse_germ_at, ParseError};

/// Default distance below which a pole hyperplane counts as hit.
pub const DEFAULT_POLE_GUARD: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GermError {
    #[error("linear form is identically zero")]
    ZeroForm,
    #[error("integer overflow while normalizing a linear form")]
    Overflow,
    #[error("dependent input: {rank} independent forms among {count}")]
    DependentInput { rank: usize, count: usize },
    #[error("on pole hyperplane {form} (|L| = {value:e})")]
    OnPole { form: LinearForm, value: f64 },
    #[error("variable count mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("germs have different centers")]
    CenterMismatch,
}

pub type Poles = BTreeMap<LinearForm, u32>;

#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
#[serde(bound(serialize = "F: Serialize", deserialize = "F: Deserialize<'de>"))]
pub struct MeroGerm<F: Field> {
    center: Vec<i64>,
    numerator: Poly<F>,
    #[serde(with = "pole_list")]
    poles: Poles,
}

mod pole_list {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(poles: &Poles, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(poles.iter())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Poles, D::Error> {
        let v: Vec<(LinearForm, u32)> = Deserialize::deserialize(d)?;
        Ok(v.into_iter().collect())
    }
}

impl<F: Field> MeroGerm<F> {
    /// Builds a germ in canonical form: zero powers dropped, pole factors that
    /// divide the numerator cancelled, zero numerator clears all poles.
    pub fn new(center: Vec<i64>, numerator: Poly<F>, poles: Poles) -> Result<Self, GermError> {
        let p = center.len();
        if numerator.nvars() != p {
            return Err(GermError::Dimension { expected: p, got: numerator.nvars() });
        }
        if let Some(f) = poles.keys().find(|f| f.dim() != p) {
            return Err(GermError::Dimension { expected: p, got: f.dim() });
        }
        let mut g = MeroGerm { center, numerator, poles };
        g.canonicalize();
        Ok(g)
    }

    pub fn holomorphic(center: Vec<i64>, numerator: Poly<F>) -> Self {
        Self::new(center, numerator, Poles::new()).expect("dimension-consistent holomorphic germ")
    }

    pub fn zero(center: Vec<i64>) -> Self {
        let p = center.len();
        Self::holomorphic(center, Poly::zero(p))
    }

    /// `1 / prod L^s` at the given center.
    pub fn simplicial(center: Vec<i64>, poles: Poles) -> Result<Self, GermError> {
        let p = center.len();
        Self::new(center, Poly::one(p), poles)
    }

    fn canonicalize(&mut self) {
        self.poles.retain(|_, s| *s > 0);
        if self.numerator.is_zero() {
            self.poles.clear();
            return;
        }
        let forms: Vec<LinearForm> = self.poles.keys().cloned().collect();
        for f in forms {
            loop {
                let s = self.poles[&f];
                if s == 0 {
                    break;
                }
                let (q, r) = self.numerator.div_linear(f.coeffs());
                if !r.is_zero() {
                    break;
                }
                self.numerator = q;
                self.poles.insert(f.clone(), s - 1);
            }
        }
        self.poles.retain(|_, s| *s > 0);
    }

    pub fn nvars(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &[i64] {
        &self.center
    }

    pub fn numerator(&self) -> &Poly<F> {
        &self.numerator
    }

    pub fn poles(&self) -> &Poles {
        &self.poles
    }

    pub fn is_holomorphic(&self) -> bool {
        self.poles.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.numerator.is_zero()
    }

    pub fn pole_order(&self) -> u32 {
        self.poles.values().sum()
    }

    /// `prod L_i^{s_i}` as a polynomial in the shifted variables.
    pub fn denominator(&self) -> Poly<F> {
        denominator_poly(&self.poles, self.nvars())
    }

    pub fn poles_independent(&self) -> bool {
        forms_independent(self.poles.keys())
    }

    /// Variable indices that actually occur in the numerator or in a pole form.
    pub fn variables(&self) -> BTreeSet<usize> {
        let mut s: BTreeSet<usize> = self.numerator.support_vars().into_iter().collect();
        for f in self.poles.keys() {
            s.extend(f.support());
        }
        s
    }

    pub fn scale(&self, c: &F) -> Self {
        MeroGerm::new(self.center.clone(), self.numerator.scale(c), self.poles.clone()).unwrap()
    }

    pub fn neg(&self) -> Self {
        self.scale(&-F::one())
    }

    pub fn add(&self, o: &Self) -> Result<Self, GermError> {
        if self.center != o.center {
            return Err(GermError::CenterMismatch);
        }
        let p = self.nvars();
        let mut common = self.poles.clone();
        for (f, &s) in &o.poles {
            let e = common.entry(f.clone()).or_insert(0);
            *e = (*e).max(s);
        }
        let lift = |g: &MeroGerm<F>| {
            let mut n = g.numerator.clone();
            for (f, &s) in &common {
                let have = g.poles.get(f).copied().unwrap_or(0);
                if s > have {
                    n = n.mul(&f.to_poly::<F>().pow(s - have));
                }
            }
            n
        };
        let num = lift(self).add(&lift(o));
        let _ = p;
        MeroGerm::new(self.center.clone(), num, common)
    }

    pub fn sub(&self, o: &Self) -> Result<Self, GermError> {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Self) -> Result<Self, GermError> {
        if self.center != o.center {
            return Err(GermError::CenterMismatch);
        }
        let mut poles = self.poles.clone();
        for (f, &s) in &o.poles {
            *poles.entry(f.clone()).or_insert(0) += s;
        }
        MeroGerm::new(self.center.clone(), self.numerator.mul(&o.numerator), poles)
    }

    /// Re-index into `nvars` variables; variable `i` of `self` becomes `map[i]`.
    pub fn embed(&self, center: Vec<i64>, map: &[usize]) -> Result<Self, GermError> {
        let n = center.len();
        for (i, &j) in map.iter().enumerate() {
            if center[j] != self.center[i] {
                return Err(GermError::CenterMismatch);
            }
        }
        let poles = self.poles.iter().map(|(f, &s)| (f.embed(n, map), s)).collect();
        MeroGerm::new(center, self.numerator.embed(n, map), poles)
    }

    /// Equality as rational functions (cross-multiplied numerators).
    pub fn same_function(&self, o: &Self) -> bool {
        self.center == o.center
            && self.numerator.mul(&o.denominator()) == o.numerator.mul(&self.denominator())
    }

    /// Exact evaluation at an absolute point `l` (shifted internally by the center).
    pub fn eval(&self, l: &[F]) -> Result<F, GermError> {
        let x = self.shifted(l)?;
        let mut den = F::one();
        for (f, &s) in &self.poles {
            let v = f.eval(&x);
            if v.is_zero() {
                return Err(GermError::OnPole { form: f.clone(), value: 0.0 });
            }
            for _ in 0..s {
                den = den * v.clone();
            }
        }
        Ok(self.numerator.eval(&x) / den)
    }

    pub fn eval_c64(&self, l: &[Complex64], guard: f64) -> Result<Complex64, GermError> {
        if l.len() != self.nvars() {
            return Err(GermError::Dimension { expected: self.nvars(), got: l.len() });
        }
        let x: Vec<Complex64> = l.iter().zip(&self.center).map(|(a, &c)| a - c as f64).collect();
        let mut den = Complex64::new(1.0, 0.0);
        for (f, &s) in &self.poles {
            let v = f.eval_c64(&x);
            if v.norm() <= guard {
                return Err(GermError::OnPole { form: f.clone(), value: v.norm() });
            }
            den *= v.powu(s);
        }
        Ok(self.numerator.eval_c64(&x) / den)
    }

    fn shifted(&self, l: &[F]) -> Result<Vec<F>, GermError> {
        if l.len() != self.nvars() {
            return Err(GermError::Dimension { expected: self.nvars(), got: l.len() });
        }
        Ok(l.iter().zip(&self.center).map(|(a, &c)| a.clone() - F::from_i64(c)).collect())
    }
}

impl MeroGerm<GaussRat> {
    pub fn to_c64(&self) -> MeroGerm<Complex64> {
        MeroGerm {
            center: self.center.clone(),
            numerator: self.numerator.to_c64(),
            poles: self.poles.clone(),
        }
    }
}

pub fn denominator_poly<F: Field>(poles: &Poles, p: usize) -> Poly<F> {
    poles.iter().fold(Poly::one(p), |acc, (f, &s)| acc.mul(&f.to_poly::<F>().pow(s)))
}

pub fn forms_independent<'a>(forms: impl IntoIterator<Item = &'a LinearForm>) -> bool {
    let m: linalg::QMatrix = forms.into_iter().map(|f| f.rational_coeffs()).collect();
    let count = m.len();
    count == 0 || linalg::rank(&m) == count
}

/// Variable-set independence: the occurring variable indices are disjoint.
pub fn independent<F: Field>(a: &MeroGerm<F>, b: &MeroGerm<F>) -> bool {
    a.variables().is_disjoint(&b.variables())
}

/// Basis of the orthogonal complement (standard inner product) of the span of
/// `forms`, obtained by Gram–Schmidt on the standard basis in index order and
/// rescaled to primitive integer forms.
pub fn orth_complement(forms: &[LinearForm], p: usize) -> Result<Vec<LinearForm>, GermError> {
    let rows: linalg::QMatrix = forms.iter().map(|f| f.rational_coeffs()).collect();
    let r = linalg::rank(&rows);
    if r < forms.len() {
        return Err(GermError::DependentInput { rank: r, count: forms.len() });
    }
    if let Some(f) = forms.iter().find(|f| f.dim() != p) {
        return Err(GermError::Dimension { expected: p, got: f.dim() });
    }
    linalg::orthogonal_complement(&rows, p)
        .iter()
        .map(|v| LinearForm::from_rational(v).map(|(f, _)| f))
        .collect()
}

/// Rewrite a germ as a sum of germs whose pole forms are linearly independent.
///
/// Uses `1 = -sum_{i != i0} (c_i / c_{i0}) L_i / L_{i0}` for a linear relation
/// `sum c_i L_i = 0`, pivoting on the form with the largest exponent (ties:
/// greatest form in canonical order). Terms with equal pole multisets are merged.
pub fn reduce_dependent<F: Field>(g: &MeroGerm<F>) -> Vec<MeroGerm<F>> {
    let p = g.nvars();
    let mut done: BTreeMap<Vec<(LinearForm, u32)>, Poly<F>> = BTreeMap::new();
    let mut work: Vec<(Poly<F>, Poles)> = vec![(g.numerator.clone(), g.poles.clone())];
    while let Some((num, poles)) = work.pop() {
        if num.is_zero() {
            continue;
        }
        let forms: Vec<LinearForm> = poles.keys().cloned().collect();
        let cols: linalg::QMatrix = (0..p)
            .map(|j| forms.iter().map(|f| BigRational::from_integer(f.coeffs()[j].into())).collect())
            .collect();
        let ns = linalg::null_space(&cols, forms.len());
        let Some(rel) = ns.first() else {
            let key: Vec<_> = poles.into_iter().collect();
            let e = done.entry(key).or_insert_with(|| Poly::zero(p));
            *e = e.add(&num);
            continue;
        };
        let support: Vec<usize> = (0..forms.len()).filter(|&i| !rel[i].is_zero()).collect();
        let pivot = *support
            .iter()
            .max_by(|&&a, &&b| (poles[&forms[a]], &forms[a]).cmp(&(poles[&forms[b]], &forms[b])))
            .unwrap();
        for &i in support.iter().filter(|&&i| i != pivot) {
            let c = -(&rel[i] / &rel[pivot]);
            let mut np = poles.clone();
            *np.get_mut(&forms[i]).unwrap() -= 1;
            *np.get_mut(&forms[pivot]).unwrap() += 1;
            np.retain(|_, s| *s > 0);
            work.push((num.scale(&F::from_rational(&c)), np));
        }
    }
    done.into_iter()
        .filter(|(_, n)| !n.is_zero())
        .map(|(k, n)| MeroGerm::new(g.center.clone(), n, k.into_iter().collect()).unwrap())
        .collect()
}

/// One singular summand `h(l) / prod L_j^{s_j}` with `h` depending only on
/// directions orthogonal to the `L_j`.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
#[serde(bound(serialize = "F: Serialize", deserialize = "F: Deserialize<'de>"))]
pub struct PolarTerm<F: Field> {
    pub numerator: Poly<F>,
    pub poles: Vec<(LinearForm, u32)>,
    /// Integer basis of the orthogonal complement of the pole span.
    pub complement: Vec<LinearForm>,
}

impl<F: Field> PolarTerm<F> {
    pub fn to_germ(&self, center: &[i64]) -> MeroGerm<F> {
        MeroGerm::new(center.to_vec(), self.numerator.clone(), self.poles.iter().cloned().collect())
            .expect("polar term dimensions")
    }

    /// Derivatives of the numerator along every pole direction vanish.
    pub fn is_orthogonal(&self) -> bool {
        self.poles
            .iter()
            .all(|(f, _)| self.numerator.directional_derivative(&f.rational_coeffs()).is_zero())
    }

    /// Same check with a tolerance relative to the numerator size.
    pub fn is_orthogonal_within(&self, tol: f64) -> bool {
        let scale = self.numerator.max_abs().max(1.0);
        self.poles.iter().all(|(f, _)| {
            self.numerator.directional_derivative(&f.rational_coeffs()).max_abs() <= tol * scale
        })
    }
}

#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
#[serde(bound(serialize = "F: Serialize", deserialize = "F: Deserialize<'de>"))]
pub struct Decomposition<F: Field> {
    pub center: Vec<i64>,
    pub singular: Vec<PolarTerm<F>>,
    pub holomorphic: Poly<F>,
}

impl<F: Field> Decomposition<F> {
    pub fn singular_germ(&self) -> MeroGerm<F> {
        self.singular
            .iter()
            .fold(MeroGerm::zero(self.center.clone()), |acc, t| acc.add(&t.to_germ(&self.center)).unwrap())
    }

    pub fn holomorphic_germ(&self) -> MeroGerm<F> {
        MeroGerm::holomorphic(self.center.clone(), self.holomorphic.clone())
    }

    pub fn reassemble(&self) -> MeroGerm<F> {
        self.singular_germ().add(&self.holomorphic_germ()).unwrap()
    }

    /// Value of the holomorphic part at the center.
    pub fn value_at_center(&self) -> F {
        self.holomorphic.constant_term()
    }

    pub fn eval_c64(&self, l: &[Complex64], guard: f64) -> Result<Complex64, GermError> {
        let mut s = self.holomorphic_germ().eval_c64(l, guard)?;
        for t in &self.singular {
            s += t.to_germ(&self.center).eval_c64(l, guard)?;
        }
        Ok(s)
    }

    pub fn eval(&self, l: &[F]) -> Result<F, GermError> {
        let mut s = self.holomorphic_germ().eval(l)?;
        for t in &self.singular {
            s = s + t.to_germ(&self.center).eval(l)?;
        }
        Ok(s)
    }
}

type PoleKey = Vec<(LinearForm, u32)>;

/// Split a germ into singular and holomorphic parts.
///
/// After [`reduce_dependent`], each germ `h / prod L^s` with independent poles
/// is rewritten in coordinates `(L_1..L_m, l_{m+1}..l_p)` where the `l` span the
/// orthogonal complement. A monomial `L^a l^b` with `a >= s` is holomorphic; with
/// `a_i < s_i` for every `i` it is a final singular term; otherwise the surviving
/// `L`-powers become numerator factors of a germ with fewer poles, which is
/// re-split in its own coordinates.
pub fn project_pi<F: Field>(g: &MeroGerm<F>) -> Result<Decomposition<F>, GermError> {
    let p = g.nvars();
    let mut work: BTreeMap<PoleKey, Poly<F>> = BTreeMap::new();
    for r in reduce_dependent(g) {
        let key: PoleKey = r.poles.iter().map(|(f, &s)| (f.clone(), s)).collect();
        let e = work.entry(key).or_insert_with(|| Poly::zero(p));
        *e = e.add(&r.numerator);
    }
    let mut finals: BTreeMap<PoleKey, Poly<F>> = BTreeMap::new();
    let mut holo = Poly::zero(p);

    while let Some(key) = work.keys().max_by_key(|k| k.len()).cloned() {
        let h = work.remove(&key).unwrap();
        if h.is_zero() {
            continue;
        }
        if key.is_empty() {
            holo = holo.add(&h);
            continue;
        }
        let m = key.len();
        let forms: Vec<LinearForm> = key.iter().map(|(f, _)| f.clone()).collect();
        let compl = orth_complement(&forms, p)?;
        let a: linalg::QMatrix = forms.iter().chain(&compl).map(|f| f.rational_coeffs()).collect();
        let a_inv = linalg::inverse(&a).expect("forms plus complement form a basis");
        let hy = h.linear_substitute(&a_inv, p);
        // y_k as polynomials in the shifted variables
        let ypoly: Vec<Poly<F>> = forms.iter().chain(&compl).map(|f| f.to_poly()).collect();
        let mut powers: Vec<Vec<Poly<F>>> = ypoly.iter().map(|y| vec![Poly::one(p), y.clone()]).collect();
        let mut power = |k: usize, e: u32| -> Poly<F> {
            let e = e as usize;
            while powers[k].len() <= e {
                let next = powers[k].last().unwrap().mul(&ypoly[k]);
                powers[k].push(next);
            }
            powers[k][e].clone()
        };
        for (e, c) in hy.terms() {
            let short: Vec<usize> = (0..m).filter(|&i| e[i] < key[i].1).collect();
            let mut num = Poly::constant(p, c.clone());
            for k in m..p {
                if e[k] > 0 {
                    num = num.mul(&power(k, e[k]));
                }
            }
            for i in (0..m).filter(|i| !short.contains(i)) {
                let extra = e[i] - key[i].1;
                if extra > 0 {
                    num = num.mul(&power(i, extra));
                }
            }
            let sub: PoleKey = short.iter().map(|&i| (forms[i].clone(), key[i].1 - e[i])).collect();
            let target = if short.len() == m {
                &mut finals
            } else {
                &mut work
            };
            let slot = target.entry(sub).or_insert_with(|| Poly::zero(p));
            *slot = slot.add(&num);
        }
    }

    let singular = finals
        .into_iter()
        .filter(|(_, n)| !n.is_zero())
        .map(|(poles, numerator)| {
            let forms: Vec<LinearForm> = poles.iter().map(|(f, _)| f.clone()).collect();
            let complement = orth_complement(&forms, p)?;
            Ok(PolarTerm { numerator, poles, complement })
        })
        .collect::<Result<Vec<_>, GermError>>()?;
    Ok(Decomposition { center: g.center.clone(), singular, holomorphic: holo })
}

/// `pi(g)` as a holomorphic polynomial in the shifted variables.
pub fn pi<F: Field>(g: &MeroGerm<F>) -> Result<Poly<F>, GermError> {
    project_pi(g).map(|d| d.holomorphic)
}

impl<F: Field + fmt::Display> fmt::Display for MeroGerm<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.poles.is_empty() {
            return write!(f, "{}", self.numerator);
        }
        let den: Vec<String> = self
            .poles
            .iter()
            .map(|(l, &s)| if s == 1 { format!("({l})") } else { format!("({l})^{s}") })
            .collect();
        write!(f, "({})/({})", self.numerator, den.join("*"))
    }
}

impl<F: Field + fmt::Display> fmt::Display for Decomposition<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for t in &self.singular {
            writeln!(f, "singular: {}", t.to_germ(&self.center))?;
        }
        write!(f, "holomorphic: {}", self.holomorphic)
    }
}
