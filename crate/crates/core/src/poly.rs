//! Sparse multivariate polynomials over a [`Field`].

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::field::{Field, GaussRat};

pub type Exponent = Vec<u32>;

#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
#[serde(bound(serialize = "F: Serialize", deserialize = "F: Deserialize<'de>"))]
pub struct Poly<F: Field> {
    nvars: usize,
    #[serde(with = "term_list")]
    terms: BTreeMap<Exponent, F>,
}

mod term_list {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<F: Serialize, S: Serializer>(
        terms: &BTreeMap<Exponent, F>,
        s: S,
    ) -> Result<S::Ok, S::Error> {
        s.collect_seq(terms.iter())
    }

    pub fn deserialize<'de, F: Deserialize<'de>, D: Deserializer<'de>>(
        d: D,
    ) -> Result<BTreeMap<Exponent, F>, D::Error> {
        let v: Vec<(Exponent, F)> = Deserialize::deserialize(d)?;
        Ok(v.into_iter().collect())
    }
}

impl<F: Field> Poly<F> {
    pub fn zero(nvars: usize) -> Self {
        Poly { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: F) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(vec![0; nvars], c);
        p
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, F::one())
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        let mut p = Self::zero(nvars);
        p.add_term(e, F::one());
        p
    }

    /// `sum_j coeffs[j] * x_j`
    pub fn linear(coeffs: &[F]) -> Self {
        let n = coeffs.len();
        let mut p = Self::zero(n);
        for (j, c) in coeffs.iter().enumerate() {
            let mut e = vec![0; n];
            e[j] = 1;
            p.add_term(e, c.clone());
        }
        p
    }

    pub fn linear_int(coeffs: &[i64]) -> Self {
        let c: Vec<F> = coeffs.iter().map(|&a| F::from_i64(a)).collect();
        Self::linear(&c)
    }

    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (Exponent, F)>) -> Self {
        let mut p = Self::zero(nvars);
        for (e, c) in terms {
            p.add_term(e, c);
        }
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponent, &F)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, e: &[u32]) -> F {
        self.terms.get(e).cloned().unwrap_or_else(F::zero)
    }

    pub fn add_term(&mut self, e: Exponent, c: F) {
        debug_assert_eq!(e.len(), self.nvars);
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&e) {
            Some(v) => {
                let s = v.clone() + c;
                if s.is_zero() {
                    self.terms.remove(&e);
                } else {
                    *v = s;
                }
            }
            None => {
                self.terms.insert(e, c);
            }
        }
    }

    pub fn total_degree(&self) -> Option<u32> {
        self.terms.keys().map(|e| e.iter().sum()).max()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|e| e.iter().all(|&x| x == 0))
    }

    pub fn constant_term(&self) -> F {
        self.coeff(&vec![0; self.nvars])
    }

    /// Indices of variables that occur with nonzero exponent.
    pub fn support_vars(&self) -> Vec<usize> {
        (0..self.nvars).filter(|&i| self.terms.keys().any(|e| e[i] > 0)).collect()
    }

    pub fn scale(&self, c: &F) -> Self {
        let mut p = Self::zero(self.nvars);
        for (e, v) in &self.terms {
            p.add_term(e.clone(), v.clone() * c.clone());
        }
        p
    }

    pub fn add(&self, o: &Self) -> Self {
        assert_eq!(self.nvars, o.nvars);
        let mut p = self.clone();
        for (e, v) in &o.terms {
            p.add_term(e.clone(), v.clone());
        }
        p
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Self {
        Poly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(e, v)| (e.clone(), -v.clone())).collect(),
        }
    }

    pub fn mul(&self, o: &Self) -> Self {
        assert_eq!(self.nvars, o.nvars);
        let mut p = Self::zero(self.nvars);
        for (e1, v1) in &self.terms {
            for (e2, v2) in &o.terms {
                let e: Exponent = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                p.add_term(e, v1.clone() * v2.clone());
            }
        }
        p
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::one(self.nvars);
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }

    /// Re-index into `nvars` variables; variable `i` becomes `map[i]`.
    pub fn embed(&self, nvars: usize, map: &[usize]) -> Self {
        let mut p = Self::zero(nvars);
        for (e, v) in &self.terms {
            let mut ne = vec![0; nvars];
            for (i, &x) in e.iter().enumerate() {
                ne[map[i]] += x;
            }
            p.add_term(ne, v.clone());
        }
        p
    }

    pub fn eval(&self, x: &[F]) -> F {
        assert_eq!(x.len(), self.nvars);
        let mut s = F::zero();
        for (e, v) in &self.terms {
            let mut t = v.clone();
            for (xi, &k) in x.iter().zip(e) {
                for _ in 0..k {
                    t = t * xi.clone();
                }
            }
            s = s + t;
        }
        s
    }

    pub fn eval_c64(&self, x: &[Complex64]) -> Complex64 {
        assert_eq!(x.len(), self.nvars);
        let mut s = Complex64::new(0.0, 0.0);
        for (e, v) in &self.terms {
            let mut t = v.to_c64();
            for (xi, &k) in x.iter().zip(e) {
                if k > 0 {
                    t *= xi.powu(k);
                }
            }
            s += t;
        }
        s
    }

    pub fn derivative(&self, i: usize) -> Self {
        let mut p = Self::zero(self.nvars);
        for (e, v) in &self.terms {
            if e[i] > 0 {
                let mut ne = e.clone();
                ne[i] -= 1;
                p.add_term(ne, v.clone() * F::from_i64(e[i] as i64));
            }
        }
        p
    }

    /// Derivative along the direction `dir` (sum_i dir_i d/dx_i).
    pub fn directional_derivative(&self, dir: &[BigRational]) -> Self {
        let mut p = Self::zero(self.nvars);
        for (i, d) in dir.iter().enumerate() {
            if !d.is_zero() {
                p = p.add(&self.derivative(i).scale(&F::from_rational(d)));
            }
        }
        p
    }

    /// Substitute `x_j = sum_k t[j][k] y_k` (t has `nvars` rows and `m` columns).
    pub fn linear_substitute(&self, t: &[Vec<BigRational>], m: usize) -> Self {
        let images: Vec<Poly<F>> = t
            .iter()
            .map(|row| {
                let c: Vec<F> = row.iter().map(F::from_rational).collect();
                Poly::linear(&c)
            })
            .collect();
        let _ = m;
        self.substitute(&images)
    }

    /// Substitute each variable by a polynomial (all images share a variable count).
    pub fn substitute(&self, images: &[Poly<F>]) -> Self {
        assert_eq!(images.len(), self.nvars);
        let m = images.first().map(|p| p.nvars).unwrap_or(0);
        let mut cache: Vec<Vec<Poly<F>>> = images.iter().map(|p| vec![Poly::one(p.nvars), p.clone()]).collect();
        let mut out = Poly::zero(m);
        for (e, v) in &self.terms {
            let mut t = Poly::constant(m, v.clone());
            for (j, &k) in e.iter().enumerate() {
                let k = k as usize;
                while cache[j].len() <= k {
                    let next = cache[j].last().unwrap().mul(&images[j]);
                    cache[j].push(next);
                }
                if k > 0 {
                    t = t.mul(&cache[j][k]);
                }
            }
            out = out.add(&t);
        }
        out
    }

    /// Divide by the linear form `sum a_j x_j`; returns `(quotient, remainder)`
    /// where the remainder is free of the first variable with `a_j != 0`.
    pub fn div_linear(&self, a: &[i64]) -> (Self, Self) {
        let j = a.iter().position(|&x| x != 0).expect("zero linear form");
        let lin = Poly::<F>::linear_int(a);
        let lead = F::from_i64(a[j]);
        let mut rem = self.clone();
        let mut quo = Poly::zero(self.nvars);
        loop {
            let Some((e, c)) = rem
                .terms
                .iter()
                .filter(|(e, _)| e[j] > 0)
                .max_by_key(|(e, _)| e[j])
                .map(|(e, c)| (e.clone(), c.clone()))
            else {
                break;
            };
            let mut qe = e.clone();
            qe[j] -= 1;
            let qc = c / lead.clone();
            let qt = Poly::from_terms(self.nvars, [(qe, qc)]);
            rem = rem.sub(&qt.mul(&lin));
            quo = quo.add(&qt);
        }
        (quo, rem)
    }

    pub fn map_coeffs<G: Field>(&self, f: impl Fn(&F) -> G) -> Poly<G> {
        Poly::from_terms(self.nvars, self.terms.iter().map(|(e, v)| (e.clone(), f(v))))
    }

    /// Largest coefficient magnitude (as complex floats).
    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(|v| v.to_c64().norm()).fold(0.0, f64::max)
    }

    /// Homogeneous component of total degree `d`.
    pub fn homogeneous_part(&self, d: u32) -> Self {
        Poly::from_terms(
            self.nvars,
            self.terms
                .iter()
                .filter(|(e, _)| e.iter().sum::<u32>() == d)
                .map(|(e, v)| (e.clone(), v.clone())),
        )
    }

    /// Drop terms of total degree above `d`.
    pub fn truncate(&self, d: u32) -> Self {
        Poly::from_terms(
            self.nvars,
            self.terms
                .iter()
                .filter(|(e, _)| e.iter().sum::<u32>() <= d)
                .map(|(e, v)| (e.clone(), v.clone())),
        )
    }
}

impl Poly<GaussRat> {
    pub fn to_c64(&self) -> Poly<Complex64> {
        self.map_coeffs(|c| c.to_c64())
    }
}

pub fn to_rational_vec(a: &[i64]) -> Vec<BigRational> {
    a.iter().map(|&x| BigRational::from_integer(x.into())).collect()
}

/// Text form over variables `l1..lp`, parseable by the germ grammar.
impl<F: Field + fmt::Display> fmt::Display for Poly<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, v) in self.terms.iter().rev() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let vars: Vec<String> = e
                .iter()
                .enumerate()
                .filter(|(_, &k)| k > 0)
                .map(|(i, &k)| if k == 1 { format!("l{}", i + 1) } else { format!("l{}^{}", i + 1, k) })
                .collect();
            if vars.is_empty() {
                write!(f, "{v}")?;
            } else {
                write!(f, "{v}*{}", vars.join("*"))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::rat;

    type P = Poly<GaussRat>;

    #[test]
    fn div_linear_exact() {
        // (l1 + l2)(l1 - 2 l2) / (l1 + l2)
        let a = P::linear_int(&[1, 1]);
        let b = P::linear_int(&[1, -2]);
        let (q, r) = a.mul(&b).div_linear(&[1, 1]);
        assert!(r.is_zero());
        assert_eq!(q, b);
        let (_, r) = b.add(&P::one(2)).div_linear(&[1, 1]);
        assert!(!r.is_zero());
    }

    #[test]
    fn substitute_linear_change() {
        // x = y1 + y2, y = y1 - y2 ; x*y = y1^2 - y2^2
        let p = P::var(2, 0).mul(&P::var(2, 1));
        let t = vec![vec![rat(1, 1), rat(1, 1)], vec![rat(1, 1), rat(-1, 1)]];
        let s = p.linear_substitute(&t, 2);
        let expect = P::var(2, 0).pow(2).sub(&P::var(2, 1).pow(2));
        assert_eq!(s, expect);
    }

    #[test]
    fn cancellation_removes_terms() {
        let a = P::linear_int(&[1, 0]);
        assert!(a.sub(&a).is_zero());
    }
}
