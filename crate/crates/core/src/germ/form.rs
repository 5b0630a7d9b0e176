use std::fmt;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::field::Field;
use crate::poly::Poly;

use super::GermError;

/// Integer linear form `sum a_j * l_j`, normalized so that the coefficient
/// gcd is 1 and the first nonzero coefficient is positive.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LinearForm {
    coeffs: Vec<i64>,
}

impl LinearForm {
    /// Normalizes and returns the scale `c` with `raw = c * normalized`.
    pub fn normalized(raw: &[i64]) -> Result<(LinearForm, i64), GermError> {
        let g = raw.iter().fold(0i64, |acc, &x| acc.gcd(&x));
        if g == 0 {
            return Err(GermError::ZeroForm);
        }
        let lead = raw.iter().find(|&&x| x != 0).copied().unwrap();
        let s = if lead < 0 { -g } else { g };
        Ok((LinearForm { coeffs: raw.iter().map(|&x| x / s).collect() }, s))
    }

    pub fn new(raw: &[i64]) -> Result<LinearForm, GermError> {
        Self::normalized(raw).map(|(f, _)| f)
    }

    /// Normalize a rational coefficient vector; returns the rational scale.
    pub fn from_rational(raw: &[BigRational]) -> Result<(LinearForm, BigRational), GermError> {
        if raw.iter().all(|x| x.is_zero()) {
            return Err(GermError::ZeroForm);
        }
        let l = raw.iter().fold(BigInt::from(1), |acc, x| acc.lcm(x.denom()));
        let lq = BigRational::from_integer(l);
        let ints: Vec<BigInt> = raw.iter().map(|x| (x * &lq).to_integer()).collect();
        let g = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
        let lead = ints.iter().find(|x| !x.is_zero()).unwrap();
        let g = if lead.is_negative() { -g } else { g };
        let coeffs = ints
            .iter()
            .map(|x| (x / &g).to_i64().ok_or(GermError::Overflow))
            .collect::<Result<Vec<_>, _>>()?;
        Ok((LinearForm { coeffs }, BigRational::from_integer(g) / lq))
    }

    pub fn unit(p: usize, i: usize) -> LinearForm {
        let mut c = vec![0; p];
        c[i] = 1;
        LinearForm { coeffs: c }
    }

    pub fn coeffs(&self) -> &[i64] {
        &self.coeffs
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn rational_coeffs(&self) -> Vec<BigRational> {
        self.coeffs.iter().map(|&x| BigRational::from_integer(x.into())).collect()
    }

    pub fn to_poly<F: Field>(&self) -> Poly<F> {
        Poly::linear_int(&self.coeffs)
    }

    pub fn eval<F: Field>(&self, x: &[F]) -> F {
        self.coeffs
            .iter()
            .zip(x)
            .fold(F::zero(), |acc, (&a, xi)| acc + F::from_i64(a) * xi.clone())
    }

    pub fn eval_c64(&self, x: &[Complex64]) -> Complex64 {
        self.coeffs.iter().zip(x).map(|(&a, xi)| xi * a as f64).sum()
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.coeffs.iter().enumerate().filter(|(_, &a)| a != 0).map(|(i, _)| i)
    }

    pub fn embed(&self, nvars: usize, map: &[usize]) -> LinearForm {
        let mut c = vec![0; nvars];
        for (i, &a) in self.coeffs.iter().enumerate() {
            c[map[i]] += a;
        }
        LinearForm { coeffs: c }
    }

    /// Standard inner product of coefficient vectors.
    pub fn q_dot(&self, o: &LinearForm) -> i64 {
        self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| a * b).sum()
    }

    pub fn l1_norm(&self) -> f64 {
        self.coeffs.iter().map(|a| a.unsigned_abs() as f64).sum()
    }
}

impl fmt::Display for LinearForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0 {
                continue;
            }
            let sign = if a < 0 { "-" } else if first { "" } else { "+" };
            let mag = a.unsigned_abs();
            if mag == 1 {
                write!(f, "{sign}l{}", i + 1)?;
            } else {
                write!(f, "{sign}{mag}*l{}", i + 1)?;
            }
            first = false;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::rat;

    #[test]
    fn normalization() {
        let (f, s) = LinearForm::normalized(&[-2, 4]).unwrap();
        assert_eq!(f.coeffs(), &[1, -2]);
        assert_eq!(s, -2);
        let (g, q) = LinearForm::from_rational(&[rat(1, 2), rat(1, 3)]).unwrap();
        assert_eq!(g.coeffs(), &[3, 2]);
        assert_eq!(q, rat(1, 6));
        assert!(LinearForm::new(&[0, 0]).is_err());
    }

    #[test]
    fn display() {
        assert_eq!(LinearForm::new(&[1, -1]).unwrap().to_string(), "l1-l2");
        assert_eq!(LinearForm::new(&[0, 3, 1]).unwrap().to_string(), "3*l2+l3");
    }
}
