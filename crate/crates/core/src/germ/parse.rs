//! Germ-expression grammar.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := ('+' | '-') unary | power
//! power  := atom ('^' ['-'] integer)?
//! atom   := number | 'l' integer | 'i' | '(' expr ')'
//! number := digits ['.' digits]
//! ```
//!
//! Variables are `l1..lp`, `i` is the imaginary unit. Every divisor must be a
//! constant times a product of powers of homogeneous linear forms.

use num_bigint::BigInt;
use num_rational::BigRational;
use thiserror::Error;

use crate::field::{Field, GaussRat};
use crate::poly::Poly;

use super::{GermError, LinearForm, MeroGerm, Poles};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("parse error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("nonlinear pole at position {pos}: divisor is not a product of linear forms")]
    NonlinearPole { pos: usize },
    #[error("division by zero at position {pos}")]
    DivisionByZero { pos: usize },
    #[error("variable l{index} out of range 1..={p}")]
    UnknownVariable { index: usize, p: usize },
    #[error(transparent)]
    Germ(#[from] GermError),
}

pub fn parse_germ(text: &str, p: usize) -> Result<MeroGerm<GaussRat>, ParseError> {
    parse_germ_at(text, vec![0; p])
}

/// Parse an expression in the shifted variables `l - center`.
pub fn parse_germ_at(text: &str, center: Vec<i64>) -> Result<MeroGerm<GaussRat>, ParseError> {
    let p = center.len();
    let mut parser = Parser { src: text.as_bytes(), pos: 0, p };
    let v = parser.expr()?;
    parser.skip_ws();
    if parser.pos != parser.src.len() {
        return Err(parser.err("unexpected trailing input"));
    }
    let (num, den) = v.into_parts();
    Ok(MeroGerm::new(center, num, den)?)
}

type Q = GaussRat;

#[derive(Clone)]
struct Frac {
    num: Poly<Q>,
    den: Poles,
    /// `num = c * prod forms^s` when that factorization is known.
    factored: Option<(Q, Poles)>,
}

impl Frac {
    fn into_parts(self) -> (Poly<Q>, Poles) {
        (self.num, self.den)
    }

    fn constant(p: usize, c: Q) -> Frac {
        Frac { num: Poly::constant(p, c.clone()), den: Poles::new(), factored: Some((c, Poles::new())) }
    }

    fn from_poly(num: Poly<Q>) -> Frac {
        let factored = factor_simple(&num);
        Frac { num, den: Poles::new(), factored }
    }

    fn mul(self, o: Frac) -> Frac {
        let mut den = self.den;
        for (f, s) in o.den {
            *den.entry(f).or_insert(0) += s;
        }
        let factored = match (self.factored, o.factored) {
            (Some((c1, f1)), Some((c2, f2))) => {
                let mut f = f1;
                for (k, s) in f2 {
                    *f.entry(k).or_insert(0) += s;
                }
                Some((c1 * c2, f))
            }
            _ => None,
        };
        Frac { num: self.num.mul(&o.num), den, factored }
    }

    fn add(self, o: Frac) -> Frac {
        let p = self.num.nvars();
        let mut common = self.den.clone();
        for (f, &s) in &o.den {
            let e = common.entry(f.clone()).or_insert(0);
            *e = (*e).max(s);
        }
        let lift = |num: &Poly<Q>, den: &Poles| {
            common.iter().fold(num.clone(), |acc, (f, &s)| {
                let have = den.get(f).copied().unwrap_or(0);
                acc.mul(&f.to_poly::<Q>().pow(s - have))
            })
        };
        let num = lift(&self.num, &self.den).add(&lift(&o.num, &o.den));
        let _ = p;
        let factored = factor_simple(&num);
        Frac { num, den: common, factored }
    }

    fn neg(self) -> Frac {
        let factored = self.factored.map(|(c, f)| (-c, f));
        Frac { num: self.num.neg(), den: self.den, factored }
    }

    fn recip(self, pos: usize) -> Result<Frac, ParseError> {
        let (c, forms) = self.factored.ok_or(ParseError::NonlinearPole { pos })?;
        if c.is_zero() {
            return Err(ParseError::DivisionByZero { pos });
        }
        let p = self.num.nvars();
        let inv = Q::one() / c;
        let num = super::denominator_poly::<Q>(&self.den, p).scale(&inv);
        Ok(Frac { num, den: forms, factored: Some((inv, self.den)) })
    }

    fn pow(self, k: i64, pos: usize) -> Result<Frac, ParseError> {
        let p = self.num.nvars();
        let base = if k < 0 { self.recip(pos)? } else { self };
        let mut acc = Frac::constant(p, Q::one());
        for _ in 0..k.unsigned_abs() {
            acc = acc.mul(base.clone());
        }
        Ok(acc)
    }
}

/// Factor a constant or a homogeneous linear polynomial.
fn factor_simple(num: &Poly<Q>) -> Option<(Q, Poles)> {
    if num.is_constant() {
        return Some((num.constant_term(), Poles::new()));
    }
    if num.total_degree() != Some(1) || !num.constant_term().is_zero() {
        return None;
    }
    let p = num.nvars();
    let mut coeffs = Vec::with_capacity(p);
    for j in 0..p {
        let c = num.coeff(&Poly::<Q>::var(p, j).terms().next().unwrap().0.clone());
        if !c.is_real() {
            // complex multiples of a real form: factor out a common complex scale
            return factor_complex_linear(num);
        }
        coeffs.push(c.re);
    }
    let (form, scale) = LinearForm::from_rational(&coeffs).ok()?;
    let mut poles = Poles::new();
    poles.insert(form, 1);
    Some((Q::real(scale), poles))
}

fn factor_complex_linear(num: &Poly<Q>) -> Option<(Q, Poles)> {
    let p = num.nvars();
    let coeffs: Vec<Q> = (0..p)
        .map(|j| num.coeff(&Poly::<Q>::var(p, j).terms().next().unwrap().0.clone()))
        .collect();
    let lead = coeffs.iter().find(|c| !c.is_zero())?.clone();
    let mut real = Vec::with_capacity(p);
    for c in &coeffs {
        let r = c.clone() / lead.clone();
        if !r.is_real() {
            return None;
        }
        real.push(r.re);
    }
    let (form, scale) = LinearForm::from_rational(&real).ok()?;
    let mut poles = Poles::new();
    poles.insert(form, 1);
    Some((lead * Q::real(scale), poles))
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    p: usize,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> ParseError {
        ParseError::Syntax { pos: self.pos, msg: msg.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Frac, ParseError> {
        let mut acc = self.term()?;
        while let Some(c @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let rhs = self.term()?;
            acc = if c == b'+' { acc.add(rhs) } else { acc.add(rhs.neg()) };
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Frac, ParseError> {
        let mut acc = self.unary()?;
        while let Some(c @ (b'*' | b'/')) = self.peek() {
            self.pos += 1;
            let at = self.pos;
            let rhs = self.unary()?;
            acc = if c == b'*' { acc.mul(rhs) } else { acc.mul(rhs.recip(at)?) };
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Frac, ParseError> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(self.unary()?.neg())
            }
            Some(b'+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Frac, ParseError> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let at = self.pos;
            let neg = if self.peek() == Some(b'-') {
                self.pos += 1;
                true
            } else {
                false
            };
            self.skip_ws();
            let k = self.integer()? as i64;
            return base.pow(if neg { -k } else { k }, at);
        }
        Ok(base)
    }

    fn integer(&mut self) -> Result<usize, ParseError> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected integer"));
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .unwrap()
            .parse()
            .map_err(|_| ParseError::Syntax { pos: start, msg: "integer too large".into() })
    }

    fn atom(&mut self) -> Result<Frac, ParseError> {
        let p = self.p;
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let v = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.err("expected `)`"));
                }
                self.pos += 1;
                Ok(v)
            }
            Some(b'l') => {
                self.pos += 1;
                let idx = self.integer()?;
                if idx == 0 || idx > p {
                    return Err(ParseError::UnknownVariable { index: idx, p });
                }
                Ok(Frac::from_poly(Poly::var(p, idx - 1)))
            }
            Some(b'i') => {
                self.pos += 1;
                Ok(Frac::constant(p, Q::i()))
            }
            Some(c) if c.is_ascii_digit() => {
                let start = self.pos;
                let whole = self.integer()?;
                let mut value = BigRational::from_integer(BigInt::from(whole));
                if self.src.get(self.pos) == Some(&b'.') {
                    self.pos += 1;
                    let fstart = self.pos;
                    let _ = self.integer();
                    let digits = &self.src[fstart..self.pos];
                    if !digits.is_empty() {
                        let frac: BigInt = std::str::from_utf8(digits).unwrap().parse().unwrap();
                        let scale = BigInt::from(10u32).pow(digits.len() as u32);
                        value += BigRational::new(frac, scale);
                    }
                }
                let _ = start;
                Ok(Frac::constant(p, Q::real(value)))
            }
            Some(_) => Err(self.err("unexpected character")),
            None => Err(self.err("unexpected end of input")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::rat;

    fn form(c: &[i64]) -> LinearForm {
        LinearForm::new(c).unwrap()
    }

    #[test]
    fn simple_pole() {
        let g = parse_germ("1/(l1)", 2).unwrap();
        assert_eq!(g.poles().iter().collect::<Vec<_>>(), vec![(&form(&[1, 0]), &1)]);
        assert_eq!(g.numerator(), &Poly::one(2));
    }

    #[test]
    fn double_pole_numerator_kept() {
        let g = parse_germ("(l1+l2)/(l1*l1)", 2).unwrap();
        assert_eq!(g.poles()[&form(&[1, 0])], 2);
        assert_eq!(g.numerator(), &Poly::linear_int(&[1, 1]));
    }

    #[test]
    fn two_forms() {
        let g = parse_germ("1/(l1*(l1+l2))", 2).unwrap();
        assert_eq!(g.poles().len(), 2);
        assert!(g.poles().values().all(|&s| s == 1));
    }

    #[test]
    fn negative_and_scaled_forms_normalize() {
        // 1/(-2 l1) = (-1/2) / l1
        let g = parse_germ("1/(-2*l1)", 1).unwrap();
        assert_eq!(g.numerator(), &Poly::constant(1, GaussRat::frac(-1, 2)));
        let h = parse_germ("l1^-2", 1).unwrap();
        assert_eq!(h.poles()[&form(&[1])], 2);
    }

    #[test]
    fn errors() {
        assert!(matches!(parse_germ("1/(l1*l1+l2)", 2), Err(ParseError::NonlinearPole { .. })));
        assert!(matches!(parse_germ("1/(l1+1)", 1), Err(ParseError::NonlinearPole { .. })));
        assert!(matches!(parse_germ("1/(l1", 1), Err(ParseError::Syntax { pos: 5, .. })));
        assert!(matches!(parse_germ("l3", 2), Err(ParseError::UnknownVariable { .. })));
        assert!(matches!(parse_germ("1/0", 1), Err(ParseError::DivisionByZero { .. })));
    }

    #[test]
    fn decimals_and_imaginary_unit() {
        let g = parse_germ("0.25*i", 1).unwrap();
        assert_eq!(g.numerator().constant_term(), GaussRat::new(rat(0, 1), rat(1, 4)));
    }

    #[test]
    fn nested_division_moves_forms_up() {
        // 1/(1/l1) = l1
        let g = parse_germ("1/(1/l1)", 1).unwrap();
        assert!(g.is_holomorphic());
        assert_eq!(g.numerator(), &Poly::var(1, 0));
    }

    #[test]
    fn display_roundtrip() {
        for s in ["1/(l1*l2*(l1+l2))", "(l1^2-3/2*l2)/((l1-l2)^3)", "l1+i*l2", "(1+2*i)/(l2)"] {
            let g = parse_germ(s, 2).unwrap();
            let again = parse_germ(&g.to_string(), 2).unwrap();
            assert_eq!(g, again, "{s} -> {g}");
        }
    }
}
