//! Small dense linear algebra over `BigRational`.

use num_integer::Integer;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type QMatrix = Vec<Vec<BigRational>>;

/// Reduced row echelon form in place; returns the pivot columns.
pub fn rref(m: &mut QMatrix) -> Vec<usize> {
    let rows = m.len();
    if rows == 0 {
        return Vec::new();
    }
    let cols = m[0].len();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = BigRational::one() / &m[r][c];
        for v in m[r].iter_mut() {
            *v = &*v * &inv;
        }
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for j in 0..cols {
                    let d = &f * &m[r][j];
                    m[i][j] -= d;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank(m: &QMatrix) -> usize {
    let mut a = m.clone();
    rref(&mut a).len()
}

/// Basis of `{x : m x = 0}`; deterministic (free variables in index order).
pub fn null_space(m: &QMatrix, cols: usize) -> Vec<Vec<BigRational>> {
    let mut a = m.clone();
    let pivots = rref(&mut a);
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![BigRational::zero(); cols];
            v[f] = BigRational::one();
            for (row, &pc) in pivots.iter().enumerate() {
                v[pc] = -a[row][f].clone();
            }
            v
        })
        .collect()
}

pub fn inverse(m: &QMatrix) -> Option<QMatrix> {
    let n = m.len();
    let mut aug: QMatrix = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { BigRational::one() } else { BigRational::zero() }));
            r
        })
        .collect();
    let pivots = rref(&mut aug);
    if pivots.len() < n || pivots[n - 1] != n - 1 {
        return None;
    }
    Some(aug.into_iter().map(|r| r[n..].to_vec()).collect())
}

pub fn dot(a: &[BigRational], b: &[BigRational]) -> BigRational {
    a.iter().zip(b).fold(BigRational::zero(), |acc, (x, y)| acc + x * y)
}

/// Scale a rational vector to a primitive integer vector (gcd 1), keeping sign.
pub fn primitive_integer(v: &[BigRational]) -> Vec<BigInt> {
    let l = v.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let ints: Vec<BigInt> = v.iter().map(|x| (x * BigRational::from_integer(l.clone())).to_integer()).collect();
    let g = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if g.is_zero() {
        return ints;
    }
    ints.into_iter().map(|x| x / &g).collect()
}

/// Gram–Schmidt of the standard basis against `span(forms)`; the survivors span
/// the orthogonal complement for the standard inner product.
pub fn orthogonal_complement(forms: &[Vec<BigRational>], p: usize) -> Vec<Vec<BigRational>> {
    let mut basis: Vec<Vec<BigRational>> = Vec::new();
    for f in forms {
        let w = project_out(f, &basis);
        if w.iter().any(|x| !x.is_zero()) {
            basis.push(w);
        }
    }
    let m = basis.len();
    for i in 0..p {
        if basis.len() == p {
            break;
        }
        let mut e = vec![BigRational::zero(); p];
        e[i] = BigRational::one();
        let w = project_out(&e, &basis);
        if w.iter().any(|x| !x.is_zero()) {
            basis.push(w);
        }
    }
    basis.split_off(m)
}

fn project_out(v: &[BigRational], basis: &[Vec<BigRational>]) -> Vec<BigRational> {
    let mut w = v.to_vec();
    for b in basis {
        let c = dot(&w, b) / dot(b, b);
        for (wi, bi) in w.iter_mut().zip(b) {
            *wi -= &c * bi;
        }
    }
    w
}

pub fn is_positive(x: &BigRational) -> bool {
    x.is_positive()
}
