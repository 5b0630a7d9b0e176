//! Conic subsets of the cotangent bundle described by a base stratum and a
//! fiber rule, and the Iagolnitzer sum of two such cells.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{MicrolocalError, FLOAT_GUARD};
use crate::dist::CatalogEntry;

fn near_zero(x: f64) -> bool {
    x.abs() <= FLOAT_GUARD
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

fn unit(dim: usize, i: usize) -> Vec<f64> {
    let mut e = vec![0.0; dim];
    e[i] = 1.0;
    e
}

fn basis_lines(dim: usize) -> Vec<Vec<f64>> {
    (0..dim).map(|i| unit(dim, i)).collect()
}

/// Lines as pairs of opposite rays.
fn both_ways(lines: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    lines.into_iter().flat_map(|l| [l.iter().map(|c| -c).collect(), l]).collect()
}

/// Rank and, when the nullity is one, a null vector of the matrix whose
/// columns are `cols`.
fn rank_and_kernel(cols: &[&Vec<f64>]) -> (usize, Option<Vec<f64>>) {
    let (rows, k) = (cols[0].len(), cols.len());
    let mut m: Vec<Vec<f64>> = (0..rows).map(|r| cols.iter().map(|c| c[r]).collect()).collect();
    let scale = cols.iter().map(|c| norm(c)).fold(0.0, f64::max).max(1.0);
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..k {
        let Some(p) = (row..rows).max_by(|&a, &b| m[a][col].abs().partial_cmp(&m[b][col].abs()).unwrap()) else {
            break;
        };
        if m[p][col].abs() <= 1e-10 * scale {
            continue;
        }
        m.swap(row, p);
        let piv = m[row][col];
        for c in m[row].iter_mut() {
            *c /= piv;
        }
        for r in 0..rows {
            if r != row && m[r][col] != 0.0 {
                let f = m[r][col];
                for c in 0..k {
                    m[r][c] -= f * m[row][c];
                }
            }
        }
        pivots.push(col);
        row += 1;
    }
    let rank = pivots.len();
    if k - rank != 1 {
        return (rank, None);
    }
    let free = (0..k).find(|c| !pivots.contains(c)).unwrap();
    let mut v = vec![0.0; k];
    v[free] = 1.0;
    for (r, &p) in pivots.iter().enumerate() {
        v[p] = -m[r][free];
    }
    (rank, Some(v))
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Membership of a nonzero `xi` in the closed cone spanned by `rays`, by
/// Caratheodory: some linearly independent subset carries a nonnegative
/// representation.
pub(crate) fn cone_contains(rays: &[Vec<f64>], xi: &[f64]) -> bool {
    let nx = norm(xi);
    if nx == 0.0 {
        return false;
    }
    let dim = xi.len();
    for k in 1..=dim.min(rays.len()) {
        for s in subsets(rays.len(), k) {
            let mut cols: Vec<&Vec<f64>> = s.iter().map(|&i| &rays[i]).collect();
            let (rank, _) = rank_and_kernel(&cols);
            if rank < k {
                continue;
            }
            let target = xi.to_vec();
            cols.push(&target);
            let (r2, kernel) = rank_and_kernel(&cols);
            if r2 != k {
                continue;
            }
            let v = kernel.expect("nullity one");
            // v[..k] . rays + v[k] xi = 0, with v[k] != 0 since the rays are independent
            let c: Vec<f64> = v[..k].iter().map(|a| -a / v[k]).collect();
            if c.iter().all(|&a| a >= -1e-12) {
                return true;
            }
        }
    }
    false
}

/// Whether the cones spanned by `a` and `b` meet in a nonzero covector of
/// `a` lying in `-b`: a positive circuit of `a ∪ b` using both families.
fn cones_oppose(a: &[Vec<f64>], b: &[Vec<f64>]) -> bool {
    let all: Vec<(bool, &Vec<f64>)> = a.iter().map(|r| (true, r)).chain(b.iter().map(|r| (false, r))).collect();
    if a.is_empty() || b.is_empty() {
        return false;
    }
    let dim = a[0].len();
    for k in 2..=(dim + 1).min(all.len()) {
        for s in subsets(all.len(), k) {
            if s.iter().all(|&i| all[i].0) || s.iter().all(|&i| !all[i].0) {
                continue;
            }
            let cols: Vec<&Vec<f64>> = s.iter().map(|&i| all[i].1).collect();
            let (_, Some(v)) = rank_and_kernel(&cols) else { continue };
            let m = v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
            if v.iter().all(|&x| x > 1e-10 * m) || v.iter().all(|&x| x < -1e-10 * m) {
                return true;
            }
        }
    }
    false
}

/// Base stratum of a cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Base {
    Full { dim: usize },
    Origin { dim: usize },
    /// `x_1 = ... = x_blocks` in `(R^block_dim)^blocks`.
    Diagonal { blocks: usize, block_dim: usize },
    /// `x_axis = 0`.
    Hyperplane { dim: usize, axis: usize },
    /// `f = 0`.
    ZeroSet { entry: CatalogEntry },
    /// `t = f(x)` in `R x R^n`, with `t` the first coordinate.
    Graph { entry: CatalogEntry },
}

impl Base {
    pub fn dim(&self) -> usize {
        match self {
            Base::Full { dim } | Base::Origin { dim } | Base::Hyperplane { dim, .. } => *dim,
            Base::Diagonal { blocks, block_dim } => blocks * block_dim,
            Base::ZeroSet { entry } => entry.dim(),
            Base::Graph { entry } => entry.dim() + 1,
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Base::Full { .. } => true,
            Base::Origin { .. } => x.iter().all(|&c| near_zero(c)),
            Base::Diagonal { blocks, block_dim } => {
                (1..*blocks).all(|b| (0..*block_dim).all(|i| near_zero(x[b * block_dim + i] - x[i])))
            }
            Base::Hyperplane { axis, .. } => near_zero(x[*axis]),
            Base::ZeroSet { entry } => near_zero(entry.value(x)),
            Base::Graph { entry } => near_zero(x[0] - entry.value(&x[1..])),
        }
    }

    /// Spanning lines of the conormal space at a base point. At singular
    /// points of a zero set every direction is conormal.
    fn conormal_lines(&self, x: &[f64]) -> Vec<Vec<f64>> {
        match self {
            Base::Full { .. } => Vec::new(),
            Base::Origin { dim } => basis_lines(*dim),
            Base::Diagonal { blocks, block_dim } => (1..*blocks)
                .flat_map(|b| {
                    (0..*block_dim).map(move |i| {
                        let mut v = vec![0.0; blocks * block_dim];
                        v[b * block_dim + i] = 1.0;
                        v[i] = -1.0;
                        v
                    })
                })
                .collect(),
            Base::Hyperplane { dim, axis } => vec![unit(*dim, *axis)],
            Base::ZeroSet { entry } => {
                let g = entry.gradient(x);
                if norm(&g) <= FLOAT_GUARD {
                    basis_lines(entry.dim())
                } else {
                    vec![g]
                }
            }
            Base::Graph { entry } => {
                let mut v = vec![1.0];
                v.extend(entry.gradient(&x[1..]).into_iter().map(|c| -c));
                vec![v]
            }
        }
    }

    /// Whether conormal spaces do not depend on the base point.
    fn constant_conormal(&self) -> bool {
        matches!(self, Base::Full { .. } | Base::Origin { .. } | Base::Diagonal { .. } | Base::Hyperplane { .. })
    }

    /// A base point within about `r` of `x` (which should lie on or near the base).
    fn sample_near(&self, x: &[f64], r: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let mut jitter = |v: &[f64]| -> Vec<f64> { v.iter().map(|c| c + r * rng.gen_range(-1.0..1.0)).collect() };
        match self {
            Base::Full { .. } => jitter(x),
            Base::Origin { dim } => vec![0.0; *dim],
            Base::Diagonal { blocks, block_dim } => {
                let head = jitter(&x[..*block_dim]);
                (0..*blocks).flat_map(|_| head.clone()).collect()
            }
            Base::Hyperplane { axis, .. } => {
                let mut y = jitter(x);
                y[*axis] = 0.0;
                y
            }
            Base::ZeroSet { entry } => {
                let mut y = jitter(x);
                // Newton steps along the gradient back onto f = 0
                for _ in 0..30 {
                    let (f, g) = (entry.value(&y), entry.gradient(&y));
                    let g2: f64 = g.iter().map(|c| c * c).sum();
                    if g2 == 0.0 || f.abs() < 1e-15 {
                        break;
                    }
                    for (yi, gi) in y.iter_mut().zip(&g) {
                        *yi -= f * gi / g2;
                    }
                }
                y
            }
            Base::Graph { entry } => {
                let y = jitter(&x[1..]);
                let mut p = vec![entry.value(&y)];
                p.extend(y);
                p
            }
        }
    }
}

/// Fiber rule over a base.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Fiber {
    /// Every nonzero covector.
    All,
    /// Conormal of the base.
    Conormal,
    /// Closed cone spanned by fixed rays.
    Rays { rays: Vec<Vec<f64>> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConeCell {
    Empty { dim: usize },
    Polyhedral { base: Base, fiber: Fiber },
    /// Limit set of positively rescaled gradients of a catalog function.
    Lambda { entry: CatalogEntry },
    /// `(c1 + c2) ∪ c1 ∪ c2` for fiberwise transverse polyhedral cells.
    TransverseSum { left: Box<ConeCell>, right: Box<ConeCell> },
    /// Iagolnitzer sum of the boundary-value cell `{t = 0, dt > 0}` with the
    /// conormal of the graph `{t = f(x)}`.
    GraphSum { entry: CatalogEntry },
}

impl ConeCell {
    /// The cell `{t = 0; tau > 0}` carrying the singularities of `(t + i0)^s`.
    pub fn boundary_value(dim: usize) -> ConeCell {
        ConeCell::Polyhedral { base: Base::Hyperplane { dim, axis: 0 }, fiber: Fiber::Rays { rays: vec![unit(dim, 0)] } }
    }

    /// The conormal of the graph `{t = f(x)}`, singular support of `delta(t - f)`.
    pub fn graph_conormal(entry: CatalogEntry) -> ConeCell {
        ConeCell::Polyhedral { base: Base::Graph { entry }, fiber: Fiber::Conormal }
    }

    pub fn dim(&self) -> usize {
        match self {
            ConeCell::Empty { dim } => *dim,
            ConeCell::Polyhedral { base, .. } => base.dim(),
            ConeCell::Lambda { entry } => entry.dim(),
            ConeCell::TransverseSum { left, .. } => left.dim(),
            ConeCell::GraphSum { entry } => entry.dim() + 1,
        }
    }

    /// Spanning rays of the fiber at `x`, or `None` off the base.
    fn rays_at(&self, x: &[f64]) -> Option<Vec<Vec<f64>>> {
        match self {
            ConeCell::Empty { .. } => None,
            ConeCell::Polyhedral { base, fiber } => {
                if !base.contains(x) {
                    return None;
                }
                Some(match fiber {
                    Fiber::All => both_ways(basis_lines(base.dim())),
                    Fiber::Conormal => both_ways(base.conormal_lines(x)),
                    Fiber::Rays { rays } => rays.clone(),
                })
            }
            _ => None,
        }
    }

    /// Whether the fiber is the same cone at every base point.
    fn constant_fiber(&self) -> bool {
        match self {
            ConeCell::Polyhedral { base, fiber } => !matches!(fiber, Fiber::Conormal) || base.constant_conormal(),
            _ => false,
        }
    }

    pub fn contains(&self, x: &[f64], xi: &[f64]) -> Result<bool, MicrolocalError> {
        if x.len() != self.dim() || xi.len() != self.dim() {
            return Err(MicrolocalError::Dimension { expected: self.dim(), got: x.len().max(xi.len()) });
        }
        if norm(xi) <= FLOAT_GUARD {
            return Ok(false);
        }
        Ok(match self {
            ConeCell::Empty { .. } => false,
            ConeCell::Polyhedral { .. } => self.rays_at(x).is_some_and(|r| cone_contains(&r, xi)),
            ConeCell::Lambda { entry } => lambda_membership(entry, x, xi)?,
            ConeCell::TransverseSum { left, right } => {
                let mut rays = left.rays_at(x).unwrap_or_default();
                rays.extend(right.rays_at(x).unwrap_or_default());
                cone_contains(&rays, xi)
            }
            ConeCell::GraphSum { entry } => graph_sum_contains(entry, x, xi)?,
        })
    }
}

/// Exact membership in `{t = 0; dt > 0} +^ N*{t = f}` on `R x R^n`.
fn graph_sum_contains(entry: &CatalogEntry, x: &[f64], xi: &[f64]) -> Result<bool, MicrolocalError> {
    let (t, y) = (x[0], &x[1..]);
    let (tau, eta) = (xi[0], &xi[1..]);
    let eta_zero = norm(eta) <= FLOAT_GUARD;
    if near_zero(t) && eta_zero && tau > FLOAT_GUARD {
        return Ok(true);
    }
    let df = entry.gradient(y);
    if near_zero(t - entry.value(y)) {
        // (tau, eta) = s (1, -df)
        let s = tau;
        if eta.iter().zip(&df).all(|(e, d)| near_zero(e + s * d)) {
            return Ok(true);
        }
    }
    if !(near_zero(t) && near_zero(entry.value(y))) {
        return Ok(false);
    }
    // limits of (tau1 + s, -s df(y_n)) with tau1 > 0
    if norm(&df) > FLOAT_GUARD {
        let d2: f64 = df.iter().map(|c| c * c).sum();
        let s = -eta.iter().zip(&df).map(|(e, d)| e * d).sum::<f64>() / d2;
        let parallel = eta.iter().zip(&df).all(|(e, d)| near_zero(e + s * d));
        Ok(parallel && tau >= s - FLOAT_GUARD)
    } else if eta_zero {
        Ok(true)
    } else {
        lambda_membership(entry, y, eta)
    }
}

/// Iagolnitzer sum of two cells. Exact results: an empty summand, the
/// boundary-value / graph-conormal pair, and polyhedral pairs with constant
/// fibers meeting transversally. Anything else is unsupported here; see
/// [`hat_plus_sampled`] for a best-effort closure.
pub fn hat_plus(c1: &ConeCell, c2: &ConeCell) -> Result<ConeCell, MicrolocalError> {
    if c1.dim() != c2.dim() {
        return Err(MicrolocalError::Dimension { expected: c1.dim(), got: c2.dim() });
    }
    if matches!(c2, ConeCell::Empty { .. }) {
        return Ok(c1.clone());
    }
    if matches!(c1, ConeCell::Empty { .. }) {
        return Ok(c2.clone());
    }
    for (a, b) in [(c1, c2), (c2, c1)] {
        if let ConeCell::Polyhedral { base: Base::Graph { entry }, fiber: Fiber::Conormal } = b {
            if *a == ConeCell::boundary_value(a.dim()) {
                return Ok(ConeCell::GraphSum { entry: entry.clone() });
            }
        }
    }
    if c1.constant_fiber() && c2.constant_fiber() {
        // any base point gives the fiber; the conormal rules ignore it here
        let origin = vec![0.0; c1.dim()];
        let fiber = |c: &ConeCell| match c {
            ConeCell::Polyhedral { base, fiber } => match fiber {
                Fiber::All => both_ways(basis_lines(base.dim())),
                Fiber::Conormal => both_ways(base.conormal_lines(&origin)),
                Fiber::Rays { rays } => rays.clone(),
            },
            _ => unreachable!(),
        };
        if cones_oppose(&fiber(c1), &fiber(c2)) {
            return Err(MicrolocalError::Unsupported("cells are not transverse".into()));
        }
        return Ok(ConeCell::TransverseSum { left: Box::new(c1.clone()), right: Box::new(c2.clone()) });
    }
    Err(MicrolocalError::Unsupported("pair outside the exact catalog".into()))
}

/// Unit directions found over one base point by a sampled closure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampledFiber {
    pub point: Vec<f64>,
    pub directions: Vec<Vec<f64>>,
}

impl SampledFiber {
    pub fn contains(&self, xi: &[f64], angle_tol: f64) -> bool {
        let n = norm(xi);
        n > 0.0
            && self.directions.iter().any(|d| {
                let cos = d.iter().zip(xi).map(|(a, b)| a * b).sum::<f64>() / n;
                cos >= angle_tol.cos()
            })
    }
}

/// Best-effort closure of pointwise sums over base points approaching `x`
/// on a geometric grid, with both scales on a log grid. Only polyhedral
/// cells are sampled.
pub fn hat_plus_sampled(c1: &ConeCell, c2: &ConeCell, x: &[f64], seed: u64) -> Result<SampledFiber, MicrolocalError> {
    let bases = |c: &ConeCell| match c {
        ConeCell::Polyhedral { base, .. } => Ok(Some(base.clone())),
        ConeCell::Empty { .. } => Ok(None),
        _ => Err(MicrolocalError::Unsupported("sampling needs polyhedral cells".into())),
    };
    let (b1, b2) = (bases(c1)?, bases(c2)?);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // a log grid, refined toward 1 where the two summands nearly cancel
    let mut scales: Vec<f64> = (-24..=24).map(|k| 10f64.powf(k as f64 / 4.0)).collect();
    scales.extend((1..=32).flat_map(|k| {
        let d = 10f64.powf(-(k as f64) / 4.0);
        [1.0 - d, 1.0 + d]
    }));
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    let mut push = |v: Vec<f64>| {
        let n = norm(&v);
        if n > 1e-12 {
            dirs.push(v.into_iter().map(|c| c / n).collect());
        }
    };
    for k in 2..=8 {
        let r = 10f64.powi(-k);
        for _ in 0..8 {
            let g1 = match &b1 {
                Some(b) => c1.rays_at(&b.sample_near(x, r, &mut rng)).unwrap_or_default(),
                None => Vec::new(),
            };
            let g2 = match &b2 {
                Some(b) => c2.rays_at(&b.sample_near(x, r, &mut rng)).unwrap_or_default(),
                None => Vec::new(),
            };
            for a in g1.iter().chain(&g2) {
                push(a.clone());
            }
            for a in &g1 {
                for b in &g2 {
                    for &s in &scales {
                        push(a.iter().zip(b).map(|(p, q)| p + s * q).collect());
                    }
                }
            }
        }
    }
    Ok(SampledFiber { point: x.to_vec(), directions: dirs })
}

/// Membership in the limit set of `a_k df(x_k)`, `a_k > 0`, `x_k -> x`,
/// `f(x_k) -> 0`, for catalog functions.
pub fn lambda_membership(entry: &CatalogEntry, x: &[f64], xi: &[f64]) -> Result<bool, MicrolocalError> {
    let n = entry.dim();
    if x.len() != n || xi.len() != n {
        return Err(MicrolocalError::Dimension { expected: n, got: x.len().max(xi.len()) });
    }
    if xi.iter().all(|&c| near_zero(c)) || !near_zero(entry.value(x)) {
        return Ok(false);
    }
    Ok(match entry {
        CatalogEntry::Linear => xi[0] > 0.0,
        CatalogEntry::Square => true,
        CatalogEntry::LightCone => {
            if x.iter().all(|&c| near_zero(c)) {
                true
            } else {
                let g = entry.gradient(x);
                let cross = g[0] * xi[1] - g[1] * xi[0];
                near_zero(cross / norm(&g)) && g[0] * xi[0] + g[1] * xi[1] > 0.0
            }
        }
        CatalogEntry::Monomial { exponents } => monomial_lambda(exponents, x, xi),
    })
}

/// Near a point with zero coordinates `Z`, `a df` has components
/// `a alpha_z f / x_z` on `Z` and vanishing ones elsewhere; the reachable
/// sign patterns follow from the parities of the exponents.
fn monomial_lambda(exponents: &[u32], x: &[f64], xi: &[f64]) -> bool {
    let zeros: Vec<usize> = (0..x.len()).filter(|&i| exponents[i] > 0 && near_zero(x[i])).collect();
    if zeros.is_empty() {
        return false;
    }
    if (0..x.len()).any(|j| !zeros.contains(&j) && !near_zero(xi[j])) {
        return false;
    }
    let (active, idle): (Vec<usize>, Vec<usize>) = zeros.iter().partition(|&&z| !near_zero(xi[z]));
    if idle.iter().any(|&z| exponents[z] % 2 == 1) {
        return true;
    }
    let degree: u32 = active.iter().map(|&z| exponents[z]).sum();
    if degree % 2 == 0 {
        return true;
    }
    let rest = (0..x.len())
        .filter(|j| !zeros.contains(j))
        .fold(1.0, |acc, j| if exponents[j] % 2 == 1 && x[j] < 0.0 { -acc } else { acc });
    let signs = active.iter().fold(1.0, |acc, &z| if exponents[z] % 2 == 1 && xi[z] < 0.0 { -acc } else { acc });
    rest * signs > 0.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_examples() {
        let f = CatalogEntry::Linear;
        assert!(lambda_membership(&f, &[0.0], &[1.0]).unwrap());
        assert!(!lambda_membership(&f, &[0.0], &[-1.0]).unwrap());
        assert!(!lambda_membership(&f, &[1.0], &[2.0]).unwrap());
        assert!(!lambda_membership(&f, &[0.0], &[0.0]).unwrap());
    }

    #[test]
    fn light_cone_examples() {
        let f = CatalogEntry::LightCone;
        for xi in [[1.0, 0.0], [-0.3, 2.0], [0.0, -1.0]] {
            assert!(lambda_membership(&f, &[0.0, 0.0], &xi).unwrap());
        }
        // df(1, 1) = (2, -2)
        assert!(lambda_membership(&f, &[1.0, 1.0], &[1.0, -1.0]).unwrap());
        assert!(!lambda_membership(&f, &[1.0, 1.0], &[-1.0, 1.0]).unwrap());
        assert!(!lambda_membership(&f, &[1.0, 1.0], &[1.0, 1.0]).unwrap());
        assert!(!lambda_membership(&f, &[1.0, 0.5], &[1.0, 0.0]).unwrap());
    }

    #[test]
    fn cone_membership() {
        let rays = vec![vec![1.0, 0.0], vec![1.0, 1.0]];
        assert!(cone_contains(&rays, &[2.0, 1.0]));
        assert!(cone_contains(&rays, &[1.0, 1.0]));
        assert!(!cone_contains(&rays, &[0.0, 1.0]));
        assert!(!cone_contains(&rays, &[-1.0, 0.0]));
        assert!(cone_contains(&both_ways(basis_lines(3)), &[-1.0, 2.0, 0.5]));
    }

    #[test]
    fn empty_summand() {
        let c = ConeCell::boundary_value(2);
        assert_eq!(hat_plus(&c, &ConeCell::Empty { dim: 2 }).unwrap(), c);
        assert_eq!(hat_plus(&ConeCell::Empty { dim: 2 }, &c).unwrap(), c);
    }

    #[test]
    fn opposite_cells_rejected() {
        let up = ConeCell::Polyhedral { base: Base::Full { dim: 2 }, fiber: Fiber::Rays { rays: vec![vec![1.0, 0.0]] } };
        let down = ConeCell::Polyhedral { base: Base::Full { dim: 2 }, fiber: Fiber::Rays { rays: vec![vec![-1.0, 0.5], vec![-1.0, -0.5]] } };
        assert!(hat_plus(&up, &down).is_err());
        let side = ConeCell::Polyhedral { base: Base::Full { dim: 2 }, fiber: Fiber::Rays { rays: vec![vec![0.0, 1.0]] } };
        assert!(hat_plus(&up, &side).is_ok());
    }

    #[test]
    fn graph_pair_is_catalog() {
        let s = hat_plus(&ConeCell::boundary_value(2), &ConeCell::graph_conormal(CatalogEntry::Square)).unwrap();
        assert_eq!(s, ConeCell::GraphSum { entry: CatalogEntry::Square });
        assert!(s.contains(&[0.0, 0.0], &[0.0, -1.0]).unwrap());
        assert!(s.contains(&[0.0, 0.0], &[-1.0, 0.0]).unwrap());
        assert!(!s.contains(&[0.5, 0.0], &[0.0, 1.0]).unwrap());
    }
}
