//! Factorization and covariance of renormalized amplitudes.

use std::collections::HashMap;
use std::sync::Mutex;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::amplitude::{batch_stats, clearance, sample_box};
use super::{
    renormalize_amplitude, AmplitudeOptions, AmplitudeSpec, Edge, Isometry, ProductTest, PropagatorModel, QftError,
    Spacetime, TwoPointKernel,
};
use crate::dist::{laurent_extract, laurent_extract_batch, DistError, SmoothFn};
use crate::germ::{LinearForm, Poles};
use crate::quad::{integrate_nested, nodes, QuadratureConfig};
use crate::renorm::{contour_spec, summarize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FactorizationOptions {
    pub amplitude: AmplitudeOptions,
    /// Level of the fixed anchor grid on the line.
    pub grid_level: u32,
    /// Relative tolerance on the line.
    pub tol: f64,
    /// Allowed extra difference, in standard errors of the paired batch gaps,
    /// for the Monte Carlo variant.
    pub sigmas: f64,
}

impl Default for FactorizationOptions {
    fn default() -> Self {
        FactorizationOptions {
            amplitude: AmplitudeOptions { samples: 256, batches: 8, ..Default::default() },
            grid_level: 6,
            tol: 1e-4,
            sigmas: 3.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QftFactorizationReport {
    /// Joint germ of the full amplitude, projected.
    pub joint: Complex64,
    /// Product of the block renormalizations times the cross propagators.
    pub product: Complex64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub joint_stderr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub product_stderr: Option<f64>,
    pub diff: f64,
    pub allowed: f64,
    pub pass: bool,
}

/// One side of the partition: the lowest vertex anchors it, an optional
/// second vertex hangs off it through an internal edge.
#[derive(Clone, Copy, Debug)]
struct Block {
    anchor: usize,
    tail: Option<(usize, u32)>,
}

struct Layout {
    inner: Block,
    outer: Block,
    cross: Option<u32>,
}

fn layout(spec: &AmplitudeSpec, block: &[usize], phi: &ProductTest, st: Spacetime) -> Result<Layout, QftError> {
    let n = spec.vertices;
    let mut inside: Vec<usize> = block.to_vec();
    inside.sort_unstable();
    inside.dedup();
    let outside: Vec<usize> = (1..=n).filter(|v| !inside.contains(v)).collect();
    if inside.is_empty() || outside.is_empty() || inside.iter().any(|&v| v == 0 || v > n) {
        return Err(QftError::Spec(format!("{block:?} is not a proper nonempty subset of 1..={n}")));
    }
    if inside.len() > 2 || outside.len() > 2 {
        return Err(QftError::Unsupported("blocks of at most two vertices".into()));
    }
    let side = |vs: &[usize]| -> Result<Block, QftError> {
        let tail = match vs {
            [a, b] => spec.edges.iter().find(|e| (e.i, e.j) == (*a, *b)).map(|e| (b - 1, e.mult)),
            _ => None,
        };
        Ok(Block { anchor: vs[0] - 1, tail })
    };
    let (inner, outer) = (side(&inside)?, side(&outside)?);
    let mut cross = None;
    for e in &spec.edges {
        let a = inside.contains(&e.i);
        let b = inside.contains(&e.j);
        if a == b {
            continue;
        }
        let ends = [e.i - 1, e.j - 1];
        if !(ends.contains(&inner.anchor) && ends.contains(&outer.anchor)) {
            return Err(QftError::Unsupported(format!(
                "cross edge ({}, {}) must join the lowest vertices of the two blocks",
                e.i, e.j
            )));
        }
        cross = Some(e.mult);
    }
    if cross.is_some() && !phi.separated(st, inner.anchor, outer.anchor) {
        return Err(QftError::OutsideValidity("cross edge meets the cone on the support".into()));
    }
    for a in &inside {
        for b in &outside {
            let overlap = (0..st.dim()).all(|k| {
                let (a0, a1) = phi.range(a - 1, k);
                let (b0, b1) = phi.range(b - 1, k);
                a0 < b1 && b0 < a1
            });
            if overlap {
                return Err(QftError::Spec(format!("supports of vertices {a} and {b} are not disjoint")));
            }
        }
    }
    Ok(Layout { inner, outer, cross })
}

struct Context<'a> {
    st: Spacetime,
    model: &'a PropagatorModel,
    phi: &'a ProductTest,
    cfg: QuadratureConfig,
    radius: f64,
}

impl Context<'_> {
    fn kernels(&self, b: Block, anchors: &[Vec<f64>]) -> Result<Option<Vec<TwoPointKernel>>, QftError> {
        let Some((tail, mult)) = b.tail else {
            return Ok(None);
        };
        let r = self.radius;
        anchors
            .par_iter()
            .map(|x| TwoPointKernel::anchored(self.st, self.model, mult, x, &self.phi.vertices[tail], (-r, r), r, &self.cfg))
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    }

    /// `phi_anchor(x) dx` weight of an anchor point.
    fn anchor_weight(&self, b: Block, x: &[f64]) -> f64 {
        self.phi.vertices[b.anchor].value(x) * self.st.vertex_jacobian()
    }

    fn cross_power(&self, mult: u32, xa: &[f64], xc: &[f64]) -> Complex64 {
        self.model.edge_factor(mult, Complex64::new(0.0, 0.0), self.st.gamma(xa, xc))
    }

    fn order(&self, mult: u32) -> Result<u32, QftError> {
        self.model.declared_order(self.st, mult)
    }

    /// Renormalized block value at one anchor.
    fn block_value(&self, k: &TwoPointKernel, mult: u32) -> Result<Complex64, QftError> {
        let mut poles = Poles::new();
        let m = self.order(mult)?;
        if m > 0 {
            poles.insert(LinearForm::unit(1, 0), m);
        }
        let spec = contour_spec(&self.cfg, self.radius / self.cfg.radius_fraction, 1);
        let germ = laurent_extract(&|l: &[Complex64]| k.eval(l[0]), &[0], &poles, &spec)?;
        Ok(summarize(germ)?.value)
    }
}

type Key = (u64, u64);

fn key(z: Complex64) -> Key {
    (z.re.to_bits(), z.im.to_bits())
}

/// Projected joint germ of `sum_pairs w B_in(l0) B_out(l1) K` over a fixed
/// set of anchor pairs.
fn joint_value(
    ctx: &Context,
    lay: &Layout,
    anchors_in: &[Vec<f64>],
    anchors_out: &[Vec<f64>],
    pairs: &[(usize, usize, f64)],
) -> Result<Complex64, QftError> {
    let kin = ctx.kernels(lay.inner, anchors_in)?;
    let kout = ctx.kernels(lay.outer, anchors_out)?;
    // the cross edge joins separated anchors, so its factor is entire in its
    // exponent and projects to its value at zero
    let mut slots: Vec<(usize, u32)> = Vec::new();
    if let Some((_, m)) = lay.inner.tail {
        slots.push((0, m));
    }
    if let Some((_, m)) = lay.outer.tail {
        slots.push((1, m));
    }
    let cross: Vec<Complex64> = pairs
        .iter()
        .map(|&(a, c, w)| match lay.cross {
            Some(m) => ctx.cross_power(m, &anchors_in[a], &anchors_out[c]) * w,
            None => Complex64::new(w, 0.0),
        })
        .collect();
    let p = slots.len();
    if p == 0 {
        return Ok(cross.iter().sum());
    }
    let mut poles = Poles::new();
    for (v, &(_, m)) in slots.iter().enumerate() {
        let o = ctx.order(m)?;
        if o > 0 {
            poles.insert(LinearForm::unit(p, v), o);
        }
    }
    let block_cache: [Mutex<HashMap<Key, Vec<Complex64>>>; 2] = [Mutex::new(HashMap::new()), Mutex::new(HashMap::new())];
    let kernels = [kin.as_ref(), kout.as_ref()];
    let sampler = |pts: &[Vec<Complex64>]| -> Result<Vec<Complex64>, DistError> {
        for (v, &(slot, _)) in slots.iter().enumerate() {
            let ks = kernels[slot].expect("slot has a tail edge");
            let missing: Vec<Complex64> = {
                let cache = block_cache[slot].lock().expect("cache lock");
                let mut m: Vec<Complex64> =
                    pts.iter().map(|l| l[v]).filter(|z| !cache.contains_key(&key(*z))).collect();
                m.sort_by_key(|z| key(*z));
                m.dedup_by_key(|z| key(*z));
                m
            };
            for z in missing {
                let vals = ks.par_iter().map(|k| k.eval(z)).collect::<Result<Vec<_>, _>>()?;
                block_cache[slot].lock().expect("cache lock").insert(key(z), vals);
            }
        }
        let caches = [block_cache[0].lock().expect("cache lock"), block_cache[1].lock().expect("cache lock")];
        Ok(pts
            .par_iter()
            .map(|l| {
                let col = |slot: usize| -> Option<&Vec<Complex64>> {
                    let v = slots.iter().position(|&(s, _)| s == slot)?;
                    caches[slot].get(&key(l[v]))
                };
                let (bi, bo) = (col(0), col(1));
                pairs
                    .iter()
                    .zip(&cross)
                    .map(|(&(a, c, _), &t)| {
                        let mut t = t;
                        if let Some(b) = bi {
                            t *= b[a];
                        }
                        if let Some(b) = bo {
                            t *= b[c];
                        }
                        t
                    })
                    .sum()
            })
            .collect())
    };
    let spec = contour_spec(&ctx.cfg, ctx.radius / ctx.cfg.radius_fraction, p);
    let germ = laurent_extract_batch(&sampler, &vec![0; p], &poles, &spec)?;
    Ok(summarize(germ)?.value)
}

fn trimmed_nodes(lo: f64, hi: f64, level: u32, weight: impl Fn(f64) -> f64) -> Vec<(f64, f64)> {
    let all: Vec<(f64, f64)> = nodes(lo, hi, level).iter().map(|n| (n.x, n.w * weight(n.x))).collect();
    let max = all.iter().map(|(_, w)| w.abs()).fold(0.0, f64::max);
    all.into_iter().filter(|(_, w)| w.abs() > 1e-17 * max).collect()
}

/// Renormalized block values at anchor points, memoized.
struct BlockValues<'a> {
    ctx: &'a Context<'a>,
    block: Block,
    cache: Mutex<HashMap<Vec<u64>, Complex64>>,
    failure: Mutex<Option<String>>,
}

impl<'a> BlockValues<'a> {
    fn new(ctx: &'a Context<'a>, block: Block) -> Self {
        BlockValues { ctx, block, cache: Mutex::new(HashMap::new()), failure: Mutex::new(None) }
    }

    fn get(&self, x: &[f64]) -> Complex64 {
        let Some((tail, mult)) = self.block.tail else {
            return Complex64::new(1.0, 0.0);
        };
        let k: Vec<u64> = x.iter().map(|c| c.to_bits()).collect();
        if let Some(&v) = self.cache.lock().expect("cache lock").get(&k) {
            return v;
        }
        let r = self.ctx.radius;
        let ctx = self.ctx;
        let v = TwoPointKernel::anchored(ctx.st, ctx.model, mult, x, &ctx.phi.vertices[tail], (-r, r), r, &ctx.cfg)
            .and_then(|kern| ctx.block_value(&kern, mult));
        match v {
            Ok(v) => {
                self.cache.lock().expect("cache lock").insert(k, v);
                v
            }
            Err(e) => {
                self.failure.lock().expect("failure lock").get_or_insert(format!("at {x:?}: {e}"));
                Complex64::new(f64::NAN, 0.0)
            }
        }
    }

    fn check(&self) -> Result<(), QftError> {
        match self.failure.lock().expect("failure lock").take() {
            Some(msg) => Err(QftError::Spec(format!("block renormalization failed {msg}"))),
            None => Ok(()),
        }
    }
}

/// Compares the renormalized amplitude with the product of the renormalized
/// blocks `block` and its complement times the cross propagators.
pub fn check_qft_factorization(
    st: Spacetime,
    model: &PropagatorModel,
    spec: &AmplitudeSpec,
    block: &[usize],
    phi: &ProductTest,
    opts: &FactorizationOptions,
) -> Result<QftFactorizationReport, QftError> {
    spec.validate()?;
    model.validate()?;
    phi.validate(st, spec.vertices)?;
    let lay = layout(spec, block, phi, st)?;
    let aopts = &opts.amplitude;
    aopts.quadrature.validate().map_err(DistError::Config)?;
    let cfg = aopts.quadrature;
    let radius = cfg.radius_fraction * clearance(st, model, spec)?;
    let ctx = Context { st, model, phi, cfg, radius };
    let cross_at_zero = |xa: &[f64], xc: &[f64]| -> Complex64 {
        match lay.cross {
            Some(m) => ctx.cross_power(m, xa, xc),
            None => Complex64::new(1.0, 0.0),
        }
    };
    let (ia, oa) = (lay.inner.anchor, lay.outer.anchor);
    match st {
        Spacetime::Line => {
            let (lo_i, hi_i) = phi.range(ia, 0);
            let (lo_o, hi_o) = phi.range(oa, 0);
            let gi = trimmed_nodes(lo_i, hi_i, opts.grid_level, |x| ctx.anchor_weight(lay.inner, &[x]));
            let go = trimmed_nodes(lo_o, hi_o, opts.grid_level, |x| ctx.anchor_weight(lay.outer, &[x]));
            let anchors_in: Vec<Vec<f64>> = gi.iter().map(|&(x, _)| vec![x]).collect();
            let anchors_out: Vec<Vec<f64>> = go.iter().map(|&(x, _)| vec![x]).collect();
            let pairs: Vec<(usize, usize, f64)> =
                (0..gi.len()).flat_map(|a| (0..go.len()).map(move |c| (a, c))).map(|(a, c)| (a, c, gi[a].1 * go[c].1)).collect();
            let joint = joint_value(&ctx, &lay, &anchors_in, &anchors_out, &pairs)?;

            let (bi, bo) = (BlockValues::new(&ctx, lay.inner), BlockValues::new(&ctx, lay.outer));
            let f = |x: &[f64]| -> Complex64 {
                let w = ctx.anchor_weight(lay.inner, &x[..1]) * ctx.anchor_weight(lay.outer, &x[1..]);
                if w == 0.0 {
                    return Complex64::new(0.0, 0.0);
                }
                w * bi.get(&x[..1]) * bo.get(&x[1..]) * cross_at_zero(&x[..1], &x[1..])
            };
            let qcfg = QuadratureConfig { tol: cfg.tol.max(1e-9), ..cfg };
            let product = integrate_nested(&f, &[lo_i, lo_o], &[hi_i, hi_o], &|_, _| vec![], &qcfg);
            bi.check()?;
            bo.check()?;
            let product = product?;
            let diff = (joint - product).norm();
            let allowed = opts.tol * product.norm().max(joint.norm());
            Ok(QftFactorizationReport {
                joint,
                product,
                joint_stderr: None,
                product_stderr: None,
                diff,
                allowed,
                pass: diff <= allowed,
            })
        }
        Spacetime::Minkowski => {
            let sub = ProductTest { vertices: vec![phi.vertices[ia].clone(), phi.vertices[oa].clone()] };
            let per = aopts.samples / aopts.batches;
            if aopts.batches < 2 || per == 0 {
                return Err(QftError::Spec("need at least 2 batches with one sample each".into()));
            }
            let draw = |seed: u64, b: usize| -> (f64, Vec<Vec<f64>>, Vec<Vec<f64>>) {
                let (volume, pts) = sample_box(st, &sub, seed, b, per);
                let (a, c): (Vec<_>, Vec<_>) = pts.into_iter().map(|p| (p[..2].to_vec(), p[2..].to_vec())).unzip();
                (volume, a, c)
            };
            let mut joints = Vec::with_capacity(aopts.batches);
            for b in 0..aopts.batches {
                let (volume, a, c) = draw(aopts.seed, b);
                let pairs: Vec<(usize, usize, f64)> = (0..per)
                    .map(|k| (k, k, volume / per as f64 * ctx.anchor_weight(lay.inner, &a[k]) * ctx.anchor_weight(lay.outer, &c[k])))
                    .filter(|q| q.2 != 0.0)
                    .collect();
                joints.push(joint_value(&ctx, &lay, &a, &c, &pairs)?);
            }
            // same points on both sides so the sampling error cancels in the difference
            let (bi, bo) = (BlockValues::new(&ctx, lay.inner), BlockValues::new(&ctx, lay.outer));
            let mut products = Vec::with_capacity(aopts.batches);
            for b in 0..aopts.batches {
                let (volume, a, c) = draw(aopts.seed, b);
                let s: Complex64 = (0..per)
                    .into_par_iter()
                    .map(|k| {
                        let w = ctx.anchor_weight(lay.inner, &a[k]) * ctx.anchor_weight(lay.outer, &c[k]);
                        if w == 0.0 {
                            return Complex64::new(0.0, 0.0);
                        }
                        w * bi.get(&a[k]) * bo.get(&c[k]) * cross_at_zero(&a[k], &c[k])
                    })
                    .collect::<Vec<_>>()
                    .iter()
                    .sum();
                products.push(s * volume / per as f64);
            }
            bi.check()?;
            bo.check()?;
            let (joint, se1) = batch_stats(&joints);
            let (product, se2) = batch_stats(&products);
            let gaps: Vec<Complex64> = joints.iter().zip(&products).map(|(j, p)| j - p).collect();
            let (_, se_gap) = batch_stats(&gaps);
            let diff = (joint - product).norm();
            let allowed = opts.tol * product.norm().max(joint.norm()) + opts.sigmas * se_gap;
            Ok(QftFactorizationReport {
                joint,
                product,
                joint_stderr: Some(se1),
                product_stderr: Some(se2),
                diff,
                allowed,
                pass: diff <= allowed,
            })
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CovarianceReport {
    pub original: Complex64,
    pub transformed: Complex64,
    pub diff: f64,
    pub scale: f64,
    pub tol: f64,
    pub pass: bool,
}

/// `R(t)(phi)` against `R(t)(g_* phi)` for an isometry `g`; the amplitude is
/// invariant, so the two agree up to `tol` relative to the value.
pub fn check_covariance(
    st: Spacetime,
    model: &PropagatorModel,
    spec: &AmplitudeSpec,
    phi: &ProductTest,
    g: &Isometry,
    tol: f64,
    opts: &AmplitudeOptions,
) -> Result<CovarianceReport, QftError> {
    let pushed = phi.push_forward(st, g)?;
    let a = renormalize_amplitude(st, model, spec, phi, opts)?;
    let b = renormalize_amplitude(st, model, spec, &pushed, opts)?;
    let diff = (a.value - b.value).norm();
    let scale = a.value.norm().max(f64::MIN_POSITIVE);
    Ok(CovarianceReport { original: a.value, transformed: b.value, diff, scale, tol, pass: diff <= tol * scale })
}

/// The graph `{12}, {34}, {13}` on four vertices used by the shipped checks.
pub fn two_blocks_with_bridge(mult: u32) -> AmplitudeSpec {
    AmplitudeSpec {
        vertices: 4,
        edges: vec![Edge { i: 1, j: 2, mult }, Edge { i: 3, j: 4, mult }, Edge { i: 1, j: 3, mult: 1 }],
    }
}

/// Graph, block and supports of the shipped factorization checks. Blocks sit
/// on disjoint supports and the bridge joins separated anchors.
pub fn shipped_factorization(st: Spacetime) -> (AmplitudeSpec, Vec<usize>, ProductTest) {
    use crate::dist::{BumpFactor, TestFunction};
    let line = |poly: Vec<f64>, c: f64, w: f64| TestFunction::new(vec![BumpFactor::with_poly(poly, c, w)]);
    let phi = match st {
        Spacetime::Line => ProductTest {
            vertices: vec![
                line(vec![1.0, 0.3], 0.0, 0.5),
                line(vec![1.0], 0.2, 0.6),
                line(vec![1.0], 2.5, 0.5),
                line(vec![0.7, 0.2], 2.7, 0.4),
            ],
        },
        Spacetime::Minkowski => ProductTest {
            vertices: vec![
                TestFunction::bump(&[0.0, 0.0], &[0.5, 0.5]),
                TestFunction::bump(&[0.2, 0.1], &[0.5, 0.5]),
                TestFunction::bump(&[2.5, 2.5], &[0.5, 0.5]),
                TestFunction::bump(&[2.6, 2.4], &[0.5, 0.4]),
            ],
        },
    };
    (two_blocks_with_bridge(1), vec![1, 2], phi)
}
