//! Regularized amplitudes and their renormalized values.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{AmplitudeSpec, ExpansionTerm, ProductTest, PropagatorModel, QftError, Spacetime};
use crate::dist::testfn::{Affine1d, Correlation, Separable, Smooth1d};
use crate::dist::{laurent_extract, laurent_extract_batch, DistError, PairingPlan, PowerProduct, SmoothFn, TestFunction};
use crate::germ::Poles;
use crate::quad::{integrate_nested, QuadratureConfig};
use crate::renorm::{contour_spec, summarize, RenormMeta, RenormResult, SingularTerm};

const CAUCHY_NODES: usize = 24;
/// Distance to a removable chart singularity below which values are taken
/// as circle averages.
const REMOVABLE_GUARD: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    /// Two vertices: pairing of the relative-coordinate kernel.
    TwoPoint,
    /// Absolutely integrable region of the edge exponents.
    Integrable,
    /// Every edge joins vertices whose supports avoid the zero set of `G`.
    OffCone,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AmplitudeOptions {
    /// Forced route; chosen automatically when absent.
    pub route: Option<Route>,
    pub quadrature: QuadratureConfig,
    /// Total Monte Carlo samples.
    pub samples: usize,
    pub batches: usize,
    pub seed: u64,
}

impl Default for AmplitudeOptions {
    fn default() -> Self {
        AmplitudeOptions { route: None, quadrature: QuadratureConfig::default(), samples: 4000, batches: 8, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeValue {
    pub value: Complex64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stderr: Option<f64>,
    pub route: Route,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AmplitudeRenorm {
    pub value: Complex64,
    pub singular: Vec<SingularTerm>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stderr: Option<f64>,
    pub route: Route,
    pub meta: RenormMeta,
}

impl AmplitudeRenorm {
    fn from_result(r: RenormResult, stderr: Option<f64>, route: Route) -> Self {
        AmplitudeRenorm { value: r.value, singular: r.singular, stderr, route, meta: r.meta }
    }

    pub fn singular_size(&self) -> f64 {
        self.singular.iter().map(|t| t.coeff.max_abs()).fold(0.0, f64::max)
    }
}

fn ladder_distance(z: Complex64, start: f64) -> f64 {
    let k = (start - z.re).round().max(0.0);
    (z - (start - k)).norm()
}

/// Distances from `z` to the nearest pole of the relative-coordinate pairing
/// and to the nearest point where single charts are singular but their sum is not.
fn singular_distances(st: Spacetime, z: Complex64) -> (f64, f64) {
    match st {
        Spacetime::Line => (ladder_distance(z, -0.5), ladder_distance(z, -1.0)),
        Spacetime::Minkowski => (ladder_distance(z, -1.0), f64::INFINITY),
    }
}

/// `lambda -> P^mult (G + i0)^{mult lambda}` paired with a test function of
/// the relative coordinate `x_j - x_i`.
pub struct TwoPointKernel {
    plan: PairingPlan,
    terms: Vec<ExpansionTerm>,
    mult: u32,
    st: Spacetime,
}

impl TwoPointKernel {
    /// `psi` is a function of the relative coordinate, null coordinates in
    /// two dimensions, with all Jacobians included. Evaluation is accurate
    /// for `Re lambda` in `lambda_re` and `|Im lambda| <= lambda_im`.
    pub fn new(
        st: Spacetime,
        model: &PropagatorModel,
        mult: u32,
        psi: Arc<dyn SmoothFn>,
        lambda_re: (f64, f64),
        lambda_im: f64,
        cfg: &QuadratureConfig,
    ) -> Result<Self, QftError> {
        let terms = model.expansion(mult);
        let n = mult as f64;
        let a_max = terms.iter().map(|t| t.power).max().unwrap_or(0) as f64;
        let a_min = terms.iter().map(|t| t.power).min().unwrap_or(0) as f64;
        // margins cover the Cauchy circles
        let lo = n * lambda_re.0 - a_max - 0.5;
        let hi = n * lambda_re.1 - a_min + 0.5;
        let im = n * lambda_im + 0.5;
        let refs: Vec<Vec<Complex64>> = [lo, hi]
            .iter()
            .flat_map(|&re| [Complex64::new(re, 0.0), Complex64::new(re, im), Complex64::new(re, -im)])
            .map(|z| vec![z])
            .collect();
        let plan = PairingPlan::new(&PowerProduct::single(st.entry()), psi, &refs, cfg)?;
        Ok(TwoPointKernel { plan, terms, mult, st })
    }

    /// Kernel paired with `phi_a(x) phi_b(y)`.
    #[allow(clippy::too_many_arguments)]
    pub fn between(
        st: Spacetime,
        model: &PropagatorModel,
        mult: u32,
        a: &TestFunction,
        b: &TestFunction,
        lambda_re: (f64, f64),
        lambda_im: f64,
        cfg: &QuadratureConfig,
    ) -> Result<Self, QftError> {
        Self::new(st, model, mult, relative_test(st, a, b, cfg), lambda_re, lambda_im, cfg)
    }

    /// Kernel with the first point fixed at `anchor` (integration coordinates)
    /// and paired with `phi_b` in the second.
    #[allow(clippy::too_many_arguments)]
    pub fn anchored(
        st: Spacetime,
        model: &PropagatorModel,
        mult: u32,
        anchor: &[f64],
        b: &TestFunction,
        lambda_re: (f64, f64),
        lambda_im: f64,
        cfg: &QuadratureConfig,
    ) -> Result<Self, QftError> {
        Self::new(st, model, mult, anchored_test(st, anchor, b), lambda_re, lambda_im, cfg)
    }

    pub fn eval(&self, lambda: Complex64) -> Result<Complex64, DistError> {
        let z0 = lambda * self.mult as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        for t in &self.terms {
            acc += t.coef * self.derivative(z0 - t.power as f64, t.logs)?;
        }
        Ok(acc)
    }

    /// `d^order/dz^order` of the pairing of `(f + i0)^z`, by the Cauchy
    /// formula when a plain evaluation is unavailable.
    fn derivative(&self, z: Complex64, order: u32) -> Result<Complex64, DistError> {
        let (pole, removable) = singular_distances(self.st, z);
        if order == 0 && removable > REMOVABLE_GUARD {
            return self.plan.eval(&[z]);
        }
        if pole < 1e-9 {
            return Err(DistError::OnPole { axis: 0, exponent: z, pole: z.re.round() as i64 });
        }
        let candidates = [4.0, 5.0, 6.0, 8.0].map(|c| (pole / c).min(0.5));
        let rho = if removable.is_finite() {
            candidates
                .into_iter()
                .max_by(|a, b| (removable - a).abs().total_cmp(&(removable - b).abs()))
                .expect("nonempty")
        } else {
            candidates[0]
        };
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 0..CAUCHY_NODES {
            let w = Complex64::from_polar(1.0, 2.0 * PI * k as f64 / CAUCHY_NODES as f64);
            acc += self.plan.eval(&[z + rho * w])? * w.powi(-(order as i32));
        }
        let fact = (1..=order).fold(1.0, |a, j| a * j as f64);
        Ok(acc * fact / (CAUCHY_NODES as f64 * rho.powi(order as i32)))
    }
}

fn factor(phi: &TestFunction, k: usize) -> Arc<dyn Smooth1d> {
    Arc::new(phi.factors[k].clone())
}

/// `w -> int phi_a(x) phi_b(x + w) dx` in the relative coordinate.
pub(super) fn relative_test(st: Spacetime, a: &TestFunction, b: &TestFunction, cfg: &QuadratureConfig) -> Arc<dyn SmoothFn> {
    let corr = |k: usize| -> Arc<dyn Smooth1d> { Arc::new(Correlation::new(factor(a, k), factor(b, k), *cfg)) };
    let scale = st.vertex_jacobian().powi(2);
    Arc::new(Separable { scale, parts: (0..st.dim()).map(corr).collect() })
}

/// `w -> phi_b(anchor + w)` times the vertex Jacobian.
pub(super) fn anchored_test(st: Spacetime, anchor: &[f64], b: &TestFunction) -> Arc<dyn SmoothFn> {
    let parts = (0..st.dim())
        .map(|k| Arc::new(Affine1d { inner: factor(b, k), scale: 1.0, shift: anchor[k], factor: 1.0 }) as Arc<dyn Smooth1d>)
        .collect();
    Arc::new(Separable { scale: st.vertex_jacobian(), parts })
}

fn check_inputs(
    st: Spacetime,
    model: &PropagatorModel,
    spec: &AmplitudeSpec,
    phi: &ProductTest,
    opts: &AmplitudeOptions,
) -> Result<(), QftError> {
    spec.validate()?;
    model.validate()?;
    phi.validate(st, spec.vertices)?;
    opts.quadrature.validate().map_err(DistError::Config)?;
    if opts.batches < 2 || opts.samples < opts.batches {
        return Err(QftError::Spec(format!("need at least 2 batches and one sample per batch, got {opts:?}")));
    }
    Ok(())
}

fn off_cone(st: Spacetime, spec: &AmplitudeSpec, phi: &ProductTest) -> bool {
    spec.edges.iter().all(|e| phi.separated(st, e.i - 1, e.j - 1))
}

fn select_route(
    st: Spacetime,
    spec: &AmplitudeSpec,
    lambdas: &[Complex64],
    phi: &ProductTest,
    requested: Option<Route>,
) -> Result<Route, QftError> {
    // G vanishes to second order on the line diagonal and to first order on a null cone
    let order = match st {
        Spacetime::Line => 2.0,
        Spacetime::Minkowski => 1.0,
    };
    let valid = |r: Route| match r {
        Route::TwoPoint => spec.vertices == 2,
        Route::OffCone => off_cone(st, spec, phi),
        Route::Integrable => spec.edges.iter().zip(lambdas).all(|(e, l)| l.re > 1.0 - 1.0 / (order * e.mult as f64)),
    };
    match requested {
        Some(r) if valid(r) => Ok(r),
        Some(r) => Err(QftError::OutsideValidity(format!("route {r:?} does not apply"))),
        None => [Route::TwoPoint, Route::OffCone, Route::Integrable]
            .into_iter()
            .find(|&r| valid(r))
            .ok_or_else(|| {
                QftError::OutsideValidity(
                    "more than two vertices, supports meet the cones, and some exponent is not integrable".into(),
                )
            }),
    }
}

/// Integrand of the amplitude in integration coordinates, `d` per vertex.
fn integrand(
    st: Spacetime,
    model: &PropagatorModel,
    spec: &AmplitudeSpec,
    lambdas: &[Complex64],
    phi: &ProductTest,
    c: &[f64],
) -> Complex64 {
    let d = st.dim();
    let mut w = st.vertex_jacobian().powi(spec.vertices as i32);
    for (i, v) in phi.vertices.iter().enumerate() {
        w *= v.value(&c[i * d..(i + 1) * d]);
        if w == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
    }
    let mut acc = Complex64::new(w, 0.0);
    for (e, &l) in spec.edges.iter().zip(lambdas) {
        let g = st.gamma(&c[(e.i - 1) * d..e.i * d], &c[(e.j - 1) * d..e.j * d]);
        acc *= model.edge_factor(e.mult, l, g);
    }
    acc
}

/// Memoized values of a one-dimensional function.
struct Memo<'a> {
    f: &'a dyn Smooth1d,
    cache: Mutex<HashMap<u64, f64>>,
}

impl<'a> Memo<'a> {
    fn new(f: &'a dyn Smooth1d) -> Self {
        Memo { f, cache: Mutex::new(HashMap::new()) }
    }

    fn get(&self, t: f64) -> f64 {
        if let Some(&v) = self.cache.lock().expect("memo lock").get(&t.to_bits()) {
            return v;
        }
        let v = self.f.deriv(t, 0);
        self.cache.lock().expect("memo lock").insert(t.to_bits(), v);
        v
    }
}

/// Uniform points in the support box of `phi`, one stream per batch.
pub(super) fn sample_box(st: Spacetime, phi: &ProductTest, seed: u64, batch: usize, count: usize) -> (f64, Vec<Vec<f64>>) {
    let ranges: Vec<(f64, f64)> =
        (0..phi.vertices.len()).flat_map(|i| (0..st.dim()).map(move |k| (i, k))).map(|(i, k)| phi.range(i, k)).collect();
    let volume: f64 = ranges.iter().map(|(a, b)| b - a).product();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(batch as u64);
    let points = (0..count).map(|_| ranges.iter().map(|&(a, b)| rng.gen_range(a..b)).collect()).collect();
    (volume, points)
}

/// Mean and standard error of batch estimates.
pub(super) fn batch_stats(values: &[Complex64]) -> (Complex64, f64) {
    let b = values.len() as f64;
    let mean: Complex64 = values.iter().sum::<Complex64>() / b;
    let var = values.iter().map(|v| (v - mean).norm_sqr()).sum::<f64>() / (b - 1.0);
    (mean, (var / b).sqrt())
}

fn direct(
    st: Spacetime,
    model: &PropagatorModel,
    spec: &AmplitudeSpec,
    lambdas: &[Complex64],
    phi: &ProductTest,
    opts: &AmplitudeOptions,
) -> Result<(Complex64, Option<f64>), QftError> {
    let cfg = &opts.quadrature;
    match (st, spec.vertices) {
        (Spacetime::Line, n) if n <= 3 => {
            let lo: Vec<f64> = (0..n).map(|i| phi.range(i, 0).0).collect();
            let hi: Vec<f64> = (0..n).map(|i| phi.range(i, 0).1).collect();
            let f = |x: &[f64]| integrand(st, model, spec, lambdas, phi, x);
            let breaks = |k: usize, prefix: &[f64]| -> Vec<f64> {
                spec.edges.iter().filter(|e| e.j - 1 == k).map(|e| prefix[e.i - 1]).collect()
            };
            Ok((integrate_nested(&f, &lo, &hi, &breaks, cfg)?, None))
        }
        (Spacetime::Minkowski, 2) => {
            // only the relative null coordinates matter
            let (a, b) = (&phi.vertices[0], &phi.vertices[1]);
            let cu = Correlation::new(factor(a, 0), factor(b, 0), *cfg);
            let cv = Correlation::new(factor(a, 1), factor(b, 1), *cfg);
            let (mu, mv) = (Memo::new(&cu), Memo::new(&cv));
            let e = spec.edges[0];
            let f = |p: &[f64]| -> Complex64 {
                let w = 0.25 * mu.get(p[0]);
                if w == 0.0 {
                    return Complex64::new(0.0, 0.0);
                }
                w * mv.get(p[1]) * model.edge_factor(e.mult, lambdas[0], p[0] * p[1])
            };
            let (su, sv) = (cu.support(), cv.support());
            let breaks = |_: usize, _: &[f64]| vec![0.0];
            Ok((integrate_nested(&f, &[su.0, sv.0], &[su.1, sv.1], &breaks, cfg)?, None))
        }
        _ => {
            let per = opts.samples / opts.batches;
            let estimates: Vec<Complex64> = (0..opts.batches)
                .into_par_iter()
                .map(|b| {
                    let (volume, pts) = sample_box(st, phi, opts.seed, b, per);
                    let s: Complex64 = pts.iter().map(|c| integrand(st, model, spec, lambdas, phi, c)).sum();
                    s * volume / per as f64
                })
                .collect();
            let (mean, se) = batch_stats(&estimates);
            Ok((mean, Some(se)))
        }
    }
}

/// `prod_e P_e^{mult_e} (G_e + i0)^{mult_e lambda_e}` paired with `phi`.
pub fn regularized_amplitude(
    st: Spacetime,
    model: &PropagatorModel,
    spec: &AmplitudeSpec,
    lambdas: &[Complex64],
    phi: &ProductTest,
    opts: &AmplitudeOptions,
) -> Result<AmplitudeValue, QftError> {
    check_inputs(st, model, spec, phi, opts)?;
    if lambdas.len() != spec.edges.len() {
        return Err(QftError::Spec(format!("{} exponents for {} edges", lambdas.len(), spec.edges.len())));
    }
    let route = select_route(st, spec, lambdas, phi, opts.route)?;
    let (value, stderr) = match route {
        Route::TwoPoint => {
            let l = lambdas[0];
            let k = TwoPointKernel::between(
                st,
                model,
                spec.edges[0].mult,
                &phi.vertices[0],
                &phi.vertices[1],
                (l.re, l.re),
                l.im.abs(),
                &opts.quadrature,
            )?;
            (k.eval(l)?, None)
        }
        Route::Integrable | Route::OffCone => direct(st, model, spec, lambdas, phi, opts)?,
    };
    Ok(AmplitudeValue { value, stderr, route })
}

/// Radius-setting clearance of the declared lattice over all edges.
pub(super) fn clearance(st: Spacetime, model: &PropagatorModel, spec: &AmplitudeSpec) -> Result<f64, QftError> {
    let lattice = PowerProduct::single(st.entry()).lattice()?;
    let mut best = 1.0f64;
    for e in &spec.edges {
        for t in model.expansion(e.mult) {
            best = best.min(lattice.compose(&[vec![e.mult as i64]], &[-(t.power as i64)]).clearance(&[0]));
        }
    }
    Ok(best)
}

/// Per-sample data of a fixed off-cone point set.
struct EdgeSamples {
    /// Integrand at `lambda = 0` times the sample weight.
    weights: Vec<Complex64>,
    /// `[edge][sample]` values of `mult * log(G + i0)`.
    logs: Vec<Vec<Complex64>>,
}

impl EdgeSamples {
    fn new(st: Spacetime, model: &PropagatorModel, spec: &AmplitudeSpec, phi: &ProductTest, volume: f64, pts: &[Vec<f64>]) -> Self {
        let d = st.dim();
        let zero = vec![Complex64::new(0.0, 0.0); spec.edges.len()];
        let scale = volume / pts.len() as f64;
        let weights = pts.iter().map(|c| integrand(st, model, spec, &zero, phi, c) * scale).collect();
        let logs = spec
            .edges
            .iter()
            .map(|e| {
                pts.iter()
                    .map(|c| super::log_i0(st.gamma(&c[(e.i - 1) * d..e.i * d], &c[(e.j - 1) * d..e.j * d])) * e.mult as f64)
                    .collect()
            })
            .collect();
        EdgeSamples { weights, logs }
    }

    fn sampler(&self, pts: &[Vec<Complex64>]) -> Vec<Complex64> {
        let p = self.logs.len();
        let key = |z: Complex64| (z.re.to_bits(), z.im.to_bits());
        let mut tables: Vec<HashMap<(u64, u64), Vec<Complex64>>> = vec![HashMap::new(); p];
        for l in pts {
            for (e, table) in tables.iter_mut().enumerate() {
                table.entry(key(l[e])).or_insert_with(|| self.logs[e].iter().map(|&lg| (lg * l[e]).exp()).collect());
            }
        }
        pts.par_iter()
            .map(|l| {
                let cols: Vec<&Vec<Complex64>> = (0..p).map(|e| &tables[e][&key(l[e])]).collect();
                self.weights.iter().enumerate().map(|(s, &w)| cols.iter().fold(w, |acc, c| acc * c[s])).sum()
            })
            .collect()
    }
}

/// Pole-subtracted value at `lambda = 0` of the regularized amplitude.
pub fn renormalize_amplitude(
    st: Spacetime,
    model: &PropagatorModel,
    spec: &AmplitudeSpec,
    phi: &ProductTest,
    opts: &AmplitudeOptions,
) -> Result<AmplitudeRenorm, QftError> {
    check_inputs(st, model, spec, phi, opts)?;
    let cfg = &opts.quadrature;
    let poles: Poles = spec.declared_poles(st, model)?;
    let p = spec.edges.len();
    let contour = contour_spec(cfg, clearance(st, model, spec)?, p);
    let center = vec![0i64; p];
    if spec.vertices == 2 && opts.route.map_or(true, |r| r == Route::TwoPoint) {
        let r = contour.radius;
        let k = TwoPointKernel::between(
            st,
            model,
            spec.edges[0].mult,
            &phi.vertices[0],
            &phi.vertices[1],
            (-r, r),
            r,
            cfg,
        )?;
        let pairing = |l: &[Complex64]| k.eval(l[0]);
        let germ = laurent_extract(&pairing, &center, &poles, &contour)?;
        return Ok(AmplitudeRenorm::from_result(summarize(germ)?, None, Route::TwoPoint));
    }
    if !off_cone(st, spec, phi) {
        return Err(QftError::Unsupported(
            "renormalization of on-cone amplitudes is limited to two vertices".into(),
        ));
    }
    // a fixed Monte Carlo point set: the sampled family is entire, so any
    // singular part it reports is extraction noise
    let per = opts.samples / opts.batches;
    let batches: Vec<EdgeSamples> = (0..opts.batches)
        .map(|b| {
            let (volume, pts) = sample_box(st, phi, opts.seed, b, per);
            EdgeSamples::new(st, model, spec, phi, volume, &pts)
        })
        .collect();
    let results = batches
        .iter()
        .map(|s| {
            let sampler = |pts: &[Vec<Complex64>]| -> Result<Vec<Complex64>, DistError> { Ok(s.sampler(pts)) };
            let germ = laurent_extract_batch(&sampler, &center, &poles, &contour)?;
            Ok(summarize(germ)?)
        })
        .collect::<Result<Vec<RenormResult>, QftError>>()?;
    let values: Vec<Complex64> = results.iter().map(|r| r.value).collect();
    let (mean, se) = batch_stats(&values);
    // average the singular numerators term by term
    let mut first = results[0].clone();
    for t in first.singular.iter_mut() {
        let mut coeff = t.coeff.clone();
        for r in &results[1..] {
            if let Some(u) = r.singular.iter().find(|u| u.poles == t.poles) {
                coeff = coeff.add(&u.coeff);
            }
        }
        t.coeff = coeff.scale(&Complex64::new(1.0 / results.len() as f64, 0.0));
        t.err = results.iter().map(|r| r.meta.coeff_err).fold(0.0, f64::max);
    }
    first.value = mean;
    Ok(AmplitudeRenorm::from_result(first, Some(se), Route::OffCone))
}
