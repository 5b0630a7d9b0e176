//! The renormalization operator: pole-subtracted values of regularized
//! pairings at integer exponents, and its extension and factorization checks.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::catalog::{orthants, PowerFactor, PowerProduct};
use crate::dist::laurent::{laurent_extract, ContourSpec, NumericGerm};
use crate::dist::testfn::{SmoothFn, Tensor, TestFunction};
use crate::dist::{DistError, PairingPlan};
use crate::germ::{LinearForm, PolarTerm};
use crate::poly::Poly;
use crate::quad::{integrate_nested, QuadratureConfig};

#[derive(Debug, Error)]
pub enum RenormError {
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error("lattice mismatch: declared form {0} is not in the catalog lattice")]
    LatticeMismatch(LinearForm),
    #[error("test function dimension {got} does not match {expected} variables")]
    Dimension { expected: usize, got: usize },
    #[error("precondition failed: {0}")]
    Precondition(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenormRequest {
    pub product: PowerProduct,
    /// Integer target exponents, one per factor.
    pub targets: Vec<i64>,
    pub phi: TestFunction,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SingularTerm {
    pub poles: Vec<(LinearForm, u32)>,
    pub coeff: Poly<Complex64>,
    pub err: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RenormMeta {
    pub center: Vec<i64>,
    pub radius: f64,
    pub nodes: usize,
    pub coeff_err: f64,
    pub value_err: f64,
    pub decay_ratio: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RenormResult {
    pub value: Complex64,
    pub singular: Vec<SingularTerm>,
    pub meta: RenormMeta,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub germ: Option<NumericGerm>,
}

impl RenormResult {
    /// Largest singular numerator coefficient.
    pub fn singular_size(&self) -> f64 {
        self.singular.iter().map(|t| t.coeff.max_abs()).fold(0.0, f64::max)
    }
}

/// Reference exponents at the real extremes of the sampling polydisk.
pub fn reference_points(center: &[Complex64], radius: f64) -> Vec<Vec<Complex64>> {
    orthants(center.len())
        .into_iter()
        .map(|eps| center.iter().zip(&eps).map(|(&c, &e)| c + radius * e as f64).collect())
        .collect()
}

/// Collapse a germ into its singular terms and holomorphic value.
pub fn summarize(germ: NumericGerm) -> Result<RenormResult, RenormError> {
    let (d, e) = germ.decompose()?;
    let err_of = |t: &PolarTerm<Complex64>| -> f64 {
        e.singular.iter().filter(|u| u.poles == t.poles).map(|u| u.numerator.max_abs()).fold(0.0, f64::max)
    };
    let singular = d
        .singular
        .iter()
        .map(|t| SingularTerm { poles: t.poles.clone(), coeff: t.numerator.clone(), err: err_of(t) })
        .collect();
    let meta = RenormMeta {
        center: germ.germ.center().to_vec(),
        radius: germ.radius,
        nodes: germ.nodes,
        coeff_err: germ.coeff_err,
        value_err: e.value_at_center().norm(),
        decay_ratio: germ.decay_ratio,
    };
    Ok(RenormResult { value: d.value_at_center(), singular, meta, germ: Some(germ) })
}

/// Pole-subtracted value of `s -> prod (f_j + i0)^{s_j} (phi)` at `s = targets`.
pub fn renormalize_with(
    product: &PowerProduct,
    targets: &[i64],
    phi: Arc<dyn SmoothFn>,
    cfg: &QuadratureConfig,
) -> Result<RenormResult, RenormError> {
    cfg.validate().map_err(DistError::Config)?;
    if phi.dim() != product.nvars {
        return Err(RenormError::Dimension { expected: product.nvars, got: phi.dim() });
    }
    if targets.len() != product.factors.len() {
        return Err(RenormError::Precondition(format!(
            "{} targets for {} factors",
            targets.len(),
            product.factors.len()
        )));
    }
    let lattice = product.lattice()?;
    let poles = lattice.through(targets)?;
    if let Some(f) = poles.keys().find(|f| !lattice.contains(f)) {
        return Err(RenormError::LatticeMismatch(f.clone()));
    }
    let spec = contour_spec(cfg, lattice.clearance(targets), targets.len());
    let center: Vec<Complex64> = targets.iter().map(|&k| Complex64::new(k as f64, 0.0)).collect();
    let plan = PairingPlan::new(product, phi, &reference_points(&center, spec.radius), cfg)?;
    let pairing = |s: &[Complex64]| plan.eval(s);
    let germ = laurent_extract(&pairing, targets, &poles, &spec)?;
    summarize(germ)
}

/// Contour nodes shrink with the number of variables to keep sample counts
/// near `64^2`.
pub fn contour_spec(cfg: &QuadratureConfig, clearance: f64, nvars: usize) -> ContourSpec {
    let mut spec = ContourSpec::from_config(cfg, clearance);
    if nvars >= 3 {
        spec.nodes = spec.nodes.min(16);
        spec.max_nodes = spec.max_nodes.min(32);
    } else if nvars == 2 {
        spec.nodes = spec.nodes.min(32);
        spec.max_nodes = spec.max_nodes.min(64);
    }
    spec
}

pub fn renormalize(req: &RenormRequest) -> Result<RenormResult, RenormError> {
    req.phi.validate()?;
    renormalize_with(&req.product, &req.targets, Arc::new(req.phi.clone()), &req.quadrature)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExtensionReport {
    pub renormalized: Complex64,
    pub direct: f64,
    pub diff: f64,
    pub scale: f64,
    pub tol: f64,
    pub pass: bool,
}

/// Plain integral of `prod f_j^{k_j} phi` over the support of `phi`.
pub fn direct_integral(
    product: &PowerProduct,
    targets: &[i64],
    phi: &dyn SmoothFn,
    cfg: &QuadratureConfig,
) -> Result<(f64, f64), RenormError> {
    let sup = phi.support();
    for f in &product.factors {
        let bx: Vec<(f64, f64)> = f.vars.iter().map(|&v| sup[v]).collect();
        if f.entry.may_vanish_on(&bx) {
            return Err(RenormError::Precondition(format!("{} may vanish on the support", f.entry)));
        }
    }
    let integrand = |x: &[f64]| -> f64 {
        let mut v = phi.value(x);
        if v == 0.0 {
            return 0.0;
        }
        for (f, &k) in product.factors.iter().zip(targets) {
            let xs: Vec<f64> = f.vars.iter().map(|&i| x[i]).collect();
            v *= f.entry.value(&xs).powi(k as i32);
        }
        v
    };
    let lo: Vec<f64> = sup.iter().map(|s| s.0).collect();
    let hi: Vec<f64> = sup.iter().map(|s| s.1).collect();
    let no_breaks = |_: usize, _: &[f64]| Vec::new();
    let qcfg = QuadratureConfig { tol: cfg.tol.min(1e-11), ..*cfg };
    let value = integrate_nested(&integrand, &lo, &hi, &no_breaks, &qcfg).map_err(DistError::from)?;
    let abs = |x: &[f64]| integrand(x).abs();
    let l1 = integrate_nested(&abs, &lo, &hi, &no_breaks, &qcfg).map_err(DistError::from)?;
    Ok((value, l1))
}

/// Renormalized value against direct quadrature for supports off the zero sets.
pub fn check_extension_with(
    product: &PowerProduct,
    targets: &[i64],
    phi: Arc<dyn SmoothFn>,
    cfg: &QuadratureConfig,
    tol: f64,
) -> Result<ExtensionReport, RenormError> {
    let (direct, l1) = direct_integral(product, targets, phi.as_ref(), cfg)?;
    let r = renormalize_with(product, targets, phi, cfg)?;
    let diff = (r.value - direct).norm();
    let scale = l1.max(f64::MIN_POSITIVE);
    Ok(ExtensionReport { renormalized: r.value, direct, diff, scale, tol, pass: diff <= tol * scale || diff == 0.0 })
}

pub fn check_extension(req: &RenormRequest, tol: f64) -> Result<ExtensionReport, RenormError> {
    check_extension_with(&req.product, &req.targets, Arc::new(req.phi.clone()), &req.quadrature, tol)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FactorizationReport {
    pub joint: Complex64,
    pub left: Complex64,
    pub right: Complex64,
    pub rel_err: f64,
    pub tol: f64,
    pub pass: bool,
}

/// Product of two requests on disjoint variable blocks.
pub fn tensor_product(a: &PowerProduct, b: &PowerProduct) -> PowerProduct {
    let mut factors = a.factors.clone();
    factors.extend(b.factors.iter().map(|f| PowerFactor {
        entry: f.entry.clone(),
        vars: f.vars.iter().map(|v| v + a.nvars).collect(),
    }));
    PowerProduct { nvars: a.nvars + b.nvars, factors }
}

/// `R(prod f^k prod g^l)(phi_A x phi_B)` against `R(prod f^k)(phi_A) R(prod g^l)(phi_B)`.
pub fn check_tensor_factorization_with(
    a: (&PowerProduct, &[i64], Arc<dyn SmoothFn>),
    b: (&PowerProduct, &[i64], Arc<dyn SmoothFn>),
    cfg: &QuadratureConfig,
    tol: f64,
) -> Result<FactorizationReport, RenormError> {
    let joint_product = tensor_product(a.0, b.0);
    let targets: Vec<i64> = a.1.iter().chain(b.1).copied().collect();
    let phi: Arc<dyn SmoothFn> = Arc::new(Tensor { left: a.2.clone(), right: b.2.clone() });
    let joint = renormalize_with(&joint_product, &targets, phi, cfg)?.value;
    let left = renormalize_with(a.0, a.1, a.2, cfg)?.value;
    let right = renormalize_with(b.0, b.1, b.2, cfg)?.value;
    let prod = left * right;
    let rel_err = (joint - prod).norm() / prod.norm().max(f64::MIN_POSITIVE);
    Ok(FactorizationReport { joint, left, right, rel_err, tol, pass: rel_err <= tol || joint == prod })
}

pub fn check_tensor_factorization(
    a: &RenormRequest,
    b: &RenormRequest,
    tol: f64,
) -> Result<FactorizationReport, RenormError> {
    check_tensor_factorization_with(
        (&a.product, &a.targets, Arc::new(a.phi.clone())),
        (&b.product, &b.targets, Arc::new(b.phi.clone())),
        &a.quadrature,
        tol,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{BumpFactor, CatalogEntry};

    fn req(entry: CatalogEntry, k: i64, phi: TestFunction) -> RenormRequest {
        RenormRequest { product: PowerProduct::single(entry), targets: vec![k], phi, quadrature: QuadratureConfig::default() }
    }

    #[test]
    fn symmetric_bump_gives_delta_term() {
        let phi = TestFunction::bump(&[0.0], &[1.0]);
        let r = renormalize(&req(CatalogEntry::Linear, -1, phi)).unwrap();
        assert!((r.value - Complex64::new(0.0, -std::f64::consts::PI)).norm() < 1e-8, "{}", r.value);
        assert!(r.singular_size() < 1e-9);
    }

    #[test]
    fn off_support_is_plain_integral() {
        let phi = TestFunction::new(vec![BumpFactor::with_poly(vec![1.0, 1.0], 1.5, 0.5)]);
        let rep = check_extension(&req(CatalogEntry::Linear, -2, phi), 1e-8).unwrap();
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn zero_test_function() {
        let phi = TestFunction::new(vec![BumpFactor::with_poly(vec![0.0], 1.5, 0.5)]);
        let rep = check_extension(&req(CatalogEntry::Linear, -1, phi), 1e-8).unwrap();
        assert_eq!(rep.direct, 0.0);
        assert_eq!(rep.renormalized, Complex64::new(0.0, 0.0));
        assert!(rep.pass);
    }

    #[test]
    fn json_shape() {
        let phi = TestFunction::bump(&[0.0], &[1.0]);
        let r = renormalize(&req(CatalogEntry::Linear, -1, phi)).unwrap();
        let v: serde_json::Value = serde_json::to_value(RenormResult { germ: None, ..r }).unwrap();
        assert!(v["value"].as_array().unwrap().len() == 2);
        assert!(v["singular"].is_array() && v["meta"]["radius"].is_number());
    }
}
