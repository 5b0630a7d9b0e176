//! Named check suites for `merorenorm check`.

use std::f64::consts::PI;

use merorenorm::dist::{BumpFactor, CatalogEntry, PowerProduct, SmoothFn, TestFunction};
use merorenorm::germ::corpus::check_corpus;
use merorenorm::microlocal::{run_polarization_batch, BatchConfig};
use merorenorm::qft::{
    check_covariance, check_qft_factorization, feynman_relation_check, renormalize_amplitude, shipped_factorization,
    AmplitudeOptions, AmplitudeSpec, Edge, FactorizationOptions, Isometry, ProductTest, PropagatorModel, Spacetime,
};
use merorenorm::quad::QuadratureConfig;
use merorenorm::renorm::{check_extension, renormalize, RenormRequest};
use merorenorm::Complex64;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

pub const SUITES: &[&str] = &[
    "germ",
    "renorm",
    "polarization",
    "synge",
    "feynman",
    "qft-factorization-d1",
    "qft-factorization-d2",
    "covariance",
    "holomorphy",
];

#[derive(Debug, Serialize)]
pub struct CaseReport {
    pub name: String,
    pub pass: bool,
    pub detail: Value,
}

#[derive(Debug, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub pass: bool,
    pub cases: Vec<CaseReport>,
}

/// Settings shared by every suite.
pub struct SuiteParams {
    pub seed: u64,
    pub tol: Option<f64>,
    pub quadrature: QuadratureConfig,
}

fn case<T: Serialize, E: std::fmt::Display>(name: &str, r: Result<T, E>, pass: impl Fn(&T) -> bool) -> CaseReport {
    match r {
        Ok(v) => CaseReport {
            name: name.into(),
            pass: pass(&v),
            detail: serde_json::to_value(&v).unwrap_or_else(|e| json!({ "serialize_error": e.to_string() })),
        },
        Err(e) => CaseReport { name: name.into(), pass: false, detail: json!({ "error": e.to_string() }) },
    }
}

pub fn run(suite: &str, p: &SuiteParams) -> Option<SuiteReport> {
    let cases = match suite {
        "germ" => germ(p),
        "renorm" => renorm(p),
        "polarization" => polarization(p),
        "synge" => synge(p),
        "feynman" => feynman(p),
        "qft-factorization-d1" => factorization(Spacetime::Line, p),
        "qft-factorization-d2" => factorization(Spacetime::Minkowski, p),
        "covariance" => covariance(p),
        "holomorphy" => holomorphy(p),
        _ => return None,
    };
    let pass = cases.iter().all(|c| c.pass);
    Some(SuiteReport { suite: suite.into(), pass, cases })
}

fn germ(p: &SuiteParams) -> Vec<CaseReport> {
    let r = check_corpus(p.seed, 200, 100);
    vec![CaseReport { name: "corpus".into(), pass: r.pass(), detail: serde_json::to_value(&r).unwrap_or(Value::Null) }]
}

fn renorm(p: &SuiteParams) -> Vec<CaseReport> {
    let tol = p.tol.unwrap_or(1e-6);
    let sym = TestFunction::new(vec![BumpFactor::with_poly(vec![1.0, 0.0, -0.4], 0.0, 0.8)]);
    let req = |entry: CatalogEntry, k: i64, phi: TestFunction| RenormRequest {
        product: PowerProduct::single(entry),
        targets: vec![k],
        phi,
        quadrature: p.quadrature,
    };
    // the principal value vanishes for an even test function
    let expected = Complex64::new(0.0, -PI * sym.value(&[0.0]));
    let mut out = vec![case("linear_minus_one_symmetric", renormalize(&req(CatalogEntry::Linear, -1, sym)), |r| {
        (r.value - expected).norm() <= tol
    })];
    let away = TestFunction::new(vec![BumpFactor::with_poly(vec![1.0, 0.2], 1.5, 0.5)]);
    for entry in [CatalogEntry::Linear, CatalogEntry::Square] {
        for k in [-1, -2] {
            let name = format!("extension_{entry}_{k}");
            out.push(case(&name, check_extension(&req(entry.clone(), k, away.clone()), tol), |r| r.pass));
        }
    }
    out
}

fn polarization(p: &SuiteParams) -> Vec<CaseReport> {
    let mut out = Vec::new();
    for d in [1, 2] {
        for control in [false, true] {
            let cfg = BatchConfig { space_dim: d, cases: 2000, seed: p.seed, control, ..Default::default() };
            let mut r = run_polarization_batch(&cfg);
            r.counterexamples.truncate(3);
            let name = format!("{}_1+{d}d", if control { "control" } else { "admissible" });
            out.push(CaseReport { name, pass: r.pass(), detail: serde_json::to_value(&r).unwrap_or(Value::Null) });
        }
    }
    out
}

fn synge(p: &SuiteParams) -> Vec<CaseReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut q = || BigRational::new(rng.gen_range(-50i64..=50).into(), rng.gen_range(1i64..=9).into());
    [Spacetime::Line, Spacetime::Minkowski]
        .into_iter()
        .map(|st| {
            let failures = (0..100)
                .filter(|_| {
                    let x: Vec<BigRational> = (0..st.dim()).map(|_| q()).collect();
                    let y: Vec<BigRational> = (0..st.dim()).map(|_| q()).collect();
                    !st.gradient_identity(&x, &y)
                })
                .count();
            CaseReport {
                name: format!("gradient_identity_d{}", st.dim()),
                pass: failures == 0,
                detail: json!({ "pairs": 100, "failures": failures }),
            }
        })
        .collect()
}

fn feynman(p: &SuiteParams) -> Vec<CaseReport> {
    [Spacetime::Line, Spacetime::Minkowski]
        .into_iter()
        .map(|st| {
            let r = feynman_relation_check(st, &PropagatorModel::default(), 500, p.seed);
            CaseReport {
                name: format!("relation_d{}", st.dim()),
                pass: r.pass(),
                detail: serde_json::to_value(&r).unwrap_or(Value::Null),
            }
        })
        .collect()
}

fn amplitude_options(p: &SuiteParams) -> AmplitudeOptions {
    AmplitudeOptions { quadrature: p.quadrature, seed: p.seed, ..Default::default() }
}

fn factorization(st: Spacetime, p: &SuiteParams) -> Vec<CaseReport> {
    let (spec, block, phi) = shipped_factorization(st);
    let mut opts = FactorizationOptions::default();
    opts.amplitude.quadrature = p.quadrature;
    opts.amplitude.seed = p.seed;
    if let Some(t) = p.tol {
        opts.tol = t;
    }
    let r = check_qft_factorization(st, &PropagatorModel::default(), &spec, &block, &phi, &opts);
    vec![case("two_blocks_with_bridge", r, |r| r.pass)]
}

fn pair(mult: u32) -> AmplitudeSpec {
    AmplitudeSpec { vertices: 2, edges: vec![Edge { i: 1, j: 2, mult }] }
}

fn covariance(p: &SuiteParams) -> Vec<CaseReport> {
    let st = Spacetime::Minkowski;
    let phi = ProductTest {
        vertices: vec![
            TestFunction::new(vec![BumpFactor::with_poly(vec![1.0, 0.3], 0.1, 0.6), BumpFactor::bump(-0.2, 0.5)]),
            TestFunction::new(vec![BumpFactor::bump(0.3, 0.5), BumpFactor::with_poly(vec![0.7, -0.2], 0.0, 0.7)]),
        ],
    };
    let opts = amplitude_options(p);
    let cases = [
        ("translation", Isometry::Translation { by: vec![1.0, 0.0] }, 1e-12),
        ("boost_0", Isometry::Boost { rapidity: 0.0 }, 1e-12),
        ("boost_0.5", Isometry::Boost { rapidity: 0.5 }, 1e-8),
    ];
    cases
        .into_iter()
        .map(|(name, g, tol)| {
            let tol = p.tol.unwrap_or(tol);
            case(name, check_covariance(st, &PropagatorModel::default(), &pair(1), &phi, &g, tol, &opts), |r| r.pass)
        })
        .collect()
}

#[derive(Serialize)]
struct Holomorphy {
    value: Complex64,
    stderr: Option<f64>,
    singular_size: f64,
    bound: f64,
}

fn holomorphy(p: &SuiteParams) -> Vec<CaseReport> {
    let tol = p.tol.unwrap_or(1e-8);
    let opts = amplitude_options(p);
    let line = |c: f64, w: f64, poly: Vec<f64>| TestFunction::new(vec![BumpFactor::with_poly(poly, c, w)]);
    let cases = [
        (
            "pair_d2",
            Spacetime::Minkowski,
            pair(2),
            ProductTest {
                vertices: vec![TestFunction::bump(&[0.0, 0.0], &[0.5, 0.5]), TestFunction::bump(&[1.5, -1.5], &[0.4, 0.5])],
            },
        ),
        (
            "triangle_d1",
            Spacetime::Line,
            AmplitudeSpec {
                vertices: 3,
                edges: vec![Edge { i: 1, j: 2, mult: 1 }, Edge { i: 2, j: 3, mult: 2 }, Edge { i: 1, j: 3, mult: 1 }],
            },
            ProductTest { vertices: vec![line(0.0, 0.4, vec![1.0]), line(1.2, 0.4, vec![1.0, 0.5]), line(2.5, 0.5, vec![1.0])] },
        ),
    ];
    cases
        .into_iter()
        .map(|(name, st, spec, phi)| {
            let r = renormalize_amplitude(st, &PropagatorModel::default(), &spec, &phi, &opts).map(|r| Holomorphy {
                value: r.value,
                stderr: r.stderr,
                singular_size: r.singular_size(),
                bound: tol * r.value.norm(),
            });
            case(name, r, |h| h.singular_size <= h.bound)
        })
        .collect()
}
