use merorenorm::dist::{BumpFactor, SmoothFn, TestFunction};
use merorenorm::qft::*;
use merorenorm::quad::{integrate, integrate_nested, Node, QuadratureConfig};
use num_complex::Complex64;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn line(center: f64, hw: f64, poly: Vec<f64>) -> TestFunction {
    TestFunction::new(vec![BumpFactor::with_poly(poly, center, hw)])
}

fn pair(mult: u32) -> AmplitudeSpec {
    AmplitudeSpec { vertices: 2, edges: vec![Edge { i: 1, j: 2, mult }] }
}

fn tight() -> QuadratureConfig {
    QuadratureConfig::default()
}

#[test]
fn synge_examples_and_gradient_identity() {
    let st = Spacetime::Minkowski;
    assert_eq!(st.synge(&[0.0, 0.0], &[1.5, 0.0]).value, 2.25);
    assert_eq!(st.synge(&[0.0, 0.0], &[1.0, 1.0]).value, 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut q = || BigRational::new(rng.gen_range(-50i64..=50).into(), rng.gen_range(1i64..=9).into());
    for st in [Spacetime::Line, Spacetime::Minkowski] {
        for _ in 0..100 {
            let x: Vec<BigRational> = (0..st.dim()).map(|_| q()).collect();
            let y: Vec<BigRational> = (0..st.dim()).map(|_| q()).collect();
            assert!(st.gradient_identity(&x, &y), "{x:?} {y:?}");
        }
    }
}

#[test]
fn two_routes_agree_for_two_vertices() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let model = PropagatorModel::default();
    let mut worst = 0.0f64;
    for case in 0..50 {
        let st = if case % 2 == 0 { Spacetime::Line } else { Spacetime::Minkowski };
        let mult = rng.gen_range(1..=2);
        let bump = |rng: &mut ChaCha8Rng| {
            let factors = (0..st.dim())
                .map(|_| {
                    BumpFactor::with_poly(
                        vec![1.0, rng.gen_range(-0.5..0.5)],
                        rng.gen_range(-0.3..0.3),
                        rng.gen_range(0.4..0.8),
                    )
                })
                .collect();
            TestFunction::new(factors)
        };
        let phi = ProductTest { vertices: vec![bump(&mut rng), bump(&mut rng)] };
        let l = [c(rng.gen_range(1.0..3.0), rng.gen_range(-1.0..1.0))];
        let run = |route| {
            let opts = AmplitudeOptions { route: Some(route), ..Default::default() };
            regularized_amplitude(st, &model, &pair(mult), &l, &phi, &opts).unwrap().value
        };
        let (a, b) = (run(Route::TwoPoint), run(Route::Integrable));
        let rel = (a - b).norm() / a.norm().max(1.0);
        worst = worst.max(rel);
        assert!(rel <= 1e-6, "case {case} {st:?} mult {mult} lambda {l:?}: {a} vs {b}");
    }
    assert!(worst.is_finite());
}

/// Finite part of `int psi(w) |w|^{-2m} dw` with `psi(w) = int phi1(y + w) phi2(y) dy`,
/// plus `int psi(w) (v log w^2 + w0) dw`.
fn finite_part_oracle(phi1: &TestFunction, phi2: &TestFunction, m: u32, v: f64, w0: f64) -> f64 {
    let cfg = tight();
    let (a0, a1) = phi1.support()[0];
    let (b0, b1) = phi2.support()[0];
    let reach = (a1 - b0).abs().max((b1 - a0).abs());
    let d = |y: f64, k: u32| phi1.eval(&[y], &[k]).unwrap();
    let fact = |k: u32| (1..=k).map(|i| i as f64).product::<f64>();
    // phi1(y + w) + phi1(y - w) minus its Taylor terms below order 2m, over w^{2m}
    let cut = 0.05;
    let bracket = |y: f64, w: f64| -> f64 {
        if w < cut {
            (m..m + 5).map(|j| 2.0 * d(y, 2 * j) * w.powi(2 * (j - m) as i32) / fact(2 * j)).sum()
        } else {
            let taylor: f64 = (0..m).map(|j| 2.0 * d(y, 2 * j) * w.powi(2 * j as i32) / fact(2 * j)).sum();
            (phi1.value(&[y + w]) + phi1.value(&[y - w]) - taylor) / w.powi(2 * m as i32)
        }
    };
    // split at the support edges of phi1(y), phi1(y + w) and phi1(y - w)
    let inner_at = |w: f64, f: &dyn Fn(f64) -> f64| -> f64 {
        let mut cuts = vec![b0, b1];
        cuts.extend([a0, a1, a0 - w, a1 - w, a0 + w, a1 + w].into_iter().filter(|&t| b0 < t && t < b1));
        cuts.sort_by(f64::total_cmp);
        cuts.windows(2)
            .map(|p| integrate(|n: &Node| f(n.x) * phi2.value(&[n.x]), p[0], p[1], &cfg).unwrap().value)
            .sum()
    };
    let inner = |f: &dyn Fn(f64) -> f64| inner_at(0.0, f);
    // the overlap pattern of the shifted supports changes at these distances
    let mut outer = vec![cut, reach];
    outer.extend([a0 - b0, a0 - b1, a1 - b0, a1 - b1, b0 - a0, b1 - a0, b0 - a1, b1 - a1].into_iter().filter(|&t| cut < t && t < reach));
    outer.sort_by(f64::total_cmp);
    let over = |lo: f64, hi: f64, g: &dyn Fn(f64) -> f64| integrate(|n: &Node| g(n.x), lo, hi, &cfg).unwrap().value;
    let subtracted = over(0.0, cut, &|w| inner_at(w, &|y| bracket(y, w)))
        + outer.windows(2).map(|p| over(p[0], p[1], &|w| inner_at(w, &|y| bracket(y, w)))).sum::<f64>();
    let counter: f64 = (0..m)
        .map(|j| {
            let cj = 2.0 * inner(&|y| d(y, 2 * j)) / fact(2 * j);
            let e = 2 * j as i32 + 1 - 2 * m as i32;
            cj * reach.powi(e) / e as f64
        })
        .sum();
    let smooth = if v == 0.0 && w0 == 0.0 {
        0.0
    } else {
        let g = |w: f64| inner_at(w, &|y| phi1.value(&[y + w]) + phi1.value(&[y - w])) * (v * 2.0 * w.ln() + w0);
        over(0.0, cut, &g) + outer.windows(2).map(|p| over(p[0], p[1], &g)).sum::<f64>()
    };
    subtracted + counter + smooth
}

#[test]
fn two_point_finite_parts_on_the_line() {
    let phi1 = line(0.1, 0.7, vec![1.0, 0.4, -0.3]);
    let phi2 = line(-0.2, 0.6, vec![0.8, -0.2]);
    let phi = ProductTest { vertices: vec![phi1.clone(), phi2.clone()] };
    let opts = AmplitudeOptions::default();
    for m in [1, 2] {
        let r = renormalize_amplitude(Spacetime::Line, &PropagatorModel::default(), &pair(m), &phi, &opts).unwrap();
        let oracle = finite_part_oracle(&phi1, &phi2, m, 0.0, 0.0);
        assert!((r.value - oracle).norm() <= 1e-6 * oracle.abs().max(1.0), "m={m}: {} vs {oracle}", r.value);
    }
    let model = PropagatorModel { u: 1.0, v: 0.5, w: -0.25 };
    let r = renormalize_amplitude(Spacetime::Line, &model, &pair(1), &phi, &opts).unwrap();
    let oracle = finite_part_oracle(&phi1, &phi2, 1, 0.5, -0.25);
    assert!((r.value - oracle).norm() <= 1e-6 * oracle.abs().max(1.0), "{} vs {oracle}", r.value);
}

#[test]
fn off_diagonal_renormalization_is_plain_integral() {
    let phi1 = line(0.0, 0.5, vec![1.0, 0.3]);
    let phi2 = line(2.0, 0.6, vec![0.5, -0.2, 0.1]);
    let phi = ProductTest { vertices: vec![phi1.clone(), phi2.clone()] };
    let r = renormalize_amplitude(Spacetime::Line, &PropagatorModel::default(), &pair(2), &phi, &AmplitudeOptions::default())
        .unwrap();
    let f = |x: &[f64]| phi1.value(&x[..1]) * phi2.value(&x[1..]) / (x[0] - x[1]).powi(4);
    let plain = integrate_nested(&f, &[-0.5, 1.4], &[0.5, 2.6], &|_, _| vec![], &QuadratureConfig::default()).unwrap();
    assert!((r.value - plain).norm() <= 1e-6 * plain.abs(), "{} vs {plain}", r.value);
    assert!(r.singular_size() <= 1e-8 * plain.abs());
}

#[test]
fn zero_exponent_off_cone_is_ordinary_integral() {
    let phi1 = line(0.0, 0.5, vec![1.0]);
    let phi2 = line(1.5, 0.5, vec![1.0, 0.2]);
    let phi = ProductTest { vertices: vec![phi1.clone(), phi2.clone()] };
    let opts = AmplitudeOptions { route: Some(Route::OffCone), ..Default::default() };
    let v = regularized_amplitude(Spacetime::Line, &PropagatorModel::default(), &pair(1), &[c(0.0, 0.0)], &phi, &opts).unwrap();
    let f = |x: &[f64]| phi1.value(&x[..1]) * phi2.value(&x[1..]) / (x[0] - x[1]).powi(2);
    let plain = integrate_nested(&f, &[-0.5, 1.0], &[0.5, 2.0], &|_, _| vec![], &QuadratureConfig::default()).unwrap();
    assert!((v.value - plain).norm() <= 1e-8 * plain.abs());
}

#[test]
fn off_cone_amplitudes_have_no_poles() {
    let model = PropagatorModel::default();
    let opts = AmplitudeOptions::default();
    // two vertices in 1+1 dimensions, supports in separate null quadrants
    let phi = ProductTest {
        vertices: vec![TestFunction::bump(&[0.0, 0.0], &[0.5, 0.5]), TestFunction::bump(&[1.5, -1.5], &[0.4, 0.5])],
    };
    let r = renormalize_amplitude(Spacetime::Minkowski, &model, &pair(2), &phi, &opts).unwrap();
    assert!(r.singular_size() <= 1e-8 * r.value.norm(), "{} {}", r.singular_size(), r.value);
    // three vertices on a fixed Monte Carlo set
    let tri = AmplitudeSpec {
        vertices: 3,
        edges: vec![Edge { i: 1, j: 2, mult: 1 }, Edge { i: 2, j: 3, mult: 2 }, Edge { i: 1, j: 3, mult: 1 }],
    };
    let phi = ProductTest { vertices: vec![line(0.0, 0.4, vec![1.0]), line(1.2, 0.4, vec![1.0, 0.5]), line(2.5, 0.5, vec![1.0])] };
    let r = renormalize_amplitude(Spacetime::Line, &model, &tri, &phi, &opts).unwrap();
    assert!(r.singular_size() <= 1e-8 * r.value.norm(), "{} {}", r.singular_size(), r.value);
    assert!(r.stderr.unwrap() < r.value.norm());
}

#[test]
fn on_cone_three_vertices_unsupported() {
    let tri = AmplitudeSpec { vertices: 3, edges: vec![Edge { i: 1, j: 2, mult: 1 }, Edge { i: 2, j: 3, mult: 1 }] };
    let phi = ProductTest { vertices: vec![line(0.0, 1.0, vec![1.0]); 3] };
    let r = renormalize_amplitude(Spacetime::Line, &PropagatorModel::default(), &tri, &phi, &AmplitudeOptions::default());
    assert!(matches!(r, Err(QftError::Unsupported(_))));
    // below the integrability threshold on the line
    let r = regularized_amplitude(
        Spacetime::Line,
        &PropagatorModel::default(),
        &tri,
        &[c(0.4, 0.0), c(0.4, 0.0)],
        &phi,
        &AmplitudeOptions::default(),
    );
    assert!(matches!(r, Err(QftError::OutsideValidity(_))));
}

#[test]
fn factorization_with_one_block_tail() {
    let spec = AmplitudeSpec { vertices: 3, edges: vec![Edge { i: 1, j: 2, mult: 1 }, Edge { i: 1, j: 3, mult: 1 }] };
    let phi = ProductTest {
        vertices: vec![line(0.0, 0.5, vec![1.0, 0.3]), line(0.2, 0.6, vec![1.0]), line(2.5, 0.5, vec![1.0])],
    };
    let opts = FactorizationOptions { grid_level: 5, ..Default::default() };
    let r = check_qft_factorization(Spacetime::Line, &PropagatorModel::default(), &spec, &[1, 2], &phi, &opts).unwrap();
    assert!(r.pass, "{r:?}");
}

#[test]
fn factorization_in_two_dimensions() {
    let phi = ProductTest {
        vertices: vec![
            TestFunction::bump(&[0.0, 0.0], &[0.5, 0.5]),
            TestFunction::bump(&[0.2, 0.1], &[0.5, 0.5]),
            TestFunction::bump(&[2.5, 2.5], &[0.5, 0.5]),
            TestFunction::bump(&[2.6, 2.4], &[0.5, 0.4]),
        ],
    };
    let r = check_qft_factorization(
        Spacetime::Minkowski,
        &PropagatorModel::default(),
        &two_blocks_with_bridge(1),
        &[1, 2],
        &phi,
        &FactorizationOptions::default(),
    )
    .unwrap();
    assert!(r.pass, "{r:?}");
    assert!(r.joint_stderr.is_some());
}

#[test]
fn factorization_rejects_bad_layouts() {
    let model = PropagatorModel::default();
    let phi = ProductTest { vertices: (0..4).map(|k| line(3.0 * k as f64, 0.5, vec![1.0])).collect() };
    let opts = FactorizationOptions::default();
    // cross edge away from the anchors
    let spec = AmplitudeSpec { vertices: 4, edges: vec![Edge { i: 1, j: 2, mult: 1 }, Edge { i: 2, j: 4, mult: 1 }] };
    assert!(matches!(
        check_qft_factorization(Spacetime::Line, &model, &spec, &[1, 2], &phi, &opts),
        Err(QftError::Unsupported(_))
    ));
    // overlapping blocks
    let mut close = phi.clone();
    close.vertices[2] = line(0.3, 0.5, vec![1.0]);
    assert!(matches!(
        check_qft_factorization(Spacetime::Line, &model, &two_blocks_with_bridge(1), &[1, 2], &close, &opts),
        Err(QftError::Spec(_) | QftError::OutsideValidity(_))
    ));
}

fn minkowski_pair() -> ProductTest {
    ProductTest {
        vertices: vec![
            TestFunction::new(vec![BumpFactor::with_poly(vec![1.0, 0.3], 0.1, 0.6), BumpFactor::bump(-0.2, 0.5)]),
            TestFunction::new(vec![BumpFactor::bump(0.3, 0.5), BumpFactor::with_poly(vec![0.7, -0.2], 0.0, 0.7)]),
        ],
    }
}

#[test]
fn covariance_under_isometries() {
    let model = PropagatorModel::default();
    let opts = AmplitudeOptions::default();
    let st = Spacetime::Minkowski;
    let phi = minkowski_pair();
    let cases = [
        (Isometry::Translation { by: vec![1.0, 0.0] }, 1e-12),
        (Isometry::Boost { rapidity: 0.0 }, 0.0),
        (Isometry::Boost { rapidity: 0.5 }, 1e-8),
        (Isometry::Reflection, 1e-10),
    ];
    for (g, tol) in cases {
        let r = check_covariance(st, &model, &pair(1), &phi, &g, tol, &opts).unwrap();
        assert!(r.pass, "{g:?}: {r:?}");
    }
    let phi = ProductTest { vertices: vec![line(0.1, 0.6, vec![1.0, 0.5]), line(-0.3, 0.5, vec![1.0])] };
    for g in [Isometry::Translation { by: vec![0.75] }, Isometry::Reflection] {
        let r = check_covariance(Spacetime::Line, &model, &pair(2), &phi, &g, 1e-10, &opts).unwrap();
        assert!(r.pass, "{g:?}: {r:?}");
    }
    assert!(check_covariance(Spacetime::Line, &model, &pair(1), &phi, &Isometry::Boost { rapidity: 0.1 }, 1e-8, &opts).is_err());
}

#[test]
fn isometries_preserve_squared_distance() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let st = Spacetime::Minkowski;
    for g in [Isometry::Translation { by: vec![0.3, -1.0] }, Isometry::Boost { rapidity: 0.7 }, Isometry::Reflection] {
        for _ in 0..50 {
            let x: Vec<f64> = (0..2).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let y: Vec<f64> = (0..2).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let before = st.synge(&x, &y).value;
            let after = st.synge(&g.apply(st, &x).unwrap(), &g.apply(st, &y).unwrap()).value;
            assert!((before - after).abs() <= 1e-12 * (1.0 + before.abs()));
        }
    }
}

#[test]
fn cover_membership_matches_pairwise_distances() {
    let cover = cover_regions(2).unwrap();
    assert_eq!(cover.regions.len(), 2);
    assert!(cover.members(&[vec![0.0], vec![0.0]]).is_empty());
    let cover3 = cover_regions(3).unwrap();
    let triple = [vec![0.0, 0.0], vec![1.0, 1.0], vec![2.0, 2.0]];
    for r in cover3.regions.iter().filter(|r| r.len() == 1) {
        assert!(cover3.contains(r, &triple));
    }
    let merged = [vec![0.0], vec![0.0], vec![1.0]];
    assert!(cover3.contains(&[1, 2], &merged));
    assert!(!cover3.contains(&[1], &merged));

    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for n in 2..=5 {
        let cover = cover_regions(n).unwrap();
        assert_eq!(cover.regions.len(), (1 << n) - 2);
        for _ in 0..200 {
            // coarse grid so coincidences are common
            let config: Vec<Vec<f64>> = (0..n).map(|_| (0..2).map(|_| rng.gen_range(0..3) as f64).collect()).collect();
            for r in &cover.regions {
                let brute = (1..=n).filter(|i| r.contains(i)).all(|i| {
                    (1..=n).filter(|j| !r.contains(j)).all(|j| config[i - 1] != config[j - 1])
                });
                assert_eq!(cover.contains(r, &config), brute, "{r:?} {config:?}");
            }
        }
    }
    assert!(cover_regions(1).is_err());
}

#[test]
fn propagator_relation_is_feynman() {
    for st in [Spacetime::Line, Spacetime::Minkowski] {
        let r = feynman_relation_check(st, &PropagatorModel::default(), 300, 1);
        assert!(r.pass(), "{st:?}: {r:?}");
    }
    let r = feynman_relation_check(Spacetime::Minkowski, &PropagatorModel { u: 0.0, v: 0.0, w: 1.0 }, 10, 1);
    assert!(r.pass());
}
