use merorenorm::dist::CatalogEntry;
use merorenorm::microlocal::{
    check_sum_polarization, hat_plus, hat_plus_sampled, is_polarized, lambda_membership, run_polarization_batch, Base,
    BatchConfig, CausalSite, ConeCell, CotangentElement, Fiber,
};
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn random_point(rng: &mut ChaCha8Rng, dim: usize) -> Vec<BigRational> {
    (0..dim).map(|_| q(rng.gen_range(-6..=6), rng.gen_range(1..=3))).collect()
}

#[test]
fn causal_order_antisymmetric_and_transitive_on_rationals() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for d in [1, 2] {
        let s = CausalSite::new(d);
        let pts: Vec<_> = (0..40).map(|_| random_point(&mut rng, d + 1)).collect();
        for x in &pts {
            for y in &pts {
                if s.causal_leq(x, y) && s.causal_leq(y, x) {
                    assert_eq!(x, y);
                }
                for z in &pts {
                    if s.causal_leq(x, y) && s.causal_leq(y, z) {
                        assert!(s.causal_leq(x, z));
                    }
                }
            }
        }
    }
}

#[test]
fn union_of_polarized_configurations_is_polarized() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let site = CausalSite::new(1);
    let mut checked = 0;
    while checked < 500 {
        let pool: Vec<Vec<BigRational>> = (0..3).map(|_| random_point(&mut rng, 2)).collect();
        let mut draw = || -> Vec<CotangentElement<BigRational>> {
            (0..rng.gen_range(1..=4))
                .map(|_| {
                    let x = pool[rng.gen_range(0..3)].clone();
                    let xi = (0..2).map(|_| q(rng.gen_range(-3..=3), 1)).collect();
                    CotangentElement::new(x, xi)
                })
                .collect()
        };
        let (a, b) = (draw(), draw());
        if is_polarized(&site, &a, false) && is_polarized(&site, &b, false) {
            let union: Vec<_> = a.iter().chain(&b).cloned().collect();
            assert!(is_polarized(&site, &union, false), "{a:?} {b:?}");
            checked += 1;
        }
    }
}

#[test]
fn polarized_sum_batches() {
    for d in [1, 2] {
        let cfg = BatchConfig { space_dim: d, cases: 2000, seed: 42, ..Default::default() };
        let r = run_polarization_batch(&cfg);
        assert!(r.pass(), "{:?}", r.counterexamples.first());
        assert_eq!(r.admissible, 2000);
        let ctl = run_polarization_batch(&BatchConfig { control: true, ..cfg });
        assert!(ctl.nonzero_sum_failures > 0);
    }
}

#[test]
fn sum_report_rejects_mismatched_lengths() {
    let site = CausalSite::new(1);
    let e = CotangentElement::new(vec![0.0, 0.0], vec![1.0, 0.0]);
    assert!(check_sum_polarization(&site, &[e.clone()], &[e.clone(), e]).is_err());
}

/// Unit directions of `a df(y)` over random `y` within `eps` of `x`; the
/// point belongs to the limit set when some direction matches `xi`.
fn sequence_search(entry: &CatalogEntry, x: &[f64], xi: &[f64], rng: &mut ChaCha8Rng) -> bool {
    if entry.value(x).abs() > 1e-12 {
        return false;
    }
    let nx = xi.iter().map(|c| c * c).sum::<f64>().sqrt();
    if nx == 0.0 {
        return false;
    }
    let mut best = -1.0f64;
    for _ in 0..20_000 {
        let y: Vec<f64> = x.iter().map(|c| c + 1e-4 * rng.gen_range(-1.0..1.0)).collect();
        let g = entry.gradient(&y);
        let ng = g.iter().map(|c| c * c).sum::<f64>().sqrt();
        if ng > 0.0 {
            best = best.max(g.iter().zip(xi).map(|(a, b)| a * b).sum::<f64>() / (ng * nx));
        }
    }
    best > 1.0 - 1e-4
}

#[test]
fn lambda_membership_matches_sequence_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let cases: Vec<(CatalogEntry, Vec<Vec<f64>>)> = vec![
        (CatalogEntry::Linear, vec![vec![0.0], vec![0.5]]),
        (CatalogEntry::Square, vec![vec![0.0], vec![-1.0]]),
        (CatalogEntry::LightCone, vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![0.5, -0.5], vec![-2.0, 2.0], vec![1.0, 0.0]]),
    ];
    for (entry, points) in cases {
        for x in points {
            let mut xis: Vec<Vec<f64>> = (0..12).map(|_| (0..x.len()).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
            let g = entry.gradient(&x);
            xis.push(g.iter().map(|c| 0.7 * c).collect());
            xis.push(g.iter().map(|c| -0.7 * c).collect());
            for xi in xis {
                let exact = lambda_membership(&entry, &x, &xi).unwrap();
                let oracle = sequence_search(&entry, &x, &xi, &mut rng);
                assert_eq!(exact, oracle, "{entry} at {x:?}, {xi:?}");
            }
        }
    }
}

#[test]
fn graph_sum_at_zero_time_covector_is_lambda() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let entries = [
        CatalogEntry::Linear,
        CatalogEntry::Square,
        CatalogEntry::LightCone,
        CatalogEntry::Monomial { exponents: vec![2, 1] },
        CatalogEntry::Monomial { exponents: vec![1, 1, 3] },
    ];
    for entry in entries {
        let n = entry.dim();
        let cell = hat_plus(&ConeCell::boundary_value(n + 1), &ConeCell::graph_conormal(entry.clone())).unwrap();
        for _ in 0..400 {
            // coordinates from {-1, 0, 1, 1/2} so zero sets and critical points are hit
            let y: Vec<f64> = (0..n).map(|_| [-1.0, 0.0, 1.0, 0.5][rng.gen_range(0..4)]).collect();
            let eta: Vec<f64> = (0..n).map(|_| [-1.0, 0.0, 1.0, 2.0][rng.gen_range(0..4)]).collect();
            let mut x = vec![0.0];
            x.extend(&y);
            let mut xi = vec![0.0];
            xi.extend(&eta);
            assert_eq!(
                cell.contains(&x, &xi).unwrap(),
                lambda_membership(&entry, &y, &eta).unwrap(),
                "{entry} y={y:?} eta={eta:?}"
            );
        }
    }
}

#[test]
fn transverse_sum_matches_closed_form() {
    // conormal of {x0 = 0} and the constant ray field (0, 1)
    let c1 = ConeCell::Polyhedral { base: Base::Hyperplane { dim: 2, axis: 0 }, fiber: Fiber::Conormal };
    let c2 = ConeCell::Polyhedral { base: Base::Full { dim: 2 }, fiber: Fiber::Rays { rays: vec![vec![0.0, 1.0]] } };
    let s = hat_plus(&c1, &c2).unwrap();
    let closed = |x: &[f64], xi: &[f64]| -> bool {
        let nonzero = xi[0] != 0.0 || xi[1] != 0.0;
        if x[0] == 0.0 {
            // (a, 0) | (0, b > 0) | (a, b > 0)
            nonzero && xi[1] >= 0.0
        } else {
            xi[0] == 0.0 && xi[1] > 0.0
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..2000 {
        let x = [[0.0, 0.5, -1.0][rng.gen_range(0..3)], rng.gen_range(-1.0..1.0)];
        let xi = [[0.0, 1.0, -1.0, 2.5][rng.gen_range(0..4)], [0.0, 1.0, -1.0, 0.5][rng.gen_range(0..4)]];
        assert_eq!(s.contains(&x, &xi).unwrap(), closed(&x, &xi), "{x:?} {xi:?}");
    }
    // the sampled closure finds nothing outside the exact cell
    let sampled = hat_plus_sampled(&c1, &c2, &[0.0, 0.3], 1).unwrap();
    for d in &sampled.directions {
        assert!(s.contains(&[0.0, 0.3], d).unwrap(), "{d:?}");
    }
}

#[test]
fn sampled_closure_finds_limit_rays() {
    let c1 = ConeCell::boundary_value(2);
    let c2 = ConeCell::graph_conormal(CatalogEntry::Square);
    let sampled = hat_plus_sampled(&c1, &c2, &[0.0, 0.0], 3).unwrap();
    for xi in [[0.0, 1.0], [0.0, -1.0], [1.0, 0.3], [-1.0, 0.7]] {
        assert!(sampled.contains(&xi, 2e-2), "{xi:?}");
    }
    let exact = hat_plus(&c1, &c2).unwrap();
    for xi in [[0.0, 1.0], [0.0, -1.0], [1.0, 0.3], [-1.0, 0.7]] {
        assert!(exact.contains(&[0.0, 0.0], &xi).unwrap());
    }
}

#[test]
fn unsupported_pairs_are_reported() {
    let lambda = ConeCell::Lambda { entry: CatalogEntry::Linear };
    assert!(hat_plus(&lambda, &lambda).is_err());
    assert!(hat_plus(&ConeCell::boundary_value(2), &ConeCell::boundary_value(3)).is_err());
}
