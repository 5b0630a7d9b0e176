//! Random germ corpora and the exact projection invariants checked on them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{project_pi, LinearForm, MeroGerm, Poles};
use crate::field::GaussRat;
use crate::poly::Poly;

pub type G = MeroGerm<GaussRat>;

fn coeff(rng: &mut ChaCha8Rng) -> GaussRat {
    let re = GaussRat::frac(rng.gen_range(-6..=6), rng.gen_range(1..=4));
    if rng.gen_bool(0.3) {
        re + GaussRat::frac(rng.gen_range(-3..=3), rng.gen_range(1..=3)) * GaussRat::i()
    } else {
        re
    }
}

fn form(rng: &mut ChaCha8Rng, p: usize) -> LinearForm {
    loop {
        let raw: Vec<i64> = (0..p).map(|_| rng.gen_range(-2..=2)).collect();
        if let Ok(f) = LinearForm::new(&raw) {
            return f;
        }
    }
}

/// A germ at the origin with up to `p` random poles and a numerator of
/// degree at most 3.
pub fn random_germ(rng: &mut ChaCha8Rng, p: usize) -> G {
    let terms: Vec<(Vec<u32>, GaussRat)> =
        (0..rng.gen_range(1..=4)).map(|_| ((0..p).map(|_| rng.gen_range(0..=1)).collect(), coeff(rng))).collect();
    let numerator = Poly::from_terms(p, terms);
    let mut poles = Poles::new();
    for _ in 0..rng.gen_range(0..=p.min(3)) {
        *poles.entry(form(rng, p)).or_insert(0) += rng.gen_range(1..=2);
    }
    MeroGerm::new(vec![0; p], numerator, poles).expect("corpus germ")
}

/// A germ over a sub-multiset of the poles of `g`, so that linear
/// combinations with `g` stay on the same denominator.
pub fn partner(rng: &mut ChaCha8Rng, g: &G) -> G {
    let p = g.nvars();
    let terms: Vec<(Vec<u32>, GaussRat)> =
        (0..rng.gen_range(1..=4)).map(|_| ((0..p).map(|_| rng.gen_range(0..=1)).collect(), coeff(rng))).collect();
    let poles: Poles = g
        .poles()
        .iter()
        .map(|(f, &m)| (f.clone(), rng.gen_range(0..=m)))
        .filter(|&(_, m)| m > 0)
        .collect();
    MeroGerm::new(g.center().to_vec(), Poly::from_terms(p, terms), poles).expect("corpus germ")
}

pub fn corpus(seed: u64, count: usize) -> Vec<G> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let p = rng.gen_range(1..=3);
            random_germ(&mut rng, p)
        })
        .collect()
}

/// First violated invariant of the projection on `g`, if any.
pub fn invariant_failure(g: &G, other: &G, a: &GaussRat) -> Option<&'static str> {
    let Ok(d) = project_pi(g) else {
        return Some("projection error");
    };
    if !d.reassemble().same_function(g) {
        return Some("reassembly");
    }
    if !d.singular.iter().all(|t| t.is_orthogonal()) {
        return Some("orthogonality");
    }
    let Ok(again) = project_pi(&d.holomorphic_germ()) else {
        return Some("projection error");
    };
    if !again.singular.is_empty() || again.holomorphic != d.holomorphic {
        return Some("identity on holomorphic germs");
    }
    let Ok(sing) = project_pi(&d.singular_germ()) else {
        return Some("projection error");
    };
    if !sing.holomorphic.is_zero() {
        return Some("idempotence");
    }
    if other.nvars() == g.nvars() {
        let (Ok(o), Ok(lin)) = (project_pi(other), g.scale(a).add(other).and_then(|s| project_pi(&s))) else {
            return Some("projection error");
        };
        if lin.holomorphic != d.holomorphic.scale(a).add(&o.holomorphic) {
            return Some("linearity");
        }
    }
    None
}

/// `pi(f g) = pi(f) pi(g)` for `f`, `g` in disjoint variable blocks of sizes
/// `p` and `q`.
pub fn factorization_holds(f: &G, g: &G) -> bool {
    let (p, q) = (f.nvars(), g.nvars());
    let center = vec![0; p + q];
    let fe = f.embed(center.clone(), &(0..p).collect::<Vec<_>>()).expect("embed");
    let ge = g.embed(center, &(p..p + q).collect::<Vec<_>>()).expect("embed");
    let (Ok(pf), Ok(pg), Ok(pfg)) = (project_pi(&fe), project_pi(&ge), project_pi(&fe.mul(&ge).expect("product"))) else {
        return false;
    };
    pfg.holomorphic == pf.holomorphic.mul(&pg.holomorphic)
}

pub fn pair_corpus(seed: u64, count: usize) -> Vec<(G, G)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let p = rng.gen_range(1..=2);
            let q = rng.gen_range(1..=2);
            (random_germ(&mut rng, p), random_germ(&mut rng, q))
        })
        .collect()
}

pub fn scalar(rng: &mut ChaCha8Rng) -> GaussRat {
    coeff(rng)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusFailure {
    pub invariant: String,
    pub germ: String,
    pub other: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusReport {
    pub seed: u64,
    pub germs: usize,
    pub pairs: usize,
    pub failures: Vec<CorpusFailure>,
}

impl CorpusReport {
    pub fn pass(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Projection invariants on `germs` random germs and multiplicativity on
/// `pairs` variable-disjoint pairs.
pub fn check_corpus(seed: u64, germs: usize, pairs: usize) -> CorpusReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = Vec::new();
    for _ in 0..germs {
        let p = rng.gen_range(1..=3);
        let g = random_germ(&mut rng, p);
        let h = partner(&mut rng, &g);
        let a = scalar(&mut rng);
        if let Some(inv) = invariant_failure(&g, &h, &a) {
            failures.push(CorpusFailure { invariant: inv.into(), germ: g.to_string(), other: h.to_string() });
        }
    }
    for (f, g) in pair_corpus(seed ^ 1, pairs) {
        if !factorization_holds(&f, &g) {
            failures.push(CorpusFailure { invariant: "factorization".into(), germ: f.to_string(), other: g.to_string() });
        }
    }
    CorpusReport { seed, germs, pairs, failures }
}
