//! Randomized checks of the polarized-sum theorem on small exact configurations.

use num_rational::BigRational;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_sum_polarization, is_polarized, CausalSite, CotangentElement, ElementSpec, Scalar, SumReport};

const MAX_TRIES: usize = 500;
const MAX_DUMPS: usize = 5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BatchConfig {
    pub space_dim: usize,
    pub cases: usize,
    pub max_points: usize,
    pub seed: u64,
    /// Draw deliberately inadmissible pairs (`v` not strictly polarized).
    pub control: bool,
}

impl Default for BatchConfig {
    fn default() -> Self {
        BatchConfig { space_dim: 1, cases: 10_000, max_points: 6, seed: 0, control: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub u: Vec<ElementSpec>,
    pub v: Vec<ElementSpec>,
    pub report: SumReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub config: BatchConfig,
    /// Cases for which a pair of the requested kind was drawn.
    pub generated: usize,
    pub admissible: usize,
    pub nonzero_sum_failures: usize,
    /// Failures of the literal `max A = max B ∩ max C`.
    pub max_identity_failures: usize,
    pub cap_inclusion_failures: usize,
    pub union_identity_failures: usize,
    /// Sums that are not polarized, or not strictly polarized although `u` is.
    pub strict_failures: usize,
    pub counterexamples: Vec<Counterexample>,
}

impl BatchReport {
    /// Admissible batches pass without failures; control batches pass when a
    /// counterexample was found.
    pub fn pass(&self) -> bool {
        if self.config.control {
            self.nonzero_sum_failures > 0
        } else {
            self.generated == self.config.cases
                && self.nonzero_sum_failures == 0
                && self.cap_inclusion_failures == 0
                && self.union_identity_failures == 0
                && self.strict_failures == 0
        }
    }
}

type Config = Vec<CotangentElement<BigRational>>;

fn int_vec(rng: &mut ChaCha8Rng, n: usize, r: i64) -> Vec<i64> {
    (0..n).map(|_| rng.gen_range(-r..=r)).collect()
}

fn to_q(v: &[i64]) -> Vec<BigRational> {
    v.iter().map(|&n| BigRational::from_i64(n)).collect()
}

/// Zero, forward causal, or arbitrary covectors with small integer entries.
fn covector(rng: &mut ChaCha8Rng, dim: usize) -> Vec<i64> {
    match rng.gen_range(0..10) {
        0..=1 => vec![0; dim],
        2..=6 => {
            let mut v = int_vec(rng, dim, 2);
            let spatial: i64 = v[1..].iter().map(|c| c.abs()).sum();
            // |spatial|_1 bounds the Euclidean norm, so this is forward causal
            v[0] = spatial + rng.gen_range(0..=1);
            v
        }
        _ => int_vec(rng, dim, 2),
    }
}

fn base_points(rng: &mut ChaCha8Rng, site: &CausalSite, max_points: usize) -> Vec<Vec<i64>> {
    let n = rng.gen_range(1..=max_points);
    let pool: Vec<Vec<i64>> = (0..rng.gen_range(1..=n)).map(|_| int_vec(rng, site.dim(), 2)).collect();
    (0..n).map(|_| pool[rng.gen_range(0..pool.len())].clone()).collect()
}

fn covectors_with(
    rng: &mut ChaCha8Rng,
    site: &CausalSite,
    base: &[Vec<i64>],
    accept: impl Fn(&Config) -> bool,
) -> Option<Config> {
    (0..MAX_TRIES).find_map(|_| {
        let c: Config = base.iter().map(|x| CotangentElement::new(to_q(x), to_q(&covector(rng, site.dim())))).collect();
        accept(&c).then_some(c)
    })
}

fn nonzero(c: &Config) -> bool {
    c.iter().any(|e| e.xi.iter().any(|q| !Scalar::is_zero(q)))
}

fn draw(cfg: &BatchConfig, site: &CausalSite, index: usize) -> Option<(Config, Config)> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index as u64);
    for _ in 0..MAX_TRIES {
        let base = base_points(&mut rng, site, cfg.max_points.max(1));
        let Some(u) = covectors_with(&mut rng, site, &base, |c| nonzero(c) && is_polarized(site, c, false)) else {
            continue;
        };
        let v = if !cfg.control {
            covectors_with(&mut rng, site, &base, |c| nonzero(c) && is_polarized(site, c, true))
        } else if rng.gen_bool(0.5) {
            Some(u.iter().map(|e| CotangentElement::new(e.x.clone(), e.xi.iter().map(|q| -q.clone()).collect())).collect())
        } else {
            covectors_with(&mut rng, site, &base, |c| nonzero(c) && !is_polarized(site, c, true))
        };
        if let Some(v) = v {
            return Some((u, v));
        }
    }
    None
}

pub fn run_polarization_batch(cfg: &BatchConfig) -> BatchReport {
    let site = CausalSite::new(cfg.space_dim);
    let results: Vec<Option<(Config, Config, SumReport)>> = (0..cfg.cases)
        .into_par_iter()
        .map(|i| {
            let (u, v) = draw(cfg, &site, i)?;
            let r = check_sum_polarization(&site, &u, &v).expect("generated pairs share base points");
            Some((u, v, r))
        })
        .collect();
    let mut report = BatchReport {
        config: cfg.clone(),
        generated: 0,
        admissible: 0,
        nonzero_sum_failures: 0,
        max_identity_failures: 0,
        cap_inclusion_failures: 0,
        union_identity_failures: 0,
        strict_failures: 0,
        counterexamples: Vec::new(),
    };
    for (u, v, r) in results.into_iter().flatten() {
        report.generated += 1;
        report.admissible += r.admissible as usize;
        report.nonzero_sum_failures += !r.nonzero_sum as usize;
        report.max_identity_failures += !r.max_identity as usize;
        report.cap_inclusion_failures += !r.cap_inclusion as usize;
        report.union_identity_failures += !r.union_identity as usize;
        report.strict_failures += !(r.sum_polarized && (!r.u_strict || r.sum_strictly_polarized)) as usize;
        if !r.pass() && report.counterexamples.len() < MAX_DUMPS {
            report.counterexamples.push(Counterexample {
                u: u.iter().map(ElementSpec::from_element).collect(),
                v: v.iter().map(ElementSpec::from_element).collect(),
                report: r,
            });
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_batches() {
        for d in [1, 2] {
            let cfg = BatchConfig { space_dim: d, cases: 300, seed: 7, ..Default::default() };
            let r = run_polarization_batch(&cfg);
            assert!(r.pass(), "{r:?}");
            assert_eq!(r.admissible, 300);
            let ctl = run_polarization_batch(&BatchConfig { control: true, ..cfg });
            assert!(ctl.pass());
            assert_eq!(ctl.admissible, 0);
        }
    }

    #[test]
    fn deterministic() {
        let cfg = BatchConfig { cases: 50, seed: 3, control: true, ..Default::default() };
        assert_eq!(run_polarization_batch(&cfg), run_polarization_batch(&cfg));
    }
}
