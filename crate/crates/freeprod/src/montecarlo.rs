//! Uniform sampling of homomorphisms `Γ → Sym(N)` and empirical statistics.
//!
//! Free products have independent coordinates: a uniform homomorphism is one
//! independent uniform permutation per free generator and one uniform
//! order-dividing-`q` permutation per cyclic factor. The latter is sampled
//! sequentially: take an unplaced point, draw its cycle length `d | q` with
//! probability `(N'-1)_{d-1} · h_q(N'-d) / h_q(N')`, fill the cycle with
//! uniformly chosen ordered points, repeat. Floating point appears only in
//! this module; all exact arithmetic stays in [`crate::exact`].

use crate::exact::hom_count;
use crate::group::{FactorSpec, Presentation, Syllable, Word};
use crate::numutil::{divisors, falling, rational_to_f64};
use num::rational::BigRational;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// A homomorphism `Γ → Sym(N)`: one permutation per generator, grouped by
/// factor, each stored as the image vector of `0..N`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hom {
    pub n: usize,
    pub perms: Vec<Vec<Vec<usize>>>,
}

impl Hom {
    pub fn identity(p: &Presentation, n: usize) -> Hom {
        let perms = p
            .factors()
            .iter()
            .map(|f| vec![(0..n).collect(); f.generator_count()])
            .collect();
        Hom { n, perms }
    }
}

/// Cycle-length distribution table for the sequential sampler of one `q`.
pub struct CycleLenTable {
    q: u64,
    divs: Vec<u64>,
    /// `probs[m][k]`: probability that the next point's cycle has length
    /// `divs[k]` when `m` points remain unplaced.
    probs: Vec<Vec<f64>>,
}

impl CycleLenTable {
    pub fn new(q: u64, n: usize) -> CycleLenTable {
        let divs = divisors(q);
        let mut probs = vec![Vec::new(); n + 1];
        for m in 1..=n as u64 {
            let total = hom_count(q, m);
            let row: Vec<f64> = divs
                .iter()
                .map(|&d| {
                    if d > m {
                        0.0
                    } else {
                        let w = falling(m as i64 - 1, d - 1) * hom_count(q, m - d);
                        rational_to_f64(&BigRational::new(w, total.clone()))
                    }
                })
                .collect();
            probs[m as usize] = row;
        }
        CycleLenTable { q, divs, probs }
    }
}

/// Exactly uniform over `{σ ∈ Sym(N) : σ^q = id}` (up to the 2^-53 rounding
/// of the tabulated cycle-length probabilities).
pub fn sample_order_divider<R: Rng>(table: &CycleLenTable, n: usize, rng: &mut R) -> Vec<usize> {
    debug_assert!(table.q >= 2);
    let mut sigma: Vec<usize> = (0..n).collect();
    let mut pool: Vec<usize> = (0..n).collect();
    while !pool.is_empty() {
        let m = pool.len();
        let u: f64 = rng.random();
        let row = &table.probs[m];
        let mut acc = 0.0;
        let mut pick = 0;
        for (k, pr) in row.iter().enumerate() {
            acc += pr;
            if u < acc || k + 1 == row.len() {
                pick = k;
                break;
            }
        }
        let d = table.divs[pick] as usize;
        let head = pool.swap_remove(0);
        let mut cycle = vec![head];
        for _ in 1..d {
            let idx = rng.random_range(0..pool.len());
            cycle.push(pool.swap_remove(idx));
        }
        for k in 0..d {
            sigma[cycle[k]] = cycle[(k + 1) % d];
        }
    }
    sigma
}

fn sample_uniform_perm<R: Rng>(n: usize, rng: &mut R) -> Vec<usize> {
    let mut v: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        v.swap(i, j);
    }
    v
}

/// One uniform homomorphism: independent coordinates per factor.
pub fn sample_hom<R: Rng>(
    p: &Presentation,
    n: usize,
    tables: &[Option<CycleLenTable>],
    rng: &mut R,
) -> Hom {
    let perms = p
        .factors()
        .iter()
        .zip(tables)
        .map(|(f, table)| match f {
            FactorSpec::Cyclic { .. } => {
                vec![sample_order_divider(table.as_ref().unwrap(), n, rng)]
            }
            FactorSpec::Free { rank } => {
                (0..*rank).map(|_| sample_uniform_perm(n, rng)).collect()
            }
        })
        .collect();
    Hom { n, perms }
}

pub fn cycle_length_tables(p: &Presentation, n: usize) -> Vec<Option<CycleLenTable>> {
    p.factors()
        .iter()
        .map(|f| match f {
            FactorSpec::Cyclic { order } => Some(CycleLenTable::new(*order as u64, n)),
            FactorSpec::Free { .. } => None,
        })
        .collect()
}

/// The image permutation of `word` under `hom`, as the map `i ↦ φ(γ)(i)`.
/// Panics if the word indexes factors the homomorphism does not have.
pub fn evaluate(hom: &Hom, word: &Word) -> Vec<usize> {
    let n = hom.n;
    let mut image: Vec<usize> = (0..n).collect();
    // φ(s1·s2···) applied to i is φ(s1)(φ(s2)(…)): fold right to left.
    for syl in word.syllables().iter().rev() {
        match syl {
            Syllable::Cyclic { factor, exp } => {
                let sigma = &hom.perms[*factor][0];
                for _ in 0..*exp {
                    for x in image.iter_mut() {
                        *x = sigma[*x];
                    }
                }
            }
            Syllable::Free { factor, letters } => {
                for l in letters.iter().rev() {
                    let sigma = &hom.perms[*factor][l.gen as usize];
                    if l.inverse {
                        let mut inv = vec![0; n];
                        for (i, &t) in sigma.iter().enumerate() {
                            inv[t] = i;
                        }
                        for x in image.iter_mut() {
                            *x = inv[*x];
                        }
                    } else {
                        for x in image.iter_mut() {
                            *x = sigma[*x];
                        }
                    }
                }
            }
        }
    }
    image
}

pub fn fix_count(perm: &[usize]) -> u64 {
    perm.iter().enumerate().filter(|(i, &x)| *i == x).count() as u64
}

/// Number of cycles of length exactly `l`.
pub fn cycle_count(perm: &[usize], l: usize) -> u64 {
    let mut seen = vec![false; perm.len()];
    let mut count = 0;
    for start in 0..perm.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut cur = start;
        while !seen[cur] {
            seen[cur] = true;
            cur = perm[cur];
            len += 1;
        }
        if len == l {
            count += 1;
        }
    }
    count
}

/// Empirical statistics of one integer-valued observable.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EmpiricalStats {
    pub trials: u64,
    pub mean: f64,
    pub variance: f64,
    pub stderr: f64,
    pub pmf: BTreeMap<u64, u64>,
    pub seed: u64,
}

impl EmpiricalStats {
    fn from_counts(pmf: BTreeMap<u64, u64>, trials: u64, seed: u64) -> EmpiricalStats {
        if trials == 0 {
            return EmpiricalStats { trials, mean: 0.0, variance: 0.0, stderr: 0.0, pmf, seed };
        }
        let t = trials as f64;
        let mean = pmf.iter().map(|(&v, &c)| v as f64 * c as f64).sum::<f64>() / t;
        let var = pmf
            .iter()
            .map(|(&v, &c)| (v as f64 - mean).powi(2) * c as f64)
            .sum::<f64>()
            / t;
        EmpiricalStats { trials, mean, variance: var, stderr: (var / t).sqrt(), pmf, seed }
    }
}

/// Estimates of `fix` and `cyc_L` for `L ≤ max_cycle_len`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EstimateReport {
    pub word: String,
    pub group: String,
    pub n: usize,
    pub fix: EmpiricalStats,
    pub cyc: BTreeMap<u64, EmpiricalStats>,
}

/// Deterministic given `(seed, trials)`: trial `t` draws from an independent
/// ChaCha stream with stream id `t`, so the aggregate is schedule-free.
pub fn estimate(
    p: &Presentation,
    word: &Word,
    n: usize,
    trials: u64,
    seed: u64,
    max_cycle_len: u64,
) -> EstimateReport {
    let tables = cycle_length_tables(p, n);
    let mut fix_pmf: BTreeMap<u64, u64> = BTreeMap::new();
    let mut cyc_pmfs: BTreeMap<u64, BTreeMap<u64, u64>> = BTreeMap::new();
    for l in 1..=max_cycle_len {
        cyc_pmfs.insert(l, BTreeMap::new());
    }
    for t in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(t.wrapping_add(1));
        let hom = sample_hom(p, n, &tables, &mut rng);
        let image = evaluate(&hom, word);
        *fix_pmf.entry(fix_count(&image)).or_insert(0) += 1;
        for l in 1..=max_cycle_len {
            let c = cycle_count(&image, l as usize);
            *cyc_pmfs.get_mut(&l).unwrap().entry(c).or_insert(0) += 1;
        }
    }
    EstimateReport {
        word: word.format(p),
        group: p.to_spec_string(),
        n,
        fix: EmpiricalStats::from_counts(fix_pmf, trials, seed),
        cyc: cyc_pmfs
            .into_iter()
            .map(|(l, pmf)| (l, EmpiricalStats::from_counts(pmf, trials, seed)))
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::parse_word;

    #[test]
    fn single_point_sampler_is_identity() {
        let table = CycleLenTable::new(5, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(sample_order_divider(&table, 1, &mut rng), vec![0]);
    }

    #[test]
    fn sampled_permutations_have_dividing_order() {
        for q in [2u64, 3, 4] {
            let table = CycleLenTable::new(q, 8);
            let mut rng = ChaCha8Rng::seed_from_u64(17);
            for _ in 0..200 {
                let sigma = sample_order_divider(&table, 8, &mut rng);
                // σ^q = id.
                let mut power: Vec<usize> = (0..8).collect();
                for _ in 0..q {
                    for x in power.iter_mut() {
                        *x = sigma[*x];
                    }
                }
                assert!(power.iter().enumerate().all(|(i, &x)| i == x), "q={q}");
            }
        }
    }

    #[test]
    fn trivial_word_evaluates_to_identity() {
        let p = Presentation::parse("C2*C3").unwrap();
        let w = parse_word("a^2", &p).unwrap();
        let tables = cycle_length_tables(&p, 6);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let hom = sample_hom(&p, 6, &tables, &mut rng);
        let image = evaluate(&hom, &w);
        assert_eq!(image, (0..6).collect::<Vec<_>>());
        // a^2 is also trivial pointwise on any sampled involution.
        let w2 = parse_word("a", &p).unwrap();
        let im1 = evaluate(&hom, &w2);
        let twice: Vec<usize> = (0..6).map(|i| im1[im1[i]]).collect();
        assert_eq!(twice, (0..6).collect::<Vec<_>>());
    }

    #[test]
    fn evaluation_matches_direct_composition() {
        let p = Presentation::parse("C3*F1").unwrap();
        let w = parse_word("a*b^-1*a", &p).unwrap();
        let tables = cycle_length_tables(&p, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let hom = sample_hom(&p, 5, &tables, &mut rng);
        let image = evaluate(&hom, &w);
        let a = &hom.perms[0][0];
        let b = &hom.perms[1][0];
        let mut binv = vec![0; 5];
        for (i, &t) in b.iter().enumerate() {
            binv[t] = i;
        }
        let direct: Vec<usize> = (0..5).map(|i| a[binv[a[i]]]).collect();
        assert_eq!(image, direct);
    }

    #[test]
    fn estimates_are_reproducible() {
        let p = Presentation::parse("C2*C3").unwrap();
        let w = parse_word("a*b", &p).unwrap();
        let r1 = estimate(&p, &w, 20, 300, 42, 2);
        let r2 = estimate(&p, &w, 20, 300, 42, 2);
        assert_eq!(r1, r2);
        assert_eq!(r1.fix.trials, 300);
    }

    #[test]
    fn zero_trials_is_fine() {
        let p = Presentation::parse("C2").unwrap();
        let w = parse_word("a", &p).unwrap();
        let r = estimate(&p, &w, 4, 0, 1, 1);
        assert_eq!(r.fix.trials, 0);
        assert!(r.fix.pmf.is_empty());
    }

    #[test]
    fn cycle_counts() {
        // 0→1→0, 2→2, 3→4→5→3.
        let perm = vec![1, 0, 2, 4, 5, 3];
        assert_eq!(fix_count(&perm), 1);
        assert_eq!(cycle_count(&perm, 1), 1);
        assert_eq!(cycle_count(&perm, 2), 1);
        assert_eq!(cycle_count(&perm, 3), 1);
        assert_eq!(cycle_count(&perm, 4), 0);
    }
}
