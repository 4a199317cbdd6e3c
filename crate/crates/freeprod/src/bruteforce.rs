//! Ground-truth oracle: exhaustive enumeration of `Hom(Γ, Sym(N))` for tiny
//! `N`, with exact statistics.

use crate::exact::hom_count;
use crate::group::{FactorSpec, Presentation, Word};
use crate::montecarlo::{cycle_count, evaluate, fix_count, Hom};
use crate::{Error, Result};
use num::rational::BigRational;
use num::traits::ToPrimitive;
use num::{BigInt, Zero};
use std::collections::BTreeMap;

pub const DEFAULT_CAP: u128 = 100_000_000;

/// Exact statistics of one word over the full homomorphism space.
#[derive(Debug, Clone, PartialEq)]
pub struct ExhaustiveStats {
    pub n: u64,
    pub total_homs: u128,
    pub fix_distribution: BTreeMap<u64, u128>,
    /// Moments `E[fix^r]` for `r = 1..=max_r`.
    pub moments: Vec<BigRational>,
    /// Distribution of `cyc_L` for `1 ≤ L ≤ max_cycle_len`.
    pub cyc_distributions: BTreeMap<u64, BTreeMap<u64, u128>>,
}

impl ExhaustiveStats {
    pub fn mean(&self) -> BigRational {
        self.moments[0].clone()
    }

    pub fn cyc_mean(&self, l: u64) -> BigRational {
        dist_moment(&self.cyc_distributions[&l], self.total_homs, 1)
    }
}

fn dist_moment(dist: &BTreeMap<u64, u128>, total: u128, r: u32) -> BigRational {
    let mut acc = BigInt::zero();
    for (&v, &c) in dist {
        acc += BigInt::from(v).pow(r) * BigInt::from(c);
    }
    BigRational::new(acc, BigInt::from(total))
}

/// Number of homomorphisms per factor.
fn factor_sizes(p: &Presentation, n: u64) -> Vec<u128> {
    p.factors()
        .iter()
        .map(|f| match f {
            FactorSpec::Cyclic { order } => {
                hom_count(*order as u64, n).to_u128().expect("cap check first")
            }
            FactorSpec::Free { rank } => {
                let fact: u128 = (1..=n as u128).product();
                fact.pow(*rank)
            }
        })
        .collect()
}

pub fn hom_space_size(p: &Presentation, n: u64) -> u128 {
    factor_sizes(p, n).iter().product()
}

/// All permutations of `0..n` with order dividing `q`, generated by cycle
/// structure rather than by filtering `Sym(N)`.
fn order_dividing_perms(q: u64, n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut sigma: Vec<usize> = (0..n).collect();
    let mut used = vec![false; n];
    fn rec(
        q: u64,
        n: usize,
        used: &mut Vec<bool>,
        sigma: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        let head = match used.iter().position(|&u| !u) {
            None => {
                out.push(sigma.clone());
                return;
            }
            Some(h) => h,
        };
        used[head] = true;
        let avail: Vec<usize> = (head + 1..n).filter(|&i| !used[i]).collect();
        for d in crate::numutil::divisors(q) {
            let d = d as usize;
            if d - 1 > avail.len() {
                continue;
            }
            // Ordered choices of the d-1 remaining cycle points.
            let mut pick = Vec::new();
            choose_ordered(&avail, d - 1, &mut pick, &mut |cycle_rest| {
                let mut cycle = vec![head];
                cycle.extend_from_slice(cycle_rest);
                for &x in cycle_rest {
                    used[x] = true;
                }
                for k in 0..cycle.len() {
                    sigma[cycle[k]] = cycle[(k + 1) % cycle.len()];
                }
                rec(q, n, used, sigma, out);
                for &x in cycle_rest {
                    used[x] = false;
                }
                for &x in &cycle {
                    sigma[x] = x;
                }
            });
        }
        used[head] = false;
    }
    fn choose_ordered(
        avail: &[usize],
        k: usize,
        pick: &mut Vec<usize>,
        f: &mut impl FnMut(&[usize]),
    ) {
        if k == 0 {
            f(pick);
            return;
        }
        for &x in avail {
            if pick.contains(&x) {
                continue;
            }
            pick.push(x);
            choose_ordered(avail, k - 1, pick, f);
            pick.pop();
        }
    }
    rec(q, n, &mut used, &mut sigma, &mut out);
    out
}

fn all_perms(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut v: Vec<usize> = (0..n).collect();
    permute(&mut v, 0, &mut out);
    out
}

fn permute(v: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k == v.len() {
        out.push(v.clone());
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        permute(v, k + 1, out);
        v.swap(k, i);
    }
}

/// Iterates over every homomorphism exactly once (odometer over per-factor
/// enumerations). Errors when the space exceeds `cap`.
pub fn enumerate_homs(p: &Presentation, n: u64, cap: u128) -> Result<Vec<Hom>> {
    let total = hom_space_size(p, n);
    if total > cap {
        return Err(Error::CapExceeded(total));
    }
    let n = n as usize;
    let perms = all_perms(n);
    // Per-factor choice lists: for cyclic factors the order-dividing
    // permutations, for free factors indices into `perms` per generator.
    let mut factor_choices: Vec<Vec<Vec<Vec<usize>>>> = Vec::new();
    for f in p.factors() {
        match f {
            FactorSpec::Cyclic { order } => {
                let list = order_dividing_perms(*order as u64, n);
                factor_choices.push(list.into_iter().map(|s| vec![s]).collect());
            }
            FactorSpec::Free { rank } => {
                let mut tuples: Vec<Vec<Vec<usize>>> = vec![Vec::new()];
                for _ in 0..*rank {
                    let mut next = Vec::with_capacity(tuples.len() * perms.len());
                    for t in &tuples {
                        for s in &perms {
                            let mut t2 = t.clone();
                            t2.push(s.clone());
                            next.push(t2);
                        }
                    }
                    tuples = next;
                }
                factor_choices.push(tuples);
            }
        }
    }
    let mut out = Vec::with_capacity(total as usize);
    let mut idx = vec![0usize; factor_choices.len()];
    loop {
        let hom = Hom {
            n,
            perms: idx
                .iter()
                .zip(&factor_choices)
                .map(|(&i, c)| c[i].clone())
                .collect(),
        };
        out.push(hom);
        let mut k = 0;
        loop {
            if k == idx.len() {
                return Ok(out);
            }
            idx[k] += 1;
            if idx[k] < factor_choices[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Full distribution of `fix` and `cyc_L` over the homomorphism space.
pub fn exact_stats(
    p: &Presentation,
    word: &Word,
    n: u64,
    max_r: u32,
    max_cycle_len: u64,
    cap: u128,
) -> Result<ExhaustiveStats> {
    let homs = enumerate_homs(p, n, cap)?;
    let total = homs.len() as u128;
    let mut fix_distribution: BTreeMap<u64, u128> = BTreeMap::new();
    let mut cyc_distributions: BTreeMap<u64, BTreeMap<u64, u128>> = BTreeMap::new();
    for l in 1..=max_cycle_len {
        cyc_distributions.insert(l, BTreeMap::new());
    }
    for hom in &homs {
        let image = evaluate(hom, word);
        *fix_distribution.entry(fix_count(&image)).or_insert(0) += 1;
        for l in 1..=max_cycle_len {
            let c = cycle_count(&image, l as usize);
            *cyc_distributions.get_mut(&l).unwrap().entry(c).or_insert(0) += 1;
        }
    }
    let moments = (1..=max_r)
        .map(|r| dist_moment(&fix_distribution, total, r))
        .collect();
    Ok(ExhaustiveStats { n, total_homs: total, fix_distribution, moments, cyc_distributions })
}

/// Exact `E[fix_{w1} · fix_{w2}]` plus the joint distribution table.
pub fn joint_stats(
    p: &Presentation,
    w1: &Word,
    w2: &Word,
    n: u64,
    cap: u128,
) -> Result<(BigRational, BTreeMap<(u64, u64), u128>)> {
    let homs = enumerate_homs(p, n, cap)?;
    let total = homs.len() as u128;
    let mut table: BTreeMap<(u64, u64), u128> = BTreeMap::new();
    let mut acc = BigInt::zero();
    for hom in &homs {
        let f1 = fix_count(&evaluate(hom, w1));
        let f2 = fix_count(&evaluate(hom, w2));
        *table.entry((f1, f2)).or_insert(0) += 1;
        acc += BigInt::from(f1) * BigInt::from(f2);
    }
    Ok((BigRational::new(acc, BigInt::from(total)), table))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::parse_word;

    fn rat(a: i64, b: i64) -> BigRational {
        BigRational::new(BigInt::from(a), BigInt::from(b))
    }

    #[test]
    fn hom_space_counts() {
        let c2 = Presentation::parse("C2").unwrap();
        assert_eq!(enumerate_homs(&c2, 3, DEFAULT_CAP).unwrap().len(), 4);
        let c2c3 = Presentation::parse("C2*C3").unwrap();
        assert_eq!(enumerate_homs(&c2c3, 3, DEFAULT_CAP).unwrap().len(), 12);
        let f1 = Presentation::parse("F1").unwrap();
        assert_eq!(enumerate_homs(&f1, 3, DEFAULT_CAP).unwrap().len(), 6);
    }

    #[test]
    fn cap_is_enforced() {
        let p = Presentation::parse("F2").unwrap();
        assert!(matches!(enumerate_homs(&p, 5, 100), Err(Error::CapExceeded(_))));
    }

    #[test]
    fn involution_fix_distribution() {
        let p = Presentation::parse("C2").unwrap();
        let w = parse_word("a", &p).unwrap();
        let stats = exact_stats(&p, &w, 2, 2, 1, DEFAULT_CAP).unwrap();
        assert_eq!(stats.total_homs, 2);
        assert_eq!(stats.fix_distribution[&0], 1);
        assert_eq!(stats.fix_distribution[&2], 1);
        assert_eq!(stats.mean(), rat(1, 1));
    }

    #[test]
    fn commutator_mean_matches_closed_form_at_two() {
        let p = Presentation::parse("F2").unwrap();
        let w = parse_word("a*b*a^-1*b^-1", &p).unwrap();
        let stats = exact_stats(&p, &w, 2, 1, 1, DEFAULT_CAP).unwrap();
        assert_eq!(stats.mean(), rat(2, 1));
    }

    #[test]
    fn torsion_square_in_c4() {
        let p = Presentation::parse("C4").unwrap();
        let w = parse_word("a^2", &p).unwrap();
        let stats = exact_stats(&p, &w, 4, 1, 1, DEFAULT_CAP).unwrap();
        assert_eq!(stats.total_homs, 16);
        assert_eq!(stats.mean(), rat(5, 2));
    }
}
