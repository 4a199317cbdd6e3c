//! Exact finite-`N` expectations and moments, as arbitrary-precision
//! rationals. No floating point enters this module.
//!
//! The basic quantity is the expected number of injective lifts of a
//! sub-cover into a uniformly random `N`-cover. It factors over the wedge
//! structure: the `o`-fiber contributes a falling factorial, each `e`-matching
//! divides by one, a free-factor part contributes `(N)_v / Π (N)_{e_g}`, and a
//! cyclic-factor part contributes `(N)_v` times the probability that a
//! permutation of order dividing `q` extends a fixed placement of its chains
//! and cycles. Expectations of fixed-point and cycle counts are then sums of
//! these lift counts over a quotient resolution.

use crate::group::{ElementClass, FactorSpec, Presentation, Word};
use crate::numutil::{divisors, falling, moebius};
use crate::resolution::enumerate_quotients;
use crate::subcover::{build_y, cyclic_profile, SubCover};
use crate::{Budget, Error, Result};
use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, Zero};
use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

/// `h_q(N) = |{σ ∈ Sym(N) : σ^q = id}|`, memoized per `q`.
///
/// Satisfies `h_q(0) = 1`, `h_q(N) = Σ_{d|q} (N-1)_{d-1} · h_q(N-d)`:
/// condition on the cycle of the smallest point.
pub fn hom_count(q: u64, n: u64) -> BigInt {
    assert!(q >= 2);
    static CACHE: OnceLock<Mutex<HashMap<u64, Vec<BigInt>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut tables = cache.lock().unwrap();
    let table = tables.entry(q).or_insert_with(|| vec![BigInt::one()]);
    while table.len() <= n as usize {
        let m = table.len() as u64;
        let mut acc = BigInt::zero();
        for d in divisors(q) {
            if d <= m {
                acc += falling(m as i64 - 1, d - 1) * &table[(m - d) as usize];
            }
        }
        table.push(acc);
    }
    table[n as usize].clone()
}

/// The designated structure of a cyclic-factor fiber: chain edge-lengths
/// (`0` for an isolated designated vertex) and closed cycle lengths.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CyclicProfile {
    pub arcs: Vec<u64>,
    pub cycles: Vec<u64>,
}

impl CyclicProfile {
    pub fn of(z: &SubCover, factor: usize) -> CyclicProfile {
        let (arcs, cycles) = cyclic_profile(z, factor);
        CyclicProfile { arcs, cycles }
    }

    /// Total number of designated points.
    pub fn points(&self) -> u64 {
        let from_arcs: u64 = self.arcs.iter().map(|s| s + 1).sum();
        let from_cycles: u64 = self.cycles.iter().sum();
        from_arcs + from_cycles
    }
}

/// Number of `σ ∈ Sym(N)` with `σ^q = id` extending one fixed placement of
/// the profile's chains and cycles on distinct points.
///
/// Cycles are forced. Chains are assembled recursively: anchor the first
/// chain, choose which other chains share its σ-cycle and in which order,
/// a cycle length `d | q`, a composition of the leftover slots into gaps,
/// and an ordered choice of free points for those slots.
pub fn count_extensions(q: u64, n: u64, profile: &CyclicProfile) -> BigInt {
    for d in &profile.cycles {
        assert!(*d >= 1 && q % d == 0, "cycle length must divide q");
    }
    for s in &profile.arcs {
        assert!(*s <= q - 1, "chain of ≥ q edges cannot embed");
    }
    let v = profile.points();
    if v > n {
        return BigInt::zero();
    }
    let mut arcs = profile.arcs.clone();
    arcs.sort_unstable();
    let free = n - v;
    let mut memo: HashMap<(Vec<u64>, u64), BigInt> = HashMap::new();
    extensions_rec(q, &arcs, free, &mut memo)
}

fn extensions_rec(
    q: u64,
    arcs: &[u64],
    free: u64,
    memo: &mut HashMap<(Vec<u64>, u64), BigInt>,
) -> BigInt {
    if arcs.is_empty() {
        return hom_count(q, free);
    }
    let key = (arcs.to_vec(), free);
    if let Some(hit) = memo.get(&key) {
        return hit.clone();
    }
    let anchor = arcs[0];
    let rest = &arcs[1..];
    // Multiset of remaining chain lengths with multiplicities.
    let mut lengths: Vec<(u64, u64)> = Vec::new();
    for &s in rest {
        match lengths.last_mut() {
            Some((l, c)) if *l == s => *c += 1,
            _ => lengths.push((s, 1)),
        }
    }
    let mut total = BigInt::zero();
    // Iterate over sub-multisets: how many chains of each length join the
    // anchor's σ-cycle.
    let mut take = vec![0u64; lengths.len()];
    loop {
        let k: u64 = take.iter().sum();
        let joined: u64 = take
            .iter()
            .zip(&lengths)
            .map(|(t, (l, _))| t * (l + 1))
            .sum::<u64>()
            + anchor
            + 1;
        let mut choose_ways = BigInt::one();
        for (t, (_, c)) in take.iter().zip(&lengths) {
            choose_ways *= crate::numutil::binomial(*c, *t);
        }
        let mut orderings = BigInt::one();
        for i in 1..=k {
            orderings *= BigInt::from(i);
        }
        let mut remaining: Vec<u64> = Vec::new();
        for (t, (l, c)) in take.iter().zip(&lengths) {
            for _ in 0..(c - t) {
                remaining.push(*l);
            }
        }
        for d in divisors(q) {
            if d < joined {
                continue;
            }
            let gap = d - joined;
            if gap > free {
                continue;
            }
            let slots = crate::numutil::binomial(gap + k, k);
            let placed = falling(free as i64, gap);
            let tail = extensions_rec(q, &remaining, free - gap, memo);
            total += &choose_ways * &orderings * slots * placed * tail;
        }
        // Next sub-multiset.
        let mut i = 0;
        loop {
            if i == take.len() {
                memo.insert(key, total.clone());
                return total;
            }
            if take[i] < lengths[i].1 {
                take[i] += 1;
                break;
            }
            take[i] = 0;
            i += 1;
        }
    }
}

/// Expected number of injective lifts of `z` into a uniformly random
/// `N`-cover. Exact for every `N ≥ 0`; zero when a fiber of `z` has more
/// than `N` vertices.
pub fn emb_expectation(z: &SubCover, n: u64) -> BigRational {
    if z.o_count() as u64 > n {
        return BigRational::zero();
    }
    for factor in 0..z.factors().len() {
        if z.v_count(factor) as u64 > n {
            return BigRational::zero();
        }
    }
    let mut acc = BigRational::from(falling(n as i64, z.o_count() as u64));
    for (factor, spec) in z.factors().iter().enumerate() {
        let e = z.e_edge_count(factor) as u64;
        acc /= BigRational::from(falling(n as i64, e));
        match spec {
            FactorSpec::Free { rank } => {
                acc *= BigRational::from(falling(n as i64, z.v_count(factor) as u64));
                for gen in 0..*rank as usize {
                    let eg = z.gen_edge_count(factor, gen) as u64;
                    acc /= BigRational::from(falling(n as i64, eg));
                }
            }
            FactorSpec::Cyclic { order } => {
                let q = *order as u64;
                let profile = CyclicProfile::of(z, factor);
                acc *= BigRational::from(falling(n as i64, z.v_count(factor) as u64));
                acc *= BigRational::new(count_extensions(q, n, &profile), hom_count(q, n));
            }
        }
    }
    acc
}

/// Sum of [`emb_expectation`] over a list of codomains.
pub fn emb_sum(codomains: &[SubCover], n: u64) -> BigRational {
    codomains
        .iter()
        .map(|z| emb_expectation(z, n))
        .fold(BigRational::zero(), |a, b| a + b)
}

/// Codomains of the full quotient resolution of `copies` disjoint circles of
/// an infinite-order word.
pub fn resolve(p: &Presentation, word: &Word, copies: usize, budget: Budget) -> Result<Vec<SubCover>> {
    let y = build_y(word, p)?;
    let refs: Vec<&SubCover> = std::iter::repeat(&y).take(copies).collect();
    let union = SubCover::disjoint_union(&refs)?;
    Ok(enumerate_quotients(&union, budget)?
        .into_iter()
        .map(|q| q.codomain)
        .collect())
}

/// `E[fix_γ(N)]` as an exact rational. Trivial words give `N`, torsion words
/// route through [`torsion_fix_expectation`], infinite-order words through
/// the quotient resolution of their circle.
pub fn fix_expectation(p: &Presentation, word: &Word, n: u64, budget: Budget) -> Result<BigRational> {
    match word.classify(p) {
        ElementClass::Trivial => Ok(BigRational::from(BigInt::from(n))),
        ElementClass::Torsion { factor, exp } => {
            Ok(torsion_fix_expectation(p.order(factor) as u64, exp as u64, n))
        }
        ElementClass::Infinite { .. } => {
            let codomains = resolve(p, word, 1, budget)?;
            Ok(emb_sum(&codomains, n))
        }
    }
}

/// `E[fix_γ(N)]` for `γ = x^j` inside a cyclic factor of order `q`:
/// `Σ_{d | gcd(j,q)} (N)_d · h_q(N-d) / h_q(N)`, one term per subgroup
/// `⟨x^d⟩ ⊇ ⟨x^j⟩`, whose coset cover has `d` vertices.
pub fn torsion_fix_expectation(q: u64, j: u64, n: u64) -> BigRational {
    assert!(j >= 1 && j < q);
    let g = num::integer::gcd(j, q);
    let mut acc = BigRational::zero();
    for d in divisors(g) {
        if d > n {
            continue;
        }
        acc += BigRational::new(falling(n as i64, d) * hom_count(q, n - d), hom_count(q, n));
    }
    acc
}

/// `E[fix_γ(N)^r]` via the resolution of `r` disjoint copies of the circle.
pub fn fix_moment(p: &Presentation, word: &Word, r: usize, n: u64, budget: Budget) -> Result<BigRational> {
    if r == 0 {
        return Ok(BigRational::one());
    }
    match word.classify(p) {
        ElementClass::Trivial => Ok(BigRational::from(BigInt::from(n).pow(r as u32))),
        ElementClass::Torsion { .. } => Err(Error::TorsionWord),
        ElementClass::Infinite { .. } => {
            let codomains = resolve(p, word, r, budget)?;
            Ok(emb_sum(&codomains, n))
        }
    }
}

/// `E[fix_{γ1}(N) · fix_{γ2}(N)]` via the resolution of the two circles'
/// disjoint union. Trivial words contribute a factor `N` exactly.
pub fn joint_fix_expectation(
    p: &Presentation,
    w1: &Word,
    w2: &Word,
    n: u64,
    budget: Budget,
) -> Result<BigRational> {
    let c1 = w1.classify(p);
    let c2 = w2.classify(p);
    if matches!(c1, ElementClass::Torsion { .. }) || matches!(c2, ElementClass::Torsion { .. }) {
        return Err(Error::TorsionWord);
    }
    match (&c1, &c2) {
        (ElementClass::Trivial, ElementClass::Trivial) => {
            Ok(BigRational::from(BigInt::from(n) * BigInt::from(n)))
        }
        (ElementClass::Trivial, _) => {
            Ok(BigRational::from(BigInt::from(n)) * fix_expectation(p, w2, n, budget)?)
        }
        (_, ElementClass::Trivial) => {
            Ok(BigRational::from(BigInt::from(n)) * fix_expectation(p, w1, n, budget)?)
        }
        _ => {
            let y1 = build_y(w1, p)?;
            let y2 = build_y(w2, p)?;
            let union = SubCover::disjoint_union(&[&y1, &y2])?;
            let codomains: Vec<SubCover> = enumerate_quotients(&union, budget)?
                .into_iter()
                .map(|q| q.codomain)
                .collect();
            Ok(emb_sum(&codomains, n))
        }
    }
}

/// `E[cyc_{γ,L}(N)]` by Möbius inversion of `fix_{γ^L} = Σ_{d|L} d·cyc_{γ,d}`:
/// `(1/L) Σ_{d|L} μ(L/d) · E[fix_{γ^d}(N)]`.
pub fn cyc_expectation(
    p: &Presentation,
    word: &Word,
    big_l: u64,
    n: u64,
    budget: Budget,
) -> Result<BigRational> {
    assert!(big_l >= 1);
    let mut acc = BigRational::zero();
    for d in divisors(big_l) {
        let mu = moebius(big_l / d);
        if mu == 0 {
            continue;
        }
        let pw = word.power(d as i64, p);
        let term = fix_expectation(p, &pw, n, budget)?;
        acc += BigRational::from(BigInt::from(mu)) * term;
    }
    Ok(acc / BigRational::from(BigInt::from(big_l)))
}

/// Renders an exact rational as `p/q` plus a decimal approximation.
pub fn rational_strings(x: &BigRational, digits: usize) -> (String, String) {
    let exact = if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    };
    let scale = BigInt::from(10u32).pow(digits as u32);
    let scaled = (x.numer() * &scale) / x.denom();
    let negative = scaled.is_negative();
    let digits_str = scaled.abs().to_string();
    let dec = if digits_str.len() <= digits {
        format!("0.{}{}", "0".repeat(digits - digits_str.len()), digits_str)
    } else {
        let (int, frac) = digits_str.split_at(digits_str.len() - digits);
        format!("{int}.{frac}")
    };
    (exact, format!("{}{}", if negative { "-" } else { "" }, dec))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::parse_word;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn involution_counts() {
        let got: Vec<BigInt> = (0..=6).map(|n| hom_count(2, n)).collect();
        let want: Vec<BigInt> = [1u64, 1, 2, 4, 10, 26, 76].iter().map(|&v| v.into()).collect();
        assert_eq!(got, want);
    }

    #[test]
    fn order_three_counts() {
        let got: Vec<BigInt> = (0..=6).map(|n| hom_count(3, n)).collect();
        let want: Vec<BigInt> = [1u64, 1, 1, 3, 9, 21, 81].iter().map(|&v| v.into()).collect();
        assert_eq!(got, want);
    }

    #[test]
    fn order_four_at_four() {
        assert_eq!(hom_count(4, 4), BigInt::from(16));
    }

    #[test]
    fn extension_counts_from_small_cases() {
        let one_arc = CyclicProfile { arcs: vec![1], cycles: vec![] };
        assert_eq!(count_extensions(2, 2, &one_arc), BigInt::one());
        let forced = CyclicProfile { arcs: vec![], cycles: vec![4] };
        assert_eq!(count_extensions(4, 4, &forced), BigInt::one());
        assert_eq!(count_extensions(3, 4, &one_arc), BigInt::from(2));
    }

    #[test]
    fn emb_of_single_o_vertex_is_n() {
        let p = Presentation::parse("C2*C3").unwrap();
        let mut z = SubCover::new(&p);
        z.add_o();
        assert_eq!(emb_expectation(&z, 7), rat(7, 1));
    }

    #[test]
    fn emb_of_single_free_edge() {
        let p = Presentation::parse("F2").unwrap();
        let mut z = SubCover::new(&p);
        let a = z.add_v(0);
        let b = z.add_v(0);
        z.set_gen_edge(0, 0, a, b);
        // (N)_2 / (N)_1 = N - 1.
        assert_eq!(emb_expectation(&z, 9), rat(8, 1));
    }

    #[test]
    fn emb_of_fixed_point_loop_over_c2() {
        let p = Presentation::parse("C2").unwrap();
        let mut z = SubCover::new(&p);
        let a = z.add_v(0);
        z.set_gen_edge(0, 0, a, a);
        // N · h2(N-1)/h2(N); at N = 2 this is 2·1/2 = 1.
        assert_eq!(emb_expectation(&z, 2), rat(1, 1));
    }

    #[test]
    fn torsion_expectation_anchors() {
        assert_eq!(torsion_fix_expectation(2, 1, 2), rat(1, 1));
        assert_eq!(torsion_fix_expectation(4, 2, 4), rat(5, 2));
    }

    #[test]
    fn commutator_in_f2_closed_form() {
        let p = Presentation::parse("F2").unwrap();
        let w = parse_word("a*b*a^-1*b^-1", &p).unwrap();
        for n in [2u64, 3, 5, 10, 17] {
            let got = fix_expectation(&p, &w, n, Budget::default()).unwrap();
            assert_eq!(got, rat(n as i64, n as i64 - 1), "N = {n}");
        }
    }

    #[test]
    fn trivial_word_fixes_everything() {
        let p = Presentation::parse("C2*C3").unwrap();
        let w = parse_word("a^2", &p).unwrap();
        assert_eq!(fix_expectation(&p, &w, 6, Budget::default()).unwrap(), rat(6, 1));
    }

    #[test]
    fn first_moment_is_expectation() {
        let p = Presentation::parse("C2*C3").unwrap();
        let w = parse_word("a*b", &p).unwrap();
        let e = fix_expectation(&p, &w, 5, Budget::default()).unwrap();
        let m1 = fix_moment(&p, &w, 1, 5, Budget::default()).unwrap();
        assert_eq!(e, m1);
    }

    #[test]
    fn joint_with_trivial_multiplies_by_n() {
        let p = Presentation::parse("C2*C3").unwrap();
        let w = parse_word("a*b", &p).unwrap();
        let id = parse_word("b^3", &p).unwrap();
        let got = joint_fix_expectation(&p, &w, &id, 5, Budget::default()).unwrap();
        let fix = fix_expectation(&p, &w, 5, Budget::default()).unwrap();
        assert_eq!(got, rat(5, 1) * fix);
    }

    #[test]
    fn cyc_at_length_one_is_fix() {
        let p = Presentation::parse("C2*C3").unwrap();
        let w = parse_word("a*b*a*b^-1", &p).unwrap();
        let fix = fix_expectation(&p, &w, 6, Budget::default()).unwrap();
        let cyc = cyc_expectation(&p, &w, 1, 6, Budget::default()).unwrap();
        assert_eq!(fix, cyc);
    }

    #[test]
    fn rational_rendering() {
        let (e, d) = rational_strings(&rat(5, 2), 4);
        assert_eq!(e, "5/2");
        assert_eq!(d, "2.5000");
        let (e, d) = rational_strings(&rat(-1, 3), 3);
        assert_eq!(e, "-1/3");
        assert_eq!(d, "-0.333");
    }
}
