//! Complete enumeration of the surjective quotients of a sub-cover.
//!
//! The resolution of a sub-cover `Y` is the set of isomorphism classes of
//! surjective morphisms `Y ↠ Z` onto valid sub-covers. Two surjections are in
//! the same class exactly when they induce the same partition of the vertices
//! of `Y` into fibers, so the enumeration works directly over fiber-respecting
//! vertex partitions: decide vertex pairs in a fixed order, branch on
//! merge/keep-apart, propagate forced identifications (folding), and keep the
//! leaves whose quotient satisfies the sub-cover conditions.

use crate::subcover::{SubCover, Vertex};
use crate::{Budget, Error, Result};
use std::collections::BTreeMap;

/// One isomorphism class of surjective quotients.
#[derive(Debug, Clone)]
pub struct Quotient {
    /// Block id per global source vertex, numbered by smallest member.
    pub partition: Vec<usize>,
    pub codomain: SubCover,
    /// Images of the source basepoints in the codomain.
    pub base_images: Vec<Vertex>,
}

impl Quotient {
    pub fn is_identity(&self) -> bool {
        self.partition.iter().enumerate().all(|(i, &b)| i == b)
    }
}

/// Result of closing a seed set of merges under folding.
#[derive(Debug, Clone)]
pub enum FoldOutcome {
    /// Minimal fold-closed partition containing the seeds, with a valid
    /// quotient; block id per global source vertex.
    Partition(Vec<usize>),
    Conflict,
}

/// Disjoint union of sub-covers over a common presentation.
pub fn disjoint_union(parts: &[&SubCover]) -> Result<SubCover> {
    SubCover::disjoint_union(parts)
}

struct Relations {
    /// Directed edge lists per relation: generator actions then `e`-matchings.
    edges: Vec<Vec<(usize, usize)>>,
    /// For each cyclic factor: (relation index of its generator, order q).
    cyclic: Vec<(usize, usize)>,
    vertex_count: usize,
}

impl Relations {
    fn of(source: &SubCover) -> Relations {
        let mut edges = Vec::new();
        let mut cyclic = Vec::new();
        for (factor, spec) in source.factors().iter().enumerate() {
            for gen in 0..spec.generator_count() {
                let mut list = Vec::new();
                for (from, to) in source.gen_edges(factor, gen).iter().enumerate() {
                    if let Some(to) = *to {
                        list.push((
                            source.global_index(Vertex::V { factor, index: from }),
                            source.global_index(Vertex::V { factor, index: to }),
                        ));
                    }
                }
                if let crate::group::FactorSpec::Cyclic { order } = spec {
                    cyclic.push((edges.len(), *order as usize));
                }
                edges.push(list);
            }
            let mut list = Vec::new();
            for (o, v) in source.e_edges(factor).iter().enumerate() {
                if let Some(v) = *v {
                    list.push((
                        source.global_index(Vertex::O(o)),
                        source.global_index(Vertex::V { factor, index: v }),
                    ));
                }
            }
            edges.push(list);
        }
        Relations { edges, cyclic, vertex_count: source.total_vertices() }
    }
}

#[derive(Clone)]
struct State {
    parent: Vec<usize>,
    /// Saturation edges added during folding, per cyclic relation.
    extra: Vec<Vec<(usize, usize)>>,
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

impl State {
    fn fresh(rel: &Relations) -> State {
        State {
            parent: (0..rel.vertex_count).collect(),
            extra: vec![Vec::new(); rel.edges.len()],
        }
    }

    fn find(&mut self, x: usize) -> usize {
        find(&mut self.parent, x)
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb)] = ra.min(rb);
        true
    }

    /// Root-level partial map of one relation; fold violations land in
    /// `pending` as forced merges.
    fn root_map(
        &mut self,
        rel: &Relations,
        r: usize,
        pending: &mut Vec<(usize, usize)>,
    ) -> BTreeMap<usize, usize> {
        let mut fwd: BTreeMap<usize, usize> = BTreeMap::new();
        let mut bwd: BTreeMap<usize, usize> = BTreeMap::new();
        let parent = &mut self.parent;
        for &(s, d) in rel.edges[r].iter().chain(self.extra[r].iter()) {
            let (rs, rd) = (find(parent, s), find(parent, d));
            match fwd.get(&rs) {
                Some(&prev) if prev != rd => pending.push((prev, rd)),
                _ => {
                    fwd.insert(rs, rd);
                }
            }
            match bwd.get(&rd) {
                Some(&prev) if prev != rs => pending.push((prev, rs)),
                _ => {
                    bwd.insert(rd, rs);
                }
            }
        }
        fwd
    }

    /// Folds until stable, saturating forced chain closures along the way.
    fn close(&mut self, rel: &Relations, seeds: &[(usize, usize)]) {
        let mut pending: Vec<(usize, usize)> = seeds.to_vec();
        loop {
            while let Some((a, b)) = pending.pop() {
                if self.union(a, b) {
                    for r in 0..rel.edges.len() {
                        let _ = self.root_map(rel, r, &mut pending);
                    }
                }
            }
            let mut grew = false;
            for &(r, q) in &rel.cyclic {
                let fwd = self.root_map(rel, r, &mut pending);
                if !pending.is_empty() {
                    break;
                }
                for chain in chains_of(&fwd) {
                    if chain.len() == q {
                        let (first, last) = (chain[0], *chain.last().unwrap());
                        self.extra[r].push((last, first));
                        grew = true;
                    }
                }
            }
            if pending.is_empty() && !grew {
                return;
            }
        }
    }

    fn respects(&mut self, forbidden: &[(usize, usize)]) -> bool {
        forbidden.iter().all(|&(a, b)| {
            let (ra, rb) = (self.find(a), self.find(b));
            ra != rb
        })
    }

    fn blocks(&mut self, n: usize) -> Vec<usize> {
        let mut ids: BTreeMap<usize, usize> = BTreeMap::new();
        (0..n)
            .map(|v| {
                let r = self.find(v);
                let next = ids.len();
                *ids.entry(r).or_insert(next)
            })
            .collect()
    }
}

/// Maximal chains of a root-level partial injection (cycles excluded);
/// a chain of `k` vertices carries `k-1` edges.
fn chains_of(fwd: &BTreeMap<usize, usize>) -> Vec<Vec<usize>> {
    let targets: std::collections::BTreeSet<usize> = fwd.values().copied().collect();
    let mut out = Vec::new();
    for (&start, _) in fwd.iter() {
        if targets.contains(&start) {
            continue;
        }
        let mut chain = vec![start];
        let mut cur = start;
        while let Some(&next) = fwd.get(&cur) {
            chain.push(next);
            cur = next;
        }
        out.push(chain);
    }
    out
}

/// The minimal fold-closed partition containing the seed merges, or
/// [`FoldOutcome::Conflict`] when the closed quotient is not a valid
/// sub-cover. Seeds must pair vertices of a common fiber.
pub fn fold_closure(source: &SubCover, seeds: &[(Vertex, Vertex)]) -> FoldOutcome {
    for (a, b) in seeds {
        if !same_fiber(*a, *b) {
            return FoldOutcome::Conflict;
        }
    }
    let rel = Relations::of(source);
    let mut st = State::fresh(&rel);
    let seeds: Vec<(usize, usize)> = seeds
        .iter()
        .map(|&(a, b)| (source.global_index(a), source.global_index(b)))
        .collect();
    st.close(&rel, &seeds);
    let blocks = st.blocks(rel.vertex_count);
    match build_codomain(source, &blocks, &mut st, &rel) {
        Some(_) => FoldOutcome::Partition(blocks),
        None => FoldOutcome::Conflict,
    }
}

fn same_fiber(a: Vertex, b: Vertex) -> bool {
    match (a, b) {
        (Vertex::O(_), Vertex::O(_)) => true,
        (Vertex::V { factor: f1, .. }, Vertex::V { factor: f2, .. }) => f1 == f2,
        _ => false,
    }
}

/// Builds the quotient sub-cover; `None` if it violates the sub-cover
/// conditions (cycle lengths, chain bounds).
fn build_codomain(
    source: &SubCover,
    blocks: &[usize],
    st: &mut State,
    rel: &Relations,
) -> Option<SubCover> {
    let mut z = SubCover::with_factors(source.factors().to_vec());
    // Block id -> codomain vertex, fiber by fiber in block order.
    let mut o_of: BTreeMap<usize, usize> = BTreeMap::new();
    let mut v_of: Vec<BTreeMap<usize, usize>> = vec![BTreeMap::new(); source.factors().len()];
    for g in 0..source.total_vertices() {
        match source.vertex_at(g) {
            Vertex::O(_) => {
                o_of.entry(blocks[g]).or_insert_with(|| z.add_o());
            }
            Vertex::V { factor, .. } => {
                v_of[factor].entry(blocks[g]).or_insert_with(|| z.add_v(factor));
            }
        }
    }
    // Induced edges, including saturation edges; idempotent writes.
    let mut rel_idx = 0;
    for (factor, spec) in source.factors().iter().enumerate() {
        for gen in 0..spec.generator_count() {
            let mut seen: BTreeMap<usize, usize> = BTreeMap::new();
            let base = rel.edges[rel_idx].iter().copied();
            for (s, d) in base.chain(st.extra[rel_idx].iter().copied()) {
                let (bs, bd) = (blocks[s], blocks[d]);
                match seen.get(&bs) {
                    Some(&prev) if prev != bd => return None, // unfolded, cannot happen
                    Some(_) => {}
                    None => {
                        seen.insert(bs, bd);
                        z.set_gen_edge(factor, gen, v_of[factor][&bs], v_of[factor][&bd]);
                    }
                }
            }
            rel_idx += 1;
        }
        let mut seen: BTreeMap<usize, usize> = BTreeMap::new();
        for &(s, d) in &rel.edges[rel_idx] {
            let (bs, bd) = (blocks[s], blocks[d]);
            match seen.get(&bs) {
                Some(&prev) if prev != bd => return None,
                Some(_) => {}
                None => {
                    seen.insert(bs, bd);
                    z.set_e_edge(factor, o_of[&bs], v_of[factor][&bd]);
                }
            }
        }
        rel_idx += 1;
    }
    for b in source.basepoints() {
        let g = source.global_index(*b);
        let img = match source.vertex_at(g) {
            Vertex::O(_) => Vertex::O(o_of[&blocks[g]]),
            Vertex::V { factor, .. } => {
                Vertex::V { factor, index: v_of[factor][&blocks[g]] }
            }
        };
        z.add_basepoint(img);
    }
    z.validate().ok()?;
    Some(z)
}

/// Enumerates all isomorphism classes of surjective quotients of `source`.
/// Contains the identity class; deterministic order.
pub fn enumerate_quotients(source: &SubCover, budget: Budget) -> Result<Vec<Quotient>> {
    let rel = Relations::of(source);
    let n = rel.vertex_count;
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            if same_fiber(source.vertex_at(u), source.vertex_at(v)) {
                pairs.push((u, v));
            }
        }
    }
    let mut out: BTreeMap<Vec<usize>, Quotient> = BTreeMap::new();
    let mut nodes: u64 = 0;
    let mut forbidden: Vec<(usize, usize)> = Vec::new();
    let st = State::fresh(&rel);
    search(
        source, &rel, &pairs, st, 0, &mut forbidden, &mut nodes, budget, &mut out,
    )?;
    Ok(out.into_values().collect())
}

#[allow(clippy::too_many_arguments)]
fn search(
    source: &SubCover,
    rel: &Relations,
    pairs: &[(usize, usize)],
    mut st: State,
    from: usize,
    forbidden: &mut Vec<(usize, usize)>,
    nodes: &mut u64,
    budget: Budget,
    out: &mut BTreeMap<Vec<usize>, Quotient>,
) -> Result<()> {
    *nodes += 1;
    if *nodes > budget.0 {
        return Err(Error::BudgetExceeded(budget.0));
    }
    // Next undecided pair. Forbidden pairs all sit before `from`: a pair is
    // only ever forbidden at its own cursor position.
    let mut i = from;
    let next = loop {
        match pairs.get(i) {
            None => break None,
            Some(&(u, v)) => {
                if st.find(u) == st.find(v) {
                    i += 1;
                } else {
                    break Some((u, v));
                }
            }
        }
    };
    let Some((u, v)) = next else {
        let blocks = st.blocks(rel.vertex_count);
        if let Some(codomain) = build_codomain(source, &blocks, &mut st, rel) {
            let base_images = codomain.basepoints().to_vec();
            let codomain = strip_basepoints(codomain);
            let prev = out.insert(
                blocks.clone(),
                Quotient { partition: blocks, codomain, base_images },
            );
            debug_assert!(prev.is_none(), "one partition reached twice");
        }
        return Ok(());
    };

    // Branch 1: merge u and v.
    let mut merged = st.clone();
    merged.close(rel, &[(u, v)]);
    if merged.respects(forbidden) {
        search(source, rel, pairs, merged, i + 1, forbidden, nodes, budget, out)?;
    }
    // Branch 2: keep u and v apart.
    forbidden.push((u, v));
    search(source, rel, pairs, st, i + 1, forbidden, nodes, budget, out)?;
    forbidden.pop();
    Ok(())
}

/// Codomains are reported unbased; base images live in [`Quotient`].
fn strip_basepoints(z: SubCover) -> SubCover {
    let mut bare = z;
    bare.clear_basepoints();
    bare
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{parse_word, Presentation};
    use crate::subcover::build_y;
    use num::rational::BigRational;
    use num::Zero;

    fn quotients(group: &str, word: &str) -> (Presentation, Vec<Quotient>) {
        let p = Presentation::parse(group).unwrap();
        let w = parse_word(word, &p).unwrap();
        let y = build_y(&w, &p).unwrap();
        let qs = enumerate_quotients(&y, Budget::default()).unwrap();
        (p, qs)
    }

    #[test]
    fn empty_seed_is_identity() {
        let p = Presentation::parse("C2*C4").unwrap();
        let w = parse_word("a*b*a*b^-1", &p).unwrap();
        let y = build_y(&w, &p).unwrap();
        match fold_closure(&y, &[]) {
            FoldOutcome::Partition(blocks) => {
                assert!(blocks.iter().enumerate().all(|(i, &b)| i == b));
            }
            FoldOutcome::Conflict => panic!("identity must be valid"),
        }
    }

    #[test]
    fn closing_a_full_chain_is_valid() {
        let p = Presentation::parse("C4").unwrap();
        let mut z = SubCover::new(&p);
        let vs: Vec<usize> = (0..5).map(|_| z.add_v(0)).collect();
        for k in 0..4 {
            z.set_gen_edge(0, 0, vs[k], vs[k + 1]);
        }
        // A 4-edge chain over C4 only quotients onto cycles; merging the
        // endpoints yields the 4-cycle.
        let seeds = [(
            Vertex::V { factor: 0, index: 0 },
            Vertex::V { factor: 0, index: 4 },
        )];
        match fold_closure(&z, &seeds) {
            FoldOutcome::Partition(blocks) => {
                assert_eq!(blocks[0], blocks[4]);
                assert_eq!(blocks.iter().collect::<std::collections::BTreeSet<_>>().len(), 4);
            }
            FoldOutcome::Conflict => panic!("4 divides 4"),
        }
    }

    #[test]
    fn bad_cycle_is_a_conflict() {
        let p = Presentation::parse("C4").unwrap();
        let mut z = SubCover::new(&p);
        let vs: Vec<usize> = (0..4).map(|_| z.add_v(0)).collect();
        for k in 0..3 {
            z.set_gen_edge(0, 0, vs[k], vs[k + 1]);
        }
        let seeds = [(
            Vertex::V { factor: 0, index: 0 },
            Vertex::V { factor: 0, index: 3 },
        )];
        assert!(matches!(fold_closure(&z, &seeds), FoldOutcome::Conflict));
    }

    #[test]
    fn figure_counts_for_abab_inverse_in_c2c4() {
        let (_, qs) = quotients("C2*C4", "a*b*a*b^-1");
        assert_eq!(qs.len(), 5);
        let zero = qs
            .iter()
            .filter(|q| q.codomain.chi_grp().total == BigRational::zero())
            .count();
        assert_eq!(zero, 2);
        assert_eq!(qs.iter().filter(|q| q.is_identity()).count(), 1);
    }

    #[test]
    fn union_resolution_contains_componentwise_products() {
        let p = Presentation::parse("C2*C3").unwrap();
        let w1 = parse_word("a*b", &p).unwrap();
        let w2 = parse_word("a*b^2", &p).unwrap();
        let y1 = build_y(&w1, &p).unwrap();
        let y2 = build_y(&w2, &p).unwrap();
        let u = disjoint_union(&[&y1, &y2]).unwrap();
        let qs1 = enumerate_quotients(&y1, Budget::default()).unwrap();
        let qs2 = enumerate_quotients(&y2, Budget::default()).unwrap();
        let qsu = enumerate_quotients(&u, Budget::default()).unwrap();
        // Quotients acting separately on the two components embed into the
        // union's resolution; the union may have more (mixed) classes.
        assert!(qsu.len() >= qs1.len() * qs2.len());
    }

    #[test]
    fn quotients_of_quotients_appear() {
        let (_, qs) = quotients("C2*C4", "a*b*a*b^-1");
        // For each enumerated codomain, its own quotient codomains appear
        // among the enumerated codomains (functoriality).
        let all: std::collections::BTreeSet<String> = qs
            .iter()
            .map(|q| q.codomain.canonical_form(crate::subcover::CanonMode::Unbased).0)
            .collect();
        for q in &qs {
            let sub = enumerate_quotients(&q.codomain, Budget::default()).unwrap();
            for s in sub {
                let sig = s.codomain.canonical_form(crate::subcover::CanonMode::Unbased).0;
                assert!(all.contains(&sig));
            }
        }
    }
}
