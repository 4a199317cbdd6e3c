//! Labeled partial covers of the wedge space of a free product.
//!
//! A [`SubCover`] is the finite combinatorial shadow of a covering space: a
//! fiber of vertices over the wedge point `o`, for each factor a fiber of
//! vertices over that factor's basepoint, partial matchings (`e`-edges)
//! between the `o`-fiber and each factor fiber, and for each generator a
//! partial injection on the factor fiber (directed labeled edges). Everything
//! here is immutable once built; operations are pure.
//!
//! Over a cyclic factor of order `q`, a chain of `q-1` generator edges forces
//! its own closure in every completion to a genuine cover (the permutation has
//! order dividing `q`), so such chains are stored closed. This keeps morphism
//! and automorphism counts in line with coset geometry: e.g. the hexagonal
//! circle of `(ab)^3` over `C2*C2` has 6 automorphisms, matching the index of
//! `⟨(ab)^3⟩` in its normalizer.

use crate::group::{FactorSpec, Letter, Presentation, Syllable, Word};
use crate::numutil;
use crate::{Error, Result};
use num::rational::BigRational;
use num::{BigInt, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// A vertex of a sub-cover: in the `o`-fiber or in a factor fiber.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Vertex {
    O(usize),
    V { factor: usize, index: usize },
}

/// Edge labels of the unified 1-skeleton.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    /// The edge connecting the `o`-fiber to factor `factor`'s fiber.
    E { factor: usize },
    /// Generator `gen` of factor `factor`, directed along the generator.
    Gen { factor: usize, gen: usize },
}

/// Structure of one factor fiber over a cyclic factor: directed chains
/// ("arcs", possibly single vertices) and closed cycles.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CyclicComponents {
    /// Vertex chains in σ-order; an arc with `k` vertices has `k-1` edges.
    pub arcs: Vec<Vec<usize>>,
    /// Closed cycles in σ-order.
    pub cycles: Vec<Vec<usize>>,
}

/// Euler characteristics of the labeled fundamental groups of a sub-cover.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChiReport {
    pub total: BigRational,
    /// One entry per connected component, in order of smallest vertex.
    pub per_component: Vec<BigRational>,
}

/// Canonical signature: equal iff the sub-covers are label- and
/// projection-preserving isomorphic (respecting basepoints in based mode).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Signature(pub String);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CanonMode {
    Based,
    Unbased,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubCover {
    factors: Vec<FactorSpec>,
    o_count: usize,
    v_counts: Vec<usize>,
    /// `e_edge[factor][o]` is the factor-fiber endpoint of the `e`-edge at `o`.
    e_edge: Vec<Vec<Option<usize>>>,
    /// `gen_edge[factor][gen][v]` is the head of the generator edge at `v`.
    gen_edge: Vec<Vec<Vec<Option<usize>>>>,
    basepoints: Vec<Vertex>,
}

impl SubCover {
    pub fn new(p: &Presentation) -> SubCover {
        Self::with_factors(p.factors().to_vec())
    }

    pub fn with_factors(factors: Vec<FactorSpec>) -> SubCover {
        let gen_edge = factors.iter().map(|f| vec![Vec::new(); f.generator_count()]).collect();
        SubCover {
            e_edge: vec![Vec::new(); factors.len()],
            v_counts: vec![0; factors.len()],
            gen_edge,
            factors,
            o_count: 0,
            basepoints: Vec::new(),
        }
    }

    pub fn add_o(&mut self) -> usize {
        self.o_count += 1;
        for col in &mut self.e_edge {
            col.push(None);
        }
        self.o_count - 1
    }

    pub fn add_v(&mut self, factor: usize) -> usize {
        self.v_counts[factor] += 1;
        for col in &mut self.gen_edge[factor] {
            col.push(None);
        }
        self.v_counts[factor] - 1
    }

    pub fn set_e_edge(&mut self, factor: usize, o: usize, v: usize) {
        assert!(self.e_edge[factor][o].is_none(), "o-vertex already has an e-edge for this factor");
        self.e_edge[factor][o] = Some(v);
    }

    pub fn set_gen_edge(&mut self, factor: usize, gen: usize, from: usize, to: usize) {
        assert!(self.gen_edge[factor][gen][from].is_none(), "vertex already has an outgoing edge");
        self.gen_edge[factor][gen][from] = Some(to);
    }

    pub fn add_basepoint(&mut self, v: Vertex) {
        self.basepoints.push(v);
    }

    pub fn clear_basepoints(&mut self) {
        self.basepoints.clear();
    }

    pub fn factors(&self) -> &[FactorSpec] {
        &self.factors
    }

    pub fn o_count(&self) -> usize {
        self.o_count
    }

    pub fn v_count(&self, factor: usize) -> usize {
        self.v_counts[factor]
    }

    pub fn e_edges(&self, factor: usize) -> &[Option<usize>] {
        &self.e_edge[factor]
    }

    pub fn e_edge_count(&self, factor: usize) -> usize {
        self.e_edge[factor].iter().flatten().count()
    }

    pub fn gen_edges(&self, factor: usize, gen: usize) -> &[Option<usize>] {
        &self.gen_edge[factor][gen]
    }

    pub fn gen_edge_count(&self, factor: usize, gen: usize) -> usize {
        self.gen_edge[factor][gen].iter().flatten().count()
    }

    pub fn basepoints(&self) -> &[Vertex] {
        &self.basepoints
    }

    pub fn total_vertices(&self) -> usize {
        self.o_count + self.v_counts.iter().sum::<usize>()
    }

    /// Dense index of a vertex in `0..total_vertices()`.
    pub fn global_index(&self, v: Vertex) -> usize {
        match v {
            Vertex::O(i) => i,
            Vertex::V { factor, index } => {
                let mut off = self.o_count;
                for f in 0..factor {
                    off += self.v_counts[f];
                }
                off + index
            }
        }
    }

    pub fn vertex_at(&self, mut g: usize) -> Vertex {
        if g < self.o_count {
            return Vertex::O(g);
        }
        g -= self.o_count;
        for (f, &c) in self.v_counts.iter().enumerate() {
            if g < c {
                return Vertex::V { factor: f, index: g };
            }
            g -= c;
        }
        panic!("global index out of range");
    }

    /// All directed labeled edges as `(label, src, dst)` with global indices;
    /// `e`-edges are directed from the `o`-fiber.
    pub fn labeled_edges(&self) -> Vec<(Label, usize, usize)> {
        let mut out = Vec::new();
        for (factor, col) in self.e_edge.iter().enumerate() {
            for (o, v) in col.iter().enumerate() {
                if let Some(v) = *v {
                    out.push((
                        Label::E { factor },
                        self.global_index(Vertex::O(o)),
                        self.global_index(Vertex::V { factor, index: v }),
                    ));
                }
            }
        }
        for (factor, gens) in self.gen_edge.iter().enumerate() {
            for (gen, col) in gens.iter().enumerate() {
                for (from, to) in col.iter().enumerate() {
                    if let Some(to) = *to {
                        out.push((
                            Label::Gen { factor, gen },
                            self.global_index(Vertex::V { factor, index: from }),
                            self.global_index(Vertex::V { factor, index: to }),
                        ));
                    }
                }
            }
        }
        out
    }

    /// Chain/cycle decomposition of the generator action over a cyclic factor.
    pub fn cyclic_components(&self, factor: usize) -> CyclicComponents {
        assert!(matches!(self.factors[factor], FactorSpec::Cyclic { .. }));
        let sigma = &self.gen_edge[factor][0];
        let n = self.v_counts[factor];
        let mut has_in = vec![false; n];
        for t in sigma.iter().flatten() {
            has_in[*t] = true;
        }
        let mut seen = vec![false; n];
        let mut arcs = Vec::new();
        let mut cycles = Vec::new();
        for start in 0..n {
            if seen[start] || has_in[start] {
                continue;
            }
            let mut chain = vec![start];
            seen[start] = true;
            let mut cur = start;
            while let Some(next) = sigma[cur] {
                seen[next] = true;
                chain.push(next);
                cur = next;
            }
            arcs.push(chain);
        }
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut cycle = vec![start];
            seen[start] = true;
            let mut cur = sigma[start].expect("cycle vertex has an outgoing edge");
            while cur != start {
                seen[cur] = true;
                cycle.push(cur);
                cur = sigma[cur].expect("cycle vertex has an outgoing edge");
            }
            cycles.push(cycle);
        }
        CyclicComponents { arcs, cycles }
    }

    /// Closes every generator chain of `q-1` edges over each cyclic factor of
    /// order `q` (forced in any completion to a full cover).
    pub fn saturate(&mut self) {
        for factor in 0..self.factors.len() {
            let q = match self.factors[factor] {
                FactorSpec::Cyclic { order } => order as usize,
                FactorSpec::Free { .. } => continue,
            };
            let comps = self.cyclic_components(factor);
            for arc in comps.arcs {
                if arc.len() == q {
                    let last = *arc.last().unwrap();
                    self.gen_edge[factor][0][last] = Some(arc[0]);
                }
            }
        }
    }

    /// Checks the immersion condition, cycle-length divisibility, and arc
    /// bounds. Arcs of `q-1` edges are rejected: [`saturate`](Self::saturate)
    /// is expected to have closed them.
    pub fn validate(&self) -> Result<()> {
        for (factor, col) in self.e_edge.iter().enumerate() {
            let mut hit = vec![false; self.v_counts[factor]];
            for v in col.iter().flatten() {
                if hit[*v] {
                    return Err(Error::InvalidSubCover(format!(
                        "two e-edges of factor {factor} share a fiber vertex"
                    )));
                }
                hit[*v] = true;
            }
        }
        for (factor, gens) in self.gen_edge.iter().enumerate() {
            for (gen, col) in gens.iter().enumerate() {
                let mut hit = vec![false; self.v_counts[factor]];
                for t in col.iter().flatten() {
                    if hit[*t] {
                        return Err(Error::InvalidSubCover(format!(
                            "generator ({factor},{gen}) is not a partial injection"
                        )));
                    }
                    hit[*t] = true;
                }
            }
        }
        for (factor, spec) in self.factors.iter().enumerate() {
            if let FactorSpec::Cyclic { order } = spec {
                let q = *order as usize;
                let comps = self.cyclic_components(factor);
                for cycle in &comps.cycles {
                    if q % cycle.len() != 0 {
                        return Err(Error::InvalidSubCover(format!(
                            "cycle of length {} over C{q}",
                            cycle.len()
                        )));
                    }
                }
                for arc in &comps.arcs {
                    if arc.len() >= q {
                        return Err(Error::InvalidSubCover(format!(
                            "chain of {} edges over C{q}",
                            arc.len() - 1
                        )));
                    }
                }
            }
        }
        for b in &self.basepoints {
            let ok = match *b {
                Vertex::O(i) => i < self.o_count,
                Vertex::V { factor, index } => {
                    factor < self.factors.len() && index < self.v_counts[factor]
                }
            };
            if !ok {
                return Err(Error::InvalidSubCover("basepoint out of range".into()));
            }
        }
        Ok(())
    }

    /// Connected components of the whole 1-skeleton; returns `(component id
    /// per global vertex, component count)`, ids ordered by smallest vertex.
    pub fn components(&self) -> (Vec<usize>, usize) {
        let n = self.total_vertices();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for (_, a, b) in self.labeled_edges() {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
        let mut ids = BTreeMap::new();
        let mut out = vec![0; n];
        for g in 0..n {
            let r = find(&mut parent, g);
            let next = ids.len();
            out[g] = *ids.entry(r).or_insert(next);
        }
        let count = ids.len();
        (out, count)
    }

    /// Euler characteristic of the labeled fundamental group, total and per
    /// connected component: `|o| + Σ_i (χ_i − |e_i|)`, where a closed
    /// `d`-cycle over `C_q` contributes `d/q`, a chain contributes 1, and a
    /// free-factor part contributes `V − E`.
    pub fn chi_grp(&self) -> ChiReport {
        let (comp, count) = self.components();
        let mut per = vec![BigRational::zero(); count];
        for o in 0..self.o_count {
            per[comp[self.global_index(Vertex::O(o))]] += BigRational::from(BigInt::from(1));
        }
        for (factor, col) in self.e_edge.iter().enumerate() {
            let _ = factor;
            for (o, v) in col.iter().enumerate() {
                if v.is_some() {
                    per[comp[self.global_index(Vertex::O(o))]] -= BigRational::from(BigInt::from(1));
                }
            }
        }
        for (factor, spec) in self.factors.iter().enumerate() {
            match spec {
                FactorSpec::Cyclic { order } => {
                    let comps = self.cyclic_components(factor);
                    for arc in comps.arcs {
                        let g = self.global_index(Vertex::V { factor, index: arc[0] });
                        per[comp[g]] += BigRational::from(BigInt::from(1));
                    }
                    for cycle in comps.cycles {
                        let g = self.global_index(Vertex::V { factor, index: cycle[0] });
                        per[comp[g]] += BigRational::new(
                            BigInt::from(cycle.len() as u64),
                            BigInt::from(*order as u64),
                        );
                    }
                }
                FactorSpec::Free { rank } => {
                    for index in 0..self.v_counts[factor] {
                        let g = self.global_index(Vertex::V { factor, index });
                        per[comp[g]] += BigRational::from(BigInt::from(1));
                    }
                    for gen in 0..*rank as usize {
                        for (from, to) in self.gen_edge[factor][gen].iter().enumerate() {
                            if to.is_some() {
                                let g = self.global_index(Vertex::V { factor, index: from });
                                per[comp[g]] -= BigRational::from(BigInt::from(1));
                            }
                        }
                    }
                }
            }
        }
        let total = per.iter().fold(BigRational::zero(), |a, b| a + b);
        ChiReport { total, per_component: per }
    }

    fn adjacency(&self) -> Vec<Vec<(Label, bool, usize)>> {
        let mut adj: Vec<Vec<(Label, bool, usize)>> = vec![Vec::new(); self.total_vertices()];
        for (label, src, dst) in self.labeled_edges() {
            adj[src].push((label, true, dst));
            adj[dst].push((label, false, src));
        }
        for list in &mut adj {
            list.sort();
        }
        adj
    }

    /// Deterministic serialization of the component of `start`, relabeled by
    /// breadth-first discovery order from `start`.
    fn component_signature(
        &self,
        adj: &[Vec<(Label, bool, usize)>],
        start: usize,
        base_marks: Option<&BTreeMap<usize, Vec<usize>>>,
    ) -> String {
        let n = self.total_vertices();
        let mut id = vec![usize::MAX; n];
        let mut order = vec![start];
        id[start] = 0;
        let mut head = 0;
        while head < order.len() {
            let v = order[head];
            head += 1;
            for &(_, _, w) in &adj[v] {
                if id[w] == usize::MAX {
                    id[w] = order.len();
                    order.push(w);
                }
            }
        }
        let mut out = String::new();
        for &v in &order {
            let fiber = match self.vertex_at(v) {
                Vertex::O(_) => "o".to_string(),
                Vertex::V { factor, .. } => format!("v{factor}"),
            };
            out.push_str(&fiber);
            if let Some(marks) = base_marks {
                if let Some(list) = marks.get(&v) {
                    out.push_str(&format!("!{list:?}"));
                }
            }
            let mut nbrs: Vec<(Label, bool, usize)> =
                adj[v].iter().map(|&(l, d, w)| (l, d, id[w])).collect();
            nbrs.sort();
            for (l, d, w) in nbrs {
                let dir = if d { '>' } else { '<' };
                match l {
                    Label::E { factor } => out.push_str(&format!("e{factor}{dir}{w};")),
                    Label::Gen { factor, gen } => {
                        out.push_str(&format!("g{factor}.{gen}{dir}{w};"))
                    }
                }
            }
            out.push('|');
        }
        out
    }

    /// Canonical form; equal signatures iff isomorphic over the same
    /// presentation (based mode also matches basepoint lists).
    pub fn canonical_form(&self, mode: CanonMode) -> Signature {
        let adj = self.adjacency();
        let base_marks = match mode {
            CanonMode::Unbased => None,
            CanonMode::Based => {
                let mut marks: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
                for (i, b) in self.basepoints.iter().enumerate() {
                    marks.entry(self.global_index(*b)).or_default().push(i);
                }
                Some(marks)
            }
        };
        let (comp, count) = self.components();
        let mut sigs = vec![String::new(); count];
        for c in 0..count {
            let best = (0..self.total_vertices())
                .filter(|&v| comp[v] == c)
                .map(|v| self.component_signature(&adj, v, base_marks.as_ref()))
                .min()
                .unwrap_or_default();
            sigs[c] = best;
        }
        sigs.sort();
        let header = format!(
            "{}#o{}#v{:?}#",
            self.factors
                .iter()
                .map(|f| match f {
                    FactorSpec::Cyclic { order } => format!("C{order}"),
                    FactorSpec::Free { rank } => format!("F{rank}"),
                })
                .collect::<Vec<_>>()
                .join("*"),
            self.o_count,
            self.v_counts,
        );
        Signature(header + &sigs.join("⊎"))
    }

    /// Number of label- and projection-preserving self-isomorphisms;
    /// basepoints are ignored. The input must be connected.
    pub fn automorphism_count(&self) -> Result<u64> {
        let (_, count) = self.components();
        if count != 1 {
            return Err(Error::Disconnected);
        }
        if self.total_vertices() == 0 {
            return Ok(1);
        }
        let adj = self.adjacency();
        let sigs: Vec<String> = (0..self.total_vertices())
            .map(|v| self.component_signature(&adj, v, None))
            .collect();
        let best = sigs.iter().min().unwrap();
        Ok(sigs.iter().filter(|s| *s == best).count() as u64)
    }

    /// Disjoint union; basepoint lists concatenate.
    pub fn disjoint_union(parts: &[&SubCover]) -> Result<SubCover> {
        let first = parts.first().ok_or(Error::MixedPresentations)?;
        let mut out = SubCover::with_factors(first.factors.clone());
        for part in parts {
            if part.factors != out.factors {
                return Err(Error::MixedPresentations);
            }
            let o_off = out.o_count;
            let v_off: Vec<usize> = out.v_counts.clone();
            for _ in 0..part.o_count {
                out.add_o();
            }
            for (factor, &c) in part.v_counts.iter().enumerate() {
                for _ in 0..c {
                    out.add_v(factor);
                }
            }
            for (factor, col) in part.e_edge.iter().enumerate() {
                for (o, v) in col.iter().enumerate() {
                    if let Some(v) = *v {
                        out.set_e_edge(factor, o + o_off, v + v_off[factor]);
                    }
                }
            }
            for (factor, gens) in part.gen_edge.iter().enumerate() {
                for (gen, col) in gens.iter().enumerate() {
                    for (from, to) in col.iter().enumerate() {
                        if let Some(to) = *to {
                            out.set_gen_edge(
                                factor,
                                gen,
                                from + v_off[factor],
                                to + v_off[factor],
                            );
                        }
                    }
                }
            }
            for b in &part.basepoints {
                let shifted = match *b {
                    Vertex::O(i) => Vertex::O(i + o_off),
                    Vertex::V { factor, index } => {
                        Vertex::V { factor, index: index + v_off[factor] }
                    }
                };
                out.add_basepoint(shifted);
            }
        }
        Ok(out)
    }

    /// Spanning-tree generators of the labeled fundamental group at `base`:
    /// one word per non-tree edge, read along tree-path · edge · tree-path⁻¹
    /// and brought to normal form; trivial words are dropped.
    pub fn plab_generators(&self, base: Vertex, p: &Presentation) -> Result<Vec<Word>> {
        let n = self.total_vertices();
        let start = self.global_index(base);
        if start >= n {
            return Err(Error::NoSuchVertex);
        }
        let adj = self.adjacency();
        // BFS tree with path words accumulated as raw syllables.
        let mut path: Vec<Option<Vec<Syllable>>> = vec![None; n];
        let mut tree_edges: Vec<(Label, usize, usize)> = Vec::new();
        path[start] = Some(Vec::new());
        let mut queue = std::collections::VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            for &(label, out, w) in &adj[v] {
                if path[w].is_some() {
                    continue;
                }
                let mut pw = path[v].clone().unwrap();
                if let Some(s) = edge_syllable(label, out, p) {
                    pw.push(s);
                }
                path[w] = Some(pw);
                let (src, dst) = if out { (v, w) } else { (w, v) };
                tree_edges.push((label, src, dst));
                queue.push_back(w);
            }
        }
        let mut gens = Vec::new();
        for (label, src, dst) in self.labeled_edges() {
            if path[src].is_none() {
                continue; // other component
            }
            if tree_edges.contains(&(label, src, dst)) {
                continue;
            }
            let mut syl = path[src].clone().unwrap();
            if let Some(s) = edge_syllable(label, true, p) {
                syl.push(s);
            }
            let back = path[dst].clone().unwrap();
            for s in back.into_iter().rev() {
                syl.push(s.clone_inverted(p));
            }
            let w = Word::from_syllables(syl, p);
            if !w.is_trivial() {
                gens.push(w);
            }
        }
        gens.sort_by_key(|w| w.format(p));
        gens.dedup();
        Ok(gens)
    }

    /// Follows the closed-path spelling of `word` starting at `base`, using
    /// whatever part of the permutation action the sub-cover determines.
    /// Returns the endpoint, or `None` if the path leaves the sub-cover.
    pub fn trace_word(&self, base: Vertex, word: &Word, p: &Presentation) -> Option<Vertex> {
        let mut cur = base;
        for syl in word.syllables() {
            match syl {
                Syllable::Cyclic { factor, exp } => {
                    let o = match cur {
                        Vertex::O(o) => o,
                        Vertex::V { .. } => return None,
                    };
                    let enter = self.e_edge[*factor][o]?;
                    let landed = self.cyclic_step(*factor, enter, *exp)?;
                    let back = self.e_edge[*factor]
                        .iter()
                        .position(|v| *v == Some(landed))?;
                    cur = Vertex::O(back);
                }
                Syllable::Free { factor, letters } => match cur {
                    Vertex::O(o) => {
                        let enter = self.e_edge[*factor][o]?;
                        let landed = self.free_steps(*factor, enter, letters)?;
                        let back = self.e_edge[*factor]
                            .iter()
                            .position(|v| *v == Some(landed))?;
                        cur = Vertex::O(back);
                    }
                    Vertex::V { factor: f, index } => {
                        if f != *factor {
                            return None;
                        }
                        let landed = self.free_steps(*factor, index, letters)?;
                        cur = Vertex::V { factor: f, index: landed };
                    }
                },
            }
        }
        Some(cur)
    }

    /// Net σ^t displacement in the partial permutation over a cyclic factor.
    fn cyclic_step(&self, factor: usize, from: usize, exp: u32) -> Option<usize> {
        let q = match self.factors[factor] {
            FactorSpec::Cyclic { order } => order as i64,
            FactorSpec::Free { .. } => unreachable!(),
        };
        let comps = self.cyclic_components(factor);
        for cycle in &comps.cycles {
            if let Some(pos) = cycle.iter().position(|&v| v == from) {
                let d = cycle.len();
                return Some(cycle[(pos + exp as usize) % d]);
            }
        }
        for arc in &comps.arcs {
            if let Some(pos) = arc.iter().position(|&v| v == from) {
                // The unique displacement ≡ exp (mod q) realizable in the arc.
                let lo = -(pos as i64);
                let hi = (arc.len() - 1 - pos) as i64;
                for e in [exp as i64, exp as i64 - q] {
                    if e >= lo && e <= hi {
                        return Some(arc[(pos as i64 + e) as usize]);
                    }
                }
                return None;
            }
        }
        None
    }

    fn free_steps(&self, factor: usize, from: usize, letters: &[Letter]) -> Option<usize> {
        let mut cur = from;
        for l in letters {
            let col = &self.gen_edge[factor][l.gen as usize];
            cur = if l.inverse {
                col.iter().position(|t| *t == Some(cur))?
            } else {
                col[cur]?
            };
        }
        Some(cur)
    }

    /// Deterministic JSON rendering for debugging and golden tests.
    pub fn to_json(&self) -> serde_json::Value {
        let mut edges: Vec<serde_json::Value> = Vec::new();
        for (label, src, dst) in self.labeled_edges() {
            let name = match label {
                Label::E { factor } => format!("e{factor}"),
                Label::Gen { factor, gen } => format!("g{factor}.{gen}"),
            };
            edges.push(serde_json::json!([name, src, dst]));
        }
        serde_json::json!({
            "factors": self.factors.iter().map(|f| match f {
                FactorSpec::Cyclic { order } => format!("C{order}"),
                FactorSpec::Free { rank } => format!("F{rank}"),
            }).collect::<Vec<_>>(),
            "o_count": self.o_count,
            "v_counts": self.v_counts,
            "edges": edges,
            "basepoints": self.basepoints.iter().map(|b| match b {
                Vertex::O(i) => serde_json::json!(["o", i]),
                Vertex::V { factor, index } => serde_json::json!(["v", factor, index]),
            }).collect::<Vec<_>>(),
        })
    }
}

impl Syllable {
    fn clone_inverted(&self, p: &Presentation) -> Syllable {
        match self {
            Syllable::Cyclic { factor, exp } => {
                Syllable::Cyclic { factor: *factor, exp: p.order(*factor) - exp }
            }
            Syllable::Free { factor, letters } => Syllable::Free {
                factor: *factor,
                letters: letters.iter().rev().map(|l| l.inverted()).collect(),
            },
        }
    }
}

fn edge_syllable(label: Label, along: bool, p: &Presentation) -> Option<Syllable> {
    match label {
        Label::E { .. } => None,
        Label::Gen { factor, gen } => match p.factor(factor) {
            FactorSpec::Cyclic { order } => {
                Some(Syllable::Cyclic { factor, exp: if along { 1 } else { order - 1 } })
            }
            FactorSpec::Free { .. } => Some(Syllable::Free {
                factor,
                letters: vec![Letter { gen: gen as u32, inverse: !along }],
            }),
        },
    }
}

/// Builds the circle sub-cover of a nontrivial infinite-order word, with one
/// basepoint. The word is cyclically reduced internally; each cyclic-factor
/// syllable `x^t` is realized by `min(t, q-t)` edges, forward when `2t ≤ q`.
pub fn build_y(word: &Word, p: &Presentation) -> Result<SubCover> {
    let (w, _) = word.cyclic_reduce(p);
    if w.is_empty() {
        return Err(Error::TrivialWord);
    }
    if w.len() == 1 {
        match &w.syllables()[0] {
            Syllable::Cyclic { .. } => return Err(Error::TorsionWord),
            Syllable::Free { factor, letters } => {
                let mut y = SubCover::new(p);
                let factor = *factor;
                let n = letters.len();
                let verts: Vec<usize> = (0..n).map(|_| y.add_v(factor)).collect();
                for (k, l) in letters.iter().enumerate() {
                    let a = verts[k];
                    let b = verts[(k + 1) % n];
                    if l.inverse {
                        y.set_gen_edge(factor, l.gen as usize, b, a);
                    } else {
                        y.set_gen_edge(factor, l.gen as usize, a, b);
                    }
                }
                y.add_basepoint(Vertex::V { factor, index: 0 });
                y.saturate();
                debug_assert!(y.validate().is_ok());
                return Ok(y);
            }
        }
    }

    let mut y = SubCover::new(p);
    let ell = w.len();
    let o_verts: Vec<usize> = (0..ell).map(|_| y.add_o()).collect();
    for (j, syl) in w.syllables().iter().enumerate() {
        let o_in = o_verts[j];
        let o_out = o_verts[(j + 1) % ell];
        match syl {
            Syllable::Cyclic { factor, exp } => {
                let factor = *factor;
                let q = p.order(factor);
                let steps = (*exp).min(q - exp) as usize;
                let forward = 2 * exp <= q;
                let verts: Vec<usize> = (0..=steps).map(|_| y.add_v(factor)).collect();
                for k in 0..steps {
                    if forward {
                        y.set_gen_edge(factor, 0, verts[k], verts[k + 1]);
                    } else {
                        y.set_gen_edge(factor, 0, verts[k + 1], verts[k]);
                    }
                }
                y.set_e_edge(factor, o_in, verts[0]);
                y.set_e_edge(factor, o_out, verts[steps]);
            }
            Syllable::Free { factor, letters } => {
                let factor = *factor;
                let verts: Vec<usize> = (0..=letters.len()).map(|_| y.add_v(factor)).collect();
                for (k, l) in letters.iter().enumerate() {
                    if l.inverse {
                        y.set_gen_edge(factor, l.gen as usize, verts[k + 1], verts[k]);
                    } else {
                        y.set_gen_edge(factor, l.gen as usize, verts[k], verts[k + 1]);
                    }
                }
                y.set_e_edge(factor, o_in, verts[0]);
                y.set_e_edge(factor, o_out, verts[letters.len()]);
            }
        }
    }
    y.add_basepoint(Vertex::O(0));
    y.saturate();
    debug_assert!(y.validate().is_ok());
    Ok(y)
}

/// Arc edge-lengths and cycle lengths of a cyclic-factor fiber, in the shape
/// [`crate::exact`] consumes.
pub fn cyclic_profile(z: &SubCover, factor: usize) -> (Vec<u64>, Vec<u64>) {
    let comps = z.cyclic_components(factor);
    let arcs = comps.arcs.iter().map(|a| (a.len() - 1) as u64).collect();
    let cycles = comps.cycles.iter().map(|c| c.len() as u64).collect();
    (arcs, cycles)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::parse_word;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn build(group: &str, word: &str) -> (Presentation, SubCover) {
        let p = Presentation::parse(group).unwrap();
        let w = parse_word(word, &p).unwrap();
        let y = build_y(&w, &p).unwrap();
        (p, y)
    }

    #[test]
    fn circle_for_abab_inverse_in_c2c4() {
        let (_, y) = build("C2*C4", "a*b*a*b^-1");
        assert_eq!(y.o_count(), 4);
        assert_eq!(y.e_edge_count(0) + y.e_edge_count(1), 8);
        assert_eq!(y.v_count(0) + y.v_count(1), 8);
        assert!(y.validate().is_ok());
        // χ^grp = 4 + (2-4) + (2-4) = 0: the identity class is EC-zero here.
        assert_eq!(y.chi_grp().total, rat(0, 1));
    }

    #[test]
    fn circle_for_free_word() {
        let (_, y) = build("F2", "a*b");
        assert_eq!(y.o_count(), 0);
        assert_eq!(y.v_count(0), 2);
        assert_eq!(y.gen_edge_count(0, 0), 1);
        assert_eq!(y.gen_edge_count(0, 1), 1);
        assert_eq!(y.chi_grp().total, rat(0, 1));
    }

    #[test]
    fn circle_for_ab_cubed_in_c2c2() {
        let (_, y) = build("C2*C2", "(a*b)^3");
        assert_eq!(y.o_count(), 6);
        // Six one-edge chains, saturated to 2-cycles over C2.
        assert_eq!(y.v_count(0), 6);
        assert_eq!(y.v_count(1), 6);
        let comps = y.cyclic_components(0);
        assert_eq!(comps.arcs.len(), 0);
        assert_eq!(comps.cycles.len(), 3);
        assert_eq!(y.chi_grp().total, rat(0, 1));
        // Rotations by one ab-period and the three reflections.
        assert_eq!(y.automorphism_count().unwrap(), 6);
    }

    #[test]
    fn chi_of_single_o_vertex_is_one() {
        let p = Presentation::parse("C2*C3").unwrap();
        let mut z = SubCover::new(&p);
        z.add_o();
        assert_eq!(z.chi_grp().total, rat(1, 1));
    }

    #[test]
    fn chi_of_full_cycle_is_d_over_q() {
        let p = Presentation::parse("C4").unwrap();
        let mut z = SubCover::new(&p);
        let a = z.add_v(0);
        let b = z.add_v(0);
        z.set_gen_edge(0, 0, a, b);
        z.set_gen_edge(0, 0, b, a);
        assert_eq!(z.chi_grp().total, rat(2, 4));
    }

    #[test]
    fn two_vertex_cover_of_infinite_dihedral_has_two_automorphisms() {
        // The circle of ab over C2*C2: the subgroup ⟨xy⟩ of index 2.
        let (_, y) = build("C2*C2", "a*b");
        assert_eq!(y.automorphism_count().unwrap(), 2);
    }

    #[test]
    fn asymmetric_tree_has_trivial_automorphisms() {
        let p = Presentation::parse("C2*C3").unwrap();
        let mut z = SubCover::new(&p);
        let o = z.add_o();
        let v = z.add_v(1);
        z.set_e_edge(1, o, v);
        assert_eq!(z.automorphism_count().unwrap(), 1);
    }

    #[test]
    fn canonical_form_is_relabeling_invariant() {
        let p = Presentation::parse("C2*C3").unwrap();
        let w1 = parse_word("a*b*a*b^-1", &p).unwrap();
        let y1 = build_y(&w1, &p).unwrap();
        // The rotated word spells the same circle with a shifted basepoint.
        let w2 = parse_word("b*a*b^-1*a", &p).unwrap();
        let y2 = build_y(&w2, &p).unwrap();
        assert_eq!(
            y1.canonical_form(CanonMode::Unbased),
            y2.canonical_form(CanonMode::Unbased)
        );
        // Reading y1 backwards from its basepoint spells exactly w2, and over
        // C2 the a-edges are direction-free, so these two are even
        // based-isomorphic: the reflection through the basepoint.
        assert_eq!(
            y1.canonical_form(CanonMode::Based),
            y2.canonical_form(CanonMode::Based)
        );
    }

    #[test]
    fn distinct_cycle_lengths_get_distinct_signatures() {
        let p = Presentation::parse("C4").unwrap();
        let mut z2 = SubCover::new(&p);
        let a = z2.add_v(0);
        let b = z2.add_v(0);
        z2.set_gen_edge(0, 0, a, b);
        z2.set_gen_edge(0, 0, b, a);
        let mut z4 = SubCover::new(&p);
        let vs: Vec<usize> = (0..4).map(|_| z4.add_v(0)).collect();
        for k in 0..4 {
            z4.set_gen_edge(0, 0, vs[k], vs[(k + 1) % 4]);
        }
        assert_ne!(
            z2.canonical_form(CanonMode::Unbased),
            z4.canonical_form(CanonMode::Unbased)
        );
    }

    #[test]
    fn based_and_unbased_signatures_for_rotated_words() {
        let p = Presentation::parse("C2*C3").unwrap();
        let ab = build_y(&parse_word("a*b", &p).unwrap(), &p).unwrap();
        let ba = build_y(&parse_word("b*a", &p).unwrap(), &p).unwrap();
        assert_eq!(
            ab.canonical_form(CanonMode::Unbased),
            ba.canonical_form(CanonMode::Unbased)
        );
        assert_ne!(
            ab.canonical_form(CanonMode::Based),
            ba.canonical_form(CanonMode::Based)
        );
    }

    #[test]
    fn plab_of_circle_is_the_word() {
        let p = Presentation::parse("C2*C3").unwrap();
        let w = parse_word("a*b", &p).unwrap();
        let y = build_y(&w, &p).unwrap();
        let gens = y.plab_generators(Vertex::O(0), &p).unwrap();
        assert_eq!(gens.len(), 1);
        // The circle word at the basepoint, up to inversion.
        assert!(gens[0] == w || gens[0] == w.inverse(&p));
    }

    #[test]
    fn plab_of_point_is_empty() {
        let p = Presentation::parse("C2*C3").unwrap();
        let mut z = SubCover::new(&p);
        z.add_o();
        assert!(z.plab_generators(Vertex::O(0), &p).unwrap().is_empty());
    }

    #[test]
    fn union_counts_add_up() {
        let (_p, y) = build("C2*C3", "a*b");
        let u = SubCover::disjoint_union(&[&y, &y, &y]).unwrap();
        assert_eq!(u.o_count(), 3 * y.o_count());
        assert_eq!(u.basepoints().len(), 3);
        let chi_y = y.chi_grp().total;
        assert_eq!(u.chi_grp().total, chi_y.clone() + chi_y.clone() + chi_y);
        let q = Presentation::parse("C2*C4").unwrap();
        let z = SubCover::new(&q);
        assert!(SubCover::disjoint_union(&[&y, &z]).is_err());
    }

    #[test]
    fn trace_follows_the_circle() {
        let p = Presentation::parse("C2*C2").unwrap();
        let ab = parse_word("a*b", &p).unwrap();
        let y3 = build_y(&ab.power(3, &p), &p).unwrap();
        // (ab)^1 from the basepoint moves two segments around the hexagon.
        assert_eq!(y3.trace_word(Vertex::O(0), &ab, &p), Some(Vertex::O(2)));
        assert_eq!(
            y3.trace_word(Vertex::O(0), &ab.power(3, &p), &p),
            Some(Vertex::O(0))
        );
    }

    #[test]
    fn json_is_deterministic() {
        let (_, y) = build("C2*C4", "a*b*a*b^-1");
        let a = serde_json::to_string(&y.to_json()).unwrap();
        let b = serde_json::to_string(&y.to_json()).unwrap();
        assert_eq!(a, b);
        assert!(a.contains("\"o_count\":4"));
    }

    #[test]
    fn saturation_closes_forced_chains() {
        let p = Presentation::parse("C2").unwrap();
        let mut z = SubCover::new(&p);
        let a = z.add_v(0);
        let b = z.add_v(0);
        z.set_gen_edge(0, 0, a, b);
        z.saturate();
        assert_eq!(z.gen_edges(0, 0)[b], Some(a));
        assert!(z.validate().is_ok());
    }

    #[test]
    fn validate_rejects_bad_cycles() {
        let p = Presentation::parse("C4").unwrap();
        let mut z = SubCover::new(&p);
        let vs: Vec<usize> = (0..3).map(|_| z.add_v(0)).collect();
        for k in 0..3 {
            z.set_gen_edge(0, 0, vs[k], vs[(k + 1) % 3]);
        }
        assert!(z.validate().is_err());
    }
}
