//! Semibranching function systems of prepend type.
//!
//! Both systems built from a diagram live on a one-sided shift of finite type:
//! the edge system on linked edge words (transition matrix `Ã`), the vertex
//! system on admissible vertex words (transition matrix `A`). Letter `i` acts
//! by `σ_i(w) = i·w` on `D_i` and the coding map drops the first letter.
//! Domains and ranges are finite unions of cylinders, so comparing them after
//! refinement to a common depth is exact.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::diagram::{coupled_graph, Diagram, EdgeId, VertexId, ZeroOneMatrix};
use crate::error::{Error, Result};

pub type Word = Vec<usize>;

/// Admissible words over an alphabet with a 0-1 transition matrix.
#[derive(Clone, Debug)]
pub struct ShiftSpace {
    matrix: ZeroOneMatrix,
    labels: Vec<String>,
}

impl ShiftSpace {
    pub fn new(matrix: ZeroOneMatrix, labels: Vec<String>) -> Self {
        assert_eq!(matrix.n(), labels.len(), "one label per letter");
        ShiftSpace { matrix, labels }
    }

    pub fn alphabet_size(&self) -> usize {
        self.matrix.n()
    }

    pub fn matrix(&self) -> &ZeroOneMatrix {
        &self.matrix
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn allowed(&self, i: usize, j: usize) -> bool {
        self.matrix.get(i, j)
    }

    pub fn is_admissible(&self, w: &[usize]) -> bool {
        w.iter().all(|&x| x < self.alphabet_size())
            && w.windows(2).all(|p| self.allowed(p[0], p[1]))
    }

    /// Admissible words of length `k`, lexicographic.
    pub fn words(&self, k: usize) -> Vec<Word> {
        if k == 0 {
            return vec![Vec::new()];
        }
        let n = self.alphabet_size();
        let mut words: Vec<Word> = (0..n).map(|i| vec![i]).collect();
        for _ in 1..k {
            let mut next = Vec::with_capacity(words.len() * 2);
            for w in &words {
                let last = *w.last().expect("nonempty");
                for j in 0..n {
                    if self.allowed(last, j) {
                        let mut x = w.clone();
                        x.push(j);
                        next.push(x);
                    }
                }
            }
            words = next;
        }
        words
    }

    /// All admissible extensions of `w` to length `k >= |w|`.
    pub fn extensions(&self, w: &[usize], k: usize) -> Vec<Word> {
        let mut words = vec![w.to_vec()];
        for _ in w.len()..k {
            let mut next = Vec::new();
            for x in &words {
                let candidates: Box<dyn Iterator<Item = usize>> = match x.last() {
                    Some(&last) => {
                        Box::new((0..self.alphabet_size()).filter(move |&j| self.allowed(last, j)))
                    }
                    None => Box::new(0..self.alphabet_size()),
                };
                for j in candidates {
                    let mut y = x.clone();
                    y.push(j);
                    next.push(y);
                }
            }
            words = next;
        }
        words
    }

    pub fn format_word(&self, w: &[usize]) -> String {
        let names: Vec<&str> = w.iter().map(|&i| self.label(i)).collect();
        format!("({})", names.join(","))
    }
}

/// Finite union of cylinders of one common depth.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CylinderSet {
    depth: usize,
    members: BTreeSet<Word>,
}

impl CylinderSet {
    pub fn new(depth: usize, members: impl IntoIterator<Item = Word>) -> Result<Self> {
        let members: BTreeSet<Word> = members.into_iter().collect();
        if let Some(w) = members.iter().find(|w| w.len() != depth) {
            return Err(Error::InvalidInput(format!(
                "cylinder of length {} in a depth-{} set",
                w.len(),
                depth
            )));
        }
        Ok(CylinderSet { depth, members })
    }

    pub fn empty(depth: usize) -> Self {
        CylinderSet {
            depth,
            members: BTreeSet::new(),
        }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn members(&self) -> &BTreeSet<Word> {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// The same set written with cylinders of depth `k >= self.depth`.
    pub fn refine(&self, space: &ShiftSpace, k: usize) -> CylinderSet {
        assert!(k >= self.depth, "refinement cannot coarsen");
        if k == self.depth {
            return self.clone();
        }
        CylinderSet {
            depth: k,
            members: self
                .members
                .iter()
                .flat_map(|w| space.extensions(w, k))
                .collect(),
        }
    }

    /// Whether the cylinder `[w]` lies inside the set.
    pub fn contains_cylinder(&self, space: &ShiftSpace, w: &[usize]) -> bool {
        if w.len() >= self.depth {
            self.members.contains(&w[..self.depth])
        } else {
            space
                .extensions(w, self.depth)
                .iter()
                .all(|x| self.members.contains(x))
        }
    }

    pub fn union(&self, other: &CylinderSet, space: &ShiftSpace) -> CylinderSet {
        let k = self.depth.max(other.depth);
        let mut a = self.refine(space, k);
        a.members.extend(other.refine(space, k).members);
        a
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SfsKind {
    /// Indexed by edges, acting on edge words.
    Edge,
    /// Indexed by vertices, acting on vertex words.
    Vertex,
}

/// Index set, domains `D_i`, ranges `R_i`; `σ_i` prepends `i`.
#[derive(Clone, Debug)]
pub struct SfsDescriptor {
    pub kind: SfsKind,
    pub space: ShiftSpace,
    pub domains: Vec<CylinderSet>,
    pub ranges: Vec<CylinderSet>,
}

impl SfsDescriptor {
    pub fn index_size(&self) -> usize {
        self.domains.len()
    }

    /// `σ_i(w) = i·w`, defined on `D_i` only.
    pub fn prepend(&self, i: usize, w: &[usize]) -> Option<Word> {
        if !self.domains[i].contains_cylinder(&self.space, w) {
            return None;
        }
        let mut out = Vec::with_capacity(w.len() + 1);
        out.push(i);
        out.extend_from_slice(w);
        Some(out)
    }

    /// Coding map.
    pub fn coding(&self, w: &[usize]) -> Word {
        w.get(1..).map(<[usize]>::to_vec).unwrap_or_default()
    }

    /// Replaces one domain, e.g. to build a deliberately broken system.
    pub fn with_domain(mut self, i: usize, d: CylinderSet) -> Self {
        self.domains[i] = d;
        self
    }

    fn max_depth(&self) -> usize {
        self.domains
            .iter()
            .chain(&self.ranges)
            .map(CylinderSet::depth)
            .max()
            .unwrap_or(1)
            .max(1)
    }

    /// `σ(σ_i(w)) = w` and `σ_i(w) ∈ R_i` for every `w ∈ D_i` of length
    /// `1..=k`; returns the first failing `(i, w)`.
    pub fn coding_inverse_check(&self, k: usize) -> Option<(usize, Word)> {
        for len in 1..=k {
            for w in self.space.words(len) {
                for i in 0..self.index_size() {
                    if let Some(x) = self.prepend(i, &w) {
                        if self.coding(&x) != w
                            || !self.ranges[i].contains_cylinder(&self.space, &x)
                        {
                            return Some((i, w));
                        }
                    }
                }
            }
        }
        None
    }

    /// Ranges must partition every depth: returns a word covered zero times or
    /// more than once.
    pub fn range_partition_check(&self, k: usize) -> Option<Word> {
        let k = k.max(self.max_depth());
        let refined: Vec<CylinderSet> = self
            .ranges
            .iter()
            .map(|r| r.refine(&self.space, k))
            .collect();
        self.space
            .words(k)
            .into_iter()
            .find(|w| refined.iter().filter(|r| r.members.contains(w)).count() != 1)
    }
}

pub fn edge_sfs(d: &Diagram) -> SfsDescriptor {
    let g = coupled_graph(d);
    let labels = (0..d.edge_count())
        .map(|e| d.edges.label(e).to_string())
        .collect();
    let space = ShiftSpace::new(g.adjacency, labels);
    // D_e depends only on r(e).
    let by_range: Vec<CylinderSet> = (0..d.vertex_count())
        .map(|v| {
            CylinderSet::new(1, d.edges.out_edges(v).iter().map(|&f| vec![f])).expect("depth 1")
        })
        .collect();
    let domains = (0..d.edge_count())
        .map(|e| by_range[d.edges.range(e)].clone())
        .collect();
    let ranges = (0..d.edge_count())
        .map(|e| CylinderSet::new(1, [vec![e]]).expect("depth 1"))
        .collect();
    SfsDescriptor {
        kind: SfsKind::Edge,
        space,
        domains,
        ranges,
    }
}

pub fn vertex_sfs(d: &Diagram) -> SfsDescriptor {
    let n = d.vertex_count();
    let labels = (1..=n).map(|v| v.to_string()).collect();
    let space = ShiftSpace::new(d.matrix.clone(), labels);
    let domains = (0..n)
        .map(|i| {
            CylinderSet::new(1, (0..n).filter(|&j| d.matrix.get(i, j)).map(|j| vec![j]))
                .expect("depth 1")
        })
        .collect();
    let ranges = (0..n)
        .map(|i| CylinderSet::new(1, [vec![i]]).expect("depth 1"))
        .collect();
    SfsDescriptor {
        kind: SfsKind::Vertex,
        space,
        domains,
        ranges,
    }
}

/// First depth-`k` word outside every domain.
pub fn saturation_check(s: &SfsDescriptor, k: usize) -> Option<Word> {
    let k = k.max(s.max_depth());
    let refined: Vec<CylinderSet> = s.domains.iter().map(|d| d.refine(&s.space, k)).collect();
    s.space
        .words(k)
        .into_iter()
        .find(|w| !refined.iter().any(|d| d.members.contains(w)))
}

/// 0-1 matrix over the index set, `ã_{i,j} = 1` iff `R_j ⊆ D_i`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CkMatrix {
    pub rows: Vec<Vec<u8>>,
}

impl CkMatrix {
    pub fn to_zero_one(&self) -> Result<ZeroOneMatrix> {
        ZeroOneMatrix::new(self.rows.clone())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "failure", rename_all = "kebab-case")]
pub enum CkFailure {
    NotSaturated {
        witness: Word,
    },
    RangesOverlapOrGap {
        witness: Word,
    },
    /// `D_index` is not a disjoint union of ranges; `witness` lies in `D_index`
    /// but in no range contained in it.
    NotUnionOfRanges {
        index: usize,
        witness: Word,
    },
}

pub fn ck_condition(s: &SfsDescriptor) -> std::result::Result<CkMatrix, CkFailure> {
    let k = s.max_depth();
    if let Some(witness) = saturation_check(s, k) {
        return Err(CkFailure::NotSaturated { witness });
    }
    if let Some(witness) = s.range_partition_check(k) {
        return Err(CkFailure::RangesOverlapOrGap { witness });
    }
    let ranges: Vec<CylinderSet> = s.ranges.iter().map(|r| r.refine(&s.space, k)).collect();
    let mut rows = Vec::with_capacity(s.index_size());
    for (i, dom) in s.domains.iter().enumerate() {
        let dom = dom.refine(&s.space, k);
        let row: Vec<u8> = ranges
            .iter()
            .map(|r| (!r.is_empty() && r.members.is_subset(&dom.members)) as u8)
            .collect();
        let covered: BTreeSet<&Word> = ranges
            .iter()
            .zip(&row)
            .filter(|(_, &a)| a == 1)
            .flat_map(|(r, _)| r.members.iter())
            .collect();
        if let Some(w) = dom.members.iter().find(|w| !covered.contains(w)) {
            return Err(CkFailure::NotUnionOfRanges {
                index: i,
                witness: w.clone(),
            });
        }
        rows.push(row);
    }
    Ok(CkMatrix { rows })
}

/// JSON shape of an s.f.s. check.
#[derive(Clone, Debug, Serialize)]
pub struct SfsReport {
    pub saturated: bool,
    pub ck_matrix: Option<Vec<Vec<u8>>>,
    pub witness: Option<Vec<String>>,
}

pub fn sfs_report(s: &SfsDescriptor, k: usize) -> SfsReport {
    let labels = |w: &Word| w.iter().map(|&i| s.space.label(i).to_string()).collect();
    let sat = saturation_check(s, k);
    match ck_condition(s) {
        Ok(m) => SfsReport {
            saturated: sat.is_none(),
            ck_matrix: Some(m.rows),
            witness: sat.as_ref().map(labels),
        },
        Err(f) => {
            let w = match &f {
                CkFailure::NotSaturated { witness }
                | CkFailure::RangesOverlapOrGap { witness }
                | CkFailure::NotUnionOfRanges { witness, .. } => witness,
            };
            SfsReport {
                saturated: sat.is_none(),
                ck_matrix: None,
                witness: Some(labels(w)),
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    VertexToEdge,
    EdgeToVertex,
}

/// `(i_1..i_{k+1}) -> (e_1..e_k)` with `s(e_j) = i_j`, `r(e_j) = i_{j+1}`.
pub fn vertex_to_edge(d: &Diagram, word: &[VertexId]) -> Result<Vec<EdgeId>> {
    if word.iter().any(|&v| v >= d.vertex_count()) {
        return Err(Error::InvalidInput("vertex out of range".into()));
    }
    word.windows(2)
        .map(|p| {
            d.edges.edge_between(p[0], p[1]).ok_or_else(|| {
                Error::UnlinkedWord(format!(
                    "vertex word has a_{{{},{}}} = 0",
                    p[0] + 1,
                    p[1] + 1
                ))
            })
        })
        .collect()
}

pub fn edge_to_vertex(d: &Diagram, word: &[EdgeId]) -> Result<Vec<VertexId>> {
    if word.is_empty() {
        return Err(Error::InvalidInput("empty edge word".into()));
    }
    if !d.is_linked_word(word) {
        return Err(Error::UnlinkedWord(
            d.edges.format_word(
                &word
                    .iter()
                    .copied()
                    .filter(|&e| e < d.edge_count())
                    .collect::<Vec<_>>(),
            ),
        ));
    }
    let mut out = Vec::with_capacity(word.len() + 1);
    out.push(d.edges.source(word[0]));
    out.extend(word.iter().map(|&e| d.edges.range(e)));
    Ok(out)
}

pub fn word_translate(d: &Diagram, direction: Direction, word: &[usize]) -> Result<Word> {
    match direction {
        Direction::VertexToEdge => vertex_to_edge(d, word),
        Direction::EdgeToVertex => edge_to_vertex(d, word),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RefinementFailure {
    pub relation: String,
    /// Offending word in the edge system's letters.
    pub witness: Vec<EdgeId>,
}

/// Checks that the edge system refines the vertex system, comparing sets as
/// depth-`k` edge cylinders (vertex words of length `k + 1`):
/// `R_i = ⋃_{s(e)=i} R̃_e`, `D_i = ⋃_{s(e)=i} D̃_e`,
/// `σ_i|_{D̃_e} = σ̃_e` and `σ = σ̃`.
pub fn refinement_check(
    d: &Diagram,
    edge: &SfsDescriptor,
    vertex: &SfsDescriptor,
    k: usize,
) -> std::result::Result<(), RefinementFailure> {
    let k = k.max(1);
    let fail =
        |relation: String, witness: Vec<EdgeId>| Err(RefinementFailure { relation, witness });
    let to_edges = |set: &CylinderSet| -> BTreeSet<Word> {
        set.refine(&vertex.space, k + 1)
            .members
            .iter()
            .map(|w| vertex_to_edge(d, w).expect("admissible vertex word"))
            .collect()
    };
    let union_over = |sets: &[CylinderSet], i: VertexId| -> BTreeSet<Word> {
        let mut out = BTreeSet::new();
        for &e in d.edges.out_edges(i) {
            out.extend(sets[e].refine(&edge.space, k).members);
        }
        out
    };
    let first_diff = |a: &BTreeSet<Word>, b: &BTreeSet<Word>| -> Option<Word> {
        a.symmetric_difference(b).next().cloned()
    };
    for i in 0..d.vertex_count() {
        if let Some(w) = first_diff(&to_edges(&vertex.ranges[i]), &union_over(&edge.ranges, i)) {
            return fail(
                format!("R_{} = union of R~_e over s(e) = {}", i + 1, i + 1),
                w,
            );
        }
        if let Some(w) = first_diff(&to_edges(&vertex.domains[i]), &union_over(&edge.domains, i)) {
            return fail(
                format!("D_{} = union of D~_e over s(e) = {}", i + 1, i + 1),
                w,
            );
        }
    }
    for len in 1..=k {
        for w in edge.space.words(len) {
            let vw = edge_to_vertex(d, &w).expect("linked");
            for e in 0..d.edge_count() {
                let i = d.edges.source(e);
                if let Some(x) = edge.prepend(e, &w) {
                    let via_vertex = vertex.prepend(i, &vw).map(|y| vertex_to_edge(d, &y));
                    if via_vertex.map(|r| r.ok()) != Some(Some(x)) {
                        return fail(
                            format!(
                                "sigma_{} restricted to D~_{} = sigma~_{}",
                                i + 1,
                                d.edges.label(e),
                                d.edges.label(e)
                            ),
                            w,
                        );
                    }
                }
            }
            if len >= 2 {
                let coded = edge.coding(&w);
                let via_vertex = vertex_to_edge(d, &vertex.coding(&vw)).expect("admissible");
                if coded != via_vertex {
                    return fail("sigma = sigma~".into(), w);
                }
            }
        }
    }
    Ok(())
}
