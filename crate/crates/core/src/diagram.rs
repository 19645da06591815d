//! Stationary 0-1 diagrams: incidence matrices, edge tables, linked pairs and
//! the coupled graph.
//!
//! Vertices and edges are 0-based internally. Edge `e` with `source(e) = i`
//! and `range(e) = j` corresponds to the nonzero entry `a_{i,j}`; display
//! names and JSON use 1-based vertices.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};

pub type VertexId = usize;
pub type EdgeId = usize;

/// Square 0-1 matrix with no zero rows or columns.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ZeroOneMatrix {
    n: usize,
    entries: Vec<bool>,
}

impl ZeroOneMatrix {
    pub fn new(rows: Vec<Vec<u8>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::InvalidDiagram("matrix is empty".into()));
        }
        let mut entries = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidDiagram(format!(
                    "row {} has {} entries, expected {}",
                    i + 1,
                    row.len(),
                    n
                )));
            }
            for (j, &a) in row.iter().enumerate() {
                match a {
                    0 => entries.push(false),
                    1 => entries.push(true),
                    _ => {
                        return Err(Error::InvalidDiagram(format!(
                            "entry ({},{}) = {} is not 0 or 1",
                            i + 1,
                            j + 1,
                            a
                        )))
                    }
                }
            }
        }
        let m = ZeroOneMatrix { n, entries };
        m.check_no_zero_lines()?;
        Ok(m)
    }

    fn check_no_zero_lines(&self) -> Result<()> {
        for i in 0..self.n {
            if self.row_sum(i) == 0 {
                return Err(Error::InvalidDiagram(format!("row {} is zero", i + 1)));
            }
            if self.col_sum(i) == 0 {
                return Err(Error::InvalidDiagram(format!("column {} is zero", i + 1)));
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.entries[i * self.n + j]
    }

    pub fn row_sum(&self, i: usize) -> usize {
        (0..self.n).filter(|&j| self.get(i, j)).count()
    }

    pub fn col_sum(&self, j: usize) -> usize {
        (0..self.n).filter(|&i| self.get(i, j)).count()
    }

    pub fn nonzero_count(&self) -> usize {
        self.entries.iter().filter(|&&a| a).count()
    }

    pub fn rows(&self) -> Vec<Vec<u8>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j) as u8).collect())
            .collect()
    }

    /// Integer power `A^k`, saturating.
    pub fn int_power(&self, k: u32) -> Vec<Vec<u64>> {
        let n = self.n;
        let mut acc: Vec<Vec<u64>> = (0..n)
            .map(|i| (0..n).map(|j| (i == j) as u64).collect())
            .collect();
        for _ in 0..k {
            let mut next = vec![vec![0u64; n]; n];
            for i in 0..n {
                for l in 0..n {
                    if acc[i][l] == 0 {
                        continue;
                    }
                    for j in 0..n {
                        if self.get(l, j) {
                            next[i][j] = next[i][j].saturating_add(acc[i][l]);
                        }
                    }
                }
            }
            acc = next;
        }
        acc
    }

    fn bool_mul(&self, lhs: &[bool]) -> Vec<bool> {
        let n = self.n;
        let mut out = vec![false; n * n];
        for i in 0..n {
            for l in 0..n {
                if !lhs[i * n + l] {
                    continue;
                }
                for j in 0..n {
                    if self.get(l, j) {
                        out[i * n + j] = true;
                    }
                }
            }
        }
        out
    }
}

/// Outcome of the primitivity test.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Primitivity {
    pub primitive: bool,
    /// Smallest `k` with `A^k > 0` entrywise.
    pub exponent: Option<usize>,
    /// Exponent cutoff `n² - 2n + 2`.
    pub bound: usize,
    /// When not primitive: a zero entry of `A^bound` (1-based).
    pub zero_entry: Option<(usize, usize)>,
}

pub fn wielandt_bound(n: usize) -> usize {
    (n - 1) * (n - 1) + 1
}

pub fn is_primitive(a: &ZeroOneMatrix) -> Primitivity {
    let bound = wielandt_bound(a.n);
    let mut power = a.entries.clone();
    for k in 1..=bound {
        if power.iter().all(|&x| x) {
            return Primitivity {
                primitive: true,
                exponent: Some(k),
                bound,
                zero_entry: None,
            };
        }
        if k < bound {
            power = a.bool_mul(&power);
        }
    }
    let idx = power.iter().position(|&x| !x).unwrap_or(0);
    Primitivity {
        primitive: false,
        exponent: None,
        bound,
        zero_entry: Some((idx / a.n + 1, idx % a.n + 1)),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Edge {
    pub label: String,
    pub source: VertexId,
    pub range: VertexId,
}

/// Edge set `E` with source and range maps.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeTable {
    edges: Vec<Edge>,
    by_label: HashMap<String, EdgeId>,
    out_edges: Vec<Vec<EdgeId>>,
    in_edges: Vec<Vec<EdgeId>>,
    by_pair: HashMap<(VertexId, VertexId), EdgeId>,
}

impl EdgeTable {
    /// Row-major enumeration of the nonzero entries, labelled `e1, e2, ...`.
    pub fn row_major(a: &ZeroOneMatrix) -> Self {
        let mut edges = Vec::new();
        for i in 0..a.n() {
            for j in 0..a.n() {
                if a.get(i, j) {
                    edges.push(Edge {
                        label: format!("e{}", edges.len() + 1),
                        source: i,
                        range: j,
                    });
                }
            }
        }
        Self::assemble(a.n(), edges).expect("row-major labels are unique")
    }

    /// Explicit labelling; must be a bijection onto the nonzero entries of `a`.
    pub fn with_labels(a: &ZeroOneMatrix, edges: Vec<Edge>) -> Result<Self> {
        if edges.len() != a.nonzero_count() {
            return Err(Error::InvalidDiagram(format!(
                "{} edge labels for {} nonzero entries",
                edges.len(),
                a.nonzero_count()
            )));
        }
        for e in &edges {
            if e.source >= a.n() || e.range >= a.n() || !a.get(e.source, e.range) {
                return Err(Error::InvalidDiagram(format!(
                    "edge {} = ({},{}) is not a nonzero entry",
                    e.label,
                    e.source + 1,
                    e.range + 1
                )));
            }
        }
        Self::assemble(a.n(), edges)
    }

    fn assemble(n: usize, edges: Vec<Edge>) -> Result<Self> {
        let mut by_label = HashMap::new();
        let mut by_pair = HashMap::new();
        let mut out_edges = vec![Vec::new(); n];
        let mut in_edges = vec![Vec::new(); n];
        for (id, e) in edges.iter().enumerate() {
            if by_label.insert(e.label.clone(), id).is_some() {
                return Err(Error::InvalidDiagram(format!(
                    "duplicate edge label {}",
                    e.label
                )));
            }
            if by_pair.insert((e.source, e.range), id).is_some() {
                return Err(Error::InvalidDiagram(format!(
                    "two labels for entry ({},{})",
                    e.source + 1,
                    e.range + 1
                )));
            }
            out_edges[e.source].push(id);
            in_edges[e.range].push(id);
        }
        Ok(EdgeTable {
            edges,
            by_label,
            out_edges,
            in_edges,
            by_pair,
        })
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn vertex_count(&self) -> usize {
        self.out_edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    #[inline]
    pub fn source(&self, e: EdgeId) -> VertexId {
        self.edges[e].source
    }

    #[inline]
    pub fn range(&self, e: EdgeId) -> VertexId {
        self.edges[e].range
    }

    pub fn label(&self, e: EdgeId) -> &str {
        &self.edges[e].label
    }

    pub fn id(&self, label: &str) -> Option<EdgeId> {
        self.by_label.get(label).copied()
    }

    /// Edges leaving `v`, in id order.
    pub fn out_edges(&self, v: VertexId) -> &[EdgeId] {
        &self.out_edges[v]
    }

    pub fn in_edges(&self, v: VertexId) -> &[EdgeId] {
        &self.in_edges[v]
    }

    /// The unique edge `v -> w`, if any.
    pub fn edge_between(&self, v: VertexId, w: VertexId) -> Option<EdgeId> {
        self.by_pair.get(&(v, w)).copied()
    }

    #[inline]
    pub fn linked(&self, e: EdgeId, f: EdgeId) -> bool {
        self.range(e) == self.source(f)
    }

    pub fn format_word(&self, word: &[EdgeId]) -> String {
        let names: Vec<&str> = word.iter().map(|&e| self.label(e)).collect();
        format!("({})", names.join(","))
    }
}

/// A 0-1 matrix together with its edge table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagram {
    pub matrix: ZeroOneMatrix,
    pub edges: EdgeTable,
}

impl Diagram {
    pub fn new(matrix: ZeroOneMatrix) -> Self {
        let edges = EdgeTable::row_major(&matrix);
        Diagram { matrix, edges }
    }

    pub fn with_labels(matrix: ZeroOneMatrix, labels: Vec<Edge>) -> Result<Self> {
        let edges = EdgeTable::with_labels(&matrix, labels)?;
        Ok(Diagram { matrix, edges })
    }

    pub fn from_rows(rows: Vec<Vec<u8>>) -> Result<Self> {
        Ok(Diagram::new(ZeroOneMatrix::new(rows)?))
    }

    pub fn vertex_count(&self) -> usize {
        self.matrix.n()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_linked_word(&self, word: &[EdgeId]) -> bool {
        word.iter().all(|&e| e < self.edges.len())
            && word.windows(2).all(|p| self.edges.linked(p[0], p[1]))
    }

    /// All linked words of length `k >= 1`, lexicographic by edge id.
    pub fn path_words(&self, k: usize) -> Vec<Vec<EdgeId>> {
        if k == 0 {
            return Vec::new();
        }
        let mut words: Vec<Vec<EdgeId>> = (0..self.edge_count()).map(|e| vec![e]).collect();
        for _ in 1..k {
            let mut next = Vec::with_capacity(words.len() * 2);
            for w in &words {
                let last = *w.last().expect("nonempty");
                for &f in self.edges.out_edges(self.edges.range(last)) {
                    let mut x = Vec::with_capacity(w.len() + 1);
                    x.extend_from_slice(w);
                    x.push(f);
                    next.push(x);
                }
            }
            words = next;
        }
        words
    }
}

pub fn build_edge_table(a: &ZeroOneMatrix) -> EdgeTable {
    EdgeTable::row_major(a)
}

/// `{ (e,f) : r(e) = s(f) }`.
pub fn linked_pairs(edges: &EdgeTable) -> BTreeSet<(EdgeId, EdgeId)> {
    let mut out = BTreeSet::new();
    for e in 0..edges.len() {
        for &f in edges.out_edges(edges.range(e)) {
            out.insert((e, f));
        }
    }
    out
}

/// Directed graph on `E` with an arrow `e -> f` iff `r(e) = s(f)`.
#[derive(Clone, Debug)]
pub struct CoupledGraph {
    pub edges: EdgeTable,
    pub arrows: Vec<(EdgeId, EdgeId)>,
    pub adjacency: ZeroOneMatrix,
}

impl CoupledGraph {
    pub fn vertex_count(&self) -> usize {
        self.edges.len()
    }

    pub fn successors(&self) -> Vec<Vec<usize>> {
        let mut succ = vec![Vec::new(); self.edges.len()];
        for &(e, f) in &self.arrows {
            succ[e].push(f);
        }
        succ
    }

    /// DOT rendering: nodes in id order labelled `a_{i,j}`, arrows in
    /// lexicographic order.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph coupled {\n");
        for e in self.edges.edges() {
            let _ = writeln!(
                out,
                "  \"{}\" [label=\"a_{{{},{}}}\"];",
                e.label,
                e.source + 1,
                e.range + 1
            );
        }
        for &(e, f) in &self.arrows {
            let _ = writeln!(
                out,
                "  \"{}\" -> \"{}\";",
                self.edges.label(e),
                self.edges.label(f)
            );
        }
        out.push_str("}\n");
        out
    }
}

pub fn coupled_graph(d: &Diagram) -> CoupledGraph {
    let arrows: Vec<_> = linked_pairs(&d.edges).into_iter().collect();
    let m = d.edge_count();
    let mut rows = vec![vec![0u8; m]; m];
    for &(e, f) in &arrows {
        rows[e][f] = 1;
    }
    // Every vertex has in- and out-edges, so no line of this matrix is zero.
    let adjacency = ZeroOneMatrix::new(rows).expect("coupled graph adjacency is valid");
    CoupledGraph {
        edges: d.edges.clone(),
        arrows,
        adjacency,
    }
}

/// Strongly connected components (Tarjan, iterative). Components come out in
/// reverse topological order; members of each component are sorted.
pub fn strongly_connected_components(succ: &[Vec<usize>]) -> Vec<Vec<usize>> {
    const UNVISITED: usize = usize::MAX;
    let n = succ.len();
    let mut index = vec![UNVISITED; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut comps = Vec::new();
    let mut next_index = 0;

    for root in 0..n {
        if index[root] != UNVISITED {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(&mut (v, ref mut child)) = call.last_mut() {
            if *child < succ[v].len() {
                let w = succ[v][*child];
                *child += 1;
                if index[w] == UNVISITED {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack");
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comp.sort_unstable();
                    comps.push(comp);
                }
            }
        }
    }
    comps
}

pub fn is_strongly_connected(g: &CoupledGraph) -> bool {
    strongly_connected_components(&g.successors()).len() == 1
}

/// Both connectivity predicates for a matrix; they can disagree for
/// irreducible matrices with period > 1.
#[derive(Clone, Debug, Serialize)]
pub struct ConnectivityReport {
    pub primitivity: Primitivity,
    pub coupled_strongly_connected: bool,
    pub discrepancy: bool,
}

pub fn connectivity_report(d: &Diagram) -> ConnectivityReport {
    let primitivity = is_primitive(&d.matrix);
    let coupled_strongly_connected = is_strongly_connected(&coupled_graph(d));
    ConnectivityReport {
        discrepancy: primitivity.primitive != coupled_strongly_connected,
        primitivity,
        coupled_strongly_connected,
    }
}

/// Square matrix of edge multiplicities with no zero rows or columns.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NonNegIntMatrix {
    rows: Vec<Vec<u64>>,
}

impl NonNegIntMatrix {
    pub fn new(rows: Vec<Vec<u64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::InvalidDiagram("matrix is empty".into()));
        }
        if let Some(i) = rows.iter().position(|r| r.len() != n) {
            return Err(Error::InvalidDiagram(format!(
                "row {} has wrong length",
                i + 1
            )));
        }
        for i in 0..n {
            if rows[i].iter().all(|&x| x == 0) {
                return Err(Error::InvalidDiagram(format!("row {} is zero", i + 1)));
            }
            if rows.iter().all(|r| r[i] == 0) {
                return Err(Error::InvalidDiagram(format!("column {} is zero", i + 1)));
            }
        }
        Ok(NonNegIntMatrix { rows })
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<u64>] {
        &self.rows
    }
}

/// Replaces a multigraph diagram by the 0-1 diagram whose vertices are its
/// edges: edge `e` (row-major, with multiplicity) is followed by `f` iff
/// `range(e) = source(f)`.
pub fn zero_one_reduction(f: &NonNegIntMatrix) -> ZeroOneMatrix {
    let mut ends = Vec::new();
    for (i, row) in f.rows().iter().enumerate() {
        for (j, &mult) in row.iter().enumerate() {
            for _ in 0..mult {
                ends.push((i, j));
            }
        }
    }
    let rows = ends
        .iter()
        .map(|&(_, r)| ends.iter().map(|&(s, _)| (r == s) as u8).collect())
        .collect();
    ZeroOneMatrix::new(rows).expect("edge adjacency of a valid multigraph has no zero lines")
}
