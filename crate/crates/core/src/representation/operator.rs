use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use crate::diagram::{Diagram, EdgeId, VertexId};
use crate::error::{Error, Result};
use crate::measure::{CylinderWord, MeasureEval, MeasureSpec};
use crate::number::Value;
use crate::sfs::ShiftSpace;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SpaceKind {
    /// Linked edge words of a fixed depth; depth 0 holds one-letter vertex
    /// words.
    Edge,
    /// Admissible vertex words of a fixed length; length 0 is the empty word.
    Vertex,
}

/// Orthonormal basis `b_w = χ_w / √m(w)` of the span of cylinder indicators
/// at one level.
#[derive(Clone, Debug)]
pub struct LevelSpace {
    kind: SpaceKind,
    level: usize,
    words: Vec<Vec<usize>>,
    mass: Vec<Value>,
    labels: Vec<String>,
    index: HashMap<Vec<usize>, usize>,
}

impl LevelSpace {
    fn build(
        kind: SpaceKind,
        level: usize,
        words: Vec<Vec<usize>>,
        mass: Vec<Value>,
        labels: Vec<String>,
    ) -> Result<Self> {
        if let Some(pos) = mass.iter().position(|m| !m.is_positive()) {
            return Err(Error::InvalidMeasure(format!(
                "cylinder {} has measure {}; a full-support measure is required",
                labels[pos], mass[pos]
            )));
        }
        let index = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        Ok(LevelSpace {
            kind,
            level,
            words,
            mass,
            labels,
            index,
        })
    }

    /// Edge words of depth `k`.
    pub fn edges(d: &Diagram, spec: &MeasureSpec, k: usize) -> Result<Self> {
        let eval = MeasureEval::new(d, spec);
        let cyl: Vec<CylinderWord> = crate::measure::level_words(d, k);
        let mass = crate::par::map(&cyl, |w| eval.measure(w));
        let labels = cyl.iter().map(|w| w.display(d)).collect();
        let words = cyl
            .iter()
            .map(|w| {
                if k == 0 {
                    vec![w.origin()]
                } else {
                    w.edges().to_vec()
                }
            })
            .collect();
        Self::build(SpaceKind::Edge, k, words, mass, labels)
    }

    /// Vertex words of length `len`.
    pub fn vertices(d: &Diagram, spec: &MeasureSpec, len: usize) -> Result<Self> {
        let eval = MeasureEval::new(d, spec);
        let shift = ShiftSpace::new(
            d.matrix.clone(),
            (1..=d.vertex_count()).map(|v| v.to_string()).collect(),
        );
        let words = shift.words(len);
        let mass = crate::par::map(&words, |w| vertex_word_measure(d, &eval, w));
        let labels = words.iter().map(|w| shift.format_word(w)).collect();
        Self::build(SpaceKind::Vertex, len, words, mass, labels)
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    /// Depth for edge spaces, word length for vertex spaces.
    pub fn level(&self) -> usize {
        self.level
    }

    pub fn dim(&self) -> usize {
        self.words.len()
    }

    pub fn words(&self) -> &[Vec<usize>] {
        &self.words
    }

    pub fn word(&self, i: usize) -> &[usize] {
        &self.words[i]
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// `m(w)` for basis word `i`.
    pub fn mass(&self, i: usize) -> &Value {
        &self.mass[i]
    }

    /// `√m(w)`, the norm of `χ_w`.
    pub fn weight(&self, i: usize) -> Value {
        self.mass[i].sqrt()
    }

    pub fn position(&self, w: &[usize]) -> Option<usize> {
        self.index.get(w).copied()
    }

    /// Coordinates of the constant function `1`: `Σ_w √m(w) b_w`.
    pub fn unit_vector(&self) -> Vec<Value> {
        (0..self.dim()).map(|i| self.weight(i)).collect()
    }
}

/// Measure of a vertex-word cylinder; the empty word is the whole space.
pub(crate) fn vertex_word_measure(d: &Diagram, eval: &MeasureEval<'_>, w: &[VertexId]) -> Value {
    match w.len() {
        0 => Value::one(),
        1 => eval.measure(&CylinderWord::vertex(w[0])),
        _ => {
            let edges: Vec<EdgeId> = w
                .windows(2)
                .map(|p| {
                    d.edges
                        .edge_between(p[0], p[1])
                        .expect("admissible vertex word")
                })
                .collect();
            eval.measure(&CylinderWord::path_unchecked(d, edges))
        }
    }
}

/// Sparse matrix between two level spaces, stored by column with rows
/// ascending and exact zeros dropped.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelOperator {
    nrows: usize,
    ncols: usize,
    cols: Vec<Vec<(usize, Value)>>,
}

impl LevelOperator {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        LevelOperator {
            nrows,
            ncols,
            cols: vec![Vec::new(); ncols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal((0..n).map(|_| Value::one()).collect())
    }

    pub fn diagonal(values: Vec<Value>) -> Self {
        let n = values.len();
        let cols = values
            .into_iter()
            .enumerate()
            .map(|(i, v)| {
                if v.is_exact_zero() {
                    Vec::new()
                } else {
                    vec![(i, v)]
                }
            })
            .collect();
        LevelOperator {
            nrows: n,
            ncols: n,
            cols,
        }
    }

    /// Sums repeated `(row, col)` entries.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        entries: impl IntoIterator<Item = (usize, usize, Value)>,
    ) -> Self {
        let mut acc: Vec<BTreeMap<usize, Value>> = vec![BTreeMap::new(); ncols];
        for (r, c, v) in entries {
            assert!(
                r < nrows && c < ncols,
                "entry ({r},{c}) outside {nrows}x{ncols}"
            );
            let slot = acc[c].entry(r).or_insert_with(Value::zero);
            *slot = &*slot + &v;
        }
        LevelOperator {
            nrows,
            ncols,
            cols: acc.into_iter().map(compact).collect(),
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn column(&self, c: usize) -> &[(usize, Value)] {
        &self.cols[c]
    }

    pub fn get(&self, r: usize, c: usize) -> Value {
        self.cols[c]
            .binary_search_by_key(&r, |&(row, _)| row)
            .map(|i| self.cols[c][i].1.clone())
            .unwrap_or_default()
    }

    /// `(row, col, value)` in column-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, &Value)> {
        self.cols
            .iter()
            .enumerate()
            .flat_map(|(c, col)| col.iter().map(move |(r, v)| (*r, c, v)))
    }

    pub fn nnz(&self) -> usize {
        self.cols.iter().map(Vec::len).sum()
    }

    /// `self ∘ rhs`.
    pub fn compose(&self, rhs: &LevelOperator) -> LevelOperator {
        assert_eq!(self.ncols, rhs.nrows, "dimension mismatch in composition");
        let cols = rhs
            .cols
            .iter()
            .map(|col| {
                let mut acc: BTreeMap<usize, Value> = BTreeMap::new();
                for (mid, a) in col {
                    for (r, b) in &self.cols[*mid] {
                        let slot = acc.entry(*r).or_insert_with(Value::zero);
                        *slot = &*slot + &(b * a);
                    }
                }
                compact(acc)
            })
            .collect();
        LevelOperator {
            nrows: self.nrows,
            ncols: rhs.ncols,
            cols,
        }
    }

    /// Transpose; all entries are real.
    pub fn adjoint(&self) -> LevelOperator {
        let mut cols = vec![Vec::new(); self.nrows];
        for (r, c, v) in self.entries() {
            cols[r].push((c, v.clone()));
        }
        LevelOperator {
            nrows: self.ncols,
            ncols: self.nrows,
            cols,
        }
    }

    pub fn add(&self, rhs: &LevelOperator) -> LevelOperator {
        self.combine(rhs, |a, b| a + b)
    }

    pub fn sub(&self, rhs: &LevelOperator) -> LevelOperator {
        self.combine(rhs, |a, b| a - b)
    }

    fn combine(&self, rhs: &LevelOperator, op: impl Fn(&Value, &Value) -> Value) -> LevelOperator {
        assert_eq!(
            (self.nrows, self.ncols),
            (rhs.nrows, rhs.ncols),
            "dimension mismatch"
        );
        let zero = Value::zero();
        let cols = self
            .cols
            .iter()
            .zip(&rhs.cols)
            .map(|(a, b)| {
                let mut acc: BTreeMap<usize, (Option<&Value>, Option<&Value>)> = BTreeMap::new();
                for (r, v) in a {
                    acc.entry(*r).or_default().0 = Some(v);
                }
                for (r, v) in b {
                    acc.entry(*r).or_default().1 = Some(v);
                }
                compact(
                    acc.into_iter()
                        .map(|(r, (x, y))| (r, op(x.unwrap_or(&zero), y.unwrap_or(&zero))))
                        .collect(),
                )
            })
            .collect();
        LevelOperator {
            nrows: self.nrows,
            ncols: self.ncols,
            cols,
        }
    }

    pub fn apply(&self, x: &[Value]) -> Vec<Value> {
        assert_eq!(x.len(), self.ncols);
        let mut y = vec![Value::zero(); self.nrows];
        for (r, c, v) in self.entries() {
            y[r] = &y[r] + &(v * &x[c]);
        }
        y
    }

    /// Largest entry magnitude; exact zero for the zero operator.
    pub fn max_abs_entry(&self) -> Value {
        Value::max_abs(self.entries().map(|(_, _, v)| v))
    }

    pub fn is_zero(&self) -> bool {
        self.entries().all(|(_, _, v)| v.is_zero())
    }

    pub fn is_diagonal(&self) -> bool {
        self.entries().all(|(r, c, v)| r == c || v.is_zero())
    }

    /// Diagonal with every entry exactly 0 or 1.
    pub fn is_diagonal_projection(&self) -> bool {
        self.nrows == self.ncols
            && self
                .entries()
                .all(|(r, c, v)| r == c && (v.is_exact_zero() || *v == Value::one()))
    }

    /// At most one nonzero per row and column, each equal to 1; such
    /// operators are partial isometries of norm at most one.
    pub fn is_partial_permutation(&self) -> bool {
        let mut row_used = vec![false; self.nrows];
        self.cols.iter().all(|col| col.len() <= 1)
            && self
                .entries()
                .all(|(r, _, v)| *v == Value::one() && !std::mem::replace(&mut row_used[r], true))
    }

    pub fn to_float(&self) -> LevelOperator {
        LevelOperator {
            nrows: self.nrows,
            ncols: self.ncols,
            cols: self
                .cols
                .iter()
                .map(|col| col.iter().map(|(r, v)| (*r, v.to_float())).collect())
                .collect(),
        }
    }

    /// Sparse triplet dump with word labels for rows and columns.
    pub fn to_json(&self, target: &LevelSpace, source: &LevelSpace) -> serde_json::Value {
        assert_eq!((self.nrows, self.ncols), (target.dim(), source.dim()));
        let entries: Vec<serde_json::Value> = self
            .entries()
            .map(|(r, c, v)| serde_json::json!([r, c, v.to_string()]))
            .collect();
        serde_json::json!({
            "rows": target.labels(),
            "cols": source.labels(),
            "entries": entries,
        })
    }
}

fn compact(acc: BTreeMap<usize, Value>) -> Vec<(usize, Value)> {
    acc.into_iter()
        .filter(|(_, v)| !v.is_exact_zero())
        .collect()
}
