//! Measures on the path space, evaluated on cylinders.
//!
//! A depth-`k` cylinder is a linked word of `k` edges; the edge from the root
//! is implicit, so a depth-0 cylinder is just a vertex `v` (all paths passing
//! through `v` at the first level). Under this convention the tail-invariant
//! measure of a word is `x_{r(w_k)} / λ^k` and a Markov measure is
//! `π_{s(w_1)} · Π_i p^{(i)}_{s(w_i), w_i}`.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::diagram::{is_primitive, strongly_connected_components, Diagram, EdgeId, VertexId};
use crate::error::{Error, Result};
use crate::number::{Rational, Value};
use crate::par;

/// Residual target for the power iteration, relative to `‖x‖_∞`.
pub const PERRON_RESIDUAL: f64 = 1e-14;
const PERRON_MAX_ITER: usize = 1_000_000;

/// Perron eigenvalue and eigenvector (normalized to sum 1) of a primitive
/// matrix. `exact` is filled in when both are rational, which for an integer
/// matrix means `λ` is an integer.
#[derive(Clone, Debug, Serialize)]
pub struct PerronData {
    pub lambda: f64,
    pub x: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    #[serde(skip)]
    pub exact: Option<ExactPerron>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExactPerron {
    pub lambda: Rational,
    pub x: Vec<Rational>,
}

impl PerronData {
    pub fn lambda_value(&self) -> Value {
        match &self.exact {
            Some(e) => Value::from_rational(e.lambda.clone()),
            None => Value::Float(self.lambda),
        }
    }

    pub fn x_value(&self, v: VertexId) -> Value {
        match &self.exact {
            Some(e) => Value::from_rational(e.x[v].clone()),
            None => Value::Float(self.x[v]),
        }
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    /// Drops the exact form.
    pub fn to_float(&self) -> PerronData {
        PerronData {
            exact: None,
            ..self.clone()
        }
    }
}

pub fn perron_data(d: &Diagram) -> Result<PerronData> {
    let prim = is_primitive(&d.matrix);
    if !prim.primitive {
        let (i, j) = prim.zero_entry.unwrap_or((0, 0));
        return Err(Error::NotPrimitive(format!(
            "A^{} has a zero entry at ({},{})",
            prim.bound, i, j
        )));
    }
    let a = &d.matrix;
    let n = a.n();
    let apply = |x: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| (0..n).filter(|&j| a.get(i, j)).map(|j| x[j]).sum())
            .collect()
    };
    let mut x = vec![1.0 / n as f64; n];
    let mut lambda = 0.0;
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < PERRON_MAX_ITER {
        iterations += 1;
        let y = apply(&x);
        // With Σx = 1, Σ(Ax) is the Rayleigh-type estimate of λ.
        lambda = y.iter().sum::<f64>();
        residual = y
            .iter()
            .zip(&x)
            .map(|(yi, xi)| (yi - lambda * xi).abs())
            .fold(0.0, f64::max);
        let xmax = x.iter().cloned().fold(0.0, f64::max);
        if residual <= PERRON_RESIDUAL * xmax {
            break;
        }
        x = y.into_iter().map(|v| v / lambda).collect();
    }
    let exact = exact_perron(d, lambda);
    Ok(PerronData {
        lambda,
        x,
        residual,
        iterations,
        exact,
    })
}

fn exact_perron(d: &Diagram, lambda: f64) -> Option<ExactPerron> {
    let rounded = lambda.round();
    if (lambda - rounded).abs() > 1e-9 || rounded <= 0.0 {
        return None;
    }
    let lam = Rational::from(BigInt::from(rounded as i64));
    let n = d.vertex_count();
    // (A - λI) x = 0 together with Σ x = 1.
    let mut rows: Vec<Vec<Rational>> = (0..n)
        .map(|i| {
            let mut r: Vec<Rational> = (0..n)
                .map(|j| {
                    let a = if d.matrix.get(i, j) {
                        Rational::one()
                    } else {
                        Rational::zero()
                    };
                    if i == j {
                        a - &lam
                    } else {
                        a
                    }
                })
                .collect();
            r.push(Rational::zero());
            r
        })
        .collect();
    let mut norm = vec![Rational::one(); n];
    norm.push(Rational::one());
    rows.push(norm);
    let x = solve_unique(rows, n)?;
    if x.iter().all(|xi| xi.is_positive()) {
        Some(ExactPerron { lambda: lam, x })
    } else {
        None
    }
}

/// Exact Gaussian elimination on an augmented system with `unknowns` columns;
/// `None` unless the system has exactly one solution.
fn solve_unique(mut rows: Vec<Vec<Rational>>, unknowns: usize) -> Option<Vec<Rational>> {
    let mut pivot_row = 0;
    for col in 0..unknowns {
        let found = (pivot_row..rows.len()).find(|&r| !rows[r][col].is_zero())?;
        rows.swap(pivot_row, found);
        let inv = rows[pivot_row][col].recip();
        for v in rows[pivot_row].iter_mut() {
            *v *= &inv;
        }
        for r in 0..rows.len() {
            if r != pivot_row && !rows[r][col].is_zero() {
                let factor = rows[r][col].clone();
                for c in 0..=unknowns {
                    let delta = &factor * &rows[pivot_row][c];
                    rows[r][c] -= delta;
                }
            }
        }
        pivot_row += 1;
    }
    // Remaining rows must be consistent (0 = 0).
    if rows[pivot_row..].iter().any(|r| !r[unknowns].is_zero()) {
        return None;
    }
    Some((0..unknowns).map(|c| rows[c][unknowns].clone()).collect())
}

/// Row-stochastic `|V| × |E|` matrix with `p_{v,e} > 0` iff `s(e) = v`.
#[derive(Clone, Debug)]
pub struct Transition {
    rows: Vec<Vec<Value>>,
}

impl Transition {
    pub fn new(rows: Vec<Vec<Value>>) -> Self {
        Transition { rows }
    }

    /// Builds the full matrix from per-edge weights.
    pub fn from_edge_weights(d: &Diagram, weights: &[Value]) -> Self {
        let mut rows = vec![vec![Value::zero(); d.edge_count()]; d.vertex_count()];
        for (e, w) in weights.iter().enumerate() {
            rows[d.edges.source(e)][e] = w.clone();
        }
        Transition { rows }
    }

    pub fn rows(&self) -> &[Vec<Value>] {
        &self.rows
    }

    /// `p_{s(e), e}`.
    pub fn weight(&self, d: &Diagram, e: EdgeId) -> &Value {
        &self.rows[d.edges.source(e)][e]
    }

    pub fn edge_weights(&self, d: &Diagram) -> Vec<Value> {
        (0..d.edge_count())
            .map(|e| self.weight(d, e).clone())
            .collect()
    }

    pub fn to_float(&self) -> Transition {
        Transition {
            rows: self
                .rows
                .iter()
                .map(|r| r.iter().map(Value::to_float).collect())
                .collect(),
        }
    }
}

/// How a finite list `P_1..P_N` continues past `N`.
#[derive(Clone, Debug)]
pub enum TailRule {
    /// `P_n = P_N` for `n > N`.
    RepeatLast,
    /// `P_n = Q` for `n > N`.
    StationaryTail(Transition),
    /// The last `period` matrices repeat cyclically.
    Periodic(usize),
}

#[derive(Clone, Debug)]
pub enum MeasureSpec {
    /// Tail-invariant measure from Perron data.
    Invariant(PerronData),
    StationaryMarkov {
        pi: Vec<Value>,
        p: Transition,
    },
    MarkovSequence {
        pi: Vec<Value>,
        ps: Vec<Transition>,
        tail: TailRule,
    },
}

/// A Markov spec unrolled as `M_1..M_K` followed by the last `period` of them
/// repeated forever.
#[derive(Clone, Debug)]
pub struct Schedule {
    /// Per-edge weights for each listed step.
    pub steps: Vec<Vec<Value>>,
    pub period: usize,
}

impl Schedule {
    /// Weights used at step `i >= 1`.
    pub fn at(&self, i: usize) -> &[Value] {
        let k = self.steps.len();
        if i <= k {
            &self.steps[i - 1]
        } else {
            &self.steps[k - self.period + (i - k - 1) % self.period]
        }
    }

    /// First step from which the weights are periodic.
    pub fn periodic_from(&self) -> usize {
        self.steps.len() - self.period + 1
    }

    /// Whether the weights are eventually constant.
    pub fn eventually_stationary(&self) -> bool {
        let l = self.periodic_from();
        (0..self.period).all(|phase| {
            self.at(l + phase)
                .iter()
                .zip(self.at(l + phase + 1))
                .all(|(a, b)| a.approx_eq(b))
        })
    }
}

impl MeasureSpec {
    pub fn stationary(pi: Vec<Value>, p: Transition) -> Self {
        MeasureSpec::StationaryMarkov { pi, p }
    }

    pub fn is_exact(&self) -> bool {
        match self {
            MeasureSpec::Invariant(pd) => pd.is_exact(),
            MeasureSpec::StationaryMarkov { pi, p } => {
                pi.iter().all(Value::is_exact) && all_exact(p)
            }
            MeasureSpec::MarkovSequence { pi, ps, tail } => {
                pi.iter().all(Value::is_exact)
                    && ps.iter().all(all_exact)
                    && match tail {
                        TailRule::StationaryTail(t) => all_exact(t),
                        _ => true,
                    }
            }
        }
    }

    pub fn to_float(&self) -> MeasureSpec {
        let fl = |v: &[Value]| v.iter().map(Value::to_float).collect::<Vec<_>>();
        match self {
            MeasureSpec::Invariant(pd) => MeasureSpec::Invariant(pd.to_float()),
            MeasureSpec::StationaryMarkov { pi, p } => MeasureSpec::StationaryMarkov {
                pi: fl(pi),
                p: p.to_float(),
            },
            MeasureSpec::MarkovSequence { pi, ps, tail } => MeasureSpec::MarkovSequence {
                pi: fl(pi),
                ps: ps.iter().map(Transition::to_float).collect(),
                tail: match tail {
                    TailRule::StationaryTail(t) => TailRule::StationaryTail(t.to_float()),
                    other => other.clone(),
                },
            },
        }
    }

    /// Stationary specs as a one-matrix sequence with repeat-last tail.
    pub fn lift_to_sequence(&self, d: &Diagram) -> MeasureSpec {
        match self {
            MeasureSpec::Invariant(pd) => invariant_as_markov(d, pd).lift_to_sequence(d),
            MeasureSpec::StationaryMarkov { pi, p } => MeasureSpec::MarkovSequence {
                pi: pi.clone(),
                ps: vec![p.clone()],
                tail: TailRule::RepeatLast,
            },
            seq => seq.clone(),
        }
    }

    /// Initial distribution and unrolled transition schedule; invariant specs
    /// go through their Markov form.
    pub fn markov_form(&self, d: &Diagram) -> (Vec<Value>, Schedule) {
        match self {
            MeasureSpec::Invariant(pd) => invariant_as_markov(d, pd).markov_form(d),
            MeasureSpec::StationaryMarkov { pi, p } => (
                pi.clone(),
                Schedule {
                    steps: vec![p.edge_weights(d)],
                    period: 1,
                },
            ),
            MeasureSpec::MarkovSequence { pi, ps, tail } => {
                let mut steps: Vec<Vec<Value>> = ps.iter().map(|p| p.edge_weights(d)).collect();
                let period = match tail {
                    TailRule::RepeatLast => 1,
                    TailRule::StationaryTail(t) => {
                        steps.push(t.edge_weights(d));
                        1
                    }
                    TailRule::Periodic(t) => *t,
                };
                (pi.clone(), Schedule { steps, period })
            }
        }
    }
}

fn all_exact(p: &Transition) -> bool {
    p.rows.iter().flatten().all(Value::is_exact)
}

/// A linked edge word, or a single vertex for depth 0. `origin` is the vertex
/// the word starts from.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CylinderWord {
    origin: VertexId,
    edges: Vec<EdgeId>,
}

impl CylinderWord {
    pub fn vertex(v: VertexId) -> Self {
        CylinderWord {
            origin: v,
            edges: Vec::new(),
        }
    }

    pub fn path(d: &Diagram, edges: Vec<EdgeId>) -> Result<Self> {
        if edges.is_empty() {
            return Err(Error::InvalidInput(
                "empty edge word; use a vertex cylinder".into(),
            ));
        }
        if !d.is_linked_word(&edges) {
            return Err(Error::UnlinkedWord(format_raw(d, &edges)));
        }
        Ok(CylinderWord {
            origin: d.edges.source(edges[0]),
            edges,
        })
    }

    /// Caller guarantees `edges` is a nonempty linked word.
    pub(crate) fn path_unchecked(d: &Diagram, edges: Vec<EdgeId>) -> Self {
        CylinderWord {
            origin: d.edges.source(edges[0]),
            edges,
        }
    }

    pub fn depth(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[EdgeId] {
        &self.edges
    }

    pub fn origin(&self) -> VertexId {
        self.origin
    }

    /// Vertex the word ends at (`origin` at depth 0).
    pub fn terminal(&self, d: &Diagram) -> VertexId {
        match self.edges.last() {
            Some(&e) => d.edges.range(e),
            None => self.origin,
        }
    }

    /// `e · w` when `r(e)` equals the origin.
    pub fn prepend(&self, d: &Diagram, e: EdgeId) -> Option<CylinderWord> {
        if d.edges.range(e) != self.origin {
            return None;
        }
        let mut edges = Vec::with_capacity(self.edges.len() + 1);
        edges.push(e);
        edges.extend_from_slice(&self.edges);
        Some(CylinderWord {
            origin: d.edges.source(e),
            edges,
        })
    }

    pub fn extend(&self, d: &Diagram, f: EdgeId) -> Option<CylinderWord> {
        if d.edges.source(f) != self.terminal(d) {
            return None;
        }
        let mut edges = self.edges.clone();
        edges.push(f);
        Some(CylinderWord {
            origin: self.origin,
            edges,
        })
    }

    /// Coding map: forget the first edge.
    pub fn drop_first(&self, d: &Diagram) -> Option<CylinderWord> {
        let (&first, rest) = self.edges.split_first()?;
        Some(CylinderWord {
            origin: d.edges.range(first),
            edges: rest.to_vec(),
        })
    }

    pub fn display(&self, d: &Diagram) -> String {
        if self.edges.is_empty() {
            format!("[v{}]", self.origin + 1)
        } else {
            d.edges.format_word(&self.edges)
        }
    }
}

fn format_raw(d: &Diagram, edges: &[EdgeId]) -> String {
    let names: Vec<String> = edges
        .iter()
        .map(|&e| {
            if e < d.edge_count() {
                d.edges.label(e).to_string()
            } else {
                format!("#{}", e)
            }
        })
        .collect();
    format!("({})", names.join(","))
}

/// Every cylinder of depth `k` in canonical order (vertices at depth 0).
pub fn level_words(d: &Diagram, k: usize) -> Vec<CylinderWord> {
    if k == 0 {
        return (0..d.vertex_count()).map(CylinderWord::vertex).collect();
    }
    d.path_words(k)
        .into_iter()
        .map(|w| CylinderWord::path_unchecked(d, w))
        .collect()
}

pub fn cylinder_measure(d: &Diagram, spec: &MeasureSpec, w: &CylinderWord) -> Result<Value> {
    if !d.is_linked_word(w.edges()) || w.origin() >= d.vertex_count() {
        return Err(Error::UnlinkedWord(format_raw(d, w.edges())));
    }
    Ok(measure_unchecked(d, spec, w))
}

pub(crate) fn measure_unchecked(d: &Diagram, spec: &MeasureSpec, w: &CylinderWord) -> Value {
    match spec {
        MeasureSpec::Invariant(pd) => {
            let x = pd.x_value(w.terminal(d));
            x.div(&pd.lambda_value().pow(w.depth() as u32))
        }
        MeasureSpec::StationaryMarkov { pi, p } => {
            let mut acc = pi[w.origin()].clone();
            for &e in w.edges() {
                acc = acc * p.weight(d, e);
            }
            acc
        }
        MeasureSpec::MarkovSequence { .. } => {
            let (pi, sched) = spec.markov_form(d);
            let mut acc = pi[w.origin()].clone();
            for (i, &e) in w.edges().iter().enumerate() {
                acc = acc * &sched.at(i + 1)[e];
            }
            acc
        }
    }
}

/// Precomputed evaluator for many words under one spec.
pub struct MeasureEval<'a> {
    d: &'a Diagram,
    kind: EvalKind,
}

enum EvalKind {
    Invariant { x: Vec<Value>, inv_lambda: Value },
    Markov { pi: Vec<Value>, sched: Schedule },
}

impl<'a> MeasureEval<'a> {
    pub fn new(d: &'a Diagram, spec: &MeasureSpec) -> Self {
        let kind = match spec {
            MeasureSpec::Invariant(pd) => EvalKind::Invariant {
                x: (0..d.vertex_count()).map(|v| pd.x_value(v)).collect(),
                inv_lambda: pd.lambda_value().recip(),
            },
            other => {
                let (pi, sched) = other.markov_form(d);
                EvalKind::Markov { pi, sched }
            }
        };
        MeasureEval { d, kind }
    }

    pub fn measure(&self, w: &CylinderWord) -> Value {
        match &self.kind {
            EvalKind::Invariant { x, inv_lambda } => {
                &x[w.terminal(self.d)] * &inv_lambda.pow(w.depth() as u32)
            }
            EvalKind::Markov { pi, sched } => {
                let mut acc = pi[w.origin()].clone();
                for (i, &e) in w.edges().iter().enumerate() {
                    acc = acc * &sched.at(i + 1)[e];
                }
                acc
            }
        }
    }
}

/// First violated condition of a measure spec.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SpecViolation {
    /// 1-based index into the transition list (0 for `π` or dimensions).
    pub matrix: usize,
    /// 1-based row (vertex) or 0.
    pub row: usize,
    pub condition: ViolationKind,
    pub detail: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    Shape,
    Support,
    RowSum,
    InitialDistribution,
}

impl fmt::Display for SpecViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:?} violated (matrix {}, row {}): {}",
            self.condition, self.matrix, self.row, self.detail
        )
    }
}

impl From<SpecViolation> for Error {
    fn from(v: SpecViolation) -> Self {
        Error::InvalidMeasure(v.to_string())
    }
}

fn check_transition(
    d: &Diagram,
    p: &Transition,
    index: usize,
) -> std::result::Result<(), SpecViolation> {
    let violation = |row: usize, condition, detail: String| SpecViolation {
        matrix: index,
        row,
        condition,
        detail,
    };
    if p.rows.len() != d.vertex_count() || p.rows.iter().any(|r| r.len() != d.edge_count()) {
        return Err(violation(
            0,
            ViolationKind::Shape,
            format!("expected {}x{} matrix", d.vertex_count(), d.edge_count()),
        ));
    }
    for (v, row) in p.rows.iter().enumerate() {
        for (e, pe) in row.iter().enumerate() {
            let on_support = d.edges.source(e) == v;
            let ok = if on_support {
                pe.is_positive()
            } else {
                pe.to_f64() == 0.0
            };
            if !ok {
                return Err(violation(
                    v + 1,
                    ViolationKind::Support,
                    format!(
                        "entry for edge {} is {} but s({}) {} v{}",
                        d.edges.label(e),
                        pe,
                        d.edges.label(e),
                        if on_support { "=" } else { "!=" },
                        v + 1
                    ),
                ));
            }
        }
        let sum: Value = row.iter().sum();
        if !sum.approx_eq(&Value::one()) {
            return Err(violation(
                v + 1,
                ViolationKind::RowSum,
                format!("row sums to {}", sum),
            ));
        }
    }
    Ok(())
}

fn check_pi(d: &Diagram, pi: &[Value]) -> std::result::Result<(), SpecViolation> {
    let bad = |detail: String| SpecViolation {
        matrix: 0,
        row: 0,
        condition: ViolationKind::InitialDistribution,
        detail,
    };
    if pi.len() != d.vertex_count() {
        return Err(bad(format!(
            "pi has {} entries, expected {}",
            pi.len(),
            d.vertex_count()
        )));
    }
    if let Some(v) = pi.iter().position(|x| !x.is_positive()) {
        return Err(bad(format!("pi[{}] = {} is not positive", v + 1, pi[v])));
    }
    let sum: Value = pi.iter().sum();
    if !sum.approx_eq(&Value::one()) {
        return Err(bad(format!("pi sums to {}", sum)));
    }
    Ok(())
}

pub fn validate_spec(d: &Diagram, spec: &MeasureSpec) -> std::result::Result<(), SpecViolation> {
    match spec {
        MeasureSpec::Invariant(pd) => {
            if pd.x.len() != d.vertex_count() || pd.x.iter().any(|&x| x <= 0.0) {
                return Err(SpecViolation {
                    matrix: 0,
                    row: 0,
                    condition: ViolationKind::InitialDistribution,
                    detail: "Perron vector must be positive with one entry per vertex".into(),
                });
            }
            Ok(())
        }
        MeasureSpec::StationaryMarkov { pi, p } => {
            check_transition(d, p, 1)?;
            check_pi(d, pi)
        }
        MeasureSpec::MarkovSequence { pi, ps, tail } => {
            if ps.is_empty() {
                return Err(SpecViolation {
                    matrix: 0,
                    row: 0,
                    condition: ViolationKind::Shape,
                    detail: "sequence has no matrices".into(),
                });
            }
            for (i, p) in ps.iter().enumerate() {
                check_transition(d, p, i + 1)?;
            }
            match tail {
                TailRule::StationaryTail(t) => check_transition(d, t, ps.len() + 1)?,
                TailRule::Periodic(t) if *t == 0 || *t > ps.len() => {
                    return Err(SpecViolation {
                        matrix: 0,
                        row: 0,
                        condition: ViolationKind::Shape,
                        detail: format!("period {} must be in 1..={}", t, ps.len()),
                    })
                }
                _ => {}
            }
            check_pi(d, pi)
        }
    }
}

/// Largest `|m(w) - Σ_f m(w·f)|` over depth-`k` cylinders.
pub fn level_consistency(d: &Diagram, spec: &MeasureSpec, k: usize) -> Value {
    let eval = MeasureEval::new(d, spec);
    let words = level_words(d, k);
    let defects = par::map(&words, |w| {
        let children: Value = d
            .edges
            .out_edges(w.terminal(d))
            .iter()
            .map(|&f| eval.measure(&w.extend(d, f).expect("out-edge extends")))
            .sum();
        eval.measure(w) - children
    });
    Value::max_abs(&defects)
}

/// Markov form of the invariant measure: `π_v = x_v`,
/// `p_{v,e} = x_{r(e)} / (λ x_v)`.
pub fn invariant_as_markov(d: &Diagram, pd: &PerronData) -> MeasureSpec {
    let lambda = pd.lambda_value();
    let pi: Vec<Value> = (0..d.vertex_count()).map(|v| pd.x_value(v)).collect();
    let weights: Vec<Value> = (0..d.edge_count())
        .map(|e| {
            let num = pd.x_value(d.edges.range(e));
            num.div(&(&lambda * &pi[d.edges.source(e)]))
        })
        .collect();
    MeasureSpec::StationaryMarkov {
        p: Transition::from_edge_weights(d, &weights),
        pi,
    }
}

/// Vertex distributions `q^(0) = π`, `q^(k)(v) = Σ_{r(e)=v} q^(k-1)(s(e)) p^(k)_{s(e),e}`.
pub fn q_vectors(d: &Diagram, spec: &MeasureSpec, k: usize) -> Vec<Value> {
    let (pi, sched) = spec.markov_form(d);
    let mut q = pi;
    for step in 1..=k {
        let w = sched.at(step);
        q = (0..d.vertex_count())
            .map(|v| {
                d.edges
                    .in_edges(v)
                    .iter()
                    .map(|&e| &q[d.edges.source(e)] * &w[e])
                    .sum()
            })
            .collect();
    }
    q
}

/// `m(e·w) / m(w)` for `w ∈ D_e`, split as `base · Π_i p^{(i+1)}(w_i)/p^{(i)}(w_i)`.
#[derive(Clone, Debug, Serialize)]
pub struct RnReport {
    pub ratio: Value,
    /// `π_{s(e)} p^{(1)}_{s(e),e} / π_{r(e)}` (`1/λ` for invariant specs).
    pub base: Value,
    /// Running products of the quasi-stationarity factors along `w`.
    pub partial_products: Vec<Value>,
}

pub fn rn_sigma_e(
    d: &Diagram,
    spec: &MeasureSpec,
    e: EdgeId,
    w: &CylinderWord,
) -> Result<RnReport> {
    let ew = w
        .prepend(d, e)
        .ok_or_else(|| Error::UnlinkedWord(format!("{}·{}", d.edges.label(e), w.display(d))))?;
    let ratio = cylinder_measure(d, spec, &ew)?.div(&cylinder_measure(d, spec, w)?);
    let (base, partial_products) = match spec {
        MeasureSpec::Invariant(pd) => (pd.lambda_value().recip(), vec![Value::one(); w.depth()]),
        other => {
            let (pi, sched) = other.markov_form(d);
            let base = (&pi[d.edges.source(e)] * &sched.at(1)[e]).div(&pi[d.edges.range(e)]);
            let mut acc = Value::one();
            let mut partial = Vec::with_capacity(w.depth());
            for (i, &x) in w.edges().iter().enumerate() {
                acc = acc * sched.at(i + 2)[x].div(&sched.at(i + 1)[x]);
                partial.push(acc.clone());
            }
            (base, partial)
        }
    };
    Ok(RnReport {
        ratio,
        base,
        partial_products,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

/// Outcome of a tail-product convergence check.
#[derive(Clone, Debug, Serialize)]
pub struct ProductReport {
    pub verdict: Verdict,
    /// Path along which the product keeps moving (on failure), or the path
    /// with the most non-unit factors (on success).
    pub worst_word: Vec<EdgeId>,
    pub worst_trace: Vec<Value>,
    pub depth: usize,
}

/// Shared engine for infinite products `Π_i factor(i, x_i)` whose factors are
/// eventually periodic in `i` with the given `period`, starting at step
/// `periodic_from`. The product converges (to a positive finite limit) for
/// every path iff no non-unit factor state lies on a cycle of the
/// (phase, edge) automaton. The depth-`k` scan reports the path with the most
/// non-unit factors in the periodic regime, lexicographically first on ties.
pub(crate) fn tail_product_check<F>(
    d: &Diagram,
    periodic_from: usize,
    period: usize,
    depth: usize,
    factor: F,
) -> ProductReport
where
    F: Fn(usize, EdgeId) -> Value + Sync,
{
    let m = d.edge_count();
    let state = |phase: usize, e: EdgeId| phase * m + e;
    let bad: Vec<bool> = (0..period * m)
        .map(|s| !factor(periodic_from + s / m, s % m).approx_eq(&Value::one()))
        .collect();
    let mut succ = vec![Vec::new(); period * m];
    for phase in 0..period {
        for e in 0..m {
            for &f in d.edges.out_edges(d.edges.range(e)) {
                succ[state(phase, e)].push(state((phase + 1) % period, f));
            }
        }
    }
    let diverges = strongly_connected_components(&succ).iter().any(|comp| {
        let cyclic = comp.len() > 1 || succ[comp[0]].contains(&comp[0]);
        cyclic && comp.iter().any(|&s| bad[s])
    });

    let depth = depth.max(periodic_from + 2 * period);
    let words = d.path_words(depth);
    let scores = par::map(&words, |w| {
        w.iter()
            .enumerate()
            .filter(|&(i, &e)| i + 1 >= periodic_from && !factor(i + 1, e).approx_eq(&Value::one()))
            .count()
    });
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    let worst_word = words.get(best).cloned().unwrap_or_default();
    let mut acc = Value::one();
    let worst_trace = worst_word
        .iter()
        .enumerate()
        .map(|(i, &e)| {
            acc = &acc * &factor(i + 1, e);
            acc.clone()
        })
        .collect();
    ProductReport {
        verdict: if diverges {
            Verdict::Fail
        } else {
            Verdict::Pass
        },
        worst_word,
        worst_trace,
        depth,
    }
}

/// Whether `Π_i p^{(i+1)}(x_i)/p^{(i)}(x_i)` converges along every path.
pub fn quasi_stationarity_check(d: &Diagram, spec: &MeasureSpec, depth: usize) -> ProductReport {
    let (_, sched) = spec.markov_form(d);
    tail_product_check(d, sched.periodic_from(), sched.period, depth, |i, e| {
        sched.at(i + 1)[e].div(&sched.at(i)[e])
    })
}
