//! Admissible maps: edge bijections `α : E -> E'` with
//! `α×α(L(E)) = L(E')`, i.e. isomorphisms of coupled graphs, and the
//! measure-compatibility predicates of the induced path map.

use serde::Serialize;

use crate::diagram::{Diagram, EdgeId};
use crate::error::{Error, Result};
use crate::measure::{
    level_words, perron_data, tail_product_check, MeasureEval, MeasureSpec, ProductReport, Verdict,
};
use crate::number::Value;
use crate::par;

/// Relative tolerance when comparing floating point Perron eigenvalues.
pub const LAMBDA_REL_TOL: f64 = 1e-10;

/// `map[e] = α(e)` as an index into the target edge table.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AdmissibleMap {
    pub map: Vec<EdgeId>,
}

impl AdmissibleMap {
    pub fn identity(n: usize) -> Self {
        AdmissibleMap {
            map: (0..n).collect(),
        }
    }

    pub fn apply(&self, e: EdgeId) -> EdgeId {
        self.map[e]
    }

    pub fn inverse(&self) -> AdmissibleMap {
        let mut inv = vec![0; self.map.len()];
        for (e, &f) in self.map.iter().enumerate() {
            inv[f] = e;
        }
        AdmissibleMap { map: inv }
    }

    pub fn is_bijection(&self) -> bool {
        let mut seen = vec![false; self.map.len()];
        self.map
            .iter()
            .all(|&f| f < seen.len() && !std::mem::replace(&mut seen[f], true))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AdmissibilityCheck {
    pub admissible: bool,
    /// First `(e, f)` (source edge ids) whose link status is not preserved.
    pub violation: Option<(EdgeId, EdgeId)>,
}

pub fn is_admissible(
    src: &Diagram,
    tgt: &Diagram,
    alpha: &AdmissibleMap,
) -> Result<AdmissibilityCheck> {
    let n = src.edge_count();
    if alpha.map.len() != n || tgt.edge_count() != n {
        return Err(Error::SizeMismatch(format!(
            "map has {} entries for |E| = {}, |E'| = {}",
            alpha.map.len(),
            n,
            tgt.edge_count()
        )));
    }
    if !alpha.is_bijection() {
        return Err(Error::InvalidInput("map is not a bijection".into()));
    }
    for e in 0..n {
        for f in 0..n {
            if src.edges.linked(e, f) != tgt.edges.linked(alpha.apply(e), alpha.apply(f)) {
                return Ok(AdmissibilityCheck {
                    admissible: false,
                    violation: Some((e, f)),
                });
            }
        }
    }
    Ok(AdmissibilityCheck {
        admissible: true,
        violation: None,
    })
}

/// (in-degree, out-degree, loop) of an edge as a vertex of the coupled graph.
fn signature(d: &Diagram, e: EdgeId) -> (usize, usize, bool) {
    (
        d.edges.in_edges(d.edges.source(e)).len(),
        d.edges.out_edges(d.edges.range(e)).len(),
        d.edges.linked(e, e),
    )
}

struct Search<'a> {
    src: &'a Diagram,
    tgt: &'a Diagram,
    candidates: Vec<Vec<EdgeId>>,
}

impl Search<'_> {
    fn consistent(&self, assigned: &[EdgeId], e: EdgeId, f: EdgeId) -> bool {
        assigned.iter().enumerate().all(|(x, &fx)| {
            self.src.edges.linked(x, e) == self.tgt.edges.linked(fx, f)
                && self.src.edges.linked(e, x) == self.tgt.edges.linked(f, fx)
        })
    }

    fn extend(
        &self,
        assigned: &mut Vec<EdgeId>,
        used: &mut [bool],
        out: &mut Vec<AdmissibleMap>,
        first_only: bool,
    ) {
        if first_only && !out.is_empty() {
            return;
        }
        let e = assigned.len();
        if e == self.src.edge_count() {
            out.push(AdmissibleMap {
                map: assigned.clone(),
            });
            return;
        }
        for &f in &self.candidates[e] {
            if used[f] || !self.consistent(assigned, e, f) {
                continue;
            }
            used[f] = true;
            assigned.push(f);
            self.extend(assigned, used, out, first_only);
            assigned.pop();
            used[f] = false;
        }
    }

    fn branch(&self, f0: EdgeId, first_only: bool) -> Vec<AdmissibleMap> {
        let mut out = Vec::new();
        if !self.consistent(&[], 0, f0) {
            return out;
        }
        let mut used = vec![false; self.tgt.edge_count()];
        used[f0] = true;
        let mut assigned = vec![f0];
        self.extend(&mut assigned, &mut used, &mut out, first_only);
        out
    }
}

fn search(src: &Diagram, tgt: &Diagram, first_only: bool) -> Vec<AdmissibleMap> {
    let n = src.edge_count();
    if n != tgt.edge_count() || n == 0 {
        return Vec::new();
    }
    let candidates = (0..n)
        .map(|e| {
            let sig = signature(src, e);
            (0..n).filter(|&f| signature(tgt, f) == sig).collect()
        })
        .collect();
    let s = Search {
        src,
        tgt,
        candidates,
    };
    // First-level branches are independent; results are concatenated in
    // candidate order, which is already lexicographic.
    let firsts = s.candidates[0].clone();
    let mut maps: Vec<AdmissibleMap> = if first_only {
        par::find_first(&firsts, |&f0| s.branch(f0, true).into_iter().next())
            .into_iter()
            .collect()
    } else {
        par::map(&firsts, |&f0| s.branch(f0, false))
            .into_iter()
            .flatten()
            .collect()
    };
    maps.sort();
    maps
}

/// Every admissible map `E -> E'`, lexicographic in `(α(e_1), α(e_2), ...)`.
pub fn find_admissible(src: &Diagram, tgt: &Diagram) -> Vec<AdmissibleMap> {
    search(src, tgt, false)
}

/// Lexicographically first admissible map, if any.
pub fn find_first_admissible(src: &Diagram, tgt: &Diagram) -> Option<AdmissibleMap> {
    search(src, tgt, true).into_iter().next()
}

/// Letterwise image `ᾱ(w)`.
pub fn path_map(alpha: &AdmissibleMap, w: &[EdgeId]) -> Vec<EdgeId> {
    w.iter().map(|&e| alpha.apply(e)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CompatVerdict {
    Equal,
    Equivalent,
    Singular,
}

#[derive(Clone, Debug, Serialize)]
pub struct CompatReport {
    pub verdict: CompatVerdict,
    pub max_defect: Value,
    /// Violating word or edge (source edge ids).
    pub witness: Option<Vec<EdgeId>>,
    pub detail: String,
}

impl CompatReport {
    pub fn compatible(&self) -> bool {
        self.verdict != CompatVerdict::Singular
    }
}

/// Tail-invariant measures: equal eigenvalues force `μ'∘ᾱ = μ`, which is
/// then checked on every cylinder of depth `1..=k`; otherwise singular.
pub fn invariant_compat(
    src: &Diagram,
    tgt: &Diagram,
    alpha: &AdmissibleMap,
    k: usize,
) -> Result<CompatReport> {
    let pd = perron_data(src)?;
    let pd2 = perron_data(tgt)?;
    let same_lambda = match (&pd.exact, &pd2.exact) {
        (Some(a), Some(b)) => a.lambda == b.lambda,
        _ => {
            (pd.lambda - pd2.lambda).abs() <= LAMBDA_REL_TOL * pd.lambda.abs().max(pd2.lambda.abs())
        }
    };
    if !same_lambda {
        return Ok(CompatReport {
            verdict: CompatVerdict::Singular,
            max_defect: Value::Float((pd.lambda - pd2.lambda).abs()),
            witness: None,
            detail: format!("lambda = {} but lambda' = {}", pd.lambda, pd2.lambda),
        });
    }
    let m = MeasureSpec::Invariant(pd);
    let m2 = MeasureSpec::Invariant(pd2);
    cylinder_compat(src, &m, tgt, &m2, alpha, k)
}

/// `max |m'(ᾱw) - m(w)|` over depths `1..=k`; equal when zero.
fn cylinder_compat(
    src: &Diagram,
    m: &MeasureSpec,
    tgt: &Diagram,
    m2: &MeasureSpec,
    alpha: &AdmissibleMap,
    k: usize,
) -> Result<CompatReport> {
    let eval = MeasureEval::new(src, m);
    let eval2 = MeasureEval::new(tgt, m2);
    let mut worst = Value::zero();
    let mut witness = None;
    for depth in 1..=k.max(1) {
        let words = level_words(src, depth);
        let defects = par::map(&words, |w| {
            let image =
                crate::measure::CylinderWord::path_unchecked(tgt, path_map(alpha, w.edges()));
            eval2.measure(&image) - eval.measure(w)
        });
        for (w, dft) in words.iter().zip(&defects) {
            if witness.is_none() && !dft.is_zero() {
                witness = Some(w.edges().to_vec());
            }
        }
        let level_max = Value::max_abs(&defects);
        if level_max.cmp_abs(&worst).is_gt()
            || (worst.is_exact_zero() && !level_max.is_exact_zero())
        {
            worst = level_max;
        }
    }
    Ok(CompatReport {
        verdict: if witness.is_none() {
            CompatVerdict::Equal
        } else {
            CompatVerdict::Singular
        },
        max_defect: worst,
        detail: "cylinder measures compared through the path map".into(),
        witness,
    })
}

/// `p'_{s(α(e)), α(e)} = p_{s(e), e}` for every edge; the witness is the first
/// edge where it fails.
pub fn stationary_compat(
    src: &Diagram,
    m: &MeasureSpec,
    tgt: &Diagram,
    m2: &MeasureSpec,
    alpha: &AdmissibleMap,
) -> Result<CompatReport> {
    let weights = stationary_weights(src, m)?;
    let weights2 = stationary_weights(tgt, m2)?;
    let diffs: Vec<Value> = (0..src.edge_count())
        .map(|e| &weights2[alpha.apply(e)] - &weights[e])
        .collect();
    let bad = diffs.iter().position(|x| !x.is_zero());
    Ok(CompatReport {
        verdict: if bad.is_none() {
            CompatVerdict::Equivalent
        } else {
            CompatVerdict::Singular
        },
        max_defect: Value::max_abs(&diffs),
        witness: bad.map(|e| vec![e]),
        detail: match bad {
            Some(e) => format!(
                "p at {} is {} but p' at {} is {}",
                src.edges.label(e),
                weights[e],
                tgt.edges.label(alpha.apply(e)),
                weights2[alpha.apply(e)]
            ),
            None => "alpha-invariance holds on every edge".into(),
        },
    })
}

fn stationary_weights(d: &Diagram, m: &MeasureSpec) -> Result<Vec<Value>> {
    match m {
        MeasureSpec::MarkovSequence { .. } => {
            let (_, sched) = m.markov_form(d);
            if sched.steps.len() == 1 {
                Ok(sched.steps[0].clone())
            } else {
                Err(Error::InvalidInput(
                    "stationary comparison needs a stationary measure".into(),
                ))
            }
        }
        other => Ok(other.markov_form(d).1.steps[0].clone()),
    }
}

/// Markov measures given by transition sequences: equivalent iff
/// `Π_i p'^{(i)}(α(x_i)) / p^{(i)}(x_i)` converges to a positive finite
/// limit along every path.
pub fn markov_compat(
    src: &Diagram,
    m: &MeasureSpec,
    tgt: &Diagram,
    m2: &MeasureSpec,
    alpha: &AdmissibleMap,
    k: usize,
) -> ProductReport {
    let (_, s1) = m.markov_form(src);
    let (_, s2) = m2.markov_form(tgt);
    let from = s1.periodic_from().max(s2.periodic_from());
    let period = num_integer::lcm(s1.period, s2.period);
    tail_product_check(src, from, period, k, |i, e| {
        s2.at(i)[alpha.apply(e)].div(&s1.at(i)[e])
    })
}

impl ProductReport {
    pub fn as_compat(&self) -> CompatReport {
        CompatReport {
            verdict: match self.verdict {
                Verdict::Pass => CompatVerdict::Equivalent,
                Verdict::Fail => CompatVerdict::Singular,
            },
            max_defect: self
                .worst_trace
                .last()
                .map(|p| p - &Value::one())
                .unwrap_or_default(),
            witness: match self.verdict {
                Verdict::Fail => Some(self.worst_word.clone()),
                Verdict::Pass => None,
            },
            detail: "tail product of transition ratios".into(),
        }
    }
}

/// The predicate that applies to a pair of measures: cylinder equality for
/// tail-invariant measures, transition equality for stationary ones, tail
/// products otherwise.
pub fn measure_compat(
    src: &Diagram,
    m: &MeasureSpec,
    tgt: &Diagram,
    m2: &MeasureSpec,
    alpha: &AdmissibleMap,
    k: usize,
) -> Result<CompatReport> {
    use MeasureSpec::*;
    match (m, m2) {
        (Invariant(_), Invariant(_)) => invariant_compat(src, tgt, alpha, k),
        (MarkovSequence { .. }, _) | (_, MarkovSequence { .. }) => {
            Ok(markov_compat(src, m, tgt, m2, alpha, k).as_compat())
        }
        _ => stationary_compat(src, m, tgt, m2, alpha),
    }
}
