//! Finite-level realizations of the Cuntz-Krieger operators.
//!
//! `H_k` is the span of depth-`k` cylinder indicators in `L²(m)` with basis
//! `b_w = χ_w/√m(w)`. The edge isometries act by `b_w ↦ b_{e·w}` from `H_k`
//! to `H_{k+1}`, so every relation below is an identity between finite
//! matrices.

mod monic;
mod operator;

pub use monic::{
    monic_edge_agreement, monic_equivalence, monic_from_measure, monic_operators,
    EquivalenceReport, EquivalenceVerdict, MonicReport, MonicSystem,
};
pub use operator::{LevelOperator, LevelSpace, SpaceKind};

use serde::Serialize;

use crate::admissible::{is_admissible, measure_compat, AdmissibleMap, CompatReport};
use crate::diagram::{Diagram, EdgeId, VertexId};
use crate::error::{Error, Result};
use crate::measure::{cylinder_measure, CylinderWord, MeasureSpec};
use crate::number::Value;
use crate::par;

pub fn level_space(d: &Diagram, spec: &MeasureSpec, k: usize) -> Result<LevelSpace> {
    LevelSpace::edges(d, spec, k)
}

/// Level spaces `H_0..=H_top` for one measure.
pub struct Tower<'a> {
    d: &'a Diagram,
    spaces: Vec<LevelSpace>,
}

impl<'a> Tower<'a> {
    pub fn new(d: &'a Diagram, spec: &MeasureSpec, top: usize) -> Result<Self> {
        let spaces = (0..=top)
            .map(|k| LevelSpace::edges(d, spec, k))
            .collect::<Result<_>>()?;
        Ok(Tower { d, spaces })
    }

    pub fn space(&self, k: usize) -> &LevelSpace {
        &self.spaces[k]
    }

    pub fn top(&self) -> usize {
        self.spaces.len() - 1
    }

    /// `T_e : H_k -> H_{k+1}`.
    pub fn edge_operator(&self, e: EdgeId, k: usize) -> LevelOperator {
        edge_operator(self.d, &self.spaces[k], &self.spaces[k + 1], e)
    }

    /// `T_i = Σ_{s(e)=i} T_e : H_k -> H_{k+1}`.
    pub fn vertex_operator(&self, i: VertexId, k: usize) -> LevelOperator {
        let mut acc = LevelOperator::zeros(self.spaces[k + 1].dim(), self.spaces[k].dim());
        for &e in self.d.edges.out_edges(i) {
            acc = acc.add(&self.edge_operator(e, k));
        }
        acc
    }

    /// `I_k : H_k -> H_{k+1}`.
    pub fn inclusion(&self, k: usize) -> LevelOperator {
        inclusion(self.d, &self.spaces[k], &self.spaces[k + 1])
    }
}

/// Word of `e·w` in edge-space coordinates, if linked.
fn prepend_word(d: &Diagram, depth: usize, w: &[usize], e: EdgeId) -> Option<Vec<usize>> {
    let origin = if depth == 0 {
        w[0]
    } else {
        d.edges.source(w[0])
    };
    if d.edges.range(e) != origin {
        return None;
    }
    let mut out = Vec::with_capacity(depth + 1);
    out.push(e);
    if depth > 0 {
        out.extend_from_slice(w);
    }
    Some(out)
}

/// `b_w ↦ b_{e·w}` when `s(w_1) = r(e)`, else 0. The Radon-Nikodym weight
/// cancels the basis normalization, so every nonzero entry is 1.
pub fn edge_operator(d: &Diagram, src: &LevelSpace, tgt: &LevelSpace, e: EdgeId) -> LevelOperator {
    assert_eq!(tgt.level(), src.level() + 1);
    let triplets = (0..src.dim()).filter_map(|c| {
        let w = prepend_word(d, src.level(), src.word(c), e)?;
        let r = tgt
            .position(&w)
            .expect("prepended word lies in the next level");
        Some((r, c, Value::one()))
    });
    LevelOperator::from_triplets(tgt.dim(), src.dim(), triplets)
}

/// `I_k b_w = Σ_f √(m(w·f)/m(w)) b_{w·f}`.
pub fn inclusion(d: &Diagram, src: &LevelSpace, tgt: &LevelSpace) -> LevelOperator {
    assert_eq!(tgt.level(), src.level() + 1);
    let cols = par::map_range(src.dim(), |c| {
        let w = src.word(c);
        let (end, prefix): (VertexId, &[usize]) = if src.level() == 0 {
            (w[0], &[])
        } else {
            (d.edges.range(*w.last().expect("nonempty")), w)
        };
        d.edges
            .out_edges(end)
            .iter()
            .map(|&f| {
                let mut child = prefix.to_vec();
                child.push(f);
                let r = tgt
                    .position(&child)
                    .expect("child word lies in the next level");
                (r, c, tgt.mass(r).div(src.mass(c)).sqrt())
            })
            .collect::<Vec<_>>()
    });
    LevelOperator::from_triplets(tgt.dim(), src.dim(), cols.into_iter().flatten())
}

#[derive(Clone, Debug, Serialize)]
pub struct CkReport {
    pub depth: usize,
    /// `max |Σ T T* - I|` over `H_{k+1}`.
    pub range_residual: Value,
    /// `max |T*T - Σ a T T*|` over `H_k`.
    pub domain_residual: Value,
    /// Vertex system only: `max |T_e T*_{e'}|` for distinct edges with a
    /// common source.
    pub cross_residual: Value,
    /// `T*T` and `TT*` are the 0-1 diagonals of the domain and range cylinders.
    pub projections_match: bool,
    pub residual: Value,
}

impl CkReport {
    pub fn passed(&self) -> bool {
        self.residual.is_zero() && self.projections_match
    }
}

fn max_of(values: &[Value]) -> Value {
    Value::max_abs(values)
}

fn indicator(space: &LevelSpace, pred: impl Fn(&[usize]) -> bool) -> LevelOperator {
    LevelOperator::diagonal(
        (0..space.dim())
            .map(|i| {
                if pred(space.word(i)) {
                    Value::one()
                } else {
                    Value::zero()
                }
            })
            .collect(),
    )
}

fn first_vertex(d: &Diagram, depth: usize, w: &[usize]) -> VertexId {
    if depth == 0 {
        w[0]
    } else {
        d.edges.source(w[0])
    }
}

fn finish(
    depth: usize,
    range: Value,
    domain: Value,
    cross: Value,
    projections_match: bool,
) -> CkReport {
    let residual = max_of(&[range.clone(), domain.clone(), cross.clone()]);
    CkReport {
        depth,
        range_residual: range,
        domain_residual: domain,
        cross_residual: cross,
        projections_match,
        residual,
    }
}

/// Relations for the edge family `{T_e}` with matrix `Ã`, at `H_k`/`H_{k+1}`.
pub fn ck_verify_edge(d: &Diagram, spec: &MeasureSpec, k: usize) -> Result<CkReport> {
    check_depth(k)?;
    let tower = Tower::new(d, spec, k + 1)?;
    let m = d.edge_count();
    let upper: Vec<LevelOperator> = par::map_range(m, |e| tower.edge_operator(e, k));
    let lower: Vec<LevelOperator> = par::map_range(m, |e| tower.edge_operator(e, k - 1));
    let upper_ranges: Vec<LevelOperator> = par::map(&upper, |t| t.compose(&t.adjoint()));
    let lower_ranges: Vec<LevelOperator> = par::map(&lower, |t| t.compose(&t.adjoint()));

    let mut sum = LevelOperator::zeros(tower.space(k + 1).dim(), tower.space(k + 1).dim());
    for p in &upper_ranges {
        sum = sum.add(p);
    }
    let range = sum
        .sub(&LevelOperator::identity(sum.nrows()))
        .max_abs_entry();

    let domain_res = par::map_range(m, |e| {
        let mut rhs = LevelOperator::zeros(tower.space(k).dim(), tower.space(k).dim());
        for &f in d.edges.out_edges(d.edges.range(e)) {
            rhs = rhs.add(&lower_ranges[f]);
        }
        upper[e]
            .adjoint()
            .compose(&upper[e])
            .sub(&rhs)
            .max_abs_entry()
    });

    let hk = tower.space(k);
    let hk1 = tower.space(k + 1);
    let projections_match = (0..m).all(|e| {
        let dom = indicator(hk, |w| first_vertex(d, k, w) == d.edges.range(e));
        let ran = indicator(hk1, |w| w[0] == e);
        upper[e].adjoint().compose(&upper[e]) == dom
            && upper_ranges[e] == ran
            && upper[e].is_partial_permutation()
    });
    Ok(finish(
        k,
        range,
        max_of(&domain_res),
        Value::zero(),
        projections_match,
    ))
}

/// Relations for `T_i = Σ_{s(e)=i} T_e` with matrix `A`, plus vanishing of
/// the cross terms `T_e T*_{e'}`.
pub fn ck_verify_vertex(d: &Diagram, spec: &MeasureSpec, k: usize) -> Result<CkReport> {
    check_depth(k)?;
    let tower = Tower::new(d, spec, k + 1)?;
    let n = d.vertex_count();
    let upper: Vec<LevelOperator> = par::map_range(n, |i| tower.vertex_operator(i, k));
    let lower: Vec<LevelOperator> = par::map_range(n, |i| tower.vertex_operator(i, k - 1));
    let upper_ranges: Vec<LevelOperator> = par::map(&upper, |t| t.compose(&t.adjoint()));
    let lower_ranges: Vec<LevelOperator> = par::map(&lower, |t| t.compose(&t.adjoint()));

    let mut sum = LevelOperator::zeros(tower.space(k + 1).dim(), tower.space(k + 1).dim());
    for p in &upper_ranges {
        sum = sum.add(p);
    }
    let range = sum
        .sub(&LevelOperator::identity(sum.nrows()))
        .max_abs_entry();

    let domain_res = par::map_range(n, |i| {
        let mut rhs = LevelOperator::zeros(tower.space(k).dim(), tower.space(k).dim());
        for j in 0..n {
            if d.matrix.get(i, j) {
                rhs = rhs.add(&lower_ranges[j]);
            }
        }
        upper[i]
            .adjoint()
            .compose(&upper[i])
            .sub(&rhs)
            .max_abs_entry()
    });

    let edge_ops: Vec<LevelOperator> =
        par::map_range(d.edge_count(), |e| tower.edge_operator(e, k));
    let mut pairs = Vec::new();
    for i in 0..n {
        for &e in d.edges.out_edges(i) {
            for &f in d.edges.out_edges(i) {
                if e != f {
                    pairs.push((e, f));
                }
            }
        }
    }
    let cross = par::map(&pairs, |&(e, f)| {
        edge_ops[e].compose(&edge_ops[f].adjoint()).max_abs_entry()
    });

    let hk = tower.space(k);
    let hk1 = tower.space(k + 1);
    let projections_match = (0..n).all(|i| {
        let dom = indicator(hk, |w| d.matrix.get(i, first_vertex(d, k, w)));
        let ran = indicator(hk1, |w| d.edges.source(w[0]) == i);
        upper[i].adjoint().compose(&upper[i]) == dom && upper_ranges[i] == ran
    });
    Ok(finish(
        k,
        range,
        max_of(&domain_res),
        max_of(&cross),
        projections_match,
    ))
}

fn check_depth(k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidInput("depth must be at least 1".into()));
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct ConsistencyReport {
    pub edge: EdgeId,
    pub depth: usize,
    /// `T_e I_k - I_{k+1} T_e : H_k -> H_{k+2}`.
    #[serde(skip)]
    pub defect: LevelOperator,
    pub max_defect: Value,
    /// Largest entrywise gap between `defect` and the closed form
    /// `√(m(wf)/m(w)) - √(m(ewf)/m(ew))`.
    pub closed_form_gap: Value,
}

pub fn operator_consistency(
    d: &Diagram,
    spec: &MeasureSpec,
    e: EdgeId,
    k: usize,
) -> Result<ConsistencyReport> {
    let tower = Tower::new(d, spec, k + 2)?;
    let defect = tower
        .edge_operator(e, k + 1)
        .compose(&tower.inclusion(k))
        .sub(&tower.inclusion(k + 1).compose(&tower.edge_operator(e, k)));

    let hk = tower.space(k);
    let hk2 = tower.space(k + 2);
    let mut expected = Vec::new();
    for c in 0..hk.dim() {
        let w = hk.word(c);
        let Some(ew) = prepend_word(d, k, w, e) else {
            continue;
        };
        let w_cyl = to_cylinder(d, k, w);
        let ew_cyl = CylinderWord::path_unchecked(d, ew.clone());
        for &f in d.edges.out_edges(w_cyl.terminal(d)) {
            let wf = w_cyl.extend(d, f).expect("f leaves the terminal vertex");
            let ewf = ew_cyl.extend(d, f).expect("f leaves the terminal vertex");
            let m = |x: &CylinderWord| cylinder_measure(d, spec, x);
            let value = m(&wf)?.div(&m(&w_cyl)?).sqrt() - m(&ewf)?.div(&m(&ew_cyl)?).sqrt();
            let r = hk2.position(ewf.edges()).expect("word of depth k+2");
            expected.push((r, c, value));
        }
    }
    let closed = LevelOperator::from_triplets(hk2.dim(), hk.dim(), expected);
    Ok(ConsistencyReport {
        edge: e,
        depth: k,
        max_defect: defect.max_abs_entry(),
        closed_form_gap: defect.sub(&closed).max_abs_entry(),
        defect,
    })
}

fn to_cylinder(d: &Diagram, depth: usize, w: &[usize]) -> CylinderWord {
    if depth == 0 {
        CylinderWord::vertex(w[0])
    } else {
        CylinderWord::path_unchecked(d, w.to_vec())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct IntertwinerReport {
    pub depth: usize,
    /// `max |U*U - I|, |UU* - I|` at depths `k` and `k+1`.
    pub unitary_residual: Value,
    /// `max_e |U T'_{α(e)} - T_e U|`.
    pub intertwining_residual: Value,
    /// `max |U I'_k - I_k U|`.
    pub inclusion_residual: Value,
    pub inclusion_commutes: bool,
    /// Source edge whose conditional weight differs, when inclusions do not
    /// commute.
    pub witness_edge: Option<EdgeId>,
    pub predicate: CompatReport,
    /// Inclusion check and measure predicate give the same verdict.
    pub agree: bool,
}

impl IntertwinerReport {
    pub fn passed(&self) -> bool {
        self.unitary_residual.is_zero()
            && self.intertwining_residual.is_zero()
            && self.inclusion_commutes
    }
}

/// `U b'_{w'} = b_{ᾱ^{-1}(w')} : H'_k -> H_k`.
pub fn intertwiner(src: &LevelSpace, tgt: &LevelSpace, alpha: &AdmissibleMap) -> LevelOperator {
    let inv = alpha.inverse();
    let triplets = (0..tgt.dim()).map(|c| {
        let w: Vec<usize> = tgt.word(c).iter().map(|&f| inv.apply(f)).collect();
        let r = src.position(&w).expect("path map is a bijection on words");
        (r, c, Value::one())
    });
    LevelOperator::from_triplets(src.dim(), tgt.dim(), triplets)
}

pub fn verify_intertwiner(
    src: &Diagram,
    m: &MeasureSpec,
    tgt: &Diagram,
    m2: &MeasureSpec,
    alpha: &AdmissibleMap,
    k: usize,
) -> Result<IntertwinerReport> {
    check_depth(k)?;
    let adm = is_admissible(src, tgt, alpha)?;
    if let Some((e, f)) = adm.violation {
        return Err(Error::NotAdmissible(format!(
            "link status of ({}, {}) is not preserved",
            src.edges.label(e),
            src.edges.label(f)
        )));
    }
    let a = Tower::new(src, m, k + 1)?;
    let b = Tower::new(tgt, m2, k + 1)?;
    let u = intertwiner(a.space(k), b.space(k), alpha);
    let u1 = intertwiner(a.space(k + 1), b.space(k + 1), alpha);

    let unitary = max_of(&[
        u.adjoint()
            .compose(&u)
            .sub(&LevelOperator::identity(u.ncols()))
            .max_abs_entry(),
        u.compose(&u.adjoint())
            .sub(&LevelOperator::identity(u.nrows()))
            .max_abs_entry(),
        u1.adjoint()
            .compose(&u1)
            .sub(&LevelOperator::identity(u1.ncols()))
            .max_abs_entry(),
        u1.compose(&u1.adjoint())
            .sub(&LevelOperator::identity(u1.nrows()))
            .max_abs_entry(),
    ]);
    let per_edge = par::map_range(src.edge_count(), |e| {
        u1.compose(&b.edge_operator(alpha.apply(e), k))
            .sub(&a.edge_operator(e, k).compose(&u))
            .max_abs_entry()
    });
    let gap = u1.compose(&b.inclusion(k)).sub(&a.inclusion(k).compose(&u));
    let witness_edge = gap
        .entries()
        .find(|(_, _, v)| !v.is_zero())
        .map(|(r, _, _)| *a.space(k + 1).word(r).last().expect("nonempty"));
    let inclusion_commutes = gap.is_zero();
    let predicate = measure_compat(src, m, tgt, m2, alpha, k)?;
    Ok(IntertwinerReport {
        depth: k,
        unitary_residual: unitary,
        intertwining_residual: max_of(&per_edge),
        inclusion_residual: gap.max_abs_entry(),
        inclusion_commutes,
        witness_edge,
        agree: inclusion_commutes == predicate.compatible(),
        predicate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{invariant_as_markov, perron_data, TailRule, Transition};

    fn three() -> Diagram {
        Diagram::from_rows(vec![vec![1, 1, 0], vec![0, 1, 1], vec![1, 0, 1]]).unwrap()
    }

    fn invariant(d: &Diagram) -> MeasureSpec {
        MeasureSpec::Invariant(perron_data(d).unwrap())
    }

    fn example_p(d: &Diagram, p: Value, q: Value) -> MeasureSpec {
        let w = [p.clone(), q.clone(), p.clone(), q.clone(), q, p];
        MeasureSpec::stationary(
            vec![Value::ratio(1, 3); 3],
            Transition::from_edge_weights(d, &w),
        )
    }

    fn rotation() -> AdmissibleMap {
        AdmissibleMap {
            map: vec![2, 3, 5, 4, 1, 0],
        }
    }

    #[test]
    fn edge_operator_shape() {
        let d = three();
        let spec = invariant(&d);
        let t = Tower::new(&d, &spec, 2).unwrap();
        let t1 = t.edge_operator(0, 1);
        assert!(t1.is_partial_permutation());
        let hit: Vec<usize> = t1.entries().map(|(_, c, _)| c).collect();
        assert_eq!(hit, vec![0, 1]);
        let rows: Vec<&str> = t1.entries().map(|(r, _, _)| t.space(2).label(r)).collect();
        assert_eq!(rows, vec!["(e1,e1)", "(e1,e2)"]);
    }

    #[test]
    fn ck_three_invariant() {
        let d = three();
        let spec = invariant(&d);
        for k in 1..=4 {
            let r = ck_verify_edge(&d, &spec, k).unwrap();
            assert!(r.passed() && r.residual.is_exact_zero(), "{r:?}");
            let v = ck_verify_vertex(&d, &spec, k).unwrap();
            assert!(v.passed() && v.residual.is_exact_zero(), "{v:?}");
        }
        assert!(ck_verify_edge(&d, &spec, 0).is_err());
    }

    #[test]
    fn ck_single_loop() {
        let d = Diagram::from_rows(vec![vec![1]]).unwrap();
        let spec = invariant(&d);
        let r = ck_verify_vertex(&d, &spec, 3).unwrap();
        assert!(r.passed());
        let t = Tower::new(&d, &spec, 2).unwrap();
        let op = t.vertex_operator(0, 1);
        assert_eq!(op.adjoint().compose(&op), LevelOperator::identity(1));
        assert_eq!(op.compose(&op.adjoint()), LevelOperator::identity(1));
    }

    #[test]
    fn inclusion_is_isometry() {
        let d = three();
        for spec in [
            invariant(&d),
            example_p(&d, Value::ratio(1, 4), Value::ratio(3, 4)),
        ] {
            let t = Tower::new(&d, &spec, 4).unwrap();
            for k in 0..4 {
                let i = t.inclusion(k);
                assert_eq!(i.adjoint().compose(&i), LevelOperator::identity(i.ncols()));
            }
        }
    }

    #[test]
    fn consistency_defects() {
        let d = three();
        for spec in [
            invariant(&d),
            example_p(&d, Value::ratio(1, 4), Value::ratio(3, 4)),
        ] {
            for e in 0..6 {
                let r = operator_consistency(&d, &spec, e, 2).unwrap();
                assert!(r.max_defect.is_exact_zero());
            }
        }
        let a = example_p(&d, Value::ratio(1, 4), Value::ratio(3, 4));
        let b = example_p(&d, Value::ratio(3, 4), Value::ratio(1, 4));
        let (
            MeasureSpec::StationaryMarkov { pi, p: pa },
            MeasureSpec::StationaryMarkov { p: pb, .. },
        ) = (a, b)
        else {
            unreachable!()
        };
        let alt = MeasureSpec::MarkovSequence {
            pi,
            ps: vec![pa, pb],
            tail: TailRule::Periodic(2),
        };
        let r = operator_consistency(&d, &alt, 0, 1).unwrap();
        assert!(!r.max_defect.is_zero());
        assert!(r.closed_form_gap.is_exact_zero());
        // √(3/4) - √(1/4) on the loop.
        let expect = Value::ratio(3, 4).sqrt() - Value::ratio(1, 2);
        assert_eq!(r.max_defect, expect);
    }

    #[test]
    fn intertwiner_three() {
        let d = three();
        let inv = invariant(&d);
        let r = verify_intertwiner(&d, &inv, &d, &inv, &rotation(), 3).unwrap();
        assert!(r.passed() && r.agree, "{r:?}");

        let p = example_p(&d, Value::ratio(1, 3), Value::ratio(2, 3));
        let r = verify_intertwiner(&d, &p, &d, &p, &rotation(), 3).unwrap();
        assert!(r.passed() && r.agree);

        let bumped = example_p(
            &d,
            Value::ratio(1, 3) + Value::ratio(1, 100),
            Value::ratio(2, 3) - Value::ratio(1, 100),
        );
        let r = verify_intertwiner(&d, &p, &d, &bumped, &rotation(), 3).unwrap();
        assert!(r.intertwining_residual.is_exact_zero());
        assert!(!r.inclusion_commutes && r.agree);
        assert!(r.witness_edge.is_some());

        let m = invariant_as_markov(&d, &perron_data(&d).unwrap());
        let r = verify_intertwiner(&d, &m, &d, &m, &rotation(), 2).unwrap();
        assert!(r.passed() && r.agree);

        let swap = AdmissibleMap {
            map: vec![1, 0, 2, 3, 4, 5],
        };
        assert!(matches!(
            verify_intertwiner(&d, &inv, &d, &inv, &swap, 2),
            Err(Error::NotAdmissible(_))
        ));
    }

    #[test]
    fn operator_dump() {
        let d = three();
        let spec = invariant(&d);
        let t = Tower::new(&d, &spec, 2).unwrap();
        let j = t.edge_operator(0, 1).to_json(t.space(2), t.space(1));
        assert_eq!(j["entries"][0], serde_json::json!([0, 0, "1"]));
        assert_eq!(j["cols"].as_array().unwrap().len(), 6);
    }
}
