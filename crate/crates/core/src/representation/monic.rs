use serde::Serialize;

use super::operator::{vertex_word_measure, LevelOperator, LevelSpace};
use super::Tower;
use crate::diagram::{Diagram, VertexId};
use crate::error::{Error, Result};
use crate::measure::{validate_spec, MeasureEval, MeasureSpec};
use crate::number::{Rational, Value};
use crate::par;
use crate::sfs::ShiftSpace;

/// Inherent system on `X_A`: `σ_i(x) = i·x` with
/// `f_i(C) = √(m(σC)/m(C))` on cylinders `C ⊆ R_i`.
#[derive(Clone, Debug)]
pub struct MonicSystem {
    diagram: Diagram,
    spec: MeasureSpec,
}

pub fn monic_from_measure(d: &Diagram, spec: &MeasureSpec) -> Result<MonicSystem> {
    validate_spec(d, spec).map_err(|v| Error::InvalidMeasure(v.to_string()))?;
    Ok(MonicSystem {
        diagram: d.clone(),
        spec: spec.clone(),
    })
}

impl MonicSystem {
    pub fn diagram(&self) -> &Diagram {
        &self.diagram
    }

    pub fn spec(&self) -> &MeasureSpec {
        &self.spec
    }

    /// `m(C)` for a vertex word.
    pub fn measure(&self, w: &[VertexId]) -> Value {
        let eval = MeasureEval::new(&self.diagram, &self.spec);
        vertex_word_measure(&self.diagram, &eval, w)
    }

    /// `f_i` on the cylinder of the vertex word `c`, `|c| >= 2`; shorter
    /// cylinders do not determine it.
    pub fn f(&self, i: VertexId, c: &[VertexId]) -> Value {
        assert!(
            c.len() >= 2,
            "f_i is evaluated on cylinders of length at least 2"
        );
        if c[0] != i {
            return Value::zero();
        }
        self.measure(&c[1..]).div(&self.measure(c)).sqrt()
    }

    /// `g_i = f_i/|f_i|²` on `R_i`, 0 elsewhere.
    pub fn g(&self, i: VertexId, c: &[VertexId]) -> Value {
        let f = self.f(i, c);
        if f.is_exact_zero() {
            f
        } else {
            f.div(&(&f * &f))
        }
    }

    /// `(word, f_1..f_n)` on every vertex word of length `len >= 2`.
    pub fn f_table(&self, len: usize) -> Vec<(Vec<VertexId>, Vec<Value>)> {
        let words = shift(&self.diagram).words(len);
        par::map(&words, |w| {
            (
                w.clone(),
                (0..self.diagram.vertex_count())
                    .map(|i| self.f(i, w))
                    .collect(),
            )
        })
    }
}

fn shift(d: &Diagram) -> ShiftSpace {
    ShiftSpace::new(
        d.matrix.clone(),
        (1..=d.vertex_count()).map(|v| v.to_string()).collect(),
    )
}

/// `T_i : V_len -> V_{len+1}` from `T_i ξ = f_i · ξ∘σ`. The entry at
/// `(i·w, w)` is `f_i(i·w)·√m(i·w)/√m(w)`.
fn monic_operator(
    ms: &MonicSystem,
    src: &LevelSpace,
    tgt: &LevelSpace,
    i: VertexId,
) -> LevelOperator {
    let d = &ms.diagram;
    let triplets = (0..src.dim()).filter_map(|c| {
        let w = src.word(c);
        if let Some(&first) = w.first() {
            if !d.matrix.get(i, first) {
                return None;
            }
        }
        let mut iw = Vec::with_capacity(w.len() + 1);
        iw.push(i);
        iw.extend_from_slice(w);
        let r = tgt.position(&iw).expect("admissible extension");
        let coeff = &ms.f(i, &iw) * &tgt.weight(r).div(&src.weight(c));
        Some((r, c, coeff))
    });
    LevelOperator::from_triplets(tgt.dim(), src.dim(), triplets)
}

#[derive(Clone, Debug, Serialize)]
pub struct MonicReport {
    pub depth: usize,
    pub dim: usize,
    /// Rank of `{T_I T*_I 1 : |I| <= k+1}` inside `H_k`.
    pub span_dim: usize,
    pub monic: bool,
    /// Every `T_I T*_I` is the 0-1 diagonal of the words extending `I`.
    pub projections_ok: bool,
    pub projections_checked: usize,
    /// `max |T_i entry - 1|`.
    pub coefficient_defect: Value,
}

/// `J b_w = Σ_x √(m(wx)/m(w)) b_{wx}` between vertex levels.
fn vertex_inclusion(d: &Diagram, src: &LevelSpace, tgt: &LevelSpace) -> LevelOperator {
    let triplets = (0..src.dim()).flat_map(|c| {
        let w = src.word(c);
        let last = *w.last().expect("nonempty word");
        (0..d.vertex_count())
            .filter(move |&x| d.matrix.get(last, x))
            .map(move |x| {
                let mut wx = w.to_vec();
                wx.push(x);
                let r = tgt.position(&wx).expect("admissible extension");
                (r, c, tgt.mass(r).div(src.mass(c)).sqrt())
            })
    });
    LevelOperator::from_triplets(tgt.dim(), src.dim(), triplets)
}

/// Monic test at depth `k` on `H_k` = vertex words of length `k+1`.
///
/// `f_i` is constant only on cylinders of length at least 2, so the
/// operators are built between lengths `1..=k+2` and each `T_I T*_I` with
/// `|I| <= k+1` is compressed to `H_k` through the inclusion; `χ_[I]` is
/// measurable at length `k+1`, so the compression is exact.
pub fn monic_operators(ms: &MonicSystem, k: usize) -> Result<MonicReport> {
    let top = k + 1;
    let d = &ms.diagram;
    let n = d.vertex_count();
    let spaces = (0..=top + 1)
        .map(|len| LevelSpace::vertices(d, &ms.spec, len))
        .collect::<Result<Vec<_>>>()?;
    // ops[len][i] : V_len -> V_{len+1}, len >= 1
    let ops: Vec<Vec<LevelOperator>> = (0..=top)
        .map(|len| {
            if len == 0 {
                Vec::new()
            } else {
                (0..n)
                    .map(|i| monic_operator(ms, &spaces[len], &spaces[len + 1], i))
                    .collect()
            }
        })
        .collect();
    let coefficient_defect = Value::max_abs(
        ops.iter()
            .flatten()
            .flat_map(|op| op.entries().map(|(_, _, v)| v - &Value::one()))
            .collect::<Vec<_>>()
            .iter(),
    );

    let h = &spaces[top];
    let fine = &spaces[top + 1];
    let j = vertex_inclusion(d, h, fine);
    let jt = j.adjoint();
    let unit = h.unit_vector();
    let words: Vec<Vec<VertexId>> = (1..=top)
        .flat_map(|len| spaces[len].words().to_vec())
        .collect();
    let results = par::map(&words, |word| {
        // T_I = T_{i_1} ∘ ... ∘ T_{i_n} : V_{top+1-n} -> V_{top+1}
        let mut t_i = LevelOperator::identity(fine.dim());
        for (pos, &letter) in word.iter().enumerate() {
            t_i = t_i.compose(&ops[top - pos][letter]);
        }
        let proj = t_i.compose(&t_i.adjoint());
        let compressed = jt.compose(&proj).compose(&j);
        let expected = LevelOperator::diagonal(
            (0..h.dim())
                .map(|r| {
                    if h.word(r).starts_with(word) {
                        Value::one()
                    } else {
                        Value::zero()
                    }
                })
                .collect(),
        );
        let ok = proj.is_diagonal_projection() && compressed == expected;
        (ok, compressed.apply(&unit))
    });
    let projections_ok = results.iter().all(|(ok, _)| *ok);
    let vectors: Vec<Vec<Value>> = results.into_iter().map(|(_, v)| v).collect();
    let span_dim = rank_in_basis(h, &vectors);
    Ok(MonicReport {
        depth: k,
        dim: h.dim(),
        span_dim,
        monic: span_dim == h.dim(),
        projections_ok,
        projections_checked: words.len(),
        coefficient_defect,
    })
}

/// Rank after dividing coordinate `r` by `√m(w_r)`; the rescaled vectors are
/// cylinder indicators, so the elimination is over rationals when possible.
fn rank_in_basis(h: &LevelSpace, vectors: &[Vec<Value>]) -> usize {
    let weights = h.unit_vector();
    let scaled: Vec<Vec<Value>> = vectors
        .iter()
        .map(|v| v.iter().zip(&weights).map(|(x, w)| x.div(w)).collect())
        .collect();
    let exact: Option<Vec<Vec<Rational>>> = scaled
        .iter()
        .map(|v| v.iter().map(Value::as_rational).collect())
        .collect();
    match exact {
        Some(rows) => rational_rank(rows),
        None => float_rank(
            scaled
                .iter()
                .map(|v| v.iter().map(Value::to_f64).collect())
                .collect(),
        ),
    }
}

fn rational_rank(mut rows: Vec<Vec<Rational>>) -> usize {
    use num_traits::Zero;
    let ncols = rows.first().map_or(0, Vec::len);
    let mut rank = 0;
    for col in 0..ncols {
        let Some(p) = (rank..rows.len()).find(|&r| !rows[r][col].is_zero()) else {
            continue;
        };
        rows.swap(rank, p);
        let pivot = rows[rank][col].clone();
        for r in 0..rows.len() {
            if r != rank && !rows[r][col].is_zero() {
                let factor = &rows[r][col] / &pivot;
                for c in col..ncols {
                    let delta = &factor * &rows[rank][c];
                    rows[r][c] -= delta;
                }
            }
        }
        rank += 1;
    }
    rank
}

fn float_rank(mut rows: Vec<Vec<f64>>) -> usize {
    let ncols = rows.first().map_or(0, Vec::len);
    let mut rank = 0;
    for col in 0..ncols {
        let best =
            (rank..rows.len()).max_by(|&a, &b| rows[a][col].abs().total_cmp(&rows[b][col].abs()));
        let Some(p) = best.filter(|&p| rows[p][col].abs() > 1e-9) else {
            continue;
        };
        rows.swap(rank, p);
        for r in 0..rows.len() {
            if r != rank {
                let factor = rows[r][col] / rows[rank][col];
                for c in col..ncols {
                    rows[r][c] -= factor * rows[rank][c];
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Largest entry gap between monic `T_i` on vertex words of length `k+1` and
/// `Σ_{s(e)=i} T_e` on edge words of depth `k`, matched by word translation.
pub fn monic_edge_agreement(ms: &MonicSystem, k: usize) -> Result<Value> {
    let d = &ms.diagram;
    let v0 = LevelSpace::vertices(d, &ms.spec, k + 1)?;
    let v1 = LevelSpace::vertices(d, &ms.spec, k + 2)?;
    let tower = Tower::new(d, &ms.spec, k + 1)?;
    let to_edge = |w: &[VertexId]| -> Vec<usize> {
        if w.len() == 1 {
            w.to_vec()
        } else {
            crate::sfs::vertex_to_edge(d, w).expect("admissible vertex word")
        }
    };
    let gaps = par::map_range(d.vertex_count(), |i| {
        let monic = monic_operator(ms, &v0, &v1, i);
        let edge = tower.vertex_operator(i, k);
        let mut gap = Vec::new();
        for c in 0..v0.dim() {
            let ec = tower
                .space(k)
                .position(&to_edge(v0.word(c)))
                .expect("translated word");
            for r in 0..v1.dim() {
                let er = tower
                    .space(k + 1)
                    .position(&to_edge(v1.word(r)))
                    .expect("translated word");
                gap.push(monic.get(r, c) - edge.get(er, ec));
            }
        }
        Value::max_abs(&gap)
    });
    Ok(Value::max_abs(&gaps))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EquivalenceVerdict {
    Equivalent,
    NotEquivalent,
    Singular,
}

#[derive(Clone, Debug, Serialize)]
pub struct EquivalenceReport {
    pub verdict: EquivalenceVerdict,
    pub depth: usize,
    /// `h = √(m'/m)` on vertex words of length `k+1`.
    pub h: Vec<(Vec<VertexId>, Value)>,
    /// `max |h²(C x) - h²(C)|` over one refinement step.
    pub refinement_defect: Value,
    /// `max |f'_i(C) - h(σC) f_i(C) / h(C')|`, `C'` the length-`(k+1)`
    /// prefix of `C`.
    pub cocycle_defect: Value,
    pub witness: Option<Vec<VertexId>>,
}

pub fn monic_equivalence(
    ms: &MonicSystem,
    ms2: &MonicSystem,
    k: usize,
) -> Result<EquivalenceReport> {
    if ms.diagram.matrix != ms2.diagram.matrix {
        return Err(Error::InvalidInput(
            "monic systems live on different matrices".into(),
        ));
    }
    let space = shift(&ms.diagram);
    let words = space.words(k + 1);
    let longer = space.words(k + 2);
    let ratio = |w: &[VertexId]| -> std::result::Result<Value, ()> {
        let (a, b) = (ms.measure(w), ms2.measure(w));
        if a.is_zero() != b.is_zero() {
            Err(())
        } else {
            Ok(b.div(&a).sqrt())
        }
    };
    let mut h = Vec::with_capacity(words.len());
    for w in words.iter().chain(&longer) {
        if ratio(w).is_err() {
            return Ok(EquivalenceReport {
                verdict: EquivalenceVerdict::Singular,
                depth: k,
                h: Vec::new(),
                refinement_defect: Value::zero(),
                cocycle_defect: Value::zero(),
                witness: Some(w.clone()),
            });
        }
    }
    for w in &words {
        h.push((w.clone(), ratio(w).expect("checked above")));
    }
    let h_at = |w: &[VertexId]| {
        &h[words
            .binary_search_by(|x| x.as_slice().cmp(w))
            .expect("word of length k+1")]
        .1
    };

    let per_word = par::map(&longer, |c| {
        let prefix = &c[..k + 1];
        let fine = ratio(c).expect("checked above");
        let refine = &(&fine * &fine) - &(h_at(prefix) * h_at(prefix));
        let i = c[0];
        let lhs = ms2.f(i, c);
        let rhs = (h_at(&c[1..]) * &ms.f(i, c)).div(h_at(prefix));
        (refine, lhs - rhs)
    });
    let refinement: Vec<Value> = per_word.iter().map(|(r, _)| r.clone()).collect();
    let cocycle: Vec<Value> = per_word.iter().map(|(_, c)| c.clone()).collect();
    let bad = per_word
        .iter()
        .position(|(r, c)| !r.is_zero() || !c.is_zero())
        .map(|p| longer[p].clone());
    Ok(EquivalenceReport {
        verdict: if bad.is_none() {
            EquivalenceVerdict::Equivalent
        } else {
            EquivalenceVerdict::NotEquivalent
        },
        depth: k,
        h,
        refinement_defect: Value::max_abs(&refinement),
        cocycle_defect: Value::max_abs(&cocycle),
        witness: bad,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{perron_data, Transition};

    fn three() -> Diagram {
        Diagram::from_rows(vec![vec![1, 1, 0], vec![0, 1, 1], vec![1, 0, 1]]).unwrap()
    }

    fn inherent(d: &Diagram) -> MonicSystem {
        monic_from_measure(d, &MeasureSpec::Invariant(perron_data(d).unwrap())).unwrap()
    }

    fn stationary(d: &Diagram, pi: [i64; 3], p: i64, q: i64) -> MeasureSpec {
        let den: i64 = pi.iter().sum();
        let (p, q) = (Value::ratio(p, p + q), Value::ratio(q, p + q));
        let w = [p.clone(), q.clone(), p.clone(), q.clone(), q, p];
        MeasureSpec::stationary(
            pi.iter().map(|&x| Value::ratio(x, den)).collect(),
            Transition::from_edge_weights(d, &w),
        )
    }

    #[test]
    fn inherent_f_is_sqrt_lambda() {
        let d = three();
        let ms = inherent(&d);
        let root2 = Value::ratio(2, 1).sqrt();
        for len in 2..=5 {
            for (w, fs) in ms.f_table(len) {
                for (i, f) in fs.iter().enumerate() {
                    if w[0] == i {
                        assert_eq!(f, &root2);
                        assert_eq!(&ms.g(i, &w) * f, Value::one());
                        assert_eq!(&(f * f) * &ms.measure(&w), ms.measure(&w[1..]));
                    } else {
                        assert!(f.is_exact_zero());
                    }
                }
            }
        }
    }

    #[test]
    fn inherent_is_monic_at_depth_three() {
        let d = three();
        let r = monic_operators(&inherent(&d), 3).unwrap();
        assert_eq!((r.dim, r.span_dim), (24, 24));
        assert!(r.monic && r.projections_ok);
        assert!(r.coefficient_defect.is_exact_zero());
        assert_eq!(r.projections_checked, 3 + 6 + 12 + 24);
    }

    #[test]
    fn agrees_with_edge_family() {
        let d = three();
        let ms = monic_from_measure(&d, &stationary(&d, [1, 1, 1], 1, 3)).unwrap();
        for k in 0..=3 {
            assert!(monic_edge_agreement(&ms, k).unwrap().is_exact_zero());
        }
    }

    #[test]
    fn equivalence_roundtrip_and_failure() {
        let d = three();
        let m = stationary(&d, [1, 1, 1], 1, 2);
        let ms = monic_from_measure(&d, &m).unwrap();
        let same = monic_equivalence(&ms, &ms, 3).unwrap();
        assert_eq!(same.verdict, EquivalenceVerdict::Equivalent);
        assert!(same.h.iter().all(|(_, h)| *h == Value::one()));

        // density |h|² = (1, 4, 9)/Z on the first letter
        let scaled = monic_from_measure(&d, &stationary(&d, [1, 4, 9], 1, 2)).unwrap();
        let r = monic_equivalence(&ms, &scaled, 3).unwrap();
        assert_eq!(r.verdict, EquivalenceVerdict::Equivalent, "{r:?}");
        for (w, h) in &r.h {
            let expect = Value::ratio([1, 4, 9][w[0]] * 3, 14).sqrt();
            assert_eq!(h, &expect);
        }

        let other = monic_from_measure(&d, &stationary(&d, [1, 1, 1], 2, 1)).unwrap();
        let r = monic_equivalence(&ms, &other, 3).unwrap();
        assert_eq!(r.verdict, EquivalenceVerdict::NotEquivalent);
        assert!(r.witness.is_some() && !r.cocycle_defect.is_zero());
    }
}
