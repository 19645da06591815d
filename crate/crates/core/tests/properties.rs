use proptest::prelude::*;

use ckb_core::admissible::{find_first_admissible, is_admissible, markov_compat, AdmissibleMap};
use ckb_core::diagram::{
    coupled_graph, is_primitive, linked_pairs, zero_one_reduction, Diagram, NonNegIntMatrix,
};
use ckb_core::io;
use ckb_core::measure::{
    cylinder_measure, level_consistency, level_words, MeasureSpec, Transition, Verdict,
};
use ckb_core::number::Value;
use ckb_core::sfs::{ck_condition, edge_sfs, edge_to_vertex, vertex_sfs, vertex_to_edge};

/// 0-1 matrices with no zero row or column.
fn matrix() -> impl Strategy<Value = Vec<Vec<u8>>> {
    (1usize..=5)
        .prop_flat_map(|n| prop::collection::vec(prop::collection::vec(0u8..=1, n), n))
        .prop_filter("no zero lines", |rows| {
            let n = rows.len();
            (0..n).all(|i| rows[i].contains(&1)) && (0..n).all(|j| rows.iter().any(|r| r[j] == 1))
        })
}

fn diagram() -> impl Strategy<Value = Diagram> {
    matrix().prop_map(|rows| Diagram::from_rows(rows).unwrap())
}

fn primitive() -> impl Strategy<Value = Diagram> {
    diagram().prop_filter("primitive", |d| is_primitive(&d.matrix).primitive)
}

/// Some power `A^k` with `k <= n²` is positive, by repeated boolean products.
fn primitive_oracle(rows: &[Vec<u8>]) -> bool {
    let n = rows.len();
    let mut p: Vec<Vec<bool>> = rows
        .iter()
        .map(|r| r.iter().map(|&x| x == 1).collect())
        .collect();
    for _ in 0..n * n {
        if p.iter().flatten().all(|&x| x) {
            return true;
        }
        p = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (0..n).any(|l| p[i][l] && rows[l][j] == 1))
                    .collect()
            })
            .collect();
    }
    false
}

/// Stationary spec with positive weights drawn from `seeds`.
fn stationary(d: &Diagram, seeds: &[u8]) -> MeasureSpec {
    let n = d.vertex_count();
    let mut w = vec![Value::zero(); d.edge_count()];
    for v in 0..n {
        let out = d.edges.out_edges(v);
        let raw: Vec<i64> = out
            .iter()
            .map(|&e| 1 + i64::from(seeds[e % seeds.len()]))
            .collect();
        let total: i64 = raw.iter().sum();
        for (&e, r) in out.iter().zip(raw) {
            w[e] = Value::ratio(r, total);
        }
    }
    let raw: Vec<i64> = (0..n)
        .map(|v| 1 + i64::from(seeds[(v + 3) % seeds.len()]))
        .collect();
    let total: i64 = raw.iter().sum();
    MeasureSpec::stationary(
        raw.iter().map(|&r| Value::ratio(r, total)).collect(),
        Transition::from_edge_weights(d, &w),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn linked_pair_count(d in diagram()) {
        let n = d.vertex_count();
        let expected: usize = (0..n).map(|v| d.edges.in_edges(v).len() * d.edges.out_edges(v).len()).sum();
        prop_assert_eq!(linked_pairs(&d.edges).len(), expected);
        prop_assert_eq!(coupled_graph(&d).arrows.len(), expected);
    }

    #[test]
    fn primitivity_matches_powers(rows in matrix()) {
        let d = Diagram::from_rows(rows.clone()).unwrap();
        prop_assert_eq!(is_primitive(&d.matrix).primitive, primitive_oracle(&rows));
    }

    #[test]
    fn ck_matrices(d in diagram()) {
        let adjacency = coupled_graph(&d).adjacency.rows();
        prop_assert_eq!(ck_condition(&edge_sfs(&d)).unwrap().rows, adjacency);
        prop_assert_eq!(ck_condition(&vertex_sfs(&d)).unwrap().rows, d.matrix.rows());
    }

    #[test]
    fn word_translation_roundtrip(d in diagram(), k in 1usize..4) {
        for w in d.path_words(k) {
            let v = edge_to_vertex(&d, &w).unwrap();
            prop_assert_eq!(v.len(), k + 1);
            prop_assert_eq!(vertex_to_edge(&d, &v).unwrap(), w);
        }
    }

    #[test]
    fn reduction_of_zero_one_is_edge_graph(d in diagram()) {
        let f = NonNegIntMatrix::new(d.matrix.rows().iter().map(|r| r.iter().map(|&x| u64::from(x)).collect()).collect()).unwrap();
        let r = zero_one_reduction(&f);
        prop_assert_eq!(r.rows(), coupled_graph(&d).adjacency.rows());
    }

    #[test]
    fn stationary_levels_are_probability(d in primitive(), seeds in prop::collection::vec(0u8..9, 8), k in 1usize..4) {
        let spec = stationary(&d, &seeds);
        let total: Value = level_words(&d, k).iter().map(|w| cylinder_measure(&d, &spec, w).unwrap()).sum();
        prop_assert_eq!(total, Value::one());
        prop_assert!(level_consistency(&d, &spec, k).is_exact_zero());
    }

    #[test]
    fn inverse_of_admissible_is_admissible(d in diagram(), swaps in prop::collection::vec((0usize..25, 0usize..25), 0..6)) {
        let m = d.edge_count();
        let mut p: Vec<usize> = (0..m).collect();
        for (a, b) in swaps {
            p.swap(a % m, b % m);
        }
        let alpha = AdmissibleMap { map: p };
        let fwd = is_admissible(&d, &d, &alpha).unwrap().admissible;
        let back = is_admissible(&d, &d, &alpha.inverse()).unwrap().admissible;
        prop_assert_eq!(fwd, back);
        prop_assert!(find_first_admissible(&d, &d).is_some());
    }
}

fn fixture(name: &str) -> std::path::PathBuf {
    std::path::PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

#[test]
fn perturbed_sequence_is_equivalent_under_alpha() {
    let d = io::load_diagram(&fixture("three.json")).unwrap();
    let alpha = io::load_alpha(&fixture("alpha_three.json"), &d, &d).unwrap();
    let base = io::load_measure(&fixture("example_p.json"), &d).unwrap();
    let seq = io::load_measure(&fixture("sequence_perturbed.json"), &d).unwrap();
    assert_eq!(
        markov_compat(&d, &seq, &d, &seq, &alpha, 6).verdict,
        Verdict::Pass
    );
    assert_eq!(
        markov_compat(&d, &base, &d, &seq, &alpha, 6).verdict,
        Verdict::Pass
    );
    let alt = io::load_measure(&fixture("sequence_alternating.json"), &d).unwrap();
    assert_eq!(
        markov_compat(&d, &alt, &d, &base, &alpha, 6).verdict,
        Verdict::Fail
    );
}
