//! Acceptance suite: one line per criterion, non-zero exit if any fails.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ckb_core::admissible::{
    find_admissible, find_first_admissible, invariant_compat, is_admissible, stationary_compat,
    AdmissibleMap, CompatVerdict,
};
use ckb_core::diagram::{coupled_graph, is_primitive, Diagram};
use ckb_core::io;
use ckb_core::measure::{
    cylinder_measure, invariant_as_markov, level_consistency, level_words, perron_data,
    quasi_stationarity_check, MeasureSpec, Transition, Verdict,
};
use ckb_core::number::{Rational, Value};
use ckb_core::representation::{
    ck_verify_edge, ck_verify_vertex, monic_equivalence, monic_from_measure, monic_operators,
    verify_intertwiner, EquivalenceVerdict,
};
use ckb_core::sfs::{ck_condition, edge_sfs, refinement_check, vertex_sfs};

const PERRON_TOL: f64 = 1e-12;
const MONIC_F_TOL: f64 = 1e-12;
const LIMIT_COUPLED: Duration = Duration::from_millis(100);
const LIMIT_SEARCH_THREE: Duration = Duration::from_secs(1);
const LIMIT_SEARCH_FOUR: Duration = Duration::from_secs(5);
const LIMIT_CK: Duration = Duration::from_secs(10);
const LIMIT_PROPERTIES: Duration = Duration::from_secs(60);
const PROPERTY_SEEDS: u64 = 100;
/// Largest level space used by the randomized CK check.
const PROPERTY_WORD_BUDGET: usize = 2_000;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

fn diagram(name: &str) -> Diagram {
    io::load_diagram(&fixture(name)).expect("fixture diagram")
}

fn measure(name: &str, d: &Diagram) -> MeasureSpec {
    io::load_measure(&fixture(name), d).expect("fixture measure")
}

fn alpha(name: &str, a: &Diagram, b: &Diagram) -> AdmissibleMap {
    io::load_alpha(&fixture(name), a, b).expect("fixture map")
}

struct Outcome {
    ok: bool,
    detail: String,
}

fn check(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        ok,
        detail: detail.into(),
    }
}

fn all(parts: Vec<(bool, String)>) -> Outcome {
    let failed: Vec<String> = parts
        .iter()
        .filter(|(ok, _)| !ok)
        .map(|(_, s)| s.clone())
        .collect();
    if failed.is_empty() {
        check(
            true,
            parts
                .into_iter()
                .map(|(_, s)| s)
                .collect::<Vec<_>>()
                .join("; "),
        )
    } else {
        check(false, format!("failed: {}", failed.join("; ")))
    }
}

/// Every bijection `0..n -> 0..n` in lexicographic order.
fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut p: Vec<usize> = (0..n).collect();
    loop {
        out.push(p.clone());
        let Some(i) = (0..n.saturating_sub(1)).rev().find(|&i| p[i] < p[i + 1]) else {
            return out;
        };
        let j = (i + 1..n)
            .rev()
            .find(|&j| p[j] > p[i])
            .expect("successor exists");
        p.swap(i, j);
        p[i + 1..].reverse();
    }
}

/// Brute force: keep bijections under which `r(e) = s(f)` iff
/// `r'(α e) = s'(α f)`, computed from raw source/range pairs.
fn brute_force(a: &Diagram, b: &Diagram) -> Vec<Vec<usize>> {
    let ends = |d: &Diagram| -> Vec<(usize, usize)> {
        d.edges
            .edges()
            .iter()
            .map(|e| (e.source, e.range))
            .collect()
    };
    let (ea, eb) = (ends(a), ends(b));
    if ea.len() != eb.len() {
        return Vec::new();
    }
    let n = ea.len();
    permutations(n)
        .into_iter()
        .filter(|p| {
            (0..n).all(|e| (0..n).all(|f| (ea[e].1 == ea[f].0) == (eb[p[e]].1 == eb[p[f]].0)))
        })
        .collect()
}

fn criterion_1() -> Outcome {
    let d = diagram("three.json");
    let start = Instant::now();
    let g = coupled_graph(&d);
    let dot = g.to_dot();
    let elapsed = start.elapsed();
    let name = |e: usize| {
        let x = &d.edges.edges()[e];
        format!("a{}{}", x.source + 1, x.range + 1)
    };
    let got: BTreeSet<(String, String)> =
        g.arrows.iter().map(|&(e, f)| (name(e), name(f))).collect();
    let listed: BTreeSet<(String, String)> = [
        ("a11", "a11"),
        ("a22", "a22"),
        ("a33", "a33"),
        ("a11", "a12"),
        ("a12", "a22"),
        ("a12", "a23"),
        ("a22", "a23"),
        ("a23", "a31"),
        ("a23", "a33"),
        ("a33", "a31"),
        ("a31", "a11"),
        ("a31", "a12"),
    ]
    .iter()
    .map(|&(x, y)| (x.to_string(), y.to_string()))
    .collect();
    let golden = std::fs::read_to_string(fixture("three_coupled.dot")).expect("golden DOT");
    all(vec![
        (
            g.vertex_count() == 6,
            format!("{} vertices", g.vertex_count()),
        ),
        (
            got == listed,
            format!("{} arrows match the hand-listed set", got.len()),
        ),
        (dot == golden, "DOT byte-identical to golden".into()),
        (
            elapsed < LIMIT_COUPLED,
            format!("{:.1?} < {:?}", elapsed, LIMIT_COUPLED),
        ),
    ])
}

fn search_criterion(
    a: &Diagram,
    b: &Diagram,
    expected: &AdmissibleMap,
    limit: Duration,
    count: usize,
) -> Outcome {
    let start = Instant::now();
    let found = find_admissible(a, b);
    let elapsed = start.elapsed();
    let oracle = brute_force(a, b);
    let found_maps: Vec<Vec<usize>> = found.iter().map(|m| m.map.clone()).collect();
    let mut parts = vec![
        (
            found_maps == oracle,
            format!(
                "{} maps = brute force over {} bijections",
                found.len(),
                count
            ),
        ),
        (found.contains(expected), "contains the reference map".into()),
        (elapsed < limit, format!("{:.1?} < {:?}", elapsed, limit)),
    ];
    if a.edge_count() == b.edge_count() && a.edges == b.edges {
        parts.push((
            found.contains(&AdmissibleMap::identity(a.edge_count())),
            "contains the identity".into(),
        ));
    }
    all(parts)
}

fn criterion_2() -> Outcome {
    let d = diagram("three.json");
    search_criterion(
        &d,
        &d,
        &alpha("alpha_three.json", &d, &d),
        LIMIT_SEARCH_THREE,
        720,
    )
}

fn criterion_3() -> Outcome {
    let a = diagram("four_a.json");
    let b = diagram("four_a_prime.json");
    search_criterion(
        &a,
        &b,
        &alpha("alpha_four.json", &a, &b),
        LIMIT_SEARCH_FOUR,
        40_320,
    )
}

fn criterion_4() -> Outcome {
    let d = diagram("three.json");
    let pd = perron_data(&d).expect("primitive");
    // Oracle: largest real root of (1 - t)^3 + 1 by bisection, then the
    // kernel of A - tI with unit sum by direct elimination.
    let charpoly = |t: f64| (1.0 - t).powi(3) + 1.0;
    let (mut lo, mut hi) = (1.5_f64, 3.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if charpoly(lo) * charpoly(mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    // Rows of A - tI: (1-t) x1 + x2 = 0, (1-t) x2 + x3 = 0.
    let x1 = 1.0;
    let x2 = (t - 1.0) * x1;
    let x3 = (t - 1.0) * x2;
    let s = x1 + x2 + x3;
    let oracle = [x1 / s, x2 / s, x3 / s];
    let lambda_ok = (pd.lambda - t).abs() <= PERRON_TOL && (pd.lambda - 2.0).abs() <= PERRON_TOL;
    let x_ok =
        pd.x.iter()
            .zip(oracle)
            .all(|(a, b)| (a - b).abs() <= PERRON_TOL && (a - 1.0 / 3.0).abs() <= PERRON_TOL);
    all(vec![
        (lambda_ok, format!("lambda = {} (oracle {})", pd.lambda, t)),
        (x_ok, format!("x = {:?}", pd.x)),
        (pd.is_exact(), "exact rational form recovered".into()),
    ])
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let mut parts = Vec::new();
    for name in ["three.json", "four_a.json", "four_a_prime.json"] {
        let d = diagram(name);
        let pd = perron_data(&d).expect("primitive");
        let specs = [
            ("invariant", MeasureSpec::Invariant(pd.clone())),
            ("as-markov", invariant_as_markov(&d, &pd)),
        ];
        for (label, spec) in &specs {
            let mut worst = String::new();
            let mut ok = true;
            for k in 1..=6 {
                let e = ck_verify_edge(&d, spec, k).expect("edge check");
                let v = ck_verify_vertex(&d, spec, k).expect("vertex check");
                let exact = e.residual.is_exact_zero() && v.residual.is_exact_zero();
                if !(exact && e.passed() && v.passed()) {
                    ok = false;
                    worst = format!("k={} edge {} vertex {}", k, e.residual, v.residual);
                }
            }
            parts.push((
                ok,
                format!(
                    "{} {}: {}",
                    name,
                    label,
                    if ok { "0".into() } else { worst }
                ),
            ));
        }
    }
    let elapsed = start.elapsed();
    parts.push((
        elapsed < LIMIT_CK,
        format!("{:.1?} < {:?}", elapsed, LIMIT_CK),
    ));
    all(parts)
}

fn criterion_6() -> Outcome {
    let d = diagram("three.json");
    let a = alpha("alpha_three.json", &d, &d);
    let inv = measure("invariant.json", &d);
    let p = measure("example_p.json", &d);
    let bumped = measure("example_p_perturbed.json", &d);
    let mut parts = Vec::new();
    for (label, spec) in [("invariant", &inv), ("stationary P", &p)] {
        let mut ok = true;
        for k in 1..=6 {
            let r = verify_intertwiner(&d, spec, &d, spec, &a, k).expect("admissible");
            ok &= r.unitary_residual.is_exact_zero()
                && r.intertwining_residual.is_exact_zero()
                && r.inclusion_commutes
                && r.agree
                && r.predicate.compatible();
        }
        parts.push((
            ok,
            format!(
                "{}: unitary, intertwining and inclusion checks exact for k <= 6",
                label
            ),
        ));
    }
    let r = verify_intertwiner(&d, &p, &d, &bumped, &a, 6).expect("admissible");
    let st = stationary_compat(&d, &p, &d, &bumped, &a).expect("stationary");
    let flipped = !r.inclusion_commutes
        && r.agree
        && st.verdict == CompatVerdict::Singular
        && st.witness.is_some();
    parts.push((
        flipped && r.intertwining_residual.is_exact_zero() && r.witness_edge.is_some(),
        format!(
            "perturbed P: inclusion check fails at {}, stationary_compat witness {}",
            r.witness_edge
                .map(|e| d.edges.label(e).to_string())
                .unwrap_or_default(),
            st.witness
                .map(|w| d.edges.format_word(&w))
                .unwrap_or_default()
        ),
    ));
    all(parts)
}

fn example_p(d: &Diagram, pattern: [bool; 6], p: &Rational) -> MeasureSpec {
    let q = Rational::from_integer(1.into()) - p;
    let w: Vec<Value> = pattern
        .iter()
        .map(|&is_p| Value::from_rational(if is_p { p.clone() } else { q.clone() }))
        .collect();
    MeasureSpec::stationary(
        vec![Value::ratio(1, 3); 3],
        Transition::from_edge_weights(d, &w),
    )
}

fn criterion_7() -> Outcome {
    let d = diagram("three.json");
    let a = alpha("alpha_three.json", &d, &d);
    // e1..e6 carry p, q, p, q, q, p.
    let expected = [true, false, true, false, false, true];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut parts = Vec::new();
    let mut samples = Vec::new();
    while samples.len() < 5 {
        let den: i64 = rng.gen_range(3..200);
        let num: i64 = rng.gen_range(1..den);
        let p = Rational::new(num.into(), den.into());
        if p * Rational::from_integer(2.into()) == Rational::from_integer(1.into()) {
            continue;
        }
        samples.push(Rational::new(num.into(), den.into()));
    }
    let pass = samples.iter().all(|p| {
        let m = example_p(&d, expected, p);
        stationary_compat(&d, &m, &d, &m, &a)
            .map(|r| r.verdict == CompatVerdict::Equivalent)
            .unwrap_or(false)
    });
    parts.push((
        pass,
        format!(
            "alpha-invariance holds for p in {:?}",
            samples.iter().map(|p| p.to_string()).collect::<Vec<_>>()
        ),
    ));

    // Maps sending a p-edge to a q-edge, searched over all admissible maps.
    let p = &samples[0];
    let maps = find_admissible(&d, &d);
    let mixing = |src: &[bool; 6], tgt: &[bool; 6]| -> Vec<AdmissibleMap> {
        maps.iter()
            .filter(|m| (0..6).any(|e| src[e] != tgt[m.apply(e)]))
            .cloned()
            .collect()
    };
    let same_target = mixing(&expected, &expected);
    let fails_same = same_target.iter().all(|m| {
        let x = example_p(&d, expected, p);
        stationary_compat(&d, &x, &d, &x, m)
            .map(|r| r.verdict == CompatVerdict::Singular && r.witness.is_some())
            .unwrap_or(false)
    });
    parts.push((
        fails_same,
        format!(
            "{} of {} admissible self-maps mix p- and q-edges of this P",
            same_target.len(),
            maps.len()
        ),
    ));
    // Target weighting with rows 2 and 3 swapped to (q, p): now such maps exist.
    let swapped = [true, false, false, true, false, true];
    let mixers = mixing(&expected, &swapped);
    let src = example_p(&d, expected, p);
    let tgt = example_p(&d, swapped, p);
    let fails_swapped = !mixers.is_empty()
        && mixers.iter().all(|m| {
            stationary_compat(&d, &src, &d, &tgt, m)
                .map(|r| r.verdict == CompatVerdict::Singular && r.witness.is_some())
                .unwrap_or(false)
        });
    parts.push((
        fails_swapped,
        format!(
            "{} maps send a p-edge to a q-edge of the swapped target; all fail with a witness",
            mixers.len()
        ),
    ));
    all(parts)
}

fn criterion_8() -> Outcome {
    let d = diagram("three.json");
    let pd = perron_data(&d).expect("primitive");
    let m = invariant_as_markov(&d, &pd);
    let mut ok = true;
    let mut words = 0;
    for k in 1..=8 {
        for w in level_words(&d, k) {
            // x_{r(w_k)} / λ^k with x = 1/3, λ = 2.
            let closed = Value::from_rational(Rational::new(1.into(), (3 * (1i64 << k)).into()));
            let got = cylinder_measure(&d, &m, &w).expect("linked");
            ok &= got.is_exact() && got == closed;
            words += 1;
        }
        ok &= level_consistency(&d, &m, k).is_exact_zero();
    }
    check(
        ok,
        format!(
            "{} words of depth <= 8 match x/lambda^k exactly; consistency defect 0",
            words
        ),
    )
}

fn criterion_9() -> Outcome {
    let d = diagram("three.json");
    let stationary = measure("example_p.json", &d).lift_to_sequence(&d);
    let alt = measure("sequence_alternating.json", &d);
    let perturbed = measure("sequence_perturbed.json", &d);
    let s = quasi_stationarity_check(&d, &stationary, 6);
    let a = quasi_stationarity_check(&d, &alt, 6);
    let p = quasi_stationarity_check(&d, &perturbed, 6);
    // Oracle along the loop e1: ratios 3/4 ÷ 1/4 then 1/4 ÷ 3/4 alternate.
    let expected: Vec<Value> = (0..a.depth)
        .map(|i| {
            if i % 2 == 0 {
                Value::ratio(3, 1)
            } else {
                Value::one()
            }
        })
        .collect();
    let loop_word = a.worst_word.iter().all(|&e| e == 0) && !a.worst_word.is_empty();
    all(vec![
        (
            s.verdict == Verdict::Pass,
            "stationary sequence passes".into(),
        ),
        (
            a.verdict == Verdict::Fail && loop_word && a.worst_trace == expected,
            format!(
                "alternating sequence fails along {}",
                d.edges.format_word(&a.worst_word)
            ),
        ),
        (
            p.verdict == Verdict::Pass,
            "summably perturbed sequence with repeat-last tail passes".into(),
        ),
    ])
}

fn criterion_10() -> Outcome {
    let d = diagram("three.json");
    let inv = measure("invariant.json", &d);
    let ms = monic_from_measure(&d, &inv).expect("valid");
    let root2 = 2f64.sqrt();
    let mut f_ok = true;
    for len in 2..=5 {
        for (w, fs) in ms.f_table(len) {
            for (i, f) in fs.iter().enumerate() {
                f_ok &= if w[0] == i {
                    (f.to_f64() - root2).abs() <= MONIC_F_TOL
                } else {
                    f.is_exact_zero()
                };
            }
        }
    }
    let r = monic_operators(&ms, 3).expect("monic");
    let words3 = d.path_words(3).len();

    // Roundtrip: m' = |h|² m with |h|² = c·(1, 4, 9) on the first letter.
    let m = measure("example_p.json", &d);
    let (MeasureSpec::StationaryMarkov { pi, p }, _) = (&m, ()) else {
        return check(false, "example_p fixture is not stationary");
    };
    let dens = [1i64, 4, 9];
    let z: Value = pi
        .iter()
        .zip(dens)
        .map(|(x, h2)| x * &Value::ratio(h2, 1))
        .sum();
    let pi2: Vec<Value> = pi
        .iter()
        .zip(dens)
        .map(|(x, h2)| (x * &Value::ratio(h2, 1)).div(&z))
        .collect();
    let m2 = MeasureSpec::stationary(pi2, p.clone());
    let ms1 = monic_from_measure(&d, &m).expect("valid");
    let ms2 = monic_from_measure(&d, &m2).expect("valid");
    let eq = monic_equivalence(&ms1, &ms2, 3).expect("same matrix");
    let recovered =
        eq.h.iter()
            .all(|(w, h)| *h == Value::ratio(dens[w[0]], 1).div(&z).sqrt() && h.is_exact());
    all(vec![
        (f_ok, "f_i = sqrt(2) on R_i, 0 elsewhere".into()),
        (
            r.projections_ok,
            format!(
                "{} products T_I T_I* are diagonal 0-1 projections",
                r.projections_checked
            ),
        ),
        (
            r.span_dim == 24 && r.dim == words3 && r.monic,
            format!("cyclic span {} = |path_words(3)| = {}", r.span_dim, words3),
        ),
        (
            eq.verdict == EquivalenceVerdict::Equivalent && recovered,
            "roundtrip recovers the constructed h exactly".into(),
        ),
    ])
}

/// Random primitive 0-1 matrix with `n <= 5`.
fn random_primitive(rng: &mut ChaCha8Rng) -> Diagram {
    loop {
        let n = rng.gen_range(1..=5);
        let density = rng.gen_range(0.3..0.8);
        let rows: Vec<Vec<u8>> = (0..n)
            .map(|_| (0..n).map(|_| u8::from(rng.gen_bool(density))).collect())
            .collect();
        if let Ok(d) = Diagram::from_rows(rows) {
            if is_primitive(&d.matrix).primitive {
                return d;
            }
        }
    }
}

fn random_stationary(d: &Diagram, rng: &mut ChaCha8Rng) -> MeasureSpec {
    let n = d.vertex_count();
    let mut w = vec![Value::zero(); d.edge_count()];
    for v in 0..n {
        let out = d.edges.out_edges(v);
        let raw: Vec<i64> = out.iter().map(|_| rng.gen_range(1..10)).collect();
        let total: i64 = raw.iter().sum();
        for (&e, r) in out.iter().zip(raw) {
            w[e] = Value::ratio(r, total);
        }
    }
    let raw: Vec<i64> = (0..n).map(|_| rng.gen_range(1..10)).collect();
    let total: i64 = raw.iter().sum();
    MeasureSpec::stationary(
        raw.iter().map(|&r| Value::ratio(r, total)).collect(),
        Transition::from_edge_weights(d, &w),
    )
}

/// Same matrix with vertices relabelled by a random permutation.
fn relabel(d: &Diagram, rng: &mut ChaCha8Rng) -> Diagram {
    let n = d.vertex_count();
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        perm.swap(i, rng.gen_range(0..=i));
    }
    let mut rows = vec![vec![0u8; n]; n];
    for i in 0..n {
        for j in 0..n {
            rows[perm[i]][perm[j]] = u8::from(d.matrix.get(i, j));
        }
    }
    Diagram::from_rows(rows).expect("relabelled matrix is valid")
}

fn criterion_11() -> Outcome {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut max_depth_used = 0;
    for seed in 0..PROPERTY_SEEDS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = random_primitive(&mut rng);
        let spec = random_stationary(&d, &mut rng);
        // deepest k <= 6 whose level k+1 stays within the word budget
        let k = (1..=6)
            .take_while(|&k| d.path_words(k + 1).len() <= PROPERTY_WORD_BUDGET)
            .last()
            .unwrap_or(1);
        max_depth_used = max_depth_used.max(k);
        for kk in 1..=k {
            let e = ck_verify_edge(&d, &spec, kk).expect("edge check");
            let v = ck_verify_vertex(&d, &spec, kk).expect("vertex check");
            if !(e.residual.is_exact_zero()
                && v.residual.is_exact_zero()
                && e.passed()
                && v.passed())
            {
                failures.push(format!("seed {seed}: CK residual at k={kk}"));
            }
        }
        let adjacency = coupled_graph(&d).adjacency.rows();
        if ck_condition(&edge_sfs(&d)).map(|m| m.rows) != Ok(adjacency) {
            failures.push(format!("seed {seed}: edge s.f.s. CK matrix"));
        }
        if ck_condition(&vertex_sfs(&d)).map(|m| m.rows) != Ok(d.matrix.rows()) {
            failures.push(format!("seed {seed}: vertex s.f.s. CK matrix"));
        }
        if refinement_check(&d, &edge_sfs(&d), &vertex_sfs(&d), 3).is_err() {
            failures.push(format!("seed {seed}: refinement"));
        }
        let other = relabel(&d, &mut rng);
        let mut candidates: Vec<AdmissibleMap> =
            find_first_admissible(&d, &other).into_iter().collect();
        let m = d.edge_count();
        for _ in 0..20 {
            let mut p: Vec<usize> = (0..m).collect();
            for i in (1..m).rev() {
                p.swap(i, rng.gen_range(0..=i));
            }
            candidates.push(AdmissibleMap { map: p });
        }
        if candidates.is_empty()
            || !is_admissible(&d, &other, &candidates[0])
                .map(|c| c.admissible)
                .unwrap_or(false)
        {
            failures.push(format!(
                "seed {seed}: relabelled copy has no admissible map"
            ));
        }
        for c in &candidates {
            let fwd = is_admissible(&d, &other, c)
                .expect("sizes match")
                .admissible;
            let back = is_admissible(&other, &d, &c.inverse())
                .expect("sizes match")
                .admissible;
            if fwd != back {
                failures.push(format!("seed {seed}: inverse admissibility differs"));
            }
        }
        if let Ok(r) = invariant_compat(&d, &other, &candidates[0], 2) {
            if r.verdict != CompatVerdict::Equal {
                failures.push(format!("seed {seed}: invariant measures not carried over"));
            }
        }
    }
    let elapsed = start.elapsed();
    all(vec![
        (
            failures.is_empty(),
            format!(
                "{} seeds: CK residual 0 (k <= {}), CK matrices = A-tilde and A, inverse admissibility, refinement{}",
                PROPERTY_SEEDS,
                max_depth_used,
                failures.first().map(|f| format!(" [{}]", f)).unwrap_or_default()
            ),
        ),
        (elapsed < LIMIT_PROPERTIES, format!("{:.1?} < {:?}", elapsed, LIMIT_PROPERTIES)),
    ])
}

type Criterion = fn() -> Outcome;

fn main() {
    // `cargo test` passes harness flags; a name filter that matches nothing
    // here skips the suite.
    let args: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    if args.iter().any(|a| !"acceptance".contains(a.as_str())) {
        return;
    }
    let criteria: [(&str, Criterion); 11] = [
        ("coupled graph of the 3x3 matrix", criterion_1),
        ("admissible maps 3x3 vs brute force", criterion_2),
        ("admissible maps 4x4 vs brute force", criterion_3),
        ("Perron data of the 3x3 matrix", criterion_4),
        ("exact CK residuals", criterion_5),
        ("intertwiner suite", criterion_6),
        ("alpha-invariance", criterion_7),
        ("invariant measure as Markov measure", criterion_8),
        ("quasi-stationarity", criterion_9),
        ("monic suite", criterion_10),
        ("randomized property suites", criterion_11),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = run();
        let status = if out.ok { "PASS" } else { "FAIL" };
        if !out.ok {
            failed += 1;
        }
        println!(
            "criterion {:>2} {} {} ({:.2?}): {}",
            i + 1,
            status,
            name,
            start.elapsed(),
            out.detail
        );
    }
    println!(
        "acceptance: {} passed, {} failed",
        criteria.len() - failed,
        failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
