use std::path::Path;

use serde_json::{json, Value as Json};

use ckb_core::admissible::{find_admissible, find_first_admissible, is_admissible, AdmissibleMap};
use ckb_core::diagram::{connectivity_report, coupled_graph, zero_one_reduction, Diagram};
use ckb_core::io;
use ckb_core::measure::{
    cylinder_measure, level_consistency, level_words, perron_data, quasi_stationarity_check,
    CylinderWord, MeasureSpec, Verdict,
};
use ckb_core::number::Value;
use ckb_core::representation::{
    ck_verify_edge, ck_verify_vertex, monic_edge_agreement, monic_equivalence, monic_from_measure,
    monic_operators, verify_intertwiner, EquivalenceVerdict,
};
use ckb_core::sfs::{edge_sfs, refinement_check, sfs_report, vertex_sfs};
use ckb_core::{Error, Result};

use crate::{Cli, Command, DepthArg, MeasureCommand, VerifyCommand};

pub const MAX_DEPTH: usize = 12;

pub struct Outcome {
    pub stdout: String,
    pub passed: bool,
}

impl Outcome {
    fn json(value: Json, passed: bool) -> Self {
        let mut stdout = serde_json::to_string_pretty(&value).expect("report serializes");
        stdout.push('\n');
        Outcome { stdout, passed }
    }
}

pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse(_) => 2,
        _ => 3,
    }
}

pub fn error_json(e: &Error) -> String {
    let kind = match e {
        Error::Parse(_) => "parse",
        Error::InvalidDiagram(_) => "invalid-diagram",
        Error::NotPrimitive(_) => "not-primitive",
        Error::UnlinkedWord(_) => "unlinked-word",
        Error::InvalidMeasure(_) => "invalid-measure",
        Error::SizeMismatch(_) => "size-mismatch",
        Error::NotAdmissible(_) => "not-admissible",
        Error::InvalidInput(_) => "invalid-input",
        Error::Io(_) => "io",
    };
    json!({ "error": kind, "message": e.to_string() }).to_string()
}

/// Validates `--depth` and applies the `CKB_MAX_DEPTH` ceiling.
fn resolve_depth(arg: DepthArg) -> Result<usize> {
    if arg.depth < 1 || arg.depth > MAX_DEPTH as i64 {
        return Err(Error::InvalidInput(format!(
            "depth {} outside 1..={}",
            arg.depth, MAX_DEPTH
        )));
    }
    let cap = match std::env::var("CKB_MAX_DEPTH") {
        Ok(s) => s
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&c| c >= 1)
            .ok_or_else(|| {
                Error::InvalidInput(format!("CKB_MAX_DEPTH={} is not a positive integer", s))
            })?,
        Err(_) => MAX_DEPTH,
    };
    Ok((arg.depth as usize).min(cap))
}

struct Ctx {
    float: bool,
}

impl Ctx {
    fn measure(&self, path: &Path, d: &Diagram) -> Result<MeasureSpec> {
        let spec = io::load_measure(path, d)?;
        Ok(if self.float { spec.to_float() } else { spec })
    }
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    let ctx = Ctx { float: cli.float };
    match &cli.command {
        Command::Analyze { diagram } => analyze(&io::load_diagram(diagram)?, &ctx),
        Command::CoupledGraph { diagram, dot } => coupled(&io::load_diagram(diagram)?, *dot),
        Command::FindAdmissible {
            source,
            target,
            first,
            ..
        } => {
            let (a, b) = (io::load_diagram(source)?, io::load_diagram(target)?);
            search(&a, &b, *first)
        }
        Command::Measure {
            command:
                MeasureCommand::Eval {
                    diagram,
                    measure,
                    depth,
                    word,
                },
        } => {
            let d = io::load_diagram(diagram)?;
            let spec = ctx.measure(measure, &d)?;
            eval(&d, &spec, resolve_depth(*depth)?, word.as_deref())
        }
        Command::Verify { command } => verify(command, &ctx),
        Command::Reduce { matrix } => {
            let f = io::load_int_matrix(matrix)?;
            let a = zero_one_reduction(&f);
            Ok(Outcome::json(json!({ "n": a.n(), "rows": a.rows() }), true))
        }
    }
}

fn value_json(v: &Value) -> Json {
    Json::String(v.to_string())
}

fn analyze(d: &Diagram, ctx: &Ctx) -> Result<Outcome> {
    let conn = connectivity_report(d);
    let g = coupled_graph(d);
    let perron = match perron_data(d) {
        Ok(pd) => {
            let pd = if ctx.float { pd.to_float() } else { pd };
            json!({
                "lambda": value_json(&pd.lambda_value()),
                "x": (0..d.vertex_count()).map(|v| value_json(&pd.x_value(v))).collect::<Vec<_>>(),
                "exact": pd.is_exact(),
                "residual": pd.residual,
            })
        }
        Err(Error::NotPrimitive(_)) => Json::Null,
        Err(e) => return Err(e),
    };
    let report = json!({
        "vertices": d.vertex_count(),
        "edges": edge_table_json(d),
        "primitivity": conn.primitivity,
        "coupled_strongly_connected": conn.coupled_strongly_connected,
        "discrepancy": conn.discrepancy,
        "perron": perron,
        "coupled_graph": {
            "vertices": g.vertex_count(),
            "arrows": g.arrows.len(),
            "adjacency": g.adjacency.rows(),
        },
    });
    Ok(Outcome::json(report, true))
}

fn edge_table_json(d: &Diagram) -> Json {
    d.edges
        .edges()
        .iter()
        .map(|e| json!({ "id": e.label, "s": e.source + 1, "r": e.range + 1 }))
        .collect()
}

fn coupled(d: &Diagram, dot: bool) -> Result<Outcome> {
    let g = coupled_graph(d);
    if dot {
        return Ok(Outcome {
            stdout: g.to_dot(),
            passed: true,
        });
    }
    let arrows: Vec<Json> = g
        .arrows
        .iter()
        .map(|&(e, f)| json!([d.edges.label(e), d.edges.label(f)]))
        .collect();
    Ok(Outcome::json(
        json!({
            "vertices": edge_table_json(d),
            "arrows": arrows,
            "adjacency": g.adjacency.rows(),
            "strongly_connected": ckb_core::diagram::is_strongly_connected(&g),
        }),
        true,
    ))
}

fn search(a: &Diagram, b: &Diagram, first: bool) -> Result<Outcome> {
    let maps: Vec<AdmissibleMap> = if first {
        find_first_admissible(a, b).into_iter().collect()
    } else {
        find_admissible(a, b)
    };
    let records = maps
        .iter()
        .map(|m| {
            Ok(json!({
                "map": io::alpha_to_json(m, a, b)["map"],
                "admissible": is_admissible(a, b, m)?.admissible,
                "inverse_admissible": is_admissible(b, a, &m.inverse())?.admissible,
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Outcome::json(
        json!({ "count": maps.len(), "maps": records }),
        true,
    ))
}

fn word_label(d: &Diagram, w: &CylinderWord) -> String {
    w.display(d)
}

fn eval(d: &Diagram, spec: &MeasureSpec, k: usize, word: Option<&str>) -> Result<Outcome> {
    if let Some(text) = word {
        let edges = text
            .split(',')
            .map(|l| {
                d.edges
                    .id(l.trim())
                    .ok_or_else(|| Error::InvalidInput(format!("unknown edge {}", l.trim())))
            })
            .collect::<Result<Vec<_>>>()?;
        let w = CylinderWord::path(d, edges)?;
        let m = cylinder_measure(d, spec, &w)?;
        return Ok(Outcome::json(
            json!({ "word": word_label(d, &w), "measure": value_json(&m) }),
            true,
        ));
    }
    let words = level_words(d, k);
    let mut total = Value::zero();
    let mut rows = Vec::with_capacity(words.len());
    for w in &words {
        let m = cylinder_measure(d, spec, w)?;
        total = &total + &m;
        rows.push(json!([word_label(d, w), value_json(&m)]));
    }
    Ok(Outcome::json(
        json!({
            "depth": k,
            "count": words.len(),
            "total": value_json(&total),
            "level_consistency": value_json(&level_consistency(d, spec, k)),
            "measures": rows,
        }),
        true,
    ))
}

fn verify(cmd: &VerifyCommand, ctx: &Ctx) -> Result<Outcome> {
    match cmd {
        VerifyCommand::Ck {
            diagram,
            measure,
            depth,
        } => {
            let d = io::load_diagram(diagram)?;
            let spec = ctx.measure(measure, &d)?;
            let k = resolve_depth(*depth)?;
            let edge = ck_verify_edge(&d, &spec, k)?;
            let vertex = ck_verify_vertex(&d, &spec, k)?;
            let es = sfs_report(&edge_sfs(&d), k);
            let vs = sfs_report(&vertex_sfs(&d), k);
            let matches = es.ck_matrix.as_ref() == Some(&coupled_graph(&d).adjacency.rows())
                && vs.ck_matrix.as_ref() == Some(&d.matrix.rows());
            let residual = Value::max_abs([&edge.residual, &vertex.residual]);
            let passed =
                edge.passed() && vertex.passed() && matches && es.saturated && vs.saturated;
            Ok(Outcome::json(
                json!({
                    "depth": k,
                    "residual": value_json(&residual),
                    "edge": edge,
                    "vertex": vertex,
                    "edge_sfs": es,
                    "vertex_sfs": vs,
                    "ck_matrices_match": matches,
                    "passed": passed,
                }),
                passed,
            ))
        }
        VerifyCommand::Equivalence {
            source,
            target,
            alpha,
            measure,
            target_measure,
            depth,
        } => {
            let a = io::load_diagram(source)?;
            let b = io::load_diagram(target)?;
            let alpha = io::load_alpha(alpha, &a, &b)?;
            let k = resolve_depth(*depth)?;
            let m = ctx.measure(measure, &a)?;
            let m2 = ctx.measure(target_measure.as_deref().unwrap_or(measure), &b)?;
            let adm = is_admissible(&a, &b, &alpha)?;
            if let Some((e, f)) = adm.violation {
                let report = json!({
                    "depth": k,
                    "admissible": false,
                    "witness": [a.edges.label(e), a.edges.label(f)],
                    "passed": false,
                });
                return Ok(Outcome::json(report, false));
            }
            let r = verify_intertwiner(&a, &m, &b, &m2, &alpha, k)?;
            let passed = r.passed() && r.predicate.compatible();
            let witness = r.predicate.witness.as_ref().map(|w| {
                w.iter()
                    .map(|&e| a.edges.label(e).to_string())
                    .collect::<Vec<_>>()
            });
            Ok(Outcome::json(
                json!({
                    "depth": k,
                    "admissible": true,
                    "unitary_residual": value_json(&r.unitary_residual),
                    "intertwining_residual": value_json(&r.intertwining_residual),
                    "inclusion_residual": value_json(&r.inclusion_residual),
                    "inclusion_commutes": r.inclusion_commutes,
                    "witness_edge": r.witness_edge.map(|e| a.edges.label(e).to_string()),
                    "verdict": r.predicate.verdict,
                    "max_defect": value_json(&r.predicate.max_defect),
                    "witness": witness,
                    "detail": r.predicate.detail,
                    "agree": r.agree,
                    "passed": passed,
                }),
                passed,
            ))
        }
        VerifyCommand::Monic {
            diagram,
            measure,
            against,
            depth,
        } => {
            let d = io::load_diagram(diagram)?;
            let k = resolve_depth(*depth)?;
            let ms = monic_from_measure(&d, &ctx.measure(measure, &d)?)?;
            let report = monic_operators(&ms, k)?;
            let agreement = monic_edge_agreement(&ms, k)?;
            let mut passed = report.monic
                && report.projections_ok
                && report.coefficient_defect.is_zero()
                && agreement.is_zero();
            let equivalence = match against {
                Some(path) => {
                    let other = monic_from_measure(&d, &ctx.measure(path, &d)?)?;
                    let eq = monic_equivalence(&ms, &other, k)?;
                    passed &= eq.verdict == EquivalenceVerdict::Equivalent;
                    let shift_label = |w: &[usize]| {
                        w.iter()
                            .map(|v| (v + 1).to_string())
                            .collect::<Vec<_>>()
                            .join(",")
                    };
                    Some(json!({
                        "verdict": eq.verdict,
                        "refinement_defect": value_json(&eq.refinement_defect),
                        "cocycle_defect": value_json(&eq.cocycle_defect),
                        "witness": eq.witness.as_deref().map(shift_label),
                        "h": eq.h.iter().map(|(w, h)| json!([shift_label(w), value_json(h)])).collect::<Vec<_>>(),
                    }))
                }
                None => None,
            };
            Ok(Outcome::json(
                json!({
                    "depth": k,
                    "monic": report,
                    "edge_agreement": value_json(&agreement),
                    "equivalence": equivalence,
                    "passed": passed,
                }),
                passed,
            ))
        }
        VerifyCommand::Refinement { diagram, depth } => {
            let d = io::load_diagram(diagram)?;
            let k = resolve_depth(*depth)?;
            let (es, vs) = (edge_sfs(&d), vertex_sfs(&d));
            let result = refinement_check(&d, &es, &vs, k);
            let passed = result.is_ok();
            let failure = result.err().map(
                |f| json!({ "relation": f.relation, "witness": d.edges.format_word(&f.witness) }),
            );
            Ok(Outcome::json(
                json!({
                    "depth": k,
                    "edge_sfs": sfs_report(&es, k),
                    "vertex_sfs": sfs_report(&vs, k),
                    "failure": failure,
                    "passed": passed,
                }),
                passed,
            ))
        }
        VerifyCommand::Quasi {
            diagram,
            measure,
            depth,
        } => {
            let d = io::load_diagram(diagram)?;
            let spec = ctx.measure(measure, &d)?;
            let k = resolve_depth(*depth)?;
            let r = quasi_stationarity_check(&d, &spec, k);
            let passed = r.verdict == Verdict::Pass;
            Ok(Outcome::json(
                json!({
                    "verdict": r.verdict,
                    "depth": r.depth,
                    "worst_word": d.edges.format_word(&r.worst_word),
                    "worst_trace": r.worst_trace.iter().map(value_json).collect::<Vec<_>>(),
                    "passed": passed,
                }),
                passed,
            ))
        }
    }
}
