//! JSON formats for diagrams, measures and admissible maps.
//!
//! Vertices are 1-based in files and 0-based in memory. Numbers are strings
//! (`"1/3"` exact, `"0.25"` floating point); bare JSON numbers are accepted.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::admissible::AdmissibleMap;
use crate::diagram::{Diagram, Edge, NonNegIntMatrix, ZeroOneMatrix};
use crate::error::{Error, Result};
use crate::measure::{perron_data, validate_spec, MeasureSpec, TailRule, Transition};
use crate::number::Value;

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DiagramFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    pub rows: Vec<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge_labels: Option<Vec<EdgeLabel>>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeLabel {
    pub id: String,
    pub s: usize,
    pub r: usize,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("{}: {}", path.display(), e)))
}

fn check_n(n: Option<usize>, rows: &[Vec<u64>]) -> Result<()> {
    match n {
        Some(n) if n != rows.len() => Err(Error::InvalidDiagram(format!(
            "n = {} but {} rows given",
            n,
            rows.len()
        ))),
        _ => Ok(()),
    }
}

pub fn parse_diagram(text: &str) -> Result<Diagram> {
    let file: DiagramFile = serde_json::from_str(text)?;
    check_n(file.n, &file.rows)?;
    let rows = file
        .rows
        .iter()
        .map(|r| {
            r.iter()
                .map(|&x| match x {
                    0 | 1 => Ok(x as u8),
                    _ => Err(Error::InvalidDiagram(format!(
                        "entry {} is not 0 or 1; use `reduce` for multigraphs",
                        x
                    ))),
                })
                .collect()
        })
        .collect::<Result<Vec<Vec<u8>>>>()?;
    let matrix = ZeroOneMatrix::new(rows)?;
    match file.edge_labels {
        None => Ok(Diagram::new(matrix)),
        Some(labels) => {
            let edges = labels
                .into_iter()
                .map(|l| {
                    if l.s == 0 || l.r == 0 {
                        return Err(Error::InvalidDiagram(format!(
                            "edge {}: vertices are 1-based",
                            l.id
                        )));
                    }
                    Ok(Edge {
                        label: l.id,
                        source: l.s - 1,
                        range: l.r - 1,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Diagram::with_labels(matrix, edges)
        }
    }
}

pub fn load_diagram(path: &Path) -> Result<Diagram> {
    parse_diagram(&read(path)?)
}

pub fn diagram_to_file(d: &Diagram) -> DiagramFile {
    DiagramFile {
        n: Some(d.vertex_count()),
        rows: d
            .matrix
            .rows()
            .into_iter()
            .map(|r| r.into_iter().map(u64::from).collect())
            .collect(),
        edge_labels: Some(
            d.edges
                .edges()
                .iter()
                .map(|e| EdgeLabel {
                    id: e.label.clone(),
                    s: e.source + 1,
                    r: e.range + 1,
                })
                .collect(),
        ),
    }
}

pub fn parse_int_matrix(text: &str) -> Result<NonNegIntMatrix> {
    let file: DiagramFile = serde_json::from_str(text)?;
    check_n(file.n, &file.rows)?;
    NonNegIntMatrix::new(file.rows)
}

pub fn load_int_matrix(path: &Path) -> Result<NonNegIntMatrix> {
    parse_int_matrix(&read(path)?)
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
enum MeasureFile {
    Invariant,
    Stationary {
        pi: Vec<Value>,
        #[serde(rename = "P")]
        p: Vec<Vec<Value>>,
    },
    Sequence {
        pi: Vec<Value>,
        #[serde(rename = "Ps")]
        ps: Vec<Vec<Vec<Value>>>,
        #[serde(default)]
        tail: TailFile,
    },
}

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum TailFile {
    #[default]
    RepeatLast,
    Stationary(Vec<Vec<Value>>),
    Periodic(usize),
}

/// Parses and validates a measure for `d`. Invariant measures compute their
/// Perron data here.
pub fn parse_measure(text: &str, d: &Diagram) -> Result<MeasureSpec> {
    let file: MeasureFile = serde_json::from_str(text)?;
    let spec = match file {
        MeasureFile::Invariant => MeasureSpec::Invariant(perron_data(d)?),
        MeasureFile::Stationary { pi, p } => MeasureSpec::stationary(pi, Transition::new(p)),
        MeasureFile::Sequence { pi, ps, tail } => {
            if ps.is_empty() {
                return Err(Error::InvalidMeasure("Ps is empty".into()));
            }
            let tail = match tail {
                TailFile::RepeatLast => TailRule::RepeatLast,
                TailFile::Stationary(q) => TailRule::StationaryTail(Transition::new(q)),
                TailFile::Periodic(t) if t == 0 || t > ps.len() => {
                    return Err(Error::InvalidMeasure(format!(
                        "periodic tail of {} needs 1 <= period <= {}",
                        t,
                        ps.len()
                    )))
                }
                TailFile::Periodic(t) => TailRule::Periodic(t),
            };
            MeasureSpec::MarkovSequence {
                pi,
                ps: ps.into_iter().map(Transition::new).collect(),
                tail,
            }
        }
    };
    validate_spec(d, &spec).map_err(|v| Error::InvalidMeasure(v.to_string()))?;
    Ok(spec)
}

pub fn load_measure(path: &Path, d: &Diagram) -> Result<MeasureSpec> {
    parse_measure(&read(path)?, d)
}

fn rows_json(p: &Transition) -> serde_json::Value {
    serde_json::to_value(p.rows()).expect("values serialize")
}

pub fn measure_to_json(spec: &MeasureSpec) -> serde_json::Value {
    use serde_json::json;
    match spec {
        MeasureSpec::Invariant(_) => json!({ "type": "invariant" }),
        MeasureSpec::StationaryMarkov { pi, p } => json!({
            "type": "stationary",
            "pi": pi,
            "P": rows_json(p),
        }),
        MeasureSpec::MarkovSequence { pi, ps, tail } => {
            let tail = match tail {
                TailRule::RepeatLast => json!("repeat-last"),
                TailRule::StationaryTail(q) => json!({ "stationary": rows_json(q) }),
                TailRule::Periodic(t) => json!({ "periodic": t }),
            };
            json!({
                "type": "sequence",
                "pi": pi,
                "Ps": ps.iter().map(rows_json).collect::<Vec<_>>(),
                "tail": tail,
            })
        }
    }
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct AlphaFile {
    pub map: BTreeMap<String, String>,
}

/// `{"map": {"e1": "e3", ...}}` keyed by source label, valued by target
/// label. Admissibility is not checked here.
pub fn parse_alpha(text: &str, src: &Diagram, tgt: &Diagram) -> Result<AdmissibleMap> {
    let file: AlphaFile = serde_json::from_str(text)?;
    let n = src.edge_count();
    if file.map.len() != n || tgt.edge_count() != n {
        return Err(Error::SizeMismatch(format!(
            "map has {} entries, |E| = {}, |E'| = {}",
            file.map.len(),
            n,
            tgt.edge_count()
        )));
    }
    let mut map = vec![usize::MAX; n];
    for (from, to) in &file.map {
        let e = src
            .edges
            .id(from)
            .ok_or_else(|| Error::InvalidInput(format!("unknown source edge {}", from)))?;
        let f = tgt
            .edges
            .id(to)
            .ok_or_else(|| Error::InvalidInput(format!("unknown target edge {}", to)))?;
        map[e] = f;
    }
    let alpha = AdmissibleMap { map };
    if !alpha.is_bijection() {
        return Err(Error::InvalidInput("map is not a bijection".into()));
    }
    Ok(alpha)
}

pub fn load_alpha(path: &Path, src: &Diagram, tgt: &Diagram) -> Result<AdmissibleMap> {
    parse_alpha(&read(path)?, src, tgt)
}

/// Labels in source edge order.
pub fn alpha_to_json(alpha: &AdmissibleMap, src: &Diagram, tgt: &Diagram) -> serde_json::Value {
    let map: serde_json::Map<String, serde_json::Value> = (0..src.edge_count())
        .map(|e| {
            (
                src.edges.label(e).to_string(),
                tgt.edges.label(alpha.apply(e)).into(),
            )
        })
        .collect();
    serde_json::json!({ "map": map })
}
