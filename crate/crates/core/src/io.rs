//! JSON schemas and the CSV flattening for everything the command-line
//! tools exchange: instances, models, colorings, sign vectors, gadget
//! labels, and solve reports. Serialization is double precision and
//! deterministic, so identical values produce identical bytes.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graphs::{Color, Coloring, GadgetLabels, PairGadget};
use crate::linalg::CMat;
use crate::quantum::{Povm, QuantumError, State};
use crate::reductions::{
    BipartiteInstance, BipartiteModel, DataInstance, QuantumModel, ReductionError, SignAssignment,
};
use crate::solver::{BipartiteSolveReport, SolveReport};

/// Validation tolerance applied when deserializing states and POVMs.
const LOAD_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("invalid payload: {detail}")]
    Invalid { detail: String },
    #[error(transparent)]
    Reduction(#[from] ReductionError),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
}

/// Complex matrix as nested rows of `[re, im]` pairs.
pub type MatrixJson = Vec<Vec<[f64; 2]>>;

pub fn matrix_to_json(m: &CMat<f64>) -> MatrixJson {
    (0..m.dim())
        .map(|i| (0..m.dim()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub fn matrix_from_json(rows: &MatrixJson) -> Result<CMat<f64>, IoError> {
    let d = rows.len();
    for row in rows {
        if row.len() != d {
            return Err(IoError::Invalid {
                detail: format!("matrix row has {} entries, expected {d}", row.len()),
            });
        }
    }
    Ok(CMat::from_fn(d, |i, j| {
        Complex64::new(rows[i][j][0], rows[i][j][1])
    }))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KnownTripleJson {
    pub x: usize,
    pub y: usize,
    pub z: usize,
    pub p: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DataInstanceJson {
    #[serde(rename = "X")]
    pub x: usize,
    #[serde(rename = "Y")]
    pub y: usize,
    #[serde(rename = "Z")]
    pub z: usize,
    pub known: Vec<KnownTripleJson>,
}

impl From<&DataInstance<f64>> for DataInstanceJson {
    fn from(inst: &DataInstance<f64>) -> Self {
        DataInstanceJson {
            x: inst.states(),
            y: inst.measurements(),
            z: inst.outcomes(),
            known: inst
                .known()
                .map(|((x, y, z), p)| KnownTripleJson { x, y, z, p })
                .collect(),
        }
    }
}

impl TryFrom<&DataInstanceJson> for DataInstance<f64> {
    type Error = ReductionError;
    fn try_from(json: &DataInstanceJson) -> Result<Self, ReductionError> {
        DataInstance::new(
            json.x,
            json.y,
            json.z,
            json.known.iter().map(|k| ((k.x, k.y, k.z), k.p)),
        )
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KnownQuadJson {
    pub y: usize,
    pub z: usize,
    pub yp: usize,
    pub zp: usize,
    pub p: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BipartiteInstanceJson {
    #[serde(rename = "Y")]
    pub y: usize,
    #[serde(rename = "Z")]
    pub z: usize,
    #[serde(rename = "Yp")]
    pub yp: usize,
    #[serde(rename = "Zp")]
    pub zp: usize,
    pub known: Vec<KnownQuadJson>,
}

impl From<&BipartiteInstance<f64>> for BipartiteInstanceJson {
    fn from(inst: &BipartiteInstance<f64>) -> Self {
        BipartiteInstanceJson {
            y: inst.measurements_a(),
            z: inst.outcomes_a(),
            yp: inst.measurements_b(),
            zp: inst.outcomes_b(),
            known: inst
                .known()
                .map(|((y, z, yp, zp), p)| KnownQuadJson { y, z, yp, zp, p })
                .collect(),
        }
    }
}

impl TryFrom<&BipartiteInstanceJson> for BipartiteInstance<f64> {
    type Error = ReductionError;
    fn try_from(json: &BipartiteInstanceJson) -> Result<Self, ReductionError> {
        BipartiteInstance::new(
            json.y,
            json.z,
            json.yp,
            json.zp,
            json.known.iter().map(|k| ((k.y, k.z, k.yp, k.zp), k.p)),
        )
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelJson {
    pub d: usize,
    pub states: Vec<MatrixJson>,
    pub measurements: Vec<Vec<MatrixJson>>,
}

impl From<&QuantumModel<f64>> for ModelJson {
    fn from(m: &QuantumModel<f64>) -> Self {
        ModelJson {
            d: m.d(),
            states: m.states().iter().map(|s| matrix_to_json(s.matrix())).collect(),
            measurements: m
                .measurements()
                .iter()
                .map(|p| p.elements().iter().map(matrix_to_json).collect())
                .collect(),
        }
    }
}

impl TryFrom<&ModelJson> for QuantumModel<f64> {
    type Error = IoError;
    fn try_from(json: &ModelJson) -> Result<Self, IoError> {
        let mut states = Vec::with_capacity(json.states.len());
        for rows in &json.states {
            states.push(State::with_tol(matrix_from_json(rows)?, LOAD_TOL)?);
        }
        let mut measurements = Vec::with_capacity(json.measurements.len());
        for povm in &json.measurements {
            let mut elements = Vec::with_capacity(povm.len());
            for rows in povm {
                elements.push(matrix_from_json(rows)?);
            }
            measurements.push(Povm::with_tol(elements, LOAD_TOL)?);
        }
        Ok(QuantumModel::new(json.d, states, measurements)?)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BipartiteModelJson {
    pub d: usize,
    pub state: MatrixJson,
    pub povms_a: Vec<Vec<MatrixJson>>,
    pub povms_b: Vec<Vec<MatrixJson>>,
}

impl From<&BipartiteModel<f64>> for BipartiteModelJson {
    fn from(m: &BipartiteModel<f64>) -> Self {
        let povms = |family: &[Povm<f64>]| {
            family
                .iter()
                .map(|p| p.elements().iter().map(matrix_to_json).collect())
                .collect()
        };
        BipartiteModelJson {
            d: m.d(),
            state: matrix_to_json(m.state().matrix()),
            povms_a: povms(m.povms_a()),
            povms_b: povms(m.povms_b()),
        }
    }
}

impl TryFrom<&BipartiteModelJson> for BipartiteModel<f64> {
    type Error = IoError;
    fn try_from(json: &BipartiteModelJson) -> Result<Self, IoError> {
        let state = State::with_tol(matrix_from_json(&json.state)?, LOAD_TOL)?;
        let load_family = |family: &Vec<Vec<MatrixJson>>| -> Result<Vec<Povm<f64>>, IoError> {
            let mut out = Vec::with_capacity(family.len());
            for povm in family {
                let mut elements = Vec::with_capacity(povm.len());
                for rows in povm {
                    elements.push(matrix_from_json(rows)?);
                }
                out.push(Povm::with_tol(elements, LOAD_TOL)?);
            }
            Ok(out)
        };
        Ok(BipartiteModel::new(
            json.d,
            state,
            load_family(&json.povms_a)?,
            load_family(&json.povms_b)?,
        )?)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ColoringJson {
    pub colors: Vec<String>,
}

impl From<&Coloring> for ColoringJson {
    fn from(c: &Coloring) -> Self {
        ColoringJson {
            colors: c.colors().iter().map(|c| c.as_str().to_string()).collect(),
        }
    }
}

impl TryFrom<&ColoringJson> for Coloring {
    type Error = IoError;
    fn try_from(json: &ColoringJson) -> Result<Self, IoError> {
        let mut assignment = Vec::with_capacity(json.colors.len());
        for s in &json.colors {
            assignment.push(Color::from_label(s).ok_or_else(|| IoError::Invalid {
                detail: format!("unknown color `{s}`"),
            })?);
        }
        Ok(Coloring::new(assignment))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SignsJson {
    pub signs: Vec<i8>,
}

impl From<&SignAssignment> for SignsJson {
    fn from(s: &SignAssignment) -> Self {
        SignsJson {
            signs: s.signs().to_vec(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairGadgetJson {
    pub i: usize,
    pub j: usize,
    pub a: usize,
    pub b: usize,
    pub c: usize,
    pub d: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GadgetLabelsJson {
    pub n: usize,
    pub pairs: Vec<PairGadgetJson>,
}

impl From<&GadgetLabels> for GadgetLabelsJson {
    fn from(labels: &GadgetLabels) -> Self {
        GadgetLabelsJson {
            n: labels.original_n,
            pairs: labels
                .pairs
                .iter()
                .map(|p| PairGadgetJson {
                    i: p.i,
                    j: p.j,
                    a: p.a,
                    b: p.b,
                    c: p.c,
                    d: p.d,
                })
                .collect(),
        }
    }
}

impl From<&GadgetLabelsJson> for GadgetLabels {
    fn from(json: &GadgetLabelsJson) -> Self {
        GadgetLabels {
            original_n: json.n,
            pairs: json
                .pairs
                .iter()
                .map(|p| PairGadget {
                    i: p.i,
                    j: p.j,
                    a: p.a,
                    b: p.b,
                    c: p.c,
                    d: p.d,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReportJson {
    pub d: usize,
    pub residual: f64,
    pub iterations: usize,
    pub seed: u64,
    pub wall_time_s: f64,
    pub restart_traces: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub model: Option<ModelJson>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub bipartite_model: Option<BipartiteModelJson>,
}

pub fn report_to_json(d: usize, report: &SolveReport<f64>) -> SolveReportJson {
    SolveReportJson {
        d,
        residual: report.residual,
        iterations: report.iterations,
        seed: report.seed,
        wall_time_s: report.wall_time_s,
        restart_traces: report.restart_traces.clone(),
        model: report.best_model.as_ref().map(ModelJson::from),
        bipartite_model: None,
    }
}

pub fn bipartite_report_to_json(d: usize, report: &BipartiteSolveReport<f64>) -> SolveReportJson {
    SolveReportJson {
        d,
        residual: report.residual,
        iterations: report.iterations,
        seed: report.seed,
        wall_time_s: report.wall_time_s,
        restart_traces: report.restart_traces.clone(),
        model: None,
        bipartite_model: report.best_model.as_ref().map(BipartiteModelJson::from),
    }
}

/// Pretty JSON with a trailing newline; deterministic for identical values.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String, IoError> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn parse_instance(text: &str) -> Result<DataInstance<f64>, IoError> {
    let json: DataInstanceJson = serde_json::from_str(text)?;
    Ok(DataInstance::try_from(&json)?)
}

pub fn parse_bipartite_instance(text: &str) -> Result<BipartiteInstance<f64>, IoError> {
    let json: BipartiteInstanceJson = serde_json::from_str(text)?;
    Ok(BipartiteInstance::try_from(&json)?)
}

/// An instance file of either arity, distinguished by its fields.
pub enum AnyInstance {
    Single(DataInstance<f64>),
    Bipartite(BipartiteInstance<f64>),
}

pub fn parse_any_instance(text: &str) -> Result<AnyInstance, IoError> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    if value.get("X").is_some() {
        let json: DataInstanceJson = serde_json::from_value(value)?;
        Ok(AnyInstance::Single(DataInstance::try_from(&json)?))
    } else if value.get("Yp").is_some() {
        let json: BipartiteInstanceJson = serde_json::from_value(value)?;
        Ok(AnyInstance::Bipartite(BipartiteInstance::try_from(&json)?))
    } else {
        Err(IoError::Invalid {
            detail: "instance JSON carries neither an X field nor a Yp field".into(),
        })
    }
}

/// A model file of either arity, distinguished by its fields.
pub enum AnyModel {
    Single(QuantumModel<f64>),
    Bipartite(BipartiteModel<f64>),
}

pub fn parse_any_model(text: &str) -> Result<AnyModel, IoError> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    if value.get("states").is_some() {
        let json: ModelJson = serde_json::from_value(value)?;
        Ok(AnyModel::Single(QuantumModel::try_from(&json)?))
    } else if value.get("state").is_some() {
        let json: BipartiteModelJson = serde_json::from_value(value)?;
        Ok(AnyModel::Bipartite(BipartiteModel::try_from(&json)?))
    } else {
        Err(IoError::Invalid {
            detail: "model JSON carries neither states nor state".into(),
        })
    }
}

fn csv_number(v: f64) -> String {
    format!("{v}")
}

/// Flattened matrix export: one row per state, columns grouped by
/// measurement then outcome, unknown cells rendered as `*`.
pub fn instance_to_csv(inst: &DataInstance<f64>) -> String {
    let mut out = String::new();
    for x in 1..=inst.states() {
        let mut cells = Vec::with_capacity(inst.measurements() * inst.outcomes());
        for y in 1..=inst.measurements() {
            for z in 1..=inst.outcomes() {
                cells.push(match inst.get(x, y, z) {
                    Some(p) => csv_number(p),
                    None => "*".to_string(),
                });
            }
        }
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Bipartite flattening: rows are `(y, z)` pairs, columns `(y', z')` pairs,
/// both in lexicographic order.
pub fn bipartite_instance_to_csv(inst: &BipartiteInstance<f64>) -> String {
    let mut out = String::new();
    for y in 1..=inst.measurements_a() {
        for z in 1..=inst.outcomes_a() {
            let mut cells = Vec::new();
            for yp in 1..=inst.measurements_b() {
                for zp in 1..=inst.outcomes_b() {
                    cells.push(match inst.get(y, z, yp, zp) {
                        Some(p) => csv_number(p),
                        None => "*".to_string(),
                    });
                }
            }
            out.push_str(&cells.join(","));
            out.push('\n');
        }
    }
    out
}
