//! JSON file formats for matrices, states, contexts and reports.
//!
//! A matrix is `{"dim": n, "entries": [[[re, im], …], …]}` in row-major
//! order. States wrap one as `{"dim": n, "matrix": …}` and contexts as
//! `{"dim": n, "projectors": [...]}`. Everything is validated on load.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, C64};
use crate::quantum::{Context, DensityMatrix};
use crate::reconstruct::ReconstructionReport;

#[derive(Serialize, Deserialize)]
pub(crate) struct MatrixRepr {
    dim: usize,
    entries: Vec<Vec<[f64; 2]>>,
}

impl From<ComplexMatrix> for MatrixRepr {
    fn from(m: ComplexMatrix) -> Self {
        Self {
            dim: m.dim(),
            entries: m
                .rows()
                .into_iter()
                .map(|r| r.into_iter().map(|z| [z.re, z.im]).collect())
                .collect(),
        }
    }
}

impl TryFrom<MatrixRepr> for ComplexMatrix {
    type Error = String;

    fn try_from(repr: MatrixRepr) -> std::result::Result<Self, String> {
        if repr.entries.len() != repr.dim || repr.entries.iter().any(|r| r.len() != repr.dim) {
            return Err(format!("entries are not a {0}x{0} array", repr.dim));
        }
        let rows: Vec<Vec<C64>> = repr
            .entries
            .iter()
            .map(|r| r.iter().map(|[re, im]| C64::new(*re, *im)).collect())
            .collect();
        ComplexMatrix::from_rows(&rows).map_err(|e| e.to_string())
    }
}

#[derive(Serialize, Deserialize)]
struct StateFile {
    dim: usize,
    matrix: ComplexMatrix,
}

#[derive(Serialize, Deserialize)]
struct ContextFile {
    dim: usize,
    projectors: Vec<ComplexMatrix>,
}

fn check_dim(declared: usize, actual: usize) -> Result<()> {
    if declared != actual {
        return Err(Error::Format(format!(
            "declared dim {declared} but matrix is {actual}x{actual}"
        )));
    }
    Ok(())
}

pub fn state_from_json(text: &str) -> Result<DensityMatrix> {
    let file: StateFile = serde_json::from_str(text)?;
    check_dim(file.dim, file.matrix.dim())?;
    DensityMatrix::new(file.matrix)
}

pub fn state_to_json(rho: &DensityMatrix) -> String {
    let file = StateFile {
        dim: rho.dim(),
        matrix: rho.matrix().clone(),
    };
    serde_json::to_string_pretty(&file).expect("state serializes")
}

pub fn context_from_json(text: &str) -> Result<Context> {
    let file: ContextFile = serde_json::from_str(text)?;
    for p in &file.projectors {
        check_dim(file.dim, p.dim())?;
    }
    Context::new(file.projectors)
}

pub fn context_to_json(c: &Context) -> String {
    let file = ContextFile {
        dim: c.dim(),
        projectors: c.projectors().iter().map(|p| p.matrix().clone()).collect(),
    };
    serde_json::to_string_pretty(&file).expect("context serializes")
}

pub fn read_state(path: impl AsRef<Path>) -> Result<DensityMatrix> {
    state_from_json(&fs::read_to_string(path)?)
}

pub fn write_state(path: impl AsRef<Path>, rho: &DensityMatrix) -> Result<()> {
    write_text(path, &state_to_json(rho))
}

pub fn read_context(path: impl AsRef<Path>) -> Result<Context> {
    context_from_json(&fs::read_to_string(path)?)
}

pub fn write_context(path: impl AsRef<Path>, c: &Context) -> Result<()> {
    write_text(path, &context_to_json(c))
}

/// `{"branch", "queries", "contexts_used", "state" | "candidates", "residual"?}`
pub fn report_json(report: &ReconstructionReport) -> Value {
    let mut map = serde_json::Map::new();
    map.insert("branch".into(), report.branch.as_str().into());
    map.insert("queries".into(), report.query_count.into());
    map.insert("contexts_used".into(), report.contexts_used.into());
    let matrix =
        |rho: &DensityMatrix| serde_json::to_value(rho.matrix()).expect("matrix serializes");
    if report.candidates.len() == 1 {
        map.insert("state".into(), matrix(&report.candidates[0]));
    } else {
        map.insert(
            "candidates".into(),
            Value::Array(report.candidates.iter().map(matrix).collect()),
        );
    }
    if let Some(r) = report.residual {
        map.insert("residual".into(), r.into());
    }
    Value::Object(map)
}

pub fn write_json(path: impl AsRef<Path>, value: &Value) -> Result<()> {
    write_text(path, &serde_json::to_string_pretty(value)?)
}

fn write_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    let mut text = text.to_owned();
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}
