//! JSON system and operator files (`version: "1"`).
//!
//! A system file lists nodes with their mass `mu`, weight `v`, optional second
//! weight `s`, subspace basis (a list of basis vectors) and local operator (a
//! list of rows in subspace coordinates). Named operators may ride along.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Operator, Subspace};
use crate::measure::{MeasureNodes, Node};
use crate::system::{FusionTerm, GFusionSystem};
use crate::tolerances::REPAIR_TOL;

pub const FORMAT_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeRecord {
    pub id: String,
    pub mu: f64,
    pub v: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    pub basis: Vec<Vec<f64>>,
    pub local: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    pub version: String,
    pub ambient_dim: usize,
    pub nodes: Vec<NodeRecord>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub operators: BTreeMap<String, Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorFile {
    pub version: String,
    pub matrix: Vec<Vec<f64>>,
}

fn invalid(field: impl std::fmt::Display, message: impl std::fmt::Display) -> Error {
    Error::InvalidSystem(format!("{field}: {message}"))
}

/// Matrix from a list of rows, all of length `cols`.
pub fn matrix_from_rows(rows: &[Vec<f64>], cols: usize, field: &str) -> Result<DMatrix<f64>> {
    for (r, row) in rows.iter().enumerate() {
        if row.len() != cols {
            return Err(invalid(field, format!("row {r} has {} entries, expected {cols}", row.len())));
        }
        if let Some(c) = row.iter().position(|x| !x.is_finite()) {
            return Err(invalid(field, format!("entry ({r}, {c}) is not finite")));
        }
    }
    Ok(DMatrix::from_fn(rows.len(), cols, |r, c| rows[r][c]))
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Square matrix given as rows; the width is taken from the row count.
pub fn square_from_rows(rows: &[Vec<f64>], field: &str) -> Result<DMatrix<f64>> {
    matrix_from_rows(rows, rows.len(), field)
}

impl SystemFile {
    pub fn from_system(sys: &GFusionSystem) -> Self {
        let nodes = sys
            .nodes()
            .nodes()
            .iter()
            .zip(sys.terms())
            .map(|(node, t)| NodeRecord {
                id: node.id.clone(),
                mu: node.mu,
                v: t.weight(),
                s: None,
                basis: t
                    .subspace()
                    .basis()
                    .column_iter()
                    .map(|c| c.iter().copied().collect())
                    .collect(),
                local: rows_of(t.local().matrix()),
            })
            .collect();
        SystemFile {
            version: FORMAT_VERSION.into(),
            ambient_dim: sys.ambient_dim(),
            nodes,
            operators: BTreeMap::new(),
        }
    }

    pub fn with_operator(mut self, name: impl Into<String>, m: &DMatrix<f64>) -> Self {
        self.operators.insert(name.into(), rows_of(m));
        self
    }

    fn check_version(&self) -> Result<()> {
        if self.version != FORMAT_VERSION {
            return Err(invalid("version", format!("unsupported version {:?}", self.version)));
        }
        Ok(())
    }

    fn build(&self, weight: impl Fn(&NodeRecord) -> Result<f64>) -> Result<GFusionSystem> {
        self.check_version()?;
        let n = self.ambient_dim;
        if n == 0 {
            return Err(invalid("ambient_dim", "must be positive"));
        }
        let nodes = self
            .nodes
            .iter()
            .map(|r| {
                if !(r.mu.is_finite() && r.mu > 0.0) {
                    return Err(invalid(format!("node {}", r.id), format!("nonpositive mass mu = {}", r.mu)));
                }
                Ok(Node::new(r.id.clone(), r.mu))
            })
            .collect::<Result<Vec<_>>>()?;
        let nodes = MeasureNodes::new(nodes)?;
        let terms = self
            .nodes
            .iter()
            .map(|r| {
                let ctx = |field: &str| format!("node {} {field}", r.id);
                let vectors = matrix_from_rows(&r.basis, n, &ctx("basis"))?;
                let basis = vectors.transpose();
                let subspace = Subspace::repaired(basis, REPAIR_TOL).map_err(|e| invalid(ctx("basis"), e))?;
                let local = matrix_from_rows(&r.local, subspace.dim(), &ctx("local"))?;
                let w = weight(r)?;
                FusionTerm::new(subspace, Operator::new(local)?, w).map_err(|e| invalid(ctx("term"), e))
            })
            .collect::<Result<Vec<_>>>()?;
        GFusionSystem::new(n, nodes, terms)
    }

    /// The system with weights `v`.
    pub fn to_system(&self) -> Result<GFusionSystem> {
        self.build(|r| Ok(r.v))
    }

    /// The same geometry with the second weights `s`, when every node has one.
    pub fn to_second_system(&self) -> Result<Option<GFusionSystem>> {
        if self.nodes.is_empty() || self.nodes.iter().any(|r| r.s.is_none()) {
            return Ok(None);
        }
        self.build(|r| Ok(r.s.expect("checked above"))).map(Some)
    }

    /// Named `n × n` operator, if present.
    pub fn operator(&self, name: &str) -> Result<Option<DMatrix<f64>>> {
        match self.operators.get(name) {
            None => Ok(None),
            Some(rows) => {
                if rows.len() != self.ambient_dim {
                    return Err(invalid(
                        format!("operator {name}"),
                        format!("has {} rows, expected {}", rows.len(), self.ambient_dim),
                    ));
                }
                matrix_from_rows(rows, self.ambient_dim, &format!("operator {name}")).map(Some)
            }
        }
    }
}

impl OperatorFile {
    pub fn new(m: &DMatrix<f64>) -> Self {
        OperatorFile {
            version: FORMAT_VERSION.into(),
            matrix: rows_of(m),
        }
    }

    pub fn to_matrix(&self) -> Result<DMatrix<f64>> {
        if self.version != FORMAT_VERSION {
            return Err(invalid("version", format!("unsupported version {:?}", self.version)));
        }
        let cols = self.matrix.first().map_or(0, Vec::len);
        matrix_from_rows(&self.matrix, cols, "matrix")
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Load {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn parse<T: for<'de> Deserialize<'de>>(path: &Path, text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Load {
        path: path.display().to_string(),
        message: format!("line {} column {}: {e}", e.line(), e.column()),
    })
}

fn in_file<T>(path: &Path, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Load { .. } => e,
        other => Error::Load {
            path: path.display().to_string(),
            message: other.to_string(),
        },
    })
}

pub fn load_system_file(path: impl AsRef<Path>) -> Result<SystemFile> {
    let path = path.as_ref();
    let file: SystemFile = parse(path, &read(path)?)?;
    in_file(path, file.check_version())?;
    Ok(file)
}

pub fn load_system(path: impl AsRef<Path>) -> Result<GFusionSystem> {
    let path = path.as_ref();
    in_file(path, load_system_file(path)?.to_system())
}

pub fn load_operator(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    let path = path.as_ref();
    let file: OperatorFile = parse(path, &read(path)?)?;
    in_file(path, file.to_matrix())
}

/// Pretty JSON with shortest round-trip float formatting, newline terminated.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Load {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

pub fn save_system_file(file: &SystemFile, path: impl AsRef<Path>) -> Result<()> {
    write(path.as_ref(), &to_json(file))
}

pub fn save_system(sys: &GFusionSystem, path: impl AsRef<Path>) -> Result<()> {
    save_system_file(&SystemFile::from_system(sys), path)
}

pub fn save_operator(m: &DMatrix<f64>, path: impl AsRef<Path>) -> Result<()> {
    write(path.as_ref(), &to_json(&OperatorFile::new(m)))
}
