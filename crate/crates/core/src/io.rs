//! File formats. Vertex labels in files are 1-based.
//!
//! * graph: `{"n": 4, "edges": [[1, 2], [2, 3], [3, 4]]}`, or a whitespace
//!   separated edge list `1 2  2 3  3 4`, optionally preceded by `n` (an odd
//!   token count means the first token is `n`)
//! * spectrum: `{"lambda": [...], "mu": [...]}` or the positive parts
//!   `{"lambda_pos": [...], "mu_pos": [...]}`
//! * matrix: `{"n": 4, "matrix": [[...], ...], "edges": [[i, j], ...]}`
//!   with an optional `"report"`
//! * chords: `[[1, 4], ...]`; `[i, j]` prescribes the entry `a_ij`

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::construct::{ConstructionReport, TraceNode};
use crate::error::Error;
use crate::graph::{Graph, NebCertificate, Tree};
use crate::matrix::SkewMatrix;
use crate::spectrum::{SpectrumError, SpectrumSpec};

/// Entries of a loaded matrix must be skew to this absolute tolerance.
pub const SKEW_INPUT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum InputError {
    #[error("malformed input: {0}")]
    Syntax(String),
    #[error(transparent)]
    Domain(#[from] Error),
}

impl From<serde_json::Error> for InputError {
    fn from(e: serde_json::Error) -> Self {
        InputError::Syntax(e.to_string())
    }
}

impl From<SpectrumError> for InputError {
    fn from(e: SpectrumError) -> Self {
        InputError::Domain(Error::Spectrum(e))
    }
}

type InputResult<T> = Result<T, InputError>;

fn to_zero_based(pairs: &[[usize; 2]]) -> InputResult<Vec<(usize, usize)>> {
    pairs
        .iter()
        .map(|&[a, b]| {
            if a == 0 || b == 0 {
                Err(InputError::Syntax("vertex labels start at 1".into()))
            } else {
                Ok((a - 1, b - 1))
            }
        })
        .collect()
}

fn to_one_based(pairs: &[(usize, usize)]) -> Vec<[usize; 2]> {
    pairs.iter().map(|&(a, b)| [a + 1, b + 1]).collect()
}

#[derive(Serialize, Deserialize)]
struct GraphFile {
    n: usize,
    edges: Vec<[usize; 2]>,
}

pub fn parse_graph(text: &str) -> InputResult<Graph> {
    let trimmed = text.trim_start();
    if trimmed.starts_with('{') {
        let file: GraphFile = serde_json::from_str(text)?;
        return Ok(Graph::new(file.n, &to_zero_based(&file.edges)?)?);
    }
    let tokens: Vec<usize> = text
        .split_whitespace()
        .map(|t| {
            t.parse()
                .map_err(|_| InputError::Syntax(format!("expected a vertex label, found {t:?}")))
        })
        .collect::<InputResult<_>>()?;
    let (n, rest) = if tokens.len() % 2 == 1 {
        (Some(tokens[0]), &tokens[1..])
    } else {
        (None, &tokens[..])
    };
    let pairs: Vec<[usize; 2]> = rest.chunks(2).map(|c| [c[0], c[1]]).collect();
    let n = n.unwrap_or_else(|| rest.iter().copied().max().unwrap_or(1));
    Ok(Graph::new(n, &to_zero_based(&pairs)?)?)
}

pub fn parse_tree(text: &str) -> InputResult<Tree> {
    Ok(Tree::from_graph(parse_graph(text)?)?)
}

pub fn graph_json(g: &Graph) -> Value {
    json!({ "n": g.n(), "edges": to_one_based(g.edges()) })
}

#[derive(Deserialize)]
#[serde(untagged)]
enum SpectrumFile {
    Full {
        lambda: Vec<f64>,
        mu: Vec<f64>,
    },
    Positive {
        lambda_pos: Vec<f64>,
        mu_pos: Vec<f64>,
    },
}

/// Reads a spectrum; validation is left to the caller.
pub fn parse_spectrum(text: &str) -> InputResult<SpectrumSpec> {
    match serde_json::from_str::<SpectrumFile>(text) {
        Ok(SpectrumFile::Full { lambda, mu }) => Ok(SpectrumSpec::new(lambda, mu)),
        Ok(SpectrumFile::Positive { lambda_pos, mu_pos }) => {
            Ok(SpectrumSpec::from_positive(&lambda_pos, &mu_pos)?)
        }
        Err(_) => Err(InputError::Syntax(
            "spectrum needs \"lambda\" and \"mu\", or \"lambda_pos\" and \"mu_pos\"".into(),
        )),
    }
}

/// Chords as oriented 0-based pairs.
pub fn parse_chords(text: &str) -> InputResult<Vec<(usize, usize)>> {
    let pairs: Vec<[usize; 2]> = serde_json::from_str(text)?;
    to_zero_based(&pairs)
}

#[derive(Serialize, Deserialize)]
struct MatrixFile {
    n: usize,
    matrix: Vec<Vec<f64>>,
    edges: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    report: Option<Value>,
}

pub fn matrix_json(a: &SkewMatrix, report: Option<Value>) -> Value {
    serde_json::to_value(MatrixFile {
        n: a.n(),
        matrix: a.rows(),
        edges: to_one_based(a.graph().edges()),
        report,
    })
    .expect("matrix file serializes")
}

/// Reads a matrix file and checks that `edges` is its nonzero pattern.
pub fn parse_matrix(text: &str) -> InputResult<(SkewMatrix, Option<Value>)> {
    let file: MatrixFile = serde_json::from_str(text)?;
    if file.matrix.len() != file.n {
        return Err(Error::SizeMismatch(format!("n = {} but the matrix has {} rows", file.n, file.matrix.len())).into());
    }
    let a = SkewMatrix::from_dense_rows(&file.matrix, SKEW_INPUT_TOLERANCE)?;
    let g = Graph::new(file.n, &to_zero_based(&file.edges)?)?;
    a.check_pattern(&g)?;
    Ok((a, file.report))
}

pub fn matrix_csv(a: &SkewMatrix) -> String {
    let mut out = String::new();
    for row in a.rows() {
        let cells: Vec<String> = row.iter().map(|x| format!("{x}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn shift_trace(node: &TraceNode) -> TraceNode {
    let mut out = node.clone();
    out.vertex += 1;
    out.children = node
        .children
        .iter()
        .map(|c| {
            let mut c = c.clone();
            c.neighbor += 1;
            c.node = shift_trace(&c.node);
            c
        })
        .collect();
    out
}

/// The construction report with 1-based labels.
pub fn report_json(report: &ConstructionReport) -> Value {
    json!({
        "vertex": report.vertex + 1,
        "trace": shift_trace(&report.trace),
        "verification": report.verification,
    })
}

pub fn certificate_json(cert: &NebCertificate) -> Value {
    let witness = cert.witness.as_ref().map(|w| {
        json!({
            "chain": w.chain.iter().map(|x| x + 1).collect::<Vec<_>>(),
            "failing_branch": w.failing_branch().map(|x| x + 1),
            "failing_vertex": w.failing_vertex() + 1,
            "subtree_order": w.order,
            "odd_components": w.odd_components,
            "expected_odd_components": w.expected_odd,
        })
    });
    json!({ "vertex": cert.vertex + 1, "neb": cert.verdict, "witness": witness })
}

fn spectrum_detail(e: &SpectrumError) -> Value {
    match e {
        SpectrumError::Length { n, expected, got } => json!({ "check": "length", "n": n, "expected": expected, "got": got }),
        SpectrumError::Empty => json!({ "check": "empty" }),
        SpectrumError::NonFinite => json!({ "check": "finite" }),
        SpectrumError::Interlacing { left, left_value, right, right_value } => json!({
            "check": "interlacing", "left": left, "left_value": left_value,
            "right": right, "right_value": right_value,
        }),
        SpectrumError::Duplicate { left, left_value, right, right_value, tolerance } => json!({
            "check": "distinct", "left": left, "left_value": left_value,
            "right": right, "right_value": right_value, "tolerance": tolerance,
        }),
        SpectrumError::Symmetry { name, value, mirror, mirror_value } => json!({
            "check": "symmetry", "name": name, "value": value,
            "mirror": mirror, "mirror_value": mirror_value,
        }),
        SpectrumError::PositiveParts { lambda_pos, mu_pos } => json!({
            "check": "positive_parts", "lambda_pos": lambda_pos, "mu_pos": mu_pos,
        }),
        SpectrumError::Plan { n, sizes, reason } => json!({
            "check": "branch_plan", "n": n, "sizes": sizes, "reason": reason,
        }),
    }
}

/// Machine-readable description of a failure.
pub fn diagnostic(e: &Error) -> Value {
    let kind = match e {
        Error::InvalidVertex { .. } => "invalid_vertex",
        Error::InvalidGraph(_) => "invalid_graph",
        Error::NotNeb(_) => "not_neb",
        Error::Spectrum(_) => "invalid_spectrum",
        Error::SizeMismatch(_) => "size_mismatch",
        Error::GraphMismatch(_) => "graph_mismatch",
        Error::Numerical(_) => "numerical",
        Error::NoConvergence { .. } => "no_convergence",
        Error::Singular(_) => "singular",
        Error::NewtonDivergence { .. } => "newton_divergence",
        Error::HomotopyStalled { .. } => "homotopy_stalled",
    };
    let mut out = json!({ "error": kind, "message": e.to_string() });
    let detail = match e {
        Error::NotNeb(cert) => Some(certificate_json(cert)),
        Error::Spectrum(s) => Some(spectrum_detail(s)),
        Error::NewtonDivergence { iterations, residual } => {
            Some(json!({ "iterations": iterations, "residual": residual }))
        }
        Error::HomotopyStalled { parameter, .. } => Some(json!({ "parameter": parameter })),
        _ => None,
    };
    if let Some(d) = detail {
        out["detail"] = d;
    }
    out
}
