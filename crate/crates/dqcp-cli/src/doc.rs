//! Problem documents: a flat map of named expression nodes with references,
//! parsed from JSON into dqcp expression trees.

use dqcp::atom::AtomKind;
use dqcp::expr::Expr;
use dqcp::problem::{Constraint, Problem, RelOp, Sense};
use dqcp::shape::Shape;
use dqcp::sign::Sign;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;

pub const PROBLEM_VERSION: &str = "dqcp-problem/1";

#[derive(Debug)]
pub enum ParseError {
    /// Malformed JSON, with serde's line/column information.
    Syntax(serde_json::Error),
    /// Structurally valid JSON that does not describe a valid problem.
    Document(String),
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseError::Syntax(e) => write!(f, "syntax error at line {}, column {}: {e}", e.line(), e.column()),
            ParseError::Document(msg) => write!(f, "{msg}"),
        }
    }
}

impl std::error::Error for ParseError {}

fn doc_err<T>(msg: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError::Document(msg.into()))
}

/// Shape in a document: "scalar", [n], or [rows, cols].
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum ShapeSpec {
    Named(String),
    Dims(Vec<usize>),
}

impl ShapeSpec {
    pub fn to_shape(&self, symmetric: bool) -> Result<Shape, ParseError> {
        match self {
            ShapeSpec::Named(s) if s == "scalar" => Ok(Shape::Scalar),
            ShapeSpec::Named(s) => doc_err(format!("unknown shape `{s}` (use \"scalar\", [n], or [rows, cols])")),
            ShapeSpec::Dims(d) => match d.as_slice() {
                [n] => Ok(Shape::Vector(*n)),
                [r, c] => Ok(Shape::Matrix {
                    rows: *r,
                    cols: *c,
                    symmetric,
                }),
                _ => doc_err("shape arrays must have one or two dimensions"),
            },
        }
    }

    pub fn from_shape(shape: &Shape) -> (ShapeSpec, bool) {
        match *shape {
            Shape::Scalar => (ShapeSpec::Named("scalar".into()), false),
            Shape::Vector(n) => (ShapeSpec::Dims(vec![n]), false),
            Shape::Matrix {
                rows,
                cols,
                symmetric,
            } => (ShapeSpec::Dims(vec![rows, cols]), symmetric),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VariableDecl {
    pub name: String,
    pub shape: ShapeSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sign: Option<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub symmetric: bool,
}

/// Constant values: a scalar, a vector, or a matrix of rows.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum ValueSpec {
    Scalar(f64),
    Vector(Vec<f64>),
    Matrix(Vec<Vec<f64>>),
}

/// Matrix index pairs or flat indices.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum IndexSpec {
    Flat(Vec<usize>),
    Pairs(Vec<[usize; 2]>),
}

#[derive(Clone, Debug, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ExprNode {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<ValueSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atom: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub args: Option<Vec<String>>,
    /// scale parameter
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub by: Option<f64>,
    /// pow_odd parameter
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power: Option<u32>,
    /// index positions
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub at: Option<IndexSpec>,
    /// promote target shape (also used to shape matrix-valued constants)
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<ShapeSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ObjectiveSpec {
    pub sense: String,
    pub root: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConstraintSpec {
    pub lhs: String,
    pub op: String,
    pub rhs: String,
}

#[derive(Clone, Debug, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SolveOptionsSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_probes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub low: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub high: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_feas: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_gap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_strict: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemDocument {
    pub version: String,
    pub variables: Vec<VariableDecl>,
    #[serde(default)]
    pub expressions: serde_json::Map<String, serde_json::Value>,
    pub objective: ObjectiveSpec,
    #[serde(default)]
    pub constraints: Vec<ConstraintSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub options: Option<SolveOptionsSpec>,
}

/// A parsed problem together with its document and name table.
pub struct ParsedProblem {
    pub document: ProblemDocument,
    pub problem: Problem,
    pub variables: HashMap<String, Expr>,
}

pub fn parse_str(text: &str) -> Result<ParsedProblem, ParseError> {
    let document: ProblemDocument = serde_json::from_str(text).map_err(ParseError::Syntax)?;
    build(document)
}

pub fn print_document(doc: &ProblemDocument) -> String {
    serde_json::to_string_pretty(doc).expect("documents serialize")
}

fn parse_sign(s: &Option<String>) -> Result<Sign, ParseError> {
    match s.as_deref() {
        None | Some("unknown") => Ok(Sign::Unknown),
        Some("positive") => Ok(Sign::Positive),
        Some("nonnegative") => Ok(Sign::Nonnegative),
        Some("negative") => Ok(Sign::Negative),
        Some("nonpositive") => Ok(Sign::Nonpositive),
        Some("zero") => Ok(Sign::Zero),
        Some(other) => doc_err(format!("unknown sign `{other}`")),
    }
}

fn parse_relop(s: &str) -> Result<RelOp, ParseError> {
    match s {
        "<=" => Ok(RelOp::Le),
        ">=" => Ok(RelOp::Ge),
        "==" | "=" => Ok(RelOp::Eq),
        other => doc_err(format!("unknown relational operator `{other}`")),
    }
}

struct Builder {
    nodes: HashMap<String, ExprNode>,
    built: HashMap<String, Expr>,
    in_progress: Vec<String>,
}

impl Builder {
    fn resolve(&mut self, name: &str) -> Result<Expr, ParseError> {
        if let Some(e) = self.built.get(name) {
            return Ok(e.clone());
        }
        if self.in_progress.iter().any(|n| n == name) {
            return doc_err(format!(
                "expression references form a cycle through `{name}`"
            ));
        }
        let node = match self.nodes.get(name) {
            Some(n) => n.clone(),
            None => {
                return doc_err(format!("dangling reference `{name}`"));
            }
        };
        self.in_progress.push(name.to_string());
        let expr = self.build_node(name, &node)?;
        self.in_progress.pop();
        self.built.insert(name.to_string(), expr.clone());
        Ok(expr)
    }

    fn build_node(&mut self, name: &str, node: &ExprNode) -> Result<Expr, ParseError> {
        match (&node.value, &node.atom) {
            (Some(_), Some(_)) => {
                doc_err(format!("`{name}` has both a value and an atom"))
            }
            (Some(v), None) => build_constant(name, v, &node.shape),
            (None, Some(atom)) => {
                let arg_names = node.args.clone().unwrap_or_default();
                let mut args = Vec::with_capacity(arg_names.len());
                for a in &arg_names {
                    args.push(self.resolve(a)?);
                }
                let kind = atom_kind(name, atom, node, &args)?;
                Expr::apply(kind, args)
                    .map_err(|e| ParseError::Document(format!("in `{name}`: {e}")))
            }
            (None, None) => doc_err(format!("`{name}` needs either a value or an atom")),
        }
    }
}

fn build_constant(
    name: &str,
    v: &ValueSpec,
    shape: &Option<ShapeSpec>,
) -> Result<Expr, ParseError> {
    let result = match v {
        ValueSpec::Scalar(x) => Expr::constant_scalar(*x),
        ValueSpec::Vector(xs) => match shape {
            None => Expr::constant_vector(xs.clone()),
            Some(spec) => {
                let shape = spec.to_shape(false)?;
                Expr::constant(xs.clone(), shape)
            }
        },
        ValueSpec::Matrix(rows) => {
            let r = rows.len();
            let c = rows.first().map(|row| row.len()).unwrap_or(0);
            if rows.iter().any(|row| row.len() != c) {
                return doc_err(format!("`{name}`: matrix rows have unequal lengths"));
            }
            let flat: Vec<f64> = rows.iter().flatten().copied().collect();
            Expr::constant(flat, Shape::matrix(r, c))
        }
    };
    result.map_err(|e| ParseError::Document(format!("in `{name}`: {e}")))
}

fn atom_kind(
    name: &str,
    atom: &str,
    node: &ExprNode,
    args: &[Expr],
) -> Result<AtomKind, ParseError> {
    let kind = match atom {
        "add" => AtomKind::Add,
        "neg" => AtomKind::Neg,
        "scale" => {
            let by = node
                .by
                .ok_or_else(|| ParseError::Document(format!("`{name}`: scale needs `by`")))?;
            AtomKind::Scale(by)
        }
        "sum" => AtomKind::Sum,
        "index" => {
            let at = node
                .at
                .clone()
                .ok_or_else(|| ParseError::Document(format!("`{name}`: index needs `at`")))?;
            let flat = match at {
                IndexSpec::Flat(v) => v,
                IndexSpec::Pairs(pairs) => {
                    let cols = match args.first().map(|a| a.shape()) {
                        Some(Shape::Matrix { cols, .. }) => cols,
                        _ => {
                            return doc_err(format!(
                                "`{name}`: index pairs require a matrix argument"
                            ))
                        }
                    };
                    pairs.iter().map(|[i, j]| i * cols + j).collect()
                }
            };
            AtomKind::Index(flat)
        }
        "promote" => {
            let spec = node
                .shape
                .clone()
                .ok_or_else(|| ParseError::Document(format!("`{name}`: promote needs `shape`")))?;
            AtomKind::Promote(spec.to_shape(false)?)
        }
        "vstack" => AtomKind::VStack,
        "matvec" => AtomKind::MatVec,
        "abs" => AtomKind::Abs,
        "square" => AtomKind::Square,
        "sum_squares" => AtomKind::SumSquares,
        "norm2" => AtomKind::Norm2,
        "exp" => AtomKind::Exp,
        "maximum" => AtomKind::Maximum,
        "max" => AtomKind::MaxEntries,
        "sqrt" => AtomKind::Sqrt,
        "log" => AtomKind::Log,
        "minimum" => AtomKind::Minimum,
        "min" => AtomKind::MinEntries,
        "ceil" => AtomKind::Ceil,
        "floor" => AtomKind::Floor,
        "sign" => AtomKind::SignFn,
        "pow_odd" => {
            let p = node
                .power
                .ok_or_else(|| ParseError::Document(format!("`{name}`: pow_odd needs `power`")))?;
            AtomKind::PowOdd(p)
        }
        "mul" => AtomKind::Mul,
        "ratio" | "div" => AtomKind::Ratio,
        "dist_ratio" => AtomKind::DistRatio,
        "gen_lambda_max" => AtomKind::GenLambdaMax,
        "length" => AtomKind::Length,
        "rectangle" => AtomKind::Rectangle,
        "card" => AtomKind::Card,
        "rank" => AtomKind::Rank,
        other => {
            return doc_err(format!("unknown atom `{other}` in `{name}`"));
        }
    };
    Ok(kind)
}

fn build(document: ProblemDocument) -> Result<ParsedProblem, ParseError> {
    if document.version != PROBLEM_VERSION {
        return doc_err(format!(
            "unsupported document version `{}` (expected `{PROBLEM_VERSION}`)",
            document.version
        ));
    }
    let mut builder = Builder {
        nodes: HashMap::new(),
        built: HashMap::new(),
        in_progress: Vec::new(),
    };
    let mut variables = HashMap::new();
    for decl in &document.variables {
        let shape = decl.shape.to_shape(decl.symmetric)?;
        let sign = parse_sign(&decl.sign)?;
        let var = Expr::variable(&decl.name, shape, sign)
            .map_err(|e| ParseError::Document(e.to_string()))?;
        if builder.built.insert(decl.name.clone(), var.clone()).is_some() {
            return doc_err(format!("variable `{}` is declared twice", decl.name));
        }
        variables.insert(decl.name.clone(), var);
    }
    for (name, raw) in &document.expressions {
        if builder.built.contains_key(name) {
            return doc_err(format!("`{name}` is both a variable and an expression"));
        }
        let node: ExprNode = serde_json::from_value(raw.clone())
            .map_err(|e| ParseError::Document(format!("in `{name}`: {e}")))?;
        builder.nodes.insert(name.clone(), node);
    }

    let objective = builder.resolve(&document.objective.root)?;
    let sense = match document.objective.sense.as_str() {
        "minimize" => Sense::Minimize,
        "maximize" => Sense::Maximize,
        other => return doc_err(format!("unknown sense `{other}`")),
    };
    let mut constraints = Vec::new();
    for (i, c) in document.constraints.iter().enumerate() {
        let lhs = builder.resolve(&c.lhs)?;
        let rhs = builder.resolve(&c.rhs)?;
        let op = parse_relop(&c.op)
            .map_err(|e| ParseError::Document(format!("constraint {i}: {e}")))?;
        constraints.push(Constraint { lhs, op, rhs });
    }

    let problem = Problem::new(sense, objective, constraints)
        .map_err(|e| ParseError::Document(e.to_string()))?;
    Ok(ParsedProblem {
        document,
        problem,
        variables,
    })
}
