//! Immutable expression trees with cached shapes and signs.
//!
//! Trees are built from variable and constant leaves and atom applications.
//! Construction validates arity, shapes, and constant domains; the cached
//! sign of every node equals what sign propagation would recompute from
//! scratch. Nodes are reference counted and freely shareable across threads.

use crate::atom::{self, AtomKind};
use crate::shape::Shape;
use crate::sign::Sign;
use std::collections::HashMap;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use thiserror::Error;

/// Slack allowed when checking weak declared signs against assignments.
/// Solver output can undershoot a nonnegativity bound by a few ulps.
const SIGN_SLACK: f64 = 1e-9;

static NEXT_ID: AtomicU64 = AtomicU64::new(1);

pub type NodeId = u64;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum ExprError {
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("unknown atom `{0}`")]
    UnknownAtom(String),
    #[error("atom `{atom}` expects {expected} argument(s), got {got}")]
    ArityMismatch {
        atom: String,
        expected: String,
        got: usize,
    },
    #[error("shape error in `{atom}`: {detail}")]
    ShapeMismatch { atom: String, detail: String },
    #[error("invalid constant: {0}")]
    InvalidConstant(String),
    #[error("domain violation in `{atom}`: {detail}")]
    DomainViolation { atom: String, detail: String },
}

#[derive(Error, Debug, Clone, PartialEq)]
pub enum EvalError {
    #[error("no value assigned to variable `{0}`")]
    MissingVariable(String),
    #[error("value for `{variable}` has wrong shape: {detail}")]
    ValueShape { variable: String, detail: String },
    #[error("value for `{variable}` violates its declared sign: {detail}")]
    SignViolation { variable: String, detail: String },
    #[error("evaluation error in `{atom}` (node {node}): {detail}")]
    Domain {
        atom: String,
        node: NodeId,
        detail: String,
    },
}

/// A numeric value with a shape; matrices are stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Value {
    pub shape: Shape,
    pub data: Vec<f64>,
}

impl Value {
    pub fn scalar(v: f64) -> Value {
        Value {
            shape: Shape::Scalar,
            data: vec![v],
        }
    }

    pub fn vector(data: Vec<f64>) -> Value {
        Value {
            shape: Shape::Vector(data.len()),
            data,
        }
    }

    pub fn matrix(rows: usize, cols: usize, data: Vec<f64>) -> Value {
        assert_eq!(data.len(), rows * cols);
        Value {
            shape: Shape::matrix(rows, cols),
            data,
        }
    }

    pub fn as_scalar(&self) -> Option<f64> {
        if self.data.len() == 1 {
            Some(self.data[0])
        } else {
            None
        }
    }
}

#[derive(Debug)]
pub enum NodeKind {
    Variable { name: String, declared_sign: Sign },
    Constant { values: Vec<f64> },
    Atom { atom: AtomKind, args: Vec<Expr> },
}

#[derive(Debug)]
struct Node {
    id: NodeId,
    kind: NodeKind,
    shape: Shape,
    sign: Sign,
}

/// An immutable expression. Cloning is cheap (shared reference).
#[derive(Clone, Debug)]
pub struct Expr {
    node: Arc<Node>,
}

impl Expr {
    fn new(kind: NodeKind, shape: Shape, sign: Sign) -> Expr {
        Expr {
            node: Arc::new(Node {
                id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
                kind,
                shape,
                sign,
            }),
        }
    }

    /// Create a variable leaf. The declared sign is trusted by sign
    /// propagation and enforced against assignments during evaluation.
    pub fn variable(name: &str, shape: Shape, declared_sign: Sign) -> Result<Expr, ExprError> {
        if !shape.is_valid() {
            return Err(ExprError::InvalidShape(format!(
                "variable `{name}` has invalid shape {shape}"
            )));
        }
        Ok(Expr::new(
            NodeKind::Variable {
                name: name.to_string(),
                declared_sign,
            },
            shape,
            declared_sign,
        ))
    }

    pub fn constant_scalar(v: f64) -> Result<Expr, ExprError> {
        Expr::constant(vec![v], Shape::Scalar)
    }

    pub fn constant_vector(values: Vec<f64>) -> Result<Expr, ExprError> {
        let n = values.len();
        Expr::constant(values, Shape::Vector(n))
    }

    pub fn constant(values: Vec<f64>, shape: Shape) -> Result<Expr, ExprError> {
        if !shape.is_valid() || shape.size() != values.len() {
            return Err(ExprError::InvalidShape(format!(
                "constant with {} entries does not fit shape {shape}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(ExprError::InvalidConstant(
                "constants must be finite (no NaN or infinity)".into(),
            ));
        }
        let sign = Sign::of_values(&values);
        Ok(Expr::new(NodeKind::Constant { values }, shape, sign))
    }

    /// A constant with every entry equal to `v`.
    pub fn constant_filled(v: f64, shape: Shape) -> Result<Expr, ExprError> {
        Expr::constant(vec![v; shape.size()], shape)
    }

    /// Apply an atom to children, validating arity, shapes, and constant
    /// domains. The sign is computed by the atom's sign rule; when all
    /// children are constants the sign is refined by evaluating the node.
    pub fn apply(kind: AtomKind, args: Vec<Expr>) -> Result<Expr, ExprError> {
        let arity = kind.arity();
        if !arity.accepts(args.len()) {
            return Err(ExprError::ArityMismatch {
                atom: kind.name().to_string(),
                expected: arity.to_string(),
                got: args.len(),
            });
        }
        let shapes: Vec<Shape> = args.iter().map(|a| a.shape()).collect();
        let shape = kind
            .result_shape(&shapes)
            .map_err(|detail| ExprError::ShapeMismatch {
                atom: kind.name().to_string(),
                detail,
            })?;
        validate_args(&kind, &args)?;

        let signs: Vec<Sign> = args.iter().map(|a| a.sign()).collect();
        let mut sign = kind.result_sign(&signs);

        // Fold constants for sign purposes only; the tree itself is kept as
        // written. Domain violations in constant arguments surface here.
        if args.iter().all(|a| a.is_constant()) {
            let values: Vec<Value> = args
                .iter()
                .map(|a| Value {
                    shape: a.shape(),
                    data: a.constant_values().unwrap().to_vec(),
                })
                .collect();
            match atom::eval::eval_atom(&kind, &values) {
                Ok(v) => sign = Sign::of_values(&v.data),
                Err(detail) => {
                    return Err(ExprError::DomainViolation {
                        atom: kind.name().to_string(),
                        detail,
                    })
                }
            }
        }

        Ok(Expr::new(NodeKind::Atom { atom: kind, args }, shape, sign))
    }

    pub fn id(&self) -> NodeId {
        self.node.id
    }

    pub fn shape(&self) -> Shape {
        self.node.shape
    }

    /// The cached sign of this node.
    pub fn sign(&self) -> Sign {
        self.node.sign
    }

    pub fn kind(&self) -> &NodeKind {
        &self.node.kind
    }

    pub fn is_variable(&self) -> bool {
        matches!(self.node.kind, NodeKind::Variable { .. })
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.node.kind, NodeKind::Constant { .. })
    }

    pub fn variable_name(&self) -> Option<&str> {
        match &self.node.kind {
            NodeKind::Variable { name, .. } => Some(name),
            _ => None,
        }
    }

    pub fn declared_sign(&self) -> Option<Sign> {
        match &self.node.kind {
            NodeKind::Variable { declared_sign, .. } => Some(*declared_sign),
            _ => None,
        }
    }

    pub fn constant_values(&self) -> Option<&[f64]> {
        match &self.node.kind {
            NodeKind::Constant { values } => Some(values),
            _ => None,
        }
    }

    pub fn atom(&self) -> Option<&AtomKind> {
        match &self.node.kind {
            NodeKind::Atom { atom, .. } => Some(atom),
            _ => None,
        }
    }

    pub fn args(&self) -> &[Expr] {
        match &self.node.kind {
            NodeKind::Atom { args, .. } => args,
            _ => &[],
        }
    }

    /// Unique variable leaves in first-visit preorder.
    pub fn variables(&self) -> Vec<Expr> {
        let mut seen = Vec::new();
        let mut out = Vec::new();
        self.collect_variables(&mut seen, &mut out);
        out
    }

    fn collect_variables(&self, seen: &mut Vec<NodeId>, out: &mut Vec<Expr>) {
        match &self.node.kind {
            NodeKind::Variable { .. } => {
                if !seen.contains(&self.id()) {
                    seen.push(self.id());
                    out.push(self.clone());
                }
            }
            NodeKind::Constant { .. } => {}
            NodeKind::Atom { args, .. } => {
                for a in args {
                    a.collect_variables(seen, out);
                }
            }
        }
    }

    /// Evaluate against an assignment covering all free variables.
    pub fn eval(&self, assignment: &Assignment) -> Result<Value, EvalError> {
        match &self.node.kind {
            NodeKind::Variable {
                name,
                declared_sign,
            } => {
                let value =
                    assignment
                        .get(self.id())
                        .ok_or_else(|| EvalError::MissingVariable(name.clone()))?;
                if !value.shape.dims_eq(&self.node.shape) {
                    return Err(EvalError::ValueShape {
                        variable: name.clone(),
                        detail: format!("expected {}, got {}", self.node.shape, value.shape),
                    });
                }
                check_declared_sign(name, *declared_sign, &value.data)?;
                Ok(value.clone())
            }
            NodeKind::Constant { values } => Ok(Value {
                shape: self.node.shape,
                data: values.clone(),
            }),
            NodeKind::Atom { atom, args } => {
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    vals.push(a.eval(assignment)?);
                }
                atom::eval::eval_atom(atom, &vals).map_err(|detail| EvalError::Domain {
                    atom: atom.name().to_string(),
                    node: self.id(),
                    detail,
                })
            }
        }
    }
}

fn check_declared_sign(name: &str, sign: Sign, data: &[f64]) -> Result<(), EvalError> {
    let ok = |v: f64| match sign {
        Sign::Unknown => true,
        Sign::Positive => v > 0.0,
        Sign::Negative => v < 0.0,
        Sign::Nonnegative => v >= -SIGN_SLACK,
        Sign::Nonpositive => v <= SIGN_SLACK,
        Sign::Zero => v.abs() <= SIGN_SLACK,
    };
    for &v in data {
        if !ok(v) {
            return Err(EvalError::SignViolation {
                variable: name.to_string(),
                detail: format!("value {v} is not {sign}"),
            });
        }
    }
    Ok(())
}

fn validate_args(kind: &AtomKind, args: &[Expr]) -> Result<(), ExprError> {
    match kind {
        AtomKind::MatVec => {
            if !args[0].is_constant() {
                return Err(ExprError::DomainViolation {
                    atom: "matvec".into(),
                    detail: "the matrix argument must be a constant".into(),
                });
            }
        }
        AtomKind::DistRatio => {
            if !args[1].is_constant() || !args[2].is_constant() {
                return Err(ExprError::DomainViolation {
                    atom: "dist_ratio".into(),
                    detail: "the reference points a and b must be constants".into(),
                });
            }
            if args[1].constant_values() == args[2].constant_values() {
                return Err(ExprError::DomainViolation {
                    atom: "dist_ratio".into(),
                    detail: "the reference points a and b must differ".into(),
                });
            }
        }
        AtomKind::PowOdd(p) => {
            if *p < 3 || *p % 2 == 0 {
                return Err(ExprError::DomainViolation {
                    atom: "pow_odd".into(),
                    detail: format!("power must be an odd integer >= 3, got {p}"),
                });
            }
        }
        _ => {}
    }
    Ok(())
}

/// Recompute the sign of an expression from scratch, ignoring cached signs.
pub fn sign_of(expr: &Expr) -> Sign {
    match expr.kind() {
        NodeKind::Variable { declared_sign, .. } => *declared_sign,
        NodeKind::Constant { values } => Sign::of_values(values),
        NodeKind::Atom { atom, args } => {
            let signs: Vec<Sign> = args.iter().map(sign_of).collect();
            // Constant folding mirrors `apply`.
            if args.iter().all(|a| a.is_constant()) {
                let values: Vec<Value> = args
                    .iter()
                    .map(|a| Value {
                        shape: a.shape(),
                        data: a.constant_values().unwrap().to_vec(),
                    })
                    .collect();
                if let Ok(v) = atom::eval::eval_atom(atom, &values) {
                    return Sign::of_values(&v.data);
                }
            }
            atom.result_sign(&signs)
        }
    }
}

/// Maps variable ids to numeric values. Every free variable of an evaluated
/// expression must be present, and values must respect declared signs
/// (strictly for positive/negative declarations).
#[derive(Clone, Debug, Default)]
pub struct Assignment {
    values: HashMap<NodeId, Value>,
}

impl Assignment {
    pub fn new() -> Assignment {
        Assignment::default()
    }

    pub fn set(&mut self, variable: &Expr, value: Value) {
        assert!(
            variable.is_variable(),
            "assignments are keyed by variable expressions"
        );
        self.values.insert(variable.id(), value);
    }

    pub fn set_scalar(&mut self, variable: &Expr, v: f64) {
        self.set(variable, Value::scalar(v));
    }

    pub fn set_by_id(&mut self, id: NodeId, value: Value) {
        self.values.insert(id, value);
    }

    pub fn get(&self, id: NodeId) -> Option<&Value> {
        self.values.get(&id)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind() {
            NodeKind::Variable { name, .. } => f.write_str(name),
            NodeKind::Constant { values } => {
                if values.len() == 1 {
                    write!(f, "{}", values[0])
                } else {
                    write!(f, "const[{}]", self.shape())
                }
            }
            NodeKind::Atom { atom, args } => {
                write!(f, "{atom}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}
