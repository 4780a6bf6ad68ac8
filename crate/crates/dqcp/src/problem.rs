//! Optimization problems: a sense, a scalar objective, and constraints.

use crate::expr::{Assignment, EvalError, Expr};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RelOp {
    Le,
    Ge,
    Eq,
}

impl RelOp {
    pub fn symbol(&self) -> &'static str {
        match self {
            RelOp::Le => "<=",
            RelOp::Ge => ">=",
            RelOp::Eq => "==",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Constraint {
    pub lhs: Expr,
    pub op: RelOp,
    pub rhs: Expr,
}

#[derive(Error, Debug, Clone, PartialEq)]
pub enum ProblemError {
    #[error("objective must be scalar, got {0}")]
    NonScalarObjective(String),
    #[error("constraint {index}: sides have different shapes ({lhs} vs {rhs})")]
    ConstraintShape {
        index: usize,
        lhs: String,
        rhs: String,
    },
    #[error("two distinct variables share the name `{0}`")]
    NameCollision(String),
}

#[derive(Clone, Debug)]
pub struct Problem {
    pub sense: Sense,
    pub objective: Expr,
    pub constraints: Vec<Constraint>,
    variables: Vec<Expr>,
}

impl Problem {
    /// Build a problem, checking the objective shape, constraint shape
    /// agreement, and variable-name uniqueness.
    pub fn new(
        sense: Sense,
        objective: Expr,
        constraints: Vec<Constraint>,
    ) -> Result<Problem, ProblemError> {
        if !objective.shape().is_scalar() {
            return Err(ProblemError::NonScalarObjective(
                objective.shape().to_string(),
            ));
        }
        for (i, c) in constraints.iter().enumerate() {
            let (ls, rs) = (c.lhs.shape(), c.rhs.shape());
            if !ls.dims_eq(&rs) && !ls.is_scalar() && !rs.is_scalar() {
                return Err(ProblemError::ConstraintShape {
                    index: i,
                    lhs: ls.to_string(),
                    rhs: rs.to_string(),
                });
            }
        }
        let mut variables: Vec<Expr> = Vec::new();
        let mut collect = |e: &Expr| {
            for v in e.variables() {
                if !variables.iter().any(|w| w.id() == v.id()) {
                    variables.push(v);
                }
            }
        };
        collect(&objective);
        for c in &constraints {
            collect(&c.lhs);
            collect(&c.rhs);
        }
        for (i, a) in variables.iter().enumerate() {
            for b in &variables[i + 1..] {
                if a.variable_name() == b.variable_name() {
                    return Err(ProblemError::NameCollision(
                        a.variable_name().unwrap_or("?").to_string(),
                    ));
                }
            }
        }
        Ok(Problem {
            sense,
            objective,
            constraints,
            variables,
        })
    }

    /// All distinct variables, in first-appearance order.
    pub fn variables(&self) -> &[Expr] {
        &self.variables
    }

    /// Largest violation of the constraints at an assignment: max over
    /// entries of (lhs - rhs) for <=, (rhs - lhs) for >=, |lhs - rhs| for ==.
    pub fn max_violation(&self, at: &Assignment) -> Result<f64, EvalError> {
        let mut worst = 0.0f64;
        for c in &self.constraints {
            let l = c.lhs.eval(at)?;
            let r = c.rhs.eval(at)?;
            let n = l.data.len().max(r.data.len());
            for i in 0..n {
                let lv = if l.data.len() == 1 { l.data[0] } else { l.data[i] };
                let rv = if r.data.len() == 1 { r.data[0] } else { r.data[i] };
                let v = match c.op {
                    RelOp::Le => lv - rv,
                    RelOp::Ge => rv - lv,
                    RelOp::Eq => (lv - rv).abs(),
                };
                worst = worst.max(v);
            }
        }
        Ok(worst)
    }
}
