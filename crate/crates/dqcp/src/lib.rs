//! Disciplined quasiconvex programming.
//!
//! Build expression trees from an atom library, verify quasiconvexity by
//! composition rules, canonicalize compliant problems into a one-parameter
//! family of conic feasibility problems, and solve them by bisection with a
//! built-in alternating-projections feasibility solver.
//!
//! ```
//! use dqcp::atom::AtomKind;
//! use dqcp::expr::Expr;
//! use dqcp::problem::{Constraint, Problem, RelOp, Sense};
//! use dqcp::shape::Shape;
//! use dqcp::sign::Sign;
//!
//! // minimize -sqrt(x)/y subject to exp(x) <= y, with y positive.
//! let x = Expr::variable("x", Shape::Scalar, Sign::Unknown).unwrap();
//! let y = Expr::variable("y", Shape::Scalar, Sign::Positive).unwrap();
//! let sqrt_x = Expr::apply(AtomKind::Sqrt, vec![x.clone()]).unwrap();
//! let objective = Expr::apply(
//!     AtomKind::Neg,
//!     vec![Expr::apply(AtomKind::Ratio, vec![sqrt_x, y.clone()]).unwrap()],
//! )
//! .unwrap();
//! let constraint = Constraint {
//!     lhs: Expr::apply(AtomKind::Exp, vec![x]).unwrap(),
//!     op: RelOp::Le,
//!     rhs: y,
//! };
//! let problem = Problem::new(Sense::Minimize, objective, vec![constraint]).unwrap();
//! assert!(dqcp::analysis::is_dqcp(&problem));
//! let result = dqcp::solve(&problem, &dqcp::SolveOptions::default()).unwrap();
//! assert!((result.value - (-0.4288821220397949)).abs() < 1e-3);
//! ```

pub mod analysis;
pub mod atom;
pub mod bisect;
pub mod canon;
pub mod conic;
pub mod expr;
pub mod linalg;
pub mod problem;
pub mod shape;
pub mod sign;

use thiserror::Error;

pub use bisect::{BisectOptions, SolveResult, Status};
pub use canon::CanonOptions;

/// Options for the end-to-end solve.
#[derive(Clone, Copy, Debug, Default)]
pub struct SolveOptions {
    pub canon: CanonOptions,
    pub bisect: BisectOptions,
}

#[derive(Error, Debug)]
pub enum SolveError {
    #[error(transparent)]
    Canon(#[from] canon::CanonError),
    #[error(transparent)]
    Bisect(#[from] bisect::BisectError),
}

/// Verify, canonicalize, and solve a problem by bisection. Maximize senses
/// are normalized internally; the reported value and interval are mapped
/// back to the original sense (the probe trace stays in minimize space).
pub fn solve(
    problem: &problem::Problem,
    options: &SolveOptions,
) -> Result<SolveResult, SolveError> {
    let family = canon::dqcp2dcp(problem, &options.canon)?;
    let mut result = bisect::solve_family(&family, &options.bisect)?;
    if family.negated_sense {
        result.value = -result.value;
        result.interval = (-result.interval.1, -result.interval.0);
    }
    Ok(result)
}
