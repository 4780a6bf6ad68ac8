//! Conic feasibility problems and a self-contained solver.
//!
//! A problem is "find x with A x + b ∈ K" where K is a product of zero,
//! nonnegative, second-order, rotated second-order, positive semidefinite,
//! and exponential cones. The built-in solver runs alternating projections
//! with a Dykstra correction; any backend honoring [`FeasibilitySolver`] can
//! replace it.

pub mod project;
pub mod solver;

use crate::atom::AtomKind;
use crate::expr::NodeId;
use crate::shape::Shape;
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

/// One cone in the product. `Psd(n)` covers an n×n symmetric slice stored as
/// n(n+1)/2 scaled lower-triangle coordinates (off-diagonals times sqrt 2).
/// `Exp(k)` is k exponential cones of 3 coordinates each.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cone {
    Zero(usize),
    NonNeg(usize),
    Soc(usize),
    Rsoc(usize),
    Psd(usize),
    Exp(usize),
}

impl Cone {
    /// Number of coordinates the cone occupies.
    pub fn dim(&self) -> usize {
        match *self {
            Cone::Zero(m) | Cone::NonNeg(m) | Cone::Soc(m) | Cone::Rsoc(m) => m,
            Cone::Psd(n) => n * (n + 1) / 2,
            Cone::Exp(k) => 3 * k,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Cone::Zero(_) => "zero",
            Cone::NonNeg(_) => "nonneg",
            Cone::Soc(_) => "soc",
            Cone::Rsoc(_) => "rsoc",
            Cone::Psd(_) => "psd",
            Cone::Exp(_) => "expcone",
        }
    }
}

impl fmt::Display for Cone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Cone::Psd(n) => write!(f, "psd({n}x{n})"),
            Cone::Exp(k) => write!(f, "expcone(x{k})"),
            c => write!(f, "{}({})", c.name(), c.dim()),
        }
    }
}

/// Sparse affine functional: sum of coeff * x_i plus a constant.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinExpr {
    pub coeffs: BTreeMap<usize, f64>,
    pub constant: f64,
}

impl LinExpr {
    pub fn constant(c: f64) -> LinExpr {
        LinExpr {
            coeffs: BTreeMap::new(),
            constant: c,
        }
    }

    pub fn variable(i: usize) -> LinExpr {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(i, 1.0);
        LinExpr {
            coeffs,
            constant: 0.0,
        }
    }

    pub fn add_scaled(&mut self, other: &LinExpr, s: f64) {
        if s == 0.0 {
            return;
        }
        self.constant += s * other.constant;
        for (&i, &c) in &other.coeffs {
            *self.coeffs.entry(i).or_insert(0.0) += s * c;
        }
    }

    pub fn scaled(&self, s: f64) -> LinExpr {
        let mut out = LinExpr::constant(0.0);
        out.add_scaled(self, s);
        out
    }

    pub fn minus(&self, other: &LinExpr) -> LinExpr {
        let mut out = self.clone();
        out.add_scaled(other, -1.0);
        out
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant
            + self
                .coeffs
                .iter()
                .map(|(&i, &c)| c * x[i])
                .sum::<f64>()
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.values().all(|&c| c == 0.0)
    }
}

/// Where a solver coordinate range comes from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum VarSource {
    /// A user-declared variable, identified by its expression node id.
    User(NodeId),
    /// An auxiliary variable introduced during canonicalization.
    Aux,
}

#[derive(Clone, Debug)]
pub struct VarEntry {
    pub name: String,
    pub source: VarSource,
    pub offset: usize,
    pub shape: Shape,
}

/// Records the atom behind an auxiliary variable block, for diagnostics and
/// for tests that extend user assignments to the full conic variable space.
#[derive(Clone, Debug)]
pub struct AuxDef {
    pub atom: AtomKind,
    /// Affine forms of the atom's arguments, one chunk per argument.
    pub args: Vec<Vec<LinExpr>>,
    pub out_offset: usize,
    pub out_len: usize,
    /// Internal slack coordinates beyond the output itself.
    pub extras: Vec<usize>,
}

/// Feasibility problem "find x with A x + b ∈ K".
#[derive(Clone, Debug, Default)]
pub struct ConicProblem {
    pub num_vars: usize,
    pub rows: Vec<LinExpr>,
    pub blocks: Vec<Cone>,
    pub var_table: Vec<VarEntry>,
    pub aux_defs: Vec<AuxDef>,
    /// Set when canonicalization already proved the problem infeasible
    /// (for example a level below an atom's range).
    pub trivially_infeasible: bool,
}

impl ConicProblem {
    pub fn infeasible_marker() -> ConicProblem {
        ConicProblem {
            trivially_infeasible: true,
            ..Default::default()
        }
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    /// Check block dimensions against the row count.
    pub fn validate(&self) -> Result<(), SolverError> {
        let total: usize = self.blocks.iter().map(Cone::dim).sum();
        if total != self.rows.len() {
            return Err(SolverError::Malformed(format!(
                "cone blocks cover {total} rows but {} rows are present",
                self.rows.len()
            )));
        }
        for r in &self.rows {
            if let Some((&i, _)) = r.coeffs.last_key_value() {
                if i >= self.num_vars {
                    return Err(SolverError::Malformed(format!(
                        "row references variable {i} but only {} exist",
                        self.num_vars
                    )));
                }
            }
        }
        Ok(())
    }

    /// Evaluate s = A x + b.
    pub fn affine_image(&self, x: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|r| r.eval(x)).collect()
    }

    /// Euclidean distance from s to the cone product.
    pub fn cone_distance(&self, s: &[f64]) -> f64 {
        let mut p = s.to_vec();
        project::project_product(&self.blocks, &mut p);
        p.iter()
            .zip(s)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// Extract the user-variable part of a solver point as (node id, name,
    /// shape, values) tuples.
    pub fn extract_user_values(&self, x: &[f64]) -> Vec<(NodeId, String, Shape, Vec<f64>)> {
        self.var_table
            .iter()
            .filter_map(|e| match e.source {
                VarSource::User(id) => {
                    let vals = x[e.offset..e.offset + e.shape.size()].to_vec();
                    Some((id, e.name.clone(), e.shape, vals))
                }
                VarSource::Aux => None,
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SolverOptions {
    /// Cone residual below which a point is declared feasible.
    pub eps_feas: f64,
    /// Displacement norm above which a converged gap means infeasible.
    pub eps_gap: f64,
    pub max_iters: usize,
}

impl Default for SolverOptions {
    fn default() -> SolverOptions {
        SolverOptions {
            eps_feas: 1e-7,
            eps_gap: 1e-5,
            max_iters: 20_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum FeasStatus {
    Feasible(Vec<f64>),
    Infeasible,
    Inconclusive,
}

/// Outcome of a feasibility solve. A feasible x satisfies
/// dist(A x + b, K) <= eps_feas.
#[derive(Clone, Debug)]
pub struct FeasOutcome {
    pub status: FeasStatus,
    pub residual: f64,
    pub iterations: usize,
    /// Norm of the converged displacement vector (only meaningful for
    /// infeasible outcomes).
    pub gap_norm: f64,
}

#[derive(Error, Debug, Clone, PartialEq)]
pub enum SolverError {
    #[error("numerical breakdown: {0}")]
    Numerical(String),
    #[error("malformed conic problem: {0}")]
    Malformed(String),
}

/// Backend seam: anything that can decide conic feasibility can drive
/// bisection. Selected via configuration on the driver, not code changes.
pub trait FeasibilitySolver {
    fn solve_feasibility(
        &self,
        problem: &ConicProblem,
        opts: &SolverOptions,
    ) -> Result<FeasOutcome, SolverError>;
}

pub use solver::DouglasRachford;
