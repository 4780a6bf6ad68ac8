//! Canonicalization: turning a verified DQCP problem into a one-parameter
//! family of conic feasibility problems.
//!
//! The reduction constrains the objective to be no greater than a scalar
//! level and recursively represents sublevel sets of quasiconvex expressions
//! (and superlevel sets of quasiconcave expressions) as DCP constraints.
//! Constraints with constant bounds on quasiconvex or quasiconcave
//! expressions are expanded once at their constant levels; convex-concave
//! and affine constraints pass through unchanged. The family is materialized
//! lazily, one fresh conic problem per probe level, because integer atoms
//! such as `length` and `ceil` change the constraint structure with the
//! level.

pub mod affine;

use crate::analysis::{self, curvature_of};
use crate::atom::{level, AtomKind, Monotonicity};
use crate::conic::ConicProblem;
use crate::expr::{Expr, ExprError};
use crate::problem::{Constraint, Problem, RelOp, Sense};
use std::sync::Arc;
use thiserror::Error;

pub use affine::dcp_to_conic;

/// Margins used when closing strict inequalities and strict definiteness.
#[derive(Clone, Copy, Debug)]
pub struct CanonOptions {
    /// Strict inequalities in integer-atom level sets (and strict domains
    /// like the one of log) are closed with this margin.
    pub delta_strict: f64,
    /// B > 0 requirements become B - delta * I >= 0 with this delta.
    pub psd_min_eig: f64,
}

impl Default for CanonOptions {
    fn default() -> CanonOptions {
        CanonOptions {
            delta_strict: 1e-6,
            psd_min_eig: 1e-6,
        }
    }
}

/// A DCP-compliant constraint emitted by canonicalization.
#[derive(Clone, Debug)]
pub enum DcpConstraint {
    /// lhs <= rhs with convex lhs and concave rhs.
    Le { lhs: Expr, rhs: Expr },
    /// lhs == rhs with affine sides.
    Eq { lhs: Expr, rhs: Expr },
    /// expr is a symmetric positive semidefinite matrix; expr affine.
    Psd { expr: Expr },
}

/// Result of emitting a level set: either a conjunction of DCP constraints
/// or a proof that the level is unattainable.
#[derive(Clone, Debug)]
pub enum Emission {
    Constraints(Vec<DcpConstraint>),
    Infeasible,
}

impl Emission {
    pub fn none() -> Emission {
        Emission::Constraints(vec![])
    }

    pub fn merge(self, other: Emission) -> Emission {
        match (self, other) {
            (Emission::Constraints(mut a), Emission::Constraints(b)) => {
                a.extend(b);
                Emission::Constraints(a)
            }
            _ => Emission::Infeasible,
        }
    }

    pub fn is_infeasible(&self) -> bool {
        matches!(self, Emission::Infeasible)
    }
}

#[derive(Error, Debug)]
pub enum CanonError {
    #[error("problem is not DQCP: {0}")]
    NotDqcp(String),
    #[error("expression at {path} must be {needed} to bound it there, but it is {actual}")]
    NotQuasi {
        path: String,
        needed: &'static str,
        actual: String,
    },
    #[error("`{atom}` at {path} has no conic level-set representation")]
    NoRepresentation { atom: String, path: String },
    #[error("no conic graph implementation for `{0}`")]
    UnsupportedAtom(String),
    #[error("constraint is not DCP: {0}")]
    NotDcp(String),
    #[error("unsupported bound: {0}")]
    UnsupportedBound(String),
    #[error("internal canonicalization failure: {0}")]
    Internal(String),
}

impl From<ExprError> for CanonError {
    fn from(e: ExprError) -> CanonError {
        CanonError::Internal(e.to_string())
    }
}

/// State threaded through one emission run; names auxiliary variables
/// deterministically.
pub struct EmitCtx {
    counter: usize,
}

impl EmitCtx {
    pub fn new() -> EmitCtx {
        EmitCtx { counter: 0 }
    }

    pub fn start_at(counter: usize) -> EmitCtx {
        EmitCtx { counter }
    }

    pub fn fresh_scalar(&mut self, hint: &str) -> Result<Expr, CanonError> {
        let name = format!("__{hint}{}", self.counter);
        self.counter += 1;
        Ok(Expr::variable(
            &name,
            crate::shape::Shape::Scalar,
            crate::sign::Sign::Unknown,
        )?)
    }
}

impl Default for EmitCtx {
    fn default() -> Self {
        EmitCtx::new()
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum LevelSet {
    Sublevel,
    Superlevel,
}

/// Constraints whose conjunction is equivalent to expr <= t (on the domain
/// of expr). For vector expressions the bound applies entrywise.
pub fn emit_sublevel(expr: &Expr, t: f64, opts: &CanonOptions) -> Result<Emission, CanonError> {
    let mut ctx = EmitCtx::new();
    emit_level(expr, t, LevelSet::Sublevel, opts, &mut ctx, "root")
}

/// Mirror of [`emit_sublevel`]: constraints equivalent to expr >= t.
pub fn emit_superlevel(expr: &Expr, t: f64, opts: &CanonOptions) -> Result<Emission, CanonError> {
    let mut ctx = EmitCtx::new();
    emit_level(expr, t, LevelSet::Superlevel, opts, &mut ctx, "root")
}

pub(crate) fn emit_level(
    expr: &Expr,
    t: f64,
    set: LevelSet,
    opts: &CanonOptions,
    ctx: &mut EmitCtx,
    path: &str,
) -> Result<Emission, CanonError> {
    let flags = curvature_of(expr);
    let needed = match set {
        LevelSet::Sublevel => "quasiconvex",
        LevelSet::Superlevel => "quasiconcave",
    };
    let has_needed = match set {
        LevelSet::Sublevel => flags.is_quasiconvex,
        LevelSet::Superlevel => flags.is_quasiconcave,
    };
    if !has_needed {
        return Err(CanonError::NotQuasi {
            path: path.to_string(),
            needed,
            actual: flags.describe().to_string(),
        });
    }

    // Constants decide immediately.
    if let Some(values) = expr.constant_values() {
        let ok = match set {
            LevelSet::Sublevel => values.iter().all(|&v| v <= t),
            LevelSet::Superlevel => values.iter().all(|&v| v >= t),
        };
        return Ok(if ok { Emission::none() } else { Emission::Infeasible });
    }

    if let Some(atom) = expr.atom().cloned() {
        let args = expr.args().to_vec();

        // The level set of a max (min) is the intersection of the
        // children's level sets.
        let decomposes = match set {
            LevelSet::Sublevel => matches!(atom, AtomKind::Maximum | AtomKind::MaxEntries),
            LevelSet::Superlevel => matches!(atom, AtomKind::Minimum | AtomKind::MinEntries),
        };
        if decomposes {
            let mut out = Emission::none();
            for (i, a) in args.iter().enumerate() {
                let sub = emit_level(a, t, set, opts, ctx, &format!("{path}/{}:{i}", atom.name()))?;
                out = out.merge(sub);
                if out.is_infeasible() {
                    return Ok(out);
                }
            }
            return Ok(out);
        }

        // Monotone scalar atoms map the level through their numeric inverse
        // and recurse on the single free argument.
        if let Some(plan) = monotone_inverse_plan(expr, &atom, &args, t, set, opts) {
            return apply_inverse_plan(plan, opts, ctx, path);
        }

        // Quasiconvex / quasiconcave atoms with a level-set canonicalizer.
        let has_canonicalizer = match set {
            LevelSet::Sublevel => level::has_sublevel(&atom),
            LevelSet::Superlevel => level::has_superlevel(&atom),
        };
        if has_canonicalizer {
            return level::level_constraints(&atom, &args, t, set, opts, ctx).map_err(|e| {
                match e {
                    level::LevelError::NoRepresentation(atom) => CanonError::NoRepresentation {
                        atom,
                        path: path.to_string(),
                    },
                    level::LevelError::NotApplicable(detail) => CanonError::NotQuasi {
                        path: path.to_string(),
                        needed,
                        actual: detail,
                    },
                    level::LevelError::Build(e) => CanonError::Internal(e.to_string()),
                }
            });
        }

        if atom.analysis_only() {
            return Err(CanonError::NoRepresentation {
                atom: atom.name().to_string(),
                path: path.to_string(),
            });
        }
    }

    // Base cases: convex expressions bound directly, concave mirrored.
    match set {
        LevelSet::Sublevel if flags.is_convex => {
            let bound = Expr::constant_filled(t, expr.shape())?;
            Ok(Emission::Constraints(vec![DcpConstraint::Le {
                lhs: expr.clone(),
                rhs: bound,
            }]))
        }
        LevelSet::Superlevel if flags.is_concave => {
            let bound = Expr::constant_filled(t, expr.shape())?;
            Ok(Emission::Constraints(vec![DcpConstraint::Le {
                lhs: bound,
                rhs: expr.clone(),
            }]))
        }
        _ => Err(CanonError::NoRepresentation {
            atom: expr
                .atom()
                .map(|a| a.name().to_string())
                .unwrap_or_else(|| "variable".into()),
            path: path.to_string(),
        }),
    }
}

/// What the monotone-inverse route decided to do.
struct InversePlan {
    child: Expr,
    child_path_label: String,
    /// Bounds to emit on the child: (level set, level).
    bounds: Vec<(LevelSet, f64)>,
    /// Result decided without recursion.
    decided: Option<Emission>,
}

fn monotone_inverse_plan(
    expr: &Expr,
    atom: &AtomKind,
    args: &[Expr],
    t: f64,
    set: LevelSet,
    opts: &CanonOptions,
) -> Option<InversePlan> {
    if !level::has_monotone_inverse(atom) {
        return None;
    }
    // Exactly one non-constant argument; the others must be scalar-valued
    // constants (all entries equal). Constant-curvature expressions count.
    let mut free = None;
    for (i, a) in args.iter().enumerate() {
        if !curvature_of(a).is_constant {
            if free.is_some() {
                return None;
            }
            free = Some(i);
        }
    }
    let free = free?;
    let child = &args[free];
    // Entrywise shape requirement: the bound must distribute over entries.
    if !expr.shape().dims_eq(&child.shape()) && !child.shape().is_scalar() {
        return None;
    }
    let mut const_vals = Vec::new();
    for (i, a) in args.iter().enumerate() {
        if i == free {
            continue;
        }
        let values = a.eval(&crate::expr::Assignment::new()).ok()?;
        let first = values.data[0];
        if values.data.iter().any(|&v| v != first) {
            return None;
        }
        const_vals.push(first);
    }
    let signs: Vec<crate::sign::Sign> = args.iter().map(|a| a.sign()).collect();
    let mono = atom.monotonicity(free, &signs);
    if mono == Monotonicity::None {
        return None;
    }

    let outcome = level::monotone_level_inverse(atom, &const_vals, child.sign(), t, set, opts)?;
    let plan = match outcome {
        level::InverseOutcome::AllFeasible => InversePlan {
            child: child.clone(),
            child_path_label: String::new(),
            bounds: vec![],
            decided: Some(Emission::none()),
        },
        level::InverseOutcome::Infeasible => InversePlan {
            child: child.clone(),
            child_path_label: String::new(),
            bounds: vec![],
            decided: Some(Emission::Infeasible),
        },
        level::InverseOutcome::Bounds(bounds) => InversePlan {
            child: child.clone(),
            child_path_label: format!("{}:{free}", atom.name()),
            bounds,
            decided: None,
        },
    };
    Some(plan)
}

fn apply_inverse_plan(
    plan: InversePlan,
    opts: &CanonOptions,
    ctx: &mut EmitCtx,
    path: &str,
) -> Result<Emission, CanonError> {
    if let Some(decided) = plan.decided {
        return Ok(decided);
    }
    let mut out = Emission::none();
    for (set, level) in plan.bounds {
        let sub = emit_level(
            &plan.child,
            level,
            set,
            opts,
            ctx,
            &format!("{path}/{}", plan.child_path_label),
        )?;
        out = out.merge(sub);
        if out.is_infeasible() {
            return Ok(out);
        }
    }
    Ok(out)
}

/// The one-parameter family of conic feasibility problems equivalent to a
/// DQCP problem: `generate(t)` is feasible iff the problem has a point with
/// objective value at most t (maximize senses are normalized to minimize of
/// the negation; see [`FeasibilityFamily::negated_sense`]).
pub struct FeasibilityFamily {
    base: ConicProblem,
    generator: Box<dyn Fn(f64) -> Result<ConicProblem, CanonError> + Send + Sync>,
    pub objective_integer_valued: bool,
    /// True when the original problem was a maximize and values must be
    /// negated back for reporting.
    pub negated_sense: bool,
    objective: Option<Expr>,
    problem: Option<Arc<Problem>>,
}

impl FeasibilityFamily {
    pub fn generate(&self, t: f64) -> Result<ConicProblem, CanonError> {
        (self.generator)(t)
    }

    /// The original constraints alone (no objective bound); used for the
    /// initial feasibility check.
    pub fn base(&self) -> &ConicProblem {
        &self.base
    }

    /// The (sense-normalized) objective, for evaluating f(x) at probe points.
    pub fn objective(&self) -> Option<&Expr> {
        self.objective.as_ref()
    }

    pub fn problem(&self) -> Option<&Problem> {
        self.problem.as_deref()
    }

    /// A family given directly by a generator; used by tests and synthetic
    /// drivers.
    pub fn synthetic<G>(generator: G, base: ConicProblem, integer_valued: bool) -> FeasibilityFamily
    where
        G: Fn(f64) -> ConicProblem + Send + Sync + 'static,
    {
        FeasibilityFamily {
            base,
            generator: Box::new(move |t| Ok(generator(t))),
            objective_integer_valued: integer_valued,
            negated_sense: false,
            objective: None,
            problem: None,
        }
    }
}

/// Canonicalize a verified DQCP problem into its feasibility family.
pub fn dqcp2dcp(problem: &Problem, opts: &CanonOptions) -> Result<FeasibilityFamily, CanonError> {
    let cert = analysis::problem_certificate(problem);
    if !cert.is_dqcp {
        let mut reasons: Vec<String> = Vec::new();
        if let Some(r) = &cert.objective_reason {
            reasons.push(r.clone());
        }
        for (i, c) in cert.constraints.iter().enumerate() {
            if let Some(r) = &c.reason {
                reasons.push(format!("constraint {i}: {r}"));
            }
        }
        return Err(CanonError::NotDqcp(reasons.join("; ")));
    }

    let objective = match problem.sense {
        Sense::Minimize => problem.objective.clone(),
        Sense::Maximize => Expr::apply(AtomKind::Neg, vec![problem.objective.clone()])?,
    };

    // Expand original constraints once.
    let mut ctx = EmitCtx::new();
    let mut static_emission = Emission::none();
    for (i, c) in problem.constraints.iter().enumerate() {
        let e = canon_constraint(c, opts, &mut ctx, i)?;
        static_emission = static_emission.merge(e);
    }
    let aux_start = ctx.counter;

    let variables: Vec<Expr> = problem.variables().to_vec();
    let statics = match &static_emission {
        Emission::Constraints(cs) => cs.clone(),
        Emission::Infeasible => vec![],
    };
    let statically_infeasible = static_emission.is_infeasible();

    let base = if statically_infeasible {
        ConicProblem::infeasible_marker()
    } else {
        dcp_to_conic(&statics, &variables, opts)?
    };

    let objective_integer_valued = analysis::is_integer_valued(&objective);
    let gen_objective = objective.clone();
    let gen_statics = statics.clone();
    let gen_vars = variables.clone();
    let gen_opts = *opts;
    let generator = move |t: f64| -> Result<ConicProblem, CanonError> {
        if statically_infeasible {
            return Ok(ConicProblem::infeasible_marker());
        }
        let mut ctx = EmitCtx::start_at(aux_start);
        let emission = emit_level(
            &gen_objective,
            t,
            LevelSet::Sublevel,
            &gen_opts,
            &mut ctx,
            "objective",
        )?;
        match emission {
            Emission::Infeasible => Ok(ConicProblem::infeasible_marker()),
            Emission::Constraints(mut cs) => {
                cs.extend(gen_statics.iter().cloned());
                dcp_to_conic(&cs, &gen_vars, &gen_opts)
            }
        }
    };

    Ok(FeasibilityFamily {
        base,
        generator: Box::new(generator),
        objective_integer_valued,
        negated_sense: problem.sense == Sense::Maximize,
        objective: Some(objective),
        problem: Some(Arc::new(problem.clone())),
    })
}

/// Expand one user constraint into DCP constraints.
fn canon_constraint(
    c: &Constraint,
    opts: &CanonOptions,
    ctx: &mut EmitCtx,
    index: usize,
) -> Result<Emission, CanonError> {
    let lf = curvature_of(&c.lhs);
    let rf = curvature_of(&c.rhs);
    let path = format!("constraint {index}");
    match c.op {
        RelOp::Eq => Ok(Emission::Constraints(vec![DcpConstraint::Eq {
            lhs: c.lhs.clone(),
            rhs: c.rhs.clone(),
        }])),
        RelOp::Le => {
            if lf.is_convex && rf.is_concave {
                Ok(Emission::Constraints(vec![DcpConstraint::Le {
                    lhs: c.lhs.clone(),
                    rhs: c.rhs.clone(),
                }]))
            } else if rf.is_constant {
                let t = constant_level(&c.rhs)?;
                emit_level(&c.lhs, t, LevelSet::Sublevel, opts, ctx, &path)
            } else if lf.is_constant {
                let t = constant_level(&c.lhs)?;
                emit_level(&c.rhs, t, LevelSet::Superlevel, opts, ctx, &path)
            } else {
                Err(CanonError::NotDqcp(format!(
                    "{path}: {} <= {}",
                    lf.describe(),
                    rf.describe()
                )))
            }
        }
        RelOp::Ge => {
            if lf.is_concave && rf.is_convex {
                Ok(Emission::Constraints(vec![DcpConstraint::Le {
                    lhs: c.rhs.clone(),
                    rhs: c.lhs.clone(),
                }]))
            } else if rf.is_constant {
                let t = constant_level(&c.rhs)?;
                emit_level(&c.lhs, t, LevelSet::Superlevel, opts, ctx, &path)
            } else if lf.is_constant {
                let t = constant_level(&c.lhs)?;
                emit_level(&c.rhs, t, LevelSet::Sublevel, opts, ctx, &path)
            } else {
                Err(CanonError::NotDqcp(format!(
                    "{path}: {} >= {}",
                    lf.describe(),
                    rf.describe()
                )))
            }
        }
    }
}

/// Scalar value of a constant bound; array bounds must have equal entries.
fn constant_level(e: &Expr) -> Result<f64, CanonError> {
    let v = e
        .eval(&crate::expr::Assignment::new())
        .map_err(|err| CanonError::UnsupportedBound(err.to_string()))?;
    let first = v.data[0];
    if v.data.iter().any(|&x| x != first) {
        return Err(CanonError::UnsupportedBound(
            "bounds on quasiconvex/quasiconcave expressions must be scalar-valued".into(),
        ));
    }
    Ok(first)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atom::AtomKind::*;
    use crate::expr::Assignment;
    use crate::shape::Shape;
    use crate::sign::Sign;

    fn var(name: &str, sign: Sign) -> Expr {
        Expr::variable(name, Shape::Scalar, sign).unwrap()
    }

    fn app(kind: crate::atom::AtomKind, args: Vec<Expr>) -> Expr {
        Expr::apply(kind, args).unwrap()
    }

    fn constraints(e: Emission) -> Vec<DcpConstraint> {
        match e {
            Emission::Constraints(c) => c,
            Emission::Infeasible => panic!("unexpectedly infeasible"),
        }
    }

    /// Check an emission against direct evaluation on sample points.
    fn agrees_with_eval(
        emission: &Emission,
        expr: &Expr,
        vars: &[&Expr],
        samples: &[Vec<f64>],
        t: f64,
        sublevel: bool,
    ) {
        for point in samples {
            let mut a = Assignment::new();
            for (v, &x) in vars.iter().zip(point) {
                a.set_scalar(v, x);
            }
            let val = expr.eval(&a).unwrap().as_scalar().unwrap();
            let holds = if sublevel { val <= t + 1e-9 } else { val >= t - 1e-9 };
            let satisfied = match emission {
                Emission::Infeasible => false,
                Emission::Constraints(cs) => cs.iter().all(|c| match c {
                    DcpConstraint::Le { lhs, rhs } => {
                        let l = lhs.eval(&a).unwrap();
                        let r = rhs.eval(&a).unwrap();
                        l.data
                            .iter()
                            .zip(r.data.iter().cycle())
                            .all(|(lv, rv)| *lv <= rv + 1e-9)
                    }
                    DcpConstraint::Eq { lhs, rhs } => {
                        let l = lhs.eval(&a).unwrap();
                        let r = rhs.eval(&a).unwrap();
                        l.data
                            .iter()
                            .zip(r.data.iter().cycle())
                            .all(|(lv, rv)| (*lv - *rv).abs() <= 1e-9)
                    }
                    DcpConstraint::Psd { .. } => unimplemented!(),
                }),
            };
            assert_eq!(
                holds, satisfied,
                "mismatch at {point:?}: value {val}, level {t}"
            );
        }
    }

    #[test]
    fn sublevel_of_negated_ratio() {
        // -sqrt(x)/y <= -0.4 with y positive becomes 0.4 y - sqrt(x) <= 0.
        let x = var("x", Sign::Unknown);
        let y = var("y", Sign::Positive);
        let e = app(Neg, vec![app(Ratio, vec![app(Sqrt, vec![x.clone()]), y.clone()])]);
        let emission = emit_sublevel(&e, -0.4, &CanonOptions::default()).unwrap();
        let cs = constraints(emission.clone());
        assert_eq!(cs.len(), 1);
        let samples: Vec<Vec<f64>> = vec![
            vec![0.5, 1.6487],
            vec![0.5, 1.8],
            vec![0.01, 0.3],
            vec![4.0, 4.0],
            vec![1.0, 2.6],
        ];
        agrees_with_eval(&emission, &e, &[&x, &y], &samples, -0.4, true);
    }

    #[test]
    fn sublevel_through_double_exponential() {
        // exp(exp(z)) <= 5 becomes z <= ln(ln 5), with no cone constraints.
        let z = var("z", Sign::Unknown);
        let e = app(Exp, vec![app(Exp, vec![z.clone()])]);
        let cs = constraints(emit_sublevel(&e, 5.0, &CanonOptions::default()).unwrap());
        assert_eq!(cs.len(), 1);
        match &cs[0] {
            DcpConstraint::Le { lhs, rhs } => {
                assert_eq!(lhs.id(), z.id());
                let bound = rhs.constant_values().unwrap()[0];
                assert!((bound - 5.0f64.ln().ln()).abs() < 1e-12);
            }
            other => panic!("unexpected constraint {other:?}"),
        }
    }

    #[test]
    fn sublevel_of_max_decomposes() {
        // max(ceil(x), y) <= 2.0 becomes x <= 2 and y <= 2.
        let x = var("x", Sign::Unknown);
        let y = var("y", Sign::Unknown);
        let e = app(Maximum, vec![app(Ceil, vec![x.clone()]), y.clone()]);
        let emission = emit_sublevel(&e, 2.0, &CanonOptions::default()).unwrap();
        let cs = constraints(emission.clone());
        assert_eq!(cs.len(), 2);
        let samples: Vec<Vec<f64>> = vec![
            vec![2.0, 2.0],
            vec![2.1, 0.0],
            vec![1.9, 1.0],
            vec![-3.0, 2.5],
            vec![0.0, -1.0],
        ];
        agrees_with_eval(&emission, &e, &[&x, &y], &samples, 2.0, true);
    }

    #[test]
    fn sublevel_below_range_is_infeasible() {
        let z = var("z", Sign::Unknown);
        let e = app(Exp, vec![z]);
        assert!(emit_sublevel(&e, -1.0, &CanonOptions::default())
            .unwrap()
            .is_infeasible());
        let x = Expr::variable("x", Shape::Vector(4), Sign::Unknown).unwrap();
        let len = app(Length, vec![x]);
        assert!(emit_sublevel(&len, -0.5, &CanonOptions::default())
            .unwrap()
            .is_infeasible());
    }

    #[test]
    fn huge_level_emits_nothing_for_length() {
        let x = Expr::variable("x", Shape::Vector(4), Sign::Unknown).unwrap();
        let len = app(Length, vec![x]);
        let cs = constraints(emit_sublevel(&len, 1e10, &CanonOptions::default()).unwrap());
        assert!(cs.is_empty());
    }

    #[test]
    fn length_pins_a_suffix() {
        // length(x) <= 4.5 pins 1-based coordinates 5..10.
        let x = Expr::variable("x", Shape::Vector(10), Sign::Unknown).unwrap();
        let len = app(Length, vec![x]);
        let cs = constraints(emit_sublevel(&len, 4.5, &CanonOptions::default()).unwrap());
        assert_eq!(cs.len(), 1);
        match &cs[0] {
            DcpConstraint::Eq { lhs, .. } => match lhs.atom() {
                Some(crate::atom::AtomKind::Index(idx)) => {
                    assert_eq!(idx, &vec![4, 5, 6, 7, 8, 9]);
                }
                other => panic!("expected an index selection, got {other:?}"),
            },
            other => panic!("unexpected constraint {other:?}"),
        }
    }

    #[test]
    fn superlevel_of_ratio() {
        // sqrt(x)/y >= 0.4 with y positive becomes 0.4 y <= sqrt(x).
        let x = var("x", Sign::Unknown);
        let y = var("y", Sign::Positive);
        let e = app(Ratio, vec![app(Sqrt, vec![x.clone()]), y.clone()]);
        let emission = emit_superlevel(&e, 0.4, &CanonOptions::default()).unwrap();
        let samples: Vec<Vec<f64>> = vec![
            vec![0.5, 1.6487],
            vec![0.5, 1.8],
            vec![0.01, 0.3],
            vec![4.0, 4.0],
        ];
        agrees_with_eval(&emission, &e, &[&x, &y], &samples, 0.4, false);
    }

    #[test]
    fn superlevel_of_min_decomposes() {
        let x = var("x", Sign::Unknown);
        let y = var("y", Sign::Unknown);
        let e = app(Minimum, vec![app(Sqrt, vec![x.clone()]), y.clone()]);
        let emission = emit_superlevel(&e, 0.5, &CanonOptions::default()).unwrap();
        let cs = constraints(emission.clone());
        assert_eq!(cs.len(), 2);
        agrees_with_eval(
            &emission,
            &e,
            &[&x, &y],
            &[vec![0.3, 1.0], vec![1.0, 0.4], vec![1.0, 1.0], vec![0.25, 0.5]],
            0.5,
            false,
        );
    }

    #[test]
    fn superlevel_of_monotone_atom_uses_the_inverse() {
        // sqrt(x) >= 2 becomes 4 <= x, no cones needed.
        let x = var("x", Sign::Unknown);
        let e = app(Sqrt, vec![x.clone()]);
        let cs = constraints(emit_superlevel(&e, 2.0, &CanonOptions::default()).unwrap());
        assert_eq!(cs.len(), 1);
        match &cs[0] {
            DcpConstraint::Le { lhs, rhs } => {
                assert_eq!(lhs.constant_values().unwrap()[0], 4.0);
                assert_eq!(rhs.id(), x.id());
            }
            other => panic!("unexpected constraint {other:?}"),
        }
    }

    #[test]
    fn superlevel_of_concave_is_direct() {
        // A concave expression with two free arguments falls through to the
        // base case t <= e.
        let x = var("x", Sign::Unknown);
        let y = var("y", Sign::Unknown);
        let e = app(Add, vec![app(Sqrt, vec![x]), app(Log, vec![y])]);
        let cs = constraints(emit_superlevel(&e, 2.0, &CanonOptions::default()).unwrap());
        assert_eq!(cs.len(), 1);
        match &cs[0] {
            DcpConstraint::Le { lhs, rhs } => {
                assert_eq!(lhs.constant_values().unwrap()[0], 2.0);
                assert_eq!(rhs.id(), e.id());
            }
            other => panic!("unexpected constraint {other:?}"),
        }
    }

    #[test]
    fn rectangle_superlevel_cases() {
        let x = var("x", Sign::Unknown);
        let e = app(Rectangle, vec![x]);
        let opts = CanonOptions::default();
        assert!(constraints(emit_superlevel(&e, 0.0, &opts).unwrap()).is_empty());
        assert_eq!(constraints(emit_superlevel(&e, 0.5, &opts).unwrap()).len(), 2);
        assert!(emit_superlevel(&e, 1.5, &opts).unwrap().is_infeasible());
    }

    #[test]
    fn analysis_only_atom_errors_with_path() {
        let x = Expr::variable("x", Shape::Vector(3), Sign::Nonnegative).unwrap();
        let e = app(Card, vec![x]);
        match emit_superlevel(&e, 2.0, &CanonOptions::default()) {
            Err(CanonError::NoRepresentation { atom, path }) => {
                assert_eq!(atom, "card");
                assert!(path.contains("root"), "path was {path}");
            }
            other => panic!("expected a no-representation error, got {other:?}"),
        }
    }

    #[test]
    fn dqcp2dcp_rejects_noncompliant_problems() {
        let x = var("x", Sign::Unknown);
        let y = var("y", Sign::Unknown);
        let obj = app(Ratio, vec![x, y]);
        let p = crate::problem::Problem::new(crate::problem::Sense::Minimize, obj, vec![]).unwrap();
        assert!(matches!(
            dqcp2dcp(&p, &CanonOptions::default()),
            Err(CanonError::NotDqcp(_))
        ));
    }

    #[test]
    fn statically_infeasible_constraint_marks_family() {
        // rectangle(x) >= 2 can never hold.
        let x = var("x", Sign::Unknown);
        let rect = app(Rectangle, vec![x.clone()]);
        let p = crate::problem::Problem::new(
            crate::problem::Sense::Minimize,
            x,
            vec![crate::problem::Constraint {
                lhs: rect,
                op: crate::problem::RelOp::Ge,
                rhs: Expr::constant_scalar(2.0).unwrap(),
            }],
        )
        .unwrap();
        let family = dqcp2dcp(&p, &CanonOptions::default()).unwrap();
        assert!(family.base().trivially_infeasible);
        assert!(family.generate(0.0).unwrap().trivially_infeasible);
    }
}
