//! Curvature analysis: the DQCP verifier.
//!
//! Curvature flags are computed bottom-up. At every atom node the applicable
//! rules all fire and their results are OR-ed together:
//!
//! 1. leaves: constants are constant, variables affine;
//! 2. DCP composition: the atom is convex (resp. concave) under the argument
//!    signs and every argument is convex where the atom is nondecreasing,
//!    concave where nonincreasing, affine where monotonicity is unknown;
//! 3. quasiconvex composition: same per-argument requirements with the atom
//!    merely quasiconvex or quasiconcave under the argument signs;
//! 4. monotone scalar composition: an entrywise monotone atom applied to one
//!    quasiconvex or quasiconcave argument (all other arguments constant);
//! 5. the maximum of quasiconvex expressions is quasiconvex, the minimum of
//!    quasiconcave expressions quasiconcave.
//!
//! Sign conditions use declared signs only; constraints never refine them.

use crate::atom::{AtomKind, CurvatureFlags, Monotonicity};
use crate::expr::{Expr, NodeId, NodeKind};
use crate::problem::{Problem, RelOp, Sense};
use crate::sign::Sign;
use std::fmt::Write as _;

/// Which rule certified a node (the strongest applicable one is recorded).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RuleFired {
    Leaf,
    DcpComposition,
    QuasiComposition,
    MonotoneOfQuasi,
    MaxOfQuasiconvex,
    MinOfQuasiconcave,
    NoRule,
}

impl RuleFired {
    pub fn name(&self) -> &'static str {
        match self {
            RuleFired::Leaf => "leaf",
            RuleFired::DcpComposition => "dcp-composition",
            RuleFired::QuasiComposition => "quasi-composition",
            RuleFired::MonotoneOfQuasi => "monotone-of-quasi",
            RuleFired::MaxOfQuasiconvex => "max-of-qcvx",
            RuleFired::MinOfQuasiconcave => "min-of-qccv",
            RuleFired::NoRule => "no-rule",
        }
    }
}

/// The first hypothesis that blocked every rule at a node.
#[derive(Clone, Debug, PartialEq)]
pub enum Hypothesis {
    Curvature {
        arg: usize,
        required: &'static str,
        actual: String,
    },
    ArgSign {
        arg: usize,
        required: String,
        actual: Sign,
    },
}

impl Hypothesis {
    pub fn describe(&self) -> String {
        match self {
            Hypothesis::Curvature {
                arg,
                required,
                actual,
            } => format!("argument {arg} must be {required}, but it is {actual}"),
            Hypothesis::ArgSign {
                arg,
                required,
                actual,
            } => format!("argument {arg} must be {required}, but its sign is {actual}"),
        }
    }
}

/// Per-node record of the analysis; the tree mirrors the expression tree.
#[derive(Clone, Debug)]
pub struct CurvatureCertificate {
    pub node: NodeId,
    pub label: String,
    pub flags: CurvatureFlags,
    pub rule: RuleFired,
    pub failure: Option<Hypothesis>,
    pub children: Vec<CurvatureCertificate>,
}

impl CurvatureCertificate {
    /// Indented one-line-per-node rendering.
    pub fn render(&self) -> String {
        let mut out = String::new();
        self.render_into(&mut out, 0);
        out
    }

    fn render_into(&self, out: &mut String, depth: usize) {
        let pad = "  ".repeat(depth);
        let _ = write!(out, "{pad}{} [{}] rule: {}", self.label, self.flags, self.rule.name());
        if let Some(h) = &self.failure {
            let _ = write!(out, " (blocked: {})", h.describe());
        }
        out.push('\n');
        for c in &self.children {
            c.render_into(out, depth + 1);
        }
    }
}

/// Strongest derivable curvature flags for an expression.
pub fn curvature_of(expr: &Expr) -> CurvatureFlags {
    certificate(expr).flags
}

/// Full per-node analysis.
pub fn certificate(expr: &Expr) -> CurvatureCertificate {
    match expr.kind() {
        NodeKind::Variable { name, .. } => CurvatureCertificate {
            node: expr.id(),
            label: name.clone(),
            flags: CurvatureFlags::affine(),
            rule: RuleFired::Leaf,
            failure: None,
            children: vec![],
        },
        NodeKind::Constant { values } => CurvatureCertificate {
            node: expr.id(),
            label: if values.len() == 1 {
                format!("{}", values[0])
            } else {
                format!("const {}", expr.shape())
            },
            flags: CurvatureFlags::constant(),
            rule: RuleFired::Leaf,
            failure: None,
            children: vec![],
        },
        NodeKind::Atom { atom, args } => analyze_atom(expr, atom, args),
    }
}

fn analyze_atom(expr: &Expr, atom: &AtomKind, args: &[Expr]) -> CurvatureCertificate {
    let children: Vec<CurvatureCertificate> = args.iter().map(certificate).collect();
    let arg_signs: Vec<Sign> = args.iter().map(|a| a.sign()).collect();
    let atom_curv = atom.curvature(&arg_signs);

    let mut flags = CurvatureFlags::none();
    let mut rule = RuleFired::NoRule;
    let mut failure: Option<Hypothesis> = None;

    // Constant propagation: an atom of constants is constant.
    if children.iter().all(|c| c.flags.is_constant) {
        flags = flags.or(CurvatureFlags::constant());
    }
    // Affine composition.
    if atom_curv.is_affine && children.iter().all(|c| c.flags.is_affine) {
        flags = flags.or(CurvatureFlags::affine());
    }

    // Rule 2: DCP composition.
    let mut dcp_fired = false;
    if atom_curv.is_convex && composition_ok(atom, &children, &arg_signs, Dir::Convex).is_ok() {
        flags = flags.or(CurvatureFlags::convex());
        dcp_fired = true;
    }
    if atom_curv.is_concave && composition_ok(atom, &children, &arg_signs, Dir::Concave).is_ok() {
        flags = flags.or(CurvatureFlags::concave());
        dcp_fired = true;
    }

    // Rule 3: quasiconvex composition.
    let mut quasi_fired = false;
    if atom_curv.is_quasiconvex {
        match composition_ok(atom, &children, &arg_signs, Dir::Convex) {
            Ok(()) => {
                flags = flags.or(CurvatureFlags::quasiconvex());
                quasi_fired = !flags.is_convex;
            }
            Err(h) => {
                failure.get_or_insert(h);
            }
        }
    }
    if atom_curv.is_quasiconcave {
        match composition_ok(atom, &children, &arg_signs, Dir::Concave) {
            Ok(()) => {
                flags = flags.or(CurvatureFlags::quasiconcave());
                quasi_fired = quasi_fired || !flags.is_concave;
            }
            Err(h) => {
                failure.get_or_insert(h);
            }
        }
    }

    // Rule 4: monotone composition with a single quasiconvex or quasiconcave
    // argument. Valid entrywise for shape-preserving atoms.
    let mut monotone_fired = false;
    if let Some(free) = single_free_argument(&children) {
        let elementwise_ok = atom.elementwise()
            && (expr.shape().dims_eq(&args[free].shape()) || args[free].shape().is_scalar());
        if elementwise_ok {
            let child = &children[free].flags;
            match atom.monotonicity(free, &arg_signs) {
                Monotonicity::Nondecreasing => {
                    if child.is_quasiconvex {
                        flags = flags.or(CurvatureFlags::quasiconvex());
                        monotone_fired = true;
                    }
                    if child.is_quasiconcave {
                        flags = flags.or(CurvatureFlags::quasiconcave());
                        monotone_fired = true;
                    }
                }
                Monotonicity::Nonincreasing => {
                    if child.is_quasiconvex {
                        flags = flags.or(CurvatureFlags::quasiconcave());
                        monotone_fired = true;
                    }
                    if child.is_quasiconcave {
                        flags = flags.or(CurvatureFlags::quasiconvex());
                        monotone_fired = true;
                    }
                }
                Monotonicity::None => {}
            }
        }
    }

    // Rule 5: max of quasiconvex, min of quasiconcave.
    let mut max_fired = false;
    let mut min_fired = false;
    match atom {
        AtomKind::Maximum | AtomKind::MaxEntries => {
            if children.iter().all(|c| c.flags.is_quasiconvex) {
                if !flags.is_quasiconvex {
                    max_fired = true;
                }
                flags = flags.or(CurvatureFlags::quasiconvex());
            } else if failure.is_none() {
                let bad = children.iter().position(|c| !c.flags.is_quasiconvex).unwrap();
                failure = Some(Hypothesis::Curvature {
                    arg: bad,
                    required: "quasiconvex",
                    actual: children[bad].flags.describe().to_string(),
                });
            }
        }
        AtomKind::Minimum | AtomKind::MinEntries => {
            if children.iter().all(|c| c.flags.is_quasiconcave) {
                if !flags.is_quasiconcave {
                    min_fired = true;
                }
                flags = flags.or(CurvatureFlags::quasiconcave());
            } else if failure.is_none() {
                let bad = children
                    .iter()
                    .position(|c| !c.flags.is_quasiconcave)
                    .unwrap();
                failure = Some(Hypothesis::Curvature {
                    arg: bad,
                    required: "quasiconcave",
                    actual: children[bad].flags.describe().to_string(),
                });
            }
        }
        _ => {}
    }

    flags = flags.normalized();

    // Record the strongest rule that fired.
    if flags != CurvatureFlags::none() {
        rule = if dcp_fired || flags.is_affine {
            RuleFired::DcpComposition
        } else if quasi_fired {
            RuleFired::QuasiComposition
        } else if monotone_fired {
            RuleFired::MonotoneOfQuasi
        } else if max_fired {
            RuleFired::MaxOfQuasiconvex
        } else if min_fired {
            RuleFired::MinOfQuasiconcave
        } else {
            RuleFired::DcpComposition
        };
        failure = None;
    } else if failure.is_none() {
        // The atom itself had no curvature under these signs.
        failure = Some(sign_hypothesis(atom, &arg_signs));
    }

    CurvatureCertificate {
        node: expr.id(),
        label: atom.to_string(),
        flags,
        rule,
        failure,
        children,
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Dir {
    Convex,
    Concave,
}

/// Check the per-argument composition hypotheses for an atom of the given
/// direction: nondecreasing arguments must be convex (concave for the
/// quasiconcave direction), nonincreasing the mirror, and arguments without
/// monotonicity affine.
fn composition_ok(
    atom: &AtomKind,
    children: &[CurvatureCertificate],
    arg_signs: &[Sign],
    dir: Dir,
) -> Result<(), Hypothesis> {
    for (i, child) in children.iter().enumerate() {
        let mono = atom.monotonicity(i, arg_signs);
        let (ok, required) = match (mono, dir) {
            (Monotonicity::Nondecreasing, Dir::Convex) => (child.flags.is_convex, "convex"),
            (Monotonicity::Nonincreasing, Dir::Convex) => (child.flags.is_concave, "concave"),
            (Monotonicity::Nondecreasing, Dir::Concave) => (child.flags.is_concave, "concave"),
            (Monotonicity::Nonincreasing, Dir::Concave) => (child.flags.is_convex, "convex"),
            (Monotonicity::None, _) => (child.flags.is_affine, "affine"),
        };
        if !ok {
            return Err(Hypothesis::Curvature {
                arg: i,
                required,
                actual: child.flags.describe().to_string(),
            });
        }
    }
    Ok(())
}

/// Index of the single non-constant argument, if there is exactly one.
fn single_free_argument(children: &[CurvatureCertificate]) -> Option<usize> {
    let mut free = None;
    for (i, c) in children.iter().enumerate() {
        if !c.flags.is_constant {
            if free.is_some() {
                return None;
            }
            free = Some(i);
        }
    }
    free
}

/// Explain why an atom has no curvature under the given signs.
fn sign_hypothesis(atom: &AtomKind, arg_signs: &[Sign]) -> Hypothesis {
    match atom {
        AtomKind::Ratio => Hypothesis::ArgSign {
            arg: 1,
            required: "strictly positive or strictly negative".into(),
            actual: arg_signs[1],
        },
        AtomKind::Mul => {
            let arg = if arg_signs[0] == Sign::Unknown { 0 } else { 1 };
            Hypothesis::ArgSign {
                arg,
                required: "nonnegative or nonpositive".into(),
                actual: arg_signs[arg],
            }
        }
        AtomKind::Card => Hypothesis::ArgSign {
            arg: 0,
            required: "nonnegative".into(),
            actual: arg_signs[0],
        },
        _ => Hypothesis::Curvature {
            arg: 0,
            required: "a curvature the atom supports",
            actual: format!("signs {:?}", arg_signs.iter().map(|s| s.name()).collect::<Vec<_>>()),
        },
    }
}

/// Verdict for one constraint.
#[derive(Clone, Debug)]
pub struct ConstraintCertificate {
    pub lhs: CurvatureCertificate,
    pub rhs: CurvatureCertificate,
    pub op: RelOp,
    pub dqcp_ok: bool,
    pub dcp_ok: bool,
    pub reason: Option<String>,
}

/// Verdict for the whole problem.
#[derive(Clone, Debug)]
pub struct ProblemCertificate {
    pub is_dqcp: bool,
    pub is_dcp: bool,
    pub objective: CurvatureCertificate,
    pub objective_ok: bool,
    pub objective_reason: Option<String>,
    pub constraints: Vec<ConstraintCertificate>,
}

pub fn is_dqcp(problem: &Problem) -> bool {
    problem_certificate(problem).is_dqcp
}

pub fn is_dcp(problem: &Problem) -> bool {
    problem_certificate(problem).is_dcp
}

pub fn problem_certificate(problem: &Problem) -> ProblemCertificate {
    let obj = certificate(&problem.objective);
    let (obj_dqcp, obj_dcp, obj_reason) = match problem.sense {
        Sense::Minimize => (
            obj.flags.is_quasiconvex,
            obj.flags.is_convex,
            if obj.flags.is_quasiconvex {
                None
            } else {
                Some("a minimized objective must be quasiconvex".to_string())
            },
        ),
        Sense::Maximize => (
            obj.flags.is_quasiconcave,
            obj.flags.is_concave,
            if obj.flags.is_quasiconcave {
                None
            } else {
                Some("a maximized objective must be quasiconcave".to_string())
            },
        ),
    };

    let mut constraints = Vec::new();
    let mut all_dqcp = obj_dqcp;
    let mut all_dcp = obj_dcp;
    for c in &problem.constraints {
        let lhs = certificate(&c.lhs);
        let rhs = certificate(&c.rhs);
        let (dqcp_ok, dcp_ok, reason) = constraint_verdict(&lhs.flags, c.op, &rhs.flags);
        all_dqcp &= dqcp_ok;
        all_dcp &= dcp_ok;
        constraints.push(ConstraintCertificate {
            lhs,
            rhs,
            op: c.op,
            dqcp_ok,
            dcp_ok,
            reason,
        });
    }

    ProblemCertificate {
        is_dqcp: all_dqcp,
        is_dcp: all_dcp,
        objective: obj,
        objective_ok: obj_dqcp,
        objective_reason: obj_reason,
        constraints,
    }
}

fn constraint_verdict(
    lhs: &CurvatureFlags,
    op: RelOp,
    rhs: &CurvatureFlags,
) -> (bool, bool, Option<String>) {
    match op {
        RelOp::Le => {
            let dcp = lhs.is_convex && rhs.is_concave;
            let dqcp =
                dcp || (lhs.is_quasiconvex && rhs.is_constant) || (lhs.is_constant && rhs.is_quasiconcave);
            let reason = if dqcp {
                None
            } else {
                Some(format!(
                    "a <= constraint needs convex <= concave, quasiconvex <= constant, or \
                     constant <= quasiconcave; got {} <= {}",
                    lhs.describe(),
                    rhs.describe()
                ))
            };
            (dqcp, dcp, reason)
        }
        RelOp::Ge => {
            let dcp = lhs.is_concave && rhs.is_convex;
            let dqcp =
                dcp || (lhs.is_quasiconcave && rhs.is_constant) || (lhs.is_constant && rhs.is_quasiconvex);
            let reason = if dqcp {
                None
            } else {
                Some(format!(
                    "a >= constraint needs concave >= convex, quasiconcave >= constant, or \
                     constant >= quasiconvex; got {} >= {}",
                    lhs.describe(),
                    rhs.describe()
                ))
            };
            (dqcp, dcp, reason)
        }
        RelOp::Eq => {
            let ok = lhs.is_affine && rhs.is_affine;
            let reason = if ok {
                None
            } else {
                Some(format!(
                    "an equality needs affine sides; got {} == {}",
                    lhs.describe(),
                    rhs.describe()
                ))
            };
            (ok, ok, reason)
        }
    }
}

/// Conservative integer-valuedness: integer atoms, and max/min/negation of
/// integer-valued expressions. Sums and scalings are deliberately excluded.
pub fn is_integer_valued(expr: &Expr) -> bool {
    match expr.kind() {
        NodeKind::Variable { .. } | NodeKind::Constant { .. } => false,
        NodeKind::Atom { atom, args } => {
            if atom.integer_valued() {
                return true;
            }
            match atom {
                AtomKind::Neg
                | AtomKind::Maximum
                | AtomKind::MaxEntries
                | AtomKind::Minimum
                | AtomKind::MinEntries => args.iter().all(is_integer_valued),
                _ => false,
            }
        }
    }
}
