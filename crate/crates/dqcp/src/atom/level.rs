//! Level-set canonicalizers: the families of convex constraints that
//! represent `atom(args) <= t` (sublevel) and `atom(args) >= t` (superlevel),
//! plus the numeric level inverses of monotone scalar atoms.
//!
//! `card` and `rank` deliberately have no canonicalizers: their superlevel
//! sets are not closed, so an exact conic representation does not exist and
//! asking for one is a hard error rather than an approximation.

use super::AtomKind;
use crate::canon::{CanonOptions, DcpConstraint, Emission, EmitCtx, LevelSet};
use crate::expr::{Expr, ExprError};
use crate::shape::Shape;
use crate::sign::Sign;

#[derive(Debug)]
pub enum LevelError {
    /// Analysis-only atom: curvature is certified but no representation exists.
    NoRepresentation(String),
    /// The atom is not quasiconvex/quasiconcave under the argument signs.
    NotApplicable(String),
    Build(ExprError),
}

impl From<ExprError> for LevelError {
    fn from(e: ExprError) -> LevelError {
        LevelError::Build(e)
    }
}

/// What a monotone atom's level inverse decided.
pub enum InverseOutcome {
    /// Bounds the free argument must satisfy (conjunction).
    Bounds(Vec<(LevelSet, f64)>),
    AllFeasible,
    Infeasible,
}

pub fn has_sublevel(kind: &AtomKind) -> bool {
    matches!(
        kind,
        AtomKind::Mul
            | AtomKind::Ratio
            | AtomKind::DistRatio
            | AtomKind::GenLambdaMax
            | AtomKind::Length
    )
}

pub fn has_superlevel(kind: &AtomKind) -> bool {
    matches!(kind, AtomKind::Mul | AtomKind::Ratio | AtomKind::Rectangle)
}

pub fn has_monotone_inverse(kind: &AtomKind) -> bool {
    matches!(
        kind,
        AtomKind::Neg
            | AtomKind::Scale(_)
            | AtomKind::Add
            | AtomKind::Mul
            | AtomKind::Maximum
            | AtomKind::Minimum
            | AtomKind::Exp
            | AtomKind::Log
            | AtomKind::Sqrt
            | AtomKind::Square
            | AtomKind::Abs
            | AtomKind::Ceil
            | AtomKind::Floor
            | AtomKind::SignFn
            | AtomKind::PowOdd(_)
    )
}

/// Level inverse for a monotone scalar atom with one free argument whose
/// other arguments take the constant values `consts`. Returns bounds on the
/// free argument equivalent to `atom REL t` where REL is <= for sublevel
/// and >= for superlevel. Strict inequalities are closed with delta_strict.
pub fn monotone_level_inverse(
    kind: &AtomKind,
    consts: &[f64],
    child_sign: Sign,
    t: f64,
    set: LevelSet,
    opts: &CanonOptions,
) -> Option<InverseOutcome> {
    use InverseOutcome::*;
    use LevelSet::*;
    let delta = opts.delta_strict;
    let one = |set: LevelSet, v: f64| Some(Bounds(vec![(set, v)]));
    match (kind, set) {
        (AtomKind::Neg, Sublevel) => one(Superlevel, -t),
        (AtomKind::Neg, Superlevel) => one(Sublevel, -t),
        (AtomKind::Scale(_), _) | (AtomKind::Mul, _) => {
            let c = scale_const(kind, consts)?;
            if c == 0.0 {
                let ok = match set {
                    Sublevel => 0.0 <= t,
                    Superlevel => 0.0 >= t,
                };
                return Some(if ok { AllFeasible } else { Infeasible });
            }
            let flipped = c < 0.0;
            let target = match (set, flipped) {
                (Sublevel, false) | (Superlevel, true) => Sublevel,
                _ => Superlevel,
            };
            one(target, t / c)
        }
        (AtomKind::Add, _) => {
            let c: f64 = consts.iter().sum();
            one(set, t - c)
        }
        (AtomKind::Maximum, Sublevel) => {
            let c = consts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if !consts.is_empty() && c > t {
                Some(Infeasible)
            } else {
                one(Sublevel, t)
            }
        }
        (AtomKind::Maximum, Superlevel) => {
            let c = consts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if !consts.is_empty() && c >= t {
                Some(AllFeasible)
            } else {
                one(Superlevel, t)
            }
        }
        (AtomKind::Minimum, Sublevel) => {
            let c = consts.iter().copied().fold(f64::INFINITY, f64::min);
            if !consts.is_empty() && c <= t {
                Some(AllFeasible)
            } else {
                one(Sublevel, t)
            }
        }
        (AtomKind::Minimum, Superlevel) => {
            let c = consts.iter().copied().fold(f64::INFINITY, f64::min);
            if !consts.is_empty() && c < t {
                Some(Infeasible)
            } else {
                one(Superlevel, t)
            }
        }
        (AtomKind::Exp, Sublevel) => {
            if t > 0.0 {
                one(Sublevel, t.ln())
            } else {
                Some(Infeasible)
            }
        }
        (AtomKind::Exp, Superlevel) => {
            if t > 0.0 {
                one(Superlevel, t.ln())
            } else {
                Some(AllFeasible)
            }
        }
        (AtomKind::Log, Sublevel) => {
            // log(z) <= t needs z <= e^t together with the domain z > 0.
            let mut bounds = vec![(Sublevel, t.exp())];
            if !child_sign.is_strictly_positive() {
                bounds.push((Superlevel, delta));
            }
            Some(Bounds(bounds))
        }
        (AtomKind::Log, Superlevel) => one(Superlevel, t.exp()),
        (AtomKind::Sqrt, Sublevel) => {
            if t < 0.0 {
                Some(Infeasible)
            } else {
                let mut bounds = vec![(Sublevel, t * t)];
                if !child_sign.is_nonnegative() {
                    bounds.push((Superlevel, 0.0));
                }
                Some(Bounds(bounds))
            }
        }
        (AtomKind::Sqrt, Superlevel) => {
            if t > 0.0 {
                one(Superlevel, t * t)
            } else if child_sign.is_nonnegative() {
                Some(AllFeasible)
            } else {
                one(Superlevel, 0.0)
            }
        }
        (AtomKind::Square, _) | (AtomKind::Abs, _) => {
            let level = if matches!(kind, AtomKind::Square) {
                if t >= 0.0 {
                    t.sqrt()
                } else {
                    f64::NAN
                }
            } else {
                t
            };
            if child_sign.is_nonnegative() {
                match set {
                    Sublevel => {
                        if t < 0.0 {
                            Some(Infeasible)
                        } else {
                            one(Sublevel, level)
                        }
                    }
                    Superlevel => {
                        if t <= 0.0 {
                            Some(AllFeasible)
                        } else {
                            one(Superlevel, level)
                        }
                    }
                }
            } else if child_sign.is_nonpositive() {
                match set {
                    Sublevel => {
                        if t < 0.0 {
                            Some(Infeasible)
                        } else {
                            one(Superlevel, -level)
                        }
                    }
                    Superlevel => {
                        if t <= 0.0 {
                            Some(AllFeasible)
                        } else {
                            one(Sublevel, -level)
                        }
                    }
                }
            } else {
                None
            }
        }
        (AtomKind::Ceil, Sublevel) => one(Sublevel, t.floor()),
        (AtomKind::Ceil, Superlevel) => one(Superlevel, t.ceil() - 1.0 + delta),
        (AtomKind::Floor, Sublevel) => one(Sublevel, t.floor() + 1.0 - delta),
        (AtomKind::Floor, Superlevel) => one(Superlevel, t.ceil()),
        (AtomKind::SignFn, Sublevel) => {
            if t >= 1.0 {
                Some(AllFeasible)
            } else if t < -1.0 {
                Some(Infeasible)
            } else {
                one(Sublevel, -delta)
            }
        }
        (AtomKind::SignFn, Superlevel) => {
            if t <= -1.0 {
                Some(AllFeasible)
            } else if t > 1.0 {
                Some(Infeasible)
            } else {
                one(Superlevel, 0.0)
            }
        }
        (AtomKind::PowOdd(p), _) => {
            let root = t.abs().powf(1.0 / (*p as f64)) * t.signum();
            one(set, root)
        }
        _ => None,
    }
}

fn scale_const(kind: &AtomKind, consts: &[f64]) -> Option<f64> {
    match kind {
        AtomKind::Scale(c) => Some(*c),
        AtomKind::Mul => consts.first().copied(),
        _ => None,
    }
}

/// Level-set constraints for quasiconvex/quasiconcave atoms.
pub fn level_constraints(
    kind: &AtomKind,
    args: &[Expr],
    t: f64,
    set: LevelSet,
    opts: &CanonOptions,
    ctx: &mut EmitCtx,
) -> Result<Emission, LevelError> {
    match (kind, set) {
        (AtomKind::Mul, LevelSet::Sublevel) => mul_sublevel(args, t, ctx),
        (AtomKind::Mul, LevelSet::Superlevel) => mul_superlevel(args, t, ctx),
        (AtomKind::Ratio, LevelSet::Sublevel) => ratio_sublevel(args, t),
        (AtomKind::Ratio, LevelSet::Superlevel) => ratio_superlevel(args, t),
        (AtomKind::DistRatio, LevelSet::Sublevel) => dist_ratio_sublevel(args, t),
        (AtomKind::GenLambdaMax, LevelSet::Sublevel) => gen_lambda_max_sublevel(args, t, opts),
        (AtomKind::Length, LevelSet::Sublevel) => length_sublevel(args, t),
        (AtomKind::Rectangle, LevelSet::Superlevel) => rectangle_superlevel(args, t),
        (AtomKind::Card, _) | (AtomKind::Rank, _) => {
            Err(LevelError::NoRepresentation(kind.name().to_string()))
        }
        _ => Err(LevelError::NotApplicable(format!(
            "`{}` has no {:?} canonicalizer",
            kind.name(),
            set
        ))),
    }
}

fn add(a: Expr, b: Expr) -> Result<Expr, ExprError> {
    Expr::apply(AtomKind::Add, vec![a, b])
}

fn neg(a: Expr) -> Result<Expr, ExprError> {
    Expr::apply(AtomKind::Neg, vec![a])
}

fn scale(c: f64, a: Expr) -> Result<Expr, ExprError> {
    Expr::apply(AtomKind::Scale(c), vec![a])
}

fn zero() -> Expr {
    Expr::constant_scalar(0.0).unwrap()
}

fn le(lhs: Expr, rhs: Expr) -> DcpConstraint {
    DcpConstraint::Le { lhs, rhs }
}

/// x - t*y as an expression, omitting the y term when t is zero so the
/// curvature of the emitted constraint stays clean.
fn minus_scaled(x: &Expr, t: f64, y: &Expr) -> Result<Expr, ExprError> {
    if t == 0.0 {
        Ok(x.clone())
    } else {
        add(x.clone(), scale(-t, y.clone())?)
    }
}

fn ratio_sublevel(args: &[Expr], t: f64) -> Result<Emission, LevelError> {
    let (x, y) = (&args[0], &args[1]);
    let (sx, sy) = (x.sign(), y.sign());
    if sy.is_strictly_positive() {
        if sx.is_nonnegative() && t < 0.0 {
            Ok(Emission::Infeasible)
        } else if sx.is_nonpositive() && t >= 0.0 {
            Ok(Emission::none())
        } else {
            // x/y <= t  <=>  x - t*y <= 0 for y > 0.
            Ok(Emission::Constraints(vec![le(minus_scaled(x, t, y)?, zero())]))
        }
    } else if sy.is_strictly_negative() {
        if sx.is_nonpositive() && t < 0.0 {
            Ok(Emission::Infeasible)
        } else if sx.is_nonnegative() && t >= 0.0 {
            Ok(Emission::none())
        } else {
            // x/y <= t  <=>  t*y - x <= 0 for y < 0.
            let lhs = if t == 0.0 {
                neg(x.clone())?
            } else {
                add(scale(t, y.clone())?, neg(x.clone())?)?
            };
            Ok(Emission::Constraints(vec![le(lhs, zero())]))
        }
    } else {
        Err(LevelError::NotApplicable(format!(
            "ratio needs a strictly signed denominator, got {sy}"
        )))
    }
}

fn ratio_superlevel(args: &[Expr], t: f64) -> Result<Emission, LevelError> {
    let (x, y) = (&args[0], &args[1]);
    let (sx, sy) = (x.sign(), y.sign());
    if sy.is_strictly_positive() {
        if sx.is_nonnegative() && t <= 0.0 {
            Ok(Emission::none())
        } else if sx.is_nonpositive() && t > 0.0 {
            Ok(Emission::Infeasible)
        } else {
            // x/y >= t  <=>  t*y <= x for y > 0.
            let lhs = if t == 0.0 { zero() } else { scale(t, y.clone())? };
            Ok(Emission::Constraints(vec![le(lhs, x.clone())]))
        }
    } else if sy.is_strictly_negative() {
        if sx.is_nonpositive() && t <= 0.0 {
            Ok(Emission::none())
        } else if sx.is_nonnegative() && t > 0.0 {
            Ok(Emission::Infeasible)
        } else {
            // x/y >= t  <=>  x <= t*y for y < 0.
            let rhs = if t == 0.0 { zero() } else { scale(t, y.clone())? };
            Ok(Emission::Constraints(vec![le(x.clone(), rhs)]))
        }
    } else {
        Err(LevelError::NotApplicable(format!(
            "ratio needs a strictly signed denominator, got {sy}"
        )))
    }
}

/// Constraints forcing p*q >= s for s > 0 with p, q known nonnegative:
/// hypograph auxiliaries u <= p, v <= q and the rotated-cone inequality
/// |(2 sqrt(s), u - v)| <= u + v, which says u v >= s with u, v >= 0.
fn product_lower_bound(
    p: Expr,
    q: Expr,
    s: f64,
    ctx: &mut EmitCtx,
) -> Result<Emission, LevelError> {
    let u = ctx
        .fresh_scalar("mul_u")
        .map_err(|e| LevelError::NotApplicable(e.to_string()))?;
    let v = ctx
        .fresh_scalar("mul_v")
        .map_err(|e| LevelError::NotApplicable(e.to_string()))?;
    let c = Expr::constant_scalar(2.0 * s.sqrt())?;
    let diff = add(u.clone(), neg(v.clone())?)?;
    let stacked = Expr::apply(AtomKind::VStack, vec![c, diff])?;
    let norm = Expr::apply(AtomKind::Norm2, vec![stacked])?;
    let total = add(u.clone(), v.clone())?;
    Ok(Emission::Constraints(vec![
        le(u, p),
        le(v, q),
        le(norm, total),
    ]))
}

fn mul_sublevel(args: &[Expr], t: f64, ctx: &mut EmitCtx) -> Result<Emission, LevelError> {
    let (a, b) = (&args[0], &args[1]);
    let (sa, sb) = (a.sign(), b.sign());
    let (p, n) = if sa.is_nonnegative() && sb.is_nonpositive() {
        (a, b)
    } else if sa.is_nonpositive() && sb.is_nonnegative() {
        (b, a)
    } else {
        return Err(LevelError::NotApplicable(format!(
            "product is quasiconvex only for opposite argument signs, got {sa}, {sb}"
        )));
    };
    if t >= 0.0 {
        // The product of a nonnegative and a nonpositive value never
        // exceeds zero.
        return Ok(Emission::none());
    }
    // p * n <= t < 0  <=>  p * (-n) >= -t.
    product_lower_bound(p.clone(), neg(n.clone())?, -t, ctx)
}

fn mul_superlevel(args: &[Expr], t: f64, ctx: &mut EmitCtx) -> Result<Emission, LevelError> {
    let (a, b) = (&args[0], &args[1]);
    let (sa, sb) = (a.sign(), b.sign());
    if sa.is_nonnegative() && sb.is_nonnegative() {
        if t <= 0.0 {
            Ok(Emission::none())
        } else {
            product_lower_bound(a.clone(), b.clone(), t, ctx)
        }
    } else if sa.is_nonpositive() && sb.is_nonpositive() {
        if t <= 0.0 {
            Ok(Emission::none())
        } else {
            product_lower_bound(neg(a.clone())?, neg(b.clone())?, t, ctx)
        }
    } else {
        Err(LevelError::NotApplicable(format!(
            "product is quasiconcave only for matching argument signs, got {sa}, {sb}"
        )))
    }
}

fn dist_ratio_sublevel(args: &[Expr], t: f64) -> Result<Emission, LevelError> {
    let x = &args[0];
    let a = args[1].constant_values().unwrap().to_vec();
    let b = args[2].constant_values().unwrap().to_vec();
    let n = a.len();
    if t < 0.0 {
        return Ok(Emission::Infeasible);
    }
    if t >= 1.0 {
        // On the halfspace domain the value never exceeds 1, so the level
        // set is the domain itself: 2 (b - a)' x <= |b|^2 - |a|^2.
        let row: Vec<f64> = (0..n).map(|j| 2.0 * (b[j] - a[j])).collect();
        let m = Expr::constant(row, Shape::matrix(1, n))?;
        let lhs = Expr::apply(AtomKind::MatVec, vec![m, x.clone()])?;
        let rhs_val = b.iter().map(|v| v * v).sum::<f64>() - a.iter().map(|v| v * v).sum::<f64>();
        let rhs = Expr::constant_vector(vec![rhs_val])?;
        return Ok(Emission::Constraints(vec![le(lhs, rhs)]));
    }
    // |x - a| <= t |x - b| with t < 1: completing the square gives the ball
    // |x - c| <= r.
    let den = 1.0 - t * t;
    let c: Vec<f64> = (0..n).map(|j| (a[j] - t * t * b[j]) / den).collect();
    let norm_a2: f64 = a.iter().map(|v| v * v).sum();
    let norm_b2: f64 = b.iter().map(|v| v * v).sum();
    let norm_c2: f64 = c.iter().map(|v| v * v).sum();
    let r2 = norm_c2 - (norm_a2 - t * t * norm_b2) / den;
    let r = r2.max(0.0).sqrt();
    let neg_c = Expr::constant_vector(c.iter().map(|v| -v).collect())?;
    let shifted = add(x.clone(), neg_c)?;
    let lhs = Expr::apply(AtomKind::Norm2, vec![shifted])?;
    Ok(Emission::Constraints(vec![le(
        lhs,
        Expr::constant_scalar(r)?,
    )]))
}

fn gen_lambda_max_sublevel(
    args: &[Expr],
    t: f64,
    opts: &CanonOptions,
) -> Result<Emission, LevelError> {
    let (x, y) = (&args[0], &args[1]);
    let n = match x.shape() {
        Shape::Matrix { rows, .. } => rows,
        _ => unreachable!("shape rule enforces square matrices"),
    };
    let mut constraints = Vec::new();
    // t*Y - X is positive semidefinite.
    let ty = if t == 0.0 {
        neg(x.clone())?
    } else {
        add(scale(t, y.clone())?, neg(x.clone())?)?
    };
    constraints.push(DcpConstraint::Psd { expr: ty });
    // Y - delta*I is positive semidefinite (closing Y > 0).
    let mut diag = vec![0.0; n * n];
    for i in 0..n {
        diag[i * n + i] = -opts.psd_min_eig;
    }
    let shift = Expr::constant(diag, Shape::matrix(n, n))?;
    constraints.push(DcpConstraint::Psd {
        expr: add(y.clone(), shift)?,
    });
    // Symmetry, enforced entrywise unless the shape already carries it.
    for m in [x, y] {
        if matches!(m.shape(), Shape::Matrix { symmetric: true, .. }) {
            continue;
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let upper = Expr::apply(AtomKind::Index(vec![i * n + j]), vec![m.clone()])?;
                let lower = Expr::apply(AtomKind::Index(vec![j * n + i]), vec![m.clone()])?;
                constraints.push(DcpConstraint::Eq {
                    lhs: upper,
                    rhs: lower,
                });
            }
        }
    }
    Ok(Emission::Constraints(constraints))
}

fn length_sublevel(args: &[Expr], t: f64) -> Result<Emission, LevelError> {
    let x = &args[0];
    let n = match x.shape() {
        Shape::Vector(n) => n,
        _ => unreachable!("shape rule enforces a vector"),
    };
    if t < 0.0 {
        return Ok(Emission::Infeasible);
    }
    let k = t.floor() as usize;
    if k >= n {
        return Ok(Emission::none());
    }
    // length(x) <= t forces x_i = 0 for the 1-based indices floor(t)+1..n.
    let idx: Vec<usize> = (k..n).collect();
    let count = idx.len();
    let sel = Expr::apply(AtomKind::Index(idx), vec![x.clone()])?;
    let zeros = if count == 1 {
        Expr::constant_scalar(0.0)?
    } else {
        Expr::constant_vector(vec![0.0; count])?
    };
    Ok(Emission::Constraints(vec![DcpConstraint::Eq {
        lhs: sel,
        rhs: zeros,
    }]))
}

fn rectangle_superlevel(args: &[Expr], t: f64) -> Result<Emission, LevelError> {
    let x = &args[0];
    if t <= 0.0 {
        return Ok(Emission::none());
    }
    if t > 1.0 {
        return Ok(Emission::Infeasible);
    }
    let half = Expr::constant_scalar(0.5)?;
    Ok(Emission::Constraints(vec![
        le(x.clone(), half.clone()),
        le(neg(x.clone())?, half),
    ]))
}
