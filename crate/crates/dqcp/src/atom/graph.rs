//! Conic graph implementations of convex and concave atoms.
//!
//! For a convex atom the emitted rows are feasible iff atom(args) <= out
//! (epigraph); for a concave atom iff atom(args) >= out (hypograph), for
//! arguments in the atom's domain.

use super::AtomKind;
use crate::canon::affine::ConicBuilder;
use crate::conic::{Cone, LinExpr};

pub fn has_graph_implementation(kind: &AtomKind) -> bool {
    matches!(
        kind,
        AtomKind::Abs
            | AtomKind::Square
            | AtomKind::SumSquares
            | AtomKind::Norm2
            | AtomKind::Exp
            | AtomKind::Maximum
            | AtomKind::MaxEntries
            | AtomKind::Sqrt
            | AtomKind::Log
            | AtomKind::Minimum
            | AtomKind::MinEntries
    )
}

fn entry<'c>(chunk: &'c [LinExpr], i: usize) -> &'c LinExpr {
    if chunk.len() == 1 {
        &chunk[0]
    } else {
        &chunk[i]
    }
}

/// Emit the cone rows tying `out` to `atom(args)`. Returns the indices of
/// any internal slack coordinates allocated beyond the output itself.
pub fn emit_graph(
    kind: &AtomKind,
    args: &[Vec<LinExpr>],
    out: &[LinExpr],
    b: &mut ConicBuilder,
) -> Result<Vec<usize>, String> {
    let mut extras = Vec::new();
    match kind {
        AtomKind::Abs => {
            // |u| <= o  <=>  o - u >= 0 and o + u >= 0.
            let mut rows = Vec::with_capacity(2 * out.len());
            for (i, o) in out.iter().enumerate() {
                let u = entry(&args[0], i);
                rows.push(o.minus(u));
                let mut plus = o.clone();
                plus.add_scaled(u, 1.0);
                rows.push(plus);
            }
            let n = rows.len();
            b.add_block(Cone::NonNeg(n), rows);
        }
        AtomKind::Square => {
            // u^2 <= o  <=>  (o, 1/2, u) in the rotated cone.
            for (i, o) in out.iter().enumerate() {
                let u = entry(&args[0], i);
                b.add_block(
                    Cone::Rsoc(3),
                    vec![o.clone(), LinExpr::constant(0.5), u.clone()],
                );
            }
        }
        AtomKind::SumSquares => {
            let mut rows = vec![out[0].clone(), LinExpr::constant(0.5)];
            rows.extend(args[0].iter().cloned());
            let n = rows.len();
            b.add_block(Cone::Rsoc(n), rows);
        }
        AtomKind::Norm2 => {
            let mut rows = vec![out[0].clone()];
            rows.extend(args[0].iter().cloned());
            let n = rows.len();
            b.add_block(Cone::Soc(n), rows);
        }
        AtomKind::Exp => {
            // e^u <= o  <=>  (u, 1, o) in the exponential cone.
            for (i, o) in out.iter().enumerate() {
                let u = entry(&args[0], i);
                b.add_block(
                    Cone::Exp(1),
                    vec![u.clone(), LinExpr::constant(1.0), o.clone()],
                );
            }
        }
        AtomKind::Maximum => {
            let mut rows = Vec::new();
            for (i, o) in out.iter().enumerate() {
                for arg in args {
                    rows.push(o.minus(entry(arg, i)));
                }
            }
            let n = rows.len();
            b.add_block(Cone::NonNeg(n), rows);
        }
        AtomKind::MaxEntries => {
            let rows: Vec<LinExpr> = args[0].iter().map(|u| out[0].minus(u)).collect();
            let n = rows.len();
            b.add_block(Cone::NonNeg(n), rows);
        }
        AtomKind::Sqrt => {
            // o <= sqrt(u)  <=>  exists s: o <= s, s^2 <= u (and u >= 0).
            for (i, o) in out.iter().enumerate() {
                let u = entry(&args[0], i);
                let s_off = b.new_aux(1, "sqrt_slack");
                extras.push(s_off);
                let s = LinExpr::variable(s_off);
                b.add_block(Cone::NonNeg(1), vec![s.minus(o)]);
                b.add_block(Cone::Rsoc(3), vec![u.clone(), LinExpr::constant(0.5), s]);
            }
        }
        AtomKind::Log => {
            // o <= log(u)  <=>  (o, 1, u) in the exponential cone.
            for (i, o) in out.iter().enumerate() {
                let u = entry(&args[0], i);
                b.add_block(
                    Cone::Exp(1),
                    vec![o.clone(), LinExpr::constant(1.0), u.clone()],
                );
            }
        }
        AtomKind::Minimum => {
            let mut rows = Vec::new();
            for (i, o) in out.iter().enumerate() {
                for arg in args {
                    rows.push(entry(arg, i).minus(o));
                }
            }
            let n = rows.len();
            b.add_block(Cone::NonNeg(n), rows);
        }
        AtomKind::MinEntries => {
            let rows: Vec<LinExpr> = args[0].iter().map(|u| u.minus(&out[0])).collect();
            let n = rows.len();
            b.add_block(Cone::NonNeg(n), rows);
        }
        other => return Err(format!("`{}` has no conic graph implementation", other.name())),
    }
    Ok(extras)
}
