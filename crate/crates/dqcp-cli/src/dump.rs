//! Text dump of a canonicalized conic problem: variables, cone blocks,
//! affine rows, and the auxiliary-variable table.

use dqcp::conic::{ConicProblem, VarSource};
use std::fmt::Write;

/// 12 significant digits.
pub fn fmt12(v: f64) -> String {
    format!("{v:.11e}")
}

fn coord_label(p: &ConicProblem, i: usize) -> String {
    for e in &p.var_table {
        let size = e.shape.size();
        if i >= e.offset && i < e.offset + size {
            return if size == 1 {
                e.name.clone()
            } else {
                format!("{}[{}]", e.name, i - e.offset)
            };
        }
    }
    format!("v{i}")
}

pub fn render(p: &ConicProblem, t: f64) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "conic feasibility problem at t = {}", fmt12(t));
    if p.trivially_infeasible {
        let _ = writeln!(out, "status: trivially infeasible (level below attainable values)");
        return out;
    }
    let _ = writeln!(
        out,
        "variables: {} coordinates ({} entries)",
        p.num_vars,
        p.var_table.len()
    );
    for e in &p.var_table {
        let kind = match e.source {
            VarSource::User(_) => "user",
            VarSource::Aux => "aux",
        };
        let _ = writeln!(out, "  {:<24} {} at {} ({kind})", e.name, e.shape, e.offset);
    }
    let _ = writeln!(out, "cone blocks: {}", p.blocks.len());
    let mut at = 0usize;
    for c in &p.blocks {
        let d = c.dim();
        let _ = writeln!(out, "  {:<16} rows {}..{}", c.to_string(), at, at + d);
        at += d;
    }
    let _ = writeln!(out, "rows (A x + b, stacked into the blocks above):");
    for (i, r) in p.rows.iter().enumerate() {
        let mut line = String::new();
        for (&j, &c) in &r.coeffs {
            if c == 0.0 {
                continue;
            }
            let _ = write!(line, " {} {}*{}", if c < 0.0 { "-" } else { "+" }, fmt12(c.abs()), coord_label(p, j));
        }
        if r.constant != 0.0 || line.is_empty() {
            let _ = write!(
                line,
                " {} {}",
                if r.constant < 0.0 { "-" } else { "+" },
                fmt12(r.constant.abs())
            );
        }
        let _ = writeln!(out, "  [{i:>3}]{line}");
    }
    if !p.aux_defs.is_empty() {
        let _ = writeln!(out, "auxiliary definitions:");
        for d in &p.aux_defs {
            let _ = writeln!(
                out,
                "  {} <- {} of {} argument(s) at coords {}..{}{}",
                coord_label(p, d.out_offset),
                d.atom.name(),
                d.args.len(),
                d.out_offset,
                d.out_offset + d.out_len,
                if d.extras.is_empty() {
                    String::new()
                } else {
                    format!(" (slack coords {:?})", d.extras)
                }
            );
        }
    }
    out
}
