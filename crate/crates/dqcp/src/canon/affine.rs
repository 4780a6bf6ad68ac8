//! Flattening DCP constraints to conic form.
//!
//! Affine expressions become rows; every non-affine atom occurrence
//! introduces auxiliary variables and its conic graph implementation
//! (epigraph rows for convex atoms, hypograph rows for concave ones).
//! Shared subexpressions share their auxiliaries; auxiliary numbering
//! follows traversal order, so repeated generation is reproducible.

use super::{CanonError, CanonOptions, DcpConstraint};
use crate::analysis::curvature_of;
use crate::atom::{graph, AtomKind};
use crate::conic::{AuxDef, Cone, ConicProblem, LinExpr, VarEntry, VarSource};
use crate::expr::{Expr, NodeId, NodeKind};
use crate::shape::Shape;
use crate::sign::Sign;
use std::collections::HashMap;

const SQRT2: f64 = std::f64::consts::SQRT_2;

pub struct ConicBuilder {
    num_vars: usize,
    rows: Vec<LinExpr>,
    blocks: Vec<Cone>,
    var_table: Vec<VarEntry>,
    aux_defs: Vec<AuxDef>,
    var_offsets: HashMap<NodeId, usize>,
    memo: HashMap<NodeId, Vec<LinExpr>>,
    aux_counter: usize,
}

impl Default for ConicBuilder {
    fn default() -> Self {
        ConicBuilder::new()
    }
}

impl ConicBuilder {
    pub fn new() -> ConicBuilder {
        ConicBuilder {
            num_vars: 0,
            rows: Vec::new(),
            blocks: Vec::new(),
            var_table: Vec::new(),
            aux_defs: Vec::new(),
            var_offsets: HashMap::new(),
            memo: HashMap::new(),
            aux_counter: 0,
        }
    }

    fn register_variable(&mut self, v: &Expr, source: VarSource) {
        if self.var_offsets.contains_key(&v.id()) {
            return;
        }
        let offset = self.num_vars;
        self.num_vars += v.shape().size();
        self.var_offsets.insert(v.id(), offset);
        self.var_table.push(VarEntry {
            name: v.variable_name().unwrap_or("?").to_string(),
            source,
            offset,
            shape: v.shape(),
        });
    }

    /// Allocate auxiliary coordinates, returning their offset.
    pub fn new_aux(&mut self, count: usize, hint: &str) -> usize {
        let offset = self.num_vars;
        self.num_vars += count;
        self.var_table.push(VarEntry {
            name: format!("__aux{}:{hint}", self.aux_counter),
            source: VarSource::Aux,
            offset,
            shape: if count == 1 {
                Shape::Scalar
            } else {
                Shape::Vector(count)
            },
        });
        self.aux_counter += 1;
        offset
    }

    pub fn add_block(&mut self, cone: Cone, rows: Vec<LinExpr>) {
        assert_eq!(cone.dim(), rows.len(), "cone block dimension mismatch");
        self.blocks.push(cone);
        self.rows.extend(rows);
    }

    pub fn finish(self) -> ConicProblem {
        ConicProblem {
            num_vars: self.num_vars,
            rows: self.rows,
            blocks: self.blocks,
            var_table: self.var_table,
            aux_defs: self.aux_defs,
            trivially_infeasible: false,
        }
    }
}

fn chunk_entry(chunk: &[LinExpr], i: usize) -> &LinExpr {
    if chunk.len() == 1 {
        &chunk[0]
    } else {
        &chunk[i]
    }
}

/// Flatten an expression to one affine functional per entry, introducing
/// graph implementations for non-affine atoms.
pub fn canon_expr(e: &Expr, b: &mut ConicBuilder) -> Result<Vec<LinExpr>, CanonError> {
    if let Some(hit) = b.memo.get(&e.id()) {
        return Ok(hit.clone());
    }
    let chunk = match e.kind() {
        NodeKind::Variable { .. } => {
            let offset = *b
                .var_offsets
                .get(&e.id())
                .ok_or_else(|| CanonError::Internal(format!("unregistered variable {e}")))?;
            (0..e.shape().size())
                .map(|k| LinExpr::variable(offset + k))
                .collect()
        }
        NodeKind::Constant { values } => values.iter().map(|&v| LinExpr::constant(v)).collect(),
        NodeKind::Atom { atom, args } => {
            let arg_chunks: Vec<Vec<LinExpr>> = args
                .iter()
                .map(|a| canon_expr(a, b))
                .collect::<Result<_, _>>()?;
            match atom {
                AtomKind::Add => {
                    let n = e.shape().size();
                    (0..n)
                        .map(|i| {
                            let mut row = LinExpr::constant(0.0);
                            for c in &arg_chunks {
                                row.add_scaled(chunk_entry(c, i), 1.0);
                            }
                            row
                        })
                        .collect()
                }
                AtomKind::Neg => arg_chunks[0].iter().map(|l| l.scaled(-1.0)).collect(),
                AtomKind::Scale(c) => arg_chunks[0].iter().map(|l| l.scaled(*c)).collect(),
                AtomKind::Sum => {
                    let mut row = LinExpr::constant(0.0);
                    for l in &arg_chunks[0] {
                        row.add_scaled(l, 1.0);
                    }
                    vec![row]
                }
                AtomKind::Index(indices) => indices
                    .iter()
                    .map(|&i| arg_chunks[0][i].clone())
                    .collect(),
                AtomKind::Promote(shape) => {
                    vec![arg_chunks[0][0].clone(); shape.size()]
                }
                AtomKind::VStack => arg_chunks.into_iter().flatten().collect(),
                AtomKind::MatVec => {
                    let values = args[0]
                        .constant_values()
                        .ok_or_else(|| CanonError::Internal("matvec matrix not constant".into()))?;
                    let (rows, cols) = match args[0].shape() {
                        Shape::Matrix { rows, cols, .. } => (rows, cols),
                        _ => unreachable!(),
                    };
                    (0..rows)
                        .map(|i| {
                            let mut row = LinExpr::constant(0.0);
                            for j in 0..cols {
                                row.add_scaled(&arg_chunks[1][j], values[i * cols + j]);
                            }
                            row
                        })
                        .collect()
                }
                kind if graph::has_graph_implementation(kind) => {
                    let n = e.shape().size();
                    let offset = b.new_aux(n, kind.name());
                    let out: Vec<LinExpr> =
                        (0..n).map(|k| LinExpr::variable(offset + k)).collect();
                    let extras = graph::emit_graph(kind, &arg_chunks, &out, b)
                        .map_err(CanonError::Internal)?;
                    b.aux_defs.push(AuxDef {
                        atom: kind.clone(),
                        args: arg_chunks,
                        out_offset: offset,
                        out_len: n,
                        extras,
                    });
                    out
                }
                kind => return Err(CanonError::UnsupportedAtom(kind.name().to_string())),
            }
        }
    };
    b.memo.insert(e.id(), chunk.clone());
    Ok(chunk)
}

/// Canonicalize DCP constraints over the given user variables into a conic
/// feasibility problem. Declared variable signs become cone rows (strict
/// signs closed with delta_strict); symmetric-flagged matrix variables get
/// entrywise symmetry equalities.
pub fn dcp_to_conic(
    constraints: &[DcpConstraint],
    user_vars: &[Expr],
    opts: &CanonOptions,
) -> Result<ConicProblem, CanonError> {
    let mut b = ConicBuilder::new();
    for v in user_vars {
        b.register_variable(v, VarSource::User(v.id()));
    }
    // Auxiliary expression-level variables introduced by canonicalizers.
    for c in constraints {
        for e in constraint_exprs(c) {
            for v in e.variables() {
                if !b.var_offsets.contains_key(&v.id()) {
                    b.register_variable(&v, VarSource::Aux);
                }
            }
        }
    }

    // Declared signs and symmetry.
    for v in user_vars {
        let offset = b.var_offsets[&v.id()];
        let size = v.shape().size();
        match v.declared_sign().unwrap_or(Sign::Unknown) {
            Sign::Unknown => {}
            Sign::Zero => {
                let rows = (0..size).map(|k| LinExpr::variable(offset + k)).collect();
                b.add_block(Cone::Zero(size), rows);
            }
            Sign::Nonnegative => {
                let rows = (0..size).map(|k| LinExpr::variable(offset + k)).collect();
                b.add_block(Cone::NonNeg(size), rows);
            }
            Sign::Nonpositive => {
                let rows = (0..size)
                    .map(|k| LinExpr::variable(offset + k).scaled(-1.0))
                    .collect();
                b.add_block(Cone::NonNeg(size), rows);
            }
            Sign::Positive => {
                let rows = (0..size)
                    .map(|k| {
                        let mut r = LinExpr::variable(offset + k);
                        r.constant -= opts.delta_strict;
                        r
                    })
                    .collect();
                b.add_block(Cone::NonNeg(size), rows);
            }
            Sign::Negative => {
                let rows = (0..size)
                    .map(|k| {
                        let mut r = LinExpr::variable(offset + k).scaled(-1.0);
                        r.constant -= opts.delta_strict;
                        r
                    })
                    .collect();
                b.add_block(Cone::NonNeg(size), rows);
            }
        }
        if let Shape::Matrix {
            rows: n,
            symmetric: true,
            ..
        } = v.shape()
        {
            let mut rows = Vec::new();
            for i in 0..n {
                for j in (i + 1)..n {
                    let mut r = LinExpr::variable(offset + i * n + j);
                    r.add_scaled(&LinExpr::variable(offset + j * n + i), -1.0);
                    rows.push(r);
                }
            }
            if !rows.is_empty() {
                let m = rows.len();
                b.add_block(Cone::Zero(m), rows);
            }
        }
    }

    for c in constraints {
        validate_dcp(c)?;
        match c {
            DcpConstraint::Le { lhs, rhs } => {
                let l = canon_expr(lhs, &mut b)?;
                let r = canon_expr(rhs, &mut b)?;
                let n = l.len().max(r.len());
                let rows: Vec<LinExpr> = (0..n)
                    .map(|i| chunk_entry(&r, i).minus(chunk_entry(&l, i)))
                    .collect();
                b.add_block(Cone::NonNeg(n), rows);
            }
            DcpConstraint::Eq { lhs, rhs } => {
                let l = canon_expr(lhs, &mut b)?;
                let r = canon_expr(rhs, &mut b)?;
                let n = l.len().max(r.len());
                let rows: Vec<LinExpr> = (0..n)
                    .map(|i| chunk_entry(&l, i).minus(chunk_entry(&r, i)))
                    .collect();
                b.add_block(Cone::Zero(n), rows);
            }
            DcpConstraint::Psd { expr } => {
                let n = match expr.shape() {
                    Shape::Matrix { rows, cols, .. } if rows == cols => rows,
                    s => {
                        return Err(CanonError::NotDcp(format!(
                            "psd constraint requires a square matrix, got {s}"
                        )))
                    }
                };
                let m = canon_expr(expr, &mut b)?;
                // Scaled lower triangle of the symmetrized matrix.
                let mut rows = Vec::with_capacity(n * (n + 1) / 2);
                for j in 0..n {
                    for i in j..n {
                        if i == j {
                            rows.push(m[i * n + i].clone());
                        } else {
                            let mut r = m[i * n + j].scaled(SQRT2 / 2.0);
                            r.add_scaled(&m[j * n + i], SQRT2 / 2.0);
                            rows.push(r);
                        }
                    }
                }
                b.add_block(Cone::Psd(n), rows);
            }
        }
    }

    Ok(b.finish())
}

fn constraint_exprs(c: &DcpConstraint) -> Vec<&Expr> {
    match c {
        DcpConstraint::Le { lhs, rhs } | DcpConstraint::Eq { lhs, rhs } => vec![lhs, rhs],
        DcpConstraint::Psd { expr } => vec![expr],
    }
}

fn validate_dcp(c: &DcpConstraint) -> Result<(), CanonError> {
    match c {
        DcpConstraint::Le { lhs, rhs } => {
            let (lf, rf) = (curvature_of(lhs), curvature_of(rhs));
            if !lf.is_convex || !rf.is_concave {
                return Err(CanonError::NotDcp(format!(
                    "{lhs} <= {rhs}: {} <= {}",
                    lf.describe(),
                    rf.describe()
                )));
            }
        }
        DcpConstraint::Eq { lhs, rhs } => {
            let (lf, rf) = (curvature_of(lhs), curvature_of(rhs));
            if !lf.is_affine || !rf.is_affine {
                return Err(CanonError::NotDcp(format!(
                    "{lhs} == {rhs}: {} == {}",
                    lf.describe(),
                    rf.describe()
                )));
            }
        }
        DcpConstraint::Psd { expr } => {
            if !curvature_of(expr).is_affine {
                return Err(CanonError::NotDcp(format!(
                    "psd argument must be affine, got {}",
                    curvature_of(expr).describe()
                )));
            }
        }
    }
    Ok(())
}
