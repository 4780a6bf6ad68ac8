//! Shared helpers for the integration suites: seeded sampling, a small
//! independent linear solver for oracles, conic membership checks, and a
//! corpus of problems.

#![allow(dead_code)]

use dqcp::atom::AtomKind;
use dqcp::conic::ConicProblem;
use dqcp::expr::{Assignment, Expr};
use dqcp::problem::{Constraint, Problem, RelOp, Sense};
use dqcp::shape::Shape;
use dqcp::sign::Sign;
use rand::rngs::StdRng;
use rand::SeedableRng;

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn var(name: &str, sign: Sign) -> Expr {
    Expr::variable(name, Shape::Scalar, sign).unwrap()
}

pub fn vvar(name: &str, n: usize, sign: Sign) -> Expr {
    Expr::variable(name, Shape::Vector(n), sign).unwrap()
}

pub fn app(kind: AtomKind, args: Vec<Expr>) -> Expr {
    Expr::apply(kind, args).unwrap()
}

pub fn cst(v: f64) -> Expr {
    Expr::constant_scalar(v).unwrap()
}

/// Solve a dense linear system by Gaussian elimination with partial
/// pivoting. Deliberately independent of the crate's linear algebra so it
/// can serve as an oracle.
pub fn gauss_solve(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(row, &bi)| {
            let mut r = row.clone();
            r.push(bi);
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| {
            m[i][col]
                .abs()
                .partial_cmp(&m[j][col].abs())
                .unwrap()
        })?;
        if m[pivot][col].abs() < 1e-12 {
            return None;
        }
        m.swap(col, pivot);
        for row in 0..n {
            if row == col {
                continue;
            }
            let f = m[row][col] / m[col][col];
            if f == 0.0 {
                continue;
            }
            for k in col..=n {
                m[row][k] -= f * m[col][k];
            }
        }
    }
    Some((0..n).map(|i| m[i][n] / m[i][i]).collect())
}

/// Least squares min |A x - b|^2 over x supported on the first j columns,
/// via normal equations and the Gaussian oracle. Returns the mean square
/// error over the number of rows.
pub fn lstsq_mse_on_prefix(a: &[Vec<f64>], b: &[f64], j: usize) -> f64 {
    let m = a.len();
    if j == 0 {
        return b.iter().map(|v| v * v).sum::<f64>() / m as f64;
    }
    // Normal equations on the first j columns, with a whisper of
    // regularization against exact singularity.
    let mut g = vec![vec![0.0; j]; j];
    let mut rhs = vec![0.0; j];
    for r in 0..m {
        for c1 in 0..j {
            rhs[c1] += a[r][c1] * b[r];
            for c2 in 0..j {
                g[c1][c2] += a[r][c1] * a[r][c2];
            }
        }
    }
    for (i, row) in g.iter_mut().enumerate() {
        row[i] += 1e-12;
    }
    let x = gauss_solve(&g, &rhs).expect("normal equations solvable");
    let mut err = 0.0;
    for r in 0..m {
        let pred: f64 = (0..j).map(|c| a[r][c] * x[c]).sum();
        let d = pred - b[r];
        err += d * d;
    }
    err / m as f64
}

/// Distance-based membership check for the cone product.
pub fn in_cones(problem: &ConicProblem, x: &[f64], tol: f64) -> bool {
    let s = problem.affine_image(x);
    problem.cone_distance(&s) <= tol
}

/// Extend a user assignment to the full conic coordinate space using the
/// recorded auxiliary definitions (outputs take the exact atom value).
pub fn extend_assignment(problem: &ConicProblem, user: &Assignment) -> Vec<f64> {
    use dqcp::conic::VarSource;
    let mut x = vec![0.0; problem.num_vars];
    for e in &problem.var_table {
        if let VarSource::User(id) = e.source {
            let v = user.get(id).expect("assignment covers all user variables");
            x[e.offset..e.offset + e.shape.size()].copy_from_slice(&v.data);
        }
    }
    for def in &problem.aux_defs {
        let args: Vec<dqcp::expr::Value> = def
            .args
            .iter()
            .map(|chunk| {
                let data: Vec<f64> = chunk.iter().map(|l| l.eval(&x)).collect();
                if data.len() == 1 {
                    dqcp::expr::Value::scalar(data[0])
                } else {
                    dqcp::expr::Value::vector(data)
                }
            })
            .collect();
        let out = dqcp::atom::eval::eval_atom(&def.atom, &args).expect("aux atom evaluates");
        x[def.out_offset..def.out_offset + def.out_len].copy_from_slice(&out.data);
        // Internal slacks: the sqrt hypograph slack equals the output.
        for (k, &slot) in def.extras.iter().enumerate() {
            x[slot] = out.data[k.min(out.data.len() - 1)];
        }
    }
    x
}

pub struct CorpusProblem {
    pub name: &'static str,
    pub problem: Problem,
    pub dcp: bool,
}

/// A corpus of compliant problems spanning the atom library.
pub fn problem_corpus() -> Vec<CorpusProblem> {
    use AtomKind::*;
    let mut out = Vec::new();

    // Quasiconvex ratio program.
    {
        let x = var("x", Sign::Unknown);
        let y = var("y", Sign::Positive);
        let obj = app(Neg, vec![app(Ratio, vec![app(Sqrt, vec![x.clone()]), y.clone()])]);
        let con = Constraint {
            lhs: app(Exp, vec![x]),
            op: RelOp::Le,
            rhs: y,
        };
        out.push(CorpusProblem {
            name: "ratio-program",
            problem: Problem::new(Sense::Minimize, obj, vec![con]).unwrap(),
            dcp: false,
        });
    }
    // Least squares.
    {
        let x = vvar("x", 3, Sign::Unknown);
        let a = Expr::constant(
            vec![1.0, 0.5, 0.0, -0.5, 2.0, 1.0, 0.0, 1.0, -1.0],
            Shape::matrix(3, 3),
        )
        .unwrap();
        let b = Expr::constant_vector(vec![-1.0, 2.0, 0.5]).unwrap();
        let resid = app(Add, vec![app(MatVec, vec![a, x.clone()]), app(Neg, vec![b])]);
        let obj = app(SumSquares, vec![resid]);
        out.push(CorpusProblem {
            name: "least-squares",
            problem: Problem::new(Sense::Minimize, obj, vec![]).unwrap(),
            dcp: true,
        });
    }
    // Norm minimization over a halfspace.
    {
        let x = vvar("x", 3, Sign::Unknown);
        let obj = app(Norm2, vec![x.clone()]);
        let con = Constraint {
            lhs: app(Sum, vec![x]),
            op: RelOp::Ge,
            rhs: cst(1.0),
        };
        out.push(CorpusProblem {
            name: "norm-over-halfspace",
            problem: Problem::new(Sense::Minimize, obj, vec![con]).unwrap(),
            dcp: true,
        });
    }
    // Smooth convex mix.
    {
        let x = var("x", Sign::Unknown);
        let y = var("y", Sign::Unknown);
        let obj = app(Add, vec![app(Exp, vec![x.clone()]), app(Square, vec![y])]);
        let con = Constraint {
            lhs: x,
            op: RelOp::Ge,
            rhs: cst(-1.0),
        };
        out.push(CorpusProblem {
            name: "exp-plus-square",
            problem: Problem::new(Sense::Minimize, obj, vec![con]).unwrap(),
            dcp: true,
        });
    }
    // Concave maximization.
    {
        let y = var("y", Sign::Positive);
        let obj = app(Log, vec![y.clone()]);
        let con = Constraint {
            lhs: y,
            op: RelOp::Le,
            rhs: cst(5.0),
        };
        out.push(CorpusProblem {
            name: "log-maximization",
            problem: Problem::new(Sense::Maximize, obj, vec![con]).unwrap(),
            dcp: true,
        });
    }
    // Piecewise-linear min-max.
    {
        let x = var("x", Sign::Unknown);
        let y = var("y", Sign::Unknown);
        let obj = app(Maximum, vec![x.clone(), y.clone()]);
        let con = Constraint {
            lhs: app(Add, vec![x, y]),
            op: RelOp::Ge,
            rhs: cst(2.0),
        };
        out.push(CorpusProblem {
            name: "min-max",
            problem: Problem::new(Sense::Minimize, obj, vec![con]).unwrap(),
            dcp: true,
        });
    }
    // Product maximization (quasiconcave).
    {
        let x = var("x", Sign::Nonnegative);
        let y = var("y", Sign::Nonnegative);
        let obj = app(Mul, vec![x.clone(), y.clone()]);
        let con = Constraint {
            lhs: app(Add, vec![x, y]),
            op: RelOp::Le,
            rhs: cst(2.0),
        };
        out.push(CorpusProblem {
            name: "product-maximization",
            problem: Problem::new(Sense::Maximize, obj, vec![con]).unwrap(),
            dcp: false,
        });
    }
    // Integer-valued objective.
    {
        let x = var("x", Sign::Unknown);
        let obj = app(Ceil, vec![x.clone()]);
        let con = Constraint {
            lhs: x,
            op: RelOp::Ge,
            rhs: cst(1.2),
        };
        out.push(CorpusProblem {
            name: "ceil-objective",
            problem: Problem::new(Sense::Minimize, obj, vec![con]).unwrap(),
            dcp: false,
        });
    }
    out
}
