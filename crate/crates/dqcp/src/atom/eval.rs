//! Numeric evaluators for every atom.

use super::AtomKind;
use crate::expr::Value;
use crate::linalg::{gen_eig_max, jacobi_eigen, Mat};
use crate::shape::Shape;

/// Entries with magnitude at or below this count as zero for the integer
/// atoms `length` and `card`, so that near-zero solver output evaluates the
/// way the canonicalized problem intended.
pub const NONZERO_TOL: f64 = 1e-8;

/// Relative tolerance for the numerical rank of a symmetric matrix.
const RANK_TOL: f64 = 1e-8;

/// Allowed asymmetry in matrix arguments of `gen_lambda_max`.
const SYMMETRY_TOL: f64 = 1e-6;

fn entry(v: &Value, i: usize) -> f64 {
    if v.data.len() == 1 {
        v.data[0]
    } else {
        v.data[i]
    }
}

fn broadcast_shape(args: &[Value]) -> Shape {
    args.iter()
        .map(|v| v.shape)
        .find(|s| !s.is_scalar())
        .unwrap_or(Shape::Scalar)
}

fn elementwise1(arg: &Value, f: impl Fn(f64) -> Result<f64, String>) -> Result<Value, String> {
    let mut data = Vec::with_capacity(arg.data.len());
    for &v in &arg.data {
        data.push(f(v)?);
    }
    Ok(Value {
        shape: arg.shape,
        data,
    })
}

fn to_mat(v: &Value) -> Result<Mat, String> {
    match v.shape {
        Shape::Matrix { rows, cols, .. } => Ok(Mat {
            rows,
            cols,
            data: v.data.clone(),
        }),
        s => Err(format!("expected a matrix, got {s}")),
    }
}

pub fn eval_atom(kind: &AtomKind, args: &[Value]) -> Result<Value, String> {
    match kind {
        AtomKind::Add => {
            let shape = broadcast_shape(args);
            let n = shape.size();
            let mut data = vec![0.0; n];
            for (i, d) in data.iter_mut().enumerate() {
                *d = args.iter().map(|a| entry(a, i)).sum();
            }
            Ok(Value { shape, data })
        }
        AtomKind::Neg => elementwise1(&args[0], |v| Ok(-v)),
        AtomKind::Scale(c) => elementwise1(&args[0], |v| Ok(c * v)),
        AtomKind::Sum => Ok(Value::scalar(args[0].data.iter().sum())),
        AtomKind::Index(indices) => {
            let data: Vec<f64> = indices.iter().map(|&i| args[0].data[i]).collect();
            if data.len() == 1 {
                Ok(Value::scalar(data[0]))
            } else {
                Ok(Value::vector(data))
            }
        }
        AtomKind::Promote(shape) => Ok(Value {
            shape: *shape,
            data: vec![args[0].data[0]; shape.size()],
        }),
        AtomKind::VStack => {
            let mut data = Vec::new();
            for a in args {
                data.extend_from_slice(&a.data);
            }
            Ok(Value::vector(data))
        }
        AtomKind::MatVec => {
            let m = to_mat(&args[0])?;
            Ok(Value::vector(m.matvec(&args[1].data)))
        }
        AtomKind::Abs => elementwise1(&args[0], |v| Ok(v.abs())),
        AtomKind::Square => elementwise1(&args[0], |v| Ok(v * v)),
        AtomKind::SumSquares => Ok(Value::scalar(args[0].data.iter().map(|v| v * v).sum())),
        AtomKind::Norm2 => Ok(Value::scalar(
            args[0].data.iter().map(|v| v * v).sum::<f64>().sqrt(),
        )),
        AtomKind::Exp => elementwise1(&args[0], |v| Ok(v.exp())),
        AtomKind::Maximum => {
            let shape = broadcast_shape(args);
            let n = shape.size();
            let mut data = vec![0.0; n];
            for (i, d) in data.iter_mut().enumerate() {
                *d = args
                    .iter()
                    .map(|a| entry(a, i))
                    .fold(f64::NEG_INFINITY, f64::max);
            }
            Ok(Value { shape, data })
        }
        AtomKind::MaxEntries => Ok(Value::scalar(
            args[0].data.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        )),
        AtomKind::Sqrt => elementwise1(&args[0], |v| {
            if v < 0.0 {
                Err(format!("sqrt of negative value {v}"))
            } else {
                Ok(v.sqrt())
            }
        }),
        AtomKind::Log => elementwise1(&args[0], |v| {
            if v <= 0.0 {
                Err(format!("log of nonpositive value {v}"))
            } else {
                Ok(v.ln())
            }
        }),
        AtomKind::Minimum => {
            let shape = broadcast_shape(args);
            let n = shape.size();
            let mut data = vec![0.0; n];
            for (i, d) in data.iter_mut().enumerate() {
                *d = args
                    .iter()
                    .map(|a| entry(a, i))
                    .fold(f64::INFINITY, f64::min);
            }
            Ok(Value { shape, data })
        }
        AtomKind::MinEntries => Ok(Value::scalar(
            args[0].data.iter().copied().fold(f64::INFINITY, f64::min),
        )),
        AtomKind::Ceil => elementwise1(&args[0], |v| Ok(v.ceil())),
        AtomKind::Floor => elementwise1(&args[0], |v| Ok(v.floor())),
        AtomKind::SignFn => elementwise1(&args[0], |v| Ok(if v < 0.0 { -1.0 } else { 1.0 })),
        AtomKind::PowOdd(p) => {
            let p = *p as i32;
            elementwise1(&args[0], |v| Ok(v.powi(p)))
        }
        AtomKind::Mul => Ok(Value::scalar(args[0].data[0] * args[1].data[0])),
        AtomKind::Ratio => {
            let d = args[1].data[0];
            if d == 0.0 {
                return Err("ratio with denominator 0".into());
            }
            Ok(Value::scalar(args[0].data[0] / d))
        }
        AtomKind::DistRatio => {
            let x = &args[0].data;
            let a = &args[1].data;
            let b = &args[2].data;
            let num: f64 = x
                .iter()
                .zip(a)
                .map(|(xi, ai)| (xi - ai) * (xi - ai))
                .sum::<f64>()
                .sqrt();
            let den: f64 = x
                .iter()
                .zip(b)
                .map(|(xi, bi)| (xi - bi) * (xi - bi))
                .sum::<f64>()
                .sqrt();
            if den == 0.0 {
                return Err("dist_ratio evaluated at x = b".into());
            }
            Ok(Value::scalar(num / den))
        }
        AtomKind::GenLambdaMax => {
            let a = symmetrized(&args[0])?;
            let b = symmetrized(&args[1])?;
            let lam = gen_eig_max(&a, &b)
                .map_err(|e| format!("generalized eigenvalue failed: {e}"))?;
            Ok(Value::scalar(lam))
        }
        AtomKind::Length => {
            let mut len = 0usize;
            for (i, &v) in args[0].data.iter().enumerate() {
                if v.abs() > NONZERO_TOL {
                    len = i + 1;
                }
            }
            Ok(Value::scalar(len as f64))
        }
        AtomKind::Rectangle => {
            let v = args[0].data[0];
            Ok(Value::scalar(if v.abs() <= 0.5 { 1.0 } else { 0.0 }))
        }
        AtomKind::Card => Ok(Value::scalar(
            args[0].data.iter().filter(|v| v.abs() > NONZERO_TOL).count() as f64,
        )),
        AtomKind::Rank => {
            let m = symmetrized(&args[0])?;
            let (eig, _) = jacobi_eigen(&m);
            let scale = eig.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
            Ok(Value::scalar(
                eig.iter().filter(|v| v.abs() > RANK_TOL * scale).count() as f64,
            ))
        }
    }
}

fn symmetrized(v: &Value) -> Result<Mat, String> {
    let m = to_mat(v)?;
    if m.rows != m.cols {
        return Err("expected a square matrix".into());
    }
    let mut out = m.clone();
    let scale = m.max_abs().max(1.0);
    for i in 0..m.rows {
        for j in (i + 1)..m.cols {
            let a = m.get(i, j);
            let b = m.get(j, i);
            if (a - b).abs() > SYMMETRY_TOL * scale {
                return Err(format!(
                    "matrix is not symmetric: entries ({i},{j})={a} and ({j},{i})={b}"
                ));
            }
            let avg = 0.5 * (a + b);
            out.set(i, j, avg);
            out.set(j, i, avg);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn length_is_one_indexed_largest_nonzero() {
        let v = Value::vector(vec![1.0, 0.0, 2.0, 0.0, 0.0]);
        let out = eval_atom(&AtomKind::Length, &[v]).unwrap();
        assert_eq!(out.as_scalar(), Some(3.0));
        let zero = Value::vector(vec![0.0, 0.0]);
        let out = eval_atom(&AtomKind::Length, &[zero]).unwrap();
        assert_eq!(out.as_scalar(), Some(0.0));
    }

    #[test]
    fn ceil_floor_sign() {
        let v = Value::scalar(2.3);
        assert_eq!(
            eval_atom(&AtomKind::Ceil, std::slice::from_ref(&v)).unwrap().as_scalar(),
            Some(3.0)
        );
        assert_eq!(
            eval_atom(&AtomKind::Floor, &[v]).unwrap().as_scalar(),
            Some(2.0)
        );
        assert_eq!(
            eval_atom(&AtomKind::SignFn, &[Value::scalar(0.0)])
                .unwrap()
                .as_scalar(),
            Some(1.0)
        );
        assert_eq!(
            eval_atom(&AtomKind::SignFn, &[Value::scalar(-0.1)])
                .unwrap()
                .as_scalar(),
            Some(-1.0)
        );
    }

    #[test]
    fn ratio_rejects_zero_denominator() {
        let r = eval_atom(&AtomKind::Ratio, &[Value::scalar(1.0), Value::scalar(0.0)]);
        assert!(r.is_err());
    }

    #[test]
    fn rectangle_values() {
        for (x, want) in [(0.0, 1.0), (0.5, 1.0), (0.51, 0.0), (-3.0, 0.0)] {
            let out = eval_atom(&AtomKind::Rectangle, &[Value::scalar(x)]).unwrap();
            assert_eq!(out.as_scalar(), Some(want));
        }
    }

    #[test]
    fn gen_lambda_max_on_scaled_identity() {
        let a = Value::matrix(2, 2, vec![4.0, 0.0, 0.0, 2.0]);
        let b = Value::matrix(2, 2, vec![2.0, 0.0, 0.0, 1.0]);
        let out = eval_atom(&AtomKind::GenLambdaMax, &[a, b]).unwrap();
        assert!((out.as_scalar().unwrap() - 2.0).abs() < 1e-10);
    }

    #[test]
    fn rank_of_psd_matrix() {
        // rank 2 matrix in 3x3.
        let m = Value::matrix(3, 3, vec![2.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        let out = eval_atom(&AtomKind::Rank, &[m]).unwrap();
        assert_eq!(out.as_scalar(), Some(2.0));
    }

    #[test]
    fn broadcast_add_scalar_vector() {
        let out = eval_atom(
            &AtomKind::Add,
            &[Value::scalar(1.0), Value::vector(vec![1.0, 2.0])],
        )
        .unwrap();
        assert_eq!(out.data, vec![2.0, 3.0]);
    }
}
