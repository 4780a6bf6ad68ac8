//! Shape, sign, curvature, and monotonicity rules for each atom.

use super::{AtomKind, CurvatureFlags, Monotonicity};
use crate::shape::Shape;
use crate::sign::Sign;

/// Common shape of a list of arguments, allowing scalars to broadcast
/// against one non-scalar shape.
fn broadcast(shapes: &[Shape]) -> Result<Shape, String> {
    let mut common: Option<Shape> = None;
    for s in shapes {
        if s.is_scalar() {
            continue;
        }
        match common {
            None => common = Some(*s),
            Some(c) if c.dims_eq(s) => {}
            Some(c) => {
                return Err(format!("incompatible shapes {c} and {s}"));
            }
        }
    }
    Ok(common.unwrap_or(Shape::Scalar))
}

pub(super) fn result_shape(kind: &AtomKind, args: &[Shape]) -> Result<Shape, String> {
    match kind {
        AtomKind::Add | AtomKind::Maximum | AtomKind::Minimum => broadcast(args),
        AtomKind::Neg
        | AtomKind::Abs
        | AtomKind::Square
        | AtomKind::Exp
        | AtomKind::Sqrt
        | AtomKind::Log
        | AtomKind::Ceil
        | AtomKind::Floor
        | AtomKind::SignFn
        | AtomKind::PowOdd(_) => Ok(args[0]),
        AtomKind::Scale(c) => {
            if !c.is_finite() {
                return Err("scale constant must be finite".into());
            }
            Ok(args[0])
        }
        AtomKind::Sum | AtomKind::MaxEntries | AtomKind::MinEntries => Ok(Shape::Scalar),
        AtomKind::Index(indices) => {
            if args[0].is_scalar() {
                return Err("index requires a vector or matrix argument".into());
            }
            if indices.is_empty() {
                return Err("index requires at least one position".into());
            }
            let size = args[0].size();
            for &i in indices {
                if i >= size {
                    return Err(format!("index {i} out of bounds for {}", args[0]));
                }
            }
            if indices.len() == 1 {
                Ok(Shape::Scalar)
            } else {
                Ok(Shape::Vector(indices.len()))
            }
        }
        AtomKind::Promote(target) => {
            if !args[0].is_scalar() {
                return Err("promote requires a scalar argument".into());
            }
            if !target.is_valid() {
                return Err(format!("invalid promote target {target}"));
            }
            Ok(*target)
        }
        AtomKind::VStack => {
            let mut total = 0;
            for s in args {
                match s {
                    Shape::Scalar => total += 1,
                    Shape::Vector(n) => total += n,
                    Shape::Matrix { .. } => {
                        return Err("vstack accepts scalars and vectors only".into())
                    }
                }
            }
            Ok(Shape::Vector(total))
        }
        AtomKind::MatVec => match (args[0], args[1]) {
            (Shape::Matrix { rows, cols, .. }, Shape::Vector(n)) if cols == n => {
                Ok(Shape::Vector(rows))
            }
            (a, b) => Err(format!("matvec requires matrix(m,n) and vector(n), got {a}, {b}")),
        },
        AtomKind::SumSquares | AtomKind::Norm2 => match args[0] {
            Shape::Vector(_) => Ok(Shape::Scalar),
            s => Err(format!("expected a vector argument, got {s}")),
        },
        AtomKind::Mul | AtomKind::Ratio => {
            if args[0].is_scalar() && args[1].is_scalar() {
                Ok(Shape::Scalar)
            } else {
                Err(format!(
                    "{} requires scalar arguments, got {}, {}",
                    kind.name(),
                    args[0],
                    args[1]
                ))
            }
        }
        AtomKind::DistRatio => match (args[0], args[1], args[2]) {
            (Shape::Vector(n), Shape::Vector(a), Shape::Vector(b)) if n == a && a == b => {
                Ok(Shape::Scalar)
            }
            _ => Err("dist_ratio requires three vectors of equal length".into()),
        },
        AtomKind::GenLambdaMax => match (args[0], args[1]) {
            (a, b) if a.is_square_matrix() && b.is_square_matrix() && a.dims_eq(&b) => {
                Ok(Shape::Scalar)
            }
            (a, b) => Err(format!(
                "gen_lambda_max requires square matrices of equal size, got {a}, {b}"
            )),
        },
        AtomKind::Length | AtomKind::Card => match args[0] {
            Shape::Vector(_) => Ok(Shape::Scalar),
            s => Err(format!("expected a vector argument, got {s}")),
        },
        AtomKind::Rectangle => match args[0] {
            Shape::Scalar => Ok(Shape::Scalar),
            s => Err(format!("rectangle requires a scalar argument, got {s}")),
        },
        AtomKind::Rank => match args[0] {
            s if s.is_square_matrix() => Ok(Shape::Scalar),
            s => Err(format!("rank requires a square matrix argument, got {s}")),
        },
    }
}

pub(super) fn result_sign(kind: &AtomKind, args: &[Sign]) -> Sign {
    match kind {
        AtomKind::Add => args.iter().copied().reduce(Sign::add).unwrap_or(Sign::Zero),
        AtomKind::Neg => args[0].negate(),
        AtomKind::Scale(c) => Sign::of_value(*c).mul(args[0]),
        AtomKind::Sum | AtomKind::Index(_) | AtomKind::Promote(_) => args[0],
        AtomKind::VStack => args
            .iter()
            .copied()
            .reduce(Sign::join)
            .unwrap_or(Sign::Zero),
        AtomKind::MatVec => {
            // Entries are sums of products; a row may be all zero, so strict
            // signs weaken.
            match args[0].mul(args[1]) {
                Sign::Positive => Sign::Nonnegative,
                Sign::Negative => Sign::Nonpositive,
                s => s,
            }
        }
        AtomKind::Abs | AtomKind::Square | AtomKind::SumSquares | AtomKind::Norm2 => args[0].abs(),
        AtomKind::Exp => Sign::Positive,
        AtomKind::Maximum => args.iter().copied().reduce(Sign::max).unwrap(),
        AtomKind::MaxEntries | AtomKind::MinEntries => args[0],
        AtomKind::Sqrt => match args[0] {
            Sign::Zero => Sign::Zero,
            Sign::Positive => Sign::Positive,
            _ => Sign::Nonnegative,
        },
        AtomKind::Log => Sign::Unknown,
        AtomKind::Minimum => args.iter().copied().reduce(Sign::min).unwrap(),
        AtomKind::Ceil => match args[0] {
            Sign::Zero => Sign::Zero,
            Sign::Positive => Sign::Positive,
            Sign::Nonnegative => Sign::Nonnegative,
            Sign::Negative | Sign::Nonpositive => Sign::Nonpositive,
            Sign::Unknown => Sign::Unknown,
        },
        AtomKind::Floor => match args[0] {
            Sign::Zero => Sign::Zero,
            Sign::Positive | Sign::Nonnegative => Sign::Nonnegative,
            Sign::Negative => Sign::Negative,
            Sign::Nonpositive => Sign::Nonpositive,
            Sign::Unknown => Sign::Unknown,
        },
        AtomKind::SignFn => match args[0] {
            // -1 for negative inputs, +1 otherwise (zero maps to +1).
            Sign::Zero | Sign::Positive | Sign::Nonnegative => Sign::Positive,
            Sign::Negative => Sign::Negative,
            Sign::Nonpositive | Sign::Unknown => Sign::Unknown,
        },
        AtomKind::PowOdd(_) => args[0],
        AtomKind::Mul => args[0].mul(args[1]),
        AtomKind::Ratio => args[0].div(args[1]),
        AtomKind::DistRatio => Sign::Nonnegative,
        AtomKind::GenLambdaMax => Sign::Unknown,
        AtomKind::Length | AtomKind::Card => match args[0] {
            Sign::Zero => Sign::Zero,
            Sign::Positive | Sign::Negative => Sign::Positive,
            _ => Sign::Nonnegative,
        },
        AtomKind::Rectangle => match args[0] {
            Sign::Zero => Sign::Positive,
            _ => Sign::Nonnegative,
        },
        AtomKind::Rank => Sign::Nonnegative,
    }
}

pub(super) fn curvature(kind: &AtomKind, arg_signs: &[Sign]) -> CurvatureFlags {
    match kind {
        AtomKind::Add
        | AtomKind::Neg
        | AtomKind::Scale(_)
        | AtomKind::Sum
        | AtomKind::Index(_)
        | AtomKind::Promote(_)
        | AtomKind::VStack
        | AtomKind::MatVec => CurvatureFlags::affine(),
        AtomKind::Abs
        | AtomKind::Square
        | AtomKind::SumSquares
        | AtomKind::Norm2
        | AtomKind::Exp
        | AtomKind::Maximum
        | AtomKind::MaxEntries => CurvatureFlags::convex(),
        AtomKind::Sqrt | AtomKind::Log | AtomKind::Minimum | AtomKind::MinEntries => {
            CurvatureFlags::concave()
        }
        AtomKind::Ceil | AtomKind::Floor | AtomKind::SignFn | AtomKind::PowOdd(_) => {
            CurvatureFlags::quasilinear()
        }
        AtomKind::Mul => {
            let (a, b) = (arg_signs[0], arg_signs[1]);
            let mut flags = CurvatureFlags::none();
            // Quasiconcave on matching weak signs.
            if (a.is_nonnegative() && b.is_nonnegative())
                || (a.is_nonpositive() && b.is_nonpositive())
            {
                flags = flags.or(CurvatureFlags::quasiconcave());
            }
            // Quasiconvex when one argument is nonnegative and the other is
            // nonpositive.
            if (a.is_nonnegative() && b.is_nonpositive())
                || (a.is_nonpositive() && b.is_nonnegative())
            {
                flags = flags.or(CurvatureFlags::quasiconvex());
            }
            flags
        }
        AtomKind::Ratio => {
            // Quasilinear when the denominator has a strict sign.
            if arg_signs[1].is_strictly_positive() || arg_signs[1].is_strictly_negative() {
                CurvatureFlags::quasilinear()
            } else {
                CurvatureFlags::none()
            }
        }
        AtomKind::DistRatio | AtomKind::GenLambdaMax | AtomKind::Length => {
            CurvatureFlags::quasiconvex()
        }
        AtomKind::Rectangle | AtomKind::Rank => CurvatureFlags::quasiconcave(),
        AtomKind::Card => {
            if arg_signs[0].is_nonnegative() {
                CurvatureFlags::quasiconcave()
            } else {
                CurvatureFlags::none()
            }
        }
    }
}

pub(super) fn monotonicity(kind: &AtomKind, arg: usize, arg_signs: &[Sign]) -> Monotonicity {
    use Monotonicity::*;
    match kind {
        AtomKind::Add
        | AtomKind::Sum
        | AtomKind::Index(_)
        | AtomKind::Promote(_)
        | AtomKind::VStack
        | AtomKind::Exp
        | AtomKind::Sqrt
        | AtomKind::Log
        | AtomKind::Maximum
        | AtomKind::MaxEntries
        | AtomKind::Minimum
        | AtomKind::MinEntries
        | AtomKind::Ceil
        | AtomKind::Floor
        | AtomKind::SignFn
        | AtomKind::PowOdd(_) => Nondecreasing,
        AtomKind::Neg => Nonincreasing,
        AtomKind::Scale(c) => {
            if *c >= 0.0 {
                Nondecreasing
            } else {
                Nonincreasing
            }
        }
        AtomKind::MatVec => {
            if arg == 0 {
                None
            } else if arg_signs[0].is_nonnegative() {
                Nondecreasing
            } else if arg_signs[0].is_nonpositive() {
                Nonincreasing
            } else {
                None
            }
        }
        AtomKind::Abs | AtomKind::Square | AtomKind::SumSquares | AtomKind::Norm2 => {
            if arg_signs[0].is_nonnegative() {
                Nondecreasing
            } else if arg_signs[0].is_nonpositive() {
                Nonincreasing
            } else {
                None
            }
        }
        AtomKind::Mul => {
            let other = arg_signs[1 - arg];
            if other.is_nonnegative() {
                Nondecreasing
            } else if other.is_nonpositive() {
                Nonincreasing
            } else {
                None
            }
        }
        AtomKind::Ratio => {
            if arg == 0 {
                // d(x/y)/dx = 1/y.
                if arg_signs[1].is_strictly_positive() {
                    Nondecreasing
                } else if arg_signs[1].is_strictly_negative() {
                    Nonincreasing
                } else {
                    None
                }
            } else {
                // d(x/y)/dy = -x/y^2.
                if arg_signs[0].is_nonnegative() {
                    Nonincreasing
                } else if arg_signs[0].is_nonpositive() {
                    Nondecreasing
                } else {
                    None
                }
            }
        }
        AtomKind::Card => {
            if arg_signs[0].is_nonnegative() {
                Nondecreasing
            } else {
                None
            }
        }
        AtomKind::DistRatio
        | AtomKind::GenLambdaMax
        | AtomKind::Length
        | AtomKind::Rectangle
        | AtomKind::Rank => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn broadcast_scalar_with_vector() {
        let s = result_shape(&AtomKind::Add, &[Shape::Scalar, Shape::Vector(3)]).unwrap();
        assert_eq!(s, Shape::Vector(3));
        assert!(result_shape(&AtomKind::Add, &[Shape::Vector(2), Shape::Vector(3)]).is_err());
    }

    #[test]
    fn matvec_shapes() {
        let s = result_shape(&AtomKind::MatVec, &[Shape::matrix(4, 3), Shape::Vector(3)]).unwrap();
        assert_eq!(s, Shape::Vector(4));
        assert!(result_shape(&AtomKind::MatVec, &[Shape::matrix(4, 3), Shape::Vector(4)]).is_err());
    }

    #[test]
    fn product_curvature_by_signs() {
        let qccv = curvature(&AtomKind::Mul, &[Sign::Nonnegative, Sign::Nonnegative]);
        assert!(qccv.is_quasiconcave && !qccv.is_quasiconvex);
        let qccv = curvature(&AtomKind::Mul, &[Sign::Negative, Sign::Nonpositive]);
        assert!(qccv.is_quasiconcave);
        let qcvx = curvature(&AtomKind::Mul, &[Sign::Nonnegative, Sign::Nonpositive]);
        assert!(qcvx.is_quasiconvex && !qcvx.is_quasiconcave);
        let none = curvature(&AtomKind::Mul, &[Sign::Unknown, Sign::Unknown]);
        assert_eq!(none, CurvatureFlags::none());
    }

    #[test]
    fn ratio_quasilinear_on_strict_denominator() {
        let f = curvature(&AtomKind::Ratio, &[Sign::Unknown, Sign::Positive]);
        assert!(f.is_quasilinear());
        let f = curvature(&AtomKind::Ratio, &[Sign::Unknown, Sign::Negative]);
        assert!(f.is_quasilinear());
        let f = curvature(&AtomKind::Ratio, &[Sign::Unknown, Sign::Nonnegative]);
        assert_eq!(f, CurvatureFlags::none());
    }

    #[test]
    fn sign_of_sqrt_is_nonnegative() {
        assert_eq!(result_sign(&AtomKind::Sqrt, &[Sign::Unknown]), Sign::Nonnegative);
        assert_eq!(result_sign(&AtomKind::Sqrt, &[Sign::Positive]), Sign::Positive);
    }
}
