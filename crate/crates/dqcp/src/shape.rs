//! Shapes of expressions: scalars, vectors, and (optionally symmetric) matrices.

use std::fmt;

/// The shape of an expression. Dimensions are always at least 1; a
/// symmetric matrix must be square.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Shape {
    Scalar,
    Vector(usize),
    Matrix {
        rows: usize,
        cols: usize,
        symmetric: bool,
    },
}

impl Shape {
    pub fn matrix(rows: usize, cols: usize) -> Shape {
        Shape::Matrix {
            rows,
            cols,
            symmetric: false,
        }
    }

    pub fn symmetric_matrix(n: usize) -> Shape {
        Shape::Matrix {
            rows: n,
            cols: n,
            symmetric: true,
        }
    }

    /// Total number of scalar entries.
    pub fn size(&self) -> usize {
        match *self {
            Shape::Scalar => 1,
            Shape::Vector(n) => n,
            Shape::Matrix { rows, cols, .. } => rows * cols,
        }
    }

    pub fn is_scalar(&self) -> bool {
        matches!(self, Shape::Scalar)
    }

    pub fn is_vector(&self) -> bool {
        matches!(self, Shape::Vector(_))
    }

    pub fn is_matrix(&self) -> bool {
        matches!(self, Shape::Matrix { .. })
    }

    pub fn is_square_matrix(&self) -> bool {
        matches!(self, Shape::Matrix { rows, cols, .. } if rows == cols)
    }

    /// Dimension equality, ignoring the symmetric flag.
    pub fn dims_eq(&self, other: &Shape) -> bool {
        match (*self, *other) {
            (Shape::Scalar, Shape::Scalar) => true,
            (Shape::Vector(a), Shape::Vector(b)) => a == b,
            (
                Shape::Matrix {
                    rows: r1, cols: c1, ..
                },
                Shape::Matrix {
                    rows: r2, cols: c2, ..
                },
            ) => r1 == r2 && c1 == c2,
            _ => false,
        }
    }

    /// True when the shape has valid (nonzero) dimensions and the
    /// symmetric flag only decorates square matrices.
    pub fn is_valid(&self) -> bool {
        match *self {
            Shape::Scalar => true,
            Shape::Vector(n) => n >= 1,
            Shape::Matrix {
                rows,
                cols,
                symmetric,
            } => rows >= 1 && cols >= 1 && (!symmetric || rows == cols),
        }
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Shape::Scalar => write!(f, "scalar"),
            Shape::Vector(n) => write!(f, "vector({n})"),
            Shape::Matrix {
                rows,
                cols,
                symmetric,
            } => {
                if symmetric {
                    write!(f, "matrix({rows}x{cols}, symmetric)")
                } else {
                    write!(f, "matrix({rows}x{cols})")
                }
            }
        }
    }
}
