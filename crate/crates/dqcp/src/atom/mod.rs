//! The atom registry.
//!
//! Every atom carries a shape rule, a sign rule, a curvature rule (possibly
//! conditional on argument signs), per-argument monotonicity (also possibly
//! sign-conditional), an integer-valuedness flag, and a numeric evaluator.
//! Convex and concave atoms additionally have conic graph implementations;
//! quasiconvex and quasiconcave atoms have sublevel and superlevel
//! canonicalizers. `card` and `rank` are analysis-only: their curvature is
//! certified but their level sets have no closed conic representation.

pub mod eval;
pub mod graph;
pub mod level;
mod rules;

use crate::shape::Shape;
use crate::sign::Sign;
use std::fmt;

/// Identifies an atom, including any structural parameters.
#[derive(Clone, Debug, PartialEq)]
pub enum AtomKind {
    // Affine
    Add,
    Neg,
    /// Multiplication by a scalar constant.
    Scale(f64),
    Sum,
    /// Entry selection by flat row-major indices.
    Index(Vec<usize>),
    /// Scalar broadcast to a larger shape.
    Promote(Shape),
    /// Concatenation of scalars/vectors into one vector.
    VStack,
    /// Constant matrix times vector; the first argument must be constant.
    MatVec,
    // Convex
    Abs,
    Square,
    SumSquares,
    Norm2,
    Exp,
    /// Elementwise maximum of several expressions.
    Maximum,
    /// Largest entry of one expression.
    MaxEntries,
    // Concave
    Sqrt,
    Log,
    /// Elementwise minimum of several expressions.
    Minimum,
    /// Smallest entry of one expression.
    MinEntries,
    // Quasilinear monotone scalars
    Ceil,
    Floor,
    SignFn,
    /// Odd integer power, p >= 3.
    PowOdd(u32),
    // Quasiconvex / quasiconcave
    Mul,
    Ratio,
    /// dist_ratio(x; a, b) = |x - a| / |x - b| with a, b constant.
    DistRatio,
    /// Maximum generalized eigenvalue of a symmetric pair (X, Y), Y > 0.
    GenLambdaMax,
    /// Largest index of a nonzero component (1-based); 0 for the zero vector.
    Length,
    /// 1 on [-1/2, 1/2], 0 elsewhere.
    Rectangle,
    /// Number of nonzero components; analysis-only.
    Card,
    /// Matrix rank; analysis-only.
    Rank,
}

/// Arity constraint for an atom.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Arity {
    Exact(usize),
    AtLeast(usize),
}

impl Arity {
    pub fn accepts(&self, n: usize) -> bool {
        match *self {
            Arity::Exact(k) => n == k,
            Arity::AtLeast(k) => n >= k,
        }
    }
}

impl fmt::Display for Arity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Arity::Exact(k) => write!(f, "{k}"),
            Arity::AtLeast(k) => write!(f, "at least {k}"),
        }
    }
}

/// Per-argument monotonicity, after resolving any sign conditions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Monotonicity {
    Nondecreasing,
    Nonincreasing,
    None,
}

/// Memberships in the curvature lattice. Closed upward: constant implies
/// affine; affine implies convex and concave; convex implies quasiconvex;
/// concave implies quasiconcave.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct CurvatureFlags {
    pub is_constant: bool,
    pub is_affine: bool,
    pub is_convex: bool,
    pub is_concave: bool,
    pub is_quasiconvex: bool,
    pub is_quasiconcave: bool,
}

impl CurvatureFlags {
    pub fn none() -> CurvatureFlags {
        CurvatureFlags::default()
    }

    pub fn constant() -> CurvatureFlags {
        CurvatureFlags {
            is_constant: true,
            is_affine: true,
            is_convex: true,
            is_concave: true,
            is_quasiconvex: true,
            is_quasiconcave: true,
        }
    }

    pub fn affine() -> CurvatureFlags {
        CurvatureFlags {
            is_affine: true,
            is_convex: true,
            is_concave: true,
            is_quasiconvex: true,
            is_quasiconcave: true,
            ..Default::default()
        }
    }

    pub fn convex() -> CurvatureFlags {
        CurvatureFlags {
            is_convex: true,
            is_quasiconvex: true,
            ..Default::default()
        }
    }

    pub fn concave() -> CurvatureFlags {
        CurvatureFlags {
            is_concave: true,
            is_quasiconcave: true,
            ..Default::default()
        }
    }

    pub fn quasiconvex() -> CurvatureFlags {
        CurvatureFlags {
            is_quasiconvex: true,
            ..Default::default()
        }
    }

    pub fn quasiconcave() -> CurvatureFlags {
        CurvatureFlags {
            is_quasiconcave: true,
            ..Default::default()
        }
    }

    pub fn quasilinear() -> CurvatureFlags {
        CurvatureFlags {
            is_quasiconvex: true,
            is_quasiconcave: true,
            ..Default::default()
        }
    }

    pub fn or(self, other: CurvatureFlags) -> CurvatureFlags {
        CurvatureFlags {
            is_constant: self.is_constant || other.is_constant,
            is_affine: self.is_affine || other.is_affine,
            is_convex: self.is_convex || other.is_convex,
            is_concave: self.is_concave || other.is_concave,
            is_quasiconvex: self.is_quasiconvex || other.is_quasiconvex,
            is_quasiconcave: self.is_quasiconcave || other.is_quasiconcave,
        }
    }

    /// Enforce the implication chain of the lattice.
    pub fn normalized(mut self) -> CurvatureFlags {
        if self.is_constant {
            self.is_affine = true;
        }
        if self.is_affine {
            self.is_convex = true;
            self.is_concave = true;
        }
        if self.is_convex {
            self.is_quasiconvex = true;
        }
        if self.is_concave {
            self.is_quasiconcave = true;
        }
        self
    }

    pub fn is_quasilinear(&self) -> bool {
        self.is_quasiconvex && self.is_quasiconcave
    }

    /// Human-readable summary of the strongest memberships.
    pub fn describe(&self) -> &'static str {
        if self.is_constant {
            "constant"
        } else if self.is_affine || (self.is_convex && self.is_concave) {
            "affine"
        } else if self.is_convex {
            "convex"
        } else if self.is_concave {
            "concave"
        } else if self.is_quasilinear() {
            "quasilinear"
        } else if self.is_quasiconvex {
            "quasiconvex"
        } else if self.is_quasiconcave {
            "quasiconcave"
        } else {
            "unknown"
        }
    }
}

impl fmt::Display for CurvatureFlags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.describe())
    }
}

impl AtomKind {
    /// Registry name, without structural parameters.
    pub fn name(&self) -> &'static str {
        match self {
            AtomKind::Add => "add",
            AtomKind::Neg => "neg",
            AtomKind::Scale(_) => "scale",
            AtomKind::Sum => "sum",
            AtomKind::Index(_) => "index",
            AtomKind::Promote(_) => "promote",
            AtomKind::VStack => "vstack",
            AtomKind::MatVec => "matvec",
            AtomKind::Abs => "abs",
            AtomKind::Square => "square",
            AtomKind::SumSquares => "sum_squares",
            AtomKind::Norm2 => "norm2",
            AtomKind::Exp => "exp",
            AtomKind::Maximum => "maximum",
            AtomKind::MaxEntries => "max",
            AtomKind::Sqrt => "sqrt",
            AtomKind::Log => "log",
            AtomKind::Minimum => "minimum",
            AtomKind::MinEntries => "min",
            AtomKind::Ceil => "ceil",
            AtomKind::Floor => "floor",
            AtomKind::SignFn => "sign",
            AtomKind::PowOdd(_) => "pow_odd",
            AtomKind::Mul => "mul",
            AtomKind::Ratio => "ratio",
            AtomKind::DistRatio => "dist_ratio",
            AtomKind::GenLambdaMax => "gen_lambda_max",
            AtomKind::Length => "length",
            AtomKind::Rectangle => "rectangle",
            AtomKind::Card => "card",
            AtomKind::Rank => "rank",
        }
    }

    pub fn arity(&self) -> Arity {
        match self {
            AtomKind::Add | AtomKind::Maximum | AtomKind::Minimum => Arity::AtLeast(2),
            AtomKind::VStack => Arity::AtLeast(1),
            AtomKind::MatVec | AtomKind::Mul | AtomKind::Ratio | AtomKind::GenLambdaMax => {
                Arity::Exact(2)
            }
            AtomKind::DistRatio => Arity::Exact(3),
            _ => Arity::Exact(1),
        }
    }

    pub fn integer_valued(&self) -> bool {
        matches!(
            self,
            AtomKind::Ceil
                | AtomKind::Floor
                | AtomKind::SignFn
                | AtomKind::Length
                | AtomKind::Rectangle
                | AtomKind::Card
                | AtomKind::Rank
        )
    }

    /// Atoms whose curvature is certified but whose level sets cannot be
    /// represented with closed cones.
    pub fn analysis_only(&self) -> bool {
        matches!(self, AtomKind::Card | AtomKind::Rank)
    }

    /// Whether the atom acts entrywise (output entry i depends only on the
    /// corresponding entries of the non-constant argument). This is the shape
    /// condition under which monotone composition applies to quasiconvex and
    /// quasiconcave arguments.
    pub fn elementwise(&self) -> bool {
        matches!(
            self,
            AtomKind::Add
                | AtomKind::Neg
                | AtomKind::Scale(_)
                | AtomKind::Abs
                | AtomKind::Square
                | AtomKind::Exp
                | AtomKind::Maximum
                | AtomKind::Sqrt
                | AtomKind::Log
                | AtomKind::Minimum
                | AtomKind::Ceil
                | AtomKind::Floor
                | AtomKind::SignFn
                | AtomKind::PowOdd(_)
                | AtomKind::Mul
                | AtomKind::Ratio
        )
    }

    pub fn result_shape(&self, arg_shapes: &[Shape]) -> Result<Shape, String> {
        rules::result_shape(self, arg_shapes)
    }

    pub fn result_sign(&self, arg_signs: &[Sign]) -> Sign {
        rules::result_sign(self, arg_signs)
    }

    /// The atom's own curvature given the signs of its arguments.
    pub fn curvature(&self, arg_signs: &[Sign]) -> CurvatureFlags {
        rules::curvature(self, arg_signs)
    }

    /// Monotonicity in argument `arg`, with sign conditions resolved against
    /// `arg_signs` (the signs of all arguments).
    pub fn monotonicity(&self, arg: usize, arg_signs: &[Sign]) -> Monotonicity {
        rules::monotonicity(self, arg, arg_signs)
    }
}

impl fmt::Display for AtomKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AtomKind::Scale(c) => write!(f, "scale({c})"),
            AtomKind::PowOdd(p) => write!(f, "pow_odd({p})"),
            AtomKind::Index(idx) => write!(f, "index({idx:?})"),
            AtomKind::Promote(s) => write!(f, "promote({s})"),
            _ => f.write_str(self.name()),
        }
    }
}

/// Registry metadata for one atom.
#[derive(Clone, Debug)]
pub struct AtomSpec {
    pub name: &'static str,
    /// A canonical instance of the atom (parameterized atoms use defaults).
    pub kind: AtomKind,
    pub arity: Arity,
    pub integer_valued: bool,
    pub analysis_only: bool,
    pub has_graph_implementation: bool,
    pub has_sublevel_canonicalizer: bool,
    pub has_superlevel_canonicalizer: bool,
    pub has_monotone_inverse: bool,
}

impl AtomSpec {
    fn of(kind: AtomKind) -> AtomSpec {
        AtomSpec {
            name: kind.name(),
            arity: kind.arity(),
            integer_valued: kind.integer_valued(),
            analysis_only: kind.analysis_only(),
            has_graph_implementation: graph::has_graph_implementation(&kind),
            has_sublevel_canonicalizer: level::has_sublevel(&kind),
            has_superlevel_canonicalizer: level::has_superlevel(&kind),
            has_monotone_inverse: level::has_monotone_inverse(&kind),
            kind,
        }
    }

    pub fn monotonicity(&self, arg: usize, arg_signs: &[Sign]) -> Monotonicity {
        self.kind.monotonicity(arg, arg_signs)
    }

    pub fn curvature(&self, arg_signs: &[Sign]) -> CurvatureFlags {
        self.kind.curvature(arg_signs)
    }
}

/// All registered atoms, with default parameters for parameterized ones.
pub fn registry() -> Vec<AtomSpec> {
    let kinds = vec![
        AtomKind::Add,
        AtomKind::Neg,
        AtomKind::Scale(1.0),
        AtomKind::Sum,
        AtomKind::Index(vec![0]),
        AtomKind::Promote(Shape::Scalar),
        AtomKind::VStack,
        AtomKind::MatVec,
        AtomKind::Abs,
        AtomKind::Square,
        AtomKind::SumSquares,
        AtomKind::Norm2,
        AtomKind::Exp,
        AtomKind::Maximum,
        AtomKind::MaxEntries,
        AtomKind::Sqrt,
        AtomKind::Log,
        AtomKind::Minimum,
        AtomKind::MinEntries,
        AtomKind::Ceil,
        AtomKind::Floor,
        AtomKind::SignFn,
        AtomKind::PowOdd(3),
        AtomKind::Mul,
        AtomKind::Ratio,
        AtomKind::DistRatio,
        AtomKind::GenLambdaMax,
        AtomKind::Length,
        AtomKind::Rectangle,
        AtomKind::Card,
        AtomKind::Rank,
    ];
    kinds.into_iter().map(AtomSpec::of).collect()
}

pub fn lookup(name: &str) -> Option<AtomSpec> {
    registry().into_iter().find(|s| s.name == name)
}
