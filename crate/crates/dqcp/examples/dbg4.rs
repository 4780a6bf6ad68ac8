use dqcp::atom::AtomKind::*;
use dqcp::expr::Expr;
use dqcp::problem::{Constraint, Problem, RelOp, Sense};
use dqcp::shape::Shape;
use dqcp::sign::Sign;
use dqcp::conic::{DouglasRachford, FeasibilitySolver, SolverOptions, FeasStatus};

fn main() {
    let x = Expr::variable("x", Shape::Vector(2), Sign::Nonnegative).unwrap();
    let den = Expr::variable("den", Shape::Scalar, Sign::Positive).unwrap();
    let num = Expr::apply(Add, vec![
        Expr::apply(MatVec, vec![Expr::constant(vec![2.0, -1.0], Shape::matrix(1, 2)).unwrap(), x.clone()]).unwrap(),
        Expr::constant_vector(vec![1.0]).unwrap(),
    ]).unwrap();
    let num = Expr::apply(Index(vec![0]), vec![num]).unwrap();
    let den_def = Expr::apply(Add, vec![Expr::apply(Sum, vec![x.clone()]).unwrap(), Expr::constant_scalar(3.0).unwrap()]).unwrap();
    let obj = Expr::apply(Ratio, vec![num, den.clone()]).unwrap();
    let p = Problem::new(Sense::Minimize, obj, vec![
        Constraint { lhs: den, op: RelOp::Eq, rhs: den_def },
        Constraint { lhs: x, op: RelOp::Le, rhs: Expr::constant_vector(vec![2.0, 2.0]).unwrap() },
    ]).unwrap();
    let family = dqcp::canon::dqcp2dcp(&p, &dqcp::CanonOptions::default()).unwrap();
    let mut opts = SolverOptions::default();
    opts.max_iters = 200_000;
    for t in [-0.205, -0.2005, -0.2, -0.1995, -0.199, -0.198, -0.195] {
        let prob = family.generate(t).unwrap();
        let out = DouglasRachford.solve_feasibility(&prob, &opts).unwrap();
        let s = match out.status { FeasStatus::Feasible(_) => "feasible", FeasStatus::Infeasible => "INFEASIBLE", FeasStatus::Inconclusive => "inconclusive" };
        println!("t = {t}: {s} iters {} residual {:.3e} gap {:.3e}", out.iterations, out.residual, out.gap_norm);
    }
}
