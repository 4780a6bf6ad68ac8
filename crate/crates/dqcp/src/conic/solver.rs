//! Douglas-Rachford splitting between the affine set {A x + b} and the cone
//! product: alternating projections of a running correction point, with the
//! affine projection computed through a cached factorization of the
//! regularized normal equations.
//!
//! Feasibility needs no optimality machinery: when the sets intersect the
//! affine shadow reaches a point whose cone residual passes eps_feas; when
//! they are disjoint the displacement vector between the cone-side and
//! affine-side points converges to the gap between the sets, which is the
//! Bauschke-Borwein infeasibility signal. That signal is heuristic, so an
//! explicit inconclusive status exists and is never silently mapped to a
//! verdict.

use super::project::project_product;
use super::{
    ConicProblem, FeasOutcome, FeasStatus, FeasibilitySolver, SolverError, SolverOptions,
};
use crate::linalg::{Cholesky, Mat};

/// Diagonal regularization for the normal equations of the affine projection.
const REG: f64 = 1e-12;
/// Window length (iterations) for the displacement convergence check.
const GAP_WINDOW: usize = 100;
/// Relative displacement change below which the gap is considered converged.
const GAP_REL_TOL: f64 = 1e-8;
/// Relative movement of the affine shadow below which it counts as stopped.
const SHADOW_REL_TOL: f64 = 1e-7;

pub struct DouglasRachford;

impl FeasibilitySolver for DouglasRachford {
    fn solve_feasibility(
        &self,
        problem: &ConicProblem,
        opts: &SolverOptions,
    ) -> Result<FeasOutcome, SolverError> {
        if problem.trivially_infeasible {
            return Ok(FeasOutcome {
                status: FeasStatus::Infeasible,
                residual: f64::INFINITY,
                iterations: 0,
                gap_norm: f64::INFINITY,
            });
        }
        problem.validate()?;

        let m = problem.num_rows();
        let n = problem.num_vars;
        let b: Vec<f64> = problem.rows.iter().map(|r| r.constant).collect();

        if m == 0 {
            return Ok(FeasOutcome {
                status: FeasStatus::Feasible(vec![0.0; n]),
                residual: 0.0,
                iterations: 0,
                gap_norm: 0.0,
            });
        }
        if n == 0 {
            // No variables: b itself must lie in the cone product.
            let d = problem.cone_distance(&b);
            let feasible = d <= opts.eps_feas;
            return Ok(FeasOutcome {
                status: if feasible {
                    FeasStatus::Feasible(vec![])
                } else {
                    FeasStatus::Infeasible
                },
                residual: d,
                iterations: 0,
                gap_norm: d,
            });
        }

        let mut a = Mat::zeros(m, n);
        for (i, row) in problem.rows.iter().enumerate() {
            for (&j, &c) in &row.coeffs {
                a.set(i, j, c);
            }
        }
        if a.data.iter().any(|v| !v.is_finite()) || b.iter().any(|v| !v.is_finite()) {
            return Err(SolverError::Numerical("non-finite problem data".into()));
        }

        let mut gram = a.gram();
        for i in 0..n {
            gram.set(i, i, gram.get(i, i) + REG);
        }
        let chol = Cholesky::new(&gram)
            .map_err(|e| SolverError::Numerical(format!("normal equations: {e}")))?;
        // Project v onto the affine image set, returning (x, A x + b).
        let project_affine = |v: &[f64]| -> (Vec<f64>, Vec<f64>) {
            let rhs: Vec<f64> = v.iter().zip(&b).map(|(vi, bi)| vi - bi).collect();
            let x = chol.solve(&a.matvec_t(&rhs));
            let mut s = a.matvec(&x);
            for (si, bi) in s.iter_mut().zip(&b) {
                *si += bi;
            }
            (x, s)
        };

        let mut z = vec![0.0; m];
        let mut checkpoint: Option<(Vec<f64>, Vec<f64>)> = None;
        let mut residual = f64::INFINITY;

        for iter in 1..=opts.max_iters {
            // Affine shadow.
            let (x, s) = project_affine(&z);
            // Cone step on the reflected point, then the correction update.
            let mut u: Vec<f64> = s.iter().zip(&z).map(|(si, zi)| 2.0 * si - zi).collect();
            project_product(&problem.blocks, &mut u);
            for ((zi, ui), si) in z.iter_mut().zip(&u).zip(&s) {
                *zi += ui - si;
            }

            let mut proj_s = s.clone();
            project_product(&problem.blocks, &mut proj_s);
            residual = dist(&s, &proj_s);
            if residual <= opts.eps_feas {
                return Ok(FeasOutcome {
                    status: FeasStatus::Feasible(x),
                    residual,
                    iterations: iter,
                    gap_norm: 0.0,
                });
            }

            // Displacement between the cone-side and affine-side points; it
            // converges to the gap vector when the sets are disjoint. The
            // affine shadow must have stopped moving as well: a converged
            // displacement with a drifting shadow is a sliding phase along a
            // narrow corridor of a feasible problem, not a certificate.
            let d: Vec<f64> = u.iter().zip(&s).map(|(ui, si)| ui - si).collect();
            if iter % GAP_WINDOW == 0 {
                if let Some((prev_d, prev_s)) = &checkpoint {
                    let gap = norm(&d);
                    let d_change = dist(&d, prev_d);
                    let s_change = dist(&s, prev_s);
                    if d_change <= GAP_REL_TOL * gap.max(1.0)
                        && s_change <= SHADOW_REL_TOL * (1.0 + norm(&s))
                    {
                        if gap > opts.eps_gap {
                            return Ok(FeasOutcome {
                                status: FeasStatus::Infeasible,
                                residual,
                                iterations: iter,
                                gap_norm: gap,
                            });
                        }
                        // Converged displacement with a tiny gap but a
                        // residual above tolerance: keep iterating; the
                        // sets may touch asymptotically.
                    }
                }
                checkpoint = Some((d, s.clone()));
            }
        }

        Ok(FeasOutcome {
            status: FeasStatus::Inconclusive,
            residual,
            iterations: opts.max_iters,
            gap_norm: checkpoint.map(|(d, _)| norm(&d)).unwrap_or(f64::INFINITY),
        })
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}
