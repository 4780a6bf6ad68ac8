//! Bisection on the feasibility family: interval discovery by doubling,
//! the halving loop with objective-value tightening, and integer interval
//! tightening for integer-valued objectives.

use crate::canon::{CanonError, FeasibilityFamily};
use crate::conic::{
    DouglasRachford, ConicProblem, FeasStatus, FeasibilitySolver, SolverError,
    SolverOptions,
};
use crate::expr::Assignment;
use crate::shape::Shape;
use thiserror::Error;

/// Tolerance for the final re-check of the original constraints and the
/// objective value against the reported interval.
const RECHECK_TOL: f64 = 1e-5;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InconclusivePolicy {
    /// Conservative: keeps the upper bound valid, may overestimate the
    /// optimal value by at most the solver's failure region.
    TreatAsInfeasible,
    Abort,
}

#[derive(Clone, Copy, Debug)]
pub struct BisectOptions {
    /// Stop when the bracket width is at most this.
    pub eps: f64,
    pub max_probes: usize,
    pub low: Option<f64>,
    pub high: Option<f64>,
    pub inconclusive: InconclusivePolicy,
    pub solver: SolverOptions,
}

impl Default for BisectOptions {
    fn default() -> BisectOptions {
        BisectOptions {
            eps: 1e-6,
            max_probes: 100,
            low: None,
            high: None,
            inconclusive: InconclusivePolicy::TreatAsInfeasible,
            solver: SolverOptions::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Optimal,
    InfeasibleProblem,
    UnboundedBelowSuspected,
    Aborted,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProbeOutcome {
    Feasible,
    Infeasible,
    InconclusiveAsInfeasible,
}

impl ProbeOutcome {
    pub fn name(&self) -> &'static str {
        match self {
            ProbeOutcome::Feasible => "feasible",
            ProbeOutcome::Infeasible => "infeasible",
            ProbeOutcome::InconclusiveAsInfeasible => "inconclusive(as-infeasible)",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Probe {
    pub t: f64,
    pub outcome: ProbeOutcome,
    pub interval_after: (f64, f64),
}

/// A feasible probe point translated back to user variables.
#[derive(Clone, Debug)]
pub struct FeasiblePoint {
    pub assignment: Assignment,
    pub values: Vec<(String, Shape, Vec<f64>)>,
}

impl FeasiblePoint {
    fn from_solution(problem: &ConicProblem, x: &[f64]) -> FeasiblePoint {
        let mut assignment = Assignment::new();
        let mut values = Vec::new();
        for (id, name, shape, vals) in problem.extract_user_values(x) {
            assignment.set_by_id(
                id,
                crate::expr::Value {
                    shape,
                    data: vals.clone(),
                },
            );
            values.push((name, shape, vals));
        }
        FeasiblePoint { assignment, values }
    }
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub status: Status,
    /// Estimate of the optimal value: the final certified upper bound.
    pub value: f64,
    pub interval: (f64, f64),
    pub point: Option<FeasiblePoint>,
    pub trace: Vec<Probe>,
    pub probes: usize,
    pub diagnostics: Vec<String>,
    /// Feasibility tolerance the verdicts are relative to.
    pub eps_feas: f64,
}

impl SolveResult {
    fn terminal(status: Status, opts: &BisectOptions, diagnostics: Vec<String>) -> SolveResult {
        SolveResult {
            status,
            value: f64::NAN,
            interval: (f64::NEG_INFINITY, f64::INFINITY),
            point: None,
            trace: vec![],
            probes: 0,
            diagnostics,
            eps_feas: opts.solver.eps_feas,
        }
    }
}

#[derive(Error, Debug)]
pub enum BisectError {
    #[error(transparent)]
    Canon(#[from] CanonError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

enum ProbeResult {
    Feasible(FeasiblePoint),
    Infeasible,
    Inconclusive,
}

fn run_probe(
    family: &FeasibilityFamily,
    solver: &dyn FeasibilitySolver,
    t: f64,
    opts: &BisectOptions,
) -> Result<ProbeResult, BisectError> {
    let problem = family.generate(t)?;
    let outcome = solver.solve_feasibility(&problem, &opts.solver)?;
    Ok(match outcome.status {
        FeasStatus::Feasible(x) => ProbeResult::Feasible(FeasiblePoint::from_solution(&problem, &x)),
        FeasStatus::Infeasible => ProbeResult::Infeasible,
        FeasStatus::Inconclusive => ProbeResult::Inconclusive,
    })
}

/// Result of the interval search: either a bracket [low, high] with
/// generate(low) infeasible and generate(high) feasible, or a terminal
/// verdict (infeasible problem, suspected unbounded, aborted).
pub enum IntervalOutcome {
    Bracket {
        low: f64,
        high: f64,
        witness: Option<FeasiblePoint>,
        trace: Vec<Probe>,
        probes: usize,
    },
    Terminal(SolveResult),
}

fn grow_up(b: f64) -> f64 {
    if b > 0.0 {
        2.0 * b
    } else {
        1.0 - b
    }
}

fn grow_down(a: f64) -> f64 {
    if a < 0.0 {
        2.0 * a
    } else {
        -1.0 - a
    }
}

/// Find an interval bracketing the optimal value, after checking the
/// original constraints are feasible at all. Starts from [-1, 1] (or the
/// given overrides) and doubles outward.
pub fn find_initial_interval(
    family: &FeasibilityFamily,
    solver: &dyn FeasibilitySolver,
    opts: &BisectOptions,
) -> Result<IntervalOutcome, BisectError> {
    // The original constraints alone, a single convex feasibility problem.
    let base = solver.solve_feasibility(family.base(), &opts.solver)?;
    match base.status {
        FeasStatus::Infeasible => {
            return Ok(IntervalOutcome::Terminal(SolveResult::terminal(
                Status::InfeasibleProblem,
                opts,
                vec!["original constraints are infeasible".into()],
            )));
        }
        FeasStatus::Inconclusive => match opts.inconclusive {
            InconclusivePolicy::TreatAsInfeasible => {
                return Ok(IntervalOutcome::Terminal(SolveResult::terminal(
                    Status::InfeasibleProblem,
                    opts,
                    vec!["base feasibility check was inconclusive; treated as infeasible".into()],
                )));
            }
            InconclusivePolicy::Abort => {
                return Ok(IntervalOutcome::Terminal(SolveResult::terminal(
                    Status::Aborted,
                    opts,
                    vec!["base feasibility check was inconclusive".into()],
                )));
            }
        },
        FeasStatus::Feasible(_) => {}
    }

    let mut low = opts.low.unwrap_or(-1.0);
    let mut high = opts.high.unwrap_or(1.0);
    let mut low_known_infeasible = false;
    let mut high_known_feasible = false;
    let mut witness: Option<FeasiblePoint> = None;
    let mut trace = Vec::new();
    let mut probes = 0usize;

    while probes < opts.max_probes {
        if !high_known_feasible {
            probes += 1;
            match run_probe(family, solver, high, opts)? {
                ProbeResult::Feasible(p) => {
                    witness = Some(p);
                    high_known_feasible = true;
                    trace.push(Probe {
                        t: high,
                        outcome: ProbeOutcome::Feasible,
                        interval_after: (low, high),
                    });
                }
                ProbeResult::Infeasible => {
                    low = high;
                    low_known_infeasible = true;
                    high = grow_up(high);
                    trace.push(Probe {
                        t: low,
                        outcome: ProbeOutcome::Infeasible,
                        interval_after: (low, high),
                    });
                }
                ProbeResult::Inconclusive => match opts.inconclusive {
                    InconclusivePolicy::TreatAsInfeasible => {
                        low = high;
                        low_known_infeasible = true;
                        high = grow_up(high);
                        trace.push(Probe {
                            t: low,
                            outcome: ProbeOutcome::InconclusiveAsInfeasible,
                            interval_after: (low, high),
                        });
                    }
                    InconclusivePolicy::Abort => {
                        return Ok(IntervalOutcome::Terminal(SolveResult {
                            status: Status::Aborted,
                            value: f64::NAN,
                            interval: (low, high),
                            point: None,
                            trace,
                            probes,
                            diagnostics: vec![format!("inconclusive probe at t = {high}")],
                            eps_feas: opts.solver.eps_feas,
                        }));
                    }
                },
            }
            continue;
        }
        if !low_known_infeasible {
            probes += 1;
            match run_probe(family, solver, low, opts)? {
                outcome @ (ProbeResult::Infeasible | ProbeResult::Inconclusive) => {
                    // An inconclusive low probe is safe to treat as the
                    // infeasible end: it only widens the bracket.
                    low_known_infeasible = true;
                    trace.push(Probe {
                        t: low,
                        outcome: if matches!(outcome, ProbeResult::Infeasible) {
                            ProbeOutcome::Infeasible
                        } else {
                            ProbeOutcome::InconclusiveAsInfeasible
                        },
                        interval_after: (low, high),
                    });
                }
                ProbeResult::Feasible(p) => {
                    witness = Some(p);
                    high = low;
                    high_known_feasible = true;
                    low = grow_down(low);
                    trace.push(Probe {
                        t: high,
                        outcome: ProbeOutcome::Feasible,
                        interval_after: (low, high),
                    });
                }
            }
            continue;
        }
        return Ok(IntervalOutcome::Bracket {
            low,
            high,
            witness,
            trace,
            probes,
        });
    }

    let status = if high_known_feasible {
        // The lower end kept moving: the objective looks unbounded below.
        Status::UnboundedBelowSuspected
    } else {
        Status::Aborted
    };
    Ok(IntervalOutcome::Terminal(SolveResult {
        status,
        value: f64::NAN,
        interval: (low, high),
        point: witness,
        trace,
        probes,
        diagnostics: vec![format!(
            "no bracket after {} probes; last interval [{low}, {high}]",
            opts.max_probes
        )],
        eps_feas: opts.solver.eps_feas,
    }))
}

/// Run bisection on a bracketing interval. The lower end must be known (or
/// assumed) infeasible and the upper end feasible, as produced by
/// [`find_initial_interval`].
pub fn bisect(
    family: &FeasibilityFamily,
    interval: (f64, f64),
    solver: &dyn FeasibilitySolver,
    opts: &BisectOptions,
    witness: Option<FeasiblePoint>,
) -> Result<SolveResult, BisectError> {
    let integer = family.objective_integer_valued;
    let (mut low, mut high) = interval;
    if integer {
        low = low.ceil();
        high = high.floor();
    }
    let mut best = witness;
    let mut trace: Vec<Probe> = Vec::new();
    let mut probes = 0usize;
    let mut diagnostics: Vec<String> = Vec::new();

    let converged = |low: f64, high: f64| {
        if integer {
            low >= high
        } else {
            high - low <= opts.eps
        }
    };

    while !converged(low, high) && probes < opts.max_probes {
        let t = 0.5 * (low + high);
        probes += 1;
        match run_probe(family, solver, t, opts)? {
            ProbeResult::Feasible(p) => {
                // The optimal value is at most t, and also at most the
                // objective value at the probe point.
                let mut new_high = t;
                if let Some(obj) = family.objective() {
                    if let Ok(v) = obj.eval(&p.assignment) {
                        if let Some(fv) = v.as_scalar() {
                            if fv.is_finite() && fv >= low && fv < new_high {
                                new_high = fv;
                            }
                        }
                    }
                }
                high = new_high;
                best = Some(p);
                if integer {
                    high = high.floor();
                }
                trace.push(Probe {
                    t,
                    outcome: ProbeOutcome::Feasible,
                    interval_after: (low, high),
                });
            }
            ProbeResult::Infeasible => {
                low = t;
                if integer {
                    low = low.ceil();
                }
                trace.push(Probe {
                    t,
                    outcome: ProbeOutcome::Infeasible,
                    interval_after: (low, high),
                });
            }
            ProbeResult::Inconclusive => match opts.inconclusive {
                InconclusivePolicy::TreatAsInfeasible => {
                    low = t;
                    if integer {
                        low = low.ceil();
                    }
                    diagnostics.push(format!("inconclusive probe at t = {t} treated as infeasible"));
                    trace.push(Probe {
                        t,
                        outcome: ProbeOutcome::InconclusiveAsInfeasible,
                        interval_after: (low, high),
                    });
                }
                InconclusivePolicy::Abort => {
                    diagnostics.push(format!("inconclusive probe at t = {t}"));
                    return Ok(SolveResult {
                        status: Status::Aborted,
                        value: high,
                        interval: (low, high),
                        point: best,
                        trace,
                        probes,
                        diagnostics,
                        eps_feas: opts.solver.eps_feas,
                    });
                }
            },
        }
    }

    if !converged(low, high) {
        diagnostics.push(format!("probe budget {} exhausted", opts.max_probes));
        return Ok(SolveResult {
            status: Status::Aborted,
            value: high,
            interval: (low, high),
            point: best,
            trace,
            probes,
            diagnostics,
            eps_feas: opts.solver.eps_feas,
        });
    }

    // Make sure a feasible point is available; the bracket's upper end is
    // known feasible, so fetch one if no probe supplied it.
    if best.is_none() {
        probes += 1;
        match run_probe(family, solver, high, opts)? {
            ProbeResult::Feasible(p) => {
                trace.push(Probe {
                    t: high,
                    outcome: ProbeOutcome::Feasible,
                    interval_after: (low, high),
                });
                best = Some(p);
            }
            _ => {
                diagnostics.push(format!(
                    "upper end t = {high} did not verify feasible when fetching a point"
                ));
            }
        }
    }

    let mut status = Status::Optimal;
    // Re-check the returned point against the original, un-canonicalized
    // problem.
    if let (Some(p), Some(problem)) = (&best, family.problem()) {
        match problem.max_violation(&p.assignment) {
            Ok(v) if v <= RECHECK_TOL => {}
            Ok(v) => {
                status = Status::Aborted;
                diagnostics.push(format!(
                    "returned point violates original constraints by {v:.3e} (> {RECHECK_TOL:.0e})"
                ));
            }
            Err(e) => {
                status = Status::Aborted;
                diagnostics.push(format!("re-check failed to evaluate: {e}"));
            }
        }
        if let Some(obj) = family.objective() {
            match obj.eval(&p.assignment).map(|v| v.as_scalar()) {
                Ok(Some(fv)) => {
                    if fv < low - RECHECK_TOL || fv > high + RECHECK_TOL {
                        status = Status::Aborted;
                        diagnostics.push(format!(
                            "objective at returned point is {fv:.9e}, outside [{low:.9e}, {high:.9e}]"
                        ));
                    }
                }
                _ => {
                    status = Status::Aborted;
                    diagnostics.push("objective could not be evaluated at the returned point".into());
                }
            }
        }
    } else if best.is_none() {
        status = Status::Aborted;
        diagnostics.push("no feasible point was recovered".into());
    }

    Ok(SolveResult {
        status,
        value: high,
        interval: (low, high),
        point: best,
        trace,
        probes,
        diagnostics,
        eps_feas: opts.solver.eps_feas,
    })
}

/// Interval discovery followed by bisection, with the built-in solver.
pub fn solve_family(
    family: &FeasibilityFamily,
    opts: &BisectOptions,
) -> Result<SolveResult, BisectError> {
    solve_family_with(&DouglasRachford, family, opts)
}

/// Same, with a caller-chosen feasibility backend.
pub fn solve_family_with(
    solver: &dyn FeasibilitySolver,
    family: &FeasibilityFamily,
    opts: &BisectOptions,
) -> Result<SolveResult, BisectError> {
    match find_initial_interval(family, solver, opts)? {
        IntervalOutcome::Terminal(r) => Ok(r),
        IntervalOutcome::Bracket {
            low,
            high,
            witness,
            mut trace,
            probes,
        } => {
            let mut result = bisect(family, (low, high), solver, opts, witness)?;
            trace.extend(result.trace);
            result.trace = trace;
            result.probes += probes;
            Ok(result)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canon::FeasibilityFamily;
    use crate::conic::{Cone, LinExpr};

    /// A family that is feasible exactly when t >= threshold, decided with
    /// zero solver iterations (constant rows, no variables).
    fn threshold_family(threshold: f64, integer: bool) -> FeasibilityFamily {
        let base = ConicProblem::default();
        FeasibilityFamily::synthetic(
            move |t| ConicProblem {
                num_vars: 0,
                rows: vec![LinExpr::constant(t - threshold)],
                blocks: vec![Cone::NonNeg(1)],
                ..Default::default()
            },
            base,
            integer,
        )
    }

    fn always_feasible() -> FeasibilityFamily {
        FeasibilityFamily::synthetic(|_| ConicProblem::default(), ConicProblem::default(), false)
    }

    #[test]
    fn initial_interval_contains_the_threshold() {
        let family = threshold_family(0.0, false);
        let opts = BisectOptions::default();
        match find_initial_interval(&family, &DouglasRachford, &opts).unwrap() {
            IntervalOutcome::Bracket { low, high, .. } => {
                assert_eq!((low, high), (-1.0, 1.0));
            }
            IntervalOutcome::Terminal(r) => panic!("unexpected terminal {:?}", r.status),
        }
    }

    #[test]
    fn doubling_reaches_a_positive_threshold() {
        // Feasible exactly for t >= 3: the upper end doubles 1 -> 2 -> 4.
        let family = threshold_family(3.0, false);
        let opts = BisectOptions::default();
        match find_initial_interval(&family, &DouglasRachford, &opts).unwrap() {
            IntervalOutcome::Bracket {
                low, high, trace, ..
            } => {
                assert_eq!((low, high), (2.0, 4.0));
                let probed: Vec<f64> = trace.iter().map(|p| p.t).collect();
                assert_eq!(probed, vec![1.0, 2.0, 4.0]);
            }
            IntervalOutcome::Terminal(r) => panic!("unexpected terminal {:?}", r.status),
        }
    }

    #[test]
    fn always_feasible_family_looks_unbounded() {
        let family = always_feasible();
        let mut opts = BisectOptions::default();
        opts.max_probes = 30;
        match find_initial_interval(&family, &DouglasRachford, &opts).unwrap() {
            IntervalOutcome::Terminal(r) => {
                assert_eq!(r.status, Status::UnboundedBelowSuspected);
            }
            IntervalOutcome::Bracket { low, high, .. } => {
                panic!("unexpected bracket [{low}, {high}]")
            }
        }
    }

    #[test]
    fn probe_count_respects_the_halving_bound() {
        // Interval [0, 8] with eps 1e-4: at most ceil(log2(8 / 1e-4)) = 17
        // probes.
        let threshold = std::f64::consts::PI;
        let family = threshold_family(threshold, false);
        let mut opts = BisectOptions::default();
        opts.eps = 1e-4;
        let r = bisect(&family, (0.0, 8.0), &DouglasRachford, &opts, None).unwrap();
        assert!(r.probes <= 17, "{} probes", r.probes);
        assert!(r.interval.1 - r.interval.0 <= 1e-4);
        assert!(r.value >= threshold && r.value <= threshold + 1e-4 + 1e-12);
        // Bracket invariant along the trace: feasible probes sit at or above
        // the threshold, infeasible ones below, and the interval always
        // contains the threshold.
        for p in &r.trace {
            match p.outcome {
                ProbeOutcome::Feasible => assert!(p.t >= threshold),
                _ => assert!(p.t < threshold),
            }
            assert!(p.interval_after.0 <= threshold && threshold <= p.interval_after.1 + 1e-12);
        }
    }

    #[test]
    fn integer_objective_terminates_in_few_probes() {
        // Integer optimum 8 in [0, 10]: interval tightening needs at most 4
        // probes (5, 7.5 -> ceil to 8, 9, 8.5).
        let family = threshold_family(8.0, true);
        let opts = BisectOptions::default();
        let r = bisect(&family, (0.0, 10.0), &DouglasRachford, &opts, None).unwrap();
        assert!(r.probes <= 4, "{} probes: {:?}", r.probes, r.trace);
        assert_eq!(r.value, 8.0);
        assert_eq!(r.interval, (8.0, 8.0));
    }

    #[test]
    fn shrinking_eps_never_raises_the_value_by_more_than_old_eps() {
        let family = threshold_family(std::f64::consts::PI, false);
        let mut coarse = BisectOptions::default();
        coarse.eps = 1e-2;
        let mut fine = BisectOptions::default();
        fine.eps = 1e-5;
        let rc = bisect(&family, (0.0, 8.0), &DouglasRachford, &coarse, None).unwrap();
        let rf = bisect(&family, (0.0, 8.0), &DouglasRachford, &fine, None).unwrap();
        assert!(rf.value <= rc.value + 1e-2);
    }

    #[test]
    fn infeasible_base_reports_infeasible_problem() {
        let base = ConicProblem {
            num_vars: 0,
            rows: vec![LinExpr::constant(-1.0)],
            blocks: vec![Cone::NonNeg(1)],
            ..Default::default()
        };
        let family = FeasibilityFamily::synthetic(|_| ConicProblem::default(), base, false);
        let opts = BisectOptions::default();
        match find_initial_interval(&family, &DouglasRachford, &opts).unwrap() {
            IntervalOutcome::Terminal(r) => assert_eq!(r.status, Status::InfeasibleProblem),
            _ => panic!("expected a terminal result"),
        }
    }
}
