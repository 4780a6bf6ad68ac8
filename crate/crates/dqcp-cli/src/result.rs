//! Machine-readable result documents.

use dqcp::bisect::{ProbeOutcome, SolveResult, Status};
use dqcp::shape::Shape;
use serde::{Deserialize, Serialize};

pub const RESULT_VERSION: &str = "dqcp-result/1";

#[derive(Serialize, Deserialize, Debug)]
pub struct TraceEntry {
    pub t: f64,
    pub outcome: String,
    pub interval: [f64; 2],
}

#[derive(Serialize, Deserialize, Debug)]
pub struct Tolerances {
    pub eps: f64,
    pub eps_feas: f64,
    pub eps_gap: f64,
    pub delta_strict: f64,
}

#[derive(Serialize, Deserialize, Debug)]
pub struct ResultDocument {
    pub version: String,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interval: Option<[f64; 2]>,
    pub variables: serde_json::Map<String, serde_json::Value>,
    pub probes: usize,
    pub trace: Vec<TraceEntry>,
    pub tolerances: Tolerances,
    pub diagnostics: Vec<String>,
}

pub fn status_name(s: Status) -> &'static str {
    match s {
        Status::Optimal => "optimal",
        Status::InfeasibleProblem => "infeasible_problem",
        Status::UnboundedBelowSuspected => "unbounded_below_suspected",
        Status::Aborted => "aborted",
    }
}

fn value_json(shape: &Shape, data: &[f64]) -> serde_json::Value {
    match *shape {
        Shape::Scalar => serde_json::json!(data[0]),
        Shape::Vector(_) => serde_json::json!(data),
        Shape::Matrix { rows, cols, .. } => {
            let nested: Vec<Vec<f64>> = (0..rows)
                .map(|i| data[i * cols..(i + 1) * cols].to_vec())
                .collect();
            serde_json::json!(nested)
        }
    }
}

pub fn build(result: &SolveResult, opts: &dqcp::SolveOptions) -> ResultDocument {
    let mut variables = serde_json::Map::new();
    if let Some(p) = &result.point {
        for (name, shape, data) in &p.values {
            variables.insert(name.clone(), value_json(shape, data));
        }
    }
    let finite = |v: f64| v.is_finite();
    ResultDocument {
        version: RESULT_VERSION.to_string(),
        status: status_name(result.status).to_string(),
        value: finite(result.value).then_some(result.value),
        interval: (finite(result.interval.0) && finite(result.interval.1))
            .then_some([result.interval.0, result.interval.1]),
        variables,
        probes: result.probes,
        trace: result
            .trace
            .iter()
            .map(|p| TraceEntry {
                t: p.t,
                outcome: match p.outcome {
                    ProbeOutcome::Feasible => "feasible".to_string(),
                    ProbeOutcome::Infeasible => "infeasible".to_string(),
                    ProbeOutcome::InconclusiveAsInfeasible => {
                        "inconclusive_as_infeasible".to_string()
                    }
                },
                interval: [p.interval_after.0, p.interval_after.1],
            })
            .collect(),
        tolerances: Tolerances {
            eps: opts.bisect.eps,
            eps_feas: opts.bisect.solver.eps_feas,
            eps_gap: opts.bisect.solver.eps_gap,
            delta_strict: opts.canon.delta_strict,
        },
        diagnostics: result.diagnostics.clone(),
    }
}
