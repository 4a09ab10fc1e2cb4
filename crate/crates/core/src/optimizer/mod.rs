//! Greedy output-range search.
//!
//! Starting from an initial range `W₀`, every member is tentatively removed
//! in ascending id order; a removal is kept when it strictly improves the
//! objective and keeps `Q^loss ≤ θ`. Sweeps repeat until one changes nothing.
//! The range is updated as soon as a removal is accepted, so later candidates
//! in the same sweep see the smaller range.
//!
//! Candidate evaluations inside a sweep run in parallel batches, but only the
//! first accepted candidate of a batch (in id order) is committed before the
//! rest are re-evaluated, so results match the sequential search exactly.

mod exact;
mod topk;

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::adversary::Prior;
use crate::error::{Error, Result};
use crate::graph::{DistanceMatrix, Metric};
use crate::mechanism::{gem_matrix, OutputRange};
use crate::metrics::{Attack, EvaluationReport};

pub use exact::{ObjectiveValue, RangeObjective};
pub use topk::{approx_ae_topk, approx_qloss_topk};

use exact::{QlossState, RebuildState};
use topk::TopKState;

/// Default cap on outer sweeps.
pub const DEFAULT_MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Objective {
    MaximizePc,
    MinimizeQloss,
}

impl Objective {
    pub fn as_str(&self) -> &'static str {
        match self {
            Objective::MaximizePc => "maximize-pc",
            Objective::MinimizeQloss => "minimize-qloss",
        }
    }

    /// Converts the internal minimization value back to the objective's own scale.
    fn natural(&self, minimized: f64) -> f64 {
        match self {
            Objective::MaximizePc => -minimized,
            Objective::MinimizeQloss => minimized,
        }
    }
}

impl std::str::FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "maximize-pc" => Ok(Objective::MaximizePc),
            "minimize-qloss" => Ok(Objective::MinimizeQloss),
            other => Err(Error::InvalidParameter(format!("unknown objective '{other}'"))),
        }
    }
}

/// Quality-loss budget for accepted ranges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Theta {
    /// `θ = Q^loss(W₀)`: the search never makes utility worse.
    InitialQloss,
    Fixed(f64),
    Unconstrained,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationConfig {
    pub eps: f64,
    pub objective: Objective,
    pub theta: Theta,
    /// Attack model for the PC objective. Top-k mode supports only `Posterior`.
    pub attack: Attack,
    pub metric: Metric,
    /// Truncate GEM rows to the `k` nearest members when set.
    pub topk: Option<usize>,
    pub max_sweeps: usize,
    /// Compute exact [`EvaluationReport`]s for the initial and final ranges.
    pub reports: bool,
}

impl OptimizationConfig {
    /// Exact evaluation, `θ = Q^loss(W₀)`, posterior attack, shortest-path metric.
    pub fn new(eps: f64, objective: Objective) -> Self {
        OptimizationConfig {
            eps,
            objective,
            theta: Theta::InitialQloss,
            attack: Attack::Posterior,
            metric: Metric::Shortest,
            topk: None,
            max_sweeps: DEFAULT_MAX_SWEEPS,
            reports: true,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0) || !self.eps.is_finite() {
            return Err(Error::InvalidParameter(format!("epsilon must be positive, got {}", self.eps)));
        }
        if let Theta::Fixed(t) = self.theta {
            if !(t > 0.0) {
                return Err(Error::InvalidParameter(format!("theta must be positive, got {t}")));
            }
        }
        if self.topk == Some(0) {
            return Err(Error::InvalidParameter("top-k must be at least 1".into()));
        }
        if self.topk.is_some() && self.objective == Objective::MaximizePc && self.attack != Attack::Posterior {
            return Err(Error::InvalidParameter("top-k PC evaluation supports only the posterior attack".into()));
        }
        if self.max_sweeps == 0 {
            return Err(Error::InvalidParameter("max_sweeps must be at least 1".into()));
        }
        Ok(())
    }
}

/// One accepted removal.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub sweep: usize,
    pub removed: usize,
    /// Objective on its own scale (PC or metres of Q^loss).
    pub before: f64,
    pub after: f64,
    pub q_loss_after: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub objective: Objective,
    pub initial_range: OutputRange,
    pub final_range: OutputRange,
    pub trace: Vec<TraceEntry>,
    pub sweeps: usize,
    /// True when the sweep cap stopped the search before a fixed point.
    pub hit_sweep_cap: bool,
    pub theta: Option<f64>,
    /// Objective values as seen by the search (approximate in top-k mode); `None` if undefined.
    pub initial_objective: Option<f64>,
    pub final_objective: Option<f64>,
    pub initial_q_loss: f64,
    pub final_q_loss: f64,
    pub initial_report: Option<EvaluationReport>,
    pub final_report: Option<EvaluationReport>,
}

impl OptimizationResult {
    pub const TRACE_HEADER: &'static str = "step,sweep,removed,objective_before,objective_after,q_loss_after";

    pub fn trace_csv(&self) -> String {
        let mut out = format!("{}\n", Self::TRACE_HEADER);
        for (i, t) in self.trace.iter().enumerate() {
            let _ = writeln!(out, "{},{},{},{},{},{}", i + 1, t.sweep, t.removed, t.before, t.after, t.q_loss_after);
        }
        out
    }

    /// `summary,<objective>,<|W0|>,<|W|>,<sweeps>,<Q0>,<Q>,<obj0>,<obj>,<capped>`
    pub fn summary_line(&self) -> String {
        let fmt = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |x| x.to_string());
        format!(
            "summary,{},{},{},{},{},{},{},{},{}",
            self.objective.as_str(),
            self.initial_range.len(),
            self.final_range.len(),
            self.sweeps,
            self.initial_q_loss,
            self.final_q_loss,
            fmt(self.initial_objective),
            fmt(self.final_objective),
            self.hit_sweep_cap
        )
    }
}

/// Objective value (minimization form) and quality loss of a candidate range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Candidate {
    pub objective: Option<f64>,
    pub q_loss: f64,
}

/// Incrementally maintained range under search.
pub(crate) trait RangeState: Sync {
    fn members(&self) -> &[usize];
    fn current(&self) -> Candidate;
    /// Evaluates the range without `v`, leaving the state untouched.
    fn try_remove(&self, v: usize) -> Candidate;
    fn remove(&mut self, v: usize);
}

struct SearchOutcome {
    trace: Vec<TraceEntry>,
    sweeps: usize,
    capped: bool,
}

fn search<S: RangeState>(state: &mut S, objective: Objective, theta: Option<f64>, max_sweeps: usize) -> SearchOutcome {
    let batch = rayon::current_num_threads().max(1);
    let mut trace = Vec::new();
    let mut sweeps = 0;
    let mut capped = false;
    let mut current = state.current();
    let accepts = |c: &Candidate, cur: &Candidate| {
        let better = match (c.objective, cur.objective) {
            (Some(new), Some(old)) => new - old < 0.0,
            (Some(_), None) => true,
            (None, _) => false,
        };
        better && theta.is_none_or(|t| c.q_loss <= t)
    };
    loop {
        sweeps += 1;
        let snapshot = state.members().to_vec();
        let mut changed = false;
        let mut idx = 0;
        while idx < snapshot.len() && state.members().len() > 1 {
            let end = (idx + batch).min(snapshot.len());
            let cands = &snapshot[idx..end];
            let evals: Vec<Candidate> = if cands.len() == 1 {
                vec![state.try_remove(cands[0])]
            } else {
                cands.par_iter().map(|&v| state.try_remove(v)).collect()
            };
            match evals.iter().position(|c| accepts(c, &current)) {
                Some(p) => {
                    let v = cands[p];
                    state.remove(v);
                    let after = state.current();
                    trace.push(TraceEntry {
                        sweep: sweeps,
                        removed: v,
                        before: current.objective.map_or(f64::NAN, |o| objective.natural(o)),
                        after: objective.natural(after.objective.expect("accepted candidates are defined")),
                        q_loss_after: after.q_loss,
                    });
                    current = after;
                    changed = true;
                    idx += p + 1;
                }
                None => idx = end,
            }
        }
        if !changed {
            break;
        }
        if sweeps >= max_sweeps {
            capped = true;
            break;
        }
    }
    SearchOutcome { trace, sweeps, capped }
}

/// Runs the greedy removal search from `w0`.
pub fn greedy_optimize(d: &DistanceMatrix, prior: &Prior, cfg: &OptimizationConfig, w0: &OutputRange) -> Result<OptimizationResult> {
    cfg.validate()?;
    if prior.len() != d.len() {
        return Err(Error::InvalidParameter("prior and distance matrix sizes differ".into()));
    }
    if let Some(&bad) = w0.as_slice().last().filter(|&&v| v >= d.len()) {
        return Err(Error::InvalidRange(format!("vertex {bad} is outside 0..{}", d.len())));
    }
    match (cfg.topk, cfg.objective) {
        (Some(k), obj) => {
            let mut s = TopKState::new(prior, d, cfg.eps, k, cfg.metric, obj, w0)?;
            run(&mut s, d, prior, cfg, w0)
        }
        (None, Objective::MinimizeQloss) => {
            let mut s = QlossState::new(prior, d, cfg.eps, cfg.metric, w0);
            run(&mut s, d, prior, cfg, w0)
        }
        (None, Objective::MaximizePc) => {
            let mut s = RebuildState::new(RangeObjective::pc(prior, d, cfg.eps, cfg.metric, cfg.attack), w0)?;
            run(&mut s, d, prior, cfg, w0)
        }
    }
}

fn run<S: RangeState>(state: &mut S, d: &DistanceMatrix, prior: &Prior, cfg: &OptimizationConfig, w0: &OutputRange) -> Result<OptimizationResult> {
    let initial = state.current();
    let theta = match cfg.theta {
        Theta::InitialQloss => Some(initial.q_loss),
        Theta::Fixed(t) => Some(t),
        Theta::Unconstrained => None,
    };
    if let Some(t) = theta {
        if initial.q_loss > t {
            return Err(Error::ConstraintViolated { qloss: initial.q_loss, theta: t });
        }
    }
    let outcome = search(state, cfg.objective, theta, cfg.max_sweeps);
    let final_range = OutputRange::new(state.members().to_vec(), d.len())?;
    let last = state.current();
    let report = |r: &OutputRange| -> Result<EvaluationReport> {
        EvaluationReport::evaluate(prior, &gem_matrix(d, r, cfg.eps)?, d, cfg.metric, cfg.attack)
    };
    let (initial_report, final_report) = if cfg.reports {
        (Some(report(w0)?), Some(report(&final_range)?))
    } else {
        (None, None)
    };
    Ok(OptimizationResult {
        objective: cfg.objective,
        initial_range: w0.clone(),
        final_range,
        trace: outcome.trace,
        sweeps: outcome.sweeps,
        hit_sweep_cap: outcome.capped,
        theta,
        initial_objective: initial.objective.map(|o| cfg.objective.natural(o)),
        final_objective: last.objective.map(|o| cfg.objective.natural(o)),
        initial_q_loss: initial.q_loss,
        final_q_loss: last.q_loss,
        initial_report,
        final_report,
    })
}

/// Initial range for the PC search: greedy quality-loss minimization from
/// `V` with no constraint, using the O(|V|) incremental update.
pub fn init_range_by_qloss(d: &DistanceMatrix, prior: &Prior, eps: f64) -> Result<OutputRange> {
    let mut cfg = OptimizationConfig::new(eps, Objective::MinimizeQloss);
    cfg.theta = Theta::Unconstrained;
    cfg.reports = false;
    Ok(greedy_optimize(d, prior, &cfg, &OutputRange::full(d.len()))?.final_range)
}

/// Exact quality loss of `GEM_W` in the search's own incremental arithmetic,
/// after removing `removals` one by one. Exposed for consistency checks.
pub fn incremental_qloss_trajectory(
    d: &DistanceMatrix,
    prior: &Prior,
    eps: f64,
    metric: Metric,
    w0: &OutputRange,
    removals: &[usize],
) -> Result<Vec<f64>> {
    let mut s = QlossState::new(prior, d, eps, metric, w0);
    let mut out = Vec::with_capacity(removals.len());
    for &v in removals {
        if !s.members().contains(&v) || s.members().len() == 1 {
            return Err(Error::InvalidRange(format!("cannot remove {v}")));
        }
        let predicted = s.try_remove(v).q_loss;
        s.remove(v);
        debug_assert_eq!(predicted, s.current().q_loss);
        out.push(s.current().q_loss);
    }
    Ok(out)
}

/// Top-k objective values after removing `removals` one by one, checking
/// that each speculative evaluation equals the committed state.
pub fn topk_trajectory(
    d: &DistanceMatrix,
    prior: &Prior,
    eps: f64,
    k: usize,
    metric: Metric,
    w0: &OutputRange,
    removals: &[usize],
) -> Result<Vec<(f64, f64)>> {
    let mut s = TopKState::new(prior, d, eps, k, metric, Objective::MaximizePc, w0)?;
    let mut out = Vec::with_capacity(removals.len());
    for &v in removals {
        if !s.members().contains(&v) || s.members().len() == 1 {
            return Err(Error::InvalidRange(format!("cannot remove {v}")));
        }
        let predicted = s.try_remove(v);
        s.remove(v);
        if predicted != s.current() {
            return Err(Error::InvalidParameter(format!("speculative value diverged at removal of {v}")));
        }
        out.push((s.q_loss(), s.ae()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{all_pairs, make_lattice, make_line};
    use crate::metrics::q_loss;

    fn subsets(n: usize) -> impl Iterator<Item = Vec<usize>> {
        (1u32..(1 << n)).map(move |mask| (0..n).filter(|i| mask & (1 << i) != 0).collect())
    }

    #[test]
    fn three_node_line_matches_exhaustive_qloss_minimum() {
        let d = all_pairs(&make_line(3, 2.0).unwrap());
        let prior = Prior::uniform(3);
        let mut cfg = OptimizationConfig::new(0.01, Objective::MinimizeQloss);
        cfg.theta = Theta::Unconstrained;
        let r = greedy_optimize(&d, &prior, &cfg, &OutputRange::full(3)).unwrap();
        let best = subsets(3)
            .map(|s| {
                let m = gem_matrix(&d, &OutputRange::new(s, 3).unwrap(), 0.01).unwrap();
                q_loss(&prior, &m, &d, Metric::Shortest).unwrap()
            })
            .fold(f64::INFINITY, f64::min);
        assert!((r.final_q_loss - best).abs() < 1e-12, "{} vs {best}", r.final_q_loss);
        assert_eq!(r.final_range.as_slice(), &[1]);
    }

    #[test]
    fn fixed_point_leaves_range_alone() {
        let d = all_pairs(&make_line(3, 2.0).unwrap());
        let cfg = OptimizationConfig::new(0.01, Objective::MinimizeQloss);
        let w0 = OutputRange::new(vec![1], 3).unwrap();
        let r = greedy_optimize(&d, &Prior::uniform(3), &cfg, &w0).unwrap();
        assert!(r.trace.is_empty());
        assert_eq!(r.final_range, w0);
        assert_eq!(r.sweeps, 1);
    }

    #[test]
    fn constraint_violation_at_start_is_an_error() {
        let d = all_pairs(&make_line(4, 3.0).unwrap());
        let mut cfg = OptimizationConfig::new(0.01, Objective::MaximizePc);
        cfg.theta = Theta::Fixed(1e-6);
        let err = greedy_optimize(&d, &Prior::uniform(4), &cfg, &OutputRange::full(4)).unwrap_err();
        assert!(matches!(err, Error::ConstraintViolated { .. }));
    }

    #[test]
    fn config_validation() {
        let d = all_pairs(&make_line(4, 3.0).unwrap());
        let w0 = OutputRange::full(4);
        let mut cfg = OptimizationConfig::new(0.01, Objective::MaximizePc);
        cfg.topk = Some(2);
        cfg.attack = Attack::Optimal;
        assert!(greedy_optimize(&d, &Prior::uniform(4), &cfg, &w0).is_err());
        cfg.topk = Some(0);
        assert!(greedy_optimize(&d, &Prior::uniform(4), &cfg, &w0).is_err());
        let cfg = OptimizationConfig::new(0.0, Objective::MaximizePc);
        assert!(greedy_optimize(&d, &Prior::uniform(4), &cfg, &w0).is_err());
    }

    #[test]
    fn incremental_qloss_matches_recomputation() {
        let d = all_pairs(&make_lattice(6, 6, 100.0).unwrap());
        let weights: Vec<f64> = (0..36).map(|i| 1.0 + ((i * 7) % 5) as f64).collect();
        let prior = Prior::from_weights(weights).unwrap();
        let removals: Vec<usize> = (0..36).map(|i| (i * 13) % 36).take(35).collect();
        let w0 = OutputRange::full(36);
        let traj = incremental_qloss_trajectory(&d, &prior, 0.01, Metric::Shortest, &w0, &removals).unwrap();
        let mut members: Vec<usize> = (0..36).collect();
        for (step, &v) in removals.iter().enumerate() {
            members.retain(|&w| w != v);
            let m = gem_matrix(&d, &OutputRange::new(members.clone(), 36).unwrap(), 0.01).unwrap();
            let exact = q_loss(&prior, &m, &d, Metric::Shortest).unwrap();
            assert!((traj[step] - exact).abs() < 1e-9, "step {step}: {} vs {exact}", traj[step]);
        }
    }

    #[test]
    fn topk_full_k_is_exact() {
        let d = all_pairs(&make_lattice(4, 5, 100.0).unwrap());
        let prior = Prior::from_weights((0..20).map(|i| 1.0 + (i % 3) as f64).collect()).unwrap();
        let range = OutputRange::new(vec![0, 3, 6, 7, 11, 12, 18], 20).unwrap();
        let m = gem_matrix(&d, &range, 0.01).unwrap();
        let exact_q = q_loss(&prior, &m, &d, Metric::Shortest).unwrap();
        let h = crate::adversary::posterior_strategy(&prior, &m).unwrap();
        let exact_ae = crate::metrics::adversarial_error(&prior, &m, &h, &d, Metric::Shortest).unwrap();
        let q = approx_qloss_topk(&prior, &d, &range, 0.01, range.len(), Metric::Shortest).unwrap();
        let ae = approx_ae_topk(&prior, &d, &range, 0.01, range.len(), Metric::Shortest).unwrap();
        assert!((q - exact_q).abs() < 1e-9);
        assert!((ae - exact_ae).abs() < 1e-9);
        assert!(approx_qloss_topk(&prior, &d, &range, 0.01, 0, Metric::Shortest).is_err());
        assert!(approx_qloss_topk(&prior, &d, &range, 0.01, 8, Metric::Shortest).is_err());
    }

    #[test]
    fn topk_one_is_nearest_member() {
        let d = all_pairs(&make_lattice(4, 4, 100.0).unwrap());
        let prior = Prior::uniform(16);
        let range = OutputRange::new(vec![0, 5, 15], 16).unwrap();
        let q = approx_qloss_topk(&prior, &d, &range, 0.01, 1, Metric::Shortest).unwrap();
        let expected: f64 = (0..16)
            .map(|v| range.as_slice().iter().map(|&o| d.shortest(v, o)).fold(f64::INFINITY, f64::min) / 16.0)
            .sum();
        assert!((q - expected).abs() < 1e-9);
    }

    #[test]
    fn topk_incremental_matches_fresh_build() {
        let d = all_pairs(&make_lattice(7, 7, 100.0).unwrap());
        let prior = Prior::from_weights((0..49).map(|i| 1.0 + ((i * 5) % 7) as f64).collect()).unwrap();
        let w0 = OutputRange::full(49);
        let removals: Vec<usize> = (0..49).map(|i| (i * 17) % 49).take(45).collect();
        let traj = topk_trajectory(&d, &prior, 0.01, 6, Metric::Shortest, &w0, &removals).unwrap();
        let mut members: Vec<usize> = (0..49).collect();
        for (step, &v) in removals.iter().enumerate() {
            members.retain(|&w| w != v);
            let r = OutputRange::new(members.clone(), 49).unwrap();
            let k = 6.min(r.len());
            let q = approx_qloss_topk(&prior, &d, &r, 0.01, k, Metric::Shortest).unwrap();
            let ae = approx_ae_topk(&prior, &d, &r, 0.01, k, Metric::Shortest).unwrap();
            assert!((traj[step].0 - q).abs() < 1e-9 * q.max(1.0), "step {step} q");
            assert!((traj[step].1 - ae).abs() < 1e-9 * ae.max(1.0), "step {step} ae");
        }
    }

    #[test]
    fn exact_and_topk_full_searches_agree() {
        let d = all_pairs(&make_lattice(3, 4, 100.0).unwrap());
        let prior = Prior::from_weights(vec![5.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 4.0]).unwrap();
        let w0 = OutputRange::full(12);
        let cfg = OptimizationConfig::new(0.01, Objective::MaximizePc);
        let exact = greedy_optimize(&d, &prior, &cfg, &w0).unwrap();
        let mut tk = cfg.clone();
        tk.topk = Some(12);
        let approx = greedy_optimize(&d, &prior, &tk, &w0).unwrap();
        assert_eq!(exact.final_range, approx.final_range);
        assert!((exact.final_objective.unwrap() - approx.final_objective.unwrap()).abs() < 1e-9);
    }

    #[test]
    fn search_is_deterministic() {
        let d = all_pairs(&make_lattice(4, 4, 100.0).unwrap());
        let prior = Prior::from_weights((0..16).map(|i| if i == 5 || i == 10 { 6.0 } else { 1.0 }).collect()).unwrap();
        let cfg = OptimizationConfig::new(0.01, Objective::MaximizePc);
        let w0 = init_range_by_qloss(&d, &prior, 0.01).unwrap();
        let a = greedy_optimize(&d, &prior, &cfg, &w0).unwrap();
        let b = greedy_optimize(&d, &prior, &cfg, &w0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_vertex_init() {
        let d = DistanceMatrix::from_parts(1, vec![0.0], vec![0.0]).unwrap();
        let r = init_range_by_qloss(&d, &Prior::uniform(1), 0.01).unwrap();
        assert_eq!(r.as_slice(), &[0]);
    }
}
