//! Exact range evaluators: a full rebuild of the restricted GEM for any
//! objective, and an O(|V|) incremental update for quality loss alone.

use crate::adversary::Prior;
use crate::error::Result;
use crate::graph::{DistanceMatrix, Metric};
use crate::mechanism::{gem_matrix, OutputRange};
use crate::metrics::{adversarial_error, attack_strategy, q_loss, ratio, Attack};

use super::{Candidate, Objective, RangeState};

/// Exact objective over a candidate output range, evaluated by rebuilding
/// the GEM restricted to that range.
#[derive(Debug, Clone)]
pub struct RangeObjective<'a> {
    prior: &'a Prior,
    d: &'a DistanceMatrix,
    eps: f64,
    metric: Metric,
    objective: Objective,
    attack: Attack,
}

/// Value of a range under a [`RangeObjective`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveValue {
    pub q_loss: f64,
    /// Present only for PC objectives; `None` inside means `Q^loss = 0`.
    pub pc: Option<Option<f64>>,
}

impl ObjectiveValue {
    /// Minimization form used by the greedy search. `None` when undefined.
    pub fn minimized(&self) -> Option<f64> {
        match self.pc {
            None => Some(self.q_loss),
            Some(pc) => pc.map(|p| -p),
        }
    }
}

impl<'a> RangeObjective<'a> {
    /// Quality loss of `GEM_W`.
    pub fn qloss(prior: &'a Prior, d: &'a DistanceMatrix, eps: f64, metric: Metric) -> Self {
        RangeObjective { prior, d, eps, metric, objective: Objective::MinimizeQloss, attack: Attack::Optimal }
    }

    /// Performance criterion of `GEM_W` against `attack`.
    pub fn pc(prior: &'a Prior, d: &'a DistanceMatrix, eps: f64, metric: Metric, attack: Attack) -> Self {
        RangeObjective { prior, d, eps, metric, objective: Objective::MaximizePc, attack }
    }

    pub fn evaluate(&self, range: &OutputRange) -> Result<ObjectiveValue> {
        let m = gem_matrix(self.d, range, self.eps)?;
        let q = q_loss(self.prior, &m, self.d, self.metric)?;
        match self.objective {
            Objective::MinimizeQloss => Ok(ObjectiveValue { q_loss: q, pc: None }),
            Objective::MaximizePc => {
                let h = attack_strategy(self.prior, &m, self.d, self.metric, self.attack)?;
                let ae = adversarial_error(self.prior, &m, &h, self.d, self.metric)?;
                Ok(ObjectiveValue { q_loss: q, pc: Some(ratio(ae, q)) })
            }
        }
    }
}

/// Rebuilds the mechanism for every candidate. Cost per candidate is that of
/// one full evaluation.
pub(crate) struct RebuildState<'a> {
    objective: RangeObjective<'a>,
    members: Vec<usize>,
    n: usize,
    current: Candidate,
}

impl<'a> RebuildState<'a> {
    pub fn new(objective: RangeObjective<'a>, w0: &OutputRange) -> Result<Self> {
        let n = objective.d.len();
        let value = objective.evaluate(w0)?;
        Ok(RebuildState {
            members: w0.as_slice().to_vec(),
            n,
            current: Candidate { objective: value.minimized(), q_loss: value.q_loss },
            objective,
        })
    }
}

impl RangeState for RebuildState<'_> {
    fn members(&self) -> &[usize] {
        &self.members
    }

    fn current(&self) -> Candidate {
        self.current
    }

    fn try_remove(&self, v: usize) -> Candidate {
        let rest: Vec<usize> = self.members.iter().copied().filter(|&w| w != v).collect();
        let range = OutputRange::new(rest, self.n).expect("non-empty by construction");
        let value = self.objective.evaluate(&range).expect("inputs validated at construction");
        Candidate { objective: value.minimized(), q_loss: value.q_loss }
    }

    fn remove(&mut self, v: usize) {
        self.current = self.try_remove(v);
        self.members.retain(|&w| w != v);
    }
}

/// Quality loss with per-row running sums `S(v) = Σ_o e(v,o)` and
/// `T(v) = Σ_o e(v,o) d(v,o)`; removing `o` subtracts one term per row.
pub(crate) struct QlossState<'a> {
    d: &'a DistanceMatrix,
    metric: Metric,
    half_eps: f64,
    /// Vertices with positive prior, and their prior mass.
    rows: Vec<(usize, f64)>,
    shift: Vec<f64>,
    s: Vec<f64>,
    t: Vec<f64>,
    members: Vec<usize>,
    q: f64,
}

/// Below this fraction of the old sum, a row is recomputed from scratch.
const CANCELLATION_GUARD: f64 = 1e-6;

impl<'a> QlossState<'a> {
    pub fn new(prior: &Prior, d: &'a DistanceMatrix, eps: f64, metric: Metric, w0: &OutputRange) -> Self {
        let rows: Vec<(usize, f64)> = prior.probs().iter().copied().enumerate().filter(|(_, p)| *p > 0.0).collect();
        let members = w0.as_slice().to_vec();
        let mut state = QlossState {
            d,
            metric,
            half_eps: eps / 2.0,
            shift: vec![0.0; rows.len()],
            s: vec![0.0; rows.len()],
            t: vec![0.0; rows.len()],
            rows,
            members,
            q: 0.0,
        };
        for r in 0..state.rows.len() {
            let (shift, s, t) = state.fresh_row(r, None);
            state.shift[r] = shift;
            state.s[r] = s;
            state.t[r] = t;
        }
        state.q = state.total(|r| state.t[r] / state.s[r]);
        state
    }

    /// `(shift, S, T)` for row `r` over the members, optionally excluding one.
    fn fresh_row(&self, r: usize, exclude: Option<usize>) -> (f64, f64, f64) {
        let v = self.rows[r].0;
        let ds = self.d.row(Metric::Shortest, v);
        let dm = self.d.row(self.metric, v);
        let shift = self
            .members
            .iter()
            .filter(|&&o| Some(o) != exclude)
            .map(|&o| ds[o])
            .fold(f64::INFINITY, f64::min);
        let (mut s, mut t) = (0.0, 0.0);
        for &o in self.members.iter().filter(|&&o| Some(o) != exclude) {
            let e = (-self.half_eps * (ds[o] - shift)).exp();
            s += e;
            t += e * dm[o];
        }
        (shift, s, t)
    }

    /// Row sums after dropping `o`; `None` means the row must be rebuilt.
    #[inline]
    fn drop_term(&self, r: usize, o: usize) -> Option<(f64, f64)> {
        let v = self.rows[r].0;
        let e = (-self.half_eps * (self.d.shortest(v, o) - self.shift[r])).exp();
        let s = self.s[r] - e;
        if s < CANCELLATION_GUARD * self.s[r] {
            return None;
        }
        Some((s, self.t[r] - e * self.d.get(self.metric, v, o)))
    }

    fn total(&self, per_row: impl Fn(usize) -> f64) -> f64 {
        self.rows.iter().enumerate().map(|(r, &(_, p))| p * per_row(r)).sum()
    }
}

impl RangeState for QlossState<'_> {
    fn members(&self) -> &[usize] {
        &self.members
    }

    fn current(&self) -> Candidate {
        Candidate { objective: Some(self.q), q_loss: self.q }
    }

    fn try_remove(&self, o: usize) -> Candidate {
        let q = self.total(|r| match self.drop_term(r, o) {
            Some((s, t)) => t / s,
            None => {
                let (_, s, t) = self.fresh_row(r, Some(o));
                t / s
            }
        });
        Candidate { objective: Some(q), q_loss: q }
    }

    fn remove(&mut self, o: usize) {
        for r in 0..self.rows.len() {
            match self.drop_term(r, o) {
                Some((s, t)) => {
                    self.s[r] = s;
                    self.t[r] = t;
                }
                None => {
                    let (shift, s, t) = self.fresh_row(r, Some(o));
                    self.shift[r] = shift;
                    self.s[r] = s;
                    self.t[r] = t;
                }
            }
        }
        self.members.retain(|&w| w != o);
        self.q = self.total(|r| self.t[r] / self.s[r]);
    }
}
