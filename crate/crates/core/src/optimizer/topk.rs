//! Top-k truncated evaluation of quality loss and posterior-attack AE.
//!
//! Every input's GEM row is restricted to its `k` nearest range members
//! (shortest-path distance, lowest id on ties) and renormalized. Removing a
//! range member only touches the inputs whose truncated row contained it and
//! the outputs those rows reach, so a candidate removal costs roughly `O(k³)`
//! instead of a full rebuild.
//!
//! Speculative and committed evaluations run the same arithmetic in the same
//! order, so the value the search accepts is bit-identical to the state it
//! commits.

use crate::adversary::Prior;
use crate::error::{Error, Result};
use crate::graph::{DistanceMatrix, Metric};
use crate::mechanism::OutputRange;

use super::{Candidate, Objective, RangeState};

/// Per-input neighbour lists are cached to this many entries past `k`.
const ORDER_SLACK: usize = 64;

type Row = Vec<(usize, f64)>;

pub(crate) struct TopKState<'a> {
    d: &'a DistanceMatrix,
    metric: Metric,
    half_eps: f64,
    k: usize,
    objective: Objective,
    /// Input slots: vertices with positive prior.
    slots: Vec<(usize, f64)>,
    in_w: Vec<bool>,
    members: Vec<usize>,
    order: Vec<Vec<usize>>,
    cursor: Vec<usize>,
    rows: Vec<Row>,
    /// For every vertex `o`: `(slot, prior · prob)` of slots whose row holds `o`, sorted by slot.
    holders: Vec<Vec<(usize, f64)>>,
    q_row: Vec<f64>,
    ae_out: Vec<f64>,
    q: f64,
    ae: f64,
}

impl<'a> TopKState<'a> {
    pub fn new(
        prior: &Prior,
        d: &'a DistanceMatrix,
        eps: f64,
        k: usize,
        metric: Metric,
        objective: Objective,
        w0: &OutputRange,
    ) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("top-k parameter must be at least 1".into()));
        }
        let n = d.len();
        if prior.len() != n {
            return Err(Error::InvalidParameter("prior and distance matrix sizes differ".into()));
        }
        let slots: Vec<(usize, f64)> = prior.probs().iter().copied().enumerate().filter(|(_, p)| *p > 0.0).collect();
        let mut in_w = vec![false; n];
        for &o in w0.as_slice() {
            in_w[o] = true;
        }
        let mut state = TopKState {
            d,
            metric,
            half_eps: eps / 2.0,
            k,
            objective,
            order: Vec::with_capacity(slots.len()),
            cursor: vec![0; slots.len()],
            rows: Vec::with_capacity(slots.len()),
            holders: vec![Vec::new(); n],
            q_row: vec![0.0; slots.len()],
            ae_out: vec![0.0; n],
            slots,
            in_w,
            members: w0.as_slice().to_vec(),
            q: 0.0,
            ae: 0.0,
        };
        for slot in 0..state.slots.len() {
            let order = state.ranked_members(slot);
            let take = state.k.min(order.len());
            let outputs: Vec<usize> = order[..take].to_vec();
            state.cursor[slot] = take;
            state.order.push(order);
            let row = state.normalize(slot, &outputs);
            state.q_row[slot] = state.row_loss(slot, &row);
            for &(o, p) in &row {
                state.holders[o].push((slot, state.slots[slot].1 * p));
            }
            state.rows.push(row);
        }
        if state.objective == Objective::MaximizePc {
            for o in 0..n {
                state.ae_out[o] = state.output_ae(&state.holders[o]);
            }
        }
        state.q = state.q_row.iter().sum();
        state.ae = state.ae_out.iter().sum();
        Ok(state)
    }

    pub fn q_loss(&self) -> f64 {
        self.q
    }

    pub fn ae(&self) -> f64 {
        self.ae
    }

    #[inline]
    fn key(&self, slot: usize, o: usize) -> (f64, usize) {
        (self.d.shortest(self.slots[slot].0, o), o)
    }

    /// Current members nearest to `slot`, sorted by `(distance, id)`, at most `k + ORDER_SLACK` long.
    fn ranked_members(&self, slot: usize) -> Vec<usize> {
        let mut all: Vec<usize> = self.members.clone();
        let keep = (self.k + ORDER_SLACK).min(all.len());
        let cmp = |a: &usize, b: &usize| {
            let (ka, kb) = (self.key(slot, *a), self.key(slot, *b));
            ka.0.total_cmp(&kb.0).then(ka.1.cmp(&kb.1))
        };
        if keep < all.len() {
            all.select_nth_unstable_by(keep, cmp);
            all.truncate(keep);
        }
        all.sort_unstable_by(cmp);
        all
    }

    fn normalize(&self, slot: usize, outputs: &[usize]) -> Row {
        let v = self.slots[slot].0;
        let ds = self.d.row(Metric::Shortest, v);
        let min = outputs.iter().map(|&o| ds[o]).fold(f64::INFINITY, f64::min);
        let weights: Vec<f64> = outputs.iter().map(|&o| (-self.half_eps * (ds[o] - min)).exp()).collect();
        let total: f64 = weights.iter().sum();
        outputs.iter().zip(weights).map(|(&o, w)| (o, w / total)).collect()
    }

    fn row_loss(&self, slot: usize, row: &Row) -> f64 {
        let (v, p) = self.slots[slot];
        let dm = self.d.row(self.metric, v);
        p * row.iter().map(|&(o, q)| q * dm[o]).sum::<f64>()
    }

    /// Posterior-attack AE contributed by one output, given its holders' joint weights.
    fn output_ae(&self, holders: &[(usize, f64)]) -> f64 {
        let evidence: f64 = holders.iter().map(|h| h.1).sum();
        if !(evidence > 0.0) {
            return 0.0;
        }
        let mut acc = 0.0;
        for &(u, a) in holders {
            let du = self.d.row(self.metric, self.slots[u].0);
            let inner: f64 = holders.iter().map(|&(w, b)| b * du[self.slots[w].0]).sum();
            acc += a * inner;
        }
        acc / evidence
    }

    /// Next member after the current row of `slot`, skipping `removed`.
    /// Returns the member and the cursor position just past it.
    fn next_member(&self, slot: usize, removed: usize) -> Option<(usize, Option<usize>)> {
        let order = &self.order[slot];
        for (i, &o) in order.iter().enumerate().skip(self.cursor[slot]) {
            if self.in_w[o] && o != removed {
                return Some((o, Some(i + 1)));
            }
        }
        // cached order exhausted: scan every member past the last row key
        let last = self.rows[slot].iter().map(|&(o, _)| self.key(slot, o)).fold(None, |acc: Option<(f64, usize)>, k| {
            match acc {
                Some(a) if (a.0, a.1) >= (k.0, k.1) => Some(a),
                _ => Some(k),
            }
        });
        let mut best: Option<(f64, usize)> = None;
        for &o in &self.members {
            if o == removed || self.rows[slot].iter().any(|&(r, _)| r == o) {
                continue;
            }
            let k = self.key(slot, o);
            if let Some(l) = last {
                if (k.0, k.1) <= (l.0, l.1) {
                    continue;
                }
            }
            if best.is_none_or(|b| (k.0, k.1) < (b.0, b.1)) {
                best = Some(k);
            }
        }
        best.map(|(_, o)| (o, None))
    }

    /// New truncated rows for every slot holding `o`.
    fn replacement_rows(&self, o: usize) -> Vec<(usize, Row, Option<(usize, Option<usize>)>)> {
        self.holders[o]
            .iter()
            .map(|&(slot, _)| {
                let mut outputs: Vec<usize> = self.rows[slot].iter().map(|r| r.0).filter(|&x| x != o).collect();
                let next = self.next_member(slot, o);
                if let Some((nx, _)) = next {
                    outputs.push(nx);
                }
                (slot, self.normalize(slot, &outputs), next)
            })
            .collect()
    }

    /// Holder list of `j` after the slots in `changed` take their new rows.
    fn updated_holders(&self, j: usize, changed: &[(usize, Row, Option<(usize, Option<usize>)>)]) -> Vec<(usize, f64)> {
        let mut out: Vec<(usize, f64)> = self.holders[j]
            .iter()
            .copied()
            .filter(|h| changed.binary_search_by(|c| c.0.cmp(&h.0)).is_err())
            .collect();
        for (slot, row, _) in changed {
            if let Some(&(_, p)) = row.iter().find(|r| r.0 == j) {
                let pos = out.partition_point(|h| h.0 < *slot);
                out.insert(pos, (*slot, self.slots[*slot].1 * p));
            }
        }
        out
    }

    /// Outputs whose holder lists change when `o` is removed, sorted, excluding `o`.
    fn touched_outputs(&self, o: usize, changed: &[(usize, Row, Option<(usize, Option<usize>)>)]) -> Vec<usize> {
        let mut touched: Vec<usize> = changed
            .iter()
            .flat_map(|(slot, row, _)| self.rows[*slot].iter().map(|r| r.0).chain(row.iter().map(|r| r.0)))
            .filter(|&j| j != o)
            .collect();
        touched.sort_unstable();
        touched.dedup();
        touched
    }

    fn evaluate(&self, o: usize) -> (f64, f64, Vec<(usize, Row, Option<(usize, Option<usize>)>)>, Vec<(usize, f64)>) {
        let changed = self.replacement_rows(o);
        let mut q_new: Vec<(usize, f64)> = changed.iter().map(|(s, row, _)| (*s, self.row_loss(*s, row))).collect();
        q_new.sort_unstable_by_key(|x| x.0);
        let q = merged_sum(&self.q_row, &q_new);

        let mut ae_new = Vec::new();
        let mut ae = 0.0;
        if self.objective == Objective::MaximizePc {
            for j in self.touched_outputs(o, &changed) {
                ae_new.push((j, self.output_ae(&self.updated_holders(j, &changed))));
            }
            let pos = ae_new.partition_point(|x| x.0 < o);
            ae_new.insert(pos, (o, 0.0));
            ae = merged_sum(&self.ae_out, &ae_new);
        }
        (q, ae, changed, ae_new)
    }

    fn candidate(&self, q: f64, ae: f64) -> Candidate {
        let objective = match self.objective {
            Objective::MinimizeQloss => Some(q),
            Objective::MaximizePc => {
                if q > 0.0 {
                    Some(-(ae / q))
                } else {
                    None
                }
            }
        };
        Candidate { objective, q_loss: q }
    }
}

/// `Σ base[i]` in index order, with `replace` (sorted by index) overriding entries.
fn merged_sum(base: &[f64], replace: &[(usize, f64)]) -> f64 {
    let mut total = 0.0;
    let mut it = replace.iter().peekable();
    for (i, &b) in base.iter().enumerate() {
        match it.peek() {
            Some(&&(j, v)) if j == i => {
                total += v;
                it.next();
            }
            _ => total += b,
        }
    }
    total
}

impl RangeState for TopKState<'_> {
    fn members(&self) -> &[usize] {
        &self.members
    }

    fn current(&self) -> Candidate {
        self.candidate(self.q, self.ae)
    }

    fn try_remove(&self, o: usize) -> Candidate {
        let (q, ae, _, _) = self.evaluate(o);
        self.candidate(q, ae)
    }

    fn remove(&mut self, o: usize) {
        let (_, _, changed, ae_new) = self.evaluate(o);
        let touched: Vec<(usize, Vec<(usize, f64)>)> = if self.objective == Objective::MaximizePc {
            ae_new.iter().filter(|x| x.0 != o).map(|&(j, _)| (j, self.updated_holders(j, &changed))).collect()
        } else {
            let mut js = self.touched_outputs(o, &changed);
            js.retain(|&j| j != o);
            js.into_iter().map(|j| (j, self.updated_holders(j, &changed))).collect()
        };
        for (j, h) in touched {
            self.holders[j] = h;
        }
        self.holders[o].clear();
        self.in_w[o] = false;
        self.members.retain(|&w| w != o);
        for (slot, row, next) in changed {
            self.q_row[slot] = self.row_loss(slot, &row);
            self.rows[slot] = row;
            match next {
                Some((_, Some(pos))) => self.cursor[slot] = pos,
                Some((_, None)) | None => {
                    // cache exhausted: rebuild from the current members
                    let order = self.ranked_members(slot);
                    let in_row = |x: &usize| self.rows[slot].iter().any(|r| r.0 == *x);
                    let pos = order.iter().rposition(in_row).map_or(0, |p| p + 1);
                    self.cursor[slot] = pos;
                    self.order[slot] = order;
                }
            }
        }
        for (j, v) in ae_new {
            self.ae_out[j] = v;
        }
        self.q = self.q_row.iter().sum();
        self.ae = self.ae_out.iter().sum();
    }
}

fn check_k(k: usize, range: &OutputRange) -> Result<()> {
    if k == 0 || k > range.len() {
        return Err(Error::InvalidParameter(format!("k = {k} must lie in 1..={}", range.len())));
    }
    Ok(())
}

/// Quality loss with every GEM row truncated to its `k` nearest range members.
pub fn approx_qloss_topk(prior: &Prior, d: &DistanceMatrix, range: &OutputRange, eps: f64, k: usize, metric: Metric) -> Result<f64> {
    check_k(k, range)?;
    Ok(TopKState::new(prior, d, eps, k, metric, Objective::MinimizeQloss, range)?.q_loss())
}

/// Posterior-attack AE with every GEM row truncated to its `k` nearest range members.
pub fn approx_ae_topk(prior: &Prior, d: &DistanceMatrix, range: &OutputRange, eps: f64, k: usize, metric: Metric) -> Result<f64> {
    check_k(k, range)?;
    Ok(TopKState::new(prior, d, eps, k, metric, Objective::MaximizePc, range)?.ae())
}
