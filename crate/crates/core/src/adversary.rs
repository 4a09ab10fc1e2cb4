//! Inference attacks against a mechanism, assuming the adversary knows the
//! user's prior exactly.
//!
//! The optimal attack minimizes expected inference distance. That linear
//! program has no coupling between observations, so it is solved exactly by
//! picking, for every observation, the vertex with the smallest
//! prior-weighted expected distance. [`brute_force_attack`] enumerates every
//! deterministic strategy and serves as the oracle for that shortcut.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{DistanceMatrix, Metric};
use crate::mechanism::{MechanismMatrix, OutputRange, ROW_TOLERANCE};

/// Largest strategy space [`brute_force_attack`] will enumerate.
pub const BRUTE_FORCE_LIMIT: f64 = 1e6;

/// Probability vector over vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct Prior(Vec<f64>);

impl Prior {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("prior is empty".into()));
        }
        if probs.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidDistribution("prior has a negative or non-finite entry".into()));
        }
        let s: f64 = probs.iter().sum();
        if (s - 1.0).abs() > ROW_TOLERANCE {
            return Err(Error::InvalidDistribution(format!("prior sums to {s}")));
        }
        Ok(Prior(probs))
    }

    /// Normalizes non-negative weights. Fails when the total mass is zero.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidDistribution("weights must be finite and non-negative".into()));
        }
        let s: f64 = weights.iter().sum();
        if !(s > 0.0) {
            return Err(Error::InvalidDistribution("weights have zero total mass".into()));
        }
        Prior::new(weights.into_iter().map(|w| w / s).collect())
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0);
        Prior(vec![1.0 / n as f64; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, v: usize) -> f64 {
        self.0[v]
    }

    /// `vertex_id,probability` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("vertex_id,probability\n");
        for (v, p) in self.0.iter().enumerate() {
            let _ = writeln!(out, "{v},{p}");
        }
        out
    }

    /// Parses `vertex_id,probability` rows (header optional). Unlisted
    /// vertices get probability 0; the listed mass must sum to 1 within 1e-6.
    /// Totals off by more than float noise are renormalized.
    pub fn from_csv(text: &str, n: usize) -> Result<Self> {
        let mut probs = vec![0.0; n];
        let mut seen = vec![false; n];
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || (i == 0 && line.starts_with("vertex_id")) {
                continue;
            }
            let perr = |message: String| Error::Parse { line: i + 1, message };
            let (v, p) = line.split_once(',').ok_or_else(|| perr(format!("expected 'vertex_id,probability', found '{line}'")))?;
            let v: usize = v.trim().parse().map_err(|_| perr(format!("bad vertex id '{v}'")))?;
            let p: f64 = p.trim().parse().map_err(|_| perr(format!("bad probability '{p}'")))?;
            if v >= n {
                return Err(perr(format!("vertex {v} is outside 0..{n}")));
            }
            if seen[v] {
                return Err(perr(format!("vertex {v} listed twice")));
            }
            if !(p >= 0.0) || !p.is_finite() {
                return Err(perr(format!("probability {p} is not a finite non-negative number")));
            }
            seen[v] = true;
            probs[v] = p;
        }
        let s: f64 = probs.iter().sum();
        if (s - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidDistribution(format!("prior file sums to {s}, expected 1")));
        }
        if (s - 1.0).abs() <= 1e-12 {
            return Prior::new(probs);
        }
        Prior::from_weights(probs)
    }
}

/// Adversary's remapping `h`: `guess(j, v̂) = Pr(h(W[j]) = v̂)`.
#[derive(Debug, Clone, PartialEq)]
pub struct InferenceStrategy {
    n_vertices: usize,
    observations: OutputRange,
    guess: Vec<f64>,
    degenerate: Vec<usize>,
}

impl InferenceStrategy {
    pub fn new(n_vertices: usize, observations: OutputRange, guess: Vec<f64>) -> Result<Self> {
        if guess.len() != n_vertices * observations.len() {
            return Err(Error::InvalidDistribution("strategy has the wrong size".into()));
        }
        for (j, row) in guess.chunks(n_vertices).enumerate() {
            if row.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
                return Err(Error::InvalidDistribution(format!("strategy row {j} has a bad entry")));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > ROW_TOLERANCE {
                return Err(Error::InvalidDistribution(format!("strategy row {j} sums to {s}")));
            }
        }
        Ok(InferenceStrategy { n_vertices, observations, guess, degenerate: Vec::new() })
    }

    /// Deterministic strategy guessing `choices[j]` on observation `j`.
    pub fn deterministic(n_vertices: usize, observations: OutputRange, choices: &[usize]) -> Self {
        assert_eq!(choices.len(), observations.len());
        let mut guess = vec![0.0; n_vertices * observations.len()];
        for (j, &c) in choices.iter().enumerate() {
            guess[j * n_vertices + c] = 1.0;
        }
        InferenceStrategy { n_vertices, observations, guess, degenerate: Vec::new() }
    }

    /// Takes the pseudolocation at face value.
    pub fn identity(m: &MechanismMatrix) -> Self {
        let choices = m.output_range().as_slice().to_vec();
        Self::deterministic(m.n_inputs(), m.output_range().clone(), &choices)
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn observations(&self) -> &OutputRange {
        &self.observations
    }

    #[inline]
    pub fn row(&self, j: usize) -> &[f64] {
        &self.guess[j * self.n_vertices..(j + 1) * self.n_vertices]
    }

    #[inline]
    pub fn guess(&self, j: usize, v: usize) -> f64 {
        self.guess[j * self.n_vertices + v]
    }

    /// Observation indices that had zero probability and got a placeholder row.
    pub fn degenerate_observations(&self) -> &[usize] {
        &self.degenerate
    }

    /// If every row is a point mass, the guessed vertex for each observation.
    pub fn as_deterministic(&self) -> Option<Vec<usize>> {
        (0..self.observations.len())
            .map(|j| self.row(j).iter().position(|&p| p == 1.0))
            .collect()
    }

    /// `strategy v1,<|W|>,<|V|>` header, then `<observed vertex>,<guess row>` per observation.
    pub fn to_csv(&self) -> String {
        let mut out = format!("strategy v1,{},{}\n", self.observations.len(), self.n_vertices);
        for (j, &o) in self.observations.as_slice().iter().enumerate() {
            let _ = write!(out, "{o}");
            for p in self.row(j) {
                let _ = write!(out, ",{p}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let perr = |line: usize, message: String| Error::Parse { line: line + 1, message };
        let (hl, header) = lines.next().ok_or_else(|| perr(0, "empty strategy file".into()))?;
        let fields: Vec<&str> = header.trim().split(',').collect();
        if fields.len() != 3 || fields[0] != "strategy v1" {
            return Err(perr(hl, format!("expected 'strategy v1,<|W|>,<|V|>', found '{header}'")));
        }
        let k: usize = fields[1].parse().map_err(|_| perr(hl, "bad |W|".into()))?;
        let n: usize = fields[2].parse().map_err(|_| perr(hl, "bad |V|".into()))?;
        let mut ids = Vec::with_capacity(k);
        let mut guess = Vec::with_capacity(k * n);
        for (li, line) in lines {
            let mut f = line.trim().split(',');
            let o: usize = f.next().and_then(|s| s.parse().ok()).ok_or_else(|| perr(li, "bad observation id".into()))?;
            ids.push(o);
            let before = guess.len();
            for s in f {
                guess.push(s.parse::<f64>().map_err(|_| perr(li, format!("bad probability '{s}'")))?);
            }
            if guess.len() - before != n {
                return Err(perr(li, format!("expected {n} probabilities")));
            }
        }
        if ids.len() != k || ids.windows(2).any(|p| p[0] >= p[1]) {
            return Err(Error::InvalidRange(format!("expected {k} strictly ascending observations")));
        }
        InferenceStrategy::new(n, OutputRange::new(ids, n)?, guess)
    }
}

fn check_sizes(prior: &Prior, m: &MechanismMatrix) -> Result<()> {
    if prior.len() != m.n_inputs() {
        return Err(Error::InvalidParameter(format!(
            "prior has {} entries but the mechanism has {} inputs",
            prior.len(),
            m.n_inputs()
        )));
    }
    Ok(())
}

/// Joint weights `prior[v] · prob(v, j)` for one observation column.
fn joint_column(prior: &Prior, m: &MechanismMatrix, j: usize) -> Vec<f64> {
    (0..m.n_inputs()).map(|v| prior.get(v) * m.prob(v, j)).collect()
}

/// Bayes posterior over vertices after observing output column `j`.
pub fn posterior(prior: &Prior, m: &MechanismMatrix, j: usize) -> Result<Prior> {
    check_sizes(prior, m)?;
    let joint = joint_column(prior, m, j);
    let total: f64 = joint.iter().sum();
    if !(total > 0.0) {
        return Err(Error::ZeroProbabilityObservation(j));
    }
    Ok(Prior(joint.into_iter().map(|a| a / total).collect()))
}

/// The posterior itself used as the inference function. Observations with
/// zero probability get a uniform row and are flagged.
pub fn posterior_strategy(prior: &Prior, m: &MechanismMatrix) -> Result<InferenceStrategy> {
    check_sizes(prior, m)?;
    let n = m.n_inputs();
    let k = m.n_outputs();
    let mut guess = vec![0.0; n * k];
    let mut degenerate = Vec::new();
    for (j, row) in guess.chunks_mut(n).enumerate() {
        match posterior(prior, m, j) {
            Ok(post) => row.copy_from_slice(post.probs()),
            Err(_) => {
                row.fill(1.0 / n as f64);
                degenerate.push(j);
            }
        }
    }
    Ok(InferenceStrategy { n_vertices: n, observations: m.output_range().clone(), guess, degenerate })
}

/// Candidate in `0..n_candidates` minimizing `Σ_i weights[i] · cost_row(c)[i]`,
/// lowest index on ties.
pub fn bayes_choice<'a>(weights: &[f64], n_candidates: usize, cost_row: impl Fn(usize) -> &'a [f64]) -> usize {
    let support: Vec<(usize, f64)> = weights.iter().copied().enumerate().filter(|(_, w)| *w > 0.0).collect();
    let mut best = 0;
    let mut best_cost = f64::INFINITY;
    for c in 0..n_candidates {
        let row = cost_row(c);
        let cost: f64 = if support.len() * 2 > weights.len() {
            weights.iter().zip(row).map(|(w, d)| w * d).sum()
        } else {
            support.iter().map(|&(i, w)| w * row[i]).sum()
        };
        if cost < best_cost {
            best = c;
            best_cost = cost;
        }
    }
    best
}

/// Distance-minimizing attack: for every observation, the vertex with the
/// least prior-weighted expected distance to the true location.
pub fn optimal_attack(prior: &Prior, m: &MechanismMatrix, d: &DistanceMatrix, metric: Metric) -> Result<InferenceStrategy> {
    check_sizes(prior, m)?;
    let n = m.n_inputs();
    let results: Vec<(usize, bool)> = (0..m.n_outputs())
        .into_par_iter()
        .map(|j| {
            let joint = joint_column(prior, m, j);
            let zero = !(joint.iter().sum::<f64>() > 0.0);
            (bayes_choice(&joint, n, |c| d.row(metric, c)), zero)
        })
        .collect();
    let choices: Vec<usize> = results.iter().map(|r| r.0).collect();
    let mut s = InferenceStrategy::deterministic(n, m.output_range().clone(), &choices);
    s.degenerate = results.iter().enumerate().filter(|(_, r)| r.1).map(|(j, _)| j).collect();
    Ok(s)
}

/// Maximum a posteriori remap: guesses the most probable true vertex. This is
/// the exact optimizer of the probability of guessing the true vertex.
pub fn map_attack(prior: &Prior, m: &MechanismMatrix) -> Result<InferenceStrategy> {
    check_sizes(prior, m)?;
    let n = m.n_inputs();
    let mut degenerate = Vec::new();
    let choices: Vec<usize> = (0..m.n_outputs())
        .map(|j| {
            let joint = joint_column(prior, m, j);
            let mut best = 0;
            for (v, &a) in joint.iter().enumerate() {
                if a > joint[best] {
                    best = v;
                }
            }
            if !(joint[best] > 0.0) {
                degenerate.push(j);
            }
            best
        })
        .collect();
    let mut s = InferenceStrategy::deterministic(n, m.output_range().clone(), &choices);
    s.degenerate = degenerate;
    Ok(s)
}

/// Exhaustive search over all `|V|^|W|` deterministic strategies, scoring each
/// with the full adversarial-error sum. First minimum in lexicographic order wins.
pub fn brute_force_attack(prior: &Prior, m: &MechanismMatrix, d: &DistanceMatrix, metric: Metric) -> Result<InferenceStrategy> {
    check_sizes(prior, m)?;
    let n = m.n_inputs();
    let k = m.n_outputs();
    let space = (n as f64).powi(k as i32);
    if space > BRUTE_FORCE_LIMIT {
        return Err(Error::InstanceTooLarge(space));
    }
    let mut choice = vec![0usize; k];
    let mut best = choice.clone();
    let mut best_ae = f64::INFINITY;
    loop {
        let mut ae = 0.0;
        for v in 0..n {
            for (j, &c) in choice.iter().enumerate() {
                ae += prior.get(v) * m.prob(v, j) * d.get(metric, c, v);
            }
        }
        if ae < best_ae {
            best_ae = ae;
            best.copy_from_slice(&choice);
        }
        // odometer increment, last observation fastest
        let mut pos = k;
        loop {
            if pos == 0 {
                return Ok(InferenceStrategy::deterministic(n, m.output_range().clone(), &best));
            }
            pos -= 1;
            choice[pos] += 1;
            if choice[pos] < n {
                break;
            }
            choice[pos] = 0;
        }
    }
}
