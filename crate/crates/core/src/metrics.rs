//! Utility and privacy functionals: quality loss, adversarial error, the
//! performance criterion `PC = AE / Q^loss`, true probability, and the two
//! characteristic bounds (hiding function, informed attacker).

use crate::adversary::{map_attack, optimal_attack, posterior_strategy, InferenceStrategy, Prior};
use crate::error::{Error, Result};
use crate::graph::{DistanceMatrix, Metric};
use crate::mechanism::MechanismMatrix;

/// Adversary model used for AE and PC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Attack {
    /// Distance-minimizing Bayes decision per observation.
    Optimal,
    /// The posterior distribution itself.
    Posterior,
}

impl Attack {
    pub fn as_str(&self) -> &'static str {
        match self {
            Attack::Optimal => "optimal",
            Attack::Posterior => "posterior",
        }
    }
}

impl std::str::FromStr for Attack {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "optimal" => Ok(Attack::Optimal),
            "posterior" => Ok(Attack::Posterior),
            other => Err(Error::InvalidParameter(format!("unknown attack '{other}'"))),
        }
    }
}

impl std::fmt::Display for Attack {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

fn check(prior: &Prior, m: &MechanismMatrix, d: &DistanceMatrix) -> Result<()> {
    if prior.len() != m.n_inputs() || d.len() != m.n_inputs() {
        return Err(Error::InvalidParameter(format!(
            "size mismatch: prior {}, mechanism {}, distances {}",
            prior.len(),
            m.n_inputs(),
            d.len()
        )));
    }
    Ok(())
}

/// Expected distance between the true vertex and the pseudolocation.
pub fn q_loss(prior: &Prior, m: &MechanismMatrix, d: &DistanceMatrix, metric: Metric) -> Result<f64> {
    check(prior, m, d)?;
    let outputs = m.output_range().as_slice();
    let mut total = 0.0;
    for v in 0..m.n_inputs() {
        let pv = prior.get(v);
        if pv == 0.0 {
            continue;
        }
        let dist = d.row(metric, v);
        let row_loss: f64 = m.row(v).iter().zip(outputs).map(|(p, &o)| p * dist[o]).sum();
        total += pv * row_loss;
    }
    Ok(total)
}

/// Expected distance between the true vertex and the adversary's guess.
pub fn adversarial_error(
    prior: &Prior,
    m: &MechanismMatrix,
    h: &InferenceStrategy,
    d: &DistanceMatrix,
    metric: Metric,
) -> Result<f64> {
    check(prior, m, d)?;
    if h.observations() != m.output_range() || h.n_vertices() != m.n_inputs() {
        return Err(Error::InvalidParameter("strategy does not match the mechanism".into()));
    }
    let n = m.n_inputs();
    let mut total = 0.0;
    let mut joint = vec![0.0; n];
    for j in 0..m.n_outputs() {
        for (v, a) in joint.iter_mut().enumerate() {
            *a = prior.get(v) * m.prob(v, j);
        }
        for (guess, &g) in h.row(j).iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            let dist = d.row(metric, guess);
            let cost: f64 = joint.iter().zip(dist).map(|(a, x)| a * x).sum();
            total += g * cost;
        }
    }
    Ok(total)
}

/// Builds the strategy for an attack model.
pub fn attack_strategy(
    prior: &Prior,
    m: &MechanismMatrix,
    d: &DistanceMatrix,
    metric: Metric,
    attack: Attack,
) -> Result<InferenceStrategy> {
    match attack {
        Attack::Optimal => optimal_attack(prior, m, d, metric),
        Attack::Posterior => posterior_strategy(prior, m),
    }
}

/// `AE / Q^loss`; `None` when `Q^loss` is zero (lossless mechanism).
pub fn performance_criterion(
    prior: &Prior,
    m: &MechanismMatrix,
    d: &DistanceMatrix,
    metric: Metric,
    attack: Attack,
) -> Result<Option<f64>> {
    let q = q_loss(prior, m, d, metric)?;
    let h = attack_strategy(prior, m, d, metric, attack)?;
    let ae = adversarial_error(prior, m, &h, d, metric)?;
    Ok(ratio(ae, q))
}

pub(crate) fn ratio(ae: f64, q: f64) -> Option<f64> {
    if q > 0.0 {
        Some(ae / q)
    } else {
        None
    }
}

/// Probability that the adversary's remap lands exactly on the true vertex.
pub fn true_probability(prior: &Prior, m: &MechanismMatrix, h: &InferenceStrategy) -> Result<f64> {
    if prior.len() != m.n_inputs() || h.observations() != m.output_range() || h.n_vertices() != m.n_inputs() {
        return Err(Error::InvalidParameter("size mismatch".into()));
    }
    let mut total = 0.0;
    for v in 0..m.n_inputs() {
        for j in 0..m.n_outputs() {
            total += prior.get(v) * m.prob(v, j) * h.guess(j, v);
        }
    }
    Ok(total)
}

/// Observed worst case of a characteristic inequality next to its bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundCheck {
    /// Largest left-hand side over all checked cases.
    pub observed: f64,
    pub bound: f64,
}

impl BoundCheck {
    pub fn holds(&self, slack: f64) -> bool {
        self.observed <= self.bound + slack
    }
}

/// Hiding-function check. For every secret `v` and output `o`, compares the
/// posterior of `v` when the user reports `M(v)` with the posterior when the
/// user first applies `phi` and reports `M(phi(v))`, on the same observed
/// `o`. The largest `|ln|` of the ratio is returned with the bound
/// `2ε · sup_v d_s(v, phi(v))`.
pub fn check_hiding_bound(
    prior: &Prior,
    m: &MechanismMatrix,
    phi: &[usize],
    eps: f64,
    d: &DistanceMatrix,
) -> Result<BoundCheck> {
    check(prior, m, d)?;
    let n = m.n_inputs();
    if phi.len() != n || phi.iter().any(|&u| u >= n) {
        return Err(Error::InvalidParameter("phi must map every vertex into V".into()));
    }
    let bound = 2.0 * eps * (0..n).map(|v| d.shortest(v, phi[v])).fold(0.0, f64::max);
    let mut observed: f64 = 0.0;
    for j in 0..m.n_outputs() {
        let plain: f64 = (0..n).map(|u| prior.get(u) * m.prob(u, j)).sum();
        let hidden: f64 = (0..n).map(|u| prior.get(u) * m.prob(phi[u], j)).sum();
        if !(plain > 0.0) || !(hidden > 0.0) {
            continue;
        }
        for v in 0..n {
            let (a, b) = (m.prob(v, j), m.prob(phi[v], j));
            if prior.get(v) == 0.0 || a == 0.0 || b == 0.0 {
                continue;
            }
            // ln(π(v) a / plain) − ln(π(v) b / hidden)
            let lr = (a.ln() - plain.ln()) - (b.ln() - hidden.ln());
            observed = observed.max(lr.abs());
        }
    }
    Ok(BoundCheck { observed, bound })
}

/// Informed-attacker check: an adversary who knows the secret lies in `subset`
/// gains at most `ε · diam_s(subset)` in `ln(π_N(v) / p_N(v | o))`.
pub fn check_informed_bound(
    prior: &Prior,
    m: &MechanismMatrix,
    subset: &[usize],
    eps: f64,
    d: &DistanceMatrix,
) -> Result<BoundCheck> {
    check(prior, m, d)?;
    if subset.is_empty() {
        return Err(Error::InvalidParameter("subset is empty".into()));
    }
    if subset.iter().any(|&v| v >= m.n_inputs()) {
        return Err(Error::InvalidParameter("subset contains a vertex outside V".into()));
    }
    let mass: f64 = subset.iter().map(|&v| prior.get(v)).sum();
    if !(mass > 0.0) {
        return Err(Error::InvalidDistribution("prior has zero mass on the subset".into()));
    }
    let mut diameter: f64 = 0.0;
    for &u in subset {
        for &v in subset {
            diameter = diameter.max(d.shortest(u, v));
        }
    }
    let mut observed: f64 = 0.0;
    for j in 0..m.n_outputs() {
        let evidence: f64 = subset.iter().map(|&u| prior.get(u) / mass * m.prob(u, j)).sum();
        if !(evidence > 0.0) {
            continue;
        }
        for &v in subset {
            let p = m.prob(v, j);
            if prior.get(v) == 0.0 || p == 0.0 {
                continue;
            }
            // ln(π_N(v) / p_N(v|o)) = ln(evidence / prob(v, j))
            observed = observed.max(evidence.ln() - p.ln());
        }
    }
    Ok(BoundCheck { observed, bound: eps * diameter })
}

/// One evaluation of a mechanism against a prior.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub metric: Metric,
    pub attack: Attack,
    pub q_loss: f64,
    pub ae: f64,
    /// `None` when `q_loss == 0`, rendered as `NA`.
    pub pc: Option<f64>,
    /// True probability under the MAP remap.
    pub tp: f64,
}

impl EvaluationReport {
    /// Column order of [`to_csv_row`](Self::to_csv_row).
    pub const CSV_HEADER: &'static str = "metric,attack,q_loss,ae,pc,tp";

    pub fn evaluate(prior: &Prior, m: &MechanismMatrix, d: &DistanceMatrix, metric: Metric, attack: Attack) -> Result<Self> {
        let q_loss = q_loss(prior, m, d, metric)?;
        let h = attack_strategy(prior, m, d, metric, attack)?;
        let ae = adversarial_error(prior, m, &h, d, metric)?;
        let tp = true_probability(prior, m, &map_attack(prior, m)?)?;
        Ok(EvaluationReport { metric, attack, q_loss, ae, pc: ratio(ae, q_loss), tp })
    }

    pub fn to_csv_row(&self) -> String {
        let pc = self.pc.map_or_else(|| "NA".to_string(), |p| p.to_string());
        format!("{},{},{},{},{},{}", self.metric, self.attack, self.q_loss, self.ae, pc, self.tp)
    }

    pub fn from_csv_row(row: &str) -> Result<Self> {
        let f: Vec<&str> = row.trim().split(',').collect();
        let perr = |m: &str| Error::Parse { line: 1, message: m.to_string() };
        if f.len() != 6 {
            return Err(perr("expected 6 columns"));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| perr(&format!("bad number '{s}'")));
        Ok(EvaluationReport {
            metric: f[0].parse()?,
            attack: f[1].parse()?,
            q_loss: num(f[2])?,
            ae: num(f[3])?,
            pc: if f[4] == "NA" { None } else { Some(num(f[4])?) },
            tp: num(f[5])?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{all_pairs, make_line, make_two_vertex};
    use crate::mechanism::{gem_matrix, OutputRange};

    fn two_vertex(shortest: f64) -> (DistanceMatrix, MechanismMatrix) {
        let d = all_pairs(&make_two_vertex(100.0, shortest).unwrap());
        let m = gem_matrix(&d, &OutputRange::full(2), 0.01).unwrap();
        (d, m)
    }

    #[test]
    fn q_loss_examples() {
        let d = all_pairs(&make_line(3, 2.0).unwrap());
        assert_eq!(q_loss(&Prior::uniform(3), &MechanismMatrix::identity(3), &d, Metric::Shortest).unwrap(), 0.0);
        let c = MechanismMatrix::constant(3, 1);
        let q = q_loss(&Prior::uniform(3), &c, &d, Metric::Shortest).unwrap();
        assert!((q - 2.0 / 3.0).abs() < 1e-15);

        let (d, m) = two_vertex(100.0);
        let q = q_loss(&Prior::uniform(2), &m, &d, Metric::Shortest).unwrap();
        let leave = 1.0 - 1.0 / (1.0 + (-0.5f64).exp());
        assert!((q - 100.0 * leave).abs() < 1e-10);
        assert!((q - 37.754).abs() < 1e-3);
    }

    #[test]
    fn identity_strategy_ae_is_q_loss() {
        let d = all_pairs(&make_line(5, 400.0).unwrap());
        let m = gem_matrix(&d, &OutputRange::new(vec![0, 1, 4], 5).unwrap(), 0.01).unwrap();
        let prior = Prior::new(vec![0.1, 0.3, 0.2, 0.25, 0.15]).unwrap();
        let ae = adversarial_error(&prior, &m, &InferenceStrategy::identity(&m), &d, Metric::Shortest).unwrap();
        let q = q_loss(&prior, &m, &d, Metric::Shortest).unwrap();
        assert!((ae - q).abs() < 1e-12);
    }

    #[test]
    fn constant_mechanism_optimal_ae() {
        let d = all_pairs(&make_line(3, 2.0).unwrap());
        let c = MechanismMatrix::constant(3, 0);
        let h = optimal_attack(&Prior::uniform(3), &c, &d, Metric::Shortest).unwrap();
        let ae = adversarial_error(&Prior::uniform(3), &c, &h, &d, Metric::Shortest).unwrap();
        assert!((ae - 2.0 / 3.0).abs() < 1e-15);
        let id = MechanismMatrix::identity(3);
        let h = optimal_attack(&Prior::uniform(3), &id, &d, Metric::Shortest).unwrap();
        assert_eq!(adversarial_error(&Prior::uniform(3), &id, &h, &d, Metric::Shortest).unwrap(), 0.0);
    }

    #[test]
    fn pc_extremes() {
        let d = all_pairs(&make_line(3, 2.0).unwrap());
        // observation determines the input exactly: fully invertible
        let swap = crate::mechanism::postprocess(&MechanismMatrix::identity(3), |w| 2 - w).unwrap();
        let pc = performance_criterion(&Prior::uniform(3), &swap, &d, Metric::Shortest, Attack::Optimal).unwrap();
        assert_eq!(pc, Some(0.0));
        let id = MechanismMatrix::identity(3);
        assert_eq!(performance_criterion(&Prior::uniform(3), &id, &d, Metric::Shortest, Attack::Optimal).unwrap(), None);
        // two-vertex GEM: optimal guess equals the observation
        let (d, m) = two_vertex(100.0);
        let pc = performance_criterion(&Prior::uniform(2), &m, &d, Metric::Shortest, Attack::Optimal).unwrap();
        assert!((pc.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tp_examples() {
        let id = MechanismMatrix::identity(4);
        let tp = true_probability(&Prior::uniform(4), &id, &InferenceStrategy::identity(&id)).unwrap();
        assert!((tp - 1.0).abs() < 1e-15);
        for (s, expected) in [(1000.0, 0.99331), (100.0, 0.62246)] {
            let (_, m) = two_vertex(s);
            let tp = true_probability(&Prior::uniform(2), &m, &map_attack(&Prior::uniform(2), &m).unwrap()).unwrap();
            assert!((tp - expected).abs() < 1e-5);
            assert!((tp - 1.0 / (1.0 + (-0.01 * s / 2.0f64).exp())).abs() < 1e-12);
        }
    }

    #[test]
    fn hiding_bound_identity_and_median() {
        let d = all_pairs(&make_line(5, 400.0).unwrap());
        let m = gem_matrix(&d, &OutputRange::full(5), 0.01).unwrap();
        let prior = Prior::uniform(5);
        let id: Vec<usize> = (0..5).collect();
        let c = check_hiding_bound(&prior, &m, &id, 0.01, &d).unwrap();
        assert_eq!((c.observed, c.bound), (0.0, 0.0));
        let med = d.one_median();
        let c = check_hiding_bound(&prior, &m, &[med; 5], 0.01, &d).unwrap();
        assert_eq!(c.bound, 2.0 * 0.01 * d.eccentricity(med));
        assert!(c.holds(1e-9));
    }

    #[test]
    fn informed_bound_examples() {
        let d = all_pairs(&make_line(5, 400.0).unwrap());
        let m = gem_matrix(&d, &OutputRange::full(5), 0.01).unwrap();
        let prior = Prior::uniform(5);
        let c = check_informed_bound(&prior, &m, &[3], 0.01, &d).unwrap();
        assert_eq!(c.bound, 0.0);
        assert!(c.observed.abs() < 1e-15);
        let all: Vec<usize> = (0..5).collect();
        let c = check_informed_bound(&prior, &m, &all, 0.01, &d).unwrap();
        assert_eq!(c.bound, 0.01 * d.diameter());
        assert!(c.holds(1e-9));
        assert!(check_informed_bound(&prior, &m, &[], 0.01, &d).is_err());
        let skewed = Prior::new(vec![1.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(check_informed_bound(&skewed, &m, &[2, 3], 0.01, &d).is_err());
    }

    #[test]
    fn report_round_trip() {
        let (d, m) = two_vertex(100.0);
        let r = EvaluationReport::evaluate(&Prior::uniform(2), &m, &d, Metric::Shortest, Attack::Optimal).unwrap();
        assert_eq!(EvaluationReport::from_csv_row(&r.to_csv_row()).unwrap(), r);
        let d3 = all_pairs(&make_line(3, 2.0).unwrap());
        let r = EvaluationReport::evaluate(&Prior::uniform(3), &MechanismMatrix::identity(3), &d3, Metric::Euclidean, Attack::Posterior)
            .unwrap();
        assert!(r.to_csv_row().contains(",NA,"));
        assert_eq!(EvaluationReport::from_csv_row(&r.to_csv_row()).unwrap(), r);
    }
}
