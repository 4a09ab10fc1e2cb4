//! Prior builders and canned experiments on synthetic maps.
//!
//! Every runner is deterministic: matrices are computed exactly, never sampled.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::adversary::{bayes_choice, map_attack, optimal_attack, posterior_strategy, Prior};
use crate::error::{Error, Result};
use crate::graph::{all_pairs, make_cross_map, make_lattice, make_line, make_two_vertex, nearest_vertex, DistanceMatrix, Metric, RoadGraph};
use crate::mechanism::{gem_matrix, plmg_matrix, GridMechanism, OutputRange, PlanarGrid};
use crate::metrics::{adversarial_error, q_loss, true_probability, Attack, EvaluationReport};
use crate::optimizer::{greedy_optimize, init_range_by_qloss, Objective, OptimizationConfig, OptimizationResult};

/// Default POI distance decay in metres.
pub const DEFAULT_DECAY_LAMBDA: f64 = 200.0;

/// Padding of PLMG grids in units of `1/ε`; the truncated tail mass is `11 e^-10`.
pub const PLMG_PADDING_SCALE: f64 = 10.0;

/// Numeric result table with named columns. NaN cells render as `NA`.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// Inputs that produced the table, for metadata sidecars.
    pub params: Vec<(String, String)>,
}

impl Table {
    fn new(columns: &[&str]) -> Self {
        Table { columns: columns.iter().map(|s| s.to_string()).collect(), rows: Vec::new(), params: Vec::new() }
    }

    fn param(mut self, key: &str, value: impl std::fmt::Display) -> Self {
        self.params.push((key.to_string(), value.to_string()));
        self
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|x| if x.is_nan() { "NA".to_string() } else { x.to_string() }).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }
}

fn join<T: std::fmt::Display>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("epsilon must be positive, got {eps}")))
    }
}

/// Points of interest with visitor counts.
#[derive(Debug, Clone, PartialEq)]
pub struct PoiWeightedPrior {
    pub pois: Vec<(usize, f64)>,
    pub decay_lambda: f64,
}

impl PoiWeightedPrior {
    pub fn new(pois: Vec<(usize, f64)>) -> Self {
        PoiWeightedPrior { pois, decay_lambda: DEFAULT_DECAY_LAMBDA }
    }
}

/// `prior(v) ∝ Σ_s weight_s · exp(−d_s(v, s) / λ)`.
pub fn poi_prior(d: &DistanceMatrix, cfg: &PoiWeightedPrior) -> Result<Prior> {
    if !(cfg.decay_lambda > 0.0) {
        return Err(Error::InvalidParameter(format!("decay must be positive, got {}", cfg.decay_lambda)));
    }
    if cfg.pois.iter().any(|&(v, w)| v >= d.len() || !(w >= 0.0) || !w.is_finite()) {
        return Err(Error::InvalidParameter("POIs need in-range vertices and non-negative weights".into()));
    }
    if !cfg.pois.iter().any(|&(_, w)| w > 0.0) {
        return Err(Error::InvalidDistribution("all POI weights are zero".into()));
    }
    let weights = (0..d.len())
        .map(|v| cfg.pois.iter().map(|&(s, w)| w * (-d.shortest(v, s) / cfg.decay_lambda).exp()).sum())
        .collect();
    Prior::from_weights(weights)
}

/// Mass shares on chosen vertices; the remainder is spread uniformly over all vertices.
pub fn hotspot_prior(n: usize, hotspots: &[(usize, f64)]) -> Result<Prior> {
    if n == 0 {
        return Err(Error::InvalidParameter("graph is empty".into()));
    }
    if hotspots.iter().any(|&(v, s)| v >= n || !(s >= 0.0)) {
        return Err(Error::InvalidParameter("hotspots need in-range vertices and non-negative shares".into()));
    }
    let total: f64 = hotspots.iter().map(|h| h.1).sum();
    if total > 1.0 + 1e-12 {
        return Err(Error::InvalidDistribution(format!("hotspot shares sum to {total} > 1")));
    }
    let rest = (1.0 - total).max(0.0) / n as f64;
    let mut probs = vec![rest; n];
    for &(v, s) in hotspots {
        probs[v] += s;
    }
    Prior::from_weights(probs)
}

/// PLMG with the standard padding for `eps`.
fn plmg(g: &RoadGraph, eps: f64, step: f64) -> Result<crate::mechanism::MechanismMatrix> {
    plmg_matrix(g, eps, step, PLMG_PADDING_SCALE / eps)
}

/// Grid step used for PLMG in the line sweep.
pub const LINE_SWEEP_GRID_STEP: f64 = 12.5;

/// GEM and PLMG quality loss on evenly spaced lines of fixed length,
/// uniform prior, shortest-path metric.
pub fn run_line_sweep(node_counts: &[usize], total_length: f64, eps: f64) -> Result<Table> {
    check_eps(eps)?;
    if node_counts.iter().any(|&n| n < 2) {
        return Err(Error::InvalidParameter("node counts must be at least 2".into()));
    }
    let rows = node_counts
        .par_iter()
        .map(|&n| -> Result<Vec<f64>> {
            let g = make_line(n, total_length)?;
            let d = all_pairs(&g);
            let prior = Prior::uniform(n);
            let gem = gem_matrix(&d, &OutputRange::full(n), eps)?;
            let plmg = plmg(&g, eps, LINE_SWEEP_GRID_STEP)?;
            Ok(vec![
                n as f64,
                q_loss(&prior, &gem, &d, Metric::Shortest)?,
                q_loss(&prior, &plmg, &d, Metric::Shortest)?,
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    let mut t = Table::new(&["nodes", "gem_q_loss", "plmg_q_loss"])
        .param("scenario", "line-sweep")
        .param("node_counts", join(node_counts))
        .param("total_length", total_length)
        .param("eps", eps)
        .param("grid_step", LINE_SWEEP_GRID_STEP)
        .param("padding", PLMG_PADDING_SCALE / eps);
    t.rows = rows;
    Ok(t)
}

/// TP of GEM and PLMG on two-vertex graphs under the MAP attack, uniform
/// prior. The closed form `1/(1+e^{−ε d/2})` is reported alongside.
pub fn run_tp_sweep(euclid: f64, shortest: &[f64], eps: f64) -> Result<Table> {
    check_eps(eps)?;
    if let Some(&s) = shortest.iter().find(|&&s| s < euclid) {
        return Err(Error::InvalidParameter(format!("shortest distance {s} is below the euclidean {euclid}")));
    }
    let step = euclid / 20.0;
    let rows = shortest
        .par_iter()
        .map(|&s| -> Result<Vec<f64>> {
            let g = make_two_vertex(euclid, s)?;
            let d = all_pairs(&g);
            let prior = Prior::uniform(2);
            let gem = gem_matrix(&d, &OutputRange::full(2), eps)?;
            let plmg = plmg(&g, eps, step)?;
            let tp = |m| -> Result<f64> { true_probability(&prior, m, &map_attack(&prior, m)?) };
            Ok(vec![s, tp(&gem)?, 1.0 / (1.0 + (-eps * s / 2.0).exp()), tp(&plmg)?])
        })
        .collect::<Result<Vec<_>>>()?;
    let mut t = Table::new(&["shortest", "gem_tp", "gem_tp_closed_form", "plmg_tp"])
        .param("scenario", "tp-sweep")
        .param("euclid", euclid)
        .param("shortest", join(shortest))
        .param("eps", eps)
        .param("grid_step", step)
        .param("padding", PLMG_PADDING_SCALE / eps);
    t.rows = rows;
    Ok(t)
}

/// Geometry of the cross-shaped map study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossMapConfig {
    pub arm_length: f64,
    pub spacing: f64,
    pub grid_step: f64,
    pub padding: f64,
}

impl Default for CrossMapConfig {
    fn default() -> Self {
        CrossMapConfig { arm_length: 2000.0, spacing: 100.0, grid_step: 100.0, padding: 0.0 }
    }
}

/// Euclidean quality loss and adversarial error of PLM and PLMG on a cross
/// of two roads, uniform prior over road vertices.
///
/// PLM reports grid cells. The road-aware adversary knows the roads and the
/// prior and picks a road vertex. The road-unaware adversary believes the
/// user is uniform over all grid cells and picks a cell. Both minimize
/// expected Euclidean error under their own beliefs; both are scored
/// against the true road prior.
pub fn run_cross_map_study(eps_list: &[f64], cfg: CrossMapConfig) -> Result<Table> {
    eps_list.iter().try_for_each(|&e| check_eps(e))?;
    let g = make_cross_map(cfg.arm_length, cfg.spacing)?;
    let d = all_pairs(&g);
    let n = g.len();
    let prior = Prior::uniform(n);
    let grid = PlanarGrid::covering(g.bounding_box(), cfg.padding, cfg.grid_step)?;
    let cells = grid.points();
    let nc = cells.len();
    let cell_to_vertex: Vec<usize> = cells.iter().map(|&c| nearest_vertex(&g, c)).collect();
    // distances from each vertex to each cell, and between cells
    let (pts, cells) = (g.points(), &cells);
    let vc: Vec<f64> = pts.iter().flat_map(|p| cells.iter().map(move |c| p.distance(c))).collect();
    let cc: Vec<f64> = cells.par_iter().flat_map_iter(|a| cells.iter().map(move |b| a.distance(b))).collect();

    let mut rows = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let road = GridMechanism::new(g.points().to_vec(), grid.clone(), eps)?;
        let everywhere = GridMechanism::new(cells.to_vec(), grid.clone(), eps)?;

        let plm_q: f64 = (0..n).map(|v| prior.get(v) * road.row(v).iter().zip(&vc[v * nc..(v + 1) * nc]).map(|(p, x)| p * x).sum::<f64>()).sum();

        // road-aware: candidates are road vertices, cost d_e(candidate, v)
        let aware: Vec<usize> = (0..nc)
            .into_par_iter()
            .map(|o| {
                let joint: Vec<f64> = (0..n).map(|v| prior.get(v) * road.row(v)[o]).collect();
                bayes_choice(&joint, n, |c| d.row(Metric::Euclidean, c))
            })
            .collect();
        // road-unaware: uniform belief over cells, candidates are cells
        let unaware: Vec<usize> = (0..nc)
            .into_par_iter()
            .map(|o| {
                let joint: Vec<f64> = (0..nc).map(|u| everywhere.row(u)[o]).collect();
                bayes_choice(&joint, nc, |c| &cc[c * nc..(c + 1) * nc])
            })
            .collect();
        let score = |dist: &dyn Fn(usize, usize) -> f64| -> f64 {
            (0..n).map(|v| prior.get(v) * road.row(v).iter().enumerate().map(|(o, p)| p * dist(v, o)).sum::<f64>()).sum()
        };
        let ae_aware = score(&|v, o| d.euclidean(v, aware[o]));
        let ae_unaware = score(&|v, o| vc[v * nc + unaware[o]]);

        let plmg = road.snap(&cell_to_vertex, n)?;
        let plmg_q = q_loss(&prior, &plmg, &d, Metric::Euclidean)?;
        let h = optimal_attack(&prior, &plmg, &d, Metric::Euclidean)?;
        let plmg_ae = adversarial_error(&prior, &plmg, &h, &d, Metric::Euclidean)?;
        rows.push(vec![eps, plm_q, ae_aware, ae_unaware, plmg_q, plmg_ae]);
    }
    let mut t = Table::new(&["eps", "plm_q_loss", "plm_ae_road_aware", "plm_ae_road_unaware", "plmg_q_loss", "plmg_ae_road_aware"])
        .param("scenario", "cross-map")
        .param("eps", join(eps_list))
        .param("arm_length", cfg.arm_length)
        .param("spacing", cfg.spacing)
        .param("grid_step", cfg.grid_step)
        .param("padding", cfg.padding)
        .param("metric", Metric::Euclidean);
    t.rows = rows;
    Ok(t)
}

/// Quality loss, AE and PC under both attacks for `GEM_range`.
fn range_columns(prior: &Prior, d: &DistanceMatrix, range: &OutputRange, eps: f64) -> Result<Vec<f64>> {
    let m = gem_matrix(d, range, eps)?;
    let q = q_loss(prior, &m, d, Metric::Shortest)?;
    let ae_opt = adversarial_error(prior, &m, &optimal_attack(prior, &m, d, Metric::Shortest)?, d, Metric::Shortest)?;
    let ae_post = adversarial_error(prior, &m, &posterior_strategy(prior, &m)?, d, Metric::Shortest)?;
    let pc = |ae: f64| if q > 0.0 { ae / q } else { f64::NAN };
    Ok(vec![q, ae_opt, pc(ae_opt), ae_post, pc(ae_post), range.len() as f64])
}

const RANGE_COLUMNS: [&str; 6] = ["q_loss", "ae_optimal", "pc_optimal", "ae_posterior", "pc_posterior", "range_size"];

/// PC over ε with the full range and, if `optimize`, with the range found by
/// Q^loss initialization followed by the PC search (posterior attack, θ = Q^loss(W₀)).
pub fn run_epsilon_sweep(d: &DistanceMatrix, prior: &Prior, eps_list: &[f64], optimize: bool) -> Result<Table> {
    eps_list.iter().try_for_each(|&e| check_eps(e))?;
    let mut eps_sorted = eps_list.to_vec();
    eps_sorted.sort_by(f64::total_cmp);
    eps_sorted.dedup();
    let rows = eps_sorted
        .par_iter()
        .map(|&eps| -> Result<Vec<f64>> {
            let mut row = vec![eps];
            row.extend(range_columns(prior, d, &OutputRange::full(d.len()), eps)?);
            if optimize {
                let r = optimize_pc(d, prior, eps)?;
                row.extend(range_columns(prior, d, &r.final_range, eps)?);
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut columns = vec!["eps".to_string()];
    columns.extend(RANGE_COLUMNS.iter().map(|c| format!("full_{c}")));
    if optimize {
        columns.extend(RANGE_COLUMNS.iter().map(|c| format!("opt_{c}")));
    }
    Ok(Table { columns, rows, params: Vec::new() }
        .param("scenario", "epsilon-sweep")
        .param("eps", join(&eps_sorted))
        .param("optimize", optimize)
        .param("vertices", d.len()))
}

/// Q^loss initialization followed by the exact PC search under the posterior attack.
pub fn optimize_pc(d: &DistanceMatrix, prior: &Prior, eps: f64) -> Result<OptimizationResult> {
    let w0 = init_range_by_qloss(d, prior, eps)?;
    let mut cfg = OptimizationConfig::new(eps, Objective::MaximizePc);
    cfg.attack = Attack::Posterior;
    cfg.reports = false;
    greedy_optimize(d, prior, &cfg, &w0)
}

/// Four-hotspot lattice: side vertices, spacing, ε, and the share of each hotspot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HotspotConfig {
    pub side: usize,
    pub spacing: f64,
    pub eps: f64,
    pub share: f64,
}

impl Default for HotspotConfig {
    fn default() -> Self {
        HotspotConfig { side: 16, spacing: 100.0, eps: 0.01, share: 0.2 }
    }
}

impl HotspotConfig {
    /// Hotspots sit three vertices in from each corner.
    pub fn hotspots(&self) -> Vec<(usize, f64)> {
        let (a, b) = (3.min(self.side - 1), self.side.saturating_sub(4));
        let mut ids = vec![a * self.side + a, a * self.side + b, b * self.side + a, b * self.side + b];
        ids.sort_unstable();
        ids.dedup();
        ids.into_iter().map(|v| (v, self.share)).collect()
    }

    pub fn build(&self) -> Result<(RoadGraph, DistanceMatrix, Prior)> {
        let g = make_lattice(self.side, self.side, self.spacing)?;
        let d = all_pairs(&g);
        let prior = hotspot_prior(g.len(), &self.hotspots())?;
        Ok((g, d, prior))
    }
}

/// Result of the hotspot optimization: the table has one row each for the
/// full range, the initial range `W₀` and the optimized range.
#[derive(Debug, Clone)]
pub struct HotspotOutcome {
    pub table: Table,
    pub result: OptimizationResult,
    pub full: EvaluationReport,
    pub optimized: EvaluationReport,
}

pub fn run_hotspot_optimization(cfg: HotspotConfig) -> Result<HotspotOutcome> {
    check_eps(cfg.eps)?;
    if cfg.side < 2 {
        return Err(Error::InvalidParameter("lattice side must be at least 2".into()));
    }
    let (_, d, prior) = cfg.build()?;
    let result = optimize_pc(&d, &prior, cfg.eps)?;
    let mut t = Table::new(&["stage", "q_loss", "ae_optimal", "pc_optimal", "ae_posterior", "pc_posterior", "range_size"])
        .param("scenario", "hotspot-opt")
        .param("side", cfg.side)
        .param("spacing", cfg.spacing)
        .param("eps", cfg.eps)
        .param("share", cfg.share)
        .param("hotspots", join(&cfg.hotspots().iter().map(|h| h.0).collect::<Vec<_>>()))
        .param("stages", "0=full;1=initial;2=optimized");
    let full_range = OutputRange::full(d.len());
    for (stage, range) in [&full_range, &result.initial_range, &result.final_range].into_iter().enumerate() {
        let mut row = vec![stage as f64];
        row.extend(&range_columns(&prior, &d, range, cfg.eps)?[..]);
        t.rows.push(row);
    }
    let report = |r: &OutputRange| EvaluationReport::evaluate(&prior, &gem_matrix(&d, r, cfg.eps)?, &d, Metric::Shortest, Attack::Posterior);
    Ok(HotspotOutcome { full: report(&full_range)?, optimized: report(&result.final_range)?, table: t, result })
}
