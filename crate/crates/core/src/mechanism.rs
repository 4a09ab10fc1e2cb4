//! Perturbation mechanisms as explicit finite distributions.
//!
//! The graph-exponential mechanism (GEM) reports `o ∈ W` with probability
//! proportional to `exp(-ε/2 · d_s(v, o))`. The planar Laplace mechanism (PLM)
//! is available both as a continuous sampler and as a deterministic grid
//! discretization; snapping the grid cells to their nearest vertex gives PLMG.

use std::f64::consts::{E, PI};
use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{nearest_vertex, DistanceMatrix, Metric, PlanarPoint, RoadGraph};
use crate::lambert::lambert_w_m1;

/// Row sums must match 1 within this tolerance.
pub const ROW_TOLERANCE: f64 = 1e-9;

/// A non-empty, strictly ascending set of vertex ids `W ⊆ V`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OutputRange(Vec<usize>);

impl OutputRange {
    /// Sorts and deduplicates `ids`; rejects empty sets and ids `>= n`.
    pub fn new(mut ids: Vec<usize>, n: usize) -> Result<Self> {
        ids.sort_unstable();
        ids.dedup();
        if ids.is_empty() {
            return Err(Error::InvalidRange("output range is empty".into()));
        }
        if let Some(&bad) = ids.iter().find(|&&v| v >= n) {
            return Err(Error::InvalidRange(format!("vertex {bad} is outside 0..{n}")));
        }
        Ok(OutputRange(ids))
    }

    /// All of `V`.
    pub fn full(n: usize) -> Self {
        assert!(n > 0);
        OutputRange((0..n).collect())
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.0.binary_search(&v).is_ok()
    }

    pub fn index_of(&self, v: usize) -> Option<usize> {
        self.0.binary_search(&v).ok()
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.0
    }

    /// `ggrange v1` text: header then one vertex id per line.
    pub fn to_text(&self) -> String {
        let mut out = String::from("ggrange v1\n");
        for v in &self.0 {
            let _ = writeln!(out, "{v}");
        }
        out
    }

    pub fn from_text(text: &str, n: usize) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        match lines.next() {
            Some((_, "ggrange v1")) => {}
            Some((line, other)) => {
                return Err(Error::Parse { line, message: format!("expected header 'ggrange v1', found '{other}'") })
            }
            None => return Err(Error::Parse { line: 1, message: "empty range file".into() }),
        }
        let mut ids = Vec::new();
        for (line, l) in lines {
            let v: usize = l.parse().map_err(|_| Error::Parse { line, message: format!("bad vertex id '{l}'") })?;
            ids.push(v);
        }
        OutputRange::new(ids, n)
    }
}

/// Row-stochastic `|V| × |W|` matrix: `prob(v, j) = Pr(M(v) = W[j])`.
#[derive(Debug, Clone, PartialEq)]
pub struct MechanismMatrix {
    n_inputs: usize,
    range: OutputRange,
    probs: Vec<f64>,
    epsilon: f64,
}

impl MechanismMatrix {
    /// Validates row stochasticity and builds the matrix. `probs` is row-major.
    pub fn new(n_inputs: usize, range: OutputRange, probs: Vec<f64>, epsilon: f64) -> Result<Self> {
        let k = range.len();
        if n_inputs == 0 {
            return Err(Error::InvalidDistribution("mechanism has no inputs".into()));
        }
        if probs.len() != n_inputs * k {
            return Err(Error::InvalidDistribution(format!(
                "expected {} probabilities, got {}",
                n_inputs * k,
                probs.len()
            )));
        }
        if let Some(&bad) = range.as_slice().last().filter(|&&v| v >= n_inputs) {
            return Err(Error::InvalidRange(format!("vertex {bad} is outside 0..{n_inputs}")));
        }
        for (v, row) in probs.chunks(k).enumerate() {
            if row.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
                return Err(Error::InvalidDistribution(format!("row {v} has a negative or non-finite entry")));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > ROW_TOLERANCE {
                return Err(Error::InvalidDistribution(format!("row {v} sums to {s}")));
            }
        }
        Ok(MechanismMatrix { n_inputs, range, probs, epsilon })
    }

    /// Reports the true vertex. Outputs every vertex.
    pub fn identity(n: usize) -> Self {
        let mut probs = vec![0.0; n * n];
        for v in 0..n {
            probs[v * n + v] = 1.0;
        }
        MechanismMatrix { n_inputs: n, range: OutputRange::full(n), probs, epsilon: f64::INFINITY }
    }

    /// Always reports `w`.
    pub fn constant(n: usize, w: usize) -> Self {
        assert!(w < n);
        MechanismMatrix { n_inputs: n, range: OutputRange(vec![w]), probs: vec![1.0; n], epsilon: 0.0 }
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn n_outputs(&self) -> usize {
        self.range.len()
    }

    pub fn output_range(&self) -> &OutputRange {
        &self.range
    }

    /// Vertex id of output column `j`.
    pub fn output(&self, j: usize) -> usize {
        self.range.0[j]
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    #[inline]
    pub fn prob(&self, v: usize, j: usize) -> f64 {
        self.probs[v * self.range.len() + j]
    }

    #[inline]
    pub fn row(&self, v: usize) -> &[f64] {
        let k = self.range.len();
        &self.probs[v * k..(v + 1) * k]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// CSV export:
    ///
    /// ```text
    /// mechmatrix v1,<|V|>,<|W|>,<eps>
    /// outputs,<W[0]>,...,<W[|W|-1]>
    /// <v>,<prob(v,0)>,...,<prob(v,|W|-1)>
    /// ```
    pub fn to_csv(&self) -> String {
        let mut out = format!("mechmatrix v1,{},{},{}\noutputs", self.n_inputs, self.n_outputs(), self.epsilon);
        for w in self.range.as_slice() {
            let _ = write!(out, ",{w}");
        }
        out.push('\n');
        for v in 0..self.n_inputs {
            let _ = write!(out, "{v}");
            for p in self.row(v) {
                let _ = write!(out, ",{p}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let perr = |line: usize, message: String| Error::Parse { line: line + 1, message };
        let (hl, header) = lines.next().ok_or_else(|| perr(0, "empty mechanism file".into()))?;
        let fields: Vec<&str> = header.trim().split(',').collect();
        if fields.len() != 4 || fields[0] != "mechmatrix v1" {
            return Err(perr(hl, format!("expected 'mechmatrix v1,<|V|>,<|W|>,<eps>', found '{header}'")));
        }
        let n: usize = fields[1].parse().map_err(|_| perr(hl, "bad |V|".into()))?;
        let k: usize = fields[2].parse().map_err(|_| perr(hl, "bad |W|".into()))?;
        let eps: f64 = fields[3].parse().map_err(|_| perr(hl, "bad epsilon".into()))?;

        let (ol, outputs) = lines.next().ok_or_else(|| perr(hl + 1, "missing outputs line".into()))?;
        let mut of = outputs.trim().split(',');
        if of.next() != Some("outputs") {
            return Err(perr(ol, "expected 'outputs,...' line".into()));
        }
        let ids = of
            .map(|s| s.parse::<usize>().map_err(|_| perr(ol, format!("bad output id '{s}'"))))
            .collect::<Result<Vec<_>>>()?;
        if ids.len() != k || ids.windows(2).any(|p| p[0] >= p[1]) {
            return Err(perr(ol, format!("expected {k} strictly ascending output ids")));
        }
        let range = OutputRange::new(ids, n)?;

        let mut probs = Vec::with_capacity(n * k);
        let mut rows = 0;
        for (li, line) in lines {
            let mut f = line.trim().split(',');
            let v: usize = f
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| perr(li, "bad row id".into()))?;
            if v != rows {
                return Err(perr(li, format!("expected row {rows}, found {v}")));
            }
            let before = probs.len();
            for s in f {
                probs.push(s.parse::<f64>().map_err(|_| perr(li, format!("bad probability '{s}'")))?);
            }
            if probs.len() - before != k {
                return Err(perr(li, format!("expected {k} probabilities")));
            }
            rows += 1;
        }
        if rows != n {
            return Err(Error::Parse { line: text.lines().count(), message: format!("expected {n} rows, found {rows}") });
        }
        MechanismMatrix::new(n, range, probs, eps)
    }
}

/// Writes a normalized exponential-weight row: `out[j] ∝ exp(-scale · dist[j])`,
/// shifted by the minimum distance so the largest weight is exactly 1.
fn exp_row(dists: impl Iterator<Item = f64> + Clone, scale: f64, out: &mut [f64]) {
    let min = dists.clone().fold(f64::INFINITY, f64::min);
    let mut total = 0.0;
    for (slot, d) in out.iter_mut().zip(dists) {
        *slot = (-scale * (d - min)).exp();
        total += *slot;
    }
    for slot in out.iter_mut() {
        *slot /= total;
    }
}

/// Graph-exponential mechanism restricted to output range `range`.
pub fn gem_matrix(d: &DistanceMatrix, range: &OutputRange, eps: f64) -> Result<MechanismMatrix> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidParameter(format!("epsilon must be positive, got {eps}")));
    }
    let n = d.len();
    if let Some(&bad) = range.as_slice().last().filter(|&&v| v >= n) {
        return Err(Error::InvalidRange(format!("vertex {bad} is outside 0..{n}")));
    }
    let k = range.len();
    let mut probs = vec![0.0; n * k];
    probs.par_chunks_mut(k).enumerate().for_each(|(v, row)| {
        let dist = d.row(Metric::Shortest, v);
        exp_row(range.as_slice().iter().map(|&o| dist[o]), eps / 2.0, row);
    });
    Ok(MechanismMatrix { n_inputs: n, range: range.clone(), probs, epsilon: eps })
}

/// GEM row for a single input given its shortest-path distances to every vertex.
pub fn gem_row(dist_from_v: &[f64], range: &OutputRange, eps: f64) -> Vec<f64> {
    let mut row = vec![0.0; range.len()];
    exp_row(range.as_slice().iter().map(|&o| dist_from_v[o]), eps / 2.0, &mut row);
    row
}

/// Inverse-CDF draw from a probability row; returns the column index.
pub fn sample_index<R: Rng + ?Sized>(row: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (j, &p) in row.iter().enumerate() {
        if p > 0.0 {
            last_positive = j;
        }
        acc += p;
        if u < acc && p > 0.0 {
            return j;
        }
    }
    last_positive
}

/// Draws a pseudolocation (vertex id) for true vertex `v`.
pub fn gem_sample<R: Rng + ?Sized>(m: &MechanismMatrix, v: usize, rng: &mut R) -> usize {
    m.output(sample_index(m.row(v), rng))
}

/// Radius with density `ε² r e^{-εr}` at CDF level `p ∈ [0, 1)`.
pub fn plm_radius(p: f64, eps: f64) -> f64 {
    -(lambert_w_m1((p - 1.0) / E) + 1.0) / eps
}

/// Continuous planar Laplace draw centered at `x`.
pub fn plm_sample<R: Rng + ?Sized>(x: PlanarPoint, eps: f64, rng: &mut R) -> PlanarPoint {
    let theta = rng.random::<f64>() * 2.0 * PI;
    let r = plm_radius(rng.random::<f64>(), eps);
    PlanarPoint::new(x.x + r * theta.cos(), x.y + r * theta.sin())
}

/// Square lattice of cell centers used to discretize the plane.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarGrid {
    origin: PlanarPoint,
    step: f64,
    nx: usize,
    ny: usize,
}

impl PlanarGrid {
    /// Smallest lattice with spacing `step`, centered on the box
    /// `(min_x, min_y, max_x, max_y)` grown by `padding`, whose points reach
    /// every edge of the grown box.
    pub fn covering(bbox: (f64, f64, f64, f64), padding: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::InvalidParameter(format!("grid step must be positive, got {step}")));
        }
        if !(padding >= 0.0) || !padding.is_finite() {
            return Err(Error::InvalidParameter(format!("padding must be non-negative, got {padding}")));
        }
        let (x0, y0, x1, y1) = (bbox.0 - padding, bbox.1 - padding, bbox.2 + padding, bbox.3 + padding);
        let count = |width: f64| (width / step - 1e-9).ceil().max(0.0) as usize + 1;
        let (nx, ny) = (count(x1 - x0), count(y1 - y0));
        if nx * ny < 4 {
            return Err(Error::InvalidParameter(format!("grid has only {} cells; refine the step", nx * ny)));
        }
        let cx = 0.5 * (x0 + x1) - 0.5 * (nx - 1) as f64 * step;
        let cy = 0.5 * (y0 + y1) - 0.5 * (ny - 1) as f64 * step;
        Ok(PlanarGrid { origin: PlanarPoint::new(cx, cy), step, nx, ny })
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    /// Center of cell `i` (row-major, x fastest).
    pub fn point(&self, i: usize) -> PlanarPoint {
        let (c, r) = (i % self.nx, i / self.nx);
        PlanarPoint::new(self.origin.x + c as f64 * self.step, self.origin.y + r as f64 * self.step)
    }

    pub fn points(&self) -> Vec<PlanarPoint> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }
}

/// Discretized PLM: `prob(i, c)` is the planar Laplace mass of cell `c` for
/// input location `inputs[i]`, renormalized over the grid.
#[derive(Debug, Clone)]
pub struct GridMechanism {
    inputs: Vec<PlanarPoint>,
    grid: PlanarGrid,
    probs: Vec<f64>,
    epsilon: f64,
}

impl GridMechanism {
    pub fn new(inputs: Vec<PlanarPoint>, grid: PlanarGrid, eps: f64) -> Result<Self> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::InvalidParameter(format!("epsilon must be positive, got {eps}")));
        }
        let cells = grid.points();
        let k = cells.len();
        let mut probs = vec![0.0; inputs.len() * k];
        probs.par_chunks_mut(k).zip(inputs.par_iter()).for_each(|(row, x)| {
            exp_row(cells.iter().map(|c| x.distance(c)), eps, row);
        });
        Ok(GridMechanism { inputs, grid, probs, epsilon: eps })
    }

    pub fn inputs(&self) -> &[PlanarPoint] {
        &self.inputs
    }

    pub fn grid(&self) -> &PlanarGrid {
        &self.grid
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn n_cells(&self) -> usize {
        self.grid.len()
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        let k = self.grid.len();
        &self.probs[i * k..(i + 1) * k]
    }

    /// Collapses cells onto vertices: column `cell_to_vertex[c]` receives the mass of cell `c`.
    pub fn snap(&self, cell_to_vertex: &[usize], n_vertices: usize) -> Result<MechanismMatrix> {
        if cell_to_vertex.len() != self.n_cells() {
            return Err(Error::InvalidParameter("cell map has the wrong length".into()));
        }
        let range = OutputRange::new(cell_to_vertex.to_vec(), n_vertices)?;
        let k = range.len();
        let cols: Vec<usize> = cell_to_vertex.iter().map(|&v| range.index_of(v).unwrap()).collect();
        let mut probs = vec![0.0; self.inputs.len() * k];
        for (i, out) in probs.chunks_mut(k).enumerate() {
            for (c, p) in self.row(i).iter().enumerate() {
                out[cols[c]] += p;
            }
        }
        MechanismMatrix::new(self.inputs.len(), range, probs, self.epsilon)
    }
}

/// PLM on a graph: discretized planar Laplace from every vertex, each cell
/// snapped to its nearest vertex. The grid covers the bounding box grown by
/// `padding` (at least `3/ε` keeps truncation small).
pub fn plmg_matrix(g: &RoadGraph, eps: f64, grid_step: f64, padding: f64) -> Result<MechanismMatrix> {
    let grid = PlanarGrid::covering(g.bounding_box(), padding, grid_step)?;
    let cell_to_vertex: Vec<usize> = grid.points().par_iter().map(|&c| nearest_vertex(g, c)).collect();
    let plm = GridMechanism::new(g.points().to_vec(), grid, eps)?;
    plm.snap(&cell_to_vertex, g.len())
}

/// Post-processes every output through `f`, summing mass over preimages.
pub fn postprocess(m: &MechanismMatrix, f: impl Fn(usize) -> usize) -> Result<MechanismMatrix> {
    let n = m.n_inputs();
    let images: Vec<usize> = m.output_range().as_slice().iter().map(|&w| f(w)).collect();
    if let Some((j, &bad)) = images.iter().enumerate().find(|(_, &v)| v >= n) {
        return Err(Error::InvalidRange(format!("f maps output {} to {bad}, outside 0..{n}", m.output(j))));
    }
    let range = OutputRange::new(images.clone(), n)?;
    let k = range.len();
    let cols: Vec<usize> = images.iter().map(|&v| range.index_of(v).unwrap()).collect();
    let mut probs = vec![0.0; n * k];
    for v in 0..n {
        for (j, p) in m.row(v).iter().enumerate() {
            probs[v * k + cols[j]] += p;
        }
    }
    Ok(MechanismMatrix { n_inputs: n, range, probs, epsilon: m.epsilon })
}

/// Tightest ε for which `m` satisfies ε-GG-I: the largest
/// `|ln(prob(v,j) / prob(v',j))| / d_s(v,v')` over distinct inputs and single
/// outputs. Any output event's ratio is a mediant of singleton ratios, so
/// singletons attain the supremum. Returns `∞` when some output is possible
/// from one input and impossible from another.
pub fn privacy_loss(m: &MechanismMatrix, d: &DistanceMatrix) -> f64 {
    let n = m.n_inputs();
    let k = m.n_outputs();
    let logs: Vec<f64> = m.probs.iter().map(|p| p.ln()).collect();
    (0..n)
        .into_par_iter()
        .map(|v| {
            let lv = &logs[v * k..(v + 1) * k];
            let mut worst: f64 = 0.0;
            for u in (v + 1)..n {
                let lu = &logs[u * k..(u + 1) * k];
                let dist = d.shortest(v, u);
                for j in 0..k {
                    let (a, b) = (lv[j], lu[j]);
                    if a == f64::NEG_INFINITY && b == f64::NEG_INFINITY {
                        continue;
                    }
                    if a == f64::NEG_INFINITY || b == f64::NEG_INFINITY {
                        return f64::INFINITY;
                    }
                    worst = worst.max((a - b).abs() / dist);
                }
            }
            worst
        })
        .reduce(|| 0.0, f64::max)
}
