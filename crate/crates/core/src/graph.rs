//! Road networks as undirected weighted graphs embedded in the plane.
//!
//! A [`RoadGraph`] carries a planar coordinate for every vertex and enforces
//! that no edge is shorter than the straight line between its endpoints, so
//! shortest-path distances always dominate Euclidean ones. [`all_pairs`]
//! computes both distance matrices.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Slack allowed when comparing an edge weight to its endpoints' Euclidean distance.
pub const EUCLIDEAN_TOLERANCE: f64 = 1e-6;

/// Resolution to which generator spacings are snapped (2^-20 m), so that sums
/// of edge weights along straight runs are exact in floating point.
const SPACING_QUANTUM: f64 = 1.0 / (1u64 << 20) as f64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarPoint {
    pub x: f64,
    pub y: f64,
}

impl PlanarPoint {
    pub fn new(x: f64, y: f64) -> Self {
        PlanarPoint { x, y }
    }

    pub fn distance(&self, other: &PlanarPoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub weight: f64,
}

/// Which distance a functional is measured in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    Shortest,
    Euclidean,
}

impl Metric {
    pub fn as_str(&self) -> &'static str {
        match self {
            Metric::Shortest => "shortest",
            Metric::Euclidean => "euclidean",
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "shortest" => Ok(Metric::Shortest),
            "euclidean" => Ok(Metric::Euclidean),
            other => Err(Error::InvalidParameter(format!("unknown metric '{other}'"))),
        }
    }
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Undirected, connected, positively weighted graph with planar vertex coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct RoadGraph {
    points: Vec<PlanarPoint>,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl RoadGraph {
    /// Validates and builds a graph. Vertex `i` sits at `points[i]`.
    pub fn new(points: Vec<PlanarPoint>, edges: Vec<Edge>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidGraph("graph has no vertices".into()));
        }
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidGraph(format!("vertex {i} has non-finite coordinates")));
        }
        let n = points.len();
        let mut adjacency = vec![Vec::new(); n];
        let mut seen = HashSet::new();
        for e in &edges {
            if e.u >= n || e.v >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({}, {}) references a vertex outside 0..{n}",
                    e.u, e.v
                )));
            }
            if e.u == e.v {
                return Err(Error::InvalidGraph(format!("self-loop at vertex {}", e.u)));
            }
            if !(e.weight > 0.0) || !e.weight.is_finite() {
                return Err(Error::NonPositiveWeight { u: e.u, v: e.v, weight: e.weight });
            }
            let euclidean = points[e.u].distance(&points[e.v]);
            if e.weight < euclidean - EUCLIDEAN_TOLERANCE {
                return Err(Error::EdgeShorterThanEuclidean {
                    u: e.u,
                    v: e.v,
                    weight: e.weight,
                    euclidean,
                });
            }
            if !seen.insert((e.u.min(e.v), e.u.max(e.v))) {
                return Err(Error::InvalidGraph(format!("duplicate edge ({}, {})", e.u, e.v)));
            }
            adjacency[e.u].push((e.v, e.weight));
            adjacency[e.v].push((e.u, e.weight));
        }
        let graph = RoadGraph { points, edges, adjacency };
        if let Some(unreached) = graph.shortest_from(0).iter().position(|d| d.is_infinite()) {
            return Err(Error::Disconnected(unreached));
        }
        Ok(graph)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn points(&self) -> &[PlanarPoint] {
        &self.points
    }

    pub fn point(&self, v: usize) -> PlanarPoint {
        self.points[v]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[(usize, f64)] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    /// `(min_x, min_y, max_x, max_y)` over all vertices.
    pub fn bounding_box(&self) -> (f64, f64, f64, f64) {
        self.points.iter().fold(
            (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
            |(a, b, c, d), p| (a.min(p.x), b.min(p.y), c.max(p.x), d.max(p.y)),
        )
    }

    /// Single-source Dijkstra. Unreachable vertices get `f64::INFINITY`.
    pub fn shortest_from(&self, source: usize) -> Vec<f64> {
        let mut dist = vec![f64::INFINITY; self.len()];
        let mut heap = BinaryHeap::new();
        dist[source] = 0.0;
        heap.push(HeapEntry { dist: 0.0, vertex: source });
        while let Some(HeapEntry { dist: d, vertex: u }) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            for &(v, w) in &self.adjacency[u] {
                let candidate = d + w;
                if candidate < dist[v] {
                    dist[v] = candidate;
                    heap.push(HeapEntry { dist: candidate, vertex: v });
                }
            }
        }
        dist
    }

    /// Serializes to the `ggraph v1` text format.
    pub fn to_text(&self) -> String {
        let mut out = String::from("ggraph v1\n");
        for (i, p) in self.points.iter().enumerate() {
            let _ = writeln!(out, "v {i} {} {}", p.x, p.y);
        }
        for e in &self.edges {
            let _ = writeln!(out, "e {} {} {}", e.u, e.v, e.weight);
        }
        out
    }
}

#[derive(Debug, Clone, Copy)]
struct HeapEntry {
    dist: f64,
    vertex: usize,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for HeapEntry {}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapEntry {
    // min-heap on distance, then on vertex id
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

/// Parses the `ggraph v1` edge-list format.
///
/// ```text
/// ggraph v1
/// # comment
/// v <id> <x> <y>
/// e <u> <v> <weight>
/// ```
///
/// Vertex ids may be any integers; they are remapped to `0..|V|` in the order
/// the `v` lines appear.
pub fn load_graph(text: &str) -> Result<RoadGraph> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, strip_comment(l).trim()))
        .filter(|(_, l)| !l.is_empty());

    match lines.next() {
        Some((_, "ggraph v1")) => {}
        Some((line, other)) => {
            return Err(Error::Parse { line, message: format!("expected header 'ggraph v1', found '{other}'") })
        }
        None => return Err(Error::Parse { line: 1, message: "empty input".into() }),
    }

    let mut ids: HashMap<i64, usize> = HashMap::new();
    let mut points = Vec::new();
    let mut raw_edges = Vec::new();
    for (line, content) in lines {
        let fields: Vec<&str> = content.split_whitespace().collect();
        let parse_err = |message: String| Error::Parse { line, message };
        match fields.as_slice() {
            ["v", id, x, y] => {
                let id: i64 = id.parse().map_err(|_| parse_err(format!("bad vertex id '{id}'")))?;
                let x = parse_finite(x).ok_or_else(|| parse_err(format!("bad coordinate '{x}'")))?;
                let y = parse_finite(y).ok_or_else(|| parse_err(format!("bad coordinate '{y}'")))?;
                if ids.insert(id, points.len()).is_some() {
                    return Err(parse_err(format!("duplicate vertex id {id}")));
                }
                points.push(PlanarPoint::new(x, y));
            }
            ["e", u, v, w] => {
                let u: i64 = u.parse().map_err(|_| parse_err(format!("bad vertex id '{u}'")))?;
                let v: i64 = v.parse().map_err(|_| parse_err(format!("bad vertex id '{v}'")))?;
                let w = parse_finite(w).ok_or_else(|| parse_err(format!("bad weight '{w}'")))?;
                raw_edges.push((line, u, v, w));
            }
            _ => return Err(parse_err(format!("unrecognized line '{content}'"))),
        }
    }

    let mut edges = Vec::with_capacity(raw_edges.len());
    for (line, u, v, weight) in raw_edges {
        let lookup = |id: i64| {
            ids.get(&id)
                .copied()
                .ok_or_else(|| Error::Parse { line, message: format!("edge references unknown vertex {id}") })
        };
        edges.push(Edge { u: lookup(u)?, v: lookup(v)?, weight });
    }
    RoadGraph::new(points, edges)
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

fn parse_finite(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn quantize(spacing: f64) -> f64 {
    let q = (spacing / SPACING_QUANTUM).round() * SPACING_QUANTUM;
    if q > 0.0 {
        q
    } else {
        spacing
    }
}

/// `n` evenly spaced vertices on the x-axis spanning `total_length`.
pub fn make_line(n: usize, total_length: f64) -> Result<RoadGraph> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("line needs at least 2 vertices, got {n}")));
    }
    if !(total_length > 0.0) || !total_length.is_finite() {
        return Err(Error::InvalidParameter(format!("line length must be positive, got {total_length}")));
    }
    let step = quantize(total_length / (n - 1) as f64);
    let points = (0..n).map(|i| PlanarPoint::new(i as f64 * step, 0.0)).collect();
    let edges = (0..n - 1).map(|i| Edge { u: i, v: i + 1, weight: step }).collect();
    RoadGraph::new(points, edges)
}

/// Two vertices `euclid` apart joined by a single road of length `shortest`.
pub fn make_two_vertex(euclid: f64, shortest: f64) -> Result<RoadGraph> {
    if !(euclid > 0.0) || !euclid.is_finite() {
        return Err(Error::InvalidParameter(format!("euclidean distance must be positive, got {euclid}")));
    }
    if !(shortest >= euclid) || !shortest.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "road length {shortest} is shorter than the euclidean distance {euclid}"
        )));
    }
    RoadGraph::new(
        vec![PlanarPoint::new(0.0, 0.0), PlanarPoint::new(euclid, 0.0)],
        vec![Edge { u: 0, v: 1, weight: shortest }],
    )
}

/// Grid graph with 4-neighbour edges. Vertex `r * cols + c` sits at `(c, r) * spacing`.
pub fn make_lattice(rows: usize, cols: usize, spacing: f64) -> Result<RoadGraph> {
    if rows == 0 || cols == 0 || rows * cols < 2 {
        return Err(Error::InvalidParameter(format!("lattice {rows}x{cols} has fewer than 2 vertices")));
    }
    if !(spacing > 0.0) || !spacing.is_finite() {
        return Err(Error::InvalidParameter(format!("spacing must be positive, got {spacing}")));
    }
    let step = quantize(spacing);
    let mut points = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            points.push(PlanarPoint::new(c as f64 * step, r as f64 * step));
        }
    }
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let id = r * cols + c;
            if c + 1 < cols {
                edges.push(Edge { u: id, v: id + 1, weight: step });
            }
            if r + 1 < rows {
                edges.push(Edge { u: id, v: id + cols, weight: step });
            }
        }
    }
    RoadGraph::new(points, edges)
}

/// Plus-shaped road: horizontal and vertical centerlines of half-length
/// `arm_length` crossing at the origin.
///
/// The horizontal axis comes first (ids `0..=2m`, left to right, center at
/// id `m`), followed by the vertical axis bottom to top, skipping the center.
pub fn make_cross_map(arm_length: f64, spacing: f64) -> Result<RoadGraph> {
    if !(spacing > 0.0) || !(arm_length > 0.0) || !spacing.is_finite() || !arm_length.is_finite() {
        return Err(Error::InvalidParameter("arm length and spacing must be positive".into()));
    }
    let ratio = arm_length / spacing;
    let m = ratio.round();
    if m < 1.0 || (ratio - m).abs() > 1e-9 * ratio.max(1.0) {
        return Err(Error::InvalidParameter(format!(
            "arm length {arm_length} is not a multiple of spacing {spacing}"
        )));
    }
    let m = m as i64;
    let mut points = Vec::new();
    for i in -m..=m {
        points.push(PlanarPoint::new(i as f64 * spacing, 0.0));
    }
    let center = m as usize;
    let mut vertical = Vec::new();
    for i in -m..=m {
        if i == 0 {
            vertical.push(center);
        } else {
            vertical.push(points.len());
            points.push(PlanarPoint::new(0.0, i as f64 * spacing));
        }
    }
    let mut edges = Vec::new();
    for i in 0..(2 * m) as usize {
        edges.push(Edge { u: i, v: i + 1, weight: spacing });
    }
    for pair in vertical.windows(2) {
        edges.push(Edge { u: pair[0], v: pair[1], weight: spacing });
    }
    RoadGraph::new(points, edges)
}

/// Closest vertex to `p` in the plane; ties go to the lowest id.
pub fn nearest_vertex(g: &RoadGraph, p: PlanarPoint) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, q) in g.points.iter().enumerate() {
        let d = p.distance(q);
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    best
}

/// Dense all-pairs shortest-path and Euclidean distances.
#[derive(Debug, Clone)]
pub struct DistanceMatrix {
    n: usize,
    shortest: Vec<f64>,
    euclidean: Vec<f64>,
}

impl DistanceMatrix {
    /// Builds from raw row-major matrices, checking the documented invariants.
    pub fn from_parts(n: usize, shortest: Vec<f64>, euclidean: Vec<f64>) -> Result<Self> {
        if shortest.len() != n * n || euclidean.len() != n * n {
            return Err(Error::InvalidParameter("distance matrix has the wrong size".into()));
        }
        for i in 0..n {
            for j in 0..n {
                let (s, e) = (shortest[i * n + j], euclidean[i * n + j]);
                if !s.is_finite() || !e.is_finite() || s < 0.0 || e < 0.0 {
                    return Err(Error::InvalidParameter(format!("bad distance at ({i}, {j})")));
                }
                if s != shortest[j * n + i] || e != euclidean[j * n + i] {
                    return Err(Error::InvalidParameter(format!("asymmetric distance at ({i}, {j})")));
                }
                if e > s + EUCLIDEAN_TOLERANCE {
                    return Err(Error::InvalidParameter(format!(
                        "euclidean exceeds shortest at ({i}, {j})"
                    )));
                }
            }
            if shortest[i * n + i] != 0.0 {
                return Err(Error::InvalidParameter(format!("non-zero diagonal at {i}")));
            }
        }
        Ok(DistanceMatrix { n, shortest, euclidean })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn shortest(&self, i: usize, j: usize) -> f64 {
        self.shortest[i * self.n + j]
    }

    #[inline]
    pub fn euclidean(&self, i: usize, j: usize) -> f64 {
        self.euclidean[i * self.n + j]
    }

    #[inline]
    pub fn get(&self, metric: Metric, i: usize, j: usize) -> f64 {
        self.row(metric, i)[j]
    }

    /// Distances from `i` to every vertex.
    #[inline]
    pub fn row(&self, metric: Metric, i: usize) -> &[f64] {
        let data = match metric {
            Metric::Shortest => &self.shortest,
            Metric::Euclidean => &self.euclidean,
        };
        &data[i * self.n..(i + 1) * self.n]
    }

    /// Largest shortest-path distance between any two vertices.
    pub fn diameter(&self) -> f64 {
        self.shortest.iter().copied().fold(0.0, f64::max)
    }

    /// Largest shortest-path distance from `v`.
    pub fn eccentricity(&self, v: usize) -> f64 {
        self.row(Metric::Shortest, v).iter().copied().fold(0.0, f64::max)
    }

    /// Vertex minimizing total shortest-path distance to all others (lowest id on ties).
    pub fn one_median(&self) -> usize {
        let mut best = 0;
        let mut best_sum = f64::INFINITY;
        for v in 0..self.n {
            let s: f64 = self.row(Metric::Shortest, v).iter().sum();
            if s < best_sum {
                best = v;
                best_sum = s;
            }
        }
        best
    }
}

/// Runs Dijkstra from every vertex. Rows are computed in parallel; the
/// lower triangle is mirrored from the upper one so the result is exactly
/// symmetric and independent of scheduling.
pub fn all_pairs(g: &RoadGraph) -> DistanceMatrix {
    let n = g.len();
    let mut shortest = vec![0.0; n * n];
    shortest
        .par_chunks_mut(n.max(1))
        .enumerate()
        .for_each(|(i, row)| row.copy_from_slice(&g.shortest_from(i)));
    let mut euclidean = vec![0.0; n * n];
    euclidean.par_chunks_mut(n.max(1)).enumerate().for_each(|(i, row)| {
        for (j, slot) in row.iter_mut().enumerate() {
            *slot = g.points[i].distance(&g.points[j]);
        }
    });
    for i in 0..n {
        for j in 0..i {
            shortest[i * n + j] = shortest[j * n + i];
            euclidean[i * n + j] = euclidean[j * n + i];
        }
    }
    DistanceMatrix { n, shortest, euclidean }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_graph_loads() {
        let g = load_graph("ggraph v1\nv 0 0 0\nv 1 100 0\ne 0 1 100\n").unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn edge_shorter_than_euclidean_is_rejected() {
        let err = load_graph("ggraph v1\nv 0 0 0\nv 1 100 0\ne 0 1 50\n").unwrap_err();
        assert!(matches!(err, Error::EdgeShorterThanEuclidean { .. }), "{err}");
    }

    #[test]
    fn duplicate_vertex_names_line() {
        let err = load_graph("ggraph v1\nv 0 0 0\nv 0 100 0\n").unwrap_err();
        assert_eq!(err, Error::Parse { line: 3, message: "duplicate vertex id 0".into() });
    }

    #[test]
    fn comments_blank_lines_and_sparse_ids() {
        let text = "# a road\nggraph v1\n\nv 10 0 0 # first\nv 7 3 4\ne 10 7 5.5\n";
        let g = load_graph(text).unwrap();
        assert_eq!(g.point(1), PlanarPoint::new(3.0, 4.0));
        assert_eq!(g.edges()[0], Edge { u: 0, v: 1, weight: 5.5 });
    }

    #[test]
    fn load_errors() {
        assert!(matches!(load_graph(""), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(load_graph("graph\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(
            load_graph("ggraph v1\nv 0 0 0\nv 1 1 0\ne 0 2 1\n"),
            Err(Error::Parse { line: 4, .. })
        ));
        assert!(matches!(load_graph("ggraph v1\nv 0 0 0\nv 1 1 0\n"), Err(Error::Disconnected(1))));
        assert!(matches!(
            load_graph("ggraph v1\nv 0 0 0\nv 1 1 0\ne 0 1 -1\n"),
            Err(Error::NonPositiveWeight { .. })
        ));
        assert!(matches!(load_graph("ggraph v1\nv 0 0 0\nv 1 1 x\n"), Err(Error::Parse { line: 3, .. })));
        assert!(matches!(load_graph("ggraph v1\nv 0 0 0\ne 0 0 1\n"), Err(Error::InvalidGraph(_))));
    }

    #[test]
    fn text_round_trip() {
        let g = make_lattice(3, 4, 70.0).unwrap();
        let h = load_graph(&g.to_text()).unwrap();
        assert_eq!(g.points(), h.points());
        assert_eq!(g.edges(), h.edges());
    }

    #[test]
    fn line_path_sum() {
        let d = all_pairs(&make_line(3, 1000.0).unwrap());
        assert_eq!(d.shortest(0, 2), 1000.0);
        for i in 0..3 {
            assert_eq!(d.shortest(i, i), 0.0);
        }
    }

    #[test]
    fn four_cycle_avoids_heavy_edge() {
        let pts = vec![
            PlanarPoint::new(0.0, 0.0),
            PlanarPoint::new(1.0, 0.0),
            PlanarPoint::new(1.0, 1.0),
            PlanarPoint::new(0.0, 1.0),
        ];
        let edges = vec![
            Edge { u: 0, v: 1, weight: 1.0 },
            Edge { u: 1, v: 2, weight: 1.0 },
            Edge { u: 2, v: 3, weight: 1.0 },
            Edge { u: 3, v: 0, weight: 10.0 },
        ];
        let d = all_pairs(&RoadGraph::new(pts, edges).unwrap());
        assert_eq!(d.shortest(0, 3), 3.0);
    }

    #[test]
    fn line_generator() {
        let g = make_line(11, 1000.0).unwrap();
        assert_eq!(g.len(), 11);
        assert_eq!(g.edges()[0].weight, 100.0);
        let g = make_line(2, 100.0).unwrap();
        assert_eq!(g.point(1), PlanarPoint::new(100.0, 0.0));
        assert!(make_line(1, 100.0).is_err());
        let g = make_line(7, 1000.0).unwrap();
        let d = all_pairs(&g);
        for i in 0..7 {
            for j in 0..7 {
                assert_eq!(d.shortest(i, j), d.euclidean(i, j));
            }
        }
    }

    #[test]
    fn two_vertex_generator() {
        assert_eq!(all_pairs(&make_two_vertex(100.0, 100.0).unwrap()).shortest(0, 1), 100.0);
        let d = all_pairs(&make_two_vertex(100.0, 1000.0).unwrap());
        assert_eq!((d.euclidean(0, 1), d.shortest(0, 1)), (100.0, 1000.0));
        assert!(make_two_vertex(100.0, 50.0).is_err());
    }

    #[test]
    fn lattice_generator() {
        let g = make_lattice(2, 2, 100.0).unwrap();
        assert_eq!((g.len(), g.edge_count()), (4, 4));
        let g = make_lattice(4, 4, 500.0).unwrap();
        assert_eq!((g.len(), g.edge_count()), (16, 24));
        assert_eq!(all_pairs(&g).shortest(0, 15), 3000.0);
        let strip = make_lattice(1, 5, 100.0).unwrap();
        let line = make_line(5, 400.0).unwrap();
        assert_eq!(strip.edges(), line.edges());
        assert!(make_lattice(1, 1, 1.0).is_err());
        assert!(make_lattice(0, 3, 1.0).is_err());
    }

    #[test]
    fn cross_map_generator() {
        let g = make_cross_map(2000.0, 100.0).unwrap();
        assert_eq!(g.len(), 81);
        assert_eq!(g.degree(20), 4);
        assert_eq!(g.point(20), PlanarPoint::new(0.0, 0.0));
        let small = make_cross_map(100.0, 100.0).unwrap();
        assert_eq!(small.len(), 5);
        assert_eq!(small.degree(1), 4);
        assert!(make_cross_map(150.0, 100.0).is_err());
    }

    #[test]
    fn nearest_vertex_ties_to_lowest_id() {
        let pts = vec![
            PlanarPoint::new(0.0, 0.0),
            PlanarPoint::new(-10.0, 0.0),
            PlanarPoint::new(0.0, 50.0),
            PlanarPoint::new(7.0, 7.0),
            PlanarPoint::new(10.0, 0.0),
        ];
        let edges = (0..4).map(|i| Edge { u: i, v: i + 1, weight: 100.0 }).collect();
        let g = RoadGraph::new(pts, edges).unwrap();
        assert_eq!(nearest_vertex(&g, PlanarPoint::new(7.0, 7.0)), 3);
        assert_eq!(nearest_vertex(&g, PlanarPoint::new(0.0, -3.0)), 0);
        // equidistant from 1 (-10,0) and 4 (10,0)
        let g2 = RoadGraph::new(
            vec![
                PlanarPoint::new(0.0, 100.0),
                PlanarPoint::new(-10.0, 0.0),
                PlanarPoint::new(0.0, 200.0),
                PlanarPoint::new(0.0, 300.0),
                PlanarPoint::new(10.0, 0.0),
            ],
            (0..4).map(|i| Edge { u: i, v: i + 1, weight: 400.0 }).collect(),
        )
        .unwrap();
        assert_eq!(nearest_vertex(&g2, PlanarPoint::new(0.0, 0.0)), 1);
    }

    #[test]
    fn median_and_eccentricity() {
        let d = all_pairs(&make_line(5, 400.0).unwrap());
        assert_eq!(d.one_median(), 2);
        assert_eq!(d.eccentricity(2), 200.0);
        assert_eq!(d.diameter(), 400.0);
    }
}
