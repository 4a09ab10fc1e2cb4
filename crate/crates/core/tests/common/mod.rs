//! Random instances shared by integration tests.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use roadpriv_core::graph::Edge;
use roadpriv_core::{MechanismMatrix, OutputRange, PlanarPoint, Prior, RoadGraph};

/// Connected graph on `n` random points in a 1 km square. A random spanning
/// tree plus `extra` chords; every edge is 1 to 1.5 times its straight length.
pub fn random_graph<R: Rng>(rng: &mut R, n: usize, extra: usize) -> RoadGraph {
    loop {
        let points: Vec<PlanarPoint> = (0..n).map(|_| PlanarPoint::new(rng.random_range(0.0..1000.0), rng.random_range(0.0..1000.0))).collect();
        let mut pairs = Vec::new();
        for v in 1..n {
            pairs.push((rng.random_range(0..v), v));
        }
        for _ in 0..extra {
            let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
            if a != b {
                pairs.push((a.min(b), a.max(b)));
            }
        }
        pairs.sort_unstable();
        pairs.dedup();
        let edges = pairs
            .into_iter()
            .map(|(u, v)| {
                let e = points[u].distance(&points[v]);
                Edge { u, v, weight: e * rng.random_range(1.0..1.5) + 1.0 }
            })
            .collect();
        // coincident points would make an edge shorter than its length bound impossible; retry
        if let Ok(g) = RoadGraph::new(points, edges) {
            return g;
        }
    }
}

pub fn random_prior<R: Rng>(rng: &mut R, n: usize) -> Prior {
    Prior::from_weights((0..n).map(|_| rng.random_range(0.05..1.0)).collect()).unwrap()
}

pub fn random_range<R: Rng>(rng: &mut R, n: usize, max_len: usize) -> OutputRange {
    let mut ids: Vec<usize> = (0..n).collect();
    ids.shuffle(rng);
    let len = rng.random_range(1..=max_len.min(n));
    OutputRange::new(ids[..len].to_vec(), n).unwrap()
}

/// Row-stochastic matrix with strictly positive random entries.
pub fn random_mechanism<R: Rng>(rng: &mut R, n: usize, range: &OutputRange) -> MechanismMatrix {
    let k = range.len();
    let mut probs = Vec::with_capacity(n * k);
    for _ in 0..n {
        let row: Vec<f64> = (0..k).map(|_| rng.random_range(0.01..1.0)).collect();
        let s: f64 = row.iter().sum();
        probs.extend(row.iter().map(|x| x / s));
    }
    MechanismMatrix::new(n, range.clone(), probs, f64::INFINITY).unwrap()
}

/// Every non-empty subset of `0..n`, as index lists.
pub fn subsets(n: usize) -> Vec<Vec<usize>> {
    (1u32..(1 << n)).map(|mask| (0..n).filter(|i| mask & (1 << i) != 0).collect()).collect()
}
