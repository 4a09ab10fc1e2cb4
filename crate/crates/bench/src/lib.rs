//! Shared fixtures for benchmarks.

use roadpriv_core::graph::make_lattice;
use roadpriv_core::scenarios::hotspot_prior;
use roadpriv_core::{all_pairs, DistanceMatrix, Prior, RoadGraph};

/// Square lattice with 100 m spacing and four hotspots, each holding `share`
/// of the mass, placed a quarter of the way in from each corner.
pub fn hotspot_lattice(side: usize, share: f64) -> (RoadGraph, DistanceMatrix, Prior) {
    let g = make_lattice(side, side, 100.0).expect("valid lattice");
    let d = all_pairs(&g);
    let (a, b) = (side / 4, side - 1 - side / 4);
    let spots = [(a, a), (a, b), (b, a), (b, b)].map(|(r, c)| (r * side + c, share));
    let prior = hotspot_prior(g.len(), &spots).expect("shares sum below one");
    (g, d, prior)
}
