//! Location privacy on road networks.
//!
//! Road graphs with shortest-path distances, the graph-exponential mechanism
//! and its planar baselines, Bayesian adversaries, privacy and utility
//! metrics, and a greedy search for the mechanism's output range.

pub mod adversary;
pub mod error;
pub mod graph;
pub mod lambert;
pub mod mechanism;
pub mod metrics;
pub mod optimizer;
pub mod scenarios;

pub use adversary::{bayes_choice, brute_force_attack, map_attack, optimal_attack, posterior, posterior_strategy, InferenceStrategy, Prior};
pub use error::{Error, Result};
pub use graph::{all_pairs, load_graph, nearest_vertex, DistanceMatrix, Edge, Metric, PlanarPoint, RoadGraph};
pub use mechanism::{gem_matrix, gem_sample, plm_sample, plmg_matrix, postprocess, privacy_loss, MechanismMatrix, OutputRange};
pub use metrics::{adversarial_error, performance_criterion, q_loss, true_probability, Attack, EvaluationReport};
pub use optimizer::{greedy_optimize, init_range_by_qloss, Objective, OptimizationConfig, OptimizationResult, Theta};
