//! Elastic path-to-path distances between digitally reconstructed neurons.
//!
//! A neuron tree read from an SWC file is decomposed into its root-to-terminal
//! paths. Every vertex carries a *concurrence* (how many paths pass through
//! it) and a *hierarchy* (how many of those paths have already peeled off).
//! Two paths are compared after
//!
//! - resampling both to a common count by midpoint insertion, keeping the
//!   original vertices where they are,
//! - mapping them to square-root-velocity (SRV) space, where translation is
//!   quotiented out and the metric is flat,
//! - rotating one onto the other with the Kabsch construction,
//!
//! and the weighted integral
//!
//! ```text
//! D(f_i, f_j) = ∫ |C_i(t) − C_j(t)| · |q̃_i(t) − q_j(t)| / (λ + sqrt(H_i(t) H_j(t))) dt
//! ```
//!
//! is evaluated on the SRV grid. The distance between two neurons is the cost
//! of the optimal one-to-one assignment of the smaller path set into the larger.
//!
//! ```
//! use arbormatch::{neuron_distance, ElasticConfig, NeuronTree, PathSet};
//!
//! let text = "1 1 0 0 0 1 -1\n2 3 1 0 0 1 1\n3 3 2 1 0 1 2\n4 3 2 -1 0.5 1 2\n";
//! let tree = NeuronTree::from_swc_str(text).unwrap();
//! let paths = PathSet::from_tree("a", &tree);
//! let (d, assignment) = neuron_distance(&paths, &paths, &ElasticConfig::default()).unwrap();
//! assert_eq!(d, 0.0);
//! assert_eq!(assignment.pairs.len(), 2);
//! ```

pub mod distance;
pub mod error;
pub mod matching;
pub mod par;
pub mod paths;
pub mod resample;
pub mod retrieval;
pub mod srv;
pub mod swc;
pub mod synth;

pub use distance::{morph_paths, pair_pipeline, path_cost, PathCost, PreparedPath};
pub use error::{Error, Result};
pub use matching::{
    cost_matrix, hungarian, neuron_distance, pad_dummy, Assignment, CostMatrix, MatchedPair,
    Orientation,
};
pub use paths::{concurrence, hierarchy, PathSet, RootedPath};
pub use resample::{pair_target, resample, ElasticConfig, ResampledPath};
pub use retrieval::{evaluate, knn_classify, CorpusEntry, CorpusIndex, DistanceMatrix, EvalReport};
pub use srv::{kabsch, morph, register, srv_inverse, srv_transform, Rotation3, SrvCurve};
pub use swc::{NeuronTree, SwcRecord};

pub use nalgebra;

/// 3D position or velocity, micrometers.
pub type Vec3 = nalgebra::Vector3<f64>;
