//! Topology-aware instance colouring for dense cell segmentation.
//!
//! Instances of a label mask become nodes of a contact graph. A two-colour
//! assignment is used wherever the graph is bipartite, and a dedicated
//! conflict colour absorbs the nodes that break bipartiteness.

pub mod cag;
pub mod decode;
pub mod error;
pub mod loss;
pub mod marking;
pub mod mask_io;
pub mod metrics;
pub mod synth;
pub mod topology;

pub use cag::{build_cag, AdjacencyGraph};
pub use decode::{argmax_decode, decode_instances, DecodedInstances};
pub use error::{DiscoError, Result};
pub use loss::{total_loss, LossBreakdown, LossConfig, LossTargets, ProbabilityField};
pub use marking::{explicit_marking, greedy_coloring, greedy_k_coloring, DiscoLabelMap};
pub use mask_io::{load_mask, save_mask, InstanceMask, MaskFormat};
pub use metrics::{evaluate_pair, MetricScores};
pub use synth::{generate_mask, generate_random_graph, SynthConfig, SynthProfile};
pub use topology::{
    analyze_graph, heuristic_conflict_set, is_bipartite, summarize_corpus, AnalysisOptions,
    TopologyReport,
};
