//! Shared fixtures for the benchmarks.

use disco_core::cag::build_cag;
use disco_core::loss::ProbabilityField;
use disco_core::marking::{explicit_marking, DiscoLabelMap};
use disco_core::mask_io::InstanceMask;
use disco_core::synth::{generate_mask, DiscoRng, SynthConfig, SynthProfile};
use disco_core::AdjacencyGraph;

/// Densely packed square mask with roughly `side * side / 100` instances.
pub fn dense_mask(side: usize, seed: u64) -> InstanceMask {
    generate_mask(&SynthConfig {
        seed,
        height: side,
        width: side,
        target_instance_count: side * side / 100,
        min_spacing: 4,
        growth_rounds: 0,
        profile: SynthProfile::Dense,
    })
    .expect("benchmark configuration is feasible")
}

pub struct LossScene {
    pub mask: InstanceMask,
    pub graph: AdjacencyGraph,
    pub labels: DiscoLabelMap,
    pub semantic: Vec<bool>,
    pub field: ProbabilityField,
}

/// Dense mask with its marking and a random field of matching shape.
pub fn loss_scene(side: usize, seed: u64) -> LossScene {
    let mask = dense_mask(side, seed);
    let graph = build_cag(&mask).expect("generated masks are compact");
    let labels = explicit_marking(&mask, &graph, 3).expect("t = 3 is valid");
    let semantic = disco_core::loss::semantic_target(&mask);
    let mut rng = DiscoRng::new(seed);
    let mut logits = |n: usize| {
        (0..n)
            .map(|_| rng.unit_f64() * 4.0 - 2.0)
            .collect::<Vec<_>>()
    };
    let pixels = side * side;
    let field = ProbabilityField::new(side, side, 3, logits(pixels * 2), logits(pixels * 4))
        .expect("shapes agree");
    LossScene {
        mask,
        graph,
        labels,
        semantic,
        field,
    }
}
