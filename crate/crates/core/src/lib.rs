//! ResNet-RS model family tooling: architecture graphs, analytic costs,
//! scaling strategies, training-recipe schedules, RandAugment policies and
//! the reference measurement tables used for speed-accuracy analysis.

pub mod arch_graph;
pub mod cost_model;
pub mod scaling;
pub mod schedules;
pub mod augment;
pub mod cli_io;
