//! Compositional interpretable models.
//!
//! A string-diagram engine for building AI models as compositional models:
//! free-category diagrams over a signature, functorially evaluated into
//! deterministic, probabilistic, quantum or real-vector semantics. On top of
//! the evaluator sit the interpretability tools: no-influence certificates,
//! diagram surgery and counterfactuals, and ε-tracked rewrite explanations.

pub mod causal;
pub mod diagram;
pub mod influence;
pub mod interpret;
pub mod json;
pub mod model;
pub mod render;
pub mod rewrite;
pub mod semantics;
pub mod signature;
pub mod surgery;
pub mod zoo;

pub use diagram::{apply_map, BoxKind, DiagBox, Diagram, DiagramBuilder, Violation, Wire};
pub use model::{bind_model, check_equations, check_refinement, ModelBinding};
pub use semantics::{eval_diagram, Backend, MorphSem, ObjectSem, StateSem};
pub use signature::{build_signature, compose_maps, Generator, Language, Signature, SignatureMap, Variable};
