//! Worked example models: builders that construct classic interpretable
//! models as bound, interpreted compositional models. These double as
//! fixtures for every other module.

mod causal_fix;
mod conceptual;
mod linear_nn;
mod rule_based;
mod sequence;
mod text;

pub use causal_fix::{aspirin_fcm, fixture_state, smoking_model, sprinkler_model, CausalFixture};
pub use conceptual::{banana_fixture, concept_fit, conceptual_space, ConceptDef, DomainDef};
pub use linear_nn::{linear_model, mlp, transformer_stub, LayerSpec};
pub use rule_based::{compas_scoring, decision_list, decision_tree, scoring_system, state_gen_name, ScoringRule};
pub use sequence::{loan_sequence_fixture, sequence_signature, sequence_state, SequenceFixture};
pub use text::{
    hiring_fixture, likes_fixture, location_fixture, text_circuit, Gate, TextFixture,
};

use thiserror::Error;

use crate::causal::CausalError;
use crate::diagram::DiagramError;
use crate::interpret::{check_interpretation, Interpretation};
use crate::model::{ModelBinding, ModelError};
use crate::rewrite::RewriteError;
use crate::semantics::SemanticsError;
use crate::surgery::SurgeryError;
use crate::signature::SignatureError;

#[derive(Debug, Error)]
pub enum ZooError {
    #[error("unknown word `{0}`")]
    UnknownWord(String),
    #[error("duplicate label `{0}`")]
    DuplicateLabel(String),
    #[error("arity mismatch: {0}")]
    ArityMismatch(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("domain mismatch: {0}")]
    DomainMismatch(String),
    #[error("fixture inconsistency: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Signature(#[from] SignatureError),
    #[error(transparent)]
    Diagram(#[from] DiagramError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
    #[error(transparent)]
    Causal(#[from] CausalError),
    #[error(transparent)]
    Rewrite(#[from] RewriteError),
    #[error(transparent)]
    Surgery(#[from] SurgeryError),
}

/// A bound model together with its interpretation and a note on what it is.
#[derive(Debug, Clone)]
pub struct ZooModel {
    pub binding: ModelBinding,
    pub interpretation: Interpretation,
    pub note: String,
}

impl ZooModel {
    pub fn new(
        binding: ModelBinding,
        interpretation: Interpretation,
        note: impl Into<String>,
    ) -> Result<ZooModel, ZooError> {
        let violations = check_interpretation(&interpretation);
        if let Some(v) = violations.first() {
            return Err(ZooError::Inconsistent(format!(
                "interpretation invalid: {v}"
            )));
        }
        Ok(ZooModel {
            binding,
            interpretation,
            note: note.into(),
        })
    }
}

/// Integer range carrier labels, e.g. ages 18..=80.
pub(crate) fn int_labels(lo: i64, hi: i64) -> Vec<String> {
    (lo..=hi).map(|x| x.to_string()).collect()
}
