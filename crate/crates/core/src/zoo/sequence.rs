//! Text sequence models: words as endo-channels on one meaning space,
//! composed in reading order onto an initial state.

use std::collections::BTreeMap;

use super::{ZooError, ZooModel};
use crate::diagram::Diagram;
use crate::interpret::Interpretation;
use crate::model::{bind_model, ModelBinding};
use crate::semantics::{Backend, MorphSem, ObjectSem, StochMatrix};
use crate::signature::{build_signature, GenFlags, Generator, Language, Signature, Variable};

/// Signature of a sequence model: one variable `X`, a generator per word,
/// an initial state `star`, and optional extra state generators.
pub fn sequence_signature(words: &[&str], states: &[&str]) -> Result<Signature, ZooError> {
    let mut gens = vec![Generator::new(
        "star",
        vec![],
        vec!["X".into()],
        GenFlags::SHARP,
    )];
    for w in words {
        gens.push(Generator::channel(*w, vec!["X".into()], vec!["X".into()]));
    }
    for s in states {
        gens.push(Generator::channel(*s, vec![], vec!["X".into()]));
    }
    Ok(build_signature(
        vec![Variable::new("X")],
        gens,
        Language::Cd,
    )?)
}

/// The state representation of a word sequence: `wn ∘ … ∘ w1 ∘ star`.
pub fn sequence_state(binding: &ModelBinding, words: &[&str]) -> Result<Diagram, ZooError> {
    let sig = binding.signature().clone();
    let mut d = Diagram::from_generator(&sig, "star")
        .map_err(|_| ZooError::UnknownWord("star".into()))?;
    for w in words {
        if sig.generator(w).is_none() {
            return Err(ZooError::UnknownWord(w.to_string()));
        }
        d = d.compose_seq(&Diagram::from_generator(&sig, w)?)?;
    }
    Ok(d)
}

/// The loan sequence fixture and its approximate rule.
pub struct SequenceFixture {
    pub model: ZooModel,
    /// "homeowner then employed is approximately a reliable person", with
    /// the engineered distance 0.05.
    pub rule: crate::rewrite::RewriteRule,
}

/// A stochastic sequence model in which reading "homeowner" then "employed"
/// lands ℓ1-distance 0.05 from the "reliable" profile state.
pub fn loan_sequence_fixture() -> Result<SequenceFixture, ZooError> {
    let sig = sequence_signature(&["homeowner", "employed"], &["reliable"])?;
    let x = ObjectSem::ProbSpace(vec![
        "reliable_profile".into(),
        "uncertain_profile".into(),
        "new_profile".into(),
    ]);
    let mut objects = BTreeMap::new();
    objects.insert("X".to_string(), x.clone());
    let mut morphs = BTreeMap::new();
    morphs.insert(
        "star".to_string(),
        MorphSem::Matrix(StochMatrix::point(&x, 2)),
    );
    // Columns chosen so that employed ∘ homeowner ∘ star = (0.875, 0.075,
    // 0.05), ℓ1-distance exactly 0.05 from `reliable`.
    morphs.insert(
        "homeowner".to_string(),
        MorphSem::Matrix(StochMatrix::new(
            vec![x.clone()],
            vec![x.clone()],
            vec![
                0.75, 0.5, 0.5, //
                0.25, 0.25, 0.3, //
                0.0, 0.25, 0.2,
            ],
        )),
    );
    morphs.insert(
        "employed".to_string(),
        MorphSem::Matrix(StochMatrix::new(
            vec![x.clone()],
            vec![x.clone()],
            vec![
                1.0, 0.75, 0.75, //
                0.0, 0.25, 0.0, //
                0.0, 0.0, 0.25,
            ],
        )),
    );
    morphs.insert(
        "reliable".to_string(),
        MorphSem::Matrix(StochMatrix::state(&x, &[0.9, 0.05, 0.05])),
    );
    let binding = bind_model(&sig, Backend::Stoch, objects, morphs, BTreeMap::new())?;

    let mut interp = Interpretation::new(&binding);
    interp.set_var_term("X", "meaning space");
    interp.set_gen_term_concrete("star", "initial meaning");
    interp.set_gen_term_concrete("homeowner", "word: homeowner");
    interp.set_gen_term_concrete("employed", "word: employed");
    interp.set_gen_term_concrete("reliable", "a reliable person");
    let model = ZooModel::new(binding, interp, "loan sequence model")?;

    let lhs = sequence_state(&model.binding, &["homeowner", "employed"])?;
    let rhs = Diagram::from_generator(model.binding.signature(), "reliable")?;
    let rule = crate::rewrite::RewriteRule::new("reliable-after-homeowner-employed", lhs, rhs, 0.1)?;
    Ok(SequenceFixture { model, rule })
}
