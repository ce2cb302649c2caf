//! Conceptual space models: a product of finite domains with concepts as
//! effects; fit is the scalar from applying a concept to an instance.

use std::collections::BTreeMap;

use super::{ZooError, ZooModel};
use crate::interpret::Interpretation;
use crate::model::bind_model;
use crate::semantics::{Backend, MorphSem, ObjectSem, StochMatrix};
use crate::signature::{build_signature, GenFlags, Generator, Language, Variable, VarName};

/// A finite domain of the conceptual space.
#[derive(Debug, Clone)]
pub struct DomainDef {
    pub var: VarName,
    pub elements: Vec<String>,
}

/// A concept: an effect over one domain, given by its value on each element
/// (crisp subsets use 0/1 values, fuzzy concepts values in [0, 1]).
#[derive(Debug, Clone)]
pub struct ConceptDef {
    pub name: String,
    pub domain: VarName,
    pub values: Vec<f64>,
}

/// Builds the conceptual space model: one variable per domain, a sharp
/// instance state per element, and one effect generator per concept.
pub fn conceptual_space(
    domains: &[DomainDef],
    concepts: &[ConceptDef],
) -> Result<ZooModel, ZooError> {
    let mut variables = Vec::new();
    let mut objects = BTreeMap::new();
    let mut generators = Vec::new();
    let mut morphs: BTreeMap<String, MorphSem> = BTreeMap::new();
    for d in domains {
        variables.push(Variable::new(d.var.clone()));
        let obj = ObjectSem::ProbSpace(d.elements.clone());
        objects.insert(d.var.clone(), obj.clone());
        for (i, e) in d.elements.iter().enumerate() {
            let name = super::rule_based::state_gen_name(&d.var, e);
            generators.push(Generator::new(
                name.clone(),
                vec![],
                vec![d.var.clone()],
                GenFlags::SHARP,
            ));
            morphs.insert(name, MorphSem::Matrix(StochMatrix::point(&obj, i)));
        }
    }
    for c in concepts {
        let obj = objects
            .get(&c.domain)
            .ok_or_else(|| ZooError::DomainMismatch(format!("unknown domain `{}`", c.domain)))?
            .clone();
        if c.values.len() != obj.size() {
            return Err(ZooError::DomainMismatch(format!(
                "concept `{}` has {} values for a {}-element domain",
                c.name,
                c.values.len(),
                obj.size()
            )));
        }
        let name = format!("concept_{}", c.name);
        generators.push(Generator::new(
            name.clone(),
            vec![c.domain.clone()],
            vec![],
            GenFlags::PLAIN,
        ));
        morphs.insert(
            name,
            MorphSem::Matrix(StochMatrix::new(vec![obj], vec![], c.values.clone())),
        );
    }
    let sig = build_signature(variables, generators, Language::Cd)?;
    let binding = bind_model(&sig, Backend::Stoch, objects, morphs, BTreeMap::new())?;
    let mut interp = Interpretation::new(&binding);
    for d in domains {
        interp.set_var_term(&d.var, format!("domain {}", d.var));
        for e in &d.elements {
            interp.set_state_term(&d.var, e, e.clone());
        }
    }
    for d in domains {
        for e in &d.elements {
            interp.set_gen_term_concrete(
                &super::rule_based::state_gen_name(&d.var, e),
                format!("instance {e}"),
            );
        }
    }
    for c in concepts {
        interp.set_gen_term_concrete(&format!("concept_{}", c.name), format!("concept {}", c.name));
    }
    ZooModel::new(binding, interp, "conceptual space over finite domains")
}

/// How well an instance (one normalized state per domain, in model domain
/// order) fits a concept; the concept auto-extends over unused domains by
/// discarding them.
pub fn concept_fit(
    model: &ZooModel,
    instance: &[MorphSem],
    concept: &str,
) -> Result<f64, ZooError> {
    let b = &model.binding;
    let sig = b.signature().clone();
    let gen_name = format!("concept_{concept}");
    let gen = sig
        .generator(&gen_name)
        .ok_or_else(|| ZooError::DomainMismatch(format!("unknown concept `{concept}`")))?
        .clone();
    let vars: Vec<&Variable> = sig.variables().iter().collect();
    if instance.len() != vars.len() {
        return Err(ZooError::DomainMismatch(format!(
            "instance has {} factors, the space has {} domains",
            instance.len(),
            vars.len()
        )));
    }
    // Extend the concept to the whole space: the effect on its domain,
    // discards elsewhere.
    let concept_m = b.morph(&gen_name).unwrap().clone();
    let mut joint = MorphSem::identity(Backend::Stoch, &[]);
    for s in instance {
        if !s.is_state() {
            return Err(ZooError::DomainMismatch("instance factor is not a state".into()));
        }
        joint = joint.tensor(s)?;
    }
    let mut effect = MorphSem::identity(Backend::Stoch, &[]);
    for v in &vars {
        let piece = if gen.dom.contains(&v.name) {
            concept_m.clone()
        } else {
            MorphSem::discard_morph(b.object(&v.name).unwrap())
        };
        effect = effect.tensor(&piece)?;
    }
    let scalar = joint.then(&effect)?;
    let MorphSem::Matrix(m) = scalar else {
        return Err(ZooError::DomainMismatch("expected stochastic scalar".into()));
    };
    Ok(m.data[0])
}

/// Colour/taste toy space with crisp concepts, realizing the yellow-banana
/// fit facts (sweet 1, bitter 0).
pub fn banana_fixture() -> Result<ZooModel, ZooError> {
    let domains = vec![
        DomainDef {
            var: "Colour".into(),
            elements: vec!["yellow".into(), "green".into(), "red".into()],
        },
        DomainDef {
            var: "Taste".into(),
            elements: vec!["sweet".into(), "bitter".into(), "neutral".into()],
        },
    ];
    let concepts = vec![
        ConceptDef {
            name: "yellow".into(),
            domain: "Colour".into(),
            values: vec![1.0, 0.0, 0.0],
        },
        ConceptDef {
            name: "sweet".into(),
            domain: "Taste".into(),
            values: vec![1.0, 0.0, 0.0],
        },
        ConceptDef {
            name: "bitter".into(),
            domain: "Taste".into(),
            values: vec![0.0, 1.0, 0.0],
        },
        ConceptDef {
            name: "anything".into(),
            domain: "Taste".into(),
            values: vec![1.0, 1.0, 1.0],
        },
    ];
    conceptual_space(&domains, &concepts)
}
