//! Model bindings: a signature bound to a backend.
//!
//! Binding fixes an object for every variable and a morphism for every
//! generator, then eagerly verifies declared flags and signature equations.
//! Interpretability claims downstream (influence soundness, ε accounting)
//! lean on these checks, so a binding that constructs is known-good.

use std::collections::BTreeMap;
use std::sync::Arc;

use thiserror::Error;

use crate::diagram::Diagram;
use crate::semantics::{eval_diagram, Backend, MorphSem, ObjectSem, SemanticsError};
use crate::signature::{GenName, Language, Signature, SignatureMap, VarName};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("no object bound for variable `{0}`")]
    MissingObject(VarName),
    #[error("no morphism bound for generator `{0}`")]
    MissingMorphism(GenName),
    #[error("generator `{gen}`: {detail}")]
    TypeMismatch { gen: GenName, detail: String },
    #[error("generator `{gen}` violates declared flag `{flag}`")]
    FlagViolation { gen: GenName, flag: &'static str },
    #[error("equation {index} violated: distance {distance}")]
    EquationViolation { index: usize, distance: f64 },
    #[error("backend {backend} cannot bind a {language} signature")]
    UnsupportedLanguage {
        backend: Backend,
        language: Language,
    },
    #[error("boundary mismatch: {0}")]
    BoundaryMismatch(String),
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
}

#[derive(Debug, Clone, Copy)]
pub struct BindOptions {
    /// Equation checking is eager by default; expensive (e.g. quantum)
    /// equation sets can opt out and be checked later via
    /// [`check_equations`].
    pub verify_equations: bool,
}

impl Default for BindOptions {
    fn default() -> Self {
        BindOptions {
            verify_equations: true,
        }
    }
}

#[derive(Debug)]
struct BindingInner {
    signature: Signature,
    backend: Backend,
    object_of: BTreeMap<VarName, ObjectSem>,
    morph_of: BTreeMap<GenName, MorphSem>,
    distinguished: BTreeMap<String, Diagram>,
}

/// An immutable, validated binding; handles are cheap to clone.
#[derive(Debug, Clone)]
pub struct ModelBinding(Arc<BindingInner>);

/// Validates and builds a binding with default options.
pub fn bind_model(
    signature: &Signature,
    backend: Backend,
    object_of: BTreeMap<VarName, ObjectSem>,
    morph_of: BTreeMap<GenName, MorphSem>,
    distinguished: BTreeMap<String, Diagram>,
) -> Result<ModelBinding, ModelError> {
    bind_model_with(
        signature,
        backend,
        object_of,
        morph_of,
        distinguished,
        BindOptions::default(),
    )
}

pub fn bind_model_with(
    signature: &Signature,
    backend: Backend,
    object_of: BTreeMap<VarName, ObjectSem>,
    morph_of: BTreeMap<GenName, MorphSem>,
    distinguished: BTreeMap<String, Diagram>,
    options: BindOptions,
) -> Result<ModelBinding, ModelError> {
    if backend == Backend::Quant && signature.language() == Language::Cd {
        return Err(ModelError::UnsupportedLanguage {
            backend,
            language: signature.language(),
        });
    }

    for v in signature.variables() {
        let obj = object_of
            .get(&v.name)
            .ok_or_else(|| ModelError::MissingObject(v.name.clone()))?;
        obj.check()?;
        if obj.backend() != backend {
            return Err(ModelError::TypeMismatch {
                gen: v.name.clone(),
                detail: format!("object is for backend {}", obj.backend()),
            });
        }
    }

    for g in signature.generators() {
        let m = morph_of
            .get(&g.name)
            .ok_or_else(|| ModelError::MissingMorphism(g.name.clone()))?;
        if m.backend() != backend {
            return Err(ModelError::TypeMismatch {
                gen: g.name.clone(),
                detail: format!("morphism is for backend {}", m.backend()),
            });
        }
        let expect_dom: Vec<&ObjectSem> = g.dom.iter().map(|v| &object_of[v]).collect();
        let expect_cod: Vec<&ObjectSem> = g.cod.iter().map(|v| &object_of[v]).collect();
        if m.dom().iter().collect::<Vec<_>>() != expect_dom
            || m.cod().iter().collect::<Vec<_>>() != expect_cod
        {
            return Err(ModelError::TypeMismatch {
                gen: g.name.clone(),
                detail: "bound morphism interface differs from generator interface".into(),
            });
        }
        if g.flags.is_channel && !m.is_channel() {
            return Err(ModelError::FlagViolation {
                gen: g.name.clone(),
                flag: "channel",
            });
        }
        // Determinism (and hence sharpness) is the copy test; the quantum
        // backend has no copy, so declared flags there stay declarations.
        if g.flags.is_deterministic && backend != Backend::Quant && !m.is_deterministic()? {
            return Err(ModelError::FlagViolation {
                gen: g.name.clone(),
                flag: "deterministic",
            });
        }
        if g.flags.is_sharp_state && !m.is_state() {
            return Err(ModelError::FlagViolation {
                gen: g.name.clone(),
                flag: "sharp",
            });
        }
    }

    let binding = ModelBinding(Arc::new(BindingInner {
        signature: signature.clone(),
        backend,
        object_of,
        morph_of,
        distinguished,
    }));

    if options.verify_equations {
        for (index, distance) in check_equations(&binding)? {
            if distance > backend.equation_tolerance() {
                return Err(ModelError::EquationViolation { index, distance });
            }
        }
    }
    Ok(binding)
}

impl ModelBinding {
    pub fn signature(&self) -> &Signature {
        &self.0.signature
    }

    pub fn backend(&self) -> Backend {
        self.0.backend
    }

    pub fn object(&self, var: &str) -> Option<&ObjectSem> {
        self.0.object_of.get(var)
    }

    pub(crate) fn object_or_err(&self, var: &str) -> Result<ObjectSem, SemanticsError> {
        self.0
            .object_of
            .get(var)
            .cloned()
            .ok_or_else(|| SemanticsError::BadObject(format!("variable `{var}` unbound")))
    }

    pub fn morph(&self, gen: &str) -> Option<&MorphSem> {
        self.0.morph_of.get(gen)
    }

    pub fn objects(&self) -> &BTreeMap<VarName, ObjectSem> {
        &self.0.object_of
    }

    pub fn morphisms(&self) -> &BTreeMap<GenName, MorphSem> {
        &self.0.morph_of
    }

    pub fn distinguished(&self, name: &str) -> Option<&Diagram> {
        self.0.distinguished.get(name)
    }

    pub fn distinguished_map(&self) -> &BTreeMap<String, Diagram> {
        &self.0.distinguished
    }

    /// Evaluates a diagram over this binding's signature.
    pub fn eval(&self, d: &Diagram) -> Result<MorphSem, SemanticsError> {
        eval_diagram(self, d)
    }

    /// Same backend and maps over an extended or re-equipped signature;
    /// revalidates everything.
    pub fn rebind(
        &self,
        signature: &Signature,
        object_of: BTreeMap<VarName, ObjectSem>,
        morph_of: BTreeMap<GenName, MorphSem>,
        distinguished: BTreeMap<String, Diagram>,
    ) -> Result<ModelBinding, ModelError> {
        bind_model(signature, self.backend(), object_of, morph_of, distinguished)
    }
}

/// Norm distance between the two sides of every signature equation, in
/// declaration order. Violations are the entries above backend tolerance.
pub fn check_equations(b: &ModelBinding) -> Result<Vec<(usize, f64)>, ModelError> {
    let mut out = Vec::new();
    for (i, eq) in b.signature().equations().iter().enumerate() {
        let lhs = eval_diagram(b, &eq.lhs)?;
        let rhs = eval_diagram(b, &eq.rhs)?;
        out.push((i, lhs.norm_dist(&rhs)?));
    }
    Ok(out)
}

/// Checks that `fine` refines `coarse` along the signature map `m`: the two
/// diagrams evaluate to the same morphism under the boundary identification,
/// within backend tolerance.
pub fn check_refinement(
    coarse: (&ModelBinding, &Diagram),
    fine: (&ModelBinding, &Diagram),
    m: &SignatureMap,
) -> Result<bool, ModelError> {
    let (cb, cd) = coarse;
    let (fb, fd) = fine;
    if cb.backend() != fb.backend() {
        return Err(ModelError::BoundaryMismatch("backends differ".into()));
    }
    if &m.source != cb.signature() || &m.target != fb.signature() {
        return Err(ModelError::BoundaryMismatch(
            "signature map does not connect the two models".into(),
        ));
    }
    let map_boundary = |vars: &[VarName]| -> Result<Vec<VarName>, ModelError> {
        vars.iter()
            .map(|v| {
                m.map_var(v).cloned().ok_or_else(|| {
                    ModelError::BoundaryMismatch(format!("boundary variable `{v}` unmapped"))
                })
            })
            .collect()
    };
    let mapped_in = map_boundary(cd.input_vars())?;
    let mapped_out = map_boundary(cd.output_vars())?;
    if mapped_in != fd.input_vars() || mapped_out != fd.output_vars() {
        return Err(ModelError::BoundaryMismatch(
            "mapped coarse boundary differs from fine boundary".into(),
        ));
    }
    for (cv, fv) in cd
        .input_vars()
        .iter()
        .chain(cd.output_vars().iter())
        .zip(mapped_in.iter().chain(mapped_out.iter()))
    {
        if cb.object(cv) != fb.object(fv) {
            return Err(ModelError::BoundaryMismatch(format!(
                "objects for `{cv}` and `{fv}` differ"
            )));
        }
    }
    let coarse_sem = eval_diagram(cb, cd)?;
    let fine_sem = eval_diagram(fb, fd)?;
    Ok(coarse_sem.norm_dist(&fine_sem)? <= cb.backend().equation_tolerance())
}
