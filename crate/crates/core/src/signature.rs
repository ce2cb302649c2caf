//! Signatures: the syntax side of a compositional model.
//!
//! A [`Signature`] declares variables (wire types), generators (boxes) and
//! equations between diagrams, together with the diagram language its
//! diagrams may use (plain monoidal, with discarding, or with copying and
//! discarding). Signatures are immutable values; handles are cheap to clone.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagram::Diagram;

/// Variable identifier, unique within a signature.
pub type VarName = String;
/// Generator identifier, unique within a signature.
pub type GenName = String;

/// Which structural generators diagrams over a signature may use.
///
/// Copying is only available in [`Language::Cd`]; discarding in
/// [`Language::Discard`] and [`Language::Cd`]. Quantum backends bind only
/// `Monoidal`/`Discard` signatures, since there is no copy map on quantum
/// objects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    Monoidal,
    Discard,
    Cd,
}

impl Language {
    pub fn allows_discard(self) -> bool {
        matches!(self, Language::Discard | Language::Cd)
    }

    pub fn allows_copy(self) -> bool {
        matches!(self, Language::Cd)
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Language::Monoidal => write!(f, "monoidal"),
            Language::Discard => write!(f, "discard"),
            Language::Cd => write!(f, "cd"),
        }
    }
}

/// A named wire type.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Variable {
    pub name: VarName,
}

impl Variable {
    pub fn new(name: impl Into<String>) -> Self {
        Variable { name: name.into() }
    }
}

/// Structural flags carried by a generator.
///
/// Flags are declared, not inferred: rewrites such as discard naturality are
/// only sound for channels, so the flags gate them syntactically. Backends
/// verify the declared flags numerically when a model is bound.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenFlags {
    pub is_channel: bool,
    pub is_deterministic: bool,
    pub is_sharp_state: bool,
}

impl GenFlags {
    pub const PLAIN: GenFlags = GenFlags {
        is_channel: false,
        is_deterministic: false,
        is_sharp_state: false,
    };
    pub const CHANNEL: GenFlags = GenFlags {
        is_channel: true,
        is_deterministic: false,
        is_sharp_state: false,
    };
    pub const DETERMINISTIC: GenFlags = GenFlags {
        is_channel: true,
        is_deterministic: true,
        is_sharp_state: false,
    };
    pub const SHARP: GenFlags = GenFlags {
        is_channel: true,
        is_deterministic: true,
        is_sharp_state: true,
    };
}

/// A typed box: named morphism with ordered input and output variables.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Generator {
    pub name: GenName,
    pub dom: Vec<VarName>,
    pub cod: Vec<VarName>,
    pub flags: GenFlags,
}

impl Generator {
    pub fn new(
        name: impl Into<String>,
        dom: Vec<VarName>,
        cod: Vec<VarName>,
        flags: GenFlags,
    ) -> Self {
        Generator {
            name: name.into(),
            dom,
            cod,
            flags,
        }
    }

    /// Channel generator (no other flags).
    pub fn channel(name: impl Into<String>, dom: Vec<VarName>, cod: Vec<VarName>) -> Self {
        Self::new(name, dom, cod, GenFlags::CHANNEL)
    }

    /// Deterministic channel generator.
    pub fn deterministic(name: impl Into<String>, dom: Vec<VarName>, cod: Vec<VarName>) -> Self {
        Self::new(name, dom, cod, GenFlags::DETERMINISTIC)
    }

    /// Sharp state of a single variable.
    pub fn sharp_state(name: impl Into<String>, var: impl Into<String>) -> Self {
        Self::new(name, vec![], vec![var.into()], GenFlags::SHARP)
    }

    pub fn is_state(&self) -> bool {
        self.dom.is_empty()
    }
}

/// A declared equation between two diagrams over the same signature.
#[derive(Debug, Clone, PartialEq)]
pub struct Equation {
    pub lhs: Diagram,
    pub rhs: Diagram,
}

#[derive(Debug)]
pub(crate) struct SigInner {
    pub language: Language,
    /// Insertion-ordered variable table.
    pub variables: Vec<Variable>,
    pub generators: Vec<Generator>,
    pub var_index: BTreeMap<VarName, usize>,
    pub gen_index: BTreeMap<GenName, usize>,
    pub equations: Vec<Equation>,
}

/// Immutable signature handle.
#[derive(Clone)]
pub struct Signature(pub(crate) Arc<SigInner>);

impl fmt::Debug for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Signature")
            .field("language", &self.0.language)
            .field("variables", &self.0.variables.len())
            .field("generators", &self.0.generators.len())
            .field("equations", &self.0.equations.len())
            .finish()
    }
}

/// Two signatures are compatible when language, variables and generators
/// agree as sets (declaration order is presentation data, as are the
/// equations).
impl PartialEq for Signature {
    fn eq(&self, other: &Self) -> bool {
        if Arc::ptr_eq(&self.0, &other.0) {
            return true;
        }
        self.0.language == other.0.language
            && self.0.variables.len() == other.0.variables.len()
            && self.0.generators.len() == other.0.generators.len()
            && self
                .0
                .variables
                .iter()
                .all(|v| other.has_variable(&v.name))
            && self
                .0
                .generators
                .iter()
                .all(|g| other.generator(&g.name) == Some(g))
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SignatureError {
    #[error("duplicate name `{0}`")]
    DuplicateName(String),
    #[error("unresolved reference to `{0}`")]
    UnresolvedReference(String),
    #[error("equation {index}: interface mismatch ({detail})")]
    EquationInterfaceMismatch { index: usize, detail: String },
    #[error("generator `{0}`: sharp state must have empty dom and be deterministic")]
    FlagContradiction(String),
    #[error("equation {index}: invalid diagram: {detail}")]
    EquationInvalidDiagram { index: usize, detail: String },
}

/// Validates and builds a signature without equations.
///
/// Equation diagrams are built over the returned signature and attached with
/// [`Signature::with_equations`]; both handles stay compatible since
/// equations do not enter signature identity.
pub fn build_signature(
    variables: Vec<Variable>,
    generators: Vec<Generator>,
    language: Language,
) -> Result<Signature, SignatureError> {
    let mut var_index = BTreeMap::new();
    for (i, v) in variables.iter().enumerate() {
        if var_index.insert(v.name.clone(), i).is_some() {
            return Err(SignatureError::DuplicateName(v.name.clone()));
        }
    }
    let mut gen_index = BTreeMap::new();
    for (i, g) in generators.iter().enumerate() {
        if gen_index.insert(g.name.clone(), i).is_some() {
            return Err(SignatureError::DuplicateName(g.name.clone()));
        }
        for v in g.dom.iter().chain(g.cod.iter()) {
            if !var_index.contains_key(v) {
                return Err(SignatureError::UnresolvedReference(v.clone()));
            }
        }
        if g.flags.is_sharp_state && (!g.dom.is_empty() || !g.flags.is_deterministic) {
            return Err(SignatureError::FlagContradiction(g.name.clone()));
        }
        if g.flags.is_deterministic && !g.flags.is_channel {
            // Deterministic morphisms are channels.
            return Err(SignatureError::FlagContradiction(g.name.clone()));
        }
    }
    Ok(Signature(Arc::new(SigInner {
        language,
        variables,
        generators,
        var_index,
        gen_index,
        equations: Vec::new(),
    })))
}

impl Signature {
    /// Empty signature in the given language.
    pub fn empty(language: Language) -> Signature {
        build_signature(Vec::new(), Vec::new(), language).expect("empty signature is valid")
    }

    pub fn language(&self) -> Language {
        self.0.language
    }

    pub fn variables(&self) -> &[Variable] {
        &self.0.variables
    }

    pub fn generators(&self) -> &[Generator] {
        &self.0.generators
    }

    pub fn equations(&self) -> &[Equation] {
        &self.0.equations
    }

    pub fn has_variable(&self, name: &str) -> bool {
        self.0.var_index.contains_key(name)
    }

    pub fn generator(&self, name: &str) -> Option<&Generator> {
        self.0.gen_index.get(name).map(|&i| &self.0.generators[i])
    }

    /// Attaches equations, validating that each pair shares a boundary and
    /// that both sides are valid diagrams over this signature.
    pub fn with_equations(&self, equations: Vec<Equation>) -> Result<Signature, SignatureError> {
        for (index, eq) in equations.iter().enumerate() {
            for (side, d) in [("lhs", &eq.lhs), ("rhs", &eq.rhs)] {
                if d.signature() != self {
                    return Err(SignatureError::EquationInvalidDiagram {
                        index,
                        detail: format!("{side} built over a different signature"),
                    });
                }
                let violations = d.validate();
                if !violations.is_empty() {
                    return Err(SignatureError::EquationInvalidDiagram {
                        index,
                        detail: format!("{side}: {}", violations[0]),
                    });
                }
            }
            if eq.lhs.input_vars() != eq.rhs.input_vars() {
                return Err(SignatureError::EquationInterfaceMismatch {
                    index,
                    detail: "input variable lists differ".into(),
                });
            }
            if eq.lhs.output_vars() != eq.rhs.output_vars() {
                return Err(SignatureError::EquationInterfaceMismatch {
                    index,
                    detail: "output variable lists differ".into(),
                });
            }
        }
        Ok(Signature(Arc::new(SigInner {
            language: self.0.language,
            variables: self.0.variables.clone(),
            generators: self.0.generators.clone(),
            var_index: self.0.var_index.clone(),
            gen_index: self.0.gen_index.clone(),
            equations,
        })))
    }

    /// Extends the signature with additional generators (used by surgery and
    /// causal interventions, which introduce fresh states or mechanisms).
    pub fn with_added_generators(
        &self,
        extra: Vec<Generator>,
    ) -> Result<Signature, SignatureError> {
        let mut gens = self.0.generators.clone();
        gens.extend(extra);
        let sig = build_signature(self.0.variables.clone(), gens, self.0.language)?;
        Ok(sig)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MapError {
    #[error("map undefined on generator `{0}`")]
    UndefinedOnGenerator(GenName),
    #[error("map undefined on variable `{0}`")]
    UndefinedOnVariable(VarName),
    #[error("composition mismatch: first map's target is not second map's source")]
    TargetSourceMismatch,
    #[error("invalid signature map: {0}")]
    Invalid(String),
}

/// Partial map between signatures: partial functions on variables and
/// generators, where a mapped generator requires all its interface variables
/// to be mapped, pointwise.
#[derive(Debug, Clone)]
pub struct SignatureMap {
    pub source: Signature,
    pub target: Signature,
    pub var_map: BTreeMap<VarName, VarName>,
    pub gen_map: BTreeMap<GenName, GenName>,
}

impl SignatureMap {
    pub fn new(
        source: Signature,
        target: Signature,
        var_map: BTreeMap<VarName, VarName>,
        gen_map: BTreeMap<GenName, GenName>,
    ) -> Result<SignatureMap, MapError> {
        for (v, w) in &var_map {
            if !source.has_variable(v) {
                return Err(MapError::Invalid(format!("unknown source variable `{v}`")));
            }
            if !target.has_variable(w) {
                return Err(MapError::Invalid(format!("unknown target variable `{w}`")));
            }
        }
        for (g, h) in &gen_map {
            let sg = source
                .generator(g)
                .ok_or_else(|| MapError::Invalid(format!("unknown source generator `{g}`")))?;
            let tg = target
                .generator(h)
                .ok_or_else(|| MapError::Invalid(format!("unknown target generator `{h}`")))?;
            // Partial-map condition plus pointwise-typed interfaces.
            let map_list = |list: &[VarName]| -> Result<Vec<VarName>, MapError> {
                list.iter()
                    .map(|v| {
                        var_map
                            .get(v)
                            .cloned()
                            .ok_or_else(|| MapError::UndefinedOnVariable(v.clone()))
                    })
                    .collect()
            };
            if map_list(&sg.dom)? != tg.dom || map_list(&sg.cod)? != tg.cod {
                return Err(MapError::Invalid(format!(
                    "generator `{g}` does not map pointwise onto `{h}`"
                )));
            }
        }
        Ok(SignatureMap {
            source,
            target,
            var_map,
            gen_map,
        })
    }

    /// Identity map on a signature (total).
    pub fn identity(sig: &Signature) -> SignatureMap {
        let var_map = sig
            .variables()
            .iter()
            .map(|v| (v.name.clone(), v.name.clone()))
            .collect();
        let gen_map = sig
            .generators()
            .iter()
            .map(|g| (g.name.clone(), g.name.clone()))
            .collect();
        SignatureMap {
            source: sig.clone(),
            target: sig.clone(),
            var_map,
            gen_map,
        }
    }

    pub fn map_var(&self, v: &str) -> Option<&VarName> {
        self.var_map.get(v)
    }

    pub fn map_gen(&self, g: &str) -> Option<&GenName> {
        self.gen_map.get(g)
    }

    /// Defined everywhere on the source signature.
    pub fn is_total(&self) -> bool {
        self.source
            .variables()
            .iter()
            .all(|v| self.var_map.contains_key(&v.name))
            && self
                .source
                .generators()
                .iter()
                .all(|g| self.gen_map.contains_key(&g.name))
    }
}

/// Composite partial map, defined exactly where the chain is defined.
pub fn compose_maps(m1: &SignatureMap, m2: &SignatureMap) -> Result<SignatureMap, MapError> {
    if m1.target != m2.source {
        return Err(MapError::TargetSourceMismatch);
    }
    let var_map = m1
        .var_map
        .iter()
        .filter_map(|(v, w)| m2.var_map.get(w).map(|u| (v.clone(), u.clone())))
        .collect();
    let gen_map = m1
        .gen_map
        .iter()
        .filter_map(|(g, h)| m2.gen_map.get(h).map(|k| (g.clone(), k.clone())))
        .collect();
    SignatureMap::new(m1.source.clone(), m2.target.clone(), var_map, gen_map)
}
