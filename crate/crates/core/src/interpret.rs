//! Interpretations: partial maps from a model's syntax and semantics into a
//! vocabulary of human terms.
//!
//! The abstract map labels variables and generators; the concrete map labels
//! specific morphisms (keyed by their variable interface plus a canonical
//! serialization of the bound semantics, so states of distinct variables
//! stay distinct even when their semantics coincide). The two must agree on
//! generators where both are defined.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::diagram::{BoxKind, Diagram};
use crate::model::ModelBinding;
use crate::semantics::{Backend, FnTable, MorphSem, ObjectSem, StochMatrix};
use crate::signature::{GenName, VarName};

/// Flat vocabulary of human-friendly terms. Morphism terms may declare a
/// dom/cod term interface; when present it is checked against the abstract
/// variable labels.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct HumanSignature {
    pub object_terms: BTreeSet<String>,
    pub morphism_terms: BTreeMap<String, Option<TermInterface>>,
}

/// Declared dom/cod term lists of a morphism term.
pub type TermInterface = (Vec<String>, Vec<String>);

/// Key of a concrete-interpretation entry: variable interface plus the
/// canonical serialization of the morphism.
pub type ConKey = (Vec<VarName>, Vec<VarName>, String);

/// Predicate rule assigning a term to a range of real scalar states.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalRule {
    pub cond: Cond,
    pub term: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cond {
    Leq(f64),
    Lt(f64),
    Geq(f64),
    Gt(f64),
    /// Closed interval.
    Range(f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum InterpViolation {
    /// Abstract and concrete interpretations disagree on a generator.
    Commutativity(GenName),
    /// A morphism (or generator) is interpreted but an interface variable
    /// is not.
    Partiality { context: String, var: VarName },
    /// A morphism term's declared interface does not match the mapped
    /// variable terms.
    TermInterfaceMismatch(GenName),
}

impl fmt::Display for InterpViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InterpViolation::Commutativity(g) => {
                write!(f, "abstract and concrete terms disagree on `{g}`")
            }
            InterpViolation::Partiality { context, var } => {
                write!(f, "{context} interpreted but variable `{var}` is not")
            }
            InterpViolation::TermInterfaceMismatch(g) => {
                write!(f, "term interface mismatch on `{g}`")
            }
        }
    }
}

/// Completeness facts about an interpretation.
#[derive(Debug, Clone, PartialEq)]
pub struct Completeness {
    pub complete: bool,
    pub complete_concrete: bool,
    pub uninterpreted_variables: Vec<VarName>,
    pub uninterpreted_generators: Vec<GenName>,
}

#[derive(Debug, Clone)]
pub struct Interpretation {
    model: ModelBinding,
    pub human: HumanSignature,
    pub abs_var: BTreeMap<VarName, String>,
    pub abs_gen: BTreeMap<GenName, String>,
    pub con: BTreeMap<ConKey, String>,
    /// Predicate rules interpreting real scalar states, per variable.
    pub rules: BTreeMap<VarName, Vec<IntervalRule>>,
}

impl Interpretation {
    pub fn new(model: &ModelBinding) -> Interpretation {
        Interpretation {
            model: model.clone(),
            human: HumanSignature::default(),
            abs_var: BTreeMap::new(),
            abs_gen: BTreeMap::new(),
            con: BTreeMap::new(),
            rules: BTreeMap::new(),
        }
    }

    pub fn model(&self) -> &ModelBinding {
        &self.model
    }

    pub fn set_var_term(&mut self, var: impl Into<String>, term: impl Into<String>) {
        let term = term.into();
        self.human.object_terms.insert(term.clone());
        self.abs_var.insert(var.into(), term);
    }

    /// Abstract label for a generator.
    pub fn set_gen_term(&mut self, gen: impl Into<String>, term: impl Into<String>) {
        let term = term.into();
        self.human.morphism_terms.entry(term.clone()).or_insert(None);
        self.abs_gen.insert(gen.into(), term);
    }

    /// Abstract label plus the matching concrete entry for the generator's
    /// bound morphism.
    pub fn set_gen_term_concrete(&mut self, gen: &str, term: impl Into<String>) {
        let term = term.into();
        self.set_gen_term(gen, term.clone());
        if let Some(g) = self.model.signature().generator(gen) {
            if let Some(m) = self.model.morph(gen) {
                let key = (g.dom.clone(), g.cod.clone(), m.canonical_key());
                self.human.morphism_terms.entry(term.clone()).or_insert(None);
                self.con.insert(key, term);
            }
        }
    }

    /// Concrete entry for an arbitrary morphism at a variable interface.
    pub fn set_concrete(
        &mut self,
        dom: Vec<VarName>,
        cod: Vec<VarName>,
        m: &MorphSem,
        term: impl Into<String>,
    ) {
        let term = term.into();
        self.human.morphism_terms.entry(term.clone()).or_insert(None);
        self.con.insert((dom, cod, m.canonical_key()), term);
    }

    /// Concrete entry for the sharp state picking `element` of a finite
    /// variable.
    pub fn set_state_term(&mut self, var: &str, element: &str, term: impl Into<String>) {
        let Some(obj) = self.model.object(var) else {
            return;
        };
        let Some(i) = obj.element_index(element) else {
            return;
        };
        let m = sharp_state_sem(self.model.backend(), obj, i);
        self.set_concrete(vec![], vec![var.to_string()], &m, term);
    }

    pub fn add_rule(&mut self, var: impl Into<String>, rule: IntervalRule) {
        self.human
            .morphism_terms
            .entry(rule.term.clone())
            .or_insert(None);
        self.rules.entry(var.into()).or_default().push(rule);
    }

    pub fn con_term(&self, dom: &[VarName], cod: &[VarName], m: &MorphSem) -> Option<&String> {
        self.con
            .get(&(dom.to_vec(), cod.to_vec(), m.canonical_key()))
    }

    pub fn gen_term(&self, gen: &str) -> Option<&String> {
        self.abs_gen.get(gen)
    }

    pub fn var_term(&self, var: &str) -> Option<&String> {
        self.abs_var.get(var)
    }

    /// The term shown for a generator box when rendering: concrete first,
    /// then abstract.
    pub fn display_term(&self, gen: &str) -> Option<&String> {
        let g = self.model.signature().generator(gen)?;
        if let Some(m) = self.model.morph(gen) {
            if let Some(t) = self.con_term(&g.dom, &g.cod, m) {
                return Some(t);
            }
        }
        self.gen_term(gen)
    }
}

/// Checks the interpretation invariants; empty iff commutativity and the
/// partial-map conditions hold.
pub fn check_interpretation(i: &Interpretation) -> Vec<InterpViolation> {
    let mut out = Vec::new();
    let sig = i.model.signature();

    for g in sig.generators() {
        // Partial-map condition on the abstract side.
        if i.abs_gen.contains_key(&g.name) {
            for v in g.dom.iter().chain(g.cod.iter()) {
                if !i.abs_var.contains_key(v) {
                    out.push(InterpViolation::Partiality {
                        context: format!("generator `{}`", g.name),
                        var: v.clone(),
                    });
                }
            }
        }
        // Commutativity where both maps are defined.
        if let (Some(abs), Some(m)) = (i.abs_gen.get(&g.name), i.model.morph(&g.name)) {
            if let Some(con) = i.con_term(&g.dom, &g.cod, m) {
                if con != abs {
                    out.push(InterpViolation::Commutativity(g.name.clone()));
                }
            }
        }
        // Declared term interfaces must match mapped variable terms.
        if let Some(term) = i.abs_gen.get(&g.name) {
            if let Some(Some((dterms, cterms))) = i.human.morphism_terms.get(term) {
                let map_ok = |vars: &[VarName], terms: &[String]| {
                    vars.len() == terms.len()
                        && vars
                            .iter()
                            .zip(terms.iter())
                            .all(|(v, t)| i.abs_var.get(v) == Some(t))
                };
                if !map_ok(&g.dom, dterms) || !map_ok(&g.cod, cterms) {
                    out.push(InterpViolation::TermInterfaceMismatch(g.name.clone()));
                }
            }
        }
    }

    // Partial-map condition on the concrete side.
    for (dom, cod, _) in i.con.keys() {
        for v in dom.iter().chain(cod.iter()) {
            if !i.abs_var.contains_key(v) {
                out.push(InterpViolation::Partiality {
                    context: "concrete entry".into(),
                    var: v.clone(),
                });
            }
        }
    }
    out
}

/// Completeness facts: `complete` means the abstract maps are total;
/// `complete_concrete` additionally requires every sharp state of each
/// finite variable to carry a concrete term, and real scalar variables to be
/// covered by rules. Quantum variables never qualify, their state spaces
/// having no enumeration.
pub fn completeness(i: &Interpretation) -> Completeness {
    let sig = i.model.signature();
    let uninterpreted_variables: Vec<VarName> = sig
        .variables()
        .iter()
        .filter(|v| !i.abs_var.contains_key(&v.name))
        .map(|v| v.name.clone())
        .collect();
    let uninterpreted_generators: Vec<GenName> = sig
        .generators()
        .iter()
        .filter(|g| !i.abs_gen.contains_key(&g.name))
        .map(|g| g.name.clone())
        .collect();
    let complete = uninterpreted_variables.is_empty() && uninterpreted_generators.is_empty();

    let mut complete_concrete = complete;
    if complete_concrete {
        'vars: for v in sig.variables() {
            let Some(obj) = i.model.object(&v.name) else {
                complete_concrete = false;
                break;
            };
            match obj {
                ObjectSem::FinSet(elems) | ObjectSem::ProbSpace(elems) => {
                    for idx in 0..elems.len() {
                        let m = sharp_state_sem(i.model.backend(), obj, idx);
                        if i.con_term(&[], std::slice::from_ref(&v.name), &m).is_none() {
                            complete_concrete = false;
                            break 'vars;
                        }
                    }
                }
                ObjectSem::RealSpace(1) => {
                    let covered = i
                        .rules
                        .get(&v.name)
                        .map(|rules| covers_reals(rules))
                        .unwrap_or(false);
                    if !covered {
                        complete_concrete = false;
                        break 'vars;
                    }
                }
                ObjectSem::RealSpace(_) | ObjectSem::Hilbert(_) => {
                    complete_concrete = false;
                    break 'vars;
                }
            }
        }
    }

    Completeness {
        complete,
        complete_concrete,
        uninterpreted_variables,
        uninterpreted_generators,
    }
}

/// True iff the abstract map covers every wire variable and the concrete map
/// covers every generator box's bound morphism. Structural boxes are always
/// interpreted.
pub fn is_interpreted_diagram(i: &Interpretation, d: &Diagram) -> bool {
    for w in d.wires() {
        if !i.abs_var.contains_key(&w.var) {
            return false;
        }
    }
    for v in d.input_vars().iter().chain(d.output_vars().iter()) {
        if !i.abs_var.contains_key(v) {
            return false;
        }
    }
    for b in d.boxes() {
        if let BoxKind::Gen(g) = &b.kind {
            let Some(gen) = d.signature().generator(g) else {
                return false;
            };
            let Some(m) = i.model.morph(g) else {
                return false;
            };
            if i.con_term(&gen.dom, &gen.cod, m).is_none() {
                return false;
            }
        }
    }
    true
}

/// Deterministic one-line-per-generator-box description.
pub fn describe(i: &Interpretation, d: &Diagram) -> String {
    let mut lines = Vec::new();
    for b in d.boxes() {
        if let BoxKind::Gen(g) = &b.kind {
            match i.display_term(g) {
                Some(t) => lines.push(format!("{g}: {t}")),
                None => lines.push(format!("{g}: UNINTERPRETED")),
            }
        }
    }
    lines.join("\n")
}

/// Sharp-state semantics for element `idx` of a finite carrier.
pub fn sharp_state_sem(backend: Backend, obj: &ObjectSem, idx: usize) -> MorphSem {
    match backend {
        Backend::FinFn => MorphSem::FnTable(FnTable::point(obj, idx)),
        Backend::Stoch => MorphSem::Matrix(StochMatrix::point(obj, idx)),
        _ => unreachable!("sharp enumeration only on finite classical backends"),
    }
}

fn covers_reals(rules: &[IntervalRule]) -> bool {
    // Intervals as (lo, lo_closed, hi, hi_closed) on the extended reals.
    let mut iv: Vec<(f64, bool, f64, bool)> = rules
        .iter()
        .map(|r| match r.cond {
            Cond::Leq(a) => (f64::NEG_INFINITY, true, a, true),
            Cond::Lt(a) => (f64::NEG_INFINITY, true, a, false),
            Cond::Geq(a) => (a, true, f64::INFINITY, true),
            Cond::Gt(a) => (a, false, f64::INFINITY, true),
            Cond::Range(a, b) => (a, true, b, true),
        })
        .collect();
    iv.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    let mut covered_to = f64::NEG_INFINITY;
    let mut covered_closed = false; // whether covered_to itself is covered
    for (lo, lo_c, hi, hi_c) in iv {
        let reaches = if lo < covered_to {
            true
        } else if lo == covered_to {
            // Touching intervals must overlap at the boundary point.
            covered_closed || lo_c || lo == f64::NEG_INFINITY
        } else {
            false
        };
        if !reaches {
            return false;
        }
        if hi > covered_to || (hi == covered_to && hi_c && !covered_closed) {
            covered_to = hi;
            covered_closed = hi_c;
        }
    }
    covered_to == f64::INFINITY
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::bind_model;
    use crate::semantics::StochMatrix;
    use crate::signature::{build_signature, Generator, Language, Variable};
    use std::collections::BTreeMap;

    fn two(labels: [&str; 2]) -> ObjectSem {
        ObjectSem::ProbSpace(labels.iter().map(|s| s.to_string()).collect())
    }

    fn tiny_model() -> ModelBinding {
        let sig = build_signature(
            vec![Variable::new("Se"), Variable::new("Sp")],
            vec![Generator::channel("f", vec!["Se".into()], vec!["Sp".into()])],
            Language::Cd,
        )
        .unwrap();
        let se = two(["summer", "autumn"]);
        let sp = two(["on", "off"]);
        let mut objects = BTreeMap::new();
        objects.insert("Se".to_string(), se.clone());
        objects.insert("Sp".to_string(), sp.clone());
        let mut morphs = BTreeMap::new();
        morphs.insert(
            "f".to_string(),
            MorphSem::Matrix(StochMatrix::new(
                vec![se],
                vec![sp],
                vec![0.9, 0.1, 0.1, 0.9],
            )),
        );
        bind_model(&sig, Backend::Stoch, objects, morphs, BTreeMap::new()).unwrap()
    }

    #[test]
    fn empty_interpretation_vacuously_commutes() {
        let b = tiny_model();
        let i = Interpretation::new(&b);
        assert!(check_interpretation(&i).is_empty());
        let c = completeness(&i);
        assert!(!c.complete && !c.complete_concrete);
        assert_eq!(c.uninterpreted_variables, vec!["Se", "Sp"]);
    }

    #[test]
    fn commutativity_violation_detected() {
        let b = tiny_model();
        let mut i = Interpretation::new(&b);
        i.set_var_term("Se", "Season");
        i.set_var_term("Sp", "Sprinkler");
        i.set_gen_term("f", "rainfall");
        let g = b.signature().generator("f").unwrap().clone();
        let m = b.morph("f").unwrap().clone();
        i.set_concrete(g.dom, g.cod, &m, "activation");
        let vs = check_interpretation(&i);
        assert_eq!(vs, vec![InterpViolation::Commutativity("f".into())]);
    }

    #[test]
    fn matching_concrete_entry_commutes() {
        let b = tiny_model();
        let mut i = Interpretation::new(&b);
        i.set_var_term("Se", "Season");
        i.set_var_term("Sp", "Sprinkler");
        i.set_gen_term_concrete("f", "sprinkler activation");
        assert!(check_interpretation(&i).is_empty());
    }

    #[test]
    fn complete_concrete_requires_all_sharp_states() {
        let b = tiny_model();
        let mut i = Interpretation::new(&b);
        i.set_var_term("Se", "Season");
        i.set_var_term("Sp", "Sprinkler");
        i.set_gen_term_concrete("f", "sprinkler activation");
        let c = completeness(&i);
        assert!(c.complete && !c.complete_concrete);

        i.set_state_term("Se", "summer", "summer");
        i.set_state_term("Se", "autumn", "autumn");
        i.set_state_term("Sp", "on", "on");
        i.set_state_term("Sp", "off", "off");
        let c = completeness(&i);
        assert!(c.complete_concrete);
    }

    #[test]
    fn interpreted_diagram_predicate() {
        let b = tiny_model();
        let mut i = Interpretation::new(&b);
        i.set_var_term("Se", "Season");
        let sig = b.signature().clone();
        let wire = Diagram::identity(&sig, &["Se".into()]);
        assert!(is_interpreted_diagram(&i, &wire));

        let f = Diagram::from_generator(&sig, "f").unwrap();
        assert!(!is_interpreted_diagram(&i, &f));
        i.set_var_term("Sp", "Sprinkler");
        i.set_gen_term_concrete("f", "sprinkler activation");
        assert!(is_interpreted_diagram(&i, &f));
        assert_eq!(describe(&i, &f), "f: sprinkler activation");

        // Dropping the variable label flips the predicate.
        i.abs_var.remove("Sp");
        assert!(!is_interpreted_diagram(&i, &f));
    }

    #[test]
    fn describe_flags_uninterpreted_boxes() {
        let b = tiny_model();
        let i = Interpretation::new(&b);
        let sig = b.signature().clone();
        let f = Diagram::from_generator(&sig, "f").unwrap();
        assert_eq!(describe(&i, &f), "f: UNINTERPRETED");
        let empty = Diagram::identity(&sig, &[]);
        assert_eq!(describe(&i, &empty), "");
    }

    #[test]
    fn rule_coverage_for_scalar_reals() {
        let rules = vec![
            IntervalRule {
                cond: Cond::Leq(0.0),
                term: "no rain".into(),
            },
            IntervalRule {
                cond: Cond::Gt(0.0),
                term: "rain".into(),
            },
        ];
        assert!(covers_reals(&rules));
        let gap = vec![
            IntervalRule {
                cond: Cond::Lt(0.0),
                term: "a".into(),
            },
            IntervalRule {
                cond: Cond::Gt(0.0),
                term: "b".into(),
            },
        ];
        assert!(!covers_reals(&gap));
    }
}
