//! Rewrite rules, convex subdiagram matching and ε-tracked proofs.
//!
//! A rule is a boundary-compatible diagram pair with a declared ε. Rules are
//! verified against a binding (measured distance within ε) or generated as
//! exact evaluation rules from deterministic boxes. Proof search is a
//! bounded breadth-first rewrite with iso-deduplication; ε accounting is
//! additive exactly in the regime where the matrix norm makes contexts
//! nonexpansive (all-channel diagrams under the stochastic backend).

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use thiserror::Error;

use crate::diagram::{
    splice_region, BoxId, BoxKind, Diagram, DiagramError, WireDst, WireSrc,
};
use crate::interpret::{is_interpreted_diagram, Interpretation};
use crate::model::ModelBinding;
use crate::semantics::{Backend, MorphSem, SemanticsError};
use crate::signature::{GenName, VarName};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RewriteError {
    #[error("rule `{name}`: measured distance {measured} exceeds declared ε {declared}")]
    EpsilonExceeded {
        name: String,
        measured: f64,
        declared: f64,
    },
    #[error("rule boundaries differ: {0}")]
    BoundaryMismatch(String),
    #[error("generator `{0}` is not deterministic; no evaluation rule")]
    NotDeterministic(GenName),
    #[error("no sharp state generator bound to value `{value}` of `{var}`")]
    MissingStateGenerator { var: VarName, value: String },
    #[error("match is stale or malformed")]
    InvalidMatch,
    #[error("rule `{0}` is neither verified nor an evaluation rule")]
    RuleNotVerified(String),
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
    #[error(transparent)]
    Diagram(#[from] DiagramError),
}

#[derive(Debug, Clone, PartialEq)]
pub enum RuleStatus {
    /// Declared but not yet checked against a binding.
    Asserted,
    /// Checked: carries the measured distance.
    Verified(f64),
    /// Exact by construction (tracing a deterministic box).
    Evaluation,
}

#[derive(Debug, Clone)]
pub struct RewriteRule {
    pub name: String,
    pub lhs: Diagram,
    pub rhs: Diagram,
    pub epsilon: f64,
    pub status: RuleStatus,
}

impl RewriteRule {
    pub fn new(
        name: impl Into<String>,
        lhs: Diagram,
        rhs: Diagram,
        epsilon: f64,
    ) -> Result<RewriteRule, RewriteError> {
        if lhs.input_vars() != rhs.input_vars() || lhs.output_vars() != rhs.output_vars() {
            return Err(RewriteError::BoundaryMismatch(format!(
                "lhs {:?} -> {:?}, rhs {:?} -> {:?}",
                lhs.input_vars(),
                lhs.output_vars(),
                rhs.input_vars(),
                rhs.output_vars()
            )));
        }
        for (side, d) in [("lhs", &lhs), ("rhs", &rhs)] {
            if let Some(v) = d.validate().first() {
                return Err(RewriteError::Diagram(DiagramError::Invalid(format!(
                    "{side}: {v}"
                ))));
            }
        }
        Ok(RewriteRule {
            name: name.into(),
            lhs,
            rhs,
            epsilon,
            status: RuleStatus::Asserted,
        })
    }

    pub fn usable_in_proofs(&self) -> bool {
        matches!(self.status, RuleStatus::Verified(_) | RuleStatus::Evaluation)
    }
}

/// Measures the rule under a binding; returns it with `Verified` status or
/// fails when the distance exceeds the declared ε.
pub fn verify_rule(b: &ModelBinding, rule: &RewriteRule) -> Result<RewriteRule, RewriteError> {
    let lhs = b.eval(&rule.lhs)?;
    let rhs = b.eval(&rule.rhs)?;
    let measured = lhs.norm_dist(&rhs)?;
    if measured > rule.epsilon {
        return Err(RewriteError::EpsilonExceeded {
            name: rule.name.clone(),
            measured,
            declared: rule.epsilon,
        });
    }
    Ok(RewriteRule {
        status: RuleStatus::Verified(measured),
        ..rule.clone()
    })
}

/// Finds a sharp-state generator bound to exactly the point state `value`
/// of `var`.
fn sharp_state_gen(b: &ModelBinding, var: &str, value_idx: usize) -> Option<GenName> {
    let obj = b.object(var)?;
    let want = crate::interpret::sharp_state_sem(b.backend(), obj, value_idx).canonical_key();
    b.signature()
        .generators()
        .iter()
        .filter(|g| g.flags.is_sharp_state && g.cod == vec![var.to_string()])
        .find(|g| {
            b.morph(&g.name)
                .is_some_and(|m| m.canonical_key() == want)
        })
        .map(|g| g.name.clone())
}

/// Builds the exact evaluation rule `(box ∘ input-states) = output-states`
/// for a deterministic box applied to sharp inputs. The signature must
/// contain sharp state generators for the resulting output values.
pub fn make_eval_rule(
    b: &ModelBinding,
    box_gen: &str,
    input_states: &[GenName],
) -> Result<RewriteRule, RewriteError> {
    let sig = b.signature().clone();
    let gen = sig
        .generator(box_gen)
        .ok_or_else(|| RewriteError::Semantics(SemanticsError::UnboundGenerator(box_gen.into())))?
        .clone();
    if !gen.flags.is_deterministic {
        return Err(RewriteError::NotDeterministic(box_gen.into()));
    }
    if input_states.len() != gen.dom.len() {
        return Err(RewriteError::BoundaryMismatch(format!(
            "`{box_gen}` takes {} inputs, got {} states",
            gen.dom.len(),
            input_states.len()
        )));
    }
    let mut lhs = Diagram::identity(&sig, &[]);
    for s in input_states {
        lhs = lhs.compose_par(&Diagram::from_generator(&sig, s)?)?;
    }
    let lhs = lhs.compose_seq(&Diagram::from_generator(&sig, box_gen)?)?;
    // The output must be sharp; resolve each output factor to a state
    // generator.
    let out = b.eval(&lhs)?;
    let out_values: Vec<usize> = match &out {
        MorphSem::FnTable(t) => crate::semantics::unflat_index(&t.cod, t.map[0]),
        MorphSem::Matrix(m) => {
            if !m.is_deterministic(1e-12) {
                return Err(RewriteError::NotDeterministic(box_gen.into()));
            }
            crate::semantics::unflat_index(&m.cod, m.column_argmax(0))
        }
        _ => return Err(RewriteError::NotDeterministic(box_gen.into())),
    };
    let mut rhs = Diagram::identity(&sig, &[]);
    for (var, &value) in gen.cod.iter().zip(out_values.iter()) {
        let state = sharp_state_gen(b, var, value).ok_or_else(|| {
            let label = b
                .object(var)
                .and_then(|o| o.elements())
                .and_then(|e| e.get(value).cloned())
                .unwrap_or_else(|| value.to_string());
            RewriteError::MissingStateGenerator {
                var: var.clone(),
                value: label,
            }
        })?;
        rhs = rhs.compose_par(&Diagram::from_generator(&sig, &state)?)?;
    }
    let name = format!("eval_{box_gen}({})", input_states.join(","));
    Ok(RewriteRule {
        name,
        lhs,
        rhs,
        epsilon: 0.0,
        status: RuleStatus::Evaluation,
    })
}

/// Public lookup of the sharp-state generator for `var = element`.
pub fn sharp_state_generator(b: &ModelBinding, var: &str, element: &str) -> Option<GenName> {
    let idx = b.object(var)?.element_index(element)?;
    sharp_state_gen(b, var, idx)
}

/// Generates every evaluation rule of every deterministic non-state
/// generator whose input combination count stays within `limit`, skipping
/// combinations whose input or output states have no sharp generator bound.
pub fn enumerate_eval_rules(b: &ModelBinding, limit: usize) -> Vec<RewriteRule> {
    let sig = b.signature().clone();
    let mut rules = Vec::new();
    for g in sig.generators() {
        if !g.flags.is_deterministic || g.dom.is_empty() {
            continue;
        }
        let carriers: Option<Vec<Vec<String>>> = g
            .dom
            .iter()
            .map(|v| b.object(v).and_then(|o| o.elements().map(<[String]>::to_vec)))
            .collect();
        let Some(carriers) = carriers else { continue };
        let combos: usize = carriers.iter().map(|c| c.len()).product();
        if combos > limit {
            continue;
        }
        for flat in 0..combos {
            let mut rem = flat;
            let mut states = Vec::with_capacity(carriers.len());
            for c in carriers.iter().rev() {
                states.push((c.len(), rem % c.len()));
                rem /= c.len();
            }
            states.reverse();
            let gens: Option<Vec<GenName>> = g
                .dom
                .iter()
                .zip(states.iter())
                .map(|(v, &(_, idx))| sharp_state_gen(b, v, idx))
                .collect();
            let Some(gens) = gens else { continue };
            if let Ok(rule) = make_eval_rule(b, &g.name, &gens) {
                rules.push(rule);
            }
        }
    }
    rules
}

/// Sharp states are copied by the copy morphism; one exact rule per sharp
/// state generator: `copy ∘ s = s ⊗ s`. Only meaningful in cd signatures.
pub fn sharp_copy_rules(b: &ModelBinding) -> Vec<RewriteRule> {
    let sig = b.signature().clone();
    if !sig.language().allows_copy() {
        return Vec::new();
    }
    sig.generators()
        .iter()
        .filter(|g| g.flags.is_sharp_state && g.cod.len() == 1)
        .filter_map(|g| {
            let var = &g.cod[0];
            let s = Diagram::from_generator(&sig, &g.name).ok()?;
            let lhs = s.compose_seq(&Diagram::copy(&sig, var, 2)).ok()?;
            let rhs = s.compose_par(&s).ok()?;
            Some(RewriteRule {
                name: format!("copy_{}", g.name),
                lhs,
                rhs,
                epsilon: 0.0,
                status: RuleStatus::Evaluation,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

/// An embedding of one side of a rule into a host diagram.
#[derive(Debug, Clone, PartialEq)]
pub struct Match {
    pub direction: Direction,
    /// Pattern box id → host box id.
    pub box_map: BTreeMap<BoxId, BoxId>,
    /// Host wire indices matched to the pattern's input boundary, in order.
    pub in_wires: Vec<usize>,
    /// Host wire indices matched to the pattern's output boundary, in order.
    pub out_wires: Vec<usize>,
}

/// All convex embeddings of the rule's source side into the host, in
/// deterministic order. Patterns without boxes, or with boundary-to-boundary
/// wires, have no anchored occurrences and yield no matches.
pub fn find_matches(host: &Diagram, rule: &RewriteRule, direction: Direction) -> Vec<Match> {
    let pattern = match direction {
        Direction::Forward => &rule.lhs,
        Direction::Backward => &rule.rhs,
    };
    if pattern.boxes().is_empty()
        || pattern.wires().iter().any(|w| {
            matches!(w.src, WireSrc::Input(_)) && matches!(w.dst, WireDst::Output(_))
        })
    {
        return Vec::new();
    }
    let mut results = Vec::new();
    let mut assignment: Vec<Option<usize>> = vec![None; pattern.boxes().len()];
    let mut used_host: BTreeSet<usize> = BTreeSet::new();
    extend_match(
        host,
        pattern,
        0,
        &mut assignment,
        &mut used_host,
        &mut results,
    );
    let mut matches = Vec::new();
    for assign in results {
        if let Some(m) = finalize_match(host, pattern, &assign, direction) {
            matches.push(m);
        }
    }
    matches
}

fn extend_match(
    host: &Diagram,
    pattern: &Diagram,
    k: usize,
    assignment: &mut Vec<Option<usize>>,
    used_host: &mut BTreeSet<usize>,
    results: &mut Vec<Vec<usize>>,
) {
    if k == pattern.boxes().len() {
        results.push(assignment.iter().map(|a| a.unwrap()).collect());
        return;
    }
    'hosts: for hb in 0..host.boxes().len() {
        if used_host.contains(&hb) {
            continue;
        }
        if host.boxes()[hb].kind != pattern.boxes()[k].kind {
            continue;
        }
        // Wiring consistency with already-assigned pattern boxes.
        let pid = &pattern.boxes()[k].id;
        let hid = &host.boxes()[hb].id;
        let (dom, cod) = pattern.kind_interface(&pattern.boxes()[k].kind);
        for p in 0..dom.len() {
            let pw = pattern.wire_to(&WireDst::Box(pid.clone(), p)).unwrap();
            let hw = host.wire_to(&WireDst::Box(hid.clone(), p)).unwrap();
            match &pw.src {
                WireSrc::Box(pa, q) => {
                    let pai = pattern.boxes().iter().position(|b| &b.id == pa).unwrap();
                    match (&hw.src, assignment[pai]) {
                        (WireSrc::Box(ha, hq), Some(expect)) => {
                            if hq != q || host.boxes()[expect].id != *ha {
                                continue 'hosts;
                            }
                        }
                        (WireSrc::Box(_, hq), None) => {
                            if hq != q {
                                continue 'hosts;
                            }
                            // Deferred: checked when pa gets assigned.
                        }
                        _ => continue 'hosts,
                    }
                }
                WireSrc::Input(_) => {
                    // Boundary wire: host side must come from outside the
                    // matched region; checked in finalize.
                }
            }
        }
        for q in 0..cod.len() {
            let pw = pattern.wire_from(&WireSrc::Box(pid.clone(), q)).unwrap();
            let hw = host.wire_from(&WireSrc::Box(hid.clone(), q)).unwrap();
            match &pw.dst {
                WireDst::Box(pb, p) => {
                    let pbi = pattern.boxes().iter().position(|b| &b.id == pb).unwrap();
                    match (&hw.dst, assignment[pbi]) {
                        (WireDst::Box(hbid, hp), Some(expect)) => {
                            if hp != p || host.boxes()[expect].id != *hbid {
                                continue 'hosts;
                            }
                        }
                        (WireDst::Box(_, hp), None) => {
                            if hp != p {
                                continue 'hosts;
                            }
                        }
                        _ => continue 'hosts,
                    }
                }
                WireDst::Output(_) => {}
            }
        }
        assignment[k] = Some(hb);
        used_host.insert(hb);
        extend_match(host, pattern, k + 1, assignment, used_host, results);
        used_host.remove(&hb);
        assignment[k] = None;
    }
}

/// Boundary and convexity checks; builds the final match.
fn finalize_match(
    host: &Diagram,
    pattern: &Diagram,
    assign: &[usize],
    direction: Direction,
) -> Option<Match> {
    let region: BTreeSet<BoxId> = assign
        .iter()
        .map(|&hb| host.boxes()[hb].id.clone())
        .collect();
    let host_id = |pi: usize| host.boxes()[assign[pi]].id.clone();
    let p_index: BTreeMap<&str, usize> = pattern
        .boxes()
        .iter()
        .enumerate()
        .map(|(i, b)| (b.id.as_str(), i))
        .collect();

    // Pattern boundary wires map to host wires crossing the region.
    let mut in_wires = Vec::with_capacity(pattern.input_vars().len());
    for i in 0..pattern.input_vars().len() {
        let pw = pattern.wire_from(&WireSrc::Input(i))?;
        let WireDst::Box(pb, p) = &pw.dst else {
            return None;
        };
        let hid = host_id(p_index[pb.as_str()]);
        let wi = host
            .wires()
            .iter()
            .position(|w| w.dst == WireDst::Box(hid.clone(), *p))?;
        // Crossing wire must originate outside the region.
        match &host.wires()[wi].src {
            WireSrc::Box(src_id, _) if region.contains(src_id) => return None,
            _ => {}
        }
        in_wires.push(wi);
    }
    let mut out_wires = Vec::with_capacity(pattern.output_vars().len());
    for j in 0..pattern.output_vars().len() {
        let pw = pattern.wire_to(&WireDst::Output(j))?;
        let WireSrc::Box(pb, q) = &pw.src else {
            return None;
        };
        let hid = host_id(p_index[pb.as_str()]);
        let wi = host
            .wires()
            .iter()
            .position(|w| w.src == WireSrc::Box(hid.clone(), *q))?;
        match &host.wires()[wi].dst {
            WireDst::Box(dst_id, _) if region.contains(dst_id) => return None,
            _ => {}
        }
        out_wires.push(wi);
    }

    // Convexity: no directed host path may leave the region and re-enter.
    if !convex(host, &region) {
        return None;
    }

    let box_map = pattern
        .boxes()
        .iter()
        .enumerate()
        .map(|(pi, b)| (b.id.clone(), host_id(pi)))
        .collect();
    Some(Match {
        direction,
        box_map,
        in_wires,
        out_wires,
    })
}

fn convex(host: &Diagram, region: &BTreeSet<BoxId>) -> bool {
    // From every wire leaving the region into an outside box, walk forward;
    // reaching the region again breaks convexity.
    let mut outside_seeds: Vec<BoxId> = Vec::new();
    for w in host.wires() {
        if let (WireSrc::Box(src, _), WireDst::Box(dst, _)) = (&w.src, &w.dst) {
            if region.contains(src) && !region.contains(dst) {
                outside_seeds.push(dst.clone());
            }
        }
    }
    let mut seen: BTreeSet<BoxId> = BTreeSet::new();
    let mut queue: VecDeque<BoxId> = outside_seeds.into();
    while let Some(id) = queue.pop_front() {
        if !seen.insert(id.clone()) {
            continue;
        }
        let b = host.box_by_id(&id).expect("validated host");
        let (_, cod) = host.kind_interface(&b.kind);
        for q in 0..cod.len() {
            if let Some(w) = host.wire_from(&WireSrc::Box(id.clone(), q)) {
                if let WireDst::Box(next, _) = &w.dst {
                    if region.contains(next) {
                        return false;
                    }
                    queue.push_back(next.clone());
                }
            }
        }
    }
    true
}

/// Applies a rule at a match: the matched side is excised, the other side
/// spliced in. Fails on stale matches.
pub fn apply_rule(host: &Diagram, rule: &RewriteRule, m: &Match) -> Result<Diagram, RewriteError> {
    let (pattern, replacement) = match m.direction {
        Direction::Forward => (&rule.lhs, &rule.rhs),
        Direction::Backward => (&rule.rhs, &rule.lhs),
    };
    // Stale-match detection: the embedding must still hold.
    for (pid, hid) in &m.box_map {
        let pb = pattern.box_by_id(pid).ok_or(RewriteError::InvalidMatch)?;
        let hb = host.box_by_id(hid).ok_or(RewriteError::InvalidMatch)?;
        if pb.kind != hb.kind {
            return Err(RewriteError::InvalidMatch);
        }
    }
    if m.in_wires.iter().any(|&w| w >= host.wires().len())
        || m.out_wires.iter().any(|&w| w >= host.wires().len())
    {
        return Err(RewriteError::InvalidMatch);
    }
    let region: BTreeSet<BoxId> = m.box_map.values().cloned().collect();
    splice_region(host, &region, &m.in_wires, &m.out_wires, replacement)
        .map_err(|_| RewriteError::InvalidMatch)
}

/// Accumulated ε bound of a proof.
#[derive(Debug, Clone, PartialEq)]
pub enum EpsBound {
    Total(f64),
    /// ε accounting is only additive in the stochastic-channel regime.
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct ProofStep {
    pub rule: String,
    pub direction: Direction,
    /// Host box ids the rule matched, in pattern order.
    pub site: Vec<BoxId>,
    pub epsilon: f64,
    /// The diagram reached after this step is fully interpreted.
    pub interpreted: bool,
}

#[derive(Debug, Clone)]
pub struct RewriteProof {
    pub start: Diagram,
    pub end: Diagram,
    pub steps: Vec<ProofStep>,
    /// Every diagram along the proof: start, intermediates, end.
    pub diagrams: Vec<Diagram>,
    /// The rules used, for explanation validation.
    pub rules_used: Vec<RewriteRule>,
    pub epsilon_total: EpsBound,
    pub all_interpreted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProveOutcome {
    Proved(RewriteProofSummary),
    Failure(ProveFailure),
}

/// Cheap summary for matching on outcomes; the full proof travels alongside.
#[derive(Debug, Clone, PartialEq)]
pub struct RewriteProofSummary {
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProveFailure {
    /// Search space exhausted without reaching the goal.
    NoneFound,
    /// Depth budget hit while candidates remained.
    BudgetExhausted,
}

#[derive(Debug, Clone, Copy)]
pub struct ProveOptions {
    /// Maximum proof length (search depth).
    pub budget: usize,
    /// Allow applying rules right-to-left.
    pub allow_reverse: bool,
    /// Safety cap on explored diagrams.
    pub max_nodes: usize,
}

impl Default for ProveOptions {
    fn default() -> Self {
        ProveOptions {
            budget: 32,
            allow_reverse: false,
            max_nodes: 20_000,
        }
    }
}

/// Bounded breadth-first proof search. Deterministic given rule order and
/// options: rules are tried in order, forward before backward, matches in
/// canonical order, frontier FIFO with iso-deduplication.
pub fn prove(
    binding: &ModelBinding,
    interp: &Interpretation,
    start: &Diagram,
    goal: &Diagram,
    rules: &[RewriteRule],
    options: ProveOptions,
) -> Result<Result<RewriteProof, ProveFailure>, RewriteError> {
    for r in rules {
        if !r.usable_in_proofs() {
            return Err(RewriteError::RuleNotVerified(r.name.clone()));
        }
    }
    type Path = Vec<(usize, Match)>;
    let mut visited: Vec<Diagram> = vec![start.clone()];
    let mut frontier: VecDeque<(Diagram, Path, usize)> = VecDeque::new();
    frontier.push_back((start.clone(), Vec::new(), 0));
    let mut truncated = false;

    while let Some((current, path, depth)) = frontier.pop_front() {
        if current.iso_equal(goal) {
            return Ok(Ok(assemble_proof(
                binding, interp, start, rules, &path,
            )?));
        }
        if depth >= options.budget {
            truncated = true;
            continue;
        }
        for (ri, rule) in rules.iter().enumerate() {
            let mut directions = vec![Direction::Forward];
            if options.allow_reverse {
                directions.push(Direction::Backward);
            }
            for dir in directions {
                for m in find_matches(&current, rule, dir) {
                    let next = match apply_rule(&current, rule, &m) {
                        Ok(d) => d,
                        Err(RewriteError::InvalidMatch) => continue,
                        Err(e) => return Err(e),
                    };
                    if visited.iter().any(|v| v.iso_equal(&next)) {
                        continue;
                    }
                    if visited.len() >= options.max_nodes {
                        truncated = true;
                        continue;
                    }
                    visited.push(next.clone());
                    let mut new_path = path.clone();
                    new_path.push((ri, m));
                    frontier.push_back((next, new_path, depth + 1));
                }
            }
        }
    }
    Ok(Err(if truncated {
        ProveFailure::BudgetExhausted
    } else {
        ProveFailure::NoneFound
    }))
}

fn assemble_proof(
    binding: &ModelBinding,
    interp: &Interpretation,
    start: &Diagram,
    rules: &[RewriteRule],
    path: &[(usize, Match)],
) -> Result<RewriteProof, RewriteError> {
    let mut diagrams = vec![start.clone()];
    let mut steps = Vec::new();
    let mut used: BTreeMap<usize, ()> = BTreeMap::new();
    let mut current = start.clone();
    for (ri, m) in path {
        let rule = &rules[*ri];
        current = apply_rule(&current, rule, m)?;
        used.insert(*ri, ());
        steps.push(ProofStep {
            rule: rule.name.clone(),
            direction: m.direction,
            site: m.box_map.values().cloned().collect(),
            epsilon: rule.epsilon,
            interpreted: is_interpreted_diagram(interp, &current),
        });
        diagrams.push(current.clone());
    }
    let rules_used: Vec<RewriteRule> = used.keys().map(|&ri| rules[ri].clone()).collect();
    let all_interpreted = diagrams
        .iter()
        .all(|d| is_interpreted_diagram(interp, d))
        && rules_used.iter().all(|r| {
            is_interpreted_diagram(interp, &r.lhs) && is_interpreted_diagram(interp, &r.rhs)
        });
    let epsilon_total = epsilon_bound(binding, &diagrams, &rules_used, &steps);
    Ok(RewriteProof {
        start: start.clone(),
        end: current,
        steps,
        diagrams,
        rules_used,
        epsilon_total,
        all_interpreted,
    })
}

/// Additive ε bound: exact when all step ε are zero; Σ ε under the
/// stochastic backend when every box in every diagram (and rule side) is a
/// channel, so that contexts are nonexpansive under the column-ℓ1 norm;
/// otherwise unbounded.
fn epsilon_bound(
    binding: &ModelBinding,
    diagrams: &[Diagram],
    rules_used: &[RewriteRule],
    steps: &[ProofStep],
) -> EpsBound {
    let total: f64 = steps.iter().map(|s| s.epsilon).sum();
    if total == 0.0 {
        return EpsBound::Total(0.0);
    }
    if binding.backend() != Backend::Stoch {
        return EpsBound::Unbounded;
    }
    let all_channel = |d: &Diagram| {
        d.boxes().iter().all(|b| match &b.kind {
            BoxKind::Gen(g) => d
                .signature()
                .generator(g)
                .map(|gen| gen.flags.is_channel)
                .unwrap_or(false),
            _ => true,
        })
    };
    let ok = diagrams.iter().all(&all_channel)
        && rules_used
            .iter()
            .all(|r| all_channel(&r.lhs) && all_channel(&r.rhs));
    if ok {
        EpsBound::Total(total)
    } else {
        EpsBound::Unbounded
    }
}

/// An explanation (not a mere trace): every diagram in the proof, including
/// every used rule side, is a fully interpreted diagram.
pub fn validate_explanation(interp: &Interpretation, proof: &RewriteProof) -> bool {
    proof
        .diagrams
        .iter()
        .all(|d| is_interpreted_diagram(interp, d))
        && proof.rules_used.iter().all(|r| {
            is_interpreted_diagram(interp, &r.lhs) && is_interpreted_diagram(interp, &r.rhs)
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::bind_model;
    use crate::semantics::{FnTable, ObjectSem};
    use crate::signature::{build_signature, Generator, Language, Variable};
    use std::collections::BTreeMap;

    fn bools() -> ObjectSem {
        ObjectSem::FinSet(vec!["f".into(), "t".into()])
    }

    fn logic_model() -> ModelBinding {
        let vars = vec![Variable::new("B")];
        let gens = vec![
            Generator::deterministic("and", vec!["B".into(), "B".into()], vec!["B".into()]),
            Generator::deterministic("not", vec!["B".into()], vec!["B".into()]),
            Generator::sharp_state("tt", "B"),
            Generator::sharp_state("ff", "B"),
        ];
        let sig = build_signature(vars, gens, Language::Cd).unwrap();
        let b = bools();
        let mut objects = BTreeMap::new();
        objects.insert("B".to_string(), b.clone());
        let mut morphs = BTreeMap::new();
        morphs.insert(
            "and".to_string(),
            MorphSem::FnTable(FnTable::from_fn(
                vec![b.clone(), b.clone()],
                vec![b.clone()],
                |xs| vec![xs[0] & xs[1]],
            )),
        );
        morphs.insert(
            "not".to_string(),
            MorphSem::FnTable(FnTable::from_fn(vec![b.clone()], vec![b.clone()], |xs| {
                vec![1 - xs[0]]
            })),
        );
        morphs.insert("tt".to_string(), MorphSem::FnTable(FnTable::point(&b, 1)));
        morphs.insert("ff".to_string(), MorphSem::FnTable(FnTable::point(&b, 0)));
        bind_model(&sig, Backend::FinFn, objects, morphs, BTreeMap::new()).unwrap()
    }

    fn full_interp(b: &ModelBinding) -> Interpretation {
        let mut i = Interpretation::new(b);
        i.set_var_term("B", "truth value");
        for g in ["and", "not", "tt", "ff"] {
            i.set_gen_term_concrete(g, format!("op {g}"));
        }
        i
    }

    #[test]
    fn identity_rule_has_distance_zero() {
        let b = logic_model();
        let sig = b.signature().clone();
        let d = Diagram::from_generator(&sig, "not").unwrap();
        let rule = RewriteRule::new("id", d.clone(), d, 0.0).unwrap();
        let v = verify_rule(&b, &rule).unwrap();
        assert_eq!(v.status, RuleStatus::Verified(0.0));
    }

    #[test]
    fn epsilon_exceeded_reported() {
        let b = logic_model();
        let sig = b.signature().clone();
        let tt = Diagram::from_generator(&sig, "tt").unwrap();
        let ff = Diagram::from_generator(&sig, "ff").unwrap();
        let rule = RewriteRule::new("wrong", tt, ff, 0.5).unwrap();
        assert!(matches!(
            verify_rule(&b, &rule),
            Err(RewriteError::EpsilonExceeded { .. })
        ));
    }

    #[test]
    fn eval_rule_and_on_true_true() {
        let b = logic_model();
        let rule = make_eval_rule(&b, "and", &["tt".into(), "tt".into()]).unwrap();
        assert_eq!(rule.status, RuleStatus::Evaluation);
        // rhs is the sharp `tt` state.
        let sig = b.signature().clone();
        let tt = Diagram::from_generator(&sig, "tt").unwrap();
        assert!(rule.rhs.iso_equal(&tt));
    }

    #[test]
    fn find_matches_counts_occurrences() {
        let b = logic_model();
        let sig = b.signature().clone();
        let not1 = Diagram::from_generator(&sig, "not").unwrap();
        let host = not1.compose_seq(&not1).unwrap();
        let rule = RewriteRule::new("n", not1.clone(), not1.clone(), 0.0).unwrap();
        let ms = find_matches(&host, &rule, Direction::Forward);
        assert_eq!(ms.len(), 2);
        // A pattern larger than the host has no matches.
        let big = not1
            .compose_seq(&not1)
            .unwrap()
            .compose_seq(&not1)
            .unwrap();
        let rule_big = RewriteRule::new("nnn", big.clone(), big, 0.0).unwrap();
        assert!(find_matches(&not1, &rule_big, Direction::Forward).is_empty());
    }

    #[test]
    fn non_convex_candidate_excluded() {
        // Host chain not;not;not. Pattern not ⊗ not could only embed as the
        // outer pair {first, third}, whose connecting path exits and
        // re-enters the region.
        let b = logic_model();
        let sig = b.signature().clone();
        let not1 = Diagram::from_generator(&sig, "not").unwrap();
        let host = not1
            .compose_seq(&not1)
            .unwrap()
            .compose_seq(&not1)
            .unwrap();
        let par = not1.compose_par(&not1).unwrap();
        let rule = RewriteRule::new("par", par.clone(), par, 0.0).unwrap();
        assert!(find_matches(&host, &rule, Direction::Forward).is_empty());
    }

    #[test]
    fn apply_identity_rule_round_trips() {
        let b = logic_model();
        let sig = b.signature().clone();
        let not1 = Diagram::from_generator(&sig, "not").unwrap();
        let host = not1.compose_seq(&not1).unwrap();
        let rule = RewriteRule::new("n", not1.clone(), not1, 0.0).unwrap();
        let ms = find_matches(&host, &rule, Direction::Forward);
        let out = apply_rule(&host, &rule, &ms[0]).unwrap();
        assert!(out.iso_equal(&host));
    }

    #[test]
    fn stale_match_detected() {
        let b = logic_model();
        let sig = b.signature().clone();
        let not1 = Diagram::from_generator(&sig, "not").unwrap();
        let host = not1.compose_seq(&not1).unwrap();
        // not;not -> identity wire rule.
        let id = Diagram::identity(&sig, &["B".into()]);
        let nn = not1.compose_seq(&not1).unwrap();
        let rule = RewriteRule::new("inv", nn, id, 0.0).unwrap();
        let ms = find_matches(&host, &rule, Direction::Forward);
        assert_eq!(ms.len(), 1);
        let rewritten = apply_rule(&host, &rule, &ms[0]).unwrap();
        // The old match no longer applies to the rewritten diagram.
        assert!(matches!(
            apply_rule(&rewritten, &rule, &ms[0]),
            Err(RewriteError::InvalidMatch)
        ));
    }

    #[test]
    fn prove_trivial_and_small_chain() {
        let b = logic_model();
        let i = full_interp(&b);
        let sig = b.signature().clone();
        let tt = Diagram::from_generator(&sig, "tt").unwrap();
        // start == goal: empty proof.
        let out = prove(&b, &i, &tt, &tt, &[], ProveOptions::default())
            .unwrap()
            .unwrap();
        assert!(out.steps.is_empty());
        assert!(out.all_interpreted);
        assert_eq!(out.epsilon_total, EpsBound::Total(0.0));

        // and(tt, tt) rewrites to tt via the evaluation rule.
        let and_rule = make_eval_rule(&b, "and", &["tt".into(), "tt".into()]).unwrap();
        let start = tt
            .compose_par(&tt)
            .unwrap()
            .compose_seq(&Diagram::from_generator(&sig, "and").unwrap())
            .unwrap();
        let proof = prove(&b, &i, &start, &tt, &[and_rule], ProveOptions::default())
            .unwrap()
            .unwrap();
        assert_eq!(proof.steps.len(), 1);
        assert!(proof.all_interpreted);
        assert!(validate_explanation(&i, &proof));

        // Removing one concrete entry invalidates the explanation.
        let mut weaker = full_interp(&b);
        let g = b.signature().generator("and").unwrap().clone();
        weaker
            .con
            .remove(&(g.dom.clone(), g.cod.clone(), b.morph("and").unwrap().canonical_key()));
        assert!(!validate_explanation(&weaker, &proof));
    }

    #[test]
    fn prove_failure_when_no_rules_match() {
        let b = logic_model();
        let i = full_interp(&b);
        let sig = b.signature().clone();
        let tt = Diagram::from_generator(&sig, "tt").unwrap();
        let ff = Diagram::from_generator(&sig, "ff").unwrap();
        let out = prove(&b, &i, &tt, &ff, &[], ProveOptions::default()).unwrap();
        assert_eq!(out.unwrap_err(), ProveFailure::NoneFound);
    }

    #[test]
    fn unverified_rules_rejected_in_proofs() {
        let b = logic_model();
        let i = full_interp(&b);
        let sig = b.signature().clone();
        let tt = Diagram::from_generator(&sig, "tt").unwrap();
        let rule = RewriteRule::new("asserted", tt.clone(), tt.clone(), 0.0).unwrap();
        assert!(matches!(
            prove(&b, &i, &tt, &tt, &[rule], ProveOptions::default()),
            Err(RewriteError::RuleNotVerified(_))
        ));
    }
}
