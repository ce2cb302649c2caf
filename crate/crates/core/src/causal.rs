//! Causal models: network diagrams, interventions, conditioning and
//! parallel-worlds counterfactuals.
//!
//! A network diagram is a string diagram built from single-output channel
//! boxes, copies and discards; an open causal model binds one in a finite
//! classical backend. Interventions are meta-operations that swap mechanisms
//! and resynthesize the network; counterfactuals copy the exogenous state of
//! an FCM into several intervened worlds, then condition on observations.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::diagram::{BoxId, BoxKind, Diagram, DiagramBuilder, WireDst, WireSrc};
use crate::model::{bind_model, ModelBinding, ModelError};
use crate::semantics::{
    flat_size, unflat_index, Backend, MorphSem, ObjectSem, SemanticsError, StateSem, StochMatrix,
};
use crate::signature::{
    build_signature, GenFlags, GenName, Generator, Signature, SignatureError, VarName,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CausalError {
    #[error("box `{0}` has more than one output")]
    MultiOutputBox(BoxId),
    #[error("label `{0}` produced more than once")]
    DuplicateLabel(VarName),
    #[error("mechanism `{0}` is not channel-flagged")]
    NonChannelMechanism(GenName),
    #[error("`{0}` is not an intervenable variable of this model")]
    NotAVariable(VarName),
    #[error("state for `{var}` is not sharp: {detail}")]
    NotSharp { var: VarName, detail: String },
    #[error("`{value}` is not a value of `{var}`")]
    BadValue { var: VarName, value: String },
    #[error("intervention would introduce a causal cycle")]
    CycleIntroduced,
    #[error("replacement mechanism `{0}` is not a channel")]
    NotChannel(GenName),
    #[error("conditioning value `{0}` has zero probability")]
    ZeroSupport(String),
    #[error("observation {var}={value} in world {world} has zero probability")]
    ZeroSupportObservation {
        world: usize,
        var: VarName,
        value: String,
    },
    #[error("invalid world specification: {0}")]
    InvalidWorldSpec(String),
    #[error("operation requires a finite classical backend, got {0}")]
    UnsupportedBackend(Backend),
    #[error("invalid network: {0}")]
    InvalidNetwork(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
    #[error(transparent)]
    Signature(#[from] SignatureError),
}

/// A validated network diagram: the causal structure.
#[derive(Debug, Clone)]
pub struct NetworkDiagram {
    pub diagram: Diagram,
    /// Producing generator box per non-input variable.
    pub mechanism_of: BTreeMap<VarName, BoxId>,
    pub inputs: Vec<VarName>,
    pub outputs: Vec<VarName>,
}

/// Checks that a diagram is a network diagram: single-output channel boxes,
/// copies and discards, with each label produced exactly once.
pub fn validate_network(d: &Diagram) -> Result<NetworkDiagram, CausalError> {
    let violations = d.validate();
    if !violations.is_empty() {
        return Err(CausalError::InvalidNetwork(violations[0].to_string()));
    }
    let sig = d.signature();
    let mut produced: BTreeSet<VarName> = BTreeSet::new();
    for v in d.input_vars() {
        if !produced.insert(v.clone()) {
            return Err(CausalError::DuplicateLabel(v.clone()));
        }
    }
    let mut mechanism_of = BTreeMap::new();
    for b in d.boxes() {
        match &b.kind {
            BoxKind::Gen(g) => {
                let gen = sig
                    .generator(g)
                    .ok_or_else(|| CausalError::InvalidNetwork(format!("unknown generator {g}")))?;
                if gen.cod.len() != 1 {
                    return Err(CausalError::MultiOutputBox(b.id.clone()));
                }
                if !gen.flags.is_channel {
                    return Err(CausalError::NonChannelMechanism(g.clone()));
                }
                let mut seen_inputs = BTreeSet::new();
                for v in &gen.dom {
                    if !seen_inputs.insert(v.clone()) {
                        return Err(CausalError::DuplicateLabel(v.clone()));
                    }
                }
                let out = gen.cod[0].clone();
                if !produced.insert(out.clone()) {
                    return Err(CausalError::DuplicateLabel(out));
                }
                mechanism_of.insert(out, b.id.clone());
            }
            BoxKind::Copy { .. } | BoxKind::Discard { .. } | BoxKind::Swap { .. } => {}
        }
    }
    Ok(NetworkDiagram {
        diagram: d.clone(),
        mechanism_of,
        inputs: d.input_vars().to_vec(),
        outputs: d.output_vars().to_vec(),
    })
}

/// A compositional model of a network diagram in a finite classical backend.
#[derive(Debug, Clone)]
pub struct OpenCausalModel {
    pub binding: ModelBinding,
    pub network: NetworkDiagram,
}

/// Mechanism table: the synthesizable core of an open causal model.
#[derive(Debug, Clone)]
pub struct MechSpec {
    pub var: VarName,
    pub gen: GenName,
}

impl OpenCausalModel {
    pub fn new(binding: ModelBinding, diagram: &Diagram) -> Result<OpenCausalModel, CausalError> {
        if !matches!(binding.backend(), Backend::FinFn | Backend::Stoch) {
            return Err(CausalError::UnsupportedBackend(binding.backend()));
        }
        let network = validate_network(diagram)?;
        Ok(OpenCausalModel { binding, network })
    }

    /// Builds the model from a mechanism table, synthesizing the network
    /// diagram (copies for fanout, discards for unused variables).
    pub fn from_mechanisms(
        binding: ModelBinding,
        mechs: &[MechSpec],
        inputs: &[VarName],
        outputs: &[VarName],
    ) -> Result<OpenCausalModel, CausalError> {
        let diagram = synthesize_network(binding.signature(), mechs, inputs, outputs)?;
        OpenCausalModel::new(binding, &diagram)
    }

    /// Mechanism table recovered from the network, in the diagram's box
    /// order, so that resynthesis reproduces the same structure.
    pub fn mechanisms(&self) -> Vec<MechSpec> {
        self.network
            .diagram
            .boxes()
            .iter()
            .filter_map(|b| match &b.kind {
                BoxKind::Gen(g) => {
                    let gen = self.binding.signature().generator(g)?;
                    Some(MechSpec {
                        var: gen.cod[0].clone(),
                        gen: g.clone(),
                    })
                }
                _ => None,
            })
            .collect()
    }

    /// Parent variables of a mechanism.
    pub fn parents(&self, var: &str) -> Option<Vec<VarName>> {
        let box_id = self.network.mechanism_of.get(var)?;
        let b = self.network.diagram.box_by_id(box_id)?;
        let BoxKind::Gen(g) = &b.kind else { return None };
        self.binding
            .signature()
            .generator(g)
            .map(|gen| gen.dom.clone())
    }

    /// Overall channel (or state) the model denotes.
    pub fn semantics(&self) -> Result<MorphSem, CausalError> {
        Ok(self.binding.eval(&self.network.diagram)?)
    }

    /// Replaces the mechanisms of `assignments` by sharp states, discarding
    /// the former parents.
    pub fn do_intervention(
        &self,
        assignments: &BTreeMap<VarName, String>,
    ) -> Result<OpenCausalModel, CausalError> {
        let mut replacements = BTreeMap::new();
        for (var, value) in assignments {
            if !self.network.mechanism_of.contains_key(var) {
                return Err(CausalError::NotAVariable(var.clone()));
            }
            let obj = self
                .binding
                .object(var)
                .ok_or_else(|| CausalError::NotAVariable(var.clone()))?;
            let idx = obj.element_index(value).ok_or_else(|| CausalError::BadValue {
                var: var.clone(),
                value: value.clone(),
            })?;
            let gen_name = fresh_gen_name(self.binding.signature(), &format!("do_{var}"));
            let gen = Generator::new(gen_name.clone(), vec![], vec![var.clone()], GenFlags::SHARP);
            let morph = crate::interpret::sharp_state_sem(self.binding.backend(), obj, idx);
            replacements.insert(var.clone(), (gen, morph));
        }
        self.replace_mechanisms(replacements)
    }

    /// General intervention: swap in a new mechanism with possibly different
    /// parents, rejecting cyclic rewirings.
    pub fn intervene_general(
        &self,
        var: &str,
        new_gen: Generator,
        new_morph: MorphSem,
    ) -> Result<OpenCausalModel, CausalError> {
        if !self.network.mechanism_of.contains_key(var) {
            return Err(CausalError::NotAVariable(var.to_string()));
        }
        if new_gen.cod != vec![var.to_string()] {
            return Err(CausalError::InvalidNetwork(format!(
                "replacement mechanism must output `{var}`"
            )));
        }
        if !new_gen.flags.is_channel || !new_morph.is_channel() {
            return Err(CausalError::NotChannel(new_gen.name.clone()));
        }
        let mut replacements = BTreeMap::new();
        replacements.insert(var.to_string(), (new_gen, new_morph));
        self.replace_mechanisms(replacements)
    }

    fn replace_mechanisms(
        &self,
        replacements: BTreeMap<VarName, (Generator, MorphSem)>,
    ) -> Result<OpenCausalModel, CausalError> {
        let sig = self.binding.signature();
        let old_mechs = self.mechanisms();
        let replaced_gens: BTreeSet<GenName> = old_mechs
            .iter()
            .filter(|m| replacements.contains_key(&m.var))
            .map(|m| m.gen.clone())
            .collect();

        let mut generators: Vec<Generator> = sig
            .generators()
            .iter()
            .filter(|g| !replaced_gens.contains(&g.name))
            .cloned()
            .collect();
        let mut morphs: BTreeMap<GenName, MorphSem> = self
            .binding
            .morphisms()
            .iter()
            .filter(|(name, _)| !replaced_gens.contains(*name))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        for (gen, morph) in replacements.values() {
            generators.push(gen.clone());
            morphs.insert(gen.name.clone(), morph.clone());
        }
        let new_sig = build_signature(sig.variables().to_vec(), generators, sig.language())?;
        let binding = bind_model(
            &new_sig,
            self.binding.backend(),
            self.binding.objects().clone(),
            morphs,
            BTreeMap::new(),
        )?;
        let mechs: Vec<MechSpec> = old_mechs
            .iter()
            .map(|m| match replacements.get(&m.var) {
                Some((gen, _)) => MechSpec {
                    var: m.var.clone(),
                    gen: gen.name.clone(),
                },
                None => m.clone(),
            })
            .collect();
        // Cycle detection happens in diagram/network validation.
        let as_cycle = |e: CausalError| match e {
            CausalError::InvalidNetwork(msg) if msg.contains("cycle") => {
                CausalError::CycleIntroduced
            }
            other => other,
        };
        let diagram = synthesize_network(
            &new_sig,
            &mechs,
            &self.network.inputs,
            &self.network.outputs,
        )
        .map_err(as_cycle)?;
        OpenCausalModel::new(binding, &diagram).map_err(as_cycle)
    }

    /// Drops the mechanisms of `vars`, turning them into model inputs;
    /// `do(X=x)` is `open_at({X})` followed by feeding `x`.
    pub fn open_at(&self, vars: &BTreeSet<VarName>) -> Result<OpenCausalModel, CausalError> {
        for v in vars {
            if !self.network.mechanism_of.contains_key(v) {
                return Err(CausalError::NotAVariable(v.clone()));
            }
        }
        if vars.is_empty() {
            return Ok(self.clone());
        }
        let sig = self.binding.signature();
        let dropped_gens: BTreeSet<GenName> = self
            .mechanisms()
            .iter()
            .filter(|m| vars.contains(&m.var))
            .map(|m| m.gen.clone())
            .collect();
        let generators: Vec<Generator> = sig
            .generators()
            .iter()
            .filter(|g| !dropped_gens.contains(&g.name))
            .cloned()
            .collect();
        let morphs: BTreeMap<GenName, MorphSem> = self
            .binding
            .morphisms()
            .iter()
            .filter(|(name, _)| !dropped_gens.contains(*name))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        let new_sig = build_signature(sig.variables().to_vec(), generators, sig.language())?;
        let binding = bind_model(
            &new_sig,
            self.binding.backend(),
            self.binding.objects().clone(),
            morphs,
            BTreeMap::new(),
        )?;
        let mechs: Vec<MechSpec> = self
            .mechanisms()
            .into_iter()
            .filter(|m| !vars.contains(&m.var))
            .collect();
        let mut inputs = self.network.inputs.clone();
        inputs.extend(vars.iter().cloned());
        OpenCausalModel::from_mechanisms(binding, &mechs, &inputs, &self.network.outputs)
    }
}

/// Synthesizes the network diagram of a mechanism table: mechanisms in list
/// order, copies for fanout, discards for produced-but-unused variables.
pub fn synthesize_network(
    sig: &Signature,
    mechs: &[MechSpec],
    inputs: &[VarName],
    outputs: &[VarName],
) -> Result<Diagram, CausalError> {
    #[derive(Clone)]
    enum Consumer {
        Mech(usize, usize), // mechanism index, input port
        Out(usize),
    }

    let mut builder = DiagramBuilder::new(sig);
    let mut consumers: BTreeMap<VarName, Vec<Consumer>> = BTreeMap::new();
    for (mi, m) in mechs.iter().enumerate() {
        let gen = sig
            .generator(&m.gen)
            .ok_or_else(|| CausalError::InvalidNetwork(format!("unknown generator {}", m.gen)))?;
        if gen.cod != vec![m.var.clone()] {
            return Err(CausalError::InvalidNetwork(format!(
                "mechanism `{}` does not output `{}`",
                m.gen, m.var
            )));
        }
        for (p, parent) in gen.dom.iter().enumerate() {
            consumers
                .entry(parent.clone())
                .or_default()
                .push(Consumer::Mech(mi, p));
        }
    }
    for (oi, v) in outputs.iter().enumerate() {
        consumers.entry(v.clone()).or_default().push(Consumer::Out(oi));
    }

    let mech_boxes: Vec<BoxId> = mechs.iter().map(|m| builder.add_gen(&m.gen)).collect();
    for v in outputs {
        builder.add_output(v.clone());
    }

    // Producers: inputs then mechanisms.
    let mut route = |src: WireSrc, var: &VarName, builder: &mut DiagramBuilder| {
        let cons = consumers.remove(var).unwrap_or_default();
        let targets: Vec<WireDst> = cons
            .iter()
            .map(|c| match c {
                Consumer::Mech(mi, p) => WireDst::Box(mech_boxes[*mi].clone(), *p),
                Consumer::Out(oi) => WireDst::Output(*oi),
            })
            .collect();
        match targets.len() {
            0 => {
                let d = builder.add_box(BoxKind::Discard { var: var.clone() });
                builder.connect(src, WireDst::Box(d, 0), var.clone());
            }
            1 => {
                builder.connect(src, targets.into_iter().next().unwrap(), var.clone());
            }
            n => {
                let c = builder.add_box(BoxKind::Copy {
                    var: var.clone(),
                    n,
                });
                builder.connect(src, WireDst::Box(c.clone(), 0), var.clone());
                for (k, t) in targets.into_iter().enumerate() {
                    builder.connect(WireSrc::Box(c.clone(), k), t, var.clone());
                }
            }
        }
    };

    let mut produced = BTreeSet::new();
    for (i, v) in inputs.iter().enumerate() {
        if !produced.insert(v.clone()) {
            return Err(CausalError::DuplicateLabel(v.clone()));
        }
        builder.add_input(v.clone());
        route(WireSrc::Input(i), v, &mut builder);
    }
    for (mi, m) in mechs.iter().enumerate() {
        if !produced.insert(m.var.clone()) {
            return Err(CausalError::DuplicateLabel(m.var.clone()));
        }
        route(WireSrc::Box(mech_boxes[mi].clone(), 0), &m.var, &mut builder);
    }
    if let Some((v, _)) = consumers.iter().next() {
        return Err(CausalError::InvalidNetwork(format!(
            "variable `{v}` consumed but never produced"
        )));
    }
    builder
        .finish()
        .map_err(|e| CausalError::InvalidNetwork(e.to_string()))
}

fn fresh_gen_name(sig: &Signature, base: &str) -> GenName {
    if sig.generator(base).is_none() {
        return base.to_string();
    }
    let mut k = 2usize;
    loop {
        let candidate = format!("{base}_{k}");
        if sig.generator(&candidate).is_none() {
            return candidate;
        }
        k += 1;
    }
}

// ---------------------------------------------------------------------------
// Conditioning
// ---------------------------------------------------------------------------

/// Conditions a joint state on factor `var_index` taking value `value`:
/// P(rest, x)/P(x), dropping the conditioned factor.
pub fn condition_sharp(
    state: &StateSem,
    var_index: usize,
    value: usize,
) -> Result<StateSem, CausalError> {
    let MorphSem::Matrix(m) = state else {
        return Err(CausalError::UnsupportedBackend(state.backend()));
    };
    if !m.dom.is_empty() {
        return Err(CausalError::InvalidNetwork("not a state".into()));
    }
    if var_index >= m.cod.len() {
        return Err(CausalError::Semantics(SemanticsError::IndexOutOfRange(
            var_index,
        )));
    }
    let cod = m.cod.clone();
    let rest: Vec<ObjectSem> = cod
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != var_index)
        .map(|(_, o)| o.clone())
        .collect();
    let mut data = vec![0.0; flat_size(&rest).max(1)];
    let mut total = 0.0;
    for flat in 0..m.data.len() {
        let idx = unflat_index(&cod, flat);
        if idx[var_index] != value {
            continue;
        }
        let rest_idx: Vec<usize> = idx
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != var_index)
            .map(|(_, &x)| x)
            .collect();
        let p = m.data[flat];
        total += p;
        data[crate::semantics::flat_index(&rest, &rest_idx)] += p;
    }
    if total == 0.0 {
        let label = cod[var_index]
            .elements()
            .and_then(|e| e.get(value).cloned())
            .unwrap_or_else(|| value.to_string());
        return Err(CausalError::ZeroSupport(label));
    }
    for p in data.iter_mut() {
        *p /= total;
    }
    Ok(MorphSem::Matrix(StochMatrix::joint_state(&rest, &data)))
}

/// Conditional channel from a joint state: factors `..split` are the
/// conditioning variables X, the rest are Y. Columns with zero support are
/// left zero and flagged undefined.
#[derive(Debug, Clone)]
pub struct PartialChannel {
    pub channel: MorphSem,
    /// Per dom-point definedness.
    pub defined: Vec<bool>,
}

pub fn conditional_channel(joint: &StateSem, split: usize) -> Result<PartialChannel, CausalError> {
    let MorphSem::Matrix(m) = joint else {
        return Err(CausalError::UnsupportedBackend(joint.backend()));
    };
    if !m.dom.is_empty() || split > m.cod.len() {
        return Err(CausalError::InvalidNetwork(
            "conditional_channel expects a state and a valid split".into(),
        ));
    }
    let xs = m.cod[..split].to_vec();
    let ys = m.cod[split..].to_vec();
    let nx = flat_size(&xs);
    let ny = flat_size(&ys);
    let mut data = vec![0.0; nx * ny];
    let mut defined = vec![false; nx];
    for x in 0..nx {
        let mut total = 0.0;
        for y in 0..ny {
            total += m.data[x * ny + y];
        }
        if total > 0.0 {
            defined[x] = true;
            for y in 0..ny {
                data[y * nx + x] = m.data[x * ny + y] / total;
            }
        }
    }
    Ok(PartialChannel {
        channel: MorphSem::Matrix(StochMatrix {
            dom: xs,
            cod: ys,
            data,
        }),
        defined,
    })
}

/// Jeffrey updating: Σ_x evidence(x)·P(Y|x). Requires the evidence to be
/// supported inside the joint's X-support.
pub fn jeffrey_update(
    joint: &StateSem,
    split: usize,
    evidence: &StateSem,
) -> Result<StateSem, CausalError> {
    let (m, ev) = joint_and_evidence(joint, split, evidence)?;
    let nx = flat_size(&m.cod[..split]);
    let ny = flat_size(&m.cod[split..]);
    let mut out = vec![0.0; ny];
    for x in 0..nx {
        if ev.data[x] == 0.0 {
            continue;
        }
        let mut total = 0.0;
        for y in 0..ny {
            total += m.data[x * ny + y];
        }
        if total == 0.0 {
            let label = m.cod[..split]
                .first()
                .and_then(|o| o.elements())
                .and_then(|e| e.get(x).cloned())
                .unwrap_or_else(|| x.to_string());
            return Err(CausalError::ZeroSupport(label));
        }
        for (y, o) in out.iter_mut().enumerate() {
            *o += ev.data[x] * m.data[x * ny + y] / total;
        }
    }
    Ok(MorphSem::Matrix(StochMatrix::joint_state(
        &m.cod[split..],
        &out,
    )))
}

/// Pearl updating: normalize(Σ_x P(Y,x)·evidence(x)) — the evidence applied
/// as an effect.
pub fn pearl_update(
    joint: &StateSem,
    split: usize,
    evidence: &StateSem,
) -> Result<StateSem, CausalError> {
    let (m, ev) = joint_and_evidence(joint, split, evidence)?;
    let nx = flat_size(&m.cod[..split]);
    let ny = flat_size(&m.cod[split..]);
    let mut out = vec![0.0; ny];
    for x in 0..nx {
        for (y, o) in out.iter_mut().enumerate() {
            *o += ev.data[x] * m.data[x * ny + y];
        }
    }
    let total: f64 = out.iter().sum();
    if total == 0.0 {
        return Err(CausalError::ZeroSupport("pearl update".into()));
    }
    for p in out.iter_mut() {
        *p /= total;
    }
    Ok(MorphSem::Matrix(StochMatrix::joint_state(
        &m.cod[split..],
        &out,
    )))
}

fn joint_and_evidence<'a>(
    joint: &'a StateSem,
    split: usize,
    evidence: &'a StateSem,
) -> Result<(&'a StochMatrix, &'a StochMatrix), CausalError> {
    let MorphSem::Matrix(m) = joint else {
        return Err(CausalError::UnsupportedBackend(joint.backend()));
    };
    let MorphSem::Matrix(ev) = evidence else {
        return Err(CausalError::UnsupportedBackend(evidence.backend()));
    };
    if !m.dom.is_empty() || split > m.cod.len() {
        return Err(CausalError::InvalidNetwork("invalid joint/split".into()));
    }
    if ev.cod != m.cod[..split] {
        return Err(CausalError::InvalidNetwork(
            "evidence factors differ from the joint's conditioning factors".into(),
        ));
    }
    Ok((m, ev))
}

// ---------------------------------------------------------------------------
// Functional causal models and counterfactuals
// ---------------------------------------------------------------------------

/// An FCM: an open causal model whose variables split into parentless
/// exogenous variables with normalized state mechanisms and endogenous
/// variables with deterministic mechanisms, one exogenous input each.
#[derive(Debug, Clone)]
pub struct Fcm {
    pub base: OpenCausalModel,
    /// Exogenous variable → its state mechanism.
    pub exogenous: BTreeMap<VarName, GenName>,
    /// Endogenous variable → its deterministic mechanism.
    pub endogenous: BTreeMap<VarName, GenName>,
    /// Endogenous variable → its exogenous noise variable.
    pub noise_of: BTreeMap<VarName, VarName>,
}

impl Fcm {
    pub fn new(base: OpenCausalModel, exo_vars: &BTreeSet<VarName>) -> Result<Fcm, CausalError> {
        if !base.network.inputs.is_empty() {
            return Err(CausalError::InvalidNetwork(
                "counterfactual FCMs are closed models".into(),
            ));
        }
        let sig = base.binding.signature().clone();
        let mut exogenous = BTreeMap::new();
        let mut endogenous = BTreeMap::new();
        let mut noise_of: BTreeMap<VarName, VarName> = BTreeMap::new();
        let mut noise_used: BTreeSet<VarName> = BTreeSet::new();
        for m in base.mechanisms() {
            let gen = sig.generator(&m.gen).unwrap();
            if exo_vars.contains(&m.var) {
                if !gen.dom.is_empty() {
                    return Err(CausalError::InvalidNetwork(format!(
                        "exogenous `{}` has parents",
                        m.var
                    )));
                }
                exogenous.insert(m.var.clone(), m.gen.clone());
            } else {
                if !gen.flags.is_deterministic {
                    return Err(CausalError::InvalidNetwork(format!(
                        "endogenous mechanism `{}` is not deterministic",
                        m.gen
                    )));
                }
                let noises: Vec<&VarName> =
                    gen.dom.iter().filter(|v| exo_vars.contains(*v)).collect();
                if noises.len() != 1 {
                    return Err(CausalError::InvalidNetwork(format!(
                        "endogenous `{}` must read exactly one exogenous variable",
                        m.var
                    )));
                }
                if !noise_used.insert(noises[0].clone()) {
                    return Err(CausalError::InvalidNetwork(format!(
                        "exogenous `{}` feeds more than one variable",
                        noises[0]
                    )));
                }
                noise_of.insert(m.var.clone(), noises[0].clone());
                endogenous.insert(m.var.clone(), m.gen.clone());
            }
        }
        for u in exo_vars {
            if !exogenous.contains_key(u) {
                return Err(CausalError::NotAVariable(u.clone()));
            }
            if !noise_used.contains(u) {
                return Err(CausalError::InvalidNetwork(format!(
                    "exogenous `{u}` feeds no endogenous variable"
                )));
            }
        }
        Ok(Fcm {
            base,
            exogenous,
            endogenous,
            noise_of,
        })
    }

    /// Forgets the functional structure: each endogenous mechanism becomes
    /// the composite of its function with its noise state, yielding an open
    /// causal model over the endogenous variables only.
    pub fn forget_noise(&self) -> Result<OpenCausalModel, CausalError> {
        let sig = self.base.binding.signature();
        let backend = self.base.binding.backend();
        let mut variables = Vec::new();
        for v in sig.variables() {
            if !self.exogenous.contains_key(&v.name) {
                variables.push(v.clone());
            }
        }
        let mut generators = Vec::new();
        let mut morphs = BTreeMap::new();
        let mut mechs = Vec::new();
        for (var, genname) in &self.endogenous {
            let gen = sig.generator(genname).unwrap();
            let noise = &self.noise_of[var];
            let lambda = self.base.binding.morph(&self.exogenous[noise]).unwrap();
            // Pre-compose: identities on real parents, the noise state at
            // the noise position.
            let mut pre = MorphSem::identity(backend, &[]);
            let mut new_dom = Vec::new();
            for v in &gen.dom {
                if v == noise {
                    pre = pre.tensor(lambda)?;
                } else {
                    let obj = self.base.binding.object(v).unwrap().clone();
                    pre = pre.tensor(&MorphSem::identity(backend, &[obj]))?;
                    new_dom.push(v.clone());
                }
            }
            let composite = pre.then(self.base.binding.morph(genname).unwrap())?;
            let cname = fresh_gen_name(sig, &format!("c_{var}"));
            generators.push(Generator::channel(cname.clone(), new_dom, vec![var.clone()]));
            morphs.insert(cname.clone(), composite);
            mechs.push(MechSpec {
                var: var.clone(),
                gen: cname,
            });
        }
        let mut objects = self.base.binding.objects().clone();
        objects.retain(|v, _| !self.exogenous.contains_key(v));
        let new_sig = build_signature(variables, generators, sig.language())?;
        let binding = bind_model(&new_sig, backend, objects, morphs, BTreeMap::new())?;
        let outputs: Vec<VarName> = self
            .base
            .network
            .outputs
            .iter()
            .filter(|v| !self.exogenous.contains_key(*v))
            .cloned()
            .collect();
        OpenCausalModel::from_mechanisms(binding, &mechs, &[], &outputs)
    }
}

/// One parallel world: do-assignments, sharp observations, extra variables
/// to marginalize (everything unobserved and unqueried is dropped anyway)
/// and query outputs.
#[derive(Debug, Clone, Default)]
pub struct World {
    pub interventions: BTreeMap<VarName, String>,
    pub observations: BTreeMap<VarName, String>,
    pub marginalize: BTreeSet<VarName>,
    pub query: Vec<VarName>,
}

#[derive(Debug, Clone, Default)]
pub struct WorldSpec {
    pub worlds: Vec<World>,
}

/// Evaluates a counterfactual: the exogenous product state is copied to
/// every world, each world's deterministic part is intervened per its
/// do-assignments, the flattened joint is conditioned on the observations,
/// and the result is marginalized to the query outputs (world-major order).
pub fn counterfactual_query(fcm: &Fcm, spec: &WorldSpec) -> Result<StateSem, CausalError> {
    let backend = fcm.base.binding.backend();
    if backend != Backend::Stoch {
        return Err(CausalError::UnsupportedBackend(backend));
    }
    if spec.worlds.is_empty() {
        return Err(CausalError::InvalidWorldSpec("no worlds".into()));
    }
    // A proper counterfactual has an observing world and a queried world;
    // the degenerate unobserved case is allowed and reduces to plain
    // intervention semantics.
    if !spec.worlds.iter().any(|w| !w.query.is_empty()) {
        return Err(CausalError::InvalidWorldSpec(
            "at least one world must query".into(),
        ));
    }
    for w in &spec.worlds {
        for v in w
            .interventions
            .keys()
            .chain(w.observations.keys())
            .chain(w.query.iter())
        {
            if !fcm.endogenous.contains_key(v) {
                return Err(CausalError::InvalidWorldSpec(format!(
                    "`{v}` is not an endogenous variable"
                )));
            }
        }
        for v in w.query.iter() {
            if w.observations.contains_key(v) || w.marginalize.contains(v) {
                return Err(CausalError::InvalidWorldSpec(format!(
                    "`{v}` both queried and observed/marginalized"
                )));
            }
        }
    }

    let sig = fcm.base.binding.signature();
    let binding = &fcm.base.binding;

    // Extended signature: one sharp state generator per distinct
    // intervention assignment.
    let mut extra_gens: Vec<Generator> = Vec::new();
    let mut extra_morphs: BTreeMap<GenName, MorphSem> = BTreeMap::new();
    let mut do_gen_names: BTreeMap<(VarName, String), GenName> = BTreeMap::new();
    for w in &spec.worlds {
        for (var, value) in &w.interventions {
            let key = (var.clone(), value.clone());
            if do_gen_names.contains_key(&key) {
                continue;
            }
            let obj = binding
                .object(var)
                .ok_or_else(|| CausalError::NotAVariable(var.clone()))?;
            let idx = obj.element_index(value).ok_or_else(|| CausalError::BadValue {
                var: var.clone(),
                value: value.clone(),
            })?;
            let name = format!("cf_do_{var}_{value}");
            let name = if sig.generator(&name).is_some() {
                fresh_gen_name(sig, &name)
            } else {
                name
            };
            extra_gens.push(Generator::new(
                name.clone(),
                vec![],
                vec![var.clone()],
                GenFlags::SHARP,
            ));
            extra_morphs.insert(
                name.clone(),
                crate::interpret::sharp_state_sem(backend, obj, idx),
            );
            do_gen_names.insert(key, name);
        }
    }
    let ext_sig = sig.with_added_generators(extra_gens)?;
    let mut morphs = binding.morphisms().clone();
    morphs.extend(extra_morphs);
    let ext_binding = bind_model(
        &ext_sig,
        backend,
        binding.objects().clone(),
        morphs,
        BTreeMap::new(),
    )?;

    // Endogenous topological order from the base network.
    let topo_vars = endogenous_topo_order(fcm)?;
    let n_worlds = spec.worlds.len();

    let mut builder = DiagramBuilder::new(&ext_sig);
    // Output layout: per world, observed variables (sorted) then queries.
    let mut output_slots: BTreeMap<(usize, VarName), usize> = BTreeMap::new();
    let mut out_factors: Vec<(usize, VarName)> = Vec::new();
    for (wi, w) in spec.worlds.iter().enumerate() {
        for v in w.observations.keys() {
            output_slots.insert((wi, v.clone()), out_factors.len());
            out_factors.push((wi, v.clone()));
        }
        for v in &w.query {
            output_slots.insert((wi, v.clone()), out_factors.len());
            out_factors.push((wi, v.clone()));
        }
    }
    for (_, v) in &out_factors {
        builder.add_output(v.clone());
    }

    // Branch dispenser per (world, variable): each consumer pops one wire
    // source, so copy fanouts are sized exactly.
    let mut avail: Vec<BTreeMap<VarName, Vec<WireSrc>>> = vec![BTreeMap::new(); n_worlds];

    // Consumption counts inside a world: children reading the variable.
    let child_count = |wi: usize, var: &VarName| -> usize {
        topo_vars
            .iter()
            .filter(|x| {
                !spec.worlds[wi].interventions.contains_key(*x)
                    && ext_sig
                        .generator(&fcm.endogenous[*x])
                        .is_some_and(|g| g.dom.contains(var))
            })
            .count()
    };

    // Fans a produced wire out to `uses` consumers, returning the branch
    // sources in order (boundary consumers are wired immediately by caller).
    let fan_out = |builder: &mut DiagramBuilder, src: WireSrc, var: &VarName, uses: usize| -> Vec<WireSrc> {
        match uses {
            0 => {
                let d = builder.add_box(BoxKind::Discard { var: var.clone() });
                builder.connect(src, WireDst::Box(d, 0), var.clone());
                vec![]
            }
            1 => vec![src],
            n => {
                let c = builder.add_box(BoxKind::Copy { var: var.clone(), n });
                builder.connect(src, WireDst::Box(c.clone(), 0), var.clone());
                (0..n).map(|k| WireSrc::Box(c.clone(), k)).collect()
            }
        }
    };

    // Exogenous product state, copied to the worlds that use it (a world
    // whose child variable is intervened discards its share at the source).
    for (u, lambda) in &fcm.exogenous {
        let child = fcm
            .noise_of
            .iter()
            .find(|(_, noise)| *noise == u)
            .map(|(x, _)| x.clone())
            .expect("validated FCM");
        let users: Vec<usize> = (0..n_worlds)
            .filter(|&wi| !spec.worlds[wi].interventions.contains_key(&child))
            .collect();
        let b = builder.add_gen(lambda);
        let branches = fan_out(&mut builder, WireSrc::Box(b, 0), u, users.len());
        for (branch, &wi) in branches.into_iter().zip(users.iter()) {
            avail[wi].entry(u.clone()).or_default().push(branch);
        }
    }

    // Deterministic parts per world, in endogenous topological order.
    for (wi, w) in spec.worlds.iter().enumerate() {
        for var in &topo_vars {
            let src = if let Some(value) = w.interventions.get(var) {
                let gen = &do_gen_names[&(var.clone(), value.clone())];
                let b = builder.add_gen(gen);
                WireSrc::Box(b, 0)
            } else {
                let genname = &fcm.endogenous[var];
                let gen = ext_sig.generator(genname).unwrap().clone();
                let b = builder.add_gen(genname);
                for (p, parent) in gen.dom.iter().enumerate() {
                    let psrc = avail[wi]
                        .get_mut(parent)
                        .and_then(|q| q.pop())
                        .ok_or_else(|| {
                            CausalError::InvalidNetwork(format!(
                                "no source for `{parent}` in world {wi}"
                            ))
                        })?;
                    builder.connect(psrc, WireDst::Box(b.clone(), p), parent.clone());
                }
                WireSrc::Box(b, 0)
            };
            let to_boundary = output_slots.contains_key(&(wi, var.clone()));
            let uses = child_count(wi, var) + usize::from(to_boundary);
            let mut branches = fan_out(&mut builder, src, var, uses);
            if to_boundary {
                let slot = output_slots[&(wi, var.clone())];
                let branch = branches.pop().expect("boundary branch");
                builder.connect(branch, WireDst::Output(slot), var.clone());
            }
            avail[wi].entry(var.clone()).or_default().extend(branches);
        }
    }

    let diagram = builder
        .finish()
        .map_err(|e| CausalError::InvalidNetwork(e.to_string()))?;

    let joint = ext_binding.eval(&diagram)?;

    // Condition on observations, tracking factor positions as they drop.
    let mut factors = out_factors;
    let mut state = joint;
    for (wi, w) in spec.worlds.iter().enumerate() {
        for (var, value) in &w.observations {
            let pos = factors
                .iter()
                .position(|(fw, fv)| *fw == wi && fv == var)
                .expect("observed factor present");
            let obj = ext_binding.object(var).unwrap();
            let idx = obj.element_index(value).ok_or_else(|| CausalError::BadValue {
                var: var.clone(),
                value: value.clone(),
            })?;
            state = match condition_sharp(&state, pos, idx) {
                Ok(s) => s,
                Err(CausalError::ZeroSupport(_)) => {
                    return Err(CausalError::ZeroSupportObservation {
                        world: wi,
                        var: var.clone(),
                        value: value.clone(),
                    })
                }
                Err(e) => return Err(e),
            };
            factors.remove(pos);
        }
    }
    Ok(state)
}

/// Endogenous variables in dependency order.
fn endogenous_topo_order(fcm: &Fcm) -> Result<Vec<VarName>, CausalError> {
    let sig = fcm.base.binding.signature();
    let mut remaining: Vec<VarName> = fcm.endogenous.keys().cloned().collect();
    let mut done: BTreeSet<VarName> = BTreeSet::new();
    let mut order = Vec::new();
    while !remaining.is_empty() {
        let mut advanced = false;
        remaining.retain(|v| {
            let gen = sig.generator(&fcm.endogenous[v]).unwrap();
            let ready = gen
                .dom
                .iter()
                .all(|p| fcm.exogenous.contains_key(p) || done.contains(p));
            if ready {
                done.insert(v.clone());
                order.push(v.clone());
                advanced = true;
                false
            } else {
                true
            }
        });
        if !advanced {
            return Err(CausalError::InvalidNetwork(
                "cyclic endogenous dependencies".into(),
            ));
        }
    }
    Ok(order)
}
