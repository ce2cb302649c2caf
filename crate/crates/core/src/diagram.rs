//! Immutable port-graph string diagrams over a signature.
//!
//! A diagram is an acyclic graph of boxes with ordered input/output
//! boundaries. Boxes are either generators from the signature or structural
//! nodes (copy, discard, swap); wires connect box ports and boundary ports,
//! with every port carrying exactly one wire. Interchange and symmetry hold
//! definitionally in this representation, so the normalizer only has to
//! handle the comonoid laws, discard naturality and swap cancellation.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::signature::{GenName, MapError, Signature, SignatureMap, VarName};

/// Box identifier, unique within a diagram.
pub type BoxId = String;

/// The kind of a box node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BoxKind {
    /// A generator from the signature.
    Gen(GenName),
    /// Copy with `n >= 2` output branches, all on the same variable.
    Copy { var: VarName, n: usize },
    /// Discard: one input, no outputs.
    Discard { var: VarName },
    /// Swap of two adjacent wires: inputs `[a, b]`, outputs `[b, a]`.
    Swap { a: VarName, b: VarName },
}

/// A box node with its diagram-unique id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiagBox {
    pub id: BoxId,
    pub kind: BoxKind,
}

/// Source endpoint of a wire: a diagram input or a box output port.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum WireSrc {
    Input(usize),
    Box(BoxId, usize),
}

/// Destination endpoint of a wire: a diagram output or a box input port.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum WireDst {
    Output(usize),
    Box(BoxId, usize),
}

/// A directed wire between two ports, labelled by its variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Wire {
    pub src: WireSrc,
    pub dst: WireDst,
    pub var: VarName,
}

/// Structural defects reported by [`Diagram::validate`]. Violations are data,
/// not errors: hand-built diagrams surface all their problems at once.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    DanglingPort { at: String },
    PortConflict { at: String },
    Cycle,
    UnknownGenerator(GenName),
    UnknownVariable(VarName),
    VariableMismatch { wire: usize, detail: String },
    StructuralNotAllowed { kind: String },
    BadEndpoint { wire: usize, detail: String },
    DuplicateBoxId(BoxId),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DanglingPort { at } => write!(f, "dangling port at {at}"),
            Violation::PortConflict { at } => write!(f, "port wired more than once at {at}"),
            Violation::Cycle => write!(f, "cycle in box graph"),
            Violation::UnknownGenerator(g) => write!(f, "unknown generator `{g}`"),
            Violation::UnknownVariable(v) => write!(f, "unknown variable `{v}`"),
            Violation::VariableMismatch { wire, detail } => {
                write!(f, "variable mismatch on wire {wire}: {detail}")
            }
            Violation::StructuralNotAllowed { kind } => {
                write!(f, "{kind} not allowed by signature language")
            }
            Violation::BadEndpoint { wire, detail } => {
                write!(f, "bad endpoint on wire {wire}: {detail}")
            }
            Violation::DuplicateBoxId(id) => write!(f, "duplicate box id `{id}`"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagramError {
    #[error("interface mismatch at position {position}: expected `{expected}`, found `{found}`")]
    InterfaceMismatch {
        position: usize,
        expected: String,
        found: String,
    },
    #[error("diagrams are over different signatures")]
    SignatureMismatch,
    #[error("invalid diagram: {0}")]
    Invalid(String),
}

/// An immutable string diagram.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagram {
    pub(crate) sig: Signature,
    pub(crate) boxes: Vec<DiagBox>,
    pub(crate) wires: Vec<Wire>,
    pub(crate) inputs: Vec<VarName>,
    pub(crate) outputs: Vec<VarName>,
}

impl Diagram {
    pub fn signature(&self) -> &Signature {
        &self.sig
    }

    pub fn boxes(&self) -> &[DiagBox] {
        &self.boxes
    }

    pub fn wires(&self) -> &[Wire] {
        &self.wires
    }

    pub fn input_vars(&self) -> &[VarName] {
        &self.inputs
    }

    pub fn output_vars(&self) -> &[VarName] {
        &self.outputs
    }

    pub fn box_by_id(&self, id: &str) -> Option<&DiagBox> {
        self.boxes.iter().find(|b| b.id == id)
    }

    /// Input/output variable lists of a box kind, resolved via the signature.
    pub fn kind_interface(&self, kind: &BoxKind) -> (Vec<VarName>, Vec<VarName>) {
        kind_interface(&self.sig, kind)
    }

    pub(crate) fn wire_from(&self, src: &WireSrc) -> Option<&Wire> {
        self.wires.iter().find(|w| &w.src == src)
    }

    pub(crate) fn wire_to(&self, dst: &WireDst) -> Option<&Wire> {
        self.wires.iter().find(|w| &w.dst == dst)
    }

    /// Single-box diagram around a generator.
    pub fn from_generator(sig: &Signature, gen: &str) -> Result<Diagram, DiagramError> {
        let g = sig
            .generator(gen)
            .ok_or_else(|| DiagramError::Invalid(format!("unknown generator `{gen}`")))?
            .clone();
        let id: BoxId = "b0".into();
        let mut wires = Vec::new();
        for (i, v) in g.dom.iter().enumerate() {
            wires.push(Wire {
                src: WireSrc::Input(i),
                dst: WireDst::Box(id.clone(), i),
                var: v.clone(),
            });
        }
        for (j, v) in g.cod.iter().enumerate() {
            wires.push(Wire {
                src: WireSrc::Box(id.clone(), j),
                dst: WireDst::Output(j),
                var: v.clone(),
            });
        }
        Ok(Diagram {
            sig: sig.clone(),
            boxes: vec![DiagBox {
                id,
                kind: BoxKind::Gen(gen.into()),
            }],
            wires,
            inputs: g.dom,
            outputs: g.cod,
        })
    }

    /// Zero-box diagram of plain wires.
    pub fn identity(sig: &Signature, vars: &[VarName]) -> Diagram {
        Self::permutation(sig, vars, &(0..vars.len()).collect::<Vec<_>>())
    }

    /// Zero-box diagram wiring input `i` to output `perm[i]`.
    pub fn permutation(sig: &Signature, vars: &[VarName], perm: &[usize]) -> Diagram {
        assert_eq!(vars.len(), perm.len());
        let mut outputs = vec![String::new(); vars.len()];
        let mut wires = Vec::new();
        for (i, v) in vars.iter().enumerate() {
            outputs[perm[i]] = v.clone();
            wires.push(Wire {
                src: WireSrc::Input(i),
                dst: WireDst::Output(perm[i]),
                var: v.clone(),
            });
        }
        Diagram {
            sig: sig.clone(),
            boxes: Vec::new(),
            wires,
            inputs: vars.to_vec(),
            outputs,
        }
    }

    /// Single n-ary copy box.
    pub fn copy(sig: &Signature, var: &str, n: usize) -> Diagram {
        assert!(n >= 2, "copy fanout must be at least 2");
        let id: BoxId = "b0".into();
        let mut wires = vec![Wire {
            src: WireSrc::Input(0),
            dst: WireDst::Box(id.clone(), 0),
            var: var.into(),
        }];
        for j in 0..n {
            wires.push(Wire {
                src: WireSrc::Box(id.clone(), j),
                dst: WireDst::Output(j),
                var: var.into(),
            });
        }
        Diagram {
            sig: sig.clone(),
            boxes: vec![DiagBox {
                id,
                kind: BoxKind::Copy { var: var.into(), n },
            }],
            wires,
            inputs: vec![var.into()],
            outputs: vec![var.into(); n],
        }
    }

    /// Single discard box.
    pub fn discard(sig: &Signature, var: &str) -> Diagram {
        let id: BoxId = "b0".into();
        Diagram {
            sig: sig.clone(),
            boxes: vec![DiagBox {
                id: id.clone(),
                kind: BoxKind::Discard { var: var.into() },
            }],
            wires: vec![Wire {
                src: WireSrc::Input(0),
                dst: WireDst::Box(id, 0),
                var: var.into(),
            }],
            inputs: vec![var.into()],
            outputs: vec![],
        }
    }

    /// Single swap box.
    pub fn swap(sig: &Signature, a: &str, b: &str) -> Diagram {
        let id: BoxId = "b0".into();
        Diagram {
            sig: sig.clone(),
            boxes: vec![DiagBox {
                id: id.clone(),
                kind: BoxKind::Swap {
                    a: a.into(),
                    b: b.into(),
                },
            }],
            wires: vec![
                Wire {
                    src: WireSrc::Input(0),
                    dst: WireDst::Box(id.clone(), 0),
                    var: a.into(),
                },
                Wire {
                    src: WireSrc::Input(1),
                    dst: WireDst::Box(id.clone(), 1),
                    var: b.into(),
                },
                Wire {
                    src: WireSrc::Box(id.clone(), 0),
                    dst: WireDst::Output(0),
                    var: b.into(),
                },
                Wire {
                    src: WireSrc::Box(id, 1),
                    dst: WireDst::Output(1),
                    var: a.into(),
                },
            ],
            inputs: vec![a.into(), b.into()],
            outputs: vec![b.into(), a.into()],
        }
    }

    /// Sequential composite `self ; then` (self first, read bottom to top).
    pub fn compose_seq(&self, then: &Diagram) -> Result<Diagram, DiagramError> {
        if self.sig != then.sig {
            return Err(DiagramError::SignatureMismatch);
        }
        if self.outputs.len() != then.inputs.len() {
            return Err(DiagramError::InterfaceMismatch {
                position: self.outputs.len().min(then.inputs.len()),
                expected: format!("{} wires", self.outputs.len()),
                found: format!("{} wires", then.inputs.len()),
            });
        }
        for (i, (a, b)) in self.outputs.iter().zip(then.inputs.iter()).enumerate() {
            if a != b {
                return Err(DiagramError::InterfaceMismatch {
                    position: i,
                    expected: a.clone(),
                    found: b.clone(),
                });
            }
        }

        let mut used: BTreeSet<BoxId> = self.boxes.iter().map(|b| b.id.clone()).collect();
        let mut rename: BTreeMap<BoxId, BoxId> = BTreeMap::new();
        let mut boxes = self.boxes.clone();
        for b in &then.boxes {
            let id = fresh_id(&b.id, &mut used);
            if id != b.id {
                rename.insert(b.id.clone(), id.clone());
            }
            boxes.push(DiagBox {
                id,
                kind: b.kind.clone(),
            });
        }
        let ren_src = |s: &WireSrc| match s {
            WireSrc::Box(id, p) => {
                WireSrc::Box(rename.get(id).cloned().unwrap_or_else(|| id.clone()), *p)
            }
            other => other.clone(),
        };
        let ren_dst = |d: &WireDst| match d {
            WireDst::Box(id, p) => {
                WireDst::Box(rename.get(id).cloned().unwrap_or_else(|| id.clone()), *p)
            }
            other => other.clone(),
        };

        // Producer of interface position j in `self`, consumer in `then`.
        let mut wires = Vec::new();
        let mut producers: BTreeMap<usize, WireSrc> = BTreeMap::new();
        for w in &self.wires {
            match &w.dst {
                WireDst::Output(j) => {
                    producers.insert(*j, w.src.clone());
                }
                _ => wires.push(w.clone()),
            }
        }
        for w in &then.wires {
            match &w.src {
                WireSrc::Input(j) => {
                    let src = producers
                        .get(j)
                        .expect("interface position produced exactly once")
                        .clone();
                    wires.push(Wire {
                        src,
                        dst: ren_dst(&w.dst),
                        var: w.var.clone(),
                    });
                }
                _ => wires.push(Wire {
                    src: ren_src(&w.src),
                    dst: ren_dst(&w.dst),
                    var: w.var.clone(),
                }),
            }
        }
        Ok(Diagram {
            sig: self.sig.clone(),
            boxes,
            wires,
            inputs: self.inputs.clone(),
            outputs: then.outputs.clone(),
        })
    }

    /// Parallel composite `self ⊗ other`; boundaries concatenated.
    pub fn compose_par(&self, other: &Diagram) -> Result<Diagram, DiagramError> {
        if self.sig != other.sig {
            return Err(DiagramError::SignatureMismatch);
        }
        let in_off = self.inputs.len();
        let out_off = self.outputs.len();
        let mut used: BTreeSet<BoxId> = self.boxes.iter().map(|b| b.id.clone()).collect();
        let mut rename: BTreeMap<BoxId, BoxId> = BTreeMap::new();
        let mut boxes = self.boxes.clone();
        for b in &other.boxes {
            let id = fresh_id(&b.id, &mut used);
            if id != b.id {
                rename.insert(b.id.clone(), id.clone());
            }
            boxes.push(DiagBox {
                id,
                kind: b.kind.clone(),
            });
        }
        let mut wires = self.wires.clone();
        for w in &other.wires {
            let src = match &w.src {
                WireSrc::Input(i) => WireSrc::Input(i + in_off),
                WireSrc::Box(id, p) => {
                    WireSrc::Box(rename.get(id).cloned().unwrap_or_else(|| id.clone()), *p)
                }
            };
            let dst = match &w.dst {
                WireDst::Output(j) => WireDst::Output(j + out_off),
                WireDst::Box(id, p) => {
                    WireDst::Box(rename.get(id).cloned().unwrap_or_else(|| id.clone()), *p)
                }
            };
            wires.push(Wire {
                src,
                dst,
                var: w.var.clone(),
            });
        }
        let mut inputs = self.inputs.clone();
        inputs.extend(other.inputs.iter().cloned());
        let mut outputs = self.outputs.clone();
        outputs.extend(other.outputs.iter().cloned());
        Ok(Diagram {
            sig: self.sig.clone(),
            boxes,
            wires,
            inputs,
            outputs,
        })
    }

    /// Checks every structural invariant; empty iff the diagram is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let lang = self.sig.language();

        let mut ids = BTreeSet::new();
        for b in &self.boxes {
            if !ids.insert(b.id.clone()) {
                out.push(Violation::DuplicateBoxId(b.id.clone()));
            }
            match &b.kind {
                BoxKind::Gen(g) => {
                    if self.sig.generator(g).is_none() {
                        out.push(Violation::UnknownGenerator(g.clone()));
                    }
                }
                BoxKind::Copy { var, n } => {
                    if !lang.allows_copy() {
                        out.push(Violation::StructuralNotAllowed {
                            kind: "copy".into(),
                        });
                    }
                    if *n < 2 {
                        out.push(Violation::BadEndpoint {
                            wire: 0,
                            detail: format!("copy `{}` has fanout {n} < 2", b.id),
                        });
                    }
                    if !self.sig.has_variable(var) {
                        out.push(Violation::UnknownVariable(var.clone()));
                    }
                }
                BoxKind::Discard { var } => {
                    if !lang.allows_discard() {
                        out.push(Violation::StructuralNotAllowed {
                            kind: "discard".into(),
                        });
                    }
                    if !self.sig.has_variable(var) {
                        out.push(Violation::UnknownVariable(var.clone()));
                    }
                }
                BoxKind::Swap { a, b: bv } => {
                    for v in [a, bv] {
                        if !self.sig.has_variable(v) {
                            out.push(Violation::UnknownVariable(v.clone()));
                        }
                    }
                }
            }
        }
        for v in self.inputs.iter().chain(self.outputs.iter()) {
            if !self.sig.has_variable(v) {
                out.push(Violation::UnknownVariable(v.clone()));
            }
        }
        if !out.is_empty() {
            // Port bookkeeping below assumes resolvable kinds and unique ids.
            return out;
        }

        let index: BTreeMap<&str, usize> = self
            .boxes
            .iter()
            .enumerate()
            .map(|(i, b)| (b.id.as_str(), i))
            .collect();

        // Exactly one wire per port, variables consistent at both endpoints.
        let mut src_seen: BTreeMap<WireSrc, usize> = BTreeMap::new();
        let mut dst_seen: BTreeMap<WireDst, usize> = BTreeMap::new();
        for (wi, w) in self.wires.iter().enumerate() {
            match &w.src {
                WireSrc::Input(i) => {
                    if *i >= self.inputs.len() {
                        out.push(Violation::BadEndpoint {
                            wire: wi,
                            detail: format!("input index {i} out of range"),
                        });
                        continue;
                    }
                    if self.inputs[*i] != w.var {
                        out.push(Violation::VariableMismatch {
                            wire: wi,
                            detail: format!(
                                "input {i} is `{}`, wire carries `{}`",
                                self.inputs[*i], w.var
                            ),
                        });
                    }
                }
                WireSrc::Box(id, p) => match index.get(id.as_str()) {
                    None => {
                        out.push(Violation::BadEndpoint {
                            wire: wi,
                            detail: format!("unknown box `{id}`"),
                        });
                        continue;
                    }
                    Some(&bi) => {
                        let (_, cod) = kind_interface(&self.sig, &self.boxes[bi].kind);
                        if *p >= cod.len() {
                            out.push(Violation::BadEndpoint {
                                wire: wi,
                                detail: format!("output port {p} out of range on `{id}`"),
                            });
                            continue;
                        }
                        if cod[*p] != w.var {
                            out.push(Violation::VariableMismatch {
                                wire: wi,
                                detail: format!(
                                    "`{id}` output {p} is `{}`, wire carries `{}`",
                                    cod[*p], w.var
                                ),
                            });
                        }
                    }
                },
            }
            match &w.dst {
                WireDst::Output(j) => {
                    if *j >= self.outputs.len() {
                        out.push(Violation::BadEndpoint {
                            wire: wi,
                            detail: format!("output index {j} out of range"),
                        });
                        continue;
                    }
                    if self.outputs[*j] != w.var {
                        out.push(Violation::VariableMismatch {
                            wire: wi,
                            detail: format!(
                                "output {j} is `{}`, wire carries `{}`",
                                self.outputs[*j], w.var
                            ),
                        });
                    }
                }
                WireDst::Box(id, p) => match index.get(id.as_str()) {
                    None => {
                        out.push(Violation::BadEndpoint {
                            wire: wi,
                            detail: format!("unknown box `{id}`"),
                        });
                        continue;
                    }
                    Some(&bi) => {
                        let (dom, _) = kind_interface(&self.sig, &self.boxes[bi].kind);
                        if *p >= dom.len() {
                            out.push(Violation::BadEndpoint {
                                wire: wi,
                                detail: format!("input port {p} out of range on `{id}`"),
                            });
                            continue;
                        }
                        if dom[*p] != w.var {
                            out.push(Violation::VariableMismatch {
                                wire: wi,
                                detail: format!(
                                    "`{id}` input {p} is `{}`, wire carries `{}`",
                                    dom[*p], w.var
                                ),
                            });
                        }
                    }
                },
            }
            if let Some(prev) = src_seen.insert(w.src.clone(), wi) {
                out.push(Violation::PortConflict {
                    at: format!("src of wires {prev} and {wi}"),
                });
            }
            if let Some(prev) = dst_seen.insert(w.dst.clone(), wi) {
                out.push(Violation::PortConflict {
                    at: format!("dst of wires {prev} and {wi}"),
                });
            }
        }
        for i in 0..self.inputs.len() {
            if !src_seen.contains_key(&WireSrc::Input(i)) {
                out.push(Violation::DanglingPort {
                    at: format!("diagram input {i}"),
                });
            }
        }
        for j in 0..self.outputs.len() {
            if !dst_seen.contains_key(&WireDst::Output(j)) {
                out.push(Violation::DanglingPort {
                    at: format!("diagram output {j}"),
                });
            }
        }
        for b in &self.boxes {
            let (dom, cod) = kind_interface(&self.sig, &b.kind);
            for p in 0..dom.len() {
                if !dst_seen.contains_key(&WireDst::Box(b.id.clone(), p)) {
                    out.push(Violation::DanglingPort {
                        at: format!("`{}` input {p}", b.id),
                    });
                }
            }
            for p in 0..cod.len() {
                if !src_seen.contains_key(&WireSrc::Box(b.id.clone(), p)) {
                    out.push(Violation::DanglingPort {
                        at: format!("`{}` output {p}", b.id),
                    });
                }
            }
        }

        if self.topo_order().is_none() {
            out.push(Violation::Cycle);
        }
        out
    }

    /// Topological order of box indices (deterministic: ready boxes are taken
    /// in original list order), or `None` if the box graph has a cycle.
    pub(crate) fn topo_order(&self) -> Option<Vec<usize>> {
        let n = self.boxes.len();
        let index: BTreeMap<&str, usize> = self
            .boxes
            .iter()
            .enumerate()
            .map(|(i, b)| (b.id.as_str(), i))
            .collect();
        let mut preds: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        for w in &self.wires {
            if let (WireSrc::Box(a, _), WireDst::Box(b, _)) = (&w.src, &w.dst) {
                let (&ai, &bi) = (index.get(a.as_str())?, index.get(b.as_str())?);
                preds[bi].insert(ai);
            }
        }
        let mut order = Vec::with_capacity(n);
        let mut done = vec![false; n];
        while order.len() < n {
            let mut advanced = false;
            for i in 0..n {
                if !done[i] && preds[i].iter().all(|&p| done[p]) {
                    done[i] = true;
                    order.push(i);
                    advanced = true;
                }
            }
            if !advanced {
                return None;
            }
        }
        Some(order)
    }

    /// Canonical form: copy trees fused, discarded copy branches pruned,
    /// discards pushed through channel boxes, swaps simplified, dead channel
    /// subgraphs removed. Discard naturality is applied left-to-right only,
    /// so equality of normal forms is sound but not complete; semantic
    /// equality is the completeness fallback.
    pub fn normalize(&self) -> Diagram {
        let mut work = Scratch::new(self);
        loop {
            if work.fuse_copy() {
                continue;
            }
            if work.prune_copy_discard() {
                continue;
            }
            if work.push_discard_through_channel() {
                continue;
            }
            if work.simplify_swap_discard() {
                continue;
            }
            if work.cancel_swap_pair() {
                continue;
            }
            break;
        }
        work.finish()
    }

    /// Structural isomorphism of normalized diagrams, respecting ordered
    /// boundaries, box kinds and port order.
    pub fn iso_equal(&self, other: &Diagram) -> bool {
        if self.sig != other.sig {
            return false;
        }
        let a = self.normalize();
        let b = other.normalize();
        iso_normalized(&a, &b)
    }
}

/// Replaces a region of boxes by another diagram.
///
/// `in_wires`/`out_wires` are host wire indices crossing into/out of the
/// region, ordered to match the replacement's input/output boundaries. All
/// wires between the region and the rest of the host must be listed; wires
/// internal to the region are dropped.
pub(crate) fn splice_region(
    host: &Diagram,
    region: &BTreeSet<BoxId>,
    in_wires: &[usize],
    out_wires: &[usize],
    replacement: &Diagram,
) -> Result<Diagram, DiagramError> {
    if host.sig != replacement.sig {
        return Err(DiagramError::SignatureMismatch);
    }
    let in_region_src = |src: &WireSrc| matches!(src, WireSrc::Box(id, _) if region.contains(id));
    let in_region_dst = |dst: &WireDst| matches!(dst, WireDst::Box(id, _) if region.contains(id));

    // Region interface must match the replacement boundary.
    if in_wires.len() != replacement.inputs.len() || out_wires.len() != replacement.outputs.len() {
        return Err(DiagramError::InterfaceMismatch {
            position: 0,
            expected: format!(
                "{} in / {} out",
                replacement.inputs.len(),
                replacement.outputs.len()
            ),
            found: format!("{} in / {} out", in_wires.len(), out_wires.len()),
        });
    }
    for (k, &wi) in in_wires.iter().enumerate() {
        let w = host
            .wires
            .get(wi)
            .ok_or_else(|| DiagramError::Invalid(format!("no wire {wi}")))?;
        if !in_region_dst(&w.dst) || in_region_src(&w.src) {
            return Err(DiagramError::Invalid(format!(
                "wire {wi} does not enter the region"
            )));
        }
        if w.var != replacement.inputs[k] {
            return Err(DiagramError::InterfaceMismatch {
                position: k,
                expected: replacement.inputs[k].clone(),
                found: w.var.clone(),
            });
        }
    }
    for (k, &wi) in out_wires.iter().enumerate() {
        let w = host
            .wires
            .get(wi)
            .ok_or_else(|| DiagramError::Invalid(format!("no wire {wi}")))?;
        if !in_region_src(&w.src) || in_region_dst(&w.dst) {
            return Err(DiagramError::Invalid(format!(
                "wire {wi} does not leave the region"
            )));
        }
        if w.var != replacement.outputs[k] {
            return Err(DiagramError::InterfaceMismatch {
                position: k,
                expected: replacement.outputs[k].clone(),
                found: w.var.clone(),
            });
        }
    }

    let mut boxes: Vec<DiagBox> = host
        .boxes
        .iter()
        .filter(|b| !region.contains(&b.id))
        .cloned()
        .collect();
    let mut used: BTreeSet<BoxId> = boxes.iter().map(|b| b.id.clone()).collect();
    let mut rename: BTreeMap<BoxId, BoxId> = BTreeMap::new();
    for b in &replacement.boxes {
        let id = fresh_id(&b.id, &mut used);
        if id != b.id {
            rename.insert(b.id.clone(), id.clone());
        }
        boxes.push(DiagBox {
            id,
            kind: b.kind.clone(),
        });
    }
    let ren = |id: &BoxId| rename.get(id).cloned().unwrap_or_else(|| id.clone());

    let listed: BTreeSet<usize> = in_wires.iter().chain(out_wires.iter()).copied().collect();
    let mut wires: Vec<Wire> = Vec::new();
    for (wi, w) in host.wires.iter().enumerate() {
        let touches = in_region_src(&w.src) || in_region_dst(&w.dst);
        if !touches {
            wires.push(w.clone());
        } else if !listed.contains(&wi) && !(in_region_src(&w.src) && in_region_dst(&w.dst)) {
            return Err(DiagramError::Invalid(format!(
                "wire {wi} crosses the region boundary but is not listed"
            )));
        }
    }
    // Producer feeding replacement input k, consumer fed by replacement
    // output k, on the host side.
    let host_src = |k: usize| host.wires[in_wires[k]].src.clone();
    let host_dst = |k: usize| host.wires[out_wires[k]].dst.clone();
    for w in &replacement.wires {
        match (&w.src, &w.dst) {
            (WireSrc::Input(i), WireDst::Output(j)) => wires.push(Wire {
                src: host_src(*i),
                dst: host_dst(*j),
                var: w.var.clone(),
            }),
            (WireSrc::Input(i), WireDst::Box(id, p)) => wires.push(Wire {
                src: host_src(*i),
                dst: WireDst::Box(ren(id), *p),
                var: w.var.clone(),
            }),
            (WireSrc::Box(id, q), WireDst::Output(j)) => wires.push(Wire {
                src: WireSrc::Box(ren(id), *q),
                dst: host_dst(*j),
                var: w.var.clone(),
            }),
            (WireSrc::Box(a, q), WireDst::Box(b, p)) => wires.push(Wire {
                src: WireSrc::Box(ren(a), *q),
                dst: WireDst::Box(ren(b), *p),
                var: w.var.clone(),
            }),
        }
    }
    let result = Diagram {
        sig: host.sig.clone(),
        boxes,
        wires,
        inputs: host.inputs.clone(),
        outputs: host.outputs.clone(),
    };
    let violations = result.validate();
    if !violations.is_empty() {
        return Err(DiagramError::Invalid(format!(
            "splice produced an invalid diagram: {}",
            violations[0]
        )));
    }
    Ok(result)
}

/// Translates a diagram along a (partial) signature map, box for box and
/// wire for wire. Fails where the map is undefined.
pub fn apply_map(m: &SignatureMap, d: &Diagram) -> Result<Diagram, MapError> {
    if &m.source != d.signature() {
        return Err(MapError::Invalid(
            "diagram is not over the map's source signature".into(),
        ));
    }
    let map_var = |v: &VarName| -> Result<VarName, MapError> {
        m.map_var(v)
            .cloned()
            .ok_or_else(|| MapError::UndefinedOnVariable(v.clone()))
    };
    let mut boxes = Vec::with_capacity(d.boxes.len());
    for b in &d.boxes {
        let kind = match &b.kind {
            BoxKind::Gen(g) => BoxKind::Gen(
                m.map_gen(g)
                    .cloned()
                    .ok_or_else(|| MapError::UndefinedOnGenerator(g.clone()))?,
            ),
            BoxKind::Copy { var, n } => BoxKind::Copy {
                var: map_var(var)?,
                n: *n,
            },
            BoxKind::Discard { var } => BoxKind::Discard { var: map_var(var)? },
            BoxKind::Swap { a, b: bb } => BoxKind::Swap {
                a: map_var(a)?,
                b: map_var(bb)?,
            },
        };
        boxes.push(DiagBox {
            id: b.id.clone(),
            kind,
        });
    }
    let wires = d
        .wires
        .iter()
        .map(|w| {
            Ok(Wire {
                src: w.src.clone(),
                dst: w.dst.clone(),
                var: map_var(&w.var)?,
            })
        })
        .collect::<Result<Vec<_>, MapError>>()?;
    let inputs = d
        .inputs
        .iter()
        .map(map_var)
        .collect::<Result<Vec<_>, _>>()?;
    let outputs = d
        .outputs
        .iter()
        .map(map_var)
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Diagram {
        sig: m.target.clone(),
        boxes,
        wires,
        inputs,
        outputs,
    })
}

/// Input/output variable lists of a box kind.
pub(crate) fn kind_interface(sig: &Signature, kind: &BoxKind) -> (Vec<VarName>, Vec<VarName>) {
    match kind {
        BoxKind::Gen(g) => match sig.generator(g) {
            Some(gen) => (gen.dom.clone(), gen.cod.clone()),
            None => (vec![], vec![]),
        },
        BoxKind::Copy { var, n } => (vec![var.clone()], vec![var.clone(); *n]),
        BoxKind::Discard { var } => (vec![var.clone()], vec![]),
        BoxKind::Swap { a, b } => (vec![a.clone(), b.clone()], vec![b.clone(), a.clone()]),
    }
}

fn fresh_id(base: &str, used: &mut BTreeSet<BoxId>) -> BoxId {
    if used.insert(base.to_string()) {
        return base.to_string();
    }
    let mut k = 2usize;
    loop {
        let candidate = format!("{base}~{k}");
        if used.insert(candidate.clone()) {
            return candidate;
        }
        k += 1;
    }
}

/// Incremental diagram construction with validation at the end.
pub struct DiagramBuilder {
    sig: Signature,
    boxes: Vec<DiagBox>,
    wires: Vec<Wire>,
    inputs: Vec<VarName>,
    outputs: Vec<VarName>,
    used: BTreeSet<BoxId>,
    counter: usize,
}

impl DiagramBuilder {
    pub fn new(sig: &Signature) -> Self {
        DiagramBuilder {
            sig: sig.clone(),
            boxes: Vec::new(),
            wires: Vec::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            used: BTreeSet::new(),
            counter: 0,
        }
    }

    fn auto_id(&mut self, prefix: &str) -> BoxId {
        loop {
            let id = format!("{prefix}{}", self.counter);
            self.counter += 1;
            if self.used.insert(id.clone()) {
                return id;
            }
        }
    }

    pub fn add_input(&mut self, var: impl Into<String>) -> usize {
        self.inputs.push(var.into());
        self.inputs.len() - 1
    }

    pub fn add_output(&mut self, var: impl Into<String>) -> usize {
        self.outputs.push(var.into());
        self.outputs.len() - 1
    }

    pub fn add_box(&mut self, kind: BoxKind) -> BoxId {
        let prefix = match &kind {
            BoxKind::Gen(_) => "b",
            BoxKind::Copy { .. } => "c",
            BoxKind::Discard { .. } => "d",
            BoxKind::Swap { .. } => "s",
        };
        let id = self.auto_id(prefix);
        self.boxes.push(DiagBox {
            id: id.clone(),
            kind,
        });
        id
    }

    pub fn add_box_with_id(&mut self, id: impl Into<String>, kind: BoxKind) -> BoxId {
        let id = id.into();
        self.used.insert(id.clone());
        self.boxes.push(DiagBox {
            id: id.clone(),
            kind,
        });
        id
    }

    pub fn add_gen(&mut self, gen: &str) -> BoxId {
        self.add_box(BoxKind::Gen(gen.into()))
    }

    pub fn connect(&mut self, src: WireSrc, dst: WireDst, var: impl Into<String>) {
        self.wires.push(Wire {
            src,
            dst,
            var: var.into(),
        });
    }

    pub fn finish(self) -> Result<Diagram, DiagramError> {
        let d = Diagram {
            sig: self.sig,
            boxes: self.boxes,
            wires: self.wires,
            inputs: self.inputs,
            outputs: self.outputs,
        };
        let violations = d.validate();
        if violations.is_empty() {
            Ok(d)
        } else {
            Err(DiagramError::Invalid(
                violations
                    .iter()
                    .map(|v| v.to_string())
                    .collect::<Vec<_>>()
                    .join("; "),
            ))
        }
    }
}

// ---------------------------------------------------------------------------
// Normalization scratch space
// ---------------------------------------------------------------------------

struct Scratch {
    sig: Signature,
    boxes: Vec<Option<DiagBox>>,
    wires: Vec<Option<Wire>>,
    inputs: Vec<VarName>,
    outputs: Vec<VarName>,
    next_id: usize,
    used: BTreeSet<BoxId>,
}

impl Scratch {
    fn new(d: &Diagram) -> Self {
        Scratch {
            sig: d.sig.clone(),
            boxes: d.boxes.iter().cloned().map(Some).collect(),
            wires: d.wires.iter().cloned().map(Some).collect(),
            inputs: d.inputs.clone(),
            outputs: d.outputs.clone(),
            next_id: 0,
            used: d.boxes.iter().map(|b| b.id.clone()).collect(),
        }
    }

    fn fresh_discard_id(&mut self) -> BoxId {
        loop {
            let id = format!("nd{}", self.next_id);
            self.next_id += 1;
            if self.used.insert(id.clone()) {
                return id;
            }
        }
    }

    fn box_idx(&self, id: &str) -> Option<usize> {
        self.boxes
            .iter()
            .position(|b| b.as_ref().is_some_and(|b| b.id == id))
    }

    fn wire_from(&self, src: &WireSrc) -> Option<usize> {
        self.wires
            .iter()
            .position(|w| w.as_ref().is_some_and(|w| &w.src == src))
    }

    fn wire_to(&self, dst: &WireDst) -> Option<usize> {
        self.wires
            .iter()
            .position(|w| w.as_ref().is_some_and(|w| &w.dst == dst))
    }

    fn is_discard(&self, dst: &WireDst) -> bool {
        match dst {
            WireDst::Box(id, _) => self.box_idx(id).is_some_and(|i| {
                matches!(
                    self.boxes[i].as_ref().map(|b| &b.kind),
                    Some(BoxKind::Discard { .. })
                )
            }),
            _ => false,
        }
    }

    fn live_boxes(&self) -> impl Iterator<Item = (usize, &DiagBox)> {
        self.boxes
            .iter()
            .enumerate()
            .filter_map(|(i, b)| b.as_ref().map(|b| (i, b)))
    }

    /// Copy feeding copy fuses into one n-ary copy.
    fn fuse_copy(&mut self) -> bool {
        let candidate = self.live_boxes().find_map(|(i, b)| {
            let BoxKind::Copy { n, .. } = &b.kind else {
                return None;
            };
            for p in 0..*n {
                let wi = self.wire_from(&WireSrc::Box(b.id.clone(), p))?;
                if let WireDst::Box(cid, 0) = &self.wires[wi].as_ref().unwrap().dst {
                    let ci = self.box_idx(cid)?;
                    if let BoxKind::Copy { n: m, .. } = &self.boxes[ci].as_ref().unwrap().kind {
                        return Some((i, p, *n, ci, *m));
                    }
                }
            }
            None
        });
        let Some((bi, p, n, ci, m)) = candidate else {
            return false;
        };
        let bid = self.boxes[bi].as_ref().unwrap().id.clone();
        let cid = self.boxes[ci].as_ref().unwrap().id.clone();
        let var = match &self.boxes[bi].as_ref().unwrap().kind {
            BoxKind::Copy { var, .. } => var.clone(),
            _ => unreachable!(),
        };
        // Drop the connecting wire.
        let conn = self.wire_from(&WireSrc::Box(bid.clone(), p)).unwrap();
        self.wires[conn] = None;
        // New port layout: b's 0..p, then c's 0..m, then b's p+1..n.
        for w in self.wires.iter_mut().flatten() {
            if let WireSrc::Box(id, q) = &mut w.src {
                if *id == bid && *q > p {
                    *q += m - 1;
                } else if *id == cid {
                    *id = bid.clone();
                    *q += p;
                }
            }
        }
        self.boxes[ci] = None;
        self.boxes[bi] = Some(DiagBox {
            id: bid,
            kind: BoxKind::Copy { var, n: n + m - 1 },
        });
        true
    }

    /// Copy branch ending in a discard is pruned: to a smaller copy, or to a
    /// plain wire when only one branch remains.
    fn prune_copy_discard(&mut self) -> bool {
        let candidate = self.live_boxes().find_map(|(i, b)| {
            let BoxKind::Copy { n, .. } = &b.kind else {
                return None;
            };
            for p in 0..*n {
                let wi = self.wire_from(&WireSrc::Box(b.id.clone(), p))?;
                let dst = self.wires[wi].as_ref().unwrap().dst.clone();
                if self.is_discard(&dst) {
                    return Some((i, p, *n, wi, dst));
                }
            }
            None
        });
        let Some((bi, p, n, wi, dst)) = candidate else {
            return false;
        };
        let bid = self.boxes[bi].as_ref().unwrap().id.clone();
        let WireDst::Box(did, _) = dst else {
            unreachable!()
        };
        let di = self.box_idx(&did).unwrap();
        self.wires[wi] = None;
        self.boxes[di] = None;
        if n > 2 {
            for w in self.wires.iter_mut().flatten() {
                if let WireSrc::Box(id, q) = &mut w.src {
                    if *id == bid && *q > p {
                        *q -= 1;
                    }
                }
            }
            let var = match &self.boxes[bi].as_ref().unwrap().kind {
                BoxKind::Copy { var, .. } => var.clone(),
                _ => unreachable!(),
            };
            self.boxes[bi] = Some(DiagBox {
                id: bid,
                kind: BoxKind::Copy { var, n: n - 1 },
            });
        } else {
            // Counitality: the copy collapses to a plain wire.
            let other = 1 - p;
            let in_wi = self.wire_to(&WireDst::Box(bid.clone(), 0)).unwrap();
            let out_wi = self.wire_from(&WireSrc::Box(bid.clone(), other)).unwrap();
            let src = self.wires[in_wi].as_ref().unwrap().src.clone();
            let out = self.wires[out_wi].as_mut().unwrap();
            out.src = src;
            self.wires[in_wi] = None;
            self.boxes[bi] = None;
        }
        true
    }

    /// Discard naturality: a channel-flagged generator box whose outputs are
    /// all discarded is replaced by discards on its inputs. Cascades to
    /// remove dead channel-only subgraphs.
    fn push_discard_through_channel(&mut self) -> bool {
        let candidate = self.live_boxes().find_map(|(i, b)| {
            let BoxKind::Gen(g) = &b.kind else {
                return None;
            };
            let gen = self.sig.generator(g)?;
            if !gen.flags.is_channel || gen.cod.is_empty() {
                return None;
            }
            let mut discards = Vec::new();
            for p in 0..gen.cod.len() {
                let wi = self.wire_from(&WireSrc::Box(b.id.clone(), p))?;
                let dst = self.wires[wi].as_ref().unwrap().dst.clone();
                if !self.is_discard(&dst) {
                    return None;
                }
                discards.push((wi, dst));
            }
            Some((i, discards))
        });
        let Some((bi, discards)) = candidate else {
            return false;
        };
        let bid = self.boxes[bi].as_ref().unwrap().id.clone();
        for (wi, dst) in discards {
            self.wires[wi] = None;
            if let WireDst::Box(did, _) = dst {
                let di = self.box_idx(&did).unwrap();
                self.boxes[di] = None;
            }
        }
        let (dom, _) = kind_interface(&self.sig, &self.boxes[bi].as_ref().unwrap().kind);
        for (p, var) in dom.iter().enumerate() {
            let in_wi = self.wire_to(&WireDst::Box(bid.clone(), p)).unwrap();
            let new_id = self.fresh_discard_id();
            self.boxes.push(Some(DiagBox {
                id: new_id.clone(),
                kind: BoxKind::Discard { var: var.clone() },
            }));
            self.wires[in_wi].as_mut().unwrap().dst = WireDst::Box(new_id, 0);
        }
        self.boxes[bi] = None;
        true
    }

    /// A swap output feeding a discard becomes a discard on the matching
    /// input, with the other wire passing straight through.
    fn simplify_swap_discard(&mut self) -> bool {
        let candidate = self.live_boxes().find_map(|(i, b)| {
            let BoxKind::Swap { .. } = &b.kind else {
                return None;
            };
            for p in 0..2 {
                let wi = self.wire_from(&WireSrc::Box(b.id.clone(), p))?;
                let dst = self.wires[wi].as_ref().unwrap().dst.clone();
                if self.is_discard(&dst) {
                    return Some((i, p, wi, dst));
                }
            }
            None
        });
        let Some((bi, p, wi, dst)) = candidate else {
            return false;
        };
        let bid = self.boxes[bi].as_ref().unwrap().id.clone();
        let WireDst::Box(did, _) = dst else {
            unreachable!()
        };
        let di = self.box_idx(&did).unwrap();

        // Output p of a swap carries input 1-p; the other output carries p's
        // counterpart.
        let dead_in = 1 - p;
        let live_in = p;
        let live_out = 1 - p;

        let dead_in_wi = self.wire_to(&WireDst::Box(bid.clone(), dead_in)).unwrap();
        let live_in_wi = self.wire_to(&WireDst::Box(bid.clone(), live_in)).unwrap();
        let live_out_wi = self.wire_from(&WireSrc::Box(bid.clone(), live_out)).unwrap();

        let new_id = self.fresh_discard_id();
        let dead_var = self.wires[dead_in_wi].as_ref().unwrap().var.clone();
        self.boxes.push(Some(DiagBox {
            id: new_id.clone(),
            kind: BoxKind::Discard { var: dead_var },
        }));
        self.wires[dead_in_wi].as_mut().unwrap().dst = WireDst::Box(new_id, 0);

        let live_src = self.wires[live_in_wi].as_ref().unwrap().src.clone();
        self.wires[live_out_wi].as_mut().unwrap().src = live_src;
        self.wires[live_in_wi] = None;
        self.wires[wi] = None;
        self.boxes[bi] = None;
        self.boxes[di] = None;
        true
    }

    /// Adjacent inverse swaps cancel to plain wires.
    fn cancel_swap_pair(&mut self) -> bool {
        let candidate = self.live_boxes().find_map(|(i, b)| {
            let BoxKind::Swap { .. } = &b.kind else {
                return None;
            };
            let w0 = self.wire_from(&WireSrc::Box(b.id.clone(), 0))?;
            let w1 = self.wire_from(&WireSrc::Box(b.id.clone(), 1))?;
            let d0 = self.wires[w0].as_ref().unwrap().dst.clone();
            let d1 = self.wires[w1].as_ref().unwrap().dst.clone();
            if let (WireDst::Box(c0, 0), WireDst::Box(c1, 1)) = (&d0, &d1) {
                if c0 == c1 {
                    let ci = self.box_idx(c0)?;
                    if matches!(
                        self.boxes[ci].as_ref().unwrap().kind,
                        BoxKind::Swap { .. }
                    ) {
                        return Some((i, ci, w0, w1));
                    }
                }
            }
            None
        });
        let Some((bi, ci, w0, w1)) = candidate else {
            return false;
        };
        let bid = self.boxes[bi].as_ref().unwrap().id.clone();
        let cid = self.boxes[ci].as_ref().unwrap().id.clone();

        let in0 = self.wire_to(&WireDst::Box(bid.clone(), 0)).unwrap();
        let in1 = self.wire_to(&WireDst::Box(bid.clone(), 1)).unwrap();
        let out0 = self.wire_from(&WireSrc::Box(cid.clone(), 0)).unwrap();
        let out1 = self.wire_from(&WireSrc::Box(cid.clone(), 1)).unwrap();

        // First input passes to the second composite output and vice versa.
        let src0 = self.wires[in0].as_ref().unwrap().src.clone();
        let src1 = self.wires[in1].as_ref().unwrap().src.clone();
        self.wires[out0].as_mut().unwrap().src = src0;
        self.wires[out1].as_mut().unwrap().src = src1;
        self.wires[in0] = None;
        self.wires[in1] = None;
        self.wires[w0] = None;
        self.wires[w1] = None;
        self.boxes[bi] = None;
        self.boxes[ci] = None;
        true
    }

    fn finish(self) -> Diagram {
        Diagram {
            sig: self.sig,
            boxes: self.boxes.into_iter().flatten().collect(),
            wires: self.wires.into_iter().flatten().collect(),
            inputs: self.inputs,
            outputs: self.outputs,
        }
    }
}

// ---------------------------------------------------------------------------
// Isomorphism of normalized diagrams
// ---------------------------------------------------------------------------

fn kinds_match(a: &BoxKind, b: &BoxKind) -> bool {
    a == b
}

fn iso_normalized(d1: &Diagram, d2: &Diagram) -> bool {
    if d1.inputs != d2.inputs
        || d1.outputs != d2.outputs
        || d1.boxes.len() != d2.boxes.len()
        || d1.wires.len() != d2.wires.len()
    {
        return false;
    }
    let idx1: BTreeMap<&str, usize> = d1
        .boxes
        .iter()
        .enumerate()
        .map(|(i, b)| (b.id.as_str(), i))
        .collect();
    let idx2: BTreeMap<&str, usize> = d2
        .boxes
        .iter()
        .enumerate()
        .map(|(i, b)| (b.id.as_str(), i))
        .collect();

    let mut map: BTreeMap<usize, usize> = BTreeMap::new();
    let mut rev: BTreeMap<usize, usize> = BTreeMap::new();
    let mut queue: VecDeque<(usize, usize)> = VecDeque::new();

    let pair = |b1: usize,
                    b2: usize,
                    map: &mut BTreeMap<usize, usize>,
                    rev: &mut BTreeMap<usize, usize>,
                    queue: &mut VecDeque<(usize, usize)>|
     -> bool {
        if !kinds_match(&d1.boxes[b1].kind, &d2.boxes[b2].kind) {
            return false;
        }
        match (map.get(&b1), rev.get(&b2)) {
            (Some(&m), Some(&r)) => m == b2 && r == b1,
            (None, None) => {
                map.insert(b1, b2);
                rev.insert(b2, b1);
                queue.push_back((b1, b2));
                true
            }
            _ => false,
        }
    };

    // Anchor at the ordered boundaries.
    for i in 0..d1.inputs.len() {
        let w1 = d1.wire_from(&WireSrc::Input(i));
        let w2 = d2.wire_from(&WireSrc::Input(i));
        match (w1, w2) {
            (Some(w1), Some(w2)) => match (&w1.dst, &w2.dst) {
                (WireDst::Output(a), WireDst::Output(b)) => {
                    if a != b {
                        return false;
                    }
                }
                (WireDst::Box(a, pa), WireDst::Box(b, pb)) => {
                    if pa != pb || !pair(idx1[a.as_str()], idx2[b.as_str()], &mut map, &mut rev, &mut queue)
                    {
                        return false;
                    }
                }
                _ => return false,
            },
            _ => return false,
        }
    }
    for j in 0..d1.outputs.len() {
        let w1 = d1.wire_to(&WireDst::Output(j));
        let w2 = d2.wire_to(&WireDst::Output(j));
        match (w1, w2) {
            (Some(w1), Some(w2)) => match (&w1.src, &w2.src) {
                (WireSrc::Input(a), WireSrc::Input(b)) => {
                    if a != b {
                        return false;
                    }
                }
                (WireSrc::Box(a, pa), WireSrc::Box(b, pb)) => {
                    if pa != pb || !pair(idx1[a.as_str()], idx2[b.as_str()], &mut map, &mut rev, &mut queue)
                    {
                        return false;
                    }
                }
                _ => return false,
            },
            _ => return false,
        }
    }

    // Forced propagation through mapped boxes.
    while let Some((b1, b2)) = queue.pop_front() {
        let (dom, cod) = kind_interface(&d1.sig, &d1.boxes[b1].kind);
        for p in 0..dom.len() {
            let w1 = d1.wire_to(&WireDst::Box(d1.boxes[b1].id.clone(), p));
            let w2 = d2.wire_to(&WireDst::Box(d2.boxes[b2].id.clone(), p));
            match (w1, w2) {
                (Some(w1), Some(w2)) => match (&w1.src, &w2.src) {
                    (WireSrc::Input(a), WireSrc::Input(b)) => {
                        if a != b {
                            return false;
                        }
                    }
                    (WireSrc::Box(a, pa), WireSrc::Box(b, pb)) => {
                        if pa != pb
                            || !pair(
                                idx1[a.as_str()],
                                idx2[b.as_str()],
                                &mut map,
                                &mut rev,
                                &mut queue,
                            )
                        {
                            return false;
                        }
                    }
                    _ => return false,
                },
                _ => return false,
            }
        }
        for p in 0..cod.len() {
            let w1 = d1.wire_from(&WireSrc::Box(d1.boxes[b1].id.clone(), p));
            let w2 = d2.wire_from(&WireSrc::Box(d2.boxes[b2].id.clone(), p));
            match (w1, w2) {
                (Some(w1), Some(w2)) => match (&w1.dst, &w2.dst) {
                    (WireDst::Output(a), WireDst::Output(b)) => {
                        if a != b {
                            return false;
                        }
                    }
                    (WireDst::Box(a, pa), WireDst::Box(b, pb)) => {
                        if pa != pb
                            || !pair(
                                idx1[a.as_str()],
                                idx2[b.as_str()],
                                &mut map,
                                &mut rev,
                                &mut queue,
                            )
                        {
                            return false;
                        }
                    }
                    _ => return false,
                },
                _ => return false,
            }
        }
    }

    // Boundary-connected boxes are now matched; whatever remains lives in
    // floating components (e.g. non-channel scalar subgraphs). Match those by
    // backtracking.
    let rest1: Vec<usize> = (0..d1.boxes.len()).filter(|i| !map.contains_key(i)).collect();
    let rest2: Vec<usize> = (0..d2.boxes.len()).filter(|i| !rev.contains_key(i)).collect();
    if rest1.len() != rest2.len() {
        return false;
    }
    if rest1.is_empty() {
        return true;
    }
    match_floating(d1, d2, &rest1, &rest2, &mut map, &mut rev)
}

/// Backtracking assignment for boxes unreachable from the boundary.
fn match_floating(
    d1: &Diagram,
    d2: &Diagram,
    rest1: &[usize],
    rest2: &[usize],
    map: &mut BTreeMap<usize, usize>,
    rev: &mut BTreeMap<usize, usize>,
) -> bool {
    let Some(&b1) = rest1.iter().find(|i| !map.contains_key(i)) else {
        return true;
    };
    let idx1: BTreeMap<&str, usize> = d1
        .boxes
        .iter()
        .enumerate()
        .map(|(i, b)| (b.id.as_str(), i))
        .collect();
    let idx2: BTreeMap<&str, usize> = d2
        .boxes
        .iter()
        .enumerate()
        .map(|(i, b)| (b.id.as_str(), i))
        .collect();
    let candidates: Vec<usize> = rest2
        .iter()
        .copied()
        .filter(|i| !rev.contains_key(i))
        .collect();
    'cands: for b2 in candidates {
        if !kinds_match(&d1.boxes[b1].kind, &d2.boxes[b2].kind) {
            continue;
        }
        // Consistency with already-assigned neighbours.
        let (dom, cod) = kind_interface(&d1.sig, &d1.boxes[b1].kind);
        for p in 0..dom.len() {
            let w1 = d1.wire_to(&WireDst::Box(d1.boxes[b1].id.clone(), p));
            let w2 = d2.wire_to(&WireDst::Box(d2.boxes[b2].id.clone(), p));
            let (Some(w1), Some(w2)) = (w1, w2) else {
                continue 'cands;
            };
            if let (WireSrc::Box(a, pa), WireSrc::Box(b, pb)) = (&w1.src, &w2.src) {
                if pa != pb {
                    continue 'cands;
                }
                let (ai, bi) = (idx1[a.as_str()], idx2[b.as_str()]);
                if let Some(&m) = map.get(&ai) {
                    if m != bi {
                        continue 'cands;
                    }
                }
            } else {
                continue 'cands;
            }
        }
        for p in 0..cod.len() {
            let w1 = d1.wire_from(&WireSrc::Box(d1.boxes[b1].id.clone(), p));
            let w2 = d2.wire_from(&WireSrc::Box(d2.boxes[b2].id.clone(), p));
            let (Some(w1), Some(w2)) = (w1, w2) else {
                continue 'cands;
            };
            if let (WireDst::Box(a, pa), WireDst::Box(b, pb)) = (&w1.dst, &w2.dst) {
                if pa != pb {
                    continue 'cands;
                }
                let (ai, bi) = (idx1[a.as_str()], idx2[b.as_str()]);
                if let Some(&m) = map.get(&ai) {
                    if m != bi {
                        continue 'cands;
                    }
                }
            } else {
                continue 'cands;
            }
        }
        map.insert(b1, b2);
        rev.insert(b2, b1);
        if match_floating(d1, d2, rest1, rest2, map, rev) {
            return true;
        }
        map.remove(&b1);
        rev.remove(&b2);
    }
    false
}
