//! Diagram surgery: box replacement, probes, input replacement, and
//! counterfactual-explanation search.
//!
//! Every operation produces a new diagram plus a record; originals are never
//! mutated. Probes relate an internal wire to further variables; the
//! copy-based observation probe provably leaves the original marginal
//! unchanged on classical backends.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::diagram::{
    splice_region, BoxId, BoxKind, Diagram, DiagramError, Wire, WireDst, WireSrc,
};
use crate::model::ModelBinding;
use crate::semantics::{
    flat_size, unflat_index, Backend, MorphSem, SemanticsError,
};
use crate::signature::VarName;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SurgeryError {
    #[error("box `{0}` not found")]
    BoxNotFound(BoxId),
    #[error("wire {0} not found")]
    WireNotFound(usize),
    #[error("interface mismatch: {0}")]
    InterfaceMismatch(String),
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
    #[error("signature language has no copy; use insert_probe with an explicit channel")]
    NoCopyInLanguage,
    #[error("probe generator `{0}` is not channel-flagged")]
    NotChannel(String),
    #[error("target output value is unreachable")]
    TargetUnreachable,
    #[error("input already achieves the target output")]
    TargetAlreadyAchieved,
    #[error("input carriers are infinite or model is not deterministic")]
    InfiniteCarrier,
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
    #[error(transparent)]
    Diagram(#[from] DiagramError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurgeryKind {
    ReplaceBox,
    Probe,
    ObserveProbe,
    ReplaceInput,
}

/// Result of a surgery: the untouched original, the validated result, and
/// where the cut happened.
#[derive(Debug, Clone)]
pub struct SurgeryRecord {
    pub original: Diagram,
    pub result: Diagram,
    pub kind: SurgeryKind,
    pub site: String,
    pub note: String,
}

/// Excises one box and splices a replacement diagram with the same
/// interface.
pub fn replace_box(
    d: &Diagram,
    box_id: &str,
    replacement: &Diagram,
) -> Result<SurgeryRecord, SurgeryError> {
    let b = d
        .box_by_id(box_id)
        .ok_or_else(|| SurgeryError::BoxNotFound(box_id.to_string()))?;
    let (dom, cod) = d.kind_interface(&b.kind);
    if replacement.input_vars() != dom.as_slice() || replacement.output_vars() != cod.as_slice() {
        return Err(SurgeryError::InterfaceMismatch(format!(
            "box `{box_id}` is {dom:?} -> {cod:?}, replacement is {:?} -> {:?}",
            replacement.input_vars(),
            replacement.output_vars()
        )));
    }
    let mut region = BTreeSet::new();
    region.insert(box_id.to_string());
    let in_wires: Vec<usize> = (0..dom.len())
        .map(|p| {
            d.wires()
                .iter()
                .position(|w| w.dst == WireDst::Box(box_id.to_string(), p))
                .expect("validated diagram")
        })
        .collect();
    let out_wires: Vec<usize> = (0..cod.len())
        .map(|q| {
            d.wires()
                .iter()
                .position(|w| w.src == WireSrc::Box(box_id.to_string(), q))
                .expect("validated diagram")
        })
        .collect();
    let result = splice_region(d, &region, &in_wires, &out_wires, replacement)?;
    Ok(SurgeryRecord {
        original: d.clone(),
        result,
        kind: SurgeryKind::ReplaceBox,
        site: box_id.to_string(),
        note: "box replaced".into(),
    })
}

/// Cuts a wire and splices in a probe channel `V -> V ⊗ C`, appending the
/// probe's class output to the boundary.
pub fn insert_probe(
    d: &Diagram,
    wire_index: usize,
    probe_gen: &str,
) -> Result<SurgeryRecord, SurgeryError> {
    let w = d
        .wires()
        .get(wire_index)
        .ok_or(SurgeryError::WireNotFound(wire_index))?
        .clone();
    let gen = d
        .signature()
        .generator(probe_gen)
        .ok_or_else(|| SurgeryError::TypeMismatch(format!("unknown generator `{probe_gen}`")))?
        .clone();
    if !gen.flags.is_channel {
        return Err(SurgeryError::NotChannel(probe_gen.to_string()));
    }
    if gen.dom != vec![w.var.clone()] || gen.cod.len() != 2 || gen.cod[0] != w.var {
        return Err(SurgeryError::TypeMismatch(format!(
            "probe must be `{0} -> {0} ⊗ C`, got {1:?} -> {2:?}",
            w.var, gen.dom, gen.cod
        )));
    }
    let class_var: VarName = gen.cod[1].clone();

    let mut boxes = d.boxes().to_vec();
    let probe_id = fresh_box_id(d, "probe");
    boxes.push(crate::diagram::DiagBox {
        id: probe_id.clone(),
        kind: BoxKind::Gen(probe_gen.to_string()),
    });
    let mut wires = d.wires().to_vec();
    let new_out = d.output_vars().len();
    wires[wire_index] = Wire {
        src: w.src.clone(),
        dst: WireDst::Box(probe_id.clone(), 0),
        var: w.var.clone(),
    };
    wires.push(Wire {
        src: WireSrc::Box(probe_id.clone(), 0),
        dst: w.dst.clone(),
        var: w.var.clone(),
    });
    wires.push(Wire {
        src: WireSrc::Box(probe_id.clone(), 1),
        dst: WireDst::Output(new_out),
        var: class_var.clone(),
    });
    let mut outputs = d.output_vars().to_vec();
    outputs.push(class_var);
    let result = rebuild(d, boxes, wires, d.input_vars().to_vec(), outputs)?;
    Ok(SurgeryRecord {
        original: d.clone(),
        result,
        kind: SurgeryKind::Probe,
        site: format!("wire {wire_index}"),
        note: format!("probe `{probe_gen}` inserted"),
    })
}

/// Observation probe: copies the wire and classifies one branch, so the
/// marginal on the pre-existing outputs is unchanged when downstream boxes
/// are channels. Requires copy in the language.
pub fn observe_probe(
    d: &Diagram,
    wire_index: usize,
    classifier_gen: &str,
) -> Result<SurgeryRecord, SurgeryError> {
    if !d.signature().language().allows_copy() {
        return Err(SurgeryError::NoCopyInLanguage);
    }
    let w = d
        .wires()
        .get(wire_index)
        .ok_or(SurgeryError::WireNotFound(wire_index))?
        .clone();
    let gen = d
        .signature()
        .generator(classifier_gen)
        .ok_or_else(|| {
            SurgeryError::TypeMismatch(format!("unknown generator `{classifier_gen}`"))
        })?
        .clone();
    if !gen.flags.is_channel {
        return Err(SurgeryError::NotChannel(classifier_gen.to_string()));
    }
    if gen.dom != vec![w.var.clone()] || gen.cod.len() != 1 {
        return Err(SurgeryError::TypeMismatch(format!(
            "classifier must be `{} -> C`, got {:?} -> {:?}",
            w.var, gen.dom, gen.cod
        )));
    }
    let class_var = gen.cod[0].clone();

    let mut boxes = d.boxes().to_vec();
    let copy_id = fresh_box_id(d, "obscopy");
    let cls_id = fresh_box_id(d, "obscls");
    boxes.push(crate::diagram::DiagBox {
        id: copy_id.clone(),
        kind: BoxKind::Copy {
            var: w.var.clone(),
            n: 2,
        },
    });
    boxes.push(crate::diagram::DiagBox {
        id: cls_id.clone(),
        kind: BoxKind::Gen(classifier_gen.to_string()),
    });
    let mut wires = d.wires().to_vec();
    let new_out = d.output_vars().len();
    wires[wire_index] = Wire {
        src: w.src.clone(),
        dst: WireDst::Box(copy_id.clone(), 0),
        var: w.var.clone(),
    };
    wires.push(Wire {
        src: WireSrc::Box(copy_id.clone(), 0),
        dst: w.dst.clone(),
        var: w.var.clone(),
    });
    wires.push(Wire {
        src: WireSrc::Box(copy_id.clone(), 1),
        dst: WireDst::Box(cls_id.clone(), 0),
        var: w.var.clone(),
    });
    wires.push(Wire {
        src: WireSrc::Box(cls_id.clone(), 0),
        dst: WireDst::Output(new_out),
        var: class_var.clone(),
    });
    let mut outputs = d.output_vars().to_vec();
    outputs.push(class_var);
    let result = rebuild(d, boxes, wires, d.input_vars().to_vec(), outputs)?;
    Ok(SurgeryRecord {
        original: d.clone(),
        result,
        kind: SurgeryKind::ObserveProbe,
        site: format!("wire {wire_index}"),
        note: format!("observed through `{classifier_gen}`"),
    })
}

/// Closes one input with a state generator; later inputs shift down.
pub fn replace_input(
    d: &Diagram,
    in_idx: usize,
    state_gen: &str,
) -> Result<SurgeryRecord, SurgeryError> {
    let var = d
        .input_vars()
        .get(in_idx)
        .ok_or(SurgeryError::WireNotFound(in_idx))?
        .clone();
    let gen = d
        .signature()
        .generator(state_gen)
        .ok_or_else(|| SurgeryError::TypeMismatch(format!("unknown generator `{state_gen}`")))?
        .clone();
    if !gen.dom.is_empty() || gen.cod != vec![var.clone()] {
        return Err(SurgeryError::TypeMismatch(format!(
            "state must be `-> {var}`, got {:?} -> {:?}",
            gen.dom, gen.cod
        )));
    }
    let mut boxes = d.boxes().to_vec();
    let state_id = fresh_box_id(d, "state");
    boxes.push(crate::diagram::DiagBox {
        id: state_id.clone(),
        kind: BoxKind::Gen(state_gen.to_string()),
    });
    let mut wires = Vec::with_capacity(d.wires().len());
    for w in d.wires() {
        let src = match &w.src {
            WireSrc::Input(i) if *i == in_idx => WireSrc::Box(state_id.clone(), 0),
            WireSrc::Input(i) if *i > in_idx => WireSrc::Input(i - 1),
            other => other.clone(),
        };
        wires.push(Wire {
            src,
            dst: w.dst.clone(),
            var: w.var.clone(),
        });
    }
    let mut inputs = d.input_vars().to_vec();
    inputs.remove(in_idx);
    let result = rebuild(d, boxes, wires, inputs, d.output_vars().to_vec())?;
    Ok(SurgeryRecord {
        original: d.clone(),
        result,
        kind: SurgeryKind::ReplaceInput,
        site: format!("input {in_idx}"),
        note: format!("closed with `{state_gen}`"),
    })
}

fn fresh_box_id(d: &Diagram, prefix: &str) -> BoxId {
    let mut k = 0usize;
    loop {
        let id = format!("{prefix}{k}");
        if d.box_by_id(&id).is_none() {
            return id;
        }
        k += 1;
    }
}

fn rebuild(
    d: &Diagram,
    boxes: Vec<crate::diagram::DiagBox>,
    wires: Vec<Wire>,
    inputs: Vec<VarName>,
    outputs: Vec<VarName>,
) -> Result<Diagram, SurgeryError> {
    let result = Diagram {
        sig: d.signature().clone(),
        boxes,
        wires,
        inputs,
        outputs,
    };
    let violations = result.validate();
    if let Some(v) = violations.first() {
        return Err(SurgeryError::Diagram(DiagramError::Invalid(v.to_string())));
    }
    Ok(result)
}

// ---------------------------------------------------------------------------
// Counterfactual-explanation search
// ---------------------------------------------------------------------------

/// Distance over input factors for CFE search.
#[derive(Debug, Clone, PartialEq)]
pub enum CfeDistance {
    Hamming,
    WeightedHamming(Vec<f64>),
}

impl CfeDistance {
    fn between(&self, a: &[usize], b: &[usize]) -> f64 {
        match self {
            CfeDistance::Hamming => a.iter().zip(b).filter(|(x, y)| x != y).count() as f64,
            CfeDistance::WeightedHamming(w) => a
                .iter()
                .zip(b)
                .enumerate()
                .filter(|(_, (x, y))| x != y)
                .map(|(i, _)| w.get(i).copied().unwrap_or(1.0))
                .sum(),
        }
    }
}

/// A counterfactual-explanation result: all inputs at minimal distance from
/// `input` whose output is `target`.
#[derive(Debug, Clone, PartialEq)]
pub struct CfeResult {
    pub minimal_inputs: Vec<Vec<usize>>,
    pub distance: f64,
}

/// Exhaustive CFE search over finite deterministic models. `target` is the
/// flat index of the desired output tuple. Returns all minimal-distance
/// alternatives in canonical tuple order — CFEs are not unique.
pub fn cfe_search(
    binding: &ModelBinding,
    d: &Diagram,
    input: &[usize],
    target: usize,
    distance: &CfeDistance,
) -> Result<CfeResult, SurgeryError> {
    let sem = binding.eval(d)?;
    let dom_objs = sem.dom().to_vec();
    let dom_size = flat_size(&dom_objs);
    if input.len() != dom_objs.len() {
        return Err(SurgeryError::TypeMismatch(format!(
            "input has {} factors, diagram expects {}",
            input.len(),
            dom_objs.len()
        )));
    }
    // The overall table: flat input -> flat output.
    let table: Vec<usize> = match (&sem, binding.backend()) {
        (MorphSem::FnTable(t), Backend::FinFn) => t.map.clone(),
        (MorphSem::Matrix(m), Backend::Stoch) => {
            if !m.is_deterministic(1e-12) {
                return Err(SurgeryError::InfiniteCarrier);
            }
            (0..dom_size).map(|x| m.column_argmax(x)).collect()
        }
        _ => return Err(SurgeryError::InfiniteCarrier),
    };
    let base_flat = crate::semantics::flat_index(&dom_objs, input);
    if table[base_flat] == target {
        return Err(SurgeryError::TargetAlreadyAchieved);
    }
    let _ = dom_size;
    let mut best: Option<(f64, Vec<Vec<usize>>)> = None;
    for (x, &mapped) in table.iter().enumerate() {
        if mapped != target {
            continue;
        }
        let tuple = unflat_index(&dom_objs, x);
        let dist = distance.between(input, &tuple);
        match &mut best {
            None => best = Some((dist, vec![tuple])),
            Some((b, set)) => {
                if dist < *b {
                    *b = dist;
                    set.clear();
                    set.push(tuple);
                } else if dist == *b {
                    set.push(tuple);
                }
            }
        }
    }
    match best {
        None => Err(SurgeryError::TargetUnreachable),
        Some((distance, minimal_inputs)) => Ok(CfeResult {
            minimal_inputs,
            distance,
        }),
    }
}
