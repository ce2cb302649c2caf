//! No-influence analysis: structural reachability certificates backed by
//! discard propagation, and exhaustive semantic verification.
//!
//! For diagrams of channels, absence of a directed path from an input to an
//! output already proves no-influence; the certificate carries the
//! simplified diagram in which discarding the other outputs severs the
//! input. The semantic check quantifies over all sharp inputs and is exact,
//! so structural verdicts can be machine-confirmed.

use std::collections::{BTreeSet, VecDeque};

use thiserror::Error;

use crate::diagram::{BoxId, BoxKind, Diagram, DiagramError, WireDst, WireSrc};
use crate::model::ModelBinding;
use crate::semantics::{
    flat_index, flat_size, unflat_index, Backend, MorphSem, SemanticsError,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InfluenceError {
    #[error("box `{0}` is not channel-flagged; analysis refused")]
    NonChannelBox(BoxId),
    #[error("input carrier is infinite; semantic analysis unavailable")]
    InfiniteCarrier,
    #[error("index out of range")]
    IndexOutOfRange,
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
    #[error(transparent)]
    Diagram(#[from] DiagramError),
}

/// Verdict of an influence query from one input to one output.
#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    /// No directed path; influence is impossible for channel diagrams.
    StructuralNoInfluence,
    /// Exhaustive check found all marginals equal.
    SemanticNoInfluence,
    /// Two input tuples differing only at the queried input produce
    /// different marginals at the queried output.
    InfluenceWitness {
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },
    /// Structural analysis could not rule influence out.
    Unknown,
}

#[derive(Debug, Clone)]
pub struct InfluenceCertificate {
    pub input_index: usize,
    pub output_index: usize,
    pub verdict: Verdict,
    /// For structural verdicts: the diagram after discarding the other
    /// outputs and letting discards fall through; the queried input ends in
    /// a plain discard.
    pub simplified: Option<Diagram>,
}

fn require_channels(d: &Diagram) -> Result<(), InfluenceError> {
    for b in d.boxes() {
        if let BoxKind::Gen(g) = &b.kind {
            let flags = d
                .signature()
                .generator(g)
                .map(|gen| gen.flags)
                .unwrap_or_default();
            if !flags.is_channel {
                return Err(InfluenceError::NonChannelBox(b.id.clone()));
            }
        }
    }
    Ok(())
}

/// Directed reachability from a diagram input to a diagram output.
fn reachable(d: &Diagram, in_idx: usize, out_idx: usize) -> bool {
    let mut seen_boxes: BTreeSet<BoxId> = BTreeSet::new();
    let mut queue: VecDeque<WireSrc> = VecDeque::new();
    queue.push_back(WireSrc::Input(in_idx));
    while let Some(src) = queue.pop_front() {
        let Some(w) = d.wire_from(&src) else { continue };
        match &w.dst {
            WireDst::Output(j) => {
                if *j == out_idx {
                    return true;
                }
            }
            WireDst::Box(id, _) => {
                if seen_boxes.insert(id.clone()) {
                    let b = d.box_by_id(id).expect("validated diagram");
                    let (_, cod) = d.kind_interface(&b.kind);
                    for q in 0..cod.len() {
                        queue.push_back(WireSrc::Box(id.clone(), q));
                    }
                }
            }
        }
    }
    false
}

/// Appends discards to every output except `keep_outputs`, then normalizes,
/// letting the discards fall through channel boxes.
pub fn discard_simplify(d: &Diagram, keep_outputs: &[usize]) -> Result<Diagram, InfluenceError> {
    require_channels(d)?;
    let keep: BTreeSet<usize> = keep_outputs.iter().copied().collect();
    if let Some(&bad) = keep.iter().find(|&&i| i >= d.output_vars().len()) {
        let _ = bad;
        return Err(InfluenceError::IndexOutOfRange);
    }
    let mut post = Diagram::identity(d.signature(), &[]);
    let mut kept_vars = Vec::new();
    for (j, v) in d.output_vars().iter().enumerate() {
        let piece = if keep.contains(&j) {
            kept_vars.push(v.clone());
            Diagram::identity(d.signature(), std::slice::from_ref(v))
        } else {
            Diagram::discard(d.signature(), v)
        };
        post = post.compose_par(&piece)?;
    }
    Ok(d.compose_seq(&post)?.normalize())
}

/// Structural no-influence: reachability plus the discard-propagation
/// certificate.
pub fn structural_no_influence(
    d: &Diagram,
    in_idx: usize,
    out_idx: usize,
) -> Result<InfluenceCertificate, InfluenceError> {
    require_channels(d)?;
    if in_idx >= d.input_vars().len() || out_idx >= d.output_vars().len() {
        return Err(InfluenceError::IndexOutOfRange);
    }
    if reachable(d, in_idx, out_idx) {
        return Ok(InfluenceCertificate {
            input_index: in_idx,
            output_index: out_idx,
            verdict: Verdict::Unknown,
            simplified: None,
        });
    }
    let simplified = discard_simplify(d, &[out_idx])?;
    debug_assert!(
        input_directly_discarded(&simplified, in_idx),
        "unreachable input must be severed by discard propagation"
    );
    Ok(InfluenceCertificate {
        input_index: in_idx,
        output_index: out_idx,
        verdict: Verdict::StructuralNoInfluence,
        simplified: Some(simplified),
    })
}

/// In a simplified diagram, the severed input feeds a discard directly.
pub fn input_directly_discarded(d: &Diagram, in_idx: usize) -> bool {
    match d.wire_from(&WireSrc::Input(in_idx)) {
        Some(w) => match &w.dst {
            WireDst::Box(id, _) => d
                .box_by_id(id)
                .is_some_and(|b| matches!(b.kind, BoxKind::Discard { .. })),
            _ => false,
        },
        None => false,
    }
}

/// Exhaustive semantic no-influence on finite classical backends: compares
/// the marginal at `out_idx` across all pairs of sharp values at `in_idx`,
/// for every combination of the other inputs. Exact equality.
pub fn semantic_no_influence(
    binding: &ModelBinding,
    d: &Diagram,
    in_idx: usize,
    out_idx: usize,
) -> Result<InfluenceCertificate, InfluenceError> {
    if !matches!(binding.backend(), Backend::FinFn | Backend::Stoch) {
        return Err(InfluenceError::InfiniteCarrier);
    }
    if in_idx >= d.input_vars().len() || out_idx >= d.output_vars().len() {
        return Err(InfluenceError::IndexOutOfRange);
    }
    let marginal = binding.eval(d)?.marginal(&[out_idx])?;
    let dom_objs = marginal.dom().to_vec();
    let sizes: Vec<usize> = dom_objs.iter().map(|o| o.size()).collect();
    let total = flat_size(&dom_objs);
    let cod_size = flat_size(marginal.cod());

    // Column of the marginal channel at a flat input index.
    let column = |flat: usize| -> Vec<f64> {
        match &marginal {
            MorphSem::FnTable(t) => {
                let mut col = vec![0.0; cod_size];
                col[t.map[flat]] = 1.0;
                col
            }
            MorphSem::Matrix(m) => (0..cod_size).map(|r| m.data[r * total + flat]).collect(),
            _ => unreachable!("finite classical backends only"),
        }
    };

    // Enumerate combinations of the other inputs; vary the queried one.
    let mut idx = vec![0usize; sizes.len()];
    loop {
        let base_col = {
            idx[in_idx] = 0;
            column(flat_index(&dom_objs, &idx))
        };
        for v in 1..sizes[in_idx] {
            idx[in_idx] = v;
            let col = column(flat_index(&dom_objs, &idx));
            if col != base_col {
                let mut lhs = idx.clone();
                lhs[in_idx] = 0;
                return Ok(InfluenceCertificate {
                    input_index: in_idx,
                    output_index: out_idx,
                    verdict: Verdict::InfluenceWitness {
                        lhs,
                        rhs: idx.clone(),
                    },
                    simplified: None,
                });
            }
        }
        idx[in_idx] = 0;
        // Advance the other positions odometer-style.
        let mut k = sizes.len();
        loop {
            if k == 0 {
                let _ = unflat_index(&dom_objs, 0);
                return Ok(InfluenceCertificate {
                    input_index: in_idx,
                    output_index: out_idx,
                    verdict: Verdict::SemanticNoInfluence,
                    simplified: None,
                });
            }
            k -= 1;
            if k == in_idx {
                continue;
            }
            idx[k] += 1;
            if idx[k] < sizes[k] {
                break;
            }
            idx[k] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::bind_model;
    use crate::semantics::{FnTable, ObjectSem};
    use crate::signature::{build_signature, Generator, Language, Variable};
    use std::collections::BTreeMap;

    fn bools() -> ObjectSem {
        ObjectSem::FinSet(vec!["0".into(), "1".into()])
    }

    fn xor_model() -> (ModelBinding, Diagram) {
        let vars = ["A", "B", "C"].into_iter().map(Variable::new).collect();
        let gens = vec![
            Generator::deterministic("xor", vec!["A".into(), "B".into()], vec!["C".into()]),
            Generator::deterministic("konst", vec!["A".into()], vec!["C".into()]),
        ];
        let sig = build_signature(vars, gens, Language::Cd).unwrap();
        let b = bools();
        let mut objects = BTreeMap::new();
        for v in ["A", "B", "C"] {
            objects.insert(v.to_string(), b.clone());
        }
        let mut morphs = BTreeMap::new();
        morphs.insert(
            "xor".to_string(),
            MorphSem::FnTable(FnTable::from_fn(
                vec![b.clone(), b.clone()],
                vec![b.clone()],
                |xs| vec![xs[0] ^ xs[1]],
            )),
        );
        morphs.insert(
            "konst".to_string(),
            MorphSem::FnTable(FnTable::from_fn(vec![b.clone()], vec![b.clone()], |_| {
                vec![1]
            })),
        );
        let binding = bind_model(&sig, Backend::FinFn, objects, morphs, BTreeMap::new()).unwrap();
        let d = Diagram::from_generator(&sig, "xor").unwrap();
        (binding, d)
    }

    #[test]
    fn disjoint_product_has_structural_no_influence() {
        let (binding, _) = xor_model();
        let sig = binding.signature().clone();
        // konst(A) ⊗ xor(A,B): second input trio -> first output.
        let k = Diagram::from_generator(&sig, "konst").unwrap();
        let x = Diagram::from_generator(&sig, "xor").unwrap();
        let d = k.compose_par(&x).unwrap();
        // Inputs: [A, A, B]; outputs: [C, C]. Input 2 cannot reach output 0.
        let cert = structural_no_influence(&d, 2, 0).unwrap();
        assert_eq!(cert.verdict, Verdict::StructuralNoInfluence);
        let simplified = cert.simplified.unwrap();
        assert!(input_directly_discarded(&simplified, 2));
        // Soundness: semantics agrees.
        let sem = semantic_no_influence(&binding, &d, 2, 0).unwrap();
        assert_eq!(sem.verdict, Verdict::SemanticNoInfluence);
        // And the connected path reports Unknown structurally.
        let cert2 = structural_no_influence(&d, 0, 0).unwrap();
        assert_eq!(cert2.verdict, Verdict::Unknown);
    }

    #[test]
    fn xor_yields_influence_witness() {
        let (binding, d) = xor_model();
        let cert = semantic_no_influence(&binding, &d, 1, 0).unwrap();
        match cert.verdict {
            Verdict::InfluenceWitness { lhs, rhs } => {
                assert_eq!(lhs[0], rhs[0]);
                assert_ne!(lhs[1], rhs[1]);
            }
            v => panic!("expected witness, got {v:?}"),
        }
    }

    #[test]
    fn constant_box_semantically_uninfluenced_but_structurally_unknown() {
        let (binding, _) = xor_model();
        let sig = binding.signature().clone();
        let d = Diagram::from_generator(&sig, "konst").unwrap();
        let s = structural_no_influence(&d, 0, 0).unwrap();
        assert_eq!(s.verdict, Verdict::Unknown);
        let sem = semantic_no_influence(&binding, &d, 0, 0).unwrap();
        assert_eq!(sem.verdict, Verdict::SemanticNoInfluence);
    }

    #[test]
    fn non_channel_box_refused() {
        let vars = vec![Variable::new("A")];
        let gens = vec![Generator::new(
            "noisy",
            vec!["A".into()],
            vec!["A".into()],
            crate::signature::GenFlags::PLAIN,
        )];
        let sig = build_signature(vars, gens, Language::Cd).unwrap();
        let d = Diagram::from_generator(&sig, "noisy").unwrap();
        assert!(matches!(
            structural_no_influence(&d, 0, 0),
            Err(InfluenceError::NonChannelBox(_))
        ));
    }

    #[test]
    fn discard_simplify_keep_all_is_identity_modulo_normalize() {
        let (_, d) = xor_model();
        let s = discard_simplify(&d, &[0]).unwrap();
        assert!(s.iso_equal(&d));
    }
}
