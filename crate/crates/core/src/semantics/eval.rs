//! Functorial evaluation of diagrams into a backend.
//!
//! The evaluator walks a deterministic topological schedule, keeping an
//! ordered list of live wires. Each step rotates the consumed wires to the
//! front and contracts the box against the accumulated morphism by index
//! arithmetic — dense `box ⊗ id` matrices are never materialized, so states
//! over large products stay linear in their size. The deterministic backend
//! instead evaluates pointwise per input tuple, which keeps rule-based
//! models with large carriers exhaustively sweepable.

use std::collections::BTreeMap;


use crate::diagram::{BoxKind, Diagram, WireDst, WireSrc};
use crate::model::ModelBinding;
use crate::semantics::{
    flat_index, flat_size, unflat_index, Backend, CMat, FnTable, KrausMorph, MorphSem, ObjectSem,
    SemanticsError, StochMatrix,
};

/// Evaluates a valid diagram under a binding: the functorial image of the
/// diagram in the binding's backend.
pub fn eval_diagram(binding: &ModelBinding, d: &Diagram) -> Result<MorphSem, SemanticsError> {
    let violations = d.validate();
    if !violations.is_empty() {
        return Err(SemanticsError::BadMorphism(format!(
            "diagram invalid: {}",
            violations[0]
        )));
    }
    if binding.backend() == Backend::Quant {
        if let Some(b) = d
            .boxes()
            .iter()
            .find(|b| matches!(b.kind, BoxKind::Copy { .. }))
        {
            return Err(SemanticsError::UnsupportedStructural(format!(
                "copy box `{}` has no quantum semantics",
                b.id
            )));
        }
    }
    for b in d.boxes() {
        if let BoxKind::Gen(g) = &b.kind {
            if binding.morph(g).is_none() {
                return Err(SemanticsError::UnboundGenerator(g.clone()));
            }
        }
    }
    match binding.backend() {
        Backend::FinFn => eval_pointwise(binding, d),
        _ => eval_layered(binding, d),
    }
}

/// Pointwise evaluation for the deterministic backend: one forward value
/// propagation per input tuple.
fn eval_pointwise(binding: &ModelBinding, d: &Diagram) -> Result<MorphSem, SemanticsError> {
    let dom_objs = objects_of(binding, d.input_vars())?;
    let cod_objs = objects_of(binding, d.output_vars())?;
    let topo = d
        .topo_order()
        .ok_or_else(|| SemanticsError::BadMorphism("cyclic diagram".into()))?;
    let dsize = flat_size(&dom_objs);
    let mut map = Vec::with_capacity(dsize);
    for x in 0..dsize {
        let idx = unflat_index(&dom_objs, x);
        let mut values: BTreeMap<WireSrc, usize> = BTreeMap::new();
        for (i, &v) in idx.iter().enumerate() {
            values.insert(WireSrc::Input(i), v);
        }
        for &bi in &topo {
            let bx = &d.boxes()[bi];
            let (dom_vars, _) = d.kind_interface(&bx.kind);
            let mut in_vals = Vec::with_capacity(dom_vars.len());
            for p in 0..dom_vars.len() {
                let w = d
                    .wire_to(&WireDst::Box(bx.id.clone(), p))
                    .expect("validated diagram");
                in_vals.push(*values.get(&w.src).expect("topological order"));
            }
            let out_vals: Vec<usize> = match &bx.kind {
                BoxKind::Gen(g) => {
                    let m = binding.morph(g).unwrap();
                    let MorphSem::FnTable(t) = m else {
                        return Err(SemanticsError::ObjectMismatch(format!(
                            "generator `{g}` is not bound to a function table"
                        )));
                    };
                    t.apply(&in_vals)
                }
                BoxKind::Copy { n, .. } => vec![in_vals[0]; *n],
                BoxKind::Discard { .. } => vec![],
                BoxKind::Swap { .. } => vec![in_vals[1], in_vals[0]],
            };
            for (q, v) in out_vals.into_iter().enumerate() {
                values.insert(WireSrc::Box(bx.id.clone(), q), v);
            }
        }
        let mut out_idx = Vec::with_capacity(cod_objs.len());
        for j in 0..d.output_vars().len() {
            let w = d.wire_to(&WireDst::Output(j)).expect("validated diagram");
            out_idx.push(*values.get(&w.src).expect("produced"));
        }
        map.push(flat_index(&cod_objs, &out_idx));
    }
    Ok(MorphSem::FnTable(FnTable {
        dom: dom_objs,
        cod: cod_objs,
        map,
    }))
}

/// Generic layered evaluation for matrix, Kraus and real-vector backends.
fn eval_layered(binding: &ModelBinding, d: &Diagram) -> Result<MorphSem, SemanticsError> {
    let backend = binding.backend();
    let in_objs = objects_of(binding, d.input_vars())?;
    let topo = d
        .topo_order()
        .ok_or_else(|| SemanticsError::BadMorphism("cyclic diagram".into()))?;

    // Live wires, identified by source endpoint, in accumulated cod order.
    let mut live: Vec<(WireSrc, ObjectSem)> = d
        .input_vars()
        .iter()
        .enumerate()
        .map(|(i, v)| Ok((WireSrc::Input(i), binding.object_or_err(v)?)))
        .collect::<Result<_, SemanticsError>>()?;
    let mut acc = MorphSem::identity(backend, &in_objs);

    for &bi in &topo {
        let bx = &d.boxes()[bi];
        let (dom_vars, _) = d.kind_interface(&bx.kind);
        let mut positions = Vec::with_capacity(dom_vars.len());
        for p in 0..dom_vars.len() {
            let w = d
                .wire_to(&WireDst::Box(bx.id.clone(), p))
                .expect("validated diagram");
            let pos = live
                .iter()
                .position(|(src, _)| src == &w.src)
                .expect("topological order");
            positions.push(pos);
        }
        // Bring consumed wires to the front, in port order, keeping the rest
        // in their current relative order.
        let k = positions.len();
        let rest: Vec<usize> = (0..live.len()).filter(|i| !positions.contains(i)).collect();
        let already_front = positions.iter().enumerate().all(|(r, &p)| p == r);
        if !already_front {
            let mut perm = vec![0usize; live.len()];
            for (rank, &p) in positions.iter().enumerate() {
                perm[p] = rank;
            }
            for (rank, &p) in rest.iter().enumerate() {
                perm[p] = k + rank;
            }
            acc = permute_cod(acc, &perm)?;
            let mut new_live = Vec::with_capacity(live.len());
            for &p in &positions {
                new_live.push(live[p].clone());
            }
            for &p in &rest {
                new_live.push(live[p].clone());
            }
            live = new_live;
        }

        let box_m = morph_for_kind(binding, &bx.kind)?;
        acc = apply_front(acc, &box_m, k)?;

        let mut new_live: Vec<(WireSrc, ObjectSem)> = box_m
            .cod()
            .iter()
            .enumerate()
            .map(|(q, o)| (WireSrc::Box(bx.id.clone(), q), o.clone()))
            .collect();
        new_live.extend_from_slice(&live[k..]);
        live = new_live;
    }

    // Route live wires onto the ordered output boundary.
    let mut perm = vec![0usize; live.len()];
    for j in 0..d.output_vars().len() {
        let w = d.wire_to(&WireDst::Output(j)).expect("validated diagram");
        let pos = live
            .iter()
            .position(|(src, _)| src == &w.src)
            .expect("open wire");
        perm[pos] = j;
    }
    let identity_perm = perm.iter().enumerate().all(|(i, &p)| p == i);
    if !identity_perm {
        acc = permute_cod(acc, &perm)?;
    }
    Ok(acc)
}

/// Reorders the cod factors of a morphism: old factor `i` moves to slot
/// `perm[i]`. Linear in the data.
fn permute_cod(m: MorphSem, perm: &[usize]) -> Result<MorphSem, SemanticsError> {
    match m {
        MorphSem::Matrix(m) => {
            let old = m.cod.clone();
            let mut new_cod = vec![old[0].clone(); old.len()];
            for (i, &p) in perm.iter().enumerate() {
                new_cod[p] = old[i].clone();
            }
            let d = m.dom_size();
            let rows = m.cod_size();
            let mut data = vec![0.0; m.data.len()];
            for r in 0..rows {
                let idx = unflat_index(&old, r);
                let mut new_idx = vec![0usize; idx.len()];
                for (i, &p) in perm.iter().enumerate() {
                    new_idx[p] = idx[i];
                }
                let nr = flat_index(&new_cod, &new_idx);
                data[nr * d..nr * d + d].copy_from_slice(&m.data[r * d..r * d + d]);
            }
            Ok(MorphSem::Matrix(StochMatrix {
                dom: m.dom,
                cod: new_cod,
                data,
            }))
        }
        MorphSem::Kraus(k) => {
            let old = k.cod.clone();
            let mut new_cod = vec![old[0].clone(); old.len()];
            for (i, &p) in perm.iter().enumerate() {
                new_cod[p] = old[i].clone();
            }
            let rows = flat_size(&old);
            let row_map: Vec<usize> = (0..rows)
                .map(|r| {
                    let idx = unflat_index(&old, r);
                    let mut new_idx = vec![0usize; idx.len()];
                    for (i, &p) in perm.iter().enumerate() {
                        new_idx[p] = idx[i];
                    }
                    flat_index(&new_cod, &new_idx)
                })
                .collect();
            let ops = k
                .ops
                .iter()
                .map(|op| {
                    let mut out = CMat::zeros(op.rows, op.cols);
                    for (r, &nr) in row_map.iter().enumerate() {
                        for c in 0..op.cols {
                            out.set(nr, c, op.get(r, c));
                        }
                    }
                    out
                })
                .collect();
            Ok(MorphSem::Kraus(KrausMorph {
                dom: k.dom,
                cod: new_cod,
                ops,
            }))
        }
        MorphSem::RealExpr(e) => {
            let objs = e.cod.clone();
            let p = MorphSem::permute_morph(&objs, perm);
            MorphSem::RealExpr(e).then(&p)
        }
        MorphSem::FnTable(t) => {
            let p = MorphSem::permute_morph(&t.cod.clone(), perm);
            MorphSem::FnTable(t).then(&p)
        }
    }
}

/// Contracts a box against the first `k` cod factors of the accumulated
/// morphism: `(box ⊗ id_rest) ∘ acc` without materializing the step.
fn apply_front(acc: MorphSem, box_m: &MorphSem, k: usize) -> Result<MorphSem, SemanticsError> {
    if acc.cod()[..k] != *box_m.dom() {
        return Err(SemanticsError::DimensionMismatch(format!(
            "box expects {:?}, live prefix is {:?}",
            box_m.dom(),
            &acc.cod()[..k]
        )));
    }
    match (acc, box_m) {
        (MorphSem::Matrix(acc), MorphSem::Matrix(bm)) => {
            let front: usize = acc.cod[..k].iter().map(|o| o.size()).product();
            let rest_objs = acc.cod[k..].to_vec();
            let rest: usize = rest_objs.iter().map(|o| o.size()).product();
            let d = acc.dom_size();
            let c = bm.cod_size();
            let mut cod = bm.cod.clone();
            cod.extend(rest_objs);
            let mut data = vec![0.0; c * rest * d];
            for ci in 0..c {
                for f in 0..front {
                    let w = bm.data[ci * front + f];
                    if w == 0.0 {
                        continue;
                    }
                    for r in 0..rest {
                        let src = (f * rest + r) * d;
                        let dst = (ci * rest + r) * d;
                        for x in 0..d {
                            data[dst + x] += w * acc.data[src + x];
                        }
                    }
                }
            }
            Ok(MorphSem::Matrix(StochMatrix {
                dom: acc.dom,
                cod,
                data,
            }))
        }
        (MorphSem::Kraus(acc), MorphSem::Kraus(bm)) => {
            let front: usize = acc.cod[..k].iter().map(|o| o.size()).product();
            let rest_objs = acc.cod[k..].to_vec();
            let rest: usize = rest_objs.iter().map(|o| o.size()).product();
            let c: usize = bm.cod.iter().map(|o| o.size()).product();
            let mut cod = bm.cod.clone();
            cod.extend(rest_objs);
            let mut ops = Vec::with_capacity(acc.ops.len() * bm.ops.len());
            for kb in &bm.ops {
                for ka in &acc.ops {
                    let mut out = CMat::zeros(c * rest, ka.cols);
                    for ci in 0..c {
                        for f in 0..front {
                            let w = kb.get(ci, f);
                            if w.norm_sqr() == 0.0 {
                                continue;
                            }
                            for r in 0..rest {
                                for x in 0..ka.cols {
                                    let v = out.get(ci * rest + r, x)
                                        + w * ka.get(f * rest + r, x);
                                    out.set(ci * rest + r, x, v);
                                }
                            }
                        }
                    }
                    ops.push(out);
                }
            }
            Ok(MorphSem::Kraus(KrausMorph {
                dom: acc.dom,
                cod,
                ops,
            }))
        }
        (MorphSem::RealExpr(acc), MorphSem::RealExpr(bm)) => {
            let rest_objs = acc.cod[k..].to_vec();
            let backend_id = MorphSem::identity(Backend::RealVec, &rest_objs);
            let MorphSem::RealExpr(id_rest) = backend_id else {
                unreachable!()
            };
            let step = bm.tensor(&id_rest);
            Ok(MorphSem::RealExpr(acc.then(&step)))
        }
        (acc, bm) => {
            // Fallback for the deterministic backend (unused in practice).
            let rest_objs = acc.cod()[k..].to_vec();
            let step = bm
                .clone()
                .tensor(&MorphSem::identity(acc.backend(), &rest_objs))?;
            acc.then(&step)
        }
    }
}

fn morph_for_kind(binding: &ModelBinding, kind: &BoxKind) -> Result<MorphSem, SemanticsError> {
    match kind {
        BoxKind::Gen(g) => binding
            .morph(g)
            .cloned()
            .ok_or_else(|| SemanticsError::UnboundGenerator(g.clone())),
        BoxKind::Copy { var, n } => {
            let obj = binding.object_or_err(var)?;
            MorphSem::copy_morph(&obj, *n)
        }
        BoxKind::Discard { var } => Ok(MorphSem::discard_morph(&binding.object_or_err(var)?)),
        BoxKind::Swap { a, b } => {
            let oa = binding.object_or_err(a)?;
            let ob = binding.object_or_err(b)?;
            Ok(MorphSem::permute_morph(&[oa, ob], &[1, 0]))
        }
    }
}

fn objects_of(binding: &ModelBinding, vars: &[String]) -> Result<Vec<ObjectSem>, SemanticsError> {
    vars.iter().map(|v| binding.object_or_err(v)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::bind_model;
    use crate::signature::{build_signature, Generator, Language, Variable};
    use std::collections::BTreeMap;

    /// A chain with fanout exercises the permute/contract paths directly.
    #[test]
    fn layered_matches_dense_composition() {
        let vars: Vec<Variable> = ["A", "B"].into_iter().map(Variable::new).collect();
        let gens = vec![
            Generator::channel("f", vec!["A".into()], vec!["B".into()]),
            Generator::channel("g", vec!["B".into(), "A".into()], vec!["A".into()]),
        ];
        let sig = build_signature(vars, gens, Language::Cd).unwrap();
        let a = ObjectSem::ProbSpace(vec!["a0".into(), "a1".into(), "a2".into()]);
        let b = ObjectSem::ProbSpace(vec!["b0".into(), "b1".into()]);
        let mut objects = BTreeMap::new();
        objects.insert("A".to_string(), a.clone());
        objects.insert("B".to_string(), b.clone());
        let mut morphs = BTreeMap::new();
        morphs.insert(
            "f".to_string(),
            MorphSem::Matrix(StochMatrix::new(
                vec![a.clone()],
                vec![b.clone()],
                vec![0.25, 0.5, 0.75, 0.75, 0.5, 0.25],
            )),
        );
        morphs.insert(
            "g".to_string(),
            MorphSem::Matrix(StochMatrix::from_columns(
                vec![b.clone(), a.clone()],
                vec![a.clone()],
                |xs| {
                    let mut col = vec![0.0; 3];
                    col[(xs[0] + xs[1]) % 3] = 1.0;
                    col
                },
            )),
        );
        let binding =
            bind_model(&sig, Backend::Stoch, objects, morphs, BTreeMap::new()).unwrap();

        // copy A, f on one branch, then g over (B, A) with a swap in
        // between: A -> copy -> (f ⊗ id) -> g.
        let copy = Diagram::copy(&sig, "A", 2);
        let f = Diagram::from_generator(&sig, "f").unwrap();
        let id_a = Diagram::identity(&sig, &["A".into()]);
        let g = Diagram::from_generator(&sig, "g").unwrap();
        let d = copy
            .compose_seq(&f.compose_par(&id_a).unwrap())
            .unwrap()
            .compose_seq(&g)
            .unwrap();
        let got = binding.eval(&d).unwrap();
        // Dense oracle: copy;(f ⊗ id);g assembled with tensor/then.
        let copy_m = MorphSem::copy_morph(&a, 2).unwrap();
        let f_m = binding.morph("f").unwrap().clone();
        let id_m = MorphSem::identity(Backend::Stoch, std::slice::from_ref(&a));
        let g_m = binding.morph("g").unwrap().clone();
        let want = copy_m.then(&f_m.tensor(&id_m).unwrap()).unwrap().then(&g_m).unwrap();
        assert_eq!(got.norm_dist(&want).unwrap(), 0.0);
    }
}
