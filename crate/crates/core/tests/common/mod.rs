//! Shared test support: deterministic random models and diagrams per
//! backend, plus independent oracles for the acceptance suite.
//!
//! Probabilities are dyadic rationals (multiples of 1/8) so that sums and
//! products stay exact in f64 regardless of evaluation order; the exactness
//! claims in the acceptance criteria rely on this.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use cim_core::causal::{Fcm, MechSpec, OpenCausalModel, World, WorldSpec};
use cim_core::diagram::{BoxKind, Diagram, DiagramBuilder, WireDst, WireSrc};
use cim_core::model::{bind_model, ModelBinding};
use cim_core::semantics::{
    Activation, Backend, CMat, Expr, FnTable, KrausMorph, MorphSem, ObjectSem, RealExpr,
    StochMatrix,
};
use cim_core::signature::{
    build_signature, GenFlags, Generator, Language, Variable,
};
use num_complex::Complex64;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random distribution with entries in multiples of 1/8, summing to one.
pub fn dyadic_dist(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut units = vec![0usize; n];
    for _ in 0..8 {
        units[rng.gen_range(0..n)] += 1;
    }
    units.into_iter().map(|u| u as f64 / 8.0).collect()
}

fn elements(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

/// A random model over 2–4 finite variables with channel generators of
/// arity ≤ 2 in and out, including states. Deterministic generators are
/// point-column tables.
pub fn random_classical_model(
    rng: &mut ChaCha8Rng,
    backend: Backend,
    max_carrier: usize,
) -> ModelBinding {
    assert!(matches!(backend, Backend::FinFn | Backend::Stoch));
    let n_vars = rng.gen_range(2..=4);
    let mut variables = Vec::new();
    let mut objects = BTreeMap::new();
    for i in 0..n_vars {
        let name = format!("V{i}");
        let carrier = elements("e", rng.gen_range(2..=max_carrier));
        let obj = match backend {
            Backend::FinFn => ObjectSem::FinSet(carrier),
            _ => ObjectSem::ProbSpace(carrier),
        };
        variables.push(Variable::new(name.clone()));
        objects.insert(name, obj);
    }
    let n_gens = rng.gen_range(3..=6);
    let mut generators = Vec::new();
    let mut morphs = BTreeMap::new();
    for gi in 0..n_gens {
        let name = format!("g{gi}");
        let dom_len = rng.gen_range(0..=2);
        let cod_len = rng.gen_range(1..=2);
        let dom: Vec<String> = (0..dom_len)
            .map(|_| format!("V{}", rng.gen_range(0..n_vars)))
            .collect();
        let cod: Vec<String> = (0..cod_len)
            .map(|_| format!("V{}", rng.gen_range(0..n_vars)))
            .collect();
        let deterministic = backend == Backend::FinFn || rng.gen_bool(0.3);
        let dom_objs: Vec<ObjectSem> = dom.iter().map(|v| objects[v].clone()).collect();
        let cod_objs: Vec<ObjectSem> = cod.iter().map(|v| objects[v].clone()).collect();
        let dsize = cim_core::semantics::flat_size(&dom_objs);
        let csize = cim_core::semantics::flat_size(&cod_objs);
        let morph = match backend {
            Backend::FinFn => {
                let map: Vec<usize> = (0..dsize).map(|_| rng.gen_range(0..csize)).collect();
                MorphSem::FnTable(FnTable::new(dom_objs, cod_objs, map).unwrap())
            }
            _ => {
                let mut data = vec![0.0; dsize * csize];
                for x in 0..dsize {
                    let col = if deterministic {
                        let mut col = vec![0.0; csize];
                        col[rng.gen_range(0..csize)] = 1.0;
                        col
                    } else {
                        dyadic_dist(rng, csize)
                    };
                    for (r, &v) in col.iter().enumerate() {
                        data[r * dsize + x] = v;
                    }
                }
                MorphSem::Matrix(StochMatrix::new(dom_objs, cod_objs, data))
            }
        };
        let flags = if deterministic {
            if dom.is_empty() {
                GenFlags::SHARP
            } else {
                GenFlags::DETERMINISTIC
            }
        } else {
            GenFlags::CHANNEL
        };
        generators.push(Generator::new(name.clone(), dom, cod, flags));
        morphs.insert(name, morph);
    }
    let sig = build_signature(variables, generators, Language::Cd).unwrap();
    bind_model(&sig, backend, objects, morphs, BTreeMap::new()).unwrap()
}

/// Random quantum model: qubit wires, unitary gates, dephasing noise,
/// pure states. Discard language, no copies.
pub fn random_quant_model(rng: &mut ChaCha8Rng) -> ModelBinding {
    let n_vars = rng.gen_range(1..=2);
    let mut variables = Vec::new();
    let mut objects = BTreeMap::new();
    for i in 0..n_vars {
        let name = format!("Q{i}");
        variables.push(Variable::new(name.clone()));
        objects.insert(name, ObjectSem::Hilbert(2));
    }
    let qubit = ObjectSem::Hilbert(2);
    let mut generators = Vec::new();
    let mut morphs = BTreeMap::new();
    let n_gens = rng.gen_range(3..=5);
    for gi in 0..n_gens {
        let name = format!("u{gi}");
        let var = format!("Q{}", rng.gen_range(0..n_vars));
        match rng.gen_range(0..4) {
            0 => {
                // Pure state cos|0> + sin|1>.
                let t: f64 = rng.gen_range(0.0..std::f64::consts::PI);
                let psi = [
                    Complex64::new(t.cos(), 0.0),
                    Complex64::new(t.sin(), 0.0),
                ];
                generators.push(Generator::channel(name.clone(), vec![], vec![var.clone()]));
                morphs.insert(
                    name,
                    MorphSem::Kraus(KrausMorph::pure_state(&qubit, &psi)),
                );
            }
            1 => {
                // Dephasing with dyadic p.
                let p = rng.gen_range(0..=4) as f64 / 8.0;
                let k0 = CMat::from_real(vec![
                    vec![(1.0 - p).sqrt(), 0.0],
                    vec![0.0, (1.0 - p).sqrt()],
                ]);
                let k1 = CMat::from_real(vec![vec![p.sqrt(), 0.0], vec![0.0, -(p.sqrt())]]);
                generators.push(Generator::channel(
                    name.clone(),
                    vec![var.clone()],
                    vec![var.clone()],
                ));
                morphs.insert(
                    name,
                    MorphSem::Kraus(KrausMorph::new(
                        vec![qubit.clone()],
                        vec![qubit.clone()],
                        vec![k0, k1],
                    )),
                );
            }
            2 => {
                // Two-qubit controlled phase-ish unitary.
                let var2 = format!("Q{}", rng.gen_range(0..n_vars));
                let t: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                let mut u = CMat::identity(4);
                u.set(3, 3, Complex64::new(t.cos(), t.sin()));
                generators.push(Generator::channel(
                    name.clone(),
                    vec![var.clone(), var2.clone()],
                    vec![var.clone(), var2.clone()],
                ));
                let objs = vec![objects[&var].clone(), objects[&var2].clone()];
                morphs.insert(name, MorphSem::Kraus(KrausMorph::pure(objs.clone(), objs, u)));
            }
            _ => {
                // Single-qubit rotation.
                let t: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                let u = CMat::from_rows(vec![
                    vec![
                        Complex64::new(t.cos(), 0.0),
                        Complex64::new(-t.sin(), 0.0),
                    ],
                    vec![Complex64::new(t.sin(), 0.0), Complex64::new(t.cos(), 0.0)],
                ]);
                generators.push(Generator::channel(
                    name.clone(),
                    vec![var.clone()],
                    vec![var.clone()],
                ));
                morphs.insert(
                    name,
                    MorphSem::Kraus(KrausMorph::pure(
                        vec![qubit.clone()],
                        vec![qubit.clone()],
                        u,
                    )),
                );
            }
        }
    }
    let sig = build_signature(variables, generators, Language::Discard).unwrap();
    bind_model(&sig, Backend::Quant, objects, morphs, BTreeMap::new()).unwrap()
}

/// Random real-vector model: small dims, affine + activation boxes.
pub fn random_realvec_model(rng: &mut ChaCha8Rng) -> ModelBinding {
    let n_vars = rng.gen_range(2..=3);
    let mut variables = Vec::new();
    let mut objects = BTreeMap::new();
    for i in 0..n_vars {
        let name = format!("R{i}");
        variables.push(Variable::new(name.clone()));
        objects.insert(name, ObjectSem::RealSpace(rng.gen_range(1..=3)));
    }
    let mut generators = Vec::new();
    let mut morphs = BTreeMap::new();
    let n_gens = rng.gen_range(3..=5);
    for gi in 0..n_gens {
        let name = format!("f{gi}");
        let dom_len = rng.gen_range(0..=2);
        let dom: Vec<String> = (0..dom_len)
            .map(|_| format!("R{}", rng.gen_range(0..n_vars)))
            .collect();
        let cod = vec![format!("R{}", rng.gen_range(0..n_vars))];
        let dom_objs: Vec<ObjectSem> = dom.iter().map(|v| objects[v].clone()).collect();
        let cod_objs: Vec<ObjectSem> = cod.iter().map(|v| objects[v].clone()).collect();
        let in_dim: usize = dom_objs.iter().map(|o| o.size()).sum();
        let out_dim: usize = cod_objs.iter().map(|o| o.size()).sum();
        let matrix: Vec<Vec<f64>> = (0..out_dim)
            .map(|_| (0..in_dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let bias: Vec<f64> = (0..out_dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let act = match rng.gen_range(0..3) {
            0 => Activation::Relu,
            1 => Activation::Tanh,
            _ => Activation::Id,
        };
        let expr = Expr::Seq(
            Box::new(Expr::Seq(
                Box::new(Expr::Linear(matrix)),
                Box::new(Expr::BiasAdd(bias)),
            )),
            Box::new(Expr::Activation(act, out_dim)),
        );
        generators.push(Generator::deterministic(name.clone(), dom, cod));
        morphs.insert(
            name,
            MorphSem::RealExpr(RealExpr::new(dom_objs, cod_objs, expr)),
        );
    }
    let sig = build_signature(variables, generators, Language::Cd).unwrap();
    bind_model(&sig, Backend::RealVec, objects, morphs, BTreeMap::new()).unwrap()
}

pub struct DiagramOpts {
    pub max_boxes: usize,
    pub max_width: usize,
    pub min_inputs: usize,
    pub max_inputs: usize,
    pub require_output: bool,
}

impl Default for DiagramOpts {
    fn default() -> Self {
        DiagramOpts {
            max_boxes: 10,
            max_width: 4,
            min_inputs: 0,
            max_inputs: 3,
            require_output: false,
        }
    }
}

/// Random valid diagram over the binding's signature, built by wiring open
/// sources forward into generator, copy, swap and discard boxes.
pub fn random_diagram(
    rng: &mut ChaCha8Rng,
    binding: &ModelBinding,
    opts: &DiagramOpts,
) -> Diagram {
    let sig = binding.signature().clone();
    let inputs: Vec<String> = {
        let n = rng.gen_range(opts.min_inputs..=opts.max_inputs);
        (0..n)
            .map(|_| {
                let vars = sig.variables();
                vars[rng.gen_range(0..vars.len())].name.clone()
            })
            .collect()
    };
    random_diagram_with_inputs(rng, binding, &inputs, opts)
}

/// Same, with a fixed input boundary (used to build composable pairs).
pub fn random_diagram_with_inputs(
    rng: &mut ChaCha8Rng,
    binding: &ModelBinding,
    inputs: &[String],
    opts: &DiagramOpts,
) -> Diagram {
    let sig = binding.signature().clone();
    let allow_copy = sig.language().allows_copy() && binding.backend().supports_copy();
    let allow_discard = sig.language().allows_discard();
    let mut builder = DiagramBuilder::new(&sig);
    let mut open: Vec<(WireSrc, String)> = Vec::new();
    for (i, v) in inputs.iter().enumerate() {
        builder.add_input(v.clone());
        open.push((WireSrc::Input(i), v.clone()));
    }
    let target_boxes = rng.gen_range(1..=opts.max_boxes);
    let mut placed = 0usize;
    let mut stall = 0usize;
    while placed < target_boxes && stall < 40 {
        stall += 1;
        let width = open.len();
        let choice = rng.gen_range(0..100);
        if choice < 55 {
            // Generator application: only generators whose width delta fits.
            let gens = sig.generators();
            let g = &gens[rng.gen_range(0..gens.len())];
            // Resulting width must stay within bounds.
            if width + g.cod.len() > opts.max_width + g.dom.len() {
                continue;
            }
            // Find open sources for each dom var (first match per var,
            // consuming as we go).
            let mut chosen: Vec<usize> = Vec::new();
            let mut ok = true;
            for v in &g.dom {
                let candidates: Vec<usize> = open
                    .iter()
                    .enumerate()
                    .filter(|(i, (_, var))| var == v && !chosen.contains(i))
                    .map(|(i, _)| i)
                    .collect();
                match candidates.as_slice() {
                    [] => {
                        ok = false;
                        break;
                    }
                    cs => chosen.push(cs[rng.gen_range(0..cs.len())]),
                }
            }
            if !ok {
                continue;
            }
            let b = builder.add_gen(&g.name);
            // Consume in descending index order to keep indices stable.
            let mut pairs: Vec<(usize, usize)> =
                chosen.iter().copied().enumerate().map(|(p, i)| (i, p)).collect();
            pairs.sort_by_key(|&(i, _)| std::cmp::Reverse(i));
            for (i, p) in pairs {
                let (src, var) = open.remove(i);
                builder.connect(src, WireDst::Box(b.clone(), p), var);
            }
            for (q, v) in g.cod.iter().enumerate() {
                open.push((WireSrc::Box(b.clone(), q), v.clone()));
            }
            placed += 1;
            stall = 0;
        } else if choice < 70 && allow_copy && width >= 1 && width < opts.max_width {
            let i = rng.gen_range(0..open.len());
            let (src, var) = open.remove(i);
            let n = 2;
            let b = builder.add_box(BoxKind::Copy {
                var: var.clone(),
                n,
            });
            builder.connect(src, WireDst::Box(b.clone(), 0), var.clone());
            for q in 0..n {
                open.push((WireSrc::Box(b.clone(), q), var.clone()));
            }
            placed += 1;
            stall = 0;
        } else if choice < 80 && allow_discard && width >= 1 {
            let i = rng.gen_range(0..open.len());
            let (src, var) = open.remove(i);
            let b = builder.add_box(BoxKind::Discard { var: var.clone() });
            builder.connect(src, WireDst::Box(b, 0), var);
            placed += 1;
            stall = 0;
        } else if width >= 2 {
            let i = rng.gen_range(0..open.len() - 1);
            let (src_a, var_a) = open.remove(i);
            let (src_b, var_b) = open.remove(i);
            let b = builder.add_box(BoxKind::Swap {
                a: var_a.clone(),
                b: var_b.clone(),
            });
            builder.connect(src_a, WireDst::Box(b.clone(), 0), var_a.clone());
            builder.connect(src_b, WireDst::Box(b.clone(), 1), var_b.clone());
            open.insert(i, (WireSrc::Box(b.clone(), 1), var_a));
            open.insert(i, (WireSrc::Box(b, 0), var_b));
            placed += 1;
            stall = 0;
        }
    }
    if opts.require_output && open.is_empty() {
        // Force one state generator output so the boundary is nonempty.
        let gens: Vec<_> = sig
            .generators()
            .iter()
            .filter(|g| g.dom.is_empty())
            .cloned()
            .collect();
        if let Some(g) = gens.first() {
            let b = builder.add_gen(&g.name);
            for (q, v) in g.cod.iter().enumerate() {
                open.push((WireSrc::Box(b.clone(), q), v.clone()));
            }
        }
    }
    for (j, (src, var)) in open.into_iter().enumerate() {
        builder.add_output(var.clone());
        builder.connect(src, WireDst::Output(j), var);
    }
    builder.finish().expect("generated diagram is valid")
}

// ---------------------------------------------------------------------------
// Random FCMs and the exhaustive counterfactual oracle
// ---------------------------------------------------------------------------

pub struct RandomFcm {
    pub fcm: Fcm,
    /// Endogenous variables in topological order.
    pub order: Vec<String>,
}

/// Random FCM with binary endogenous variables X1..Xn, each with its own
/// exogenous noise (carrier 2–3) and parents among the earlier variables.
pub fn random_fcm(rng: &mut ChaCha8Rng, n_endo: usize) -> RandomFcm {
    let mut variables = Vec::new();
    let mut objects = BTreeMap::new();
    let mut generators = Vec::new();
    let mut morphs = BTreeMap::new();
    let mut mechs = Vec::new();
    let mut order = Vec::new();
    for i in 0..n_endo {
        let x = format!("X{i}");
        let u = format!("U{i}");
        let x_obj = ObjectSem::ProbSpace(elements("v", 2));
        let u_obj = ObjectSem::ProbSpace(elements("w", rng.gen_range(2..=3)));
        variables.push(Variable::new(x.clone()));
        variables.push(Variable::new(u.clone()));
        objects.insert(x.clone(), x_obj.clone());
        objects.insert(u.clone(), u_obj.clone());

        let lam = format!("lam{i}");
        generators.push(Generator::channel(lam.clone(), vec![], vec![u.clone()]));
        morphs.insert(
            lam.clone(),
            MorphSem::Matrix(StochMatrix::state(&u_obj, &dyadic_dist(rng, u_obj.size()))),
        );
        mechs.push(MechSpec {
            var: u.clone(),
            gen: lam,
        });

        // Parents among earlier endogenous variables.
        let mut parents: Vec<String> = Vec::new();
        for j in 0..i {
            if rng.gen_bool(0.5) && parents.len() < 2 {
                parents.push(format!("X{j}"));
            }
        }
        let mut dom = parents.clone();
        dom.push(u.clone());
        let dom_objs: Vec<ObjectSem> = dom.iter().map(|v| objects[v].clone()).collect();
        let dsize = cim_core::semantics::flat_size(&dom_objs);
        let mut data = vec![0.0; dsize * 2];
        for c in 0..dsize {
            data[rng.gen_range(0..2) * dsize + c] = 1.0;
        }
        let f = format!("f{i}");
        generators.push(Generator::deterministic(f.clone(), dom, vec![x.clone()]));
        morphs.insert(
            f.clone(),
            MorphSem::Matrix(StochMatrix::new(dom_objs, vec![x_obj], data)),
        );
        mechs.push(MechSpec {
            var: x.clone(),
            gen: f,
        });
        order.push(x);
    }
    let sig = build_signature(variables, generators, Language::Cd).unwrap();
    let binding = bind_model(&sig, Backend::Stoch, objects, morphs, BTreeMap::new()).unwrap();
    let outputs: Vec<String> = order.clone();
    let model = OpenCausalModel::from_mechanisms(binding, &mechs, &[], &outputs).unwrap();
    let exo: BTreeSet<String> = (0..n_endo).map(|i| format!("U{i}")).collect();
    let fcm = Fcm::new(model, &exo).unwrap();
    RandomFcm { fcm, order }
}

/// Independent brute-force counterfactual: enumerate all joint exogenous
/// assignments, push values through the intervened deterministic parts per
/// world, filter on the observations, accumulate onto the query outputs.
/// Reads raw mechanism tables only.
pub fn counterfactual_oracle(fcm: &Fcm, spec: &WorldSpec, order: &[String]) -> Vec<f64> {
    let b = &fcm.base.binding;
    let sig = b.signature().clone();
    let exo_vars: Vec<String> = fcm.exogenous.keys().cloned().collect();
    let exo_sizes: Vec<usize> = exo_vars
        .iter()
        .map(|u| b.object(u).unwrap().size())
        .collect();
    let exo_dists: Vec<Vec<f64>> = exo_vars
        .iter()
        .map(|u| {
            let MorphSem::Matrix(m) = b.morph(&fcm.exogenous[u]).unwrap() else {
                panic!()
            };
            m.data.clone()
        })
        .collect();

    // Deterministic mechanism lookup: value of X given parent values.
    let mech_value = |x: &String, env: &BTreeMap<String, usize>| -> usize {
        let genname = &fcm.endogenous[x];
        let gen = sig.generator(genname).unwrap();
        let MorphSem::Matrix(m) = b.morph(genname).unwrap() else {
            panic!()
        };
        let mut flat = 0usize;
        for v in &gen.dom {
            flat = flat * b.object(v).unwrap().size() + env[v];
        }
        m.column_argmax(flat)
    };

    // Query layout: world-major, query order within a world.
    let mut query_objs = Vec::new();
    for (wi, w) in spec.worlds.iter().enumerate() {
        for q in &w.query {
            query_objs.push((wi, q.clone(), b.object(q).unwrap().size()));
        }
    }
    let out_size: usize = query_objs.iter().map(|(_, _, s)| s).product();
    let mut acc = vec![0.0; out_size.max(1)];
    let total_exo: usize = exo_sizes.iter().product();
    for flat in 0..total_exo {
        let mut rem = flat;
        let mut u_val: BTreeMap<String, usize> = BTreeMap::new();
        for (k, u) in exo_vars.iter().enumerate().rev() {
            u_val.insert(u.clone(), rem % exo_sizes[k]);
            rem /= exo_sizes[k];
        }
        let p: f64 = exo_vars
            .iter()
            .enumerate()
            .map(|(k, u)| exo_dists[k][u_val[u]])
            .product();
        if p == 0.0 {
            continue;
        }
        // Per-world propagation.
        let mut consistent = true;
        let mut world_vals: Vec<BTreeMap<String, usize>> = Vec::new();
        for w in &spec.worlds {
            let mut env = u_val.clone();
            for x in order {
                let val = if let Some(label) = w.interventions.get(x) {
                    b.object(x).unwrap().element_index(label).unwrap()
                } else {
                    mech_value(x, &env)
                };
                env.insert(x.clone(), val);
            }
            for (x, label) in &w.observations {
                let want = b.object(x).unwrap().element_index(label).unwrap();
                if env[x] != want {
                    consistent = false;
                    break;
                }
            }
            if !consistent {
                break;
            }
            world_vals.push(env);
        }
        if !consistent {
            continue;
        }
        let mut out_flat = 0usize;
        for (wi, q, size) in &query_objs {
            out_flat = out_flat * size + world_vals[*wi][q];
        }
        acc[out_flat] += p;
    }
    let z: f64 = acc.iter().sum();
    assert!(z > 0.0, "oracle: observations have zero probability");
    for v in acc.iter_mut() {
        *v /= z;
    }
    acc
}

/// Random world spec over a random FCM: one observing world, one intervened
/// queried world.
pub fn random_worldspec(rng: &mut ChaCha8Rng, fcm: &Fcm, order: &[String]) -> Option<WorldSpec> {
    let b = &fcm.base.binding;
    // Sample an actually-possible observation by simulating one exogenous
    // assignment forward.
    let joint = fcm.base.semantics().ok()?;
    let MorphSem::Matrix(m) = &joint else {
        return None;
    };
    let support: Vec<usize> = (0..m.data.len()).filter(|&i| m.data[i] > 0.0).collect();
    let pick = support[rng.gen_range(0..support.len())];
    let idx = cim_core::semantics::unflat_index(&m.cod, pick);
    // Outputs of the base model are the endogenous vars in mechanism order.
    let out_vars = fcm.base.network.outputs.clone();
    let mut observations = BTreeMap::new();
    for (k, v) in out_vars.iter().enumerate() {
        if rng.gen_bool(0.7) {
            let label = b.object(v).unwrap().elements().unwrap()[idx[k]].clone();
            observations.insert(v.clone(), label);
        }
    }
    if observations.is_empty() {
        let v = &out_vars[0];
        let label = b.object(v).unwrap().elements().unwrap()[idx[0]].clone();
        observations.insert(v.clone(), label);
    }
    let target = &order[rng.gen_range(0..order.len())];
    let mut interventions = BTreeMap::new();
    let tv = b.object(target).unwrap().elements().unwrap()
        [rng.gen_range(0..b.object(target).unwrap().size())]
    .clone();
    interventions.insert(target.clone(), tv);
    let query: Vec<String> = order
        .iter()
        .filter(|x| *x != target)
        .take(2)
        .cloned()
        .collect();
    if query.is_empty() {
        return None;
    }
    Some(WorldSpec {
        worlds: vec![
            World {
                observations,
                ..Default::default()
            },
            World {
                interventions,
                query,
                ..Default::default()
            },
        ],
    })
}
