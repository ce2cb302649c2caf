//! Causal fixtures: the sprinkler model, the smoking network and the
//! aspirin functional causal model. Structures follow the classic examples;
//! the table numbers are fixture choices (dyadic, so exact-equality checks
//! stay exact).

use std::collections::{BTreeMap, BTreeSet};

use super::rule_based::{add_sharp_states, label_all_states, state_gen_name};
use super::{ZooError, ZooModel};
use crate::causal::{Fcm, MechSpec, OpenCausalModel};
use crate::interpret::Interpretation;
use crate::model::bind_model;
use crate::semantics::{Backend, MorphSem, ObjectSem, StochMatrix};
use crate::signature::{build_signature, Generator, Language, Variable};

/// A causal fixture: interpreted model plus its causal-model view.
pub struct CausalFixture {
    pub model: ZooModel,
    pub causal: OpenCausalModel,
}

/// Column-stochastic matrix from per-dom-tuple distribution rows.
fn cpt(dom: Vec<ObjectSem>, cod: ObjectSem, cols: &[&[f64]]) -> MorphSem {
    let d = crate::semantics::flat_size(&dom);
    assert_eq!(cols.len(), d);
    let c = cod.size();
    let mut data = vec![0.0; d * c];
    for (x, col) in cols.iter().enumerate() {
        assert_eq!(col.len(), c);
        for (r, &v) in col.iter().enumerate() {
            data[r * d + x] = v;
        }
    }
    MorphSem::Matrix(StochMatrix::new(dom, vec![cod], data))
}

/// The sprinkler model: season feeds sprinkler activation and rainfall,
/// which combine into wetness and then slipperiness. Deterministic tables,
/// so it also powers the rewrite-explanation example.
pub fn sprinkler_model() -> Result<CausalFixture, ZooError> {
    let se = ObjectSem::ProbSpace(vec![
        "winter".into(),
        "spring".into(),
        "summer".into(),
        "autumn".into(),
    ]);
    let sp = ObjectSem::ProbSpace(vec!["on".into(), "off".into()]);
    let r = ObjectSem::ProbSpace(vec!["rain".into(), "dry".into()]);
    let w = ObjectSem::ProbSpace(vec!["wet".into(), "dry".into()]);
    let sl = ObjectSem::ProbSpace(vec!["slippery".into(), "safe".into()]);

    let variables: Vec<Variable> = ["Se", "R", "Sp", "W", "Sl"]
        .into_iter()
        .map(Variable::new)
        .collect();
    let mut objects = BTreeMap::new();
    objects.insert("Se".to_string(), se.clone());
    objects.insert("Sp".to_string(), sp.clone());
    objects.insert("R".to_string(), r.clone());
    objects.insert("W".to_string(), w.clone());
    objects.insert("Sl".to_string(), sl.clone());

    let mut generators = vec![
        Generator::deterministic("f", vec!["Se".into()], vec!["Sp".into()]),
        Generator::deterministic("g", vec!["Se".into()], vec!["R".into()]),
        Generator::deterministic("h", vec!["R".into(), "Sp".into()], vec!["W".into()]),
        Generator::deterministic("k", vec!["W".into()], vec!["Sl".into()]),
    ];
    let mut morphs: BTreeMap<String, MorphSem> = BTreeMap::new();
    // Sprinkler runs in summer only; rain in winter and autumn.
    morphs.insert(
        "f".to_string(),
        cpt(
            vec![se.clone()],
            sp.clone(),
            &[&[0.0, 1.0], &[0.0, 1.0], &[1.0, 0.0], &[0.0, 1.0]],
        ),
    );
    morphs.insert(
        "g".to_string(),
        cpt(
            vec![se.clone()],
            r.clone(),
            &[&[1.0, 0.0], &[0.0, 1.0], &[0.0, 1.0], &[1.0, 0.0]],
        ),
    );
    // Wet iff rain or sprinkler on; dom order (R, Sp).
    morphs.insert(
        "h".to_string(),
        cpt(
            vec![r.clone(), sp.clone()],
            w.clone(),
            &[
                &[1.0, 0.0], // rain, on
                &[1.0, 0.0], // rain, off
                &[1.0, 0.0], // dry, on
                &[0.0, 1.0], // dry, off
            ],
        ),
    );
    morphs.insert(
        "k".to_string(),
        cpt(vec![w.clone()], sl.clone(), &[&[1.0, 0.0], &[0.0, 1.0]]),
    );
    add_sharp_states(&mut generators, &mut morphs, &objects);
    let sig = build_signature(variables, generators, Language::Cd)?;

    let binding = bind_model(&sig, Backend::Stoch, objects, morphs, BTreeMap::new())?;
    let causal = OpenCausalModel::from_mechanisms(
        binding.clone(),
        &[
            MechSpec { var: "Sp".into(), gen: "f".into() },
            MechSpec { var: "R".into(), gen: "g".into() },
            MechSpec { var: "W".into(), gen: "h".into() },
            MechSpec { var: "Sl".into(), gen: "k".into() },
        ],
        &["Se".to_string()],
        &["Sl".to_string()],
    )?;
    let mut distinguished = BTreeMap::new();
    distinguished.insert("main".to_string(), causal.network.diagram.clone());
    let binding = bind_model(
        &sig,
        Backend::Stoch,
        binding.objects().clone(),
        binding.morphisms().clone(),
        distinguished,
    )?;
    let causal = OpenCausalModel::new(binding.clone(), &causal.network.diagram)?;

    let mut interp = Interpretation::new(&binding);
    interp.set_var_term("Se", "Season");
    interp.set_var_term("R", "Rain");
    interp.set_var_term("Sp", "Sprinkler");
    interp.set_var_term("W", "Wetness");
    interp.set_var_term("Sl", "Slipperiness");
    interp.set_gen_term_concrete("f", "sprinkler activation");
    interp.set_gen_term_concrete("g", "avg. rainfall");
    interp.set_gen_term_concrete("h", "total moisture");
    interp.set_gen_term_concrete("k", "inducing slipperiness");
    label_all_states(&mut interp, &binding);
    let model = ZooModel::new(binding, interp, "sprinkler model")?;
    Ok(CausalFixture { model, causal })
}

/// The smoking network: age feeds background conditions, which feed the
/// choice to smoke; cancer depends on smoking, background and age. The
/// background variable is latent (not an output).
pub fn smoking_model() -> Result<CausalFixture, ZooError> {
    let a = ObjectSem::ProbSpace(vec!["young".into(), "mid".into(), "old".into()]);
    let b = ObjectSem::ProbSpace(vec!["low".into(), "high".into()]);
    let s = ObjectSem::ProbSpace(vec!["smokes".into(), "abstains".into()]);
    let l = ObjectSem::ProbSpace(vec!["cancer".into(), "healthy".into()]);

    let variables: Vec<Variable> = ["A", "B", "S", "L"].into_iter().map(Variable::new).collect();
    let mut objects = BTreeMap::new();
    objects.insert("A".to_string(), a.clone());
    objects.insert("B".to_string(), b.clone());
    objects.insert("S".to_string(), s.clone());
    objects.insert("L".to_string(), l.clone());

    let mut generators = vec![
        Generator::channel("c_A", vec![], vec!["A".into()]),
        Generator::channel("c_B", vec!["A".into()], vec!["B".into()]),
        Generator::channel("c_S", vec!["B".into()], vec!["S".into()]),
        Generator::channel(
            "c_L",
            vec!["S".into(), "B".into(), "A".into()],
            vec!["L".into()],
        ),
    ];
    let mut morphs: BTreeMap<String, MorphSem> = BTreeMap::new();
    morphs.insert(
        "c_A".to_string(),
        MorphSem::Matrix(StochMatrix::state(&a, &[0.25, 0.5, 0.25])),
    );
    morphs.insert(
        "c_B".to_string(),
        cpt(
            vec![a.clone()],
            b.clone(),
            &[&[0.75, 0.25], &[0.5, 0.5], &[0.25, 0.75]],
        ),
    );
    morphs.insert(
        "c_S".to_string(),
        cpt(vec![b.clone()], s.clone(), &[&[0.5, 0.5], &[0.25, 0.75]]),
    );
    // dom order (S, B, A): 2 * 2 * 3 = 12 columns, row-major.
    let p_l: Vec<Vec<f64>> = {
        let mut cols = Vec::new();
        for si in 0..2 {
            for bi in 0..2 {
                for ai in 0..3 {
                    // Base risk grows with age; smoking multiplies it.
                    let base = [0.0625, 0.125, 0.25][ai];
                    let feed = if bi == 1 { 0.0625 } else { 0.0 };
                    let risk = if si == 0 {
                        (base + feed) * 2.0
                    } else {
                        base + feed
                    };
                    cols.push(vec![risk, 1.0 - risk]);
                }
            }
        }
        cols
    };
    morphs.insert(
        "c_L".to_string(),
        cpt(
            vec![s.clone(), b.clone(), a.clone()],
            l.clone(),
            &p_l.iter().map(|c| c.as_slice()).collect::<Vec<_>>(),
        ),
    );
    add_sharp_states(&mut generators, &mut morphs, &objects);
    let sig = build_signature(variables, generators, Language::Cd)?;

    let binding = bind_model(&sig, Backend::Stoch, objects, morphs, BTreeMap::new())?;
    let causal = OpenCausalModel::from_mechanisms(
        binding.clone(),
        &[
            MechSpec { var: "A".into(), gen: "c_A".into() },
            MechSpec { var: "B".into(), gen: "c_B".into() },
            MechSpec { var: "S".into(), gen: "c_S".into() },
            MechSpec { var: "L".into(), gen: "c_L".into() },
        ],
        &[],
        // B stays latent.
        &["S".to_string(), "L".to_string(), "A".to_string()],
    )?;
    let mut distinguished = BTreeMap::new();
    distinguished.insert("main".to_string(), causal.network.diagram.clone());
    let binding = bind_model(
        &sig,
        Backend::Stoch,
        binding.objects().clone(),
        binding.morphisms().clone(),
        distinguished,
    )?;
    let causal = OpenCausalModel::new(binding.clone(), &causal.network.diagram)?;

    let mut interp = Interpretation::new(&binding);
    interp.set_var_term("A", "age");
    interp.set_var_term("B", "background conditions");
    interp.set_var_term("S", "choice to smoke");
    interp.set_var_term("L", "lung cancer");
    interp.set_gen_term_concrete("c_A", "age distribution");
    interp.set_gen_term_concrete("c_B", "background given age");
    interp.set_gen_term_concrete("c_S", "smoking given background");
    interp.set_gen_term_concrete("c_L", "cancer risk");
    label_all_states(&mut interp, &binding);
    let model = ZooModel::new(binding, interp, "smoking causal network")?;
    Ok(CausalFixture { model, causal })
}

/// The aspirin FCM: did Mary take an aspirin (A), does she have a headache
/// (H), with exogenous U_A, U_H. The counterfactual "had she taken an
/// aspirin, would she still have a headache" evaluates to 1/3 under these
/// tables.
pub fn aspirin_fcm() -> Result<(ZooModel, Fcm), ZooError> {
    let ua = ObjectSem::ProbSpace(vec!["u0".into(), "u1".into()]);
    let uh = ObjectSem::ProbSpace(vec!["always".into(), "unless_aspirin".into(), "never".into()]);
    let a = ObjectSem::ProbSpace(vec!["y".into(), "n".into()]);
    let h = ObjectSem::ProbSpace(vec!["y".into(), "n".into()]);

    let variables: Vec<Variable> = ["U_A", "U_H", "A", "H"]
        .into_iter()
        .map(Variable::new)
        .collect();
    let mut objects = BTreeMap::new();
    objects.insert("U_A".to_string(), ua.clone());
    objects.insert("U_H".to_string(), uh.clone());
    objects.insert("A".to_string(), a.clone());
    objects.insert("H".to_string(), h.clone());

    let mut generators = vec![
        Generator::channel("lambda_A", vec![], vec!["U_A".into()]),
        Generator::channel("lambda_H", vec![], vec!["U_H".into()]),
        Generator::deterministic("f_A", vec!["U_A".into()], vec!["A".into()]),
        Generator::deterministic("f_H", vec!["A".into(), "U_H".into()], vec!["H".into()]),
    ];
    let mut morphs: BTreeMap<String, MorphSem> = BTreeMap::new();
    morphs.insert(
        "lambda_A".to_string(),
        MorphSem::Matrix(StochMatrix::state(&ua, &[0.625, 0.375])),
    );
    morphs.insert(
        "lambda_H".to_string(),
        MorphSem::Matrix(StochMatrix::state(&uh, &[0.25, 0.5, 0.25])),
    );
    // f_A: u0 -> n, u1 -> y.
    morphs.insert(
        "f_A".to_string(),
        cpt(vec![ua.clone()], a.clone(), &[&[0.0, 1.0], &[1.0, 0.0]]),
    );
    // f_H(a, u): always -> headache; unless_aspirin -> headache iff no
    // aspirin; never -> none. dom order (A, U_H).
    morphs.insert(
        "f_H".to_string(),
        cpt(
            vec![a.clone(), uh.clone()],
            h.clone(),
            &[
                &[1.0, 0.0], // (y, always)
                &[0.0, 1.0], // (y, unless_aspirin)
                &[0.0, 1.0], // (y, never)
                &[1.0, 0.0], // (n, always)
                &[1.0, 0.0], // (n, unless_aspirin)
                &[0.0, 1.0], // (n, never)
            ],
        ),
    );
    add_sharp_states(&mut generators, &mut morphs, &objects);
    let sig = build_signature(variables, generators, Language::Cd)?;
    let binding = bind_model(&sig, Backend::Stoch, objects, morphs, BTreeMap::new())?;
    let causal = OpenCausalModel::from_mechanisms(
        binding.clone(),
        &[
            MechSpec { var: "U_A".into(), gen: "lambda_A".into() },
            MechSpec { var: "U_H".into(), gen: "lambda_H".into() },
            MechSpec { var: "A".into(), gen: "f_A".into() },
            MechSpec { var: "H".into(), gen: "f_H".into() },
        ],
        &[],
        &["A".to_string(), "H".to_string()],
    )?;
    let mut distinguished = BTreeMap::new();
    distinguished.insert("main".to_string(), causal.network.diagram.clone());
    let binding = bind_model(
        &sig,
        Backend::Stoch,
        binding.objects().clone(),
        binding.morphisms().clone(),
        distinguished,
    )?;
    let causal = OpenCausalModel::new(binding.clone(), &causal.network.diagram)?;
    let mut exo = BTreeSet::new();
    exo.insert("U_A".to_string());
    exo.insert("U_H".to_string());
    let fcm = Fcm::new(causal, &exo)?;

    let mut interp = Interpretation::new(&binding);
    interp.set_var_term("U_A", "disposition to take aspirin");
    interp.set_var_term("U_H", "headache susceptibility");
    interp.set_var_term("A", "took an aspirin");
    interp.set_var_term("H", "woke with a headache");
    interp.set_gen_term_concrete("lambda_A", "aspirin noise");
    interp.set_gen_term_concrete("lambda_H", "headache noise");
    interp.set_gen_term_concrete("f_A", "aspirin decision");
    interp.set_gen_term_concrete("f_H", "headache outcome");
    label_all_states(&mut interp, &binding);
    let model = ZooModel::new(binding, interp, "aspirin FCM")?;
    Ok((model, fcm))
}

/// Helper: sharp-state generator name for `var = element`, re-exported for
/// fixture users.
pub fn fixture_state(var: &str, element: &str) -> String {
    state_gen_name(var, element)
}
