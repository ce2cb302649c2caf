//! Rule-based models: scoring systems, decision lists and decision trees,
//! with complete concrete interpretations.

use std::collections::BTreeMap;

use super::{int_labels, ZooError, ZooModel};
use crate::diagram::{BoxKind, DiagramBuilder, WireDst, WireSrc};
use crate::interpret::Interpretation;
use crate::model::bind_model;
use crate::semantics::{Backend, FnTable, MorphSem, ObjectSem};
use crate::signature::{build_signature, GenFlags, Generator, Language, Variable, VarName};

/// One scoring rule: a predicate over a single input variable's elements and
/// the points it contributes when satisfied.
#[derive(Debug, Clone)]
pub struct ScoringRule {
    pub name: String,
    pub var: VarName,
    /// Elements (labels) on which the rule fires.
    pub satisfied: Vec<String>,
    pub points: i64,
}

/// Builds a scoring-system model over finite input carriers: each rule fires
/// on its variable, contributes its points, and the contributions are
/// totalled.
pub fn scoring_system(
    inputs: &[(VarName, Vec<String>)],
    rules: &[ScoringRule],
) -> Result<ZooModel, ZooError> {
    let mut variables: Vec<Variable> = Vec::new();
    let mut objects: BTreeMap<String, ObjectSem> = BTreeMap::new();
    for (v, elems) in inputs {
        variables.push(Variable::new(v.clone()));
        objects.insert(v.clone(), ObjectSem::FinSet(elems.clone()));
    }
    let bool_obj = ObjectSem::FinSet(vec!["0".into(), "1".into()]);
    variables.push(Variable::new("Fired"));
    objects.insert("Fired".to_string(), bool_obj.clone());

    // Contribution carriers per rule and the reachable total scores.
    let mut contrib_vars = Vec::new();
    for (ri, r) in rules.iter().enumerate() {
        let name = format!("C{ri}");
        variables.push(Variable::new(name.clone()));
        objects.insert(
            name.clone(),
            ObjectSem::FinSet(vec!["0".into(), r.points.to_string()]),
        );
        contrib_vars.push(name);
    }
    let mut reachable: Vec<i64> = vec![0];
    for r in rules {
        let mut next = Vec::new();
        for s in &reachable {
            next.push(*s);
            next.push(*s + r.points);
        }
        next.sort_unstable();
        next.dedup();
        reachable = next;
    }
    let score_labels: Vec<String> = reachable.iter().map(|s| s.to_string()).collect();
    variables.push(Variable::new("Score"));
    objects.insert(
        "Score".to_string(),
        ObjectSem::FinSet(score_labels.clone()),
    );

    let mut generators = Vec::new();
    let mut morphs: BTreeMap<String, MorphSem> = BTreeMap::new();
    for (ri, r) in rules.iter().enumerate() {
        let in_obj = objects
            .get(&r.var)
            .ok_or_else(|| ZooError::DomainMismatch(format!("unknown input `{}`", r.var)))?
            .clone();
        let gname = format!("rule_{}", r.name);
        generators.push(Generator::deterministic(
            gname.clone(),
            vec![r.var.clone()],
            vec!["Fired".into()],
        ));
        let satisfied = r.satisfied.clone();
        let elems: Vec<String> = in_obj.elements().unwrap().to_vec();
        morphs.insert(
            gname,
            MorphSem::FnTable(FnTable::from_fn(
                vec![in_obj.clone()],
                vec![bool_obj.clone()],
                move |xs| vec![usize::from(satisfied.contains(&elems[xs[0]]))],
            )),
        );
        let pname = format!("points_{}", r.name);
        generators.push(Generator::deterministic(
            pname.clone(),
            vec!["Fired".into()],
            vec![contrib_vars[ri].clone()],
        ));
        morphs.insert(
            pname,
            MorphSem::FnTable(FnTable::from_fn(
                vec![bool_obj.clone()],
                vec![objects[&contrib_vars[ri]].clone()],
                |xs| vec![xs[0]],
            )),
        );
    }
    // Total: sum of contributions.
    let sum_dom: Vec<ObjectSem> = contrib_vars.iter().map(|v| objects[v].clone()).collect();
    let score_obj = objects["Score"].clone();
    {
        let parse = |o: &ObjectSem, i: usize| -> i64 {
            o.elements().unwrap()[i].parse::<i64>().unwrap()
        };
        let sum_dom2 = sum_dom.clone();
        let score2 = score_obj.clone();
        generators.push(Generator::deterministic(
            "total",
            contrib_vars.clone(),
            vec!["Score".into()],
        ));
        morphs.insert(
            "total".to_string(),
            MorphSem::FnTable(FnTable::from_fn(
                sum_dom,
                vec![score_obj.clone()],
                move |xs| {
                    let s: i64 = xs
                        .iter()
                        .enumerate()
                        .map(|(k, &i)| parse(&sum_dom2[k], i))
                        .sum();
                    vec![score2.element_index(&s.to_string()).unwrap()]
                },
            )),
        );
    }
    add_sharp_states(&mut generators, &mut morphs, &objects);

    let sig = build_signature(variables, generators, Language::Cd)?;

    // Diagram: inputs copied to their rules, each rule chained with its
    // points box, contributions totalled.
    let mut builder = DiagramBuilder::new(&sig);
    let total_id = builder.add_gen("total");
    for (v, _) in inputs {
        let i = builder.add_input(v.clone());
        let users: Vec<usize> = rules
            .iter()
            .enumerate()
            .filter(|(_, r)| &r.var == v)
            .map(|(ri, _)| ri)
            .collect();
        let mut sources = Vec::new();
        match users.len() {
            0 => {
                let d = builder.add_box(BoxKind::Discard { var: v.clone() });
                builder.connect(WireSrc::Input(i), WireDst::Box(d, 0), v.clone());
            }
            1 => sources.push(WireSrc::Input(i)),
            n => {
                let c = builder.add_box(BoxKind::Copy { var: v.clone(), n });
                builder.connect(WireSrc::Input(i), WireDst::Box(c.clone(), 0), v.clone());
                sources.extend((0..n).map(|k| WireSrc::Box(c.clone(), k)));
            }
        }
        for (src, ri) in sources.into_iter().zip(users) {
            let rb = builder.add_box_with_id(
                format!("r{ri}"),
                BoxKind::Gen(format!("rule_{}", rules[ri].name)),
            );
            builder.connect(src, WireDst::Box(rb.clone(), 0), v.clone());
            let pb = builder.add_box_with_id(
                format!("p{ri}"),
                BoxKind::Gen(format!("points_{}", rules[ri].name)),
            );
            builder.connect(WireSrc::Box(rb, 0), WireDst::Box(pb.clone(), 0), "Fired");
            builder.connect(
                WireSrc::Box(pb, 0),
                WireDst::Box(total_id.clone(), ri),
                contrib_vars[ri].clone(),
            );
        }
    }
    builder.add_output("Score");
    builder.connect(WireSrc::Box(total_id, 0), WireDst::Output(0), "Score");
    let main = builder.finish()?;

    let mut distinguished = BTreeMap::new();
    distinguished.insert("main".to_string(), main);
    let binding = bind_model(&sig, Backend::FinFn, objects, morphs, distinguished)?;

    let mut interp = Interpretation::new(&binding);
    for (v, _) in inputs {
        interp.set_var_term(v, v.clone());
    }
    interp.set_var_term("Fired", "rule fired");
    interp.set_var_term("Score", "total score");
    for (ri, r) in rules.iter().enumerate() {
        interp.set_var_term(&contrib_vars[ri], format!("points from {}", r.name));
        interp.set_gen_term_concrete(&format!("rule_{}", r.name), r.name.clone());
        interp.set_gen_term_concrete(
            &format!("points_{}", r.name),
            format!("{} point(s) if {}", r.points, r.name),
        );
    }
    interp.set_gen_term_concrete("total", "sum of points");
    label_all_states(&mut interp, &binding);
    ZooModel::new(binding, interp, "score-based recidivism alternative")
}

/// The five-rule scoring alternative to a proprietary recidivism model:
/// priors ≥ 2 (+1), priors ≥ 5 (+1), local ordinance prior (+1),
/// age 18–24 (+1), age ≥ 40 (−1).
pub fn compas_scoring() -> Result<ZooModel, ZooError> {
    let priors = int_labels(0, 10);
    let age = int_labels(18, 80);
    let inputs = vec![
        ("P".to_string(), priors.clone()),
        ("L".to_string(), vec!["no".into(), "yes".into()]),
        ("A".to_string(), age.clone()),
    ];
    let ge = |labels: &[String], cut: i64| -> Vec<String> {
        labels
            .iter()
            .filter(|l| l.parse::<i64>().unwrap() >= cut)
            .cloned()
            .collect()
    };
    let range = |labels: &[String], lo: i64, hi: i64| -> Vec<String> {
        labels
            .iter()
            .filter(|l| {
                let v = l.parse::<i64>().unwrap();
                v >= lo && v <= hi
            })
            .cloned()
            .collect()
    };
    let rules = vec![
        ScoringRule {
            name: "priors_ge_2".into(),
            var: "P".into(),
            satisfied: ge(&priors, 2),
            points: 1,
        },
        ScoringRule {
            name: "priors_ge_5".into(),
            var: "P".into(),
            satisfied: ge(&priors, 5),
            points: 1,
        },
        ScoringRule {
            name: "local_prior".into(),
            var: "L".into(),
            satisfied: vec!["yes".into()],
            points: 1,
        },
        ScoringRule {
            name: "age_18_24".into(),
            var: "A".into(),
            satisfied: range(&age, 18, 24),
            points: 1,
        },
        ScoringRule {
            name: "age_ge_40".into(),
            var: "A".into(),
            satisfied: ge(&age, 40),
            points: -1,
        },
    ];
    scoring_system(&inputs, &rules)
}

/// The three-rule arrest decision list: age 18–20 and male; age 21–23 and
/// 2–3 priors; more than three priors; otherwise no arrest.
pub fn decision_list() -> Result<ZooModel, ZooError> {
    let sex = vec!["male".to_string(), "female".to_string()];
    let age = int_labels(18, 80);
    let priors = int_labels(0, 10);
    let bools = vec!["0".to_string(), "1".to_string()];
    let outs = vec!["no".to_string(), "yes".to_string()];

    let variables: Vec<Variable> = ["S", "A", "P", "B", "O"]
        .into_iter()
        .map(Variable::new)
        .collect();
    let mut objects = BTreeMap::new();
    objects.insert("S".to_string(), ObjectSem::FinSet(sex.clone()));
    objects.insert("A".to_string(), ObjectSem::FinSet(age.clone()));
    objects.insert("P".to_string(), ObjectSem::FinSet(priors.clone()));
    objects.insert("B".to_string(), ObjectSem::FinSet(bools.clone()));
    objects.insert("O".to_string(), ObjectSem::FinSet(outs.clone()));

    let b_obj = objects["B"].clone();
    let o_obj = objects["O"].clone();
    let mut generators = vec![
        Generator::deterministic("age_18_20", vec!["A".into()], vec!["B".into()]),
        Generator::deterministic("is_male", vec!["S".into()], vec!["B".into()]),
        Generator::deterministic("age_21_23", vec!["A".into()], vec!["B".into()]),
        Generator::deterministic("priors_2_3", vec!["P".into()], vec!["B".into()]),
        Generator::deterministic("priors_gt_3", vec!["P".into()], vec!["B".into()]),
        Generator::deterministic("and", vec!["B".into(), "B".into()], vec!["B".into()]),
        Generator::deterministic("arrest_if", vec!["B".into()], vec!["O".into()]),
        Generator::deterministic(
            "first",
            vec!["O".into(), "O".into(), "O".into()],
            vec!["O".into()],
        ),
    ];
    let mut morphs: BTreeMap<String, MorphSem> = BTreeMap::new();
    let a_obj = objects["A"].clone();
    let in_range = move |o: &ObjectSem, i: usize, lo: i64, hi: i64| {
        let v = o.elements().unwrap()[i].parse::<i64>().unwrap();
        usize::from(v >= lo && v <= hi)
    };
    let a2 = a_obj.clone();
    morphs.insert(
        "age_18_20".into(),
        MorphSem::FnTable(FnTable::from_fn(
            vec![a_obj.clone()],
            vec![b_obj.clone()],
            move |xs| vec![in_range(&a2, xs[0], 18, 20)],
        )),
    );
    let a3 = a_obj.clone();
    let in_range2 = |o: &ObjectSem, i: usize, lo: i64, hi: i64| {
        let v = o.elements().unwrap()[i].parse::<i64>().unwrap();
        usize::from(v >= lo && v <= hi)
    };
    morphs.insert(
        "age_21_23".into(),
        MorphSem::FnTable(FnTable::from_fn(
            vec![a_obj.clone()],
            vec![b_obj.clone()],
            move |xs| vec![in_range2(&a3, xs[0], 21, 23)],
        )),
    );
    morphs.insert(
        "is_male".into(),
        MorphSem::FnTable(FnTable::from_fn(
            vec![objects["S"].clone()],
            vec![b_obj.clone()],
            |xs| vec![usize::from(xs[0] == 0)],
        )),
    );
    let p_obj = objects["P"].clone();
    let p2 = p_obj.clone();
    morphs.insert(
        "priors_2_3".into(),
        MorphSem::FnTable(FnTable::from_fn(
            vec![p_obj.clone()],
            vec![b_obj.clone()],
            move |xs| {
                let v = p2.elements().unwrap()[xs[0]].parse::<i64>().unwrap();
                vec![usize::from((2..=3).contains(&v))]
            },
        )),
    );
    let p3 = p_obj.clone();
    morphs.insert(
        "priors_gt_3".into(),
        MorphSem::FnTable(FnTable::from_fn(
            vec![p_obj.clone()],
            vec![b_obj.clone()],
            move |xs| {
                let v = p3.elements().unwrap()[xs[0]].parse::<i64>().unwrap();
                vec![usize::from(v > 3)]
            },
        )),
    );
    morphs.insert(
        "and".into(),
        MorphSem::FnTable(FnTable::from_fn(
            vec![b_obj.clone(), b_obj.clone()],
            vec![b_obj.clone()],
            |xs| vec![xs[0] & xs[1]],
        )),
    );
    morphs.insert(
        "arrest_if".into(),
        MorphSem::FnTable(FnTable::from_fn(
            vec![b_obj.clone()],
            vec![o_obj.clone()],
            |xs| vec![xs[0]],
        )),
    );
    // `first` returns the first non-zero input, zero when all are zero; with
    // outputs in {no, yes} that is the first `yes`.
    morphs.insert(
        "first".into(),
        MorphSem::FnTable(FnTable::from_fn(
            vec![o_obj.clone(), o_obj.clone(), o_obj.clone()],
            vec![o_obj.clone()],
            |xs| vec![xs.iter().copied().find(|&x| x != 0).unwrap_or(0)],
        )),
    );
    add_sharp_states(&mut generators, &mut morphs, &objects);
    let sig = build_signature(variables, generators, Language::Cd)?;

    // Diagram: S -> R1; A -> R1, R2; P -> R2, R3.
    let mut builder = DiagramBuilder::new(&sig);
    builder.add_input("S");
    builder.add_input("A");
    builder.add_input("P");
    let copy_a = builder.add_box_with_id("copyA", BoxKind::Copy { var: "A".into(), n: 2 });
    let copy_p = builder.add_box_with_id("copyP", BoxKind::Copy { var: "P".into(), n: 2 });
    builder.connect(WireSrc::Input(1), WireDst::Box(copy_a.clone(), 0), "A");
    builder.connect(WireSrc::Input(2), WireDst::Box(copy_p.clone(), 0), "P");

    let q_age1 = builder.add_box_with_id("q_age_18_20", BoxKind::Gen("age_18_20".into()));
    let q_male = builder.add_box_with_id("q_is_male", BoxKind::Gen("is_male".into()));
    let and1 = builder.add_box_with_id("and1", BoxKind::Gen("and".into()));
    builder.connect(WireSrc::Box(copy_a.clone(), 0), WireDst::Box(q_age1.clone(), 0), "A");
    builder.connect(WireSrc::Input(0), WireDst::Box(q_male.clone(), 0), "S");
    builder.connect(WireSrc::Box(q_age1, 0), WireDst::Box(and1.clone(), 0), "B");
    builder.connect(WireSrc::Box(q_male, 0), WireDst::Box(and1.clone(), 1), "B");

    let q_age2 = builder.add_box_with_id("q_age_21_23", BoxKind::Gen("age_21_23".into()));
    let q_p23 = builder.add_box_with_id("q_priors_2_3", BoxKind::Gen("priors_2_3".into()));
    let and2 = builder.add_box_with_id("and2", BoxKind::Gen("and".into()));
    builder.connect(WireSrc::Box(copy_a, 1), WireDst::Box(q_age2.clone(), 0), "A");
    builder.connect(WireSrc::Box(copy_p.clone(), 0), WireDst::Box(q_p23.clone(), 0), "P");
    builder.connect(WireSrc::Box(q_age2, 0), WireDst::Box(and2.clone(), 0), "B");
    builder.connect(WireSrc::Box(q_p23, 0), WireDst::Box(and2.clone(), 1), "B");

    let q_pg3 = builder.add_box_with_id("q_priors_gt_3", BoxKind::Gen("priors_gt_3".into()));
    builder.connect(WireSrc::Box(copy_p, 1), WireDst::Box(q_pg3.clone(), 0), "P");

    let r1 = builder.add_box_with_id("r1", BoxKind::Gen("arrest_if".into()));
    let r2 = builder.add_box_with_id("r2", BoxKind::Gen("arrest_if".into()));
    let r3 = builder.add_box_with_id("r3", BoxKind::Gen("arrest_if".into()));
    builder.connect(WireSrc::Box(and1, 0), WireDst::Box(r1.clone(), 0), "B");
    builder.connect(WireSrc::Box(and2, 0), WireDst::Box(r2.clone(), 0), "B");
    builder.connect(WireSrc::Box(q_pg3, 0), WireDst::Box(r3.clone(), 0), "B");

    let first = builder.add_box_with_id("first", BoxKind::Gen("first".into()));
    builder.connect(WireSrc::Box(r1, 0), WireDst::Box(first.clone(), 0), "O");
    builder.connect(WireSrc::Box(r2, 0), WireDst::Box(first.clone(), 1), "O");
    builder.connect(WireSrc::Box(r3, 0), WireDst::Box(first.clone(), 2), "O");
    builder.add_output("O");
    builder.connect(WireSrc::Box(first, 0), WireDst::Output(0), "O");
    let main = builder.finish()?;

    let mut distinguished = BTreeMap::new();
    distinguished.insert("main".to_string(), main);
    let binding = bind_model(&sig, Backend::FinFn, objects, morphs, distinguished)?;

    let mut interp = Interpretation::new(&binding);
    interp.set_var_term("S", "sex");
    interp.set_var_term("A", "age");
    interp.set_var_term("P", "prior offences");
    interp.set_var_term("B", "condition holds");
    interp.set_var_term("O", "arrest prediction");
    interp.set_gen_term_concrete("age_18_20", "age is between 18-20");
    interp.set_gen_term_concrete("age_21_23", "age is between 21-23");
    interp.set_gen_term_concrete("is_male", "sex is male");
    interp.set_gen_term_concrete("priors_2_3", "has 2-3 prior arrests");
    interp.set_gen_term_concrete("priors_gt_3", "has more than three priors");
    interp.set_gen_term_concrete("and", "both conditions hold");
    interp.set_gen_term_concrete("arrest_if", "predict arrest when the rule fires");
    interp.set_gen_term_concrete("first", "first applicable rule decides");
    label_all_states(&mut interp, &binding);
    ZooModel::new(binding, interp, "three-rule arrest decision list")
}

/// The bike-rental decision tree: days-since ≤ 400, then days-since ≤ 100,
/// else temperature ≥ 11; leaves o1..o4 assigned left to right. Carriers are
/// discretized around the thresholds.
pub fn decision_tree() -> Result<ZooModel, ZooError> {
    let days: Vec<String> = ["0", "50", "100", "200", "300", "400", "500", "600", "700"]
        .map(String::from)
        .to_vec();
    let temps = ["0", "5", "10", "11", "15", "20", "30"]
        .map(String::from)
        .to_vec();
    let bools = vec!["0".to_string(), "1".to_string()];
    let outs: Vec<String> = ["0", "o1", "o2", "o3", "o4"].map(String::from).to_vec();

    let variables: Vec<Variable> = ["D", "T", "Bc", "O"].into_iter().map(Variable::new).collect();
    let mut objects = BTreeMap::new();
    objects.insert("D".to_string(), ObjectSem::FinSet(days.clone()));
    objects.insert("T".to_string(), ObjectSem::FinSet(temps.clone()));
    objects.insert("Bc".to_string(), ObjectSem::FinSet(bools.clone()));
    objects.insert("O".to_string(), ObjectSem::FinSet(outs.clone()));
    let d_obj = objects["D"].clone();
    let t_obj = objects["T"].clone();
    let b_obj = objects["Bc"].clone();
    let o_obj = objects["O"].clone();

    // Q-boxes carry the full (D, T, control) tuple and emit yes/no copies.
    let triple: Vec<String> = vec!["D".into(), "T".into(), "Bc".into()];
    let triple_objs = vec![d_obj.clone(), t_obj.clone(), b_obj.clone()];
    let mut generators = vec![
        Generator::deterministic("q_days_le_400", triple.clone(), [triple.clone(), triple.clone()].concat()),
        Generator::deterministic("q_days_le_100", triple.clone(), [triple.clone(), triple.clone()].concat()),
        Generator::deterministic("q_temp_ge_11", triple.clone(), [triple.clone(), triple.clone()].concat()),
        Generator::deterministic("leaf_o1", triple.clone(), vec!["O".into()]),
        Generator::deterministic("leaf_o2", triple.clone(), vec!["O".into()]),
        Generator::deterministic("leaf_o3", triple.clone(), vec!["O".into()]),
        Generator::deterministic("leaf_o4", triple.clone(), vec!["O".into()]),
        Generator::deterministic("combine", vec!["O".into(), "O".into()], vec!["O".into()]),
    ];
    let mut morphs: BTreeMap<String, MorphSem> = BTreeMap::new();
    let q_box = |pred: Box<dyn Fn(usize, usize) -> bool>| -> FnTable {
        let dom = triple_objs.clone();
        let cod = [triple_objs.clone(), triple_objs.clone()].concat();
        FnTable::from_fn(dom, cod, move |xs| {
            let (d, t, b) = (xs[0], xs[1], xs[2]);
            let q = pred(d, t);
            let yes = usize::from(b == 1 && q);
            let no = usize::from(b == 1 && !q);
            vec![d, t, yes, d, t, no]
        })
    };
    let dd = d_obj.clone();
    morphs.insert(
        "q_days_le_400".into(),
        MorphSem::FnTable(q_box(Box::new(move |d, _| {
            dd.elements().unwrap()[d].parse::<i64>().unwrap() <= 400
        }))),
    );
    let dd2 = d_obj.clone();
    morphs.insert(
        "q_days_le_100".into(),
        MorphSem::FnTable(q_box(Box::new(move |d, _| {
            dd2.elements().unwrap()[d].parse::<i64>().unwrap() <= 100
        }))),
    );
    let tt = t_obj.clone();
    morphs.insert(
        "q_temp_ge_11".into(),
        MorphSem::FnTable(q_box(Box::new(move |_, t| {
            tt.elements().unwrap()[t].parse::<i64>().unwrap() >= 11
        }))),
    );
    for (k, leaf) in ["leaf_o1", "leaf_o2", "leaf_o3", "leaf_o4"].iter().enumerate() {
        morphs.insert(
            leaf.to_string(),
            MorphSem::FnTable(FnTable::from_fn(
                triple_objs.clone(),
                vec![o_obj.clone()],
                move |xs| vec![if xs[2] == 1 { k + 1 } else { 0 }],
            )),
        );
    }
    morphs.insert(
        "combine".into(),
        MorphSem::FnTable(FnTable::from_fn(
            vec![o_obj.clone(), o_obj.clone()],
            vec![o_obj.clone()],
            |xs| vec![if xs[0] != 0 { xs[0] } else { xs[1] }],
        )),
    );
    add_sharp_states(&mut generators, &mut morphs, &objects);
    let sig = build_signature(variables, generators, Language::Cd)?;

    let mut builder = DiagramBuilder::new(&sig);
    builder.add_input("D");
    builder.add_input("T");
    let ctrl = builder.add_gen(&state_gen_name("Bc", "1"));
    let q1 = builder.add_box_with_id("q1", BoxKind::Gen("q_days_le_400".into()));
    builder.connect(WireSrc::Input(0), WireDst::Box(q1.clone(), 0), "D");
    builder.connect(WireSrc::Input(1), WireDst::Box(q1.clone(), 1), "T");
    builder.connect(WireSrc::Box(ctrl, 0), WireDst::Box(q1.clone(), 2), "Bc");
    let q2 = builder.add_box_with_id("q2", BoxKind::Gen("q_days_le_100".into()));
    let q3 = builder.add_box_with_id("q3", BoxKind::Gen("q_temp_ge_11".into()));
    for (p, var) in ["D", "T", "Bc"].iter().enumerate() {
        builder.connect(WireSrc::Box(q1.clone(), p), WireDst::Box(q2.clone(), p), *var);
        builder.connect(
            WireSrc::Box(q1.clone(), 3 + p),
            WireDst::Box(q3.clone(), p),
            *var,
        );
    }
    let leaves = ["leaf_o1", "leaf_o2", "leaf_o3", "leaf_o4"];
    let mut leaf_ids = Vec::new();
    for (k, leaf) in leaves.iter().enumerate() {
        let id = builder.add_box_with_id(format!("l{}", k + 1), BoxKind::Gen(leaf.to_string()));
        let (src_box, base) = if k < 2 { (&q2, 3 * k) } else { (&q3, 3 * (k - 2)) };
        for (p, var) in ["D", "T", "Bc"].iter().enumerate() {
            builder.connect(
                WireSrc::Box(src_box.clone(), base + p),
                WireDst::Box(id.clone(), p),
                *var,
            );
        }
        leaf_ids.push(id);
    }
    let c1 = builder.add_box_with_id("c1", BoxKind::Gen("combine".into()));
    let c2 = builder.add_box_with_id("c2", BoxKind::Gen("combine".into()));
    let c3 = builder.add_box_with_id("c3", BoxKind::Gen("combine".into()));
    builder.connect(WireSrc::Box(leaf_ids[0].clone(), 0), WireDst::Box(c1.clone(), 0), "O");
    builder.connect(WireSrc::Box(leaf_ids[1].clone(), 0), WireDst::Box(c1.clone(), 1), "O");
    builder.connect(WireSrc::Box(leaf_ids[2].clone(), 0), WireDst::Box(c2.clone(), 0), "O");
    builder.connect(WireSrc::Box(leaf_ids[3].clone(), 0), WireDst::Box(c2.clone(), 1), "O");
    builder.connect(WireSrc::Box(c1, 0), WireDst::Box(c3.clone(), 0), "O");
    builder.connect(WireSrc::Box(c2, 0), WireDst::Box(c3.clone(), 1), "O");
    builder.add_output("O");
    builder.connect(WireSrc::Box(c3, 0), WireDst::Output(0), "O");
    let main = builder.finish()?;

    let mut distinguished = BTreeMap::new();
    distinguished.insert("main".to_string(), main);
    let binding = bind_model(&sig, Backend::FinFn, objects, morphs, distinguished)?;

    let mut interp = Interpretation::new(&binding);
    interp.set_var_term("D", "days since 2011");
    interp.set_var_term("T", "temperature");
    interp.set_var_term("Bc", "branch reached");
    interp.set_var_term("O", "expected rentals");
    interp.set_gen_term_concrete("q_days_le_400", "400 days since 2011?");
    interp.set_gen_term_concrete("q_days_le_100", "100 days since 2011?");
    interp.set_gen_term_concrete("q_temp_ge_11", "temperature at least 11?");
    for leaf in leaves {
        interp.set_gen_term_concrete(leaf, format!("output {}", &leaf[5..]));
    }
    interp.set_gen_term_concrete("combine", "reached leaf decides");
    label_all_states(&mut interp, &binding);
    ZooModel::new(binding, interp, "bike-rental decision tree with Q-boxes")
}

/// Adds a sharp-state generator (`<lowercased var>_<element>`) per element
/// of every finite variable; rule-based fixtures rely on these for
/// evaluation rules and closing inputs.
pub fn add_sharp_states(
    generators: &mut Vec<Generator>,
    morphs: &mut BTreeMap<String, MorphSem>,
    objects: &BTreeMap<String, ObjectSem>,
) {
    for (var, obj) in objects {
        let Some(elems) = obj.elements() else { continue };
        for (i, e) in elems.iter().enumerate() {
            let name = state_gen_name(var, e);
            generators.push(Generator::new(
                name.clone(),
                vec![],
                vec![var.clone()],
                GenFlags::SHARP,
            ));
            let m = match obj {
                ObjectSem::FinSet(_) => MorphSem::FnTable(FnTable::point(obj, i)),
                ObjectSem::ProbSpace(_) => {
                    MorphSem::Matrix(crate::semantics::StochMatrix::point(obj, i))
                }
                _ => unreachable!(),
            };
            morphs.insert(name, m);
        }
    }
}

/// Canonical name of the sharp-state generator for `var = element`.
pub fn state_gen_name(var: &str, element: &str) -> String {
    format!("{}_{}", var.to_lowercase(), element.replace('-', "m"))
}

/// Concrete terms for every sharp state of every finite variable.
pub fn label_all_states(interp: &mut Interpretation, binding: &crate::model::ModelBinding) {
    let vars: Vec<(String, Vec<String>)> = binding
        .objects()
        .iter()
        .filter_map(|(v, o)| o.elements().map(|e| (v.clone(), e.to_vec())))
        .collect();
    for (v, elems) in vars {
        let term_of = |e: &str| format!("{v} = {e}");
        for e in &elems {
            interp.set_state_term(&v, e, term_of(e));
            // The fixture's sharp-state generator gets the same term, so the
            // concrete and abstract maps agree on it.
            let gen = state_gen_name(&v, e);
            if binding.signature().generator(&gen).is_some() {
                interp.set_gen_term(&gen, term_of(e));
            }
        }
    }
}
