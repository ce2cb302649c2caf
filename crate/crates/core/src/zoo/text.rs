//! Text circuits: labeled noun wires acted on by word gates.
//!
//! Each noun is its own variable; word gates are instantiated per
//! participant tuple (`word@a,b`), so circuits stay first-order. Higher
//! order words are macro-expanded before the IR: a modifier folds into the
//! gate name of the word it modifies.

use std::collections::BTreeMap;

use num_complex::Complex64;

use super::{ZooError, ZooModel};
use crate::diagram::{Diagram, DiagramBuilder, WireDst, WireSrc};
use crate::interpret::Interpretation;
use crate::model::bind_model;
use crate::semantics::{
    flat_size, unflat_index, Backend, CMat, FnTable, KrausMorph, MorphSem, ObjectSem,
};
use crate::signature::{build_signature, GenFlags, Generator, Language, Signature, Variable};

/// One gate application in a script. Adjectives and intransitive verbs act
/// on one noun; transitive verbs on (subject, object). `Modified` is a
/// higher-order word applied to a gate, expanded by name-folding before
/// diagram construction.
#[derive(Debug, Clone)]
pub enum Gate {
    Adj { word: String, noun: String },
    Iv { word: String, noun: String },
    Tv { word: String, subject: String, object: String },
    Modified { word: String, inner: Box<Gate> },
}

impl Gate {
    fn expand(&self) -> Result<(String, Vec<String>), ZooError> {
        match self {
            Gate::Adj { word, noun } | Gate::Iv { word, noun } => {
                Ok((word.clone(), vec![noun.clone()]))
            }
            Gate::Tv {
                word,
                subject,
                object,
            } => {
                if subject == object {
                    return Err(ZooError::ArityMismatch(format!(
                        "transitive `{word}` needs two distinct nouns"
                    )));
                }
                Ok((word.clone(), vec![subject.clone(), object.clone()]))
            }
            Gate::Modified { word, inner } => {
                let (w, nouns) = inner.expand()?;
                Ok((format!("{word}({w})"), nouns))
            }
        }
    }
}

/// Instantiated gate name for a participant tuple.
pub fn gate_gen_name(word: &str, nouns: &[String]) -> String {
    format!("{word}@{}", nouns.join(","))
}

/// Builds the signature and circuit diagram of a script over labeled noun
/// wires. Each noun is one variable; the circuit is open (inputs/outputs are
/// the noun wires in declaration order).
pub fn text_circuit(nouns: &[&str], script: &[Gate]) -> Result<(Signature, Diagram), ZooError> {
    let mut seen = std::collections::BTreeSet::new();
    for n in nouns {
        if !seen.insert(n.to_string()) {
            return Err(ZooError::DuplicateLabel(n.to_string()));
        }
    }
    let variables: Vec<Variable> = nouns.iter().map(|n| Variable::new(*n)).collect();
    let mut generators = Vec::new();
    let mut apps = Vec::new();
    for g in script {
        let (word, participants) = g.expand()?;
        for p in &participants {
            if !seen.contains(p) {
                return Err(ZooError::UnknownWord(format!("noun `{p}`")));
            }
        }
        let name = gate_gen_name(&word, &participants);
        if generators.iter().all(|g: &Generator| g.name != name) {
            generators.push(Generator::channel(
                name.clone(),
                participants.clone(),
                participants.clone(),
            ));
        }
        apps.push((name, participants));
    }
    let sig = build_signature(variables, generators, Language::Discard)?;

    let mut builder = DiagramBuilder::new(&sig);
    let mut front: BTreeMap<String, WireSrc> = BTreeMap::new();
    for (i, n) in nouns.iter().enumerate() {
        builder.add_input(*n);
        front.insert(n.to_string(), WireSrc::Input(i));
    }
    for (name, participants) in &apps {
        let b = builder.add_gen(name);
        for (p, noun) in participants.iter().enumerate() {
            let src = front.remove(noun).expect("noun tracked");
            builder.connect(src, WireDst::Box(b.clone(), p), noun.clone());
        }
        for (q, noun) in participants.iter().enumerate() {
            front.insert(noun.clone(), WireSrc::Box(b.clone(), q));
        }
    }
    for (j, n) in nouns.iter().enumerate() {
        builder.add_output(*n);
        let src = front.remove(*n).expect("noun tracked");
        builder.connect(src, WireDst::Output(j), n.to_string());
    }
    Ok((sig, builder.finish()?))
}

/// Kraus list of a classical function between basis states: {|f(x)⟩⟨x|}.
pub fn kraus_from_function(
    dom: Vec<ObjectSem>,
    cod: Vec<ObjectSem>,
    f: impl Fn(&[usize]) -> Vec<usize>,
) -> KrausMorph {
    let d = flat_size(&dom);
    let c = flat_size(&cod);
    let cod2 = cod.clone();
    let ops = (0..d)
        .map(|x| {
            let xs = unflat_index(&dom, x);
            let ys = f(&xs);
            let y = crate::semantics::flat_index(&cod2, &ys);
            let mut k = CMat::zeros(c, d);
            k.set(y, x, Complex64::new(1.0, 0.0));
            k
        })
        .collect();
    KrausMorph::new(dom, cod, ops)
}

/// A text-circuit fixture: bound model plus the main circuit and metadata.
pub struct TextFixture {
    pub model: ZooModel,
    /// Open circuit over the noun wires.
    pub circuit: Diagram,
    /// Closed question circuit (states fed in, question asked), when the
    /// fixture has one.
    pub question_circuit: Option<Diagram>,
    pub nouns: Vec<String>,
}

/// "Alice likes Bob" with bystander Charlie: the verb acts on (Alice, Bob)
/// only, leaving Charlie's wire plain.
pub fn likes_fixture() -> Result<TextFixture, ZooError> {
    let (sig, circuit) = text_circuit(
        &["Alice", "Bob", "Charlie"],
        &[Gate::Tv {
            word: "likes".into(),
            subject: "Alice".into(),
            object: "Bob".into(),
        }],
    )?;
    let n = ObjectSem::FinSet(vec!["pleased".into(), "neutral".into()]);
    let mut objects = BTreeMap::new();
    for v in ["Alice", "Bob", "Charlie"] {
        objects.insert(v.to_string(), n.clone());
    }
    let mut morphs = BTreeMap::new();
    morphs.insert(
        "likes@Alice,Bob".to_string(),
        MorphSem::FnTable(FnTable::from_fn(
            vec![n.clone(), n.clone()],
            vec![n.clone(), n.clone()],
            |xs| vec![xs[0], 0],
        )),
    );
    let mut distinguished = BTreeMap::new();
    distinguished.insert("main".to_string(), circuit.clone());
    let binding = bind_model(&sig, Backend::FinFn, objects, morphs, distinguished)?;
    let mut interp = Interpretation::new(&binding);
    for v in ["Alice", "Bob", "Charlie"] {
        interp.set_var_term(v, format!("state of {v}"));
    }
    interp.set_gen_term_concrete("likes@Alice,Bob", "Alice likes Bob");
    let model = ZooModel::new(binding, interp, "likes circuit with bystander")?;
    Ok(TextFixture {
        model,
        circuit,
        question_circuit: None,
        nouns: vec!["Alice".into(), "Bob".into(), "Charlie".into()],
    })
}

/// The hiring circuit: "Alice hired Bob and then spoke to Claire", with the
/// question "is Bob employed?". Claire cannot influence Bob.
pub fn hiring_fixture() -> Result<TextFixture, ZooError> {
    let nouns = ["Alice", "Bob", "Claire"];
    let (sig0, circuit) = text_circuit(
        &nouns,
        &[
            Gate::Tv {
                word: "hired".into(),
                subject: "Alice".into(),
                object: "Bob".into(),
            },
            Gate::Tv {
                word: "spoke_to".into(),
                subject: "Alice".into(),
                object: "Claire".into(),
            },
        ],
    )?;
    // Extend with the alternative word, the question and initial states.
    let mut variables: Vec<Variable> = sig0.variables().to_vec();
    variables.push(Variable::new("Ans"));
    let mut generators: Vec<Generator> = sig0.generators().to_vec();
    generators.push(Generator::channel(
        "fired@Alice,Bob",
        vec!["Alice".into(), "Bob".into()],
        vec!["Alice".into(), "Bob".into()],
    ));
    generators.push(Generator::deterministic(
        "employed?@Bob",
        vec!["Bob".into()],
        vec!["Ans".into()],
    ));
    for n in nouns {
        generators.push(Generator::new(
            format!("init_{n}"),
            vec![],
            vec![n.to_string()],
            GenFlags::SHARP,
        ));
    }
    let sig = build_signature(variables, generators, Language::Discard)?;
    // The circuit was built over the script-only signature; replay it over
    // the extended one (same variables and gate generators).
    let circuit = {
        let _ = circuit;
        let mut builder = DiagramBuilder::new(&sig);
        let mut front: BTreeMap<String, WireSrc> = BTreeMap::new();
        for (i, n) in nouns.iter().enumerate() {
            builder.add_input(*n);
            front.insert(n.to_string(), WireSrc::Input(i));
        }
        for (name, participants) in [
            ("hired@Alice,Bob", ["Alice", "Bob"]),
            ("spoke_to@Alice,Claire", ["Alice", "Claire"]),
        ] {
            let b = builder.add_gen(name);
            for (p, noun) in participants.iter().enumerate() {
                let src = front.remove(*noun).unwrap();
                builder.connect(src, WireDst::Box(b.clone(), p), noun.to_string());
            }
            for (q, noun) in participants.iter().enumerate() {
                front.insert(noun.to_string(), WireSrc::Box(b.clone(), q));
            }
        }
        for (j, n) in nouns.iter().enumerate() {
            builder.add_output(*n);
            let src = front.remove(*n).unwrap();
            builder.connect(src, WireDst::Output(j), n.to_string());
        }
        builder.finish()?
    };

    let p = ObjectSem::FinSet(vec![
        "neutral".into(),
        "employed".into(),
        "unemployed".into(),
    ]);
    let ans = ObjectSem::FinSet(vec!["no".into(), "yes".into()]);
    let mut objects = BTreeMap::new();
    for n in nouns {
        objects.insert(n.to_string(), p.clone());
    }
    objects.insert("Ans".to_string(), ans.clone());
    let mut morphs = BTreeMap::new();
    morphs.insert(
        "hired@Alice,Bob".to_string(),
        MorphSem::FnTable(FnTable::from_fn(
            vec![p.clone(), p.clone()],
            vec![p.clone(), p.clone()],
            |xs| vec![xs[0], 1],
        )),
    );
    morphs.insert(
        "fired@Alice,Bob".to_string(),
        MorphSem::FnTable(FnTable::from_fn(
            vec![p.clone(), p.clone()],
            vec![p.clone(), p.clone()],
            |xs| vec![xs[0], 2],
        )),
    );
    morphs.insert(
        "spoke_to@Alice,Claire".to_string(),
        MorphSem::FnTable(FnTable::from_fn(
            vec![p.clone(), p.clone()],
            vec![p.clone(), p.clone()],
            |xs| vec![xs[0], xs[1]],
        )),
    );
    morphs.insert(
        "employed?@Bob".to_string(),
        MorphSem::FnTable(FnTable::from_fn(vec![p.clone()], vec![ans.clone()], |xs| {
            vec![usize::from(xs[0] == 1)]
        })),
    );
    for n in nouns {
        morphs.insert(
            format!("init_{n}"),
            MorphSem::FnTable(FnTable::point(&p, 0)),
        );
    }

    // Question circuit: close the inputs, ask about Bob, discard the rest.
    let question_circuit = {
        let closed = crate::surgery::replace_input(&circuit, 0, "init_Alice")?.result;
        let closed = crate::surgery::replace_input(&closed, 0, "init_Bob")?.result;
        let closed = crate::surgery::replace_input(&closed, 0, "init_Claire")?.result;
        let post = Diagram::discard(&sig, "Alice")
            .compose_par(&Diagram::from_generator(&sig, "employed?@Bob")?)?
            .compose_par(&Diagram::discard(&sig, "Claire"))?;
        closed.compose_seq(&post)?
    };

    let mut distinguished = BTreeMap::new();
    distinguished.insert("main".to_string(), circuit.clone());
    distinguished.insert("question".to_string(), question_circuit.clone());
    let binding = bind_model(&sig, Backend::FinFn, objects, morphs, distinguished)?;
    let mut interp = Interpretation::new(&binding);
    for n in nouns {
        interp.set_var_term(n, format!("state of {n}"));
        interp.set_gen_term_concrete(&format!("init_{n}"), format!("{n} at the start"));
    }
    interp.set_var_term("Ans", "answer");
    interp.set_gen_term_concrete("hired@Alice,Bob", "Alice hired Bob");
    interp.set_gen_term_concrete("fired@Alice,Bob", "Alice fired Bob");
    interp.set_gen_term_concrete("spoke_to@Alice,Claire", "Alice spoke to Claire");
    interp.set_gen_term_concrete("employed?@Bob", "is Bob employed?");
    let model = ZooModel::new(binding, interp, "hiring circuit")?;
    Ok(TextFixture {
        model,
        circuit,
        question_circuit: Some(question_circuit),
        nouns: nouns.iter().map(|s| s.to_string()).collect(),
    })
}

/// The location fixture: factorized noun wires (representation ⊗ location),
/// hard-coded location semantics. "Bob is in the kitchen. Claire is in the
/// garden. Alice follows Bob. Where is Alice?" The colocation rules hold
/// with distance zero, and the same signature binds classically and
/// quantumly (gates carry the copying inside their tables, so the diagram
/// language stays discard-only).
pub struct LocationFixture {
    pub model: ZooModel,
    /// The closed question circuit answering "where is Alice".
    pub question_circuit: Diagram,
    /// Exact rules: follows-colocates and in-kitchen-where.
    pub rules: Vec<crate::rewrite::RewriteRule>,
}

fn location_signature() -> Result<Signature, ZooError> {
    let wires = [
        "Alice_rep", "Alice_loc", "Bob_rep", "Bob_loc", "Claire_rep", "Claire_loc",
    ];
    let mut variables: Vec<Variable> = wires.iter().map(|w| Variable::new(*w)).collect();
    variables.push(Variable::new("Answer"));
    let generators = vec![
        Generator::channel(
            "is_in_kitchen@Bob",
            vec!["Bob_rep".into(), "Bob_loc".into()],
            vec!["Bob_rep".into(), "Bob_loc".into()],
        ),
        Generator::channel(
            "is_in_garden@Claire",
            vec!["Claire_rep".into(), "Claire_loc".into()],
            vec!["Claire_rep".into(), "Claire_loc".into()],
        ),
        Generator::channel(
            "follows@Alice,Bob",
            vec![
                "Alice_rep".into(),
                "Alice_loc".into(),
                "Bob_rep".into(),
                "Bob_loc".into(),
            ],
            vec![
                "Alice_rep".into(),
                "Alice_loc".into(),
                "Bob_rep".into(),
                "Bob_loc".into(),
            ],
        ),
        Generator::channel(
            "where@Alice",
            vec!["Alice_rep".into(), "Alice_loc".into()],
            vec!["Answer".into()],
        ),
        Generator::channel(
            "where@Bob",
            vec!["Bob_rep".into(), "Bob_loc".into()],
            vec!["Answer".into()],
        ),
        Generator::channel("ans_kitchen", vec![], vec!["Answer".into()]),
        Generator::channel("init_Alice_rep", vec![], vec!["Alice_rep".into()]),
        Generator::channel("init_Alice_loc", vec![], vec!["Alice_loc".into()]),
        Generator::channel("init_Bob_rep", vec![], vec!["Bob_rep".into()]),
        Generator::channel("init_Bob_loc", vec![], vec!["Bob_loc".into()]),
        Generator::channel("init_Claire_rep", vec![], vec!["Claire_rep".into()]),
        Generator::channel("init_Claire_loc", vec![], vec!["Claire_loc".into()]),
    ];
    Ok(build_signature(variables, generators, Language::Discard)?)
}

fn location_question_circuit(sig: &Signature) -> Result<Diagram, ZooError> {
    let mut builder = DiagramBuilder::new(sig);
    let inits = [
        ("init_Alice_rep", "Alice_rep"),
        ("init_Alice_loc", "Alice_loc"),
        ("init_Bob_rep", "Bob_rep"),
        ("init_Bob_loc", "Bob_loc"),
        ("init_Claire_rep", "Claire_rep"),
        ("init_Claire_loc", "Claire_loc"),
    ];
    let mut front: BTreeMap<String, WireSrc> = BTreeMap::new();
    for (gen, var) in inits {
        let b = builder.add_gen(gen);
        front.insert(var.to_string(), WireSrc::Box(b, 0));
    }
    let gates: [(&str, &[&str]); 3] = [
        ("is_in_kitchen@Bob", &["Bob_rep", "Bob_loc"]),
        ("is_in_garden@Claire", &["Claire_rep", "Claire_loc"]),
        (
            "follows@Alice,Bob",
            &["Alice_rep", "Alice_loc", "Bob_rep", "Bob_loc"],
        ),
    ];
    for (gen, wires) in gates {
        let b = builder.add_gen(gen);
        for (p, w) in wires.iter().enumerate() {
            let src = front.remove(*w).unwrap();
            builder.connect(src, WireDst::Box(b.clone(), p), w.to_string());
        }
        for (q, w) in wires.iter().enumerate() {
            front.insert(w.to_string(), WireSrc::Box(b.clone(), q));
        }
    }
    let q = builder.add_gen("where@Alice");
    for (p, w) in ["Alice_rep", "Alice_loc"].iter().enumerate() {
        let src = front.remove(*w).unwrap();
        builder.connect(src, WireDst::Box(q.clone(), p), w.to_string());
    }
    builder.add_output("Answer");
    builder.connect(WireSrc::Box(q, 0), WireDst::Output(0), "Answer");
    // Everything else is discarded.
    for (w, src) in front {
        let d = builder.add_box(crate::diagram::BoxKind::Discard { var: w.clone() });
        builder.connect(src, WireDst::Box(d, 0), w);
    }
    Ok(builder.finish()?)
}

fn location_rules(sig: &Signature) -> Result<Vec<crate::rewrite::RewriteRule>, ZooError> {
    // follows ; (where@Alice ⊗ discards on Bob) = (discards on Alice ⊗
    // where@Bob).
    let follows = Diagram::from_generator(sig, "follows@Alice,Bob")?;
    let where_a = Diagram::from_generator(sig, "where@Alice")?;
    let where_b = Diagram::from_generator(sig, "where@Bob")?;
    let lhs1 = follows.compose_seq(
        &where_a
            .compose_par(&Diagram::discard(sig, "Bob_rep"))?
            .compose_par(&Diagram::discard(sig, "Bob_loc"))?,
    )?;
    let rhs1 = Diagram::discard(sig, "Alice_rep")
        .compose_par(&Diagram::discard(sig, "Alice_loc"))?
        .compose_par(&where_b)?;
    let rule1 = crate::rewrite::RewriteRule::new("follows-colocates", lhs1, rhs1, 0.0)?;

    let in_k = Diagram::from_generator(sig, "is_in_kitchen@Bob")?;
    let lhs2 = in_k.compose_seq(&where_b)?;
    let rhs2 = Diagram::discard(sig, "Bob_rep")
        .compose_par(&Diagram::discard(sig, "Bob_loc"))?
        .compose_seq(&Diagram::from_generator(sig, "ans_kitchen")?)?;
    let rule2 = crate::rewrite::RewriteRule::new("in-kitchen-where", lhs2, rhs2, 0.0)?;
    Ok(vec![rule1, rule2])
}

/// Builds the location fixture in the requested backend (FinFn or Quant).
pub fn location_fixture(backend: Backend) -> Result<LocationFixture, ZooError> {
    let sig = location_signature()?;
    let question_circuit = location_question_circuit(&sig)?;

    let (rep, loc, ans): (ObjectSem, ObjectSem, ObjectSem) = match backend {
        Backend::FinFn => (
            ObjectSem::FinSet(vec!["r0".into(), "r1".into()]),
            ObjectSem::FinSet(vec!["kitchen".into(), "garden".into()]),
            ObjectSem::FinSet(vec!["kitchen".into(), "garden".into()]),
        ),
        Backend::Quant => (
            ObjectSem::Hilbert(2),
            ObjectSem::Hilbert(2),
            ObjectSem::Hilbert(2),
        ),
        other => return Err(ZooError::DomainMismatch(format!("backend {other}"))),
    };
    let mut objects = BTreeMap::new();
    for v in sig.variables() {
        let obj = if v.name == "Answer" {
            ans.clone()
        } else if v.name.ends_with("_loc") {
            loc.clone()
        } else {
            rep.clone()
        };
        objects.insert(v.name.clone(), obj);
    }

    // Shared classical tables; the quantum binding lifts them to Kraus form.
    type Table = Box<dyn Fn(&[usize]) -> Vec<usize>>;
    let tables: Vec<(&str, Table)> = vec![
        ("is_in_kitchen@Bob", Box::new(|xs: &[usize]| vec![xs[0], 0])),
        ("is_in_garden@Claire", Box::new(|xs: &[usize]| vec![xs[0], 1])),
        (
            "follows@Alice,Bob",
            Box::new(|xs: &[usize]| vec![xs[0], xs[3], xs[2], xs[3]]),
        ),
        ("where@Alice", Box::new(|xs: &[usize]| vec![xs[1]])),
        ("where@Bob", Box::new(|xs: &[usize]| vec![xs[1]])),
        ("ans_kitchen", Box::new(|_: &[usize]| vec![0])),
        ("init_Alice_rep", Box::new(|_: &[usize]| vec![0])),
        ("init_Alice_loc", Box::new(|_: &[usize]| vec![1])),
        ("init_Bob_rep", Box::new(|_: &[usize]| vec![0])),
        ("init_Bob_loc", Box::new(|_: &[usize]| vec![1])),
        ("init_Claire_rep", Box::new(|_: &[usize]| vec![0])),
        ("init_Claire_loc", Box::new(|_: &[usize]| vec![0])),
    ];
    let mut morphs = BTreeMap::new();
    for (name, f) in &tables {
        let gen = sig.generator(name).unwrap();
        let dom: Vec<ObjectSem> = gen.dom.iter().map(|v| objects[v].clone()).collect();
        let cod: Vec<ObjectSem> = gen.cod.iter().map(|v| objects[v].clone()).collect();
        let m = match backend {
            Backend::FinFn => MorphSem::FnTable(FnTable::from_fn(dom, cod, f)),
            Backend::Quant => MorphSem::Kraus(kraus_from_function(dom, cod, f)),
            _ => unreachable!(),
        };
        morphs.insert(name.to_string(), m);
    }
    let mut distinguished = BTreeMap::new();
    distinguished.insert("question".to_string(), question_circuit.clone());
    let binding = bind_model(&sig, backend, objects, morphs, distinguished)?;

    let mut interp = Interpretation::new(&binding);
    for v in sig.variables() {
        interp.set_var_term(&v.name, v.name.replace('_', " "));
    }
    interp.set_gen_term_concrete("is_in_kitchen@Bob", "Bob is in the kitchen");
    interp.set_gen_term_concrete("is_in_garden@Claire", "Claire is in the garden");
    interp.set_gen_term_concrete("follows@Alice,Bob", "Alice follows Bob");
    interp.set_gen_term_concrete("where@Alice", "where is Alice?");
    interp.set_gen_term_concrete("where@Bob", "where is Bob?");
    interp.set_gen_term_concrete("ans_kitchen", "in the kitchen");
    for v in [
        "init_Alice_rep",
        "init_Alice_loc",
        "init_Bob_rep",
        "init_Bob_loc",
        "init_Claire_rep",
        "init_Claire_loc",
    ] {
        interp.set_gen_term_concrete(v, format!("initial {}", v.trim_start_matches("init_")));
    }
    let model = ZooModel::new(binding, interp, "location text circuit")?;
    let rules = location_rules(&sig)?;
    Ok(LocationFixture {
        model,
        question_circuit,
        rules,
    })
}
