//! Linear models and feed-forward networks in the real-vector backend.

use std::collections::BTreeMap;

use super::{ZooError, ZooModel};
use crate::diagram::{BoxKind, DiagramBuilder, WireDst, WireSrc};
use crate::interpret::{Cond, Interpretation, IntervalRule};
use crate::model::bind_model;
use crate::semantics::{Activation, Backend, Expr, MorphSem, ObjectSem, RealExpr};
use crate::signature::{build_signature, Generator, Language, Variable};

/// The affine model ⟨x, w⟩ + b drawn with one scalar-multiplication box per
/// weight, a bias state and a fold of additions.
pub fn linear_model(weights: &[f64], bias: f64) -> Result<ZooModel, ZooError> {
    let n = weights.len();
    let r1 = ObjectSem::RealSpace(1);
    let mut variables: Vec<Variable> = (0..n).map(|i| Variable::new(format!("X{}", i + 1))).collect();
    variables.push(Variable::new("Y"));
    let mut objects = BTreeMap::new();
    for v in &variables {
        objects.insert(v.name.clone(), r1.clone());
    }

    let mut generators = Vec::new();
    let mut morphs: BTreeMap<String, MorphSem> = BTreeMap::new();
    for (i, &w) in weights.iter().enumerate() {
        let name = format!("w{}", i + 1);
        generators.push(Generator::deterministic(
            name.clone(),
            vec![format!("X{}", i + 1)],
            vec!["Y".into()],
        ));
        morphs.insert(
            name,
            MorphSem::RealExpr(RealExpr::new(
                vec![r1.clone()],
                vec![r1.clone()],
                Expr::ScalarMult(w, 1),
            )),
        );
    }
    generators.push(Generator::deterministic(
        "add",
        vec!["Y".into(), "Y".into()],
        vec!["Y".into()],
    ));
    morphs.insert(
        "add".to_string(),
        MorphSem::RealExpr(RealExpr::new(
            vec![r1.clone(), r1.clone()],
            vec![r1.clone()],
            Expr::Add(1),
        )),
    );
    generators.push(Generator::deterministic("bias", vec![], vec!["Y".into()]));
    morphs.insert(
        "bias".to_string(),
        MorphSem::RealExpr(RealExpr::state(&r1, &[bias])),
    );
    let sig = build_signature(variables, generators, Language::Cd)?;

    // Fold: (((w1·x1 + w2·x2) + ...) + bias).
    let mut builder = DiagramBuilder::new(&sig);
    let mut acc: Option<WireSrc> = None;
    for i in 0..n {
        builder.add_input(format!("X{}", i + 1));
        let wb = builder.add_box(BoxKind::Gen(format!("w{}", i + 1)));
        builder.connect(WireSrc::Input(i), WireDst::Box(wb.clone(), 0), format!("X{}", i + 1));
        let here = WireSrc::Box(wb, 0);
        acc = Some(match acc {
            None => here,
            Some(prev) => {
                let add = builder.add_box(BoxKind::Gen("add".into()));
                builder.connect(prev, WireDst::Box(add.clone(), 0), "Y");
                builder.connect(here, WireDst::Box(add.clone(), 1), "Y");
                WireSrc::Box(add, 0)
            }
        });
    }
    let bias_box = builder.add_box(BoxKind::Gen("bias".into()));
    let bias_src = WireSrc::Box(bias_box, 0);
    let total = match acc {
        None => bias_src,
        Some(prev) => {
            let add = builder.add_box(BoxKind::Gen("add".into()));
            builder.connect(prev, WireDst::Box(add.clone(), 0), "Y");
            builder.connect(bias_src, WireDst::Box(add.clone(), 1), "Y");
            WireSrc::Box(add, 0)
        }
    };
    builder.add_output("Y");
    builder.connect(total, WireDst::Output(0), "Y");
    let main = builder.finish()?;

    let mut distinguished = BTreeMap::new();
    distinguished.insert("main".to_string(), main);
    let binding = bind_model(&sig, Backend::RealVec, objects, morphs, distinguished)?;

    let mut interp = Interpretation::new(&binding);
    for (i, w) in weights.iter().enumerate() {
        let v = format!("X{}", i + 1);
        interp.set_var_term(&v, format!("feature {}", i + 1));
        interp.set_gen_term_concrete(
            &format!("w{}", i + 1),
            format!("association strength {w}"),
        );
        interp.add_rule(
            &v,
            IntervalRule {
                cond: Cond::Leq(0.0),
                term: "nonpositive level".into(),
            },
        );
        interp.add_rule(
            &v,
            IntervalRule {
                cond: Cond::Gt(0.0),
                term: "positive level".into(),
            },
        );
    }
    interp.set_var_term("Y", "predicted value");
    interp.set_gen_term_concrete("add", "sum of contributions");
    interp.set_gen_term_concrete("bias", format!("bias {bias}"));
    interp.add_rule(
        "Y",
        IntervalRule {
            cond: Cond::Leq(0.0),
            term: "nonpositive prediction".into(),
        },
    );
    interp.add_rule(
        "Y",
        IntervalRule {
            cond: Cond::Gt(0.0),
            term: "positive prediction".into(),
        },
    );
    ZooModel::new(binding, interp, "affine model over explicit weight boxes")
}

/// One MLP layer: weight matrix, bias, activation.
#[derive(Debug, Clone)]
pub struct LayerSpec {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

/// A feed-forward network as a chain of layer boxes; hidden variables are
/// deliberately left uninterpreted.
pub fn mlp(layer_sizes: &[usize], layers: &[LayerSpec]) -> Result<ZooModel, ZooError> {
    if layer_sizes.len() != layers.len() + 1 {
        return Err(ZooError::DimensionMismatch(format!(
            "{} sizes for {} layers",
            layer_sizes.len(),
            layers.len()
        )));
    }
    for (k, l) in layers.iter().enumerate() {
        let (n_in, n_out) = (layer_sizes[k], layer_sizes[k + 1]);
        if l.weights.len() != n_out
            || l.weights.iter().any(|row| row.len() != n_in)
            || l.bias.len() != n_out
        {
            return Err(ZooError::DimensionMismatch(format!(
                "layer {k} is not {n_in} -> {n_out}"
            )));
        }
    }
    let variables: Vec<Variable> = (0..layer_sizes.len())
        .map(|k| Variable::new(format!("H{k}")))
        .collect();
    let mut objects = BTreeMap::new();
    for (k, &s) in layer_sizes.iter().enumerate() {
        objects.insert(format!("H{k}"), ObjectSem::RealSpace(s));
    }
    let mut generators = Vec::new();
    let mut morphs: BTreeMap<String, MorphSem> = BTreeMap::new();
    for (k, l) in layers.iter().enumerate() {
        let name = format!("layer{k}");
        generators.push(Generator::deterministic(
            name.clone(),
            vec![format!("H{k}")],
            vec![format!("H{}", k + 1)],
        ));
        let dim = layer_sizes[k + 1];
        let expr = Expr::Seq(
            Box::new(Expr::Seq(
                Box::new(Expr::Linear(l.weights.clone())),
                Box::new(Expr::BiasAdd(l.bias.clone())),
            )),
            Box::new(Expr::Activation(l.activation, dim)),
        );
        morphs.insert(
            name,
            MorphSem::RealExpr(RealExpr::new(
                vec![objects[&format!("H{k}")].clone()],
                vec![objects[&format!("H{}", k + 1)].clone()],
                expr,
            )),
        );
    }
    let sig = build_signature(variables, generators, Language::Cd)?;
    let mut main = crate::diagram::Diagram::identity(&sig, &["H0".to_string()]);
    for k in 0..layers.len() {
        main = main.compose_seq(&crate::diagram::Diagram::from_generator(
            &sig,
            &format!("layer{k}"),
        )?)?;
    }
    let mut distinguished = BTreeMap::new();
    distinguished.insert("main".to_string(), main);
    let binding = bind_model(&sig, Backend::RealVec, objects, morphs, distinguished)?;

    // Boundary variables only; hidden layers stay unlabeled.
    let mut interp = Interpretation::new(&binding);
    interp.set_var_term("H0", "input features");
    interp.set_var_term(format!("H{}", layers.len()), "network output");
    ZooModel::new(binding, interp, "feed-forward network, hidden layers uninterpreted")
}

/// Transformer-shaped diagram stub: per-position copies feed opaque
/// attention-head boxes acting on all positions, head outputs and the
/// residual stream are summed position-wise, then an opaque block maps each
/// position. The boxes are bound but carry no interpretation, and the
/// connectivity is all-to-all — the canonical uninterpreted-diagram case.
pub fn transformer_stub(
    positions: usize,
    dim: usize,
    heads: usize,
) -> Result<ZooModel, ZooError> {
    use crate::diagram::WireSrc;
    if positions == 0 || heads == 0 {
        return Err(ZooError::DimensionMismatch(
            "need at least one position and one head".into(),
        ));
    }
    let x = ObjectSem::RealSpace(dim);
    let variables = vec![Variable::new("X")];
    let mut objects = BTreeMap::new();
    objects.insert("X".to_string(), x.clone());

    let xs = vec!["X".to_string(); positions];
    let mut generators = vec![
        Generator::deterministic("blend", vec!["X".into(), "X".into()], vec!["X".into()]),
        Generator::deterministic("block", vec!["X".into()], vec!["X".into()]),
    ];
    let mut morphs: BTreeMap<String, MorphSem> = BTreeMap::new();
    morphs.insert(
        "blend".to_string(),
        MorphSem::RealExpr(RealExpr::new(
            vec![x.clone(), x.clone()],
            vec![x.clone()],
            Expr::Add(dim),
        )),
    );
    morphs.insert(
        "block".to_string(),
        MorphSem::RealExpr(RealExpr::new(
            vec![x.clone()],
            vec![x.clone()],
            Expr::Seq(
                Box::new(Expr::BiasAdd(vec![0.125; dim])),
                Box::new(Expr::Activation(Activation::Tanh, dim)),
            ),
        )),
    );
    let total = positions * dim;
    for h in 0..heads {
        let name = format!("head{h}");
        generators.push(Generator::deterministic(name.clone(), xs.clone(), xs.clone()));
        // Opaque mixing matrix; every output position reads every input.
        let matrix: Vec<Vec<f64>> = (0..total)
            .map(|r| {
                (0..total)
                    .map(|c| if (r + c + h) % 3 == 0 { 0.25 } else { 0.125 })
                    .collect()
            })
            .collect();
        morphs.insert(
            name,
            MorphSem::RealExpr(RealExpr::new(
                vec![x.clone(); positions],
                vec![x.clone(); positions],
                Expr::Linear(matrix),
            )),
        );
    }
    let sig = build_signature(variables, generators, Language::Cd)?;

    let mut builder = DiagramBuilder::new(&sig);
    // Copy every position to each head plus the residual stream.
    let mut branch: Vec<Vec<WireSrc>> = Vec::new();
    for p in 0..positions {
        builder.add_input("X");
        let c = builder.add_box(BoxKind::Copy {
            var: "X".into(),
            n: heads + 1,
        });
        builder.connect(WireSrc::Input(p), WireDst::Box(c.clone(), 0), "X");
        branch.push((0..=heads).map(|k| WireSrc::Box(c.clone(), k)).collect());
    }
    // Heads consume one branch of every position.
    let mut head_out: Vec<Vec<WireSrc>> = Vec::new();
    for h in 0..heads {
        let b = builder.add_box(BoxKind::Gen(format!("head{h}")));
        for p in 0..positions {
            builder.connect(branch[p][h].clone(), WireDst::Box(b.clone(), p), "X");
        }
        head_out.push((0..positions).map(|p| WireSrc::Box(b.clone(), p)).collect());
    }
    // Position-wise sums with the residual, then the opaque block.
    for p in 0..positions {
        let mut acc = branch[p][heads].clone();
        for h in 0..heads {
            let add = builder.add_box(BoxKind::Gen("blend".into()));
            builder.connect(acc, WireDst::Box(add.clone(), 0), "X");
            builder.connect(head_out[h][p].clone(), WireDst::Box(add.clone(), 1), "X");
            acc = WireSrc::Box(add, 0);
        }
        let blk = builder.add_box(BoxKind::Gen("block".into()));
        builder.connect(acc, WireDst::Box(blk.clone(), 0), "X");
        builder.add_output("X");
        builder.connect(WireSrc::Box(blk, 0), WireDst::Output(p), "X");
    }
    let main = builder.finish()?;
    let mut distinguished = BTreeMap::new();
    distinguished.insert("main".to_string(), main);
    let binding = bind_model(&sig, Backend::RealVec, objects, morphs, distinguished)?;
    // Boundary-only interpretation; every box stays opaque.
    let mut interp = Interpretation::new(&binding);
    interp.set_var_term("X", "token representation");
    ZooModel::new(binding, interp, "attention-shaped stub with opaque boxes")
}
