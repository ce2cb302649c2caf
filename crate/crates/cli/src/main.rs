//! Command-line front door: load model files, evaluate diagrams, run
//! influence/surgery/causal/rewrite queries, render DOT, and emit the
//! bundled fixtures. All results go to standard output as JSON; exit code 0
//! on success, 1 on domain errors, 2 on usage errors.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cim_core::causal::{counterfactual_query, condition_sharp, Fcm, OpenCausalModel};
use cim_core::diagram::Diagram;
use cim_core::influence::{semantic_no_influence, structural_no_influence, Verdict};
use cim_core::interpret::{completeness, Interpretation};
use cim_core::json::{
    diagram_from_dto, diagram_to_dto, model_to_json, parse_model, proof_to_json,
    rules_from_json, worldspec_from_json, DiagramDto,
};
use cim_core::model::ModelBinding;
use cim_core::render::render_dot;
use cim_core::rewrite::{
    enumerate_eval_rules, prove, sharp_copy_rules, sharp_state_generator, verify_rule,
    ProveOptions, RuleStatus,
};
use cim_core::semantics::{Backend, MorphSem};
use cim_core::surgery::{cfe_search, insert_probe, observe_probe, replace_box, replace_input, CfeDistance};

/// Environment variable overriding the fixture directory.
const FIXTURE_DIR_ENV: &str = "CIM_FIXTURES";

#[derive(Parser)]
#[command(name = "cim", version, about = "compositional interpretable models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ModelArg {
    /// Model file path, or a bare fixture name resolved against the fixture
    /// directory.
    #[arg(long)]
    model: String,
    /// Distinguished diagram to act on.
    #[arg(long, default_value = "main")]
    diagram: String,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a model file (binding checks, equations).
    Validate(ModelArg),
    /// Evaluate the selected diagram and print its semantics.
    Eval {
        #[command(flatten)]
        model: ModelArg,
    },
    /// No-influence analysis from an input to an output.
    Influence {
        #[command(flatten)]
        model: ModelArg,
        /// Input variable name or index.
        #[arg(long)]
        input: String,
        /// Output variable name or index.
        #[arg(long)]
        output: String,
        /// Run the exhaustive semantic check even when structure decides.
        #[arg(long)]
        semantic: bool,
    },
    /// Diagram surgery: replace a box, insert a probe, observe a wire,
    /// close an input, or apply a causal do-intervention.
    Intervene {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long, value_name = "BOX_ID")]
        replace_box: Option<String>,
        /// Replacement diagram (JSON file) for --replace-box.
        #[arg(long, value_name = "FILE")]
        with: Option<PathBuf>,
        /// Wire index for --classifier probes.
        #[arg(long)]
        wire: Option<usize>,
        /// Classifier generator: inserted as copy+classify (observe).
        #[arg(long)]
        classifier: Option<String>,
        /// Probe generator V -> V⊗C: cut the wire and splice it in.
        #[arg(long)]
        probe: Option<String>,
        /// Close an input with a sharp value: "Var=value".
        #[arg(long, value_name = "VAR=VALUE")]
        set_input: Vec<String>,
        /// Causal do-intervention on the network diagram: "Var=value".
        #[arg(long, value_name = "VAR=VALUE")]
        r#do: Vec<String>,
    },
    /// Parallel-worlds counterfactual on an FCM.
    Counterfactual {
        #[command(flatten)]
        model: ModelArg,
        /// World specification JSON file.
        #[arg(long)]
        spec: PathBuf,
        /// Comma-separated exogenous variables.
        #[arg(long)]
        exogenous: String,
    },
    /// Evaluate the diagram to a joint state and condition on sharp values.
    Condition {
        #[command(flatten)]
        model: ModelArg,
        /// Observations "Var=value", applied in order.
        #[arg(long, value_name = "VAR=VALUE", required = true)]
        observe: Vec<String>,
    },
    /// Counterfactual-explanation search over a finite deterministic model.
    Cfe {
        #[command(flatten)]
        model: ModelArg,
        /// Input assignment: inline JSON object or a path to one.
        #[arg(long)]
        input: String,
        /// Target output value (element label of the single output).
        #[arg(long)]
        target: String,
        /// "hamming" or "weighted:w1,w2,...".
        #[arg(long, default_value = "hamming")]
        distance: String,
    },
    /// Verify rules and search for a rewrite proof between two diagrams.
    Rewrite {
        #[command(flatten)]
        model: ModelArg,
        /// Rules JSON file.
        #[arg(long)]
        rules: PathBuf,
        /// Goal diagram JSON file, or a distinguished name prefixed with
        /// '@'.
        #[arg(long)]
        goal: String,
        #[arg(long, default_value_t = 32)]
        budget: usize,
        #[arg(long)]
        allow_reverse: bool,
    },
    /// Rewrite explanation of one output: close the inputs, then trace with
    /// evaluation rules to the target output state.
    Explain {
        #[command(flatten)]
        model: ModelArg,
        /// Input assignment: inline JSON object or a path to one.
        #[arg(long)]
        input: String,
        /// Expected output value (element label of the single output).
        #[arg(long)]
        target: String,
        /// Rule source; only "eval" (generated evaluation rules) for now.
        #[arg(long, default_value = "eval")]
        rules: String,
        #[arg(long, default_value_t = 32)]
        budget: usize,
    },
    /// Render the selected diagram as DOT.
    Render {
        #[command(flatten)]
        model: ModelArg,
        /// Write to a file instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Ignore any interpretation in the model file.
        #[arg(long)]
        no_interp: bool,
    },
    /// Write the bundled fixture models as JSON files.
    Fixtures {
        /// Output directory (defaults to $CIM_FIXTURES or ./fixtures).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn fixture_dir() -> PathBuf {
    std::env::var_os(FIXTURE_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("fixtures"))
}

fn resolve_model_path(name: &str) -> PathBuf {
    let direct = PathBuf::from(name);
    if direct.exists() {
        return direct;
    }
    if !name.contains('/') {
        let candidate = fixture_dir().join(format!("{name}.json"));
        if candidate.exists() {
            return candidate;
        }
    }
    direct
}

fn load_model(arg: &ModelArg) -> Result<(ModelBinding, Option<Interpretation>, Diagram), String> {
    let path = resolve_model_path(&arg.model);
    let text = std::fs::read_to_string(&path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let (binding, interp) = parse_model(&text).map_err(|e| e.to_string())?;
    let diagram = binding
        .distinguished(&arg.diagram)
        .cloned()
        .ok_or_else(|| format!("model has no distinguished diagram `{}`", arg.diagram))?;
    Ok((binding, interp, diagram))
}

fn parse_assignment(s: &str) -> Result<(String, String), String> {
    s.split_once('=')
        .map(|(a, b)| (a.trim().to_string(), b.trim().to_string()))
        .ok_or_else(|| format!("expected VAR=VALUE, got `{s}`"))
}

fn read_inline_or_file(s: &str) -> Result<String, String> {
    if s.trim_start().starts_with('{') {
        Ok(s.to_string())
    } else {
        std::fs::read_to_string(s).map_err(|e| format!("cannot read {s}: {e}"))
    }
}

fn boundary_index(vars: &[String], key: &str) -> Result<usize, String> {
    if let Ok(i) = key.parse::<usize>() {
        if i < vars.len() {
            return Ok(i);
        }
    }
    vars.iter()
        .position(|v| v == key)
        .ok_or_else(|| format!("`{key}` is neither an index nor a boundary variable"))
}

fn print_json(v: serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(&v).expect("serializable"));
}

fn sem_to_json(m: &MorphSem) -> serde_json::Value {
    serde_json::to_value(cim_core::json::morph_to_dto(m)).expect("serializable")
}

fn run(cmd: Command) -> Result<(), String> {
    match cmd {
        Command::Validate(arg) => {
            // Validation does not require any particular distinguished
            // diagram; every one in the file is checked.
            let path = resolve_model_path(&arg.model);
            let text = std::fs::read_to_string(&path)
                .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            let (binding, interp) = parse_model(&text).map_err(|e| e.to_string())?;
            let mut violations = Vec::new();
            for (name, d) in binding.distinguished_map() {
                for v in d.validate() {
                    violations.push(format!("{name}: {v}"));
                }
            }
            let eq_dists =
                cim_core::model::check_equations(&binding).map_err(|e| e.to_string())?;
            let comp = interp.as_ref().map(completeness);
            print_json(serde_json::json!({
                "ok": violations.is_empty(),
                "backend": binding.backend().to_string(),
                "diagram_violations": violations,
                "equation_distances": eq_dists,
                "completeness": comp.map(|c| serde_json::json!({
                    "complete": c.complete,
                    "complete_concrete": c.complete_concrete,
                    "uninterpreted_variables": c.uninterpreted_variables,
                    "uninterpreted_generators": c.uninterpreted_generators,
                })),
            }));
            Ok(())
        }
        Command::Eval { model } => {
            let (binding, _, diagram) = load_model(&model)?;
            let sem = binding.eval(&diagram).map_err(|e| e.to_string())?;
            print_json(serde_json::json!({
                "inputs": diagram.input_vars(),
                "outputs": diagram.output_vars(),
                "semantics": sem_to_json(&sem),
            }));
            Ok(())
        }
        Command::Influence {
            model,
            input,
            output,
            semantic,
        } => {
            let (binding, _, diagram) = load_model(&model)?;
            let in_idx = boundary_index(diagram.input_vars(), &input)?;
            let out_idx = boundary_index(diagram.output_vars(), &output)?;
            let structural =
                structural_no_influence(&diagram, in_idx, out_idx).map_err(|e| e.to_string())?;
            let mut verdict = match structural.verdict {
                Verdict::StructuralNoInfluence => "structural_no_influence".to_string(),
                _ => "unknown".to_string(),
            };
            let mut witness = serde_json::Value::Null;
            let run_semantic = semantic || verdict == "unknown";
            if run_semantic
                && matches!(binding.backend(), Backend::FinFn | Backend::Stoch)
            {
                let cert = semantic_no_influence(&binding, &diagram, in_idx, out_idx)
                    .map_err(|e| e.to_string())?;
                match cert.verdict {
                    Verdict::SemanticNoInfluence => {
                        if verdict == "unknown" {
                            verdict = "semantic_no_influence".into();
                        }
                    }
                    Verdict::InfluenceWitness { lhs, rhs } => {
                        verdict = "influence".into();
                        witness = serde_json::json!({ "lhs": lhs, "rhs": rhs });
                    }
                    _ => {}
                }
            }
            print_json(serde_json::json!({
                "verdict": verdict,
                "input": input,
                "output": output,
                "witness": witness,
            }));
            Ok(())
        }
        Command::Intervene {
            model,
            replace_box: rb,
            with,
            wire,
            classifier,
            probe,
            set_input,
            r#do,
        } => {
            let (binding, _, mut diagram) = load_model(&model)?;
            let mut notes = Vec::new();
            if !r#do.is_empty() {
                let causal =
                    OpenCausalModel::new(binding.clone(), &diagram).map_err(|e| e.to_string())?;
                let mut assignments = BTreeMap::new();
                for a in &r#do {
                    let (k, v) = parse_assignment(a)?;
                    assignments.insert(k, v);
                }
                let done = causal.do_intervention(&assignments).map_err(|e| e.to_string())?;
                let sem = done.semantics().map_err(|e| e.to_string())?;
                print_json(serde_json::json!({
                    "note": "post-intervention model",
                    "diagram": serde_json::to_value(diagram_to_dto(&done.network.diagram)).unwrap(),
                    "semantics": sem_to_json(&sem),
                }));
                return Ok(());
            }
            if let Some(box_id) = rb {
                let with = with.ok_or("--replace-box requires --with <diagram.json>")?;
                let text = std::fs::read_to_string(&with)
                    .map_err(|e| format!("cannot read {}: {e}", with.display()))?;
                let dto: DiagramDto = serde_json::from_str(&text).map_err(|e| e.to_string())?;
                let replacement =
                    diagram_from_dto(binding.signature(), &dto).map_err(|e| e.to_string())?;
                let rec = replace_box(&diagram, &box_id, &replacement).map_err(|e| e.to_string())?;
                diagram = rec.result;
                notes.push(rec.note);
            }
            if let Some(gen) = probe {
                let wire = wire.ok_or("--probe requires --wire <index>")?;
                let rec = insert_probe(&diagram, wire, &gen).map_err(|e| e.to_string())?;
                diagram = rec.result;
                notes.push(rec.note);
            } else if let Some(gen) = classifier {
                let wire = wire.ok_or("--classifier requires --wire <index>")?;
                let rec = observe_probe(&diagram, wire, &gen).map_err(|e| e.to_string())?;
                diagram = rec.result;
                notes.push(rec.note);
            }
            for assignment in &set_input {
                let (var, value) = parse_assignment(assignment)?;
                let idx = boundary_index(diagram.input_vars(), &var)?;
                let state = sharp_state_generator(&binding, &var, &value)
                    .ok_or_else(|| format!("no sharp state bound for {var}={value}"))?;
                let rec = replace_input(&diagram, idx, &state).map_err(|e| e.to_string())?;
                diagram = rec.result;
                notes.push(rec.note);
            }
            let sem = binding.eval(&diagram).map_err(|e| e.to_string())?;
            print_json(serde_json::json!({
                "note": notes.join("; "),
                "diagram": serde_json::to_value(diagram_to_dto(&diagram)).unwrap(),
                "semantics": sem_to_json(&sem),
            }));
            Ok(())
        }
        Command::Counterfactual {
            model,
            spec,
            exogenous,
        } => {
            let (binding, _, diagram) = load_model(&model)?;
            let causal =
                OpenCausalModel::new(binding.clone(), &diagram).map_err(|e| e.to_string())?;
            let exo = exogenous
                .split(',')
                .map(|s| s.trim().to_string())
                .collect();
            let fcm = Fcm::new(causal, &exo).map_err(|e| e.to_string())?;
            let text = std::fs::read_to_string(&spec)
                .map_err(|e| format!("cannot read {}: {e}", spec.display()))?;
            let worlds = worldspec_from_json(&text).map_err(|e| e.to_string())?;
            let result = counterfactual_query(&fcm, &worlds).map_err(|e| e.to_string())?;
            print_json(serde_json::json!({ "distribution": sem_to_json(&result) }));
            Ok(())
        }
        Command::Condition { model, observe } => {
            let (binding, _, diagram) = load_model(&model)?;
            let mut state = binding.eval(&diagram).map_err(|e| e.to_string())?;
            let mut factors: Vec<String> = diagram.output_vars().to_vec();
            for obs in &observe {
                let (var, value) = parse_assignment(obs)?;
                let pos = factors
                    .iter()
                    .position(|v| v == &var)
                    .ok_or_else(|| format!("`{var}` is not an open output factor"))?;
                let idx = binding
                    .object(&var)
                    .and_then(|o| o.element_index(&value))
                    .ok_or_else(|| format!("`{value}` is not a value of `{var}`"))?;
                state = condition_sharp(&state, pos, idx).map_err(|e| e.to_string())?;
                factors.remove(pos);
            }
            print_json(serde_json::json!({
                "remaining": factors,
                "distribution": sem_to_json(&state),
            }));
            Ok(())
        }
        Command::Cfe {
            model,
            input,
            target,
            distance,
        } => {
            let (binding, _, diagram) = load_model(&model)?;
            let text = read_inline_or_file(&input)?;
            let assignment: BTreeMap<String, String> =
                serde_json::from_str(&text).map_err(|e| e.to_string())?;
            let tuple: Vec<usize> = diagram
                .input_vars()
                .iter()
                .map(|v| {
                    let value = assignment
                        .get(v)
                        .ok_or_else(|| format!("input `{v}` unassigned"))?;
                    binding
                        .object(v)
                        .and_then(|o| o.element_index(value))
                        .ok_or_else(|| format!("`{value}` is not a value of `{v}`"))
                })
                .collect::<Result<_, String>>()?;
            if diagram.output_vars().len() != 1 {
                return Err("cfe requires a single output".into());
            }
            let target_idx = binding
                .object(&diagram.output_vars()[0])
                .and_then(|o| o.element_index(&target))
                .ok_or_else(|| format!("`{target}` is not an output value"))?;
            let dist = if distance == "hamming" {
                CfeDistance::Hamming
            } else if let Some(ws) = distance.strip_prefix("weighted:") {
                let weights = ws
                    .split(',')
                    .map(|w| w.trim().parse::<f64>().map_err(|e| e.to_string()))
                    .collect::<Result<Vec<_>, _>>()?;
                CfeDistance::WeightedHamming(weights)
            } else {
                return Err(format!("unknown distance `{distance}`"));
            };
            let result = cfe_search(&binding, &diagram, &tuple, target_idx, &dist)
                .map_err(|e| e.to_string())?;
            let labeled: Vec<BTreeMap<String, String>> = result
                .minimal_inputs
                .iter()
                .map(|tuple| {
                    diagram
                        .input_vars()
                        .iter()
                        .zip(tuple)
                        .map(|(v, &i)| {
                            let label =
                                binding.object(v).unwrap().elements().unwrap()[i].clone();
                            (v.clone(), label)
                        })
                        .collect()
                })
                .collect();
            print_json(serde_json::json!({
                "distance": result.distance,
                "alternatives": labeled,
            }));
            Ok(())
        }
        Command::Rewrite {
            model,
            rules,
            goal,
            budget,
            allow_reverse,
        } => {
            let (binding, interp, diagram) = load_model(&model)?;
            let interp = interp.unwrap_or_else(|| Interpretation::new(&binding));
            let text = std::fs::read_to_string(&rules)
                .map_err(|e| format!("cannot read {}: {e}", rules.display()))?;
            let parsed =
                rules_from_json(binding.signature(), &text).map_err(|e| e.to_string())?;
            let mut verified = Vec::new();
            for rule in &parsed {
                verified.push(verify_rule(&binding, rule).map_err(|e| e.to_string())?);
            }
            let goal_diagram = if let Some(name) = goal.strip_prefix('@') {
                binding
                    .distinguished(name)
                    .cloned()
                    .ok_or_else(|| format!("no distinguished diagram `{name}`"))?
            } else {
                let text = std::fs::read_to_string(&goal)
                    .map_err(|e| format!("cannot read {goal}: {e}"))?;
                let dto: DiagramDto = serde_json::from_str(&text).map_err(|e| e.to_string())?;
                diagram_from_dto(binding.signature(), &dto).map_err(|e| e.to_string())?
            };
            let outcome = prove(
                &binding,
                &interp,
                &diagram,
                &goal_diagram,
                &verified,
                ProveOptions {
                    budget,
                    allow_reverse,
                    ..Default::default()
                },
            )
            .map_err(|e| e.to_string())?;
            match outcome {
                Ok(proof) => {
                    print_json(serde_json::json!({
                        "proved": true,
                        "proof": proof_to_json(&proof),
                        "rule_status": verified.iter().map(|r| serde_json::json!({
                            "name": r.name,
                            "measured": match r.status {
                                RuleStatus::Verified(d) => Some(d),
                                _ => None,
                            },
                        })).collect::<Vec<_>>(),
                    }));
                    Ok(())
                }
                Err(f) => {
                    print_json(serde_json::json!({ "proved": false, "failure": format!("{f:?}") }));
                    Err("no proof found".into())
                }
            }
        }
        Command::Explain {
            model,
            input,
            target,
            rules,
            budget,
        } => {
            if rules != "eval" {
                return Err(format!("unknown rule source `{rules}`"));
            }
            let (binding, interp, diagram) = load_model(&model)?;
            let interp = interp.unwrap_or_else(|| Interpretation::new(&binding));
            let text = read_inline_or_file(&input)?;
            let assignment: BTreeMap<String, String> =
                serde_json::from_str(&text).map_err(|e| e.to_string())?;
            let mut closed = diagram.clone();
            while !closed.input_vars().is_empty() {
                let var = closed.input_vars()[0].clone();
                let value = assignment
                    .get(&var)
                    .ok_or_else(|| format!("input `{var}` unassigned"))?;
                let state = sharp_state_generator(&binding, &var, value)
                    .ok_or_else(|| format!("no sharp state bound for {var}={value}"))?;
                closed = replace_input(&closed, 0, &state)
                    .map_err(|e| e.to_string())?
                    .result;
            }
            if closed.output_vars().len() != 1 {
                return Err("explain requires a single output".into());
            }
            let out_var = closed.output_vars()[0].clone();
            let goal_state = sharp_state_generator(&binding, &out_var, &target)
                .ok_or_else(|| format!("no sharp state bound for {out_var}={target}"))?;
            let goal = Diagram::from_generator(binding.signature(), &goal_state)
                .map_err(|e| e.to_string())?;
            let mut all_rules = sharp_copy_rules(&binding);
            all_rules.extend(enumerate_eval_rules(&binding, 256));
            let outcome = prove(
                &binding,
                &interp,
                &closed,
                &goal,
                &all_rules,
                ProveOptions {
                    budget,
                    ..Default::default()
                },
            )
            .map_err(|e| e.to_string())?;
            match outcome {
                Ok(proof) => {
                    print_json(serde_json::json!({
                        "proved": true,
                        "proof": proof_to_json(&proof),
                        "explanation": cim_core::interpret::describe(&interp, &closed),
                    }));
                    Ok(())
                }
                Err(f) => {
                    print_json(serde_json::json!({ "proved": false, "failure": format!("{f:?}") }));
                    Err("no explanation found".into())
                }
            }
        }
        Command::Render {
            model,
            out,
            no_interp,
        } => {
            let (_, interp, diagram) = load_model(&model)?;
            let interp = if no_interp { None } else { interp };
            let dot = render_dot(&diagram, interp.as_ref());
            match out {
                Some(path) => std::fs::write(&path, dot)
                    .map_err(|e| format!("cannot write {}: {e}", path.display()))?,
                None => print!("{dot}"),
            }
            Ok(())
        }
        Command::Fixtures { out } => {
            let dir = out.unwrap_or_else(fixture_dir);
            std::fs::create_dir_all(&dir)
                .map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
            let mut written = Vec::new();
            let mut write = |name: &str, binding: &ModelBinding, interp: Option<&Interpretation>| -> Result<(), String> {
                let text = model_to_json(binding, interp).map_err(|e| e.to_string())?;
                let path = dir.join(format!("{name}.json"));
                std::fs::write(&path, text)
                    .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
                written.push(path.display().to_string());
                Ok(())
            };
            let sprinkler = cim_core::zoo::sprinkler_model().map_err(|e| e.to_string())?;
            write("sprinkler", &sprinkler.model.binding, Some(&sprinkler.model.interpretation))?;
            let smoking = cim_core::zoo::smoking_model().map_err(|e| e.to_string())?;
            write("smoking", &smoking.model.binding, Some(&smoking.model.interpretation))?;
            let (aspirin, _) = cim_core::zoo::aspirin_fcm().map_err(|e| e.to_string())?;
            write("aspirin", &aspirin.binding, Some(&aspirin.interpretation))?;
            let dl = cim_core::zoo::decision_list().map_err(|e| e.to_string())?;
            write("decision_list", &dl.binding, Some(&dl.interpretation))?;
            let sc = cim_core::zoo::compas_scoring().map_err(|e| e.to_string())?;
            write("scoring", &sc.binding, Some(&sc.interpretation))?;
            let tree = cim_core::zoo::decision_tree().map_err(|e| e.to_string())?;
            write("decision_tree", &tree.binding, Some(&tree.interpretation))?;
            let hiring = cim_core::zoo::hiring_fixture().map_err(|e| e.to_string())?;
            write("hiring", &hiring.model.binding, Some(&hiring.model.interpretation))?;
            let loc = cim_core::zoo::location_fixture(Backend::FinFn).map_err(|e| e.to_string())?;
            write("location", &loc.model.binding, Some(&loc.model.interpretation))?;
            let locq = cim_core::zoo::location_fixture(Backend::Quant).map_err(|e| e.to_string())?;
            write("location_quantum", &locq.model.binding, Some(&locq.model.interpretation))?;
            print_json(serde_json::json!({ "written": written }));
            Ok(())
        }
    }
}
