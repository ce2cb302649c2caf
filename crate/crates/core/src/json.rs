//! JSON schemas: model files (signature + backend + semantics payloads +
//! optional interpretation), diagrams, world specifications and rule files.
//!
//! Files carry an explicit schema version and unknown fields are rejected,
//! so fixtures stay honest. Wire endpoints are encoded as `["in", i]`,
//! `["out", j]` or `[box_id, port]`; the box ids "in"/"out" are reserved.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagram::{BoxKind, DiagBox, Diagram, Wire, WireDst, WireSrc};
use crate::interpret::{Cond, Interpretation, IntervalRule};
use crate::model::{bind_model, ModelBinding, ModelError};
use crate::rewrite::{EpsBound, RewriteProof, RewriteRule};
use crate::semantics::{
    flat_index, flat_size, unflat_index, Activation, Backend, CMat, Expr, FnTable, KrausMorph,
    MorphSem, ObjectSem, RealExpr, SemanticsError, StochMatrix,
};
use crate::signature::{
    build_signature, Equation, GenFlags, Generator, Language, Signature, SignatureError, Variable,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum JsonError {
    #[error("parse error: {0}")]
    ParseError(String),
    #[error("schema version {found} unsupported (expected {SCHEMA_VERSION})")]
    SchemaVersionMismatch { found: u32 },
    #[error(transparent)]
    Signature(#[from] SignatureError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
}

impl From<serde_json::Error> for JsonError {
    fn from(e: serde_json::Error) -> Self {
        JsonError::ParseError(e.to_string())
    }
}

// ---------------------------------------------------------------------------
// DTOs
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub version: u32,
    pub language: Language,
    pub variables: Vec<String>,
    pub generators: Vec<GeneratorDto>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub equations: Vec<EquationDto>,
    pub backend: Backend,
    pub objects: BTreeMap<String, ObjectDto>,
    pub morphisms: BTreeMap<String, MorphDto>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub distinguished: BTreeMap<String, DiagramDto>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interpretation: Option<InterpretationDto>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorDto {
    pub name: String,
    pub dom: Vec<String>,
    pub cod: Vec<String>,
    #[serde(default)]
    pub channel: bool,
    #[serde(default)]
    pub deterministic: bool,
    #[serde(default)]
    pub sharp: bool,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquationDto {
    pub lhs: DiagramDto,
    pub rhs: DiagramDto,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum ObjectDto {
    Elements { elements: Vec<String> },
    Dim { dim: usize },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub enum MorphDto {
    #[serde(rename = "table")]
    Table(BTreeMap<String, String>),
    #[serde(rename = "matrix")]
    Matrix {
        rows: Vec<String>,
        cols: Vec<String>,
        entries: Vec<Vec<f64>>,
    },
    #[serde(rename = "kraus")]
    Kraus(Vec<Vec<Vec<[f64; 2]>>>),
    #[serde(rename = "expr")]
    Expr(ExprDto),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase", deny_unknown_fields)]
pub enum ExprDto {
    Id { dim: usize },
    Const { values: Vec<f64> },
    Linear { matrix: Vec<Vec<f64>> },
    Bias { values: Vec<f64> },
    Activation { name: String, dim: usize },
    Add { dim: usize },
    Scale { r: f64, dim: usize },
    Copy { dim: usize, n: usize },
    Discard { dim: usize },
    Permute { dims: Vec<usize>, perm: Vec<usize> },
    Seq { items: Vec<ExprDto> },
    Par { items: Vec<ExprDto> },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagramDto {
    pub boxes: Vec<BoxDto>,
    pub wires: Vec<WireDto>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum BoxDto {
    Gen { id: String, gen: String },
    Copy { id: String, var: String, n: usize },
    Discard { id: String, var: String },
    Swap { id: String, a: String, b: String },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WireDto {
    pub from: (String, usize),
    pub to: (String, usize),
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterpretationDto {
    #[serde(default)]
    pub objects: BTreeMap<String, String>,
    #[serde(default)]
    pub generators: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub concrete: Vec<ConcreteDto>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rules: Vec<RuleEntryDto>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, untagged)]
pub enum ConcreteDto {
    /// A generator's bound morphism carries this term.
    Gen { gen: String, term: String },
    /// The sharp state `value` of variable `cod[0]` carries this term.
    State {
        dom: Vec<String>,
        cod: Vec<String>,
        value: String,
        term: String,
    },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleEntryDto {
    pub var: String,
    pub cond: CondDto,
    pub term: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum CondDto {
    Leq(f64),
    Lt(f64),
    Geq(f64),
    Gt(f64),
    Range(f64, f64),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldSpecFile {
    pub worlds: Vec<WorldDto>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldDto {
    #[serde(default, rename = "do")]
    pub interventions: BTreeMap<String, String>,
    #[serde(default)]
    pub observe: BTreeMap<String, String>,
    #[serde(default)]
    pub marginalize: Vec<String>,
    #[serde(default)]
    pub query: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleDto {
    pub name: String,
    pub lhs: DiagramDto,
    pub rhs: DiagramDto,
    pub epsilon: f64,
}

// ---------------------------------------------------------------------------
// Diagrams
// ---------------------------------------------------------------------------

pub fn diagram_to_dto(d: &Diagram) -> DiagramDto {
    let boxes = d
        .boxes()
        .iter()
        .map(|b| match &b.kind {
            BoxKind::Gen(g) => BoxDto::Gen {
                id: b.id.clone(),
                gen: g.clone(),
            },
            BoxKind::Copy { var, n } => BoxDto::Copy {
                id: b.id.clone(),
                var: var.clone(),
                n: *n,
            },
            BoxKind::Discard { var } => BoxDto::Discard {
                id: b.id.clone(),
                var: var.clone(),
            },
            BoxKind::Swap { a, b: bb } => BoxDto::Swap {
                id: b.id.clone(),
                a: a.clone(),
                b: bb.clone(),
            },
        })
        .collect();
    let wires = d
        .wires()
        .iter()
        .map(|w| WireDto {
            from: match &w.src {
                WireSrc::Input(i) => ("in".to_string(), *i),
                WireSrc::Box(id, p) => (id.clone(), *p),
            },
            to: match &w.dst {
                WireDst::Output(j) => ("out".to_string(), *j),
                WireDst::Box(id, p) => (id.clone(), *p),
            },
        })
        .collect();
    DiagramDto {
        boxes,
        wires,
        inputs: d.input_vars().to_vec(),
        outputs: d.output_vars().to_vec(),
    }
}

pub fn diagram_from_dto(sig: &Signature, dto: &DiagramDto) -> Result<Diagram, JsonError> {
    let mut boxes = Vec::new();
    for b in &dto.boxes {
        let (id, kind) = match b {
            BoxDto::Gen { id, gen } => (id, BoxKind::Gen(gen.clone())),
            BoxDto::Copy { id, var, n } => (
                id,
                BoxKind::Copy {
                    var: var.clone(),
                    n: *n,
                },
            ),
            BoxDto::Discard { id, var } => (id, BoxKind::Discard { var: var.clone() }),
            BoxDto::Swap { id, a, b } => (
                id,
                BoxKind::Swap {
                    a: a.clone(),
                    b: b.clone(),
                },
            ),
        };
        if id == "in" || id == "out" {
            return Err(JsonError::ParseError(format!(
                "box id `{id}` is reserved"
            )));
        }
        boxes.push(DiagBox {
            id: id.clone(),
            kind,
        });
    }
    // The wire variable is recoverable from its source endpoint.
    let kind_of = |id: &str| -> Option<&BoxKind> {
        boxes.iter().find(|b| b.id == id).map(|b| &b.kind)
    };
    let mut wires = Vec::new();
    for (wi, w) in dto.wires.iter().enumerate() {
        let src = match w.from.0.as_str() {
            "in" => WireSrc::Input(w.from.1),
            id => WireSrc::Box(id.to_string(), w.from.1),
        };
        let dst = match w.to.0.as_str() {
            "out" => WireDst::Output(w.to.1),
            id => WireDst::Box(id.to_string(), w.to.1),
        };
        let var = match &src {
            WireSrc::Input(i) => dto
                .inputs
                .get(*i)
                .cloned()
                .ok_or_else(|| JsonError::ParseError(format!("wire {wi}: bad input index")))?,
            WireSrc::Box(id, p) => {
                let kind = kind_of(id).ok_or_else(|| {
                    JsonError::ParseError(format!("wire {wi}: unknown box `{id}`"))
                })?;
                let (_, cod) = crate::diagram::kind_interface(sig, kind);
                cod.get(*p)
                    .cloned()
                    .ok_or_else(|| JsonError::ParseError(format!("wire {wi}: bad port")))?
            }
        };
        wires.push(Wire { src, dst, var });
    }
    let d = Diagram {
        sig: sig.clone(),
        boxes,
        wires,
        inputs: dto.inputs.clone(),
        outputs: dto.outputs.clone(),
    };
    let violations = d.validate();
    if let Some(v) = violations.first() {
        return Err(JsonError::ParseError(format!("invalid diagram: {v}")));
    }
    Ok(d)
}

// ---------------------------------------------------------------------------
// Objects and morphisms
// ---------------------------------------------------------------------------

fn object_to_dto(o: &ObjectSem) -> ObjectDto {
    match o {
        ObjectSem::FinSet(e) | ObjectSem::ProbSpace(e) => ObjectDto::Elements {
            elements: e.clone(),
        },
        ObjectSem::Hilbert(d) | ObjectSem::RealSpace(d) => ObjectDto::Dim { dim: *d },
    }
}

fn object_from_dto(backend: Backend, dto: &ObjectDto) -> Result<ObjectSem, JsonError> {
    match (backend, dto) {
        (Backend::FinFn, ObjectDto::Elements { elements }) => {
            Ok(ObjectSem::FinSet(elements.clone()))
        }
        (Backend::Stoch, ObjectDto::Elements { elements }) => {
            Ok(ObjectSem::ProbSpace(elements.clone()))
        }
        (Backend::Quant, ObjectDto::Dim { dim }) => Ok(ObjectSem::Hilbert(*dim)),
        (Backend::RealVec, ObjectDto::Dim { dim }) => Ok(ObjectSem::RealSpace(*dim)),
        _ => Err(JsonError::ParseError(format!(
            "object payload does not fit backend {backend}"
        ))),
    }
}

/// Tuple label of a flat index over factors: "x" or "(x,y)".
fn tuple_label(objs: &[ObjectSem], flat: usize) -> String {
    let idx = unflat_index(objs, flat);
    let parts: Vec<String> = objs
        .iter()
        .zip(idx.iter())
        .map(|(o, &i)| o.elements().unwrap()[i].clone())
        .collect();
    match parts.len() {
        1 => parts.into_iter().next().unwrap(),
        _ => format!("({})", parts.join(",")),
    }
}

fn parse_tuple_label(objs: &[ObjectSem], label: &str) -> Result<usize, JsonError> {
    let parts: Vec<&str> = if label.starts_with('(') && label.ends_with(')') {
        let inner = &label[1..label.len() - 1];
        if inner.is_empty() {
            Vec::new()
        } else {
            inner.split(',').map(|s| s.trim()).collect()
        }
    } else if objs.is_empty() && (label.is_empty() || label == "()") {
        Vec::new()
    } else {
        vec![label]
    };
    if parts.len() != objs.len() {
        return Err(JsonError::ParseError(format!(
            "label `{label}` has {} parts, expected {}",
            parts.len(),
            objs.len()
        )));
    }
    let idx: Vec<usize> = objs
        .iter()
        .zip(parts.iter())
        .map(|(o, p)| {
            o.element_index(p)
                .ok_or_else(|| JsonError::ParseError(format!("unknown element `{p}`")))
        })
        .collect::<Result<_, _>>()?;
    Ok(flat_index(objs, &idx))
}

fn expr_to_dto(e: &Expr) -> ExprDto {
    match e {
        Expr::Id(d) => ExprDto::Id { dim: *d },
        Expr::Const(v) => ExprDto::Const { values: v.clone() },
        Expr::Linear(m) => ExprDto::Linear { matrix: m.clone() },
        Expr::BiasAdd(v) => ExprDto::Bias { values: v.clone() },
        Expr::Activation(a, d) => ExprDto::Activation {
            name: a.name().to_string(),
            dim: *d,
        },
        Expr::Add(d) => ExprDto::Add { dim: *d },
        Expr::ScalarMult(r, d) => ExprDto::Scale { r: *r, dim: *d },
        Expr::Copy { dim, n } => ExprDto::Copy { dim: *dim, n: *n },
        Expr::Discard(d) => ExprDto::Discard { dim: *d },
        Expr::Permute { dims, perm } => ExprDto::Permute {
            dims: dims.clone(),
            perm: perm.clone(),
        },
        Expr::Seq(a, b) => ExprDto::Seq {
            items: vec![expr_to_dto(a), expr_to_dto(b)],
        },
        Expr::Par(a, b) => ExprDto::Par {
            items: vec![expr_to_dto(a), expr_to_dto(b)],
        },
    }
}

fn expr_from_dto(dto: &ExprDto) -> Result<Expr, JsonError> {
    Ok(match dto {
        ExprDto::Id { dim } => Expr::Id(*dim),
        ExprDto::Const { values } => Expr::Const(values.clone()),
        ExprDto::Linear { matrix } => Expr::Linear(matrix.clone()),
        ExprDto::Bias { values } => Expr::BiasAdd(values.clone()),
        ExprDto::Activation { name, dim } => {
            let a = match name.as_str() {
                "relu" => Activation::Relu,
                "sigmoid" => Activation::Sigmoid,
                "tanh" => Activation::Tanh,
                "softmax" => Activation::Softmax,
                "id" => Activation::Id,
                other => {
                    return Err(JsonError::ParseError(format!(
                        "unknown activation `{other}`"
                    )))
                }
            };
            Expr::Activation(a, *dim)
        }
        ExprDto::Add { dim } => Expr::Add(*dim),
        ExprDto::Scale { r, dim } => Expr::ScalarMult(*r, *dim),
        ExprDto::Copy { dim, n } => Expr::Copy { dim: *dim, n: *n },
        ExprDto::Discard { dim } => Expr::Discard(*dim),
        ExprDto::Permute { dims, perm } => Expr::Permute {
            dims: dims.clone(),
            perm: perm.clone(),
        },
        ExprDto::Seq { items } => {
            let mut exprs = items.iter().map(expr_from_dto).collect::<Result<Vec<_>, _>>()?;
            let mut acc = exprs
                .drain(..1)
                .next()
                .ok_or_else(|| JsonError::ParseError("empty seq".into()))?;
            for e in exprs {
                acc = Expr::Seq(Box::new(acc), Box::new(e));
            }
            acc
        }
        ExprDto::Par { items } => {
            let mut exprs = items.iter().map(expr_from_dto).collect::<Result<Vec<_>, _>>()?;
            let mut acc = exprs
                .drain(..1)
                .next()
                .ok_or_else(|| JsonError::ParseError("empty par".into()))?;
            for e in exprs {
                acc = Expr::Par(Box::new(acc), Box::new(e));
            }
            acc
        }
    })
}

pub fn morph_to_dto(m: &MorphSem) -> MorphDto {
    match m {
        MorphSem::FnTable(t) => {
            let mut table = BTreeMap::new();
            for (x, &y) in t.map.iter().enumerate() {
                table.insert(tuple_label(&t.dom, x), tuple_label(&t.cod, y));
            }
            MorphDto::Table(table)
        }
        MorphSem::Matrix(m) => {
            let rows = (0..m.cod_size()).map(|r| tuple_label(&m.cod, r)).collect();
            let cols = (0..m.dom_size()).map(|c| tuple_label(&m.dom, c)).collect();
            let entries = (0..m.cod_size())
                .map(|r| (0..m.dom_size()).map(|c| m.entry(r, c)).collect())
                .collect();
            MorphDto::Matrix {
                rows,
                cols,
                entries,
            }
        }
        MorphSem::Kraus(k) => MorphDto::Kraus(
            k.ops
                .iter()
                .map(|op| {
                    (0..op.rows)
                        .map(|r| {
                            (0..op.cols)
                                .map(|c| {
                                    let v = op.get(r, c);
                                    [v.re, v.im]
                                })
                                .collect()
                        })
                        .collect()
                })
                .collect(),
        ),
        MorphSem::RealExpr(e) => MorphDto::Expr(expr_to_dto(&e.expr)),
    }
}

fn morph_from_dto(
    backend: Backend,
    dom: Vec<ObjectSem>,
    cod: Vec<ObjectSem>,
    dto: &MorphDto,
) -> Result<MorphSem, JsonError> {
    match (backend, dto) {
        (Backend::FinFn, MorphDto::Table(entries)) => {
            let dsize = flat_size(&dom);
            let mut map = vec![usize::MAX; dsize];
            for (k, v) in entries {
                let x = parse_tuple_label(&dom, k)?;
                map[x] = parse_tuple_label(&cod, v)?;
            }
            if let Some(missing) = map.iter().position(|&y| y == usize::MAX) {
                return Err(JsonError::ParseError(format!(
                    "table not total: `{}` missing",
                    tuple_label(&dom, missing)
                )));
            }
            Ok(MorphSem::FnTable(FnTable::new(dom, cod, map)?))
        }
        (Backend::Stoch, MorphDto::Matrix { rows, cols, entries }) => {
            let (nr, nc) = (flat_size(&cod), flat_size(&dom));
            if rows.len() != nr || cols.len() != nc {
                return Err(JsonError::ParseError(format!(
                    "matrix is {}x{}, interface wants {nr}x{nc}",
                    rows.len(),
                    cols.len()
                )));
            }
            let mut data = vec![0.0; nr * nc];
            for (r, row) in entries.iter().enumerate() {
                if row.len() != nc {
                    return Err(JsonError::ParseError("ragged matrix".into()));
                }
                for (c, &v) in row.iter().enumerate() {
                    // Rows/cols lists fix the intended order.
                    let rr = parse_tuple_label(&cod, &rows[r])?;
                    let cc = parse_tuple_label(&dom, &cols[c])?;
                    data[rr * nc + cc] = v;
                }
            }
            Ok(MorphSem::Matrix(StochMatrix::new(dom, cod, data)))
        }
        (Backend::Quant, MorphDto::Kraus(ops)) => {
            let (nr, nc) = (flat_size(&cod), flat_size(&dom));
            let mut list = Vec::new();
            for op in ops {
                if op.len() != nr || op.iter().any(|r| r.len() != nc) {
                    return Err(JsonError::ParseError(format!(
                        "Kraus operator is not {nr}x{nc}"
                    )));
                }
                let mut m = CMat::zeros(nr, nc);
                for (r, row) in op.iter().enumerate() {
                    for (c, &[re, im]) in row.iter().enumerate() {
                        m.set(r, c, Complex64::new(re, im));
                    }
                }
                list.push(m);
            }
            Ok(MorphSem::Kraus(KrausMorph::new(dom, cod, list)))
        }
        (Backend::RealVec, MorphDto::Expr(e)) => {
            let expr = expr_from_dto(e)?;
            let want_in: usize = dom.iter().map(|o| o.size()).sum();
            let want_out: usize = cod.iter().map(|o| o.size()).sum();
            if expr.in_dim() != want_in || expr.out_dim() != want_out {
                return Err(JsonError::ParseError(format!(
                    "expression is {} -> {}, interface wants {want_in} -> {want_out}",
                    expr.in_dim(),
                    expr.out_dim()
                )));
            }
            Ok(MorphSem::RealExpr(RealExpr::new(dom, cod, expr)))
        }
        _ => Err(JsonError::ParseError(format!(
            "morphism payload does not fit backend {backend}"
        ))),
    }
}

// ---------------------------------------------------------------------------
// Models
// ---------------------------------------------------------------------------

pub fn model_to_file(binding: &ModelBinding, interp: Option<&Interpretation>) -> ModelFile {
    let sig = binding.signature();
    let generators = sig
        .generators()
        .iter()
        .map(|g| GeneratorDto {
            name: g.name.clone(),
            dom: g.dom.clone(),
            cod: g.cod.clone(),
            channel: g.flags.is_channel,
            deterministic: g.flags.is_deterministic,
            sharp: g.flags.is_sharp_state,
        })
        .collect();
    let equations = sig
        .equations()
        .iter()
        .map(|eq| EquationDto {
            lhs: diagram_to_dto(&eq.lhs),
            rhs: diagram_to_dto(&eq.rhs),
        })
        .collect();
    ModelFile {
        version: SCHEMA_VERSION,
        language: sig.language(),
        variables: sig.variables().iter().map(|v| v.name.clone()).collect(),
        generators,
        equations,
        backend: binding.backend(),
        objects: binding
            .objects()
            .iter()
            .map(|(k, v)| (k.clone(), object_to_dto(v)))
            .collect(),
        morphisms: binding
            .morphisms()
            .iter()
            .map(|(k, v)| (k.clone(), morph_to_dto(v)))
            .collect(),
        distinguished: binding
            .distinguished_map()
            .iter()
            .map(|(k, v)| (k.clone(), diagram_to_dto(v)))
            .collect(),
        interpretation: interp.map(interpretation_to_dto),
    }
}

pub fn model_to_json(
    binding: &ModelBinding,
    interp: Option<&Interpretation>,
) -> Result<String, JsonError> {
    Ok(serde_json::to_string_pretty(&model_to_file(
        binding, interp,
    ))?)
}

/// Parses and fully validates a model file; returns the binding and, when
/// present, its interpretation.
pub fn parse_model(text: &str) -> Result<(ModelBinding, Option<Interpretation>), JsonError> {
    let file: ModelFile = serde_json::from_str(text)?;
    if file.version != SCHEMA_VERSION {
        return Err(JsonError::SchemaVersionMismatch {
            found: file.version,
        });
    }
    let variables: Vec<Variable> = file.variables.iter().map(Variable::new).collect();
    let generators: Vec<Generator> = file
        .generators
        .iter()
        .map(|g| Generator {
            name: g.name.clone(),
            dom: g.dom.clone(),
            cod: g.cod.clone(),
            flags: GenFlags {
                is_channel: g.channel,
                is_deterministic: g.deterministic,
                is_sharp_state: g.sharp,
            },
        })
        .collect();
    let sig = build_signature(variables, generators, file.language)?;

    let mut objects = BTreeMap::new();
    for (var, dto) in &file.objects {
        objects.insert(var.clone(), object_from_dto(file.backend, dto)?);
    }
    let mut morphisms = BTreeMap::new();
    for (gen, dto) in &file.morphisms {
        let g = sig.generator(gen).ok_or_else(|| {
            JsonError::ParseError(format!("morphism for unknown generator `{gen}`"))
        })?;
        let dom: Vec<ObjectSem> = g
            .dom
            .iter()
            .map(|v| {
                objects
                    .get(v)
                    .cloned()
                    .ok_or_else(|| JsonError::ParseError(format!("no object for `{v}`")))
            })
            .collect::<Result<_, _>>()?;
        let cod: Vec<ObjectSem> = g
            .cod
            .iter()
            .map(|v| {
                objects
                    .get(v)
                    .cloned()
                    .ok_or_else(|| JsonError::ParseError(format!("no object for `{v}`")))
            })
            .collect::<Result<_, _>>()?;
        morphisms.insert(gen.clone(), morph_from_dto(file.backend, dom, cod, dto)?);
    }

    let sig = if file.equations.is_empty() {
        sig
    } else {
        let eqs = file
            .equations
            .iter()
            .map(|eq| {
                Ok(Equation {
                    lhs: diagram_from_dto(&sig, &eq.lhs)?,
                    rhs: diagram_from_dto(&sig, &eq.rhs)?,
                })
            })
            .collect::<Result<Vec<_>, JsonError>>()?;
        sig.with_equations(eqs)?
    };

    let mut distinguished = BTreeMap::new();
    for (name, dto) in &file.distinguished {
        distinguished.insert(name.clone(), diagram_from_dto(&sig, dto)?);
    }
    let binding = bind_model(&sig, file.backend, objects, morphisms, distinguished)?;
    let interp = file
        .interpretation
        .as_ref()
        .map(|dto| interpretation_from_dto(&binding, dto))
        .transpose()?;
    Ok((binding, interp))
}

// ---------------------------------------------------------------------------
// Interpretations
// ---------------------------------------------------------------------------

pub fn interpretation_to_dto(i: &Interpretation) -> InterpretationDto {
    let binding = i.model().clone();
    let mut concrete = Vec::new();
    // Emit generator-backed entries where they coincide, then sharp-state
    // entries; other raw concrete entries are not representable and the
    // fixtures do not use them.
    for g in binding.signature().generators() {
        if let Some(m) = binding.morph(&g.name) {
            if let Some(term) = i.con_term(&g.dom, &g.cod, m) {
                concrete.push(ConcreteDto::Gen {
                    gen: g.name.clone(),
                    term: term.clone(),
                });
            }
        }
    }
    for (var, obj) in binding.objects() {
        if let Some(elems) = obj.elements() {
            for (idx, e) in elems.iter().enumerate() {
                let m = crate::interpret::sharp_state_sem(binding.backend(), obj, idx);
                if let Some(term) = i.con_term(&[], std::slice::from_ref(var), &m) {
                    concrete.push(ConcreteDto::State {
                        dom: vec![],
                        cod: vec![var.clone()],
                        value: e.clone(),
                        term: term.clone(),
                    });
                }
            }
        }
    }
    // Deduplicate entries that coincide (a sharp-state generator and its
    // state share the same key).
    let rules = i
        .rules
        .iter()
        .flat_map(|(var, rules)| {
            rules.iter().map(move |r| RuleEntryDto {
                var: var.clone(),
                cond: match r.cond {
                    Cond::Leq(a) => CondDto::Leq(a),
                    Cond::Lt(a) => CondDto::Lt(a),
                    Cond::Geq(a) => CondDto::Geq(a),
                    Cond::Gt(a) => CondDto::Gt(a),
                    Cond::Range(a, b) => CondDto::Range(a, b),
                },
                term: r.term.clone(),
            })
        })
        .collect();
    InterpretationDto {
        objects: i.abs_var.clone(),
        generators: i.abs_gen.clone(),
        concrete,
        rules,
    }
}

pub fn interpretation_from_dto(
    binding: &ModelBinding,
    dto: &InterpretationDto,
) -> Result<Interpretation, JsonError> {
    let mut i = Interpretation::new(binding);
    for (var, term) in &dto.objects {
        i.set_var_term(var, term);
    }
    for (gen, term) in &dto.generators {
        i.set_gen_term(gen, term);
    }
    for c in &dto.concrete {
        match c {
            ConcreteDto::Gen { gen, term } => {
                let g = binding.signature().generator(gen).ok_or_else(|| {
                    JsonError::ParseError(format!("concrete entry for unknown generator `{gen}`"))
                })?;
                let m = binding.morph(gen).ok_or_else(|| {
                    JsonError::ParseError(format!("no morphism bound for `{gen}`"))
                })?;
                let m = m.clone();
                i.set_concrete(g.dom.clone(), g.cod.clone(), &m, term);
            }
            ConcreteDto::State {
                dom,
                cod,
                value,
                term,
            } => {
                if !dom.is_empty() || cod.len() != 1 {
                    return Err(JsonError::ParseError(
                        "state entries must have empty dom and one cod variable".into(),
                    ));
                }
                i.set_state_term(&cod[0], value, term);
            }
        }
    }
    for r in &dto.rules {
        i.add_rule(
            &r.var,
            IntervalRule {
                cond: match r.cond {
                    CondDto::Leq(a) => Cond::Leq(a),
                    CondDto::Lt(a) => Cond::Lt(a),
                    CondDto::Geq(a) => Cond::Geq(a),
                    CondDto::Gt(a) => Cond::Gt(a),
                    CondDto::Range(a, b) => Cond::Range(a, b),
                },
                term: r.term.clone(),
            },
        );
    }
    Ok(i)
}

// ---------------------------------------------------------------------------
// World specs, rules, proofs
// ---------------------------------------------------------------------------

pub fn worldspec_from_json(text: &str) -> Result<crate::causal::WorldSpec, JsonError> {
    let file: WorldSpecFile = serde_json::from_str(text)?;
    Ok(crate::causal::WorldSpec {
        worlds: file
            .worlds
            .into_iter()
            .map(|w| crate::causal::World {
                interventions: w.interventions,
                observations: w.observe,
                marginalize: w.marginalize.into_iter().collect(),
                query: w.query,
            })
            .collect(),
    })
}

pub fn rules_from_json(sig: &Signature, text: &str) -> Result<Vec<RewriteRule>, JsonError> {
    let dtos: Vec<RuleDto> = serde_json::from_str(text)?;
    dtos.iter()
        .map(|r| {
            let lhs = diagram_from_dto(sig, &r.lhs)?;
            let rhs = diagram_from_dto(sig, &r.rhs)?;
            RewriteRule::new(r.name.clone(), lhs, rhs, r.epsilon)
                .map_err(|e| JsonError::ParseError(e.to_string()))
        })
        .collect()
}

pub fn rules_to_json(rules: &[RewriteRule]) -> Result<String, JsonError> {
    let dtos: Vec<RuleDto> = rules
        .iter()
        .map(|r| RuleDto {
            name: r.name.clone(),
            lhs: diagram_to_dto(&r.lhs),
            rhs: diagram_to_dto(&r.rhs),
            epsilon: r.epsilon,
        })
        .collect();
    Ok(serde_json::to_string_pretty(&dtos)?)
}

/// Machine-readable proof summary.
pub fn proof_to_json(proof: &RewriteProof) -> serde_json::Value {
    serde_json::json!({
        "steps": proof.steps.iter().map(|s| serde_json::json!({
            "rule": s.rule,
            "direction": match s.direction {
                crate::rewrite::Direction::Forward => "forward",
                crate::rewrite::Direction::Backward => "backward",
            },
            "site": s.site,
            "epsilon": s.epsilon,
            "interpreted": s.interpreted,
        })).collect::<Vec<_>>(),
        "epsilon_total": match proof.epsilon_total {
            EpsBound::Total(e) => serde_json::json!(e),
            EpsBound::Unbounded => serde_json::json!("unbounded"),
        },
        "all_interpreted": proof.all_interpreted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zoo;

    #[test]
    fn sprinkler_round_trips() {
        let f = zoo::sprinkler_model().unwrap();
        let text = model_to_json(&f.model.binding, Some(&f.model.interpretation)).unwrap();
        let (binding, interp) = parse_model(&text).unwrap();
        assert!(interp.is_some());
        // Same evaluation results on the distinguished diagram.
        let d1 = f.model.binding.distinguished("main").unwrap();
        let d2 = binding.distinguished("main").unwrap();
        let s1 = f.model.binding.eval(d1).unwrap();
        let s2 = binding.eval(d2).unwrap();
        assert_eq!(s1.norm_dist(&s2).unwrap(), 0.0);
    }

    #[test]
    fn quantum_model_round_trips() {
        let f = zoo::location_fixture(Backend::Quant).unwrap();
        let text = model_to_json(&f.model.binding, None).unwrap();
        let (binding, _) = parse_model(&text).unwrap();
        let d1 = f.model.binding.distinguished("question").unwrap();
        let d2 = binding.distinguished("question").unwrap();
        let s1 = f.model.binding.eval(d1).unwrap();
        let s2 = binding.eval(d2).unwrap();
        assert!(s1.norm_dist(&s2).unwrap() < 1e-12);
    }

    #[test]
    fn realvec_model_round_trips() {
        let m = zoo::linear_model(&[1.5, -0.5], 0.25).unwrap();
        let text = model_to_json(&m.binding, Some(&m.interpretation)).unwrap();
        let (binding, interp) = parse_model(&text).unwrap();
        assert!(interp.is_some());
        let d1 = m.binding.distinguished("main").unwrap();
        let d2 = binding.distinguished("main").unwrap();
        let MorphSem::RealExpr(e1) = m.binding.eval(d1).unwrap() else {
            panic!()
        };
        let MorphSem::RealExpr(e2) = binding.eval(d2).unwrap() else {
            panic!()
        };
        for x in [[0.0, 0.0], [1.0, 2.0], [-3.0, 0.5]] {
            assert_eq!(e1.eval(&x), e2.eval(&x));
        }
    }

    #[test]
    fn version_mismatch_rejected() {
        let f = zoo::sprinkler_model().unwrap();
        let text = model_to_json(&f.model.binding, None).unwrap();
        let bumped = text.replacen("\"version\": 1", "\"version\": 99", 1);
        assert!(matches!(
            parse_model(&bumped),
            Err(JsonError::SchemaVersionMismatch { found: 99 })
        ));
    }

    #[test]
    fn truncated_file_is_a_parse_error() {
        let f = zoo::sprinkler_model().unwrap();
        let text = model_to_json(&f.model.binding, None).unwrap();
        let truncated = &text[..text.len() / 2];
        assert!(matches!(
            parse_model(truncated),
            Err(JsonError::ParseError(_))
        ));
    }

    #[test]
    fn unknown_fields_rejected() {
        let f = zoo::sprinkler_model().unwrap();
        let text = model_to_json(&f.model.binding, None).unwrap();
        let spiked = text.replacen("\"version\": 1", "\"version\": 1, \"extra\": 1", 1);
        assert!(matches!(parse_model(&spiked), Err(JsonError::ParseError(_))));
    }

    #[test]
    fn worldspec_parses() {
        let spec = worldspec_from_json(
            r#"{"worlds":[{"do":{"A":"y"},"observe":{},"marginalize":["U_A"],"query":["H"]},
                          {"observe":{"A":"n","H":"y"},"query":[]}]}"#,
        )
        .unwrap();
        assert_eq!(spec.worlds.len(), 2);
        assert_eq!(spec.worlds[0].interventions["A"], "y");
        assert_eq!(spec.worlds[1].observations["H"], "y");
    }
}
