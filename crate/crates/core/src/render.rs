//! DOT rendering of diagrams, read bottom to top like the diagrams
//! themselves. Deterministic output: same diagram, same bytes.

use crate::diagram::{BoxKind, Diagram, WireDst, WireSrc};
use crate::interpret::Interpretation;

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Renders a diagram as a DOT digraph. Generator boxes are labeled with
/// their human term when an interpretation defines one, with "?" when the
/// interpretation is silent, and with the generator name when no
/// interpretation is supplied. Copies render as points, discards as ground
/// glyphs.
pub fn render_dot(d: &Diagram, interp: Option<&Interpretation>) -> String {
    let mut out = String::from("digraph diagram {\n  rankdir=BT;\n  node [shape=box];\n");
    for (i, v) in d.input_vars().iter().enumerate() {
        out.push_str(&format!(
            "  in{i} [label=\"{}\", shape=plaintext];\n",
            escape(v)
        ));
    }
    for b in d.boxes() {
        let attrs = match &b.kind {
            BoxKind::Gen(g) => {
                let label = match interp {
                    Some(i) => i
                        .display_term(g).cloned()
                        .unwrap_or_else(|| "?".to_string()),
                    None => g.clone(),
                };
                format!("label=\"{}\"", escape(&label))
            }
            BoxKind::Copy { .. } => "shape=point, width=0.12".to_string(),
            BoxKind::Discard { .. } => "label=\"⏚\", shape=none".to_string(),
            BoxKind::Swap { .. } => "label=\"×\", shape=none".to_string(),
        };
        out.push_str(&format!("  \"{}\" [{}];\n", escape(&b.id), attrs));
    }
    for (j, v) in d.output_vars().iter().enumerate() {
        out.push_str(&format!(
            "  out{j} [label=\"{}\", shape=plaintext];\n",
            escape(v)
        ));
    }
    for w in d.wires() {
        let src = match &w.src {
            WireSrc::Input(i) => format!("in{i}"),
            WireSrc::Box(id, _) => format!("\"{}\"", escape(id)),
        };
        let dst = match &w.dst {
            WireDst::Output(j) => format!("out{j}"),
            WireDst::Box(id, _) => format!("\"{}\"", escape(id)),
        };
        out.push_str(&format!("  {src} -> {dst} [label=\"{}\"];\n", escape(&w.var)));
    }
    out.push_str("}\n");
    out
}
