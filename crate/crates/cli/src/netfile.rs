//! The `.net` network description format: a sectioned key-value text file
//! that parses into a validated [`NetworkSpec`].
//!
//! ```text
//! # comment
//! [globals]
//! v0 = 1.0
//! r_max = 1.0
//! tau_max = 1.0
//! p_max = 0.1
//! v_min = 0.75
//! v_tr = 0.66
//!
//! [nodes]
//! 0 source
//! 1 load 0.05 0.1 0.65    # p_nominal p_max capacitance
//!
//! [edges]
//! 0 1 1.0 0.5             # from to resistance inductance
//! ```
//!
//! Node ids must be dense starting at 0. Unknown keys and malformed records
//! are rejected with the offending line number; validation failures are
//! anchored to the line that declared the offending element.

use std::fmt;
use std::path::Path;

use dcgrid_core::network::{validate, Globals, Line, LoadParams, NetworkSpec, Node, Violation};

#[derive(Debug)]
pub enum NetfileError {
    Parse {
        line: usize,
        message: String,
    },
    Validation {
        /// `(line, rendered violation)` pairs, hard violations only.
        problems: Vec<(usize, String)>,
    },
    Io(std::io::Error),
}

impl fmt::Display for NetfileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NetfileError::Parse { line, message } => write!(f, "line {line}: {message}"),
            NetfileError::Validation { problems } => {
                writeln!(f, "network violates design assumptions:")?;
                for (line, message) in problems {
                    writeln!(f, "  line {line}: {message}")?;
                }
                Ok(())
            }
            NetfileError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for NetfileError {}

/// A parsed, validated network plus informational notes worth surfacing.
#[derive(Debug)]
pub struct Loaded {
    pub spec: NetworkSpec,
    pub notes: Vec<String>,
}

pub fn parse_network(path: &Path) -> Result<Loaded, NetfileError> {
    let text = std::fs::read_to_string(path).map_err(NetfileError::Io)?;
    parse_network_str(&text)
}

fn err(line: usize, message: impl Into<String>) -> NetfileError {
    NetfileError::Parse {
        line,
        message: message.into(),
    }
}

#[derive(PartialEq, Clone, Copy)]
enum Section {
    None,
    Globals,
    Nodes,
    Edges,
}

pub fn parse_network_str(text: &str) -> Result<Loaded, NetfileError> {
    let mut section = Section::None;
    let mut globals: Vec<(String, f64, usize)> = Vec::new();
    let mut globals_line = 0;
    // (id, node, line)
    let mut nodes: Vec<(usize, Node, usize)> = Vec::new();
    let mut edges: Vec<(Line, usize)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            section = match name {
                "globals" => {
                    globals_line = line_no;
                    Section::Globals
                }
                "nodes" => Section::Nodes,
                "edges" => Section::Edges,
                other => return Err(err(line_no, format!("unknown section [{other}]"))),
            };
            continue;
        }
        match section {
            Section::None => {
                return Err(err(
                    line_no,
                    "expected a [globals], [nodes] or [edges] section",
                ))
            }
            Section::Globals => {
                let Some((key, value)) = line.split_once('=') else {
                    return Err(err(line_no, "expected `key = value`"));
                };
                let key = key.trim();
                if !GLOBAL_KEYS.contains(&key) {
                    return Err(err(line_no, format!("unknown key `{key}`")));
                }
                if globals.iter().any(|(k, _, _)| k == key) {
                    return Err(err(line_no, format!("duplicate key `{key}`")));
                }
                let value = parse_number(value.trim(), line_no, key)?;
                globals.push((key.to_string(), value, line_no));
            }
            Section::Nodes => {
                let tokens: Vec<&str> = line.split_whitespace().collect();
                if tokens.len() < 2 {
                    return Err(err(
                        line_no,
                        "expected `<id> source` or `<id> load <p_nominal> <p_max> <capacitance>`",
                    ));
                }
                let id: usize = tokens[0]
                    .parse()
                    .map_err(|_| err(line_no, format!("invalid node id `{}`", tokens[0])))?;
                if nodes.iter().any(|(other, _, _)| *other == id) {
                    return Err(err(line_no, format!("duplicate node id {id}")));
                }
                let node = match tokens[1] {
                    "source" => {
                        if tokens.len() != 2 {
                            return Err(err(line_no, "source takes no parameters"));
                        }
                        Node::Source
                    }
                    "load" => {
                        if tokens.len() != 5 {
                            return Err(err(
                                line_no,
                                "load takes exactly `<p_nominal> <p_max> <capacitance>`",
                            ));
                        }
                        Node::Load(LoadParams {
                            p_nominal: parse_number(tokens[2], line_no, "p_nominal")?,
                            p_max: parse_number(tokens[3], line_no, "p_max")?,
                            capacitance: parse_number(tokens[4], line_no, "capacitance")?,
                        })
                    }
                    other => {
                        return Err(err(line_no, format!("unknown node kind `{other}`")));
                    }
                };
                nodes.push((id, node, line_no));
            }
            Section::Edges => {
                let tokens: Vec<&str> = line.split_whitespace().collect();
                if tokens.len() != 4 {
                    return Err(err(
                        line_no,
                        "expected `<from> <to> <resistance> <inductance>`",
                    ));
                }
                let from: usize = tokens[0]
                    .parse()
                    .map_err(|_| err(line_no, format!("invalid node id `{}`", tokens[0])))?;
                let to: usize = tokens[1]
                    .parse()
                    .map_err(|_| err(line_no, format!("invalid node id `{}`", tokens[1])))?;
                edges.push((
                    Line {
                        from,
                        to,
                        resistance: parse_number(tokens[2], line_no, "resistance")?,
                        inductance: parse_number(tokens[3], line_no, "inductance")?,
                    },
                    line_no,
                ));
            }
        }
    }

    let mut values = [0.0f64; GLOBAL_KEYS.len()];
    for (i, key) in GLOBAL_KEYS.iter().enumerate() {
        match globals.iter().find(|(k, _, _)| k == key) {
            Some((_, v, _)) => values[i] = *v,
            None => {
                return Err(err(
                    globals_line,
                    format!("missing required key `{key}` in [globals]"),
                ))
            }
        }
    }
    let [v0, r_max, tau_max, p_max, v_min, v_tr] = values;

    if nodes.is_empty() {
        return Err(err(0, "network declares no nodes"));
    }
    nodes.sort_by_key(|(id, _, _)| *id);
    for (expected, (id, _, line)) in nodes.iter().enumerate() {
        if *id != expected {
            return Err(err(
                *line,
                format!("node ids must be dense from 0; expected {expected}, found {id}"),
            ));
        }
    }
    let node_lines: Vec<usize> = nodes.iter().map(|(_, _, l)| *l).collect();
    for (e, line) in &edges {
        for id in [e.from, e.to] {
            if id >= nodes.len() {
                return Err(err(*line, format!("edge references unknown node {id}")));
            }
        }
    }
    let edge_lines: Vec<usize> = edges.iter().map(|(_, l)| *l).collect();

    let spec = NetworkSpec::new(
        nodes.into_iter().map(|(_, n, _)| n).collect(),
        edges.into_iter().map(|(e, _)| e).collect(),
        Globals {
            v0,
            r_max,
            tau_max,
            p_max,
            v_min,
            v_tr,
        },
    );

    let mut notes = Vec::new();
    let mut problems = Vec::new();
    for violation in validate(&spec) {
        let line = violation_line(&violation, &node_lines, &edge_lines, globals_line);
        if violation.is_informational() {
            notes.push(format!("line {line}: {violation}"));
        } else {
            problems.push((line, violation.to_string()));
        }
    }
    if !problems.is_empty() {
        return Err(NetfileError::Validation { problems });
    }
    Ok(Loaded { spec, notes })
}

const GLOBAL_KEYS: [&str; 6] = ["v0", "r_max", "tau_max", "p_max", "v_min", "v_tr"];

fn parse_number(token: &str, line: usize, what: &str) -> Result<f64, NetfileError> {
    let value: f64 = token
        .parse()
        .map_err(|_| err(line, format!("invalid number `{token}` for {what}")))?;
    if !value.is_finite() {
        return Err(err(line, format!("{what} must be finite")));
    }
    Ok(value)
}

fn violation_line(
    violation: &Violation,
    node_lines: &[usize],
    edge_lines: &[usize],
    globals_line: usize,
) -> usize {
    match violation {
        Violation::NotStronglyConnected { node }
        | Violation::NonPositiveCapacitance { node }
        | Violation::NegativeNominalPower { node }
        | Violation::NominalExceedsLoadBound { node }
        | Violation::LoadBoundExceedsSystemBound { node } => {
            node_lines.get(*node).copied().unwrap_or(0)
        }
        Violation::SelfLoop { edge }
        | Violation::NonPositiveResistance { edge }
        | Violation::NonPositiveInductance { edge }
        | Violation::TimeConstantExceedsBudget { edge, .. }
        | Violation::SourceToSourceLine { edge } => edge_lines.get(*edge).copied().unwrap_or(0),
        Violation::NoSource
        | Violation::ResistanceBudgetExceeded { .. }
        | Violation::VoltageBandInvalid
        | Violation::LoadabilityExceedsApex { .. }
        | Violation::LoadBoundsBelowSystemBound { .. } => globals_line,
    }
}

/// Canonical text form; parses back to an equal spec.
#[cfg_attr(not(test), allow(dead_code))]
pub fn serialize_network(spec: &NetworkSpec) -> String {
    let g = spec.globals();
    let mut out = String::new();
    out.push_str("[globals]\n");
    out.push_str(&format!("v0 = {}\n", g.v0));
    out.push_str(&format!("r_max = {}\n", g.r_max));
    out.push_str(&format!("tau_max = {}\n", g.tau_max));
    out.push_str(&format!("p_max = {}\n", g.p_max));
    out.push_str(&format!("v_min = {}\n", g.v_min));
    out.push_str(&format!("v_tr = {}\n", g.v_tr));
    out.push_str("\n[nodes]\n");
    for (id, node) in spec.nodes().iter().enumerate() {
        match node {
            Node::Source => out.push_str(&format!("{id} source\n")),
            Node::Load(l) => out.push_str(&format!(
                "{id} load {} {} {}\n",
                l.p_nominal, l.p_max, l.capacitance
            )),
        }
    }
    out.push_str("\n[edges]\n");
    for e in spec.edges() {
        out.push_str(&format!(
            "{} {} {} {}\n",
            e.from, e.to, e.resistance, e.inductance
        ));
    }
    out
}
