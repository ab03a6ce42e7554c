//! JSON node-graph documents: parse, validate, sample annotated
//! distributions, and lower to [`FieldProgram`](crate::fields::FieldProgram)s
//! plus readable source text.
//!
//! A document is a flat list of nodes wired by named input sockets, a set of
//! named groups (sub-graphs callable like functions), and named outputs.
//! Socket bindings are numbers, `[x, y, z]` vectors, `{"link": "node"}`
//! wires, or arrays of scalar wires for multi-input sockets; a socket left
//! unbound falls back to its declared default. Node display names may carry
//! distribution annotations (`"radius ~ U(0.5, 2.0)"`) that
//! [`sample_annotations`] resolves into concrete constants.
//!
//! [`transpile`] lowers a validated document two ways in one pass: an
//! inlined field program per named output, and a statement-language
//! script ([`script`]) with one statement per node and one function per
//! group. The script re-parses and evaluates to the same values, which is
//! what keeps the two representations honest against each other.

mod lower;
mod ops;
mod sample;
pub mod script;

pub use lower::{transpile, Transpiled};
pub use sample::{annotations, sample_annotations, AnnotationKind, DistributionAnnotation};

use std::collections::BTreeMap;

use nalgebra::Vector3;
use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};
use serde_json::Value as Json;
use thiserror::Error;

use crate::fields::ValueType;
use ops::{op_spec, OpSpec, SocketKind};

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("syntax: {0}")]
    Syntax(String),
    #[error("node '{node}': unknown node type '{op}'")]
    UnknownNodeType { node: String, op: String },
    #[error("node '{node}' socket '{socket}': link target '{target}' does not exist")]
    DanglingLink { node: String, socket: String, target: String },
    #[error("dependency cycle through '{node}'")]
    Cycle { node: String },
    #[error("node '{node}' calling group '{group}': {detail}")]
    GroupArity { node: String, group: String, detail: String },
    #[error("node '{node}' socket '{socket}': {detail}")]
    Socket { node: String, socket: String, detail: String },
    #[error("output '{name}': {detail}")]
    Output { name: String, detail: String },
    #[error("annotation on '{node}' socket '{socket}': {detail}")]
    Annotation { node: String, socket: String, detail: String },
    #[error("identifier '{id}': {detail}")]
    InvalidId { id: String, detail: String },
}

impl GraphError {
    /// Stable machine-readable diagnostic code.
    pub fn code(&self) -> &'static str {
        match self {
            GraphError::Syntax(_) => "syntax",
            GraphError::UnknownNodeType { .. } => "unknown-node-type",
            GraphError::DanglingLink { .. } => "dangling-link",
            GraphError::Cycle { .. } => "cycle",
            GraphError::GroupArity { .. } => "group-arity",
            GraphError::Socket { .. } => "socket",
            GraphError::Output { .. } => "output",
            GraphError::Annotation { .. } => "annotation",
            GraphError::InvalidId { .. } => "invalid-id",
        }
    }
}

/// What a socket binding carries after validation.
#[derive(Debug, Clone, PartialEq)]
pub enum Binding {
    Scalar(f64),
    Vector(Vector3<f64>),
    Link(String),
    /// Items of a multi-input socket; scalars and links only.
    List(Vec<Binding>),
}

impl Serialize for Binding {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Binding::Scalar(v) => s.serialize_f64(*v),
            Binding::Vector(v) => [v.x, v.y, v.z].serialize(s),
            Binding::Link(id) => {
                let mut m = s.serialize_map(Some(1))?;
                m.serialize_entry("link", id)?;
                m.end()
            }
            Binding::List(items) => items.serialize(s),
        }
    }
}

/// Socket value categories; the graph-level view of [`ValueType`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SocketType {
    Scalar,
    Vector,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphNode {
    pub id: String,
    #[serde(rename = "type")]
    pub op: String,
    #[serde(skip_serializing_if = "String::is_empty", default)]
    pub name: String,
    /// Group name for `"type": "group"` call nodes.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub group: Option<String>,
    pub inputs: BTreeMap<String, Binding>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupInput {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: SocketType,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupDecl {
    pub inputs: Vec<GroupInput>,
    pub nodes: Vec<GraphNode>,
    pub output: Binding,
}

/// A validated node-graph document. Produced by [`parse_graph`]; serializes
/// back to the same JSON schema it was parsed from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeGraphDoc {
    pub nodes: Vec<GraphNode>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty", default)]
    pub groups: BTreeMap<String, GroupDecl>,
    pub outputs: BTreeMap<String, Binding>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDoc {
    #[serde(default)]
    nodes: Vec<RawNode>,
    #[serde(default)]
    groups: BTreeMap<String, RawGroup>,
    #[serde(default)]
    outputs: BTreeMap<String, Json>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNode {
    id: String,
    #[serde(rename = "type")]
    op: String,
    #[serde(default)]
    name: String,
    #[serde(default)]
    group: Option<String>,
    #[serde(default)]
    inputs: BTreeMap<String, Json>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGroup {
    #[serde(default)]
    inputs: Vec<Json>,
    #[serde(default)]
    nodes: Vec<RawNode>,
    output: Json,
}

const KEYWORDS: &[&str] = &["fn", "return", "output"];

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn check_ident(s: &str) -> Result<(), GraphError> {
    if !is_ident(s) {
        return Err(GraphError::InvalidId {
            id: s.to_string(),
            detail: "must be a letter or underscore followed by alphanumerics".into(),
        });
    }
    if KEYWORDS.contains(&s) {
        return Err(GraphError::InvalidId { id: s.to_string(), detail: "is a keyword".into() });
    }
    Ok(())
}

fn finite(v: f64) -> Result<f64, String> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("number {v} is not finite"))
    }
}

fn json_number(v: &Json) -> Option<f64> {
    v.as_f64()
}

fn json_vector(v: &Json) -> Option<Vector3<f64>> {
    let arr = v.as_array()?;
    if arr.len() != 3 {
        return None;
    }
    let mut out = [0.0; 3];
    for (o, e) in out.iter_mut().zip(arr) {
        *o = json_number(e)?;
    }
    Some(Vector3::new(out[0], out[1], out[2]))
}

fn json_link(v: &Json) -> Option<&str> {
    let obj = v.as_object()?;
    if obj.len() != 1 {
        return None;
    }
    obj.get("link")?.as_str()
}

/// Shape a raw JSON binding according to the socket kind. Link targets are
/// resolved later; only local structure is checked here.
fn shape_binding(v: &Json, kind: SocketKind) -> Result<Binding, String> {
    let scalar_item = |v: &Json| -> Result<Binding, String> {
        if let Some(n) = json_number(v) {
            return Ok(Binding::Scalar(finite(n)?));
        }
        if let Some(l) = json_link(v) {
            return Ok(Binding::Link(l.to_string()));
        }
        Err("expected a number or {\"link\": ...}".into())
    };
    match kind {
        SocketKind::Scalar => scalar_item(v),
        SocketKind::Vector => {
            if let Some(vec) = json_vector(v) {
                for c in vec.iter() {
                    finite(*c)?;
                }
                return Ok(Binding::Vector(vec));
            }
            if let Some(l) = json_link(v) {
                return Ok(Binding::Link(l.to_string()));
            }
            Err("expected [x, y, z] or {\"link\": ...}".into())
        }
        SocketKind::ConstScalar => {
            let n = json_number(v).ok_or("expected a number constant")?;
            Ok(Binding::Scalar(finite(n)?))
        }
        SocketKind::ConstVector => {
            let vec = json_vector(v).ok_or("expected an [x, y, z] constant")?;
            for c in vec.iter() {
                finite(*c)?;
            }
            Ok(Binding::Vector(vec))
        }
        SocketKind::ConstAny => {
            if let Some(n) = json_number(v) {
                return Ok(Binding::Scalar(finite(n)?));
            }
            if let Some(vec) = json_vector(v) {
                for c in vec.iter() {
                    finite(*c)?;
                }
                return Ok(Binding::Vector(vec));
            }
            Err("expected a number or [x, y, z]".into())
        }
        SocketKind::ScalarList => {
            let arr = v.as_array().ok_or("expected an array of scalar items")?;
            if arr.is_empty() {
                return Err("multi-input socket needs at least one item".into());
            }
            let items = arr.iter().map(scalar_item).collect::<Result<Vec<_>, _>>()?;
            Ok(Binding::List(items))
        }
    }
}

/// Declared interface of a validated group.
struct GroupSig {
    inputs: Vec<GroupInput>,
    output: SocketType,
}

/// Integer-valued baked parameters of the field primitives get extra
/// checks: seeds must be non-negative integers, octave counts positive
/// integers. Shared with the lowering pass as its defensive re-check.
fn check_field_params(node: &GraphNode) -> Result<(), GraphError> {
    let check_int = |socket: &str, min: f64| -> Result<(), GraphError> {
        let Some(Binding::Scalar(v)) = node.inputs.get(socket) else {
            return Ok(());
        };
        if v.fract() != 0.0 || *v < min {
            return Err(GraphError::Socket {
                node: node.id.clone(),
                socket: socket.into(),
                detail: format!("expected an integer >= {min}, got {v}"),
            });
        }
        Ok(())
    };
    if node.op == "noise" || node.op == "warp" {
        check_int("seed", 0.0)?;
        check_int("octaves", 1.0)?;
    }
    Ok(())
}

struct ScopeOutcome {
    nodes: Vec<GraphNode>,
    types: BTreeMap<String, SocketType>,
}

fn validate_scope(
    raw_nodes: &[RawNode],
    params: &BTreeMap<String, SocketType>,
    group_sigs: &BTreeMap<String, GroupSig>,
) -> Result<ScopeOutcome, GraphError> {
    let mut nodes = Vec::with_capacity(raw_nodes.len());
    for raw in raw_nodes {
        check_ident(&raw.id)?;
        if params.contains_key(&raw.id) {
            return Err(GraphError::InvalidId {
                id: raw.id.clone(),
                detail: "collides with a group input".into(),
            });
        }
        nodes.push(shape_node(raw, group_sigs)?);
    }
    let by_id: BTreeMap<String, &GraphNode> = {
        let mut m = BTreeMap::new();
        for n in &nodes {
            if m.insert(n.id.clone(), n).is_some() {
                return Err(GraphError::InvalidId {
                    id: n.id.clone(),
                    detail: "declared twice in the same scope".into(),
                });
            }
        }
        m
    };

    // Depth-first type inference doubling as cycle detection.
    #[derive(Clone, Copy, PartialEq)]
    enum State {
        Open,
        Visiting,
        Done,
    }
    struct Walk<'a> {
        by_id: &'a BTreeMap<String, &'a GraphNode>,
        params: &'a BTreeMap<String, SocketType>,
        group_sigs: &'a BTreeMap<String, GroupSig>,
        states: BTreeMap<String, State>,
        types: BTreeMap<String, SocketType>,
    }
    impl<'a> Walk<'a> {
        fn link_type(
            &mut self,
            node: &GraphNode,
            socket: &str,
            target: &str,
        ) -> Result<SocketType, GraphError> {
            if let Some(&ty) = self.params.get(target) {
                return Ok(ty);
            }
            match self.states.get(target) {
                None => Err(GraphError::DanglingLink {
                    node: node.id.clone(),
                    socket: socket.into(),
                    target: target.into(),
                }),
                Some(State::Visiting) => Err(GraphError::Cycle { node: target.into() }),
                Some(State::Done) => Ok(self.types[target]),
                Some(State::Open) => {
                    let next = self.by_id[target];
                    self.visit(next)?;
                    Ok(self.types[target])
                }
            }
        }

        fn expect(
            &mut self,
            node: &GraphNode,
            socket: &str,
            binding: &Binding,
            want: SocketType,
        ) -> Result<(), GraphError> {
            let got = match binding {
                Binding::Scalar(_) => SocketType::Scalar,
                Binding::Vector(_) => SocketType::Vector,
                Binding::Link(target) => self.link_type(node, socket, target)?,
                Binding::List(items) => {
                    for item in items {
                        self.expect(node, socket, item, SocketType::Scalar)?;
                    }
                    return Ok(());
                }
            };
            if got != want {
                return Err(GraphError::Socket {
                    node: node.id.clone(),
                    socket: socket.into(),
                    detail: format!("expected a {want:?} value, got {got:?}"),
                });
            }
            Ok(())
        }

        fn visit(&mut self, node: &GraphNode) -> Result<(), GraphError> {
            self.states.insert(node.id.clone(), State::Visiting);
            let out = if let Some(group) = &node.group {
                let sig = &self.group_sigs[group.as_str()];
                for input in &sig.inputs {
                    let binding = &node.inputs[&input.name];
                    self.expect(node, &input.name, binding, input.ty)?;
                }
                sig.output
            } else if node.op == "constant" {
                match &node.inputs["value"] {
                    Binding::Scalar(_) => SocketType::Scalar,
                    Binding::Vector(_) => SocketType::Vector,
                    _ => unreachable!("constant value is shaped as a constant"),
                }
            } else {
                let spec = op_spec(&node.op).expect("shaped nodes have registered ops");
                for sock in spec.sockets {
                    let binding = &node.inputs[sock.name];
                    let want = match sock.kind {
                        SocketKind::Vector | SocketKind::ConstVector => SocketType::Vector,
                        _ => SocketType::Scalar,
                    };
                    self.expect(node, sock.name, binding, want)?;
                }
                match spec.output.expect("non-constant ops declare an output type") {
                    ValueType::Scalar => SocketType::Scalar,
                    ValueType::Vec3 => SocketType::Vector,
                }
            };
            self.types.insert(node.id.clone(), out);
            self.states.insert(node.id.clone(), State::Done);
            Ok(())
        }
    }

    let mut walk = Walk {
        by_id: &by_id,
        params,
        group_sigs,
        states: by_id.keys().map(|k| (k.clone(), State::Open)).collect(),
        types: BTreeMap::new(),
    };
    for node in &nodes {
        if walk.states[node.id.as_str()] == State::Open {
            walk.visit(node)?;
        }
    }
    let types = walk.types;
    Ok(ScopeOutcome { nodes, types })
}

/// Schema-check one raw node: registered op (or group call), known sockets,
/// bindings shaped per socket kind, defaults filled in.
fn shape_node(
    raw: &RawNode,
    group_sigs: &BTreeMap<String, GroupSig>,
) -> Result<GraphNode, GraphError> {
    let mut inputs = BTreeMap::new();
    if raw.op == "group" {
        let group = raw.group.clone().ok_or_else(|| GraphError::GroupArity {
            node: raw.id.clone(),
            group: String::new(),
            detail: "group call node needs a \"group\" field".into(),
        })?;
        let sig = group_sigs.get(&group).ok_or_else(|| GraphError::GroupArity {
            node: raw.id.clone(),
            group: group.clone(),
            detail: "group is not defined".into(),
        })?;
        for input in &sig.inputs {
            let value = raw.inputs.get(&input.name).ok_or_else(|| GraphError::GroupArity {
                node: raw.id.clone(),
                group: group.clone(),
                detail: format!("input '{}' is not bound", input.name),
            })?;
            let kind = match input.ty {
                SocketType::Scalar => SocketKind::Scalar,
                SocketType::Vector => SocketKind::Vector,
            };
            let binding = shape_binding(value, kind).map_err(|detail| GraphError::Socket {
                node: raw.id.clone(),
                socket: input.name.clone(),
                detail,
            })?;
            inputs.insert(input.name.clone(), binding);
        }
        for socket in raw.inputs.keys() {
            if !sig.inputs.iter().any(|i| &i.name == socket) {
                return Err(GraphError::GroupArity {
                    node: raw.id.clone(),
                    group,
                    detail: format!("group declares no input named '{socket}'"),
                });
            }
        }
        return Ok(GraphNode {
            id: raw.id.clone(),
            op: raw.op.clone(),
            name: raw.name.clone(),
            group: Some(group),
            inputs,
        });
    }

    if raw.group.is_some() {
        return Err(GraphError::Socket {
            node: raw.id.clone(),
            socket: "group".into(),
            detail: format!("only \"type\": \"group\" nodes name a group, not '{}'", raw.op),
        });
    }
    let spec: &OpSpec = op_spec(&raw.op).ok_or_else(|| GraphError::UnknownNodeType {
        node: raw.id.clone(),
        op: raw.op.clone(),
    })?;
    for sock in spec.sockets {
        let binding = match raw.inputs.get(sock.name) {
            Some(value) => {
                shape_binding(value, sock.kind).map_err(|detail| GraphError::Socket {
                    node: raw.id.clone(),
                    socket: sock.name.into(),
                    detail,
                })?
            }
            None => match sock.default {
                Some(d) => Binding::Scalar(d),
                None => {
                    return Err(GraphError::Socket {
                        node: raw.id.clone(),
                        socket: sock.name.into(),
                        detail: "required socket is not bound".into(),
                    })
                }
            },
        };
        inputs.insert(sock.name.to_string(), binding);
    }
    for socket in raw.inputs.keys() {
        if !spec.sockets.iter().any(|s| s.name == socket) {
            return Err(GraphError::Socket {
                node: raw.id.clone(),
                socket: socket.clone(),
                detail: format!("'{}' has no such socket", raw.op),
            });
        }
    }
    let node = GraphNode {
        id: raw.id.clone(),
        op: raw.op.clone(),
        name: raw.name.clone(),
        group: None,
        inputs,
    };
    check_field_params(&node)?;
    Ok(node)
}

fn shape_group_inputs(raw: &[Json], group: &str) -> Result<Vec<GroupInput>, GraphError> {
    let mut inputs: Vec<GroupInput> = Vec::with_capacity(raw.len());
    for v in raw {
        let input = if let Some(name) = v.as_str() {
            GroupInput { name: name.to_string(), ty: SocketType::Scalar }
        } else if let Some(obj) = v.as_object() {
            let name = obj.get("name").and_then(|n| n.as_str()).ok_or_else(|| {
                GraphError::Syntax(format!("group '{group}': input declaration needs a name"))
            })?;
            let ty = match obj.get("type").and_then(|t| t.as_str()).unwrap_or("scalar") {
                "scalar" => SocketType::Scalar,
                "vector" => SocketType::Vector,
                other => {
                    return Err(GraphError::Syntax(format!(
                        "group '{group}' input '{name}': unknown type '{other}'"
                    )))
                }
            };
            GroupInput { name: name.to_string(), ty }
        } else {
            return Err(GraphError::Syntax(format!(
                "group '{group}': input declarations are names or {{name, type}} objects"
            )));
        };
        check_ident(&input.name)?;
        if inputs.iter().any(|i| i.name == input.name) {
            return Err(GraphError::InvalidId {
                id: input.name,
                detail: format!("declared twice as an input of group '{group}'"),
            });
        }
        inputs.push(input);
    }
    Ok(inputs)
}

/// Binding type as seen by a scope with the given node types.
fn binding_type(
    binding: &Binding,
    types: &BTreeMap<String, SocketType>,
    params: &BTreeMap<String, SocketType>,
) -> Option<SocketType> {
    match binding {
        Binding::Scalar(_) => Some(SocketType::Scalar),
        Binding::Vector(_) => Some(SocketType::Vector),
        Binding::List(_) => Some(SocketType::Scalar),
        Binding::Link(t) => types.get(t).or_else(|| params.get(t)).copied(),
    }
}

/// Parse and validate a JSON node-graph document.
pub fn parse_graph(text: &str) -> Result<NodeGraphDoc, GraphError> {
    let raw: RawDoc = serde_json::from_str(text).map_err(|e| GraphError::Syntax(e.to_string()))?;

    // Groups first, in dependency order, so call sites can be checked
    // against fully validated signatures.
    for name in raw.groups.keys() {
        check_ident(name)?;
        if op_spec(name).is_some() {
            return Err(GraphError::InvalidId {
                id: name.clone(),
                detail: "group name collides with a built-in node type".into(),
            });
        }
    }
    let order = group_order(&raw.groups)?;
    let mut group_sigs: BTreeMap<String, GroupSig> = BTreeMap::new();
    let mut groups: BTreeMap<String, GroupDecl> = BTreeMap::new();
    for name in order {
        let raw_group = &raw.groups[&name];
        let inputs = shape_group_inputs(&raw_group.inputs, &name)?;
        let params: BTreeMap<String, SocketType> =
            inputs.iter().map(|i| (i.name.clone(), i.ty)).collect();
        let outcome = validate_scope(&raw_group.nodes, &params, &group_sigs)?;
        let output = shape_binding(&raw_group.output, SocketKind::ConstAny)
            .or_else(|_| {
                json_link(&raw_group.output)
                    .map(|l| Binding::Link(l.to_string()))
                    .ok_or_else(|| "expected a constant or {\"link\": ...}".to_string())
            })
            .map_err(|detail| GraphError::Output { name: name.clone(), detail })?;
        let out_ty = binding_type(&output, &outcome.types, &params).ok_or_else(|| {
            GraphError::Output {
                name: name.clone(),
                detail: "output links to a node that does not exist".into(),
            }
        })?;
        group_sigs.insert(name.clone(), GroupSig { inputs: inputs.clone(), output: out_ty });
        groups.insert(name, GroupDecl { inputs, nodes: outcome.nodes, output });
    }

    let no_params = BTreeMap::new();
    let outcome = validate_scope(&raw.nodes, &no_params, &group_sigs)?;

    if raw.outputs.is_empty() {
        return Err(GraphError::Output {
            name: String::new(),
            detail: "document declares no outputs".into(),
        });
    }
    let mut outputs = BTreeMap::new();
    for (name, value) in &raw.outputs {
        check_ident(name)?;
        let binding = shape_binding(value, SocketKind::ConstAny)
            .or_else(|_| {
                json_link(value)
                    .map(|l| Binding::Link(l.to_string()))
                    .ok_or_else(|| "expected a constant or {\"link\": ...}".to_string())
            })
            .map_err(|detail| GraphError::Output { name: name.clone(), detail })?;
        if binding_type(&binding, &outcome.types, &no_params).is_none() {
            return Err(GraphError::Output {
                name: name.clone(),
                detail: "output links to a node that does not exist".into(),
            });
        }
        outputs.insert(name.clone(), binding);
    }

    Ok(NodeGraphDoc { nodes: outcome.nodes, groups, outputs })
}

/// Topological order of group definitions; a group may call previously
/// defined groups but never itself, directly or through others.
fn group_order(groups: &BTreeMap<String, RawGroup>) -> Result<Vec<String>, GraphError> {
    fn visit(
        name: &str,
        groups: &BTreeMap<String, RawGroup>,
        state: &mut BTreeMap<String, u8>,
        order: &mut Vec<String>,
    ) -> Result<(), GraphError> {
        match state.get(name).copied().unwrap_or(0) {
            1 => return Err(GraphError::Cycle { node: name.to_string() }),
            2 => return Ok(()),
            _ => {}
        }
        state.insert(name.to_string(), 1);
        for node in &groups[name].nodes {
            if node.op == "group" {
                if let Some(dep) = &node.group {
                    if groups.contains_key(dep) {
                        visit(dep, groups, state, order)?;
                    }
                }
            }
        }
        state.insert(name.to_string(), 2);
        order.push(name.to_string());
        Ok(())
    }

    let mut state = BTreeMap::new();
    let mut order = Vec::with_capacity(groups.len());
    for name in groups.keys() {
        visit(name, groups, &mut state, &mut order)?;
    }
    Ok(order)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> NodeGraphDoc {
        parse_graph(text).expect("document should validate")
    }

    #[test]
    fn single_constant_node_wired_to_output() {
        let doc = parse(
            r#"{
                "nodes": [{"id": "c", "type": "constant", "inputs": {"value": 3}}],
                "outputs": {"out": {"link": "c"}}
            }"#,
        );
        assert_eq!(doc.nodes.len(), 1);
        assert!(doc.groups.is_empty());
        assert_eq!(doc.nodes[0].inputs["value"], Binding::Scalar(3.0));
    }

    #[test]
    fn self_link_is_a_cycle_naming_the_node() {
        let err = parse_graph(
            r#"{
                "nodes": [{"id": "loop", "type": "sub",
                           "inputs": {"a": {"link": "loop"}, "b": 1}}],
                "outputs": {"out": {"link": "loop"}}
            }"#,
        )
        .unwrap_err();
        assert_eq!(err, GraphError::Cycle { node: "loop".into() });
        assert_eq!(err.code(), "cycle");
    }

    #[test]
    fn two_node_cycle_detected() {
        let err = parse_graph(
            r#"{
                "nodes": [
                    {"id": "a", "type": "neg", "inputs": {"x": {"link": "b"}}},
                    {"id": "b", "type": "neg", "inputs": {"x": {"link": "a"}}}
                ],
                "outputs": {"out": {"link": "a"}}
            }"#,
        )
        .unwrap_err();
        assert!(matches!(err, GraphError::Cycle { .. }));
    }

    #[test]
    fn unknown_node_type_diagnostic() {
        let err = parse_graph(
            r#"{
                "nodes": [{"id": "n", "type": "warble", "inputs": {}}],
                "outputs": {"out": {"link": "n"}}
            }"#,
        )
        .unwrap_err();
        assert_eq!(
            err,
            GraphError::UnknownNodeType { node: "n".into(), op: "warble".into() }
        );
        assert_eq!(err.code(), "unknown-node-type");
    }

    #[test]
    fn dangling_link_names_node_socket_and_target() {
        let err = parse_graph(
            r#"{
                "nodes": [{"id": "n", "type": "neg", "inputs": {"x": {"link": "ghost"}}}],
                "outputs": {"out": {"link": "n"}}
            }"#,
        )
        .unwrap_err();
        assert_eq!(
            err,
            GraphError::DanglingLink {
                node: "n".into(),
                socket: "x".into(),
                target: "ghost".into()
            }
        );
        assert_eq!(err.code(), "dangling-link");
    }

    #[test]
    fn group_defined_in_the_same_document_resolves() {
        let doc = parse(
            r#"{
                "groups": {
                    "Blend": {
                        "inputs": ["a", "b"],
                        "nodes": [{"id": "m", "type": "mix",
                                   "inputs": {"a": {"link": "a"}, "b": {"link": "b"}, "t": 0.25}}],
                        "output": {"link": "m"}
                    }
                },
                "nodes": [
                    {"id": "c", "type": "constant", "inputs": {"value": 1}},
                    {"id": "g", "type": "group", "group": "Blend",
                     "inputs": {"a": {"link": "c"}, "b": 4}}
                ],
                "outputs": {"out": {"link": "g"}}
            }"#,
        );
        assert_eq!(doc.groups.len(), 1);
        assert_eq!(doc.groups["Blend"].inputs.len(), 2);
        assert_eq!(doc.nodes.len(), 2);
    }

    #[test]
    fn group_arity_mismatches_are_diagnosed() {
        let groups = r#"
            "groups": {
                "Blend": {
                    "inputs": ["a", "b"],
                    "nodes": [{"id": "m", "type": "mix",
                               "inputs": {"a": {"link": "a"}, "b": {"link": "b"}, "t": 0.5}}],
                    "output": {"link": "m"}
                }
            }"#;
        let missing = parse_graph(&format!(
            r#"{{ {groups},
                "nodes": [{{"id": "g", "type": "group", "group": "Blend", "inputs": {{"a": 1}}}}],
                "outputs": {{"out": {{"link": "g"}}}}
            }}"#
        ))
        .unwrap_err();
        assert_eq!(missing.code(), "group-arity");
        assert!(missing.to_string().contains("'b' is not bound"), "{missing}");

        let extra = parse_graph(&format!(
            r#"{{ {groups},
                "nodes": [{{"id": "g", "type": "group", "group": "Blend",
                           "inputs": {{"a": 1, "b": 2, "c": 3}}}}],
                "outputs": {{"out": {{"link": "g"}}}}
            }}"#
        ))
        .unwrap_err();
        assert_eq!(extra.code(), "group-arity");
        assert!(extra.to_string().contains("no input named 'c'"), "{extra}");

        let undefined = parse_graph(
            r#"{
                "nodes": [{"id": "g", "type": "group", "group": "Ghost", "inputs": {}}],
                "outputs": {"out": {"link": "g"}}
            }"#,
        )
        .unwrap_err();
        assert_eq!(undefined.code(), "group-arity");
        assert!(undefined.to_string().contains("not defined"), "{undefined}");
    }

    #[test]
    fn group_recursion_is_a_cycle() {
        let err = parse_graph(
            r#"{
                "groups": {
                    "Rec": {
                        "inputs": ["a"],
                        "nodes": [{"id": "g", "type": "group", "group": "Rec",
                                   "inputs": {"a": {"link": "a"}}}],
                        "output": {"link": "g"}
                    }
                },
                "nodes": [],
                "outputs": {"out": 1}
            }"#,
        )
        .unwrap_err();
        assert_eq!(err, GraphError::Cycle { node: "Rec".into() });
    }

    #[test]
    fn malformed_json_is_a_syntax_diagnostic() {
        let err = parse_graph("{nodes: []").unwrap_err();
        assert_eq!(err.code(), "syntax");
    }

    #[test]
    fn duplicate_and_invalid_ids_are_rejected() {
        let dup = parse_graph(
            r#"{
                "nodes": [
                    {"id": "c", "type": "constant", "inputs": {"value": 1}},
                    {"id": "c", "type": "constant", "inputs": {"value": 2}}
                ],
                "outputs": {"out": {"link": "c"}}
            }"#,
        )
        .unwrap_err();
        assert_eq!(dup.code(), "invalid-id");

        let bad = parse_graph(
            r#"{
                "nodes": [{"id": "2fast", "type": "constant", "inputs": {"value": 1}}],
                "outputs": {"out": {"link": "2fast"}}
            }"#,
        )
        .unwrap_err();
        assert_eq!(bad.code(), "invalid-id");
    }

    #[test]
    fn socket_schema_violations_are_diagnosed() {
        // Unknown socket.
        let unknown = parse_graph(
            r#"{
                "nodes": [{"id": "n", "type": "neg", "inputs": {"x": 1, "y": 2}}],
                "outputs": {"out": {"link": "n"}}
            }"#,
        )
        .unwrap_err();
        assert_eq!(unknown.code(), "socket");

        // Missing required socket.
        let missing = parse_graph(
            r#"{
                "nodes": [{"id": "n", "type": "sub", "inputs": {"a": 1}}],
                "outputs": {"out": {"link": "n"}}
            }"#,
        )
        .unwrap_err();
        assert_eq!(missing.code(), "socket");

        // Scalar wire bound to a vector producer.
        let mismatch = parse_graph(
            r#"{
                "nodes": [
                    {"id": "p", "type": "position", "inputs": {}},
                    {"id": "n", "type": "neg", "inputs": {"x": {"link": "p"}}}
                ],
                "outputs": {"out": {"link": "n"}}
            }"#,
        )
        .unwrap_err();
        assert_eq!(mismatch.code(), "socket");

        // Fractional noise seed.
        let seed = parse_graph(
            r#"{
                "nodes": [
                    {"id": "p", "type": "position", "inputs": {}},
                    {"id": "n", "type": "noise",
                     "inputs": {"pos": {"link": "p"}, "seed": 1.5, "frequency": 1}}
                ],
                "outputs": {"out": {"link": "n"}}
            }"#,
        )
        .unwrap_err();
        assert_eq!(seed.code(), "socket");
    }

    #[test]
    fn outputs_are_required_and_must_resolve() {
        let none = parse_graph(r#"{"nodes": [], "outputs": {}}"#).unwrap_err();
        assert_eq!(none.code(), "output");

        let dangling = parse_graph(
            r#"{
                "nodes": [{"id": "c", "type": "constant", "inputs": {"value": 1}}],
                "outputs": {"out": {"link": "ghost"}}
            }"#,
        )
        .unwrap_err();
        assert_eq!(dangling.code(), "output");
    }

    #[test]
    fn defaults_fill_absent_sockets() {
        let doc = parse(
            r#"{
                "nodes": [
                    {"id": "p", "type": "position", "inputs": {}},
                    {"id": "n", "type": "noise",
                     "inputs": {"pos": {"link": "p"}, "seed": 7, "frequency": 0.5}}
                ],
                "outputs": {"out": {"link": "n"}}
            }"#,
        );
        let noise = doc.nodes.iter().find(|n| n.id == "n").unwrap();
        assert_eq!(noise.inputs["octaves"], Binding::Scalar(1.0));
    }

    #[test]
    fn validated_documents_serialize_back_to_the_same_schema() {
        let doc = parse(
            r#"{
                "groups": {
                    "Blend": {
                        "inputs": [{"name": "a", "type": "scalar"}, "b"],
                        "nodes": [{"id": "m", "type": "mix",
                                   "inputs": {"a": {"link": "a"}, "b": {"link": "b"}, "t": 0.25}}],
                        "output": {"link": "m"}
                    }
                },
                "nodes": [
                    {"id": "p", "type": "position", "inputs": {}},
                    {"id": "s", "type": "sphere", "name": "boulder",
                     "inputs": {"pos": {"link": "p"}, "center": [0, 1, 2], "radius": 2.5}},
                    {"id": "g", "type": "group", "group": "Blend",
                     "inputs": {"a": {"link": "s"}, "b": 4}}
                ],
                "outputs": {"out": {"link": "g"}}
            }"#,
        );
        let json = serde_json::to_string_pretty(&doc).unwrap();
        let reparsed = parse_graph(&json).unwrap();
        assert_eq!(doc, reparsed);
    }
}
