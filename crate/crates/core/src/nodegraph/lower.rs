//! Lowering validated documents into [`FieldProgram`]s and source text.
//!
//! Each named output gets its own inlined program: group calls are expanded
//! per call site with parameters bound to the caller's values, and only the
//! nodes reachable from that output are included. The emitted text instead
//! keeps groups as function definitions and carries every node, one
//! statement each, so the document structure survives in readable form.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{Point3, Vector3};

use super::ops::{is_fold, op_spec, SocketKind};
use super::{check_field_params, Binding, GraphError, GraphNode, NodeGraphDoc};
use crate::fields::{FieldNode, FieldProgram, NodeId, NoiseSpec, ProgramBuilder, Value, WarpSpec};

/// Lowered form of one document: a program per named output plus the
/// statement-language rendering of the whole graph.
#[derive(Debug, Clone)]
pub struct Transpiled {
    pub programs: BTreeMap<String, FieldProgram>,
    pub text: String,
}

impl Transpiled {
    /// The program of the alphabetically first output; the common case for
    /// single-output documents.
    pub fn program(&self) -> Option<&FieldProgram> {
        self.programs.values().next()
    }
}

/// One argument to a lowered op, in socket order: either a wire carrying a
/// computed value or a constant baked into the node itself.
pub(super) enum OpArg {
    Wire(NodeId),
    Baked(Value),
}

fn push(b: &mut ProgramBuilder, node: FieldNode) -> Result<NodeId, String> {
    b.try_push(node).map_err(|e| e.to_string())
}

/// Append one registered op to a program. The single construction path for
/// both document lowering and the script interpreter's builtins, which is
/// what keeps their semantics identical.
pub(super) fn lower_op(
    b: &mut ProgramBuilder,
    op: &str,
    args: &[OpArg],
) -> Result<NodeId, String> {
    let wire = |i: usize| -> Result<NodeId, String> {
        match args.get(i) {
            Some(OpArg::Wire(id)) => Ok(*id),
            _ => Err(format!("{op}: argument {i} must be a computed value")),
        }
    };
    let num = |i: usize| -> Result<f64, String> {
        match args.get(i) {
            Some(OpArg::Baked(Value::Scalar(v))) => Ok(*v),
            _ => Err(format!("{op}: argument {i} must be a scalar constant")),
        }
    };
    let vec = |i: usize| -> Result<Vector3<f64>, String> {
        match args.get(i) {
            Some(OpArg::Baked(Value::Vec3(v))) => Ok(*v),
            _ => Err(format!("{op}: argument {i} must be a vector constant")),
        }
    };
    let noise_spec = |seed: f64, frequency: f64, octaves: f64| -> Result<NoiseSpec, String> {
        if seed < 0.0 || seed.fract() != 0.0 {
            return Err(format!("{op}: seed must be a non-negative integer, got {seed}"));
        }
        if octaves < 1.0 || octaves.fract() != 0.0 {
            return Err(format!("{op}: octaves must be a positive integer, got {octaves}"));
        }
        Ok(if octaves == 1.0 {
            NoiseSpec::perlin(seed as u64, frequency)
        } else {
            NoiseSpec::fbm(seed as u64, frequency, octaves as u32)
        })
    };

    if is_fold(op) {
        if args.is_empty() {
            return Err(format!("{op}: needs at least one item"));
        }
        let mut acc = wire(0)?;
        for i in 1..args.len() {
            let rhs = wire(i)?;
            let node = match op {
                "add" => FieldNode::Add(acc, rhs),
                "mul" => FieldNode::Mul(acc, rhs),
                "min" => FieldNode::Min(acc, rhs),
                "max" => FieldNode::Max(acc, rhs),
                _ => unreachable!("is_fold covers exactly these"),
            };
            acc = push(b, node)?;
        }
        return Ok(acc);
    }

    let node = match op {
        "constant" => match args.first() {
            Some(OpArg::Baked(Value::Scalar(v))) => FieldNode::Const(*v),
            Some(OpArg::Baked(Value::Vec3(v))) => FieldNode::ConstVec(*v),
            _ => return Err("constant: needs one baked value".into()),
        },
        "position" => FieldNode::Position,
        "sub" => FieldNode::Sub(wire(0)?, wire(1)?),
        "div" => FieldNode::Div(wire(0)?, wire(1)?),
        "pow" => FieldNode::Pow(wire(0)?, wire(1)?),
        "less" => FieldNode::Less(wire(0)?, wire(1)?),
        "greater" => FieldNode::Greater(wire(0)?, wire(1)?),
        "neg" => FieldNode::Neg(wire(0)?),
        "abs" => FieldNode::Abs(wire(0)?),
        "sqrt" => FieldNode::Sqrt(wire(0)?),
        "floor" => FieldNode::Floor(wire(0)?),
        "sin" => FieldNode::Sin(wire(0)?),
        "cos" => FieldNode::Cos(wire(0)?),
        "mix" => FieldNode::Mix { a: wire(0)?, b: wire(1)?, t: wire(2)? },
        "clamp" => FieldNode::Clamp { value: wire(0)?, min: wire(1)?, max: wire(2)? },
        "map_range" => FieldNode::MapRange {
            value: wire(0)?,
            from_min: wire(1)?,
            from_max: wire(2)?,
            to_min: wire(3)?,
            to_max: wire(4)?,
        },
        "smooth_min" => FieldNode::SmoothMin(wire(0)?, wire(1)?, num(2)?),
        "smooth_max" => FieldNode::SmoothMax(wire(0)?, wire(1)?, num(2)?),
        "split_x" => FieldNode::SplitX(wire(0)?),
        "split_y" => FieldNode::SplitY(wire(0)?),
        "split_z" => FieldNode::SplitZ(wire(0)?),
        "combine_xyz" => FieldNode::CombineXyz(wire(0)?, wire(1)?, wire(2)?),
        "vec_add" => FieldNode::VecAdd(wire(0)?, wire(1)?),
        "vec_sub" => FieldNode::VecSub(wire(0)?, wire(1)?),
        "vec_scale" => FieldNode::VecScale(wire(0)?, wire(1)?),
        "dot" => FieldNode::Dot(wire(0)?, wire(1)?),
        "length" => FieldNode::Length(wire(0)?),
        "noise" => FieldNode::Noise {
            pos: wire(0)?,
            spec: noise_spec(num(1)?, num(2)?, num(3)?)?,
        },
        "warp" => FieldNode::WarpPos {
            pos: wire(0)?,
            warp: WarpSpec {
                amplitude: num(4)?,
                noise: noise_spec(num(1)?, num(2)?, num(3)?)?,
            },
        },
        "sphere" => FieldNode::SdfSphere {
            pos: wire(0)?,
            center: Point3::from(vec(1)?),
            radius: num(2)?,
        },
        "box" => FieldNode::SdfBox {
            pos: wire(0)?,
            center: Point3::from(vec(1)?),
            half_extents: vec(2)?,
        },
        "plane" => FieldNode::SdfPlane { pos: wire(0)?, normal: vec(1)?, offset: num(2)? },
        other => return Err(format!("unknown node type '{other}'")),
    };
    push(b, node)
}

/// One group expansion or the top level: the scope's nodes, parameter
/// bindings already lowered at the call site, and the ids this expansion
/// has produced so far. Shared subgraphs lower once per expansion.
struct Scope<'a> {
    nodes: BTreeMap<&'a str, &'a GraphNode>,
    params: BTreeMap<String, NodeId>,
    memo: BTreeMap<String, NodeId>,
    visiting: BTreeSet<String>,
}

impl<'a> Scope<'a> {
    fn new(nodes: &'a [GraphNode], params: BTreeMap<String, NodeId>) -> Self {
        Scope {
            nodes: nodes.iter().map(|n| (n.id.as_str(), n)).collect(),
            params,
            memo: BTreeMap::new(),
            visiting: BTreeSet::new(),
        }
    }
}

fn lower_binding(
    doc: &NodeGraphDoc,
    b: &mut ProgramBuilder,
    scope: &mut Scope,
    binding: &Binding,
) -> Result<NodeId, GraphError> {
    match binding {
        Binding::Scalar(v) => push(b, FieldNode::Const(*v)).map_err(internal),
        Binding::Vector(v) => push(b, FieldNode::ConstVec(*v)).map_err(internal),
        Binding::Link(target) => lower_ref(doc, b, scope, target),
        Binding::List(_) => Err(internal("a multi-input list cannot stand alone".into())),
    }
}

fn internal(detail: String) -> GraphError {
    GraphError::Syntax(format!("lowering: {detail}"))
}

fn lower_ref(
    doc: &NodeGraphDoc,
    b: &mut ProgramBuilder,
    scope: &mut Scope,
    target: &str,
) -> Result<NodeId, GraphError> {
    if let Some(&id) = scope.params.get(target) {
        return Ok(id);
    }
    if let Some(&id) = scope.memo.get(target) {
        return Ok(id);
    }
    let Some(&node) = scope.nodes.get(target) else {
        return Err(GraphError::DanglingLink {
            node: target.to_string(),
            socket: String::new(),
            target: target.to_string(),
        });
    };
    if !scope.visiting.insert(target.to_string()) {
        return Err(GraphError::Cycle { node: target.to_string() });
    }
    let id = lower_node(doc, b, scope, node)?;
    scope.visiting.remove(target);
    scope.memo.insert(target.to_string(), id);
    Ok(id)
}

fn lower_node(
    doc: &NodeGraphDoc,
    b: &mut ProgramBuilder,
    scope: &mut Scope,
    node: &GraphNode,
) -> Result<NodeId, GraphError> {
    if let Some(group) = &node.group {
        let decl = doc.groups.get(group).ok_or_else(|| GraphError::GroupArity {
            node: node.id.clone(),
            group: group.clone(),
            detail: "group is not defined".into(),
        })?;
        let mut params = BTreeMap::new();
        for input in &decl.inputs {
            let binding = node.inputs.get(&input.name).ok_or_else(|| GraphError::GroupArity {
                node: node.id.clone(),
                group: group.clone(),
                detail: format!("input '{}' is not bound", input.name),
            })?;
            params.insert(input.name.clone(), lower_binding(doc, b, scope, binding)?);
        }
        let mut inner = Scope::new(&decl.nodes, params);
        return lower_binding(doc, b, &mut inner, &decl.output);
    }

    check_field_params(node)?;
    let spec = op_spec(&node.op).ok_or_else(|| GraphError::UnknownNodeType {
        node: node.id.clone(),
        op: node.op.clone(),
    })?;
    let missing = |socket: &str| GraphError::Socket {
        node: node.id.clone(),
        socket: socket.to_string(),
        detail: "socket is not bound".into(),
    };
    let mut args = Vec::new();
    for sock in spec.sockets {
        let binding = node.inputs.get(sock.name).ok_or_else(|| missing(sock.name))?;
        match sock.kind {
            SocketKind::Scalar | SocketKind::Vector => {
                args.push(OpArg::Wire(lower_binding(doc, b, scope, binding)?));
            }
            SocketKind::ScalarList => {
                let Binding::List(items) = binding else {
                    return Err(GraphError::Socket {
                        node: node.id.clone(),
                        socket: sock.name.to_string(),
                        detail: "expected a list of scalar items".into(),
                    });
                };
                for item in items {
                    args.push(OpArg::Wire(lower_binding(doc, b, scope, item)?));
                }
            }
            SocketKind::ConstScalar | SocketKind::ConstVector | SocketKind::ConstAny => {
                let value = match binding {
                    Binding::Scalar(v) => Value::Scalar(*v),
                    Binding::Vector(v) => Value::Vec3(*v),
                    _ => {
                        return Err(GraphError::Socket {
                            node: node.id.clone(),
                            socket: sock.name.to_string(),
                            detail: "socket takes a constant, not a wire".into(),
                        })
                    }
                };
                args.push(OpArg::Baked(value));
            }
        }
    }
    lower_op(b, &node.op, &args).map_err(|detail| GraphError::Socket {
        node: node.id.clone(),
        socket: String::new(),
        detail,
    })
}

fn lower_output(
    doc: &NodeGraphDoc,
    name: &str,
    binding: &Binding,
) -> Result<FieldProgram, GraphError> {
    let mut b = ProgramBuilder::new();
    let mut scope = Scope::new(&doc.nodes, BTreeMap::new());
    let root = lower_binding(doc, &mut b, &mut scope, binding).map_err(|e| match e {
        GraphError::Syntax(detail) => GraphError::Output { name: name.to_string(), detail },
        other => other,
    })?;
    Ok(b.finish(root))
}

fn fmt_num(v: f64) -> String {
    format!("{v:?}")
}

fn fmt_vec(v: &Vector3<f64>) -> String {
    format!("[{}, {}, {}]", fmt_num(v.x), fmt_num(v.y), fmt_num(v.z))
}

fn fmt_atom(binding: &Binding) -> String {
    match binding {
        Binding::Scalar(v) => fmt_num(*v),
        Binding::Vector(v) => fmt_vec(v),
        Binding::Link(target) => target.clone(),
        Binding::List(_) => unreachable!("lists are flattened into argument positions"),
    }
}

/// Socket bindings of a node in emission order, lists flattened.
fn node_args(doc: &NodeGraphDoc, node: &GraphNode) -> Vec<Binding> {
    let mut out = Vec::new();
    let sockets: Vec<&str> = if let Some(group) = &node.group {
        doc.groups[group].inputs.iter().map(|i| i.name.as_str()).collect()
    } else {
        op_spec(&node.op).expect("validated op").sockets.iter().map(|s| s.name).collect()
    };
    for socket in sockets {
        match &node.inputs[socket] {
            Binding::List(items) => out.extend(items.iter().cloned()),
            other => out.push(other.clone()),
        }
    }
    out
}

fn stmt_line(doc: &NodeGraphDoc, node: &GraphNode) -> String {
    if node.op == "constant" {
        return format!("{} = {}", node.id, fmt_atom(&node.inputs["value"]));
    }
    let callee = node.group.as_deref().unwrap_or(&node.op);
    let args: Vec<String> = node_args(doc, node).iter().map(fmt_atom).collect();
    format!("{} = {}({})", node.id, callee, args.join(", "))
}

/// Statement order for one scope: dependencies first via post-order walk
/// from the given roots, then any remaining nodes in declaration order.
fn statement_order<'a>(
    doc: &NodeGraphDoc,
    nodes: &'a [GraphNode],
    roots: &[&str],
) -> Vec<&'a GraphNode> {
    let by_id: BTreeMap<&str, &GraphNode> = nodes.iter().map(|n| (n.id.as_str(), n)).collect();
    let mut done: BTreeSet<&str> = BTreeSet::new();
    let mut order: Vec<&GraphNode> = Vec::with_capacity(nodes.len());

    fn visit<'a>(
        doc: &NodeGraphDoc,
        by_id: &BTreeMap<&'a str, &'a GraphNode>,
        id: &str,
        done: &mut BTreeSet<&'a str>,
        order: &mut Vec<&'a GraphNode>,
    ) {
        let Some(&node) = by_id.get(id) else {
            return;
        };
        if done.contains(node.id.as_str()) {
            return;
        }
        done.insert(node.id.as_str());
        for arg in node_args(doc, node) {
            if let Binding::Link(target) = arg {
                visit(doc, by_id, &target, done, order);
            }
        }
        order.push(node);
    }

    for root in roots {
        visit(doc, &by_id, root, &mut done, &mut order);
    }
    for node in nodes {
        visit(doc, &by_id, &node.id, &mut done, &mut order);
    }
    order
}

/// Group definitions in dependency order (callees before callers), ties by
/// name, mirroring the order validation accepted them in.
fn group_emit_order(doc: &NodeGraphDoc) -> Vec<&str> {
    fn visit<'a>(
        doc: &'a NodeGraphDoc,
        name: &'a str,
        done: &mut BTreeSet<&'a str>,
        order: &mut Vec<&'a str>,
    ) {
        if done.contains(name) {
            return;
        }
        done.insert(name);
        for node in &doc.groups[name].nodes {
            if let Some(dep) = &node.group {
                if doc.groups.contains_key(dep) {
                    visit(doc, dep, done, order);
                }
            }
        }
        order.push(name);
    }

    let mut done = BTreeSet::new();
    let mut order = Vec::with_capacity(doc.groups.len());
    for name in doc.groups.keys() {
        visit(doc, name, &mut done, &mut order);
    }
    order
}

fn emit_text(doc: &NodeGraphDoc) -> String {
    let mut text = String::new();
    for name in group_emit_order(doc) {
        let decl = &doc.groups[name];
        let params: Vec<&str> = decl.inputs.iter().map(|i| i.name.as_str()).collect();
        text.push_str(&format!("fn {name}({}) {{\n", params.join(", ")));
        let roots: Vec<&str> = match &decl.output {
            Binding::Link(target) => vec![target.as_str()],
            _ => Vec::new(),
        };
        for node in statement_order(doc, &decl.nodes, &roots) {
            text.push_str("    ");
            text.push_str(&stmt_line(doc, node));
            text.push('\n');
        }
        text.push_str(&format!("    return {}\n}}\n\n", fmt_atom(&decl.output)));
    }

    let roots: Vec<&str> = doc
        .outputs
        .values()
        .filter_map(|binding| match binding {
            Binding::Link(target) => Some(target.as_str()),
            _ => None,
        })
        .collect();
    for node in statement_order(doc, &doc.nodes, &roots) {
        text.push_str(&stmt_line(doc, node));
        text.push('\n');
    }
    for (name, binding) in &doc.outputs {
        text.push_str(&format!("output {name} = {}\n", fmt_atom(binding)));
    }
    text
}

/// Lower a validated document: one inlined [`FieldProgram`] per named
/// output, plus the whole graph rendered in the statement language.
pub fn transpile(doc: &NodeGraphDoc) -> Result<Transpiled, GraphError> {
    let mut programs = BTreeMap::new();
    for (name, binding) in &doc.outputs {
        programs.insert(name.clone(), lower_output(doc, name, binding)?);
    }
    Ok(Transpiled { programs, text: emit_text(doc) })
}
