//! Distribution annotations on node display names.
//!
//! A display name like `"boulder; radius ~ U(0.5, 2.0); seed ~ choice(3, 7)"`
//! declares that the named sockets should be drawn from distributions rather
//! than fixed by hand. [`sample_annotations`] resolves every annotation into
//! a concrete constant, keyed so that each (scope, node, socket) triple gets
//! an independent stream derived from one document seed: redrawing with a
//! new seed moves every annotated socket, while the same seed reproduces the
//! same document bit for bit.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::ops::{op_spec, SocketKind};
use super::{Binding, GraphError, GraphNode, GroupDecl, NodeGraphDoc, SocketType};
use crate::rng::{stream, substream};

#[derive(Debug, Clone, PartialEq)]
pub enum AnnotationKind {
    /// `U(lo, hi)`: uniform on the closed interval.
    Uniform(f64, f64),
    /// `N(mean, sigma)`: normal.
    Normal(f64, f64),
    /// `LogU(lo, hi)`: uniform in log space, `0 < lo <= hi`.
    LogUniform(f64, f64),
    /// `choice(v1, v2, ...)`: uniform over the listed values.
    Choice(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistributionAnnotation {
    /// Node path: the node id, or `Group.id` for nodes inside a group.
    pub node: String,
    pub socket: String,
    pub kind: AnnotationKind,
}

/// Parse the `socket ~ Dist(args)` segments out of a display name. Segments
/// without a `~` are ordinary naming text and are skipped.
fn parse_name(name: &str) -> Result<Vec<(String, AnnotationKind)>, String> {
    let mut out = Vec::new();
    for segment in name.split(';') {
        let Some((socket, spec)) = segment.split_once('~') else {
            continue;
        };
        let socket = socket.trim();
        if socket.is_empty() {
            return Err("annotation names no socket".into());
        }
        let spec = spec.trim();
        let (head, rest) = spec
            .split_once('(')
            .ok_or_else(|| format!("expected 'Dist(args)', got '{spec}'"))?;
        let args_text = rest
            .strip_suffix(')')
            .ok_or_else(|| format!("missing closing parenthesis in '{spec}'"))?;
        let mut args = Vec::new();
        if !args_text.trim().is_empty() {
            for a in args_text.split(',') {
                let v: f64 = a
                    .trim()
                    .parse()
                    .map_err(|_| format!("cannot parse '{}' as a number", a.trim()))?;
                if !v.is_finite() {
                    return Err(format!("argument {v} is not finite"));
                }
                args.push(v);
            }
        }
        let two = |name: &str| -> Result<(f64, f64), String> {
            if args.len() == 2 {
                Ok((args[0], args[1]))
            } else {
                Err(format!("{name} takes two arguments, got {}", args.len()))
            }
        };
        let kind = match head.trim() {
            "U" => {
                let (lo, hi) = two("U")?;
                if lo > hi {
                    return Err(format!("U bounds are reversed: {lo} > {hi}"));
                }
                AnnotationKind::Uniform(lo, hi)
            }
            "N" => {
                let (mean, sigma) = two("N")?;
                if sigma < 0.0 {
                    return Err(format!("N needs sigma >= 0, got {sigma}"));
                }
                AnnotationKind::Normal(mean, sigma)
            }
            "LogU" => {
                let (lo, hi) = two("LogU")?;
                if !(lo > 0.0 && lo <= hi) {
                    return Err(format!("LogU needs 0 < lo <= hi, got ({lo}, {hi})"));
                }
                AnnotationKind::LogUniform(lo, hi)
            }
            "choice" => {
                if args.is_empty() {
                    return Err("choice needs at least one value".into());
                }
                AnnotationKind::Choice(args)
            }
            other => return Err(format!("unknown distribution '{other}'")),
        };
        out.push((socket.to_string(), kind));
    }
    Ok(out)
}

/// The annotated socket must exist on the node and accept a scalar constant.
fn check_target(
    node: &GraphNode,
    socket: &str,
    groups: &std::collections::BTreeMap<String, GroupDecl>,
) -> Result<(), String> {
    if let Some(group) = &node.group {
        let decl = &groups[group];
        let input = decl
            .inputs
            .iter()
            .find(|i| i.name == socket)
            .ok_or_else(|| format!("group '{group}' declares no input named '{socket}'"))?;
        return match input.ty {
            SocketType::Scalar => Ok(()),
            SocketType::Vector => Err(format!("input '{socket}' takes a vector")),
        };
    }
    let spec = op_spec(&node.op).expect("validated nodes have registered ops");
    let sock = spec
        .sockets
        .iter()
        .find(|s| s.name == socket)
        .ok_or_else(|| format!("'{}' has no socket named '{socket}'", node.op))?;
    match sock.kind {
        SocketKind::Scalar | SocketKind::ConstScalar | SocketKind::ConstAny => Ok(()),
        SocketKind::Vector | SocketKind::ConstVector => {
            Err(format!("socket '{socket}' takes a vector"))
        }
        SocketKind::ScalarList => Err(format!("socket '{socket}' is a multi-input")),
    }
}

fn scope_annotations(
    scope: &str,
    nodes: &[GraphNode],
    groups: &std::collections::BTreeMap<String, GroupDecl>,
    out: &mut Vec<DistributionAnnotation>,
) -> Result<(), GraphError> {
    for node in nodes {
        let parsed = parse_name(&node.name).map_err(|detail| GraphError::Annotation {
            node: node.id.clone(),
            socket: String::new(),
            detail,
        })?;
        for (socket, kind) in parsed {
            check_target(node, &socket, groups).map_err(|detail| GraphError::Annotation {
                node: node.id.clone(),
                socket: socket.clone(),
                detail,
            })?;
            let path = if scope.is_empty() {
                node.id.clone()
            } else {
                format!("{scope}.{}", node.id)
            };
            out.push(DistributionAnnotation { node: path, socket, kind });
        }
    }
    Ok(())
}

/// Collect every distribution annotation in the document: top-level nodes
/// first in declaration order, then group bodies by group name.
pub fn annotations(doc: &NodeGraphDoc) -> Result<Vec<DistributionAnnotation>, GraphError> {
    let mut out = Vec::new();
    scope_annotations("", &doc.nodes, &doc.groups, &mut out)?;
    for (name, decl) in &doc.groups {
        scope_annotations(name, &decl.nodes, &doc.groups, &mut out)?;
    }
    Ok(out)
}

fn draw(kind: &AnnotationKind, rng: &mut impl Rng) -> f64 {
    match kind {
        AnnotationKind::Uniform(lo, hi) => {
            if lo == hi {
                *lo
            } else {
                rng.random_range(*lo..=*hi)
            }
        }
        AnnotationKind::Normal(mean, sigma) => {
            if *sigma == 0.0 {
                *mean
            } else {
                Normal::new(*mean, *sigma).expect("sigma checked at parse").sample(rng)
            }
        }
        AnnotationKind::LogUniform(lo, hi) => {
            if lo == hi {
                *lo
            } else {
                rng.random_range(lo.ln()..=hi.ln()).exp()
            }
        }
        AnnotationKind::Choice(values) => values[rng.random_range(0..values.len())],
    }
}

fn sample_scope(
    scope_seed: u64,
    nodes: &mut [GraphNode],
    groups: &std::collections::BTreeMap<String, GroupDecl>,
) -> Result<(), GraphError> {
    for node in nodes {
        let parsed = parse_name(&node.name).map_err(|detail| GraphError::Annotation {
            node: node.id.clone(),
            socket: String::new(),
            detail,
        })?;
        let node_seed = substream(scope_seed, &node.id);
        for (socket, kind) in parsed {
            check_target(node, &socket, groups).map_err(|detail| GraphError::Annotation {
                node: node.id.clone(),
                socket: socket.clone(),
                detail,
            })?;
            let mut rng = stream(substream(node_seed, &socket));
            let value = draw(&kind, &mut rng);
            node.inputs.insert(socket, Binding::Scalar(value));
        }
    }
    Ok(())
}

/// Resolve every annotation into a concrete scalar constant. The input
/// document is untouched; annotation text stays in the display names of the
/// returned copy so the draw remains visible and re-samplable.
pub fn sample_annotations(doc: &NodeGraphDoc, seed: u64) -> Result<NodeGraphDoc, GraphError> {
    let mut out = doc.clone();
    let base = substream(seed, "annotations");
    let group_decls = doc.groups.clone();
    sample_scope(substream(base, ""), &mut out.nodes, &group_decls)?;
    for (name, decl) in &mut out.groups {
        sample_scope(substream(base, name), &mut decl.nodes, &group_decls)?;
    }
    Ok(out)
}
