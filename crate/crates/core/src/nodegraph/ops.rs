//! The registered operator set: every node type a graph document may use,
//! with its socket schema. Socket order here fixes the argument order of
//! emitted calls, so the table is shared by the validator, the lowering
//! pass, and the script interpreter.

use crate::fields::ValueType;

/// How a socket's JSON binding is interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum SocketKind {
    /// Scalar wire: a number constant or a link to a scalar node.
    Scalar,
    /// Vector wire: a `[x, y, z]` constant or a link to a vector node.
    Vector,
    /// Number constant baked into the node (never a link).
    ConstScalar,
    /// `[x, y, z]` constant baked into the node.
    ConstVector,
    /// Number or `[x, y, z]`; the node's output type follows.
    ConstAny,
    /// Multi-input socket: a non-empty array of scalar wires.
    ScalarList,
}

pub(crate) struct SocketSpec {
    pub name: &'static str,
    pub kind: SocketKind,
    /// Filled in when the binding is absent; a `None` default makes the
    /// socket required.
    pub default: Option<f64>,
}

pub(crate) struct OpSpec {
    pub name: &'static str,
    pub sockets: &'static [SocketSpec],
    /// `None` for `constant`, whose type follows its value.
    pub output: Option<ValueType>,
}

const fn req(name: &'static str, kind: SocketKind) -> SocketSpec {
    SocketSpec { name, kind, default: None }
}

const fn opt(name: &'static str, default: f64) -> SocketSpec {
    SocketSpec { name, kind: SocketKind::ConstScalar, default: Some(default) }
}

const S: SocketKind = SocketKind::Scalar;
const V: SocketKind = SocketKind::Vector;
const CS: SocketKind = SocketKind::ConstScalar;
const CV: SocketKind = SocketKind::ConstVector;

static OPS: &[OpSpec] = &[
    OpSpec { name: "constant", sockets: &[req("value", SocketKind::ConstAny)], output: None },
    OpSpec { name: "position", sockets: &[], output: Some(ValueType::Vec3) },
    // Folding multi-input math.
    OpSpec { name: "add", sockets: &[req("items", SocketKind::ScalarList)], output: Some(ValueType::Scalar) },
    OpSpec { name: "mul", sockets: &[req("items", SocketKind::ScalarList)], output: Some(ValueType::Scalar) },
    OpSpec { name: "min", sockets: &[req("items", SocketKind::ScalarList)], output: Some(ValueType::Scalar) },
    OpSpec { name: "max", sockets: &[req("items", SocketKind::ScalarList)], output: Some(ValueType::Scalar) },
    // Fixed-arity math.
    OpSpec { name: "sub", sockets: &[req("a", S), req("b", S)], output: Some(ValueType::Scalar) },
    OpSpec { name: "div", sockets: &[req("a", S), req("b", S)], output: Some(ValueType::Scalar) },
    OpSpec { name: "pow", sockets: &[req("a", S), req("b", S)], output: Some(ValueType::Scalar) },
    OpSpec { name: "less", sockets: &[req("a", S), req("b", S)], output: Some(ValueType::Scalar) },
    OpSpec { name: "greater", sockets: &[req("a", S), req("b", S)], output: Some(ValueType::Scalar) },
    OpSpec { name: "neg", sockets: &[req("x", S)], output: Some(ValueType::Scalar) },
    OpSpec { name: "abs", sockets: &[req("x", S)], output: Some(ValueType::Scalar) },
    OpSpec { name: "sqrt", sockets: &[req("x", S)], output: Some(ValueType::Scalar) },
    OpSpec { name: "floor", sockets: &[req("x", S)], output: Some(ValueType::Scalar) },
    OpSpec { name: "sin", sockets: &[req("x", S)], output: Some(ValueType::Scalar) },
    OpSpec { name: "cos", sockets: &[req("x", S)], output: Some(ValueType::Scalar) },
    OpSpec {
        name: "mix",
        sockets: &[req("a", S), req("b", S), req("t", S)],
        output: Some(ValueType::Scalar),
    },
    OpSpec {
        name: "clamp",
        sockets: &[req("value", S), req("min", S), req("max", S)],
        output: Some(ValueType::Scalar),
    },
    OpSpec {
        name: "map_range",
        sockets: &[
            req("value", S),
            req("from_min", S),
            req("from_max", S),
            req("to_min", S),
            req("to_max", S),
        ],
        output: Some(ValueType::Scalar),
    },
    OpSpec {
        name: "smooth_min",
        sockets: &[req("a", S), req("b", S), opt("k", 0.5)],
        output: Some(ValueType::Scalar),
    },
    OpSpec {
        name: "smooth_max",
        sockets: &[req("a", S), req("b", S), opt("k", 0.5)],
        output: Some(ValueType::Scalar),
    },
    // Vector plumbing.
    OpSpec { name: "split_x", sockets: &[req("v", V)], output: Some(ValueType::Scalar) },
    OpSpec { name: "split_y", sockets: &[req("v", V)], output: Some(ValueType::Scalar) },
    OpSpec { name: "split_z", sockets: &[req("v", V)], output: Some(ValueType::Scalar) },
    OpSpec {
        name: "combine_xyz",
        sockets: &[req("x", S), req("y", S), req("z", S)],
        output: Some(ValueType::Vec3),
    },
    OpSpec { name: "vec_add", sockets: &[req("a", V), req("b", V)], output: Some(ValueType::Vec3) },
    OpSpec { name: "vec_sub", sockets: &[req("a", V), req("b", V)], output: Some(ValueType::Vec3) },
    OpSpec { name: "vec_scale", sockets: &[req("v", V), req("s", S)], output: Some(ValueType::Vec3) },
    OpSpec { name: "dot", sockets: &[req("a", V), req("b", V)], output: Some(ValueType::Scalar) },
    OpSpec { name: "length", sockets: &[req("v", V)], output: Some(ValueType::Scalar) },
    // Field primitives. Noise parameters are baked constants.
    OpSpec {
        name: "noise",
        sockets: &[req("pos", V), req("seed", CS), req("frequency", CS), opt("octaves", 1.0)],
        output: Some(ValueType::Scalar),
    },
    OpSpec {
        name: "warp",
        sockets: &[
            req("pos", V),
            req("seed", CS),
            req("frequency", CS),
            opt("octaves", 1.0),
            req("amplitude", CS),
        ],
        output: Some(ValueType::Vec3),
    },
    OpSpec {
        name: "sphere",
        sockets: &[req("pos", V), req("center", CV), req("radius", CS)],
        output: Some(ValueType::Scalar),
    },
    OpSpec {
        name: "box",
        sockets: &[req("pos", V), req("center", CV), req("half_extents", CV)],
        output: Some(ValueType::Scalar),
    },
    OpSpec {
        name: "plane",
        sockets: &[req("pos", V), req("normal", CV), req("offset", CS)],
        output: Some(ValueType::Scalar),
    },
];

pub(crate) fn op_spec(name: &str) -> Option<&'static OpSpec> {
    OPS.iter().find(|op| op.name == name)
}

/// True for `add`/`mul`/`min`/`max`, whose single list socket folds left.
pub(crate) fn is_fold(name: &str) -> bool {
    matches!(name, "add" | "mul" | "min" | "max")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_op_name_is_unique() {
        for (i, op) in OPS.iter().enumerate() {
            for other in &OPS[i + 1..] {
                assert_ne!(op.name, other.name);
            }
        }
    }

    #[test]
    fn fold_ops_have_exactly_one_list_socket() {
        for op in OPS {
            if is_fold(op.name) {
                assert_eq!(op.sockets.len(), 1);
                assert_eq!(op.sockets[0].kind, SocketKind::ScalarList);
            } else {
                assert!(op.sockets.iter().all(|s| s.kind != SocketKind::ScalarList));
            }
        }
    }

    #[test]
    fn defaults_only_on_baked_scalars() {
        for op in OPS {
            for sock in op.sockets {
                if sock.default.is_some() {
                    assert_eq!(sock.kind, SocketKind::ConstScalar, "{}.{}", op.name, sock.name);
                }
            }
        }
    }
}
