//! Field programs: immutable DAGs of scalar/vector operations over 3D space.
//!
//! A [`FieldProgram`] is a flat node list in dependency order (every input
//! references an earlier node), evaluated by walking the list once per query
//! point. Programs are pure — value depends only on (program, point) — and
//! total: division by zero yields 0, `sqrt` of a negative yields 0, and any
//! op that would produce NaN from finite inputs is scrubbed to 0, matching
//! the conventions of node-based shader math. Distances are meters whenever
//! a field is used as an SDF; solid regions are negative.
//!
//! Programs come from two places: Rust code via [`ProgramBuilder`] (terrain
//! elements, masks), and node-graph documents via the `nodegraph` module,
//! which also owns the serialized form.

pub mod cellular;
pub mod noise;
pub mod sdf;
pub mod tile;

use std::sync::Arc;

use nalgebra::{Point3, Vector3};
use thiserror::Error;

pub use cellular::VoronoiCellField;
pub use noise::{NoiseKind, NoiseSpec, WarpSpec};
pub use tile::TileField;

/// Handle to a node within one [`FieldProgram`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct NodeId(pub(crate) u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Type of a node's output socket.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum ValueType {
    Scalar,
    Vec3,
}

/// A single evaluated value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value {
    Scalar(f64),
    Vec3(Vector3<f64>),
}

impl Value {
    #[inline]
    fn scalar(self) -> f64 {
        match self {
            Value::Scalar(v) => v,
            Value::Vec3(_) => unreachable!("type-checked program yielded vector where scalar expected"),
        }
    }

    #[inline]
    fn vec3(self) -> Vector3<f64> {
        match self {
            Value::Vec3(v) => v,
            Value::Scalar(_) => unreachable!("type-checked program yielded scalar where vector expected"),
        }
    }
}

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("node input {input} of {op}: expected {expected:?}, got {got:?}")]
    TypeMismatch { op: &'static str, input: usize, expected: ValueType, got: ValueType },
    #[error("node input {input} of {op} references node {id} but only {len} nodes exist")]
    DanglingInput { op: &'static str, input: usize, id: u32, len: u32 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("{op} requires scalar-valued programs")]
    VectorOutput { op: &'static str },
    #[error("program has no nodes")]
    Empty,
}

/// One field operation. Scalar inputs/outputs unless noted.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum FieldNode {
    // Sources
    Const(f64),
    ConstVec(Vector3<f64>),
    /// The query point (vector).
    Position,

    // Scalar arithmetic
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    /// Division with `b = 0 → 0`.
    Div(NodeId, NodeId),
    Min(NodeId, NodeId),
    Max(NodeId, NodeId),
    /// Smooth minimum with blend width `k` (see [`noise::smooth_min`]).
    SmoothMin(NodeId, NodeId, f64),
    SmoothMax(NodeId, NodeId, f64),
    Neg(NodeId),
    Abs(NodeId),
    /// `sqrt(max(x, 0))`.
    Sqrt(NodeId),
    Floor(NodeId),
    Sin(NodeId),
    Cos(NodeId),
    /// `a^b`; negative base with fractional exponent → 0.
    Pow(NodeId, NodeId),
    Clamp { value: NodeId, min: NodeId, max: NodeId },
    Mix { a: NodeId, b: NodeId, t: NodeId },
    /// Linear remap of `value` from one range to another; a degenerate
    /// source range maps everything to `to_min`.
    MapRange { value: NodeId, from_min: NodeId, from_max: NodeId, to_min: NodeId, to_max: NodeId },
    /// 1.0 if `a < b` else 0.0.
    Less(NodeId, NodeId),
    Greater(NodeId, NodeId),

    // Vector ops (inputs vector unless scalar noted)
    SplitX(NodeId),
    SplitY(NodeId),
    SplitZ(NodeId),
    /// Three scalars → vector.
    CombineXyz(NodeId, NodeId, NodeId),
    VecAdd(NodeId, NodeId),
    VecSub(NodeId, NodeId),
    /// Vector × scalar.
    VecScale(NodeId, NodeId),
    Dot(NodeId, NodeId),
    Length(NodeId),

    // Fields
    /// Noise sampled at a vector input.
    Noise { pos: NodeId, spec: NoiseSpec },
    /// Domain warp: vector in, vector out.
    WarpPos { pos: NodeId, warp: WarpSpec },

    // SDF primitives (vector in, signed distance out)
    SdfSphere { pos: NodeId, center: Point3<f64>, radius: f64 },
    SdfBox { pos: NodeId, center: Point3<f64>, half_extents: Vector3<f64> },
    /// `dot(p, normal) − offset`; solid on the side the normal points away from.
    SdfPlane { pos: NodeId, normal: Vector3<f64>, offset: f64 },
    /// Union of round cones (capsules with per-end radii).
    CapsuleChain { pos: NodeId, segments: Arc<Vec<RoundSegment>> },
    /// Height lookup into a rotated, seam-blended tile lattice (scalar h(x,y)).
    TiledHeight { pos: NodeId, tile: Arc<TileField> },
    /// Solid Voronoi cells from a precomputed active-cell set.
    VoronoiCells { pos: NodeId, field: Arc<VoronoiCellField> },
}

/// A swept segment with linearly varying radius.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RoundSegment {
    pub a: Point3<f64>,
    pub b: Point3<f64>,
    pub ra: f64,
    pub rb: f64,
}

impl FieldNode {
    pub fn op_name(&self) -> &'static str {
        match self {
            FieldNode::Const(_) => "value",
            FieldNode::ConstVec(_) => "vector",
            FieldNode::Position => "position",
            FieldNode::Add(..) => "add",
            FieldNode::Sub(..) => "subtract",
            FieldNode::Mul(..) => "multiply",
            FieldNode::Div(..) => "divide",
            FieldNode::Min(..) => "minimum",
            FieldNode::Max(..) => "maximum",
            FieldNode::SmoothMin(..) => "smooth_minimum",
            FieldNode::SmoothMax(..) => "smooth_maximum",
            FieldNode::Neg(..) => "negate",
            FieldNode::Abs(..) => "absolute",
            FieldNode::Sqrt(..) => "sqrt",
            FieldNode::Floor(..) => "floor",
            FieldNode::Sin(..) => "sine",
            FieldNode::Cos(..) => "cosine",
            FieldNode::Pow(..) => "power",
            FieldNode::Clamp { .. } => "clamp",
            FieldNode::Mix { .. } => "mix",
            FieldNode::MapRange { .. } => "map_range",
            FieldNode::Less(..) => "less_than",
            FieldNode::Greater(..) => "greater_than",
            FieldNode::SplitX(..) => "separate_x",
            FieldNode::SplitY(..) => "separate_y",
            FieldNode::SplitZ(..) => "separate_z",
            FieldNode::CombineXyz(..) => "combine_xyz",
            FieldNode::VecAdd(..) => "vector_add",
            FieldNode::VecSub(..) => "vector_subtract",
            FieldNode::VecScale(..) => "vector_scale",
            FieldNode::Dot(..) => "dot_product",
            FieldNode::Length(..) => "length",
            FieldNode::Noise { .. } => "noise",
            FieldNode::WarpPos { .. } => "warp",
            FieldNode::SdfSphere { .. } => "sdf_sphere",
            FieldNode::SdfBox { .. } => "sdf_box",
            FieldNode::SdfPlane { .. } => "sdf_plane",
            FieldNode::CapsuleChain { .. } => "capsule_chain",
            FieldNode::TiledHeight { .. } => "tiled_height",
            FieldNode::VoronoiCells { .. } => "voronoi_cells",
        }
    }

    /// Input node ids in socket order.
    pub fn inputs(&self) -> Vec<NodeId> {
        use FieldNode::*;
        match *self {
            Const(_) | ConstVec(_) | Position => vec![],
            Neg(a) | Abs(a) | Sqrt(a) | Floor(a) | Sin(a) | Cos(a) | SplitX(a) | SplitY(a)
            | SplitZ(a) | Length(a) => vec![a],
            Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) | Min(a, b) | Max(a, b) | Pow(a, b)
            | Less(a, b) | Greater(a, b) | VecAdd(a, b) | VecSub(a, b) | VecScale(a, b)
            | Dot(a, b) => vec![a, b],
            SmoothMin(a, b, _) | SmoothMax(a, b, _) => vec![a, b],
            Clamp { value, min, max } => vec![value, min, max],
            Mix { a, b, t } => vec![a, b, t],
            MapRange { value, from_min, from_max, to_min, to_max } => {
                vec![value, from_min, from_max, to_min, to_max]
            }
            CombineXyz(a, b, c) => vec![a, b, c],
            Noise { pos, .. }
            | WarpPos { pos, .. }
            | SdfSphere { pos, .. }
            | SdfBox { pos, .. }
            | SdfPlane { pos, .. }
            | CapsuleChain { pos, .. }
            | TiledHeight { pos, .. }
            | VoronoiCells { pos, .. } => vec![pos],
        }
    }

    /// Expected type of each input socket.
    fn input_types(&self) -> Vec<ValueType> {
        use FieldNode::*;
        use ValueType::*;
        match self {
            Const(_) | ConstVec(_) | Position => vec![],
            Neg(_) | Abs(_) | Sqrt(_) | Floor(_) | Sin(_) | Cos(_) => vec![Scalar],
            Add(..) | Sub(..) | Mul(..) | Div(..) | Min(..) | Max(..) | Pow(..) | Less(..)
            | Greater(..) | SmoothMin(..) | SmoothMax(..) => vec![Scalar, Scalar],
            Clamp { .. } | Mix { .. } | CombineXyz(..) => vec![Scalar, Scalar, Scalar],
            MapRange { .. } => vec![Scalar; 5],
            SplitX(_) | SplitY(_) | SplitZ(_) | Length(_) => vec![Vec3],
            VecAdd(..) | VecSub(..) | Dot(..) => vec![Vec3, Vec3],
            VecScale(..) => vec![Vec3, Scalar],
            Noise { .. } | WarpPos { .. } | SdfSphere { .. } | SdfBox { .. } | SdfPlane { .. }
            | CapsuleChain { .. } | TiledHeight { .. } | VoronoiCells { .. } => vec![Vec3],
        }
    }

    fn output_type(&self) -> ValueType {
        use FieldNode::*;
        match self {
            ConstVec(_) | Position | CombineXyz(..) | VecAdd(..) | VecSub(..) | VecScale(..)
            | WarpPos { .. } => ValueType::Vec3,
            _ => ValueType::Scalar,
        }
    }
}

/// An immutable, validated field program.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldProgram {
    nodes: Vec<FieldNode>,
    types: Vec<ValueType>,
    output: NodeId,
}

impl FieldProgram {
    pub fn nodes(&self) -> &[FieldNode] {
        &self.nodes
    }

    pub fn output(&self) -> NodeId {
        self.output
    }

    pub fn output_type(&self) -> ValueType {
        self.types[self.output.index()]
    }

    /// One-off evaluation. For bulk queries hold an [`Evaluator`] instead.
    pub fn eval(&self, p: Point3<f64>) -> Value {
        Evaluator::new(self).eval(p)
    }

    /// One-off scalar evaluation; panics if the program is vector-valued.
    pub fn eval_scalar(&self, p: Point3<f64>) -> f64 {
        assert_eq!(self.output_type(), ValueType::Scalar, "program output is not scalar");
        self.eval(p).scalar()
    }

    /// Rebuild a program from a raw node list, re-running every structural
    /// check the builder applies. This is the only door for untrusted input
    /// (deserialized scene files, transpiled graphs).
    pub fn from_parts(nodes: Vec<FieldNode>, output: NodeId) -> Result<FieldProgram, FieldError> {
        if nodes.is_empty() {
            return Err(FieldError::Empty);
        }
        let mut builder = ProgramBuilder::new();
        for node in nodes {
            builder.try_push(node)?;
        }
        if output.index() >= builder.len() {
            return Err(FieldError::DanglingInput {
                op: "program output",
                input: 0,
                id: output.0,
                len: builder.len() as u32,
            });
        }
        Ok(builder.finish(output))
    }
}

#[derive(serde::Serialize, serde::Deserialize)]
struct ProgramRepr {
    nodes: Vec<FieldNode>,
    output: NodeId,
}

impl serde::Serialize for FieldProgram {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        #[derive(serde::Serialize)]
        struct Borrowed<'a> {
            nodes: &'a [FieldNode],
            output: NodeId,
        }
        Borrowed { nodes: &self.nodes, output: self.output }.serialize(serializer)
    }
}

impl<'de> serde::Deserialize<'de> for FieldProgram {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = ProgramRepr::deserialize(deserializer)?;
        FieldProgram::from_parts(repr.nodes, repr.output).map_err(serde::de::Error::custom)
    }
}

/// Boolean composition of two scalar programs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdfOp {
    Union,
    Intersect,
    Subtract,
}

/// Combine two SDF programs: union = min, intersect = max, subtract = max(a, −b).
pub fn sdf_combine(op: SdfOp, a: &FieldProgram, b: &FieldProgram) -> Result<FieldProgram, FieldError> {
    if a.output_type() != ValueType::Scalar || b.output_type() != ValueType::Scalar {
        return Err(FieldError::VectorOutput { op: "sdf_combine" });
    }
    let mut builder = ProgramBuilder::new();
    let ra = builder.append_program(a);
    let rb = builder.append_program(b);
    let out = match op {
        SdfOp::Union => builder.min(ra, rb),
        SdfOp::Intersect => builder.max(ra, rb),
        SdfOp::Subtract => {
            let nb = builder.neg(rb);
            builder.max(ra, nb)
        }
    };
    Ok(builder.finish(out))
}

/// Incremental, type-checked program construction. Typed methods panic on
/// type misuse (a programming error); [`ProgramBuilder::try_push`] returns
/// errors instead and is what the node-graph transpiler drives.
#[derive(Debug, Default)]
pub struct ProgramBuilder {
    nodes: Vec<FieldNode>,
    types: Vec<ValueType>,
}

impl ProgramBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node_type(&self, id: NodeId) -> ValueType {
        self.types[id.index()]
    }

    /// Validate and append a node.
    pub fn try_push(&mut self, node: FieldNode) -> Result<NodeId, FieldError> {
        let inputs = node.inputs();
        let expected = node.input_types();
        debug_assert_eq!(inputs.len(), expected.len());
        for (i, (&id, &want)) in inputs.iter().zip(&expected).enumerate() {
            if id.index() >= self.nodes.len() {
                return Err(FieldError::DanglingInput {
                    op: node.op_name(),
                    input: i,
                    id: id.0,
                    len: self.nodes.len() as u32,
                });
            }
            let got = self.types[id.index()];
            if got != want {
                return Err(FieldError::TypeMismatch {
                    op: node.op_name(),
                    input: i,
                    expected: want,
                    got,
                });
            }
        }
        if let FieldNode::Noise { spec, .. } = &node {
            spec.validate().map_err(FieldError::InvalidParameter)?;
        }
        if let FieldNode::WarpPos { warp, .. } = &node {
            if !(warp.amplitude >= 0.0) {
                return Err(FieldError::InvalidParameter(format!(
                    "warp amplitude must be >= 0, got {}",
                    warp.amplitude
                )));
            }
            warp.noise.validate().map_err(FieldError::InvalidParameter)?;
        }
        self.types.push(node.output_type());
        self.nodes.push(node);
        Ok(NodeId(self.nodes.len() as u32 - 1))
    }

    fn push(&mut self, node: FieldNode) -> NodeId {
        let name = node.op_name();
        self.try_push(node).unwrap_or_else(|e| panic!("bad {name} node: {e}"))
    }

    /// Copy all of `p`'s nodes into this builder, returning the id its
    /// output maps to.
    pub fn append_program(&mut self, p: &FieldProgram) -> NodeId {
        let offset = self.nodes.len() as u32;
        for node in &p.nodes {
            let mut node = node.clone();
            remap_inputs(&mut node, offset);
            self.types.push(node.output_type());
            self.nodes.push(node);
        }
        NodeId(p.output.0 + offset)
    }

    pub fn finish(self, output: NodeId) -> FieldProgram {
        assert!(output.index() < self.nodes.len(), "output id out of range");
        FieldProgram { nodes: self.nodes, types: self.types, output }
    }

    // Typed convenience constructors.

    pub fn constant(&mut self, v: f64) -> NodeId {
        self.push(FieldNode::Const(v))
    }

    pub fn constant_vec(&mut self, v: Vector3<f64>) -> NodeId {
        self.push(FieldNode::ConstVec(v))
    }

    pub fn position(&mut self) -> NodeId {
        self.push(FieldNode::Position)
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(FieldNode::Add(a, b))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(FieldNode::Sub(a, b))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(FieldNode::Mul(a, b))
    }

    pub fn div(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(FieldNode::Div(a, b))
    }

    pub fn min(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(FieldNode::Min(a, b))
    }

    pub fn max(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(FieldNode::Max(a, b))
    }

    pub fn smooth_min(&mut self, a: NodeId, b: NodeId, k: f64) -> NodeId {
        self.push(FieldNode::SmoothMin(a, b, k))
    }

    pub fn smooth_max(&mut self, a: NodeId, b: NodeId, k: f64) -> NodeId {
        self.push(FieldNode::SmoothMax(a, b, k))
    }

    pub fn neg(&mut self, a: NodeId) -> NodeId {
        self.push(FieldNode::Neg(a))
    }

    pub fn abs(&mut self, a: NodeId) -> NodeId {
        self.push(FieldNode::Abs(a))
    }

    pub fn sqrt(&mut self, a: NodeId) -> NodeId {
        self.push(FieldNode::Sqrt(a))
    }

    pub fn mix(&mut self, a: NodeId, b: NodeId, t: NodeId) -> NodeId {
        self.push(FieldNode::Mix { a, b, t })
    }

    pub fn clamp(&mut self, value: NodeId, min: NodeId, max: NodeId) -> NodeId {
        self.push(FieldNode::Clamp { value, min, max })
    }

    pub fn split_x(&mut self, v: NodeId) -> NodeId {
        self.push(FieldNode::SplitX(v))
    }

    pub fn split_y(&mut self, v: NodeId) -> NodeId {
        self.push(FieldNode::SplitY(v))
    }

    pub fn split_z(&mut self, v: NodeId) -> NodeId {
        self.push(FieldNode::SplitZ(v))
    }

    pub fn combine_xyz(&mut self, x: NodeId, y: NodeId, z: NodeId) -> NodeId {
        self.push(FieldNode::CombineXyz(x, y, z))
    }

    pub fn vec_add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(FieldNode::VecAdd(a, b))
    }

    pub fn vec_sub(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(FieldNode::VecSub(a, b))
    }

    pub fn vec_scale(&mut self, v: NodeId, s: NodeId) -> NodeId {
        self.push(FieldNode::VecScale(v, s))
    }

    pub fn dot(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(FieldNode::Dot(a, b))
    }

    pub fn length(&mut self, v: NodeId) -> NodeId {
        self.push(FieldNode::Length(v))
    }

    pub fn noise(&mut self, pos: NodeId, spec: NoiseSpec) -> NodeId {
        self.push(FieldNode::Noise { pos, spec })
    }

    pub fn warp(&mut self, pos: NodeId, warp: WarpSpec) -> NodeId {
        self.push(FieldNode::WarpPos { pos, warp })
    }

    pub fn sdf_sphere(&mut self, pos: NodeId, center: Point3<f64>, radius: f64) -> NodeId {
        self.push(FieldNode::SdfSphere { pos, center, radius })
    }

    pub fn sdf_box(&mut self, pos: NodeId, center: Point3<f64>, half_extents: Vector3<f64>) -> NodeId {
        self.push(FieldNode::SdfBox { pos, center, half_extents })
    }

    pub fn sdf_plane(&mut self, pos: NodeId, normal: Vector3<f64>, offset: f64) -> NodeId {
        self.push(FieldNode::SdfPlane { pos, normal, offset })
    }

    pub fn capsule_chain(&mut self, pos: NodeId, segments: Arc<Vec<RoundSegment>>) -> NodeId {
        self.push(FieldNode::CapsuleChain { pos, segments })
    }

    pub fn tiled_height(&mut self, pos: NodeId, tile: Arc<TileField>) -> NodeId {
        self.push(FieldNode::TiledHeight { pos, tile })
    }

    pub fn voronoi_cells(&mut self, pos: NodeId, field: Arc<VoronoiCellField>) -> NodeId {
        self.push(FieldNode::VoronoiCells { pos, field })
    }
}

fn remap_inputs(node: &mut FieldNode, offset: u32) {
    use FieldNode::*;
    let shift = |id: &mut NodeId| id.0 += offset;
    match node {
        Const(_) | ConstVec(_) | Position => {}
        Neg(a) | Abs(a) | Sqrt(a) | Floor(a) | Sin(a) | Cos(a) | SplitX(a) | SplitY(a)
        | SplitZ(a) | Length(a) => shift(a),
        Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) | Min(a, b) | Max(a, b) | Pow(a, b)
        | Less(a, b) | Greater(a, b) | VecAdd(a, b) | VecSub(a, b) | VecScale(a, b) | Dot(a, b)
        | SmoothMin(a, b, _) | SmoothMax(a, b, _) => {
            shift(a);
            shift(b);
        }
        Clamp { value, min, max } => {
            shift(value);
            shift(min);
            shift(max);
        }
        Mix { a, b, t } => {
            shift(a);
            shift(b);
            shift(t);
        }
        MapRange { value, from_min, from_max, to_min, to_max } => {
            shift(value);
            shift(from_min);
            shift(from_max);
            shift(to_min);
            shift(to_max);
        }
        CombineXyz(a, b, c) => {
            shift(a);
            shift(b);
            shift(c);
        }
        Noise { pos, .. }
        | WarpPos { pos, .. }
        | SdfSphere { pos, .. }
        | SdfBox { pos, .. }
        | SdfPlane { pos, .. }
        | CapsuleChain { pos, .. }
        | TiledHeight { pos, .. }
        | VoronoiCells { pos, .. } => shift(pos),
    }
}

/// Replace any NaN produced by an op with 0 so downstream math stays finite.
#[inline]
fn scrub(v: f64) -> f64 {
    if v.is_nan() {
        0.0
    } else {
        v
    }
}

/// Reusable evaluation state for one program. Cheap to construct; hold one
/// per thread for bulk queries.
pub struct Evaluator<'a> {
    program: &'a FieldProgram,
    values: Vec<Value>,
}

impl<'a> Evaluator<'a> {
    pub fn new(program: &'a FieldProgram) -> Self {
        let values = vec![Value::Scalar(0.0); program.nodes.len()];
        Evaluator { program, values }
    }

    pub fn eval(&mut self, p: Point3<f64>) -> Value {
        use FieldNode::*;
        for (i, node) in self.program.nodes.iter().enumerate() {
            let v = |id: NodeId| self.values[id.index()];
            let s = |id: NodeId| self.values[id.index()].scalar();
            let result = match node {
                Const(c) => Value::Scalar(*c),
                ConstVec(c) => Value::Vec3(*c),
                Position => Value::Vec3(p.coords),
                Add(a, b) => Value::Scalar(scrub(s(*a) + s(*b))),
                Sub(a, b) => Value::Scalar(scrub(s(*a) - s(*b))),
                Mul(a, b) => Value::Scalar(scrub(s(*a) * s(*b))),
                Div(a, b) => {
                    let d = s(*b);
                    Value::Scalar(if d == 0.0 { 0.0 } else { scrub(s(*a) / d) })
                }
                Min(a, b) => Value::Scalar(s(*a).min(s(*b))),
                Max(a, b) => Value::Scalar(s(*a).max(s(*b))),
                SmoothMin(a, b, k) => Value::Scalar(noise::smooth_min(s(*a), s(*b), *k)),
                SmoothMax(a, b, k) => Value::Scalar(noise::smooth_max(s(*a), s(*b), *k)),
                Neg(a) => Value::Scalar(-s(*a)),
                Abs(a) => Value::Scalar(s(*a).abs()),
                Sqrt(a) => Value::Scalar(s(*a).max(0.0).sqrt()),
                Floor(a) => Value::Scalar(s(*a).floor()),
                Sin(a) => Value::Scalar(scrub(s(*a).sin())),
                Cos(a) => Value::Scalar(scrub(s(*a).cos())),
                Pow(a, b) => {
                    let (base, exp) = (s(*a), s(*b));
                    let undefined =
                        (base < 0.0 && exp.fract() != 0.0) || (base == 0.0 && exp < 0.0);
                    let r = if undefined {
                        0.0
                    } else {
                        base.powf(exp)
                    };
                    Value::Scalar(scrub(r))
                }
                Clamp { value, min, max } => {
                    let (lo, hi) = (s(*min), s(*max));
                    let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
                    Value::Scalar(s(*value).clamp(lo, hi))
                }
                Mix { a, b, t } => {
                    let t = s(*t);
                    Value::Scalar(scrub(s(*a) * (1.0 - t) + s(*b) * t))
                }
                MapRange { value, from_min, from_max, to_min, to_max } => {
                    let (fm, fx) = (s(*from_min), s(*from_max));
                    let (tm, tx) = (s(*to_min), s(*to_max));
                    let r = if fx == fm {
                        tm
                    } else {
                        scrub(tm + (s(*value) - fm) / (fx - fm) * (tx - tm))
                    };
                    Value::Scalar(r)
                }
                Less(a, b) => Value::Scalar(if s(*a) < s(*b) { 1.0 } else { 0.0 }),
                Greater(a, b) => Value::Scalar(if s(*a) > s(*b) { 1.0 } else { 0.0 }),
                SplitX(a) => Value::Scalar(v(*a).vec3().x),
                SplitY(a) => Value::Scalar(v(*a).vec3().y),
                SplitZ(a) => Value::Scalar(v(*a).vec3().z),
                CombineXyz(a, b, c) => Value::Vec3(Vector3::new(s(*a), s(*b), s(*c))),
                VecAdd(a, b) => Value::Vec3(v(*a).vec3() + v(*b).vec3()),
                VecSub(a, b) => Value::Vec3(v(*a).vec3() - v(*b).vec3()),
                VecScale(a, b) => {
                    let r = v(*a).vec3() * s(*b);
                    Value::Vec3(Vector3::new(scrub(r.x), scrub(r.y), scrub(r.z)))
                }
                Dot(a, b) => Value::Scalar(scrub(v(*a).vec3().dot(&v(*b).vec3()))),
                Length(a) => Value::Scalar(v(*a).vec3().norm()),
                Noise { pos, spec } => {
                    Value::Scalar(noise::noise_value(spec, Point3::from(v(*pos).vec3())))
                }
                WarpPos { pos, warp } => {
                    Value::Vec3(noise::warp_domain(Point3::from(v(*pos).vec3()), warp).coords)
                }
                SdfSphere { pos, center, radius } => {
                    Value::Scalar((Point3::from(v(*pos).vec3()) - center).norm() - radius)
                }
                SdfBox { pos, center, half_extents } => {
                    Value::Scalar(sdf::box_distance(
                        Point3::from(v(*pos).vec3()),
                        *center,
                        *half_extents,
                    ))
                }
                SdfPlane { pos, normal, offset } => {
                    Value::Scalar(v(*pos).vec3().dot(normal) - offset)
                }
                CapsuleChain { pos, segments } => {
                    Value::Scalar(sdf::capsule_chain_distance(
                        Point3::from(v(*pos).vec3()),
                        segments,
                    ))
                }
                TiledHeight { pos, tile } => {
                    let q = v(*pos).vec3();
                    Value::Scalar(tile.height(q.x, q.y))
                }
                VoronoiCells { pos, field } => {
                    Value::Scalar(field.distance(Point3::from(v(*pos).vec3())))
                }
            };
            self.values[i] = result;
        }
        self.values[self.program.output.index()]
    }

    pub fn eval_scalar(&mut self, p: Point3<f64>) -> f64 {
        self.eval(p).scalar()
    }
}
