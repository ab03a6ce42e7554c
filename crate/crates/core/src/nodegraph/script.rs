//! The statement language that transpiled graphs are emitted in.
//!
//! One statement per node, one function per group, one `output` line per
//! named output:
//!
//! ```text
//! fn Shell(d, thickness) {
//!     mag = abs(d)
//!     out = sub(mag, thickness)
//!     return out
//! }
//!
//! p = position()
//! ball = sphere(p, [1.0, 0.0, -2.0], 2.0)
//! crust = Shell(ball, 0.25)
//! output field = crust
//! ```
//!
//! Statements separate on newlines; `#` starts a comment. Arguments are
//! atoms: numbers, `[x, y, z]` vector literals, or variable names. The
//! interpreter executes statements in order and evaluates every built-in
//! call through a one-node field program, so a replayed script produces
//! bit-identical values to the lowered [`FieldProgram`](crate::fields::FieldProgram)
//! while sharing none of the wiring, inlining, or scoping machinery it is
//! used to cross-check.

use std::collections::BTreeMap;

use nalgebra::{Point3, Vector3};
use thiserror::Error;

use super::lower::{lower_op, OpArg};
use super::ops::{is_fold, op_spec, SocketKind};
use crate::fields::{ProgramBuilder, Value};

#[derive(Debug, Error, PartialEq)]
pub enum ScriptError {
    #[error("line {line}: {detail}")]
    Parse { line: usize, detail: String },
    #[error("{0}")]
    Eval(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Atom {
    Number(f64),
    Vector([f64; 3]),
    Ident(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Atom(Atom),
    Call { name: String, args: Vec<Atom> },
}

impl Expr {
    /// Variable names this expression reads.
    pub fn idents(&self) -> Vec<String> {
        let pick = |atom: &Atom| match atom {
            Atom::Ident(name) => Some(name.clone()),
            _ => None,
        };
        match self {
            Expr::Atom(atom) => pick(atom).into_iter().collect(),
            Expr::Call { args, .. } => args.iter().filter_map(pick).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub target: String,
    pub expr: Expr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FnDef {
    pub name: String,
    pub params: Vec<String>,
    pub body: Vec<Stmt>,
    pub ret: Atom,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Script {
    pub fns: Vec<FnDef>,
    pub stmts: Vec<Stmt>,
    pub outputs: Vec<(String, Atom)>,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(f64),
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Comma,
    Equals,
    Newline,
}

struct Lexed {
    tok: Tok,
    line: usize,
}

fn lex(text: &str) -> Result<Vec<Lexed>, ScriptError> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    let mut line = 1;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\r' => i += 1,
            '\n' => {
                toks.push(Lexed { tok: Tok::Newline, line });
                line += 1;
                i += 1;
            }
            '#' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            '(' => {
                toks.push(Lexed { tok: Tok::LParen, line });
                i += 1;
            }
            ')' => {
                toks.push(Lexed { tok: Tok::RParen, line });
                i += 1;
            }
            '[' => {
                toks.push(Lexed { tok: Tok::LBracket, line });
                i += 1;
            }
            ']' => {
                toks.push(Lexed { tok: Tok::RBracket, line });
                i += 1;
            }
            '{' => {
                toks.push(Lexed { tok: Tok::LBrace, line });
                i += 1;
            }
            '}' => {
                toks.push(Lexed { tok: Tok::RBrace, line });
                i += 1;
            }
            ',' => {
                toks.push(Lexed { tok: Tok::Comma, line });
                i += 1;
            }
            '=' => {
                toks.push(Lexed { tok: Tok::Equals, line });
                i += 1;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len()
                    && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                toks.push(Lexed { tok: Tok::Ident(text[start..i].to_string()), line });
            }
            c if c.is_ascii_digit() || c == '-' || c == '.' => {
                let start = i;
                if bytes[i] == b'-' {
                    i += 1;
                }
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    i += 1;
                    if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
                        i += 1;
                    }
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                let slice = &text[start..i];
                let v: f64 = slice.parse().map_err(|_| ScriptError::Parse {
                    line,
                    detail: format!("cannot parse number '{slice}'"),
                })?;
                toks.push(Lexed { tok: Tok::Number(v), line });
            }
            other => {
                return Err(ScriptError::Parse {
                    line,
                    detail: format!("unexpected character '{other}'"),
                })
            }
        }
    }
    Ok(toks)
}

struct Parser {
    toks: Vec<Lexed>,
    pos: usize,
}

impl Parser {
    fn line(&self) -> usize {
        self.toks.get(self.pos).map_or_else(
            || self.toks.last().map_or(1, |t| t.line),
            |t| t.line,
        )
    }

    fn err(&self, detail: impl Into<String>) -> ScriptError {
        ScriptError::Parse { line: self.line(), detail: detail.into() }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn peek2(&self) -> Option<&Tok> {
        self.toks.get(self.pos + 1).map(|t| &t.tok)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.tok.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: &Tok, ctx: &str) -> Result<(), ScriptError> {
        match self.peek() {
            Some(t) if t == want => {
                self.pos += 1;
                Ok(())
            }
            Some(t) => Err(self.err(format!("expected {want:?} {ctx}, got {t:?}"))),
            None => Err(self.err(format!("expected {want:?} {ctx}, got end of input"))),
        }
    }

    fn expect_ident(&mut self, ctx: &str) -> Result<String, ScriptError> {
        match self.peek() {
            Some(Tok::Ident(_)) => match self.next() {
                Some(Tok::Ident(name)) => Ok(name),
                _ => unreachable!(),
            },
            Some(t) => Err(self.err(format!("expected a name {ctx}, got {t:?}"))),
            None => Err(self.err(format!("expected a name {ctx}, got end of input"))),
        }
    }

    fn skip_newlines(&mut self) {
        while matches!(self.peek(), Some(Tok::Newline)) {
            self.pos += 1;
        }
    }

    fn number(&mut self, ctx: &str) -> Result<f64, ScriptError> {
        match self.next() {
            Some(Tok::Number(v)) => Ok(v),
            Some(t) => {
                self.pos -= 1;
                Err(self.err(format!("expected a number {ctx}, got {t:?}")))
            }
            None => Err(self.err(format!("expected a number {ctx}, got end of input"))),
        }
    }

    fn atom(&mut self) -> Result<Atom, ScriptError> {
        match self.peek() {
            Some(Tok::Number(_)) => Ok(Atom::Number(self.number("")?)),
            Some(Tok::Ident(_)) => Ok(Atom::Ident(self.expect_ident("")?)),
            Some(Tok::LBracket) => {
                self.pos += 1;
                let x = self.number("in vector literal")?;
                self.expect(&Tok::Comma, "in vector literal")?;
                let y = self.number("in vector literal")?;
                self.expect(&Tok::Comma, "in vector literal")?;
                let z = self.number("in vector literal")?;
                self.expect(&Tok::RBracket, "closing vector literal")?;
                Ok(Atom::Vector([x, y, z]))
            }
            Some(t) => Err(self.err(format!("expected a value, got {t:?}"))),
            None => Err(self.err("expected a value, got end of input")),
        }
    }

    fn expr(&mut self) -> Result<Expr, ScriptError> {
        if matches!(self.peek(), Some(Tok::Ident(_))) && matches!(self.peek2(), Some(Tok::LParen))
        {
            let name = self.expect_ident("")?;
            self.pos += 1;
            let mut args = Vec::new();
            if !matches!(self.peek(), Some(Tok::RParen)) {
                loop {
                    args.push(self.atom()?);
                    match self.peek() {
                        Some(Tok::Comma) => self.pos += 1,
                        _ => break,
                    }
                }
            }
            self.expect(&Tok::RParen, "closing the argument list")?;
            return Ok(Expr::Call { name, args });
        }
        Ok(Expr::Atom(self.atom()?))
    }

    fn stmt(&mut self, target: String) -> Result<Stmt, ScriptError> {
        self.expect(&Tok::Equals, "after statement target")?;
        let expr = self.expr()?;
        Ok(Stmt { target, expr })
    }

    fn end_of_stmt(&mut self) -> Result<(), ScriptError> {
        match self.peek() {
            Some(Tok::Newline) => {
                self.skip_newlines();
                Ok(())
            }
            None | Some(Tok::RBrace) => Ok(()),
            Some(t) => Err(self.err(format!("expected end of statement, got {t:?}"))),
        }
    }

    fn fndef(&mut self) -> Result<FnDef, ScriptError> {
        let name = self.expect_ident("after 'fn'")?;
        self.expect(&Tok::LParen, "starting the parameter list")?;
        let mut params = Vec::new();
        if !matches!(self.peek(), Some(Tok::RParen)) {
            loop {
                params.push(self.expect_ident("in parameter list")?);
                match self.peek() {
                    Some(Tok::Comma) => self.pos += 1,
                    _ => break,
                }
            }
        }
        self.expect(&Tok::RParen, "closing the parameter list")?;
        self.expect(&Tok::LBrace, "opening the function body")?;
        let mut body = Vec::new();
        let ret;
        loop {
            self.skip_newlines();
            let ident = self.expect_ident("in function body")?;
            if ident == "return" {
                ret = self.atom()?;
                self.skip_newlines();
                self.expect(&Tok::RBrace, "closing the function body")?;
                break;
            }
            if ident == "fn" || ident == "output" {
                return Err(self.err(format!("'{ident}' cannot appear inside a function")));
            }
            let stmt = self.stmt(ident)?;
            body.push(stmt);
            self.end_of_stmt()?;
        }
        Ok(FnDef { name, params, body, ret })
    }
}

pub fn parse_script(text: &str) -> Result<Script, ScriptError> {
    let mut p = Parser { toks: lex(text)?, pos: 0 };
    let mut script = Script { fns: Vec::new(), stmts: Vec::new(), outputs: Vec::new() };
    loop {
        p.skip_newlines();
        if p.peek().is_none() {
            break;
        }
        let ident = p.expect_ident("at start of statement")?;
        match ident.as_str() {
            "fn" => {
                let def = p.fndef()?;
                if script.fns.iter().any(|f| f.name == def.name) {
                    return Err(p.err(format!("function '{}' defined twice", def.name)));
                }
                script.fns.push(def);
            }
            "output" => {
                let name = p.expect_ident("after 'output'")?;
                p.expect(&Tok::Equals, "after output name")?;
                let atom = p.atom()?;
                if script.outputs.iter().any(|(n, _)| n == &name) {
                    return Err(p.err(format!("output '{name}' defined twice")));
                }
                script.outputs.push((name, atom));
                p.end_of_stmt()?;
            }
            "return" => return Err(p.err("'return' outside a function")),
            _ => {
                let stmt = p.stmt(ident)?;
                script.stmts.push(stmt);
                p.end_of_stmt()?;
            }
        }
    }
    Ok(script)
}

impl Script {
    pub fn output_names(&self) -> impl Iterator<Item = &str> {
        self.outputs.iter().map(|(n, _)| n.as_str())
    }

    /// Run the script at one query point and read the named output.
    pub fn eval_output(&self, name: &str, point: Point3<f64>) -> Result<Value, ScriptError> {
        let (_, atom) = self
            .outputs
            .iter()
            .find(|(n, _)| n == name)
            .ok_or_else(|| ScriptError::Eval(format!("no output named '{name}'")))?;
        let mut scope = BTreeMap::new();
        for stmt in &self.stmts {
            let v = self.eval_expr(&stmt.expr, &scope, point)?;
            scope.insert(stmt.target.clone(), v);
        }
        self.eval_atom(atom, &scope, point)
    }

    fn eval_atom(
        &self,
        atom: &Atom,
        scope: &BTreeMap<String, Value>,
        _point: Point3<f64>,
    ) -> Result<Value, ScriptError> {
        match atom {
            Atom::Number(v) => Ok(Value::Scalar(*v)),
            Atom::Vector([x, y, z]) => Ok(Value::Vec3(Vector3::new(*x, *y, *z))),
            Atom::Ident(name) => scope
                .get(name)
                .copied()
                .ok_or_else(|| ScriptError::Eval(format!("undefined variable '{name}'"))),
        }
    }

    fn eval_expr(
        &self,
        expr: &Expr,
        scope: &BTreeMap<String, Value>,
        point: Point3<f64>,
    ) -> Result<Value, ScriptError> {
        match expr {
            Expr::Atom(atom) => self.eval_atom(atom, scope, point),
            Expr::Call { name, args } => {
                let mut values = Vec::with_capacity(args.len());
                for arg in args {
                    values.push(self.eval_atom(arg, scope, point)?);
                }
                if let Some(def) = self.fns.iter().find(|f| &f.name == name) {
                    return self.call_fn(def, &values, point);
                }
                builtin(name, &values, point)
            }
        }
    }

    fn call_fn(
        &self,
        def: &FnDef,
        args: &[Value],
        point: Point3<f64>,
    ) -> Result<Value, ScriptError> {
        if args.len() != def.params.len() {
            return Err(ScriptError::Eval(format!(
                "{} takes {} arguments, got {}",
                def.name,
                def.params.len(),
                args.len()
            )));
        }
        let mut scope: BTreeMap<String, Value> =
            def.params.iter().cloned().zip(args.iter().copied()).collect();
        for stmt in &def.body {
            let v = self.eval_expr(&stmt.expr, &scope, point)?;
            scope.insert(stmt.target.clone(), v);
        }
        self.eval_atom(&def.ret, &scope, point)
    }
}

/// Evaluate one built-in by lowering it as a single-node program whose
/// inputs are the already-computed argument values.
fn builtin(name: &str, args: &[Value], point: Point3<f64>) -> Result<Value, ScriptError> {
    let spec =
        op_spec(name).ok_or_else(|| ScriptError::Eval(format!("unknown function '{name}'")))?;
    let mut b = ProgramBuilder::new();
    let mut wire = |v: &Value| match v {
        Value::Scalar(s) => b.constant(*s),
        Value::Vec3(v) => b.constant_vec(*v),
    };
    let op_args: Vec<OpArg> = if is_fold(name) {
        args.iter().map(|v| OpArg::Wire(wire(v))).collect()
    } else {
        if args.len() != spec.sockets.len() {
            return Err(ScriptError::Eval(format!(
                "{name} takes {} arguments, got {}",
                spec.sockets.len(),
                args.len()
            )));
        }
        spec.sockets
            .iter()
            .zip(args)
            .map(|(sock, v)| match sock.kind {
                SocketKind::Scalar | SocketKind::Vector | SocketKind::ScalarList => {
                    OpArg::Wire(wire(v))
                }
                SocketKind::ConstScalar | SocketKind::ConstVector | SocketKind::ConstAny => {
                    OpArg::Baked(*v)
                }
            })
            .collect()
    };
    let root = lower_op(&mut b, name, &op_args).map_err(ScriptError::Eval)?;
    Ok(b.finish(root).eval(point))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn scalar(script: &Script, name: &str, p: Point3<f64>) -> f64 {
        match script.eval_output(name, p).unwrap() {
            Value::Scalar(v) => v,
            other => panic!("expected a scalar, got {other:?}"),
        }
    }

    #[test]
    fn parses_functions_statements_and_outputs() {
        let script = parse_script(
            "fn Shell(d, thickness) {\n    mag = abs(d)\n    out = sub(mag, thickness)\n    return out\n}\n\np = position()\nball = sphere(p, [1.0, 0.0, -2.0], 2.0)\ncrust = Shell(ball, 0.25)\noutput field = crust\n",
        )
        .unwrap();
        assert_eq!(script.fns.len(), 1);
        assert_eq!(script.fns[0].params, vec!["d", "thickness"]);
        assert_eq!(script.fns[0].body.len(), 2);
        assert_eq!(script.stmts.len(), 3);
        assert_eq!(script.output_names().collect::<Vec<_>>(), vec!["field"]);
    }

    #[test]
    fn arithmetic_follows_field_semantics() {
        let script = parse_script(
            "a = 3.0\ns = add(a, 4.0, 0.5)\nq = div(1.0, 0.0)\nr = sqrt(-4.0)\noutput s = s\noutput q = q\noutput r = r\n",
        )
        .unwrap();
        let p = Point3::origin();
        assert_eq!(scalar(&script, "s", p), 7.5);
        assert_eq!(scalar(&script, "q", p), 0.0, "division by zero clamps to zero");
        assert_eq!(scalar(&script, "r", p), 0.0, "sqrt of a negative clamps to zero");
    }

    #[test]
    fn position_feeds_spatial_functions() {
        let script = parse_script("p = position()\nl = length(p)\noutput out = l\n").unwrap();
        assert_relative_eq!(scalar(&script, "out", Point3::new(3.0, 4.0, 0.0)), 5.0);
        assert_relative_eq!(scalar(&script, "out", Point3::new(0.0, 0.0, 2.0)), 2.0);
    }

    #[test]
    fn vector_literals_split_into_components() {
        let script =
            parse_script("v = [1.0, 2.0, 3.0]\ns = split_y(v)\noutput out = s\n").unwrap();
        assert_eq!(scalar(&script, "out", Point3::origin()), 2.0);
    }

    #[test]
    fn function_calls_bind_parameters_in_order() {
        let script = parse_script(
            "fn Scale(x, k) {\n    y = mul(x, k)\n    return y\n}\na = Scale(3.0, 2.0)\nb = Scale(a, a)\noutput out = b\n",
        )
        .unwrap();
        assert_eq!(scalar(&script, "out", Point3::origin()), 36.0);
    }

    #[test]
    fn comments_and_blank_lines_are_ignored()  {
        let script = parse_script(
            "# heightfield, trimmed down\n\na = 1.5   # base level\n\n\nb = add(a, 2.0)\noutput out = b  # done\n",
        )
        .unwrap();
        assert_eq!(scalar(&script, "out", Point3::origin()), 3.5);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let missing_paren = parse_script("a = add(1.0, 2.0\nb = 1.0\n").unwrap_err();
        assert_eq!(missing_paren, ScriptError::Parse {
            line: 1,
            detail: "expected RParen closing the argument list, got Newline".into(),
        });

        let bad_line = parse_script("a = 1.0\nb = = 2.0\n").unwrap_err();
        assert!(matches!(bad_line, ScriptError::Parse { line: 2, .. }), "{bad_line}");

        let stray_return = parse_script("return 1.0\n").unwrap_err();
        assert!(matches!(stray_return, ScriptError::Parse { line: 1, .. }), "{stray_return}");
    }

    #[test]
    fn eval_errors_name_the_problem() {
        let script = parse_script("a = warble(1.0)\noutput out = a\n").unwrap();
        let err = script.eval_output("out", Point3::origin()).unwrap_err();
        assert_eq!(err, ScriptError::Eval("unknown function 'warble'".into()));

        let script = parse_script("a = ghost\noutput out = a\n").unwrap();
        let err = script.eval_output("out", Point3::origin()).unwrap_err();
        assert_eq!(err, ScriptError::Eval("undefined variable 'ghost'".into()));

        let script = parse_script("a = sub(1.0)\noutput out = a\n").unwrap();
        let err = script.eval_output("out", Point3::origin()).unwrap_err();
        assert_eq!(err, ScriptError::Eval("sub takes 2 arguments, got 1".into()));

        let script = parse_script("a = 1.0\noutput out = a\n").unwrap();
        let err = script.eval_output("missing", Point3::origin()).unwrap_err();
        assert_eq!(err, ScriptError::Eval("no output named 'missing'".into()));
    }

    #[test]
    fn noise_builtin_matches_the_direct_program() {
        use crate::fields::NoiseSpec;

        let script = parse_script(
            "p = position()\nn = noise(p, 7.0, 0.5, 1.0)\noutput out = n\n",
        )
        .unwrap();
        let mut b = ProgramBuilder::new();
        let p = b.position();
        let n = b.noise(p, NoiseSpec::perlin(7, 0.5));
        let direct = b.finish(n);
        for i in 0..10 {
            let p = Point3::new(i as f64 * 0.7, -1.3 + i as f64, 0.25 * i as f64);
            assert_eq!(scalar(&script, "out", p).to_bits(), direct.eval_scalar(p).to_bits());
        }
    }

    #[test]
    fn type_errors_surface_from_the_underlying_ops() {
        let script = parse_script("p = position()\na = add(p, 1.0)\noutput out = a\n").unwrap();
        let err = script.eval_output("out", Point3::origin()).unwrap_err();
        assert!(matches!(err, ScriptError::Eval(_)), "{err}");
    }
}
