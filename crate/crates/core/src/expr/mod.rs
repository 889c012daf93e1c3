//! Scalar expressions in named variables.
//!
//! Expressions are parsed once into an AST and then bound to an ordered list
//! of variable slots for fast repeated evaluation. Partial derivatives come
//! from forward-mode dual numbers, so they are exact for the supported
//! operators: `+ - * / ^`, unary minus, and `sin cos exp log sqrt abs`.

mod dual;
mod parser;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

pub use dual::{Dual, DualValue};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinaryOp {
    fn symbol(self) -> char {
        match self {
            BinaryOp::Add => '+',
            BinaryOp::Sub => '-',
            BinaryOp::Mul => '*',
            BinaryOp::Div => '/',
            BinaryOp::Pow => '^',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Function {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Abs,
}

impl Function {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Function::Sin,
            "cos" => Function::Cos,
            "exp" => Function::Exp,
            "log" => Function::Log,
            "sqrt" => Function::Sqrt,
            "abs" => Function::Abs,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Function::Sin => "sin",
            Function::Cos => "cos",
            Function::Exp => "exp",
            Function::Log => "log",
            Function::Sqrt => "sqrt",
            Function::Abs => "abs",
        }
    }
}

/// AST node tagged with the byte offset of the token that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub offset: usize,
    pub kind: NodeKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind {
    Const(f64),
    Var(String),
    Unary(UnaryOp, Box<Node>),
    Binary(BinaryOp, Box<Node>, Box<Node>),
    Call(Function, Box<Node>),
}

impl Node {
    fn new(offset: usize, kind: NodeKind) -> Self {
        Self { offset, kind }
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match &self.kind {
            NodeKind::Const(_) => {}
            NodeKind::Var(name) => {
                out.insert(name.clone());
            }
            NodeKind::Unary(_, a) | NodeKind::Call(_, a) => a.collect_vars(out),
            NodeKind::Binary(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            NodeKind::Const(c) => write!(f, "{c}"),
            NodeKind::Var(name) => f.write_str(name),
            NodeKind::Unary(UnaryOp::Neg, a) => write!(f, "(-{a})"),
            NodeKind::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            NodeKind::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("syntax error at offset {offset}: {kind}")]
pub struct ParseError {
    pub offset: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseErrorKind {
    #[error("empty expression")]
    Empty,
    #[error("unexpected end of input")]
    UnexpectedEnd,
    #[error("unexpected character '{0}'")]
    Unexpected(char),
    #[error("expected '{0}', found '{1}'")]
    Expected(char, char),
    #[error("malformed number")]
    BadNumber,
    #[error("unknown function '{0}'")]
    UnknownFunction(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("unknown variable {0}")]
    Unbound(String),
    #[error("domain error at offset {offset}: {message}")]
    Domain { offset: usize, message: String },
}

impl EvalError {
    pub(crate) fn domain(offset: usize, message: impl Into<String>) -> Self {
        EvalError::Domain { offset, message: message.into() }
    }
}

/// A parsed expression together with its source text.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    source: String,
    ast: Node,
    free_vars: BTreeSet<String>,
}

impl Expression {
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let ast = parser::Parser::new(text).parse_all()?;
        let mut free_vars = BTreeSet::new();
        ast.collect_vars(&mut free_vars);
        Ok(Self {
            source: text.to_string(),
            ast,
            free_vars,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn ast(&self) -> &Node {
        &self.ast
    }

    pub fn free_vars(&self) -> &BTreeSet<String> {
        &self.free_vars
    }

    /// Fully parenthesized canonical form.
    pub fn canonical(&self) -> String {
        self.ast.to_string()
    }

    /// Compiles against an ordered slot list; every free variable must be a slot.
    pub fn bind(&self, slots: &[&str]) -> Result<BoundExpr, EvalError> {
        let root = compile(&self.ast, slots)?;
        Ok(BoundExpr {
            root,
            slots: slots.len(),
            min_denominator: 0.0,
        })
    }

    fn bind_map(&self, bindings: &BTreeMap<String, f64>) -> Result<(BoundExpr, Vec<f64>, Vec<String>), EvalError> {
        let names: Vec<String> = bindings.keys().cloned().collect();
        let slots: Vec<&str> = names.iter().map(String::as_str).collect();
        let bound = self.bind(&slots)?;
        let values = bindings.values().copied().collect();
        Ok((bound, values, names))
    }

    pub fn eval(&self, bindings: &BTreeMap<String, f64>) -> Result<f64, EvalError> {
        let (bound, values, _) = self.bind_map(bindings)?;
        bound.eval(&values)
    }

    /// Value plus ∂/∂name for every bound name (zero for names the expression ignores).
    pub fn eval_with_partials(&self, bindings: &BTreeMap<String, f64>) -> Result<DualValue, EvalError> {
        let (bound, values, names) = self.bind_map(bindings)?;
        let mut value = bound.eval(&values)?;
        let mut partials = BTreeMap::new();
        let mut nonsmooth = false;
        for (slot, name) in names.into_iter().enumerate() {
            let (d, kink) = bound.eval_dual(&values, Some(slot))?;
            value = d.re;
            nonsmooth |= kink;
            partials.insert(name, d.eps);
        }
        Ok(DualValue { value, partials, nonsmooth })
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.ast)
    }
}

impl std::str::FromStr for Expression {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Compiled {
    Const(f64),
    Slot(usize),
    Neg(Box<Compiled>),
    Binary(BinaryOp, usize, Box<Compiled>, Box<Compiled>),
    Call(Function, usize, Box<Compiled>),
}

fn compile(node: &Node, slots: &[&str]) -> Result<Compiled, EvalError> {
    Ok(match &node.kind {
        NodeKind::Const(c) => Compiled::Const(*c),
        NodeKind::Var(name) => Compiled::Slot(
            slots
                .iter()
                .position(|s| s == name)
                .ok_or_else(|| EvalError::Unbound(name.clone()))?,
        ),
        NodeKind::Unary(UnaryOp::Neg, a) => Compiled::Neg(Box::new(compile(a, slots)?)),
        NodeKind::Binary(op, a, b) => Compiled::Binary(
            *op,
            node.offset,
            Box::new(compile(a, slots)?),
            Box::new(compile(b, slots)?),
        ),
        NodeKind::Call(f, a) => Compiled::Call(*f, node.offset, Box::new(compile(a, slots)?)),
    })
}

/// Expression compiled against a fixed slot order.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundExpr {
    root: Compiled,
    slots: usize,
    min_denominator: f64,
}

impl BoundExpr {
    /// Any division whose denominator has magnitude below `threshold` becomes
    /// a domain error (the default only rejects an exact zero).
    pub fn with_min_denominator(mut self, threshold: f64) -> Self {
        self.min_denominator = threshold;
        self
    }

    pub fn slot_count(&self) -> usize {
        self.slots
    }

    pub fn eval(&self, values: &[f64]) -> Result<f64, EvalError> {
        Ok(self.eval_dual(values, None)?.0.re)
    }

    /// Evaluates with the tangent seeded on `seed`. The flag reports an
    /// `abs` evaluated at its kink, where the subgradient 0 was used.
    pub fn eval_dual(&self, values: &[f64], seed: Option<usize>) -> Result<(Dual, bool), EvalError> {
        debug_assert_eq!(values.len(), self.slots);
        let mut ctx = dual::Context {
            values,
            seed,
            min_denominator: self.min_denominator,
            kink: false,
        };
        let out = ctx.eval(&self.root)?;
        Ok((out, ctx.kink))
    }

    /// Value and full gradient over all slots.
    pub fn gradient(&self, values: &[f64]) -> Result<(f64, Vec<f64>), EvalError> {
        let mut value = self.eval(values)?;
        let mut grad = Vec::with_capacity(self.slots);
        for slot in 0..self.slots {
            let (d, _) = self.eval_dual(values, Some(slot))?;
            value = d.re;
            grad.push(d.eps);
        }
        Ok((value, grad))
    }
}
