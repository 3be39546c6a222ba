//! Parameterized expression ASTs: the unit of evolution and the final artifact.
//!
//! Candidate sources arrive as Python-lambda-style text emitted by a language
//! model; [`parse_candidate`] strips the wrapping (code fences, assignment
//! prefix, lambda header) and parses the body into an [`Expression`]. The AST
//! evaluates elementwise over sample blocks, with out-of-domain results
//! recorded in a finite-mask instead of aborting.

mod parser;

pub use parser::{parse_body, parse_candidate, ParseError};

use std::fmt;

/// Unary operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
}

/// Binary operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Mod,
}

/// Functions the grammar accepts. Aliased surface tokens (`np.sin`,
/// `scipy.special.jn`, ...) all resolve to one of these.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Tanh,
    Sinh,
    Cosh,
    Arctan,
    Arcsin,
    Arccos,
    Exp,
    Log,
    Log10,
    Sqrt,
    Abs,
    Sign,
    Floor,
    Power,
    Maximum,
    Minimum,
    BesselJ,
    BesselY,
    Erf,
    Erfc,
    Gamma,
    LogGamma,
}

impl Func {
    /// Canonical (bare) name.
    pub fn name(&self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Tanh => "tanh",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Arctan => "arctan",
            Func::Arcsin => "arcsin",
            Func::Arccos => "arccos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Log10 => "log10",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Sign => "sign",
            Func::Floor => "floor",
            Func::Power => "power",
            Func::Maximum => "maximum",
            Func::Minimum => "minimum",
            Func::BesselJ => "besselj",
            Func::BesselY => "bessely",
            Func::Erf => "erf",
            Func::Erfc => "erfc",
            Func::Gamma => "gamma",
            Func::LogGamma => "loggamma",
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            Func::Power | Func::Maximum | Func::Minimum | Func::BesselJ | Func::BesselY => 2,
            _ => 1,
        }
    }

    /// Scalar evaluation. Out-of-domain arguments yield NaN/inf; callers mask
    /// non-finite outputs rather than treating them as errors.
    pub fn eval(&self, args: &[f64]) -> f64 {
        match self {
            Func::Sin => args[0].sin(),
            Func::Cos => args[0].cos(),
            Func::Tan => args[0].tan(),
            Func::Tanh => args[0].tanh(),
            Func::Sinh => args[0].sinh(),
            Func::Cosh => args[0].cosh(),
            Func::Arctan => args[0].atan(),
            Func::Arcsin => args[0].asin(),
            Func::Arccos => args[0].acos(),
            Func::Exp => args[0].exp(),
            Func::Log => args[0].ln(),
            Func::Log10 => args[0].log10(),
            Func::Sqrt => args[0].sqrt(),
            Func::Abs => args[0].abs(),
            Func::Sign => {
                let x = args[0];
                if x.is_nan() {
                    f64::NAN
                } else if x > 0.0 {
                    1.0
                } else if x < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            Func::Floor => args[0].floor(),
            Func::Power => args[0].powf(args[1]),
            Func::Maximum => args[0].max(args[1]),
            Func::Minimum => args[0].min(args[1]),
            Func::BesselJ => {
                let n = args[0];
                if n.fract() == 0.0 && n.abs() <= i32::MAX as f64 {
                    libm::jn(n as i32, args[1])
                } else {
                    f64::NAN
                }
            }
            Func::BesselY => {
                let n = args[0];
                if n.fract() == 0.0 && n.abs() <= i32::MAX as f64 {
                    libm::yn(n as i32, args[1])
                } else {
                    f64::NAN
                }
            }
            Func::Erf => libm::erf(args[0]),
            Func::Erfc => libm::erfc(args[0]),
            Func::Gamma => libm::tgamma(args[0]),
            Func::LogGamma => libm::lgamma(args[0]),
        }
    }

    /// Resolves a bare (prefix-stripped) token to a catalog entry.
    pub fn from_token(token: &str) -> Option<Func> {
        Some(match token {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "tanh" => Func::Tanh,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            "arctan" | "atan" => Func::Arctan,
            "arcsin" | "asin" => Func::Arcsin,
            "arccos" | "acos" => Func::Arccos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "log10" => Func::Log10,
            "sqrt" => Func::Sqrt,
            "abs" | "absolute" | "fabs" => Func::Abs,
            "sign" => Func::Sign,
            "floor" => Func::Floor,
            "power" | "pow" => Func::Power,
            "maximum" => Func::Maximum,
            "minimum" => Func::Minimum,
            "besselj" | "jn" | "jv" => Func::BesselJ,
            "bessely" | "yn" | "yv" => Func::BesselY,
            "erf" => Func::Erf,
            "erfc" => Func::Erfc,
            "gamma" => Func::Gamma,
            "loggamma" | "gammaln" => Func::LogGamma,
            _ => return None,
        })
    }
}

/// AST node. Parameters are dense after parsing: indices 0..p-1 all occur.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Constant(f64),
    Variable(usize),
    Parameter(usize),
    Unary(UnaryOp, Box<Node>),
    Binary(BinaryOp, Box<Node>, Box<Node>),
    Call(Func, Vec<Node>),
}

impl Node {
    pub fn count_nodes(&self) -> usize {
        match self {
            Node::Constant(_) | Node::Variable(_) | Node::Parameter(_) => 1,
            Node::Unary(_, a) => 1 + a.count_nodes(),
            Node::Binary(_, a, b) => 1 + a.count_nodes() + b.count_nodes(),
            Node::Call(_, args) => 1 + args.iter().map(Node::count_nodes).sum::<usize>(),
        }
    }

    fn max_indices(&self, max_var: &mut Option<usize>, params: &mut Vec<usize>) {
        match self {
            Node::Constant(_) => {}
            Node::Variable(v) => *max_var = Some(max_var.map_or(*v, |m: usize| m.max(*v))),
            Node::Parameter(p) => {
                if !params.contains(p) {
                    params.push(*p);
                }
            }
            Node::Unary(_, a) => a.max_indices(max_var, params),
            Node::Binary(_, a, b) => {
                a.max_indices(max_var, params);
                b.max_indices(max_var, params);
            }
            Node::Call(_, args) => {
                for a in args {
                    a.max_indices(max_var, params);
                }
            }
        }
    }

    /// Folds `Neg(Constant(c))` into `Constant(-c)` bottom-up, matching what
    /// the parser produces for negative literals.
    fn fold_neg_constants(&mut self) {
        match self {
            Node::Unary(UnaryOp::Neg, a) => {
                a.fold_neg_constants();
                if let Node::Constant(c) = **a {
                    *self = Node::Constant(-c);
                }
            }
            Node::Binary(_, a, b) => {
                a.fold_neg_constants();
                b.fold_neg_constants();
            }
            Node::Call(_, args) => {
                for a in args {
                    a.fold_neg_constants();
                }
            }
            _ => {}
        }
    }

    fn remap_params(&mut self, map: &[usize]) {
        match self {
            Node::Parameter(p) => {
                *p = map.iter().position(|&orig| orig == *p).expect("param in map");
            }
            Node::Unary(_, a) => a.remap_params(map),
            Node::Binary(_, a, b) => {
                a.remap_params(map);
                b.remap_params(map);
            }
            Node::Call(_, args) => {
                for a in args {
                    a.remap_params(map);
                }
            }
            _ => {}
        }
    }
}

/// Errors from constructing or evaluating expressions.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExprError {
    #[error("variable index {index} out of range for input dimension {dim}")]
    VariableOutOfRange { index: usize, dim: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// A parsed, validated expression: dense parameters, bounded variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    root: Node,
    input_dim: usize,
    param_count: usize,
}

impl Expression {
    /// Wraps a raw AST, re-indexing parameters densely and checking that all
    /// variable indices are below `input_dim`.
    pub fn new(mut root: Node, input_dim: usize) -> Result<Self, ExprError> {
        root.fold_neg_constants();
        let mut max_var = None;
        let mut params = Vec::new();
        root.max_indices(&mut max_var, &mut params);
        if let Some(v) = max_var {
            if v >= input_dim {
                return Err(ExprError::VariableOutOfRange { index: v, dim: input_dim });
            }
        }
        params.sort_unstable();
        let already_dense = params.iter().enumerate().all(|(i, &p)| i == p);
        if !already_dense {
            root.remap_params(&params);
        }
        Ok(Expression { root, input_dim, param_count: params.len() })
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn param_count(&self) -> usize {
        self.param_count
    }

    /// AST node count; used as a tie-break complexity measure.
    pub fn complexity(&self) -> usize {
        self.root.count_nodes()
    }

    /// Canonical source text: stable operator spacing and decimal formatting.
    /// Parsing the canonical string reproduces the identical AST.
    pub fn canonical(&self) -> String {
        let mut out = String::new();
        write_node(&mut out, &self.root, Prec::Sum, self.input_dim);
        out
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical())
    }
}

/// Printing context, loosest to tightest.
#[derive(Clone, Copy, PartialEq, PartialOrd)]
enum Prec {
    Sum,
    Term,
    Factor,
    Unary,
}

fn node_prec(node: &Node) -> Prec {
    match node {
        Node::Binary(BinaryOp::Add | BinaryOp::Sub, ..) => Prec::Sum,
        Node::Binary(BinaryOp::Mul | BinaryOp::Div | BinaryOp::Mod, ..) => Prec::Term,
        Node::Binary(BinaryOp::Pow, ..) => Prec::Factor,
        Node::Unary(..) => Prec::Unary,
        Node::Constant(c) if *c < 0.0 => Prec::Unary,
        _ => Prec::Unary,
    }
}

/// Variable spelling: `x` for univariate, `x`/`y`/`z` up to three inputs,
/// `x0..x{d-1}` beyond that.
pub fn variable_name(index: usize, input_dim: usize) -> String {
    if input_dim <= 3 {
        match index {
            0 => "x".to_string(),
            1 => "y".to_string(),
            2 => "z".to_string(),
            _ => format!("x{index}"),
        }
    } else {
        format!("x{index}")
    }
}

pub(crate) fn format_number(v: f64) -> String {
    if v == std::f64::consts::PI {
        return "pi".to_string();
    }
    if v == std::f64::consts::E {
        return "e".to_string();
    }
    let a = v.abs();
    if a != 0.0 && (a >= 1e16 || a < 1e-5) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

fn write_node(out: &mut String, node: &Node, ctx: Prec, dim: usize) {
    let prec = node_prec(node);
    let parens = (prec < ctx) && !matches!(node, Node::Constant(_) | Node::Variable(_) | Node::Parameter(_) | Node::Call(..));
    if parens {
        out.push('(');
    }
    match node {
        Node::Constant(c) => out.push_str(&format_number(*c)),
        Node::Variable(i) => out.push_str(&variable_name(*i, dim)),
        Node::Parameter(p) => {
            out.push_str("params[");
            out.push_str(&p.to_string());
            out.push(']');
        }
        Node::Unary(UnaryOp::Neg, a) => {
            out.push('-');
            write_node(out, a, Prec::Unary, dim);
        }
        Node::Binary(op, a, b) => {
            let (sym, left_ctx, right_ctx) = match op {
                BinaryOp::Add => (" + ", Prec::Sum, Prec::Term),
                BinaryOp::Sub => (" - ", Prec::Sum, Prec::Term),
                BinaryOp::Mul => ("*", Prec::Term, Prec::Factor),
                BinaryOp::Div => ("/", Prec::Term, Prec::Factor),
                BinaryOp::Mod => ("%", Prec::Term, Prec::Factor),
                BinaryOp::Pow => ("**", Prec::Unary, Prec::Factor),
            };
            // a + -b round-trips, so Neg on the right of Add needs no parens;
            // Pow bases that are themselves Pow do (right associativity).
            if *op == BinaryOp::Pow {
                let base_parens = matches!(**a, Node::Binary(..));
                if base_parens {
                    out.push('(');
                    write_node(out, a, Prec::Sum, dim);
                    out.push(')');
                } else {
                    write_node(out, a, left_ctx, dim);
                }
            } else {
                write_node(out, a, left_ctx, dim);
            }
            out.push_str(sym);
            write_node(out, b, right_ctx, dim);
        }
        Node::Call(f, args) => {
            out.push_str(f.name());
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_node(out, a, Prec::Sum, dim);
            }
            out.push(')');
        }
    }
    if parens {
        out.push(')');
    }
}

/// Result of block evaluation: one value per sample plus a validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    pub values: Vec<f64>,
    pub finite_mask: Vec<bool>,
}

impl EvalResult {
    pub fn all_finite(&self) -> bool {
        self.finite_mask.iter().all(|&m| m)
    }
}

/// Evaluates `expr` elementwise over `columns` (one column per input
/// variable, equal lengths). Domain failures (log of non-positive, division
/// by zero, overflow) surface as non-finite entries with `finite_mask` false,
/// never as errors.
pub fn evaluate(expr: &Expression, columns: &[Vec<f64>], params: &[f64]) -> Result<EvalResult, ExprError> {
    if columns.len() != expr.input_dim {
        return Err(ExprError::DimensionMismatch(format!(
            "expression has {} inputs, got {} columns",
            expr.input_dim,
            columns.len()
        )));
    }
    if params.len() != expr.param_count {
        return Err(ExprError::DimensionMismatch(format!(
            "expression has {} parameters, got {}",
            expr.param_count,
            params.len()
        )));
    }
    let n = columns.first().map_or(0, Vec::len);
    if columns.iter().any(|c| c.len() != n) {
        return Err(ExprError::DimensionMismatch("ragged input columns".to_string()));
    }
    let values = eval_node(&expr.root, columns, params, n);
    let finite_mask = values.iter().map(|v| v.is_finite()).collect();
    Ok(EvalResult { values, finite_mask })
}

fn eval_node(node: &Node, cols: &[Vec<f64>], params: &[f64], n: usize) -> Vec<f64> {
    match node {
        Node::Constant(c) => vec![*c; n],
        Node::Variable(i) => cols[*i].clone(),
        Node::Parameter(p) => vec![params[*p]; n],
        Node::Unary(UnaryOp::Neg, a) => {
            let mut v = eval_node(a, cols, params, n);
            for x in &mut v {
                *x = -*x;
            }
            v
        }
        Node::Binary(op, a, b) => {
            let mut va = eval_node(a, cols, params, n);
            let vb = eval_node(b, cols, params, n);
            for (x, y) in va.iter_mut().zip(&vb) {
                *x = match op {
                    BinaryOp::Add => *x + y,
                    BinaryOp::Sub => *x - y,
                    BinaryOp::Mul => *x * y,
                    BinaryOp::Div => *x / y,
                    BinaryOp::Pow => x.powf(*y),
                    // Python-style modulo: result takes the sign of the divisor.
                    BinaryOp::Mod => {
                        let r = *x % y;
                        if r != 0.0 && (r < 0.0) != (*y < 0.0) {
                            r + y
                        } else {
                            r
                        }
                    }
                };
            }
            va
        }
        Node::Call(f, args) => {
            let evaluated: Vec<Vec<f64>> = args.iter().map(|a| eval_node(a, cols, params, n)).collect();
            let mut out = Vec::with_capacity(n);
            let mut scratch = vec![0.0; args.len()];
            for i in 0..n {
                for (j, col) in evaluated.iter().enumerate() {
                    scratch[j] = col[i];
                }
                out.push(f.eval(&scratch));
            }
            out
        }
    }
}

#[cfg(test)]
mod tests;
