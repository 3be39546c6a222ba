//! Candidate-source parsing: code-fence/assignment/lambda stripping plus a
//! recursive-descent parser for the lambda-style infix surface syntax.

use super::{BinaryOp, Expression, Func, Node, UnaryOp};

/// Provisional index offset for parameters named in a lambda header
/// (`lambda x, a, b: ...`); dense re-indexing folds them in after parse.
const NAMED_PARAM_OFFSET: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at offset {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("function `{name}` expects {expected} argument(s), got {got}")]
    Arity { name: String, expected: usize, got: usize },
    #[error("variable `{token}` out of range for input dimension {dim}")]
    VariableOutOfRange { token: String, dim: usize },
}

fn syntax(pos: usize, msg: impl Into<String>) -> ParseError {
    ParseError::Syntax { pos, msg: msg.into() }
}

/// Parses raw LLM output into an [`Expression`]. Stripping rules are applied
/// in order: code fences, assignment prefix, lambda header. Parameters may be
/// referenced as `params[k]` or as extra named lambda arguments; indices are
/// re-mapped densely.
pub fn parse_candidate(source: &str, input_dim: usize) -> Result<Expression, ParseError> {
    let stripped = strip_source(source)?;
    let ctx = Context {
        input_dim,
        var_alias: stripped.var_alias,
        named_params: stripped.named_params,
    };
    parse_with_context(&stripped.body, &ctx)
}

/// Parses a bare expression body (no stripping), e.g. canonical sources or
/// simplify-proposal lines.
pub fn parse_body(body: &str, input_dim: usize) -> Result<Expression, ParseError> {
    let ctx = Context { input_dim, var_alias: None, named_params: Vec::new() };
    parse_with_context(body, &ctx)
}

struct Context {
    input_dim: usize,
    var_alias: Option<String>,
    named_params: Vec<String>,
}

fn parse_with_context(body: &str, ctx: &Context) -> Result<Expression, ParseError> {
    let tokens = lex(body)?;
    let mut parser = Parser { tokens, pos: 0, ctx };
    let root = parser.parse_expr()?;
    if !matches!(parser.peek().0, Token::Eof) {
        let (_, p) = parser.peek();
        return Err(syntax(*p, "unexpected trailing input"));
    }
    Expression::new(root, ctx.input_dim).map_err(|_| ParseError::VariableOutOfRange {
        token: "<internal>".to_string(),
        dim: ctx.input_dim,
    })
}

struct Stripped {
    body: String,
    var_alias: Option<String>,
    named_params: Vec<String>,
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

fn strip_source(raw: &str) -> Result<Stripped, ParseError> {
    let mut text = raw.trim();

    // 1. Code fences: take the first fenced block's content.
    if let Some(open) = text.find("```") {
        let after = &text[open + 3..];
        // Skip an optional language tag line.
        let content_start = after.find('\n').map(|i| i + 1).unwrap_or(0);
        let inner = &after[content_start..];
        text = match inner.find("```") {
            Some(close) => inner[..close].trim(),
            None => inner.trim(),
        };
    }

    // 2. Lambda header: cut at the first word-boundary `lambda ... :`.
    if let Some(idx) = find_word(text, "lambda") {
        let after_kw = &text[idx + "lambda".len()..];
        let colon = after_kw
            .find(':')
            .ok_or_else(|| syntax(idx, "lambda header missing `:`"))?;
        let header = &after_kw[..colon];
        let body = after_kw[colon + 1..].trim().to_string();
        let mut var_alias = None;
        let mut named_params = Vec::new();
        for (i, arg) in header.split(',').enumerate() {
            let arg = arg.trim().trim_start_matches('*').trim();
            if arg.is_empty() {
                continue;
            }
            if !arg.chars().all(is_ident_char) {
                return Err(syntax(idx, format!("bad lambda argument `{arg}`")));
            }
            if i == 0 {
                var_alias = Some(arg.to_string());
            } else if arg != "params" {
                named_params.push(arg.to_string());
            }
        }
        return Ok(Stripped { body, var_alias, named_params });
    }

    // 3. Assignment prefix: `name = <body>` (but not `==`).
    let body = strip_assignment(text).unwrap_or(text).trim().to_string();
    Ok(Stripped { body, var_alias: None, named_params: Vec::new() })
}

fn find_word(text: &str, word: &str) -> Option<usize> {
    let mut start = 0;
    while let Some(rel) = text[start..].find(word) {
        let idx = start + rel;
        let before_ok = idx == 0
            || !text[..idx].chars().next_back().map_or(false, is_ident_char);
        let after = idx + word.len();
        let after_ok = after >= text.len()
            || !text[after..].chars().next().map_or(false, is_ident_char);
        if before_ok && after_ok {
            return Some(idx);
        }
        start = idx + word.len();
    }
    None
}

fn strip_assignment(text: &str) -> Option<&str> {
    let mut chars = text.char_indices().peekable();
    // identifier
    match chars.peek() {
        Some((_, c)) if c.is_ascii_alphabetic() || *c == '_' => {}
        _ => return None,
    }
    while let Some((_, c)) = chars.peek() {
        if is_ident_char(*c) {
            chars.next();
        } else {
            break;
        }
    }
    // optional whitespace, then a single `=`
    while let Some((_, c)) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
        } else {
            break;
        }
    }
    match chars.next() {
        Some((i, '=')) => {
            let rest = &text[i + 1..];
            if rest.starts_with('=') {
                None
            } else {
                Some(rest)
            }
        }
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    StarStar,
    Slash,
    Percent,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Eof,
}

fn lex(input: &str) -> Result<Vec<(Token, usize)>, ParseError> {
    let bytes = input.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            '+' => {
                i += 1;
                Token::Plus
            }
            '-' => {
                i += 1;
                Token::Minus
            }
            '*' => {
                if bytes.get(i + 1) == Some(&b'*') {
                    i += 2;
                    Token::StarStar
                } else {
                    i += 1;
                    Token::Star
                }
            }
            '/' => {
                i += 1;
                Token::Slash
            }
            '%' => {
                i += 1;
                Token::Percent
            }
            '(' => {
                i += 1;
                Token::LParen
            }
            ')' => {
                i += 1;
                Token::RParen
            }
            '[' => {
                i += 1;
                Token::LBracket
            }
            ']' => {
                i += 1;
                Token::RBracket
            }
            ',' => {
                i += 1;
                Token::Comma
            }
            '0'..='9' | '.' => {
                let (num, next) = lex_number(input, i)?;
                i = next;
                Token::Num(num)
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut j = i;
                while j < bytes.len() && is_ident_char(bytes[j] as char) {
                    j += 1;
                }
                // dotted paths: np.sin, scipy.special.jn
                while j < bytes.len()
                    && bytes[j] == b'.'
                    && j + 1 < bytes.len()
                    && (bytes[j + 1] as char).is_ascii_alphabetic()
                {
                    j += 1;
                    while j < bytes.len() && is_ident_char(bytes[j] as char) {
                        j += 1;
                    }
                }
                let ident = input[i..j].to_string();
                i = j;
                Token::Ident(ident)
            }
            other => return Err(syntax(i, format!("unexpected character `{other}`"))),
        };
        out.push((tok, start));
    }
    out.push((Token::Eof, bytes.len()));
    Ok(out)
}

fn lex_number(input: &str, start: usize) -> Result<(f64, usize), ParseError> {
    let bytes = input.as_bytes();
    let mut i = start;
    let mut seen_digit = false;
    while i < bytes.len() && bytes[i].is_ascii_digit() {
        seen_digit = true;
        i += 1;
    }
    if i < bytes.len() && bytes[i] == b'.' {
        i += 1;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            seen_digit = true;
            i += 1;
        }
    }
    if !seen_digit {
        return Err(syntax(start, "malformed number"));
    }
    // exponent, consumed only when it really is one
    if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
        let mut j = i + 1;
        if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
            j += 1;
        }
        if j < bytes.len() && bytes[j].is_ascii_digit() {
            while j < bytes.len() && bytes[j].is_ascii_digit() {
                j += 1;
            }
            i = j;
        }
    }
    let text = &input[start..i];
    text.parse::<f64>()
        .map(|v| (v, i))
        .map_err(|_| syntax(start, format!("malformed number `{text}`")))
}

struct Parser<'a> {
    tokens: Vec<(Token, usize)>,
    pos: usize,
    ctx: &'a Context,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &(Token, usize) {
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    fn advance(&mut self) -> (Token, usize) {
        let t = self.tokens[self.pos.min(self.tokens.len() - 1)].clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, tok: Token, what: &str) -> Result<usize, ParseError> {
        let (t, p) = self.advance();
        if t == tok {
            Ok(p)
        } else {
            Err(syntax(p, format!("expected {what}")))
        }
    }

    fn parse_expr(&mut self) -> Result<Node, ParseError> {
        let mut left = self.parse_term()?;
        loop {
            let op = match self.peek().0 {
                Token::Plus => BinaryOp::Add,
                Token::Minus => BinaryOp::Sub,
                _ => break,
            };
            self.advance();
            let right = self.parse_term()?;
            left = Node::Binary(op, Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn parse_term(&mut self) -> Result<Node, ParseError> {
        let mut left = self.parse_factor()?;
        loop {
            let op = match self.peek().0 {
                Token::Star => BinaryOp::Mul,
                Token::Slash => BinaryOp::Div,
                Token::Percent => BinaryOp::Mod,
                _ => break,
            };
            self.advance();
            let right = self.parse_factor()?;
            left = Node::Binary(op, Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn parse_factor(&mut self) -> Result<Node, ParseError> {
        let base = self.parse_unary()?;
        if matches!(self.peek().0, Token::StarStar) {
            self.advance();
            let exp = self.parse_factor()?;
            return Ok(Node::Binary(BinaryOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn parse_unary(&mut self) -> Result<Node, ParseError> {
        if matches!(self.peek().0, Token::Minus) {
            self.advance();
            let inner = self.parse_unary()?;
            // fold negated literals so canonical text round-trips
            if let Node::Constant(c) = inner {
                return Ok(Node::Constant(-c));
            }
            return Ok(Node::Unary(UnaryOp::Neg, Box::new(inner)));
        }
        self.parse_atom()
    }

    fn parse_atom(&mut self) -> Result<Node, ParseError> {
        let (tok, pos) = self.advance();
        match tok {
            Token::Num(v) => Ok(Node::Constant(v)),
            Token::LParen => {
                let inner = self.parse_expr()?;
                self.expect(Token::RParen, "`)`")?;
                Ok(inner)
            }
            Token::Ident(name) => self.parse_ident(name, pos),
            Token::Eof => Err(syntax(pos, "unexpected end of input")),
            other => Err(syntax(pos, format!("unexpected token `{other:?}`"))),
        }
    }

    fn parse_ident(&mut self, name: String, pos: usize) -> Result<Node, ParseError> {
        // function call?
        if matches!(self.peek().0, Token::LParen) {
            self.advance();
            let mut args = vec![self.parse_expr()?];
            while matches!(self.peek().0, Token::Comma) {
                self.advance();
                args.push(self.parse_expr()?);
            }
            self.expect(Token::RParen, "`)`")?;
            let bare = strip_prefix(&name);
            let func = Func::from_token(bare).ok_or_else(|| ParseError::UnknownFunction(name.clone()))?;
            if args.len() != func.arity() {
                return Err(ParseError::Arity {
                    name,
                    expected: func.arity(),
                    got: args.len(),
                });
            }
            return Ok(Node::Call(func, args));
        }

        // params[k]
        if name == "params" {
            if !matches!(self.peek().0, Token::LBracket) {
                return Err(syntax(pos, "`params` requires an index, e.g. params[0]"));
            }
            self.advance();
            let (t, p) = self.advance();
            let idx = match t {
                Token::Num(v) if v.fract() == 0.0 && v >= 0.0 => v as usize,
                _ => return Err(syntax(p, "parameter index must be a nonnegative integer")),
            };
            self.expect(Token::RBracket, "`]`")?;
            return Ok(Node::Parameter(idx));
        }

        // lambda-declared names take precedence over builtin constants
        if let Some(k) = self.ctx.named_params.iter().position(|n| n == &name) {
            return Ok(Node::Parameter(NAMED_PARAM_OFFSET + k));
        }
        if self.ctx.var_alias.as_deref() == Some(name.as_str()) {
            return self.variable(0, &name);
        }

        // constants
        match strip_prefix(&name) {
            "pi" => return Ok(Node::Constant(std::f64::consts::PI)),
            "e" if name == "e" || name == "np.e" || name == "numpy.e" => {
                return Ok(Node::Constant(std::f64::consts::E))
            }
            _ => {}
        }

        // variables: x/y/z, x<k>
        match name.as_str() {
            "x" => return self.variable(0, &name),
            "y" => return self.variable(1, &name),
            "z" => return self.variable(2, &name),
            _ => {}
        }
        if let Some(rest) = name.strip_prefix('x') {
            if !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()) {
                let idx: usize = rest.parse().map_err(|_| syntax(pos, "bad variable index"))?;
                return self.variable(idx, &name);
            }
        }

        Err(syntax(pos, format!("unknown identifier `{name}`")))
    }

    fn variable(&self, index: usize, token: &str) -> Result<Node, ParseError> {
        if index >= self.ctx.input_dim {
            return Err(ParseError::VariableOutOfRange {
                token: token.to_string(),
                dim: self.ctx.input_dim,
            });
        }
        Ok(Node::Variable(index))
    }
}

fn strip_prefix(name: &str) -> &str {
    for p in ["np.", "numpy.", "scipy.special.", "math."] {
        if let Some(rest) = name.strip_prefix(p) {
            return rest;
        }
    }
    name
}
