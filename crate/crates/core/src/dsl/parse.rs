//! Concrete syntax.
//!
//! ```text
//! program := sexpr
//! sexpr   := atom | "(" name sexpr* ")"
//! atom    := integer | "inf" | "-inf" | string | "True" | "False" | identifier
//! ```
//!
//! A parenthesised form applies a library function (`(reduce a 0 +)`) or
//! builds a lambda (`(lambda1 (* arg1 arg1))`). A bare function name is a
//! function value. Strings are double-quoted with `\"` and `\\` escapes.

use std::sync::Arc;

use super::stdlib::stdlib;
use super::symbol::{Constant, Symbol, INF, LAMBDA_PARAMS, NEG_INF};
use super::tree::{ArgDecl, Tree, TypeError};
use super::types::Type;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown identifier `{name}` at {pos}")]
    UnknownIdentifier { name: String, pos: usize },
    #[error("`{name}` at {pos} is not a function")]
    NotAFunction { name: String, pos: usize },
    #[error("arity mismatch at {pos}: `{name}` takes {expected} argument(s), got {found}")]
    Arity { name: String, expected: usize, found: usize, pos: usize },
    #[error("type error at {pos}: {source}")]
    Type { pos: usize, source: TypeError },
    #[error("invalid argument list: {0}")]
    BadArgs(String),
}

impl ParseError {
    /// Byte offset of the error in the source, when it has one.
    pub fn position(&self) -> Option<usize> {
        match self {
            ParseError::Syntax { pos, .. }
            | ParseError::UnknownIdentifier { pos, .. }
            | ParseError::NotAFunction { pos, .. }
            | ParseError::Arity { pos, .. }
            | ParseError::Type { pos, .. } => Some(*pos),
            ParseError::BadArgs(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token {
    Open,
    Close,
    Atom(String),
    Str(String),
}

fn lex(text: &str) -> Result<Vec<(Token, usize)>, ParseError> {
    let mut out = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some(&(pos, c)) = chars.peek() {
        match c {
            c if c.is_whitespace() => {
                chars.next();
            }
            '(' => {
                chars.next();
                out.push((Token::Open, pos));
            }
            ')' => {
                chars.next();
                out.push((Token::Close, pos));
            }
            '"' => {
                chars.next();
                let mut s = String::new();
                loop {
                    match chars.next() {
                        Some((_, '"')) => break,
                        Some((_, '\\')) => match chars.next() {
                            Some((_, e @ ('"' | '\\'))) => s.push(e),
                            Some((p, e)) => {
                                return Err(ParseError::Syntax { pos: p, msg: format!("unknown escape `\\{e}`") })
                            }
                            None => break,
                        },
                        Some((_, ch)) => s.push(ch),
                        None => return Err(ParseError::Syntax { pos, msg: "unterminated string".into() }),
                    }
                }
                out.push((Token::Str(s), pos));
            }
            _ => {
                let mut s = String::new();
                while let Some(&(_, ch)) = chars.peek() {
                    if ch.is_whitespace() || ch == '(' || ch == ')' || ch == '"' {
                        break;
                    }
                    s.push(ch);
                    chars.next();
                }
                out.push((Token::Atom(s), pos));
            }
        }
    }
    Ok(out)
}

/// Untyped S-expression.
#[derive(Debug, Clone)]
enum Sexpr {
    Atom(String, usize),
    Str(String, usize),
    List(Vec<Sexpr>, usize),
}

fn read(tokens: &[(Token, usize)], at: &mut usize, len: usize) -> Result<Sexpr, ParseError> {
    let Some((tok, pos)) = tokens.get(*at) else {
        return Err(ParseError::Syntax { pos: len, msg: "unexpected end of input".into() });
    };
    *at += 1;
    match tok {
        Token::Atom(s) => Ok(Sexpr::Atom(s.clone(), *pos)),
        Token::Str(s) => Ok(Sexpr::Str(s.clone(), *pos)),
        Token::Close => Err(ParseError::Syntax { pos: *pos, msg: "unexpected `)`".into() }),
        Token::Open => {
            let mut items = Vec::new();
            loop {
                match tokens.get(*at) {
                    Some((Token::Close, _)) => {
                        *at += 1;
                        break;
                    }
                    Some(_) => items.push(read(tokens, at, len)?),
                    None => return Err(ParseError::Syntax { pos: *pos, msg: "unclosed `(`".into() }),
                }
            }
            if items.is_empty() {
                return Err(ParseError::Syntax { pos: *pos, msg: "empty application `()`".into() });
            }
            Ok(Sexpr::List(items, *pos))
        }
    }
}

/// One node of the S-expression in pre-order, already mapped to a symbol.
struct Item {
    symbol: Symbol,
    pos: usize,
}

fn atom_symbol(name: &str, pos: usize, args: &[ArgDecl], in_lambda: bool) -> Result<Symbol, ParseError> {
    match name {
        "True" => return Ok(Symbol::Const(Constant::Bool(true))),
        "False" => return Ok(Symbol::Const(Constant::Bool(false))),
        "inf" => return Ok(Symbol::int(INF)),
        "-inf" => return Ok(Symbol::int(NEG_INF)),
        _ => {}
    }
    let digits = name.strip_prefix('-').unwrap_or(name);
    if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
        return name
            .parse::<i64>()
            .map(Symbol::int)
            .map_err(|_| ParseError::Syntax { pos, msg: format!("integer literal `{name}` out of range") });
    }
    if in_lambda && LAMBDA_PARAMS.contains(&name) {
        return Ok(Symbol::arg(name));
    }
    if let Some(a) = args.iter().find(|a| &*a.name == name) {
        return Ok(Symbol::Arg(Arc::clone(&a.name)));
    }
    if let Some(b) = stdlib().lookup(name) {
        return Ok(Symbol::Ref(b));
    }
    Err(ParseError::UnknownIdentifier { name: name.to_string(), pos })
}

fn flatten(e: &Sexpr, args: &[ArgDecl], in_lambda: bool, out: &mut Vec<Item>) -> Result<(), ParseError> {
    match e {
        Sexpr::Atom(name, pos) => {
            out.push(Item { symbol: atom_symbol(name, *pos, args, in_lambda)?, pos: *pos });
            Ok(())
        }
        Sexpr::Str(s, pos) => {
            out.push(Item { symbol: Symbol::Const(Constant::Str(Arc::from(s.as_str()))), pos: *pos });
            Ok(())
        }
        Sexpr::List(items, pos) => {
            let (head, rest) = items.split_first().expect("non-empty list");
            let name = match head {
                Sexpr::Atom(name, _) => name,
                Sexpr::Str(s, p) => return Err(ParseError::NotAFunction { name: format!("\"{s}\""), pos: *p }),
                Sexpr::List(_, p) => {
                    return Err(ParseError::Syntax { pos: *p, msg: "application head must be a name".into() })
                }
            };
            let (symbol, expected, lambda) = match name.as_str() {
                "lambda1" => (Symbol::Lambda(1), 1, true),
                "lambda2" => (Symbol::Lambda(2), 1, true),
                _ => match stdlib().lookup(name) {
                    Some(b) => (Symbol::Call(b), stdlib().signature(b).arity(), false),
                    None => {
                        // distinguish `(a 1)` from a misspelt function
                        return match atom_symbol(name, *pos, args, in_lambda) {
                            Ok(_) => Err(ParseError::NotAFunction { name: name.clone(), pos: *pos }),
                            Err(e) => Err(e),
                        };
                    }
                },
            };
            if rest.len() != expected {
                return Err(ParseError::Arity { name: name.clone(), expected, found: rest.len(), pos: *pos });
            }
            out.push(Item { symbol, pos: *pos });
            for child in rest {
                flatten(child, args, in_lambda || lambda, out)?;
            }
            Ok(())
        }
    }
}

fn check_args(args: &[ArgDecl]) -> Result<(), ParseError> {
    for (i, a) in args.iter().enumerate() {
        let name = &*a.name;
        let reserved = LAMBDA_PARAMS.contains(&name)
            || stdlib().lookup(name).is_some()
            || matches!(name, "True" | "False" | "inf" | "-inf" | "lambda1" | "lambda2");
        let well_formed = name.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
            && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
        if reserved || !well_formed {
            return Err(ParseError::BadArgs(format!("`{name}` cannot be used as an argument name")));
        }
        if args[..i].iter().any(|b| b.name == a.name) {
            return Err(ParseError::BadArgs(format!("duplicate argument `{name}`")));
        }
        if !a.ty.is_ground() || !a.ty.is_data() {
            return Err(ParseError::BadArgs(format!("argument `{name}` must have a data type, got {}", a.ty)));
        }
    }
    Ok(())
}

/// Parses and type-checks a complete program over the given arguments.
pub fn parse_program(text: &str, args: &[ArgDecl]) -> Result<Tree, ParseError> {
    parse_typed(text, args, None)
}

/// Like [`parse_program`] but also requires the program to have type `ret`.
pub fn parse_typed(text: &str, args: &[ArgDecl], ret: Option<Type>) -> Result<Tree, ParseError> {
    check_args(args)?;
    let tokens = lex(text)?;
    let mut at = 0;
    let expr = read(&tokens, &mut at, text.len())?;
    if let Some((_, pos)) = tokens.get(at) {
        return Err(ParseError::Syntax { pos: *pos, msg: "trailing input after program".into() });
    }
    let mut items = Vec::new();
    flatten(&expr, args, false, &mut items)?;

    // Replay the pre-order symbols as first-hole substitutions; arities were
    // checked above, so holes and items line up one to one.
    let mut tree: Tree = Tree::empty(args.to_vec(), ret);
    for item in items {
        let site = tree.first_empty_node().expect("arity-checked items match holes");
        tree = tree
            .substitute(&site.path, item.symbol, ())
            .map_err(|source| ParseError::Type { pos: item.pos, source })?;
    }
    debug_assert!(tree.is_complete());
    Ok(tree)
}

/// Canonical rendering: single spaces, holes as `?:<type>`.
pub fn render_program<A>(tree: &Tree<A>) -> String {
    tree.to_string()
}

/// Parses `name:type` pairs separated by commas, e.g. `a:int[],b:int[]`.
pub fn parse_arg_list(spec: &str) -> Result<Vec<ArgDecl>, ParseError> {
    let spec = spec.trim();
    if spec.is_empty() {
        return Ok(Vec::new());
    }
    let args = spec
        .split(',')
        .map(|part| {
            let (name, ty) =
                part.split_once(':').ok_or_else(|| ParseError::BadArgs(format!("expected name:type, got `{part}`")))?;
            let ty: Type = ty.parse().map_err(|e: super::types::TypeSyntaxError| ParseError::BadArgs(e.to_string()))?;
            Ok(ArgDecl::new(name.trim(), ty))
        })
        .collect::<Result<Vec<_>, _>>()?;
    check_args(&args)?;
    Ok(args)
}
