//! Fuel-bounded, strict evaluation of complete programs.
//!
//! A program tree is first lowered to [`Expr`], which resolves argument names
//! to positions, then walked directly. Every node visit costs one step of
//! fuel, and `reduce`, `filter`, `map`, `sort` and `range` additionally cost
//! one step per element they process or produce.

mod value;

use std::sync::Arc;

use crate::dsl::{Builtin, Node, Symbol, Tree, Type, LAMBDA_PARAMS};

pub use value::{infer_json_type, Closure, Value, ValueError};

pub const DEFAULT_FUEL: u64 = 100_000;

/// Lowered program node.
#[derive(Debug)]
pub enum Expr {
    Const(Value),
    Input(usize),
    /// Parameter of the innermost enclosing lambda.
    Param(usize),
    Call(Builtin, Vec<Expr>),
    Func(Builtin),
    Lambda(u8, Arc<Expr>),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("fuel exhausted")]
    FuelExhausted,
    #[error("{0} of empty array")]
    EmptyArray(Builtin),
    #[error("{0} by zero")]
    DivisionByZero(Builtin),
    #[error("integer overflow in {0}")]
    Overflow(Builtin),
    #[error("program has unfilled holes")]
    Incomplete,
    #[error("expected {expected} inputs, got {found}")]
    InputCount { expected: usize, found: usize },
    #[error("input {index} is not a value of type {expected}")]
    InputType { index: usize, expected: Type },
    #[error("ill-typed operation in {0}")]
    IllTyped(Builtin),
}

impl EvalError {
    /// Errors raised by the program itself rather than by a bad invocation.
    pub fn is_runtime(&self) -> bool {
        !matches!(self, EvalError::Incomplete | EvalError::InputCount { .. } | EvalError::InputType { .. })
    }
}

/// A set of inputs with the output the program must produce for them.
#[derive(Debug, Clone, PartialEq)]
pub struct TestCase {
    pub inputs: Vec<Value>,
    pub output: Value,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FailReason {
    WrongOutput(Value),
    Error(EvalError),
}

#[derive(Debug, Clone, PartialEq)]
pub enum TestOutcome {
    Pass,
    Fail { index: usize, reason: FailReason },
}

impl TestOutcome {
    pub fn passed(&self) -> bool {
        matches!(self, TestOutcome::Pass)
    }
}

/// A lowered program, ready to run on many inputs.
#[derive(Debug)]
pub struct Program {
    expr: Expr,
    arg_types: Vec<Type>,
}

impl Program {
    pub fn lower<A>(tree: &Tree<A>) -> Result<Program, EvalError> {
        let names: Vec<&str> = tree.args().iter().map(|a| &*a.name).collect();
        Ok(Program {
            expr: lower_node(tree.root(), &names)?,
            arg_types: tree.args().iter().map(|a| a.ty.clone()).collect(),
        })
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    /// Evaluates the program, returning the result and the fuel consumed.
    pub fn run(&self, inputs: &[Value], fuel: u64) -> (Result<Value, EvalError>, u64) {
        if inputs.len() != self.arg_types.len() {
            let e = EvalError::InputCount { expected: self.arg_types.len(), found: inputs.len() };
            return (Err(e), 0);
        }
        for (index, (v, ty)) in inputs.iter().zip(&self.arg_types).enumerate() {
            if !v.has_type(ty) {
                return (Err(EvalError::InputType { index, expected: ty.clone() }), 0);
            }
        }
        let mut m = Machine { inputs, fuel };
        let r = m.eval(&self.expr, &[]);
        (r, fuel - m.fuel)
    }

    pub fn eval(&self, inputs: &[Value], fuel: u64) -> Result<Value, EvalError> {
        self.run(inputs, fuel).0
    }

    pub fn run_tests(&self, tests: &[TestCase], fuel: u64) -> TestOutcome {
        for (index, t) in tests.iter().enumerate() {
            match self.eval(&t.inputs, fuel) {
                Ok(v) if v == t.output => {}
                Ok(v) => return TestOutcome::Fail { index, reason: FailReason::WrongOutput(v) },
                Err(e) => return TestOutcome::Fail { index, reason: FailReason::Error(e) },
            }
        }
        TestOutcome::Pass
    }
}

pub fn evaluate<A>(program: &Tree<A>, inputs: &[Value], fuel: u64) -> Result<Value, EvalError> {
    Program::lower(program)?.eval(inputs, fuel)
}

pub fn run_tests<A>(program: &Tree<A>, tests: &[TestCase], fuel: u64) -> TestOutcome {
    match Program::lower(program) {
        Ok(p) => p.run_tests(tests, fuel),
        Err(e) => TestOutcome::Fail { index: 0, reason: FailReason::Error(e) },
    }
}

fn lower_node<A>(node: &Node<A>, names: &[&str]) -> Result<Expr, EvalError> {
    let Node::Filled(f) = node else { return Err(EvalError::Incomplete) };
    Ok(match &f.symbol {
        Symbol::Const(c) => Expr::Const(Value::from_constant(c)),
        Symbol::Arg(name) => match LAMBDA_PARAMS.iter().position(|p| **p == **name) {
            Some(i) => Expr::Param(i),
            None => Expr::Input(names.iter().position(|n| *n == &**name).ok_or(EvalError::Incomplete)?),
        },
        Symbol::Call(b) => {
            Expr::Call(*b, f.children.iter().map(|c| lower_node(c, names)).collect::<Result<_, _>>()?)
        }
        Symbol::Ref(b) => Expr::Func(*b),
        Symbol::Lambda(k) => Expr::Lambda(*k, Arc::new(lower_node(&f.children[0], names)?)),
    })
}

struct Machine<'a> {
    inputs: &'a [Value],
    fuel: u64,
}

type Eval = Result<Value, EvalError>;

impl Machine<'_> {
    fn tick(&mut self, n: u64) -> Result<(), EvalError> {
        if self.fuel < n {
            self.fuel = 0;
            return Err(EvalError::FuelExhausted);
        }
        self.fuel -= n;
        Ok(())
    }

    fn eval(&mut self, e: &Expr, params: &[Value]) -> Eval {
        self.tick(1)?;
        match e {
            Expr::Const(v) => Ok(v.clone()),
            Expr::Input(i) => Ok(self.inputs[*i].clone()),
            Expr::Param(i) => Ok(params[*i].clone()),
            Expr::Func(b) => Ok(Value::Closure(Arc::new(Closure::Builtin(*b)))),
            Expr::Lambda(k, body) => Ok(Value::Closure(Arc::new(Closure::Lambda { arity: *k, body: Arc::clone(body) }))),
            Expr::Call(b, args) => {
                let vals = args.iter().map(|a| self.eval(a, params)).collect::<Result<Vec<_>, _>>()?;
                self.call(*b, vals)
            }
        }
    }

    fn apply(&mut self, f: &Value, args: &[Value]) -> Eval {
        let Value::Closure(c) = f else { return Err(EvalError::IllTyped(Builtin::Partial0)) };
        match &**c {
            Closure::Builtin(b) => self.call(*b, args.to_vec()),
            Closure::Partial { bound, func } => {
                let mut full = Vec::with_capacity(args.len() + 1);
                full.push(bound.clone());
                full.extend_from_slice(args);
                self.apply(func, &full)
            }
            Closure::Lambda { arity, body } => {
                if args.len() != *arity as usize {
                    return Err(EvalError::IllTyped(Builtin::Partial0));
                }
                self.eval(body, args)
            }
        }
    }

    fn call(&mut self, b: Builtin, mut args: Vec<Value>) -> Eval {
        use Builtin::*;
        let ill = || EvalError::IllTyped(b);
        match b {
            Reduce => {
                let f = args.pop().ok_or_else(ill)?;
                let mut acc = args.pop().ok_or_else(ill)?;
                let items = array(&args[0], b)?;
                self.tick(items.len() as u64)?;
                for v in items.iter() {
                    acc = self.apply(&f, &[acc, v.clone()])?;
                }
                Ok(acc)
            }
            Filter => {
                let items = array(&args[0], b)?;
                self.tick(items.len() as u64)?;
                let mut out = Vec::new();
                for v in items.iter() {
                    match self.apply(&args[1], std::slice::from_ref(v))? {
                        Value::Bool(true) => out.push(v.clone()),
                        Value::Bool(false) => {}
                        _ => return Err(ill()),
                    }
                }
                Ok(Value::array(out))
            }
            Map => {
                let items = array(&args[0], b)?;
                self.tick(items.len() as u64)?;
                let out = items
                    .iter()
                    .map(|v| self.apply(&args[1], std::slice::from_ref(v)))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(Value::array(out))
            }
            Sort => {
                let items = array(&args[0], b)?;
                self.tick(items.len() as u64)?;
                let mut out = items.to_vec();
                if out.iter().all(|v| matches!(v, Value::Int(_))) {
                    out.sort_by_key(|v| if let Value::Int(n) = v { *n } else { 0 });
                } else if out.iter().all(|v| matches!(v, Value::Str(_))) {
                    out.sort_by(|x, y| match (x, y) {
                        (Value::Str(x), Value::Str(y)) => x.cmp(y),
                        _ => std::cmp::Ordering::Equal,
                    });
                } else {
                    return Err(ill());
                }
                Ok(Value::array(out))
            }
            Range => {
                let (lo, hi) = (int(&args[0], b)?, int(&args[1], b)?);
                let len = (hi as i128 - lo as i128).max(0);
                if len > self.fuel as i128 {
                    self.fuel = 0;
                    return Err(EvalError::FuelExhausted);
                }
                self.tick(len as u64)?;
                Ok(Value::array((lo..hi).map(Value::Int).collect()))
            }
            _ => first_order(b, &args),
        }
    }
}

fn array(v: &Value, b: Builtin) -> Result<&Arc<Vec<Value>>, EvalError> {
    match v {
        Value::Array(items) => Ok(items),
        _ => Err(EvalError::IllTyped(b)),
    }
}

fn int(v: &Value, b: Builtin) -> Result<i64, EvalError> {
    match v {
        Value::Int(n) => Ok(*n),
        _ => Err(EvalError::IllTyped(b)),
    }
}

/// Functions that never call back into the program.
fn first_order(b: Builtin, args: &[Value]) -> Eval {
    use Builtin::*;
    let ill = || EvalError::IllTyped(b);
    let ints = || -> Result<(i64, i64), EvalError> {
        match args {
            [Value::Int(x), Value::Int(y)] => Ok((*x, *y)),
            _ => Err(ill()),
        }
    };
    let checked = |r: Option<i64>| r.map(Value::Int).ok_or(EvalError::Overflow(b));
    match b {
        Head => array(&args[0], b)?.first().cloned().ok_or(EvalError::EmptyArray(b)),
        Tail => match array(&args[0], b)?.as_slice() {
            [] => Err(EvalError::EmptyArray(b)),
            [_, rest @ ..] => Ok(Value::array(rest.to_vec())),
        },
        Len => Ok(Value::Int(array(&args[0], b)?.len() as i64)),
        Reverse => Ok(Value::array(array(&args[0], b)?.iter().rev().cloned().collect())),
        Contains => Ok(Value::Bool(array(&args[0], b)?.contains(&args[1]))),
        Add => ints().and_then(|(x, y)| checked(x.checked_add(y))),
        Sub => ints().and_then(|(x, y)| checked(x.checked_sub(y))),
        Mul => ints().and_then(|(x, y)| checked(x.checked_mul(y))),
        Div | Mod => {
            let (x, y) = ints()?;
            if y == 0 {
                return Err(EvalError::DivisionByZero(b));
            }
            checked(if b == Div { x.checked_div(y) } else { x.checked_rem(y) })
        }
        Lt => ints().map(|(x, y)| Value::Bool(x < y)),
        Gt => ints().map(|(x, y)| Value::Bool(x > y)),
        Le => ints().map(|(x, y)| Value::Bool(x <= y)),
        Ge => ints().map(|(x, y)| Value::Bool(x >= y)),
        Eq => match args {
            [x, y] if !x.is_closure() => Ok(Value::Bool(x == y)),
            _ => Err(ill()),
        },
        Min => ints().map(|(x, y)| Value::Int(x.min(y))),
        Max => ints().map(|(x, y)| Value::Int(x.max(y))),
        IsOdd | IsEven | IsPrime | IsPositive | IsNegative => {
            let n = int(args.first().ok_or_else(ill)?, b)?;
            Ok(Value::Bool(match b {
                IsOdd => n % 2 != 0,
                IsEven => n % 2 == 0,
                IsPrime => is_prime(n),
                IsPositive => n > 0,
                _ => n < 0,
            }))
        }
        Partial0 => match args {
            [bound, func @ Value::Closure(_)] => {
                Ok(Value::Closure(Arc::new(Closure::Partial { bound: bound.clone(), func: func.clone() })))
            }
            _ => Err(ill()),
        },
        Reduce | Filter | Map | Sort | Range => Err(ill()),
    }
}

/// Deterministic Miller-Rabin, exact for all 64-bit integers.
pub fn is_prime(n: i64) -> bool {
    if n < 2 {
        return false;
    }
    let n = n as u64;
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for p in BASES {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let mul = |a: u64, b: u64| ((a as u128 * b as u128) % n as u128) as u64;
    let pow = |mut a: u64, mut e: u64| {
        let mut r = 1u64;
        while e > 0 {
            if e & 1 == 1 {
                r = mul(r, a);
            }
            a = mul(a, a);
            e >>= 1;
        }
        r
    };
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for a in BASES {
        let mut x = pow(a, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul(x, x);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}
