//! A naive tree-walking reference evaluator, written separately from the
//! interpreter, and a differential driver over random programs.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use treebeam::dsl::{sample::random_program, ArgDecl, Builtin, Constant, Node, Symbol, Type};
use treebeam::interp::{EvalError, Program, Value};

#[derive(Clone, Debug, PartialEq)]
enum V {
    I(i64),
    S(String),
    B(bool),
    A(Vec<V>),
    F(Fun),
}

#[derive(Clone, Debug)]
enum Fun {
    Prim(Builtin),
    Part(Box<V>, Box<V>),
    Lam(Node),
}

impl PartialEq for Fun {
    fn eq(&self, _: &Self) -> bool {
        false
    }
}

#[derive(Debug, PartialEq)]
enum Fault {
    Fuel,
    Empty,
    Zero,
    Overflow,
    /// The reference declines (primality of a number too big to trial-divide).
    Skip,
}

struct Ref<'a> {
    names: Vec<String>,
    inputs: &'a [V],
    fuel: u64,
}

impl Ref<'_> {
    fn spend(&mut self, n: u64) -> Result<(), Fault> {
        if n > self.fuel {
            return Err(Fault::Fuel);
        }
        self.fuel -= n;
        Ok(())
    }

    fn eval(&mut self, node: &Node, env: &[V]) -> Result<V, Fault> {
        self.spend(1)?;
        let f = node.as_filled().expect("complete program");
        match &f.symbol {
            Symbol::Const(Constant::Int(n)) => Ok(V::I(*n)),
            Symbol::Const(Constant::Str(s)) => Ok(V::S(s.to_string())),
            Symbol::Const(Constant::Bool(b)) => Ok(V::B(*b)),
            Symbol::Arg(name) if &**name == "arg1" => Ok(env[0].clone()),
            Symbol::Arg(name) if &**name == "arg2" => Ok(env[1].clone()),
            Symbol::Arg(name) => {
                let i = self.names.iter().position(|n| n == &**name).unwrap();
                Ok(self.inputs[i].clone())
            }
            Symbol::Ref(b) => Ok(V::F(Fun::Prim(*b))),
            Symbol::Lambda(_) => Ok(V::F(Fun::Lam(f.children[0].clone()))),
            Symbol::Call(b) => {
                let mut args = Vec::new();
                for c in &f.children {
                    args.push(self.eval(c, env)?);
                }
                self.prim(*b, args)
            }
        }
    }

    fn call(&mut self, f: &V, args: Vec<V>) -> Result<V, Fault> {
        match f {
            V::F(Fun::Prim(b)) => self.prim(*b, args),
            V::F(Fun::Part(x, g)) => {
                let mut all = vec![(**x).clone()];
                all.extend(args);
                self.call(g, all)
            }
            V::F(Fun::Lam(body)) => {
                let body = body.clone();
                self.eval(&body, &args)
            }
            _ => panic!("not a function"),
        }
    }

    fn prim(&mut self, b: Builtin, args: Vec<V>) -> Result<V, Fault> {
        let int = |v: &V| match v {
            V::I(n) => *n,
            _ => panic!("not an int"),
        };
        let arr = |v: &V| match v {
            V::A(xs) => xs.clone(),
            _ => panic!("not an array"),
        };
        let arith = |r: Option<i64>| r.map(V::I).ok_or(Fault::Overflow);
        Ok(match b {
            Builtin::Reduce => {
                let xs = arr(&args[0]);
                self.spend(xs.len() as u64)?;
                let mut acc = args[1].clone();
                for x in xs {
                    acc = self.call(&args[2], vec![acc, x])?;
                }
                acc
            }
            Builtin::Filter => {
                let xs = arr(&args[0]);
                self.spend(xs.len() as u64)?;
                let mut out = vec![];
                for x in xs {
                    if self.call(&args[1], vec![x.clone()])? == V::B(true) {
                        out.push(x);
                    }
                }
                V::A(out)
            }
            Builtin::Map => {
                let xs = arr(&args[0]);
                self.spend(xs.len() as u64)?;
                let mut out = vec![];
                for x in xs {
                    out.push(self.call(&args[1], vec![x])?);
                }
                V::A(out)
            }
            Builtin::Sort => {
                let mut xs = arr(&args[0]);
                self.spend(xs.len() as u64)?;
                // insertion sort keeps equal elements in order
                for i in 1..xs.len() {
                    let mut j = i;
                    while j > 0 && less(&xs[j], &xs[j - 1]) {
                        xs.swap(j, j - 1);
                        j -= 1;
                    }
                }
                V::A(xs)
            }
            Builtin::Range => {
                let (lo, hi) = (int(&args[0]), int(&args[1]));
                if hi > lo {
                    let n = (hi as i128 - lo as i128) as u128;
                    if n > self.fuel as u128 {
                        return Err(Fault::Fuel);
                    }
                    self.spend(n as u64)?;
                }
                let mut out = vec![];
                let mut k = lo;
                while k < hi {
                    out.push(V::I(k));
                    k += 1;
                }
                V::A(out)
            }
            Builtin::Head => arr(&args[0]).first().cloned().ok_or(Fault::Empty)?,
            Builtin::Tail => {
                let xs = arr(&args[0]);
                if xs.is_empty() {
                    return Err(Fault::Empty);
                }
                V::A(xs[1..].to_vec())
            }
            Builtin::Len => V::I(arr(&args[0]).len() as i64),
            Builtin::Reverse => {
                let mut xs = arr(&args[0]);
                xs.reverse();
                V::A(xs)
            }
            Builtin::Contains => V::B(arr(&args[0]).iter().any(|x| *x == args[1])),
            Builtin::Add => arith(int(&args[0]).checked_add(int(&args[1])))?,
            Builtin::Sub => arith(int(&args[0]).checked_sub(int(&args[1])))?,
            Builtin::Mul => arith(int(&args[0]).checked_mul(int(&args[1])))?,
            Builtin::Div | Builtin::Mod => {
                let (x, y) = (int(&args[0]) as i128, int(&args[1]) as i128);
                if y == 0 {
                    return Err(Fault::Zero);
                }
                let r = if b == Builtin::Div { x / y } else { x % y };
                arith(i64::try_from(r).ok())?
            }
            Builtin::Lt => V::B(int(&args[0]) < int(&args[1])),
            Builtin::Gt => V::B(int(&args[0]) > int(&args[1])),
            Builtin::Le => V::B(int(&args[0]) <= int(&args[1])),
            Builtin::Ge => V::B(int(&args[0]) >= int(&args[1])),
            Builtin::Eq => V::B(args[0] == args[1]),
            Builtin::Min => V::I(int(&args[0]).min(int(&args[1]))),
            Builtin::Max => V::I(int(&args[0]).max(int(&args[1]))),
            Builtin::IsOdd => V::B(int(&args[0]).rem_euclid(2) == 1),
            Builtin::IsEven => V::B(int(&args[0]).rem_euclid(2) == 0),
            Builtin::IsPositive => V::B(int(&args[0]) > 0),
            Builtin::IsNegative => V::B(int(&args[0]) < 0),
            Builtin::IsPrime => {
                let n = int(&args[0]);
                if n > 10_000_000_000 {
                    return Err(Fault::Skip);
                }
                let mut d = 2;
                let mut prime = n >= 2;
                while d * d <= n {
                    if n % d == 0 {
                        prime = false;
                        break;
                    }
                    d += 1;
                }
                V::B(prime)
            }
            Builtin::Partial0 => V::F(Fun::Part(Box::new(args[0].clone()), Box::new(args[1].clone()))),
        })
    }
}

fn less(a: &V, b: &V) -> bool {
    match (a, b) {
        (V::I(x), V::I(y)) => x < y,
        (V::S(x), V::S(y)) => x < y,
        _ => panic!("unsortable"),
    }
}

fn to_ref(v: &Value) -> V {
    match v {
        Value::Int(n) => V::I(*n),
        Value::Str(s) => V::S(s.to_string()),
        Value::Bool(b) => V::B(*b),
        Value::Array(xs) => V::A(xs.iter().map(to_ref).collect()),
        Value::Closure(_) => panic!("closure result"),
    }
}

fn fault_of(e: &EvalError) -> Fault {
    match e {
        EvalError::FuelExhausted => Fault::Fuel,
        EvalError::EmptyArray(_) => Fault::Empty,
        EvalError::DivisionByZero(_) => Fault::Zero,
        EvalError::Overflow(_) => Fault::Overflow,
        other => panic!("unexpected error {other}"),
    }
}

pub fn random_input(rng: &mut ChaCha8Rng, ty: &Type) -> Value {
    match ty {
        Type::Int => Value::Int(rng.gen_range(-6..=12)),
        Type::Array(_) => {
            let n = rng.gen_range(0..=8);
            Value::array((0..n).map(|_| Value::Int(rng.gen_range(-10..=10))).collect())
        }
        _ => unreachable!(),
    }
}


#[derive(Debug, Default)]
pub struct Tally {
    pub checked: usize,
    pub skipped: usize,
    pub errors: usize,
    pub fuel_outs: usize,
    pub mismatches: Vec<String>,
}

/// Runs `n` random (program, input) pairs through both evaluators.
pub fn differential(n: usize, seed: u64) -> Tally {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let signatures = [
        vec![ArgDecl::new("a", Type::array(Type::Int))],
        vec![ArgDecl::new("a", Type::array(Type::Int)), ArgDecl::new("b", Type::array(Type::Int))],
        vec![ArgDecl::new("n", Type::Int), ArgDecl::new("a", Type::array(Type::Int))],
    ];
    let rets = [Type::Int, Type::array(Type::Int), Type::Bool];
    let mut t = Tally::default();
    while t.checked < n {
        let args = &signatures[rng.gen_range(0..signatures.len())];
        let ret = rets[rng.gen_range(0..rets.len())].clone();
        let Some(tree) = random_program(&mut rng, args, Some(ret), 6, 60) else { continue };
        let inputs: Vec<Value> = args.iter().map(|a| random_input(&mut rng, &a.ty)).collect();
        let fuel = [40, 300, 100_000][rng.gen_range(0..3)];

        let got = Program::lower(&tree).unwrap().eval(&inputs, fuel);
        let ref_inputs: Vec<V> = inputs.iter().map(to_ref).collect();
        let mut r = Ref { names: args.iter().map(|a| a.name.to_string()).collect(), inputs: &ref_inputs, fuel };
        let want = r.eval(tree.root(), &[]);
        let agree = match (&got, &want) {
            (_, Err(Fault::Skip)) => {
                t.skipped += 1;
                true
            }
            (Ok(v), Ok(w)) => &to_ref(v) == w,
            (Err(e), Err(f)) => {
                t.errors += 1;
                t.fuel_outs += (*f == Fault::Fuel) as usize;
                &fault_of(e) == f
            }
            _ => false,
        };
        if !agree && t.mismatches.len() < 10 {
            t.mismatches.push(format!("{tree} on {inputs:?}: interpreter {got:?}, reference {want:?}"));
        }
        t.checked += 1;
    }
    t
}
