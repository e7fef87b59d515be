//! Parameterized task templates and their composition into larger tasks.
//!
//! A template is a small program with an input marker `{x}` plus phrasings of
//! what it computes. Instantiating one fixes its slots; composing two splices
//! the inner fragment's program where the outer reads `{x}` and its noun
//! phrase where the outer's text mentions `{x}`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dsl::{ArgDecl, Type};

/// One possible filling of a slot: the words used in text and the code used in
/// the skeleton. Words may list synonyms; one is picked per instantiation.
#[derive(Debug, Clone)]
pub struct SlotValue {
    pub key: String,
    pub words: Vec<String>,
    pub code: String,
}

#[derive(Debug, Clone)]
pub struct Slot {
    pub name: &'static str,
    pub values: Vec<SlotValue>,
}

/// How a template reads its input and what it produces. `Var(0)` stands for
/// the element type of a generic array template.
#[derive(Debug, Clone)]
pub struct TaskTemplate {
    pub id: &'static str,
    pub slots: Vec<Slot>,
    /// Noun phrases describing the result.
    pub np: Vec<&'static str>,
    /// Imperative statements computing the result.
    pub stmt: Vec<&'static str>,
    /// Continuations applying the template to the result of a previous
    /// statement ("and return them in sorted order").
    pub cont: Vec<&'static str>,
    pub skeleton: &'static str,
    /// `None` for sources, which read task arguments only.
    pub input: Option<Type>,
    pub output: Type,
    /// Arguments the skeleton mentions directly.
    pub args: Vec<ArgDecl>,
    /// Meaningful as a task on its own, applied directly to a source.
    pub standalone: bool,
    /// Result does not depend on the order of the input elements.
    pub order_blind: bool,
    /// Relative frequency when drawing templates.
    pub weight: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TemplateError {
    #[error("template {template} has no slot `{slot}`")]
    UnknownSlot { template: String, slot: String },
    #[error("slot `{slot}` has no value `{value}`")]
    UnknownSlotValue { slot: String, value: String },
    #[error("slot `{0}` is not assigned")]
    MissingSlot(String),
    #[error("cannot feed {inner} into a fragment reading {outer}")]
    Incompatible { outer: String, inner: String },
    #[error("fragment has no continuation phrasing")]
    NoContinuation,
    #[error("fragment {0} is still open")]
    Open(String),
}

/// A partially or fully composed task. `input` is the type `{x}` must have;
/// closed fragments have no input and no `{x}` markers.
#[derive(Debug, Clone, PartialEq)]
pub struct Fragment {
    pub np: String,
    pub stmt: String,
    pub cont: Option<String>,
    pub code: String,
    pub input: Option<Type>,
    pub output: Type,
    pub args: Vec<ArgDecl>,
    /// Template ids, innermost first.
    pub parts: Vec<&'static str>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Joint {
    /// The inner noun phrase replaces `{x}` in the outer phrasing.
    Nest,
    /// The inner statement is followed by the outer continuation.
    Chain,
}

fn lit_values(range: std::ops::RangeInclusive<i64>) -> Vec<SlotValue> {
    range.map(|k| SlotValue { key: k.to_string(), words: vec![k.to_string()], code: k.to_string() }).collect()
}

fn values(entries: &[(&str, &[&str], &str)]) -> Vec<SlotValue> {
    entries
        .iter()
        .map(|(key, words, code)| SlotValue {
            key: key.to_string(),
            words: words.iter().map(|w| w.to_string()).collect(),
            code: code.to_string(),
        })
        .collect()
}

fn ints() -> Type {
    Type::array(Type::Int)
}

fn any() -> Type {
    Type::array(Type::Var(0))
}

/// The full template inventory.
pub fn templates() -> Vec<TaskTemplate> {
    let a = || ArgDecl::new("a", ints());
    let base = |id, np, stmt, cont, skeleton, input: Option<Type>, output| TaskTemplate {
        id,
        slots: vec![],
        np,
        stmt,
        cont,
        skeleton,
        input,
        output,
        args: vec![],
        standalone: false,
        order_blind: false,
        weight: 2,
    };
    let k_small = Slot { name: "k", values: lit_values(2..=9) };
    let k_signed = Slot { name: "k", values: lit_values(-5..=9) };

    vec![
        TaskTemplate {
            args: vec![a()],
            ..base("array", vec!["a", "values in a", "elements of a", "the elements in a"], vec![], vec![], "a", None, ints())
        },
        TaskTemplate {
            args: vec![ArgDecl::new("n", Type::Int)],
            slots: vec![Slot {
                name: "span",
                values: values(&[
                    ("below", &["the numbers from 0 below n", "the non-negative numbers less than n"], "(range 0 n)"),
                    ("upto", &["the numbers from 1 to n", "the integers from 1 up to n"], "(range 1 (+ n 1))"),
                ]),
            }],
            ..base("range", vec!["{span}"], vec![], vec![], "{span}", None, ints())
        },
        TaskTemplate {
            args: vec![ArgDecl::new("s", Type::array(Type::Str))],
            ..base("strings", vec!["s", "the strings in s", "the words in s"], vec![], vec![], "s", None, Type::array(Type::Str))
        },
        TaskTemplate {
            slots: vec![Slot {
                name: "pred",
                values: values(&[
                    ("prime", &["prime"], "is_prime"),
                    ("even", &["even"], "is_even"),
                    ("odd", &["odd"], "is_odd"),
                    ("positive", &["positive"], "is_positive"),
                    ("negative", &["negative"], "is_negative"),
                ]),
            }],
            standalone: true,
            ..base(
                "filter_pred",
                vec!["{pred} elements in {x}", "values in {x} that are {pred}", "elements of {x} which are {pred}"],
                vec!["find all {pred} elements in {x}", "select the {pred} values in {x}", "keep only the elements of {x} that are {pred}"],
                vec!["and keep only the {pred} ones", "then select those that are {pred}"],
                "(filter {x} {pred})",
                Some(ints()),
                ints(),
            )
        },
        TaskTemplate {
            slots: vec![k_small.clone()],
            standalone: true,
            ..base(
                "filter_divisible",
                vec!["elements of {x} that are divisible by {k}", "values in {x} divisible by {k}", "multiples of {k} among {x}"],
                vec!["find all elements in {x} that are divisible by {k}", "select the multiples of {k} among {x}"],
                vec!["then keep those divisible by {k}", "and keep only the multiples of {k}"],
                "(filter {x} (lambda1 (== (% arg1 {k}) 0)))",
                Some(ints()),
                ints(),
            )
        },
        TaskTemplate {
            slots: vec![
                Slot {
                    name: "rel",
                    values: values(&[
                        ("gt", &["greater than", "strictly greater than", "larger than"], "(partial0 {k} <)"),
                        ("lt", &["less than", "strictly less than", "smaller than"], "(partial0 {k} >)"),
                        ("ge", &["at least", "greater than or equal to"], "(partial0 {k} <=)"),
                        ("le", &["at most", "less than or equal to"], "(partial0 {k} >=)"),
                    ]),
                },
                k_signed.clone(),
            ],
            standalone: true,
            ..base(
                "filter_compare",
                vec!["elements of {x} that are {rel} {k}", "values in {x} {rel} {k}"],
                vec!["find all elements of {x} that are {rel} {k}", "select values in {x} which are {rel} {k}"],
                vec!["then keep only those {rel} {k}", "and keep the ones {rel} {k}"],
                "(filter {x} {rel})",
                Some(ints()),
                ints(),
            )
        },
        TaskTemplate {
            args: vec![ArgDecl::new("b", ints())],
            slots: vec![Slot {
                name: "mode",
                values: values(&[
                    ("present", &["present in b", "also contained in b"], "(partial0 b contains)"),
                    ("absent", &["not present in b", "missing from b"], "(lambda1 (== (contains b arg1) False))"),
                ]),
            }],
            standalone: true,
            ..base(
                "intersect",
                vec!["elements in {x} that are {mode}", "values in {x} which are {mode}"],
                vec!["find the elements in {x} that are {mode}", "select values in {x} which are {mode}"],
                vec!["and keep only those {mode}", "then select the ones {mode}"],
                "(filter {x} {mode})",
                Some(ints()),
                ints(),
            )
        },
        TaskTemplate {
            slots: vec![
                Slot {
                    name: "op",
                    values: values(&[
                        ("times", &["multiplied by {k}", "times {k}"], "(partial0 {k} *)"),
                        ("plus", &["increased by {k}", "plus {k}"], "(partial0 {k} +)"),
                        ("minus", &["decreased by {k}", "minus {k}"], "(lambda1 (- arg1 {k}))"),
                        ("mod", &["modulo {k}", "taken modulo {k}"], "(lambda1 (% arg1 {k}))"),
                        ("square", &["squared"], "(lambda1 (* arg1 arg1))"),
                        ("negate", &["negated", "with the sign flipped"], "(lambda1 (- 0 arg1))"),
                        ("halve", &["divided by 2", "halved"], "(lambda1 (/ arg1 2))"),
                    ]),
                },
                Slot { name: "k", values: lit_values(3..=9) },
            ],
            standalone: true,
            ..base(
                "map_arith",
                vec!["elements of {x} {op}", "values in {x} {op}", "each element of {x} {op}"],
                vec!["return elements of {x} {op}", "compute each element of {x} {op}"],
                vec!["then return them {op}", "and output those values {op}"],
                "(map {x} {op})",
                Some(ints()),
                ints(),
            )
        },
        base(
            "sort",
            vec!["{x} in sorted order", "sorted {x}", "{x} sorted in ascending order"],
            vec!["sort {x}", "return {x} in sorted order"],
            vec!["and return them in sorted order", "then sort them"],
            "(sort {x})",
            Some(any()),
            any(),
        ),
        base(
            "reverse",
            vec!["{x} in reverse order", "{x} reversed"],
            vec!["reverse {x}", "return {x} in reverse order"],
            vec!["and return them in reverse order", "then reverse the result"],
            "(reverse {x})",
            Some(any()),
            any(),
        ),
        base(
            "tail",
            vec!["{x} except the first element", "all but the first element of {x}"],
            vec!["drop the first element of {x}", "return {x} without its first element"],
            vec!["then drop the first of them", "and remove the first one"],
            "(tail {x})",
            Some(any()),
            any(),
        ),
        TaskTemplate {
            standalone: true,
            order_blind: true,
            ..base(
                "sum",
                vec!["the sum of {x}", "the total of {x}"],
                vec!["find the sum of {x}", "compute the sum of {x}", "add up {x}"],
                vec!["and return their sum", "then add them up"],
                "(reduce {x} 0 +)",
                Some(ints()),
                Type::Int,
            )
        },
        TaskTemplate {
            standalone: true,
            order_blind: true,
            ..base(
                "product",
                vec!["the product of {x}"],
                vec!["find the product of {x}", "multiply together {x}"],
                vec!["and return their product", "then multiply them together"],
                "(reduce {x} 1 *)",
                Some(ints()),
                Type::Int,
            )
        },
        TaskTemplate {
            slots: vec![Slot {
                name: "ext",
                values: values(&[
                    ("min", &["smallest", "minimum"], "(reduce {x} inf min)"),
                    ("max", &["largest", "maximum"], "(reduce {x} -inf max)"),
                ]),
            }],
            standalone: true,
            order_blind: true,
            ..base(
                "extremum",
                vec!["the {ext} element of {x}", "the {ext} value among {x}"],
                vec!["find the {ext} element in {x}", "compute the {ext} value among {x}"],
                vec!["and return the {ext} of them", "then find the {ext} one"],
                "{ext}",
                Some(ints()),
                Type::Int,
            )
        },
        TaskTemplate {
            standalone: true,
            order_blind: true,
            weight: 5,
            ..base(
                "second_min",
                vec!["the smallest element in {x}, which is strictly greater than the minimum element in {x}"],
                vec![
                    "find the smallest element in {x}, which is strictly greater than the minimum element in {x}",
                    "compute the smallest element among {x}, which is strictly greater than the minimum element among {x}",
                ],
                vec![],
                "(reduce (filter {x} (partial0 (reduce {x} inf min) <)) inf min)",
                Some(ints()),
                Type::Int,
            )
        },
        TaskTemplate {
            standalone: true,
            order_blind: true,
            weight: 5,
            ..base(
                "second_max",
                vec!["the largest element among {x}, which is strictly smaller than the maximum element among {x}"],
                vec![
                    "compute largest element among {x}, which is strictly smaller than the maximum element among {x}",
                    "find the largest element in {x}, which is strictly less than the maximum element in {x}",
                ],
                vec![],
                "(reduce (filter {x} (partial0 (reduce {x} -inf max) >)) -inf max)",
                Some(ints()),
                Type::Int,
            )
        },
        TaskTemplate {
            order_blind: true,
            ..base(
                "count",
                vec!["the number of elements in {x}", "the length of {x}"],
                vec!["count the elements in {x}", "find how many elements are in {x}"],
                vec!["and count them", "then return how many there are"],
                "(len {x})",
                Some(any()),
                Type::Int,
            )
        },
        base(
            "head",
            vec!["the first element of {x}"],
            vec!["return the first element of {x}", "find the first of {x}"],
            vec!["and return the first of them", "then take the first one"],
            "(head {x})",
            Some(any()),
            Type::Var(0),
        ),
        base(
            "last",
            vec!["the last element of {x}"],
            vec!["return the last element of {x}", "find the last of {x}"],
            vec!["and return the last of them", "then take the last one"],
            "(head (reverse {x}))",
            Some(any()),
            Type::Var(0),
        ),
        TaskTemplate {
            slots: vec![k_signed],
            standalone: true,
            order_blind: true,
            ..base(
                "contains",
                vec!["whether {x} contains {k}"],
                vec!["check whether {k} occurs in {x}", "determine if {x} contains {k}"],
                vec!["and check whether {k} is among them", "then tell whether {k} occurs among them"],
                "(contains {x} {k})",
                Some(ints()),
                Type::Bool,
            )
        },
    ]
}

pub fn template(id: &str) -> Option<TaskTemplate> {
    templates().into_iter().find(|t| t.id == id)
}

fn fill(pattern: &str, subs: &[(String, String)]) -> String {
    let mut out = pattern.to_string();
    // slot words may themselves mention later slots ({op} -> "times {k}")
    for _ in 0..2 {
        for (name, value) in subs {
            out = out.replace(&format!("{{{name}}}"), value);
        }
    }
    out
}

/// Fixes every slot of `template`. `slot_values` maps slot names to value keys;
/// `paraphrase` selects among each phrasing list (modulo its length) and `seed`
/// picks synonyms inside slot words.
pub fn instantiate_template(
    template: &TaskTemplate,
    slot_values: &[(&str, &str)],
    paraphrase: usize,
    seed: u64,
) -> Result<Fragment, TemplateError> {
    for (name, _) in slot_values {
        if !template.slots.iter().any(|s| s.name == *name) {
            return Err(TemplateError::UnknownSlot { template: template.id.into(), slot: name.to_string() });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut words = Vec::new();
    let mut code = Vec::new();
    for slot in &template.slots {
        let key = slot_values
            .iter()
            .find(|(n, _)| *n == slot.name)
            .map(|(_, v)| *v)
            .ok_or_else(|| TemplateError::MissingSlot(slot.name.into()))?;
        let value = slot.values.iter().find(|v| v.key == key).ok_or_else(|| TemplateError::UnknownSlotValue {
            slot: slot.name.into(),
            value: key.into(),
        })?;
        words.push((slot.name.to_string(), value.words.choose(&mut rng).cloned().unwrap_or_default()));
        code.push((slot.name.to_string(), value.code.clone()));
    }
    let pick = |list: &[&str]| list.get(paraphrase % list.len().max(1)).map(|p| fill(p, &words));
    Ok(Fragment {
        np: pick(&template.np).unwrap_or_default(),
        stmt: pick(&template.stmt).unwrap_or_default(),
        cont: pick(&template.cont),
        code: fill(template.skeleton, &code),
        input: template.input.clone(),
        output: template.output.clone(),
        args: template.args.clone(),
        parts: vec![template.id],
    })
}

/// Picks slot values and a paraphrase at random.
pub fn instantiate_random<R: Rng + ?Sized>(template: &TaskTemplate, rng: &mut R) -> Fragment {
    let keys: Vec<(&str, &str)> =
        template.slots.iter().map(|s| (s.name, s.values.choose(rng).map(|v| v.key.as_str()).unwrap_or(""))).collect();
    let paraphrase = rng.gen_range(0..64);
    instantiate_template(template, &keys, paraphrase, rng.gen()).expect("slots drawn from the template")
}

/// Binds `Var(0)` in `pattern` so that it equals `ty`.
fn bind(pattern: &Type, ty: &Type, elem: &mut Option<Type>) -> bool {
    match (pattern, ty) {
        (Type::Var(0), t) => match elem {
            Some(e) => e == t,
            None => {
                *elem = Some(t.clone());
                true
            }
        },
        (Type::Array(p), Type::Array(t)) => bind(p, t, elem),
        (p, t) => p == t,
    }
}

fn subst_elem(ty: &Type, elem: &Type) -> Type {
    match ty {
        Type::Var(0) => elem.clone(),
        Type::Array(e) => Type::array(subst_elem(e, elem)),
        t => t.clone(),
    }
}

/// Feeds `inner` into `outer`'s input.
pub fn compose(outer: &Fragment, inner: &Fragment, joint: Joint) -> Result<Fragment, TemplateError> {
    let incompatible = || TemplateError::Incompatible {
        outer: outer.input.as_ref().map_or("nothing".into(), |t| t.to_string()),
        inner: inner.output.to_string(),
    };
    let input = outer.input.as_ref().ok_or_else(incompatible)?;
    let mut elem = None;
    if !bind(input, &inner.output, &mut elem) {
        return Err(incompatible());
    }
    let output = match &elem {
        Some(e) => subst_elem(&outer.output, e),
        None => outer.output.clone(),
    };
    let put = |s: &str| s.replace("{x}", &inner.np);
    let stmt = match joint {
        Joint::Nest => put(&outer.stmt),
        Joint::Chain => {
            let cont = outer.cont.as_ref().ok_or(TemplateError::NoContinuation)?;
            format!("{} {}", inner.stmt, cont)
        }
    };
    let mut args = inner.args.clone();
    for a in &outer.args {
        if !args.contains(a) {
            args.push(a.clone());
        }
    }
    let mut parts = inner.parts.clone();
    parts.extend(&outer.parts);
    Ok(Fragment {
        np: put(&outer.np),
        stmt,
        cont: outer.cont.clone(),
        code: outer.code.replace("{x}", &inner.code),
        input: inner.input.clone(),
        output,
        args,
        parts,
    })
}
