// SPDX-License-Identifier: Apache-2.0

//! S-expression reader and model extraction from `(get-model)` output.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

impl Sexp {
    pub fn atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom(a) => Some(a),
            Sexp::List(_) => None,
        }
    }

    pub fn list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List(v) => Some(v),
            Sexp::Atom(_) => None,
        }
    }

    fn head(&self) -> Option<&str> {
        self.list().and_then(|v| v.first()).and_then(Sexp::atom)
    }
}

/// Read every top-level s-expression in `text`.
pub fn parse_all(text: &str) -> Result<Vec<Sexp>, String> {
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    let mut stack: Vec<Vec<Sexp>> = vec![Vec::new()];
    while i < chars.len() {
        let c = chars[i];
        match c {
            ';' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '(' => {
                stack.push(Vec::new());
                i += 1;
            }
            ')' => {
                let done = stack.pop().ok_or("unbalanced `)`")?;
                stack.last_mut().ok_or("unbalanced `)`")?.push(Sexp::List(done));
                i += 1;
            }
            '"' => {
                let mut s = String::from('"');
                i += 1;
                while i < chars.len() {
                    if chars[i] == '"' {
                        if chars.get(i + 1) == Some(&'"') {
                            s.push('"');
                            i += 2;
                            continue;
                        }
                        break;
                    }
                    s.push(chars[i]);
                    i += 1;
                }
                s.push('"');
                i += 1;
                stack.last_mut().unwrap().push(Sexp::Atom(s));
            }
            '|' => {
                let start = i + 1;
                i = start;
                while i < chars.len() && chars[i] != '|' {
                    i += 1;
                }
                stack.last_mut().unwrap().push(Sexp::Atom(chars[start..i.min(chars.len())].iter().collect()));
                i += 1;
            }
            c if c.is_whitespace() => i += 1,
            _ => {
                let start = i;
                while i < chars.len() && !chars[i].is_whitespace() && !"();\"|".contains(chars[i]) {
                    i += 1;
                }
                stack.last_mut().unwrap().push(Sexp::Atom(chars[start..i].iter().collect()));
            }
        }
    }
    if stack.len() != 1 {
        return Err("unbalanced `(`".into());
    }
    Ok(stack.pop().unwrap())
}

/// Finite array value: a default plus explicit entries.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ArrayValue {
    pub default: i64,
    pub entries: BTreeMap<i64, i64>,
}

impl ArrayValue {
    pub fn get(&self, i: i64) -> i64 {
        self.entries.get(&i).copied().unwrap_or(self.default)
    }

    pub fn set(&mut self, i: i64, v: i64) {
        if v == self.default {
            self.entries.remove(&i);
        } else {
            self.entries.insert(i, v);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum Value {
    Int(i64),
    Bool(bool),
    Array(ArrayValue),
}

impl Value {
    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_array(&self) -> Option<&ArrayValue> {
        match self {
            Value::Array(a) => Some(a),
            _ => None,
        }
    }
}

pub type Model = BTreeMap<String, Value>;

struct Def {
    params: Vec<String>,
    body: Sexp,
}

/// Extract constant definitions from a `(get-model)` answer. Definitions the
/// reader does not understand are skipped.
pub fn parse_model(items: &[Sexp]) -> Model {
    let mut defs = BTreeMap::new();
    let mut order = Vec::new();
    let visit = |s: &Sexp, defs: &mut BTreeMap<String, Def>, order: &mut Vec<String>| {
        let Some(v) = s.list() else { return };
        if v.len() == 5 && v[0].atom() == Some("define-fun") {
            let (Some(name), Some(params)) = (v[1].atom(), v[2].list()) else { return };
            let params =
                params.iter().filter_map(|p| p.list().and_then(|p| p.first()).and_then(Sexp::atom)).map(String::from);
            defs.insert(name.to_string(), Def { params: params.collect(), body: v[4].clone() });
            order.push(name.to_string());
        }
    };
    for s in items {
        if s.head() == Some("define-fun") {
            visit(s, &mut defs, &mut order);
        } else if let Some(v) = s.list() {
            // `(model ...)` wrapper or a bare list of definitions
            for d in v {
                visit(d, &mut defs, &mut order);
            }
        }
    }
    let mut model = Model::new();
    for name in order {
        let def = &defs[&name];
        if !def.params.is_empty() {
            continue;
        }
        if let Some(v) = eval(&def.body, &BTreeMap::new(), &defs, 0) {
            model.insert(name, v);
        }
    }
    model
}

fn int_atom(s: &str) -> Option<i64> {
    s.parse().ok()
}

fn eval(s: &Sexp, env: &BTreeMap<String, i64>, defs: &BTreeMap<String, Def>, depth: usize) -> Option<Value> {
    if depth > 64 {
        return None;
    }
    match s {
        Sexp::Atom(a) => {
            if let Some(v) = int_atom(a) {
                return Some(Value::Int(v));
            }
            match a.as_str() {
                "true" => return Some(Value::Bool(true)),
                "false" => return Some(Value::Bool(false)),
                _ => {}
            }
            if let Some(v) = env.get(a) {
                return Some(Value::Int(*v));
            }
            let d = defs.get(a)?;
            if d.params.is_empty() {
                eval(&d.body, &BTreeMap::new(), defs, depth + 1)
            } else {
                None
            }
        }
        Sexp::List(v) => {
            let head = v.first()?;
            // ((as const (Array Int Int)) 0)
            if let Some(h) = head.list() {
                if h.first().and_then(Sexp::atom) == Some("as") && h.get(1).and_then(Sexp::atom) == Some("const") {
                    let d = eval(v.get(1)?, env, defs, depth + 1)?.as_int()?;
                    return Some(Value::Array(ArrayValue { default: d, entries: BTreeMap::new() }));
                }
                return None;
            }
            let op = head.atom()?;
            let args = &v[1..];
            let int = |i: usize| eval(args.get(i)?, env, defs, depth + 1)?.as_int();
            let boolean = |i: usize| eval(args.get(i)?, env, defs, depth + 1)?.as_bool();
            match op {
                "-" if args.len() == 1 => Some(Value::Int(int(0)?.checked_neg()?)),
                "-" => {
                    let mut acc = int(0)?;
                    for i in 1..args.len() {
                        acc = acc.checked_sub(int(i)?)?;
                    }
                    Some(Value::Int(acc))
                }
                "+" => (0..args.len()).try_fold(0i64, |acc, i| acc.checked_add(int(i)?)).map(Value::Int),
                "*" => (0..args.len()).try_fold(1i64, |acc, i| acc.checked_mul(int(i)?)).map(Value::Int),
                "div" => {
                    let d = int(1)?;
                    (d != 0).then(|| Value::Int(int(0).unwrap_or(0).div_euclid(d)))
                }
                "mod" => {
                    let d = int(1)?;
                    (d != 0).then(|| Value::Int(int(0).unwrap_or(0).rem_euclid(d)))
                }
                "=" => {
                    let a = eval(args.first()?, env, defs, depth + 1)?;
                    let b = eval(args.get(1)?, env, defs, depth + 1)?;
                    Some(Value::Bool(a == b))
                }
                "<" => Some(Value::Bool(int(0)? < int(1)?)),
                "<=" => Some(Value::Bool(int(0)? <= int(1)?)),
                ">" => Some(Value::Bool(int(0)? > int(1)?)),
                ">=" => Some(Value::Bool(int(0)? >= int(1)?)),
                "not" => Some(Value::Bool(!boolean(0)?)),
                "and" => (0..args.len()).try_fold(true, |acc, i| Some(acc & boolean(i)?)).map(Value::Bool),
                "or" => (0..args.len()).try_fold(false, |acc, i| Some(acc | boolean(i)?)).map(Value::Bool),
                "ite" => {
                    if boolean(0)? {
                        eval(args.get(1)?, env, defs, depth + 1)
                    } else {
                        eval(args.get(2)?, env, defs, depth + 1)
                    }
                }
                "store" => {
                    let Value::Array(mut a) = eval(args.first()?, env, defs, depth + 1)? else { return None };
                    a.set(int(1)?, int(2)?);
                    Some(Value::Array(a))
                }
                "select" => {
                    let Value::Array(a) = eval(args.first()?, env, defs, depth + 1)? else { return None };
                    Some(Value::Int(a.get(int(1)?)))
                }
                "_" if args.first().and_then(Sexp::atom) == Some("as-array") => {
                    let f = defs.get(args.get(1)?.atom()?)?;
                    tabulate(f.params.first()?, &f.body, env, defs, depth)
                }
                "lambda" => {
                    let p = args.first()?.list()?.first()?.list()?.first()?.atom()?;
                    tabulate(p, args.get(1)?, env, defs, depth)
                }
                _ => {
                    // application of a defined unary function
                    let f = defs.get(op)?;
                    if f.params.len() != args.len() {
                        return None;
                    }
                    let mut inner = env.clone();
                    for (p, i) in f.params.iter().zip(0..) {
                        inner.insert(p.clone(), int(i)?);
                    }
                    eval(&f.body, &inner, defs, depth + 1)
                }
            }
        }
    }
}

/// Turn a unary integer function body into a finite array by evaluating it at
/// every integer constant it mentions and at one point outside them.
fn tabulate(
    param: &str,
    body: &Sexp,
    env: &BTreeMap<String, i64>,
    defs: &BTreeMap<String, Def>,
    depth: usize,
) -> Option<Value> {
    let mut consts = BTreeSet::new();
    collect_ints(body, &mut consts);
    let outside = consts.iter().next_back().map_or(0, |m| m.saturating_add(1_000_003));
    let at = |x: i64| {
        let mut e = env.clone();
        e.insert(param.to_string(), x);
        eval(body, &e, defs, depth + 1)?.as_int()
    };
    let default = at(outside)?;
    let mut a = ArrayValue { default, entries: BTreeMap::new() };
    for c in consts {
        for x in [c - 1, c, c + 1] {
            a.set(x, at(x)?);
        }
    }
    Some(Value::Array(a))
}

fn collect_ints(s: &Sexp, out: &mut BTreeSet<i64>) {
    match s {
        Sexp::Atom(a) => {
            if let Some(v) = int_atom(a) {
                out.insert(v);
            }
        }
        Sexp::List(v) => {
            if v.len() == 2 && v[0].atom() == Some("-") {
                if let Some(n) = v[1].atom().and_then(int_atom) {
                    out.insert(-n);
                    return;
                }
            }
            v.iter().for_each(|x| collect_ints(x, out))
        }
    }
}
