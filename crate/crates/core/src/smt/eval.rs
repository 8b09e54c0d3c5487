// SPDX-License-Identifier: Apache-2.0

//! Evaluation of quantifier-free terms under a model, used to re-check
//! solver answers.

use std::collections::BTreeMap;

use super::sexp::{ArrayValue, Model, Value};
use super::{Op, Term};

/// Value of `t`; constants missing from the model default to 0 or the
/// all-zero array. Quantifiers and division by zero give `None`.
pub fn eval(t: &Term, m: &Model) -> Option<Value> {
    match t {
        Term::Int(c) => Some(Value::Int(*c)),
        Term::Bool(b) => Some(Value::Bool(*b)),
        Term::Var(v) => Some(m.get(v).cloned().unwrap_or(Value::Int(0))),
        Term::Quant(..) => None,
        Term::App(op, args) => {
            let int = |i: usize| -> Option<i64> {
                match eval(&args[i], m)? {
                    Value::Int(v) => Some(v),
                    _ => None,
                }
            };
            let boolean = |i: usize| eval(&args[i], m)?.as_bool();
            let array = |i: usize| -> Option<ArrayValue> {
                match eval(&args[i], m)? {
                    Value::Array(a) => Some(a),
                    Value::Int(0) => Some(ArrayValue { default: 0, entries: BTreeMap::new() }),
                    _ => None,
                }
            };
            let v = match op {
                Op::Add => Value::Int((0..args.len()).try_fold(0i64, |a, i| a.checked_add(int(i)?))?),
                Op::Mul => Value::Int((0..args.len()).try_fold(1i64, |a, i| a.checked_mul(int(i)?))?),
                Op::Sub => {
                    let mut acc = int(0)?;
                    for i in 1..args.len() {
                        acc = acc.checked_sub(int(i)?)?;
                    }
                    Value::Int(acc)
                }
                Op::Neg => Value::Int(int(0)?.checked_neg()?),
                Op::Div => {
                    let d = int(1)?;
                    Value::Int(int(0)?.checked_div_euclid(d)?)
                }
                Op::Mod => {
                    let d = int(1)?;
                    Value::Int(int(0)?.checked_rem_euclid(d)?)
                }
                Op::Select => Value::Int(array(0)?.get(int(1)?)),
                Op::Store => {
                    let mut a = array(0)?;
                    a.set(int(1)?, int(2)?);
                    Value::Array(a)
                }
                Op::Ite => {
                    if boolean(0)? {
                        eval(&args[1], m)?
                    } else {
                        eval(&args[2], m)?
                    }
                }
                Op::Not => Value::Bool(!boolean(0)?),
                Op::And => Value::Bool((0..args.len()).try_fold(true, |a, i| Some(a && boolean(i)?))?),
                Op::Or => Value::Bool((0..args.len()).try_fold(false, |a, i| Some(a || boolean(i)?))?),
                Op::Implies => Value::Bool(!boolean(0)? || boolean(1)?),
                Op::Eq => {
                    let (a, b) = (eval(&args[0], m)?, eval(&args[1], m)?);
                    Value::Bool(a == b)
                }
                Op::Lt => Value::Bool(int(0)? < int(1)?),
                Op::Le => Value::Bool(int(0)? <= int(1)?),
                Op::Gt => Value::Bool(int(0)? > int(1)?),
                Op::Ge => Value::Bool(int(0)? >= int(1)?),
            };
            Some(v)
        }
    }
}

pub fn holds(t: &Term, m: &Model) -> Option<bool> {
    eval(t, m)?.as_bool()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn euclidean_division_and_arrays() {
        let mut m = Model::new();
        m.insert("x".into(), Value::Int(-7));
        let t = Term::app(Op::Div, vec![Term::var("x"), Term::Int(2)]);
        assert_eq!(eval(&t, &m), Some(Value::Int(-4)));
        let t = Term::app(Op::Mod, vec![Term::var("x"), Term::Int(2)]);
        assert_eq!(eval(&t, &m), Some(Value::Int(1)));
        let a = Term::store(Term::var("A"), Term::Int(1), Term::Int(9));
        assert_eq!(eval(&Term::select(a.clone(), Term::Int(1)), &m), Some(Value::Int(9)));
        assert_eq!(eval(&Term::select(a, Term::Int(2)), &m), Some(Value::Int(0)));
        assert_eq!(eval(&Term::app(Op::Div, vec![Term::Int(1), Term::Int(0)]), &m), None);
    }
}
