use std::collections::HashMap;

use thiserror::Error;

use super::binding::Binding;
use crate::geom::BBox;
use crate::ql::{BinOp, Builtin, FilterExpr, Variable};
use crate::rdf::Term;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("unbound variable {0}")]
    Unbound(Variable),
    #[error("type error: {0}")]
    Type(String),
    #[error("no box geometry for {0}")]
    MissingGeometry(Term),
}

/// Box geometry known to the evaluator, keyed by box term.
pub trait GeometryLookup {
    fn bbox(&self, term: &Term) -> Option<BBox>;
}

impl GeometryLookup for HashMap<Term, BBox> {
    fn bbox(&self, term: &Term) -> Option<BBox> {
        self.get(term).copied()
    }
}

/// No geometry at all; `iou` always fails.
pub struct NoGeometry;

impl GeometryLookup for NoGeometry {
    fn bbox(&self, _: &Term) -> Option<BBox> {
        None
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Num(f64),
    Bool(bool),
    Term(Term),
}

impl Value {
    fn from_term(t: &Term) -> Value {
        match t.numeric_value() {
            Some(n) => Value::Num(n),
            None => Value::Term(t.clone()),
        }
    }

    pub fn as_num(&self) -> Option<f64> {
        match self {
            Value::Num(n) => Some(*n),
            _ => None,
        }
    }
}

pub fn eval(expr: &FilterExpr, b: &Binding, geo: &dyn GeometryLookup) -> Result<Value, EvalError> {
    match expr {
        FilterExpr::Var(v) => b
            .get(v)
            .map(Value::from_term)
            .ok_or_else(|| EvalError::Unbound(v.clone())),
        FilterExpr::Const(t) => Ok(Value::from_term(t)),
        FilterExpr::Call(Builtin::Iou, args) => {
            let mut boxes = Vec::with_capacity(2);
            for a in args {
                let term = match a {
                    FilterExpr::Var(v) => b.get(v).cloned().ok_or_else(|| EvalError::Unbound(v.clone()))?,
                    FilterExpr::Const(t) => t.clone(),
                    other => {
                        return Err(EvalError::Type(format!("iou expects box terms, got {other:?}")));
                    }
                };
                boxes.push(geo.bbox(&term).ok_or(EvalError::MissingGeometry(term))?);
            }
            Ok(Value::Num(boxes[0].iou(&boxes[1])))
        }
        FilterExpr::Binary(BinOp::And, l, r) => {
            let l = truth(eval(l, b, geo)?)?;
            let r = truth(eval(r, b, geo)?)?;
            Ok(Value::Bool(l && r))
        }
        FilterExpr::Binary(op, l, r) => {
            let (l, r) = (eval(l, b, geo)?, eval(r, b, geo)?);
            match op {
                BinOp::Add | BinOp::Sub => {
                    let (x, y) = nums(&l, &r, *op)?;
                    Ok(Value::Num(if *op == BinOp::Add { x + y } else { x - y }))
                }
                BinOp::Eq => Ok(Value::Bool(match (&l, &r) {
                    (Value::Num(x), Value::Num(y)) => x == y,
                    (a, b) => a == b,
                })),
                _ => {
                    let (x, y) = nums(&l, &r, *op)?;
                    Ok(Value::Bool(match op {
                        BinOp::Lt => x < y,
                        BinOp::Gt => x > y,
                        BinOp::Le => x <= y,
                        BinOp::Ge => x >= y,
                        _ => unreachable!("handled above"),
                    }))
                }
            }
        }
    }
}

fn nums(l: &Value, r: &Value, op: BinOp) -> Result<(f64, f64), EvalError> {
    match (l.as_num(), r.as_num()) {
        (Some(x), Some(y)) => Ok((x, y)),
        _ => Err(EvalError::Type(format!("'{}' needs numbers, got {l:?} and {r:?}", op.symbol()))),
    }
}

fn truth(v: Value) -> Result<bool, EvalError> {
    match v {
        Value::Bool(b) => Ok(b),
        other => Err(EvalError::Type(format!("expected a boolean, got {other:?}"))),
    }
}

/// Evaluates a filter to a boolean.
pub fn eval_filter(expr: &FilterExpr, b: &Binding, geo: &dyn GeometryLookup) -> Result<bool, EvalError> {
    truth(eval(expr, b, geo)?)
}
