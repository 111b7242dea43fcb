//! JSON form of equations, with `kind`-tagged nodes.
//!
//! ```json
//! {"kind": "equation",
//!  "lhs": {"kind": "correlation", "deriv": true, "indices": [{"kind": "single", "label": "A1"}, ...]},
//!  "rhs": [{"sign": "+", "term": {"kind": "traced_commutator", ...}}, ...],
//!  "plain": "...", "latex": "..."}
//! ```

use bbgky_core::{Equation, Index, InteractionOp, MatrixFactor, MatrixKind, Render, Side, Sign, SignedTerm, Tail, Term};
use serde_json::{json, Value};

pub fn index(i: &Index) -> Value {
    match i {
        Index::Single(s) => json!({"kind": "single", "label": s.to_string()}),
        Index::Family(f) => json!({
            "kind": "family",
            "letter": f.letter().to_string(),
            "excluded": f.excluded().map(|s| s.to_string()).collect::<Vec<_>>(),
        }),
    }
}

pub fn matrix(m: &MatrixFactor) -> Value {
    let kind = match m.kind {
        MatrixKind::Density => "density",
        MatrixKind::Correlation => "correlation",
    };
    json!({"kind": kind, "deriv": m.deriv, "indices": m.indices.iter().map(index).collect::<Vec<_>>()})
}

fn matrices(ms: &[MatrixFactor]) -> Value {
    Value::Array(ms.iter().map(matrix).collect())
}

fn operator(op: &InteractionOp) -> Value {
    json!({"kind": "interaction", "indices": [index(&op.pair.first), index(&op.pair.second)]})
}

fn tail(t: &Tail) -> Value {
    match t {
        Tail::Comm(c) => json!({"kind": "commutator", "op": operator(&c.op), "arg": matrices(&c.arg)}),
        Tail::TrComm(c) => json!({
            "kind": "traced_commutator",
            "op": operator(&c.op),
            "traced": match c.traced { Side::First => "first", Side::Second => "second" },
            "arg": matrices(&c.arg),
        }),
    }
}

pub fn term(t: &Term) -> Value {
    match t {
        Term::Zero => json!({"kind": "zero"}),
        Term::One => json!({"kind": "one"}),
        Term::Matrix(m) => matrix(m),
        Term::Product(v) => json!({"kind": "product", "factors": matrices(v)}),
        Term::Comm(c) => tail(&Tail::Comm(c.clone())),
        Term::TrComm(c) => tail(&Tail::TrComm(c.clone())),
        Term::Mixed(m) => json!({"kind": "mixed", "factors": matrices(&m.factors), "tail": tail(&m.tail)}),
    }
}

pub fn signed(t: &SignedTerm) -> Value {
    let sign = if t.sign == Sign::Plus { "+" } else { "-" };
    json!({"sign": sign, "term": term(&t.term)})
}

pub fn equation(eq: &Equation) -> Value {
    json!({
        "kind": "equation",
        "lhs": matrix(&eq.lhs),
        "rhs": eq.rhs.iter().map(signed).collect::<Vec<_>>(),
        "plain": eq.display(),
        "latex": eq.latex(),
    })
}
