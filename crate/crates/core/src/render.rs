//! Plain-text and LaTeX output.
//!
//! A family index prints differently depending on where it sits: as an
//! operator index it is a sum (`sum_{F}/F1`), inside a density outside any
//! trace it is the whole family (`{F}`), and inside the argument of a trace
//! over that family it is the bound member (`F`).

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use crate::index::{Family, Index, Single};
use crate::ir::{Equation, InteractionOp, MatrixFactor, MatrixKind, Sign, SignedTerm, Tail, Term};

#[derive(Clone, Copy, PartialEq, Eq)]
enum Style {
    Plain,
    Latex,
}

/// Text rendering of IR nodes.
pub trait Render {
    /// The plain display string, e.g. `rho_F1 * Tr_F1 [V_A1F1, rho_A1F1]`.
    fn display(&self) -> String;
    /// The LaTeX form, e.g. `\rho_{F1}Tr_{F1} [ V_{A1F1} , \rho_{A1F1} ]`.
    fn latex(&self) -> String;
}

pub fn display<T: Render + ?Sized>(node: &T) -> String {
    node.display()
}

pub fn to_latex(eq: &Equation) -> String {
    eq.latex()
}

fn exclusions(f: &Family) -> String {
    f.excluded().map(|s| s.to_string()).collect::<Vec<_>>().join(",")
}

fn sum_prefix(f: &Family, style: Style) -> String {
    let ex = exclusions(f);
    match (style, ex.is_empty()) {
        (Style::Plain, true) => alloc::format!("sum_{{{}}}", f.letter()),
        (Style::Plain, false) => alloc::format!("sum_{{{}}}/{ex}", f.letter()),
        (Style::Latex, true) => alloc::format!("\\sum_{{{}}}", f.letter()),
        (Style::Latex, false) => alloc::format!("\\sum_{{{}/{ex}}}", f.letter()),
    }
}

/// An index inside a matrix subscript.
fn matrix_index(idx: &Index, bound: Option<char>, style: Style) -> String {
    match idx {
        Index::Single(s) => s.to_string(),
        Index::Family(f) if Some(f.letter()) == bound => f.letter().to_string(),
        Index::Family(f) => {
            let ex = exclusions(f);
            let inner = if ex.is_empty() { f.letter().to_string() } else { alloc::format!("{}/{ex}", f.letter()) };
            match style {
                Style::Plain => alloc::format!("{{{inner}}}"),
                Style::Latex => alloc::format!("\\{{{inner}\\}}"),
            }
        }
    }
}

/// An index of `V` or `Tr`: families print as their letter.
fn op_index(idx: &Index) -> String {
    match idx {
        Index::Single(s) => s.to_string(),
        Index::Family(f) => f.letter().to_string(),
    }
}

fn factor(f: &MatrixFactor, bound: Option<char>, style: Style) -> String {
    let sub: String = f.indices.iter().map(|i| matrix_index(i, bound, style)).collect();
    let (sym, pre) = match (f.kind, style) {
        (MatrixKind::Density, Style::Plain) => ("rho", "i hbar d/dt "),
        (MatrixKind::Correlation, Style::Plain) => ("g", "i hbar d/dt "),
        (MatrixKind::Density, Style::Latex) => ("\\rho", "i\\hbar\\frac{d}{dt} "),
        (MatrixKind::Correlation, Style::Latex) => ("g", "i\\hbar\\frac{d}{dt} "),
    };
    let pre = if f.deriv { pre } else { "" };
    match style {
        Style::Plain => alloc::format!("{pre}{sym}_{sub}"),
        Style::Latex => alloc::format!("{pre}{sym}_{{{sub}}}"),
    }
}

fn factors(fs: &[MatrixFactor], bound: Option<char>, style: Style) -> String {
    let parts: Vec<String> = fs.iter().map(|f| factor(f, bound, style)).collect();
    match style {
        Style::Plain => parts.join(" * "),
        Style::Latex => parts.concat(),
    }
}

fn operator(op: &InteractionOp, style: Style) -> String {
    let [a, b] = op.indices();
    match style {
        Style::Plain => alloc::format!("V_{}{}", op_index(a), op_index(b)),
        Style::Latex => alloc::format!("V_{{{}{}}}", op_index(a), op_index(b)),
    }
}

fn sums(op: &InteractionOp, style: Style) -> String {
    let mut out = String::new();
    for f in op.indices().into_iter().filter_map(Index::as_family) {
        out.push_str(&sum_prefix(f, style));
        out.push(' ');
    }
    out
}

fn tail(t: &Tail, style: Style) -> String {
    match t {
        Tail::Comm(c) => {
            let arg = factors(&c.arg, None, style);
            match style {
                Style::Plain => alloc::format!("{}[ {}, {arg} ]", sums(&c.op, style), operator(&c.op, style)),
                Style::Latex => alloc::format!("{}\\left[ {} , {arg} \\right]", sums(&c.op, style), operator(&c.op, style)),
            }
        }
        Tail::TrComm(c) => {
            let tr = c.trace_index();
            let bound = tr.as_family().map(Family::letter);
            let arg = factors(&c.arg, bound, style);
            match style {
                Style::Plain => {
                    alloc::format!("{}Tr_{} [{}, {arg}]", sums(&c.op, style), op_index(tr), operator(&c.op, style))
                }
                Style::Latex => {
                    alloc::format!("{}Tr_{{{}}} [ {} , {arg} ]", sums(&c.op, style), op_index(tr), operator(&c.op, style))
                }
            }
        }
    }
}

fn term(t: &Term, style: Style) -> String {
    match t {
        Term::Zero => "0".into(),
        Term::One => "1".into(),
        Term::Matrix(m) => factor(m, None, style),
        Term::Product(v) => factors(v, None, style),
        Term::Comm(c) => tail(&Tail::Comm(c.clone()), style),
        Term::TrComm(c) => tail(&Tail::TrComm(c.clone()), style),
        Term::Mixed(m) => {
            let pre = factors(&m.factors, None, style);
            match style {
                Style::Plain => alloc::format!("{pre} * {}", tail(&m.tail, style)),
                Style::Latex => alloc::format!("{pre}{}", tail(&m.tail, style)),
            }
        }
    }
}

fn equation(eq: &Equation, style: Style) -> String {
    let mut out = factor(&eq.lhs, None, style);
    out.push_str(" =");
    if eq.rhs.is_empty() {
        out.push_str(" 0");
        return out;
    }
    for (i, t) in eq.rhs.iter().enumerate() {
        let body = term(&t.term, style);
        let _ = match (i, t.sign) {
            (0, Sign::Plus) => write!(out, " {body}"),
            (0, Sign::Minus) => write!(out, " -{body}"),
            (_, Sign::Plus) => write!(out, " + {body}"),
            (_, Sign::Minus) => write!(out, " - {body}"),
        };
    }
    out
}

impl Render for Single {
    fn display(&self) -> String {
        self.to_string()
    }
    fn latex(&self) -> String {
        self.to_string()
    }
}

impl Render for Family {
    fn display(&self) -> String {
        sum_prefix(self, Style::Plain)
    }
    fn latex(&self) -> String {
        sum_prefix(self, Style::Latex)
    }
}

impl Render for Index {
    fn display(&self) -> String {
        match self {
            Index::Single(s) => s.display(),
            Index::Family(f) => f.display(),
        }
    }
    fn latex(&self) -> String {
        match self {
            Index::Single(s) => s.latex(),
            Index::Family(f) => f.latex(),
        }
    }
}

impl Render for MatrixFactor {
    fn display(&self) -> String {
        factor(self, None, Style::Plain)
    }
    fn latex(&self) -> String {
        factor(self, None, Style::Latex)
    }
}

impl Render for InteractionOp {
    fn display(&self) -> String {
        alloc::format!("{}{}", sums(self, Style::Plain), operator(self, Style::Plain))
    }
    fn latex(&self) -> String {
        alloc::format!("{}{}", sums(self, Style::Latex), operator(self, Style::Latex))
    }
}

impl Render for Term {
    fn display(&self) -> String {
        term(self, Style::Plain)
    }
    fn latex(&self) -> String {
        term(self, Style::Latex)
    }
}

impl Render for SignedTerm {
    fn display(&self) -> String {
        let sign = if self.sign == Sign::Minus { "-" } else { "+" };
        alloc::format!("{sign}{}", self.term.display())
    }
    fn latex(&self) -> String {
        let sign = if self.sign == Sign::Minus { "-" } else { "+" };
        alloc::format!("{sign}{}", self.term.latex())
    }
}

impl Render for Equation {
    fn display(&self) -> String {
        equation(self, Style::Plain)
    }
    fn latex(&self) -> String {
        equation(self, Style::Latex)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::PairedIndex;
    use crate::ir::{Commutator, Mixed, Side, TracedCommutator};

    fn s(l: &str) -> Single {
        Single::parse(l).unwrap()
    }
    fn i(l: &str) -> Index {
        Index::parse(l).unwrap()
    }
    fn op(a: &str, b: &str) -> InteractionOp {
        InteractionOp::new(PairedIndex::new(i(a), i(b)).unwrap())
    }

    #[test]
    fn table_formats() {
        assert_eq!(Term::Zero.display(), "0");
        let f = Family::with_exclusions('F', [s("F1")]).unwrap();
        assert_eq!(f.display(), "sum_{F}/F1");
        assert_eq!(MatrixFactor::density([i("A1"), i("F")]).unwrap().display(), "rho_A1{F}");
        let g = MatrixFactor::correlation([s("A1"), s("F1")]).unwrap().with_deriv(true);
        assert_eq!(g.display(), "i hbar d/dt g_A1F1");
        let p = Term::Product(alloc::vec![
            MatrixFactor::single_density(s("A1")),
            MatrixFactor::correlation([s("A2"), s("F1")]).unwrap()
        ]);
        assert_eq!(p.display(), "rho_A1 * g_A2F1");
        assert_eq!(op("A1", "F").display(), "sum_{F} V_A1F");
        let c = Term::Comm(Commutator {
            op: op("A1", "B1"),
            arg: alloc::vec![MatrixFactor::correlation([s("A1"), s("B1")]).unwrap()],
        });
        assert_eq!(c.display(), "[ V_A1B1, g_A1B1 ]");
        let tc = Term::TrComm(TracedCommutator {
            op: op("A1", "F"),
            traced: Side::Second,
            arg: alloc::vec![MatrixFactor::correlation([i("A1"), i("F")]).unwrap()],
        });
        assert_eq!(tc.display(), "sum_{F} Tr_F [V_A1F, g_A1F]");
        let m = Term::Mixed(Mixed {
            factors: alloc::vec![MatrixFactor::single_density(s("F1"))],
            tail: Tail::TrComm(TracedCommutator {
                op: op("A1", "F1"),
                traced: Side::Second,
                arg: alloc::vec![MatrixFactor::density([s("A1"), s("F1")]).unwrap()],
            }),
        });
        assert_eq!(m.display(), "rho_F1 * Tr_F1 [V_A1F1, rho_A1F1]");
        assert_eq!(m.latex(), "\\rho_{F1}Tr_{F1} [ V_{A1F1} , \\rho_{A1F1} ]");
    }

    #[test]
    fn empty_rhs() {
        let eq = Equation { lhs: MatrixFactor::single_density(s("A1")).with_deriv(true), rhs: Vec::new() };
        assert_eq!(eq.display(), "i hbar d/dt rho_A1 = 0");
        assert!(to_latex(&eq).ends_with("= 0"));
    }
}
