//! Expression IR for hierarchy equations.
//!
//! Values are plain immutable data. Constructors check local invariants;
//! the global normal form (factor order, hoisting, absorption of `0`/`1`)
//! is established by [`crate::canon::canonicalize`].

use alloc::format;
use alloc::vec::Vec;
use core::ops::{Mul, Neg};

use crate::error::Error;
use crate::index::{Index, PairedIndex, Single};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MatrixKind {
    /// Reduced density matrix `ρ`.
    Density,
    /// Correlation matrix `g` of the cluster decomposition.
    Correlation,
}

/// A density or correlation matrix, optionally carrying the `iħ d/dt`
/// marker.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MatrixFactor {
    pub kind: MatrixKind,
    pub indices: Vec<Index>,
    pub deriv: bool,
}

impl MatrixFactor {
    pub fn density<I>(indices: I) -> Result<Self, Error>
    where
        I: IntoIterator,
        I::Item: Into<Index>,
    {
        let f = MatrixFactor { kind: MatrixKind::Density, indices: indices.into_iter().map(Into::into).collect(), deriv: false };
        f.validate()?;
        Ok(f)
    }

    /// A correlation matrix. Family indices are only meaningful as the bound
    /// variable of an enclosing traced commutator.
    pub fn correlation<I>(indices: I) -> Result<Self, Error>
    where
        I: IntoIterator,
        I::Item: Into<Index>,
    {
        let f = MatrixFactor { kind: MatrixKind::Correlation, indices: indices.into_iter().map(Into::into).collect(), deriv: false };
        f.validate()?;
        Ok(f)
    }

    pub fn single_density(s: Single) -> Self {
        MatrixFactor { kind: MatrixKind::Density, indices: alloc::vec![Index::Single(s)], deriv: false }
    }

    pub fn with_deriv(mut self, deriv: bool) -> Self {
        self.deriv = deriv;
        self
    }

    pub fn is_density(&self) -> bool {
        self.kind == MatrixKind::Density
    }

    pub fn is_correlation(&self) -> bool {
        self.kind == MatrixKind::Correlation
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.indices.is_empty() {
            return Err(Error::structural("matrix without indices"));
        }
        if self.is_correlation() && self.indices.len() < 2 {
            return Err(Error::structural("correlation matrix needs at least two indices"));
        }
        for (i, a) in self.indices.iter().enumerate() {
            if self.indices[i + 1..].iter().any(|b| a.overlaps(b)) {
                return Err(Error::structural(format!("repeated index {a:?} inside one matrix")));
            }
        }
        Ok(())
    }

    /// Whether any index of `self` can refer to the same subsystem as any
    /// index of `other`.
    pub fn overlaps(&self, other: &MatrixFactor) -> bool {
        self.indices.iter().any(|a| other.indices.iter().any(|b| a.overlaps(b)))
    }

    pub fn overlaps_index(&self, idx: &Index) -> bool {
        self.indices.iter().any(|a| a.overlaps(idx))
    }

    /// The indices as singles, if the matrix has no family index.
    pub fn singles(&self) -> Option<Vec<Single>> {
        self.indices.iter().map(|i| i.as_single().copied()).collect()
    }
}

/// The interaction operator `V_uv`; a family index means a sum over the
/// family's members.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct InteractionOp {
    pub pair: PairedIndex,
}

impl InteractionOp {
    pub fn new(pair: PairedIndex) -> Self {
        InteractionOp { pair }
    }

    pub fn indices(&self) -> [&Index; 2] {
        [&self.pair.first, &self.pair.second]
    }

    pub fn get(&self, side: Side) -> &Index {
        match side {
            Side::First => &self.pair.first,
            Side::Second => &self.pair.second,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Side {
    First,
    Second,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::First => Side::Second,
            Side::Second => Side::First,
        }
    }
}

/// `[V_uv, arg]`, with family operator indices summed.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Commutator {
    pub op: InteractionOp,
    pub arg: Vec<MatrixFactor>,
}

/// `Tr_t [V_uv, arg]` where `t` is one of the operator's own indices.
///
/// When the trace index is a family the whole term is summed over its
/// members, and the same family inside `arg` denotes the bound member.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TracedCommutator {
    pub op: InteractionOp,
    pub traced: Side,
    pub arg: Vec<MatrixFactor>,
}

impl TracedCommutator {
    pub fn trace_index(&self) -> &Index {
        self.op.get(self.traced)
    }

    pub fn partner_index(&self) -> &Index {
        self.op.get(self.traced.other())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Tail {
    Comm(Commutator),
    TrComm(TracedCommutator),
}

impl Tail {
    pub fn op(&self) -> &InteractionOp {
        match self {
            Tail::Comm(c) => &c.op,
            Tail::TrComm(c) => &c.op,
        }
    }

    pub fn arg(&self) -> &[MatrixFactor] {
        match self {
            Tail::Comm(c) => &c.arg,
            Tail::TrComm(c) => &c.arg,
        }
    }

    pub fn into_term(self) -> Term {
        match self {
            Tail::Comm(c) => Term::Comm(c),
            Tail::TrComm(c) => Term::TrComm(c),
        }
    }
}

/// Matrices multiplied onto a commutator: `ρ_F1 Tr_F1 [V_A1F1, ...]`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Mixed {
    pub factors: Vec<MatrixFactor>,
    pub tail: Tail,
}

/// An expression node.
///
/// Variant order is significant: it is the primary key of the canonical
/// ordering of equation right-hand sides.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Zero,
    One,
    Matrix(MatrixFactor),
    Product(Vec<MatrixFactor>),
    Comm(Commutator),
    TrComm(TracedCommutator),
    Mixed(Mixed),
}

impl Term {
    pub fn is_zero(&self) -> bool {
        matches!(self, Term::Zero)
    }

    /// The matrices of a `Matrix`/`Product` term; `None` for other kinds.
    pub fn as_factors(&self) -> Option<&[MatrixFactor]> {
        match self {
            Term::Matrix(m) => Some(core::slice::from_ref(m)),
            Term::Product(v) => Some(v),
            _ => None,
        }
    }

    pub fn from_factors(mut factors: Vec<MatrixFactor>) -> Term {
        match factors.len() {
            0 => Term::One,
            1 => Term::Matrix(factors.pop().unwrap()),
            _ => Term::Product(factors),
        }
    }

    /// Every matrix in the term, commutator arguments included.
    pub fn matrices(&self) -> Vec<&MatrixFactor> {
        match self {
            Term::Zero | Term::One => Vec::new(),
            Term::Matrix(m) => alloc::vec![m],
            Term::Product(v) => v.iter().collect(),
            Term::Comm(c) => c.arg.iter().collect(),
            Term::TrComm(c) => c.arg.iter().collect(),
            Term::Mixed(m) => m.factors.iter().chain(m.tail.arg()).collect(),
        }
    }

    pub fn deriv_count(&self) -> usize {
        self.matrices().iter().filter(|m| m.deriv).count()
    }

    /// Correlation matrices inside the commutator argument, or in the
    /// product itself for matrix terms.
    pub fn argument_correlations(&self) -> usize {
        let arg: &[MatrixFactor] = match self {
            Term::Zero | Term::One => &[],
            Term::Matrix(m) => core::slice::from_ref(m),
            Term::Product(v) => v,
            Term::Comm(c) => &c.arg,
            Term::TrComm(c) => &c.arg,
            Term::Mixed(m) => m.tail.arg(),
        };
        arg.iter().filter(|m| m.is_correlation()).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn as_i64(self) -> i64 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }
}

impl Neg for Sign {
    type Output = Sign;

    fn neg(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

impl Mul for Sign {
    type Output = Sign;

    fn mul(self, rhs: Sign) -> Sign {
        if self == rhs {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SignedTerm {
    pub sign: Sign,
    pub term: Term,
}

impl SignedTerm {
    pub fn plus(term: Term) -> Self {
        SignedTerm { sign: Sign::Plus, term }
    }

    pub fn minus(term: Term) -> Self {
        SignedTerm { sign: Sign::Minus, term }
    }

    pub fn negated(self) -> Self {
        SignedTerm { sign: -self.sign, term: self.term }
    }
}

/// `iħ d/dt lhs = Σ ± rhs`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Equation {
    pub lhs: MatrixFactor,
    pub rhs: Vec<SignedTerm>,
}

impl Equation {
    pub fn validate(&self) -> Result<(), Error> {
        if !self.lhs.deriv {
            return Err(Error::structural("equation left-hand side must carry the derivative marker"));
        }
        self.lhs.validate()?;
        if self.rhs.iter().any(|t| t.term.deriv_count() > 0) {
            return Err(Error::structural("derivative marker on the right-hand side"));
        }
        Ok(())
    }

    /// The target labels, when the left-hand side has only single indices.
    pub fn target(&self) -> Option<Vec<Single>> {
        self.lhs.singles()
    }
}
