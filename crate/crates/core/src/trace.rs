//! Partial-trace rewrite rules.
//!
//! * Density matrices lose the traced indices; tracing everything gives `1`.
//! * Correlation matrices vanish as soon as one of their own indices is
//!   traced.
//! * Products are traced factor by factor.
//! * Commutators are classified by how many operator indices the trace
//!   hits: none (the trace moves into the argument), one (a traced
//!   commutator binding that index), or both (zero by cyclicity).

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec::Vec;

use crate::canon::{canonicalize, multiply_terms};
use crate::error::Error;
use crate::index::{Family, Index, PairedIndex, Single};
use crate::ir::{Commutator, InteractionOp, MatrixFactor, MatrixKind, Side, SignedTerm, Term, TracedCommutator};

/// The set of subsystems a trace runs over.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TraceSet {
    indices: BTreeSet<Index>,
}

impl TraceSet {
    /// Builds a trace set. Singles already covered by a family of the set,
    /// and two families of one letter, are rejected.
    pub fn new<I>(indices: I) -> Result<Self, Error>
    where
        I: IntoIterator,
        I::Item: Into<Index>,
    {
        let indices: BTreeSet<Index> = indices.into_iter().map(Into::into).collect();
        let families: Vec<&Family> = indices.iter().filter_map(Index::as_family).collect();
        for (i, a) in families.iter().enumerate() {
            if families[i + 1..].iter().any(|b| b.letter() == a.letter()) {
                return Err(Error::structural(format!("two families of letter {} in one trace", a.letter())));
            }
        }
        for s in indices.iter().filter_map(Index::as_single) {
            if families.iter().any(|f| f.covers(s)) {
                return Err(Error::structural(format!("{s} is already covered by its family in the trace set")));
            }
        }
        Ok(TraceSet { indices })
    }

    pub fn empty() -> Self {
        TraceSet::default()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Index> {
        self.indices.iter()
    }

    pub fn family(&self, letter: char) -> Option<&Family> {
        self.indices.iter().filter_map(Index::as_family).find(|f| f.letter() == letter)
    }

    pub fn singles(&self) -> impl Iterator<Item = &Single> {
        self.indices.iter().filter_map(Index::as_single)
    }

    /// Whether the trace runs over subsystem `s`.
    pub fn covers(&self, s: &Single) -> bool {
        self.indices.iter().any(|i| match i {
            Index::Single(x) => x == s,
            Index::Family(f) => f.covers(s),
        })
    }

    /// Whether every subsystem denoted by `idx` is traced over.
    pub fn contains_index(&self, idx: &Index) -> bool {
        match idx {
            Index::Single(s) => self.covers(s),
            Index::Family(f) => match self.family(f.letter()) {
                Some(sf) => sf.excluded().all(|e| f.excludes(&e) || self.covers(&e)),
                None => false,
            },
        }
    }

    /// The same trace with `s` left out.
    pub fn without_single(&self, s: &Single) -> TraceSet {
        let mut indices = self.indices.clone();
        if !indices.remove(&Index::Single(*s)) {
            if let Some(f) = self.family(s.letter()).filter(|f| f.covers(s)) {
                let f = f.clone();
                indices.remove(&Index::Family(f.clone()));
                indices.insert(Index::Family(f.excluding(*s)));
            }
        }
        TraceSet { indices }
    }

    /// The part of the trace that acts on `factor`.
    fn restrict_to(&self, factor: &MatrixFactor) -> TraceSet {
        let mut indices = BTreeSet::new();
        for e in &self.indices {
            match e {
                Index::Single(x) => {
                    if factor.overlaps_index(e) {
                        indices.insert(Index::Single(*x));
                    }
                }
                Index::Family(sf) => {
                    for idx in &factor.indices {
                        match idx {
                            Index::Family(df) if df.letter() == sf.letter() => {
                                indices.insert(e.clone());
                            }
                            Index::Single(y) if sf.covers(y) => {
                                indices.insert(Index::Single(*y));
                            }
                            _ => {}
                        }
                    }
                }
            }
        }
        TraceSet { indices }
    }
}

fn density_covers(indices: &[Index], e: &Index) -> bool {
    match e {
        Index::Single(x) => indices.iter().any(|i| match i {
            Index::Single(y) => y == x,
            Index::Family(f) => f.covers(x),
        }),
        Index::Family(sf) => indices.iter().any(|i| match i {
            Index::Family(df) if df.letter() == sf.letter() => df
                .excluded()
                .all(|ex| sf.excludes(&ex) || indices.contains(&Index::Single(ex))),
            _ => false,
        }),
    }
}

/// Traces one matrix over `s`.
///
/// Densities keep the untraced indices (or become `1`); a correlation
/// matrix becomes `0` as soon as the trace touches one of its indices.
/// Tracing a density over a subsystem it does not describe is a domain
/// error.
pub fn trace_matrix(factor: &MatrixFactor, s: &TraceSet) -> Result<Term, Error> {
    if factor.deriv {
        return Err(Error::usage("trace of a matrix carrying the derivative marker"));
    }
    factor.validate()?;
    match factor.kind {
        MatrixKind::Correlation => {
            if s.iter().any(|e| factor.overlaps_index(e)) {
                Ok(Term::Zero)
            } else {
                Ok(Term::Matrix(factor.clone()))
            }
        }
        MatrixKind::Density => {
            if let Some(e) = s.iter().find(|e| !density_covers(&factor.indices, e)) {
                return Err(Error::domain(format!("trace over {e:?} which {:?} does not contain", factor.indices)));
            }
            let mut remaining: Vec<Index> = Vec::new();
            for idx in &factor.indices {
                match idx {
                    Index::Single(x) => {
                        if !s.covers(x) {
                            remaining.push(idx.clone());
                        }
                    }
                    Index::Family(df) => match s.family(df.letter()) {
                        Some(sf) => {
                            for ex in sf.excluded() {
                                let kept_elsewhere = df.excludes(&ex) || factor.indices.contains(&Index::Single(ex));
                                if !kept_elsewhere && !s.covers(&ex) {
                                    remaining.push(Index::Single(ex));
                                }
                            }
                        }
                        None => {
                            let covered: Vec<Single> = s.singles().filter(|y| df.covers(y)).copied().collect();
                            let df = covered.into_iter().fold(df.clone(), |f, y| f.excluding(y));
                            remaining.push(Index::Family(df));
                        }
                    },
                }
            }
            if remaining.is_empty() {
                Ok(Term::One)
            } else {
                canonicalize(&Term::Matrix(MatrixFactor { kind: MatrixKind::Density, indices: remaining, deriv: false }))
            }
        }
    }
}

fn trace_factors(factors: &[MatrixFactor], s: &TraceSet, bound: Option<&Family>) -> Result<Term, Error> {
    for e in s.iter() {
        let covered = factors.iter().any(|f| match f.kind {
            MatrixKind::Density => density_covers(&f.indices, e),
            MatrixKind::Correlation => f.overlaps_index(e),
        });
        if !covered {
            return Err(Error::domain(format!("trace over {e:?} which no factor contains")));
        }
    }
    let mut parts = Vec::with_capacity(factors.len());
    for f in factors {
        let mut traced = trace_matrix(f, &s.restrict_to(f))?;
        if let Some(b) = bound {
            let holds_bound = f.indices.iter().any(|i| matches!(i, Index::Family(df) if df.letter() == b.letter()));
            if holds_bound {
                traced = match traced {
                    Term::Zero => Term::Zero,
                    Term::One => Term::Matrix(MatrixFactor {
                        kind: f.kind,
                        indices: alloc::vec![Index::Family(b.clone())],
                        deriv: false,
                    }),
                    Term::Matrix(mut m) => {
                        m.indices.push(Index::Family(b.clone()));
                        Term::Matrix(m)
                    }
                    other => unreachable!("trace of one matrix gave {other:?}"),
                };
            }
        }
        parts.push(traced);
    }
    multiply_terms(&parts)
}

/// Traces a matrix product factor by factor.
///
/// The result is a smaller product, a single matrix, `1` when everything
/// was traced out, or `0` when a correlation factor was hit.
pub fn trace_product(product: &Term, s: &TraceSet) -> Result<Term, Error> {
    let factors = product
        .as_factors()
        .ok_or_else(|| Error::usage(format!("trace_product expects a matrix product, got {product:?}")))?;
    trace_factors(factors, s, None)
}

/// The alternatives an operator index splits into under `s`: one single
/// per untraced exclusion (or individually traced member) of its family,
/// plus the residual family.
fn split_against(idx: &Index, s: &TraceSet) -> Vec<Index> {
    let Index::Family(f) = idx else {
        return alloc::vec![idx.clone()];
    };
    let mut members: BTreeSet<Single> = BTreeSet::new();
    if let Some(sf) = s.family(f.letter()) {
        members.extend(sf.excluded().filter(|e| f.covers(e)));
    }
    members.extend(s.singles().filter(|y| f.covers(y)).copied());
    let mut residual = f.clone();
    let mut out: Vec<Index> = Vec::with_capacity(members.len() + 1);
    for m in members {
        residual = residual.excluding(m);
        out.push(Index::Single(m));
    }
    out.push(Index::Family(residual));
    out
}

fn arg_covers(arg: &[MatrixFactor], idx: &Index) -> bool {
    arg.iter().any(|f| match idx {
        Index::Single(_) => f.overlaps_index(idx),
        Index::Family(fam) => f.indices.iter().any(|i| matches!(i, Index::Family(df) if df.letter() == fam.letter())),
    })
}

/// Traces `[V_uv, M]` over `s`.
///
/// Family operator indices are first split at the members `s` leaves
/// untraced. Each elementary commutator is then rewritten according to how
/// many of its operator indices `s` covers; zeros are dropped and every
/// output is canonical.
pub fn trace_commutator(comm: &Commutator, s: &TraceSet) -> Result<Vec<SignedTerm>, Error> {
    let firsts = split_against(&comm.op.pair.first, s);
    let seconds = split_against(&comm.op.pair.second, s);
    let mut out = Vec::new();
    for a in &firsts {
        for b in &seconds {
            let op = InteractionOp::new(PairedIndex { first: a.clone(), second: b.clone() });
            let term = match (s.contains_index(a), s.contains_index(b)) {
                (true, true) => continue,
                (false, false) => {
                    for idx in [a, b] {
                        if !arg_covers(&comm.arg, idx) {
                            return Err(Error::domain(format!("operator index {idx:?} neither traced nor in the argument")));
                        }
                    }
                    match trace_factors(&comm.arg, s, None)? {
                        Term::Zero | Term::One => continue,
                        t => Term::Comm(Commutator { op, arg: t.as_factors().unwrap().to_vec() }),
                    }
                }
                (in_a, _) => {
                    let traced = if in_a { Side::First } else { Side::Second };
                    let partner = op.get(traced.other());
                    if !arg_covers(&comm.arg, partner) {
                        return Err(Error::domain(format!("operator index {partner:?} neither traced nor in the argument")));
                    }
                    let arg = match op.get(traced) {
                        Index::Single(t) => trace_factors(&comm.arg, &s.without_single(t), None)?,
                        Index::Family(t) => trace_factors(&comm.arg, s, Some(t))?,
                    };
                    match arg {
                        Term::Zero | Term::One => continue,
                        t => Term::TrComm(TracedCommutator { op, traced, arg: t.as_factors().unwrap().to_vec() }),
                    }
                }
            };
            let term = canonicalize(&term)?;
            if !term.is_zero() {
                out.push(SignedTerm::plus(term));
            }
        }
    }
    Ok(out)
}

/// Applies the trace to every term of a signed list (linearity). Accepts
/// matrices, products and untraced commutators.
pub fn trace_terms(terms: &[SignedTerm], s: &TraceSet) -> Result<Vec<SignedTerm>, Error> {
    let mut out = Vec::new();
    for t in terms {
        match &t.term {
            Term::Zero => {}
            Term::One => out.push(t.clone()),
            Term::Matrix(_) | Term::Product(_) => {
                let r = trace_product(&t.term, s)?;
                if !r.is_zero() {
                    out.push(SignedTerm { sign: t.sign, term: r });
                }
            }
            Term::Comm(c) => out.extend(trace_commutator(c, s)?.into_iter().map(|x| SignedTerm { sign: t.sign, term: x.term })),
            other => return Err(Error::usage(format!("no trace rule for {other:?}"))),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn idx(l: &str) -> Index {
        Index::parse(l).unwrap()
    }
    fn rho(ls: &[&str]) -> MatrixFactor {
        MatrixFactor::density(ls.iter().map(|l| idx(l))).unwrap()
    }
    fn g(ls: &[&str]) -> MatrixFactor {
        MatrixFactor::correlation(ls.iter().map(|l| idx(l))).unwrap()
    }
    fn ts(ls: &[&str]) -> TraceSet {
        TraceSet::new(ls.iter().map(|l| idx(l))).unwrap()
    }

    #[test]
    fn trace_set_invariant() {
        assert!(TraceSet::new([idx("F"), idx("F1")]).is_err());
        let f_f1 = Family::with_exclusions('F', [Single::parse("F1").unwrap()]).unwrap();
        assert!(TraceSet::new([Index::Family(f_f1), idx("F1")]).is_ok());
    }

    #[test]
    fn empty_trace_is_identity() {
        assert_eq!(trace_matrix(&rho(&["A1"]), &TraceSet::empty()).unwrap(), Term::Matrix(rho(&["A1"])));
    }

    #[test]
    fn density_loses_traced_indices() {
        let full = rho(&["A1", "A2", "A3", "B", "F"]);
        let t = trace_matrix(&full, &ts(&["A2", "A3", "B", "F"])).unwrap();
        assert_eq!(t, Term::Matrix(rho(&["A1"])));
        let t = trace_matrix(&rho(&["A1", "F1"]), &ts(&["A1", "F1"])).unwrap();
        assert_eq!(t, Term::One);
    }

    #[test]
    fn family_exclusions_survive_as_singles() {
        let a1 = Single::parse("A1").unwrap();
        let f1 = Single::parse("F1").unwrap();
        let s = TraceSet::new([
            Index::Family(Family::with_exclusions('A', [a1]).unwrap()),
            idx("B"),
            Index::Family(Family::with_exclusions('F', [f1]).unwrap()),
        ])
        .unwrap();
        let t = trace_matrix(&rho(&["A", "B", "F"]), &s).unwrap();
        assert_eq!(t, Term::Matrix(rho(&["A1", "F1"])));
    }

    #[test]
    fn absent_index_is_domain_error() {
        assert!(matches!(trace_matrix(&rho(&["A1"]), &ts(&["A2"])), Err(Error::Domain(_))));
        let p = Term::Product(vec![rho(&["A1"]), rho(&["A2"])]);
        assert!(matches!(trace_product(&p, &ts(&["A3"])), Err(Error::Domain(_))));
    }

    #[test]
    fn correlation_dies_under_own_trace() {
        assert_eq!(trace_matrix(&g(&["A2", "A3"]), &ts(&["A2"])).unwrap(), Term::Zero);
        assert_eq!(trace_matrix(&g(&["A2", "A3"]), &ts(&["A1"])).unwrap(), Term::Matrix(g(&["A2", "A3"])));
    }

    #[test]
    fn derivative_cannot_be_traced() {
        let d = rho(&["A1"]).with_deriv(true);
        assert!(matches!(trace_matrix(&d, &ts(&["A1"])), Err(Error::Usage(_))));
    }
}
