//! Normal forms, structural equality, family-sum refinement and the
//! product-rule derivative.
//!
//! The canonical form of a term is defined by four rules:
//!
//! 1. Inside a matrix, indices are ordered untraced-first, then singles
//!    before families, then by letter and ordinal (`g_A1F1F`, `g_F1A1`
//!    under `Tr_A1`).
//! 2. Products are ordered densities first, then correlations, each by
//!    their index lists. All factors act on disjoint subsystems, so the
//!    order carries no meaning.
//! 3. Factors of a commutator argument that share no subsystem with the
//!    operator are hoisted out in front of the commutator
//!    (`Tr_F [V_A1F, ρ_B1 X] = ρ_B1 Tr_F [V_A1F, X]`). An argument left
//!    empty by hoisting makes the term zero.
//! 4. `One` factors vanish and any `Zero` annihilates the product.
//!
//! With these rules two terms denote the same operator exactly when they
//! are structurally equal, which is what cancellation relies on.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use crate::error::Error;
use crate::index::{Family, Index, Single};
use crate::ir::{
    Commutator, InteractionOp, MatrixFactor, MatrixKind, Mixed, Side, Sign, SignedTerm, Tail, Term,
    TracedCommutator,
};

fn is_traced(idx: &Index, traced: Option<&Index>) -> bool {
    match (traced, idx) {
        (Some(Index::Single(t)), Index::Single(s)) => s == t,
        (Some(Index::Family(t)), Index::Family(f)) => f.letter() == t.letter(),
        _ => false,
    }
}

fn canon_factor(f: &MatrixFactor, traced: Option<&Index>) -> Result<MatrixFactor, Error> {
    f.validate()?;
    let mut out = f.clone();
    out.indices.sort_by(|a, b| (is_traced(a, traced), a).cmp(&(is_traced(b, traced), b)));
    Ok(out)
}

type FactorKey = (MatrixKind, Vec<(bool, Index)>, bool);

fn factor_key(f: &MatrixFactor, traced: Option<&Index>) -> FactorKey {
    let idx = f.indices.iter().map(|i| (is_traced(i, traced), i.clone())).collect();
    (f.kind, idx, f.deriv)
}

fn canon_product(factors: &[MatrixFactor], traced: Option<&Index>) -> Result<Vec<MatrixFactor>, Error> {
    let mut out = factors.iter().map(|f| canon_factor(f, traced)).collect::<Result<Vec<_>, _>>()?;
    for (i, a) in out.iter().enumerate() {
        if let Some(b) = out[i + 1..].iter().find(|b| a.overlaps(b)) {
            return Err(Error::structural(format!(
                "product factors {:?} and {:?} act on a common subsystem",
                a.indices, b.indices
            )));
        }
    }
    out.sort_by_cached_key(|f| factor_key(f, traced));
    Ok(out)
}

fn op_touches(op: &InteractionOp, f: &MatrixFactor) -> bool {
    op.indices().iter().any(|i| f.overlaps_index(i))
}

fn canon_commutator(op: &InteractionOp, traced: Option<Side>, arg: &[MatrixFactor]) -> Result<Term, Error> {
    let traced_idx = traced.map(|s| op.get(s));
    let arg = canon_product(arg, traced_idx)?;
    let (inside, outside): (Vec<_>, Vec<_>) = arg.into_iter().partition(|f| op_touches(op, f));
    if inside.is_empty() {
        // [V, 1] = 0, with or without a trace.
        return Ok(Term::Zero);
    }
    let tail = match traced {
        None => Tail::Comm(Commutator { op: op.clone(), arg: inside }),
        Some(side) => Tail::TrComm(TracedCommutator { op: op.clone(), traced: side, arg: inside }),
    };
    if outside.is_empty() {
        Ok(tail.into_term())
    } else {
        make_mixed(outside, tail)
    }
}

/// Indices of the tail that survive its trace.
fn surviving(tail: &Tail) -> Vec<Index> {
    match tail {
        Tail::Comm(c) => {
            let mut v: Vec<Index> = c.arg.iter().flat_map(|f| f.indices.iter().cloned()).collect();
            v.extend(c.op.indices().into_iter().cloned());
            v
        }
        Tail::TrComm(c) => {
            let t = c.trace_index();
            let mut v: Vec<Index> = c
                .arg
                .iter()
                .flat_map(|f| f.indices.iter())
                .filter(|i| !is_traced(i, Some(t)))
                .cloned()
                .collect();
            v.push(c.partner_index().clone());
            v
        }
    }
}

fn make_mixed(factors: Vec<MatrixFactor>, tail: Tail) -> Result<Term, Error> {
    let factors = canon_product(&factors, None)?;
    if factors.is_empty() {
        return Ok(tail.into_term());
    }
    let live = surviving(&tail);
    if let Some(f) = factors.iter().find(|f| live.iter().any(|i| f.overlaps_index(i))) {
        return Err(Error::structural(format!(
            "factor {:?} overlaps the untraced support of the commutator it multiplies",
            f.indices
        )));
    }
    Ok(Term::Mixed(Mixed { factors, tail }))
}

fn canonicalize_inner(term: &Term) -> Result<Term, Error> {
    Ok(match term {
        Term::Zero => Term::Zero,
        Term::One => Term::One,
        Term::Matrix(m) => Term::Matrix(canon_factor(m, None)?),
        Term::Product(v) => Term::from_factors(canon_product(v, None)?),
        Term::Comm(c) => canon_commutator(&c.op, None, &c.arg)?,
        Term::TrComm(c) => canon_commutator(&c.op, Some(c.traced), &c.arg)?,
        Term::Mixed(m) => {
            let tail = match &m.tail {
                Tail::Comm(c) => canon_commutator(&c.op, None, &c.arg)?,
                Tail::TrComm(c) => canon_commutator(&c.op, Some(c.traced), &c.arg)?,
            };
            match tail {
                Term::Zero => Term::Zero,
                Term::Comm(c) => make_mixed(m.factors.clone(), Tail::Comm(c))?,
                Term::TrComm(c) => make_mixed(m.factors.clone(), Tail::TrComm(c))?,
                Term::Mixed(inner) => {
                    let mut factors = m.factors.clone();
                    factors.extend(inner.factors);
                    make_mixed(factors, inner.tail)?
                }
                other => unreachable!("commutator canonicalized to {other:?}"),
            }
        }
    })
}

/// Brings a term to canonical form. Idempotent.
pub fn canonicalize(term: &Term) -> Result<Term, Error> {
    let out = canonicalize_inner(term)?;
    if out.deriv_count() > 1 {
        return Err(Error::structural("more than one derivative marker in one term"));
    }
    Ok(out)
}

/// Multiplies terms of the `Zero`/`One`/matrix/product kinds.
pub fn multiply_terms(terms: &[Term]) -> Result<Term, Error> {
    let mut factors = Vec::new();
    for t in terms {
        match t {
            Term::Zero => return Ok(Term::Zero),
            Term::One => {}
            Term::Matrix(m) => factors.push(m.clone()),
            Term::Product(v) => factors.extend(v.iter().cloned()),
            other => return Err(Error::usage(format!("cannot form a plain product with {other:?}"))),
        }
    }
    canonicalize(&Term::from_factors(factors))
}

/// Multiplies matrices onto a term: commutators become [`Mixed`] terms,
/// plain products grow.
pub fn multiply_factors(factors: &[MatrixFactor], term: &Term) -> Result<Term, Error> {
    let product = match term {
        Term::Zero => Term::Zero,
        Term::One => Term::from_factors(factors.to_vec()),
        Term::Matrix(_) | Term::Product(_) => {
            let mut v = factors.to_vec();
            v.extend(term.as_factors().unwrap().iter().cloned());
            Term::from_factors(v)
        }
        Term::Comm(c) => Term::Mixed(Mixed { factors: factors.to_vec(), tail: Tail::Comm(c.clone()) }),
        Term::TrComm(c) => Term::Mixed(Mixed { factors: factors.to_vec(), tail: Tail::TrComm(c.clone()) }),
        Term::Mixed(m) => {
            let mut v = factors.to_vec();
            v.extend(m.factors.iter().cloned());
            Term::Mixed(Mixed { factors: v, tail: m.tail.clone() })
        }
    };
    canonicalize(&product)
}

/// Structural equality of canonical terms.
///
/// Family indices are equal only with equal exclusion sets; the family
/// letter is the bound variable, so no renaming is attempted.
pub fn terms_equal(a: &Term, b: &Term) -> bool {
    a == b
}

/// Canonicalizes, drops zeros, cancels equal-up-to-sign pairs and sorts.
///
/// Terms that survive with a net multiplicity above one are repeated.
pub fn normalize(terms: Vec<SignedTerm>) -> Result<Vec<SignedTerm>, Error> {
    let mut acc: BTreeMap<Term, i64> = BTreeMap::new();
    for t in terms {
        let term = canonicalize(&t.term)?;
        if term.is_zero() {
            continue;
        }
        *acc.entry(term).or_insert(0) += t.sign.as_i64();
    }
    let mut out = Vec::new();
    for (term, c) in acc {
        let sign = if c > 0 { Sign::Plus } else { Sign::Minus };
        for _ in 0..c.unsigned_abs() {
            out.push(SignedTerm { sign, term: term.clone() });
        }
    }
    Ok(out)
}

fn substitute_bound(arg: &[MatrixFactor], letter: char, to: &Index) -> Vec<MatrixFactor> {
    arg.iter()
        .map(|f| {
            let mut f = f.clone();
            for i in f.indices.iter_mut() {
                if matches!(i, Index::Family(fam) if fam.letter() == letter) {
                    *i = to.clone();
                }
            }
            f
        })
        .collect()
}

fn split_op(op: &InteractionOp, side: Side, to: Index) -> InteractionOp {
    let mut out = op.clone();
    match side {
        Side::First => out.pair.first = to,
        Side::Second => out.pair.second = to,
    }
    out
}

/// Splits one summation over `pivot`'s family, if the term has one that
/// still covers `pivot`.
fn split_once(term: &Term, pivot: &Single) -> Option<[Term; 2]> {
    let covering = |op: &InteractionOp| -> Option<(Side, Family)> {
        [Side::First, Side::Second].into_iter().find_map(|side| match op.get(side) {
            Index::Family(f) if f.covers(pivot) => Some((side, f.clone())),
            _ => None,
        })
    };
    match term {
        Term::Comm(c) => {
            let (side, fam) = covering(&c.op)?;
            let one = Commutator { op: split_op(&c.op, side, Index::Single(*pivot)), arg: c.arg.clone() };
            let rest = Commutator { op: split_op(&c.op, side, Index::Family(fam.excluding(*pivot))), arg: c.arg.clone() };
            Some([Term::Comm(one), Term::Comm(rest)])
        }
        Term::TrComm(c) => {
            let (side, fam) = covering(&c.op)?;
            let bound = side == c.traced;
            let mk = |to: Index| {
                let arg = if bound { substitute_bound(&c.arg, fam.letter(), &to) } else { c.arg.clone() };
                Term::TrComm(TracedCommutator { op: split_op(&c.op, side, to), traced: c.traced, arg })
            };
            Some([mk(Index::Single(*pivot)), mk(Index::Family(fam.excluding(*pivot)))])
        }
        Term::Mixed(m) => {
            let [a, b] = split_once(&m.tail.clone().into_term(), pivot)?;
            let wrap = |t: Term| {
                let tail = match t {
                    Term::Comm(c) => Tail::Comm(c),
                    Term::TrComm(c) => Tail::TrComm(c),
                    _ => unreachable!(),
                };
                Term::Mixed(Mixed { factors: m.factors.clone(), tail })
            };
            Some([wrap(a), wrap(b)])
        }
        _ => None,
    }
}

fn refine_term(term: Term, pivot: &Single, out: &mut Vec<Term>) {
    match split_once(&term, pivot) {
        Some([one, rest]) => {
            out.push(one);
            refine_term(rest, pivot, out);
        }
        None => out.push(term),
    }
}

/// Splits every family sum that still covers a pivot:
/// `Σ_F X ↦ X|_{F:=F1} + Σ_{F/F1} X`.
///
/// Only bound positions are substituted: operator indices, and the
/// argument of a traced commutator whose trace index is the split family.
/// The output is canonical with zeros dropped; signs are carried through.
pub fn refine_family_sums(terms: &[SignedTerm], pivots: &[Single]) -> Result<Vec<SignedTerm>, Error> {
    let mut current: Vec<SignedTerm> = terms.to_vec();
    for pivot in pivots {
        let mut next = Vec::with_capacity(current.len());
        for t in current {
            let mut parts = Vec::new();
            refine_term(t.term, pivot, &mut parts);
            next.extend(parts.into_iter().map(|term| SignedTerm { sign: t.sign, term }));
        }
        current = next;
    }
    let mut out = Vec::with_capacity(current.len());
    for t in current {
        let term = canonicalize(&t.term)?;
        if !term.is_zero() {
            out.push(SignedTerm { sign: t.sign, term });
        }
    }
    Ok(out)
}

/// Leibniz rule on a matrix or product: one output per factor, each with
/// exactly that factor marked as differentiated, in factor order.
pub fn take_derivative(product: &Term) -> Result<Vec<Term>, Error> {
    let factors = product
        .as_factors()
        .ok_or_else(|| Error::usage(format!("take_derivative expects a matrix product, got {product:?}")))?;
    if factors.iter().any(|f| f.deriv) {
        return Err(Error::usage("take_derivative on a term that already carries a derivative"));
    }
    Ok((0..factors.len())
        .map(|i| {
            let mut v = factors.to_vec();
            v[i].deriv = true;
            Term::from_factors(v)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::PairedIndex;
    use alloc::vec;

    fn s(l: &str) -> Single {
        Single::parse(l).unwrap()
    }
    fn rho(ls: &[&str]) -> MatrixFactor {
        MatrixFactor::density(ls.iter().map(|l| Index::parse(l).unwrap())).unwrap()
    }
    fn g(ls: &[&str]) -> MatrixFactor {
        MatrixFactor::correlation(ls.iter().map(|l| Index::parse(l).unwrap())).unwrap()
    }
    fn op(a: &str, b: &str) -> InteractionOp {
        InteractionOp::new(PairedIndex::new(Index::parse(a).unwrap(), Index::parse(b).unwrap()).unwrap())
    }

    #[test]
    fn density_before_correlation() {
        let t = Term::Product(vec![g(&["A2", "F1"]), rho(&["A1"])]);
        assert_eq!(canonicalize(&t).unwrap(), Term::Product(vec![rho(&["A1"]), g(&["A2", "F1"])]));
    }

    #[test]
    fn identity_and_zero_absorption() {
        let a1 = Term::Matrix(rho(&["A1"]));
        assert_eq!(multiply_terms(&[Term::One, a1.clone()]).unwrap(), a1);
        assert_eq!(multiply_terms(&[a1, Term::Zero]).unwrap(), Term::Zero);
    }

    #[test]
    fn overlapping_product_is_malformed() {
        let t = Term::Product(vec![rho(&["A1"]), g(&["A1", "F1"])]);
        assert!(matches!(canonicalize(&t), Err(Error::Structural(_))));
    }

    #[test]
    fn traced_index_sorts_last() {
        let t = Term::TrComm(TracedCommutator {
            op: op("A1", "F1"),
            traced: Side::First,
            arg: vec![rho(&["A1"]), rho(&["F1"])],
        });
        let Term::TrComm(c) = canonicalize(&t).unwrap() else { panic!() };
        assert_eq!(c.arg, vec![rho(&["F1"]), rho(&["A1"])]);
    }

    #[test]
    fn disjoint_factor_is_hoisted() {
        let t = Term::TrComm(TracedCommutator {
            op: op("A1", "F"),
            traced: Side::Second,
            arg: vec![rho(&["B1"]), rho(&["A1"]), rho(&["F"])],
        });
        let Term::Mixed(m) = canonicalize(&t).unwrap() else { panic!() };
        assert_eq!(m.factors, vec![rho(&["B1"])]);
        assert_eq!(m.tail.arg(), &[rho(&["A1"]), rho(&["F"])]);
    }

    #[test]
    fn fully_hoisted_commutator_vanishes() {
        let t = Term::Comm(Commutator { op: op("A1", "F1"), arg: vec![rho(&["B1"])] });
        assert_eq!(canonicalize(&t).unwrap(), Term::Zero);
    }

    #[test]
    fn refinement_splits_matching_sum() {
        let t = Term::TrComm(TracedCommutator {
            op: op("A1", "F"),
            traced: Side::Second,
            arg: vec![rho(&["A1"]), rho(&["F"])],
        });
        let out = refine_family_sums(&[SignedTerm::plus(t.clone())], &[s("F1")]).unwrap();
        assert_eq!(out.len(), 2);
        let Term::TrComm(one) = &out[0].term else { panic!() };
        assert_eq!(one.trace_index(), &Index::Single(s("F1")));
        assert_eq!(one.arg, vec![rho(&["A1"]), rho(&["F1"])]);
        let Term::TrComm(rest) = &out[1].term else { panic!() };
        assert!(rest.trace_index().as_family().unwrap().excludes(&s("F1")));
        // Already-excluded and letter-mismatched pivots leave the term alone.
        let again = refine_family_sums(&out[1..], &[s("F1"), s("B1")]).unwrap();
        assert_eq!(again, out[1..].to_vec());
    }

    #[test]
    fn leibniz() {
        let t = Term::Product(vec![rho(&["A1"]), rho(&["F1"]), rho(&["B1"])]);
        let d = take_derivative(&t).unwrap();
        assert_eq!(d.len(), 3);
        for (i, x) in d.iter().enumerate() {
            assert_eq!(x.deriv_count(), 1);
            assert!(x.as_factors().unwrap()[i].deriv);
        }
        assert_eq!(take_derivative(&Term::Matrix(g(&["A1", "F1"]))).unwrap().len(), 1);
        assert!(take_derivative(&d[0]).is_err());
        assert!(take_derivative(&Term::Zero).is_err());
    }

    #[test]
    fn normalize_cancels_pairs() {
        let a = Term::Comm(Commutator { op: op("A1", "F1"), arg: vec![g(&["A1", "F1"])] });
        let out = normalize(vec![SignedTerm::plus(a.clone()), SignedTerm::minus(a.clone())]).unwrap();
        assert!(out.is_empty());
        let out = normalize(vec![SignedTerm::plus(a.clone()), SignedTerm::plus(Term::Zero)]).unwrap();
        assert_eq!(out, vec![SignedTerm::plus(a)]);
    }
}
