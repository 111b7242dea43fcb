//! Cluster decomposition of multi-subsystem density matrices.

use alloc::format;
use alloc::vec::Vec;
use core::cmp::Reverse;

use crate::canon::canonicalize;
use crate::error::Error;
use crate::index::{Index, Single};
use crate::ir::{MatrixFactor, MatrixKind, Mixed, SignedTerm, Tail, Term};

/// Which cluster decomposition to use for densities of four or more
/// subsystems. Both agree up to three.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum ExpansionMode {
    /// Product of single densities, then every single-correlation term
    /// `ρ…ρ g_S` with `2 ≤ |S| ≤ n-1`, then the full correlation.
    #[default]
    SingleCorrelation,
    /// The full set-partition (Ursell) expansion, including products of
    /// several correlation matrices.
    Ursell,
}

impl ExpansionMode {
    pub fn name(self) -> &'static str {
        match self {
            ExpansionMode::SingleCorrelation => "paper",
            ExpansionMode::Ursell => "ursell",
        }
    }
}

impl core::str::FromStr for ExpansionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "paper" => Ok(ExpansionMode::SingleCorrelation),
            "ursell" => Ok(ExpansionMode::Ursell),
            other => Err(Error::usage(format!("unknown expansion mode {other:?}"))),
        }
    }
}

/// Position subsets of `0..n` with `size` elements, in lexicographic order.
fn combinations(n: usize, size: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, size: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < size - cur.len() {
                break;
            }
            cur.push(i);
            go(i + 1, n, size, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, size, &mut Vec::new(), &mut out);
    out
}

/// Set partitions of `0..n`, finest first and the single block last.
fn set_partitions(n: usize) -> Vec<Vec<Vec<usize>>> {
    fn go(i: usize, n: usize, blocks: &mut Vec<Vec<usize>>, out: &mut Vec<Vec<Vec<usize>>>) {
        if i == n {
            out.push(blocks.clone());
            return;
        }
        for b in 0..blocks.len() {
            blocks[b].push(i);
            go(i + 1, n, blocks, out);
            blocks[b].pop();
        }
        blocks.push(alloc::vec![i]);
        go(i + 1, n, blocks, out);
        blocks.pop();
    }
    let mut out = Vec::new();
    go(0, n, &mut Vec::new(), &mut out);
    for p in out.iter_mut() {
        p.sort();
    }
    out.sort_by(|a, b| (Reverse(a.len()), a).cmp(&(Reverse(b.len()), b)));
    out
}

fn block_factor(labels: &[Index], block: &[usize]) -> MatrixFactor {
    let kind = if block.len() == 1 { MatrixKind::Density } else { MatrixKind::Correlation };
    MatrixFactor { kind, indices: block.iter().map(|&i| labels[i].clone()).collect(), deriv: false }
}

/// Cluster expansion over arbitrary labels; families are taken to be bound
/// summation variables and treated like singles.
pub(crate) fn expand_labels(labels: &[Index], mode: ExpansionMode) -> Result<Vec<Term>, Error> {
    let n = labels.len();
    if n == 0 {
        return Err(Error::structural("cluster expansion of a matrix without indices"));
    }
    for (i, a) in labels.iter().enumerate() {
        if labels[i + 1..].iter().any(|b| a.overlaps(b)) {
            return Err(Error::structural(format!("repeated index {a:?} in cluster expansion")));
        }
    }
    let partitions: Vec<Vec<Vec<usize>>> = match mode {
        ExpansionMode::Ursell => set_partitions(n),
        ExpansionMode::SingleCorrelation => {
            let mut parts = alloc::vec![(0..n).map(|i| alloc::vec![i]).collect::<Vec<_>>()];
            for size in 2..n {
                for subset in combinations(n, size) {
                    let mut p: Vec<Vec<usize>> = (0..n).filter(|i| !subset.contains(i)).map(|i| alloc::vec![i]).collect();
                    p.push(subset);
                    parts.push(p);
                }
            }
            if n > 1 {
                parts.push(alloc::vec![(0..n).collect()]);
            }
            parts
        }
    };
    partitions
        .iter()
        .map(|p| canonicalize(&Term::from_factors(p.iter().map(|b| block_factor(labels, b)).collect())))
        .collect()
}

/// Expands `ρ_{indices}` into products of single densities and correlation
/// matrices.
///
/// In single-correlation mode the result has `2 + Σ_{k=2}^{n-1} C(n,k)` terms (one for
/// `n = 1`); in Ursell mode it has `Bell(n)` terms. The first term is the
/// product of single densities and the last is the full correlation.
pub fn cluster_expand(indices: &[Single], mode: ExpansionMode) -> Result<Vec<Term>, Error> {
    let labels: Vec<Index> = indices.iter().map(|s| Index::Single(*s)).collect();
    expand_labels(&labels, mode)
}

/// Cluster-expands every multi-index density in a commutator's argument,
/// one output term per combination. Signs are inherited.
pub fn expand_commutator(term: &SignedTerm, mode: ExpansionMode) -> Result<Vec<SignedTerm>, Error> {
    let (factors, tail) = match &term.term {
        Term::Comm(c) => (Vec::new(), Tail::Comm(c.clone())),
        Term::TrComm(c) => (Vec::new(), Tail::TrComm(c.clone())),
        Term::Mixed(m) => (m.factors.clone(), m.tail.clone()),
        other => return Err(Error::usage(format!("expand_commutator expects a commutator, got {other:?}"))),
    };
    let bound = match &tail {
        Tail::TrComm(c) => c.trace_index().as_family().map(|f| f.letter()),
        Tail::Comm(_) => None,
    };
    let mut combos: Vec<Vec<MatrixFactor>> = alloc::vec![Vec::new()];
    for f in tail.arg() {
        let choices: Vec<Vec<MatrixFactor>> = if f.is_density() && f.indices.len() >= 2 {
            if let Some(fam) = f.indices.iter().filter_map(Index::as_family).find(|fam| Some(fam.letter()) != bound) {
                return Err(Error::usage(format!(
                    "cluster expansion of a density carrying the unbound family {}",
                    fam.letter()
                )));
            }
            expand_labels(&f.indices, mode)?
                .into_iter()
                .map(|t| t.as_factors().map(<[_]>::to_vec).unwrap_or_default())
                .collect()
        } else {
            alloc::vec![alloc::vec![f.clone()]]
        };
        combos = combos
            .iter()
            .flat_map(|prefix| {
                choices.iter().map(move |c| {
                    let mut v = prefix.clone();
                    v.extend(c.iter().cloned());
                    v
                })
            })
            .collect();
    }
    let mut out = Vec::with_capacity(combos.len());
    for arg in combos {
        let new_tail = match &tail {
            Tail::Comm(c) => Tail::Comm(crate::ir::Commutator { op: c.op.clone(), arg }),
            Tail::TrComm(c) => Tail::TrComm(crate::ir::TracedCommutator { op: c.op.clone(), traced: c.traced, arg }),
        };
        let t = if factors.is_empty() {
            new_tail.into_term()
        } else {
            Term::Mixed(Mixed { factors: factors.clone(), tail: new_tail })
        };
        let t = canonicalize(&t)?;
        if !t.is_zero() {
            out.push(SignedTerm { sign: term.sign, term: t });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bell(n: usize) -> usize {
        // Bell triangle.
        let mut row = alloc::vec![1usize];
        for _ in 1..n {
            let mut next = alloc::vec![*row.last().unwrap()];
            for x in &row {
                let v = *next.last().unwrap() + x;
                next.push(v);
            }
            row = next;
        }
        *row.last().unwrap()
    }

    fn binom(n: usize, k: usize) -> usize {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn partition_enumeration() {
        for n in 1..=6 {
            let p = set_partitions(n);
            assert_eq!(p.len(), bell(n));
            assert_eq!(p[0].len(), n);
            assert_eq!(p.last().unwrap().len(), 1);
        }
        assert_eq!(combinations(4, 2), [[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]]);
        assert_eq!(binom(5, 2), 10);
    }
}
