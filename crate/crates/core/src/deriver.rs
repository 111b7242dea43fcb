//! Derivation of hierarchy equations.
//!
//! For a target set of subsystems `S` the deriver
//!
//! 1. builds the interaction-picture von Neumann equation of the whole
//!    ensemble, one commutator per declared interaction;
//! 2. traces it over everything outside `S` and cluster-expands the
//!    commutator arguments, giving `iħ d/dt ρ_S`;
//! 3. cluster-expands `ρ_S` itself and differentiates every term with the
//!    product rule;
//! 4. obtains the equation of every differentiated factor other than
//!    `g_S` (recursively, through the memo);
//! 5. multiplies each such equation by the remaining factors of its term
//!    and subtracts it, cancelling equal terms.
//!
//! Family sums are refined against the target labels before any
//! comparison, so that `Σ_F` from a sub-equation meets `F1 + Σ_{F/F1}` in
//! the main list.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::vec::Vec;

use crate::canon::{multiply_factors, normalize, refine_family_sums, take_derivative};
use crate::cluster::{cluster_expand, expand_commutator, ExpansionMode};
use crate::error::Error;
use crate::index::{Family, Index, PairedIndex, Single};
use crate::ir::{Commutator, Equation, InteractionOp, MatrixFactor, MatrixKind, SignedTerm, Term};
use crate::trace::{trace_commutator, TraceSet};

/// A statistical ensemble: family letters (formally infinite sets of
/// same-type subsystems), standalone single subsystems, and the ordered
/// list of pairwise interactions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemSpec {
    families: BTreeSet<char>,
    singles: BTreeSet<Single>,
    interactions: Vec<PairedIndex>,
}

impl SystemSpec {
    pub fn new<F, S, I>(families: F, singles: S, interactions: I) -> Result<Self, Error>
    where
        F: IntoIterator<Item = char>,
        S: IntoIterator<Item = Single>,
        I: IntoIterator<Item = PairedIndex>,
    {
        let spec = SystemSpec {
            families: families.into_iter().collect(),
            singles: singles.into_iter().collect(),
            interactions: interactions.into_iter().collect(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn families(&self) -> &BTreeSet<char> {
        &self.families
    }

    /// Standalone singles, i.e. subsystems whose letter is not a family.
    pub fn singles(&self) -> &BTreeSet<Single> {
        &self.singles
    }

    pub fn interactions(&self) -> &[PairedIndex] {
        &self.interactions
    }

    /// Whether `s` names a subsystem of the ensemble: a standalone single or
    /// a member of a declared family.
    pub fn has_subsystem(&self, s: &Single) -> bool {
        self.families.contains(&s.letter()) || self.singles.contains(s)
    }

    fn validate(&self) -> Result<(), Error> {
        for f in &self.families {
            Family::new(*f)?;
        }
        if let Some(s) = self.singles.iter().find(|s| self.families.contains(&s.letter())) {
            return Err(Error::spec(format!("{s} is declared as a single but {} is a family", s.letter())));
        }
        for pair in &self.interactions {
            if pair.first.letter() == pair.second.letter() {
                return Err(Error::spec(format!("interaction within one subsystem type {}", pair.first.letter())));
            }
            for idx in [&pair.first, &pair.second] {
                match idx {
                    Index::Family(f) => {
                        if !self.families.contains(&f.letter()) || f.excluded_count() > 0 {
                            return Err(Error::spec(format!("interaction refers to undeclared family {}", f.letter())));
                        }
                    }
                    Index::Single(s) => {
                        if !self.has_subsystem(s) {
                            return Err(Error::spec(format!("interaction refers to undeclared subsystem {s}")));
                        }
                    }
                }
            }
        }
        for (i, a) in self.interactions.iter().enumerate() {
            for b in &self.interactions[i + 1..] {
                let same = a.first.overlaps(&b.first) && a.second.overlaps(&b.second);
                let swapped = a.first.overlaps(&b.second) && a.second.overlaps(&b.first);
                if same || swapped {
                    return Err(Error::spec(format!("interactions {a:?} and {b:?} describe the same pairs")));
                }
            }
        }
        Ok(())
    }

    /// Checks a derivation target and returns it sorted.
    pub fn check_target(&self, target: &[Single]) -> Result<Vec<Single>, Error> {
        if target.is_empty() {
            return Err(Error::spec("empty derivation target"));
        }
        let mut sorted = target.to_vec();
        sorted.sort();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::spec("repeated label in derivation target"));
        }
        if let Some(s) = sorted.iter().find(|s| !self.has_subsystem(s)) {
            return Err(Error::spec(format!("unknown subsystem {s}")));
        }
        Ok(sorted)
    }

    /// The density matrix of the whole ensemble, e.g. `ρ_A1{B}{F}`.
    pub fn full_density(&self) -> MatrixFactor {
        let mut indices: Vec<Index> = self.singles.iter().map(|s| Index::Single(*s)).collect();
        indices.extend(self.families.iter().map(|&l| Index::Family(Family::new(l).expect("validated"))));
        MatrixFactor { kind: MatrixKind::Density, indices, deriv: false }
    }

    /// Everything outside `target`: families carry the target members as
    /// exclusions.
    pub fn complement(&self, target: &[Single]) -> Result<TraceSet, Error> {
        let mut indices: Vec<Index> = Vec::new();
        for &letter in &self.families {
            let fam = Family::with_exclusions(letter, target.iter().copied().filter(|s| s.letter() == letter))?;
            indices.push(Index::Family(fam));
        }
        indices.extend(self.singles.iter().filter(|s| !target.contains(s)).map(|s| Index::Single(*s)));
        TraceSet::new(indices)
    }
}

/// Storage for already derived equations, keyed by the sorted target.
///
/// A store belongs to one system and one expansion mode.
pub trait MemoStore {
    fn mode(&self) -> ExpansionMode;
    fn lookup(&mut self, key: &[Single]) -> Option<Equation>;
    fn store(&mut self, key: Vec<Single>, eq: Equation);
}

#[derive(Debug, Clone, Default)]
pub struct DerivationMemo {
    mode: ExpansionMode,
    entries: BTreeMap<Vec<Single>, Equation>,
}

impl DerivationMemo {
    pub fn new(mode: ExpansionMode) -> Self {
        DerivationMemo { mode, entries: BTreeMap::new() }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, key: &[Single]) -> Option<&Equation> {
        self.entries.get(key)
    }
}

impl MemoStore for DerivationMemo {
    fn mode(&self) -> ExpansionMode {
        self.mode
    }

    fn lookup(&mut self, key: &[Single]) -> Option<Equation> {
        self.entries.get(key).cloned()
    }

    fn store(&mut self, key: Vec<Single>, eq: Equation) {
        self.entries.insert(key, eq);
    }
}

/// `iħ d/dt ρ = Σ_pairs [V_uv, ρ]` for the whole ensemble, in the
/// interaction picture.
pub fn build_master_equation(spec: &SystemSpec) -> Result<Equation, Error> {
    if spec.interactions.is_empty() {
        return Err(Error::spec("the system declares no interactions"));
    }
    let rho = spec.full_density();
    let rhs = spec
        .interactions
        .iter()
        .map(|pair| SignedTerm::plus(Term::Comm(Commutator { op: InteractionOp::new(pair.clone()), arg: alloc::vec![rho.clone()] })))
        .collect();
    Ok(Equation { lhs: rho.with_deriv(true), rhs })
}

/// Multiplies a sub-equation through by `multiplier`, refines its sums
/// against `pivots`, and subtracts it from `main_rhs`.
///
/// Equal terms of opposite sign cancel; subtrahends with no partner stay
/// with a negative sign.
pub fn subtract_scaled(
    main_rhs: Vec<SignedTerm>,
    sub_eq: &Equation,
    multiplier: &[MatrixFactor],
    pivots: &[Single],
) -> Result<Vec<SignedTerm>, Error> {
    let mut out = main_rhs;
    for t in refine_family_sums(&sub_eq.rhs, pivots)? {
        let scaled = multiply_factors(multiplier, &t.term)?;
        out.push(SignedTerm { sign: -t.sign, term: scaled });
    }
    normalize(out)
}

/// Derives `iħ d/dt g_target` (`ρ_target` for a single label).
pub fn derive<M: MemoStore + ?Sized>(spec: &SystemSpec, target: &[Single], memo: &mut M) -> Result<Equation, Error> {
    let key = spec.check_target(target)?;
    if let Some(eq) = memo.lookup(&key) {
        return Ok(eq);
    }
    let eq = derive_uncached(spec, &key, memo)?;
    memo.store(key, eq.clone());
    Ok(eq)
}

fn derive_uncached<M: MemoStore + ?Sized>(spec: &SystemSpec, target: &[Single], memo: &mut M) -> Result<Equation, Error> {
    let mode = memo.mode();
    let master = build_master_equation(spec)?;
    let outside = spec.complement(target)?;

    let mut rhs = Vec::new();
    for t in &master.rhs {
        let Term::Comm(c) = &t.term else { unreachable!("master equation holds commutators only") };
        for traced in trace_commutator(c, &outside)? {
            let traced = SignedTerm { sign: t.sign * traced.sign, term: traced.term };
            rhs.extend(expand_commutator(&traced, mode)?);
        }
    }
    let mut rhs = refine_family_sums(&rhs, target)?;

    let labels: Vec<Index> = target.iter().map(|s| Index::Single(*s)).collect();
    if target.len() == 1 {
        let lhs = MatrixFactor { kind: MatrixKind::Density, indices: labels, deriv: true };
        return Ok(Equation { lhs, rhs: normalize(rhs)? });
    }

    let expansion = cluster_expand(target, mode)?;
    let (_, lower) = expansion.split_last().expect("non-empty expansion");
    for term in lower {
        for d in take_derivative(term)? {
            let factors = d.as_factors().expect("derivative of a product");
            let (marked, rest): (Vec<&MatrixFactor>, Vec<&MatrixFactor>) = factors.iter().partition(|f| f.deriv);
            let marked = marked[0];
            let sub_target = marked.singles().ok_or_else(|| Error::structural("differentiated factor with a family index"))?;
            assert!(sub_target.len() < target.len(), "sub-equation order must decrease");
            let sub = derive(spec, &sub_target, memo)?;
            let multiplier: Vec<MatrixFactor> = rest.into_iter().cloned().collect();
            rhs = subtract_scaled(rhs, &sub, &multiplier, target)?;
        }
    }
    let lhs = MatrixFactor { kind: MatrixKind::Correlation, indices: labels, deriv: true };
    Ok(Equation { lhs, rhs: normalize(rhs)? })
}
