use std::collections::BTreeSet;

use bbgky_core::*;
use proptest::prelude::*;

fn s(l: &str) -> Single {
    Single::parse(l).unwrap()
}

fn pair(a: &str, b: &str) -> PairedIndex {
    PairedIndex::new(Index::parse(a).unwrap(), Index::parse(b).unwrap()).unwrap()
}

fn binom(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

fn bell(n: usize) -> usize {
    // B(n+1) = sum_k C(n,k) B(k)
    let mut b = vec![1usize];
    for m in 0..n {
        b.push((0..=m).map(|k| binom(m, k) * b[k]).sum());
    }
    b[n]
}

fn labels(n: usize) -> Vec<Single> {
    // Mix letters so that ordering inside factors is exercised.
    let letters = ['A', 'F', 'B'];
    (0..n).map(|i| Single::new(letters[i % 3], (i / 3 + 1) as u32).unwrap()).collect()
}

fn modes() -> [ExpansionMode; 2] {
    [ExpansionMode::SingleCorrelation, ExpansionMode::Ursell]
}

#[test]
fn cluster_term_counts() {
    for n in 1..=6 {
        let single = if n == 1 { 1 } else { 2 + (2..n).map(|k| binom(n, k)).sum::<usize>() };
        assert_eq!(cluster_expand(&labels(n), ExpansionMode::SingleCorrelation).unwrap().len(), single, "single-correlation n={n}");
        assert_eq!(cluster_expand(&labels(n), ExpansionMode::Ursell).unwrap().len(), bell(n), "ursell n={n}");
    }
    assert_eq!(
        [2, 3, 4].map(|n| cluster_expand(&labels(n), ExpansionMode::SingleCorrelation).unwrap().len()),
        [2, 5, 12]
    );
    assert_eq!(cluster_expand(&labels(4), ExpansionMode::Ursell).unwrap().len(), 15);
}

#[test]
fn cluster_partial_trace_consistency() {
    for mode in modes() {
        for n in 2..=5 {
            let full = labels(n);
            for (k, x) in full.iter().enumerate() {
                let trace = TraceSet::new([*x]).unwrap();
                let traced: Vec<SignedTerm> = cluster_expand(&full, mode)
                    .unwrap()
                    .iter()
                    .map(|t| SignedTerm::plus(trace_product(t, &trace).unwrap()))
                    .collect();
                let mut rest = full.clone();
                rest.remove(k);
                let expected: Vec<SignedTerm> =
                    cluster_expand(&rest, mode).unwrap().into_iter().map(SignedTerm::plus).collect();
                assert_eq!(normalize(traced).unwrap(), normalize(expected).unwrap(), "{mode:?} n={n} over {x}");
            }
        }
    }
}

fn system() -> SystemSpec {
    SystemSpec::new(['A', 'B', 'F'], [], [pair("A", "F"), pair("B", "F")]).unwrap()
}

#[test]
fn full_trace_annihilates_commutators() {
    let spec = system();
    let rho = spec.full_density();
    for p in spec.interactions() {
        let comm = Commutator { op: InteractionOp::new(p.clone()), arg: vec![rho.clone()] };
        let all = TraceSet::new(spec.families().iter().map(|&l| Family::new(l).unwrap())).unwrap();
        assert!(trace_commutator(&comm, &all).unwrap().is_empty());
    }
    let comm = Commutator {
        op: InteractionOp::new(pair("A1", "F1")),
        arg: vec![MatrixFactor::density([s("A1"), s("F1"), s("B1")]).unwrap()],
    };
    let all = TraceSet::new([s("A1"), s("F1"), s("B1")]).unwrap();
    assert!(trace_commutator(&comm, &all).unwrap().is_empty());
}

/// Random well-formed terms: a set of singles split into blocks, optionally
/// placed inside a (traced) commutator.
fn arb_term() -> impl Strategy<Value = Term> {
    let pool: Vec<Single> = ["A1", "A2", "A3", "B1", "B2", "F1", "F2", "F3"].iter().map(|l| s(l)).collect();
    (
        proptest::sample::subsequence(pool, 1..=6).prop_shuffle(),
        proptest::collection::vec(any::<bool>(), 6),
        proptest::collection::vec(any::<bool>(), 6),
        0usize..4,
    )
        .prop_map(|(labels, cuts, kinds, shape)| {
            let mut blocks: Vec<Vec<Single>> = vec![vec![labels[0]]];
            for (i, l) in labels.iter().enumerate().skip(1) {
                if cuts[i] {
                    blocks.push(vec![*l]);
                } else {
                    blocks.last_mut().unwrap().push(*l);
                }
            }
            let factors: Vec<MatrixFactor> = blocks
                .iter()
                .enumerate()
                .map(|(i, b)| {
                    if b.len() >= 2 && kinds[i] {
                        MatrixFactor::correlation(b.iter().copied()).unwrap()
                    } else {
                        MatrixFactor::density(b.iter().copied()).unwrap()
                    }
                })
                .collect();
            let first = labels[0];
            let other = labels.iter().find(|l| l.letter() != first.letter()).copied();
            match (shape, other) {
                (1, Some(o)) => Term::Comm(Commutator {
                    op: InteractionOp::new(PairedIndex::new(first.into(), o.into()).unwrap()),
                    arg: factors,
                }),
                (2, Some(o)) => Term::TrComm(TracedCommutator {
                    op: InteractionOp::new(PairedIndex::new(first.into(), o.into()).unwrap()),
                    traced: Side::Second,
                    arg: factors,
                }),
                (3, _) => {
                    let letter = if first.letter() == 'A' { 'F' } else { 'A' };
                    let fam = Family::with_exclusions(letter, labels.iter().copied().filter(|l| l.letter() == letter)).unwrap();
                    Term::Comm(Commutator {
                        op: InteractionOp::new(PairedIndex::new(first.into(), fam.into()).unwrap()),
                        arg: factors,
                    })
                }
                _ => Term::from_factors(factors),
            }
        })
}

proptest! {
    #[test]
    fn canonicalize_is_idempotent(t in arb_term()) {
        let once = canonicalize(&t).unwrap();
        prop_assert_eq!(canonicalize(&once).unwrap(), once);
    }

    #[test]
    fn terms_equal_is_an_equivalence(a in arb_term(), b in arb_term(), c in arb_term()) {
        let (a, b, c) = (canonicalize(&a).unwrap(), canonicalize(&b).unwrap(), canonicalize(&c).unwrap());
        prop_assert!(terms_equal(&a, &a));
        prop_assert_eq!(terms_equal(&a, &b), terms_equal(&b, &a));
        if terms_equal(&a, &b) && terms_equal(&b, &c) {
            prop_assert!(terms_equal(&a, &c));
        }
    }

    #[test]
    fn derivative_marks_each_factor_once(t in arb_term()) {
        let t = canonicalize(&t).unwrap();
        if let Some(factors) = t.as_factors() {
            let out = take_derivative(&t).unwrap();
            prop_assert_eq!(out.len(), factors.len());
            for d in &out {
                prop_assert_eq!(d.deriv_count(), 1);
            }
        }
    }

    #[test]
    fn trace_is_linear(ts in proptest::collection::vec(arb_term(), 1..5), pick in 0usize..8) {
        let pool = ["A1", "A2", "A3", "B1", "B2", "F1", "F2", "F3"];
        let x = s(pool[pick]);
        let products: Vec<SignedTerm> = ts
            .into_iter()
            .map(|t| canonicalize(&t).unwrap())
            .filter(|t| t.as_factors().is_some_and(|f| f.iter().any(|m| m.overlaps_index(&x.into()))))
            .map(SignedTerm::plus)
            .collect();
        let trace = TraceSet::new([x]).unwrap();
        let together = trace_terms(&products, &trace).unwrap();
        let one_by_one: Vec<SignedTerm> = products
            .iter()
            .flat_map(|t| trace_terms(std::slice::from_ref(t), &trace).unwrap())
            .collect();
        prop_assert_eq!(together, one_by_one);
    }

    #[test]
    fn correlation_kill_rule(t in arb_term(), pick in 0usize..8) {
        let pool = ["A1", "A2", "A3", "B1", "B2", "F1", "F2", "F3"];
        let x: Index = s(pool[pick]).into();
        let t = canonicalize(&t).unwrap();
        if let Some(factors) = t.as_factors() {
            let hits_g = factors.iter().any(|m| m.is_correlation() && m.overlaps_index(&x));
            let hits_any = factors.iter().any(|m| m.overlaps_index(&x));
            if hits_any {
                let r = trace_product(&t, &TraceSet::new([x]).unwrap()).unwrap();
                prop_assert_eq!(r.is_zero(), hits_g);
            }
        }
    }
}

/// Random ensembles over the letters A, B, C, F with a random interaction
/// graph.
fn arb_spec() -> impl Strategy<Value = SystemSpec> {
    (
        proptest::sample::subsequence(vec!['A', 'B', 'F'], 1..=3),
        any::<bool>(),
        proptest::collection::vec(any::<bool>(), 6),
    )
        .prop_filter_map("no interactions", |(families, with_c1, edges)| {
            let mut nodes: Vec<String> = families.iter().map(|c| c.to_string()).collect();
            if with_c1 {
                nodes.push("C1".into());
            }
            let mut pairs = Vec::new();
            let mut k = 0;
            for i in 0..nodes.len() {
                for j in i + 1..nodes.len() {
                    if edges[k % edges.len()] {
                        pairs.push(pair(&nodes[i], &nodes[j]));
                    }
                    k += 1;
                }
            }
            if pairs.is_empty() {
                return None;
            }
            let singles: Vec<Single> = if with_c1 { vec![s("C1")] } else { vec![] };
            SystemSpec::new(families, singles, pairs).ok()
        })
}

fn arb_target(spec: &SystemSpec, picks: &[usize], n: usize) -> Vec<Single> {
    let mut pool: Vec<Single> = spec.singles().iter().copied().collect();
    for &l in spec.families() {
        for o in 1..=3 {
            pool.push(Single::new(l, o).unwrap());
        }
    }
    let mut out = BTreeSet::new();
    for p in picks {
        if out.len() == n {
            break;
        }
        out.insert(pool[p % pool.len()]);
    }
    out.into_iter().collect()
}

/// Records every memo access to check the recursion order.
struct Recording {
    inner: DerivationMemo,
    looked_up: Vec<usize>,
}

impl MemoStore for Recording {
    fn mode(&self) -> ExpansionMode {
        self.inner.mode()
    }
    fn lookup(&mut self, key: &[Single]) -> Option<Equation> {
        self.looked_up.push(key.len());
        self.inner.lookup(key)
    }
    fn store(&mut self, key: Vec<Single>, eq: Equation) {
        self.inner.store(key, eq)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn derivation_properties(
        spec in arb_spec(),
        picks in proptest::collection::vec(0usize..64, 6),
        n in 1usize..=3,
        ursell in any::<bool>(),
    ) {
        let mode = if ursell { ExpansionMode::Ursell } else { ExpansionMode::SingleCorrelation };
        let target = arb_target(&spec, &picks, n);
        let mut cold = DerivationMemo::new(mode);
        let eq = derive(&spec, &target, &mut cold).unwrap();
        eq.validate().unwrap();

        // determinism and memo soundness
        let again = derive(&spec, &target, &mut DerivationMemo::new(mode)).unwrap();
        prop_assert_eq!(&again, &eq);
        let mut warm = DerivationMemo::new(mode);
        for sub in target.iter() {
            derive(&spec, &[*sub], &mut warm).unwrap();
        }
        prop_assert_eq!(&derive(&spec, &target, &mut warm).unwrap(), &eq);

        // strictly decreasing recursion
        let mut rec = Recording { inner: DerivationMemo::new(mode), looked_up: Vec::new() };
        derive(&spec, &target, &mut rec).unwrap();
        prop_assert_eq!(rec.looked_up[0], target.len());
        prop_assert!(rec.looked_up[1..].iter().all(|&k| k < target.len()));

        // rendering is total and stable
        prop_assert_eq!(to_latex(&eq), to_latex(&again));
        prop_assert_eq!(display(&eq), display(&again));

        if mode == ExpansionMode::SingleCorrelation {
            for t in &eq.rhs {
                prop_assert!(t.term.argument_correlations() <= 1, "{}", display(&t.term));
            }
        }
    }
}

#[test]
fn empty_rhs_renders_zero() {
    // A1 interacts with nothing that survives the trace: its equation is empty.
    let spec = SystemSpec::new(['F'], [s("A1"), s("B1")], [pair("B1", "F")]).unwrap();
    let eq = derive(&spec, &[s("A1")], &mut DerivationMemo::new(ExpansionMode::SingleCorrelation)).unwrap();
    assert!(eq.rhs.is_empty());
    assert!(to_latex(&eq).ends_with("= 0"));
}
