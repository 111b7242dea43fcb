//! Numeric check of derived equations on small dense systems.
//!
//! Every family is instantiated with a finite number of members, every
//! subsystem gets a small Hilbert space, and every concrete interaction pair
//! gets a random Hermitian `V`. The full density matrix is a random mixed
//! state with both classical and quantum correlations.
//!
//! Reduced matrices `f_S` are partial traces of `ρ` and correlation
//! matrices are obtained by inverting the cluster expansion of the chosen
//! mode. Time derivatives are exact: `iħ d/dt f_S = Tr_{¬S} Σ [V_uv, ρ]`,
//! and derivatives of correlation matrices follow by the product rule. An
//! equation passes when both sides agree as matrices.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};

use bbgky_core::{
    cluster_expand, Equation, ExpansionMode, Index, MatrixFactor, MatrixKind, Render, Side, Sign, Single, SystemSpec,
    Tail, Term,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dense::Operator;
use crate::error::AppError;

/// Largest full Hilbert-space side the oracle will build.
pub const MAX_SIDE: usize = 1 << 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    pub seed: u64,
    /// Hilbert-space dimension of every subsystem.
    pub dim: usize,
    /// Minimum number of members per family.
    pub members: u32,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { seed: 1, dim: 2, members: 3 }
    }
}

/// A finite, seeded stand-in for a [`SystemSpec`].
#[derive(Debug, Clone)]
pub struct ConcreteSystem {
    config: OracleConfig,
    members: BTreeMap<char, u32>,
    sites: Vec<Single>,
    pairs: BTreeMap<(Single, Single), Operator>,
    rho: Operator,
}

fn random_complex(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

fn random_unit_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
    let v: Vec<Complex64> = (0..n).map(|_| random_complex(rng)).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}

fn add_projector(data: &mut [Complex64], v: &[Complex64], weight: f64) {
    let n = v.len();
    for r in 0..n {
        for c in 0..n {
            data[r * n + c] += v[r] * v[c].conj() * weight;
        }
    }
}

impl ConcreteSystem {
    /// Builds a system large enough for every target in `targets`: each
    /// family gets all target members plus at least one more.
    pub fn new(spec: &SystemSpec, targets: &[Vec<Single>], config: OracleConfig) -> Result<Self, AppError> {
        if config.dim < 2 {
            return Err(AppError::Usage("subsystem dimension must be at least 2".into()));
        }
        let mut members = BTreeMap::new();
        for &letter in spec.families() {
            let mut need = config.members.max(1);
            for t in targets {
                let own: Vec<u32> = t.iter().filter(|s| s.letter() == letter).map(|s| s.ordinal()).collect();
                let max = own.iter().copied().max().unwrap_or(0);
                need = need.max(max).max(own.len() as u32 + 1);
            }
            members.insert(letter, need);
        }
        let mut sites: Vec<Single> = spec.singles().iter().copied().collect();
        for (&letter, &m) in &members {
            for o in 1..=m {
                sites.push(Single::new(letter, o)?);
            }
        }
        sites.sort();
        let side = sites.iter().try_fold(1usize, |acc, _| acc.checked_mul(config.dim).filter(|&x| x <= MAX_SIDE));
        let Some(side) = side else {
            return Err(AppError::Usage(format!(
                "{} subsystems of dimension {} exceed the oracle limit of {MAX_SIDE}",
                sites.len(),
                config.dim
            )));
        };

        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let expand = |idx: &Index| -> Vec<Single> {
            match idx {
                Index::Single(s) => vec![*s],
                Index::Family(f) => (1..=members[&f.letter()]).map(|o| Single::new(f.letter(), o).unwrap()).filter(|s| f.covers(s)).collect(),
            }
        };
        let d2 = config.dim * config.dim;
        let mut pairs = BTreeMap::new();
        for p in spec.interactions() {
            for u in expand(&p.first) {
                for v in expand(&p.second) {
                    let mut data = vec![Complex64::new(0.0, 0.0); d2 * d2];
                    for r in 0..d2 {
                        for c in r..d2 {
                            let z = if r == c { Complex64::new(rng.gen_range(-1.0..1.0), 0.0) } else { random_complex(&mut rng) };
                            data[r * d2 + c] = z;
                            data[c * d2 + r] = z.conj();
                        }
                    }
                    let mut key = [u, v];
                    key.sort();
                    pairs.insert((u, v), Operator::new(key.to_vec(), vec![config.dim; 2], data)?);
                }
            }
        }

        // A mixture of random product states (classical correlations) and
        // one random entangled pure state.
        let mut data = vec![Complex64::new(0.0, 0.0); side * side];
        let weights: Vec<f64> = (0..3).map(|_| rng.gen_range(0.2..1.0)).collect();
        let total: f64 = weights.iter().sum();
        for w in &weights {
            let mut v = vec![Complex64::new(1.0, 0.0)];
            for _ in &sites {
                let local = random_unit_vector(&mut rng, config.dim);
                v = v.iter().flat_map(|a| local.iter().map(move |b| a * b)).collect();
            }
            add_projector(&mut data, &v, 0.6 * w / total);
        }
        add_projector(&mut data, &random_unit_vector(&mut rng, side), 0.4);
        let rho = Operator::new(sites.clone(), vec![config.dim; sites.len()], data)?;
        Ok(ConcreteSystem { config, members, sites, pairs, rho })
    }

    pub fn config(&self) -> OracleConfig {
        self.config
    }

    pub fn sites(&self) -> &[Single] {
        &self.sites
    }

    pub fn members(&self, letter: char) -> u32 {
        self.members.get(&letter).copied().unwrap_or(0)
    }

    pub fn rho(&self) -> &Operator {
        &self.rho
    }

    /// Concrete interaction pairs in declaration order of their indices.
    pub fn pairs(&self) -> impl Iterator<Item = (&(Single, Single), &Operator)> {
        self.pairs.iter()
    }

    fn interaction(&self, u: Single, v: Single) -> Result<&Operator, AppError> {
        self.pairs.get(&(u, v)).ok_or_else(|| AppError::structural(format!("no interaction V_{u}{v} in the system")))
    }

    /// `Σ_pairs [V_uv, ρ]`, i.e. `iħ d/dt ρ`.
    pub fn liouvillian_rho(&self) -> Result<Operator, AppError> {
        let mut out = Operator::zeros(self.sites.clone(), self.rho.dims().to_vec());
        for ((u, v), op) in &self.pairs {
            let mut key = [*u, *v];
            key.sort();
            out.add_assign_scaled(&self.rho.commutator_with(&key, op)?, 1.0)?;
        }
        Ok(out)
    }

    /// Members of `idx` present in this system.
    fn expand(&self, idx: &Index) -> Vec<Single> {
        match idx {
            Index::Single(s) => vec![*s],
            Index::Family(f) => (1..=self.members(f.letter())).filter_map(|o| Single::new(f.letter(), o).ok()).filter(|s| f.covers(s)).collect(),
        }
    }
}

/// Factors of one cluster term, as kind and sites.
type ClusterTerm = Vec<(MatrixKind, Vec<Single>)>;

type Cache = RefCell<HashMap<Vec<Single>, Operator>>;

/// Evaluates IR terms on a [`ConcreteSystem`], caching reduced matrices.
pub struct Evaluator<'a> {
    sys: &'a ConcreteSystem,
    mode: ExpansionMode,
    l_rho: Operator,
    f: Cache,
    lf: Cache,
    g: Cache,
    lg: Cache,
}

fn cached(cache: &Cache, key: &[Single], make: impl FnOnce() -> Result<Operator, AppError>) -> Result<Operator, AppError> {
    if let Some(v) = cache.borrow().get(key) {
        return Ok(v.clone());
    }
    let v = make()?;
    cache.borrow_mut().insert(key.to_vec(), v.clone());
    Ok(v)
}

fn kron_all(ops: impl IntoIterator<Item = Operator>) -> Result<Operator, AppError> {
    ops.into_iter().try_fold(Operator::one(), |acc, op| acc.kron(&op))
}

fn substitute(arg: &[MatrixFactor], letter: char, member: Single) -> Vec<MatrixFactor> {
    arg.iter()
        .map(|f| {
            let mut f = f.clone();
            for i in f.indices.iter_mut() {
                if matches!(i, Index::Family(fam) if fam.letter() == letter) {
                    *i = Index::Single(member);
                }
            }
            f
        })
        .collect()
}

impl<'a> Evaluator<'a> {
    pub fn new(sys: &'a ConcreteSystem, mode: ExpansionMode) -> Result<Self, AppError> {
        Ok(Evaluator {
            sys,
            mode,
            l_rho: sys.liouvillian_rho()?,
            f: Cache::default(),
            lf: Cache::default(),
            g: Cache::default(),
            lg: Cache::default(),
        })
    }

    pub fn mode(&self) -> ExpansionMode {
        self.mode
    }

    fn sorted(sites: &[Single]) -> Vec<Single> {
        let mut v = sites.to_vec();
        v.sort();
        v
    }

    /// Reduced density matrix `f_S`.
    pub fn density(&self, sites: &[Single]) -> Result<Operator, AppError> {
        let key = Self::sorted(sites);
        cached(&self.f, &key, || self.sys.rho.partial_trace(&key))
    }

    /// `iħ d/dt f_S`.
    pub fn density_rate(&self, sites: &[Single]) -> Result<Operator, AppError> {
        let key = Self::sorted(sites);
        cached(&self.lf, &key, || self.l_rho.partial_trace(&key))
    }

    /// Value (or rate) of one factor of a cluster term over concrete sites.
    fn cluster_factor(&self, kind: MatrixKind, sites: &[Single], rate: bool) -> Result<Operator, AppError> {
        match (kind, rate) {
            (MatrixKind::Density, false) => self.density(sites),
            (MatrixKind::Density, true) => self.density_rate(sites),
            (MatrixKind::Correlation, false) => self.correlation(sites),
            (MatrixKind::Correlation, true) => self.correlation_rate(sites),
        }
    }

    fn lower_terms(&self, key: &[Single]) -> Result<Vec<ClusterTerm>, AppError> {
        let terms = cluster_expand(key, self.mode)?;
        let (_, lower) = terms.split_last().expect("non-empty expansion");
        lower
            .iter()
            .map(|t| {
                let fs = t.as_factors().ok_or_else(|| AppError::structural("cluster term is not a product"))?;
                fs.iter()
                    .map(|f| f.singles().map(|s| (f.kind, s)).ok_or_else(|| AppError::structural("family index in a cluster term")))
                    .collect()
            })
            .collect()
    }

    /// Correlation matrix `g_S`, by inverting the cluster expansion.
    pub fn correlation(&self, sites: &[Single]) -> Result<Operator, AppError> {
        let key = Self::sorted(sites);
        if key.len() < 2 {
            return Err(AppError::structural("correlation matrix of fewer than two subsystems"));
        }
        cached(&self.g, &key, || {
            let mut g = self.density(&key)?;
            for term in self.lower_terms(&key)? {
                let value = kron_all(term.iter().map(|(k, s)| self.cluster_factor(*k, s, false)).collect::<Result<Vec<_>, _>>()?)?;
                g.add_assign_scaled(&value, -1.0)?;
            }
            Ok(g)
        })
    }

    /// `iħ d/dt g_S`, by the product rule on the cluster expansion.
    pub fn correlation_rate(&self, sites: &[Single]) -> Result<Operator, AppError> {
        let key = Self::sorted(sites);
        cached(&self.lg, &key, || {
            let mut lg = self.density_rate(&key)?;
            for term in self.lower_terms(&key)? {
                for d in 0..term.len() {
                    let parts = term
                        .iter()
                        .enumerate()
                        .map(|(i, (k, s))| self.cluster_factor(*k, s, i == d))
                        .collect::<Result<Vec<_>, _>>()?;
                    lg.add_assign_scaled(&kron_all(parts)?, -1.0)?;
                }
            }
            Ok(lg)
        })
    }

    /// Concrete value of one matrix; free family indices in densities
    /// stand for all their members.
    pub fn matrix(&self, m: &MatrixFactor) -> Result<Operator, AppError> {
        let mut sites = Vec::new();
        for idx in &m.indices {
            if let (Index::Family(f), MatrixKind::Correlation) = (idx, m.kind) {
                return Err(AppError::structural(format!("correlation matrix with free family index {}", f.letter())));
            }
            sites.extend(self.sys.expand(idx));
        }
        if sites.is_empty() {
            return Ok(Operator::one());
        }
        let single = sites.len() == 1;
        match (m.kind, single) {
            (MatrixKind::Correlation, true) => Err(AppError::structural("correlation matrix over one subsystem")),
            (kind, _) => self.cluster_factor(kind, &sites, m.deriv),
        }
    }

    fn product(&self, ms: &[MatrixFactor]) -> Result<Operator, AppError> {
        kron_all(ms.iter().map(|m| self.matrix(m)).collect::<Result<Vec<_>, _>>()?)
    }

    fn tail(&self, t: &Tail) -> Result<Operator, AppError> {
        let op = t.op();
        let mut acc: Option<Operator> = None;
        let mut add = |x: Operator| -> Result<(), AppError> {
            match acc.as_mut() {
                Some(a) => a.add_assign_scaled(&x, 1.0),
                None => {
                    acc = Some(x);
                    Ok(())
                }
            }
        };
        match t {
            Tail::Comm(c) => {
                let arg = self.product(&c.arg)?;
                for u in self.sys.expand(&op.pair.first) {
                    for v in self.sys.expand(&op.pair.second) {
                        add(self.commutator(u, v, &arg)?)?;
                    }
                }
            }
            Tail::TrComm(c) => {
                let traced = c.trace_index();
                for u in self.sys.expand(&op.pair.first) {
                    for v in self.sys.expand(&op.pair.second) {
                        let t_site = if c.traced == Side::First { u } else { v };
                        let arg = match traced {
                            Index::Family(f) => self.product(&substitute(&c.arg, f.letter(), t_site))?,
                            Index::Single(_) => self.product(&c.arg)?,
                        };
                        let comm = self.commutator(u, v, &arg)?;
                        let keep: Vec<Single> = comm.sites().iter().copied().filter(|s| *s != t_site).collect();
                        add(comm.partial_trace(&keep)?)?;
                    }
                }
            }
        }
        acc.ok_or_else(|| AppError::structural("operator sum over an empty family"))
    }

    fn commutator(&self, u: Single, v: Single, arg: &Operator) -> Result<Operator, AppError> {
        let mut key = [u, v];
        key.sort();
        arg.commutator_with(&key, self.sys.interaction(u, v)?)
    }

    /// Concrete value of a term. `Zero` has no support and yields `None`.
    pub fn term(&self, t: &Term) -> Result<Option<Operator>, AppError> {
        Ok(Some(match t {
            Term::Zero => return Ok(None),
            Term::One => Operator::one(),
            Term::Matrix(m) => self.matrix(m)?,
            Term::Product(v) => self.product(v)?,
            Term::Comm(c) => self.tail(&Tail::Comm(c.clone()))?,
            Term::TrComm(c) => self.tail(&Tail::TrComm(c.clone()))?,
            Term::Mixed(m) => self.product(&m.factors)?.kron(&self.tail(&m.tail)?)?,
        }))
    }

    /// Both sides of an equation, term by term.
    pub fn equation(&self, eq: &Equation) -> Result<EvaluatedEquation, AppError> {
        let lhs = self.matrix(&eq.lhs)?;
        let mut terms = Vec::with_capacity(eq.rhs.len());
        for t in &eq.rhs {
            let value = match self.term(&t.term)? {
                Some(v) => v,
                None => Operator::zeros(lhs.sites().to_vec(), lhs.dims().to_vec()),
            };
            if value.sites() != lhs.sites() {
                return Err(AppError::structural(format!(
                    "term {} acts on {:?}, the left-hand side on {:?}",
                    t.term.display(),
                    value.sites(),
                    lhs.sites()
                )));
            }
            terms.push((t.sign, value));
        }
        Ok(EvaluatedEquation { lhs, terms })
    }
}

/// Numeric values of both sides, for residuals and mutation tests.
#[derive(Debug, Clone)]
pub struct EvaluatedEquation {
    pub lhs: Operator,
    pub terms: Vec<(Sign, Operator)>,
}

/// Relative residuals below this left-hand-side norm are flagged.
pub const NORM_FLOOR: f64 = 1e-12;

impl EvaluatedEquation {
    fn residual_with(&self, skip: Option<usize>, flip: Option<usize>) -> f64 {
        let mut diff = self.lhs.clone();
        for (i, (sign, v)) in self.terms.iter().enumerate() {
            if Some(i) == skip {
                continue;
            }
            let mut s = sign.as_i64() as f64;
            if Some(i) == flip {
                s = -s;
            }
            diff.add_assign_scaled(v, -s).expect("terms share the lhs space");
        }
        diff.norm() / self.lhs.norm().max(NORM_FLOOR)
    }

    /// `‖lhs − Σ sign·term‖ / max(‖lhs‖, ε)`.
    pub fn residual(&self) -> f64 {
        self.residual_with(None, None)
    }

    pub fn residual_without(&self, i: usize) -> f64 {
        self.residual_with(Some(i), None)
    }

    pub fn residual_flipped(&self, i: usize) -> f64 {
        self.residual_with(None, Some(i))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TermReport {
    pub sign: &'static str,
    pub term: String,
    pub norm: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidualReport {
    pub target: String,
    pub equation: String,
    pub residual: f64,
    pub lhs_norm: f64,
    pub ill_conditioned: bool,
    pub passed: bool,
    pub terms: Vec<TermReport>,
}

pub fn check_equation(eq: &Equation, ev: &Evaluator<'_>, tol: f64) -> Result<ResidualReport, AppError> {
    let values = ev.equation(eq)?;
    let residual = values.residual();
    let lhs_norm = values.lhs.norm();
    Ok(ResidualReport {
        target: eq.lhs.indices.iter().map(|i| i.display()).collect(),
        equation: eq.display(),
        residual,
        lhs_norm,
        ill_conditioned: lhs_norm < NORM_FLOOR,
        passed: residual <= tol,
        terms: eq
            .rhs
            .iter()
            .zip(&values.terms)
            .map(|(t, (_, v))| TermReport { sign: if t.sign == Sign::Plus { "+" } else { "-" }, term: t.term.display(), norm: v.norm() })
            .collect(),
    })
}

/// Largest defects of the oracle's own invariants over the given site sets.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct SelfCheck {
    pub hermiticity: f64,
    pub unit_trace: f64,
    pub correlation_partial_trace: f64,
}

pub fn self_check(ev: &Evaluator<'_>, sets: &[Vec<Single>]) -> Result<SelfCheck, AppError> {
    let mut out = SelfCheck::default();
    for set in sets {
        let f = ev.density(set)?;
        out.hermiticity = out.hermiticity.max(f.hermiticity_defect());
        out.unit_trace = out.unit_trace.max((f.trace() - Complex64::new(1.0, 0.0)).norm());
        if set.len() >= 2 {
            let g = ev.correlation(set)?;
            out.hermiticity = out.hermiticity.max(g.hermiticity_defect());
            for s in set {
                let keep: Vec<Single> = set.iter().copied().filter(|x| x != s).collect();
                out.correlation_partial_trace = out.correlation_partial_trace.max(g.partial_trace(&keep)?.norm());
            }
        }
    }
    Ok(out)
}
