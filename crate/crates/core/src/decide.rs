//! Deciding local testability from a recognizer.
//!
//! The pipeline works on the syntactic algebra `(H_L, V_L)`. A language with
//! non-idempotent `H_L` is not locally testable. Otherwise the two identities
//!
//! * (i)  `(r+s)t + ru = st + ru` whenever `β_k(r) ⊆ β_k(s)`
//! * (ii) `rpq + rpq′ = rq + rpq′` whenever `β_k(rp) = β_k(r)`
//!
//! are checked for growing `k`, over relations `R_k ⊆ H_L × H_L` and
//! `S_k ⊆ H_L × V_L` of realizable values. If they hold at some `k` the
//! language is locally testable with level at most `k + 1`. Violations are
//! promoted to a negative answer only through concrete terms whose side
//! condition holds at `k* = |H_L|² + 1`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use fixedbitset::FixedBitSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::algebra::{
    generated_subalgebra, syntactic_algebra, AlgebraError, FiniteForestAlgebra, FlatSubsetAlgebra, ForestAlgebra,
    Image, Morphism, Recognizer, Subalgebra, Wreath,
};
use crate::derived::{pair_closure, DerivedError, PairElement, Term, WreathH, WreathV};
use crate::kdefinite::{build_kdef_algebra, KdefAlgebra, KdefError, LtSpec, TypeId, TypeUniverse};
use crate::terms::{enumerate_contexts, enumerate_forests, Alphabet, Context, Forest, Label};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecideError {
    #[error("{what} exceeded budget {budget}")]
    Budget { what: String, budget: usize },
    #[error("saturation needs an idempotent horizontal monoid")]
    NotIdempotent,
    #[error("evidence failed re-verification: {0}")]
    Evidence(String),
    #[error("inconsistent results: {0}")]
    Consistency(String),
    #[error(transparent)]
    Kdef(#[from] KdefError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Derived(#[from] DerivedError),
}

impl DecideError {
    pub fn is_budget(&self) -> bool {
        matches!(
            self,
            DecideError::Budget { .. }
                | DecideError::Kdef(KdefError::Budget { .. })
                | DecideError::Derived(DerivedError::Budget { .. })
                | DecideError::Algebra(AlgebraError::Budget { .. })
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    ExactClosure,
    Saturation,
    Sampled,
}

impl Strategy {
    /// Whether relations computed this way are complete.
    pub fn exact(self) -> bool {
        self != Strategy::Sampled
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::ExactClosure => "exact-closure",
            Strategy::Saturation => "saturation",
            Strategy::Sampled => "sampled",
        })
    }
}

/// Limits for the pipeline and for individual relation computations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Budgets {
    pub max_k: usize,
    /// Bound on table sizes: typed pairs, pair closures, `(H_k, V_k)`.
    pub pair_budget: usize,
    /// Node bound for enumerated sample terms and pumping contexts.
    pub term_bound: usize,
    /// Number of extra random forests and contexts when sampling.
    pub random_terms: usize,
    pub seed: u64,
    /// Bound on algebra evaluations in the witness search.
    pub witness_budget: usize,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            max_k: 3,
            pair_budget: 200_000,
            term_bound: 4,
            random_terms: 64,
            seed: 0,
            witness_budget: 20_000_000,
        }
    }
}

/// `R_k`: pairs `(α(r), α(s))` with `β_k(r) ⊆ β_k(s)`, each with a realizer.
#[derive(Debug, Clone)]
pub struct RelationRk {
    pub k: usize,
    pub strategy: Strategy,
    pub pairs: BTreeMap<(usize, usize), (Forest, Forest)>,
}

/// `S_k`: pairs `(α(r), α(p))` with `β_k(rp) = β_k(r)`, each with a realizer.
#[derive(Debug, Clone)]
pub struct RelationSk {
    pub k: usize,
    pub strategy: Strategy,
    pub pairs: BTreeMap<(usize, usize), (Forest, Context)>,
}

impl RelationRk {
    pub fn keys(&self) -> BTreeSet<(usize, usize)> {
        self.pairs.keys().copied().collect()
    }
}

impl RelationSk {
    pub fn keys(&self) -> BTreeSet<(usize, usize)> {
        self.pairs.keys().copied().collect()
    }
}

/// A failing instance of one of the identities, as algebra values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "identity", rename_all = "kebab-case")]
pub enum IdentityViolation {
    /// `(hr + hs)·vt + hr·vu = left ≠ right = hs·vt + hr·vu`
    Horizontal {
        hr: usize,
        hs: usize,
        vt: usize,
        vu: usize,
        left: usize,
        right: usize,
    },
    /// `hr·vp·vq + hr·vp·vq2 = left ≠ right = hr·vq + hr·vp·vq2`
    Vertical {
        hr: usize,
        vp: usize,
        vq: usize,
        vq2: usize,
        left: usize,
        right: usize,
    },
}

/// Terms instantiating a violation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WitnessTerms {
    Horizontal { r: Forest, s: Forest, t: Context, u: Context },
    Vertical { r: Forest, p: Context, q: Context, q2: Context },
}

impl WitnessTerms {
    /// The two forests whose syntactic values differ.
    pub fn sides(&self) -> (Forest, Forest) {
        match self {
            WitnessTerms::Horizontal { r, s, t, u } => {
                let ru = r.apply(u);
                (r.add(s).apply(t).add(&ru), s.apply(t).add(&ru))
            }
            WitnessTerms::Vertical { r, p, q, q2 } => {
                let rp = r.apply(p);
                let rpq2 = rp.apply(q2);
                (rp.apply(q).add(&rpq2), r.apply(q).add(&rpq2))
            }
        }
    }

    /// Named terms in the term grammar.
    pub fn named(&self) -> Vec<(&'static str, String)> {
        match self {
            WitnessTerms::Horizontal { r, s, t, u } => vec![
                ("r", r.to_string()),
                ("s", s.to_string()),
                ("t", t.to_string()),
                ("u", u.to_string()),
            ],
            WitnessTerms::Vertical { r, p, q, q2 } => vec![
                ("r", r.to_string()),
                ("p", p.to_string()),
                ("q", q.to_string()),
                ("q2", q2.to_string()),
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CheckOutcome {
    Holds,
    /// Terms are verified at the level of the check.
    Violated { violation: IdentityViolation, terms: WitnessTerms },
    Inconclusive(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdentityCheck {
    pub k: usize,
    pub r_strategy: Option<Strategy>,
    pub s_strategy: Option<Strategy>,
    pub r_size: usize,
    pub s_size: usize,
    pub instances: usize,
    pub outcome: CheckOutcome,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NotLtReason {
    /// `term` has value `h` and `term + term` has value `sum ≠ h`.
    Nonidempotent { h: usize, sum: usize, term: Forest },
    /// A violation whose side condition holds at `level` (which is `k*`).
    Identity {
        level: usize,
        violation: IdentityViolation,
        terms: WitnessTerms,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LtEvidence {
    pub k: usize,
    pub r_strategy: Strategy,
    pub s_strategy: Strategy,
    pub r_pairs: BTreeSet<(usize, usize)>,
    pub s_pairs: BTreeSet<(usize, usize)>,
    pub instances: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LtVerdict {
    /// Locally testable with level at most `level`.
    Lt { level: usize, evidence: LtEvidence },
    NotLt(NotLtReason),
    Unknown { budgets_hit: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SearchOutcome {
    Found(IdentityViolation, WitnessTerms),
    Exhausted { candidates: usize },
    Skipped(String),
}

/// Verdict plus the transcript that produced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decision {
    pub verdict: LtVerdict,
    pub h_size: usize,
    pub v_size: usize,
    pub k_star: usize,
    pub steps: Vec<IdentityCheck>,
    pub search: SearchOutcome,
}

/// `true` iff the horizontal monoid of the syntactic algebra is idempotent.
pub fn h_idempotent_necessary(r: &Recognizer) -> bool {
    syntactic_algebra(r).algebra.is_h_idempotent()
}

/// Rows of a typed table: forests with their value and root type set.
#[derive(Debug, Clone, Copy)]
enum PDeriv {
    /// An element of the image with no type information.
    Base(usize),
    Empty,
    /// Entry plus a typed tree.
    Add(usize, usize),
}

#[derive(Debug, Clone, Copy)]
struct TreeRow {
    h: usize,
    ty: usize,
    /// Entry of the previous level below the root.
    below: usize,
    letter: usize,
}

/// `levels[0]` is the image with empty masks; `levels[j + 1]` is the table
/// of pairs `(α(s), β_j(s))` over realizable `j`-types.
#[derive(Debug, Clone, Default)]
struct Level {
    types: Vec<TypeId>,
    entries: Vec<(usize, u64)>,
    deriv: Vec<PDeriv>,
    trees: Vec<TreeRow>,
}

/// A syntactic algebra together with the caches the relations need.
#[derive(Debug, Clone)]
pub struct Language {
    recognizer: Recognizer,
    image: Image,
    pub universe: TypeUniverse,
    levels: Vec<Level>,
}

impl Language {
    pub fn new(r: &Recognizer) -> Language {
        let syn = syntactic_algebra(r);
        let image = syn.recognizer.morphism().image();
        let base = Level {
            entries: image.h.iter().map(|&h| (h, 0)).collect(),
            deriv: (0..image.h.len()).map(PDeriv::Base).collect(),
            ..Level::default()
        };
        Language {
            recognizer: syn.recognizer,
            image,
            universe: TypeUniverse::new(),
            levels: vec![base],
        }
    }

    /// The syntactic recognizer.
    pub fn recognizer(&self) -> &Recognizer {
        &self.recognizer
    }

    pub fn algebra(&self) -> &FiniteForestAlgebra {
        self.recognizer.algebra()
    }

    pub fn alpha(&self) -> &Morphism {
        self.recognizer.morphism()
    }

    pub fn alphabet(&self) -> &Alphabet {
        self.recognizer.alphabet()
    }

    pub fn k_star(&self) -> usize {
        let n = self.algebra().h_size();
        n * n + 1
    }

    pub fn h_term(&self, h: usize) -> Forest {
        self.image.h_term(h).expect("syntactic morphisms are onto").clone()
    }

    pub fn v_term(&self, v: usize) -> Context {
        self.image.v_term(v).expect("syntactic morphisms are onto").clone()
    }

    fn eval(&self, s: &Forest) -> usize {
        self.alpha().eval_forest(s).expect("terms over the alphabet")
    }

    fn eval_ctx(&self, p: &Context) -> usize {
        self.alpha().eval_context(p).expect("terms over the alphabet")
    }

    /// Makes `levels[k + 1]` available.
    fn ensure_level(&mut self, k: usize, budget: usize) -> Result<(), DecideError> {
        while self.levels.len() <= k + 1 {
            let j = self.levels.len() - 1;
            let next = self.build_level(j, budget)?;
            self.levels.push(next);
        }
        Ok(())
    }

    /// Realizable root `j`-types and one row per `(value, type)` of a tree,
    /// from the table `levels[j]`.
    fn typed_trees(&mut self, j: usize) -> Result<(Vec<TypeId>, Vec<TreeRow>), DecideError> {
        let alg = self.recognizer.algebra().clone();
        let letters = self.alpha().letter_images().to_vec();
        let labels: Vec<Label> = self.alphabet().labels().to_vec();
        let below = &self.levels[j];
        let mut types: Vec<TypeId> = Vec::new();
        let mut type_idx: HashMap<TypeId, usize> = HashMap::new();
        let mut trees: Vec<TreeRow> = Vec::new();
        let mut seen: BTreeSet<(usize, usize)> = BTreeSet::new();
        for (e, &(h, mask)) in below.entries.iter().enumerate() {
            let set: Vec<TypeId> = bits(mask).map(|b| below.types[b]).collect();
            for (li, l) in labels.iter().enumerate() {
                let t = self.universe.apply_letter(l, &set, j);
                let ty = *type_idx.entry(t).or_insert_with(|| {
                    types.push(t);
                    types.len() - 1
                });
                let th = alg.act(&h, &letters[li]);
                if seen.insert((th, ty)) {
                    trees.push(TreeRow {
                        h: th,
                        ty,
                        below: e,
                        letter: li,
                    });
                }
            }
        }
        if types.len() > 64 {
            return Err(DecideError::Budget {
                what: format!("realizable {j}-types ({})", types.len()),
                budget: 64,
            });
        }
        Ok((types, trees))
    }

    /// The table for `β_j`, built from the table below it.
    fn build_level(&mut self, j: usize, budget: usize) -> Result<Level, DecideError> {
        let (types, trees) = self.typed_trees(j)?;
        let alg = self.recognizer.algebra().clone();
        let mut entries = vec![(alg.zero(), 0u64)];
        let mut deriv = vec![PDeriv::Empty];
        let mut index: HashMap<(usize, u64), usize> = HashMap::new();
        index.insert(entries[0], 0);
        let mut i = 0;
        while i < entries.len() {
            let (h, mask) = entries[i];
            for (w, row) in trees.iter().enumerate() {
                let e = (alg.add(&h, &row.h), mask | (1u64 << row.ty));
                if !index.contains_key(&e) {
                    if entries.len() >= budget {
                        return Err(DecideError::Budget {
                            what: format!("typed table at k={j}"),
                            budget,
                        });
                    }
                    index.insert(e, entries.len());
                    entries.push(e);
                    deriv.push(PDeriv::Add(i, w));
                }
            }
            i += 1;
        }
        Ok(Level {
            types,
            entries,
            deriv,
            trees,
        })
    }

    fn level_forest(&self, level: usize, entry: usize) -> Forest {
        let mut trees = Vec::new();
        let mut cur = entry;
        loop {
            match self.levels[level].deriv[cur] {
                PDeriv::Base(i) => return self.image.h_terms[i].clone(),
                PDeriv::Empty => break,
                PDeriv::Add(p, w) => {
                    trees.push(w);
                    cur = p;
                }
            }
        }
        trees
            .into_iter()
            .rev()
            .fold(Forest::empty(), |acc, w| acc.add(&self.level_tree(level, w)))
    }

    fn level_tree(&self, level: usize, w: usize) -> Forest {
        let row = self.levels[level].trees[w];
        let label = self.alphabet().labels()[row.letter].clone();
        self.level_forest(level - 1, row.below).adjoin(label)
    }

    /// `R_k` under the given strategy.
    pub fn relation_rk(&mut self, k: usize, strategy: Strategy, b: &Budgets) -> Result<RelationRk, DecideError> {
        let pairs = match strategy {
            Strategy::ExactClosure => self.rk_exact(k, b.pair_budget)?,
            Strategy::Saturation => self.rk_saturation(k, b.pair_budget)?,
            Strategy::Sampled => self.rk_sampled(k, b)?,
        };
        Ok(RelationRk { k, strategy, pairs })
    }

    /// `S_k` under the given strategy. Saturation is not available for
    /// `S_k` and falls back to exact closure at `k ≤ 1`, sampling above.
    pub fn relation_sk(&mut self, k: usize, strategy: Strategy, b: &Budgets) -> Result<RelationSk, DecideError> {
        let strategy = match strategy {
            Strategy::Saturation if k <= 1 => Strategy::ExactClosure,
            Strategy::Saturation => Strategy::Sampled,
            s => s,
        };
        let pairs = match strategy {
            Strategy::ExactClosure => self.sk_exact(k, b.pair_budget)?,
            _ => self.sk_sampled(k, b)?,
        };
        Ok(RelationSk { k, strategy, pairs })
    }

    fn rk_exact(&mut self, k: usize, budget: usize) -> Result<BTreeMap<(usize, usize), (Forest, Forest)>, DecideError> {
        self.ensure_level(k, budget)?;
        let level = &self.levels[k + 1];
        let n = self.algebra().h_size();
        let mut masks: Vec<Vec<(u64, usize)>> = vec![Vec::new(); n];
        for (e, &(h, m)) in level.entries.iter().enumerate() {
            masks[h].push((m, e));
        }
        let minimal: Vec<Vec<(u64, usize)>> = masks
            .iter()
            .map(|ms| {
                ms.iter()
                    .filter(|(m, _)| !ms.iter().any(|(o, _)| o != m && o & !m == 0))
                    .copied()
                    .collect()
            })
            .collect();
        let maximal: Vec<Vec<(u64, usize)>> = masks
            .iter()
            .map(|ms| {
                ms.iter()
                    .filter(|(m, _)| !ms.iter().any(|(o, _)| o != m && m & !o == 0))
                    .copied()
                    .collect()
            })
            .collect();
        let work: usize = minimal.iter().map(Vec::len).sum::<usize>() * maximal.iter().map(Vec::len).sum::<usize>();
        if work > budget.saturating_mul(64) {
            return Err(DecideError::Budget {
                what: format!("R_{k} inclusion scan"),
                budget,
            });
        }
        let mut found: Vec<((usize, usize), (usize, usize))> = Vec::new();
        for h in 0..n {
            for g in 0..n {
                let hit = minimal[h]
                    .iter()
                    .find_map(|&(t, i)| maximal[g].iter().find(|(u, _)| t & !u == 0).map(|&(_, j)| (i, j)));
                if let Some(ij) = hit {
                    found.push(((h, g), ij));
                }
            }
        }
        Ok(found
            .into_iter()
            .map(|(key, (i, j))| (key, (self.level_forest(k + 1, i), self.level_forest(k + 1, j))))
            .collect())
    }

    fn rk_saturation(
        &mut self,
        k: usize,
        budget: usize,
    ) -> Result<BTreeMap<(usize, usize), (Forest, Forest)>, DecideError> {
        if !self.algebra().is_h_idempotent() {
            return Err(DecideError::NotIdempotent);
        }
        if k > 0 {
            self.ensure_level(k - 1, budget)?;
        }
        let (_, rows) = self.typed_trees(k)?;
        let labels = self.alphabet().labels().to_vec();
        let trees: Vec<(usize, usize, Forest)> = rows
            .iter()
            .map(|row| (row.h, row.ty, self.level_forest(k, row.below).adjoin(labels[row.letter].clone())))
            .collect();
        let alg = self.algebra().clone();
        let mut base: Vec<((usize, usize), (Forest, Forest))> = Vec::new();
        let mut base_seen: BTreeSet<(usize, usize)> = BTreeSet::new();
        for (h, t, f) in &trees {
            for (g, u, f2) in &trees {
                if t == u && base_seen.insert((*h, *g)) {
                    base.push(((*h, *g), (f.clone(), f2.clone())));
                }
            }
        }
        let zero = alg.zero();
        let mut pairs: BTreeMap<(usize, usize), (Forest, Forest)> = BTreeMap::new();
        pairs.insert((zero, zero), (Forest::empty(), Forest::empty()));
        let mut queue = vec![(zero, zero)];
        while let Some(p) = queue.pop() {
            let (r, s) = pairs[&p].clone();
            for ((h, g), (f, f2)) in &base {
                let q = (alg.add(&p.0, h), alg.add(&p.1, g));
                if !pairs.contains_key(&q) {
                    pairs.insert(q, (r.add(f), s.add(f2)));
                    queue.push(q);
                }
            }
        }
        let n = alg.h_size();
        let sums: Vec<((usize, usize), (Forest, Forest))> = pairs.clone().into_iter().collect();
        for ((h, g), (r, s)) in sums {
            for x in 0..n {
                let q = (h, alg.add(&g, &x));
                pairs.entry(q).or_insert_with(|| (r.clone(), s.add(&self.h_term(x))));
            }
        }
        Ok(pairs)
    }

    fn samples(&self, b: &Budgets) -> (Vec<Forest>, Vec<Context>) {
        let alphabet = self.alphabet();
        let mut forests = enumerate_forests(alphabet, b.term_bound);
        let mut contexts = enumerate_contexts(alphabet, b.term_bound);
        let mut rng = ChaCha8Rng::seed_from_u64(b.seed);
        for _ in 0..b.random_terms {
            let n = rng.gen_range(b.term_bound + 1..=b.term_bound + 4);
            forests.push(random_forest(&mut rng, alphabet, n));
            contexts.push(random_context(&mut rng, alphabet, n));
        }
        (forests, contexts)
    }

    fn rk_sampled(&mut self, k: usize, b: &Budgets) -> Result<BTreeMap<(usize, usize), (Forest, Forest)>, DecideError> {
        let (forests, _) = self.samples(b);
        let mut classes: BTreeMap<(usize, BTreeSet<TypeId>), Forest> = BTreeMap::new();
        for s in forests {
            let key = (self.eval(&s), self.universe.root_types(&s, k));
            classes.entry(key).or_insert(s);
        }
        let mut pairs = BTreeMap::new();
        for ((h, t), r) in &classes {
            for ((g, u), s) in &classes {
                if t.is_subset(u) {
                    pairs.entry((*h, *g)).or_insert_with(|| (r.clone(), s.clone()));
                }
            }
        }
        Ok(pairs)
    }

    fn sk_sampled(&mut self, k: usize, b: &Budgets) -> Result<BTreeMap<(usize, usize), (Forest, Context)>, DecideError> {
        let (forests, contexts) = self.samples(b);
        if forests.len().saturating_mul(contexts.len()) > b.pair_budget.saturating_mul(16) {
            return Err(DecideError::Budget {
                what: format!("S_{k} samples"),
                budget: b.pair_budget,
            });
        }
        let cvals: Vec<usize> = contexts.iter().map(|p| self.eval_ctx(p)).collect();
        let mut pairs = BTreeMap::new();
        for r in &forests {
            let h = self.eval(r);
            let beta = self.universe.root_types(r, k);
            for (p, &v) in contexts.iter().zip(&cvals) {
                if pairs.contains_key(&(h, v)) {
                    continue;
                }
                if self.universe.root_types(&r.apply(p), k) == beta {
                    pairs.insert((h, v), (r.clone(), p.clone()));
                }
            }
        }
        Ok(pairs)
    }

    fn sk_exact(&mut self, k: usize, budget: usize) -> Result<BTreeMap<(usize, usize), (Forest, Context)>, DecideError> {
        let alphabet = self.alphabet().clone();
        let kd = build_kdef_algebra(&mut self.universe, &alphabet, k, budget)?;
        let pa = pair_closure(self.alpha(), &kd.morphism, budget)?;
        let a2 = kd.algebra();
        let mut found: BTreeMap<(usize, usize), (usize, usize)> = BTreeMap::new();
        for (i, &(h1, h2)) in pa.h_pairs().iter().enumerate() {
            for (j, &(v1, v2)) in pa.v_pairs().iter().enumerate() {
                if a2.act(&h2, &v2) == h2 {
                    found.entry((h1, v1)).or_insert((i, j));
                }
            }
        }
        found
            .into_iter()
            .map(|(key, (i, j))| {
                let r = match pa.witness_term(PairElement::H(i))? {
                    Term::Forest(f) => f,
                    Term::Context(_) => unreachable!("horizontal element"),
                };
                let p = match pa.witness_term(PairElement::V(j))? {
                    Term::Context(c) => c,
                    Term::Forest(_) => unreachable!("vertical element"),
                };
                Ok((key, (r, p)))
            })
            .collect()
    }

    /// Checks both identities at `k`. `Holds` requires complete relations.
    pub fn check_identities_at_k(
        &mut self,
        k: usize,
        strategy: Strategy,
        b: &Budgets,
    ) -> Result<IdentityCheck, DecideError> {
        let mut check = IdentityCheck {
            k,
            r_strategy: None,
            s_strategy: None,
            r_size: 0,
            s_size: 0,
            instances: 0,
            outcome: CheckOutcome::Inconclusive(String::new()),
        };
        let rel_r = match self.relation_rk(k, strategy, b) {
            Err(e) if e.is_budget() => {
                check.outcome = CheckOutcome::Inconclusive(format!("R_{k}: {e}"));
                return Ok(check);
            }
            other => other?,
        };
        check.r_strategy = Some(rel_r.strategy);
        check.r_size = rel_r.pairs.len();
        let alg = self.algebra().clone();
        let (v, n) = identity_i_scan(&alg, rel_r.pairs.keys().copied());
        check.instances += n;
        if let Some(v) = v {
            let IdentityViolation::Horizontal { hr, hs, vt, vu, .. } = v else {
                unreachable!()
            };
            let (r, s) = rel_r.pairs[&(hr, hs)].clone();
            let terms = WitnessTerms::Horizontal {
                r,
                s,
                t: self.v_term(vt),
                u: self.v_term(vu),
            };
            self.verify_witness(&terms, k)?;
            check.outcome = CheckOutcome::Violated { violation: v, terms };
            return Ok(check);
        }
        let rel_s = match self.relation_sk(k, strategy, b) {
            Err(e) if e.is_budget() => {
                check.outcome = CheckOutcome::Inconclusive(format!("S_{k}: {e}"));
                return Ok(check);
            }
            other => other?,
        };
        check.s_strategy = Some(rel_s.strategy);
        check.s_size = rel_s.pairs.len();
        let (v, n) = identity_ii_scan(&alg, rel_s.pairs.keys().copied());
        check.instances += n;
        if let Some(v) = v {
            let IdentityViolation::Vertical { hr, vp, vq, vq2, .. } = v else {
                unreachable!()
            };
            let (r, p) = rel_s.pairs[&(hr, vp)].clone();
            let terms = WitnessTerms::Vertical {
                r,
                p,
                q: self.v_term(vq),
                q2: self.v_term(vq2),
            };
            self.verify_witness(&terms, k)?;
            check.outcome = CheckOutcome::Violated { violation: v, terms };
            return Ok(check);
        }
        check.outcome = if rel_r.strategy.exact() && rel_s.strategy.exact() {
            CheckOutcome::Holds
        } else {
            CheckOutcome::Inconclusive("sampled relations are clean".into())
        };
        Ok(check)
    }

    /// Re-checks the side condition of `terms` at `level` and that the two
    /// sides of the identity get different syntactic values.
    pub fn verify_witness(&mut self, terms: &WitnessTerms, level: usize) -> Result<(), DecideError> {
        match terms {
            WitnessTerms::Horizontal { r, s, .. } => {
                let (br, bs) = (self.universe.root_types(r, level), self.universe.root_types(s, level));
                if !br.is_subset(&bs) {
                    return Err(DecideError::Evidence(format!("β_{level}({r}) ⊄ β_{level}({s})")));
                }
            }
            WitnessTerms::Vertical { r, p, .. } => {
                if self.universe.root_types(&r.apply(p), level) != self.universe.root_types(r, level) {
                    return Err(DecideError::Evidence(format!("β_{level}(rp) ≠ β_{level}(r) for r = {r}, p = {p}")));
                }
            }
        }
        let (left, right) = terms.sides();
        if self.eval(&left) == self.eval(&right) {
            return Err(DecideError::Evidence(format!("{left} and {right} have the same value")));
        }
        Ok(())
    }

    /// Looks for violations whose side conditions hold at `level` by
    /// pumping a context with its hole below the root: the top `level + 1`
    /// levels of `r·p^N` do not depend on `r` once `N > level`.
    pub fn pumping_search(&mut self, level: usize, b: &Budgets) -> Result<SearchOutcome, DecideError> {
        let alg = self.algebra().clone();
        let (nh, nv) = (alg.h_size(), alg.v_size());
        let cost = nh.saturating_mul(nv).saturating_mul(nv).saturating_mul(nv).saturating_mul(2)
            + nh.saturating_mul(nh).saturating_mul(nh).saturating_mul(nv);
        if cost > b.witness_budget {
            return Ok(SearchOutcome::Skipped(format!(
                "search needs about {cost} evaluations, budget {}",
                b.witness_budget
            )));
        }
        let mut deep: BTreeMap<usize, Context> = BTreeMap::new();
        for p in enumerate_contexts(self.alphabet(), b.term_bound.max(1)) {
            if !p.frames().is_empty() {
                let v = self.eval_ctx(&p);
                deep.entry(v).or_insert(p);
            }
        }
        let min_n = level + 1;
        let mut candidates = 0usize;
        // (i): r = r0·p^N, s = r1·p^N + x
        let mut seen_i: BTreeSet<(usize, usize)> = BTreeSet::new();
        let mut list_i: Vec<((usize, usize), (usize, usize, usize, usize, usize))> = Vec::new();
        // (ii): r = r0·p^N and the context p^M
        let mut seen_ii: BTreeSet<(usize, usize)> = BTreeSet::new();
        let mut list_ii: Vec<((usize, usize), (usize, usize, usize, usize))> = Vec::new();
        for &vp in deep.keys() {
            let powers = power_table(&alg, vp, min_n + nv);
            let big: Vec<usize> = dedup_by_value(&powers, min_n..min_n + nv);
            let small: Vec<usize> = dedup_by_value(&powers, 1..nv + 1);
            for &n in &big {
                let e = powers[n];
                for h0 in 0..nh {
                    let hr = alg.act(&h0, &e);
                    for h1 in 0..nh {
                        let base = alg.act(&h1, &e);
                        for x in 0..nh {
                            let key = (hr, alg.add(&base, &x));
                            if seen_i.insert(key) {
                                list_i.push((key, (vp, n, h0, h1, x)));
                            }
                        }
                    }
                    for &m in &small {
                        let key = (hr, powers[m]);
                        if seen_ii.insert(key) {
                            list_ii.push((key, (vp, n, h0, m)));
                        }
                    }
                }
            }
        }
        for (key, (vp, n, h0, h1, x)) in list_i {
            candidates += 1;
            if let (Some(v), _) = identity_i_scan(&alg, std::iter::once(key)) {
                let IdentityViolation::Horizontal { vt, vu, .. } = v else {
                    unreachable!()
                };
                let pn = power_term(&deep[&vp], n);
                let terms = WitnessTerms::Horizontal {
                    r: self.h_term(h0).apply(&pn),
                    s: self.h_term(h1).apply(&pn).add(&self.h_term(x)),
                    t: self.v_term(vt),
                    u: self.v_term(vu),
                };
                self.verify_witness(&terms, level)?;
                return Ok(SearchOutcome::Found(v, terms));
            }
        }
        for (key, (vp, n, h0, m)) in list_ii {
            candidates += 1;
            if let (Some(v), _) = identity_ii_scan(&alg, std::iter::once(key)) {
                let IdentityViolation::Vertical { vq, vq2, .. } = v else {
                    unreachable!()
                };
                let terms = WitnessTerms::Vertical {
                    r: self.h_term(h0).apply(&power_term(&deep[&vp], n)),
                    p: power_term(&deep[&vp], m),
                    q: self.v_term(vq),
                    q2: self.v_term(vq2),
                };
                self.verify_witness(&terms, level)?;
                return Ok(SearchOutcome::Found(v, terms));
            }
        }
        Ok(SearchOutcome::Exhausted { candidates })
    }
}

fn bits(mask: u64) -> impl Iterator<Item = usize> {
    (0..64).filter(move |b| mask & (1u64 << b) != 0)
}

/// `powers[n] = v^n` for `n ≤ upto`.
fn power_table(alg: &FiniteForestAlgebra, v: usize, upto: usize) -> Vec<usize> {
    let mut out = vec![alg.one()];
    for n in 1..=upto {
        out.push(alg.mul(&out[n - 1], &v));
    }
    out
}

/// Exponents in `range` giving pairwise distinct powers, smallest first.
fn dedup_by_value(powers: &[usize], range: std::ops::Range<usize>) -> Vec<usize> {
    let mut seen = BTreeSet::new();
    range.filter(|&n| seen.insert(powers[n])).collect()
}

fn power_term(p: &Context, n: usize) -> Context {
    (0..n).fold(Context::hole(), |acc, _| acc.compose(p))
}

/// First violation of identity (i) over `pairs`, and the instance count.
pub fn identity_i_scan(
    alg: &FiniteForestAlgebra,
    pairs: impl IntoIterator<Item = (usize, usize)>,
) -> (Option<IdentityViolation>, usize) {
    let nv = alg.v_size();
    let mut n = 0;
    for (hr, hs) in pairs {
        let sum = alg.add(&hr, &hs);
        for vt in 0..nv {
            for vu in 0..nv {
                n += 1;
                let ru = alg.act(&hr, &vu);
                let left = alg.add(&alg.act(&sum, &vt), &ru);
                let right = alg.add(&alg.act(&hs, &vt), &ru);
                if left != right {
                    let v = IdentityViolation::Horizontal {
                        hr,
                        hs,
                        vt,
                        vu,
                        left,
                        right,
                    };
                    return (Some(v), n);
                }
            }
        }
    }
    (None, n)
}

/// First violation of identity (ii) over `pairs`, and the instance count.
pub fn identity_ii_scan(
    alg: &FiniteForestAlgebra,
    pairs: impl IntoIterator<Item = (usize, usize)>,
) -> (Option<IdentityViolation>, usize) {
    let nv = alg.v_size();
    let mut n = 0;
    for (hr, vp) in pairs {
        let rp = alg.act(&hr, &vp);
        for vq in 0..nv {
            for vq2 in 0..nv {
                n += 1;
                let rpq2 = alg.act(&rp, &vq2);
                let left = alg.add(&alg.act(&rp, &vq), &rpq2);
                let right = alg.add(&alg.act(&hr, &vq), &rpq2);
                if left != right {
                    let v = IdentityViolation::Vertical {
                        hr,
                        vp,
                        vq,
                        vq2,
                        left,
                        right,
                    };
                    return (Some(v), n);
                }
            }
        }
    }
    (None, n)
}

fn random_forest<R: Rng>(rng: &mut R, alphabet: &Alphabet, nodes: usize) -> Forest {
    let labels = alphabet.labels();
    if nodes == 0 || labels.is_empty() {
        return Forest::empty();
    }
    let mut trees: Vec<Forest> = Vec::new();
    let mut left = nodes;
    while left > 0 {
        let size = rng.gen_range(1..=left);
        left -= size;
        let kids = random_forest(rng, alphabet, size - 1);
        trees.push(kids.adjoin(labels[rng.gen_range(0..labels.len())].clone()));
    }
    trees.iter().fold(Forest::empty(), |acc, t| acc.add(t))
}

fn random_context<R: Rng>(rng: &mut R, alphabet: &Alphabet, nodes: usize) -> Context {
    let labels = alphabet.labels();
    let mut ctx = Context::hole();
    let mut left = nodes;
    while left > 0 && !labels.is_empty() {
        if rng.gen_bool(0.5) {
            ctx = ctx.compose(&Context::letter(labels[rng.gen_range(0..labels.len())].clone()));
            left -= 1;
        } else {
            let size = rng.gen_range(1..=left);
            left -= size;
            ctx = ctx.compose(&Context::plus(random_forest(rng, alphabet, size)));
        }
    }
    ctx
}

pub fn relation_rk(r: &Recognizer, k: usize, strategy: Strategy, b: &Budgets) -> Result<RelationRk, DecideError> {
    Language::new(r).relation_rk(k, strategy, b)
}

pub fn relation_sk(r: &Recognizer, k: usize, strategy: Strategy, b: &Budgets) -> Result<RelationSk, DecideError> {
    Language::new(r).relation_sk(k, strategy, b)
}

pub fn check_lt_identities_at_k(
    r: &Recognizer,
    k: usize,
    strategy: Strategy,
    b: &Budgets,
) -> Result<IdentityCheck, DecideError> {
    Language::new(r).check_identities_at_k(k, strategy, b)
}

/// Runs the decision pipeline. Budgets only ever turn answers into
/// `Unknown`; every emitted `Lt` or `NotLt` has been re-verified.
pub fn decide_lt(r: &Recognizer, b: &Budgets) -> Result<Decision, DecideError> {
    let mut lang = Language::new(r);
    let alg = lang.algebra().clone();
    let k_star = lang.k_star();
    let mut decision = Decision {
        verdict: LtVerdict::Unknown { budgets_hit: Vec::new() },
        h_size: alg.h_size(),
        v_size: alg.v_size(),
        k_star,
        steps: Vec::new(),
        search: SearchOutcome::Skipped("not run".into()),
    };
    if let Some(h) = alg.non_idempotent_element() {
        let term = lang.h_term(h);
        let sum = lang.eval(&term.add(&term));
        if lang.eval(&term) != h || sum == h {
            return Err(DecideError::Evidence(format!("{term} does not witness non-idempotence")));
        }
        decision.verdict = LtVerdict::NotLt(NotLtReason::Nonidempotent { h, sum, term });
        return Ok(decision);
    }

    let mut budgets_hit = Vec::new();
    let mut positive: Option<LtVerdict> = None;
    let mut negative: Option<LtVerdict> = None;
    for k in 0..=b.max_k.min(k_star) {
        let mut check = lang.check_identities_at_k(k, Strategy::ExactClosure, b)?;
        if let CheckOutcome::Inconclusive(reason) = &check.outcome {
            budgets_hit.push(reason.clone());
            // saturation gives the same R_k when H_L is idempotent
            let sat = lang.check_identities_at_k(k, Strategy::Saturation, b)?;
            if !matches!(sat.outcome, CheckOutcome::Inconclusive(_)) || sat.r_strategy.is_some() {
                check = sat;
            }
        }
        let outcome = check.outcome.clone();
        decision.steps.push(check.clone());
        match outcome {
            CheckOutcome::Holds => {
                let evidence = lang.lt_evidence(&check, b)?;
                positive = Some(LtVerdict::Lt { level: k + 1, evidence });
                break;
            }
            CheckOutcome::Violated { violation, terms } if k == k_star => {
                lang.verify_witness(&terms, k_star)?;
                negative = Some(LtVerdict::NotLt(NotLtReason::Identity {
                    level: k_star,
                    violation,
                    terms,
                }));
                break;
            }
            CheckOutcome::Violated { .. } => {}
            CheckOutcome::Inconclusive(reason) => {
                budgets_hit.push(reason);
                break;
            }
        }
    }

    decision.search = lang.pumping_search(k_star, b)?;
    if let SearchOutcome::Skipped(reason) = &decision.search {
        budgets_hit.push(format!("witness search: {reason}"));
    }
    if let SearchOutcome::Found(violation, terms) = &decision.search {
        let found = LtVerdict::NotLt(NotLtReason::Identity {
            level: k_star,
            violation: violation.clone(),
            terms: terms.clone(),
        });
        if positive.is_some() {
            return Err(DecideError::Consistency(
                "identities hold but a verified witness exists".into(),
            ));
        }
        negative.get_or_insert(found);
    }
    decision.verdict = match (positive, negative) {
        (Some(_), Some(_)) => return Err(DecideError::Consistency("both verdicts reached".into())),
        (Some(v), None) | (None, Some(v)) => v,
        (None, None) => LtVerdict::Unknown { budgets_hit },
    };
    Ok(decision)
}

impl Language {
    /// Recomputes the relations of a passing check and re-runs both scans.
    fn lt_evidence(&mut self, check: &IdentityCheck, b: &Budgets) -> Result<LtEvidence, DecideError> {
        let (Some(rs), Some(ss)) = (check.r_strategy, check.s_strategy) else {
            return Err(DecideError::Evidence("missing relation".into()));
        };
        if !rs.exact() || !ss.exact() {
            return Err(DecideError::Evidence("positive answer from sampled relations".into()));
        }
        let rel_r = self.relation_rk(check.k, rs, b)?;
        let rel_s = self.relation_sk(check.k, ss, b)?;
        let alg = self.algebra().clone();
        let (vi, ni) = identity_i_scan(&alg, rel_r.pairs.keys().copied());
        let (vii, nii) = identity_ii_scan(&alg, rel_s.pairs.keys().copied());
        if vi.is_some() || vii.is_some() {
            return Err(DecideError::Evidence("identity fails on recomputation".into()));
        }
        Ok(LtEvidence {
            k: check.k,
            r_strategy: rs,
            s_strategy: ss,
            r_pairs: rel_r.keys(),
            s_pairs: rel_s.keys(),
            instances: ni + nii,
        })
    }
}

/// Re-runs both identity scans over the relations recorded in `e`.
pub fn verify_lt_evidence(r: &Recognizer, e: &LtEvidence) -> bool {
    let syn = syntactic_algebra(r);
    identity_i_scan(&syn.algebra, e.r_pairs.iter().copied()).0.is_none()
        && identity_ii_scan(&syn.algebra, e.s_pairs.iter().copied()).0.is_none()
}

/// A recognizer for an `≡_k` class union through the wreath product of the
/// flat algebra of node-type sets with `(H_k, V_k)`.
#[derive(Debug, Clone)]
pub struct LtWreath {
    pub kdef: KdefAlgebra,
    /// Realizable node k-types; bit `i` of the left coordinate is `node_types[i]`.
    pub node_types: Vec<TypeId>,
    pub outer: FlatSubsetAlgebra,
    /// Letter images `a ↦ (h2 ↦ {type of a(s) for β_k(s) = h2}, β_k(a))`.
    pub delta: Vec<WreathV<FlatSubsetAlgebra>>,
    pub subalgebra: Subalgebra<WreathH<FlatSubsetAlgebra>, WreathV<FlatSubsetAlgebra>>,
    pub recognizer: Recognizer,
}

impl LtWreath {
    /// `π∘δ = β_k` on every letter.
    pub fn pi_check(&self) -> bool {
        self.delta
            .iter()
            .zip(self.kdef.morphism.letter_images())
            .all(|(d, b)| d.1 == *b)
    }
}

pub fn lt_wreath_recognizer(
    u: &mut TypeUniverse,
    alphabet: &Alphabet,
    k: usize,
    spec: &LtSpec,
    budget: usize,
) -> Result<LtWreath, DecideError> {
    if k == 0 {
        return Err(KdefError::KTooSmall(1).into());
    }
    spec.check(alphabet, k)?;
    let kdef = build_kdef_algebra(u, alphabet, k, budget)?;
    let n2 = kdef.algebra().h_size();
    let mut node_types: Vec<TypeId> = Vec::new();
    let mut idx: HashMap<TypeId, usize> = HashMap::new();
    let mut images: Vec<Vec<usize>> = Vec::new();
    for l in alphabet.labels() {
        let row = (0..n2)
            .map(|h| {
                let t = u.apply_letter(l, &kdef.h_sets[h], k);
                *idx.entry(t).or_insert_with(|| {
                    node_types.push(t);
                    node_types.len() - 1
                })
            })
            .collect();
        images.push(row);
    }
    let outer = FlatSubsetAlgebra::new(node_types.len());
    let delta: Vec<WreathV<FlatSubsetAlgebra>> = images
        .iter()
        .zip(kdef.morphism.letter_images())
        .map(|(row, &b)| (row.iter().map(|&t| outer.singleton(t)).collect(), b))
        .collect();
    let inner = kdef.algebra().clone();
    let wreath = Wreath::new(&outer, &inner);
    let subalgebra = generated_subalgebra(&wreath, &[], &delta, budget)?;
    let letters: BTreeMap<Label, usize> = alphabet
        .labels()
        .iter()
        .zip(&delta)
        .map(|(l, d)| {
            let i = subalgebra.v_elems.iter().position(|x| x == d).expect("generator listed");
            (l.clone(), subalgebra.v_class[i])
        })
        .collect();
    let mut accept = BTreeSet::new();
    for (i, (set, h2)) in subalgebra.h_elems.iter().enumerate() {
        let nodes: BTreeSet<TypeId> = set.ones().map(|b| node_types[b]).collect();
        let roots: BTreeSet<TypeId> = u.truncate_set(&kdef.h_sets[*h2], k - 1).into_iter().collect();
        if spec.accepts_signature(u, &nodes, &roots) {
            accept.insert(i);
        }
    }
    let morphism = Morphism::new(subalgebra.algebra.clone(), alphabet.clone(), &letters)?;
    let recognizer = Recognizer::new(morphism, accept)?;
    let w = LtWreath {
        kdef,
        node_types,
        outer,
        delta,
        subalgebra,
        recognizer,
    };
    if !w.pi_check() {
        return Err(DecideError::Evidence("π∘δ differs from β_k".into()));
    }
    Ok(w)
}

/// Bitset of a left coordinate, for display.
pub fn render_node_set(u: &TypeUniverse, w: &LtWreath, set: &FixedBitSet) -> String {
    u.render_set(set.ones().map(|b| &w.node_types[b]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::kdefinite::lt_recognizer;
    use crate::terms::parse_forest_any;
    use proptest::prelude::{any, prop_assert, proptest, ProptestConfig};

    fn small() -> Budgets {
        Budgets {
            max_k: 2,
            term_bound: 3,
            random_terms: 16,
            ..Budgets::default()
        }
    }

    /// Some `a` has a `b` below it, with `c` allowed in between.
    fn a_above_b() -> Recognizer {
        use crate::algebra::transition_algebra;
        // states: bit 0 = has a, bit 1 = has b, bit 2 = has a above b
        let n = 8;
        let add: Vec<usize> = (0..n * n).map(|i| (i / n) | (i % n)).collect();
        let a: Vec<usize> = (0..n).map(|s| 1 | s | if s & 2 != 0 { 4 } else { 0 }).collect();
        let b: Vec<usize> = (0..n).map(|s| 2 | s).collect();
        let c: Vec<usize> = (0..n).collect();
        let ta = transition_algebra(&add, n, 0, &[a, b, c], 1000).unwrap();
        let alphabet = Alphabet::new(["a", "b", "c"]).unwrap();
        let letters: BTreeMap<Label, usize> =
            alphabet.labels().iter().cloned().zip(ta.letters.iter().copied()).collect();
        let m = Morphism::new(ta.algebra, alphabet, &letters).unwrap();
        Recognizer::new(m, [4, 5, 6, 7].into_iter().collect()).unwrap()
    }

    #[test]
    fn idempotence_check() {
        assert!(h_idempotent_necessary(&catalog::contains_a(&["a", "b"])));
        assert!(!h_idempotent_necessary(&catalog::parity_a(&["a", "b"])));
        assert!(h_idempotent_necessary(&catalog::empty_language(&["a", "b"])));
    }

    #[test]
    fn r0_contains_a() {
        let r = catalog::contains_a(&["a", "b"]);
        let rel = relation_rk(&r, 0, Strategy::ExactClosure, &small()).unwrap();
        // empty forests pair with anything, nonempty ones with nonempty ones
        let mut expected = BTreeSet::new();
        let mut u = TypeUniverse::new();
        let lang = Language::new(&r);
        let fs = enumerate_forests(r.alphabet(), 3);
        for x in &fs {
            for y in &fs {
                if u.root_types(x, 0).is_subset(&u.root_types(y, 0)) {
                    expected.insert((lang.eval(x), lang.eval(y)));
                }
            }
        }
        assert_eq!(rel.keys(), expected);
        // over {a,b} a lone `b` is nonempty without an `a`, so (1, 0) is in
        assert!(expected.contains(&(1, 0)));
        let unary = relation_rk(&catalog::contains_a(&["a"]), 0, Strategy::ExactClosure, &small()).unwrap();
        assert_eq!(unary.keys(), [(0, 0), (0, 1), (1, 1)].into_iter().collect());
    }

    #[test]
    fn relation_realizers_satisfy_side_conditions() {
        let r = catalog::a_has_b_child();
        let mut lang = Language::new(&r);
        for k in 0..=1 {
            for st in [Strategy::ExactClosure, Strategy::Saturation, Strategy::Sampled] {
                let rel = lang.relation_rk(k, st, &small()).unwrap();
                for (&(h, g), (x, y)) in &rel.pairs {
                    assert_eq!((lang.eval(x), lang.eval(y)), (h, g));
                    assert!(lang.universe.root_types(x, k).is_subset(&lang.universe.root_types(y, k)));
                }
                let rel = lang.relation_sk(k, st, &small()).unwrap();
                for (&(h, v), (x, p)) in &rel.pairs {
                    assert_eq!((lang.eval(x), lang.eval_ctx(p)), (h, v));
                    assert_eq!(lang.universe.root_types(&x.apply(p), k), lang.universe.root_types(x, k));
                }
            }
        }
    }

    #[test]
    fn strategies_agree() {
        for r in [catalog::contains_a(&["a", "b"]), catalog::a_has_b_child(), a_above_b()] {
            let mut lang = Language::new(&r);
            for k in 0..=1 {
                let exact = lang.relation_rk(k, Strategy::ExactClosure, &small()).unwrap().keys();
                let sat = lang.relation_rk(k, Strategy::Saturation, &small()).unwrap().keys();
                let sampled = lang.relation_rk(k, Strategy::Sampled, &small()).unwrap().keys();
                assert_eq!(exact, sat, "k={k}");
                assert!(sampled.is_subset(&exact));
                let s_exact = lang.relation_sk(k, Strategy::ExactClosure, &small()).unwrap().keys();
                let s_sampled = lang.relation_sk(k, Strategy::Sampled, &small()).unwrap().keys();
                assert!(s_sampled.is_subset(&s_exact));
            }
        }
    }

    #[test]
    fn exact_r_matches_pair_closure_projection() {
        let r = catalog::a_has_b_child();
        let mut lang = Language::new(&r);
        for k in 0..=1 {
            let alphabet = lang.alphabet().clone();
            let kd = build_kdef_algebra(&mut lang.universe, &alphabet, k, 10_000).unwrap();
            let pa = pair_closure(lang.alpha(), &kd.morphism, 100_000).unwrap();
            let a2 = kd.algebra();
            let mut proj = BTreeSet::new();
            for &(h1, h2) in pa.h_pairs() {
                for &(g1, g2) in pa.h_pairs() {
                    if a2.add(&h2, &g2) == g2 {
                        proj.insert((h1, g1));
                    }
                }
            }
            assert_eq!(lang.relation_rk(k, Strategy::ExactClosure, &small()).unwrap().keys(), proj);
        }
    }

    #[test]
    fn relations_are_monotone_in_k() {
        let r = catalog::a_has_b_child();
        let mut lang = Language::new(&r);
        let r0 = lang.relation_rk(0, Strategy::ExactClosure, &small()).unwrap().keys();
        let r1 = lang.relation_rk(1, Strategy::ExactClosure, &small()).unwrap().keys();
        let r2 = lang.relation_rk(2, Strategy::Saturation, &small()).unwrap().keys();
        assert!(r1.is_subset(&r0) && r2.is_subset(&r1));
        let s0 = lang.relation_sk(0, Strategy::ExactClosure, &small()).unwrap().keys();
        let s1 = lang.relation_sk(1, Strategy::ExactClosure, &small()).unwrap().keys();
        assert!(s1.is_subset(&s0));
    }

    #[test]
    fn s_contains_identity_context() {
        let r = catalog::contains_a(&["a", "b"]);
        let mut lang = Language::new(&r);
        let one = lang.algebra().one();
        for k in 0..=2 {
            let s = lang.relation_sk(k, Strategy::Saturation, &small()).unwrap().keys();
            for h in 0..lang.algebra().h_size() {
                assert!(s.contains(&(h, one)));
            }
        }
    }

    #[test]
    fn identity_checks() {
        let c = check_lt_identities_at_k(&catalog::contains_a(&["a", "b"]), 1, Strategy::ExactClosure, &small()).unwrap();
        assert_eq!(c.outcome, CheckOutcome::Holds);
        let e = check_lt_identities_at_k(&catalog::empty_language(&["a", "b"]), 0, Strategy::ExactClosure, &small())
            .unwrap();
        assert_eq!(e.outcome, CheckOutcome::Holds);
        for (names, ks) in [(&["a", "b"][..], 0..=1), (&["a"][..], 0..=3)] {
            for k in ks {
                let p = check_lt_identities_at_k(&catalog::parity_a(names), k, Strategy::ExactClosure, &small()).unwrap();
                assert!(matches!(p.outcome, CheckOutcome::Violated { .. }), "k={k}: {:?}", p.outcome);
            }
        }
        let s = check_lt_identities_at_k(&catalog::contains_a(&["a", "b"]), 1, Strategy::Sampled, &small()).unwrap();
        assert!(matches!(s.outcome, CheckOutcome::Inconclusive(_)));
        assert_eq!(
            relation_rk(&catalog::parity_a(&["a"]), 1, Strategy::Saturation, &small()).unwrap_err(),
            DecideError::NotIdempotent
        );
    }

    #[test]
    fn pipeline_verdicts() {
        let b = Budgets::default();
        let d = decide_lt(&catalog::contains_a(&["a", "b"]), &b).unwrap();
        assert!(matches!(d.verdict, LtVerdict::Lt { level, .. } if level <= 2), "{:?}", d.verdict);
        let d = decide_lt(&catalog::parity_a(&["a", "b"]), &b).unwrap();
        assert!(matches!(d.verdict, LtVerdict::NotLt(NotLtReason::Nonidempotent { .. })));
        let d = decide_lt(&catalog::a_has_b_child(), &b).unwrap();
        match &d.verdict {
            LtVerdict::Lt { level, evidence } => {
                assert!(*level <= 3);
                assert!(verify_lt_evidence(&catalog::a_has_b_child(), evidence));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn pumping_finds_ancestor_witness() {
        let r = a_above_b();
        let d = decide_lt(&r, &small()).unwrap();
        let LtVerdict::NotLt(NotLtReason::Identity { level, terms, .. }) = &d.verdict else {
            panic!("{:?}", d.verdict)
        };
        assert_eq!(*level, d.k_star);
        let mut lang = Language::new(&r);
        lang.verify_witness(terms, *level).unwrap();
        // the two sides are told apart by some context, so also by the language
        let (x, y) = terms.sides();
        let (vx, vy) = (lang.eval(&x), lang.eval(&y));
        assert_ne!(vx, vy);
        // not 2-LT either, by a direct pair of forests
        let mut u = TypeUniverse::new();
        let f = |s: &str| parse_forest_any(s).unwrap();
        let x = f("a(c(c(c(b))))+c(c(c))");
        let y = f("a(c(c(c)))+c(c(c(b)))");
        assert!(u.equiv_k(&x, &y, 2).unwrap());
        assert!(r.accepts(&x).unwrap() && !r.accepts(&y).unwrap());
    }

    #[test]
    fn wreath_recognizer_matches_lt_recognizer() {
        let alphabet = Alphabet::new(["a", "b"]).unwrap();
        let mut u = TypeUniverse::new();
        let spec = LtSpec::parse("node(a)").unwrap();
        let w = lt_wreath_recognizer(&mut u, &alphabet, 1, &spec, 100_000).unwrap();
        assert!(w.pi_check());
        let flat = catalog::contains_a(&["a", "b"]);
        let lt = lt_recognizer(&mut u, &alphabet, 1, &spec, 100_000).unwrap().recognizer;
        for s in enumerate_forests(&alphabet, 5) {
            let x = w.recognizer.accepts(&s).unwrap();
            assert_eq!(x, flat.accepts(&s).unwrap(), "{s}");
            assert_eq!(x, lt.accepts(&s).unwrap(), "{s}");
        }
        let unary = Alphabet::new(["a"]).unwrap();
        let spec2 = LtSpec::parse("node(a[a!]) & !root(a!)").unwrap();
        let w2 = lt_wreath_recognizer(&mut u, &unary, 2, &spec2, 100_000).unwrap();
        let lt2 = lt_recognizer(&mut u, &unary, 2, &spec2, 100_000).unwrap().recognizer;
        for s in enumerate_forests(&unary, 6) {
            assert_eq!(w2.recognizer.accepts(&s).unwrap(), lt2.accepts(&s).unwrap(), "{s}");
        }
    }

    #[test]
    fn empty_spec_accepts_nothing() {
        let alphabet = Alphabet::new(["a", "b"]).unwrap();
        let mut u = TypeUniverse::new();
        let spec = LtSpec::parse("false").unwrap();
        let w = lt_wreath_recognizer(&mut u, &alphabet, 1, &spec, 100_000).unwrap();
        assert!(w.recognizer.accept_set().is_empty());
    }

    #[test]
    fn trees_in_samples_are_sized() {
        let alphabet = Alphabet::new(["a", "b"]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 0..8 {
            assert_eq!(random_forest(&mut rng, &alphabet, n).size(), n);
            assert_eq!(random_context(&mut rng, &alphabet, n).size(), n);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10))]
        #[test]
        fn sampled_relations_are_subsets(seed in any::<u64>()) {
            let r = catalog::contains_a(&["a", "b"]);
            let b = Budgets { seed, ..small() };
            let mut lang = Language::new(&r);
            for k in 0..=1 {
                let exact = lang.relation_rk(k, Strategy::ExactClosure, &b).unwrap().keys();
                let sampled = lang.relation_rk(k, Strategy::Sampled, &b).unwrap().keys();
                prop_assert!(sampled.is_subset(&exact));
                let s_exact = lang.relation_sk(k, Strategy::ExactClosure, &b).unwrap().keys();
                let s_sampled = lang.relation_sk(k, Strategy::Sampled, &b).unwrap().keys();
                prop_assert!(s_sampled.is_subset(&s_exact));
            }
        }
    }
}
