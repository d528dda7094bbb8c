//! k-definite types of forest nodes and the algebras built from them.
//!
//! All nodes share the single 0-definite type `*`. For `k > 0` the k-type of
//! a node is its label together with the set of (k−1)-types of its children,
//! rendered as `a{...}`. Types are hash-consed in a [`TypeUniverse`]; ids are
//! stable for the lifetime of the universe only, so anything persisted uses
//! [`TypeUniverse::render`].
//!
//! `β_k(s)` is the set of root k-types of `s`. For `k = 0` this only records
//! whether `s` is empty.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::algebra::{
    transition_algebra, AlgebraError, FiniteForestAlgebra, ForestAlgebra, Morphism, Recognizer, TransitionAlgebra,
    VStep,
};
use crate::terms::{enumerate_forests, Alphabet, Context, Forest, Label, TermError, Tree};

pub type TypeId = u32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KdefError {
    #[error("{what} exceeded budget {budget} (reached {reached})")]
    Budget {
        what: &'static str,
        reached: usize,
        budget: usize,
    },
    #[error("cannot truncate a depth-{depth} type to depth {j}")]
    Truncate { depth: usize, j: usize },
    #[error("k must be at least {0}")]
    KTooSmall(usize),
    #[error("spec error at {pos}: {msg}")]
    Spec { pos: usize, msg: String },
    #[error("pattern `{pattern}` is deeper than {max}")]
    PatternDepth { pattern: String, max: usize },
    #[error(transparent)]
    Term(#[from] TermError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Shape {
    Atom,
    Node(Label, Box<[TypeId]>),
}

/// Interner for k-definite types of every depth.
#[derive(Debug, Default, Clone)]
pub struct TypeUniverse {
    entries: Vec<(usize, Shape)>,
    index: HashMap<(usize, Shape), TypeId>,
}

impl TypeUniverse {
    pub fn new() -> Self {
        TypeUniverse::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn intern(&mut self, depth: usize, shape: Shape) -> TypeId {
        let key = (depth, shape);
        if let Some(&id) = self.index.get(&key) {
            return id;
        }
        let id = self.entries.len() as TypeId;
        self.entries.push(key.clone());
        self.index.insert(key, id);
        id
    }

    pub fn atom(&mut self) -> TypeId {
        self.intern(0, Shape::Atom)
    }

    /// The type `(label, children)` of depth `depth ≥ 1`; every child must
    /// have depth `depth − 1`.
    pub fn node<I: IntoIterator<Item = TypeId>>(&mut self, depth: usize, label: Label, children: I) -> TypeId {
        let mut kids: Vec<TypeId> = children.into_iter().collect();
        kids.sort_unstable();
        kids.dedup();
        debug_assert!(depth >= 1);
        debug_assert!(kids.iter().all(|&c| self.depth(c) + 1 == depth));
        self.intern(depth, Shape::Node(label, kids.into_boxed_slice()))
    }

    pub fn depth(&self, id: TypeId) -> usize {
        self.entries[id as usize].0
    }

    pub fn label(&self, id: TypeId) -> Option<&Label> {
        match &self.entries[id as usize].1 {
            Shape::Atom => None,
            Shape::Node(l, _) => Some(l),
        }
    }

    pub fn children(&self, id: TypeId) -> &[TypeId] {
        match &self.entries[id as usize].1 {
            Shape::Atom => &[],
            Shape::Node(_, c) => c,
        }
    }

    pub fn truncate(&mut self, id: TypeId, j: usize) -> Result<TypeId, KdefError> {
        let depth = self.depth(id);
        if j > depth {
            return Err(KdefError::Truncate { depth, j });
        }
        Ok(self.truncate_unchecked(id, j))
    }

    fn truncate_unchecked(&mut self, id: TypeId, j: usize) -> TypeId {
        if j == self.depth(id) {
            return id;
        }
        if j == 0 {
            return self.atom();
        }
        let label = self.label(id).expect("depth > 0").clone();
        let kids: Vec<TypeId> = self.children(id).to_vec();
        let cut: Vec<TypeId> = kids.into_iter().map(|c| self.truncate_unchecked(c, j - 1)).collect();
        self.node(j, label, cut)
    }

    /// Truncates every member of a set of types to depth `j`.
    pub fn truncate_set(&mut self, set: &[TypeId], j: usize) -> Vec<TypeId> {
        let mut out: Vec<TypeId> = set.iter().map(|&t| self.truncate_unchecked(t, j)).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn render(&self, id: TypeId) -> String {
        match &self.entries[id as usize].1 {
            Shape::Atom => "*".to_string(),
            Shape::Node(l, kids) => {
                let mut parts: Vec<String> = kids.iter().map(|&c| self.render(c)).collect();
                parts.sort();
                format!("{}{{{}}}", l, parts.join(","))
            }
        }
    }

    /// Renders a set of types as `{t1,t2,...}` in sorted text order.
    pub fn render_set<'a, I: IntoIterator<Item = &'a TypeId>>(&self, set: I) -> String {
        let mut parts: Vec<String> = set.into_iter().map(|&t| self.render(t)).collect();
        parts.sort();
        format!("{{{}}}", parts.join(","))
    }

    /// Types of a tree's root for every depth `0..=k`, recording the k-types
    /// of all its nodes in `nodes`.
    fn tree_types(&mut self, t: &Tree, k: usize, nodes: &mut BTreeSet<TypeId>) -> Vec<TypeId> {
        let child_types: Vec<Vec<TypeId>> = t
            .children()
            .trees()
            .iter()
            .map(|c| self.tree_types(c, k, nodes))
            .collect();
        let mut out = vec![self.atom()];
        for j in 1..=k {
            let kids: Vec<TypeId> = child_types.iter().map(|c| c[j - 1]).collect();
            let id = self.node(j, t.label().clone(), kids);
            out.push(id);
        }
        nodes.insert(out[k]);
        out
    }

    fn forest_types(&mut self, s: &Forest, k: usize) -> (BTreeSet<TypeId>, Vec<Vec<TypeId>>) {
        let mut nodes = BTreeSet::new();
        let roots = s.trees().iter().map(|t| self.tree_types(t, k, &mut nodes)).collect();
        (nodes, roots)
    }

    /// `β_k(s)`: the k-types of the roots of `s`.
    pub fn root_types(&mut self, s: &Forest, k: usize) -> BTreeSet<TypeId> {
        let (_, roots) = self.forest_types(s, k);
        roots.into_iter().map(|r| r[k]).collect()
    }

    /// The k-types of all nodes of `s`.
    pub fn node_types(&mut self, s: &Forest, k: usize) -> BTreeSet<TypeId> {
        self.forest_types(s, k).0
    }

    /// The data `≡_k` compares: node k-types and root (k−1)-types.
    pub fn signature(&mut self, s: &Forest, k: usize) -> Result<(BTreeSet<TypeId>, BTreeSet<TypeId>), KdefError> {
        if k == 0 {
            return Err(KdefError::KTooSmall(1));
        }
        let (nodes, roots) = self.forest_types(s, k);
        Ok((nodes, roots.into_iter().map(|r| r[k - 1]).collect()))
    }

    pub fn sim_k(&mut self, s: &Forest, t: &Forest, k: usize) -> bool {
        self.root_types(s, k) == self.root_types(t, k)
    }

    pub fn equiv_k(&mut self, s: &Forest, t: &Forest, k: usize) -> Result<bool, KdefError> {
        Ok(self.signature(s, k)? == self.signature(t, k)?)
    }

    /// Root k-type of `a(s)` when `β_k(s)` (or any superset depth) is `set`.
    pub fn apply_letter(&mut self, label: &Label, set: &[TypeId], k: usize) -> TypeId {
        if k == 0 {
            return self.atom();
        }
        let cut = self.truncate_set(set, k - 1);
        self.node(k, label.clone(), cut)
    }
}

fn union_sorted(a: &[TypeId], b: &[TypeId]) -> Vec<TypeId> {
    let mut out: Vec<TypeId> = a.iter().chain(b).copied().collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// The quotient `(H_k, V_k)` restricted to realizable values, with `β_k`.
#[derive(Debug, Clone)]
pub struct KdefAlgebra {
    pub k: usize,
    /// Root k-type set of each horizontal element.
    pub h_sets: Vec<Vec<TypeId>>,
    /// A forest realizing each horizontal element.
    pub h_terms: Vec<Forest>,
    pub transition: TransitionAlgebra,
    pub morphism: Morphism,
    h_index: HashMap<Vec<TypeId>, usize>,
}

impl KdefAlgebra {
    pub fn algebra(&self) -> &FiniteForestAlgebra {
        self.morphism.algebra()
    }

    pub fn alphabet(&self) -> &Alphabet {
        self.morphism.alphabet()
    }

    pub fn h_of_set(&self, set: &[TypeId]) -> Option<usize> {
        self.h_index.get(set).copied()
    }

    /// A context realizing a vertical element, replayed from its derivation.
    pub fn v_term(&self, v: usize) -> Context {
        let mut steps = Vec::new();
        let mut cur = v;
        while let Some((p, step)) = self.transition.parent[cur] {
            steps.push(step);
            cur = p;
        }
        let mut term = Context::hole();
        for step in steps.into_iter().rev() {
            let g = match step {
                VStep::Letter(i) => Context::letter(self.alphabet().labels()[i].clone()),
                VStep::Plus(h) => Context::plus(self.h_terms[h].clone()),
            };
            term = term.compose(&g);
        }
        term
    }

    pub fn render_h(&self, u: &TypeUniverse, h: usize) -> String {
        u.render_set(&self.h_sets[h])
    }
}

/// Builds `(H_k, V_k)` over `alphabet`. `budget` bounds the number of
/// horizontal and of vertical elements separately. Type counts grow as
/// `|A|·2^(previous count)`, so `k ≥ 3` on several letters overflows.
pub fn build_kdef_algebra(
    u: &mut TypeUniverse,
    alphabet: &Alphabet,
    k: usize,
    budget: usize,
) -> Result<KdefAlgebra, KdefError> {
    let mut h_sets: Vec<Vec<TypeId>> = vec![Vec::new()];
    let mut h_terms: Vec<Forest> = vec![Forest::empty()];
    let mut h_index: HashMap<Vec<TypeId>, usize> = HashMap::new();
    h_index.insert(Vec::new(), 0);
    let mut letter_img: Vec<Vec<usize>> = vec![Vec::new(); alphabet.len()];
    let mut i = 0;
    while i < h_sets.len() {
        let mut fresh: Vec<(Vec<TypeId>, Forest)> = Vec::new();
        for l in alphabet.labels() {
            let t = u.apply_letter(l, &h_sets[i], k);
            fresh.push((vec![t], h_terms[i].adjoin(l.clone())));
        }
        for j in 0..=i {
            fresh.push((union_sorted(&h_sets[i], &h_sets[j]), h_terms[i].add(&h_terms[j])));
        }
        for (set, term) in fresh {
            if !h_index.contains_key(&set) {
                if h_sets.len() >= budget {
                    return Err(KdefError::Budget {
                        what: "H_k",
                        reached: h_sets.len() + 1,
                        budget,
                    });
                }
                h_index.insert(set.clone(), h_sets.len());
                h_sets.push(set);
                h_terms.push(term);
            }
        }
        i += 1;
    }
    let n = h_sets.len();
    for (li, l) in alphabet.labels().iter().enumerate() {
        letter_img[li] = (0..n)
            .map(|h| {
                let t = u.apply_letter(l, &h_sets[h], k);
                h_index[&vec![t]]
            })
            .collect();
    }
    let mut add = vec![0usize; n * n];
    for x in 0..n {
        for y in 0..n {
            add[x * n + y] = h_index[&union_sorted(&h_sets[x], &h_sets[y])];
        }
    }
    let transition = transition_algebra(&add, n, 0, &letter_img, budget).map_err(|e| match e {
        AlgebraError::Budget { required, budget } => KdefError::Budget {
            what: "V_k",
            reached: required,
            budget,
        },
        other => other.into(),
    })?;
    let letters: BTreeMap<Label, usize> = alphabet
        .labels()
        .iter()
        .cloned()
        .zip(transition.letters.iter().copied())
        .collect();
    let morphism = Morphism::new(transition.algebra.clone(), alphabet.clone(), &letters)?;
    Ok(KdefAlgebra {
        k,
        h_sets,
        h_terms,
        transition,
        morphism,
        h_index,
    })
}

/// Pattern on a k-definite type. `_` matches anything, `a` any type with
/// label `a`, `a!` the type `a{}` and `a[P,Q]` a type with label `a` having
/// children matching each of `P`, `Q`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pattern {
    Any,
    Label(Label),
    Leaf(Label),
    Node(Label, Vec<Pattern>),
}

impl Pattern {
    pub fn depth(&self) -> usize {
        match self {
            Pattern::Any => 0,
            Pattern::Label(_) | Pattern::Leaf(_) => 1,
            Pattern::Node(_, ps) => 1 + ps.iter().map(Pattern::depth).max().unwrap_or(0),
        }
    }

    pub fn matches(&self, u: &TypeUniverse, t: TypeId) -> bool {
        match self {
            Pattern::Any => true,
            Pattern::Label(l) => u.label(t) == Some(l),
            Pattern::Leaf(l) => u.label(t) == Some(l) && u.children(t).is_empty(),
            Pattern::Node(l, ps) => {
                u.label(t) == Some(l) && ps.iter().all(|p| u.children(t).iter().any(|&c| p.matches(u, c)))
            }
        }
    }

    fn labels(&self, out: &mut BTreeSet<Label>) {
        match self {
            Pattern::Any => {}
            Pattern::Label(l) | Pattern::Leaf(l) => {
                out.insert(l.clone());
            }
            Pattern::Node(l, ps) => {
                out.insert(l.clone());
                ps.iter().for_each(|p| p.labels(out));
            }
        }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pattern::Any => write!(f, "_"),
            Pattern::Label(l) => write!(f, "{l}"),
            Pattern::Leaf(l) => write!(f, "{l}!"),
            Pattern::Node(l, ps) => {
                write!(f, "{l}[")?;
                for (i, p) in ps.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{p}")?;
                }
                write!(f, "]")
            }
        }
    }
}

/// Acceptance condition of a locally testable recognizer: a boolean formula
/// over `node(P)` (some node's k-type matches `P`) and `root(P)` (some
/// root's (k−1)-type matches `P`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LtSpec {
    True,
    False,
    Node(Pattern),
    Root(Pattern),
    Not(Box<LtSpec>),
    And(Box<LtSpec>, Box<LtSpec>),
    Or(Box<LtSpec>, Box<LtSpec>),
}

impl fmt::Display for LtSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LtSpec::True => write!(f, "true"),
            LtSpec::False => write!(f, "false"),
            LtSpec::Node(p) => write!(f, "node({p})"),
            LtSpec::Root(p) => write!(f, "root({p})"),
            LtSpec::Not(x) => write!(f, "!({x})"),
            LtSpec::And(a, b) => write!(f, "({a} & {b})"),
            LtSpec::Or(a, b) => write!(f, "({a} | {b})"),
        }
    }
}

struct SpecParser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> SpecParser<'a> {
    fn err<T>(&self, msg: &str) -> Result<T, KdefError> {
        Err(KdefError::Spec {
            pos: self.pos,
            msg: msg.to_string(),
        })
    }

    fn skip(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), KdefError> {
        if self.eat(c) {
            Ok(())
        } else {
            self.err(&format!("expected `{}`", c as char))
        }
    }

    fn word(&mut self) -> Option<String> {
        self.skip();
        let start = self.pos;
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_') {
            self.pos += 1;
        }
        (self.pos > start).then(|| String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
    }

    fn or(&mut self) -> Result<LtSpec, KdefError> {
        let mut left = self.and()?;
        while self.eat(b'|') {
            left = LtSpec::Or(Box::new(left), Box::new(self.and()?));
        }
        Ok(left)
    }

    fn and(&mut self) -> Result<LtSpec, KdefError> {
        let mut left = self.not()?;
        while self.eat(b'&') {
            left = LtSpec::And(Box::new(left), Box::new(self.not()?));
        }
        Ok(left)
    }

    fn not(&mut self) -> Result<LtSpec, KdefError> {
        if self.eat(b'!') {
            return Ok(LtSpec::Not(Box::new(self.not()?)));
        }
        if self.eat(b'(') {
            let inner = self.or()?;
            self.expect(b')')?;
            return Ok(inner);
        }
        let at = self.pos;
        match self.word().as_deref() {
            Some("true") => Ok(LtSpec::True),
            Some("false") => Ok(LtSpec::False),
            Some(kw @ ("node" | "root")) => {
                let root = kw == "root";
                self.expect(b'(')?;
                let p = self.pattern()?;
                self.expect(b')')?;
                Ok(if root { LtSpec::Root(p) } else { LtSpec::Node(p) })
            }
            _ => {
                self.pos = at;
                self.err("expected `node(...)`, `root(...)`, `true`, `false`, `!` or `(`")
            }
        }
    }

    fn pattern(&mut self) -> Result<Pattern, KdefError> {
        let at = self.pos;
        let Some(w) = self.word() else {
            return self.err("expected a pattern");
        };
        if w == "_" {
            return Ok(Pattern::Any);
        }
        let label = Label::new(&w).map_err(|_| KdefError::Spec {
            pos: at,
            msg: format!("invalid label `{w}`"),
        })?;
        if self.eat(b'!') {
            return Ok(Pattern::Leaf(label));
        }
        if self.eat(b'[') {
            let mut ps = vec![self.pattern()?];
            while self.eat(b',') {
                ps.push(self.pattern()?);
            }
            self.expect(b']')?;
            return Ok(Pattern::Node(label, ps));
        }
        Ok(Pattern::Label(label))
    }
}

impl LtSpec {
    pub fn parse(text: &str) -> Result<LtSpec, KdefError> {
        let mut p = SpecParser {
            src: text.as_bytes(),
            pos: 0,
        };
        let spec = p.or()?;
        if p.peek().is_some() {
            return p.err("trailing input");
        }
        Ok(spec)
    }

    /// Distinct `node` and `root` patterns, in sorted order.
    pub fn atoms(&self) -> (Vec<Pattern>, Vec<Pattern>) {
        fn walk(s: &LtSpec, nodes: &mut BTreeSet<Pattern>, roots: &mut BTreeSet<Pattern>) {
            match s {
                LtSpec::True | LtSpec::False => {}
                LtSpec::Node(p) => {
                    nodes.insert(p.clone());
                }
                LtSpec::Root(p) => {
                    roots.insert(p.clone());
                }
                LtSpec::Not(x) => walk(x, nodes, roots),
                LtSpec::And(a, b) | LtSpec::Or(a, b) => {
                    walk(a, nodes, roots);
                    walk(b, nodes, roots);
                }
            }
        }
        let (mut n, mut r) = (BTreeSet::new(), BTreeSet::new());
        walk(self, &mut n, &mut r);
        (n.into_iter().collect(), r.into_iter().collect())
    }

    pub fn eval(&self, node: &dyn Fn(&Pattern) -> bool, root: &dyn Fn(&Pattern) -> bool) -> bool {
        match self {
            LtSpec::True => true,
            LtSpec::False => false,
            LtSpec::Node(p) => node(p),
            LtSpec::Root(p) => root(p),
            LtSpec::Not(x) => !x.eval(node, root),
            LtSpec::And(a, b) => a.eval(node, root) && b.eval(node, root),
            LtSpec::Or(a, b) => a.eval(node, root) || b.eval(node, root),
        }
    }

    /// Checks pattern depths against `k` and labels against the alphabet.
    pub fn check(&self, alphabet: &Alphabet, k: usize) -> Result<(), KdefError> {
        if k == 0 {
            return Err(KdefError::KTooSmall(1));
        }
        let (nodes, roots) = self.atoms();
        for (ps, max) in [(&nodes, k), (&roots, k - 1)] {
            for p in ps.iter() {
                if p.depth() > max {
                    return Err(KdefError::PatternDepth {
                        pattern: p.to_string(),
                        max,
                    });
                }
                let mut labels = BTreeSet::new();
                p.labels(&mut labels);
                if let Some(l) = labels.iter().find(|l| !alphabet.contains(l)) {
                    return Err(TermError::NotInAlphabet(l.to_string()).into());
                }
            }
        }
        Ok(())
    }

    /// Decides the spec on the `≡_k` data of a forest.
    pub fn accepts_signature(&self, u: &TypeUniverse, nodes: &BTreeSet<TypeId>, roots: &BTreeSet<TypeId>) -> bool {
        self.eval(
            &|p| nodes.iter().any(|&t| p.matches(u, t)),
            &|p| roots.iter().any(|&t| p.matches(u, t)),
        )
    }
}

/// A recognizer for the union of `≡_k` classes selected by an [`LtSpec`].
/// States are `(satisfied node atoms, root (k−1)-types)`.
#[derive(Debug, Clone)]
pub struct LtRecognizer {
    pub recognizer: Recognizer,
    pub states: Vec<(u64, Vec<TypeId>)>,
    pub node_atoms: Vec<Pattern>,
}

pub fn lt_recognizer(
    u: &mut TypeUniverse,
    alphabet: &Alphabet,
    k: usize,
    spec: &LtSpec,
    budget: usize,
) -> Result<LtRecognizer, KdefError> {
    spec.check(alphabet, k)?;
    let (node_atoms, _) = spec.atoms();
    if node_atoms.len() > 64 {
        return Err(KdefError::Spec {
            pos: 0,
            msg: "at most 64 distinct node patterns".into(),
        });
    }
    type State = (u64, Vec<TypeId>);
    let mut states: Vec<State> = vec![(0, Vec::new())];
    let mut index: HashMap<State, usize> = HashMap::new();
    index.insert(states[0].clone(), 0);
    let step = |u: &mut TypeUniverse, l: &Label, s: &State| -> State {
        let tau = u.node(k, l.clone(), s.1.iter().copied());
        let mut bits = s.0;
        for (i, p) in node_atoms.iter().enumerate() {
            if p.matches(u, tau) {
                bits |= 1 << i;
            }
        }
        (bits, vec![u.truncate_unchecked(tau, k - 1)])
    };
    let mut i = 0;
    while i < states.len() {
        let mut fresh = Vec::new();
        for l in alphabet.labels() {
            fresh.push(step(u, l, &states[i]));
        }
        for j in 0..=i {
            fresh.push((states[i].0 | states[j].0, union_sorted(&states[i].1, &states[j].1)));
        }
        for s in fresh {
            if !index.contains_key(&s) {
                if states.len() >= budget {
                    return Err(KdefError::Budget {
                        what: "states",
                        reached: states.len() + 1,
                        budget,
                    });
                }
                index.insert(s.clone(), states.len());
                states.push(s);
            }
        }
        i += 1;
    }
    let n = states.len();
    let mut add = vec![0; n * n];
    for x in 0..n {
        for y in 0..n {
            add[x * n + y] = index[&(states[x].0 | states[y].0, union_sorted(&states[x].1, &states[y].1))];
        }
    }
    let letter_maps: Vec<Vec<usize>> = alphabet
        .labels()
        .iter()
        .map(|l| (0..n).map(|x| index[&step(u, l, &states[x])]).collect())
        .collect();
    let ta = transition_algebra(&add, n, 0, &letter_maps, budget)?;
    let accept = (0..n)
        .filter(|&x| {
            let (bits, roots) = &states[x];
            spec.eval(
                &|p| {
                    let i = node_atoms.iter().position(|q| q == p).expect("atom listed");
                    bits & (1 << i) != 0
                },
                &|p| roots.iter().any(|&t| p.matches(u, t)),
            )
        })
        .collect();
    let letters: BTreeMap<Label, usize> = alphabet.labels().iter().cloned().zip(ta.letters.iter().copied()).collect();
    let morphism = Morphism::new(ta.algebra, alphabet.clone(), &letters)?;
    Ok(LtRecognizer {
        recognizer: Recognizer::new(morphism, accept)?,
        states,
        node_atoms,
    })
}

/// Looks for two forests with at most `max_nodes` nodes that are `≡_k`
/// equivalent but differ in acceptance. A witness proves the language is
/// not k-locally testable; `None` is only evidence.
pub fn oracle_k_lt(
    u: &mut TypeUniverse,
    r: &Recognizer,
    k: usize,
    max_nodes: usize,
) -> Result<Option<(Forest, Forest)>, KdefError> {
    if k == 0 {
        return Err(KdefError::KTooSmall(1));
    }
    let mut seen: HashMap<(BTreeSet<TypeId>, BTreeSet<TypeId>), (Forest, bool)> = HashMap::new();
    for s in enumerate_forests(r.alphabet(), max_nodes) {
        let sig = u.signature(&s, k)?;
        let acc = r.accepts(&s)?;
        match seen.get(&sig) {
            Some((t, b)) if *b != acc => return Ok(Some((t.clone(), s))),
            Some(_) => {}
            None => {
                seen.insert(sig, (s, acc));
            }
        }
    }
    Ok(None)
}

/// `β_k` evaluated through the algebra, returned as a type set.
pub fn beta_via_algebra(kd: &KdefAlgebra, s: &Forest) -> Result<Vec<TypeId>, KdefError> {
    let h = kd.morphism.eval_forest(s)?;
    Ok(kd.h_sets[h].clone())
}

/// Sanity relation between the two `β_k` paths; used by tests and the CLI.
pub fn beta_agrees(u: &mut TypeUniverse, kd: &KdefAlgebra, s: &Forest) -> Result<bool, KdefError> {
    let direct: Vec<TypeId> = u.root_types(s, kd.k).into_iter().collect();
    Ok(direct == beta_via_algebra(kd, s)?)
}

impl KdefAlgebra {
    /// The vertical element `1 + h` for the horizontal element `h`.
    pub fn plus(&self, h: usize) -> usize {
        let alg = self.algebra();
        alg.ins(&alg.one(), &h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{validate_algebra, FiniteForestAlgebra};
    use crate::terms::parse_forest_any;

    fn f(s: &str) -> Forest {
        parse_forest_any(s).unwrap()
    }

    fn rendered(u: &TypeUniverse, set: &BTreeSet<TypeId>) -> String {
        u.render_set(set)
    }

    #[test]
    fn type_examples() {
        let mut u = TypeUniverse::new();
        assert!(u.root_types(&Forest::empty(), 2).is_empty());
        let r = u.root_types(&f("a+a(b)"), 1);
        assert_eq!(rendered(&u, &r), "{a{*},a{}}");
        let n = u.node_types(&f("a(b)"), 1);
        assert_eq!(rendered(&u, &n), "{a{*},b{}}");
        let t = *u.root_types(&f("a(b)"), 2).iter().next().unwrap();
        let one = u.truncate(t, 1).unwrap();
        assert_eq!(u.render(one), "a{*}");
        let zero = u.truncate(t, 0).unwrap();
        assert_eq!(u.render(zero), "*");
        assert_eq!(u.truncate(t, 2).unwrap(), t);
        assert!(matches!(u.truncate(one, 2), Err(KdefError::Truncate { depth: 1, j: 2 })));
    }

    #[test]
    fn equivalence_examples() {
        let mut u = TypeUniverse::new();
        assert!(u.equiv_k(&f("a+a"), &f("a"), 1).unwrap());
        assert!(!u.equiv_k(&f("a(b)"), &f("b(a)"), 2).unwrap());
        assert!(u.sim_k(&f("a(b)+c"), &f("c+a(b)"), 3));
        assert!(u.equiv_k(&f("a"), &f("a"), 0).is_err());
    }

    #[test]
    fn kdef_sizes() {
        let mut u = TypeUniverse::new();
        let a = Alphabet::new(["a"]).unwrap();
        let ab = Alphabet::new(["a", "b"]).unwrap();
        let k0 = build_kdef_algebra(&mut u, &a, 0, 1000).unwrap();
        assert_eq!(k0.h_sets.len(), 2);
        let k1 = build_kdef_algebra(&mut u, &a, 1, 1000).unwrap();
        assert_eq!(k1.h_sets.len(), 4);
        let k1ab = build_kdef_algebra(&mut u, &ab, 1, 10_000).unwrap();
        assert_eq!(k1ab.h_sets.len(), 16);
        validate_algebra(&k1.algebra().to_raw()).unwrap();
        assert!(k1ab.algebra().is_h_idempotent());
        assert!(matches!(
            build_kdef_algebra(&mut u, &ab, 1, 10),
            Err(KdefError::Budget { what: "H_k", .. })
        ));
    }

    #[test]
    fn beta_paths_agree_and_terms_replay() {
        let mut u = TypeUniverse::new();
        let ab = Alphabet::new(["a", "b"]).unwrap();
        let kd = build_kdef_algebra(&mut u, &ab, 1, 10_000).unwrap();
        for s in enumerate_forests(&ab, 4) {
            assert!(beta_agrees(&mut u, &kd, &s).unwrap(), "{s}");
        }
        for (h, t) in kd.h_terms.iter().enumerate() {
            assert_eq!(kd.morphism.eval_forest(t).unwrap(), h);
        }
        for v in 0..kd.algebra().v_size().min(50) {
            assert_eq!(kd.morphism.eval_context(&kd.v_term(v)).unwrap(), v);
        }
    }

    #[test]
    fn spec_parsing() {
        let s = LtSpec::parse("node(a[b]) & !root(_) | false").unwrap();
        assert_eq!(s.to_string(), "((node(a[b]) & !(root(_))) | false)");
        assert_eq!(LtSpec::parse("node(a!)").unwrap(), LtSpec::Node(Pattern::Leaf(Label::new("a").unwrap())));
        assert!(LtSpec::parse("node(a").is_err());
        assert!(LtSpec::parse("nod(a)").is_err());
        let ab = Alphabet::new(["a", "b"]).unwrap();
        assert!(matches!(
            LtSpec::parse("node(a[b[a]])").unwrap().check(&ab, 2),
            Err(KdefError::PatternDepth { .. })
        ));
        assert!(LtSpec::parse("root(a[b])").unwrap().check(&ab, 2).is_err());
        assert!(LtSpec::parse("node(c)").unwrap().check(&ab, 1).is_err());
    }

    #[test]
    fn lt_recognizer_examples() {
        let mut u = TypeUniverse::new();
        let ab = Alphabet::new(["a", "b"]).unwrap();
        let contains = lt_recognizer(&mut u, &ab, 1, &LtSpec::parse("node(a)").unwrap(), 10_000).unwrap();
        let child = lt_recognizer(&mut u, &ab, 2, &LtSpec::parse("node(a[b])").unwrap(), 10_000).unwrap();
        let none = lt_recognizer(&mut u, &ab, 1, &LtSpec::False, 10_000).unwrap();
        for s in enumerate_forests(&ab, 5) {
            let text = s.to_string();
            let has_a = s.labels().iter().any(|l| l.as_str() == "a");
            assert_eq!(contains.recognizer.accepts(&s).unwrap(), has_a, "{text}");
            assert_eq!(child.recognizer.accepts(&s).unwrap(), has_b_child(&s), "{text}");
            assert!(!none.recognizer.accepts(&s).unwrap());
        }
    }

    fn has_b_child(s: &Forest) -> bool {
        s.trees().iter().any(|t| {
            (t.label().as_str() == "a" && t.children().trees().iter().any(|c| c.label().as_str() == "b"))
                || has_b_child(t.children())
        })
    }

    #[test]
    fn oracle_examples() {
        let mut u = TypeUniverse::new();
        let a = Alphabet::new(["a"]).unwrap();
        let (xor, _) = FiniteForestAlgebra::flat(&[vec![0, 1], vec![1, 0]], 0).unwrap();
        let letters = [(Label::new("a").unwrap(), 1)].into_iter().collect();
        let parity = Recognizer::new(Morphism::new(xor, a.clone(), &letters).unwrap(), [0].into()).unwrap();
        let (s, t) = oracle_k_lt(&mut u, &parity, 1, 4).unwrap().expect("witness");
        assert!(u.equiv_k(&s, &t, 1).unwrap());
        assert_ne!(parity.accepts(&s).unwrap(), parity.accepts(&t).unwrap());
        let ab = Alphabet::new(["a", "b"]).unwrap();
        let contains = lt_recognizer(&mut u, &ab, 1, &LtSpec::parse("node(a)").unwrap(), 1000).unwrap();
        assert!(oracle_k_lt(&mut u, &contains.recognizer, 1, 5).unwrap().is_none());
    }
}
